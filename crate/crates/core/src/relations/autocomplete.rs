//! Relation phrases mined from search-box query completions.

use std::thread;
use std::time::Duration;

use regex::Regex;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::Value;
use tracing::warn;

use crate::error::{Error, Result};
use crate::model::{normalize_phrase, normalize_text, Entity, RelationPhrase};

/// Question stems that tend to complete into a statement about the entity.
pub const QUESTIONS: [&str; 10] = [
    "why do",
    "why is",
    "why does",
    "why does it",
    "why did",
    "how do",
    "how is",
    "how does",
    "how does it",
    "how did",
];

pub const ARTICLES: [&str; 3] = ["a", "an", "the"];

#[derive(Debug, Clone, PartialEq)]
pub enum SuggestError {
    Throttled,
    Unavailable(String),
    Malformed(String),
}

/// Anything that turns a query prefix into a list of completions.
pub trait SuggestClient: Send + Sync {
    fn suggest(&self, query: &str) -> std::result::Result<Vec<String>, SuggestError>;
}

#[derive(Debug, Clone, Copy)]
pub struct Backoff {
    pub retries: u32,
    pub initial: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            retries: 3,
            initial: Duration::from_millis(500),
        }
    }
}

/// HTTP completion endpoint queried with `GET endpoint?param=query`.
///
/// The body may be a JSON array of strings or the OpenSearch shape
/// `[query, [completions...], ...]`.
pub struct HttpSuggestClient {
    endpoint: String,
    param: String,
    client: Client,
}

impl HttpSuggestClient {
    pub fn new(endpoint: &str, param: &str) -> Result<Self> {
        let client = Client::builder()
            .timeout(Duration::from_secs(20))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(HttpSuggestClient {
            endpoint: endpoint.to_string(),
            param: param.to_string(),
            client,
        })
    }
}

/// Extracts completion strings from either supported body shape.
pub fn parse_completions(body: &Value) -> std::result::Result<Vec<String>, SuggestError> {
    let arr = body
        .as_array()
        .ok_or_else(|| SuggestError::Malformed("expected a JSON array".into()))?;
    let list = match arr.get(1) {
        Some(Value::Array(inner)) if arr[0].is_string() => inner,
        _ => arr,
    };
    list.iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| SuggestError::Malformed(format!("non-string completion {v}")))
        })
        .collect()
}

impl SuggestClient for HttpSuggestClient {
    fn suggest(&self, query: &str) -> std::result::Result<Vec<String>, SuggestError> {
        let resp = self
            .client
            .get(&self.endpoint)
            .query(&[(self.param.as_str(), query)])
            .send()
            .map_err(|e| SuggestError::Unavailable(e.to_string()))?;
        match resp.status() {
            StatusCode::OK => {}
            StatusCode::TOO_MANY_REQUESTS => return Err(SuggestError::Throttled),
            s => return Err(SuggestError::Unavailable(format!("status {s}"))),
        }
        let body: Value = resp
            .json()
            .map_err(|e| SuggestError::Malformed(e.to_string()))?;
        parse_completions(&body)
    }
}

fn query_with_backoff(
    client: &dyn SuggestClient,
    query: &str,
    backoff: Backoff,
    source: &str,
) -> Result<Vec<String>> {
    let mut delay = backoff.initial;
    let mut attempt = 0;
    loop {
        match client.suggest(query) {
            Ok(list) => return Ok(list),
            Err(SuggestError::Throttled) if attempt < backoff.retries => {
                thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            Err(SuggestError::Throttled) => {
                warn!("{source}: still throttled, skipping query {query:?}");
                return Ok(Vec::new());
            }
            Err(SuggestError::Malformed(m)) => {
                warn!("{source}: discarding malformed answer for {query:?}: {m}");
                return Ok(Vec::new());
            }
            Err(SuggestError::Unavailable(m)) => {
                return Err(Error::SourceUnavailable {
                    source_id: source.to_string(),
                    message: m,
                })
            }
        }
    }
}

/// Every query prefix issued for `head`: each question, with and without
/// each article, for each surface form.
pub fn queries(head: &Entity) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    for q in QUESTIONS {
        for form in &head.surface_forms {
            out.push((q, format!("{q} {form}")));
            for a in ARTICLES {
                out.push((q, format!("{q} {a} {form}")));
            }
        }
    }
    out
}

fn pair_pattern(question: &str, head: &str, tail: &str) -> Regex {
    let pattern = format!(
        r"^{} (?:(?:a|an|the) )?{} (.+?) {}(?:$|[\s?.!,])",
        regex::escape(question),
        regex::escape(head),
        regex::escape(tail)
    );
    Regex::new(&pattern).expect("escaped pattern compiles")
}

/// The first relation phrase a completion yields for `(head, tail)`.
pub fn match_completion(
    completion: &str,
    question: &str,
    head: &Entity,
    tail: &Entity,
) -> Option<String> {
    let text = normalize_text(completion);
    for h in &head.surface_forms {
        for t in &tail.surface_forms {
            if let Some(c) = pair_pattern(question, h, t).captures(&text) {
                let phrase = normalize_phrase(&c[1]);
                if !phrase.is_empty() {
                    return Some(phrase);
                }
            }
        }
    }
    None
}

/// Relation phrases for `(head, tail)` in order of first appearance.
pub fn autocomplete_harvest(
    head: &Entity,
    tail: &Entity,
    client: &dyn SuggestClient,
    backoff: Backoff,
    source: &str,
) -> Result<Vec<RelationPhrase>> {
    let mut out: Vec<RelationPhrase> = Vec::new();
    for (question, query) in queries(head) {
        for completion in query_with_backoff(client, &query, backoff, source)? {
            if let Some(phrase) = match_completion(&completion, question, head, tail) {
                if !out.iter().any(|p| p.text == phrase) {
                    out.extend(RelationPhrase::new(&phrase, source));
                }
            }
        }
    }
    Ok(out)
}

/// Entities `e` completing `(anchor, relation, e)`, at most four words each.
///
/// Only the forward direction can be phrased as a completion prefix, so
/// backward queries are not supported by this source.
pub fn autocomplete_entities(
    anchor: &Entity,
    relation: &str,
    client: &dyn SuggestClient,
    backoff: Backoff,
    source: &str,
) -> Result<Vec<String>> {
    let relation = normalize_phrase(relation);
    let mut out: Vec<String> = Vec::new();
    for q in QUESTIONS {
        for form in &anchor.surface_forms {
            let re = Regex::new(&format!(
                r"^{} (?:(?:a|an|the) )?{} {} (?:(?:a|an|the) )?(.+?)[\s?.!,]*$",
                regex::escape(q),
                regex::escape(form),
                regex::escape(&relation)
            ))
            .expect("escaped pattern compiles");
            let query = format!("{q} {form} {relation}");
            for completion in query_with_backoff(client, &query, backoff, source)? {
                let text = normalize_text(&completion);
                if let Some(c) = re.captures(&text) {
                    let entity = normalize_phrase(&c[1]);
                    if !entity.is_empty()
                        && entity.split(' ').count() <= 4
                        && !out.contains(&entity)
                    {
                        out.push(entity);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Canned(HashMap<String, Vec<String>>);

    impl SuggestClient for Canned {
        fn suggest(&self, q: &str) -> std::result::Result<Vec<String>, SuggestError> {
            Ok(self.0.get(q).cloned().unwrap_or_default())
        }
    }

    fn e(name: &str) -> Entity {
        Entity::base(name).unwrap()
    }

    #[test]
    fn extracts_phrase_between_entities() {
        let mut m = HashMap::new();
        m.insert(
            "why does the earth".to_string(),
            vec![
                "why does the earth orbit the sun".to_string(),
                "why does the earth rotate".to_string(),
                "why does earth revolve around the sun?".to_string(),
            ],
        );
        m.insert(
            "why does earth".to_string(),
            vec!["why does earth orbit the sun".to_string()],
        );
        let got: Vec<String> =
            autocomplete_harvest(&e("earth"), &e("sun"), &Canned(m), Backoff::default(), "ac")
                .unwrap()
                .into_iter()
                .map(|p| p.text)
                .collect();
        assert_eq!(got, vec!["orbit the", "revolve around the"]);
    }

    #[test]
    fn takes_first_match_only() {
        let c = "why does earth orbit sun and then circle sun";
        assert_eq!(
            match_completion(c, "why does", &e("earth"), &e("sun")).as_deref(),
            Some("orbit")
        );
        assert_eq!(match_completion("why does earth", "why does", &e("earth"), &e("sun")), None);
        assert_eq!(
            match_completion("why does earth orbit sunflowers", "why does", &e("earth"), &e("sun")),
            None
        );
    }

    #[test]
    fn six_completions_two_matches() {
        let mut m = HashMap::new();
        m.insert(
            "how do electrons".to_string(),
            vec![
                "how do electrons move".to_string(),
                "how do electrons circle the nucleus".to_string(),
                "how do electrons work".to_string(),
                "how do electrons flow in a circuit".to_string(),
                "how do electrons stay near nucleus".to_string(),
                "how do electrons get energy".to_string(),
            ],
        );
        let got: Vec<String> =
            autocomplete_harvest(&e("electrons"), &e("nucleus"), &Canned(m), Backoff::default(), "ac")
                .unwrap()
                .into_iter()
                .map(|p| p.text)
                .collect();
        assert_eq!(got, vec!["circle the", "stay near"]);
    }

    #[test]
    fn query_set_covers_questions_and_articles() {
        let q = queries(&e("sun"));
        assert_eq!(q.len(), QUESTIONS.len() * 4 * e("sun").surface_forms.len());
        assert!(q.iter().any(|(_, s)| s == "how does the sun"));
    }

    struct Flaky(AtomicUsize);

    impl SuggestClient for Flaky {
        fn suggest(&self, _: &str) -> std::result::Result<Vec<String>, SuggestError> {
            if self.0.fetch_add(1, Ordering::SeqCst) % 3 == 2 {
                Ok(vec!["why do keys open locks".into()])
            } else {
                Err(SuggestError::Throttled)
            }
        }
    }

    #[test]
    fn retries_on_throttle() {
        let backoff = Backoff {
            retries: 2,
            initial: Duration::from_millis(1),
        };
        let c = Flaky(AtomicUsize::new(0));
        let got = query_with_backoff(&c, "why do keys", backoff, "ac").unwrap();
        assert_eq!(got.len(), 1);
        let none = Backoff {
            retries: 0,
            initial: Duration::from_millis(1),
        };
        assert!(query_with_backoff(&c, "q", none, "ac").unwrap().is_empty());
    }

    #[test]
    fn parses_both_body_shapes() {
        let flat: Value = serde_json::json!(["a b", "c"]);
        assert_eq!(parse_completions(&flat).unwrap(), vec!["a b", "c"]);
        let nested: Value = serde_json::json!(["q", ["q x", "q y"], [], {}]);
        assert_eq!(parse_completions(&nested).unwrap(), vec!["q x", "q y"]);
        assert!(parse_completions(&serde_json::json!({"a": 1})).is_err());
    }

    #[test]
    fn entity_completions() {
        let mut m = HashMap::new();
        m.insert(
            "how does key opens".to_string(),
            vec!["how does key opens a lock".to_string(), "how does key opens".to_string()],
        );
        let got = autocomplete_entities(&e("key"), "opens", &Canned(m), Backoff::default(), "ac")
            .unwrap();
        assert_eq!(got, vec!["lock"]);
    }
}
