//! Relations read off few-shot answers of a text-completion model.

use std::path::Path;
use std::time::Duration;

use reqwest::blocking::Client;
use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{normalize_phrase, normalize_text, Entity, RelationPhrase};

pub const DEFAULT_PROMPT: &str = "\
Q: What are the relations between a blizzard and snowflake?
A: A blizzard produces snowflakes.
A: A blizzard contains a lot of snowflakes.

Q: What are the relations between an umbrella and rain?
A: An umbrella protects from rain.
A: An umbrella provides adequate protection from rain.

Q: What are the relations between a movie and screen?
A: A movie displayed on a screen.
A: A movie can be shown on a screen.

Q: What are the relations between Newton and gravity?
A: Newton discovered gravity.
A: Newton invented gravity.

Q: What are the relations between an electron and nucleus?
A: An electron revolves around the nucleus.
A: An electron is much smaller than the nucleus.
A: An electron attracts the nucleus.

Q: What are the relations between water and a pipe?
A: Water flows through the pipe.
A: Water passes through the pipe.

Q: What are the relations between {head} and {tail}?
";

pub const DEFAULT_MAX_LINES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            text: DEFAULT_PROMPT.to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn new(text: &str) -> Result<Self> {
        if !text.contains("{head}") || !text.contains("{tail}") {
            return Err(Error::Config(
                "prompt template needs {head} and {tail} placeholders".into(),
            ));
        }
        Ok(PromptTemplate {
            text: text.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(&text)
    }

    pub fn render(&self, head: &str, tail: &str) -> String {
        self.text.replace("{head}", head).replace("{tail}", tail)
    }
}

/// Anything that completes a prompt into text.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str) -> std::result::Result<String, String>;
}

/// OpenAI-style completions endpoint: POST `{"model", "prompt", ...}`,
/// answer `{"choices": [{"text": ...}]}`.
pub struct HttpCompletionClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: Client,
}

impl HttpCompletionClient {
    pub fn new(endpoint: &str, model: &str, api_key: Option<String>) -> Result<Self> {
        let client = Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(HttpCompletionClient {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            client,
        })
    }
}

#[derive(Deserialize)]
struct Choice {
    text: String,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str) -> std::result::Result<String, String> {
        let mut req = self.client.post(&self.endpoint).json(&json!({
            "model": self.model,
            "prompt": prompt,
            "max_tokens": 128,
            "temperature": 0,
            "stop": ["\nQ:"],
        }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("status {}", resp.status()));
        }
        let body: CompletionResponse = resp.json().map_err(|e| e.to_string())?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.text)
            .ok_or_else(|| "no choices in answer".to_string())
    }
}

/// Phrases found for each direction of an unordered pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairAnswers {
    pub forward: Vec<RelationPhrase>,
    pub backward: Vec<RelationPhrase>,
}

fn strip_article(s: &str) -> &str {
    for a in ["a ", "an ", "the "] {
        if let Some(rest) = s.strip_prefix(a) {
            return rest;
        }
    }
    s
}

/// Middle text of `sentence` when it starts with a form of `first` and
/// ends with a form of `last`.
fn middle(sentence: &str, first: &Entity, last: &Entity) -> Option<String> {
    for f in &first.surface_forms {
        let Some(rest) = sentence.strip_prefix(f.as_str()) else {
            continue;
        };
        let Some(rest) = rest.strip_prefix(' ') else {
            continue;
        };
        for l in &last.surface_forms {
            if let Some(mid) = rest.strip_suffix(l.as_str()) {
                if let Some(mid) = mid.strip_suffix(' ') {
                    let phrase = normalize_phrase(mid);
                    if !phrase.is_empty() {
                        return Some(phrase);
                    }
                }
            }
        }
    }
    None
}

/// Parses `A:` lines, reading at most `max_lines` of them and stopping at
/// the next `Q:`.
pub fn parse_answers(
    text: &str,
    head: &Entity,
    tail: &Entity,
    max_lines: usize,
    source: &str,
) -> PairAnswers {
    let mut out = PairAnswers::default();
    let mut seen = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with("Q:") {
            break;
        }
        let Some(answer) = line.strip_prefix("A:") else {
            continue;
        };
        if seen == max_lines {
            break;
        }
        seen += 1;
        let sentence = normalize_text(answer.trim().trim_end_matches(['.', '!']));
        let sentence = strip_article(&sentence);
        if let Some(p) = middle(sentence, head, tail) {
            if !out.forward.iter().any(|r| r.text == p) {
                out.forward.extend(RelationPhrase::new(&p, source));
            }
        } else if let Some(p) = middle(sentence, tail, head) {
            if !out.backward.iter().any(|r| r.text == p) {
                out.backward.extend(RelationPhrase::new(&p, source));
            }
        }
    }
    out
}

/// Queries the model once for the unordered pair and splits the answers by
/// direction.
pub fn generative_relations(
    head: &Entity,
    tail: &Entity,
    client: &dyn CompletionClient,
    template: &PromptTemplate,
    max_lines: usize,
    source: &str,
) -> Result<PairAnswers> {
    let prompt = template.render(&head.name, &tail.name);
    let text = client
        .complete(&prompt)
        .map_err(|message| Error::SourceUnavailable {
            source_id: source.to_string(),
            message,
        })?;
    Ok(parse_answers(&text, head, tail, max_lines, source))
}
