use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::normalize_text;

const DEFAULT_LIST: &str = include_str!("../../data/stoplist.txt");

/// Frequent corpus n-grams whose relation similarity is forced to zero.
#[derive(Debug, Clone, Default)]
pub struct Stoplist {
    ngrams: HashSet<String>,
}

impl Stoplist {
    /// The bundled 500-entry list.
    pub fn default_list() -> Self {
        Self::parse(DEFAULT_LIST, usize::MAX)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Keeps the first `limit` entries of the bundled list.
    pub fn default_with_limit(limit: usize) -> Self {
        Self::parse(DEFAULT_LIST, limit)
    }

    /// Loads one n-gram per line; blank lines and `#` comments are skipped.
    /// At most `limit` entries are kept, in file order.
    pub fn load(path: &Path, limit: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text, limit))
    }

    pub fn parse(text: &str, limit: usize) -> Self {
        let ngrams = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(normalize_text)
            .take(limit)
            .collect();
        Stoplist { ngrams }
    }

    pub fn from_entries<I: IntoIterator<Item = S>, S: AsRef<str>>(entries: I) -> Self {
        Stoplist {
            ngrams: entries
                .into_iter()
                .map(|e| normalize_text(e.as_ref()))
                .collect(),
        }
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.ngrams.contains(phrase)
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_has_500_normalized_entries() {
        let s = Stoplist::default_list();
        assert_eq!(s.len(), 500);
        for line in DEFAULT_LIST.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            assert_eq!(line, normalize_text(line), "{line:?}");
            let n = line.split(' ').count();
            assert!((1..=4).contains(&n), "{line:?}");
        }
    }

    #[test]
    fn limit_takes_prefix() {
        let s = Stoplist::parse("the\nof the\n# comment\n\nis\n", 2);
        assert!(s.contains("the") && s.contains("of the"));
        assert!(!s.contains("is"));
    }

    #[test]
    fn relation_words_are_not_stoplisted() {
        let s = Stoplist::default_list();
        for p in ["orbit", "revolve around", "discovered", "attracted to", "opens"] {
            assert!(!s.contains(p), "{p}");
        }
    }
}
