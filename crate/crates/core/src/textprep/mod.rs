//! Text preprocessing: lowercase, tokenize, stop-word and number removal,
//! Porter stemming.
//!
//! Pipeline order is fixed: lowercase -> tokenize on non-alphanumeric
//! boundaries -> drop tokens shorter than 2 chars -> drop stop words -> drop
//! pure-number tokens -> stem. Stemming runs to a fixpoint and stop words are
//! filtered again afterwards, so preprocessing its own output is the
//! identity.

pub mod porter;

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

pub use porter::stem;

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("cannot read stop-word file {path}: {source}")]
    Stopwords { path: String, source: std::io::Error },
}

/// Normalized token stream for one report. `tokens` are the stemmed forms fed
/// to topic modeling; `raw` keeps the pre-stem surface forms (same length,
/// same order) for lexicon fallback lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub report_id: String,
    pub tokens: Vec<String>,
    pub raw: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PrepConfig {
    pub stopwords: BTreeSet<String>,
    /// Optional hook for a spelling corrector applied per raw token before
    /// stemming. Default: none (identity).
    pub spelling: Option<fn(&str) -> String>,
}

impl PrepConfig {
    pub fn with_builtin_stopwords() -> Self {
        Self { stopwords: builtin_stopwords(), spelling: None }
    }
}

const BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// The 127-word English list shipped with the crate.
pub fn builtin_stopwords() -> BTreeSet<String> {
    parse_stopwords(BUILTIN_STOPWORDS)
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// Stop-word file: one word per line, UTF-8, '#' comments.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>, PrepError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PrepError::Stopwords { path: path.display().to_string(), source })?;
    Ok(parse_stopwords(&text))
}

fn stem_fixpoint(token: &str) -> String {
    let mut current = token.to_string();
    for _ in 0..4 {
        let next = stem(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

pub fn preprocess(report_id: &str, text: &str, config: &PrepConfig) -> TokenStream {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut raw = Vec::new();
    for piece in lowered.split(|c: char| !c.is_alphanumeric()) {
        if piece.chars().count() < 2 {
            continue;
        }
        if config.stopwords.contains(piece) {
            continue;
        }
        if piece.chars().all(|c| c.is_numeric()) {
            continue;
        }
        let surface = match config.spelling {
            Some(correct) => correct(piece),
            None => piece.to_string(),
        };
        let stemmed = stem_fixpoint(&surface);
        // Stemming can turn a kept token back into a dropped category
        // ("00s" -> "00"), so the early filters run again on the stem.
        if stemmed.chars().count() < 2
            || config.stopwords.contains(&stemmed)
            || stemmed.chars().all(|c| c.is_numeric())
        {
            continue;
        }
        tokens.push(stemmed);
        raw.push(surface);
    }
    TokenStream { report_id: report_id.to_string(), tokens, raw }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn editor_crash_startup() {
        let config = PrepConfig::with_builtin_stopwords();
        let stream = preprocess("r", "The editor crashed on startup", &config);
        assert_eq!(stream.tokens, vec!["editor", "crash", "startup"]);
    }

    #[test]
    fn empty_text() {
        let config = PrepConfig::with_builtin_stopwords();
        let stream = preprocess("r", "", &config);
        assert!(stream.tokens.is_empty());
    }

    #[test]
    fn advancement_stems() {
        let config = PrepConfig::with_builtin_stopwords();
        let stream = preprocess("r", "advancement", &config);
        assert_eq!(stream.tokens, vec!["advanc"]);
    }

    #[test]
    fn numbers_and_short_tokens_dropped() {
        let config = PrepConfig::with_builtin_stopwords();
        let stream = preprocess("r", "error 404 at x line 12 crash42", &config);
        assert_eq!(stream.tokens, vec!["error", "line", "crash42"]);
    }

    #[test]
    fn builtin_contains_expected_words() {
        let set = builtin_stopwords();
        assert_eq!(set.len(), 127);
        for w in ["the", "i", "on"] {
            assert!(set.contains(w), "missing {w}");
        }
    }

    #[test]
    fn custom_stopword_file() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nfoo").unwrap();
        f.flush().unwrap();
        let set = load_stopwords(f.path()).unwrap();
        assert_eq!(set.len(), 1);
        let config = PrepConfig { stopwords: set, spelling: None };
        let stream = preprocess("r", "foo bar", &config);
        assert_eq!(stream.tokens, vec!["bar"]);
    }

    #[test]
    fn empty_stopword_file_removes_nothing() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# only comments").unwrap();
        f.flush().unwrap();
        let set = load_stopwords(f.path()).unwrap();
        assert!(set.is_empty());
        let config = PrepConfig { stopwords: set, spelling: None };
        let stream = preprocess("r", "the editor", &config);
        assert_eq!(stream.tokens, vec!["the", "editor"]);
    }

    proptest! {
        #[test]
        fn idempotent(text in "[a-zA-Z0-9 .,!?'\\-]{0,200}") {
            let config = PrepConfig::with_builtin_stopwords();
            let first = preprocess("r", &text, &config);
            let rejoined = first.tokens.join(" ");
            let second = preprocess("r", &rejoined, &config);
            prop_assert_eq!(first.tokens, second.tokens);
        }

        #[test]
        fn no_stopwords_in_output(text in "[a-z ]{0,200}") {
            let config = PrepConfig::with_builtin_stopwords();
            let stream = preprocess("r", &text, &config);
            for token in &stream.tokens {
                prop_assert!(!config.stopwords.contains(token), "{} is a stop word", token);
            }
        }

        #[test]
        fn deterministic(text in "\\PC{0,120}") {
            let config = PrepConfig::with_builtin_stopwords();
            let a = preprocess("r", &text, &config);
            let b = preprocess("r", &text, &config);
            prop_assert_eq!(a, b);
        }
    }
}
