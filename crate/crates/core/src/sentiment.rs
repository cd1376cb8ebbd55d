//! SentiWordNet lexicon parsing and per-report sentiment scoring.
//!
//! Scores are token-wise sums: pos_score and neg_score accumulate the lexicon
//! values of every matched token. Emotion = pos - neg, Emotionality = pos + neg.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{self, TokenStream};

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("cannot read lexicon {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("lexicon {0} yielded zero entries")]
    ZeroEntries(String),
}

#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    pos_sum: f64,
    neg_sum: f64,
    senses: u32,
}

impl Accum {
    fn mean(self) -> (f64, f64) {
        (self.pos_sum / self.senses as f64, self.neg_sum / self.senses as f64)
    }
}

/// Word -> (pos, neg) table aggregated over all senses and parts of speech.
/// A parallel stem-keyed index serves stem-first lookups.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    entries: HashMap<String, (f64, f64)>,
    by_stem: HashMap<String, (f64, f64)>,
    pub entry_count: usize,
    pub malformed_lines: usize,
}

impl SentimentLexicon {
    /// Loads a SentiWordNet 3.0 text file: tab-separated POS, ID, PosScore,
    /// NegScore, SynsetTerms, Gloss; '#' comment lines; SynsetTerms holds
    /// space-separated "word#sense" items. Multi-word terms (containing '_')
    /// are skipped. Per-word scores are unweighted means over all senses.
    pub fn load(path: &Path) -> Result<SentimentLexicon, SentimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SentimentError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<SentimentLexicon, SentimentError> {
        let mut accum: HashMap<String, Accum> = HashMap::new();
        let mut malformed = 0;
        for line in text.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 5 {
                malformed += 1;
                continue;
            }
            let (pos, neg) = match (fields[2].trim().parse::<f64>(), fields[3].trim().parse::<f64>())
            {
                (Ok(p), Ok(n)) if (0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&n) => (p, n),
                _ => {
                    malformed += 1;
                    continue;
                }
            };
            for term in fields[4].split_whitespace() {
                let word = term.split('#').next().unwrap_or("");
                if word.is_empty() || word.contains('_') {
                    continue;
                }
                let entry = accum.entry(word.to_lowercase()).or_default();
                entry.pos_sum += pos;
                entry.neg_sum += neg;
                entry.senses += 1;
            }
        }
        if accum.is_empty() {
            return Err(SentimentError::ZeroEntries(origin.to_string()));
        }
        let entries: HashMap<String, (f64, f64)> =
            accum.into_iter().map(|(w, a)| (w, a.mean())).collect();
        // Stem index: mean over every word form sharing the stem.
        let mut stem_accum: HashMap<String, Accum> = HashMap::new();
        for (word, &(p, n)) in &entries {
            let entry = stem_accum.entry(textprep::stem(word)).or_default();
            entry.pos_sum += p;
            entry.neg_sum += n;
            entry.senses += 1;
        }
        let by_stem = stem_accum.into_iter().map(|(w, a)| (w, a.mean())).collect();
        let entry_count = entries.len();
        Ok(SentimentLexicon { entries, by_stem, entry_count, malformed_lines: malformed })
    }

    /// Stem-first lookup with raw-word fallback. Case-insensitive: callers
    /// pass lowercase tokens (textprep output already is).
    pub fn lookup(&self, stemmed: &str, raw: &str) -> Option<(f64, f64)> {
        self.by_stem.get(stemmed).or_else(|| self.entries.get(raw)).copied()
    }

    pub fn word(&self, w: &str) -> Option<(f64, f64)> {
        self.entries.get(&w.to_lowercase()).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmotionClass {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SentimentScore {
    pub pos_score: f64,
    pub neg_score: f64,
    pub emotion_value: f64,
    pub emotion_class: EmotionClass,
    pub emotionality: f64,
    pub matched_tokens: usize,
}

pub fn score_document(stream: &TokenStream, lexicon: &SentimentLexicon) -> SentimentScore {
    let mut pos_score = 0.0;
    let mut neg_score = 0.0;
    let mut matched = 0;
    for (stemmed, raw) in stream.tokens.iter().zip(&stream.raw) {
        if let Some((p, n)) = lexicon.lookup(stemmed, raw) {
            pos_score += p;
            neg_score += n;
            matched += 1;
        }
    }
    let emotion_value = pos_score - neg_score;
    SentimentScore {
        pos_score,
        neg_score,
        emotion_value,
        emotion_class: if emotion_value >= 0.0 { EmotionClass::Positive } else { EmotionClass::Negative },
        emotionality: pos_score + neg_score,
        matched_tokens: matched,
    }
}
