//! Shared fixtures for the integration suites: a deterministic synthetic
//! issue-tracker export in the Bugzilla CSV layout plus a small lexicon file
//! in the SentiWordNet 3.0 format.
//!
//! Set BUGDESTINY_ECLIPSE_CSV and BUGDESTINY_SWN to run the suites against a
//! real export and lexicon instead of the generated surrogate.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use bugdestiny::corpus::ColumnMapping;
use bugdestiny::pipeline::RunConfig;

pub const NEG_WORDS: [(&str, f64); 10] = [
    ("crash", 0.875),
    ("fail", 0.75),
    ("broken", 0.75),
    ("wrong", 0.625),
    ("freeze", 0.625),
    ("corrupt", 0.75),
    ("annoying", 0.5),
    ("hang", 0.5),
    ("terrible", 0.875),
    ("unusable", 0.625),
];

pub const POS_WORDS: [(&str, f64); 10] = [
    ("good", 0.625),
    ("great", 0.75),
    ("excellent", 0.875),
    ("helpful", 0.625),
    ("nice", 0.5),
    ("smooth", 0.5),
    ("clean", 0.5),
    ("correct", 0.625),
    ("stable", 0.625),
    ("reliable", 0.75),
];

pub const NEUTRAL_WORDS: [&str; 40] = [
    "editor", "window", "menu", "toolbar", "plugin", "compiler", "builder", "launcher",
    "dialog", "button", "panel", "viewer", "project", "workspace", "debugger", "console",
    "wizard", "preference", "refactor", "breakpoint", "classpath", "repository", "import",
    "export", "outline", "marker", "syntax", "completion", "template", "runtime", "platform",
    "component", "resource", "listener", "widget", "layout", "parser", "indexer", "profiler",
    "installer",
];

/// Writes a lexicon file in the SentiWordNet 3.0 tab-separated layout. Each
/// scored word appears as two senses whose mean equals the table value, so
/// sense averaging is exercised; neutral filler words carry 0/0 scores.
pub fn write_lexicon(path: &Path) {
    let mut out = String::from("# POS\tID\tPosScore\tNegScore\tSynsetTerms\tGloss\n");
    let mut id = 1u32;
    let mut sense = |out: &mut String, word: &str, n: u32, pos: f64, neg: f64| {
        writeln!(out, "a\t{id:08}\t{pos}\t{neg}\t{word}#{n}\tsynthetic gloss").unwrap();
        id += 1;
    };
    for (word, score) in NEG_WORDS {
        sense(&mut out, word, 1, 0.0, score + 0.125);
        sense(&mut out, word, 2, 0.0, score - 0.125);
    }
    for (word, score) in POS_WORDS {
        sense(&mut out, word, 1, score + 0.125, 0.0);
        sense(&mut out, word, 2, score - 0.125, 0.0);
    }
    for word in &NEUTRAL_WORDS[..20] {
        sense(&mut out, word, 1, 0.0, 0.0);
    }
    // Multi-word terms are skipped by the parser; keep one to prove it.
    out.push_str("a\t99999990\t0.5\t0.0\tvery_good#1\tmulti-word term\n");
    std::fs::write(path, out).unwrap();
}

pub struct SyntheticParams {
    pub n: usize,
    pub seed: u64,
    /// Log-scale duration model: ln(hours) = mu + prio_gain*(p-3)
    /// + sent_gain*(2u-1) + noise_sigma*N(0,1).
    pub mu: f64,
    pub prio_gain: f64,
    pub sent_gain: f64,
    pub noise_sigma: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self { n: 8000, seed: 1234, mu: 4.0, prio_gain: 0.55, sent_gain: 1.0, noise_sigma: 1.05 }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller transform.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.len() - 1
}

/// Writes a CSV export whose durations carry a learnable but noisy signal
/// from priority and description sentiment, with a 70/30-ish split between
/// quick and slow resolutions and a resolution-label mix dominated by FIXED.
/// The NOT_ECLIPSE label only occurs in the newest 15% of reports, so a
/// chronological 80/20 split never sees it in training.
pub fn write_corpus(path: &Path, params: &SyntheticParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out =
        String::from("Issue_id,Description,Priority,Created_time,Resolved_time,Resolution,Status\n");
    let base = chrono::NaiveDate::from_ymd_opt(2004, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let resolutions = ["FIXED", "DUPLICATE", "WONTFIX", "INVALID", "WORKSFORME"];
    let resolution_weights = [0.57, 0.13, 0.12, 0.10, 0.08];
    let statuses = ["RESOLVED", "CLOSED", "VERIFIED"];

    for i in 0..params.n {
        let id = 100_000 + i;
        // Spacing dominates jitter, so creation order equals id order.
        let created = base
            + chrono::Duration::minutes(i as i64 * 45 + rng.gen_range(0..40))
            + chrono::Duration::seconds(rng.gen_range(0..60));

        let u: f64 = rng.gen();
        let n_neg = (u * 4.0).round() as usize;
        let n_pos = ((1.0 - u) * 3.0).round() as usize;
        let prio_idx = pick_weighted(&mut rng, &[0.10, 0.20, 0.35, 0.20, 0.15]);
        let missing_priority = rng.gen_bool(0.03);
        let priority = if missing_priority { String::new() } else { format!("P{}", prio_idx + 1) };

        let mut words: Vec<&str> = Vec::new();
        for _ in 0..rng.gen_range(12..30) {
            words.push(NEUTRAL_WORDS[rng.gen_range(0..NEUTRAL_WORDS.len())]);
        }
        for _ in 0..n_neg {
            words.push(NEG_WORDS[rng.gen_range(0..NEG_WORDS.len())].0);
        }
        for _ in 0..n_pos {
            words.push(POS_WORDS[rng.gen_range(0..POS_WORDS.len())].0);
        }
        words.shuffle(&mut rng);
        let description = words.join(" ");

        let unresolved = rng.gen_bool(0.03);
        let (resolved, resolution, status) = if unresolved {
            (String::new(), "", "NEW")
        } else {
            let ln_hours = params.mu
                + params.prio_gain * (prio_idx as f64 + 1.0 - 3.0)
                + params.sent_gain * (2.0 * u - 1.0)
                + params.noise_sigma * normal(&mut rng);
            let hours = ln_hours.exp().clamp(0.05, 80_000.0);
            let resolved = created + chrono::Duration::seconds((hours * 3600.0) as i64);
            let in_newest_15 = i >= params.n * 85 / 100;
            let resolution = if in_newest_15 && rng.gen_bool(0.06) {
                "NOT_ECLIPSE"
            } else {
                resolutions[pick_weighted(&mut rng, &resolution_weights)]
            };
            (
                resolved.format("%Y-%m-%d %H:%M:%S").to_string(),
                resolution,
                statuses[rng.gen_range(0..statuses.len())],
            )
        };
        writeln!(
            out,
            "{id},{description},{priority},{created},{resolved},{resolution},{status}",
            created = created.format("%Y-%m-%d %H:%M:%S"),
        )
        .unwrap();
    }
    std::fs::write(path, out).unwrap();
}

pub fn mapping() -> ColumnMapping {
    ColumnMapping {
        id: "Issue_id".into(),
        description: "Description".into(),
        priority: "Priority".into(),
        created: "Created_time".into(),
        resolved: "Resolved_time".into(),
        resolution: "Resolution".into(),
        status: Some("Status".into()),
        time_format: "iso8601".into(),
        delimiter: ',',
    }
}

/// Materializes corpus + lexicon (or honors the env overrides) under `dir`
/// and returns a ready-to-run configuration writing into `dir`/out.
pub fn setup_workspace(dir: &Path, params: &SyntheticParams) -> RunConfig {
    let corpus = match std::env::var_os("BUGDESTINY_ECLIPSE_CSV") {
        Some(path) => PathBuf::from(path),
        None => {
            let path = dir.join("corpus.csv");
            write_corpus(&path, params);
            path
        }
    };
    let lexicon = match std::env::var_os("BUGDESTINY_SWN") {
        Some(path) => PathBuf::from(path),
        None => {
            let path = dir.join("lexicon.txt");
            write_lexicon(&path);
            path
        }
    };
    let out = dir.join("out");
    std::fs::create_dir_all(&out).unwrap();
    let toml_text = format!(
        r#"seed = 42

[paths]
corpus = {corpus:?}
lexicon = {lexicon:?}
out = {out:?}

[mapping]
id = "Issue_id"
description = "Description"
priority = "Priority"
created = "Created_time"
resolved = "Resolved_time"
resolution = "Resolution"
status = "Status"
"#,
    );
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, toml_text).unwrap();
    RunConfig::from_toml_file(&config_path).unwrap()
}

pub fn config_path(dir: &Path) -> PathBuf {
    dir.join("config.toml")
}
