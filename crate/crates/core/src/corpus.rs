//! Bug-report ingestion: tabular parsing, duration labeling, chronological
//! train/test splitting, and label pruning.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open corpus file {path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error("mapped column {0:?} not found in header")]
    MissingColumn(String),
    #[error("corpus file has no data rows")]
    Empty,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("need at least 2 reports to split, got {0}")]
    TooFewReports(usize),
    #[error("no FIXED examples available for the time-to-fix task")]
    NoFixedExamples,
    #[error("no labeled examples with durations")]
    NoDurations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Priority {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl Priority {
    pub fn numeric(self) -> f64 {
        match self {
            Priority::P1 => 1.0,
            Priority::P2 => 2.0,
            Priority::P3 => 3.0,
            Priority::P4 => 4.0,
            Priority::P5 => 5.0,
        }
    }

    pub fn parse(s: &str) -> Option<Priority> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P1" | "1" => Some(Priority::P1),
            "P2" | "2" => Some(Priority::P2),
            "P3" | "3" => Some(Priority::P3),
            "P4" | "4" => Some(Priority::P4),
            "P5" | "5" => Some(Priority::P5),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resolution {
    Fixed,
    Wontfix,
    Duplicate,
    Worksforme,
    Nduplicate,
    Invalid,
    NotEclipse,
}

impl Resolution {
    pub const ALL: [Resolution; 7] = [
        Resolution::Fixed,
        Resolution::Wontfix,
        Resolution::Duplicate,
        Resolution::Worksforme,
        Resolution::Nduplicate,
        Resolution::Invalid,
        Resolution::NotEclipse,
    ];

    pub fn parse(s: &str) -> Option<Resolution> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FIXED" => Some(Resolution::Fixed),
            "WONTFIX" => Some(Resolution::Wontfix),
            "DUPLICATE" => Some(Resolution::Duplicate),
            "WORKSFORME" => Some(Resolution::Worksforme),
            "NDUPLICATE" => Some(Resolution::Nduplicate),
            "INVALID" => Some(Resolution::Invalid),
            "NOT_ECLIPSE" => Some(Resolution::NotEclipse),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::Fixed => "FIXED",
            Resolution::Wontfix => "WONTFIX",
            Resolution::Duplicate => "DUPLICATE",
            Resolution::Worksforme => "WORKSFORME",
            Resolution::Nduplicate => "NDUPLICATE",
            Resolution::Invalid => "INVALID",
            Resolution::NotEclipse => "NOT_ECLIPSE",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One issue-tracker record, normalized to UTC.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub description: String,
    pub priority: Option<Priority>,
    /// True when the priority field was missing and imputed to P3 downstream.
    pub priority_imputed: bool,
    pub created_at: DateTime<Utc>,
    pub resolved_at: Option<DateTime<Utc>>,
    pub resolution: Option<Resolution>,
    pub status: String,
}

impl BugReport {
    /// Priority as a numeric feature; missing values impute to P3.
    pub fn priority_value(&self) -> f64 {
        self.priority.unwrap_or(Priority::P3).numeric()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeClass {
    Short,
    Long,
}

impl TimeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeClass::Short => "SHORT",
            TimeClass::Long => "LONG",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DestinyBinary {
    Fixed,
    NotFixed,
}

/// A report reduced to its prediction targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledExample {
    pub report_id: String,
    pub duration_hours: f64,
    pub time_class: Option<TimeClass>,
    pub destiny_binary: DestinyBinary,
    pub destiny_label: Resolution,
}

/// Chronological train/test partition over report ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub dropped_labels: Vec<Resolution>,
}

/// Which column in the input file holds each report field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub id: String,
    pub description: String,
    pub priority: String,
    pub created: String,
    pub resolved: String,
    pub resolution: String,
    #[serde(default)]
    pub status: Option<String>,
    /// "iso8601" (default) or "epoch" seconds.
    #[serde(default = "default_time_format")]
    pub time_format: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_time_format() -> String {
    "iso8601".to_string()
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestSummary {
    pub rows_read: usize,
    pub reports: usize,
    pub rejected_timestamp: usize,
    pub rejected_order: usize,
}

fn parse_timestamp(raw: &str, format: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if format == "epoch" {
        return raw.parse::<i64>().ok().and_then(|s| DateTime::<Utc>::from_timestamp(s, 0));
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    // Bugzilla exports commonly use "YYYY-MM-DD HH:MM:SS".
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(naive.and_utc());
        }
    }
    None
}

/// Parses a delimited export into reports sorted by `created_at` ascending
/// (ties broken by id). Rows with unparseable created timestamps, or with
/// `resolved < created`, are skipped and counted in the summary.
pub fn parse_corpus(
    path: &Path,
    mapping: &ColumnMapping,
) -> Result<(Vec<BugReport>, IngestSummary), CorpusError> {
    let file = std::fs::File::open(path)
        .map_err(|source| CorpusError::Open { path: path.display().to_string(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .flexible(false)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize, CorpusError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let id_col = col(&mapping.id)?;
    let desc_col = col(&mapping.description)?;
    let prio_col = col(&mapping.priority)?;
    let created_col = col(&mapping.created)?;
    let resolved_col = col(&mapping.resolved)?;
    let resolution_col = col(&mapping.resolution)?;
    let status_col = match &mapping.status {
        Some(name) => Some(col(name)?),
        None => None,
    };

    let mut summary = IngestSummary::default();
    let mut reports = Vec::new();
    for record in reader.records() {
        let record = record?;
        summary.rows_read += 1;
        let created = match parse_timestamp(&record[created_col], &mapping.time_format) {
            Some(ts) => ts,
            None => {
                summary.rejected_timestamp += 1;
                continue;
            }
        };
        let resolved_raw = record[resolved_col].trim();
        let resolved = if resolved_raw.is_empty() {
            None
        } else {
            match parse_timestamp(resolved_raw, &mapping.time_format) {
                Some(ts) => Some(ts),
                None => {
                    summary.rejected_timestamp += 1;
                    continue;
                }
            }
        };
        if let Some(resolved) = resolved {
            if resolved < created {
                summary.rejected_order += 1;
                continue;
            }
        }
        let priority = Priority::parse(&record[prio_col]);
        reports.push(BugReport {
            id: record[id_col].trim().to_string(),
            description: record[desc_col].to_string(),
            priority,
            priority_imputed: priority.is_none(),
            created_at: created,
            resolved_at: resolved,
            resolution: Resolution::parse(&record[resolution_col]),
            status: status_col.map(|c| record[c].trim().to_string()).unwrap_or_default(),
        });
    }
    if summary.rows_read == 0 {
        return Err(CorpusError::Empty);
    }
    reports.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
    summary.reports = reports.len();
    Ok((reports, summary))
}

/// Reports lacking either timestamp or a resolution label are skipped; the
/// second return value is the skip count.
pub fn derive_examples(reports: &[BugReport]) -> (Vec<LabeledExample>, usize) {
    let mut examples = Vec::new();
    let mut skipped = 0;
    for report in reports {
        let (resolved, resolution) = match (report.resolved_at, report.resolution) {
            (Some(r), Some(l)) => (r, l),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let duration_hours = (resolved - report.created_at).num_seconds() as f64 / 3600.0;
        examples.push(LabeledExample {
            report_id: report.id.clone(),
            duration_hours,
            time_class: None,
            destiny_binary: if resolution == Resolution::Fixed {
                DestinyBinary::Fixed
            } else {
                DestinyBinary::NotFixed
            },
            destiny_label: resolution,
        });
    }
    (examples, skipped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantileBasis {
    TrainOnly,
    Whole,
}

/// Nearest-rank quantile: the smallest element with rank `ceil(fraction * n)`.
pub fn nearest_rank_quantile(durations: &[f64], fraction: f64) -> f64 {
    debug_assert!(!durations.is_empty());
    let mut sorted = durations.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (fraction * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Labels every example SHORT or LONG against the `fraction` quantile of
/// durations over the chosen basis. Returns the threshold in hours and
/// whether the degenerate all-identical warning fired.
pub fn assign_time_classes(
    examples: &mut [LabeledExample],
    fraction: f64,
    basis: QuantileBasis,
    train_ids: &BTreeSet<String>,
) -> Result<(f64, bool), CorpusError> {
    assert!(fraction > 0.0 && fraction < 1.0, "fraction must be in (0, 1)");
    let durations: Vec<f64> = match basis {
        QuantileBasis::Whole => examples.iter().map(|e| e.duration_hours).collect(),
        QuantileBasis::TrainOnly => examples
            .iter()
            .filter(|e| train_ids.contains(&e.report_id))
            .map(|e| e.duration_hours)
            .collect(),
    };
    if durations.is_empty() {
        return Err(CorpusError::NoDurations);
    }
    let threshold = nearest_rank_quantile(&durations, fraction);
    let degenerate = durations.iter().all(|&d| d == durations[0]);
    for example in examples.iter_mut() {
        example.time_class = Some(if example.duration_hours <= threshold {
            TimeClass::Short
        } else {
            TimeClass::Long
        });
    }
    Ok((threshold, degenerate))
}

/// Oldest `ceil(train_fraction * N)` reports go to train, the rest to test.
/// `reports` must already be in (created_at, id) order, which `parse_corpus`
/// guarantees.
pub fn chronological_split(
    reports: &[BugReport],
    train_fraction: f64,
) -> Result<CorpusSplit, CorpusError> {
    assert!(train_fraction > 0.0 && train_fraction < 1.0);
    let n = reports.len();
    if n < 2 {
        return Err(CorpusError::TooFewReports(n));
    }
    let train_count = ((train_fraction * n as f64).ceil() as usize).min(n - 1);
    Ok(CorpusSplit {
        train_ids: reports[..train_count].iter().map(|r| r.id.clone()).collect(),
        test_ids: reports[train_count..].iter().map(|r| r.id.clone()).collect(),
        dropped_labels: Vec::new(),
    })
}

/// Removes test examples whose destiny label never occurs in train, recording
/// the dropped labels on the split. Train examples are never touched; the
/// filtered list is for the destiny task only.
pub fn prune_unseen_labels(
    split: &mut CorpusSplit,
    examples: &[LabeledExample],
) -> Vec<LabeledExample> {
    let train_ids: BTreeSet<&str> = split.train_ids.iter().map(String::as_str).collect();
    let test_ids: BTreeSet<&str> = split.test_ids.iter().map(String::as_str).collect();
    let train_labels: BTreeSet<Resolution> = examples
        .iter()
        .filter(|e| train_ids.contains(e.report_id.as_str()))
        .map(|e| e.destiny_label)
        .collect();
    let mut dropped: BTreeSet<Resolution> = BTreeSet::new();
    let filtered = examples
        .iter()
        .filter(|e| {
            if test_ids.contains(e.report_id.as_str()) && !train_labels.contains(&e.destiny_label) {
                dropped.insert(e.destiny_label);
                false
            } else {
                true
            }
        })
        .cloned()
        .collect();
    split.dropped_labels = dropped.into_iter().collect();
    filtered
}

/// Restricts to FIXED examples, order preserved. Fatal when the result is
/// empty because the time-to-fix task has nothing to train on.
pub fn filter_fixed(examples: &[LabeledExample]) -> Result<Vec<LabeledExample>, CorpusError> {
    let fixed: Vec<LabeledExample> =
        examples.iter().filter(|e| e.destiny_label == Resolution::Fixed).cloned().collect();
    if fixed.is_empty() {
        return Err(CorpusError::NoFixedExamples);
    }
    Ok(fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn mapping() -> ColumnMapping {
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

    fn write_csv(rows: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "Issue_id,Description,Priority,Created_time,Resolved_time,Resolution,Status")
            .unwrap();
        for row in rows {
            writeln!(f, "{row}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn parse_sorts_by_created() {
        let f = write_csv(&[
            "3,editor bug,P3,2001-03-01 00:00:00,2001-03-02 00:00:00,FIXED,RESOLVED",
            "1,ui bug,P1,2001-01-01 00:00:00,2001-01-05 00:00:00,WONTFIX,RESOLVED",
            "2,crash,P2,2001-02-01 00:00:00,2001-02-02 00:00:00,FIXED,RESOLVED",
        ]);
        let (reports, summary) = parse_corpus(f.path(), &mapping()).unwrap();
        assert_eq!(summary.reports, 3);
        let ids: Vec<&str> = reports.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3"]);
    }

    #[test]
    fn resolved_before_created_rejected() {
        let f = write_csv(&[
            "1,ok,P3,2001-01-02 00:00:00,2001-01-03 00:00:00,FIXED,RESOLVED",
            "2,bad,P3,2001-01-02 00:00:00,2001-01-01 00:00:00,FIXED,RESOLVED",
        ]);
        let (reports, summary) = parse_corpus(f.path(), &mapping()).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(summary.rejected_order, 1);
    }

    #[test]
    fn missing_column_fatal() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b").unwrap();
        writeln!(f, "1,2").unwrap();
        let err = parse_corpus(f.path(), &mapping()).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn(_)));
    }

    #[test]
    fn empty_file_fatal() {
        let f = write_csv(&[]);
        assert!(matches!(parse_corpus(f.path(), &mapping()), Err(CorpusError::Empty)));
    }

    #[test]
    fn duration_in_hours() {
        let f = write_csv(&["1,x,P3,2001-01-01 00:00:00,2001-01-02 06:00:00,FIXED,RESOLVED"]);
        let (reports, _) = parse_corpus(f.path(), &mapping()).unwrap();
        let (examples, skipped) = derive_examples(&reports);
        assert_eq!(skipped, 0);
        assert_eq!(examples[0].duration_hours, 30.0);
        assert_eq!(examples[0].destiny_binary, DestinyBinary::Fixed);
    }

    #[test]
    fn destiny_binary_from_resolution() {
        let f = write_csv(&[
            "1,x,P3,2001-01-01 00:00:00,2001-01-02 00:00:00,WONTFIX,RESOLVED",
            "2,y,P3,2001-01-01 00:00:00,2001-01-02 00:00:00,FIXED,RESOLVED",
        ]);
        let (reports, _) = parse_corpus(f.path(), &mapping()).unwrap();
        let (examples, _) = derive_examples(&reports);
        assert_eq!(examples[0].destiny_binary, DestinyBinary::NotFixed);
        assert_eq!(examples[1].destiny_binary, DestinyBinary::Fixed);
    }

    fn toy_examples(durations: &[f64]) -> Vec<LabeledExample> {
        durations
            .iter()
            .enumerate()
            .map(|(i, &d)| LabeledExample {
                report_id: format!("{i}"),
                duration_hours: d,
                time_class: None,
                destiny_binary: DestinyBinary::Fixed,
                destiny_label: Resolution::Fixed,
            })
            .collect()
    }

    #[test]
    fn quantile_on_distinct_values() {
        let mut examples = toy_examples(&[10., 20., 30., 40., 50., 60., 70., 80., 90., 100.]);
        let (threshold, degenerate) =
            assign_time_classes(&mut examples, 0.70, QuantileBasis::Whole, &BTreeSet::new())
                .unwrap();
        assert_eq!(threshold, 70.0);
        assert!(!degenerate);
        let short = examples.iter().filter(|e| e.time_class == Some(TimeClass::Short)).count();
        assert_eq!(short, 7);
    }

    #[test]
    fn identical_durations_all_short() {
        let mut examples = toy_examples(&[5., 5., 5., 5.]);
        let (threshold, degenerate) =
            assign_time_classes(&mut examples, 0.70, QuantileBasis::Whole, &BTreeSet::new())
                .unwrap();
        assert_eq!(threshold, 5.0);
        assert!(degenerate);
        assert!(examples.iter().all(|e| e.time_class == Some(TimeClass::Short)));
    }

    #[test]
    fn split_80_20() {
        let f = write_csv(&[
            "0,x,P3,2001-01-01 00:00:00,2001-01-02 00:00:00,FIXED,RESOLVED",
            "1,x,P3,2001-01-02 00:00:00,2001-01-03 00:00:00,FIXED,RESOLVED",
            "2,x,P3,2001-01-03 00:00:00,2001-01-04 00:00:00,FIXED,RESOLVED",
            "3,x,P3,2001-01-04 00:00:00,2001-01-05 00:00:00,FIXED,RESOLVED",
            "4,x,P3,2001-01-05 00:00:00,2001-01-06 00:00:00,FIXED,RESOLVED",
            "5,x,P3,2001-01-06 00:00:00,2001-01-07 00:00:00,FIXED,RESOLVED",
            "6,x,P3,2001-01-07 00:00:00,2001-01-08 00:00:00,FIXED,RESOLVED",
            "7,x,P3,2001-01-08 00:00:00,2001-01-09 00:00:00,FIXED,RESOLVED",
            "8,x,P3,2001-01-09 00:00:00,2001-01-10 00:00:00,FIXED,RESOLVED",
            "9,x,P3,2001-01-10 00:00:00,2001-01-11 00:00:00,FIXED,RESOLVED",
        ]);
        let (reports, _) = parse_corpus(f.path(), &mapping()).unwrap();
        let split = chronological_split(&reports, 0.80).unwrap();
        assert_eq!(split.train_ids.len(), 8);
        assert_eq!(split.test_ids.len(), 2);
        let max_train = reports
            .iter()
            .filter(|r| split.train_ids.contains(&r.id))
            .map(|r| r.created_at)
            .max()
            .unwrap();
        let min_test = reports
            .iter()
            .filter(|r| split.test_ids.contains(&r.id))
            .map(|r| r.created_at)
            .min()
            .unwrap();
        assert!(max_train <= min_test);
    }

    #[test]
    fn boundary_tie_broken_by_id() {
        // Two reports share the boundary timestamp; the lower id sorts first
        // and lands in train.
        let f = write_csv(&[
            "a,x,P3,2001-01-01 00:00:00,2001-01-02 00:00:00,FIXED,RESOLVED",
            "b,x,P3,2001-01-02 00:00:00,2001-01-03 00:00:00,FIXED,RESOLVED",
            "d,x,P3,2001-01-03 00:00:00,2001-01-04 00:00:00,FIXED,RESOLVED",
            "c,x,P3,2001-01-03 00:00:00,2001-01-04 00:00:00,FIXED,RESOLVED",
            "e,x,P3,2001-01-04 00:00:00,2001-01-05 00:00:00,FIXED,RESOLVED",
        ]);
        let (reports, _) = parse_corpus(f.path(), &mapping()).unwrap();
        let split = chronological_split(&reports, 0.60).unwrap();
        // ceil(0.6 * 5) = 3 -> train is a, b, c.
        assert_eq!(split.train_ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn split_too_small_fatal() {
        let f = write_csv(&["1,x,P3,2001-01-01 00:00:00,2001-01-02 00:00:00,FIXED,RESOLVED"]);
        let (reports, _) = parse_corpus(f.path(), &mapping()).unwrap();
        assert!(matches!(chronological_split(&reports, 0.8), Err(CorpusError::TooFewReports(1))));
    }

    #[test]
    fn prune_drops_test_only_label() {
        let examples = vec![
            LabeledExample {
                report_id: "t1".into(),
                duration_hours: 1.0,
                time_class: None,
                destiny_binary: DestinyBinary::Fixed,
                destiny_label: Resolution::Fixed,
            },
            LabeledExample {
                report_id: "t2".into(),
                duration_hours: 1.0,
                time_class: None,
                destiny_binary: DestinyBinary::NotFixed,
                destiny_label: Resolution::Wontfix,
            },
            LabeledExample {
                report_id: "s1".into(),
                duration_hours: 1.0,
                time_class: None,
                destiny_binary: DestinyBinary::NotFixed,
                destiny_label: Resolution::Invalid,
            },
        ];
        let mut split = CorpusSplit {
            train_ids: vec!["t1".into(), "t2".into()],
            test_ids: vec!["s1".into()],
                dropped_labels: vec![],
        };
        let filtered = prune_unseen_labels(&mut split, &examples);
        assert_eq!(split.dropped_labels, vec![Resolution::Invalid]);
        assert_eq!(filtered.len(), 2);
    }

    #[test]
    fn prune_identity_when_labels_match() {
        let examples = vec![
            LabeledExample {
                report_id: "t1".into(),
                duration_hours: 1.0,
                time_class: None,
                destiny_binary: DestinyBinary::Fixed,
                destiny_label: Resolution::Fixed,
            },
            LabeledExample {
                report_id: "s1".into(),
                duration_hours: 1.0,
                time_class: None,
                destiny_binary: DestinyBinary::Fixed,
                destiny_label: Resolution::Fixed,
            },
        ];
        let mut split = CorpusSplit {
            train_ids: vec!["t1".into()],
            test_ids: vec!["s1".into()],
                dropped_labels: vec![],
        };
        let filtered = prune_unseen_labels(&mut split, &examples);
        assert!(split.dropped_labels.is_empty());
        assert_eq!(filtered.len(), 2);
    }

    #[test]
    fn filter_fixed_subset() {
        let mut examples = toy_examples(&[1., 2., 3., 4., 5.]);
        examples[1].destiny_label = Resolution::Wontfix;
        examples[3].destiny_label = Resolution::Invalid;
        examples[4].destiny_label = Resolution::Duplicate;
        let fixed = filter_fixed(&examples).unwrap();
        assert_eq!(fixed.len(), 2);
        assert_eq!(fixed[0].report_id, "0");
        assert_eq!(fixed[1].report_id, "2");
    }

    #[test]
    fn filter_fixed_empty_fatal() {
        let mut examples = toy_examples(&[1.]);
        examples[0].destiny_label = Resolution::Wontfix;
        assert!(matches!(filter_fixed(&examples), Err(CorpusError::NoFixedExamples)));
    }
}
