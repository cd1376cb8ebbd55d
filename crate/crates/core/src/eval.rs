//! Confusion matrices, per-class and weighted classification metrics, and
//! regression metrics.
//!
//! Weighted metric = sum over classes of (support_i / total) * metric_i, with
//! 0/0 cells defined as 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label {0:?} not in the declared class list")]
    UnknownLabel(String),
    #[error("true/predicted sequences have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty confusion matrix")]
    Empty,
}

/// Rows are true classes, columns are predicted classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn confusion(
    true_labels: &[String],
    predicted_labels: &[String],
    classes: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    if true_labels.len() != predicted_labels.len() {
        return Err(EvalError::LengthMismatch(true_labels.len(), predicted_labels.len()));
    }
    let index = |label: &String| {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| EvalError::UnknownLabel(label.clone()))
    };
    let n = classes.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (t, p) in true_labels.iter().zip(predicted_labels) {
        counts[index(t)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix { classes: classes.to_vec(), counts })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassMetrics>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub total: u64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassificationReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let n = cm.classes.len();
    let mut per_class = Vec::with_capacity(n);
    let mut trace = 0u64;
    let (mut wp, mut wf) = (0.0, 0.0);
    for i in 0..n {
        let tp = cm.counts[i][i];
        trace += tp;
        let support: u64 = cm.counts[i].iter().sum();
        let predicted: u64 = (0..n).map(|r| cm.counts[r][i]).sum();
        let precision = ratio(tp as f64, predicted as f64);
        let recall = ratio(tp as f64, support as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        let weight = support as f64 / total as f64;
        wp += weight * precision;
        wf += weight * f1;
        per_class.push(ClassMetrics { class: cm.classes[i].clone(), precision, recall, f1, support });
    }
    // Weighted recall is sum_i (support_i/total)(tp_i/support_i); the
    // support terms cancel (zero-support classes contribute 0 either way),
    // so it is computed as trace/total and the weighted-recall = accuracy
    // identity holds bit-exactly.
    let accuracy = trace as f64 / total as f64;
    Ok(ClassificationReport {
        per_class,
        weighted_precision: wp,
        weighted_recall: accuracy,
        weighted_f1: wf,
        accuracy,
        total,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionReport {
    pub mae: f64,
    pub mse: f64,
    pub r2: Option<f64>,
    pub n: usize,
}

pub fn regression_report(true_hours: &[f64], predicted_hours: &[f64]) -> Result<RegressionReport, EvalError> {
    if true_hours.len() != predicted_hours.len() {
        return Err(EvalError::LengthMismatch(true_hours.len(), predicted_hours.len()));
    }
    if true_hours.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = true_hours.len();
    let mae = true_hours.iter().zip(predicted_hours).map(|(y, p)| (y - p).abs()).sum::<f64>()
        / n as f64;
    let mse = true_hours.iter().zip(predicted_hours).map(|(y, p)| (y - p) * (y - p)).sum::<f64>()
        / n as f64;
    let r2 = if n >= 2 {
        let mean = true_hours.iter().sum::<f64>() / n as f64;
        let ss_tot: f64 = true_hours.iter().map(|y| (y - mean) * (y - mean)).sum();
        let ss_res: f64 = true_hours.iter().zip(predicted_hours).map(|(y, p)| (y - p) * (y - p)).sum();
        if ss_tot == 0.0 {
            None
        } else {
            Some(1.0 - ss_res / ss_tot)
        }
    } else {
        None
    };
    Ok(RegressionReport { mae, mse, r2, n })
}
