//! Feature assembly: sentiment + priority + optional topic one-hot, train-set
//! standardization, and SMOTE oversampling for balanced training inputs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sentiment::{EmotionClass, SentimentScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmotionEncoding {
    SignedValue,
    Binary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub use_topic: bool,
    pub topic_count: usize,
    pub emotion_encoding: EmotionEncoding,
    pub standardize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            use_topic: false,
            topic_count: 20,
            emotion_encoding: EmotionEncoding::SignedValue,
            standardize: true,
        }
    }
}

impl FeatureConfig {
    pub fn vector_len(&self) -> usize {
        3 + if self.use_topic { self.topic_count } else { 0 }
    }

    /// Number of leading dense columns (the one-hot block, if any, follows).
    pub const DENSE_COLUMNS: usize = 3;
}

/// Layout: [emotion, emotionality, priority, topic one-hot...].
pub fn build_features(
    score: &SentimentScore,
    priority: f64,
    topic: Option<usize>,
    config: &FeatureConfig,
) -> Vec<f64> {
    assert_eq!(topic.is_some(), config.use_topic, "topic presence must match config.use_topic");
    let emotion = match config.emotion_encoding {
        EmotionEncoding::SignedValue => score.emotion_value,
        EmotionEncoding::Binary => match score.emotion_class {
            EmotionClass::Positive => 1.0,
            EmotionClass::Negative => -1.0,
        },
    };
    let mut v = Vec::with_capacity(config.vector_len());
    v.push(emotion);
    v.push(score.emotionality);
    v.push(priority);
    if let Some(topic) = topic {
        assert!(topic < config.topic_count, "topic id {topic} >= k = {}", config.topic_count);
        for i in 0..config.topic_count {
            v.push(if i == topic { 1.0 } else { 0.0 });
        }
    }
    v
}

/// Per-column mean/std computed on training rows; the one-hot block is left
/// untouched.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train_rows: &[Vec<f64>], dense_columns: usize) -> Standardizer {
        assert!(!train_rows.is_empty());
        let cols = dense_columns.min(train_rows[0].len());
        let n = train_rows.len() as f64;
        let mut mean = vec![0.0; cols];
        for row in train_rows {
            for c in 0..cols {
                mean[c] += row[c];
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; cols];
        for row in train_rows {
            for c in 0..cols {
                let d = row[c] - mean[c];
                var[c] += d * d;
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt().max(1e-12)).collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, row: &mut [f64]) {
        for c in 0..self.mean.len() {
            row[c] = (row[c] - self.mean[c]) / self.std[c];
        }
    }
}

/// SMOTE: brings every class count up to the majority count by interpolating
/// minority rows toward one of their k nearest same-class neighbors. One-hot
/// topic columns of a synthetic row are copied from the base row, not
/// interpolated. Returns the input unchanged when already balanced.
pub fn smote_oversample(
    rows: &[(Vec<f64>, usize)],
    k_neighbors: usize,
    dense_columns: usize,
    seed: u64,
) -> Vec<(Vec<f64>, usize)> {
    let n_classes = rows.iter().map(|(_, c)| *c + 1).max().unwrap_or(0);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, (_, c)) in rows.iter().enumerate() {
        by_class[*c].push(i);
    }
    let majority = by_class.iter().map(Vec::len).max().unwrap_or(0);
    if by_class.iter().all(|m| m.is_empty() || m.len() == majority) {
        return rows.to_vec();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = rows.to_vec();
    for (class, members) in by_class.iter().enumerate() {
        if members.is_empty() || members.len() == majority {
            continue;
        }
        let deficit = majority - members.len();
        if members.len() == 1 {
            // Cannot interpolate a singleton; duplicate it.
            eprintln!("warning: class {class} has a single member; duplicating it {deficit} times");
            for _ in 0..deficit {
                out.push(rows[members[0]].clone());
            }
            continue;
        }
        let k = k_neighbors.min(members.len() - 1);
        // All-pairs neighbor lists; minority classes are small.
        let neighbors: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut dists: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (euclidean(&rows[i].0, &rows[j].0), j))
                    .collect();
                dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                dists.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for s in 0..deficit {
            let base_slot = s % members.len();
            let base = members[base_slot];
            let nn = neighbors[base_slot][rng.gen_range(0..neighbors[base_slot].len())];
            let u: f64 = rng.gen();
            let mut synthetic = rows[base].0.clone();
            let dense = dense_columns.min(synthetic.len());
            for c in 0..dense {
                synthetic[c] += u * (rows[nn].0[c] - synthetic[c]);
            }
            out.push((synthetic, class));
        }
    }
    out
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentiment::SentimentScore;
    use proptest::prelude::*;

    fn score(pos: f64, neg: f64) -> SentimentScore {
        let emotion_value = pos - neg;
        SentimentScore {
            pos_score: pos,
            neg_score: neg,
            emotion_value,
            emotion_class: if emotion_value >= 0.0 {
                EmotionClass::Positive
            } else {
                EmotionClass::Negative
            },
            emotionality: pos + neg,
            matched_tokens: 0,
        }
    }

    #[test]
    fn direct_mapping_without_topic() {
        let config = FeatureConfig { use_topic: false, standardize: false, ..Default::default() };
        let v = build_features(&score(0.5, 0.125), 2.0, None, &config);
        assert_eq!(v, vec![0.375, 0.625, 2.0]);
    }

    #[test]
    fn one_hot_topic_block() {
        let config = FeatureConfig {
            use_topic: true,
            topic_count: 4,
            standardize: false,
            ..Default::default()
        };
        let v = build_features(&score(0.5, 0.125), 2.0, Some(3), &config);
        assert_eq!(v, vec![0.375, 0.625, 2.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(v[3..].iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn binary_emotion_encoding() {
        let config = FeatureConfig {
            emotion_encoding: EmotionEncoding::Binary,
            standardize: false,
            ..Default::default()
        };
        let v = build_features(&score(0.1, 0.4), 3.0, None, &config);
        assert_eq!(v[0], -1.0);
    }

    #[test]
    #[should_panic(expected = "topic id")]
    fn topic_out_of_range_panics() {
        let config = FeatureConfig { use_topic: true, topic_count: 4, ..Default::default() };
        build_features(&score(0.0, 0.0), 3.0, Some(4), &config);
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 * 0.3 - 2.0, (i % 7) as f64, (i % 5) as f64 + 1.0, 1.0])
            .collect();
        let standardizer = Standardizer::fit(&rows, 3);
        let mut standardized = rows.clone();
        for row in standardized.iter_mut() {
            standardizer.apply(row);
        }
        for c in 0..3 {
            let n = standardized.len() as f64;
            let mean: f64 = standardized.iter().map(|r| r[c]).sum::<f64>() / n;
            let var: f64 = standardized.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "column {c} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-9, "column {c} std {}", var.sqrt());
        }
        // One-hot column untouched.
        assert!(standardized.iter().all(|r| r[3] == 1.0));
    }

    fn toy_rows(counts: &[usize]) -> Vec<(Vec<f64>, usize)> {
        let mut rows = Vec::new();
        for (class, &count) in counts.iter().enumerate() {
            for i in 0..count {
                rows.push((vec![class as f64 * 10.0 + (i % 5) as f64, (i % 3) as f64], class));
            }
        }
        rows
    }

    #[test]
    fn histogram_uniform_after_oversampling() {
        let rows = toy_rows(&[70, 30]);
        let balanced = smote_oversample(&rows, 5, 2, 11);
        let count = |c: usize| balanced.iter().filter(|(_, cl)| *cl == c).count();
        assert_eq!(count(0), 70);
        assert_eq!(count(1), 70);
    }

    #[test]
    fn already_balanced_returned_unchanged() {
        let rows = toy_rows(&[20, 20]);
        let balanced = smote_oversample(&rows, 5, 2, 11);
        assert_eq!(balanced, rows);
    }

    #[test]
    fn singleton_class_duplicated() {
        let rows = toy_rows(&[5, 1]);
        let balanced = smote_oversample(&rows, 5, 2, 11);
        let minority: Vec<_> = balanced.iter().filter(|(_, c)| *c == 1).collect();
        assert_eq!(minority.len(), 5);
        assert!(minority.iter().all(|(v, _)| *v == rows[5].0));
    }

    #[test]
    fn synthetic_points_lie_on_segments() {
        // 2-D toy minority cluster; check every synthetic point against all
        // pairs of originals.
        let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
        for i in 0..40 {
            rows.push((vec![i as f64 * 0.1, (i * 7 % 13) as f64], 0));
        }
        let minority = [
            vec![1.0, 1.0],
            vec![2.0, 1.5],
            vec![1.5, 3.0],
            vec![2.5, 2.5],
            vec![0.5, 2.0],
        ];
        for p in &minority {
            rows.push((p.clone(), 1));
        }
        let balanced = smote_oversample(&rows, 3, 2, 99);
        let synthetic: Vec<&Vec<f64>> = balanced[rows.len()..]
            .iter()
            .map(|(v, c)| {
                assert_eq!(*c, 1);
                v
            })
            .collect();
        assert_eq!(synthetic.len(), 35);
        for s in synthetic {
            let on_some_segment = minority.iter().enumerate().any(|(i, a)| {
                minority.iter().skip(i + 1).any(|b| on_segment(s, a, b, 1e-12))
            });
            assert!(on_some_segment, "synthetic point {s:?} not on any minority segment");
        }
    }

    fn on_segment(p: &[f64], a: &[f64], b: &[f64], tol: f64) -> bool {
        // p = a + u (b - a) for a single u in [0, 1], checked coordinate-wise.
        let mut u: Option<f64> = None;
        for c in 0..p.len() {
            let d = b[c] - a[c];
            if d.abs() < tol {
                if (p[c] - a[c]).abs() > tol {
                    return false;
                }
            } else {
                let uc = (p[c] - a[c]) / d;
                match u {
                    None => u = Some(uc),
                    Some(prev) if (prev - uc).abs() > 1e-9 => return false,
                    _ => {}
                }
            }
        }
        u.map_or(true, |u| (-tol..=1.0 + 1e-9).contains(&u))
    }

    #[test]
    fn one_hot_block_copied_not_interpolated() {
        let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
        for i in 0..10 {
            rows.push((vec![i as f64, 0.0, 1.0, 0.0], 0));
        }
        rows.push((vec![0.0, 1.0, 0.0, 1.0], 1));
        rows.push((vec![5.0, 2.0, 1.0, 0.0], 1));
        let balanced = smote_oversample(&rows, 5, 2, 3);
        for (v, c) in &balanced[rows.len()..] {
            assert_eq!(*c, 1);
            let onehot = &v[2..];
            assert!(onehot == [1.0, 0.0] || onehot == [0.0, 1.0]);
        }
    }

    proptest! {
        #[test]
        fn smote_histogram_always_uniform(
            counts in proptest::collection::vec(2usize..40, 2..5),
            seed in 0u64..100,
        ) {
            let rows = toy_rows(&counts);
            let balanced = smote_oversample(&rows, 5, 2, seed);
            let majority = *counts.iter().max().unwrap();
            for class in 0..counts.len() {
                let n = balanced.iter().filter(|(_, c)| *c == class).count();
                prop_assert_eq!(n, majority);
            }
        }

        #[test]
        fn smote_deterministic(seed in 0u64..50) {
            let rows = toy_rows(&[12, 5, 8]);
            let a = smote_oversample(&rows, 5, 2, seed);
            let b = smote_oversample(&rows, 5, 2, seed);
            prop_assert_eq!(a, b);
        }
    }
}
