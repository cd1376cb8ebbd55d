//! Topic modeling: embed token streams, cluster with k-means, describe each
//! cluster with class-based TF-IDF terms, and assign topics to new documents.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::binio::{BinError, CrcReader, CrcWriter};
use crate::textprep::TokenStream;

pub const TOPIC_MAGIC: &str = "BDTOPIC/1";

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("need at least {k} non-empty documents to fit {k} topics, got {got}")]
    TooFewDocuments { k: usize, got: usize },
    #[error("no embedding vector for report id {0:?}")]
    MissingVector(String),
    #[error("cannot read vector file {path}: {source}")]
    VectorFile { path: String, source: std::io::Error },
    #[error("vector file {path}: {detail}")]
    VectorFormat { path: String, detail: String },
    #[error("model file error: {0}")]
    File(#[from] BinError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn fnv1a64(seed: u64, term: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ seed.wrapping_mul(0x100000001b3);
    for b in term.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Hashed tf-idf document embedding: each term hashes to a bucket with a ±1
/// sign, weighted by tf * idf, then L2-normalized.
#[derive(Debug, Clone)]
pub struct HashedTfidf {
    pub dimension: usize,
    pub hash_seed: u64,
    pub idf: BTreeMap<String, f64>,
    pub n_docs: usize,
}

impl HashedTfidf {
    /// Computes idf weights over the training streams:
    /// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
    pub fn fit(streams: &[TokenStream], dimension: usize, hash_seed: u64) -> Self {
        assert!(dimension >= 8, "embedding dimension must be >= 8");
        let n_docs = streams.len();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for stream in streams {
            let mut seen: Vec<&str> = stream.tokens.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term.to_string()).or_insert(0) += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(t, d)| (t, ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0))
            .collect();
        Self { dimension, hash_seed, idf, n_docs }
    }

    fn idf_of(&self, term: &str) -> f64 {
        match self.idf.get(term) {
            Some(&v) => v,
            None => (1.0 + self.n_docs as f64).ln() + 1.0,
        }
    }

    pub fn embed(&self, stream: &TokenStream) -> Vec<f64> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for token in &stream.tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
        let mut v = vec![0.0; self.dimension];
        for (term, tf) in counts {
            let h = fnv1a64(self.hash_seed, term);
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign * tf as f64 * self.idf_of(term);
        }
        l2_normalize(&mut v);
        v
    }
}

/// Precomputed per-report vectors, e.g. transformer embeddings exported from
/// another toolchain. File format: header "id,dim", then one row per id.
#[derive(Debug, Clone)]
pub struct ExternalVectors {
    pub dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl ExternalVectors {
    pub fn load(path: &Path) -> Result<Self, TopicError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TopicError::VectorFile { path: path.display().to_string(), source })?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let mut parts = header.split(',');
        let (first, second) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
        if first != "id" {
            return Err(TopicError::VectorFormat {
                path: path.display().to_string(),
                detail: format!("expected header starting with 'id,', found {header:?}"),
            });
        }
        let dimension: usize = second.trim().parse().map_err(|_| TopicError::VectorFormat {
            path: path.display().to_string(),
            detail: format!("dimension field is not an integer: {second:?}"),
        })?;
        let mut vectors = HashMap::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or("").to_string();
            let values: Result<Vec<f64>, _> = fields.map(|f| f.trim().parse::<f64>()).collect();
            let values = values.map_err(|_| TopicError::VectorFormat {
                path: path.display().to_string(),
                detail: format!("non-numeric value on data row {}", lineno + 1),
            })?;
            if values.len() != dimension {
                return Err(TopicError::VectorFormat {
                    path: path.display().to_string(),
                    detail: format!(
                        "row for id {id:?} has {} values, expected {dimension}",
                        values.len()
                    ),
                });
            }
            vectors.insert(id, values);
        }
        Ok(Self { dimension, vectors })
    }

    pub fn get(&self, report_id: &str) -> Result<Vec<f64>, TopicError> {
        let mut v = self
            .vectors
            .get(report_id)
            .cloned()
            .ok_or_else(|| TopicError::MissingVector(report_id.to_string()))?;
        l2_normalize(&mut v);
        Ok(v)
    }
}

#[derive(Debug, Clone)]
pub enum EmbeddingBackend {
    HashedTfidf(HashedTfidf),
    ExternalVectors(ExternalVectors),
}

impl EmbeddingBackend {
    pub fn dimension(&self) -> usize {
        match self {
            EmbeddingBackend::HashedTfidf(b) => b.dimension,
            EmbeddingBackend::ExternalVectors(b) => b.dimension,
        }
    }

    pub fn embed(&self, stream: &TokenStream) -> Result<Vec<f64>, TopicError> {
        match self {
            EmbeddingBackend::HashedTfidf(b) => Ok(b.embed(stream)),
            EmbeddingBackend::ExternalVectors(b) => b.get(&stream.report_id),
        }
    }
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fitted topic model: centroids plus the c-TF-IDF terms that describe each
/// topic.
#[derive(Debug, Clone)]
pub struct TopicModel {
    pub k: usize,
    pub dimension: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<f64>>,
    pub topic_terms: Vec<Vec<(String, f64)>>,
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
    pub hash_seed: u64,
    pub fitted_on: String,
}

const MAX_ITERS: usize = 300;
const SHIFT_TOL: f64 = 1e-6;
pub const TOP_TERMS: usize = 10;

fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    let first = rng.gen_range(0..points.len());
    centroids.push(points[first].clone());
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        centroids.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, centroids.last().unwrap());
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    centroids
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(points, k, &mut rng);
    let dim = points[0].len();
    let mut labels = vec![0usize; points.len()];
    for _ in 0..MAX_ITERS {
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centroids);
            labels[i] = j;
            dists[i] = d;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, &x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        // Empty clusters reseed from the point farthest from its centroid.
        for j in 0..k {
            if counts[j] == 0 {
                let far = dists
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                sums[j] = points[far].clone();
                counts[j] = 1;
                dists[far] = 0.0;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let mut new_c = sums[j].clone();
            for x in new_c.iter_mut() {
                *x /= counts[j] as f64;
            }
            shift = shift.max(sq_dist(&new_c, &centroids[j]).sqrt());
            centroids[j] = new_c;
        }
        if shift < SHIFT_TOL {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        labels[i] = nearest(p, &centroids).0;
    }
    (centroids, labels)
}

/// Class-based TF-IDF: weight(t, c) = tf(t, c) * ln(1 + A / tf(t)), where
/// tf(t, c) counts t in the concatenated documents of cluster c, tf(t) is its
/// total count over all clusters, and A is the average token count per
/// cluster.
pub fn ctfidf_weights(
    streams: &[TokenStream],
    labels: &[usize],
    k: usize,
) -> Vec<BTreeMap<String, f64>> {
    let mut per_cluster: Vec<BTreeMap<&str, f64>> = vec![BTreeMap::new(); k];
    let mut total: BTreeMap<&str, f64> = BTreeMap::new();
    let mut token_count = 0usize;
    for (stream, &label) in streams.iter().zip(labels) {
        for token in &stream.tokens {
            *per_cluster[label].entry(token).or_insert(0.0) += 1.0;
            *total.entry(token).or_insert(0.0) += 1.0;
            token_count += 1;
        }
    }
    let avg_per_cluster = token_count as f64 / k as f64;
    per_cluster
        .into_iter()
        .map(|cluster| {
            cluster
                .into_iter()
                .map(|(t, tf_tc)| {
                    let tf_t = total[t];
                    (t.to_string(), tf_tc * (1.0 + avg_per_cluster / tf_t).ln())
                })
                .collect()
        })
        .collect()
}

fn top_terms(weights: &BTreeMap<String, f64>, n: usize) -> Vec<(String, f64)> {
    let mut terms: Vec<(String, f64)> = weights.iter().map(|(t, &w)| (t.clone(), w)).collect();
    terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    terms.truncate(n);
    terms
}

fn train_digest(streams: &[TokenStream]) -> String {
    let mut hasher = Sha256::new();
    for s in streams {
        hasher.update(s.report_id.as_bytes());
        hasher.update([0u8]);
    }
    format!("{:x}", hasher.finalize())
}

/// Fits k-means over the embeddings of the non-empty training streams and
/// derives per-topic c-TF-IDF terms. Returns the model and the fit-time
/// cluster label of every input stream (empty streams get the label their
/// zero vector maps to).
pub fn fit_topics(
    train_streams: &[TokenStream],
    k: usize,
    backend: &EmbeddingBackend,
    seed: u64,
) -> Result<(TopicModel, Vec<usize>), TopicError> {
    assert!(k >= 2, "topic count must be >= 2");
    let embeddings: Vec<Vec<f64>> = train_streams
        .iter()
        .map(|s| backend.embed(s))
        .collect::<Result<_, _>>()?;
    let non_empty: Vec<usize> = (0..train_streams.len())
        .filter(|&i| !train_streams[i].tokens.is_empty())
        .collect();
    if non_empty.len() < k {
        return Err(TopicError::TooFewDocuments { k, got: non_empty.len() });
    }
    let points: Vec<Vec<f64>> = non_empty.iter().map(|&i| embeddings[i].clone()).collect();
    let (centroids, point_labels) = kmeans(&points, k, seed);

    let mut labels = vec![0usize; train_streams.len()];
    for (slot, &i) in non_empty.iter().enumerate() {
        labels[i] = point_labels[slot];
    }
    for i in 0..train_streams.len() {
        if train_streams[i].tokens.is_empty() {
            labels[i] = nearest(&embeddings[i], &centroids).0;
        }
    }

    let weights = ctfidf_weights(train_streams, &labels, k);
    let topic_terms: Vec<Vec<(String, f64)>> =
        weights.iter().map(|w| top_terms(w, TOP_TERMS)).collect();

    let (vocabulary, idf, n_docs, hash_seed, dimension) = match backend {
        EmbeddingBackend::HashedTfidf(b) => {
            let vocabulary: BTreeMap<String, usize> =
                b.idf.keys().cloned().enumerate().map(|(i, t)| (t, i)).collect();
            let idf: Vec<f64> = b.idf.values().copied().collect();
            (vocabulary, idf, b.n_docs, b.hash_seed, b.dimension)
        }
        EmbeddingBackend::ExternalVectors(b) => {
            (BTreeMap::new(), Vec::new(), train_streams.len(), 0, b.dimension)
        }
    };

    let model = TopicModel {
        k,
        dimension,
        seed,
        centroids,
        topic_terms,
        vocabulary,
        idf,
        n_docs,
        hash_seed,
        fitted_on: train_digest(train_streams),
    };
    Ok((model, labels))
}

/// Nearest-centroid assignment; ties break toward the lowest topic id (the
/// scan keeps the first minimum).
pub fn assign_topic(
    stream: &TokenStream,
    model: &TopicModel,
    backend: &EmbeddingBackend,
) -> Result<usize, TopicError> {
    let embedding = backend.embed(stream)?;
    Ok(nearest(&embedding, &model.centroids).0)
}

impl TopicModel {
    /// Rebuilds the hashed tf-idf backend stored with the model.
    pub fn backend(&self) -> EmbeddingBackend {
        let idf = self
            .vocabulary
            .iter()
            .map(|(t, &i)| (t.clone(), self.idf[i]))
            .collect();
        EmbeddingBackend::HashedTfidf(HashedTfidf {
            dimension: self.dimension,
            hash_seed: self.hash_seed,
            idf,
            n_docs: self.n_docs,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TopicError> {
        let file = std::fs::File::create(path)?;
        let mut w = CrcWriter::new(std::io::BufWriter::new(file));
        self.write(&mut w)?;
        let mut inner = w.finish()?;
        inner.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, w: &mut CrcWriter<W>) -> Result<(), BinError> {
        w.write_str(TOPIC_MAGIC)?;
        w.write_u64(self.k as u64)?;
        w.write_u64(self.dimension as u64)?;
        w.write_u64(self.seed)?;
        w.write_u64(self.hash_seed)?;
        w.write_u64(self.n_docs as u64)?;
        for c in &self.centroids {
            w.write_f64_slice(c)?;
        }
        w.write_u64(self.vocabulary.len() as u64)?;
        for (term, &idx) in &self.vocabulary {
            w.write_str(term)?;
            w.write_u64(idx as u64)?;
        }
        w.write_f64_slice(&self.idf)?;
        for terms in &self.topic_terms {
            w.write_u64(terms.len() as u64)?;
            for (term, weight) in terms {
                w.write_str(term)?;
                w.write_f64(*weight)?;
            }
        }
        w.write_str(&self.fitted_on)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TopicError> {
        let file = std::fs::File::open(path)?;
        let mut r = CrcReader::new(std::io::BufReader::new(file))?;
        Ok(Self::read(&mut r)?)
    }

    pub fn read(r: &mut CrcReader) -> Result<Self, BinError> {
        r.expect_magic(TOPIC_MAGIC)?;
        let k = r.read_u64()? as usize;
        let dimension = r.read_u64()? as usize;
        let seed = r.read_u64()?;
        let hash_seed = r.read_u64()?;
        let n_docs = r.read_u64()? as usize;
        let mut centroids = Vec::with_capacity(k);
        for _ in 0..k {
            centroids.push(r.read_f64_vec()?);
        }
        let vocab_len = r.read_u64()? as usize;
        let mut vocabulary = BTreeMap::new();
        for _ in 0..vocab_len {
            let term = r.read_str()?;
            let idx = r.read_u64()? as usize;
            vocabulary.insert(term, idx);
        }
        let idf = r.read_f64_vec()?;
        let mut topic_terms = Vec::with_capacity(k);
        for _ in 0..k {
            let n = r.read_u64()? as usize;
            let mut terms = Vec::with_capacity(n);
            for _ in 0..n {
                let term = r.read_str()?;
                let weight = r.read_f64()?;
                terms.push((term, weight));
            }
            topic_terms.push(terms);
        }
        let fitted_on = r.read_str()?;
        Ok(TopicModel {
            k,
            dimension,
            seed,
            centroids,
            topic_terms,
            vocabulary,
            idf,
            n_docs,
            hash_seed,
            fitted_on,
        })
    }
}
