//! Embedding-based semantic matching with a small trainable network.
//!
//! Scoring two token sequences works in three steps:
//!
//! 1. A matching matrix `M[i][j] = dot(vec(a_i), vec(b_j))` over L2-normalized
//!    word embeddings.
//! 2. The `k` strongest entries of `M` (padded with -1.0 when fewer exist),
//!    sorted descending and pushed through a softmax. Only the strongest
//!    signals survive, which makes the score independent of sequence length.
//! 3. A feedforward network over those `k` signals: two tanh hidden layers
//!    and a linear output node.
//!
//! Training is pairwise with a hinge objective
//! `L = max(0, margin - s(q, d+) + s(q, d-))`, optimized with ADAM. Each
//! positive example is paired with a sampled negative for the same query.
//! Embeddings can either be trained along with the network (the default for
//! randomly initialized tables) or loaded frozen from a vectors file.
//!
//! Unknown words map to a deterministic unit vector derived from the word's
//! hash and the table seed, so out-of-vocabulary scoring is reproducible.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::analyzer::Analyzer;
use crate::corpus::{EntityRepr, EntityStore, RelationalTable};
use crate::error::{Error, Result};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
    } else {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Word vectors, all stored L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    seed: u64,
    /// Vectors updated by training. Words outside this map fall back to the
    /// deterministic hash-seeded vector.
    vectors: BTreeMap<String, Vec<f64>>,
    pub trainable: bool,
}

impl EmbeddingTable {
    /// Fresh trainable table: every vocabulary word gets its deterministic
    /// hash-seeded unit vector as the starting point.
    pub fn random_init<I, S>(vocab: I, dim: usize, seed: u64) -> EmbeddingTable
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = EmbeddingTable { dim, seed, vectors: BTreeMap::new(), trainable: true };
        for word in vocab {
            let v = table.seeded_vector(word.as_ref());
            table.vectors.insert(word.as_ref().to_string(), v);
        }
        table
    }

    /// Loads `word v1 .. vd` lines; vectors are normalized and frozen.
    pub fn from_text<R: BufRead>(reader: R, seed: u64) -> Result<EmbeddingTable> {
        let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut dim = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap().to_string();
            let mut v = Vec::new();
            for f in fields {
                v.push(f.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("bad vector component `{f}`"),
                })?);
            }
            if dim == 0 {
                dim = v.len();
            }
            if v.is_empty() || v.len() != dim {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {dim} components, got {}", v.len()),
                });
            }
            l2_normalize(&mut v);
            vectors.insert(word, v);
        }
        if dim == 0 {
            return Err(Error::InvalidInput("empty embedding file".to_string()));
        }
        Ok(EmbeddingTable { dim, seed, vectors, trainable: false })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn vocab_len(&self) -> usize {
        self.vectors.len()
    }

    /// Deterministic unit vector for a word outside the stored vocabulary.
    fn seeded_vector(&self, word: &str) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(fnv1a(word.as_bytes()) ^ self.seed);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        l2_normalize(&mut v);
        v
    }

    /// The vector for `word`: stored if known, hash-seeded otherwise.
    pub fn vector(&self, word: &str) -> Vec<f64> {
        match self.vectors.get(word) {
            Some(v) => v.clone(),
            None => self.seeded_vector(word),
        }
    }
}

/// `M[i][j] = dot(vec(a_i), vec(b_j))`. Errors on an empty side.
pub fn matching_matrix(
    emb: &EmbeddingTable,
    a: &[String],
    b: &[String],
) -> Result<Vec<Vec<f64>>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence("matching matrix needs tokens on both sides"));
    }
    let va: Vec<Vec<f64>> = a.iter().map(|t| emb.vector(t)).collect();
    let vb: Vec<Vec<f64>> = b.iter().map(|t| emb.vector(t)).collect();
    Ok(va
        .iter()
        .map(|ra| vb.iter().map(|rb| dot(ra, rb)).collect())
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flattened matrix positions of the k strongest entries (ties broken by
/// flat index), value -1.0 and no position for padding slots.
fn topk_select(matrix: &[Vec<f64>], k: usize) -> Vec<(Option<(usize, usize)>, f64)> {
    let mut flat: Vec<((usize, usize), f64)> = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            flat.push(((i, j), v));
        }
    }
    flat.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut picked: Vec<(Option<(usize, usize)>, f64)> =
        flat.into_iter().take(k).map(|(pos, v)| (Some(pos), v)).collect();
    while picked.len() < k {
        picked.push((None, -1.0));
    }
    picked
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// The k strongest matrix entries, descending, softmax-normalized.
pub fn topk_signals(matrix: &[Vec<f64>], k: usize) -> Vec<f64> {
    let picked = topk_select(matrix, k);
    softmax(&picked.iter().map(|(_, v)| *v).collect::<Vec<f64>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    /// Row-major weights: `out_dim` rows of `in_dim` entries.
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Layer {
    fn new(in_dim: usize, out_dim: usize, rng: &mut ChaCha20Rng) -> Layer {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..out_dim)
            .map(|_| (0..in_dim).map(|_| rng.gen_range(-limit..limit)).collect())
            .collect();
        Layer { w, b: vec![0.0; out_dim] }
    }

    fn zeroed(in_dim: usize, out_dim: usize) -> Layer {
        Layer { w: vec![vec![0.0; in_dim]; out_dim], b: vec![0.0; out_dim] }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(row, b)| dot(row, x) + b)
            .collect()
    }
}

/// Semantic matching model: embeddings, top-k signal selection, feedforward
/// scoring head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrrmTksModel {
    pub embedding: EmbeddingTable,
    pub k_signals: usize,
    hidden1: Layer,
    hidden2: Layer,
    out_w: Vec<f64>,
    out_b: f64,
}

struct Forward {
    /// Selected matrix cells (None = padding) with their raw values.
    picked: Vec<(Option<(usize, usize)>, f64)>,
    z: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    score: f64,
}

impl DrrmTksModel {
    pub fn new(
        embedding: EmbeddingTable,
        k_signals: usize,
        hidden: (usize, usize),
        seed: u64,
    ) -> DrrmTksModel {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let hidden1 = Layer::new(k_signals, hidden.0, &mut rng);
        let hidden2 = Layer::new(hidden.0, hidden.1, &mut rng);
        let limit = (6.0 / (hidden.1 + 1) as f64).sqrt();
        let out_w = (0..hidden.1).map(|_| rng.gen_range(-limit..limit)).collect();
        DrrmTksModel { embedding, k_signals, hidden1, hidden2, out_w, out_b: 0.0 }
    }

    /// All-zero network weights; scores 0 for every input. Test scaffolding.
    pub fn zeroed(embedding: EmbeddingTable, k_signals: usize, hidden: (usize, usize)) -> DrrmTksModel {
        DrrmTksModel {
            embedding,
            k_signals,
            hidden1: Layer::zeroed(k_signals, hidden.0),
            hidden2: Layer::zeroed(hidden.0, hidden.1),
            out_w: vec![0.0; hidden.1],
            out_b: 0.0,
        }
    }

    fn forward(&self, a: &[String], b: &[String]) -> Result<Forward> {
        let matrix = matching_matrix(&self.embedding, a, b)?;
        let picked = topk_select(&matrix, self.k_signals);
        let z = softmax(&picked.iter().map(|(_, v)| *v).collect::<Vec<f64>>());
        let u1 = self.hidden1.forward(&z);
        let a1: Vec<f64> = u1.iter().map(|v| v.tanh()).collect();
        let u2 = self.hidden2.forward(&a1);
        let a2: Vec<f64> = u2.iter().map(|v| v.tanh()).collect();
        let score = dot(&self.out_w, &a2) + self.out_b;
        Ok(Forward { picked, z, a1, a2, score })
    }

    /// Match score for two token sequences; 0.0 when either side is empty.
    pub fn score(&self, a: &[String], b: &[String]) -> f64 {
        self.score_with_flag(a, b).0
    }

    /// Like [`score`](Self::score) but reports whether the degenerate
    /// empty-input path was taken.
    pub fn score_with_flag(&self, a: &[String], b: &[String]) -> (f64, bool) {
        if a.is_empty() || b.is_empty() {
            return (0.0, true);
        }
        let f = self.forward(a, b).expect("both sides non-empty");
        (f.score, false)
    }

    /// Number of trainable scalars (embeddings included when trainable).
    pub fn param_count(&self) -> usize {
        let mut n = self.k_signals * self.hidden1.w.len()
            + self.hidden1.b.len()
            + self.hidden1.w.len() * self.hidden2.w.len()
            + self.hidden2.b.len()
            + self.out_w.len()
            + 1;
        if self.embedding.trainable {
            n += self.embedding.vocab_len() * self.embedding.dim();
        }
        n
    }

    /// Flattens all trainable parameters into one vector. Order: hidden1
    /// weights row-major, hidden1 bias, hidden2 weights, hidden2 bias, output
    /// weights, output bias, then stored embeddings in word order when the
    /// table is trainable.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for row in &self.hidden1.w {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.hidden1.b);
        for row in &self.hidden2.w {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.hidden2.b);
        out.extend_from_slice(&self.out_w);
        out.push(self.out_b);
        if self.embedding.trainable {
            for v in self.embedding.vectors.values() {
                out.extend_from_slice(v);
            }
        }
        out
    }

    /// Writes a flat parameter vector (as produced by `flatten_params`) back.
    pub fn assign_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter vector length");
        let mut it = flat.iter().copied();
        for row in &mut self.hidden1.w {
            for w in row.iter_mut() {
                *w = it.next().unwrap();
            }
        }
        for b in &mut self.hidden1.b {
            *b = it.next().unwrap();
        }
        for row in &mut self.hidden2.w {
            for w in row.iter_mut() {
                *w = it.next().unwrap();
            }
        }
        for b in &mut self.hidden2.b {
            *b = it.next().unwrap();
        }
        for w in &mut self.out_w {
            *w = it.next().unwrap();
        }
        self.out_b = it.next().unwrap();
        if self.embedding.trainable {
            for v in self.embedding.vectors.values_mut() {
                for x in v.iter_mut() {
                    *x = it.next().unwrap();
                }
            }
        }
    }

    /// Gradient of `score(a, b)` with respect to the flat parameter vector.
    /// Returns the score and `None` for the gradient when a side is empty.
    fn score_grad(&self, a: &[String], b: &[String]) -> (f64, Option<Vec<f64>>) {
        if a.is_empty() || b.is_empty() {
            return (0.0, None);
        }
        let f = self.forward(a, b).expect("both sides non-empty");
        let h2 = self.hidden2.w.len();
        let h1 = self.hidden1.w.len();

        // Backward pass, starting from ds/ds = 1.
        let d_out_w = f.a2.clone();
        let d_out_b = 1.0;
        let d_u2: Vec<f64> = (0..h2)
            .map(|i| self.out_w[i] * (1.0 - f.a2[i] * f.a2[i]))
            .collect();
        let mut d_a1 = vec![0.0; h1];
        for (i, du) in d_u2.iter().enumerate() {
            for (j, da) in d_a1.iter_mut().enumerate() {
                *da += self.hidden2.w[i][j] * du;
            }
        }
        let d_u1: Vec<f64> = (0..h1).map(|i| d_a1[i] * (1.0 - f.a1[i] * f.a1[i])).collect();
        let mut d_z = vec![0.0; self.k_signals];
        for (i, du) in d_u1.iter().enumerate() {
            for (j, dz) in d_z.iter_mut().enumerate() {
                *dz += self.hidden1.w[i][j] * du;
            }
        }
        // Softmax jacobian: dv = z ⊙ (dz - (dz · z)).
        let dot_dz_z = dot(&d_z, &f.z);
        let d_v: Vec<f64> = (0..self.k_signals).map(|i| f.z[i] * (d_z[i] - dot_dz_z)).collect();

        let mut grad = Vec::with_capacity(self.param_count());
        for du in &d_u1 {
            for zj in &f.z {
                grad.push(du * zj);
            }
        }
        grad.extend_from_slice(&d_u1);
        for du in &d_u2 {
            for aj in &f.a1 {
                grad.push(du * aj);
            }
        }
        grad.extend_from_slice(&d_u2);
        grad.extend_from_slice(&d_out_w);
        grad.push(d_out_b);

        if self.embedding.trainable {
            // Selected matrix entries route gradient into both word vectors.
            let dim = self.embedding.dim();
            let mut d_emb: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for (slot, (pos, _)) in f.picked.iter().enumerate() {
                let Some((i, j)) = pos else { continue };
                let g = d_v[slot];
                if g == 0.0 {
                    continue;
                }
                let (wa, wb) = (a[*i].as_str(), b[*j].as_str());
                let va = self.embedding.vector(wa);
                let vb = self.embedding.vector(wb);
                if self.embedding.contains(wa) {
                    let slot = d_emb.entry(wa).or_insert_with(|| vec![0.0; dim]);
                    for (d, x) in slot.iter_mut().zip(&vb) {
                        *d += g * x;
                    }
                }
                if self.embedding.contains(wb) {
                    let slot = d_emb.entry(wb).or_insert_with(|| vec![0.0; dim]);
                    for (d, x) in slot.iter_mut().zip(&va) {
                        *d += g * x;
                    }
                }
            }
            for (word, _) in self.embedding.vectors.iter() {
                match d_emb.get(word.as_str()) {
                    Some(v) => grad.extend_from_slice(v),
                    None => grad.extend(std::iter::repeat(0.0).take(dim)),
                }
            }
        }
        (f.score, Some(grad))
    }

    /// Hinge loss and its gradient for one (query, positive, negative) triple.
    pub fn loss_and_grads(
        &self,
        query: &[String],
        positive: &[String],
        negative: &[String],
        margin: f64,
    ) -> (f64, Vec<f64>) {
        let (s_pos, g_pos) = self.score_grad(query, positive);
        let (s_neg, g_neg) = self.score_grad(query, negative);
        let loss = (margin - s_pos + s_neg).max(0.0);
        let mut grad = vec![0.0; self.param_count()];
        if loss > 0.0 {
            if let Some(g) = g_pos {
                for (out, g) in grad.iter_mut().zip(&g) {
                    *out -= g;
                }
            }
            if let Some(g) = g_neg {
                for (out, g) in grad.iter_mut().zip(&g) {
                    *out += g;
                }
            }
        }
        (loss, grad)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(&ModelFile { version: 1, model: self.clone() })
            .expect("model serializes");
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<DrrmTksModel> {
        let bytes = std::fs::read(path)?;
        let file: ModelFile = serde_json::from_slice(&bytes).map_err(|e| {
            Error::CorruptBundle(format!("model file {}: {e}", path.display()))
        })?;
        if file.version != 1 {
            return Err(Error::CorruptBundle(format!(
                "model file {}: unsupported version {}",
                path.display(),
                file.version
            )));
        }
        Ok(file.model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    model: DrrmTksModel,
}

/// One labeled training example.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub query: Vec<String>,
    pub doc: Vec<String>,
    pub positive: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub epochs: usize,
    pub margin: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { learning_rate: 0.0001, epochs: 50, margin: 1.0, seed: 42 }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(n: usize) -> Adam {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Trains in place and returns the mean hinge loss per epoch.
///
/// Every epoch pairs each positive with a freshly sampled negative for the
/// same query and walks the shuffled triples one ADAM step at a time. Errors
/// when no query has both a positive and a negative example.
pub fn train(
    model: &mut DrrmTksModel,
    pairs: &[TrainingPair],
    opts: &TrainOptions,
) -> Result<Vec<f64>> {
    let mut groups: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (idx, pair) in pairs.iter().enumerate() {
        let key = pair.query.join("\u{1f}");
        let entry = groups.entry(key).or_default();
        if pair.positive {
            entry.0.push(idx);
        } else {
            entry.1.push(idx);
        }
    }
    let usable: Vec<&(Vec<usize>, Vec<usize>)> =
        groups.values().filter(|(p, n)| !p.is_empty() && !n.is_empty()).collect();
    if usable.is_empty() {
        return Err(Error::NoTrainingPairs);
    }

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut adam = Adam::new(model.param_count());
    let mut params = model.flatten_params();
    let mut curve = Vec::with_capacity(opts.epochs);
    for _ in 0..opts.epochs {
        let mut triples: Vec<(usize, usize)> = Vec::new();
        for (pos, neg) in groups.values() {
            if pos.is_empty() || neg.is_empty() {
                continue;
            }
            for &p in pos {
                let n = neg[rng.gen_range(0..neg.len())];
                triples.push((p, n));
            }
        }
        triples.shuffle(&mut rng);
        let mut total = 0.0;
        for (p, n) in &triples {
            let (loss, grads) = model.loss_and_grads(
                &pairs[*p].query,
                &pairs[*p].doc,
                &pairs[*n].doc,
                opts.margin,
            );
            total += loss;
            adam.step(&mut params, &grads, opts.learning_rate);
            model.assign_params(&params);
        }
        curve.push(total / triples.len() as f64);
    }
    Ok(curve)
}

/// Counters from training-pair generation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairGenReport {
    pub positives: usize,
    pub negatives: usize,
    /// Queries dropped because their token stream came out empty.
    pub empty_queries: usize,
    /// Queries that found no eligible negative label.
    pub starved_queries: usize,
}

fn balanced_pairs(
    queries: Vec<(Vec<String>, Vec<String>)>, // (query tokens, co-occurring labels)
    label_pool: &[String],
    analyzer: &Analyzer,
    seed: u64,
) -> (Vec<TrainingPair>, PairGenReport) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut report = PairGenReport::default();
    for (query, labels) in queries {
        let eligible: Vec<&String> =
            label_pool.iter().filter(|l| !labels.contains(l)).collect();
        if eligible.is_empty() && !labels.is_empty() {
            report.starved_queries += 1;
        }
        for label in &labels {
            let doc = analyzer.tokenize(label);
            if doc.is_empty() {
                continue;
            }
            out.push(TrainingPair { query: query.clone(), doc, positive: true });
            report.positives += 1;
            if !eligible.is_empty() {
                let pick = eligible[rng.gen_range(0..eligible.len())];
                out.push(TrainingPair {
                    query: query.clone(),
                    doc: analyzer.tokenize(pick),
                    positive: false,
                });
                report.negatives += 1;
            }
        }
    }
    (out, report)
}

fn label_pool(tables: &[RelationalTable], analyzer: &Analyzer) -> Vec<String> {
    let mut pool: Vec<String> = tables
        .iter()
        .flat_map(|t| t.headings.iter())
        .map(|h| analyzer.normalize_label(h))
        .filter(|l| !l.is_empty())
        .collect();
    pool.sort();
    pool.dedup();
    pool
}

/// (caption, heading label) pairs from the table corpus: co-occurrence is
/// positive, a sampled non-co-occurring label is negative, classes balanced.
pub fn schema_training_pairs(
    tables: &[RelationalTable],
    analyzer: &Analyzer,
    seed: u64,
) -> (Vec<TrainingPair>, PairGenReport) {
    let pool = label_pool(tables, analyzer);
    let mut seen = BTreeMap::new();
    let mut queries: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut empty_queries = 0usize;
    for t in tables {
        let q = analyzer.tokenize(&t.caption);
        if q.is_empty() {
            empty_queries += 1;
            continue;
        }
        let key = q.join("\u{1f}");
        let idx = *seen.entry(key).or_insert_with(|| {
            queries.push((q.clone(), Vec::new()));
            queries.len() - 1
        });
        for h in &t.headings {
            let l = analyzer.normalize_label(h);
            if !l.is_empty() && !queries[idx].1.contains(&l) {
                queries[idx].1.push(l);
            }
        }
    }
    for (_, labels) in queries.iter_mut() {
        labels.sort();
    }
    let (pairs, mut report) = balanced_pairs(queries, &pool, analyzer, seed);
    report.empty_queries = empty_queries;
    (pairs, report)
}

/// (entity representation, heading label) pairs: an entity is positive for
/// every heading of every table whose core column contains it.
pub fn entity_label_pairs(
    tables: &[RelationalTable],
    kb: &EntityStore,
    repr: EntityRepr,
    analyzer: &Analyzer,
    seed: u64,
) -> (Vec<TrainingPair>, PairGenReport) {
    let pool = label_pool(tables, analyzer);
    let mut co: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for t in tables {
        for e in &t.core_entities {
            let labels = co.entry(e.as_str()).or_default();
            for h in &t.headings {
                let l = analyzer.normalize_label(h);
                if !l.is_empty() && !labels.contains(&l) {
                    labels.push(l);
                }
            }
        }
    }
    let mut queries: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut empty_queries = 0usize;
    for (entity, mut labels) in co {
        let Some(ent) = kb.get(entity) else {
            empty_queries += 1;
            continue;
        };
        let q = ent.representation(repr, analyzer);
        if q.is_empty() {
            empty_queries += 1;
            continue;
        }
        labels.sort();
        queries.push((q, labels));
    }
    let (pairs, mut report) = balanced_pairs(queries, &pool, analyzer, seed);
    report.empty_queries = empty_queries;
    (pairs, report)
}

/// Which trained matcher a feature consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MatcherKind {
    EntityDescription,
    EntityProperties,
    EntityCombined,
    SchemaLabel,
}

impl MatcherKind {
    pub fn file_name(self) -> &'static str {
        match self {
            MatcherKind::EntityDescription => "entity-desc.model.json",
            MatcherKind::EntityProperties => "entity-props.model.json",
            MatcherKind::EntityCombined => "entity-combined.model.json",
            MatcherKind::SchemaLabel => "schema-label.model.json",
        }
    }
}

/// The trained matchers the ranking features draw on. Any may be absent;
/// consumers error with the feature name when a needed one is missing.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub entity_desc: Option<DrrmTksModel>,
    pub entity_props: Option<DrrmTksModel>,
    pub entity_combined: Option<DrrmTksModel>,
    pub schema_label: Option<DrrmTksModel>,
}

impl ModelSet {
    /// Loads whichever model files exist under `dir`.
    pub fn load_dir(dir: &Path) -> Result<ModelSet> {
        let mut set = ModelSet::default();
        for kind in [
            MatcherKind::EntityDescription,
            MatcherKind::EntityProperties,
            MatcherKind::EntityCombined,
            MatcherKind::SchemaLabel,
        ] {
            let path = dir.join(kind.file_name());
            if path.exists() {
                let model = DrrmTksModel::load(&path)?;
                set.set(kind, model);
            }
        }
        Ok(set)
    }

    pub fn set(&mut self, kind: MatcherKind, model: DrrmTksModel) {
        match kind {
            MatcherKind::EntityDescription => self.entity_desc = Some(model),
            MatcherKind::EntityProperties => self.entity_props = Some(model),
            MatcherKind::EntityCombined => self.entity_combined = Some(model),
            MatcherKind::SchemaLabel => self.schema_label = Some(model),
        }
    }

    pub fn require(&self, kind: MatcherKind, feature: &'static str) -> Result<&DrrmTksModel> {
        let slot = match kind {
            MatcherKind::EntityDescription => &self.entity_desc,
            MatcherKind::EntityProperties => &self.entity_props,
            MatcherKind::EntityCombined => &self.entity_combined,
            MatcherKind::SchemaLabel => &self.schema_label,
        };
        slot.as_ref().ok_or(Error::MissingModel { feature, model: kind.file_name() })
    }
}
