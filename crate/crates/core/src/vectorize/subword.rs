//! Character n-gram ("subword") skip-gram embeddings with negative sampling.
//!
//! A word is wrapped in `<` and `>` and decomposed into all of its character
//! n-grams plus the wrapped word itself. Each entry is hashed (FNV-1a, 32 bit)
//! into a fixed bucket table of input vectors; a word's input representation is
//! built from the rows of its entries. Context words have their own output
//! vectors. Bucket rows are materialized on first use and start from a
//! deterministic per-bucket uniform draw in `[-1/dim, 1/dim)`, so the table
//! behaves like a fully initialized dense table without allocating it.

use std::borrow::Cow;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::embed::{TokenEmbedder, TokenEmbedding};
use super::vocab::{build_vocabulary, Vocabulary};
use super::VectorizeError;
use crate::rng::{derive_seed, SeededRng};

/// Boundary-wrapped n-grams of `word` for every `n` in `min_n..=max_n`, ordered by
/// `n` then position, followed by the wrapped word itself. An n-gram equal to the
/// wrapped word is emitted only once, as the final whole-word entry.
pub fn ngram_decompose(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let whole: String = wrapped.iter().collect();
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n {
        if n > wrapped.len() {
            break;
        }
        for w in wrapped.windows(n) {
            if n == wrapped.len() {
                continue;
            }
            out.push(w.iter().collect());
        }
    }
    out.push(whole);
    out
}

/// 32-bit FNV-1a over the UTF-8 bytes.
pub fn fnv1a(s: &str) -> u32 {
    let mut h: u32 = 0x811C_9DC5;
    for &b in s.as_bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// How a token vector is composed from its entry rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubwordParams {
    pub dim: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate; decays linearly to zero over all epochs.
    pub learning_rate: f64,
    pub seed: u64,
    pub buckets: u32,
    pub min_count: u64,
    /// Frequent-word subsampling threshold; disabled when `None`.
    pub subsample: Option<f64>,
    /// Composition used by `embed_token`. Training always sums.
    pub composition: Composition,
}

impl Default for SubwordParams {
    fn default() -> Self {
        SubwordParams {
            dim: 300,
            min_n: 3,
            max_n: 6,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.05,
            seed: 42,
            buckets: 1 << 21,
            min_count: 1,
            subsample: None,
            composition: Composition::Mean,
        }
    }
}

impl SubwordParams {
    pub fn validate(&self) -> Result<(), VectorizeError> {
        let bad = |m: &str| Err(VectorizeError::InvalidParams(m.to_string()));
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if self.min_n == 0 || self.min_n > self.max_n {
            return bad("n-gram range must satisfy 1 <= min_n <= max_n");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.buckets == 0 {
            return bad("bucket count must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.subsample.is_some_and(|t| t.is_nan() || t <= 0.0) {
            return bad("subsampling threshold must be positive");
        }
        Ok(())
    }
}

/// Negative-sampling loss of one (center, context) pair:
/// `-ln σ(u_o·h) - Σ_k ln σ(-u_k·h)`.
pub fn pair_loss(hidden: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(positive, hidden));
    for n in negatives {
        loss -= log_sigmoid(-dot(n, hidden));
    }
    loss
}

/// Analytic gradients of [`pair_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradients {
    /// With respect to the hidden vector, and therefore to every entry row summed into it.
    pub hidden: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradients(hidden: &[f64], positive: &[f64], negatives: &[&[f64]]) -> PairGradients {
    let dim = hidden.len();
    let mut grad_h = vec![0.0; dim];
    // d/ds [-ln σ(s)] = σ(s) - 1
    let gp = sigmoid(dot(positive, hidden)) - 1.0;
    axpy(&mut grad_h, gp, positive);
    let grad_pos = hidden.iter().map(|h| gp * h).collect();
    let mut grad_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        // d/ds [-ln σ(-s)] = σ(s)
        let gn = sigmoid(dot(n, hidden));
        axpy(&mut grad_h, gn, n);
        grad_negs.push(hidden.iter().map(|h| gn * h).collect());
    }
    PairGradients {
        hidden: grad_h,
        positive: grad_pos,
        negatives: grad_negs,
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean pair loss on a fixed evaluation sample before any update.
    pub initial_loss: f64,
    /// Same evaluation after the final epoch.
    pub final_loss: f64,
    /// Mean running pair loss observed during each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct SubwordEmbeddingModel {
    params: SubwordParams,
    vocabulary: Vocabulary,
    /// Materialized bucket rows.
    input: HashMap<u32, Vec<f64>>,
    /// `vocabulary.len() * dim` context vectors, row-major.
    output: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    params: SubwordParams,
    vocabulary: Vocabulary,
    input: Vec<(u32, Vec<f64>)>,
    output: Vec<f64>,
}

impl TryFrom<ModelRepr> for SubwordEmbeddingModel {
    type Error = VectorizeError;

    fn try_from(r: ModelRepr) -> Result<Self, Self::Error> {
        r.params.validate()?;
        let dim = r.params.dim;
        if r.output.len() != r.vocabulary.len() * dim
            || r.input.iter().any(|(b, v)| v.len() != dim || *b >= r.params.buckets)
        {
            return Err(VectorizeError::InvalidParams("vector table shape mismatch".into()));
        }
        Ok(SubwordEmbeddingModel {
            params: r.params,
            vocabulary: r.vocabulary,
            input: r.input.into_iter().collect(),
            output: r.output,
        })
    }
}

impl From<SubwordEmbeddingModel> for ModelRepr {
    fn from(m: SubwordEmbeddingModel) -> Self {
        let mut input: Vec<(u32, Vec<f64>)> = m.input.into_iter().collect();
        input.sort_unstable_by_key(|e| e.0);
        ModelRepr {
            params: m.params,
            vocabulary: m.vocabulary,
            input,
            output: m.output,
        }
    }
}

impl SubwordEmbeddingModel {
    pub fn params(&self) -> &SubwordParams {
        &self.params
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Bucket ids of every entry of `word`.
    pub fn entry_buckets(&self, word: &str) -> Vec<u32> {
        ngram_decompose(word, self.params.min_n, self.params.max_n)
            .iter()
            .map(|g| fnv1a(g) % self.params.buckets)
            .collect()
    }

    fn initial_row(&self, bucket: u32) -> Vec<f64> {
        initial_row(&self.params, bucket)
    }

    pub fn input_row(&self, bucket: u32) -> Cow<'_, [f64]> {
        match self.input.get(&bucket) {
            Some(row) => Cow::Borrowed(row),
            None => Cow::Owned(self.initial_row(bucket)),
        }
    }

    pub fn output_row(&self, word: usize) -> &[f64] {
        let d = self.params.dim;
        &self.output[word * d..(word + 1) * d]
    }

    /// Sum of the word's entry rows (the training-time center representation).
    pub fn hidden(&self, word: &str) -> Vec<f64> {
        let mut h = vec![0.0; self.params.dim];
        for b in self.entry_buckets(word) {
            axpy(&mut h, 1.0, &self.input_row(b));
        }
        h
    }

    /// Vector of `word` under the configured composition; defined for any word.
    pub fn word_vector(&self, word: &str, composition: Composition) -> Vec<f64> {
        let buckets = self.entry_buckets(word);
        let mut v = vec![0.0; self.params.dim];
        for &b in &buckets {
            axpy(&mut v, 1.0, &self.input_row(b));
        }
        if composition == Composition::Mean {
            let n = buckets.len() as f64;
            v.iter_mut().for_each(|x| *x /= n);
        }
        v
    }

    pub fn materialized_rows(&self) -> usize {
        self.input.len()
    }
}

fn initial_row(params: &SubwordParams, bucket: u32) -> Vec<f64> {
    let mut rng = SeededRng::new(derive_seed(params.seed, u64::from(bucket)));
    let bound = 1.0 / params.dim as f64;
    (0..params.dim).map(|_| rng.uniform(-bound, bound)).collect()
}

impl TokenEmbedder for SubwordEmbeddingModel {
    fn dim(&self) -> usize {
        self.params.dim
    }

    fn embed_token(&self, word: &str) -> TokenEmbedding {
        TokenEmbedding {
            vector: self.word_vector(word, self.params.composition),
            missing: false,
        }
    }
}

/// Unigram^0.75 sampler over vocabulary indices.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(vocab: &Vocabulary) -> Self {
        let mut acc = 0.0;
        let cumulative = vocab
            .frequencies()
            .iter()
            .map(|&f| {
                acc += (f as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn draw(&self, rng: &mut SeededRng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.unit() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// `count` draws that differ from `target`; empty when the vocabulary has one word.
    fn draw_excluding(&self, rng: &mut SeededRng, target: usize, count: usize) -> Vec<usize> {
        if self.cumulative.len() < 2 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let n = self.draw(rng);
            if n != target {
                out.push(n);
            }
        }
        out
    }
}

struct Trainer<'a> {
    params: &'a SubwordParams,
    word_buckets: Vec<Vec<u32>>,
    input: HashMap<u32, Vec<f64>>,
    output: Vec<f64>,
    sampler: NegativeSampler,
}

impl Trainer<'_> {
    fn hidden(&self, word: usize) -> Vec<f64> {
        let mut h = vec![0.0; self.params.dim];
        for b in &self.word_buckets[word] {
            match self.input.get(b) {
                Some(row) => axpy(&mut h, 1.0, row),
                None => axpy(&mut h, 1.0, &initial_row(self.params, *b)),
            }
        }
        h
    }

    fn out_row(&self, w: usize) -> &[f64] {
        let d = self.params.dim;
        &self.output[w * d..(w + 1) * d]
    }

    fn pair_loss(&self, center: usize, context: usize, negatives: &[usize]) -> f64 {
        let h = self.hidden(center);
        let negs: Vec<&[f64]> = negatives.iter().map(|&n| self.out_row(n)).collect();
        pair_loss(&h, self.out_row(context), &negs)
    }

    /// One SGD step on the pair; returns the loss before the update.
    fn step(&mut self, center: usize, context: usize, negatives: &[usize], lr: f64) -> f64 {
        let h = self.hidden(center);
        let d = self.params.dim;
        let (loss, grads) = {
            let negs: Vec<&[f64]> = negatives.iter().map(|&n| self.out_row(n)).collect();
            (
                pair_loss(&h, self.out_row(context), &negs),
                pair_gradients(&h, self.out_row(context), &negs),
            )
        };
        axpy(&mut self.output[context * d..(context + 1) * d], -lr, &grads.positive);
        for (&n, g) in negatives.iter().zip(&grads.negatives) {
            axpy(&mut self.output[n * d..(n + 1) * d], -lr, g);
        }
        for &b in &self.word_buckets[center] {
            let params = self.params;
            let row = self.input.entry(b).or_insert_with(|| initial_row(params, b));
            axpy(row, -lr, &grads.hidden);
        }
        loss
    }
}

/// Trains subword skip-gram embeddings on tokenized documents.
///
/// Per epoch, documents are visited in order; for each position a window radius
/// is drawn uniformly from `1..=window` and every context word in range forms a
/// pair with the center. Each pair gets `negatives` noise words drawn from the
/// unigram^0.75 distribution. The learning rate decays linearly from its start
/// value to zero over all center positions of all epochs. All draws come from one
/// generator seeded with `params.seed`.
pub fn train_skipgram<D, T>(
    docs: &[D],
    params: &SubwordParams,
) -> Result<(SubwordEmbeddingModel, TrainReport), VectorizeError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    params.validate()?;
    let vocabulary = build_vocabulary(docs, params.min_count)?;
    if vocabulary.is_empty() {
        return Err(VectorizeError::EmptyVocabulary {
            min_count: params.min_count,
        });
    }
    let ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.as_ref().iter().filter_map(|t| vocabulary.index(t.as_ref())).collect())
        .collect();

    let template = SubwordEmbeddingModel {
        params: params.clone(),
        vocabulary: vocabulary.clone(),
        input: HashMap::new(),
        output: Vec::new(),
    };
    let mut trainer = Trainer {
        params,
        word_buckets: vocabulary.tokens().iter().map(|w| template.entry_buckets(w)).collect(),
        input: HashMap::new(),
        output: vec![0.0; vocabulary.len() * params.dim],
        sampler: NegativeSampler::new(&vocabulary),
    };

    let eval_pairs = evaluation_pairs(&ids, params, &trainer.sampler);
    let evaluate = |t: &Trainer| -> f64 {
        if eval_pairs.is_empty() {
            return 0.0;
        }
        let total: f64 = eval_pairs.iter().map(|(c, o, n)| t.pair_loss(*c, *o, n)).sum();
        total / eval_pairs.len() as f64
    };
    let initial_loss = evaluate(&trainer);

    let total_words: usize = ids.iter().map(Vec::len).sum();
    let total_steps = (total_words * params.epochs).max(1) as f64;
    let token_total: u64 = vocabulary.frequencies().iter().sum();
    let mut rng = SeededRng::new(params.seed);
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut pairs_per_epoch = Vec::with_capacity(params.epochs);

    for epoch in 0..params.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for doc in &ids {
            let kept: Vec<usize> = match params.subsample {
                Some(t) => doc
                    .iter()
                    .copied()
                    .filter(|&w| {
                        let f = vocabulary.frequency(w) as f64 / token_total as f64;
                        let keep = (t / f).sqrt() + t / f;
                        rng.unit() < keep
                    })
                    .collect(),
                None => doc.clone(),
            };
            for pos in 0..kept.len() {
                let lr = params.learning_rate * (1.0 - processed as f64 / total_steps);
                processed += 1;
                let radius = rng.below(params.window) + 1;
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(kept.len() - 1);
                for c in lo..=hi {
                    if c == pos {
                        continue;
                    }
                    let negatives =
                        trainer.sampler.draw_excluding(&mut rng, kept[c], params.negatives);
                    let loss = trainer.step(kept[pos], kept[c], &negatives, lr);
                    if !loss.is_finite() {
                        return Err(VectorizeError::NonFiniteLoss {
                            epoch,
                            step: processed,
                        });
                    }
                    loss_sum += loss;
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
        pairs_per_epoch.push(pairs);
    }

    let final_loss = evaluate(&trainer);
    let model = SubwordEmbeddingModel {
        input: trainer.input,
        output: trainer.output,
        ..template
    };
    Ok((
        model,
        TrainReport {
            initial_loss,
            final_loss,
            epoch_losses,
            pairs_per_epoch,
        },
    ))
}

/// Every in-window pair at full radius with fixed negatives, capped at 20 000
/// pairs (evenly strided) to bound evaluation cost.
fn evaluation_pairs(
    ids: &[Vec<usize>],
    params: &SubwordParams,
    sampler: &NegativeSampler,
) -> Vec<(usize, usize, Vec<usize>)> {
    const CAP: usize = 20_000;
    let mut all = Vec::new();
    for doc in ids {
        for pos in 0..doc.len() {
            let lo = pos.saturating_sub(params.window);
            let hi = (pos + params.window).min(doc.len() - 1);
            for c in lo..=hi {
                if c != pos {
                    all.push((doc[pos], doc[c]));
                }
            }
        }
    }
    let stride = all.len().div_ceil(CAP).max(1);
    let mut rng = SeededRng::new(derive_seed(params.seed, 0xE7A1));
    all.into_iter()
        .step_by(stride)
        .map(|(c, o)| (c, o, sampler.draw_excluding(&mut rng, o, params.negatives)))
        .collect()
}
