use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::walk::WalkCorpus;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::linalg::{dot, Matrix};
use crate::seed::{self, SeededRng};

/// Skip-gram with negative sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipGramParams {
    pub dim: usize,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        Self {
            dim: 128,
            window: 5,
            negatives_per_positive: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl SkipGramParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("sg.dim", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::param("sg.window", "must be at least 1"));
        }
        if self.negatives_per_positive == 0 {
            return Err(Error::param("sg.negatives", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("sg.lr", "must be positive"));
        }
        Ok(())
    }
}

/// One vector per node id, rows ordered by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<NodeId>,
    rows: Matrix,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<NodeId>, rows: Matrix) -> Result<Self> {
        if ids.len() != rows.rows() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} ids for {} rows",
                ids.len(),
                rows.rows()
            )));
        }
        if !ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::DimensionMismatch("embedding ids must be strictly increasing".into()));
        }
        if !rows.is_finite() {
            return Err(Error::NonFinite { what: "embedding", iteration: 0 });
        }
        Ok(Self { ids, rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn get(&self, id: NodeId) -> Option<&[f64]> {
        self.ids.binary_search(&id).ok().map(|i| self.rows.row(i))
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x > 30.0 {
        1.0
    } else if x < -30.0 {
        0.0
    } else {
        1.0 / (1.0 + libm::exp(-x))
    }
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

/// `grad += g·out; out += g·inp`.
#[inline(never)]
fn accumulate_pair(grad: &mut [f64], out: &mut [f64], inp: &[f64], g: f64) {
    for ((gk, ok), ik) in grad.iter_mut().zip(out.iter_mut()).zip(inp) {
        *gk += g * *ok;
        *ok += g * ik;
    }
}

/// Skip-gram model state: input vectors (the embeddings) and output vectors.
#[derive(Debug, Clone)]
pub struct SkipGram {
    params: SkipGramParams,
    vocab: Vec<NodeId>,
    /// node id → vocabulary slot.
    slot: Vec<Option<usize>>,
    input: Matrix,
    output: Matrix,
    /// Cumulative unigram^0.75 noise distribution over vocabulary slots.
    noise_cdf: Vec<f64>,
}

impl SkipGram {
    /// Vocabulary from the corpus; input vectors uniform on
    /// `[-0.5/dim, 0.5/dim]`, output vectors zero.
    pub fn new(corpus: &WalkCorpus, params: SkipGramParams) -> Result<Self> {
        params.validate()?;
        if corpus.token_count() == 0 {
            return Err(Error::EmptyInput("walk corpus"));
        }
        let max_id = corpus
            .walks
            .iter()
            .flatten()
            .map(|n| n.0)
            .max()
            .unwrap_or(0);
        let mut counts = vec![0usize; max_id + 1];
        for n in corpus.walks.iter().flatten() {
            counts[n.0] += 1;
        }
        let mut vocab = Vec::new();
        let mut slot = vec![None; max_id + 1];
        for (id, &c) in counts.iter().enumerate() {
            if c > 0 {
                slot[id] = Some(vocab.len());
                vocab.push(NodeId(id));
            }
        }
        let mut acc = 0.0;
        let mut noise_cdf = Vec::with_capacity(vocab.len());
        for id in &vocab {
            acc += libm::pow(counts[id.0] as f64, 0.75);
            noise_cdf.push(acc);
        }
        for v in &mut noise_cdf {
            *v /= acc;
        }

        let dim = params.dim;
        let bound = 0.5 / dim as f64;
        let mut rng = seed::rng_for(params.seed, "skipgram-init");
        let input = Matrix::from_vec(
            vocab.len(),
            dim,
            (0..vocab.len() * dim)
                .map(|_| rng.random_range(-bound..bound))
                .collect(),
        );
        let output = Matrix::zeros(vocab.len(), dim);
        Ok(Self {
            params,
            vocab,
            slot,
            input,
            output,
            noise_cdf,
        })
    }

    pub fn vocabulary(&self) -> &[NodeId] {
        &self.vocab
    }

    fn sample_noise(&self, rng: &mut SeededRng) -> usize {
        let u: f64 = rng.random();
        self.noise_cdf
            .partition_point(|&c| c <= u)
            .min(self.vocab.len() - 1)
    }

    fn slots(&self, walk: &[NodeId]) -> Vec<usize> {
        walk.iter()
            .map(|n| self.slot[n.0].expect("corpus node outside vocabulary"))
            .collect()
    }

    /// Run all configured epochs over the corpus, single-threaded. The
    /// learning rate decays linearly to 1e-4 of its start value; each
    /// center uses a window drawn uniformly from `1..=window`.
    pub fn train(&mut self, corpus: &WalkCorpus) {
        let total = (corpus.token_count() * self.params.epochs) as f64;
        let lr0 = self.params.learning_rate;
        let mut rng = seed::rng_for(self.params.seed, "skipgram-train");
        let mut processed = 0usize;
        let mut grad = vec![0.0; self.params.dim];
        for _ in 0..self.params.epochs {
            for walk in &corpus.walks {
                let ids = self.slots(walk);
                for (i, &center) in ids.iter().enumerate() {
                    let alpha = lr0 * f64::max(1.0 - processed as f64 / (total + 1.0), 1e-4);
                    processed += 1;
                    let reach = self.params.window - rng.random_range(0..self.params.window);
                    let lo = i.saturating_sub(reach);
                    let hi = (i + reach).min(ids.len() - 1);
                    for (j, &context) in ids.iter().enumerate().take(hi + 1).skip(lo) {
                        if j == i {
                            continue;
                        }
                        grad.fill(0.0);
                        for s in 0..=self.params.negatives_per_positive {
                            let (target, label) = if s == 0 {
                                (context, 1.0)
                            } else {
                                let t = self.sample_noise(&mut rng);
                                if t == context {
                                    continue;
                                }
                                (t, 0.0)
                            };
                            let inp = self.input.row(center);
                            let out = self.output.row_mut(target);
                            let g = (label - sigmoid(dot(inp, out))) * alpha;
                            accumulate_pair(&mut grad, out, inp, g);
                        }
                        for (ik, gk) in self.input.row_mut(center).iter_mut().zip(&grad) {
                            *ik += gk;
                        }
                    }
                }
            }
        }
    }

    /// Mean negative-sampling loss over every `(center, context)` pair within
    /// the full window, with negatives drawn from a stream seeded by
    /// `eval_seed`. Two calls with the same seed see the same negatives.
    pub fn objective(&self, corpus: &WalkCorpus, eval_seed: u64) -> f64 {
        let mut rng = seed::rng_for(eval_seed, "skipgram-objective");
        let w = self.params.window;
        let mut total = 0.0;
        let mut pairs = 0usize;
        for walk in &corpus.walks {
            let ids = self.slots(walk);
            for (i, &center) in ids.iter().enumerate() {
                let lo = i.saturating_sub(w);
                let hi = (i + w).min(ids.len() - 1);
                for (j, &context) in ids.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let inp = self.input.row(center);
                    let mut loss = -log_sigmoid(dot(inp, self.output.row(context)));
                    for _ in 0..self.params.negatives_per_positive {
                        let t = self.sample_noise(&mut rng);
                        loss -= log_sigmoid(-dot(inp, self.output.row(t)));
                    }
                    total += loss;
                    pairs += 1;
                }
            }
        }
        if pairs == 0 {
            0.0
        } else {
            total / pairs as f64
        }
    }

    pub fn table(&self) -> EmbeddingTable {
        EmbeddingTable {
            ids: self.vocab.clone(),
            rows: self.input.clone(),
        }
    }
}

pub fn train_skipgram(corpus: &WalkCorpus, params: &SkipGramParams) -> Result<EmbeddingTable> {
    let mut model = SkipGram::new(corpus, *params)?;
    model.train(corpus);
    let table = model.table();
    if !table.rows.is_finite() {
        return Err(Error::NonFinite {
            what: "skip-gram embedding",
            iteration: params.epochs,
        });
    }
    Ok(table)
}
