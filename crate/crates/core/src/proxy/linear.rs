//! Linear probe: softmax regression on frozen features, trained by mini-batch SGD.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::knn::check_pair;
use crate::error::{Error, Result};
use crate::store::{median, EmbeddingMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEvalConfig {
    pub learning_rates: Vec<f64>,
    pub steps: usize,
    /// Capped at the number of training rows.
    pub batch_size: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for LinearEvalConfig {
    fn default() -> Self {
        Self {
            learning_rates: vec![0.1, 0.01],
            steps: 2500,
            batch_size: 512,
            repeats: 5,
            seed: 0,
        }
    }
}

impl LinearEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() {
            return Err(Error::Config("at least one learning rate is required".into()));
        }
        if let Some(lr) = self.learning_rates.iter().find(|lr| !(lr.is_finite() && **lr > 0.0)) {
            return Err(Error::Config(format!("learning rate {lr} must be positive")));
        }
        if self.steps == 0 || self.batch_size == 0 || self.repeats == 0 {
            return Err(Error::Config("steps, batch_size and repeats must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn canonical(&self) -> String {
        let lrs: Vec<String> = self.learning_rates.iter().map(|lr| lr.to_string()).collect();
        format!(
            "linear;lrs={};steps={};batch={};repeats={};seed={};init=zero;optimizer=sgd;shuffle=chacha8",
            lrs.join(","),
            self.steps,
            self.batch_size,
            self.repeats,
            self.seed
        )
    }

    /// Shuffling RNG for one repeat. Every learning rate within a repeat sees
    /// the same batch sequence.
    fn repeat_rng(&self, repeat: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(repeat as u64);
        rng
    }
}

/// Weights (class-major, `n_classes x d`) and biases of a trained probe.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    d: usize,
    n_classes: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl LinearProbe {
    fn zeros(d: usize, n_classes: usize) -> Self {
        Self {
            d,
            n_classes,
            weights: vec![0.0; d * n_classes],
            bias: vec![0.0; n_classes],
        }
    }

    fn logits(&self, x: &[f32], out: &mut [f32]) {
        for (c, slot) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.d..(c + 1) * self.d];
            *slot = self.bias[c] + dot(w, x);
        }
    }

    /// Row `c` holds the weights of class `c`.
    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    /// Highest-scoring class; ties go to the lowest class index.
    pub fn predict(&self, x: &[f32]) -> u32 {
        let mut logits = vec![0.0; self.n_classes];
        self.logits(x, &mut logits);
        argmax(&logits) as u32
    }

    pub fn accuracy(&self, data: &EmbeddingMatrix) -> f64 {
        let mut logits = vec![0.0; self.n_classes];
        let correct = data
            .rows()
            .zip(data.labels())
            .filter(|(x, &y)| {
                self.logits(x, &mut logits);
                argmax(&logits) as u32 == y
            })
            .count();
        correct as f64 / data.n() as f64
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    // four independent accumulators let the compiler vectorise
    let mut acc = [0.0f32; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in ca.by_ref().zip(cb.by_ref()) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Endless stream of row indices: shuffled epochs, reshuffled on every pass.
struct EpochStream {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl EpochStream {
    fn new(n: usize, mut rng: ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Self { order, cursor: 0, rng }
    }

    fn fill(&mut self, batch: &mut [usize]) {
        for slot in batch {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            *slot = self.order[self.cursor];
            self.cursor += 1;
        }
    }
}

/// Trains a zero-initialised probe with constant-step SGD on the mean
/// softmax cross-entropy of each batch. No regularisation, no momentum.
pub fn train_probe(
    train: &EmbeddingMatrix,
    learning_rate: f64,
    steps: usize,
    batch_size: usize,
    rng: ChaCha8Rng,
) -> Result<LinearProbe> {
    let d = train.d();
    let n_classes = train.n_classes() as usize;
    let batch_size = batch_size.min(train.n());
    let mut probe = LinearProbe::zeros(d, n_classes);
    let mut grad_w = vec![0.0f32; d * n_classes];
    let mut grad_b = vec![0.0f32; n_classes];
    let mut probs = vec![0.0f32; n_classes];
    let mut batch = vec![0usize; batch_size];
    let mut stream = EpochStream::new(train.n(), rng);
    let scale = (learning_rate / batch_size as f64) as f32;

    for step in 0..steps {
        stream.fill(&mut batch);
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        grad_b.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0f64;

        for &i in &batch {
            let x = train.row(i);
            let y = train.labels()[i] as usize;
            probe.logits(x, &mut probs);
            let max = probs.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let target_logit = probs[y];
            let mut sum = 0.0f32;
            for p in probs.iter_mut() {
                *p = (*p - max).exp();
                sum += *p;
            }
            loss += f64::from(sum.ln() + max - target_logit);
            for (c, p) in probs.iter_mut().enumerate() {
                let g = *p / sum - if c == y { 1.0 } else { 0.0 };
                grad_b[c] += g;
                let gw = &mut grad_w[c * d..(c + 1) * d];
                for (gj, xj) in gw.iter_mut().zip(x) {
                    *gj += g * xj;
                }
            }
        }

        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "linear probe loss became non-finite at step {step} (learning rate {learning_rate})"
            )));
        }
        for (w, g) in probe.weights.iter_mut().zip(&grad_w) {
            *w -= scale * g;
        }
        for (b, g) in probe.bias.iter_mut().zip(&grad_b) {
            *b -= scale * g;
        }
    }
    if probe.weights.iter().chain(&probe.bias).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "linear probe weights became non-finite (learning rate {learning_rate})"
        )));
    }
    Ok(probe)
}

/// Per-repeat validation accuracies: for each repeat, the best over learning rates.
pub fn linear_eval_repeats(
    train: &EmbeddingMatrix,
    val: &EmbeddingMatrix,
    cfg: &LinearEvalConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_pair(train, val)?;
    if train.n_classes() < 2 {
        return Err(Error::Config("linear evaluation needs n_classes >= 2".into()));
    }
    if val.n_classes() > train.n_classes() {
        return Err(Error::DimensionMismatch(format!(
            "validation declares {} classes, training only {}",
            val.n_classes(),
            train.n_classes()
        )));
    }
    let n_lr = cfg.learning_rates.len();
    let runs: Vec<f64> = (0..cfg.repeats * n_lr)
        .into_par_iter()
        .map(|unit| {
            let (repeat, lr_index) = (unit / n_lr, unit % n_lr);
            let probe = train_probe(
                train,
                cfg.learning_rates[lr_index],
                cfg.steps,
                cfg.batch_size,
                cfg.repeat_rng(repeat),
            )?;
            Ok(probe.accuracy(val))
        })
        .collect::<Result<_>>()?;
    Ok(runs
        .chunks_exact(n_lr)
        .map(|per_lr| per_lr.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Median over repeats of the best-learning-rate validation accuracy.
pub fn linear_eval(train: &EmbeddingMatrix, val: &EmbeddingMatrix, cfg: &LinearEvalConfig) -> Result<f64> {
    let per_repeat = linear_eval_repeats(train, val, cfg)?;
    Ok(median(&per_repeat).expect("repeats >= 1"))
}
