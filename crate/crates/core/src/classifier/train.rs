use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{init_params, CnnParams, Dataset, Real, Workspace};
use crate::error::{Error, Result};
use crate::perturb::derive_seed;

/// Samples per gradient work unit. Fixed so the reduction order (and thus
/// the floating-point result) does not depend on the thread count.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub batch: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Stop after this many optimizer steps, if set.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: 128,
            lr: 1e-3,
            epochs: 10,
            seeds: (0..5).collect(),
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.epochs == 0 {
            return Err(Error::Argument("batch and epochs must be at least 1".into()));
        }
        if !(self.lr >= 0.0) {
            return Err(Error::Argument(format!("learning rate {} is invalid", self.lr)));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: CnnParams<T>,
    v: CnnParams<T>,
}

impl<T: Real> Adam<T> {
    pub fn new(params: &CnnParams<T>, cfg: &TrainConfig) -> Self {
        Adam {
            lr: cfg.lr,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn update(&mut self, params: &mut CnnParams<T>, grad: &CnnParams<T>) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let (ob1, ob2) = (T::from_f64(1.0 - self.beta1), T::from_f64(1.0 - self.beta2));
        let step = T::from_f64(self.lr / c1);
        let c2s = T::from_f64(c2.sqrt());
        let eps = T::from_f64(self.eps);
        let blocks = params
            .blocks_mut()
            .into_iter()
            .zip(grad.blocks())
            .zip(self.m.blocks_mut().into_iter().zip(self.v.blocks_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in blocks {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + ob1 * g[i];
                v[i] = b2 * v[i] + ob2 * g[i] * g[i];
                p[i] = p[i] - step * m[i] / (v[i].sqrt() / c2s + eps);
            }
        }
    }
}

fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Summed loss, correct count and summed gradient over `idx`.
fn accumulate<T: Real>(
    params: &CnnParams<T>,
    data: &Dataset<T>,
    idx: &[usize],
) -> (T, usize, CnnParams<T>) {
    let mut ws = Workspace::new(params);
    let mut grad = params.zeros_like();
    let mut loss = T::zero();
    let mut correct = 0;
    for &i in idx {
        let label = data.labels[i];
        loss = loss + params.backward_into(&data.samples[i], label, &mut ws, &mut grad);
        correct += usize::from(argmax(ws.logits()) == label);
    }
    (loss, correct, grad)
}

fn batch_step<T: Real>(
    params: &CnnParams<T>,
    data: &Dataset<T>,
    idx: &[usize],
) -> (T, usize, CnnParams<T>) {
    let parts: Vec<_> = idx
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| accumulate(params, data, chunk))
        .collect();
    let mut iter = parts.into_iter();
    let (mut loss, mut correct, mut grad) = iter.next().expect("non-empty batch");
    for (l, c, g) in iter {
        loss = loss + l;
        correct += c;
        grad.add_assign(&g);
    }
    let inv = T::one() / T::from_f64(idx.len() as f64);
    grad.scale(inv);
    (loss * inv, correct, grad)
}

fn check_data<T: Real>(params: &CnnParams<T>, data: &Dataset<T>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Argument("dataset is empty".into()));
    }
    if data.shape != params.input {
        return Err(Error::Shape(format!(
            "dataset shape {:?} does not match network input {:?}",
            data.shape, params.input
        )));
    }
    let n = data.shape.0 * data.shape.1 * data.shape.2;
    if let Some(i) = data.samples.iter().position(|s| s.len() != n) {
        return Err(Error::Shape(format!("sample {i} has the wrong length")));
    }
    if let Some(&l) = data.labels.iter().find(|&&l| l >= params.classes) {
        return Err(Error::Argument(format!(
            "label {l} out of range for {} classes",
            params.classes
        )));
    }
    Ok(())
}

/// Mean cross-entropy loss and its gradient over a batch.
pub fn loss_and_grad<T: Real>(
    params: &CnnParams<T>,
    data: &Dataset<T>,
) -> Result<(T, CnnParams<T>)> {
    check_data(params, data)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let (loss, _, grad) = batch_step(params, data, &idx);
    Ok((loss, grad))
}

pub fn predict<T: Real>(params: &CnnParams<T>, sample: &[T]) -> usize {
    argmax(&params.forward(sample))
}

/// Fraction of samples whose arg-max class matches the label.
pub fn evaluate<T: Real>(params: &CnnParams<T>, data: &Dataset<T>) -> Result<f64> {
    check_data(params, data)?;
    let correct: usize = data
        .samples
        .par_chunks(GRAD_CHUNK)
        .zip(data.labels.par_chunks(GRAD_CHUNK))
        .map(|(xs, ls)| {
            let mut ws = Workspace::new(params);
            xs.iter()
                .zip(ls)
                .filter(|(x, &l)| {
                    params.forward_into(x, &mut ws);
                    argmax(ws.logits()) == l
                })
                .count()
        })
        .sum();
    Ok(correct as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainResult<T> {
    pub params: CnnParams<T>,
    pub history: Vec<EpochRecord>,
    /// Mini-batch loss of every optimizer step.
    pub step_losses: Vec<f64>,
}

/// Trains from a seeded initialization. Training accuracy is measured on
/// the fly (before each batch's update), as is usual.
pub fn train<T: Real>(
    data: &Dataset<T>,
    val: Option<&Dataset<T>>,
    classes: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainResult<T>> {
    cfg.validate()?;
    let mut params = init_params::<T>(seed, data.shape, classes)?;
    check_data(&params, data)?;
    let mut adam = Adam::new(&params, cfg);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step_losses = Vec::new();
    let mut order: Vec<usize> = (0..data.len()).collect();
    'epochs: for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch as u64));
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct, mut seen) = (0.0, 0, 0);
        for idx in order.chunks(cfg.batch) {
            if cfg.max_steps.is_some_and(|m| step_losses.len() >= m) {
                if seen > 0 {
                    history.push(record(epoch, loss_sum, correct, seen, &params, val)?);
                }
                break 'epochs;
            }
            let (loss, c, grad) = batch_step(&params, data, idx);
            adam.update(&mut params, &grad);
            let loss = loss.as_f64();
            step_losses.push(loss);
            loss_sum += loss * idx.len() as f64;
            correct += c;
            seen += idx.len();
        }
        let rec = record(epoch, loss_sum, correct, seen, &params, val)?;
        log::info!(
            "epoch {} loss {:.5} train {:.4} val {:?}",
            rec.epoch,
            rec.loss,
            rec.train_acc,
            rec.val_acc
        );
        history.push(rec);
    }
    Ok(TrainResult {
        params,
        history,
        step_losses,
    })
}

fn record<T: Real>(
    epoch: usize,
    loss_sum: f64,
    correct: usize,
    seen: usize,
    params: &CnnParams<T>,
    val: Option<&Dataset<T>>,
) -> Result<EpochRecord> {
    Ok(EpochRecord {
        epoch: epoch + 1,
        loss: loss_sum / seen as f64,
        train_acc: correct as f64 / seen as f64,
        val_acc: val.map(|v| evaluate(params, v)).transpose()?,
    })
}

pub fn write_history_csv(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(["epoch", "loss", "train_acc", "val_acc"]).map_err(io)?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            format!("{:.6}", r.loss),
            format!("{:.6}", r.train_acc),
            r.val_acc.map(|v| format!("{v:.6}")).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Accuracy statistics over seeds, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedStats {
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 when there is a single run.
    pub std: f64,
    pub runs: usize,
    /// Set when `std` is a convention rather than an estimate.
    pub single_run: bool,
}

impl fmt::Display for SeedStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} & {:.2}±{:.2}", self.max, self.mean, self.std)?;
        if self.single_run {
            write!(f, " (single run)")?;
        }
        Ok(())
    }
}

/// Max, mean and sample std (n−1) of per-seed accuracies given in percent.
pub fn multi_seed_stats(accuracies: &[f64]) -> Result<SeedStats> {
    let n = accuracies.len();
    if n == 0 {
        return Err(Error::Argument("no accuracies to summarize".into()));
    }
    let mean = accuracies.iter().sum::<f64>() / n as f64;
    let max = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let std = if n > 1 {
        (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SeedStats {
        max,
        mean,
        std,
        runs: n,
        single_run: n == 1,
    })
}
