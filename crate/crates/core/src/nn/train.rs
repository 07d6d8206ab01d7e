//! Mini-batch training with Adam and early stopping, plus the
//! finite-difference gradient checker.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    adam_step, param_count, sigmoid, AdamParams, AdamState, Gradients, Network, NetworkSpec,
    NnError,
};
use crate::dataio::{BinarySubsets, LabeledDataset, SplitKind};
use crate::util::derive_seed;

/// Training hyperparameters. Defaults mirror the study protocol:
/// learning rate 5e-5, batch 256, early stopping with patience 20 on
/// validation loss, at most 2000 epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            batch: 256,
            max_epochs: 2000,
            patience: 20,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), NnError> {
        if !(self.lr > 0.0) || self.batch == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(NnError::BadSpec(
                "training needs lr > 0, batch >= 1, patience >= 1, max_epochs >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch loss history and the early-stopping outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// A trained binary scorer: the logit sign is the decision, the logistic
/// of the logit the probability.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryScorer {
    pub network: Network,
}

impl BinaryScorer {
    pub fn score(&self, x: &[f64]) -> Result<f64, NnError> {
        Ok(self.network.forward(x)?[0])
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64, NnError> {
        Ok(sigmoid(self.score(x)?))
    }

    /// Binary decision: logit > 0, equivalently probability > 0.5.
    pub fn decide(&self, x: &[f64]) -> Result<bool, NnError> {
        Ok(self.score(x)? > 0.0)
    }
}

/// A trained softmax multiclass classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassClassifier {
    pub network: Network,
}

impl MulticlassClassifier {
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.network.forward(x)
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Argmax class index; ties resolve to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, NnError> {
        let logits = self.logits(x)?;
        Ok(argmax(&logits))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let _ = values[best];
    best
}

/// Numerically stable binary cross-entropy on a logit:
/// `max(z,0) - z*y + ln(1 + exp(-|z|))`.
pub fn bce_with_logits(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let zmax = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - zmax).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax cross-entropy against a class index.
pub fn softmax_cross_entropy(logits: &[f64], class: usize) -> f64 {
    let zmax = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = zmax
        + logits
            .iter()
            .map(|&z| (z - zmax).exp())
            .sum::<f64>()
            .ln();
    lse - logits[class]
}

/// A training target: a 0/1 label for a binary head or a class index for a
/// softmax head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Binary(f64),
    Class(usize),
}

fn loss_and_grad(logits: &[f64], target: Target) -> (f64, Vec<f64>) {
    match target {
        Target::Binary(y) => {
            let z = logits[0];
            (bce_with_logits(z, y), vec![sigmoid(z) - y])
        }
        Target::Class(c) => {
            let loss = softmax_cross_entropy(logits, c);
            let mut grad = softmax(logits);
            grad[c] -= 1.0;
            (loss, grad)
        }
    }
}

fn mean_loss(net: &Network, xs: &[Vec<f64>], ys: &[Target]) -> Result<f64, NnError> {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let logits = net.forward(x)?;
        total += loss_and_grad(&logits, y).0;
    }
    Ok(total / xs.len() as f64)
}

/// Core loop: mini-batch gradient averaging, one Adam step per batch,
/// early stopping on validation loss with best-weight restore.
fn train_network(
    net: &mut Network,
    xs: &[Vec<f64>],
    ys: &[Target],
    xs_val: &[Vec<f64>],
    ys_val: &[Target],
    cfg: &TrainConfig,
) -> Result<TrainLog, NnError> {
    cfg.validate()?;
    if xs.is_empty() || xs_val.is_empty() {
        return Err(NnError::BadSpec(
            "training and validation sets must be nonempty".into(),
        ));
    }
    let adam = AdamParams::with_lr(cfg.lr);
    let mut states: Vec<(AdamState, AdamState)> = net
        .layers
        .iter()
        .map(|l| match l {
            super::Layer::Dense { w, b, .. } | super::Layer::Conv1d { w, b, .. } => {
                (AdamState::zeros(w.len()), AdamState::zeros(b.len()))
            }
            _ => (AdamState::zeros(0), AdamState::zeros(0)),
        })
        .collect();

    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut grads = Gradients::zeros_like(net);

    let mut log = TrainLog {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        epochs_run: 0,
    };
    let mut best_val = f64::INFINITY;
    let mut best_params: Vec<f64> = net.flat_params();
    let mut stale_epochs = 0usize;
    let mut step = 0usize;

    for epoch in 1..=cfg.max_epochs {
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch) {
            for (w, b) in &mut grads.layers {
                w.fill(0.0);
                b.fill(0.0);
            }
            for &i in chunk {
                let (caches, logits) = net.forward_cached(&xs[i])?;
                let (loss, dlogits) = loss_and_grad(&logits, ys[i]);
                epoch_loss += loss;
                net.backward_into(&caches, &dlogits, &mut grads);
            }
            grads.scale(1.0 / chunk.len() as f64);
            step += 1;
            let layer_grads = &grads.layers;
            net.visit_params_mut(|li, w, b| {
                adam_step(w, &layer_grads[li].0, &mut states[li].0, step, &adam);
                adam_step(b, &layer_grads[li].1, &mut states[li].1, step, &adam);
            });
        }
        epoch_loss /= xs.len() as f64;
        if !epoch_loss.is_finite() || !net.all_finite() {
            return Err(NnError::Divergence { epoch });
        }
        let val_loss = mean_loss(net, xs_val, ys_val)?;
        if !val_loss.is_finite() {
            return Err(NnError::Divergence { epoch });
        }
        log.train_loss.push(epoch_loss);
        log.val_loss.push(val_loss);
        log.epochs_run = epoch;
        if val_loss < best_val {
            best_val = val_loss;
            log.best_epoch = epoch;
            best_params = net.flat_params();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                break;
            }
        }
        log::debug!(
            "epoch {epoch}: train {epoch_loss:.6}, val {val_loss:.6}, best {}",
            log.best_epoch
        );
    }
    net.set_flat_params(&best_params);
    Ok(log)
}

/// Trains a binary scorer on explicit feature/label arrays.
pub fn train_binary_raw(
    spec: &NetworkSpec,
    xs: &[Vec<f64>],
    ys: &[f64],
    xs_val: &[Vec<f64>],
    ys_val: &[f64],
    cfg: &TrainConfig,
) -> Result<(BinaryScorer, TrainLog), NnError> {
    if spec.output_dim != 1 {
        return Err(NnError::BadSpec("binary scorer needs output_dim = 1".into()));
    }
    let mut net = Network::init(spec, derive_seed(cfg.seed, 0))?;
    let ys: Vec<Target> = ys.iter().map(|&y| Target::Binary(y)).collect();
    let ys_val: Vec<Target> = ys_val.iter().map(|&y| Target::Binary(y)).collect();
    let log = train_network(&mut net, xs, &ys, xs_val, &ys_val, cfg)?;
    Ok((BinaryScorer { network: net }, log))
}

/// Trains a binary scorer on a subset pair, standardizing with the
/// dataset's fitted scaler. Validation uses the full validation split,
/// labeled by the same target rule as the subsets.
pub fn train_binary(
    spec: &NetworkSpec,
    ds: &LabeledDataset,
    subsets: &BinarySubsets,
    cfg: &TrainConfig,
) -> Result<(BinaryScorer, TrainLog), NnError> {
    let scaler = ds.scaler.as_ref().ok_or(NnError::MissingScaler)?;
    let mut xs = Vec::with_capacity(subsets.positives.len() + subsets.negatives.len());
    let mut ys = Vec::with_capacity(xs.capacity());
    for &i in &subsets.positives {
        xs.push(scaler.apply(&ds.samples[i].pattern));
        ys.push(1.0);
    }
    for &i in &subsets.negatives {
        xs.push(scaler.apply(&ds.samples[i].pattern));
        ys.push(0.0);
    }
    let val_idx = ds.split_indices(SplitKind::Val);
    let xs_val: Vec<Vec<f64>> = val_idx
        .iter()
        .map(|&i| scaler.apply(&ds.samples[i].pattern))
        .collect();
    let ys_val: Vec<f64> = val_idx
        .iter()
        .map(|&i| {
            if subsets.target.is_positive(ds.samples[i].label) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    train_binary_raw(spec, &xs, &ys, &xs_val, &ys_val, cfg)
}

/// Trains a softmax classifier on explicit feature/class arrays.
pub fn train_multiclass_raw(
    spec: &NetworkSpec,
    xs: &[Vec<f64>],
    classes: &[usize],
    xs_val: &[Vec<f64>],
    classes_val: &[usize],
    cfg: &TrainConfig,
) -> Result<(MulticlassClassifier, TrainLog), NnError> {
    if let Some(&c) = classes.iter().chain(classes_val).max() {
        if c >= spec.output_dim {
            return Err(NnError::BadSpec(format!(
                "class index {c} needs output_dim > {c}, got {}",
                spec.output_dim
            )));
        }
    }
    let mut net = Network::init(spec, derive_seed(cfg.seed, 0))?;
    let ys: Vec<Target> = classes.iter().map(|&c| Target::Class(c)).collect();
    let ys_val: Vec<Target> = classes_val.iter().map(|&c| Target::Class(c)).collect();
    let log = train_network(&mut net, xs, &ys, xs_val, &ys_val, cfg)?;
    Ok((MulticlassClassifier { network: net }, log))
}

/// Trains a softmax classifier over the dataset's seven classes, using the
/// training split and early stopping on the validation split.
pub fn train_multiclass(
    spec: &NetworkSpec,
    ds: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(MulticlassClassifier, TrainLog), NnError> {
    let scaler = ds.scaler.as_ref().ok_or(NnError::MissingScaler)?;
    let feats = |split: SplitKind| -> (Vec<Vec<f64>>, Vec<usize>) {
        let idx = ds.split_indices(split);
        (
            idx.iter()
                .map(|&i| scaler.apply(&ds.samples[i].pattern))
                .collect(),
            idx.iter()
                .map(|&i| ds.samples[i].label.class_index())
                .collect(),
        )
    };
    let (xs, ys) = feats(SplitKind::Train);
    let (xs_val, ys_val) = feats(SplitKind::Val);
    train_multiclass_raw(spec, &xs, &ys, &xs_val, &ys_val, cfg)
}

/// Loss attached to a gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckLoss {
    /// Binary cross-entropy against a 0/1 label.
    Binary(f64),
    /// Softmax cross-entropy against a class index.
    Class(usize),
}

const GRAD_CHECK_PARAM_CAP: usize = 10_000;

/// Compares the analytic gradient of the loss at a seeded random init
/// against central finite differences (h = 1e-5), returning the largest
/// per-layer relative L2 error `|ga - gn| / (|ga| + |gn|)`.
pub fn gradient_check(
    spec: &NetworkSpec,
    x: &[f64],
    loss: CheckLoss,
    seed: u64,
) -> Result<f64, NnError> {
    let count = param_count(spec)?;
    if count > GRAD_CHECK_PARAM_CAP {
        return Err(NnError::TooManyParams {
            count,
            cap: GRAD_CHECK_PARAM_CAP,
        });
    }
    let target = match loss {
        CheckLoss::Binary(y) => Target::Binary(y),
        CheckLoss::Class(c) => Target::Class(c),
    };
    let mut net = Network::init(spec, seed)?;
    let (caches, logits) = net.forward_cached(x)?;
    let (_, dlogits) = loss_and_grad(&logits, target);
    let analytic = net.backward(&caches, &dlogits);

    let h = 1e-5;
    let base = net.flat_params();
    let mut numeric = vec![0.0; base.len()];
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        net.set_flat_params(&p);
        let up = loss_and_grad(&net.forward(x)?, target).0;
        p[i] = base[i] - h;
        net.set_flat_params(&p);
        let down = loss_and_grad(&net.forward(x)?, target).0;
        numeric[i] = (up - down) / (2.0 * h);
    }
    net.set_flat_params(&base);

    // Compare per parameter block (one per layer, weights and bias
    // together) so vanishing single components do not blow up the ratio.
    let mut max_err = 0.0f64;
    let mut off = 0;
    for (gw, gb) in &analytic.layers {
        let len = gw.len() + gb.len();
        if len == 0 {
            continue;
        }
        let ga: Vec<f64> = gw.iter().chain(gb.iter()).copied().collect();
        let gn = &numeric[off..off + len];
        let diff: f64 = ga
            .iter()
            .zip(gn)
            .map(|(a, n)| (a - n) * (a - n))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = ga.iter().map(|a| a * a).sum::<f64>().sqrt()
            + gn.iter().map(|n| n * n).sum::<f64>().sqrt();
        max_err = max_err.max(diff / scale.max(1e-12));
        off += len;
    }
    Ok(max_err)
}
