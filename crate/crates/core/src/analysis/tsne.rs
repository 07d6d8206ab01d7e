//! Exact (non-approximate) t-SNE to two dimensions.
//!
//! Input affinities use per-point Gaussian kernels whose bandwidths are
//! binary-searched to a target perplexity; the embedding minimizes the
//! KL divergence to Student-t low-dimensional affinities by gradient
//! descent with momentum and early exaggeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AnalysisError;

/// Embedding hyperparameters. Defaults: perplexity 30, 1000 iterations,
/// learning rate 200, momentum 0.5 switching to 0.8 at iteration 250,
/// 12x early exaggeration for the first 250 iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum_switch_iter: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            seed: 0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_switch_iter: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
        }
    }
}

impl TsneConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// The embedding plus the KL divergence at initialization and after the
/// final iteration (both against the unexaggerated affinities).
#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    pub kl_initial: f64,
    pub kl_final: f64,
}

const P_FLOOR: f64 = 1e-12;
const ENTROPY_TOL: f64 = 1e-5;

fn pairwise_sq_dists(xs: &[Vec<f64>]) -> Vec<f64> {
    let n = xs.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = xs[i]
                .iter()
                .zip(&xs[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2[i * n + j] = d;
            d2[j * n + i] = d;
        }
    }
    d2
}

/// Conditional distribution row for point `i` at precision `beta`, and its
/// Shannon entropy in nats.
fn row_at_beta(d2: &[f64], n: usize, i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for j in 0..n {
        let w = if j == i { 0.0 } else { (-beta * d2[i * n + j]).exp() };
        row[j] = w;
        sum += w;
    }
    if sum <= 0.0 {
        // Degenerate row: all other points infinitely far at this beta.
        row.fill(0.0);
        return 0.0;
    }
    let mut entropy = 0.0;
    for (j, r) in row.iter_mut().enumerate() {
        *r /= sum;
        if *r > 0.0 {
            entropy -= *r * r.ln();
        }
        let _ = j;
    }
    entropy
}

/// Symmetrized affinities matching the target perplexity within the
/// entropy tolerance, flat n*n, summing to 1.
fn input_affinities(
    xs: &[Vec<f64>],
    perplexity: f64,
) -> Result<Vec<f64>, AnalysisError> {
    let n = xs.len();
    let d2 = pairwise_sq_dists(xs);
    let target_entropy = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let mut beta = 1.0;
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for _ in 0..200 {
            let entropy = row_at_beta(&d2, n, i, beta, &mut row);
            let diff = entropy - target_entropy;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                // Too flat: sharpen.
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (lo + beta);
            }
        }
        cond[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    // Symmetrize and normalize to a joint distribution.
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(
                if i == j { 0.0 } else { P_FLOOR },
            );
        }
    }
    // Renormalize after flooring.
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// Student-t affinities of the embedding; returns (q, w) with
/// `w_ij = 1/(1+d2)` unnormalized and `q = w / sum(w)`.
fn embedding_affinities(y: &[[f64; 2]], w: &mut [f64]) -> f64 {
    let n = y.len();
    let mut sum = 0.0;
    for i in 0..n {
        w[i * n + i] = 0.0;
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = v;
            w[j * n + i] = v;
            sum += 2.0 * v;
        }
    }
    sum
}

fn kl_divergence(p: &[f64], w: &[f64], w_sum: f64, n: usize) -> f64 {
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            if pij > 0.0 {
                let qij = (w[i * n + j] / w_sum).max(P_FLOOR);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Embeds standardized feature vectors into 2-D. Deterministic per seed.
pub fn tsne_embed(xs: &[Vec<f64>], cfg: &TsneConfig) -> Result<TsneResult, AnalysisError> {
    let n = xs.len();
    if n < 4 {
        return Err(AnalysisError::BadInput(format!(
            "need at least 4 samples, got {n}"
        )));
    }
    if !(cfg.perplexity >= 5.0 && cfg.perplexity <= (n - 1) as f64 / 3.0) {
        return Err(AnalysisError::BadPerplexity {
            perplexity: cfg.perplexity,
            n,
        });
    }

    let p = input_affinities(xs, cfg.perplexity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.gen_range(-1.0e-4..1.0e-4), rng.gen_range(-1.0e-4..1.0e-4)])
        .collect();
    let mut velocity = vec![[0.0f64; 2]; n];
    // Per-coordinate adaptive gains, the standard companion of the
    // momentum scheme: grow when the gradient keeps its direction against
    // the velocity, shrink when it flips.
    let mut gains = vec![[1.0f64; 2]; n];
    let mut w = vec![0.0; n * n];

    let w_sum = embedding_affinities(&y, &mut w);
    let kl_initial = kl_divergence(&p, &w, w_sum, n);

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iters {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < cfg.momentum_switch_iter {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        let w_sum = embedding_affinities(&y, &mut w);
        for i in 0..n {
            let mut g = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let wij = w[i * n + j];
                let qij = (wij / w_sum).max(P_FLOOR);
                let coeff = 4.0 * (exaggeration * p[i * n + j] - qij) * wij;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            for d in 0..2 {
                gains[i][d] = if (g[d] > 0.0) != (velocity[i][d] > 0.0) {
                    gains[i][d] + 0.2
                } else {
                    (gains[i][d] * 0.8).max(0.01)
                };
                velocity[i][d] =
                    momentum * velocity[i][d] - cfg.learning_rate * gains[i][d] * g[d];
            }
        }
        let mut mean = [0.0f64; 2];
        for (yi, vi) in y.iter_mut().zip(&velocity) {
            yi[0] += vi[0];
            yi[1] += vi[1];
            mean[0] += yi[0];
            mean[1] += yi[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for yi in &mut y {
            yi[0] -= mean[0];
            yi[1] -= mean[1];
        }
    }

    let w_sum = embedding_affinities(&y, &mut w);
    let kl_final = kl_divergence(&p, &w, w_sum, n);
    Ok(TsneResult {
        coords: y,
        kl_initial,
        kl_final,
    })
}

/// Mean silhouette score of a labeled 2-D embedding; in [-1, 1], higher
/// means tighter, better-separated clusters.
pub fn silhouette(coords: &[[f64; 2]], labels: &[usize]) -> f64 {
    let n = coords.len();
    assert_eq!(n, labels.len(), "labels must align with coordinates");
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0f64; n_classes];
        let mut counts = vec![0usize; n_classes];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(coords[i], coords[j]);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue; // singleton cluster contributes 0
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..n_classes)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}
