//! Lloyd's k-means with k-means++ seeding and a majority-label map from
//! cluster to class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;

/// Clustering hyperparameters; the study uses k = 7 clusters with at most
/// 300 Lloyd iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 7,
            max_iter: 300,
            seed: 0,
        }
    }
}

impl KMeansConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Fitted clustering: centroids, the cluster -> class map, and the
/// inertia trace across Lloyd iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
    /// Majority training label per cluster.
    pub label_map: Vec<usize>,
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(centroid, x);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// k-means++ seeding: first centroid uniform, the rest by squared-distance
/// weighted draws.
fn plus_plus_init(xs: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(xs[rng.gen_range(0..xs.len())].clone());
    let mut d2: Vec<f64> = xs.iter().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All mass sits on existing centroids; fall back to uniform.
            rng.gen_range(0..xs.len())
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = xs.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centroids.push(xs[next].clone());
        for (i, x) in xs.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, centroids.last().unwrap()));
        }
    }
    centroids
}

/// Fits k-means on explicit features with class labels for the cluster
/// map. Runs Lloyd iterations until the assignment reaches a fixpoint or
/// `max_iter`; empty clusters are re-seeded from the point farthest from
/// its centroid.
pub fn kmeans_fit_raw(
    xs: &[Vec<f64>],
    ys: &[usize],
    n_classes: usize,
    cfg: &KMeansConfig,
) -> Result<KMeansModel, BaselineError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(BaselineError::EmptyTraining);
    }
    if cfg.k == 0 {
        return Err(BaselineError::BadConfig("k must be >= 1".into()));
    }
    if xs.len() < cfg.k {
        return Err(BaselineError::TooFewSamples {
            n: xs.len(),
            k: cfg.k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = plus_plus_init(xs, cfg.k, &mut rng);
    let mut assignment = vec![usize::MAX; xs.len()];
    let mut inertia_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iter {
        iterations += 1;
        // Assignment step against the current centroids.
        let mut inertia = 0.0;
        let mut changed = false;
        for (i, x) in xs.iter().enumerate() {
            let (c, d) = nearest(&centroids, x);
            inertia += d;
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        inertia_trace.push(inertia);
        if !changed {
            converged = true;
            break;
        }
        // Update step.
        let dim = xs[0].len();
        let mut sums = vec![vec![0.0; dim]; cfg.k];
        let mut counts = vec![0usize; cfg.k];
        for (i, x) in xs.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..cfg.k {
            if counts[c] == 0 {
                // Re-seed from the point farthest from its own centroid.
                let far = (0..xs.len())
                    .max_by(|&a, &b| {
                        let da = sq_dist(&xs[a], &centroids[assignment[a]]);
                        let db = sq_dist(&xs[b], &centroids[assignment[b]]);
                        da.partial_cmp(&db).expect("finite distances")
                    })
                    .expect("nonempty data");
                centroids[c] = xs[far].clone();
            } else {
                for (j, s) in sums[c].iter().enumerate() {
                    centroids[c][j] = s / counts[c] as f64;
                }
            }
        }
    }

    // Majority label per cluster; an empty cluster keeps class 0.
    let mut tallies = vec![vec![0usize; n_classes]; cfg.k];
    for (i, &c) in assignment.iter().enumerate() {
        tallies[c][ys[i]] += 1;
    }
    let label_map = tallies
        .iter()
        .map(|t| {
            let mut best = 0;
            for (class, &n) in t.iter().enumerate() {
                if n > t[best] {
                    best = class;
                }
            }
            best
        })
        .collect();

    Ok(KMeansModel {
        centroids,
        label_map,
        inertia_trace,
        iterations,
        converged,
    })
}

impl KMeansModel {
    /// Class prediction: nearest centroid, then the cluster's label.
    pub fn predict(&self, x: &[f64]) -> usize {
        let (c, _) = nearest(&self.centroids, x);
        self.label_map[c]
    }

    /// Final within-cluster sum of squared distances.
    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().expect("at least one iteration")
    }
}
