//! Metrics, noise-robustness sweeps, inference benchmarks, and t-SNE
//! embedding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::{LabeledDataset, SplitKind, NUM_CLASSES};
use crate::rfsim::SignalPattern;

mod noise;
mod report;
mod tsne;

pub use noise::{noise_sweep, NoiseCell, NoiseSweepReport, SweepModel};
pub use report::{
    embedding_csv, eval_reports_csv, noise_sweep_csv, write_string,
};
pub use tsne::{silhouette, tsne_embed, TsneConfig, TsneResult};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no samples to evaluate")]
    EmptyEvaluation,
    #[error("perplexity {perplexity} infeasible for {n} samples: need 5 <= p <= (n-1)/3")]
    BadPerplexity { perplexity: f64, n: usize },
    #[error("benchmark needs at least 100 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("invalid input: {0}")]
    BadInput(String),
}

/// Square class-confusion counts; rows are true classes, columns
/// predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n_classes + predicted] += 1;
    }

    pub fn count(&self, truth: usize, predicted: usize) -> usize {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.n_classes).map(|c| self.count(c, c)).sum()
    }

    /// Row sum: how many evaluated samples carry this true class.
    pub fn support(&self, truth: usize) -> usize {
        (0..self.n_classes).map(|p| self.count(truth, p)).sum()
    }

    /// Column sum: how often this class was predicted.
    pub fn predicted(&self, class: usize) -> usize {
        (0..self.n_classes).map(|t| self.count(t, class)).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }
}

/// Precision/recall/F1 for one class, with the 0/0 -> 0 convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Full evaluation summary for one model on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    /// Fraction of correct predictions: the headline metric.
    pub accuracy: f64,
    /// Unweighted mean of per-class F1.
    pub macro_f1: f64,
    /// Unweighted mean of per-class recall, the per-class reading of
    /// TP/(TP+FN) averaged over classes.
    pub macro_recall: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    /// Classes that appear in neither truth nor prediction; they
    /// contribute F1 = 0 to the macro average.
    pub absent_classes: Vec<usize>,
    pub param_count: Option<usize>,
    pub mean_inference_ms: Option<f64>,
}

/// Computes metrics from parallel truth/prediction class-index arrays.
pub fn evaluate_pairs(
    model_id: &str,
    n_classes: usize,
    truths: &[usize],
    predictions: &[usize],
) -> Result<EvalReport, AnalysisError> {
    if truths.is_empty() || truths.len() != predictions.len() {
        return Err(AnalysisError::EmptyEvaluation);
    }
    let mut confusion = ConfusionMatrix::new(n_classes);
    for (&t, &p) in truths.iter().zip(predictions) {
        if t >= n_classes || p >= n_classes {
            return Err(AnalysisError::BadInput(format!(
                "class index out of range: truth {t}, prediction {p}"
            )));
        }
        confusion.record(t, p);
    }
    let mut per_class = Vec::with_capacity(n_classes);
    let mut absent_classes = Vec::new();
    for c in 0..n_classes {
        let tp = confusion.count(c, c) as f64;
        let support = confusion.support(c);
        let predicted = confusion.predicted(c);
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        if support == 0 && predicted == 0 {
            absent_classes.push(c);
        }
        per_class.push(ClassMetrics {
            class: c,
            precision,
            recall,
            f1,
            support,
        });
    }
    let n = n_classes as f64;
    Ok(EvalReport {
        model_id: model_id.to_string(),
        accuracy: confusion.accuracy(),
        macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
        macro_recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        per_class,
        confusion,
        absent_classes,
        param_count: None,
        mean_inference_ms: None,
    })
}

/// Evaluates a pattern-level predictor over one split of a dataset.
pub fn evaluate_patterns<F>(
    model_id: &str,
    ds: &LabeledDataset,
    split: SplitKind,
    predict: F,
) -> Result<EvalReport, AnalysisError>
where
    F: Fn(&SignalPattern) -> usize,
{
    let idx = ds.split_indices(split);
    let truths: Vec<usize> = idx
        .iter()
        .map(|&i| ds.samples[i].label.class_index())
        .collect();
    let predictions: Vec<usize> = idx.iter().map(|&i| predict(&ds.samples[i].pattern)).collect();
    evaluate_pairs(model_id, NUM_CLASSES, &truths, &predictions)
}

/// Wall-clock inference benchmark: runs the predictor `repetitions` times
/// over the samples, discarding a 10 % warm-up, and reports the mean
/// milliseconds per sample.
pub fn benchmark_inference<F>(
    predict: F,
    samples: &[SignalPattern],
    repetitions: usize,
) -> Result<f64, AnalysisError>
where
    F: Fn(&SignalPattern) -> usize,
{
    if repetitions < 100 {
        return Err(AnalysisError::TooFewRepetitions(repetitions));
    }
    if samples.is_empty() {
        return Err(AnalysisError::EmptyEvaluation);
    }
    let warmup = (repetitions / 10).max(1);
    for _ in 0..warmup {
        for s in samples {
            std::hint::black_box(predict(std::hint::black_box(s)));
        }
    }
    let start = std::time::Instant::now();
    for _ in 0..repetitions {
        for s in samples {
            std::hint::black_box(predict(std::hint::black_box(s)));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(elapsed * 1e3 / (repetitions * samples.len()) as f64)
}
