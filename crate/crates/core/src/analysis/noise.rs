//! Noise-robustness sweeps: models are trained clean, noise is injected
//! into the test patterns only, and accuracy is aggregated over seeds.

use serde::{Deserialize, Serialize};

use super::{evaluate_pairs, AnalysisError};
use crate::dataio::{LabeledDataset, SplitKind, NUM_CLASSES};
use crate::rfsim::{inject_noise, SignalPattern};
use crate::util::derive_seed;

/// A named pattern-level predictor entering the sweep.
pub struct SweepModel<'a> {
    pub name: String,
    pub predict: Box<dyn Fn(&SignalPattern) -> usize + Sync + 'a>,
}

/// Mean and standard deviation of accuracy for one (model, level) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCell {
    pub model: String,
    pub sigma_db: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepReport {
    /// Noise levels in dB, ascending.
    pub levels_db: Vec<f64>,
    pub models: Vec<String>,
    /// One cell per (model, level), model-major, levels ascending.
    pub cells: Vec<NoiseCell>,
}

impl NoiseSweepReport {
    pub fn cell(&self, model: &str, sigma_db: f64) -> Option<&NoiseCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.sigma_db == sigma_db)
    }

    /// Mean accuracies of one model across the levels, ascending.
    pub fn accuracy_curve(&self, model: &str) -> Vec<f64> {
        self.levels_db
            .iter()
            .filter_map(|&l| self.cell(model, l).map(|c| c.mean_accuracy))
            .collect()
    }
}

/// Runs the sweep over the dataset's test split. For each (model, level,
/// seed) every test pattern gets an independent noise realization derived
/// from the seed and the sample index; at level 0 the injection is the
/// identity, so that row equals the clean evaluation exactly.
pub fn noise_sweep(
    models: &[SweepModel<'_>],
    ds: &LabeledDataset,
    levels_db: &[f64],
    seeds: &[u64],
) -> Result<NoiseSweepReport, AnalysisError> {
    if models.is_empty() || levels_db.is_empty() || seeds.is_empty() {
        return Err(AnalysisError::BadInput(
            "noise sweep needs models, levels, and seeds".into(),
        ));
    }
    let mut sorted = levels_db.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    let test_idx = ds.split_indices(SplitKind::Test);
    if test_idx.is_empty() {
        return Err(AnalysisError::EmptyEvaluation);
    }
    let truths: Vec<usize> = test_idx
        .iter()
        .map(|&i| ds.samples[i].label.class_index())
        .collect();

    let mut cells = Vec::with_capacity(models.len() * sorted.len());
    for model in models {
        for &level in &sorted {
            let mut accuracies = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let predictions: Vec<usize> = test_idx
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let noisy = inject_noise(
                            &ds.samples[i].pattern,
                            level,
                            derive_seed(seed, k as u64),
                        );
                        (model.predict)(&noisy)
                    })
                    .collect();
                let report = evaluate_pairs(&model.name, NUM_CLASSES, &truths, &predictions)?;
                accuracies.push(report.accuracy);
            }
            let n = accuracies.len() as f64;
            let mean = accuracies.iter().sum::<f64>() / n;
            let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            cells.push(NoiseCell {
                model: model.name.clone(),
                sigma_db: level,
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
                seeds: accuracies.len(),
            });
        }
    }
    Ok(NoiseSweepReport {
        levels_db: sorted,
        models: models.iter().map(|m| m.name.clone()).collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{DefectLabel, LabeledSample};
    use crate::rfsim::FrequencyGrid;

    fn toy_dataset() -> LabeledDataset {
        let grid = FrequencyGrid::new(vec![1e9, 2e9]).unwrap();
        let mut samples = Vec::new();
        for k in 0..10 {
            samples.push(LabeledSample {
                id: format!("N-{k}"),
                pattern: SignalPattern::new(vec![-30.0, -30.0]),
                label: DefectLabel::NORMAL,
                split: if k < 5 { SplitKind::Train } else { SplitKind::Test },
            });
        }
        LabeledDataset::new(grid, samples).unwrap()
    }

    #[test]
    fn level_zero_row_equals_clean_evaluation() {
        let ds = toy_dataset();
        // Threshold classifier that flips under noise.
        let models = [SweepModel {
            name: "thresh".into(),
            predict: Box::new(|p: &SignalPattern| usize::from(p.magnitude_db[0] > -29.0)),
        }];
        let r = noise_sweep(&models, &ds, &[0.0, 4.0], &[1, 2, 3]).unwrap();
        let clean = r.cell("thresh", 0.0).unwrap();
        assert_eq!(clean.mean_accuracy, 1.0);
        assert_eq!(clean.std_accuracy, 0.0);
        let noisy = r.cell("thresh", 4.0).unwrap();
        assert!(noisy.mean_accuracy < 1.0);
    }

    #[test]
    fn cells_are_deterministic_for_a_seed_list() {
        let ds = toy_dataset();
        let mk = || {
            [SweepModel {
                name: "m".into(),
                predict: Box::new(|p: &SignalPattern| usize::from(p.magnitude_db[1] > -30.0)),
            }]
        };
        let a = noise_sweep(&mk(), &ds, &[0.0, 2.0], &[7, 8]).unwrap();
        let b = noise_sweep(&mk(), &ds, &[0.0, 2.0], &[7, 8]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn levels_are_sorted_in_the_report() {
        let ds = toy_dataset();
        let models = [SweepModel {
            name: "m".into(),
            predict: Box::new(|_: &SignalPattern| 0),
        }];
        let r = noise_sweep(&models, &ds, &[4.0, 0.0, 2.0], &[1]).unwrap();
        assert_eq!(r.levels_db, vec![0.0, 2.0, 4.0]);
        assert_eq!(r.accuracy_curve("m").len(), 3);
    }
}
