//! Comparison methods: random forest and k-means over the full patterns,
//! and the single-frequency point features that stand in for prior-art
//! 1-D diagnosis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::{DataError, LabeledDataset, SplitKind, NUM_CLASSES};
use crate::rfsim::{FrequencyGrid, RfError, SignalPattern};

mod forest;
mod kmeans;

pub use forest::{gini_impurity, rf_train_raw, DecisionTree, ForestConfig, RandomForest};
pub use kmeans::{kmeans_fit_raw, KMeansConfig, KMeansModel};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("training set is empty or misaligned")]
    EmptyTraining,
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("{n} samples cannot seed {k} clusters")]
    TooFewSamples { n: usize, k: usize },
    #[error("dataset has no fitted scaler; fit one on the training split first")]
    MissingScaler,
    #[error(transparent)]
    Rf(#[from] RfError),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn training_features(
    ds: &LabeledDataset,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), BaselineError> {
    let scaler = ds.scaler.as_ref().ok_or(BaselineError::MissingScaler)?;
    let idx = ds.split_indices(SplitKind::Train);
    if idx.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    Ok((
        idx.iter()
            .map(|&i| scaler.apply(&ds.samples[i].pattern))
            .collect(),
        idx.iter()
            .map(|&i| ds.samples[i].label.class_index())
            .collect(),
    ))
}

/// Trains a 7-class random forest on the standardized training split.
pub fn rf_train(ds: &LabeledDataset, cfg: &ForestConfig) -> Result<RandomForest, BaselineError> {
    let (xs, ys) = training_features(ds)?;
    rf_train_raw(&xs, &ys, NUM_CLASSES, cfg)
}

/// Forest prediction on one standardized feature vector.
pub fn rf_predict(model: &RandomForest, x: &[f64]) -> usize {
    model.predict(x)
}

/// Fits k-means on the standardized training split and maps clusters to
/// their majority class labels.
pub fn kmeans_fit(ds: &LabeledDataset, cfg: &KMeansConfig) -> Result<KMeansModel, BaselineError> {
    let (xs, ys) = training_features(ds)?;
    kmeans_fit_raw(&xs, &ys, NUM_CLASSES, cfg)
}

/// Class prediction for one standardized feature vector.
pub fn kmeans_predict(model: &KMeansModel, x: &[f64]) -> usize {
    model.predict(x)
}

/// Which scalar the 1-D methods read off a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PointFeatureKind {
    /// dB magnitude at the grid bin nearest the given frequency in Hz;
    /// the study's designated frequency is 8 GHz.
    SingleFrequencyDb(f64),
    /// dB magnitude at the grid minimum, the closest frequency-domain
    /// analog of a DC-resistance reading.
    LowFrequencyDb,
}

impl PointFeatureKind {
    pub const DESIGNATED_8GHZ: PointFeatureKind = PointFeatureKind::SingleFrequencyDb(8.0e9);
}

/// One extracted scalar feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFeature {
    pub kind: PointFeatureKind,
    pub value: f64,
}

/// Reads the dB magnitude at the nearest grid bin for the kind's
/// frequency. Errors when the frequency lies outside the grid.
pub fn extract_point_feature(
    pattern: &SignalPattern,
    grid: &FrequencyGrid,
    kind: PointFeatureKind,
) -> Result<PointFeature, BaselineError> {
    let bin = match kind {
        PointFeatureKind::SingleFrequencyDb(f) => grid.nearest_bin(f)?,
        PointFeatureKind::LowFrequencyDb => 0,
    };
    Ok(PointFeature {
        kind,
        value: pattern.magnitude_db[bin],
    })
}

/// A random forest over one scalar feature: the 1-D prior-art stand-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointBaseline {
    pub kind: PointFeatureKind,
    pub forest: RandomForest,
}

/// Trains a forest on the single designated-frequency feature of each
/// training sample (raw dB; a tree is scale-free).
pub fn train_point_baseline(
    ds: &LabeledDataset,
    kind: PointFeatureKind,
    cfg: &ForestConfig,
) -> Result<PointBaseline, BaselineError> {
    let idx = ds.split_indices(SplitKind::Train);
    if idx.is_empty() {
        return Err(BaselineError::EmptyTraining);
    }
    let mut xs = Vec::with_capacity(idx.len());
    let mut ys = Vec::with_capacity(idx.len());
    for &i in &idx {
        let feature = extract_point_feature(&ds.samples[i].pattern, &ds.grid, kind)?;
        xs.push(vec![feature.value]);
        ys.push(ds.samples[i].label.class_index());
    }
    let forest = rf_train_raw(&xs, &ys, NUM_CLASSES, cfg)?;
    Ok(PointBaseline { kind, forest })
}

impl PointBaseline {
    /// Input dimension of the underlying classifier: always 1.
    pub fn input_dim(&self) -> usize {
        1
    }

    pub fn predict(
        &self,
        pattern: &SignalPattern,
        grid: &FrequencyGrid,
    ) -> Result<usize, BaselineError> {
        let feature = extract_point_feature(pattern, grid, self.kind)?;
        Ok(self.forest.predict(&[feature.value]))
    }
}
