//! Dataset model: labels, stratified splitting, per-frequency
//! standardization, binary subset construction for the severity ladders,
//! and persistence (dataset CSV, Touchstone `.s1p`).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rfsim::{
    synthesize_pattern, DefectScenario, FrequencyGrid, LineSection, RfError, SignalPattern,
    SynthConfig,
};
use crate::util::derive_seed;

mod csvio;
mod touchstone;

pub use csvio::{read_dataset_csv, read_dataset_csv_file, write_dataset_csv, write_dataset_csv_file};
pub use touchstone::{
    parse_touchstone_s1p, write_touchstone_s1p, TouchstoneError, TouchstoneFormat,
    TouchstoneOptions, TouchstoneUnit,
};

/// Errors from dataset construction and persistence.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("class {class} has {count} samples; at least {min} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        min: usize,
    },
    #[error("invalid split ratios {0:?}: must be positive and sum to 1")]
    BadRatios((f64, f64, f64)),
    #[error("invalid label: {0}")]
    BadLabel(String),
    #[error("pattern length {got} does not match grid length {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("dataset grid needs at least 2 points, got {0}")]
    GridTooShort(usize),
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("training split is empty")]
    EmptyTrainingSplit,
    #[error("no positive samples for {0}")]
    EmptyPositives(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Rf(#[from] RfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Root cause of a defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DefectCause {
    Normal,
    Mechanical,
    Corrosion,
}

impl DefectCause {
    pub fn as_str(self) -> &'static str {
        match self {
            DefectCause::Normal => "Normal",
            DefectCause::Mechanical => "Mechanical",
            DefectCause::Corrosion => "Corrosion",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s {
            "Normal" => Ok(DefectCause::Normal),
            "Mechanical" => Ok(DefectCause::Mechanical),
            "Corrosion" => Ok(DefectCause::Corrosion),
            other => Err(DataError::BadLabel(format!("unknown cause `{other}`"))),
        }
    }

    /// The defect causes that carry severity ladders.
    pub const DEFECTS: [DefectCause; 2] = [DefectCause::Mechanical, DefectCause::Corrosion];
}

/// Class label: cause plus ordinal severity. The normal state is the unique
/// zero-severity class; defect causes carry severity 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefectLabel {
    pub cause: DefectCause,
    pub severity: u8,
}

/// Number of severity levels per defect cause in this study.
pub const SEVERITY_LEVELS: u8 = 3;

/// Total number of classes: Normal plus 3 levels for each of 2 causes.
pub const NUM_CLASSES: usize = 1 + 2 * SEVERITY_LEVELS as usize;

impl DefectLabel {
    pub const NORMAL: DefectLabel = DefectLabel {
        cause: DefectCause::Normal,
        severity: 0,
    };

    /// A defective label; severity must be 1..=3.
    pub fn defect(cause: DefectCause, severity: u8) -> Result<Self, DataError> {
        if cause == DefectCause::Normal {
            return Err(DataError::BadLabel(
                "normal state cannot carry a defect severity".into(),
            ));
        }
        if !(1..=SEVERITY_LEVELS).contains(&severity) {
            return Err(DataError::BadLabel(format!(
                "severity {severity} outside 1..={SEVERITY_LEVELS}"
            )));
        }
        Ok(Self { cause, severity })
    }

    pub fn new(cause: DefectCause, severity: u8) -> Result<Self, DataError> {
        if cause == DefectCause::Normal {
            if severity != 0 {
                return Err(DataError::BadLabel(format!(
                    "Normal must have severity 0, got {severity}"
                )));
            }
            Ok(Self::NORMAL)
        } else {
            Self::defect(cause, severity)
        }
    }

    /// Dense class index in the fixed order
    /// Normal, M1, M2, M3, C1, C2, C3.
    pub fn class_index(self) -> usize {
        match self.cause {
            DefectCause::Normal => 0,
            DefectCause::Mechanical => self.severity as usize,
            DefectCause::Corrosion => 3 + self.severity as usize,
        }
    }

    pub fn from_class_index(idx: usize) -> Result<Self, DataError> {
        match idx {
            0 => Ok(Self::NORMAL),
            1..=3 => Self::defect(DefectCause::Mechanical, idx as u8),
            4..=6 => Self::defect(DefectCause::Corrosion, (idx - 3) as u8),
            other => Err(DataError::BadLabel(format!("class index {other} outside 0..7"))),
        }
    }

    /// Short class code: "Normal", "M1".."M3", "C1".."C3".
    pub fn class_code(self) -> String {
        match self.cause {
            DefectCause::Normal => "Normal".to_string(),
            DefectCause::Mechanical => format!("M{}", self.severity),
            DefectCause::Corrosion => format!("C{}", self.severity),
        }
    }

    /// All seven class labels in class-index order.
    pub fn all_classes() -> [DefectLabel; NUM_CLASSES] {
        let mut out = [DefectLabel::NORMAL; NUM_CLASSES];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = DefectLabel::from_class_index(i).unwrap();
        }
        out
    }
}

/// Which split a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

impl SplitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s {
            "train" => Ok(SplitKind::Train),
            "val" => Ok(SplitKind::Val),
            "test" => Ok(SplitKind::Test),
            other => Err(DataError::BadLabel(format!("unknown split `{other}`"))),
        }
    }
}

/// One labeled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub pattern: SignalPattern,
    pub label: DefectLabel,
    pub split: SplitKind,
}

/// Per-frequency standardization statistics fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    /// (mean, std) per frequency bin; std is floored at 1e-8.
    pub stats: Vec<(f64, f64)>,
}

impl Scaler {
    /// Z-scores a pattern bin by bin.
    pub fn apply(&self, pattern: &SignalPattern) -> Vec<f64> {
        assert_eq!(
            self.stats.len(),
            pattern.len(),
            "scaler length must match pattern length"
        );
        pattern
            .magnitude_db
            .iter()
            .zip(&self.stats)
            .map(|(&v, &(m, s))| (v - m) / s)
            .collect()
    }
}

/// A dataset of labeled patterns sharing one frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub grid: FrequencyGrid,
    pub samples: Vec<LabeledSample>,
    pub scaler: Option<Scaler>,
}

impl LabeledDataset {
    /// Validates grid/pattern agreement and id uniqueness. A dataset grid
    /// needs at least 2 points to carry a frequency pattern.
    pub fn new(grid: FrequencyGrid, samples: Vec<LabeledSample>) -> Result<Self, DataError> {
        if grid.len() < 2 {
            return Err(DataError::GridTooShort(grid.len()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for s in &samples {
            if s.pattern.len() != grid.len() {
                return Err(DataError::GridMismatch {
                    expected: grid.len(),
                    got: s.pattern.len(),
                });
            }
            if !ids.insert(s.id.as_str()) {
                return Err(DataError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self {
            grid,
            samples,
            scaler: None,
        })
    }

    pub fn split_indices(&self, split: SplitKind) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-class sample counts in class-index order.
    pub fn class_histogram(&self) -> [usize; NUM_CLASSES] {
        let mut hist = [0usize; NUM_CLASSES];
        for s in &self.samples {
            hist[s.label.class_index()] += 1;
        }
        hist
    }

    pub fn sample_by_id(&self, id: &str) -> Option<&LabeledSample> {
        self.samples.iter().find(|s| s.id == id)
    }
}

/// Stratified split assignment: per class, `floor(n*train)` samples go to
/// training, `floor(n*val)` to validation, and the remainder to test.
/// Deterministic for a fixed seed. Every class needs at least 5 samples.
pub fn split_dataset(
    mut ds: LabeledDataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    let (tr, va, te) = ratios;
    let sum = tr + va + te;
    if !(tr > 0.0 && va > 0.0 && te > 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadRatios(ratios));
    }
    for (class_idx, label) in DefectLabel::all_classes().into_iter().enumerate() {
        let mut members: Vec<usize> = ds
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 5 {
            return Err(DataError::ClassTooSmall {
                class: label.class_code(),
                count: members.len(),
                min: 5,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, class_idx as u64));
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = (n as f64 * tr).floor() as usize;
        let n_val = (n as f64 * va).floor() as usize;
        for (pos, &i) in members.iter().enumerate() {
            ds.samples[i].split = if pos < n_train {
                SplitKind::Train
            } else if pos < n_train + n_val {
                SplitKind::Val
            } else {
                SplitKind::Test
            };
        }
    }
    Ok(ds)
}

/// Fits per-frequency (mean, std) on the training split only.
pub fn fit_scaler(ds: &LabeledDataset) -> Result<Scaler, DataError> {
    let train = ds.split_indices(SplitKind::Train);
    if train.is_empty() {
        return Err(DataError::EmptyTrainingSplit);
    }
    let n_bins = ds.grid.len();
    let n = train.len() as f64;
    let mut mean = vec![0.0; n_bins];
    for &i in &train {
        for (m, &v) in mean.iter_mut().zip(&ds.samples[i].pattern.magnitude_db) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; n_bins];
    for &i in &train {
        for (vv, (&v, &m)) in var
            .iter_mut()
            .zip(ds.samples[i].pattern.magnitude_db.iter().zip(&mean))
        {
            *vv += (v - m) * (v - m) / n;
        }
    }
    let stats = mean
        .into_iter()
        .zip(var)
        .map(|(m, v)| (m, v.sqrt().max(1e-8)))
        .collect();
    Ok(Scaler { stats })
}

/// What a binary subset pair trains: the normal-state detector or one rung
/// of a cause's severity ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsetTarget {
    NormalDetector,
    Ladder { cause: DefectCause, level: u8 },
}

impl SubsetTarget {
    /// The binary label this target assigns to a sample.
    pub fn is_positive(self, label: DefectLabel) -> bool {
        match self {
            SubsetTarget::NormalDetector => label.cause == DefectCause::Normal,
            SubsetTarget::Ladder { cause, level } => {
                label.cause == cause && label.severity >= level
            }
        }
    }

    pub fn describe(self) -> String {
        match self {
            SubsetTarget::NormalDetector => "normal-state detector".to_string(),
            SubsetTarget::Ladder { cause, level } => {
                format!("{} ladder level {level}", cause.as_str())
            }
        }
    }
}

/// A 2-partition of the training split for one binary scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySubsets {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub target: SubsetTarget,
}

fn partition_training(ds: &LabeledDataset, target: SubsetTarget) -> BinarySubsets {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for i in ds.split_indices(SplitKind::Train) {
        if target.is_positive(ds.samples[i].label) {
            positives.push(i);
        } else {
            negatives.push(i);
        }
    }
    BinarySubsets {
        positives,
        negatives,
        target,
    }
}

/// Builds the subset pair for the ladder scorer of `target_cause` at
/// threshold `target_level`: positives are training samples of that cause
/// with severity >= level; everything else in the training split (same
/// cause below the level, normal samples, and the other causes) is
/// negative.
pub fn build_srel_subsets(
    ds: &LabeledDataset,
    target_cause: DefectCause,
    target_level: u8,
) -> Result<BinarySubsets, DataError> {
    if target_cause == DefectCause::Normal {
        return Err(DataError::BadLabel(
            "ladder subsets need a defect cause; use build_normal_subsets".into(),
        ));
    }
    if !(1..=SEVERITY_LEVELS).contains(&target_level) {
        return Err(DataError::BadLabel(format!(
            "target level {target_level} outside 1..={SEVERITY_LEVELS}"
        )));
    }
    let target = SubsetTarget::Ladder {
        cause: target_cause,
        level: target_level,
    };
    let subsets = partition_training(ds, target);
    if subsets.positives.is_empty() {
        return Err(DataError::EmptyPositives(target.describe()));
    }
    Ok(subsets)
}

/// Builds the subset pair for the normal-state detector: normal training
/// samples against all defective ones.
pub fn build_normal_subsets(ds: &LabeledDataset) -> Result<BinarySubsets, DataError> {
    let subsets = partition_training(ds, SubsetTarget::NormalDetector);
    if subsets.positives.is_empty() {
        return Err(DataError::EmptyPositives(
            SubsetTarget::NormalDetector.describe(),
        ));
    }
    Ok(subsets)
}

/// Configuration for synthesizing a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Samples per class in class-index order.
    pub class_counts: [usize; NUM_CLASSES],
    pub grid: FrequencyGrid,
    pub nominal: LineSection,
    pub synth: SynthConfig,
    pub split_ratios: (f64, f64, f64),
    pub seed: u64,
}

impl GeneratorConfig {
    /// The study's default: 175/90/80/100/90/95/160 samples per class on
    /// the default grid and nominal line.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            class_counts: [175, 90, 80, 100, 90, 95, 160],
            grid: FrequencyGrid::default_grid(),
            nominal: crate::rfsim::default_nominal_line(),
            synth: SynthConfig::default(),
            split_ratios: (0.6, 0.2, 0.2),
            seed,
        }
    }
}

// Seed-stream tags for the generator; sample streams are packed as
// sample_index * STRIDE + tag.
const STREAM_STRIDE: u64 = 8;
const STREAM_VARIATION: u64 = 0;
const STREAM_MANUFACTURING: u64 = 1;
const STREAM_FRACTION: u64 = 2;
const STREAM_SPLIT: u64 = u64::MAX - 1;

/// Synthesizes, labels, and splits a dataset. Deterministic in the config.
pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<LabeledDataset, DataError> {
    for (i, &count) in cfg.class_counts.iter().enumerate() {
        if count < 5 {
            return Err(DataError::ClassTooSmall {
                class: DefectLabel::from_class_index(i)?.class_code(),
                count,
                min: 5,
            });
        }
    }
    let mut samples = Vec::with_capacity(cfg.class_counts.iter().sum());
    let mut global = 0u64;
    for (class_idx, label) in DefectLabel::all_classes().into_iter().enumerate() {
        for k in 0..cfg.class_counts[class_idx] {
            let variation_seed =
                derive_seed(cfg.seed, global * STREAM_STRIDE + STREAM_VARIATION);
            let rng_seed = derive_seed(cfg.seed, global * STREAM_STRIDE + STREAM_MANUFACTURING);
            let scenario = match label.cause {
                DefectCause::Normal => DefectScenario::normal(variation_seed),
                DefectCause::Mechanical => {
                    DefectScenario::mechanical(label.severity, variation_seed)?
                }
                DefectCause::Corrosion => {
                    let mut frac_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        cfg.seed,
                        global * STREAM_STRIDE + STREAM_FRACTION,
                    ));
                    DefectScenario::corrosion_sampled(label.severity, &mut frac_rng, variation_seed)?
                }
            };
            let pattern =
                synthesize_pattern(&scenario, &cfg.grid, &cfg.nominal, &cfg.synth, rng_seed)?;
            samples.push(LabeledSample {
                id: format!("{}-{:04}", label.class_code(), k),
                pattern,
                label,
                split: SplitKind::Train,
            });
            global += 1;
        }
    }
    let ds = LabeledDataset::new(cfg.grid.clone(), samples)?;
    split_dataset(ds, cfg.split_ratios, derive_seed(cfg.seed, STREAM_SPLIT))
}
