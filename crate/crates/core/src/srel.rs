//! Severity-rating ensemble: one normal-state detector plus an ordered
//! ladder of binary scorers per defect cause.
//!
//! Every scorer answers "is this sample of cause i with severity at least
//! k?". The per-cause rating is the count of positive answers, the final
//! call is the argmax over (normal, per-cause ratings), and ties between
//! defect causes fall to the ladder with the larger sum of logistic
//! outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataio::{
    build_normal_subsets, build_srel_subsets, fit_scaler, DataError, DefectCause, DefectLabel,
    LabeledDataset, Scaler, SubsetTarget, SEVERITY_LEVELS,
};
use crate::nn::{
    load_network_file, save_network_file, sigmoid, train_binary, BinaryScorer, NetworkSpec,
    NnError, TrainConfig, TrainLog,
};
use crate::rfsim::{FrequencyGrid, SignalPattern};
use crate::util::{derive_seed, parallel_map};

#[derive(Debug, Error)]
pub enum SrelError {
    #[error("training {target} failed: {source}")]
    ScorerTraining {
        target: String,
        #[source]
        source: NnError,
    },
    #[error("pattern has {got} points but the model's grid has {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("model bundle: {0}")]
    BadBundle(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The ordered threshold scorers `k = 1..=3` for one defect cause.
#[derive(Debug, Clone, PartialEq)]
pub struct SeverityLadder {
    pub cause: DefectCause,
    pub scorers: Vec<BinaryScorer>,
}

/// The trained ensemble: detector, ladders, and the preprocessing needed
/// to run raw patterns through it.
#[derive(Debug, Clone, PartialEq)]
pub struct SrelModel {
    pub normal_detector: BinaryScorer,
    pub ladders: Vec<SeverityLadder>,
    pub scaler: Scaler,
    pub grid: FrequencyGrid,
}

/// Rating and tie-break evidence for one defect cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseScore {
    pub cause: DefectCause,
    /// Count of fired ladder scorers, 0..=3.
    pub rating: u8,
    /// Sum of the logistic outputs over the whole ladder.
    pub logistic_sum: f64,
}

/// The ensemble's raw output vector `(r_0, r_M, r_C)` plus tie-break sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputVector {
    /// Normal detector decision, 0 or 1.
    pub normal: u8,
    pub causes: Vec<CauseScore>,
}

impl OutputVector {
    /// The integer components in order: normal first, then each cause.
    pub fn components(&self) -> Vec<u8> {
        let mut v = vec![self.normal];
        v.extend(self.causes.iter().map(|c| c.rating));
        v
    }
}

/// Final call on one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub cause: DefectCause,
    /// 0 for the normal state, otherwise the winning cause's rating.
    pub severity: u8,
    pub output_vector: OutputVector,
    /// True when equal defect ratings were resolved by logistic sums.
    pub tie_break_used: bool,
}

impl Diagnosis {
    /// Short class code such as "Normal" or "C3".
    pub fn class_code(&self) -> String {
        self.label().class_code()
    }

    pub fn label(&self) -> DefectLabel {
        match self.cause {
            DefectCause::Normal => DefectLabel::NORMAL,
            cause => DefectLabel::defect(cause, self.severity).expect("diagnosis severity valid"),
        }
    }
}

/// Counts the positive decisions of one ladder. Position-independent: any
/// fired scorer contributes one step, fired or not in prefix order.
pub fn aggregate_severity(decisions: &[bool]) -> u8 {
    decisions.iter().filter(|&&d| d).count() as u8
}

/// Applies the argmax rule with both tie rules:
/// equal defect ratings fall to the larger logistic sum, and a defect that
/// ties the normal detector wins over it. A vector with no fired defect
/// ladder is the normal state with severity 0.
pub fn decide(output: OutputVector) -> Diagnosis {
    let best_defect = output
        .causes
        .iter()
        .map(|c| c.rating)
        .max()
        .unwrap_or(0);

    // The normal rating is 0 or 1, so a defect can only tie it, never lose
    // to it, once any ladder fires; ties go to the defect (conservative
    // alarm). No fired ladder at all reads as the normal state.
    if best_defect == 0 {
        return Diagnosis {
            cause: DefectCause::Normal,
            severity: 0,
            output_vector: output,
            tie_break_used: false,
        };
    }

    let candidates: Vec<&CauseScore> = output
        .causes
        .iter()
        .filter(|c| c.rating == best_defect)
        .collect();
    let tie_break_used = candidates.len() > 1;
    let winner = candidates
        .into_iter()
        .max_by(|a, b| {
            a.logistic_sum
                .partial_cmp(&b.logistic_sum)
                .expect("finite logistic sums")
        })
        .expect("at least one candidate");
    Diagnosis {
        cause: winner.cause,
        severity: best_defect,
        output_vector: OutputVector {
            normal: output.normal,
            causes: output.causes.clone(),
        },
        tie_break_used,
    }
}

impl SrelModel {
    /// Runs all scorers on one standardized feature vector.
    pub fn output_vector(&self, x: &[f64]) -> Result<OutputVector, SrelError> {
        let normal = u8::from(self.normal_detector.decide(x)?);
        let mut causes = Vec::with_capacity(self.ladders.len());
        for ladder in &self.ladders {
            let mut decisions = Vec::with_capacity(ladder.scorers.len());
            let mut logistic_sum = 0.0;
            for scorer in &ladder.scorers {
                let logit = scorer.score(x)?;
                decisions.push(logit > 0.0);
                logistic_sum += sigmoid(logit);
            }
            causes.push(CauseScore {
                cause: ladder.cause,
                rating: aggregate_severity(&decisions),
                logistic_sum,
            });
        }
        Ok(OutputVector { normal, causes })
    }

    /// Standardizes a raw pattern and diagnoses it. The pattern must be
    /// sampled on the model's grid.
    pub fn diagnose(&self, pattern: &SignalPattern) -> Result<Diagnosis, SrelError> {
        if pattern.len() != self.grid.len() {
            return Err(SrelError::GridMismatch {
                expected: self.grid.len(),
                got: pattern.len(),
            });
        }
        let x = self.scaler.apply(pattern);
        Ok(decide(self.output_vector(&x)?))
    }

    /// Like [`diagnose`](Self::diagnose) but first checks that the sweep's
    /// own grid matches the model's.
    pub fn diagnose_on_grid(
        &self,
        grid: &FrequencyGrid,
        pattern: &SignalPattern,
    ) -> Result<Diagnosis, SrelError> {
        if !grid.matches(&self.grid, 1e-6) {
            return Err(SrelError::GridMismatch {
                expected: self.grid.len(),
                got: grid.len(),
            });
        }
        self.diagnose(pattern)
    }

    pub fn scorer_count(&self) -> usize {
        1 + self
            .ladders
            .iter()
            .map(|l| l.scorers.len())
            .sum::<usize>()
    }

    pub fn param_count(&self) -> usize {
        self.normal_detector.network.param_count()
            + self
                .ladders
                .iter()
                .flat_map(|l| &l.scorers)
                .map(|s| s.network.param_count())
                .sum::<usize>()
    }
}

/// Training logs per scorer, keyed by a readable target name.
pub type SrelLogs = Vec<(String, TrainLog)>;

/// Trains the full ensemble: the normal detector plus each cause's ladder,
/// each scorer on its own derived seed so parallel and sequential runs
/// produce identical models.
pub fn train_srel(
    ds: &LabeledDataset,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    threads: usize,
) -> Result<(SrelModel, SrelLogs), SrelError> {
    let scaler = match &ds.scaler {
        Some(s) => s.clone(),
        None => fit_scaler(ds)?,
    };
    let mut prepared = ds.clone();
    prepared.scaler = Some(scaler.clone());

    // Fixed scorer order: normal, then each cause's ladder ascending.
    let mut targets = vec![SubsetTarget::NormalDetector];
    for cause in DefectCause::DEFECTS {
        for level in 1..=SEVERITY_LEVELS {
            targets.push(SubsetTarget::Ladder { cause, level });
        }
    }

    let jobs: Vec<(usize, SubsetTarget)> = targets.into_iter().enumerate().collect();
    let results = parallel_map(threads, jobs, |(idx, target)| {
        let subsets = match target {
            SubsetTarget::NormalDetector => build_normal_subsets(&prepared),
            SubsetTarget::Ladder { cause, level } => {
                build_srel_subsets(&prepared, cause, level)
            }
        };
        let subsets = match subsets {
            Ok(s) => s,
            Err(e) => return Err(SrelError::from(e)),
        };
        let scorer_cfg = TrainConfig {
            seed: derive_seed(cfg.seed, idx as u64),
            ..cfg.clone()
        };
        train_binary(spec, &prepared, &subsets, &scorer_cfg)
            .map(|(scorer, log)| (target, scorer, log))
            .map_err(|source| SrelError::ScorerTraining {
                target: target.describe(),
                source,
            })
    });

    let mut normal_detector = None;
    let mut ladders: Vec<SeverityLadder> = DefectCause::DEFECTS
        .iter()
        .map(|&cause| SeverityLadder {
            cause,
            scorers: Vec::with_capacity(SEVERITY_LEVELS as usize),
        })
        .collect();
    let mut logs = Vec::new();
    for result in results {
        let (target, scorer, log) = result?;
        logs.push((target.describe(), log));
        match target {
            SubsetTarget::NormalDetector => normal_detector = Some(scorer),
            SubsetTarget::Ladder { cause, .. } => {
                let ladder = ladders
                    .iter_mut()
                    .find(|l| l.cause == cause)
                    .expect("ladder exists for every defect cause");
                ladder.scorers.push(scorer);
            }
        }
    }

    let model = SrelModel {
        normal_detector: normal_detector.expect("normal detector trained"),
        ladders,
        scaler,
        grid: ds.grid.clone(),
    };
    Ok((model, logs))
}

#[derive(Debug, Serialize, Deserialize)]
struct ScorerEntry {
    cause: Option<DefectCause>,
    level: u8,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleManifest {
    format_version: u32,
    grid: Vec<f64>,
    grid_sha256: String,
    scaler: Vec<(f64, f64)>,
    scorers: Vec<ScorerEntry>,
}

/// Hash of the grid's little-endian f64 bytes; lets bundle consumers check
/// grid identity cheaply.
pub fn grid_sha256(grid: &FrequencyGrid) -> String {
    let mut hasher = Sha256::new();
    for &f in grid.points() {
        hasher.update(f.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the model as a bundle directory: one serialized scorer file per
/// baseline network plus `manifest.json` carrying grid, grid hash, scaler,
/// and the cause/level -> file map.
pub fn save_bundle(model: &SrelModel, dir: &Path) -> Result<(), SrelError> {
    std::fs::create_dir_all(dir)?;
    let mut scorers = Vec::new();
    let normal_file = "normal.bin".to_string();
    save_network_file(&model.normal_detector.network, &dir.join(&normal_file))?;
    scorers.push(ScorerEntry {
        cause: None,
        level: 0,
        file: normal_file,
    });
    for ladder in &model.ladders {
        for (k, scorer) in ladder.scorers.iter().enumerate() {
            let file = format!("{}-{}.bin", ladder.cause.as_str().to_lowercase(), k + 1);
            save_network_file(&scorer.network, &dir.join(&file))?;
            scorers.push(ScorerEntry {
                cause: Some(ladder.cause),
                level: (k + 1) as u8,
                file,
            });
        }
    }
    let manifest = BundleManifest {
        format_version: 1,
        grid: model.grid.points().to_vec(),
        grid_sha256: grid_sha256(&model.grid),
        scaler: model.scaler.stats.clone(),
        scorers,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Loads a bundle saved by [`save_bundle`].
pub fn load_bundle(dir: &Path) -> Result<SrelModel, SrelError> {
    let manifest: BundleManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format_version != 1 {
        return Err(SrelError::BadBundle(format!(
            "unsupported bundle version {}",
            manifest.format_version
        )));
    }
    let grid = FrequencyGrid::new(manifest.grid)
        .map_err(|e| SrelError::BadBundle(format!("bad grid: {e}")))?;
    if grid_sha256(&grid) != manifest.grid_sha256 {
        return Err(SrelError::BadBundle("grid hash mismatch".into()));
    }
    let mut normal_detector = None;
    let mut ladders: Vec<SeverityLadder> = Vec::new();
    for entry in &manifest.scorers {
        let network = load_network_file(&dir.join(&entry.file))?;
        let scorer = BinaryScorer { network };
        match entry.cause {
            None => normal_detector = Some(scorer),
            Some(cause) => {
                let ladder = match ladders.iter_mut().find(|l| l.cause == cause) {
                    Some(l) => l,
                    None => {
                        ladders.push(SeverityLadder {
                            cause,
                            scorers: Vec::new(),
                        });
                        ladders.last_mut().unwrap()
                    }
                };
                if entry.level as usize != ladder.scorers.len() + 1 {
                    return Err(SrelError::BadBundle(format!(
                        "{} ladder levels out of order at level {}",
                        cause.as_str(),
                        entry.level
                    )));
                }
                ladder.scorers.push(scorer);
            }
        }
    }
    let normal_detector =
        normal_detector.ok_or_else(|| SrelError::BadBundle("missing normal detector".into()))?;
    if ladders.is_empty() {
        return Err(SrelError::BadBundle("no severity ladders".into()));
    }
    Ok(SrelModel {
        normal_detector,
        ladders,
        scaler: Scaler {
            stats: manifest.scaler,
        },
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Network;

    /// A logistic scorer over `dim` inputs with zero weights and the given
    /// bias, so its logit is constant.
    pub(crate) fn stub_scorer(dim: usize, bias: f64) -> BinaryScorer {
        let spec = NetworkSpec::logistic(dim, 1);
        let mut network = Network::init(&spec, 0).unwrap();
        let mut params = vec![0.0; network.param_count()];
        *params.last_mut().unwrap() = bias;
        network.set_flat_params(&params);
        BinaryScorer { network }
    }

    /// Builds a stub model whose scorers produce fixed logits.
    pub(crate) fn stub_model(normal: f64, mech: [f64; 3], corr: [f64; 3]) -> SrelModel {
        let dim = 4;
        let grid = FrequencyGrid::new(vec![1e9, 2e9, 3e9, 4e9]).unwrap();
        let scaler = Scaler {
            stats: vec![(0.0, 1.0); dim],
        };
        SrelModel {
            normal_detector: stub_scorer(dim, normal),
            ladders: vec![
                SeverityLadder {
                    cause: DefectCause::Mechanical,
                    scorers: mech.iter().map(|&b| stub_scorer(dim, b)).collect(),
                },
                SeverityLadder {
                    cause: DefectCause::Corrosion,
                    scorers: corr.iter().map(|&b| stub_scorer(dim, b)).collect(),
                },
            ],
            scaler,
            grid,
        }
    }

    #[test]
    fn aggregate_counts_positives_anywhere() {
        assert_eq!(aggregate_severity(&[true, true, false]), 2);
        assert_eq!(aggregate_severity(&[false, false, false]), 0);
        // Non-prefix firing still counts every positive.
        assert_eq!(aggregate_severity(&[true, false, true]), 2);
    }

    #[test]
    fn aggregate_matches_hamming_weight_exhaustively() {
        for bits in 0u8..8 {
            let decisions = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
            let hamming = bits.count_ones() as u8;
            assert_eq!(aggregate_severity(&decisions), hamming);
            // Permutation invariance over all 3! orders.
            let perms = [
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            for p in perms {
                let permuted = [decisions[p[0]], decisions[p[1]], decisions[p[2]]];
                assert_eq!(aggregate_severity(&permuted), hamming);
            }
        }
    }

    fn vector(normal: u8, rm: u8, rc: u8, sm: f64, sc: f64) -> OutputVector {
        OutputVector {
            normal,
            causes: vec![
                CauseScore {
                    cause: DefectCause::Mechanical,
                    rating: rm,
                    logistic_sum: sm,
                },
                CauseScore {
                    cause: DefectCause::Corrosion,
                    rating: rc,
                    logistic_sum: sc,
                },
            ],
        }
    }

    #[test]
    fn decide_named_cases() {
        // The worked ensemble-output example: (0, 1, 3) reads as C3.
        let d = decide(vector(0, 1, 3, 1.0, 2.5));
        assert_eq!(d.cause, DefectCause::Corrosion);
        assert_eq!(d.severity, 3);
        assert_eq!(d.class_code(), "C3");
        assert!(!d.tie_break_used);

        // Only the normal detector fires.
        let d = decide(vector(1, 0, 0, 0.2, 0.2));
        assert_eq!(d.cause, DefectCause::Normal);
        assert_eq!(d.severity, 0);

        // Defect tie falls to the larger logistic sum.
        let d = decide(vector(0, 2, 2, 1.7, 2.4));
        assert_eq!(d.cause, DefectCause::Corrosion);
        assert_eq!(d.severity, 2);
        assert!(d.tie_break_used);

        // Nothing fires: normal with severity 0.
        let d = decide(vector(0, 0, 0, 0.1, 0.1));
        assert_eq!(d.cause, DefectCause::Normal);
        assert_eq!(d.severity, 0);

        // A defect tying the normal detector wins (conservative alarm).
        let d = decide(vector(1, 1, 0, 1.9, 0.0));
        assert_eq!(d.cause, DefectCause::Mechanical);
        assert_eq!(d.severity, 1);
    }

    /// Brute-force oracle for the argmax + tie rules.
    fn decide_oracle(v: &OutputVector) -> (DefectCause, u8) {
        let best_defect = v.causes.iter().map(|c| c.rating).max().unwrap();
        if best_defect == 0 {
            return (DefectCause::Normal, 0);
        }
        let mut winner: Option<&CauseScore> = None;
        for c in &v.causes {
            if c.rating == best_defect {
                winner = Some(match winner {
                    None => c,
                    Some(w) if c.logistic_sum > w.logistic_sum => c,
                    Some(w) => w,
                });
            }
        }
        let w = winner.unwrap();
        (w.cause, w.rating)
    }

    #[test]
    fn decide_matches_enumeration_oracle() {
        // All integer vectors in {0,1} x {0..3}^2, each under both sum
        // orderings.
        for normal in 0..=1u8 {
            for rm in 0..=3u8 {
                for rc in 0..=3u8 {
                    for (sm, sc) in [(1.9, 0.4), (0.4, 1.9)] {
                        let v = vector(normal, rm, rc, sm, sc);
                        let d = decide(v.clone());
                        let (cause, severity) = decide_oracle(&v);
                        assert_eq!(d.cause, cause, "{v:?}");
                        assert_eq!(d.severity, severity, "{v:?}");
                        assert_eq!(d.severity == 0, d.cause == DefectCause::Normal);
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_ladder_logits_give_prefix_counts() {
        // Non-increasing ladder logits: the rating equals the largest k
        // with a positive logit.
        let cases = [
            ([3.0, 1.0, -1.0], 2),
            ([5.0, 4.0, 3.0], 3),
            ([-0.5, -1.0, -2.0], 0),
            ([0.5, -0.5, -0.6], 1),
        ];
        for (logits, expect) in cases {
            let model = stub_model(-1.0, logits, [-1.0, -1.0, -1.0]);
            let out = model.output_vector(&[0.0; 4]).unwrap();
            assert_eq!(out.causes[0].rating, expect);
        }
    }

    #[test]
    fn output_vector_matches_stub_logit_signs() {
        // Corrosion ladder (+,-,+) and mechanical (-,+,-), normal negative:
        // ratings (0, 1, 2).
        let model = stub_model(-2.0, [-1.0, 1.0, -1.0], [1.0, -1.0, 1.0]);
        let out = model.output_vector(&[0.0; 4]).unwrap();
        assert_eq!(out.components(), vec![0, 1, 2]);
        for c in &out.causes {
            assert!(c.rating <= 3);
            assert!(c.logistic_sum >= 0.0 && c.logistic_sum <= 3.0);
        }
    }

    #[test]
    fn diagnose_checks_grid_length() {
        let model = stub_model(5.0, [-1.0; 3], [-1.0; 3]);
        let ok = model.diagnose(&SignalPattern::new(vec![-3.0; 4])).unwrap();
        assert_eq!(ok.cause, DefectCause::Normal);
        let err = model.diagnose(&SignalPattern::new(vec![-3.0; 5])).unwrap_err();
        assert!(matches!(err, SrelError::GridMismatch { expected: 4, got: 5 }));

        let other_grid = FrequencyGrid::new(vec![1e9, 2e9, 3e9, 4.5e9]).unwrap();
        let err = model
            .diagnose_on_grid(&other_grid, &SignalPattern::new(vec![-3.0; 4]))
            .unwrap_err();
        assert!(matches!(err, SrelError::GridMismatch { .. }));
    }

    #[test]
    fn diagnose_is_deterministic() {
        let model = stub_model(-0.5, [2.0, 1.0, -1.0], [-1.0; 3]);
        let p = SignalPattern::new(vec![-8.0, -9.0, -10.0, -11.0]);
        assert_eq!(model.diagnose(&p).unwrap(), model.diagnose(&p).unwrap());
    }

    #[test]
    fn bundle_roundtrip() {
        let model = stub_model(0.7, [1.0, -2.0, 3.0], [-4.0, 5.0, -6.0]);
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&model, dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        assert_eq!(model, back);
        assert_eq!(back.scorer_count(), 7);
    }
}
