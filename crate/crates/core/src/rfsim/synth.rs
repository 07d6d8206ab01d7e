//! Defect-pattern synthesis: builds the interconnect as a segmented line
//! cascade, applies the crack and corrosion models, and samples the
//! reflection coefficient magnitude in dB on the grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    abcd_to_s11, lumped_series_abcd, segment_abcd, AbcdMatrix, ComplexImpedance, FrequencyGrid,
    LineSection, RfError,
};
use crate::dataio::{DefectCause, DefectLabel};

/// One sample's reflection-coefficient magnitude in dB (`20*log10|S11|`)
/// on a shared frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPattern {
    pub magnitude_db: Vec<f64>,
}

impl SignalPattern {
    pub fn new(magnitude_db: Vec<f64>) -> Self {
        Self { magnitude_db }
    }

    pub fn len(&self) -> usize {
        self.magnitude_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitude_db.is_empty()
    }

    /// Euclidean distance to another pattern of the same length.
    pub fn l2_distance(&self, other: &SignalPattern) -> f64 {
        assert_eq!(self.len(), other.len(), "patterns must share a grid");
        self.magnitude_db
            .iter()
            .zip(&other.magnitude_db)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A concrete defect state to synthesize: the label plus its physical
/// parameters and the seed controlling the sample's geometric identity.
///
/// Severity maps to crack count as 1 -> 1, 2 -> 3, 3 -> 5 cracks, and to a
/// corroded-area fraction drawn from (0.05, 0.30], (0.30, 0.60], or
/// (0.60, 1.0].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectScenario {
    pub label: DefectLabel,
    pub crack_count: usize,
    pub corrosion_fraction: f64,
    pub variation_seed: u64,
}

impl DefectScenario {
    /// Validated constructor; enforces the cause/parameter coupling.
    pub fn new(
        label: DefectLabel,
        crack_count: usize,
        corrosion_fraction: f64,
        variation_seed: u64,
    ) -> Result<Self, RfError> {
        if !(0.0..=1.0).contains(&corrosion_fraction) {
            return Err(RfError::InvalidScenario(format!(
                "corrosion fraction {corrosion_fraction} outside [0, 1]"
            )));
        }
        let crack_ok = (crack_count > 0) == (label.cause == DefectCause::Mechanical);
        let corr_ok = (corrosion_fraction > 0.0) == (label.cause == DefectCause::Corrosion);
        if !crack_ok || !corr_ok {
            return Err(RfError::InvalidScenario(format!(
                "cause {:?} incompatible with crack_count {crack_count}, \
                 corrosion_fraction {corrosion_fraction}",
                label.cause
            )));
        }
        Ok(Self {
            label,
            crack_count,
            corrosion_fraction,
            variation_seed,
        })
    }

    pub fn normal(variation_seed: u64) -> Self {
        Self {
            label: DefectLabel::NORMAL,
            crack_count: 0,
            corrosion_fraction: 0.0,
            variation_seed,
        }
    }

    /// Mechanical defect of the given severity: 1, 3, or 5 cracks.
    pub fn mechanical(severity: u8, variation_seed: u64) -> Result<Self, RfError> {
        let label = DefectLabel::defect(DefectCause::Mechanical, severity)
            .map_err(|e| RfError::InvalidScenario(e.to_string()))?;
        Ok(Self {
            label,
            crack_count: crack_count_for_severity(severity),
            corrosion_fraction: 0.0,
            variation_seed,
        })
    }

    /// Corrosion defect with an explicit corroded-area fraction, which must
    /// fall in the severity's band.
    pub fn corrosion(severity: u8, fraction: f64, variation_seed: u64) -> Result<Self, RfError> {
        let label = DefectLabel::defect(DefectCause::Corrosion, severity)
            .map_err(|e| RfError::InvalidScenario(e.to_string()))?;
        let (lo, hi) = corrosion_band(severity);
        if !(fraction > lo && fraction <= hi) {
            return Err(RfError::InvalidScenario(format!(
                "corrosion fraction {fraction} outside severity-{severity} band ({lo}, {hi}]"
            )));
        }
        Ok(Self {
            label,
            crack_count: 0,
            corrosion_fraction: fraction,
            variation_seed,
        })
    }

    /// Corrosion defect with the fraction drawn uniformly from the
    /// severity's band using the given rng.
    pub fn corrosion_sampled<R: Rng>(
        severity: u8,
        rng: &mut R,
        variation_seed: u64,
    ) -> Result<Self, RfError> {
        let (lo, hi) = corrosion_band(severity);
        // Uniform over (lo, hi]: u in [0, 1) maps to hi - u*(hi - lo).
        let u: f64 = rng.gen();
        Self::corrosion(severity, hi - u * (hi - lo), variation_seed)
    }
}

/// Cracks per mechanical severity level: 1, 3, and 5.
pub fn crack_count_for_severity(severity: u8) -> usize {
    match severity {
        1 => 1,
        2 => 3,
        3 => 5,
        _ => 0,
    }
}

/// Corroded-area fraction band per corrosion severity level.
pub fn corrosion_band(severity: u8) -> (f64, f64) {
    match severity {
        1 => (0.05, 0.30),
        2 => (0.30, 0.60),
        _ => (0.60, 1.0),
    }
}

/// Tunable constants of the synthesis model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    /// Reference impedance for S11, ohms.
    pub z_ref: f64,
    /// Number of equal sub-segments the line is split into. Cracks sit on
    /// interior boundaries, so at most `segments - 1` cracks fit.
    pub segments: usize,
    /// Series resistance of one crack, ohms.
    pub crack_r: f64,
    /// Series capacitance of one crack (partially bridged gap), farads.
    pub crack_c: f64,
    /// Corrosion multiplier: `r` and `skin_coeff` scale by
    /// `1 + kappa * corrosion_fraction`.
    pub kappa: f64,
    /// Relative sigma of the Gaussian manufacturing variation applied to
    /// each RLGC nominal, truncated at +-3 sigma.
    pub variation_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            z_ref: 50.0,
            segments: 16,
            crack_r: 0.05,
            crack_c: 5.0e-12,
            kappa: 4.0,
            variation_sigma: 0.03,
        }
    }
}

/// The default nominal line: a 50 mm, ~50 ohm copper-on-glass trace whose
/// DC resistance matches the 0.6 ohm scale of real specimens.
pub fn default_nominal_line() -> LineSection {
    LineSection {
        r: 12.0,
        l: 2.5e-7,
        g: 1.0e-4,
        c: 1.0e-10,
        length: 0.05,
        skin_coeff: 1.0e-3,
    }
}

/// Draws a standard-normal value truncated to |z| <= 3 by rejection.
fn truncated_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let normal = Normal::new(0.0f64, 1.0).expect("unit normal");
    loop {
        let z: f64 = normal.sample(rng);
        if z.abs() <= 3.0 {
            return z;
        }
    }
}

/// Synthesizes the magnitude-frequency pattern for one defect scenario.
///
/// The nominal line is split into `cfg.segments` equal sub-segments. Crack
/// discontinuities (series `crack_r` plus series `crack_c`) are inserted at
/// interior boundaries chosen deterministically from
/// `scenario.variation_seed`; corrosion scales `r` and `skin_coeff` by
/// `1 + kappa * fraction`; manufacturing variation perturbs each RLGC
/// nominal by a truncated Gaussian factor drawn from `rng_seed`. The result
/// is `20*log10|S11(f)|` on the grid. Pure in all of its arguments.
pub fn synthesize_pattern(
    scenario: &DefectScenario,
    grid: &FrequencyGrid,
    nominal: &LineSection,
    cfg: &SynthConfig,
    rng_seed: u64,
) -> Result<SignalPattern, RfError> {
    nominal.validate()?;
    let interior = cfg.segments.saturating_sub(1);
    if scenario.crack_count > interior {
        return Err(RfError::TooManyCracks {
            requested: scenario.crack_count,
            boundaries: interior,
        });
    }

    // Manufacturing variation: one multiplier per RLGC nominal per sample.
    let mut var_rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let factor = |rng: &mut ChaCha8Rng| 1.0 + cfg.variation_sigma * truncated_standard_normal(rng);
    let (fr, fl, fg, fc, fskin) = (
        factor(&mut var_rng),
        factor(&mut var_rng),
        factor(&mut var_rng),
        factor(&mut var_rng),
        factor(&mut var_rng),
    );

    let corrosion_scale = 1.0 + cfg.kappa * scenario.corrosion_fraction;
    let section = LineSection {
        r: nominal.r * fr * corrosion_scale,
        l: nominal.l * fl,
        g: nominal.g * fg,
        c: nominal.c * fc,
        length: nominal.length / cfg.segments as f64,
        skin_coeff: nominal.skin_coeff * fskin * corrosion_scale,
    };
    section.validate()?;

    // Crack placement: sample distinct interior boundaries from the
    // scenario's own seed so the geometry is part of the sample identity.
    let mut boundaries: Vec<usize> = (1..cfg.segments).collect();
    let mut pos_rng = ChaCha8Rng::seed_from_u64(scenario.variation_seed);
    let mut crack_at = vec![false; cfg.segments + 1];
    for _ in 0..scenario.crack_count {
        let idx = pos_rng.gen_range(0..boundaries.len());
        crack_at[boundaries.swap_remove(idx)] = true;
    }

    let mut magnitude_db = Vec::with_capacity(grid.len());
    for &f in grid.points() {
        let seg = segment_abcd(&section, f)?;
        let crack = crack_impedance(cfg, f);
        let mut m = AbcdMatrix::identity();
        for k in 0..cfg.segments {
            m = m.then(&seg);
            if crack_at[k + 1] {
                m = m.then(&lumped_series_abcd(crack));
            }
        }
        let s11 = abcd_to_s11(&m, cfg.z_ref)?;
        magnitude_db.push(20.0 * s11.norm().max(1e-30).log10());
    }
    Ok(SignalPattern::new(magnitude_db))
}

/// Series impedance of one crack at frequency `f`: `crack_r + 1/(j*w*crack_c)`.
fn crack_impedance(cfg: &SynthConfig, f: f64) -> ComplexImpedance {
    let w = 2.0 * std::f64::consts::PI * f;
    ComplexImpedance::from(Complex64::new(cfg.crack_r, 0.0) + Complex64::new(0.0, -1.0 / (w * cfg.crack_c)))
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation `sigma_db`
/// to every dB magnitude. Deterministic for a fixed seed; `sigma_db = 0`
/// returns the input unchanged.
pub fn inject_noise(p: &SignalPattern, sigma_db: f64, seed: u64) -> SignalPattern {
    assert!(
        sigma_db >= 0.0 && sigma_db.is_finite(),
        "noise sigma must be finite and >= 0"
    );
    if sigma_db == 0.0 {
        return p.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_db).expect("valid sigma");
    let magnitude_db = p
        .magnitude_db
        .iter()
        .map(|&v| v + normal.sample(&mut rng))
        .collect();
    SignalPattern::new(magnitude_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfsim::cascade;

    fn sigma_zero_cfg() -> SynthConfig {
        SynthConfig {
            variation_sigma: 0.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn scenario_invariants_enforced() {
        assert!(DefectScenario::new(DefectLabel::NORMAL, 0, 0.0, 1).is_ok());
        assert!(DefectScenario::new(DefectLabel::NORMAL, 1, 0.0, 1).is_err());
        assert!(DefectScenario::new(DefectLabel::NORMAL, 0, 0.5, 1).is_err());
        let m2 = DefectLabel::defect(DefectCause::Mechanical, 2).unwrap();
        assert!(DefectScenario::new(m2, 3, 0.0, 1).is_ok());
        assert!(DefectScenario::new(m2, 0, 0.0, 1).is_err());
        let c1 = DefectLabel::defect(DefectCause::Corrosion, 1).unwrap();
        assert!(DefectScenario::new(c1, 0, 0.2, 1).is_ok());
        assert!(DefectScenario::new(c1, 0, 0.0, 1).is_err());
        assert!(DefectScenario::corrosion(1, 0.4, 1).is_err()); // outside band
    }

    #[test]
    fn synthesis_is_deterministic() {
        let grid = FrequencyGrid::default_grid();
        let nominal = default_nominal_line();
        let cfg = sigma_zero_cfg();
        let sc = DefectScenario::normal(11);
        let a = synthesize_pattern(&sc, &grid, &nominal, &cfg, 99).unwrap();
        let b = synthesize_pattern(&sc, &grid, &nominal, &cfg, 99).unwrap();
        assert_eq!(a, b);

        // Same holds with variation enabled.
        let cfg = SynthConfig::default();
        let a = synthesize_pattern(&sc, &grid, &nominal, &cfg, 99).unwrap();
        let b = synthesize_pattern(&sc, &grid, &nominal, &cfg, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn defect_free_pattern_equals_direct_cascade() {
        // crack_count = 0, corrosion = 0, sigma = 0: the pattern must equal
        // the plain segmented cascade evaluated directly.
        let grid = FrequencyGrid::linear(1e8, 1e10, 21).unwrap();
        let nominal = default_nominal_line();
        let cfg = sigma_zero_cfg();
        let got = synthesize_pattern(&DefectScenario::normal(5), &grid, &nominal, &cfg, 1).unwrap();

        for (i, &f) in grid.points().iter().enumerate() {
            let seg = segment_abcd(
                &nominal.with_length(nominal.length / cfg.segments as f64),
                f,
            )
            .unwrap();
            let m = cascade(&vec![seg; cfg.segments]).unwrap();
            let s11 = abcd_to_s11(&m, cfg.z_ref).unwrap();
            let expect = 20.0 * s11.norm().max(1e-30).log10();
            assert!(
                (got.magnitude_db[i] - expect).abs() < 1e-9,
                "bin {i}: {} vs {}",
                got.magnitude_db[i],
                expect
            );
        }
    }

    #[test]
    fn synthesized_patterns_are_passive() {
        let grid = FrequencyGrid::default_grid();
        let nominal = default_nominal_line();
        let cfg = SynthConfig::default();
        for (i, sc) in [
            DefectScenario::normal(3),
            DefectScenario::mechanical(3, 4).unwrap(),
            DefectScenario::corrosion(3, 0.9, 5).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let p = synthesize_pattern(sc, &grid, &nominal, &cfg, 1000 + i as u64).unwrap();
            for &v in &p.magnitude_db {
                assert!(v.is_finite());
                assert!(v <= 1e-9, "non-passive magnitude {v} dB");
            }
        }
    }

    #[test]
    fn class_mean_distance_grows_with_severity() {
        // With sigma = 0 the class-mean patterns must order strictly by
        // severity along both defect causes.
        let grid = FrequencyGrid::default_grid();
        let nominal = default_nominal_line();
        let cfg = sigma_zero_cfg();
        let normal = synthesize_pattern(&DefectScenario::normal(0), &grid, &nominal, &cfg, 0).unwrap();

        let mean_for = |scenarios: Vec<DefectScenario>| {
            let mut acc = vec![0.0; grid.len()];
            let n = scenarios.len() as f64;
            for (i, sc) in scenarios.iter().enumerate() {
                let p = synthesize_pattern(sc, &grid, &nominal, &cfg, i as u64).unwrap();
                for (a, v) in acc.iter_mut().zip(&p.magnitude_db) {
                    *a += v / n;
                }
            }
            SignalPattern::new(acc)
        };

        let mut mech = Vec::new();
        for sev in 1..=3u8 {
            let scenarios = (0..40)
                .map(|s| DefectScenario::mechanical(sev, s).unwrap())
                .collect();
            mech.push(normal.l2_distance(&mean_for(scenarios)));
        }
        assert!(mech[0] < mech[1] && mech[1] < mech[2], "mechanical {mech:?}");

        let mut corr = Vec::new();
        for sev in 1..=3u8 {
            let (lo, hi) = corrosion_band(sev);
            let mid = 0.5 * (lo + hi);
            let scenarios = (0..40)
                .map(|s| DefectScenario::corrosion(sev, mid, s).unwrap())
                .collect();
            corr.push(normal.l2_distance(&mean_for(scenarios)));
        }
        assert!(corr[0] < corr[1] && corr[1] < corr[2], "corrosion {corr:?}");
    }

    #[test]
    fn noise_identity_determinism_and_moments() {
        let p = SignalPattern::new(vec![-10.0; 1000]);
        assert_eq!(inject_noise(&p, 0.0, 3), p);
        assert_eq!(inject_noise(&p, 1.5, 3), inject_noise(&p, 1.5, 3));
        assert_ne!(inject_noise(&p, 1.5, 3), inject_noise(&p, 1.5, 4));

        // Empirical moments over 1e5 injected values at sigma = 2.
        let big = SignalPattern::new(vec![0.0; 100_000]);
        let noisy = inject_noise(&big, 2.0, 12345);
        let n = noisy.magnitude_db.len() as f64;
        let mean = noisy.magnitude_db.iter().sum::<f64>() / n;
        let var = noisy
            .magnitude_db
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1.0);
        assert!(mean.abs() < 0.05, "sample mean {mean}");
        let sd = var.sqrt();
        assert!((1.95..=2.05).contains(&sd), "sample sigma {sd}");
    }
}
