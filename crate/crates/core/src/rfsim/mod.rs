//! Transmission-line synthesis of reflection-coefficient signal patterns.
//!
//! An interconnect is modeled as a cascade of RLGC line segments and lumped
//! series discontinuities, all expressed as ABCD (chain) matrices. The
//! one-port reflection coefficient seen from port 1 with both ports
//! referenced to the same real impedance is then derived from the cascaded
//! matrix, and `20·log10|S11|` sampled on a frequency grid forms the
//! magnitude-frequency pattern a dataset sample carries.

use num_complex::Complex64;
use thiserror::Error;

mod synth;

pub use synth::{
    corrosion_band, crack_count_for_severity, default_nominal_line, inject_noise,
    synthesize_pattern, DefectScenario, SignalPattern, SynthConfig,
};

/// Errors from the RF math and synthesis layer.
#[derive(Debug, Error)]
pub enum RfError {
    #[error("degenerate denominator: |{context}| = {magnitude:e} is below 1e-15")]
    DegenerateDenominator {
        context: &'static str,
        magnitude: f64,
    },
    #[error("cascade of an empty matrix list")]
    EmptyCascade,
    #[error("propagation constant overflow: Re(gamma*len) = {0} exceeds 700")]
    PropagationOverflow(f64),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("invalid line section: {0}")]
    InvalidSection(String),
    #[error("invalid defect scenario: {0}")]
    InvalidScenario(String),
    #[error("{requested} cracks do not fit on {boundaries} interior segment boundaries")]
    TooManyCracks { requested: usize, boundaries: usize },
}

/// Ordered frequency sample points in Hz, shared by every pattern in a
/// dataset.
///
/// Invariants: strictly increasing, finite, positive. Datasets additionally
/// require at least 2 points; a lone-point grid can still come out of a
/// single-row Touchstone sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, RfError> {
        if points.is_empty() {
            return Err(RfError::InvalidGrid("need at least 1 point".into()));
        }
        for (i, &f) in points.iter().enumerate() {
            if !f.is_finite() || f <= 0.0 {
                return Err(RfError::InvalidGrid(format!(
                    "point {i} = {f} is not finite and positive"
                )));
            }
            if i > 0 && f <= points[i - 1] {
                return Err(RfError::InvalidGrid(format!(
                    "points must be strictly increasing, violated at index {i}"
                )));
            }
        }
        Ok(Self { points })
    }

    /// `n` linearly spaced points from `start` to `stop` (both in Hz).
    pub fn linear(start: f64, stop: f64, n: usize) -> Result<Self, RfError> {
        if n < 2 {
            return Err(RfError::InvalidGrid("need at least 2 points".into()));
        }
        let step = (stop - start) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
        // Pin the endpoint so the grid is exactly [start, stop].
        points[n - 1] = stop;
        Self::new(points)
    }

    /// The default measurement grid: 201 points from 10 MHz to 14 GHz.
    pub fn default_grid() -> Self {
        Self::linear(1.0e7, 1.4e10, 201).expect("default grid is valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least 1 point
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Index of the grid point closest to `f_hz`. Errors when `f_hz` lies
    /// outside `[min, max]` of the grid.
    pub fn nearest_bin(&self, f_hz: f64) -> Result<usize, RfError> {
        let (lo, hi) = (self.points[0], *self.points.last().unwrap());
        if !(lo..=hi).contains(&f_hz) {
            return Err(RfError::InvalidGrid(format!(
                "frequency {f_hz} Hz outside grid range [{lo}, {hi}]"
            )));
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &p) in self.points.iter().enumerate() {
            let d = (p - f_hz).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best)
    }

    /// True when the two grids have the same length and frequencies equal
    /// within `rel_tol` relative tolerance.
    pub fn matches(&self, other: &FrequencyGrid, rel_tol: f64) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| (a - b).abs() <= rel_tol * a.abs().max(b.abs()))
    }
}

/// Complex impedance in ohms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexImpedance {
    pub re: f64,
    pub im: f64,
}

impl ComplexImpedance {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl From<Complex64> for ComplexImpedance {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// ABCD (chain) matrix of a two-port. `b` is in ohms, `c` in siemens,
/// `a` and `d` dimensionless. Reciprocal two-ports satisfy `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcdMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl AbcdMatrix {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Chain product `self * rhs`, with `self` on the port-1 side.
    pub fn then(&self, rhs: &AbcdMatrix) -> AbcdMatrix {
        AbcdMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

/// Per-unit-length RLGC description of a uniform line section.
///
/// `skin_coeff` adds `skin_coeff * sqrt(f)` to the series resistance, which
/// is what makes surface damage visible at high frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSection {
    /// Series resistance, ohm/m.
    pub r: f64,
    /// Series inductance, H/m.
    pub l: f64,
    /// Shunt conductance, S/m.
    pub g: f64,
    /// Shunt capacitance, F/m.
    pub c: f64,
    /// Physical length, m.
    pub length: f64,
    /// Skin-effect coefficient, ohm/(m*sqrt(Hz)).
    pub skin_coeff: f64,
}

impl LineSection {
    pub fn validate(&self) -> Result<(), RfError> {
        let all_finite = [self.r, self.l, self.g, self.c, self.length, self.skin_coeff]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(RfError::InvalidSection("non-finite parameter".into()));
        }
        if self.length < 0.0 {
            return Err(RfError::InvalidSection(format!(
                "length {} must be >= 0",
                self.length
            )));
        }
        if self.l <= 0.0 || self.c <= 0.0 {
            return Err(RfError::InvalidSection(
                "per-unit-length L and C must be > 0".into(),
            ));
        }
        if self.r < 0.0 || self.g < 0.0 || self.skin_coeff < 0.0 {
            return Err(RfError::InvalidSection(
                "R, G, and skin coefficient must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Same per-unit-length parameters over a different length.
    pub fn with_length(&self, length: f64) -> Self {
        Self { length, ..*self }
    }
}

/// Voltage reflection coefficient of a load against a reference impedance:
/// `(zl - z0) / (zl + z0)`.
pub fn reflection_coefficient(
    zl: ComplexImpedance,
    z0: ComplexImpedance,
) -> Result<Complex64, RfError> {
    let zl = zl.as_complex();
    let z0 = z0.as_complex();
    let den = zl + z0;
    if den.norm() < 1e-15 {
        return Err(RfError::DegenerateDenominator {
            context: "zl + z0",
            magnitude: den.norm(),
        });
    }
    Ok((zl - z0) / den)
}

/// ABCD matrix of a uniform RLGC section at frequency `f` (Hz), from the
/// frequency-domain solution of the telegrapher's equations:
/// `z = (r + skin*sqrt(f)) + j*2*pi*f*l`, `y = g + j*2*pi*f*c`,
/// `gamma = sqrt(z*y)`, `Zc = sqrt(z/y)`, then
/// `a = d = cosh(gamma*len)`, `b = Zc*sinh(gamma*len)`,
/// `c = sinh(gamma*len)/Zc`.
pub fn segment_abcd(section: &LineSection, f: f64) -> Result<AbcdMatrix, RfError> {
    section.validate()?;
    if !(f > 0.0) || !f.is_finite() {
        return Err(RfError::InvalidGrid(format!(
            "frequency {f} must be finite and > 0"
        )));
    }
    if section.length == 0.0 {
        return Ok(AbcdMatrix::identity());
    }
    let w = 2.0 * std::f64::consts::PI * f;
    let z = Complex64::new(section.r + section.skin_coeff * f.sqrt(), w * section.l);
    let y = Complex64::new(section.g, w * section.c);
    let gamma = (z * y).sqrt();
    let zc = (z / y).sqrt();
    let gl = gamma * section.length;
    if gl.re > 700.0 {
        return Err(RfError::PropagationOverflow(gl.re));
    }
    let (sh, ch) = (gl.sinh(), gl.cosh());
    Ok(AbcdMatrix {
        a: ch,
        b: zc * sh,
        c: sh / zc,
        d: ch,
    })
}

/// ABCD matrix of a lumped series impedance: `[[1, z], [0, 1]]`.
pub fn lumped_series_abcd(z: ComplexImpedance) -> AbcdMatrix {
    AbcdMatrix {
        a: Complex64::new(1.0, 0.0),
        b: z.as_complex(),
        c: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    }
}

/// Left-to-right chain product; the first element sits on the port-1 side.
pub fn cascade(matrices: &[AbcdMatrix]) -> Result<AbcdMatrix, RfError> {
    let (first, rest) = matrices.split_first().ok_or(RfError::EmptyCascade)?;
    Ok(rest.iter().fold(*first, |acc, m| acc.then(m)))
}

/// Input reflection coefficient of a two-port with both ports referenced to
/// the real impedance `zref`:
/// `S11 = (a + b/zref - c*zref - d) / (a + b/zref + c*zref + d)`.
pub fn abcd_to_s11(m: &AbcdMatrix, zref: f64) -> Result<Complex64, RfError> {
    if !(zref > 0.0) || !zref.is_finite() {
        return Err(RfError::InvalidSection(format!(
            "reference impedance {zref} must be finite and > 0"
        )));
    }
    let b_over = m.b / zref;
    let c_times = m.c * zref;
    let den = m.a + b_over + c_times + m.d;
    if den.norm() < 1e-15 {
        return Err(RfError::DegenerateDenominator {
            context: "a + b/zref + c*zref + d",
            magnitude: den.norm(),
        });
    }
    Ok((m.a + b_over - c_times - m.d) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(re: f64, im: f64) -> ComplexImpedance {
        ComplexImpedance::new(re, im)
    }

    #[test]
    fn reflection_matched_short_open() {
        let g = reflection_coefficient(z(50.0, 0.0), z(50.0, 0.0)).unwrap();
        assert_eq!(g, Complex64::new(0.0, 0.0));

        let g = reflection_coefficient(z(0.0, 0.0), z(50.0, 0.0)).unwrap();
        assert_eq!(g, Complex64::new(-1.0, 0.0));

        let g = reflection_coefficient(z(100.0, 0.0), z(50.0, 0.0)).unwrap();
        assert_relative_eq!(g.re, 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(g.im, 0.0);
    }

    #[test]
    fn reflection_degenerate_denominator() {
        let err = reflection_coefficient(z(50.0, 1.0), z(-50.0, -1.0)).unwrap_err();
        assert!(matches!(err, RfError::DegenerateDenominator { .. }));
    }

    #[test]
    fn zero_length_section_is_identity() {
        let s = LineSection {
            r: 12.0,
            l: 2.5e-7,
            g: 1e-4,
            c: 1e-10,
            length: 0.0,
            skin_coeff: 1e-3,
        };
        let m = segment_abcd(&s, 1e9).unwrap();
        assert_eq!(m, AbcdMatrix::identity());
    }

    #[test]
    fn lossless_section_matches_closed_form() {
        // Independent closed form for a lossless line:
        // a = cos(beta*l), b = j*Zc*sin(beta*l), beta = 2*pi*f*sqrt(l*c).
        let s = LineSection {
            r: 0.0,
            l: 2.5e-7,
            g: 0.0,
            c: 1.0e-10,
            length: 0.05,
            skin_coeff: 0.0,
        };
        for f in [1e8, 1e9, 5e9, 1.4e10] {
            let m = segment_abcd(&s, f).unwrap();
            let beta = 2.0 * std::f64::consts::PI * f * (s.l * s.c).sqrt();
            let zc = (s.l / s.c).sqrt();
            let bl = beta * s.length;
            assert_relative_eq!(m.a.re, bl.cos(), max_relative = 1e-12);
            assert!(m.a.im.abs() < 1e-12);
            assert_relative_eq!(m.b.im, zc * bl.sin(), max_relative = 1e-12);
            assert!(m.b.re.abs() < 1e-9);
            assert_relative_eq!(m.c.im, bl.sin() / zc, max_relative = 1e-12);
            assert_relative_eq!(m.d.re, bl.cos(), max_relative = 1e-12);
        }
    }

    #[test]
    fn section_determinant_is_unity() {
        let s = LineSection {
            r: 12.0,
            l: 2.5e-7,
            g: 1e-4,
            c: 1e-10,
            length: 0.05,
            skin_coeff: 1e-3,
        };
        for f in [1e7, 3.3e8, 8e9, 1.4e10] {
            let det = segment_abcd(&s, f).unwrap().det();
            assert_relative_eq!(det.re, 1.0, max_relative = 1e-9);
            assert!(det.im.abs() < 1e-9);
        }
    }

    #[test]
    fn series_identity_and_additivity() {
        assert_eq!(
            lumped_series_abcd(z(0.0, 0.0)),
            AbcdMatrix::identity()
        );
        let z1 = z(100.0, 3.0);
        let z2 = z(50.0, -1.0);
        let chained = cascade(&[lumped_series_abcd(z1), lumped_series_abcd(z2)]).unwrap();
        let direct = lumped_series_abcd(z(150.0, 2.0));
        assert_eq!(chained, direct);
        assert_eq!(direct.det(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn cascade_of_identities_and_empty_error() {
        let id = AbcdMatrix::identity();
        assert_eq!(cascade(&[id, id]).unwrap(), id);
        assert!(matches!(cascade(&[]), Err(RfError::EmptyCascade)));
    }

    /// Brute-force 2x2 complex multiply used as the independent product
    /// oracle for cascade ordering.
    fn brute_mul(m1: &AbcdMatrix, m2: &AbcdMatrix) -> [[Complex64; 2]; 2] {
        let a = [[m1.a, m1.b], [m1.c, m1.d]];
        let b = [[m2.a, m2.b], [m2.c, m2.d]];
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for (k, bk) in b.iter().enumerate() {
                    out[i][j] += a[i][k] * bk[j];
                }
            }
        }
        out
    }

    #[test]
    fn cascade_order_matters_and_matches_brute_force() {
        let series = lumped_series_abcd(z(75.0, 10.0));
        let line = segment_abcd(
            &LineSection {
                r: 12.0,
                l: 2.5e-7,
                g: 1e-4,
                c: 1e-10,
                length: 0.05,
                skin_coeff: 1e-3,
            },
            2e9,
        )
        .unwrap();

        let fwd = cascade(&[series, line]).unwrap();
        let rev = cascade(&[line, series]).unwrap();
        assert_ne!(fwd, rev);

        for (m, pair) in [(fwd, (series, line)), (rev, (line, series))] {
            let o = brute_mul(&pair.0, &pair.1);
            assert_relative_eq!(m.a.re, o[0][0].re, max_relative = 1e-14);
            assert_relative_eq!(m.b.re, o[0][1].re, max_relative = 1e-14);
            assert_relative_eq!(m.c.im, o[1][0].im, max_relative = 1e-14);
            assert_relative_eq!(m.d.re, o[1][1].re, max_relative = 1e-14);
        }
    }

    #[test]
    fn s11_of_identity_and_series() {
        let s = abcd_to_s11(&AbcdMatrix::identity(), 50.0).unwrap();
        assert_eq!(s, Complex64::new(0.0, 0.0));

        // Series z against zref: S11 = z / (z + 2*zref).
        let s = abcd_to_s11(&lumped_series_abcd(z(100.0, 0.0)), 50.0).unwrap();
        assert_relative_eq!(s.re, 0.5, max_relative = 1e-15);
        assert_eq!(s.im, 0.0);
    }

    #[test]
    fn s11_passive_sections_stay_inside_unit_circle() {
        // 1000 random passive RLGC sections: |S11| <= 1.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let section = LineSection {
                r: rng.gen_range(0.0..200.0),
                l: rng.gen_range(5e-8..1e-6),
                g: rng.gen_range(0.0..1e-2),
                c: rng.gen_range(2e-11..5e-10),
                length: rng.gen_range(0.0..0.2),
                skin_coeff: rng.gen_range(0.0..5e-3),
            };
            let f = rng.gen_range(1e7..1.4e10);
            let m = segment_abcd(&section, f).unwrap();
            let s = abcd_to_s11(&m, 50.0).unwrap();
            assert!(
                s.norm() <= 1.0 + 1e-9,
                "|S11| = {} for {section:?} at {f}",
                s.norm()
            );
        }
    }

    #[test]
    fn nearest_bin_default_grid_at_8ghz() {
        let grid = FrequencyGrid::default_grid();
        let bin = grid.nearest_bin(8e9).unwrap();
        let f = grid.points()[bin];
        for &p in grid.points() {
            assert!((p - 8e9).abs() >= (f - 8e9).abs() - 1e-6);
        }
        assert!(grid.nearest_bin(2e10).is_err());
    }

    #[test]
    fn grid_validation_rejects_bad_inputs() {
        assert!(FrequencyGrid::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![1e9]).is_ok());
        assert!(FrequencyGrid::new(vec![1e9, 1e9]).is_err());
        assert!(FrequencyGrid::new(vec![2e9, 1e9]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1e9]).is_err());
        assert!(FrequencyGrid::new(vec![1e9, f64::NAN]).is_err());
    }

    proptest! {
        /// Gamma(z, z) = 0 for any nonzero load.
        #[test]
        fn reflection_of_matched_load_is_zero(re in -1e3f64..1e3, im in -1e3f64..1e3) {
            prop_assume!(re.abs() + im.abs() > 1e-6);
            let g = reflection_coefficient(z(re, im), z(re, im)).unwrap();
            prop_assert!(g.norm() < 1e-12);
        }

        /// |Gamma| <= 1 whenever Re(zl) >= 0 and z0 is real positive.
        #[test]
        fn reflection_passive_load_bounded(re in 0f64..1e4, im in -1e4f64..1e4, z0 in 1e-2f64..1e4) {
            let g = reflection_coefficient(z(re, im), z(z0, 0.0)).unwrap();
            prop_assert!(g.norm() <= 1.0 + 1e-12);
        }

        /// Series-impedance closed form: S11 = z / (z + 2*z0), within 1e-12.
        #[test]
        fn series_s11_closed_form(re in -1e3f64..1e3, im in -1e3f64..1e3, z0 in 1f64..500f64) {
            let m = lumped_series_abcd(z(re, im));
            let num = Complex64::new(re, im);
            let den = num + 2.0 * z0;
            prop_assume!(den.norm() > 1e-9);
            let expect = num / den;
            let got = abcd_to_s11(&m, z0).unwrap();
            prop_assert!((got - expect).norm() < 1e-12);
        }
    }
}
