//! Touchstone v1 one-port (`.s1p`) reading and writing.
//!
//! Supported surface: `!` comments (full-line and trailing), one option
//! line `# <unit> S <format> R <zref>` with formats MA/DB/RI and units
//! Hz/kHz/MHz/GHz, then one `f v1 v2` row per frequency, strictly
//! ascending. A missing option line means `# GHz S MA R 50`.

use num_complex::Complex64;
use thiserror::Error;

use crate::rfsim::FrequencyGrid;

#[derive(Debug, Error)]
pub enum TouchstoneError {
    #[error("line {line}: malformed option line: {msg}")]
    OptionLine { line: usize, msg: String },
    #[error("line {line}: expected 3 columns (frequency and two values), found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: cannot parse `{field}` as a number")]
    BadNumber { line: usize, field: String },
    #[error("line {line}: frequency {f} Hz does not ascend past {prev} Hz")]
    NonMonotone { line: usize, f: f64, prev: f64 },
    #[error("no data rows found")]
    EmptySweep,
    #[error("invalid frequency grid: {0}")]
    BadGrid(String),
}

/// Frequency unit of the option line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TouchstoneUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl TouchstoneUnit {
    pub fn multiplier(self) -> f64 {
        match self {
            TouchstoneUnit::Hz => 1.0,
            TouchstoneUnit::KHz => 1e3,
            TouchstoneUnit::MHz => 1e6,
            TouchstoneUnit::GHz => 1e9,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            TouchstoneUnit::Hz => "Hz",
            TouchstoneUnit::KHz => "kHz",
            TouchstoneUnit::MHz => "MHz",
            TouchstoneUnit::GHz => "GHz",
        }
    }

    fn parse(tok: &str) -> Option<Self> {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => Some(TouchstoneUnit::Hz),
            "KHZ" => Some(TouchstoneUnit::KHz),
            "MHZ" => Some(TouchstoneUnit::MHz),
            "GHZ" => Some(TouchstoneUnit::GHz),
            _ => None,
        }
    }

    pub const ALL: [TouchstoneUnit; 4] = [
        TouchstoneUnit::Hz,
        TouchstoneUnit::KHz,
        TouchstoneUnit::MHz,
        TouchstoneUnit::GHz,
    ];
}

/// Value encoding of the two data columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TouchstoneFormat {
    /// Magnitude and angle in degrees.
    Ma,
    /// 20*log10(magnitude) in dB and angle in degrees.
    Db,
    /// Real and imaginary parts.
    Ri,
}

impl TouchstoneFormat {
    pub fn token(self) -> &'static str {
        match self {
            TouchstoneFormat::Ma => "MA",
            TouchstoneFormat::Db => "DB",
            TouchstoneFormat::Ri => "RI",
        }
    }

    fn parse(tok: &str) -> Option<Self> {
        match tok.to_ascii_uppercase().as_str() {
            "MA" => Some(TouchstoneFormat::Ma),
            "DB" => Some(TouchstoneFormat::Db),
            "RI" => Some(TouchstoneFormat::Ri),
            _ => None,
        }
    }

    fn decode(self, v1: f64, v2: f64) -> Complex64 {
        match self {
            TouchstoneFormat::Ri => Complex64::new(v1, v2),
            TouchstoneFormat::Ma => Complex64::from_polar(v1, v2.to_radians()),
            TouchstoneFormat::Db => {
                Complex64::from_polar(10f64.powf(v1 / 20.0), v2.to_radians())
            }
        }
    }

    fn encode(self, s: Complex64) -> (f64, f64) {
        match self {
            TouchstoneFormat::Ri => (s.re, s.im),
            TouchstoneFormat::Ma => (s.norm(), s.arg().to_degrees()),
            TouchstoneFormat::Db => (20.0 * s.norm().log10(), s.arg().to_degrees()),
        }
    }

    pub const ALL: [TouchstoneFormat; 3] = [
        TouchstoneFormat::Ma,
        TouchstoneFormat::Db,
        TouchstoneFormat::Ri,
    ];
}

/// Parsed option-line settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchstoneOptions {
    pub unit: TouchstoneUnit,
    pub format: TouchstoneFormat,
    pub zref: f64,
}

impl Default for TouchstoneOptions {
    fn default() -> Self {
        Self {
            unit: TouchstoneUnit::GHz,
            format: TouchstoneFormat::Ma,
            zref: 50.0,
        }
    }
}

impl TouchstoneOptions {
    /// The canonical lossless encoding: `# Hz S RI R 50`. Writing with it
    /// makes parse -> write -> parse an exact fixed point, since real and
    /// imaginary parts round-trip bit-for-bit through decimal text.
    pub fn canonical() -> Self {
        Self {
            unit: TouchstoneUnit::Hz,
            format: TouchstoneFormat::Ri,
            zref: 50.0,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('!') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_option_line(line: &str, line_no: usize) -> Result<TouchstoneOptions, TouchstoneError> {
    let mut opts = TouchstoneOptions::default();
    let mut tokens = line.trim_start_matches('#').split_whitespace().peekable();
    let mut seen_param = false;
    while let Some(tok) = tokens.next() {
        if let Some(unit) = TouchstoneUnit::parse(tok) {
            opts.unit = unit;
        } else if let Some(fmt) = TouchstoneFormat::parse(tok) {
            opts.format = fmt;
        } else if tok.eq_ignore_ascii_case("S") {
            seen_param = true;
        } else if ["Y", "Z", "G", "H"].iter().any(|p| tok.eq_ignore_ascii_case(p)) {
            return Err(TouchstoneError::OptionLine {
                line: line_no,
                msg: format!("parameter type `{tok}` is not supported; only S"),
            });
        } else if tok.eq_ignore_ascii_case("R") {
            let val = tokens.next().ok_or_else(|| TouchstoneError::OptionLine {
                line: line_no,
                msg: "`R` must be followed by a reference impedance".into(),
            })?;
            opts.zref = val.parse().map_err(|_| TouchstoneError::OptionLine {
                line: line_no,
                msg: format!("cannot parse reference impedance `{val}`"),
            })?;
            if !(opts.zref > 0.0) || !opts.zref.is_finite() {
                return Err(TouchstoneError::OptionLine {
                    line: line_no,
                    msg: format!("reference impedance {} must be > 0", opts.zref),
                });
            }
        } else {
            return Err(TouchstoneError::OptionLine {
                line: line_no,
                msg: format!("unrecognized token `{tok}`"),
            });
        }
    }
    let _ = seen_param; // `S` is the default parameter type in v1.
    Ok(opts)
}

/// Parses Touchstone v1 one-port text into a frequency grid (Hz) and the
/// complex S11 sweep, plus the option-line settings in effect.
pub fn parse_touchstone_s1p(
    text: &str,
) -> Result<(FrequencyGrid, Vec<Complex64>, TouchstoneOptions), TouchstoneError> {
    let mut opts: Option<TouchstoneOptions> = None;
    let mut freqs: Vec<f64> = Vec::new();
    let mut sweep: Vec<Complex64> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if opts.is_some() {
                return Err(TouchstoneError::OptionLine {
                    line: line_no,
                    msg: "duplicate option line".into(),
                });
            }
            if !sweep.is_empty() {
                return Err(TouchstoneError::OptionLine {
                    line: line_no,
                    msg: "option line must precede all data rows".into(),
                });
            }
            opts = Some(parse_option_line(line, line_no)?);
            continue;
        }
        let effective = opts.unwrap_or_default();
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(TouchstoneError::ColumnCount {
                line: line_no,
                found: fields.len(),
            });
        }
        let mut nums = [0.0f64; 3];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| TouchstoneError::BadNumber {
                line: line_no,
                field: field.to_string(),
            })?;
        }
        let f_hz = nums[0] * effective.unit.multiplier();
        if let Some(&prev) = freqs.last() {
            if f_hz <= prev {
                return Err(TouchstoneError::NonMonotone {
                    line: line_no,
                    f: f_hz,
                    prev,
                });
            }
        }
        freqs.push(f_hz);
        sweep.push(effective.format.decode(nums[1], nums[2]));
    }

    if sweep.is_empty() {
        return Err(TouchstoneError::EmptySweep);
    }
    let grid = FrequencyGrid::new(freqs).map_err(|e| TouchstoneError::BadGrid(e.to_string()))?;
    Ok((grid, sweep, opts.unwrap_or_default()))
}

/// Writes a one-port sweep as Touchstone v1 text under the given options.
///
/// Values are printed with shortest round-trip formatting; with
/// [`TouchstoneOptions::canonical`] the output re-parses to bit-identical
/// frequencies and values.
pub fn write_touchstone_s1p(
    grid: &FrequencyGrid,
    sweep: &[Complex64],
    opts: &TouchstoneOptions,
) -> String {
    assert_eq!(grid.len(), sweep.len(), "grid and sweep must align");
    let mut out = String::new();
    out.push_str(&format!(
        "# {} S {} R {}\n",
        opts.unit.token(),
        opts.format.token(),
        opts.zref
    ));
    for (&f, &s) in grid.points().iter().zip(sweep) {
        let (v1, v2) = opts.format.encode(s);
        out.push_str(&format!("{} {} {}\n", f / opts.unit.multiplier(), v1, v2));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ma_example_decodes_to_polar_form() {
        let text = "! demo\n# GHz S MA R 50\n1.0 0.5 -45\n";
        let (grid, sweep, opts) = parse_touchstone_s1p(text).unwrap();
        assert_eq!(grid.points(), &[1e9]);
        // 0.5 at -45 degrees; endpoints frozen from the polar identity.
        assert_relative_eq!(sweep[0].re, 0.35355339059327379, max_relative = 1e-12);
        assert_relative_eq!(sweep[0].im, -0.35355339059327373, max_relative = 1e-12);
        assert_eq!(opts.zref, 50.0);
        assert_eq!(opts.unit, TouchstoneUnit::GHz);
    }

    #[test]
    fn ri_example_and_hz_unit() {
        let text = "# HZ S RI R 50\n2e9 0.1 0.2\n";
        let (grid, sweep, _) = parse_touchstone_s1p(text).unwrap();
        assert_eq!(grid.points(), &[2e9]);
        assert_eq!(sweep[0], Complex64::new(0.1, 0.2));
    }

    #[test]
    fn db_format_decodes_magnitude() {
        let text = "# MHz S DB R 75\n100 -6.0205999132796239 90\n";
        let (grid, sweep, opts) = parse_touchstone_s1p(text).unwrap();
        assert_eq!(grid.points(), &[1e8]);
        assert!(sweep[0].re.abs() < 1e-12);
        assert_relative_eq!(sweep[0].im, 0.5, max_relative = 1e-12);
        assert_eq!(opts.zref, 75.0);
    }

    #[test]
    fn missing_option_line_uses_defaults() {
        let text = "1.0 1.0 0\n2.0 0.5 0\n";
        let (grid, sweep, opts) = parse_touchstone_s1p(text).unwrap();
        assert_eq!(opts, TouchstoneOptions::default());
        assert_eq!(grid.points(), &[1e9, 2e9]);
        assert_eq!(sweep[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn comments_only_is_an_empty_sweep() {
        let err = parse_touchstone_s1p("! a\n! b\n# GHz S MA R 50\n").unwrap_err();
        assert!(matches!(err, TouchstoneError::EmptySweep));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_touchstone_s1p("# GHz S MA R 50\n1.0 0.5\n").unwrap_err();
        assert!(matches!(err, TouchstoneError::ColumnCount { line: 2, found: 2 }));

        let err = parse_touchstone_s1p("# GHz S MA R 50\n1.0 0.5 0\n0.5 0.5 0\n").unwrap_err();
        assert!(matches!(err, TouchstoneError::NonMonotone { line: 3, .. }));

        let err = parse_touchstone_s1p("# GHz S XX R 50\n1.0 0.5 0\n").unwrap_err();
        assert!(matches!(err, TouchstoneError::OptionLine { line: 1, .. }));

        let err = parse_touchstone_s1p("# GHz Z MA R 50\n1.0 0.5 0\n").unwrap_err();
        assert!(matches!(err, TouchstoneError::OptionLine { line: 1, .. }));

        let err = parse_touchstone_s1p("# GHz S MA R\n1.0 0.5 0\n").unwrap_err();
        assert!(matches!(err, TouchstoneError::OptionLine { line: 1, .. }));

        let err = parse_touchstone_s1p("# GHz S MA R 50\nabc 0.5 0\n").unwrap_err();
        assert!(matches!(err, TouchstoneError::BadNumber { line: 2, .. }));
    }

    #[test]
    fn trailing_comments_are_ignored() {
        let text = "# GHz S RI R 50\n1.0 0.25 0.0 ! marker\n";
        let (_, sweep, _) = parse_touchstone_s1p(text).unwrap();
        assert_eq!(sweep[0], Complex64::new(0.25, 0.0));
    }

    #[test]
    fn canonical_roundtrip_is_exact_fixed_point() {
        let text = "# GHz S MA R 50\n0.5 0.9 10\n1.5 0.7 -20\n8.25 0.3 175\n";
        let (g1, s1, _) = parse_touchstone_s1p(text).unwrap();
        let canon = write_touchstone_s1p(&g1, &s1, &TouchstoneOptions::canonical());
        let (g2, s2, _) = parse_touchstone_s1p(&canon).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(s1, s2);
        // And a second cycle reproduces the text byte-for-byte.
        let canon2 = write_touchstone_s1p(&g2, &s2, &TouchstoneOptions::canonical());
        assert_eq!(canon, canon2);
    }
}
