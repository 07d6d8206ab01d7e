//! Dataset CSV format.
//!
//! Line 1: `id,cause,severity,split,f_0,...,f_{N-1}`
//! Line 2: `#grid,,,` followed by the grid frequencies in Hz, aligned with
//! the `f_k` columns.
//! Then one row per sample with magnitudes in dB. UTF-8, `.` decimal
//! separator. Floats are written with Rust's shortest round-trip formatting
//! so a write/read cycle reproduces every value exactly.

use std::io::{BufRead, BufReader, Read, Write};

use super::{DataError, DefectCause, DefectLabel, LabeledDataset, LabeledSample, SplitKind};
use crate::rfsim::{FrequencyGrid, SignalPattern};

/// Writes the dataset to `w` in the dataset CSV format.
pub fn write_dataset_csv<W: Write>(ds: &LabeledDataset, w: &mut W) -> Result<(), DataError> {
    let n = ds.grid.len();
    let mut header = String::from("id,cause,severity,split");
    for k in 0..n {
        header.push_str(&format!(",f_{k}"));
    }
    writeln!(w, "{header}")?;

    let mut grid_row = String::from("#grid,,,");
    for &f in ds.grid.points() {
        grid_row.push(',');
        grid_row.push_str(&format!("{f}"));
    }
    writeln!(w, "{grid_row}")?;

    for s in &ds.samples {
        let mut row = format!(
            "{},{},{},{}",
            s.id,
            s.label.cause.as_str(),
            s.label.severity,
            s.split.as_str()
        );
        for &v in &s.pattern.magnitude_db {
            row.push(',');
            row.push_str(&format!("{v}"));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Convenience wrapper writing to a file path.
pub fn write_dataset_csv_file(
    ds: &LabeledDataset,
    path: &std::path::Path,
) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset_csv(ds, &mut f)?;
    f.flush()?;
    Ok(())
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64, DataError> {
    let v: f64 = field.parse().map_err(|_| DataError::Parse {
        line,
        msg: format!("cannot parse {what} `{field}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(DataError::Parse {
            line,
            msg: format!("non-finite {what} `{field}`"),
        });
    }
    Ok(v)
}

/// Reads a dataset CSV. Errors carry 1-based line numbers.
pub fn read_dataset_csv<R: Read>(r: R) -> Result<LabeledDataset, DataError> {
    let mut lines = BufReader::new(r).lines().enumerate();

    let (_, header) = lines.next().ok_or(DataError::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?;
    let head_fields: Vec<&str> = header.split(',').collect();
    if head_fields.len() < 5 || head_fields[..4] != ["id", "cause", "severity", "split"] {
        return Err(DataError::Parse {
            line: 1,
            msg: "header must start with `id,cause,severity,split,f_0,...`".into(),
        });
    }
    let n = head_fields.len() - 4;
    for (k, field) in head_fields[4..].iter().enumerate() {
        if *field != format!("f_{k}") {
            return Err(DataError::Parse {
                line: 1,
                msg: format!("expected column `f_{k}`, found `{field}`"),
            });
        }
    }

    let (_, grid_row) = lines.next().ok_or(DataError::Parse {
        line: 2,
        msg: "missing `#grid` row".into(),
    })?;
    let grid_row = grid_row?;
    let grid_fields: Vec<&str> = grid_row.split(',').collect();
    if grid_fields.first() != Some(&"#grid") || grid_fields.len() != 4 + n {
        return Err(DataError::Parse {
            line: 2,
            msg: format!(
                "second row must be `#grid,,,` plus {n} frequencies, found {} fields",
                grid_fields.len()
            ),
        });
    }
    let mut freqs = Vec::with_capacity(n);
    for field in &grid_fields[4..] {
        freqs.push(parse_f64(field, 2, "grid frequency")?);
    }
    let grid = FrequencyGrid::new(freqs).map_err(|e| DataError::Parse {
        line: 2,
        msg: e.to_string(),
    })?;

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + n {
            return Err(DataError::Parse {
                line: line_no,
                msg: format!("expected {} fields, found {}", 4 + n, fields.len()),
            });
        }
        let cause = DefectCause::parse(fields[1]).map_err(|e| DataError::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let severity: u8 = fields[2].parse().map_err(|_| DataError::Parse {
            line: line_no,
            msg: format!("cannot parse severity `{}`", fields[2]),
        })?;
        let label = DefectLabel::new(cause, severity).map_err(|e| DataError::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let split = SplitKind::parse(fields[3]).map_err(|e| DataError::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let mut magnitude_db = Vec::with_capacity(n);
        for field in &fields[4..] {
            magnitude_db.push(parse_f64(field, line_no, "magnitude")?);
        }
        samples.push(LabeledSample {
            id: fields[0].to_string(),
            pattern: SignalPattern::new(magnitude_db),
            label,
            split,
        });
    }

    // LabeledDataset::new re-checks id uniqueness; map it to a parse error
    // for a consistent reporting surface.
    LabeledDataset::new(grid, samples).map_err(|e| match e {
        DataError::DuplicateId(id) => DataError::Parse {
            line: 0,
            msg: format!("duplicate sample id `{id}`"),
        },
        other => other,
    })
}

/// Convenience wrapper reading from a file path.
pub fn read_dataset_csv_file(path: &std::path::Path) -> Result<LabeledDataset, DataError> {
    read_dataset_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{generate_dataset, GeneratorConfig};

    fn small_dataset() -> LabeledDataset {
        let mut cfg = GeneratorConfig::with_seed(2);
        cfg.grid = FrequencyGrid::linear(1e7, 1.4e10, 12).unwrap();
        cfg.class_counts = [8, 5, 5, 5, 5, 5, 6];
        generate_dataset(&cfg).unwrap()
    }

    #[test]
    fn roundtrip_preserves_every_field() {
        let ds = small_dataset();
        let mut buf = Vec::new();
        write_dataset_csv(&ds, &mut buf).unwrap();
        let back = read_dataset_csv(&buf[..]).unwrap();
        assert_eq!(back.grid, ds.grid);
        assert_eq!(back.samples.len(), ds.samples.len());
        for (a, b) in ds.samples.iter().zip(&back.samples) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
            assert_eq!(a.split, b.split);
            // Shortest round-trip float formatting makes this exact.
            assert_eq!(a.pattern, b.pattern);
        }
    }

    #[test]
    fn writes_are_byte_stable() {
        let ds = small_dataset();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_dataset_csv(&ds, &mut a).unwrap();
        write_dataset_csv(&ds, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nan_magnitude_names_the_row() {
        let ds = small_dataset();
        let mut buf = Vec::new();
        write_dataset_csv(&ds, &mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        // Corrupt the first magnitude of the first sample row (line 3).
        let third_line_start = text
            .match_indices('\n')
            .nth(1)
            .map(|(i, _)| i + 1)
            .unwrap();
        let comma_positions: Vec<usize> = text[third_line_start..]
            .match_indices(',')
            .take(5)
            .map(|(i, _)| third_line_start + i)
            .collect();
        let (from, to) = (comma_positions[3] + 1, comma_positions[4]);
        text.replace_range(from..to, "NaN");
        let err = read_dataset_csv(text.as_bytes()).unwrap_err();
        match err {
            DataError::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("non-finite"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn header_and_column_errors() {
        assert!(matches!(
            read_dataset_csv("nope\n".as_bytes()),
            Err(DataError::Parse { line: 1, .. })
        ));
        let text = "id,cause,severity,split,f_0,f_1\n#grid,,,,1e9\n";
        assert!(matches!(
            read_dataset_csv(text.as_bytes()),
            Err(DataError::Parse { line: 2, .. })
        ));
        let text =
            "id,cause,severity,split,f_0,f_1\n#grid,,,,1e9,2e9\na,Normal,0,train,-1\n";
        assert!(matches!(
            read_dataset_csv(text.as_bytes()),
            Err(DataError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn duplicate_id_reported() {
        let text = "id,cause,severity,split,f_0,f_1\n#grid,,,,1e9,2e9\n\
                    a,Normal,0,train,-1,-2\na,Normal,0,val,-1,-2\n";
        let err = read_dataset_csv(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate sample id"), "{err}");
    }
}
