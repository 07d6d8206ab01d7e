//! Flat CSV renderings of reports for external plotting. Floats use
//! shortest round-trip formatting, so identical runs produce identical
//! bytes.

use std::path::Path;

use super::{EvalReport, NoiseSweepReport};
use crate::dataio::LabeledDataset;

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// One row per model: the headline metrics table.
pub fn eval_reports_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(
        "model,accuracy,macro_f1,macro_recall,param_count,mean_inference_ms\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model_id,
            r.accuracy,
            r.macro_f1,
            r.macro_recall,
            fmt_opt(&r.param_count),
            fmt_opt(&r.mean_inference_ms),
        ));
    }
    out
}

/// One row per (model, noise level) cell.
pub fn noise_sweep_csv(report: &NoiseSweepReport) -> String {
    let mut out = String::from("model,sigma_db,mean_accuracy,std_accuracy,seeds\n");
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.model, c.sigma_db, c.mean_accuracy, c.std_accuracy, c.seeds
        ));
    }
    out
}

/// `id,cause,severity,x,y` rows aligning samples with their embedding.
pub fn embedding_csv(ds: &LabeledDataset, coords: &[[f64; 2]]) -> String {
    assert_eq!(
        ds.samples.len(),
        coords.len(),
        "embedding must cover every sample"
    );
    let mut out = String::from("id,cause,severity,x,y\n");
    for (s, c) in ds.samples.iter().zip(coords) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.id,
            s.label.cause.as_str(),
            s.label.severity,
            c[0],
            c[1]
        ));
    }
    out
}

/// Writes text to a file, creating parent directories as needed.
pub fn write_string(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::evaluate_pairs;

    #[test]
    fn eval_csv_shape() {
        let mut r = evaluate_pairs("srel-mlp", 3, &[0, 1, 2], &[0, 1, 1]).unwrap();
        r.param_count = Some(12993);
        let csv = eval_reports_csv(&[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("model,accuracy"));
        assert!(lines[1].starts_with("srel-mlp,"));
        assert!(lines[1].contains("12993"));
        // Trailing empty field for the missing inference time.
        assert!(lines[1].ends_with(','));
    }
}
