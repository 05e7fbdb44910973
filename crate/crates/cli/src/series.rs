//! CSV files: the diagnostics series and the Newton residual history.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses
//! back to the identical `f64`.

use std::io::{Read, Write};

use jflow_core::{DiagnosticsRecord, NewtonReport};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {found:?}")]
    Header { found: Vec<String> },
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_series<W: Write>(w: W, records: &[DiagnosticsRecord]) -> Result<(), SeriesError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DiagnosticsRecord::COLUMNS)?;
    for r in records {
        out.write_record(r.values().map(fmt_f64))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_series<R: Read>(r: R) -> Result<Vec<DiagnosticsRecord>, SeriesError> {
    let mut input = csv::Reader::from_reader(r);
    let header: Vec<String> = input.headers()?.iter().map(str::to_owned).collect();
    if header != DiagnosticsRecord::COLUMNS {
        return Err(SeriesError::Header { found: header });
    }
    input
        .records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec?;
            let mut values = [0.0; 12];
            if rec.len() != values.len() {
                return Err(SeriesError::Row { row, reason: format!("expected 12 fields, got {}", rec.len()) });
            }
            for (v, field) in values.iter_mut().zip(rec.iter()) {
                *v = field.parse().map_err(|e| SeriesError::Row { row, reason: format!("{field:?}: {e}") })?;
            }
            Ok(DiagnosticsRecord::from_values(values))
        })
        .collect()
}

pub const NEWTON_COLUMNS: [&str; 4] = ["iteration", "residual", "krylov_iterations", "step_length"];

/// One row per residual; iteration 0 is the initial guess and has no
/// Krylov count or step length.
pub fn write_newton_residuals<W: Write>(
    w: W,
    residuals: &[f64],
    report: Option<&NewtonReport>,
) -> Result<(), SeriesError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(NEWTON_COLUMNS)?;
    for (i, r) in residuals.iter().enumerate() {
        let step = i.checked_sub(1);
        let krylov = step.and_then(|s| report.and_then(|rep| rep.krylov_iterations.get(s)));
        let length = step.and_then(|s| report.and_then(|rep| rep.step_lengths.get(s)));
        out.write_record([
            i.to_string(),
            fmt_f64(*r),
            krylov.map(|k| k.to_string()).unwrap_or_default(),
            length.map(|&l| fmt_f64(l)).unwrap_or_default(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
