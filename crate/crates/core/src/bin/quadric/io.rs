use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use quadric_core::{project_to_sphere, RadialSample};

use crate::CliError;

/// 17 significant digits, enough to round-trip any f64.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_table(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(CliError::io)?;
    for row in rows {
        writer.write_record(&row).map_err(CliError::io)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::io(e.into_error()))?;
    String::from_utf8(bytes).map_err(CliError::io)
}

pub fn indexed_header(prefix: char, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(CliError::io)?;
            stdout.flush().map_err(CliError::io)
        }
    }
}

pub fn json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::io)?;
    text.push('\n');
    Ok(text)
}

/// Directions stored in CSV are re-projected when they are unit to this tolerance.
const DIRECTION_TOL: f64 = 1e-9;

/// Reads radial samples from either CSV schema: `x0..xn,rho` or `p0..pn`.
pub fn read_samples(path: &Path) -> Result<Vec<RadialSample>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let radial = header.last().is_some_and(|h| h == "rho");
    let width = if radial { header.len() - 1 } else { header.len() };
    let prefix = if radial { 'x' } else { 'p' };
    if width < 3 || header[..width] != indexed_header(prefix, width)[..] {
        return Err(CliError::input(format!(
            "{}: expected header x0,..,xn,rho or p0,..,pn with n >= 2, got {}",
            path.display(),
            header.join(",")
        )));
    }
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let row = line + 2;
        let record = record.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let values: Vec<f64> = record
            .iter()
            .map(|field| field.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::input(format!("{}: row {row}: {e}", path.display())))?;
        let at = |e: quadric_core::Error| CliError::input(format!("{}: row {row}: {e}", path.display()));
        let sample = if radial {
            let x = DVector::from_column_slice(&values[..width]);
            if (x.norm() - 1.0).abs() > DIRECTION_TOL {
                return Err(CliError::input(format!(
                    "{}: row {row}: direction has norm {}, expected 1",
                    path.display(),
                    x.norm()
                )));
            }
            let x = project_to_sphere(&x, 1.0).map_err(at)?;
            RadialSample::new(x, values[width]).map_err(at)?
        } else {
            RadialSample::from_point(&DVector::from_column_slice(&values)).map_err(at)?
        };
        samples.push(sample);
    }
    Ok(samples)
}
