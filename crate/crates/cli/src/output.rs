//! Deterministic file outputs: CSV (17-significant-digit floats, one
//! version header line), operator files, and machine-readable errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use prethermal::dense::DriftCurve;
use prethermal::normal_form::{BoundCheckRow, NormalFormResult};
use prethermal::util::float17;
use prethermal::{Error, ExtensiveOperator};

pub const VERSION_HEADER: &str = concat!("# prethermal ", env!("CARGO_PKG_VERSION"));

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<(), Error> {
    let mut out = String::new();
    out.push_str(VERSION_HEADER);
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_curve(path: &Path, curve: &DriftCurve) -> Result<(), Error> {
    let rows: Vec<Vec<String>> = curve
        .times
        .iter()
        .zip(curve.values.iter())
        .zip(curve.bound_values.iter())
        .map(|((t, v), b)| vec![float17(*t), float17(*v), b.map(float17).unwrap_or_default()])
        .collect();
    write_csv(path, "t,value,bound", &rows)
}

pub fn write_expectation(path: &Path, times: &[f64], values: &[f64]) -> Result<(), Error> {
    let rows: Vec<Vec<String>> = times
        .iter()
        .zip(values.iter())
        .map(|(t, v)| vec![float17(*t), float17(*v), String::new()])
        .collect();
    write_csv(path, "t,value,bound", &rows)
}

pub fn write_bound_checks(path: &Path, rows: &[BoundCheckRow]) -> Result<(), Error> {
    let data: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                float17(r.norm_p_measured),
                float17(r.norm_p_bound),
                float17(r.norm_z_measured),
                float17(r.norm_z_bound),
                float17(r.norm_g_measured),
                float17(r.norm_g_bound),
                float17(r.ledger_increment),
                float17(r.contraction_ratio),
            ]
        })
        .collect();
    write_csv(
        path,
        "n,norm_P_measured,norm_P_bound,norm_Z_measured,norm_Z_bound,norm_G_measured,norm_G_bound,ledger_increment,contraction_ratio",
        &data,
    )
}

pub fn write_ledger(path: &Path, result: &NormalFormResult) -> Result<(), Error> {
    let rows: Vec<Vec<String>> = result
        .ledger
        .entries()
        .iter()
        .map(|e| {
            vec![
                e.label.clone(),
                float17(e.kappa),
                float17(e.kappa_norm_dropped),
                float17(e.op_norm_bound),
            ]
        })
        .collect();
    write_csv(path, "label,kappa,kappa_norm_dropped,op_norm_bound", &rows)
}

pub fn write_operator_file(
    dir: &Path,
    name: &str,
    op: &ExtensiveOperator,
) -> Result<PathBuf, Error> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path)?;
    let mut w = std::io::BufWriter::new(file);
    prethermal::serialize::write_operator(op, &mut w)?;
    w.flush()?;
    Ok(path)
}

pub fn read_operator_file(path: &Path) -> Result<ExtensiveOperator, Error> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::InvalidParams(format!("required operator file {path:?} missing: {e}"))
    })?;
    prethermal::serialize::read_operator(std::io::BufReader::new(file))
}

/// Exit codes: 0 ok, 2 validation, 3 contraction violation, 4 capacity,
/// 5 acceptance failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::StepFailed { source, .. } => exit_code(source),
        Error::ContractionViolation { .. } => 3,
        Error::SupportTooLarge { .. }
        | Error::LatticeTooLarge { .. }
        | Error::NotOneDimensional(_) => 4,
        _ => 2,
    }
}

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::StepFailed { source, .. } => error_kind(source),
        Error::ContractionViolation { .. } => "contraction_violation",
        Error::ResearchModeRequired { .. } => "research_mode_required",
        Error::SupportTooLarge { .. } => "support_too_large",
        Error::LatticeTooLarge { .. } => "lattice_too_large",
        Error::NotOneDimensional(_) => "not_one_dimensional",
        Error::QuadratureNodes { .. } => "quadrature_nodes",
        Error::NotHermitian { .. } => "not_hermitian",
        Error::NotNormalized { .. } => "not_normalized",
        Error::SeriesStalled { .. } => "series_stalled",
        Error::InvalidParams(_) => "invalid_params",
        Error::Format(_) => "format",
        Error::Io(_) => "io",
    }
}

/// Print the machine-readable error record and return the exit code.
pub fn report_error(err: &Error) -> i32 {
    let code = exit_code(err);
    let payload = serde_json::json!({
        "error": {
            "exit_code": code,
            "kind": error_kind(err),
            "message": err.to_string(),
        }
    });
    eprintln!("{payload}");
    code
}
