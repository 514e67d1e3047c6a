//! Deterministic report serialization.
//!
//! Every floating-point number is written with 17 significant digits
//! (`{:.16e}`), which round-trips any f64 exactly, so identical inputs and
//! seeds produce byte-identical output.

use std::io;

use serde::Serialize;

use crate::pipeline::{Report, SweepPoint};

/// Render any f64 with 17 significant digits.
pub fn format_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        "null".to_string()
    }
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        writer.write_all(format_f64(value).as_bytes())
    }
}

/// Compact JSON with fixed-precision floats.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Column header for the CSV sweep format. Axes are omitted from CSV; use
/// JSON when the full measurement is needed.
pub fn csv_header() -> &'static str {
    "lambda,nqubits,qfi,m_structure,lm_feasible,lm_verdict,lm_method,lm_residual,lm_cfi,\
     lm_cfi_over_qfi,lm_restarts_used,lmcc_cfi,lmcc_cfi_over_qfi,lmcc_leaf_residual,error"
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn json_token<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v)
        .expect("token serialization cannot fail")
        .trim_matches('"')
        .to_string()
}

/// One CSV row per grid point.
pub fn csv_row(point: &SweepPoint) -> String {
    match &point.report {
        Some(r) => format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
            format_f64(point.lambda),
            r.nqubits,
            format_f64(r.qfi),
            json_token(&r.m_structure),
            r.lm.feasible,
            json_token(&r.lm.verdict),
            json_token(&r.lm.method),
            format_f64(r.lm.residual),
            opt_f64(r.lm.cfi),
            opt_f64(r.lm.cfi_over_qfi),
            r.lm.restarts_used,
            format_f64(r.lmcc.cfi),
            opt_f64(r.lmcc.cfi_over_qfi),
            format_f64(r.lmcc.leaf_residual),
        ),
        None => format!(
            "{},,,,,,,,,,,,,,{}",
            format_f64(point.lambda),
            point
                .error
                .as_deref()
                .unwrap_or("unknown error")
                .replace(',', ";")
        ),
    }
}

/// JSON-lines rendering of a full sweep.
pub fn sweep_to_json_lines(points: &[SweepPoint]) -> String {
    let mut out = String::new();
    for p in points {
        out.push_str(&to_json_string(p));
        out.push('\n');
    }
    out
}

/// Single-report JSON (one line, no trailing newline).
pub fn report_to_json(report: &Report) -> String {
    to_json_string(report)
}
