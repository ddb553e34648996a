//! Machine-readable emission of reports: JSON documents and the fixed
//! sweep CSV schema. Every real number is printed with 9 significant
//! digits.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::quantizer::codebook_size;
use crate::simulator::{Mode, RunReport, SweepPoint};

/// Column order of sweep and run CSV output.
pub const CSV_COLUMNS: [&str; 19] = [
    "rho",
    "n",
    "M",
    "num_trials",
    "mode",
    "mean_distortion",
    "stderr",
    "mean_power",
    "encode_failure_rate",
    "decode_error_rate",
    "mean_quant_error",
    "genie_distortion",
    "D_star",
    "D_rho",
    "alpha",
    "beta",
    "gamma",
    "seed",
    "error",
];

/// `%.9g`: 9 significant digits, trailing zeros removed, scientific
/// notation outside `[1e-5, 1e9)`.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if x.is_finite() {
        fmt_g9(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            if let Some(r) = num.as_f64().and_then(|x| Number::from_f64(round9(x))) {
                *num = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes `value` with every float rounded to 9 significant digits.
pub fn to_rounded_json<T: serde::Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Usage(format!("json: {e}")))?;
    round_value(&mut v);
    Ok(v)
}

/// JSON document for one run; `generated_at_unix` is attached unless
/// `timestamp` is `None`.
pub fn report_json(report: &RunReport, timestamp: Option<u64>) -> Result<String> {
    let mut doc = Map::new();
    if let Some(ts) = timestamp {
        doc.insert("generated_at_unix".into(), Value::from(ts));
    }
    doc.insert("report".into(), to_rounded_json(report)?);
    pretty(&Value::Object(doc))
}

/// JSON document for a sweep; failed points appear as `{rho, n, error}`.
pub fn sweep_json(points: &[SweepPoint], timestamp: Option<u64>) -> Result<String> {
    let mut items = Vec::with_capacity(points.len());
    for p in points {
        items.push(match &p.result {
            Ok(r) => to_rounded_json(r)?,
            Err(e) => serde_json::json!({
                "rho": round9(p.rho),
                "n": p.n,
                "error": e.to_string(),
            }),
        });
    }
    let mut doc = Map::new();
    if let Some(ts) = timestamp {
        doc.insert("generated_at_unix".into(), Value::from(ts));
    }
    doc.insert("points".into(), Value::Array(items));
    pretty(&Value::Object(doc))
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Usage(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// One CSV record in [`CSV_COLUMNS`] order.
pub fn report_row(report: &RunReport) -> Vec<String> {
    let p = &report.params;
    let t = &report.theory;
    vec![
        fmt_g9(p.rho),
        p.n.to_string(),
        report.codebook_size.to_string(),
        report.num_trials.to_string(),
        report.mode.to_string(),
        fmt_g9(report.mean_distortion),
        fmt_g9(report.stderr_distortion),
        fmt_g9(report.mean_power),
        fmt_g9(report.encode_failure_rate),
        fmt_g9(report.decode_error_rate),
        fmt_g9(report.mean_quant_error),
        fmt_g9(report.genie_mean_distortion),
        fmt_g9(t.optimal_distortion),
        fmt_g9(t.distortion_at_rho),
        fmt_g9(t.alpha),
        fmt_g9(t.beta),
        fmt_g9(t.gamma),
        p.seed.to_string(),
        String::new(),
    ]
}

/// Record for a grid point that failed.
pub fn error_row(rho: f64, n: usize, num_trials: usize, mode: Mode, seed: u64, err: &Error) -> Vec<String> {
    let mut row = vec![String::new(); CSV_COLUMNS.len()];
    row[0] = fmt_g9(rho);
    row[1] = n.to_string();
    if let Ok(m) = codebook_size(n, rho) {
        row[2] = m.to_string();
    }
    row[3] = num_trials.to_string();
    row[4] = mode.to_string();
    row[17] = seed.to_string();
    row[18] = err.to_string();
    row
}

pub fn write_csv<W: Write>(writer: W, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Usage(format!("csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
