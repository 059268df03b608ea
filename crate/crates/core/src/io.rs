//! Artifact serialization: CSV with 12 significant digits, JSON sidecars,
//! and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::estimation::EstimateSeries;
use crate::fp::RateErrorCurve;

/// `x` with 12 significant digits, trailing zeros removed; fixed notation
/// for moderate exponents, scientific otherwise (like C's `%.12g`).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
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
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so the
/// destination either keeps its old content or holds the full new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn curve_csv(curve: &RateErrorCurve) -> String {
    let mut out = String::from("r,d\n");
    for pt in &curve.points {
        let _ = writeln!(out, "{},{}", fmt_sig(pt.r), fmt_sig(pt.d));
    }
    out
}

pub fn series_csv(series: &EstimateSeries) -> String {
    let mut out = String::from("tau,r_hat,d_hat\n");
    for rec in &series.records {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_sig(rec.tau),
            fmt_sig(rec.r_hat),
            fmt_sig(rec.d_hat)
        );
    }
    out
}

#[derive(Serialize)]
struct Sidecar<'a> {
    chain_spec: &'a str,
    p: f64,
    n: usize,
    seed: u64,
    alpha_grid: &'a [f64],
}

/// Provenance of an estimated curve: `{chain_spec, p, n, seed, alpha_grid}`.
pub fn series_sidecar(series: &EstimateSeries) -> Result<String> {
    let sidecar = Sidecar {
        chain_spec: &series.chain_spec,
        p: series.p,
        n: series.n,
        seed: series.seed,
        alpha_grid: &series.alpha_grid,
    };
    Ok(serde_json::to_string_pretty(&sidecar)? + "\n")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Writes `<path>` as CSV and the sidecar next to it with a `.json` extension.
pub fn write_series(path: &Path, series: &EstimateSeries) -> Result<()> {
    write_atomic(path, series_csv(series).as_bytes())?;
    write_atomic(
        &path.with_extension("json"),
        series_sidecar(series)?.as_bytes(),
    )
}
