//! CSV and JSON rendering of experiment results.

use serde::Serialize;

use crate::bench::BenchRow;
use crate::error::CliResult;
use crate::experiments::{fmt_dims, RandomRow, RectRow};

fn frac(x: f64) -> String {
    format!("{x:.4}")
}

fn finish(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| crate::CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| crate::CliError::Output(e.to_string()))
}

pub fn rect_csv(rows: &[RectRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rectangle dimensions", "fraction in first rectangle", "expected fraction", "failures"])?;
    for r in rows {
        let dims = format!("{} {}", fmt_dims(&r.first), fmt_dims(&r.second));
        w.write_record([dims, frac(r.first_fraction), frac(r.expected_fraction), r.failures.to_string()])?;
    }
    finish(w)
}

pub fn random_csv(rows: &[RandomRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rectangle shape", "fraction in rectangle", "failures"])?;
    for r in rows {
        w.write_record([fmt_dims(&r.shape), frac(r.box_fraction), r.failures.to_string()])?;
    }
    finish(w)
}

pub fn bench_csv(rows: &[BenchRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kernel", "n", "median seconds"])?;
    for r in rows {
        w.write_record([r.kernel.to_string(), r.n.to_string(), format!("{:.6e}", r.median_seconds)])?;
    }
    finish(w)
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}
