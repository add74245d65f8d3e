//! File outputs. Floats are written in shortest round-trip form, so every
//! value reads back bit-for-bit.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use metricopt::estimators::{DimensionScanResult, MetricReport};
use metricopt::solver::IterateRecord;
use serde::Serialize;

use crate::CliError;

/// One trace line.
#[derive(Debug, Serialize)]
struct TraceRow {
    k: usize,
    f: f64,
    t: f64,
    best: f64,
    best_k: usize,
    gap_ok: bool,
    moved: f64,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_trace(dir: &Path, records: &[IterateRecord]) -> Result<(), CliError> {
    let mut w = create(dir, "trace.jsonl")?;
    for r in records {
        let row = TraceRow {
            k: r.k,
            f: r.objective,
            t: r.step,
            best: r.best_so_far,
            best_k: r.best_iter,
            gap_ok: r.gap_ok,
            moved: r.moved,
        };
        serde_json::to_writer(&mut w, &row).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Two columns (iteration, best bound so far).
pub fn write_best_csv(dir: &Path, records: &[IterateRecord]) -> Result<(), CliError> {
    let mut w = create(dir, "best.csv")?;
    writeln!(w, "iteration,best_bound")?;
    for r in records {
        writeln!(w, "{},{:?}", r.k, r.best_so_far)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(dir: &Path, report: &MetricReport) -> Result<(), CliError> {
    let mut w = create(dir, "report.json")?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    fs::write(dir.join("report.txt"), report.to_table())?;
    Ok(())
}

/// Columns bound, s, first_negative_iter, value (empty when never negative).
pub fn dimension_csv(res: &DimensionScanResult) -> String {
    let mut s = String::from("bound,s,first_negative_iter,value\n");
    for r in &res.rows {
        let bound = res.k as f64 + r.s;
        let (iter, value) = match (r.first_negative_iter, r.value_at_first_negative) {
            (Some(i), Some(v)) => (i.to_string(), format!("{v:?}")),
            _ => (String::new(), String::new()),
        };
        s.push_str(&format!("{bound:?},{:?},{iter},{value}\n", r.s));
    }
    s
}

pub fn write_dimension_csv(dir: &Path, res: &DimensionScanResult) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("dimension.csv"), dimension_csv(res))?;
    Ok(())
}
