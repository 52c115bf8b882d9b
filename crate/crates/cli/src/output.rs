//! Trace CSV and summary JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;
use skipping_core::trace::ChainResult;

pub const SCHEMA_VERSION: u32 = 1;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// One row per step holding the state after that step.
pub fn write_trace(path: &Path, res: &ChainResult) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# skipping trace, schema_version={SCHEMA_VERSION}")?;
    let dim = res.final_state.point.dim();
    let mut w = csv_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.extend(["accepted", "skip_count", "log_target"].map(String::from));
    w.write_record(&header)?;
    for (i, rec) in res.trace.iter().enumerate() {
        let next = rec.next_state();
        let mut row = vec![(i + 1).to_string()];
        row.extend(next.point.coords().iter().map(|c| c.to_string()));
        row.push(u8::from(rec.accepted).to_string());
        row.push(rec.skip_count.to_string());
        row.push(next.log_target.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `step` followed by one column per named series.
pub fn write_series(path: &Path, names: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# skipping series, schema_version={SCHEMA_VERSION}")?;
    let mut w = csv_writer(out);
    let mut header = vec!["step"];
    header.extend_from_slice(names);
    w.write_record(&header)?;
    let n = columns.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..n {
        let mut row = vec![i.to_string()];
        row.extend(columns.iter().map(|c| c.get(i).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# skipping runs, schema_version={SCHEMA_VERSION}")?;
    let mut w = csv_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
