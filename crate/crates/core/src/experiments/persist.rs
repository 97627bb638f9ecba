//! JSONL and CSV persistence of experiment records.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::runner::ExperimentRecord;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 21] = [
    "d",
    "delta",
    "lambda",
    "theta",
    "replicates",
    "seed",
    "emp_mean",
    "emp_var",
    "emp_tv",
    "tv_lo",
    "tv_hi",
    "tv_bound",
    "wasserstein_bound",
    "mean_formula",
    "var_lower",
    "var_upper",
    "gamma1",
    "gamma2",
    "gamma3p",
    "gamma3n",
    "runtime_s",
];

/// Appends one JSON document per line; all writes go through this handle.
pub struct JsonlSink {
    out: BufWriter<File>,
}

impl JsonlSink {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(JsonlSink {
            out: BufWriter::new(file),
        })
    }

    pub fn append<T: Serialize>(&mut self, item: &T) -> Result<()> {
        let line = serde_json::to_string(item).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or large magnitudes.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], mut out: W) -> Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        let b = &r.bounds;
        let num = |x: f64| format_number(x);
        let row = [
            r.params.d().to_string(),
            num(r.params.delta()),
            num(r.params.lambda()),
            num(r.theta()),
            r.replicates.to_string(),
            r.seed.to_string(),
            num(r.emp_mean),
            num(r.emp_var),
            num(r.emp_tv),
            num(r.tv_lo),
            num(r.tv_hi),
            num(b.tv_bound),
            b.wasserstein_bound.map(num).unwrap_or_default(),
            num(b.mean),
            num(b.var_lower),
            num(b.var_upper),
            num(b.gamma1),
            num(b.gamma2),
            num(b.gamma3p),
            num(b.gamma3n),
            num(r.runtime_s),
        ];
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_csv_file(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write_csv(records, &mut out)?;
    out.flush()?;
    Ok(())
}
