//! CSV and JSON file formats.
//!
//! Point clouds are CSV with a header `x1,...,xd` and one point per row.
//! Floats are written as `{:.16e}`, which round-trips every `f64`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use optmatch_core::geometry::PointCloud;
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_table<W: Write + ?Sized>(w: &mut W, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn cloud_header(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

pub fn write_cloud<W: Write + ?Sized>(w: &mut W, cloud: &PointCloud) -> io::Result<()> {
    let header = cloud_header(cloud.dim());
    let rows: Vec<Vec<String>> = cloud
        .points()
        .map(|p| p.iter().map(|&v| float(v)).collect())
        .collect();
    write_table(w, &header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)
}

/// Reads a cloud written by `write_cloud`; the box side is not stored in
/// the file and must be supplied.
pub fn read_cloud<R: Read>(r: R, side: f64) -> Result<PointCloud> {
    let mut lines = BufReader::new(r).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| CliError::config(format!("reading cloud: {e}")))?,
        None => return Err(CliError::config("cloud file is empty")),
    };
    let columns: Vec<&str> = header.trim().split(',').collect();
    let dim = columns.len();
    if columns != cloud_header(dim) {
        return Err(CliError::config(format!("bad cloud header {header:?}")));
    }
    let mut coords = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| CliError::config(format!("reading cloud: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != dim {
            return Err(CliError::config(format!("row {}: expected {dim} fields", row + 1)));
        }
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("row {}: bad number {f:?}", row + 1)))?;
            coords.push(v);
        }
    }
    Ok(PointCloud::new(dim, side, coords, 0)?)
}

pub fn read_cloud_file(path: &Path, side: f64) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    read_cloud(file, side)
}

/// Standard output, or a file when a path is given.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// JSON summary of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Summary<C: Serialize> {
    pub config: C,
    pub results: Vec<serde_json::Value>,
    pub fit: serde_json::Value,
    pub version: &'static str,
}

impl<C: Serialize> Summary<C> {
    pub fn new(config: C, results: Vec<serde_json::Value>, fit: serde_json::Value) -> Self {
        Summary {
            config,
            results,
            fit,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn write_to(&self, path: Option<&Path>) -> Result<()> {
        let mut w = open_output(path)?;
        let text = serde_json::to_string_pretty(self).expect("summaries serialize");
        let fail = |e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e);
        writeln!(w, "{text}").map_err(fail)?;
        w.flush().map_err(fail)
    }
}
