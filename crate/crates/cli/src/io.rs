//! CSV reading and writing. Floats are written with 17 significant digits so that every file
//! parses back to the exact doubles that produced it.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use oclust_core::{DataMatrix, IterationRecord, OclustResult, SimDataset};

use crate::error::{CliError, CliResult};

/// Columns describing the truth of simulated data; never used as features.
pub const TRUTH_COLUMNS: [&str; 2] = ["true_label", "is_outlier"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn writer(path: &Path) -> CliResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn bad(path: &Path, line: u64, column: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, column, message: message.into() }
}

/// A numeric table plus the optional truth columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub data: DataMatrix,
    pub true_labels: Option<Vec<usize>>,
    pub outlier_mask: Option<Vec<bool>>,
}

/// Reads a headed CSV. Every column other than the truth columns must be numeric.
/// Reported lines and columns are 1-based.
pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers().map_err(|e| CliError::csv(path, e))?.iter().map(str::to_string).collect();
    let label_col = header.iter().position(|h| h == TRUTH_COLUMNS[0]);
    let mask_col = header.iter().position(|h| h == TRUTH_COLUMNS[1]);
    let features: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != label_col && Some(c) != mask_col).collect();
    if features.is_empty() {
        return Err(bad(path, 1, 1, "no feature columns"));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        for &c in &features {
            let v = parse_f64(&rec[c]).ok_or_else(|| bad(path, line, c + 1, format!("'{}' is not a finite number", &rec[c])))?;
            values.push(v);
        }
        if let Some(c) = label_col {
            let l = rec[c].parse::<usize>().map_err(|_| bad(path, line, c + 1, format!("bad label '{}'", &rec[c])))?;
            labels.push(l);
        }
        if let Some(c) = mask_col {
            mask.push(parse_bool(&rec[c]).ok_or_else(|| bad(path, line, c + 1, format!("bad flag '{}'", &rec[c])))?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(bad(path, 2, 1, "no data rows"));
    }
    Ok(Dataset {
        feature_names: features.iter().map(|&c| header[c].clone()).collect(),
        data: DataMatrix::new(n, features.len(), values)?,
        true_labels: label_col.map(|_| labels),
        outlier_mask: mask_col.map(|_| mask),
    })
}

/// `x1..xp,true_label,is_outlier`.
pub fn write_simulated(path: &Path, ds: &SimDataset) -> CliResult<()> {
    let mut w = writer(path)?;
    let p = ds.data.p();
    let mut header: Vec<String> = (1..=p).map(|k| format!("x{k}")).collect();
    header.extend(TRUTH_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for (i, row) in ds.data.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        rec.push(ds.true_labels[i].to_string());
        rec.push(ds.outlier_mask[i].to_string());
        w.write_record(&rec).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub m: usize,
    pub removed_row: Option<usize>,
    pub kl: f64,
    pub loglik: f64,
    pub n_remaining: usize,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        Self { m: r.iteration, removed_row: r.removed_point, kl: r.kl.value, loglik: r.loglik, n_remaining: r.n_remaining }
    }
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["m", "removed_row", "kl", "loglik", "n_remaining"]).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.removed_row.map(|i| i.to_string()).unwrap_or_default(),
            fmt_f64(r.kl),
            fmt_f64(r.loglik),
            r.n_remaining.to_string(),
        ])
        .map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trace(path: &Path) -> CliResult<Vec<TraceRow>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 5 {
            return Err(bad(path, line, 1, "expected 5 fields"));
        }
        let int = |c: usize| rec[c].parse::<usize>().map_err(|_| bad(path, line, c + 1, "not an integer"));
        let float = |c: usize| parse_f64(&rec[c]).ok_or_else(|| bad(path, line, c + 1, "not a number"));
        out.push(TraceRow {
            m: int(0)?,
            removed_row: if rec[1].is_empty() { None } else { Some(int(1)?) },
            kl: float(2)?,
            loglik: float(3)?,
            n_remaining: int(4)?,
        });
    }
    Ok(out)
}

/// Per-row labels: `Some(cluster)` (1-based on disk) or `None` for an outlier.
pub fn write_labels(path: &Path, labels: &[Option<usize>]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["row", "label"]).map_err(|e| CliError::csv(path, e))?;
    for (i, l) in labels.iter().enumerate() {
        let label = l.map_or_else(|| "outlier".to_string(), |g| (g + 1).to_string());
        w.write_record([i.to_string(), label]).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_labels(path: &Path) -> CliResult<Vec<Option<usize>>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(bad(path, line, 1, "expected 2 fields"));
        }
        let row = rec[0].parse::<usize>().map_err(|_| bad(path, line, 1, "not a row index"))?;
        if row != out.len() {
            return Err(bad(path, line, 1, format!("expected row {}, found {row}", out.len())));
        }
        out.push(match &rec[1] {
            "outlier" => None,
            s => match s.parse::<usize>() {
                Ok(g) if g >= 1 => Some(g - 1),
                _ => return Err(bad(path, line, 2, format!("bad label '{s}'"))),
            },
        });
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Trace rows of a finished run.
pub fn trace_rows(result: &OclustResult) -> Vec<TraceRow> {
    result.trace.iter().map(TraceRow::from).collect()
}
