//! CSV ingestion and output for datasets, traces and summaries.

use std::path::Path;

use crate::config::RunConfig;
use crate::diagnostics::SummaryRow;
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::sampler::{Trace, TraceMeta, TraceRow};

fn is_missing(token: &str) -> bool {
    let t = token.trim();
    t.is_empty() || t == "NA"
}

/// Reads the response and configured covariate columns from a CSV file with
/// a header row. Empty cells and `NA` are missing; anything else must parse
/// as a number.
pub fn load_dataset(path: impl AsRef<Path>, config: &RunConfig) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Dataset(format!("{}: no column `{name}`", path.display())))
    };
    let y_col = find(&config.data.response)?;
    let cols = config
        .data
        .columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = line + 2;
        let yv = record[y_col].trim();
        y.push(match yv {
            "0" | "0.0" => 0.0,
            "1" | "1.0" => 1.0,
            other => {
                return Err(Error::Dataset(format!(
                    "{} line {line}: response `{other}` is not 0 or 1",
                    path.display()
                )))
            }
        });
        let row = cols
            .iter()
            .map(|&c| {
                let token = &record[c];
                if is_missing(token) {
                    Ok(None)
                } else {
                    token.trim().parse::<f64>().map(Some).map_err(|_| {
                        Error::Dataset(format!(
                            "{} line {line}, column `{}`: `{token}` is not a number (use an empty cell or NA for missing)",
                            path.display(),
                            &headers[c]
                        ))
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Dataset::new(y, rows, config.data.columns.clone())
}

/// Writes the response then every covariate column; missing cells are empty.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset, response: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec![response.to_string()];
    header.extend(data.column_names().iter().cloned());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for i in 0..data.n_rows() {
        let mut rec = vec![format!("{}", data.y()[i])];
        rec.extend((0..data.n_cols()).map(|j| data.value(i, j).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sidecar path for trace metadata: `trace.csv` → `trace.meta.toml`.
pub fn meta_path(trace_path: &Path) -> std::path::PathBuf {
    trace_path.with_extension("meta.toml")
}

/// One row per iteration: constrained parameters, `log_estimate`, `accepted`.
/// Metadata goes to the `.meta.toml` sidecar.
pub fn write_trace(path: impl AsRef<Path>, trace: &Trace) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = trace.meta.param_names.clone();
    header.push("log_estimate".into());
    header.push("accepted".into());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for row in &trace.rows {
        let mut rec: Vec<String> = row.theta.iter().map(|v| v.to_string()).collect();
        rec.push(row.log_estimate.to_string());
        rec.push(if row.accepted { "1" } else { "0" }.into());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let meta = meta_path(path);
    std::fs::write(&meta, toml::to_string(&trace.meta)?).map_err(|e| Error::io(&meta, e))
}

/// Reads a trace CSV, with metadata from the sidecar when present.
pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let k = headers.len();
    if k < 2 || &headers[k - 2] != "log_estimate" || &headers[k - 1] != "accepted" {
        return Err(Error::Dataset(format!(
            "{}: not a trace file (expected trailing log_estimate, accepted columns)",
            path.display()
        )));
    }
    let names: Vec<String> = headers.iter().take(k - 2).map(String::from).collect();
    let parse = |s: &str, line: usize| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Dataset(format!("{} line {line}: bad number `{s}`", path.display())))
    };
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line + 2;
        let theta = (0..k - 2).map(|j| parse(&rec[j], line)).collect::<Result<Vec<_>>>()?;
        let log_estimate = parse(&rec[k - 2], line)?;
        let accepted = match rec[k - 1].trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Dataset(format!(
                    "{} line {line}: bad accept flag `{other}`",
                    path.display()
                )))
            }
        };
        rows.push(TraceRow {
            theta,
            log_estimate,
            accepted,
        });
    }
    let meta_file = meta_path(path);
    let meta = if meta_file.exists() {
        let text = std::fs::read_to_string(&meta_file).map_err(|e| Error::io(&meta_file, e))?;
        let mut m: TraceMeta = toml::from_str(&text).map_err(|source| Error::Toml {
            path: meta_file.clone(),
            source,
        })?;
        m.param_names = names;
        m
    } else {
        TraceMeta {
            param_names: names,
            n_importance: 0,
            seed: 0,
            proposal_scales: Vec::new(),
            iterations: rows.len(),
            burn_in: 0,
            accepted: rows.iter().filter(|r| r.accepted).count() as u64,
        }
    };
    Ok(Trace { rows, meta })
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["param", "estimate", "mcse", "cred_lower", "cred_upper", "rhat"])
        .map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.estimate.to_string(),
            r.mcse.to_string(),
            r.cred_lower.to_string(),
            r.cred_upper.to_string(),
            r.rhat.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
