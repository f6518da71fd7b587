//! Dataset ingestion (libsvm sparse text, CSV with header) and benchmark
//! report persistence (CSV plus a markdown accuracy table).

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::data::{Dataset, Labels, Matrix};
use crate::error::{Error, Result};
use crate::eval::BenchmarkResult;

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_label(token: &str, line: usize) -> Result<i32> {
    let value: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("label {token:?} is not numeric"),
    })?;
    let rounded = value.round();
    if (value - rounded).abs() > 1e-9 || !rounded.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("label {token:?} is not an integer"),
        });
    }
    Ok(rounded as i32)
}

/// Maps raw labels to the canonical encodings: exactly two distinct values
/// become {−1, +1} in ascending order; anything else is relabeled 1..M in
/// ascending order of the original values.
fn normalize_labels(raw: Vec<i32>) -> Result<Labels> {
    let mut distinct: Vec<i32> = raw.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mapped = if distinct.len() == 2 {
        raw.into_iter()
            .map(|y| if y == distinct[0] { -1 } else { 1 })
            .collect()
    } else {
        raw.into_iter()
            .map(|y| distinct.binary_search(&y).unwrap() as i32 + 1)
            .collect()
    };
    Labels::new(mapped)
}

/// Reads libsvm sparse text: `label idx:val idx:val …` with 1-based ascending
/// feature indices and zeros omitted. The feature dimension is the maximum
/// index across the file unless `explicit_dim` overrides it (for files whose
/// trailing features are all zero). Lines starting with `#` and blank lines
/// are skipped.
pub fn load_libsvm(path: &Path, explicit_dim: Option<usize>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let reader = BufReader::new(file);

    let mut raw_labels = Vec::new();
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| io_error(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label_token = tokens.next().expect("non-empty line has a first token");
        raw_labels.push(parse_label(label_token, line_no)?);

        let mut entries: Vec<(usize, f64)> = Vec::new();
        for token in tokens {
            let (idx_token, val_token) = token.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected idx:value pair, got {token:?}"),
            })?;
            let idx: usize = idx_token.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("feature index {idx_token:?} is not a positive integer"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "feature indices are 1-based, got 0".into(),
                });
            }
            let value: f64 = val_token.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("feature value {val_token:?} is not numeric"),
            })?;
            if entries.iter().any(|(existing, _)| *existing == idx) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate feature index {idx}"),
                });
            }
            max_index = max_index.max(idx);
            entries.push((idx, value));
        }
        sparse_rows.push(entries);
    }

    if sparse_rows.is_empty() {
        return Err(Error::EmptyInput("libsvm file has no data lines"));
    }
    let dim = match explicit_dim {
        Some(d) if d < max_index => {
            return Err(Error::InvalidParameter(format!(
                "explicit dimension {d} is below the maximum feature index {max_index}"
            )));
        }
        Some(d) => d,
        None if max_index == 0 => {
            return Err(Error::EmptyInput(
                "libsvm file has no feature entries; pass an explicit dimension",
            ));
        }
        None => max_index,
    };

    let rows: Vec<Vec<f64>> = sparse_rows
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; dim];
            for (idx, value) in entries {
                row[idx - 1] = value;
            }
            row
        })
        .collect();
    Dataset::new(Matrix::from_rows(rows)?, normalize_labels(raw_labels)?)
}

/// Reads a CSV file with a header row; every column except `label_column`
/// becomes a feature in header order. Labels are normalized exactly as in
/// the libsvm loader.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|e| csv_error(&e))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "label column {label_column:?} not found; header has: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;

    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                raw_labels.push(parse_label(field, line)?);
            } else {
                let value: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!(
                        "column {:?} value {field:?} is not numeric",
                        &headers[i]
                    ),
                })?;
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("csv file has a header but no data rows"));
    }
    Dataset::new(Matrix::from_rows(rows)?, normalize_labels(raw_labels)?)
}

fn csv_error(e: &csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Parse {
            line: pos.line() as usize,
            message: e.to_string(),
        },
        None => Error::Parse {
            line: 0,
            message: e.to_string(),
        },
    }
}

/// Writes a dataset as libsvm sparse text (zeros omitted, 1-based indices).
/// `comments` are emitted first as `#`-prefixed lines, which this crate's
/// loader skips.
pub fn write_libsvm(path: &Path, data: &Dataset, comments: &[String]) -> Result<()> {
    let mut out = String::new();
    for comment in comments {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
    }
    for (row, &label) in data.features.iter_rows().zip(data.labels.as_slice()) {
        out.push_str(&label.to_string());
        for (i, &value) in row.iter().enumerate() {
            if value != 0.0 {
                out.push_str(&format!(" {}:{}", i + 1, value));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_error(path, e))
}

fn format_report_row(result: &BenchmarkResult) -> String {
    let p = result
        .p
        .map(|p| p.to_string())
        .unwrap_or_default();
    let gamma = result
        .chosen
        .gamma
        .map(|g| g.to_string())
        .unwrap_or_default();
    let q = result
        .chosen
        .q
        .map(|q| q.to_string())
        .unwrap_or_default();
    format!(
        "{},{},{},{:.4},{:.4},{:.4},{},{},{},{}",
        result.dataset,
        result.method,
        p,
        result.accuracy,
        result.train_seconds,
        result.grid_seconds,
        result.chosen.c,
        gamma,
        q,
        result.seed
    )
}

const REPORT_HEADER: &str =
    "dataset,method,p,accuracy,train_seconds,gridsearch_seconds,chosen_C,chosen_gamma,chosen_q,seed";

/// Writes benchmark rows as CSV (schema above, `comments` as leading `#`
/// lines) and optionally a markdown accuracy table with one row per dataset
/// and one column per method, accuracies rendered to 2 decimals.
pub fn write_report(
    results: &[BenchmarkResult],
    csv_path: &Path,
    markdown_path: Option<&Path>,
    comments: &[String],
) -> Result<()> {
    let mut out = String::new();
    for comment in comments {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
    }
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for result in results {
        out.push_str(&format_report_row(result));
        out.push('\n');
    }
    let mut file = File::create(csv_path).map_err(|e| io_error(csv_path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| io_error(csv_path, e))?;

    if let Some(md_path) = markdown_path {
        let md = render_markdown_table(results, comments);
        std::fs::write(md_path, md).map_err(|e| io_error(md_path, e))?;
    }
    Ok(())
}

/// Renders the row=dataset, column=method accuracy table.
pub fn render_markdown_table(results: &[BenchmarkResult], comments: &[String]) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for result in results {
        if !datasets.contains(&result.dataset.as_str()) {
            datasets.push(&result.dataset);
        }
        if !methods.contains(&result.method.as_str()) {
            methods.push(&result.method);
        }
    }

    let mut out = String::new();
    for comment in comments {
        out.push_str("<!-- ");
        out.push_str(comment);
        out.push_str(" -->\n");
    }
    out.push_str("| dataset |");
    for method in &methods {
        out.push_str(&format!(" {method} |"));
    }
    out.push_str("\n|---|");
    for _ in &methods {
        out.push_str("---|");
    }
    out.push('\n');
    for dataset in &datasets {
        out.push_str(&format!("| {dataset} |"));
        for method in &methods {
            let cell = results
                .iter()
                .find(|r| r.dataset == *dataset && r.method == *method)
                .map(|r| format!("{:.2}", r.accuracy))
                .unwrap_or_default();
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}
