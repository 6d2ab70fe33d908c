//! Reading experiment records from CSV or JSON lines.
//!
//! Both formats share field names: `id`, `model`, `dataset`, `n`, `labels`,
//! `t`, `observed_max_accuracy`, and optionally `shots`, `heldout_accuracy`,
//! `heldout_n`, `per_prompt_accuracies`. `labels` is either an integer `m` or
//! a list of per-example label counts (semicolon-delimited in CSV, an array or
//! semicolon string in JSON). Row numbers in errors count data rows from 1.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use super::ExperimentRecord;
use crate::dist::LabelScheme;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    JsonLines,
}

impl RecordFormat {
    /// Guesses from the file extension: `.jsonl`/`.json`/`.ndjson` are JSON
    /// lines, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json" | "ndjson") => RecordFormat::JsonLines,
            _ => RecordFormat::Csv,
        }
    }
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RecordFormat::Csv),
            "json" | "jsonl" | "json-lines" => Ok(RecordFormat::JsonLines),
            other => Err(Error::domain(format!("unknown record format `{other}`"))),
        }
    }
}

pub fn read_records_path(
    path: &Path,
    format: Option<RecordFormat>,
) -> Result<Vec<ExperimentRecord>> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_records(
        file,
        format.unwrap_or_else(|| RecordFormat::from_path(path)),
    )
}

/// Parses and validates every row. All row errors are collected and returned
/// together; no row is dropped silently.
pub fn read_records<R: Read>(reader: R, format: RecordFormat) -> Result<Vec<ExperimentRecord>> {
    let rows = match format {
        RecordFormat::Csv => read_csv(reader)?,
        RecordFormat::JsonLines => read_json_lines(reader)?,
    };
    let mut records = Vec::with_capacity(rows.len());
    let mut errors = Vec::new();
    for (row, parsed) in rows {
        match parsed.and_then(|mut r| {
            r.warnings = r.validate().map_err(|e| Error::Field {
                row,
                field: "record".into(),
                message: e.to_string(),
            })?;
            Ok(r)
        }) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(Error::Rows(errors))
    }
}

fn field_err(row: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Field {
        row,
        field: field.into(),
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(row: usize, field: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| field_err(row, field, format!("cannot parse `{raw}`")))
}

fn parse_labels(row: usize, raw: &str) -> Result<LabelScheme> {
    let raw = raw.trim();
    if raw.contains(';') {
        let counts = raw
            .split(';')
            .map(|c| parse_num::<u32>(row, "labels", c))
            .collect::<Result<Vec<_>>>()?;
        LabelScheme::from_label_counts(&counts).map_err(|e| field_err(row, "labels", e.to_string()))
    } else {
        Ok(LabelScheme::uniform(parse_num(row, "labels", raw)?))
    }
}

fn parse_accuracy_list(row: usize, field: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(';').map(|a| parse_num(row, field, a)).collect()
}

const REQUIRED: [&str; 7] = [
    "id",
    "model",
    "dataset",
    "n",
    "labels",
    "t",
    "observed_max_accuracy",
];

type Rows = Vec<(usize, Result<ExperimentRecord>)>;

fn read_csv<R: Read>(reader: R) -> Result<Rows> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| field_err(0, "header", e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for name in REQUIRED {
        if col(name).is_none() {
            return Err(field_err(0, name, "required column missing from header"));
        }
    }
    let idx = |name: &str| col(name).expect("checked");
    let optional = |name: &str| col(name);

    let mut rows = Vec::new();
    for (i, result) in rdr.records().enumerate() {
        let row = i + 1;
        let parsed = result
            .map_err(|e| field_err(row, "row", e.to_string()))
            .and_then(|rec| {
                let get = |c: usize| rec.get(c).unwrap_or("");
                let opt = |name: &str| optional(name).map(get).filter(|v| !v.is_empty());
                Ok(ExperimentRecord {
                    id: get(idx("id")).to_string(),
                    model: get(idx("model")).to_string(),
                    dataset: get(idx("dataset")).to_string(),
                    shots: opt("shots")
                        .map(|v| parse_num(row, "shots", v))
                        .transpose()?,
                    n: parse_num(row, "n", get(idx("n")))?,
                    labels: parse_labels(row, get(idx("labels")))?,
                    t: parse_num(row, "t", get(idx("t")))?,
                    observed_max_accuracy: parse_num(
                        row,
                        "observed_max_accuracy",
                        get(idx("observed_max_accuracy")),
                    )?,
                    per_prompt_accuracies: opt("per_prompt_accuracies")
                        .map(|v| parse_accuracy_list(row, "per_prompt_accuracies", v))
                        .transpose()?,
                    heldout_accuracy: opt("heldout_accuracy")
                        .map(|v| parse_num(row, "heldout_accuracy", v))
                        .transpose()?,
                    heldout_n: opt("heldout_n")
                        .map(|v| parse_num(row, "heldout_n", v))
                        .transpose()?,
                    warnings: Vec::new(),
                })
            });
        rows.push((row, parsed));
    }
    Ok(rows)
}

fn read_json_lines<R: Read>(reader: R) -> Result<Rows> {
    let mut rows = Vec::new();
    let mut row = 0;
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let parsed = serde_json::from_str::<Value>(&line)
            .map_err(|e| field_err(row, "row", format!("invalid JSON: {e}")))
            .and_then(|v| json_record(row, &v));
        rows.push((row, parsed));
    }
    Ok(rows)
}

fn json_record(row: usize, v: &Value) -> Result<ExperimentRecord> {
    let obj = v
        .as_object()
        .ok_or_else(|| field_err(row, "row", "expected a JSON object"))?;
    let present = |name: &str| obj.get(name).filter(|v| !v.is_null());
    let required = |name: &str| present(name).ok_or_else(|| field_err(row, name, "missing"));
    let text = |name: &str| -> Result<String> {
        match required(name)? {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(field_err(row, name, "expected a string")),
        }
    };
    let uint = |name: &str, v: &Value| -> Result<u64> {
        v.as_u64()
            .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
            .ok_or_else(|| {
                field_err(
                    row,
                    name,
                    format!("expected a nonnegative integer, got {v}"),
                )
            })
    };
    let real = |name: &str, v: &Value| -> Result<f64> {
        v.as_f64()
            .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
            .ok_or_else(|| field_err(row, name, format!("expected a number, got {v}")))
    };

    let labels = match required("labels")? {
        Value::Array(items) => {
            let counts = items
                .iter()
                .map(|c| uint("labels", c).map(|c| c as u32))
                .collect::<Result<Vec<_>>>()?;
            LabelScheme::from_label_counts(&counts)
                .map_err(|e| field_err(row, "labels", e.to_string()))?
        }
        Value::String(s) => parse_labels(row, s)?,
        other => LabelScheme::uniform(uint("labels", other)? as u32),
    };
    let per_prompt = match present("per_prompt_accuracies") {
        None => None,
        Some(Value::Array(items)) => Some(
            items
                .iter()
                .map(|a| real("per_prompt_accuracies", a))
                .collect::<Result<Vec<_>>>()?,
        ),
        Some(Value::String(s)) => Some(parse_accuracy_list(row, "per_prompt_accuracies", s)?),
        Some(_) => return Err(field_err(row, "per_prompt_accuracies", "expected an array")),
    };

    Ok(ExperimentRecord {
        id: text("id")?,
        model: text("model")?,
        dataset: text("dataset")?,
        shots: present("shots")
            .map(|v| uint("shots", v).map(|s| s as u32))
            .transpose()?,
        n: uint("n", required("n")?)? as usize,
        labels,
        t: uint("t", required("t")?)?,
        observed_max_accuracy: real("observed_max_accuracy", required("observed_max_accuracy")?)?,
        per_prompt_accuracies: per_prompt,
        heldout_accuracy: present("heldout_accuracy")
            .map(|v| real("heldout_accuracy", v))
            .transpose()?,
        heldout_n: present("heldout_n")
            .map(|v| uint("heldout_n", v).map(|n| n as usize))
            .transpose()?,
        warnings: Vec::new(),
    })
}
