use std::io::Write;
use std::path::Path;

use maxrand::audit::{
    aggregate, classify_all, evaluate_prediction, expected_max_curve, read_records_path,
    write_curve_csv, write_curve_json, write_prediction_csv, write_prediction_json,
    write_summary_csv, write_summary_json, write_verdicts_csv, write_verdicts_json, RecordFormat,
};
use maxrand::format::{fmt_sig, round_sig};
use maxrand::grid::{compute_grid, Axis, GridRequest, Quantity};
use maxrand::oracle::{simulate_expected_max, simulate_tail_max, SimulationConfig};
use maxrand::{Baseline, Error, Execution, LabelScheme, Result, TaskSpec, Threshold};
use serde_json::{json, Map, Value};

use crate::args::{Command, Format, GridQuantity, InputFormat, LabelArgs, OutputArgs, TaskArgs};
use crate::Emitted;

pub fn run(command: Command) -> Result<Emitted> {
    match command {
        Command::Baseline { task, output } => baseline(&task, &output),
        Command::Pvalue { task, acc, output } => pvalue(&task, acc, &output),
        Command::Threshold {
            task,
            alpha,
            output,
        } => threshold(&task, alpha, &output),
        Command::Grid {
            n,
            t,
            labels,
            quantity,
            acc,
            alpha,
            output,
        } => grid(n.as_deref(), &t, &labels, quantity, acc, alpha, &output),
        Command::Audit {
            input,
            input_format,
            eval_heldout,
            summary_out,
            eval_out,
            output,
        } => audit(
            &input,
            input_format,
            eval_heldout,
            summary_out.as_deref(),
            eval_out.as_deref(),
            &output,
        ),
        Command::Simulate {
            task,
            trials,
            seed,
            acc,
            output,
        } => simulate(&task, trials, seed, acc, &output),
        Command::Curve {
            input,
            input_format,
            t,
            output,
        } => curve(&input, input_format, t.as_deref(), &output),
    }
}

/// A label scheme with the text used to echo it back in output.
struct Labels {
    scheme: LabelScheme,
    text: String,
    fixed_n: Option<usize>,
}

fn parse_labels(args: &LabelArgs) -> Result<Labels> {
    if let Some(m) = args.m {
        return Ok(Labels {
            scheme: LabelScheme::uniform(m),
            text: m.to_string(),
            fixed_n: None,
        });
    }
    if let Some(p) = args.p {
        return Ok(Labels {
            scheme: LabelScheme::probability(p),
            text: format!("p={}", fmt_sig(p)),
            fixed_n: None,
        });
    }
    if let Some(raw) = &args.labels {
        let counts = raw
            .split(';')
            .map(|c| {
                c.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Domain(format!("invalid label count `{c}` in --labels")))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Labels {
            scheme: LabelScheme::from_label_counts(&counts)?,
            text: counts
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            fixed_n: Some(counts.len()),
        });
    }
    Err(Error::Domain(
        "one of --m, --labels or --p is required".into(),
    ))
}

fn task_spec(args: &TaskArgs) -> Result<(TaskSpec, String)> {
    let labels = parse_labels(&args.labels)?;
    let n = match (args.n, labels.fixed_n) {
        (Some(n), Some(len)) if n != len => {
            return Err(Error::Domain(format!(
                "--n {n} disagrees with {len} per-example label counts"
            )))
        }
        (Some(n), _) | (None, Some(n)) => n,
        (None, None) => return Err(Error::Domain("--n is required".into())),
    };
    Ok((TaskSpec::new(n, labels.scheme, args.t)?, labels.text))
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

fn threshold_cell(th: Threshold) -> String {
    th.accuracy()
        .map(fmt_sig)
        .unwrap_or_else(|| "unattainable".into())
}

fn threshold_json(th: Threshold) -> Value {
    th.accuracy().map_or(Value::Null, num)
}

/// A single-row table rendered as CSV or as one JSON object.
fn single_row(columns: &[(&str, String, Value)], format: Format) -> Vec<u8> {
    match format {
        Format::Csv => {
            let header: Vec<&str> = columns.iter().map(|c| c.0).collect();
            let row: Vec<&str> = columns.iter().map(|c| c.1.as_str()).collect();
            format!("{}\n{}\n", header.join(","), row.join(",")).into_bytes()
        }
        Format::Json => {
            let obj: Map<String, Value> = columns
                .iter()
                .map(|(k, _, v)| (k.to_string(), v.clone()))
                .collect();
            format!("{}\n", Value::Object(obj)).into_bytes()
        }
    }
}

fn emit(output: &OutputArgs, bytes: Vec<u8>) -> Emitted {
    match &output.out {
        Some(path) => Emitted {
            stdout: Vec::new(),
            files: vec![(path.clone(), bytes)],
        },
        None => Emitted {
            stdout: bytes,
            files: Vec::new(),
        },
    }
}

fn common_columns(spec: &TaskSpec, label_text: &str) -> Vec<(&'static str, String, Value)> {
    vec![
        ("n", spec.n().to_string(), json!(spec.n())),
        ("labels", label_text.to_string(), json!(label_text)),
        ("t", spec.t().to_string(), json!(spec.t())),
    ]
}

fn baseline(task: &TaskArgs, output: &OutputArgs) -> Result<Emitted> {
    let (spec, text) = task_spec(task)?;
    let b = Baseline::new(&spec)?;
    let (std, max) = (b.expected_standard(), b.expected_max());
    let th = b.min_accuracy_beating_max();
    let mut cols = common_columns(&spec, &text);
    cols.extend([
        ("expected_standard", fmt_sig(std), num(std)),
        ("expected_max", fmt_sig(max), num(max)),
        (
            "min_accuracy_beating_max",
            threshold_cell(th),
            threshold_json(th),
        ),
    ]);
    Ok(emit(output, single_row(&cols, output.format())))
}

fn pvalue(task: &TaskArgs, acc: f64, output: &OutputArgs) -> Result<Emitted> {
    let (spec, text) = task_spec(task)?;
    let b = Baseline::new(&spec)?;
    let (ps, pm) = (b.p_value_standard(acc)?, b.p_value_max(acc)?);
    let mut cols = common_columns(&spec, &text);
    cols.extend([
        ("accuracy", fmt_sig(acc), num(acc)),
        (
            "expected_standard",
            fmt_sig(b.expected_standard()),
            num(b.expected_standard()),
        ),
        (
            "expected_max",
            fmt_sig(b.expected_max()),
            num(b.expected_max()),
        ),
        ("p_standard", fmt_sig(ps), num(ps)),
        ("p_max", fmt_sig(pm), num(pm)),
    ]);
    Ok(emit(output, single_row(&cols, output.format())))
}

fn threshold(task: &TaskArgs, alpha: Option<f64>, output: &OutputArgs) -> Result<Emitted> {
    let (spec, text) = task_spec(task)?;
    let b = Baseline::new(&spec)?;
    let beat = b.min_accuracy_beating_max();
    let mut cols = common_columns(&spec, &text);
    cols.push((
        "expected_max",
        fmt_sig(b.expected_max()),
        num(b.expected_max()),
    ));
    cols.push((
        "min_accuracy_beating_max",
        threshold_cell(beat),
        threshold_json(beat),
    ));
    if let Some(alpha) = alpha {
        let sig = b.min_accuracy_at_significance(alpha)?;
        cols.push(("alpha", fmt_sig(alpha), num(alpha)));
        cols.push((
            "min_accuracy_at_significance",
            threshold_cell(sig),
            threshold_json(sig),
        ));
    }
    Ok(emit(output, single_row(&cols, output.format())))
}

#[allow(clippy::too_many_arguments)]
fn grid(
    n: Option<&str>,
    t: &str,
    labels: &LabelArgs,
    quantity: GridQuantity,
    acc: Option<f64>,
    alpha: Option<f64>,
    output: &OutputArgs,
) -> Result<Emitted> {
    let labels = parse_labels(labels)?;
    let n_axis = match (n, labels.fixed_n) {
        (Some(raw), _) => raw.parse::<Axis>()?,
        (None, Some(len)) => Axis::new(vec![len as u64])?,
        (None, None) => return Err(Error::Domain("--n is required".into())),
    };
    let quantity = match quantity {
        GridQuantity::ExpectedMax => Quantity::ExpectedMax,
        GridQuantity::PValue => Quantity::PValueAt(
            acc.ok_or_else(|| Error::Domain("--quantity p-value needs --acc".into()))?,
        ),
        GridQuantity::Threshold => Quantity::ThresholdAt(
            alpha.ok_or_else(|| Error::Domain("--quantity threshold needs --alpha".into()))?,
        ),
    };
    let request = GridRequest {
        n_axis,
        t_axis: t.parse()?,
        labels: labels.scheme,
        quantity,
    };
    let cells = compute_grid(&request, Execution::default())?;
    let column = quantity.column_name();

    let mut buf = Vec::new();
    match output.format() {
        Format::Csv => {
            writeln!(buf, "n,t,expected_standard,{column}")?;
            for c in &cells {
                let value = c
                    .value
                    .map(fmt_sig)
                    .unwrap_or_else(|| "unattainable".into());
                writeln!(
                    buf,
                    "{},{},{},{}",
                    c.n,
                    c.t,
                    fmt_sig(c.expected_standard),
                    value
                )?;
            }
        }
        Format::Json => {
            for c in &cells {
                let mut obj = Map::new();
                obj.insert("n".into(), json!(c.n));
                obj.insert("t".into(), json!(c.t));
                obj.insert("expected_standard".into(), num(c.expected_standard));
                obj.insert(column.into(), c.value.map_or(Value::Null, num));
                writeln!(buf, "{}", Value::Object(obj))?;
            }
        }
    }
    Ok(emit(output, buf))
}

fn record_format(input_format: Option<InputFormat>) -> Option<RecordFormat> {
    input_format.map(|f| match f {
        InputFormat::Csv => RecordFormat::Csv,
        InputFormat::Jsonl => RecordFormat::JsonLines,
    })
}

fn audit(
    input: &Path,
    input_format: Option<InputFormat>,
    eval_heldout: bool,
    summary_out: Option<&Path>,
    eval_out: Option<&Path>,
    output: &OutputArgs,
) -> Result<Emitted> {
    let records = read_records_path(input, record_format(input_format))?;
    let verdicts = classify_all(&records, Execution::default())?;
    let summary = aggregate(&verdicts);
    let evaluation = if eval_heldout {
        Some(evaluate_prediction(&records)?)
    } else {
        None
    };

    let format = output.format();
    let mut main = Vec::new();
    match format {
        Format::Csv => write_verdicts_csv(&mut main, &verdicts)?,
        Format::Json => write_verdicts_json(&mut main, &verdicts)?,
    }

    let mut summary_bytes = Vec::new();
    match format {
        Format::Csv => write_summary_csv(&mut summary_bytes, &summary)?,
        Format::Json => write_summary_json(&mut summary_bytes, &summary)?,
    }
    let mut files = Vec::new();
    let mut stdout = Vec::new();
    let mut push = |dest: Option<&Path>, bytes: Vec<u8>, main: &mut Vec<u8>| match dest {
        Some(p) => files.push((p.to_path_buf(), bytes)),
        None => {
            main.push(b'\n');
            main.extend(bytes);
        }
    };
    push(summary_out, summary_bytes, &mut main);
    if let Some(eval) = &evaluation {
        let mut bytes = Vec::new();
        match format {
            Format::Csv => write_prediction_csv(&mut bytes, eval)?,
            Format::Json => write_prediction_json(&mut bytes, eval)?,
        }
        push(eval_out, bytes, &mut main);
    }
    match &output.out {
        Some(p) => files.push((p.clone(), main)),
        None => stdout = main,
    }
    Ok(Emitted { stdout, files })
}

fn simulate(
    task: &TaskArgs,
    trials: u64,
    seed: u64,
    acc: Option<f64>,
    output: &OutputArgs,
) -> Result<Emitted> {
    let (spec, text) = task_spec(task)?;
    let config = SimulationConfig::new(spec.clone(), trials, seed)?;
    let baseline = Baseline::new(&spec)?;
    if let Some(acc) = acc {
        baseline.p_value_max(acc)?;
    }
    let est = simulate_expected_max(&config)?;
    let closed = baseline.expected_max();

    let mut cols = common_columns(&spec, &text);
    cols.extend([
        ("trials", trials.to_string(), json!(trials)),
        ("seed", seed.to_string(), json!(seed)),
        ("generator", est.generator.to_string(), json!(est.generator)),
        ("estimate", fmt_sig(est.estimate), num(est.estimate)),
        ("std_error", fmt_sig(est.std_error), num(est.std_error)),
        ("closed_form", fmt_sig(closed), num(closed)),
        ("z", fmt_sig(est.z_score(closed)), num(est.z_score(closed))),
    ]);
    if let Some(acc) = acc {
        let tail = simulate_tail_max(&config, acc)?;
        let exact = baseline.p_value_max(acc)?;
        cols.extend([
            ("accuracy", fmt_sig(acc), num(acc)),
            ("tail_estimate", fmt_sig(tail.estimate), num(tail.estimate)),
            (
                "tail_std_error",
                fmt_sig(tail.std_error),
                num(tail.std_error),
            ),
            ("p_max", fmt_sig(exact), num(exact)),
        ]);
    }
    Ok(emit(output, single_row(&cols, output.format())))
}

fn curve(
    input: &Path,
    input_format: Option<InputFormat>,
    t: Option<&str>,
    output: &OutputArgs,
) -> Result<Emitted> {
    let records = read_records_path(input, record_format(input_format))?;
    let axis = t.map(str::parse::<Axis>).transpose()?;
    // records without per-prompt accuracies have no curve and are skipped
    let with_prompts: Vec<_> = records
        .iter()
        .filter(|r| r.per_prompt_accuracies.is_some())
        .collect();
    if with_prompts.is_empty() {
        return Err(Error::Domain(format!(
            "{}: no record has per_prompt_accuracies",
            input.display()
        )));
    }
    let mut rows = Vec::new();
    for r in with_prompts {
        let t_values: Vec<u64> = match &axis {
            Some(a) => a.values().to_vec(),
            None => {
                let len = r.per_prompt_accuracies.as_ref().map_or(1, Vec::len) as u64;
                (1..=len).collect()
            }
        };
        rows.extend(expected_max_curve(r, &t_values)?);
    }
    let mut buf = Vec::new();
    match output.format() {
        Format::Csv => write_curve_csv(&mut buf, &rows)?,
        Format::Json => write_curve_json(&mut buf, &rows)?,
    }
    Ok(emit(output, buf))
}
