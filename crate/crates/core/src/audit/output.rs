//! CSV and JSON-lines writers for audit results. Every float is written with
//! 12 significant digits.

use std::io::Write;

use serde_json::{json, Value};

use super::prediction::{Curves, PredictionEvaluation, PredictorSummary};
use super::{AuditSummary, AuditVerdict, CategoryCounts};
use crate::error::{Error, Result};
use crate::format::{fmt_opt, fmt_sig, round_sig};

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn write_json_line<W: Write>(out: &mut W, v: &Value) -> Result<()> {
    writeln!(out, "{v}")?;
    Ok(())
}

pub fn write_verdicts_csv<W: Write>(out: W, verdicts: &[AuditVerdict]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "id",
        "model",
        "dataset",
        "shots",
        "n",
        "t",
        "observed",
        "category",
        "expected_standard",
        "expected_max",
        "p_standard",
        "p_max",
        "warnings",
    ])
    .map_err(csv_err)?;
    for v in verdicts {
        w.write_record([
            v.id.clone(),
            v.model.clone(),
            v.dataset.clone(),
            v.shots.map(|s| s.to_string()).unwrap_or_default(),
            v.n.to_string(),
            v.t.to_string(),
            fmt_sig(v.observed),
            v.category.as_str().to_string(),
            fmt_sig(v.expected_standard),
            fmt_sig(v.expected_max),
            fmt_sig(v.p_standard),
            fmt_sig(v.p_max),
            v.warnings.join("; "),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_verdicts_json<W: Write>(mut out: W, verdicts: &[AuditVerdict]) -> Result<()> {
    for v in verdicts {
        write_json_line(
            &mut out,
            &json!({
                "id": v.id,
                "model": v.model,
                "dataset": v.dataset,
                "shots": v.shots,
                "n": v.n,
                "t": v.t,
                "observed": num(v.observed),
                "category": v.category.as_str(),
                "expected_standard": num(v.expected_standard),
                "expected_max": num(v.expected_max),
                "p_standard": num(v.p_standard),
                "p_max": num(v.p_max),
                "warnings": v.warnings,
            }),
        )?;
    }
    Ok(())
}

fn counts_json(c: &CategoryCounts) -> Value {
    json!({
        "below_both": c.below_both,
        "flip": c.flip,
        "above_both": c.above_both,
        "total": c.total(),
        "flipped_percentage": num(c.flipped_percentage()),
        "flipped_undefined": c.flipped_undefined(),
    })
}

/// One row for the whole input (`scope = all`) followed by one per group.
pub fn write_summary_csv<W: Write>(out: W, summary: &AuditSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scope",
        "model",
        "dataset",
        "shots",
        "below_both",
        "flip",
        "above_both",
        "total",
        "flipped_percentage",
        "flipped_undefined",
    ])
    .map_err(csv_err)?;
    let row = |scope: &str, model: &str, dataset: &str, shots: Option<u32>, c: &CategoryCounts| {
        vec![
            scope.to_string(),
            model.to_string(),
            dataset.to_string(),
            shots.map(|s| s.to_string()).unwrap_or_default(),
            c.below_both.to_string(),
            c.flip.to_string(),
            c.above_both.to_string(),
            c.total().to_string(),
            fmt_sig(c.flipped_percentage()),
            c.flipped_undefined().to_string(),
        ]
    };
    w.write_record(row("all", "", "", None, &summary.counts))
        .map_err(csv_err)?;
    for g in &summary.groups {
        w.write_record(row(
            "group",
            &g.key.model,
            &g.key.dataset,
            g.key.shots,
            &g.counts,
        ))
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(mut out: W, summary: &AuditSummary) -> Result<()> {
    let mut all = counts_json(&summary.counts);
    all["scope"] = json!("all");
    write_json_line(&mut out, &all)?;
    for g in &summary.groups {
        let mut v = counts_json(&g.counts);
        v["scope"] = json!("group");
        v["model"] = json!(g.key.model);
        v["dataset"] = json!(g.key.dataset);
        v["shots"] = json!(g.key.shots);
        write_json_line(&mut out, &v)?;
    }
    Ok(())
}

fn predictor_json(p: &PredictorSummary) -> Value {
    json!({
        "name": p.name,
        "tp": p.confusion.tp,
        "fp": p.confusion.fp,
        "tn": p.confusion.tn,
        "fn": p.confusion.fn_,
        "accuracy": opt_num(p.accuracy),
        "precision": opt_num(p.precision),
        "recall": opt_num(p.recall),
    })
}

fn curves_json(c: &Curves) -> Value {
    json!({
        "auroc": opt_num(c.auroc),
        "aupr": opt_num(c.aupr),
        "roc": c.roc.iter().map(|p| json!({"threshold": num(p.threshold), "fpr": num(p.fpr), "tpr": num(p.tpr)})).collect::<Vec<_>>(),
        "pr": c.pr.iter().map(|p| json!({"threshold": num(p.threshold), "recall": num(p.recall), "precision": num(p.precision)})).collect::<Vec<_>>(),
    })
}

/// A single JSON object with both predictors and the score curves.
pub fn write_prediction_json<W: Write>(mut out: W, eval: &PredictionEvaluation) -> Result<()> {
    write_json_line(
        &mut out,
        &json!({
            "records": eval.records,
            "heldout_above_random": eval.heldout_above_random,
            "predictors": [predictor_json(&eval.standard), predictor_json(&eval.max)],
            "score_curves": curves_json(&eval.score_curves),
        }),
    )
}

/// Two CSV tables separated by a blank line: predictor metrics, then the
/// ROC and PR points of the shared score (`inf` marks the ROC origin).
pub fn write_prediction_csv<W: Write>(mut out: W, eval: &PredictionEvaluation) -> Result<()> {
    writeln!(
        out,
        "predictor,tp,fp,tn,fn,accuracy,precision,recall,auroc,aupr"
    )?;
    for p in [&eval.standard, &eval.max] {
        let c = &p.confusion;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},,",
            p.name,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            fmt_opt(p.accuracy),
            fmt_opt(p.precision),
            fmt_opt(p.recall)
        )?;
    }
    let curves = &eval.score_curves;
    writeln!(
        out,
        "score,,,,,,,,{},{}",
        fmt_opt(curves.auroc),
        fmt_opt(curves.aupr)
    )?;
    writeln!(out)?;
    writeln!(out, "curve,threshold,x,y")?;
    for p in &curves.roc {
        writeln!(
            out,
            "roc,{},{},{}",
            fmt_sig(p.threshold),
            fmt_sig(p.fpr),
            fmt_sig(p.tpr)
        )?;
    }
    for p in &curves.pr {
        writeln!(
            out,
            "pr,{},{},{}",
            fmt_sig(p.threshold),
            fmt_sig(p.recall),
            fmt_sig(p.precision)
        )?;
    }
    Ok(())
}

/// One point of an expected-maximum curve for one record.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurveRow {
    pub id: String,
    pub t: u64,
    pub empirical_expected_max: f64,
    pub expected_max_baseline: f64,
    pub p_standard: f64,
    pub p_max: f64,
}

pub fn write_curve_csv<W: Write>(out: W, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "id",
        "t",
        "empirical_expected_max",
        "expected_max_baseline",
        "p_standard",
        "p_max",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.t.to_string(),
            fmt_sig(r.empirical_expected_max),
            fmt_sig(r.expected_max_baseline),
            fmt_sig(r.p_standard),
            fmt_sig(r.p_max),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_json<W: Write>(mut out: W, rows: &[CurveRow]) -> Result<()> {
    for r in rows {
        write_json_line(
            &mut out,
            &json!({
                "id": r.id,
                "t": r.t,
                "empirical_expected_max": num(r.empirical_expected_max),
                "expected_max_baseline": num(r.expected_max_baseline),
                "p_standard": num(r.p_standard),
                "p_max": num(r.p_max),
            }),
        )?;
    }
    Ok(())
}
