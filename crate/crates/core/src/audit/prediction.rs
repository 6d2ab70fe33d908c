//! Does validation accuracy predict above-random held-out accuracy?
//!
//! Ground truth for a record is `heldout_accuracy > expected_standard`: the
//! held-out set has been used once, so the standard baseline applies there.
//! Two binary predictors compare the best validation accuracy with the
//! standard and the maximum baseline. A shared confidence score,
//! `F(n * acc - 1)` of the single-classifier distribution, drives the ROC and
//! precision-recall curves; any strictly increasing transform of it (such as
//! the maximum-order cdf `F^t`) yields the same curves.

use serde::Serialize;

use super::ExperimentRecord;
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::orderstat::{accuracy_to_count, Baseline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictorSummary {
    pub name: &'static str,
    pub confusion: Confusion,
    /// `None` when the denominator is zero.
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl PredictorSummary {
    fn new(name: &'static str, confusion: Confusion) -> Self {
        PredictorSummary {
            name,
            accuracy: confusion.accuracy(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            confusion,
        }
    }
}

/// One ROC operating point: predict positive when `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub roc: Vec<RocPoint>,
    pub pr: Vec<PrPoint>,
    /// Trapezoidal area; `None` without both classes.
    pub auroc: Option<f64>,
    /// Step-interpolated area (average precision); `None` without positives.
    pub aupr: Option<f64>,
}

/// ROC and PR curves of `scores` against `labels`.
///
/// Tied scores form a single sweep step. The ROC starts at `(0, 0)` with an
/// infinite threshold.
pub fn roc_pr_curves(scores: &[f64], labels: &[bool]) -> Result<Curves> {
    if scores.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::domain(format!("scores must not be NaN (got {bad})")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut roc = Vec::new();
    let mut pr = Vec::new();
    let both = positives > 0 && negatives > 0;
    if both {
        roc.push(RocPoint {
            threshold: f64::INFINITY,
            fpr: 0.0,
            tpr: 0.0,
        });
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if both {
            roc.push(RocPoint {
                threshold: s,
                fpr: fp as f64 / negatives as f64,
                tpr: tp as f64 / positives as f64,
            });
        }
        if positives > 0 {
            pr.push(PrPoint {
                threshold: s,
                recall: tp as f64 / positives as f64,
                precision: tp as f64 / (tp + fp) as f64,
            });
        }
    }

    let auroc = both.then(|| {
        roc.windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    });
    let aupr = (positives > 0).then(|| {
        let mut prev_recall = 0.0;
        let mut area = 0.0;
        for p in &pr {
            area += (p.recall - prev_recall) * p.precision;
            prev_recall = p.recall;
        }
        area.clamp(0.0, 1.0)
    });
    Ok(Curves {
        roc,
        pr,
        auroc,
        aupr,
    })
}

/// Confidence scores for one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationScore {
    /// `F(n * acc - 1)`: share of single random classifiers scoring below.
    pub standard: f64,
    /// `F(n * acc - 1)^t`: the same for the best of `t`.
    pub max: f64,
    pub expected_standard: f64,
    pub expected_max: f64,
}

fn score_record(record: &ExperimentRecord) -> Result<ValidationScore> {
    record.validate()?;
    let baseline = Baseline::new(&record.task_spec()?)?;
    let k = accuracy_to_count(record.observed_max_accuracy, record.n)? as i64;
    let base = baseline.distribution().base();
    let standard = base.cdf_at(k - 1);
    let max = if record.t == 1 {
        standard
    } else {
        (record.t as f64 * base.ln_cdf_at(k - 1)).exp()
    };
    Ok(ValidationScore {
        standard,
        max,
        expected_standard: baseline.expected_standard(),
        expected_max: baseline.expected_max(),
    })
}

/// Scores for every record, in input order.
pub fn validation_scores(
    records: &[ExperimentRecord],
    exec: Execution,
) -> Result<Vec<ValidationScore>> {
    map_ordered(records, exec, score_record)
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionEvaluation {
    pub records: usize,
    pub heldout_above_random: usize,
    pub standard: PredictorSummary,
    pub max: PredictorSummary,
    pub score_curves: Curves,
}

pub fn evaluate_prediction(records: &[ExperimentRecord]) -> Result<PredictionEvaluation> {
    evaluate_prediction_with(records, Execution::default())
}

pub fn evaluate_prediction_with(
    records: &[ExperimentRecord],
    exec: Execution,
) -> Result<PredictionEvaluation> {
    for (i, r) in records.iter().enumerate() {
        if r.heldout_accuracy.is_none() || r.heldout_n.is_none() {
            return Err(Error::Field {
                row: i + 1,
                field: "heldout_accuracy".into(),
                message: format!("record `{}` lacks heldout_accuracy/heldout_n", r.id),
            });
        }
    }
    let scores = validation_scores(records, exec)?;

    let actual: Vec<bool> = records
        .iter()
        .zip(&scores)
        .map(|(r, s)| r.heldout_accuracy.expect("checked") > s.expected_standard)
        .collect();
    let standard_pred: Vec<bool> = records
        .iter()
        .zip(&scores)
        .map(|(r, s)| r.observed_max_accuracy > s.expected_standard)
        .collect();
    let max_pred: Vec<bool> = records
        .iter()
        .zip(&scores)
        .map(|(r, s)| r.observed_max_accuracy > s.expected_max)
        .collect();

    let shared: Vec<f64> = scores.iter().map(|s| s.standard).collect();
    Ok(PredictionEvaluation {
        records: records.len(),
        heldout_above_random: actual.iter().filter(|&&a| a).count(),
        standard: PredictorSummary::new(
            "standard",
            Confusion::from_predictions(&standard_pred, &actual),
        ),
        max: PredictorSummary::new("max", Confusion::from_predictions(&max_pred, &actual)),
        score_curves: roc_pr_curves(&shared, &actual)?,
    })
}
