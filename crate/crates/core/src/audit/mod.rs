//! Re-contextualizing reported few-shot results against both random
//! baselines.
//!
//! A result is [`Category::Flip`] when it beats the standard random baseline
//! but not the maximum random baseline for its number of validation-set
//! evaluations. "Beating" is strict in both comparisons.

mod output;
mod prediction;
mod records;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::LabelScheme;
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::orderstat::{accuracy_to_count, Baseline, TaskSpec};
use crate::special::CompensatedSum;

pub use output::{
    write_curve_csv, write_curve_json, write_prediction_csv, write_prediction_json,
    write_summary_csv, write_summary_json, write_verdicts_csv, write_verdicts_json, CurveRow,
};
pub use prediction::{
    evaluate_prediction, evaluate_prediction_with, roc_pr_curves, validation_scores, Confusion,
    Curves, PrPoint, PredictionEvaluation, PredictorSummary, RocPoint, ValidationScore,
};
pub use records::{read_records, read_records_path, RecordFormat};

/// Tolerance for `observed_max_accuracy == max(per_prompt_accuracies)`.
pub const MAX_MATCH_TOLERANCE: f64 = 1e-9;

/// One reported result: the best accuracy among `t` prompts evaluated on the
/// same `n`-example validation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub id: String,
    pub model: String,
    pub dataset: String,
    /// Optional grouping key (number of demonstrations).
    pub shots: Option<u32>,
    pub n: usize,
    pub labels: LabelScheme,
    pub t: u64,
    pub observed_max_accuracy: f64,
    pub per_prompt_accuracies: Option<Vec<f64>>,
    pub heldout_accuracy: Option<f64>,
    pub heldout_n: Option<usize>,
    /// Non-fatal findings from validation.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ExperimentRecord {
    /// Minimal record with no optional fields.
    pub fn new(
        id: impl Into<String>,
        n: usize,
        labels: LabelScheme,
        t: u64,
        observed_max_accuracy: f64,
    ) -> Self {
        ExperimentRecord {
            id: id.into(),
            model: String::new(),
            dataset: String::new(),
            shots: None,
            n,
            labels,
            t,
            observed_max_accuracy,
            per_prompt_accuracies: None,
            heldout_accuracy: None,
            heldout_n: None,
            warnings: Vec::new(),
        }
    }

    pub fn task_spec(&self) -> Result<TaskSpec> {
        TaskSpec::new(self.n, self.labels.clone(), self.t)
    }

    /// Checks every invariant of the record, returning warnings for
    /// non-fatal inconsistencies (a `t` that differs from the number of
    /// per-prompt accuracies; the explicit `t` is kept).
    pub fn validate(&self) -> Result<Vec<String>> {
        self.task_spec()?;
        accuracy_to_count(self.observed_max_accuracy, self.n)?;
        let mut warnings = Vec::new();
        if let Some(accs) = &self.per_prompt_accuracies {
            if accs.is_empty() {
                return Err(Error::domain(
                    "per_prompt_accuracies must be nonempty when present",
                ));
            }
            for &a in accs {
                accuracy_to_count(a, self.n)?;
            }
            let best = accs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if (best - self.observed_max_accuracy).abs() > MAX_MATCH_TOLERANCE {
                return Err(Error::domain(format!(
                    "observed_max_accuracy {} differs from max of per_prompt_accuracies {best}",
                    self.observed_max_accuracy
                )));
            }
            if accs.len() as u64 != self.t {
                warnings.push(format!(
                    "t = {} but {} per-prompt accuracies given; using t = {}",
                    self.t,
                    accs.len(),
                    self.t
                ));
            }
        }
        match (self.heldout_accuracy, self.heldout_n) {
            (Some(acc), Some(hn)) => {
                if hn < 1 {
                    return Err(Error::domain("heldout_n must be at least 1"));
                }
                accuracy_to_count(acc, hn)?;
            }
            (None, None) => {}
            _ => {
                return Err(Error::domain(
                    "heldout_accuracy and heldout_n must be given together",
                ))
            }
        }
        Ok(warnings)
    }
}

/// Where an observed accuracy falls relative to the two baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// Not above the standard baseline.
    BelowBoth,
    /// Above the standard baseline, not above the maximum baseline.
    Flip,
    /// Above both baselines.
    AboveBoth,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::BelowBoth => "below_both",
            Category::Flip => "flip",
            Category::AboveBoth => "above_both",
        }
    }

    /// Strict comparison against both baselines.
    pub fn of(observed: f64, expected_standard: f64, expected_max: f64) -> Self {
        if observed <= expected_standard {
            Category::BelowBoth
        } else if observed <= expected_max {
            Category::Flip
        } else {
            Category::AboveBoth
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditVerdict {
    pub id: String,
    pub model: String,
    pub dataset: String,
    pub shots: Option<u32>,
    pub n: usize,
    pub t: u64,
    pub observed: f64,
    pub category: Category,
    pub expected_standard: f64,
    pub expected_max: f64,
    pub p_standard: f64,
    pub p_max: f64,
    pub warnings: Vec<String>,
}

/// Compares one record's best accuracy with both baselines.
pub fn classify(record: &ExperimentRecord) -> Result<AuditVerdict> {
    let mut warnings = record.validate()?;
    for w in &record.warnings {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }
    let baseline = Baseline::new(&record.task_spec()?)?;
    let expected_standard = baseline.expected_standard();
    let expected_max = baseline.expected_max();
    let observed = record.observed_max_accuracy;
    Ok(AuditVerdict {
        id: record.id.clone(),
        model: record.model.clone(),
        dataset: record.dataset.clone(),
        shots: record.shots,
        n: record.n,
        t: record.t,
        observed,
        category: Category::of(observed, expected_standard, expected_max),
        expected_standard,
        expected_max,
        p_standard: baseline.p_value_standard(observed)?,
        p_max: baseline.p_value_max(observed)?,
        warnings,
    })
}

/// Classifies every record, in input order.
pub fn classify_all(records: &[ExperimentRecord], exec: Execution) -> Result<Vec<AuditVerdict>> {
    map_ordered(records, exec, classify).into_iter().collect()
}

/// Category counts with the share of above-standard results that flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CategoryCounts {
    pub below_both: usize,
    pub flip: usize,
    pub above_both: usize,
}

impl CategoryCounts {
    fn add(&mut self, c: Category) {
        match c {
            Category::BelowBoth => self.below_both += 1,
            Category::Flip => self.flip += 1,
            Category::AboveBoth => self.above_both += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.below_both + self.flip + self.above_both
    }

    pub fn above_standard(&self) -> usize {
        self.flip + self.above_both
    }

    /// `100 * flip / (flip + above_both)`, or 0 when nothing beat the
    /// standard baseline.
    pub fn flipped_percentage(&self) -> f64 {
        match self.above_standard() {
            0 => 0.0,
            d => 100.0 * self.flip as f64 / d as f64,
        }
    }

    /// True when the flipped percentage has an empty denominator.
    pub fn flipped_undefined(&self) -> bool {
        self.above_standard() == 0
    }
}

/// Grouping key carried on records.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GroupKey {
    pub model: String,
    pub dataset: String,
    pub shots: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    #[serde(flatten)]
    pub key: GroupKey,
    #[serde(flatten)]
    pub counts: CategoryCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub counts: CategoryCounts,
    pub flipped_percentage: f64,
    pub flipped_undefined: bool,
    /// Sorted by key.
    pub groups: Vec<GroupSummary>,
}

/// Counts verdicts overall and per (model, dataset, shots). The result
/// depends only on the multiset of verdicts.
pub fn aggregate(verdicts: &[AuditVerdict]) -> AuditSummary {
    let mut counts = CategoryCounts::default();
    let mut groups: BTreeMap<GroupKey, CategoryCounts> = BTreeMap::new();
    for v in verdicts {
        counts.add(v.category);
        groups
            .entry(GroupKey {
                model: v.model.clone(),
                dataset: v.dataset.clone(),
                shots: v.shots,
            })
            .or_default()
            .add(v.category);
    }
    AuditSummary {
        counts,
        flipped_percentage: counts.flipped_percentage(),
        flipped_undefined: counts.flipped_undefined(),
        groups: groups
            .into_iter()
            .map(|(key, counts)| GroupSummary { key, counts })
            .collect(),
    }
}

/// Expected best accuracy among `t` prompts drawn with replacement from the
/// observed per-prompt accuracies:
/// `sum_v v * (P(V <= v)^t - P(V < v)^t)` over distinct observed values.
pub fn empirical_expected_max(accuracies: &[f64], t: u64) -> Result<f64> {
    if accuracies.is_empty() {
        return Err(Error::domain(
            "empirical expected maximum needs at least one accuracy",
        ));
    }
    if t < 1 {
        return Err(Error::domain("t must be at least 1"));
    }
    if let Some(bad) = accuracies.iter().find(|a| !a.is_finite()) {
        return Err(Error::domain(format!(
            "accuracies must be finite (got {bad})"
        )));
    }
    let mut sorted = accuracies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let tf = t as f64;

    let mut acc = CompensatedSum::new();
    let mut below = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let lo = (below as f64 / total).powf(tf);
        let hi = if j == sorted.len() {
            1.0
        } else {
            (j as f64 / total).powf(tf)
        };
        acc.add(v * (hi - lo));
        below = j;
        i = j;
    }
    Ok(acc.value())
}

/// Empirical expected-maximum curve of a record's per-prompt accuracies next
/// to the maximum random baseline, for each `t` in `t_values`. The p-values
/// are tail probabilities of the empirical curve value, taken at the least
/// attainable accuracy not below it.
pub fn expected_max_curve(record: &ExperimentRecord, t_values: &[u64]) -> Result<Vec<CurveRow>> {
    record.validate()?;
    let accs = record.per_prompt_accuracies.as_deref().ok_or_else(|| {
        Error::domain(format!(
            "record `{}` has no per_prompt_accuracies",
            record.id
        ))
    })?;
    let spec = record.task_spec()?;
    t_values
        .iter()
        .map(|&t| {
            let baseline = Baseline::new(&spec.with_t(t)?)?;
            let empirical = empirical_expected_max(accs, t)?;
            let (p_standard, p_max) = baseline.tail_probabilities_at_least(empirical)?;
            Ok(CurveRow {
                id: record.id.clone(),
                t,
                empirical_expected_max: empirical,
                expected_max_baseline: baseline.expected_max(),
                p_standard,
                p_max,
            })
        })
        .collect()
}
