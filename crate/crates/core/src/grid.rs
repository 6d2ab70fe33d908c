//! Parameter sweeps over dataset size `n` and evaluation count `t`.

use std::str::FromStr;

use serde::Serialize;

use crate::dist::LabelScheme;
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::orderstat::{Baseline, TaskSpec};

/// Values along one grid axis, sorted ascending without duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis(Vec<u64>);

impl Axis {
    pub fn new(mut values: Vec<u64>) -> Result<Self> {
        values.sort_unstable();
        values.dedup();
        if values.is_empty() {
            return Err(Error::domain("grid axis must be nonempty"));
        }
        if values[0] == 0 {
            return Err(Error::domain("grid axis values must be positive"));
        }
        Ok(Axis(values))
    }

    /// `count` points spaced geometrically from `start` to `end`, rounded to
    /// integers.
    pub fn log_range(start: u64, end: u64, count: usize) -> Result<Self> {
        if start == 0 || end < start || count == 0 {
            return Err(Error::domain(format!(
                "log range needs 0 < start <= end and count > 0 (got {start}:{end}:{count})"
            )));
        }
        if count == 1 {
            return Self::new(vec![start]);
        }
        let (lo, hi) = ((start as f64).ln(), (end as f64).ln());
        let step = (hi - lo) / (count - 1) as f64;
        let mut values: Vec<u64> = (0..count)
            .map(|i| (lo + step * i as f64).exp().round() as u64)
            .collect();
        values[0] = start;
        values[count - 1] = end;
        Self::new(values)
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// Either a comma list (`10,100,1000`) or `log:START:END:COUNT`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::domain(format!("invalid axis `{s}`: {what}"));
        if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected log:START:END:COUNT"));
            }
            let start = parts[0].trim().parse().map_err(|_| bad("START"))?;
            let end = parts[1].trim().parse().map_err(|_| bad("END"))?;
            let count = parts[2].trim().parse().map_err(|_| bad("COUNT"))?;
            return Self::log_range(start, end, count);
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<u64>().map_err(|_| bad(v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}

/// The value computed in every grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    ExpectedMax,
    /// `P(best of t >= accuracy)` at the least attainable count not below it.
    PValueAt(f64),
    /// Least attainable accuracy with maximum-baseline p-value below alpha.
    ThresholdAt(f64),
}

impl Quantity {
    pub fn column_name(&self) -> &'static str {
        match self {
            Quantity::ExpectedMax => "expected_max",
            Quantity::PValueAt(_) => "p_max",
            Quantity::ThresholdAt(_) => "threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRequest {
    pub n_axis: Axis,
    pub t_axis: Axis,
    /// Uniform or constant-probability schemes apply to every `n`; a
    /// per-example scheme fixes `n` to its length.
    pub labels: LabelScheme,
    pub quantity: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub n: u64,
    pub t: u64,
    pub expected_standard: f64,
    /// `None` when a threshold is unattainable.
    pub value: Option<f64>,
}

impl GridRequest {
    fn validate(&self) -> Result<Vec<TaskSpec>> {
        match self.quantity {
            Quantity::PValueAt(acc) if !(0.0..=1.0).contains(&acc) => {
                return Err(Error::domain(format!(
                    "accuracy must lie in [0, 1] (got {acc})"
                )))
            }
            Quantity::ThresholdAt(alpha) if !(alpha > 0.0 && alpha < 1.0) => {
                return Err(Error::domain(format!(
                    "alpha must lie in (0, 1) (got {alpha})"
                )))
            }
            _ => {}
        }
        let t0 = self.t_axis.values()[0];
        self.n_axis
            .values()
            .iter()
            .map(|&n| TaskSpec::new(n as usize, self.labels.clone(), t0))
            .collect()
    }
}

/// Evaluates every `(n, t)` cell, n-major in ascending order. All cells are
/// validated before any is computed.
pub fn compute_grid(request: &GridRequest, exec: Execution) -> Result<Vec<GridCell>> {
    let specs = request.validate()?;
    let t_values = request.t_axis.values();
    let rows = map_ordered(&specs, exec, |spec| -> Result<Vec<GridCell>> {
        let standard = spec.expected_standard();
        t_values
            .iter()
            .map(|&t| {
                let baseline = Baseline::new(&spec.with_t(t)?)?;
                let value = match request.quantity {
                    Quantity::ExpectedMax => Some(baseline.expected_max()),
                    Quantity::PValueAt(acc) => Some(baseline.tail_probabilities_at_least(acc)?.1),
                    Quantity::ThresholdAt(alpha) => {
                        baseline.min_accuracy_at_significance(alpha)?.accuracy()
                    }
                };
                Ok(GridCell {
                    n: spec.n() as u64,
                    t,
                    expected_standard: standard,
                    value,
                })
            })
            .collect()
    });
    let mut cells = Vec::with_capacity(specs.len() * t_values.len());
    for row in rows {
        cells.extend(row?);
    }
    Ok(cells)
}
