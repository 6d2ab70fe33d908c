//! The distribution of the best of `t` independent random classifiers, its
//! expectation (the maximum random baseline) and tail probabilities.
//!
//! With `F` the cdf of one random classifier's correct-guess count, the
//! maximum over `t` independent classifiers has cdf `F(k)^t`. Powers are
//! taken in log space, and `1 - F^t` through `expm1`, so that `t` in the tens
//! of thousands does not lose precision when `F` is close to one.

use serde::Serialize;

use crate::dist::{CountDistribution, LabelScheme};
use crate::error::{Error, Result};
use crate::special::CompensatedSum;

/// Relative tolerance (times `n`) within which `n * accuracy` must hit an integer.
pub const COUNT_TOLERANCE: f64 = 1e-6;

/// An evaluation setup: `n` examples, a label scheme and `t` evaluations of
/// the same set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSpec {
    n: usize,
    labels: LabelScheme,
    t: u64,
}

impl TaskSpec {
    pub fn new(n: usize, labels: LabelScheme, t: u64) -> Result<Self> {
        labels.validate(n)?;
        if t < 1 {
            return Err(Error::domain("t must be at least 1"));
        }
        Ok(TaskSpec { n, labels, t })
    }

    /// `n` examples with `m` labels each.
    pub fn uniform(n: usize, m: u32, t: u64) -> Result<Self> {
        Self::new(n, LabelScheme::uniform(m), t)
    }

    /// `n` examples each guessed correctly with probability `p`.
    pub fn binomial(n: usize, p: f64, t: u64) -> Result<Self> {
        Self::new(n, LabelScheme::probability(p), t)
    }

    /// One example per entry of `label_counts`.
    pub fn per_example(label_counts: &[u32], t: u64) -> Result<Self> {
        Self::new(
            label_counts.len(),
            LabelScheme::from_label_counts(label_counts)?,
            t,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &LabelScheme {
        &self.labels
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Same task with a different number of evaluations.
    pub fn with_t(&self, t: u64) -> Result<Self> {
        Self::new(self.n, self.labels.clone(), t)
    }

    /// Correct-guess count distribution of a single random classifier.
    pub fn base_distribution(&self) -> Result<CountDistribution> {
        self.labels.distribution(self.n)
    }

    /// Expected accuracy of a single random classifier.
    pub fn expected_standard(&self) -> f64 {
        self.labels
            .expected_standard(self.n)
            .expect("validated at construction")
    }
}

/// Distribution of the maximum correct-guess count over `t` classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxOrderDistribution {
    base: CountDistribution,
    t: u64,
    pmf_max: Vec<f64>,
    cdf_max: Vec<f64>,
}

impl MaxOrderDistribution {
    pub fn new(base: CountDistribution, t: u64) -> Result<Self> {
        if t < 1 {
            return Err(Error::domain("t must be at least 1"));
        }
        let n = base.n();
        let (pmf_max, cdf_max) = if t == 1 {
            (base.pmf().to_vec(), base.cdf().to_vec())
        } else {
            let tf = t as f64;
            let ln_cdf: Vec<f64> = (0..=n as i64).map(|k| base.ln_cdf_at(k)).collect();
            let cdf_max: Vec<f64> = ln_cdf.iter().map(|&l| (tf * l).exp()).collect();
            let mut pmf_max = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let below = if k == 0 {
                    f64::NEG_INFINITY
                } else {
                    ln_cdf[k - 1]
                };
                let mass = if base.cdf_at(k as i64 - 1) > 0.5 {
                    // both powers near one: difference of their complements
                    (tf * ln_cdf[k]).exp_m1() - (tf * below).exp_m1()
                } else {
                    cdf_max[k] - (tf * below).exp()
                };
                pmf_max.push(mass.max(0.0));
            }
            (pmf_max, cdf_max)
        };
        Ok(MaxOrderDistribution {
            base,
            t,
            pmf_max,
            cdf_max,
        })
    }

    pub fn base(&self) -> &CountDistribution {
        &self.base
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf_max
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf_max
    }

    /// `E[max count] / n` as `(1/n) * sum_k k * P(max = k)`.
    pub fn mean_accuracy(&self) -> f64 {
        let n = self.base.n() as f64;
        self.pmf_max
            .iter()
            .enumerate()
            .map(|(k, &x)| k as f64 * x)
            .collect::<CompensatedSum>()
            .value()
            / n
    }

    /// `E[max count] / n` as `(1/n) * sum_{k<n} (1 - F(k)^t)`.
    ///
    /// Every term is nonnegative and nondecreasing in `t`.
    pub fn tail_sum_accuracy(&self) -> f64 {
        let n = self.base.n();
        let tf = self.t as f64;
        (0..n as i64)
            .map(|k| -(tf * self.base.ln_cdf_at(k)).exp_m1())
            .collect::<CompensatedSum>()
            .value()
            / n as f64
    }

    /// `P(max count >= k)` for any integer `k`.
    pub fn survival_at(&self, k: i64) -> f64 {
        if self.t == 1 {
            return self.base.survival_at(k);
        }
        if k <= 0 {
            return 1.0;
        }
        let tail = -(self.t as f64 * self.base.ln_cdf_at(k - 1)).exp_m1();
        tail.clamp(self.base.survival_at(k), 1.0)
    }
}

/// Converts an accuracy on `n` examples to its correct-answer count.
///
/// Fails unless `n * accuracy` lies within `1e-6 * n` of an integer.
pub fn accuracy_to_count(accuracy: f64, n: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::domain(format!(
            "accuracy must lie in [0, 1] (got {accuracy})"
        )));
    }
    let scaled = accuracy * n as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > COUNT_TOLERANCE * n as f64 {
        return Err(Error::NonIntegralCount {
            accuracy,
            n,
            scaled,
        });
    }
    Ok(rounded as usize)
}

/// Smallest count whose accuracy is at least `accuracy`; counts within the
/// integral tolerance snap to that integer.
fn least_count_at_least(accuracy: f64, n: usize) -> Result<usize> {
    match accuracy_to_count(accuracy, n) {
        Ok(k) => Ok(k),
        Err(Error::NonIntegralCount { scaled, .. }) => Ok((scaled.ceil() as usize).min(n)),
        Err(e) => Err(e),
    }
}

/// Result of a threshold search over attainable accuracies `k / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Threshold {
    Attainable { count: usize, accuracy: f64 },
    Unattainable,
}

impl Threshold {
    pub fn accuracy(&self) -> Option<f64> {
        match self {
            Threshold::Attainable { accuracy, .. } => Some(*accuracy),
            Threshold::Unattainable => None,
        }
    }
}

/// Standard and maximum baselines for one task, with an optional observed
/// accuracy and its p-values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub spec: TaskSpec,
    pub expected_standard: f64,
    pub expected_max: f64,
    pub observed_accuracy: Option<f64>,
    pub p_standard: Option<f64>,
    pub p_max: Option<f64>,
}

/// Precomputed baselines for one [`TaskSpec`].
#[derive(Debug, Clone)]
pub struct Baseline {
    spec: TaskSpec,
    max: MaxOrderDistribution,
}

impl Baseline {
    pub fn new(spec: &TaskSpec) -> Result<Self> {
        let max = MaxOrderDistribution::new(spec.base_distribution()?, spec.t())?;
        Ok(Baseline {
            spec: spec.clone(),
            max,
        })
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn distribution(&self) -> &MaxOrderDistribution {
        &self.max
    }

    pub fn expected_standard(&self) -> f64 {
        self.spec.expected_standard()
    }

    pub fn expected_max(&self) -> f64 {
        if self.spec.t() == 1 {
            return self.expected_standard();
        }
        self.max.tail_sum_accuracy().max(self.expected_standard())
    }

    /// `P(acc(h) >= observed)` for one random classifier.
    pub fn p_value_standard(&self, observed: f64) -> Result<f64> {
        let k = accuracy_to_count(observed, self.spec.n())?;
        Ok(self.max.base().survival_at(k as i64))
    }

    /// `P(acc(h_max) >= observed)` for the best of `t` random classifiers.
    pub fn p_value_max(&self, observed: f64) -> Result<f64> {
        let k = accuracy_to_count(observed, self.spec.n())?;
        Ok(self.max.survival_at(k as i64))
    }

    /// Both tail probabilities at an arbitrary real accuracy, i.e. at the
    /// least attainable count not below it. Used for curve and grid values
    /// that need not be attainable accuracies.
    pub fn tail_probabilities_at_least(&self, accuracy: f64) -> Result<(f64, f64)> {
        let k = least_count_at_least(accuracy, self.spec.n())? as i64;
        Ok((self.max.base().survival_at(k), self.max.survival_at(k)))
    }

    pub fn min_accuracy_beating_max(&self) -> Threshold {
        let n = self.spec.n();
        let expected = self.expected_max();
        (0..=n)
            .find(|&k| k as f64 / n as f64 > expected)
            .map_or(Threshold::Unattainable, |count| Threshold::Attainable {
                count,
                accuracy: count as f64 / n as f64,
            })
    }

    pub fn min_accuracy_at_significance(&self, alpha: f64) -> Result<Threshold> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1) (got {alpha})"
            )));
        }
        let n = self.spec.n();
        Ok((0..=n)
            .find(|&k| self.max.survival_at(k as i64) < alpha)
            .map_or(Threshold::Unattainable, |count| Threshold::Attainable {
                count,
                accuracy: count as f64 / n as f64,
            }))
    }

    pub fn report(&self, observed: Option<f64>) -> Result<BaselineReport> {
        let (p_standard, p_max) = match observed {
            Some(acc) => (
                Some(self.p_value_standard(acc)?),
                Some(self.p_value_max(acc)?),
            ),
            None => (None, None),
        };
        Ok(BaselineReport {
            spec: self.spec.clone(),
            expected_standard: self.expected_standard(),
            expected_max: self.expected_max(),
            observed_accuracy: observed,
            p_standard,
            p_max,
        })
    }
}

pub fn max_order_distribution(base: CountDistribution, t: u64) -> Result<MaxOrderDistribution> {
    MaxOrderDistribution::new(base, t)
}

/// Expected maximum accuracy among `spec.t()` uniformly random classifiers.
pub fn expected_max_accuracy(spec: &TaskSpec) -> Result<f64> {
    Ok(Baseline::new(spec)?.expected_max())
}

pub fn p_value_standard(spec: &TaskSpec, observed: f64) -> Result<f64> {
    Baseline::new(spec)?.p_value_standard(observed)
}

pub fn p_value_max(spec: &TaskSpec, observed: f64) -> Result<f64> {
    Baseline::new(spec)?.p_value_max(observed)
}

/// Least attainable accuracy strictly above the maximum random baseline.
pub fn min_accuracy_beating_max(spec: &TaskSpec) -> Result<Threshold> {
    Ok(Baseline::new(spec)?.min_accuracy_beating_max())
}

/// Least attainable accuracy whose maximum-baseline p-value is below `alpha`.
pub fn min_accuracy_at_significance(spec: &TaskSpec, alpha: f64) -> Result<Threshold> {
    Baseline::new(spec)?.min_accuracy_at_significance(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::binomial_distribution;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn t_one_reduces_to_base() {
        let d = MaxOrderDistribution::new(binomial_distribution(2, 0.5).unwrap(), 1).unwrap();
        assert!(close(d.pmf(), &[0.25, 0.5, 0.25], 1e-15));
    }

    #[test]
    fn two_classifiers_enumerated() {
        // 4 joint outcomes of two single-example classifiers
        let d = MaxOrderDistribution::new(binomial_distribution(1, 0.5).unwrap(), 2).unwrap();
        assert!(close(d.pmf(), &[0.25, 0.75], 1e-15));
        // 16 joint outcomes of two two-example classifiers
        let d = MaxOrderDistribution::new(binomial_distribution(2, 0.5).unwrap(), 2).unwrap();
        assert!(close(d.pmf(), &[0.0625, 0.5, 0.4375], 1e-15));
        assert!(close(d.cdf(), &[0.0625, 0.5625, 1.0], 1e-15));
    }

    #[test]
    fn rejects_zero_t() {
        assert!(MaxOrderDistribution::new(binomial_distribution(2, 0.5).unwrap(), 0).is_err());
        assert!(TaskSpec::uniform(10, 2, 0).is_err());
    }

    #[test]
    fn expected_max_point_values() {
        let e = expected_max_accuracy(&TaskSpec::uniform(100, 2, 10).unwrap()).unwrap();
        assert!((e - 0.575).abs() <= 0.005);
        // exact rational evaluation of the closed form
        assert!((e - 0.576_779_806_681_750_3).abs() < 1e-12);

        let e = expected_max_accuracy(&TaskSpec::uniform(37, 4, 1).unwrap()).unwrap();
        assert!((e - 0.25).abs() < 1e-12);

        let e = expected_max_accuracy(&TaskSpec::uniform(2, 2, 2).unwrap()).unwrap();
        assert!((e - 0.6875).abs() < 1e-15);
    }

    #[test]
    fn both_expectation_forms_agree() {
        for &(n, m, t) in &[(10, 2, 3), (100, 4, 50), (57, 3, 1000)] {
            let b = Baseline::new(&TaskSpec::uniform(n, m, t).unwrap()).unwrap();
            let d = b.distribution();
            assert!((d.mean_accuracy() - d.tail_sum_accuracy()).abs() < 1e-12);
        }
    }

    #[test]
    fn p_values_small_cases() {
        let spec = TaskSpec::uniform(2, 2, 1).unwrap();
        assert_eq!(p_value_standard(&spec, 0.0).unwrap(), 1.0);
        assert!((p_value_standard(&spec, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((p_value_standard(&spec, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!((p_value_max(&spec, 1.0).unwrap() - 0.25).abs() < 1e-15);

        let spec = TaskSpec::uniform(2, 2, 2).unwrap();
        assert!((p_value_max(&spec, 1.0).unwrap() - 0.4375).abs() < 1e-15);

        let spec = TaskSpec::uniform(100, 2, 7).unwrap();
        assert_eq!(p_value_max(&spec, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn p_values_reject_non_integral_accuracy() {
        let spec = TaskSpec::uniform(100, 2, 3).unwrap();
        assert!(matches!(
            p_value_standard(&spec, 0.503),
            Err(Error::NonIntegralCount { .. })
        ));
        assert!(p_value_max(&spec, 1.2).is_err());
        assert!(p_value_max(&spec, -0.1).is_err());
        // representation error well inside tolerance
        assert!(p_value_max(&spec, 0.1 + 0.2).is_ok());
    }

    #[test]
    fn p_values_against_high_precision_reference() {
        // 50-digit evaluations of 1 - F(k-1) and 1 - F(k-1)^t
        let b = Baseline::new(&TaskSpec::uniform(100, 2, 10).unwrap()).unwrap();
        assert!((b.p_value_standard(0.56).unwrap() - 0.135_626_512_036_917_37).abs() < 1e-13);
        assert!((b.p_value_max(0.56).unwrap() - 0.767_183_166_870_443_3).abs() < 1e-13);
        let b = Baseline::new(&TaskSpec::uniform(100, 2, 200).unwrap()).unwrap();
        assert!((b.p_value_standard(0.6).unwrap() - 0.028_443_966_820_490_396).abs() < 1e-13);
        assert!((b.p_value_max(0.6).unwrap() - 0.996_884_192_625_028_6).abs() < 1e-13);
    }

    #[test]
    fn beating_threshold_examples() {
        let th = |n, t| min_accuracy_beating_max(&TaskSpec::uniform(n, 2, t).unwrap()).unwrap();
        assert_eq!(th(100, 1).accuracy(), Some(0.51));
        assert_eq!(th(100, 10).accuracy(), Some(0.58));
        assert_eq!(th(2, 2).accuracy(), Some(1.0));
        let certain = TaskSpec::binomial(5, 1.0, 3).unwrap();
        assert_eq!(
            min_accuracy_beating_max(&certain).unwrap(),
            Threshold::Unattainable
        );
    }

    #[test]
    fn significance_threshold_examples() {
        let th = |n, t, alpha| {
            min_accuracy_at_significance(&TaskSpec::uniform(n, 2, t).unwrap(), alpha).unwrap()
        };
        assert_eq!(
            th(1, 1, 0.6),
            Threshold::Attainable {
                count: 1,
                accuracy: 1.0
            }
        );
        assert_eq!(th(2, 1, 0.2), Threshold::Unattainable);
        // first count with 1 - F(k-1)^10 < 0.05 in a 50-digit scan is k = 64
        assert_eq!(
            th(100, 10, 0.05),
            Threshold::Attainable {
                count: 64,
                accuracy: 0.64
            }
        );
        let spec = TaskSpec::uniform(4, 2, 1).unwrap();
        assert!(min_accuracy_at_significance(&spec, 0.0).is_err());
        assert!(min_accuracy_at_significance(&spec, 1.0).is_err());
    }

    #[test]
    fn report_orders_p_values() {
        let b = Baseline::new(&TaskSpec::uniform(50, 3, 20).unwrap()).unwrap();
        let r = b.report(Some(0.5)).unwrap();
        assert!(r.expected_max > r.expected_standard);
        assert!(r.p_standard.unwrap() <= r.p_max.unwrap());
        let r = b.report(None).unwrap();
        assert!(r.p_max.is_none());
    }

    #[test]
    fn large_t_stays_finite() {
        let b = Baseline::new(&TaskSpec::uniform(1000, 2, 10_000).unwrap()).unwrap();
        let e = b.expected_max();
        // 50-digit evaluation of the closed form
        assert!((e - 0.560_827_611_488_551_8).abs() < 1e-10);
        assert!(e < 0.575);
    }

    #[test]
    fn tails_at_real_accuracy() {
        let b = Baseline::new(&TaskSpec::uniform(2, 2, 2).unwrap()).unwrap();
        // 0.6 on two examples needs both correct
        let (s, m) = b.tail_probabilities_at_least(0.6).unwrap();
        assert!((s - 0.25).abs() < 1e-15 && (m - 0.4375).abs() < 1e-15);
        let (s, _) = b.tail_probabilities_at_least(0.5).unwrap();
        assert!((s - 0.75).abs() < 1e-15);
    }

    #[test]
    fn per_example_spec() {
        let spec = TaskSpec::per_example(&[2, 3, 4], 5).unwrap();
        let e = expected_max_accuracy(&spec).unwrap();
        // exact rational evaluation from the 8-outcome enumeration
        assert!((e - 0.670_796_293_617_112_5).abs() < 1e-12);
    }
}
