//! Exact distributions of the number of correct guesses made by a classifier
//! that answers every example uniformly at random.
//!
//! Two families are covered: the binomial, when every example has the same
//! number of labels, and the Poisson binomial, when the number of labels (and
//! therefore the per-example success probability) varies across examples.
//!
//! Every [`CountDistribution`] carries its pmf, log-pmf, cdf and upper tail.
//! The cdf is accumulated with compensated summation from the pmf; the upper
//! tail is accumulated the same way from the other end so that tail
//! probabilities far below machine epsilon keep full relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_choose, regularized_incomplete_beta, CompensatedSum};

/// Largest example count accepted for a per-example (Poisson binomial) scheme.
///
/// The convolution runs in plain double precision without rescaling; beyond
/// this size accumulated rounding is no longer characterised by the tests.
pub const MAX_POISSON_BINOMIAL_N: usize = 20_000;

/// How labels are distributed over the examples of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// Every example has `m >= 2` equally likely labels, so `p = 1/m`.
    Uniform { m: u32 },
    /// Every example is guessed correctly with the same probability `p`.
    ///
    /// Generalises `Uniform` to success probabilities that are not a unit
    /// fraction; `p = 0` is allowed here.
    Probability { p: f64 },
    /// Example `i` is guessed correctly with probability `p_i` in `(0, 1]`.
    PerExample { probabilities: Vec<f64> },
}

impl LabelScheme {
    pub fn uniform(m: u32) -> Self {
        LabelScheme::Uniform { m }
    }

    pub fn probability(p: f64) -> Self {
        LabelScheme::Probability { p }
    }

    /// Per-example scheme from label counts, `p_i = 1 / m_i`.
    pub fn from_label_counts(counts: &[u32]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("per-example label counts must be nonempty"));
        }
        if let Some(&bad) = counts.iter().find(|&&m| m < 1) {
            return Err(Error::domain(format!(
                "label count must be >= 1 (got {bad})"
            )));
        }
        Ok(LabelScheme::PerExample {
            probabilities: counts.iter().map(|&m| 1.0 / f64::from(m)).collect(),
        })
    }

    /// Success probability shared by all examples, if there is one.
    pub fn common_probability(&self) -> Option<f64> {
        match self {
            LabelScheme::Uniform { m } => Some(1.0 / f64::from(*m)),
            LabelScheme::Probability { p } => Some(*p),
            LabelScheme::PerExample { .. } => None,
        }
    }

    /// Checks the scheme against a task of `n` examples.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 1 {
            return Err(Error::domain("n must be at least 1"));
        }
        match self {
            LabelScheme::Uniform { m } if *m < 2 => Err(Error::domain(format!(
                "number of labels m must be >= 2 (got {m})"
            ))),
            LabelScheme::Uniform { .. } => Ok(()),
            LabelScheme::Probability { p } => check_probability(*p),
            LabelScheme::PerExample { probabilities } => {
                if probabilities.len() != n {
                    return Err(Error::domain(format!(
                        "per-example scheme has {} probabilities but n = {n}",
                        probabilities.len()
                    )));
                }
                check_per_example(probabilities)
            }
        }
    }

    /// Expected accuracy of a single uniformly random classifier.
    pub fn expected_standard(&self, n: usize) -> Result<f64> {
        self.validate(n)?;
        Ok(match self {
            LabelScheme::PerExample { probabilities } => {
                probabilities
                    .iter()
                    .copied()
                    .collect::<CompensatedSum>()
                    .value()
                    / n as f64
            }
            other => other.common_probability().expect("constant scheme"),
        })
    }

    /// Distribution of the correct-guess count on `n` examples.
    pub fn distribution(&self, n: usize) -> Result<CountDistribution> {
        self.validate(n)?;
        match self {
            LabelScheme::PerExample { probabilities } => {
                poisson_binomial_distribution(probabilities)
            }
            other => binomial_distribution(n, other.common_probability().expect("constant scheme")),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "probability must lie in [0, 1] (got {p})"
        )))
    }
}

fn check_per_example(probabilities: &[f64]) -> Result<()> {
    if probabilities.is_empty() {
        return Err(Error::domain("per-example probabilities must be nonempty"));
    }
    if probabilities.len() > MAX_POISSON_BINOMIAL_N {
        return Err(Error::TooManyExamples {
            n: probabilities.len(),
            limit: MAX_POISSON_BINOMIAL_N,
        });
    }
    for (i, &p) in probabilities.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!(
                "per-example probability {i} must lie in (0, 1] (got {p})"
            )));
        }
    }
    Ok(())
}

/// Exact distribution over correct-guess counts `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    pmf: Vec<f64>,
    log_pmf: Vec<f64>,
    cdf: Vec<f64>,
    // survival[k] = P(X >= k), length n + 2 with survival[n + 1] = 0
    survival: Vec<f64>,
}

impl CountDistribution {
    fn from_parts(mut pmf: Vec<f64>, mut log_pmf: Vec<f64>) -> Self {
        let n = pmf.len() - 1;

        // log-gamma rounding is mostly common to all terms; renormalising
        // removes it and makes cdf[n] = 1 to rounding
        let total = pmf.iter().copied().collect::<CompensatedSum>().value();
        if total != 1.0 {
            let ln_total = total.ln();
            pmf.iter_mut().for_each(|x| *x /= total);
            log_pmf.iter_mut().for_each(|l| *l -= ln_total);
        }

        let mut acc = CompensatedSum::new();
        let mut cdf = Vec::with_capacity(n + 1);
        let mut prev = 0.0_f64;
        for &x in &pmf {
            acc.add(x);
            let v = acc.value().clamp(prev, 1.0);
            cdf.push(v);
            prev = v;
        }
        cdf[n] = 1.0;

        let mut acc = CompensatedSum::new();
        let mut survival = vec![0.0; n + 2];
        let mut prev = 0.0_f64;
        for k in (0..=n).rev() {
            acc.add(pmf[k]);
            let v = acc.value().clamp(prev, 1.0);
            survival[k] = v;
            prev = v;
        }
        survival[0] = 1.0;

        CountDistribution {
            pmf,
            log_pmf,
            cdf,
            survival,
        }
    }

    fn from_pmf(pmf: Vec<f64>) -> Self {
        let log_pmf = pmf.iter().map(|&x| x.ln()).collect();
        Self::from_parts(pmf, log_pmf)
    }

    /// Number of examples.
    pub fn n(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Natural log of the pmf; `-inf` where the mass is exactly zero.
    pub fn log_pmf(&self) -> &[f64] {
        &self.log_pmf
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// `F(k) = P(X <= k)` for any integer `k`, with `F(k) = 0` for `k < 0`.
    pub fn cdf_at(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else if k as usize >= self.n() {
            1.0
        } else {
            self.cdf[k as usize]
        }
    }

    /// `P(X >= k)` for any integer `k`.
    pub fn survival_at(&self, k: i64) -> f64 {
        if k <= 0 {
            1.0
        } else if k as usize > self.n() {
            0.0
        } else {
            self.survival[k as usize]
        }
    }

    /// `ln F(k)`, taken through the upper tail when `F(k)` is close to one.
    pub fn ln_cdf_at(&self, k: i64) -> f64 {
        let f = self.cdf_at(k);
        if f > 0.5 {
            (-self.survival_at(k + 1)).ln_1p()
        } else {
            f.ln()
        }
    }

    /// Mean number of correct guesses.
    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, &x)| k as f64 * x)
            .collect::<CompensatedSum>()
            .value()
    }

    /// Smallest count `k` with `F(k) > u`, for `u` in `[0, 1)`.
    pub fn quantile_count(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u).min(self.n())
    }
}

/// `Binomial(n, p)` count distribution, with the pmf built in log space.
pub fn binomial_distribution(n: usize, p: f64) -> Result<CountDistribution> {
    if n < 1 {
        return Err(Error::domain("n must be at least 1"));
    }
    check_probability(p)?;

    let log_pmf: Vec<f64> = if p == 0.0 || p == 1.0 {
        let hit = if p == 0.0 { 0 } else { n };
        (0..=n)
            .map(|k| if k == hit { 0.0 } else { f64::NEG_INFINITY })
            .collect()
    } else {
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        (0..=n)
            .map(|k| ln_choose(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q)
            .collect()
    };
    let pmf = log_pmf.iter().map(|&l| l.exp()).collect();
    Ok(CountDistribution::from_parts(pmf, log_pmf))
}

/// `F(k)` for `Binomial(n, p)` through `I_{1-p}(n - k, k + 1)`.
///
/// Independent of the summation path used by [`CountDistribution`]; kept as a
/// cross-check.
pub fn binomial_cdf_beta(n: usize, p: f64, k: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("n must be at least 1"));
    }
    check_probability(p)?;
    if k > n {
        return Err(Error::domain(format!(
            "count k = {k} lies outside [0, {n}]"
        )));
    }
    if k == n {
        return Ok(1.0);
    }
    regularized_incomplete_beta((n - k) as f64, k as f64 + 1.0, 1.0 - p)
}

/// Poisson binomial distribution of the number of successes among
/// independent trials with success probabilities `probabilities`.
///
/// Built by adding one trial at a time: `O(n^2)` time, `O(n)` space.
pub fn poisson_binomial_distribution(probabilities: &[f64]) -> Result<CountDistribution> {
    check_per_example(probabilities)?;
    let n = probabilities.len();
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 1.0;
    for (i, &p) in probabilities.iter().enumerate() {
        let q = 1.0 - p;
        for k in (1..=i + 1).rev() {
            pmf[k] = pmf[k] * q + pmf[k - 1] * p;
        }
        pmf[0] *= q;
    }
    Ok(CountDistribution::from_pmf(pmf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn fair_coin_two_trials() {
        let d = binomial_distribution(2, 0.5).unwrap();
        assert!(close(d.pmf(), &[0.25, 0.5, 0.25], 1e-15));
        assert!(close(d.cdf(), &[0.25, 0.75, 1.0], 1e-15));
    }

    #[test]
    fn certain_success() {
        let d = binomial_distribution(5, 1.0).unwrap();
        assert_eq!(d.pmf(), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.log_pmf()[5], 0.0);
        assert_eq!(d.log_pmf()[0], f64::NEG_INFINITY);
        assert_eq!(d.cdf()[4], 0.0);
        assert_eq!(d.cdf()[5], 1.0);
    }

    #[test]
    fn certain_failure() {
        let d = binomial_distribution(3, 0.0).unwrap();
        assert_eq!(d.pmf(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.mean(), 0.0);
    }

    #[test]
    fn pmf_matches_exact_rational_value() {
        // 120 * 2^7 / 3^10, evaluated exactly as a rational
        let exact = 120.0 * 128.0 / 59049.0;
        let d = binomial_distribution(10, 1.0 / 3.0).unwrap();
        assert!((d.pmf()[3] - exact).abs() < 1e-12);
        assert!((d.pmf()[3] - 0.260_122_948_737_489_2).abs() < 1e-12);
    }

    #[test]
    fn binomial_rejects_bad_arguments() {
        assert!(binomial_distribution(0, 0.5).is_err());
        assert!(binomial_distribution(3, -0.1).is_err());
        assert!(binomial_distribution(3, 1.1).is_err());
        assert!(binomial_distribution(3, f64::NAN).is_err());
    }

    #[test]
    fn beta_cdf_small_cases() {
        assert!((binomial_cdf_beta(2, 0.5, 1).unwrap() - 0.75).abs() < 1e-15);
        assert!((binomial_cdf_beta(1, 0.25, 0).unwrap() - 0.75).abs() < 1e-15);
        assert!(binomial_cdf_beta(3, 0.5, 4).is_err());
        assert_eq!(binomial_cdf_beta(3, 0.5, 3).unwrap(), 1.0);
    }

    #[test]
    fn beta_cdf_matches_summation() {
        let d = binomial_distribution(20, 0.3).unwrap();
        let via_beta = binomial_cdf_beta(20, 0.3, 6).unwrap();
        assert!((d.cdf()[6] - via_beta).abs() < 1e-10);
        // exact rational sum of the first seven terms
        assert!((via_beta - 0.608_009_812_200_924).abs() < 1e-12);
    }

    #[test]
    fn beta_cdf_degenerate_probabilities() {
        assert_eq!(binomial_cdf_beta(4, 0.0, 0).unwrap(), 1.0);
        assert_eq!(binomial_cdf_beta(4, 1.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn poisson_binomial_small_cases() {
        let d = poisson_binomial_distribution(&[0.5, 0.5]).unwrap();
        assert!(close(d.pmf(), &[0.25, 0.5, 0.25], 1e-15));
        let d = poisson_binomial_distribution(&[1.0, 0.5]).unwrap();
        assert!(close(d.pmf(), &[0.0, 0.5, 0.5], 1e-15));
        // weights of the 8 outcomes of (1/2, 1/3, 1/4), summed by count
        let d = poisson_binomial_distribution(&[0.5, 1.0 / 3.0, 0.25]).unwrap();
        assert!(close(
            d.pmf(),
            &[0.25, 11.0 / 24.0, 0.25, 1.0 / 24.0],
            1e-12
        ));
    }

    #[test]
    fn poisson_binomial_rejects_bad_probabilities() {
        assert!(poisson_binomial_distribution(&[]).is_err());
        assert!(poisson_binomial_distribution(&[0.5, 0.0]).is_err());
        assert!(poisson_binomial_distribution(&[1.5]).is_err());
        let too_many = vec![0.5; MAX_POISSON_BINOMIAL_N + 1];
        assert!(poisson_binomial_distribution(&too_many).is_err());
    }

    #[test]
    fn label_scheme_validation() {
        assert!(LabelScheme::uniform(1).validate(10).is_err());
        assert!(LabelScheme::uniform(2).validate(0).is_err());
        assert!(LabelScheme::probability(0.0).validate(3).is_ok());
        let pe = LabelScheme::from_label_counts(&[2, 3, 3, 5]).unwrap();
        assert!(pe.validate(3).is_err());
        assert!(pe.validate(4).is_ok());
        match pe {
            LabelScheme::PerExample { probabilities } => {
                assert_eq!(probabilities, vec![0.5, 1.0 / 3.0, 1.0 / 3.0, 0.2])
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn expected_standard_per_scheme() {
        assert_eq!(LabelScheme::uniform(4).expected_standard(37).unwrap(), 0.25);
        let pe = LabelScheme::from_label_counts(&[2, 4]).unwrap();
        assert!((pe.expected_standard(2).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn tail_accessors() {
        let d = binomial_distribution(4, 0.5).unwrap();
        assert_eq!(d.cdf_at(-1), 0.0);
        assert_eq!(d.cdf_at(9), 1.0);
        assert_eq!(d.survival_at(0), 1.0);
        assert_eq!(d.survival_at(5), 0.0);
        assert!((d.survival_at(4) - 1.0 / 16.0).abs() < 1e-16);
        assert!((d.ln_cdf_at(3) - (15.0f64 / 16.0).ln()).abs() < 1e-15);
        assert_eq!(d.ln_cdf_at(-1), f64::NEG_INFINITY);
    }

    #[test]
    fn upper_tail_keeps_relative_precision() {
        let d = binomial_distribution(200, 0.5).unwrap();
        let want = 0.5f64.powi(200);
        assert!(((d.survival_at(200) - want) / want).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = binomial_distribution(2, 0.5).unwrap();
        assert_eq!(d.quantile_count(0.0), 0);
        assert_eq!(d.quantile_count(0.2499), 0);
        assert_eq!(d.quantile_count(0.25), 1);
        assert_eq!(d.quantile_count(0.7499), 1);
        assert_eq!(d.quantile_count(0.75), 2);
        assert_eq!(d.quantile_count(0.999_999), 2);
    }
}
