//! Random baselines for classifiers evaluated on small, reused validation sets.
//!
//! The standard random baseline is the expected accuracy of one classifier
//! that guesses uniformly at random. When the best of `t` classifiers (prompts,
//! hyperparameter settings) is reported, the fair comparison is the expected
//! maximum accuracy of `t` such classifiers. This crate computes both, with
//! exact tail probabilities, threshold solvers, Monte Carlo and enumeration
//! oracles, and an auditing pipeline for reported results.
//!
//! ```
//! use maxrand::{expected_max_accuracy, TaskSpec};
//!
//! let spec = TaskSpec::uniform(100, 2, 10).unwrap();
//! let baseline = expected_max_accuracy(&spec).unwrap();
//! assert!((baseline - 0.5768).abs() < 1e-4);
//! ```

pub mod audit;
pub mod dist;
pub mod error;
pub mod exec;
pub mod format;
pub mod grid;
pub mod oracle;
pub mod orderstat;
pub mod special;

pub use dist::{
    binomial_cdf_beta, binomial_distribution, poisson_binomial_distribution, CountDistribution,
    LabelScheme,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use orderstat::{
    accuracy_to_count, expected_max_accuracy, max_order_distribution, min_accuracy_at_significance,
    min_accuracy_beating_max, p_value_max, p_value_standard, Baseline, BaselineReport,
    MaxOrderDistribution, TaskSpec, Threshold,
};
