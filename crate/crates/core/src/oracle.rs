//! Independent oracles for the closed forms: seeded Monte Carlo simulation of
//! `t` random classifiers, and exhaustive enumeration of the joint outcomes.
//!
//! Simulation draws each classifier's correct-guess count by inverse-cdf
//! lookup on the base distribution. Trials are split into fixed-size chunks;
//! chunk `i` uses the base xoshiro256++ stream advanced by `i` jumps of
//! `2^128` draws, and per-chunk sums are exact integers. Estimates are
//! therefore bit-identical across runs, thread counts and execution modes.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::dist::CountDistribution;
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::orderstat::{accuracy_to_count, TaskSpec};

/// Identity of the generator, recorded alongside every estimate.
pub const GENERATOR: &str = "xoshiro256++/splitmix64-seed/jump-per-8192-trials";

/// Trials per independently seeded chunk.
pub const CHUNK_TRIALS: u64 = 8192;

/// Upper bound on the number of tuples [`enumerate_max_pmf`] will visit.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub spec: TaskSpec,
    pub trials: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(spec: TaskSpec, trials: u64, seed: u64) -> Result<Self> {
        if trials < 1 {
            return Err(Error::domain("trials must be at least 1"));
        }
        Ok(SimulationConfig { spec, trials, seed })
    }
}

/// A Monte Carlo mean with its standard error.
///
/// `std_error` is NaN when only one trial was run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
    pub generator: &'static str,
}

impl Estimate {
    /// Distance from `value` in units of standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.estimate - value).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    sum: u128,
    sum_sq: u128,
    hits: u64,
}

#[inline]
fn unit_f64(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn run_chunks(
    config: &SimulationConfig,
    exec: Execution,
    threshold: usize,
) -> Result<(ChunkStats, CountDistribution)> {
    let base = config.spec.base_distribution()?;
    let t = config.spec.t();
    let n_chunks = config.trials.div_ceil(CHUNK_TRIALS);

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let mut chunks = Vec::with_capacity(n_chunks as usize);
    for i in 0..n_chunks {
        let len = CHUNK_TRIALS.min(config.trials - i * CHUNK_TRIALS);
        chunks.push((rng.clone(), len));
        rng.jump();
    }

    let per_chunk = map_ordered(&chunks, exec, |(rng, len)| {
        let mut rng = rng.clone();
        let mut stats = ChunkStats::default();
        for _ in 0..*len {
            let mut best = 0usize;
            for _ in 0..t {
                best = best.max(base.quantile_count(unit_f64(&mut rng)));
            }
            stats.sum += best as u128;
            stats.sum_sq += (best * best) as u128;
            stats.hits += u64::from(best >= threshold);
        }
        stats
    });

    let total = per_chunk
        .iter()
        .fold(ChunkStats::default(), |a, b| ChunkStats {
            sum: a.sum + b.sum,
            sum_sq: a.sum_sq + b.sum_sq,
            hits: a.hits + b.hits,
        });
    Ok((total, base))
}

/// Monte Carlo estimate of the expected maximum accuracy.
pub fn simulate_expected_max(config: &SimulationConfig) -> Result<Estimate> {
    simulate_expected_max_with(config, Execution::default())
}

pub fn simulate_expected_max_with(config: &SimulationConfig, exec: Execution) -> Result<Estimate> {
    let (stats, base) = run_chunks(config, exec, usize::MAX)?;
    let trials = config.trials as u128;
    let n = base.n() as f64;
    let mean = stats.sum as f64 / trials as f64;
    let std_error = if trials < 2 {
        f64::NAN
    } else {
        // exact integer numerator of the unbiased sample variance
        let numer = trials * stats.sum_sq - stats.sum * stats.sum;
        let var = numer as f64 / (trials * (trials - 1)) as f64;
        (var / trials as f64).sqrt()
    };
    Ok(Estimate {
        estimate: mean / n,
        std_error: std_error / n,
        trials: config.trials,
        seed: config.seed,
        generator: GENERATOR,
    })
}

/// Monte Carlo estimate of `P(max accuracy >= observed)`.
pub fn simulate_tail_max(config: &SimulationConfig, observed: f64) -> Result<Estimate> {
    simulate_tail_max_with(config, observed, Execution::default())
}

pub fn simulate_tail_max_with(
    config: &SimulationConfig,
    observed: f64,
    exec: Execution,
) -> Result<Estimate> {
    let k = accuracy_to_count(observed, config.spec.n())?;
    let (stats, _) = run_chunks(config, exec, k)?;
    let trials = config.trials as f64;
    let p = stats.hits as f64 / trials;
    let std_error = if config.trials < 2 {
        f64::NAN
    } else {
        (p * (1.0 - p) / (trials - 1.0)).sqrt()
    };
    Ok(Estimate {
        estimate: p,
        std_error,
        trials: config.trials,
        seed: config.seed,
        generator: GENERATOR,
    })
}

/// Exact pmf of the maximum count, by visiting every `t`-tuple of counts
/// weighted by the product of their base probabilities.
pub fn enumerate_max_pmf(spec: &TaskSpec) -> Result<Vec<f64>> {
    let n = spec.n();
    let t = spec.t();
    let cells = ((n + 1) as f64).powf(t as f64);
    if cells > ENUMERATION_LIMIT as f64 {
        return Err(Error::Infeasible {
            cells,
            limit: ENUMERATION_LIMIT,
        });
    }
    let base = spec.base_distribution()?;
    let pmf = base.pmf();
    let t = t as usize;

    let mut out = vec![0.0; n + 1];
    let mut tuple = vec![0usize; t];
    loop {
        let weight: f64 = tuple.iter().map(|&k| pmf[k]).product();
        let best = *tuple.iter().max().expect("t >= 1");
        out[best] += weight;

        // odometer increment
        let mut pos = 0;
        loop {
            if pos == t {
                return Ok(out);
            }
            tuple[pos] += 1;
            if tuple[pos] <= n {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}
