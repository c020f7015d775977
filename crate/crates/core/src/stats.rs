//! Success rate, Koza computational effort and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of successful runs.
pub fn success_rate(successes: impl IntoIterator<Item = bool>) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for s in successes {
        total += 1;
        hits += usize::from(s);
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Number of independent runs needed to reach success probability `z` when
/// a single run succeeds with probability `p`.
pub fn runs_required(z: f64, p: f64) -> Option<u64> {
    if p <= 0.0 {
        None
    } else if p >= 1.0 {
        Some(1)
    } else {
        Some((((1.0 - z).ln() / (1.0 - p).ln()).ceil() as u64).max(1))
    }
}

/// Individuals to process: `M * R * i`.
pub fn individuals_to_process(population: u64, runs: u64, generation: u64) -> u64 {
    population * runs * generation
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortPoint {
    pub generation: usize,
    /// Cumulative probability of success by this generation.
    pub probability: f64,
    pub runs_required: Option<u64>,
    pub individuals: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effort {
    pub curve: Vec<EffortPoint>,
    pub minimum: u64,
    pub best_generation: usize,
}

/// Koza effort from the generation at which each run first succeeded.
///
/// Generations are counted from 1; a success in the initial population is
/// credited to generation 1.
pub fn koza_effort(
    first_success: &[Option<usize>],
    population: u64,
    generations: usize,
    z: f64,
) -> Result<Effort> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::InvalidParameter(format!("z = {z} must lie in (0, 1)")));
    }
    if first_success.iter().all(Option::is_none) {
        return Err(Error::UndefinedEffort);
    }
    let total = first_success.len() as f64;
    let mut curve = Vec::with_capacity(generations);
    let mut best: Option<(u64, usize)> = None;
    for i in 1..=generations {
        let hits = first_success
            .iter()
            .filter(|s| s.is_some_and(|g| g.max(1) <= i))
            .count();
        let p = hits as f64 / total;
        let r = runs_required(z, p);
        let individuals = r.map(|r| individuals_to_process(population, r, i as u64));
        if let Some(n) = individuals {
            if best.is_none_or(|(b, _)| n < b) {
                best = Some((n, i));
            }
        }
        curve.push(EffortPoint {
            generation: i,
            probability: p,
            runs_required: r,
            individuals,
        });
    }
    let (minimum, best_generation) = best.ok_or(Error::UndefinedEffort)?;
    Ok(Effort {
        curve,
        minimum,
        best_generation,
    })
}

/// Sample mean and standard deviation (n - 1 denominator).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standard error of the mean.
pub fn standard_error(values: &[f64]) -> f64 {
    let (_, sd) = mean_std(values);
    sd / (values.len() as f64).sqrt()
}
