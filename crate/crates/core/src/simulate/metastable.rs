//! Monte Carlo estimators over independent runs.

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::exec::{map_indexed, Execution};
use crate::{Error, Result};

/// Fraction of runs that must survive the burn-in for `y_star` to be
/// reported as nonzero.
pub const MIN_SURVIVAL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetastableEstimate {
    pub y_star: f64,
    pub stderr: f64,
    pub survived_fraction: f64,
}

/// Protocol parameters of [`metastable_count`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metastable {
    pub runs: usize,
    pub burn_in_fraction: f64,
}

impl Default for Metastable {
    fn default() -> Self {
        Metastable {
            runs: 500,
            burn_in_fraction: 0.5,
        }
    }
}

/// Runs `simulate(run)` for `run in 0..runs`; each trajectory contributes
/// its mean sampled prevalence after the burn-in if it is still infected at
/// the start of that window.
pub fn metastable_count<F>(simulate: F, runs: usize, burn_in_fraction: f64, mode: Execution) -> Result<MetastableEstimate>
where
    F: Fn(u64) -> Result<Trajectory> + Sync + Send,
{
    if runs < 100 {
        return Err(Error::InvalidParameter(format!(
            "metastable estimate needs at least 100 runs, got {runs}"
        )));
    }
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(Error::InvalidParameter(format!(
            "burn-in fraction {burn_in_fraction} outside [0, 1)"
        )));
    }
    let per_run = map_indexed(mode, runs, |r| -> Result<Option<f64>> {
        let tr = simulate(r as u64)?;
        let samples = tr.prevalence.len().saturating_sub(1);
        let start = (burn_in_fraction * samples as f64).ceil() as usize;
        Ok(match tr.prevalence.get(start) {
            Some(&p) if p > 0 => Some(tr.mean_prevalence_from(start)),
            _ => None,
        })
    });
    let (mut count, mut sum, mut sum_sq) = (0usize, 0.0, 0.0);
    for r in per_run {
        if let Some(y) = r? {
            count += 1;
            sum += y;
            sum_sq += y * y;
        }
    }
    let survived_fraction = count as f64 / runs as f64;
    if survived_fraction < MIN_SURVIVAL || count == 0 {
        return Ok(MetastableEstimate {
            y_star: 0.0,
            stderr: 0.0,
            survived_fraction,
        });
    }
    let mean = sum / count as f64;
    let var = if count > 1 {
        ((sum_sq - count as f64 * mean * mean) / (count - 1) as f64).max(0.0)
    } else {
        0.0
    };
    Ok(MetastableEstimate {
        y_star: mean,
        stderr: (var / count as f64).sqrt(),
        survived_fraction,
    })
}

/// Empirical infection marginals at the snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloMarginals {
    /// `mean[k][i]` estimates `Pr(x_i(t_k) = 1)`.
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
}

/// Averages the snapshots of `runs` independent trajectories.
pub fn monte_carlo_marginals<F>(simulate: F, runs: usize, mode: Execution) -> Result<MonteCarloMarginals>
where
    F: Fn(u64) -> Result<Trajectory> + Sync + Send,
{
    if runs < 2 {
        return Err(Error::InvalidParameter("need at least two runs".into()));
    }
    // chunked so that only counts, not trajectories, are kept
    const CHUNK: usize = 1000;
    let chunks = runs.div_ceil(CHUNK);
    let partial = map_indexed(mode, chunks, |c| -> Result<Vec<Vec<usize>>> {
        let mut counts: Vec<Vec<usize>> = Vec::new();
        for r in c * CHUNK..((c + 1) * CHUNK).min(runs) {
            let tr = simulate(r as u64)?;
            if counts.is_empty() {
                counts = tr.snapshots.iter().map(|s| vec![0; s.len()]).collect();
            }
            for (acc, snap) in counts.iter_mut().zip(&tr.snapshots) {
                for (a, &x) in acc.iter_mut().zip(snap) {
                    *a += usize::from(x);
                }
            }
        }
        Ok(counts)
    });
    let mut total: Vec<Vec<usize>> = Vec::new();
    for p in partial {
        let p = p?;
        if total.is_empty() {
            total = p;
        } else {
            for (a, b) in total.iter_mut().zip(&p) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
    }
    let nr = runs as f64;
    let mean: Vec<Vec<f64>> = total.iter().map(|c| c.iter().map(|&k| k as f64 / nr).collect()).collect();
    let stderr = mean
        .iter()
        .map(|m| m.iter().map(|&p| (p * (1.0 - p) / (nr - 1.0)).sqrt()).collect())
        .collect();
    Ok(MonteCarloMarginals { mean, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StaticGraph;
    use crate::simulate::{gillespie_markov, SimConfig};
    use crate::temporal::{EpidemicParams, MarkovTemporalNet};

    #[test]
    fn zero_infection_rate_dies_out() {
        let net = MarkovTemporalNet::single(StaticGraph::new(3, [(0, 1), (1, 2)]).unwrap());
        let ep = EpidemicParams::homogeneous(3, 0.0, 1.0).unwrap();
        let est = metastable_count(
            |r| {
                let mut cfg = SimConfig::all_infected(3, 50.0, 5);
                cfg.stream = r;
                cfg.record_events = false;
                gillespie_markov(&net, &ep, &cfg)
            },
            100,
            0.5,
            Execution::default(),
        )
        .unwrap();
        assert_eq!(est.y_star, 0.0);
        assert_eq!(est.survived_fraction, 0.0);
    }

    #[test]
    fn too_few_runs_rejected() {
        assert!(metastable_count(|_| unreachable!(), 10, 0.5, Execution::Sequential).is_err());
    }
}
