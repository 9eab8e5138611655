//! Stochastic simulation, exact master equations and mean-field integration.
//!
//! Random streams are ChaCha8 keyed by `SimConfig::seed`, with
//! `SimConfig::stream` selecting an independent substream per run.

mod gillespie;
mod master;
mod metastable;
mod ode;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::temporal::{stationary_distribution, AmeiNet};
use crate::{Error, Result};

pub use gillespie::{gillespie_amei, gillespie_asis, gillespie_markov};
pub use master::{master_equation_amei, master_equation_asis, master_equation_marginals, ForwardSolution, MASTER_STATE_CAP};
pub use metastable::{metastable_count, monte_carlo_marginals, Metastable, MetastableEstimate, MonteCarloMarginals};
pub use ode::mean_field_ode;

/// Initial network state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetInit {
    /// Configuration 0, every pair in its most probable stationary state
    /// (see [`amei_default_states`]), or the full initial graph.
    #[default]
    Default,
    Config(usize),
    PairStates(Vec<usize>),
    /// Activity of each initial-graph edge, aligned with its edge list.
    EdgeSet(Vec<bool>),
}

/// Most probable stationary state of every AMEI pair, in pair order; ties
/// and processes without a unique stationary law fall back to the lowest
/// index.
pub fn amei_default_states(net: &AmeiNet) -> Vec<usize> {
    net.processes()
        .values()
        .map(|p| match stationary_distribution(p.generator()) {
            Ok(pi) => {
                pi.iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |best, (k, &v)| if v > best.1 + 1e-12 { (k, v) } else { best },
                    )
                    .0
            }
            Err(_) => 0,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub seed: u64,
    /// Substream index, one per Monte Carlo run.
    pub stream: u64,
    pub x0: Vec<bool>,
    pub net0: NetInit,
    /// Number of prevalence sampling intervals on `[0, horizon]`.
    pub samples: usize,
    /// Times at which the full infection vector is recorded.
    pub snapshot_times: Vec<f64>,
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(horizon: f64, seed: u64, x0: Vec<bool>) -> Self {
        SimConfig {
            horizon,
            seed,
            stream: 0,
            x0,
            net0: NetInit::Default,
            samples: 100,
            snapshot_times: Vec::new(),
            record_events: true,
        }
    }

    pub fn all_infected(n: usize, horizon: f64, seed: u64) -> Self {
        Self::new(horizon, seed, vec![true; n])
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon {} must be positive", self.horizon)));
        }
        if self.x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.x0.len(),
            });
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("at least one sampling interval required".into()));
        }
        if self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("snapshot times must be sorted".into()));
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    Infection {
        node: usize,
    },
    Recovery {
        node: usize,
    },
    /// Markovian network switched to configuration `to`.
    Switch {
        to: usize,
    },
    /// AMEI pair (by index in the process map) moved to `state`.
    PairState {
        pair: usize,
        state: usize,
    },
    EdgeCut {
        edge: usize,
    },
    EdgeRestore {
        edge: usize,
    },
}

impl EventKind {
    /// Prevalence change caused by the event.
    pub fn prevalence_delta(&self) -> i32 {
        match self {
            EventKind::Infection { .. } => 1,
            EventKind::Recovery { .. } => -1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub events: Vec<Event>,
    /// Sampling times `k * horizon / samples`.
    pub times: Vec<f64>,
    /// Number infected at each sampling time.
    pub prevalence: Vec<u32>,
    /// Infection vectors at the configured snapshot times.
    pub snapshots: Vec<Vec<bool>>,
}

impl Trajectory {
    /// `time,prevalence` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,prevalence\n");
        for (t, p) in self.times.iter().zip(&self.prevalence) {
            out.push_str(&format!("{t:.16e},{p}\n"));
        }
        out
    }

    /// One JSON object per event.
    pub fn events_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Time average of the sampled prevalence over samples with index
    /// `>= from`.
    pub fn mean_prevalence_from(&self, from: usize) -> f64 {
        let tail = &self.prevalence[from.min(self.prevalence.len())..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|&p| p as f64).sum::<f64>() / tail.len() as f64
    }
}
