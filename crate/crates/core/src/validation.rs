//! Oracle suites shared by the CLI `validate` command and the test suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::gp::{grid_oracle_with, solve, GpBuilder, GpProblem, GpStatus, Monomial, Posynomial, VarId};
use crate::graph::{karate, StaticGraph};
use crate::simulate::{master_equation_marginals, mean_field_ode};
use crate::spectral::{build_a1, build_a3, build_static, lambda_max, MetzlerMatrix, ThresholdModel, DEFAULT_TOL};
use crate::temporal::{AsisModel, EpidemicParams, MarkovTemporalNet};
use crate::{Error, Result};

/// Random three-variable GP with log-width-0.5 boxes around a random
/// center; constraints are scaled so the box center is feasible.
pub fn random_gp(seed: u64) -> Result<(GpProblem, Vec<(f64, f64)>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GpBuilder::new();
    let mut boxes = Vec::new();
    let mut center = Vec::new();
    let vars: Vec<VarId> = (0..3)
        .map(|k| {
            let c: f64 = rng.random_range(-1.0..1.0);
            let (lo, hi) = ((c - 0.25).exp(), (c + 0.25).exp());
            boxes.push((lo, hi));
            center.push(c.exp());
            b.bounded(format!("x{k}"), lo, hi)
        })
        .collect();
    let posy = |rng: &mut ChaCha8Rng, terms: usize| -> Result<Posynomial> {
        let ms = (0..terms)
            .map(|_| {
                let exps: Vec<(VarId, f64)> = vars.iter().map(|&v| (v, rng.random_range(-2.0..2.0))).collect();
                Monomial::new(rng.random_range(0.5..2.0), exps)
            })
            .collect::<Result<Vec<_>>>()?;
        Posynomial::new(ms)
    };
    let objective = posy(&mut rng, 3)?;
    let n_cons = rng.random_range(1..=2);
    for _ in 0..n_cons {
        let p = posy(&mut rng, 2)?;
        let scale = rng.random_range(0.6..1.0) / p.evaluate(&center)?;
        let scaled = Posynomial::new(p.terms().iter().map(|m| m.scale(scale)).collect::<Result<_>>()?)?;
        b.le_one(scaled);
    }
    Ok((b.minimize(objective)?, boxes))
}

/// One named pass/fail check with the measured quantity and its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            passed: value >= bound,
            value,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub const SUITES: [&str; 3] = ["thresholds", "gp-oracle", "master-equation"];

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub gp_cases: usize,
    pub mode: Execution,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            gp_cases: 20,
            mode: Execution::Parallel,
        }
    }
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
    let checks = match name {
        "thresholds" => {
            let mut c = static_reduction(&[0.5, 1.0, 2.0])?;
            c.push(markov_collapse(20, 7)?);
            for (label, g) in sign_test_graphs() {
                c.push(asis_homogeneous_sign(label, &g)?);
            }
            c
        }
        "gp-oracle" => vec![gp_vs_grid(opts.gp_cases, 1e-3, opts.mode)?],
        "master-equation" => vec![decay_rate()?, mean_field_upper_bound(20, 11)?],
        other => return Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Relative error of the bisected static Karate threshold against
/// `delta / lambda_max(A)`.
pub fn static_reduction(deltas: &[f64]) -> Result<Vec<Check>> {
    let g = karate();
    let lam = lambda_max(&MetzlerMatrix::new(g.adjacency())?, 1e-13)?;
    deltas
        .iter()
        .map(|&d| {
            let bc = ThresholdModel::Static(&g).beta_c(d, 1e-12)?;
            let exact = d / lam;
            Ok(Check::at_most(
                format!("static-threshold-delta-{d}"),
                ((bc - exact) / exact).abs(),
                1e-6,
            ))
        })
        .collect()
}

fn random_connected(rng: &mut ChaCha8Rng, n: usize) -> Result<StaticGraph> {
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.4) {
                    edges.push((i, j));
                }
            }
        }
        let g = StaticGraph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
}

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Result<EpidemicParams> {
    EpidemicParams::new(
        (0..n).map(|_| rng.random_range(0.1..1.0)).collect(),
        (0..n).map(|_| rng.random_range(0.5..2.0)).collect(),
    )
}

/// Largest `|lambda_max(A1) - lambda_max(BA - D)|` over random networks made
/// of `L in {2, 4}` identical configurations.
pub fn markov_collapse(instances: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let n = rng.random_range(4..=10);
        let g = random_connected(&mut rng, n)?;
        let ep = random_params(&mut rng, n)?;
        let l = if k % 2 == 0 { 2 } else { 4 };
        let rates = DMatrix::from_fn(l, l, |a, b| if a == b { 0.0 } else { rng.random_range(0.1..2.0) });
        let net = MarkovTemporalNet::new(vec![g.clone(); l], rates)?;
        let a1 = lambda_max(&build_a1(&net, &ep)?, 1e-13)?;
        let st = lambda_max(&build_static(&g, &ep)?, 1e-13)?;
        worst = worst.max((a1 - st).abs());
    }
    Ok(Check::at_most("markov-collapse", worst, 1e-8))
}

pub fn sign_test_graphs() -> Vec<(&'static str, StaticGraph)> {
    vec![
        ("2-path", StaticGraph::new(2, [(0, 1)]).expect("valid graph")),
        ("triangle", StaticGraph::new(3, [(0, 1), (1, 2), (0, 2)]).expect("valid graph")),
        ("karate", karate()),
    ]
}

/// Number of `(beta, phi)` cells on a 10x10 grid where the sign of
/// `lambda_max(A3)` disagrees with `beta lambda_max(A(0)) - delta (1 + omega)`
/// (`delta = 1`, `psi = 2`, cells with margin below `1e-6` skipped).
pub fn asis_homogeneous_sign(label: &str, g: &StaticGraph) -> Result<Check> {
    let (delta, psi) = (1.0, 2.0);
    let lam = lambda_max(&MetzlerMatrix::new(g.adjacency())?, 1e-13)?;
    let mut mismatches = 0;
    for bi in 0..10 {
        let beta = (0.2 + 2.8 * bi as f64 / 9.0) / lam;
        for pi in 0..10 {
            let phi = 4.0 * pi as f64 / 9.0;
            let margin = beta * lam - delta * (1.0 + phi / (delta + psi));
            if margin.abs() < 1e-6 {
                continue;
            }
            let m = AsisModel::homogeneous(g.clone(), phi, psi)?;
            let ep = EpidemicParams::homogeneous(g.n(), beta, delta)?;
            let l3 = lambda_max(&build_a3(&m, &ep)?, DEFAULT_TOL)?;
            if (l3 < 0.0) != (margin < 0.0) {
                mismatches += 1;
            }
        }
    }
    Ok(Check::at_most(format!("asis-sign-{label}"), mismatches as f64, 0.0))
}

/// Worst relative excess of the solver objective over the grid oracle on
/// `cases` random GPs.
pub fn gp_vs_grid(cases: usize, step: f64, mode: Execution) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for seed in 0..cases as u64 {
        let (gp, boxes) = random_gp(seed)?;
        let sol = solve(&gp, 1e-6, 1e-8)?;
        let grid = grid_oracle_with(&gp, &boxes, step, mode)?;
        let rel = match (sol.status, grid) {
            (GpStatus::Optimal, Some(pt)) => ((sol.objective_value - pt.objective) / pt.objective).abs(),
            _ => f64::INFINITY,
        };
        worst = worst.max(rel);
    }
    Ok(Check::at_most("gp-vs-grid", worst, 1e-2))
}

/// Four-cycle alternating between edge sets `{01, 23}` and `{12, 30}`.
pub fn alternating_cycle(switch_rate: f64) -> Result<MarkovTemporalNet> {
    let a = StaticGraph::new(4, [(0, 1), (2, 3)])?;
    let b = StaticGraph::new(4, [(1, 2), (0, 3)])?;
    MarkovTemporalNet::new(vec![a, b], DMatrix::from_row_slice(2, 2, &[0.0, switch_rate, switch_rate, 0.0]))
}

/// Least-squares slope of `ln y` against `t`.
pub fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let k = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let num: f64 = t.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    let den: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    num / den
}

/// Parameters of the decay-rate check on the alternating four-cycle.
pub const DECAY_BETA: f64 = 1.0;
pub const DECAY_DELTA: f64 = 1.5;
pub const DECAY_SWITCH: f64 = 1.0;

/// Fitted decay rate of the exact total infection probability on
/// `[T/2, T]`, `T = 10 / |lambda_max(A1)|`, relative to `|lambda_max(A1)|`.
pub fn decay_rate() -> Result<Check> {
    let net = alternating_cycle(DECAY_SWITCH)?;
    let ep = EpidemicParams::homogeneous(4, DECAY_BETA, DECAY_DELTA)?;
    let lam = lambda_max(&build_a1(&net, &ep)?, 1e-13)?;
    if !(-1.0..=-0.2).contains(&lam) {
        return Err(Error::InvalidParameter(format!("lambda_max(A1) = {lam} outside [-1, -0.2]")));
    }
    let horizon = 10.0 / lam.abs();
    let grid: Vec<f64> = (0..=40).map(|k| horizon * (0.5 + 0.5 * k as f64 / 40.0)).collect();
    let sol = master_equation_marginals(&net, &ep, &[true; 4], 0, &grid)?;
    let rate = -log_slope(&grid, &sol.total());
    Ok(Check::at_least("decay-rate-ratio", rate / lam.abs(), 0.95))
}

/// Largest amount by which an exact marginal exceeds the mean-field
/// solution on random three-node paths.
pub fn mean_field_upper_bound(draws: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = StaticGraph::new(3, [(0, 1), (1, 2)])?;
    let grid: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..draws {
        let ep = EpidemicParams::new(
            (0..3).map(|_| rng.random_range(0.2..2.0)).collect(),
            (0..3).map(|_| rng.random_range(0.2..2.0)).collect(),
        )?;
        let mut x0: Vec<bool> = (0..3).map(|_| rng.random_bool(0.5)).collect();
        x0[rng.random_range(0..3)] = true;
        let p0: Vec<f64> = x0.iter().map(|&b| f64::from(u8::from(b))).collect();
        let exact = master_equation_marginals(&MarkovTemporalNet::single(g.clone()), &ep, &x0, 0, &grid)?;
        let mf = mean_field_ode(&build_static(&g, &ep)?, &p0, &grid)?;
        for (e, m) in exact.marginals.iter().zip(&mf) {
            for (a, b) in e.iter().zip(m) {
                worst = worst.max(a - b);
            }
        }
    }
    Ok(Check::at_most("mean-field-upper-bound", worst, 1e-9))
}
