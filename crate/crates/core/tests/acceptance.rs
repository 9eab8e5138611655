//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits with status 1 if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use epictrl::allocation::{
    normalize_costs, optimize_amei, optimize_asis, optimize_markov, uniform_phi, uniform_rates, AllocationResult, CostKind, RateCosts,
};
use epictrl::exec::Execution;
use epictrl::gp::{GpStatus, SolverOptions};
use epictrl::graph::{karate, StaticGraph};
use epictrl::simulate::{
    gillespie_amei, gillespie_asis, gillespie_markov, master_equation_amei, master_equation_asis, master_equation_marginals,
    metastable_count, monte_carlo_marginals, ForwardSolution, MonteCarloMarginals, NetInit, SimConfig,
};
use epictrl::spectral::{build_a1, build_a2, build_a3, lambda_max, MetzlerMatrix, ThresholdModel, DEFAULT_TOL};
use epictrl::temporal::{amei_karate, asis_karate, markov_karate, AmeiNet, AsisModel, ClassRates, EdgeProcess, EpidemicParams};
use epictrl::validation::{self, Check};
use epictrl::Result;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn from_checks(checks: &[Check]) -> Self {
        let detail = checks
            .iter()
            .map(|c| format!("{}={:.3e} (bound {:.1e})", c.name, c.value, c.bound))
            .collect::<Vec<_>>()
            .join(", ");
        Outcome {
            passed: checks.iter().all(|c| c.passed),
            detail,
        }
    }
}

fn c1() -> Result<Outcome> {
    Ok(Outcome::from_checks(&validation::static_reduction(&[0.5, 1.0, 2.0])?))
}

fn c2() -> Result<Outcome> {
    Ok(Outcome::from_checks(&[validation::markov_collapse(20, 2)?]))
}

fn c3() -> Result<Outcome> {
    let checks = validation::sign_test_graphs()
        .iter()
        .map(|(label, g)| validation::asis_homogeneous_sign(label, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::from_checks(&checks))
}

fn c4() -> Result<Outcome> {
    Ok(Outcome::from_checks(&[validation::gp_vs_grid(20, 1e-3, Execution::Parallel)?]))
}

const FEAS: f64 = 1e-6;
const BUDGET: f64 = 17.0;
const DELTA_LOW: f64 = 0.05;

struct Certified {
    model: &'static str,
    lambda_star: f64,
    uniform: f64,
    certificate_excess: f64,
    constraint_excess: f64,
}

/// Largest violation of the budget and rate boxes.
fn constraint_excess(r: &AllocationResult, boxes: &[(&[f64], f64, f64)]) -> f64 {
    let mut worst = r.total_spend - BUDGET;
    for &(rates, lo, hi) in boxes {
        for &x in rates {
            worst = worst.max(lo - x).max(x - hi);
        }
    }
    worst
}

fn allocations() -> Result<Vec<Certified>> {
    let opts = SolverOptions::default();
    let rates = ClassRates::KARATE_DEFAULT;
    let mut out = Vec::new();

    let markov = markov_karate(rates)?;
    let beta_bar = ThresholdModel::Markov(&markov).beta_c(DELTA_LOW, 1e-12)?;
    let costs = RateCosts::improvement_20pct(beta_bar, DELTA_LOW, 0.1, 0.1)?;
    let rate_boxes = |r: &AllocationResult| -> f64 {
        constraint_excess(
            r,
            &[
                (&r.rates.beta, costs.f.lower, costs.f.upper),
                (r.rates.delta.as_deref().unwrap_or(&[]), costs.g.lower, costs.g.upper),
            ],
        )
    };
    let r = optimize_markov(&markov, &costs, BUDGET, &opts)?;
    let m = build_a1(&markov, &r.epidemic_params(None)?)?;
    let uni = build_a1(&markov, &uniform_rates(&costs, 34, BUDGET)?)?;
    out.push(certify("markov", &r, &m, &uni, rate_boxes(&r))?);

    let amei = amei_karate(rates)?;
    let r = optimize_amei(&amei, &costs, BUDGET, &opts)?;
    let m = build_a2(&amei, &r.epidemic_params(None)?)?;
    let uni = build_a2(&amei, &uniform_rates(&costs, 34, BUDGET)?)?;
    out.push(certify("amei", &r, &m, &uni, rate_boxes(&r))?);

    let asis = asis_karate(1.0, 2.0)?;
    let h = normalize_costs(CostKind::CuttingH, 1.0, 150.0, (0.5, 1.5))?;
    let ep = EpidemicParams::homogeneous(34, 0.16, 1.0)?;
    let r = optimize_asis(&asis, &ep, &h, BUDGET, &opts)?;
    let phi = r.rates.phi.clone().unwrap_or_default();
    let m = build_a3(&asis.with_phi(phi.clone())?, &ep)?;
    let uni = build_a3(&asis.with_phi(uniform_phi(&h, 34, BUDGET))?, &ep)?;
    let excess = constraint_excess(&r, &[(&phi, h.lower, h.upper)]);
    out.push(certify("asis", &r, &m, &uni, excess)?);
    Ok(out)
}

fn certify(model: &'static str, r: &AllocationResult, m: &MetzlerMatrix, uni: &MetzlerMatrix, constraint_excess: f64) -> Result<Certified> {
    let ok = r.status == GpStatus::Optimal;
    Ok(Certified {
        model,
        lambda_star: r.lambda_star,
        uniform: -lambda_max(uni, DEFAULT_TOL)?,
        certificate_excess: if ok { lambda_max(m, 1e-12)? + r.lambda_star } else { f64::INFINITY },
        constraint_excess,
    })
}

fn c5(allocs: &[Certified]) -> Outcome {
    let passed = allocs.iter().all(|a| a.certificate_excess <= FEAS && a.constraint_excess <= FEAS);
    let detail = allocs
        .iter()
        .map(|a| {
            format!(
                "{}: lambda*={:.6}, lambda_max+lambda*={:.2e}, constraint excess={:.2e}",
                a.model, a.lambda_star, a.certificate_excess, a.constraint_excess
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { passed, detail }
}

fn c6(allocs: &[Certified]) -> Outcome {
    let passed = allocs.iter().all(|a| a.lambda_star >= a.uniform);
    let detail = allocs
        .iter()
        .map(|a| format!("{}: {:.6} vs uniform {:.6}", a.model, a.lambda_star, a.uniform))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { passed, detail }
}

fn c7() -> Result<Outcome> {
    Ok(Outcome::from_checks(&[validation::decay_rate()?]))
}

const MC_RUNS: usize = 100_000;
const MC_SEED: u64 = 20_240_601;
const MC_TIMES: [f64; 3] = [0.4, 1.2, 2.5];

/// Largest `|mc - exact| / stderr` over all nodes and times.
fn worst_z(mc: &MonteCarloMarginals, exact: &ForwardSolution) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, row) in exact.marginals.iter().enumerate() {
        for (i, &p) in row.iter().enumerate() {
            let se = mc.stderr[k][i];
            let z = if se > 0.0 {
                (mc.mean[k][i] - p).abs() / se
            } else if mc.mean[k][i] == p {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
    }
    worst
}

fn mc_config(x0: &[bool], stream: u64) -> SimConfig {
    let mut cfg = SimConfig::new(MC_TIMES[2] + 0.5, MC_SEED, x0.to_vec());
    cfg.stream = stream;
    cfg.snapshot_times = MC_TIMES.to_vec();
    cfg.record_events = false;
    cfg
}

fn c8() -> Result<Outcome> {
    let x0 = [true, false, false, false];
    let mut checks = Vec::new();

    let cycle = validation::alternating_cycle(1.0)?;
    let ep = EpidemicParams::new(vec![1.2, 0.9, 1.5, 1.0], vec![1.0, 0.8, 1.1, 0.7])?;
    let exact = master_equation_marginals(&cycle, &ep, &x0, 0, &MC_TIMES)?;
    let mc = monte_carlo_marginals(|r| gillespie_markov(&cycle, &ep, &mc_config(&x0, r)), MC_RUNS, Execution::Parallel)?;
    checks.push(("markov-cycle", worst_z(&mc, &exact)));

    let amei = AmeiNet::new(
        4,
        [
            ((0, 1), EdgeProcess::two_state(1.0, 1.0)?),
            ((1, 2), EdgeProcess::two_state(0.5, 2.0)?),
            ((2, 3), EdgeProcess::two_state(2.0, 0.5)?),
            ((0, 3), EdgeProcess::two_state(1.0, 1.0)?),
            ((0, 2), EdgeProcess::two_state(0.3, 3.0)?),
        ],
    )?;
    let ep = EpidemicParams::homogeneous(4, 1.4, 0.8)?;
    let exact = master_equation_amei(&amei, &ep, &x0, &NetInit::Default, &MC_TIMES)?;
    let mc = monte_carlo_marginals(|r| gillespie_amei(&amei, &ep, &mc_config(&x0, r)), MC_RUNS, Execution::Parallel)?;
    checks.push(("amei-4", worst_z(&mc, &exact)));

    let cycle4 = StaticGraph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)])?;
    let asis = AsisModel::new(cycle4, vec![1.0, 0.5, 2.0, 1.0], vec![2.0, 1.0, 2.0, 3.0])?;
    let ep = EpidemicParams::homogeneous(4, 1.5, 0.9)?;
    let exact = master_equation_asis(&asis, &ep, &x0, &NetInit::Default, &MC_TIMES)?;
    let mc = monte_carlo_marginals(|r| gillespie_asis(&asis, &ep, &mc_config(&x0, r)), MC_RUNS, Execution::Parallel)?;
    checks.push(("asis-cycle", worst_z(&mc, &exact)));

    let passed = checks.iter().all(|&(_, z)| z <= 3.0);
    let detail = checks
        .iter()
        .map(|(name, z)| format!("{name}: worst |z|={z:.2}"))
        .collect::<Vec<_>>()
        .join(", ")
        + " (bound 3)";
    Ok(Outcome { passed, detail })
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

fn c9() -> Result<Outcome> {
    let (delta, psi) = (1.0, 2.0);
    let g = karate();
    let lam = lambda_max(&MetzlerMatrix::new(g.adjacency())?, 1e-13)?;
    let base = asis_karate(0.0, psi)?;
    let mut violations = Vec::new();
    let (mut below, mut above) = (0, 0);
    for &beta in &linspace(0.05, 0.6, 8) {
        for &phi in &linspace(0.0, 4.0, 8) {
            let line = delta * (1.0 + phi / (delta + psi)) / lam;
            let low = beta < 0.9 * line;
            let high = beta > 1.5 * line;
            if !(low || high) {
                continue;
            }
            let m = base.with_phi(vec![phi; 34])?;
            let ep = EpidemicParams::homogeneous(34, beta, delta)?;
            let est = metastable_count(
                |r| {
                    let mut cfg = SimConfig::all_infected(34, 50.0, 0);
                    cfg.stream = r;
                    cfg.record_events = false;
                    gillespie_asis(&m, &ep, &cfg)
                },
                500,
                0.5,
                Execution::Parallel,
            )?;
            if low {
                below += 1;
                if est.y_star >= 1.0 {
                    violations.push(format!("beta={beta:.4} phi={phi:.3} y*={:.3} (expected < 1)", est.y_star));
                }
            } else {
                above += 1;
                if est.y_star <= 1.0 {
                    violations.push(format!(
                        "beta={beta:.4} phi={phi:.3} y*={:.3}, survived {:.3} (expected > 1; 1.5x line = {:.4})",
                        est.y_star,
                        est.survived_fraction,
                        1.5 * line
                    ));
                }
            }
        }
    }
    let mut detail = format!("{below} cells below 0.9x line, {above} above 1.5x line");
    if !violations.is_empty() {
        detail += &format!("; violations: {}", violations.join("; "));
    }
    Ok(Outcome {
        passed: violations.is_empty(),
        detail,
    })
}

fn c10() -> Result<Outcome> {
    let net = markov_karate(ClassRates::KARATE_DEFAULT)?;
    let union = karate();
    let lam = lambda_max(&MetzlerMatrix::new(union.adjacency())?, 1e-13)?;
    let mut prev = f64::NEG_INFINITY;
    let mut increasing = true;
    let mut min_gap = f64::INFINITY;
    for k in 1..=8 {
        let delta = 0.25 * k as f64;
        let bc = ThresholdModel::Markov(&net).beta_c(delta, 1e-10)?;
        increasing &= bc > prev;
        prev = bc;
        min_gap = min_gap.min(bc - delta / lam);
    }
    Ok(Outcome {
        passed: increasing && min_gap > 0.0,
        detail: format!("strictly increasing: {increasing}, min(beta_c - delta/lambda_max(A)) = {min_gap:.4e}, beta_c(2) = {prev:.6}"),
    })
}

fn report(id: usize, name: &str, limit: Duration, start: Instant, outcome: Result<Outcome>) -> bool {
    let elapsed = start.elapsed();
    let (passed, detail) = match outcome {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed <= limit;
    let ok = passed && in_time;
    println!(
        "{} {id:>2} {name}: {detail} [{:.2} s, limit {} s{}]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over time" }
    );
    ok
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "static reduction", secs(1), t, c1());
    let t = Instant::now();
    all &= report(2, "markov collapse", secs(5), t, c2());
    let t = Instant::now();
    all &= report(3, "asis homogeneous threshold sign", secs(30), t, c3());
    let t = Instant::now();
    all &= report(4, "gp solver vs grid oracle", secs(120), t, c4());
    let t = Instant::now();
    match allocations() {
        Ok(allocs) => {
            all &= report(5, "eigen-certificate soundness", secs(120), t, Ok(c5(&allocs)));
            all &= report(6, "optimizer beats uniform", secs(120), t, Ok(c6(&allocs)));
        }
        Err(e) => {
            let msg = e.to_string();
            all &= report(5, "eigen-certificate soundness", secs(120), t, Err(e));
            all &= report(6, "optimizer beats uniform", secs(120), t, Err(epictrl::Error::NotConverged(msg)));
        }
    }
    let t = Instant::now();
    all &= report(7, "decay rate", secs(30), t, c7());
    let t = Instant::now();
    all &= report(8, "gillespie exactness", secs(180), t, c8());
    let t = Instant::now();
    all &= report(9, "asis sweep vs threshold line", secs(900), t, c9());
    let t = Instant::now();
    all &= report(10, "markov threshold monotone in delta", secs(60), t, c10());
    println!("acceptance: {}", if all { "all criteria passed" } else { "some criteria FAILED" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
