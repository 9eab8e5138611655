use std::path::Path;

use epictrl::allocation::{
    normalize_costs, optimize_amei, optimize_asis, optimize_markov, uniform_phi, uniform_rates, AllocationResult, CostKind, RateCosts,
};
use epictrl::exec::{map_indexed, Execution};
use epictrl::gp::{solve_with, GpProblem, GpStatus, SolverOptions};
use epictrl::graph::karate;
use epictrl::simulate::{
    gillespie_amei, gillespie_asis, gillespie_markov, master_equation_amei, master_equation_asis, master_equation_marginals,
    metastable_count, ForwardSolution, NetInit, SimConfig, Trajectory,
};
use epictrl::spectral::{build_a1, build_a2, build_a3, build_static, lambda_max, MetzlerMatrix, ThresholdModel, DEFAULT_TOL};
use epictrl::temporal::{
    amei_karate, asis_karate, karate_classes, markov_karate, AsisModel, ClassRates, EpidemicParams, MarkovTemporalNet,
};
use epictrl::validation::{run_suite, SuiteOptions, SUITES};
use serde_json::json;

use crate::args::{
    BuildKind, ClassRateArgs, Cli, Command, GpAction, MatrixArgs, NetAction, OptimizeArgs, SimulateArgs, ThresholdArgs, ValidateArgs,
};
use crate::model::ModelFile;
use crate::output::{line_svg, network_svg, num, sibling, write, write_json, RunManifest};
use crate::CliError;

/// Largest number of simulated runs one invocation may request.
const MAX_TOTAL_RUNS: usize = 50_000_000;

pub fn run(cli: Cli, argv: &[String]) -> Result<(), CliError> {
    match cli.command {
        Command::Net {
            action: NetAction::Build { kind },
        } => net_build(kind, argv),
        Command::Threshold(a) => threshold(a, argv),
        Command::Optimize(a) => optimize(a, argv),
        Command::Simulate(a) => simulate(a, argv),
        Command::Validate(a) => validate(a, argv),
        Command::Gp {
            action:
                GpAction::Solve {
                    problem,
                    feas_tol,
                    opt_tol,
                    out,
                },
        } => gp_solve(&problem, feas_tol, opt_tol, &out, argv),
        Command::Matrix(a) => matrix(a, argv),
        Command::Replay { manifest } => replay(&manifest),
    }
}

fn replay(path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let argv = std::iter::once("epictrl".to_string()).chain(manifest.args.iter().cloned());
    let cli = <Cli as clap::Parser>::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    run(cli, &manifest.args)
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("'{s}' is not a number")))
}

/// `lo:hi:step` to the inclusive grid `lo, lo + step, ..., hi`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("grid '{spec}' must be lo:hi:step")));
    }
    let (lo, hi, step) = (parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CliError::Usage(format!("grid '{spec}' needs finite lo <= hi")));
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Usage(format!("grid '{spec}' needs a positive step")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(CliError::Usage(format!("grid '{spec}' has too many points")));
    }
    Ok((0..=count).map(|k| lo + step * k as f64).collect())
}

fn parse_sweep(spec: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (mut beta, mut phi) = (None, None);
    for part in spec.split(',') {
        let (key, grid) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("sweep entry '{part}' must be name=lo:hi:step")))?;
        match key.trim() {
            "beta" => beta = Some(parse_grid(grid)?),
            "phi" => phi = Some(parse_grid(grid)?),
            other => return Err(CliError::Usage(format!("unknown sweep axis '{other}'"))),
        }
    }
    match (beta, phi) {
        (Some(b), Some(p)) => Ok((b, p)),
        _ => Err(CliError::Usage("sweep needs both beta and phi axes".into())),
    }
}

fn class_rates(r: &ClassRateArgs) -> ClassRates {
    ClassRates {
        p: [r.p1, r.p2, r.p3],
        q: [r.q1, r.q2, r.q3],
    }
}

fn net_build(kind: BuildKind, argv: &[String]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("net build", argv);
    let (model, out, karate_based) = match kind {
        BuildKind::StaticKarate { out } => (ModelFile::Static(karate()), out, true),
        BuildKind::MarkovKarate { rates, out } => {
            manifest.input("rates", class_rates(&rates));
            (ModelFile::Markov(markov_karate(class_rates(&rates))?), out, true)
        }
        BuildKind::AmeiKarate { rates, out } => {
            manifest.input("rates", class_rates(&rates));
            (ModelFile::Amei(amei_karate(class_rates(&rates))?), out, true)
        }
        BuildKind::AsisKarate { phi, psi, out } => {
            manifest.input("phi", phi);
            manifest.input("psi", psi);
            (ModelFile::Asis(asis_karate(phi, psi)?), out, true)
        }
    };
    manifest.input("kind", model.kind());
    manifest.output(write_json(&out, &model)?);
    if karate_based {
        let kc = karate_classes();
        let report = json!({
            "partition": kc.partition.cluster_of,
            "edges": kc.graph.edges(),
            "edge_class": kc.classes.class_of,
            "class_sizes": [kc.classes.count(1), kc.classes.count(2), kc.classes.count(3)],
            "cut_size": kc.partition.cut_size(&kc.graph),
        });
        manifest.output(write_json(&sibling(&out, ".classes.json"), &report)?);
    }
    if let ModelFile::Markov(m) = &model {
        eprintln!("{} configurations", m.len());
    }
    manifest.save(&sibling(&out, ".manifest.json"))
}

fn threshold_model(model: &ModelFile) -> ThresholdModel<'_> {
    match model {
        ModelFile::Static(g) => ThresholdModel::Static(g),
        ModelFile::Markov(m) => ThresholdModel::Markov(m),
        ModelFile::Amei(a) => ThresholdModel::Amei(a),
        ModelFile::Asis(a) => ThresholdModel::Asis(a),
    }
}

fn threshold(a: ThresholdArgs, argv: &[String]) -> Result<(), CliError> {
    let model = ModelFile::load(&a.model)?;
    let deltas = parse_grid(&a.delta_grid)?;
    if deltas.iter().any(|&d| d <= 0.0) {
        return Err(CliError::Usage("recovery rates must be positive".into()));
    }
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let tm = threshold_model(&model);
    let values = map_indexed(Execution::Parallel, deltas.len(), |k| tm.beta_c(deltas[k], a.tol));
    let mut csv = String::from("delta,beta_c\n");
    let mut points = Vec::new();
    for (&d, v) in deltas.iter().zip(values) {
        let bc = v.unwrap_or_else(|e| {
            eprintln!("warning: delta = {d}: {e}");
            f64::NAN
        });
        points.push((d, bc));
        csv += &format!("{},{}\n", num(d), num(bc));
    }
    let mut manifest = RunManifest::new("threshold", argv);
    manifest.input_path("model", &a.model);
    manifest.input("delta_grid", &a.delta_grid);
    manifest.input("tol", a.tol);
    manifest.output(write(&a.out, &csv)?);
    if let Some(svg) = &a.svg {
        manifest.output(write(svg, &line_svg(&points, "delta", "beta_c"))?);
    }
    manifest.save(&sibling(&a.out, ".manifest.json"))
}

fn optimize(a: OptimizeArgs, argv: &[String]) -> Result<(), CliError> {
    let model = ModelFile::load(&a.model)?;
    let opts = SolverOptions {
        feas_tol: a.feas_tol,
        opt_tol: a.opt_tol,
        ..SolverOptions::default()
    };
    let mut manifest = RunManifest::new("optimize", argv);
    manifest.input_path("model", &a.model);
    manifest.input("budget", a.budget);
    let n = model.n();
    let rate_costs = |beta_bar: f64| -> Result<RateCosts, CliError> { Ok(RateCosts::improvement_20pct(beta_bar, a.delta_low, a.q, a.r)?) };
    let (result, uniform_lambda) = match &model {
        ModelFile::Markov(net) => {
            let beta_bar = match a.beta_bar {
                Some(b) => b,
                None => ThresholdModel::Markov(net).beta_c(a.delta_low, 1e-12)?,
            };
            let costs = rate_costs(beta_bar)?;
            manifest.input("costs", costs);
            let res = optimize_markov(net, &costs, a.budget, &opts)?;
            let base = -lambda_max(&build_a1(net, &uniform_rates(&costs, n, a.budget)?)?, DEFAULT_TOL)?;
            (res, base)
        }
        ModelFile::Amei(net) => {
            let beta_bar = a
                .beta_bar
                .ok_or_else(|| CliError::Usage("--beta-bar is required for AMEI models".into()))?;
            let costs = rate_costs(beta_bar)?;
            manifest.input("costs", costs);
            let res = optimize_amei(net, &costs, a.budget, &opts)?;
            let base = -lambda_max(&build_a2(net, &uniform_rates(&costs, n, a.budget)?)?, DEFAULT_TOL)?;
            (res, base)
        }
        ModelFile::Asis(m) => {
            let h = normalize_costs(CostKind::CuttingH, a.s, a.phi_hat_factor * a.phi_high, (a.phi_low, a.phi_high))?;
            let ep = EpidemicParams::homogeneous(n, a.beta, a.delta)?;
            manifest.input("cost", h);
            manifest.input("beta", a.beta);
            manifest.input("delta", a.delta);
            let res = optimize_asis(m, &ep, &h, a.budget, &opts)?;
            let uniform = m.with_phi(uniform_phi(&h, n, a.budget))?;
            let base = -lambda_max(&build_a3(&uniform, &ep)?, DEFAULT_TOL)?;
            (res, base)
        }
        ModelFile::Static(_) => return Err(CliError::Usage("optimize needs a markov, amei or asis model".into())),
    };
    write_allocation(&a.out, &model, &result, uniform_lambda, &mut manifest)?;
    manifest.save(&a.out.join("manifest.json"))?;
    if result.status == GpStatus::Infeasible {
        let phase1 = result.solver.as_ref().and_then(|s| s.phase1_value).unwrap_or(f64::NAN);
        return Err(CliError::Infeasible(format!(
            "allocation program infeasible: phase-I optimum {phase1:.6e} > 0 certifies that no allocation satisfies the constraints"
        )));
    }
    if result.status == GpStatus::MaxIterations {
        return Err(CliError::Failed(
            "allocation program hit the Newton step budget; outputs hold the last iterate".into(),
        ));
    }
    eprintln!(
        "lambda_star = {:.10}, uniform = {:.10}, spend = {:.6}",
        result.lambda_star, uniform_lambda, result.total_spend
    );
    Ok(())
}

fn write_allocation(
    dir: &Path,
    model: &ModelFile,
    result: &AllocationResult,
    uniform_lambda: f64,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    manifest.output(write(&dir.join("allocation.json"), &(result.to_json()? + "\n"))?);
    manifest.output(write(&dir.join("spend.csv"), &result.spend_csv())?);
    manifest.output(write_json(
        &dir.join("comparison.json"),
        &json!({ "lambda_star": result.lambda_star, "uniform_lambda_star": uniform_lambda }),
    )?);
    let svg = network_svg(&model.drawing_graph(), &result.spend, "investment per node");
    manifest.output(write(&dir.join("allocation.svg"), &svg)?);
    Ok(())
}

enum SimModel {
    Markov(MarkovTemporalNet),
    Amei(epictrl::temporal::AmeiNet),
    Asis(AsisModel),
}

impl SimModel {
    fn from_file(m: ModelFile) -> Self {
        match m {
            ModelFile::Static(g) => SimModel::Markov(MarkovTemporalNet::single(g)),
            ModelFile::Markov(m) => SimModel::Markov(m),
            ModelFile::Amei(a) => SimModel::Amei(a),
            ModelFile::Asis(a) => SimModel::Asis(a),
        }
    }

    fn run(&self, ep: &EpidemicParams, cfg: &SimConfig) -> epictrl::Result<Trajectory> {
        match self {
            SimModel::Markov(m) => gillespie_markov(m, ep, cfg),
            SimModel::Amei(a) => gillespie_amei(a, ep, cfg),
            SimModel::Asis(a) => gillespie_asis(a, ep, cfg),
        }
    }

    fn exact(&self, ep: &EpidemicParams, x0: &[bool], grid: &[f64]) -> epictrl::Result<ForwardSolution> {
        match self {
            SimModel::Markov(m) => master_equation_marginals(m, ep, x0, 0, grid),
            SimModel::Amei(a) => master_equation_amei(a, ep, x0, &NetInit::Default, grid),
            SimModel::Asis(a) => master_equation_asis(a, ep, x0, &NetInit::Default, grid),
        }
    }
}

fn initial_infection(spec: &Option<String>, n: usize) -> Result<Vec<bool>, CliError> {
    let Some(spec) = spec else {
        return Ok(vec![true; n]);
    };
    let mut x0 = vec![false; n];
    for tok in spec.split(',').filter(|t| !t.trim().is_empty()) {
        let i: usize = tok
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("'{tok}' is not a node index")))?;
        if i >= n {
            return Err(CliError::Usage(format!("node {i} out of range for {n} nodes")));
        }
        x0[i] = true;
    }
    Ok(x0)
}

fn simulate(a: SimulateArgs, argv: &[String]) -> Result<(), CliError> {
    let file = ModelFile::load(&a.model)?;
    let n = file.n();
    let mut sim = SimModel::from_file(file);
    let x0 = initial_infection(&a.infected, n)?;
    let mut manifest = RunManifest::new("simulate", argv);
    manifest.input_path("model", &a.model);
    manifest.seed = Some(a.seed);
    let manifest_path = sibling(&a.out, ".manifest.json");

    let allocation: Option<AllocationResult> = match &a.allocation {
        Some(p) => {
            manifest.input_path("allocation", p);
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    if let (Some(alloc), SimModel::Asis(m)) = (&allocation, &sim) {
        if let Some(phi) = &alloc.rates.phi {
            sim = SimModel::Asis(m.with_phi(phi.clone())?);
        }
    }
    let params = |beta: Option<f64>| -> Result<EpidemicParams, CliError> {
        if let Some(alloc) = &allocation {
            let delta = vec![a.delta; n];
            return Ok(alloc.epidemic_params(Some(&delta))?);
        }
        let beta = beta.ok_or_else(|| CliError::Usage("--beta or --allocation is required".into()))?;
        Ok(EpidemicParams::homogeneous(n, beta, a.delta)?)
    };

    if let Some(grid) = &a.exact {
        let times = parse_grid(grid)?;
        let ep = params(a.beta)?;
        let sol = sim.exact(&ep, &x0, &times)?;
        let mut csv = String::from("time");
        for i in 0..n {
            csv += &format!(",p{i}");
        }
        csv += ",total\n";
        for (t, m) in sol.times.iter().zip(&sol.marginals) {
            csv += &num(*t);
            for p in m {
                csv += &format!(",{}", num(*p));
            }
            csv += &format!(",{}\n", num(m.iter().sum()));
        }
        manifest.input("exact", grid);
        manifest.output(write(&a.out, &csv)?);
        return manifest.save(&manifest_path);
    }

    let config = |stream: u64, record: bool| {
        let mut cfg = SimConfig::new(a.horizon, a.seed, x0.clone());
        cfg.stream = stream;
        cfg.samples = a.samples;
        cfg.record_events = record;
        cfg
    };
    manifest.input("horizon", a.horizon);
    manifest.input("runs", a.runs);

    if let Some(spec) = &a.sweep {
        let SimModel::Asis(base) = &sim else {
            return Err(CliError::Usage("sweeps over (beta, phi) need an adaptive (asis) model".into()));
        };
        let (betas, phis) = parse_sweep(spec)?;
        if betas.iter().chain(&phis).any(|&v| v < 0.0) {
            return Err(CliError::Usage("sweep values must be nonnegative".into()));
        }
        let cells = betas.len() * phis.len();
        if cells.saturating_mul(a.runs) > MAX_TOTAL_RUNS {
            return Err(CliError::Cap(format!(
                "{cells} cells x {} runs exceeds {MAX_TOTAL_RUNS} runs",
                a.runs
            )));
        }
        manifest.input("sweep", spec);
        manifest.input("burn_in", a.burn_in);
        let mut csv = String::from("beta,phi,y_star,stderr,survived_fraction\n");
        for &beta in &betas {
            for &phi in &phis {
                let m = base.with_phi(vec![phi; n])?;
                let ep = EpidemicParams::homogeneous(n, beta, a.delta)?;
                let est = metastable_count(
                    |r| gillespie_asis(&m, &ep, &config(r, false)),
                    a.runs,
                    a.burn_in,
                    Execution::Parallel,
                )?;
                csv += &format!(
                    "{},{},{},{},{}\n",
                    num(beta),
                    num(phi),
                    num(est.y_star),
                    num(est.stderr),
                    num(est.survived_fraction)
                );
            }
        }
        manifest.output(write(&a.out, &csv)?);
        return manifest.save(&manifest_path);
    }

    let ep = params(a.beta)?;
    if a.runs == 1 {
        let tr = sim.run(&ep, &config(0, a.events.is_some()))?;
        let mut csv = String::from("time,prevalence\n");
        for (t, p) in tr.times.iter().zip(&tr.prevalence) {
            csv += &format!("{},{p}\n", num(*t));
        }
        manifest.output(write(&a.out, &csv)?);
        if let Some(ev) = &a.events {
            manifest.output(write(ev, &tr.events_jsonl()?)?);
        }
        return manifest.save(&manifest_path);
    }
    if a.runs > MAX_TOTAL_RUNS {
        return Err(CliError::Cap(format!("{} runs exceeds {MAX_TOTAL_RUNS}", a.runs)));
    }
    manifest.input("burn_in", a.burn_in);
    let est = metastable_count(|r| sim.run(&ep, &config(r, false)), a.runs, a.burn_in, Execution::Parallel)?;
    let csv = format!(
        "runs,y_star,stderr,survived_fraction\n{},{},{},{}\n",
        a.runs,
        num(est.y_star),
        num(est.stderr),
        num(est.survived_fraction)
    );
    manifest.output(write(&a.out, &csv)?);
    manifest.save(&manifest_path)
}

fn validate(a: ValidateArgs, argv: &[String]) -> Result<(), CliError> {
    if !SUITES.contains(&a.suite.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown suite '{}'; available: {}",
            a.suite,
            SUITES.join(", ")
        )));
    }
    let opts = SuiteOptions {
        gp_cases: a.gp_cases,
        ..SuiteOptions::default()
    };
    let report = run_suite(&a.suite, &opts)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("validate", argv);
        manifest.input("suite", &a.suite);
        manifest.input("gp_cases", a.gp_cases);
        manifest.output(write(out, &(text + "\n"))?);
        manifest.save(&sibling(out, ".manifest.json"))?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!("suite '{}' failed", a.suite)))
    }
}

fn gp_solve(problem: &Path, feas_tol: f64, opt_tol: f64, out: &Path, argv: &[String]) -> Result<(), CliError> {
    let text = std::fs::read_to_string(problem).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", problem.display())))?;
    let gp = GpProblem::from_json(&text)?;
    let opts = SolverOptions {
        feas_tol,
        opt_tol,
        ..SolverOptions::default()
    };
    let sol = solve_with(&gp, &opts)?;
    let named: serde_json::Map<String, serde_json::Value> = gp
        .variables()
        .iter()
        .zip(&sol.values)
        .map(|(v, &x)| (v.name.clone(), json!(x)))
        .collect();
    let mut manifest = RunManifest::new("gp solve", argv);
    manifest.input_path("problem", problem);
    manifest.input("feas_tol", feas_tol);
    manifest.input("opt_tol", opt_tol);
    manifest.output(write_json(out, &json!({ "solution": sol, "variables": named }))?);
    manifest.save(&sibling(out, ".manifest.json"))?;
    match sol.status {
        GpStatus::Infeasible => Err(CliError::Infeasible(format!(
            "program infeasible: phase-I optimum {:.6e}",
            sol.phase1_value.unwrap_or(f64::NAN)
        ))),
        GpStatus::MaxIterations => Err(CliError::Failed("Newton step budget exhausted".into())),
        GpStatus::Optimal => Ok(()),
    }
}

fn matrix(a: MatrixArgs, argv: &[String]) -> Result<(), CliError> {
    let model = ModelFile::load(&a.model)?;
    let ep = EpidemicParams::homogeneous(model.n(), a.beta, a.delta)?;
    let m: MetzlerMatrix = match &model {
        ModelFile::Static(g) => build_static(g, &ep)?,
        ModelFile::Markov(net) => build_a1(net, &ep)?,
        ModelFile::Amei(net) => build_a2(net, &ep)?,
        ModelFile::Asis(asis) => build_a3(asis, &ep)?,
    };
    eprintln!("dimension {}, lambda_max = {:.12}", m.dim(), lambda_max(&m, DEFAULT_TOL)?);
    let mut manifest = RunManifest::new("matrix", argv);
    manifest.input_path("model", &a.model);
    manifest.input("beta", a.beta);
    manifest.input("delta", a.delta);
    manifest.output(write(&a.out, &m.to_csv())?);
    manifest.save(&sibling(&a.out, ".manifest.json"))
}
