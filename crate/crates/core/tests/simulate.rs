use epictrl::exec::Execution;
use epictrl::graph::StaticGraph;
use epictrl::simulate::{
    gillespie_amei, gillespie_asis, gillespie_markov, master_equation_amei, master_equation_asis, master_equation_marginals,
    mean_field_ode, metastable_count, monte_carlo_marginals, EventKind, NetInit, SimConfig,
};
use epictrl::spectral::build_static;
use epictrl::temporal::{AmeiNet, AsisModel, EdgeProcess, EpidemicParams, MarkovTemporalNet};
use proptest::prelude::*;

fn complete(n: usize) -> StaticGraph {
    StaticGraph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).unwrap()
}

fn path(n: usize) -> StaticGraph {
    StaticGraph::new(n, (1..n).map(|i| (i - 1, i))).unwrap()
}

fn star(n: usize) -> StaticGraph {
    StaticGraph::new(n, (1..n).map(|i| (0, i))).unwrap()
}

#[test]
fn isolated_recovery_time_is_exponential() {
    let net = MarkovTemporalNet::single(StaticGraph::empty(1).unwrap());
    let delta = 0.7;
    let ep = EpidemicParams::homogeneous(1, 1.0, delta).unwrap();
    let runs = 10_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for r in 0..runs {
        let mut cfg = SimConfig::all_infected(1, 100.0, 17);
        cfg.stream = r;
        let tr = gillespie_markov(&net, &ep, &cfg).unwrap();
        let t = tr
            .events
            .iter()
            .find(|e| matches!(e.kind, EventKind::Recovery { .. }))
            .expect("recovers")
            .time;
        sum += t;
        sum_sq += t * t;
    }
    let nr = runs as f64;
    let mean = sum / nr;
    let sd = (sum_sq / nr - mean * mean).sqrt();
    assert!((mean - 1.0 / delta).abs() < 4.0 * sd / nr.sqrt(), "mean {mean}");
    assert!((sd - 1.0 / delta).abs() < 0.05 / delta, "sd {sd}");
}

#[test]
fn gillespie_matches_master_equation_on_k2() {
    let net = MarkovTemporalNet::single(complete(2));
    let ep = EpidemicParams::new(vec![1.5, 0.8], vec![1.0, 1.3]).unwrap();
    let times = [0.5, 1.0, 2.0];
    let exact = master_equation_marginals(&net, &ep, &[true, false], 0, &times).unwrap();
    let mc = monte_carlo_marginals(
        |r| {
            let mut cfg = SimConfig::new(2.5, 3, vec![true, false]);
            cfg.stream = r;
            cfg.snapshot_times = times.to_vec();
            cfg.record_events = false;
            gillespie_markov(&net, &ep, &cfg)
        },
        100_000,
        Execution::Parallel,
    )
    .unwrap();
    for (k, t) in times.iter().enumerate() {
        for i in 0..2 {
            let z = (mc.mean[k][i] - exact.marginals[k][i]).abs() / mc.stderr[k][i];
            assert!(z <= 3.0, "t={t} node {i}: {} vs {}", mc.mean[k][i], exact.marginals[k][i]);
        }
    }
}

#[test]
fn persistent_amei_edges_reduce_to_static() {
    let g = path(4);
    let amei = AmeiNet::new(4, g.edges().iter().map(|&e| (e, EdgeProcess::two_state(1.0, 1e-10).unwrap()))).unwrap();
    let ep = EpidemicParams::homogeneous(4, 0.9, 0.6).unwrap();
    let x0 = [true, false, false, true];
    let times = [0.5, 1.5, 4.0];
    let a = master_equation_amei(&amei, &ep, &x0, &NetInit::Default, &times).unwrap();
    let s = master_equation_marginals(&MarkovTemporalNet::single(g), &ep, &x0, 0, &times).unwrap();
    for (ma, ms) in a.marginals.iter().zip(&s.marginals) {
        for (x, y) in ma.iter().zip(ms) {
            assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
    }
}

#[test]
fn asis_without_cutting_is_static() {
    let g = star(4);
    let ep = EpidemicParams::homogeneous(4, 1.1, 0.9).unwrap();
    let m = AsisModel::homogeneous(g.clone(), 0.0, 2.0).unwrap();
    let x0 = [false, true, false, false];
    let times = [0.5, 2.0, 5.0];
    let a = master_equation_asis(&m, &ep, &x0, &NetInit::Default, &times).unwrap();
    let s = master_equation_marginals(&MarkovTemporalNet::single(g), &ep, &x0, 0, &times).unwrap();
    for (ma, ms) in a.marginals.iter().zip(&s.marginals) {
        for (x, y) in ma.iter().zip(ms) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

fn asis_y_star(m: &AsisModel, ep: &EpidemicParams, runs: usize, seed: u64) -> f64 {
    let n = m.g0().n();
    metastable_count(
        |r| {
            let mut cfg = SimConfig::all_infected(n, 50.0, seed);
            cfg.stream = r;
            cfg.record_events = false;
            gillespie_asis(m, ep, &cfg)
        },
        runs,
        0.5,
        Execution::Parallel,
    )
    .unwrap()
    .y_star
}

#[test]
fn metastable_limits() {
    let k5 = complete(5);
    let hot = EpidemicParams::homogeneous(5, 10.0, 1.0).unwrap();
    let still = AsisModel::homogeneous(k5.clone(), 0.0, 2.0).unwrap();
    assert!(asis_y_star(&still, &hot, 200, 1) > 4.0);
    let cutting = AsisModel::homogeneous(k5.clone(), 1e6, 2.0).unwrap();
    assert_eq!(asis_y_star(&cutting, &hot, 200, 2), 0.0);
    let cold = EpidemicParams::homogeneous(5, 0.0, 1.0).unwrap();
    assert_eq!(asis_y_star(&still, &cold, 200, 3), 0.0);
}

#[test]
fn metastable_grows_with_infection_rate() {
    let m = AsisModel::homogeneous(complete(6), 1.0, 2.0).unwrap();
    let mut prev = -1.0;
    for beta in [0.2, 1.0, 4.0] {
        let ep = EpidemicParams::homogeneous(6, beta, 1.0).unwrap();
        let y = asis_y_star(&m, &ep, 300, 5);
        assert!(y >= prev, "beta {beta}: {y} < {prev}");
        prev = y;
    }
    assert!(prev > 3.0);
}

#[test]
fn execution_modes_agree() {
    let m = AsisModel::homogeneous(complete(5), 0.5, 2.0).unwrap();
    let ep = EpidemicParams::homogeneous(5, 1.0, 1.0).unwrap();
    let run = |mode| {
        metastable_count(
            |r| {
                let mut cfg = SimConfig::all_infected(5, 20.0, 9);
                cfg.stream = r;
                gillespie_asis(&m, &ep, &cfg)
            },
            150,
            0.5,
            mode,
        )
        .unwrap()
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn mean_field_dominates_exact_marginals() {
    for (g, beta, delta) in [(star(4), 0.8, 0.5), (path(3), 2.0, 1.0), (complete(4), 0.3, 1.2)] {
        let n = g.n();
        let ep = EpidemicParams::homogeneous(n, beta, delta).unwrap();
        let mut x0 = vec![false; n];
        x0[n - 1] = true;
        let p0: Vec<f64> = x0.iter().map(|&b| f64::from(u8::from(b))).collect();
        let times: Vec<f64> = (1..=20).map(|k| 0.25 * k as f64).collect();
        let exact = master_equation_marginals(&MarkovTemporalNet::single(g.clone()), &ep, &x0, 0, &times).unwrap();
        let mf = mean_field_ode(&build_static(&g, &ep).unwrap(), &p0, &times).unwrap();
        for (e, m) in exact.marginals.iter().zip(&mf) {
            for (x, y) in e.iter().zip(m) {
                assert!(*y >= x - 1e-9, "{y} < {x}");
            }
        }
    }
}

#[test]
fn master_equation_rejects_large_systems() {
    let net = MarkovTemporalNet::single(path(11));
    let ep = EpidemicParams::homogeneous(11, 1.0, 1.0).unwrap();
    assert!(master_equation_marginals(&net, &ep, &[true; 11], 0, &[1.0]).is_err());
}

fn check_trajectory(tr: &epictrl::simulate::Trajectory, x0: &[bool], n: usize) -> Result<(), TestCaseError> {
    let mut prev = 0.0;
    let mut count: i64 = x0.iter().filter(|&&b| b).count() as i64;
    for e in &tr.events {
        prop_assert!(e.time > prev);
        prev = e.time;
        count += i64::from(e.kind.prevalence_delta());
        prop_assert!((0..=n as i64).contains(&count));
    }
    prop_assert!(tr.prevalence.iter().all(|&p| p as usize <= n));
    prop_assert_eq!(*tr.prevalence.last().unwrap() as i64, count);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_are_consistent_and_reproducible(seed in any::<u64>(), beta in 0.1f64..3.0, phi in 0.0f64..3.0) {
        let g = complete(5);
        let ep = EpidemicParams::homogeneous(5, beta, 1.0).unwrap();
        let x0 = vec![true, false, true, false, false];
        let mut cfg = SimConfig::new(10.0, seed, x0.clone());
        cfg.samples = 40;

        let m = AsisModel::homogeneous(g.clone(), phi, 2.0).unwrap();
        let a = gillespie_asis(&m, &ep, &cfg).unwrap();
        check_trajectory(&a, &x0, 5)?;
        prop_assert_eq!(&a, &gillespie_asis(&m, &ep, &cfg).unwrap());

        let amei = AmeiNet::new(5, g.edges().iter().map(|&e| (e, EdgeProcess::two_state(0.5, 1.0 + phi).unwrap()))).unwrap();
        let b = gillespie_amei(&amei, &ep, &cfg).unwrap();
        check_trajectory(&b, &x0, 5)?;
        prop_assert_eq!(&b, &gillespie_amei(&amei, &ep, &cfg).unwrap());

        let net = MarkovTemporalNet::new(vec![g.clone(), path(5)], nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0])).unwrap();
        let c = gillespie_markov(&net, &ep, &cfg).unwrap();
        check_trajectory(&c, &x0, 5)?;
        prop_assert_eq!(&c, &gillespie_markov(&net, &ep, &cfg).unwrap());
    }
}
