use epictrl::graph::karate;
use epictrl::simulate::{gillespie_amei, EventKind, NetInit, SimConfig};
use epictrl::temporal::{
    abar_matrix, amei_karate, karate_classes, markov_karate, stationary_activation, AmeiNet, ClassRates, EdgeProcess, EpidemicParams,
};

const RATES: ClassRates = ClassRates::KARATE_DEFAULT;

#[test]
fn markov_karate_hypercube() {
    let net = markov_karate(RATES).unwrap();
    assert_eq!(net.len(), 8);
    let pi = net.rates();
    let nonzero = (0..8)
        .flat_map(|k| (0..8).map(move |l| (k, l)))
        .filter(|&(k, l)| k != l && pi[(k, l)] > 0.0)
        .count();
    assert_eq!(nonzero, 24);
    // configuration 8 (empty) to configuration 5 (class 1 only) and back
    assert_eq!(pi[(7, 4)], RATES.p[0]);
    assert_eq!(pi[(4, 7)], RATES.q[0]);
    assert_eq!(net.configs()[0], karate());
    assert_eq!(net.configs()[7].edge_count(), 0);
}

#[test]
fn markov_karate_irreducible_and_covering() {
    let net = markov_karate(RATES).unwrap();
    let mut union = std::collections::BTreeSet::new();
    for g in net.configs() {
        union.extend(g.edges().iter().copied());
    }
    assert_eq!(union.len(), 78);
    for start in 0..8 {
        let mut seen = [false; 8];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            for (l, s) in seen.iter_mut().enumerate() {
                if !*s && net.rates()[(k, l)] > 0.0 {
                    *s = true;
                    stack.push(l);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}

#[test]
fn amei_karate_pair_processes() {
    let net = amei_karate(RATES).unwrap();
    let kc = karate_classes();
    assert_eq!(net.processes().len(), 34 * 33 / 2);
    let activatable = net.processes().values().filter(|p| p.can_activate()).count();
    assert_eq!(activatable, 78);
    let non_edge = (0..34)
        .flat_map(|i| (i + 1..34).map(move |j| (i, j)))
        .find(|&(i, j)| !kc.graph.has_edge(i, j))
        .unwrap();
    let g = net.processes()[&non_edge].generator();
    assert_eq!(g[(1, 0)], 0.0);
    assert_eq!(g[(0, 1)], 1.0);
    let k3 = kc.classes.class_of.iter().position(|&c| c == 3).unwrap();
    let g = net.processes()[&kc.graph.edges()[k3]].generator();
    assert_eq!((g[(1, 0)], g[(0, 1)]), (0.02, 5.0));
}

#[test]
fn abar_properties() {
    let net = amei_karate(RATES).unwrap();
    let kc = karate_classes();
    let a = abar_matrix(&net).unwrap();
    assert_eq!(a, a.transpose());
    assert!(a.diagonal().iter().all(|&x| x == 0.0));
    assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));
    let sgn = a.map(|x| if x > 0.0 { 1.0 } else { 0.0 });
    assert_eq!(sgn, kc.graph.adjacency());
    let k1 = kc.classes.class_of.iter().position(|&c| c == 1).unwrap();
    let (i, j) = kc.graph.edges()[k1];
    assert!((a[(i, j)] - 0.1 / 1.1).abs() < 1e-14);
}

#[test]
fn stationary_activation_examples() {
    let ep = EdgeProcess::two_state(0.1, 1.0).unwrap();
    assert!((stationary_activation(&ep).unwrap() - 1.0 / 11.0).abs() < 1e-14);
    let absorbing = EdgeProcess::two_state(0.0, 2.0).unwrap();
    assert_eq!(stationary_activation(&absorbing).unwrap(), 0.0);
}

/// Long-run active fraction of a simulated pair against `p / (p + q)`.
#[test]
fn stationary_activation_matches_simulated_fraction() {
    let (p, q) = (0.3, 0.7);
    let net = AmeiNet::new(2, [((0, 1), EdgeProcess::two_state(p, q).unwrap())]).unwrap();
    let ep = EpidemicParams::homogeneous(2, 0.5, 1.0).unwrap();
    let horizon = 40.0;
    let runs = 2000;
    let fractions: Vec<f64> = (0..runs)
        .map(|r| {
            let mut cfg = SimConfig::new(horizon, 99, vec![false, false]);
            cfg.stream = r;
            // stationary start: active in 3 of every 10 runs
            let start_active = r % 10 < 3;
            cfg.net0 = NetInit::PairStates(vec![usize::from(!start_active)]);
            let tr = gillespie_amei(&net, &ep, &cfg).unwrap();
            let mut active = start_active;
            let (mut last, mut on) = (0.0, 0.0);
            for e in &tr.events {
                if let EventKind::PairState { state, .. } = e.kind {
                    if active {
                        on += e.time - last;
                    }
                    last = e.time;
                    active = state == 0;
                }
            }
            if active {
                on += horizon - last;
            }
            on / horizon
        })
        .collect();
    let mean = fractions.iter().sum::<f64>() / runs as f64;
    let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let stderr = (var / runs as f64).sqrt();
    let exact = stationary_activation(&EdgeProcess::two_state(p, q).unwrap()).unwrap();
    assert!((mean - exact).abs() < 3.0 * stderr, "{mean} vs {exact} (stderr {stderr})");
}

#[test]
fn nonpositive_rates_rejected() {
    let mut bad = RATES;
    bad.q[2] = 0.0;
    assert!(markov_karate(bad).is_err());
    assert!(amei_karate(bad).is_err());
}
