//! Next-event simulation with full rate recomputation after every event.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{amei_default_states, Event, EventKind, NetInit, SimConfig, Trajectory};
use crate::temporal::{AmeiNet, AsisModel, EpidemicParams, MarkovTemporalNet};
use crate::{Error, Result};

struct Recorder<'a> {
    cfg: &'a SimConfig,
    next_sample: usize,
    next_snapshot: usize,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        Recorder {
            cfg,
            next_sample: 0,
            next_snapshot: 0,
            traj: Trajectory {
                events: Vec::new(),
                times: Vec::with_capacity(cfg.samples + 1),
                prevalence: Vec::with_capacity(cfg.samples + 1),
                snapshots: Vec::with_capacity(cfg.snapshot_times.len()),
            },
        }
    }

    fn sample_time(&self, k: usize) -> f64 {
        self.cfg.horizon * k as f64 / self.cfg.samples as f64
    }

    /// Records every sample and snapshot strictly before `t` using the
    /// current state.
    fn advance_to(&mut self, t: f64, x: &[bool], prevalence: u32) {
        while self.next_sample <= self.cfg.samples && self.sample_time(self.next_sample) < t {
            self.traj.times.push(self.sample_time(self.next_sample));
            self.traj.prevalence.push(prevalence);
            self.next_sample += 1;
        }
        while self.next_snapshot < self.cfg.snapshot_times.len() && self.cfg.snapshot_times[self.next_snapshot] < t {
            self.traj.snapshots.push(x.to_vec());
            self.next_snapshot += 1;
        }
    }

    fn event(&mut self, time: f64, kind: EventKind) {
        if self.cfg.record_events {
            self.traj.events.push(Event { time, kind });
        }
    }

    fn finish(mut self, x: &[bool], prevalence: u32) -> Trajectory {
        self.advance_to(f64::INFINITY, x, prevalence);
        self.traj
    }
}

/// Index `k` with `sum(rates[..k]) <= u < sum(rates[..=k])`, skipping
/// zero rates.
fn pick(rates: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &r) in rates.iter().enumerate() {
        if r > 0.0 {
            acc += r;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Draws the next event; `None` once the horizon is passed or nothing can
/// happen.
fn next_event(rng: &mut ChaCha8Rng, t: &mut f64, rates: &[f64], horizon: f64) -> Option<usize> {
    let total: f64 = rates.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let e: f64 = rng.sample(Exp1);
    *t += e / total;
    if *t > horizon {
        return None;
    }
    let u = rng.random::<f64>() * total;
    Some(pick(rates, u))
}

fn node_rates(rates: &mut [f64], x: &[bool], ep: &EpidemicParams, mut infected_neighbors: impl FnMut(usize) -> usize) {
    for i in 0..x.len() {
        rates[i] = if x[i] {
            ep.delta[i]
        } else {
            ep.beta[i] * infected_neighbors(i) as f64
        };
    }
}

fn flip(x: &mut [bool], prevalence: &mut u32, node: usize) -> EventKind {
    x[node] = !x[node];
    if x[node] {
        *prevalence += 1;
        EventKind::Infection { node }
    } else {
        *prevalence -= 1;
        EventKind::Recovery { node }
    }
}

pub fn gillespie_markov(net: &MarkovTemporalNet, ep: &EpidemicParams, cfg: &SimConfig) -> Result<Trajectory> {
    let n = net.n();
    ep.check_len(n)?;
    cfg.validate(n)?;
    let big_l = net.len();
    let mut cfg_idx = match cfg.net0 {
        NetInit::Default => 0,
        NetInit::Config(c) if c < big_l => c,
        ref other => {
            return Err(Error::InvalidParameter(format!(
                "initial state {other:?} does not fit a Markovian network"
            )))
        }
    };
    let nbrs: Vec<Vec<Vec<usize>>> = net.configs().iter().map(|g| g.neighbors()).collect();
    let targets: Vec<Vec<(usize, f64)>> = (0..big_l)
        .map(|l| {
            (0..big_l)
                .filter(|&k| k != l && net.rates()[(l, k)] > 0.0)
                .map(|k| (k, net.rates()[(l, k)]))
                .collect()
        })
        .collect();
    let mut x = cfg.x0.clone();
    let mut prevalence = x.iter().filter(|&&b| b).count() as u32;
    let mut rng = cfg.rng();
    let mut rec = Recorder::new(cfg);
    let mut rates = vec![0.0; n + big_l];
    let mut t = 0.0;
    loop {
        if prevalence == 0 && !cfg.record_events {
            break;
        }
        node_rates(&mut rates[..n], &x, ep, |i| nbrs[cfg_idx][i].iter().filter(|&&j| x[j]).count());
        rates[n..].iter_mut().for_each(|r| *r = 0.0);
        for &(k, r) in &targets[cfg_idx] {
            rates[n + k] = r;
        }
        let Some(k) = next_event(&mut rng, &mut t, &rates, cfg.horizon) else {
            break;
        };
        rec.advance_to(t, &x, prevalence);
        let kind = if k < n {
            flip(&mut x, &mut prevalence, k)
        } else {
            cfg_idx = k - n;
            EventKind::Switch { to: cfg_idx }
        };
        rec.event(t, kind);
    }
    Ok(rec.finish(&x, prevalence))
}

pub fn gillespie_amei(net: &AmeiNet, ep: &EpidemicParams, cfg: &SimConfig) -> Result<Trajectory> {
    let n = net.n();
    ep.check_len(n)?;
    cfg.validate(n)?;
    let pairs: Vec<((usize, usize), &crate::temporal::EdgeProcess)> = net.processes().iter().map(|(&k, v)| (k, v)).collect();
    let mut state: Vec<usize> = match &cfg.net0 {
        NetInit::Default => amei_default_states(net),
        NetInit::PairStates(s) if s.len() == pairs.len() && s.iter().zip(&pairs).all(|(&st, (_, p))| st < p.states()) => s.clone(),
        other => {
            return Err(Error::InvalidParameter(format!(
                "initial state {other:?} does not fit the AMEI network"
            )))
        }
    };
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (p, &((i, j), _)) in pairs.iter().enumerate() {
        incident[i].push((p, j));
        incident[j].push((p, i));
    }
    let offsets: Vec<usize> = pairs
        .iter()
        .scan(n, |acc, (_, p)| {
            let o = *acc;
            *acc += p.states();
            Some(o)
        })
        .collect();
    let total_len = n + pairs.iter().map(|(_, p)| p.states()).sum::<usize>();
    let mut x = cfg.x0.clone();
    let mut prevalence = x.iter().filter(|&&b| b).count() as u32;
    let mut rng = cfg.rng();
    let mut rec = Recorder::new(cfg);
    let mut rates = vec![0.0; total_len];
    let mut t = 0.0;
    loop {
        if prevalence == 0 && !cfg.record_events {
            break;
        }
        node_rates(&mut rates[..n], &x, ep, |i| {
            incident[i].iter().filter(|&&(p, j)| x[j] && pairs[p].1.is_active(state[p])).count()
        });
        for (p, (_, proc_)) in pairs.iter().enumerate() {
            let q = proc_.generator();
            for s in 0..proc_.states() {
                rates[offsets[p] + s] = if s == state[p] { 0.0 } else { q[(state[p], s)].max(0.0) };
            }
        }
        let Some(k) = next_event(&mut rng, &mut t, &rates, cfg.horizon) else {
            break;
        };
        rec.advance_to(t, &x, prevalence);
        let kind = if k < n {
            flip(&mut x, &mut prevalence, k)
        } else {
            let p = offsets.partition_point(|&o| o <= k) - 1;
            state[p] = k - offsets[p];
            EventKind::PairState { pair: p, state: state[p] }
        };
        rec.event(t, kind);
    }
    Ok(rec.finish(&x, prevalence))
}

pub fn gillespie_asis(m: &AsisModel, ep: &EpidemicParams, cfg: &SimConfig) -> Result<Trajectory> {
    let g0 = m.g0();
    let n = g0.n();
    ep.check_len(n)?;
    cfg.validate(n)?;
    let edges = g0.edges();
    let mut active: Vec<bool> = match &cfg.net0 {
        NetInit::Default => vec![true; edges.len()],
        NetInit::EdgeSet(s) if s.len() == edges.len() => s.clone(),
        other => {
            return Err(Error::InvalidParameter(format!(
                "initial state {other:?} does not fit the ASIS model"
            )))
        }
    };
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(i, j)) in edges.iter().enumerate() {
        incident[i].push((e, j));
        incident[j].push((e, i));
    }
    let phi = m.phi();
    let psi = m.psi();
    let mut x = cfg.x0.clone();
    let mut prevalence = x.iter().filter(|&&b| b).count() as u32;
    let mut rng = cfg.rng();
    let mut rec = Recorder::new(cfg);
    let mut rates = vec![0.0; n + edges.len()];
    let mut t = 0.0;
    loop {
        if prevalence == 0 && !cfg.record_events {
            break;
        }
        node_rates(&mut rates[..n], &x, ep, |i| {
            incident[i].iter().filter(|&&(e, j)| x[j] && active[e]).count()
        });
        for (e, &(i, j)) in edges.iter().enumerate() {
            rates[n + e] = if active[e] {
                phi[i] * f64::from(u8::from(x[i])) + phi[j] * f64::from(u8::from(x[j]))
            } else {
                psi[e]
            };
        }
        let Some(k) = next_event(&mut rng, &mut t, &rates, cfg.horizon) else {
            break;
        };
        rec.advance_to(t, &x, prevalence);
        let kind = if k < n {
            flip(&mut x, &mut prevalence, k)
        } else {
            let e = k - n;
            active[e] = !active[e];
            if active[e] {
                EventKind::EdgeRestore { edge: e }
            } else {
                EventKind::EdgeCut { edge: e }
            }
        };
        rec.event(t, kind);
    }
    Ok(rec.finish(&x, prevalence))
}
