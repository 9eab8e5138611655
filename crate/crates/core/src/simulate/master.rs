//! Forward Kolmogorov equations of the joint infection and network chains.
//!
//! State index: node bits little-endian in the low `n` bits, the network
//! state (configuration index or edge bits) above them.

use super::{amei_default_states, NetInit};
use crate::temporal::{AmeiNet, AsisModel, EpidemicParams, MarkovTemporalNet};
use crate::{Error, Result};

/// Largest joint state space handled.
pub const MASTER_STATE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSolution {
    pub times: Vec<f64>,
    /// `marginals[k][i] = Pr(x_i(times[k]) = 1)`.
    pub marginals: Vec<Vec<f64>>,
}

impl ForwardSolution {
    /// Sum of the marginals at each time.
    pub fn total(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| m.iter().sum()).collect()
    }
}

struct Chain {
    n: usize,
    /// Outgoing transitions per state.
    out: Vec<Vec<(usize, f64)>>,
}

impl Chain {
    fn new(n: usize, dim: usize) -> Result<Self> {
        if n > 10 || dim > MASTER_STATE_CAP {
            return Err(Error::SizeCap(format!(
                "joint chain with n = {n} and {dim} states exceeds n <= 10, {MASTER_STATE_CAP} states"
            )));
        }
        Ok(Chain {
            n,
            out: vec![Vec::new(); dim],
        })
    }

    fn add(&mut self, from: usize, to: usize, rate: f64) {
        if rate > 0.0 {
            self.out[from].push((to, rate));
        }
    }

    /// Node transitions given per-state infection pressure.
    fn add_node_moves(&mut self, s: usize, ep: &EpidemicParams, infected_neighbors: impl Fn(usize) -> usize) {
        for i in 0..self.n {
            let bit = 1usize << i;
            if s & bit != 0 {
                self.add(s, s ^ bit, ep.delta[i]);
            } else {
                self.add(s, s | bit, ep.beta[i] * infected_neighbors(i) as f64);
            }
        }
    }

    fn derivative(&self, p: &[f64], dp: &mut [f64]) {
        dp.iter_mut().for_each(|v| *v = 0.0);
        for (s, outs) in self.out.iter().enumerate() {
            let ps = p[s];
            if ps == 0.0 {
                continue;
            }
            for &(to, r) in outs {
                let flow = ps * r;
                dp[to] += flow;
                dp[s] -= flow;
            }
        }
    }

    fn rk4(&self, p: &[f64], h: f64, scratch: &mut [Vec<f64>; 5]) -> Vec<f64> {
        let [k1, k2, k3, k4, tmp] = scratch;
        self.derivative(p, k1);
        for i in 0..p.len() {
            tmp[i] = p[i] + 0.5 * h * k1[i];
        }
        self.derivative(tmp, k2);
        for i in 0..p.len() {
            tmp[i] = p[i] + 0.5 * h * k2[i];
        }
        self.derivative(tmp, k3);
        for i in 0..p.len() {
            tmp[i] = p[i] + h * k3[i];
        }
        self.derivative(tmp, k4);
        (0..p.len())
            .map(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }

    fn marginals(&self, p: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (s, &ps) in p.iter().enumerate() {
            for (i, mi) in m.iter_mut().enumerate() {
                if s >> i & 1 == 1 {
                    *mi += ps;
                }
            }
        }
        m
    }

    /// Step-doubling RK4 with local error below `1e-12` per step.
    fn integrate(&self, start: usize, t_grid: &[f64]) -> Result<ForwardSolution> {
        if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("time grid must be sorted and nonnegative".into()));
        }
        const TOL: f64 = 1e-12;
        let dim = self.out.len();
        let mut p = vec![0.0; dim];
        p[start] = 1.0;
        let max_exit = self
            .out
            .iter()
            .map(|o| o.iter().map(|&(_, r)| r).sum::<f64>())
            .fold(0.0f64, f64::max);
        let mut h = if max_exit > 0.0 { 0.1 / max_exit } else { 1.0 };
        let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);
        let mut t = 0.0;
        let mut marginals = Vec::with_capacity(t_grid.len());
        for &target in t_grid {
            while t < target {
                let step = h.min(target - t);
                let full = self.rk4(&p, step, &mut scratch);
                let half = self.rk4(&p, 0.5 * step, &mut scratch);
                let two = self.rk4(&half, 0.5 * step, &mut scratch);
                let err = full.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max) / 15.0;
                if err <= TOL || step < 1e-14 {
                    for i in 0..dim {
                        p[i] = two[i] + (two[i] - full[i]) / 15.0;
                    }
                    t += step;
                }
                let factor = if err > 0.0 { 0.9 * (TOL / err).powf(0.2) } else { 4.0 };
                if step == h || err > TOL {
                    h = step * factor.clamp(0.1, 4.0);
                }
            }
            marginals.push(self.marginals(&p));
        }
        Ok(ForwardSolution {
            times: t_grid.to_vec(),
            marginals,
        })
    }
}

fn x_bits(x0: &[bool]) -> usize {
    x0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1usize << i).sum()
}

/// Exact marginals on a Markovian temporal network.
pub fn master_equation_marginals(
    net: &MarkovTemporalNet,
    ep: &EpidemicParams,
    x0: &[bool],
    config0: usize,
    t_grid: &[f64],
) -> Result<ForwardSolution> {
    let n = net.n();
    ep.check_len(n)?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let big_l = net.len();
    if config0 >= big_l {
        return Err(Error::InvalidParameter(format!("configuration {config0} out of range")));
    }
    let dim = (1usize << n.min(usize::BITS as usize - 1)).saturating_mul(big_l);
    let mut chain = Chain::new(n, dim)?;
    let nbrs: Vec<Vec<Vec<usize>>> = net.configs().iter().map(|g| g.neighbors()).collect();
    let nodes = 1usize << n;
    for l in 0..big_l {
        for xs in 0..nodes {
            let s = xs + l * nodes;
            chain.add_node_moves(s, ep, |i| nbrs[l][i].iter().filter(|&&j| xs >> j & 1 == 1).count());
            for k in 0..big_l {
                if k != l {
                    chain.add(s, xs + k * nodes, net.rates()[(l, k)]);
                }
            }
        }
    }
    chain.integrate(x_bits(x0) + config0 * nodes, t_grid)
}

/// Exact marginals on an AMEI network through its product configuration
/// chain.
pub fn master_equation_amei(net: &AmeiNet, ep: &EpidemicParams, x0: &[bool], net0: &NetInit, t_grid: &[f64]) -> Result<ForwardSolution> {
    let n = net.n();
    let cap = MASTER_STATE_CAP >> n.min(12);
    let markov = net.to_markov(cap.max(1))?;
    let procs: Vec<usize> = net.processes().values().map(|p| p.states()).collect();
    let default_states;
    let states = match net0 {
        NetInit::Default => {
            default_states = amei_default_states(net);
            &default_states
        }
        NetInit::PairStates(s) => s,
        other => {
            return Err(Error::InvalidParameter(format!(
                "initial state {other:?} does not fit the AMEI network"
            )))
        }
    };
    let config0 = match states {
        s if s.len() == procs.len() && s.iter().zip(&procs).all(|(a, m)| a < m) => {
            let mut idx = 0;
            let mut stride = 1;
            for (&st, &m) in s.iter().zip(&procs) {
                idx += st * stride;
                stride *= m;
            }
            idx
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "initial state {other:?} does not fit the AMEI network"
            )))
        }
    };
    master_equation_marginals(&markov, ep, x0, config0, t_grid)
}

/// Exact marginals of the adaptive SIS chain on node and edge states.
pub fn master_equation_asis(m: &AsisModel, ep: &EpidemicParams, x0: &[bool], net0: &NetInit, t_grid: &[f64]) -> Result<ForwardSolution> {
    let g0 = m.g0();
    let n = g0.n();
    ep.check_len(n)?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let edges = g0.edges();
    let bits = n + edges.len();
    if bits >= 13 {
        return Err(Error::SizeCap(format!(
            "{bits} binary state variables exceed {MASTER_STATE_CAP} states"
        )));
    }
    let active0 = match net0 {
        NetInit::Default => vec![true; edges.len()],
        NetInit::EdgeSet(s) if s.len() == edges.len() => s.clone(),
        other => {
            return Err(Error::InvalidParameter(format!(
                "initial state {other:?} does not fit the ASIS model"
            )))
        }
    };
    let dim = 1usize << bits;
    let mut chain = Chain::new(n, dim)?;
    let nodes = 1usize << n;
    for e_bits in 0..(1usize << edges.len()) {
        for xs in 0..nodes {
            let s = xs + e_bits * nodes;
            let on = |e: usize| e_bits >> e & 1 == 1;
            let inf = |i: usize| xs >> i & 1 == 1;
            chain.add_node_moves(s, ep, |i| {
                edges
                    .iter()
                    .enumerate()
                    .filter(|&(e, &(a, b))| on(e) && ((a == i && inf(b)) || (b == i && inf(a))))
                    .count()
            });
            for (e, &(a, b)) in edges.iter().enumerate() {
                let flipped = s ^ (1usize << (n + e));
                if on(e) {
                    let rate = m.phi()[a] * f64::from(u8::from(inf(a))) + m.phi()[b] * f64::from(u8::from(inf(b)));
                    chain.add(s, flipped, rate);
                } else {
                    chain.add(s, flipped, m.psi()[e]);
                }
            }
        }
    }
    let e0: usize = active0.iter().enumerate().filter(|(_, &b)| b).map(|(e, _)| 1usize << e).sum();
    chain.integrate(x_bits(x0) + e0 * nodes, t_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StaticGraph;

    #[test]
    fn pure_death() {
        let net = MarkovTemporalNet::single(StaticGraph::empty(1).unwrap());
        let ep = EpidemicParams::homogeneous(1, 1.0, 0.7).unwrap();
        let sol = master_equation_marginals(&net, &ep, &[true], 0, &[0.0, 0.5, 1.0, 3.0]).unwrap();
        for (t, m) in sol.times.iter().zip(&sol.marginals) {
            assert!((m[0] - (-0.7 * t).exp()).abs() < 1e-10, "{t} {}", m[0]);
        }
    }

    #[test]
    fn size_cap() {
        let net = MarkovTemporalNet::single(StaticGraph::empty(11).unwrap());
        let ep = EpidemicParams::homogeneous(11, 1.0, 1.0).unwrap();
        assert!(matches!(
            master_equation_marginals(&net, &ep, &[false; 11], 0, &[1.0]),
            Err(Error::SizeCap(_))
        ));
    }

    #[test]
    fn k2_symmetric() {
        let net = MarkovTemporalNet::single(StaticGraph::new(2, [(0, 1)]).unwrap());
        let ep = EpidemicParams::homogeneous(2, 2.0, 1.0).unwrap();
        let sol = master_equation_marginals(&net, &ep, &[true, true], 0, &[1.0]).unwrap();
        assert!((sol.marginals[0][0] - sol.marginals[0][1]).abs() < 1e-12);
        assert!(sol.marginals[0][0] > 0.0 && sol.marginals[0][0] < 1.0);
    }
}
