//! The three network classes: Markovian temporal networks, aggregated-
//! Markovian edge-independent (AMEI) networks, and adaptive SIS (ASIS)
//! models, together with their Karate Club instances.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::graph::{classify_edges, karate, spectral_bisection, EdgeClassification, Partition, StaticGraph};
use crate::linalg::lu_solve;
use crate::{Error, Result};

/// Largest state count accepted for a single pair process.
pub const MAX_EDGE_STATES: usize = 64;

/// Per-node infection rates `beta` and recovery rates `delta`.
///
/// `beta` may contain zeros (no transmission); `delta` must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
}

impl EpidemicParams {
    pub fn new(beta: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if beta.len() != delta.len() {
            return Err(Error::DimensionMismatch {
                expected: beta.len(),
                got: delta.len(),
            });
        }
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidParameter(format!("infection rate {b} must be finite and >= 0")));
        }
        if let Some(d) = delta.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidParameter(format!("recovery rate {d} must be finite and > 0")));
        }
        Ok(EpidemicParams { beta, delta })
    }

    pub fn homogeneous(n: usize, beta: f64, delta: f64) -> Result<Self> {
        Self::new(vec![beta; n], vec![delta; n])
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.n(),
            });
        }
        Ok(())
    }
}

/// A network that jumps among `L` static configurations according to a
/// continuous-time Markov chain.
///
/// `rates[(k, l)]` is the rate of the jump `configs[k] -> configs[l]`; the
/// diagonal is always stored as minus the off-diagonal row sum.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovTemporalNet {
    configs: Vec<StaticGraph>,
    rates: DMatrix<f64>,
}

impl MarkovTemporalNet {
    pub fn new(configs: Vec<StaticGraph>, rates: DMatrix<f64>) -> Result<Self> {
        let l = configs.len();
        if l == 0 {
            return Err(Error::InvalidModel("at least one configuration required".into()));
        }
        let n = configs[0].n();
        if let Some(g) = configs.iter().find(|g| g.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: g.n() });
        }
        if rates.nrows() != l || rates.ncols() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: rates.nrows(),
            });
        }
        let mut rates = rates;
        for k in 0..l {
            let mut out = 0.0;
            for m in 0..l {
                if k == m {
                    continue;
                }
                let r = rates[(k, m)];
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::InvalidModel(format!("rate {k}->{m} = {r} must be finite and >= 0")));
                }
                out += r;
            }
            rates[(k, k)] = -out;
        }
        Ok(MarkovTemporalNet { configs, rates })
    }

    /// A single static configuration (`L = 1`).
    pub fn single(g: StaticGraph) -> Self {
        MarkovTemporalNet {
            configs: vec![g],
            rates: DMatrix::zeros(1, 1),
        }
    }

    pub fn n(&self) -> usize {
        self.configs[0].n()
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn configs(&self) -> &[StaticGraph] {
        &self.configs
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    /// Rate of leaving configuration `k` (i.e. `-rates[(k, k)]`).
    pub fn exit_rate(&self, k: usize) -> f64 {
        -self.rates[(k, k)]
    }
}

#[derive(Serialize, Deserialize)]
struct MarkovFile {
    configs: Vec<StaticGraph>,
    rates: Vec<Vec<f64>>,
}

impl Serialize for MarkovTemporalNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let l = self.len();
        let rates = (0..l)
            .map(|k| (0..l).map(|m| if k == m { 0.0 } else { self.rates[(k, m)] }).collect())
            .collect();
        MarkovFile {
            configs: self.configs.clone(),
            rates,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MarkovTemporalNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = MarkovFile::deserialize(d)?;
        let l = file.rates.len();
        if file.rates.iter().any(|r| r.len() != l) {
            return Err(serde::de::Error::custom("rates must be a square matrix"));
        }
        let rates = DMatrix::from_fn(l, l, |k, m| file.rates[k][m]);
        MarkovTemporalNet::new(file.configs, rates).map_err(serde::de::Error::custom)
    }
}

/// Finite-state Markov process driving one node pair of an AMEI network.
/// The pair is connected while the process sits in an active state.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProcess {
    generator: DMatrix<f64>,
    active: Vec<bool>,
}

impl EdgeProcess {
    /// `generator` off-diagonals must be nonnegative; the diagonal is reset to
    /// minus the row sum. `active` lists 0-based active states (may be empty).
    pub fn new(generator: DMatrix<f64>, active: &[usize]) -> Result<Self> {
        let m = generator.nrows();
        if m == 0 || generator.ncols() != m {
            return Err(Error::InvalidModel("edge generator must be a non-empty square matrix".into()));
        }
        if m > MAX_EDGE_STATES {
            return Err(Error::SizeCap(format!("edge process with {m} states exceeds {MAX_EDGE_STATES}")));
        }
        let mut q = generator;
        for r in 0..m {
            let mut out = 0.0;
            for c in 0..m {
                if r != c {
                    let v = q[(r, c)];
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::InvalidModel(format!("generator entry ({r}, {c}) = {v} must be >= 0")));
                    }
                    out += v;
                }
            }
            q[(r, r)] = -out;
        }
        let mut flags = vec![false; m];
        for &s in active {
            if s >= m {
                return Err(Error::InvalidModel(format!("active state {s} out of range for {m} states")));
            }
            flags[s] = true;
        }
        Ok(EdgeProcess {
            generator: q,
            active: flags,
        })
    }

    /// Two-state process: state 0 active, state 1 inactive; activation rate
    /// `p` (1 -> 0) and deactivation rate `q` (0 -> 1).
    pub fn two_state(p: f64, q: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[-q, q, p, -p]), &[0])
    }

    pub fn states(&self) -> usize {
        self.active.len()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn is_active(&self, state: usize) -> bool {
        self.active[state]
    }

    pub fn active_states(&self) -> Vec<usize> {
        (0..self.states()).filter(|&s| self.active[s]).collect()
    }

    /// Total rate at which the pair becomes active from any inactive state
    /// (zero means an inactive pair can never switch on).
    pub fn can_activate(&self) -> bool {
        let m = self.states();
        (0..m).any(|r| !self.active[r] && (0..m).any(|c| self.active[c] && self.generator[(r, c)] > 0.0))
    }
}

/// Stationary distribution of a generator whose state graph has exactly
/// one closed communicating class. Transient states get probability zero.
pub fn stationary_distribution(q: &DMatrix<f64>) -> Result<Vec<f64>> {
    let m = q.nrows();
    // reach[a][b]: b reachable from a
    let mut reach = vec![vec![false; m]; m];
    for (a, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![a];
        row[a] = true;
        while let Some(u) = stack.pop() {
            for w in 0..m {
                if w != u && q[(u, w)] > 0.0 && !row[w] {
                    row[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    // closed class: every state reachable from it can reach it back
    let mut assigned = vec![false; m];
    let mut closed = Vec::new();
    for a in 0..m {
        if assigned[a] {
            continue;
        }
        let class: Vec<usize> = (0..m).filter(|&b| reach[a][b] && reach[b][a]).collect();
        for &b in &class {
            assigned[b] = true;
        }
        let is_closed = (0..m).all(|b| !reach[a][b] || reach[b][a]);
        if is_closed {
            closed.push(class);
        }
    }
    if closed.len() != 1 {
        return Err(Error::StationaryNotUnique {
            closed_classes: closed.len(),
        });
    }
    let class = &closed[0];
    let k = class.len();
    // Solve pi Q_c = 0 with sum(pi) = 1: replace the last equation by normalization.
    let mut sys = DMatrix::zeros(k, k);
    for (r, &sr) in class.iter().enumerate() {
        for (c, &sc) in class.iter().enumerate() {
            sys[(c, r)] = q[(sr, sc)];
        }
    }
    for c in 0..k {
        sys[(k - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let sol = lu_solve(sys, &rhs).ok_or_else(|| Error::InvalidModel("singular stationary system".into()))?;
    let mut pi = vec![0.0; m];
    for (idx, &s) in class.iter().enumerate() {
        pi[s] = sol[idx].max(0.0);
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}

/// Long-run probability that the pair is active.
pub fn stationary_activation(ep: &EdgeProcess) -> Result<f64> {
    let pi = stationary_distribution(&ep.generator)?;
    Ok(ep.active_states().iter().map(|&s| pi[s]).sum::<f64>().clamp(0.0, 1.0))
}

/// AMEI network: independent edge processes per node pair. Pairs without a
/// process are permanently disconnected.
#[derive(Debug, Clone, PartialEq)]
pub struct AmeiNet {
    n: usize,
    processes: BTreeMap<(usize, usize), EdgeProcess>,
}

impl AmeiNet {
    pub fn new(n: usize, pairs: impl IntoIterator<Item = ((usize, usize), EdgeProcess)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("AMEI network needs at least one node".into()));
        }
        let mut processes = BTreeMap::new();
        for ((i, j), ep) in pairs {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidModel(format!("invalid pair ({i}, {j}) for n = {n}")));
            }
            let key = (i.min(j), i.max(j));
            if processes.insert(key, ep).is_some() {
                return Err(Error::InvalidModel(format!("duplicate pair ({}, {})", key.0, key.1)));
            }
        }
        Ok(AmeiNet { n, processes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn processes(&self) -> &BTreeMap<(usize, usize), EdgeProcess> {
        &self.processes
    }

    /// Equivalent Markovian temporal network over the joint pair states.
    /// Configuration index encodes the pair states in mixed radix (first pair
    /// least significant). Fails when more than `max_configs` configurations
    /// would be needed.
    pub fn to_markov(&self, max_configs: usize) -> Result<MarkovTemporalNet> {
        let pairs: Vec<(&(usize, usize), &EdgeProcess)> = self.processes.iter().collect();
        let mut total: usize = 1;
        for (_, ep) in &pairs {
            total = total
                .checked_mul(ep.states())
                .filter(|&t| t <= max_configs)
                .ok_or_else(|| Error::SizeCap(format!("joint edge state space exceeds {max_configs}")))?;
        }
        let decode = |mut idx: usize| -> Vec<usize> {
            pairs
                .iter()
                .map(|(_, ep)| {
                    let s = idx % ep.states();
                    idx /= ep.states();
                    s
                })
                .collect()
        };
        let mut configs = Vec::with_capacity(total);
        let mut rates = DMatrix::zeros(total, total);
        for idx in 0..total {
            let states = decode(idx);
            let edges = pairs
                .iter()
                .zip(&states)
                .filter(|((_, ep), &s)| ep.is_active(s))
                .map(|((&e, _), _)| e);
            configs.push(StaticGraph::new(self.n, edges)?);
            let mut stride = 1;
            for ((_, ep), &s) in pairs.iter().zip(&states) {
                for t in 0..ep.states() {
                    let r = ep.generator[(s, t)];
                    if t != s && r > 0.0 {
                        let target = idx + t * stride - s * stride;
                        rates[(idx, target)] += r;
                    }
                }
                stride *= ep.states();
            }
        }
        MarkovTemporalNet::new(configs, rates)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PairSpec {
    General {
        i: usize,
        j: usize,
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        active: Vec<usize>,
    },
    TwoState {
        i: usize,
        j: usize,
        p: f64,
        q: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct AmeiFile {
    n: usize,
    pairs: Vec<PairSpec>,
}

impl Serialize for AmeiNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = self
            .processes
            .iter()
            .map(|(&(i, j), ep)| {
                let m = ep.states();
                PairSpec::General {
                    i,
                    j,
                    m,
                    q: (0..m).map(|r| (0..m).map(|c| ep.generator[(r, c)]).collect()).collect(),
                    active: ep.active_states().iter().map(|s| s + 1).collect(),
                }
            })
            .collect();
        AmeiFile { n: self.n, pairs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AmeiNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = AmeiFile::deserialize(d)?;
        let mut pairs = Vec::with_capacity(file.pairs.len());
        for spec in file.pairs {
            let (key, ep) = match spec {
                PairSpec::General { i, j, m, q, active } => {
                    if q.len() != m || q.iter().any(|r| r.len() != m) {
                        return Err(D::Error::custom(format!("pair ({i}, {j}): Q must be {m}x{m}")));
                    }
                    if active.iter().any(|&s| s == 0 || s > m) {
                        return Err(D::Error::custom(format!("pair ({i}, {j}): active states are 1..={m}")));
                    }
                    let gen = DMatrix::from_fn(m, m, |r, c| q[r][c]);
                    let act: Vec<usize> = active.iter().map(|s| s - 1).collect();
                    ((i, j), EdgeProcess::new(gen, &act).map_err(D::Error::custom)?)
                }
                PairSpec::TwoState { i, j, p, q } => ((i, j), EdgeProcess::two_state(p, q).map_err(D::Error::custom)?),
            };
            pairs.push((key, ep));
        }
        AmeiNet::new(file.n, pairs).map_err(D::Error::custom)
    }
}

/// Symmetric matrix of stationary activation probabilities.
pub fn abar_matrix(net: &AmeiNet) -> Result<DMatrix<f64>> {
    let mut a = DMatrix::zeros(net.n, net.n);
    for (&(i, j), ep) in &net.processes {
        let v = stationary_activation(ep)?;
        a[(i, j)] = v;
        a[(j, i)] = v;
    }
    Ok(a)
}

/// Adaptive SIS model: edges of `g0` are cut at rate `phi[i]` per infected
/// endpoint `i` and restored at rate `psi` (aligned with `g0.edges()`).
#[derive(Debug, Clone, PartialEq)]
pub struct AsisModel {
    g0: StaticGraph,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl AsisModel {
    /// `phi` may contain zeros (no adaptation); `psi` must be positive.
    pub fn new(g0: StaticGraph, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if phi.len() != g0.n() {
            return Err(Error::DimensionMismatch {
                expected: g0.n(),
                got: phi.len(),
            });
        }
        if psi.len() != g0.edge_count() {
            return Err(Error::InvalidModel(format!(
                "psi must be defined on each of the {} edges of g0 (got {})",
                g0.edge_count(),
                psi.len()
            )));
        }
        if let Some(x) = phi.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidParameter(format!("cutting rate {x} must be finite and >= 0")));
        }
        if let Some(x) = psi.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidParameter(format!("reconnecting rate {x} must be finite and > 0")));
        }
        Ok(AsisModel { g0, phi, psi })
    }

    pub fn homogeneous(g0: StaticGraph, phi: f64, psi: f64) -> Result<Self> {
        let n = g0.n();
        let m = g0.edge_count();
        Self::new(g0, vec![phi; n], vec![psi; m])
    }

    pub fn g0(&self) -> &StaticGraph {
        &self.g0
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Reconnecting rate of edge `{i, j}` of `g0`.
    pub fn psi_of(&self, i: usize, j: usize) -> Option<f64> {
        let key = (i.min(j), i.max(j));
        self.g0.edges().binary_search(&key).ok().map(|k| self.psi[k])
    }

    pub fn with_phi(&self, phi: Vec<f64>) -> Result<Self> {
        Self::new(self.g0.clone(), phi, self.psi.clone())
    }
}

#[derive(Serialize, Deserialize)]
struct PsiEntry {
    i: usize,
    j: usize,
    rate: f64,
}

#[derive(Serialize, Deserialize)]
struct AsisFile {
    g0: StaticGraph,
    phi: Vec<f64>,
    psi: Vec<PsiEntry>,
}

impl Serialize for AsisModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AsisFile {
            g0: self.g0.clone(),
            phi: self.phi.clone(),
            psi: self
                .g0
                .edges()
                .iter()
                .zip(&self.psi)
                .map(|(&(i, j), &rate)| PsiEntry { i, j, rate })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AsisModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = AsisFile::deserialize(d)?;
        let mut psi = vec![f64::NAN; file.g0.edge_count()];
        for e in &file.psi {
            let key = (e.i.min(e.j), e.i.max(e.j));
            let k = file
                .g0
                .edges()
                .binary_search(&key)
                .map_err(|_| D::Error::custom(format!("psi given for non-edge ({}, {})", e.i, e.j)))?;
            psi[k] = e.rate;
        }
        if let Some(k) = psi.iter().position(|x| x.is_nan()) {
            let (i, j) = file.g0.edges()[k];
            return Err(D::Error::custom(format!("psi missing for edge ({i}, {j})")));
        }
        AsisModel::new(file.g0, file.phi, psi).map_err(D::Error::custom)
    }
}

/// Activation/deactivation rates for the three Karate edge classes
/// (within cluster 1, within cluster 2, between clusters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub p: [f64; 3],
    pub q: [f64; 3],
}

impl ClassRates {
    /// `p1 = p2 = 0.1, q1 = q2 = 1, p3 = 0.02, q3 = 5`.
    pub const KARATE_DEFAULT: ClassRates = ClassRates {
        p: [0.1, 0.1, 0.02],
        q: [1.0, 1.0, 5.0],
    };

    fn validate(&self) -> Result<()> {
        for c in 0..3 {
            for (name, v) in [("p", self.p[c]), ("q", self.q[c])] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidParameter(format!("{name}{} = {v} must be > 0", c + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Active edge classes of each Karate configuration, as bitmasks with bit
/// `c - 1` set when class `c` is present: E1 = all, E2 = {1,2}, E3 = {2,3},
/// E4 = {1,3}, E5 = {1}, E6 = {2}, E7 = {3}, E8 = none.
pub const KARATE_CONFIG_CLASSES: [u8; 8] = [0b111, 0b011, 0b110, 0b101, 0b001, 0b010, 0b100, 0b000];

/// The Karate graph together with its spectral partition and edge classes.
#[derive(Debug, Clone, Serialize)]
pub struct KarateClasses {
    pub graph: StaticGraph,
    pub partition: Partition,
    pub classes: EdgeClassification,
}

pub fn karate_classes() -> KarateClasses {
    let graph = karate();
    let partition = spectral_bisection(&graph).expect("karate graph is connected");
    let classes = classify_edges(&graph, &partition).expect("partition covers karate");
    KarateClasses { graph, partition, classes }
}

/// Markovian Karate network: the three edge classes switch on and off as
/// blocks, giving eight configurations ordered as in
/// [`KARATE_CONFIG_CLASSES`].
pub fn markov_karate(rates: ClassRates) -> Result<MarkovTemporalNet> {
    rates.validate()?;
    let kc = karate_classes();
    let configs: Vec<StaticGraph> = KARATE_CONFIG_CLASSES
        .iter()
        .map(|&mask| kc.graph.filter_edges(|k, _| mask & (1 << (kc.classes.class_of[k] - 1)) != 0))
        .collect();
    let mut pi = DMatrix::zeros(8, 8);
    for (from, &a) in KARATE_CONFIG_CLASSES.iter().enumerate() {
        for (to, &b) in KARATE_CONFIG_CLASSES.iter().enumerate() {
            let diff = a ^ b;
            if diff.count_ones() != 1 {
                continue;
            }
            let c = diff.trailing_zeros() as usize;
            pi[(from, to)] = if b & diff != 0 { rates.p[c] } else { rates.q[c] };
        }
    }
    MarkovTemporalNet::new(configs, pi)
}

/// AMEI Karate network: each Karate edge of class `c` carries an
/// independent two-state process with rates `(p_c, q_c)`; every other pair
/// has activation 0 and deactivation 1.
pub fn amei_karate(rates: ClassRates) -> Result<AmeiNet> {
    rates.validate()?;
    let kc = karate_classes();
    let n = kc.graph.n();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let ep = match kc.graph.edges().binary_search(&(i, j)) {
                Ok(k) => {
                    let c = (kc.classes.class_of[k] - 1) as usize;
                    EdgeProcess::two_state(rates.p[c], rates.q[c])?
                }
                Err(_) => EdgeProcess::two_state(0.0, 1.0)?,
            };
            pairs.push(((i, j), ep));
        }
    }
    AmeiNet::new(n, pairs)
}

/// ASIS model on the Karate graph with homogeneous cutting and
/// reconnecting rates.
pub fn asis_karate(phi: f64, psi: f64) -> Result<AsisModel> {
    AsisModel::homogeneous(karate(), phi, psi)
}
