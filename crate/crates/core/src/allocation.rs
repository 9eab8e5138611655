//! Budget-constrained tuning of infection, recovery and cutting rates.
//!
//! Each problem is assembled as a geometric program over the rates, a
//! positive vector `v` and a decay rate `lambda`, with the eigenvector
//! constraint `A v <= -lambda v` split into one posynomial inequality per
//! row. Recovery and cutting rates enter through their complements
//! `hat - rate`, which keeps every row a posynomial.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::gp::{solve_with, GpBuilder, GpSolution, GpStatus, Monomial, Posynomial, SolverOptions, VarId};
use crate::spectral::{build_a1, build_a2, build_a3, lambda_max, AsisLayout, MetzlerMatrix, DEFAULT_TOL};
use crate::temporal::{abar_matrix, AmeiNet, AsisModel, EpidemicParams, MarkovTemporalNet};
use crate::{Error, Result};

/// Lower box for every eigenvector entry; the upper box is 1.
pub const V_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    /// `c_a + c_b beta^(-shape)`, decreasing in `beta`.
    InfectionF,
    /// `c_a + c_b (hat - delta)^(-shape)`, increasing in `delta`.
    RecoveryG,
    /// `c_a + c_b (hat - phi)^(-shape)`, increasing in `phi`.
    CuttingH,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: CostKind,
    pub shape: f64,
    /// Shift constant; unused by [`CostKind::InfectionF`].
    pub hat: f64,
    pub lower: f64,
    pub upper: f64,
    /// `(c_a, c_b)`; `c_a <= 0 < c_b`.
    pub norm_constants: (f64, f64),
}

/// Builds a cost model with the normalization `f(lower) = 1/2, f(upper) =
/// 0`, `g(lower) = 0, g(upper) = 1/2` or `h(lower) = 0, h(upper) = 1`.
pub fn normalize_costs(kind: CostKind, shape: f64, hat: f64, bounds: (f64, f64)) -> Result<CostModel> {
    let (lower, upper) = bounds;
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::InvalidParameter(format!("cost shape {shape} must be positive")));
    }
    if !(lower.is_finite() && upper.is_finite() && 0.0 < lower && lower < upper) {
        return Err(Error::InvalidParameter(format!("degenerate rate interval [{lower}, {upper}]")));
    }
    let (c_a, c_b) = match kind {
        CostKind::InfectionF => {
            let c_b = 0.5 / (lower.powf(-shape) - upper.powf(-shape));
            (-c_b * upper.powf(-shape), c_b)
        }
        CostKind::RecoveryG | CostKind::CuttingH => {
            if !(hat.is_finite() && hat > upper) {
                return Err(Error::InvalidParameter(format!("hat {hat} must exceed the upper bound {upper}")));
            }
            let top = if kind == CostKind::RecoveryG { 0.5 } else { 1.0 };
            let c_b = top / ((hat - upper).powf(-shape) - (hat - lower).powf(-shape));
            (-c_b * (hat - lower).powf(-shape), c_b)
        }
    };
    Ok(CostModel {
        kind,
        shape,
        hat,
        lower,
        upper,
        norm_constants: (c_a, c_b),
    })
}

impl CostModel {
    /// The variable the GP sees: the rate itself for `f`, `hat - rate`
    /// otherwise.
    pub fn gp_variable(&self, rate: f64) -> f64 {
        match self.kind {
            CostKind::InfectionF => rate,
            _ => self.hat - rate,
        }
    }

    pub fn rate_from_gp(&self, var: f64) -> f64 {
        match self.kind {
            CostKind::InfectionF => var,
            _ => self.hat - var,
        }
    }

    /// Box of the GP variable.
    pub fn gp_box(&self) -> (f64, f64) {
        match self.kind {
            CostKind::InfectionF => (self.lower, self.upper),
            _ => (self.hat - self.upper, self.hat - self.lower),
        }
    }

    /// Rate that costs nothing.
    pub fn natural_rate(&self) -> f64 {
        match self.kind {
            CostKind::InfectionF => self.upper,
            _ => self.lower,
        }
    }

    /// Rate at the far end of the box.
    pub fn full_rate(&self) -> f64 {
        match self.kind {
            CostKind::InfectionF => self.lower,
            _ => self.upper,
        }
    }

    pub fn cost(&self, rate: f64) -> f64 {
        let (c_a, c_b) = self.norm_constants;
        c_a + c_b * self.gp_variable(rate).powf(-self.shape)
    }

    /// Rate whose cost equals `spend`, clamped to the box.
    pub fn rate_for_spend(&self, spend: f64) -> f64 {
        let (c_a, c_b) = self.norm_constants;
        let var = (c_b / (spend - c_a)).powf(1.0 / self.shape);
        self.rate_from_gp(var).clamp(self.lower, self.upper)
    }

    /// The nonconstant part `c_b var^(-shape)` as a monomial in `var`.
    fn monomial(&self, var: VarId) -> Result<Monomial> {
        Monomial::power(self.norm_constants.1, var, -self.shape)
    }
}

/// Infection and recovery cost models sharing one recovery shift `hat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCosts {
    pub f: CostModel,
    pub g: CostModel,
}

impl RateCosts {
    pub fn new(f: CostModel, g: CostModel) -> Result<Self> {
        if f.kind != CostKind::InfectionF || g.kind != CostKind::RecoveryG {
            return Err(Error::InvalidParameter("expected an infection cost and a recovery cost".into()));
        }
        Ok(RateCosts { f, g })
    }

    /// `beta in [0.8 beta_bar, beta_bar]`, `delta in [delta_low, 1.2
    /// delta_low]`, `hat = 2 delta_bar`, with the given shapes.
    pub fn improvement_20pct(beta_bar: f64, delta_low: f64, q: f64, r: f64) -> Result<Self> {
        let delta_bar = 1.2 * delta_low;
        Self::new(
            normalize_costs(CostKind::InfectionF, q, 0.0, (0.8 * beta_bar, beta_bar))?,
            normalize_costs(CostKind::RecoveryG, r, 2.0 * delta_bar, (delta_low, delta_bar))?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub beta: Vec<f64>,
    pub delta: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
}

/// Solver diagnostics carried into the allocation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub objective_value: f64,
    pub kkt_residual: f64,
    pub duality_gap: f64,
    pub phase1_value: Option<f64>,
    pub newton_steps: usize,
}

impl From<&GpSolution> for SolverReport {
    fn from(s: &GpSolution) -> Self {
        SolverReport {
            objective_value: s.objective_value,
            kkt_residual: s.kkt_residual,
            duality_gap: s.duality_gap,
            phase1_value: s.phase1_value,
            newton_steps: s.newton_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub lambda_star: f64,
    pub rates: Rates,
    pub spend: Vec<f64>,
    pub total_spend: f64,
    pub status: GpStatus,
    /// `None` when no program had to be solved (zero budget).
    pub solver: Option<SolverReport>,
    /// Positive vector with `A v <= -lambda_star v`.
    #[serde(skip)]
    pub eigenvector: Vec<f64>,
}

impl AllocationResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `node,spend` rows.
    pub fn spend_csv(&self) -> String {
        let mut out = String::from("node,spend\n");
        for (i, s) in self.spend.iter().enumerate() {
            out.push_str(&format!("{i},{s:.16e}\n"));
        }
        out
    }

    pub fn epidemic_params(&self, delta_fixed: Option<&[f64]>) -> Result<EpidemicParams> {
        let delta = match (&self.rates.delta, delta_fixed) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => d.to_vec(),
            (None, None) => return Err(Error::InvalidParameter("recovery rates unknown".into())),
        };
        EpidemicParams::new(self.rates.beta.clone(), delta)
    }
}

/// Upper box for `lambda`: no row can certify a larger decay.
fn lambda_cap(denominators: impl Iterator<Item = f64>) -> f64 {
    denominators.fold(0.0f64, f64::max)
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidParameter(format!("budget {budget} is below the zero cost floor")));
    }
    Ok(())
}

/// GP variables and their position in the registry.
struct Layout {
    rate_a: Vec<VarId>,
    rate_b: Vec<VarId>,
    v: Vec<VarId>,
    lambda: VarId,
}

fn add_vector(b: &mut GpBuilder, dim: usize) -> Vec<VarId> {
    (0..dim).map(|k| b.bounded(format!("v{k}"), V_FLOOR, 1.0)).collect()
}

fn add_rates(b: &mut GpBuilder, prefix: &str, n: usize, cost: &CostModel) -> Vec<VarId> {
    let (lo, hi) = cost.gp_box();
    (0..n).map(|i| b.bounded(format!("{prefix}{i}"), lo, hi)).collect()
}

/// `sum_i (terms_i) <= budget - sum_i c_a`, scaled to `<= 1`.
fn budget_constraint(b: &mut GpBuilder, terms: Vec<Monomial>, offset: f64, budget: f64) -> Result<()> {
    let rhs = budget - offset;
    let scaled = terms.iter().map(|m| m.scale(1.0 / rhs)).collect::<Result<Vec<_>>>()?;
    b.le_one(Posynomial::new(scaled)?);
    Ok(())
}

/// Row `(numerator terms) / (denominator * v_row) <= 1`.
fn eigen_row(b: &mut GpBuilder, numerator: Vec<Monomial>, denominator: f64, v_row: VarId) -> Result<()> {
    let inv = Monomial::power(1.0 / denominator, v_row, -1.0)?;
    b.le_one(Posynomial::new(numerator)?.mul_monomial(&inv));
    Ok(())
}

fn run(b: GpBuilder, layout: &Layout, opts: &SolverOptions) -> Result<GpSolution> {
    let gp = b.minimize(Monomial::power(1.0, layout.lambda, -1.0)?)?;
    let sol = solve_with(&gp, opts)?;
    if sol.status == GpStatus::Infeasible {
        return Err(Error::Infeasible {
            phase1_value: sol.phase1_value.unwrap_or(f64::INFINITY),
        });
    }
    Ok(sol)
}

fn finish_rates(sol: &GpSolution, layout: &Layout, costs: &RateCosts) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let beta: Vec<f64> = layout.rate_a.iter().map(|v| sol.values[v.0]).collect();
    let delta: Vec<f64> = layout.rate_b.iter().map(|v| costs.g.rate_from_gp(sol.values[v.0])).collect();
    let spend = beta
        .iter()
        .zip(&delta)
        .map(|(&bt, &dl)| costs.f.cost(bt) + costs.g.cost(dl))
        .collect();
    (beta, delta, spend)
}

/// Positive eigen-certificate for the zero-budget case: the Perron vector
/// of `m`, normalized to max 1.
fn zero_budget_certificate(m: &MetzlerMatrix) -> Result<(f64, Vec<f64>)> {
    let lam = lambda_max(m, DEFAULT_TOL)?;
    let dim = m.dim();
    // inverse iteration on (lam + eps) I - m, which is a nonnegative inverse
    let shift = lam + 1e-6 * (1.0 + lam.abs());
    let mut sys = -m.matrix().clone();
    for i in 0..dim {
        sys[(i, i)] += shift;
    }
    let mut v = DVector::from_element(dim, 1.0);
    let lu = sys.lu();
    for _ in 0..3 {
        if let Some(w) = lu.solve(&v) {
            let top = w.amax();
            if top > 0.0 && w.iter().all(|x| x.is_finite()) {
                v = w / top;
            }
        }
    }
    Ok((-lam, v.iter().map(|x| x.abs().max(V_FLOOR)).collect()))
}

fn zero_budget(m: &MetzlerMatrix, rates: Rates, n: usize) -> Result<AllocationResult> {
    let (lambda_star, eigenvector) = zero_budget_certificate(m)?;
    Ok(AllocationResult {
        lambda_star,
        rates,
        spend: vec![0.0; n],
        total_spend: 0.0,
        status: GpStatus::Optimal,
        solver: None,
        eigenvector,
    })
}

/// Optimal infection and recovery rates on a Markovian temporal network.
pub fn optimize_markov(net: &MarkovTemporalNet, costs: &RateCosts, budget: f64, opts: &SolverOptions) -> Result<AllocationResult> {
    check_budget(budget)?;
    let n = net.n();
    let big_l = net.len();
    if budget == 0.0 {
        let ep = EpidemicParams::homogeneous(n, costs.f.natural_rate(), costs.g.natural_rate())?;
        let rates = Rates {
            beta: ep.beta.clone(),
            delta: Some(ep.delta.clone()),
            phi: None,
        };
        return zero_budget(&build_a1(net, &ep)?, rates, n);
    }
    let hat = costs.g.hat;
    let pi = net.rates();
    let mut b = GpBuilder::new();
    let rate_a = add_rates(&mut b, "beta", n, &costs.f);
    let rate_b = add_rates(&mut b, "delta_tilde", n, &costs.g);
    let v = add_vector(&mut b, n * big_l);
    let cap = lambda_cap((0..big_l).map(|l| hat - pi[(l, l)]));
    let lambda = b.bounded("lambda", V_FLOOR, cap);
    let idx = |l: usize, i: usize| v[l * n + i];
    let nbrs: Vec<Vec<Vec<usize>>> = net.configs().iter().map(|g| g.neighbors()).collect();
    for l in 0..big_l {
        let den = hat - pi[(l, l)];
        for i in 0..n {
            let mut num = Vec::new();
            for k in 0..big_l {
                if k != l && pi[(k, l)] > 0.0 {
                    num.push(Monomial::power(pi[(k, l)], idx(k, i), 1.0)?);
                }
            }
            for &j in &nbrs[l][i] {
                num.push(Monomial::new(1.0, [(rate_a[i], 1.0), (idx(l, j), 1.0)])?);
            }
            num.push(Monomial::new(1.0, [(rate_b[i], 1.0), (idx(l, i), 1.0)])?);
            num.push(Monomial::new(1.0, [(lambda, 1.0), (idx(l, i), 1.0)])?);
            eigen_row(&mut b, num, den, idx(l, i))?;
        }
    }
    let mut terms = Vec::with_capacity(2 * n);
    for i in 0..n {
        terms.push(costs.f.monomial(rate_a[i])?);
        terms.push(costs.g.monomial(rate_b[i])?);
    }
    let offset = n as f64 * (costs.f.norm_constants.0 + costs.g.norm_constants.0);
    budget_constraint(&mut b, terms, offset, budget)?;
    let layout = Layout { rate_a, rate_b, v, lambda };
    let sol = run(b, &layout, opts)?;
    let (beta, delta, spend) = finish_rates(&sol, &layout, costs);
    Ok(AllocationResult {
        lambda_star: sol.values[layout.lambda.0],
        rates: Rates {
            beta,
            delta: Some(delta),
            phi: None,
        },
        total_spend: spend.iter().sum(),
        spend,
        status: sol.status,
        solver: Some(SolverReport::from(&sol)),
        eigenvector: layout.v.iter().map(|k| sol.values[k.0]).collect(),
    })
}

/// Optimal infection and recovery rates on an AMEI network, through the
/// averaged matrix `B Abar - D`.
pub fn optimize_amei(net: &AmeiNet, costs: &RateCosts, budget: f64, opts: &SolverOptions) -> Result<AllocationResult> {
    check_budget(budget)?;
    let n = net.n();
    if budget == 0.0 {
        let ep = EpidemicParams::homogeneous(n, costs.f.natural_rate(), costs.g.natural_rate())?;
        let rates = Rates {
            beta: ep.beta.clone(),
            delta: Some(ep.delta.clone()),
            phi: None,
        };
        return zero_budget(&build_a2(net, &ep)?, rates, n);
    }
    optimize_averaged(&abar_matrix(net)?, costs, budget, opts)
}

/// Same program for an arbitrary nonnegative averaged adjacency.
pub fn optimize_averaged(abar: &DMatrix<f64>, costs: &RateCosts, budget: f64, opts: &SolverOptions) -> Result<AllocationResult> {
    check_budget(budget)?;
    let n = abar.nrows();
    let hat = costs.g.hat;
    let mut b = GpBuilder::new();
    let rate_a = add_rates(&mut b, "beta", n, &costs.f);
    let rate_b = add_rates(&mut b, "delta_tilde", n, &costs.g);
    let v = add_vector(&mut b, n);
    let lambda = b.bounded("lambda", V_FLOOR, hat);
    for i in 0..n {
        let mut num = Vec::new();
        for j in 0..n {
            if abar[(i, j)] > 0.0 {
                num.push(Monomial::new(abar[(i, j)], [(rate_a[i], 1.0), (v[j], 1.0)])?);
            }
        }
        num.push(Monomial::new(1.0, [(rate_b[i], 1.0), (v[i], 1.0)])?);
        num.push(Monomial::new(1.0, [(lambda, 1.0), (v[i], 1.0)])?);
        eigen_row(&mut b, num, hat, v[i])?;
    }
    let mut terms = Vec::with_capacity(2 * n);
    for i in 0..n {
        terms.push(costs.f.monomial(rate_a[i])?);
        terms.push(costs.g.monomial(rate_b[i])?);
    }
    let offset = n as f64 * (costs.f.norm_constants.0 + costs.g.norm_constants.0);
    budget_constraint(&mut b, terms, offset, budget)?;
    let layout = Layout { rate_a, rate_b, v, lambda };
    let sol = run(b, &layout, opts)?;
    let (beta, delta, spend) = finish_rates(&sol, &layout, costs);
    Ok(AllocationResult {
        lambda_star: sol.values[layout.lambda.0],
        rates: Rates {
            beta,
            delta: Some(delta),
            phi: None,
        },
        total_spend: spend.iter().sum(),
        spend,
        status: sol.status,
        solver: Some(SolverReport::from(&sol)),
        eigenvector: layout.v.iter().map(|k| sol.values[k.0]).collect(),
    })
}

/// Optimal cutting rates on an ASIS model with fixed infection and
/// recovery rates. The `phi` stored in `model` is ignored.
pub fn optimize_asis(model: &AsisModel, ep: &EpidemicParams, h: &CostModel, budget: f64, opts: &SolverOptions) -> Result<AllocationResult> {
    check_budget(budget)?;
    if h.kind != CostKind::CuttingH {
        return Err(Error::InvalidParameter("expected a cutting cost".into()));
    }
    let g0 = model.g0();
    let n = g0.n();
    ep.check_len(n)?;
    if budget == 0.0 {
        let natural = model.with_phi(vec![h.natural_rate(); n])?;
        let rates = Rates {
            beta: ep.beta.clone(),
            delta: None,
            phi: Some(natural.phi().to_vec()),
        };
        return zero_budget(&build_a3(&natural, ep)?, rates, n);
    }
    let layout3 = AsisLayout::new(g0);
    let mut b = GpBuilder::new();
    let rate_a = add_rates(&mut b, "phi_tilde", n, h);
    let v = add_vector(&mut b, layout3.dim());
    let mut dens = Vec::new();
    for i in 0..n {
        dens.push(ep.delta[i]);
        for &j in layout3.neighbors(i) {
            let psi = model
                .psi_of(i, j)
                .ok_or_else(|| Error::InvalidModel(format!("psi missing for edge ({i}, {j})")))?;
            dens.push(h.hat + ep.delta[i] + psi);
        }
    }
    let lambda = b.bounded("lambda", V_FLOOR, lambda_cap(dens.into_iter()));
    for i in 0..n {
        let into_i = |b_i: f64| -> Result<Vec<Monomial>> {
            layout3
                .neighbors(i)
                .iter()
                .map(|&k| Monomial::power(b_i, v[layout3.pair_index(k, i)], 1.0))
                .collect()
        };
        let mut num = into_i(ep.beta[i])?;
        num.push(Monomial::new(1.0, [(lambda, 1.0), (v[i], 1.0)])?);
        eigen_row(&mut b, num, ep.delta[i], v[i])?;
        for &j in layout3.neighbors(i) {
            let row = v[layout3.pair_index(i, j)];
            let psi = model.psi_of(i, j).expect("checked above");
            let mut num = vec![Monomial::power(psi, v[i], 1.0)?];
            num.extend(into_i(ep.beta[i])?);
            num.push(Monomial::new(1.0, [(rate_a[i], 1.0), (row, 1.0)])?);
            num.push(Monomial::new(1.0, [(lambda, 1.0), (row, 1.0)])?);
            eigen_row(&mut b, num, h.hat + ep.delta[i] + psi, row)?;
        }
    }
    let terms = rate_a.iter().map(|&r| h.monomial(r)).collect::<Result<Vec<_>>>()?;
    budget_constraint(&mut b, terms, n as f64 * h.norm_constants.0, budget)?;
    let layout = Layout {
        rate_a,
        rate_b: Vec::new(),
        v,
        lambda,
    };
    let sol = run(b, &layout, opts)?;
    let phi: Vec<f64> = layout.rate_a.iter().map(|k| h.rate_from_gp(sol.values[k.0])).collect();
    let spend: Vec<f64> = phi.iter().map(|&p| h.cost(p)).collect();
    Ok(AllocationResult {
        lambda_star: sol.values[layout.lambda.0],
        rates: Rates {
            beta: ep.beta.clone(),
            delta: None,
            phi: Some(phi),
        },
        total_spend: spend.iter().sum(),
        spend,
        status: sol.status,
        solver: Some(SolverReport::from(&sol)),
        eigenvector: layout.v.iter().map(|k| sol.values[k.0]).collect(),
    })
}

/// Equal spend per node, split evenly between infection and recovery.
pub fn uniform_rates(costs: &RateCosts, n: usize, budget: f64) -> Result<EpidemicParams> {
    let each = 0.5 * budget / n as f64;
    EpidemicParams::homogeneous(n, costs.f.rate_for_spend(each), costs.g.rate_for_spend(each))
}

/// Equal spend per node on cutting rates.
pub fn uniform_phi(h: &CostModel, n: usize, budget: f64) -> Vec<f64> {
    vec![h.rate_for_spend(budget / n as f64); n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_conditions() {
        let f = normalize_costs(CostKind::InfectionF, 0.1, 0.0, (0.8, 1.0)).unwrap();
        assert!((f.cost(0.8) - 0.5).abs() < 1e-12);
        assert!(f.cost(1.0).abs() < 1e-12);
        let g = normalize_costs(CostKind::RecoveryG, 0.1, 2.4, (1.0, 1.2)).unwrap();
        assert!(g.cost(1.0).abs() < 1e-12);
        assert!((g.cost(1.2) - 0.5).abs() < 1e-12);
        let h = normalize_costs(CostKind::CuttingH, 1.0, 150.0, (0.5, 1.5)).unwrap();
        assert!(h.cost(0.5).abs() < 1e-12);
        assert!((h.cost(1.5) - 1.0).abs() < 1e-12);
        assert!(normalize_costs(CostKind::RecoveryG, 0.1, 1.1, (1.0, 1.2)).is_err());
        assert!(normalize_costs(CostKind::InfectionF, 0.1, 0.0, (1.0, 1.0)).is_err());
    }

    #[test]
    fn spend_inverse() {
        let g = normalize_costs(CostKind::RecoveryG, 0.1, 2.4, (1.0, 1.2)).unwrap();
        let d = g.rate_for_spend(0.25);
        assert!((g.cost(d) - 0.25).abs() < 1e-12);
        let f = normalize_costs(CostKind::InfectionF, 0.1, 0.0, (0.8, 1.0)).unwrap();
        let b = f.rate_for_spend(0.3);
        assert!((f.cost(b) - 0.3).abs() < 1e-12);
    }
}
