//! Phase-I plus log-barrier Newton method on the log-space program.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::problem::{to_convex, ConvexProgram, GpProblem};
use crate::linalg::lu_solve;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    /// Relative objective accuracy (log-space duality gap).
    pub opt_tol: f64,
    pub max_newton_steps: usize,
    pub barrier_growth: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-6,
            opt_tol: 1e-8,
            max_newton_steps: 5000,
            barrier_growth: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSolution {
    /// Indexed by variable id.
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub status: GpStatus,
    pub kkt_residual: f64,
    /// Final `m / t` of the barrier path (log-space).
    pub duality_gap: f64,
    /// Optimal value of the phase-I problem when it was run.
    pub phase1_value: Option<f64>,
    pub newton_steps: usize,
}

pub fn solve(gp: &GpProblem, feas_tol: f64, opt_tol: f64) -> Result<GpSolution> {
    solve_with(
        gp,
        &SolverOptions {
            feas_tol,
            opt_tol,
            ..SolverOptions::default()
        },
    )
}

#[derive(Debug, Clone, Copy)]
enum Cons {
    Lse(usize),
    Lower(usize, f64),
    Upper(usize, f64),
    /// `-s - 1 <= 0` in phase I.
    Floor,
}

struct Barrier<'a> {
    cp: &'a ConvexProgram,
    cons: Vec<Cons>,
    phase1: bool,
    relax: f64,
    dim: usize,
    eq_a: DMatrix<f64>,
    eq_b: DVector<f64>,
}

impl<'a> Barrier<'a> {
    fn new(cp: &'a ConvexProgram, phase1: bool, relax: f64) -> Self {
        let mut cons: Vec<Cons> = (0..cp.ineq.len()).map(Cons::Lse).collect();
        let mut eq_rows: Vec<(Vec<(usize, f64)>, f64)> = cp.eq.iter().map(|e| (e.a.clone(), -e.b)).collect();
        for (k, &(lo, hi)) in cp.bounds.iter().enumerate() {
            match (lo, hi) {
                (Some(l), Some(u)) if l == u => eq_rows.push((vec![(k, 1.0)], l)),
                _ => {
                    if let Some(l) = lo {
                        cons.push(Cons::Lower(k, l));
                    }
                    if let Some(u) = hi {
                        cons.push(Cons::Upper(k, u));
                    }
                }
            }
        }
        if phase1 {
            cons.push(Cons::Floor);
        }
        let dim = cp.dim + usize::from(phase1);
        let mut eq_a = DMatrix::zeros(eq_rows.len(), dim);
        let mut eq_b = DVector::zeros(eq_rows.len());
        for (r, (a, b)) in eq_rows.iter().enumerate() {
            for &(k, e) in a {
                eq_a[(r, k)] += e;
            }
            eq_b[r] = *b;
        }
        Barrier {
            cp,
            cons,
            phase1,
            relax,
            dim,
            eq_a,
            eq_b,
        }
    }

    fn shift(&self, z: &[f64]) -> f64 {
        if self.phase1 {
            z[self.cp.dim]
        } else {
            0.0
        }
    }

    fn con_value(&self, c: Cons, z: &[f64]) -> f64 {
        let s = self.shift(z);
        match c {
            Cons::Lse(i) => self.cp.ineq[i].value(z) - self.relax - s,
            Cons::Lower(k, l) => l - z[k] - s,
            Cons::Upper(k, u) => z[k] - u - s,
            Cons::Floor => -z[self.cp.dim] - 1.0,
        }
    }

    fn objective(&self, z: &[f64]) -> f64 {
        if self.phase1 {
            z[self.cp.dim]
        } else {
            self.cp.objective.value(z)
        }
    }

    /// Barrier function, `+inf` outside the strict interior.
    fn phi(&self, z: &[f64], t: f64) -> f64 {
        let mut acc = t * self.objective(z);
        for &c in &self.cons {
            let f = self.con_value(c, z);
            if !(f < 0.0) {
                return f64::INFINITY;
            }
            acc -= (-f).ln();
        }
        acc
    }

    fn derivatives(&self, z: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim;
        let mut g = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        let sidx = self.cp.dim;
        if self.phase1 {
            g[sidx] += t;
        } else {
            let lse = &self.cp.objective;
            let (_, lg, lh) = lse.local_derivatives(z);
            let vars = lse.vars();
            let m = vars.len();
            for (a, &i) in vars.iter().enumerate() {
                g[i] += t * lg[a];
                for (b, &j) in vars.iter().enumerate() {
                    h[(i, j)] += t * lh[a * m + b];
                }
            }
        }
        let mut idx: Vec<usize> = Vec::new();
        let mut grad: Vec<f64> = Vec::new();
        for &c in &self.cons {
            idx.clear();
            grad.clear();
            let mut local_h: Option<(Vec<f64>, usize)> = None;
            let f = match c {
                Cons::Lse(i) => {
                    let lse = &self.cp.ineq[i];
                    let (v, lg, lh) = lse.local_derivatives(z);
                    idx.extend_from_slice(lse.vars());
                    grad.extend_from_slice(&lg);
                    local_h = Some((lh, lg.len()));
                    v - self.relax - self.shift(z)
                }
                Cons::Lower(k, l) => {
                    idx.push(k);
                    grad.push(-1.0);
                    l - z[k] - self.shift(z)
                }
                Cons::Upper(k, u) => {
                    idx.push(k);
                    grad.push(1.0);
                    z[k] - u - self.shift(z)
                }
                Cons::Floor => {
                    idx.push(sidx);
                    grad.push(-1.0);
                    -z[sidx] - 1.0
                }
            };
            if self.phase1 && !matches!(c, Cons::Floor) {
                idx.push(sidx);
                grad.push(-1.0);
            }
            let inv = 1.0 / -f;
            for (a, &i) in idx.iter().enumerate() {
                g[i] += grad[a] * inv;
                for (b, &j) in idx.iter().enumerate() {
                    h[(i, j)] += grad[a] * grad[b] * inv * inv;
                }
            }
            if let Some((lh, m)) = local_h {
                for a in 0..m {
                    for b in 0..m {
                        h[(idx[a], idx[b])] += lh[a * m + b] * inv;
                    }
                }
            }
        }
        (g, h)
    }

    /// Newton direction; equality-constrained via the KKT system.
    fn newton_step(&self, g: &DVector<f64>, h: DMatrix<f64>) -> Option<DVector<f64>> {
        let d = self.dim;
        let p = self.eq_a.nrows();
        if p == 0 {
            return boosted_cholesky_solve(h, &-g);
        }
        let mut kkt = DMatrix::zeros(d + p, d + p);
        kkt.view_mut((0, 0), (d, d)).copy_from(&h);
        kkt.view_mut((d, 0), (p, d)).copy_from(&self.eq_a);
        kkt.view_mut((0, d), (d, p)).copy_from(&self.eq_a.transpose());
        let mut rhs = DVector::zeros(d + p);
        rhs.rows_mut(0, d).copy_from(&-g);
        lu_solve(kkt, &rhs).map(|sol| sol.rows(0, d).into_owned())
    }

    /// Stationarity residual `||grad/t + A^T nu||` with least-squares `nu`.
    fn stationarity(&self, z: &[f64], t: f64) -> f64 {
        let (g, _) = self.derivatives(z, t);
        let g = g / t;
        if self.eq_a.nrows() == 0 {
            return g.norm();
        }
        let a = &self.eq_a;
        let aat = a * a.transpose();
        match lu_solve(aat, &-(a * &g)) {
            Some(nu) => (g + a.transpose() * nu).norm(),
            None => g.norm(),
        }
    }

    /// Orthogonal projection onto the equality set.
    fn project(&self, y: &mut DVector<f64>) -> Result<()> {
        let a = &self.eq_a;
        if a.nrows() == 0 {
            return Ok(());
        }
        let resid = a * &*y - &self.eq_b;
        let corr = lu_solve(a * a.transpose(), &resid).ok_or(Error::Infeasible {
            phase1_value: f64::INFINITY,
        })?;
        *y -= a.transpose() * corr;
        if (a * &*y - &self.eq_b).amax() > 1e-9 {
            return Err(Error::Infeasible {
                phase1_value: f64::INFINITY,
            });
        }
        Ok(())
    }
}

fn boosted_cholesky_solve(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let mut boost = 0.0;
    for _ in 0..20 {
        let mut m = h.clone();
        if boost > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += boost;
            }
        }
        if let Some(ch) = Cholesky::new(m) {
            let x = ch.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        boost = if boost == 0.0 { scale * 1e-14 } else { boost * 100.0 };
    }
    None
}

enum Centering {
    Done,
    Stalled,
    Exhausted,
    Early,
}

/// Minimizes `phi(., t)` from a strictly feasible `z`.
fn center(b: &Barrier, z: &mut DVector<f64>, t: f64, budget: &mut usize, early: &dyn Fn(&DVector<f64>) -> bool) -> Centering {
    const ALPHA: f64 = 0.01;
    const BETA: f64 = 0.5;
    let mut prev_dec = f64::INFINITY;
    loop {
        if *budget == 0 {
            return Centering::Exhausted;
        }
        *budget -= 1;
        let (g, h) = b.derivatives(z.as_slice(), t);
        let Some(dz) = b.newton_step(&g, h) else {
            return Centering::Stalled;
        };
        let dec = -g.dot(&dz);
        if !(dec.is_finite()) {
            return Centering::Stalled;
        }
        // Below 1e-4 Newton converges quadratically; a stalled decrement
        // means the rounding floor has been reached.
        if dec / 2.0 <= 1e-20 || (dec < 1e-4 && dec > 0.9 * prev_dec) {
            return Centering::Done;
        }
        prev_dec = dec;
        // Barrier values there are dominated by rounding, so only strict
        // feasibility is enforced.
        let pure = dec < 1e-4;
        let phi0 = b.phi(z.as_slice(), t);
        let mut step = 1.0;
        loop {
            let cand = &*z + &dz * step;
            if cand == *z {
                return Centering::Stalled;
            }
            let phi1 = b.phi(cand.as_slice(), t);
            if phi1.is_finite() && (pure || phi1 <= phi0 - ALPHA * step * dec) {
                *z = cand;
                if early(z) {
                    return Centering::Early;
                }
                break;
            }
            step *= BETA;
            if step < 1e-16 {
                return Centering::Stalled;
            }
        }
    }
}

/// Runs the barrier path from a strictly feasible `z`; stops early when
/// `stop(z, gap)` holds after a centering.
fn path(
    b: &Barrier,
    z: &mut DVector<f64>,
    opts: &SolverOptions,
    gap_target: f64,
    budget: &mut usize,
    early: &dyn Fn(&DVector<f64>) -> bool,
    mut stop: impl FnMut(&DVector<f64>, f64) -> bool,
) -> (bool, f64, f64) {
    let m = b.cons.len().max(1) as f64;
    let mut t = 1.0;
    loop {
        let outcome = center(b, z, t, budget, early);
        let gap = m / t;
        match outcome {
            Centering::Exhausted => return (false, gap, t),
            Centering::Early => return (true, gap, t),
            _ => {}
        }
        if stop(z, gap) || gap < gap_target {
            return (true, gap, t);
        }
        t *= opts.barrier_growth;
    }
}

/// Half-width of the log-space region searched by phase I along
/// coordinates without a box.
const PHASE1_RADIUS: f64 = 40.0;

pub fn solve_with(gp: &GpProblem, opts: &SolverOptions) -> Result<GpSolution> {
    if !(opts.feas_tol > 0.0 && opts.opt_tol > 0.0 && opts.barrier_growth > 1.0) {
        return Err(Error::InvalidParameter("tolerances must be positive and growth > 1".into()));
    }
    let cp = to_convex(gp);
    let n = cp.dim;
    let mut y0 = DVector::from_iterator(
        n,
        cp.bounds.iter().map(|&(lo, hi)| match (lo, hi) {
            (Some(l), Some(u)) => 0.5 * (l + u),
            (Some(l), None) => l + 1.0,
            (None, Some(u)) => u - 1.0,
            (None, None) => 0.0,
        }),
    );
    let plain = Barrier::new(&cp, false, 0.0);
    let mut budget = opts.max_newton_steps;
    let infeasible = |phase1_value: f64, y: &DVector<f64>, steps: usize| -> Result<GpSolution> {
        let values: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        Ok(GpSolution {
            objective_value: gp.objective().evaluate(&values)?,
            values,
            status: GpStatus::Infeasible,
            kkt_residual: f64::NAN,
            duality_gap: f64::NAN,
            phase1_value: Some(phase1_value),
            newton_steps: steps,
        })
    };
    if plain.project(&mut y0).is_err() {
        return infeasible(f64::INFINITY, &y0, 0);
    }

    let worst = plain
        .cons
        .iter()
        .map(|&c| plain.con_value(c, y0.as_slice()))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut relax = 0.0;
    let mut phase1_value = None;
    let mut y = y0.clone();
    if worst >= 0.0 || !worst.is_finite() {
        // Phase I needs a bounded search region in every coordinate.
        let mut cp1 = cp.clone();
        for (k, b) in cp1.bounds.iter_mut().enumerate() {
            b.0 = b.0.or(Some(y0[k] - PHASE1_RADIUS));
            b.1 = b.1.or(Some(y0[k] + PHASE1_RADIUS));
        }
        let pb = Barrier::new(&cp1, true, 0.0);
        let mut z = DVector::zeros(n + 1);
        z.rows_mut(0, n).copy_from(&y0);
        z[n] = worst.max(0.0) + 1.0;
        let target = 1e-3 * opts.feas_tol;
        // any centered point with s < 0 is a usable start for phase II
        let (finished, _, _) = path(&pb, &mut z, opts, target, &mut budget, &|z| z[n] < -1e-2, |z, gap| {
            z[n] < 0.0 || z[n] - gap > opts.feas_tol
        });
        let s = z[n];
        phase1_value = Some(s);
        y = z.rows(0, n).into_owned();
        let rmax = opts.feas_tol.ln_1p();
        if s >= 0.0 {
            if s < rmax {
                relax = 0.5 * (s + rmax);
            } else if finished {
                return infeasible(s, &y, opts.max_newton_steps - budget);
            } else {
                let values: Vec<f64> = y.iter().map(|v| v.exp()).collect();
                return Ok(GpSolution {
                    objective_value: gp.objective().evaluate(&values)?,
                    values,
                    status: GpStatus::MaxIterations,
                    kkt_residual: f64::NAN,
                    duality_gap: f64::NAN,
                    phase1_value,
                    newton_steps: opts.max_newton_steps - budget,
                });
            }
        }
    }

    let b = Barrier::new(&cp, false, relax);
    let (finished, gap, t) = path(&b, &mut y, opts, opts.opt_tol, &mut budget, &|_| false, |_, _| false);
    let values: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    Ok(GpSolution {
        objective_value: gp.objective().evaluate(&values)?,
        kkt_residual: b.stationarity(y.as_slice(), t),
        values,
        status: if finished { GpStatus::Optimal } else { GpStatus::MaxIterations },
        duality_gap: gap,
        phase1_value,
        newton_steps: opts.max_newton_steps - budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{GpBuilder, Monomial, Posynomial};

    #[test]
    fn bound_tight() {
        let mut b = GpBuilder::new();
        let x = b.variable("x", None, None);
        b.le_one(Monomial::power(1.0, x, -1.0).unwrap());
        let gp = b.minimize(Monomial::var(x)).unwrap();
        let sol = solve(&gp, 1e-6, 1e-9).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!((sol.values[0] - 1.0).abs() < 1e-6, "{sol:?}");
        assert!((sol.objective_value - 1.0).abs() < 1e-6);
        assert!(sol.kkt_residual < 1e-6);
    }

    #[test]
    fn am_gm_equality_case() {
        let mut b = GpBuilder::new();
        let x = b.variable("x", None, None);
        let y = b.variable("y", None, None);
        b.le_one(Monomial::new(1.0, [(x, -1.0), (y, -1.0)]).unwrap());
        let gp = b.minimize(Posynomial::from(Monomial::var(x)) + Monomial::var(y)).unwrap();
        let sol = solve(&gp, 1e-6, 1e-9).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-7, "{sol:?}");
        assert!((sol.values[0] - 1.0).abs() < 1e-3);
        assert!((sol.values[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn phase_one_reaches_far_feasible_set() {
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 1e-3, 1e3);
        b.le_one(Monomial::power(100.0, x, -1.0).unwrap());
        let gp = b.minimize(Monomial::var(x)).unwrap();
        let sol = solve(&gp, 1e-6, 1e-9).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!(sol.phase1_value.is_some());
        assert!((sol.values[0] - 100.0).abs() < 1e-4);
    }

    #[test]
    fn infeasible_constant_constraint() {
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 0.5, 2.0);
        b.le_one(Monomial::constant(2.0).unwrap());
        let gp = b.minimize(Monomial::var(x)).unwrap();
        let sol = solve(&gp, 1e-6, 1e-9).unwrap();
        assert_eq!(sol.status, GpStatus::Infeasible);
        assert!(sol.phase1_value.unwrap() > 0.5);
    }

    #[test]
    fn equality_constraints() {
        // min x + y s.t. x / y = 4 -> boxes bind y at its lower end
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 0.1, 10.0);
        let y = b.bounded("y", 0.5, 10.0);
        b.eq_one(Monomial::new(0.25, [(x, 1.0), (y, -1.0)]).unwrap());
        let gp = b.minimize(Posynomial::from(Monomial::var(x)) + Monomial::var(y)).unwrap();
        let sol = solve(&gp, 1e-6, 1e-10).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!((sol.objective_value - 2.5).abs() < 1e-6, "{sol:?}");
        assert!(sol.kkt_residual < 1e-6, "{sol:?}");
    }

    #[test]
    fn fixed_box_acts_as_equality() {
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 3.0, 3.0);
        let y = b.variable("y", None, None);
        b.le_one(Monomial::new(1.0, [(x, -1.0), (y, -1.0)]).unwrap());
        let gp = b.minimize(Monomial::var(y)).unwrap();
        let sol = solve(&gp, 1e-6, 1e-10).unwrap();
        assert_eq!(sol.status, GpStatus::Optimal);
        assert!((sol.values[0] - 3.0).abs() < 1e-7, "{sol:?}");
        assert!((sol.objective_value - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic() {
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 0.01, 100.0);
        let y = b.bounded("y", 0.01, 100.0);
        b.le_one(Posynomial::from(Monomial::new(0.3, [(x, -1.0)]).unwrap()) + Monomial::new(0.2, [(y, -2.0)]).unwrap());
        let gp = b
            .minimize(Posynomial::from(Monomial::var(x)) + Monomial::new(2.0, [(y, 1.0), (x, 0.5)]).unwrap())
            .unwrap();
        assert_eq!(solve(&gp, 1e-6, 1e-8).unwrap(), solve(&gp, 1e-6, 1e-8).unwrap());
    }
}
