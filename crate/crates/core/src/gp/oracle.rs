//! Exhaustive search over a log-space lattice, for validating the solver on
//! problems with at most four variables.

use crate::exec::{map_indexed, Execution};
use crate::{Error, Result};

use super::posynomial::Monomial;
use super::problem::GpProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub values: Vec<f64>,
    pub objective: f64,
}

struct Term {
    coeff: f64,
    /// Per-axis factor tables; `None` if the variable is absent.
    tables: Vec<Option<Vec<f64>>>,
}

enum Group {
    Objective,
    Ineq,
    Eq(f64),
}

/// Best feasible lattice point, or `None` when no lattice point is feasible.
pub fn grid_oracle(gp: &GpProblem, boxes: &[(f64, f64)], step: f64) -> Result<Option<GridPoint>> {
    grid_oracle_with(gp, boxes, step, Execution::default())
}

pub fn grid_oracle_with(gp: &GpProblem, boxes: &[(f64, f64)], step: f64, mode: Execution) -> Result<Option<GridPoint>> {
    let nv = gp.num_variables();
    if nv == 0 || nv > 4 {
        return Err(Error::InvalidParameter(format!("grid oracle supports 1 to 4 variables, got {nv}")));
    }
    if boxes.len() != nv {
        return Err(Error::DimensionMismatch {
            expected: nv,
            got: boxes.len(),
        });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("step {step} must be positive")));
    }
    let axes: Vec<Vec<f64>> = boxes
        .iter()
        .map(|&(l, u)| {
            if !(l > 0.0 && u >= l && u.is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid box [{l}, {u}]")));
            }
            let (a, b) = (l.ln(), u.ln());
            let k = ((b - a) / step).floor() as usize;
            let mut ys: Vec<f64> = (0..=k).map(|i| a + i as f64 * step).collect();
            if b - ys[k] > 1e-12 {
                ys.push(b);
            }
            Ok(ys)
        })
        .collect::<Result<_>>()?;

    let mut terms: Vec<Term> = Vec::new();
    let mut groups: Vec<(Group, std::ops::Range<usize>)> = Vec::new();
    let mut push = |ms: &[Monomial], g: Group, terms: &mut Vec<Term>| {
        let start = terms.len();
        for m in ms {
            let mut tables: Vec<Option<Vec<f64>>> = vec![None; nv];
            for &(v, a) in m.exponents() {
                tables[v.0] = Some(axes[v.0].iter().map(|y| (a * y).exp()).collect());
            }
            terms.push(Term { coeff: m.coeff(), tables });
        }
        groups.push((g, start..terms.len()));
    };
    push(gp.objective().terms(), Group::Objective, &mut terms);
    for p in gp.ineq() {
        push(p.terms(), Group::Ineq, &mut terms);
    }
    for m in gp.eq() {
        let slack = 0.5 * step * m.exponents().iter().map(|(_, a)| a.abs()).sum::<f64>() + 1e-12;
        push(std::slice::from_ref(m), Group::Eq(slack), &mut terms);
    }

    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let slices = map_indexed(mode, sizes[0], |k0| {
        let mut idx = vec![0usize; nv];
        idx[0] = k0;
        let nt = terms.len();
        // acc[d][t]: product of the coefficient and the factors of axes < d
        let mut acc = vec![vec![0.0; nt]; nv + 1];
        for (t, term) in terms.iter().enumerate() {
            acc[0][t] = term.coeff;
        }
        let refresh = |acc: &mut Vec<Vec<f64>>, idx: &[usize], from: usize| {
            for d in from..nv {
                let (lo, hi) = acc.split_at_mut(d + 1);
                for (t, term) in terms.iter().enumerate() {
                    hi[0][t] = match &term.tables[d] {
                        Some(tab) => lo[d][t] * tab[idx[d]],
                        None => lo[d][t],
                    };
                }
            }
        };
        refresh(&mut acc, &idx, 0);
        let mut best: Option<(f64, Vec<usize>)> = None;
        loop {
            let vals = &acc[nv];
            let mut objective = f64::NAN;
            let mut feasible = true;
            for (g, range) in &groups {
                let s: f64 = vals[range.clone()].iter().sum();
                match g {
                    Group::Objective => {
                        objective = s;
                        if best.as_ref().is_some_and(|(b, _)| s >= *b) {
                            feasible = false;
                        }
                    }
                    Group::Ineq => feasible = s <= 1.0,
                    Group::Eq(slack) => feasible = s.ln().abs() <= *slack,
                }
                if !feasible {
                    break;
                }
            }
            if feasible {
                best = Some((objective, idx.clone()));
            }
            // odometer over axes 1..nv
            let mut d = nv;
            loop {
                if d == 1 {
                    return best;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < sizes[d] {
                    break;
                }
                idx[d] = 0;
            }
            refresh(&mut acc, &idx, d);
        }
    });
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cand in slices.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| cand.0 < *b) {
            best = Some(cand);
        }
    }
    Ok(best.map(|(objective, idx)| GridPoint {
        values: idx.iter().enumerate().map(|(d, &k)| axes[d][k].exp()).collect(),
        objective,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{GpBuilder, Monomial};

    #[test]
    fn tight_bound() {
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 0.5, 2.0);
        b.le_one(Monomial::power(1.0, x, -1.0).unwrap());
        let gp = b.minimize(Monomial::var(x)).unwrap();
        let p = grid_oracle(&gp, &[(0.5, 2.0)], 1e-3).unwrap().unwrap();
        assert!((p.values[0] - 1.0).abs() < 2e-3, "{p:?}");
    }

    #[test]
    fn constant_constraint_infeasible() {
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 0.5, 2.0);
        b.le_one(Monomial::constant(2.0).unwrap());
        let gp = b.minimize(Monomial::var(x)).unwrap();
        assert_eq!(grid_oracle(&gp, &[(0.5, 2.0)], 1e-2).unwrap(), None);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut b = GpBuilder::new();
        let x = b.bounded("x", 0.5, 2.0);
        let y = b.bounded("y", 0.5, 2.0);
        b.le_one(Monomial::new(1.0, [(x, -1.0), (y, -1.0)]).unwrap());
        let gp = b
            .minimize(crate::gp::Posynomial::from(Monomial::var(x)) + Monomial::new(2.0, [(y, 1.0)]).unwrap())
            .unwrap();
        let bx = [(0.5, 2.0), (0.5, 2.0)];
        let s = grid_oracle_with(&gp, &bx, 1e-2, Execution::Sequential).unwrap();
        let p = grid_oracle_with(&gp, &bx, 1e-2, Execution::Parallel).unwrap();
        assert_eq!(s, p);
        assert!((s.unwrap().objective - 2.0 * 2f64.sqrt()).abs() < 2e-2);
    }
}
