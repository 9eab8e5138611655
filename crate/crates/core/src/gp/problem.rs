//! Geometric program container, JSON dump format and the log-space
//! reformulation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::posynomial::{Monomial, Posynomial, VarId};
use crate::{Error, Result};

/// Positive decision variable with optional box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

/// minimize `objective` subject to `ineq[i] <= 1`, `eq[j] == 1` and the
/// variable boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct GpProblem {
    variables: Vec<Variable>,
    objective: Posynomial,
    ineq: Vec<Posynomial>,
    eq: Vec<Monomial>,
}

/// Incremental construction of a [`GpProblem`].
#[derive(Debug, Clone, Default)]
pub struct GpBuilder {
    variables: Vec<Variable>,
    ineq: Vec<Posynomial>,
    eq: Vec<Monomial>,
}

impl GpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable; `None` leaves that side unbounded.
    pub fn variable(&mut self, name: impl Into<String>, lower: Option<f64>, upper: Option<f64>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn bounded(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variable(name, Some(lower), Some(upper))
    }

    pub fn le_one(&mut self, p: impl Into<Posynomial>) -> &mut Self {
        self.ineq.push(p.into());
        self
    }

    pub fn eq_one(&mut self, m: Monomial) -> &mut Self {
        self.eq.push(m);
        self
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn minimize(self, objective: impl Into<Posynomial>) -> Result<GpProblem> {
        GpProblem::new(self.variables, objective.into(), self.ineq, self.eq)
    }
}

impl GpProblem {
    pub fn new(variables: Vec<Variable>, objective: Posynomial, ineq: Vec<Posynomial>, eq: Vec<Monomial>) -> Result<Self> {
        let n = variables.len();
        for v in &variables {
            for b in [v.lower, v.upper].into_iter().flatten() {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "bound {b} of {} must be positive and finite",
                        v.name
                    )));
                }
            }
            if let (Some(l), Some(u)) = (v.lower, v.upper) {
                if l > u {
                    return Err(Error::InvalidParameter(format!("empty box [{l}, {u}] for {}", v.name)));
                }
            }
        }
        let refs = std::iter::once(objective.max_var())
            .chain(ineq.iter().map(Posynomial::max_var))
            .chain(eq.iter().map(Monomial::max_var));
        for r in refs.flatten() {
            if r >= n {
                return Err(Error::InvalidParameter(format!("unregistered variable id {r}")));
            }
        }
        Ok(GpProblem {
            variables,
            objective,
            ineq,
            eq,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn objective(&self) -> &Posynomial {
        &self.objective
    }

    pub fn ineq(&self) -> &[Posynomial] {
        &self.ineq
    }

    pub fn eq(&self) -> &[Monomial] {
        &self.eq
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    /// Largest violation at `x`: max over `ineq - 1`, `|eq - 1|` and box
    /// excursions (relative).
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in &self.ineq {
            worst = worst.max(p.evaluate(x)? - 1.0);
        }
        for m in &self.eq {
            worst = worst.max((m.evaluate(x)? - 1.0).abs());
        }
        for (v, &xv) in self.variables.iter().zip(x) {
            if let Some(l) = v.lower {
                worst = worst.max(l / xv - 1.0);
            }
            if let Some(u) = v.upper {
                worst = worst.max(xv / u - 1.0);
            }
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GpFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    fn to_file(&self) -> GpFile {
        let term = |m: &Monomial| TermFile {
            coeff: m.coeff(),
            exponents: m.exponents().iter().map(|(v, a)| (self.variables[v.0].name.clone(), *a)).collect(),
        };
        let posy = |p: &Posynomial| p.terms().iter().map(term).collect();
        GpFile {
            variables: self.variables.clone(),
            objective: posy(&self.objective),
            ineq: self.ineq.iter().map(posy).collect(),
            eq: self.eq.iter().map(term).collect(),
        }
    }

    fn from_file(file: GpFile) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, v) in file.variables.iter().enumerate() {
            if index.insert(v.name.clone(), VarId(k)).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate variable {}", v.name)));
            }
        }
        let term = |t: &TermFile| -> Result<Monomial> {
            let mut exps = Vec::with_capacity(t.exponents.len());
            for (name, &a) in &t.exponents {
                let id = index
                    .get(name)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown variable {name}")))?;
                exps.push((*id, a));
            }
            Monomial::new(t.coeff, exps)
        };
        let posy = |ts: &[TermFile]| -> Result<Posynomial> { Posynomial::new(ts.iter().map(term).collect::<Result<_>>()?) };
        let objective = posy(&file.objective)?;
        let ineq = file.ineq.iter().map(|p| posy(p)).collect::<Result<_>>()?;
        let eq = file.eq.iter().map(term).collect::<Result<_>>()?;
        Self::new(file.variables, objective, ineq, eq)
    }
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    coeff: f64,
    #[serde(default)]
    exponents: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct GpFile {
    variables: Vec<Variable>,
    objective: Vec<TermFile>,
    #[serde(default)]
    ineq: Vec<Vec<TermFile>>,
    #[serde(default)]
    eq: Vec<TermFile>,
}

/// `a^T y + b` with sparse `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub b: f64,
    pub a: Vec<(usize, f64)>,
}

impl AffineForm {
    fn from_monomial(m: &Monomial) -> Self {
        AffineForm {
            b: m.coeff().ln(),
            a: m.exponents().iter().map(|&(v, e)| (v.0, e)).collect(),
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.b + self.a.iter().map(|&(k, e)| e * y[k]).sum::<f64>()
    }
}

/// `log sum_k exp(a_k^T y + b_k)`, stored with a local variable index so
/// that derivatives touch only the variables that appear.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSumExp {
    terms: Vec<AffineForm>,
    vars: Vec<usize>,
    local: Vec<Vec<(usize, f64)>>,
}

impl LogSumExp {
    pub fn new(terms: Vec<AffineForm>) -> Self {
        let mut vars: Vec<usize> = terms.iter().flat_map(|t| t.a.iter().map(|&(k, _)| k)).collect();
        vars.sort_unstable();
        vars.dedup();
        let local = terms
            .iter()
            .map(|t| {
                t.a.iter()
                    .map(|&(k, e)| (vars.binary_search(&k).expect("variable listed"), e))
                    .collect()
            })
            .collect();
        LogSumExp { terms, vars, local }
    }

    fn from_posynomial(p: &Posynomial) -> Self {
        Self::new(p.terms().iter().map(AffineForm::from_monomial).collect())
    }

    pub fn terms(&self) -> &[AffineForm] {
        &self.terms
    }

    /// Variables with a nonzero exponent in some term.
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let vals: Vec<f64> = self.terms.iter().map(|t| t.value(y)).collect();
        log_sum_exp(&vals)
    }

    /// Value, gradient and Hessian over [`Self::vars`] (row-major).
    pub fn local_derivatives(&self, y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let m = self.vars.len();
        let vals: Vec<f64> = self.terms.iter().map(|t| t.value(y)).collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = vals.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let value = top + total.ln();
        let mut grad = vec![0.0; m];
        let mut hess = vec![0.0; m * m];
        for (wk, row) in w.iter().zip(&self.local) {
            let p = wk / total;
            if p == 0.0 {
                continue;
            }
            for &(i, ai) in row {
                grad[i] += p * ai;
                for &(j, aj) in row {
                    hess[i * m + j] += p * ai * aj;
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                hess[i * m + j] -= grad[i] * grad[j];
            }
        }
        (value, grad, hess)
    }
}

/// Overflow-safe `log sum exp(v_k)`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// The GP in `y = log x`: convex objective and inequalities, affine
/// equalities, log-space boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProgram {
    pub dim: usize,
    pub objective: LogSumExp,
    pub ineq: Vec<LogSumExp>,
    pub eq: Vec<AffineForm>,
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
}

pub fn to_convex(gp: &GpProblem) -> ConvexProgram {
    ConvexProgram {
        dim: gp.num_variables(),
        objective: LogSumExp::from_posynomial(&gp.objective),
        ineq: gp.ineq.iter().map(LogSumExp::from_posynomial).collect(),
        eq: gp.eq.iter().map(AffineForm::from_monomial).collect(),
        bounds: gp.variables.iter().map(|v| (v.lower.map(f64::ln), v.upper.map(f64::ln))).collect(),
    }
}
