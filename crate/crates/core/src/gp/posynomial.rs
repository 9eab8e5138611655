//! Monomials and posynomials over positive variables.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index of a decision variable in a [`super::GpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// `coeff * prod_v x_v^{a_v}` with `coeff > 0`.
///
/// Exponents are kept sorted by variable with zero exponents dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    coeff: f64,
    exponents: Vec<(VarId, f64)>,
}

impl Monomial {
    pub fn new(coeff: f64, exponents: impl IntoIterator<Item = (VarId, f64)>) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(Error::InvalidParameter(format!("monomial coefficient {coeff} must be positive")));
        }
        let mut exps: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in exponents {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("exponent {a} of {v:?} is not finite")));
            }
            exps.push((v, a));
        }
        Ok(Monomial {
            coeff,
            exponents: normalize(exps),
        })
    }

    /// Positive constant.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, [])
    }

    /// `x_v`.
    pub fn var(v: VarId) -> Self {
        Monomial {
            coeff: 1.0,
            exponents: vec![(v, 1.0)],
        }
    }

    /// `c * x_v^a`.
    pub fn power(c: f64, v: VarId, a: f64) -> Result<Self> {
        Self::new(c, [(v, a)])
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponents(&self) -> &[(VarId, f64)] {
        &self.exponents
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(self.coeff * c, self.exponents.iter().copied())
    }

    /// Reciprocal `1 / self`.
    pub fn recip(&self) -> Self {
        Monomial {
            coeff: 1.0 / self.coeff,
            exponents: self.exponents.iter().map(|&(v, a)| (v, -a)).collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let mut acc = self.coeff;
        for &(v, a) in &self.exponents {
            let xv = *x
                .get(v.0)
                .ok_or_else(|| Error::InvalidParameter(format!("no value for variable {}", v.0)))?;
            if !(xv > 0.0) {
                return Err(Error::InvalidParameter(format!("variable {} = {xv} must be positive", v.0)));
            }
            acc *= xv.powf(a);
        }
        Ok(acc)
    }

    pub(crate) fn max_var(&self) -> Option<usize> {
        self.exponents.iter().map(|(v, _)| v.0).max()
    }
}

fn normalize(mut exps: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    exps.sort_by_key(|&(v, _)| v);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(exps.len());
    for (v, a) in exps {
        match out.last_mut() {
            Some((w, b)) if *w == v => *b += a,
            _ => out.push((v, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

impl Mul for &Monomial {
    type Output = Monomial;

    fn mul(self, rhs: &Monomial) -> Monomial {
        Monomial {
            coeff: self.coeff * rhs.coeff,
            exponents: normalize(self.exponents.iter().chain(&rhs.exponents).copied().collect()),
        }
    }
}

impl Mul for Monomial {
    type Output = Monomial;

    fn mul(self, rhs: Monomial) -> Monomial {
        &self * &rhs
    }
}

/// Sum of one or more monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("posynomial needs at least one term".into()));
        }
        Ok(Posynomial { terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.terms.iter().map(|t| t.evaluate(x)).sum()
    }

    /// Every term multiplied by `m` (use `m.recip()` to divide).
    pub fn mul_monomial(&self, m: &Monomial) -> Posynomial {
        Posynomial {
            terms: self.terms.iter().map(|t| t * m).collect(),
        }
    }

    pub(crate) fn max_var(&self) -> Option<usize> {
        self.terms.iter().filter_map(Monomial::max_var).max()
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial { terms: vec![m] }
    }
}

impl Add for Posynomial {
    type Output = Posynomial;

    fn add(mut self, rhs: Posynomial) -> Posynomial {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Add<Monomial> for Posynomial {
    type Output = Posynomial;

    fn add(mut self, rhs: Monomial) -> Posynomial {
        self.terms.push(rhs);
        self
    }
}

/// Evaluates a posynomial at a positive assignment.
pub fn evaluate(p: &Posynomial, x: &[f64]) -> Result<f64> {
    p.evaluate(x)
}
