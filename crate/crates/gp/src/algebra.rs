//! Monomials, posynomials and products of posynomial powers.
//!
//! Variables are addressed by index. A monomial is `c * prod_v x_v^a_v` with
//! `c > 0` and real exponents; a posynomial is a non-empty sum of monomials.
//! [`GenPosynomial`] covers the slightly wider class `m(x) * prod_k P_k(x)^e_k`
//! with `e_k > 0`, which stays log-convex and is what successive condensation
//! produces once auxiliary SINR variables are eliminated.

use std::fmt;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::GpError;

/// `coeff * prod x_v^exp_v`, exponents kept sorted by variable index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    coeff: f64,
    exps: Vec<(usize, f64)>,
}

impl Monomial {
    pub fn new(coeff: f64, exps: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, GpError> {
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(GpError::NonPositiveCoefficient(coeff));
        }
        let mut exps: Vec<(usize, f64)> = exps.into_iter().collect();
        if exps.iter().any(|(_, a)| !a.is_finite()) {
            return Err(GpError::Malformed("non-finite exponent".into()));
        }
        exps.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(exps.len());
        for (v, a) in exps {
            match merged.last_mut() {
                Some((lv, la)) if *lv == v => *la += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        Ok(Self { coeff, exps: merged })
    }

    pub fn constant(coeff: f64) -> Result<Self, GpError> {
        Self::new(coeff, [])
    }

    /// `x_var`, the identity monomial of one variable.
    pub fn var(var: usize) -> Self {
        Self { coeff: 1.0, exps: vec![(var, 1.0)] }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponents(&self) -> &[(usize, f64)] {
        &self.exps
    }

    pub fn max_var(&self) -> Option<usize> {
        self.exps.last().map(|(v, _)| *v)
    }

    pub fn powf(&self, e: f64) -> Result<Self, GpError> {
        Self::new(self.coeff.powf(e), self.exps.iter().map(|&(v, a)| (v, a * e)))
    }

    pub fn inv(&self) -> Self {
        Self {
            coeff: 1.0 / self.coeff,
            exps: self.exps.iter().map(|&(v, a)| (v, -a)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Result<Self, GpError> {
        Self::new(self.coeff * k, self.exps.iter().copied())
    }

    /// Natural log of the monomial at `y = log x`: `log c + a . y`.
    pub fn log_eval(&self, y: &[f64]) -> f64 {
        self.coeff.ln() + self.exps.iter().map(|&(v, a)| a * y[v]).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, GpError> {
        check_domain(x, self.max_var())?;
        Ok(self.coeff * self.exps.iter().map(|&(v, a)| x[v].powf(a)).product::<f64>())
    }
}

impl Mul for &Monomial {
    type Output = Monomial;

    fn mul(self, rhs: &Monomial) -> Monomial {
        Monomial::new(self.coeff * rhs.coeff, self.exps.iter().chain(&rhs.exps).copied())
            .expect("product of positive monomials is a monomial")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (v, a) in &self.exps {
            write!(f, "*x{v}^{a}")?;
        }
        Ok(())
    }
}

/// Non-empty sum of monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self, GpError> {
        if terms.is_empty() {
            return Err(GpError::Malformed("posynomial without terms".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().filter_map(Monomial::max_var).max()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, GpError> {
        check_domain(x, self.max_var())?;
        Ok(self
            .terms
            .iter()
            .map(|m| m.coeff * m.exps.iter().map(|&(v, a)| x[v].powf(a)).product::<f64>())
            .sum())
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self { terms: self.terms.iter().map(|t| t * m).collect() }
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Self { terms: vec![m] }
    }
}

impl Add for Posynomial {
    type Output = Posynomial;

    fn add(mut self, rhs: Posynomial) -> Posynomial {
        self.terms.extend(rhs.terms);
        self
    }
}

impl fmt::Display for Posynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// `scale(x) * prod_k P_k(x)^e_k` with every `e_k > 0`.
///
/// Plain posynomials convert losslessly (unit scale, one factor with
/// exponent one) and monomials become a scale with no factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenPosynomial {
    scale: Monomial,
    factors: Vec<(Posynomial, f64)>,
}

impl GenPosynomial {
    pub fn new(scale: Monomial, factors: Vec<(Posynomial, f64)>) -> Result<Self, GpError> {
        if let Some((_, e)) = factors.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
            return Err(GpError::Malformed(format!("factor exponent {e} must be positive")));
        }
        Ok(Self { scale, factors })
    }

    pub fn scale(&self) -> &Monomial {
        &self.scale
    }

    pub fn factors(&self) -> &[(Posynomial, f64)] {
        &self.factors
    }

    /// True for a single posynomial with unit scale and unit exponent.
    pub fn as_posynomial(&self) -> Option<&Posynomial> {
        match self.factors.as_slice() {
            [(p, e)] if *e == 1.0 && self.scale.exps.is_empty() && self.scale.coeff == 1.0 => Some(p),
            _ => None,
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.factors
            .iter()
            .filter_map(|(p, _)| p.max_var())
            .chain(self.scale.max_var())
            .max()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, GpError> {
        let mut v = self.scale.eval(x)?;
        for (p, e) in &self.factors {
            v *= p.eval(x)?.powf(*e);
        }
        Ok(v)
    }
}

impl From<Monomial> for GenPosynomial {
    fn from(m: Monomial) -> Self {
        Self { scale: m, factors: Vec::new() }
    }
}

impl From<Posynomial> for GenPosynomial {
    fn from(p: Posynomial) -> Self {
        Self { scale: Monomial { coeff: 1.0, exps: Vec::new() }, factors: vec![(p, 1.0)] }
    }
}

fn check_domain(x: &[f64], max_var: Option<usize>) -> Result<(), GpError> {
    if let Some(v) = max_var {
        if v >= x.len() {
            return Err(GpError::UnknownVariable(v));
        }
    }
    if let Some((v, &xv)) = x.iter().enumerate().find(|(_, xv)| !(**xv > 0.0)) {
        return Err(GpError::Domain { var: v, value: xv });
    }
    Ok(())
}
