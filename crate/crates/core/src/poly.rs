//! Sparse multivariate real polynomials with exact formal differentiation.
//!
//! Terms are kept in a canonical form: exponent vectors sorted
//! lexicographically, equal exponents merged, zero coefficients dropped.
//! Formal derivatives therefore never accumulate numerical error; the only
//! rounding happens at evaluation time.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single term `coeff * prod_i x_i^{exponents[i]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>, coeff: f64) -> Self {
        Self { exponents, coeff }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.coeff;
        for (&e, &xi) in self.exponents.iter().zip(x) {
            if e > 0 {
                acc *= xi.powi(e as i32);
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: Vec::new(),
        }
    }

    /// Builds a polynomial from raw terms, merging duplicates.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = Monomial>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in terms {
            if t.exponents.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: t.exponents.len(),
                });
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite coefficient {} in monomial {:?}",
                    t.coeff, t.exponents
                )));
            }
            *merged.entry(t.exponents).or_insert(0.0) += t.coeff;
        }
        Ok(Self::from_map(nvars, merged))
    }

    fn from_map(nvars: usize, merged: BTreeMap<Vec<u32>, f64>) -> Self {
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exponents, coeff)| Monomial { exponents, coeff })
            .collect();
        Self { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Evaluates at `x`; the caller guarantees `x.len() == nvars`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Formal partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < self.nvars, "variable index out of range");
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in &self.terms {
            let e = t.exponents[var];
            if e == 0 {
                continue;
            }
            let mut exps = t.exponents.clone();
            exps[var] -= 1;
            *merged.entry(exps).or_insert(0.0) += t.coeff * e as f64;
        }
        Self::from_map(self.nvars, merged)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in self.terms.iter().chain(&other.terms) {
            *merged.entry(t.exponents.clone()).or_insert(0.0) += t.coeff;
        }
        Self::from_map(self.nvars, merged)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for a in &self.terms {
            for b in &other.terms {
                let exps: Vec<u32> = a
                    .exponents
                    .iter()
                    .zip(&b.exponents)
                    .map(|(x, y)| x + y)
                    .collect();
                *merged.entry(exps).or_insert(0.0) += a.coeff * b.coeff;
            }
        }
        Self::from_map(self.nvars, merged)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_map(nvars, BTreeMap::from([(vec![0; nvars], c)]))
    }

    /// The monomial `coeff * x_var^power`.
    pub fn var_power(nvars: usize, var: usize, power: u32, coeff: f64) -> Self {
        let mut exps = vec![0; nvars];
        exps[var] = power;
        Self::from_map(nvars, BTreeMap::from([(exps, coeff)]))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coeff)?;
            for (v, &e) in t.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*v{v}")?,
                    _ => write!(f, "*v{v}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic() -> Polynomial {
        // (x^2 + y^2)^2 in two variables
        let x2 = Polynomial::var_power(2, 0, 2, 1.0);
        let y2 = Polynomial::var_power(2, 1, 2, 1.0);
        x2.add(&y2).pow(2)
    }

    #[test]
    fn expansion_merges_terms() {
        let p = quartic();
        assert_eq!(p.terms().len(), 3);
        assert_eq!(p.degree(), 4);
        assert_eq!(p.eval(&[1.0, 1.0]), 4.0);
    }

    #[test]
    fn second_derivatives_of_quartic() {
        let p = quartic();
        let pxx = p.derivative(0).derivative(0);
        let pyy = p.derivative(1).derivative(1);
        let pxy = p.derivative(0).derivative(1);
        // 12x^2 + 4y^2, 4x^2 + 12y^2, 8xy
        assert_eq!(pxx.eval(&[0.5, 0.0]), 3.0);
        assert_eq!(pyy.eval(&[0.5, 0.0]), 1.0);
        assert_eq!(pxy.eval(&[0.5, 2.0]), 8.0);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let c = Polynomial::constant(3, 7.0);
        assert!(c.derivative(2).is_zero());
    }

    #[test]
    fn rejects_wrong_arity() {
        let err = Polynomial::from_terms(2, [Monomial::new(vec![1, 0, 0], 1.0)]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cancellation_drops_terms() {
        let p = Polynomial::from_terms(
            1,
            [Monomial::new(vec![2], 1.0), Monomial::new(vec![2], -1.0)],
        )
        .unwrap();
        assert!(p.is_zero());
    }
}
