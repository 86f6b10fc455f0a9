//! Polynomial arithmetic over the monomial basis.
//!
//! [`Poly`] is a sparse multivariate polynomial keyed by multi-index;
//! [`UniPoly`] is a dense univariate polynomial with ascending coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::indexing::{GradedBasis, MultiIndex};

#[derive(Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn monomial(nu: MultiIndex, c: f64) -> Self {
        let mut p = Poly::zero(nu.dim());
        p.add_term(nu, c);
        p
    }

    /// The coordinate `x_i` (zero-based).
    pub fn var(dim: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, i), 1.0)
    }

    /// `Σ a_i x_i + b`.
    pub fn affine(a: &[f64], b: f64) -> Self {
        let dim = a.len();
        let mut p = Poly::constant(dim, b);
        for (i, &ai) in a.iter().enumerate() {
            p.add_term(MultiIndex::unit(dim, i), ai);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, nu: MultiIndex, c: f64) {
        assert_eq!(nu.dim(), self.dim, "multi-index dimension mismatch");
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(nu).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn coeff(&self, nu: &MultiIndex) -> f64 {
        self.terms.get(nu).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn scale(&self, c: f64) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (nu, v) in self.terms() {
            out.add_term(nu.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::constant(self.dim, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        self.terms()
            .map(|(nu, c)| {
                c * nu
                    .as_slice()
                    .iter()
                    .zip(x)
                    .map(|(&e, &xi)| xi.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Coefficient vector in the global layout of `basis` up to `degree`.
    pub fn to_dense(&self, basis: &GradedBasis, degree: usize) -> Vec<f64> {
        let mut out = vec![0.0; basis.len_upto(degree)];
        for (nu, c) in self.terms() {
            let g = basis
                .global_index(nu)
                .filter(|&g| g < out.len())
                .unwrap_or_else(|| panic!("term {nu:?} exceeds degree {degree}"));
            out[g] = c;
        }
        out
    }

    pub fn from_dense(basis: &GradedBasis, coeffs: &[f64]) -> Poly {
        let mut p = Poly::zero(basis.dim());
        for (g, &c) in coeffs.iter().enumerate() {
            p.add_term(basis.at(g).clone(), c);
        }
        p
    }

    /// Substitutes a univariate polynomial in the single variable of a
    /// `dim = 1` polynomial's argument: returns `u(q)` for `u` univariate.
    pub fn compose_uni(u: &UniPoly, q: &Poly) -> Poly {
        // Horner
        let mut acc = Poly::zero(q.dim);
        for &c in u.coeffs().iter().rev() {
            acc = &(&acc * q) + &Poly::constant(q.dim, c);
        }
        acc
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(nu, c)| format!("{c}·x^{nu:?}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (nu, c) in rhs.terms() {
            out.add_term(nu.clone(), c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.dim, rhs.dim);
        let mut out = Poly::zero(self.dim);
        for (a, ca) in self.terms() {
            for (b, cb) in rhs.terms() {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out
    }
}

/// Dense univariate polynomial, `coeffs[k]` multiplying `t^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly(Vec<f64>);

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        UniPoly(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        UniPoly::new(vec![c])
    }

    /// `t`.
    pub fn x() -> Self {
        UniPoly::new(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.0.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn scale(&self, c: f64) -> Self {
        UniPoly::new(self.0.iter().map(|v| v * c).collect())
    }

    /// `p(a·t + b)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        let lin = UniPoly::new(vec![b, a]);
        let mut acc = UniPoly::constant(0.0);
        for &c in self.0.iter().rev() {
            acc = &(&acc * &lin) + &UniPoly::constant(c);
        }
        acc
    }
}

impl Add for &UniPoly {
    type Output = UniPoly;
    fn add(self, rhs: &UniPoly) -> UniPoly {
        let n = self.0.len().max(rhs.0.len());
        let v = (0..n)
            .map(|k| self.0.get(k).unwrap_or(&0.0) + rhs.0.get(k).unwrap_or(&0.0))
            .collect();
        UniPoly::new(v)
    }
}

impl Sub for &UniPoly {
    type Output = UniPoly;
    fn sub(self, rhs: &UniPoly) -> UniPoly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &UniPoly {
    type Output = UniPoly;
    fn mul(self, rhs: &UniPoly) -> UniPoly {
        let mut v = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        UniPoly::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_eval() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = &(&x + &y) * &(&x - &y);
        assert_eq!(p.coeff(&MultiIndex::new(vec![2, 0])), 1.0);
        assert_eq!(p.coeff(&MultiIndex::new(vec![1, 1])), 0.0);
        assert_eq!(p.coeff(&MultiIndex::new(vec![0, 2])), -1.0);
        assert_eq!(p.degree(), Some(2));
        assert!((p.eval(&[3.0, 2.0]) - 5.0).abs() < 1e-15);
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn dense_roundtrip() {
        let basis = GradedBasis::new(3, 4);
        let p = &Poly::affine(&[1.0, -2.0, 0.5], 3.0) * &Poly::var(3, 2).pow(2);
        let dense = p.to_dense(&basis, 3);
        assert_eq!(dense.len(), 20);
        assert_eq!(Poly::from_dense(&basis, &dense), p);
    }

    #[test]
    fn univariate_ops() {
        let p = UniPoly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.degree(), 2);
        assert!((p.eval(2.0) - 17.0).abs() < 1e-15);
        let q = p.compose_affine(2.0, -1.0);
        for t in [-0.3, 0.0, 0.7, 1.9] {
            assert!((q.eval(t) - p.eval(2.0 * t - 1.0)).abs() < 1e-13);
        }
        assert_eq!((&p - &p).degree(), 0);
        let composed = Poly::compose_uni(&p, &Poly::affine(&[1.0, 1.0], 0.0));
        assert!((composed.eval(&[0.5, 1.5]) - 17.0).abs() < 1e-13);
    }
}
