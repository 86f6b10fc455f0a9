//! Product cubature rules for the catalog weights, used as an independent
//! check of the closed-form moments.

use std::f64::consts::PI;

use super::univariate::{gauss_jacobi_unit, gauss_rule, Recurrence1D};
use super::MomentFunctional;
use crate::error::{Error, Result};
use crate::indexing::enumerate_indices;

/// Nodes and weights in `ℝ^d`.
#[derive(Clone, Debug)]
pub struct Cubature {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Cubature {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn moment(&self, alpha: &[u32]) -> f64 {
        self.integrate(|x| x.iter().zip(alpha).map(|(x, &a)| x.powi(a as i32)).product())
    }

    /// Tensor product of one-dimensional rules.
    fn tensor(rules: &[(Vec<f64>, Vec<f64>)]) -> Cubature {
        let mut points = vec![Vec::new()];
        let mut weights = vec![1.0];
        for (x, w) in rules {
            let mut p2 = Vec::with_capacity(points.len() * x.len());
            let mut w2 = Vec::with_capacity(points.len() * x.len());
            for (p, pw) in points.iter().zip(&weights) {
                for (xk, wk) in x.iter().zip(w) {
                    let mut q = p.clone();
                    q.push(*xk);
                    p2.push(q);
                    w2.push(pw * wk);
                }
            }
            points = p2;
            weights = w2;
        }
        Cubature { points, weights }
    }
}

/// Collapsed-coordinate rule on `T^d` for
/// `x_1^{κ_1-1/2} ⋯ x_d^{κ_d-1/2} (1-|x|)^{κ_{d+1}-1/2}`, exact for
/// polynomials of degree `≤ 2n-1`.
///
/// `x_j = t_j Π_{i<j} (1 - t_i)` turns the weight into a product of
/// Jacobi weights in the `t_j`.
pub fn simplex_cubature(kappa: &[f64], n: usize) -> Result<Cubature> {
    let d = kappa.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| {
        Error::InvalidParameter("simplex needs d+1 ≥ 2 parameters".into())
    })?;
    let mut rules = Vec::with_capacity(d);
    for i in 0..d {
        let p = kappa[i] - 0.5;
        let q = kappa[i + 1..].iter().map(|k| k - 0.5).sum::<f64>() + (d - i - 1) as f64;
        rules.push(gauss_jacobi_unit(p, q, n)?);
    }
    let mut c = Cubature::tensor(&rules);
    for x in &mut c.points {
        let mut rest = 1.0;
        for t in x.iter_mut() {
            let s = *t;
            *t = s * rest;
            rest *= 1.0 - s;
        }
    }
    Ok(c)
}

/// Polar rule on the unit disk for `(1-x²-y²)^μ`: Gauss in `s = r²` and
/// the trapezoid rule with `m` angles, exact for `x^p y^q` with
/// `p + q < min(2n, m)`.
pub fn disk_cubature(mu: f64, n: usize, m: usize) -> Result<Cubature> {
    let (s, ws) = gauss_jacobi_unit(0.0, mu, n)?;
    let mut points = Vec::with_capacity(n * m);
    let mut weights = Vec::with_capacity(n * m);
    for (s, w) in s.iter().zip(&ws) {
        let r = s.sqrt();
        for k in 0..m {
            let th = 2.0 * PI * k as f64 / m as f64;
            points.push(vec![r * th.cos(), r * th.sin()]);
            weights.push(0.5 * w * 2.0 * PI / m as f64);
        }
    }
    Ok(Cubature { points, weights })
}

/// Gauss–Laguerre product rule for `x^κ e^{-|x|_1}`.
pub fn laguerre_cubature(kappa: &[f64], n: usize) -> Result<Cubature> {
    let rules = kappa
        .iter()
        .map(|&k| Ok(gauss_rule(&Recurrence1D::laguerre(k, n)?, n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Cubature::tensor(&rules))
}

/// Largest relative discrepancy between the moments of `u` and of the
/// rule, both normalized to unit mass, over `|α| ≤ max_degree`. Vanishing
/// moments are compared against the mass.
pub fn moment_discrepancy(u: &MomentFunctional, rule: &Cubature, max_degree: usize) -> f64 {
    let d = u.dim();
    let zero = vec![0; d];
    let (mu0, mq0) = (u.moment(&crate::indexing::MultiIndex::new(zero.clone())), rule.moment(&zero));
    let mut worst: f64 = 0.0;
    for n in 0..=max_degree {
        for nu in enumerate_indices(d, n) {
            let a = u.moment(&nu) / mu0;
            let b = rule.moment(nu.as_slice()) / mq0;
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    worst
}
