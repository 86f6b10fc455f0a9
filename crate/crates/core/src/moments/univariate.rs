//! Classical weights in one variable: moment sequences, three-term
//! recurrence coefficients and Gauss rules.

use std::sync::Mutex;

use nalgebra::SymmetricEigen;
use statrs::function::gamma::ln_gamma;

use super::MomentFunctional;
use crate::error::{Error, Result};
use crate::matrixkit::Matrix;
use crate::poly::UniPoly;

fn check_jacobi(a: f64, b: f64) -> Result<()> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jacobi parameters must exceed -1, got ({a}, {b})"
        )));
    }
    Ok(())
}

/// `∫_{-1}^{1} (1-x)^a (1+x)^b dx`.
pub(crate) fn jacobi_mass(a: f64, b: f64) -> f64 {
    ((a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(a + b + 2.0))
    .exp()
}

/// Moments of `(1-x)^a (1+x)^b` on `[-1, 1]`, unnormalized.
///
/// Integrating `x^k d/dx[(1-x)^{a+1}(1+x)^{b+1}]` by parts gives
/// `(a+b+2+k) m_{k+1} = (b-a) m_k + k m_{k-1}`.
pub fn jacobi_moments(a: f64, b: f64) -> Result<impl Fn(usize) -> f64 + Send + Sync> {
    check_jacobi(a, b)?;
    let m0 = jacobi_mass(a, b);
    let table = Mutex::new(vec![m0, (b - a) / (a + b + 2.0) * m0]);
    Ok(move |k: usize| {
        let mut t = table.lock().unwrap_or_else(|e| e.into_inner());
        while t.len() <= k {
            let j = t.len() - 1;
            let next = ((b - a) * t[j] + j as f64 * t[j - 1]) / (a + b + 2.0 + j as f64);
            t.push(next);
        }
        t[k]
    })
}

/// Moments `Γ(k+a+1)` of `t^a e^{-t}` on `[0, ∞)`.
pub fn laguerre_moments(a: f64) -> Result<impl Fn(usize) -> f64 + Send + Sync> {
    if !(a > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Laguerre parameter must exceed -1, got {a}"
        )));
    }
    let m0 = ln_gamma(a + 1.0).exp();
    Ok(move |k: usize| (0..k).fold(m0, |acc, j| acc * (j as f64 + a + 1.0)))
}

pub(crate) fn jacobi_functional(a: f64, b: f64) -> Result<MomentFunctional> {
    let m = jacobi_moments(a, b)?;
    Ok(MomentFunctional::univariate(format!("jacobi(a={a},b={b})"), m))
}

pub(crate) fn laguerre_functional(a: f64) -> Result<MomentFunctional> {
    let m = laguerre_moments(a)?;
    Ok(MomentFunctional::univariate(format!("laguerre(a={a})"), m))
}

/// Coefficients of the orthonormal recurrence
/// `x p_n = a_n p_{n+1} + b_n p_n + a_{n-1} p_{n-1}` together with the mass
/// `⟨w, 1⟩` of the weight they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct Recurrence1D {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mass: f64,
}

impl Recurrence1D {
    /// Orthonormal Jacobi recurrence for `(1-x)^a (1+x)^b`, `n` terms.
    pub fn jacobi(a: f64, b: f64, n: usize) -> Result<Self> {
        check_jacobi(a, b)?;
        let mut av = Vec::with_capacity(n);
        let mut bv = Vec::with_capacity(n);
        for k in 0..n {
            let kf = k as f64;
            let s = 2.0 * kf + a + b;
            let bk = if k == 0 {
                (b - a) / (a + b + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            };
            let ak2 = if k == 0 {
                4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 2.0).powi(2) * (a + b + 3.0))
            } else {
                4.0 * (kf + 1.0) * (kf + a + 1.0) * (kf + b + 1.0) * (kf + a + b + 1.0)
                    / ((s + 1.0) * (s + 2.0).powi(2) * (s + 3.0))
            };
            av.push(ak2.sqrt());
            bv.push(bk);
        }
        Ok(Recurrence1D {
            a: av,
            b: bv,
            mass: jacobi_mass(a, b),
        })
    }

    /// Orthonormal Laguerre recurrence for `t^a e^{-t}`.
    pub fn laguerre(a: f64, n: usize) -> Result<Self> {
        if !(a > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "Laguerre parameter must exceed -1, got {a}"
            )));
        }
        Ok(Recurrence1D {
            a: (0..n)
                .map(|k| ((k as f64 + 1.0) * (k as f64 + a + 1.0)).sqrt())
                .collect(),
            b: (0..n).map(|k| 2.0 * k as f64 + a + 1.0).collect(),
            mass: ln_gamma(a + 1.0).exp(),
        })
    }

    /// Chebyshev weights normalized to unit mass, with the coefficient
    /// values tabulated for the four kinds.
    pub fn chebyshev(kind: super::ChebyshevKind, n: usize) -> Self {
        use super::ChebyshevKind::*;
        let a = (0..n)
            .map(|k| {
                if k == 0 && kind == First {
                    std::f64::consts::FRAC_1_SQRT_2
                } else {
                    0.5
                }
            })
            .collect();
        let b0 = match kind {
            First | Second => 0.0,
            Third => -0.5,
            Fourth => 0.5,
        };
        let b = (0..n).map(|k| if k == 0 { b0 } else { 0.0 }).collect();
        Recurrence1D { a, b, mass: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.a.len().min(self.b.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Monic polynomials `π_0, …, π_n`,
    /// `π_{k+1} = (x - b_k) π_k - a_{k-1}^2 π_{k-1}`.
    pub fn monic_polys(&self, n: usize) -> Vec<UniPoly> {
        assert!(n <= self.len(), "recurrence too short for degree {n}");
        let mut out = vec![UniPoly::constant(1.0)];
        for k in 0..n {
            let shifted = &UniPoly::new(vec![-self.b[k], 1.0]) * &out[k];
            let next = if k == 0 {
                shifted
            } else {
                &shifted - &out[k - 1].scale(self.a[k - 1].powi(2))
            };
            out.push(next);
        }
        out
    }

    /// Orthonormal polynomials for the weight divided by its mass, i.e.
    /// `p_0 = 1`.
    pub fn orthonormal_polys(&self, n: usize) -> Vec<UniPoly> {
        assert!(n <= self.len(), "recurrence too short for degree {n}");
        let mut out = vec![UniPoly::constant(1.0)];
        for k in 0..n {
            let mut next = &UniPoly::new(vec![-self.b[k], 1.0]) * &out[k];
            if k > 0 {
                next = &next - &out[k - 1].scale(self.a[k - 1]);
            }
            out.push(next.scale(1.0 / self.a[k]));
        }
        out
    }

    /// The symmetric tridiagonal Jacobi matrix of order `n`.
    pub fn jacobi_matrix(&self, n: usize) -> Matrix {
        assert!(n <= self.len());
        Matrix::from_fn(n, n, |r, c| {
            if r == c {
                self.b[r]
            } else if r + 1 == c {
                self.a[r]
            } else if c + 1 == r {
                self.a[c]
            } else {
                0.0
            }
        })
    }
}

/// Gauss rule with `n` nodes (Golub–Welsch); weights sum to `rec.mass`.
pub fn gauss_rule(rec: &Recurrence1D, n: usize) -> (Vec<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(rec.jacobi_matrix(n));
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], rec.mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

/// Gauss rule on `[0, 1]` for `t^p (1-t)^q`, exact through degree `2n-1`.
pub fn gauss_jacobi_unit(p: f64, q: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    // t = (1+x)/2 maps (1-x)^q (1+x)^p dx to 2^{p+q+1} t^p (1-t)^q dt
    let rec = Recurrence1D::jacobi(q, p, n)?;
    let (x, w) = gauss_rule(&rec, n);
    let scale = 0.5_f64.powf(p + q + 1.0);
    Ok((
        x.iter().map(|x| 0.5 * (1.0 + x)).collect(),
        w.iter().map(|w| w * scale).collect(),
    ))
}
