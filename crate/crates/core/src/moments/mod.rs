//! Moment functionals `α ↦ s_α = ⟨u, x^α⟩` and the operations on them used
//! throughout the crate: application to polynomials, left multiplication by
//! a polynomial, tensor composition and division by a linear factor.

mod catalog;
pub mod cubature;
mod krall;
mod univariate;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::indexing::{GradedBasis, MultiIndex};
use crate::matrixkit::Matrix;
use crate::poly::Poly;
use cubature::Cubature;

pub use catalog::{
    disk, disk_moment_closed_form, jacobi_1d, koornwinder_symmetric, laguerre_1d, multi_jacobi,
    multi_laguerre, product_chebyshev, simplex, simplex_moment_closed_form, ChebyshevKind,
    FamilySpec,
};
pub use krall::{krall_jacobi_functional, krall_laguerre_functional};
pub use univariate::{
    gauss_jacobi_unit, gauss_rule, jacobi_moments, laguerre_moments, Recurrence1D,
};

type Oracle = dyn Fn(&MultiIndex) -> f64 + Send + Sync;
/// Maps a degree to a rule integrating polynomials of that degree exactly.
type RuleFactory = dyn Fn(usize) -> Option<Cubature> + Send + Sync;

struct Inner {
    dim: usize,
    label: String,
    oracle: Box<Oracle>,
    memo: Mutex<HashMap<MultiIndex, f64>>,
    rule: Option<Box<RuleFactory>>,
    rules: Mutex<HashMap<usize, Option<Arc<Cubature>>>>,
}

/// A linear functional on `Π^d` given by its moments.
///
/// Cloning is cheap and clones share the memo cache. The cache is guarded
/// by a mutex, so one functional may be queried from several threads; the
/// oracle itself runs outside the lock.
#[derive(Clone)]
pub struct MomentFunctional {
    inner: Arc<Inner>,
}

impl fmt::Debug for MomentFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentFunctional")
            .field("dim", &self.inner.dim)
            .field("label", &self.inner.label)
            .finish()
    }
}

impl MomentFunctional {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        oracle: impl Fn(&MultiIndex) -> f64 + Send + Sync + 'static,
    ) -> Self {
        MomentFunctional {
            inner: Arc::new(Inner {
                dim,
                label: label.into(),
                oracle: Box::new(oracle),
                memo: Mutex::new(HashMap::new()),
                rule: None,
                rules: Mutex::new(HashMap::new()),
            }),
        }
    }

    /// The same moments, with a cubature rule for evaluating inner
    /// products pointwise. `rule(k)` must be exact for degree `≤ k`.
    pub fn with_cubature(
        &self,
        rule: impl Fn(usize) -> Option<Cubature> + Send + Sync + 'static,
    ) -> Self {
        let me = self.clone();
        MomentFunctional {
            inner: Arc::new(Inner {
                dim: self.dim(),
                label: self.label().to_string(),
                oracle: Box::new(move |nu| me.moment(nu)),
                memo: Mutex::new(HashMap::new()),
                rule: Some(Box::new(rule)),
                rules: Mutex::new(HashMap::new()),
            }),
        }
    }

    /// A rule exact for polynomials of degree `≤ degree`, if one is attached.
    pub fn cubature(&self, degree: usize) -> Option<Arc<Cubature>> {
        let make = self.inner.rule.as_ref()?;
        let mut cache = self.inner.rules.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(degree)
            .or_insert_with(|| make(degree).map(Arc::new))
            .clone()
    }

    /// `derived` with this functional's rule reweighted by `f`, which
    /// raises the degree by `extra`.
    fn carry_rule(&self, derived: Self, extra: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        if self.inner.rule.is_none() {
            return derived;
        }
        let me = self.clone();
        derived.with_cubature(move |k| {
            let mut c = (*me.cubature(k + extra)?).clone();
            for (w, x) in c.weights.iter_mut().zip(&c.points) {
                *w *= f(x);
            }
            Some(c)
        })
    }

    /// A functional in one variable from its moment sequence `k ↦ s_k`.
    pub fn univariate(
        label: impl Into<String>,
        moments: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(1, label, move |nu| moments(nu[0] as usize))
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        let me = self.clone();
        let relabeled = Self::new(self.dim(), label, move |nu| me.moment(nu));
        self.carry_rule(relabeled, 0, |_| 1.0)
    }

    pub fn moment(&self, nu: &MultiIndex) -> f64 {
        assert_eq!(nu.dim(), self.dim(), "moment index has wrong dimension");
        let memo = &self.inner.memo;
        if let Some(&v) = memo.lock().unwrap_or_else(|e| e.into_inner()).get(nu) {
            return v;
        }
        let v = (self.inner.oracle)(nu);
        debug_assert!(v.is_finite(), "non-finite moment {v} at {nu:?}");
        memo.lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(nu.clone(), v);
        v
    }

    /// `⟨u, 1⟩`.
    pub fn mass(&self) -> f64 {
        self.moment(&MultiIndex::zero(self.dim()))
    }

    pub fn apply(&self, p: &Poly) -> f64 {
        assert_eq!(p.dim(), self.dim());
        p.terms().map(|(nu, c)| c * self.moment(nu)).sum()
    }

    /// Entrywise action on a polynomial matrix.
    pub fn apply_matrix(&self, entries: &[Vec<Poly>]) -> Matrix {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        Matrix::from_fn(rows, cols, |r, c| self.apply(&entries[r][c]))
    }

    /// `S[a][b] = s_{α_a + α_b (+ e_shift)}` over the global layout of
    /// `basis`, rows up to degree `row_degree`, columns up to `col_degree`.
    ///
    /// With coefficient rows `F`, `G` this gives `⟨u, F X (G X)^t⟩ = F S Gᵗ`.
    pub fn moment_matrix(
        &self,
        basis: &GradedBasis,
        row_degree: usize,
        col_degree: usize,
        shift: Option<usize>,
    ) -> Matrix {
        let rows = basis.len_upto(row_degree);
        let cols = basis.len_upto(col_degree);
        Matrix::from_fn(rows, cols, |r, c| {
            let mut nu = basis.at(r).add(basis.at(c));
            if let Some(i) = shift {
                nu = nu.plus_unit(i);
            }
            self.moment(&nu)
        })
    }

    /// `p·u`, defined by `⟨p·u, q⟩ = ⟨u, p q⟩`.
    pub fn left_multiply(&self, p: &Poly) -> Self {
        assert_eq!(p.dim(), self.dim());
        let me = self.clone();
        let terms: Vec<(MultiIndex, f64)> = p.terms().map(|(k, v)| (k.clone(), v)).collect();
        let label = format!("({p:?})·{}", self.label());
        let product = Self::new(self.dim(), label, move |nu| {
            terms.iter().map(|(k, c)| c * me.moment(&nu.add(k))).sum()
        });
        let q = p.clone();
        self.carry_rule(product, p.degree().unwrap_or(0), move |x| q.eval(x))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let me = self.clone();
        let scaled = Self::new(self.dim(), format!("{c}·{}", self.label()), move |nu| {
            c * me.moment(nu)
        });
        self.carry_rule(scaled, 0, move |_| c)
    }

    /// Rescaled so that `⟨u, 1⟩ = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if m == 0.0 || !m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize functional `{}` with mass {m}",
                self.label()
            )));
        }
        let me = self.clone();
        let unit = Self::new(self.dim(), self.label().to_string(), move |nu| {
            me.moment(nu) / m
        });
        Ok(self.carry_rule(unit, 0, move |_| 1.0 / m))
    }

    /// Composition `u_1 ∘ u_2 ∘ …` acting on disjoint groups of variables,
    /// in the given order.
    pub fn tensor(factors: &[MomentFunctional]) -> Self {
        let dims: Vec<usize> = factors.iter().map(MomentFunctional::dim).collect();
        let dim = dims.iter().sum();
        let label = factors
            .iter()
            .map(|f| f.label().to_string())
            .collect::<Vec<_>>()
            .join(" ∘ ");
        let factors = factors.to_vec();
        Self::new(dim, label, move |nu| {
            let mut start = 0;
            let mut acc = 1.0;
            for (f, &k) in factors.iter().zip(&dims) {
                acc *= f.moment(&MultiIndex::new(&nu.as_slice()[start..start + k]));
                start += k;
            }
            acc
        })
    }

    /// The univariate functional
    /// `⟨v, p⟩ = sign · ⟨u, (p(x) − p(c)) / (x − c)⟩ + mass · p(c)`.
    ///
    /// The difference quotient of a monomial is expanded by synthetic
    /// division, `(x^m − c^m)/(x − c) = Σ_{k<m} c^{m-1-k} x^k`.
    pub fn divide_linear(&self, c: f64, sign: f64, mass: f64, label: impl Into<String>) -> Self {
        assert_eq!(self.dim(), 1, "division by a linear factor is univariate");
        let me = self.clone();
        Self::univariate(label, move |m| {
            let mut quotient = 0.0;
            let mut cpow = 1.0;
            for k in (0..m).rev() {
                quotient += cpow * me.moment(&MultiIndex::new(vec![k as u32]));
                cpow *= c;
            }
            sign * quotient + mass * c.powi(m as i32)
        })
    }
}

/// `λ(x) = Σ a_i x_i + b`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearPoly {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearPoly {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        LinearPoly { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn is_degree_one(&self) -> bool {
        self.a.iter().any(|&v| v != 0.0)
    }

    pub fn to_poly(&self) -> Poly {
        Poly::affine(&self.a, self.b)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b
    }

    /// Coefficients `(a_1, …, a_d, b)` scaled to unit Euclidean norm, with
    /// the sign fixed by the first nonzero entry.
    pub fn direction(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.a.iter().copied().chain([self.b]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return v;
        }
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-14 * norm)
            .map_or(1.0, |x| x.signum());
        for x in &mut v {
            *x *= sign / norm;
        }
        v
    }

    /// Max-norm distance between the normalized coefficient directions.
    pub fn direction_error(&self, other: &LinearPoly) -> f64 {
        self.direction()
            .iter()
            .zip(other.direction())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for LinearPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, &a) in self.a.iter().enumerate() {
            if a != 0.0 {
                parts.push(format!("{a:.12}·x{}", i + 1));
            }
        }
        parts.push(format!("{:.12}", self.b));
        write!(f, "{}", parts.join(" + "))
    }
}
