//! Polynomial systems `P_n = Σ_k G_{n,k} X_k`, their Gram blocks, and the
//! constructions that produce them: monic block Gram–Schmidt, symmetric
//! orthonormalization and Koornwinder's product construction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexing::{GradedBasis, MultiIndex};
use crate::matrixkit::{
    self, inverse_sqrt, max_abs, numeric_rank_scaled, relative, singular_values, solve_right,
    symmetrize, Matrix,
};
use crate::moments::cubature::Cubature;
use crate::moments::MomentFunctional;
use crate::poly::{Poly, UniPoly};

/// A graded sequence of polynomial vectors.
///
/// Block `n` is an `r_n × dim Π_n` coefficient matrix over the global
/// monomial layout of [`GradedBasis`]; columns `offset(k) .. offset(k+1)`
/// hold `G_{n,k}`.
#[derive(Clone, Debug)]
pub struct PolySystem {
    basis: Arc<GradedBasis>,
    blocks: Vec<Matrix>,
    monic: bool,
    label: String,
}

impl PolySystem {
    /// Wraps coefficient blocks after checking their shapes. The monic flag
    /// is set when every leading block is exactly the identity.
    pub fn new(dim: usize, blocks: Vec<Matrix>, label: impl Into<String>) -> Result<Self> {
        let top = blocks.len().saturating_sub(1);
        let basis = GradedBasis::shared(dim, top + 2);
        for (n, b) in blocks.iter().enumerate() {
            let want = (basis.rank(n), basis.len_upto(n));
            if b.shape() != want {
                return Err(Error::ShapeMismatch(format!(
                    "block {n} is {}x{}, expected {}x{}",
                    b.nrows(),
                    b.ncols(),
                    want.0,
                    want.1
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "block {n} has non-finite coefficients"
                )));
            }
        }
        let mut sys = PolySystem {
            basis,
            blocks,
            monic: false,
            label: label.into(),
        };
        sys.monic = (0..sys.blocks.len()).all(|n| {
            let g = sys.leading(n);
            g == Matrix::identity(g.nrows(), g.ncols())
        });
        Ok(sys)
    }

    /// Builds a system from explicit polynomial rows, `rows[n][k]` of total
    /// degree at most `n`.
    pub fn from_rows(dim: usize, rows: &[Vec<Poly>], label: impl Into<String>) -> Result<Self> {
        let basis = GradedBasis::shared(dim, rows.len() + 1);
        let mut blocks = Vec::with_capacity(rows.len());
        for (n, row) in rows.iter().enumerate() {
            if row.len() != basis.rank(n) {
                return Err(Error::ShapeMismatch(format!(
                    "degree {n} has {} polynomials, expected {}",
                    row.len(),
                    basis.rank(n)
                )));
            }
            let mut b = Matrix::zeros(row.len(), basis.len_upto(n));
            for (r, p) in row.iter().enumerate() {
                if p.degree().is_some_and(|d| d > n) {
                    return Err(Error::ShapeMismatch(format!(
                        "polynomial {r} of block {n} has degree above {n}"
                    )));
                }
                for (c, v) in p.to_dense(&basis, n).into_iter().enumerate() {
                    b[(r, c)] = v;
                }
            }
            blocks.push(b);
        }
        Self::new(dim, blocks, label)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.basis
    }

    pub fn max_degree(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn is_monic(&self) -> bool {
        self.monic
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn block(&self, n: usize) -> &Matrix {
        &self.blocks[n]
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    /// Block `n` zero-padded to the layout of degree `degree ≥ n`.
    pub fn padded(&self, n: usize, degree: usize) -> Matrix {
        let b = &self.blocks[n];
        let mut out = Matrix::zeros(b.nrows(), self.basis.len_upto(degree));
        out.view_mut((0, 0), b.shape()).copy_from(b);
        out
    }

    /// `G_{n,k}`.
    pub fn g(&self, n: usize, k: usize) -> Matrix {
        assert!(k <= n);
        let b = &self.blocks[n];
        b.view((0, self.basis.offset(k)), (b.nrows(), self.basis.rank(k)))
            .into_owned()
    }

    /// The leading coefficient `G_{n,n}`.
    pub fn leading(&self, n: usize) -> Matrix {
        self.g(n, n)
    }

    pub fn row_poly(&self, n: usize, r: usize) -> Poly {
        let row: Vec<f64> = self.blocks[n].row(r).iter().copied().collect();
        Poly::from_dense(&self.basis, &row)
    }

    /// Values of `P_n` at a point.
    pub fn eval(&self, n: usize, x: &[f64]) -> Vec<f64> {
        (0..self.blocks[n].nrows())
            .map(|r| self.row_poly(n, r).eval(x))
            .collect()
    }

    /// Coefficients of `x_i P_n`, an `r_n × dim Π_{n+1}` matrix.
    pub fn times_var(&self, n: usize, i: usize) -> Matrix {
        let b = &self.blocks[n];
        let mut out = Matrix::zeros(b.nrows(), self.basis.len_upto(n + 1));
        for c in 0..b.ncols() {
            let target = self
                .basis
                .global_index(&self.basis.at(c).plus_unit(i))
                .expect("basis covers degree n+1");
            for r in 0..b.nrows() {
                out[(r, target)] = b[(r, c)];
            }
        }
        out
    }

    /// The first `n + 1` blocks.
    pub fn truncated(&self, n: usize) -> PolySystem {
        PolySystem {
            basis: Arc::clone(&self.basis),
            blocks: self.blocks[..=n].to_vec(),
            monic: self.monic,
            label: self.label.clone(),
        }
    }

    /// The monic system `G_{n,n}^{-1} P_n` and the leading blocks removed.
    pub fn monic_form(&self) -> Result<(PolySystem, Vec<Matrix>)> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut leads = Vec::with_capacity(self.blocks.len());
        for (n, b) in self.blocks.iter().enumerate() {
            let g = self.leading(n);
            let mut m = matrixkit::solve(&g, b).map_err(|_| {
                Error::InvalidParameter(format!("leading block of degree {n} is singular"))
            })?;
            let off = self.basis.offset(n);
            let r = self.basis.rank(n);
            m.view_mut((0, off), (r, r))
                .copy_from(&Matrix::identity(r, r));
            blocks.push(m);
            leads.push(g);
        }
        let sys = PolySystem::new(self.dim(), blocks, format!("monic {}", self.label))?;
        Ok((sys, leads))
    }

    /// Max-norm distance between coefficient blocks, over common degrees.
    pub fn max_coeff_diff(&self, other: &PolySystem) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                if a.shape() == b.shape() {
                    max_abs(&(a - b))
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn to_envelope(&self) -> SystemEnvelope {
        SystemEnvelope {
            d: self.dim(),
            max_degree: self.max_degree(),
            monic: self.monic,
            label: self.label.clone(),
            blocks: self.blocks.iter().map(matrixkit::to_text).collect(),
        }
    }

    pub fn from_envelope(env: &SystemEnvelope) -> Result<Self> {
        if env.blocks.len() != env.max_degree + 1 {
            return Err(Error::Parse(format!(
                "envelope declares degree {} but holds {} blocks",
                env.max_degree,
                env.blocks.len()
            )));
        }
        let blocks = env
            .blocks
            .iter()
            .map(|t| matrixkit::from_text(t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(env.d, blocks, env.label.clone())
    }
}

/// JSON form of a [`PolySystem`]: each block in the plain-text matrix
/// format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SystemEnvelope {
    pub d: usize,
    pub max_degree: usize,
    pub monic: bool,
    pub label: String,
    pub blocks: Vec<String>,
}

/// `H_n = ⟨u, P_n P_nᵗ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramBlocks {
    pub h: Vec<Matrix>,
}

impl GramBlocks {
    /// Gram blocks of `p` under `u`, symmetrized.
    pub fn of(u: &MomentFunctional, p: &PolySystem) -> GramBlocks {
        let top = p.max_degree();
        if u.cubature(2 * top).is_some() {
            let h = (0..=top).map(|n| symmetrize(&inner_block(u, p, n, p, n, None))).collect();
            return GramBlocks { h };
        }
        let s = u.moment_matrix(p.basis(), top, top, None);
        let h = (0..=top)
            .map(|n| {
                let len = p.basis().len_upto(n);
                let sn = s.view((0, 0), (len, len));
                symmetrize(&(p.block(n) * sn * p.block(n).transpose()))
            })
            .collect();
        GramBlocks { h }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// `⟨u, P_n Q_mᵗ⟩`, optionally with an extra factor `x_i`.
pub fn inner_block(
    u: &MomentFunctional,
    p: &PolySystem,
    n: usize,
    q: &PolySystem,
    m: usize,
    shift: Option<usize>,
) -> Matrix {
    assert_eq!(p.dim(), q.dim());
    if let Some(rule) = u.cubature(n + m + usize::from(shift.is_some())) {
        // pointwise: far better conditioned than contracting moments
        let vp = values(p, n, &rule);
        let vq = values(q, m, &rule);
        let w = Matrix::from_fn(rule.weights.len(), 1, |k, _| {
            rule.weights[k] * shift.map_or(1.0, |i| rule.points[k][i])
        });
        let mut wq = vq.transpose();
        for (mut row, &wk) in wq.row_iter_mut().zip(w.iter()) {
            row *= wk;
        }
        return vp * wq;
    }
    let s = u.moment_matrix(p.basis(), n, m, shift);
    p.block(n) * s * q.block(m).transpose()
}

/// `P_n` at the nodes of `rule`, one column per node.
fn values(p: &PolySystem, n: usize, rule: &Cubature) -> Matrix {
    let basis = p.basis();
    let len = basis.len_upto(n);
    let mono = Matrix::from_fn(len, rule.points.len(), |r, k| {
        let x = &rule.points[k];
        basis.at(r).as_slice().iter().zip(x).map(|(&a, &t)| t.powi(a as i32)).product()
    });
    p.block(n) * mono
}

/// `D^{-1/2} h D^{-1/2}` with `D = |diag(xx)|`; zero diagonal entries fall
/// back to the largest one.
fn diagonally_scaled(h: &Matrix, xx: &Matrix) -> Matrix {
    let top = xx.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let d: Vec<f64> = xx
        .diagonal()
        .iter()
        .map(|v| {
            let v = if v.abs() > 0.0 { v.abs() } else { top };
            if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 }
        })
        .collect();
    Matrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * d[i] * d[j])
}

/// Options for [`gram_schmidt_monic`].
#[derive(Clone, Copy, Debug)]
pub struct GsOptions {
    /// Relative threshold for the rank of each Gram block.
    pub tol_rank: f64,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions {
            tol_rank: matrixkit::DEFAULT_RANK_TOL,
        }
    }
}

/// The monic orthogonal system of `u` through degree `max_degree`, by
/// block Gram–Schmidt with one reorthogonalization pass.
///
/// Fails with [`Error::QuasiDefiniteFailure`] at the first `n` whose Gram
/// block `H_n` is numerically singular. The rank is taken of
/// `D^{-1/2} H_n D^{-1/2}` with `D` the diagonal of `⟨u, X_n X_nᵗ⟩`, against
/// a unit reference, so a block that has cancelled down to round-off counts
/// as rank deficient while variables of very different scale do not. The
/// error carries the singular values of that scaled block.
pub fn gram_schmidt_monic(
    u: &MomentFunctional,
    max_degree: usize,
    opts: GsOptions,
) -> Result<(PolySystem, GramBlocks)> {
    let d = u.dim();
    let basis = GradedBasis::shared(d, max_degree + 2);
    let s = u.moment_matrix(&basis, max_degree, max_degree, None);
    // with a rule, inner products are taken pointwise: the error then grows
    // with the size of the coefficients rather than with its square
    let pointwise = u.cubature(2 * max_degree).map(|rule| {
        let len = basis.len_upto(max_degree);
        let mono = Matrix::from_fn(len, rule.points.len(), |r, k| {
            let x = &rule.points[k];
            basis.at(r).as_slice().iter().zip(x).map(|(&a, &t)| t.powi(a as i32)).product()
        });
        (mono, rule)
    });
    let ip = |a: &Matrix, b: &Matrix| -> Matrix {
        let (la, lb) = (a.ncols(), b.ncols());
        match &pointwise {
            Some((mono, rule)) => {
                let va = a * mono.rows(0, la);
                let mut vb = (b * mono.rows(0, lb)).transpose();
                for (mut row, &w) in vb.row_iter_mut().zip(&rule.weights) {
                    row *= w;
                }
                va * vb
            }
            None => a * s.view((0, 0), (la, lb)) * b.transpose(),
        }
    };
    let mut blocks: Vec<Matrix> = Vec::with_capacity(max_degree + 1);
    let mut grams: Vec<Matrix> = Vec::with_capacity(max_degree + 1);
    for n in 0..=max_degree {
        let (rn, len, off) = (basis.rank(n), basis.len_upto(n), basis.offset(n));
        let mut r = Matrix::zeros(rn, len);
        r.view_mut((0, off), (rn, rn))
            .copy_from(&Matrix::identity(rn, rn));
        for _pass in 0..2 {
            for j in 0..n {
                let lj = basis.len_upto(j);
                let pj = &blocks[j];
                let cross = ip(&r, pj);
                let coef = solve_right(&cross, &grams[j])?;
                let update = &coef * pj;
                let mut head = r.view_mut((0, 0), (rn, lj));
                head -= update;
            }
        }
        r.view_mut((0, off), (rn, rn))
            .copy_from(&Matrix::identity(rn, rn));
        let h = symmetrize(&ip(&r, &r));
        let scaled = diagonally_scaled(&h, &s.view((off, off), (rn, rn)).into_owned());
        if numeric_rank_scaled(&scaled, opts.tol_rank, 1.0) < rn {
            return Err(Error::QuasiDefiniteFailure {
                degree: n,
                singular_values: singular_values(&scaled),
            });
        }
        blocks.push(r);
        grams.push(h);
    }
    let sys = PolySystem::new(d, blocks, format!("MOPS[{}]", u.label()))?;
    debug_assert!(sys.is_monic());
    Ok((sys, GramBlocks { h: grams }))
}

/// `Ĥ_n^{-1/2} P_n` with the symmetric positive square root, so that the
/// result satisfies `⟨u, P̂_n P̂_nᵗ⟩ = I`.
pub fn orthonormalize(p: &PolySystem, h: &GramBlocks) -> Result<PolySystem> {
    let mut blocks = Vec::with_capacity(p.blocks.len());
    for (n, b) in p.blocks.iter().enumerate() {
        let s = inverse_sqrt(&h.h[n]).ok_or(Error::NotPositiveDefinite { degree: n })?;
        blocks.push(s * b);
    }
    PolySystem::new(p.dim(), blocks, format!("orthonormal {}", p.label))
}

/// Max over `n ≠ m` of `‖⟨u, P_n P_mᵗ⟩‖_max`, relative to the largest Gram
/// block.
pub fn orthogonality_defect(u: &MomentFunctional, p: &PolySystem) -> f64 {
    let top = p.max_degree();
    let s = u.moment_matrix(p.basis(), top, top, None);
    let mut off_diag: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for n in 0..=top {
        for m in 0..=n {
            let block = if u.cubature(2 * top).is_some() {
                inner_block(u, p, n, p, m, None)
            } else {
                p.block(n)
                    * s.view((0, 0), (p.basis().len_upto(n), p.basis().len_upto(m)))
                    * p.block(m).transpose()
            };
            if n == m {
                scale = scale.max(max_abs(&block));
            } else {
                off_diag = off_diag.max(max_abs(&block));
            }
        }
    }
    relative(off_diag, scale)
}

/// Univariate monic orthogonal polynomials of a one-variable functional.
pub fn monic_ops_1d(w: &MomentFunctional, n: usize) -> Result<Vec<UniPoly>> {
    assert_eq!(w.dim(), 1);
    let (sys, _) = gram_schmidt_monic(w, n, GsOptions::default())?;
    Ok((0..=n)
        .map(|k| UniPoly::new(sys.block(k).row(0).iter().copied().collect()))
        .collect())
}

/// The mapping `ρ` of Koornwinder's construction.
#[derive(Clone, Debug)]
pub enum Rho {
    /// `ρ` a polynomial of degree at most one.
    Linear(UniPoly),
    /// `ρ = √g` with `g` of degree at most two; `rho_w1` must be the
    /// functional `ρ·w_1`, which cannot be formed from moments of `w_1`.
    SqrtQuadratic {
        g: UniPoly,
        rho_w1: MomentFunctional,
    },
}

fn odd_moments_vanish(w: &MomentFunctional, upto: usize) -> bool {
    let scale = w.mass().abs();
    (1..=upto)
        .step_by(2)
        .all(|k| w.moment(&MultiIndex::new(vec![k as u32])).abs() <= 1e-13 * scale)
}

fn check_rho(w2: &MomentFunctional, rho: &Rho, max_degree: usize) -> Result<()> {
    match rho {
        Rho::Linear(p) if p.degree() > 1 => Err(Error::InadmissibleRho(format!(
            "linear ρ must have degree ≤ 1, got {}",
            p.degree()
        ))),
        Rho::Linear(p) if p.coeffs().iter().all(|&c| c == 0.0) => {
            Err(Error::InadmissibleRho("ρ is identically zero".into()))
        }
        Rho::SqrtQuadratic { g, .. } if g.degree() > 2 => Err(Error::InadmissibleRho(format!(
            "ρ² must have degree ≤ 2, got {}",
            g.degree()
        ))),
        Rho::SqrtQuadratic { rho_w1, .. } if rho_w1.dim() != 1 => Err(
            Error::InadmissibleRho("ρ·w1 must be univariate".into()),
        ),
        Rho::SqrtQuadratic { .. } if !odd_moments_vanish(w2, 2 * max_degree + 1) => Err(
            Error::InadmissibleRho("ρ = √g requires a symmetric w2".into()),
        ),
        _ => Ok(()),
    }
}

/// The univariate functional `ρ^{2k+1} w_1`.
fn rho_weight(w1: &MomentFunctional, rho: &Rho, k: u32) -> MomentFunctional {
    match rho {
        Rho::Linear(p) => {
            let poly = Poly::compose_uni(p, &Poly::var(1, 0)).pow(2 * k + 1);
            w1.left_multiply(&poly)
        }
        Rho::SqrtQuadratic { g, rho_w1 } => {
            let poly = Poly::compose_uni(g, &Poly::var(1, 0)).pow(k);
            rho_w1.left_multiply(&poly)
        }
    }
}

/// Moments of `W(x,y) = w_1(x) w_2(y/ρ(x))`:
/// `s_{(a,b)} = ⟨w_2, t^b⟩ ⟨w_1, x^a ρ^{b+1}⟩`.
pub fn koornwinder_weight(
    w1: &MomentFunctional,
    w2: &MomentFunctional,
    rho: &Rho,
) -> Result<MomentFunctional> {
    check_rho(w2, rho, 4)?;
    let (w1, w2, rho) = (w1.clone(), w2.clone(), rho.clone());
    let label = format!("koornwinder[{} ; {}]", w1.label(), w2.label());
    Ok(MomentFunctional::new(2, label, move |nu| {
        let (a, b) = (nu[0], nu[1]);
        let m2 = w2.moment(&MultiIndex::new(vec![b]));
        if m2 == 0.0 {
            return 0.0;
        }
        let xa = Poly::monomial(MultiIndex::new(vec![a]), 1.0);
        let inner = match &rho {
            Rho::Linear(p) => {
                let r = Poly::compose_uni(p, &Poly::var(1, 0)).pow(b + 1);
                w1.apply(&(&xa * &r))
            }
            Rho::SqrtQuadratic { g, rho_w1 } => {
                if b % 2 == 1 {
                    return 0.0;
                }
                let r = Poly::compose_uni(g, &Poly::var(1, 0)).pow(b / 2);
                rho_w1.apply(&(&xa * &r))
            }
        };
        m2 * inner
    }))
}

/// Koornwinder's bivariate system
/// `Q_{n-k,k}(x,y) = q^{(k)}_{n-k}(x) ρ(x)^k r_k(y/ρ(x))`, with `q^{(k)}`
/// monic orthogonal for `ρ^{2k+1} w_1` and `r` monic orthogonal for `w_2`,
/// expanded over monomials. Rows of each block are ordered `k = 0..n`.
pub fn koornwinder_system(
    w1: &MomentFunctional,
    w2: &MomentFunctional,
    rho: &Rho,
    max_degree: usize,
) -> Result<PolySystem> {
    if w1.dim() != 1 || w2.dim() != 1 {
        return Err(Error::InvalidParameter(
            "Koornwinder construction needs univariate weights".into(),
        ));
    }
    check_rho(w2, rho, max_degree)?;
    let r = monic_ops_1d(w2, max_degree)?;
    let x = Poly::var(2, 0);
    let y = Poly::var(2, 1);
    let (rho_poly, g_poly) = match rho {
        Rho::Linear(p) => (Some(Poly::compose_uni(p, &x)), None),
        Rho::SqrtQuadratic { g, .. } => (None, Some(Poly::compose_uni(g, &x))),
    };
    let mut rows: Vec<Vec<Poly>> = (0..=max_degree).map(|_| Vec::new()).collect();
    for k in 0..=max_degree {
        let q = monic_ops_1d(&rho_weight(w1, rho, k as u32), max_degree - k)?;
        // ρ^k r_k(y/ρ) = Σ_j r_{k,j} y^j ρ^{k-j}
        let mut tail = Poly::zero(2);
        for (j, &c) in r[k].coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let factor = match (&rho_poly, &g_poly) {
                (Some(p), _) => p.pow((k - j) as u32),
                (_, Some(g)) => {
                    if (k - j) % 2 == 1 {
                        // symmetric w2: r_k has the parity of k
                        continue;
                    }
                    g.pow(((k - j) / 2) as u32)
                }
                _ => unreachable!(),
            };
            tail = &tail + &(&y.pow(j as u32) * &factor).scale(c);
        }
        for (m, qm) in q.iter().enumerate() {
            let qx = Poly::compose_uni(qm, &x);
            rows[m + k].push(&qx * &tail);
        }
    }
    let label = format!("koornwinder[{} ; {}]", w1.label(), w2.label());
    PolySystem::from_rows(2, &rows, label)
}

/// The functional `v` with `⟨v, 1⟩ = 1` and `⟨v, P_n⟩ = 0` for `n ≥ 1`,
/// determined on `Π_N` by the triangular recursion
/// `v(X_n) = -G_{n,n}^{-1} Σ_{k<n} G_{n,k} v(X_k)`.
///
/// Moments beyond degree `N` are not determined; querying them panics.
pub fn canonical_functional(p: &PolySystem) -> Result<MomentFunctional> {
    let basis = p.basis();
    let top = p.max_degree();
    let mut vals = vec![0.0; basis.len_upto(top)];
    let g00 = p.block(0)[(0, 0)];
    if g00 == 0.0 {
        return Err(Error::InvalidParameter("P_0 is zero".into()));
    }
    vals[0] = 1.0;
    for n in 1..=top {
        let b = p.block(n);
        let off = basis.offset(n);
        let lower = b.columns(0, off) * Matrix::from_column_slice(off, 1, &vals[..off]);
        let x = matrixkit::solve(&p.leading(n), &(-lower))?;
        for r in 0..basis.rank(n) {
            vals[off + r] = x[(r, 0)];
        }
    }
    let shared = GradedBasis::shared(p.dim(), top + 2);
    let label = format!("canonical[{}]", p.label());
    Ok(MomentFunctional::new(p.dim(), label, move |nu| {
        let g = shared
            .global_index(nu)
            .filter(|&g| g < vals.len())
            .unwrap_or_else(|| panic!("moment {nu:?} beyond degree {top} is undetermined"));
        vals[g]
    }))
}
