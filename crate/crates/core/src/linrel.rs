//! Linear relations `Q_n = P_n + M_n P_{n-1}` between two polynomial
//! systems: extraction from a pair, rank classification, recovery of the
//! linking polynomial `λ` with `u = λ v`, and the constructions that pass
//! three-term data across such a relation.

use serde::{Deserialize, Serialize};

use crate::construct::{canonical_functional, inner_block, GramBlocks, PolySystem};
use crate::error::{Error, Result};
use crate::indexing::{rank_count, GradedBasis};
use crate::matrixkit::{
    self, max_abs, numeric_rank_scaled, relative, solve, solve_right, Matrix,
};
use crate::moments::{LinearPoly, MomentFunctional};
use crate::ttr::{validate_rank_conditions, RankReport, ThreeTermData};

/// Per-degree matrices of a relation. `m[0]` is the empty `r_0 × 0` block.
///
/// `m` is always in monic coordinates. When the relation was extracted from
/// non-monic systems, `k_hat` and `m_hat` hold the coefficients in the
/// systems' own normalization, `Q̂_n = K̂_n P̂_n + M̂_n P̂_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRelation {
    pub dim: usize,
    pub m: Vec<Matrix>,
    pub k_hat: Option<Vec<Matrix>>,
    pub m_hat: Option<Vec<Matrix>>,
    /// Relative size of the Fourier coefficients on `P_j`, `j ≤ n-2`.
    pub tails: Vec<f64>,
    /// Magnitude `M_n` would have if nonzero, used for its rank; zero for
    /// hand-built relations.
    pub references: Vec<f64>,
}

impl LinearRelation {
    /// A relation given directly by its monic matrices `M_1, …, M_N`.
    pub fn from_matrices(dim: usize, m: Vec<Matrix>) -> Result<Self> {
        let mut blocks = vec![Matrix::zeros(1, 0)];
        for (k, mk) in m.into_iter().enumerate() {
            let n = k + 1;
            let want = (rank_count(dim, n), rank_count(dim, n - 1));
            if mk.shape() != want {
                return Err(Error::ShapeMismatch(format!(
                    "M_{n} is {}x{}, expected {}x{}",
                    mk.nrows(),
                    mk.ncols(),
                    want.0,
                    want.1
                )));
            }
            blocks.push(mk);
        }
        let len = blocks.len();
        Ok(LinearRelation {
            dim,
            m: blocks,
            k_hat: None,
            m_hat: None,
            tails: vec![0.0; len],
            references: vec![0.0; len],
        })
    }

    pub fn max_degree(&self) -> usize {
        self.m.len() - 1
    }

    pub fn max_tail(&self) -> f64 {
        self.tails.iter().copied().fold(0.0, f64::max)
    }

    /// The first `n + 1` blocks.
    pub fn truncated(&self, n: usize) -> LinearRelation {
        LinearRelation {
            dim: self.dim,
            m: self.m[..=n].to_vec(),
            k_hat: self.k_hat.as_ref().map(|k| k[..=n].to_vec()),
            m_hat: self.m_hat.as_ref().map(|k| k[..=n].to_vec()),
            tails: self.tails[..=n].to_vec(),
            references: self.references[..=n].to_vec(),
        }
    }

    pub fn to_envelope(&self) -> RelationEnvelope {
        RelationEnvelope {
            d: self.dim,
            m: self.m[1..].iter().map(matrixkit::to_text).collect(),
        }
    }

    pub fn from_envelope(env: &RelationEnvelope) -> Result<Self> {
        let m = env
            .m
            .iter()
            .map(|t| matrixkit::from_text(t))
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrices(env.d, m)
    }
}

/// JSON form of a relation: `m[k]` is the text form of `M_{k+1}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RelationEnvelope {
    pub d: usize,
    pub m: Vec<String>,
}

/// `Q_n = K_n P_n + M_n P_{n-1}` with `K_n = I` when `k` is `None`.
pub fn apply_relation(
    p: &PolySystem,
    k: Option<&[Matrix]>,
    m: &[Matrix],
    label: impl Into<String>,
) -> Result<PolySystem> {
    let top = p.max_degree().min(m.len() - 1);
    let mut blocks = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let mut b = match k {
            Some(k) => &k[n] * p.block(n),
            None => p.block(n).clone(),
        };
        if n > 0 {
            b += &m[n] * p.padded(n - 1, n);
        }
        blocks.push(b);
    }
    PolySystem::new(p.dim(), blocks, label)
}

/// Expands `Q_n` in the orthogonal system `P` of `u`:
/// `M_{n,j} = ⟨u, Q_n P_jᵗ⟩ H_j^{-1}`.
///
/// `h` must be the Gram blocks of `p` under `u`. Either system may be
/// non-monic; the monic `M_n` is `F_n^{-1} M̂_n E_{n-1}` with `F`, `E` the
/// leading blocks of `Q`, `P`. The tail at degree `n` measures the
/// coefficients of `Σ_{j≤n-2} M_{n,j} P_j` against those of `Q_n`.
pub fn compute_relation(
    q: &PolySystem,
    p: &PolySystem,
    u: &MomentFunctional,
    h: &GramBlocks,
) -> Result<LinearRelation> {
    if q.dim() != p.dim() {
        return Err(Error::ShapeMismatch("systems live in different dimensions".into()));
    }
    let top = q.max_degree().min(p.max_degree());
    let monic = q.is_monic() && p.is_monic();
    let (pm, _) = p.monic_form()?;
    let mut m = vec![Matrix::zeros(1, 0)];
    let mut k_hat = vec![solve_right(&inner_block(u, q, 0, p, 0, None), &h.h[0])?];
    let mut m_hat = vec![Matrix::zeros(1, 0)];
    let mut tails = vec![0.0];
    let mut references = vec![0.0];
    for n in 1..=top {
        let q_scale = max_abs(q.block(n));
        let mut tail: f64 = 0.0;
        for j in 0..n.saturating_sub(1) {
            let f = solve_right(&inner_block(u, q, n, p, j, None), &h.h[j])?;
            tail = tail.max(max_abs(&(f * p.block(j))));
        }
        tails.push(relative(tail, q_scale));
        let mh = solve_right(&inner_block(u, q, n, p, n - 1, None), &h.h[n - 1])?;
        let kh = solve_right(&inner_block(u, q, n, p, n, None), &h.h[n])?;
        let mn = solve(&q.leading(n), &(&mh * p.leading(n - 1)))?;
        m.push(mn);
        m_hat.push(mh);
        k_hat.push(kh);
        references.push(relative(max_abs(pm.block(n)), max_abs(pm.block(n - 1))));
    }
    Ok(LinearRelation {
        dim: p.dim(),
        m,
        k_hat: (!monic).then_some(k_hat),
        m_hat: (!monic).then_some(m_hat),
        tails,
        references,
    })
}

/// The relation between two systems read off their coefficients: `Q_n`
/// expanded in `P_n, …, P_0`, which need no functional since the blocks of
/// `P` through degree `n` form a basis of `Π_n`. Tails are the expansion
/// coefficients on `P_j`, `j ≤ n-2`.
pub fn relation_from_coefficients(q: &PolySystem, p: &PolySystem) -> Result<LinearRelation> {
    if q.dim() != p.dim() {
        return Err(Error::ShapeMismatch("systems live in different dimensions".into()));
    }
    let top = q.max_degree().min(p.max_degree());
    let monic = q.is_monic() && p.is_monic();
    let (pm, _) = p.monic_form()?;
    let basis = p.basis();
    let (mut m, mut k_hat, mut m_hat) = (vec![Matrix::zeros(1, 0)], Vec::new(), vec![Matrix::zeros(1, 0)]);
    let (mut tails, mut references) = (vec![0.0], vec![0.0]);
    for n in 0..=top {
        let len = basis.len_upto(n);
        // rows: P_n, P_{n-1}, …, P_0
        let mut z = Matrix::zeros(len, len);
        let mut starts = Vec::with_capacity(n + 1);
        let mut row = 0;
        for j in (0..=n).rev() {
            let b = p.padded(j, n);
            z.view_mut((row, 0), b.shape()).copy_from(&b);
            starts.push((j, row, b.nrows()));
            row += b.nrows();
        }
        let f = solve(&z.transpose(), &q.padded(n, n).transpose())?.transpose();
        let part = |j: usize| {
            let &(_, r0, rows) = starts.iter().find(|s| s.0 == j).expect("degree present");
            f.columns(r0, rows).into_owned()
        };
        k_hat.push(part(n));
        if n == 0 {
            continue;
        }
        let mut tail: f64 = 0.0;
        for j in 0..n - 1 {
            tail = tail.max(max_abs(&(part(j) * p.block(j))));
        }
        tails.push(relative(tail, max_abs(q.block(n))));
        let mh = part(n - 1);
        m.push(solve(&q.leading(n), &(&mh * p.leading(n - 1)))?);
        m_hat.push(mh);
        references.push(relative(max_abs(pm.block(n)), max_abs(pm.block(n - 1))));
    }
    Ok(LinearRelation {
        dim: p.dim(),
        m,
        k_hat: (!monic).then_some(k_hat),
        m_hat: (!monic).then_some(m_hat),
        tails,
        references,
    })
}

/// Outcome of the rank dichotomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankClass {
    Zero,
    Full,
    Mixed,
}

impl std::fmt::Display for RankClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RankClass::Zero => "zero",
            RankClass::Full => "full",
            RankClass::Mixed => "mixed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: RankClass,
    /// `rank M_n` for `n = 1..N`.
    pub ranks: Vec<usize>,
    /// `r_{n-1}` for `n = 1..N`.
    pub full: Vec<usize>,
}

/// Classifies a relation as all-zero, full rank in every degree, or
/// neither. Both systems orthogonal rules out the last case.
pub fn classify_ranks(r: &LinearRelation, tol: f64) -> Classification {
    let ranks: Vec<usize> = (1..=r.max_degree())
        .map(|n| numeric_rank_scaled(&r.m[n], tol, r.references[n]))
        .collect();
    let full: Vec<usize> = (1..=r.max_degree())
        .map(|n| rank_count(r.dim, n - 1))
        .collect();
    let class = if ranks.iter().all(|&k| k == 0) {
        RankClass::Zero
    } else if ranks == full {
        RankClass::Full
    } else {
        RankClass::Mixed
    };
    Classification { class, ranks, full }
}

/// Recovers `λ` from `M_1 = H̃_1 a H_0^{-1}` and
/// `⟨u, 1⟩ = Σ a_i ⟨v, x_i⟩ + b ⟨v, 1⟩`.
///
/// `h` and `h_tilde` are the Gram blocks of the monic `P` under `u` and the
/// monic `Q` under `v`.
pub fn recover_lambda(
    r: &LinearRelation,
    h: &GramBlocks,
    h_tilde: &GramBlocks,
    v: &MomentFunctional,
) -> Result<LinearPoly> {
    if r.max_degree() < 1 {
        return Err(Error::DegenerateLambda("relation has no degree-one block".into()));
    }
    let a = solve(&h_tilde.h[1], &(&r.m[1] * &h.h[0]))?;
    let a: Vec<f64> = a.column(0).iter().copied().collect();
    let d = r.dim;
    let first: f64 = (0..d)
        .map(|i| a[i] * v.moment(&crate::indexing::MultiIndex::unit(d, i)))
        .sum();
    let b = (h.h[0][(0, 0)] - first) / v.mass();
    let amax = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if amax <= 1e-9 * b.abs().max(amax) || amax == 0.0 {
        return Err(Error::DegenerateLambda(format!(
            "recovered linear part {a:?} vanishes"
        )));
    }
    Ok(LinearPoly::new(a, b))
}

/// `max_n ‖M_n H_{n-1} - H̃_n Σ_i a_i L_{n-1,i}ᵗ‖_max`, relative to the
/// larger side.
pub fn verify_mh(r: &LinearRelation, h: &GramBlocks, h_tilde: &GramBlocks, lambda: &LinearPoly) -> f64 {
    let top = r.max_degree().min(h.len() - 1).min(h_tilde.len() - 1);
    let basis = GradedBasis::new(r.dim, top + 1);
    let mut worst: f64 = 0.0;
    for n in 1..=top {
        let lhs = &r.m[n] * &h.h[n - 1];
        let mut sum = Matrix::zeros(basis.rank(n), basis.rank(n - 1));
        for (i, &ai) in lambda.a.iter().enumerate() {
            sum += basis.shift_matrix(n - 1, i).to_matrix().transpose() * ai;
        }
        let rhs = &h_tilde.h[n] * sum;
        let scale = max_abs(&lhs).max(max_abs(&rhs));
        worst = worst.max(relative(max_abs(&(&lhs - &rhs)), scale));
    }
    worst
}

/// One residual of a matrix identity at degree `n`, direction `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub degree: usize,
    pub direction: usize,
    pub residual: f64,
    pub pass: bool,
}

/// Outcome of a Theorem-3 check or Theorem-4 construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: u8,
    /// Degrees `n` whose three-term data the partner received.
    pub degrees: usize,
    pub compatibility: Vec<ResidualRecord>,
    /// Rank conditions on the partner's data. Part of the verdict for the
    /// forward construction only.
    pub ranks: RankReport,
    pub tol_res: f64,
    pub tol_rank: f64,
    pub pass: bool,
}

impl TheoremReport {
    pub fn max_compatibility(&self) -> f64 {
        self.compatibility
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    /// First failing compatibility record in `(n, i)` order.
    pub fn first_incompatible(&self) -> Option<&ResidualRecord> {
        self.compatibility.iter().find(|r| !r.pass)
    }
}

/// `‖X M_{n-1} - M_n Y‖` against the size of the two products.
fn compat_residual(x: &Matrix, m_prev: &Matrix, m_n: &Matrix, y: &Matrix) -> f64 {
    let lhs = x * m_prev;
    let rhs = m_n * y;
    let scale = (max_abs(x) * max_abs(m_prev)).max(max_abs(m_n) * max_abs(y));
    relative(max_abs(&(&lhs - &rhs)), scale)
}

fn check_inputs(t: &ThreeTermData, r: &LinearRelation) -> Result<usize> {
    if t.dim != r.dim {
        return Err(Error::ShapeMismatch("three-term data and relation differ in dimension".into()));
    }
    let len = t.len().min(r.max_degree());
    if len < 1 {
        return Err(Error::ShapeMismatch("need M_1 and the degree-0 coefficients".into()));
    }
    Ok(len)
}

/// Given the monic three-term data of `Q` and a relation, builds the
/// candidate data of `P` with `A = Ã = L`,
/// `B_{n,i} = B̃_{n,i} - M_n A_{n-1,i} + Ã_{n,i} M_{n+1}` and
/// `C_{n,i} = C̃_{n,i} - M_n B_{n-1,i} + B̃_{n,i} M_n`.
///
/// `P` is orthogonal exactly when `M_n C_{n-1,i} = C̃_{n,i} M_{n-1}` for
/// `n ≥ 2`; the verdict is that condition alone.
pub fn theorem3_check(
    t_tilde: &ThreeTermData,
    r: &LinearRelation,
    tol_res: f64,
    tol_rank: f64,
) -> Result<(ThreeTermData, TheoremReport)> {
    let len = check_inputs(t_tilde, r)?;
    let d = r.dim;
    let (mut a, mut b, mut c): (Vec<Vec<Matrix>>, Vec<Vec<Matrix>>, Vec<Vec<Matrix>>) =
        (Vec::new(), Vec::new(), Vec::new());
    for n in 0..len {
        let (mut an, mut bn, mut cn) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..d {
            let mut b_ni = &t_tilde.b[n][i] + &t_tilde.a[n][i] * &r.m[n + 1];
            if n > 0 {
                b_ni -= &r.m[n] * &t_tilde.a[n - 1][i];
            }
            let c_ni = if n == 0 {
                Matrix::zeros(1, 0)
            } else {
                &t_tilde.c[n][i] - &r.m[n] * &b[n - 1][i] + &t_tilde.b[n][i] * &r.m[n]
            };
            an.push(t_tilde.a[n][i].clone());
            bn.push(b_ni);
            cn.push(c_ni);
        }
        a.push(an);
        b.push(bn);
        c.push(cn);
    }
    let p = ThreeTermData::new(d, a, b, c)?;
    let mut compatibility = Vec::new();
    for n in 2..len {
        for i in 0..d {
            let residual = compat_residual(&t_tilde.c[n][i], &r.m[n - 1], &r.m[n], &p.c[n - 1][i]);
            compatibility.push(ResidualRecord {
                degree: n,
                direction: i,
                residual,
                pass: residual <= tol_res,
            });
        }
    }
    let ranks = validate_rank_conditions(&p, tol_rank);
    let pass = compatibility.iter().all(|r| r.pass);
    let report = TheoremReport {
        theorem: 3,
        degrees: len,
        compatibility,
        ranks,
        tol_res,
        tol_rank,
        pass,
    };
    Ok((p, report))
}

/// Given the three-term data of an orthogonal `P` and a relation, builds
/// the candidate data of `Q = P + M P_{n-1}` with `Ã = A`,
/// `B̃_{n,i} = B_{n,i} + M_n A_{n-1,i} - Ã_{n,i} M_{n+1}` and
/// `C̃_{n,i} = C_{n,i} + M_n B_{n-1,i} - B̃_{n,i} M_n`.
///
/// The verdict requires `C̃_{n,i} M_{n-1} = M_n C_{n-1,i}` for `n ≥ 2` and
/// the rank conditions on the candidate data. Degrees without `M_{n+1}`
/// are left out.
pub fn theorem4_construct(
    t: &ThreeTermData,
    r: &LinearRelation,
    tol_res: f64,
    tol_rank: f64,
) -> Result<(ThreeTermData, TheoremReport)> {
    let len = check_inputs(t, r)?;
    let d = r.dim;
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for n in 0..len {
        let (mut an, mut bn, mut cn) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..d {
            let mut b_ni = &t.b[n][i] - &t.a[n][i] * &r.m[n + 1];
            if n > 0 {
                b_ni += &r.m[n] * &t.a[n - 1][i];
            }
            let c_ni = if n == 0 {
                Matrix::zeros(1, 0)
            } else {
                &t.c[n][i] + &r.m[n] * &t.b[n - 1][i] - &b_ni * &r.m[n]
            };
            an.push(t.a[n][i].clone());
            bn.push(b_ni);
            cn.push(c_ni);
        }
        a.push(an);
        b.push(bn);
        c.push(cn);
    }
    let q = ThreeTermData::new(d, a, b, c)?;
    let mut compatibility = Vec::new();
    for n in 2..len {
        for i in 0..d {
            let residual = compat_residual(&q.c[n][i], &r.m[n - 1], &r.m[n], &t.c[n - 1][i]);
            compatibility.push(ResidualRecord {
                degree: n,
                direction: i,
                residual,
                pass: residual <= tol_res,
            });
        }
    }
    let ranks = validate_rank_conditions(&q, tol_rank);
    let pass = compatibility.iter().all(|r| r.pass) && ranks.pass;
    let report = TheoremReport {
        theorem: 4,
        degrees: len,
        compatibility,
        ranks,
        tol_res,
        tol_rank,
        pass,
    };
    Ok((q, report))
}

/// Result of testing a system against its own canonical functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectCheck {
    /// Largest off-diagonal Gram entry relative to the diagonal blocks.
    pub defect: f64,
    /// Degrees whose Gram block is numerically singular.
    pub singular: Vec<usize>,
    pub pass: bool,
}

/// Orthogonality of `sys` through degree `n`, tested against the functional
/// it determines (`⟨v,1⟩ = 1`, `⟨v, P_k⟩ = 0` for `k ≥ 1`). Needs `sys`
/// through degree `2n`.
pub fn direct_orthogonality(sys: &PolySystem, n: usize, tol_res: f64, tol_rank: f64) -> Result<DirectCheck> {
    if sys.max_degree() < 2 * n {
        return Err(Error::InvalidParameter(format!(
            "direct test through degree {n} needs the system through degree {}",
            2 * n
        )));
    }
    let v = canonical_functional(sys)?;
    let low = sys.truncated(n);
    let s = v.moment_matrix(low.basis(), n, n, None);
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut singular = Vec::new();
    for k in 0..=n {
        for j in 0..=k {
            let (lk, lj) = (low.basis().len_upto(k), low.basis().len_upto(j));
            let block = low.block(k) * s.view((0, 0), (lk, lj)) * low.block(j).transpose();
            if j == k {
                scale = scale.max(max_abs(&block));
                let (off, r) = (low.basis().offset(k), low.basis().rank(k));
                let xx = low.leading(k)
                    * s.view((off, off), (r, r))
                    * low.leading(k).transpose();
                if numeric_rank_scaled(&block, tol_rank, max_abs(&xx)) < r {
                    singular.push(k);
                }
            } else {
                defect = defect.max(max_abs(&block));
            }
        }
    }
    let defect = relative(defect, scale);
    Ok(DirectCheck {
        defect,
        pass: defect <= tol_res && singular.is_empty(),
        singular,
    })
}

/// The explicit two-variable example with a relation that passes the
/// compatibility condition but breaks the rank condition.
#[derive(Clone, Debug)]
pub struct Counterexample {
    /// `A = L`, `C_{n,i} = -L_{n-1,i}ᵗ`,
    /// `B_{n,i} = L_{n,i} C_{n+1,i} - C_{n,i} L_{n-1,i}`.
    pub p: ThreeTermData,
    /// `M_n = C_{n,1}`.
    pub relation: LinearRelation,
    pub q: ThreeTermData,
    pub report: TheoremReport,
    /// Max residual of `B̃_{n,1} = 0`, `B̃_{n,2} = B_{n,2}`,
    /// `C̃_{n,2} = C_{n,2}` and `C̃_{n,1} = C_{n,1}(I + B_{n-1,1})`.
    pub identity_residual: f64,
}

/// Builds the example for degrees `0..=n_max`.
pub fn counterexample(n_max: usize, tol_res: f64, tol_rank: f64) -> Result<Counterexample> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("the example needs n_max ≥ 2".into()));
    }
    let d = 2;
    let basis = GradedBasis::new(d, n_max + 3);
    let l = |n: usize, i: usize| basis.shift_matrix(n, i).to_matrix();
    let c_blk = |n: usize, i: usize| -> Matrix {
        if n == 0 {
            Matrix::zeros(1, 0)
        } else {
            -l(n - 1, i).transpose()
        }
    };
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for n in 0..=n_max {
        a.push((0..d).map(|i| l(n, i)).collect());
        c.push((0..d).map(|i| c_blk(n, i)).collect());
        b.push(
            (0..d)
                .map(|i| {
                    let mut m = l(n, i) * c_blk(n + 1, i);
                    if n > 0 {
                        m -= c_blk(n, i) * l(n - 1, i);
                    }
                    m
                })
                .collect::<Vec<_>>(),
        );
    }
    let p = ThreeTermData::new(d, a, b, c)?;
    let relation =
        LinearRelation::from_matrices(d, (1..=n_max + 1).map(|n| c_blk(n, 0)).collect())?;
    let (q, report) = theorem4_construct(&p, &relation, tol_res, tol_rank)?;
    let mut worst: f64 = 0.0;
    for n in 0..q.len() {
        worst = worst.max(max_abs(&q.b[n][0]));
        worst = worst.max(max_abs(&(&q.b[n][1] - &p.b[n][1])));
        if n > 0 {
            worst = worst.max(max_abs(&(&q.c[n][1] - &p.c[n][1])));
            let r = basis.rank(n - 1);
            let want = &p.c[n][0] * (Matrix::identity(r, r) + &p.b[n - 1][0]);
            worst = worst.max(max_abs(&(&q.c[n][0] - want)));
        }
    }
    Ok(Counterexample {
        p,
        relation,
        q,
        report,
        identity_residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{gram_schmidt_monic, GsOptions};
    use crate::matrixkit::numeric_rank;
    use crate::moments::{disk, laguerre_1d};
    use crate::poly::Poly;
    use crate::ttr::{compute_ttr, generate_from_ttr, DEFAULT_RES_TOL, RANK_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mops(u: &MomentFunctional, n: usize) -> (PolySystem, GramBlocks) {
        gram_schmidt_monic(u, n, GsOptions::default()).unwrap()
    }

    #[test]
    fn coefficient_relation_matches_the_functional_route() {
        let v = disk(1.0).unwrap();
        let u = v.left_multiply(&Poly::affine(&[-1.0, 0.0], 1.0));
        let (p, h) = mops(&u, 5);
        let (q, _) = mops(&v, 5);
        let a = compute_relation(&q, &p, &u, &h).unwrap();
        let b = relation_from_coefficients(&q, &p).unwrap();
        assert!(b.max_tail() < 1e-12);
        for n in 1..=5 {
            assert!(max_abs(&(&a.m[n] - &b.m[n])) < 1e-10, "n={n}");
        }
        // an arbitrary relation comes back exactly
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m: Vec<Matrix> = (0..=4)
            .map(|n| {
                if n == 0 {
                    Matrix::zeros(1, 0)
                } else {
                    Matrix::from_fn(n + 1, n, |_, _| rng.random_range(-1.0..1.0))
                }
            })
            .collect();
        let built = apply_relation(&p, None, &m, "built").unwrap();
        let back = relation_from_coefficients(&built, &p).unwrap();
        for n in 1..=4 {
            assert!(max_abs(&(&back.m[n] - &m[n])) < 1e-10);
        }
        // read backwards, P_n = Q_n - M_n Q_{n-1} + M_n M_{n-1} P_{n-2} - …
        assert!(relation_from_coefficients(&p, &q).unwrap().max_tail() > 1e-3);
    }

    struct DiskPair {
        u: MomentFunctional,
        v: MomentFunctional,
        p: PolySystem,
        q: PolySystem,
        h: GramBlocks,
        ht: GramBlocks,
    }

    fn disk_pair(mu: f64, n: usize) -> DiskPair {
        let v = disk(mu).unwrap();
        let u = v.left_multiply(&Poly::affine(&[-1.0, 0.0], 1.0));
        let (p, h) = mops(&u, n);
        let (q, ht) = mops(&v, n);
        DiskPair { u, v, p, q, h, ht }
    }

    #[test]
    fn identical_systems_give_zero_relation() {
        let pair = disk_pair(0.0, 4);
        let r = compute_relation(&pair.p, &pair.p, &pair.u, &pair.h).unwrap();
        assert!(r.m[1..].iter().all(|m| m.amax() < 1e-12));
        assert!(r.max_tail() < 1e-12);
        assert_eq!(classify_ranks(&r, RANK_TOL).class, RankClass::Zero);
    }

    #[test]
    fn disk_pair_relation_is_full_with_small_tail() {
        let mu = 0.0;
        let pair = disk_pair(mu, 6);
        let r = compute_relation(&pair.q, &pair.p, &pair.u, &pair.h).unwrap();
        assert!(r.max_tail() < 1e-10, "{}", r.max_tail());
        let c = classify_ranks(&r, RANK_TOL);
        assert_eq!(c.class, RankClass::Full, "{c:?}");
        // monic M_1 = -1/(2μ+4) e_1 in the x direction
        assert!((r.m[1][(0, 0)] + 1.0 / (2.0 * mu + 4.0)).abs() < 1e-12);
        assert!(r.m[1][(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn recovers_one_minus_x_and_mh_identity() {
        for mu in [0.0, 1.5] {
            let pair = disk_pair(mu, 6);
            let r = compute_relation(&pair.q, &pair.p, &pair.u, &pair.h).unwrap();
            let lambda = recover_lambda(&r, &pair.h, &pair.ht, &pair.v).unwrap();
            let want = LinearPoly::new(vec![-1.0, 0.0], 1.0);
            assert!(lambda.direction_error(&want) < 1e-10, "{lambda}");
            assert!((lambda.b - 1.0).abs() < 1e-10);
            assert!(verify_mh(&r, &pair.h, &pair.ht, &lambda) < 1e-10);
            let wrong = LinearPoly::new(vec![-1.1, 0.2], 1.0);
            assert!(verify_mh(&r, &pair.h, &pair.ht, &wrong) > 1e-2);
        }
    }

    #[test]
    fn zero_relation_with_constant_lambda() {
        let pair = disk_pair(0.0, 3);
        let r = LinearRelation::from_matrices(2, vec![Matrix::zeros(2, 1), Matrix::zeros(3, 2)]).unwrap();
        let lambda = LinearPoly::new(vec![0.0, 0.0], 1.0);
        assert_eq!(verify_mh(&r, &pair.h, &pair.ht, &lambda), 0.0);
        assert!(matches!(
            recover_lambda(&r, &pair.h, &pair.ht, &pair.v),
            Err(Error::DegenerateLambda(_))
        ));
    }

    #[test]
    fn handcrafted_mixed_relation() {
        let r = LinearRelation::from_matrices(
            2,
            vec![Matrix::from_row_slice(2, 1, &[1.0, 0.0]), Matrix::zeros(3, 2)],
        )
        .unwrap();
        let c = classify_ranks(&r, RANK_TOL);
        assert_eq!(c.class, RankClass::Mixed);
        assert_eq!(c.ranks, vec![1, 0]);
        assert!(LinearRelation::from_matrices(2, vec![Matrix::zeros(1, 1)]).is_err());
    }

    #[test]
    fn theorem3_on_disk_pair() {
        let pair = disk_pair(0.5, 6);
        let r = compute_relation(&pair.q, &pair.p, &pair.u, &pair.h).unwrap();
        let tq = compute_ttr(&pair.q, &pair.v, &pair.ht, DEFAULT_RES_TOL).unwrap();
        let (tp, report) = theorem3_check(&tq, &r, DEFAULT_RES_TOL, RANK_TOL).unwrap();
        assert!(report.pass, "{:?}", report.first_incompatible());
        assert!(report.max_compatibility() < 1e-8);
        let direct = compute_ttr(&pair.p, &pair.u, &pair.h, DEFAULT_RES_TOL).unwrap();
        for n in 0..tp.len() {
            for i in 0..2 {
                assert!((&tp.b[n][i] - &direct.b[n][i]).amax() < 1e-8);
                assert!((&tp.c[n][i] - &direct.c[n][i]).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn theorem3_with_zero_relation_returns_same_data() {
        let pair = disk_pair(0.0, 4);
        let tq = compute_ttr(&pair.q, &pair.v, &pair.ht, DEFAULT_RES_TOL).unwrap();
        let zero = LinearRelation::from_matrices(
            2,
            (1..=4).map(|n| Matrix::zeros(n + 1, n)).collect(),
        )
        .unwrap();
        let (tp, report) = theorem3_check(&tq, &zero, DEFAULT_RES_TOL, RANK_TOL).unwrap();
        assert!(report.pass);
        assert_eq!(tp, tq.truncated(4));
    }

    #[test]
    fn theorem3_rejects_random_relation() {
        let pair = disk_pair(0.0, 5);
        let tq = compute_ttr(&pair.q, &pair.v, &pair.ht, DEFAULT_RES_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m: Vec<Matrix> = (1..=5)
            .map(|n| Matrix::from_fn(n + 1, n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        assert!(m.iter().enumerate().all(|(k, mk)| numeric_rank(mk, 1e-9) == k + 1));
        let r = LinearRelation::from_matrices(2, m).unwrap();
        let (_, report) = theorem3_check(&tq, &r, DEFAULT_RES_TOL, RANK_TOL).unwrap();
        assert!(!report.pass);
        assert!(report.max_compatibility() > 1e-3);
    }

    #[test]
    fn theorem4_on_disk_pair_reproduces_q() {
        let pair = disk_pair(0.0, 7);
        let r = compute_relation(&pair.q, &pair.p, &pair.u, &pair.h).unwrap();
        let tp = compute_ttr(&pair.p, &pair.u, &pair.h, DEFAULT_RES_TOL).unwrap();
        let (tq, report) = theorem4_construct(&tp, &r, DEFAULT_RES_TOL, RANK_TOL).unwrap();
        assert!(report.pass, "{report:?}");
        let g = generate_from_ttr(&tq, 7).unwrap();
        assert!(g.max_residual() < 1e-10);
        assert!(g.system.max_coeff_diff(&pair.q.truncated(7)) < 1e-8);
    }

    #[test]
    fn counterexample_matches_displayed_identities() {
        let ce = counterexample(8, 1e-10, RANK_TOL).unwrap();
        assert!(ce.identity_residual < 1e-14);
        // B_{n,1} is zero except a -1 in the last diagonal entry
        for n in 0..=8 {
            let b = &ce.p.b[n][0];
            assert_eq!(b[(n, n)], -1.0);
            assert_eq!(b.iter().filter(|&&x| x != 0.0).count(), 1);
        }
        assert!(ce.report.max_compatibility() < 1e-14);
        assert!(!ce.report.pass);
        for rec in &ce.report.ranks.records {
            let deficient = rec.block == crate::ttr::RankBlock::C && rec.direction == Some(0);
            if deficient {
                assert_eq!(rec.rank, rec.degree, "C̃_{{{},1}}", rec.degree + 1);
            } else if rec.block == crate::ttr::RankBlock::CJoint && rec.degree == 0 {
                // C̃_{1,1} = 0, so the joint C̃_1ᵗ has rank 1
                assert_eq!(rec.rank, 1);
            } else {
                assert!(rec.pass, "{rec:?}");
            }
        }
        let g = generate_from_ttr(&ce.q, 8).unwrap();
        assert!(g.max_residual() < 1e-10);
    }

    #[test]
    fn direct_check_agrees_with_theorem4() {
        let pair = disk_pair(0.0, 8);
        let tp = compute_ttr(&pair.p, &pair.u, &pair.h, DEFAULT_RES_TOL).unwrap();
        let r = compute_relation(&pair.q, &pair.p, &pair.u, &pair.h).unwrap();
        let (tq, _) = theorem4_construct(&tp, &r, DEFAULT_RES_TOL, RANK_TOL).unwrap();
        let g = generate_from_ttr(&tq, 8).unwrap();
        assert!(direct_orthogonality(&g.system, 4, 1e-8, RANK_TOL).unwrap().pass);
        let ce = counterexample(9, 1e-10, RANK_TOL).unwrap();
        let gq = generate_from_ttr(&ce.q, 8).unwrap();
        let direct = direct_orthogonality(&gq.system, 4, 1e-8, RANK_TOL).unwrap();
        assert!(!direct.pass, "{direct:?}");
    }

    #[test]
    fn scale_invariance() {
        let v = laguerre_1d(0.5).unwrap();
        let v = MomentFunctional::tensor(&[v.clone(), v]);
        let u = v.left_multiply(&Poly::var(2, 0));
        let (q, _) = mops(&v, 5);
        let (p, h) = mops(&u, 5);
        let r = compute_relation(&q, &p, &u, &h).unwrap();
        let u3 = u.scaled(3.0);
        let (p3, h3) = mops(&u3, 5);
        let r3 = compute_relation(&q, &p3, &u3, &h3).unwrap();
        assert_eq!(classify_ranks(&r, RANK_TOL), classify_ranks(&r3, RANK_TOL));
        for n in 1..=5 {
            assert!((&r.m[n] - &r3.m[n]).amax() <= 1e-9 * r.m[n].amax());
        }
    }

    #[test]
    fn apply_relation_inverts_compute() {
        let pair = disk_pair(1.0, 5);
        let r = compute_relation(&pair.q, &pair.p, &pair.u, &pair.h).unwrap();
        let rebuilt = apply_relation(&pair.p, None, &r.m, "Q").unwrap();
        assert!(rebuilt.max_coeff_diff(&pair.q) < 1e-10);
    }

    #[test]
    fn relation_envelope_roundtrip() {
        let ce = counterexample(3, 1e-10, RANK_TOL).unwrap();
        let json = serde_json::to_string(&ce.relation.to_envelope()).unwrap();
        let back = LinearRelation::from_envelope(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.m, ce.relation.m);
    }
}
