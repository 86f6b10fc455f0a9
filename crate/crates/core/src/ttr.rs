//! The vector three-term relation
//! `x_i P_n = A_{n,i} P_{n+1} + B_{n,i} P_n + C_{n,i} P_{n-1}`.

use serde::{Deserialize, Serialize};

use crate::construct::{inner_block, GramBlocks, PolySystem};
use crate::error::{Error, Result};
use crate::indexing::{joint_matrix, rank_count, GradedBasis};
use crate::matrixkit::{
    self, lstsq, max_abs, numeric_rank_scaled, relative, solve_right, Matrix, DEFAULT_RANK_TOL,
};
use crate::moments::MomentFunctional;

/// Default relative tolerance for reconstruction and consistency residuals.
pub const DEFAULT_RES_TOL: f64 = 1e-8;

/// Coefficients `A_{n,i}`, `B_{n,i}`, `C_{n,i}` for `n = 0..len`, indexed
/// `[n][i]`. `C_{0,i}` is stored as an `r_0 × 0` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeTermData {
    pub dim: usize,
    pub a: Vec<Vec<Matrix>>,
    pub b: Vec<Vec<Matrix>>,
    pub c: Vec<Vec<Matrix>>,
}

impl ThreeTermData {
    /// Checks every block shape against `r_n^d`.
    pub fn new(dim: usize, a: Vec<Vec<Matrix>>, b: Vec<Vec<Matrix>>, c: Vec<Vec<Matrix>>) -> Result<Self> {
        if a.len() != b.len() || a.len() != c.len() {
            return Err(Error::ShapeMismatch("A, B, C cover different degree ranges".into()));
        }
        let r = |n: usize| rank_count(dim, n);
        for n in 0..a.len() {
            for (name, blocks, cols) in [
                ("A", &a[n], r(n + 1)),
                ("B", &b[n], r(n)),
                ("C", &c[n], if n == 0 { 0 } else { r(n - 1) }),
            ] {
                if blocks.len() != dim {
                    return Err(Error::ShapeMismatch(format!(
                        "{name}_{n} has {} directions, expected {dim}",
                        blocks.len()
                    )));
                }
                for (i, m) in blocks.iter().enumerate() {
                    if m.shape() != (r(n), cols) {
                        return Err(Error::ShapeMismatch(format!(
                            "{name}_{{{n},{i}}} is {}x{}, expected {}x{cols}",
                            m.nrows(),
                            m.ncols(),
                            r(n)
                        )));
                    }
                }
            }
        }
        Ok(ThreeTermData { dim, a, b, c })
    }

    /// Number of degrees `n` covered.
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Whether `A_{n,i} = L_{n,i}` exactly for every block.
    pub fn is_monic(&self) -> bool {
        let basis = GradedBasis::new(self.dim, self.len() + 1);
        self.a.iter().enumerate().all(|(n, an)| {
            an.iter()
                .enumerate()
                .all(|(i, m)| *m == basis.shift_matrix(n, i).to_matrix())
        })
    }

    /// The first `len` degrees.
    pub fn truncated(&self, len: usize) -> ThreeTermData {
        ThreeTermData {
            dim: self.dim,
            a: self.a[..len].to_vec(),
            b: self.b[..len].to_vec(),
            c: self.c[..len].to_vec(),
        }
    }

    /// Largest block entry at degree `n`, used as the scale of rank
    /// decisions there.
    pub fn scale_at(&self, n: usize) -> f64 {
        [&self.a[n], &self.b[n], &self.c[n]]
            .iter()
            .flat_map(|v| v.iter())
            .map(max_abs)
            .fold(0.0, f64::max)
    }

    pub fn to_envelope(&self) -> TtrEnvelope {
        let text = |v: &Vec<Vec<Matrix>>| {
            v.iter()
                .map(|row| row.iter().map(matrixkit::to_text).collect())
                .collect()
        };
        TtrEnvelope {
            d: self.dim,
            degrees: self.len(),
            a: text(&self.a),
            b: text(&self.b),
            c: text(&self.c),
        }
    }

    pub fn from_envelope(env: &TtrEnvelope) -> Result<Self> {
        let parse = |v: &Vec<Vec<String>>| -> Result<Vec<Vec<Matrix>>> {
            v.iter()
                .map(|row| row.iter().map(|t| matrixkit::from_text(t)).collect())
                .collect()
        };
        let t = Self::new(env.d, parse(&env.a)?, parse(&env.b)?, parse(&env.c)?)?;
        if t.len() != env.degrees {
            return Err(Error::Parse(format!(
                "envelope declares {} degrees but holds {}",
                env.degrees,
                t.len()
            )));
        }
        Ok(t)
    }
}

/// JSON form of [`ThreeTermData`]; `a[n][i]` is the text form of `A_{n,i}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TtrEnvelope {
    pub d: usize,
    pub degrees: usize,
    pub a: Vec<Vec<String>>,
    pub b: Vec<Vec<String>>,
    pub c: Vec<Vec<String>>,
}

/// Coefficients of `A P_{n+1} + B P_n + C P_{n-1}` in the layout of degree
/// `n + 1`.
fn combine(p: &PolySystem, n: usize, a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    let mut out = a * p.block(n + 1);
    out += b * p.padded(n, n + 1);
    if n > 0 {
        out += c * p.padded(n - 1, n + 1);
    }
    out
}

/// Relative residual of the relation at `(n, i)`.
pub fn ttr_residual(p: &PolySystem, t: &ThreeTermData, n: usize, i: usize) -> f64 {
    let lhs = p.times_var(n, i);
    let rhs = combine(p, n, &t.a[n][i], &t.b[n][i], &t.c[n][i]);
    relative(max_abs(&(&lhs - &rhs)), max_abs(&lhs))
}

/// Extracts the three-term coefficients of an orthogonal system for
/// `n = 0..N-1`, `N` its top degree.
///
/// `B_{n,i} = ⟨u, x_i P_n P_nᵗ⟩ H_n^{-1}`,
/// `C_{n,i} = ⟨u, x_i P_n P_{n-1}ᵗ⟩ H_{n-1}^{-1}` and
/// `A_{n,i} = G_{n,n} L_{n,i} G_{n+1,n+1}^{-1}`. Fails with
/// [`Error::NotOrthogonal`] when the reconstruction residual exceeds
/// `tol_res`.
pub fn compute_ttr(
    p: &PolySystem,
    u: &MomentFunctional,
    h: &GramBlocks,
    tol_res: f64,
) -> Result<ThreeTermData> {
    let (d, top) = (p.dim(), p.max_degree());
    let basis = p.basis();
    let mut a = Vec::with_capacity(top);
    let mut b = Vec::with_capacity(top);
    let mut c = Vec::with_capacity(top);
    for n in 0..top {
        let (mut an, mut bn, mut cn) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..d {
            let l = basis.shift_matrix(n, i).to_matrix();
            let a_ni = if p.is_monic() {
                l
            } else {
                solve_right(&(p.leading(n) * l), &p.leading(n + 1))?
            };
            let b_ni = solve_right(&inner_block(u, p, n, p, n, Some(i)), &h.h[n])?;
            let c_ni = if n == 0 {
                Matrix::zeros(1, 0)
            } else {
                solve_right(&inner_block(u, p, n, p, n - 1, Some(i)), &h.h[n - 1])?
            };
            an.push(a_ni);
            bn.push(b_ni);
            cn.push(c_ni);
        }
        a.push(an);
        b.push(bn);
        c.push(cn);
    }
    let t = ThreeTermData::new(d, a, b, c)?;
    for n in 0..top {
        for i in 0..d {
            let residual = ttr_residual(p, &t, n, i);
            if residual > tol_res {
                return Err(Error::NotOrthogonal { degree: n, residual });
            }
        }
    }
    Ok(t)
}

/// A system generated forward from coefficient data, with the relative
/// consistency residual of each degree's overdetermined solve.
#[derive(Clone, Debug)]
pub struct Generated {
    pub system: PolySystem,
    pub residuals: Vec<f64>,
}

impl Generated {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Forward generation: `P_0 = 1` and `P_{n+1}` the least-squares solution
/// of `A_n P_{n+1} = stack_i(x_i P_n - B_{n,i} P_n - C_{n,i} P_{n-1})` with
/// the joint `A_n`. Generates through degree `min(N, len)`.
///
/// Residuals are reported, not enforced; see [`Generated::max_residual`].
pub fn generate_from_ttr(t: &ThreeTermData, max_degree: usize) -> Result<Generated> {
    let d = t.dim;
    let top = max_degree.min(t.len());
    let basis = GradedBasis::shared(d, top + 2);
    let mut blocks = vec![Matrix::from_element(1, 1, 1.0)];
    let mut residuals = Vec::with_capacity(top);
    for n in 0..top {
        let current = PolySystem::new(d, blocks.clone(), "partial")?;
        let rn = basis.rank(n);
        let cols = basis.len_upto(n + 1);
        let mut stack = Matrix::zeros(d * rn, cols);
        for i in 0..d {
            let mut rhs = current.times_var(n, i);
            rhs -= &t.b[n][i] * current.padded(n, n + 1);
            if n > 0 {
                rhs -= &t.c[n][i] * current.padded(n - 1, n + 1);
            }
            stack.view_mut((i * rn, 0), (rn, cols)).copy_from(&rhs);
        }
        let joint = joint_matrix(&t.a[n])?;
        let next = lstsq(&joint, &stack)?;
        let miss = max_abs(&(&joint * &next - &stack));
        residuals.push(relative(miss, max_abs(&stack)));
        blocks.push(next);
    }
    if t.is_monic() {
        // the leading blocks are I up to round-off; make them exact
        for (n, b) in blocks.iter_mut().enumerate() {
            let (off, r) = (basis.offset(n), basis.rank(n));
            let mut lead = b.view_mut((0, off), (r, r));
            if (lead.clone_owned() - Matrix::identity(r, r)).amax() < 1e-12 {
                lead.copy_from(&Matrix::identity(r, r));
            }
        }
    }
    let system = PolySystem::new(d, blocks, "generated")?;
    Ok(Generated { system, residuals })
}

/// Which rank condition a [`RankRecord`] refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankBlock {
    /// `A_{n,i}`, expected rank `r_n`.
    A,
    /// `C_{n+1,i}`, expected rank `r_n`.
    C,
    /// Joint `A_n`, expected rank `r_{n+1}`.
    AJoint,
    /// Joint of `C_{n+1,i}ᵗ`, expected rank `r_{n+1}`.
    CJoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub block: RankBlock,
    /// The `n` of the rank condition; for `C` blocks the matrix is
    /// `C_{n+1,i}`.
    pub degree: usize,
    pub direction: Option<usize>,
    pub rank: usize,
    pub expected: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub records: Vec<RankRecord>,
    pub pass: bool,
}

impl RankReport {
    /// First failing record in `(n, block, i)` order.
    pub fn first_failure(&self) -> Option<&RankRecord> {
        self.records.iter().find(|r| !r.pass)
    }
}

/// Checks `rank A_{n,i} = rank C_{n+1,i} = r_n` and
/// `rank A_n = rank C_{n+1}ᵗ = r_{n+1}` wherever the blocks exist. Ranks are
/// relative to the largest coefficient of the degree involved.
pub fn validate_rank_conditions(t: &ThreeTermData, tol: f64) -> RankReport {
    let d = t.dim;
    let r = |n: usize| rank_count(d, n);
    let mut records = Vec::new();
    let mut push = |block, degree, direction, m: &Matrix, reference: f64, expected| {
        let rank = numeric_rank_scaled(m, tol, reference);
        records.push(RankRecord {
            block,
            degree,
            direction,
            rank,
            expected,
            pass: rank == expected,
        });
    };
    for n in 0..t.len() {
        let scale_a = t.scale_at(n);
        for i in 0..d {
            push(RankBlock::A, n, Some(i), &t.a[n][i], scale_a, r(n));
        }
        push(
            RankBlock::AJoint,
            n,
            None,
            &joint_matrix(&t.a[n]).expect("shapes checked"),
            scale_a,
            r(n + 1),
        );
        if n + 1 < t.len() {
            let scale_c = t.scale_at(n + 1);
            for i in 0..d {
                push(RankBlock::C, n, Some(i), &t.c[n + 1][i], scale_c, r(n));
            }
            let transposed: Vec<Matrix> = t.c[n + 1].iter().map(|m| m.transpose()).collect();
            push(
                RankBlock::CJoint,
                n,
                None,
                &joint_matrix(&transposed).expect("shapes checked"),
                scale_c,
                r(n + 1),
            );
        }
    }
    let pass = records.iter().all(|r| r.pass);
    RankReport { records, pass }
}

/// Default rank tolerance re-exported for callers of this module.
pub const RANK_TOL: f64 = DEFAULT_RANK_TOL;

/// Least-squares fit of `B_{n,i}`, `C_{n,i}` minimizing
/// `‖x_i P_n - A_{n,i} P_{n+1} - B P_n - C P_{n-1}‖` over coefficients,
/// with `A_{n,i}` fixed by the leading blocks as in [`compute_ttr`].
/// Returns the fitted data and, per degree, the largest relative residual
/// over directions.
pub fn fit_ttr(p: &PolySystem, max_degree: usize) -> Result<(ThreeTermData, Vec<f64>)> {
    let d = p.dim();
    let top = max_degree.min(p.max_degree());
    let basis = p.basis();
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    let mut residuals = Vec::with_capacity(top);
    for n in 0..top {
        let rn = basis.rank(n);
        let rm = if n == 0 { 0 } else { basis.rank(n - 1) };
        let mut z = Matrix::zeros(rn + rm, basis.len_upto(n + 1));
        z.view_mut((0, 0), (rn, z.ncols())).copy_from(&p.padded(n, n + 1));
        if n > 0 {
            z.view_mut((rn, 0), (rm, z.ncols()))
                .copy_from(&p.padded(n - 1, n + 1));
        }
        let (mut an, mut bn, mut cn) = (Vec::new(), Vec::new(), Vec::new());
        let mut worst: f64 = 0.0;
        for i in 0..d {
            let l = basis.shift_matrix(n, i).to_matrix();
            let l = if p.is_monic() {
                l
            } else {
                solve_right(&(p.leading(n) * l), &p.leading(n + 1))?
            };
            let target = p.times_var(n, i) - &l * p.block(n + 1);
            let xt = lstsq(&z.transpose(), &target.transpose())?;
            let x = xt.transpose();
            let miss = max_abs(&(&x * &z - &target));
            worst = worst.max(relative(miss, max_abs(&p.times_var(n, i))));
            bn.push(x.columns(0, rn).into_owned());
            cn.push(if n == 0 {
                Matrix::zeros(1, 0)
            } else {
                x.columns(rn, rm).into_owned()
            });
            an.push(l);
        }
        residuals.push(worst);
        a.push(an);
        b.push(bn);
        c.push(cn);
    }
    Ok((ThreeTermData::new(d, a, b, c)?, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{gram_schmidt_monic, orthonormalize, GsOptions};
    use crate::moments::{disk, jacobi_1d, product_chebyshev, ChebyshevKind};
    use crate::poly::Poly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mops(u: &MomentFunctional, n: usize) -> (PolySystem, GramBlocks) {
        gram_schmidt_monic(u, n, GsOptions::default()).unwrap()
    }

    #[test]
    fn monic_mops_has_shift_matrices_as_a() {
        let u = disk(0.5).unwrap();
        let (p, h) = mops(&u, 4);
        let t = compute_ttr(&p, &u, &h, DEFAULT_RES_TOL).unwrap();
        assert!(t.is_monic());
        assert_eq!(t.len(), 4);
        assert!(validate_rank_conditions(&t, RANK_TOL).pass);
    }

    #[test]
    fn chebyshev_second_kind_has_zero_b() {
        let u = product_chebyshev(ChebyshevKind::Second, 2);
        let (p, h) = mops(&u, 5);
        let t = compute_ttr(&p, &u, &h, DEFAULT_RES_TOL).unwrap();
        for bn in &t.b {
            for m in bn {
                assert!(m.amax() < 1e-13);
            }
        }
    }

    #[test]
    fn orthonormal_c_is_transposed_a() {
        let u = disk(1.0).unwrap();
        let (p, h) = mops(&u, 5);
        let on = orthonormalize(&p, &h).unwrap();
        let t = compute_ttr(&on, &u, &GramBlocks::of(&u, &on), DEFAULT_RES_TOL).unwrap();
        for n in 1..t.len() {
            for i in 0..2 {
                assert!((&t.c[n][i] - t.a[n - 1][i].transpose()).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn non_orthogonal_input_is_rejected() {
        let u = disk(0.0).unwrap();
        let (p, _) = mops(&u, 3);
        let wrong = product_chebyshev(ChebyshevKind::First, 2);
        let h = GramBlocks::of(&wrong, &p);
        assert!(matches!(
            compute_ttr(&p, &wrong, &h, DEFAULT_RES_TOL),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn favard_roundtrip_disk() {
        let u = disk(0.0).unwrap();
        let (p, h) = mops(&u, 5);
        let t = compute_ttr(&p, &u, &h, DEFAULT_RES_TOL).unwrap();
        let g = generate_from_ttr(&t, 5).unwrap();
        assert!(g.max_residual() < 1e-10);
        assert!(g.system.is_monic());
        assert!(g.system.max_coeff_diff(&p) < 1e-8);
    }

    #[test]
    fn univariate_generation_is_scalar_recurrence() {
        // monic Legendre: b_n = 0, c_n = n²/(4n²-1)
        let n_max = 6;
        let a: Vec<Vec<Matrix>> = (0..n_max).map(|_| vec![Matrix::identity(1, 1)]).collect();
        let b: Vec<Vec<Matrix>> = (0..n_max).map(|_| vec![Matrix::zeros(1, 1)]).collect();
        let c: Vec<Vec<Matrix>> = (0..n_max)
            .map(|n| {
                let nf = n as f64;
                vec![if n == 0 {
                    Matrix::zeros(1, 0)
                } else {
                    Matrix::from_element(1, 1, nf * nf / (4.0 * nf * nf - 1.0))
                }]
            })
            .collect();
        let t = ThreeTermData::new(1, a, b, c).unwrap();
        let g = generate_from_ttr(&t, n_max).unwrap();
        let (p, _) = mops(&jacobi_1d(0.0, 0.0).unwrap(), n_max);
        assert!(g.system.max_coeff_diff(&p) < 1e-12);
    }

    #[test]
    fn fit_matches_compute_on_mops() {
        let u = disk(0.0).unwrap();
        let (p, h) = mops(&u, 5);
        let t = compute_ttr(&p, &u, &h, DEFAULT_RES_TOL).unwrap();
        let (f, res) = fit_ttr(&p, 5).unwrap();
        assert!(res.iter().all(|&r| r < 1e-12));
        for n in 0..5 {
            for i in 0..2 {
                assert!((&f.b[n][i] - &t.b[n][i]).amax() < 1e-10);
                assert!((&f.c[n][i] - &t.c[n][i]).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn fit_detects_perturbation() {
        let u = disk(0.0).unwrap();
        let (p, _) = mops(&u, 4);
        let mut blocks = p.blocks().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        blocks[2][(1, 0)] += rng.random_range(0.5..1.5);
        let bent = PolySystem::new(2, blocks, "bent").unwrap();
        let (_, res) = fit_ttr(&bent, 4).unwrap();
        // a constant shift of P_2 is absorbed until P_2 enters as P_{n-1}
        assert!(res[..3].iter().all(|&r| r < 1e-12), "{res:?}");
        assert!(res[3] > 1e-3, "{res:?}");
    }

    #[test]
    fn fit_agrees_with_moments_for_orthonormal_systems() {
        let u = disk(1.0).unwrap();
        let (p, _) = mops(&u, 4);
        let on = orthonormalize(&p, &GramBlocks::of(&u, &p)).unwrap();
        let h = GramBlocks::of(&u, &on);
        let t = compute_ttr(&on, &u, &h, DEFAULT_RES_TOL).unwrap();
        let (f, res) = fit_ttr(&on, 4).unwrap();
        assert!(res.iter().all(|&r| r < 1e-12), "{res:?}");
        for n in 0..4 {
            for i in 0..2 {
                assert!(max_abs(&(&t.a[n][i] - &f.a[n][i])) < 1e-12);
                assert!(max_abs(&(&t.b[n][i] - &f.b[n][i])) < 1e-12);
                assert!(max_abs(&(&t.c[n][i] - &f.c[n][i])) < 1e-12);
            }
        }
    }

    #[test]
    fn fit_chebyshev_univariate() {
        // monic Chebyshev T: b = 0, c_1 = 1/2, c_n = 1/4
        let u = ChebyshevKind::First.functional();
        let (p, _) = mops(&u, 6);
        let (f, res) = fit_ttr(&p, 6).unwrap();
        assert!(res.iter().all(|&r| r < 1e-12));
        assert!((f.c[1][0][(0, 0)] - 0.5).abs() < 1e-12);
        for n in 2..6 {
            assert!((f.c[n][0][(0, 0)] - 0.25).abs() < 1e-12);
            assert!(f.b[n][0][(0, 0)].abs() < 1e-12);
        }
    }

    #[test]
    fn zero_c_block_fails_rank() {
        let u = disk(0.0).unwrap();
        let (p, h) = mops(&u, 3);
        let mut t = compute_ttr(&p, &u, &h, DEFAULT_RES_TOL).unwrap();
        t.c[2][1] = Matrix::zeros(3, 2);
        let report = validate_rank_conditions(&t, RANK_TOL);
        assert!(!report.pass);
        let first = report.first_failure().unwrap();
        assert_eq!((first.block, first.degree, first.direction, first.rank), (RankBlock::C, 1, Some(1), 0));
    }

    #[test]
    fn envelope_roundtrip_and_shape_errors() {
        let u = disk(0.0).unwrap();
        let (p, h) = mops(&u, 3);
        let t = compute_ttr(&p, &u, &h, DEFAULT_RES_TOL).unwrap();
        let json = serde_json::to_string(&t.to_envelope()).unwrap();
        let back = ThreeTermData::from_envelope(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, t);
        let mut bad = t.clone();
        bad.b[1][0] = Matrix::zeros(3, 3);
        assert!(ThreeTermData::new(2, bad.a, bad.b, bad.c).is_err());
    }

    #[test]
    fn residual_of_explicit_poly() {
        // x·1 = 1·x + 0 for the monomial system in one variable
        let sys = PolySystem::from_rows(
            1,
            &[vec![Poly::constant(1, 1.0)], vec![Poly::var(1, 0)]],
            "monomials",
        )
        .unwrap();
        let t = ThreeTermData::new(
            1,
            vec![vec![Matrix::identity(1, 1)]],
            vec![vec![Matrix::zeros(1, 1)]],
            vec![vec![Matrix::zeros(1, 0)]],
        )
        .unwrap();
        assert_eq!(ttr_residual(&sys, &t, 0, 0), 0.0);
    }
}
