//! Quasi-orthogonal combinations of the symmetric Koornwinder basis built
//! from a Chebyshev weight.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use super::coeffs::{cheb_lambda, cheb_scalar_condition};
use super::FamilyBundle;
use crate::construct::{GramBlocks, PolySystem};
use crate::error::{Error, Result};
use crate::linrel::{apply_relation, direct_orthogonality, theorem4_construct, LinearRelation};
use crate::matrixkit::{max_abs, relative, Matrix};
use crate::moments::{koornwinder_symmetric, ChebyshevKind, Recurrence1D};
use crate::poly::{Poly, UniPoly};
use crate::report::{theorem_records, CheckRecord, Tolerances};
use crate::ttr::{compute_ttr, ttr_residual, ThreeTermData};

/// `x^a y^b + x^b y^a` in `u = x + y`, `v = xy`: `v^{min} s_{|a-b|}` with
/// the power sums `s_0 = 2`, `s_1 = u`, `s_m = u s_{m-1} - v s_{m-2}`.
fn symmetric_monomials(top: usize) -> Vec<Poly> {
    let u = Poly::var(2, 0);
    let v = Poly::var(2, 1);
    let mut s = vec![Poly::constant(2, 2.0), u.clone()];
    for m in 2..=top {
        let next = &(&u * &s[m - 1]) - &(&v * &s[m - 2]);
        s.push(next);
    }
    s
}

/// The orthonormal basis `P_{n,k}`, `k = 0..n`, of the symmetrized weight:
/// `(p_n(x) p_k(y) + p_k(x) p_n(y)) / √2` for `k < n` and `p_n(x) p_n(y)`.
pub fn symmetric_basis(p: &[UniPoly], top: usize) -> Result<PolySystem> {
    let s = symmetric_monomials(top);
    let v = Poly::var(2, 1);
    let sym = |a: usize, b: usize| -> Poly {
        let (lo, hi) = (a.min(b), a.max(b));
        &v.pow(lo as u32) * &s[hi - lo]
    };
    let mut rows = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let mut block = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = Poly::zero(2);
            for (a, &ca) in p[n].coeffs().iter().enumerate() {
                for (b, &cb) in p[k].coeffs().iter().enumerate() {
                    if ca != 0.0 && cb != 0.0 {
                        acc = &acc + &sym(a, b).scale(ca * cb);
                    }
                }
            }
            // acc = p_n(x)p_k(y) + p_k(x)p_n(y)
            let scale = if k == n { 0.5 } else { 1.0 / SQRT_2 };
            block.push(acc.scale(scale));
        }
        rows.push(block);
    }
    PolySystem::from_rows(2, &rows, "symmetric-koornwinder")
}

/// Three-term data of [`symmetric_basis`] for `n < top`, read off from
/// the one-variable recurrence `t p_m = a_m p_{m+1} + b_m p_m + a_{m-1} p_{m-1}`.
///
/// With `F(m, l) = p_m(x) p_l(y) + p_l(x) p_m(y)`,
/// `u F(n, k) = Σ_m c^n_m F(m, k) + Σ_l c^k_l F(n, l)` and
/// `v F(n, k) = Σ_{m,l} c^n_m c^k_l F(m, l)`, `c^n` the recurrence row of
/// `p_n`.
pub fn symmetric_ttr(rec: &Recurrence1D, top: usize) -> Result<ThreeTermData> {
    if rec.len() < top + 1 {
        return Err(Error::InvalidParameter(format!(
            "recurrence has {} terms, need {}",
            rec.len(),
            top + 1
        )));
    }
    // (index, coefficient) pairs of t p_m
    let row = |m: usize| -> Vec<(usize, f64)> {
        let mut r = vec![(m + 1, rec.a[m]), (m, rec.b[m])];
        if m > 0 {
            r.push((m - 1, rec.a[m - 1]));
        }
        r
    };
    let scale = |m: usize, l: usize| if m == l { 0.5 } else { FRAC_1_SQRT_2 };
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for n in 0..top {
        let mut blocks: Vec<[Matrix; 3]> = (0..2)
            .map(|_| {
                [
                    Matrix::zeros(n + 1, n + 2),
                    Matrix::zeros(n + 1, n + 1),
                    Matrix::zeros(n + 1, n),
                ]
            })
            .collect();
        for k in 0..=n {
            // P_{n,k} = s F(n, k); F(m, l) = P_{max, min} / s'
            let s = scale(n, k);
            let mut put = |i: usize, m: usize, l: usize, coef: f64| {
                let (hi, lo) = (m.max(l), m.min(l));
                let v = s * coef / scale(hi, lo);
                let slot = n + 1 - hi;
                blocks[i][slot][(k, lo)] += v;
            };
            for (m, cm) in row(n) {
                put(0, m, k, cm);
            }
            for (l, cl) in row(k) {
                put(0, n, l, cl);
            }
            for (m, cm) in row(n) {
                for (l, cl) in row(k) {
                    put(1, m, l, cm * cl);
                }
            }
        }
        let (mut an, mut bn, mut cn) = (Vec::new(), Vec::new(), Vec::new());
        for [x, y, z] in blocks {
            an.push(x);
            bn.push(y);
            cn.push(z);
        }
        a.push(an);
        b.push(bn);
        c.push(cn);
    }
    ThreeTermData::new(2, a, b, c)
}

/// `M_{n,ρ}`, `(n+1) × n`: `ρ` on the diagonal of the first `n-1` rows,
/// `√2 ρ` and `-ρ²` in the last column of the last two rows.
pub fn m_rho(n: usize, rho: f64) -> Matrix {
    assert!(n >= 1);
    let mut m = Matrix::zeros(n + 1, n);
    for i in 0..n - 1 {
        m[(i, i)] = rho;
    }
    m[(n - 1, n - 1)] = SQRT_2 * rho;
    m[(n, n - 1)] = -rho * rho;
    m
}

/// The printed closed form of `C̃_{n,1}` for `n ≥ 2`.
pub fn c_tilde_display(a: &[f64], b: &[f64], n: usize, rho: f64) -> Matrix {
    let lam = cheb_lambda(a, b, n, rho);
    let mut m = Matrix::zeros(n + 1, n);
    for i in 0..n - 1 {
        m[(i, i)] = lam;
    }
    m[(n - 1, n - 2)] = rho * a[n - 2];
    m[(n - 1, n - 1)] = SQRT_2 * lam;
    m[(n, n - 2)] = -SQRT_2 * rho * rho * a[n - 2];
    m[(n, n - 1)] = -2.0 * rho * lam;
    m
}

/// The printed closed form of `C̃_{1,1}`.
pub fn c_tilde_1_display(a: &[f64], b: &[f64], rho: f64) -> Matrix {
    Matrix::from_column_slice(
        2,
        1,
        &[
            SQRT_2 * a[0] + SQRT_2 * b[0] * rho,
            -2.0 * b[0] * rho * rho - 2.0 * a[0] * rho,
        ],
    )
}

/// How a computed matrix relates to a printed one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    Match,
    SignDiagonal,
    BasisMismatch,
}

impl std::fmt::Display for Alignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Alignment::Match => "match",
            Alignment::SignDiagonal => "sign-diagonal",
            Alignment::BasisMismatch => "basis mismatch",
        })
    }
}

/// Compares `ours` with `shown` up to `S ours T` for sign diagonals `S`,
/// `T`.
pub fn align(ours: &Matrix, shown: &Matrix, tol: f64) -> Alignment {
    if ours.shape() != shown.shape() {
        return Alignment::BasisMismatch;
    }
    let scale = max_abs(ours).max(max_abs(shown)).max(f64::MIN_POSITIVE);
    let close = |x: f64, y: f64| (x - y).abs() <= tol * scale;
    if ours.iter().zip(shown.iter()).all(|(&x, &y)| close(x, y)) {
        return Alignment::Match;
    }
    let (rows, cols) = ours.shape();
    // propagate row/column signs over the nonzero pattern
    let mut s: Vec<Option<f64>> = vec![None; rows];
    let mut t: Vec<Option<f64>> = vec![None; cols];
    for start in 0..rows {
        if s[start].is_some() {
            continue;
        }
        s[start] = Some(1.0);
        let mut stack = vec![(true, start)];
        while let Some((is_row, k)) = stack.pop() {
            if is_row {
                let sk = s[k].unwrap();
                for j in 0..cols {
                    if shown[(k, j)].abs() > tol * scale && t[j].is_none() {
                        t[j] = Some((ours[(k, j)] / shown[(k, j)]).signum() * sk);
                        stack.push((false, j));
                    }
                }
            } else {
                let tk = t[k].unwrap();
                for i in 0..rows {
                    if shown[(i, k)].abs() > tol * scale && s[i].is_none() {
                        s[i] = Some((ours[(i, k)] / shown[(i, k)]).signum() * tk);
                        stack.push((true, i));
                    }
                }
            }
        }
    }
    let ok = (0..rows).all(|i| {
        (0..cols).all(|j| {
            let si = s[i].unwrap_or(1.0);
            let tj = t[j].unwrap_or(1.0);
            close(si * ours[(i, j)] * tj, shown[(i, j)])
        })
    });
    if ok {
        Alignment::SignDiagonal
    } else {
        Alignment::BasisMismatch
    }
}

/// The paper's rule: orthogonal for kind 1 only at `ρ = 0`, kind 2 always,
/// kind 3 unless `ρ = 1`, kind 4 unless `ρ = -1`.
pub fn expected_orthogonal(kind: ChebyshevKind, rho: f64) -> bool {
    match kind {
        ChebyshevKind::First => rho == 0.0,
        ChebyshevKind::Second => true,
        ChebyshevKind::Third => rho != 1.0,
        ChebyshevKind::Fourth => rho != -1.0,
    }
}

/// Builds `P`, `Q_n = P_n + M_{n,ρ} P_{n-1}` and runs the characterization.
///
/// With `direct` set, `P` is built through degree `2N` and `Q` is also
/// tested against its own canonical functional.
pub fn chebyshev_koornwinder(
    kind: ChebyshevKind,
    rho: f64,
    max_degree: usize,
    tol: Tolerances,
    direct: bool,
) -> Result<FamilyBundle> {
    if max_degree < 2 {
        return Err(Error::InvalidParameter("need N ≥ 2".into()));
    }
    let top = if direct { 2 * max_degree } else { max_degree };
    let rec = Recurrence1D::chebyshev(kind, top + 2);
    let p1 = rec.orthonormal_polys(top + 1);
    let u = koornwinder_symmetric(&kind.functional())?;
    let p_full = symmetric_basis(&p1, top + 1)?;
    let p = p_full.truncated(max_degree + 1);
    let mut m = vec![Matrix::zeros(1, 0)];
    for n in 1..=top + 1 {
        m.push(m_rho(n, rho));
    }
    let q_full = apply_relation(&p_full, None, &m, format!("cheb{}-quasi(rho={rho})", kind.number()))?;

    // moment-based checks stop at N; the monomial coefficients of P_{N+1}
    // are only needed for A_N
    let mut checks = Vec::new();
    let p_nominal = p.truncated(max_degree);
    let defect = crate::construct::orthogonality_defect(&u, &p_nominal);
    checks.push(CheckRecord::residual("P orthonormality", defect, tol.res));

    let t = symmetric_ttr(&rec, p.max_degree())?;
    let mut identity: f64 = 0.0;
    for n in 0..t.len() {
        for i in 0..2 {
            identity = identity.max(ttr_residual(&p, &t, n, i));
        }
    }
    checks.push(CheckRecord::residual("P three-term relation", identity, tol.res));
    let h = GramBlocks::of(&u, &p_nominal);
    let from_moments = compute_ttr(&p_nominal, &u, &h, f64::INFINITY)?;
    let mut diff: f64 = 0.0;
    for n in 0..from_moments.len() {
        for i in 0..2 {
            for (x, y) in [
                (&t.a[n][i], &from_moments.a[n][i]),
                (&t.b[n][i], &from_moments.b[n][i]),
                (&t.c[n][i], &from_moments.c[n][i]),
            ] {
                diff = diff.max(relative(max_abs(&(x - y)), t.scale_at(n)));
            }
        }
    }
    checks.push(CheckRecord::residual("P three-term data from moments", diff, tol.res));
    // orthonormal: C_{n,i} = A_{n-1,i}ᵗ
    let mut sym: f64 = 0.0;
    for n in 1..t.len() {
        for i in 0..2 {
            let diff = max_abs(&(&t.c[n][i] - t.a[n - 1][i].transpose()));
            sym = sym.max(relative(diff, t.scale_at(n)));
        }
    }
    checks.push(CheckRecord::residual("P three-term symmetry", sym, tol.res));

    for n in 2..=max_degree {
        let value = cheb_scalar_condition(&rec.a, &rec.b, n, rho);
        checks.push(
            CheckRecord::residual("scalar condition", value.abs(), tol.res)
                .at(n)
                .with_note(format!("λ = {:.6}", cheb_lambda(&rec.a, &rec.b, n, rho))),
        );
    }

    let relation = LinearRelation::from_matrices(2, m[1..=max_degree + 1].to_vec())?;
    let (t_tilde, report) = theorem4_construct(&t, &relation, tol.res, tol.rank)?;
    checks.extend(theorem_records(&report, true));

    let mut notes = Vec::new();
    let mut alignments = Vec::new();
    // the printed forms assume a_0 = a, which fails for the first kind
    let printed = kind != ChebyshevKind::First;
    if printed && t_tilde.len() > 1 {
        let shown = c_tilde_1_display(&rec.a, &rec.b, rho);
        let al = align(&t_tilde.c[1][0], &shown, 1e-10);
        notes.push(format!("C̃_(1,1) vs printed form: {al}"));
        alignments.push((1, al));
    }
    for n in (2..t_tilde.len()).filter(|_| printed) {
        let shown = c_tilde_display(&rec.a, &rec.b, n, rho);
        let al = align(&t_tilde.c[n][0], &shown, 1e-10);
        notes.push(format!("C̃_({n},1) vs printed form: {al}"));
        alignments.push((n, al));
    }

    let verdict = report.pass;
    let q = q_full.truncated(max_degree);
    if direct {
        let dc = direct_orthogonality(&q_full, max_degree, tol.res, tol.rank)?;
        let mut rec = CheckRecord::residual("Q direct orthogonality", dc.defect, tol.res);
        rec.pass = dc.pass;
        if !dc.singular.is_empty() {
            rec = rec.with_note(format!("singular Gram blocks at degrees {:?}", dc.singular));
        }
        checks.push(rec);
    }

    Ok(FamilyBundle {
        name: "cheb-koornwinder".into(),
        params: format!("kind={},rho={rho}", kind.number()),
        p,
        u,
        q,
        v: None,
        k_hat: None,
        m_hat: m[..=max_degree].to_vec(),
        relation_residual: None,
        expected_lambda: None,
        paper_orthogonal: expected_orthogonal(kind, rho),
        verdict: Some(verdict),
        checks,
        notes,
        alignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::orthonormalize;
    use crate::construct::{gram_schmidt_monic, GsOptions};

    #[test]
    fn basis_is_orthonormal_and_triangular() {
        for kind in [ChebyshevKind::First, ChebyshevKind::Third] {
            let rec = Recurrence1D::chebyshev(kind, 8);
            let p = symmetric_basis(&rec.orthonormal_polys(5), 5).unwrap();
            let u = koornwinder_symmetric(&kind.functional()).unwrap();
            let h = GramBlocks::of(&u, &p);
            for (n, hn) in h.h.iter().enumerate() {
                let id = Matrix::identity(n + 1, n + 1);
                let e = max_abs(&(hn - id));
                assert!(e < 1e-10, "{kind:?} n={n} {e:e}");
            }
            assert!(crate::construct::orthogonality_defect(&u, &p) < 1e-10);
            // row k of the leading block only involves u^{n-b} v^b, b <= k
            for n in 0..=5 {
                let g = p.leading(n);
                for i in 0..=n {
                    assert!(g[(i, i)] > 0.0);
                    for j in i + 1..=n {
                        assert_eq!(g[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn gram_schmidt_spans_the_same_blocks() {
        let kind = ChebyshevKind::Second;
        let u = koornwinder_symmetric(&kind.functional()).unwrap();
        let (mono, h) = gram_schmidt_monic(&u, 4, GsOptions::default()).unwrap();
        let on = orthonormalize(&mono, &h).unwrap();
        let rec = Recurrence1D::chebyshev(kind, 6);
        let p = symmetric_basis(&rec.orthonormal_polys(4), 4).unwrap();
        let (pm, _) = p.monic_form().unwrap();
        assert!(pm.max_coeff_diff(&mono) < 1e-11);
        assert!(on.max_coeff_diff(&on) == 0.0);
    }

    #[test]
    fn m_rho_shape() {
        let m = m_rho(3, 2.0);
        assert_eq!(m.shape(), (4, 3));
        assert_eq!(m[(0, 0)], 2.0);
        assert_eq!(m[(1, 1)], 2.0);
        assert_eq!(m[(2, 2)], 2.0 * SQRT_2);
        assert_eq!(m[(3, 2)], -4.0);
        let m1 = m_rho(1, 0.5);
        assert_eq!(m1.as_slice(), &[0.5 * SQRT_2, -0.25]);
    }

    #[test]
    fn alignment_detects_sign_flips() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let b = Matrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        assert_eq!(align(&a, &a, 1e-12), Alignment::Match);
        assert_eq!(align(&a, &b, 1e-12), Alignment::SignDiagonal);
        let c = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -3.0]);
        assert_eq!(align(&a, &c, 1e-12), Alignment::SignDiagonal);
        let d = Matrix::from_row_slice(2, 2, &[1.0, -2.0, 1.0, 3.0]);
        assert_eq!(align(&a, &d, 1e-12), Alignment::BasisMismatch);
    }

    #[test]
    fn recurrence_data_reproduces_the_basis() {
        for k in 1..=4 {
            let kind = ChebyshevKind::from_number(k).unwrap();
            let rec = Recurrence1D::chebyshev(kind, 9);
            let p = symmetric_basis(&rec.orthonormal_polys(7), 7).unwrap();
            let t = symmetric_ttr(&rec, 7).unwrap();
            for n in 0..7 {
                for i in 0..2 {
                    assert!(ttr_residual(&p, &t, n, i) < 1e-12, "kind {k} n {n} i {i}");
                }
                if n > 0 {
                    for i in 0..2 {
                        assert!(max_abs(&(&t.c[n][i] - t.a[n - 1][i].transpose())) < 1e-15);
                    }
                }
            }
            assert!(crate::ttr::validate_rank_conditions(&t, 1e-9).pass);
        }
    }

    #[test]
    fn verdicts_follow_the_rule() {
        let tol = Tolerances::default();
        for k in 1..=4 {
            let kind = ChebyshevKind::from_number(k).unwrap();
            for rho in [-1.0, 0.5, 1.0] {
                let b = chebyshev_koornwinder(kind, rho, 4, tol, false).unwrap();
                assert_eq!(
                    b.verdict,
                    Some(expected_orthogonal(kind, rho)),
                    "kind {k} rho {rho}: {:#?}",
                    b.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
                );
            }
        }
    }

    #[test]
    fn printed_c_tilde_matches_ours() {
        let tol = Tolerances::default();
        for k in 2..=4 {
            let kind = ChebyshevKind::from_number(k).unwrap();
            for rho in [-1.0, 0.5, 2.0] {
                let b = chebyshev_koornwinder(kind, rho, 5, tol, false).unwrap();
                assert_eq!(b.alignments.len(), 5);
                for (n, al) in &b.alignments {
                    assert_eq!(*al, Alignment::Match, "kind {k} rho {rho} n {n}");
                }
            }
        }
        let first = chebyshev_koornwinder(ChebyshevKind::First, 0.5, 3, tol, false).unwrap();
        assert!(first.alignments.is_empty());
    }

    #[test]
    fn direct_check_agrees() {
        let tol = Tolerances::default();
        let good = chebyshev_koornwinder(ChebyshevKind::Second, 2.0, 3, tol, true).unwrap();
        let dc = good.checks.iter().find(|c| c.name == "Q direct orthogonality").unwrap();
        assert!(dc.pass, "{dc:?}");
        let bad = chebyshev_koornwinder(ChebyshevKind::First, 0.5, 3, tol, true).unwrap();
        let dc = bad.checks.iter().find(|c| c.name == "Q direct orthogonality").unwrap();
        assert!(!dc.pass);
    }
}
