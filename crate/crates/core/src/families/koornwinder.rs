//! Disk polynomials with adjacent parameters, and tensor products of a
//! Krall modification with a Legendre factor.

use super::coeffs::KrallKind;
use super::{relation_mismatch, Alignment, FamilyBundle};
use crate::construct::{gram_schmidt_monic, koornwinder_system, GsOptions, Rho};
use crate::error::{Error, Result};
use crate::matrixkit::Matrix;
use crate::moments::{
    disk, jacobi_1d, krall_jacobi_functional, krall_laguerre_functional, laguerre_1d, LinearPoly,
    MomentFunctional,
};
use crate::poly::{Poly, UniPoly};

/// `M_n`, `(n+1) × n`, with `diag[k] = f(n - k)` for `k < n` and a zero
/// last row.
fn diagonal_over_zero_row(n: usize, f: impl Fn(usize) -> f64) -> Matrix {
    let mut m = Matrix::zeros(n + 1, n);
    for k in 0..n {
        m[(k, k)] = f(n - k);
    }
    m
}

fn one_minus_x(dim: usize) -> Poly {
    let mut a = vec![0.0; dim];
    a[0] = -1.0;
    Poly::affine(&a, 1.0)
}

/// `Q^{(μ)}_{n-k,k} = P_{n-k,k} - (n-k)/(2n+2μ+2) P_{n-1-k,k}` with `Q`
/// orthogonal on the disk for `(1-x²-y²)^μ` and `P` for `(1-x)` times
/// that weight, both from Koornwinder's construction.
pub fn disk_adjacent(mu: f64, max_degree: usize) -> Result<FamilyBundle> {
    let v = disk(mu)?;
    let u = v.left_multiply(&one_minus_x(2)).with_label(format!("(1-x)·disk(mu={mu})"));
    let w = jacobi_1d(mu, mu)?;
    let rho_w = jacobi_1d(mu + 0.5, mu + 0.5)?;
    let g = UniPoly::new(vec![1.0, 0.0, -1.0]);
    let q = koornwinder_system(
        &w,
        &w,
        &Rho::SqrtQuadratic {
            g: g.clone(),
            rho_w1: rho_w.clone(),
        },
        max_degree,
    )?
    .with_label(format!("disk(mu={mu})"));
    let lin = one_minus_x(1);
    let w1 = w.left_multiply(&lin);
    let p = koornwinder_system(
        &w1,
        &w,
        &Rho::SqrtQuadratic {
            g,
            rho_w1: rho_w.left_multiply(&lin),
        },
        max_degree,
    )?
    .with_label(format!("(1-x)·disk(mu={mu})"));
    let mut m_hat = vec![Matrix::zeros(1, 0)];
    for n in 1..=max_degree {
        let den = 2.0 * n as f64 + 2.0 * mu + 2.0;
        m_hat.push(diagonal_over_zero_row(n, |j| -(j as f64) / den));
    }
    let residual = relation_mismatch(&q, &p, None, &m_hat)?;
    Ok(FamilyBundle {
        name: "disk".into(),
        params: format!("mu={mu}"),
        p,
        u,
        q,
        v: Some(v),
        k_hat: None,
        m_hat,
        relation_residual: Some(residual),
        expected_lambda: Some(LinearPoly::new(vec![-1.0, 0.0], 1.0)),
        paper_orthogonal: true,
        verdict: None,
        checks: Vec::new(),
        notes: Vec::new(),
        alignments: Vec::<(usize, Alignment)>::new(),
    })
}

/// The classical factor, its Krall modification and `λ` with
/// `u = λ v`.
fn krall_pieces(kind: KrallKind, a1: f64) -> Result<(MomentFunctional, MomentFunctional, LinearPoly)> {
    Ok(match kind {
        KrallKind::Laguerre { alpha } => (
            laguerre_1d(alpha)?,
            krall_laguerre_functional(alpha, a1)?,
            LinearPoly::new(vec![1.0, 0.0], 0.0),
        ),
        KrallKind::Jacobi { alpha, beta } => (
            jacobi_1d(alpha, beta)?,
            krall_jacobi_functional(alpha, beta, a1)?,
            LinearPoly::new(vec![-1.0, 0.0], 1.0),
        ),
    })
}

/// The functionals `u = u_x ⊗ w_y` and `v = v_x ⊗ w_y` of the Krall
/// tensor family, `w_y` Legendre.
pub fn krall_tensor_functionals(kind: KrallKind, a1: f64) -> Result<(MomentFunctional, MomentFunctional)> {
    let (ux, vx, _) = krall_pieces(kind, a1)?;
    let wy = jacobi_1d(0.0, 0.0)?;
    Ok((
        MomentFunctional::tensor(&[ux, wy.clone()]),
        MomentFunctional::tensor(&[vx, wy]),
    ))
}

/// `Q_n = P_n + M_n P_{n-1}` with `M_n = diag(a_n, …, a_1)` over a zero
/// row, for `P` monic orthogonal for `u_x ⊗ w_y` and `Q` for `v_x ⊗ w_y`.
///
/// Fails with the quasi-definite error of the Gram–Schmidt process when
/// the modification is not quasi-definite through `N`.
pub fn krall_tensor(kind: KrallKind, a1: f64, max_degree: usize) -> Result<FamilyBundle> {
    if !kind.admissible(a1) {
        return Err(Error::InvalidParameter(format!("a1 = {a1} is not admissible for {kind:?}")));
    }
    let (_, _, lambda) = krall_pieces(kind, a1)?;
    let (u, v) = krall_tensor_functionals(kind, a1)?;
    let opts = GsOptions::default();
    let (p, _) = gram_schmidt_monic(&u, max_degree, opts)?;
    let (q, _) = gram_schmidt_monic(&v, max_degree, opts)?;
    let a: Vec<f64> = (0..=max_degree).map(|n| if n == 0 { 0.0 } else { kind.a(n, a1) }).collect();
    let mut m_hat = vec![Matrix::zeros(1, 0)];
    for n in 1..=max_degree {
        m_hat.push(diagonal_over_zero_row(n, |j| a[j]));
    }
    let residual = relation_mismatch(&q, &p, None, &m_hat)?;
    let (name, params) = match kind {
        KrallKind::Laguerre { alpha } => ("krall-laguerre", format!("alpha={alpha},a1={a1}")),
        KrallKind::Jacobi { alpha, beta } => {
            ("krall-jacobi", format!("alpha={alpha},beta={beta},a1={a1}"))
        }
    };
    Ok(FamilyBundle {
        name: name.into(),
        params,
        p,
        u,
        q,
        v: Some(v),
        k_hat: None,
        m_hat,
        relation_residual: Some(residual),
        expected_lambda: Some(lambda),
        paper_orthogonal: true,
        verdict: None,
        checks: Vec::new(),
        notes: Vec::new(),
        alignments: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::monic_ops_1d;
    use crate::families::run_bundle;
    use crate::report::Tolerances;

    #[test]
    fn disk_relation_holds() {
        for mu in [0.0, 1.5] {
            let b = disk_adjacent(mu, 5).unwrap();
            assert!(b.relation_residual.unwrap() < 1e-12, "{mu}: {:?}", b.relation_residual);
            // the k = n row is zero
            assert!(b.m_hat[3].row(3).iter().all(|&x| x == 0.0));
            let run = run_bundle(b, Tolerances::default()).unwrap();
            let bad: Vec<_> = run.records.iter().filter(|r| !r.pass).collect();
            assert!(run.pass, "{bad:#?}");
        }
    }

    #[test]
    fn krall_1d_relation() {
        let cases = [
            KrallKind::Laguerre { alpha: 0.5 },
            KrallKind::Laguerre { alpha: 0.0 },
            KrallKind::Jacobi { alpha: 0.5, beta: 1.0 },
            KrallKind::Jacobi { alpha: 0.0, beta: 0.5 },
        ];
        for kind in cases {
            let a1 = 2.5;
            let (ux, vx, _) = krall_pieces(kind, a1).unwrap();
            let p = monic_ops_1d(&ux, 6).unwrap();
            let q = monic_ops_1d(&vx, 6).unwrap();
            for n in 1..=6 {
                let built = &p[n] + &p[n - 1].scale(kind.a(n, a1));
                let diff = (&q[n] - &built)
                    .coeffs()
                    .iter()
                    .fold(0.0_f64, |m, c| m.max(c.abs()));
                let scale = q[n].coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                assert!(diff <= 1e-8 * scale, "{kind:?} n={n}: {diff}");
            }
        }
    }

    #[test]
    fn krall_tensor_bundles_pass() {
        for kind in [KrallKind::Laguerre { alpha: 1.0 }, KrallKind::Jacobi { alpha: 1.0, beta: 0.5 }] {
            let b = krall_tensor(kind, 3.0, 5).unwrap();
            let run = run_bundle(b, Tolerances::default()).unwrap();
            let bad: Vec<_> = run.records.iter().filter(|r| !r.pass).collect();
            assert!(run.pass, "{kind:?}: {bad:#?}");
        }
    }
}
