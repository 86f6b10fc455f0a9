//! Krall-type modifications: a classical functional divided by a linear
//! factor plus a point mass at the root of that factor.

use statrs::function::gamma::ln_gamma;

use super::univariate::{jacobi_functional, laguerre_functional};
use super::MomentFunctional;
use crate::error::{Error, Result};

/// `v = x^{-1} u + Γ(α+1)/(α+1-a_1) δ_0` for the unnormalized Laguerre
/// functional `u = t^α e^{-t}`. Satisfies `x v = u`.
pub fn krall_laguerre_functional(alpha: f64, a1: f64) -> Result<MomentFunctional> {
    if !(alpha > -1.0) {
        return Err(Error::InvalidParameter(format!("need α > -1, got {alpha}")));
    }
    if a1 == 0.0 || alpha + 1.0 - a1 == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need a1 ≠ 0 and α + 1 - a1 ≠ 0, got α = {alpha}, a1 = {a1}"
        )));
    }
    let u = laguerre_functional(alpha)?;
    let mass = ln_gamma(alpha + 1.0).exp() / (alpha + 1.0 - a1);
    Ok(u.divide_linear(
        0.0,
        1.0,
        mass,
        format!("krall-laguerre(alpha={alpha},a1={a1})"),
    ))
}

/// `v = (1-x)^{-1} u + ⟨u,1⟩ (α+β+2)/(2(α+1) + a_1(α+β+2)) δ_1` for the
/// unnormalized Jacobi functional `u = (1-x)^α (1+x)^β`. Satisfies
/// `(1-x) v = u`.
pub fn krall_jacobi_functional(alpha: f64, beta: f64, a1: f64) -> Result<MomentFunctional> {
    let u = jacobi_functional(alpha, beta)?;
    let denom = 2.0 * (alpha + 1.0) + a1 * (alpha + beta + 2.0);
    if a1 == 0.0 || denom == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need a1 ≠ 0 and 2(α+1) + a1(α+β+2) ≠ 0, got α = {alpha}, β = {beta}, a1 = {a1}"
        )));
    }
    let mass = u.mass() * (alpha + beta + 2.0) / denom;
    // (1-x)^{-1} u = -(x-1)^{-1} u
    Ok(u.divide_linear(
        1.0,
        -1.0,
        mass,
        format!("krall-jacobi(alpha={alpha},beta={beta},a1={a1})"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexing::MultiIndex;
    use crate::poly::Poly;
    use statrs::function::gamma::gamma;

    fn m(f: &MomentFunctional, k: u32) -> f64 {
        f.moment(&MultiIndex::new(vec![k]))
    }

    #[test]
    fn laguerre_modification() {
        let (alpha, a1) = (0.6, 2.0);
        let v = krall_laguerre_functional(alpha, a1).unwrap();
        assert!((m(&v, 0) - gamma(alpha + 1.0) / (alpha + 1.0 - a1)).abs() < 1e-14);
        for k in 1..10 {
            let want = gamma(k as f64 + alpha);
            assert!((m(&v, k) - want).abs() <= 1e-12 * want);
        }
        let u = laguerre_functional(alpha).unwrap();
        let xv = v.left_multiply(&Poly::var(1, 0));
        for k in 0..=12 {
            assert!((m(&xv, k) - m(&u, k)).abs() <= 1e-10 * m(&u, k));
        }
        assert!(krall_laguerre_functional(0.0, 1.0).is_err());
        assert!(krall_laguerre_functional(0.0, 0.0).is_err());
    }

    #[test]
    fn jacobi_modification() {
        let v = krall_jacobi_functional(0.0, 0.0, 1.0).unwrap();
        let u = jacobi_functional(0.0, 0.0).unwrap();
        assert_eq!(m(&u, 1), 0.0);
        let one_minus_x = Poly::affine(&[-1.0], 1.0);
        let w = v.left_multiply(&one_minus_x);
        for k in 0..=12 {
            assert!((m(&w, k) - m(&u, k)).abs() <= 1e-10 * m(&u, 0));
        }
        // ⟨v,1⟩ is the point mass alone: the divided difference of 1 is 0
        assert!((m(&v, 0) - 2.0 * 2.0 / 4.0).abs() < 1e-15);
        assert!(krall_jacobi_functional(0.0, 0.0, -1.0).is_err());
    }
}
