//! Closed-form scalar coefficients of the catalog relations.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// `(a)_n = a (a+1) ⋯ (a+n-1)`, `(a)_0 = 1`.
pub fn pochhammer(a: f64, n: usize) -> f64 {
    (0..n).map(|k| a + k as f64).product()
}

/// `c_m^{(a,b)}` in `p_m^{(a,b)} = c_m p_m^{(a,b+1)} + d_m p_{m-1}^{(a,b+1)}`
/// for orthonormal Jacobi polynomials.
pub fn jacobi_c(m: usize, a: f64, b: f64) -> f64 {
    let m = m as f64;
    (2.0 * (m + b + 1.0) * (m + a + b + 1.0)
        / ((2.0 * m + a + b + 2.0) * (2.0 * m + a + b + 1.0)))
        .sqrt()
}

/// `d_m^{(a,b)}`; zero at `m = 0`.
pub fn jacobi_d(m: usize, a: f64, b: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    (2.0 * m * (m + a) / ((2.0 * m + a + b + 1.0) * (2.0 * m + a + b))).sqrt()
}

/// `f_m^{(a,b)} = (m+a+b+1)/(2m+a+b+1)`.
pub fn jacobi_f(m: usize, a: f64, b: f64) -> f64 {
    let m = m as f64;
    (m + a + b + 1.0) / (2.0 * m + a + b + 1.0)
}

/// `g_m^{(a,b)} = (m+b)/(2m+a+b+1)`.
pub fn jacobi_g(m: usize, a: f64, b: f64) -> f64 {
    let m = m as f64;
    (m + b) / (2.0 * m + a + b + 1.0)
}

fn tail_sum(v: &[f64], from: usize) -> f64 {
    v.iter().skip(from).sum()
}

/// Parameters `(a_j, b_j)` of the `j`-th Jacobi factor (zero-based `j`) of
/// the simplex basis element `ν`, for `κ = (κ_1, …, κ_{d+1})`.
pub fn simplex_params(kappa: &[f64], nu: &[u32], j: usize) -> (f64, f64) {
    let d = nu.len();
    let nu_f: Vec<f64> = nu.iter().map(|&v| v as f64).collect();
    // one-based: a_j = |κ^{j+1}| + 2|ν^{j+1}| + (d-j-1)/2
    let jj = (j + 1) as f64;
    let a = tail_sum(kappa, j + 1) + 2.0 * tail_sum(&nu_f, j + 1) + (d as f64 - jj - 1.0) / 2.0;
    (a, kappa[j] - 0.5)
}

/// `h_ν^{(κ)}`:
/// `h² = Π_j (|κ^j| + 2|ν^{j+1}| + (d-j+2)/2)_{2ν_j} / (|κ| + (d+1)/2)_{2|ν|}`.
pub fn simplex_h(kappa: &[f64], nu: &[u32]) -> f64 {
    let d = nu.len();
    let nu_f: Vec<f64> = nu.iter().map(|&v| v as f64).collect();
    let mut num = 1.0;
    for j in 0..d {
        let jj = (j + 1) as f64;
        let base = tail_sum(kappa, j) + 2.0 * tail_sum(&nu_f, j + 1) + (d as f64 - jj + 2.0) / 2.0;
        num *= pochhammer(base, 2 * nu[j] as usize);
    }
    let total: usize = nu.iter().map(|&v| v as usize).sum();
    let den = pochhammer(kappa.iter().sum::<f64>() + (d as f64 + 1.0) / 2.0, 2 * total);
    (num / den).sqrt()
}

/// `α_n` of the Laguerre modification, `α ≠ 0`:
/// `Γ(n)Γ(α+1)(α+1-a_1) + (a_1-1)Γ(n+α)`.
pub fn krall_laguerre_alpha(n: usize, alpha: f64, a1: f64) -> f64 {
    let nf = n as f64;
    gamma(nf) * gamma(alpha + 1.0) * (alpha + 1.0 - a1) + (a1 - 1.0) * gamma(nf + alpha)
}

/// `α̃_n = (a_1-1) H_{n-1} + 1` of the Laguerre modification at `α = 0`.
pub fn krall_laguerre_alpha_tilde(n: usize, a1: f64) -> f64 {
    let harmonic: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    (a1 - 1.0) * harmonic + 1.0
}

/// `a_n` of the Laguerre modification, `n ≥ 1`.
pub fn krall_laguerre_a(n: usize, alpha: f64, a1: f64) -> f64 {
    if n == 1 {
        a1
    } else if alpha != 0.0 {
        krall_laguerre_alpha(n + 1, alpha, a1) / krall_laguerre_alpha(n, alpha, a1)
    } else {
        n as f64 * krall_laguerre_alpha_tilde(n + 1, a1) / krall_laguerre_alpha_tilde(n, a1)
    }
}

/// The constant `M` of the Jacobi modification.
pub fn krall_jacobi_m(alpha: f64, beta: f64, a1: f64) -> f64 {
    -(2.0 * (beta + 1.0) + a1 * (alpha + beta + 1.0) * (alpha + beta + 2.0))
        / (2.0 * (alpha + 1.0) + a1 * (alpha + beta + 2.0))
}

/// `α_n` of the Jacobi modification, `α ≠ 0`.
pub fn krall_jacobi_alpha(n: usize, alpha: f64, beta: f64, a1: f64) -> f64 {
    let nf = n as f64;
    let m = krall_jacobi_m(alpha, beta, a1);
    gamma(alpha + 1.0) * gamma(alpha + beta + 2.0) * gamma(nf) * gamma(nf + beta)
        + m * gamma(beta + 1.0) * gamma(nf + alpha) * gamma(nf + alpha + beta)
}

/// `α̃_n` of the Jacobi modification at `α = 0`.
pub fn krall_jacobi_alpha_tilde(n: usize, beta: f64, a1: f64) -> f64 {
    let sum: f64 = (1..n)
        .map(|i| 1.0 / i as f64 + 1.0 / (beta + i as f64))
        .sum();
    2.0 * (beta + 2.0) / (2.0 + a1 * (beta + 2.0)) - (beta + 1.0) * sum
}

/// `a_n` of the Jacobi modification, `n ≥ 1`.
pub fn krall_jacobi_a(n: usize, alpha: f64, beta: f64, a1: f64) -> f64 {
    if n == 1 {
        return a1;
    }
    let nf = n as f64;
    if alpha != 0.0 {
        let s = 2.0 * nf + alpha + beta;
        -2.0 / (s * (s - 1.0)) * krall_jacobi_alpha(n + 1, alpha, beta, a1)
            / krall_jacobi_alpha(n, alpha, beta, a1)
    } else {
        let s = 2.0 * nf + beta;
        -2.0 * nf * (nf + beta) / (s * (s - 1.0))
            * krall_jacobi_alpha_tilde(n + 1, beta, a1)
            / krall_jacobi_alpha_tilde(n, beta, a1)
    }
}

/// Which modification a quasi-definiteness gate belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KrallKind {
    Laguerre { alpha: f64 },
    Jacobi { alpha: f64, beta: f64 },
}

impl KrallKind {
    /// The gate value at degree `n`: `α_n`, or `α̃_n` when `α = 0`.
    pub fn gate(&self, n: usize, a1: f64) -> f64 {
        match *self {
            KrallKind::Laguerre { alpha } if alpha == 0.0 => krall_laguerre_alpha_tilde(n, a1),
            KrallKind::Laguerre { alpha } => krall_laguerre_alpha(n, alpha, a1),
            KrallKind::Jacobi { alpha, beta } if alpha == 0.0 => {
                krall_jacobi_alpha_tilde(n, beta, a1)
            }
            KrallKind::Jacobi { alpha, beta } => krall_jacobi_alpha(n, alpha, beta, a1),
        }
    }

    /// The gate times the denominator of `a_1` it carries, continuous in
    /// `a_1`.
    fn cleared_gate(&self, n: usize, a1: f64) -> f64 {
        match *self {
            KrallKind::Laguerre { .. } => self.gate(n, a1),
            KrallKind::Jacobi { alpha, beta } => {
                let den = if alpha == 0.0 {
                    2.0 + a1 * (beta + 2.0)
                } else {
                    2.0 * (alpha + 1.0) + a1 * (alpha + beta + 2.0)
                };
                self.gate(n, a1) * den
            }
        }
    }

    /// Whether `a_1` is an admissible free parameter.
    pub fn admissible(&self, a1: f64) -> bool {
        match *self {
            KrallKind::Laguerre { alpha } => a1 != 0.0 && alpha + 1.0 - a1 != 0.0,
            KrallKind::Jacobi { alpha, beta } => {
                a1 != 0.0 && 2.0 * (alpha + 1.0) + a1 * (alpha + beta + 2.0) != 0.0
            }
        }
    }

    pub fn a(&self, n: usize, a1: f64) -> f64 {
        match *self {
            KrallKind::Laguerre { alpha } => krall_laguerre_a(n, alpha, a1),
            KrallKind::Jacobi { alpha, beta } => krall_jacobi_a(n, alpha, beta, a1),
        }
    }

    /// Roots in `a_1` of the gate at degree `n`, located by scanning
    /// `[lo, hi]` on a uniform grid and bisecting sign changes of the
    /// cleared gate. Roots where an earlier gate also vanishes are dropped.
    pub fn gate_roots(&self, n: usize, lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
        if n < 2 || steps == 0 || !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "gate scan needs n ≥ 2 and a nonempty interval, got n = {n}, [{lo}, {hi}]"
            )));
        }
        let f = |a1: f64| self.cleared_gate(n, a1);
        let h = (hi - lo) / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = lo;
        let mut f0 = f(x0);
        for k in 1..=steps {
            let x1 = lo + h * k as f64;
            let f1 = f(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0.signum() != f1.signum() && f1 != 0.0 {
                let (mut a, mut b, mut fa) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = f(mid);
                    if fm == 0.0 || (b - a) <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        let scale = |m: usize, a1: f64| {
            // size of the gate's terms, to judge whether it vanishes
            match *self {
                KrallKind::Laguerre { alpha } if alpha != 0.0 => {
                    let nf = m as f64;
                    (gamma(nf) * gamma(alpha + 1.0) * (alpha + 1.0 - a1).abs())
                        .max((a1 - 1.0).abs() * gamma(nf + alpha))
                }
                _ => 1.0 + a1.abs(),
            }
        };
        roots.retain(|&a1| {
            self.admissible(a1)
                && (2..n).all(|m| self.gate(m, a1).abs() > 1e-8 * scale(m, a1))
        });
        Ok(roots)
    }
}

/// `λ_{n,ρ} = a_{n-1} - ρ²(a_{n-1} - a_n) + ρ(b_{n-1} - b_n)`.
pub fn cheb_lambda(a: &[f64], b: &[f64], n: usize, rho: f64) -> f64 {
    a[n - 1] - rho * rho * (a[n - 1] - a[n]) + rho * (b[n - 1] - b[n])
}

/// `(a_{n-1} - a_{n-2}) + ρ(b_{n-1} - b_n) + ρ²(a_n - a_{n-1})`, `n ≥ 2`.
pub fn cheb_scalar_condition(a: &[f64], b: &[f64], n: usize, rho: f64) -> f64 {
    (a[n - 1] - a[n - 2]) + rho * (b[n - 1] - b[n]) + rho * rho * (a[n] - a[n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{ChebyshevKind, Recurrence1D};

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(3.0, 0), 1.0);
        assert_eq!(pochhammer(1.0, 5), 120.0);
        assert_eq!(pochhammer(-2.0, 3), 0.0);
    }

    #[test]
    fn cube_spot_values() {
        assert_eq!(jacobi_f(0, 0.3, -0.2), 1.0);
        assert!((jacobi_f(1, 0.0, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((jacobi_g(1, 0.0, 0.0) - 1.0 / 3.0).abs() < 1e-15);
        let (a, b, m) = (0.5, 1.5, 3);
        let sum = jacobi_f(m, a, b) + jacobi_g(m, a, b);
        let mf = m as f64;
        assert!((sum - (mf + a + b + 1.0 + mf + b) / (2.0 * mf + a + b + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_jacobi_coefficients() {
        assert_eq!(jacobi_d(0, 1.0, 2.0), 0.0);
        let c0 = jacobi_c(0, 1.0, 0.5);
        assert!((c0 - (2.0 * 1.5 / 3.5_f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn simplex_h_at_zero_and_one_dimension() {
        assert_eq!(simplex_h(&[0.5, 0.5, 0.5], &[0, 0]), 1.0);
        // one variable: the ratio of Pochhammer symbols is 1
        assert!((simplex_h(&[0.2, 0.7], &[4]) - 1.0).abs() < 1e-15);
        let (a, b) = simplex_params(&[0.5, 0.5, 0.5], &[1, 2], 0);
        assert_eq!((a, b), (5.0, 0.0));
        let (a, b) = simplex_params(&[0.5, 0.5, 0.5], &[1, 2], 1);
        assert_eq!((a, b), (0.0, 0.0));
    }

    #[test]
    fn krall_sequences_start_with_a1() {
        let (alpha, a1) = (0.5, 2.0);
        let k = KrallKind::Laguerre { alpha };
        let a1_back = krall_laguerre_alpha(2, alpha, a1) / krall_laguerre_alpha(1, alpha, a1);
        assert!((a1_back - a1).abs() < 1e-14);
        assert_eq!(k.a(1, a1), a1);
        // α = 0: α̃_2 = a_1
        assert_eq!(krall_laguerre_alpha_tilde(2, 3.0), 3.0);
    }

    #[test]
    fn laguerre_gate_roots_match_closed_form() {
        let alpha = 0.5;
        let k = KrallKind::Laguerre { alpha };
        for n in 3..=6 {
            let g = |x: f64| gamma(x);
            let nf = n as f64;
            let want = (g(nf + alpha) - g(nf) * g(alpha + 1.0) * (alpha + 1.0))
                / (g(nf + alpha) - g(nf) * g(alpha + 1.0));
            let roots = k.gate_roots(n, -20.0, 20.0, 4000).unwrap();
            assert!(roots.iter().any(|r| (r - want).abs() < 1e-12), "{n}: {roots:?} vs {want}");
        }
    }

    #[test]
    fn chebyshev_conditions() {
        for kind in [ChebyshevKind::Second, ChebyshevKind::Third, ChebyshevKind::Fourth] {
            let rec = Recurrence1D::chebyshev(kind, 10);
            for n in 2..8 {
                for rho in [-2.0, -0.5, 1.0, 2.0] {
                    assert_eq!(cheb_scalar_condition(&rec.a, &rec.b, n, rho), 0.0);
                    if n >= 2 {
                        assert_eq!(cheb_lambda(&rec.a, &rec.b, n, rho), 0.5);
                    }
                }
            }
        }
        let rec = Recurrence1D::chebyshev(ChebyshevKind::First, 10);
        let v = cheb_scalar_condition(&rec.a, &rec.b, 2, 0.5);
        assert!((v - (0.5 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-15);
    }
}
