//! Dense real matrices: products, solves, least squares, numerical rank and
//! the plain-text exchange format.
//!
//! The text format is a header line `rows cols` followed by one line per row
//! of whitespace-separated decimals. Values are printed with the shortest
//! representation that parses back to the same `f64`.

use nalgebra::{SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;

/// Default relative threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol · σ_max`; zero for the zero matrix.
pub fn numeric_rank(m: &Matrix, tol: f64) -> usize {
    numeric_rank_scaled(m, tol, 0.0)
}

/// Rank relative to `max(σ_max, reference)`.
///
/// `reference` is the magnitude the matrix would have if it carried
/// information; it lets a block that is entirely round-off count as rank 0
/// rather than being judged against its own noise.
pub fn numeric_rank_scaled(m: &Matrix, tol: f64, reference: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    let cut = tol * top.max(reference.abs());
    s.iter().filter(|&&v| v > cut).count()
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `‖diff‖ / scale`, falling back to the absolute value when the scale is 0.
pub fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b)
}

/// `R a C` with diagonal `R`, `C` scaling every row, then every column,
/// to unit max-norm. Zero rows and columns are left alone.
pub fn equilibrated(a: &Matrix) -> Matrix {
    let mut m = a.clone();
    for mut r in m.row_iter_mut() {
        let s = r.amax();
        if s > 0.0 {
            r /= s;
        }
    }
    for mut c in m.column_iter_mut() {
        let s = c.amax();
        if s > 0.0 {
            c /= s;
        }
    }
    m
}

fn require_full_rank(a: &Matrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let rank = numeric_rank(&equilibrated(a), DEFAULT_RANK_TOL);
    if rank < a.nrows() {
        return Err(Error::Singular {
            rank,
            size: a.nrows(),
        });
    }
    Ok(())
}

/// Solves `a · x = b` for square, numerically nonsingular `a`.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    require_full_rank(a)?;
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "right-hand side has {} rows, system has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    if a.nrows() == 0 {
        return Ok(Matrix::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b).ok_or(Error::Singular {
        rank: numeric_rank(&equilibrated(a), DEFAULT_RANK_TOL),
        size: a.nrows(),
    })
}

/// Solves `x · a = b`, i.e. right division by `a`.
pub fn solve_right(b: &Matrix, a: &Matrix) -> Result<Matrix> {
    Ok(solve(&a.transpose(), &b.transpose())?.transpose())
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    solve(a, &Matrix::identity(a.nrows(), a.nrows()))
}

/// Least-squares minimiser of `‖a·x − b‖` via the singular value
/// decomposition; rank-deficient systems get the minimum-norm solution.
pub fn lstsq(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "right-hand side has {} rows, system has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    if a.ncols() == 0 {
        return Ok(Matrix::zeros(0, b.ncols()));
    }
    if a.nrows() == 0 {
        return Ok(Matrix::zeros(a.ncols(), b.ncols()));
    }
    let svd = SVD::new(a.clone(), true, true);
    let top = svd.singular_values.max();
    svd.solve(b, DEFAULT_RANK_TOL * top)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))
}

/// Symmetric positive square root `S` with `S·S = a`, or `None` if `a` has a
/// non-positive eigenvalue.
pub fn symmetric_sqrt(a: &Matrix) -> Option<Matrix> {
    let eig = SymmetricEigen::new(symmetrize(a));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let root = eig.eigenvalues.map(f64::sqrt);
    Some(&eig.eigenvectors * Matrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// Inverse of the symmetric positive square root.
pub fn inverse_sqrt(a: &Matrix) -> Option<Matrix> {
    let eig = SymmetricEigen::new(symmetrize(a));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let root = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Some(&eig.eigenvectors * Matrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

pub fn to_text(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<Matrix> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what} in matrix header")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let values: Vec<f64> = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad entry `{t}`: {e}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {} entries for a {rows}x{cols} matrix, found {}",
            rows * cols,
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("non-finite entry {bad}")));
    }
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_examples() {
        assert_eq!(numeric_rank(&Matrix::identity(3, 3), 1e-10), 3);
        assert_eq!(numeric_rank(&Matrix::zeros(2, 4), 1e-10), 0);
        // singular values of [[1,1],[1,1+1e-14]] are ≈ 2 and ≈ 5e-15
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert_eq!(numeric_rank(&m, 1e-10), 1);
    }

    #[test]
    fn rank_with_reference_detects_noise_blocks() {
        let noise = Matrix::from_row_slice(2, 1, &[1e-17, -3e-17]);
        assert_eq!(numeric_rank(&noise, 1e-9), 1);
        assert_eq!(numeric_rank_scaled(&noise, 1e-9, 1.0), 0);
    }

    #[test]
    fn badly_scaled_diagonal_is_solvable() {
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1e6, 1.0, 1e-6]));
        let x = solve(&d, &Matrix::from_element(3, 1, 1.0)).unwrap();
        assert!((x[(2, 0)] - 1e6).abs() < 1e-6);
        assert_eq!(numeric_rank(&equilibrated(&d), 1e-9), 3);
    }

    #[test]
    fn solve_and_inverse() {
        let b = Matrix::from_row_slice(2, 1, &[3.0, 4.0]);
        assert_eq!(solve(&Matrix::identity(2, 2), &b).unwrap(), b);
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 4.0]));
        let inv = inverse(&d).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15 && (inv[(1, 1)] - 0.25).abs() < 1e-15);
        let sing = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(inverse(&sing), Err(Error::Singular { rank: 1, size: 2 })));
        assert!(matches!(
            matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn lstsq_recovers_consistent_solution() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = Matrix::from_row_slice(2, 1, &[2.0, -1.0]);
        let got = lstsq(&a, &(&a * &x)).unwrap();
        assert!((got - x).amax() < 1e-14);
    }

    #[test]
    fn inverse_is_accurate_for_random_well_conditioned() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..8 {
            let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
                + Matrix::identity(n, n) * (n as f64);
            let inv = inverse(&m).unwrap();
            assert!((&inv * &m - Matrix::identity(n, n)).amax() < 1e-10);
        }
    }

    #[test]
    fn text_roundtrip_is_bit_exact() {
        let m = Matrix::from_row_slice(2, 3, &[0.1, -1e-300, 1.0 / 3.0, 2.5e17, 0.0, -7.0]);
        let back = from_text(&to_text(&m)).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(from_text("2 2\n1 2 3").is_err());
        assert!(from_text("1 1\nNaN").is_err());
        assert_eq!(from_text("1 0\n").unwrap().shape(), (1, 0));
    }

    proptest! {
        #[test]
        fn rank_invariant_under_nonsingular_products(
            seed in 0u64..500,
            rows in 2usize..6,
            cols in 2usize..6,
            rank in 1usize..4,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rank = rank.min(rows).min(cols);
            let u = Matrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0));
            let v = Matrix::from_fn(rank, cols, |_, _| rng.random_range(-1.0..1.0));
            let m = &u * &v;
            let base = numeric_rank(&m, 1e-9);
            let left = Matrix::from_fn(rows, rows, |_, _| rng.random_range(-0.3..0.3))
                + Matrix::identity(rows, rows) * 2.0;
            let right = Matrix::from_fn(cols, cols, |_, _| rng.random_range(-0.3..0.3))
                + Matrix::identity(cols, cols) * 2.0;
            prop_assert_eq!(numeric_rank(&(&left * &m * &right), 1e-9), base);
        }

        #[test]
        fn text_roundtrip(values in proptest::collection::vec(-1e6f64..1e6, 6)) {
            let m = Matrix::from_row_slice(2, 3, &values);
            prop_assert_eq!(from_text(&to_text(&m)).unwrap(), m);
        }
    }
}
