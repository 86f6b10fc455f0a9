//! Multi-indices in graded reverse-lexicographic order and the shift
//! matrices `L_{n,i}` that encode multiplication by a coordinate.
//!
//! Within a fixed total degree the multi-indices are sorted in descending
//! lexicographic order of `(ν_1, …, ν_d)`. For `d = 2` this yields
//! `(n,0), (n-1,1), …, (0,n)`; for `d ≥ 3` it is the convention adopted by
//! this crate.
//!
//! Directions are zero-based throughout the API (`0..d`).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::matrixkit::Matrix;

/// A multi-index `ν ∈ ℕ₀^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Box<[u32]>);

impl MultiIndex {
    pub fn new(exponents: impl Into<Vec<u32>>) -> Self {
        MultiIndex(exponents.into().into_boxed_slice())
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim].into_boxed_slice())
    }

    /// The unit vector `e_i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        MultiIndex(v.into_boxed_slice())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|ν|`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn plus_unit(&self, i: usize) -> Self {
        let mut v = self.0.to_vec();
        v[i] += 1;
        MultiIndex::new(v)
    }

    pub fn minus_unit(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.to_vec();
        v[i] -= 1;
        Some(MultiIndex::new(v))
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        MultiIndex::new(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect::<Vec<_>>(),
        )
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = u32;
    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as usize
}

/// `r_n^d = C(n+d-1, d-1)`, the number of monomials of total degree `n`.
pub fn rank_count(dim: usize, degree: usize) -> usize {
    assert!(dim >= 1, "dimension must be positive");
    binomial(degree + dim - 1, dim - 1)
}

/// Number of monomials of total degree at most `degree`.
pub fn space_dim(dim: usize, degree: usize) -> usize {
    binomial(degree + dim, dim)
}

/// All multi-indices of total degree `degree`, descending lexicographic.
pub fn enumerate_indices(dim: usize, degree: usize) -> Vec<MultiIndex> {
    assert!(dim >= 1, "dimension must be positive");
    let mut out = Vec::with_capacity(rank_count(dim, degree));
    let mut buf = vec![0u32; dim];
    fill(&mut buf, 0, degree as u32, &mut out);
    out
}

fn fill(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex::new(buf.to_vec()));
        return;
    }
    for first in (0..=remaining).rev() {
        buf[pos] = first;
        fill(buf, pos + 1, remaining - first, out);
    }
}

/// Enumeration of all monomials up to a maximal total degree, with O(1)
/// lookup from multi-index to its (degree, position) and global index.
///
/// The global index of `ν` is its position in the concatenation
/// `X_0, X_1, …, X_N`; polynomial coefficient vectors use this layout.
#[derive(Debug)]
pub struct GradedBasis {
    dim: usize,
    max_degree: usize,
    by_degree: Vec<Vec<MultiIndex>>,
    offsets: Vec<usize>,
    lookup: HashMap<MultiIndex, (usize, usize)>,
}

impl GradedBasis {
    pub fn new(dim: usize, max_degree: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let by_degree: Vec<_> = (0..=max_degree)
            .map(|n| enumerate_indices(dim, n))
            .collect();
        let mut offsets = Vec::with_capacity(max_degree + 2);
        let mut acc = 0;
        offsets.push(0);
        for block in &by_degree {
            acc += block.len();
            offsets.push(acc);
        }
        let mut lookup = HashMap::with_capacity(acc);
        for (n, block) in by_degree.iter().enumerate() {
            for (p, nu) in block.iter().enumerate() {
                lookup.insert(nu.clone(), (n, p));
            }
        }
        GradedBasis {
            dim,
            max_degree,
            by_degree,
            offsets,
            lookup,
        }
    }

    /// A process-wide shared basis covering at least `max_degree`.
    pub fn shared(dim: usize, max_degree: usize) -> Arc<GradedBasis> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GradedBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(b) = guard.get(&dim) {
            if b.max_degree >= max_degree {
                return Arc::clone(b);
            }
        }
        // grow geometrically so repeated requests do not rebuild
        let target = guard
            .get(&dim)
            .map(|b| (2 * b.max_degree).max(max_degree))
            .unwrap_or(max_degree.max(8));
        let basis = Arc::new(GradedBasis::new(dim, target));
        guard.insert(dim, Arc::clone(&basis));
        basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Multi-indices of total degree `n`, in order.
    pub fn indices(&self, n: usize) -> &[MultiIndex] {
        &self.by_degree[n]
    }

    /// `r_n^d`.
    pub fn rank(&self, n: usize) -> usize {
        self.by_degree[n].len()
    }

    /// Global index of the first monomial of degree `n`.
    pub fn offset(&self, n: usize) -> usize {
        self.offsets[n]
    }

    /// Number of monomials of degree `≤ n`.
    pub fn len_upto(&self, n: usize) -> usize {
        self.offsets[n + 1]
    }

    pub fn position(&self, nu: &MultiIndex) -> Option<(usize, usize)> {
        self.lookup.get(nu).copied()
    }

    pub fn global_index(&self, nu: &MultiIndex) -> Option<usize> {
        self.position(nu).map(|(n, p)| self.offsets[n] + p)
    }

    /// Multi-index at a global position.
    pub fn at(&self, global: usize) -> &MultiIndex {
        let n = match self.offsets.binary_search(&global) {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        &self.by_degree[n][global - self.offsets[n]]
    }

    /// The shift matrix `L_{n,i}` with `L_{n,i} X_{n+1} = x_i X_n`.
    pub fn shift_matrix(&self, n: usize, i: usize) -> ShiftMatrix {
        assert!(i < self.dim, "direction out of range");
        assert!(n < self.max_degree, "degree {n} exceeds basis capacity");
        let columns = self.by_degree[n]
            .iter()
            .map(|nu| self.lookup[&nu.plus_unit(i)].1)
            .collect();
        ShiftMatrix {
            degree: n,
            direction: i,
            cols: self.rank(n + 1),
            columns,
        }
    }

    /// The joint matrix `L_n` stacking `L_{n,0}, …, L_{n,d-1}`.
    pub fn joint_shift(&self, n: usize) -> Matrix {
        let blocks: Vec<Matrix> = (0..self.dim)
            .map(|i| self.shift_matrix(n, i).to_matrix())
            .collect();
        joint_matrix(&blocks).expect("shift blocks share column count")
    }
}

/// A 0/1 matrix of size `r_n^d × r_{n+1}^d` stored by the column index of
/// the single unit entry in each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftMatrix {
    pub degree: usize,
    pub direction: usize,
    cols: usize,
    columns: Vec<usize>,
}

impl ShiftMatrix {
    pub fn rows(&self) -> usize {
        self.columns.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column holding the unit entry of row `r`.
    pub fn column_of(&self, r: usize) -> usize {
        self.columns[r]
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows(), self.cols);
        for (r, &c) in self.columns.iter().enumerate() {
            m[(r, c)] = 1.0;
        }
        m
    }
}

/// Vertical stack of equally wide blocks, in the given order.
pub fn joint_matrix(blocks: &[Matrix]) -> Result<Matrix> {
    let Some(first) = blocks.first() else {
        return Ok(Matrix::zeros(0, 0));
    };
    let cols = first.ncols();
    if let Some(bad) = blocks.iter().find(|b| b.ncols() != cols) {
        return Err(Error::ShapeMismatch(format!(
            "joint matrix blocks have {} and {} columns",
            cols,
            bad.ncols()
        )));
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(b);
        r0 += b.nrows();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::numeric_rank;
    use std::collections::HashSet;

    #[test]
    fn rank_counts() {
        assert_eq!(rank_count(2, 3), 4);
        assert_eq!(rank_count(3, 2), 6);
        assert_eq!(rank_count(1, 7), 1);
        assert_eq!(space_dim(2, 2), 6);
    }

    #[test]
    fn bivariate_order_matches_display() {
        let got = enumerate_indices(2, 2);
        let want: Vec<_> = [[2, 0], [1, 1], [0, 2]]
            .iter()
            .map(|v| MultiIndex::new(v.to_vec()))
            .collect();
        assert_eq!(got, want);
        assert_eq!(enumerate_indices(1, 4), vec![MultiIndex::new(vec![4])]);
    }

    #[test]
    fn trivariate_restriction_to_plane() {
        let deg1 = enumerate_indices(3, 1);
        assert_eq!(
            deg1,
            vec![
                MultiIndex::new(vec![1, 0, 0]),
                MultiIndex::new(vec![0, 1, 0]),
                MultiIndex::new(vec![0, 0, 1])
            ]
        );
        // indices with ν_3 = 0 keep the bivariate order
        for n in 0..6 {
            let sub: Vec<_> = enumerate_indices(3, n)
                .into_iter()
                .filter(|nu| nu[2] == 0)
                .map(|nu| MultiIndex::new(vec![nu[0], nu[1]]))
                .collect();
            assert_eq!(sub, enumerate_indices(2, n));
        }
    }

    #[test]
    fn shift_matrices_bivariate() {
        let b = GradedBasis::new(2, 4);
        let l11 = b.shift_matrix(1, 0).to_matrix();
        let l12 = b.shift_matrix(1, 1).to_matrix();
        assert_eq!(l11, Matrix::from_row_slice(2, 3, &[1., 0., 0., 0., 1., 0.]));
        assert_eq!(l12, Matrix::from_row_slice(2, 3, &[0., 1., 0., 0., 0., 1.]));
        let joint = b.joint_shift(1);
        assert_eq!(joint.shape(), (4, 3));
        assert_eq!(numeric_rank(&joint, 1e-9), 3);
    }

    #[test]
    fn shift_identities_small_dims() {
        for d in 1..=4 {
            let b = GradedBasis::new(d, 9);
            for n in 0..=8 {
                for i in 0..d {
                    let l = b.shift_matrix(n, i).to_matrix();
                    assert_eq!(&l * l.transpose(), Matrix::identity(b.rank(n), b.rank(n)));
                }
                assert_eq!(numeric_rank(&b.joint_shift(n), 1e-9), b.rank(n + 1));
            }
        }
    }

    #[test]
    fn enumeration_is_bijective() {
        for d in 1..=4 {
            for n in 0..=6 {
                let list = enumerate_indices(d, n);
                let set: HashSet<_> = list.iter().cloned().collect();
                assert_eq!(set.len(), list.len());
                assert_eq!(list.len(), rank_count(d, n));
                assert!(list.iter().all(|nu| nu.degree() == n));
            }
        }
    }

    #[test]
    fn global_lookup_roundtrip() {
        let b = GradedBasis::new(3, 5);
        for g in 0..b.len_upto(5) {
            assert_eq!(b.global_index(b.at(g)), Some(g));
        }
    }

    #[test]
    fn joint_matrix_shapes() {
        let a = Matrix::from_row_slice(1, 1, &[2.0]);
        let c = Matrix::from_row_slice(1, 1, &[3.0]);
        assert_eq!(
            joint_matrix(&[a.clone(), c]).unwrap(),
            Matrix::from_row_slice(2, 1, &[2.0, 3.0])
        );
        assert_eq!(joint_matrix(std::slice::from_ref(&a)).unwrap(), a);
        let wide = Matrix::zeros(1, 2);
        assert!(matches!(
            joint_matrix(&[a, wide]),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
