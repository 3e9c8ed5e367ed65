//! Compressed-row sparse complex operators on a [`HilbertSpace`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::state::QuantumState;

pub type C64 = Complex64;

/// Entries with magnitude below this are never stored.
pub const DROP_TOLERANCE: f64 = 1e-15;

/// Relative asymmetry accepted when an operator is flagged Hermitian.
const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Anything that can act on a dense amplitude vector.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`, overwriting `y`.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    fn is_hermitian(&self) -> bool;
}

/// Sparse complex matrix in canonical CSR form: rows in order, columns
/// sorted and unique within a row, no entry below [`DROP_TOLERANCE`].
#[derive(Clone, Debug)]
pub struct SparseOperator {
    space: HilbertSpace,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Builds an operator from unordered `(row, col, value)` triplets.
    /// Duplicates are summed. If `hermitian` is set the result is checked.
    pub fn from_triplets(
        space: HilbertSpace,
        mut triplets: Vec<(usize, usize, C64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let dim = space.total_dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::InvalidArgument(format!(
                "entry ({r}, {c}) outside dimension {dim}"
            )));
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.norm() >= DROP_TOLERANCE {
                row_ptr[r + 1] += 1;
                cols.push(c);
                values.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = Self {
            space,
            row_ptr,
            cols,
            values,
            hermitian: false,
        };
        if hermitian {
            op.into_hermitian()
        } else {
            Ok(op)
        }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let dim = space.total_dim();
        Self {
            space,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let dim = space.total_dim();
        Self {
            space,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            values: vec![C64::new(1.0, 0.0); dim],
            hermitian: true,
        }
    }

    /// Real diagonal operator.
    pub fn diagonal(space: HilbertSpace, diag: &[f64]) -> Result<Self> {
        if diag.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                found: diag.len(),
            });
        }
        let trip = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, C64::new(d, 0.0)))
            .collect();
        Self::from_triplets(space, trip, true)
    }

    pub fn from_dense(space: HilbertSpace, m: &DMatrix<C64>, hermitian: bool) -> Result<Self> {
        let dim = space.total_dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.nrows(),
            });
        }
        let mut trip = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v.norm() >= DROP_TOLERANCE {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(space, trip, hermitian)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match span.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Largest `|A_rc - conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Verifies Hermiticity and sets the flag.
    pub fn into_hermitian(mut self) -> Result<Self> {
        self.check_hermitian()?;
        self.hermitian = true;
        Ok(self)
    }

    /// `Ok` if the flag is set or the defect is within tolerance.
    pub fn check_hermitian(&self) -> Result<()> {
        if self.hermitian {
            return Ok(());
        }
        let scale = self.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOLERANCE * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: C64, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut trip: Vec<_> = self.triplets().collect();
        trip.extend(other.triplets().map(|(r, c, v)| (r, c, alpha * v)));
        let mut out = Self::from_triplets(self.space.clone(), trip, false)?;
        out.hermitian = self.hermitian && other.hermitian && alpha.im == 0.0;
        Ok(out)
    }

    /// `Σ c_k O_k` over operators sharing one space.
    pub fn linear_combination(space: &HilbertSpace, terms: &[(C64, &SparseOperator)]) -> Result<Self> {
        let mut trip = Vec::new();
        let mut hermitian = true;
        for (c, op) in terms {
            if op.space != *space {
                return Err(Error::DimensionMismatch {
                    expected: space.total_dim(),
                    found: op.dim(),
                });
            }
            hermitian &= op.hermitian && c.im == 0.0;
            trip.extend(op.triplets().map(|(r, col, v)| (r, col, c * v)));
        }
        let mut out = Self::from_triplets(space.clone(), trip, false)?;
        out.hermitian = hermitian;
        Ok(out)
    }

    pub fn scale(&self, alpha: C64) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (r, c, alpha * v)).collect();
        let mut out =
            Self::from_triplets(self.space.clone(), trip, false).expect("indices already validated");
        out.hermitian = self.hermitian && alpha.im == 0.0;
        out
    }

    pub fn scale_real(&self, alpha: f64) -> Self {
        self.scale(C64::new(alpha, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        if self.hermitian {
            return self.clone();
        }
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.space.clone(), trip, false).expect("adjoint keeps indices in range")
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let dim = self.dim();
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        let mut touched = vec![false; dim];
        let mut row_cols: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        row_cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            row_cols.sort_unstable();
            for &c in &row_cols {
                let v = acc[c];
                if v.norm() >= DROP_TOLERANCE {
                    cols.push(c);
                    values.push(v);
                }
                acc[c] = C64::new(0.0, 0.0);
                touched[c] = false;
            }
            row_cols.clear();
            row_ptr.push(cols.len());
        }
        Ok(Self {
            space: self.space.clone(),
            row_ptr,
            cols,
            values,
            hermitian: false,
        })
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(a: &Self, b: &Self) -> Result<Self> {
        a.mul(b)?.sub(&b.mul(a)?)
    }

    /// `y += alpha * A x`.
    pub fn apply_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.cols[k]];
            }
            *yr += alpha * s;
        }
    }

    /// `y += alpha * A† x`.
    pub fn apply_adjoint_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (r, &xr) in x.iter().enumerate() {
            let ax = alpha * xr;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.cols[k]] += self.values[k].conj() * ax;
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        LinearMap::apply_into(self, x, &mut y);
        y
    }

    /// Raw `⟨ψ|O|ψ⟩` (not divided by the norm).
    pub fn expectation(&self, psi: &QuantumState) -> Result<C64> {
        if psi.space() != &self.space {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let x = psi.amplitudes();
        let mut s = C64::new(0.0, 0.0);
        for (r, xr) in x.iter().enumerate() {
            let mut row = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[k] * x[self.cols[k]];
            }
            s += xr.conj() * row;
        }
        Ok(s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Maximum absolute row sum (the induced infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .sub(other)?
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max))
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        let d2 = other.dim();
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                trip.push((r1 * d2 + r2, c1 * d2 + c2, v1 * v2));
            }
        }
        let mut out = Self::from_triplets(space, trip, false)?;
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    /// Acts as `self` on the single factor `site` of `space` and as the
    /// identity on every other factor.
    pub fn embed(&self, site: usize, space: &HilbertSpace) -> Result<Self> {
        self.embed_block(site, space)
    }

    /// Like [`embed`](Self::embed) for an operator spanning consecutive
    /// factors starting at `first`; the block length is inferred from the
    /// operator's own factor count.
    pub fn embed_block(&self, first: usize, space: &HilbertSpace) -> Result<Self> {
        let len = self.space.n_sites();
        let block = space.block_dim(first, len)?;
        if block != self.dim() || space.local_dims()[first..first + len] != *self.space.local_dims() {
            return Err(Error::DimensionMismatch {
                expected: block,
                found: self.dim(),
            });
        }
        let left: usize = space.local_dims()[..first].iter().product();
        let right: usize = space.local_dims()[first + len..].iter().product();
        let mut trip = Vec::with_capacity(self.nnz() * left * right);
        for l in 0..left {
            for (r, c, v) in self.triplets() {
                let rb = (l * block + r) * right;
                let cb = (l * block + c) * right;
                for k in 0..right {
                    trip.push((rb + k, cb + k, v));
                }
            }
        }
        let mut out = Self::from_triplets(space.clone(), trip, false)?;
        out.hermitian = self.hermitian;
        Ok(out)
    }
}

impl LinearMap for SparseOperator {
    fn dim(&self) -> usize {
        self.space.total_dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.cols[k]];
            }
            *yr = s;
        }
    }

    fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}

/// `-A` without materializing it.
pub struct Negated<'a, A: LinearMap + ?Sized>(pub &'a A);

impl<A: LinearMap + ?Sized> LinearMap for Negated<'_, A> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply_into(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }

    fn is_hermitian(&self) -> bool {
        self.0.is_hermitian()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn space(d: usize) -> HilbertSpace {
        HilbertSpace::single(d).unwrap()
    }

    #[test]
    fn coalesces_duplicates_and_drops_tiny() {
        let op = SparseOperator::from_triplets(
            space(3),
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (2, 2, c(1e-17, 0.0))],
            false,
        )
        .unwrap();
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1), c(3.0, 0.0));
    }

    #[test]
    fn rejects_false_hermitian_claim() {
        let err = SparseOperator::from_triplets(space(2), vec![(0, 1, c(1.0, 0.0))], true);
        assert!(matches!(err, Err(Error::NotHermitian(_))));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SparseOperator::from_triplets(space(2), vec![(2, 0, c(1.0, 0.0))], false).is_err());
    }

    #[test]
    fn product_matches_dense() {
        let a = SparseOperator::from_triplets(
            space(3),
            vec![(0, 1, c(1.0, 2.0)), (1, 2, c(-1.0, 0.5)), (2, 0, c(0.3, 0.0))],
            false,
        )
        .unwrap();
        let b = a.adjoint();
        let p = a.mul(&b).unwrap().to_dense();
        let d = a.to_dense() * b.to_dense();
        assert!((p - d).norm() < 1e-14);
    }

    #[test]
    fn embed_identity_is_identity() {
        let big = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        let id = SparseOperator::identity(space(3)).embed(1, &big).unwrap();
        assert!(id.max_abs_diff(&SparseOperator::identity(big)).unwrap() < 1e-15);
    }

    #[test]
    fn kron_matches_embed_order() {
        let big = HilbertSpace::new(vec![2, 3]).unwrap();
        let x = SparseOperator::from_triplets(space(2), vec![(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))], true)
            .unwrap();
        let via_kron = x.kron(&SparseOperator::identity(space(3))).unwrap();
        let via_embed = x.embed(0, &big).unwrap();
        assert!(via_kron.max_abs_diff(&via_embed).unwrap() < 1e-15);
    }

    fn random_op(seed: u64, dim: usize) -> SparseOperator {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let trip = (0..3 * dim)
            .map(|_| {
                (
                    rng.gen_range(0..dim),
                    rng.gen_range(0..dim),
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        SparseOperator::from_triplets(space(dim), trip, false).unwrap()
    }

    fn random_vec(seed: u64, dim: usize) -> Vec<C64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..dim)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn dot(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    proptest! {
        #[test]
        fn adjoint_consistency(seed in 0u64..10_000, dim in 2usize..12) {
            let op = random_op(seed, dim);
            let phi = random_vec(seed ^ 0xabc, dim);
            let psi = random_vec(seed ^ 0x123, dim);
            let lhs = dot(&phi, &op.apply(&psi));
            let rhs = dot(&op.adjoint().apply(&phi), &psi);
            let mut via_add = vec![c(0.0, 0.0); dim];
            op.apply_adjoint_add(c(1.0, 0.0), &phi, &mut via_add);
            let rhs2 = dot(&via_add, &psi);
            let scale = lhs.norm().max(1.0);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
            prop_assert!((lhs - rhs2).norm() <= 1e-12 * scale);
        }

        #[test]
        fn matvec_is_linear(seed in 0u64..10_000, dim in 2usize..12, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let op = random_op(seed, dim);
            let x = random_vec(seed + 1, dim);
            let y = random_vec(seed + 2, dim);
            let combo: Vec<C64> = x.iter().zip(&y).map(|(p, q)| p * a + q * c(0.0, b)).collect();
            let lhs = op.apply(&combo);
            let ox = op.apply(&x);
            let oy = op.apply(&y);
            for i in 0..dim {
                let rhs = ox[i] * a + oy[i] * c(0.0, b);
                prop_assert!((lhs[i] - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
            }
        }
    }
}
