//! Angular-momentum, collective-atom and bosonic building blocks.
//!
//! Atomic levels are ordered `a = 0, b = 1, e = 2`. In the rotated two-level
//! basis `↑ = (a + b)/√2` is index 0 and `↓ = (a - b)/√2` is index 1. Spin-S
//! matrices use the `S_z` eigenbasis ordered `m = S, S-1, ..., -S`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::sparse::{SparseOperator, C64};

/// One of the three atomic levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    A = 0,
    B = 1,
    E = 2,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `S_z`, `S_+`, `S_-` on one spin.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub two_s: usize,
    pub sz: SparseOperator,
    pub splus: SparseOperator,
    pub sminus: SparseOperator,
}

impl SpinMatrices {
    /// `(S_+ + S_-)/2`.
    pub fn sx(&self) -> SparseOperator {
        self.splus.add(&self.sminus).expect("same space").scale_real(0.5)
    }

    /// `(S_+ - S_-)/(2i)`.
    pub fn sy(&self) -> SparseOperator {
        self.splus
            .sub(&self.sminus)
            .expect("same space")
            .scale(C64::new(0.0, -0.5))
            .into_hermitian()
            .expect("S_y is Hermitian")
    }

    /// `S_z² + (S_+S_- + S_-S_+)/2`.
    pub fn s2(&self) -> SparseOperator {
        total_spin_squared(&self.sz, &self.splus, &self.sminus)
    }
}

pub(crate) fn total_spin_squared(
    sz: &SparseOperator,
    splus: &SparseOperator,
    sminus: &SparseOperator,
) -> SparseOperator {
    let zz = sz.mul(sz).expect("same space");
    let pm = splus.mul(sminus).expect("same space");
    let mp = sminus.mul(splus).expect("same space");
    SparseOperator::linear_combination(
        sz.space(),
        &[(re(1.0), &zz), (re(0.5), &pm), (re(0.5), &mp)],
    )
    .expect("same space")
    .into_hermitian()
    .expect("S^2 is Hermitian")
}

/// Spin-`two_s/2` matrices in the `S_z` eigenbasis.
pub fn spin_matrices(two_s: usize) -> Result<SpinMatrices> {
    if two_s == 0 {
        return Err(Error::InvalidArgument(
            "spin 0 has no spin degrees of freedom".into(),
        ));
    }
    let space = HilbertSpace::single(two_s + 1)?;
    let s = two_s as f64 / 2.0;
    let m = |i: usize| s - i as f64;
    let diag: Vec<f64> = (0..=two_s).map(m).collect();
    let sz = SparseOperator::diagonal(space.clone(), &diag)?;
    // S_+ |m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩, and |m+1⟩ sits one index lower.
    let trip = (1..=two_s)
        .map(|i| (i - 1, i, re((s * (s + 1.0) - m(i) * (m(i) + 1.0)).sqrt())))
        .collect();
    let splus = SparseOperator::from_triplets(space, trip, false)?;
    let sminus = splus.adjoint();
    Ok(SpinMatrices {
        two_s,
        sz,
        splus,
        sminus,
    })
}

/// Single-atom `|x⟩⟨y|` on the three-level space.
pub fn atomic_transition(x: Level, y: Level) -> SparseOperator {
    SparseOperator::from_triplets(
        HilbertSpace::single(3).expect("3 >= 2"),
        vec![(x as usize, y as usize, re(1.0))],
        x == y,
    )
    .expect("valid indices")
}

/// `Λ^{xy} = Σ_k (|x⟩⟨y|)_k` on `M` three-level atoms.
pub fn collective_transition(x: Level, y: Level, m: usize) -> Result<SparseOperator> {
    collective_sum(&atomic_transition(x, y), m)
}

/// `Σ_k op_k` over `m` copies of a single-particle operator.
pub fn collective_sum(single: &SparseOperator, m: usize) -> Result<SparseOperator> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one atom".into()));
    }
    let d = single.dim();
    let space = HilbertSpace::uniform(d, m)?;
    let mut trip = Vec::new();
    for k in 0..m {
        trip.extend(single.embed(k, &space)?.triplets());
    }
    let mut out = SparseOperator::from_triplets(space, trip, false)?;
    if single.is_hermitian() {
        out = out.into_hermitian()?;
    }
    Ok(out)
}

/// Collective spin of `M` two-level atoms in the rotated `{↑, ↓}` basis.
#[derive(Clone, Debug)]
pub struct CollectiveSpin {
    pub atoms: usize,
    pub sz: SparseOperator,
    pub splus: SparseOperator,
    pub sminus: SparseOperator,
    pub s2: SparseOperator,
}

pub fn collective_spin_ops(m: usize) -> Result<CollectiveSpin> {
    let single = spin_matrices(1)?;
    let sz = collective_sum(&single.sz, m)?;
    let splus = collective_sum(&single.splus, m)?;
    let sminus = splus.adjoint();
    let s2 = total_spin_squared(&sz, &splus, &sminus);
    Ok(CollectiveSpin {
        atoms: m,
        sz,
        splus,
        sminus,
        s2,
    })
}

/// Columns: `|↑⟩` and `|↓⟩` in `(a, b)` coordinates.
pub fn rotation_to_ground_levels() -> DMatrix<C64> {
    let h = re(FRAC_1_SQRT_2);
    DMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// `U^{⊗m}` for a single-factor matrix `u`.
fn kron_power(u: &DMatrix<C64>, m: usize) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, re(1.0));
    for _ in 0..m {
        out = out.kronecker(u);
    }
    out
}

/// Checks `Λ↓↓ = M/2 - S_z`, `Λ↑↑ = M/2 + S_z`, `Λ↑↓ = S_+`, `Λ↓↑ = S_-`,
/// with the `Λ` built from `|a⟩, |b⟩` projectors and the collective spin
/// rotated into the `(a, b)` basis.
pub fn rotated_identities_check(m: usize) -> Result<bool> {
    const TOL: f64 = 1e-12;
    let spin = collective_spin_ops(m)?;
    let u = kron_power(&rotation_to_ground_levels(), m);
    let to_ab = |op: &SparseOperator| &u * op.to_dense() * u.adjoint();

    let rot = rotation_to_ground_levels();
    let up = rot.column(0).into_owned();
    let down = rot.column(1).into_owned();
    let ab_space = HilbertSpace::single(2)?;
    let projector = |x: &nalgebra::DVector<C64>, y: &nalgebra::DVector<C64>| -> Result<SparseOperator> {
        let single = SparseOperator::from_dense(ab_space.clone(), &(x * y.adjoint()), false)?;
        collective_sum(&single, m)
    };

    let dim = 1usize << m;
    let half_m = DMatrix::<C64>::identity(dim, dim) * re(m as f64 / 2.0);
    let sz = to_ab(&spin.sz);
    let checks = [
        (projector(&down, &down)?.to_dense(), &half_m - &sz),
        (projector(&up, &up)?.to_dense(), &half_m + &sz),
        (projector(&up, &down)?.to_dense(), to_ab(&spin.splus)),
        (projector(&down, &up)?.to_dense(), to_ab(&spin.sminus)),
    ];
    let rotated_ok = checks.iter().all(|(lhs, rhs)| (lhs - rhs).camax() <= TOL);

    // Λ↓↓ = Σ s⁻s⁺ and Λ↑↑ = Σ s⁺s⁻ directly in the rotated basis.
    let single = spin_matrices(1)?;
    let mp = collective_sum(&single.sminus.mul(&single.splus)?, m)?;
    let pm = collective_sum(&single.splus.mul(&single.sminus)?, m)?;
    let id = SparseOperator::identity(spin.sz.space().clone()).scale_real(m as f64 / 2.0);
    let sums_ok = mp.max_abs_diff(&id.sub(&spin.sz)?)? <= TOL
        && pm.max_abs_diff(&id.add(&spin.sz)?)? <= TOL;

    Ok(rotated_ok && sums_ok)
}

/// Normalized Dicke state with `n_down` atoms in `|↓⟩`, on `2^m` amplitudes.
pub fn dicke_state(m: usize, n_down: usize) -> Result<Vec<C64>> {
    if n_down > m {
        return Err(Error::InvalidArgument(format!(
            "{n_down} flipped atoms out of {m}"
        )));
    }
    let dim = 1usize << m;
    let count = (0..dim).filter(|i| i.count_ones() as usize == n_down).count();
    let amp = re(1.0 / (count as f64).sqrt());
    Ok((0..dim)
        .map(|i| {
            if i.count_ones() as usize == n_down {
                amp
            } else {
                re(0.0)
            }
        })
        .collect())
}

/// Isometry `V` (`2^m × (m+1)`) whose column `n` is the Dicke state with
/// `n` atoms down, i.e. `S_z = m/2 - n`. Satisfies `V† S V = spin_matrices(m)`.
pub fn symmetric_embedding(m: usize) -> Result<DMatrix<C64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one atom".into()));
    }
    let dim = 1usize << m;
    let mut v = DMatrix::zeros(dim, m + 1);
    for n in 0..=m {
        for (i, a) in dicke_state(m, n)?.into_iter().enumerate() {
            v[(i, n)] = a;
        }
    }
    Ok(v)
}

/// Truncated bosonic lowering operator on `n_max + 1` Fock states.
pub fn annihilation(n_max: usize) -> Result<SparseOperator> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("photon cutoff must be >= 1".into()));
    }
    let space = HilbertSpace::single(n_max + 1)?;
    let trip = (1..=n_max).map(|n| (n - 1, n, re((n as f64).sqrt()))).collect();
    SparseOperator::from_triplets(space, trip, false)
}

/// Maps `M` two-level atoms from rotated `{↑, ↓}` amplitudes onto the
/// ground levels `{a, b}` (still two levels per atom).
pub fn rotated_to_ground_levels(amps: &[C64], m: usize) -> Result<Vec<C64>> {
    if amps.len() != 1 << m {
        return Err(Error::DimensionMismatch {
            expected: 1 << m,
            found: amps.len(),
        });
    }
    let u = kron_power(&rotation_to_ground_levels(), m);
    Ok((u * nalgebra::DVector::from_column_slice(amps)).iter().copied().collect())
}

/// Pads two-level `(a, b)` amplitudes of `M` atoms into the three-level
/// space with zero excited-state population.
pub fn ground_to_three_level(amps: &[C64], m: usize) -> Result<Vec<C64>> {
    if amps.len() != 1 << m {
        return Err(Error::DimensionMismatch {
            expected: 1 << m,
            found: amps.len(),
        });
    }
    let three = HilbertSpace::uniform(3, m)?;
    let two = HilbertSpace::uniform(2, m)?;
    let mut out = vec![re(0.0); three.total_dim()];
    for (i, &a) in amps.iter().enumerate() {
        out[three.compose(&two.decompose(i))] = a;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn comm(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
        SparseOperator::commutator(a, b).unwrap()
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let s = spin_matrices(1).unwrap();
        assert_eq!(s.sz.get(0, 0), re(0.5));
        assert_eq!(s.sz.get(1, 1), re(-0.5));
        assert_eq!(s.splus.nnz(), 1);
        assert_eq!(s.splus.get(0, 1), re(1.0));
    }

    #[test]
    fn spin_one_ladder() {
        let s = spin_matrices(2).unwrap();
        assert!((s.splus.get(0, 1).re - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.splus.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spin_zero_rejected() {
        assert!(spin_matrices(0).is_err());
    }

    #[test]
    fn su2_algebra_all_routes() {
        let check = |sz: &SparseOperator, sp: &SparseOperator, sm: &SparseOperator| {
            let two_sz = sz.scale_real(2.0);
            assert!(comm(sp, sm).max_abs_diff(&two_sz).unwrap() < 1e-12);
            assert!(comm(sz, sp).max_abs_diff(sp).unwrap() < 1e-12);
            assert!(comm(sz, sm).max_abs_diff(&sm.scale_real(-1.0)).unwrap() < 1e-12);
        };
        for two_s in 1..=6 {
            let s = spin_matrices(two_s).unwrap();
            check(&s.sz, &s.splus, &s.sminus);
        }
        for m in 1..=4 {
            let c = collective_spin_ops(m).unwrap();
            check(&c.sz, &c.splus, &c.sminus);
        }
        let s = spin_matrices(2).unwrap();
        let space = HilbertSpace::new(vec![2, 3, 4]).unwrap();
        let e = |op: &SparseOperator| op.embed(1, &space).unwrap();
        check(&e(&s.sz), &e(&s.splus), &e(&s.sminus));
    }

    #[test]
    fn collective_transition_single_atom() {
        let op = collective_transition(Level::E, Level::B, 1).unwrap();
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(2, 1), re(1.0));
    }

    #[test]
    fn level_completeness() {
        for m in 1..=3 {
            let sum = [Level::A, Level::B, Level::E]
                .iter()
                .map(|&l| collective_transition(l, l, m).unwrap())
                .reduce(|a, b| a.add(&b).unwrap())
                .unwrap();
            let target = SparseOperator::identity(sum.space().clone()).scale_real(m as f64);
            assert!(sum.max_abs_diff(&target).unwrap() < 1e-15);
        }
    }

    #[test]
    fn two_atom_lowering_sum() {
        let lab = collective_transition(Level::A, Level::B, 2).unwrap();
        let space = lab.space().clone();
        let bb = space.compose(&[1, 1]);
        let out = lab.apply(crate::state::QuantumState::basis(space.clone(), bb).unwrap().amplitudes());
        assert_eq!(out[space.compose(&[0, 1])], re(1.0));
        assert_eq!(out[space.compose(&[1, 0])], re(1.0));
        assert_eq!(out.iter().filter(|v| v.norm() > 0.0).count(), 2);
    }

    fn sorted_eigs(op: &SparseOperator) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(op.to_dense()).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn collective_spin_single_atom() {
        let c = collective_spin_ops(1).unwrap();
        assert_eq!(c.sz.get(0, 0), re(0.5));
        assert_eq!(c.sz.get(1, 1), re(-0.5));
    }

    #[test]
    fn triplet_singlet_s2() {
        let e = sorted_eigs(&collective_spin_ops(2).unwrap().s2);
        let expect = [0.0, 2.0, 2.0, 2.0];
        for (a, b) in e.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn three_atom_s2_spectrum() {
        // Brute-force oracle: build S² from explicit Pauli kron products.
        let sx = DMatrix::from_row_slice(2, 2, &[re(0.0), re(0.5), re(0.5), re(0.0)]);
        let sy = DMatrix::from_row_slice(
            2,
            2,
            &[re(0.0), C64::new(0.0, -0.5), C64::new(0.0, 0.5), re(0.0)],
        );
        let sz = DMatrix::from_row_slice(2, 2, &[re(0.5), re(0.0), re(0.0), re(-0.5)]);
        let id = DMatrix::<C64>::identity(2, 2);
        let total = |s: &DMatrix<C64>| {
            let mut acc = DMatrix::<C64>::zeros(8, 8);
            for k in 0..3 {
                let mut t = DMatrix::from_element(1, 1, re(1.0));
                for j in 0..3 {
                    t = t.kronecker(if j == k { s } else { &id });
                }
                acc += t;
            }
            acc
        };
        let (x, y, z) = (total(&sx), total(&sy), total(&sz));
        let oracle = &x * &x + &y * &y + &z * &z;
        let mut oracle_e: Vec<f64> = SymmetricEigen::new(oracle).eigenvalues.iter().copied().collect();
        oracle_e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ours = sorted_eigs(&collective_spin_ops(3).unwrap().s2);
        for (a, b) in ours.iter().zip(&oracle_e) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(ours[..4].iter().all(|v| (v - 0.75).abs() < 1e-12));
        assert!(ours[4..].iter().all(|v| (v - 3.75).abs() < 1e-12));
    }

    #[test]
    fn rotated_identities_hold() {
        for m in 1..=4 {
            assert!(rotated_identities_check(m).unwrap(), "M = {m}");
        }
    }

    #[test]
    fn dicke_consistency() {
        for m in 1..=4 {
            let v = symmetric_embedding(m).unwrap();
            assert!((v.adjoint() * &v - DMatrix::<C64>::identity(m + 1, m + 1)).camax() < 1e-12);
            let c = collective_spin_ops(m).unwrap();
            let s = spin_matrices(m).unwrap();
            for (col, direct) in [(&c.sz, &s.sz), (&c.splus, &s.splus), (&c.sminus, &s.sminus)] {
                let reduced = v.adjoint() * col.to_dense() * &v;
                assert!((reduced - direct.to_dense()).camax() <= 1e-12, "M = {m}");
            }
        }
    }

    #[test]
    fn embedding_small_cases() {
        let v1 = symmetric_embedding(1).unwrap();
        assert!((v1 - DMatrix::<C64>::identity(2, 2)).camax() < 1e-15);
        let v2 = symmetric_embedding(2).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((v2[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((v2[(1, 1)].re - h).abs() < 1e-15 && (v2[(2, 1)].re - h).abs() < 1e-15);
        assert!((v2[(3, 2)].re - 1.0).abs() < 1e-15);
        let v3 = symmetric_embedding(3).unwrap();
        let sz = v3.adjoint() * collective_spin_ops(3).unwrap().sz.to_dense() * &v3;
        for (i, want) in [1.5, 0.5, -0.5, -1.5].iter().enumerate() {
            assert!((sz[(i, i)].re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bosonic_lowering() {
        let a1 = annihilation(1).unwrap();
        assert_eq!(a1.nnz(), 1);
        assert_eq!(a1.get(0, 1), re(1.0));
        let a2 = annihilation(2).unwrap();
        assert!((a2.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
        let n = a2.adjoint().mul(&a2).unwrap();
        for k in 0..3 {
            assert!((n.get(k, k).re - k as f64).abs() < 1e-14);
        }
        assert!(annihilation(0).is_err());
    }

    #[test]
    fn embedded_two_site_sz_spectrum() {
        let s = spin_matrices(1).unwrap();
        let space = HilbertSpace::uniform(2, 2).unwrap();
        let tot = s.sz.embed(0, &space).unwrap().add(&s.sz.embed(1, &space).unwrap()).unwrap();
        let e = sorted_eigs(&tot);
        for (a, b) in e.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let a = s.splus.embed(0, &space).unwrap();
        let b = s.sz.embed(1, &space).unwrap();
        assert!(comm(&a, &b).nnz() == 0);
    }
}
