//! Extremal eigenpairs, gaps and expectation values.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::effective::{build_spin_hamiltonian, SpinModelParams};
use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::krylov::{dot, norm};
use crate::sparse::{LinearMap, Negated, SparseOperator, C64};
use crate::spin::{collective_spin_ops, spin_matrices};
use crate::state::QuantumState;

/// Largest dimension handled by [`dense_spectrum`].
pub const DENSE_LIMIT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Lowest,
    Highest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSettings {
    /// Bound on `‖Hv − λv‖` for every returned pair.
    pub tol: f64,
    pub max_restarts: usize,
    pub krylov_dim: usize,
    /// Seed of the random start vectors.
    pub seed: u64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 300,
            krylov_dim: 80,
            seed: 0x5eed,
        }
    }
}

/// Eigenvalues in ascending order with matching vectors and residuals.
#[derive(Clone, Debug)]
pub struct SpectrumSlice {
    pub which: Which,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
}

impl SpectrumSlice {
    /// Index of the most extreme pair (first for `Lowest`, last for `Highest`).
    pub fn extreme_index(&self) -> usize {
        match self.which {
            Which::Lowest => 0,
            Which::Highest => self.eigenvalues.len() - 1,
        }
    }
}

fn project_out(v: &mut [C64], against: &[Vec<C64>]) {
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
    }
}

fn residual<A: LinearMap + ?Sized>(h: &A, x: &[C64], scratch: &mut [C64]) -> (f64, f64) {
    h.apply_into(x, scratch);
    let theta = dot(x, scratch).re;
    let r = scratch
        .iter()
        .zip(x)
        .map(|(hx, xi)| (hx - xi * theta).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (theta, r)
}

/// Restarted Lanczos with full reorthogonalization, locking converged
/// vectors so that degenerate levels are returned with multiplicity.
fn lowest_pairs<A: LinearMap + ?Sized>(h: &A, k: usize, s: &EigenSettings) -> Result<Vec<(f64, Vec<C64>, f64)>> {
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut out = Vec::new();
    let mut scratch = vec![C64::new(0.0, 0.0); n];
    for _ in 0..k {
        let mut start: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut found = None;
        let mut best = f64::INFINITY;
        for _ in 0..s.max_restarts.max(1) {
            project_out(&mut start, &locked);
            let b0 = norm(&start);
            if b0 == 0.0 {
                return Err(Error::NonConvergence("start vector lies in the locked space".into()));
            }
            let m_max = s.krylov_dim.max(2).min(n - locked.len());
            let mut basis: Vec<Vec<C64>> = vec![start.iter().map(|x| x / b0).collect()];
            let mut t = DMatrix::<C64>::zeros(m_max, m_max);
            let mut size = 0;
            for j in 0..m_max {
                h.apply_into(&basis[j], &mut scratch);
                let col = norm(&scratch);
                project_out(&mut scratch, &locked);
                for _ in 0..2 {
                    for (i, b) in basis.iter().enumerate() {
                        let c = dot(b, &scratch);
                        t[(i, j)] += c;
                        for (x, y) in scratch.iter_mut().zip(b) {
                            *x -= c * y;
                        }
                    }
                }
                size = j + 1;
                let beta = norm(&scratch);
                if j + 1 == m_max || beta <= 1e-13 * col.max(f64::MIN_POSITIVE) {
                    break;
                }
                t[(j + 1, j)] = C64::new(beta, 0.0);
                basis.push(scratch.iter().map(|x| x / beta).collect());
            }
            let tm = t.view((0, 0), (size, size)).into_owned();
            let herm = (&tm + tm.adjoint()) * C64::new(0.5, 0.0);
            let eig = herm.symmetric_eigen();
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            let y = eig.eigenvectors.column(imin);
            let mut x = vec![C64::new(0.0, 0.0); n];
            for (c, b) in y.iter().zip(&basis) {
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi += c * bi;
                }
            }
            project_out(&mut x, &locked);
            let nx = norm(&x);
            for xi in x.iter_mut() {
                *xi /= nx;
            }
            let (theta, r) = residual(h, &x, &mut scratch);
            best = best.min(r);
            if r <= s.tol {
                found = Some((theta, x, r));
                break;
            }
            start = x;
        }
        match found {
            Some((theta, x, r)) => {
                locked.push(x.clone());
                out.push((theta, x, r));
            }
            None => {
                return Err(Error::NonConvergence(format!(
                    "Lanczos did not reach residual {:.1e} (best {best:.3e}) after {} restarts",
                    s.tol, s.max_restarts
                )))
            }
        }
    }
    Ok(out)
}

/// The `k` lowest or highest eigenpairs of a Hermitian map.
pub fn extremal_eigenpairs<A: LinearMap + ?Sized>(
    h: &A,
    k: usize,
    which: Which,
    settings: &EigenSettings,
) -> Result<SpectrumSlice> {
    if !h.is_hermitian() {
        return Err(Error::InvalidArgument("eigenpairs need a Hermitian operator".into()));
    }
    if k == 0 || k > h.dim() {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenpairs of a {}-dimensional operator",
            h.dim()
        )));
    }
    let mut pairs = match which {
        Which::Lowest => lowest_pairs(h, k, settings)?,
        Which::Highest => lowest_pairs(&Negated(h), k, settings)?
            .into_iter()
            .map(|(v, x, r)| (-v, x, r))
            .collect(),
    };
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut slice = SpectrumSlice {
        which,
        eigenvalues: Vec::with_capacity(k),
        eigenvectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    for (v, x, r) in pairs {
        slice.eigenvalues.push(v);
        slice.eigenvectors.push(x);
        slice.residuals.push(r);
    }
    Ok(slice)
}

/// Full spectrum (ascending) and eigenvectors (as columns) by dense
/// diagonalization.
pub fn dense_spectrum(h: &SparseOperator) -> Result<(Vec<f64>, DMatrix<C64>)> {
    if h.dim() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            dim: h.dim(),
            limit: DENSE_LIMIT,
        });
    }
    if !h.is_hermitian() {
        return Err(Error::InvalidArgument("dense spectrum needs a Hermitian operator".into()));
    }
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.dim(), h.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapInfo {
    pub ground_energy: f64,
    /// Lowest energy above the ground level.
    pub excited_energy: f64,
    pub gap: f64,
    /// Number of states within the degeneracy tolerance of the ground energy.
    pub degeneracy: usize,
    pub degeneracy_tol: f64,
}

/// `E₁ − E₀` with `E₁` the lowest eigenvalue above `E₀ + degeneracy_tol`.
/// The default tolerance is `1e-8` times the spectral width.
pub fn excitation_gap<A: LinearMap + ?Sized>(
    h: &A,
    degeneracy_tol: Option<f64>,
    settings: &EigenSettings,
) -> Result<GapInfo> {
    let n = h.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("a gap needs at least two states".into()));
    }
    let tol = match degeneracy_tol {
        Some(t) => t,
        None => {
            let loose = EigenSettings {
                tol: settings.tol.max(1e-6),
                ..settings.clone()
            };
            let top = extremal_eigenpairs(h, 1, Which::Highest, &loose)?.eigenvalues[0];
            let bottom = extremal_eigenpairs(h, 1, Which::Lowest, &loose)?.eigenvalues[0];
            1e-8 * (top - bottom).abs()
        }
    };
    let mut k = 2.min(n);
    loop {
        let slice = extremal_eigenpairs(h, k, Which::Lowest, settings)?;
        let e0 = slice.eigenvalues[0];
        let degeneracy = slice.eigenvalues.iter().filter(|&&e| e <= e0 + tol).count();
        if degeneracy < k {
            let e1 = slice.eigenvalues[degeneracy];
            return Ok(GapInfo {
                ground_energy: e0,
                excited_energy: e1,
                gap: e1 - e0,
                degeneracy,
                degeneracy_tol: tol,
            });
        }
        if k == n {
            return Err(Error::InvalidArgument("operator has a single, fully degenerate level".into()));
        }
        k = (k + 2).min(n);
    }
}

/// Gap of the model whose ground state is targeted: for inverted
/// parameter sets this is the gap at the top of the realized spectrum.
pub fn target_excitation_gap(sp: &SpinModelParams, settings: &EigenSettings) -> Result<GapInfo> {
    let h = build_spin_hamiltonian(sp)?;
    if sp.inverted {
        excitation_gap(&Negated(&h), None, settings)
    } else {
        excitation_gap(&h, None, settings)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// `⟨S_i^α S_j^α⟩`.
    pub raw: f64,
    /// `⟨S_i^α S_j^α⟩ − ⟨S_i^α⟩⟨S_j^α⟩`.
    pub connected: f64,
}

fn site_spin(space: &HilbertSpace, site: usize, axis: Axis) -> Result<SparseOperator> {
    let dims = space.local_dims();
    if site >= dims.len() {
        return Err(Error::InvalidArgument(format!(
            "site {site} out of range ({} sites)",
            dims.len()
        )));
    }
    let m = spin_matrices(dims[site] - 1)?;
    let local = match axis {
        Axis::X => m.sx(),
        Axis::Y => m.sy(),
        Axis::Z => m.sz,
    };
    local.embed(site, space)
}

fn normalized_expectation(op: &SparseOperator, psi: &QuantumState) -> Result<C64> {
    Ok(op.expectation(psi)? / psi.norm_squared())
}

/// Spin-spin correlation on a space whose sites are spins (local dimension
/// `2S + 1`).
pub fn correlation(psi: &QuantumState, i: usize, j: usize, axis: Axis) -> Result<Correlation> {
    let si = site_spin(psi.space(), i, axis)?;
    let sj = site_spin(psi.space(), j, axis)?;
    let raw = normalized_expectation(&si.mul(&sj)?, psi)?.re;
    let a = normalized_expectation(&si, psi)?.re;
    let b = normalized_expectation(&sj, psi)?.re;
    Ok(Correlation {
        raw,
        connected: raw - a * b,
    })
}

/// `⟨S_j^z⟩` for every site.
pub fn magnetization_profile(psi: &QuantumState) -> Result<Vec<f64>> {
    (0..psi.space().n_sites())
        .map(|j| Ok(normalized_expectation(&site_spin(psi.space(), j, Axis::Z)?, psi)?.re))
        .collect()
}

/// `⟨S_j²⟩` on a spin site.
pub fn total_spin_per_site(psi: &QuantumState, site: usize) -> Result<f64> {
    let dims = psi.space().local_dims();
    if site >= dims.len() {
        return Err(Error::InvalidArgument(format!("site {site} out of range")));
    }
    let s2 = spin_matrices(dims[site] - 1)?.s2().embed(site, psi.space())?;
    Ok(normalized_expectation(&s2, psi)?.re)
}

/// `⟨S²⟩` of the collective spin of `m` two-level atoms (rotated basis)
/// occupying sites `first .. first + m`.
pub fn total_spin_of_atoms(psi: &QuantumState, first: usize, m: usize) -> Result<f64> {
    let s2 = collective_spin_ops(m)?.s2.embed_block(first, psi.space())?;
    Ok(normalized_expectation(&s2, psi)?.re)
}

/// `|⟨ψ|φ⟩|²` of the normalized states.
pub fn fidelity(psi: &QuantumState, phi: &QuantumState) -> Result<f64> {
    let o = psi.inner(phi)?;
    Ok((o.norm_sqr() / (psi.norm_squared() * phi.norm_squared())).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::SpinModelParams;
    use crate::graph::CavityGraph;

    fn xxx(k: f64, two_s: usize, n: usize, periodic: bool) -> SparseOperator {
        let sp = SpinModelParams::new(0.0, 0.0, 0.0, k, k, two_s, CavityGraph::chain(n, periodic).unwrap());
        build_spin_hamiltonian(&sp).unwrap()
    }

    #[test]
    fn diagonal_operator() {
        let space = HilbertSpace::single(6).unwrap();
        let h = SparseOperator::diagonal(space, &[3.0, -1.0, 2.0, 0.5, -1.0, 7.0]).unwrap();
        let s = extremal_eigenpairs(&h, 3, Which::Lowest, &EigenSettings::default()).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        for (a, b) in s.eigenvalues.iter().zip([-1.0, -1.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        let top = extremal_eigenpairs(&h, 1, Which::Highest, &EigenSettings::default()).unwrap();
        assert!((top.eigenvalues[0] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn two_site_xxx_spectrum() {
        let h = xxx(1.0, 1, 2, false);
        let s = extremal_eigenpairs(&h, 4, Which::Lowest, &EigenSettings::default()).unwrap();
        let want = [-0.25, -0.25, -0.25, 0.75];
        for (a, b) in s.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(s.residuals.iter().all(|&r| r <= 1e-10));
        let g = excitation_gap(&h, None, &EigenSettings::default()).unwrap();
        assert!((g.gap - 1.0).abs() < 1e-10);
        assert_eq!(g.degeneracy, 3);
    }

    #[test]
    fn lanczos_against_dense() {
        let h = xxx(1.0, 2, 5, true);
        let (dense, _) = dense_spectrum(&h).unwrap();
        let s = extremal_eigenpairs(&h, 4, Which::Lowest, &EigenSettings::default()).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&dense) {
            assert!(a >= &(b - 1e-9) && (a - b).abs() < 1e-9);
        }
        let top = extremal_eigenpairs(&h, 2, Which::Highest, &EigenSettings::default()).unwrap();
        let neg = extremal_eigenpairs(&Negated(&h), 2, Which::Lowest, &EigenSettings::default()).unwrap();
        assert!((top.eigenvalues[1] + neg.eigenvalues[0]).abs() < 1e-9);
        assert!((top.eigenvalues[1] - dense[dense.len() - 1]).abs() < 1e-9);
    }

    #[test]
    fn field_gap() {
        let sp = SpinModelParams::new(0.0, 0.0, 0.7, 0.0, 0.0, 1, CavityGraph::chain(3, false).unwrap());
        let h = build_spin_hamiltonian(&sp).unwrap();
        let g = excitation_gap(&h, None, &EigenSettings::default()).unwrap();
        assert!((g.gap - 0.7).abs() < 1e-10);
    }

    #[test]
    fn correlations_and_spin() {
        let space = HilbertSpace::uniform(2, 2).unwrap();
        let up = QuantumState::basis(space.clone(), 0).unwrap();
        let c = correlation(&up, 0, 1, Axis::Z).unwrap();
        assert!((c.raw - 0.25).abs() < 1e-15 && c.connected.abs() < 1e-15);
        let h = 1.0 / 2f64.sqrt();
        let singlet = QuantumState::new(
            space.clone(),
            vec![C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!((correlation(&singlet, 0, 1, Axis::Z).unwrap().raw + 0.25).abs() < 1e-15);
        assert!((correlation(&singlet, 0, 1, Axis::X).unwrap().raw + 0.25).abs() < 1e-15);
        assert!(total_spin_of_atoms(&singlet, 0, 2).unwrap().abs() < 1e-14);
        assert!((total_spin_of_atoms(&up, 0, 2).unwrap() - 2.0).abs() < 1e-14);
        let spin1 = QuantumState::random(HilbertSpace::uniform(3, 2).unwrap(), 4);
        assert!((total_spin_per_site(&spin1, 1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_basics() {
        let space = HilbertSpace::uniform(2, 2).unwrap();
        let a = QuantumState::random(space.clone(), 1);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-14);
        let phased = a
            .with_amplitudes(a.amplitudes().iter().map(|x| x * C64::from_polar(1.0, 0.4)).collect())
            .unwrap();
        assert!((fidelity(&a, &phased).unwrap() - 1.0).abs() < 1e-14);
        let b0 = QuantumState::basis(space.clone(), 0).unwrap();
        let b1 = QuantumState::basis(space, 1).unwrap();
        assert_eq!(fidelity(&b0, &b1).unwrap(), 0.0);
    }
}
