//! Site bookkeeping for cavity arrays: per cavity, `M` atoms followed by
//! one photon mode.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::sparse::{SparseOperator, C64};
use crate::spin::{annihilation, atomic_transition, collective_sum, rotation_to_ground_levels, Level};

/// Which single-atom basis the atomic factors use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomBasis {
    /// `{a, b, e}`.
    ThreeLevel,
    /// `{a, b}` after the excited level is eliminated.
    GroundLevels,
    /// `{↑, ↓}` with `↑ = (a + b)/√2`.
    Rotated,
}

impl AtomBasis {
    pub fn dim(self) -> usize {
        match self {
            AtomBasis::ThreeLevel => 3,
            AtomBasis::GroundLevels | AtomBasis::Rotated => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CavityLayout {
    n_cavities: usize,
    atoms_per_cavity: usize,
    basis: AtomBasis,
    n_max: usize,
    space: HilbertSpace,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `|x⟩⟨y|` for `x, y ∈ {a, b}` as a 2×2 matrix in `(a, b)` coordinates.
fn ground_projector(x: Level, y: Level) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2, 2);
    m[(x as usize, y as usize)] = re(1.0);
    m
}

impl CavityLayout {
    pub fn new(n_cavities: usize, atoms_per_cavity: usize, basis: AtomBasis, n_max: usize) -> Result<Self> {
        if n_cavities == 0 || atoms_per_cavity == 0 {
            return Err(Error::InvalidArgument(
                "need at least one cavity and one atom per cavity".into(),
            ));
        }
        if n_max == 0 {
            return Err(Error::InvalidArgument("photon cutoff n_max must be >= 1".into()));
        }
        let mut dims = Vec::with_capacity(n_cavities * (atoms_per_cavity + 1));
        for _ in 0..n_cavities {
            dims.extend(std::iter::repeat_n(basis.dim(), atoms_per_cavity));
            dims.push(n_max + 1);
        }
        Ok(Self {
            n_cavities,
            atoms_per_cavity,
            basis,
            n_max,
            space: HilbertSpace::new(dims)?,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn n_cavities(&self) -> usize {
        self.n_cavities
    }

    pub fn atoms_per_cavity(&self) -> usize {
        self.atoms_per_cavity
    }

    pub fn basis(&self) -> AtomBasis {
        self.basis
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn first_atom_site(&self, cavity: usize) -> usize {
        cavity * (self.atoms_per_cavity + 1)
    }

    pub fn photon_site(&self, cavity: usize) -> usize {
        cavity * (self.atoms_per_cavity + 1) + self.atoms_per_cavity
    }

    fn check_cavity(&self, cavity: usize) -> Result<()> {
        if cavity >= self.n_cavities {
            return Err(Error::InvalidArgument(format!(
                "cavity {cavity} out of range ({} cavities)",
                self.n_cavities
            )));
        }
        Ok(())
    }

    /// Embeds `Σ_k op_k` over the atoms of one cavity.
    pub fn collective(&self, single_atom: &SparseOperator, cavity: usize) -> Result<SparseOperator> {
        self.check_cavity(cavity)?;
        collective_sum(single_atom, self.atoms_per_cavity)?.embed_block(self.first_atom_site(cavity), &self.space)
    }

    /// Embeds a single-mode photon operator.
    pub fn photon(&self, op: &SparseOperator, cavity: usize) -> Result<SparseOperator> {
        self.check_cavity(cavity)?;
        op.embed(self.photon_site(cavity), &self.space)
    }

    pub fn annihilation(&self, cavity: usize) -> Result<SparseOperator> {
        self.photon(&annihilation(self.n_max)?, cavity)
    }

    pub fn photon_number(&self, cavity: usize) -> Result<SparseOperator> {
        let a = annihilation(self.n_max)?;
        self.photon(&a.adjoint().mul(&a)?.into_hermitian()?, cavity)
    }

    /// A single-atom operator given in `(a, b)` coordinates, re-expressed in
    /// this layout's atomic basis (zero on `|e⟩`).
    fn ground_matrix_operator(&self, m: &DMatrix<C64>, hermitian: bool) -> Result<SparseOperator> {
        let local = match self.basis {
            AtomBasis::GroundLevels => m.clone(),
            AtomBasis::Rotated => {
                let u = rotation_to_ground_levels();
                u.adjoint() * m * u
            }
            AtomBasis::ThreeLevel => {
                let mut big = DMatrix::zeros(3, 3);
                big.view_mut((0, 0), (2, 2)).copy_from(m);
                big
            }
        };
        let space = HilbertSpace::single(self.basis.dim())?;
        SparseOperator::from_dense(space, &local, hermitian)
    }

    /// `Λ^{xy}` of one cavity.
    pub fn transition(&self, x: Level, y: Level, cavity: usize) -> Result<SparseOperator> {
        if x == Level::E || y == Level::E {
            if self.basis != AtomBasis::ThreeLevel {
                return Err(Error::InvalidArgument(
                    "the excited level is absent from this layout".into(),
                ));
            }
            return self.collective(&atomic_transition(x, y), cavity);
        }
        let single = self.ground_matrix_operator(&ground_projector(x, y), x == y)?;
        self.collective(&single, cavity)
    }

    /// Collective `S_z` of one cavity in the rotated basis.
    pub fn spin_z(&self, cavity: usize) -> Result<SparseOperator> {
        let m = (ground_projector(Level::A, Level::B) + ground_projector(Level::B, Level::A)) * re(0.5);
        self.collective(&self.ground_matrix_operator(&m, true)?, cavity)
    }

    /// Collective `S_+ = Σ |↑⟩⟨↓|` of one cavity.
    pub fn spin_plus(&self, cavity: usize) -> Result<SparseOperator> {
        let m = (ground_projector(Level::A, Level::A) - ground_projector(Level::A, Level::B)
            + ground_projector(Level::B, Level::A)
            - ground_projector(Level::B, Level::B))
            * re(0.5);
        self.collective(&self.ground_matrix_operator(&m, false)?, cavity)
    }

    pub fn spin_minus(&self, cavity: usize) -> Result<SparseOperator> {
        Ok(self.spin_plus(cavity)?.adjoint())
    }

    /// `Λ^{ee}` of one cavity; zero outside the three-level layout.
    pub fn excited_population(&self, cavity: usize) -> Result<SparseOperator> {
        match self.basis {
            AtomBasis::ThreeLevel => self.transition(Level::E, Level::E, cavity),
            _ => {
                self.check_cavity(cavity)?;
                Ok(SparseOperator::zeros(self.space.clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::collective_spin_ops;

    #[test]
    fn site_ordering() {
        let l = CavityLayout::new(2, 2, AtomBasis::ThreeLevel, 2).unwrap();
        assert_eq!(l.space().local_dims(), &[3, 3, 3, 3, 3, 3]);
        assert_eq!(l.photon_site(1), 5);
        assert_eq!(l.space().total_dim(), 729);
    }

    #[test]
    fn rotated_spin_ops_match_collective() {
        let l = CavityLayout::new(1, 3, AtomBasis::Rotated, 1).unwrap();
        let c = collective_spin_ops(3).unwrap();
        let sz = c.sz.embed_block(0, l.space()).unwrap();
        let sp = c.splus.embed_block(0, l.space()).unwrap();
        assert!(l.spin_z(0).unwrap().max_abs_diff(&sz).unwrap() < 1e-14);
        assert!(l.spin_plus(0).unwrap().max_abs_diff(&sp).unwrap() < 1e-14);
    }

    #[test]
    fn ground_level_spin_algebra() {
        for basis in [AtomBasis::ThreeLevel, AtomBasis::GroundLevels] {
            let l = CavityLayout::new(1, 2, basis, 1).unwrap();
            let sz = l.spin_z(0).unwrap();
            let sp = l.spin_plus(0).unwrap();
            let comm = SparseOperator::commutator(&sz, &sp).unwrap();
            assert!(comm.max_abs_diff(&sp).unwrap() < 1e-14);
        }
    }

    #[test]
    fn excited_level_needs_three_levels() {
        let l = CavityLayout::new(1, 1, AtomBasis::GroundLevels, 1).unwrap();
        assert!(l.transition(Level::E, Level::A, 0).is_err());
        assert_eq!(l.excited_population(0).unwrap().nnz(), 0);
    }
}
