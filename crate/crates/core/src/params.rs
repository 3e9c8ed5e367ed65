use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::C64;

/// Cavity, laser and atom constants. All frequencies and rates share one
/// unit (conventionally the hopping rate `j`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Cavity coupling of the `a ↔ e` transition.
    pub g1: f64,
    /// Cavity coupling of the `b ↔ e` transition.
    pub g2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Classical field on `b ↔ e`, detuned by `delta1`.
    pub omega1: C64,
    /// Classical field on `a ↔ e`, detuned by `delta2`.
    pub omega2: C64,
    /// Extra field on `b ↔ e`, detuned by `delta1 + delta`.
    #[serde(default)]
    pub omega3: C64,
    /// Extra field on `a ↔ e`, detuned by `delta2 + delta`.
    #[serde(default)]
    pub omega4: C64,
    /// Raman splitting ω; the drive term carries `ω/2`.
    pub omega: f64,
    /// Additional detuning δ of the extra fields.
    #[serde(default)]
    pub delta: f64,
    /// Stark shift amplitude on `|b⟩`.
    #[serde(default)]
    pub mu_z: C64,
    /// Inter-cavity photon hopping rate.
    pub j: f64,
    #[serde(default)]
    pub gamma: f64,
    pub atoms_per_cavity: usize,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.g1, self.g2, self.delta1, self.delta2, self.omega, self.delta, self.j, self.gamma,
        ]
        .iter()
        .all(|x| x.is_finite())
            && [self.omega1, self.omega2, self.omega3, self.omega4, self.mu_z]
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite physical parameter".into()));
        }
        if self.atoms_per_cavity == 0 {
            return Err(Error::InvalidArgument("atoms_per_cavity must be >= 1".into()));
        }
        if self.j < 0.0 {
            return Err(Error::InvalidArgument("hopping rate j must be >= 0".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidArgument("decay rate gamma must be >= 0".into()));
        }
        if self.delta1 == 0.0 || self.delta2 == 0.0 {
            return Err(Error::InvalidArgument("detunings delta1, delta2 must be nonzero".into()));
        }
        Ok(())
    }

    /// Whether any of the extra fields (Ω₃, Ω₄, μ_z) is switched on.
    pub fn extended_active(&self) -> bool {
        self.omega3 != C64::new(0.0, 0.0)
            || self.omega4 != C64::new(0.0, 0.0)
            || self.mu_z != C64::new(0.0, 0.0)
    }

    /// `√(M/2) g_j` for `j ∈ {1, 2}`.
    pub fn collective_coupling(&self, j: usize) -> f64 {
        let g = if j == 1 { self.g1 } else { self.g2 };
        (self.atoms_per_cavity as f64 / 2.0).sqrt() * g.abs()
    }

    /// Multiplies every frequency and rate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            g1: self.g1 * factor,
            g2: self.g2 * factor,
            delta1: self.delta1 * factor,
            delta2: self.delta2 * factor,
            omega1: self.omega1 * factor,
            omega2: self.omega2 * factor,
            omega3: self.omega3 * factor,
            omega4: self.omega4 * factor,
            omega: self.omega * factor,
            delta: self.delta * factor,
            mu_z: self.mu_z * factor,
            j: self.j * factor,
            gamma: self.gamma * factor,
            atoms_per_cavity: self.atoms_per_cavity,
        }
    }
}
