//! Atom-cavity Hamiltonians: the driven three-level model, the model with
//! the excited level eliminated, and the rotating-frame collective-spin
//! model. Also the decay rates and the conditional (no-jump) Hamiltonian.

use log::warn;

use crate::effective::derive_couplings;
use crate::error::{Error, Result};
use crate::graph::CavityGraph;
use crate::layout::{AtomBasis, CavityLayout};
use crate::params::PhysicalParams;
use crate::regime::{check_conditions, RegimeThresholds};
use crate::sparse::{SparseOperator, C64};
use crate::spin::{spin_matrices, Level};
use crate::td::TimeDependentOperator;

/// Default photon cutoff.
pub const DEFAULT_N_MAX: usize = 2;

/// A Hamiltonian together with the layout of the space it acts on.
#[derive(Clone, Debug)]
pub struct CavityModel {
    pub layout: CavityLayout,
    pub hamiltonian: TimeDependentOperator,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn layout_for(p: &PhysicalParams, graph: &CavityGraph, basis: AtomBasis, n_max: usize) -> Result<CavityLayout> {
    p.validate()?;
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let report = check_conditions(p, &RegimeThresholds::default(), graph.n_cavities());
    if !report.all_ok() {
        warn!("outside the validity regime: {}", report.messages.join("; "));
    }
    CavityLayout::new(graph.n_cavities(), p.atoms_per_cavity, basis, n_max)
}

/// `−J Σ_⟨jk⟩ (a_j† a_k + a_j a_k†)`.
fn hopping(layout: &CavityLayout, graph: &CavityGraph, j: f64) -> Result<SparseOperator> {
    let mut acc = SparseOperator::zeros(layout.space().clone());
    if j == 0.0 {
        return acc.into_hermitian();
    }
    for &(x, y) in graph.edges() {
        let ax = layout.annihilation(x)?;
        let ay = layout.annihilation(y)?;
        let fwd = ax.adjoint().mul(&ay)?;
        acc = acc.axpy(re(-j), &fwd)?.axpy(re(-j), &fwd.adjoint())?;
    }
    acc.into_hermitian()
}

fn require_real_mu_z(p: &PhysicalParams) -> Result<()> {
    if p.mu_z.im != 0.0 {
        return Err(Error::InvalidArgument(
            "mu_z must be real when the Stark shift enters as -mu_z |b><b|".into(),
        ));
    }
    Ok(())
}

/// `(ω/2)(Λ^{ab} + Λ^{ba}) − μ_z Λ^{bb}` summed over cavities.
fn drive_and_stark(layout: &CavityLayout, p: &PhysicalParams) -> Result<SparseOperator> {
    let mut acc = SparseOperator::zeros(layout.space().clone());
    for c in 0..layout.n_cavities() {
        let ab = layout.transition(Level::A, Level::B, c)?;
        let ba = layout.transition(Level::B, Level::A, c)?;
        acc = acc.axpy(re(p.omega / 2.0), &ab)?.axpy(re(p.omega / 2.0), &ba)?;
        if p.mu_z.re != 0.0 {
            acc = acc.axpy(re(-p.mu_z.re), &layout.transition(Level::B, Level::B, c)?)?;
        }
    }
    acc.into_hermitian()
}

/// The driven three-level model on `(3-level)^M ⊗ (n_max+1)` per cavity.
pub fn build_full_hamiltonian(p: &PhysicalParams, graph: &CavityGraph, n_max: usize) -> Result<CavityModel> {
    let layout = layout_for(p, graph, AtomBasis::ThreeLevel, n_max)?;
    require_real_mu_z(p)?;
    let space = layout.space().clone();
    let static_part = drive_and_stark(&layout, p)?.add(&hopping(&layout, graph, p.j)?)?.into_hermitian()?;

    let mut at_d1 = SparseOperator::zeros(space.clone());
    let mut at_d2 = SparseOperator::zeros(space.clone());
    let mut at_d1_delta = SparseOperator::zeros(space.clone());
    let mut at_d2_delta = SparseOperator::zeros(space.clone());
    for c in 0..layout.n_cavities() {
        let a = layout.annihilation(c)?;
        let eb = layout.transition(Level::E, Level::B, c)?;
        let ea = layout.transition(Level::E, Level::A, c)?;
        at_d1 = at_d1.axpy(p.omega1, &eb)?.axpy(re(p.g1), &ea.mul(&a)?)?;
        at_d2 = at_d2.axpy(p.omega2, &ea)?.axpy(re(p.g2), &eb.mul(&a)?)?;
        at_d1_delta = at_d1_delta.axpy(p.omega3, &eb)?;
        at_d2_delta = at_d2_delta.axpy(p.omega4, &ea)?;
    }
    let hamiltonian = TimeDependentOperator::new(
        static_part,
        vec![
            (at_d1, p.delta1),
            (at_d2, p.delta2),
            (at_d1_delta, p.delta1 + p.delta),
            (at_d2_delta, p.delta2 + p.delta),
        ],
    )?;
    Ok(CavityModel { layout, hamiltonian })
}

/// Relative mismatch of the two Stark coefficients `g_j²/Δ_j`.
pub fn stark_mismatch(p: &PhysicalParams) -> f64 {
    let s1 = p.g1 * p.g1 / p.delta1;
    let s2 = p.g2 * p.g2 / p.delta2;
    let scale = s1.abs().max(s2.abs());
    if scale == 0.0 {
        0.0
    } else {
        (s1 - s2).abs() / scale
    }
}

/// The model after eliminating `|e⟩`, on `(a,b)^M ⊗ (n_max+1)` per cavity.
/// Static unless the extra fields are on, in which case their Raman terms
/// rotate at `−δ`.
pub fn build_eliminated_hamiltonian(
    p: &PhysicalParams,
    graph: &CavityGraph,
    n_max: usize,
) -> Result<CavityModel> {
    let layout = layout_for(p, graph, AtomBasis::GroundLevels, n_max)?;
    require_real_mu_z(p)?;
    let mismatch = stark_mismatch(p);
    if mismatch > 1e-6 {
        warn!("g1^2/Delta1 and g2^2/Delta2 differ by {mismatch:.3e} (relative); using g1^2/Delta1 for both levels");
    }
    let stark = p.g1 * p.g1 / p.delta1;
    let mu1 = p.omega1.conj() * (p.g1 / p.delta1);
    let mu2 = p.omega2.conj() * (p.g2 / p.delta2);
    let space = layout.space().clone();

    let mut h = drive_and_stark(&layout, p)?.add(&hopping(&layout, graph, p.j)?)?;
    let mut slow = SparseOperator::zeros(space);
    let couplings = if p.extended_active() {
        let d = derive_couplings(p)?;
        Some((d.mu3, d.mu4))
    } else {
        None
    };
    for c in 0..layout.n_cavities() {
        let a = layout.annihilation(c)?;
        let n = layout.photon_number(c)?;
        let aa = layout.transition(Level::A, Level::A, c)?;
        let bb = layout.transition(Level::B, Level::B, c)?;
        let ba = layout.transition(Level::B, Level::A, c)?;
        let ab = layout.transition(Level::A, Level::B, c)?;
        h = h.axpy(re(-stark), &aa.add(&bb)?.mul(&n)?)?;
        let raman = SparseOperator::linear_combination(layout.space(), &[(-mu1, &ba), (-mu2, &ab)])?.mul(&a)?;
        h = h.add(&raman)?.add(&raman.adjoint())?;
        if let Some((mu3, mu4)) = couplings {
            let extra = SparseOperator::linear_combination(layout.space(), &[(-mu3, &ba), (-mu4, &ab)])?.mul(&a)?;
            slow = slow.add(&extra)?;
        }
    }
    let hamiltonian = TimeDependentOperator::new(h.into_hermitian()?, vec![(slow, -p.delta)])?;
    Ok(CavityModel { layout, hamiltonian })
}

/// The collective-spin model in the frame rotating with the photon Stark
/// shift and the Raman splitting, on `(↑,↓)^M ⊗ (n_max+1)` per cavity.
pub fn build_intermediate_hamiltonian(
    p: &PhysicalParams,
    graph: &CavityGraph,
    n_max: usize,
) -> Result<CavityModel> {
    let layout = layout_for(p, graph, AtomBasis::Rotated, n_max)?;
    let c = derive_couplings(p)?;
    let mismatch = stark_mismatch(p);
    if mismatch > 1e-6 {
        warn!("g1^2/Delta1 and g2^2/Delta2 differ by {mismatch:.3e} (relative)");
    }
    let space = layout.space().clone();
    let zero = || SparseOperator::zeros(space.clone());
    let (mut t_l, mut t_lp, mut t_lm) = (zero(), zero(), zero());
    let (mut t_d, mut t_dp, mut t_dm, mut t_w) = (zero(), zero(), zero(), zero());
    let half = re(0.5);
    for cav in 0..layout.n_cavities() {
        let a = layout.annihilation(cav)?;
        let sz_a = layout.spin_z(cav)?.mul(&a)?;
        let sp = layout.spin_plus(cav)?;
        let sp_a = sp.mul(&a)?;
        let sm_a = sp.adjoint().mul(&a)?;
        t_l = t_l.axpy(-c.mu12_plus, &sz_a)?;
        t_lp = t_lp.axpy(-c.mu12_minus * half, &sp_a)?;
        t_lm = t_lm.axpy(c.mu12_minus * half, &sm_a)?;
        if c.extended {
            t_d = t_d.axpy(-c.mu34_plus, &sz_a)?;
            t_dp = t_dp.axpy(-c.mu34_minus * half, &sp_a)?;
            t_dm = t_dm.axpy(c.mu34_minus * half, &sm_a)?;
            t_w = t_w.axpy(c.mu_z * half, &sp)?;
        }
    }
    let (l, w, ld) = (c.lambda, c.omega, c.lambda_minus_delta);
    let hamiltonian = TimeDependentOperator::new(
        hopping(&layout, graph, p.j)?,
        vec![
            (t_l, l),
            (t_lp, l + w),
            (t_lm, l - w),
            (t_d, ld),
            (t_dp, ld + w),
            (t_dm, ld - w),
            (t_w, w),
        ],
    )?;
    Ok(CavityModel { layout, hamiltonian })
}

/// `(γ'_A, γ'_B)`: decay rates of the two ground levels through virtual
/// excitation by the classical fields.
pub fn effective_decay_rates(p: &PhysicalParams) -> Result<(f64, f64)> {
    if p.gamma < 0.0 {
        return Err(Error::InvalidArgument("gamma must be >= 0".into()));
    }
    let d1 = p.delta1 + p.delta;
    let d2 = p.delta2 + p.delta;
    if p.delta1 == 0.0 || p.delta2 == 0.0 || d1 == 0.0 || d2 == 0.0 {
        return Err(Error::InvalidArgument(
            "delta_j and delta_j + delta must be nonzero".into(),
        ));
    }
    let ga = p.gamma * (p.omega1.norm_sqr() / (p.delta1 * p.delta1) + p.omega3.norm_sqr() / (d1 * d1));
    let gb = p.gamma * (p.omega2.norm_sqr() / (p.delta2 * p.delta2) + p.omega4.norm_sqr() / (d2 * d2));
    Ok((ga, gb))
}

/// `Λ^{aa}` and `Λ^{bb}` of every cavity on some space.
#[derive(Clone, Debug)]
pub struct GroundProjectors {
    pub per_cavity: Vec<(SparseOperator, SparseOperator)>,
}

impl GroundProjectors {
    /// From an atomic layout (three-level, ground-level or rotated).
    pub fn from_layout(layout: &CavityLayout) -> Result<Self> {
        let per_cavity = (0..layout.n_cavities())
            .map(|c| {
                Ok((
                    layout.transition(Level::A, Level::A, c)?,
                    layout.transition(Level::B, Level::B, c)?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self { per_cavity })
    }

    /// For effective spin-`M/2` sites, where `Λ^{aa} = M/2 + S^x` and
    /// `Λ^{bb} = M/2 − S^x`.
    pub fn from_spin_sites(n_sites: usize, two_s: usize) -> Result<Self> {
        let space = crate::hilbert::HilbertSpace::uniform(two_s + 1, n_sites)?;
        let sm = spin_matrices(two_s)?;
        let sx = sm.sx();
        let half_m = SparseOperator::identity(sx.space().clone()).scale_real(two_s as f64 / 2.0);
        let aa = half_m.add(&sx)?.into_hermitian()?;
        let bb = half_m.sub(&sx)?.into_hermitian()?;
        let per_cavity = (0..n_sites)
            .map(|j| Ok((aa.embed(j, &space)?, bb.embed(j, &space)?)))
            .collect::<Result<_>>()?;
        Ok(Self { per_cavity })
    }
}

/// `H − (i/2) Σ_j (γ'_A Λ_j^{aa} + γ'_B Λ_j^{bb})`, not Hermitian.
pub fn build_conditional_hamiltonian(
    h: &SparseOperator,
    projectors: &GroundProjectors,
    gamma_a: f64,
    gamma_b: f64,
) -> Result<SparseOperator> {
    if gamma_a < 0.0 || gamma_b < 0.0 {
        return Err(Error::InvalidArgument("decay rates must be >= 0".into()));
    }
    let mut out = h.clone();
    for (aa, bb) in &projectors.per_cavity {
        out = out
            .axpy(C64::new(0.0, -gamma_a / 2.0), aa)?
            .axpy(C64::new(0.0, -gamma_b / 2.0), bb)?;
    }
    Ok(out)
}
