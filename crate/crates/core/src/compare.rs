//! Side-by-side evolution of a cavity model and its effective spin model
//! from the same initial spin configuration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_on_grid, EvolutionSettings};
use crate::effective::{build_spin_hamiltonian, couplings_to_spin_params, derive_couplings, SpinModelParams};
use crate::error::{Error, Result};
use crate::full_model::{
    build_eliminated_hamiltonian, build_full_hamiltonian, build_intermediate_hamiltonian, CavityModel,
};
use crate::graph::CavityGraph;
use crate::layout::{AtomBasis, CavityLayout};
use crate::params::PhysicalParams;
use crate::regime::{check_conditions, RegimeReport, RegimeThresholds};
use crate::sparse::{SparseOperator, C64};
use crate::spin::{ground_to_three_level, rotated_to_ground_levels, spin_matrices, symmetric_embedding};
use crate::state::QuantumState;
use crate::td::TimeDependentOperator;

/// Default step for the cavity side: this many steps per period of the
/// fastest rotating term.
pub const COMPARE_STEPS_PER_FASTEST_PERIOD: f64 = 200.0;

/// Which cavity model plays the reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceModel {
    /// Three-level atoms driven by all fields.
    #[default]
    Full,
    /// Excited level eliminated; ground levels and photons remain.
    Eliminated,
    /// Collective spins coupled to photons in the rotating frame.
    Intermediate,
}

/// Spin observables, indexed by cavity (= spin site).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Sz(usize),
    SpSm(usize),
    SzSz(usize, usize),
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Sz(i) => format!("sz_{i}"),
            Observable::SpSm(i) => format!("spsm_{i}"),
            Observable::SzSz(i, j) => format!("szsz_{i}_{j}"),
        }
    }

    fn sites(&self) -> Vec<usize> {
        match *self {
            Observable::Sz(i) | Observable::SpSm(i) => vec![i],
            Observable::SzSz(i, j) => vec![i, j],
        }
    }

    /// The operator on a cavity layout (collective spin of each cavity).
    pub fn on_layout(&self, layout: &CavityLayout) -> Result<SparseOperator> {
        match *self {
            Observable::Sz(i) => layout.spin_z(i),
            Observable::SpSm(i) => layout.spin_plus(i)?.mul(&layout.spin_minus(i)?),
            Observable::SzSz(i, j) => layout.spin_z(i)?.mul(&layout.spin_z(j)?),
        }
    }

    /// The operator on the spin sites of `sp`.
    pub fn on_spins(&self, sp: &SpinModelParams) -> Result<SparseOperator> {
        let space = sp.space()?;
        let m = spin_matrices(sp.two_s)?;
        match *self {
            Observable::Sz(i) => m.sz.embed(i, &space),
            Observable::SpSm(i) => m.splus.mul(&m.sminus)?.embed(i, &space),
            Observable::SzSz(i, j) => m.sz.embed(i, &space)?.mul(&m.sz.embed(j, &space)?),
        }
    }
}

/// Per-site `S^z` for every cavity.
pub fn default_observables(n_cavities: usize) -> Vec<Observable> {
    (0..n_cavities).map(Observable::Sz).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareSettings {
    pub reference: ReferenceModel,
    pub evolution: EvolutionSettings,
    pub thresholds: RegimeThresholds,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            reference: ReferenceModel::Full,
            evolution: EvolutionSettings::default(),
            thresholds: RegimeThresholds::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservableTrace {
    pub observable: Observable,
    pub reference: Vec<f64>,
    pub effective: Vec<f64>,
    pub max_deviation: f64,
    /// Time at which the deviation peaks.
    pub time_of_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: ReferenceModel,
    pub times: Vec<f64>,
    pub traces: Vec<ObservableTrace>,
    /// Largest total photon number along the reference trajectory.
    pub max_photon_population: f64,
    /// Largest total excited-level population (zero unless the reference
    /// keeps the excited level).
    pub max_excited_population: f64,
    pub spin_params: SpinModelParams,
    pub regime: RegimeReport,
    /// Step used on the reference side.
    pub max_step: Option<f64>,
}

impl ComparisonReport {
    pub fn max_deviation(&self, obs: Observable) -> Option<f64> {
        self.traces.iter().find(|t| t.observable == obs).map(|t| t.max_deviation)
    }
}

/// Evolves `spin_state` (on the spin-`M/2` sites of the effective model)
/// under the chosen cavity model and under the effective spin model, and
/// records the largest gap between the two for each observable.
/// Refuses to run outside the validity regime.
pub fn compare_full_vs_effective(
    p: &PhysicalParams,
    graph: &CavityGraph,
    n_max: usize,
    spin_state: &QuantumState,
    times: &[f64],
    observables: &[Observable],
    settings: &CompareSettings,
) -> Result<ComparisonReport> {
    p.validate()?;
    let regime = check_conditions(p, &settings.thresholds, graph.n_cavities());
    if !regime.all_ok() {
        return Err(Error::RegimeViolation(Box::new(regime)));
    }
    run(p, graph, n_max, spin_state, times, observables, settings, regime)
}

#[allow(clippy::too_many_arguments)]
fn run(
    p: &PhysicalParams,
    graph: &CavityGraph,
    n_max: usize,
    spin_state: &QuantumState,
    times: &[f64],
    observables: &[Observable],
    settings: &CompareSettings,
    regime: RegimeReport,
) -> Result<ComparisonReport> {
    let n = graph.n_cavities();
    for o in observables {
        if let Some(&bad) = o.sites().iter().find(|&&s| s >= n) {
            return Err(Error::InvalidArgument(format!("{} refers to cavity {bad} of {n}", o.label())));
        }
    }
    let m = p.atoms_per_cavity;
    let sp = couplings_to_spin_params(&derive_couplings(p)?, m, graph)?;
    let spin_space = sp.space()?;
    if spin_state.space() != &spin_space {
        return Err(Error::DimensionMismatch {
            expected: spin_space.total_dim(),
            found: spin_state.dim(),
        });
    }

    let model = match settings.reference {
        ReferenceModel::Full => build_full_hamiltonian(p, graph, n_max)?,
        ReferenceModel::Eliminated => build_eliminated_hamiltonian(p, graph, n_max)?,
        ReferenceModel::Intermediate => build_intermediate_hamiltonian(p, graph, n_max)?,
    };
    let psi0 = embed_spin_state(&model.layout, spin_state)?;
    let mut evo = settings.evolution.clone();
    if evo.max_step.is_none() {
        evo.max_step = compare_step(&model.hamiltonian);
    }
    let ref_states = evolve_on_grid(&model.hamiltonian, &psi0, times, &evo)?;

    let h_eff = TimeDependentOperator::new(build_spin_hamiltonian(&sp)?, Vec::new())?;
    let eff_states = evolve_on_grid(&h_eff, spin_state, times, &settings.evolution)?;

    let mut traces = Vec::with_capacity(observables.len());
    for &obs in observables {
        let op_ref = obs.on_layout(&model.layout)?;
        let op_eff = obs.on_spins(&sp)?;
        let reference = expectations(&op_ref, &ref_states)?;
        let effective = expectations(&op_eff, &eff_states)?;
        let (mut max_deviation, mut time_of_max) = (0.0, times.first().copied().unwrap_or(0.0));
        for ((a, b), &t) in reference.iter().zip(&effective).zip(times) {
            let d = (a - b).abs();
            if d > max_deviation {
                max_deviation = d;
                time_of_max = t;
            }
        }
        traces.push(ObservableTrace {
            observable: obs,
            reference,
            effective,
            max_deviation,
            time_of_max,
        });
    }

    let (photons, excited) = populations(&model)?;
    let max_of = |op: &SparseOperator| -> Result<f64> {
        Ok(expectations(op, &ref_states)?.into_iter().fold(0.0, f64::max))
    };
    Ok(ComparisonReport {
        reference: settings.reference,
        times: times.to_vec(),
        traces,
        max_photon_population: max_of(&photons)?,
        max_excited_population: max_of(&excited)?,
        spin_params: sp,
        regime,
        max_step: evo.max_step,
    })
}

fn compare_step(h: &TimeDependentOperator) -> Option<f64> {
    let nu = h.max_frequency();
    (nu > 0.0).then(|| 2.0 * PI / nu / COMPARE_STEPS_PER_FASTEST_PERIOD)
}

fn expectations(op: &SparseOperator, states: &[QuantumState]) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|s| Ok(op.expectation(s)?.re / s.norm_squared()))
        .collect()
}

fn populations(model: &CavityModel) -> Result<(SparseOperator, SparseOperator)> {
    let layout = &model.layout;
    let space = layout.space().clone();
    let mut photons = SparseOperator::zeros(space.clone());
    let mut excited = SparseOperator::zeros(space);
    for c in 0..layout.n_cavities() {
        photons = photons.add(&layout.photon_number(c)?)?;
        excited = excited.add(&layout.excited_population(c)?)?;
    }
    Ok((photons, excited))
}

/// Maps a state of `N` spin-`M/2` sites onto a cavity layout: each spin
/// level `m = M/2 − k` becomes the symmetric Dicke state with `k` atoms in
/// `|↓⟩`, and every cavity starts in the photon vacuum.
pub fn embed_spin_state(layout: &CavityLayout, spin_state: &QuantumState) -> Result<QuantumState> {
    let n = layout.n_cavities();
    let m = layout.atoms_per_cavity();
    let dims = spin_state.space().local_dims();
    if dims.len() != n || dims.iter().any(|&d| d != m + 1) {
        return Err(Error::InvalidArgument(format!(
            "spin state must have {n} sites of dimension {}",
            m + 1
        )));
    }
    let v = symmetric_embedding(m)?;
    // Sparse columns: nonzero entries of each cavity-local embedded level.
    let photon_dim = layout.n_max() + 1;
    let mut columns: Vec<Vec<(usize, C64)>> = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let rotated: Vec<C64> = v.column(k).iter().copied().collect();
        let atoms = match layout.basis() {
            AtomBasis::Rotated => rotated,
            AtomBasis::GroundLevels => rotated_to_ground_levels(&rotated, m)?,
            AtomBasis::ThreeLevel => ground_to_three_level(&rotated_to_ground_levels(&rotated, m)?, m)?,
        };
        columns.push(
            atoms
                .into_iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.0)
                .map(|(i, a)| (i * photon_dim, a))
                .collect(),
        );
    }
    let block = layout.basis().dim().pow(m as u32) * photon_dim;
    let space = layout.space().clone();
    let mut out = vec![C64::new(0.0, 0.0); space.total_dim()];
    for (idx, &amp) in spin_state.amplitudes().iter().enumerate() {
        if amp.norm() == 0.0 {
            continue;
        }
        let digits = spin_state.space().decompose(idx);
        let mut partial = vec![(0usize, amp)];
        for &k in &digits {
            partial = partial
                .iter()
                .flat_map(|&(base, a)| columns[k].iter().map(move |&(i, c)| (base * block + i, a * c)))
                .collect();
        }
        for (i, a) in partial {
            out[i] += a;
        }
    }
    QuantumState::new(space, out)
}
