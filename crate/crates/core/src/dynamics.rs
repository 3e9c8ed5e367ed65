//! Time evolution: static (Krylov), time-dependent (midpoint-frozen steps),
//! conditional (non-Hermitian) and adiabatic sweeps.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{extremal_eigenpairs, EigenSettings, Which};
use crate::effective::{build_spin_hamiltonian, SpinModelParams};
use crate::error::{Error, Result};
use crate::krylov::{dot, expmv, norm};
use crate::sparse::{LinearMap, SparseOperator, C64};
use crate::state::QuantumState;
use crate::td::TimeDependentOperator;

/// Steps per period of the fastest rotating term, by default.
pub const STEPS_PER_FASTEST_PERIOD: f64 = 20.0;

/// One-period propagators are only formed up to this dimension.
pub const FLOQUET_MAX_DIM: usize = 2048;

/// Local error target used while forming one-period propagators, whose
/// errors are amplified by the number of periods.
const FLOQUET_STEP_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSettings {
    pub krylov_dim: usize,
    /// Local error bound per Krylov substep.
    pub step_tolerance: f64,
    /// Longest frozen interval for time-dependent Hamiltonians. `None`
    /// picks the default resolution of the fastest rotating term.
    pub max_step: Option<f64>,
    /// Rescale the state to unit norm after each run.
    pub renormalize: bool,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            krylov_dim: 30,
            step_tolerance: 1e-10,
            max_step: None,
            renormalize: false,
        }
    }
}

impl EvolutionSettings {
    pub fn validate(&self) -> Result<()> {
        if self.krylov_dim < 2 {
            return Err(Error::InvalidArgument("krylov_dim must be >= 2".into()));
        }
        if !(self.step_tolerance > 0.0) {
            return Err(Error::InvalidArgument("step_tolerance must be > 0".into()));
        }
        if let Some(m) = self.max_step {
            if !(m > 0.0) {
                return Err(Error::InvalidArgument("max_step must be > 0".into()));
            }
        }
        Ok(())
    }
}

fn check_space(op_dim: usize, psi: &QuantumState) -> Result<()> {
    if op_dim != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: op_dim,
            found: psi.dim(),
        });
    }
    Ok(())
}

fn finish(psi0: &QuantumState, amps: Vec<C64>, renormalize: bool) -> Result<QuantumState> {
    let out = psi0.with_amplitudes(amps)?;
    Ok(if renormalize { out.normalized() } else { out })
}

/// `exp(−iHt)|ψ₀⟩` for Hermitian `H`.
pub fn evolve_static(h: &SparseOperator, psi0: &QuantumState, t: f64, s: &EvolutionSettings) -> Result<QuantumState> {
    s.validate()?;
    h.check_hermitian()?;
    check_space(h.dim(), psi0)?;
    let (w, _) = expmv(h, t, psi0.amplitudes(), s.krylov_dim, s.step_tolerance)?;
    finish(psi0, w, s.renormalize)
}

/// `exp(−iH_C t)|ψ₀⟩` for a non-Hermitian `H_C`; the squared norm of the
/// result is the probability of no decay.
pub fn evolve_conditional(hc: &SparseOperator, psi0: &QuantumState, t: f64, s: &EvolutionSettings) -> Result<QuantumState> {
    s.validate()?;
    if s.renormalize {
        return Err(Error::InvalidArgument(
            "conditional evolution keeps the decaying norm; renormalize must be false".into(),
        ));
    }
    check_space(hc.dim(), psi0)?;
    let (w, _) = expmv(hc, t, psi0.amplitudes(), s.krylov_dim, s.step_tolerance)?;
    finish(psi0, w, false)
}

/// `(2π / max|ν|) / 20`, or `None` for a static operator.
pub fn default_step_limit(h: &TimeDependentOperator) -> Option<f64> {
    let nu = h.max_frequency();
    if nu == 0.0 {
        None
    } else {
        Some(2.0 * PI / nu / STEPS_PER_FASTEST_PERIOD)
    }
}

fn resolved_step(h: &TimeDependentOperator, s: &EvolutionSettings) -> Result<Option<f64>> {
    let Some(limit) = default_step_limit(h) else {
        return Ok(None);
    };
    match s.max_step {
        Some(m) if m > limit * (1.0 + 1e-12) => Err(Error::StepResolution {
            max_frequency: h.max_frequency(),
            max_step: m,
            limit,
        }),
        Some(m) => Ok(Some(m)),
        None => Ok(Some(limit)),
    }
}

/// Midpoint-frozen propagation over `[t0, t1]` in `n` equal steps.
fn midpoint_steps(
    h: &TimeDependentOperator,
    mut w: Vec<C64>,
    t0: f64,
    t1: f64,
    n: usize,
    krylov_dim: usize,
    tol: f64,
) -> Result<Vec<C64>> {
    let dt = (t1 - t0) / n as f64;
    for k in 0..n {
        let tm = t0 + (k as f64 + 0.5) * dt;
        w = expmv(&h.at(tm), dt, &w, krylov_dim, tol)?.0;
    }
    Ok(w)
}

fn step_count(span: f64, max_step: f64) -> usize {
    ((span.abs() / max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Propagates from `t = 0` to `t_final`.
pub fn evolve_time_dependent(
    h: &TimeDependentOperator,
    psi0: &QuantumState,
    t_final: f64,
    s: &EvolutionSettings,
) -> Result<QuantumState> {
    evolve_time_dependent_between(h, psi0, 0.0, t_final, s)
}

/// Propagates from `t0` to `t1` with `H` frozen at the midpoint of each
/// step.
pub fn evolve_time_dependent_between(
    h: &TimeDependentOperator,
    psi0: &QuantumState,
    t0: f64,
    t1: f64,
    s: &EvolutionSettings,
) -> Result<QuantumState> {
    s.validate()?;
    check_space(h.dim(), psi0)?;
    let w = match resolved_step(h, s)? {
        None => expmv(h.static_part(), t1 - t0, psi0.amplitudes(), s.krylov_dim, s.step_tolerance)?.0,
        Some(dt) => midpoint_steps(
            h,
            psi0.amplitudes().to_vec(),
            t0,
            t1,
            step_count(t1 - t0, dt),
            s.krylov_dim,
            s.step_tolerance,
        )?,
    };
    finish(psi0, w, s.renormalize)
}

/// Smallest period shared by all rotating terms, if their frequencies are
/// commensurate with small integer ratios.
pub fn common_period(h: &TimeDependentOperator) -> Option<f64> {
    let freqs: Vec<f64> = h.frequencies().iter().map(|f| f.abs()).collect();
    let fmin = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    if freqs.is_empty() || fmin == 0.0 {
        return None;
    }
    for q in 1..=64u32 {
        let ok = freqs.iter().all(|&f| {
            let r = f / fmin * q as f64;
            r <= 1e4 && (r - r.round()).abs() <= 1e-9 * r
        });
        if ok {
            return Some(2.0 * PI * q as f64 / fmin);
        }
    }
    None
}

/// Nearest unitary matrix (polar factor).
fn unitarize(u: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = u.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

/// One-period propagator of a periodic Hamiltonian, built from the same
/// midpoint steps as [`evolve_time_dependent_between`], with its binary
/// powers.
struct Floquet<'a> {
    h: &'a TimeDependentOperator,
    t0: f64,
    period: f64,
    max_step: f64,
    powers: Vec<DMatrix<C64>>,
    krylov_dim: usize,
    tol: f64,
}

impl<'a> Floquet<'a> {
    fn new(h: &'a TimeDependentOperator, t0: f64, period: f64, max_step: f64, max_periods: u64, s: &EvolutionSettings) -> Result<Self> {
        let n = h.dim();
        let steps = step_count(period, max_step);
        let tol = s.step_tolerance.min(FLOQUET_STEP_TOLERANCE);
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[c] = C64::new(1.0, 0.0);
                midpoint_steps(h, e, t0, t0 + period, steps, s.krylov_dim, tol)
            })
            .collect::<Result<_>>()?;
        let mut u = DMatrix::zeros(n, n);
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                u[(r, c)] = *v;
            }
        }
        let mut powers = vec![unitarize(&u)];
        let mut reach = 1u64;
        while reach * 2 <= max_periods {
            let last = powers.last().expect("non-empty");
            powers.push(last * last);
            reach *= 2;
        }
        Ok(Self {
            h,
            t0,
            period,
            max_step: period / steps as f64,
            powers,
            krylov_dim: s.krylov_dim,
            tol: s.step_tolerance,
        })
    }

    fn state_at(&self, psi0: &[C64], t: f64) -> Result<Vec<C64>> {
        let elapsed = t - self.t0;
        let mut periods = (elapsed / self.period).floor().max(0.0) as u64;
        let mut rest = elapsed - periods as f64 * self.period;
        if rest < 0.0 {
            rest = 0.0;
        }
        let mut v = DVector::from_column_slice(psi0);
        let mut bit = 0;
        while periods > 0 {
            if periods & 1 == 1 {
                let p = self.powers.get(bit).ok_or_else(|| {
                    Error::InvalidArgument("time beyond the prepared propagator range".into())
                })?;
                v = p * v;
            }
            periods >>= 1;
            bit += 1;
        }
        let w: Vec<C64> = v.iter().copied().collect();
        if rest <= 0.0 {
            return Ok(w);
        }
        midpoint_steps(
            self.h,
            w,
            self.t0,
            self.t0 + rest,
            step_count(rest, self.max_step),
            self.krylov_dim,
            self.tol,
        )
    }
}

/// States at each of `times` (ascending, all `≥ 0`), starting from `ψ₀` at
/// `t = 0`. Long runs of commensurate periodic Hamiltonians go through the
/// one-period propagator; the step grid is then aligned to the period.
pub fn evolve_on_grid(
    h: &TimeDependentOperator,
    psi0: &QuantumState,
    times: &[f64],
    s: &EvolutionSettings,
) -> Result<Vec<QuantumState>> {
    s.validate()?;
    check_space(h.dim(), psi0)?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be ascending and non-negative".into()));
    }
    let t_end = times.last().copied().unwrap_or(0.0);
    let step = resolved_step(h, s)?;
    if let (Some(dt), Some(period)) = (step, common_period(h)) {
        let periods = (t_end / period).floor() as u64;
        if h.dim() <= FLOQUET_MAX_DIM && periods > h.dim() as u64 {
            let fl = Floquet::new(h, 0.0, period, dt, periods.max(1), s)?;
            return times
                .par_iter()
                .map(|&t| finish(psi0, fl.state_at(psi0.amplitudes(), t)?, s.renormalize))
                .collect();
        }
    }
    let mut out = Vec::with_capacity(times.len());
    let mut current = psi0.clone();
    let mut t_prev = 0.0;
    for &t in times {
        if t > t_prev {
            current = evolve_time_dependent_between(h, &current, t_prev, t, s)?;
        }
        out.push(current.clone());
        t_prev = t;
    }
    Ok(out)
}

/// Control points of a sweep; coefficients are interpolated linearly in
/// `s = t / duration`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticSchedule {
    pub duration: f64,
    pub points: Vec<(f64, SpinModelParams)>,
}

impl AdiabaticSchedule {
    pub fn new(duration: f64, points: Vec<(f64, SpinModelParams)>) -> Result<Self> {
        let sched = Self { duration, points };
        sched.validate()?;
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidArgument("schedule duration must be positive".into()));
        }
        let pts = &self.points;
        if pts.len() < 2 || pts[0].0 != 0.0 || pts[pts.len() - 1].0 != 1.0 {
            return Err(Error::InvalidArgument(
                "schedule needs control points at s = 0 and s = 1".into(),
            ));
        }
        if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument("schedule points must be strictly increasing in s".into()));
        }
        let first = &pts[0].1;
        for (_, p) in pts {
            p.validate()?;
            if p.two_s != first.two_s || p.graph != first.graph {
                return Err(Error::InvalidArgument(
                    "all control points must share the spin and the graph".into(),
                ));
            }
        }
        Ok(())
    }

    /// Linearly interpolated parameters at `s ∈ [0, 1]`.
    pub fn params_at(&self, s: f64) -> SpinModelParams {
        let s = s.clamp(0.0, 1.0);
        let i = self.segment(s);
        let (s0, p0) = &self.points[i];
        let (s1, p1) = &self.points[i + 1];
        let w = (s - s0) / (s1 - s0);
        let mix = |a: f64, b: f64| (1.0 - w) * a + w * b;
        let n = p0.n_sites();
        let local_c = if p0.local_c.is_empty() && p1.local_c.is_empty() {
            Vec::new()
        } else {
            (0..n)
                .map(|j| mix(p0.local_c.get(j).copied().unwrap_or(0.0), p1.local_c.get(j).copied().unwrap_or(0.0)))
                .collect()
        };
        SpinModelParams {
            a: mix(p0.a, p1.a),
            b: mix(p0.b, p1.b),
            c: mix(p0.c, p1.c),
            d: mix(p0.d, p1.d),
            e: mix(p0.e, p1.e),
            two_s: p0.two_s,
            graph: p0.graph.clone(),
            local_c,
            inverted: if w < 1.0 { p0.inverted } else { p1.inverted },
        }
    }

    fn segment(&self, s: f64) -> usize {
        let last = self.points.len() - 2;
        (0..=last).find(|&i| s <= self.points[i + 1].0).unwrap_or(last)
    }
}

/// `w_a A + w_b B` without forming it.
struct Blend<'a> {
    a: &'a SparseOperator,
    b: &'a SparseOperator,
    wa: f64,
    wb: f64,
}

impl LinearMap for Blend<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for v in y.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        self.a.apply_add(C64::new(self.wa, 0.0), x, y);
        self.b.apply_add(C64::new(self.wb, 0.0), x, y);
    }

    fn is_hermitian(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct AdiabaticOutcome {
    pub state: QuantumState,
    /// Weight of the final state on the target level (lowest level, or
    /// highest if the final parameters are inverted), summed over that
    /// level's degenerate states.
    pub fidelity: f64,
    pub target_energy: f64,
    pub target_degeneracy: usize,
    /// `‖Hψ₀ − ⟨H⟩ψ₀‖` at `s = 0`.
    pub initial_residual: f64,
    pub steps: usize,
}

/// Residual below which `ψ₀` counts as an eigenstate of the initial
/// Hamiltonian.
pub const EIGENSTATE_RESIDUAL: f64 = 1e-8;

/// Weight of `psi` on the extreme level of `h` and that level's energy
/// and degeneracy.
pub fn extreme_level_weight(
    h: &SparseOperator,
    psi: &QuantumState,
    which: Which,
    eig: &EigenSettings,
) -> Result<(f64, f64, usize)> {
    let n = h.dim();
    let mut k = 2.min(n);
    loop {
        let slice = extremal_eigenpairs(h, k, which, eig)?;
        let idx = slice.extreme_index();
        let e = slice.eigenvalues[idx];
        let scale = slice
            .eigenvalues
            .iter()
            .map(|x| x.abs())
            .fold(1.0f64, f64::max);
        let tol = 1e-8 * scale;
        let members: Vec<usize> = (0..k).filter(|&i| (slice.eigenvalues[i] - e).abs() <= tol).collect();
        if members.len() < k || k == n {
            let norm2 = psi.norm_squared();
            let weight = members
                .iter()
                .map(|&i| dot(&slice.eigenvectors[i], psi.amplitudes()).norm_sqr())
                .sum::<f64>()
                / norm2;
            return Ok((weight.min(1.0), e, members.len()));
        }
        k = (k + 2).min(n);
    }
}

/// Sweeps the spin Hamiltonian along the schedule starting from an
/// eigenstate of its `s = 0` point.
pub fn adiabatic_prepare(
    schedule: &AdiabaticSchedule,
    psi0: &QuantumState,
    s: &EvolutionSettings,
    eig: &EigenSettings,
) -> Result<AdiabaticOutcome> {
    schedule.validate()?;
    s.validate()?;
    let hams = schedule
        .points
        .iter()
        .map(|(_, p)| build_spin_hamiltonian(p))
        .collect::<Result<Vec<_>>>()?;
    let h0 = &hams[0];
    check_space(h0.dim(), psi0)?;

    let mut scratch = vec![C64::new(0.0, 0.0); h0.dim()];
    h0.apply_into(psi0.amplitudes(), &mut scratch);
    let e0 = dot(psi0.amplitudes(), &scratch).re / psi0.norm_squared();
    let resid: Vec<C64> = scratch.iter().zip(psi0.amplitudes()).map(|(h, p)| h - p * e0).collect();
    let initial_residual = norm(&resid) / psi0.norm();
    if initial_residual > EIGENSTATE_RESIDUAL {
        return Err(Error::NotAnEigenstate(initial_residual));
    }

    let scale = hams.iter().map(|h| h.norm_inf()).fold(0.0, f64::max);
    let t = schedule.duration;
    let steps = match s.max_step {
        Some(m) => step_count(t, m),
        None => ((t * scale / 0.02).ceil() as usize).max(100),
    };
    let dt = t / steps as f64;
    let mut w = psi0.amplitudes().to_vec();
    for k in 0..steps {
        let sm = (k as f64 + 0.5) / steps as f64;
        let i = schedule.segment(sm);
        let (s0, s1) = (schedule.points[i].0, schedule.points[i + 1].0);
        let wb = (sm - s0) / (s1 - s0);
        let blend = Blend {
            a: &hams[i],
            b: &hams[i + 1],
            wa: 1.0 - wb,
            wb,
        };
        w = expmv(&blend, dt, &w, s.krylov_dim, s.step_tolerance)?.0;
    }
    let state = finish(psi0, w, s.renormalize)?;
    let final_params = &schedule.points[schedule.points.len() - 1].1;
    let which = if final_params.inverted { Which::Highest } else { Which::Lowest };
    let (fidelity, target_energy, target_degeneracy) =
        extreme_level_weight(&hams[hams.len() - 1], &state, which, eig)?;
    Ok(AdiabaticOutcome {
        state,
        fidelity,
        target_energy,
        target_degeneracy,
        initial_residual,
        steps,
    })
}
