//! Maps from laser/cavity constants to the five spin-model coefficients,
//! and the spin-S Heisenberg Hamiltonian they define.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CavityGraph;
use crate::hilbert::HilbertSpace;
use crate::params::PhysicalParams;
use crate::sparse::{SparseOperator, C64};
use crate::state::QuantumState;
use crate::td::FREQUENCY_MERGE_TOLERANCE;

/// Relative tolerance for the special detuning case of the extended map.
pub const SPECIAL_CASE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedCouplings {
    pub lambda: f64,
    pub omega: f64,
    pub mu1: C64,
    pub mu2: C64,
    pub mu3: C64,
    pub mu4: C64,
    pub mu12_plus: C64,
    pub mu12_minus: C64,
    pub mu34_plus: C64,
    pub mu34_minus: C64,
    pub mu_z: C64,
    pub j: f64,
    pub lambda_minus_delta: f64,
    pub extended: bool,
}

fn c_is_zero(z: C64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

/// Fails on the first pair of labelled frequencies that coincide.
fn check_distinct(freqs: &[(&str, f64)]) -> Result<()> {
    for (i, (na, fa)) in freqs.iter().enumerate() {
        for (nb, fb) in &freqs[i + 1..] {
            if (fa - fb).abs() < FREQUENCY_MERGE_TOLERANCE {
                return Err(Error::FrequencyCollision {
                    first: (*na).to_string(),
                    second: (*nb).to_string(),
                    value: *fa,
                });
            }
        }
    }
    Ok(())
}

pub fn derive_couplings(p: &PhysicalParams) -> Result<DerivedCouplings> {
    p.validate()?;
    let m = p.atoms_per_cavity as f64;
    let lambda = m * p.g1 * p.g1 / p.delta1;
    let mu1 = p.omega1.conj() * (p.g1 / p.delta1);
    let mu2 = p.omega2.conj() * (p.g2 / p.delta2);
    let extended = p.extended_active();
    let (mu3, mu4) = if extended {
        if p.delta1 + p.delta == 0.0 || p.delta2 + p.delta == 0.0 {
            return Err(Error::InvalidArgument(
                "delta_j + delta must be nonzero for the extra fields".into(),
            ));
        }
        (
            p.omega3.conj() * (p.g1 / 2.0 * (1.0 / p.delta1 + 1.0 / (p.delta1 + p.delta))),
            p.omega4.conj() * (p.g2 / 2.0 * (1.0 / p.delta2 + 1.0 / (p.delta2 + p.delta))),
        )
    } else {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    };
    let w = p.omega;
    let lmd = lambda - p.delta;
    if extended {
        check_distinct(&[
            ("0", 0.0),
            ("omega", w),
            ("-omega", -w),
            ("lambda", lambda),
            ("lambda+omega", lambda + w),
            ("lambda-omega", lambda - w),
            ("lambda-delta", lmd),
            ("lambda-delta+omega", lmd + w),
            ("lambda-delta-omega", lmd - w),
        ])?;
    } else {
        check_distinct(&[
            ("0", 0.0),
            ("lambda", lambda),
            ("lambda+omega", lambda + w),
            ("lambda-omega", lambda - w),
        ])?;
    }
    Ok(DerivedCouplings {
        lambda,
        omega: w,
        mu1,
        mu2,
        mu3,
        mu4,
        mu12_plus: mu1 + mu2,
        mu12_minus: mu1 - mu2,
        mu34_plus: mu3 + mu4,
        mu34_minus: mu3 - mu4,
        mu_z: p.mu_z,
        j: p.j,
        lambda_minus_delta: lmd,
        extended,
    })
}

/// Coefficients of `Σ_j [A S_j² + B (S_j^z)² + C_j S_j^z] − Σ_⟨jk⟩ [D (S^x S^x + S^y S^y) + E S^z S^z]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinModelParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub two_s: usize,
    pub graph: CavityGraph,
    /// Extra site-dependent field added to `c`; empty means none.
    #[serde(default)]
    pub local_c: Vec<f64>,
    /// Set when the coefficients are −1 times an antiferromagnetic target,
    /// so that the target's ground state is the highest state here.
    #[serde(default)]
    pub inverted: bool,
}

impl SpinModelParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, two_s: usize, graph: CavityGraph) -> Self {
        Self {
            a,
            b,
            c,
            d,
            e,
            two_s,
            graph,
            local_c: Vec::new(),
            inverted: false,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.graph.n_cavities()
    }

    pub fn spin(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    /// Field on `S_j^z` including the site-dependent part.
    pub fn field(&self, site: usize) -> f64 {
        self.c + self.local_c.get(site).copied().unwrap_or(0.0)
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::uniform(self.two_s + 1, self.n_sites())
    }

    pub fn validate(&self) -> Result<()> {
        if self.two_s == 0 {
            return Err(Error::InvalidArgument("two_s must be >= 1".into()));
        }
        let all = [self.a, self.b, self.c, self.d, self.e];
        if !all.iter().chain(self.local_c.iter()).all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite spin-model coefficient".into()));
        }
        if !self.local_c.is_empty() && self.local_c.len() != self.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites(),
                found: self.local_c.len(),
            });
        }
        Ok(())
    }
}

fn reject_extended(c: &DerivedCouplings) -> Result<()> {
    if !c_is_zero(c.mu34_plus) || !c_is_zero(c.mu34_minus) || !c_is_zero(c.mu_z) {
        return Err(Error::InvalidArgument(
            "extended couplings are nonzero; use the extended coefficient map".into(),
        ));
    }
    Ok(())
}

pub fn couplings_to_spin_params_simple(
    c: &DerivedCouplings,
    m: usize,
    graph: &CavityGraph,
) -> Result<SpinModelParams> {
    reject_extended(c)?;
    if m == 0 {
        return Err(Error::InvalidArgument("atoms_per_cavity must be >= 1".into()));
    }
    let (l, w) = (c.lambda, c.omega);
    let mm = c.mu12_minus.norm_sqr();
    let mp = c.mu12_plus.norm_sqr();
    let denom = l * l - w * w;
    let a = l / denom * mm / 2.0;
    let b = mp / l - a;
    let cc = -w / denom * mm / 2.0;
    let d = c.j / 2.0 * (mm / ((l + w) * (l + w)) + mm / ((l - w) * (l - w)));
    let e = 2.0 * c.j * mp / (l * l);
    Ok(SpinModelParams::new(a, b, cc, d, e, m, graph.clone()))
}

/// Extended map, valid only for `λ = 3ω` and (when `μ₃₄` is switched on)
/// `λ − δ = −6ω`.
pub fn couplings_to_spin_params_full(
    c: &DerivedCouplings,
    m: usize,
    graph: &CavityGraph,
) -> Result<SpinModelParams> {
    if m == 0 {
        return Err(Error::InvalidArgument("atoms_per_cavity must be >= 1".into()));
    }
    let (l, w) = (c.lambda, c.omega);
    let scale = l.abs().max(w.abs());
    if !(w > 0.0) || (l - 3.0 * w).abs() > SPECIAL_CASE_TOLERANCE * scale {
        return Err(Error::UnsupportedDetuning(format!(
            "extended coefficients are only available for omega > 0 and lambda = 3 omega \
             (lambda = {l}, omega = {w})"
        )));
    }
    let m34_active = !c_is_zero(c.mu34_plus) || !c_is_zero(c.mu34_minus);
    if m34_active
        && (c.lambda_minus_delta + 6.0 * w).abs() > SPECIAL_CASE_TOLERANCE * scale
    {
        return Err(Error::UnsupportedDetuning(format!(
            "extended coefficients need lambda - delta = -6 omega (got {})",
            c.lambda_minus_delta
        )));
    }
    let m12m = c.mu12_minus.norm_sqr();
    let m12p = c.mu12_plus.norm_sqr();
    let m34m = c.mu34_minus.norm_sqr();
    let m34p = c.mu34_plus.norm_sqr();
    let mz = c.mu_z.norm_sqr();
    let a = (9.0 / 16.0 * m12m - 9.0 / 35.0 * m34m) / l;
    let b = (m12p - 9.0 / 16.0 * m12m - 0.5 * m34p + 9.0 / 35.0 * m34m) / l;
    let cc = (1.5 * mz - 3.0 / 16.0 * m12m - 3.0 / 70.0 * m34m) / l;
    let d = c.j / (l * l) * (45.0 / 32.0 * m12m + 333.0 / 1225.0 * m34m);
    let e = c.j / (l * l) * (2.0 * m12p + 0.5 * m34p);
    Ok(SpinModelParams::new(a, b, cc, d, e, m, graph.clone()))
}

/// Picks the extended map when any extended coupling is on.
pub fn couplings_to_spin_params(
    c: &DerivedCouplings,
    m: usize,
    graph: &CavityGraph,
) -> Result<SpinModelParams> {
    if c.extended {
        couplings_to_spin_params_full(c, m, graph)
    } else {
        couplings_to_spin_params_simple(c, m, graph)
    }
}

/// `√(s(s+1) − m(m+1))` for the raising step out of `m`.
fn ladder(s: f64, m: f64) -> f64 {
    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

pub fn build_spin_hamiltonian(sp: &SpinModelParams) -> Result<SparseOperator> {
    sp.validate()?;
    let space = sp.space()?;
    let s = sp.spin();
    let n = sp.n_sites();
    let d = sp.two_s + 1;
    let edges = sp.graph.edges();
    let base = sp.a * s * (s + 1.0) * n as f64;
    let fields: Vec<f64> = (0..n).map(|j| sp.field(j)).collect();
    let mut trip = Vec::new();
    let mut digits = vec![0usize; n];
    for idx in 0..space.total_dim() {
        // digit k ↔ m = s − k
        let mut rem = idx;
        for site in (0..n).rev() {
            digits[site] = rem % d;
            rem /= d;
        }
        let mval = |k: usize| s - k as f64;
        let mut diag = base;
        for (site, &k) in digits.iter().enumerate() {
            let m = mval(k);
            diag += sp.b * m * m + fields[site] * m;
        }
        for &(j, k) in edges {
            diag -= sp.e * mval(digits[j]) * mval(digits[k]);
        }
        trip.push((idx, idx, C64::new(diag, 0.0)));
        if sp.d == 0.0 {
            continue;
        }
        // −(D/2)(S+_j S-_k + S-_j S+_k); emit the S+_j S-_k and S-_j S+_k
        // images of this column.
        for &(j, k) in edges {
            for (up, down) in [(j, k), (k, j)] {
                let (ku, kd) = (digits[up], digits[down]);
                if ku == 0 || kd + 1 == d {
                    continue;
                }
                let amp = ladder(s, mval(ku)) * ladder(s, mval(kd) - 1.0);
                let stride_up = d.pow((n - 1 - up) as u32);
                let stride_down = d.pow((n - 1 - down) as u32);
                let row = idx - stride_up + stride_down;
                trip.push((row, idx, C64::new(-0.5 * sp.d * amp, 0.0)));
            }
        }
    }
    SparseOperator::from_triplets(space, trip, true)
}

/// Coefficients whose Hamiltonian is −1 times the one built from `sp`.
/// Applying it twice gives back `sp`.
pub fn afm_equivalent_params(sp: &SpinModelParams) -> SpinModelParams {
    SpinModelParams {
        a: -sp.a,
        b: -sp.b,
        c: -sp.c,
        d: -sp.d,
        e: -sp.e,
        two_s: sp.two_s,
        graph: sp.graph.clone(),
        local_c: sp.local_c.iter().map(|x| -x).collect(),
        inverted: !sp.inverted,
    }
}

/// `⟨O⟩` in `e^{−NMγ′t} |ψ⟩⟨ψ| + (1 − e^{−NMγ′t}) I/dim`.
pub fn depolarized_expectation(
    obs: &SparseOperator,
    psi: &QuantumState,
    t: f64,
    n_cavities: usize,
    atoms_per_cavity: usize,
    gamma_prime: f64,
) -> Result<f64> {
    if gamma_prime < 0.0 || t < 0.0 {
        return Err(Error::InvalidArgument("gamma_prime and t must be >= 0".into()));
    }
    obs.check_hermitian()?;
    let w = (-((n_cavities * atoms_per_cavity) as f64) * gamma_prime * t).exp();
    let coherent = obs.expectation(psi)?.re / psi.norm_squared();
    let mixed = obs.trace().re / obs.dim() as f64;
    Ok(w * coherent + (1.0 - w) * mixed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams {
            g1: 1.0,
            g2: 1.0,
            delta1: 100.0,
            delta2: 100.0,
            omega1: C64::new(0.1, 0.0),
            omega2: C64::new(0.1, 0.0),
            omega3: C64::new(0.0, 0.0),
            omega4: C64::new(0.0, 0.0),
            omega: 0.003,
            delta: 0.0,
            mu_z: C64::new(0.0, 0.0),
            j: 1.0,
            gamma: 0.0,
            atoms_per_cavity: 1,
        }
    }

    fn couplings(lambda: f64, omega: f64, mm: f64, mp: f64, j: f64) -> DerivedCouplings {
        let z = C64::new(0.0, 0.0);
        DerivedCouplings {
            lambda,
            omega,
            mu1: z,
            mu2: z,
            mu3: z,
            mu4: z,
            mu12_plus: C64::new(mp, 0.0),
            mu12_minus: C64::new(mm, 0.0),
            mu34_plus: z,
            mu34_minus: z,
            mu_z: z,
            j,
            lambda_minus_delta: lambda,
            extended: false,
        }
    }

    #[test]
    fn lambda_and_symmetric_mu() {
        let mut p = params();
        p.atoms_per_cavity = 2;
        p.delta1 = 200.0;
        p.delta2 = 200.0;
        let c = derive_couplings(&p).unwrap();
        assert!((c.lambda - 0.01).abs() < 1e-15);
        assert_eq!(c.mu12_minus, C64::new(0.0, 0.0));
    }

    #[test]
    fn mu3_spot_value() {
        let mut p = params();
        p.omega3 = C64::new(0.2, 0.0);
        p.delta = 50.0;
        p.omega = 0.003;
        let c = derive_couplings(&p).unwrap();
        assert!((c.mu3.re - 0.1 * (1.0 / 100.0 + 1.0 / 150.0)).abs() < 1e-15);
        assert!((c.mu3.re - 0.001667).abs() < 5e-7);
    }

    #[test]
    fn conjugation_of_omega() {
        let mut p = params();
        p.omega1 = C64::new(0.0, 0.1);
        let c = derive_couplings(&p).unwrap();
        assert!((c.mu1 - C64::new(0.0, -1e-3)).norm() < 1e-15);
    }

    #[test]
    fn collisions_are_named() {
        let mut p = params();
        p.omega = 0.01; // λ = ω
        match derive_couplings(&p) {
            Err(Error::FrequencyCollision { first, second, .. }) => {
                assert_eq!((first.as_str(), second.as_str()), ("0", "lambda-omega"));
            }
            other => panic!("expected a collision, got {other:?}"),
        }
    }

    #[test]
    fn simple_map_limits() {
        let g = CavityGraph::chain(2, false).unwrap();
        let sp = couplings_to_spin_params_simple(&couplings(3.0, 1.0, 0.0, 0.2, 0.01), 1, &g).unwrap();
        assert_eq!((sp.a, sp.c, sp.d), (0.0, 0.0, 0.0));
        let sp = couplings_to_spin_params_simple(&couplings(3.0, 1.0, 0.1, 0.0, 0.01), 1, &g).unwrap();
        assert_eq!(sp.e, 0.0);
        assert_eq!(sp.b, -sp.a);
    }

    #[test]
    fn full_map_spot_values() {
        let g = CavityGraph::chain(2, false).unwrap();
        let c = couplings(3.0, 1.0, 0.1, 0.0, 0.01);
        let sp = couplings_to_spin_params_full(&c, 1, &g).unwrap();
        assert!((sp.d - 5.0 * 0.01 * 0.01 / 32.0).abs() < 1e-18);
        let mut c = couplings(3.0, 1.0, 0.0, 0.0, 0.01);
        c.mu_z = C64::new(0.2, 0.0);
        c.extended = true;
        let sp = couplings_to_spin_params_full(&c, 1, &g).unwrap();
        assert!((sp.c - 0.02).abs() < 1e-15);
        assert_eq!((sp.a, sp.b, sp.d, sp.e), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn full_map_rejects_other_detunings() {
        let g = CavityGraph::chain(2, false).unwrap();
        let c = couplings(2.0, 1.0, 0.1, 0.0, 0.01);
        assert!(matches!(
            couplings_to_spin_params_full(&c, 1, &g),
            Err(Error::UnsupportedDetuning(_))
        ));
        let mut c = couplings(3.0, 1.0, 0.1, 0.0, 0.01);
        c.mu34_minus = C64::new(0.1, 0.0);
        c.lambda_minus_delta = -5.0;
        assert!(couplings_to_spin_params_full(&c, 1, &g).is_err());
    }

    #[test]
    fn simple_map_rejects_extended() {
        let g = CavityGraph::chain(2, false).unwrap();
        let mut c = couplings(3.0, 1.0, 0.1, 0.0, 0.01);
        c.mu_z = C64::new(0.1, 0.0);
        assert!(couplings_to_spin_params_simple(&c, 1, &g).is_err());
    }

    #[test]
    fn afm_map_is_an_involution() {
        let mut sp = SpinModelParams::new(0.1, -0.2, 0.3, 1.0, 2.0, 2, CavityGraph::chain(3, false).unwrap());
        sp.local_c = vec![0.5, -0.5, 0.0];
        assert_eq!(afm_equivalent_params(&afm_equivalent_params(&sp)), sp);
        let h = build_spin_hamiltonian(&sp).unwrap();
        let hi = build_spin_hamiltonian(&afm_equivalent_params(&sp)).unwrap();
        assert!(h.add(&hi).unwrap().norm_inf() < 1e-14);
    }

    #[test]
    fn depolarized_limits() {
        let space = HilbertSpace::uniform(2, 2).unwrap();
        let obs = SparseOperator::diagonal(space.clone(), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let psi = QuantumState::basis(space, 0).unwrap();
        assert!((depolarized_expectation(&obs, &psi, 0.0, 2, 1, 0.3).unwrap() - 1.0).abs() < 1e-15);
        assert!((depolarized_expectation(&obs, &psi, 1e6, 2, 1, 0.3).unwrap() - 0.25).abs() < 1e-15);
    }
}
