use std::f64::consts::PI;

use proptest::prelude::*;

use cavspin::analysis::dense_spectrum;
use cavspin::dynamics::{evolve_conditional, EvolutionSettings};
use cavspin::effective::{
    build_spin_hamiltonian, couplings_to_spin_params, couplings_to_spin_params_full, couplings_to_spin_params_simple,
    derive_couplings, SpinModelParams,
};
use cavspin::full_model::{
    build_conditional_hamiltonian, build_full_hamiltonian, build_intermediate_hamiltonian, GroundProjectors,
};
use cavspin::regime::{check_conditions, RegimeThresholds};
use cavspin::{CavityGraph, PhysicalParams, QuantumState, C64};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

prop_compose! {
    /// Parameters with matched Stark shifts and no extra fields.
    fn physical()(
        m in 1usize..=3,
        lambda in 5.0f64..80.0,
        d1 in 300.0f64..9000.0,
        d2 in 300.0f64..9000.0,
        a1 in 0.05f64..3.0, p1 in 0.0f64..(2.0 * PI),
        a2 in 0.05f64..3.0, p2 in 0.0f64..(2.0 * PI),
        omega_frac in 0.05f64..0.45,
        j in 0.05f64..3.0,
        gamma in 0.0f64..0.5,
    ) -> PhysicalParams {
        PhysicalParams {
            g1: (lambda * d1 / m as f64).sqrt(),
            g2: (lambda * d2 / m as f64).sqrt(),
            delta1: d1,
            delta2: d2,
            omega1: C64::from_polar(a1, p1),
            omega2: C64::from_polar(a2, p2),
            omega3: C64::new(0.0, 0.0),
            omega4: C64::new(0.0, 0.0),
            omega: omega_frac * lambda,
            delta: 0.0,
            mu_z: C64::new(0.0, 0.0),
            j,
            gamma,
            atoms_per_cavity: m,
        }
    }
}

fn coeffs(sp: &SpinModelParams) -> [f64; 5] {
    [sp.a, sp.b, sp.c, sp.d, sp.e]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn overlap_agreement(mut p in physical()) {
        let lambda = p.atoms_per_cavity as f64 * p.g1 * p.g1 / p.delta1;
        p.omega = lambda / 3.0;
        let graph = CavityGraph::chain(2, false).unwrap();
        let d = derive_couplings(&p).unwrap();
        let s = couplings_to_spin_params_simple(&d, p.atoms_per_cavity, &graph).unwrap();
        let f = couplings_to_spin_params_full(&d, p.atoms_per_cavity, &graph).unwrap();
        for (a, b) in coeffs(&s).iter().zip(coeffs(&f)) {
            prop_assert!(rel(*a, b) <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn common_phase_of_drives_is_irrelevant(p in physical(), phi in 0.0f64..(2.0 * PI)) {
        let graph = CavityGraph::chain(3, false).unwrap();
        let base = couplings_to_spin_params(&derive_couplings(&p).unwrap(), p.atoms_per_cavity, &graph).unwrap();
        let rot = C64::from_polar(1.0, phi);
        let q = PhysicalParams { omega1: p.omega1 * rot, omega2: p.omega2 * rot, ..p.clone() };
        let turned = couplings_to_spin_params(&derive_couplings(&q).unwrap(), q.atoms_per_cavity, &graph).unwrap();
        for (a, b) in coeffs(&base).iter().zip(coeffs(&turned)) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn mapped_hamiltonian_is_hermitian_and_real_coefficients(p in physical()) {
        let graph = CavityGraph::chain(3, true).unwrap();
        let sp = couplings_to_spin_params(&derive_couplings(&p).unwrap(), p.atoms_per_cavity, &graph).unwrap();
        prop_assert!(coeffs(&sp).iter().all(|x| x.is_finite()));
        let h = build_spin_hamiltonian(&sp).unwrap();
        prop_assert!(h.is_hermitian());
        prop_assert!(h.hermiticity_defect() <= 1e-15);
    }

    #[test]
    fn spin_half_single_ion_terms_are_constant(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0, d in -1.0f64..1.0, e in -1.0f64..1.0,
    ) {
        let graph = CavityGraph::chain(3, false).unwrap();
        let plain = SpinModelParams::new(0.0, 0.0, c, d, e, 1, graph.clone());
        let shifted = SpinModelParams::new(a, b, c, d, e, 1, graph);
        let (e0, _) = dense_spectrum(&build_spin_hamiltonian(&plain).unwrap()).unwrap();
        let (e1, _) = dense_spectrum(&build_spin_hamiltonian(&shifted).unwrap()).unwrap();
        let shift = 3.0 * (0.75 * a + 0.25 * b);
        for (x, y) in e0.iter().zip(&e1) {
            prop_assert!((y - x - shift).abs() <= 1e-12);
        }
    }

    #[test]
    fn stronger_thresholds_never_clear_a_flag(
        p in physical(),
        much in 2.0f64..20.0, sim in 1.5f64..5.0, tol in 1e-6f64..1e-2, margin in 1.0f64..50.0,
        f in 1.0f64..3.0,
    ) {
        let weak = RegimeThresholds { r_much: much, r_sim: sim, cond1_tolerance: tol, budget_margin: margin };
        let strong = RegimeThresholds { r_much: much * f, r_sim: (sim / f).max(1.0), cond1_tolerance: tol / f, budget_margin: margin * f };
        let rw = check_conditions(&p, &weak, 2);
        let rs = check_conditions(&p, &strong, 2);
        for (w, s) in rw.ratios.iter().zip(&rs.ratios) {
            prop_assert_eq!(&w.name, &s.name);
            prop_assert!(w.ok || !s.ok, "{} cleared by stronger thresholds", w.name);
        }
        prop_assert!(rw.all_ok() || !rs.all_ok());
    }

    #[test]
    fn regime_flags_are_scale_invariant(p in physical(), k in 0.01f64..100.0) {
        let th = RegimeThresholds::default();
        let a = check_conditions(&p, &th, 3);
        let b = check_conditions(&p.scaled(k), &th, 3);
        prop_assert_eq!(
            (a.condition1_ok, a.condition2_ok, a.condition3_ok, a.budget_ok),
            (b.condition1_ok, b.condition2_ok, b.condition3_ok, b.budget_ok)
        );
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            prop_assert_eq!(x.ok, y.ok, "{}", x.name);
        }
    }

    #[test]
    fn time_dependent_models_are_hermitian(p in physical(), t in 0.0f64..50.0) {
        let graph = CavityGraph::chain(2, false).unwrap();
        let p = PhysicalParams { atoms_per_cavity: 1, ..p };
        let full = build_full_hamiltonian(&p, &graph, 1).unwrap();
        let h = full.hamiltonian.evaluate(t).unwrap();
        prop_assert!(h.hermiticity_defect() <= 1e-12 * h.norm_inf().max(1.0));
        if let Ok(inter) = build_intermediate_hamiltonian(&p, &graph, 2) {
            let h = inter.hamiltonian.evaluate(t).unwrap();
            prop_assert!(h.hermiticity_defect() <= 1e-12 * h.norm_inf().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(16) })]

    #[test]
    fn conditional_norm_law(
        seed in 0u64..1000,
        gamma in 0.0f64..0.5,
        t in 0.0f64..4.0,
        c in -1.0f64..1.0, d in -1.0f64..1.0, e in -1.0f64..1.0,
    ) {
        let (n, two_s) = (2, 2);
        let sp = SpinModelParams::new(0.3, -0.1, c, d, e, two_s, CavityGraph::chain(n, false).unwrap());
        let h = build_spin_hamiltonian(&sp).unwrap();
        let proj = GroundProjectors::from_spin_sites(n, two_s).unwrap();
        let hc = build_conditional_hamiltonian(&h, &proj, gamma, gamma).unwrap();
        let psi = QuantumState::random(sp.space().unwrap(), seed);
        let out = evolve_conditional(&hc, &psi, t, &EvolutionSettings::default()).unwrap();
        let expected = (-((n * two_s) as f64) * gamma * t).exp();
        prop_assert!(rel(out.norm_squared(), expected) <= 1e-8);
    }
}
