use num_complex::Complex64;
use proptest::prelude::*;

use pseudospin::ermakov::{solve_ermakov_numeric, BreathingEnvelope};
use pseudospin::flow::{integrate_with, FlowOptions, FlowParams};
use pseudospin::quantum::{propagate, BandedHamiltonian, PropagationConfig};
use pseudospin::render::azimuthal_contrast;
use pseudospin::shell::{
    build_effective_hamiltonian, build_generators, casimir_residual, commutator_residual, expectations,
    seeded_state,
};
use pseudospin::stability::{floquet_exponent, FloquetMode};
use pseudospin::{PseudospinVector, ShellSpec, ShellState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn su2_relations_hold(two_j in 1u32..=200) {
        let spec = ShellSpec::new(two_j, 0.0).unwrap();
        let g = build_generators(&spec);
        // products of entries of size ~j reach j(j+1)/4, so round-off scales with the Casimir
        prop_assert!(commutator_residual(&g) < 1e-15 * (1.0 + spec.casimir()));
        prop_assert!(casimir_residual(&spec, &g) < 1e-10);
    }

    #[test]
    fn banded_hamiltonian_matches_operator_form(two_j in 1u32..=60, mu0 in 0.0f64..2.0) {
        let spec = ShellSpec::new(two_j, mu0).unwrap();
        let g = build_generators(&spec);
        let dense = g.l3.scale_re(2.0)
            .add(&g.l1.matmul(&g.l1).sub(&g.l2.matmul(&g.l2)).scale_re(mu0));
        let banded = build_effective_hamiltonian(&spec);
        prop_assert!(dense.sub(&banded).max_abs() < 1e-12 * (1.0 + spec.casimir()));
    }

    #[test]
    fn seeded_state_has_tilted_mean(two_j in 1u32..=300, delta in 0.0f64..3.1) {
        let spec = ShellSpec::new(two_j, 0.0).unwrap();
        let l = expectations(&seeded_state(&spec, delta).unwrap(), &spec).unwrap();
        prop_assert!(l.max_abs_diff(&PseudospinVector::seeded(delta)) < 1e-10);
    }

    #[test]
    fn pole_state_variances(two_j in 1u32..=200) {
        let spec = ShellSpec::new(two_j, 0.0).unwrap();
        let g = build_generators(&spec);
        let pole = ShellState::pole(&spec);
        let v1 = g.l1.matmul(&g.l1).sandwich(&pole.amplitudes, &pole.amplitudes).re;
        let v2 = g.l2.matmul(&g.l2).sandwich(&pole.amplitudes, &pole.amplitudes).re;
        prop_assert!((v1 - spec.j() / 2.0).abs() < 1e-12 * spec.j());
        prop_assert!((v2 - spec.j() / 2.0).abs() < 1e-12 * spec.j());
    }

    #[test]
    fn classical_flow_conserves_norm_and_energy(mu in 0.0f64..2.5, delta in 0.01f64..3.0) {
        let tol = 1e-10;
        let t = integrate_with(
            PseudospinVector::seeded(delta),
            &FlowParams::static_flow(mu),
            50.0,
            &FlowOptions::with_tol(tol).sample_step(None),
        ).unwrap();
        prop_assert!(t.diagnostics.max_norm_drift < 10.0 * tol);
        prop_assert!(t.diagnostics.max_energy_drift < 10.0 * tol);
    }

    #[test]
    fn envelope_amplitude_measure(b0 in 0.05f64..40.0) {
        let env = BreathingEnvelope::new(b0, 0.0).unwrap();
        let d = b0 - b0.recip();
        prop_assert!(((env.e_b - 2.0) - d * d).abs() <= 1e-12 * env.e_b);
    }

    #[test]
    fn envelope_extrema_and_period(b0 in 0.05f64..40.0, z in 0.0f64..50.0) {
        let env = BreathingEnvelope::new(b0, 0.0).unwrap();
        let (lo, hi) = ((b0 * b0).min(b0.powi(-2)), (b0 * b0).max(b0.powi(-2)));
        let grid: Vec<f64> = (0..=2000)
            .map(|k| env.b_squared(k as f64 * std::f64::consts::PI / 2000.0).unwrap())
            .collect();
        let min = grid.iter().copied().fold(f64::INFINITY, f64::min);
        let max = grid.iter().copied().fold(0.0, f64::max);
        prop_assert!((min - lo).abs() <= 1e-12 * hi);
        prop_assert!((max - hi).abs() <= 1e-12 * hi);
        let a = env.b_squared(z).unwrap();
        let b = env.b_squared(z + std::f64::consts::PI).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * hi.max(1.0));
    }

    #[test]
    fn b4_harmonics_reconstruct(b0 in 0.05f64..40.0, z in 0.0f64..10.0) {
        let env = BreathingEnvelope::new(b0, 0.0).unwrap();
        let scale = env.b_max().powi(4);
        prop_assert!((env.b4(z) - env.b4_from_harmonics(z)).abs() <= 1e-14 * scale);
    }

    #[test]
    fn ermakov_first_integral(b0 in 0.2f64..5.0, b0p in -2.0f64..2.0) {
        let tol = 1e-10;
        let sol = solve_ermakov_numeric(b0, b0p, 30.0, tol).unwrap();
        let e = b0p * b0p + b0 * b0 + b0.powi(-2);
        prop_assert!(sol.max_invariant_drift < 10.0 * tol * e);
    }

    #[test]
    fn monodromy_is_area_preserving(mu in 0.0f64..1.5, b0 in 0.5f64..2.0) {
        let env = BreathingEnvelope::new(b0, 0.0).unwrap();
        for mode in [FloquetMode::LinearizedHill, FloquetMode::ExactTangent] {
            let f = floquet_exponent(mu, &env, mode).unwrap();
            let scale = f.monodromy_trace.abs().max(1.0).powi(2);
            prop_assert!((f.monodromy_det - 1.0).abs() < 1e-8 * scale);
            prop_assert_eq!(f.unstable(), f.monodromy_trace.abs() > 2.0);
        }
    }

    #[test]
    fn weak_drive_matches_analytic_rate(mu in 0.002f64..0.05, b0 in 1.03f64..1.3) {
        let env = BreathingEnvelope::new(b0, 0.0).unwrap();
        prop_assume!(mu * (env.e_b * env.e_b - 4.0) <= 0.1);
        let f = floquet_exponent(mu, &env, FloquetMode::LinearizedHill).unwrap();
        prop_assert!((f.sigma_numeric / f.sigma_analytic - 1.0).abs() <= 0.1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quantum_run_is_unitary_and_conservative(
        two_j in 1u32..=40,
        mu0 in 0.0f64..0.2,
        delta in 0.0f64..3.0,
    ) {
        let tol = 1e-9;
        let spec = ShellSpec::new(two_j, mu0).unwrap();
        let cfg = PropagationConfig::new(spec, 2.0, 0.05, tol);
        let t = propagate(&seeded_state(&spec, delta).unwrap(), &cfg).unwrap();
        prop_assert!(t.diagnostics.max_norm_drift < 10.0 * tol);
        prop_assert!(t.diagnostics.max_energy_drift < 10.0 * tol);
        prop_assert!(t.diagnostics.max_casimir_drift < 1e-12);
    }

    #[test]
    fn long_classical_runs_stay_on_the_sphere(mu in 0.0f64..2.0, delta in 0.01f64..3.0) {
        let tol = 1e-10;
        let t = integrate_with(
            PseudospinVector::seeded(delta),
            &FlowParams::static_flow(mu),
            500.0,
            &FlowOptions::with_tol(tol).sample_step(None),
        ).unwrap();
        prop_assert!(t.diagnostics.max_norm_drift < 10.0 * tol);
        prop_assert!(t.diagnostics.max_energy_drift < 10.0 * tol);
    }

    #[test]
    fn quantum_breathing_keeps_parity_sectors(two_j in 2u32..=30, delta in 0.1f64..2.0) {
        let spec = ShellSpec::with_control(two_j, 1.2).unwrap();
        let env = BreathingEnvelope::new(1.5, 0.0).unwrap();
        let psi0 = seeded_state(&spec, delta).unwrap();
        let cfg = PropagationConfig::new(spec, 3.0, 0.5, 1e-10).with_envelope(Some(env));
        let t = propagate(&psi0, &cfg).unwrap();
        let even = |v: &[Complex64]| v.iter().step_by(2).map(|c| c.norm_sqr()).sum::<f64>();
        let end = t.final_state.unwrap();
        prop_assert!((even(&end.amplitudes) - even(&psi0.amplitudes)).abs() < 1e-10);
    }

    #[test]
    fn basis_states_are_azimuthally_uniform(two_j in 1u32..=20, k in 0usize..=20) {
        let spec = ShellSpec::new(two_j, 0.0).unwrap();
        let k = k.min(spec.dim() - 1);
        let c = azimuthal_contrast(&ShellState::basis(&spec, k), &spec);
        prop_assert!((c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn superpositions_break_uniformity(two_j in 2u32..=20) {
        let spec = ShellSpec::new(two_j, 0.0).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); spec.dim()];
        amps[0] = Complex64::new(1.0, 0.0);
        amps[1] = Complex64::new(0.3, 0.0);
        let s = ShellState::new(amps).normalized();
        prop_assert!(azimuthal_contrast(&s, &spec) > 1.0 + 1e-3);
    }
}

#[test]
fn banded_apply_is_hermitian() {
    let spec = ShellSpec::new(17, 0.7).unwrap();
    let h = BandedHamiltonian::new(&spec);
    let u: Vec<Complex64> = (0..spec.dim()).map(|k| Complex64::new((k as f64).sin(), 0.3 * k as f64)).collect();
    let v: Vec<Complex64> = (0..spec.dim()).map(|k| Complex64::new(1.0 / (1.0 + k as f64), (k as f64).cos())).collect();
    let mut hu = vec![Complex64::new(0.0, 0.0); spec.dim()];
    let mut hv = hu.clone();
    h.apply(0.7, &u, &mut hu);
    h.apply(0.7, &v, &mut hv);
    let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>();
    assert!((dot(&u, &hv) - dot(&hu, &v)).norm() < 1e-12);
}
