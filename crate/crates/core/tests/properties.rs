//! Randomized invariants of the pulse algebra and the dynamics.

use proptest::prelude::*;

use pulseopt_core::dynamics::{propagate, IntegratorConfig};
use pulseopt_core::model::{ground_state, make_grid, TwoLevelSystem};
use pulseopt_core::pulses::{pulse_area, pulse_energy, sample, Envelope};

fn smooth_values(n: usize, coeffs: &[(f64, f64)]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            coeffs
                .iter()
                .enumerate()
                .map(|(m, (a, ph))| a * f64::sin(std::f64::consts::PI * (m + 1) as f64 * x + ph))
                .sum()
        })
        .collect()
}

fn coeff_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, 0.0..6.3f64), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Cauchy-Schwarz: |total area| <= mu sqrt(E T), with equality reserved
    /// for constant envelopes. Both sides use the same quadrature weights, so
    /// the discrete inequality is exact up to roundoff.
    #[test]
    fn area_bounded_by_energy(coeffs in coeff_strategy(), span in 0.5..20.0f64) {
        let sys = TwoLevelSystem::lossless(1.0, 1.0).unwrap();
        let grid = make_grid(0.0, span, 129).unwrap();
        let env = Envelope::Sampled { grid, values: smooth_values(129, &coeffs) };
        let area = pulse_area(&env, &sys, &grid).unwrap().total();
        let energy = pulse_energy(&env, &grid).unwrap();
        let bound = sys.mu * f64::sqrt(energy * span);
        prop_assert!(area.abs() <= bound * (1.0 + 1e-12) + 1e-12);
    }

    /// The area functional is linear in the envelope.
    #[test]
    fn area_is_linear(coeffs in coeff_strategy(), scale in -3.0..3.0f64) {
        let sys = TwoLevelSystem::lossless(1.0, 1.0).unwrap();
        let grid = make_grid(-1.0, 1.0, 65).unwrap();
        let values = smooth_values(65, &coeffs);
        let scaled: Vec<f64> = values.iter().map(|v| scale * v).collect();
        let a = pulse_area(&Envelope::Sampled { grid, values }, &sys, &grid)
            .unwrap()
            .total();
        let b = pulse_area(&Envelope::Sampled { grid, values: scaled }, &sys, &grid)
            .unwrap()
            .total();
        prop_assert!((b - scale * a).abs() <= 1e-12 * a.abs().max(1.0));
    }

    /// Resampling a sampled envelope onto its own grid is the identity.
    #[test]
    fn resampling_is_idempotent(coeffs in coeff_strategy()) {
        let grid = make_grid(-2.0, 2.0, 97).unwrap();
        let env = Envelope::Sampled { grid, values: smooth_values(97, &coeffs) };
        prop_assert_eq!(sample(&env, &grid), env);
    }

    /// rho11 + rho22 stays at 1 along any trajectory.
    #[test]
    fn trace_is_preserved(
        coeffs in coeff_strategy(),
        g1 in 0.0..0.5f64,
        extra in 0.0..0.5f64,
    ) {
        let sys = TwoLevelSystem::new(1.0, g1, g1 / 2.0 + extra, 1.0).unwrap();
        let grid = make_grid(0.0, 5.0, 201).unwrap();
        let env = Envelope::Sampled { grid, values: smooth_values(201, &coeffs) };
        let traj = propagate(&sys, &env, &grid, ground_state(), &IntegratorConfig::per_node())
            .unwrap();
        prop_assert!(traj.trace_drift() <= 1e-10);
    }

    /// The reconstructed density matrix stays positive semidefinite whenever
    /// dephasing is at least half the relaxation rate.
    #[test]
    fn density_matrix_stays_positive(
        coeffs in coeff_strategy(),
        g1 in 0.0..0.5f64,
        extra in 0.0..0.5f64,
    ) {
        let sys = TwoLevelSystem::new(1.0, g1, g1 / 2.0 + extra, 1.0).unwrap();
        let grid = make_grid(0.0, 5.0, 201).unwrap();
        let env = Envelope::Sampled { grid, values: smooth_values(201, &coeffs) };
        let traj = propagate(&sys, &env, &grid, ground_state(), &IntegratorConfig::per_node())
            .unwrap();
        for s in &traj.states {
            prop_assert!(s.min_eigenvalue() >= -1e-9);
        }
    }
}
