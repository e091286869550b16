use proptest::prelude::*;
use swapsim::analysis::{fisher_information, fit_exponential_swap, gate_matrix, swap_law, SwapFit};
use swapsim::config::{RunConfig, Scenario, Spacing, Sweep, SweepVariable};

proptest! {
    #[test]
    fn gate_powers_stay_unitary_and_add(n in -6.0f64..6.0, m in -6.0f64..6.0) {
        prop_assert!(gate_matrix(n).is_unitary(1e-12));
        let lhs = gate_matrix(n).compose(&gate_matrix(m)).entries;
        prop_assert!((lhs - gate_matrix(n + m).entries).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn fisher_closed_form_matches_outcome_sum(j0 in 0.5f64..5.0, b in 0.3f64..2.0, a in 0.5f64..5.0, tau in 1.0f64..60.0) {
        let p = swap_law(j0, b, a, tau);
        prop_assume!(p > 1e-6 && p < 1.0 - 1e-6);
        let fit = SwapFit { j0, b, tau, residual: 0.0, r2: 1.0 };
        let f = fisher_information(&fit, a, tau, 100).unwrap();
        let num_a = f.f_barrier_numeric.unwrap();
        let num_t = f.f_tau_numeric.unwrap();
        prop_assert!((num_a - f.f_barrier).abs() <= 1e-6 * f.f_barrier.max(1e-12));
        prop_assert!((num_t - f.f_tau).abs() <= 1e-6 * f.f_tau.max(1e-12));
    }

    #[test]
    fn noiseless_swap_data_fit_exactly(lj0 in (0.1f64).ln()..(10.0f64).ln(), b in 0.1f64..3.0, u_max in 0.5f64..6.0) {
        let j0 = lj0.exp();
        // τ puts the half-phase at the lowest barrier at u_max
        let tau = 2.0 * u_max / (j0 * (-b).exp());
        let pts: Vec<(f64, f64)> = (0..21).map(|i| 1.0 + 0.1 * i as f64).map(|a| (a, swap_law(j0, b, a, tau))).collect();
        let f = fit_exponential_swap(&pts, tau).unwrap();
        prop_assert!(((f.j0 - j0) / j0).abs() < 1e-6, "{f:?}");
        prop_assert!(((f.b - b) / b).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn configs_round_trip_through_toml(dz in 10.0f64..100.0, nk in 2usize..10, start in 1.0f64..3.0, points in 2usize..12, log in any::<bool>()) {
        let mut cfg = RunConfig::new(Scenario::TunnelingSweep);
        cfg.coulomb.delta_z = dz;
        cfg.numerics.nk_x = nk;
        cfg.sweep = Some(Sweep {
            variable: SweepVariable::BarrierHeight,
            start,
            stop: start + 2.0,
            points,
            spacing: if log { Spacing::Log } else { Spacing::Linear },
        });
        let back = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let v = back.sweep.unwrap().values();
        prop_assert_eq!(v.len(), points);
        prop_assert_eq!(v[points - 1], start + 2.0);
    }
}
