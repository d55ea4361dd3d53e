use num_complex::Complex64 as C64;
use proptest::prelude::*;
use tqm::config::ExperimentConfig;
use tqm::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use tqm::representation::*;
use tqm::shift::*;

const N: usize = 64;

fn grid() -> EnergyGrid {
    EnergyGrid::new(8.0, N).unwrap()
}

fn state() -> impl Strategy<Value = EnergyState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), N).prop_map(|v| {
        EnergyState::new(grid(), PhysicsParams::default(), v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
            .unwrap()
    })
}

fn cells() -> impl Strategy<Value = usize> {
    0usize..N
}

fn close(a: &EnergyState, b: &EnergyState) -> bool {
    a.max_abs_diff(b) < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coshift_is_linear(x in state(), y in state(), a in -2.0f64..2.0, b in -2.0f64..2.0, q in cells()) {
        let lam = ShiftAmount::cells(&grid(), q);
        let (a, b) = (C64::new(a, 0.3), C64::new(-0.7, b));
        let lhs = coshift(&x.combine(a, &y, b).unwrap(), lam);
        let rhs = coshift(&x, lam).combine(a, &coshift(&y, lam), b).unwrap();
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn adjoint_pairs_with_coshift(x in state(), y in state(), q in cells()) {
        let lam = ShiftAmount::cells(&grid(), q);
        let l = inner_product(&coshift(&x, lam), &y).unwrap();
        let r = inner_product(&x, &coshift_adjoint(&y, lam)).unwrap();
        prop_assert!((l - r).norm() < 1e-12);
    }

    #[test]
    fn coshifts_compose(x in state(), p in cells(), q in cells()) {
        let g = grid();
        let two = coshift(&coshift(&x, ShiftAmount::cells(&g, p)), ShiftAmount::cells(&g, q));
        let one = coshift(&x, ShiftAmount::cells(&g, p + q));
        prop_assert!(close(&two, &one));
    }

    #[test]
    fn coshift_is_a_coisometry(x in state(), q in cells()) {
        let lam = ShiftAmount::cells(&grid(), q);
        // Content of the top q cells leaves the grid under the adjoint; blank it first.
        let mut amps = x.amps.clone();
        amps[N - q..].iter_mut().for_each(|a| *a = C64::default());
        let x = EnergyState { amps, ..x };
        prop_assert!(close(&coshift(&coshift_adjoint(&x, lam), lam), &x));
    }

    #[test]
    fn adjoint_then_coshift_is_tail_projector(x in state(), q in cells()) {
        let lam = ShiftAmount::cells(&grid(), q);
        let lhs = coshift_adjoint(&coshift(&x, lam), lam);
        prop_assert!(close(&lhs, &tail_projector(&x, ShiftAmount::new(q as f64 * grid().step()).unwrap())));
    }

    #[test]
    fn evolution_is_unitary_and_additive(x in state(), t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        let e = evolve(&evolve(&x, t1), t2);
        prop_assert!((e.norm_sqr() - x.norm_sqr()).abs() < 1e-12);
        prop_assert!(e.max_abs_diff(&evolve(&x, t1 + t2)) < 1e-12);
    }

    #[test]
    fn time_transform_round_trips(x in state()) {
        let g = grid();
        let tg = TimeGrid::full_period(&g, &PhysicsParams::default(), 2 * N).unwrap();
        let h = energy_to_time(&x, &tg);
        prop_assert!((h.norm_sqr() - x.norm_sqr()).abs() < 1e-10);
        prop_assert!(time_to_energy(&h, g).state.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn config_text_round_trips(
        hbar in 0.01f64..10.0,
        eps in 1.0f64..100.0,
        n in 8usize..5000,
        lo in -100.0f64..0.0,
        span in 0.1f64..100.0,
        lambda in 0.001f64..5.0,
        seed in any::<u64>(),
    ) {
        let text = format!(
            "hbar={hbar}\nenergy.eps_max={eps}\nenergy.n={n}\ntime.tau_min={lo}\ntime.tau_max={}\nclock.lambda={lambda}\nseed={seed}\n",
            lo + span
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }
}
