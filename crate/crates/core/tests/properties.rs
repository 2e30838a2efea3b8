mod common;

use common::*;
use pickfreeze::analytic::ToyFamily;
use pickfreeze::design::{DesignPlan, Outputs};
use pickfreeze::gca::{gca_utilities, GcaParams};
use pickfreeze::{Distribution, InputModel};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = ToyFamily> {
    prop::sample::select(ToyFamily::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cvm_is_invariant_under_increasing_maps(d in cvm_design()) {
        monotone_invariance(&d)?;
    }

    #[test]
    fn hsobol_is_translation_invariant(d in pf_design(5), c in -1e3f64..1e3) {
        translation_invariance(&d, c)?;
    }

    #[test]
    fn hsobol_ignores_replicate_order(d in pf_design(6), r in 0usize..6) {
        permutation_invariance(&d, r)?;
    }

    #[test]
    fn constant_models_give_zero(v in -1e6f64..1e6, p in 2usize..6, n in 2usize..50, seed in any::<u64>()) {
        constant_zeros(v, p, n, seed)?;
    }

    #[test]
    fn normalized_cvm_is_bounded(d in cvm_design()) {
        normalized_bounds(&d)?;
    }

    #[test]
    fn closed_forms_are_bounded(f in family(), alpha in 0.1f64..5.0, prob in 0.01f64..0.99) {
        oracle_bounds(f, alpha, prob)?;
    }

    #[test]
    fn order_two_matches_classic(d in pf_design(2)) {
        order_two_identity(&d)?;
    }

    #[test]
    fn design_csv_roundtrips(n in 1usize..20, p in 2usize..4, w in any::<bool>(), seed in any::<u64>(), k in 1usize..3) {
        let inputs = InputModel::from_pairs([
            ("x", Distribution::Gaussian { mu: 1.0, sigma: 1e-3 }),
            ("y", Distribution::Beta { alpha: 0.5, beta: 0.5 }),
        ]).unwrap();
        let plan = if w {
            DesignPlan::cvm(&inputs, &[1], n, seed).unwrap()
        } else {
            DesignPlan::pickfreeze(&inputs, &[0], p, n.max(2), seed).unwrap()
        };
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let back = DesignPlan::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.x, &plan.x);
        prop_assert_eq!((back.p, back.n, back.with_w), (plan.p, plan.n, plan.with_w));
        if n > 1 {
            prop_assert_eq!(&back.frozen, &plan.frozen);
        }
        let outputs = Outputs { k, y: plan.x.iter().take(plan.cell_count() * k).map(|v| v.sin() / 3.0).collect() };
        let mut buf = Vec::new();
        outputs.write_csv(&plan, &mut buf).unwrap();
        prop_assert_eq!(plan.read_outputs(buf.as_slice()).unwrap(), outputs);
    }

    #[test]
    fn utilities_are_affine_and_nonincreasing_in_disutilities(
        raw in proptest::collection::vec(0.0f64..1.0, 11),
        which in 0usize..6,
        h in 0.001f64..0.05,
    ) {
        let t = GcaParams {
            g: raw[0], gc: raw[1], pc: raw[2], e: raw[3], sens: raw[4],
            du_gc: raw[5] * 0.4, du_p: raw[6] * 0.2, du_pc: raw[7] * 0.4,
            du_s: raw[8] * 0.2, du_b: raw[9] * 0.05, du_dx: raw[10] * 0.05,
        };
        let bump = |t: GcaParams, by: f64| {
            let mut t = t;
            match which {
                0 => t.du_gc += by,
                1 => t.du_p += by,
                2 => t.du_pc += by,
                3 => t.du_s += by,
                4 => t.du_b += by,
                _ => t.du_dx += by,
            }
            gca_utilities(&t)
        };
        let (u0, u1, u2) = (gca_utilities(&t), bump(t, h), bump(t, 2.0 * h));
        for s in 0..4 {
            prop_assert!(u1[s] <= u0[s] + 1e-15);
            prop_assert!(((u2[s] - u1[s]) - (u1[s] - u0[s])).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&u0[s]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn results_do_not_depend_on_thread_count(seed in any::<u64>()) {
        thread_count_invariance(seed)?;
    }
}
