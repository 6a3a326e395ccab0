use approx::assert_relative_eq;
use proptest::prelude::*;

use identikit::diagnostics::{
    classify_discrete, fisher_information, full_singular_system, source_norm_profile, Functional, Verdict,
    DEFAULT_BETAS,
};
use identikit::linop::{adjoint, read_operator, write_operator, GridFunction, LinOp, WeightedSpace};
use identikit::models::{synthetic_operator, Decay, SyntheticSpec};

fn space(label: &str, weights: &[f64]) -> identikit::linop::Space {
    let nodes = (0..weights.len()).map(|i| i as f64).collect();
    WeightedSpace::new(label, 1, nodes, weights.to_vec()).unwrap()
}

/// Random operator between weighted spaces plus a vector in each.
fn operator_and_vectors() -> impl Strategy<Value = (LinOp, Vec<f64>, Vec<f64>)> {
    (1usize..8, 1usize..8).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(0.05f64..3.0, m),
            prop::collection::vec(0.05f64..3.0, n),
            prop::collection::vec(-2.0f64..2.0, m * n),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-2.0f64..2.0, m),
        )
            .prop_map(|(wq, wl, a, b, g)| {
                let op = LinOp::from_rows(&space("L", &wl), &space("Q", &wq), &a).unwrap();
                (op, b, g)
            })
    })
}

fn stochastic_matrix(k: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (prop::collection::vec(prop::collection::vec(0.01f64..1.0, k), k), prop::collection::vec(0.05f64..1.0, k)).prop_map(
        move |(cols, w)| {
            let mut p = vec![vec![0.0; k]; k];
            for (c, col) in cols.iter().enumerate() {
                let s: f64 = col.iter().sum();
                for j in 0..k {
                    p[j][c] = col[j] / s;
                }
            }
            let s: f64 = w.iter().sum();
            (p, w.iter().map(|x| x / s).collect())
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_identity((op, b, g) in operator_and_vectors()) {
        let b = GridFunction::new(op.domain(), b).unwrap();
        let g = GridFunction::new(op.codomain(), g).unwrap();
        let lhs = op.apply(&b).unwrap().inner(&g).unwrap();
        let rhs = b.inner(&adjoint(&op).apply(&g).unwrap()).unwrap();
        let scale = op.apply(&b).unwrap().norm() * g.norm() + 1e-12;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn double_adjoint_is_identity((op, _, _) in operator_and_vectors()) {
        let back = adjoint(&adjoint(&op));
        for (x, y) in back.row_major().iter().zip(op.row_major()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn container_round_trip_is_exact((op, _, _) in operator_and_vectors()) {
        let mut buf = Vec::new();
        write_operator(&mut buf, &op).unwrap();
        let back = read_operator(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.row_major(), op.row_major());
        prop_assert_eq!(back.domain().weights(), op.domain().weights());
        let mut again = Vec::new();
        write_operator(&mut again, &back).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn singular_values_sorted_and_nonnegative((op, _, _) in operator_and_vectors()) {
        let sys = full_singular_system(&op).unwrap();
        let v = sys.values();
        prop_assert!(v.iter().all(|x| *x >= 0.0));
        prop_assert!(v.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn partial_sums_are_nondecreasing(n in 4usize..40, lam in 0.3f64..0.95, rep in 0.2f64..0.95) {
        let spec = SyntheticSpec { n, singular_values: Decay::Geometric(lam), representer: Decay::Geometric(rep) };
        let (op, r) = synthetic_operator(&spec).unwrap();
        let sys = full_singular_system(&op).unwrap();
        let d = source_norm_profile(&r, &sys, &DEFAULT_BETAS).unwrap();
        for curve in &d.partial_sums {
            prop_assert!(curve.windows(2).all(|w| w[1] >= w[0]));
        }
        // larger β weights the tail more heavily
        for pair in d.partial_sums.windows(2) {
            prop_assert!(pair[1].last().unwrap() >= pair[0].last().unwrap());
        }
    }

    #[test]
    fn fisher_information_scales_inversely_with_representer(
        n in 3usize..20, lam in 0.4f64..0.95, c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]
    ) {
        let spec = SyntheticSpec { n, singular_values: Decay::Geometric(lam), representer: Decay::Power(1.0) };
        let (op, r) = synthetic_operator(&spec).unwrap();
        let sys = full_singular_system(&op).unwrap();
        let scaled = Functional::new("scaled", r.representer.scaled(c));
        let a = fisher_information(&r, &sys).unwrap();
        let b = fisher_information(&scaled, &sys).unwrap();
        prop_assert!(!a.unidentified && !b.unidentified);
        assert_relative_eq!(b.value * c * c, a.value, max_relative = 1e-9);
    }

    #[test]
    fn discrete_classifier_never_irregular(
        (p, w) in (2usize..6).prop_flat_map(stochastic_matrix),
        seed in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let k = w.len();
        let dom = space("G0", &w);
        let r = Functional::new("r", GridFunction::new(&dom, seed[..k].to_vec()).unwrap());
        let c = classify_discrete(&p, &w, &r).unwrap();
        prop_assert_ne!(c.verdict, Verdict::Irregular);
    }
}
