use dlgibbs::hamiltonian::{self, build_instance, InstanceKind, LocalHamiltonian, GROUND_TOL};
use dlgibbs::numerics;
use dlgibbs::projector::{self, DlOperator};
use proptest::prelude::*;

fn instances() -> Vec<(String, LocalHamiltonian)> {
    let mut out = Vec::new();
    for n in 3..=5 {
        for seed in 0..3 {
            for kind in [InstanceKind::RandomFfProjectors, InstanceKind::CommutingProjectors, InstanceKind::ZzChain] {
                out.push((format!("{kind}/n={n}/seed={seed}"), build_instance(kind, n, seed).unwrap()));
            }
        }
    }
    out
}

fn analysed(h: &LocalHamiltonian) -> (DlOperator, projector::SingularGap) {
    let dl = projector::dl_operator(h).unwrap();
    let sg = projector::singular_gap(&dl, h).unwrap();
    (dl, sg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_polynomial_is_bounded_and_normalized(gamma in 1e-3f64..1.0, degree in 1usize..200, x in -1.0f64..1.0) {
        let p = projector::chebyshev_poly(gamma, degree).unwrap();
        prop_assert!(p.eval(x).abs() <= 1.0 + 1e-12);
        prop_assert!((p.eval(1.0) - 1.0).abs() <= 1e-12);
        let mirrored = if p.is_odd() { -p.eval(x) } else { p.eval(x) };
        prop_assert!((p.eval(-x) - mirrored).abs() <= 1e-12);
        if x.abs() <= 1.0 - gamma {
            prop_assert!(p.eval(x).abs() <= p.bound() + 1e-12);
        }
    }
}

#[test]
fn unit_singular_block_is_the_ground_projector() {
    for (name, h) in instances() {
        let (dl, sg) = analysed(&h);
        let gs = hamiltonian::ground_space(&h, GROUND_TOL).unwrap();
        assert_eq!(dl.rank, gs.dimension, "{name}");
        for s in &dl.svd.s[..dl.rank] {
            assert!((s - 1.0).abs() <= 1e-10, "{name}");
        }
        assert!(numerics::op_norm(&(dl.ground_projector() - &gs.projector)) <= 1e-9, "{name}");
        assert!(sg.s_next <= sg.s_bound + 1e-9 || sg.g == 0 && sg.s_next <= 1e-9, "{name}: {} > {}", sg.s_next, sg.s_bound);
    }
}

#[test]
fn approximation_error_is_within_the_chebyshev_bound() {
    for (name, h) in instances() {
        let (dl, sg) = analysed(&h);
        for l in 1..=60 {
            let poly = projector::chebyshev_poly(sg.certified, l).unwrap();
            let res = projector::approximate_projector(&dl, &poly).unwrap();
            assert!(res.error <= res.bound + 1e-9, "{name} l={l}: {} > {}", res.error, res.bound);
            assert_eq!(res.queries, l * dl.num_factors());
            assert_eq!(res.ancilla_estimate, projector::ancilla_estimate(dl.num_factors()));
        }
    }
}

#[test]
fn query_recurrence_agrees_with_the_singular_value_transform() {
    for (name, h) in instances().into_iter().step_by(4) {
        let (dl, sg) = analysed(&h);
        for l in [1, 2, 7, 20] {
            let poly = projector::chebyshev_poly(sg.certified, l).unwrap();
            let res = projector::approximate_projector(&dl, &poly).unwrap();
            let (by_queries, count) = projector::projector_by_queries(&dl, &poly).unwrap();
            assert_eq!(count, res.queries, "{name}");
            assert!(numerics::op_norm(&(by_queries - &res.approx)) <= 1e-9, "{name} l={l}");
        }
    }
}
