use proptest::prelude::*;

use tfdw_core::field::FieldGrid;
use tfdw_core::lattice::{ball, BoxDomain, DistanceKind, LatticePoint};
use tfdw_core::tfdw::{f_local, PHI_CAP};
use tfdw_core::verify::{
    atom_field, ball_formula_check, hls_ratio, hls_suite, lp_suite, run_all, truncation_comparison,
    truncation_suite, HlsInstance, HlsPoint, SuiteSizes,
};

fn unit_ball(kind: DistanceKind) -> HlsInstance {
    let f: Vec<(HlsPoint, f64)> = ball(LatticePoint::ORIGIN, 1)
        .into_iter()
        .map(|p| ([p.x1, p.x2, p.x3, 0], 1.0))
        .collect();
    HlsInstance {
        dim: 3,
        alpha: 2.0,
        r: 1.2,
        s: 1.2,
        kind,
        g: f.clone(),
        f,
        seed: 0,
    }
}

#[test]
fn hls_ratio_of_the_unit_ball() {
    // 12 centre pairs at distance 1, 6 opposite pairs at 2, 24 adjacent arm pairs.
    let norms = 7f64.powf(5.0 / 3.0);
    let euclid = hls_ratio(&unit_ball(DistanceKind::Euclidean)).unwrap();
    assert!((euclid - (15.0 + 12.0 * 2f64.sqrt()) / norms).abs() < 1e-13);
    let graph = hls_ratio(&unit_ball(DistanceKind::Graph)).unwrap();
    assert!((graph - 27.0 / norms).abs() < 1e-13);
}

#[test]
fn hls_rejects_bad_instances() {
    let mut inst = unit_ball(DistanceKind::Euclidean);
    inst.r = 2.0;
    assert!(hls_ratio(&inst).is_err());
    let mut inst = unit_ball(DistanceKind::Euclidean);
    inst.dim = 5;
    assert!(hls_ratio(&inst).is_err());
    let mut inst = unit_ball(DistanceKind::Euclidean);
    inst.f[0].1 = -1.0;
    assert!(hls_ratio(&inst).is_err());
}

#[test]
fn hls_in_two_and_four_dimensions() {
    let pts2: Vec<(HlsPoint, f64)> = vec![([0, 0, 0, 0], 1.0), ([3, 4, 0, 0], 1.0)];
    let inst = HlsInstance {
        dim: 2,
        alpha: 1.0,
        r: 4.0 / 3.0,
        s: 4.0 / 3.0,
        kind: DistanceKind::Euclidean,
        f: pts2.clone(),
        g: pts2,
        seed: 0,
    };
    // Two ordered pairs at distance 5, norms 2^{3/4} each.
    assert!((hls_ratio(&inst).unwrap() - 0.4 / 2f64.powf(1.5)).abs() < 1e-14);
    let pts4: Vec<(HlsPoint, f64)> = vec![([0, 0, 0, 0], 1.0), ([1, 1, 1, 1], 1.0)];
    let inst = HlsInstance {
        dim: 4,
        alpha: 2.0,
        r: 4.0 / 3.0,
        s: 4.0 / 3.0,
        kind: DistanceKind::Graph,
        f: pts4.clone(),
        g: pts4,
        seed: 0,
    };
    assert!((hls_ratio(&inst).unwrap() - (2.0 / 16.0) / 2f64.powf(1.5)).abs() < 1e-14);
}

#[test]
fn suites_pass_and_repeat() {
    for kind in DistanceKind::ALL {
        let sizes = SuiteSizes {
            ball_radius: 12,
            lp: 2000,
            hls: 2000,
            truncation: 300,
        };
        let a = run_all(sizes, 77, kind, 0);
        assert!(a.iter().all(|s| s.passed()), "{a:?}");
        let b = run_all(sizes, 77, kind, 0);
        assert_eq!(a, b);
    }
}

#[test]
fn instance_streams_do_not_depend_on_count() {
    let short = hls_suite(100, 5, DistanceKind::Euclidean);
    let long = hls_suite(400, 5, DistanceKind::Euclidean);
    assert!(long.max_ratio >= short.max_ratio);
    assert!(lp_suite(50, 5).max_ratio <= 1.0);
}

#[test]
fn fault_injection_is_reported() {
    let s = ball_formula_check(5, 1);
    assert_eq!(s.violations, 5);
    assert!(!s.passed());
    assert!(s.examples[0].starts_with("R=1:"));
    let sizes = SuiteSizes {
        ball_radius: 3,
        lp: 10,
        hls: 10,
        truncation: 10,
    };
    let all = run_all(sizes, 1, DistanceKind::Graph, -1);
    assert!(!all[0].passed());
    assert!(all[1..].iter().all(|s| s.passed()));
}

#[test]
fn truncation_of_a_single_atom() {
    let rec = truncation_comparison(&atom_field(1.0).unwrap(), DistanceKind::Euclidean).unwrap();
    assert!(rec.cap_binds && rec.holds);
    assert!((rec.f_sum_full - f_local(1.0).unwrap()).abs() < 1e-15);
    assert!((rec.f_sum_truncated - f_local(PHI_CAP * PHI_CAP).unwrap()).abs() < 1e-15);
    assert!(rec.f_sum_truncated < rec.f_sum_full);
    assert!(rec.e_truncated < rec.e_full);

    let rec = truncation_comparison(&atom_field(0.5).unwrap(), DistanceKind::Euclidean).unwrap();
    assert!(!rec.cap_binds && rec.holds);
    assert_eq!(rec.e_full, rec.e_truncated);
}

#[test]
fn truncation_suite_has_no_violations() {
    for kind in DistanceKind::ALL {
        let s = truncation_suite(500, 3, kind);
        assert!(s.passed() && s.max_ratio <= 1.0, "{s:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hls_ratio_is_scale_invariant_at_critical_exponents(
        vals in prop::collection::vec(0.01f64..1.0, 7),
        lambda in 0.1f64..10.0,
    ) {
        // With 1/r + 1/s = 5/3 the ratio is homogeneous of degree zero in f.
        let mut inst = unit_ball(DistanceKind::Euclidean);
        for (entry, v) in inst.f.iter_mut().zip(&vals) {
            entry.1 = *v;
        }
        let base = hls_ratio(&inst).unwrap();
        for entry in &mut inst.f {
            entry.1 *= lambda;
        }
        let scaled = hls_ratio(&inst).unwrap();
        prop_assert!((scaled - base).abs() <= 1e-12 * base);
    }

    #[test]
    fn truncation_holds_on_random_fields(vals in prop::collection::vec(0.0f64..1.5, 27)) {
        let phi = FieldGrid::from_values(BoxDomain::cube(1), vals).unwrap();
        for kind in DistanceKind::ALL {
            let rec = truncation_comparison(&phi, kind).unwrap();
            prop_assert!(rec.holds);
            prop_assert!(rec.max_gradient_ratio <= 1.0);
        }
    }
}
