use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tfdw_core::lattice::{ball, is_connected, DistanceKind, LatticePoint};
use tfdw_core::liquid_drop::{
    coulomb_chain_bound, drop_energy, enumerate_polycubes, exact_enumeration_oracle, minimize_drop,
    pair_count_profile, scaling_study, separated_cells_energy, set_energy, window_subset_optima,
    DropSet, Schedule, SearchOptions,
};

/// Random connected set grown one neighbour at a time.
fn grow(seed: u64, volume: usize) -> Vec<LatticePoint> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = vec![LatticePoint::ORIGIN];
    while cells.len() < volume {
        let base = cells[rng.gen_range(0..cells.len())];
        let next = base.neighbors()[rng.gen_range(0..6)];
        if !cells.contains(&next) {
            cells.push(next);
        }
    }
    cells
}

#[test]
fn cache_survives_ten_thousand_moves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in DistanceKind::ALL {
        let mut d = DropSet::quasi_ball(40, kind).unwrap();
        let mut moves = 0;
        while moves < 10_000 {
            let mv = d.random_move(&mut rng);
            if mv.remove == mv.add {
                continue;
            }
            d.apply(mv).unwrap();
            moves += 1;
        }
        let scratch = drop_energy(&d);
        assert_eq!(d.perimeter(), scratch.perimeter);
        assert!((d.energy().total - scratch.total).abs() < 1e-7);
    }
}

#[test]
fn ball_perimeter_is_sphere_size() {
    for r in 1..=6u64 {
        let d = DropSet::new(&ball(LatticePoint::ORIGIN, r), DistanceKind::Euclidean).unwrap();
        assert_eq!(d.perimeter() as u64, 4 * r * r + 2);
    }
}

#[test]
fn search_matches_enumeration() {
    for kind in DistanceKind::ALL {
        for v in 1..=6 {
            let exact = exact_enumeration_oracle(v, kind).unwrap();
            let found =
                minimize_drop(v, kind, Schedule::anneal(1), SearchOptions::default()).unwrap();
            assert!(
                (found.energy.total - exact.energy.total).abs() < 1e-9,
                "{kind} V={v}"
            );
            assert!(found.connected);
        }
    }
}

#[test]
fn polycube_counts_and_connectivity() {
    let shapes = enumerate_polycubes(6).unwrap();
    assert_eq!(shapes.len(), 3481);
    assert!(shapes.iter().all(|s| is_connected(s).unwrap()));
}

#[test]
fn disconnected_sets_undercut_connected_optimum() {
    // The window minimum over all 2-subsets uses the farthest pair.
    let w = window_subset_optima(2, 4, DistanceKind::Euclidean).unwrap();
    assert_eq!(w.connected, 4.0);
    assert!((w.any - (2.0 + 2.0 / 27f64.sqrt())).abs() < 1e-12);
    let energies: Vec<f64> = [1, 10, 100, 1000]
        .iter()
        .map(|&g| separated_cells_energy(2, g, DistanceKind::Euclidean).total)
        .collect();
    assert!(energies.windows(2).all(|w| w[1] < w[0]));
    assert!((energies[3] - 2.0).abs() < 3e-3);
}

#[test]
fn window_cross_check_for_four_cells() {
    for kind in DistanceKind::ALL {
        let w = window_subset_optima(4, 4, kind).unwrap();
        assert_eq!(w.subsets, 635_376);
        let exact = exact_enumeration_oracle(4, kind).unwrap();
        assert!((w.connected - exact.energy.total).abs() < 1e-12);
        assert!(w.any < w.connected);
    }
}

#[test]
fn disconnected_search_mode_still_reports_connected_best() {
    let opts = SearchOptions {
        connected_only: false,
    };
    let r = minimize_drop(8, DistanceKind::Euclidean, Schedule::anneal(3), opts).unwrap();
    assert!(r.connected);
    assert!(r.best_any_total <= r.energy.total);
}

#[test]
fn greedy_schedule_finds_oracle() {
    let r = minimize_drop(
        5,
        DistanceKind::Graph,
        Schedule::Greedy {
            restarts: 3,
            seed: 9,
        },
        SearchOptions::default(),
    )
    .unwrap();
    let exact = exact_enumeration_oracle(5, DistanceKind::Graph).unwrap();
    assert!((r.energy.total - exact.energy.total).abs() < 1e-9);
}

#[test]
fn search_is_deterministic() {
    let a = minimize_drop(
        30,
        DistanceKind::Euclidean,
        Schedule::anneal(5),
        SearchOptions::default(),
    )
    .unwrap();
    let b = minimize_drop(
        30,
        DistanceKind::Euclidean,
        Schedule::anneal(5),
        SearchOptions::default(),
    )
    .unwrap();
    assert_eq!(a.best.cells(), b.best.cells());
    assert_eq!(a.energy, b.energy);
}

#[test]
fn short_scaling_study() {
    let study = scaling_study(
        &[8, 16, 32],
        DistanceKind::Euclidean,
        Schedule::anneal(2),
        SearchOptions::default(),
        0.5,
    )
    .unwrap();
    assert_eq!(study.rows.len(), 3);
    assert!(study.rows.iter().all(|r| r.connected && r.chain.holds));
    assert!(study.subadditivity.iter().all(|s| s.holds));
    let pair = study
        .subadditivity
        .iter()
        .find(|s| s.v0 == 16 && s.v1 == 16)
        .unwrap();
    assert_eq!(pair.e_connected_whole, Some(study.rows[2].total));
    assert!(scaling_study(
        &[16, 8],
        DistanceKind::Euclidean,
        Schedule::anneal(2),
        SearchOptions::default(),
        0.5
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn perimeter_is_between_one_and_volume(seed in 0u64..10_000, v in 1usize..60) {
        let cells = grow(seed, v);
        let e = set_energy(&cells, DistanceKind::Euclidean);
        prop_assert!(1 <= e.perimeter && e.perimeter <= v);
    }

    #[test]
    fn pair_counts_grow_linearly_on_connected_sets(seed in 0u64..10_000, v in 2usize..80) {
        let cells = grow(seed, v);
        let profile = pair_count_profile(&cells);
        prop_assert!(profile.windows(2).all(|w| w[0].1 <= w[1].1));
        let diam = profile.len() as u64 - 1;
        for &(t, a) in &profile {
            if t > 1 && 2 * t < diam {
                prop_assert!(a >= t * v as u64, "A({}) = {} < {}", t, a, t * v as u64);
            }
        }
    }

    #[test]
    fn chain_bound_holds_on_connected_sets(seed in 0u64..10_000, v in 1usize..80, graph in any::<bool>()) {
        let kind = if graph { DistanceKind::Graph } else { DistanceKind::Euclidean };
        prop_assert!(coulomb_chain_bound(&grow(seed, v), kind).holds);
    }

    #[test]
    fn move_delta_matches_recomputation(seed in 0u64..10_000, v in 2usize..30) {
        use rand::Rng;
        let d = DropSet::new(&grow(seed, v), DistanceKind::Euclidean).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let mv = d.random_move(&mut rng);
            if mv.remove == mv.add {
                continue;
            }
            let delta = d.move_delta(mv).unwrap();
            let mut after = d.clone();
            after.apply(mv).unwrap();
            let diff = drop_energy(&after).total - drop_energy(&d).total;
            prop_assert!((delta - diff).abs() < 1e-9);
            let _ = rng.gen::<u8>();
        }
    }
}
