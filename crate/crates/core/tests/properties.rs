mod common;

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_ems, brute_stable, random_height_map, random_support_case};
use tap_core::container::HeightMap;
use tap_core::datasets::{generate_one, DatasetKind, GenConfig};
use tap_core::extensions::{rolling_solve, Omega};
use tap_core::geom::{Extent, Mode, Orientation};
use tap_core::instance::{validate_solution, ProblemInstance, Solution};
use tap_core::placement::Strategy;
use tap_core::policy::{rollout, Choice, Policy, PolicyConfig};
use tap_core::precedence::PrecedenceGraph;
use tap_core::reward::{is_stable, reward};
use tap_core::solvers::solve_random;

fn rand_instance(seed: u64, n: usize, three_d: bool) -> ProblemInstance {
    let mode = if three_d { Mode::Three } else { Mode::Two };
    let cfg = GenConfig { seed, n, ..GenConfig::new(DatasetKind::Rand, mode) };
    generate_one(&cfg, 0).unwrap().instance
}

fn tiny_policy(capacity: usize, mode: Mode, seed: u64) -> Policy {
    let (tw, td) = if mode == Mode::Three { (5, 5) } else { (5, 1) };
    let cfg = PolicyConfig {
        dims_mode: mode,
        capacity,
        target_width: tw,
        target_depth: td,
        static_dim: 8,
        dynamic_dim: 8,
        height_dim: 8,
        hidden: 16,
        critic_hidden: 8,
        ..PolicyConfig::default()
    };
    Policy::new(cfg, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ems_matches_enumeration(seed in any::<u64>(), w in 1u32..=8, three_d in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, d) = if three_d { (w.min(4), rng.random_range(1..=4)) } else { (w, 1) };
        let hm = random_height_map(&mut rng, w, d, 6);
        let ceiling = rng.random_range(hm.max()..=8);
        prop_assert_eq!(hm.compute_ems(ceiling).unwrap(), brute_ems(&hm, ceiling));
    }

    #[test]
    fn stability_matches_hull_oracle(seed in any::<u64>(), three_d in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (b, others) = random_support_case(&mut rng, three_d);
        match brute_stable(&b, &others) {
            Some(expected) => prop_assert_eq!(is_stable(&b, &others).unwrap(), expected),
            None => prop_assert!(is_stable(&b, &others).is_err()),
        }
    }

    #[test]
    fn drop_raises_footprint_to_top(seed in any::<u64>(), w in 1u32..=4, d in 1u32..=3, h in 1u32..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hm = random_height_map(&mut rng, 6, 4, 5);
        let ext = Extent::new3(w, h, d);
        let (x, z) = (rng.random_range(0..=6 - w), rng.random_range(0..=4 - d));
        let before = hm.clone();
        let expect = (z..z + d).flat_map(|zz| (x..x + w).map(move |xx| (xx, zz))).map(|(xx, zz)| before.at(xx, zz)).max().unwrap();
        prop_assert_eq!(hm.drop_height(x, z, ext).unwrap(), expect);
        prop_assert_eq!(hm.place_mut(x, z, ext).unwrap(), expect);
        for zz in 0..4 {
            for xx in 0..6 {
                let inside = (x..x + w).contains(&xx) && (z..z + d).contains(&zz);
                prop_assert_eq!(hm.at(xx, zz), if inside { expect + h } else { before.at(xx, zz) });
            }
        }
    }

    #[test]
    fn orientation_inverse_round_trips(w in 1u32..9, h in 1u32..9, d in 1u32..9, o in 0u8..6) {
        let dims = Extent::new3(w, h, d);
        let o = Orientation(o);
        let turned = o.apply(Mode::Three, dims);
        prop_assert_eq!(o.inverse(Mode::Three).apply(Mode::Three, turned), dims);
        prop_assert_eq!(turned.volume(), dims.volume());
        let o2 = Orientation(o.0 % 2);
        let flat = Extent::new2(w, h);
        prop_assert_eq!(o2.inverse(Mode::Two).apply(Mode::Two, o2.apply(Mode::Two, flat)), flat);
    }

    #[test]
    fn precedence_progress_and_monotonicity(seed in any::<u64>(), n in 1usize..14, three_d in any::<bool>()) {
        let inst = rand_instance(seed, n, three_d);
        let mut g = PrecedenceGraph::extract(&inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        while g.unpacked_count() > 0 {
            let states = g.valid_states();
            prop_assert!(!states.is_empty(), "stuck with {} boxes left", g.unpacked_count());
            let pick = states[rng.random_range(0..states.len())];
            let before: Vec<_> = g.unpacked().map(|i| (i, g.node(i).clone())).collect();
            let valid_before: Vec<_> = g.valid_states();
            g.remove_box(pick.box_idx).unwrap();
            for (i, node) in before {
                if i == pick.box_idx {
                    continue;
                }
                prop_assert!(g.node(i).tb.is_subset(&node.tb));
            }
            for s in valid_before {
                if s.box_idx != pick.box_idx {
                    prop_assert!(g.is_valid(s.box_idx, s.orientation));
                }
            }
        }
    }

    #[test]
    fn random_solutions_replay(seed in any::<u64>(), n in 1usize..12, three_d in any::<bool>(), strat in 0usize..3) {
        let inst = rand_instance(seed, n, three_d);
        let strategy = [Strategy::Lb, Strategy::Mul, Strategy::Macs][strat];
        let sol = solve_random(&inst, strategy, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(validate_solution(&inst, &sol), Vec::<String>::new());
        let back = Solution::from_json(&sol.to_json()).unwrap();
        prop_assert_eq!(back, sol);
        prop_assert_eq!(ProblemInstance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn reward_bounds_and_order_invariance(seed in any::<u64>(), n in 1usize..12, three_d in any::<bool>()) {
        let inst = rand_instance(seed, n, three_d);
        let sol = solve_random(&inst, Strategy::Lb, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let r = reward(&sol.steps, inst.target_width, inst.target_depth).unwrap();
        prop_assert!(0.0 < r.compactness && r.compactness <= r.pyramidality && r.pyramidality <= 1.0);
        prop_assert!((0.0..=1.0).contains(&r.stability));
        prop_assert!((r.reward - (r.compactness + r.pyramidality + r.stability) / 3.0).abs() < 1e-12);
        let mut shuffled = sol.steps.clone();
        shuffled.reverse();
        prop_assert_eq!(reward(&shuffled, inst.target_width, inst.target_depth).unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_rollouts_respect_masks(seed in any::<u64>(), n in 1usize..9, three_d in any::<bool>()) {
        let mode = if three_d { Mode::Three } else { Mode::Two };
        let inst = rand_instance(seed, n, three_d);
        let policy = tiny_policy(8, mode, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sol, trace) = rollout(&policy, &inst, Strategy::Lb, Choice::Sample(&mut rng)).unwrap();
        for step in &trace.steps {
            prop_assert!(step.valid[step.chosen]);
            for (p, v) in step.probs.iter().zip(&step.valid) {
                prop_assert!(*v || *p == 0.0);
            }
            prop_assert!((step.probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        prop_assert_eq!(validate_solution(&inst, &sol), Vec::<String>::new());
    }

    #[test]
    fn rolling_window_invariants(seed in any::<u64>(), n in 5usize..14, cap in 2usize..6) {
        let inst = rand_instance(seed, n, false);
        let policy = tiny_policy(cap, Mode::Two, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sol, trace) = rolling_solve(&policy, &inst, Strategy::Lb, Choice::Sample(&mut rng)).unwrap();
        prop_assert_eq!(validate_solution(&inst, &sol), Vec::<String>::new());
        for (t, step) in trace.steps.iter().enumerate() {
            let mut boxes: Vec<usize> = step.states.iter().map(|s| s.box_idx).collect();
            boxes.dedup();
            prop_assert_eq!(boxes.len(), cap.min(n - t));
        }
    }

    #[test]
    fn rolling_with_room_matches_rollout(seed in any::<u64>(), n in 1usize..8) {
        let inst = rand_instance(seed, n, false);
        let policy = tiny_policy(8, Mode::Two, seed);
        let a = rollout(&policy, &inst, Strategy::Lb, Choice::Argmax).unwrap();
        let b = rolling_solve(&policy, &inst, Strategy::Lb, Choice::Argmax).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn window_is_the_whole_pile_when_it_fits() {
    let inst = rand_instance(3, 6, false);
    let g = PrecedenceGraph::extract(&inst).unwrap();
    let w = Omega::new(&g, 10);
    assert_eq!(w.slots(), (0..6).map(Some).collect::<Vec<_>>().as_slice());
    let hm = HeightMap::new(3, 1);
    assert_eq!(hm.compute_ems(2).unwrap(), brute_ems(&hm, 2));
}

