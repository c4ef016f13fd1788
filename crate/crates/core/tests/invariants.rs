//! Property tests for the cross-module invariants.

use freqdyna_core::agents::{ReplayBuffer, SumTree};
use freqdyna_core::diffcore::{
    criterion_g, input_derivatives, Activation, AdamState, Criterion, MlpNet, ValueSelector,
};
use freqdyna_core::envmodel::{Environment, Maze, MountainCar, Transition};
use freqdyna_core::rng::{stream, Stream};
use freqdyna_core::searchctl::{
    harvest, AcceptThreshold, CovarianceEstimate, HillClimbConfig, Preconditioner, QField, SearchControlQueue,
};
use freqdyna_core::spectral::{local_fourier, Grid, SampledField};
use proptest::prelude::*;

fn mountain_car_net(seed: u64) -> MlpNet {
    let env = MountainCar::new(0.0);
    let spec = env.spec();
    MlpNet::new(&[2, 32, 32, 3], Activation::Tanh, &mut stream(seed, Stream::Init))
        .unwrap()
        .with_box_normalization(&spec.lower, &spec.upper)
        .unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn criterion_is_non_negative(seed in 0u64..1000, u in 0.0f64..1.0, v in 0.0f64..1.0, out in 0usize..4) {
        let net = MlpNet::new(&[2, 16, 16, 4], Activation::Tanh, &mut stream(seed, Stream::Init)).unwrap();
        let x = [4.0 * u - 2.0, 4.0 * v - 2.0];
        prop_assert!(criterion_g(&net, &x, ValueSelector::Output(out)).unwrap() >= 0.0);
        prop_assert!(criterion_g(&net, &x, ValueSelector::MaxOutput).unwrap() >= 0.0);
    }

    #[test]
    fn hessian_is_symmetric(seed in 0u64..1000, x in prop::array::uniform3(-3.0f64..3.0)) {
        let net = MlpNet::new(&[3, 32, 32, 2], Activation::Tanh, &mut stream(seed, Stream::Init)).unwrap();
        let h = input_derivatives(&net, &x, 1).unwrap().hessian;
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((h.get(i, j) - h.get(j, i)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn adam_counts_every_update(n in 1usize..50, steps in 1usize..30, g in -5.0f64..5.0) {
        let mut state = AdamState::new(n, 1e-3);
        let mut params = vec![0.5; n];
        for k in 0..steps {
            state.update(&mut params, &vec![g; n]).unwrap();
            prop_assert_eq!(state.step_count(), k as u64 + 1);
            prop_assert_eq!(params.len(), n);
        }
    }

    #[test]
    fn sum_tree_matches_flat_sums(
        cap in 1usize..64,
        ops in prop::collection::vec((0usize..64, 0.0f64..100.0, 0.0f64..1.0), 1..300),
    ) {
        let mut tree = SumTree::new(cap);
        let mut flat = vec![0.0; cap];
        for (i, p, u) in ops {
            let i = i % cap;
            tree.update(i, p);
            flat[i] = p;
            let total: f64 = flat.iter().sum();
            prop_assert!((tree.total() - total).abs() <= 1e-9 * total.max(1.0));
            prop_assert!(tree.max_internal_error() <= 1e-9);
            if total > 0.0 {
                prop_assert!(flat[tree.find(u * tree.total())] > 0.0);
            }
        }
    }

    #[test]
    fn replay_buffer_stays_within_capacity(cap in 1usize..40, pushes in 0usize..120) {
        let mut buf = ReplayBuffer::new(cap);
        for k in 0..pushes {
            buf.push(Transition { s: vec![k as f64], a: 0, s_next: vec![0.0], r: -1.0, terminal: false });
        }
        prop_assert_eq!(buf.iter().count(), pushes.min(cap));
        // The survivors are the most recent pushes.
        let mut kept: Vec<f64> = buf.iter().map(|t| t.s[0]).collect();
        kept.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (pushes.saturating_sub(cap)..pushes).map(|k| k as f64).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn mountain_car_steps_stay_in_bounds(u in 0.0f64..1.0, v in 0.0f64..1.0, a in 0usize..3, seed in 0u64..100) {
        let env = MountainCar::new(1.0);
        let spec = env.spec();
        let s = [
            spec.lower[0] + u * (spec.upper[0] - spec.lower[0]),
            spec.lower[1] + v * (spec.upper[1] - spec.lower[1]),
        ];
        let t = env.step(&s, a, &mut stream(seed, Stream::Env)).unwrap();
        prop_assert!(spec.contains(&t.s_next));
        prop_assert!(t.r.is_finite());
    }

    #[test]
    fn maze_moves_never_cross_walls(u in 0.0f64..1.0, v in 0.0f64..1.0, a in 0usize..4, seed in 0u64..1000) {
        let env = Maze::with_noise(0.01);
        let s = [u, v];
        prop_assume!(!env.in_wall(&s));
        let t = env.step(&s, a, &mut stream(seed, Stream::Env)).unwrap();
        prop_assert!(env.spec().contains(&t.s_next));
        // Independent of the segment test used by the dynamics: probe the path densely.
        for k in 0..=200 {
            let f = k as f64 / 200.0;
            let p = [s[0] + f * (t.s_next[0] - s[0]), s[1] + f * (t.s_next[1] - s[1])];
            prop_assert!(!env.in_wall(&p), "path {:?} -> {:?} enters a wall at {:?}", s, t.s_next, p);
        }
    }

    #[test]
    fn spectral_density_is_a_distribution(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..6),
        center in -0.5f64..0.5,
    ) {
        prop_assume!(coeffs.iter().any(|c| c.abs() > 1e-3));
        let grid = Grid::new(1, 512, -2.0, 2.0).unwrap();
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let mut y = [0.0];
                grid.point(i, &mut y);
                coeffs.iter().enumerate().map(|(m, c)| c * (std::f64::consts::PI * (m + 1) as f64 * y[0]).sin()).sum()
            })
            .collect();
        let spec = local_fourier(&SampledField::from_values(grid, values).unwrap(), &[center], 1.0).unwrap();
        prop_assert!((spec.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!((0..spec.len()).all(|i| spec.density(i) >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn harvested_states_are_in_bounds_and_spaced(seed in 0u64..1000, p in 0.0f64..=1.0) {
        let env = MountainCar::new(0.0);
        let spec = env.spec().clone();
        let net = mountain_car_net(seed);
        let mut rng = stream(seed, Stream::Env);
        let mut er = SearchControlQueue::new(1000);
        let mut cov = CovarianceEstimate::new(2);
        let mut eps = AcceptThreshold::new();
        let mut s = env.reset(&mut rng);
        for k in 0..300 {
            let t = env.step(&s, k % 3, &mut rng).unwrap();
            er.push(t.s.clone());
            cov.update(&t.s);
            eps.update(&t.s, &t.s_next);
            s = if t.terminal { env.reset(&mut rng) } else { t.s_next };
        }
        let pre = Preconditioner::new(cov.covariance());
        let field = QField { net: &net, criterion: Criterion::Full };
        let cfg = HillClimbConfig { p, m: 10, ..Default::default() };
        let mut queue = SearchControlQueue::new(10_000);
        let r = harvest(&mut queue, &er, &field, &pre, &cfg, &spec, eps.value(), &mut stream(seed, Stream::HillClimb)).unwrap();
        prop_assert!(queue.iter().all(|s| spec.contains(s)));
        if r.restarts == 0 {
            let states = queue.snapshot();
            for w in states.windows(2) {
                prop_assert!(dist(&w[0], &w[1]) / 2f64.sqrt() > eps.value());
            }
        }
    }
}
