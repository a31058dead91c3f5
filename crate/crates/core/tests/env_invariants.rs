use proptest::prelude::*;
use srl_core::colayer::{ActionSpace, Cell};
use srl_core::env::dap::{HYPE_TRAIT, SATISFACTION_TRAIT};
use srl_core::env::gspp::straight_path;
use srl_core::env::{DapEnv, DapParams, Environment, GsppEnv, GsppParams, SmspEnv, SmspInstance, SmspParams};
use srl_core::rng::{from_seed, Rng};

fn random_action<E: Environment>(env: &E, state: &E::State, rng: &mut Rng) -> Vec<f64> {
    use rand::Rng as _;
    let layer = env.layer(state).unwrap();
    // scores ≤ 0 keep the grid layer in its valid domain
    let theta: Vec<f64> = (0..layer.dim()).map(|_| -rng.random::<f64>()).collect();
    layer.argmax(&theta).unwrap()
}

fn small_grid() -> GsppParams {
    GsppParams {
        rows: 6,
        cols: 6,
        steps: 15,
        ..GsppParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn smsp_expert_never_worse_than_greedy(seed in any::<u64>(), n in 1usize..7) {
        let params = SmspParams { jobs: n, ..SmspParams::default() };
        let i = SmspInstance::generate(n, &params, &mut from_seed(seed));
        let best = i.total_completion(&i.exhaustive_sequence().unwrap()).unwrap();
        let greedy = i.total_completion(&i.greedy_sequence()).unwrap();
        prop_assert!(best <= greedy + 1e-9);
    }

    #[test]
    fn smsp_identical_jobs_are_interchangeable(seed in any::<u64>()) {
        let params = SmspParams::default();
        let base = SmspInstance::generate(6, &params, &mut from_seed(seed));
        let mut release = base.release.clone();
        let mut processing = base.processing.clone();
        release[1] = release[0];
        processing[1] = processing[0];
        let i = SmspInstance::new(release, processing).unwrap();
        let mut order: Vec<usize> = (0..6).rev().collect();
        let a = i.total_completion(&order).unwrap();
        let p0 = order.iter().position(|&j| j == 0).unwrap();
        let p1 = order.iter().position(|&j| j == 1).unwrap();
        order.swap(p0, p1);
        prop_assert_eq!(a, i.total_completion(&order).unwrap());
    }

    #[test]
    fn smsp_features_bounded(seed in any::<u64>()) {
        let env = SmspEnv::new(SmspParams::default());
        let s = env.generate(&mut from_seed(seed));
        let f = env.observe(&s);
        prop_assert_eq!((f.rows(), f.cols()), (8, 8));
        prop_assert!(f.as_slice().iter().all(|x| x.is_finite() && (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn dap_expert_bounds_any_assortment(seed in any::<u64>()) {
        let mut rng = from_seed(seed);
        let env = DapEnv::sample(DapParams::default(), &mut rng).unwrap();
        let mut s = env.generate(&mut rng);
        for _ in 0..5 {
            let items = |a: &[f64]| env.selected(&s, a).unwrap();
            let best = env.expected_revenue(&s, &items(&env.expert(&s).unwrap()));
            let other = random_action(&env, &s, &mut rng);
            prop_assert!(env.expected_revenue(&s, &items(&other)) <= best + 1e-12);
            prop_assert!(env.expected_revenue(&s, &items(&env.greedy(&s).unwrap())) <= best + 1e-12);
            s = env.step(&s, &other, &mut rng).unwrap().0;
        }
    }

    #[test]
    fn dap_satisfaction_never_decreases(seed in any::<u64>()) {
        let mut rng = from_seed(seed);
        let env = DapEnv::sample(DapParams { steps: 30, ..DapParams::default() }, &mut rng).unwrap();
        let mut s = env.generate(&mut rng);
        while !env.is_terminal(&s) {
            let a = random_action(&env, &s, &mut rng);
            let (next, r) = env.step(&s, &a, &mut rng).unwrap();
            prop_assert!(r >= 0.0);
            for (old, new) in s.traits.iter().zip(&next.traits) {
                prop_assert!(new[SATISFACTION_TRAIT] >= old[SATISFACTION_TRAIT]);
            }
            s = next;
        }
    }

    #[test]
    fn gspp_rho_positive_and_rewards_negative(seed in any::<u64>()) {
        let mut rng = from_seed(seed);
        let env = GsppEnv::sample(small_grid(), &mut rng).unwrap();
        let mut s = env.generate(&mut rng);
        let mut total = 0.0;
        while !env.is_terminal(&s) {
            let a = random_action(&env, &s, &mut rng);
            let path = env.path(&s, &a).unwrap();
            prop_assert_eq!(path[0], s.robot);
            prop_assert_eq!(*path.last().unwrap(), s.target);
            prop_assert!(path.windows(2).all(|w| w[0].is_adjacent(&w[1])));
            let (next, r) = env.step(&s, &a, &mut rng).unwrap();
            prop_assert!(r < 0.0 && r.is_finite());
            prop_assert!(next.rho > 0.0);
            prop_assert_ne!(next.robot, next.target);
            total += r;
            s = next;
        }
        prop_assert!(total < 0.0 && total.is_finite());
    }

    #[test]
    fn gspp_expert_cheapest_immediate_path(seed in any::<u64>()) {
        let mut rng = from_seed(seed);
        let env = GsppEnv::sample(small_grid(), &mut rng).unwrap();
        let s = env.generate(&mut rng);
        let cost = |a: &[f64]| -> f64 {
            env.path(&s, a).unwrap().iter().map(|&c| s.cost(s.index(c))).sum()
        };
        let expert = cost(&env.expert(&s).unwrap());
        prop_assert!(expert <= cost(&env.greedy(&s).unwrap()) + 1e-12);
        prop_assert!(expert <= cost(&random_action(&env, &s, &mut rng)) + 1e-12);
    }

    #[test]
    fn steps_are_deterministic_given_stream(seed in any::<u64>()) {
        let mut rng = from_seed(seed);
        let dap = DapEnv::sample(DapParams::default(), &mut rng).unwrap();
        let s = dap.generate(&mut rng);
        let a = random_action(&dap, &s, &mut rng);
        prop_assert_eq!(dap.step(&s, &a, &mut from_seed(7)).unwrap(), dap.step(&s, &a, &mut from_seed(7)).unwrap());

        let gspp = GsppEnv::sample(small_grid(), &mut rng).unwrap();
        let s = gspp.generate(&mut rng);
        let a = random_action(&gspp, &s, &mut rng);
        prop_assert_eq!(gspp.step(&s, &a, &mut from_seed(7)).unwrap(), gspp.step(&s, &a, &mut from_seed(7)).unwrap());
    }
}

#[test]
fn hype_fully_decays_after_purchase() {
    let mut rng = from_seed(3);
    let env = DapEnv::sample(DapParams::default(), &mut rng).unwrap();
    let s0 = env.generate(&mut rng);
    let a = env.greedy(&s0).unwrap();
    // find a draw in which an item sells
    let (s1, item) = (0..1000)
        .find_map(|seed| {
            let (next, r) = env.step(&s0, &a, &mut from_seed(seed)).unwrap();
            (r > 0.0).then(|| {
                let item = (0..s0.traits.len())
                    .find(|&i| next.traits[i][SATISFACTION_TRAIT] > s0.traits[i][SATISFACTION_TRAIT])
                    .unwrap();
                (next, item)
            })
        })
        .expect("some purchase");
    assert!((s1.traits[item][HYPE_TRAIT] - s0.traits[item][HYPE_TRAIT] - 0.5).abs() < 1e-12);

    // show the item nowhere for four steps: no repurchase possible
    let others: Vec<usize> = (0..s0.traits.len()).filter(|&i| i != item).take(4).collect();
    let mut s = s1;
    for k in 0..4 {
        let action = env.assortment(&s, &others);
        s = env.step(&s, &action, &mut from_seed(100 + k)).unwrap().0;
    }
    assert!((s.traits[item][HYPE_TRAIT] - s0.traits[item][HYPE_TRAIT]).abs() < 1e-12);
    assert!(s.ledger.iter().all(|e| e.item != item));
}

#[test]
fn gspp_straight_path_goes_diagonal_first() {
    let path = straight_path(Cell::new(0, 0), Cell::new(2, 4));
    let expected = [(0, 0), (1, 1), (2, 2), (2, 3), (2, 4)];
    assert_eq!(path, expected.map(|(r, c)| Cell::new(r, c)).to_vec());
}
