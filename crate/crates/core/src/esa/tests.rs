use super::*;
use crate::env::DEFAULT_HISTORY_CAP;
use crate::planner::Planner;
use crate::scalar::{int, rational};
use crate::test_envs::{absorbing, bandit, varied};

const CAP: usize = DEFAULT_HISTORY_CAP;

#[test]
fn constant_q_collapses_to_one_cell() {
    let env = bandit(&[int(1), int(0), rational(1, 2), int(1)]);
    for mode in [AbstractionMode::Plain, AbstractionMode::Binarized] {
        let map = build_abstraction(&env, mode, 0.01, 0.5, 3, CAP).unwrap();
        if mode == AbstractionMode::Plain {
            assert_eq!(map.occupied(), 1);
        }
        assert!(map.max_spread() <= map.delta());
    }
}

#[test]
fn coarse_grid_is_one_cell() {
    let env = varied(2, 3, 4, 1);
    let gamma = 0.5;
    let delta = env.reward_range_f64() / (1.0 - gamma);
    let map = build_abstraction(&env, AbstractionMode::Plain, delta, gamma, 2, CAP).unwrap();
    assert_eq!(map.occupied(), 1);
}

#[test]
fn value_gap_separates_cells() {
    // Q* is 0 in observation 0 and 1/(1 − γ) in observation 1
    let env = absorbing(&[int(0), int(1)], 2);
    let gamma = 0.5;
    let delta = (1.0 / (1.0 - gamma)) / 3.0;
    let map = build_abstraction(&env, AbstractionMode::Plain, delta, gamma, 2, CAP).unwrap();
    assert!(map.occupied() >= 2);
    assert!(map.max_spread() <= delta);
}

#[test]
fn binarized_census_counts_partial_cells() {
    let env = varied(2, 2, 4, 0);
    let map = build_abstraction(&env, AbstractionMode::Binarized, 0.05, 0.5, 2, CAP).unwrap();
    let census = map.census();
    assert!(census.partial > 0 && census.complete > 0);
    assert!(census.occupied <= census.complete + census.partial);
    assert!(map.max_spread() <= map.delta());
}

#[test]
fn fine_surrogate_of_an_mdp_is_the_mdp() {
    let env = varied(3, 2, 2, 0);
    let gamma = 0.5;
    let map = build_abstraction(&env, AbstractionMode::Plain, 1e-6, gamma, 3, CAP).unwrap();
    assert_eq!(map.occupied(), env.contexts().len());
    let mdp = build_surrogate(&map, Weighting::Visit).unwrap();
    assert!(mdp.row_error() < 1e-12);
    for c in 0..env.contexts().len() {
        let cell = map.cell_of_state(c).unwrap();
        for a in 0..2 {
            let mut expected = vec![0.0; mdp.states()];
            let mut r = 0.0;
            for (i, next, p) in env.successors(c, a) {
                let p = rational_to_f64(p);
                expected[map.cell_of_state(next).unwrap()] += p;
                r += p * rational_to_f64(env.reward(env.percept(i).reward));
            }
            for (x, y) in mdp.transition[cell][a].iter().zip(&expected) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!((mdp.reward[cell][a] - r).abs() < 1e-12);
        }
    }
}

#[test]
fn single_cell_surrogate_averages_rewards() {
    let env = varied(2, 3, 2, 0);
    let map = build_abstraction(&env, AbstractionMode::Plain, 1e6, 0.5, 2, CAP).unwrap();
    assert_eq!(map.occupied(), 1);
    for weighting in [Weighting::Uniform, Weighting::Visit] {
        let mdp = build_surrogate(&map, weighting).unwrap();
        assert_eq!(mdp.states(), 2);
        for a in 0..2 {
            let mean: f64 = mdp.weights[0]
                .iter()
                .map(|&(i, w)| {
                    let s = map.members()[i].state;
                    w * map
                        .process()
                        .edges(s, a)
                        .iter()
                        .map(|e| e.prob * e.reward)
                        .sum::<f64>()
                })
                .sum();
            assert!((mdp.reward[0][a] - mean).abs() < 1e-12);
            assert!((mdp.transition[0][a][0] - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn weightings_agree_on_singleton_cells() {
    let env = absorbing(&[int(0), rational(1, 2), int(1)], 2);
    let map = build_abstraction(&env, AbstractionMode::Plain, 0.01, 0.5, 2, CAP).unwrap();
    let a = build_surrogate(&map, Weighting::Uniform).unwrap();
    let b = build_surrogate(&map, Weighting::Visit).unwrap();
    let flat = |m: &SurrogateMdp| -> Vec<f64> {
        m.transition.iter().flatten().flatten().chain(m.reward.iter().flatten()).copied().collect()
    };
    for (x, y) in flat(&a).iter().zip(flat(&b)) {
        assert!((x - y).abs() < 1e-12);
    }
}

fn one_state(rewards: Vec<f64>) -> SurrogateMdp {
    let k = rewards.len();
    SurrogateMdp {
        transition: vec![vec![vec![1.0]; k]],
        reward: vec![rewards],
        sink: 1,
        weights: vec![vec![(0, 1.0)]],
    }
}

#[test]
fn one_state_surrogate_closed_form() {
    let (policy, values) = solve_surrogate(&one_state(vec![0.2, 0.7, 0.7]), 0.5, 1e-12);
    assert_eq!(policy, vec![1]);
    assert!((values[0] - 1.4).abs() < 1e-11);
}

#[test]
fn two_state_surrogate_matches_hand_solution() {
    // state 0: stay (r=1) or move (r=0); state 1: stay (r=2) or move (r=0)
    let mdp = SurrogateMdp {
        transition: vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ],
        reward: vec![vec![1.0, 0.0], vec![2.0, 0.0]],
        sink: 2,
        weights: vec![],
    };
    // V1 = 2/(1 − ½) = 4, V0 = max(1 + ½V0, ½V1) = max(2, 2): ties keep "stay"
    let (policy, values) = solve_surrogate(&mdp, 0.5, 1e-12);
    assert!((values[1] - 4.0).abs() < 1e-11);
    assert!((values[0] - 2.0).abs() < 1e-11);
    assert_eq!(policy, vec![0, 0]);

    let (_, coarse) = solve_surrogate(&mdp, 0.5, 1e-3);
    let (_, fine) = solve_surrogate(&mdp, 0.5, 5e-4);
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn empty_cells_are_rejected() {
    let env = varied(2, 2, 2, 0);
    let mut map = build_abstraction(&env, AbstractionMode::Plain, 0.1, 0.5, 1, CAP).unwrap();
    map.cells.push(vec![i64::MAX; 2]);
    assert!(matches!(
        build_surrogate(&map, Weighting::Uniform),
        Err(Error::EmptyCell(_))
    ));
}

#[test]
fn loss_of_optimal_and_uniform_policies() {
    let env = bandit(&[int(1), int(0)]);
    let opt = Planner::optimal(&env, 0.5, 60, DEFAULT_NODE_BUDGET).unwrap();
    let report = policy_loss(&env, &opt.greedy_policy(), 0.5, 2, 1e-9).unwrap();
    assert!(report.loss.abs() <= 2.0 * report.tail);
    let uniform = vec![vec![0.5, 0.5]; env.contexts().len()];
    let report = policy_loss(&env, &uniform, 0.5, 2, 1e-9).unwrap();
    assert!((report.loss - 1.0).abs() <= 2.0 * report.tail);
}

#[test]
fn fine_binarized_surrogate_policy_is_near_optimal() {
    let env = varied(2, 2, 4, 1);
    let gamma = 0.5;
    let map = build_abstraction(&env, AbstractionMode::Binarized, 1e-4, gamma, 3, CAP).unwrap();
    let mdp = build_surrogate(&map, Weighting::Visit).unwrap();
    let (abstract_policy, _) = solve_surrogate(&mdp, map.disc(), 1e-9);
    let policy = induced_policy(&env, &map, &abstract_policy).unwrap();
    let report = policy_loss(&env, &policy, gamma, 3, 1e-9).unwrap();
    assert!(report.loss < 0.05, "loss {}", report.loss);
}

#[test]
fn bound_examples() {
    let r1 = int(1);
    assert_eq!(
        bound_plain(&rational(1, 10), &rational(1, 2), 4, &r1).unwrap(),
        int(655_360_000)
    );
    assert_eq!(bound_plain(&int(1), &int(0), 2, &r1).unwrap(), int(4));
    assert_eq!(bound_plain(&int(1), &int(0), 2, &int(2)).unwrap(), int(16));
    let report = bound_binary(&rational(1, 10), &rational(1, 2), 4, &r1).unwrap();
    assert_eq!(report.binary_bound.exact, "74649600");
    assert_eq!(report.d, 2);
    assert!(report.certificate_holds);
    assert!(bound_binary(&rational(1, 10), &int(0), 4, &r1).is_err());

    for g in 1..10 {
        let gamma = rational(g, 10);
        let eps = rational(1, 7);
        let two = bound_binary(&eps, &gamma, 2, &r1).unwrap();
        assert_eq!(
            two.binary_asymptotic_bound.exact,
            format_rational_of(&bound_plain(&eps, &gamma, 2, &r1).unwrap())
        );
    }
}

fn format_rational_of(r: &Rational) -> String {
    crate::scalar::format_rational(r)
}

#[test]
fn padding_is_applied_before_the_binary_bound() {
    let five = bound_binary(&rational(1, 10), &rational(1, 2), 5, &int(1)).unwrap();
    let eight = bound_binary(&rational(1, 10), &rational(1, 2), 8, &int(1)).unwrap();
    assert_eq!(five.d, 3);
    assert_eq!(five.binary_bound, eight.binary_bound);
    assert_eq!(five.padded_action_count, 8);
}

#[test]
fn covering_depth_witnesses_every_context() {
    for (env, m) in [(varied(2, 2, 2, 0), 0), (varied(2, 2, 4, 1), 1), (varied(2, 2, 2, 2), 2)] {
        assert_eq!(env.context_length(), m);
        let k = covering_depth(&env);
        let seen: std::collections::BTreeSet<_> = env
            .enumerate_up_to(k - 1, CAP)
            .unwrap()
            .iter()
            .map(|h| env.context_id(&env.context_of(h)))
            .collect();
        assert_eq!(seen.len(), env.contexts().len());
        if k >= 2 {
            let shallower: std::collections::BTreeSet<_> = env
                .enumerate_up_to(k - 2, CAP)
                .unwrap()
                .iter()
                .map(|h| env.context_id(&env.context_of(h)))
                .collect();
            assert!(shallower.len() < env.contexts().len());
        }
    }
}
