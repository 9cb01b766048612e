use super::*;
use crate::codec::prefix_from_index;
use crate::env::{Percept, DEFAULT_HISTORY_CAP};
use crate::scalar::{int, rational, rational_to_f64};
use crate::seqenv::FillerMode;
use crate::test_envs::{bandit, varied};

const BUDGET: usize = DEFAULT_NODE_BUDGET;

fn e0() -> History {
    History::initial(Percept::new(0, 0))
}

#[test]
fn lambda_examples() {
    assert_eq!(lambda_of(0.25, 2), 0.5);
    assert_eq!(lambda_of(0.5, 1), 0.5);
    for g in 1..10 {
        let g = g as f64 / 10.0;
        for d in 1..=10 {
            assert!((lambda_of(g, d).powi(d as i32) - g).abs() <= 1e-12);
        }
    }
    let pair = DiscountPair::new(rational(1, 4), 2).unwrap();
    assert_eq!(pair.lambda_exact, Some(rational(1, 2)));
    assert!(pair.identity_holds());
    let pair = DiscountPair::new(rational(1, 2), 3).unwrap();
    assert_eq!(pair.lambda_exact, None);
    assert!(pair.identity_holds());
    assert!(pair.lambda_as::<Rational>().is_err());
    assert!(DiscountPair::new(int(1), 2).is_err());
}

#[test]
fn horizon_examples() {
    assert_eq!(horizon_for(0.5, 1.0, 1.0 / 64.0), 7);
    assert_eq!(tail_bound(0.5, 1.0, 7), 1.0 / 64.0);
    assert_eq!(horizon_for(0.0, 1.0, 1e-9), 1);
    assert_eq!(horizon_for(0.5, 1.0, 10.0), 1);
}

#[test]
fn two_action_optimal_values() {
    let env = bandit(&[int(1), int(0)]);
    let p = Planner::optimal(&env, 0.5, 40, BUDGET).unwrap();
    let q = p.q_values(&e0()).unwrap();
    assert!((q[0] - 2.0).abs() <= p.tail());
    assert!((q[1] - 1.0).abs() <= p.tail());
    assert!((p.v(&e0()).unwrap() - 2.0).abs() <= p.tail());

    // truncated exactly: Q*_H(a1) = 2(1 − 2^{-H})
    let p = Planner::optimal(&env, rational(1, 2), 5, BUDGET).unwrap();
    assert_eq!(p.q(&e0(), 0).unwrap(), rational(2, 1) - rational(2, 32));
}

#[test]
fn four_action_values_and_restricted_argmax() {
    let env = bandit(&[int(0), rational(1, 3), rational(2, 3), int(1)]);
    let p = Planner::optimal(&env, 0.25, 30, BUDGET).unwrap();
    let want = [1.0 / 3.0, 2.0 / 3.0, 1.0, 4.0 / 3.0];
    for (a, w) in want.iter().enumerate() {
        assert!((p.q(&e0(), a).unwrap() - w).abs() <= p.tail());
    }
    assert!((p.v(&e0()).unwrap() - 4.0 / 3.0).abs() <= p.tail());
    let codec = ActionCodec::build(env.actions(), 2).unwrap();
    let word = |s: &str| CodeWord::parse(s, 2).unwrap();
    assert_eq!(p.restricted_argmax(&codec, &e0(), &word("1")).unwrap(), 3);
    assert_eq!(p.restricted_argmax(&codec, &e0(), &word("0")).unwrap(), 1);
    assert_eq!(p.restricted_argmax(&codec, &e0(), &word("")).unwrap(), 3);
    assert_eq!(p.restricted_argmax(&codec, &e0(), &word("01")).unwrap(), 1);
}

#[test]
fn ties_go_to_the_smallest_code_word() {
    let env = bandit(&[int(1), int(1), int(0), int(1)]);
    let p = Planner::optimal(&env, 0.5, 10, BUDGET).unwrap();
    let codec = ActionCodec::build(env.actions(), 2).unwrap();
    assert_eq!(p.restricted_argmax(&codec, &e0(), &CodeWord::empty()).unwrap(), 0);
    let reversed = ActionCodec::with_table(
        env.actions(),
        2,
        (0..4).map(|i| CodeWord::from_index(3 - i, 2, 2)).collect(),
    )
    .unwrap();
    assert_eq!(p.restricted_argmax(&reversed, &e0(), &CodeWord::empty()).unwrap(), 3);
}

#[test]
fn myopic_values_are_expected_rewards() {
    let env = varied(2, 3, 4, 1);
    let p = Planner::optimal(&env, 0.0, 5, BUDGET).unwrap();
    for h in env.enumerate_up_to(2, DEFAULT_HISTORY_CAP).unwrap() {
        for a in 0..4 {
            let row = env.transition(&h, a).unwrap();
            let mean: f64 = row
                .iter()
                .enumerate()
                .map(|(i, pr)| rational_to_f64(pr) * rational_to_f64(env.reward(env.percept(i).reward)))
                .sum();
            assert!((p.q(&h, a).unwrap() - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_policy_values() {
    let env = bandit(&[int(1), int(0)]);
    let uniform = vec![vec![0.5, 0.5]; env.contexts().len()];
    let p = Planner::evaluate(&env, 0.5, uniform, 40, BUDGET).unwrap();
    assert!((p.v(&e0()).unwrap() - 1.0).abs() <= p.tail());
    assert!((p.q(&e0(), 0).unwrap() - 1.5).abs() <= p.tail());
}

#[test]
fn optimal_policy_evaluates_to_optimal_values() {
    let env = varied(2, 2, 4, 1);
    let opt = Planner::optimal(&env, rational(1, 2), 6, BUDGET).unwrap();
    let policy = opt.greedy_policy();
    let eval = Planner::evaluate(&env, rational(1, 2), policy, 6, BUDGET).unwrap();
    for s in 0..env.contexts().len() {
        for a in 0..4 {
            assert_eq!(opt.q_state(s, a), eval.q_state(s, a));
        }
    }
}

#[test]
fn missing_policy_row() {
    let env = varied(2, 2, 2, 1);
    let mut spec = PolicySpec::default();
    for c in env.contexts().iter().filter(|c| c.trail().is_empty()) {
        spec.rows.insert(c.key(), vec![rational(1, 2); 2]);
    }
    assert!(matches!(
        spec.for_contexts::<f64>(&env),
        Err(Error::MissingPolicyRow(_))
    ));
}

#[test]
fn policy_spec_round_trip() {
    let env = varied(2, 2, 4, 0);
    let seq = SeqEnv::with_base(&env, 2, FillerMode::Repeat).unwrap();
    let rows: StatePolicy<Rational> = (0..env.contexts().len() * 3)
        .map(|s| vec![rational(s as i64 % 3, 3), rational(3 - s as i64 % 3, 3)])
        .collect();
    let spec = PolicySpec::from_seq_states(&seq, &rows);
    let back = PolicySpec::from_json(&spec.to_json()).unwrap();
    assert_eq!(back, spec);
    assert_eq!(back.for_seq_states::<Rational>(&seq).unwrap(), rows);
}

#[test]
fn ladder_matches_tree_expectimax_exactly() {
    let env = varied(2, 2, 2, 1);
    let gamma = rational(1, 2);
    let p = Planner::optimal(&env, gamma.clone(), 4, BUDGET).unwrap();
    for h in env.enumerate_up_to(2, DEFAULT_HISTORY_CAP).unwrap() {
        let oracle = tree::q_star(&env, &h, &gamma, 4, 10_000_000).unwrap();
        assert_eq!(p.q_values(&h).unwrap(), oracle);
    }
}

#[test]
fn policy_ladder_matches_tree() {
    let env = varied(2, 2, 2, 1);
    let gamma = rational(1, 3);
    let policy: StatePolicy<Rational> = (0..env.contexts().len())
        .map(|c| vec![rational(1 + c as i64 % 2, 3), rational(2 - c as i64 % 2, 3)])
        .collect();
    let p = Planner::evaluate(&env, gamma.clone(), policy.clone(), 4, BUDGET).unwrap();
    let lookup = |h: &History| {
        env.context_id(&env.context_of(h))
            .map(|c| policy[c].clone())
    };
    for h in env.enumerate_up_to(1, DEFAULT_HISTORY_CAP).unwrap() {
        let oracle = tree::q_pi(&env, &h, &gamma, 4, &lookup, 10_000_000).unwrap();
        assert_eq!(p.q_values(&h).unwrap(), oracle);
    }
}

#[test]
fn tree_budget_is_enforced() {
    let env = varied(2, 2, 4, 0);
    assert!(matches!(
        tree::q_star(&env, &e0(), &0.5, 6, 100),
        Err(Error::HorizonTooLarge { .. })
    ));
    assert!(matches!(
        Planner::optimal(&env, 0.5, 1000, 100),
        Err(Error::HorizonTooLarge { .. })
    ));
}

#[test]
fn sequentialized_examples() {
    let env = bandit(&[int(0), rational(1, 3), rational(2, 3), int(1)]);
    let seq = SeqEnv::with_base(&env, 2, FillerMode::Repeat).unwrap();
    let sp = SeqPlanner::optimal(&seq, 0.5, 30, BUDGET).unwrap();
    let tau = seq.sequentialize(&e0());
    assert!((sp.q(&tau, 1).unwrap() - 2.0 / 3.0).abs() <= 2.0 * sp.tail());
    let welded = seq.welded(&tau, &CodeWord::from_symbols(vec![1]));
    assert!((sp.q(&welded, 0).unwrap() - 1.0).abs() <= 2.0 * sp.tail());
}

#[test]
fn sequentialized_ladder_matches_tree() {
    let env = varied(2, 2, 4, 1);
    let seq = SeqEnv::with_base(&env, 2, FillerMode::Dummy(1)).unwrap();
    let lambda = rational(1, 2);
    let sp = SeqPlanner::optimal(&seq, lambda.clone(), 2, BUDGET).unwrap();
    for h in env.enumerate_up_to(1, DEFAULT_HISTORY_CAP).unwrap() {
        let tau = seq.sequentialize(&h);
        for pi in 0..3 {
            let t = seq.welded(&tau, &prefix_from_index(pi, 2));
            let depth = sp.horizon_at(t.phase());
            let oracle = tree::seq_q_star(&seq, &t, &lambda, depth, 10_000_000).unwrap();
            let got: Vec<Rational> = (0..2).map(|x| sp.q(&t, x).unwrap()).collect();
            assert_eq!(got, oracle);
        }
    }
}

#[test]
fn matched_horizons_give_exact_identities() {
    // γ = 1/4 with d = 2 has the rational λ = 1/2
    let env = varied(2, 2, 4, 1);
    let seq = SeqEnv::with_base(&env, 2, FillerMode::Repeat).unwrap();
    let (gamma, lambda) = (rational(1, 4), rational(1, 2));
    let steps = 3;
    let p = Planner::optimal(&env, gamma, steps, BUDGET).unwrap();
    let sp = SeqPlanner::optimal(&seq, lambda.clone(), steps, BUDGET).unwrap();
    let codec = seq.codec();
    for h in env.enumerate_up_to(2, DEFAULT_HISTORY_CAP).unwrap() {
        let tau = seq.sequentialize(&h);
        let q = p.q_values(&h).unwrap();
        // ū V* = λ^{d−1} V*
        assert_eq!(sp.v(&tau).unwrap(), &lambda * p.v(&h).unwrap());
        for pi in 0..3 {
            let prefix = prefix_from_index(pi, 2);
            let t = seq.welded(&tau, &prefix);
            for x in 0..2u8 {
                let best = codec
                    .restricted_actions(&prefix.pushed(x))
                    .into_iter()
                    .map(|a| q[a].clone())
                    .max()
                    .unwrap();
                let scale = if prefix.is_empty() { lambda.clone() } else { int(1) };
                assert_eq!(sp.q(&t, x).unwrap(), scale * best);
            }
        }
    }
}

#[test]
fn depth_one_sequentialization_is_the_identity_on_values() {
    let env = varied(2, 3, 2, 1);
    let seq = SeqEnv::with_base(&env, 2, FillerMode::Repeat).unwrap();
    let p = Planner::optimal(&env, rational(1, 2), 5, BUDGET).unwrap();
    let sp = SeqPlanner::optimal(&seq, rational(1, 2), 5, BUDGET).unwrap();
    for h in env.enumerate_up_to(2, DEFAULT_HISTORY_CAP).unwrap() {
        let tau = seq.sequentialize(&h);
        for a in 0..2 {
            assert_eq!(p.q(&h, a).unwrap(), sp.q(&tau, a as u8).unwrap());
        }
    }
}

#[test]
fn lifted_stationary_policy_matches_history_lifting() {
    let env = varied(2, 2, 8, 0);
    let seq = SeqEnv::with_base(&env, 2, FillerMode::Repeat).unwrap();
    let per = prefix_count(2, 3);
    let policy: StatePolicy<Rational> = (0..env.contexts().len() * per)
        .map(|s| vec![rational(1 + s as i64 % 4, 5), rational(4 - s as i64 % 4, 5)])
        .collect();
    let lifted = lift_stationary(&seq, &policy);
    for h in env.enumerate_up_to(2, DEFAULT_HISTORY_CAP).unwrap() {
        let c = env.context_id(&env.context_of(&h)).unwrap();
        let direct = seq
            .lift_policy(&h, |t| {
                let cursor = seq.locate(t)?;
                let cc = env.context_id(&env.context_of(&cursor.history)).unwrap();
                Ok(policy[seq_state(cc, &cursor.prefix, 2, 3)].clone())
            })
            .unwrap();
        assert_eq!(direct, lifted[c]);
        assert_eq!(direct.iter().sum::<Rational>(), int(1));
    }
}
