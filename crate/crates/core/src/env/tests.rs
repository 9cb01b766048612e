use std::collections::BTreeMap;

use super::*;
use crate::scalar::{int, rational};

fn point(n: usize, at: usize) -> Vec<Rational> {
    let mut v = vec![int(0); n];
    v[at] = int(1);
    v
}

/// One observation, rewards {0, 1}; action 0 pays 1, action 1 pays 0.
fn two_action() -> EnvironmentSpec {
    let ctx = Context::markov(0);
    let mut table = BTreeMap::new();
    table.insert((ctx.clone(), 0), point(2, 1));
    table.insert((ctx, 1), point(2, 0));
    EnvironmentSpec {
        obs_count: 1,
        rewards: vec![int(0), int(1)],
        actions: ActionLabel::numbered(2),
        context_length: 0,
        initial: point(2, 0),
        table,
    }
}

fn uniform(n: usize) -> Vec<Rational> {
    vec![rational(1, n as i64); n]
}

fn uniform_env(obs: usize, rewards: usize, actions: usize, m: usize) -> EnvironmentSpec {
    let rs = (0..rewards as i64).map(int).collect();
    let n = obs * rewards;
    EnvironmentSpec::tabulate(
        obs,
        rs,
        ActionLabel::numbered(actions),
        m,
        point(n, 0),
        |_, _| uniform(n),
        100_000,
    )
    .unwrap()
}

#[test]
fn deterministic_env_validates() {
    let env = Environment::validate(two_action(), true).unwrap();
    assert_eq!(env.contexts().len(), 1);
    assert_eq!(env.zero_reward(), 0);
    let h = History::initial(Percept::new(0, 0));
    assert_eq!(env.transition(&h, 0).unwrap(), point(2, 1).as_slice());
}

#[test]
fn short_row_is_rejected() {
    let mut spec = two_action();
    spec.table
        .insert((Context::markov(0), 1), vec![rational(9, 10), int(0)]);
    assert!(matches!(
        Environment::validate(spec, true),
        Err(Error::RowSum { .. })
    ));
}

#[test]
fn float_mode_tolerates_tiny_drift() {
    let mut spec = two_action();
    let eps = Rational::new(1.into(), num_bigint::BigInt::from(10u64.pow(14)));
    spec.table
        .insert((Context::markov(0), 1), vec![int(1) - &eps, int(0)]);
    assert!(Environment::validate(spec.clone(), true).is_err());
    assert!(Environment::validate(spec, false).is_ok());
}

#[test]
fn alias_rows_must_match() {
    let base = uniform_env(2, 2, 5, 0);
    let (padded, d) = base.padded(2);
    assert_eq!(d, 3);
    assert_eq!(padded.actions.len(), 8);
    assert_eq!(padded.actions[5].name, "a4_1");
    assert!(Environment::validate(padded.clone(), true).is_ok());

    let mut broken = padded;
    broken
        .table
        .insert((Context::markov(0), 5), vec![int(1), int(0), int(0), int(0)]);
    assert!(matches!(
        Environment::validate(broken, true),
        Err(Error::AliasMismatch { .. })
    ));
}

#[test]
fn missing_reachable_row() {
    let mut spec = two_action();
    spec.table.remove(&(Context::markov(0), 1));
    assert!(matches!(
        Environment::validate(spec, true),
        Err(Error::MissingRow(_))
    ));
}

#[test]
fn markov_rows_depend_on_last_observation_only() {
    let env = Environment::validate(uniform_env(2, 2, 2, 0), true).unwrap();
    let hs = env.enumerate_up_to(2, 10_000).unwrap();
    for h in &hs {
        for k in &hs {
            if h.last().obs == k.last().obs {
                for a in 0..2 {
                    assert_eq!(env.transition(h, a).unwrap(), env.transition(k, a).unwrap());
                }
            }
        }
    }
}

#[test]
fn uniform_row_is_quarter_each() {
    let env = Environment::validate(uniform_env(2, 2, 1, 0), true).unwrap();
    let h = History::initial(Percept::new(0, 0));
    assert_eq!(env.transition(&h, 0).unwrap(), uniform(4).as_slice());
}

/// Independent recursive walk counting positive-probability leaves.
fn tree_walk(env: &Environment, h: &History, depth: usize, out: &mut Vec<History>) {
    if depth == 0 {
        out.push(h.clone());
        return;
    }
    for a in 0..env.action_count() {
        let row = env.transition(h, a).unwrap().to_vec();
        for (i, p) in row.iter().enumerate() {
            if *p > int(0) {
                tree_walk(env, &h.extended(a, env.percept(i)), depth - 1, out);
            }
        }
    }
}

#[test]
fn enumeration_matches_tree_walk() {
    let mut spec = two_action();
    spec.rewards = vec![int(0)];
    spec.initial = vec![int(1)];
    for a in 0..2 {
        spec.table.insert((Context::markov(0), a), vec![int(1)]);
    }
    let env = Environment::validate(spec, true).unwrap();
    let hs = env.enumerate_histories(2, 100).unwrap();
    assert_eq!(hs.len(), 4);
    let mut walked = Vec::new();
    tree_walk(&env, &History::initial(Percept::new(0, 0)), 2, &mut walked);
    walked.sort();
    assert_eq!(hs, walked);

    let env = Environment::validate(uniform_env(2, 2, 3, 1), true).unwrap();
    let hs = env.enumerate_histories(2, 10_000).unwrap();
    let mut walked = Vec::new();
    tree_walk(&env, &History::initial(Percept::new(0, 0)), 2, &mut walked);
    walked.sort();
    assert_eq!(hs, walked);
    assert!(hs.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn depth_zero_is_initial_support() {
    let mut spec = uniform_env(2, 2, 2, 0);
    spec.initial = uniform(4);
    let env = Environment::validate(spec, true).unwrap();
    assert_eq!(env.enumerate_histories(0, 10).unwrap().len(), 4);
}

#[test]
fn enumeration_cap() {
    let env = Environment::validate(uniform_env(2, 2, 2, 0), true).unwrap();
    assert!(matches!(
        env.enumerate_histories(1, 2),
        Err(Error::BudgetExceeded { cap: 2 })
    ));
}

#[test]
fn path_probabilities_sum_to_one_per_action_sequence() {
    let env = Environment::validate(uniform_env(2, 2, 2, 1), true).unwrap();
    let hs = env.enumerate_histories(2, 10_000).unwrap();
    for seq in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        let total: Rational = hs
            .iter()
            .filter(|h| h.actions().eq(seq.iter().copied()))
            .map(|h| env.path_probability(h, |_| vec![int(1), int(1)]).unwrap())
            .sum();
        assert_eq!(total, int(1));
    }
}

#[test]
fn json_round_trip() {
    let spec = uniform_env(2, 2, 3, 1);
    let text = spec.to_json();
    assert_eq!(EnvironmentSpec::from_json(&text).unwrap(), spec);
}

#[test]
fn json_accepts_names_and_decimals() {
    let text = r#"{
        "obs_count": 1,
        "rewards": [0, "1/2"],
        "actions": [{"name": "left"}, {"name": "right"}],
        "context_length": 0,
        "initial": [1, 0],
        "table": {"0|left": [0.25, 0.75], "0|1": ["1/3", "2/3"]}
    }"#;
    let spec = EnvironmentSpec::from_json(text).unwrap();
    assert_eq!(spec.table[&(Context::markov(0), 0)][1], rational(3, 4));
    assert_eq!(spec.rewards[1], rational(1, 2));
    assert!(Environment::validate(spec, true).is_ok());
}

#[test]
fn missing_zero_reward_is_added() {
    let mut spec = two_action();
    spec.rewards = vec![int(1), int(2)];
    let env = Environment::validate(spec, true).unwrap();
    assert_eq!(env.reward_count(), 3);
    assert_eq!(env.reward(env.zero_reward()), &int(0));
    let h = History::initial(env.initial_support().next().unwrap().0);
    let row = env.transition(&h, 0).unwrap();
    assert_eq!(row.iter().sum::<Rational>(), int(1));
}
