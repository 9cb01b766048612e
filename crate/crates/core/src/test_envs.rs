//! Small fixed environments shared by the unit tests.

use std::collections::BTreeMap;

use crate::env::{ActionLabel, Context, Environment, EnvironmentSpec};
use crate::scalar::{int, rational, Rational};

pub fn point(n: usize, at: usize) -> Vec<Rational> {
    let mut v = vec![int(0); n];
    v[at] = int(1);
    v
}

/// A stochastic environment whose rows vary with context and action.
pub fn varied(obs: usize, rewards: usize, actions: usize, m: usize) -> Environment {
    let n = obs * rewards;
    let spec = EnvironmentSpec::tabulate(
        obs,
        (0..rewards as i64).map(|k| rational(k, (rewards as i64 - 1).max(1))).collect(),
        ActionLabel::numbered(actions),
        m,
        point(n, 0),
        |ctx, a| {
            let salt = ctx.key().bytes().map(|b| b as usize).sum::<usize>() + 3 * a;
            let w: Vec<i64> = (0..n).map(|i| ((salt + 5 * i) % 4) as i64).collect();
            let total: i64 = w.iter().sum();
            if total == 0 {
                return point(n, salt % n);
            }
            w.iter().map(|&x| rational(x, total)).collect()
        },
        100_000,
    )
    .unwrap();
    Environment::validate(spec, true).unwrap()
}

/// One observation; action `i` deterministically pays `rewards[i]`.
pub fn bandit(rewards: &[Rational]) -> Environment {
    let mut set: Vec<Rational> = rewards.to_vec();
    set.push(int(0));
    set.sort();
    set.dedup();
    let ctx = Context::markov(0);
    let mut table = BTreeMap::new();
    for (a, r) in rewards.iter().enumerate() {
        let at = set.iter().position(|x| x == r).unwrap();
        table.insert((ctx.clone(), a), point(set.len(), at));
    }
    let zero = set.iter().position(|x| *x == int(0)).unwrap();
    let spec = EnvironmentSpec {
        obs_count: 1,
        initial: point(set.len(), zero),
        rewards: set,
        actions: ActionLabel::numbered(rewards.len()),
        context_length: 0,
        table,
    };
    Environment::validate(spec, true).unwrap()
}

/// Each observation is absorbing and pays `pay[o]` forever; the start is uniform.
pub fn absorbing(pay: &[Rational], actions: usize) -> Environment {
    let mut set: Vec<Rational> = pay.to_vec();
    set.push(int(0));
    set.sort();
    set.dedup();
    let nr = set.len();
    let n = pay.len() * nr;
    let mut table = BTreeMap::new();
    let mut initial = vec![int(0); n];
    for (o, r) in pay.iter().enumerate() {
        let at = o * nr + set.iter().position(|x| x == r).unwrap();
        initial[o * nr] = rational(1, pay.len() as i64);
        for a in 0..actions {
            table.insert((Context::markov(o), a), point(n, at));
        }
    }
    let spec = EnvironmentSpec {
        obs_count: pay.len(),
        rewards: set,
        actions: ActionLabel::numbered(actions),
        context_length: 0,
        initial,
        table,
    };
    Environment::validate(spec, true).unwrap()
}
