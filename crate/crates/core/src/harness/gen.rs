//! Seeded random environments and crafted families.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionLabel, Context, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::scalar::{int, rational, Rational};

pub const MAX_OBS: usize = 4;
pub const MAX_REWARDS: usize = 4;
pub const MAX_ACTIONS: usize = 16;
pub const MAX_CONTEXT: usize = 2;
/// Largest table a generated environment may have.
pub const MAX_ROWS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    pub obs: usize,
    pub rewards: usize,
    pub actions: usize,
    pub context_length: usize,
}

impl Sizes {
    pub fn new(obs: usize, rewards: usize, actions: usize, context_length: usize) -> Self {
        Self {
            obs,
            rewards,
            actions,
            context_length,
        }
    }

    pub fn check(&self) -> Result<()> {
        let ok = (1..=MAX_OBS).contains(&self.obs)
            && (1..=MAX_REWARDS).contains(&self.rewards)
            && (1..=MAX_ACTIONS).contains(&self.actions)
            && self.context_length <= MAX_CONTEXT;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSizes(format!(
                "|O| = {}, |R| = {}, |A| = {}, m = {} exceeds |O| ≤ {MAX_OBS}, |R| ≤ {MAX_REWARDS}, |A| ≤ {MAX_ACTIONS}, m ≤ {MAX_CONTEXT}",
                self.obs, self.rewards, self.actions, self.context_length
            )))
        }
    }
}

/// Evenly spaced rewards `k/(n − 1)` in `[0, 1]`; always contains 0.
pub fn reward_grid(n: usize) -> Vec<Rational> {
    if n == 1 {
        return vec![int(0)];
    }
    (0..n as i64).map(|k| rational(k, n as i64 - 1)).collect()
}

/// A distribution over `n` outcomes with support size `max(1, round((1 − sparsity)·n))`
/// and integer weights in `1..=8`.
fn random_row(rng: &mut ChaCha8Rng, n: usize, sparsity: f64) -> Vec<Rational> {
    let k = (((1.0 - sparsity) * n as f64).round() as usize).clamp(1, n);
    let support = sample(rng, n, k).into_vec();
    let weights: Vec<i64> = support.iter().map(|_| rng.gen_range(1..=8)).collect();
    let total: i64 = weights.iter().sum();
    let mut row = vec![int(0); n];
    for (i, w) in support.into_iter().zip(weights) {
        row[i] = rational(w, total);
    }
    row
}

/// Seeded random finite-context environment. `sparsity = 1` gives point-mass rows.
pub fn random_env(seed: u64, sizes: Sizes, sparsity: f64) -> Result<EnvironmentSpec> {
    sizes.check()?;
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::InvalidParam(format!("sparsity {sparsity} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sizes.obs * sizes.rewards;
    let initial = random_row(&mut rng, n, sparsity);
    EnvironmentSpec::tabulate(
        sizes.obs,
        reward_grid(sizes.rewards),
        ActionLabel::numbered(sizes.actions),
        sizes.context_length,
        initial,
        |_, _| random_row(&mut rng, n, sparsity),
        MAX_ROWS,
    )
}

/// The action-scaling family: `|𝒜|` actions, two observations drawn uniformly and
/// independently of the action. An action pays when the last bit of its index is 1;
/// the payment depends only on the current observation, so the reward structure
/// is shared by every member of the family.
pub fn scaling_family(actions: usize, pay: &[Rational]) -> Result<EnvironmentSpec> {
    if !actions.is_power_of_two() || actions < 2 {
        return Err(Error::InvalidParam(format!("{actions} is not a power of two ≥ 2")));
    }
    let mut rewards: Vec<Rational> = pay.to_vec();
    rewards.push(int(0));
    rewards.sort();
    rewards.dedup();
    let obs = pay.len();
    let nr = rewards.len();
    let index = |r: &Rational| rewards.iter().position(|x| x == r).unwrap();
    let mut table = BTreeMap::new();
    for o in 0..obs {
        for a in 0..actions {
            let r = if a % 2 == 1 { pay[o].clone() } else { int(0) };
            let mut row = vec![int(0); obs * nr];
            for next in 0..obs {
                row[next * nr + index(&r)] = rational(1, obs as i64);
            }
            table.insert((Context::markov(o), a), row);
        }
    }
    let mut initial = vec![int(0); obs * nr];
    initial[index(&int(0))] = int(1);
    Ok(EnvironmentSpec {
        obs_count: obs,
        rewards,
        actions: ActionLabel::numbered(actions),
        context_length: 0,
        initial,
        table,
    })
}

/// `|𝒜|` is padded up to a power of `base` with aliases of the last action.
pub fn padded(spec: &EnvironmentSpec, base: usize) -> EnvironmentSpec {
    spec.padded(base).0
}

/// Seeds for the `i`-th environment of a family, decorrelated from the family seed.
pub fn member_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (i as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}
