//! Truncated-horizon value computation on the original and sequentialized processes.
//!
//! Both processes are finite once histories are cut down to their contexts: the
//! original process lives on reachable contexts, the sequentialized one on
//! `(context, pending prefix)` pairs. Values are computed as ladders `V_n`,
//! `n = 0..=N`, where `V_n` is the optimal (or policy) value of the `n`-step
//! truncated problem; `Q_n(s, a) = Σ p (r + disc·V_{n−1}(s'))`.

mod policy;
pub mod tree;

use num_traits::ToPrimitive;

pub use policy::{lift_stationary, PolicySpec, StatePolicy};

use crate::codec::{prefix_count, prefix_from_index, prefix_index, ActionCodec, CodeWord};
use crate::env::{Environment, History};
use crate::error::{Error, Result};
use crate::scalar::{exact_root, Rational, Scalar};
use crate::seqenv::{SeqEnv, SeqHistory, SeqStep};

/// Default cap on `states × (horizon + 1)` ladder cells.
pub const DEFAULT_NODE_BUDGET: usize = 50_000_000;

/// `λ = γ^{1/d}` in floating point.
pub fn lambda_of(gamma: f64, d: usize) -> f64 {
    assert!(d >= 1, "d ≥ 1");
    if d == 1 {
        gamma
    } else {
        gamma.powf(1.0 / d as f64)
    }
}

/// `λ` exactly, when `γ` is a perfect `d`-th power of a rational.
pub fn lambda_exact(gamma: &Rational, d: usize) -> Option<Rational> {
    exact_root(gamma, d as u32)
}

/// `γ`, `d` and the sequentialized discount `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscountPair {
    pub gamma: Rational,
    pub d: usize,
    pub lambda: f64,
    pub lambda_exact: Option<Rational>,
}

impl DiscountPair {
    pub fn new(gamma: Rational, d: usize) -> Result<Self> {
        let g = gamma.to_f64().unwrap_or(f64::NAN);
        if !(0.0..1.0).contains(&g) || d == 0 {
            return Err(Error::InvalidParam(format!(
                "need 0 ≤ γ < 1 and d ≥ 1, got γ = {gamma}, d = {d}"
            )));
        }
        Ok(Self {
            lambda: lambda_of(g, d),
            lambda_exact: lambda_exact(&gamma, d),
            gamma,
            d,
        })
    }

    pub fn gamma_f64(&self) -> f64 {
        crate::scalar::rational_to_f64(&self.gamma)
    }

    /// `λ` in the requested scalar type; exact scalars need `γ` to be a perfect power.
    pub fn lambda_as<V: Scalar>(&self) -> Result<V> {
        match &self.lambda_exact {
            Some(l) => Ok(V::from_rational(l)),
            None => V::from_rational(&self.gamma).root(self.d as u32).ok_or_else(|| {
                Error::InvalidParam(format!(
                    "γ = {} has no exact {}-th root; use floating point",
                    self.gamma, self.d
                ))
            }),
        }
    }

    /// `λ^d = γ`: symbolically when `λ` is rational, else within 1e-12.
    pub fn identity_holds(&self) -> bool {
        match &self.lambda_exact {
            Some(l) => num_traits::pow(l.clone(), self.d) == self.gamma,
            None => (self.lambda.powi(self.d as i32) - self.gamma_f64()).abs() <= 1e-12,
        }
    }
}

/// Geometric tail `range · disc^h / (1 − disc)`.
pub fn tail_bound(disc: f64, range: f64, h: usize) -> f64 {
    range * disc.powi(h as i32) / (1.0 - disc)
}

/// Smallest `H ≥ 1` whose tail bound is within `tol`.
pub fn horizon_for(disc: f64, range: f64, tol: f64) -> usize {
    assert!((0.0..1.0).contains(&disc) && tol > 0.0, "need 0 ≤ disc < 1, tol > 0");
    let mut h = 1;
    while tail_bound(disc, range, h) > tol {
        h += 1;
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<V> {
    pub next: usize,
    pub prob: V,
    pub reward: V,
}

/// A finite discounted process: `edges[s][a]` lists the positive-probability outcomes.
#[derive(Clone, Debug)]
pub struct Process<V> {
    disc: V,
    arity: usize,
    edges: Vec<Vec<Vec<Edge<V>>>>,
}

/// Dense id of the sequentialized state `(context, prefix)`.
pub fn seq_state(ctx: usize, prefix: &CodeWord, base: usize, d: usize) -> usize {
    ctx * prefix_count(base, d) + prefix_index(prefix, base)
}

impl<V: Scalar> Process<V> {
    pub fn new(disc: V, arity: usize, edges: Vec<Vec<Vec<Edge<V>>>>) -> Self {
        Self { disc, arity, edges }
    }

    /// The original process over reachable contexts.
    pub fn original(env: &Environment, gamma: V) -> Self {
        let edges = (0..env.contexts().len())
            .map(|c| {
                (0..env.action_count())
                    .map(|a| {
                        env.successors(c, a)
                            .into_iter()
                            .map(|(i, next, p)| Edge {
                                next,
                                prob: V::from_rational(p),
                                reward: V::from_rational(env.reward(env.percept(i).reward)),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::new(gamma, env.action_count(), edges)
    }

    /// The sequentialized process `ū P` over `(context, prefix)` states.
    pub fn sequentialized(seq: &SeqEnv, lambda: V) -> Result<Self> {
        let env = seq.env();
        let (base, d) = (seq.base(), seq.depth());
        let per = prefix_count(base, d);
        let mut edges = Vec::with_capacity(env.contexts().len() * per);
        for (c, ctx) in env.contexts().iter().enumerate() {
            for pi in 0..per {
                let prefix = prefix_from_index(pi, base);
                let mut row = Vec::with_capacity(base);
                for x in 0..base as u8 {
                    row.push(match seq.step_at(ctx, ctx.obs(), &prefix, x)? {
                        SeqStep::Filler(_) => vec![Edge {
                            next: seq_state(c, &prefix.pushed(x), base, d),
                            prob: V::one_value(),
                            reward: V::zero_value(),
                        }],
                        SeqStep::Real { action, .. } => env
                            .successors(c, action)
                            .into_iter()
                            .map(|(i, next, p)| Edge {
                                next: next * per,
                                prob: V::from_rational(p),
                                reward: V::from_rational(env.reward(env.percept(i).reward)),
                            })
                            .collect(),
                    });
                }
                edges.push(row);
            }
        }
        Ok(Self::new(lambda, base, edges))
    }

    pub fn states(&self) -> usize {
        self.edges.len()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn disc(&self) -> &V {
        &self.disc
    }

    pub fn edges(&self, s: usize, a: usize) -> &[Edge<V>] {
        &self.edges[s][a]
    }

    /// `Σ p (r + disc·next[s'])`.
    pub fn backup(&self, next: &[V], s: usize, a: usize) -> V {
        let mut acc = V::zero_value();
        for e in &self.edges[s][a] {
            let v = e.reward.plus(&self.disc.times(&next[e.next]));
            acc = acc.plus(&e.prob.times(&v));
        }
        acc
    }

    fn check_budget(&self, horizon: usize, budget: usize) -> Result<()> {
        let nodes = self.states().saturating_mul(horizon + 1);
        if nodes > budget {
            return Err(Error::HorizonTooLarge {
                horizon,
                nodes,
                budget,
            });
        }
        Ok(())
    }

    /// `V*_n` for `n = 0..=horizon`.
    pub fn optimal_ladder(&self, horizon: usize, budget: usize) -> Result<Ladder<V>> {
        self.check_budget(horizon, budget)?;
        let mut values = vec![vec![V::zero_value(); self.states()]];
        for _ in 0..horizon {
            let prev = values.last().unwrap();
            let next = (0..self.states())
                .map(|s| {
                    (0..self.arity)
                        .map(|a| self.backup(prev, s, a))
                        .reduce(V::max_of)
                        .unwrap()
                })
                .collect();
            values.push(next);
        }
        Ok(Ladder { values })
    }

    /// `V^π_n` for `n = 0..=horizon` under a stationary state policy.
    pub fn policy_ladder(
        &self,
        policy: &StatePolicy<V>,
        horizon: usize,
        budget: usize,
    ) -> Result<Ladder<V>> {
        self.check_budget(horizon, budget)?;
        if policy.len() != self.states() {
            return Err(Error::InvalidParam(format!(
                "policy covers {} states, process has {}",
                policy.len(),
                self.states()
            )));
        }
        let mut values = vec![vec![V::zero_value(); self.states()]];
        for _ in 0..horizon {
            let prev = values.last().unwrap();
            let next = (0..self.states())
                .map(|s| {
                    let mut acc = V::zero_value();
                    for (a, w) in policy[s].iter().enumerate() {
                        if w.as_f64() != 0.0 {
                            acc = acc.plus(&w.times(&self.backup(prev, s, a)));
                        }
                    }
                    acc
                })
                .collect();
            values.push(next);
        }
        Ok(Ladder { values })
    }

    /// Greedy actions at ladder level `n`, ties to the smallest index.
    pub fn greedy(&self, ladder: &Ladder<V>, n: usize) -> StatePolicy<V> {
        (0..self.states())
            .map(|s| {
                let q: Vec<V> = (0..self.arity).map(|a| ladder.q(self, n, s, a)).collect();
                let best = argmax_first(&q);
                let mut row = vec![V::zero_value(); self.arity];
                row[best] = V::one_value();
                row
            })
            .collect()
    }
}

/// Index of the first maximal entry.
pub fn argmax_first<V: PartialOrd>(values: &[V]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Value functions of every truncated problem up to a horizon.
#[derive(Clone, Debug)]
pub struct Ladder<V> {
    values: Vec<Vec<V>>,
}

impl<V: Scalar> Ladder<V> {
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn v(&self, n: usize, s: usize) -> &V {
        &self.values[n][s]
    }

    pub fn level(&self, n: usize) -> &[V] {
        &self.values[n]
    }

    /// `Q_n(s, a)`, with `Q_0 = 0`.
    pub fn q(&self, process: &Process<V>, n: usize, s: usize, a: usize) -> V {
        if n == 0 {
            V::zero_value()
        } else {
            process.backup(&self.values[n - 1], s, a)
        }
    }
}

/// Values of the original process at a fixed horizon `H`, optimal or under a policy.
#[derive(Clone, Debug)]
pub struct Planner<'e, V> {
    env: &'e Environment,
    process: Process<V>,
    ladder: Ladder<V>,
    policy: Option<StatePolicy<V>>,
    gamma: f64,
}

impl<'e, V: Scalar> Planner<'e, V> {
    /// Optimal values `Q*`, `V*` truncated at `horizon` steps.
    pub fn optimal(env: &'e Environment, gamma: V, horizon: usize, budget: usize) -> Result<Self> {
        let g = gamma.as_f64();
        let process = Process::original(env, gamma);
        let ladder = process.optimal_ladder(horizon, budget)?;
        Ok(Self {
            env,
            process,
            ladder,
            policy: None,
            gamma: g,
        })
    }

    /// Policy values `Q^Π`, `V^Π` of a stationary context policy.
    pub fn evaluate(
        env: &'e Environment,
        gamma: V,
        policy: StatePolicy<V>,
        horizon: usize,
        budget: usize,
    ) -> Result<Self> {
        let g = gamma.as_f64();
        let process = Process::original(env, gamma);
        let ladder = process.policy_ladder(&policy, horizon, budget)?;
        Ok(Self {
            env,
            process,
            ladder,
            policy: Some(policy),
            gamma: g,
        })
    }

    pub fn env(&self) -> &'e Environment {
        self.env
    }

    pub fn process(&self) -> &Process<V> {
        &self.process
    }

    pub fn ladder(&self) -> &Ladder<V> {
        &self.ladder
    }

    pub fn horizon(&self) -> usize {
        self.ladder.horizon()
    }

    pub fn policy(&self) -> Option<&StatePolicy<V>> {
        self.policy.as_ref()
    }

    /// Truncation error bound of the values at the planner's horizon.
    pub fn tail(&self) -> f64 {
        tail_bound(self.gamma, self.env.reward_range_f64(), self.horizon())
    }

    pub fn state_of(&self, h: &History) -> Result<usize> {
        self.env
            .context_id(&self.env.context_of(h))
            .ok_or_else(|| Error::UnreachableHistory(h.key()))
    }

    pub fn q_state(&self, s: usize, a: usize) -> V {
        self.ladder.q(&self.process, self.horizon(), s, a)
    }

    pub fn v_state(&self, s: usize) -> V {
        self.ladder.v(self.horizon(), s).clone()
    }

    /// `Q(h, a)`: `Q*` for an optimal planner, `Q^Π` for an evaluated policy.
    pub fn q(&self, h: &History, a: usize) -> Result<V> {
        Ok(self.q_state(self.state_of(h)?, a))
    }

    pub fn q_values(&self, h: &History) -> Result<Vec<V>> {
        let s = self.state_of(h)?;
        Ok((0..self.env.action_count()).map(|a| self.q_state(s, a)).collect())
    }

    pub fn v(&self, h: &History) -> Result<V> {
        Ok(self.v_state(self.state_of(h)?))
    }

    /// `Π*(h, 𝐱) ∈ argmax_{a ∈ 𝒜(𝐱)} Q*(h, a)`, ties to the smallest code word.
    pub fn restricted_argmax(&self, codec: &ActionCodec, h: &History, prefix: &CodeWord) -> Result<usize> {
        let s = self.state_of(h)?;
        let candidates = codec.restricted_actions(prefix);
        let q: Vec<V> = candidates.iter().map(|&a| self.q_state(s, a)).collect();
        Ok(candidates[argmax_first(&q)])
    }

    /// Deterministic greedy context policy, ties to the smallest action id.
    pub fn greedy_policy(&self) -> StatePolicy<V> {
        self.process.greedy(&self.ladder, self.horizon())
    }
}

/// Values of the sequentialized process with horizons matched to `H` original steps:
/// a state with `p` pending symbols is evaluated over `H·d − p` symbol steps.
#[derive(Clone, Debug)]
pub struct SeqPlanner<'s, 'e, V> {
    seq: &'s SeqEnv<'e>,
    process: Process<V>,
    ladder: Ladder<V>,
    steps: usize,
    policy: Option<StatePolicy<V>>,
    lambda: f64,
}

impl<'s, 'e, V: Scalar> SeqPlanner<'s, 'e, V> {
    pub fn optimal(seq: &'s SeqEnv<'e>, lambda: V, steps: usize, budget: usize) -> Result<Self> {
        let l = lambda.as_f64();
        let process = Process::sequentialized(seq, lambda)?;
        let ladder = process.optimal_ladder(steps * seq.depth(), budget)?;
        Ok(Self {
            seq,
            process,
            ladder,
            steps,
            policy: None,
            lambda: l,
        })
    }

    pub fn evaluate(
        seq: &'s SeqEnv<'e>,
        lambda: V,
        policy: StatePolicy<V>,
        steps: usize,
        budget: usize,
    ) -> Result<Self> {
        let l = lambda.as_f64();
        let process = Process::sequentialized(seq, lambda)?;
        let ladder = process.policy_ladder(&policy, steps * seq.depth(), budget)?;
        Ok(Self {
            seq,
            process,
            ladder,
            steps,
            policy: Some(policy),
            lambda: l,
        })
    }

    pub fn seq(&self) -> &'s SeqEnv<'e> {
        self.seq
    }

    pub fn process(&self) -> &Process<V> {
        &self.process
    }

    pub fn ladder(&self) -> &Ladder<V> {
        &self.ladder
    }

    pub fn policy(&self) -> Option<&StatePolicy<V>> {
        self.policy.as_ref()
    }

    /// Number of original steps `H` the horizons are matched to.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tail(&self) -> f64 {
        tail_bound(
            self.lambda,
            self.seq.env().reward_range_f64(),
            self.steps * self.seq.depth(),
        )
    }

    pub fn states_per_context(&self) -> usize {
        prefix_count(self.seq.base(), self.seq.depth())
    }

    /// Symbol steps evaluated at a state with `pending` buffered symbols.
    pub fn horizon_at(&self, pending: usize) -> usize {
        self.steps * self.seq.depth() - pending
    }

    pub fn state(&self, ctx: usize, prefix: &CodeWord) -> usize {
        seq_state(ctx, prefix, self.seq.base(), self.seq.depth())
    }

    pub fn state_of(&self, tau: &SeqHistory) -> Result<usize> {
        let cursor = self.seq.locate(tau)?;
        let env = self.seq.env();
        let ctx = env
            .context_id(&env.context_of(&cursor.history))
            .ok_or_else(|| Error::UnreachableHistory(tau.key()))?;
        Ok(self.state(ctx, &cursor.prefix))
    }

    pub fn q_state(&self, s: usize, pending: usize, x: u8) -> V {
        self.ladder.q(&self.process, self.horizon_at(pending), s, x as usize)
    }

    pub fn v_state(&self, s: usize, pending: usize) -> V {
        self.ladder.v(self.horizon_at(pending), s).clone()
    }

    /// `ū Q(τ, x)` at the matched horizon.
    pub fn q(&self, tau: &SeqHistory, x: u8) -> Result<V> {
        Ok(self.q_state(self.state_of(tau)?, tau.phase(), x))
    }

    pub fn v(&self, tau: &SeqHistory) -> Result<V> {
        Ok(self.v_state(self.state_of(tau)?, tau.phase()))
    }

    /// Greedy symbol policy over all states, each at its matched horizon.
    pub fn greedy_policy(&self) -> StatePolicy<V> {
        let per = self.states_per_context();
        (0..self.process.states())
            .map(|s| {
                let pending = prefix_from_index(s % per, self.seq.base()).len();
                let q: Vec<V> = (0..self.seq.base() as u8)
                    .map(|x| self.q_state(s, pending, x))
                    .collect();
                let mut row = vec![V::zero_value(); q.len()];
                row[argmax_first(&q)] = V::one_value();
                row
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
