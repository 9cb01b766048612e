//! Brute-force expectimax over explicit histories, without memoization or context
//! sharing. Exponential in depth; used to cross-check the ladder solvers.

use num_traits::Zero;

use crate::env::{Environment, History};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seqenv::{SeqEnv, SeqHistory, SeqObs};

/// A history-keyed policy; `None` means the row is missing.
pub type HistoryPolicy<'a, V> = dyn Fn(&History) -> Option<Vec<V>> + 'a;
pub type SeqHistoryPolicy<'a, V> = dyn Fn(&SeqHistory) -> Option<Vec<V>> + 'a;

struct Budget {
    left: usize,
    cap: usize,
    depth: usize,
}

impl Budget {
    fn new(cap: usize, depth: usize) -> Self {
        Self { left: cap, cap, depth }
    }

    fn spend(&mut self) -> Result<()> {
        if self.left == 0 {
            return Err(Error::HorizonTooLarge {
                horizon: self.depth,
                nodes: self.cap + 1,
                budget: self.cap,
            });
        }
        self.left -= 1;
        Ok(())
    }
}

/// Depth-`depth` optimal action values `Q*(h, ·)` by expectimax on `P`.
pub fn q_star<V: Scalar>(env: &Environment, h: &History, gamma: &V, depth: usize, cap: usize) -> Result<Vec<V>> {
    let mut budget = Budget::new(cap, depth);
    q_rec(env, h, gamma, depth, None, &mut budget)
}

/// Depth-`depth` policy action values `Q^Π(h, ·)`.
pub fn q_pi<V: Scalar>(
    env: &Environment,
    h: &History,
    gamma: &V,
    depth: usize,
    policy: &HistoryPolicy<V>,
    cap: usize,
) -> Result<Vec<V>> {
    let mut budget = Budget::new(cap, depth);
    q_rec(env, h, gamma, depth, Some(policy), &mut budget)
}

fn v_rec<V: Scalar>(
    env: &Environment,
    h: &History,
    gamma: &V,
    depth: usize,
    policy: Option<&HistoryPolicy<V>>,
    budget: &mut Budget,
) -> Result<V> {
    if depth == 0 {
        return Ok(V::zero_value());
    }
    let q = q_rec(env, h, gamma, depth, policy, budget)?;
    match policy {
        None => Ok(q.into_iter().reduce(V::max_of).unwrap()),
        Some(pi) => {
            let row = pi(h).ok_or_else(|| Error::MissingPolicyRow(h.key()))?;
            Ok(row
                .iter()
                .zip(&q)
                .fold(V::zero_value(), |acc, (w, v)| acc.plus(&w.times(v))))
        }
    }
}

fn q_rec<V: Scalar>(
    env: &Environment,
    h: &History,
    gamma: &V,
    depth: usize,
    policy: Option<&HistoryPolicy<V>>,
    budget: &mut Budget,
) -> Result<Vec<V>> {
    let mut out = Vec::with_capacity(env.action_count());
    for a in 0..env.action_count() {
        if depth == 0 {
            out.push(V::zero_value());
            continue;
        }
        let row = env.transition(h, a)?.to_vec();
        let mut acc = V::zero_value();
        for (i, p) in row.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            budget.spend()?;
            let pc = env.percept(i);
            let next = h.extended(a, pc);
            let tail = v_rec(env, &next, gamma, depth - 1, policy, budget)?;
            let r = V::from_rational(env.reward(pc.reward));
            acc = acc.plus(&V::from_rational(p).times(&r.plus(&gamma.times(&tail))));
        }
        out.push(acc);
    }
    Ok(out)
}

/// Depth-`depth` (in symbols) optimal values `ū Q*(τ, ·)` by expectimax on `ū P`.
pub fn seq_q_star<V: Scalar>(
    seq: &SeqEnv,
    tau: &SeqHistory,
    lambda: &V,
    depth: usize,
    cap: usize,
) -> Result<Vec<V>> {
    let mut budget = Budget::new(cap, depth);
    seq_q_rec(seq, tau, lambda, depth, None, &mut budget)
}

pub fn seq_q_pi<V: Scalar>(
    seq: &SeqEnv,
    tau: &SeqHistory,
    lambda: &V,
    depth: usize,
    policy: &SeqHistoryPolicy<V>,
    cap: usize,
) -> Result<Vec<V>> {
    let mut budget = Budget::new(cap, depth);
    seq_q_rec(seq, tau, lambda, depth, Some(policy), &mut budget)
}

pub fn seq_v<V: Scalar>(
    seq: &SeqEnv,
    tau: &SeqHistory,
    lambda: &V,
    depth: usize,
    policy: Option<&SeqHistoryPolicy<V>>,
    cap: usize,
) -> Result<V> {
    let mut budget = Budget::new(cap, depth);
    seq_v_rec(seq, tau, lambda, depth, policy, &mut budget)
}

fn seq_v_rec<V: Scalar>(
    seq: &SeqEnv,
    tau: &SeqHistory,
    lambda: &V,
    depth: usize,
    policy: Option<&SeqHistoryPolicy<V>>,
    budget: &mut Budget,
) -> Result<V> {
    if depth == 0 {
        return Ok(V::zero_value());
    }
    let q = seq_q_rec(seq, tau, lambda, depth, policy, budget)?;
    match policy {
        None => Ok(q.into_iter().reduce(V::max_of).unwrap()),
        Some(pi) => {
            let row = pi(tau).ok_or_else(|| Error::MissingPolicyRow(tau.key()))?;
            Ok(row
                .iter()
                .zip(&q)
                .fold(V::zero_value(), |acc, (w, v)| acc.plus(&w.times(v))))
        }
    }
}

fn seq_q_rec<V: Scalar>(
    seq: &SeqEnv,
    tau: &SeqHistory,
    lambda: &V,
    depth: usize,
    policy: Option<&SeqHistoryPolicy<V>>,
    budget: &mut Budget,
) -> Result<Vec<V>> {
    let env = seq.env();
    let last_real = seq.locate(tau)?.history.last().obs;
    let mut out = Vec::with_capacity(seq.base());
    for x in 0..seq.base() as u8 {
        if depth == 0 {
            out.push(V::zero_value());
            continue;
        }
        let row = seq.seq_transition(tau, x)?;
        let completes = tau.phase() + 1 == seq.depth();
        let mut acc = V::zero_value();
        for (i, p) in row.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            budget.spend()?;
            let pc = env.percept(i);
            let obs = if completes {
                SeqObs::plain(pc.obs)
            } else {
                seq.filler_obs(last_real, &tau.pending_code().pushed(x))
            };
            let next = tau.pushed(x, obs, pc.reward);
            let tail = seq_v_rec(seq, &next, lambda, depth - 1, policy, budget)?;
            let r = V::from_rational(env.reward(pc.reward));
            acc = acc.plus(&V::from_rational(p).times(&r.plus(&lambda.times(&tail))));
        }
        out.push(acc);
    }
    Ok(out)
}
