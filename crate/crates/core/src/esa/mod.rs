//! ε-Q-uniform state aggregation: Q*-grid abstractions, surrogate MDPs, and the
//! state-count bounds for plain and binarized action spaces.

mod bounds;

use std::collections::BTreeMap;

pub use bounds::{bound_binary, bound_plain, lambda_certificate, BoundReport, BoundValue};

use crate::codec::{prefix_count, prefix_from_index, ActionCodec, CodeWord};
use crate::env::{Context, Environment, History};
use crate::error::{Error, Result};
use crate::planner::{
    argmax_first, horizon_for, lambda_of, lift_stationary, seq_state, Process, StatePolicy,
    DEFAULT_NODE_BUDGET,
};
use crate::scalar::{rational_to_f64, Rational};
use crate::seqenv::{FillerMode, SeqEnv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbstractionMode {
    /// Cells of `Q*(h, ·)` over `𝒜` on the original process.
    Plain,
    /// Cells of `ū Q*(τ, ·)` over `ℬ = {0, 1}` on the sequentialized process.
    Binarized,
}

/// How member histories are weighted inside a cell when building the surrogate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    /// Probability of reaching the member under the uniformly random policy.
    #[default]
    Visit,
}

/// An enumerated history: the complete part and, in binarized mode, a pending prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub history: History,
    pub prefix: CodeWord,
    pub state: usize,
    pub visit: f64,
}

/// Q* values are converged to within this bound before gridding.
const Q_TOL: f64 = 1e-10;

/// A history-to-cell map `φ(h) = ⌊Q*(h, ·)/Δ⌋` with its occupied-cell census.
#[derive(Clone, Debug)]
pub struct AbstractionMap {
    mode: AbstractionMode,
    delta: f64,
    gamma: f64,
    disc: f64,
    depth: usize,
    codec: Option<ActionCodec>,
    process: Process<f64>,
    q: Vec<Vec<f64>>,
    cells: Vec<Vec<i64>>,
    cell_index: BTreeMap<Vec<i64>, usize>,
    members: Vec<Member>,
    member_cell: Vec<usize>,
}

fn grid(q: &[f64], delta: f64) -> Vec<i64> {
    q.iter().map(|v| (v / delta).floor() as i64).collect()
}

fn converged_q(process: &Process<f64>, range: f64) -> Result<Vec<Vec<f64>>> {
    let disc = *process.disc();
    let n = horizon_for(disc, range.max(f64::MIN_POSITIVE), Q_TOL);
    let ladder = process.optimal_ladder(n, DEFAULT_NODE_BUDGET)?;
    Ok((0..process.states())
        .map(|s| (0..process.arity()).map(|a| ladder.q(process, n, s, a)).collect())
        .collect())
}

/// Probability of `h` under the uniformly random policy over `𝒜`.
fn uniform_path_probability(env: &Environment, h: &History) -> Result<f64> {
    let n = env.action_count() as i64;
    let w = vec![Rational::new(1.into(), n.into()); env.action_count()];
    Ok(rational_to_f64(&env.path_probability(h, |_| w.clone())?))
}

/// Smallest enumeration depth that witnesses every reachable context with every
/// pending prefix: one more than the depth at which the last context is first reached.
pub fn covering_depth(env: &Environment) -> usize {
    let m = env.context_length();
    let mut level = vec![usize::MAX; env.contexts().len()];
    let mut frontier: Vec<usize> = env
        .initial_support()
        .filter_map(|(p, _)| env.context_id(&Context::of_percept(p, m)))
        .collect();
    let mut depth = 0;
    let mut last = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for c in frontier {
            if level[c] != usize::MAX {
                continue;
            }
            level[c] = depth;
            last = depth;
            for a in 0..env.action_count() {
                next.extend(env.successors(c, a).into_iter().map(|(_, n, _)| n));
            }
        }
        frontier = next;
        depth += 1;
    }
    last + 1
}

/// Builds `φ` from histories enumerated to `depth` original steps. In binarized mode
/// every complete history shorter than `depth` also contributes its partial extensions.
pub fn build_abstraction(
    env: &Environment,
    mode: AbstractionMode,
    delta: f64,
    gamma: f64,
    depth: usize,
    cap: usize,
) -> Result<AbstractionMap> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParam(format!("grid width must be positive, got {delta}")));
    }
    let histories = env.enumerate_up_to(depth, cap)?;
    let range = env.reward_range_f64();
    let state_of = |h: &History| env.context_id(&env.context_of(h)).expect("enumerated");
    let (process, codec, disc, members) = match mode {
        AbstractionMode::Plain => {
            let process = Process::original(env, gamma);
            let members = histories
                .iter()
                .map(|h| {
                    Ok(Member {
                        state: state_of(h),
                        visit: uniform_path_probability(env, h)?,
                        history: h.clone(),
                        prefix: CodeWord::empty(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (process, None, gamma, members)
        }
        AbstractionMode::Binarized => {
            let codec = ActionCodec::build(env.actions(), 2)?;
            let d = codec.depth();
            let lambda = lambda_of(gamma, d);
            let seq = SeqEnv::new(env, codec.clone(), FillerMode::Repeat)?;
            let process = Process::sequentialized(&seq, lambda)?;
            let per = prefix_count(2, d);
            let mut members = Vec::new();
            for h in &histories {
                let visit = uniform_path_probability(env, h)?;
                let prefixes = if h.steps() < depth { per } else { 1 };
                for pi in 0..prefixes {
                    let prefix = prefix_from_index(pi, 2);
                    if members.len() == cap {
                        return Err(Error::BudgetExceeded { cap });
                    }
                    members.push(Member {
                        state: seq_state(state_of(h), &prefix, 2, d),
                        visit: visit * 0.5f64.powi(prefix.len() as i32),
                        history: h.clone(),
                        prefix,
                    });
                }
            }
            (process, Some(codec), lambda, members)
        }
    };
    let q = converged_q(&process, range)?;
    let mut cell_keys: Vec<Vec<i64>> = members.iter().map(|m| grid(&q[m.state], delta)).collect();
    let mut cells = cell_keys.clone();
    cells.sort();
    cells.dedup();
    let cell_index: BTreeMap<Vec<i64>, usize> =
        cells.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let member_cell = cell_keys.drain(..).map(|k| cell_index[&k]).collect();
    Ok(AbstractionMap {
        mode,
        delta,
        gamma,
        disc,
        depth,
        codec,
        process,
        q,
        cells,
        cell_index,
        members,
        member_cell,
    })
}

/// Occupied-cell totals, split by whether the members are complete or partial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub occupied: usize,
    pub complete: usize,
    pub partial: usize,
    pub members: usize,
}

impl AbstractionMap {
    pub fn mode(&self) -> AbstractionMode {
        self.mode
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `γ` in plain mode, `λ` in binarized mode.
    pub fn disc(&self) -> f64 {
        self.disc
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn codec(&self) -> Option<&ActionCodec> {
        self.codec.as_ref()
    }

    pub fn process(&self) -> &Process<f64> {
        &self.process
    }

    pub fn q(&self, state: usize) -> &[f64] {
        &self.q[state]
    }

    pub fn cells(&self) -> &[Vec<i64>] {
        &self.cells
    }

    pub fn occupied(&self) -> usize {
        self.cells.len()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member_cell(&self, member: usize) -> usize {
        self.member_cell[member]
    }

    /// Cell of an arbitrary process state, if occupied by some member.
    pub fn cell_of_state(&self, state: usize) -> Option<usize> {
        self.cell_index.get(&grid(&self.q[state], self.delta)).copied()
    }

    pub fn census(&self) -> Census {
        let mut complete = std::collections::BTreeSet::new();
        let mut partial = std::collections::BTreeSet::new();
        for (m, &c) in self.members.iter().zip(&self.member_cell) {
            if m.prefix.is_empty() {
                complete.insert(c);
            } else {
                partial.insert(c);
            }
        }
        Census {
            occupied: self.cells.len(),
            complete: complete.len(),
            partial: partial.len(),
            members: self.members.len(),
        }
    }

    /// Largest coordinate-wise Q* spread inside any cell; `≤ Δ` for an ε-Q-uniform map.
    pub fn max_spread(&self) -> f64 {
        let arity = self.process.arity();
        let mut lo = vec![vec![f64::INFINITY; arity]; self.cells.len()];
        let mut hi = vec![vec![f64::NEG_INFINITY; arity]; self.cells.len()];
        for (m, &c) in self.members.iter().zip(&self.member_cell) {
            for (u, v) in self.q[m.state].iter().enumerate() {
                lo[c][u] = lo[c][u].min(*v);
                hi[c][u] = hi[c][u].max(*v);
            }
        }
        lo.iter()
            .zip(&hi)
            .flat_map(|(l, h)| l.iter().zip(h).map(|(a, b)| b - a))
            .fold(0.0, f64::max)
    }
}

/// Abstract-state MDP over occupied cells plus a sink.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateMdp {
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub sink: usize,
    /// Normalized `(member index, weight)` pairs per cell.
    pub weights: Vec<Vec<(usize, f64)>>,
}

impl SurrogateMdp {
    pub fn states(&self) -> usize {
        self.transition.len()
    }

    pub fn arity(&self) -> usize {
        self.reward[0].len()
    }

    /// Largest deviation of a transition row sum from 1.
    pub fn row_error(&self) -> f64 {
        self.transition
            .iter()
            .flatten()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Averages the true dynamics of each cell's members under `weighting`. Successors
/// whose cell is not occupied go to the sink, which loops on itself with reward 0.
pub fn build_surrogate(map: &AbstractionMap, weighting: Weighting) -> Result<SurrogateMdp> {
    let cells = map.occupied();
    let sink = cells;
    let arity = map.process.arity();
    let mut weights: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cells];
    for (i, m) in map.members.iter().enumerate() {
        let w = match weighting {
            Weighting::Uniform => 1.0,
            Weighting::Visit => m.visit,
        };
        weights[map.member_cell[i]].push((i, w));
    }
    for (c, ws) in weights.iter_mut().enumerate() {
        let total: f64 = ws.iter().map(|(_, w)| w).sum();
        if ws.is_empty() || !(total > 0.0) {
            return Err(Error::EmptyCell(c));
        }
        for (_, w) in ws.iter_mut() {
            *w /= total;
        }
    }
    let mut transition = vec![vec![vec![0.0; cells + 1]; arity]; cells + 1];
    let mut reward = vec![vec![0.0; arity]; cells + 1];
    for (c, ws) in weights.iter().enumerate() {
        for u in 0..arity {
            for &(i, w) in ws {
                for e in map.process.edges(map.members[i].state, u) {
                    let next = map.cell_of_state(e.next).unwrap_or(sink);
                    transition[c][u][next] += w * e.prob;
                    reward[c][u] += w * e.prob * e.reward;
                }
            }
        }
    }
    for u in 0..arity {
        transition[sink][u][sink] = 1.0;
    }
    Ok(SurrogateMdp {
        transition,
        reward,
        sink,
        weights,
    })
}

/// Value iteration to sup-norm residual `≤ tol·(1 − disc)`, then greedy extraction
/// with ties to the smallest action index.
pub fn solve_surrogate(mdp: &SurrogateMdp, disc: f64, tol: f64) -> (Vec<usize>, Vec<f64>) {
    let n = mdp.states();
    let q_of = |v: &[f64], s: usize| -> Vec<f64> {
        (0..mdp.arity())
            .map(|u| {
                mdp.reward[s][u]
                    + disc
                        * mdp.transition[s][u]
                            .iter()
                            .zip(v)
                            .map(|(p, x)| p * x)
                            .sum::<f64>()
            })
            .collect()
    };
    let mut v = vec![0.0; n];
    loop {
        let next: Vec<f64> = (0..n)
            .map(|s| q_of(&v, s).into_iter().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let residual = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if residual <= tol * (1.0 - disc) {
            break;
        }
    }
    let policy = (0..n).map(|s| argmax_first(&q_of(&v, s))).collect();
    (policy, v)
}

/// Composes an abstract policy with `φ`. States whose cell is unoccupied take action 0.
pub fn state_policy(map: &AbstractionMap, abstract_policy: &[usize]) -> StatePolicy<f64> {
    let arity = map.process.arity();
    (0..map.process.states())
        .map(|s| {
            let u = map.cell_of_state(s).map_or(0, |c| abstract_policy[c]);
            let mut row = vec![0.0; arity];
            row[u] = 1.0;
            row
        })
        .collect()
}

/// The context policy an abstract policy induces on the original process; binarized
/// policies are lifted through the codec.
pub fn induced_policy(
    env: &Environment,
    map: &AbstractionMap,
    abstract_policy: &[usize],
) -> Result<StatePolicy<f64>> {
    let policy = state_policy(map, abstract_policy);
    match map.mode {
        AbstractionMode::Plain => Ok(policy),
        AbstractionMode::Binarized => {
            let seq = SeqEnv::new(env, map.codec.clone().unwrap(), FillerMode::Repeat)?;
            Ok(lift_stationary(&seq, &policy))
        }
    }
}

/// `max (V*(h) − V^Π(h))` over the contexts of histories enumerated to `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub loss: f64,
    /// Truncation error of each value; the loss is exact to within twice this.
    pub tail: f64,
    pub horizon: usize,
    pub worst_history: String,
}

pub fn policy_loss(
    env: &Environment,
    policy: &StatePolicy<f64>,
    gamma: f64,
    depth: usize,
    tol: f64,
) -> Result<LossReport> {
    let range = env.reward_range_f64();
    let horizon = horizon_for(gamma, range.max(f64::MIN_POSITIVE), tol);
    let process = Process::original(env, gamma);
    let opt = process.optimal_ladder(horizon, DEFAULT_NODE_BUDGET)?;
    let pol = process.policy_ladder(policy, horizon, DEFAULT_NODE_BUDGET)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut report = LossReport {
        loss: 0.0,
        tail: crate::planner::tail_bound(gamma, range, horizon),
        horizon,
        worst_history: String::new(),
    };
    for h in env.enumerate_up_to(depth, crate::env::DEFAULT_HISTORY_CAP)? {
        let s = env.context_id(&env.context_of(&h)).expect("enumerated");
        if !seen.insert(s) {
            continue;
        }
        let gap = opt.v(horizon, s) - pol.v(horizon, s);
        if gap > report.loss || report.worst_history.is_empty() {
            report.loss = report.loss.max(gap);
            report.worst_history = h.key();
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
