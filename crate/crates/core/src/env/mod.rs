//! Observations, rewards, actions, histories and finite-context environments for the
//! original (non-sequentialized) process.

mod history;
mod spec;

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_traits::{Signed, Zero};

pub use history::{Context, Entry, History, Percept};
pub use spec::{EnvironmentSpec, RowKey};

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionLabel {
    pub id: usize,
    pub name: String,
    /// The functionally identical action this one duplicates (padding).
    pub alias_of: Option<usize>,
}

impl ActionLabel {
    pub fn new(id: usize, name: impl Into<String>) -> Self {
        Self {
            id,
            name: name.into(),
            alias_of: None,
        }
    }

    /// `a0, a1, ...`
    pub fn numbered(count: usize) -> Vec<Self> {
        (0..count).map(|i| Self::new(i, format!("a{i}"))).collect()
    }
}

/// Default cap on the number of histories an enumeration may produce.
pub const DEFAULT_HISTORY_CAP: usize = 2_000_000;

/// A validated environment with an index over its reachable contexts.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: EnvironmentSpec,
    zero_reward: usize,
    contexts: Vec<Context>,
    index: HashMap<Context, usize>,
    rows: Vec<Vec<Vec<Rational>>>,
}

impl Environment {
    /// Checks every invariant of `spec` and indexes the reachable context space.
    ///
    /// With `exact` false, rows only need to sum to 1 within 1e-12.
    pub fn validate(spec: EnvironmentSpec, exact: bool) -> Result<Self> {
        let mut spec = spec;
        if spec.obs_count == 0 || spec.rewards.is_empty() || spec.actions.is_empty() {
            return Err(Error::InvalidParam(
                "observation, reward and action sets must be non-empty".into(),
            ));
        }
        for (i, a) in spec.actions.iter().enumerate() {
            if a.id != i {
                return Err(Error::InvalidParam(format!("action {} has id {}", a.name, a.id)));
            }
            if a.alias_of.is_some_and(|t| t >= spec.actions.len() || t == i) {
                return Err(Error::InvalidParam(format!("bad alias target on {}", a.name)));
            }
        }
        if !spec.has_zero_reward() {
            log::warn!("reward set lacks the filler reward 0; extending it");
            extend_with_zero_reward(&mut spec);
        }
        let zero_reward = spec.rewards.iter().position(Zero::is_zero).unwrap();

        spec.check_row("initial", &spec.initial, exact)?;
        for ((ctx, a), row) in &spec.table {
            if *a >= spec.actions.len() {
                return Err(Error::Parse(format!("row {}|{a} names an unknown action", ctx)));
            }
            spec.check_row(&format!("{}|{}", ctx, a), row, exact)?;
        }
        check_aliases(&spec, exact)?;

        let mut env = Self {
            zero_reward,
            contexts: Vec::new(),
            index: HashMap::new(),
            rows: Vec::new(),
            spec,
        };
        env.index_reachable()?;
        Ok(env)
    }

    fn index_reachable(&mut self) -> Result<()> {
        let m = self.spec.context_length;
        let starts: BTreeSet<Context> = self
            .spec
            .initial
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(i, _)| Context::of_percept(self.spec.percept(i), m))
            .collect();
        let mut queue: VecDeque<Context> = starts.into_iter().collect();
        for c in &queue {
            self.index.insert(c.clone(), self.contexts.len());
            self.contexts.push(c.clone());
        }
        while let Some(ctx) = queue.pop_front() {
            let mut rows = Vec::with_capacity(self.spec.actions.len());
            for a in 0..self.spec.actions.len() {
                let row = self
                    .spec
                    .table
                    .get(&(ctx.clone(), a))
                    .ok_or_else(|| Error::MissingRow(format!("{}|{}", ctx, a)))?;
                for (i, p) in row.iter().enumerate() {
                    if p.is_positive() {
                        let next = ctx.successor(m, a, self.spec.percept(i));
                        if !self.index.contains_key(&next) {
                            self.index.insert(next.clone(), self.contexts.len());
                            self.contexts.push(next.clone());
                            queue.push_back(next);
                        }
                    }
                }
                rows.push(row.clone());
            }
            self.rows.push(rows);
        }
        Ok(())
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn obs_count(&self) -> usize {
        self.spec.obs_count
    }

    pub fn reward_count(&self) -> usize {
        self.spec.rewards.len()
    }

    pub fn action_count(&self) -> usize {
        self.spec.actions.len()
    }

    pub fn actions(&self) -> &[ActionLabel] {
        &self.spec.actions
    }

    pub fn context_length(&self) -> usize {
        self.spec.context_length
    }

    /// True when the environment conditions on the last observation only.
    pub fn is_markov(&self) -> bool {
        self.spec.context_length == 0
    }

    pub fn outcome_count(&self) -> usize {
        self.spec.outcome_count()
    }

    pub fn outcome(&self, p: Percept) -> usize {
        self.spec.outcome(p)
    }

    pub fn percept(&self, outcome: usize) -> Percept {
        self.spec.percept(outcome)
    }

    pub fn reward(&self, index: usize) -> &Rational {
        &self.spec.rewards[index]
    }

    /// Index of the filler reward `0` in the reward set.
    pub fn zero_reward(&self) -> usize {
        self.zero_reward
    }

    /// `max ℛ − min ℛ`.
    pub fn reward_range(&self) -> Rational {
        let max = self.spec.rewards.iter().max().unwrap();
        let min = self.spec.rewards.iter().min().unwrap();
        max - min
    }

    pub fn reward_range_f64(&self) -> f64 {
        rational_to_f64(&self.reward_range())
    }

    pub fn initial(&self) -> &[Rational] {
        &self.spec.initial
    }

    /// Initial percepts with positive probability, in index order.
    pub fn initial_support(&self) -> impl Iterator<Item = (Percept, &Rational)> + '_ {
        self.spec
            .initial
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(i, p)| (self.percept(i), p))
    }

    /// Reachable contexts in discovery order; positions are context ids.
    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn context_id(&self, ctx: &Context) -> Option<usize> {
        self.index.get(ctx).copied()
    }

    pub fn context_of(&self, h: &History) -> Context {
        h.context(self.spec.context_length)
    }

    pub fn row(&self, context: usize, action: usize) -> &[Rational] {
        &self.rows[context][action]
    }

    /// `P(· | h a)` as a vector over `𝒪 × ℛ`.
    pub fn transition(&self, h: &History, action: usize) -> Result<&[Rational]> {
        self.transition_in(&self.context_of(h), action)
    }

    pub fn transition_in(&self, ctx: &Context, action: usize) -> Result<&[Rational]> {
        if action >= self.action_count() {
            return Err(Error::InvalidParam(format!("action {action} out of range")));
        }
        if let Some(&id) = self.index.get(ctx) {
            return Ok(&self.rows[id][action]);
        }
        self.spec
            .table
            .get(&(ctx.clone(), action))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingRow(format!("{}|{}", ctx, action)))
    }

    /// Positive-probability successor context ids of `(context, action)`, with outcome index.
    pub fn successors(&self, context: usize, action: usize) -> Vec<(usize, usize, &Rational)> {
        let ctx = &self.contexts[context];
        self.rows[context][action]
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(i, p)| {
                let next = ctx.successor(self.spec.context_length, action, self.percept(i));
                (i, self.index[&next], p)
            })
            .collect()
    }

    /// All histories of exactly `depth` steps with positive probability under some
    /// action sequence, in lexicographic order.
    pub fn enumerate_histories(&self, depth: usize, cap: usize) -> Result<Vec<History>> {
        let mut level: Vec<History> = self
            .initial_support()
            .map(|(p, _)| History::initial(p))
            .collect();
        if level.len() > cap {
            return Err(Error::BudgetExceeded { cap });
        }
        for _ in 0..depth {
            let mut next = Vec::new();
            for h in &level {
                let ctx = self.context_id(&self.context_of(h)).expect("reachable");
                for a in 0..self.action_count() {
                    for (i, p) in self.rows[ctx][a].iter().enumerate() {
                        if p.is_positive() {
                            if next.len() == cap {
                                return Err(Error::BudgetExceeded { cap });
                            }
                            next.push(h.extended(a, self.percept(i)));
                        }
                    }
                }
            }
            level = next;
        }
        Ok(level)
    }

    /// Histories of every length `0..=depth`, shortest first.
    pub fn enumerate_up_to(&self, depth: usize, cap: usize) -> Result<Vec<History>> {
        let mut all = Vec::new();
        for t in 0..=depth {
            let level = self.enumerate_histories(t, cap.saturating_sub(all.len()))?;
            all.extend(level);
        }
        Ok(all)
    }

    /// Probability of `h` when every action is drawn from `policy(h_prefix)`.
    pub fn path_probability(
        &self,
        h: &History,
        mut policy: impl FnMut(&History) -> Vec<Rational>,
    ) -> Result<Rational> {
        let mut prob = self.spec.initial[self.outcome(h.first())].clone();
        let mut prefix = History::initial(h.first());
        for (a, p) in h.steps_iter() {
            let pi = policy(&prefix);
            prob *= &pi[a];
            prob *= &self.transition(&prefix, a)?[self.outcome(p)];
            prefix.push(a, p);
        }
        Ok(prob)
    }
}

fn resolve_alias(actions: &[ActionLabel], mut a: usize) -> usize {
    let mut hops = 0;
    while let Some(t) = actions[a].alias_of {
        a = t;
        hops += 1;
        if hops > actions.len() {
            break;
        }
    }
    a
}

fn rows_match(a: &[Rational], b: &[Rational], exact: bool) -> bool {
    if exact {
        a == b
    } else {
        a.iter()
            .zip(b)
            .all(|(x, y)| rational_to_f64(&(x - y)).abs() <= 1e-12)
    }
}

fn check_aliases(spec: &EnvironmentSpec, exact: bool) -> Result<()> {
    let root = |a: usize| resolve_alias(&spec.actions, a);
    for ((ctx, a), row) in &spec.table {
        // the alias behaves like its target in the same context
        let target = root(*a);
        if target != *a {
            if let Some(t_row) = spec.table.get(&(ctx.clone(), target)) {
                if !rows_match(row, t_row, exact) {
                    return Err(Error::AliasMismatch {
                        alias: spec.actions[*a].name.clone(),
                        target: spec.actions[target].name.clone(),
                        context: ctx.key(),
                    });
                }
            }
        }
        // and an alias in the trail does not change what happens next
        let canonical = ctx.map_actions(root);
        if canonical != *ctx {
            if let Some(c_row) = spec.table.get(&(canonical, *a)) {
                if !rows_match(row, c_row, exact) {
                    let alias = ctx
                        .trail()
                        .iter()
                        .filter_map(|e| e.action)
                        .find(|&x| root(x) != x)
                        .unwrap();
                    return Err(Error::AliasMismatch {
                        alias: spec.actions[alias].name.clone(),
                        target: spec.actions[root(alias)].name.clone(),
                        context: ctx.key(),
                    });
                }
            }
        }
    }
    Ok(())
}

fn extend_with_zero_reward(spec: &mut EnvironmentSpec) {
    let old = spec.rewards.len();
    let relayout = |row: &Vec<Rational>| -> Vec<Rational> {
        let mut out = Vec::with_capacity(row.len() / old * (old + 1));
        for chunk in row.chunks(old) {
            out.extend(chunk.iter().cloned());
            out.push(Rational::zero());
        }
        out
    };
    spec.initial = relayout(&spec.initial);
    for row in spec.table.values_mut() {
        *row = relayout(row);
    }
    spec.rewards.push(Rational::zero());
}

#[cfg(test)]
mod tests;
