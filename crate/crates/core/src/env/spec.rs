use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{ActionLabel, Context, Percept};
use crate::codec;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, rational_from_f64, Rational};

/// Table key: `(context, action id)`.
pub type RowKey = (Context, usize);

/// A finite-context environment description, before validation.
///
/// Rows are probability vectors over `𝒪 × ℛ`, laid out as `obs * |ℛ| + reward`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentSpec {
    pub obs_count: usize,
    pub rewards: Vec<Rational>,
    pub actions: Vec<ActionLabel>,
    pub context_length: usize,
    pub initial: Vec<Rational>,
    pub table: BTreeMap<RowKey, Vec<Rational>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Number(f64),
    Text(String),
}

impl RawNumber {
    fn to_rational(&self) -> Result<Rational> {
        match self {
            RawNumber::Number(x) => rational_from_f64(*x),
            RawNumber::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawAction {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alias_of: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    obs_count: usize,
    rewards: Vec<RawNumber>,
    actions: Vec<RawAction>,
    context_length: usize,
    initial: Vec<RawNumber>,
    table: BTreeMap<String, Vec<RawNumber>>,
}

fn numbers(v: &[RawNumber]) -> Result<Vec<Rational>> {
    v.iter().map(RawNumber::to_rational).collect()
}

fn texts(v: &[Rational]) -> Vec<RawNumber> {
    v.iter().map(|r| RawNumber::Text(format_rational(r))).collect()
}

impl EnvironmentSpec {
    pub fn outcome_count(&self) -> usize {
        self.obs_count * self.rewards.len()
    }

    pub fn outcome(&self, p: Percept) -> usize {
        p.obs * self.rewards.len() + p.reward
    }

    pub fn percept(&self, outcome: usize) -> Percept {
        Percept::new(outcome / self.rewards.len(), outcome % self.rewards.len())
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text)?;
        let actions = raw
            .actions
            .iter()
            .enumerate()
            .map(|(id, a)| {
                let alias_of = match &a.alias_of {
                    None => None,
                    Some(target) => Some(
                        raw.actions
                            .iter()
                            .position(|b| &b.name == target)
                            .ok_or_else(|| {
                                Error::Parse(format!("alias target {target:?} is not an action"))
                            })?,
                    ),
                };
                Ok(ActionLabel {
                    id,
                    name: a.name.clone(),
                    alias_of,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = BTreeMap::new();
        for (key, row) in &raw.table {
            let (ctx, action) = key
                .rsplit_once('|')
                .ok_or_else(|| Error::Parse(format!("table key {key:?} lacks '|action'")))?;
            let ctx = Context::parse_key(ctx, raw.context_length)?;
            let action = match action.trim().parse::<usize>() {
                Ok(a) => a,
                Err(_) => actions
                    .iter()
                    .position(|a| a.name == action.trim())
                    .ok_or_else(|| Error::Parse(format!("unknown action in key {key:?}")))?,
            };
            table.insert((ctx, action), numbers(row)?);
        }
        Ok(Self {
            obs_count: raw.obs_count,
            rewards: numbers(&raw.rewards)?,
            actions,
            context_length: raw.context_length,
            initial: numbers(&raw.initial)?,
            table,
        })
    }

    /// Serializes with every number as an exact `"p/q"` string.
    pub fn to_json(&self) -> String {
        let raw = RawSpec {
            obs_count: self.obs_count,
            rewards: texts(&self.rewards),
            actions: self
                .actions
                .iter()
                .map(|a| RawAction {
                    name: a.name.clone(),
                    alias_of: a.alias_of.map(|t| self.actions[t].name.clone()),
                })
                .collect(),
            context_length: self.context_length,
            initial: texts(&self.initial),
            table: self
                .table
                .iter()
                .map(|((ctx, a), row)| (format!("{}|{}", ctx.key(), a), texts(row)))
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("spec serializes")
    }

    /// Fills the table for every context reachable from the initial draw, asking
    /// `row` for each `(context, action)` in breadth-first order.
    pub fn tabulate(
        obs_count: usize,
        rewards: Vec<Rational>,
        actions: Vec<ActionLabel>,
        context_length: usize,
        initial: Vec<Rational>,
        mut row: impl FnMut(&Context, usize) -> Vec<Rational>,
        row_cap: usize,
    ) -> Result<Self> {
        let mut spec = Self {
            obs_count,
            rewards,
            actions,
            context_length,
            initial,
            table: BTreeMap::new(),
        };
        let starts: BTreeSet<Context> = spec
            .initial
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(i, _)| Context::of_percept(spec.percept(i), context_length))
            .collect();
        let mut seen = starts.clone();
        let mut queue: VecDeque<Context> = starts.into_iter().collect();
        while let Some(ctx) = queue.pop_front() {
            for a in 0..spec.actions.len() {
                if spec.table.len() >= row_cap {
                    return Err(Error::InvalidSizes(format!(
                        "environment table exceeds {row_cap} rows"
                    )));
                }
                let r = row(&ctx, a);
                for (i, p) in r.iter().enumerate() {
                    if p.is_positive() {
                        let next = ctx.successor(context_length, a, spec.percept(i));
                        if seen.insert(next.clone()) {
                            queue.push_back(next);
                        }
                    }
                }
                spec.table.insert((ctx.clone(), a), r);
            }
        }
        Ok(spec)
    }

    /// Pads the action set to a power of `base`, duplicating rows for the new aliases
    /// (including contexts whose trail mentions an aliased action).
    pub fn padded(&self, base: usize) -> (Self, usize) {
        let (actions, d) = codec::pad_actions(&self.actions, base);
        if actions.len() == self.actions.len() {
            return (self.clone(), d);
        }
        let mut copies: Vec<Vec<usize>> = (0..self.actions.len()).map(|a| vec![a]).collect();
        for label in &actions[self.actions.len()..] {
            let target = label.alias_of.expect("padding only adds aliases");
            copies[target].push(label.id);
        }
        let mut table = BTreeMap::new();
        for ((ctx, a), row) in &self.table {
            for ctx_variant in trail_variants(ctx, &copies) {
                for &alias in &copies[*a] {
                    table.insert((ctx_variant.clone(), alias), row.clone());
                }
            }
        }
        let spec = Self {
            actions,
            table,
            ..self.clone()
        };
        (spec, d)
    }

    /// Row sums must be exactly 1 when `exact`, within 1e-12 otherwise.
    pub(crate) fn check_row(&self, key: &str, row: &[Rational], exact: bool) -> Result<()> {
        if row.len() != self.outcome_count() {
            return Err(Error::Parse(format!(
                "row {key} has {} entries, expected {}",
                row.len(),
                self.outcome_count()
            )));
        }
        if row.iter().any(|p| p.is_negative()) {
            return Err(Error::RowSum {
                key: key.to_string(),
                sum: "negative entry".into(),
            });
        }
        let sum: Rational = row.iter().sum();
        let one = Rational::from_integer(1.into());
        let ok = if exact {
            sum == one
        } else {
            crate::scalar::rational_to_f64(&(&sum - &one)).abs() <= 1e-12
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RowSum {
                key: key.to_string(),
                sum: format_rational(&sum),
            })
        }
    }

    pub(crate) fn has_zero_reward(&self) -> bool {
        self.rewards.iter().any(Zero::is_zero)
    }
}

fn trail_variants(ctx: &Context, copies: &[Vec<usize>]) -> Vec<Context> {
    let mut out = vec![ctx.clone()];
    for (i, e) in ctx.trail().iter().enumerate() {
        let a = e.action.unwrap();
        if copies[a].len() == 1 {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|c| {
                copies[a]
                    .iter()
                    .map(move |&alias| c.with_trail_action(i, alias))
            })
            .collect();
    }
    out
}
