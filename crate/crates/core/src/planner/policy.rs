use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::seq_state;
use crate::codec::{prefix_count, prefix_from_index};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};
use crate::seqenv::SeqEnv;

/// A stationary policy as one probability row per process state.
pub type StatePolicy<V> = Vec<Vec<V>>;

/// A keyed policy file: each key is a context key (original process) or
/// `"context#prefix"` (sequentialized process), each row a distribution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolicySpec {
    pub rows: BTreeMap<String, Vec<Rational>>,
}

#[derive(Serialize, Deserialize)]
struct RawPolicy(BTreeMap<String, Vec<String>>);

fn seq_key(ctx: &str, prefix: &crate::codec::CodeWord) -> String {
    format!("{ctx}#{prefix}")
}

impl PolicySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<serde_json::Value>> = serde_json::from_str(text)?;
        let mut rows = BTreeMap::new();
        for (k, v) in raw {
            let row = v
                .iter()
                .map(|x| match x {
                    serde_json::Value::String(s) => parse_rational(s),
                    serde_json::Value::Number(n) => crate::scalar::rational_from_f64(
                        n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}")))?,
                    ),
                    other => Err(Error::Parse(format!("bad policy entry {other}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.insert(k, row);
        }
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> String {
        let raw = RawPolicy(
            self.rows
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(format_rational).collect()))
                .collect(),
        );
        serde_json::to_string_pretty(&raw).expect("policy serializes")
    }

    fn row(&self, key: &str, arity: usize) -> Result<Vec<Rational>> {
        let row = self
            .rows
            .get(key)
            .ok_or_else(|| Error::MissingPolicyRow(key.to_string()))?;
        if row.len() != arity {
            return Err(Error::Parse(format!(
                "policy row {key} has {} entries, expected {arity}",
                row.len()
            )));
        }
        let sum: Rational = row.iter().sum();
        if crate::scalar::rational_to_f64(&(sum - Rational::from_integer(1.into()))).abs() > 1e-12 {
            return Err(Error::RowSum {
                key: key.to_string(),
                sum: "policy row".into(),
            });
        }
        Ok(row.clone())
    }

    /// Rows for every reachable context of the original process.
    pub fn for_contexts<V: Scalar>(&self, env: &Environment) -> Result<StatePolicy<V>> {
        env.contexts()
            .iter()
            .map(|c| {
                Ok(self
                    .row(&c.key(), env.action_count())?
                    .iter()
                    .map(V::from_rational)
                    .collect())
            })
            .collect()
    }

    /// Rows for every `(context, prefix)` state of the sequentialized process.
    pub fn for_seq_states<V: Scalar>(&self, seq: &SeqEnv) -> Result<StatePolicy<V>> {
        let per = prefix_count(seq.base(), seq.depth());
        let mut out = Vec::new();
        for c in seq.env().contexts() {
            for pi in 0..per {
                let key = seq_key(&c.key(), &prefix_from_index(pi, seq.base()));
                out.push(
                    self.row(&key, seq.base())?
                        .iter()
                        .map(V::from_rational)
                        .collect(),
                );
            }
        }
        Ok(out)
    }

    pub fn from_contexts(env: &Environment, policy: &StatePolicy<Rational>) -> Self {
        Self {
            rows: env
                .contexts()
                .iter()
                .zip(policy)
                .map(|(c, r)| (c.key(), r.clone()))
                .collect(),
        }
    }

    pub fn from_seq_states(seq: &SeqEnv, policy: &StatePolicy<Rational>) -> Self {
        let per = prefix_count(seq.base(), seq.depth());
        let mut rows = BTreeMap::new();
        for (s, r) in policy.iter().enumerate() {
            let c = &seq.env().contexts()[s / per];
            rows.insert(seq_key(&c.key(), &prefix_from_index(s % per, seq.base())), r.clone());
        }
        Self { rows }
    }
}

/// `Π̄(a | c) = Π_i ū Π(𝐱ᵢ | c, 𝐱_{<i})` for a stationary sequentialized policy.
pub fn lift_stationary<V: Scalar>(seq: &SeqEnv, policy: &StatePolicy<V>) -> StatePolicy<V> {
    let (base, d) = (seq.base(), seq.depth());
    let codec = seq.codec();
    (0..seq.env().contexts().len())
        .map(|c| {
            (0..codec.action_count())
                .map(|a| {
                    let word = codec.encode(a);
                    let mut p = V::one_value();
                    for i in 0..d {
                        let s = seq_state(c, &word.prefix(i), base, d);
                        p = p.times(&policy[s][word.symbols()[i] as usize]);
                    }
                    p
                })
                .collect()
        })
        .collect()
}
