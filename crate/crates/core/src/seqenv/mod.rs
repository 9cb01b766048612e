//! The sequentialized process: each original action is issued as `d` decision symbols,
//! with filler percepts between them and the real environment consulted once per code word.

mod mock;

use std::fmt;

use num_traits::{One, Zero};

pub use mock::{symbols_from_log, MockSession, Tick};

use crate::codec::{prefix_count, prefix_index, ActionCodec, CodeWord};
use crate::env::{Context, Environment, History, Percept};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// What the mock emits between real environment steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FillerMode {
    /// Repeat the last real observation.
    #[default]
    Repeat,
    /// Emit a fixed dummy observation.
    Dummy(usize),
    /// Emit the last real observation tagged with the partial code word so far.
    Augmented,
}

/// An observation of the sequentialized process. `tag` is empty except for
/// augmented fillers, where it carries the partial code `𝐱₁…𝐱ᵢ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeqObs {
    pub obs: usize,
    pub tag: CodeWord,
}

impl SeqObs {
    pub fn plain(obs: usize) -> Self {
        Self {
            obs,
            tag: CodeWord::empty(),
        }
    }
}

impl fmt::Display for SeqObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tag.is_empty() {
            write!(f, "{}", self.obs)
        } else {
            write!(f, "{}:{}", self.obs, self.tag)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeqEntry {
    pub obs: SeqObs,
    pub reward: usize,
    pub symbol: Option<u8>,
}

/// A history over decision symbols. Complete iff the number of symbols is a multiple of `d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeqHistory {
    depth: usize,
    entries: Vec<SeqEntry>,
}

impl SeqHistory {
    pub fn initial(depth: usize, e: Percept) -> Self {
        Self {
            depth,
            entries: vec![SeqEntry {
                obs: SeqObs::plain(e.obs),
                reward: e.reward,
                symbol: None,
            }],
        }
    }

    pub fn push(&mut self, x: u8, obs: SeqObs, reward: usize) {
        self.entries.last_mut().unwrap().symbol = Some(x);
        self.entries.push(SeqEntry {
            obs,
            reward,
            symbol: None,
        });
    }

    pub fn pushed(&self, x: u8, obs: SeqObs, reward: usize) -> Self {
        let mut t = self.clone();
        t.push(x, obs, reward);
        t
    }

    pub fn entries(&self) -> &[SeqEntry] {
        &self.entries
    }

    pub fn code_length(&self) -> usize {
        self.depth
    }

    /// Decision symbols issued so far.
    pub fn ticks(&self) -> usize {
        self.entries.len() - 1
    }

    /// Symbols issued since the last complete step.
    pub fn phase(&self) -> usize {
        self.ticks() % self.depth
    }

    pub fn is_complete(&self) -> bool {
        self.phase() == 0
    }

    /// The partial code word `𝐱_{<i}` awaiting completion.
    pub fn pending_code(&self) -> CodeWord {
        let n = self.entries.len();
        let p = self.phase();
        CodeWord::from_symbols(
            self.entries[n - 1 - p..n - 1]
                .iter()
                .map(|e| e.symbol.unwrap())
                .collect::<Vec<_>>(),
        )
    }

    pub fn last_obs(&self) -> &SeqObs {
        &self.entries.last().unwrap().obs
    }

    pub fn last_reward(&self) -> usize {
        self.entries.last().unwrap().reward
    }

    /// Entry-level view with a replaced component, for building off-image histories.
    pub fn with_entry(&self, index: usize, entry: SeqEntry) -> Self {
        let mut t = self.clone();
        t.entries[index] = entry;
        t
    }

    pub fn key(&self) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            match e.symbol {
                Some(x) => parts.push(format!("{},{},{}", e.obs, e.reward, x)),
                None => parts.push(format!("{},{}", e.obs, e.reward)),
            }
        }
        parts.join(";")
    }
}

impl fmt::Display for SeqHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Where a reachable sequentialized history sits: the original history behind its
/// complete part and the pending code prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cursor {
    pub history: History,
    pub prefix: CodeWord,
}

/// One step of `ū P` from a keyed state.
#[derive(Clone, Debug, PartialEq)]
pub enum SeqStep<'a> {
    /// Partial step: certain filler percept with reward `r⊥ = 0`.
    Filler(SeqObs),
    /// Completing step: the original row `P(·|h a)` for `a = D(𝐱)`.
    Real { action: usize, row: &'a [Rational] },
}

/// The sequentialized environment `ū P` induced by an environment and a codec.
#[derive(Clone, Debug)]
pub struct SeqEnv<'e> {
    env: &'e Environment,
    codec: ActionCodec,
    filler: FillerMode,
}

impl<'e> SeqEnv<'e> {
    pub fn new(env: &'e Environment, codec: ActionCodec, filler: FillerMode) -> Result<Self> {
        if codec.action_count() != env.action_count() {
            return Err(Error::InvalidParam(format!(
                "codec covers {} actions, environment has {}",
                codec.action_count(),
                env.action_count()
            )));
        }
        if let FillerMode::Dummy(o) = filler {
            if o >= env.obs_count() {
                return Err(Error::InvalidParam(format!("dummy observation {o} out of range")));
            }
        }
        Ok(Self { env, codec, filler })
    }

    /// Default codec over the environment's actions, which must number a power of `base`.
    pub fn with_base(env: &'e Environment, base: usize, filler: FillerMode) -> Result<Self> {
        let codec = ActionCodec::build(env.actions(), base)?;
        Self::new(env, codec, filler)
    }

    pub fn env(&self) -> &'e Environment {
        self.env
    }

    pub fn codec(&self) -> &ActionCodec {
        &self.codec
    }

    pub fn filler(&self) -> FillerMode {
        self.filler
    }

    pub fn depth(&self) -> usize {
        self.codec.depth()
    }

    pub fn base(&self) -> usize {
        self.codec.base()
    }

    /// Filler observation after the partial code `prefix` (which includes the symbol just issued).
    pub fn filler_obs(&self, last_real: usize, prefix: &CodeWord) -> SeqObs {
        match self.filler {
            FillerMode::Repeat => SeqObs::plain(last_real),
            FillerMode::Dummy(o) => SeqObs::plain(o),
            FillerMode::Augmented => SeqObs {
                obs: last_real,
                tag: prefix.clone(),
            },
        }
    }

    /// `g(h)`: expand every action into its code word with filler percepts in between.
    pub fn sequentialize(&self, h: &History) -> SeqHistory {
        let zero = self.env.zero_reward();
        let mut tau = SeqHistory::initial(self.depth(), h.first());
        let mut last = h.first().obs;
        for (a, p) in h.steps_iter() {
            let word = self.codec.encode(a);
            let mut prefix = CodeWord::empty();
            for (i, &x) in word.symbols().iter().enumerate() {
                prefix.push(x);
                if i + 1 < self.depth() {
                    tau.push(x, self.filler_obs(last, &prefix), zero);
                } else {
                    tau.push(x, SeqObs::plain(p.obs), p.reward);
                }
            }
            last = p.obs;
        }
        tau
    }

    /// Validates `tau` symbol by symbol against the construction of `g`.
    pub fn locate(&self, tau: &SeqHistory) -> Result<Cursor> {
        let unreachable = || Error::UnreachableHistory(tau.key());
        if tau.code_length() != self.depth() {
            return Err(unreachable());
        }
        let entries = tau.entries();
        let first = &entries[0];
        if !first.obs.tag.is_empty()
            || first.obs.obs >= self.env.obs_count()
            || first.reward >= self.env.reward_count()
        {
            return Err(unreachable());
        }
        let mut history = History::initial(Percept::new(first.obs.obs, first.reward));
        let mut prefix = CodeWord::empty();
        for w in entries.windows(2) {
            let x = w[0].symbol.ok_or_else(unreachable)?;
            if x as usize >= self.base() {
                return Err(unreachable());
            }
            prefix.push(x);
            let next = &w[1];
            if prefix.len() == self.depth() {
                if !next.obs.tag.is_empty()
                    || next.obs.obs >= self.env.obs_count()
                    || next.reward >= self.env.reward_count()
                {
                    return Err(unreachable());
                }
                let a = self.codec.decode(&prefix).ok_or_else(unreachable)?;
                history.push(a, Percept::new(next.obs.obs, next.reward));
                prefix = CodeWord::empty();
            } else if next.obs != self.filler_obs(history.last().obs, &prefix)
                || next.reward != self.env.zero_reward()
            {
                return Err(unreachable());
            }
        }
        Ok(Cursor { history, prefix })
    }

    /// `g⁻¹(τ)`, with `None` standing for `⊥`.
    pub fn desequentialize(&self, tau: &SeqHistory) -> Option<History> {
        match self.locate(tau) {
            Ok(c) if c.prefix.is_empty() => Some(c.history),
            _ => None,
        }
    }

    /// `ū P` at a keyed state: the context of the complete part, the last real
    /// observation, the pending prefix and the symbol being issued.
    pub fn step_at(
        &self,
        ctx: &Context,
        last_real: usize,
        prefix: &CodeWord,
        x: u8,
    ) -> Result<SeqStep<'e>> {
        let word = prefix.pushed(x);
        if word.len() < self.depth() {
            return Ok(SeqStep::Filler(self.filler_obs(last_real, &word)));
        }
        let action = self
            .codec
            .decode(&word)
            .ok_or_else(|| Error::InvalidParam(format!("{word} is not a code word")))?;
        Ok(SeqStep::Real {
            action,
            row: self.env.transition_in(ctx, action)?,
        })
    }

    fn step(&self, tau: &SeqHistory, x: u8) -> Result<SeqStep<'e>> {
        if x as usize >= self.base() {
            return Err(Error::InvalidParam(format!("symbol {x} outside the alphabet")));
        }
        let cursor = self.locate(tau)?;
        let ctx = self.env.context_of(&cursor.history);
        self.step_at(&ctx, cursor.history.last().obs, &cursor.prefix, x)
    }

    /// `ū P(· | τ x)` over `𝒪 × ℛ` (augmented tags are dropped).
    pub fn seq_transition(&self, tau: &SeqHistory, x: u8) -> Result<Vec<Rational>> {
        Ok(match self.step(tau, x)? {
            SeqStep::Filler(obs) => {
                let mut row = vec![Rational::zero(); self.env.outcome_count()];
                row[self.env.outcome(Percept::new(obs.obs, self.env.zero_reward()))] =
                    Rational::one();
                row
            }
            SeqStep::Real { row, .. } => row.to_vec(),
        })
    }

    /// `|Õ| = |𝒪| · Σ_{i<d} |ℬ|^i`.
    pub fn augmented_obs_count(&self) -> usize {
        self.env.obs_count() * prefix_count(self.base(), self.depth())
    }

    pub fn augmented_index(&self, obs: &SeqObs) -> usize {
        obs.obs * prefix_count(self.base(), self.depth()) + prefix_index(&obs.tag, self.base())
    }

    /// `ū P(· | τ x)` over `Õ × ℛ`, laid out as `augmented_index * |ℛ| + reward`.
    pub fn augmented_seq_transition(&self, tau: &SeqHistory, x: u8) -> Result<Vec<Rational>> {
        if !self.env.is_markov() {
            return Err(Error::NotMarkovEnv(self.env.context_length()));
        }
        if self.filler != FillerMode::Augmented {
            return Err(Error::InvalidParam(
                "augmented transitions need FillerMode::Augmented".into(),
            ));
        }
        let rewards = self.env.reward_count();
        let mut out = vec![Rational::zero(); self.augmented_obs_count() * rewards];
        match self.step(tau, x)? {
            SeqStep::Filler(obs) => {
                out[self.augmented_index(&obs) * rewards + self.env.zero_reward()] =
                    Rational::one();
            }
            SeqStep::Real { row, .. } => {
                for (i, p) in row.iter().enumerate() {
                    let pc = self.env.percept(i);
                    out[self.augmented_index(&SeqObs::plain(pc.obs)) * rewards + pc.reward] =
                        p.clone();
                }
            }
        }
        Ok(out)
    }

    /// The partial history `g(h) 𝐱₁ o r⊥ … 𝐱_{k}` followed by its filler, `k < d`.
    pub fn welded(&self, tau: &SeqHistory, prefix: &CodeWord) -> SeqHistory {
        assert!(prefix.len() < self.depth(), "welded prefix must be partial");
        let last_real = tau.last_obs().obs;
        let mut t = tau.clone();
        let mut partial = CodeWord::empty();
        for &x in prefix.symbols() {
            partial.push(x);
            t.push(x, self.filler_obs(last_real, &partial), self.env.zero_reward());
        }
        t
    }

    /// `Π̄(·|h) = Π_i ū Π(𝐱ᵢ | g(h) welded 𝐱_{<i})` for every action, via `seq_policy`.
    pub fn lift_policy<V: Scalar>(
        &self,
        h: &History,
        mut seq_policy: impl FnMut(&SeqHistory) -> Result<Vec<V>>,
    ) -> Result<Vec<V>> {
        let tau = self.sequentialize(h);
        let mut out = Vec::with_capacity(self.codec.action_count());
        for a in 0..self.codec.action_count() {
            let word = self.codec.encode(a);
            let mut p = V::one_value();
            for i in 0..self.depth() {
                let row = seq_policy(&self.welded(&tau, &word.prefix(i)))?;
                p = p.times(&row[word.symbols()[i] as usize]);
            }
            out.push(p);
        }
        Ok(out)
    }
}
