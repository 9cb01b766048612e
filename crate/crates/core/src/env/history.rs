use std::fmt;

use crate::error::{Error, Result};

/// An observation-reward pair. The reward is an index into the environment's reward set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Percept {
    pub obs: usize,
    pub reward: usize,
}

impl Percept {
    pub fn new(obs: usize, reward: usize) -> Self {
        Self { obs, reward }
    }
}

/// One `(o, r, a)` slot of a history; the action is absent on the final entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entry {
    pub obs: usize,
    pub reward: usize,
    pub action: Option<usize>,
}

/// A finite, non-empty interaction record `o r a o r a ... o r` over the original action set.
///
/// The derived ordering is lexicographic by entry, then observation, reward and action.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    entries: Vec<Entry>,
}

impl History {
    pub fn initial(e: Percept) -> Self {
        Self {
            entries: vec![Entry {
                obs: e.obs,
                reward: e.reward,
                action: None,
            }],
        }
    }

    /// Builds `e a₁ p₁ a₂ p₂ ...`.
    pub fn from_steps(e: Percept, steps: &[(usize, Percept)]) -> Self {
        let mut h = Self::initial(e);
        for &(a, p) in steps {
            h.push(a, p);
        }
        h
    }

    pub fn push(&mut self, action: usize, next: Percept) {
        let last = self.entries.last_mut().expect("history is never empty");
        last.action = Some(action);
        self.entries.push(Entry {
            obs: next.obs,
            reward: next.reward,
            action: None,
        });
    }

    pub fn extended(&self, action: usize, next: Percept) -> Self {
        let mut h = self.clone();
        h.push(action, next);
        h
    }

    /// Number of interaction steps, i.e. actions taken.
    pub fn steps(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn first(&self) -> Percept {
        let e = self.entries[0];
        Percept::new(e.obs, e.reward)
    }

    pub fn last(&self) -> Percept {
        let e = self.entries[self.entries.len() - 1];
        Percept::new(e.obs, e.reward)
    }

    pub fn actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().filter_map(|e| e.action)
    }

    /// `(action, following percept)` pairs after the initial percept.
    pub fn steps_iter(&self) -> impl Iterator<Item = (usize, Percept)> + '_ {
        self.entries
            .windows(2)
            .map(|w| (w[0].action.unwrap(), Percept::new(w[1].obs, w[1].reward)))
    }

    /// The prefix consisting of the first `steps` interactions.
    pub fn truncated(&self, steps: usize) -> Self {
        let mut entries = self.entries[..=steps].to_vec();
        entries.last_mut().unwrap().action = None;
        Self { entries }
    }

    /// The part of the history the environment may condition on.
    pub fn context(&self, context_length: usize) -> Context {
        let last = self.last();
        if context_length == 0 {
            return Context::markov(last.obs);
        }
        let n = self.entries.len() - 1;
        let start = n.saturating_sub(context_length);
        Context {
            trail: self.entries[start..n].to_vec(),
            obs: last.obs,
            reward: Some(last.reward),
        }
    }

    /// Text key `o,r,a;o,r,a;...;o,r`.
    pub fn key(&self) -> String {
        let mut parts: Vec<String> = self.entries[..self.entries.len() - 1]
            .iter()
            .map(|e| format!("{},{},{}", e.obs, e.reward, e.action.unwrap()))
            .collect();
        let last = self.last();
        parts.push(format!("{},{}", last.obs, last.reward));
        parts.join(";")
    }

    pub fn parse_key(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad history key {s:?}"));
        let parts: Vec<&str> = s.split(';').collect();
        let mut entries = Vec::with_capacity(parts.len());
        for (i, part) in parts.iter().enumerate() {
            let nums = parse_numbers(part).ok_or_else(bad)?;
            let last = i + 1 == parts.len();
            match (last, nums.as_slice()) {
                (false, &[o, r, a]) => entries.push(Entry {
                    obs: o,
                    reward: r,
                    action: Some(a),
                }),
                (true, &[o, r]) => entries.push(Entry {
                    obs: o,
                    reward: r,
                    action: None,
                }),
                _ => return Err(bad()),
            }
        }
        Ok(Self { entries })
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// The finite window of a history that a finite-context environment conditions on.
///
/// With context length 0 only the last observation matters (the MDP case). With
/// context length `m ≥ 1` it is the last `m` full `(o, r, a)` triples followed by
/// the current observation and reward.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context {
    trail: Vec<Entry>,
    obs: usize,
    reward: Option<usize>,
}

impl Context {
    pub fn markov(obs: usize) -> Self {
        Self {
            trail: Vec::new(),
            obs,
            reward: None,
        }
    }

    pub fn of_percept(p: Percept, context_length: usize) -> Self {
        History::initial(p).context(context_length)
    }

    pub fn obs(&self) -> usize {
        self.obs
    }

    pub fn trail(&self) -> &[Entry] {
        &self.trail
    }

    pub fn successor(&self, context_length: usize, action: usize, next: Percept) -> Self {
        if context_length == 0 {
            return Self::markov(next.obs);
        }
        let mut trail = self.trail.clone();
        trail.push(Entry {
            obs: self.obs,
            reward: self.reward.expect("non-Markov context carries its reward"),
            action: Some(action),
        });
        if trail.len() > context_length {
            trail.remove(0);
        }
        Self {
            trail,
            obs: next.obs,
            reward: Some(next.reward),
        }
    }

    /// Same context with the trail's actions rewritten through `f`.
    pub fn map_actions(&self, f: impl Fn(usize) -> usize) -> Self {
        let mut c = self.clone();
        for e in &mut c.trail {
            e.action = e.action.map(&f);
        }
        c
    }

    pub fn with_trail_action(&self, index: usize, action: usize) -> Self {
        let mut c = self.clone();
        c.trail[index].action = Some(action);
        c
    }

    pub fn key(&self) -> String {
        match self.reward {
            None => self.obs.to_string(),
            Some(r) => {
                let mut s = String::new();
                for e in &self.trail {
                    s.push_str(&format!("{},{},{};", e.obs, e.reward, e.action.unwrap()));
                }
                s.push_str(&format!("{},{}", self.obs, r));
                s
            }
        }
    }

    pub fn parse_key(s: &str, context_length: usize) -> Result<Self> {
        if context_length == 0 {
            let obs = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad context key {s:?}")))?;
            return Ok(Self::markov(obs));
        }
        let h = History::parse_key(s)?;
        if h.steps() > context_length {
            return Err(Error::Parse(format!(
                "context key {s:?} is longer than context length {context_length}"
            )));
        }
        Ok(h.context(context_length))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

fn parse_numbers(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|t| t.trim().parse().ok()).collect()
}
