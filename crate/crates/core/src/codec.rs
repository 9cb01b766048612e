//! Fixed-length decision codes: the bijection between a padded action set and `ℬ^d`.

use std::fmt;

use crate::env::ActionLabel;
use crate::error::{Error, Result};

/// A decision alphabet `ℬ = {0, …, base−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DecisionAlphabet {
    base: usize,
}

impl DecisionAlphabet {
    pub const BINARY: Self = Self { base: 2 };

    pub fn new(base: usize) -> Result<Self> {
        if !(2..=36).contains(&base) {
            return Err(Error::InvalidParam(format!(
                "alphabet base must be in 2..=36, got {base}"
            )));
        }
        Ok(Self { base })
    }

    pub fn base(self) -> usize {
        self.base
    }

    pub fn is_binary(self) -> bool {
        self.base == 2
    }
}

/// A string of decision symbols, full-length (a code word) or partial (a prefix).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodeWord(Vec<u8>);

impl CodeWord {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_symbols(symbols: impl Into<Vec<u8>>) -> Self {
        Self(symbols.into())
    }

    /// Base-`base` representation of `value`, left-padded to `len` symbols.
    pub fn from_index(mut value: usize, base: usize, len: usize) -> Self {
        let mut s = vec![0u8; len];
        for slot in s.iter_mut().rev() {
            *slot = (value % base) as u8;
            value /= base;
        }
        Self(s)
    }

    /// Inverse of [`CodeWord::from_index`].
    pub fn index(&self, base: usize) -> usize {
        self.0.iter().fold(0, |acc, &x| acc * base + x as usize)
    }

    pub fn parse(text: &str, base: usize) -> Result<Self> {
        text.chars()
            .map(|c| match c.to_digit(base as u32) {
                Some(x) => Ok(x as u8),
                None => Err(Error::Parse(format!(
                    "{c:?} is not a base-{base} decision symbol"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, x: u8) {
        self.0.push(x);
    }

    pub fn pushed(&self, x: u8) -> Self {
        let mut w = self.clone();
        w.push(x);
        w
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len].to_vec())
    }

    pub fn starts_with(&self, prefix: &CodeWord) -> bool {
        self.0.starts_with(&prefix.0)
    }
}

impl fmt::Display for CodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &x in &self.0 {
            let c = char::from_digit(x as u32, 36).unwrap_or('?');
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Number of prefixes of length `0..d` over an alphabet of size `base`: `Σ_{i<d} base^i`.
pub fn prefix_count(base: usize, d: usize) -> usize {
    (0..d).map(|i| base.pow(i as u32)).sum()
}

/// Dense index of a partial code word among all prefixes of length `< d`,
/// shorter prefixes first.
pub fn prefix_index(prefix: &CodeWord, base: usize) -> usize {
    prefix_count(base, prefix.len()) + prefix.index(base)
}

pub fn prefix_from_index(mut index: usize, base: usize) -> CodeWord {
    let mut len = 0;
    while index >= base.pow(len as u32) {
        index -= base.pow(len as u32);
        len += 1;
    }
    CodeWord::from_index(index, base, len)
}

/// Smallest `d ≥ 1` with `base^d ≥ count`.
pub fn code_length(count: usize, base: usize) -> usize {
    let mut d = 1;
    while base.pow(d as u32) < count {
        d += 1;
    }
    d
}

/// Extends `actions` to exactly `base^d` entries by repeating the last action under
/// distinct alias labels (`a5_1`, `a5_2`, …).
pub fn pad_actions(actions: &[ActionLabel], base: usize) -> (Vec<ActionLabel>, usize) {
    assert!(!actions.is_empty(), "at least one action");
    assert!(base >= 2, "base ≥ 2");
    let d = code_length(actions.len(), base);
    let mut out = actions.to_vec();
    let last = actions.last().unwrap();
    let target = last.alias_of.unwrap_or(last.id);
    for k in 1..=(base.pow(d as u32) - actions.len()) {
        out.push(ActionLabel {
            id: out.len(),
            name: format!("{}_{}", last.name, k),
            alias_of: Some(target),
        });
    }
    (out, d)
}

/// Encoder `C : 𝒜 → ℬ^d` and decoder `D : ℬ^d → 𝒜`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionCodec {
    alphabet: DecisionAlphabet,
    depth: usize,
    names: Vec<String>,
    encode: Vec<CodeWord>,
    // indexed by the code word's numeric value
    decode: Vec<usize>,
}

impl ActionCodec {
    /// Default assignment: action `i` gets the base-`base` digits of `i`.
    pub fn build(actions: &[ActionLabel], base: usize) -> Result<Self> {
        let alphabet = DecisionAlphabet::new(base)?;
        let depth = exact_depth(actions.len(), base)?;
        let words = (0..actions.len())
            .map(|i| CodeWord::from_index(i, base, depth))
            .collect();
        Self::assemble(alphabet, depth, actions, words)
    }

    /// Custom assignment; `words[i]` is the code of action `i`.
    pub fn with_table(actions: &[ActionLabel], base: usize, words: Vec<CodeWord>) -> Result<Self> {
        let alphabet = DecisionAlphabet::new(base)?;
        let depth = exact_depth(actions.len(), base)?;
        if words.len() != actions.len() {
            return Err(Error::NotBijective(format!(
                "{} code words for {} actions",
                words.len(),
                actions.len()
            )));
        }
        Self::assemble(alphabet, depth, actions, words)
    }

    /// Convenience for unnamed actions `a0..`.
    pub fn for_count(count: usize, base: usize) -> Result<Self> {
        Self::build(&ActionLabel::numbered(count), base)
    }

    fn assemble(
        alphabet: DecisionAlphabet,
        depth: usize,
        actions: &[ActionLabel],
        words: Vec<CodeWord>,
    ) -> Result<Self> {
        let base = alphabet.base();
        let mut decode = vec![usize::MAX; actions.len()];
        for (a, w) in words.iter().enumerate() {
            if w.len() != depth || w.symbols().iter().any(|&x| x as usize >= base) {
                return Err(Error::NotBijective(format!(
                    "{w} is not a base-{base} word of length {depth}"
                )));
            }
            let slot = &mut decode[w.index(base)];
            if *slot != usize::MAX {
                return Err(Error::NotBijective(format!(
                    "{w} assigned to both {} and {}",
                    actions[*slot].name, actions[a].name
                )));
            }
            *slot = a;
        }
        Ok(Self {
            alphabet,
            depth,
            names: actions.iter().map(|a| a.name.clone()).collect(),
            encode: words,
            decode,
        })
    }

    pub fn alphabet(&self) -> DecisionAlphabet {
        self.alphabet
    }

    pub fn base(&self) -> usize {
        self.alphabet.base()
    }

    /// Code length `d`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn action_count(&self) -> usize {
        self.encode.len()
    }

    pub fn name(&self, action: usize) -> &str {
        &self.names[action]
    }

    pub fn encode(&self, action: usize) -> &CodeWord {
        &self.encode[action]
    }

    /// `D(𝐱)`; `None` unless `word` is a full-length word over the alphabet.
    pub fn decode(&self, word: &CodeWord) -> Option<usize> {
        if word.len() != self.depth || word.symbols().iter().any(|&x| x as usize >= self.base())
        {
            return None;
        }
        Some(self.decode[word.index(self.base())])
    }

    /// `𝒜(𝐱)`: actions whose code extends `prefix`, in code-word order.
    pub fn restricted_actions(&self, prefix: &CodeWord) -> Vec<usize> {
        assert!(prefix.len() <= self.depth, "prefix longer than the code");
        let span = self.base().pow((self.depth - prefix.len()) as u32);
        let start = prefix.index(self.base()) * span;
        (start..start + span).map(|v| self.decode[v]).collect()
    }

    /// `action_name<TAB>code_word` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (name, w) in self.names.iter().zip(&self.encode) {
            out.push_str(&format!("{name}\t{w}\n"));
        }
        out
    }

    pub fn parse_dump(text: &str, base: usize) -> Result<Self> {
        let mut actions = Vec::new();
        let mut words = Vec::new();
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let (name, word) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse(format!("codec line {line:?} lacks a tab")))?;
            actions.push(ActionLabel::new(i, name));
            words.push(CodeWord::parse(word.trim(), base)?);
        }
        Self::with_table(&actions, base, words)
    }
}

fn exact_depth(count: usize, base: usize) -> Result<usize> {
    let d = code_length(count, base);
    if base.pow(d as u32) != count {
        return Err(Error::InvalidParam(format!(
            "{count} actions is not a power of {base}; pad first"
        )));
    }
    Ok(d)
}

/// A grid action of a quantized interval.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAction {
    pub label: ActionLabel,
    pub value: f64,
}

/// Grids `[lo, hi]` into `base^d` cells of width at most `delta` (`d ≥ 1`), one action per
/// cell midpoint, with the default codec over them.
pub fn quantize_interval(
    lo: f64,
    hi: f64,
    delta: f64,
    base: usize,
) -> Result<(Vec<GridAction>, ActionCodec)> {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    if delta.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidParam(format!("delta must be positive, got {delta}")));
    }
    DecisionAlphabet::new(base)?;
    let width = hi - lo;
    let mut d = 1usize;
    while width / (base as f64).powi(d as i32) > delta {
        d += 1;
        if d > 48 {
            return Err(Error::InvalidParam("delta too small for the interval".into()));
        }
    }
    let n = base.pow(d as u32);
    let cell = width / n as f64;
    let grid: Vec<GridAction> = (0..n)
        .map(|i| GridAction {
            label: ActionLabel::new(i, format!("u{i}")),
            value: lo + (i as f64 + 0.5) * cell,
        })
        .collect();
    let labels: Vec<ActionLabel> = grid.iter().map(|g| g.label.clone()).collect();
    let codec = ActionCodec::build(&labels, base)?;
    Ok((grid, codec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn named(names: &[&str]) -> Vec<ActionLabel> {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| ActionLabel::new(i, *n))
            .collect()
    }

    #[test]
    fn padding_five_actions() {
        let (out, d) = pad_actions(&named(&["a1", "a2", "a3", "a4", "a5"]), 2);
        assert_eq!(d, 3);
        let names: Vec<&str> = out.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["a1", "a2", "a3", "a4", "a5", "a5_1", "a5_2", "a5_3"]);
        assert!(out[5..].iter().all(|a| a.alias_of == Some(4)));
        assert!(out[..5].iter().all(|a| a.alias_of.is_none()));
    }

    #[test]
    fn padding_powers_is_identity() {
        let four = named(&["a00", "a01", "a10", "a11"]);
        assert_eq!(pad_actions(&four, 2), (four.clone(), 2));
        let two = named(&["a1", "a2"]);
        assert_eq!(pad_actions(&two, 2), (two, 1));
        let nine = ActionLabel::numbered(9);
        assert_eq!(pad_actions(&nine, 3).1, 2);
    }

    #[test]
    fn default_codec_is_index_binary() {
        let c = ActionCodec::build(&named(&["a00", "a01", "a10", "a11"]), 2).unwrap();
        let words: Vec<String> = (0..4).map(|a| c.encode(a).to_string()).collect();
        assert_eq!(words, ["00", "01", "10", "11"]);
        assert_eq!(c.dump(), "a00\t00\na01\t01\na10\t10\na11\t11\n");
        assert_eq!(ActionCodec::parse_dump(&c.dump(), 2).unwrap(), c);
    }

    #[test]
    fn padded_codec_round_trips() {
        let (acts, _) = pad_actions(&named(&["a1", "a2", "a3", "a4", "a5"]), 2);
        let c = ActionCodec::build(&acts, 2).unwrap();
        for a in 0..8 {
            assert_eq!(c.decode(c.encode(a)), Some(a));
        }
    }

    #[test]
    fn duplicate_word_is_rejected() {
        let acts = ActionLabel::numbered(4);
        let w = |s| CodeWord::parse(s, 2).unwrap();
        let err = ActionCodec::with_table(&acts, 2, vec![w("01"), w("01"), w("10"), w("11")]);
        assert!(matches!(err, Err(Error::NotBijective(_))));
        assert!(ActionCodec::with_table(&acts, 2, vec![w("11"), w("01"), w("10"), w("00")]).is_ok());
    }

    #[test]
    fn unpadded_set_is_rejected() {
        assert!(ActionCodec::for_count(5, 2).is_err());
    }

    #[test]
    fn quantizer_grid() {
        let (grid, codec) = quantize_interval(0.0, 1.0, 0.25, 2).unwrap();
        assert_eq!(codec.depth(), 2);
        let v: Vec<f64> = grid.iter().map(|g| g.value).collect();
        assert_eq!(v, [0.125, 0.375, 0.625, 0.875]);

        let (grid, codec) = quantize_interval(0.0, 1.0, 1.0, 2).unwrap();
        assert_eq!(codec.depth(), 1);
        assert_eq!(grid.iter().map(|g| g.value).collect::<Vec<_>>(), [0.25, 0.75]);

        assert!(matches!(
            quantize_interval(1.0, 0.0, 0.1, 2),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn quantizer_resolution_never_exceeds_delta() {
        for &delta in &[0.3, 0.1, 0.01, 0.0017] {
            let (grid, codec) = quantize_interval(-2.0, 3.0, delta, 2).unwrap();
            let cell = 5.0 / grid.len() as f64;
            assert!(cell <= delta);
            // and d is minimal
            assert!(cell * 2.0 > delta || codec.depth() == 1);
        }
    }

    #[test]
    fn restricted_sets() {
        let c = ActionCodec::build(&named(&["a00", "a01", "a10", "a11"]), 2).unwrap();
        let w = |s| CodeWord::parse(s, 2).unwrap();
        assert_eq!(c.restricted_actions(&w("1")), vec![2, 3]);
        assert_eq!(c.restricted_actions(&w("01")), vec![1]);
        assert_eq!(c.restricted_actions(&CodeWord::empty()), vec![0, 1, 2, 3]);
    }

    #[test]
    fn prefix_indexing_is_dense() {
        for (base, d) in [(2, 1), (2, 4), (3, 3)] {
            let n = prefix_count(base, d);
            for i in 0..n {
                let p = prefix_from_index(i, base);
                assert!(p.len() < d);
                assert_eq!(prefix_index(&p, base), i);
            }
        }
        assert_eq!(prefix_count(2, 3), 7);
    }

    proptest! {
        #[test]
        fn round_trip_exhaustive(base in 2usize..5, d in 1usize..6) {
            let c = ActionCodec::for_count(base.pow(d as u32), base).unwrap();
            for a in 0..c.action_count() {
                prop_assert_eq!(c.decode(c.encode(a)), Some(a));
            }
            for v in 0..c.action_count() {
                let w = CodeWord::from_index(v, base, d);
                prop_assert_eq!(c.encode(c.decode(&w).unwrap()), &w);
            }
        }

        #[test]
        fn restriction_sizes_and_nesting(d in 1usize..7, v in 0usize..64, i in 0usize..7, j in 0usize..7) {
            let c = ActionCodec::for_count(1 << d, 2).unwrap();
            let word = CodeWord::from_index(v % (1 << d), 2, d);
            let (i, j) = (i.min(d), j.min(d));
            let (short, long) = (i.min(j), i.max(j));
            let outer = c.restricted_actions(&word.prefix(short));
            let inner = c.restricted_actions(&word.prefix(long));
            prop_assert_eq!(outer.len(), 1 << (d - short));
            prop_assert_eq!(inner.len(), 1 << (d - long));
            prop_assert!(inner.iter().all(|a| outer.contains(a)));
        }

        #[test]
        fn padding_reaches_a_power(n in 1usize..40, base in 2usize..5) {
            let (out, d) = pad_actions(&ActionLabel::numbered(n), base);
            prop_assert_eq!(out.len(), base.pow(d as u32));
            prop_assert!(d == 1 || base.pow(d as u32 - 1) < n);
            for a in &out[n..] {
                prop_assert_eq!(a.alias_of, Some(n - 1));
            }
        }
    }
}
