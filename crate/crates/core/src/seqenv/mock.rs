use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SeqEnv, SeqHistory, SeqObs, SeqStep};
use crate::codec::CodeWord;
use crate::env::{History, Percept};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, rational_to_f64, Rational};

/// One inner tick of the mock, as written to the transcript log.
#[derive(Clone, Debug, PartialEq)]
pub struct Tick {
    pub t: usize,
    pub k: usize,
    pub phase: usize,
    pub x: u8,
    pub obs: SeqObs,
    pub reward: Rational,
}

/// The buffering middle layer: accepts decision symbols one at a time and consults
/// the real environment once per completed code word.
///
/// Clocks: the outer clock `t` counts symbols, the inner clock `k` counts real steps
/// (starting at 1), and `t = d(k − 1) + phase` throughout.
#[derive(Clone, Debug)]
pub struct MockSession<'e> {
    seq: SeqEnv<'e>,
    rng: ChaCha8Rng,
    history: History,
    transcript: SeqHistory,
    buffer: CodeWord,
    t: usize,
    k: usize,
    ticks: Vec<Tick>,
}

fn sample(rng: &mut ChaCha8Rng, row: &[Rational]) -> usize {
    let weights: Vec<f64> = row.iter().map(rational_to_f64).collect();
    WeightedIndex::new(&weights)
        .expect("validated rows have positive mass")
        .sample(rng)
}

impl<'e> MockSession<'e> {
    /// Draws the initial percept from the environment's initial distribution.
    pub fn new(seq: SeqEnv<'e>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = seq.env();
        let e = env.percept(sample(&mut rng, env.initial()));
        Self {
            transcript: SeqHistory::initial(seq.depth(), e),
            history: History::initial(e),
            seq,
            rng,
            buffer: CodeWord::empty(),
            t: 0,
            k: 1,
            ticks: Vec::new(),
        }
    }

    /// Runs `symbols` from a fresh session.
    pub fn replay(seq: SeqEnv<'e>, seed: u64, symbols: &[u8]) -> Result<Self> {
        let mut s = Self::new(seq, seed);
        for &x in symbols {
            s.step(x)?;
        }
        Ok(s)
    }

    pub fn step(&mut self, x: u8) -> Result<(SeqObs, Rational)> {
        if x as usize >= self.seq.base() {
            return Err(Error::InvalidParam(format!("symbol {x} outside the alphabet")));
        }
        let env = self.seq.env();
        let ctx = env.context_of(&self.history);
        let last = self.history.last().obs;
        let (obs, reward) = match self.seq.step_at(&ctx, last, &self.buffer, x)? {
            SeqStep::Filler(obs) => {
                self.buffer.push(x);
                (obs, env.zero_reward())
            }
            SeqStep::Real { action, row } => {
                let p: Percept = env.percept(sample(&mut self.rng, row));
                self.history.push(action, p);
                self.buffer = CodeWord::empty();
                self.k += 1;
                (SeqObs::plain(p.obs), p.reward)
            }
        };
        self.t += 1;
        self.transcript.push(x, obs.clone(), reward);
        let value = env.reward(reward).clone();
        self.ticks.push(Tick {
            t: self.t,
            k: self.k,
            phase: self.buffer.len(),
            x,
            obs: obs.clone(),
            reward: value.clone(),
        });
        Ok((obs, value))
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn phase(&self) -> usize {
        self.buffer.len()
    }

    pub fn buffer(&self) -> &CodeWord {
        &self.buffer
    }

    /// The original history behind the complete part of the transcript.
    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn transcript(&self) -> &SeqHistory {
        &self.transcript
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    /// CSV log with header `t,k,phase,x,o,r`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("t,k,phase,x,o,r\n");
        for tick in &self.ticks {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                tick.t,
                tick.k,
                tick.phase,
                tick.x,
                tick.obs,
                format_rational(&tick.reward)
            ));
        }
        out
    }
}

/// Recovers the symbol stream from a transcript log, for replay.
pub fn symbols_from_log(text: &str) -> Result<Vec<u8>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == "x")
        .ok_or_else(|| Error::Parse("log lacks an x column".into()))?;
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            rec[col]
                .parse()
                .map_err(|_| Error::Parse(format!("bad symbol {:?}", &rec[col])))
        })
        .collect()
}
