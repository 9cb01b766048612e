//! Browser bindings: a bound-curve explorer, a step-by-step binary mock and a value
//! ladder comparing original and sequentialized Q-values.
//!
//! Each export wraps a plain function returning JSON or CSV text so the logic can be
//! tested off the browser.

use serde_json::json;
use wasm_bindgen::prelude::*;

use seqrl::codec::{prefix_count, prefix_from_index};
use seqrl::env::{Environment, EnvironmentSpec};
use seqrl::esa::bound_binary;
use seqrl::harness::gen::{self, padded, Sizes};
use seqrl::planner::{horizon_for, lambda_of, Planner, SeqPlanner, DEFAULT_NODE_BUDGET};
use seqrl::scalar::rational_from_f64;
use seqrl::{FillerMode, MockSession, SeqEnv};

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load(env_json: &str) -> Result<Environment, String> {
    let spec = EnvironmentSpec::from_json(env_json).map_err(err)?;
    Environment::validate(padded(&spec, 2), false).map_err(err)
}

pub fn random_env_json(seed: u32, actions: usize, context: usize) -> Out {
    let spec = gen::random_env(seed as u64, Sizes::new(2, 2, actions, context), 0.3).map_err(err)?;
    Ok(spec.to_json())
}

/// Plain, binarized and `γ → 1` bounds on a γ grid, as `log10` values.
pub fn bounds_curve_json(actions: usize, epsilon: f64, points: usize) -> Out {
    let eps = rational_from_f64(epsilon).map_err(err)?;
    let one = seqrl::scalar::int(1);
    let points = points.clamp(2, 200);
    let mut rows = Vec::with_capacity(points);
    for i in 1..points {
        let gamma = i as f64 / points as f64;
        let g = rational_from_f64(gamma).map_err(err)?;
        let r = bound_binary(&eps, &g, actions, &one).map_err(err)?;
        rows.push(json!({
            "gamma": gamma,
            "plain": r.plain_bound.approx.log10(),
            "binary": r.binary_bound.approx.log10(),
            "asymptotic": r.binary_asymptotic_bound.approx.log10(),
            "d": r.d,
        }));
    }
    Ok(serde_json::Value::Array(rows).to_string())
}

/// Original `Q*` per action and sequentialized `Q*` per prefix and symbol at each
/// initial history (at most four). `scaled_max` is `λ^{d−1−|p|}` times the best
/// original value among actions whose code starts with `p`, which the larger
/// symbol value should reproduce.
pub fn value_ladder_json(env_json: &str, gamma: f64) -> Out {
    if !(0.0..1.0).contains(&gamma) || gamma == 0.0 {
        return Err(format!("γ must lie in (0, 1), got {gamma}"));
    }
    let env = load(env_json)?;
    let seq = SeqEnv::with_base(&env, 2, FillerMode::Repeat).map_err(err)?;
    let d = seq.depth();
    let h = horizon_for(gamma, env.reward_range_f64().max(f64::MIN_POSITIVE), 1e-6);
    let orig = Planner::optimal(&env, gamma, h, DEFAULT_NODE_BUDGET).map_err(err)?;
    let lambda = lambda_of(gamma, d);
    let sp = SeqPlanner::optimal(&seq, lambda, h, DEFAULT_NODE_BUDGET).map_err(err)?;
    let codec = seq.codec();
    let mut out = Vec::new();
    for hist in env.enumerate_up_to(0, 64).map_err(err)?.into_iter().take(4) {
        let q = orig.q_values(&hist).map_err(err)?;
        let actions: Vec<_> = q
            .iter()
            .enumerate()
            .map(|(a, v)| json!({ "name": env.actions()[a].name, "code": codec.encode(a).to_string(), "q": v }))
            .collect();
        let tau = seq.sequentialize(&hist);
        let mut prefixes = Vec::new();
        for pi in 0..prefix_count(2, d) {
            let p = prefix_from_index(pi, 2);
            let t = seq.welded(&tau, &p);
            let symbols: Vec<f64> = (0..2u8).map(|x| sp.q(&t, x)).collect::<Result<_, _>>().map_err(err)?;
            let best = (0..env.action_count())
                .filter(|&a| codec.encode(a).starts_with(&p))
                .map(|a| q[a])
                .fold(f64::NEG_INFINITY, f64::max);
            let scaled = lambda.powi((d - 1 - p.len()) as i32) * best;
            prefixes.push(json!({ "prefix": p.to_string(), "q": symbols, "restricted_max": best, "scaled_max": scaled }));
        }
        out.push(json!({ "history": hist.key(), "actions": actions, "prefixes": prefixes }));
    }
    Ok(json!({ "d": d, "lambda": lambda, "horizon": h, "histories": out }).to_string())
}

/// A mock session that keeps its symbols and replays them; sessions are short.
pub struct Mock {
    env: Environment,
    seed: u64,
    symbols: Vec<u8>,
}

impl Mock {
    pub fn new(env_json: &str, seed: u32) -> Result<Self, String> {
        Ok(Self { env: load(env_json)?, seed: seed as u64, symbols: Vec::new() })
    }

    fn session(&self, symbols: &[u8]) -> Result<MockSession<'_>, String> {
        let seq = SeqEnv::with_base(&self.env, 2, FillerMode::Repeat).map_err(err)?;
        MockSession::replay(seq, self.seed, symbols).map_err(err)
    }

    /// Issues one symbol and returns the whole tick log.
    pub fn push(&mut self, x: u8) -> Out {
        let mut next = self.symbols.clone();
        next.push(x);
        let log = self.session(&next)?.log_csv();
        self.symbols = next;
        Ok(log)
    }

    pub fn log(&self) -> Out {
        Ok(self.session(&self.symbols)?.log_csv())
    }

    pub fn depth(&self) -> usize {
        seqrl::codec::code_length(self.env.action_count(), 2)
    }
}

#[wasm_bindgen(js_name = randomEnv)]
pub fn random_env_js(seed: u32, actions: usize, context: usize) -> Result<String, JsError> {
    random_env_json(seed, actions, context).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = boundsCurve)]
pub fn bounds_curve(actions: usize, epsilon: f64, points: usize) -> Result<String, JsError> {
    bounds_curve_json(actions, epsilon, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = valueLadder)]
pub fn value_ladder(env_json: &str, gamma: f64) -> Result<String, JsError> {
    value_ladder_json(env_json, gamma).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct MockDemo(Mock);

#[wasm_bindgen]
impl MockDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(env_json: &str, seed: u32) -> Result<MockDemo, JsError> {
        Mock::new(env_json, seed).map(MockDemo).map_err(|e| JsError::new(&e))
    }

    pub fn push(&mut self, x: u8) -> Result<String, JsError> {
        self.0.push(x).map_err(|e| JsError::new(&e))
    }

    pub fn log(&self) -> Result<String, JsError> {
        self.0.log().map_err(|e| JsError::new(&e))
    }

    pub fn depth(&self) -> usize {
        self.0.depth()
    }
}
