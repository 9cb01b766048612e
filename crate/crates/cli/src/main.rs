use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use seqrl::codec::{code_length, prefix_count, prefix_from_index, ActionCodec};
use seqrl::env::{Environment, EnvironmentSpec, DEFAULT_HISTORY_CAP};
use seqrl::esa::{
    bound_binary, bound_plain, build_abstraction, build_surrogate, covering_depth, induced_policy,
    policy_loss, solve_surrogate, AbstractionMode, BoundReport, Weighting,
};
use seqrl::harness::gen::{padded, random_env, scaling_family, Sizes};
use seqrl::harness::{
    emit_report, epsilon_of_delta, family_pay, run_suite, SuiteConfig, SuiteId, ReportFormat,
    VerificationReport,
};
use seqrl::planner::{horizon_for, DiscountPair, Planner, PolicySpec, SeqPlanner, DEFAULT_NODE_BUDGET};
use seqrl::scalar::{format_rational, parse_rational, rational_from_f64, rational_to_f64, Rational, Scalar};
use seqrl::seqenv::symbols_from_log;
use seqrl::{FillerMode, MockSession, SeqEnv};

#[derive(Parser)]
#[command(name = "seqrl", version, about = "Action sequentialization toolkit")]
struct Cli {
    /// Exact rational arithmetic where the discount allows it.
    #[arg(long, global = true, env = "SEQRL_EXACT", value_parser = clap::builder::BoolishValueParser::new())]
    exact: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Q-values of an environment, original or sequentialized, as CSV.
    Solve(SolveArgs),
    /// Drive the binary mock with a symbol string and print its tick log.
    Mock(MockArgs),
    /// Build a Q*-grid abstraction, solve its surrogate and report the policy loss.
    Esa(EsaArgs),
    /// State-count bounds for plain and binarized abstractions.
    Bounds(BoundsArgs),
    /// Run verification suites and write a report.
    Verify(VerifyArgs),
    /// Generate a random environment (or a member of the action-scaling family).
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    Orig,
    Seq,
    Aug,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long, value_enum, default_value = "orig")]
    mode: SolveMode,
    /// Discount, as a decimal or a fraction.
    #[arg(long, default_value = "1/2")]
    gamma: String,
    /// Truncation tolerance; sets the horizon.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Stationary policy file; values are `Q^Π` instead of `Q*`.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Enumerate histories up to this many steps.
    #[arg(long, default_value_t = 1)]
    depth: usize,
}

#[derive(clap::Args)]
struct MockArgs {
    #[arg(long)]
    env: PathBuf,
    /// `default` or a code table file.
    #[arg(long, default_value = "default")]
    codec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Symbols to issue, e.g. `0110`.
    #[arg(long, conflicts_with = "replay")]
    symbols: Option<String>,
    /// Replay the symbols of an earlier tick log.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EsaMode {
    Plain,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Uniform,
    Visit,
}

#[derive(clap::Args)]
struct EsaArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long, value_enum, default_value = "bin")]
    mode: EsaMode,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, value_enum, default_value = "visit")]
    weighting: WeightingArg,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
}

#[derive(clap::Args)]
struct BoundsArgs {
    #[arg(long)]
    actions: usize,
    #[arg(long)]
    gamma: String,
    #[arg(long)]
    epsilon: String,
    /// Reward range `R`.
    #[arg(long, default_value = "1")]
    range: String,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// A suite id or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Report file; the format follows the extension unless `--format` is given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    obs: usize,
    #[arg(long, default_value_t = 2)]
    rewards: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 0)]
    context: usize,
    #[arg(long, default_value_t = 0.3)]
    sparsity: f64,
    /// Pad the action set to a power of 2.
    #[arg(long)]
    pad: bool,
    /// Emit the action-scaling family member with this many actions instead.
    #[arg(long)]
    scaling_family: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_spec(path: &Path) -> Result<EnvironmentSpec> {
    Ok(EnvironmentSpec::from_json(&read(path)?)?)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exact = cli.exact;
    match cli.command {
        Command::Solve(a) => solve(a, exact)?,
        Command::Mock(a) => mock(a)?,
        Command::Esa(a) => esa(a)?,
        Command::Bounds(a) => bounds(a)?,
        Command::Verify(a) => return verify(a, exact),
        Command::Gen(a) => gen(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

struct Rows(csv::Writer<Vec<u8>>);

impl Rows {
    fn new(second: &str) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["history", second, "value"])?;
        Ok(Self(w))
    }

    fn push(&mut self, history: &str, label: &str, value: String) -> Result<()> {
        Ok(self.0.write_record([history, label, value.as_str()])?)
    }

    fn finish(self) -> Result<String> {
        Ok(String::from_utf8(self.0.into_inner()?)?)
    }
}

fn solve(args: SolveArgs, exact: bool) -> Result<()> {
    let spec = load_spec(&args.env)?;
    let gamma = parse_rational(&args.gamma)?;
    let policy = args.policy.as_deref().map(read).transpose()?.map(|t| PolicySpec::from_json(&t)).transpose()?;
    let text = match args.mode {
        SolveMode::Orig => {
            let env = Environment::validate(spec, exact)?;
            if exact {
                solve_orig::<Rational>(&env, &gamma, &args, policy.as_ref())?
            } else {
                solve_orig::<f64>(&env, &gamma, &args, policy.as_ref())?
            }
        }
        SolveMode::Seq | SolveMode::Aug => {
            let env = Environment::validate(padded(&spec, 2), exact)?;
            let filler = match args.mode {
                SolveMode::Aug => {
                    if !env.is_markov() {
                        bail!(seqrl::Error::NotMarkovEnv(env.context_length()));
                    }
                    FillerMode::Augmented
                }
                _ => FillerMode::Repeat,
            };
            let seq = SeqEnv::with_base(&env, 2, filler)?;
            let pair = DiscountPair::new(gamma, seq.depth())?;
            if exact && pair.lambda_exact.is_some() {
                solve_seq::<Rational>(&seq, &pair, &args, policy.as_ref())?
            } else {
                if exact {
                    log::warn!("λ = γ^(1/{}) is irrational; using floating point", seq.depth());
                }
                solve_seq::<f64>(&seq, &pair, &args, policy.as_ref())?
            }
        }
    };
    print!("{text}");
    Ok(())
}

fn horizon(env: &Environment, gamma: f64, tol: f64) -> usize {
    horizon_for(gamma, env.reward_range_f64().max(f64::MIN_POSITIVE), tol)
}

fn solve_orig<V: Scalar>(env: &Environment, gamma: &Rational, args: &SolveArgs, policy: Option<&PolicySpec>) -> Result<String> {
    let h = horizon(env, rational_to_f64(gamma), args.tol);
    let g = V::from_rational(gamma);
    let planner = match policy {
        Some(p) => Planner::evaluate(env, g, p.for_contexts(env)?, h, DEFAULT_NODE_BUDGET)?,
        None => Planner::optimal(env, g, h, DEFAULT_NODE_BUDGET)?,
    };
    let mut rows = Rows::new("action")?;
    for hist in env.enumerate_up_to(args.depth, DEFAULT_HISTORY_CAP)? {
        for (a, q) in planner.q_values(&hist)?.iter().enumerate() {
            rows.push(&hist.key(), &env.actions()[a].name, q.render())?;
        }
    }
    rows.finish()
}

fn solve_seq<V: Scalar>(seq: &SeqEnv, pair: &DiscountPair, args: &SolveArgs, policy: Option<&PolicySpec>) -> Result<String> {
    let steps = horizon(seq.env(), pair.gamma_f64(), args.tol);
    let lambda: V = pair.lambda_as()?;
    let planner = match policy {
        Some(p) => SeqPlanner::evaluate(seq, lambda, p.for_seq_states(seq)?, steps, DEFAULT_NODE_BUDGET)?,
        None => SeqPlanner::optimal(seq, lambda, steps, DEFAULT_NODE_BUDGET)?,
    };
    let mut rows = Rows::new("symbol")?;
    for hist in seq.env().enumerate_up_to(args.depth, DEFAULT_HISTORY_CAP)? {
        let tau = seq.sequentialize(&hist);
        for pi in 0..prefix_count(2, seq.depth()) {
            let t = seq.welded(&tau, &prefix_from_index(pi, 2));
            for x in 0..2u8 {
                rows.push(&t.key(), &x.to_string(), planner.q(&t, x)?.render())?;
            }
        }
    }
    rows.finish()
}

fn parse_symbols(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| c.to_digit(10).map(|d| d as u8).with_context(|| format!("bad symbol {c:?}")))
        .collect()
}

fn mock(args: MockArgs) -> Result<()> {
    let env = Environment::validate(padded(&load_spec(&args.env)?, 2), false)?;
    let codec = if args.codec == "default" {
        ActionCodec::build(env.actions(), 2)?
    } else {
        ActionCodec::parse_dump(&read(Path::new(&args.codec))?, 2)?
    };
    let symbols = match (&args.symbols, &args.replay) {
        (Some(s), _) => parse_symbols(s)?,
        (None, Some(p)) => symbols_from_log(&read(p)?)?,
        (None, None) => bail!("give --symbols or --replay"),
    };
    let seq = SeqEnv::new(&env, codec, FillerMode::Repeat)?;
    let session = MockSession::replay(seq, args.seed, &symbols)?;
    print!("{}", session.log_csv());
    Ok(())
}

fn bound_json(report: &BoundReport) -> serde_json::Value {
    serde_json::to_value(report).expect("bound report serializes")
}

fn esa(args: EsaArgs) -> Result<()> {
    let spec = load_spec(&args.env)?;
    let (mode, spec) = match args.mode {
        EsaMode::Plain => (AbstractionMode::Plain, spec),
        EsaMode::Bin => (AbstractionMode::Binarized, padded(&spec, 2)),
    };
    let weighting = match args.weighting {
        WeightingArg::Uniform => Weighting::Uniform,
        WeightingArg::Visit => Weighting::Visit,
    };
    let env = Environment::validate(spec, false)?;
    let map = build_abstraction(&env, mode, args.delta, args.gamma, args.depth, DEFAULT_HISTORY_CAP)?;
    let mdp = build_surrogate(&map, weighting)?;
    let (abstract_policy, _) = solve_surrogate(&mdp, map.disc(), 1e-10);
    let policy = induced_policy(&env, &map, &abstract_policy)?;
    let loss = policy_loss(&env, &policy, args.gamma, args.depth.max(covering_depth(&env)), 1e-8)?;
    let d = code_length(env.action_count(), 2);
    let eps = epsilon_of_delta(mode, args.delta, args.gamma, d);
    let (eps_r, gamma_r, range) = (rational_from_f64(eps)?, rational_from_f64(args.gamma)?, env.reward_range());
    let bound = match mode {
        AbstractionMode::Plain => bound_plain(&eps_r, &gamma_r, env.action_count(), &range)
            .map(|b| json!({ "exact": format_rational(&b), "approx": rational_to_f64(&b) })),
        AbstractionMode::Binarized => bound_binary(&eps_r, &gamma_r, env.action_count(), &range).map(|r| bound_json(&r)),
    };
    let census = map.census();
    let out = json!({
        "mode": match mode { AbstractionMode::Plain => "plain", AbstractionMode::Binarized => "bin" },
        "delta": args.delta,
        "gamma": args.gamma,
        "depth": args.depth,
        "occupied_cells": census.occupied,
        "complete_cells": census.complete,
        "partial_cells": census.partial,
        "members": census.members,
        "max_spread": map.max_spread(),
        "epsilon_from_delta": eps,
        "bound": bound.as_ref().ok(),
        "bound_error": bound.as_ref().err().map(|e| e.to_string()),
        "surrogate_states": mdp.states(),
        "policy_loss": loss.loss,
        "loss_tail": loss.tail,
        "worst_history": loss.worst_history,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let eps = parse_rational(&args.epsilon)?;
    let gamma = parse_rational(&args.gamma)?;
    let range = parse_rational(&args.range)?;
    let report = bound_binary(&eps, &gamma, args.actions, &range)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!("{:<26} {} ({})", "actions (padded)", report.action_count, report.padded_action_count);
    eprintln!("{:<26} {}", "d", report.d);
    eprintln!("{:<26} {:.12}", "lambda", report.lambda);
    for (name, b) in [
        ("plain bound", &report.plain_bound),
        ("binary bound", &report.binary_bound),
        ("binary bound, gamma -> 1", &report.binary_asymptotic_bound),
    ] {
        eprintln!("{name:<26} {:.6e}  ({})", b.approx, b.exact);
    }
    eprintln!(
        "{:<26} {:.6} >= {:.6}: {}",
        "1 - lambda certificate", report.one_minus_lambda, report.certificate, report.certificate_holds
    );
    Ok(())
}

fn verify(args: VerifyArgs, exact: bool) -> Result<ExitCode> {
    let ids: Vec<SuiteId> = if args.suite == "all" {
        SuiteId::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let start = Instant::now();
    let mut report = VerificationReport::default();
    for id in ids {
        let t = Instant::now();
        let mut config = SuiteConfig::defaults(id, args.seed);
        config.exact = exact;
        let r = run_suite(&config);
        eprintln!(
            "{:<18} {:>4} pass {:>3} fail {:>3} skip  {:.2}s",
            id.name(),
            r.passed,
            r.failed,
            r.skipped,
            t.elapsed().as_secs_f64()
        );
        report.merge(r);
    }
    for f in report.failures() {
        eprintln!("FAIL {}/{}/{}: {} vs {} (diff {:e}, tol {:e})", f.suite, f.env_id, f.check_id, f.lhs, f.rhs, f.abs_diff, f.tol);
    }
    eprintln!(
        "total: {} passed, {} failed, {} skipped in {:.2}s",
        report.passed,
        report.failed,
        report.skipped,
        start.elapsed().as_secs_f64()
    );
    if let Some(out) = &args.out {
        let format = match &args.format {
            Some(f) => f.parse()?,
            None => ReportFormat::from_path(out),
        };
        emit_report(&report, format, out)?;
    }
    Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn gen(args: GenArgs) -> Result<()> {
    let spec = match args.scaling_family {
        Some(actions) => scaling_family(actions, &family_pay())?,
        None => {
            let spec = random_env(args.seed, Sizes::new(args.obs, args.rewards, args.actions, args.context), args.sparsity)?;
            if args.pad {
                padded(&spec, 2)
            } else {
                spec
            }
        }
    };
    write_or_print(args.out.as_deref(), &(spec.to_json() + "\n"))
}
