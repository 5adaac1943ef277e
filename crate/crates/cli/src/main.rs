use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cqsw::catalog;
use cqsw::coding::{bins_for_rate, empirical_exponents_capped, optimal_error_bruteforce_capped, DecoderKind};
use cqsw::conditional::{conditional_entropy, conditional_variance};
use cqsw::exponent::{exponent, moderate_limit, moderate_ratio, ExponentCurve, ExponentKind};
use cqsw::testing::{one_shot_converse_min, rate_window_capped};
use cqsw::verify::run_suites;
use cqsw::{CQState, Variant, DEFAULT_CAP};

#[derive(Parser)]
#[command(name = "cqsw", version, about = "Exponents, simulations and checks for source coding with quantum side information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exponent curves on a rate grid, as CSV.
    Exponents(ExponentsArgs),
    /// Random-binning codes averaged over encoders.
    Simulate(CodeArgs),
    /// Optimal code by exhaustive search over encoders.
    Bruteforce(CodeArgs),
    /// Runs every property suite and reports failures.
    Verify(VerifyArgs),
    /// Sphere-packing exponent near the entropy against its moderate-deviation limit, as CSV.
    Moderate(ModerateArgs),
    /// Bounds on the optimal per-symbol rate at fixed error, as CSV.
    RateWindow(WindowArgs),
}

#[derive(Args)]
struct StateArg {
    /// Source state as JSON.
    #[arg(long)]
    state: PathBuf,
}

#[derive(Args)]
struct OutArg {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExponentsArgs {
    #[command(flatten)]
    state: StateArg,
    #[arg(long, default_value_t = 0.0)]
    rate_min: f64,
    /// Defaults to log₂ of the alphabet size.
    #[arg(long)]
    rate_max: Option<f64>,
    #[arg(long, default_value_t = 21)]
    steps: usize,
    /// Comma-separated variants; each one besides petz adds E_r and E_sp columns.
    #[arg(long, default_value = "petz")]
    variants: String,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct CodeArgs {
    #[command(flatten)]
    state: StateArg,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, conflicts_with = "rate")]
    w_size: Option<usize>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest |X|ⁿ·d_Bⁿ product handled.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u128,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct VerifyArgs {
    /// Source state as JSON; every shipped example when absent.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ModerateArgs {
    #[command(flatten)]
    state: StateArg,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.02,0.01,0.005")]
    deltas: Vec<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct WindowArgs {
    #[command(flatten)]
    state: StateArg,
    /// Largest blocklength; one row per n = 1..N.
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u128,
    #[command(flatten)]
    out: OutArg,
}

/// Invalid flag combination or value; the message names the field.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Some verified property failed.
#[derive(Debug)]
struct PropertyFailure(usize);

impl std::fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} properties failed", self.0)
    }
}

impl std::error::Error for PropertyFailure {}

fn config(message: String) -> anyhow::Error {
    ConfigError(message).into()
}

fn load(path: &PathBuf) -> anyhow::Result<CQState> {
    CQState::load(path).with_context(|| format!("state: cannot load {}", path.display()))
}

fn emit(out: &OutArg, text: &str) -> anyhow::Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("out: cannot write {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_variants(list: &str) -> anyhow::Result<Vec<Variant>> {
    let mut out = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let v: Variant = item.parse().map_err(|_| config(format!("variants: unknown variant `{}`", item.trim())))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(config("variants: list is empty".into()));
    }
    Ok(out)
}

fn grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| if k + 1 == steps { max } else { min + (max - min) * k as f64 / (steps - 1) as f64 }).collect()
}

fn exponents(args: &ExponentsArgs) -> anyhow::Result<()> {
    let variants = parse_variants(&args.variants)?;
    if args.steps < 2 {
        return Err(config(format!("steps: must be at least 2, got {}", args.steps)));
    }
    if !(args.rate_min >= 0.0) || !args.rate_min.is_finite() {
        return Err(config(format!("rate_min: must be finite and nonnegative, got {}", args.rate_min)));
    }
    if let Some(max) = args.rate_max {
        if !(args.rate_min < max) || !max.is_finite() {
            return Err(config(format!("rate_min ({}) must be less than rate_max ({max})", args.rate_min)));
        }
    }
    let s = load(&args.state.state)?;
    let rate_max = args.rate_max.unwrap_or((s.size() as f64).log2());
    if !(args.rate_min < rate_max) {
        return Err(config(format!("rate_min ({}) must be less than rate_max ({rate_max})", args.rate_min)));
    }
    let rates = grid(args.rate_min, rate_max, args.steps);
    let mut kinds = vec![
        ExponentKind::RandomCodingDown,
        ExponentKind::RandomCoding(Variant::Petz),
        ExponentKind::SpherePacking(Variant::Petz),
        ExponentKind::StrongConverse(Variant::Sandwiched),
        ExponentKind::StrongConverse(Variant::Flat),
    ];
    let mut header = String::from("R,E_r_down,E_r,E_sp,E_sc_star,E_sc_flat,alpha_star");
    for v in variants.iter().filter(|&&v| v != Variant::Petz) {
        kinds.push(ExponentKind::RandomCoding(*v));
        kinds.push(ExponentKind::SpherePacking(*v));
        write!(header, ",E_r_{v},E_sp_{v}")?;
    }
    let curves: Vec<ExponentCurve> = kinds.iter().map(|&k| ExponentCurve::compute(&s, &rates, k)).collect::<Result<_, _>>()?;
    let mut text = header;
    text.push('\n');
    for (i, r) in rates.iter().enumerate() {
        write!(text, "{r}")?;
        for (j, c) in curves.iter().enumerate() {
            write!(text, ",{}", c.values[i])?;
            if j == 4 {
                match curves[2].alphas[i] {
                    Some(a) => write!(text, ",{a}")?,
                    None => text.push_str(",nan"),
                }
            }
        }
        text.push('\n');
    }
    emit(&args.out, &text)
}

fn code_size(args: &CodeArgs) -> anyhow::Result<(usize, f64)> {
    if args.n == 0 {
        return Err(config("n: must be at least 1".into()));
    }
    match (args.w_size, args.rate) {
        (Some(w), _) if w == 0 => Err(config("w_size: must be at least 1".into())),
        (Some(w), _) => Ok((w, (w as f64).log2() / args.n as f64)),
        (None, Some(r)) if !(r >= 0.0) || !r.is_finite() => Err(config(format!("rate: must be finite and nonnegative, got {r}"))),
        (None, Some(r)) => Ok((bins_for_rate(args.n, r), r)),
        (None, None) => Err(config("w_size or rate: one of them is required".into())),
    }
}

fn header(s: &CQState, args: &CodeArgs, w: usize, rate: f64) -> anyhow::Result<String> {
    let mut text = String::new();
    writeln!(text, "state {}", &s.hash()[..16])?;
    writeln!(text, "alphabet {} dim_b {}", s.size(), s.dim_b())?;
    writeln!(text, "H(X|B) {}", conditional_entropy(s)?)?;
    writeln!(text, "V(X|B) {}", conditional_variance(s)?)?;
    writeln!(text, "n {} w_size {w} rate {rate}", args.n)?;
    Ok(text)
}

fn simulate(args: &CodeArgs) -> anyhow::Result<()> {
    if args.trials == 0 {
        return Err(config("trials: must be at least 1".into()));
    }
    let s = load(&args.state.state)?;
    let (w, _) = code_size(args)?;
    // the library rounds 2^{nR} up, so hand it the exact log of |W|
    let rate = (w as f64).log2() / args.n as f64;
    let mut text = header(&s, args, w, rate)?;
    writeln!(text, "trials {} seed {}", args.trials, args.seed)?;
    writeln!(text, "E_r_down {}", exponent(&s, rate, ExponentKind::RandomCodingDown)?)?;
    writeln!(text, "E_sc_star {}", exponent(&s, rate, ExponentKind::StrongConverse(Variant::Sandwiched))?)?;
    for (name, kind) in [("pgm", DecoderKind::PrettyGood), ("optimal", DecoderKind::Optimal)] {
        let r = empirical_exponents_capped(&s, args.n, rate, kind, args.trials, args.seed, args.cap)?;
        writeln!(
            text,
            "{name} mean_error {} best_error {} e_hat {} sc_hat {}",
            r.mean_error, r.best_error, r.e_hat, r.sc_hat
        )?;
    }
    emit(&args.out, &text)
}

fn bruteforce(args: &CodeArgs) -> anyhow::Result<()> {
    let s = load(&args.state.state)?;
    let (w, _) = code_size(args)?;
    let rate = (w as f64).log2() / args.n as f64;
    let (report, code) = optimal_error_bruteforce_capped(&s, args.n, w, args.cap)?;
    let mut text = header(&s, args, w, rate)?;
    writeln!(text, "p_error {}", report.p_error)?;
    writeln!(text, "p_success {}", report.p_success)?;
    writeln!(text, "certificate {}", report.certificate)?;
    let bins: Vec<String> = code.encoder().iter().map(|b| b.to_string()).collect();
    writeln!(text, "encoder {}", bins.join(","))?;
    let sc = exponent(&s, rate, ExponentKind::StrongConverse(Variant::Sandwiched))?;
    writeln!(text, "success_bound {}", (-sc.value() * args.n as f64).exp2())?;
    if args.n == 1 && w < s.size() {
        let a = one_shot_converse_min(&s, w, 10, args.seed)?;
        writeln!(text, "error_floor {}", (-a.value()).exp2())?;
    }
    emit(&args.out, &text)
}

fn verify(args: &VerifyArgs) -> anyhow::Result<()> {
    let states: Vec<(String, CQState)> = match &args.state {
        Some(path) => vec![(path.display().to_string(), load(path)?)],
        None => catalog::shipped().into_iter().map(|(n, s)| (n.to_string(), s)).collect(),
    };
    let results = run_suites(&states, args.seed);
    let mut text = String::new();
    for (name, s) in &states {
        writeln!(text, "state {name} {}", &s.hash()[..12])?;
    }
    for r in &results {
        writeln!(text, "{r}")?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    writeln!(text, "{} properties, {failed} failed", results.len())?;
    emit(&args.out, &text)?;
    if failed > 0 {
        return Err(PropertyFailure(failed).into());
    }
    Ok(())
}

fn moderate(args: &ModerateArgs) -> anyhow::Result<()> {
    if args.deltas.is_empty() {
        return Err(config("deltas: list is empty".into()));
    }
    if let Some(d) = args.deltas.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(config(format!("deltas: every entry must be positive, got {d}")));
    }
    let s = load(&args.state.state)?;
    let limit = moderate_limit(&s)?;
    let mut text = String::from("delta,ratio,limit\n");
    for &d in &args.deltas {
        writeln!(text, "{d},{},{limit}", moderate_ratio(&s, d)?)?;
    }
    emit(&args.out, &text)
}

fn rate_window(args: &WindowArgs) -> anyhow::Result<()> {
    if args.n == 0 {
        return Err(config("n: must be at least 1".into()));
    }
    if !(args.epsilon > 0.0 && args.epsilon < 1.0) {
        return Err(config(format!("epsilon: must lie in (0, 1), got {}", args.epsilon)));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(config(format!("alpha: must lie in (0, 1), got {}", args.alpha)));
    }
    let s = load(&args.state.state)?;
    let mut text = String::from("n,lower,upper\n");
    for n in 1..=args.n {
        let (lo, hi) = rate_window_capped(&s, n, args.epsilon, args.alpha, args.cap)?;
        writeln!(text, "{n},{lo},{hi}")?;
    }
    emit(&args.out, &text)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<PropertyFailure>().is_some() {
        return 1;
    }
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<cqsw::Error>() {
        Some(cqsw::Error::CapExceeded { .. } | cqsw::Error::InvalidEpsilon(_) | cqsw::Error::InvalidAlpha(_))
        | Some(cqsw::Error::WTooLarge { .. } | cqsw::Error::DomainError(_) | cqsw::Error::InvalidMu { .. }) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Exponents(a) => exponents(a),
        Command::Simulate(a) => simulate(a),
        Command::Bruteforce(a) => bruteforce(a),
        Command::Verify(a) => verify(a),
        Command::Moderate(a) => moderate(a),
        Command::RateWindow(a) => rate_window(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
