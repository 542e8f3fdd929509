//! `twinrelay` command-line front end.
//!
//! Every subcommand validates its flags and builds all codebooks before any
//! trial runs, so a bad flag exits with status 2 and leaves no output file.
//! Runtime failures exit with 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use twinrelay::bsc::{BinaryLinearCode, BscExperiment, BscParams};
use twinrelay::io::{format_sig, write_atomic};
use twinrelay::minangle::{
    concentration_experiment, min_angle_error_rate, MinAngleConfig, MinAngleExperiment,
    MIN_CONCENTRATION_SAMPLES,
};
use twinrelay::multihop::{
    build_schedule, run_multihop, table1_mismatches, throughput, MultihopExperiment, MultihopMode,
};
use twinrelay::rates::{crossover_window, db_to_linear, GridSpec, RateCurve};
use twinrelay::sim::{run_trials, AncPowerExperiment, TrialPlan, TrialReport};
use twinrelay::twoway::{BroadcastMode, ChannelParams, SessionBatchRecord, SessionExperiment};
use twinrelay::{LinearCode, NestedLatticePair, SimRng};

#[derive(Parser)]
#[command(
    name = "twinrelay",
    version,
    about = "Lattice network coding for the two-way relay channel"
)]
struct Cli {
    /// Worker threads for Monte Carlo runs (results do not depend on it)
    #[arg(long, global = true, env = "TWINRELAY_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form exchange-rate curves over an SNR grid
    Rates(RatesArgs),
    /// Monte Carlo simulation of one scheme
    Sim {
        #[command(subcommand)]
        scheme: Scheme,
    },
    /// Half-duplex line of relays between two end nodes
    Multihop(MultihopArgs),
    /// Off-shell fraction of sums of uniform ball points
    Concentration(ConcentrationArgs),
}

#[derive(Subcommand)]
enum Scheme {
    /// Nested-lattice relay with modulo-sum decoding
    Lattice(LatticeArgs),
    /// XOR relay over binary symmetric channels
    Bsc(BscArgs),
    /// Amplify-and-forward relay power check
    AncPower(AncPowerArgs),
    /// Minimum-angle decoding of sums of ball codebooks
    Minangle(MinangleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
struct Output {
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Serialize)]
struct TrialArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stop once the 95% CI half-width of the first error class reaches this
    #[arg(long)]
    target_ci: Option<f64>,
    /// Trial cap when --target-ci is set
    #[arg(long, default_value_t = 10_000_000)]
    max_trials: u64,
}

#[derive(Args, Serialize)]
struct RatesArgs {
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    snr_min: f64,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    snr_max: f64,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Broadcast {
    Direct,
    IndexIdeal,
}

#[derive(Args, Serialize)]
struct LatticeArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    q: u32,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, value_enum, default_value_t = Broadcast::Direct)]
    broadcast: Broadcast,
    /// Append one JSON-lines summary record to this file
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    trials: TrialArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct BscArgs {
    #[arg(long)]
    p: f64,
    /// `hamming74` or `random:K,N`
    #[arg(long, default_value = "hamming74")]
    code: String,
    #[command(flatten)]
    trials: TrialArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct AncPowerArgs {
    #[arg(long, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[command(flatten)]
    trials: TrialArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct MinangleArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: f64,
    /// Shell half-width; defaults to 0.1 * power
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[command(flatten)]
    trials: TrialArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Symbolic,
    NumericNoiseless,
    NumericAwgn,
}

#[derive(Args, Serialize)]
struct MultihopArgs {
    #[arg(long)]
    relays: usize,
    #[arg(long, default_value_t = 6)]
    packets: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Symbolic)]
    mode: ModeArg,
    #[arg(long, default_value_t = 8)]
    q: u32,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Independent AWGN runs to aggregate (numeric-awgn only)
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct ConcentrationArgs {
    /// Comma-separated dimensions
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    /// Shell half-width as a fraction of the power
    #[arg(long, default_value_t = 0.1)]
    delta_ratio: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

type Step<T> = std::result::Result<T, Failure>;

fn invalid<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Invalid(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn ensure(cond: bool, msg: impl Into<String>) -> Step<()> {
    if cond {
        Ok(())
    } else {
        Err(Failure::Invalid(anyhow::anyhow!(msg.into())))
    }
}

/// Provenance embedded in JSON outputs and written next to CSV outputs.
#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    master_seed: Option<u64>,
    args: &'a A,
}

struct Ctx {
    workers: usize,
}

impl Ctx {
    fn plan(&self, t: &TrialArgs) -> Step<TrialPlan> {
        let mut plan = TrialPlan::fixed(t.trials, t.seed, self.workers);
        if let Some(ci) = t.target_ci {
            ensure(
                ci > 0.0 && ci < 1.0,
                format!("--target-ci {ci} must lie in (0, 1)"),
            )?;
            ensure(t.max_trials > 0, "--max-trials must be at least 1")?;
            plan.target_ci = Some(ci);
            plan.max_trials = t.max_trials;
        } else {
            ensure(t.trials > 0, "--trials must be at least 1")?;
        }
        Ok(plan)
    }
}

fn params_from_db(snr_db: f64, power: f64) -> Step<ChannelParams> {
    ensure(snr_db.is_finite(), "--snr-db must be finite")?;
    ChannelParams::from_snr_db(snr_db, power).map_err(invalid)
}

fn check_out(output: &Output) -> Step<()> {
    if let Some(path) = &output.out {
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        ensure(
            dir.is_dir(),
            format!("output directory {} does not exist", dir.display()),
        )?;
    }
    Ok(())
}

fn emit(output: &Output, body: &str) -> Step<()> {
    match &output.out {
        Some(path) => write_atomic(path, body.as_bytes())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    out.with_file_name(name)
}

/// Writes `result` as JSON wrapped with its provenance.
fn emit_json<A: Serialize>(output: &Output, cfg: &RunConfig<A>, result: Value) -> Step<()> {
    let doc = json!({ "provenance": cfg, "result": result });
    emit(
        output,
        &(serde_json::to_string_pretty(&doc).map_err(runtime)? + "\n"),
    )
}

/// Writes CSV and, for file outputs, the provenance sidecar.
fn emit_csv<A: Serialize>(output: &Output, cfg: &RunConfig<A>, csv: &str) -> Step<()> {
    if let Some(out) = &output.out {
        let side = serde_json::to_string_pretty(cfg).map_err(runtime)? + "\n";
        write_atomic(&sidecar_path(out), side.as_bytes()).map_err(runtime)?;
    }
    emit(output, csv)
}

fn report_csv(r: &TrialReport) -> String {
    let mut s = String::from("class,errors,trials,estimate,ci_low,ci_high\n");
    for c in &r.classes {
        s += &format!(
            "{},{},{},{},{},{}\n",
            c.name,
            c.errors,
            r.trials,
            format_sig(c.estimate, 12),
            format_sig(c.ci_low, 12),
            format_sig(c.ci_high, 12)
        );
    }
    s
}

fn summarize(r: &TrialReport) {
    for c in &r.classes {
        eprintln!(
            "{}: {}/{} = {} [{}, {}]",
            c.name,
            c.errors,
            r.trials,
            format_sig(c.estimate, 6),
            format_sig(c.ci_low, 6),
            format_sig(c.ci_high, 6)
        );
    }
}

fn emit_report<A: Serialize>(
    output: &Output,
    cfg: &RunConfig<A>,
    r: &TrialReport,
    extra: Value,
) -> Step<()> {
    summarize(r);
    match output.format.unwrap_or(Format::Json) {
        Format::Csv => emit_csv(output, cfg, &report_csv(r)),
        Format::Json => {
            let mut v = serde_json::to_value(r).map_err(runtime)?;
            if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
                m.extend(e);
            }
            emit_json(output, cfg, v)
        }
    }
}

fn cmd_rates(a: &RatesArgs) -> Step<()> {
    let grid = GridSpec::new(a.snr_min, a.snr_max, a.step).map_err(invalid)?;
    check_out(&a.output)?;
    let curve = RateCurve::evaluate(grid).map_err(runtime)?;
    let (lo, hi) = crossover_window().map_err(runtime)?;
    let cfg = RunConfig {
        tool: "twinrelay",
        version: env!("CARGO_PKG_VERSION"),
        command: "rates",
        master_seed: None,
        args: a,
    };
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => emit_csv(&a.output, &cfg, &curve.to_csv())?,
        Format::Json => emit_json(
            &a.output,
            &cfg,
            json!({ "crossover_db": [lo, hi], "points": curve.points }),
        )?,
    }
    if a.output.out.is_some() {
        println!("points: {}", curve.points.len());
    }
    println!("crossover_db: {lo:.3} {hi:.3}");
    Ok(())
}

fn cmd_lattice(ctx: &Ctx, a: &LatticeArgs) -> Step<()> {
    let params = params_from_db(a.snr_db, 1.0)?;
    ensure(
        a.k >= 1 && a.k <= a.n,
        format!("need 1 <= k <= n, got k={} n={}", a.k, a.n),
    )?;
    let code = LinearCode::systematic(a.q, a.k, a.n).map_err(invalid)?;
    let pair = NestedLatticePair::new(code, params.power()).map_err(invalid)?;
    let plan = ctx.plan(&a.trials)?;
    check_out(&a.output)?;
    let mode = match a.broadcast {
        Broadcast::Direct => BroadcastMode::DirectLatticeRelay,
        Broadcast::IndexIdeal => BroadcastMode::IndexForwardIdeal,
    };
    let exp = SessionExperiment {
        pair: pair.clone(),
        params,
        mode,
    };
    let r = run_trials(&exp, &plan).map_err(runtime)?;
    if let Some(log) = &a.log {
        use std::io::Write;
        let line = SessionBatchRecord::from_report(&r, &params, &pair).to_json_line();
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(log)
            .with_context(|| format!("opening {}", log.display()))
            .map_err(runtime)?;
        writeln!(f, "{line}").map_err(runtime)?;
    }
    let cfg = RunConfig {
        tool: "twinrelay",
        version: env!("CARGO_PKG_VERSION"),
        command: "sim lattice",
        master_seed: Some(plan.master_seed),
        args: a,
    };
    let extra = json!({
        "n": a.n, "q": a.q, "k": a.k, "rate": pair.rate(),
        "snr_db": a.snr_db, "alpha": params.alpha_opt(),
    });
    emit_report(&a.output, &cfg, &r, extra)
}

fn parse_bsc_code(spec: &str, seed: u64) -> Step<BinaryLinearCode> {
    if spec == "hamming74" {
        return Ok(BinaryLinearCode::hamming74());
    }
    let dims = spec
        .strip_prefix("random:")
        .and_then(|s| s.split_once(','))
        .and_then(|(k, n)| {
            Some((
                k.trim().parse::<usize>().ok()?,
                n.trim().parse::<usize>().ok()?,
            ))
        });
    let Some((k, n)) = dims else {
        return Err(invalid(anyhow::anyhow!(
            "--code must be hamming74 or random:K,N, got {spec:?}"
        )));
    };
    let mut rng = SimRng::derived(seed, &[0xc0de]);
    BinaryLinearCode::random(k, n, &mut rng).map_err(invalid)
}

fn cmd_bsc(ctx: &Ctx, a: &BscArgs) -> Step<()> {
    let params = BscParams::new(a.p).map_err(invalid)?;
    let code = parse_bsc_code(&a.code, a.trials.seed)?;
    let plan = ctx.plan(&a.trials)?;
    check_out(&a.output)?;
    let extra = json!({ "n": code.n(), "k": code.k(), "p": a.p });
    let r = run_trials(&BscExperiment { code, params }, &plan).map_err(runtime)?;
    let cfg = RunConfig {
        tool: "twinrelay",
        version: env!("CARGO_PKG_VERSION"),
        command: "sim bsc",
        master_seed: Some(plan.master_seed),
        args: a,
    };
    emit_report(&a.output, &cfg, &r, extra)
}

fn cmd_anc_power(ctx: &Ctx, a: &AncPowerArgs) -> Step<()> {
    let params = params_from_db(a.snr_db, 1.0)?;
    ensure(a.dim >= 1, "--dim must be at least 1")?;
    let plan = ctx.plan(&a.trials)?;
    check_out(&a.output)?;
    let r = run_trials(&AncPowerExperiment { params, dim: a.dim }, &plan).map_err(runtime)?;
    for o in &r.observables {
        eprintln!("{}: {}", o.name, format_sig(o.mean, 6));
    }
    let cfg = RunConfig {
        tool: "twinrelay",
        version: env!("CARGO_PKG_VERSION"),
        command: "sim anc-power",
        master_seed: Some(plan.master_seed),
        args: a,
    };
    emit_report(
        &a.output,
        &cfg,
        &r,
        json!({ "snr_db": a.snr_db, "power": params.power() }),
    )
}

fn cmd_minangle(ctx: &Ctx, a: &MinangleArgs) -> Step<()> {
    ensure(
        a.power > 0.0 && a.power.is_finite(),
        "--power must be positive",
    )?;
    ensure(a.snr_db.is_finite(), "--snr-db must be finite")?;
    let mut cfg = MinAngleConfig::new(a.dim, a.power, a.power / db_to_linear(a.snr_db));
    cfg.gamma = a.gamma;
    if let Some(d) = a.delta {
        cfg.delta = d;
    }
    // Builds the codebooks and rejects degenerate instances up front.
    MinAngleExperiment::new(&cfg).map_err(invalid)?;
    let plan = ctx.plan(&a.trials)?;
    check_out(&a.output)?;
    let r = min_angle_error_rate(&cfg, &plan).map_err(runtime)?;
    eprintln!(
        "M1={} M2={} on-shell sums={} error_rate={} ml_error_rate={}",
        r.m1,
        r.m2,
        r.msum_on_shell,
        format_sig(r.error_rate, 6),
        format_sig(r.ml_error_rate, 6)
    );
    let prov = RunConfig {
        tool: "twinrelay",
        version: env!("CARGO_PKG_VERSION"),
        command: "sim minangle",
        master_seed: Some(plan.master_seed),
        args: a,
    };
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&a.output, &prov, serde_json::to_value(&r).map_err(runtime)?),
        Format::Csv => {
            let v = serde_json::to_value(&r).map_err(runtime)?;
            let m = v.as_object().expect("report is an object");
            let head: Vec<&str> = m.keys().map(String::as_str).collect();
            let row: Vec<String> = m.values().map(|x| x.to_string()).collect();
            emit_csv(
                &a.output,
                &prov,
                &format!("{}\n{}\n", head.join(","), row.join(",")),
            )
        }
    }
}

fn cmd_multihop(ctx: &Ctx, a: &MultihopArgs) -> Step<()> {
    ensure(a.relays >= 1, "--relays must be at least 1")?;
    ensure(a.packets >= 1, "--packets must be at least 1")?;
    let (mode, params) = match a.mode {
        ModeArg::Symbolic => (
            MultihopMode::Symbolic,
            ChannelParams::noiseless(1.0).map_err(invalid)?,
        ),
        ModeArg::NumericNoiseless => (
            MultihopMode::NumericNoiseless,
            ChannelParams::noiseless(1.0).map_err(invalid)?,
        ),
        ModeArg::NumericAwgn => (MultihopMode::NumericAwgn, params_from_db(a.snr_db, 1.0)?),
    };
    let pair = match mode {
        MultihopMode::Symbolic => None,
        _ => {
            ensure(
                a.k >= 1 && a.k <= a.n,
                format!("need 1 <= k <= n, got k={} n={}", a.k, a.n),
            )?;
            let code = LinearCode::systematic(a.q, a.k, a.n).map_err(invalid)?;
            Some(NestedLatticePair::new(code, 1.0).map_err(invalid)?)
        }
    };
    ensure(a.trials >= 1, "--trials must be at least 1")?;
    check_out(&a.output)?;

    let schedule = build_schedule(a.relays, a.packets).map_err(runtime)?;
    let stats = throughput(&schedule);
    let run = run_multihop(&schedule, mode, pair.as_ref(), &params, a.seed).map_err(runtime)?;

    let mut result = json!({
        "schedule": serde_json::from_str::<Value>(&schedule.to_json()).map_err(runtime)?,
        "throughput": stats,
        "run": run,
    });
    if mode == MultihopMode::Symbolic && a.relays == 3 {
        let bad = table1_mismatches(&schedule);
        println!("table1: {}", if bad.is_empty() { "PASS" } else { "FAIL" });
        for (row, col, want, got) in &bad {
            eprintln!(
                "  slot {} node {}: expected {want:?}, got {got:?}",
                row + 1,
                col
            );
        }
        result["table1"] = json!(bad.is_empty());
    }
    if mode == MultihopMode::NumericAwgn && a.trials > 1 {
        let exp = MultihopExperiment {
            schedule: schedule.clone(),
            pair: pair.clone().expect("numeric mode"),
            params,
        };
        let r =
            run_trials(&exp, &TrialPlan::fixed(a.trials, a.seed, ctx.workers)).map_err(runtime)?;
        summarize(&r);
        result["report"] = serde_json::to_value(&r).map_err(runtime)?;
    }
    match stats.steady_period {
        Some(p) => println!("steady_period: {p}"),
        None => println!("steady_period: none"),
    }
    println!("max_coefficient: {}", stats.max_coefficient);
    if mode != MultihopMode::Symbolic {
        println!("hop_errors: {}/{}", run.hop_errors, run.hop_receptions);
        println!("errors: {}", run.end_errors);
    }

    let cfg = RunConfig {
        tool: "twinrelay",
        version: env!("CARGO_PKG_VERSION"),
        command: "multihop",
        master_seed: Some(a.seed),
        args: a,
    };
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&a.output, &cfg, result),
        Format::Csv => {
            let slots = schedule.slots.len();
            let mut s = String::from("slot");
            for i in 0..=a.relays + 1 {
                s += &format!(",{}", node_name(i, a.relays));
            }
            s.push('\n');
            for (i, row) in schedule.table(slots).iter().enumerate() {
                s += &format!("{}", i + 1);
                for cell in row {
                    s += &format!(",\"{cell}\"");
                }
                s.push('\n');
            }
            emit_csv(&a.output, &cfg, &s)
        }
    }
}

fn node_name(i: usize, relays: usize) -> String {
    match i {
        0 => "A".into(),
        i if i == relays + 1 => "B".into(),
        i => format!("R{i}"),
    }
}

fn cmd_concentration(ctx: &Ctx, a: &ConcentrationArgs) -> Step<()> {
    ensure(!a.n.is_empty(), "--n needs at least one dimension")?;
    ensure(a.n.iter().all(|&n| n >= 1), "dimensions must be at least 1")?;
    ensure(
        a.power > 0.0 && a.power.is_finite(),
        "--power must be positive",
    )?;
    ensure(
        a.delta_ratio >= 0.0 && a.delta_ratio < 2.0,
        "--delta-ratio must lie in [0, 2)",
    )?;
    ensure(
        a.samples >= MIN_CONCENTRATION_SAMPLES,
        format!("--samples must be at least {MIN_CONCENTRATION_SAMPLES}"),
    )?;
    check_out(&a.output)?;
    let delta = a.delta_ratio * a.power;
    let mut rows = Vec::new();
    for &n in &a.n {
        let r = concentration_experiment(n, a.power, delta, a.samples, a.seed, ctx.workers)
            .map_err(runtime)?;
        eprintln!("n={n}: {}", format_sig(r.fraction, 6));
        rows.push(r);
    }
    let cfg = RunConfig {
        tool: "twinrelay",
        version: env!("CARGO_PKG_VERSION"),
        command: "concentration",
        master_seed: Some(a.seed),
        args: a,
    };
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Json => emit_json(
            &a.output,
            &cfg,
            serde_json::to_value(&rows).map_err(runtime)?,
        ),
        Format::Csv => {
            let mut s = String::from("n,fraction,ci_low,ci_high\n");
            for r in &rows {
                s += &format!(
                    "{},{},{},{}\n",
                    r.n,
                    format_sig(r.fraction, 12),
                    format_sig(r.ci_low, 12),
                    format_sig(r.ci_high, 12)
                );
            }
            emit_csv(&a.output, &cfg, &s)
        }
    }
}

fn dispatch(cli: &Cli) -> Step<()> {
    let workers = match cli.workers {
        Some(0) => return Err(invalid(anyhow::anyhow!("--workers must be at least 1"))),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let ctx = Ctx { workers };
    match &cli.command {
        Command::Rates(a) => cmd_rates(a),
        Command::Sim { scheme } => match scheme {
            Scheme::Lattice(a) => cmd_lattice(&ctx, a),
            Scheme::Bsc(a) => cmd_bsc(&ctx, a),
            Scheme::AncPower(a) => cmd_anc_power(&ctx, a),
            Scheme::Minangle(a) => cmd_minangle(&ctx, a),
        },
        Command::Multihop(a) => cmd_multihop(&ctx, a),
        Command::Concentration(a) => cmd_concentration(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
