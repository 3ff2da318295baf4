//! `noisereach` command-line front end. Every command prints one JSON
//! report on stdout; diagnostics go to stderr.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use noisereach::channels::{apply_product_channel, channel_from_str, parameter_counts, LocalChannel};
use noisereach::json::{read_json, read_state, write_state};
use noisereach::locc::{build_conversion, lccc_synthesize_bipartite};
use noisereach::qcore::{canonical_state, z_mixture, Bipartition, CanonicalKind, State};
use noisereach::reach::{lc_distance_search, lccc_obstruction_check, SearchOptions};
use noisereach::slocc::{classify_three_qubit, three_tangle};
use noisereach::{DensityMatrix, Error, PureState};

#[derive(Parser)]
#[command(name = "noisereach", version, about = "Local-noise reachability of multipartite states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a canonical state file.
    State(StateArgs),
    /// Apply one channel per party to a state file.
    NoiseApply(NoiseArgs),
    /// SLOCC class of a three-qubit pure state.
    Classify(InArgs),
    /// Three-tangle of a three-qubit pure state.
    Tangle(InArgs),
    /// Parameter counts for n parties of local dimension d.
    ParamCount(CountArgs),
    /// Deterministic LOCC conversion from a maximally entangled resource.
    Convert(ConvertArgs),
    /// Bipartite LCCC synthesis with a sampled simulation.
    Synthesize(SynthArgs),
    /// Variational search for an LC precursor.
    LcSearch(SearchArgs),
    /// Structural LCCC certificate.
    Obstruct(InArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Ghz,
    W,
    Maxent,
    Z,
}

#[derive(Args, Serialize)]
struct StateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Mixture weight of W for `z`.
    #[arg(long)]
    p: Option<f64>,
    /// Party count for `ghz`.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Local dimension for `maxent`.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct NoiseArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: PathBuf,
    /// Comma-separated channel files, one per party.
    #[arg(long, value_delimiter = ',', required = true)]
    channel: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct InArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: PathBuf,
}

#[derive(Args, Serialize)]
struct CountArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    d: u32,
}

#[derive(Args, Serialize)]
struct ConvertArgs {
    #[arg(long)]
    target: PathBuf,
    /// Party split such as `0|1`.
    #[arg(long)]
    cut: String,
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    samples: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct SearchArgs {
    #[arg(long)]
    target: PathBuf,
    /// JSON with env_dims, restarts, max_iters, tol, master_seed.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Serialize)]
struct CommandReport {
    command: &'static str,
    inputs: Value,
    outputs: Value,
    seed: Option<u64>,
    elapsed_ms: u64,
}

type Outcome = noisereach::Result<(Value, Option<u64>)>;

fn to_value<T: Serialize>(v: &T) -> noisereach::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn read_pure(path: &PathBuf) -> noisereach::Result<PureState> {
    match read_state(path)? {
        State::Pure(p) => Ok(p),
        State::Density(_) => Err(Error::Validation(format!(
            "{} holds a density matrix; this command needs a pure state",
            path.display()
        ))),
    }
}

fn read_density(path: &PathBuf) -> noisereach::Result<DensityMatrix> {
    Ok(read_state(path)?.to_density())
}

fn state_cmd(a: &StateArgs) -> Outcome {
    let state: State = match a.kind {
        Kind::Ghz => canonical_state(&CanonicalKind::Ghz(a.n))?.into(),
        Kind::W => canonical_state(&CanonicalKind::W3)?.into(),
        Kind::Maxent => canonical_state(&CanonicalKind::MaxEntangled(a.d))?.into(),
        Kind::Z => {
            let p = a
                .p
                .ok_or_else(|| Error::Validation("--kind z needs --p".into()))?;
            z_mixture(p)?.into()
        }
    };
    write_state(&a.out, &state)?;
    Ok((
        json!({ "out": a.out, "kind": state.kind(), "shape": state.shape() }),
        None,
    ))
}

fn noise_cmd(a: &NoiseArgs) -> Outcome {
    let rho = read_density(&a.input)?;
    let channels = a
        .channel
        .iter()
        .map(|p| channel_from_str(&std::fs::read_to_string(p)?))
        .collect::<noisereach::Result<Vec<LocalChannel>>>()?;
    let out = apply_product_channel(&channels, &rho)?;
    write_state(&a.out, &State::Density(out))?;
    Ok((json!({ "out": a.out, "kind": "density", "shape": rho.shape() }), None))
}

fn run(cmd: &Command) -> Outcome {
    match cmd {
        Command::State(a) => state_cmd(a),
        Command::NoiseApply(a) => noise_cmd(a),
        Command::Classify(a) => {
            let class = classify_three_qubit(&read_pure(&a.input)?)?;
            Ok((json!({ "class": class }), None))
        }
        Command::Tangle(a) => {
            let tau = three_tangle(&read_pure(&a.input)?)?;
            Ok((json!({ "tangle": tau }), None))
        }
        Command::ParamCount(a) => Ok((to_value(&parameter_counts(a.n, a.d)?)?, None)),
        Command::Convert(a) => {
            let target = read_pure(&a.target)?;
            let cut = Bipartition::parse(target.shape(), &a.cut)?;
            Ok((to_value(&build_conversion(&target, &cut)?)?, None))
        }
        Command::Synthesize(a) => {
            let rho = read_density(&a.target)?;
            let rep = lccc_synthesize_bipartite(&rho, a.samples, a.seed)?;
            Ok((
                json!({
                    "plan": to_value(&rep.plan)?,
                    "empirical": to_value(&State::Density(rep.empirical))?,
                    "trace_distance": rep.trace_distance,
                    "summary": to_value(&rep.summary)?,
                }),
                Some(a.seed),
            ))
        }
        Command::LcSearch(a) => {
            let rho = read_density(&a.target)?;
            let opts: SearchOptions = read_json(&a.config)?;
            let res = lc_distance_search(&rho, &opts)?;
            Ok((to_value(&res)?, Some(opts.master_seed)))
        }
        Command::Obstruct(a) => {
            let cert = lccc_obstruction_check(&read_density(&a.input)?);
            Ok((to_value(&cert)?, None))
        }
    }
}

fn describe(cmd: &Command) -> (&'static str, noisereach::Result<Value>) {
    match cmd {
        Command::State(a) => ("state", to_value(a)),
        Command::NoiseApply(a) => ("noise-apply", to_value(a)),
        Command::Classify(a) => ("classify", to_value(a)),
        Command::Tangle(a) => ("tangle", to_value(a)),
        Command::ParamCount(a) => ("param-count", to_value(a)),
        Command::Convert(a) => ("convert", to_value(a)),
        Command::Synthesize(a) => ("synthesize", to_value(a)),
        Command::LcSearch(a) => ("lc-search", to_value(a)),
        Command::Obstruct(a) => ("obstruct", to_value(a)),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::ShapeMismatch(_) | Error::Json(_) => 2,
        Error::Unsupported(_) => 3,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let (command, inputs) = describe(&cli.command);
    let result = inputs.and_then(|inputs| run(&cli.command).map(|out| (inputs, out)));
    match result {
        Ok((inputs, (outputs, seed))) => {
            let report = CommandReport {
                command,
                inputs,
                outputs,
                seed,
                elapsed_ms: start.elapsed().as_millis() as u64,
            };
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("noisereach {command}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
