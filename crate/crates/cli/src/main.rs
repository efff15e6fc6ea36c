use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qvote_core::ballot::LyingShare;
use qvote_core::election::{run_election, ElectionAdversary, ElectionConfig, Status, Votes};
use qvote_core::experiments::{
    run_experiment_cheat, run_experiment_csqbc, run_experiment_fidelity, run_experiment_qba, to_csv, CheatMode,
};
use qvote_core::qba::{AdversaryModel, CopySource};
use qvote_core::rng::seeded;

const SEED_ENV: &str = "QVOTE_SEED";

#[derive(Parser, Debug)]
#[command(name = "qvote", version, about = "Quantum e-voting protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one election and write its result as JSON
    Run(RunArgs),
    /// Sweep a parameter and write CSV rows
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Base seed (QVOTE_SEED overrides it)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for one per core
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Source {
    Ideal,
    Statevector,
}

impl From<Source> for CopySource {
    fn from(s: Source) -> Self {
        match s {
            Source::Ideal => CopySource::Ideal,
            Source::Statevector => CopySource::Statevector,
        }
    }
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Ideal => "ideal",
            Source::Statevector => "statevector",
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    voters: usize,
    /// One 0/1 digit per voter, e.g. 101; random when omitted
    #[arg(long)]
    votes: Option<String>,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Aharonov copies per broadcast bit
    #[arg(long, default_value_t = 30)]
    copies: usize,
    #[arg(long, default_value_t = 0.9)]
    lambda: f64,
    /// Complicit miner during consensus: none, 0 (random per bit) or 1..3
    #[arg(long, default_value = "none")]
    gamma: String,
    /// Retries per failed opening before aborting
    #[arg(long, default_value_t = qvote_core::election::DEFAULT_RETRY_BUDGET)]
    retries: usize,
    /// Miner that plants a probe sequence in every commitment session
    #[arg(long)]
    probing_miner: Option<usize>,
    /// Voter FROM sends TO a share off by OFFSET, as FROM:TO:OFFSET (repeatable)
    #[arg(long = "lie")]
    lies: Vec<String>,
    #[arg(long, value_enum, default_value_t = Source::Ideal)]
    source: Source,
    /// Result JSON path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Message transcript as JSON lines
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Honest commitment success rate against sequence length
    Csqbc(CsqbcArgs),
    /// Broadcast success curves against the number of copies
    Qba(QbaArgs),
    /// Voter or miner cheating rates
    Cheat(CheatArgs),
    /// Fidelity of the depolarized six-qubit resource state
    Fidelity(FidelityArgs),
}

#[derive(Args, Debug)]
struct CsqbcArgs {
    #[command(flatten)]
    common: Common,
    /// Sequence lengths, list or start:end
    #[arg(long, default_value = "16")]
    n: String,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QbaArgs {
    #[command(flatten)]
    common: Common,
    /// Copies per round, list or start:end
    #[arg(long, default_value = "30")]
    copies: String,
    #[arg(long, default_value_t = 0.9)]
    lambda: f64,
    /// none, leader, receiver, 0 (random per round) or 1..3
    #[arg(long, default_value = "0")]
    gamma: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = Source::Ideal)]
    source: Source,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Mode {
    Voter,
    Miner,
}

#[derive(Args, Debug)]
struct CheatArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Mode::Voter)]
    mode: Mode,
    #[arg(long, default_value = "16")]
    n: String,
    #[arg(long, default_value = "3")]
    m: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FidelityArgs {
    #[command(flatten)]
    common: Common,
    /// Depolarizing strengths, list or start:end:step
    #[arg(long, default_value = "0:0.2:0.01")]
    p: String,
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Abort,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.to_string())
    }
}

fn parse_usizes(s: &str) -> Result<Vec<usize>, String> {
    let mut out = vec![];
    for part in s.split(',').map(str::trim) {
        let num = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("not a count: {x:?}"));
        match part.split_once(':') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    Ok(out)
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("not a number: {x:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step.is_nan() || step <= 0.0 || a > b {
                return Err(format!("bad range {s}"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!("expected a list or start:end:step, got {s}")),
    }
}

fn parse_gamma(s: &str) -> Result<AdversaryModel, String> {
    let model = match s {
        "none" => AdversaryModel::Honest,
        "leader" => AdversaryModel::Leader,
        "receiver" => AdversaryModel::Receiver,
        g => AdversaryModel::Gamma(g.parse().map_err(|_| format!("bad gamma {g:?}"))?),
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

fn parse_lie(s: &str) -> Result<LyingShare, String> {
    let f: Vec<&str> = s.split(':').collect();
    let bad = || format!("expected FROM:TO:OFFSET, got {s:?}");
    if f.len() != 3 {
        return Err(bad());
    }
    Ok(LyingShare {
        from: f[0].parse().map_err(|_| bad())?,
        to: f[1].parse().map_err(|_| bad())?,
        offset: f[2].parse().map_err(|_| bad())?,
    })
}

fn resolve_seed(flag: u64) -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV}={v:?} is not a seed")),
        Err(_) => Ok(flag),
    }
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}

fn emit(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Sorted `key=value` pairs for the CSV comment line.
fn echo(pairs: &[(&str, String)]) -> String {
    let map: BTreeMap<_, _> = pairs.iter().cloned().collect();
    map.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let seed = resolve_seed(args.common.seed)?;
    let votes = match &args.votes {
        None => Votes::Random,
        Some(v) => Votes::Explicit(
            v.chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(format!("vote digit {c:?} is not 0 or 1")),
                })
                .collect::<Result<_, _>>()?,
        ),
    };
    let mut config = ElectionConfig::honest(args.voters, votes, seed);
    config.n = args.n;
    config.m = args.m;
    config.copies = args.copies;
    config.lambda = args.lambda;
    config.retry_budget = args.retries;
    config.copy_source = args.source.into();
    config.adversary = ElectionAdversary {
        qba: parse_gamma(&args.gamma)?,
        lying_shares: args.lies.iter().map(|l| parse_lie(l)).collect::<Result<_, _>>()?,
        probing_miner: args.probing_miner,
    };
    config.validate()?;
    eprintln!("qvote run: {}", serde_json::to_string(&config)?);

    let output = with_jobs(args.common.jobs, || run_election(&config))??;
    let mut doc = serde_json::to_value(&output.result)?;
    if let Value::Object(map) = &mut doc {
        map.insert("seed".into(), json!(seed));
    }
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(&args.out, &text)?;
    if let Some(p) = &args.transcript {
        fs::write(p, output.transcript_jsonl()).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
    }
    match output.result.status {
        Status::Completed => {
            eprintln!("tally {}", output.result.tally.unwrap_or_default());
            Ok(())
        }
        Status::Aborted => {
            eprintln!("aborted: {}", serde_json::to_string(&output.result.abort)?);
            Err(Failure::Abort)
        }
    }
}

fn experiment(e: Experiment) -> Result<(), Failure> {
    match e {
        Experiment::Csqbc(a) => {
            let seed = resolve_seed(a.common.seed)?;
            let ns = parse_usizes(&a.n)?;
            let head = echo(&[
                ("experiment", "csqbc".into()),
                ("n", a.n.clone()),
                ("m", a.m.to_string()),
                ("trials", a.trials.to_string()),
                ("seed", seed.to_string()),
            ]);
            eprintln!("qvote {head}");
            let rows = with_jobs(a.common.jobs, || run_experiment_csqbc(&ns, a.m, a.trials, &mut seeded(seed)))??;
            emit(&a.csv, &to_csv(&rows, &head))
        }
        Experiment::Qba(a) => {
            let seed = resolve_seed(a.common.seed)?;
            let copies = parse_usizes(&a.copies)?;
            let model = parse_gamma(&a.gamma)?;
            let head = echo(&[
                ("experiment", "qba".into()),
                ("copies", a.copies.clone()),
                ("lambda", a.lambda.to_string()),
                ("gamma", a.gamma.clone()),
                ("trials", a.trials.to_string()),
                ("source", a.source.name().into()),
                ("seed", seed.to_string()),
            ]);
            eprintln!("qvote {head}");
            let rows = with_jobs(a.common.jobs, || {
                run_experiment_qba(&copies, a.lambda, model, a.trials, a.source.into(), &mut seeded(seed))
            })??;
            emit(&a.csv, &to_csv(&rows, &head))
        }
        Experiment::Cheat(a) => {
            let seed = resolve_seed(a.common.seed)?;
            let (ns, ms) = (parse_usizes(&a.n)?, parse_usizes(&a.m)?);
            let mode = match a.mode {
                Mode::Voter => CheatMode::Voter,
                Mode::Miner => CheatMode::Miner,
            };
            let head = echo(&[
                ("experiment", "cheat".into()),
                ("mode", format!("{:?}", a.mode).to_lowercase()),
                ("n", a.n.clone()),
                ("m", a.m.clone()),
                ("trials", a.trials.to_string()),
                ("seed", seed.to_string()),
            ]);
            eprintln!("qvote {head}");
            let rows = with_jobs(a.common.jobs, || run_experiment_cheat(mode, &ns, &ms, a.trials, &mut seeded(seed)))??;
            emit(&a.csv, &to_csv(&rows, &head))
        }
        Experiment::Fidelity(a) => {
            let seed = resolve_seed(a.common.seed)?;
            let ps = parse_floats(&a.p)?;
            let head = echo(&[("experiment", "fidelity".into()), ("p", a.p.clone()), ("seed", seed.to_string())]);
            eprintln!("qvote {head}");
            let rows = with_jobs(a.common.jobs, || run_experiment_fidelity(&ps))??;
            emit(&a.csv, &to_csv(&rows, &head))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Experiment(e) => experiment(e),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Abort) => ExitCode::from(2),
    }
}
