use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use nomon::config::EngineConfig;
use nomon::language_prior::PriorConfig;
use nomon::session::{self, Session, SessionOptions};
use nomon::simulator::data::desk_corpus;
use nomon::simulator::experiment::{
    run_scanning, run_selection_trials, run_typing, summarize_selections, summarize_typing, PriorKind,
    ScanningScenario, Scenario, SelectionScenario, TypingScenario,
};
use nomon::simulator::typing::TypingOptions;
use nomon::simulator::UserProfile;
use nomon::CorpusIndex;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "nomon", version, about = "Single-switch clock selection engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a live session over stdio or TCP.
    Serve(ServeArgs),
    /// Run a simulation and print its summary. Without a subcommand, runs
    /// repeated selections (or the `--scenario` file).
    Simulate(SimulateCommand),
    /// Mean posterior entropy after each click, as CSV.
    EntropyTrace(SelectionArgs),
    /// Build or inspect a corpus index.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Re-run a recorded click log and print the winners.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct EngineArgs {
    /// Rotation period index j; the period is 2.0 * 0.9^j seconds.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    period_index: i32,
    /// Winner threshold on the ratio of the two leading posteriors.
    #[arg(long, default_value_t = nomon::selector::DEFAULT_ALPHA)]
    alpha: f64,
    /// Damping factor of the click density.
    #[arg(long, default_value_t = nomon::click_model::DEFAULT_LAMBDA)]
    lambda: f64,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            period_index: self.period_index,
            alpha: self.alpha,
            lambda: self.lambda,
            ..EngineConfig::default()
        }
    }
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Word list (`word<TAB>count`) or saved index; the bundled list if omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Click density file, loaded at start and saved at the end.
    #[arg(long)]
    density: Option<PathBuf>,
    /// Append clicks to this JSON-lines log.
    #[arg(long)]
    click_log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Transport::Stdio)]
    transport: Transport,
    /// Address for the TCP transport.
    #[arg(long, default_value = "127.0.0.1:7420")]
    listen: String,
    /// Exit after the first TCP connection closes.
    #[arg(long)]
    once: bool,
    /// Selections between density autosaves; 0 disables.
    #[arg(long, default_value_t = session::DEFAULT_AUTOSAVE_EVERY)]
    autosave_every: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    /// Frames on stdin and stdout.
    Stdio,
    /// One session per accepted connection, served in turn.
    Tcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct SimulateCommand {
    #[command(subcommand)]
    kind: Option<Simulate>,
    /// JSON scenario file (`"kind": "selection" | "typing" | "scanning"`).
    #[arg(long, conflicts_with_all = ["clocks", "uniform", "prior"])]
    scenario: Option<PathBuf>,
    /// Corpus for typing and scanning scenario files.
    #[arg(long, requires = "scenario")]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    selection: SelectionArgs,
}

#[derive(Subcommand)]
enum Simulate {
    /// Repeated single selections among synthetic clocks.
    Selection(SelectionArgs),
    /// Type phrases with the keyboard application.
    Typing(TypingArgs),
    /// Error-free row-column scanning baseline.
    Scanning(ScanningArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Standard deviation of click offsets, as a fraction of the period.
    #[arg(long, default_value_t = 0.02)]
    sd: f64,
    /// Mean click offset, as a fraction of the period.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    mean: f64,
    /// Probability that a click attempt misses a rotation.
    #[arg(long, default_value_t = 0.0)]
    lapse: f64,
}

impl ProfileArgs {
    fn profile(&self) -> Result<UserProfile> {
        Ok(UserProfile::new(self.mean, self.sd, self.lapse)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorArg {
    Uniform,
    Keyboard,
}

#[derive(Args)]
struct SelectionArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, default_value_t = 30)]
    clocks: usize,
    #[arg(long, value_enum, default_value_t = PriorArg::Uniform)]
    prior: PriorArg,
    /// Shorthand for `--prior uniform`.
    #[arg(long, conflicts_with = "prior")]
    uniform: bool,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Selections used to pre-train the density; 0 starts cold.
    #[arg(long, default_value_t = nomon::simulator::DEFAULT_PRETRAIN_SELECTIONS)]
    pretrain: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write one CSV row per trial to this file.
    #[arg(long)]
    trials_csv: Option<PathBuf>,
}

impl SelectionArgs {
    fn scenario(&self) -> Result<SelectionScenario> {
        Ok(SelectionScenario {
            clocks: self.clocks,
            prior: match (self.uniform, self.prior) {
                (true, _) | (_, PriorArg::Uniform) => PriorKind::Uniform,
                (false, PriorArg::Keyboard) => PriorKind::Keyboard,
            },
            profile: self.profile.profile()?,
            engine: self.engine.config(),
            trials: self.trials,
            seed: self.seed,
            pretrain_selections: self.pretrain,
        })
    }
}

#[derive(Args)]
struct TypingArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    profile: ProfileArgs,
    /// One phrase per line; the bundled phrases if omitted.
    #[arg(long)]
    phrases: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = nomon::simulator::DEFAULT_PRETRAIN_SELECTIONS)]
    pretrain: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ScanningArgs {
    /// Delay index j; rows advance every 0.1 (10 - j) seconds.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    delay_index: i32,
    /// Word completion slots in the left-hand column.
    #[arg(long, default_value_t = 0)]
    completions: usize,
    #[arg(long)]
    phrases: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Filter a `word<TAB>count` list and save the index as JSON.
    Build {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print word count and total frequency of a list or index.
    Info { path: PathBuf },
}

#[derive(Args)]
struct ReplayArgs {
    log: PathBuf,
    /// Must be the corpus the log was recorded with.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Serve(args) => serve(args),
        Command::Simulate(sim) => simulate(sim),
        Command::EntropyTrace(args) => entropy_trace(&args),
        Command::Corpus(cmd) => corpus(cmd),
        Command::Replay(args) => replay(&args),
    }
}

fn load_index(path: Option<&Path>) -> Result<Arc<CorpusIndex>> {
    match path {
        Some(p) => {
            let index = CorpusIndex::open(p).with_context(|| format!("loading corpus {}", p.display()))?;
            info!("corpus {}: {} words", p.display(), index.len());
            Ok(Arc::new(index))
        }
        None => Ok(Arc::new(desk_corpus().clone())),
    }
}

fn read_phrases(path: Option<&Path>) -> Result<Vec<String>> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn serve(args: ServeArgs) -> Result<()> {
    let index = load_index(args.corpus.as_deref())?;
    let options = SessionOptions {
        engine: args.engine.config(),
        prior: PriorConfig::default(),
        density_path: args.density.clone(),
        autosave_every: args.autosave_every,
    };
    let start_session = || -> Result<Session> {
        let mut s = Session::new(options.clone(), index.clone())?;
        if let Some(path) = &args.click_log {
            let file = File::options()
                .create(true)
                .append(true)
                .open(path)
                .with_context(|| format!("opening click log {}", path.display()))?;
            s.record_to(Box::new(BufWriter::new(file)))?;
        }
        Ok(s)
    };
    match args.transport {
        Transport::Stdio => {
            let mut s = start_session()?;
            let stats = session::serve(&mut s, io::stdin().lock(), io::stdout().lock())?;
            info!("stdio session ended: {stats:?}");
        }
        Transport::Tcp => {
            let addr = &args.listen;
            let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                let peer = stream.peer_addr()?;
                info!("connection from {peer}");
                let mut s = start_session()?;
                match session::serve(&mut s, stream.try_clone()?, stream) {
                    Ok(stats) => info!("{peer} closed: {stats:?}"),
                    Err(e) => log::warn!("{peer}: {e}"),
                }
                if args.once {
                    break;
                }
            }
        }
    }
    Ok(())
}

fn simulate(cmd: SimulateCommand) -> Result<()> {
    let Some(sim) = cmd.kind else {
        return match &cmd.scenario {
            Some(path) => run_scenario_file(path, cmd.corpus.as_deref(), cmd.selection.format),
            None => run_selection(&cmd.selection.scenario()?, cmd.selection.format, cmd.selection.trials_csv.as_deref()),
        };
    };
    match sim {
        Simulate::Selection(args) => run_selection(&args.scenario()?, args.format, args.trials_csv.as_deref()),
        Simulate::Typing(args) => {
            let scenario = TypingScenario {
                phrases: read_phrases(args.phrases.as_deref())?,
                profile: args.profile.profile()?,
                engine: args.engine.config(),
                prior: PriorConfig::default(),
                seed: args.seed,
                options: TypingOptions {
                    pretrain_selections: args.pretrain,
                    ..TypingOptions::default()
                },
            };
            let index = load_index(args.corpus.as_deref())?;
            run_typing_scenario(&scenario, &index, args.format)
        }
        Simulate::Scanning(args) => {
            let scenario = ScanningScenario {
                phrases: read_phrases(args.phrases.as_deref())?,
                delay_index: args.delay_index,
                completion_count: args.completions,
            };
            let index = load_index(args.corpus.as_deref())?;
            run_scanning_scenario(&scenario, &index, args.format)
        }
    }
}

fn run_scenario_file(path: &Path, corpus: Option<&Path>, format: Format) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario: Scenario =
        serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))?;
    match scenario {
        Scenario::Selection(s) => run_selection(&s, format, None),
        Scenario::Typing(s) => run_typing_scenario(&s, &*load_index(corpus)?, format),
        Scenario::Scanning(s) => run_scanning_scenario(&s, &*load_index(corpus)?, format),
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn csv_writer() -> csv::Writer<io::StdoutLock<'static>> {
    csv::Writer::from_writer(io::stdout().lock())
}

#[derive(Serialize)]
struct SelectionRow {
    trials: usize,
    errors: usize,
    aborted: usize,
    error_fraction: f64,
    median_clicks: f64,
    mean_clicks: f64,
    ci95_clicks: f64,
    mean_seconds: f64,
}

#[derive(Serialize)]
struct TrialRow {
    trial: usize,
    target: u32,
    winner: Option<u32>,
    clicks: usize,
    correct: bool,
    aborted: bool,
    seconds: f64,
}

fn write_trials(path: &Path, records: &[nomon::simulator::TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for (trial, r) in records.iter().enumerate() {
        w.serialize(TrialRow {
            trial,
            target: r.target.0,
            winner: r.winner.map(|c| c.0),
            clicks: r.clicks,
            correct: r.correct,
            aborted: r.aborted,
            seconds: r.seconds,
        })?;
    }
    Ok(w.flush()?)
}

fn run_selection(s: &SelectionScenario, format: Format, trials_csv: Option<&Path>) -> Result<()> {
    let records = run_selection_trials(s)?;
    if let Some(path) = trials_csv {
        write_trials(path, &records)?;
    }
    let summary = summarize_selections(&records);
    match format {
        Format::Json => print_json(&summary),
        Format::Csv => {
            let mut w = csv_writer();
            w.serialize(SelectionRow {
                trials: summary.trials,
                errors: summary.errors,
                aborted: summary.aborted,
                error_fraction: summary.error_fraction,
                median_clicks: summary.median_clicks,
                mean_clicks: summary.mean_clicks,
                ci95_clicks: summary.ci95_clicks,
                mean_seconds: summary.mean_seconds,
            })?;
            Ok(w.flush()?)
        }
    }
}

#[derive(Serialize)]
struct TypingRow<'a> {
    phrase: &'a str,
    output: &'a str,
    chars: usize,
    clicks: usize,
    click_load: f64,
    selections: usize,
    completions: usize,
    wrong_selections: usize,
    seconds: f64,
    words_per_minute: f64,
    aborted: bool,
}

fn run_typing_scenario(s: &TypingScenario, index: &CorpusIndex, format: Format) -> Result<()> {
    let records = run_typing(s, index)?;
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a, S> {
                summary: S,
                phrases: &'a [nomon::simulator::typing::TypingRecord],
            }
            print_json(&Report {
                summary: summarize_typing(&records)?,
                phrases: &records,
            })
        }
        Format::Csv => {
            let mut w = csv_writer();
            for r in &records {
                w.serialize(TypingRow {
                    phrase: &r.phrase,
                    output: &r.output,
                    chars: r.chars,
                    clicks: r.clicks,
                    click_load: r.click_load(),
                    selections: r.selections,
                    completions: r.completions,
                    wrong_selections: r.wrong_selections,
                    seconds: r.seconds,
                    words_per_minute: r.words_per_minute(),
                    aborted: r.aborted,
                })?;
            }
            Ok(w.flush()?)
        }
    }
}

fn run_scanning_scenario(s: &ScanningScenario, index: &CorpusIndex, format: Format) -> Result<()> {
    let results = run_scanning(s, index)?;
    let phrases = if s.phrases.is_empty() {
        nomon::simulator::data::phrases().into_iter().map(String::from).collect()
    } else {
        s.phrases.clone()
    };
    let clicks: usize = results.iter().map(|r| r.clicks).sum();
    let chars: usize = results.iter().map(|r| r.chars).sum();
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                clicks: usize,
                chars: usize,
                click_load: f64,
                phrases: &'a [nomon::simulator::scanning::ScanResult],
            }
            print_json(&Report {
                clicks,
                chars,
                click_load: nomon::simulator::click_load(clicks, chars),
                phrases: &results,
            })
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                phrase: &'a str,
                chars: usize,
                clicks: usize,
                click_load: f64,
                completions: usize,
                waiting_steps: usize,
                seconds: f64,
            }
            let mut w = csv_writer();
            for (p, r) in phrases.iter().zip(&results) {
                w.serialize(Row {
                    phrase: p,
                    chars: r.chars,
                    clicks: r.clicks,
                    click_load: r.click_load(),
                    completions: r.completions,
                    waiting_steps: r.waiting_steps,
                    seconds: r.seconds,
                })?;
            }
            Ok(w.flush()?)
        }
    }
}

fn entropy_trace(args: &SelectionArgs) -> Result<()> {
    let summary = summarize_selections(&run_selection_trials(&args.scenario()?)?);
    #[derive(Serialize)]
    struct Row {
        clicks: usize,
        mean_entropy_bits: f64,
        active_trials: usize,
    }
    let rows = summary
        .mean_entropy_by_click
        .iter()
        .zip(&summary.active_by_click)
        .enumerate()
        .map(|(k, (&h, &n))| Row {
            clicks: k,
            mean_entropy_bits: h,
            active_trials: n,
        });
    match args.format {
        Format::Json => print_json(&rows.collect::<Vec<_>>()),
        Format::Csv => {
            let mut w = csv_writer();
            for row in rows {
                w.serialize(row)?;
            }
            Ok(w.flush()?)
        }
    }
}

fn corpus(cmd: CorpusCommand) -> Result<()> {
    match cmd {
        CorpusCommand::Build { input, out } => {
            let (index, report) =
                CorpusIndex::from_tsv_file(&input).with_context(|| format!("reading {}", input.display()))?;
            index.save(&out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "{} words, total frequency {}; {} malformed lines, {} words filtered",
                index.len(),
                index.total_frequency(),
                report.malformed,
                report.filtered
            );
            Ok(())
        }
        CorpusCommand::Info { path } => {
            let index = CorpusIndex::open(&path).with_context(|| format!("loading {}", path.display()))?;
            println!("words\t{}", index.len());
            println!("total_frequency\t{}", index.total_frequency());
            Ok(())
        }
    }
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let file = File::open(&args.log).with_context(|| format!("opening {}", args.log.display()))?;
    let log = session::read_log(BufReader::new(file))?;
    if log.entries.is_empty() {
        bail!("{} holds no clicks", args.log.display());
    }
    let index = load_index(args.corpus.as_deref())?;
    let outcome = session::replay(&log, index)?;
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                text: &'a str,
                winners: &'a [session::protocol::WinnerInfo],
            }
            print_json(&Report {
                text: &outcome.text,
                winners: &outcome.winners,
            })
        }
        Format::Csv => {
            let mut w = csv_writer();
            for winner in &outcome.winners {
                w.serialize(winner)?;
            }
            Ok(w.flush()?)
        }
    }
}
