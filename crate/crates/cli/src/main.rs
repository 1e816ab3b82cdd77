use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use showprofile::ingest::{
    generate_synthetic, parse_dataset_with, write_dataset, write_ground_truth, DatasetPaths, ParseOptions,
    PlantedTransition, SyntheticSpec, GROUND_TRUTH_FILE,
};
use showprofile::model::validate_dataset;
use showprofile::profile::content::{content_profile, SentimentLexicons};
use showprofile::profile::propagation::{propagation_profile, PropagationOptions, WindowSpec, DEFAULT_WINDOW};
use showprofile::profile::social::social_profile;
use showprofile::profile::user::user_profile;
use showprofile::report::{export_all, export_plot_data, run_pipeline, PipelineConfig, ProfileReport, SELECTORS};
use showprofile::retrieval::{read_corpora, retrieve_all, retrieve_show_corpus, write_corpora, ShowCorpus};
use showprofile::{Dataset, Error};

const LOG_ENV: &str = "SHOWPROFILE_LOG";

#[derive(Parser)]
#[command(name = "showprofile", version, about = "Profile TV shows from microblog traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a dataset directory, printing a summary.
    Ingest {
        #[arg(long)]
        dataset: PathBuf,
        /// Skip malformed lines instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Write a seeded synthetic dataset and its ground truth.
    Generate(GenerateArgs),
    /// Retrieve show corpora into a JSON-lines file.
    Retrieve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only this show.
        #[arg(long)]
        show: Option<String>,
    },
    /// Run a single profiler.
    #[command(subcommand)]
    Profile(ProfileCommand),
    /// Run the full pipeline from a config file.
    Report(ReportArgs),
    /// Export plot data from a report as CSV.
    Export {
        #[arg(long)]
        report: PathBuf,
        /// One of the selectors, or `all`.
        #[arg(long)]
        selector: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    /// JSON synthetic spec; the flags below are ignored when given.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    users: usize,
    #[arg(long, default_value_t = 10)]
    shows: usize,
    #[arg(long, default_value_t = 2000)]
    microblogs: usize,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    /// Planted transition `USER:FROM:TO:GAP_SECONDS`; repeatable.
    #[arg(long = "transition")]
    transitions: Vec<String>,
}

#[derive(Args)]
struct Inputs {
    /// Corpus file or directory of corpus files.
    #[arg(long, alias = "corpus")]
    corpora: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ProfileCommand {
    User {
        #[command(flatten)]
        io: Inputs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Content {
        #[command(flatten)]
        io: Inputs,
        /// Minimum common users for a show-network edge.
        #[arg(long, default_value_t = 1)]
        threshold: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with `positive` and `negative` word lists.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    Social {
        #[command(flatten)]
        io: Inputs,
    },
    Propagation {
        #[command(flatten)]
        io: Inputs,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: i64,
        #[arg(long)]
        strict_attribution: bool,
        #[arg(long)]
        windows_from: Option<i64>,
        #[arg(long, default_value_t = 0)]
        windows_count: usize,
        #[arg(long)]
        focus: Option<String>,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, `KEY=VALUE`; repeatable.
    #[arg(long = "set")]
    overrides: Vec<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated subset of user,content,social,propagation.
    #[arg(long)]
    aspects: Option<String>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::UnknownSelector(_) | Error::InfeasibleSpec(_) => Failure::Usage(e.to_string()),
            e => Failure::Data(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut body = serde_json::to_string_pretty(value).map_err(Error::from)?;
    body.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, body).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load(dataset: &Path) -> CliResult<Dataset> {
    Ok(parse_dataset_with(&DatasetPaths::in_dir(dataset), ParseOptions::default())?.dataset)
}

fn load_with_corpora(io: &Inputs) -> CliResult<(Dataset, Vec<ShowCorpus>)> {
    let d = load(&io.dataset)?;
    let c = read_corpora(&io.corpora, &d)?;
    Ok((d, c))
}

fn parse_transition(s: &str) -> CliResult<PlantedTransition> {
    let parts: Vec<&str> = s.split(':').collect();
    let [user, from, to, gap] = parts.as_slice() else {
        return Err(Failure::Usage(format!("transition `{s}` is not USER:FROM:TO:GAP")));
    };
    Ok(PlantedTransition {
        user: user.to_string(),
        show_from: from.to_string(),
        show_to: to.to_string(),
        gap_seconds: gap
            .parse()
            .map_err(|_| Failure::Usage(format!("bad gap in transition `{s}`")))?,
    })
}

fn generate(a: GenerateArgs) -> CliResult {
    let spec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => {
            let mut s = SyntheticSpec::new(a.seed, a.users, a.shows, a.microblogs, a.clusters);
            s.planted_transitions = a.transitions.iter().map(|t| parse_transition(t)).collect::<CliResult<_>>()?;
            s
        }
    };
    let (dataset, truth) = generate_synthetic(&spec)?;
    write_dataset(&dataset, &a.out)?;
    write_ground_truth(&truth, &a.out.join(GROUND_TRUTH_FILE))?;
    log::info!("wrote {} microblogs to {}", dataset.microblogs().len(), a.out.display());
    Ok(())
}

/// Prints a line to stdout; a closed pipe (`| head`) is not an error.
fn say(line: &str) {
    let mut out = io::stdout().lock();
    if let Err(e) = writeln!(out, "{line}") {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("error: stdout: {e}");
        }
    }
}

fn profile(cmd: ProfileCommand) -> CliResult {
    match cmd {
        ProfileCommand::User { io, k, seed } => {
            let (d, c) = load_with_corpora(&io)?;
            write_json(&io.out, &user_profile(&c, &d, k, seed))
        }
        ProfileCommand::Content {
            io,
            threshold,
            seed,
            lexicon,
        } => {
            let lex = match lexicon {
                Some(p) => SentimentLexicons::from_json_file(&p)?,
                None => SentimentLexicons::builtin(),
            };
            let (d, c) = load_with_corpora(&io)?;
            write_json(&io.out, &content_profile(d.shows(), &c, &d, &lex, threshold, seed))
        }
        ProfileCommand::Social { io } => {
            let (d, c) = load_with_corpora(&io)?;
            write_json(&io.out, &social_profile(d.shows(), &c, &d)?)
        }
        ProfileCommand::Propagation {
            io,
            window,
            strict_attribution,
            windows_from,
            windows_count,
            focus,
        } => {
            if window <= 0 {
                return Err(Failure::Usage(format!("--window must be positive, got {window}")));
            }
            let (d, c) = load_with_corpora(&io)?;
            let opts = PropagationOptions {
                window,
                strict: strict_attribution,
            };
            let spec = windows_from.map(|from| WindowSpec {
                from,
                count: windows_count,
                focus,
            });
            write_json(&io.out, &propagation_profile(d.shows(), &c, &d, opts, spec.as_ref())?)
        }
    }
}

fn report(a: ReportArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(d) = a.dataset {
        cfg.dataset = d;
    }
    if let Some(o) = a.out {
        cfg.out = o;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(x) = &a.aspects {
        cfg.set("aspects", x)?;
    }
    let r = run_pipeline(&cfg)?;
    say(&cfg.out.join(showprofile::report::REPORT_FILE).display().to_string());
    log::info!("fingerprint {}", r.fingerprint);
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest { dataset, lenient } => {
            let outcome = parse_dataset_with(&DatasetPaths::in_dir(&dataset), ParseOptions { lenient })?;
            let violations = validate_dataset(&outcome.dataset);
            let summary = serde_json::json!({
                "counts": showprofile::ingest::dataset_summary(&outcome.dataset),
                "skipped_lines": outcome.skipped_lines,
                "stub_users": outcome.stub_users,
                "violations": violations.violations,
            });
            say(&serde_json::to_string_pretty(&summary).map_err(Error::from)?);
            if violations.is_empty() {
                Ok(())
            } else {
                Err(Failure::Data(format!("{} validation violations", violations.violations.len())))
            }
        }
        Command::Generate(a) => generate(a),
        Command::Retrieve { dataset, out, show } => {
            let d = load(&dataset)?;
            let corpora = match show {
                Some(id) => {
                    let s = d.show(&id).ok_or_else(|| Failure::Data(format!("unknown show `{id}`")))?;
                    vec![retrieve_show_corpus(s, &d)?]
                }
                None => retrieve_all(&d)?,
            };
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
            }
            write_corpora(&corpora, &out)?;
            Ok(())
        }
        Command::Profile(cmd) => profile(cmd),
        Command::Report(a) => report(a),
        Command::Export { report, selector, out } => {
            let r = ProfileReport::read(&report)?;
            let files = if selector == "all" {
                export_all(&r, &out)?
            } else {
                if !SELECTORS.contains(&selector.as_str()) {
                    return Err(Failure::Usage(format!(
                        "unknown selector `{selector}`; expected one of {} or all",
                        SELECTORS.join(", ")
                    )));
                }
                vec![export_plot_data(&r, &selector, &out)?]
            };
            for f in files {
                say(&f.display().to_string());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
