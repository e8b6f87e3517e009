//! `artlens`: ingest a collection, obtain detections, curate object crops,
//! evaluate, audit and serve the exploration API.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Outcome;
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  io_error              unexpected I/O failure
  2  invalid_config        bad flag, environment variable or config value
  3  missing_prerequisite  an earlier stage has not run
  4  catalog_locked        another process is writing the catalog
  5  integrity_violation   audit found violations, or a snapshot is corrupt
  6  upstream_failure      collection API, image source or detector failed
  7  invalid_input         an input file could not be used

Settings come from --config (or ARTLENS_CONFIG), then ARTLENS_* variables,
then flags; later sources win.";

#[derive(Debug, Parser)]
#[command(name = "artlens", version, about, after_help = EXIT_CODES)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "ARTLENS_CONFIG")]
    config: Option<PathBuf>,
    /// Catalog directory.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Image cache directory.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// `machine` prints one JSON document on standard output.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Human)]
    output: OutputMode,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Human,
    Machine,
}

#[derive(Debug, Args, Default)]
struct ListenArgs {
    #[arg(long)]
    bind: Option<String>,
    /// 0 picks a free port; the address is printed on startup.
    #[arg(long)]
    port: Option<u16>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch artwork metadata and images into the catalog.
    Ingest {
        /// Read the collection from a `.jsonl` file or directory.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Collection API base URL.
        #[arg(long)]
        api: Option<String>,
        /// Object type filter; an empty string keeps everything.
        #[arg(long)]
        object_type: Option<String>,
    },
    /// Ask the detector for objects in every catalog artwork.
    Detect {
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Import recorded detections (one JSON record per line).
    ImportDetections {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Drop records below this confidence.
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Select the per-label subset and store object crops.
    Curate {
        /// Detections kept per label.
        #[arg(long)]
        k: Option<usize>,
        /// Smallest crop side in pixels.
        #[arg(long)]
        min_side: Option<u32>,
    },
    /// Average precision of predictions against ground truth.
    EvalAp {
        /// Prediction file or directory of `.jsonl` files.
        #[arg(long)]
        preds: PathBuf,
        /// Ground truth file or directory of `.jsonl` files.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Detection counts per label and category.
    Stats,
    /// Check referential integrity and crop digests.
    Audit,
    /// Serve the exploration API.
    Serve {
        #[command(flatten)]
        listen: ListenArgs,
        /// External outpainting service; the built-in mock otherwise.
        #[arg(long)]
        provider_endpoint: Option<String>,
    },
    /// Usage report from the session event log.
    Report {
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Export or import a catalog snapshot.
    Snapshot {
        #[command(subcommand)]
        action: SnapshotAction,
    },
    /// Serve the deterministic outpainting mock.
    MockProvider {
        #[command(flatten)]
        listen: ListenArgs,
    },
    /// Serve the detector protocol from recorded detections.
    StubDetector {
        #[arg(long)]
        detections: PathBuf,
        #[command(flatten)]
        listen: ListenArgs,
    },
}

#[derive(Debug, Subcommand)]
enum SnapshotAction {
    /// Write the catalog into an empty directory.
    Export { dest: PathBuf },
    /// Build the (empty) catalog from a snapshot directory.
    Import { src: PathBuf },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides { catalog: self.catalog.clone(), cache: self.cache.clone(), ..Default::default() };
        match &self.command {
            Command::Ingest { fixtures, api, object_type } => {
                o.collection_fixtures = fixtures.clone();
                o.collection_url = api.clone();
                o.object_type = object_type.clone();
            }
            Command::Detect { endpoint, cutoff } => {
                o.detector_endpoint = endpoint.clone();
                o.cutoff = *cutoff;
            }
            Command::Curate { k, min_side } => {
                o.k_per_label = *k;
                o.min_side = *min_side;
            }
            Command::Report { events } => o.events = events.clone(),
            Command::Serve { listen, provider_endpoint } => {
                o.bind = listen.bind.clone();
                o.port = listen.port;
                o.provider_endpoint = provider_endpoint.clone();
            }
            Command::MockProvider { listen } | Command::StubDetector { listen, .. } => {
                o.bind = listen.bind.clone();
                o.port = listen.port;
            }
            _ => {}
        }
        o
    }
}

fn announce(mode: OutputMode) -> impl FnOnce(String) {
    move |url| {
        let mut out = std::io::stdout().lock();
        let _ = match mode {
            OutputMode::Human => writeln!(out, "listening on {url}"),
            OutputMode::Machine => writeln!(out, "{}", serde_json::json!({ "listening": url })),
        };
        let _ = out.flush();
    }
}

async fn run(cli: &Cli) -> Result<Option<Outcome>, CliError> {
    let mut config = RunConfig::load(cli.config.as_deref(), |k| std::env::var(k).ok())?;
    config.apply(&cli.overrides());
    config.validate()?;
    let mode = cli.output;
    let outcome = match &cli.command {
        Command::Ingest { .. } => commands::ingest(&config).await?,
        Command::Detect { .. } => commands::detect(&config).await?,
        Command::ImportDetections { files, cutoff } => {
            if let Some(c) = cutoff.filter(|c| !(0.0..=1.0).contains(c)) {
                return Err(CliError::config(format!("cutoff {c} outside [0, 1]")));
            }
            commands::import(&config, files, *cutoff)?
        }
        Command::Curate { .. } => commands::curate(&config).await?,
        Command::EvalAp { preds, gt, label, cutoff } => commands::eval_ap(preds, gt, label.as_deref(), *cutoff)?,
        Command::Stats => commands::stats(&config)?,
        Command::Audit => commands::audit(&config)?,
        Command::Report { .. } => commands::report(&config)?,
        Command::Snapshot { action: SnapshotAction::Export { dest } } => commands::snapshot_export(&config, dest)?,
        Command::Snapshot { action: SnapshotAction::Import { src } } => commands::snapshot_import(&config, src)?,
        Command::Serve { .. } => {
            commands::serve(&config, announce(mode)).await?;
            return Ok(None);
        }
        Command::MockProvider { .. } => {
            commands::mock_provider(&config, announce(mode)).await?;
            return Ok(None);
        }
        Command::StubDetector { detections, .. } => {
            commands::stub_detector(&config, detections, announce(mode)).await?;
            return Ok(None);
        }
    };
    Ok(Some(outcome))
}

fn fail(mode: OutputMode, err: &CliError, printed: bool) -> ExitCode {
    eprintln!("error[{}]: {}", err.code.as_str(), err.message);
    if mode == OutputMode::Machine && !printed {
        println!("{}", serde_json::to_string_pretty(&err.to_json()).expect("error serializes"));
    }
    ExitCode::from(err.code.exit_code())
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli).await {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(outcome)) => {
            // a closed pipe is not an error of the command
            let mut out = std::io::stdout().lock();
            let _ = match cli.output {
                OutputMode::Human => out.write_all(outcome.text.as_bytes()),
                OutputMode::Machine => {
                    writeln!(out, "{}", serde_json::to_string_pretty(&outcome.doc).expect("report serializes"))
                }
            };
            drop(out);
            match &outcome.failure {
                Some(err) => fail(cli.output, err, true),
                None => ExitCode::SUCCESS,
            }
        }
        Err(err) => fail(cli.output, &err, false),
    }
}
