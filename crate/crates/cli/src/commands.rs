use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use artlens_core::canvas::{HttpOutpaintingProvider, MockProvider, OutpaintingProvider};
use artlens_core::catalog::{Catalog, Counts, OpenMode};
use artlens_core::curation::{compute_stats, run_pipeline, PipelineConfig, SubsetSpec};
use artlens_core::explore::{compute_usage, EventLog, SessionStore};
use artlens_core::ingestion::{
    fetch_artworks, import_detections, ingest_artworks, DetectionRecord, DetectorClient, ImageCache, IngestReport,
    SkippedRecord,
};
use artlens_core::metrics::{coco_ap, filter_by_confidence, read_ground_truth, read_predictions};
use artlens_core::taxonomy::Taxonomy;
use artlens_server::{mock_provider_router, router, stub_detector_router, system_clock, AppState};

use crate::config::RunConfig;
use crate::error::{CliError, ErrorCode};

/// What a command prints. `failure` turns a printed result into a nonzero
/// exit (audit violations, partial detector failures).
pub struct Outcome {
    pub doc: Value,
    pub text: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn new(doc: &impl Serialize, text: String) -> Self {
        Self { doc: serde_json::to_value(doc).expect("report serializes"), text, failure: None }
    }
}

fn taxonomy() -> Arc<Taxonomy> {
    Arc::new(Taxonomy::default_table())
}

fn open_writer(config: &RunConfig) -> Result<Catalog, CliError> {
    Ok(Catalog::open(&config.catalog, taxonomy(), OpenMode::ReadWrite)?)
}

fn open_reader(config: &RunConfig) -> Result<Catalog, CliError> {
    if !config.catalog.is_dir() {
        return Err(CliError::missing(format!("no catalog at {}", config.catalog.display())));
    }
    Ok(Catalog::open(&config.catalog, taxonomy(), OpenMode::ReadOnly)?)
}

fn image_cache(config: &RunConfig) -> Result<ImageCache, CliError> {
    Ok(ImageCache::new(&config.cache, reqwest::Client::new(), config.collection.retry)?)
}

#[derive(Debug, Serialize)]
pub struct IngestSummary {
    /// Records accepted from the collection source.
    pub records: usize,
    pub fetch_skipped: Vec<SkippedRecord>,
    #[serde(flatten)]
    pub report: IngestReport,
}

pub async fn ingest(config: &RunConfig) -> Result<Outcome, CliError> {
    if config.collection.base_url.is_none() && config.collection.fixture_path.is_none() {
        return Err(CliError::config("no collection source: set collection.base_url or collection.fixture_path"));
    }
    let client = reqwest::Client::new();
    let fetched = fetch_artworks(&config.collection, config.object_filter(), &client).await?;
    let catalog = open_writer(config)?;
    let cache = image_cache(config)?;
    let records = fetched.artworks.len();
    let report = ingest_artworks(fetched.artworks, &cache, &catalog).await?;
    let text = format!(
        "records: {records} ({} unreadable)\nstored: {}, images fetched: {}, palettes computed: {}, skipped: {}\n",
        fetched.skipped.len(),
        report.stored,
        report.fetched,
        report.palettes_computed,
        report.skipped.len()
    );
    Ok(Outcome::new(&IngestSummary { records, fetch_skipped: fetched.skipped, report }, text))
}

#[derive(Debug, Serialize)]
pub struct ArtworkFailure {
    pub artwork_id: String,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct DetectSummary {
    pub artworks: usize,
    pub detections: usize,
    pub new_detections: usize,
    pub dropped: usize,
    pub failures: Vec<ArtworkFailure>,
}

pub async fn detect(config: &RunConfig) -> Result<Outcome, CliError> {
    let endpoint = config
        .detector
        .endpoint
        .as_deref()
        .ok_or_else(|| CliError::config("no detector endpoint: set detector.endpoint or --endpoint"))?;
    let catalog = open_writer(config)?;
    let artworks = catalog.artworks();
    if artworks.is_empty() {
        return Err(CliError::missing("the catalog has no artworks; run ingest first"));
    }
    let cache = Arc::new(image_cache(config)?);
    let taxonomy = taxonomy();
    let client = Arc::new(DetectorClient::new(
        endpoint,
        reqwest::Client::new(),
        Duration::from_secs(config.detector.timeout_secs),
        config.detector.retry,
    ));
    let permits = Arc::new(Semaphore::new(config.detector.concurrency));
    let cutoff = config.cutoff;

    let mut tasks = JoinSet::new();
    for mut artwork in artworks.iter().cloned() {
        let (cache, taxonomy, client, permits) = (cache.clone(), taxonomy.clone(), client.clone(), permits.clone());
        tasks.spawn(async move {
            let _permit = permits.acquire_owned().await.expect("semaphore stays open");
            let result = match cache.fetch_image(&mut artwork).await {
                Ok(cached) => client.request_detections(&artwork, Some(&cached.path), &taxonomy, cutoff).await,
                Err(e) => Err(e),
            };
            (artwork.id, result)
        });
    }
    let mut results = tasks.join_all().await;
    results.sort_by(|a, b| a.0.cmp(&b.0));

    let mut summary =
        DetectSummary { artworks: artworks.len(), detections: 0, new_detections: 0, dropped: 0, failures: Vec::new() };
    for (artwork_id, result) in results {
        match result {
            Ok(outcome) => {
                summary.detections += outcome.detections.len();
                summary.dropped += outcome.dropped.len();
                summary.new_detections += catalog.put_detections(&outcome.detections)?;
            }
            Err(e) => {
                log::warn!("artwork {artwork_id}: {e}");
                summary.failures.push(ArtworkFailure { artwork_id, reason: e.to_string() });
            }
        }
    }
    let text = format!(
        "artworks: {}\ndetections: {} ({} new, {} dropped)\nfailed artworks: {}\n",
        summary.artworks,
        summary.detections,
        summary.new_detections,
        summary.dropped,
        summary.failures.len()
    );
    let failure = (!summary.failures.is_empty()).then(|| {
        CliError::new(
            ErrorCode::UpstreamFailure,
            format!("{} of {} artworks failed", summary.failures.len(), summary.artworks),
        )
    });
    let mut outcome = Outcome::new(&summary, text);
    outcome.failure = failure;
    Ok(outcome)
}

#[derive(Debug, Serialize)]
pub struct RejectedLine {
    pub file: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default, Serialize)]
pub struct ImportSummary {
    /// Valid, distinct records across all files.
    pub records: usize,
    pub new_detections: usize,
    pub duplicates: usize,
    pub below_cutoff: usize,
    pub unknown_artwork: usize,
    pub rejected: Vec<RejectedLine>,
}

/// Imports detection files. `cutoff` filters only when given: recorded
/// detector output is assumed to be thresholded already.
pub fn import(config: &RunConfig, files: &[PathBuf], cutoff: Option<f64>) -> Result<Outcome, CliError> {
    let catalog = open_writer(config)?;
    if catalog.counts().artworks == 0 {
        return Err(CliError::missing("the catalog has no artworks; run ingest first"));
    }
    let taxonomy = taxonomy();
    let mut summary = ImportSummary::default();
    let mut seen = BTreeSet::new();
    for path in files {
        let file = std::fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let outcome = import_detections(BufReader::new(file), &taxonomy)?;
        summary.duplicates += outcome.duplicates;
        summary.rejected.extend(outcome.rejected.into_iter().map(|r| RejectedLine {
            file: path.display().to_string(),
            line: r.line,
            reason: r.reason,
        }));
        let mut keep = Vec::new();
        for d in outcome.detections {
            if !seen.insert(d.id.clone()) {
                summary.duplicates += 1;
            } else if cutoff.is_some_and(|c| d.confidence < c) {
                summary.below_cutoff += 1;
            } else if catalog.artwork(&d.artwork_id).is_none() {
                summary.unknown_artwork += 1;
            } else {
                keep.push(d);
            }
        }
        summary.records += keep.len();
        summary.new_detections += catalog.put_detections(&keep)?;
    }
    let text = format!(
        "records: {} ({} new)\nduplicates: {}, below cutoff: {}, unknown artwork: {}, rejected: {}\n",
        summary.records,
        summary.new_detections,
        summary.duplicates,
        summary.below_cutoff,
        summary.unknown_artwork,
        summary.rejected.len()
    );
    Ok(Outcome::new(&summary, text))
}

pub async fn curate(config: &RunConfig) -> Result<Outcome, CliError> {
    let catalog = open_writer(config)?;
    if catalog.counts().detections == 0 {
        return Err(CliError::missing("the catalog has no detections; run detect or import-detections first"));
    }
    let cache = image_cache(config)?;
    let subset = SubsetSpec::new(config.k_per_label).ok_or_else(|| CliError::config("k_per_label must be positive"))?;
    let report = run_pipeline(&catalog, &cache, PipelineConfig { subset, min_side: config.min_side }).await?;
    Ok(Outcome::new(&report, report.to_text()))
}

/// A file, or every `.jsonl` file of a directory in name order.
fn jsonl_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

fn read_all<T>(
    path: &Path,
    read: impl Fn(BufReader<std::fs::File>) -> Result<Vec<T>, artlens_core::metrics::MetricsError>,
) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for file in jsonl_files(path)? {
        let f = std::fs::File::open(&file).map_err(|e| CliError::input(format!("{}: {e}", file.display())))?;
        out.extend(read(BufReader::new(f)).map_err(|e| CliError::input(format!("{}: {e}", file.display())))?);
    }
    Ok(out)
}

/// AP for one label. Without `label` the inputs must hold a single label.
pub fn eval_ap(preds: &Path, gt: &Path, label: Option<&str>, cutoff: Option<f64>) -> Result<Outcome, CliError> {
    let mut preds = read_all(preds, read_predictions)?;
    let mut gts = read_all(gt, read_ground_truth)?;
    let label = match label {
        Some(l) => l.to_string(),
        None => {
            let labels: BTreeSet<&str> =
                preds.iter().map(|p| p.label.as_str()).chain(gts.iter().map(|g| g.label.as_str())).collect();
            match labels.len() {
                0 => return Err(CliError::input("no predictions and no ground truth")),
                1 => labels.into_iter().next().unwrap().to_string(),
                n => return Err(CliError::input(format!("{n} labels in the inputs; choose one with --label"))),
            }
        }
    };
    preds.retain(|p| p.label == label);
    gts.retain(|g| g.label == label);
    if let Some(c) = cutoff {
        preds = filter_by_confidence(&preds, c)?;
    }
    let mut report = coco_ap(&preds, &gts);
    report.label = Some(label);
    Ok(Outcome::new(&report, report.to_text()))
}

pub fn stats(config: &RunConfig) -> Result<Outcome, CliError> {
    let catalog = open_reader(config)?;
    let stats = compute_stats(&catalog.detections());
    Ok(Outcome::new(&stats, stats.to_text()))
}

pub fn audit(config: &RunConfig) -> Result<Outcome, CliError> {
    let catalog = open_reader(config)?;
    let report = catalog.audit();
    let mut text = format!(
        "artworks: {}, detections: {}, crops: {}, generations: {}\n",
        report.artworks, report.detections, report.crops, report.generations
    );
    for v in &report.violations {
        text.push_str(&format!("violation: {v}\n"));
    }
    if report.is_clean() {
        text.push_str("clean\n");
    }
    let failure = (!report.is_clean())
        .then(|| CliError::new(ErrorCode::IntegrityViolation, format!("{} violation(s)", report.violations.len())));
    let mut outcome = Outcome::new(&report, text);
    outcome.failure = failure;
    Ok(outcome)
}

pub fn report(config: &RunConfig) -> Result<Outcome, CliError> {
    let path = config.events_path();
    if !path.is_file() {
        return Err(CliError::missing(format!("no event log at {}", path.display())));
    }
    let usage = compute_usage(&EventLog::read(&path)?);
    Ok(Outcome::new(&usage, usage.to_text()))
}

#[derive(Debug, Serialize)]
pub struct SnapshotSummary {
    pub path: String,
    pub counts: Counts,
}

fn counts_text(verb: &str, path: &Path, c: &Counts) -> String {
    format!(
        "{verb} {}: {} artworks, {} detections, {} crops, {} generations\n",
        path.display(),
        c.artworks,
        c.detections,
        c.crops,
        c.generations
    )
}

pub fn snapshot_export(config: &RunConfig, dest: &Path) -> Result<Outcome, CliError> {
    let catalog = open_reader(config)?;
    let counts = catalog.export_snapshot(dest)?;
    let summary = SnapshotSummary { path: dest.display().to_string(), counts };
    Ok(Outcome::new(&summary, counts_text("exported to", dest, &counts)))
}

pub fn snapshot_import(config: &RunConfig, src: &Path) -> Result<Outcome, CliError> {
    if !src.join("manifest.json").is_file() {
        return Err(CliError::input(format!("{} is not a snapshot", src.display())));
    }
    let catalog = Catalog::import_snapshot(src, &config.catalog, taxonomy())?;
    let counts = catalog.counts();
    let summary = SnapshotSummary { path: config.catalog.display().to_string(), counts };
    Ok(Outcome::new(&summary, counts_text("imported into", &config.catalog, &counts)))
}

/// Binds, reports the address through `announce` and serves until Ctrl-C.
async fn run_server(bind: &str, port: u16, app: axum::Router, announce: impl FnOnce(String)) -> Result<(), CliError> {
    let listener = tokio::net::TcpListener::bind((bind, port))
        .await
        .map_err(|e| CliError::config(format!("cannot bind {bind}:{port}: {e}")))?;
    announce(format!("http://{}", listener.local_addr()?));
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    artlens_server::serve(listener, app, shutdown).await?;
    Ok(())
}

pub async fn serve(config: &RunConfig, announce: impl FnOnce(String)) -> Result<(), CliError> {
    let catalog = Arc::new(open_writer(config)?);
    let sessions =
        SessionStore::open(&config.sessions_path(), chrono::Duration::days(config.service.session_ttl_days))?;
    let events = EventLog::open(&config.events_path())?;
    let provider: Arc<dyn OutpaintingProvider> = match &config.provider.endpoint {
        Some(endpoint) => Arc::new(HttpOutpaintingProvider::new(
            endpoint,
            config.provider.api_key.clone(),
            reqwest::Client::new(),
            Duration::from_secs(config.provider.timeout_secs),
            config.provider.max_side,
        )),
        None => Arc::new(MockProvider::new().with_max_side(config.provider.max_side)),
    };
    for id in &config.service.home_objects {
        if catalog.object(id).is_none() {
            log::warn!("home object {id} is not a browsable object");
        }
    }
    let state = AppState::new(catalog, sessions, events, provider, config.service.options(), system_clock());
    run_server(&config.service.bind, config.service.port, router(state), announce).await
}

pub async fn mock_provider(config: &RunConfig, announce: impl FnOnce(String)) -> Result<(), CliError> {
    let app = mock_provider_router(MockProvider::new().with_max_side(config.provider.max_side));
    run_server(&config.service.bind, config.service.port, app, announce).await
}

/// Reads recorded detections in the import format.
pub fn read_records(path: &Path) -> Result<Vec<DetectionRecord>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| CliError::input(format!("{} line {}: {e}", path.display(), i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub async fn stub_detector(
    config: &RunConfig,
    detections: &Path,
    announce: impl FnOnce(String),
) -> Result<(), CliError> {
    let app = stub_detector_router(read_records(detections)?);
    run_server(&config.service.bind, config.service.port, app, announce).await
}
