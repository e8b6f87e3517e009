//! Run configuration: a TOML file, then `ARTLENS_*` environment variables,
//! then command line flags, each layer overriding the one before.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use artlens_core::canvas::DEFAULT_SIDE;
use artlens_core::curation::DEFAULT_MIN_SIDE;
use artlens_core::explore::DEFAULT_TTL_DAYS;
use artlens_core::ingestion::{CollectionConfig, RetryPolicy};
use artlens_server::ServiceOptions;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub catalog: PathBuf,
    /// Image cache root.
    pub cache: PathBuf,
    /// Event log; `<catalog>/events.jsonl` when unset.
    pub events: Option<PathBuf>,
    /// Session store; `<catalog>/sessions.jsonl` when unset.
    pub sessions: Option<PathBuf>,
    /// Collection filter; empty means every object type.
    pub object_type: String,
    pub cutoff: f64,
    pub k_per_label: usize,
    pub min_side: u32,
    pub collection: CollectionConfig,
    pub detector: DetectorSettings,
    pub service: ServiceSettings,
    pub provider: ProviderSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            catalog: PathBuf::from("catalog"),
            cache: PathBuf::from("cache"),
            events: None,
            sessions: None,
            object_type: "painting".into(),
            cutoff: 0.25,
            k_per_label: 100,
            min_side: DEFAULT_MIN_SIDE,
            collection: CollectionConfig::default(),
            detector: DetectorSettings::default(),
            service: ServiceSettings::default(),
            provider: ProviderSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSettings {
    pub endpoint: Option<String>,
    pub timeout_secs: u64,
    /// Artworks in flight at once.
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self { endpoint: None, timeout_secs: 120, concurrency: 4, retry: RetryPolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    pub bind: String,
    pub port: u16,
    pub session_ttl_days: i64,
    pub workers: usize,
    pub canvas_side: u32,
    pub default_page_size: usize,
    pub home_objects: Vec<String>,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        let options = ServiceOptions::default();
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            session_ttl_days: DEFAULT_TTL_DAYS,
            workers: options.workers,
            canvas_side: options.canvas_side,
            default_page_size: options.default_page_size,
            home_objects: options.home_objects,
        }
    }
}

impl ServiceSettings {
    pub fn options(&self) -> ServiceOptions {
        ServiceOptions {
            workers: self.workers,
            canvas_side: self.canvas_side,
            default_page_size: self.default_page_size,
            home_objects: self.home_objects.clone(),
        }
    }
}

/// External outpainting service. The in-process mock is used when no
/// endpoint is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSettings {
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub max_side: u32,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self { endpoint: None, api_key: None, timeout_secs: 300, max_side: DEFAULT_SIDE * 2 }
    }
}

/// Environment variables read on top of the file.
pub const ENV_VARS: [&str; 13] = [
    "ARTLENS_CATALOG",
    "ARTLENS_CACHE",
    "ARTLENS_EVENTS",
    "ARTLENS_CUTOFF",
    "ARTLENS_K_PER_LABEL",
    "ARTLENS_MIN_SIDE",
    "ARTLENS_COLLECTION_URL",
    "ARTLENS_COLLECTION_API_KEY",
    "ARTLENS_COLLECTION_FIXTURES",
    "ARTLENS_DETECTOR_ENDPOINT",
    "ARTLENS_PORT",
    "ARTLENS_PROVIDER_ENDPOINT",
    "ARTLENS_PROVIDER_API_KEY",
];

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub catalog: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub cutoff: Option<f64>,
    pub k_per_label: Option<usize>,
    pub min_side: Option<u32>,
    pub collection_url: Option<String>,
    pub collection_fixtures: Option<PathBuf>,
    pub object_type: Option<String>,
    pub detector_endpoint: Option<String>,
    pub bind: Option<String>,
    pub port: Option<u16>,
    pub provider_endpoint: Option<String>,
}

impl RunConfig {
    /// Reads the file (when given), applies the environment through `env`
    /// and validates the result. Relative paths in the file are taken from
    /// the file's directory.
    pub fn load(file: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let mut config = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        config.apply_env(env)?;
        Ok(config)
    }

    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut config.catalog);
        rebase(&mut config.cache);
        config.events.as_mut().map(rebase);
        config.sessions.as_mut().map(rebase);
        config.collection.fixture_path.as_mut().map(rebase);
        Ok(config)
    }

    fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        fn parsed<T: std::str::FromStr>(name: &str, value: String) -> Result<T, CliError> {
            value.trim().parse().map_err(|_| CliError::config(format!("{name}: cannot parse {value:?}")))
        }
        for name in ENV_VARS {
            let Some(value) = env(name).filter(|v| !v.is_empty()) else { continue };
            match name {
                "ARTLENS_CATALOG" => self.catalog = value.into(),
                "ARTLENS_CACHE" => self.cache = value.into(),
                "ARTLENS_EVENTS" => self.events = Some(value.into()),
                "ARTLENS_CUTOFF" => self.cutoff = parsed(name, value)?,
                "ARTLENS_K_PER_LABEL" => self.k_per_label = parsed(name, value)?,
                "ARTLENS_MIN_SIDE" => self.min_side = parsed(name, value)?,
                "ARTLENS_COLLECTION_URL" => self.collection.base_url = Some(value),
                "ARTLENS_COLLECTION_API_KEY" => self.collection.api_key = Some(value),
                "ARTLENS_COLLECTION_FIXTURES" => self.collection.fixture_path = Some(value.into()),
                "ARTLENS_DETECTOR_ENDPOINT" => self.detector.endpoint = Some(value),
                "ARTLENS_PORT" => self.service.port = parsed(name, value)?,
                "ARTLENS_PROVIDER_ENDPOINT" => self.provider.endpoint = Some(value),
                "ARTLENS_PROVIDER_API_KEY" => self.provider.api_key = Some(value),
                _ => unreachable!("listed above"),
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = &$value {
                    $field = v.clone().into();
                }
            };
        }
        set!(self.catalog, o.catalog);
        set!(self.cache, o.cache);
        set!(self.events, o.events);
        set!(self.cutoff, o.cutoff);
        set!(self.k_per_label, o.k_per_label);
        set!(self.min_side, o.min_side);
        set!(self.collection.base_url, o.collection_url);
        set!(self.collection.fixture_path, o.collection_fixtures);
        set!(self.object_type, o.object_type);
        set!(self.detector.endpoint, o.detector_endpoint);
        set!(self.service.bind, o.bind);
        set!(self.service.port, o.port);
        set!(self.provider.endpoint, o.provider_endpoint);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.cutoff) {
            return Err(CliError::config(format!("cutoff {} outside [0, 1]", self.cutoff)));
        }
        if self.k_per_label == 0 {
            return Err(CliError::config("k_per_label must be at least 1"));
        }
        if self.min_side == 0 {
            return Err(CliError::config("min_side must be at least 1"));
        }
        if self.detector.concurrency == 0 || self.service.workers == 0 {
            return Err(CliError::config("concurrency and workers must be at least 1"));
        }
        if self.service.canvas_side == 0 || self.service.canvas_side > self.provider.max_side {
            return Err(CliError::config(format!(
                "canvas_side {} must lie in 1..={}",
                self.service.canvas_side, self.provider.max_side
            )));
        }
        if self.service.default_page_size == 0 || self.service.session_ttl_days <= 0 {
            return Err(CliError::config("default_page_size and session_ttl_days must be positive"));
        }
        Ok(())
    }

    pub fn events_path(&self) -> PathBuf {
        self.events.clone().unwrap_or_else(|| self.catalog.join("events.jsonl"))
    }

    pub fn sessions_path(&self) -> PathBuf {
        self.sessions.clone().unwrap_or_else(|| self.catalog.join("sessions.jsonl"))
    }

    pub fn object_filter(&self) -> Option<&str> {
        Some(self.object_type.as_str()).filter(|s| !s.is_empty())
    }
}
