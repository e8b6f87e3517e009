use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use artlens_core::canvas::{self, CanvasComposition, GeneratedImage, OutpaintingProvider, DEFAULT_SIDE};
use artlens_core::catalog::Catalog;
use artlens_core::explore::{EventLog, SessionStore};

use crate::docs::JobStatus;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Utc::now)
}

/// Service knobs that do not depend on storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceOptions {
    /// Concurrent generations across all sessions.
    pub workers: usize,
    pub canvas_side: u32,
    pub default_page_size: usize,
    /// Detection ids shown on the home screen slider.
    pub home_objects: Vec<String>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self { workers: 2, canvas_side: DEFAULT_SIDE, default_page_size: 24, home_objects: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Job {
    pub session_id: String,
    pub status: JobStatus,
    pub composition: CanvasComposition,
    pub error: Option<String>,
    pub result: Option<GeneratedImage>,
}

pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub sessions: SessionStore,
    pub events: EventLog,
    pub provider: Arc<dyn OutpaintingProvider>,
    pub options: ServiceOptions,
    pub clock: Clock,
    pub(crate) jobs: Mutex<HashMap<String, Job>>,
    active: Mutex<HashSet<String>>,
    workers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(
        catalog: Arc<Catalog>,
        sessions: SessionStore,
        events: EventLog,
        provider: Arc<dyn OutpaintingProvider>,
        options: ServiceOptions,
        clock: Clock,
    ) -> Arc<Self> {
        let workers = Arc::new(Semaphore::new(options.workers.max(1)));
        Arc::new(Self {
            catalog,
            sessions,
            events,
            provider,
            options,
            clock,
            jobs: Mutex::new(HashMap::new()),
            active: Mutex::new(HashSet::new()),
            workers,
        })
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    /// Queues a generation unless the session already has one running.
    pub(crate) fn submit(self: &Arc<Self>, session_id: &str, composition: CanvasComposition) -> Option<String> {
        if !self.active.lock().insert(session_id.to_string()) {
            return None;
        }
        let job_id = uuid::Uuid::new_v4().simple().to_string();
        self.jobs.lock().insert(
            job_id.clone(),
            Job {
                session_id: session_id.to_string(),
                status: JobStatus::Queued,
                composition,
                error: None,
                result: None,
            },
        );
        let state = Arc::clone(self);
        let id = job_id.clone();
        tokio::spawn(async move { state.run_job(id).await });
        Some(job_id)
    }

    async fn run_job(self: Arc<Self>, job_id: String) {
        let permit = Arc::clone(&self.workers).acquire_owned().await;
        let (session_id, composition) = {
            let mut jobs = self.jobs.lock();
            let job = jobs.get_mut(&job_id).expect("job registered before spawn");
            job.status = JobStatus::Running;
            (job.session_id.clone(), job.composition.clone())
        };
        let outcome = self.generate(&job_id, &session_id, &composition).await;
        drop(permit);
        {
            let mut jobs = self.jobs.lock();
            let job = jobs.get_mut(&job_id).expect("job present");
            match outcome {
                Ok(record) => {
                    job.status = JobStatus::Done;
                    job.result = Some(record);
                }
                Err(reason) => {
                    log::warn!("generation {job_id} failed: {reason}");
                    job.status = JobStatus::Failed;
                    job.error = Some(reason);
                }
            }
        }
        self.active.lock().remove(&session_id);
    }

    async fn generate(
        &self,
        job_id: &str,
        session_id: &str,
        comp: &CanvasComposition,
    ) -> Result<GeneratedImage, String> {
        let image =
            canvas::generate(self.provider.as_ref(), comp, self.catalog.as_ref()).await.map_err(|e| e.to_string())?;
        let record = GeneratedImage::new(job_id, Some(session_id), comp, self.provider.id(), self.now());
        self.catalog.put_generation(&record, &canvas::encode_png(&image)).map_err(|e| e.to_string())?;
        Ok(record)
    }
}
