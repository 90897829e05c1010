//! In-memory scoring jobs.
//!
//! A job owns an append-only ledger buffer that grows while scoring runs;
//! clients can read it at any time, so a failed or interrupted job still
//! yields every persisted vote.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use dei_core::committee::{serialize_entry, LedgerEntry, VoteSink};
use dei_core::error::ErrorKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed { kind: ErrorKind, message: String },
}

impl JobState {
    pub fn label(&self) -> &'static str {
        match self {
            JobState::Queued => "queued",
            JobState::Running => "running",
            JobState::Done => "done",
            JobState::Failed { .. } => "failed",
        }
    }
}

pub struct Job {
    pub id: String,
    pub total_votes: u64,
    completed_votes: AtomicU64,
    state: Mutex<JobState>,
    ledger: Mutex<String>,
}

impl Job {
    fn new(id: String, total_votes: u64) -> Self {
        Self {
            id,
            total_votes,
            completed_votes: AtomicU64::new(0),
            state: Mutex::new(JobState::Queued),
            ledger: Mutex::new(String::new()),
        }
    }

    pub fn completed_votes(&self) -> u64 {
        self.completed_votes.load(Ordering::Relaxed)
    }

    pub fn bump_completed(&self) {
        self.completed_votes.fetch_add(1, Ordering::Relaxed);
    }

    pub fn state(&self) -> JobState {
        self.state.lock().expect("job state poisoned").clone()
    }

    pub fn set_state(&self, state: JobState) {
        *self.state.lock().expect("job state poisoned") = state;
    }

    pub fn ledger_text(&self) -> String {
        self.ledger.lock().expect("job ledger poisoned").clone()
    }
}

impl VoteSink for Job {
    fn append(&self, entry: &LedgerEntry) -> std::io::Result<()> {
        let mut ledger = self.ledger.lock().expect("job ledger poisoned");
        ledger.push_str(&serialize_entry(entry));
        ledger.push('\n');
        Ok(())
    }
}

#[derive(Default)]
pub struct JobStore {
    jobs: Mutex<HashMap<String, Arc<Job>>>,
}

impl JobStore {
    pub fn create(&self, total_votes: u64) -> Arc<Job> {
        let id = uuid::Uuid::new_v4().to_string();
        let job = Arc::new(Job::new(id.clone(), total_votes));
        self.jobs
            .lock()
            .expect("job store poisoned")
            .insert(id, job.clone());
        job
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.lock().expect("job store poisoned").get(id).cloned()
    }
}
