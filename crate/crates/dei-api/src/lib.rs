//! Request and response types for the DEI scoring service.
//!
//! Payloads carry corpus files as inline text in the on-disk formats, so the
//! service needs no shared filesystem with its clients. Domain types
//! (matrices, orders, score records) reuse their `dei-core` serializations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use dei_core::committee::{BackendSpec, CommitteeConfig};
use dei_core::context::AssembleOptions;
use dei_core::corpus::{CorpusSummary, ResolutionMatrix};
use dei_core::diff::BeforeAfterView;
use dei_core::metrics::MetricSeries;
use dei_core::pipeline::{CorpusTexts, SweepPoint};
use dei_core::rerank::{RankingResult, SelectionOutput};
use dei_core::synth::SynthConfig;
use dei_core::types::{CandidateKey, CandidateOrder};

pub const API_PREFIX: &str = "/api/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}

/// Error payload; `kind` is one of `validation`, `transport`, `internal`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiError {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateRequest {
    pub corpus: CorpusTexts,
    /// Resolution reports aligned with the corpus prediction files.
    #[serde(default)]
    pub reports: Vec<String>,
    #[serde(default)]
    pub order: Option<CandidateOrder>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub summary: CorpusSummary,
    pub order: CandidateOrder,
    /// Present when reports were supplied.
    pub matrix: Option<ResolutionMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderFile {
    pub path: String,
    pub content: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderRequest {
    pub files: Vec<RenderFile>,
    pub patch: String,
    #[serde(default = "default_margin")]
    pub margin: usize,
}

fn default_margin() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderResponse {
    pub views: Vec<BeforeAfterView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticMatrixRequest {
    pub instances: usize,
    pub candidates: usize,
    pub rate: f64,
    pub overlap: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixResponse {
    pub matrix: ResolutionMatrix,
    pub order: CandidateOrder,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthCorpusResponse {
    pub instances: String,
    pub bundle: String,
    pub spans: String,
    /// (file stem, jsonl text) per candidate, in order.
    pub predictions: Vec<(String, String)>,
    pub reports: Vec<String>,
    pub matrix: ResolutionMatrix,
    pub order: CandidateOrder,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRequest {
    pub matrix: ResolutionMatrix,
    #[serde(default)]
    pub order: Option<CandidateOrder>,
    /// `oracle`, `adversarial`, `random`, or `scores`.
    pub selector: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    /// Vote ledger JSONL; required by the `scores` selector.
    #[serde(default)]
    pub ledger: Option<String>,
}

fn default_n() -> usize {
    1
}

fn default_trials() -> u32 {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub series: MetricSeries,
    pub csv: String,
    pub table: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub corpus: CorpusTexts,
    #[serde(default)]
    pub order: Option<CandidateOrder>,
    #[serde(default)]
    pub committee: CommitteeConfig,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub assemble: AssembleOptions,
    /// Existing ledger lines; candidates already complete in it are not
    /// re-scored, and the job ledger contains only the new lines.
    #[serde(default)]
    pub resume_ledger: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSubmitResponse {
    pub job_id: String,
    pub total_votes: u64,
    /// Candidates skipped because the resume ledger already covers them.
    pub resumed_candidates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobStatusResponse {
    pub job_id: String,
    /// `queued`, `running`, `done`, or `failed`.
    pub state: String,
    pub completed_votes: u64,
    pub total_votes: u64,
    #[serde(default)]
    pub error: Option<ApiError>,
}

impl JobStatusResponse {
    pub fn is_terminal(&self) -> bool {
        self.state == "done" || self.state == "failed"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub instance_id: String,
    pub agent_id: String,
    pub run_index: u32,
    pub patch_text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RerankRequest {
    pub ledger: String,
    pub order: CandidateOrder,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Rank on the mean of only the first m votes (vote-budget ablation).
    #[serde(default)]
    pub prefix_votes: Option<usize>,
    pub label: String,
    /// Patch texts for emission, covering at least every top-ranked
    /// candidate.
    pub candidates: Vec<CandidateEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RerankResponse {
    pub rankings: Vec<RankingResult>,
    pub selection: SelectionOutput,
    pub predictions_jsonl: String,
    /// First n candidate keys per instance, in rank order.
    pub top_n: BTreeMap<String, Vec<CandidateKey>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRequest {
    pub ledger: String,
    pub order: CandidateOrder,
    pub matrix: ResolutionMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResponse {
    pub points: Vec<SweepPoint>,
    pub csv: String,
    pub table: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRequest {
    pub series: MetricSeries,
    #[serde(default)]
    pub sweep: Option<Vec<SweepPoint>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportResponse {
    pub table: String,
    pub csv: String,
    #[serde(default)]
    pub sweep_table: Option<String>,
    #[serde(default)]
    pub sweep_csv: Option<String>,
}

/// Request type for the synthetic-corpus endpoint.
pub type SynthCorpusRequest = SynthConfig;
