//! Vote collection: drives the backend for every (instance, candidate,
//! vote) triple, persists each raw response to the ledger sink before
//! aggregating, and assembles score records.
//!
//! Backend calls run concurrently up to the backend's in-flight bound, but
//! ledger appends happen in canonical task order (instances in task order,
//! votes by index), so ledgers are byte-identical across schedules.

use std::sync::Mutex;

use futures::stream::{self, StreamExt};

use crate::error::CommitteeError;
use crate::seed::derive_seed;
use crate::types::CandidateKey;

use super::backend::{CompletionRequest, ScoreBackend, VoteTag};
use super::ledger::{serialize_entry, LedgerEntry};
use super::prompt::extract_explanations;
use super::score_parse::parse_score;
use super::{CommitteeConfig, ExplanationSet, ScoreRecord, Vote};

/// One candidate to score. `prompt` is `None` for empty patches, which are
/// never sent to the backend: they get a single sentinel ledger line and an
/// aggregate of 0.
#[derive(Debug, Clone)]
pub struct ScoringTask {
    pub instance_id: String,
    pub candidate: CandidateKey,
    pub prompt: Option<String>,
}

/// Destination for ledger lines. Appends must be atomic per entry.
pub trait VoteSink: Send + Sync {
    fn append(&self, entry: &LedgerEntry) -> std::io::Result<()>;
}

/// In-memory sink collecting entries and their JSONL rendering.
#[derive(Default)]
pub struct VecSink {
    entries: Mutex<Vec<LedgerEntry>>,
}

impl VecSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> Vec<LedgerEntry> {
        self.entries.lock().expect("sink poisoned").clone()
    }

    pub fn to_jsonl(&self) -> String {
        self.entries()
            .iter()
            .map(|e| serialize_entry(e) + "\n")
            .collect()
    }
}

impl VoteSink for VecSink {
    fn append(&self, entry: &LedgerEntry) -> std::io::Result<()> {
        self.entries.lock().expect("sink poisoned").push(entry.clone());
        Ok(())
    }
}

/// Drives a backend over scoring tasks.
pub struct ScoringEngine<'a> {
    backend: &'a dyn ScoreBackend,
    cfg: CommitteeConfig,
    max_in_flight: usize,
}

/// Result of one vote unit: every ledger line it produced (one per backend
/// attempt) plus the final vote.
type VoteOutcome = (usize, Vec<LedgerEntry>, Vote);

impl<'a> ScoringEngine<'a> {
    pub fn new(backend: &'a dyn ScoreBackend, cfg: CommitteeConfig, max_in_flight: usize) -> Self {
        Self {
            backend,
            cfg,
            max_in_flight: max_in_flight.max(1),
        }
    }

    /// Scores every task, appending each raw response to `sink` before any
    /// aggregation. Progress callbacks fire once per completed vote.
    pub async fn score_all(
        &self,
        tasks: &[ScoringTask],
        sink: &dyn VoteSink,
        mut on_vote_done: impl FnMut(),
    ) -> Result<Vec<ScoreRecord>, CommitteeError> {
        self.cfg.validate()?;

        struct Unit<'t> {
            task_index: usize,
            task: &'t ScoringTask,
            vote_index: u32,
        }

        let mut units = Vec::new();
        let mut expected_votes = vec![0usize; tasks.len()];
        for (task_index, task) in tasks.iter().enumerate() {
            let votes = if task.prompt.is_some() {
                self.cfg.votes_per_candidate
            } else {
                1
            };
            expected_votes[task_index] = votes as usize;
            for vote_index in 0..votes {
                units.push(Unit {
                    task_index,
                    task,
                    vote_index,
                });
            }
        }

        let mut outcomes = stream::iter(units.into_iter().map(|unit| {
            let cfg = &self.cfg;
            let backend = self.backend;
            async move {
                let (entries, vote) = run_vote(backend, cfg, unit.task, unit.vote_index).await?;
                Ok::<VoteOutcome, CommitteeError>((unit.task_index, entries, vote))
            }
        }))
        .buffered(self.max_in_flight);

        let mut records: Vec<ScoreRecord> = Vec::with_capacity(tasks.len());
        let mut pending: Vec<Vote> = Vec::new();
        let mut pending_task = 0usize;
        while let Some(outcome) = outcomes.next().await {
            let (task_index, entries, vote) = outcome?;
            debug_assert_eq!(task_index, pending_task);
            for entry in &entries {
                sink.append(entry)?;
            }
            pending.push(vote);
            on_vote_done();
            if pending.len() == expected_votes[task_index] {
                let votes = std::mem::take(&mut pending);
                let aggregate = ScoreRecord::recompute_aggregate(&votes);
                let task = &tasks[task_index];
                records.push(ScoreRecord {
                    instance_id: task.instance_id.clone(),
                    candidate: task.candidate.clone(),
                    votes,
                    aggregate,
                });
                pending_task += 1;
            }
        }
        Ok(records)
    }

    /// Total vote units `score_all` will run for these tasks.
    pub fn total_votes(&self, tasks: &[ScoringTask]) -> u64 {
        tasks
            .iter()
            .map(|t| {
                if t.prompt.is_some() {
                    u64::from(self.cfg.votes_per_candidate)
                } else {
                    1
                }
            })
            .sum()
    }
}

async fn run_vote(
    backend: &dyn ScoreBackend,
    cfg: &CommitteeConfig,
    task: &ScoringTask,
    vote_index: u32,
) -> Result<(Vec<LedgerEntry>, Vote), CommitteeError> {
    let Some(prompt) = &task.prompt else {
        // Empty patch: one sentinel line so the ledger stays complete for
        // downstream score lookups, no backend contact.
        let entry = LedgerEntry {
            instance_id: task.instance_id.clone(),
            agent_id: task.candidate.agent_id.clone(),
            run_index: task.candidate.run_index,
            vote_index,
            raw_response: String::new(),
            score: None,
            model_label: cfg.model_label.clone(),
            rubric_version: cfg.rubric_version.clone(),
        };
        let vote = Vote {
            vote_index,
            raw_response: String::new(),
            explanations: ExplanationSet::default(),
            score: None,
            backend_metadata: "empty-patch".to_string(),
        };
        return Ok((vec![entry], vote));
    };

    let run_index_text = task.candidate.run_index.to_string();
    let vote_text = vote_index.to_string();
    let mut entries = Vec::new();
    let mut last_response = String::new();
    let mut last_metadata = String::new();

    for attempt in 0..=cfg.max_parse_retries {
        let attempt_text = attempt.to_string();
        let seed = derive_seed(
            cfg.seed,
            &[
                "vote",
                &task.instance_id,
                &task.candidate.agent_id,
                &run_index_text,
                &vote_text,
                &attempt_text,
            ],
        );
        let request = CompletionRequest {
            prompt: prompt.clone(),
            temperature: cfg.temperature,
            seed,
            model: cfg.model_label.clone(),
            tag: VoteTag {
                instance_id: task.instance_id.clone(),
                candidate: task.candidate.clone(),
                vote_index,
                attempt,
            },
        };
        let response =
            backend
                .complete(&request)
                .await
                .map_err(|detail| CommitteeError::Transport {
                    instance_id: task.instance_id.clone(),
                    candidate: task.candidate.clone(),
                    detail,
                })?;
        let score = parse_score(&response.content).ok();
        entries.push(LedgerEntry {
            instance_id: task.instance_id.clone(),
            agent_id: task.candidate.agent_id.clone(),
            run_index: task.candidate.run_index,
            vote_index,
            raw_response: response.content.clone(),
            score,
            model_label: cfg.model_label.clone(),
            rubric_version: cfg.rubric_version.clone(),
        });
        if let Some(score) = score {
            let explanations = if cfg.explanations_enabled {
                extract_explanations(&response.content)
            } else {
                ExplanationSet::default()
            };
            let vote = Vote {
                vote_index,
                raw_response: response.content,
                explanations,
                score: Some(score),
                backend_metadata: format!("{};attempts={}", response.metadata, attempt + 1),
            };
            return Ok((entries, vote));
        }
        last_response = response.content;
        last_metadata = response.metadata;
    }

    let vote = Vote {
        vote_index,
        raw_response: last_response,
        explanations: ExplanationSet::default(),
        score: None,
        backend_metadata: format!(
            "{last_metadata};attempts={};abstained",
            cfg.max_parse_retries + 1
        ),
    };
    Ok((entries, vote))
}

#[cfg(test)]
mod tests {
    use async_trait::async_trait;

    use super::super::backend::{CompletionResponse, MockBackend, ScriptedScore};
    use super::super::replay_ledger;
    use super::*;

    fn task(instance: &str, agent: &str, prompt: Option<&str>) -> ScoringTask {
        ScoringTask {
            instance_id: instance.into(),
            candidate: CandidateKey::new(agent, 0),
            prompt: prompt.map(str::to_string),
        }
    }

    fn cfg(votes: u32) -> CommitteeConfig {
        CommitteeConfig {
            votes_per_candidate: votes,
            seed: 42,
            ..CommitteeConfig::default()
        }
    }

    #[tokio::test]
    async fn scripted_sevens_aggregate_to_seven() {
        let backend = MockBackend::new(
            vec![ScriptedScore {
                instance_id: "i".into(),
                agent_id: "A".into(),
                run_index: 0,
                score: 7,
            }],
            None,
            None,
        );
        let engine = ScoringEngine::new(&backend, cfg(10), 4);
        let sink = VecSink::new();
        let records = engine
            .score_all(&[task("i", "A", Some("p"))], &sink, || {})
            .await
            .unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].votes.len(), 10);
        assert_eq!(records[0].aggregate, 7.0);
        assert_eq!(sink.entries().len(), 10);
    }

    #[tokio::test]
    async fn empty_patch_skipped_with_sentinel() {
        let backend = MockBackend::new(vec![], None, Some(9));
        let engine = ScoringEngine::new(&backend, cfg(10), 4);
        let sink = VecSink::new();
        let records = engine
            .score_all(&[task("i", "A", None)], &sink, || {})
            .await
            .unwrap();
        assert_eq!(records[0].aggregate, 0.0);
        assert_eq!(records[0].votes.len(), 1);
        assert_eq!(records[0].votes[0].score, None);
        let entries = sink.entries();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].raw_response, "");
    }

    #[tokio::test]
    async fn unparseable_replies_abstain_after_retries() {
        let backend = MockBackend::new(vec![], Some("no verdict here".into()), None);
        let config = cfg(2);
        let engine = ScoringEngine::new(&backend, config.clone(), 4);
        let sink = VecSink::new();
        let records = engine
            .score_all(&[task("i", "A", Some("p"))], &sink, || {})
            .await
            .unwrap();
        assert_eq!(records[0].aggregate, 0.0);
        assert!(records[0].votes.iter().all(|v| v.score.is_none()));
        // One line per attempt: votes * (1 + max_parse_retries).
        let expected = 2 * (1 + config.max_parse_retries as usize);
        assert_eq!(sink.entries().len(), expected);
    }

    #[tokio::test]
    async fn ledger_replay_reproduces_aggregates() {
        let backend = MockBackend::new(vec![], None, None);
        let engine = ScoringEngine::new(&backend, cfg(10), 4);
        let sink = VecSink::new();
        let tasks = vec![
            task("i1", "A", Some("p1")),
            task("i1", "B", Some("p2")),
            task("i2", "A", Some("p3")),
        ];
        let records = engine.score_all(&tasks, &sink, || {}).await.unwrap();
        let replayed = replay_ledger(&sink.to_jsonl()).unwrap();
        assert_eq!(records.len(), replayed.len());
        for (live, replay) in records.iter().zip(&replayed) {
            assert_eq!(live.instance_id, replay.instance_id);
            assert_eq!(live.candidate, replay.candidate);
            assert_eq!(live.aggregate, replay.aggregate);
            assert_eq!(live.votes.len(), replay.votes.len());
        }
    }

    #[tokio::test]
    async fn concurrency_does_not_change_the_ledger() {
        let backend = MockBackend::new(vec![], None, None);
        let tasks = vec![
            task("i1", "A", Some("p1")),
            task("i1", "B", Some("p2")),
            task("i2", "A", Some("p3")),
            task("i2", "B", None),
        ];
        let mut ledgers = Vec::new();
        for max_in_flight in [1, 8] {
            let engine = ScoringEngine::new(&backend, cfg(5), max_in_flight);
            let sink = VecSink::new();
            engine.score_all(&tasks, &sink, || {}).await.unwrap();
            ledgers.push(sink.to_jsonl());
        }
        assert_eq!(ledgers[0], ledgers[1]);
    }

    struct FailingBackend;

    #[async_trait]
    impl ScoreBackend for FailingBackend {
        async fn complete(&self, _: &CompletionRequest) -> Result<CompletionResponse, String> {
            Err("connection refused".into())
        }

        fn label(&self) -> String {
            "failing".into()
        }
    }

    #[tokio::test]
    async fn transport_error_names_the_candidate() {
        let backend = FailingBackend;
        let engine = ScoringEngine::new(&backend, cfg(3), 2);
        let sink = VecSink::new();
        let err = engine
            .score_all(&[task("i9", "Z", Some("p"))], &sink, || {})
            .await
            .unwrap_err();
        match err {
            CommitteeError::Transport {
                instance_id,
                candidate,
                ..
            } => {
                assert_eq!(instance_id, "i9");
                assert_eq!(candidate, CandidateKey::new("Z", 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[tokio::test]
    async fn progress_callback_counts_votes() {
        let backend = MockBackend::new(vec![], None, None);
        let engine = ScoringEngine::new(&backend, cfg(4), 2);
        let sink = VecSink::new();
        let mut done = 0u64;
        let tasks = vec![task("i", "A", Some("p")), task("i", "B", None)];
        assert_eq!(engine.total_votes(&tasks), 5);
        engine
            .score_all(&tasks, &sink, || done += 1)
            .await
            .unwrap();
        assert_eq!(done, 5);
    }
}
