//! The explain-then-score review committee.
//!
//! For each candidate patch the committee builds a prompt from the assembled
//! scoring context, asks the backend for a fixed number of votes, parses a
//! 1-10 score out of each reply, persists every raw response to an
//! append-only vote ledger, and aggregates the scores by averaging.

mod backend;
mod engine;
mod ledger;
mod prompt;
mod score_parse;

pub use backend::{
    BackendSpec, CompletionRequest, CompletionResponse, HttpChatBackend, MockBackend,
    ScoreBackend, ScriptedScore, VoteTag, DEFAULT_CREDENTIAL_ENV,
};
pub use engine::{ScoringEngine, ScoringTask, VecSink, VoteSink};
pub use ledger::{parse_ledger, replay_ledger, serialize_entry, LedgerEntry};
pub use prompt::{build_prompt, extract_explanations, EXPLANATION_HEADERS, SCORE_CONTRACT_PREFIX};
pub use score_parse::{parse_score, ScoreParseFailure};

use serde::{Deserialize, Serialize};

use crate::error::CommitteeError;
use crate::types::CandidateKey;

/// Committee configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitteeConfig {
    /// Votes collected per candidate; more votes average out reviewer noise.
    #[serde(default = "default_votes")]
    pub votes_per_candidate: u32,
    /// When false, the prompt omits the five explanation requests and keeps
    /// only the rubric and the score contract (judging-ablation mode).
    #[serde(default = "default_true")]
    pub explanations_enabled: bool,
    #[serde(default = "default_model_label")]
    pub model_label: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub seed: u64,
    /// Fresh backend calls allowed after an unparseable reply before the
    /// vote abstains.
    #[serde(default = "default_parse_retries")]
    pub max_parse_retries: u32,
    #[serde(default = "default_rubric_version")]
    pub rubric_version: String,
}

fn default_votes() -> u32 {
    10
}
fn default_true() -> bool {
    true
}
fn default_model_label() -> String {
    "mock-committee".to_string()
}
fn default_temperature() -> f64 {
    0.7
}
fn default_parse_retries() -> u32 {
    2
}
fn default_rubric_version() -> String {
    "rubric-v1".to_string()
}

impl Default for CommitteeConfig {
    fn default() -> Self {
        Self {
            votes_per_candidate: default_votes(),
            explanations_enabled: true,
            model_label: default_model_label(),
            temperature: default_temperature(),
            seed: 0,
            max_parse_retries: default_parse_retries(),
            rubric_version: default_rubric_version(),
        }
    }
}

impl CommitteeConfig {
    pub fn validate(&self) -> Result<(), CommitteeError> {
        if self.votes_per_candidate == 0 {
            return Err(CommitteeError::Config(
                "votes_per_candidate must be at least 1".into(),
            ));
        }
        if self.temperature < 0.0 {
            return Err(CommitteeError::Config("temperature must be non-negative".into()));
        }
        Ok(())
    }
}

/// The five ordered explanations a vote walks through before scoring.
/// All fields are empty when explanations are disabled.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationSet {
    pub issue_expl: String,
    pub context_expl: String,
    pub location_expl: String,
    pub patch_expl: String,
    pub conflict_expl: String,
}

/// One committee vote on one candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub vote_index: u32,
    pub raw_response: String,
    pub explanations: ExplanationSet,
    /// `None` marks an abstaining vote (only after parse retries ran out).
    pub score: Option<u8>,
    pub backend_metadata: String,
}

/// All votes and the aggregate score for one candidate on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub instance_id: String,
    pub candidate: CandidateKey,
    pub votes: Vec<Vote>,
    /// Mean of non-abstaining scores; 0 when every vote abstained or the
    /// candidate's patch was empty.
    pub aggregate: f64,
}

impl ScoreRecord {
    pub fn recompute_aggregate(votes: &[Vote]) -> f64 {
        mean_scores(votes.iter().filter_map(|v| v.score))
    }
}

fn mean_scores(scores: impl Iterator<Item = u8>) -> f64 {
    let mut sum = 0u32;
    let mut count = 0u32;
    for s in scores {
        sum += u32::from(s);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        f64::from(sum) / f64::from(count)
    }
}

/// Mean over the first `m` votes' non-abstaining scores (0 if none valid).
///
/// This is the vote-budget ablation: how well do just the first `m` of the
/// collected votes rank candidates?
pub fn aggregate_prefix(record: &ScoreRecord, m: usize) -> Result<f64, CommitteeError> {
    if m == 0 || m > record.votes.len() {
        return Err(CommitteeError::InvalidArgument(format!(
            "prefix length {m} out of range 1..={}",
            record.votes.len()
        )));
    }
    Ok(mean_scores(record.votes[..m].iter().filter_map(|v| v.score)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vote(index: u32, score: Option<u8>) -> Vote {
        Vote {
            vote_index: index,
            raw_response: match score {
                Some(s) => format!("Score: {s}"),
                None => "no score".into(),
            },
            explanations: ExplanationSet::default(),
            score,
            backend_metadata: String::new(),
        }
    }

    fn record(scores: &[Option<u8>]) -> ScoreRecord {
        let votes: Vec<Vote> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| vote(i as u32, *s))
            .collect();
        let aggregate = ScoreRecord::recompute_aggregate(&votes);
        ScoreRecord {
            instance_id: "inst".into(),
            candidate: CandidateKey::new("A", 0),
            votes,
            aggregate,
        }
    }

    #[test]
    fn aggregate_excludes_abstains() {
        let r = record(&[Some(8), Some(8), Some(6), None]);
        assert!((r.aggregate - 22.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_zero_when_all_abstain() {
        let r = record(&[None, None]);
        assert_eq!(r.aggregate, 0.0);
    }

    #[test]
    fn prefix_full_length_equals_aggregate() {
        let r = record(&[Some(4), Some(10), None, Some(7)]);
        assert_eq!(aggregate_prefix(&r, r.votes.len()).unwrap(), r.aggregate);
    }

    #[test]
    fn prefix_one_takes_first_vote() {
        let r = record(&[Some(4), Some(10)]);
        assert_eq!(aggregate_prefix(&r, 1).unwrap(), 4.0);
    }

    #[test]
    fn prefix_means_match_cumulative_sum_oracle() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let scores: Vec<Option<u8>> = (0..10)
                .map(|_| {
                    if rng.random_bool(0.15) {
                        None
                    } else {
                        Some(rng.random_range(1..=10))
                    }
                })
                .collect();
            let r = record(&scores);
            let mut sum = 0u32;
            let mut count = 0u32;
            for m in 1..=scores.len() {
                if let Some(s) = scores[m - 1] {
                    sum += u32::from(s);
                    count += 1;
                }
                let expected = if count == 0 {
                    0.0
                } else {
                    f64::from(sum) / f64::from(count)
                };
                assert_eq!(aggregate_prefix(&r, m).unwrap(), expected);
            }
        }
    }

    #[test]
    fn prefix_out_of_range_rejected() {
        let r = record(&[Some(5)]);
        assert!(aggregate_prefix(&r, 0).is_err());
        assert!(aggregate_prefix(&r, 2).is_err());
    }

    #[test]
    fn config_requires_votes() {
        let cfg = CommitteeConfig {
            votes_per_candidate: 0,
            ..CommitteeConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
