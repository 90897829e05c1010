//! The vote ledger: an append-only JSONL log of every raw backend response.
//!
//! One line per backend call. A vote that needed parse retries appears once
//! per attempt with the same `vote_index`; the last line for a vote index is
//! its final outcome. The ledger alone is sufficient to recompute every
//! aggregate and every downstream selection without touching the backend.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CommitteeError;
use crate::types::CandidateKey;

use super::prompt::extract_explanations;
use super::{ExplanationSet, ScoreRecord, Vote};

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub instance_id: String,
    pub agent_id: String,
    pub run_index: u32,
    pub vote_index: u32,
    pub raw_response: String,
    pub score: Option<u8>,
    pub model_label: String,
    pub rubric_version: String,
}

impl LedgerEntry {
    pub fn candidate(&self) -> CandidateKey {
        CandidateKey::new(self.agent_id.clone(), self.run_index)
    }
}

/// Serializes one entry as a JSONL line (no trailing newline).
pub fn serialize_entry(entry: &LedgerEntry) -> String {
    serde_json::to_string(entry).expect("ledger entries always serialize")
}

/// Parses ledger text into entries, reporting the first bad line.
pub fn parse_ledger(text: &str) -> Result<Vec<LedgerEntry>, CommitteeError> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: LedgerEntry =
            serde_json::from_str(line).map_err(|e| CommitteeError::LedgerFormat {
                line: idx + 1,
                message: e.to_string(),
            })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Rebuilds score records from ledger text.
///
/// Records appear in first-appearance order; within a record, attempts
/// collapse to the last line per vote index and votes sort by vote index.
/// Aggregates are recomputed from the surviving votes.
pub fn replay_ledger(text: &str) -> Result<Vec<ScoreRecord>, CommitteeError> {
    let entries = parse_ledger(text)?;
    let mut order: Vec<(String, CandidateKey)> = Vec::new();
    let mut grouped: BTreeMap<(String, CandidateKey), BTreeMap<u32, LedgerEntry>> =
        BTreeMap::new();

    for entry in entries {
        let key = (entry.instance_id.clone(), entry.candidate());
        if !grouped.contains_key(&key) {
            order.push(key.clone());
        }
        grouped.entry(key).or_default().insert(entry.vote_index, entry);
    }

    let mut records = Vec::with_capacity(order.len());
    for key in order {
        let votes_by_index = grouped.remove(&key).expect("key recorded above");
        let votes: Vec<Vote> = votes_by_index
            .into_values()
            .map(|entry| Vote {
                vote_index: entry.vote_index,
                explanations: if entry.raw_response.is_empty() {
                    ExplanationSet::default()
                } else {
                    extract_explanations(&entry.raw_response)
                },
                score: entry.score,
                raw_response: entry.raw_response,
                backend_metadata: String::new(),
            })
            .collect();
        let aggregate = ScoreRecord::recompute_aggregate(&votes);
        records.push(ScoreRecord {
            instance_id: key.0,
            candidate: key.1,
            votes,
            aggregate,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(
        instance: &str,
        agent: &str,
        vote_index: u32,
        score: Option<u8>,
        raw: &str,
    ) -> LedgerEntry {
        LedgerEntry {
            instance_id: instance.into(),
            agent_id: agent.into(),
            run_index: 0,
            vote_index,
            raw_response: raw.into(),
            score,
            model_label: "mock".into(),
            rubric_version: "rubric-v1".into(),
        }
    }

    fn to_text(entries: &[LedgerEntry]) -> String {
        entries
            .iter()
            .map(|e| serialize_entry(e) + "\n")
            .collect()
    }

    #[test]
    fn line_order_and_field_layout_are_stable() {
        let line = serialize_entry(&entry("i", "A", 0, Some(7), "Score: 7"));
        assert!(line.starts_with(
            r#"{"instance_id":"i","agent_id":"A","run_index":0,"vote_index":0,"#
        ));
        assert!(line.contains(r#""score":7"#));
    }

    #[test]
    fn replay_groups_by_candidate_in_first_appearance_order() {
        let text = to_text(&[
            entry("i1", "B", 0, Some(3), "Score: 3"),
            entry("i1", "A", 0, Some(9), "Score: 9"),
            entry("i1", "B", 1, Some(5), "Score: 5"),
        ]);
        let records = replay_ledger(&text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].candidate, CandidateKey::new("B", 0));
        assert_eq!(records[0].votes.len(), 2);
        assert_eq!(records[0].aggregate, 4.0);
        assert_eq!(records[1].aggregate, 9.0);
    }

    #[test]
    fn retries_collapse_to_last_attempt() {
        let text = to_text(&[
            entry("i1", "A", 0, None, "garbled"),
            entry("i1", "A", 0, Some(6), "Score: 6"),
            entry("i1", "A", 1, None, "garbled"),
            entry("i1", "A", 1, None, "garbled again"),
        ]);
        let records = replay_ledger(&text).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].votes.len(), 2);
        assert_eq!(records[0].votes[0].score, Some(6));
        assert_eq!(records[0].votes[1].score, None);
        assert_eq!(records[0].aggregate, 6.0);
    }

    #[test]
    fn bad_line_reports_line_number() {
        let err = replay_ledger("{json?}\n").unwrap_err();
        match err {
            CommitteeError::LedgerFormat { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
