//! Per-instance candidate ranking by aggregate committee score, and emission
//! of the merged prediction set.
//!
//! Ties break by candidate-order position (earlier wins), which keeps
//! selections deterministic and auditable.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::committee::{aggregate_prefix, ScoreRecord};
use crate::error::RerankError;
use crate::types::{CandidateKey, CandidateOrder};

/// Candidates of one instance ordered by descending aggregate score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub instance_id: String,
    pub ranked: Vec<CandidateKey>,
    pub aggregates: Vec<f64>,
}

/// The chosen candidate per instance, ready to emit as a prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutput {
    pub label: String,
    pub chosen: BTreeMap<String, ChosenCandidate>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenCandidate {
    pub candidate: CandidateKey,
    pub aggregate: f64,
    pub patch_text: String,
}

/// Ranks one instance's score records by `(aggregate desc, order position)`.
pub fn rank_candidates(
    records: &[ScoreRecord],
    order: &CandidateOrder,
) -> Result<RankingResult, RerankError> {
    let Some(first) = records.first() else {
        return Err(RerankError::Validation("no records to rank".into()));
    };
    let instance_id = &first.instance_id;
    let mut seen = HashSet::new();
    let mut keyed: Vec<(usize, &ScoreRecord)> = Vec::with_capacity(records.len());
    for record in records {
        if record.instance_id != *instance_id {
            return Err(RerankError::Validation(format!(
                "records mix instances {instance_id} and {}",
                record.instance_id
            )));
        }
        if !seen.insert(&record.candidate) {
            return Err(RerankError::Validation(format!(
                "duplicate candidate {} for instance {instance_id}",
                record.candidate
            )));
        }
        let position = order.position(&record.candidate).ok_or_else(|| {
            RerankError::Validation(format!(
                "candidate {} not present in the candidate order",
                record.candidate
            ))
        })?;
        keyed.push((position, record));
    }

    keyed.sort_by(|(pos_a, rec_a), (pos_b, rec_b)| {
        rec_b
            .aggregate
            .total_cmp(&rec_a.aggregate)
            .then(pos_a.cmp(pos_b))
    });

    Ok(RankingResult {
        instance_id: instance_id.clone(),
        ranked: keyed.iter().map(|(_, r)| r.candidate.clone()).collect(),
        aggregates: keyed.iter().map(|(_, r)| r.aggregate).collect(),
    })
}

/// First `min(n, len)` candidates of a ranking.
pub fn select_top_n(result: &RankingResult, n: usize) -> Vec<CandidateKey> {
    result.ranked.iter().take(n).cloned().collect()
}

/// Groups records by instance, preserving record order within groups.
pub fn group_records_by_instance(records: &[ScoreRecord]) -> BTreeMap<String, Vec<ScoreRecord>> {
    let mut grouped: BTreeMap<String, Vec<ScoreRecord>> = BTreeMap::new();
    for record in records {
        grouped
            .entry(record.instance_id.clone())
            .or_default()
            .push(record.clone());
    }
    grouped
}

/// Applies a prefix-vote cutoff to a record, clamped to the votes it has
/// (empty-patch sentinels carry a single abstaining vote).
fn prefix_aggregate(record: &ScoreRecord, prefix_votes: Option<usize>) -> f64 {
    match prefix_votes {
        None => record.aggregate,
        Some(m) => {
            let m = m.min(record.votes.len()).max(1);
            aggregate_prefix(record, m).unwrap_or(0.0)
        }
    }
}

/// Ranks every instance and picks its top candidate.
///
/// `patch_lookup` supplies the chosen candidate's patch text. When every
/// candidate of an instance scored 0 (all abstained or empty), the
/// order-first candidate is chosen and a warning recorded; instances are
/// never dropped.
pub fn select_candidates(
    records: &[ScoreRecord],
    order: &CandidateOrder,
    prefix_votes: Option<usize>,
    label: &str,
    patch_lookup: impl Fn(&str, &CandidateKey) -> Option<String>,
) -> Result<(Vec<RankingResult>, SelectionOutput), RerankError> {
    let mut rankings = Vec::new();
    let mut chosen = BTreeMap::new();
    let mut warnings = Vec::new();

    for (instance_id, group) in group_records_by_instance(records) {
        let adjusted: Vec<ScoreRecord> = group
            .iter()
            .map(|record| ScoreRecord {
                aggregate: prefix_aggregate(record, prefix_votes),
                ..record.clone()
            })
            .collect();
        let ranking = rank_candidates(&adjusted, order)?;
        let top = ranking.ranked[0].clone();
        let aggregate = ranking.aggregates[0];
        if aggregate == 0.0 {
            warnings.push(format!(
                "instance {instance_id}: every candidate abstained or proposed no change; \
                 falling back to order-first candidate {top}"
            ));
        }
        let patch_text = patch_lookup(&instance_id, &top).ok_or_else(|| {
            RerankError::Validation(format!(
                "no patch text available for instance {instance_id} candidate {top}"
            ))
        })?;
        chosen.insert(
            instance_id.clone(),
            ChosenCandidate {
                candidate: top,
                aggregate,
                patch_text,
            },
        );
        rankings.push(ranking);
    }

    Ok((
        rankings,
        SelectionOutput {
            label: label.to_string(),
            chosen,
            warnings,
        },
    ))
}

/// Renders a selection as predictions JSONL: one line per instance, sorted
/// by instance id, `model_name_or_path` set to the selection label.
pub fn predictions_jsonl(selection: &SelectionOutput) -> String {
    let mut out = String::new();
    for (instance_id, choice) in &selection.chosen {
        let line = serde_json::json!({
            "instance_id": instance_id,
            "model_name_or_path": selection.label,
            "model_patch": choice.patch_text,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Writes a selection to a predictions file.
pub fn emit_predictions(selection: &SelectionOutput, path: &std::path::Path) -> Result<(), RerankError> {
    std::fs::write(path, predictions_jsonl(selection)).map_err(|source| RerankError::Io {
        path: path.display().to_string(),
        source,
    })
}
