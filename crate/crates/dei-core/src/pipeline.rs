//! Pipeline glue: corpus loading from raw texts, scoring-task construction,
//! vote sweeps, config hashing, and report rendering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::committee::{build_prompt, CommitteeConfig, ScoreRecord, ScoringTask};
use crate::context::{assemble_context, AssembleOptions};
use crate::corpus::{
    build_resolution_matrix, parse_bundle, parse_instances, parse_predictions,
    parse_resolution_report, Corpus, PredictionSet, ReportedPredictions, ResolutionMatrix,
};
use crate::error::{CorpusError, PipelineError};
use crate::metrics::builtin_ten_agent_order;
use crate::rerank::select_candidates;
use crate::types::CandidateOrder;

/// One predictions file as raw text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsText {
    /// Label used in error messages (typically the file name).
    pub name: String,
    pub text: String,
}

/// Raw corpus texts, before parsing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusTexts {
    #[serde(default)]
    pub instances: String,
    pub predictions: Vec<PredictionsText>,
    #[serde(default)]
    pub spans: String,
    #[serde(default)]
    pub bundle: String,
}

/// Parses raw corpus texts into a [`Corpus`].
///
/// Run indices are assigned per agent in the order prediction files appear:
/// the first file of an agent is run 0, the next run 1, and so on.
pub fn load_corpus(texts: &CorpusTexts) -> Result<Corpus, PipelineError> {
    let instances = if texts.instances.is_empty() {
        BTreeMap::new()
    } else {
        parse_instances(&texts.instances, "instances")?
    };

    let mut runs_seen: BTreeMap<String, u32> = BTreeMap::new();
    let mut prediction_sets = Vec::with_capacity(texts.predictions.len());
    for file in &texts.predictions {
        let provisional = parse_predictions(&file.text, &file.name, 0)?;
        let run_index = {
            let counter = runs_seen.entry(provisional.agent_id.clone()).or_insert(0);
            let current = *counter;
            *counter += 1;
            current
        };
        let entries = provisional
            .entries
            .into_iter()
            .map(|(id, mut patch)| {
                patch.run_index = run_index;
                (id, patch)
            })
            .collect();
        prediction_sets.push(PredictionSet {
            agent_id: provisional.agent_id,
            run_index,
            entries,
        });
    }

    let spans = if texts.spans.is_empty() {
        BTreeMap::new()
    } else {
        crate::context::parse_spans(&texts.spans, "spans")?
    };
    let bundle = if texts.bundle.is_empty() {
        Default::default()
    } else {
        parse_bundle(&texts.bundle, "bundle")?
    };

    Ok(Corpus {
        instances,
        prediction_sets,
        spans,
        bundle,
    })
}

/// The candidate order to use when none was given explicitly: the builtin
/// ten-agent order when the corpus consists of exactly those agents,
/// otherwise the prediction sets' own sequence.
pub fn choose_default_order(corpus: &Corpus) -> CandidateOrder {
    let natural = corpus.default_order();
    let builtin = builtin_ten_agent_order();
    let natural_set: std::collections::BTreeSet<_> = natural.order.iter().collect();
    let builtin_set: std::collections::BTreeSet<_> = builtin.order.iter().collect();
    if natural_set == builtin_set {
        builtin
    } else {
        natural
    }
}

/// Builds the resolution matrix for a corpus from report texts aligned with
/// its prediction sets.
pub fn build_matrix_from_reports(
    corpus: &Corpus,
    reports: &[String],
    order: &CandidateOrder,
) -> Result<ResolutionMatrix, PipelineError> {
    if reports.len() != corpus.prediction_sets.len() {
        return Err(PipelineError::Corpus(CorpusError::Validation(format!(
            "{} reports given for {} prediction sets",
            reports.len(),
            corpus.prediction_sets.len()
        ))));
    }
    let columns: Vec<ReportedPredictions> = corpus
        .prediction_sets
        .iter()
        .zip(reports)
        .enumerate()
        .map(|(idx, (set, text))| {
            Ok(ReportedPredictions {
                predictions: set.clone(),
                resolved: parse_resolution_report(text, &format!("report[{idx}]"))?,
            })
        })
        .collect::<Result<_, CorpusError>>()?;
    let instance_ids: Option<Vec<String>> = if corpus.instances.is_empty() {
        None
    } else {
        Some(corpus.instances.keys().cloned().collect())
    };
    Ok(build_resolution_matrix(
        &columns,
        instance_ids.as_deref(),
        order,
    )?)
}

/// Builds scoring tasks in canonical order: instances sorted by id, then
/// candidates in candidate order. Candidates with no entry for an instance
/// are skipped; empty patches become sentinel tasks.
pub fn build_scoring_tasks(
    corpus: &Corpus,
    order: &CandidateOrder,
    committee: &CommitteeConfig,
    options: &AssembleOptions,
) -> Result<Vec<ScoringTask>, PipelineError> {
    let mut tasks = Vec::new();
    for (instance_id, instance) in &corpus.instances {
        let spans = corpus
            .spans
            .get(instance_id)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        for key in &order.order {
            let Some(patch) = corpus.candidate_for(key, instance_id) else {
                continue;
            };
            if patch.is_empty() {
                tasks.push(ScoringTask {
                    instance_id: instance_id.clone(),
                    candidate: key.clone(),
                    prompt: None,
                });
                continue;
            }
            let ctx = assemble_context(instance, patch, spans, &corpus.bundle, options).map_err(
                |source| PipelineError::Candidate {
                    instance_id: instance_id.clone(),
                    candidate: key.clone(),
                    source: Box::new(source.into()),
                },
            )?;
            tasks.push(ScoringTask {
                instance_id: instance_id.clone(),
                candidate: key.clone(),
                prompt: Some(build_prompt(&ctx, committee)),
            });
        }
    }
    Ok(tasks)
}

/// Resolve count of the top-1 selections when only the first `m` votes of
/// each record are used, for m = 1..=votes. The vote-budget ablation series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    pub resolved: usize,
}

pub fn vote_sweep(
    records: &[ScoreRecord],
    order: &CandidateOrder,
    matrix: &ResolutionMatrix,
) -> Result<Vec<SweepPoint>, PipelineError> {
    let max_votes = records.iter().map(|r| r.votes.len()).max().unwrap_or(0);
    let row_index: BTreeMap<&str, usize> = matrix
        .instance_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut points = Vec::with_capacity(max_votes);
    for m in 1..=max_votes {
        let (_, selection) =
            select_candidates(records, order, Some(m), "sweep", |_, _| Some(String::new()))?;
        let mut resolved = 0usize;
        for (instance_id, choice) in &selection.chosen {
            let row = *row_index.get(instance_id.as_str()).ok_or_else(|| {
                PipelineError::Config(format!(
                    "vote sweep: instance {instance_id} missing from the resolution matrix"
                ))
            })?;
            let col = matrix.column_index(&choice.candidate).ok_or_else(|| {
                PipelineError::Config(format!(
                    "vote sweep: candidate {} missing from the resolution matrix",
                    choice.candidate
                ))
            })?;
            if matrix.resolved[row][col] {
                resolved += 1;
            }
        }
        points.push(SweepPoint { m, resolved });
    }
    Ok(points)
}

pub fn sweep_to_csv(points: &[SweepPoint], instances: usize) -> String {
    let mut out = String::from("m,resolved,resolved_pct\n");
    for point in points {
        let pct = if instances == 0 {
            0.0
        } else {
            100.0 * point.resolved as f64 / instances as f64
        };
        out.push_str(&format!("{},{},{pct:.1}\n", point.m, point.resolved));
    }
    out
}

pub fn sweep_table(points: &[SweepPoint], instances: usize) -> String {
    let mut out = format!("{:>3}  {:>8}  {:>8}\n", "m", "resolved", "pct");
    for point in points {
        let pct = if instances == 0 {
            0.0
        } else {
            100.0 * point.resolved as f64 / instances as f64
        };
        out.push_str(&format!("{:>3}  {:>8}  {:>8.1}\n", point.m, point.resolved, pct));
    }
    out
}

/// Stable hash of a JSON-serializable config. Object keys are sorted by the
/// JSON value representation, so field order in source structs is
/// irrelevant.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String, PipelineError> {
    let value = serde_json::to_value(config)
        .map_err(|e| PipelineError::Config(format!("unhashable config: {e}")))?;
    let canonical = value.to_string();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    Ok(hex::encode(hasher.finalize()))
}
