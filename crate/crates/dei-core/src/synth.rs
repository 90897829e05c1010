//! Synthetic corpus generation: a seeded, self-consistent set of instances,
//! bundled files, spans, candidate patches, and resolution reports for
//! desk-scale experiments without live agents.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ResolutionMatrix;
use crate::diff::testkit::{random_edit_script, random_lines, script_to_diff, EditChunk};
use crate::error::MetricsError;
use crate::metrics::generate_synthetic_matrix;
use crate::seed::derived_rng;
use crate::types::{CandidateKey, CandidateOrder};

/// Knobs for synthetic corpus generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub instances: usize,
    pub agents: usize,
    #[serde(default = "default_runs")]
    pub runs_per_agent: u32,
    /// Per-candidate probability of resolving an instance.
    pub resolve_rate: f64,
    /// Inter-candidate correlation of resolution outcomes (0 = independent).
    pub overlap: f64,
    /// Probability that a candidate proposes no change. Empty-patch
    /// candidates are always marked unresolved.
    #[serde(default)]
    pub empty_patch_rate: f64,
    pub seed: u64,
}

fn default_runs() -> u32 {
    1
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            instances: 10,
            agents: 4,
            runs_per_agent: 1,
            resolve_rate: 0.3,
            overlap: 0.2,
            empty_patch_rate: 0.0,
            seed: 42,
        }
    }
}

/// A generated corpus, materialized as the on-disk text formats plus the
/// ground-truth matrix.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub instances_jsonl: String,
    pub bundle_jsonl: String,
    pub spans_jsonl: String,
    /// One predictions file per (agent, run), in candidate-order sequence:
    /// (file stem, jsonl text).
    pub predictions: Vec<(String, String)>,
    /// Resolution reports aligned with `predictions`.
    pub reports: Vec<String>,
    pub matrix: ResolutionMatrix,
    pub order: CandidateOrder,
}

fn instance_id(i: usize, width: usize) -> String {
    format!("inst-{i:0width$}")
}

fn file_path(i: usize, width: usize) -> String {
    format!("src/mod_{i:0width$}.py")
}

/// Generates a self-consistent synthetic corpus.
///
/// Every candidate covers every instance; candidate patches are random edit
/// scripts over the bundled file, so they parse and apply cleanly. The
/// ground-truth matrix drives the per-candidate resolution reports.
pub fn generate_synth_corpus(cfg: &SynthConfig) -> Result<SynthCorpus, MetricsError> {
    if cfg.instances == 0 || cfg.agents == 0 || cfg.runs_per_agent == 0 {
        return Err(MetricsError::Validation(
            "instances, agents and runs_per_agent must all be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.empty_patch_rate) {
        return Err(MetricsError::Validation(format!(
            "empty_patch_rate {} outside [0, 1]",
            cfg.empty_patch_rate
        )));
    }

    let candidate_count = cfg.agents * cfg.runs_per_agent as usize;
    let mut matrix = generate_synthetic_matrix(
        cfg.instances,
        candidate_count,
        cfg.resolve_rate,
        cfg.overlap,
        cfg.seed,
    )?;

    let width = cfg.instances.to_string().len().max(4);
    let agent_width = cfg.agents.to_string().len().max(2);

    // Candidate columns: agents x runs, agent-major.
    let keys: Vec<CandidateKey> = (0..cfg.agents)
        .flat_map(|a| {
            (0..cfg.runs_per_agent).map(move |r| CandidateKey::new(format!("agent-{a:0w$}", w = agent_width), r))
        })
        .collect();
    matrix.candidates = keys.clone();
    matrix.instance_ids = (0..cfg.instances).map(|i| instance_id(i, width)).collect();

    // Instances, bundle files and spans.
    let mut instances_jsonl = String::new();
    let mut bundle_jsonl = String::new();
    let mut spans_jsonl = String::new();
    let mut files: Vec<Vec<String>> = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let id = instance_id(i, width);
        let path = file_path(i, width);
        let mut rng: ChaCha8Rng = derived_rng(cfg.seed, &["file", &id]);
        let line_count = rng.random_range(12..=30);
        let lines = random_lines(&mut rng, line_count);
        let content: String = lines.iter().map(|l| format!("{l}\n")).collect();

        instances_jsonl.push_str(
            &serde_json::json!({
                "instance_id": id,
                "issue_text": format!(
                    "Calling process() in {path} produces the wrong result when the \
                     input list is empty (case {i})."
                ),
                "repo_label": "synthetic/demo",
            })
            .to_string(),
        );
        instances_jsonl.push('\n');

        bundle_jsonl.push_str(
            &serde_json::json!({
                "instance_id": id,
                "file_path": path,
                "content": content,
            })
            .to_string(),
        );
        bundle_jsonl.push('\n');

        let span_start = rng.random_range(0..lines.len().min(4));
        let span_end = (span_start + rng.random_range(2..=6)).min(lines.len() - 1);
        let code = lines[span_start..=span_end].join("\n");
        spans_jsonl.push_str(
            &serde_json::json!({
                "instance_id": id,
                "spans": [{
                    "file_path": path,
                    "start_line": span_start + 1,
                    "end_line": span_end + 1,
                    "code": code,
                    "origin": "synthetic-localizer",
                }],
            })
            .to_string(),
        );
        spans_jsonl.push('\n');

        files.push(lines);
    }

    // Candidate patches and reports.
    let mut predictions = Vec::with_capacity(keys.len());
    let mut reports = Vec::with_capacity(keys.len());
    for (col, key) in keys.iter().enumerate() {
        let mut preds = String::new();
        let mut resolved_ids = Vec::new();
        for i in 0..cfg.instances {
            let id = instance_id(i, width);
            let path = file_path(i, width);
            let mut rng: ChaCha8Rng =
                derived_rng(cfg.seed, &["patch", &id, &key.agent_id, &key.run_index.to_string()]);
            let empty = rng.random_bool(cfg.empty_patch_rate);
            if empty {
                matrix.resolved[i][col] = false;
            }
            let patch = if empty {
                String::new()
            } else {
                let mut script = random_edit_script(&mut rng, &files[i]);
                if !script.has_changes() {
                    script.chunks[0] = EditChunk {
                        old_lines: vec![files[i][0].clone()],
                        new_lines: vec![format!("{} # adjusted", files[i][0])],
                        changed: true,
                    };
                }
                script_to_diff(&script, &path, 3)
            };
            if matrix.resolved[i][col] {
                resolved_ids.push(id.clone());
            }
            preds.push_str(
                &serde_json::json!({
                    "instance_id": id,
                    "model_name_or_path": key.agent_id,
                    "model_patch": patch,
                })
                .to_string(),
            );
            preds.push('\n');
        }
        predictions.push((format!("{}-run{}", key.agent_id, key.run_index), preds));
        reports.push(serde_json::json!({ "resolved": resolved_ids }).to_string());
    }

    let order = CandidateOrder::new(keys, "generation order");
    Ok(SynthCorpus {
        instances_jsonl,
        bundle_jsonl,
        spans_jsonl,
        predictions,
        reports,
        matrix,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::parse_spans;
    use crate::corpus::{parse_bundle, parse_instances, parse_predictions, parse_resolution_report};
    use crate::diff::{apply_patches, parse_unified_diff};

    #[test]
    fn generated_corpus_is_self_consistent() {
        let corpus = generate_synth_corpus(&SynthConfig {
            instances: 6,
            agents: 3,
            runs_per_agent: 2,
            resolve_rate: 0.4,
            overlap: 0.3,
            empty_patch_rate: 0.1,
            seed: 7,
        })
        .unwrap();

        let instances = parse_instances(&corpus.instances_jsonl, "instances").unwrap();
        assert_eq!(instances.len(), 6);
        let bundle = parse_bundle(&corpus.bundle_jsonl, "bundle").unwrap();
        let spans = parse_spans(&corpus.spans_jsonl, "spans").unwrap();
        assert_eq!(spans.len(), 6);
        assert_eq!(corpus.predictions.len(), 6);
        assert_eq!(corpus.order.len(), 6);
        corpus.matrix.validate().unwrap();

        // Every non-empty patch parses and applies to the bundle.
        for (run_index, (_, preds)) in corpus.predictions.iter().enumerate() {
            let set = parse_predictions(preds, "preds", run_index as u32).unwrap();
            assert_eq!(set.len(), 6);
            for (iid, patch) in &set.entries {
                if patch.is_empty() {
                    continue;
                }
                let parsed = parse_unified_diff(&patch.patch_text).unwrap();
                apply_patches(&bundle, iid, &parsed).unwrap();
            }
        }

        // Reports match matrix columns.
        for (col, report) in corpus.reports.iter().enumerate() {
            let resolved = parse_resolution_report(report, "report").unwrap();
            let expected = corpus
                .matrix
                .resolved_set(&corpus.order.order[col])
                .unwrap();
            assert_eq!(resolved, expected);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::default();
        let a = generate_synth_corpus(&cfg).unwrap();
        let b = generate_synth_corpus(&cfg).unwrap();
        assert_eq!(a.bundle_jsonl, b.bundle_jsonl);
        assert_eq!(a.predictions, b.predictions);
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn empty_patches_are_never_resolved() {
        let corpus = generate_synth_corpus(&SynthConfig {
            instances: 12,
            agents: 2,
            empty_patch_rate: 0.5,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        for (col, (_, preds)) in corpus.predictions.iter().enumerate() {
            let set = parse_predictions(preds, "preds", 0).unwrap();
            for (row, iid) in corpus.matrix.instance_ids.iter().enumerate() {
                if set.entries[iid].is_empty() {
                    assert!(!corpus.matrix.resolved[row][col]);
                }
            }
        }
    }
}
