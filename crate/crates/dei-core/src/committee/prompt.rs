//! The canonical committee prompt.
//!
//! Layout, in order: issue text, relevant spans, code before the patch, code
//! after the patch, then the task instructions — five ordered explanation
//! requests (each allowed to build on the previous ones), the deduction
//! rubric, and the final-line score contract. The explanation block is
//! omitted entirely in ablation mode; rubric and contract always remain.

use crate::context::{render_scoring_context, ScoringContext};

use super::{CommitteeConfig, ExplanationSet};

/// The fixed explanation order. Each header appears verbatim in the prompt
/// and is also used to slice explanations back out of replies.
pub const EXPLANATION_HEADERS: [&str; 5] = [
    "Issue explanation",
    "Context explanation",
    "Location explanation",
    "Patch explanation",
    "Conflict detection",
];

/// Final-line output contract prefix.
pub const SCORE_CONTRACT_PREFIX: &str = "Score:";

/// Builds the full prompt for one vote. Pure formatting: identical inputs
/// produce identical bytes.
pub fn build_prompt(ctx: &ScoringContext, cfg: &CommitteeConfig) -> String {
    let mut out = String::new();
    out.push_str(
        "You are a code review committee member judging a candidate patch for a \
         reported software issue.\n\n",
    );
    out.push_str(&render_scoring_context(ctx));
    out.push_str("\n## Your task\n\n");

    if cfg.explanations_enabled {
        out.push_str(
            "Write the following explanations, in this exact order. Refer back to \
             your earlier explanations while writing the later ones.\n\n",
        );
        out.push_str(&format!(
            "1. {}: explain what the issue is about and what problem it may be causing.\n",
            EXPLANATION_HEADERS[0]
        ));
        out.push_str(&format!(
            "2. {}: explain how and why each relevant code span is relevant to the issue.\n",
            EXPLANATION_HEADERS[1]
        ));
        out.push_str(&format!(
            "3. {}: explain if and why the patch is modifying the correct part of the \
             code that is faulty.\n",
            EXPLANATION_HEADERS[2]
        ));
        out.push_str(&format!(
            "4. {}: explain if and how the patch is fixing the issue.\n",
            EXPLANATION_HEADERS[3]
        ));
        out.push_str(&format!(
            "5. {}: check whether the patch conflicts with the other relevant code \
             snippets.\n",
            EXPLANATION_HEADERS[4]
        ));
        out.push('\n');
        out.push_str("Then, based on your own explanations, score the patch.\n\n");
    } else {
        out.push_str("Score the patch.\n\n");
    }

    out.push_str(&format!(
        "Scoring rubric ({}): start from 10 and deduct for each violation.\n",
        cfg.rubric_version
    ));
    out.push_str(
        "- The patch modifies the wrong location in the code: serious mistake, \
         deduct 5 or more.\n\
         - The patch conflicts with the relevant code spans: deduct 3.\n\
         - The patch does not address the root cause of the issue: deduct 2.\n\
         - Style problems or other minor issues: deduct 1 each.\n\
         A score of 10 means the patch convincingly resolves the issue; 1 means it \
         cannot work.\n\n",
    );
    out.push_str(&format!(
        "End your reply with a single final line in exactly this format:\n\
         {SCORE_CONTRACT_PREFIX} <integer 1-10>\n"
    ));
    out
}

/// Best-effort extraction of the five explanation sections from a reply.
/// Missing sections come back empty.
pub fn extract_explanations(raw_response: &str) -> ExplanationSet {
    let lower = raw_response.to_lowercase();
    let mut positions: Vec<(usize, usize)> = Vec::new(); // (header idx, byte pos)
    for (i, header) in EXPLANATION_HEADERS.iter().enumerate() {
        if let Some(pos) = lower.find(&header.to_lowercase()) {
            positions.push((i, pos));
        }
    }
    positions.sort_by_key(|&(_, pos)| pos);

    let score_pos = lower.rfind("score:").unwrap_or(raw_response.len());
    let mut sections = [const { String::new() }; 5];
    for (slot, &(header_idx, start)) in positions.iter().enumerate() {
        let body_start = start + EXPLANATION_HEADERS[header_idx].len();
        let end = positions
            .get(slot + 1)
            .map(|&(_, next)| next)
            .unwrap_or(score_pos)
            .max(body_start);
        let body = raw_response[body_start..end]
            .trim_start_matches([':', ' '])
            .trim()
            .to_string();
        sections[header_idx] = body;
    }
    let [issue_expl, context_expl, location_expl, patch_expl, conflict_expl] = sections;
    ExplanationSet {
        issue_expl,
        context_expl,
        location_expl,
        patch_expl,
        conflict_expl,
    }
}
