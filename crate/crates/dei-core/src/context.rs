//! Scoring-context assembly: for each (instance, candidate) pair, the four
//! inputs the committee sees — issue text, relevant code spans, and the
//! before/after views of the candidate's changes — packed under a token
//! budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidatePatch, FileBundle, Instance};
use crate::diff::{self, BeforeAfterView};
use crate::error::ContextError;

/// An issue-relevant excerpt of repository code, as produced by an external
/// localization tool. Spans depend only on the issue, never on a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpan {
    pub file_path: String,
    pub start_line: u32,
    pub end_line: u32,
    pub code: String,
    #[serde(default)]
    pub origin: String,
}

impl CodeSpan {
    /// Line count of `code`, counting a trailing newline as a terminator
    /// rather than an extra line.
    pub fn code_line_count(&self) -> usize {
        let body = self.code.strip_suffix('\n').unwrap_or(&self.code);
        body.split('\n').count()
    }

    pub fn declared_line_count(&self) -> usize {
        (self.end_line - self.start_line) as usize + 1
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        if self.start_line > self.end_line || self.start_line == 0 {
            return Err(ContextError::SpanLineCount {
                file_path: self.file_path.clone(),
                start_line: self.start_line,
                end_line: self.end_line,
                declared: 0,
                actual: self.code_line_count(),
            });
        }
        let declared = self.declared_line_count();
        let actual = self.code_line_count();
        if declared != actual {
            return Err(ContextError::SpanLineCount {
                file_path: self.file_path.clone(),
                start_line: self.start_line,
                end_line: self.end_line,
                declared,
                actual,
            });
        }
        Ok(())
    }
}

/// Character-count token proxy. The default divisor of 4 approximates
/// typical code tokenization; it is configurable because the toolkit is
/// backend-agnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEstimator {
    pub chars_per_token: usize,
}

impl Default for TokenEstimator {
    fn default() -> Self {
        Self { chars_per_token: 4 }
    }
}

impl TokenEstimator {
    pub fn estimate(&self, text: &str) -> usize {
        text.chars().count().div_ceil(self.chars_per_token.max(1))
    }
}

/// The assembled four-part scoring input for one (instance, candidate) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringContext {
    pub issue_text: String,
    pub spans: Vec<CodeSpan>,
    pub views: Vec<BeforeAfterView>,
    pub token_budget: usize,
    pub truncation_note: Option<String>,
}

/// Knobs for context assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    /// Unchanged context lines kept around each changed region.
    pub margin: usize,
    /// Token budget for the rendered context.
    pub budget: usize,
    pub estimator: TokenEstimator,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            margin: 10,
            budget: 16_000,
            estimator: TokenEstimator::default(),
        }
    }
}

/// Parses a spans file: JSONL of
/// `{"instance_id", "spans": [{"file_path", "start_line", "end_line",
/// "code", "origin"?}, ...]}`. Per-instance span order follows the file.
pub fn parse_spans(
    text: &str,
    source_name: &str,
) -> Result<BTreeMap<String, Vec<CodeSpan>>, ContextError> {
    #[derive(Deserialize)]
    struct SpanLine {
        instance_id: String,
        spans: Vec<CodeSpan>,
    }

    let mut out: BTreeMap<String, Vec<CodeSpan>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SpanLine =
            serde_json::from_str(line).map_err(|e| ContextError::SpanFormat {
                source_name: source_name.to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        for span in &parsed.spans {
            span.validate()?;
        }
        out.entry(parsed.instance_id).or_default().extend(parsed.spans);
    }
    Ok(out)
}

/// Canonical rendering of a scoring context. Byte-identical for identical
/// inputs; also the text measured against the token budget.
pub fn render_scoring_context(ctx: &ScoringContext) -> String {
    let mut out = String::new();
    out.push_str("## Issue\n\n");
    out.push_str(ctx.issue_text.trim_end());
    out.push_str("\n\n## Relevant code spans\n\n");
    if ctx.spans.is_empty() {
        out.push_str("(none provided)\n");
    } else {
        for (i, span) in ctx.spans.iter().enumerate() {
            let origin = if span.origin.is_empty() {
                String::new()
            } else {
                format!(", via {}", span.origin)
            };
            out.push_str(&format!(
                "### Span {}: {} (lines {}-{}{origin})\n\n{}\n",
                i + 1,
                span.file_path,
                span.start_line,
                span.end_line,
                span.code.trim_end_matches('\n'),
            ));
        }
    }
    if let Some(note) = &ctx.truncation_note {
        out.push_str(&format!("(context truncated: {note})\n"));
    }
    out.push_str("\n## Code before the patch\n\n");
    if ctx.views.is_empty() {
        out.push_str("(no changes proposed)\n");
    } else {
        for view in &ctx.views {
            out.push_str(&format!("### {}\n\n{}\n", view.file_path, view.before));
        }
    }
    out.push_str("\n## Code after the patch\n\n");
    if ctx.views.is_empty() {
        out.push_str("(no changes proposed)\n");
    } else {
        for view in &ctx.views {
            out.push_str(&format!("### {}\n\n{}\n", view.file_path, view.after));
        }
    }
    out
}

/// Assembles the scoring context for one candidate.
///
/// When the rendering exceeds the budget, spans are dropped tail-first, then
/// view margins shrink toward zero. The issue text and the changed lines
/// themselves are never cut; if even margin zero cannot fit, the context is
/// returned over budget with an explanatory truncation note.
pub fn assemble_context(
    instance: &Instance,
    candidate: &CandidatePatch,
    spans: &[CodeSpan],
    bundle: &FileBundle,
    opts: &AssembleOptions,
) -> Result<ScoringContext, ContextError> {
    let issue_tokens = opts.estimator.estimate(&instance.issue_text);
    if issue_tokens > opts.budget {
        return Err(ContextError::BudgetTooSmall {
            budget: opts.budget,
            issue_tokens,
        });
    }

    let patches = diff::parse_unified_diff(&candidate.patch_text)?;
    let render_views = |margin: usize| -> Result<Vec<BeforeAfterView>, ContextError> {
        if patches.is_empty() {
            Ok(Vec::new())
        } else {
            Ok(diff::render_before_after(
                bundle,
                &instance.instance_id,
                &patches,
                margin,
            )?)
        }
    };

    let mut ctx = ScoringContext {
        issue_text: instance.issue_text.clone(),
        spans: spans.to_vec(),
        views: render_views(opts.margin)?,
        token_budget: opts.budget,
        truncation_note: None,
    };

    if opts.estimator.estimate(&render_scoring_context(&ctx)) <= opts.budget {
        return Ok(ctx);
    }

    // Over budget: drop spans from the tail first.
    let total_spans = ctx.spans.len();
    while !ctx.spans.is_empty() {
        ctx.spans.pop();
        ctx.truncation_note = Some(format!(
            "dropped {} of {} spans (tail first) to fit the token budget",
            total_spans - ctx.spans.len(),
            total_spans
        ));
        if opts.estimator.estimate(&render_scoring_context(&ctx)) <= opts.budget {
            return Ok(ctx);
        }
    }

    // Then shrink view margins.
    let mut margin = opts.margin;
    while margin > 0 {
        margin -= 1;
        ctx.views = render_views(margin)?;
        ctx.truncation_note = Some(format!(
            "dropped all {total_spans} spans and reduced view margin from {} to {margin} \
             to fit the token budget",
            opts.margin
        ));
        if opts.estimator.estimate(&render_scoring_context(&ctx)) <= opts.budget {
            return Ok(ctx);
        }
    }

    ctx.truncation_note = Some(format!(
        "context still exceeds the {}-token budget after dropping all spans and margins; \
         issue text and changed lines are kept in full",
        opts.budget
    ));
    Ok(ctx)
}
