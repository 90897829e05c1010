//! Unified diff engine: parse patches, apply them to bundled file contents,
//! and render separate line-numbered before/after views.
//!
//! The parser is forgiving about tool-specific noise (`diff --git`, `index`,
//! mode lines) but strict about hunk arithmetic: header lengths must match
//! the body, and hunks must be non-overlapping and ordered.

mod apply;
mod parse;
mod render;
pub mod testkit;

pub use apply::{apply_patches, apply_to_content, split_lines, FileLines};
pub use parse::parse_unified_diff;
pub use render::{render_before_after, BeforeAfterView, ELLIPSIS_MARKER};

use serde::{Deserialize, Serialize};

pub const DEV_NULL: &str = "/dev/null";

/// Kind of a hunk body line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineTag {
    Context,
    Remove,
    Add,
}

/// One line of a hunk body.
///
/// `no_newline` records a trailing `\ No newline at end of file` marker: the
/// line has no terminating newline in whichever file side contains it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkLine {
    pub tag: LineTag,
    pub text: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub no_newline: bool,
}

impl HunkLine {
    pub fn new(tag: LineTag, text: impl Into<String>) -> Self {
        Self {
            tag,
            text: text.into(),
            no_newline: false,
        }
    }

    pub fn in_old(&self) -> bool {
        matches!(self.tag, LineTag::Context | LineTag::Remove)
    }

    pub fn in_new(&self) -> bool {
        matches!(self.tag, LineTag::Context | LineTag::Add)
    }
}

/// One `@@`-delimited change region.
///
/// `old_start`/`new_start` are 1-based; a side with length 0 uses the
/// "insert after line N" convention (0 meaning the start of the file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    /// 0-based index of the first old-file line affected (or, for pure
    /// insertions, of the line before which new text lands).
    pub fn old_cursor_start(&self) -> usize {
        if self.old_len == 0 {
            self.old_start
        } else {
            self.old_start - 1
        }
    }

    pub fn old_side_count(&self) -> usize {
        self.lines.iter().filter(|l| l.in_old()).count()
    }

    pub fn new_side_count(&self) -> usize {
        self.lines.iter().filter(|l| l.in_new()).count()
    }
}

/// All hunks for one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilePatch {
    pub old_path: String,
    pub new_path: String,
    pub hunks: Vec<Hunk>,
}

impl FilePatch {
    pub fn is_new_file(&self) -> bool {
        self.old_path == DEV_NULL
    }

    pub fn is_deleted_file(&self) -> bool {
        self.new_path == DEV_NULL
    }

    /// Path of the file in the patched tree (old path for deletions).
    pub fn target_path(&self) -> &str {
        if self.is_deleted_file() {
            &self.old_path
        } else {
            &self.new_path
        }
    }

    /// Path the original content is read from (new path for added files).
    pub fn source_path(&self) -> &str {
        if self.is_new_file() {
            &self.new_path
        } else {
            &self.old_path
        }
    }

    /// The exact inverse patch: applying it to patched content restores the
    /// original.
    pub fn reversed(&self) -> FilePatch {
        FilePatch {
            old_path: self.new_path.clone(),
            new_path: self.old_path.clone(),
            hunks: self
                .hunks
                .iter()
                .map(|h| Hunk {
                    old_start: h.new_start,
                    old_len: h.new_len,
                    new_start: h.old_start,
                    new_len: h.old_len,
                    lines: h
                        .lines
                        .iter()
                        .map(|l| HunkLine {
                            tag: match l.tag {
                                LineTag::Context => LineTag::Context,
                                LineTag::Remove => LineTag::Add,
                                LineTag::Add => LineTag::Remove,
                            },
                            text: l.text.clone(),
                            no_newline: l.no_newline,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Serializes to normalized unified-diff text (`a/`/`b/` path prefixes,
    /// explicit lengths in hunk headers).
    pub fn to_unified(&self) -> String {
        let mut out = String::new();
        let old = if self.old_path == DEV_NULL {
            DEV_NULL.to_string()
        } else {
            format!("a/{}", self.old_path)
        };
        let new = if self.new_path == DEV_NULL {
            DEV_NULL.to_string()
        } else {
            format!("b/{}", self.new_path)
        };
        out.push_str(&format!("--- {old}\n+++ {new}\n"));
        for hunk in &self.hunks {
            out.push_str(&format!(
                "@@ -{},{} +{},{} @@\n",
                hunk.old_start, hunk.old_len, hunk.new_start, hunk.new_len
            ));
            for line in &hunk.lines {
                let prefix = match line.tag {
                    LineTag::Context => ' ',
                    LineTag::Remove => '-',
                    LineTag::Add => '+',
                };
                out.push(prefix);
                out.push_str(&line.text);
                out.push('\n');
                if line.no_newline {
                    out.push_str("\\ No newline at end of file\n");
                }
            }
        }
        out
    }
}

/// Serializes a whole patch set.
pub fn serialize_patches(patches: &[FilePatch]) -> String {
    patches.iter().map(FilePatch::to_unified).collect()
}

/// Reverses every file patch in a set.
pub fn reverse_patches(patches: &[FilePatch]) -> Vec<FilePatch> {
    patches.iter().map(FilePatch::reversed).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversed_swaps_sides() {
        let patch = FilePatch {
            old_path: "f.py".into(),
            new_path: "f.py".into(),
            hunks: vec![Hunk {
                old_start: 1,
                old_len: 2,
                new_start: 1,
                new_len: 2,
                lines: vec![
                    HunkLine::new(LineTag::Context, "a"),
                    HunkLine::new(LineTag::Remove, "b"),
                    HunkLine::new(LineTag::Add, "c"),
                ],
            }],
        };
        let rev = patch.reversed();
        assert_eq!(rev.hunks[0].lines[1].tag, LineTag::Add);
        assert_eq!(rev.hunks[0].lines[2].tag, LineTag::Remove);
        assert_eq!(patch.reversed().reversed(), patch);
    }
}
