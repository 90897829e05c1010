//! Patch application with exact context matching.
//!
//! Context and remove lines must match the bundled content at the positions
//! the hunk headers state, after trailing-whitespace normalization. There is
//! no fuzzy offset search: candidate diffs are generated against the same
//! base snapshot, so an offset mismatch is a corpus error, not noise.

use std::collections::BTreeMap;

use crate::corpus::FileBundle;
use crate::error::DiffError;

use super::{FilePatch, LineTag};

/// File content split into lines plus whether the content ends in a newline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileLines {
    pub lines: Vec<String>,
    pub trailing_newline: bool,
}

impl FileLines {
    pub fn join(&self) -> String {
        if self.lines.is_empty() {
            return String::new();
        }
        let mut out = self.lines.join("\n");
        if self.trailing_newline {
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

/// Splits content into lines. An empty string is an empty file; a missing
/// final newline is recorded so application can preserve it.
pub fn split_lines(content: &str) -> FileLines {
    if content.is_empty() {
        return FileLines {
            lines: Vec::new(),
            trailing_newline: true,
        };
    }
    let trailing_newline = content.ends_with('\n');
    let body = if trailing_newline {
        &content[..content.len() - 1]
    } else {
        content
    };
    FileLines {
        lines: body.split('\n').map(str::to_string).collect(),
        trailing_newline,
    }
}

/// Trailing-whitespace normalization used for context matching.
fn norm(line: &str) -> &str {
    line.trim_end()
}

/// Where the most recently emitted output line came from, for trailing
/// newline bookkeeping.
enum LastEmitted {
    None,
    SourceCopy,
    HunkLine { no_newline: bool },
}

/// Applies one file patch to `old_content`.
pub fn apply_to_content(old_content: &str, patch: &FilePatch) -> Result<String, DiffError> {
    let src = split_lines(old_content);
    let mut out: Vec<String> = Vec::new();
    let mut cursor = 0usize;
    let mut last = LastEmitted::None;

    let conflict = |hunk_index: usize, line: usize, detail: String| DiffError::ApplyConflict {
        file: patch.source_path().to_string(),
        hunk_index,
        line,
        detail,
    };

    for (hunk_index, hunk) in patch.hunks.iter().enumerate() {
        let start = hunk.old_cursor_start();
        if start < cursor {
            return Err(conflict(
                hunk_index,
                start + 1,
                "hunk overlaps previously applied hunk".into(),
            ));
        }
        if start > src.len() {
            return Err(conflict(
                hunk_index,
                src.len() + 1,
                format!(
                    "hunk starts at line {} but file has {} lines",
                    hunk.old_start,
                    src.len()
                ),
            ));
        }
        if cursor < start {
            out.extend_from_slice(&src.lines[cursor..start]);
            cursor = start;
            last = LastEmitted::SourceCopy;
        }
        for line in &hunk.lines {
            match line.tag {
                LineTag::Context | LineTag::Remove => {
                    if cursor >= src.len() {
                        return Err(conflict(
                            hunk_index,
                            cursor + 1,
                            format!("file ends before expected line {:?}", line.text),
                        ));
                    }
                    if norm(&src.lines[cursor]) != norm(&line.text) {
                        return Err(conflict(
                            hunk_index,
                            cursor + 1,
                            format!(
                                "expected {:?}, found {:?}",
                                line.text, src.lines[cursor]
                            ),
                        ));
                    }
                    if line.tag == LineTag::Context {
                        // Keep the original text: normalization only affects
                        // matching, never content.
                        out.push(src.lines[cursor].clone());
                        last = LastEmitted::HunkLine {
                            no_newline: line.no_newline,
                        };
                    }
                    cursor += 1;
                }
                LineTag::Add => {
                    out.push(line.text.clone());
                    last = LastEmitted::HunkLine {
                        no_newline: line.no_newline,
                    };
                }
            }
        }
    }

    let trailing_newline = if cursor < src.len() {
        out.extend_from_slice(&src.lines[cursor..]);
        src.trailing_newline
    } else {
        match last {
            LastEmitted::HunkLine { no_newline } => !no_newline,
            LastEmitted::SourceCopy => true,
            LastEmitted::None => true,
        }
    };

    Ok(FileLines {
        lines: out,
        trailing_newline,
    }
    .join())
}

/// Applies a candidate's file patches to the bundled content for one
/// instance. Returns new content keyed by target path; the bundle itself is
/// never modified. Deleted files map to empty content.
pub fn apply_patches(
    bundle: &FileBundle,
    instance_id: &str,
    patches: &[FilePatch],
) -> Result<BTreeMap<String, String>, DiffError> {
    let mut result: BTreeMap<String, String> = BTreeMap::new();
    for patch in patches {
        let old_content: String = if patch.is_new_file() {
            String::new()
        } else {
            // A later patch may touch a file an earlier one produced.
            match result.get(&patch.old_path) {
                Some(content) => content.clone(),
                None => bundle
                    .get(instance_id, &patch.old_path)
                    .ok_or_else(|| DiffError::MissingFile {
                        instance_id: instance_id.to_string(),
                        file: patch.old_path.clone(),
                    })?
                    .to_string(),
            }
        };
        let new_content = apply_to_content(&old_content, patch)?;
        result.insert(patch.target_path().to_string(), new_content);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::parse_unified_diff;

    fn bundle_with(instance: &str, path: &str, content: &str) -> FileBundle {
        let mut bundle = FileBundle::default();
        bundle.insert(instance, path, content.to_string());
        bundle
    }

    #[test]
    fn empty_patch_list_yields_empty_map() {
        let bundle = bundle_with("x", "f", "a\n");
        let out = apply_patches(&bundle, "x", &[]).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn deleting_middle_line() {
        let diff = "--- a/f\n+++ b/f\n@@ -1,3 +1,2 @@\n one\n-two\n three\n";
        let patches = parse_unified_diff(diff).unwrap();
        let bundle = bundle_with("x", "f", "one\ntwo\nthree\n");
        let out = apply_patches(&bundle, "x", &patches).unwrap();
        assert_eq!(out["f"], "one\nthree\n");
    }

    #[test]
    fn context_mismatch_reports_position() {
        let diff = "--- a/f\n+++ b/f\n@@ -1,2 +1,2 @@\n one\n-TWO\n+2\n";
        let patches = parse_unified_diff(diff).unwrap();
        let bundle = bundle_with("x", "f", "one\ntwo\n");
        let err = apply_patches(&bundle, "x", &patches).unwrap_err();
        match err {
            DiffError::ApplyConflict { file, hunk_index, line, .. } => {
                assert_eq!(file, "f");
                assert_eq!(hunk_index, 0);
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trailing_whitespace_normalized_for_matching() {
        let diff = "--- a/f\n+++ b/f\n@@ -1,2 +1,2 @@\n one\n-two\n+2\n";
        let patches = parse_unified_diff(diff).unwrap();
        // Bundle content has trailing spaces the diff lacks.
        let bundle = bundle_with("x", "f", "one  \ntwo\t\n");
        let out = apply_patches(&bundle, "x", &patches).unwrap();
        // Context keeps the original bytes.
        assert_eq!(out["f"], "one  \n2\n");
    }

    #[test]
    fn new_file_and_deleted_file() {
        let diff = "\
--- /dev/null
+++ b/new.py
@@ -0,0 +1,2 @@
+a
+b
--- a/gone.py
+++ /dev/null
@@ -1,1 +0,0 @@
-z
";
        let patches = parse_unified_diff(diff).unwrap();
        let bundle = bundle_with("x", "gone.py", "z\n");
        let out = apply_patches(&bundle, "x", &patches).unwrap();
        assert_eq!(out["new.py"], "a\nb\n");
        assert_eq!(out["gone.py"], "");
    }

    #[test]
    fn missing_file_is_reported() {
        let diff = "--- a/f\n+++ b/f\n@@ -1 +1 @@\n-x\n+y\n";
        let patches = parse_unified_diff(diff).unwrap();
        let bundle = FileBundle::default();
        let err = apply_patches(&bundle, "x", &patches).unwrap_err();
        assert!(matches!(err, DiffError::MissingFile { .. }));
    }

    #[test]
    fn insertion_at_start_and_end() {
        let diff = "--- a/f\n+++ b/f\n@@ -0,0 +1,1 @@\n+head\n@@ -2,0 +4,1 @@\n+tail\n";
        let patches = parse_unified_diff(diff).unwrap();
        let bundle = bundle_with("x", "f", "a\nb\n");
        let out = apply_patches(&bundle, "x", &patches).unwrap();
        assert_eq!(out["f"], "head\na\nb\ntail\n");
    }

    #[test]
    fn no_newline_marker_preserved_on_apply() {
        let diff = "--- a/f\n+++ b/f\n@@ -1 +1 @@\n-x\n+y\n\\ No newline at end of file\n";
        let patches = parse_unified_diff(diff).unwrap();
        let bundle = bundle_with("x", "f", "x\n");
        let out = apply_patches(&bundle, "x", &patches).unwrap();
        assert_eq!(out["f"], "y");
    }

    #[test]
    fn reverse_restores_no_trailing_newline_file() {
        let original = "x";
        let diff = "\
--- a/f
+++ b/f
@@ -1 +1 @@
-x
\\ No newline at end of file
+y
";
        let patches = parse_unified_diff(diff).unwrap();
        let bundle = bundle_with("x", "f", original);
        let out = apply_patches(&bundle, "x", &patches).unwrap();
        assert_eq!(out["f"], "y\n");

        let mut patched = FileBundle::default();
        patched.insert("x", "f", out["f"].clone());
        let reversed = crate::diff::reverse_patches(&patches);
        let back = apply_patches(&patched, "x", &reversed).unwrap();
        assert_eq!(back["f"], original);
    }
}
