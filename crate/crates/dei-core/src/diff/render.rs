//! Line-numbered before/after views of patched regions.
//!
//! The patch format itself alternates between old and new text, which is
//! hard to read; these views show each changed region twice — pre-patch and
//! post-patch — with absolute line numbers and a configurable margin of
//! unchanged context. Disjoint regions are separated by an ellipsis marker.

use serde::{Deserialize, Serialize};

use crate::corpus::FileBundle;
use crate::error::DiffError;

use super::apply::{apply_patches, split_lines};
use super::{FilePatch, Hunk, LineTag};

/// Separator line between disjoint rendered regions.
pub const ELLIPSIS_MARKER: &str = "...";

/// Pre- and post-patch renderings of one file's changed regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeforeAfterView {
    pub file_path: String,
    pub before: String,
    pub after: String,
    pub context_margin: usize,
}

/// The changed extent of a hunk on one side: either a span of modified
/// lines, or a pure insertion/deletion gap after a given line (0 = start of
/// file).
enum Extent {
    Changed { lo: usize, hi: usize },
    Gap { after: usize },
}

fn side_extent(hunk: &Hunk, old_side: bool) -> Extent {
    let (start, len) = if old_side {
        (hunk.old_start, hunk.old_len)
    } else {
        (hunk.new_start, hunk.new_len)
    };
    let mut pos = if len == 0 { start + 1 } else { start };
    let mut lo = None;
    let mut hi = None;
    let mut gap_after = None;
    for line in &hunk.lines {
        let on_this_side = if old_side { line.in_old() } else { line.in_new() };
        let changed = match line.tag {
            LineTag::Context => false,
            LineTag::Remove => old_side,
            LineTag::Add => !old_side,
        };
        if on_this_side {
            if changed {
                lo.get_or_insert(pos);
                hi = Some(pos);
            }
            pos += 1;
        } else if changed && gap_after.is_none() {
            // A line changed on the opposite side marks an insertion point
            // relative to this side.
            gap_after = Some(pos - 1);
        }
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) => Extent::Changed { lo, hi },
        _ => Extent::Gap {
            after: gap_after.unwrap_or(if len == 0 { start } else { start.saturating_sub(1) }),
        },
    }
}

/// 1-based inclusive region for an extent with `margin` context lines,
/// clamped to `[1, file_len]`. Empty regions return `None`.
fn extent_region(extent: &Extent, margin: usize, file_len: usize) -> Option<(usize, usize)> {
    let (lo, hi) = match *extent {
        Extent::Changed { lo, hi } => (lo.saturating_sub(margin).max(1), hi + margin),
        Extent::Gap { after } => {
            if margin == 0 {
                return None;
            }
            ((after + 1).saturating_sub(margin).max(1), after + margin)
        }
    };
    let hi = hi.min(file_len);
    if file_len == 0 || lo > hi {
        None
    } else {
        Some((lo, hi))
    }
}

fn merge_regions(mut regions: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    regions.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (lo, hi) in regions {
        match merged.last_mut() {
            Some((_, prev_hi)) if lo <= *prev_hi + 1 => *prev_hi = (*prev_hi).max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn render_regions(lines: &[String], regions: &[(usize, usize)]) -> String {
    let width = lines.len().to_string().len().max(3);
    let mut out = String::new();
    for (i, &(lo, hi)) in regions.iter().enumerate() {
        if i > 0 {
            out.push_str(ELLIPSIS_MARKER);
            out.push('\n');
        }
        for num in lo..=hi {
            out.push_str(&format!("{num:>width$} | {}\n", lines[num - 1]));
        }
    }
    out
}

fn render_full(lines: &[String]) -> String {
    if lines.is_empty() {
        return String::new();
    }
    render_regions(lines, &[(1, lines.len())])
}

/// Renders one view per touched file.
///
/// Both sides show every changed region plus `margin` lines of surrounding
/// context with absolute line numbers. Wholesale added or deleted files get
/// an explicit `(new file)` / `(file deleted)` header and full content on
/// the side that exists.
pub fn render_before_after(
    bundle: &FileBundle,
    instance_id: &str,
    patches: &[FilePatch],
    margin: usize,
) -> Result<Vec<BeforeAfterView>, DiffError> {
    let applied = apply_patches(bundle, instance_id, patches)?;
    let mut views = Vec::with_capacity(patches.len());

    for patch in patches {
        let new_content = applied
            .get(patch.target_path())
            .map(String::as_str)
            .unwrap_or("");

        if patch.is_new_file() {
            let new_lines = split_lines(new_content);
            views.push(BeforeAfterView {
                file_path: patch.target_path().to_string(),
                before: "(new file)\n".to_string(),
                after: render_full(&new_lines.lines),
                context_margin: margin,
            });
            continue;
        }
        if patch.is_deleted_file() {
            let old_lines =
                split_lines(bundle.get(instance_id, &patch.old_path).unwrap_or_default());
            views.push(BeforeAfterView {
                file_path: patch.target_path().to_string(),
                before: render_full(&old_lines.lines),
                after: "(file deleted)\n".to_string(),
                context_margin: margin,
            });
            continue;
        }

        let old_content =
            bundle
                .get(instance_id, &patch.old_path)
                .ok_or_else(|| DiffError::MissingFile {
                    instance_id: instance_id.to_string(),
                    file: patch.old_path.clone(),
                })?;
        let old_lines = split_lines(old_content);
        let new_lines = split_lines(new_content);

        let before_regions = merge_regions(
            patch
                .hunks
                .iter()
                .filter_map(|h| extent_region(&side_extent(h, true), margin, old_lines.len()))
                .collect(),
        );
        let after_regions = merge_regions(
            patch
                .hunks
                .iter()
                .filter_map(|h| extent_region(&side_extent(h, false), margin, new_lines.len()))
                .collect(),
        );

        views.push(BeforeAfterView {
            file_path: patch.target_path().to_string(),
            before: render_regions(&old_lines.lines, &before_regions),
            after: render_regions(&new_lines.lines, &after_regions),
            context_margin: margin,
        });
    }
    Ok(views)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::parse_unified_diff;

    fn numbered_file(n: usize) -> String {
        (1..=n).map(|i| format!("line {i}\n")).collect()
    }

    fn bundle_with(content: &str) -> FileBundle {
        let mut bundle = FileBundle::default();
        bundle.insert("x", "f", content.to_string());
        bundle
    }

    /// A diff replacing a single line, with `ctx` context lines around it.
    fn replace_line_diff(file_len: usize, target: usize, ctx: usize) -> String {
        let lo = target.saturating_sub(ctx).max(1);
        let hi = (target + ctx).min(file_len);
        let len = hi - lo + 1;
        let mut body = String::new();
        for i in lo..=hi {
            if i == target {
                body.push_str(&format!("-line {i}\n+LINE {i}\n"));
            } else {
                body.push_str(&format!(" line {i}\n"));
            }
        }
        format!("--- a/f\n+++ b/f\n@@ -{lo},{len} +{lo},{len} @@\n{body}")
    }

    #[test]
    fn margin_zero_shows_only_changed_lines() {
        let bundle = bundle_with(&numbered_file(20));
        let patches = parse_unified_diff(&replace_line_diff(20, 10, 3)).unwrap();
        let views = render_before_after(&bundle, "x", &patches, 0).unwrap();
        assert_eq!(views[0].before, " 10 | line 10\n");
        assert_eq!(views[0].after, " 10 | LINE 10\n");
    }

    #[test]
    fn margin_three_spans_seven_to_thirteen() {
        let bundle = bundle_with(&numbered_file(100));
        let patches = parse_unified_diff(&replace_line_diff(100, 10, 3)).unwrap();
        let views = render_before_after(&bundle, "x", &patches, 3).unwrap();
        let before_lines: Vec<&str> = views[0].before.lines().collect();
        assert_eq!(before_lines.len(), 7);
        assert!(before_lines[0].starts_with("  7 |"));
        assert!(before_lines[6].starts_with(" 13 |"));
    }

    #[test]
    fn distant_hunks_are_separated_by_ellipsis() {
        let bundle = bundle_with(&numbered_file(100));
        let diff = "\
--- a/f
+++ b/f
@@ -10,1 +10,1 @@
-line 10
+LINE 10
@@ -60,1 +60,1 @@
-line 60
+LINE 60
";
        let patches = parse_unified_diff(diff).unwrap();
        let views = render_before_after(&bundle, "x", &patches, 3).unwrap();
        let before = &views[0].before;
        assert!(before.contains(ELLIPSIS_MARKER));
        // Regions are [7, 13] and [57, 63].
        let lines: Vec<&str> = before.lines().collect();
        assert_eq!(lines.len(), 15);
        assert!(lines[0].starts_with("  7 |"));
        assert!(lines[7].trim() == ELLIPSIS_MARKER);
        assert!(lines[8].starts_with(" 57 |"));
        assert!(lines[14].starts_with(" 63 |"));
    }

    #[test]
    fn adjacent_regions_merge() {
        let bundle = bundle_with(&numbered_file(30));
        let diff = "\
--- a/f
+++ b/f
@@ -10,1 +10,1 @@
-line 10
+LINE 10
@@ -12,1 +12,1 @@
-line 12
+LINE 12
";
        let patches = parse_unified_diff(diff).unwrap();
        let views = render_before_after(&bundle, "x", &patches, 3).unwrap();
        assert!(!views[0].before.contains(ELLIPSIS_MARKER));
    }

    #[test]
    fn new_and_deleted_file_headers() {
        let mut bundle = FileBundle::default();
        bundle.insert("x", "gone.py", "z\n".to_string());
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
        let views = render_before_after(&bundle, "x", &patches, 5).unwrap();
        assert_eq!(views[0].before, "(new file)\n");
        assert!(views[0].after.contains("  1 | a"));
        assert!(views[1].before.contains("  1 | z"));
        assert_eq!(views[1].after, "(file deleted)\n");
    }

    #[test]
    fn before_side_ignores_added_text() {
        let bundle = bundle_with(&numbered_file(20));
        let diff_a = "--- a/f\n+++ b/f\n@@ -10,1 +10,1 @@\n-line 10\n+AAA\n";
        let diff_b = "--- a/f\n+++ b/f\n@@ -10,1 +10,1 @@\n-line 10\n+BBB\n";
        let views_a = render_before_after(
            &bundle,
            "x",
            &parse_unified_diff(diff_a).unwrap(),
            4,
        )
        .unwrap();
        let views_b = render_before_after(
            &bundle,
            "x",
            &parse_unified_diff(diff_b).unwrap(),
            4,
        )
        .unwrap();
        assert_eq!(views_a[0].before, views_b[0].before);
        assert_ne!(views_a[0].after, views_b[0].after);
    }

    #[test]
    fn pure_insertion_with_margin_shows_surroundings() {
        let bundle = bundle_with(&numbered_file(10));
        let diff = "--- a/f\n+++ b/f\n@@ -5,0 +6,1 @@\n+inserted\n";
        let patches = parse_unified_diff(diff).unwrap();
        let views = render_before_after(&bundle, "x", &patches, 2).unwrap();
        // Before side: lines around the insertion point (4..7).
        let lines: Vec<&str> = views[0].before.lines().collect();
        assert!(lines[0].starts_with("  4 |"));
        assert!(lines.last().unwrap().starts_with("  7 |"));
        // After side contains the inserted line.
        assert!(views[0].after.contains("| inserted"));

        // Margin zero: nothing to show on the before side.
        let views0 = render_before_after(&bundle, "x", &patches, 0).unwrap();
        assert_eq!(views0[0].before, "");
        assert_eq!(views0[0].after, "  6 | inserted\n");
    }
}
