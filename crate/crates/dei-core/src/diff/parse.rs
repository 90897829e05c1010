//! Unified-diff text parser.

use crate::error::DiffError;

use super::{FilePatch, Hunk, HunkLine, LineTag, DEV_NULL};

/// Parses unified-diff text into file patches.
///
/// Empty (or whitespace-only) input yields an empty list. Git noise lines
/// (`diff --git`, `index`, mode lines) are ignored. Hunk headers must be
/// consistent with their bodies: the count of context+remove lines must
/// equal the old length and context+add the new length.
pub fn parse_unified_diff(patch_text: &str) -> Result<Vec<FilePatch>, DiffError> {
    let lines: Vec<&str> = patch_text.lines().collect();
    let mut patches: Vec<FilePatch> = Vec::new();
    let mut idx = 0usize;

    while idx < lines.len() {
        let line = lines[idx];
        if let Some(old_raw) = line.strip_prefix("--- ") {
            let Some(new_line) = lines.get(idx + 1) else {
                return Err(DiffError::Malformed {
                    file: strip_prefix_path(old_raw),
                    hunk_index: 0,
                    detail: "missing +++ header after ---".into(),
                });
            };
            let Some(new_raw) = new_line.strip_prefix("+++ ") else {
                return Err(DiffError::Malformed {
                    file: strip_prefix_path(old_raw),
                    hunk_index: 0,
                    detail: format!("expected +++ header, found {new_line:?}"),
                });
            };
            let old_path = strip_prefix_path(old_raw);
            let new_path = strip_prefix_path(new_raw);
            idx += 2;
            let mut hunks = Vec::new();
            let mut cursor_floor = 0usize;
            while idx < lines.len() && lines[idx].starts_with("@@ -") {
                let (hunk, consumed) =
                    parse_hunk(&lines[idx..], &old_path, hunks.len(), cursor_floor)?;
                cursor_floor = hunk.old_cursor_start() + hunk.old_len;
                hunks.push(hunk);
                idx += consumed;
            }
            if hunks.is_empty() {
                return Err(DiffError::Malformed {
                    file: old_path,
                    hunk_index: 0,
                    detail: "file header with no hunks".into(),
                });
            }
            patches.push(FilePatch {
                old_path,
                new_path,
                hunks,
            });
        } else if line.starts_with("Binary files") || line.starts_with("GIT binary patch") {
            return Err(DiffError::Malformed {
                file: line.to_string(),
                hunk_index: 0,
                detail: "binary diffs are not supported".into(),
            });
        } else {
            // diff --git, index, mode lines, or other noise between files.
            idx += 1;
        }
    }

    if patches.is_empty() && !patch_text.trim().is_empty() {
        return Err(DiffError::Malformed {
            file: "<input>".into(),
            hunk_index: 0,
            detail: "no unified diff content found".into(),
        });
    }
    Ok(patches)
}

/// Strips git `a/`/`b/` prefixes and trailing tab-separated timestamps.
fn strip_prefix_path(raw: &str) -> String {
    let path = raw.split('\t').next().unwrap_or(raw).trim_end();
    if path == DEV_NULL {
        return path.to_string();
    }
    path.strip_prefix("a/")
        .or_else(|| path.strip_prefix("b/"))
        .unwrap_or(path)
        .to_string()
}

/// Parses one hunk starting at `lines[0]`; returns it plus the number of
/// input lines consumed. `cursor_floor` is the first old-file cursor
/// position this hunk may legally touch (non-overlap, ascending order).
fn parse_hunk(
    lines: &[&str],
    file: &str,
    hunk_index: usize,
    cursor_floor: usize,
) -> Result<(Hunk, usize), DiffError> {
    let malformed = |detail: String| DiffError::Malformed {
        file: file.to_string(),
        hunk_index,
        detail,
    };

    let header = lines[0];
    let (old_start, old_len, new_start, new_len) =
        parse_hunk_header(header).ok_or_else(|| malformed(format!("bad hunk header {header:?}")))?;

    if old_len > 0 && old_start == 0 {
        return Err(malformed("old_start 0 with non-zero old_len".into()));
    }
    if new_len > 0 && new_start == 0 {
        return Err(malformed("new_start 0 with non-zero new_len".into()));
    }

    let mut body: Vec<HunkLine> = Vec::new();
    let mut remaining_old = old_len;
    let mut remaining_new = new_len;
    let mut consumed = 1usize;

    while remaining_old > 0 || remaining_new > 0 {
        let Some(&raw) = lines.get(consumed) else {
            return Err(malformed(format!(
                "header declares -{old_len}/+{new_len} but body ends early \
                 ({remaining_old} old / {remaining_new} new lines missing)"
            )));
        };
        consumed += 1;
        if raw.starts_with('\\') {
            match body.last_mut() {
                Some(prev) => prev.no_newline = true,
                None => return Err(malformed("no-newline marker before any hunk line".into())),
            }
            continue;
        }
        let (tag, text) = match raw.chars().next() {
            Some(' ') => (LineTag::Context, &raw[1..]),
            Some('-') => (LineTag::Remove, &raw[1..]),
            Some('+') => (LineTag::Add, &raw[1..]),
            // Some tools strip the single space from an empty context line.
            None => (LineTag::Context, ""),
            Some(_) => {
                return Err(malformed(format!(
                    "header declares -{old_len}/+{new_len} but body line {raw:?} \
                     is not a hunk line"
                )))
            }
        };
        match tag {
            LineTag::Context => {
                if remaining_old == 0 || remaining_new == 0 {
                    return Err(malformed("more context lines than header declares".into()));
                }
                remaining_old -= 1;
                remaining_new -= 1;
            }
            LineTag::Remove => {
                if remaining_old == 0 {
                    return Err(malformed("more old-side lines than header declares".into()));
                }
                remaining_old -= 1;
            }
            LineTag::Add => {
                if remaining_new == 0 {
                    return Err(malformed("more new-side lines than header declares".into()));
                }
                remaining_new -= 1;
            }
        }
        body.push(HunkLine::new(tag, text));
    }

    // Trailing no-newline marker after the last counted line.
    if lines.get(consumed).is_some_and(|l| l.starts_with('\\')) {
        if let Some(prev) = body.last_mut() {
            prev.no_newline = true;
        }
        consumed += 1;
    }

    // A stray hunk line after the counts are satisfied means the header
    // understates the body.
    if let Some(&next) = lines.get(consumed) {
        let looks_like_body = matches!(next.chars().next(), Some(' ') | Some('+'))
            || (next.starts_with('-') && !next.starts_with("--- "));
        if looks_like_body && !next.starts_with("+++ ") {
            return Err(malformed(format!(
                "hunk body continues past declared -{old_len}/+{new_len} counts at {next:?}"
            )));
        }
    }

    let hunk = Hunk {
        old_start,
        old_len,
        new_start,
        new_len,
        lines: body,
    };
    if hunk.old_cursor_start() < cursor_floor {
        return Err(malformed(format!(
            "hunk overlaps or precedes the previous hunk (old_start {old_start})"
        )));
    }
    Ok((hunk, consumed))
}

/// Parses `@@ -OS[,OL] +NS[,NL] @@ ...`; omitted lengths default to 1.
fn parse_hunk_header(line: &str) -> Option<(usize, usize, usize, usize)> {
    let rest = line.strip_prefix("@@ -")?;
    let end = rest.find(" @@")?;
    let spec = &rest[..end];
    let (old_spec, new_spec) = spec.split_once(" +")?;
    let (old_start, old_len) = parse_range(old_spec)?;
    let (new_start, new_len) = parse_range(new_spec)?;
    Some((old_start, old_len, new_start, new_len))
}

fn parse_range(spec: &str) -> Option<(usize, usize)> {
    match spec.split_once(',') {
        Some((start, len)) => Some((start.parse().ok()?, len.parse().ok()?)),
        None => Some((spec.parse().ok()?, 1)),
    }
}
