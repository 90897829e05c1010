//! Test support: random edit scripts, an independent diff builder, and
//! splice oracles for checking patch application.
//!
//! The edit-script oracle produces expected output by construction (each
//! edit is applied directly to the line list), so it never shares code with
//! the hunk-based application path it checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{FilePatch, Hunk, LineTag};

/// One aligned edit chunk: `old_lines` from the original are replaced by
/// `new_lines`. Unchanged chunks carry the same single line on both sides.
#[derive(Debug, Clone)]
pub struct EditChunk {
    pub old_lines: Vec<String>,
    pub new_lines: Vec<String>,
    pub changed: bool,
}

/// A full edit script over one file.
#[derive(Debug, Clone)]
pub struct EditScript {
    pub chunks: Vec<EditChunk>,
}

impl EditScript {
    /// The original file content implied by the script.
    pub fn original(&self) -> String {
        let mut out = String::new();
        for chunk in &self.chunks {
            for line in &chunk.old_lines {
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    /// Oracle: the edited content, produced directly from the script.
    pub fn edited(&self) -> String {
        let mut out = String::new();
        for chunk in &self.chunks {
            for line in &chunk.new_lines {
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    pub fn has_changes(&self) -> bool {
        self.chunks.iter().any(|c| c.changed)
    }
}

/// Generates a random file of `lines` lines with mildly varied content.
pub fn random_lines(rng: &mut ChaCha8Rng, lines: usize) -> Vec<String> {
    (0..lines)
        .map(|i| {
            let word = ["alpha", "beta", "gamma", "delta", "omega"][rng.random_range(0..5)];
            format!("line {i} {word} {}", rng.random_range(0..1000))
        })
        .collect()
}

/// Generates a random edit script over `original`: keeps, deletions,
/// replacements (possibly multi-line) and insertions.
pub fn random_edit_script(rng: &mut ChaCha8Rng, original: &[String]) -> EditScript {
    let mut chunks = Vec::new();
    for line in original {
        // Occasional standalone insertion before this line.
        if rng.random_bool(0.06) {
            let count = rng.random_range(1..=3);
            chunks.push(EditChunk {
                old_lines: vec![],
                new_lines: (0..count)
                    .map(|j| format!("inserted {} {j}", rng.random_range(0..1000)))
                    .collect(),
                changed: true,
            });
        }
        let roll: f64 = rng.random();
        if roll < 0.08 {
            chunks.push(EditChunk {
                old_lines: vec![line.clone()],
                new_lines: vec![],
                changed: true,
            });
        } else if roll < 0.18 {
            let count = rng.random_range(1..=2);
            chunks.push(EditChunk {
                old_lines: vec![line.clone()],
                new_lines: (0..count)
                    .map(|j| format!("replaced {} {j}", rng.random_range(0..1000)))
                    .collect(),
                changed: true,
            });
        } else {
            chunks.push(EditChunk {
                old_lines: vec![line.clone()],
                new_lines: vec![line.clone()],
                changed: false,
            });
        }
    }
    if rng.random_bool(0.1) {
        chunks.push(EditChunk {
            old_lines: vec![],
            new_lines: vec![format!("appended {}", rng.random_range(0..1000))],
            changed: true,
        });
    }
    EditScript { chunks }
}

/// Builds a unified diff realizing an edit script, independently of the
/// parser and applier under test. Changed chunks closer than `2 * context`
/// unchanged lines share a hunk, mirroring standard diff output.
pub fn script_to_diff(script: &EditScript, path: &str, context: usize) -> String {
    let chunks = &script.chunks;
    // Indices of changed chunks.
    let changed: Vec<usize> = chunks
        .iter()
        .enumerate()
        .filter(|(_, c)| c.changed)
        .map(|(i, _)| i)
        .collect();
    if changed.is_empty() {
        return String::new();
    }

    // Group changed chunks whose context windows touch. The gap between two
    // changed chunks is the number of unchanged old lines between them.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &ci in &changed {
        match groups.last_mut() {
            Some((_, hi)) => {
                let gap: usize = chunks[*hi + 1..ci].iter().map(|c| c.old_lines.len()).sum();
                if gap <= 2 * context {
                    *hi = ci;
                } else {
                    groups.push((ci, ci));
                }
            }
            None => groups.push((ci, ci)),
        }
    }

    // Old/new line offsets before each chunk.
    let mut old_before = vec![0usize; chunks.len() + 1];
    let mut new_before = vec![0usize; chunks.len() + 1];
    for (i, chunk) in chunks.iter().enumerate() {
        old_before[i + 1] = old_before[i] + chunk.old_lines.len();
        new_before[i + 1] = new_before[i] + chunk.new_lines.len();
    }

    let mut out = format!("--- a/{path}\n+++ b/{path}\n");
    for &(lo_chunk, hi_chunk) in &groups {
        // Extend with up to `context` unchanged lines (1 old line per
        // unchanged chunk) on each side.
        let mut start = lo_chunk;
        let mut taken = 0usize;
        while start > 0 && !chunks[start - 1].changed && taken < context {
            start -= 1;
            taken += chunks[start].old_lines.len();
        }
        let mut end = hi_chunk;
        taken = 0;
        while end + 1 < chunks.len() && !chunks[end + 1].changed && taken < context {
            end += 1;
            taken += chunks[end].old_lines.len();
        }

        let old_len: usize = chunks[start..=end].iter().map(|c| c.old_lines.len()).sum();
        let new_len: usize = chunks[start..=end].iter().map(|c| c.new_lines.len()).sum();
        let old_start = if old_len == 0 {
            old_before[start]
        } else {
            old_before[start] + 1
        };
        let new_start = if new_len == 0 {
            new_before[start]
        } else {
            new_before[start] + 1
        };

        out.push_str(&format!(
            "@@ -{old_start},{old_len} +{new_start},{new_len} @@\n"
        ));
        for chunk in &chunks[start..=end] {
            if chunk.changed {
                for line in &chunk.old_lines {
                    out.push('-');
                    out.push_str(line);
                    out.push('\n');
                }
                for line in &chunk.new_lines {
                    out.push('+');
                    out.push_str(line);
                    out.push('\n');
                }
            } else {
                for line in &chunk.old_lines {
                    out.push(' ');
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Splice oracle: applies hunks by direct line splicing at the positions the
/// headers state, without context verification.
pub fn splice_apply(old_content: &str, patch: &FilePatch) -> String {
    let src: Vec<&str> = if old_content.is_empty() {
        Vec::new()
    } else {
        old_content.trim_end_matches('\n').split('\n').collect()
    };
    let mut out: Vec<String> = Vec::new();
    let mut cursor = 0usize;
    for hunk in &patch.hunks {
        let start = hunk.old_cursor_start();
        out.extend(src[cursor..start].iter().map(|s| s.to_string()));
        cursor = start + hunk.old_len;
        out.extend(new_side_lines(hunk));
    }
    out.extend(src[cursor..].iter().map(|s| s.to_string()));
    if out.is_empty() {
        String::new()
    } else {
        let mut joined = out.join("\n");
        joined.push('\n');
        joined
    }
}

fn new_side_lines(hunk: &Hunk) -> Vec<String> {
    hunk.lines
        .iter()
        .filter(|l| l.tag != LineTag::Remove)
        .map(|l| l.text.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use rand_chacha::rand_core::SeedableRng;

    use super::*;
    use crate::corpus::FileBundle;
    use crate::diff::{apply_patches, parse_unified_diff};

    #[test]
    fn script_oracle_matches_engine_on_fixed_case() {
        let script = EditScript {
            chunks: vec![
                EditChunk {
                    old_lines: vec!["a".into()],
                    new_lines: vec!["a".into()],
                    changed: false,
                },
                EditChunk {
                    old_lines: vec!["b".into()],
                    new_lines: vec!["B1".into(), "B2".into()],
                    changed: true,
                },
                EditChunk {
                    old_lines: vec!["c".into()],
                    new_lines: vec!["c".into()],
                    changed: false,
                },
            ],
        };
        let diff = script_to_diff(&script, "f", 1);
        let patches = parse_unified_diff(&diff).unwrap();
        let mut bundle = FileBundle::default();
        bundle.insert("x", "f", script.original());
        let out = apply_patches(&bundle, "x", &patches).unwrap();
        assert_eq!(out["f"], script.edited());
        assert_eq!(splice_apply(&script.original(), &patches[0]), script.edited());
    }

    #[test]
    fn random_scripts_are_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let lines = random_lines(&mut a, 40);
        let lines_b = random_lines(&mut b, 40);
        assert_eq!(lines, lines_b);
        let s1 = random_edit_script(&mut a, &lines);
        let s2 = random_edit_script(&mut b, &lines_b);
        assert_eq!(s1.edited(), s2.edited());
    }
}
