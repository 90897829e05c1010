//! Extracting the 1-10 score from a committee reply.

use std::fmt;

/// Why a reply failed to yield a score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreParseFailure {
    /// No line contains the `Score:` contract.
    NoScoreLine,
    /// The contract matched but the value is outside 1..=10. Out-of-range
    /// values are never clamped.
    OutOfRange(i64),
}

impl fmt::Display for ScoreParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreParseFailure::NoScoreLine => write!(f, "no Score: line found"),
            ScoreParseFailure::OutOfRange(v) => write!(f, "score {v} outside 1..=10"),
        }
    }
}

/// Parses the score from a raw reply.
///
/// The contract is a line containing `Score:` followed by an integer. The
/// last matching line wins, and within that line the last matching
/// occurrence wins. Values followed by a fraction (`7.5`) are not integers
/// and do not match; values outside 1..=10 are failures, never clamped.
pub fn parse_score(raw_response: &str) -> Result<u8, ScoreParseFailure> {
    let mut last: Option<i64> = None;
    for line in raw_response.lines() {
        if let Some(value) = last_score_occurrence(line) {
            last = Some(value);
        }
    }
    match last {
        None => Err(ScoreParseFailure::NoScoreLine),
        Some(v) if (1..=10).contains(&v) => Ok(v as u8),
        Some(v) => Err(ScoreParseFailure::OutOfRange(v)),
    }
}

/// Finds the last `score: <integer>` occurrence in one line
/// (case-insensitive), rejecting decimal values.
fn last_score_occurrence(line: &str) -> Option<i64> {
    let lower = line.to_lowercase();
    let bytes = lower.as_bytes();
    let mut result = None;
    let mut search_from = 0usize;
    while let Some(rel) = lower[search_from..].find("score") {
        let start = search_from + rel;
        search_from = start + "score".len();
        // Word boundary: "underscore: 5" is not a score line.
        if start > 0 && (bytes[start - 1].is_ascii_alphanumeric() || bytes[start - 1] == b'_') {
            continue;
        }
        let mut i = start + "score".len();
        // Optional whitespace, then a colon.
        while bytes.get(i) == Some(&b' ') || bytes.get(i) == Some(&b'\t') {
            i += 1;
        }
        if bytes.get(i) != Some(&b':') {
            continue;
        }
        i += 1;
        while bytes.get(i) == Some(&b' ') || bytes.get(i) == Some(&b'\t') {
            i += 1;
        }
        let mut j = i;
        if bytes.get(j) == Some(&b'-') || bytes.get(j) == Some(&b'+') {
            j += 1;
        }
        let digits_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j == digits_start {
            continue;
        }
        // A fraction makes the value non-integer; skip this occurrence.
        if bytes.get(j) == Some(&b'.') && bytes.get(j + 1).is_some_and(u8::is_ascii_digit) {
            continue;
        }
        if let Ok(value) = lower[i..j].parse::<i64>() {
            result = Some(value);
        }
    }
    result
}
