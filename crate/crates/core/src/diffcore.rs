//! Token-normalized line diffs.
//!
//! Lines are aligned by longest common subsequence where two lines are equal
//! when their token sequences are equal, so reformatting and comment edits
//! never count as changes. The unified rendering still records such lines as
//! `-`/`+` pairs so that it applies cleanly to the original text.

use crate::pytok::{token_eq, tokenize, TokenSeq};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const CONTEXT_LINES: usize = 3;
pub const DEFAULT_MAX_FILE_BYTES: usize = 2 * 1024 * 1024;

// Beyond this many DP cells the changed middle is emitted without alignment.
const MAX_LCS_CELLS: usize = 25_000_000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("binary content: {0}")]
    BinaryContent(String),
}

/// A numbered line; `line_no` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberedLine {
    pub line_no: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub path: String,
    pub removed: Vec<NumberedLine>,
    pub added: Vec<NumberedLine>,
    pub unified: String,
    /// For each removed/added line, the index of the alignment gap it sits in
    /// (number of matched lines preceding it).
    #[serde(skip)]
    removed_gaps: Vec<usize>,
    #[serde(skip)]
    added_gaps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedLinePair {
    pub before_line: NumberedLine,
    pub after_line: NumberedLine,
}

/// Decode file bytes as UTF-8 text. NUL bytes count as binary.
pub fn decode_text<'a>(path: &str, bytes: &'a [u8]) -> Result<&'a str, DiffError> {
    if bytes.contains(&0) {
        return Err(DiffError::BinaryContent(path.to_string()));
    }
    std::str::from_utf8(bytes).map_err(|_| DiffError::BinaryContent(path.to_string()))
}

/// Split into lines without terminators. Returns the lines and whether the
/// text ended with a newline.
pub fn split_lines(text: &str) -> (Vec<&str>, bool) {
    if text.is_empty() {
        return (Vec::new(), true);
    }
    let trailing = text.ends_with('\n');
    let body = if trailing { &text[..text.len() - 1] } else { text };
    (body.split('\n').collect(), trailing)
}

fn strip_cr(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    /// Token-equal lines.
    Keep(usize, usize),
    Del(usize),
    Ins(usize),
}

/// LCS alignment over token-equality. Ties resolve toward the earliest match.
fn align(a: &[TokenSeq], b: &[TokenSeq]) -> Vec<Step> {
    let eq = |i: usize, j: usize| token_eq(&a[i], &b[j]);
    let (n, m) = (a.len(), b.len());
    let mut pre = 0;
    while pre < n && pre < m && eq(pre, pre) {
        pre += 1;
    }
    let mut suf = 0;
    while suf < n - pre && suf < m - pre && eq(n - 1 - suf, m - 1 - suf) {
        suf += 1;
    }
    let (a0, a1, b0, b1) = (pre, n - suf, pre, m - suf);
    let (rn, rm) = (a1 - a0, b1 - b0);

    let mut steps: Vec<Step> = (0..pre).map(|i| Step::Keep(i, i)).collect();
    if rn.saturating_mul(rm) > MAX_LCS_CELLS {
        steps.extend((a0..a1).map(Step::Del));
        steps.extend((b0..b1).map(Step::Ins));
    } else {
        // table[i][j] = LCS length of a[a0+i..a1] and b[b0+j..b1]
        let w = rm + 1;
        let mut table = vec![0u32; (rn + 1) * w];
        for i in (0..rn).rev() {
            for j in (0..rm).rev() {
                table[i * w + j] = if eq(a0 + i, b0 + j) {
                    table[(i + 1) * w + j + 1] + 1
                } else {
                    table[(i + 1) * w + j].max(table[i * w + j + 1])
                };
            }
        }
        let (mut i, mut j) = (0, 0);
        while i < rn || j < rm {
            if i < rn && j < rm && eq(a0 + i, b0 + j) {
                steps.push(Step::Keep(a0 + i, b0 + j));
                i += 1;
                j += 1;
            } else if j == rm || (i < rn && table[(i + 1) * w + j] >= table[i * w + j + 1]) {
                steps.push(Step::Del(a0 + i));
                i += 1;
            } else {
                steps.push(Step::Ins(b0 + j));
                j += 1;
            }
        }
    }
    steps.extend((0..suf).map(|k| Step::Keep(a1 + k, b1 + k)));
    steps
}

/// Diff two file versions. Fails with `BinaryContent` when either side does
/// not decode as text.
pub fn diff_file(path: &str, before: &[u8], after: &[u8]) -> Result<FileDiff, DiffError> {
    let before = decode_text(path, before)?;
    let after = decode_text(path, after)?;
    Ok(diff_text(path, before, after))
}

/// Diff two already-decoded file versions.
pub fn diff_text(path: &str, before: &str, after: &str) -> FileDiff {
    let (a_lines, a_nl) = split_lines(before);
    let (b_lines, b_nl) = split_lines(after);
    let a_toks: Vec<TokenSeq> = a_lines.iter().map(|l| tokenize(strip_cr(l))).collect();
    let b_toks: Vec<TokenSeq> = b_lines.iter().map(|l| tokenize(strip_cr(l))).collect();
    let steps = align(&a_toks, &b_toks);

    let mut diff = FileDiff {
        path: path.to_string(),
        removed: Vec::new(),
        added: Vec::new(),
        unified: String::new(),
        removed_gaps: Vec::new(),
        added_gaps: Vec::new(),
    };
    let mut gap = 0;
    for step in &steps {
        match *step {
            Step::Keep(..) => gap += 1,
            Step::Del(i) => {
                diff.removed.push(NumberedLine {
                    line_no: i + 1,
                    text: strip_cr(a_lines[i]).to_string(),
                });
                diff.removed_gaps.push(gap);
            }
            Step::Ins(j) => {
                diff.added.push(NumberedLine {
                    line_no: j + 1,
                    text: strip_cr(b_lines[j]).to_string(),
                });
                diff.added_gaps.push(gap);
            }
        }
    }
    diff.unified = render_unified(path, &a_lines, a_nl, &b_lines, b_nl, &steps);
    diff
}

/// The changed pair iff the diff is exactly one removed and one added line
/// sitting in the same alignment gap.
pub fn single_line_edit(diff: &FileDiff) -> Option<ChangedLinePair> {
    match (diff.removed.as_slice(), diff.added.as_slice()) {
        ([before], [after]) if diff.removed_gaps == diff.added_gaps => Some(ChangedLinePair {
            before_line: before.clone(),
            after_line: after.clone(),
        }),
        _ => None,
    }
}

/// One line of a textual edit sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Text {
    Same(usize, usize),
    Del(usize),
    Ins(usize),
}

fn textual_ops(a: &[&str], a_nl: bool, b: &[&str], b_nl: bool, steps: &[Step]) -> Vec<Text> {
    // Token-equal lines with differing bytes, or a differing final-newline
    // marker, become a -/+ pair; within each changed run, deletions precede
    // insertions.
    let mut out = Vec::new();
    let mut dels = Vec::new();
    let mut ins = Vec::new();
    let flush = |out: &mut Vec<Text>, dels: &mut Vec<usize>, ins: &mut Vec<usize>| {
        out.extend(dels.drain(..).map(Text::Del));
        out.extend(ins.drain(..).map(Text::Ins));
    };
    for step in steps {
        match *step {
            Step::Keep(i, j) => {
                let last_a = i + 1 == a.len() && !a_nl;
                let last_b = j + 1 == b.len() && !b_nl;
                if a[i] == b[j] && last_a == last_b {
                    flush(&mut out, &mut dels, &mut ins);
                    out.push(Text::Same(i, j));
                } else {
                    dels.push(i);
                    ins.push(j);
                }
            }
            Step::Del(i) => dels.push(i),
            Step::Ins(j) => ins.push(j),
        }
    }
    flush(&mut out, &mut dels, &mut ins);
    out
}

fn range_header(start: usize, count: usize) -> String {
    // GNU conventions: a count of one is omitted, an empty range names the
    // line before it.
    match count {
        0 => format!("{},0", start.saturating_sub(1)),
        1 => format!("{start}"),
        _ => format!("{start},{count}"),
    }
}

fn render_unified(
    path: &str,
    a: &[&str],
    a_nl: bool,
    b: &[&str],
    b_nl: bool,
    steps: &[Step],
) -> String {
    let ops = textual_ops(a, a_nl, b, b_nl, steps);
    let changed: Vec<usize> = ops
        .iter()
        .enumerate()
        .filter(|(_, op)| !matches!(op, Text::Same(..)))
        .map(|(k, _)| k)
        .collect();
    if changed.is_empty() {
        return String::new();
    }

    // group changes whose context windows touch
    let mut hunks: Vec<(usize, usize)> = Vec::new();
    for &k in &changed {
        let lo = k.saturating_sub(CONTEXT_LINES);
        let hi = (k + CONTEXT_LINES + 1).min(ops.len());
        match hunks.last_mut() {
            Some(last) if lo <= last.1 => last.1 = hi,
            _ => hunks.push((lo, hi)),
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "--- a/{path}");
    let _ = writeln!(out, "+++ b/{path}");
    for (lo, hi) in hunks {
        // first line numbers covered by the hunk
        let mut a_start = None;
        let mut b_start = None;
        let (mut a_count, mut b_count) = (0, 0);
        for op in &ops[lo..hi] {
            match *op {
                Text::Same(i, j) => {
                    a_start.get_or_insert(i + 1);
                    b_start.get_or_insert(j + 1);
                    a_count += 1;
                    b_count += 1;
                }
                Text::Del(i) => {
                    a_start.get_or_insert(i + 1);
                    a_count += 1;
                }
                Text::Ins(j) => {
                    b_start.get_or_insert(j + 1);
                    b_count += 1;
                }
            }
        }
        // an empty side starts after the lines preceding the hunk
        let a_before = ops[..lo]
            .iter()
            .filter(|op| !matches!(op, Text::Ins(_)))
            .count();
        let b_before = ops[..lo]
            .iter()
            .filter(|op| !matches!(op, Text::Del(_)))
            .count();
        let a_start = a_start.unwrap_or(a_before + 1);
        let b_start = b_start.unwrap_or(b_before + 1);
        let _ = writeln!(
            out,
            "@@ -{} +{} @@",
            range_header(a_start, a_count),
            range_header(b_start, b_count)
        );
        for op in &ops[lo..hi] {
            let (mark, text, eof_no_nl) = match *op {
                Text::Same(i, _) => (' ', a[i], i + 1 == a.len() && !a_nl),
                Text::Del(i) => ('-', a[i], i + 1 == a.len() && !a_nl),
                Text::Ins(j) => ('+', b[j], j + 1 == b.len() && !b_nl),
            };
            out.push(mark);
            out.push_str(text);
            out.push('\n');
            if eof_no_nl {
                out.push_str("\\ No newline at end of file\n");
            }
        }
    }
    out
}

/// One hunk of a unified diff, split into its before- and after-side lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub before_start: usize,
    pub after_start: usize,
    pub before: Vec<String>,
    pub after: Vec<String>,
}

/// Parse the hunks of a unified diff produced by [`diff_text`].
pub fn parse_hunks(unified: &str) -> Vec<Hunk> {
    fn start_of(range: &str) -> usize {
        range
            .split(',')
            .next()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    }
    let mut hunks = Vec::new();
    let mut current: Option<Hunk> = None;
    for line in unified.lines() {
        if let Some(rest) = line.strip_prefix("@@ ") {
            if let Some(h) = current.take() {
                hunks.push(h);
            }
            let mut parts = rest.split_whitespace();
            let a = parts.next().unwrap_or("-0").trim_start_matches('-');
            let b = parts.next().unwrap_or("+0").trim_start_matches('+');
            current = Some(Hunk {
                before_start: start_of(a),
                after_start: start_of(b),
                before: Vec::new(),
                after: Vec::new(),
            });
            continue;
        }
        let Some(h) = current.as_mut() else { continue };
        if let Some(t) = line.strip_prefix(' ') {
            h.before.push(t.to_string());
            h.after.push(t.to_string());
        } else if let Some(t) = line.strip_prefix('-') {
            h.before.push(t.to_string());
        } else if let Some(t) = line.strip_prefix('+') {
            h.after.push(t.to_string());
        } else if line.is_empty() {
            h.before.push(String::new());
            h.after.push(String::new());
        }
    }
    if let Some(h) = current {
        hunks.push(h);
    }
    hunks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs() {
        let s = "import os\nx = f(a)\n";
        let d = diff_text("m.py", s, s);
        assert!(d.removed.is_empty() && d.added.is_empty());
        assert!(d.unified.is_empty());
        assert!(single_line_edit(&d).is_none());
    }

    #[test]
    fn formatting_only_change() {
        let d = diff_text("m.py", "x=1\n", "x = 1  # c\n");
        assert!(d.removed.is_empty() && d.added.is_empty());
        // still rendered so the patch reproduces the new text
        assert!(d.unified.contains("-x=1\n+x = 1  # c\n"));
    }

    #[test]
    fn one_line_modification() {
        let d = diff_text("m.py", "f(a)\ng()\n", "f(b)\ng()\n");
        assert_eq!(
            d.removed,
            vec![NumberedLine { line_no: 1, text: "f(a)".into() }]
        );
        assert_eq!(d.added, vec![NumberedLine { line_no: 1, text: "f(b)".into() }]);
        let pair = single_line_edit(&d).unwrap();
        assert_eq!(pair.before_line.text, "f(a)");
        assert_eq!(pair.after_line.text, "f(b)");
        assert_eq!(
            d.unified,
            "--- a/m.py\n+++ b/m.py\n@@ -1,2 +1,2 @@\n-f(a)\n+f(b)\n g()\n"
        );
    }

    #[test]
    fn two_changed_lines_rejected() {
        let d = diff_text("m.py", "a = 1\nb = 2\n", "a = 3\nb = 4\n");
        assert_eq!(d.removed.len(), 2);
        assert!(single_line_edit(&d).is_none());
    }

    #[test]
    fn pure_addition_rejected() {
        let d = diff_text("m.py", "g()\n", "g()\nh()\n");
        assert!(d.removed.is_empty());
        assert_eq!(d.added.len(), 1);
        assert!(single_line_edit(&d).is_none());
        assert_eq!(d.unified, "--- a/m.py\n+++ b/m.py\n@@ -1 +1,2 @@\n g()\n+h()\n");
    }

    #[test]
    fn misaligned_pair_rejected() {
        // X removed before `b`, Y added after it
        let d = diff_text("m.py", "a\nX\nb\n", "a\nb\nY\n");
        assert_eq!((d.removed.len(), d.added.len()), (1, 1));
        assert!(single_line_edit(&d).is_none());
    }

    #[test]
    fn earliest_match_on_ties() {
        // `x` can match either copy; the earliest wins
        let d = diff_text("m.py", "x\n", "x\nx\n");
        assert_eq!(d.added, vec![NumberedLine { line_no: 2, text: "x".into() }]);
    }

    #[test]
    fn missing_final_newline() {
        let d = diff_text("m.py", "a\nb", "a\nc");
        assert_eq!(
            d.unified,
            "--- a/m.py\n+++ b/m.py\n@@ -1,2 +1,2 @@\n a\n-b\n\\ No newline at end of file\n+c\n\\ No newline at end of file\n"
        );
    }

    #[test]
    fn newline_only_change_is_textual_not_token() {
        let d = diff_text("m.py", "a\n", "a");
        assert!(d.removed.is_empty());
        assert!(!d.unified.is_empty());
    }

    #[test]
    fn binary_detected() {
        assert!(matches!(
            diff_file("x.py", b"a\0b", b"a"),
            Err(DiffError::BinaryContent(_))
        ));
        assert!(diff_file("x.py", &[0xff, 0xfe], b"a").is_err());
    }

    #[test]
    fn empty_file_headers() {
        let d = diff_text("m.py", "", "a\n");
        assert_eq!(d.unified, "--- a/m.py\n+++ b/m.py\n@@ -0,0 +1 @@\n+a\n");
    }

    #[test]
    fn hunks_split_and_parse() {
        let before: String = (1..=20).map(|i| format!("v{i} = {i}\n")).collect();
        let after = before.replace("v2 = 2", "v2 = 3").replace("v18 = 18", "v18 = 0");
        let d = diff_text("m.py", &before, &after);
        let hunks = parse_hunks(&d.unified);
        assert_eq!(hunks.len(), 2);
        assert_eq!(hunks[0].before_start, 1);
        assert_eq!(hunks[0].before.len(), 5);
        assert_eq!(hunks[1].before_start, 15);
        assert_eq!(hunks[1].after[3], "v18 = 0");
    }

    #[test]
    fn crlf_lines() {
        let d = diff_text("m.py", "a = 1\r\nb = 2\r\n", "a = 1\r\nb = 3\r\n");
        assert_eq!(d.removed[0].text, "b = 2");
        assert!(single_line_edit(&d).is_some());
    }
}
