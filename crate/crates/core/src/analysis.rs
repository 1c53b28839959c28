//! Dataset statistics: pattern frequencies, rank correlation, edit-script
//! distances, script lengths, operation types and typo rates.

use crate::editscript::{abstract_ops, AbstractOpType, OpKind};
use crate::pytok::{tokenize, TokenKind};
use crate::record::BugRecord;
use crate::sstub::{SstubLabel, PATTERNS};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations")]
    TooShort,
    #[error("all values in one input are equal")]
    DegenerateInput,
    #[error("no SStuB records to compare against")]
    EmptyReference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub pattern: String,
    pub count: u64,
    /// Share of all SStuB records; `None` for the two fallback rows.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
    pub sstub_total: u64,
    pub total: u64,
}

pub fn pattern_frequencies(records: &[BugRecord]) -> FrequencyTable {
    let mut counts: HashMap<SstubLabel, u64> = HashMap::new();
    for r in records {
        *counts.entry(r.sstub_pattern).or_default() += 1;
    }
    let sstub_total: u64 = PATTERNS.iter().map(|p| counts.get(p).copied().unwrap_or(0)).sum();
    let mut rows: Vec<FrequencyRow> = PATTERNS
        .iter()
        .map(|&p| {
            let count = counts.get(&p).copied().unwrap_or(0);
            let percent = if sstub_total == 0 {
                0.0
            } else {
                100.0 * count as f64 / sstub_total as f64
            };
            FrequencyRow {
                pattern: p.as_str().to_string(),
                count,
                percent: Some(percent),
            }
        })
        .collect();
    for p in [SstubLabel::NoSstubSingleToken, SstubLabel::NoSstubSingleStatement] {
        rows.push(FrequencyRow {
            pattern: p.as_str().to_string(),
            count: counts.get(&p).copied().unwrap_or(0),
            percent: None,
        });
    }
    FrequencyTable {
        rows,
        sstub_total,
        total: records.len() as u64,
    }
}

/// Fractional ranks, 1-based; ties get the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooShort);
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(AnalysisError::DegenerateInput);
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)).clamp(-1.0, 1.0))
}

/// `1 - |a ∩ b| / |a ∪ b|`, and 0 for two empty sets.
pub fn jaccard_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

pub const DISTANCE_BINS: usize = 20;

/// Bin index of a distance in `[0, 1]`; the last bin is closed.
pub fn distance_bin(d: f64) -> usize {
    ((d * DISTANCE_BINS as f64).floor() as usize).min(DISTANCE_BINS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    /// Counts of minimum distances in 20 equal-width bins over `[0, 1]`.
    pub histogram: Vec<u64>,
    /// Distance exactly 0.
    pub alike: u64,
    pub related: u64,
    /// Distance exactly 1.
    pub unrelated: u64,
    pub non_sstub: u64,
    pub sstub: u64,
    /// Distinct operation-type sets among the SStuB records.
    pub reference_sets: usize,
}

type OpSet = BTreeSet<AbstractOpType>;

/// Minimum Jaccard distance of each NonSStuB record to any SStuB record.
pub fn min_distances(records: &[BugRecord]) -> Result<Vec<f64>, AnalysisError> {
    let reference: BTreeSet<OpSet> = records
        .iter()
        .filter(|r| r.sstub_pattern.is_sstub())
        .map(|r| abstract_ops(&r.edit_script))
        .collect();
    if reference.is_empty() {
        return Err(AnalysisError::EmptyReference);
    }
    let reference: Vec<OpSet> = reference.into_iter().collect();
    Ok(records
        .par_iter()
        .filter(|r| !r.sstub_pattern.is_sstub())
        .map(|r| {
            let ops = abstract_ops(&r.edit_script);
            reference
                .iter()
                .map(|s| jaccard_distance(&ops, s))
                .fold(1.0, f64::min)
        })
        .collect())
}

pub fn sstub_distance_report(records: &[BugRecord]) -> Result<DistanceReport, AnalysisError> {
    let distances = min_distances(records)?;
    let mut report = DistanceReport {
        histogram: vec![0; DISTANCE_BINS],
        alike: 0,
        related: 0,
        unrelated: 0,
        non_sstub: distances.len() as u64,
        sstub: records.iter().filter(|r| r.sstub_pattern.is_sstub()).count() as u64,
        reference_sets: records
            .iter()
            .filter(|r| r.sstub_pattern.is_sstub())
            .map(|r| abstract_ops(&r.edit_script))
            .collect::<BTreeSet<_>>()
            .len(),
    };
    for d in distances {
        report.histogram[distance_bin(d)] += 1;
        if d == 0.0 {
            report.alike += 1;
        } else if d == 1.0 {
            report.unrelated += 1;
        } else {
            report.related += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthHistogram {
    /// Script length to record count.
    pub bins: BTreeMap<usize, u64>,
    pub mean: f64,
    pub total: u64,
}

pub fn script_length_histogram(records: &[BugRecord]) -> LengthHistogram {
    let mut bins = BTreeMap::new();
    let mut sum = 0usize;
    for r in records {
        *bins.entry(r.edit_ops_count).or_insert(0) += 1;
        sum += r.edit_ops_count;
    }
    let total = records.len() as u64;
    LengthHistogram {
        bins,
        mean: if total == 0 { 0.0 } else { sum as f64 / total as f64 },
        total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpTypeTable {
    pub totals: BTreeMap<OpKind, u64>,
    /// The `k` most frequent abstract types per kind, ties broken by name.
    pub top: BTreeMap<OpKind, Vec<(String, u64)>>,
}

pub fn operation_type_table(records: &[BugRecord], k: usize) -> OpTypeTable {
    let mut totals: BTreeMap<OpKind, u64> = OpKind::ALL.iter().map(|&k| (k, 0)).collect();
    let mut by_type: BTreeMap<OpKind, HashMap<String, u64>> = BTreeMap::new();
    for r in records {
        for op in &r.edit_script.ops {
            *totals.get_mut(&op.kind).unwrap() += 1;
            *by_type
                .entry(op.kind)
                .or_default()
                .entry(AbstractOpType::of(op).to_string())
                .or_default() += 1;
        }
    }
    let top = OpKind::ALL
        .iter()
        .map(|&kind| {
            let mut v: Vec<(String, u64)> = by_type.remove(&kind).unwrap_or_default().into_iter().collect();
            v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            v.truncate(k);
            (kind, v)
        })
        .collect();
    OpTypeTable { totals, top }
}

/// Optimal string alignment distance over Unicode scalar values.
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d[n][m]
}

pub const TYPO_MAX_DISTANCE: usize = 2;
pub const TYPO_MIN_TOKEN_LEN: usize = 3;

/// Kind of a change that replaces exactly one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleTokenChange {
    Identifier,
    String,
    Other,
}

/// Literal content without prefix and quotes.
fn string_content(tok: &str) -> &str {
    let body = tok.trim_start_matches(|c: char| c.is_ascii_alphabetic());
    for q in ["\"\"\"", "'''", "\"", "'"] {
        if let Some(inner) = body.strip_prefix(q) {
            return inner.strip_suffix(q).unwrap_or(inner);
        }
    }
    body
}

/// The single replaced token pair of two lines, if exactly one differs.
pub fn single_token_change(before: &str, after: &str) -> Option<(SingleTokenChange, String, String)> {
    let (tb, ta) = (tokenize(before), tokenize(after));
    if tb.len() != ta.len() {
        return None;
    }
    let mut diff = tb
        .iter()
        .zip(ta.iter())
        .filter(|(x, y)| (x.kind, &x.text) != (y.kind, &y.text));
    let (x, y) = diff.next()?;
    if diff.next().is_some() {
        return None;
    }
    Some(match (x.kind, y.kind) {
        (TokenKind::Name, TokenKind::Name) => {
            (SingleTokenChange::Identifier, x.text.clone(), y.text.clone())
        }
        (TokenKind::String, TokenKind::String) => (
            SingleTokenChange::String,
            string_content(&x.text).to_string(),
            string_content(&y.text).to_string(),
        ),
        _ => (SingleTokenChange::Other, x.text.clone(), y.text.clone()),
    })
}

/// At most two character edits between the trimmed lines; a single
/// identifier or string replacement additionally needs both old and new
/// content to be at least three characters long.
pub fn is_typo_fix(before_line: &str, after_line: &str) -> bool {
    let (b, a) = (before_line.trim(), after_line.trim());
    if damerau_levenshtein(b, a) > TYPO_MAX_DISTANCE {
        return false;
    }
    match single_token_change(b, a) {
        Some((SingleTokenChange::Identifier | SingleTokenChange::String, x, y)) => {
            x.chars().count() >= TYPO_MIN_TOKEN_LEN && y.chars().count() >= TYPO_MIN_TOKEN_LEN
        }
        _ => true,
    }
}

pub fn is_typo_record(r: &BugRecord) -> bool {
    is_typo_fix(&r.before_line, &r.after_line)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypoStats {
    pub total: u64,
    pub typos: u64,
    pub typo_percent: f64,
    pub identifier_changes: u64,
    pub identifier_typos: u64,
    pub identifier_typo_percent: f64,
    pub string_changes: u64,
    pub string_typos: u64,
    pub string_typo_percent: f64,
}

fn pct(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

pub fn typo_stats(records: &[BugRecord]) -> TypoStats {
    let (mut typos, mut ic, mut it, mut sc, mut st) = (0, 0, 0, 0, 0);
    for r in records {
        let typo = is_typo_record(r);
        typos += u64::from(typo);
        match single_token_change(r.before_line.trim(), r.after_line.trim()) {
            Some((SingleTokenChange::Identifier, ..)) => {
                ic += 1;
                it += u64::from(typo);
            }
            Some((SingleTokenChange::String, ..)) => {
                sc += 1;
                st += u64::from(typo);
            }
            _ => {}
        }
    }
    let total = records.len() as u64;
    TypoStats {
        total,
        typos,
        typo_percent: pct(typos, total),
        identifier_changes: ic,
        identifier_typos: it,
        identifier_typo_percent: pct(it, ic),
        string_changes: sc,
        string_typos: st,
        string_typo_percent: pct(st, sc),
    }
}
