//! Mining: git history walk, single-line and single-statement gates, bug-fix
//! keywords, deduplication and dataset emission.

use crate::analysis::is_typo_fix;
use crate::astcore::{select_from_lines, StatementPair};
use crate::diffcore::{diff_text, single_line_edit, split_lines, CONTEXT_LINES, DEFAULT_MAX_FILE_BYTES};
use crate::editscript::diff_trees;
use crate::pytok::{tokenize, TokenKind};
use crate::record::{write_records, BugRecord};
use crate::sstub::classify;
use git2::{Delta, DiffOptions, Repository, Sort};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

pub const DEFAULT_KEYWORDS: [&str; 10] = [
    "error", "bug", "fix", "issue", "mistake", "incorrect", "fault", "defect", "flaw", "type",
];

pub const CACHE_DIR_ENV: &str = "SSTUB_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinerConfig {
    pub keywords: Vec<String>,
    pub workers: usize,
    pub max_file_bytes: usize,
    pub output_path: PathBuf,
    pub repo_list_path: PathBuf,
    pub gzip: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            keywords: DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            workers: 1,
            max_file_bytes: DEFAULT_MAX_FILE_BYTES,
            output_path: PathBuf::from("out"),
            repo_list_path: PathBuf::from("repos.txt"),
            gzip: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("repository unavailable: {repo}: {reason}")]
    RepoUnavailable { repo: String, reason: String },
    #[error("corrupt object in {repo} at {sha}: {reason}")]
    CorruptObject { repo: String, sha: String, reason: String },
    #[error("output error: {0}")]
    OutputIo(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateFile {
    pub path: String,
    pub before: String,
    pub after: String,
}

/// A non-merge commit restricted to its modified Python files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitCandidate {
    pub project: String,
    pub sha: String,
    pub message: String,
    pub files: Vec<CandidateFile>,
}

/// Case-insensitive whole-word match; words are maximal alphanumeric runs.
pub fn is_bugfix_message(message: &str, keywords: &[impl AsRef<str>]) -> bool {
    let lower = message.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .any(|w| keywords.iter().any(|k| k.as_ref().eq_ignore_ascii_case(w)))
}

/// Reads a newline-delimited repository list; blank lines and `#` comments
/// are skipped.
pub fn read_repo_list(path: &Path) -> std::io::Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("stmtbugs-cache"))
}

fn cache_slot(url: &str) -> String {
    use sha2::{Digest, Sha256};
    let tail: String = url
        .rsplit('/')
        .find(|s| !s.is_empty())
        .unwrap_or("repo")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    let h = Sha256::digest(url.as_bytes());
    let hex: String = h[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("{tail}-{hex}")
}

/// Opens a local repository, or clones a remote one into the cache.
pub fn open_repository(repo: &str) -> Result<Repository, PipelineError> {
    let unavailable = |e: git2::Error| PipelineError::RepoUnavailable {
        repo: repo.to_string(),
        reason: e.message().to_string(),
    };
    if Path::new(repo).exists() {
        return Repository::open(repo).map_err(unavailable);
    }
    let dest = cache_dir().join(cache_slot(repo));
    if dest.exists() {
        return Repository::open(&dest).map_err(unavailable);
    }
    info!(target: "clone", "repo={repo} msg=cloning into {}", dest.display());
    Repository::clone(repo, &dest).map_err(unavailable)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    pub commits: u64,
    pub merges_skipped: u64,
    pub add_remove_skipped: u64,
    pub corrupt_skipped: u64,
    pub candidates: u64,
}

/// Walks first-parent history oldest first and yields one candidate per
/// non-merge commit that modifies at least one Python file and neither adds
/// nor removes any file.
pub fn scan_repository(
    repo: &str,
    cfg: &MinerConfig,
    stop: &AtomicBool,
    mut each: impl FnMut(CommitCandidate),
) -> Result<ScanStats, PipelineError> {
    let r = open_repository(repo)?;
    let mut stats = ScanStats::default();
    let unavailable = |e: git2::Error| PipelineError::RepoUnavailable {
        repo: repo.to_string(),
        reason: e.message().to_string(),
    };
    let mut walk = r.revwalk().map_err(unavailable)?;
    if r.head().is_err() {
        // empty repository
        return Ok(stats);
    }
    walk.push_head().map_err(unavailable)?;
    walk.simplify_first_parent().map_err(unavailable)?;
    walk.set_sorting(Sort::TOPOLOGICAL | Sort::REVERSE).map_err(unavailable)?;
    for oid in walk {
        if stop.load(Ordering::Relaxed) {
            break;
        }
        let oid = match oid {
            Ok(o) => o,
            Err(e) => {
                warn!(target: "scan", "repo={repo} msg=revwalk: {}", e.message());
                stats.corrupt_skipped += 1;
                continue;
            }
        };
        stats.commits += 1;
        match candidate_of(&r, repo, oid, cfg) {
            Ok(Some(c)) => {
                stats.candidates += 1;
                each(c);
            }
            Ok(None) => {}
            Err(CommitSkip::Merge) => stats.merges_skipped += 1,
            Err(CommitSkip::AddRemove) => stats.add_remove_skipped += 1,
            Err(CommitSkip::Corrupt(e)) => {
                warn!(target: "scan", "repo={repo} msg={}", PipelineError::CorruptObject {
                    repo: repo.to_string(),
                    sha: oid.to_string(),
                    reason: e,
                });
                stats.corrupt_skipped += 1;
            }
        }
    }
    Ok(stats)
}

enum CommitSkip {
    Merge,
    AddRemove,
    Corrupt(String),
}

fn candidate_of(
    r: &Repository,
    project: &str,
    oid: git2::Oid,
    cfg: &MinerConfig,
) -> Result<Option<CommitCandidate>, CommitSkip> {
    let corrupt = |e: git2::Error| CommitSkip::Corrupt(e.message().to_string());
    let commit = r.find_commit(oid).map_err(corrupt)?;
    match commit.parent_count() {
        0 => return Err(CommitSkip::AddRemove), // root commit adds every file
        1 => {}
        _ => return Err(CommitSkip::Merge),
    }
    let parent_tree = commit.parent(0).and_then(|p| p.tree()).map_err(corrupt)?;
    let tree = commit.tree().map_err(corrupt)?;
    let mut opts = DiffOptions::new();
    let diff = r
        .diff_tree_to_tree(Some(&parent_tree), Some(&tree), Some(&mut opts))
        .map_err(corrupt)?;
    let mut files = Vec::new();
    for delta in diff.deltas() {
        match delta.status() {
            Delta::Added | Delta::Deleted => return Err(CommitSkip::AddRemove),
            Delta::Modified => {}
            _ => continue,
        }
        let Some(path) = delta.new_file().path().and_then(Path::to_str) else {
            continue;
        };
        if !path.ends_with(".py") {
            continue;
        }
        let old = r.find_blob(delta.old_file().id()).map_err(corrupt)?;
        let new = r.find_blob(delta.new_file().id()).map_err(corrupt)?;
        if old.size() > cfg.max_file_bytes || new.size() > cfg.max_file_bytes {
            continue;
        }
        let (Ok(before), Ok(after)) = (
            crate::diffcore::decode_text(path, old.content()),
            crate::diffcore::decode_text(path, new.content()),
        ) else {
            continue;
        };
        files.push(CandidateFile {
            path: path.to_string(),
            before: before.to_string(),
            after: after.to_string(),
        });
    }
    if files.is_empty() {
        return Ok(None);
    }
    Ok(Some(CommitCandidate {
        project: project.to_string(),
        sha: oid.to_string(),
        message: String::from_utf8_lossy(commit.message_bytes()).into_owned(),
        files,
    }))
}

/// One accepted file of a commit.
#[derive(Debug, Clone)]
pub struct StatementChange {
    pub file_path: String,
    pub diff: String,
    pub before_line: String,
    pub after_line: String,
    pub statements: StatementPair,
}

/// Statement changes of a commit plus the number of files it changed beyond
/// formatting.
#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub changes: Vec<StatementChange>,
    pub changed_files: usize,
}

/// Applies the single-line gate to every file (any failure drops the whole
/// commit) and the statement gates per file (failures drop the file).
pub fn select_commit(c: &CommitCandidate) -> Selection {
    let mut edits = Vec::new();
    for f in &c.files {
        let d = diff_text(&f.path, &f.before, &f.after);
        if d.removed.is_empty() && d.added.is_empty() {
            continue;
        }
        match single_line_edit(&d) {
            Some(pair) => edits.push((f, d, pair)),
            None => return Selection::default(),
        }
    }
    let changed_files = edits.len();
    let changes = edits
        .into_iter()
        .filter_map(|(f, d, pair)| {
            let (bl, _) = split_lines(&f.before);
            let (al, _) = split_lines(&f.after);
            let (bi, ai) = (pair.before_line.line_no - 1, pair.after_line.line_no - 1);
            let statements = select_from_lines(&bl, bi, &al, ai, CONTEXT_LINES).ok()?;
            Some(StatementChange {
                file_path: f.path.clone(),
                diff: d.unified,
                before_line: pair.before_line.text,
                after_line: pair.after_line.text,
                statements,
            })
        })
        .collect();
    Selection { changes, changed_files }
}

pub fn select_single_statement(c: &CommitCandidate) -> Vec<StatementChange> {
    select_commit(c).changes
}

/// Classified record for one statement change.
pub fn make_record(c: &CommitCandidate, s: &StatementChange, likely_bug: bool, in_tssb: bool) -> BugRecord {
    let script = diff_trees(&s.statements.before, &s.statements.after);
    let label = classify(&s.statements.before, &s.statements.after, &script);
    BugRecord {
        project: c.project.clone(),
        commit_sha: c.sha.clone(),
        commit_message: c.message.clone(),
        file_path: s.file_path.clone(),
        diff: s.diff.clone(),
        before_line: s.before_line.clone(),
        after_line: s.after_line.clone(),
        sstub_pattern: label,
        edit_ops_count: script.len(),
        edit_script: script,
        likely_bug,
        in_tssb,
        is_typo: is_typo_fix(&s.before_line, &s.after_line),
    }
}

/// All records of one commit.
pub fn records_for(c: &CommitCandidate, keywords: &[String]) -> Vec<BugRecord> {
    let sel = select_commit(c);
    let likely_bug = is_bugfix_message(&c.message, keywords);
    let in_tssb = likely_bug && sel.changed_files == 1 && sel.changes.len() == 1;
    sel.changes
        .iter()
        .map(|s| make_record(c, s, likely_bug, in_tssb))
        .collect()
}

type DedupKey = (String, String, Vec<(TokenKind, String)>, Vec<(TokenKind, String)>);

fn dedup_key(r: &BugRecord) -> DedupKey {
    let norm = |s: &str| {
        tokenize(s)
            .normalized()
            .into_iter()
            .map(|(k, t)| (k, t.to_string()))
            .collect()
    };
    (
        r.commit_sha.clone(),
        r.file_path.clone(),
        norm(&r.before_line),
        norm(&r.after_line),
    )
}

/// Keeps the first record per (sha, path, before tokens, after tokens).
pub fn dedup(records: impl IntoIterator<Item = BugRecord>) -> Vec<BugRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(dedup_key(r)))
        .collect()
}

pub fn canonical_sort(records: &mut [BugRecord]) {
    records.sort_by(|a, b| {
        (&a.project, &a.commit_sha, &a.file_path).cmp(&(&b.project, &b.commit_sha, &b.file_path))
    });
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepoOutcome {
    pub repo: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub stats: ScanStats,
    pub records: u64,
}

#[derive(Debug, Clone, Default)]
pub struct MineResult {
    /// Deduplicated and canonically sorted.
    pub records: Vec<BugRecord>,
    pub repos: Vec<RepoOutcome>,
    pub interrupted: bool,
}

impl MineResult {
    pub fn failed_repos(&self) -> usize {
        self.repos.iter().filter(|r| !r.ok).count()
    }
}

fn mine_repo(repo: &str, cfg: &MinerConfig, stop: &AtomicBool) -> (RepoOutcome, Vec<BugRecord>) {
    let mut records = Vec::new();
    let res = scan_repository(repo, cfg, stop, |c| records.extend(records_for(&c, &cfg.keywords)));
    let outcome = match res {
        Ok(stats) => {
            info!(target: "mine", "repo={repo} msg=done commits={} records={}", stats.commits, records.len());
            RepoOutcome {
                repo: repo.to_string(),
                ok: true,
                error: None,
                stats,
                records: records.len() as u64,
            }
        }
        Err(e) => {
            warn!(target: "mine", "repo={repo} msg={e}");
            RepoOutcome {
                repo: repo.to_string(),
                ok: false,
                error: Some(e.to_string()),
                stats: ScanStats::default(),
                records: 0,
            }
        }
    };
    (outcome, records)
}

/// Mines every repository with `cfg.workers` threads. Each worker produces
/// a private shard per repository; shards are reduced in repo-list order.
pub fn mine(repos: &[String], cfg: &MinerConfig, stop: &AtomicBool) -> MineResult {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .expect("thread pool");
    let shards: Vec<(RepoOutcome, Vec<BugRecord>)> =
        pool.install(|| repos.par_iter().map(|r| mine_repo(r, cfg, stop)).collect());
    let mut outcomes = Vec::with_capacity(shards.len());
    let mut all = Vec::new();
    for (o, recs) in shards {
        outcomes.push(o);
        all.extend(recs);
    }
    let mut records = dedup(all);
    canonical_sort(&mut records);
    MineResult {
        records,
        repos: outcomes,
        interrupted: stop.load(Ordering::Relaxed),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetCounts {
    pub ssc: u64,
    pub ssb: u64,
    pub tssb: u64,
}

pub fn dataset_paths(out: &Path, gzip: bool) -> [PathBuf; 3] {
    let ext = if gzip { "jsonl.gz" } else { "jsonl" };
    ["ssc", "ssb", "tssb"].map(|n| out.join(format!("{n}.{ext}")))
}

/// Writes ssc (all), ssb (`likely_bug`) and tssb (`in_tssb`) files.
pub fn build_datasets(records: &[BugRecord], out: &Path, gzip: bool) -> Result<DatasetCounts, PipelineError> {
    std::fs::create_dir_all(out)?;
    let ssb: Vec<BugRecord> = records.iter().filter(|r| r.likely_bug).cloned().collect();
    let tssb: Vec<BugRecord> = ssb.iter().filter(|r| r.in_tssb).cloned().collect();
    let [p_ssc, p_ssb, p_tssb] = dataset_paths(out, gzip);
    write_records(&p_ssc, records)?;
    write_records(&p_ssb, &ssb)?;
    write_records(&p_tssb, &tssb)?;
    Ok(DatasetCounts {
        ssc: records.len() as u64,
        ssb: ssb.len() as u64,
        tssb: tssb.len() as u64,
    })
}
