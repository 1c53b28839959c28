//! Command-line entry point.

use crate::analysis::{
    is_typo_fix, operation_type_table, pattern_frequencies, script_length_histogram, spearman,
    sstub_distance_report, typo_stats, AnalysisError,
};
use crate::astcore::{label_vocabulary_version, parse_fragment, select_from_lines};
use crate::diffcore::{parse_hunks, CONTEXT_LINES, DEFAULT_MAX_FILE_BYTES};
use crate::editscript::{abstract_ops, diff_trees};
use crate::pipeline::{build_datasets, mine, read_repo_list, MinerConfig, RepoOutcome, DEFAULT_KEYWORDS};
use crate::pytok::{token_eq, tokenize};
use crate::record::{read_records, write_records, BugRecord};
use crate::sstub::{classify, PATTERNS};
use anyhow::{bail, Context};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use log::{info, warn, Level, LevelFilter, Log, Metadata, Record};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Once, OnceLock};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

static STOP: AtomicBool = AtomicBool::new(false);
static INIT: Once = Once::new();

#[derive(Parser, Debug)]
#[command(name = "stmtbugs", about = "Mine and analyze single-statement bug fixes")]
struct Cli {
    /// Log progress (info level).
    #[arg(short, long, global = true)]
    verbose: bool,
    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine repositories into ssc/ssb/tssb jsonlines files.
    Mine(MineArgs),
    /// Recompute statement trees, edit scripts and labels of existing rows.
    Classify(ClassifyArgs),
    /// Print the edit script between two Python files.
    Editscript(EditscriptArgs),
    /// Compute dataset statistics.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Newline-delimited list of repository paths or URLs.
    #[arg(long)]
    repos: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
    /// Comma-separated bug-fix keywords.
    #[arg(long, value_delimiter = ',')]
    keywords: Option<Vec<String>>,
    #[arg(long)]
    gzip: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_FILE_BYTES)]
    max_file_bytes: usize,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EditscriptArgs {
    #[arg(long)]
    before: PathBuf,
    #[arg(long)]
    after: PathBuf,
    /// Print abstract operation types instead of the script.
    #[arg(long)]
    types: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Second dataset for the pattern-frequency rank correlation.
    #[arg(long)]
    compare: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
}

struct KvLogger {
    level: LevelFilter,
}

static LOGGER: KvLogger = KvLogger { level: LevelFilter::Trace };
static VERSION: OnceLock<String> = OnceLock::new();

impl Log for KvLogger {
    fn enabled(&self, m: &Metadata) -> bool {
        m.level() <= self.level
    }

    fn log(&self, r: &Record) {
        if !self.enabled(r.metadata()) {
            return;
        }
        let msg = r.args().to_string();
        let stage = r.target().rsplit("::").next().unwrap_or("main");
        let line = if msg.starts_with("repo=") {
            format!("level={} stage={stage} {msg}", r.level())
        } else {
            format!("level={} stage={stage} repo=- msg={msg}", r.level())
        };
        let _ = writeln!(std::io::stderr().lock(), "{line}");
    }

    fn flush(&self) {}
}

pub fn version_string() -> String {
    format!(
        "{} (labels v{}, tree-sitter-python 0.23)",
        env!("CARGO_PKG_VERSION"),
        label_vocabulary_version()
    )
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool_version: String,
    labels_version: String,
    command: String,
    config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    repo_list_sha256: Option<String>,
    started_at: String,
    finished_at: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    repos: Vec<RepoOutcome>,
    outputs: serde_json::Value,
    interrupted: bool,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Writes `manifest.json` via a temporary file and rename.
fn write_manifest(dir: &Path, m: &RunManifest) -> anyhow::Result<()> {
    let tmp = dir.join(".manifest.json.tmp");
    let mut body = serde_json::to_string_pretty(m)?;
    body.push('\n');
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, dir.join("manifest.json"))?;
    Ok(())
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn run_mine(a: &MineArgs) -> anyhow::Result<i32> {
    let started_at = now();
    let repos = read_repo_list(&a.repos)
        .with_context(|| format!("cannot read repo list {}", a.repos.display()))?;
    let cfg = MinerConfig {
        keywords: a
            .keywords
            .clone()
            .unwrap_or_else(|| DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect()),
        workers: a.workers as usize,
        max_file_bytes: a.max_file_bytes,
        output_path: a.out.clone(),
        repo_list_path: a.repos.clone(),
        gzip: a.gzip,
    };
    info!(target: "mine", "repos={} workers={}", repos.len(), cfg.workers);
    let result = mine(&repos, &cfg, &STOP);
    let counts = build_datasets(&result.records, &a.out, a.gzip)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        labels_version: label_vocabulary_version().into(),
        command: "mine".into(),
        config: serde_json::to_value(&cfg)?,
        repo_list_sha256: Some(sha256_file(&a.repos)?),
        started_at,
        finished_at: now(),
        repos: result.repos.clone(),
        outputs: serde_json::to_value(&counts)?,
        interrupted: result.interrupted,
    };
    write_manifest(&a.out, &manifest)?;
    if result.interrupted {
        warn!(target: "mine", "interrupted; partial outputs written");
    }
    Ok(if result.failed_repos() > 0 || result.interrupted {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    })
}

/// Recomputes the analytic fields of a row from its diff. `None` when the
/// diff no longer yields a single statement change.
pub fn reclassify(r: &BugRecord) -> Option<BugRecord> {
    for h in parse_hunks(&r.diff) {
        if h.before.len() != h.after.len() {
            continue;
        }
        let changed: Vec<usize> = (0..h.before.len())
            .filter(|&i| !token_eq(&tokenize(&h.before[i]), &tokenize(&h.after[i])))
            .collect();
        let [i] = changed[..] else { continue };
        let bl: Vec<&str> = h.before.iter().map(String::as_str).collect();
        let al: Vec<&str> = h.after.iter().map(String::as_str).collect();
        let pair = select_from_lines(&bl, i, &al, i, CONTEXT_LINES).ok()?;
        let script = diff_trees(&pair.before, &pair.after);
        let mut out = r.clone();
        out.sstub_pattern = classify(&pair.before, &pair.after, &script);
        out.edit_ops_count = script.len();
        out.edit_script = script;
        out.before_line = h.before[i].clone();
        out.after_line = h.after[i].clone();
        out.is_typo = is_typo_fix(&out.before_line, &out.after_line);
        return Some(out);
    }
    None
}

fn run_classify(a: &ClassifyArgs) -> anyhow::Result<i32> {
    let records = read_records(&a.input)?;
    let mut failed = 0;
    let out: Vec<BugRecord> = records
        .iter()
        .map(|r| {
            reclassify(r).unwrap_or_else(|| {
                failed += 1;
                warn!(target: "classify", "repo={} msg=cannot rederive {} {}", r.project, r.commit_sha, r.file_path);
                r.clone()
            })
        })
        .collect();
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_records(&a.out, &out)?;
    info!(target: "classify", "rows={} unchanged={failed}", out.len());
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn run_editscript(a: &EditscriptArgs) -> anyhow::Result<i32> {
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()));
    let (b, af) = (parse_fragment(&read(&a.before)?), parse_fragment(&read(&a.after)?));
    let script = diff_trees(&b, &af);
    let mut stdout = std::io::stdout().lock();
    if a.types {
        for t in abstract_ops(&script) {
            writeln!(stdout, "{t}")?;
        }
    } else {
        writeln!(stdout, "{}", script.to_json())?;
    }
    Ok(EXIT_OK)
}

fn pattern_counts(records: &[BugRecord]) -> Vec<f64> {
    let t = pattern_frequencies(records);
    PATTERNS
        .iter()
        .map(|p| t.rows.iter().find(|r| r.pattern == p.as_str()).map_or(0.0, |r| r.count as f64))
        .collect()
}

fn run_analyze(a: &AnalyzeArgs) -> anyhow::Result<i32> {
    let started_at = now();
    let records = read_records(&a.input)?;
    let compare = a.compare.as_deref().map(read_records).transpose()?;
    std::fs::create_dir_all(&a.report)?;
    let report = |name: &str| a.report.join(name);

    let freq = pattern_frequencies(&records);
    let mut w = csv::Writer::from_path(report("frequencies.csv"))?;
    w.write_record(["pattern", "count", "percent"])?;
    for r in &freq.rows {
        let pct = r.percent.map(|p| format!("{p:.2}")).unwrap_or_default();
        w.write_record([r.pattern.as_str(), &r.count.to_string(), &pct])?;
    }
    w.write_record(["total_sstubs", &freq.sstub_total.to_string(), "100.00"])?;
    w.write_record(["total", &freq.total.to_string(), ""])?;
    w.flush()?;

    if let Some(other) = &compare {
        let (x, y) = (pattern_counts(&records), pattern_counts(other));
        let value = match spearman(&x, &y) {
            Ok(rho) => serde_json::json!({ "rho": rho, "n": x.len(), "x": x, "y": y }),
            Err(e) => serde_json::json!({ "error": e.to_string(), "n": x.len(), "x": x, "y": y }),
        };
        std::fs::write(report("spearman.json"), serde_json::to_string_pretty(&value)? + "\n")?;
    }

    let dist = match sstub_distance_report(&records) {
        Ok(d) => serde_json::to_value(d)?,
        Err(e @ AnalysisError::EmptyReference) => serde_json::json!({ "error": e.to_string() }),
        Err(e) => bail!(e),
    };
    std::fs::write(report("distance_report.json"), serde_json::to_string_pretty(&dist)? + "\n")?;

    let lengths = script_length_histogram(&records);
    let mut w = csv::Writer::from_path(report("length_histogram.csv"))?;
    w.write_record(["length", "count"])?;
    for (len, n) in &lengths.bins {
        w.write_record([len.to_string(), n.to_string()])?;
    }
    w.write_record(["mean".to_string(), format!("{:.4}", lengths.mean)])?;
    w.flush()?;

    let ops = operation_type_table(&records, a.top_k);
    let mut w = csv::Writer::from_path(report("op_types.csv"))?;
    w.write_record(["kind", "total", "rank", "op_type", "count"])?;
    for (kind, total) in &ops.totals {
        let top = &ops.top[kind];
        if top.is_empty() {
            w.write_record([kind.as_str(), &total.to_string(), "", "", ""])?;
        }
        for (i, (t, n)) in top.iter().enumerate() {
            w.write_record([kind.as_str(), &total.to_string(), &(i + 1).to_string(), t, &n.to_string()])?;
        }
    }
    w.flush()?;

    let typos = typo_stats(&records);
    std::fs::write(report("typo_stats.json"), serde_json::to_string_pretty(&typos)? + "\n")?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        labels_version: label_vocabulary_version().into(),
        command: "analyze".into(),
        config: serde_json::json!({
            "in": a.input, "compare": a.compare, "report": a.report, "top_k": a.top_k,
        }),
        repo_list_sha256: None,
        started_at,
        finished_at: now(),
        repos: Vec::new(),
        outputs: serde_json::json!({ "records": records.len(), "mean_script_length": lengths.mean }),
        interrupted: false,
    };
    write_manifest(&a.report, &manifest)?;
    Ok(EXIT_OK)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cmd = Cli::command().version(VERSION.get_or_init(version_string).as_str());
    let cli = match cmd.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let level = if cli.verbose {
        LevelFilter::Info
    } else if cli.quiet {
        LevelFilter::Error
    } else {
        LevelFilter::Warn
    };
    INIT.call_once(|| {
        if log::set_logger(&LOGGER).is_ok() {
            log::set_max_level(level);
        }
        let _ = ctrlc::set_handler(|| STOP.store(true, Ordering::SeqCst));
    });
    let res = match &cli.command {
        Command::Mine(a) => run_mine(a),
        Command::Classify(a) => run_classify(a),
        Command::Editscript(a) => run_editscript(a),
        Command::Analyze(a) => run_analyze(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            log::log!(Level::Error, "{e:#}");
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}
