//! Dataset rows and jsonlines I/O.

use crate::editscript::EditScript;
use crate::sstub::SstubLabel;
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// One jsonlines row. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BugRecord {
    pub project: String,
    pub commit_sha: String,
    pub commit_message: String,
    pub file_path: String,
    pub diff: String,
    pub before_line: String,
    pub after_line: String,
    #[serde(default = "unclassified")]
    pub sstub_pattern: SstubLabel,
    #[serde(default)]
    pub edit_script: EditScript,
    #[serde(default)]
    pub edit_ops_count: usize,
    pub likely_bug: bool,
    pub in_tssb: bool,
    #[serde(default)]
    pub is_typo: bool,
}

fn unclassified() -> SstubLabel {
    SstubLabel::NoSstubSingleStatement
}

/// The serialized field names, in order.
pub const FIELDS: [&str; 13] = [
    "project",
    "commit_sha",
    "commit_message",
    "file_path",
    "diff",
    "before_line",
    "after_line",
    "sstub_pattern",
    "edit_script",
    "edit_ops_count",
    "likely_bug",
    "in_tssb",
    "is_typo",
];

/// JSON schema for one row, shipped under `docs/`.
pub const SCHEMA: &str = include_str!("../../../docs/bug_record.schema.json");

/// Checks a parsed JSON row against the published field set and types.
pub fn validate_row(v: &serde_json::Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("row is not an object")?;
    let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    let mut want = FIELDS.to_vec();
    let mut got = keys.clone();
    want.sort_unstable();
    got.sort_unstable();
    if want != got {
        return Err(format!("fields {keys:?} differ from {FIELDS:?}"));
    }
    for f in ["project", "commit_sha", "commit_message", "file_path", "diff", "before_line", "after_line", "sstub_pattern"] {
        if !obj[f].is_string() {
            return Err(format!("{f} is not a string"));
        }
    }
    for f in ["likely_bug", "in_tssb", "is_typo"] {
        if !obj[f].is_boolean() {
            return Err(format!("{f} is not a boolean"));
        }
    }
    let ops = obj["edit_script"].as_array().ok_or("edit_script is not an array")?;
    if obj["edit_ops_count"].as_u64() != Some(ops.len() as u64) {
        return Err("edit_ops_count does not match edit_script".into());
    }
    let sha = obj["commit_sha"].as_str().unwrap();
    if sha.len() != 40 || !sha.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("bad sha {sha:?}"));
    }
    obj["sstub_pattern"]
        .as_str()
        .unwrap()
        .parse::<SstubLabel>()?;
    for op in ops {
        let o = op.as_object().ok_or("edit op is not an object")?;
        let mut k: Vec<&str> = o.keys().map(String::as_str).collect();
        k.sort_unstable();
        if k != ["kind", "node", "parent", "pos", "value"] {
            return Err(format!("edit op keys {k:?}"));
        }
        if !matches!(o["kind"].as_str(), Some("INSERT" | "MOVE" | "UPDATE" | "DELETE")) {
            return Err(format!("edit op kind {}", o["kind"]));
        }
        if !o["node"].is_string() || !o["parent"].is_string() || !o["pos"].is_u64() {
            return Err("edit op field types".into());
        }
        if !(o["value"].is_string() || o["value"].is_null()) {
            return Err("edit op value".into());
        }
    }
    Ok(())
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Opens a jsonlines file, transparently decompressing `.gz`.
pub fn open_lines(path: &Path) -> io::Result<Box<dyn BufRead>> {
    let f = File::open(path)?;
    let inner: Box<dyn Read> = if is_gz(path) {
        Box::new(MultiGzDecoder::new(f))
    } else {
        Box::new(f)
    };
    Ok(Box::new(BufReader::new(inner)))
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<BugRecord>> {
    let mut out = Vec::new();
    for (i, line) in open_lines(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: BugRecord = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        out.push(r);
    }
    Ok(out)
}

fn write_rows(w: &mut impl Write, records: &[BugRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes rows to `path`, gzip-compressed when it ends in `.gz`.
pub fn write_records(path: &Path, records: &[BugRecord]) -> io::Result<()> {
    let out = BufWriter::new(File::create(path)?);
    if is_gz(path) {
        let mut enc = GzEncoder::new(out, Compression::default());
        write_rows(&mut enc, records)?;
        enc.finish()?.flush()
    } else {
        let mut out = out;
        write_rows(&mut out, records)?;
        out.flush()
    }
}
