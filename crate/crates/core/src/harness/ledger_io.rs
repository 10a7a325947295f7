//! Line-oriented ledger persistence.
//!
//! One worker per line:
//!
//! ```text
//! worker=3 accumulated=0.62 n_good=2 n_bad=0 history=0:0.91:0.27,1:0.93:0.25
//! ```
//!
//! `history` entries are `task:internal:alpha`. Blank lines and lines starting
//! with `#` are ignored. Numbers are written in shortest round-trip form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::reputation::{HistoryEntry, ReputationLedger, ReputationRecord};
use crate::{Error, Result, Scalar, WorkerId};

pub fn format_ledger<T: Scalar>(ledger: &ReputationLedger<T>) -> String {
    let mut out = String::new();
    for (w, r) in &ledger.records {
        let history: Vec<String> = r
            .history
            .iter()
            .map(|h| {
                format!(
                    "{}:{:?}:{:?}",
                    h.task,
                    h.internal.as_f64(),
                    h.alpha.as_f64()
                )
            })
            .collect();
        writeln!(
            out,
            "worker={} accumulated={:?} n_good={} n_bad={} history={}",
            w,
            r.accumulated.as_f64(),
            r.n_good,
            r.n_bad,
            history.join(",")
        )
        .expect("write to string");
    }
    out
}

pub fn parse_ledger<T: Scalar>(text: &str, path: &Path) -> Result<ReputationLedger<T>> {
    let mut ledger = ReputationLedger::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let (worker, record) = parse_record::<T>(trimmed).map_err(err)?;
        if ledger.records.insert(worker, record).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("duplicate worker {worker}"),
            });
        }
    }
    Ok(ledger)
}

fn parse_record<T: Scalar>(
    line: &str,
) -> std::result::Result<(WorkerId, ReputationRecord<T>), String> {
    const KEYS: [&str; 5] = ["worker", "accumulated", "n_good", "n_bad", "history"];
    let mut values: [Option<&str>; 5] = [None; 5];
    for field in line.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| format!("field `{field}` is not key=value"))?;
        let slot = KEYS
            .iter()
            .position(|key| *key == k)
            .ok_or_else(|| format!("unknown key `{k}`"))?;
        if values[slot].replace(v).is_some() {
            return Err(format!("key `{k}` repeated"));
        }
    }
    let get = |i: usize| values[i].ok_or_else(|| format!("missing `{}`", KEYS[i]));
    let worker: u32 = get(0)?.parse().map_err(|e| format!("worker: {e}"))?;
    let accumulated = parse_scalar::<T>(get(1)?, "accumulated")?;
    let n_good: u32 = get(2)?.parse().map_err(|e| format!("n_good: {e}"))?;
    let n_bad: u32 = get(3)?.parse().map_err(|e| format!("n_bad: {e}"))?;
    let mut history = Vec::new();
    let h = get(4)?;
    if !h.is_empty() {
        for entry in h.split(',') {
            let parts: Vec<&str> = entry.split(':').collect();
            if parts.len() != 3 {
                return Err(format!(
                    "history entry `{entry}` is not task:internal:alpha"
                ));
            }
            history.push(HistoryEntry {
                task: parts[0].parse().map_err(|e| format!("history task: {e}"))?,
                internal: parse_scalar(parts[1], "history internal")?,
                alpha: parse_scalar(parts[2], "history alpha")?,
            });
        }
    }
    Ok((
        WorkerId(worker),
        ReputationRecord {
            accumulated,
            n_good,
            n_bad,
            history,
        },
    ))
}

fn parse_scalar<T: Scalar>(s: &str, what: &str) -> std::result::Result<T, String> {
    let v: f64 = s.parse().map_err(|e| format!("{what}: {e}"))?;
    if !v.is_finite() {
        return Err(format!("{what}: not finite"));
    }
    Ok(T::lit(v))
}

/// Reads a ledger file. A missing or empty file is an empty ledger.
pub fn read_ledger<T: Scalar>(path: &Path) -> Result<ReputationLedger<T>> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_ledger(&text, path),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(ReputationLedger::new()),
        Err(e) => Err(e.into()),
    }
}

pub fn write_ledger<T: Scalar>(path: &Path, ledger: &ReputationLedger<T>) -> Result<()> {
    std::fs::write(path, format_ledger(ledger))?;
    Ok(())
}

/// In-memory parse, for callers without a file.
pub fn parse_ledger_str<T: Scalar>(text: &str) -> Result<ReputationLedger<T>> {
    parse_ledger(text, &PathBuf::from("<memory>"))
}
