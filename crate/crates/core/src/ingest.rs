//! Foreign trace files and mix-vector CSVs.
//!
//! A trace file is one `index mnemonic` record per line, indices strictly
//! increasing from 0, with an optional `# arch: <tag>` header. Mnemonics are
//! classified through a caller-supplied [`MnemonicMap`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::classifier::MnemonicMap;
use crate::trace::{Mnemonic, Trace, TraceEvent};

pub use crate::mix::{parse_mix_csv, write_mix_csv, CsvError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("line {line}: expected `index mnemonic`")]
    Malformed { line: usize },
    #[error("line {line}: unknown mnemonic `{mnemonic}`")]
    UnknownMnemonic { line: usize, mnemonic: String },
    #[error("line {line}: index {index} does not follow {previous:?}")]
    NonMonotonic { line: usize, index: u64, previous: Option<u64> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForeignTrace {
    pub arch: Option<String>,
    pub trace: Trace,
}

pub fn parse_trace(text: &str, map: &MnemonicMap) -> Result<ForeignTrace, IngestError> {
    let mut arch = None;
    let mut trace = Trace::new();
    let mut previous: Option<u64> = None;
    let mut interned: HashMap<&str, Arc<str>> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(tag) = comment.trim().strip_prefix("arch:") {
                arch = Some(tag.trim().to_string());
            }
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(index), Some(mnemonic), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(IngestError::Malformed { line });
        };
        let index: u64 = index.parse().map_err(|_| IngestError::Malformed { line })?;
        let in_order = match previous {
            None => index == 0,
            Some(p) => index > p,
        };
        if !in_order {
            return Err(IngestError::NonMonotonic { line, index, previous });
        }
        previous = Some(index);

        let class = map
            .classify(mnemonic)
            .map_err(|_| IngestError::UnknownMnemonic { line, mnemonic: mnemonic.to_string() })?;
        let name = interned.entry(mnemonic).or_insert_with(|| Arc::from(mnemonic)).clone();
        trace.push(TraceEvent { index: index as usize, mnemonic: Mnemonic::Foreign(name), class });
    }
    Ok(ForeignTrace { arch, trace })
}

/// Dumps a trace in the foreign format, renumbering records from 0.
pub fn write_trace(trace: &Trace, arch: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(tag) = arch {
        let _ = writeln!(out, "# arch: {tag}");
    }
    for (i, event) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i} {}", event.mnemonic);
    }
    out
}
