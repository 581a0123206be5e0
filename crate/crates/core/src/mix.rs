//! Instruction-mix vectors and the zero-distance constant-time criterion.
//!
//! A trace is reduced to per-class counts. Two traces are equivalent when
//! their count vectors are identical, i.e. when the L1 distance between them
//! is zero. Instruction order is deliberately ignored.

use std::fmt;
use std::ops::{Add, Index};

use serde::ser::{SerializeMap, SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::InstructionClass;
use crate::trace::Trace;

const N: usize = InstructionClass::COUNT;

/// Per-class instruction counts of one trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MixVector {
    counts: [u64; N],
}

impl MixVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [u64; N]) -> Self {
        MixVector { counts }
    }

    pub fn counts(&self) -> &[u64; N] {
        &self.counts
    }

    pub fn get(&self, class: InstructionClass) -> u64 {
        self.counts[class.index()]
    }

    pub fn set(&mut self, class: InstructionClass, value: u64) {
        self.counts[class.index()] = value;
    }

    pub fn increment(&mut self, class: InstructionClass) {
        self.counts[class.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl Index<InstructionClass> for MixVector {
    type Output = u64;

    fn index(&self, class: InstructionClass) -> &u64 {
        &self.counts[class.index()]
    }
}

impl Add for MixVector {
    type Output = MixVector;

    fn add(self, rhs: MixVector) -> MixVector {
        let mut counts = self.counts;
        for (c, r) in counts.iter_mut().zip(rhs.counts) {
            *c += r;
        }
        MixVector { counts }
    }
}

impl fmt::Display for MixVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for class in InstructionClass::ALL {
            let n = self.get(class);
            if n == 0 {
                continue;
            }
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{class}={n}")?;
            first = false;
        }
        if first {
            f.write_str("(empty)")?;
        }
        Ok(())
    }
}

/// Counts the classes of the events in `trace`.
pub fn build_mix(trace: &Trace) -> MixVector {
    let mut v = MixVector::zero();
    for event in trace {
        v.increment(event.class);
    }
    v
}

/// Signed per-class difference `a - b` and its L1 norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MixDiff {
    per_class: [i64; N],
    l1: u64,
}

impl MixDiff {
    pub fn per_class(&self) -> &[i64; N] {
        &self.per_class
    }

    pub fn get(&self, class: InstructionClass) -> i64 {
        self.per_class[class.index()]
    }

    pub fn l1(&self) -> u64 {
        self.l1
    }

    /// Trace equivalence: the vectors are identical.
    pub fn equal(&self) -> bool {
        self.l1 == 0
    }

    /// Non-zero entries, in class order.
    pub fn nonzero(&self) -> impl Iterator<Item = (InstructionClass, i64)> + '_ {
        InstructionClass::ALL
            .into_iter()
            .map(|c| (c, self.get(c)))
            .filter(|&(_, d)| d != 0)
    }
}

/// Serialized as an object keyed by CSV column name, in class order.
impl Serialize for MixVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(N))?;
        for class in InstructionClass::ALL {
            map.serialize_entry(class.column(), &self.get(class))?;
        }
        map.end()
    }
}

impl Serialize for MixDiff {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct PerClass<'a>(&'a [i64; N]);
        impl Serialize for PerClass<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(N))?;
                for class in InstructionClass::ALL {
                    map.serialize_entry(class.column(), &self.0[class.index()])?;
                }
                map.end()
            }
        }
        let mut s = serializer.serialize_struct("MixDiff", 2)?;
        s.serialize_field("per_class", &PerClass(&self.per_class))?;
        s.serialize_field("l1", &self.l1)?;
        s.end()
    }
}

pub fn diff(a: &MixVector, b: &MixVector) -> MixDiff {
    let mut per_class = [0i64; N];
    let mut l1 = 0u64;
    for ((d, &x), &y) in per_class.iter_mut().zip(&a.counts).zip(&b.counts) {
        *d = (x as i128 - y as i128) as i64;
        l1 += x.abs_diff(y);
    }
    MixDiff { per_class, l1 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ConstantTimeObserved,
    NonConstantTime,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ConstantTimeObserved => "CONSTANT_TIME_OBSERVED",
            Verdict::NonConstantTime => "NON_CONSTANT_TIME",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Verdict::ConstantTimeObserved, Verdict::NonConstantTime, Verdict::Inconclusive]
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown verdict `{s}`"))
    }
}

/// The earliest pair of rounds whose vectors differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub first: u64,
    pub second: u64,
    pub diff: MixDiff,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseOutcome {
    pub verdict: Verdict,
    pub violation: Option<Violation>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no mix vectors to compare")]
pub struct EmptyInput;

/// Checks that every labelled vector is identical.
///
/// Vector equality is an equivalence relation, so comparing each vector with
/// the first one decides all pairs. The first `j` whose vector differs from
/// vector 0 yields pair `(0, j)`, which is also the lexicographically smallest
/// violating pair.
pub fn pairwise_check(vectors: &[(u64, MixVector)]) -> Result<PairwiseOutcome, EmptyInput> {
    let ((first_label, reference), rest) = vectors.split_first().ok_or(EmptyInput)?;
    for (label, v) in rest {
        let d = diff(reference, v);
        if !d.equal() {
            return Ok(PairwiseOutcome {
                verdict: Verdict::NonConstantTime,
                violation: Some(Violation { first: *first_label, second: *label, diff: d }),
            });
        }
    }
    Ok(PairwiseOutcome { verdict: Verdict::ConstantTimeObserved, violation: None })
}

/// Header of the mix-vector CSV format.
pub fn csv_header() -> Vec<&'static str> {
    std::iter::once("round")
        .chain(InstructionClass::ALL.iter().map(|c| c.column()))
        .collect()
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount { line: u64, expected: usize, found: usize },
    #[error("line {line}, column `{column}`: `{value}` is not a non-negative integer")]
    BadInteger { line: u64, column: &'static str, value: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Parses the mix-vector CSV. Rows keep file order.
pub fn parse_mix_csv(text: &str) -> Result<Vec<(u64, MixVector)>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = csv_header();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if !seen_header {
            let found: Vec<&str> = record.iter().collect();
            if found != header {
                return Err(CsvError::Header { expected: header.join(","), found: found.join(",") });
            }
            seen_header = true;
            continue;
        }
        if record.len() != header.len() {
            return Err(CsvError::ColumnCount { line, expected: header.len(), found: record.len() });
        }
        let mut values = [0u64; N + 1];
        for (i, (field, column)) in record.iter().zip(&header).enumerate() {
            values[i] = field
                .parse::<u64>()
                .map_err(|_| CsvError::BadInteger { line, column, value: field.to_string() })?;
        }
        let mut counts = [0u64; N];
        counts.copy_from_slice(&values[1..]);
        rows.push((values[0], MixVector::from_counts(counts)));
    }
    if !seen_header {
        return Err(CsvError::Header { expected: header.join(","), found: String::new() });
    }
    Ok(rows)
}

/// Renders vectors in the format read by [`parse_mix_csv`].
pub fn write_mix_csv(rows: &[(u64, MixVector)]) -> String {
    let mut out = csv_header().join(",");
    out.push('\n');
    for (round, v) in rows {
        out.push_str(&round.to_string());
        for c in v.counts() {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}
