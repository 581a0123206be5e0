//! Benchmark corpus: assembly programs with declared secrets, public inputs
//! and expected verdicts.
//!
//! The corpus ships inside the crate (see `corpus/manifest.toml`) and can
//! also be loaded from a directory with the same layout.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::havoc::{FuzzConfig, FuzzConfigError};
use crate::harness::VerifyJob;
use crate::isa::{assemble, AsmError, InputBinding, Program, PublicWrite, SecretManifest, SecretRegion, TargetSpec};
use crate::mix::Verdict;

macro_rules! embedded {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../corpus/", $file)))),*]
    };
}

const MANIFEST: &str = include_str!("../corpus/manifest.toml");

const SOURCES: &[(&str, &str)] = embedded![
    "password_nct.s",
    "password_nct_opt.s",
    "password_ct.s",
    "password_ct_opt.s",
    "modexp_nct.s",
    "modexp_nct_opt.s",
    "modexp_ct.s",
    "modexp_ct_opt.s",
    "memcmp_early_exit.s",
    "memcmp_early_exit_opt.s",
    "memcmp_ct.s",
    "memcmp_ct_opt.s",
    "table_lookup_secret_index.s",
    "table_lookup_secret_index_opt.s",
    "xor_mask_select.s",
    "xor_mask_select_opt.s",
    "fp_poly_ct.s",
    "fp_poly_ct_opt.s",
    "vec_xor_ct.s",
    "vec_xor_ct_opt.s",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest: {0}")]
    Manifest(#[from] toml::de::Error),
    #[error("{name}: source file `{file}` is missing")]
    MissingSource { name: String, file: String },
    #[error("{name}: reading `{file}`: {source}")]
    Io { name: String, file: String, source: std::io::Error },
    #[error("{name}: {source}")]
    Assembly { name: String, source: AsmError },
    #[error("{name}: {message}")]
    Invalid { name: String, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    benchmark: Vec<RawBenchmark>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBenchmark {
    name: String,
    variant: String,
    source: String,
    target: String,
    expected: String,
    provenance: String,
    secret: RawSecret,
    base_secret: RawBytes,
    #[serde(default)]
    public: Vec<RawPublic>,
    #[serde(default)]
    directed: Vec<RawBytes>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSecret {
    addr: Option<u64>,
    len: Option<usize>,
    regs: Option<Vec<u8>>,
    width: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBytes {
    ascii: Option<String>,
    hex: Option<String>,
    le64: Option<u64>,
    f64: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPublic {
    addr: Option<u64>,
    reg: Option<u8>,
    value: Option<u64>,
    #[serde(flatten)]
    bytes: RawPublicBytes,
}

#[derive(Deserialize)]
struct RawPublicBytes {
    ascii: Option<String>,
    hex: Option<String>,
}

impl RawBytes {
    fn decode(&self) -> Result<Vec<u8>, String> {
        match (&self.ascii, &self.hex, self.le64, self.f64) {
            (Some(s), None, None, None) => Ok(s.as_bytes().to_vec()),
            (None, Some(h), None, None) => hex::decode(h).map_err(|e| format!("bad hex `{h}`: {e}")),
            (None, None, Some(v), None) => Ok(v.to_le_bytes().to_vec()),
            (None, None, None, Some(x)) => Ok(x.to_bits().to_le_bytes().to_vec()),
            _ => Err("byte string needs exactly one of ascii, hex, le64, f64".into()),
        }
    }
}

/// One corpus entry.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    /// `plain` (straightforward transliteration) or `opt` (hand-optimized).
    pub variant: String,
    pub source_file: String,
    pub source: String,
    pub program: Program,
    pub target: TargetSpec,
    pub binding: InputBinding,
    pub base_secret: Vec<u8>,
    /// Hand-picked secrets for directed runs; may be empty.
    pub directed: Vec<Vec<u8>>,
    pub expected: Verdict,
    pub provenance: String,
}

impl Benchmark {
    /// `name[variant]`
    pub fn id(&self) -> String {
        format!("{}[{}]", self.name, self.variant)
    }

    pub fn job(&self, seed: u64, rounds: u64) -> Result<VerifyJob, FuzzConfigError> {
        let fuzz = FuzzConfig::new(seed, rounds, self.base_secret.clone())?;
        Ok(VerifyJob::new(self.program.clone(), self.target.clone(), self.binding.clone(), fuzz))
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// The built-in corpus.
pub fn load_corpus() -> Result<Vec<Benchmark>, CorpusError> {
    parse_corpus(MANIFEST, |file| Ok(SOURCES.iter().find(|(f, _)| *f == file).map(|(_, s)| s.to_string())))
}

/// A corpus from `dir/manifest.toml` and the sources next to it.
pub fn load_corpus_from(dir: &Path) -> Result<Vec<Benchmark>, CorpusError> {
    let manifest_path = dir.join("manifest.toml");
    let manifest = std::fs::read_to_string(&manifest_path).map_err(|source| CorpusError::Io {
        name: "corpus".into(),
        file: manifest_path.display().to_string(),
        source,
    })?;
    parse_corpus(&manifest, |file| match std::fs::read_to_string(dir.join(file)) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    })
}

fn parse_corpus<F>(manifest: &str, read: F) -> Result<Vec<Benchmark>, CorpusError>
where
    F: Fn(&str) -> std::io::Result<Option<String>>,
{
    let raw: RawManifest = toml::from_str(manifest)?;
    raw.benchmark.into_iter().map(|b| build(b, &read)).collect()
}

fn build<F>(raw: RawBenchmark, read: &F) -> Result<Benchmark, CorpusError>
where
    F: Fn(&str) -> std::io::Result<Option<String>>,
{
    let id = format!("{}[{}]", raw.name, raw.variant);
    let invalid = |message: String| CorpusError::Invalid { name: id.clone(), message };

    let source = read(&raw.source)
        .map_err(|source| CorpusError::Io { name: id.clone(), file: raw.source.clone(), source })?
        .ok_or_else(|| CorpusError::MissingSource { name: id.clone(), file: raw.source.clone() })?;
    let program = assemble(&source).map_err(|source| CorpusError::Assembly { name: id.clone(), source })?;
    if program.label(&raw.target).is_none() {
        return Err(invalid(format!("target label `{}` not found", raw.target)));
    }

    let expected: Verdict = raw.expected.parse().map_err(invalid)?;
    if expected == Verdict::Inconclusive {
        return Err(invalid("expected verdict cannot be INCONCLUSIVE".into()));
    }

    let s = &raw.secret;
    let manifest = match (s.addr, s.len, &s.regs) {
        (Some(addr), Some(len), None) => SecretManifest {
            region: SecretRegion::Memory { addr, len },
            width: s.width.unwrap_or(1),
        },
        (None, None, Some(regs)) => SecretManifest::registers(regs.clone(), s.width.unwrap_or(8)),
        _ => return Err(invalid("secret needs either addr+len or regs".into())),
    };

    let mut binding = InputBinding::new(manifest);
    for p in &raw.public {
        let write = match (p.addr, p.reg, p.value, &p.bytes.ascii, &p.bytes.hex) {
            (Some(addr), None, None, Some(a), None) => PublicWrite::Memory { addr, bytes: a.as_bytes().to_vec() },
            (Some(addr), None, None, None, Some(h)) => PublicWrite::Memory {
                addr,
                bytes: hex::decode(h).map_err(|e| invalid(format!("bad hex `{h}`: {e}")))?,
            },
            (None, Some(reg), Some(value), None, None) => PublicWrite::Register { reg, value },
            _ => return Err(invalid("public write needs addr with ascii/hex, or reg with value".into())),
        };
        binding.public_writes.push(write);
    }
    binding
        .validate(crate::isa::DEFAULT_MEMORY_SIZE)
        .map_err(|e| invalid(e.to_string()))?;

    let base_secret = raw.base_secret.decode().map_err(&invalid)?;
    if base_secret.len() != binding.secret_manifest.len() {
        return Err(invalid(format!(
            "base secret is {} bytes, manifest declares {}",
            base_secret.len(),
            binding.secret_manifest.len()
        )));
    }
    let mut directed = Vec::with_capacity(raw.directed.len());
    for d in &raw.directed {
        let bytes = d.decode().map_err(&invalid)?;
        if bytes.len() != base_secret.len() {
            return Err(invalid("directed secret length differs from the manifest".into()));
        }
        directed.push(bytes);
    }

    Ok(Benchmark {
        name: raw.name,
        variant: raw.variant,
        source_file: raw.source,
        source,
        program,
        target: TargetSpec::new(raw.target),
        binding,
        base_secret,
        directed,
        expected,
        provenance: raw.provenance,
    })
}
