//! End-to-end verification runs.
//!
//! For every sampled secret: inject it, execute the target, reduce the trace
//! to a mix vector. Then compare all vectors. A single differing pair is a
//! counterexample; agreement across the sample is only evidence.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classifier::BUILTIN_ARCH;
use crate::havoc::{next_secret, FuzzConfig, FuzzConfigError};
use crate::isa::{run_with_secret, BindingError, InputBinding, Program, TargetSpec, DEFAULT_BUDGET, DEFAULT_MEMORY_SIZE, ISA_VERSION};
use crate::mix::{build_mix, pairwise_check, MixVector, Verdict, Violation};

pub const DEFAULT_SEED: u64 = 0x5EED;
/// Rounds for a quick detection run.
pub const QUICK_ROUNDS: u64 = 5;
/// Rounds for a constant-time confidence run.
pub const CONFIDENCE_ROUNDS: u64 = 100;

#[derive(Clone, Debug)]
pub struct VerifyJob {
    pub program: Program,
    pub target: TargetSpec,
    pub binding: InputBinding,
    pub fuzz: FuzzConfig,
    pub budget: u64,
    /// Keep running after the first violation.
    pub exhaustive: bool,
}

impl VerifyJob {
    pub fn new(program: Program, target: TargetSpec, binding: InputBinding, fuzz: FuzzConfig) -> Self {
        VerifyJob { program, target, binding, fuzz, budget: DEFAULT_BUDGET, exhaustive: false }
    }

    fn check(&self) -> Result<(), HarnessError> {
        self.binding.validate(DEFAULT_MEMORY_SIZE)?;
        if self.program.label(&self.target.function_label).is_none() {
            return Err(HarnessError::UnknownTarget(self.target.function_label.clone()));
        }
        if self.budget == 0 {
            return Err(HarnessError::ZeroBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error(transparent)]
    Binding(#[from] BindingError),
    #[error(transparent)]
    Fuzz(#[from] FuzzConfigError),
    #[error("secret {index} is {got} bytes, the manifest declares {expected}")]
    SecretLength { index: usize, expected: usize, got: usize },
    #[error("no secrets given")]
    NoSecrets,
    #[error("target label `{0}` is not defined")]
    UnknownTarget(String),
    #[error("budget must be positive")]
    ZeroBudget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Fuzz,
    Directed,
}

/// Parameters echoed into the report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    pub mode: SamplingMode,
    pub seed: Option<u64>,
    pub rounds: u64,
    pub target: String,
    pub trace_callees: bool,
    pub budget: u64,
    pub exhaustive: bool,
    pub isa: &'static str,
    pub class_map: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    /// Hex-encoded secret, for replay.
    pub secret: String,
    pub mix: Option<MixVector>,
    /// Instructions retired inside the traced scope; equals `mix.total()`.
    pub traced: Option<u64>,
    /// Instructions retired by the whole program.
    pub retired: Option<u64>,
    pub error: Option<String>,
}

impl RoundRecord {
    pub fn is_clean(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub config: ConfigEcho,
    pub violation: Option<Violation>,
    pub rounds: Vec<RoundRecord>,
}

impl VerificationReport {
    pub fn errored_rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.rounds.iter().filter(|r| !r.is_clean())
    }
}

/// Verifies the job over the havoc-generated sample.
pub fn verify(job: &VerifyJob) -> Result<VerificationReport, HarnessError> {
    job.check()?;
    job.fuzz.validate()?;
    let expected = job.binding.secret_manifest.len();
    if job.fuzz.secret_length() != expected {
        return Err(HarnessError::SecretLength { index: 0, expected, got: job.fuzz.secret_length() });
    }
    let config = echo(job, SamplingMode::Fuzz, Some(job.fuzz.seed), job.fuzz.rounds);
    Ok(run_rounds(job, job.fuzz.rounds, |r| next_secret(&job.fuzz, r), config))
}

/// Verifies the job over an explicit list of secrets. The job's fuzz
/// configuration is ignored.
pub fn verify_directed(job: &VerifyJob, secrets: &[Vec<u8>]) -> Result<VerificationReport, HarnessError> {
    job.check()?;
    if secrets.is_empty() {
        return Err(HarnessError::NoSecrets);
    }
    let expected = job.binding.secret_manifest.len();
    if let Some((index, s)) = secrets.iter().enumerate().find(|(_, s)| s.len() != expected) {
        return Err(HarnessError::SecretLength { index, expected, got: s.len() });
    }
    let n = secrets.len() as u64;
    let config = echo(job, SamplingMode::Directed, None, n);
    Ok(run_rounds(job, n, |r| secrets[r as usize].clone(), config))
}

fn echo(job: &VerifyJob, mode: SamplingMode, seed: Option<u64>, rounds: u64) -> ConfigEcho {
    ConfigEcho {
        mode,
        seed,
        rounds,
        target: job.target.function_label.clone(),
        trace_callees: job.target.trace_callees,
        budget: job.budget,
        exhaustive: job.exhaustive,
        isa: ISA_VERSION,
        class_map: BUILTIN_ARCH,
    }
}

fn run_round(job: &VerifyJob, round: u64, secret: Vec<u8>) -> RoundRecord {
    let hex = hex::encode(&secret);
    match run_with_secret(&job.program, &job.binding, &secret, &job.target, job.budget) {
        Ok(exec) => {
            let mix = build_mix(&exec.trace);
            RoundRecord {
                round,
                secret: hex,
                mix: Some(mix),
                traced: Some(exec.trace.len() as u64),
                retired: Some(exec.retired),
                error: None,
            }
        }
        Err(e) => RoundRecord { round, secret: hex, mix: None, traced: None, retired: None, error: Some(e.to_string()) },
    }
}

fn run_rounds<F>(job: &VerifyJob, n: u64, secret_for: F, config: ConfigEcho) -> VerificationReport
where
    F: Fn(u64) -> Vec<u8> + Sync,
{
    let records: Vec<RoundRecord> = if job.exhaustive {
        (0..n).into_par_iter().map(|r| run_round(job, r, secret_for(r))).collect()
    } else {
        let mut records = Vec::new();
        let mut reference: Option<MixVector> = None;
        for r in 0..n {
            let rec = run_round(job, r, secret_for(r));
            let differs = match (&rec.mix, &reference) {
                (Some(m), Some(reference)) => m != reference,
                (Some(m), None) => {
                    reference = Some(*m);
                    false
                }
                _ => false,
            };
            records.push(rec);
            if differs {
                break;
            }
        }
        records
    };

    let clean: Vec<(u64, MixVector)> = records.iter().filter_map(|r| r.mix.map(|m| (r.round, m))).collect();
    let outcome = pairwise_check(&clean).ok();
    let violation = outcome.as_ref().and_then(|o| o.violation);
    let any_error = records.iter().any(|r| !r.is_clean());
    let verdict = if violation.is_some() {
        Verdict::NonConstantTime
    } else if any_error {
        Verdict::Inconclusive
    } else {
        Verdict::ConstantTimeObserved
    };
    VerificationReport { verdict, config, violation, rounds: records }
}
