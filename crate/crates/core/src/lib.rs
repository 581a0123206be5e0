//! Constant-time verification by instruction-mix comparison.
//!
//! A target function is executed on a deterministic tracing VM under many
//! secret inputs. Each retired instruction is classified into one of thirteen
//! classes, each trace is reduced to a per-class count vector, and any two
//! differing vectors are reported as a constant-time violation.

pub mod classifier;
pub mod corpus;
pub mod harness;
pub mod havoc;
pub mod ingest;
pub mod isa;
pub mod mix;
pub mod report;
pub mod trace;

pub use classifier::{builtin_map, classify, InstructionClass, MnemonicMap};
pub use harness::{verify, verify_directed, VerificationReport, VerifyJob};
pub use havoc::FuzzConfig;
pub use isa::{assemble, execute, InputBinding, Program, SecretManifest, TargetSpec};
pub use mix::{build_mix, diff, pairwise_check, MixDiff, MixVector, Verdict};
pub use trace::{Trace, TraceEvent};
