//! Text and JSON renderings of a [`VerificationReport`].

use std::fmt::Write as _;

use crate::classifier::InstructionClass;
use crate::harness::{SamplingMode, VerificationReport};

/// Pretty-printed JSON with fields in declaration order.
pub fn render_json(report: &VerificationReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization is infallible")
}

/// Key/value header, the per-class diff of the violation if any, then one
/// table row per round.
pub fn render_text(report: &VerificationReport) -> String {
    let mut out = String::new();
    let c = &report.config;
    let _ = writeln!(out, "verdict: {}", report.verdict);
    let _ = writeln!(
        out,
        "mode: {}",
        match c.mode {
            SamplingMode::Fuzz => "fuzz",
            SamplingMode::Directed => "directed",
        }
    );
    let _ = writeln!(out, "target: {}", c.target);
    let _ = writeln!(out, "trace_callees: {}", c.trace_callees);
    match c.seed {
        Some(seed) => {
            let _ = writeln!(out, "seed: {seed:#x}");
        }
        None => {
            let _ = writeln!(out, "seed: -");
        }
    }
    let _ = writeln!(out, "rounds: {} requested, {} completed", c.rounds, report.rounds.len());
    let _ = writeln!(out, "budget: {}", c.budget);
    let _ = writeln!(out, "exhaustive: {}", c.exhaustive);
    let _ = writeln!(out, "isa: {}", c.isa);
    let _ = writeln!(out, "class_map: {}", c.class_map);

    match &report.violation {
        Some(v) => {
            let _ = writeln!(out, "violation: rounds {} and {} (L1 {})", v.first, v.second, v.diff.l1());
            for (class, d) in v.diff.nonzero() {
                let _ = writeln!(out, "  {:<16} {:+}", class.name(), d);
            }
        }
        None => {
            let _ = writeln!(out, "violation: none");
        }
    }

    let _ = writeln!(out);
    let _ = write!(out, "{:>5}  {:<20}", "round", "secret");
    for class in InstructionClass::ALL {
        let _ = write!(out, " {:>15}", class.column());
    }
    let _ = writeln!(out, " {:>8} {:>8}  status", "traced", "retired");
    for r in &report.rounds {
        let mut secret = r.secret.clone();
        if secret.len() > 20 {
            secret.truncate(17);
            secret.push_str("...");
        }
        let _ = write!(out, "{:>5}  {:<20}", r.round, secret);
        match (&r.mix, &r.error) {
            (Some(mix), _) => {
                for class in InstructionClass::ALL {
                    let _ = write!(out, " {:>15}", mix.get(class));
                }
                let _ = writeln!(
                    out,
                    " {:>8} {:>8}  ok",
                    r.traced.unwrap_or_default(),
                    r.retired.unwrap_or_default()
                );
            }
            (None, err) => {
                for _ in InstructionClass::ALL {
                    let _ = write!(out, " {:>15}", "-");
                }
                let _ = writeln!(out, " {:>8} {:>8}  error: {}", "-", "-", err.as_deref().unwrap_or("unknown"));
            }
        }
    }
    out
}
