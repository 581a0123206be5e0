//! Property checks as plain functions over a proptest runner, so the
//! property test target and the acceptance runner share one definition.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use ctmix_core::classifier::class_of;
use ctmix_core::corpus::load_corpus;
use ctmix_core::harness::DEFAULT_SEED;
use ctmix_core::havoc::{next_secret, secrets, FuzzConfig};
use ctmix_core::ingest::{parse_mix_csv, write_mix_csv};
use ctmix_core::isa::{assemble, run_with_secret, ExecError, Opcode, DEFAULT_BUDGET};
use ctmix_core::mix::{build_mix, diff, pairwise_check, MixVector, Verdict};
use ctmix_core::report::render_json;
use ctmix_core::trace::{Mnemonic, Trace, TraceEvent};
use ctmix_core::verify;

use super::{expected_trace_len, naive_tally, render_program, Step, TEMPLATES};

fn runner(cases: u32) -> TestRunner {
    // Fixed RNG so a run is reproducible; shrinking still works on failure.
    TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

pub fn trace_strategy(max_len: usize) -> impl Strategy<Value = Trace> {
    prop::collection::vec(0..Opcode::ALL.len(), 0..max_len).prop_map(|ops| {
        ops.into_iter()
            .enumerate()
            .map(|(i, k)| {
                let op = Opcode::ALL[k];
                TraceEvent { index: i, mnemonic: Mnemonic::Isa(op), class: class_of(op) }
            })
            .collect()
    })
}

pub fn vector_strategy() -> impl Strategy<Value = MixVector> {
    prop::array::uniform13(0u64..1_000_000).prop_map(MixVector::from_counts)
}

pub fn steps_strategy(max_len: usize) -> impl Strategy<Value = Vec<Step>> {
    prop::collection::vec(
        (0..TEMPLATES, any::<u8>(), any::<u8>(), any::<i16>()).prop_map(|(template, a, b, imm)| Step { template, a, b, imm }),
        0..max_len,
    )
}

pub fn permutation_invariance(cases: u32) -> Result<(), String> {
    let strategy = trace_strategy(200).prop_flat_map(|t| {
        let events = t.events().to_vec();
        (Just(t), Just(events).prop_shuffle())
    });
    run(cases, strategy, |(t, shuffled)| {
        prop_assert_eq!(build_mix(&t), build_mix(&Trace::from(shuffled)));
        Ok(())
    })
}

pub fn additivity(cases: u32) -> Result<(), String> {
    run(cases, (trace_strategy(150), trace_strategy(150)), |(a, b)| {
        prop_assert_eq!(build_mix(&a.concat(&b)), build_mix(&a) + build_mix(&b));
        prop_assert_eq!(build_mix(&a).total(), a.len() as u64);
        Ok(())
    })
}

pub fn metric_axioms(cases: u32) -> Result<(), String> {
    run(cases, (vector_strategy(), vector_strategy(), vector_strategy()), |(a, b, c)| {
        prop_assert_eq!(diff(&a, &b).l1(), diff(&b, &a).l1());
        prop_assert_eq!(diff(&a, &a).l1(), 0);
        prop_assert!(diff(&a, &c).l1() <= diff(&a, &b).l1() + diff(&b, &c).l1());
        prop_assert_eq!(diff(&a, &b).l1() == 0, a == b);
        let manual: u64 = a.counts().iter().zip(b.counts()).map(|(x, y)| x.abs_diff(*y)).sum();
        prop_assert_eq!(diff(&a, &b).l1(), manual);
        Ok(())
    })
}

pub fn equivalence_relation(cases: u32) -> Result<(), String> {
    // Draw from a small pool so equal triples actually occur.
    let pool = prop::sample::select(vec![
        MixVector::zero(),
        MixVector::from_counts([1; 13]),
        MixVector::from_counts([0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 1]),
    ]);
    run(cases, (pool.clone(), pool.clone(), pool), |(a, b, c)| {
        prop_assert!(diff(&a, &a).equal());
        prop_assert_eq!(diff(&a, &b).equal(), diff(&b, &a).equal());
        if diff(&a, &b).equal() && diff(&b, &c).equal() {
            prop_assert!(diff(&a, &c).equal());
        }
        Ok(())
    })
}

/// The first-vector shortcut agrees with a literal all-pairs check, including
/// which pair is reported.
pub fn shortcut_matches_all_pairs(cases: u32) -> Result<(), String> {
    let pool = prop::sample::select(vec![
        MixVector::zero(),
        MixVector::from_counts([3; 13]),
        MixVector::from_counts([0, 0, 0, 0, 0, 0, 5, 0, 0, 1, 0, 0, 2]),
    ]);
    run(cases, prop::collection::vec(pool, 1..12), |vs| {
        let labelled: Vec<(u64, MixVector)> = vs.iter().copied().enumerate().map(|(i, v)| (i as u64, v)).collect();
        let outcome = pairwise_check(&labelled).unwrap();
        let mut first_bad = None;
        'outer: for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                if !diff(&vs[i], &vs[j]).equal() {
                    first_bad = Some((i as u64, j as u64));
                    break 'outer;
                }
            }
        }
        match first_bad {
            None => {
                prop_assert_eq!(outcome.verdict, Verdict::ConstantTimeObserved);
                prop_assert!(outcome.violation.is_none());
            }
            Some((i, j)) => {
                prop_assert_eq!(outcome.verdict, Verdict::NonConstantTime);
                let v = outcome.violation.unwrap();
                prop_assert_eq!((v.first, v.second), (i, j));
                prop_assert_eq!(v.diff, diff(&vs[i as usize], &vs[j as usize]));
            }
        }
        Ok(())
    })
}

pub fn csv_round_trip(cases: u32) -> Result<(), String> {
    let rows = prop::collection::vec((any::<u64>(), prop::array::uniform13(any::<u64>())), 0..20);
    run(cases, rows, |rows| {
        let rows: Vec<(u64, MixVector)> = rows.into_iter().map(|(r, c)| (r, MixVector::from_counts(c))).collect();
        prop_assert_eq!(parse_mix_csv(&write_mix_csv(&rows)).unwrap(), rows);
        Ok(())
    })
}

pub fn havoc_length_and_determinism(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 2u64..40, prop::collection::vec(any::<u8>(), 1..64), 1u32..=16)
        .prop_flat_map(|(seed, rounds, base, min)| (Just(seed), Just(rounds), Just(base), Just(min), min..=16u32));
    run(cases, strategy, |(seed, rounds, base, min, max)| {
        let cfg = FuzzConfig::new(seed, rounds, base.clone()).unwrap().with_mutation_range(min, max).unwrap();
        let first: Vec<Vec<u8>> = secrets(&cfg).collect();
        prop_assert_eq!(first.len() as u64, rounds);
        prop_assert_eq!(&first[0], &base);
        prop_assert!(first.iter().all(|s| s.len() == base.len()));
        let again: Vec<Vec<u8>> = (0..rounds).rev().map(|r| next_secret(&cfg, r)).collect();
        prop_assert!(first.iter().eq(again.iter().rev()));
        Ok(())
    })
}

pub fn havoc_coverage(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), prop::collection::vec(any::<u8>(), 2..32)), |(seed, base)| {
        let cfg = FuzzConfig::new(seed, 1000, base).unwrap();
        let all: std::collections::HashSet<Vec<u8>> = secrets(&cfg).collect();
        prop_assert!(all.len() >= 2);
        Ok(())
    })
}

/// Random straight-line programs: the VM retires exactly the expected
/// number of traced events and the mix matches the naive tally.
pub fn random_programs_match_tally(cases: u32) -> Result<(), String> {
    run(cases, (steps_strategy(60), prop::collection::vec(any::<u8>(), 8)), |(steps, secret)| {
        let src = render_program(&steps);
        let program = assemble(&src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
        let binding = ctmix_core::InputBinding::new(ctmix_core::SecretManifest::memory(0x100, 8));
        let target = ctmix_core::TargetSpec::new("target");
        let exec = run_with_secret(&program, &binding, &secret, &target, DEFAULT_BUDGET)
            .map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
        prop_assert_eq!(exec.trace.len(), expected_trace_len(&steps));
        prop_assert_eq!(*build_mix(&exec.trace).counts(), naive_tally(&exec.trace));
        // main's call and halt are the only untraced instructions.
        prop_assert_eq!(exec.retired, exec.trace.len() as u64 + 2);
        Ok(())
    })
}

/// Raising the budget never changes a successful run; lowering it below the
/// retired count always exhausts it.
pub fn budget_monotonicity(cases: u32) -> Result<(), String> {
    run(cases, (steps_strategy(40), 1u64..200), |(steps, budget)| {
        let program = assemble(&render_program(&steps)).unwrap();
        let binding = ctmix_core::InputBinding::new(ctmix_core::SecretManifest::memory(0x100, 8));
        let target = ctmix_core::TargetSpec::new("target");
        let full = run_with_secret(&program, &binding, &[0; 8], &target, DEFAULT_BUDGET).unwrap();
        match run_with_secret(&program, &binding, &[0; 8], &target, budget) {
            Ok(exec) => {
                prop_assert!(budget >= full.retired);
                prop_assert_eq!(exec.trace, full.trace);
                let more = run_with_secret(&program, &binding, &[0; 8], &target, budget + 17).unwrap();
                prop_assert_eq!(more.retired, full.retired);
            }
            Err(ExecError::BudgetExhausted { .. }) => {
                prop_assert!(budget < full.retired);
                if budget > 1 {
                    let less = run_with_secret(&program, &binding, &[0; 8], &target, budget - 1);
                    prop_assert!(matches!(less, Err(ExecError::BudgetExhausted { .. })), "{:?}", less);
                }
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        Ok(())
    })
}

/// Repeated executions of corpus programs give bitwise-identical traces and
/// final machine states. Returns the number of runs compared.
pub fn vm_determinism(runs: usize) -> Result<usize, String> {
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    let mut rng = super::Lcg(0x0DE7);
    for i in 0..runs {
        let b = &corpus[i % corpus.len()];
        let secret = rng.bytes(b.base_secret.len());
        let once = run_with_secret(&b.program, &b.binding, &secret, &b.target, DEFAULT_BUDGET);
        let twice = run_with_secret(&b.program, &b.binding, &secret, &b.target, DEFAULT_BUDGET);
        match (once, twice) {
            (Ok(x), Ok(y)) => {
                if x.trace != y.trace || x.retired != y.retired || x.exit != y.exit || !x.state.bitwise_eq(&y.state) {
                    return Err(format!("{} run {i}: executions differ", b.id()));
                }
            }
            (Err(x), Err(y)) if x == y => {}
            (x, y) => return Err(format!("{} run {i}: {x:?} vs {y:?}", b.id())),
        }
    }
    Ok(runs)
}

/// Identical jobs produce byte-identical JSON reports.
pub fn seed_reproducibility() -> Result<usize, String> {
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    for b in &corpus {
        for exhaustive in [false, true] {
            let mut job = b.job(DEFAULT_SEED, 20).map_err(|e| e.to_string())?;
            job.exhaustive = exhaustive;
            let x = render_json(&verify(&job).map_err(|e| e.to_string())?);
            let y = render_json(&verify(&job).map_err(|e| e.to_string())?);
            if x != y {
                return Err(format!("{}: reports differ (exhaustive = {exhaustive})", b.id()));
            }
        }
    }
    Ok(corpus.len() * 2)
}
