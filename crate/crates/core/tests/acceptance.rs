//! Acceptance criteria, one result line each. Run with
//! `cargo test -p ctmix-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use common::{fixture_names, load_fixture, naive_tally, props};
use ctmix_core::corpus::load_corpus;
use ctmix_core::harness::{CONFIDENCE_ROUNDS, DEFAULT_SEED, QUICK_ROUNDS};
use ctmix_core::isa::{run_with_secret, DEFAULT_BUDGET};
use ctmix_core::{build_mix, builtin_map, diff, pairwise_check, verify, InstructionClass as C, MixDiff, Verdict};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn five(d: &MixDiff) -> [i64; 5] {
    [d.get(C::LoadInt), d.get(C::StoreInt), d.get(C::LightAluInt), d.get(C::HeavyAluInt), d.get(C::ControlFlow)]
}

fn replay(table: &str) -> Result<(), String> {
    for (name, ct) in fixture_names() {
        let rows = load_fixture(table, &name);
        let outcome = pairwise_check(&rows).map_err(|e| e.to_string())?;
        let want = if ct { Verdict::ConstantTimeObserved } else { Verdict::NonConstantTime };
        ensure(outcome.verdict == want, || format!("{table}/{name}: {} instead of {want}", outcome.verdict))?;
        ensure(ct == (diff(&rows[0].1, &rows[1].1).l1() == 0), || format!("{table}/{name}: L1 disagrees"))?;
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    replay("password")?;
    let rows = load_fixture("password", "nct_gcc_O0");
    let d = diff(&rows[0].1, &rows[1].1);
    ensure(five(&d) == [89, 0, 21, 3, 4] && d.l1() == 117, || format!("gcc -O0 diff {:?}, L1 {}", five(&d), d.l1()))?;
    Ok("12 password pairs: 6 CT with L1 0, 6 NCT; gcc -O0 diff (89, 0, 21, 3, 4)".into())
}

fn criterion_2() -> Outcome {
    replay("modexp")?;
    let rows = load_fixture("modexp", "nct_clang_O1");
    let d = diff(&rows[0].1, &rows[1].1);
    ensure(five(&d) == [-3, -1, 0, 0, 1] && d.l1() == 5, || format!("clang -O1 diff {:?}", five(&d)))?;
    Ok("12 modexp pairs; clang -O1 near miss (load 1224 vs 1227) flagged with L1 5".into())
}

fn criterion_3() -> Outcome {
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    let mut n = 0;
    let mut worst = 0;
    for b in corpus.iter().filter(|b| b.expected == Verdict::NonConstantTime) {
        let job = b.job(DEFAULT_SEED, QUICK_ROUNDS).map_err(|e| e.to_string())?;
        let report = verify(&job).map_err(|e| e.to_string())?;
        ensure(report.verdict == Verdict::NonConstantTime, || format!("{}: {}", b.id(), report.verdict))?;
        worst = worst.max(report.violation.map_or(0, |v| v.second));
        n += 1;
    }
    Ok(format!("{n} non-constant-time benchmarks flagged within {QUICK_ROUNDS} rounds (latest violating round {worst})"))
}

fn criterion_4() -> Outcome {
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    let mut n = 0;
    for b in corpus.iter().filter(|b| b.expected == Verdict::ConstantTimeObserved) {
        let report = verify(&b.job(DEFAULT_SEED, CONFIDENCE_ROUNDS).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(report.verdict == Verdict::ConstantTimeObserved, || format!("{}: {}", b.id(), report.verdict))?;
        ensure(report.rounds.len() as u64 == CONFIDENCE_ROUNDS, || format!("{}: {} rounds", b.id(), report.rounds.len()))?;
        let first = report.rounds[0].mix;
        ensure(report.rounds.iter().all(|r| r.mix.is_some() && r.mix == first), || format!("{}: vectors differ", b.id()))?;
        n += 1;
    }
    Ok(format!("{n} constant-time benchmarks: {CONFIDENCE_ROUNDS} identical vectors each"))
}

fn criterion_5() -> Outcome {
    let corpus = load_corpus().map_err(|e| e.to_string())?;
    let mut rng = common::Lcg(0xACCE);
    let mut events = 0;
    for i in 0..200 {
        let b = &corpus[i % corpus.len()];
        let secret = rng.bytes(b.base_secret.len());
        let exec = run_with_secret(&b.program, &b.binding, &secret, &b.target, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        ensure(*build_mix(&exec.trace).counts() == naive_tally(&exec.trace), || format!("{} run {i}", b.id()))?;
        events += exec.trace.len();
    }
    props::random_programs_match_tally(200)?;
    Ok(format!("200 corpus executions ({events} events) and 200 random programs match the naive tally"))
}

fn criterion_6() -> Outcome {
    props::permutation_invariance(1000)?;
    props::additivity(1000)?;
    props::metric_axioms(1000)?;
    props::equivalence_relation(1000)?;
    props::shortcut_matches_all_pairs(1000)?;
    let map = builtin_map();
    let listed = common::all_mnemonics();
    for m in &listed {
        let class = map.classify(m).map_err(|e| e.to_string())?;
        let owner = common::BY_COLUMN.iter().filter(|(_, ms)| ms.contains(m)).count();
        ensure(owner == 1 && map.len() == listed.len(), || format!("{m} -> {class:?}"))?;
    }
    let runs = props::vm_determinism(50)?;
    let reports = props::seed_reproducibility()?;
    Ok(format!(
        "permutation/additivity (1000 traces), L1 axioms (1000 triples), shortcut = all pairs, \
         classifier total over {} mnemonics, {runs} deterministic VM runs, {reports} reproducible reports",
        listed.len()
    ))
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("password table replay", criterion_1, Some(Duration::from_secs(1))),
        ("modexp table replay", criterion_2, Some(Duration::from_secs(1))),
        ("non-constant-time detection within 5 rounds", criterion_3, Some(Duration::from_secs(10))),
        ("constant-time stability over 100 rounds", criterion_4, Some(Duration::from_secs(60))),
        ("mix vectors equal a naive tally", criterion_5, None),
        ("property suites", criterion_6, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} [{elapsed:.2?}] - {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{elapsed:.2?}] - {e}", i + 1);
            }
        }
    }
    println!(
        "criterion 7: N/A   not reproducible here - absolute x86 instruction counts (depend on the original \
         binary instrumentation and host compilers; covered by replaying recorded vectors, criteria 1-2) and the \
         external 22-example suite (covered by the bundled corpus, criteria 3-4)"
    );
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
