//! Replays of recorded two-input mix vectors for the password and modexp
//! case studies.

mod common;

use common::{fixture_names, load_fixture};
use ctmix_core::{diff, pairwise_check, InstructionClass as C, Verdict};

fn replay(table: &str) {
    for (name, ct) in fixture_names() {
        let rows = load_fixture(table, &name);
        assert_eq!(rows.len(), 2, "{table}/{name}");
        let outcome = pairwise_check(&rows).unwrap();
        let d = diff(&rows[0].1, &rows[1].1);
        if ct {
            assert_eq!(outcome.verdict, Verdict::ConstantTimeObserved, "{table}/{name}");
            assert_eq!(d.l1(), 0);
        } else {
            assert_eq!(outcome.verdict, Verdict::NonConstantTime, "{table}/{name}");
            assert_eq!(outcome.violation.unwrap().diff, d);
        }
        // Only the five integer/control columns are populated.
        for row in &rows {
            for class in [C::LoadFloat, C::LoadVector, C::StoreFloat, C::StoreVector, C::LightAluFloat, C::LightAluVector, C::HeavyAluFloat, C::HeavyAluVector] {
                assert_eq!(row.1.get(class), 0);
            }
        }
    }
}

fn five(d: &ctmix_core::MixDiff) -> [i64; 5] {
    [d.get(C::LoadInt), d.get(C::StoreInt), d.get(C::LightAluInt), d.get(C::HeavyAluInt), d.get(C::ControlFlow)]
}

#[test]
fn password_builds_replay() {
    replay("password");
}

#[test]
fn modexp_builds_replay() {
    replay("modexp");
}

#[test]
fn password_gcc_o0_diff() {
    let rows = load_fixture("password", "nct_gcc_O0");
    let d = diff(&rows[0].1, &rows[1].1);
    assert_eq!(five(&d), [89, 0, 21, 3, 4]);
    // 242-153 + 58-37 + 6-3 + 13-9
    assert_eq!(d.l1(), 117);
    assert!(!d.equal());
}

#[test]
fn password_clang_o2_constant_time_rows_are_equal() {
    let rows = load_fixture("password", "ct_clang_O2");
    assert_eq!(rows[0].1, rows[1].1);
    assert_eq!([rows[0].1.get(C::LoadInt), rows[0].1.get(C::LightAluInt), rows[0].1.get(C::ControlFlow)], [115, 13, 10]);
}

#[test]
fn modexp_near_misses_are_violations() {
    let rows = load_fixture("modexp", "nct_clang_O1");
    let d = diff(&rows[0].1, &rows[1].1);
    assert_eq!(five(&d), [-3, -1, 0, 0, 1]);
    assert_eq!(d.get(C::LoadInt).unsigned_abs(), 3);
    assert_eq!(d.l1(), 5);

    let rows = load_fixture("modexp", "nct_gcc_O2");
    let outcome = pairwise_check(&rows).unwrap();
    assert_eq!(outcome.verdict, Verdict::NonConstantTime);
    assert_eq!(five(&outcome.violation.unwrap().diff), [-4, -1, 0, 0, 1]);
}

#[test]
fn replay_is_order_insensitive() {
    for table in ["password", "modexp"] {
        for (name, ct) in fixture_names() {
            let mut rows = load_fixture(table, &name);
            rows.reverse();
            let verdict = pairwise_check(&rows).unwrap().verdict;
            assert_eq!(verdict == Verdict::ConstantTimeObserved, ct);
        }
    }
}
