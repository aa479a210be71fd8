use loomp_core::ast::{OMPCanonicalLoop, Program};
use loomp_core::exec::{interpret_ast, Env};
use loomp_core::frontend::parse_source;
use loomp_core::sema::{analyze_canonical_loop, eval_closure};
use loomp_core::{IntType, Value};
use proptest::prelude::*;

const RELS: [&str; 4] = ["<", "<=", ">", ">="];

fn program(src: &str) -> Program {
    parse_source(src, "t.c").unwrap_or_else(|d| panic!("{src}: {d}"))
}

fn analyze(src: &str) -> OMPCanonicalLoop {
    analyze_canonical_loop(program(src).stmts.last().unwrap()).unwrap()
}

/// Iteration count of `for (iv = lb; iv rel ub; iv += step)` with exact
/// arithmetic and no overflow.
fn count(lb: i128, ub: i128, step: i128, rel: &str) -> i128 {
    let (lo, hi, inclusive) = match rel {
        "<" => (lb, ub, false),
        "<=" => (lb, ub, true),
        ">" => (ub, lb, false),
        _ => (ub, lb, true),
    };
    let span = hi - lo + inclusive as i128;
    if span <= 0 {
        0
    } else {
        (span + step.abs() - 1) / step.abs()
    }
}

fn update(step: i128) -> String {
    if step > 0 {
        format!("i += {step}")
    } else {
        format!("i -= {}", -step)
    }
}

fn distance(lp: &OMPCanonicalLoop, ty: IntType, lb: i128, ub: i128) -> u64 {
    let args = [Value::from_i128(ty, lb), Value::from_i128(ty, ub)];
    eval_closure(&lp.distance, &args).unwrap().bits()
}

#[test]
fn distance_of_a_strided_loop() {
    let lp = analyze("for (int i = 7; i < 17; i += 3) body(i);");
    assert_eq!(lp.const_trip_count(), Some(4));
    assert_eq!(distance(&lp, IntType::INT, 7, 17), 4);
}

#[test]
fn distance_of_the_full_int_range() {
    let lp = analyze("int a;\nint b;\nfor (int i = a; i < b; ++i) body(i);");
    let n = distance(&lp, IntType::INT, i32::MIN as i128, i32::MAX as i128);
    assert_eq!(n, count(i32::MIN as i128, i32::MAX as i128, 1, "<") as u64);
    assert_eq!(n, 0xffff_ffff);
}

proptest! {
    #[test]
    fn int_distance_matches_exact_count(
        lb in any::<i32>(),
        ub in any::<i32>(),
        step in 1i128..=1000,
        rel in 0usize..4,
    ) {
        let rel = RELS[rel];
        let signed = if rel.starts_with('<') { step } else { -step };
        let src = format!("int a;\nint b;\nfor (int i = a; i {rel} b; {}) body(i);", update(signed));
        let lp = analyze(&src);
        let expected = count(lb as i128, ub as i128, signed, rel);
        prop_assert_eq!(distance(&lp, IntType::INT, lb as i128, ub as i128) as i128, expected);
    }

    #[test]
    fn long_distance_matches_exact_count(
        lb in any::<i64>(),
        ub in any::<i64>(),
        step in 1i128..=1 << 40,
        rel in 0usize..4,
    ) {
        let rel = RELS[rel];
        let signed = if rel.starts_with('<') { step } else { -step };
        let src = format!("long a;\nlong b;\nfor (long i = a; i {rel} b; {}) body(i);", update(signed));
        let lp = analyze(&src);
        let expected = count(lb as i128, ub as i128, signed, rel);
        prop_assert_eq!(distance(&lp, IntType::LONG, lb as i128, ub as i128) as i128, expected);
    }

    #[test]
    fn unsigned_distance_matches_exact_count(
        lb in any::<u32>(),
        ub in any::<u32>(),
        step in 1i128..=50,
        rel in 0usize..4,
    ) {
        let rel = RELS[rel];
        let signed = if rel.starts_with('<') { step } else { -step };
        let src = format!("uint a;\nuint b;\nfor (uint i = a; i {rel} b; {}) body(i);", update(signed));
        let lp = analyze(&src);
        let expected = count(lb as i128, ub as i128, signed, rel);
        prop_assert_eq!(distance(&lp, IntType::UINT, lb as i128, ub as i128) as i128, expected);
    }

    #[test]
    fn user_value_walks_the_iteration_space(
        lb in -300i128..300,
        ub in -300i128..300,
        step in 1i128..=7,
        rel in 0usize..4,
    ) {
        let rel = RELS[rel];
        let signed = if rel.starts_with('<') { step } else { -step };
        let src = format!("for (int i = {lb}; i {rel} {ub}; {}) body(i);", update(signed));
        let lp = analyze(&src);
        let n = count(lb, ub, signed, rel);
        prop_assert_eq!(lp.const_trip_count(), Some(n as u64));
        let values: Vec<i128> = (0..n)
            .map(|k| {
                let args = [Value::from_i128(IntType::INT, lb), Value::from_i128(IntType::UINT, k)];
                eval_closure(&lp.user_value, &args).unwrap().as_i128()
            })
            .collect();
        let run = interpret_ast(&program(&src), None, &Env::new(), 100_000).unwrap();
        prop_assert_eq!(values, run.first_args());
    }
}

#[test]
fn inconsistent_directions_are_rejected() {
    for (rel, step) in [("<", -1), ("<=", -2), (">", 1), (">=", 3)] {
        let src = format!("for (int i = 0; i {rel} 5; {}) body(i);", update(step));
        let e = analyze_canonical_loop(program(&src).stmts.last().unwrap()).unwrap_err();
        assert!(e.notes.iter().any(|n| n.message.starts_with("inconsistent direction")), "{src}: {e}");
    }
}
