use super::*;
use crate::ast::{dump_program, print_transformed_program};
use crate::exec::{check_equivalence, interpret_ast, Env, OrderContract, Trace};
use crate::frontend::parse_source;

const STRATEGIES: [UnrollStrategy; 3] = [UnrollStrategy::GuardedClone, UnrollStrategy::RemainderLoop, UnrollStrategy::StripMineHint];

fn parse(src: &str) -> Program {
    parse_source(src, "t.c").unwrap()
}

fn traces(src: &str, opts: &ShadowOptions, env: &Env) -> (Trace, Trace) {
    let p = parse(src);
    let reference = interpret_ast(&p, None, env, 1_000_000).unwrap();
    let table = transform_program(&p, opts).unwrap();
    let shadow = interpret_ast(&p, Some(&table), env, 1_000_000).unwrap();
    (reference, shadow)
}

fn with(strategy: UnrollStrategy) -> ShadowOptions {
    ShadowOptions { strategy, ..ShadowOptions::default() }
}

#[test]
fn strategy_names_round_trip() {
    for s in STRATEGIES {
        assert_eq!(UnrollStrategy::from_name(s.name()), Some(s));
    }
    assert_eq!(UnrollStrategy::from_name("fast"), None);
}

#[test]
fn partial_unroll_preserves_order_for_every_strategy() {
    for s in STRATEGIES {
        for n in 0..12 {
            for f in 1..5 {
                let src = format!("#pragma omp unroll partial({f})\nfor (int i = 3; i < 3 + {n}; ++i) body(i);");
                let (r, t) = traces(&src, &with(s), &Env::new());
                assert_eq!(r, t, "{} n={n} f={f}", s.name());
            }
        }
    }
}

#[test]
fn unroll_of_a_runtime_bound_loop() {
    let src = "int n;\n#pragma omp unroll partial(3)\nfor (int i = 0; i < n; i += 2) body(i);";
    for s in STRATEGIES {
        for n in -2..15 {
            let (r, t) = traces(src, &with(s), &Env::new().with("n", n));
            assert_eq!(r, t, "{} n={n}", s.name());
        }
    }
}

#[test]
fn full_unroll_replaces_the_loop() {
    let p = parse("#pragma omp unroll full\nfor (int i = 7; i < 17; i += 3) body(i);");
    let table = transform_program(&p, &ShadowOptions::default()).unwrap();
    let text = print_transformed_program(&p, &table);
    assert!(!text.contains("for ("), "{text}");
    let t = interpret_ast(&p, Some(&table), &Env::new(), 1000).unwrap();
    assert_eq!(t.first_args(), [7, 10, 13, 16]);
}

#[test]
fn tile_visits_tiles_in_order() {
    let src = "#pragma omp tile sizes(2, 2)\nfor (int i = 0; i < 4; ++i) for (int j = 0; j < 3; ++j) body(i, j);";
    let (r, t) = traces(src, &ShadowOptions::default(), &Env::new());
    let contract = OrderContract::TiledOrder { dims: vec![4, 3], sizes: vec![2, 2] };
    assert!(check_equivalence(&r, &t, &contract).pass);
    assert!(!check_equivalence(&r, &t, &OrderContract::ExactOrder).pass);
}

#[test]
fn generated_variables_have_derived_names() {
    let p = parse("#pragma omp unroll partial(2)\n#pragma omp tile sizes(4)\nfor (int i = 0; i < 10; ++i) body(i);");
    let table = transform_program(&p, &ShadowOptions::default()).unwrap();
    let text = print_transformed_program(&p, &table);
    for name in ["tile.f0.i", "tile.t0.i", "unrolled.iv.tile.f0.i"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn consumed_directives_are_marked() {
    let p = parse("#pragma omp for\n#pragma omp unroll partial(2)\nfor (int i = 0; i < 10; ++i) body(i);");
    let table = transform_program(&p, &ShadowOptions::default()).unwrap();
    let mut consumed: Vec<(DirectiveKind, bool)> = table.iter().map(|(_, e)| (e.kind, e.consumed)).collect();
    consumed.sort_by_key(|(_, c)| *c);
    assert_eq!(consumed, [(DirectiveKind::WorkshareFor, false), (DirectiveKind::Unroll, true)]);
}

#[test]
fn remainder_strategy_falls_back_when_consumed() {
    let src = "#pragma omp tile sizes(2)\n#pragma omp unroll partial(3)\nfor (int i = 0; i < 11; ++i) body(i);";
    let (r, t) = traces(src, &with(UnrollStrategy::RemainderLoop), &Env::new());
    assert_eq!(r, t);
}

#[test]
fn workshare_partitions_iterations() {
    for chunk in ["", " schedule(static, 2)", " schedule(static, 5)"] {
        let src = format!("#pragma omp for{chunk}\nfor (int i = 0; i < 11; ++i) body(i);");
        let (r, t) = traces(&src, &ShadowOptions::default(), &Env::new());
        assert!(check_equivalence(&r, &t, &OrderContract::Partitioned { threads: 4 }).pass, "{chunk}");
        assert!(t.events.iter().all(|e| e.thread.is_some()));
    }
}

#[test]
fn collapse_linearizes_nest() {
    let src = "#pragma omp for collapse(2)\nfor (int i = 0; i < 3; ++i) for (int j = 5; j > 0; j -= 2) body(i, j);";
    let (r, t) = traces(src, &ShadowOptions { num_threads: 1, ..ShadowOptions::default() }, &Env::new());
    assert!(check_equivalence(&r, &t, &OrderContract::ExactOrder).pass);
}

#[test]
fn outer_declared_iv_gets_final_value() {
    let src = "int i;\n#pragma omp unroll partial(2)\nfor (i = 0; i < 5; i += 2) body(i);\nbody(i);";
    let (r, t) = traces(src, &ShadowOptions::default(), &Env::new());
    assert_eq!(r.first_args(), [0, 2, 4, 6]);
    assert_eq!(r, t);
}

#[test]
fn transformation_does_not_touch_the_source_tree() {
    let p = parse("#pragma omp tile sizes(2)\nfor (int i = 0; i < 5; ++i) body(i);");
    let before = dump_program(&p, None);
    let table = transform_program(&p, &ShadowOptions::default()).unwrap();
    assert_eq!(before, dump_program(&p, None));
    assert_ne!(before, dump_program(&p, Some(&table)));
}

#[test]
fn errors_are_reported_not_panicked() {
    let p = parse("#pragma omp tile sizes(2, 2)\nfor (int i = 0; i < 5; ++i) body(i);");
    let e = transform_program(&p, &ShadowOptions::default()).unwrap_err();
    assert_eq!(e[0].message, "insufficient loop nest depth");
}
