use loomp_core::ast::{print_program, structural_equal_programs, Program};
use loomp_core::exec::{check_equivalence, interpret_ast, interpret_ir, Env, OrderContract, Trace};
use loomp_core::frontend::parse_source;
use loomp_core::ir::{lower_program, verify_skeleton, LowerOptions};
use loomp_core::shadow::{transform_program, ShadowOptions, UnrollStrategy};
use proptest::prelude::*;

const LIMIT: u64 = 1_000_000;

fn program(src: &str) -> Program {
    parse_source(src, "t.c").unwrap_or_else(|d| panic!("{src}: {d}"))
}

fn shadow_run(p: &Program, opts: &ShadowOptions) -> Trace {
    let table = transform_program(p, opts).unwrap();
    interpret_ast(p, Some(&table), &Env::new(), LIMIT).unwrap()
}

fn ir_run(p: &Program, opts: &LowerOptions) -> Trace {
    let l = lower_program(p, opts).unwrap();
    for id in l.module.valid_loops() {
        assert!(verify_skeleton(&l.module, &l.module.loop_info(id).unwrap()).is_empty());
    }
    interpret_ir(&l.module, &Env::new(), LIMIT).unwrap()
}

fn both(p: &Program, threads: u32) -> [Trace; 2] {
    [
        shadow_run(p, &ShadowOptions { num_threads: threads, ..ShadowOptions::default() }),
        ir_run(p, &LowerOptions { num_threads: threads, ..LowerOptions::default() }),
    ]
}

/// Expected owner of iteration `k` of `n`, spelled out from the schedule.
fn owner(k: u64, n: u64, threads: u64, chunk: Option<u64>) -> u32 {
    match chunk {
        Some(c) => ((k / c) % threads) as u32,
        None => {
            let per = n.div_ceil(threads);
            (0..threads).find(|t| k < (t + 1) * per).unwrap() as u32
        }
    }
}

#[test]
fn workshare_partition_is_exhaustively_correct() {
    for n in 0..=64u64 {
        for threads in 1..=8u32 {
            for chunk in std::iter::once(None).chain((1..=8).map(Some)) {
                let schedule = chunk.map(|c| format!(" schedule(static, {c})")).unwrap_or_default();
                let p = program(&format!("#pragma omp for{schedule}\nfor (int i = 0; i < {n}; ++i) body(i);"));
                for t in both(&p, threads) {
                    let mut seen: Vec<i128> = t.first_args();
                    seen.sort_unstable();
                    assert_eq!(seen, (0..n as i128).collect::<Vec<_>>());
                    for e in &t.events {
                        let k = e.args[0].as_i128() as u64;
                        assert_eq!(e.thread, Some(owner(k, n, threads as u64, chunk)), "n={n} T={threads} c={chunk:?} k={k}");
                    }
                }
            }
        }
    }
}

#[test]
fn static_block_of_ten_over_four_threads() {
    let p = program("#pragma omp for\nfor (int i = 0; i < 10; ++i) body(i);");
    for t in both(&p, 4) {
        let threads: Vec<u32> = t.events.iter().map(|e| e.thread.unwrap()).collect();
        assert_eq!(threads, [0, 0, 0, 1, 1, 1, 2, 2, 2, 3]);
    }
}

#[test]
fn collapse_delinearizes_row_major() {
    let p = program("#pragma omp for collapse(2)\nfor (int i = 0; i < 3; ++i) for (int j = 0; j < 2; ++j) body(i, j);");
    for t in both(&p, 1) {
        let e = &t.events[4];
        assert_eq!((e.args[0].as_i128(), e.args[1].as_i128()), (2, 0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collapse_matches_nested_iteration(
        dims in prop::collection::vec((-4i64..4, 0i64..5, 1i64..3), 2..=3),
    ) {
        let mut src = format!("#pragma omp for collapse({})\n", dims.len());
        let names = ["i", "j", "k"];
        for (d, (lb, n, step)) in dims.iter().enumerate() {
            let ub = lb + n * step;
            src += &format!("for (int {v} = {lb}; {v} < {ub}; {v} += {step})\n", v = names[d]);
        }
        src += &format!("body({});", names[..dims.len()].join(", "));
        let p = program(&src);
        let reference = interpret_ast(&p, None, &Env::new(), LIMIT).unwrap();
        for t in both(&p, 1) {
            let r = check_equivalence(&reference, &t, &OrderContract::ExactOrder);
            prop_assert!(r.pass, "{}: {}", src, r.message);
        }
    }

    #[test]
    fn backends_agree_on_unroll_and_tile(
        lb in -20i64..=20,
        ub in -20i64..=20,
        step in prop::sample::select(vec![-3i64, -2, -1, 1, 2, 3]),
        size in 1u64..=3,
        factor in 1u64..=3,
        strategy in prop::sample::select(vec![UnrollStrategy::GuardedClone, UnrollStrategy::RemainderLoop, UnrollStrategy::StripMineHint]),
    ) {
        let rel = if step > 0 { "<" } else { ">=" };
        let upd = if step > 0 { format!("i += {step}") } else { format!("i -= {}", -step) };
        let header = format!("for (int i = {lb}; i {rel} {ub}; {upd}) body(i);");
        let p = program(&format!("#pragma omp unroll partial({factor})\n#pragma omp tile sizes({size})\n{header}"));
        let reference = interpret_ast(&program(&header), None, &Env::new(), LIMIT).unwrap();
        let shadow = shadow_run(&p, &ShadowOptions { strategy, ..ShadowOptions::default() });
        let ir = ir_run(&p, &LowerOptions::default());
        prop_assert!(check_equivalence(&reference, &shadow, &OrderContract::ExactOrder).pass);
        prop_assert!(check_equivalence(&reference, &ir, &OrderContract::ExactOrder).pass);
    }
}

#[test]
fn printed_source_parses_back_to_the_same_tree() {
    let sources = [
        "for (int i = 7; i < 17; i += 3) body(i);",
        "int n;\nlong s = -1;\n#pragma omp unroll partial(2)\n#pragma omp tile sizes(4)\nfor (long i = -n; i <= n; i += 2) { s += i * 2; if (s > 3 && i != 0) body(i, s); else body(0); }",
        "#pragma omp for collapse(2) schedule(static, 3)\nfor (int i = 0; i < 5; ++i)\n  for (uint j = 10u; j > 0; --j)\n    body(i, j % 3u, i < 2 ? -i : !i);",
        "int i;\n#pragma omp unroll\nfor (i = 20; i > 0; i -= 3) body(i);\nbody(i);",
        "for (ulong u = 0xfffffffffffffff0ul; u != 3; ++u) body((int)u, !u, u / 2 % 5, -(u * 3), u == 7 || u <= 8);",
    ];
    for src in sources {
        let p = program(src);
        let printed = print_program(&p);
        let q = program(&printed);
        assert!(structural_equal_programs(&p, &q), "{src}\n---\n{printed}");
        assert_eq!(print_program(&q), printed);
    }
}
