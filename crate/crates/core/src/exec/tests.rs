use super::*;
use crate::frontend::parse_source;
use crate::ir::{lower_program, BasicBlock, IrModule, LowerOptions, Terminator};
use crate::types::IntType;

fn ev(args: &[i128], thread: Option<u32>) -> TraceEvent {
    TraceEvent { callee: "body".into(), args: args.iter().map(|a| Value::from_i128(IntType::INT, *a)).collect(), thread }
}

fn trace(items: &[i128]) -> Trace {
    Trace { events: items.iter().map(|a| ev(&[*a], None)).collect() }
}

fn tagged(items: &[(i128, u32)]) -> Trace {
    Trace { events: items.iter().map(|(a, t)| ev(&[*a], Some(*t))).collect() }
}

#[test]
fn exact_order_reports_first_divergence() {
    let r = check_equivalence(&trace(&[1, 2, 3]), &trace(&[1, 3, 2]), &OrderContract::ExactOrder);
    assert!(!r.pass);
    assert_eq!(r.divergence, Some(1));
    let r = check_equivalence(&trace(&[1, 2]), &trace(&[1, 2, 3]), &OrderContract::ExactOrder);
    assert_eq!(r.divergence, Some(2));
}

#[test]
fn exact_order_ignores_thread_tags() {
    let r = check_equivalence(&trace(&[1, 2]), &tagged(&[(1, 0), (2, 3)]), &OrderContract::ExactOrder);
    assert!(r.pass, "{}", r.message);
}

#[test]
fn multiset_counts_duplicates() {
    assert!(check_equivalence(&trace(&[1, 1, 2]), &trace(&[2, 1, 1]), &OrderContract::MultisetOnly).pass);
    assert!(!check_equivalence(&trace(&[1, 1, 2]), &trace(&[2, 2, 1]), &OrderContract::MultisetOnly).pass);
    assert!(!check_equivalence(&trace(&[1, 2]), &trace(&[1]), &OrderContract::MultisetOnly).pass);
}

#[test]
fn partitioned_requires_per_thread_order() {
    let r = trace(&[0, 1, 2, 3]);
    let ok = tagged(&[(2, 1), (0, 0), (3, 1), (1, 0)]);
    assert!(check_equivalence(&r, &ok, &OrderContract::Partitioned { threads: 2 }).pass);
    let swapped = tagged(&[(1, 0), (0, 0), (2, 1), (3, 1)]);
    assert!(!check_equivalence(&r, &swapped, &OrderContract::Partitioned { threads: 2 }).pass);
    let untagged = trace(&[0, 2, 1, 3]);
    assert!(!check_equivalence(&r, &untagged, &OrderContract::Partitioned { threads: 2 }).pass);
    let mixed = Trace { events: vec![ev(&[0], Some(1)), ev(&[1], Some(0)), ev(&[2], None), ev(&[3], None)] };
    assert!(check_equivalence(&r, &mixed, &OrderContract::Partitioned { threads: 2 }).pass);
    let out_of_range = tagged(&[(0, 0), (1, 0), (2, 5), (3, 5)]);
    assert!(!check_equivalence(&r, &out_of_range, &OrderContract::Partitioned { threads: 2 }).pass);
}

#[test]
fn tiled_order_uses_the_oracle() {
    let reference = trace(&(0..12).collect::<Vec<_>>());
    let candidate = trace(&[0, 1, 3, 4, 2, 5, 6, 7, 9, 10, 8, 11]);
    let contract = OrderContract::TiledOrder { dims: vec![4, 3], sizes: vec![2, 2] };
    assert!(check_equivalence(&reference, &candidate, &contract).pass);
    assert!(!check_equivalence(&reference, &reference, &contract).pass);
    let short = OrderContract::TiledOrder { dims: vec![5, 3], sizes: vec![2, 2] };
    assert_eq!(check_equivalence(&reference, &candidate, &short).divergence, None);
}

#[test]
fn trace_text_has_thread_prefixes() {
    let t = tagged(&[(4, 2)]);
    assert_eq!(t.to_string(), "(t2) body(4)\n");
}

fn lowered(src: &str) -> IrModule {
    lower_program(&parse_source(src, "t.c").unwrap(), &LowerOptions::default()).unwrap().module
}

#[test]
fn ir_interpreter_matches_ast_interpreter() {
    let src = "int n;\nlong s = 0;\nfor (int i = n; i >= -4; i -= 3) { s += i; if (i % 2 != 0 && s < 10) body(i, s); }\nbody(s);";
    let p = parse_source(src, "t.c").unwrap();
    for n in [-10, 0, 7, 20] {
        let env = Env::new().with("n", n);
        let a = interpret_ast(&p, None, &env, 10_000).unwrap();
        let b = interpret_ir(&lowered(src), &env, 10_000).unwrap();
        assert_eq!(a, b, "n={n}");
    }
}

#[test]
fn ir_interpreter_errors() {
    let m = lowered("int d;\nbody(1 / d);");
    let e = interpret_ir(&m, &Env::new().with("d", 0), 100).unwrap_err();
    assert!(matches!(e, ExecError::Eval { error: EvalError::DivisionByZero, .. }));
    let e = interpret_ir(&m, &Env::new(), 100).unwrap_err();
    assert!(matches!(e, ExecError::Eval { error: EvalError::Unbound(ref n), .. } if n == "d"));

    let m = lowered("for (int i = 0; i < 1; i += 0) body(i);");
    assert_eq!(interpret_ir(&m, &Env::new(), 50), Err(ExecError::StepLimit(50)));

    let open = IrModule::from_parts(
        vec![BasicBlock { label: "entry".into(), insts: Vec::new(), term: None }],
        crate::ir::BlockId(0),
        Vec::new(),
        Vec::new(),
    );
    assert!(matches!(interpret_ir(&open, &Env::new(), 10), Err(ExecError::Malformed(_))));
}

#[test]
fn logical_operators_short_circuit_in_ir() {
    let src = "int d;\nif (d != 0 && 10 / d > 2) body(d);\nbody(d == 0 || 10 % d == 0 ? 1 : 0);";
    for d in [0, 2, 3] {
        let p = parse_source(src, "t.c").unwrap();
        let env = Env::new().with("d", d);
        let a = interpret_ast(&p, None, &env, 100).unwrap();
        assert_eq!(interpret_ir(&lowered(src), &env, 100).unwrap(), a, "d={d}");
    }
}

#[test]
fn halt_ends_the_run() {
    let m = IrModule::from_parts(
        vec![BasicBlock { label: "entry".into(), insts: Vec::new(), term: Some(Terminator::Halt) }],
        crate::ir::BlockId(0),
        Vec::new(),
        Vec::new(),
    );
    assert!(interpret_ir(&m, &Env::new(), 1).unwrap().is_empty());
}
