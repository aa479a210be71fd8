use std::path::PathBuf;

use loomp::{parse_ir, print_ir};
use loomp_core::exec::{interpret_ir, Env};
use loomp_core::frontend::parse_source;
use loomp_core::ir::{lower_program, verify_skeleton, LowerOptions};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "c").then(|| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        })
        .collect();
    out.sort();
    out
}

#[test]
fn lowered_corpus_round_trips_through_text() {
    let env = Env::new().with("n", 5);
    for (name, src) in corpus() {
        let p = parse_source(&src, &name).unwrap();
        let m = lower_program(&p, &LowerOptions::default()).unwrap().module;
        let text = print_ir(&m);
        let back = parse_ir(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(print_ir(&back), text, "{name}");
        assert_eq!(interpret_ir(&back, &env, 1_000_000), interpret_ir(&m, &env, 1_000_000), "{name}");
        assert_eq!(back.valid_loops().len(), m.valid_loops().len(), "{name}");
        for id in back.valid_loops() {
            assert!(verify_skeleton(&back, &back.loop_info(id).unwrap()).is_empty(), "{name}");
        }
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let e = parse_ir("block entry:\n  %0 = const int 1\n  jump nowhere\n").unwrap_err();
    assert_eq!(e.line, 3);
    let e = parse_ir("block entry:\n  %0 = frobnicate int 1\n  halt\n").unwrap_err();
    assert_eq!(e.line, 2);
}
