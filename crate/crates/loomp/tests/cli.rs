use std::path::PathBuf;

use loomp::cli::{CliOutput, EXIT_DIAGNOSTICS, EXIT_OK, EXIT_USAGE};
use loomp::run_cli;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).display().to_string()
}

fn positive() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".c"))
        .collect();
    names.sort();
    names
}

fn loomp(args: &[&str]) -> CliOutput {
    run_cli(std::iter::once("loomp").chain(args.iter().copied()))
}

fn defines(name: &str) -> Vec<&'static str> {
    if name == "runtime_bound.c" {
        vec!["-D", "n=5"]
    } else {
        Vec::new()
    }
}

#[test]
fn every_corpus_program_verifies_on_both_backends() {
    let names = positive();
    assert!(names.len() >= 10);
    for name in &names {
        let path = corpus(name);
        for backend in ["shadow", "irbuilder"] {
            let mut args = vec![path.as_str(), "--verify", "--backend", backend];
            args.extend(defines(name));
            let out = loomp(&args);
            assert_eq!(out.code, EXIT_OK, "{name} {backend}: {}", out.stderr);
            assert_eq!(out.stderr.trim_end(), "verify: OK (traces equal, skeleton valid)");
        }
    }
}

#[test]
fn negative_programs_exit_with_diagnostics() {
    for (name, message) in [
        ("bad_depth.c", "insufficient loop nest depth"),
        ("full_nonconst.c", "not a compile-time constant"),
        ("over_full.c", "leaves no generated loop"),
        ("noncanonical.c", "canonical"),
        ("nonrect.c", "rectangular"),
    ] {
        let path = corpus(&format!("negative/{name}"));
        for backend in ["shadow", "irbuilder"] {
            let out = loomp(&[&path, "--emit", "trace", "--backend", backend]);
            assert_eq!(out.code, EXIT_DIAGNOSTICS, "{name}");
            assert!(out.stderr.contains(message), "{name}: {}", out.stderr);
            assert!(out.stderr.contains("error:"), "{name}: {}", out.stderr);
            assert!(out.stdout.is_empty());
        }
    }
}

#[test]
fn emit_ast_starts_at_the_loop() {
    let out = loomp(&[&corpus("strided.c"), "--emit", "ast"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.starts_with("ForStmt"), "{}", out.stdout);
}

#[test]
fn syntax_only_has_no_shadow_entries() {
    let full = loomp(&[&corpus("stacked_unroll.c"), "--emit", "transformed-ast"]);
    let bare = loomp(&[&corpus("stacked_unroll.c"), "--emit", "transformed-ast", "--syntax-only"]);
    let plain = loomp(&[&corpus("stacked_unroll.c"), "--emit", "ast"]);
    assert_eq!(bare.code, EXIT_OK);
    assert_eq!(bare.stdout, plain.stdout);
    assert_ne!(full.stdout, plain.stdout);
    assert_eq!(loomp(&[&corpus("stacked_unroll.c"), "--emit", "ir", "--syntax-only"]).code, EXIT_USAGE);
    assert_eq!(loomp(&[&corpus("stacked_unroll.c"), "--verify", "--syntax-only"]).code, EXIT_USAGE);
}

#[test]
fn syntax_only_still_runs_semantic_checks() {
    let out = loomp(&[&corpus("negative/bad_depth.c"), "--syntax-only"]);
    assert_eq!(out.code, EXIT_DIAGNOSTICS);
}

#[test]
fn stacked_unroll_traces_agree_across_backends() {
    for backend in ["shadow", "irbuilder"] {
        let out = loomp(&[&corpus("stacked_unroll.c"), "--run", "--backend", backend]);
        assert_eq!(out.stdout, "body(7)\nbody(10)\nbody(13)\nbody(16)\n");
    }
}

#[test]
fn run_writes_the_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("trace.txt");
    let out = loomp(&[&corpus("workshare_block.c"), "--run", "--trace", file.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&file).unwrap();
    let lines = loomp::trace_text::parse_trace(&text).unwrap();
    let threads: Vec<u32> = lines.iter().map(|l| l.thread.unwrap()).collect();
    assert_eq!(threads, [0, 0, 0, 1, 1, 1, 2, 2, 2, 3]);
}

#[test]
fn emitted_source_is_loop_free_after_full_unroll() {
    let out = loomp(&[&corpus("stacked_unroll.c"), "--emit", "source"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(!out.stdout.contains("for ("), "{}", out.stdout);
    assert_eq!(out.stdout.matches("body(").count(), 2 * 2);
}

#[test]
fn emitted_ir_parses_back() {
    let out = loomp(&[&corpus("tile2d.c"), "--emit", "ir", "--backend", "irbuilder"]);
    assert_eq!(out.code, EXIT_OK);
    let m = loomp::parse_ir(&out.stdout).unwrap();
    assert_eq!(loomp::print_ir(&m), out.stdout);
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(loomp(&[]).code, EXIT_USAGE);
    assert_eq!(loomp(&[&corpus("stacked_unroll.c"), "--emit", "bytecode"]).code, EXIT_USAGE);
    assert_eq!(loomp(&[&corpus("stacked_unroll.c"), "--threads", "0"]).code, EXIT_USAGE);
    assert_eq!(loomp(&[&corpus("stacked_unroll.c"), "--trace", "x.txt"]).code, EXIT_USAGE);
    assert_eq!(loomp(&[&corpus("stacked_unroll.c"), "-D", "n"]).code, EXIT_USAGE);
    let help = loomp(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("--emit"));
}

#[test]
fn missing_input_is_a_diagnostic() {
    let out = loomp(&["/nonexistent/file.c"]);
    assert_eq!(out.code, EXIT_DIAGNOSTICS);
    assert!(out.stderr.starts_with("error: cannot read"));
}

#[test]
fn unbound_variables_fail_at_run_time() {
    let out = loomp(&[&corpus("runtime_bound.c"), "--run"]);
    assert_eq!(out.code, EXIT_DIAGNOSTICS);
    assert!(out.stderr.contains("'n'"), "{}", out.stderr);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_loomp");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap();
    let ok = status(&[&corpus("stacked_unroll.c"), "--verify"]);
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8_lossy(&ok.stderr).trim_end(), "verify: OK (traces equal, skeleton valid)");
    assert_eq!(status(&[&corpus("negative/over_full.c")]).status.code(), Some(EXIT_DIAGNOSTICS));
    assert_eq!(status(&["--bogus"]).status.code(), Some(EXIT_USAGE));
}
