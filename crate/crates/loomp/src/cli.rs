use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use loomp_core::ast::{dump_program, print_program, print_transformed_program};
use loomp_core::exec::{Env, DEFAULT_STEP_LIMIT};
use loomp_core::shadow::UnrollStrategy;
use loomp_core::{frontend, render_diagnostic, sema, Diagnostic};

use crate::ir_text::print_ir;
use crate::pipeline::{self, Backend, PipelineError, PipelineOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Ast,
    TransformedAst,
    Ir,
    Source,
    Trace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Shadow,
    #[value(name = "irbuilder")]
    IrBuilder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    GuardedClone,
    RemainderLoop,
    StripMineHint,
}

fn define(s: &str) -> Result<(String, i128), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let value = value.trim().parse().map_err(|_| format!("'{value}' is not an integer"))?;
    Ok((name.trim().to_string(), value))
}

/// Apply OpenMP loop transformations to a mini-C program.
#[derive(Debug, Parser)]
#[command(name = "loomp", version)]
struct Args {
    /// Source file.
    input: PathBuf,
    /// What to print on stdout.
    #[arg(long, value_enum)]
    emit: Option<Emit>,
    #[arg(long, value_enum, default_value = "shadow")]
    backend: BackendArg,
    /// How the shadow backend expands partial unrolling.
    #[arg(long, value_enum, default_value = "strip-mine-hint")]
    unroll_strategy: StrategyArg,
    /// Factor for `unroll` without clauses whose loop is consumed.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=1 << 20))]
    heuristic_factor: u64,
    /// Simulated threads for worksharing loops.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=1024))]
    threads: u32,
    /// Check the transformed program against the original and verify IR skeletons.
    #[arg(long)]
    verify: bool,
    /// Stop after semantic analysis.
    #[arg(long)]
    syntax_only: bool,
    /// Execute the transformed program and print its trace.
    #[arg(long)]
    run: bool,
    /// Write the trace of `--run` to a file instead of stdout.
    #[arg(long, value_name = "FILE", requires = "run")]
    trace: Option<PathBuf>,
    /// Initial value of a variable declared without an initializer.
    #[arg(short = 'D', long = "define", value_name = "NAME=VALUE", value_parser = define)]
    defines: Vec<(String, i128)>,
    /// Interpreter step budget.
    #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
    step_limit: u64,
}

/// Exit code and captured output of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn diagnostics(mut self, ds: &[Diagnostic]) -> CliOutput {
        for d in ds {
            self.stderr.push_str(&render_diagnostic(d));
            self.stderr.push('\n');
        }
        self.code = EXIT_DIAGNOSTICS;
        self
    }

    fn error(mut self, e: PipelineError) -> CliOutput {
        match e {
            PipelineError::Diagnostics(ds) => self.diagnostics(&ds),
            PipelineError::Exec(e) => {
                self.stderr.push_str(&format!("error: {e}\n"));
                self.code = EXIT_DIAGNOSTICS;
                self
            }
        }
    }
}

/// Runs the driver on `args`, where the first item is the program name.
pub fn run_cli<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput { code, stdout: String::new(), stderr: text }
            } else {
                CliOutput { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let out = CliOutput::default();
    let source = match std::fs::read_to_string(&args.input) {
        Ok(s) => s,
        Err(e) => {
            return CliOutput { code: EXIT_DIAGNOSTICS, stdout: String::new(), stderr: format!("error: cannot read {}: {e}\n", args.input.display()) }
        }
    };
    let file = args.input.display().to_string();
    let program = match frontend::parse_source(&source, &file) {
        Ok(p) => p,
        Err(d) => return out.diagnostics(&[d]),
    };

    let mut env = Env::new();
    for (name, value) in &args.defines {
        env.set(name.clone(), *value);
    }
    let opts = PipelineOptions {
        backend: match args.backend {
            BackendArg::Shadow => Backend::Shadow,
            BackendArg::IrBuilder => Backend::IrBuilder,
        },
        strategy: match args.unroll_strategy {
            StrategyArg::GuardedClone => UnrollStrategy::GuardedClone,
            StrategyArg::RemainderLoop => UnrollStrategy::RemainderLoop,
            StrategyArg::StripMineHint => UnrollStrategy::StripMineHint,
        },
        heuristic_factor: args.heuristic_factor,
        threads: args.threads,
        env,
        step_limit: args.step_limit,
    };
    if let Err(ds) = sema::check_program_with(&program, &opts.shadow().sema()) {
        return out.diagnostics(&ds);
    }

    if args.syntax_only {
        return syntax_only(out, &program, &args);
    }
    match emit(out, &program, &args, &opts) {
        Ok(out) => out,
        Err((out, e)) => out.error(e),
    }
}

fn syntax_only(mut out: CliOutput, program: &loomp_core::ast::Program, args: &Args) -> CliOutput {
    if args.verify || args.run {
        out.stderr.push_str("error: --syntax-only cannot be combined with --verify or --run\n");
        out.code = EXIT_USAGE;
        return out;
    }
    match args.emit {
        None => {}
        Some(Emit::Ast | Emit::TransformedAst) => out.stdout = dump_program(program, None),
        Some(Emit::Source) => out.stdout = print_program(program),
        Some(e @ (Emit::Ir | Emit::Trace)) => {
            let name = e.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
            out.stderr.push_str(&format!("error: --emit={name} needs the program to be transformed; drop --syntax-only\n"));
            out.code = EXIT_USAGE;
        }
    }
    out
}

type Step = Result<CliOutput, (CliOutput, PipelineError)>;

fn emit(mut out: CliOutput, program: &loomp_core::ast::Program, args: &Args, opts: &PipelineOptions) -> Step {
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(e) => return Err((out, e)),
            }
        };
    }
    match args.emit {
        None => {}
        Some(Emit::Ast) => out.stdout.push_str(&dump_program(program, None)),
        Some(Emit::TransformedAst) => {
            let table = attempt!(pipeline::shadow_table(program, opts));
            out.stdout.push_str(&dump_program(program, Some(&table)));
        }
        Some(Emit::Source) => {
            let table = attempt!(pipeline::shadow_table(program, opts));
            out.stdout.push_str(&print_transformed_program(program, &table));
        }
        Some(Emit::Ir) => {
            let m = attempt!(pipeline::lowered_module(program, opts));
            out.stdout.push_str(&print_ir(&m));
        }
        Some(Emit::Trace) => {
            let t = attempt!(pipeline::backend_trace(program, opts));
            out.stdout.push_str(&t.to_string());
        }
    }
    if args.run {
        let t = attempt!(pipeline::backend_trace(program, opts));
        match &args.trace {
            Some(path) => {
                if let Err(e) = std::fs::write(path, t.to_string()) {
                    out.stderr.push_str(&format!("error: cannot write {}: {e}\n", path.display()));
                    out.code = EXIT_DIAGNOSTICS;
                    return Ok(out);
                }
            }
            None if args.emit != Some(Emit::Trace) => out.stdout.push_str(&t.to_string()),
            None => {}
        }
    }
    if args.verify {
        let v = attempt!(pipeline::verify(program, opts));
        out.stderr.push_str(&v.summary());
        out.stderr.push('\n');
        if !v.ok() {
            out.code = EXIT_VERIFY;
        }
    }
    Ok(out)
}
