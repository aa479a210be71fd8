//! Running a checked program through either backend, and the `--verify`
//! check that compares it against the untransformed program.

use loomp_core::ast::{DirectiveKind, Program, Stmt, StmtKind};
use loomp_core::exec::{self, check_equivalence, AstRun, Env, ExecError, OrderContract, Report, Trace};
use loomp_core::ir::{lower_program, verify_skeleton, IrModule, LowerOptions};
use loomp_core::sema;
use loomp_core::shadow::{self, ShadowOptions, ShadowTable, UnrollStrategy};
use loomp_core::Diagnostic;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Shadow,
    IrBuilder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub backend: Backend,
    pub strategy: UnrollStrategy,
    pub heuristic_factor: u64,
    pub threads: u32,
    pub env: Env,
    pub step_limit: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            backend: Backend::Shadow,
            strategy: UnrollStrategy::StripMineHint,
            heuristic_factor: 2,
            threads: 4,
            env: Env::new(),
            step_limit: exec::DEFAULT_STEP_LIMIT,
        }
    }
}

impl PipelineOptions {
    pub fn shadow(&self) -> ShadowOptions {
        ShadowOptions { strategy: self.strategy, heuristic_factor: self.heuristic_factor, num_threads: self.threads }
    }

    pub fn lower(&self) -> LowerOptions {
        LowerOptions { heuristic_factor: self.heuristic_factor, num_threads: self.threads }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Diagnostics(Vec<Diagnostic>),
    #[error("{0}")]
    Exec(#[from] ExecError),
}

impl From<Vec<Diagnostic>> for PipelineError {
    fn from(d: Vec<Diagnostic>) -> Self {
        PipelineError::Diagnostics(d)
    }
}

pub fn shadow_table(p: &Program, opts: &PipelineOptions) -> Result<ShadowTable, PipelineError> {
    Ok(shadow::transform_program(p, &opts.shadow())?)
}

pub fn lowered_module(p: &Program, opts: &PipelineOptions) -> Result<IrModule, PipelineError> {
    Ok(lower_program(p, &opts.lower())?.module)
}

/// Trace of the untransformed program, with loop statistics.
pub fn reference_run(p: &Program, opts: &PipelineOptions) -> Result<AstRun, PipelineError> {
    Ok(exec::interpret_ast_with_stats(p, None, &opts.env, opts.step_limit)?)
}

/// Trace of the program transformed by the selected backend.
pub fn backend_trace(p: &Program, opts: &PipelineOptions) -> Result<Trace, PipelineError> {
    match opts.backend {
        Backend::Shadow => {
            let table = shadow_table(p, opts)?;
            Ok(exec::interpret_ast(p, Some(&table), &opts.env, opts.step_limit)?)
        }
        Backend::IrBuilder => Ok(exec::interpret_ir(&lowered_module(p, opts)?, &opts.env, opts.step_limit)?),
    }
}

fn directives(p: &Program) -> Vec<&Stmt> {
    let mut out = Vec::new();
    p.walk(&mut |s| {
        if matches!(s.kind, StmtKind::Directive(_)) {
            out.push(s);
        }
    });
    out
}

/// Trip counts of the first `depth` loops of the nest under `s`, read off
/// the reference run.
fn nest_dims(s: &Stmt, depth: usize, run: &AstRun) -> Option<Vec<u64>> {
    let nest = sema::perfect_nest(s);
    let mut dims = Vec::new();
    let mut outer = 1u64;
    for l in nest.get(..depth)? {
        let total = run.iterations.get(&l.id).copied().unwrap_or(0);
        let n = total.checked_div(outer).unwrap_or(0);
        dims.push(n);
        outer = outer.saturating_mul(n);
    }
    Some(dims)
}

/// The ordering a correct transformation of `p` must preserve.
///
/// Unrolling and collapsing keep the exact order. Worksharing keeps each
/// thread's order. A single tile directive, possibly under unroll
/// directives, must match the tiled order of its nest; any other use of
/// tiling is only checked as a multiset.
pub fn contract_for(p: &Program, run: &AstRun, threads: u32) -> OrderContract {
    let all = directives(p);
    let kinds: Vec<DirectiveKind> = all.iter().filter_map(|s| s.as_directive()).map(|d| d.kind).collect();
    if kinds.contains(&DirectiveKind::Tile) {
        let roots: Vec<&Stmt> = p.stmts.iter().filter(|s| s.as_directive().is_some()).collect();
        if roots.len() != 1 || all.len() != directives_in(roots[0]) || kinds.contains(&DirectiveKind::WorkshareFor) {
            return OrderContract::MultisetOnly;
        }
        let mut cur = roots[0];
        let mut tile = None;
        while let Some(d) = cur.as_directive() {
            match d.kind {
                DirectiveKind::Unroll if tile.is_none() => {}
                DirectiveKind::Tile if tile.is_none() => tile = Some(d),
                _ => return OrderContract::MultisetOnly,
            }
            cur = &d.associated;
        }
        let Some(Ok(sizes)) = tile.map(sema::tile_sizes) else { return OrderContract::MultisetOnly };
        let mut inside = 0;
        cur.walk(&mut |x| inside += run.calls.get(&x.id).copied().unwrap_or(0));
        if inside != run.trace.len() as u64 {
            return OrderContract::MultisetOnly;
        }
        return match nest_dims(cur, sizes.len(), run) {
            Some(dims) => OrderContract::TiledOrder { dims, sizes },
            None => OrderContract::MultisetOnly,
        };
    }
    if kinds.contains(&DirectiveKind::WorkshareFor) {
        return OrderContract::Partitioned { threads };
    }
    OrderContract::ExactOrder
}

fn directives_in(s: &Stmt) -> usize {
    let mut n = 0;
    s.walk(&mut |x| n += x.as_directive().is_some() as usize);
    n
}

/// Outcome of `--verify`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub contract: OrderContract,
    pub report: Report,
    /// Skeleton diagnostics of every valid loop handle in the lowered IR.
    pub skeleton: Vec<Diagnostic>,
    /// The transformed program failed to run although the reference ran.
    pub candidate_error: Option<ExecError>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.report.pass && self.skeleton.is_empty() && self.candidate_error.is_none()
    }

    pub fn summary(&self) -> String {
        if self.ok() {
            return "verify: OK (traces equal, skeleton valid)".into();
        }
        let mut lines = vec![String::from("verify: FAILED")];
        if let Some(e) = &self.candidate_error {
            lines.push(format!("  transformed program failed: {e}"));
        } else if !self.report.pass {
            lines.push(format!("  trace mismatch under {:?}: {}", self.contract, self.report.message));
        }
        for d in &self.skeleton {
            lines.push(format!("  skeleton: {}", d.message));
        }
        lines.join("\n")
    }
}

/// Verifies every valid loop handle of `m`.
pub fn check_skeletons(m: &IrModule) -> Vec<Diagnostic> {
    m.valid_loops().into_iter().flat_map(|l| verify_skeleton(m, &m.loop_info(l).expect("valid handle"))).collect()
}

/// Runs the reference and the selected backend and compares them; also
/// lowers to IR and checks every skeleton.
pub fn verify(p: &Program, opts: &PipelineOptions) -> Result<Verification, PipelineError> {
    let run = reference_run(p, opts)?;
    let contract = contract_for(p, &run, opts.threads);
    let module = lowered_module(p, opts)?;
    let skeleton = check_skeletons(&module);
    let candidate = match opts.backend {
        Backend::IrBuilder => exec::interpret_ir(&module, &opts.env, opts.step_limit),
        Backend::Shadow => {
            let table = shadow_table(p, opts)?;
            exec::interpret_ast(p, Some(&table), &opts.env, opts.step_limit)
        }
    };
    let (report, candidate_error) = match candidate {
        Ok(t) => (check_equivalence(&run.trace, &t, &contract), None),
        Err(e) => (check_equivalence(&run.trace, &Trace::default(), &contract), Some(e)),
    };
    Ok(Verification { contract, report, skeleton, candidate_error })
}
