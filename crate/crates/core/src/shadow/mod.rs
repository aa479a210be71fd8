//! Shadow-tree backend: every directive gets a generated statement that is
//! semantically equivalent to it, stored in a side table keyed by the
//! directive's node id. Stacked directives compose innermost first; an
//! outer directive re-analyzes the loop its inner directive generated.

mod build;
mod transforms;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::ast::fold::fold_expr;
use crate::ast::*;
use crate::diag::Diagnostic;
use crate::sema::{self, SemaOptions, UnrollDecision};
use build::Gen;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnrollStrategy {
    /// Logical loop stepping by the factor with guarded body clones.
    GuardedClone,
    /// Unguarded clones over the divisible part, then a remainder loop.
    RemainderLoop,
    /// Strip-mined loop whose inner loop carries an unroll-count hint.
    StripMineHint,
}

impl UnrollStrategy {
    pub fn name(self) -> &'static str {
        match self {
            UnrollStrategy::GuardedClone => "guarded-clone",
            UnrollStrategy::RemainderLoop => "remainder-loop",
            UnrollStrategy::StripMineHint => "strip-mine-hint",
        }
    }

    pub fn from_name(s: &str) -> Option<UnrollStrategy> {
        [UnrollStrategy::GuardedClone, UnrollStrategy::RemainderLoop, UnrollStrategy::StripMineHint]
            .into_iter()
            .find(|u| u.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShadowOptions {
    pub strategy: UnrollStrategy,
    pub heuristic_factor: u64,
    /// Simulated thread count for worksharing loops.
    pub num_threads: u32,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions { strategy: UnrollStrategy::StripMineHint, heuristic_factor: 2, num_threads: 4 }
    }
}

impl ShadowOptions {
    pub fn sema(&self) -> SemaOptions {
        SemaOptions { heuristic_factor: self.heuristic_factor }
    }
}

/// Generated code for one directive. Runs as `pre_inits`, `stmt`,
/// `finalizers` in one scope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformedStmt {
    /// Values computed once before the loop: bound snapshots and trip counts.
    pub pre_inits: Vec<Stmt>,
    pub stmt: Stmt,
    /// Final values of loop variables declared outside their loop.
    pub finalizers: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowEntry {
    pub kind: DirectiveKind,
    pub transformed: TransformedStmt,
    /// Whether an enclosing directive takes the generated loop.
    pub consumed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShadowTable {
    entries: BTreeMap<NodeId, ShadowEntry>,
    /// Program declarations followed by generated ones.
    pub decls: Vec<DeclInfo>,
}

impl ShadowTable {
    pub fn get(&self, id: NodeId) -> Option<&ShadowEntry> {
        self.entries.get(&id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &ShadowEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }
}

/// Validates the program and builds the generated statement of every
/// directive.
pub fn transform_program(p: &Program, opts: &ShadowOptions) -> Result<ShadowTable, Vec<Diagnostic>> {
    sema::check_program_with(p, &opts.sema())?;
    let mut ctx = Ctx {
        ids: p.id_gen(),
        table: ShadowTable { entries: BTreeMap::new(), decls: p.decls.clone() },
        opts: *opts,
        consumed: sema::consumed_directives(p),
    };
    let mut roots = Vec::new();
    p.walk(&mut |s| {
        if matches!(s.kind, StmtKind::Directive(_)) && !ctx.consumed.contains(&s.id) {
            roots.push(s);
        }
    });
    let mut errors = Vec::new();
    for s in roots {
        if let Err(e) = get_transformed_stmt(&mut ctx, s) {
            errors.push(e);
        }
    }
    if errors.is_empty() {
        Ok(ctx.table)
    } else {
        Err(errors)
    }
}

pub struct Ctx {
    ids: IdGen,
    table: ShadowTable,
    opts: ShadowOptions,
    consumed: alloc::collections::BTreeSet<NodeId>,
}

fn internal_error(s: &Stmt, e: Diagnostic) -> Diagnostic {
    let mut d = Diagnostic::error(s.loc.clone(), "internal error: generated loop is not in canonical form");
    d.notes.push(e);
    d
}

/// Generated statement of the directive `s`, building it (and those of
/// the directives it is stacked on) on first use.
pub fn get_transformed_stmt(ctx: &mut Ctx, s: &Stmt) -> Result<TransformedStmt, Diagnostic> {
    if let Some(e) = ctx.table.get(s.id) {
        return Ok(e.transformed.clone());
    }
    let d = s.as_directive().expect("directive statement");
    let consumed = ctx.consumed.contains(&s.id);
    let (mut pre, inner, mut fin) = match &d.associated.kind {
        StmtKind::Directive(_) => {
            let t = get_transformed_stmt(ctx, &d.associated)?;
            (t.pre_inits, t.stmt, t.finalizers)
        }
        _ => (Vec::new(), (*d.associated).clone(), Vec::new()),
    };
    let opts = ctx.opts;
    let mut g = Gen { ids: &mut ctx.ids, decls: &mut ctx.table.decls, loc: s.loc.clone() };
    let levels = |g: &mut Gen, pre: &mut Vec<Stmt>, n: usize| -> Result<Vec<Level>, Diagnostic> {
        let nest = sema::perfect_nest(&inner);
        if nest.len() < n {
            return Err(Diagnostic::error(s.loc.clone(), "insufficient loop nest depth"));
        }
        nest[..n]
            .iter()
            .map(|l| {
                let c = sema::analyze_canonical_loop(l).map_err(|e| internal_error(s, e))?;
                Ok(Level::prepare(g, c, pre))
            })
            .collect()
    };
    let stmt = match d.kind {
        DirectiveKind::Tile => {
            let sizes = sema::tile_sizes(d)?;
            let lv = levels(&mut g, &mut pre, sizes.len())?;
            fin.extend(nest_finalizers(&mut g, &lv));
            transforms::tile(&mut g, &lv, &sizes)
        }
        DirectiveKind::Unroll => match sema::unroll_decision(d, consumed, &opts.sema())? {
            UnrollDecision::Full => {
                let lv = levels(&mut g, &mut pre, 1)?;
                fin.extend(lv[0].finalizer(&mut g));
                transforms::unroll_full(&mut g, &lv[0])?
            }
            UnrollDecision::Partial { factor, .. } => {
                let lv = levels(&mut g, &mut pre, 1)?;
                fin.extend(lv[0].finalizer(&mut g));
                let strategy = match opts.strategy {
                    UnrollStrategy::RemainderLoop if consumed => UnrollStrategy::GuardedClone,
                    other => other,
                };
                transforms::unroll_partial(&mut g, &lv[0], factor, strategy)
            }
            UnrollDecision::Defer => {
                g.stmt(StmtKind::Attributed { attr: LoopHintAttr::UnrollEnable, stmt: alloc::boxed::Box::new(inner.clone()) })
            }
        },
        DirectiveKind::WorkshareFor => {
            let (collapse, chunk) = sema::workshare_params(d)?;
            let lv = levels(&mut g, &mut pre, collapse as usize)?;
            fin.extend(nest_finalizers(&mut g, &lv));
            transforms::workshare(&mut g, &mut pre, &lv, chunk, opts.num_threads)
        }
    };
    let transformed = TransformedStmt { pre_inits: pre, stmt, finalizers: fin };
    ctx.table.entries.insert(s.id, ShadowEntry { kind: d.kind, transformed: transformed.clone(), consumed });
    Ok(transformed)
}

/// A consumed loop with its trip count and start value made available
/// as literals or pre-computed variables.
pub(crate) struct Level {
    pub canon: OMPCanonicalLoop,
    /// Trip count in the logical type.
    pub tc: Expr,
    /// Start value (the by-value capture of both closures).
    pub begin: Expr,
}

/// Returns `e` if it is a literal; otherwise declares a variable holding
/// it in `pre` and returns a read of that variable.
pub(crate) fn hoist(g: &mut Gen, pre: &mut Vec<Stmt>, name: &str, e: Expr) -> Expr {
    if e.as_literal().is_some() {
        return e;
    }
    let v = g.var(name, e.ty);
    pre.push(g.decl(&v, e));
    g.read(&v)
}

impl Level {
    fn prepare(g: &mut Gen, canon: OMPCanonicalLoop, pre: &mut Vec<Stmt>) -> Level {
        let name = canon.user_var.name.clone();
        let begin = hoist(g, pre, &format!("omp.lb.{name}"), fold_expr(&canon.form.lb));
        let tc = hoist(g, pre, &format!("omp.tc.{name}"), canon.trip_count_with(&begin, &canon.form.ub));
        Level { canon, tc, begin }
    }

    pub fn name(&self) -> &str {
        &self.canon.user_var.name
    }

    pub fn logical(&self) -> crate::types::IntType {
        self.canon.logical_type
    }

    pub fn body(&self) -> &Stmt {
        self.canon.body()
    }

    pub fn user_value(&self, g: &Gen, k: Expr) -> Expr {
        let k = g.cast(self.logical(), k);
        self.canon.user_value_with(&self.begin, &k)
    }

    fn init_decl(&self) -> Option<&VarDecl> {
        match self.canon.for_stmt().init.as_deref().map(|s| &s.kind) {
            Some(StmtKind::Decl(d)) => Some(d),
            _ => None,
        }
    }

    /// Whether the loop variable is a generated one declared by the loop.
    pub fn internal_var(&self) -> bool {
        self.init_decl().is_some_and(|d| d.internal)
    }

    /// Sets the user variable for logical iteration `k`.
    pub fn materialize(&self, g: &mut Gen, k: Expr) -> Stmt {
        let v = self.user_value(g, k);
        match self.init_decl() {
            Some(d) => {
                let d = VarDecl { init: Some(v), ..d.clone() };
                g.stmt(StmtKind::Decl(d))
            }
            None => g.assign(&self.canon.user_var, v),
        }
    }

    /// For a loop variable declared outside the loop, its value after the
    /// loop.
    pub fn finalizer(&self, g: &mut Gen) -> Option<Stmt> {
        if self.init_decl().is_some() {
            return None;
        }
        let v = self.user_value(g, self.tc.clone());
        Some(g.assign(&self.canon.user_var, v))
    }
}

/// Finalizers of a nest; inner ones only run if every enclosing loop
/// executes at least once.
fn nest_finalizers(g: &mut Gen, levels: &[Level]) -> Vec<Stmt> {
    let mut out = Vec::new();
    for (k, l) in levels.iter().enumerate() {
        let Some(f) = l.finalizer(g) else { continue };
        let mut guard: Option<Expr> = None;
        for outer in &levels[..k] {
            let nz = g.bin(BinaryOp::Ne, outer.tc.clone(), g.lit(0, outer.tc.ty));
            guard = Some(match guard {
                None => nz,
                Some(prev) => g.bin(BinaryOp::LAnd, prev, nz),
            });
        }
        out.push(match guard {
            Some(c) if c.as_literal() == Some(0) => continue,
            Some(c) if c.as_literal().is_none() => g.if_then(c, f),
            _ => f,
        });
    }
    out
}

#[cfg(test)]
mod tests;
