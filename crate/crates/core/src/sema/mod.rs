//! Canonical-loop analysis, directive validation and nest depth.

mod canonical;

pub use canonical::{
    analyze_canonical_loop, build_distance, build_user_value, eval_closure, CanonicalForm, Direction, Relation,
};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ast::*;
use crate::diag::{Diagnostic, SourceLocation};
use crate::eval::const_eval;

/// Largest trip count `unroll full` accepts.
pub const MAX_FULL_UNROLL: u64 = 4096;
/// Largest explicit argument of `partial`, `sizes`, `collapse` and `schedule`.
pub const MAX_CLAUSE_ARGUMENT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemaOptions {
    /// Factor used for an unroll directive without a factor whose result is
    /// consumed by an enclosing directive.
    pub heuristic_factor: u64,
}

impl Default for SemaOptions {
    fn default() -> Self {
        SemaOptions { heuristic_factor: 2 }
    }
}

/// How an unroll directive is carried out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnrollDecision {
    Full,
    Partial { factor: u64, compiler_chosen: bool },
    /// No clause and no consumer: leave the loop with an unroll hint.
    Defer,
}

/// One loop of the nest a statement stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelInfo {
    pub loc: SourceLocation,
    pub trip_count: Option<u64>,
    /// Directive that generated the loop, for provenance notes.
    pub generated_by: Option<(DirectiveKind, SourceLocation)>,
    /// Why a literal loop is not canonical.
    pub not_canonical: Option<Diagnostic>,
}

/// The perfect canonical loop nest a statement stands for after its
/// directives are applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestInfo {
    pub levels: Vec<LevelInfo>,
    /// Number of outer levels whose bounds do not depend on enclosing
    /// loop variables of the nest.
    pub rectangular: usize,
    /// Why a directive leaves no loop at all.
    pub no_loop: Option<(String, SourceLocation)>,
}

impl NestInfo {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// The `for` statements forming the perfect nest rooted at `s`. A body
/// continues the nest when it is a `for` or a compound holding exactly
/// one `for` and nothing else.
pub fn perfect_nest(s: &Stmt) -> Vec<&Stmt> {
    let mut out = Vec::new();
    let mut cur = s;
    while let Some(f) = cur.as_for() {
        out.push(cur);
        cur = match &f.body.kind {
            StmtKind::For(_) => &f.body,
            StmtKind::Compound(items) if items.len() == 1 && items[0].as_for().is_some() => &items[0],
            _ => break,
        };
    }
    out
}

fn generated_note(d: &Diagnostic, by: &Option<(DirectiveKind, SourceLocation)>) -> Diagnostic {
    match by {
        Some((kind, loc)) => d.clone().with_note(loc.clone(), format!("generated by '#pragma omp {}' here", kind.pragma_name())),
        None => d.clone(),
    }
}

fn literal_nest_info(s: &Stmt) -> NestInfo {
    let mut levels = Vec::new();
    let mut outer_ivs: Vec<DeclId> = Vec::new();
    let mut rectangular = None;
    for (k, l) in perfect_nest(s).into_iter().enumerate() {
        let (trip, err, bound_decls, iv) = match analyze_canonical_loop(l) {
            Ok(c) => {
                let mut refs = c.form.lb.referenced_decls();
                refs.extend(c.form.ub.referenced_decls());
                (c.const_trip_count(), None, refs, Some(c.user_var.decl))
            }
            Err(e) => {
                let f = l.as_for().expect("nest level");
                (None, Some(e), f.cond.referenced_decls(), None)
            }
        };
        if rectangular.is_none() && bound_decls.iter().any(|d| outer_ivs.contains(d)) {
            rectangular = Some(k);
        }
        outer_ivs.extend(iv);
        levels.push(LevelInfo { loc: l.loc.clone(), trip_count: trip, generated_by: None, not_canonical: err });
    }
    let n = levels.len();
    NestInfo { levels, rectangular: rectangular.unwrap_or(n), no_loop: None }
}

/// Positive constant value of a clause argument.
pub fn clause_constant(e: &Expr, clause: &str) -> Result<u64, Diagnostic> {
    let v = const_eval(e).map(|v| v.as_i128());
    match v {
        Some(v) if v >= 1 && v as u128 <= MAX_CLAUSE_ARGUMENT as u128 => Ok(v as u64),
        Some(v) if v >= 1 => Err(Diagnostic::error(e.loc.clone(), format!("argument of '{clause}' is too large (limit {MAX_CLAUSE_ARGUMENT})"))),
        _ => Err(Diagnostic::error(e.loc.clone(), "argument must be a positive constant")
            .with_note(e.loc.clone(), format!("in '{clause}' clause"))),
    }
}

/// Tile sizes of a tile directive.
pub fn tile_sizes(d: &Directive) -> Result<Vec<u64>, Diagnostic> {
    match d.clause("sizes").map(|c| &c.kind) {
        Some(ClauseKind::Sizes(s)) => s.iter().map(|e| clause_constant(e, "sizes")).collect(),
        _ => unreachable!("parser requires a sizes clause"),
    }
}

/// Collapse depth and optional chunk size of a worksharing directive.
pub fn workshare_params(d: &Directive) -> Result<(u64, Option<u64>), Diagnostic> {
    let collapse = match d.clause("collapse").map(|c| &c.kind) {
        Some(ClauseKind::Collapse(e)) => clause_constant(e, "collapse")?,
        _ => 1,
    };
    let chunk = match d.clause("schedule").map(|c| &c.kind) {
        Some(ClauseKind::Schedule { chunk: Some(e) }) => Some(clause_constant(e, "schedule")?),
        _ => None,
    };
    Ok((collapse, chunk))
}

pub fn unroll_decision(d: &Directive, consumed: bool, opts: &SemaOptions) -> Result<UnrollDecision, Diagnostic> {
    Ok(match d.clauses.first().map(|c| &c.kind) {
        Some(ClauseKind::Full) => UnrollDecision::Full,
        Some(ClauseKind::Partial(Some(e))) => UnrollDecision::Partial { factor: clause_constant(e, "partial")?, compiler_chosen: false },
        Some(ClauseKind::Partial(None)) => UnrollDecision::Partial { factor: opts.heuristic_factor, compiler_chosen: true },
        _ if consumed => UnrollDecision::Partial { factor: opts.heuristic_factor, compiler_chosen: true },
        _ => UnrollDecision::Defer,
    })
}

fn required_depth(d: &Directive) -> Result<usize, Diagnostic> {
    Ok(match d.kind {
        DirectiveKind::Tile => tile_sizes(d)?.len(),
        DirectiveKind::Unroll => 1,
        DirectiveKind::WorkshareFor => workshare_params(d)?.0 as usize,
    })
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

/// Validates a directive statement, its clauses and everything it is
/// stacked on, and returns the nest it stands for. `consumed` tells
/// whether an enclosing directive takes its generated loops.
pub fn validate_directive(s: &Stmt, consumed: bool, opts: &SemaOptions) -> Result<NestInfo, Diagnostic> {
    let d = s.as_directive().expect("directive statement");
    let pragma = format!("#pragma omp {}", d.kind.pragma_name());
    let need = required_depth(d)?;
    let decision = match d.kind {
        DirectiveKind::Unroll => Some(unroll_decision(d, consumed, opts)?),
        _ => None,
    };

    let inner = match &d.associated.kind {
        StmtKind::Directive(_) => validate_directive(&d.associated, true, opts)?,
        StmtKind::For(_) => literal_nest_info(&d.associated),
        _ => {
            return Err(Diagnostic::error(
                d.associated.loc.clone(),
                format!("statement associated with '{pragma}' must be a for loop or a loop transformation"),
            )
            .with_note(s.loc.clone(), format!("'{pragma}' is here")))
        }
    };

    if let Some((what, at)) = &inner.no_loop {
        return Err(Diagnostic::error(s.loc.clone(), format!("directive requires a loop but the inner {what} leaves no generated loop"))
            .with_note(at.clone(), format!("the inner {what} is here")));
    }
    if inner.depth() < need {
        let mut e = Diagnostic::error(s.loc.clone(), "insufficient loop nest depth").with_note(
            d.associated.loc.clone(),
            format!("'{pragma}' requires a nest of {} but only {} available", plural(need, "loop"), match inner.depth() {
                1 => "1 loop is".into(),
                n => format!("{n} loops are"),
            }),
        );
        if let Some(l) = inner.levels.last() {
            e = generated_note(&e, &l.generated_by);
        }
        return Err(e);
    }
    for l in &inner.levels[..need] {
        if let Some(err) = &l.not_canonical {
            return Err(err.clone().with_note(s.loc.clone(), format!("loop is associated with '{pragma}' here")));
        }
    }
    let needs_rect = d.kind == DirectiveKind::Tile || (d.kind == DirectiveKind::WorkshareFor && need > 1);
    if needs_rect && inner.rectangular < need {
        let bad = &inner.levels[inner.rectangular];
        let verb = if d.kind == DirectiveKind::Tile { "tile" } else { "collapse" };
        let e = Diagnostic::error(s.loc.clone(), format!("cannot {verb} a non-rectangular loop nest"))
            .with_note(bad.loc.clone(), "bounds of this loop depend on an enclosing loop variable");
        return Err(generated_note(&e, &bad.generated_by));
    }

    let origin = Some((d.kind, s.loc.clone()));
    let gen = |trip: Option<u64>| LevelInfo { loc: s.loc.clone(), trip_count: trip, generated_by: origin.clone(), not_canonical: None };
    let ceil_div = |n: Option<u64>, f: u64| n.map(|n| n / f + u64::from(n % f != 0));
    Ok(match (d.kind, decision) {
        (DirectiveKind::Tile, _) => {
            let sizes = tile_sizes(d)?;
            let mut levels: Vec<LevelInfo> = sizes.iter().zip(&inner.levels).map(|(s, l)| gen(ceil_div(l.trip_count, *s))).collect();
            levels.extend(sizes.iter().map(|_| gen(None)));
            NestInfo { levels, rectangular: sizes.len(), no_loop: None }
        }
        (DirectiveKind::Unroll, Some(UnrollDecision::Full)) => {
            let l = &inner.levels[0];
            let Some(n) = l.trip_count else {
                let e = Diagnostic::error(s.loc.clone(), "cannot fully unroll: trip count is not a compile-time constant")
                    .with_note(l.loc.clone(), "trip count of this loop depends on runtime values");
                return Err(generated_note(&e, &l.generated_by));
            };
            if n > MAX_FULL_UNROLL {
                return Err(Diagnostic::error(s.loc.clone(), format!("cannot fully unroll {n} iterations (limit {MAX_FULL_UNROLL})"))
                    .with_note(l.loc.clone(), "loop is here"));
            }
            let full = d.clause("full").map_or(s.loc.clone(), |c| c.loc.clone());
            NestInfo { levels: Vec::new(), rectangular: 0, no_loop: Some(("unroll with 'full'".into(), full)) }
        }
        (DirectiveKind::Unroll, Some(UnrollDecision::Partial { factor, .. })) => {
            NestInfo { levels: alloc::vec![gen(ceil_div(inner.levels[0].trip_count, factor))], rectangular: 1, no_loop: None }
        }
        (DirectiveKind::Unroll, _) => NestInfo { levels: inner.levels[..1].to_vec(), rectangular: 1, no_loop: None },
        (DirectiveKind::WorkshareFor, _) => {
            NestInfo { levels: Vec::new(), rectangular: 0, no_loop: Some(("'#pragma omp for'".into(), s.loc.clone())) }
        }
    })
}

/// Depth of the perfect canonical nest `s` stands for after transformation.
pub fn nest_depth_after(s: &Stmt) -> Result<usize, Diagnostic> {
    match &s.kind {
        StmtKind::Directive(_) => validate_directive(s, false, &SemaOptions::default()).map(|n| n.depth()),
        _ => Ok(literal_nest_info(s).depth()),
    }
}

/// Directives whose generated loops are taken by an enclosing directive.
pub fn consumed_directives(p: &Program) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    p.walk(&mut |s| {
        if let StmtKind::Directive(d) = &s.kind {
            if matches!(d.associated.kind, StmtKind::Directive(_)) {
                out.insert(d.associated.id);
            }
        }
    });
    out
}

/// Validates every directive stack in the program.
pub fn check_program(p: &Program) -> Result<(), Vec<Diagnostic>> {
    check_program_with(p, &SemaOptions::default())
}

pub fn check_program_with(p: &Program, opts: &SemaOptions) -> Result<(), Vec<Diagnostic>> {
    let consumed = consumed_directives(p);
    let mut errors = Vec::new();
    p.walk(&mut |s| {
        if matches!(s.kind, StmtKind::Directive(_)) && !consumed.contains(&s.id) {
            if let Err(e) = validate_directive(s, false, opts) {
                errors.push(e);
            }
        }
    });
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn first(src: &str) -> Stmt {
        parse_source(src, "t.c").unwrap().stmts.pop().unwrap()
    }

    const NEST: &str = "for (int i = 0; i < 4; ++i) for (int j = 0; j < 3; ++j) body(i, j);";

    #[test]
    fn depth_rules() {
        assert_eq!(nest_depth_after(&first(NEST)), Ok(2));
        assert_eq!(nest_depth_after(&first(&format!("#pragma omp tile sizes(2,2)\n{NEST}"))), Ok(4));
        assert_eq!(nest_depth_after(&first(&format!("#pragma omp unroll full\n{NEST}"))), Ok(0));
        assert_eq!(nest_depth_after(&first(&format!("#pragma omp unroll partial(2)\n{NEST}"))), Ok(1));
        assert_eq!(nest_depth_after(&first(&format!("#pragma omp for collapse(2)\n{NEST}"))), Ok(0));
        let imperfect = "for (int i = 0; i < 4; ++i) { body(i); for (int j = 0; j < 3; ++j) body(i, j); }";
        assert_eq!(nest_depth_after(&first(imperfect)), Ok(1));
    }

    #[test]
    fn tile_on_shallow_nest() {
        let e = nest_depth_after(&first("#pragma omp tile sizes(2,2)\nfor (int i = 0; i < 4; ++i) body(i);")).unwrap_err();
        assert_eq!(e.message, "insufficient loop nest depth");
        assert!(e.notes[0].message.contains("requires a nest of 2 loops but only 1 loop is available"), "{}", e.notes[0].message);
    }

    #[test]
    fn depth_error_points_at_generating_directive() {
        let src = "#pragma omp tile sizes(2,2)\n#pragma omp unroll partial(2)\nfor (int i = 0; i < 4; ++i) body(i);";
        let e = nest_depth_after(&first(src)).unwrap_err();
        let last = e.notes.last().unwrap();
        assert_eq!(last.message, "generated by '#pragma omp unroll' here");
        assert_eq!(last.loc.line, 2);
    }

    #[test]
    fn directive_over_full_unroll() {
        let src = "#pragma omp for\n#pragma omp unroll full\nfor (int i = 0; i < 4; ++i) body(i);";
        let e = nest_depth_after(&first(src)).unwrap_err();
        assert_eq!(e.message, "directive requires a loop but the inner unroll with 'full' leaves no generated loop");
        assert_eq!((e.notes[0].loc.line, e.notes[0].loc.column), (2, 20));
    }

    #[test]
    fn clause_arguments() {
        for src in ["#pragma omp unroll partial(0)\n", "#pragma omp tile sizes(2, 0)\n", "#pragma omp for collapse(0)\n"] {
            let e = nest_depth_after(&first(&format!("{src}{NEST}"))).unwrap_err();
            assert_eq!(e.message, "argument must be a positive constant");
        }
        assert!(nest_depth_after(&first(&format!("#pragma omp unroll partial(1)\n{NEST}"))).is_ok());
    }

    #[test]
    fn heuristic_factor_depends_on_consumer() {
        let p = parse_source(&format!("#pragma omp for\n#pragma omp unroll\n{NEST}"), "t.c").unwrap();
        let outer = p.stmts[0].as_directive().unwrap();
        let inner = outer.associated.as_directive().unwrap();
        let opts = SemaOptions::default();
        assert_eq!(unroll_decision(inner, true, &opts), Ok(UnrollDecision::Partial { factor: 2, compiler_chosen: true }));
        assert_eq!(unroll_decision(inner, false, &opts), Ok(UnrollDecision::Defer));
        assert_eq!(consumed_directives(&p).len(), 1);
    }

    #[test]
    fn non_rectangular_tile_is_rejected() {
        let src = "#pragma omp tile sizes(2,2)\nfor (int i = 0; i < 4; ++i) for (int j = i; j < 4; ++j) body(i, j);";
        let e = nest_depth_after(&first(src)).unwrap_err();
        assert_eq!(e.message, "cannot tile a non-rectangular loop nest");
    }
}
