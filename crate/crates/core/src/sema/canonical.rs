use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ast::fold::fold_expr;
use crate::ast::*;
use crate::diag::{Diagnostic, SourceLocation};
use crate::eval::const_eval;
use crate::types::{IntType, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
}

impl Relation {
    fn from_op(op: BinaryOp) -> Option<Relation> {
        Some(match op {
            BinaryOp::Lt => Relation::Lt,
            BinaryOp::Le => Relation::Le,
            BinaryOp::Gt => Relation::Gt,
            BinaryOp::Ge => Relation::Ge,
            BinaryOp::Ne => Relation::Ne,
            _ => return None,
        })
    }

    /// The relation with operands swapped.
    fn flipped(self) -> Relation {
        match self {
            Relation::Lt => Relation::Gt,
            Relation::Le => Relation::Ge,
            Relation::Gt => Relation::Lt,
            Relation::Ge => Relation::Le,
            Relation::Ne => Relation::Ne,
        }
    }
}

/// A loop in OpenMP canonical form. `lb` and `ub` are already converted to
/// the induction variable's type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    pub iv: VarTarget,
    pub lb: Expr,
    pub ub: Expr,
    /// Magnitude of the increment, at least 1.
    pub step: u64,
    pub direction: Direction,
    pub rel: Relation,
}

impl CanonicalForm {
    pub fn signed_step(&self) -> i128 {
        match self.direction {
            Direction::Up => self.step as i128,
            Direction::Down => -(self.step as i128),
        }
    }

    pub fn logical_type(&self) -> IntType {
        self.iv.ty.to_unsigned()
    }
}

fn not_canonical(loop_loc: &SourceLocation, at: &SourceLocation, why: impl Into<String>) -> Diagnostic {
    Diagnostic::error(loop_loc.clone(), "loop is not in canonical form").with_note(at.clone(), why)
}

fn converted(e: &Expr, ty: IntType) -> Expr {
    if e.ty == ty {
        e.clone()
    } else {
        Expr::cast(ty, e.clone(), e.loc.clone())
    }
}

fn is_iv(e: &Expr, iv: DeclId) -> bool {
    matches!(&e.kind, ExprKind::VarRef { decl, .. } if *decl == iv)
}

/// Splits `iv rel bound` or `bound rel iv` into (relation, bound).
fn single_condition(e: &Expr, iv: DeclId) -> Option<(Relation, &Expr)> {
    let ExprKind::Binary { op, lhs, rhs } = &e.kind else { return None };
    let rel = Relation::from_op(*op)?;
    if is_iv(lhs, iv) && !rhs.references(iv) {
        Some((rel, rhs))
    } else if is_iv(rhs, iv) && !lhs.references(iv) {
        Some((rel.flipped(), lhs))
    } else {
        None
    }
}

/// Recognizes the loop shape and builds the wrapper with both closures.
/// `stmt` must be a `for` statement; it is stored unchanged.
pub fn analyze_canonical_loop(stmt: &Stmt) -> Result<OMPCanonicalLoop, Diagnostic> {
    let Some(f) = stmt.as_for() else {
        return Err(Diagnostic::error(stmt.loc.clone(), "expected a for loop"));
    };
    let here = &stmt.loc;
    let (iv, lb, declared) = match f.init.as_deref().map(|s| (&s.kind, &s.loc)) {
        Some((StmtKind::Decl(d), loc)) => match &d.init {
            Some(e) => (d.target(), e.clone(), true),
            None => return Err(not_canonical(here, loc, "loop variable must be initialized")),
        },
        Some((StmtKind::Assign(a), loc)) => match &a.op {
            AssignOp::Set(e) => (a.target.clone(), e.clone(), false),
            _ => return Err(not_canonical(here, loc, "init statement must assign the loop variable")),
        },
        _ => return Err(not_canonical(here, here, "missing init statement")),
    };
    if lb.references(iv.decl) {
        return Err(not_canonical(here, &lb.loc, "lower bound refers to the loop variable"));
    }

    let cond = &f.cond;
    let bad_cond = || not_canonical(here, &cond.loc, "unsupported condition shape");
    let (rel, ub) = if let Some((rel, b)) = single_condition(cond, iv.decl) {
        (rel, b.clone())
    } else if let ExprKind::Binary { op: BinaryOp::LAnd, lhs, rhs } = &cond.kind {
        let (r1, b1) = single_condition(lhs, iv.decl).ok_or_else(bad_cond)?;
        let (r2, b2) = single_condition(rhs, iv.decl).ok_or_else(bad_cond)?;
        if r1 != r2 || r1 == Relation::Ne {
            return Err(bad_cond());
        }
        // The tighter of the two bounds, in the comparison type.
        let cmp_ty = IntType::promote(b1.ty, b2.ty);
        let pick = match r1 {
            Relation::Lt | Relation::Le => BinaryOp::Lt,
            _ => BinaryOp::Gt,
        };
        let l = cond.loc.clone();
        let choose = Expr::binary(pick, b1.clone(), b2.clone(), l.clone());
        (r1, Expr::conditional(choose, converted(b1, cmp_ty), converted(b2, cmp_ty), l))
    } else {
        return Err(bad_cond());
    };
    if IntType::promote(iv.ty, ub.ty) != iv.ty {
        return Err(not_canonical(
            here,
            &ub.loc,
            format!("comparison is performed in type '{}' instead of the loop variable's type '{}'", IntType::promote(iv.ty, ub.ty), iv.ty),
        ));
    }

    let incr = &f.incr;
    if incr.target.decl != iv.decl {
        return Err(not_canonical(here, &incr.loc, "increment does not update the loop variable"));
    }
    let step_of = |e: &Expr| -> Result<i128, Diagnostic> {
        let v = const_eval(e).ok_or_else(|| not_canonical(here, &e.loc, "step is not a compile-time constant"))?;
        Ok(v.convert(iv.ty).as_i128())
    };
    let step = match &incr.op {
        AssignOp::PreInc | AssignOp::PostInc => 1,
        AssignOp::PreDec | AssignOp::PostDec => -1,
        AssignOp::AddAssign(e) => step_of(e)?,
        AssignOp::SubAssign(e) => -step_of(e)?,
        AssignOp::Set(_) => return Err(not_canonical(here, &incr.loc, "unsupported increment form")),
    };
    if step == 0 {
        return Err(not_canonical(here, &incr.loc, "step must not be zero"));
    }
    let direction = if step > 0 { Direction::Up } else { Direction::Down };
    match rel {
        Relation::Lt | Relation::Le if direction == Direction::Down => {
            return Err(not_canonical(here, &incr.loc, "inconsistent direction: the condition expects an increasing loop variable"))
        }
        Relation::Gt | Relation::Ge if direction == Direction::Up => {
            return Err(not_canonical(here, &incr.loc, "inconsistent direction: the condition expects a decreasing loop variable"))
        }
        Relation::Ne if step.abs() != 1 => {
            return Err(not_canonical(here, &cond.loc, "'!=' condition requires a step of 1 or -1"))
        }
        _ => {}
    }

    let assigned = f.body.assigned_decls();
    if assigned.contains(&iv.decl) {
        let mut at = f.body.loc.clone();
        f.body.walk(&mut |s| match &s.kind {
            StmtKind::Assign(a) if a.target.decl == iv.decl => at = s.loc.clone(),
            StmtKind::For(g) if g.incr.target.decl == iv.decl => at = s.loc.clone(),
            _ => {}
        });
        return Err(not_canonical(here, &at, "induction variable modified in body"));
    }
    for (what, bound) in [("lower", &lb), ("upper", &ub)] {
        if let Some(d) = bound.referenced_decls().into_iter().find(|d| assigned.contains(d)) {
            let name = bound_name(bound, d);
            return Err(not_canonical(here, &bound.loc, format!("{what} bound depends on '{name}', which is modified in the loop")));
        }
    }

    let form = CanonicalForm {
        lb: converted(&lb, iv.ty),
        ub: converted(&ub, iv.ty),
        iv: iv.clone(),
        step: step.unsigned_abs() as u64,
        direction,
        rel,
    };
    let logical = form.logical_type();
    Ok(OMPCanonicalLoop {
        loop_stmt: stmt.clone(),
        distance: build_distance(&form, logical),
        user_value: build_user_value(&form, logical),
        user_var: iv,
        user_var_declared: declared,
        logical_type: logical,
        form,
    })
}

fn bound_name(e: &Expr, d: DeclId) -> String {
    let mut name = String::new();
    e.visit(&mut |x| {
        if let ExprKind::VarRef { name: n, decl } = &x.kind {
            if *decl == d {
                name = n.clone();
            }
        }
    });
    name
}

fn lit(v: u64, ty: IntType, loc: &SourceLocation) -> Expr {
    Expr::literal(v, ty, loc.clone())
}

fn bin(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    let loc = a.loc.clone();
    Expr::binary(op, a, b, loc)
}

/// `a rel b` on values of type `ty`, expressed as an unsigned comparison in
/// `logical`. Signed operands are biased by 2^(bits-1) first, which maps
/// signed order onto unsigned order.
fn unsigned_compare(op: BinaryOp, a: Expr, b: Expr, ty: IntType, logical: IntType) -> Expr {
    let (mut a, mut b) = (converted(&a, logical), converted(&b, logical));
    if ty.signed {
        let bias = 1u64 << (ty.bits - 1);
        let loc = b.loc.clone();
        a = bin(BinaryOp::Add, a, lit(bias, logical, &loc));
        b = bin(BinaryOp::Add, b, lit(bias, logical, &loc));
    }
    bin(op, a, b)
}

/// Zero-input closure computing the trip count in unsigned `logical`
/// arithmetic. Captures `__begin` by value and `__end` by reference.
pub fn build_distance(form: &CanonicalForm, logical: IntType) -> ClosureDescriptor {
    let loc = form.lb.loc.clone();
    let ty = form.iv.ty;
    let begin = Expr::param(0, "__begin", ty, loc.clone());
    let end = Expr::param(1, "__end", ty, loc.clone());
    let (b, e) = (converted(&begin, logical), converted(&end, logical));
    let zero = lit(0, logical, &loc);
    let one = || lit(1, logical, &loc);
    let div_step = |x: Expr| if form.step == 1 { x } else { bin(BinaryOp::Div, x, lit(form.step, logical, &loc)) };
    let body = match (form.rel, form.direction) {
        (Relation::Ne, Direction::Up) => bin(BinaryOp::Sub, e, b),
        (Relation::Ne, Direction::Down) => bin(BinaryOp::Sub, b, e),
        (rel, _) => {
            let (guard_op, hi, lo, hi_v, lo_v) = match rel {
                Relation::Lt => (BinaryOp::Lt, end.clone(), begin.clone(), e, b),
                Relation::Le => (BinaryOp::Le, end.clone(), begin.clone(), e, b),
                Relation::Gt => (BinaryOp::Lt, begin.clone(), end.clone(), b, e),
                _ => (BinaryOp::Le, begin.clone(), end.clone(), b, e),
            };
            let guard = unsigned_compare(guard_op, lo, hi, ty, logical);
            let span = bin(BinaryOp::Sub, hi_v, lo_v);
            let count = if matches!(rel, Relation::Lt | Relation::Gt) {
                bin(BinaryOp::Add, div_step(bin(BinaryOp::Sub, span, one())), one())
            } else {
                bin(BinaryOp::Add, div_step(span), one())
            };
            Expr::conditional(guard, count, zero, loc.clone())
        }
    };
    ClosureDescriptor {
        captures: alloc::vec![
            Capture { name: "__begin".into(), ty, mode: CaptureMode::ByValue, source: form.lb.clone() },
            Capture { name: "__end".into(), ty, mode: CaptureMode::ByReference, source: form.ub.clone() },
        ],
        inputs: Vec::new(),
        output: Param { name: "Result".into(), ty: logical },
        body,
    }
}

/// One-input closure mapping a logical iteration number to the user
/// variable's value: `__begin ± k * step`, wrapping in the logical type.
pub fn build_user_value(form: &CanonicalForm, logical: IntType) -> ClosureDescriptor {
    let loc = form.lb.loc.clone();
    let ty = form.iv.ty;
    let begin = converted(&Expr::param(0, "__begin", ty, loc.clone()), logical);
    let k = Expr::param(1, "__i", logical, loc.clone());
    let offset = if form.step == 1 { k } else { bin(BinaryOp::Mul, k, lit(form.step, logical, &loc)) };
    let op = match form.direction {
        Direction::Up => BinaryOp::Add,
        Direction::Down => BinaryOp::Sub,
    };
    ClosureDescriptor {
        captures: alloc::vec![Capture { name: "__begin".into(), ty, mode: CaptureMode::ByValue, source: form.lb.clone() }],
        inputs: alloc::vec![Param { name: "__i".into(), ty: logical }],
        output: Param { name: form.iv.name.clone(), ty },
        body: converted(&bin(op, begin, offset), ty),
    }
}

impl OMPCanonicalLoop {
    /// Trip-count expression with the given capture arguments, folded.
    pub fn trip_count_with(&self, begin: &Expr, end: &Expr) -> Expr {
        fold_expr(&self.distance.instantiate(&[begin.clone(), end.clone()]))
    }

    /// Trip count with the captures bound to their source expressions.
    pub fn trip_count_expr(&self) -> Expr {
        self.trip_count_with(&self.form.lb, &self.form.ub)
    }

    /// Trip count, if it is a compile-time constant.
    pub fn const_trip_count(&self) -> Option<u64> {
        self.trip_count_expr().as_literal()
    }

    /// User value of logical iteration `k` with `__begin` bound to `begin`.
    pub fn user_value_with(&self, begin: &Expr, k: &Expr) -> Expr {
        fold_expr(&self.user_value.instantiate(&[begin.clone(), k.clone()]))
    }
}

/// Evaluates a closure body with all slots bound to values.
pub fn eval_closure(c: &ClosureDescriptor, args: &[Value]) -> Option<Value> {
    let loc = c.body.loc.clone();
    let slots: Vec<Expr> = args.iter().map(|v| Expr::literal(v.bits(), v.ty(), loc.clone())).collect();
    const_eval(&c.instantiate(&slots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn analyze(src: &str) -> Result<OMPCanonicalLoop, Diagnostic> {
        let p = parse_source(src, "t.c").unwrap();
        analyze_canonical_loop(p.stmts.last().unwrap())
    }

    #[test]
    fn fig3_loop_form() {
        let c = analyze("for (int i = 7; i < 17; i += 3) body(i);").unwrap();
        assert_eq!(c.form.lb.as_literal(), Some(7));
        assert_eq!(c.form.ub.as_literal(), Some(17));
        assert_eq!((c.form.step, c.form.direction, c.form.rel), (3, Direction::Up, Relation::Lt));
        assert_eq!(c.logical_type, IntType::UINT);
        assert_eq!(c.const_trip_count(), Some(4));
    }

    #[test]
    fn full_int32_range_counts_every_value_but_the_last() {
        let c = analyze("for (int i = -2147483647 - 1; i < 2147483647; ++i) body(i);").unwrap();
        assert_eq!(c.const_trip_count(), Some(0xffff_ffff));
    }

    #[test]
    fn inverted_bounds_give_zero() {
        assert_eq!(analyze("for (int i = 5; i < 3; ++i) body(i);").unwrap().const_trip_count(), Some(0));
        assert_eq!(analyze("for (int i = 0; i != 0; ++i) body(i);").unwrap().const_trip_count(), Some(0));
    }

    #[test]
    fn user_value_of_down_loop() {
        let c = analyze("for (int i = 17; i > 7; i -= 3) body(i);").unwrap();
        let k = Expr::literal(2, IntType::UINT, SourceLocation::unknown());
        assert_eq!(c.user_value_with(&c.form.lb, &k).as_literal().map(|v| v as i32), Some(11));
        assert_eq!(c.const_trip_count(), Some(4));
    }

    #[test]
    fn rejections_carry_a_reason() {
        let cases = [
            ("int n = 4; for (int i = 0; i < n; ++i) { i = 0; }", "induction variable modified in body"),
            ("int s = 1; for (int i = 0; i < 9; i += s) body(i);", "step is not a compile-time constant"),
            ("for (int i = 0; i < 9; i -= 1) body(i);", "inconsistent direction"),
            ("for (int i = 0; i != 9; i += 2) body(i);", "'!='"),
            ("for (int i = 0; i * 2 < 9; ++i) body(i);", "unsupported condition shape"),
            ("int n = 9; for (int i = 0; i < n; ++i) n = 3;", "modified in the loop"),
            ("for (int i = 0; i < 9u; ++i) body(i);", "comparison is performed"),
        ];
        for (src, why) in cases {
            let d = analyze(src).unwrap_err();
            assert_eq!(d.message, "loop is not in canonical form");
            assert!(d.notes[0].message.contains(why), "{src}: {}", d.notes[0].message);
        }
    }

    #[test]
    fn conjunction_uses_the_tighter_bound() {
        let c = analyze("for (uint t = 2; t < 2u + 2u && t < 3u; ++t) body(t);").unwrap();
        assert_eq!(c.const_trip_count(), Some(1));
    }

    #[test]
    fn wrapper_keeps_the_original_node() {
        let p = parse_source("for (int i = 0; i < 3; ++i) body(i);", "t.c").unwrap();
        let c = analyze_canonical_loop(&p.stmts[0]).unwrap();
        assert_eq!(c.into_loop(), p.stmts[0]);
    }
}
