//! Constant folding and expression-level rewriting of whole statements.

use super::*;
use crate::eval::const_eval;

/// Replaces every literal-only subexpression with its value. Subtrees whose
/// evaluation fails (division by zero) are left alone.
pub fn fold_expr(e: &Expr) -> Expr {
    let rebuilt = match &e.kind {
        ExprKind::IntLiteral(_) | ExprKind::VarRef { .. } | ExprKind::ClosureParam { .. } => return e.clone(),
        ExprKind::Binary { op, lhs, rhs } => {
            let (l, r) = (fold_expr(lhs), fold_expr(rhs));
            match (op, l.as_literal()) {
                (BinaryOp::LAnd, Some(0)) => return Expr::literal(0, IntType::INT, e.loc.clone()),
                (BinaryOp::LOr, Some(v)) if v != 0 => return Expr::literal(1, IntType::INT, e.loc.clone()),
                _ => {}
            }
            Expr { kind: ExprKind::Binary { op: *op, lhs: Box::new(l), rhs: Box::new(r) }, ty: e.ty, loc: e.loc.clone() }
        }
        ExprKind::Unary { op, operand } => {
            Expr { kind: ExprKind::Unary { op: *op, operand: Box::new(fold_expr(operand)) }, ty: e.ty, loc: e.loc.clone() }
        }
        ExprKind::Cast(operand) => Expr { kind: ExprKind::Cast(Box::new(fold_expr(operand))), ty: e.ty, loc: e.loc.clone() },
        ExprKind::Conditional { cond, then, otherwise } => {
            let c = fold_expr(cond);
            let (t, o) = (fold_expr(then), fold_expr(otherwise));
            if let Some(v) = c.as_literal() {
                let chosen = if v != 0 { t } else { o };
                return if chosen.ty == e.ty { chosen } else { fold_expr(&Expr::cast(e.ty, chosen, e.loc.clone())) };
            }
            Expr {
                kind: ExprKind::Conditional { cond: Box::new(c), then: Box::new(t), otherwise: Box::new(o) },
                ty: e.ty,
                loc: e.loc.clone(),
            }
        }
    };
    match const_eval(&rebuilt) {
        Some(v) => Expr::literal(v.bits(), e.ty, e.loc.clone()),
        None => rebuilt,
    }
}

/// Rebuilds `s` with `f` applied to every expression it contains directly
/// or in nested statements. Assignment targets are not expressions and
/// are kept.
pub fn map_exprs(s: &Stmt, f: &mut dyn FnMut(&Expr) -> Expr) -> Stmt {
    let assign = |a: &Assign, f: &mut dyn FnMut(&Expr) -> Expr| Assign {
        target: a.target.clone(),
        op: match &a.op {
            AssignOp::Set(e) => AssignOp::Set(f(e)),
            AssignOp::AddAssign(e) => AssignOp::AddAssign(f(e)),
            AssignOp::SubAssign(e) => AssignOp::SubAssign(f(e)),
            other => other.clone(),
        },
        loc: a.loc.clone(),
    };
    let decl = |d: &VarDecl, f: &mut dyn FnMut(&Expr) -> Expr| VarDecl { init: d.init.as_ref().map(&mut *f), ..d.clone() };
    let kind = match &s.kind {
        StmtKind::Decl(d) => StmtKind::Decl(decl(d, f)),
        StmtKind::Assign(a) => StmtKind::Assign(assign(a, f)),
        StmtKind::Call(c) => StmtKind::Call(Call { callee: c.callee.clone(), args: c.args.iter().map(&mut *f).collect() }),
        StmtKind::If { cond, then, otherwise } => StmtKind::If {
            cond: f(cond),
            then: Box::new(map_exprs(then, f)),
            otherwise: otherwise.as_ref().map(|o| Box::new(map_exprs(o, f))),
        },
        StmtKind::Compound(items) => StmtKind::Compound(items.iter().map(|i| map_exprs(i, f)).collect()),
        StmtKind::For(fs) => StmtKind::For(ForStmt {
            init: fs.init.as_ref().map(|i| Box::new(map_exprs(i, f))),
            cond: f(&fs.cond),
            incr: assign(&fs.incr, f),
            body: Box::new(map_exprs(&fs.body, f)),
        }),
        StmtKind::Directive(d) => StmtKind::Directive(Directive {
            kind: d.kind,
            clauses: d.clauses.clone(),
            associated: Box::new(map_exprs(&d.associated, f)),
        }),
        StmtKind::Attributed { attr, stmt } => StmtKind::Attributed { attr: *attr, stmt: Box::new(map_exprs(stmt, f)) },
        StmtKind::ThreadLoop(t) => StmtKind::ThreadLoop(ThreadLoop {
            tid: decl(&t.tid, f),
            num_threads: t.num_threads,
            body: Box::new(map_exprs(&t.body, f)),
        }),
        StmtKind::CanonicalLoop(c) => {
            let mut c2 = (**c).clone();
            c2.loop_stmt = map_exprs(&c.loop_stmt, f);
            StmtKind::CanonicalLoop(Box::new(c2))
        }
    };
    Stmt { id: s.id, loc: s.loc.clone(), kind }
}

/// Substitutes `with` for reads of `decl` throughout `s`, then folds.
pub fn substitute_stmt(s: &Stmt, decl: DeclId, with: &Expr) -> Stmt {
    map_exprs(s, &mut |e| fold_expr(&e.substitute(decl, with)))
}

pub fn fold_stmt(s: &Stmt) -> Stmt {
    map_exprs(s, &mut fold_expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::SourceLocation;

    fn lit(v: u64) -> Expr {
        Expr::literal(v, IntType::UINT, SourceLocation::unknown())
    }

    #[test]
    fn folds_nested_constants_and_keeps_variables() {
        let l = SourceLocation::unknown();
        let x = Expr::var("x", DeclId(0), IntType::UINT, l.clone());
        let sum = Expr::binary(BinaryOp::Add, lit(2), Expr::binary(BinaryOp::Mul, lit(3), lit(4), l.clone()), l.clone());
        assert_eq!(fold_expr(&sum).as_literal(), Some(14));
        let mixed = Expr::binary(BinaryOp::Add, x.clone(), sum, l.clone());
        let folded = fold_expr(&mixed);
        assert!(matches!(&folded.kind, ExprKind::Binary { rhs, .. } if rhs.as_literal() == Some(14)));
        let guarded = Expr::binary(BinaryOp::LAnd, lit(0), x, l);
        assert_eq!(fold_expr(&guarded).as_literal(), Some(0));
    }

    #[test]
    fn division_by_zero_is_not_folded() {
        let l = SourceLocation::unknown();
        let e = Expr::binary(BinaryOp::Div, lit(1), lit(0), l);
        assert!(fold_expr(&e).as_literal().is_none());
    }
}
