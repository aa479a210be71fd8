//! Structural equality modulo locations, node ids and declaration ids.

use alloc::collections::BTreeMap;

use super::*;

pub fn structural_equal(a: &Stmt, b: &Stmt) -> bool {
    Matcher::default().stmt(a, b)
}

pub fn structural_equal_programs(a: &Program, b: &Program) -> bool {
    let mut m = Matcher::default();
    a.stmts.len() == b.stmts.len() && a.stmts.iter().zip(&b.stmts).all(|(x, y)| m.stmt(x, y))
}

/// Declaration ids are matched through a bijection built on first use.
#[derive(Default)]
struct Matcher {
    fwd: BTreeMap<DeclId, DeclId>,
    back: BTreeMap<DeclId, DeclId>,
}

impl Matcher {
    fn decl(&mut self, a: DeclId, b: DeclId) -> bool {
        match (self.fwd.get(&a), self.back.get(&b)) {
            (Some(x), Some(y)) => *x == b && *y == a,
            (None, None) => {
                self.fwd.insert(a, b);
                self.back.insert(b, a);
                true
            }
            _ => false,
        }
    }

    fn target(&mut self, a: &VarTarget, b: &VarTarget) -> bool {
        a.name == b.name && a.ty == b.ty && self.decl(a.decl, b.decl)
    }

    fn expr(&mut self, a: &Expr, b: &Expr) -> bool {
        if a.ty != b.ty {
            return false;
        }
        match (&a.kind, &b.kind) {
            (ExprKind::IntLiteral(x), ExprKind::IntLiteral(y)) => x == y,
            (ExprKind::VarRef { name: n1, decl: d1 }, ExprKind::VarRef { name: n2, decl: d2 }) => {
                n1 == n2 && self.decl(*d1, *d2)
            }
            (ExprKind::ClosureParam { index: i1, name: n1 }, ExprKind::ClosureParam { index: i2, name: n2 }) => {
                i1 == i2 && n1 == n2
            }
            (ExprKind::Binary { op: o1, lhs: l1, rhs: r1 }, ExprKind::Binary { op: o2, lhs: l2, rhs: r2 }) => {
                o1 == o2 && self.expr(l1, l2) && self.expr(r1, r2)
            }
            (ExprKind::Unary { op: o1, operand: x }, ExprKind::Unary { op: o2, operand: y }) => o1 == o2 && self.expr(x, y),
            (ExprKind::Cast(x), ExprKind::Cast(y)) => self.expr(x, y),
            (
                ExprKind::Conditional { cond: c1, then: t1, otherwise: e1 },
                ExprKind::Conditional { cond: c2, then: t2, otherwise: e2 },
            ) => self.expr(c1, c2) && self.expr(t1, t2) && self.expr(e1, e2),
            _ => false,
        }
    }

    fn opt_expr(&mut self, a: Option<&Expr>, b: Option<&Expr>) -> bool {
        match (a, b) {
            (Some(x), Some(y)) => self.expr(x, y),
            (None, None) => true,
            _ => false,
        }
    }

    fn assign(&mut self, a: &Assign, b: &Assign) -> bool {
        if !self.target(&a.target, &b.target) {
            return false;
        }
        match (&a.op, &b.op) {
            (AssignOp::Set(x), AssignOp::Set(y))
            | (AssignOp::AddAssign(x), AssignOp::AddAssign(y))
            | (AssignOp::SubAssign(x), AssignOp::SubAssign(y)) => self.expr(x, y),
            (x, y) => x == y,
        }
    }

    fn var_decl(&mut self, a: &VarDecl, b: &VarDecl) -> bool {
        a.name == b.name && a.ty == b.ty && self.decl(a.decl, b.decl) && self.opt_expr(a.init.as_ref(), b.init.as_ref())
    }

    fn clause(&mut self, a: &Clause, b: &Clause) -> bool {
        match (&a.kind, &b.kind) {
            (ClauseKind::Full, ClauseKind::Full) => true,
            (ClauseKind::Partial(x), ClauseKind::Partial(y)) => self.opt_expr(x.as_ref(), y.as_ref()),
            (ClauseKind::Sizes(x), ClauseKind::Sizes(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| self.expr(p, q))
            }
            (ClauseKind::Schedule { chunk: x }, ClauseKind::Schedule { chunk: y }) => self.opt_expr(x.as_ref(), y.as_ref()),
            (ClauseKind::Collapse(x), ClauseKind::Collapse(y)) => self.expr(x, y),
            _ => false,
        }
    }

    fn opt_stmt(&mut self, a: Option<&Stmt>, b: Option<&Stmt>) -> bool {
        match (a, b) {
            (Some(x), Some(y)) => self.stmt(x, y),
            (None, None) => true,
            _ => false,
        }
    }

    fn stmt(&mut self, a: &Stmt, b: &Stmt) -> bool {
        match (&a.kind, &b.kind) {
            (StmtKind::Decl(x), StmtKind::Decl(y)) => self.var_decl(x, y),
            (StmtKind::Assign(x), StmtKind::Assign(y)) => self.assign(x, y),
            (StmtKind::Call(x), StmtKind::Call(y)) => {
                x.callee == y.callee && x.args.len() == y.args.len() && x.args.iter().zip(&y.args).all(|(p, q)| self.expr(p, q))
            }
            (
                StmtKind::If { cond: c1, then: t1, otherwise: e1 },
                StmtKind::If { cond: c2, then: t2, otherwise: e2 },
            ) => self.expr(c1, c2) && self.stmt(t1, t2) && self.opt_stmt(e1.as_deref(), e2.as_deref()),
            (StmtKind::Compound(x), StmtKind::Compound(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| self.stmt(p, q))
            }
            (StmtKind::For(x), StmtKind::For(y)) => {
                self.opt_stmt(x.init.as_deref(), y.init.as_deref())
                    && self.expr(&x.cond, &y.cond)
                    && self.assign(&x.incr, &y.incr)
                    && self.stmt(&x.body, &y.body)
            }
            (StmtKind::Directive(x), StmtKind::Directive(y)) => {
                x.kind == y.kind
                    && x.clauses.len() == y.clauses.len()
                    && x.clauses.iter().zip(&y.clauses).all(|(p, q)| self.clause(p, q))
                    && self.stmt(&x.associated, &y.associated)
            }
            (StmtKind::Attributed { attr: a1, stmt: s1 }, StmtKind::Attributed { attr: a2, stmt: s2 }) => {
                a1 == a2 && self.stmt(s1, s2)
            }
            (StmtKind::ThreadLoop(x), StmtKind::ThreadLoop(y)) => {
                x.num_threads == y.num_threads && self.var_decl(&x.tid, &y.tid) && self.stmt(&x.body, &y.body)
            }
            (StmtKind::CanonicalLoop(x), StmtKind::CanonicalLoop(y)) => self.stmt(&x.loop_stmt, &y.loop_stmt),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    #[test]
    fn reflexive_and_literal_sensitive() {
        let a = parse_source("for (int i = 7; i < 17; i += 3) body(i);", "a.c").unwrap();
        let b = parse_source("for (int i = 8; i < 17; i += 3) body(i);", "b.c").unwrap();
        assert!(structural_equal(&a.stmts[0], &a.stmts[0]));
        assert!(!structural_equal(&a.stmts[0], &b.stmts[0]));
    }

    #[test]
    fn declaration_ids_are_matched_by_position() {
        let a = parse_source("int n = 3; int m = n;", "a.c").unwrap();
        let b = parse_source("int pad = 0;\n", "b.c").unwrap();
        let mut shifted = parse_source("int pad = 0; int n = 3; int m = n;", "c.c").unwrap();
        shifted.stmts.remove(0);
        assert_eq!(b.stmts.len(), 1);
        assert!(structural_equal_programs(&a, &shifted));
    }
}
