//! Small constructors for generated statements and expressions.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ast::fold::fold_expr;
use crate::ast::*;
use crate::diag::SourceLocation;
use crate::types::IntType;

pub(crate) struct Gen<'a> {
    pub ids: &'a mut IdGen,
    pub decls: &'a mut Vec<DeclInfo>,
    pub loc: SourceLocation,
}

impl Gen<'_> {
    pub fn var(&mut self, name: impl Into<String>, ty: IntType) -> VarTarget {
        let name = name.into();
        let decl = DeclId(self.decls.len() as u32);
        self.decls.push(DeclInfo { name: name.clone(), ty, loc: self.loc.clone() });
        VarTarget { name, decl, ty }
    }

    pub fn stmt(&mut self, kind: StmtKind) -> Stmt {
        self.ids.stmt(self.loc.clone(), kind)
    }

    pub fn decl(&mut self, v: &VarTarget, init: Expr) -> Stmt {
        let d = VarDecl { decl: v.decl, name: v.name.clone(), ty: v.ty, init: Some(init), internal: true };
        self.stmt(StmtKind::Decl(d))
    }

    pub fn assign(&mut self, v: &VarTarget, e: Expr) -> Stmt {
        let a = Assign { target: v.clone(), op: AssignOp::Set(e), loc: self.loc.clone() };
        self.stmt(StmtKind::Assign(a))
    }

    pub fn compound(&mut self, items: Vec<Stmt>) -> Stmt {
        self.stmt(StmtKind::Compound(items))
    }

    pub fn if_then(&mut self, cond: Expr, then: Stmt) -> Stmt {
        self.stmt(StmtKind::If { cond, then: Box::new(then), otherwise: None })
    }

    /// `for (ty iv = init; cond; iv += step) body`, with `++iv` for a unit step.
    pub fn for_loop(&mut self, iv: &VarTarget, init: Expr, cond: Expr, step: Expr, body: Stmt) -> Stmt {
        let init = self.decl(iv, init);
        let op = if step.as_literal() == Some(1) { AssignOp::PreInc } else { AssignOp::AddAssign(step) };
        let incr = Assign { target: iv.clone(), op, loc: self.loc.clone() };
        self.stmt(StmtKind::For(ForStmt { init: Some(Box::new(init)), cond, incr, body: Box::new(body) }))
    }

    pub fn lit(&self, v: u64, ty: IntType) -> Expr {
        Expr::literal(v, ty, self.loc.clone())
    }

    pub fn read(&self, v: &VarTarget) -> Expr {
        v.to_expr(self.loc.clone())
    }

    /// Folded binary expression; adding zero and scaling by one vanish.
    pub fn bin(&self, op: BinaryOp, a: Expr, b: Expr) -> Expr {
        let e = fold_expr(&Expr::binary(op, a, b, self.loc.clone()));
        let ExprKind::Binary { op, lhs, rhs } = &e.kind else { return e };
        let keep = match (op, lhs.as_literal(), rhs.as_literal()) {
            (BinaryOp::Add, Some(0), _) | (BinaryOp::Mul, Some(1), _) => Some(rhs),
            (BinaryOp::Add | BinaryOp::Sub, _, Some(0)) | (BinaryOp::Mul | BinaryOp::Div, _, Some(1)) => Some(lhs),
            _ => None,
        };
        match keep {
            Some(x) if x.ty == e.ty => (**x).clone(),
            _ => e,
        }
    }

    pub fn cast(&self, ty: IntType, e: Expr) -> Expr {
        if e.ty == ty {
            e
        } else {
            fold_expr(&Expr::cast(ty, e, self.loc.clone()))
        }
    }

    /// `n / d + (n % d != 0)` in the type of `n`.
    pub fn ceil_div(&self, n: Expr, d: Expr) -> Expr {
        let ty = n.ty;
        let q = self.bin(BinaryOp::Div, n.clone(), d.clone());
        let r = self.bin(BinaryOp::Rem, n, d);
        let carry = self.cast(ty, self.bin(BinaryOp::Ne, r, self.lit(0, ty)));
        self.bin(BinaryOp::Add, q, carry)
    }
}
