//! Tree dump in the style of `clang -Xclang -ast-dump`, with declaration
//! ids `#n` in place of addresses.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;

use super::*;
use crate::eval::const_eval;
use crate::shadow::ShadowTable;

struct Node {
    label: String,
    children: Vec<Node>,
}

impl Node {
    fn leaf(label: impl Into<String>) -> Node {
        Node { label: label.into(), children: Vec::new() }
    }

    fn new(label: impl Into<String>, children: Vec<Node>) -> Node {
        Node { label: label.into(), children }
    }

    fn render(&self, out: &mut String, prefix: &str, marker: &str) {
        out.push_str(prefix);
        out.push_str(marker);
        out.push_str(&self.label);
        out.push('\n');
        let child_prefix = match marker {
            "" => String::from(prefix),
            "|-" => format!("{prefix}| "),
            _ => format!("{prefix}  "),
        };
        for (i, c) in self.children.iter().enumerate() {
            let m = if i + 1 == self.children.len() { "`-" } else { "|-" };
            c.render(out, &child_prefix, m);
        }
    }
}

/// Dumps every top-level statement. With a shadow table, each directive
/// that has a generated statement shows it under a `[transformed]` node
/// (result consumed by an enclosing directive) or an `[emitted]` node
/// (result emitted in place of the directive).
pub fn dump_program(p: &Program, table: Option<&ShadowTable>) -> String {
    let mut used = BTreeSet::new();
    p.walk(&mut |s| collect_used(s, &mut used));
    let d = Dumper { table, used };
    let mut out = String::new();
    for s in &p.stmts {
        d.stmt(s).render(&mut out, "", "");
    }
    out
}

pub fn dump_stmt(s: &Stmt, table: Option<&ShadowTable>) -> String {
    let mut used = BTreeSet::new();
    s.walk(&mut |s| collect_used(s, &mut used));
    let mut out = String::new();
    Dumper { table, used }.stmt(s).render(&mut out, "", "");
    out
}

fn collect_used(s: &Stmt, used: &mut BTreeSet<DeclId>) {
    let mut exprs: Vec<&Expr> = Vec::new();
    match &s.kind {
        StmtKind::Decl(d) => exprs.extend(&d.init),
        StmtKind::Assign(a) => {
            used.insert(a.target.decl);
            exprs.extend(a.value_expr());
        }
        StmtKind::Call(c) => exprs.extend(&c.args),
        StmtKind::If { cond, .. } => exprs.push(cond),
        StmtKind::For(f) => {
            exprs.push(&f.cond);
            used.insert(f.incr.target.decl);
            exprs.extend(f.incr.value_expr());
        }
        _ => {}
    }
    for e in exprs {
        used.extend(e.referenced_decls());
    }
}

struct Dumper<'a> {
    table: Option<&'a ShadowTable>,
    used: BTreeSet<DeclId>,
}

fn ty(t: IntType) -> String {
    format!("'{}'", t.c_name())
}

impl Dumper<'_> {
    fn expr(&self, e: &Expr) -> Node {
        let t = ty(e.ty);
        match &e.kind {
            ExprKind::IntLiteral(_) => {
                let v = crate::types::Value::new(e.ty, e.as_literal().unwrap_or(0));
                Node::leaf(format!("IntegerLiteral {t} {v}"))
            }
            ExprKind::VarRef { name, decl } => Node::leaf(format!("DeclRefExpr {t} lvalue Var #{} '{name}' {t}", decl.0)),
            ExprKind::ClosureParam { index, name } => {
                Node::leaf(format!("DeclRefExpr {t} lvalue ParmVar #{index} '{name}' {t}"))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                Node::new(format!("BinaryOperator {t} '{}'", op.spelling()), alloc::vec![self.expr(lhs), self.expr(rhs)])
            }
            ExprKind::Unary { op, operand } => {
                let s = match op {
                    UnaryOp::Neg => "-",
                    UnaryOp::Not => "!",
                };
                Node::new(format!("UnaryOperator {t} prefix '{s}'"), alloc::vec![self.expr(operand)])
            }
            ExprKind::Cast(operand) => Node::new(format!("CStyleCastExpr {t} <IntegralCast>"), alloc::vec![self.expr(operand)]),
            ExprKind::Conditional { cond, then, otherwise } => Node::new(
                format!("ConditionalOperator {t}"),
                alloc::vec![self.expr(cond), self.expr(then), self.expr(otherwise)],
            ),
        }
    }

    fn decl_ref(&self, v: &VarTarget) -> Node {
        let t = ty(v.ty);
        Node::leaf(format!("DeclRefExpr {t} lvalue Var #{} '{}' {t}", v.decl.0, v.name))
    }

    fn assign(&self, a: &Assign) -> Node {
        let t = ty(a.target.ty);
        let target = self.decl_ref(&a.target);
        match &a.op {
            AssignOp::Set(e) => Node::new(format!("BinaryOperator {t} '='"), alloc::vec![target, self.expr(e)]),
            AssignOp::AddAssign(e) => Node::new(format!("CompoundAssignOperator {t} '+='"), alloc::vec![target, self.expr(e)]),
            AssignOp::SubAssign(e) => Node::new(format!("CompoundAssignOperator {t} '-='"), alloc::vec![target, self.expr(e)]),
            AssignOp::PreInc => Node::new(format!("UnaryOperator {t} prefix '++'"), alloc::vec![target]),
            AssignOp::PostInc => Node::new(format!("UnaryOperator {t} postfix '++'"), alloc::vec![target]),
            AssignOp::PreDec => Node::new(format!("UnaryOperator {t} prefix '--'"), alloc::vec![target]),
            AssignOp::PostDec => Node::new(format!("UnaryOperator {t} postfix '--'"), alloc::vec![target]),
        }
    }

    fn var_decl(&self, d: &VarDecl) -> Node {
        let used = if self.used.contains(&d.decl) { " used" } else { "" };
        let implicit = if d.internal { " implicit" } else { "" };
        let cinit = if d.init.is_some() { " cinit" } else { "" };
        let label = format!("VarDecl #{}{implicit}{used} {} {}{cinit}", d.decl.0, d.name, ty(d.ty));
        Node::new(label, d.init.iter().map(|e| self.expr(e)).collect())
    }

    fn constant(&self, e: &Expr) -> Node {
        match const_eval(e) {
            Some(v) => Node::new(format!("ConstantExpr {}", ty(e.ty)), alloc::vec![Node::leaf(format!("value: Int {v}")), self.expr(e)]),
            None => self.expr(e),
        }
    }

    fn clause(&self, c: &Clause) -> Node {
        match &c.kind {
            ClauseKind::Full => Node::leaf("OMPFullClause"),
            ClauseKind::Partial(f) => Node::new("OMPPartialClause", f.iter().map(|e| self.constant(e)).collect()),
            ClauseKind::Sizes(s) => Node::new("OMPSizesClause", s.iter().map(|e| self.constant(e)).collect()),
            ClauseKind::Schedule { chunk } => {
                Node::new("OMPScheduleClause static", chunk.iter().map(|e| self.constant(e)).collect())
            }
            ClauseKind::Collapse(e) => Node::new("OMPCollapseClause", alloc::vec![self.constant(e)]),
        }
    }

    fn stmt(&self, s: &Stmt) -> Node {
        match &s.kind {
            StmtKind::Decl(d) => Node::new("DeclStmt", alloc::vec![self.var_decl(d)]),
            StmtKind::Assign(a) => self.assign(a),
            StmtKind::Call(c) => Node::new(format!("CallExpr 'void' {}", c.callee), c.args.iter().map(|e| self.expr(e)).collect()),
            StmtKind::If { cond, then, otherwise } => {
                let mut ch = alloc::vec![self.expr(cond), self.stmt(then)];
                if let Some(o) = otherwise {
                    ch.push(self.stmt(o));
                }
                Node::new("IfStmt", ch)
            }
            StmtKind::Compound(items) => Node::new("CompoundStmt", items.iter().map(|i| self.stmt(i)).collect()),
            StmtKind::For(f) => {
                let init = f.init.as_deref().map_or_else(|| Node::leaf("<<<NULL>>>"), |i| self.stmt(i));
                Node::new(
                    "ForStmt",
                    alloc::vec![init, Node::leaf("<<<NULL>>>"), self.expr(&f.cond), self.assign(&f.incr), self.stmt(&f.body)],
                )
            }
            StmtKind::Directive(d) => {
                let mut ch: Vec<Node> = d.clauses.iter().map(|c| self.clause(c)).collect();
                ch.push(self.stmt(&d.associated));
                if let Some(entry) = self.table.and_then(|t| t.get(s.id)) {
                    let label = if entry.consumed { "[transformed]" } else { "[emitted]" };
                    let t = &entry.transformed;
                    let mut body: Vec<Node> = t.pre_inits.iter().map(|p| self.stmt(p)).collect();
                    body.push(self.stmt(&t.stmt));
                    body.extend(t.finalizers.iter().map(|f| self.stmt(f)));
                    ch.push(Node::new(label, body));
                }
                Node::new(d.kind.class_name(), ch)
            }
            StmtKind::Attributed { attr, stmt } => {
                let hint = match attr {
                    LoopHintAttr::UnrollCount(n) => Node::new(
                        "LoopHintAttr Implicit loop UnrollCount Numeric",
                        alloc::vec![Node::leaf(format!("IntegerLiteral 'int' {n}"))],
                    ),
                    LoopHintAttr::UnrollEnable => Node::leaf("LoopHintAttr Implicit loop Unroll Enable"),
                };
                Node::new("AttributedStmt", alloc::vec![hint, self.stmt(stmt)])
            }
            StmtKind::ThreadLoop(t) => Node::new(
                format!("SimulatedThreadsStmt {}", t.num_threads),
                alloc::vec![self.var_decl(&t.tid), self.stmt(&t.body)],
            ),
            StmtKind::CanonicalLoop(c) => Node::new(
                "OMPCanonicalLoop",
                alloc::vec![
                    self.stmt(&c.loop_stmt),
                    Node::new("CapturedStmt distance", alloc::vec![self.expr(&c.distance.body)]),
                    Node::new("CapturedStmt loop value", alloc::vec![self.expr(&c.user_value.body)]),
                    self.decl_ref(&c.user_var),
                ],
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    #[test]
    fn fig3_loop_dump_shape() {
        let p = parse_source("for (int i = 7; i < 17; i += 3)\n  body(i);\n", "t.c").unwrap();
        let text = dump_program(&p, None);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ForStmt");
        assert_eq!(lines[1], "|-DeclStmt");
        assert_eq!(lines[2], "| `-VarDecl #0 used i 'int' cinit");
        assert_eq!(lines[3], "|   `-IntegerLiteral 'int' 7");
        assert_eq!(lines[4], "|-<<<NULL>>>");
        assert_eq!(lines.last(), Some(&"  `-DeclRefExpr 'int' lvalue Var #0 'i' 'int'"));
    }

    #[test]
    fn literal_leaf() {
        let e = Expr::literal(0, IntType::INT, crate::diag::SourceLocation::unknown());
        let d = Dumper { table: None, used: BTreeSet::new() };
        let mut out = String::new();
        d.expr(&e).render(&mut out, "", "");
        assert_eq!(out, "IntegerLiteral 'int' 0\n");
    }

    #[test]
    fn partial_clause_shows_constant_value() {
        let src = "#pragma omp unroll full\n#pragma omp unroll partial(2)\nfor (int i = 7; i < 17; i += 3) body(i);\n";
        let text = dump_program(&parse_source(src, "t.c").unwrap(), None);
        let expected = "OMPUnrollDirective\n|-OMPFullClause\n`-OMPUnrollDirective\n  |-OMPPartialClause\n  | `-ConstantExpr 'int'\n  |   |-value: Int 2\n  |   `-IntegerLiteral 'int' 2\n  `-ForStmt\n";
        assert!(text.starts_with(expected), "{text}");
    }
}
