//! Pretty-printer back to mini-language source.

use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use super::*;
use crate::shadow::ShadowTable;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for s in &p.stmts {
        Printer { out: &mut out, table: None }.stmt(s, 0);
    }
    out
}

/// Source with every directive replaced by its generated code.
pub fn print_transformed_program(p: &Program, table: &ShadowTable) -> String {
    let mut out = String::new();
    for s in &p.stmts {
        Printer { out: &mut out, table: Some(table) }.stmt(s, 0);
    }
    out
}

pub fn print_stmt(s: &Stmt) -> String {
    let mut out = String::new();
    Printer { out: &mut out, table: None }.stmt(s, 0);
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr_into(&mut out, e, 0);
    out
}

fn literal_text(v: u64, ty: IntType) -> String {
    let suffix = match (ty.bits, ty.signed) {
        (32, true) => "",
        (32, false) => "u",
        (64, true) => "L",
        _ => "uL",
    };
    let value = crate::types::Value::new(ty, v).as_i128();
    if value >= 0 {
        format!("{value}{suffix}")
    } else if -value <= ty.max_value() {
        format!("(-{}{suffix})", -value)
    } else {
        format!("(({}){v:#x}{})", ty.keyword(), if ty.bits == 64 { "uL" } else { "u" })
    }
}

fn expr_into(out: &mut String, e: &Expr, min_prec: u8) {
    match &e.kind {
        ExprKind::IntLiteral(v) => out.push_str(&literal_text(*v, e.ty)),
        ExprKind::VarRef { name, .. } => out.push_str(name),
        ExprKind::ClosureParam { name, .. } => out.push_str(name),
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            expr_into(out, lhs, p);
            let _ = write!(out, " {} ", op.spelling());
            expr_into(out, rhs, p + 1);
            if paren {
                out.push(')');
            }
        }
        ExprKind::Unary { .. } if min_prec > 7 => {
            out.push('(');
            expr_into(out, e, 0);
            out.push(')');
        }
        ExprKind::Unary { op, operand } => {
            out.push(match op {
                UnaryOp::Neg => '-',
                UnaryOp::Not => '!',
            });
            let nested_neg = *op == UnaryOp::Neg && matches!(operand.kind, ExprKind::Unary { op: UnaryOp::Neg, .. });
            expr_into(out, operand, if nested_neg { 8 } else { 7 });
        }
        ExprKind::Cast(operand) => {
            let _ = write!(out, "({})", e.ty.keyword());
            expr_into(out, operand, 7);
        }
        ExprKind::Conditional { cond, then, otherwise } => {
            let paren = min_prec > 0;
            if paren {
                out.push('(');
            }
            expr_into(out, cond, 1);
            out.push_str(" ? ");
            expr_into(out, then, 0);
            out.push_str(" : ");
            expr_into(out, otherwise, 0);
            if paren {
                out.push(')');
            }
        }
    }
}

pub(crate) fn assign_text(a: &Assign) -> String {
    let mut out = String::new();
    let n = &a.target.name;
    match &a.op {
        AssignOp::Set(e) => {
            let _ = write!(out, "{n} = ");
            expr_into(&mut out, e, 0);
        }
        AssignOp::AddAssign(e) => {
            let _ = write!(out, "{n} += ");
            expr_into(&mut out, e, 0);
        }
        AssignOp::SubAssign(e) => {
            let _ = write!(out, "{n} -= ");
            expr_into(&mut out, e, 0);
        }
        AssignOp::PreInc => {
            let _ = write!(out, "++{n}");
        }
        AssignOp::PostInc => {
            let _ = write!(out, "{n}++");
        }
        AssignOp::PreDec => {
            let _ = write!(out, "--{n}");
        }
        AssignOp::PostDec => {
            let _ = write!(out, "{n}--");
        }
    }
    out
}

fn decl_text(d: &VarDecl) -> String {
    match &d.init {
        Some(e) => format!("{} {} = {}", d.ty.keyword(), d.name, print_expr(e)),
        None => format!("{} {}", d.ty.keyword(), d.name),
    }
}

pub(crate) fn clause_text(c: &Clause) -> String {
    match &c.kind {
        ClauseKind::Full => "full".into(),
        ClauseKind::Partial(None) => "partial".into(),
        ClauseKind::Partial(Some(e)) => format!("partial({})", print_expr(e)),
        ClauseKind::Sizes(s) => {
            let parts: Vec<String> = s.iter().map(print_expr).collect();
            format!("sizes({})", parts.join(", "))
        }
        ClauseKind::Schedule { chunk: None } => "schedule(static)".into(),
        ClauseKind::Schedule { chunk: Some(e) } => format!("schedule(static, {})", print_expr(e)),
        ClauseKind::Collapse(e) => format!("collapse({})", print_expr(e)),
    }
}

struct Printer<'a> {
    out: &'a mut String,
    table: Option<&'a ShadowTable>,
}

impl Printer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    /// Prints `s` as the body of a construct whose header is already on
    /// the current (unterminated) line.
    fn body(&mut self, s: &Stmt, depth: usize) {
        if let StmtKind::Compound(items) = &s.kind {
            self.out.push_str(" {\n");
            for i in items {
                self.stmt(i, depth + 1);
            }
            for _ in 0..depth {
                self.out.push_str("  ");
            }
            self.out.push('}');
        } else {
            self.out.push('\n');
            self.stmt_no_newline(s, depth + 1);
        }
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        self.stmt_no_newline(s, depth);
        self.out.push('\n');
    }

    fn stmt_no_newline(&mut self, s: &Stmt, depth: usize) {
        match &s.kind {
            StmtKind::Decl(d) => {
                self.indent(depth);
                let _ = write!(self.out, "{};", decl_text(d));
            }
            StmtKind::Assign(a) => {
                self.indent(depth);
                let _ = write!(self.out, "{};", assign_text(a));
            }
            StmtKind::Call(c) => {
                self.indent(depth);
                let args: Vec<String> = c.args.iter().map(print_expr).collect();
                let _ = write!(self.out, "{}({});", c.callee, args.join(", "));
            }
            StmtKind::If { cond, then, otherwise } => {
                self.indent(depth);
                let _ = write!(self.out, "if ({})", print_expr(cond));
                self.body(then, depth);
                if let Some(o) = otherwise {
                    if matches!(then.kind, StmtKind::Compound(_)) {
                        self.out.push_str(" else");
                    } else {
                        self.out.push('\n');
                        self.indent(depth);
                        self.out.push_str("else");
                    }
                    self.body(o, depth);
                }
            }
            StmtKind::Compound(items) if items.is_empty() => {
                self.indent(depth);
                self.out.push_str("{}");
            }
            StmtKind::Compound(items) => {
                self.indent(depth);
                self.out.push_str("{\n");
                for i in items {
                    self.stmt(i, depth + 1);
                }
                self.indent(depth);
                self.out.push('}');
            }
            StmtKind::For(f) => {
                self.indent(depth);
                let init = match f.init.as_deref().map(|s| &s.kind) {
                    Some(StmtKind::Decl(d)) => decl_text(d),
                    Some(StmtKind::Assign(a)) => assign_text(a),
                    _ => String::new(),
                };
                let _ = write!(self.out, "for ({init}; {}; {})", print_expr(&f.cond), assign_text(&f.incr));
                self.body(&f.body, depth);
            }
            StmtKind::Directive(d) => {
                if let Some(t) = self.table.and_then(|t| t.get(s.id)) {
                    let t = t.transformed.clone();
                    self.indent(depth);
                    self.out.push_str("{\n");
                    for p in &t.pre_inits {
                        self.stmt(p, depth + 1);
                    }
                    self.stmt(&t.stmt, depth + 1);
                    for f in &t.finalizers {
                        self.stmt(f, depth + 1);
                    }
                    self.indent(depth);
                    self.out.push('}');
                    return;
                }
                let mut text = format!("#pragma omp {}", d.kind.pragma_name());
                for c in &d.clauses {
                    text.push(' ');
                    text.push_str(&clause_text(c));
                }
                self.line(0, &text);
                self.stmt_no_newline(&d.associated, depth);
            }
            StmtKind::Attributed { attr, stmt } => {
                let text = match attr {
                    LoopHintAttr::UnrollCount(n) => format!("#pragma clang loop unroll_count({n})"),
                    LoopHintAttr::UnrollEnable => "#pragma clang loop unroll(enable)".into(),
                };
                self.line(0, &text);
                self.stmt_no_newline(stmt, depth);
            }
            StmtKind::ThreadLoop(t) => {
                self.line(0, "#pragma loomp simulate_threads");
                self.indent(depth);
                let v = &t.tid.name;
                let _ = write!(self.out, "for (uint {v} = 0; {v} < {}u; ++{v})", t.num_threads);
                self.body(&t.body, depth);
            }
            StmtKind::CanonicalLoop(c) => self.stmt_no_newline(&c.loop_stmt, depth),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn roundtrip(src: &str) -> String {
        print_program(&parse_source(src, "t.c").unwrap())
    }

    #[test]
    fn precedence_is_kept_with_minimal_parentheses() {
        let out = roundtrip("int a = 1; int b = (a + 2) * 3 - (a - (1 - 2)); int c = a < b && !(a == b) ? -a : (long)b;");
        assert!(out.contains("int b = (a + 2) * 3 - (a - (1 - 2));"), "{out}");
        assert!(out.contains("int c = a < b && !(a == b) ? -a : (long)b;"), "{out}");
    }

    #[test]
    fn pragmas_print_at_column_zero() {
        let out = roundtrip("{\n#pragma omp unroll partial(2)\nfor (int i = 0; i < 4; ++i) body(i);\n}");
        assert_eq!(out, "{\n#pragma omp unroll partial(2)\n  for (int i = 0; i < 4; ++i)\n    body(i);\n}\n");
    }

    #[test]
    fn literal_suffixes() {
        assert_eq!(literal_text(5, IntType::UINT), "5u");
        assert_eq!(literal_text(5, IntType::LONG), "5L");
        assert_eq!(literal_text(u32::MAX as u64, IntType::INT), "(-1)");
        assert_eq!(literal_text(0x8000_0000, IntType::INT), "((int)0x80000000u)");
    }
}
