use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::lexer::{literal_value, Token, TokenKind};
use crate::ast::*;
use crate::diag::{Diagnostic, SourceLocation};
use crate::types::IntType;

type PResult<T> = Result<T, Diagnostic>;

/// Builds the program tree from a token stream ending in `Eof`.
pub fn parse_program(tokens: &[Token]) -> PResult<Program> {
    let Some(last) = tokens.last() else {
        return Err(Diagnostic::error(SourceLocation::unknown(), "empty token stream"));
    };
    if last.kind != TokenKind::Eof {
        return Err(Diagnostic::error(last.loc.clone(), "token stream does not end with end-of-file"));
    }
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        scopes: alloc::vec![Vec::new()],
        decls: Vec::new(),
        ids: IdGen::new(),
    };
    let mut stmts = Vec::new();
    while p.peek().kind != TokenKind::Eof {
        stmts.push(p.statement()?);
    }
    Ok(Program { file: last.loc.file.clone(), stmts, decls: p.decls, next_node: p.ids.next_node })
}

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str, filename: &str) -> PResult<Program> {
    let toks = super::lexer::tokenize(source, filename)?;
    parse_program(&toks)
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    scopes: Vec<Vec<(String, DeclId)>>,
    decls: Vec<DeclInfo>,
    ids: IdGen,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &'t Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.toks[self.pos];
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(self.peek().loc.clone(), msg)
    }

    fn expect_punct(&mut self, p: &str) -> PResult<&'t Token> {
        if self.peek().is_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected '{p}', found {}", self.peek().describe())))
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<&'t Token> {
        if self.peek().kind == TokenKind::Identifier {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    fn expect_pragma_end(&mut self) -> PResult<()> {
        if self.peek().kind == TokenKind::PragmaEnd {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("unexpected {} in pragma", self.peek().describe())))
        }
    }

    fn lookup(&self, name: &str) -> Option<(DeclId, IntType)> {
        for scope in self.scopes.iter().rev() {
            if let Some((_, d)) = scope.iter().rev().find(|(n, _)| n == name) {
                return Some((*d, self.decls[d.0 as usize].ty));
            }
        }
        None
    }

    fn declare(&mut self, tok: &Token, ty: IntType) -> PResult<DeclId> {
        let scope = self.scopes.last().expect("scope");
        if scope.iter().any(|(n, _)| *n == tok.text) {
            return Err(Diagnostic::error(tok.loc.clone(), format!("redefinition of '{}'", tok.text)));
        }
        let id = DeclId(self.decls.len() as u32);
        self.decls.push(DeclInfo { name: tok.text.clone(), ty, loc: tok.loc.clone() });
        self.scopes.last_mut().expect("scope").push((tok.text.clone(), id));
        Ok(id)
    }

    fn resolve(&self, tok: &Token) -> PResult<VarTarget> {
        let (decl, ty) = self
            .lookup(&tok.text)
            .ok_or_else(|| Diagnostic::error(tok.loc.clone(), format!("use of undeclared identifier '{}'", tok.text)))?;
        Ok(VarTarget { name: tok.text.clone(), decl, ty })
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let t = self.peek();
        let loc = t.loc.clone();
        match t.kind {
            TokenKind::PragmaIntro => self.pragma_stmt(),
            TokenKind::Punct if t.text == "{" => self.compound(),
            TokenKind::Punct if t.text == ";" => {
                self.bump();
                Ok(self.ids.stmt(loc, StmtKind::Compound(Vec::new())))
            }
            TokenKind::Keyword if t.text == "for" => self.for_stmt(),
            TokenKind::Keyword if t.text == "if" => self.if_stmt(),
            TokenKind::Keyword if IntType::from_keyword(&t.text).is_some() => {
                let s = self.decl()?;
                self.expect_punct(";")?;
                Ok(s)
            }
            TokenKind::Identifier if self.peek_at(1).is_punct("(") => self.call(),
            TokenKind::Identifier | TokenKind::Punct => {
                let a = self.update()?;
                self.expect_punct(";")?;
                Ok(self.ids.stmt(loc, StmtKind::Assign(a)))
            }
            _ => Err(self.error_here(format!("expected statement, found {}", t.describe()))),
        }
    }

    fn compound(&mut self) -> PResult<Stmt> {
        let loc = self.expect_punct("{")?.loc.clone();
        self.scopes.push(Vec::new());
        let mut body = Vec::new();
        while !self.peek().is_punct("}") {
            if self.peek().kind == TokenKind::Eof {
                return Err(self.error_here("expected '}' before end of file"));
            }
            body.push(self.statement()?);
        }
        self.bump();
        self.scopes.pop();
        Ok(self.ids.stmt(loc, StmtKind::Compound(body)))
    }

    fn call(&mut self) -> PResult<Stmt> {
        let name = self.bump();
        if name.text != "body" {
            return Err(Diagnostic::error(name.loc.clone(), format!("call to '{}': only 'body' may be called", name.text)));
        }
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.peek().is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        Ok(self.ids.stmt(name.loc.clone(), StmtKind::Call(Call { callee: name.text.clone(), args })))
    }

    /// `type name [= expr]` without the trailing semicolon.
    fn decl(&mut self) -> PResult<Stmt> {
        let kw = self.bump();
        let ty = IntType::from_keyword(&kw.text).expect("type keyword");
        let name = self.expect_ident("variable name")?;
        let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
        let decl = self.declare(name, ty)?;
        let vd = VarDecl { decl, name: name.text.clone(), ty, init, internal: false };
        Ok(self.ids.stmt(kw.loc.clone(), StmtKind::Decl(vd)))
    }

    /// Assignment or increment: `x = e`, `x += e`, `x -= e`, `++x`, `x++`, ...
    fn update(&mut self) -> PResult<Assign> {
        let t = self.peek();
        let loc = t.loc.clone();
        if t.is_punct("++") || t.is_punct("--") {
            self.bump();
            let name = self.expect_ident("variable name")?;
            let target = self.resolve(name)?;
            let op = if t.text == "++" { AssignOp::PreInc } else { AssignOp::PreDec };
            return Ok(Assign { target, op, loc });
        }
        let name = self.expect_ident("statement")?;
        let target = self.resolve(name)?;
        let op_tok = self.bump();
        let op = match (op_tok.kind, op_tok.text.as_str()) {
            (TokenKind::Punct, "=") => AssignOp::Set(self.expr()?),
            (TokenKind::Punct, "+=") => AssignOp::AddAssign(self.expr()?),
            (TokenKind::Punct, "-=") => AssignOp::SubAssign(self.expr()?),
            (TokenKind::Punct, "++") => AssignOp::PostInc,
            (TokenKind::Punct, "--") => AssignOp::PostDec,
            _ => {
                return Err(Diagnostic::error(
                    op_tok.loc.clone(),
                    format!("expected assignment operator, found {}", op_tok.describe()),
                ))
            }
        };
        Ok(Assign { target, op, loc })
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.bump().loc.clone();
        self.expect_punct("(")?;
        self.scopes.push(Vec::new());
        let init = if self.peek().is_punct(";") {
            None
        } else if self.peek().kind == TokenKind::Keyword && IntType::from_keyword(&self.peek().text).is_some() {
            Some(Box::new(self.decl()?))
        } else {
            let iloc = self.peek().loc.clone();
            let a = self.update()?;
            Some(Box::new(self.ids.stmt(iloc, StmtKind::Assign(a))))
        };
        self.expect_punct(";")?;
        let cond = self.expr()?;
        self.expect_punct(";")?;
        let incr = self.update()?;
        self.expect_punct(")")?;
        let body = self.statement()?;
        self.scopes.pop();
        Ok(self.ids.stmt(loc, StmtKind::For(ForStmt { init, cond, incr, body: Box::new(body) })))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.bump().loc.clone();
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then = Box::new(self.statement()?);
        let otherwise = if self.peek().is_keyword("else") {
            self.bump();
            Some(Box::new(self.statement()?))
        } else {
            None
        };
        Ok(self.ids.stmt(loc, StmtKind::If { cond, then, otherwise }))
    }

    fn pragma_stmt(&mut self) -> PResult<Stmt> {
        let intro = self.bump();
        let ns = self.expect_ident("pragma namespace")?;
        match ns.text.as_str() {
            "omp" => self.omp_directive(intro),
            "clang" => {
                let l = self.expect_ident("'loop'")?;
                if l.text != "loop" {
                    return Err(Diagnostic::error(l.loc.clone(), "expected 'loop' after '#pragma clang'"));
                }
                let h = self.expect_ident("loop hint")?;
                let attr = match h.text.as_str() {
                    "unroll_count" => {
                        self.expect_punct("(")?;
                        let n = self.positive_literal()?;
                        self.expect_punct(")")?;
                        if n < 2 {
                            return Err(Diagnostic::error(h.loc.clone(), "unroll_count must be at least 2"));
                        }
                        LoopHintAttr::UnrollCount(n)
                    }
                    "unroll" => {
                        self.expect_punct("(")?;
                        let e = self.expect_ident("'enable'")?;
                        if e.text != "enable" {
                            return Err(Diagnostic::error(e.loc.clone(), "expected 'enable'"));
                        }
                        self.expect_punct(")")?;
                        LoopHintAttr::UnrollEnable
                    }
                    other => return Err(Diagnostic::error(h.loc.clone(), format!("unknown loop hint '{other}'"))),
                };
                self.expect_pragma_end()?;
                let stmt = self.statement()?;
                if stmt.as_for().is_none() {
                    return Err(Diagnostic::error(stmt.loc.clone(), "loop hint must precede a for loop"));
                }
                Ok(self.ids.stmt(intro.loc.clone(), StmtKind::Attributed { attr, stmt: Box::new(stmt) }))
            }
            "loomp" => {
                let w = self.expect_ident("'simulate_threads'")?;
                if w.text != "simulate_threads" {
                    return Err(Diagnostic::error(w.loc.clone(), format!("unknown loomp pragma '{}'", w.text)));
                }
                self.expect_pragma_end()?;
                self.thread_loop(intro.loc.clone())
            }
            other => Err(Diagnostic::error(ns.loc.clone(), format!("unknown pragma '{other}'"))),
        }
    }

    fn positive_literal(&mut self) -> PResult<u32> {
        let t = self.peek();
        if t.kind != TokenKind::IntLiteral {
            return Err(self.error_here(format!("expected integer literal, found {}", t.describe())));
        }
        self.bump();
        literal_value(&t.text)
            .and_then(|(v, ..)| u32::try_from(v).ok())
            .ok_or_else(|| Diagnostic::error(t.loc.clone(), "literal out of range"))
    }

    /// `for (uint t = 0; t < N; ++t) body` following `#pragma loomp simulate_threads`.
    fn thread_loop(&mut self, loc: SourceLocation) -> PResult<Stmt> {
        let f = self.for_stmt()?;
        let bad = || Diagnostic::error(f.loc.clone(), "simulated thread loop must have the form 'for (uint t = 0; t < N; ++t)'");
        let StmtKind::For(fs) = f.kind.clone() else { unreachable!() };
        let Some(init) = fs.init else { return Err(bad()) };
        let StmtKind::Decl(tid) = init.kind else { return Err(bad()) };
        if tid.ty != IntType::UINT || tid.init.as_ref().and_then(Expr::as_literal) != Some(0) {
            return Err(bad());
        }
        let ExprKind::Binary { op: BinaryOp::Lt, lhs, rhs } = &fs.cond.kind else { return Err(bad()) };
        let n = rhs.as_literal().ok_or_else(bad)?;
        let lhs_ok = matches!(&lhs.kind, ExprKind::VarRef { decl, .. } if *decl == tid.decl);
        if !lhs_ok || fs.incr.target.decl != tid.decl || fs.incr.op != AssignOp::PreInc || n == 0 || n > u32::MAX as u64 {
            return Err(bad());
        }
        let tid = VarDecl { internal: true, ..tid };
        Ok(self.ids.stmt(loc, StmtKind::ThreadLoop(ThreadLoop { tid, num_threads: n as u32, body: fs.body })))
    }

    fn omp_directive(&mut self, intro: &Token) -> PResult<Stmt> {
        let name = if self.peek().is_keyword("for") { self.bump() } else { self.expect_ident("OpenMP directive name")? };
        let kind = match name.text.as_str() {
            "unroll" => DirectiveKind::Unroll,
            "tile" => DirectiveKind::Tile,
            "for" => DirectiveKind::WorkshareFor,
            other => return Err(Diagnostic::error(name.loc.clone(), format!("unknown OpenMP directive '{other}'"))),
        };
        let mut clauses: Vec<Clause> = Vec::new();
        loop {
            if self.peek().kind == TokenKind::PragmaEnd {
                break;
            }
            if !clauses.is_empty() {
                self.eat_punct(",");
            }
            let c = self.clause(kind)?;
            if let Some(prev) = clauses.iter().find(|p| p.kind.name() == c.kind.name()) {
                return Err(Diagnostic::error(c.loc.clone(), format!("duplicate '{}' clause", c.kind.name()))
                    .with_note(prev.loc.clone(), "previous clause is here"));
            }
            if kind == DirectiveKind::Unroll && !clauses.is_empty() {
                return Err(Diagnostic::error(c.loc.clone(), "'full' and 'partial' are mutually exclusive"));
            }
            clauses.push(c);
        }
        self.expect_pragma_end()?;
        if kind == DirectiveKind::Tile && clauses.is_empty() {
            return Err(Diagnostic::error(intro.loc.clone(), "'#pragma omp tile' requires a 'sizes' clause"));
        }
        let associated = self.statement()?;
        Ok(self.ids.stmt(intro.loc.clone(), StmtKind::Directive(Directive { kind, clauses, associated: Box::new(associated) })))
    }

    fn clause(&mut self, dir: DirectiveKind) -> PResult<Clause> {
        let name = self.expect_ident("clause name")?;
        let loc = name.loc.clone();
        let kind = match (dir, name.text.as_str()) {
            (DirectiveKind::Unroll, "full") => ClauseKind::Full,
            (DirectiveKind::Unroll, "partial") => {
                if self.eat_punct("(") {
                    let e = self.expr()?;
                    self.expect_punct(")")?;
                    ClauseKind::Partial(Some(e))
                } else {
                    ClauseKind::Partial(None)
                }
            }
            (DirectiveKind::Tile, "sizes") => {
                self.expect_punct("(")?;
                let mut sizes = alloc::vec![self.expr()?];
                while self.eat_punct(",") {
                    sizes.push(self.expr()?);
                }
                self.expect_punct(")")?;
                ClauseKind::Sizes(sizes)
            }
            (DirectiveKind::WorkshareFor, "schedule") => {
                self.expect_punct("(")?;
                let k = self.expect_ident("schedule kind")?;
                if k.text != "static" {
                    return Err(Diagnostic::error(k.loc.clone(), format!("unsupported schedule kind '{}'", k.text)));
                }
                let chunk = if self.eat_punct(",") { Some(self.expr()?) } else { None };
                self.expect_punct(")")?;
                ClauseKind::Schedule { chunk }
            }
            (DirectiveKind::WorkshareFor, "collapse") => {
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_punct(")")?;
                ClauseKind::Collapse(e)
            }
            (_, other) => {
                return Err(Diagnostic::error(
                    loc,
                    format!("unknown clause '{other}' for '#pragma omp {}'", dir.pragma_name()),
                ))
            }
        };
        Ok(Clause { kind, loc })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.peek().is_punct("?") {
            let loc = self.bump().loc.clone();
            let then = self.expr()?;
            self.expect_punct(":")?;
            let otherwise = self.expr()?;
            return Ok(Expr::conditional(cond, then, otherwise, loc));
        }
        Ok(cond)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let t = self.peek();
        if t.kind != TokenKind::Punct {
            return None;
        }
        Some(match t.text.as_str() {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Rem,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "&&" => BinaryOp::LAnd,
            "||" => BinaryOp::LOr,
            _ => return None,
        })
    }

    /// Precedence climbing over the left-associative binary operators.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            if op.precedence() < min_prec {
                break;
            }
            let loc = self.bump().loc.clone();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs, loc);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = self.peek();
        if t.is_punct("-") || t.is_punct("!") {
            self.bump();
            let operand = self.unary()?;
            let op = if t.text == "-" { UnaryOp::Neg } else { UnaryOp::Not };
            return Ok(Expr::unary(op, operand, t.loc.clone()));
        }
        if t.is_punct("(") {
            let next = self.peek_at(1);
            if let Some(ty) = (next.kind == TokenKind::Keyword).then(|| IntType::from_keyword(&next.text)).flatten() {
                self.bump();
                self.bump();
                self.expect_punct(")")?;
                let operand = self.unary()?;
                return Ok(Expr::cast(ty, operand, t.loc.clone()));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.bump();
        match t.kind {
            TokenKind::IntLiteral => {
                let (value, unsigned, long, hex) =
                    literal_value(&t.text).ok_or_else(|| Diagnostic::error(t.loc.clone(), "malformed integer literal"))?;
                let ty = literal_type(value, unsigned, long, hex)
                    .ok_or_else(|| Diagnostic::error(t.loc.clone(), format!("integer literal '{}' does not fit any type", t.text)))?;
                Ok(Expr::literal(value, ty, t.loc.clone()))
            }
            TokenKind::Identifier => {
                let v = self.resolve(t)?;
                Ok(Expr::var(v.name, v.decl, v.ty, t.loc.clone()))
            }
            TokenKind::Punct if t.text == "(" => {
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => Err(Diagnostic::error(t.loc.clone(), format!("expected expression, found {}", t.describe()))),
        }
    }
}

/// Type of a literal: the first of the candidate types that holds it.
fn literal_type(value: u64, unsigned: bool, long: bool, hex: bool) -> Option<IntType> {
    let candidates: &[IntType] = match (unsigned, long) {
        (false, false) if hex => &[IntType::INT, IntType::UINT, IntType::LONG, IntType::ULONG],
        (false, false) => &[IntType::INT, IntType::LONG],
        (true, false) => &[IntType::UINT, IntType::ULONG],
        (false, true) if hex => &[IntType::LONG, IntType::ULONG],
        (false, true) => &[IntType::LONG],
        (true, true) => &[IntType::ULONG],
    };
    candidates.iter().copied().find(|t| (value as i128) <= t.max_value())
}
