//! Immutable syntax tree for the mini language.
//!
//! Nodes are never mutated after construction. Transformations build new
//! trees and reuse (clone) unchanged subtrees.

mod dump;
mod equal;
pub mod fold;
mod print;

pub use dump::{dump_program, dump_stmt};
pub use equal::{structural_equal, structural_equal_programs};
pub use print::{print_expr, print_program, print_stmt, print_transformed_program};

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::diag::SourceLocation;
use crate::sema::CanonicalForm;
use crate::types::IntType;

/// Identity of a statement node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Identity of a variable declaration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeclId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: IntType,
    pub loc: SourceLocation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    IntLiteral(u64),
    VarRef { name: String, decl: DeclId },
    /// A closure capture or input, by slot index (captures first, then inputs).
    ClosureParam { index: usize, name: String },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    /// Conversion to `Expr::ty`.
    Cast(Box<Expr>),
    Conditional { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    LAnd,
    LOr,
}

impl BinaryOp {
    pub fn spelling(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::LAnd => "&&",
            BinaryOp::LOr => "||",
        }
    }

    /// C precedence level; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::LOr => 1,
            BinaryOp::LAnd => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::LAnd | BinaryOp::LOr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

impl Expr {
    pub fn literal(value: u64, ty: IntType, loc: SourceLocation) -> Expr {
        Expr { kind: ExprKind::IntLiteral(value & ty.mask()), ty, loc }
    }

    pub fn var(name: impl Into<String>, decl: DeclId, ty: IntType, loc: SourceLocation) -> Expr {
        Expr { kind: ExprKind::VarRef { name: name.into(), decl }, ty, loc }
    }

    pub fn param(index: usize, name: impl Into<String>, ty: IntType, loc: SourceLocation) -> Expr {
        Expr { kind: ExprKind::ClosureParam { index, name: name.into() }, ty, loc }
    }

    /// Builds a binary node; the result type follows the promotion rule,
    /// comparisons and logical operators yield `int`.
    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr, loc: SourceLocation) -> Expr {
        let ty = if op.is_comparison() || op.is_logical() {
            IntType::INT
        } else {
            IntType::promote(lhs.ty, rhs.ty)
        };
        Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, ty, loc }
    }

    pub fn unary(op: UnaryOp, operand: Expr, loc: SourceLocation) -> Expr {
        let ty = match op {
            UnaryOp::Neg => operand.ty,
            UnaryOp::Not => IntType::INT,
        };
        Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, ty, loc }
    }

    pub fn cast(ty: IntType, operand: Expr, loc: SourceLocation) -> Expr {
        Expr { kind: ExprKind::Cast(Box::new(operand)), ty, loc }
    }

    pub fn conditional(cond: Expr, then: Expr, otherwise: Expr, loc: SourceLocation) -> Expr {
        let ty = IntType::promote(then.ty, otherwise.ty);
        Expr {
            kind: ExprKind::Conditional { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) },
            ty,
            loc,
        }
    }

    pub fn as_literal(&self) -> Option<u64> {
        match self.kind {
            ExprKind::IntLiteral(v) => Some(v),
            _ => None,
        }
    }

    /// Visits every sub-expression, this one included, in pre-order.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::IntLiteral(_) | ExprKind::VarRef { .. } | ExprKind::ClosureParam { .. } => {}
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            ExprKind::Unary { operand, .. } | ExprKind::Cast(operand) => operand.visit(f),
            ExprKind::Conditional { cond, then, otherwise } => {
                cond.visit(f);
                then.visit(f);
                otherwise.visit(f);
            }
        }
    }

    /// Declarations referenced by this expression.
    pub fn referenced_decls(&self) -> Vec<DeclId> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ExprKind::VarRef { decl, .. } = &e.kind {
                if !out.contains(decl) {
                    out.push(*decl);
                }
            }
        });
        out
    }

    pub fn references(&self, decl: DeclId) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let ExprKind::VarRef { decl: d, .. } = &e.kind {
                found |= *d == decl;
            }
        });
        found
    }

    /// Rebuilds the expression, replacing each node for which `f` returns
    /// `Some`. Children of replaced nodes are not visited.
    pub fn rewrite(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(e) = f(self) {
            return e;
        }
        let kind = match &self.kind {
            ExprKind::IntLiteral(_) | ExprKind::VarRef { .. } | ExprKind::ClosureParam { .. } => self.kind.clone(),
            ExprKind::Binary { op, lhs, rhs } => {
                ExprKind::Binary { op: *op, lhs: Box::new(lhs.rewrite(f)), rhs: Box::new(rhs.rewrite(f)) }
            }
            ExprKind::Unary { op, operand } => ExprKind::Unary { op: *op, operand: Box::new(operand.rewrite(f)) },
            ExprKind::Cast(operand) => ExprKind::Cast(Box::new(operand.rewrite(f))),
            ExprKind::Conditional { cond, then, otherwise } => ExprKind::Conditional {
                cond: Box::new(cond.rewrite(f)),
                then: Box::new(then.rewrite(f)),
                otherwise: Box::new(otherwise.rewrite(f)),
            },
        };
        Expr { kind, ty: self.ty, loc: self.loc.clone() }
    }

    /// Replaces references to `decl` with `with`, converted to the
    /// variable's type.
    pub fn substitute(&self, decl: DeclId, with: &Expr) -> Expr {
        self.rewrite(&mut |e| match &e.kind {
            ExprKind::VarRef { decl: d, .. } if *d == decl => Some(if with.ty == e.ty {
                with.clone()
            } else {
                Expr::cast(e.ty, with.clone(), e.loc.clone())
            }),
            _ => None,
        })
    }
}

/// The variable a statement assigns or a loop uses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarTarget {
    pub name: String,
    pub decl: DeclId,
    pub ty: IntType,
}

impl VarTarget {
    pub fn to_expr(&self, loc: SourceLocation) -> Expr {
        Expr::var(self.name.clone(), self.decl, self.ty, loc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub decl: DeclId,
    pub name: String,
    pub ty: IntType,
    pub init: Option<Expr>,
    /// Generated by a transformation; never named in diagnostics.
    pub internal: bool,
}

impl VarDecl {
    pub fn target(&self) -> VarTarget {
        VarTarget { name: self.name.clone(), decl: self.decl, ty: self.ty }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssignOp {
    Set(Expr),
    AddAssign(Expr),
    SubAssign(Expr),
    PreInc,
    PostInc,
    PreDec,
    PostDec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assign {
    pub target: VarTarget,
    pub op: AssignOp,
    pub loc: SourceLocation,
}

impl Assign {
    pub fn value_expr(&self) -> Option<&Expr> {
        match &self.op {
            AssignOp::Set(e) | AssignOp::AddAssign(e) | AssignOp::SubAssign(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Call {
    pub callee: String,
    pub args: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForStmt {
    /// A `Decl` or `Assign` statement, or nothing.
    pub init: Option<Box<Stmt>>,
    pub cond: Expr,
    pub incr: Assign,
    pub body: Box<Stmt>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DirectiveKind {
    Unroll,
    Tile,
    WorkshareFor,
}

impl DirectiveKind {
    /// Pragma spelling after `omp`.
    pub fn pragma_name(self) -> &'static str {
        match self {
            DirectiveKind::Unroll => "unroll",
            DirectiveKind::Tile => "tile",
            DirectiveKind::WorkshareFor => "for",
        }
    }

    pub fn class_name(self) -> &'static str {
        match self {
            DirectiveKind::Unroll => "OMPUnrollDirective",
            DirectiveKind::Tile => "OMPTileDirective",
            DirectiveKind::WorkshareFor => "OMPForDirective",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClauseKind {
    Full,
    Partial(Option<Expr>),
    Sizes(Vec<Expr>),
    Schedule { chunk: Option<Expr> },
    Collapse(Expr),
}

impl ClauseKind {
    pub fn name(&self) -> &'static str {
        match self {
            ClauseKind::Full => "full",
            ClauseKind::Partial(_) => "partial",
            ClauseKind::Sizes(_) => "sizes",
            ClauseKind::Schedule { .. } => "schedule",
            ClauseKind::Collapse(_) => "collapse",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub kind: ClauseKind,
    pub loc: SourceLocation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Directive {
    pub kind: DirectiveKind,
    pub clauses: Vec<Clause>,
    pub associated: Box<Stmt>,
}

impl Directive {
    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.kind.name() == name)
    }
}

/// Loop hint attached to a strip-mined inner loop, or to a loop whose
/// unrolling is left to a later stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoopHintAttr {
    /// Always at least 2.
    UnrollCount(u32),
    UnrollEnable,
}

/// Runs `body` once per simulated thread, in thread order, with the thread
/// id bound to `tid`. Produced by worksharing lowering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadLoop {
    pub tid: VarDecl,
    pub num_threads: u32,
    pub body: Box<Stmt>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaptureMode {
    ByValue,
    ByReference,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Capture {
    pub name: String,
    pub ty: IntType,
    pub mode: CaptureMode,
    /// Evaluated before the loop for by-value captures, at call time for
    /// by-reference ones.
    pub source: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: IntType,
}

/// A closure with captures, typed inputs and one output parameter. The
/// body refers to captures and inputs only, through `ClosureParam` slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureDescriptor {
    pub captures: Vec<Capture>,
    pub inputs: Vec<Param>,
    pub output: Param,
    pub body: Expr,
}

impl ClosureDescriptor {
    /// Substitutes `args` (one per capture, then one per input) for the
    /// parameter slots of the body.
    pub fn instantiate(&self, args: &[Expr]) -> Expr {
        assert_eq!(args.len(), self.captures.len() + self.inputs.len(), "closure arity");
        self.body.rewrite(&mut |e| match &e.kind {
            ExprKind::ClosureParam { index, .. } => {
                let a = &args[*index];
                Some(if a.ty == e.ty { a.clone() } else { Expr::cast(e.ty, a.clone(), a.loc.clone()) })
            }
            _ => None,
        })
    }

    /// Capture sources, in slot order.
    pub fn capture_sources(&self) -> Vec<Expr> {
        self.captures.iter().map(|c| c.source.clone()).collect()
    }
}

/// Implicit wrapper making a literal loop an OpenMP canonical loop. The
/// wrapped statement is the original node; unwrapping returns it intact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OMPCanonicalLoop {
    /// Always a `StmtKind::For`.
    pub loop_stmt: Stmt,
    pub form: CanonicalForm,
    /// No inputs; output is the trip count in `logical_type`.
    pub distance: ClosureDescriptor,
    /// One input of `logical_type`; output of the user variable's type.
    pub user_value: ClosureDescriptor,
    pub user_var: VarTarget,
    /// Whether the user variable is declared by the loop's init statement.
    pub user_var_declared: bool,
    pub logical_type: IntType,
}

impl OMPCanonicalLoop {
    pub fn for_stmt(&self) -> &ForStmt {
        match &self.loop_stmt.kind {
            StmtKind::For(f) => f,
            _ => unreachable!("canonical loop wraps a for statement"),
        }
    }

    pub fn body(&self) -> &Stmt {
        &self.for_stmt().body
    }

    pub fn into_loop(self) -> Stmt {
        self.loop_stmt
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub id: NodeId,
    pub loc: SourceLocation,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Decl(VarDecl),
    Assign(Assign),
    Call(Call),
    If { cond: Expr, then: Box<Stmt>, otherwise: Option<Box<Stmt>> },
    Compound(Vec<Stmt>),
    For(ForStmt),
    Directive(Directive),
    Attributed { attr: LoopHintAttr, stmt: Box<Stmt> },
    ThreadLoop(ThreadLoop),
    CanonicalLoop(Box<OMPCanonicalLoop>),
}

impl Stmt {
    pub fn as_for(&self) -> Option<&ForStmt> {
        match &self.kind {
            StmtKind::For(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_directive(&self) -> Option<&Directive> {
        match &self.kind {
            StmtKind::Directive(d) => Some(d),
            _ => None,
        }
    }

    /// Direct child statements, in order.
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Decl(_) | StmtKind::Assign(_) | StmtKind::Call(_) => Vec::new(),
            StmtKind::If { then, otherwise, .. } => {
                let mut v = alloc::vec![&**then];
                if let Some(o) = otherwise {
                    v.push(o);
                }
                v
            }
            StmtKind::Compound(s) => s.iter().collect(),
            StmtKind::For(f) => {
                let mut v = Vec::new();
                if let Some(i) = &f.init {
                    v.push(&**i);
                }
                v.push(&*f.body);
                v
            }
            StmtKind::Directive(d) => alloc::vec![&*d.associated],
            StmtKind::Attributed { stmt, .. } => alloc::vec![&**stmt],
            StmtKind::ThreadLoop(t) => alloc::vec![&*t.body],
            StmtKind::CanonicalLoop(c) => alloc::vec![&c.loop_stmt],
        }
    }

    /// Pre-order traversal of this statement and all nested statements.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Every declaration assigned (or declared) anywhere inside.
    pub fn assigned_decls(&self) -> Vec<DeclId> {
        let mut out = Vec::new();
        self.walk(&mut |s| {
            let d = match &s.kind {
                StmtKind::Assign(a) => Some(a.target.decl),
                StmtKind::For(f) => Some(f.incr.target.decl),
                _ => None,
            };
            if let Some(d) = d {
                if !out.contains(&d) {
                    out.push(d);
                }
            }
        });
        out
    }

    /// Number of `for` statements reachable, counting the node itself.
    pub fn count_loops(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |s| {
            if matches!(s.kind, StmtKind::For(_) | StmtKind::ThreadLoop(_)) {
                n += 1;
            }
        });
        n
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclInfo {
    pub name: String,
    pub ty: IntType,
    pub loc: SourceLocation,
}

/// A parsed translation unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub file: Arc<str>,
    pub stmts: Vec<Stmt>,
    /// Indexed by `DeclId`.
    pub decls: Vec<DeclInfo>,
    pub next_node: u32,
}

impl Program {
    pub fn id_gen(&self) -> IdGen {
        IdGen { next_node: self.next_node, next_decl: self.decls.len() as u32 }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.stmts {
            s.walk(f);
        }
    }
}

/// Allocator for fresh node and declaration ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdGen {
    pub next_node: u32,
    pub next_decl: u32,
}

impl IdGen {
    pub fn new() -> IdGen {
        IdGen { next_node: 0, next_decl: 0 }
    }

    pub fn node(&mut self) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        id
    }

    pub fn decl(&mut self) -> DeclId {
        let id = DeclId(self.next_decl);
        self.next_decl += 1;
        id
    }

    pub fn stmt(&mut self, loc: SourceLocation, kind: StmtKind) -> Stmt {
        Stmt { id: self.node(), loc, kind }
    }
}

impl Default for IdGen {
    fn default() -> Self {
        IdGen::new()
    }
}
