//! Lowering of whole programs. Loops without directives become plain
//! compare-and-branch loops; loops under directives are materialized as
//! canonical skeletons and handed to the transformations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::*;
use crate::ast::*;
use crate::diag::Diagnostic;
use crate::sema::{self, SemaOptions, UnrollDecision};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LowerOptions {
    pub heuristic_factor: u64,
    pub num_threads: u32,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { heuristic_factor: 2, num_threads: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lowered {
    pub module: IrModule,
    /// Loops left by each outermost directive, by the directive's node id.
    pub directive_loops: BTreeMap<NodeId, Vec<LoopId>>,
}

/// Validates and lowers `p`, applying every directive on the IR.
pub fn lower_program(p: &Program, opts: &LowerOptions) -> Result<Lowered, Vec<Diagnostic>> {
    let sema_opts = SemaOptions { heuristic_factor: opts.heuristic_factor };
    sema::check_program_with(p, &sema_opts)?;
    let mut l = Lowerer {
        m: IrModule::new(),
        vars: BTreeMap::new(),
        decls: &p.decls,
        consumed: sema::consumed_directives(p),
        opts: *opts,
        sema: sema_opts,
        thread: None,
        directive_loops: BTreeMap::new(),
    };
    let mut b = l.m.entry;
    for s in &p.stmts {
        l.stmt(s, &mut b).map_err(|e| alloc::vec![e])?;
    }
    l.m.terminate(b, Terminator::Halt);
    l.m.compact();
    Ok(Lowered { module: l.m, directive_loops: l.directive_loops })
}

type LResult<T> = Result<T, Diagnostic>;

struct Lowerer<'a> {
    m: IrModule,
    vars: BTreeMap<DeclId, VarId>,
    decls: &'a [DeclInfo],
    consumed: BTreeSet<NodeId>,
    opts: LowerOptions,
    sema: SemaOptions,
    thread: Option<ValueId>,
    directive_loops: BTreeMap<NodeId, Vec<LoopId>>,
}

/// Whether evaluating `e` can fail, which rules out evaluating it
/// speculatively.
fn may_trap(e: &Expr) -> bool {
    let mut trap = false;
    e.visit(&mut |x| {
        if let ExprKind::Binary { op: BinaryOp::Div | BinaryOp::Rem, rhs, .. } = &x.kind {
            if rhs.as_literal().is_none_or(|v| v == 0) {
                trap = true;
            }
        }
    });
    trap
}

/// One loop of a directive's nest with the values computed before it.
struct Level {
    canon: OMPCanonicalLoop,
    begin: ValueId,
    tc: ValueId,
}

impl Lowerer<'_> {
    fn var(&mut self, decl: DeclId) -> VarId {
        if let Some(v) = self.vars.get(&decl) {
            return *v;
        }
        let info = &self.decls[decl.0 as usize];
        let v = self.m.add_var(&info.name, info.ty);
        self.vars.insert(decl, v);
        v
    }

    fn zero(&mut self, b: BlockId, ty: IntType) -> ValueId {
        self.m.konst(b, ty, 0)
    }

    fn truth(&mut self, b: BlockId, v: ValueId) -> ValueId {
        let ty = self.m.value_type(v).expect("defined value");
        let z = self.zero(b, ty);
        self.m.cmp(b, CmpPred::Ne, v, z)
    }

    /// Lowers `e` at `*b`, which moves on if `e` needs control flow.
    /// Closure slots read `params`.
    fn expr(&mut self, b: &mut BlockId, e: &Expr, params: &[ValueId]) -> ValueId {
        let v = match &e.kind {
            ExprKind::IntLiteral(v) => self.m.konst(*b, e.ty, *v),
            ExprKind::VarRef { decl, .. } => {
                let var = self.var(*decl);
                self.m.load(*b, var)
            }
            ExprKind::ClosureParam { index, .. } => params[*index],
            ExprKind::Cast(x) => self.expr(b, x, params),
            ExprKind::Unary { op, operand } => {
                let x = self.expr(b, operand, params);
                match op {
                    UnaryOp::Neg => {
                        let x = self.m.cast(*b, e.ty, x);
                        let z = self.zero(*b, e.ty);
                        self.m.bin(*b, BinOp::Sub, z, x)
                    }
                    UnaryOp::Not => {
                        let ty = self.m.value_type(x).expect("defined value");
                        let z = self.zero(*b, ty);
                        self.m.cmp(*b, CmpPred::Eq, x, z)
                    }
                }
            }
            ExprKind::Binary { op: op @ (BinaryOp::LAnd | BinaryOp::LOr), lhs, rhs } => {
                let is_and = *op == BinaryOp::LAnd;
                let l = self.expr(b, lhs, params);
                let lt = self.truth(*b, l);
                if !may_trap(rhs) {
                    let r = self.expr(b, rhs, params);
                    let rt = self.truth(*b, r);
                    let fixed = self.m.konst(*b, IntType::INT, !is_and as u64);
                    if is_and {
                        self.m.select(*b, lt, rt, fixed)
                    } else {
                        self.m.select(*b, lt, fixed, rt)
                    }
                } else {
                    let tmp = self.m.add_var("tmp", IntType::INT);
                    self.m.store(*b, tmp, lt);
                    let rb = self.m.add_block("logic.rhs");
                    let join = self.m.add_block("logic.end");
                    let (then, otherwise) = if is_and { (rb, join) } else { (join, rb) };
                    self.m.terminate(*b, Terminator::Branch { cond: lt, then, otherwise });
                    let mut cur = rb;
                    let r = self.expr(&mut cur, rhs, params);
                    let rt = self.truth(cur, r);
                    self.m.store(cur, tmp, rt);
                    self.m.jump(cur, join);
                    *b = join;
                    self.m.load(join, tmp)
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let ty = IntType::promote(lhs.ty, rhs.ty);
                let l = self.expr(b, lhs, params);
                let r = self.expr(b, rhs, params);
                let (l, r) = (self.m.cast(*b, ty, l), self.m.cast(*b, ty, r));
                let (s, u) = if ty.signed { (true, false) } else { (false, true) };
                let _ = u;
                match op {
                    BinaryOp::Add => self.m.bin(*b, BinOp::Add, l, r),
                    BinaryOp::Sub => self.m.bin(*b, BinOp::Sub, l, r),
                    BinaryOp::Mul => self.m.bin(*b, BinOp::Mul, l, r),
                    BinaryOp::Div => self.m.bin(*b, if s { BinOp::SDiv } else { BinOp::UDiv }, l, r),
                    BinaryOp::Rem => self.m.bin(*b, if s { BinOp::SRem } else { BinOp::URem }, l, r),
                    BinaryOp::Lt => self.m.cmp(*b, if s { CmpPred::Slt } else { CmpPred::Ult }, l, r),
                    BinaryOp::Le => self.m.cmp(*b, if s { CmpPred::Sle } else { CmpPred::Ule }, l, r),
                    BinaryOp::Gt => self.m.cmp(*b, if s { CmpPred::Slt } else { CmpPred::Ult }, r, l),
                    BinaryOp::Ge => self.m.cmp(*b, if s { CmpPred::Sle } else { CmpPred::Ule }, r, l),
                    BinaryOp::Eq => self.m.cmp(*b, CmpPred::Eq, l, r),
                    BinaryOp::Ne => self.m.cmp(*b, CmpPred::Ne, l, r),
                    BinaryOp::LAnd | BinaryOp::LOr => unreachable!("handled above"),
                }
            }
            ExprKind::Conditional { cond, then, otherwise } => {
                let c = self.expr(b, cond, params);
                let ct = self.truth(*b, c);
                if !may_trap(then) && !may_trap(otherwise) {
                    let t = self.expr(b, then, params);
                    let t = self.m.cast(*b, e.ty, t);
                    let o = self.expr(b, otherwise, params);
                    let o = self.m.cast(*b, e.ty, o);
                    self.m.select(*b, ct, t, o)
                } else {
                    let tmp = self.m.add_var("tmp", e.ty);
                    let tb = self.m.add_block("cond.then");
                    let ob = self.m.add_block("cond.else");
                    let join = self.m.add_block("cond.end");
                    self.m.terminate(*b, Terminator::Branch { cond: ct, then: tb, otherwise: ob });
                    for (start, x) in [(tb, then), (ob, otherwise)] {
                        let mut cur = start;
                        let v = self.expr(&mut cur, x, params);
                        let v = self.m.cast(cur, e.ty, v);
                        self.m.store(cur, tmp, v);
                        self.m.jump(cur, join);
                    }
                    *b = join;
                    self.m.load(join, tmp)
                }
            }
        };
        self.m.cast(*b, e.ty, v)
    }

    fn assign(&mut self, b: &mut BlockId, a: &Assign) {
        let var = self.var(a.target.decl);
        let ty = a.target.ty;
        let update = |l: &mut Self, b: &mut BlockId, op: BinOp, rhs: ValueId| {
            let rt = l.m.value_type(rhs).expect("defined value");
            let wide = IntType::promote(ty, rt);
            let cur = l.m.load(*b, var);
            let cur = l.m.cast(*b, wide, cur);
            let rhs = l.m.cast(*b, wide, rhs);
            let r = l.m.bin(*b, op, cur, rhs);
            l.m.cast(*b, ty, r)
        };
        let v = match &a.op {
            AssignOp::Set(e) => {
                let v = self.expr(b, e, &[]);
                self.m.cast(*b, ty, v)
            }
            AssignOp::AddAssign(e) => {
                let r = self.expr(b, e, &[]);
                update(self, b, BinOp::Add, r)
            }
            AssignOp::SubAssign(e) => {
                let r = self.expr(b, e, &[]);
                update(self, b, BinOp::Sub, r)
            }
            AssignOp::PreInc | AssignOp::PostInc => {
                let one = self.m.konst(*b, ty, 1);
                update(self, b, BinOp::Add, one)
            }
            AssignOp::PreDec | AssignOp::PostDec => {
                let one = self.m.konst(*b, ty, 1);
                update(self, b, BinOp::Sub, one)
            }
        };
        self.m.store(*b, var, v);
    }

    fn stmt(&mut self, s: &Stmt, b: &mut BlockId) -> LResult<()> {
        match &s.kind {
            StmtKind::Decl(d) => {
                if let Some(e) = &d.init {
                    let v = self.expr(b, e, &[]);
                    let v = self.m.cast(*b, d.ty, v);
                    let var = self.var(d.decl);
                    self.m.store(*b, var, v);
                } else {
                    self.var(d.decl);
                }
            }
            StmtKind::Assign(a) => self.assign(b, a),
            StmtKind::Call(c) => {
                let args = c.args.iter().map(|e| self.expr(b, e, &[])).collect();
                self.m.call_body(*b, args, self.thread);
            }
            StmtKind::If { cond, then, otherwise } => {
                let c = self.expr(b, cond, &[]);
                let ct = self.truth(*b, c);
                let tb = self.m.add_block("if.then");
                let ob = self.m.add_block("if.else");
                let join = self.m.add_block("if.end");
                self.m.terminate(*b, Terminator::Branch { cond: ct, then: tb, otherwise: ob });
                let mut cur = tb;
                self.stmt(then, &mut cur)?;
                self.m.jump(cur, join);
                let mut cur = ob;
                if let Some(o) = otherwise {
                    self.stmt(o, &mut cur)?;
                }
                self.m.jump(cur, join);
                *b = join;
            }
            StmtKind::Compound(items) => {
                for i in items {
                    self.stmt(i, b)?;
                }
            }
            StmtKind::For(f) => {
                if let Some(i) = &f.init {
                    self.stmt(i, b)?;
                }
                let head = self.m.add_block("for.cond");
                self.m.jump(*b, head);
                let mut cur = head;
                let c = self.expr(&mut cur, &f.cond, &[]);
                let ct = self.truth(cur, c);
                let body = self.m.add_block("for.body");
                let end = self.m.add_block("for.end");
                self.m.terminate(cur, Terminator::Branch { cond: ct, then: body, otherwise: end });
                let mut cur = body;
                self.stmt(&f.body, &mut cur)?;
                self.assign(&mut cur, &f.incr);
                self.m.jump(cur, head);
                *b = end;
            }
            StmtKind::Attributed { stmt, .. } => self.stmt(stmt, b)?,
            StmtKind::CanonicalLoop(c) => self.stmt(&c.loop_stmt, b)?,
            StmtKind::ThreadLoop(t) => {
                let tid = self.var(t.tid.decl);
                let n = self.m.konst(*b, IntType::UINT, t.num_threads as u64);
                let saved = self.thread;
                let id = create_canonical_loop(&mut self.m, *b, n, "threads", |m, body, iv| {
                    let v = m.cast(body, t.tid.ty, iv);
                    m.store(body, tid, v);
                    Ok(body)
                })
                .map_err(|e| Diagnostic::error(s.loc.clone(), format!("{e}")))?;
                // Re-enter the body block the skeleton created to emit the user body.
                let info = self.m.loop_info(id).expect("fresh loop");
                let end_jump = self.m.block(info.body_entry).term.clone();
                let mut cur = info.body_entry;
                self.m.block_mut(cur).term = None;
                let tv = self.m.load(cur, tid);
                self.thread = Some(tv);
                let r = self.stmt(&t.body, &mut cur);
                self.thread = saved;
                r?;
                self.m.block_mut(cur).term = end_jump;
                *b = info.after;
            }
            StmtKind::Directive(_) => self.directive(s, b)?,
        }
        Ok(())
    }

    fn directive(&mut self, s: &Stmt, b: &mut BlockId) -> LResult<()> {
        let mut chain = Vec::new();
        let mut cur = s;
        while let Some(d) = cur.as_directive() {
            chain.push(cur);
            cur = &d.associated;
        }
        let mut levels: Vec<OMPCanonicalLoop> = Vec::new();
        for l in sema::perfect_nest(cur) {
            let Ok(c) = sema::analyze_canonical_loop(l) else { break };
            let outer_ivs: Vec<DeclId> = levels.iter().map(|x| x.user_var.decl).collect();
            let refs = c.form.lb.referenced_decls().into_iter().chain(c.form.ub.referenced_decls());
            if refs.into_iter().any(|d| outer_ivs.contains(&d)) {
                break;
            }
            levels.push(c);
        }
        if levels.is_empty() {
            return Err(Diagnostic::error(cur.loc.clone(), "loop is not in canonical form"));
        }
        let mut nest = Vec::new();
        for c in levels {
            let begin = self.expr(b, &c.form.lb, &[]);
            let begin = self.m.cast(*b, c.form.iv.ty, begin);
            let end = self.expr(b, &c.form.ub, &[]);
            let tc = self.expr(b, &c.distance.body, &[begin, end]);
            let tc = self.m.cast(*b, c.logical_type, tc);
            nest.push(Level { canon: c, begin, tc });
        }
        let handles = self.literal_nest(s, &nest, b)?;
        self.finalizers(&nest, b);
        let mut handles = handles;
        for d in chain.iter().rev() {
            handles = self.apply(d, handles)?;
        }
        self.directive_loops.insert(s.id, handles);
        Ok(())
    }

    /// Emits the nest as skeletons; the innermost body stores every user
    /// variable, then runs the original body. Leaves `b` at the nest's
    /// `after` block.
    fn literal_nest(&mut self, s: &Stmt, nest: &[Level], b: &mut BlockId) -> LResult<Vec<LoopId>> {
        fn rec(l: &mut Lowerer, nest: &[Level], k: usize, at: BlockId, ivs: &mut Vec<ValueId>, ids: &mut Vec<LoopId>, err: &mut Option<Diagnostic>) -> IrResult<BlockId> {
            if k == nest.len() {
                let mut cur = at;
                for (lv, iv) in nest.iter().zip(ivs.iter()) {
                    let v = l.expr(&mut cur, &lv.canon.user_value.body, &[lv.begin, *iv]);
                    let var = l.var(lv.canon.user_var.decl);
                    l.m.store(cur, var, v);
                }
                if let Err(e) = l.stmt(nest[k - 1].canon.body(), &mut cur) {
                    *err = Some(e);
                }
                return Ok(cur);
            }
            let name = format!("omp.loop.{}", nest[k].canon.user_var.name);
            let pos = ids.len();
            ids.push(LoopId(u32::MAX));
            let id = create_canonical_loop(&mut l.m, at, nest[k].tc, &name, |_, body, iv| {
                ivs.push(iv);
                Ok(body)
            })?;
            // Emit the body into the finished skeleton.
            let info = l.m.loop_info(id)?;
            let term = l.m.block(info.body_entry).term.clone();
            l.m.block_mut(info.body_entry).term = None;
            let end = rec(l, nest, k + 1, info.body_entry, ivs, ids, err)?;
            ivs.pop();
            l.m.block_mut(end).term = term;
            ids[pos] = id;
            Ok(info.after)
        }
        let mut ids = Vec::new();
        let mut err = None;
        let after = rec(self, nest, 0, *b, &mut Vec::new(), &mut ids, &mut err).map_err(|e| Diagnostic::error(s.loc.clone(), format!("{e}")))?;
        if let Some(e) = err {
            return Err(e);
        }
        *b = after;
        Ok(ids)
    }

    /// Final values of loop variables declared outside their loops. An
    /// inner one is only assigned if every enclosing loop ran.
    fn finalizers(&mut self, nest: &[Level], b: &mut BlockId) {
        for (k, lv) in nest.iter().enumerate() {
            if lv.canon.user_var_declared {
                continue;
            }
            let mut guard = None;
            for outer in &nest[..k] {
                let nz = self.truth(*b, outer.tc);
                guard = Some(match guard {
                    None => nz,
                    Some(g) => {
                        let z = self.m.konst(*b, IntType::INT, 0);
                        self.m.select(*b, g, nz, z)
                    }
                });
            }
            let mut cur = *b;
            let join = guard.map(|g| {
                let then = self.m.add_block("final");
                let join = self.m.add_block("final.end");
                self.m.terminate(*b, Terminator::Branch { cond: g, then, otherwise: join });
                cur = then;
                join
            });
            let v = self.expr(&mut cur, &lv.canon.user_value.body, &[lv.begin, lv.tc]);
            let var = self.var(lv.canon.user_var.decl);
            self.m.store(cur, var, v);
            if let Some(j) = join {
                self.m.jump(cur, j);
                cur = j;
            }
            *b = cur;
        }
    }

    fn apply(&mut self, s: &Stmt, handles: Vec<LoopId>) -> LResult<Vec<LoopId>> {
        let d = s.as_directive().expect("directive");
        let err = |e: IrError| Diagnostic::error(s.loc.clone(), format!("{e}"));
        let take = |n: usize| -> LResult<()> {
            if handles.len() < n {
                return Err(Diagnostic::error(s.loc.clone(), "insufficient loop nest depth"));
            }
            Ok(())
        };
        match d.kind {
            DirectiveKind::Tile => {
                let sizes = sema::tile_sizes(d)?;
                take(sizes.len())?;
                let mut out = tile_loops(&mut self.m, &handles[..sizes.len()], &sizes).map_err(err)?;
                out.extend_from_slice(&handles[sizes.len()..]);
                Ok(out)
            }
            DirectiveKind::Unroll => {
                take(1)?;
                match sema::unroll_decision(d, self.consumed.contains(&s.id), &self.sema)? {
                    UnrollDecision::Full => {
                        unroll_loop(&mut self.m, handles[0], UnrollMode::Full).map_err(err)?;
                        Ok(Vec::new())
                    }
                    UnrollDecision::Partial { factor, .. } => {
                        let floor = unroll_loop(&mut self.m, handles[0], UnrollMode::Partial(factor)).map_err(err)?;
                        let mut out: Vec<LoopId> = floor.into_iter().collect();
                        out.extend_from_slice(&handles[1..]);
                        Ok(out)
                    }
                    UnrollDecision::Defer => Ok(handles),
                }
            }
            DirectiveKind::WorkshareFor => {
                let (collapse, chunk) = sema::workshare_params(d)?;
                let c = collapse as usize;
                take(c)?;
                let l = if c > 1 { collapse_loops(&mut self.m, &handles[..c]).map_err(err)? } else { handles[0] };
                let schedule = chunk.map_or(Schedule::StaticBlock, Schedule::StaticChunk);
                let w = create_workshare_loop(&mut self.m, l, self.opts.num_threads, schedule).map_err(err)?;
                let mut out = alloc::vec![w];
                out.extend_from_slice(&handles[c..]);
                Ok(out)
            }
        }
    }
}

#[allow(dead_code)]
fn _label(s: &str) -> String {
    String::from(s)
}
