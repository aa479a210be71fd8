use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Env, ExecError, Trace, TraceEvent};
use crate::ast::*;
use crate::eval::{eval, Bindings};
use crate::shadow::ShadowTable;
use crate::types::{ArithOp, Value};

/// A trace together with per-loop execution counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AstRun {
    pub trace: Trace,
    /// Body executions of each `for` statement, by node id.
    pub iterations: BTreeMap<NodeId, u64>,
    /// `body(...)` calls whose innermost enclosing loop is the given one.
    pub calls: BTreeMap<NodeId, u64>,
}

/// Runs `program`. Directives with an entry in `table` run their generated
/// statement; others run their associated statement unchanged.
pub fn interpret_ast(program: &Program, table: Option<&ShadowTable>, env: &Env, step_limit: u64) -> Result<Trace, ExecError> {
    interpret_ast_with_stats(program, table, env, step_limit).map(|r| r.trace)
}

pub fn interpret_ast_with_stats(
    program: &Program,
    table: Option<&ShadowTable>,
    env: &Env,
    step_limit: u64,
) -> Result<AstRun, ExecError> {
    let mut m = Machine { table, env, vars: Vec::new(), steps: 0, limit: step_limit, thread: None, loops: Vec::new(), run: AstRun::default() };
    for s in &program.stmts {
        m.stmt(s)?;
    }
    Ok(m.run)
}

struct Machine<'a> {
    table: Option<&'a ShadowTable>,
    env: &'a Env,
    vars: Vec<Option<Value>>,
    steps: u64,
    limit: u64,
    thread: Option<u32>,
    loops: Vec<NodeId>,
    run: AstRun,
}

impl Bindings for Machine<'_> {
    fn var(&self, decl: DeclId) -> Option<Value> {
        self.vars.get(decl.0 as usize).copied().flatten()
    }
}

impl Machine<'_> {
    fn tick(&mut self) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(ExecError::StepLimit(self.limit));
        }
        Ok(())
    }

    fn eval(&self, e: &Expr) -> Result<Value, ExecError> {
        eval(e, self).map_err(|error| ExecError::Eval { error, loc: e.loc.clone() })
    }

    fn store(&mut self, decl: DeclId, v: Option<Value>) {
        let i = decl.0 as usize;
        if self.vars.len() <= i {
            self.vars.resize(i + 1, None);
        }
        self.vars[i] = v;
    }

    fn read(&self, t: &VarTarget, loc: &crate::diag::SourceLocation) -> Result<Value, ExecError> {
        self.var(t.decl).ok_or_else(|| ExecError::Eval { error: crate::eval::EvalError::Unbound(t.name.clone()), loc: loc.clone() })
    }

    fn assign(&mut self, a: &Assign) -> Result<(), ExecError> {
        let ty = a.target.ty;
        let one = Value::new(ty, 1);
        let arith = |op, x: Value, y: Value| {
            Value::arith(op, x, y)
                .map(|v| v.convert(ty))
                .map_err(|_| ExecError::Eval { error: crate::eval::EvalError::DivisionByZero, loc: a.loc.clone() })
        };
        let v = match &a.op {
            AssignOp::Set(e) => self.eval(e)?.convert(ty),
            AssignOp::AddAssign(e) => arith(ArithOp::Add, self.read(&a.target, &a.loc)?, self.eval(e)?)?,
            AssignOp::SubAssign(e) => arith(ArithOp::Sub, self.read(&a.target, &a.loc)?, self.eval(e)?)?,
            AssignOp::PreInc | AssignOp::PostInc => arith(ArithOp::Add, self.read(&a.target, &a.loc)?, one)?,
            AssignOp::PreDec | AssignOp::PostDec => arith(ArithOp::Sub, self.read(&a.target, &a.loc)?, one)?,
        };
        self.store(a.target.decl, Some(v));
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ExecError> {
        self.tick()?;
        match &s.kind {
            StmtKind::Decl(d) => {
                let v = match &d.init {
                    Some(e) => Some(self.eval(e)?.convert(d.ty)),
                    None => self.env.get(&d.name).map(|v| Value::from_i128(d.ty, v)),
                };
                self.store(d.decl, v);
            }
            StmtKind::Assign(a) => self.assign(a)?,
            StmtKind::Call(c) => {
                let args = c.args.iter().map(|e| self.eval(e)).collect::<Result<Vec<_>, _>>()?;
                if let Some(l) = self.loops.last() {
                    *self.run.calls.entry(*l).or_default() += 1;
                }
                self.run.trace.events.push(TraceEvent { callee: c.callee.clone(), args, thread: self.thread });
            }
            StmtKind::If { cond, then, otherwise } => {
                if self.eval(cond)?.is_true() {
                    self.stmt(then)?;
                } else if let Some(o) = otherwise {
                    self.stmt(o)?;
                }
            }
            StmtKind::Compound(items) => {
                for i in items {
                    self.stmt(i)?;
                }
            }
            StmtKind::For(f) => {
                if let Some(i) = &f.init {
                    self.stmt(i)?;
                }
                self.loops.push(s.id);
                let r = self.for_loop(s.id, f);
                self.loops.pop();
                r?;
            }
            StmtKind::Directive(d) => match self.table.and_then(|t| t.get(s.id)) {
                Some(entry) => {
                    let t = &entry.transformed;
                    for p in t.pre_inits.iter().chain(core::iter::once(&t.stmt)).chain(&t.finalizers) {
                        self.stmt(p)?;
                    }
                }
                None => self.stmt(&d.associated)?,
            },
            StmtKind::Attributed { stmt, .. } => self.stmt(stmt)?,
            StmtKind::ThreadLoop(t) => {
                let saved = self.thread;
                for tid in 0..t.num_threads {
                    self.store(t.tid.decl, Some(Value::new(t.tid.ty, tid as u64)));
                    self.thread = Some(tid);
                    let r = self.stmt(&t.body);
                    self.thread = saved;
                    r?;
                }
            }
            StmtKind::CanonicalLoop(c) => self.stmt(&c.loop_stmt)?,
        }
        Ok(())
    }

    fn for_loop(&mut self, id: NodeId, f: &ForStmt) -> Result<(), ExecError> {
        loop {
            self.tick()?;
            if !self.eval(&f.cond)?.is_true() {
                return Ok(());
            }
            *self.run.iterations.entry(id).or_default() += 1;
            self.stmt(&f.body)?;
            self.assign(&f.incr)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn run(src: &str) -> Result<Trace, ExecError> {
        let p = parse_source(src, "t.c").unwrap();
        interpret_ast(&p, None, &Env::new(), 10_000)
    }

    #[test]
    fn literal_loop_trace() {
        let t = run("for (int i = 7; i < 17; i += 3) body(i);").unwrap();
        assert_eq!(t.to_string(), "body(7)\nbody(10)\nbody(13)\nbody(16)\n");
    }

    #[test]
    fn zero_trip_loop_is_empty() {
        assert!(run("for (int i = 5; i < 5; ++i) body(i);").unwrap().is_empty());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = run("body(1 / 0);").unwrap_err();
        assert!(matches!(e, ExecError::Eval { error: crate::eval::EvalError::DivisionByZero, .. }));
    }

    #[test]
    fn step_limit_stops_endless_loops() {
        let e = run("for (int i = 0; i < 1; i += 0) body(i);").unwrap_err();
        assert_eq!(e, ExecError::StepLimit(10_000));
    }

    #[test]
    fn unbound_variables_come_from_the_environment() {
        let p = parse_source("int n; for (int i = 0; i < n; ++i) body(i);", "t.c").unwrap();
        assert!(interpret_ast(&p, None, &Env::new(), 100).is_err());
        let t = interpret_ast(&p, None, &Env::new().with("n", 2), 100).unwrap();
        assert_eq!(t.first_args(), [0, 1]);
    }

    #[test]
    fn wrapping_arithmetic() {
        let t = run("uint x = 0; x -= 1; body(x); int y = 2147483647; ++y; body(y);").unwrap();
        assert_eq!(t.first_args(), [4294967295, -2147483648]);
    }
}
