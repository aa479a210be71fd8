use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Env, ExecError, Trace, TraceEvent};
use crate::diag::SourceLocation;
use crate::eval::EvalError;
use crate::ir::{BlockId, Inst, IrModule, Op, Terminator, ValueId};
use crate::types::Value;

/// Runs `m` from its entry block until `halt`. Variables start with the
/// environment value of their source name, or unbound.
pub fn interpret_ir(m: &IrModule, env: &Env, step_limit: u64) -> Result<Trace, ExecError> {
    let mut vals: Vec<Option<Value>> = alloc::vec![None; m.value_capacity()];
    let mut vars: Vec<Option<Value>> = m.vars.iter().map(|v| env.get(&v.source).map(|x| Value::from_i128(v.ty, x))).collect();
    let mut trace = Trace::default();
    let mut steps = 0u64;
    let mut prev: Option<BlockId> = None;
    let mut cur = m.entry;
    let get = |vals: &[Option<Value>], v: ValueId| -> Result<Value, ExecError> {
        vals.get(v.0 as usize).copied().flatten().ok_or_else(|| ExecError::Malformed(format!("use of undefined value %{}", v.0)))
    };
    loop {
        steps += 1;
        if steps > step_limit {
            return Err(ExecError::StepLimit(step_limit));
        }
        if !m.has_block(cur) {
            return Err(ExecError::Malformed(format!("jump to missing block {}", cur.0)));
        }
        let block = m.block(cur);

        // Phis read their incoming values simultaneously.
        let mut phis = Vec::new();
        for inst in &block.insts {
            if let Inst::Def { result, ty, op: Op::Phi(inc) } = inst {
                let p = prev.ok_or_else(|| ExecError::MalformedPhi { block: block.label.clone() })?;
                let (_, v) = inc.iter().find(|(b, _)| *b == p).ok_or_else(|| ExecError::MalformedPhi { block: block.label.clone() })?;
                phis.push((*result, get(&vals, *v)?.convert(*ty)));
            }
        }
        for (r, v) in phis {
            vals[r.0 as usize] = Some(v);
        }

        for inst in &block.insts {
            match inst {
                Inst::Def { op: Op::Phi(_), .. } => {}
                Inst::Def { result, ty, op } => {
                    let v = match op {
                        Op::Const(c) => Value::new(*ty, *c),
                        Op::Bin(op, a, b) => {
                            let (a, b) = (get(&vals, *a)?, get(&vals, *b)?);
                            let r = op.apply(*ty, a.bits(), b.bits()).ok_or(ExecError::Eval {
                                error: EvalError::DivisionByZero,
                                loc: SourceLocation::unknown(),
                            })?;
                            Value::new(*ty, r)
                        }
                        Op::Cmp(p, a, b) => {
                            let (a, b) = (get(&vals, *a)?, get(&vals, *b)?);
                            Value::new(*ty, p.apply(a.ty(), a.bits(), b.bits()) as u64)
                        }
                        Op::Select(c, x, y) => {
                            let pick = if get(&vals, *c)?.is_true() { x } else { y };
                            get(&vals, *pick)?.convert(*ty)
                        }
                        Op::Cast(x) => get(&vals, *x)?.convert(*ty),
                        Op::Load(var) => {
                            let slot = vars.get(var.0 as usize).ok_or_else(|| ExecError::Malformed(format!("unknown variable {}", var.0)))?;
                            slot.ok_or_else(|| ExecError::Eval {
                                error: EvalError::Unbound(m.vars[var.0 as usize].source.clone()),
                                loc: SourceLocation::unknown(),
                            })?
                            .convert(*ty)
                        }
                        Op::Phi(_) => unreachable!("handled above"),
                    };
                    let slot = vals.get_mut(result.0 as usize).ok_or_else(|| ExecError::Malformed(format!("value %{} out of range", result.0)))?;
                    *slot = Some(v);
                }
                Inst::Store { var, value } => {
                    let v = get(&vals, *value)?;
                    let i = var.0 as usize;
                    let ty = m.vars.get(i).ok_or_else(|| ExecError::Malformed(format!("unknown variable {i}")))?.ty;
                    vars[i] = Some(v.convert(ty));
                }
                Inst::CallBody { args, thread } => {
                    let args = args.iter().map(|a| get(&vals, *a)).collect::<Result<Vec<_>, _>>()?;
                    let thread = thread.map(|t| get(&vals, t).map(|v| v.bits() as u32)).transpose()?;
                    trace.events.push(TraceEvent { callee: String::from("body"), args, thread });
                }
            }
        }

        match &block.term {
            None => return Err(ExecError::Malformed(format!("block '{}' has no terminator", block.label))),
            Some(Terminator::Halt) => return Ok(trace),
            Some(Terminator::Jump(t)) => {
                prev = Some(cur);
                cur = *t;
            }
            Some(Terminator::Branch { cond, then, otherwise }) => {
                prev = Some(cur);
                cur = if get(&vals, *cond)?.is_true() { *then } else { *otherwise };
            }
        }
    }
}
