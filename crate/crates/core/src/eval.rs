//! Expression evaluation shared by the AST interpreter, sema's constant
//! evaluation and closure evaluation.

use alloc::string::String;
use core::fmt;

use crate::ast::{BinaryOp, DeclId, Expr, ExprKind, UnaryOp};
use crate::types::{ArithOp, CmpOp, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    DivisionByZero,
    Unbound(String),
    UnboundParam(usize),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => f.write_str("division by zero"),
            EvalError::Unbound(n) => write!(f, "read of unbound variable '{n}'"),
            EvalError::UnboundParam(i) => write!(f, "closure parameter {i} is not bound"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Variable and closure-parameter bindings visible to an expression.
pub trait Bindings {
    fn var(&self, decl: DeclId) -> Option<Value>;

    fn param(&self, _index: usize) -> Option<Value> {
        None
    }
}

/// No variables at all; only literals evaluate.
pub struct NoBindings;

impl Bindings for NoBindings {
    fn var(&self, _decl: DeclId) -> Option<Value> {
        None
    }
}

/// Closure slots bound to values; program variables delegate to `outer`.
pub struct ParamBindings<'a, B: Bindings + ?Sized> {
    pub params: &'a [Value],
    pub outer: &'a B,
}

impl<B: Bindings + ?Sized> Bindings for ParamBindings<'_, B> {
    fn var(&self, decl: DeclId) -> Option<Value> {
        self.outer.var(decl)
    }

    fn param(&self, index: usize) -> Option<Value> {
        self.params.get(index).copied()
    }
}

pub fn arith_op(op: BinaryOp) -> Option<ArithOp> {
    Some(match op {
        BinaryOp::Add => ArithOp::Add,
        BinaryOp::Sub => ArithOp::Sub,
        BinaryOp::Mul => ArithOp::Mul,
        BinaryOp::Div => ArithOp::Div,
        BinaryOp::Rem => ArithOp::Rem,
        _ => return None,
    })
}

pub fn cmp_op(op: BinaryOp) -> Option<CmpOp> {
    Some(match op {
        BinaryOp::Lt => CmpOp::Lt,
        BinaryOp::Le => CmpOp::Le,
        BinaryOp::Gt => CmpOp::Gt,
        BinaryOp::Ge => CmpOp::Ge,
        BinaryOp::Eq => CmpOp::Eq,
        BinaryOp::Ne => CmpOp::Ne,
        _ => return None,
    })
}

pub fn eval<B: Bindings + ?Sized>(expr: &Expr, env: &B) -> Result<Value, EvalError> {
    match &expr.kind {
        ExprKind::IntLiteral(v) => Ok(Value::new(expr.ty, *v)),
        ExprKind::VarRef { name, decl } => env
            .var(*decl)
            .map(|v| v.convert(expr.ty))
            .ok_or_else(|| EvalError::Unbound(name.clone())),
        ExprKind::ClosureParam { index, .. } => {
            env.param(*index).map(|v| v.convert(expr.ty)).ok_or(EvalError::UnboundParam(*index))
        }
        ExprKind::Binary { op, lhs, rhs } => match op {
            BinaryOp::LAnd => {
                if !eval(lhs, env)?.is_true() {
                    return Ok(Value::bool(false));
                }
                Ok(Value::bool(eval(rhs, env)?.is_true()))
            }
            BinaryOp::LOr => {
                if eval(lhs, env)?.is_true() {
                    return Ok(Value::bool(true));
                }
                Ok(Value::bool(eval(rhs, env)?.is_true()))
            }
            _ => {
                let (a, b) = (eval(lhs, env)?, eval(rhs, env)?);
                if let Some(c) = cmp_op(*op) {
                    Ok(Value::compare(c, a, b))
                } else {
                    let a_op = arith_op(*op).expect("arithmetic operator");
                    Value::arith(a_op, a, b).map_err(|_| EvalError::DivisionByZero)
                }
            }
        },
        ExprKind::Unary { op, operand } => {
            let v = eval(operand, env)?;
            Ok(match op {
                UnaryOp::Neg => v.convert(expr.ty).wrapping_neg(),
                UnaryOp::Not => Value::bool(!v.is_true()),
            })
        }
        ExprKind::Cast(operand) => Ok(eval(operand, env)?.convert(expr.ty)),
        ExprKind::Conditional { cond, then, otherwise } => {
            let branch = if eval(cond, env)?.is_true() { then } else { otherwise };
            Ok(eval(branch, env)?.convert(expr.ty))
        }
    }
}

/// Value of an expression built from literals only.
pub fn const_eval(expr: &Expr) -> Option<Value> {
    eval(expr, &NoBindings).ok()
}
