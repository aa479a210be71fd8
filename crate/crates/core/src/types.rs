//! Integer types and wrapping two's-complement values shared by both
//! interpreters, the constant folder and the IR.

use core::fmt;

/// A fixed-width integer type. Only 32 and 64 bit widths exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntType {
    pub bits: u8,
    pub signed: bool,
}

impl IntType {
    pub const INT: IntType = IntType { bits: 32, signed: true };
    pub const UINT: IntType = IntType { bits: 32, signed: false };
    pub const LONG: IntType = IntType { bits: 64, signed: true };
    pub const ULONG: IntType = IntType { bits: 64, signed: false };

    pub fn mask(self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    /// The unsigned type of the same width. Logical iteration counters use it.
    pub fn to_unsigned(self) -> IntType {
        IntType { bits: self.bits, signed: false }
    }

    pub fn min_value(self) -> i128 {
        if self.signed {
            -(1i128 << (self.bits - 1))
        } else {
            0
        }
    }

    pub fn max_value(self) -> i128 {
        if self.signed {
            (1i128 << (self.bits - 1)) - 1
        } else {
            self.mask() as i128
        }
    }

    /// Source keyword for the type.
    pub fn keyword(self) -> &'static str {
        match (self.bits, self.signed) {
            (32, true) => "int",
            (32, false) => "uint",
            (64, true) => "long",
            _ => "ulong",
        }
    }

    /// The C spelling used in AST dumps.
    pub fn c_name(self) -> &'static str {
        match (self.bits, self.signed) {
            (32, true) => "int",
            (32, false) => "unsigned int",
            (64, true) => "long",
            _ => "unsigned long",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<IntType> {
        Some(match kw {
            "int" => IntType::INT,
            "uint" => IntType::UINT,
            "long" => IntType::LONG,
            "ulong" => IntType::ULONG,
            _ => return None,
        })
    }

    /// Usual arithmetic conversion: the wider type wins; at equal width
    /// unsigned wins.
    pub fn promote(a: IntType, b: IntType) -> IntType {
        match a.bits.cmp(&b.bits) {
            core::cmp::Ordering::Greater => a,
            core::cmp::Ordering::Less => b,
            core::cmp::Ordering::Equal => IntType { bits: a.bits, signed: a.signed && b.signed },
        }
    }
}

impl fmt::Display for IntType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A runtime integer: a bit pattern truncated to the width of its type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value {
    bits: u64,
    ty: IntType,
}

/// Binary operators that need a numeric result. Logical `&&`/`||` are
/// handled by the evaluators since they short-circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DivisionByZero;

impl Value {
    pub fn new(ty: IntType, bits: u64) -> Value {
        Value { bits: bits & ty.mask(), ty }
    }

    /// Wraps `v` into `ty` modulo 2^bits.
    pub fn from_i128(ty: IntType, v: i128) -> Value {
        Value::new(ty, v as u64)
    }

    pub fn bool(b: bool) -> Value {
        Value::new(IntType::INT, b as u64)
    }

    pub fn ty(self) -> IntType {
        self.ty
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    /// Mathematical value under the type's signedness.
    pub fn as_i128(self) -> i128 {
        if self.ty.signed && self.ty.bits < 64 {
            let shift = 64 - self.ty.bits as u32;
            (((self.bits << shift) as i64) >> shift) as i128
        } else if self.ty.signed {
            self.bits as i64 as i128
        } else {
            self.bits as i128
        }
    }

    pub fn is_true(self) -> bool {
        self.bits != 0
    }

    /// C integral conversion (sign- or zero-extend, or truncate).
    pub fn convert(self, ty: IntType) -> Value {
        Value::from_i128(ty, self.as_i128())
    }

    /// Arithmetic in the promoted type of both operands.
    pub fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value, DivisionByZero> {
        let ty = IntType::promote(a.ty, b.ty);
        let (a, b) = (a.convert(ty), b.convert(ty));
        Value::arith_in(op, ty, a.bits, b.bits)
    }

    /// Arithmetic on raw bit patterns already in `ty`.
    pub fn arith_in(op: ArithOp, ty: IntType, a: u64, b: u64) -> Result<Value, DivisionByZero> {
        let (x, y) = (Value::new(ty, a), Value::new(ty, b));
        let r = match op {
            ArithOp::Add => a.wrapping_add(b),
            ArithOp::Sub => a.wrapping_sub(b),
            ArithOp::Mul => a.wrapping_mul(b),
            ArithOp::Div | ArithOp::Rem => {
                if y.bits == 0 {
                    return Err(DivisionByZero);
                }
                if ty.signed {
                    // i128 avoids the MIN / -1 trap; the result wraps back.
                    let (p, q) = (x.as_i128(), y.as_i128());
                    let r = if op == ArithOp::Div { p / q } else { p % q };
                    return Ok(Value::from_i128(ty, r));
                }
                if op == ArithOp::Div {
                    x.bits / y.bits
                } else {
                    x.bits % y.bits
                }
            }
        };
        Ok(Value::new(ty, r))
    }

    /// Comparison in the promoted type; yields an `int` 0 or 1.
    pub fn compare(op: CmpOp, a: Value, b: Value) -> Value {
        let ty = IntType::promote(a.ty, b.ty);
        let (a, b) = (a.convert(ty).as_i128(), b.convert(ty).as_i128());
        Value::bool(match op {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        })
    }

    pub fn wrapping_neg(self) -> Value {
        Value::new(self.ty, self.bits.wrapping_neg())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i128())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promotion_rule() {
        assert_eq!(IntType::promote(IntType::INT, IntType::UINT), IntType::UINT);
        assert_eq!(IntType::promote(IntType::UINT, IntType::LONG), IntType::LONG);
        assert_eq!(IntType::promote(IntType::LONG, IntType::ULONG), IntType::ULONG);
        assert_eq!(IntType::promote(IntType::INT, IntType::INT), IntType::INT);
    }

    #[test]
    fn wrapping_and_conversion() {
        let max = Value::from_i128(IntType::INT, i32::MAX as i128);
        let one = Value::from_i128(IntType::INT, 1);
        let sum = Value::arith(ArithOp::Add, max, one).unwrap();
        assert_eq!(sum.as_i128(), i32::MIN as i128);
        let m1 = Value::from_i128(IntType::INT, -1);
        assert_eq!(m1.convert(IntType::UINT).as_i128(), u32::MAX as i128);
        assert_eq!(m1.convert(IntType::LONG).as_i128(), -1);
        assert_eq!(Value::from_i128(IntType::UINT, u32::MAX as i128).convert(IntType::LONG).as_i128(), u32::MAX as i128);
    }

    #[test]
    fn signed_division_edge() {
        let min = Value::from_i128(IntType::INT, i32::MIN as i128);
        let m1 = Value::from_i128(IntType::INT, -1);
        assert_eq!(Value::arith(ArithOp::Div, min, m1).unwrap(), min);
        assert_eq!(Value::arith(ArithOp::Rem, Value::from_i128(IntType::INT, -7), Value::from_i128(IntType::INT, 2)).unwrap().as_i128(), -1);
        assert_eq!(Value::arith(ArithOp::Div, min, Value::from_i128(IntType::INT, 0)), Err(DivisionByZero));
    }

    #[test]
    fn mixed_sign_compare_is_unsigned() {
        let m1 = Value::from_i128(IntType::INT, -1);
        let z = Value::from_i128(IntType::UINT, 0);
        assert!(!Value::compare(CmpOp::Lt, m1, z).is_true());
    }
}
