//! Block-structured IR with canonical loop skeletons.
//!
//! Source variables live in a flat store reached through `load`/`store`;
//! phis appear only as loop induction variables. Every loop built by
//! [`create_canonical_loop`] is described by a [`CanonicalLoopInfo`] kept in
//! the module's loop registry and addressed by [`LoopId`]. Transformations
//! build new skeletons and invalidate the handles they consume.

mod lower;
mod skeleton;
mod transform;

pub use lower::{lower_program, LowerOptions, Lowered};
pub use skeleton::{create_canonical_loop, verify_skeleton};
pub use transform::{collapse_loops, create_workshare_loop, tile_loops, unroll_loop, Schedule, UnrollMode, HEURISTIC_FACTOR};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::types::{ArithOp, IntType, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LoopId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    UDiv,
    URem,
    SDiv,
    SRem,
}

impl BinOp {
    pub const ALL: [BinOp; 7] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::UDiv, BinOp::URem, BinOp::SDiv, BinOp::SRem];

    pub fn mnemonic(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::UDiv => "udiv",
            BinOp::URem => "urem",
            BinOp::SDiv => "sdiv",
            BinOp::SRem => "srem",
        }
    }

    /// Applies the operation to raw bit patterns of type `ty`. Signedness
    /// comes from the opcode, not from `ty`.
    pub fn apply(self, ty: IntType, a: u64, b: u64) -> Option<u64> {
        let (op, as_ty) = match self {
            BinOp::Add => (ArithOp::Add, ty),
            BinOp::Sub => (ArithOp::Sub, ty),
            BinOp::Mul => (ArithOp::Mul, ty),
            BinOp::UDiv => (ArithOp::Div, ty.to_unsigned()),
            BinOp::URem => (ArithOp::Rem, ty.to_unsigned()),
            BinOp::SDiv => (ArithOp::Div, IntType { signed: true, ..ty }),
            BinOp::SRem => (ArithOp::Rem, IntType { signed: true, ..ty }),
        };
        Value::arith_in(op, as_ty, a, b).ok().map(|v| v.bits())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpPred {
    Eq,
    Ne,
    Ult,
    Ule,
    Slt,
    Sle,
}

impl CmpPred {
    pub const ALL: [CmpPred; 6] = [CmpPred::Eq, CmpPred::Ne, CmpPred::Ult, CmpPred::Ule, CmpPred::Slt, CmpPred::Sle];

    pub fn mnemonic(self) -> &'static str {
        match self {
            CmpPred::Eq => "icmp.eq",
            CmpPred::Ne => "icmp.ne",
            CmpPred::Ult => "icmp.ult",
            CmpPred::Ule => "icmp.ule",
            CmpPred::Slt => "icmp.slt",
            CmpPred::Sle => "icmp.sle",
        }
    }

    /// Compares two bit patterns of width `ty`.
    pub fn apply(self, ty: IntType, a: u64, b: u64) -> bool {
        let s = |v: u64| Value::new(IntType { signed: true, ..ty }, v).as_i128();
        let (a, b) = (a & ty.mask(), b & ty.mask());
        match self {
            CmpPred::Eq => a == b,
            CmpPred::Ne => a != b,
            CmpPred::Ult => a < b,
            CmpPred::Ule => a <= b,
            CmpPred::Slt => s(a) < s(b),
            CmpPred::Sle => s(a) <= s(b),
        }
    }
}

/// Operation producing a value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Const(u64),
    Bin(BinOp, ValueId, ValueId),
    /// Result is an `int` 0 or 1; operands share a type.
    Cmp(CmpPred, ValueId, ValueId),
    Select(ValueId, ValueId, ValueId),
    /// Integral conversion to the result type.
    Cast(ValueId),
    Phi(Vec<(BlockId, ValueId)>),
    Load(VarId),
}

impl Op {
    pub fn operands(&self) -> Vec<ValueId> {
        match self {
            Op::Const(_) | Op::Load(_) => Vec::new(),
            Op::Bin(_, a, b) | Op::Cmp(_, a, b) => alloc::vec![*a, *b],
            Op::Select(c, a, b) => alloc::vec![*c, *a, *b],
            Op::Cast(a) => alloc::vec![*a],
            Op::Phi(inc) => inc.iter().map(|(_, v)| *v).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Inst {
    Def { result: ValueId, ty: IntType, op: Op },
    Store { var: VarId, value: ValueId },
    CallBody { args: Vec<ValueId>, thread: Option<ValueId> },
}

impl Inst {
    pub fn result(&self) -> Option<ValueId> {
        match self {
            Inst::Def { result, .. } => Some(*result),
            _ => None,
        }
    }

    pub fn operands(&self) -> Vec<ValueId> {
        match self {
            Inst::Def { op, .. } => op.operands(),
            Inst::Store { value, .. } => alloc::vec![*value],
            Inst::CallBody { args, thread } => args.iter().copied().chain(*thread).collect(),
        }
    }

    fn map_operands(&mut self, f: &mut dyn FnMut(ValueId) -> ValueId) {
        match self {
            Inst::Def { op, .. } => match op {
                Op::Const(_) | Op::Load(_) => {}
                Op::Bin(_, a, b) | Op::Cmp(_, a, b) => {
                    *a = f(*a);
                    *b = f(*b);
                }
                Op::Select(c, a, b) => {
                    *c = f(*c);
                    *a = f(*a);
                    *b = f(*b);
                }
                Op::Cast(a) => *a = f(*a),
                Op::Phi(inc) => inc.iter_mut().for_each(|(_, v)| *v = f(*v)),
            },
            Inst::Store { value, .. } => *value = f(*value),
            Inst::CallBody { args, thread } => {
                args.iter_mut().for_each(|a| *a = f(*a));
                if let Some(t) = thread {
                    *t = f(*t);
                }
            }
        }
    }

    /// No side effects and no dependence on memory.
    pub fn is_pure(&self) -> bool {
        matches!(self, Inst::Def { op, .. } if !matches!(op, Op::Load(_) | Op::Phi(_)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Terminator {
    Jump(BlockId),
    Branch { cond: ValueId, then: BlockId, otherwise: BlockId },
    Halt,
}

impl Terminator {
    pub fn successors(&self) -> Vec<BlockId> {
        match self {
            Terminator::Jump(b) => alloc::vec![*b],
            Terminator::Branch { then, otherwise, .. } => alloc::vec![*then, *otherwise],
            Terminator::Halt => Vec::new(),
        }
    }

    fn map_blocks(&mut self, f: &mut dyn FnMut(BlockId) -> BlockId) {
        match self {
            Terminator::Jump(b) => *b = f(*b),
            Terminator::Branch { then, otherwise, .. } => {
                *then = f(*then);
                *otherwise = f(*otherwise);
            }
            Terminator::Halt => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasicBlock {
    pub label: String,
    pub insts: Vec<Inst>,
    /// `None` only while the block is under construction.
    pub term: Option<Terminator>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IrVar {
    /// Unique within the module.
    pub name: String,
    /// Name looked up in the interpreter's environment.
    pub source: String,
    pub ty: IntType,
}

/// Handle to one materialized loop skeleton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalLoopInfo {
    pub preheader: BlockId,
    pub header: BlockId,
    pub cond: BlockId,
    pub body_entry: BlockId,
    pub latch: BlockId,
    pub exit: BlockId,
    pub after: BlockId,
    pub indvar: ValueId,
    pub trip_count: ValueId,
    pub valid: bool,
}

impl CanonicalLoopInfo {
    pub fn blocks(&self) -> [BlockId; 7] {
        [self.preheader, self.header, self.cond, self.body_entry, self.latch, self.exit, self.after]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IrError {
    InvalidHandle(LoopId),
    ImperfectNest(String),
    NonConstantTripCount,
    TooManyIterations(u64),
    Unsupported(String),
}

impl fmt::Display for IrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrError::InvalidHandle(l) => write!(f, "loop handle {} has been invalidated", l.0),
            IrError::ImperfectNest(m) => write!(f, "loops do not form a perfect nest: {m}"),
            IrError::NonConstantTripCount => f.write_str("cannot fully unroll: trip count is not a compile-time constant"),
            IrError::TooManyIterations(n) => write!(f, "cannot fully unroll {n} iterations"),
            IrError::Unsupported(m) => f.write_str(m),
        }
    }
}

impl core::error::Error for IrError {}

pub type IrResult<T> = Result<T, IrError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrModule {
    pub blocks: Vec<BasicBlock>,
    pub entry: BlockId,
    pub vars: Vec<IrVar>,
    pub loops: Vec<CanonicalLoopInfo>,
    next_value: u32,
    types: BTreeMap<ValueId, IntType>,
    /// Emptied blocks waiting for [`IrModule::compact`].
    discarded: BTreeSet<BlockId>,
}

impl Default for IrModule {
    fn default() -> Self {
        IrModule::new()
    }
}

impl IrModule {
    /// A module holding only an unterminated `entry` block.
    pub fn new() -> IrModule {
        let entry = BasicBlock { label: "entry".into(), insts: Vec::new(), term: None };
        IrModule { blocks: alloc::vec![entry], entry: BlockId(0), vars: Vec::new(), loops: Vec::new(), next_value: 0, types: BTreeMap::new(), discarded: BTreeSet::new() }
    }

    /// Builds a module from parts, as the text parser does.
    pub fn from_parts(blocks: Vec<BasicBlock>, entry: BlockId, vars: Vec<IrVar>, loops: Vec<CanonicalLoopInfo>) -> IrModule {
        let mut m = IrModule { blocks, entry, vars, loops, next_value: 0, types: BTreeMap::new(), discarded: BTreeSet::new() };
        m.reindex();
        m
    }

    fn reindex(&mut self) {
        self.types.clear();
        for b in &self.blocks {
            for i in &b.insts {
                if let Inst::Def { result, ty, .. } = i {
                    self.types.insert(*result, *ty);
                }
            }
        }
        self.next_value = self.types.keys().next_back().map_or(0, |v| v.0 + 1);
    }

    /// Same blocks, instructions, variables and loop handles.
    pub fn structurally_equal(&self, other: &IrModule) -> bool {
        self.blocks == other.blocks && self.entry == other.entry && self.vars == other.vars && self.loops == other.loops
    }

    pub fn block(&self, b: BlockId) -> &BasicBlock {
        &self.blocks[b.0 as usize]
    }

    pub fn block_mut(&mut self, b: BlockId) -> &mut BasicBlock {
        &mut self.blocks[b.0 as usize]
    }

    pub fn has_block(&self, b: BlockId) -> bool {
        (b.0 as usize) < self.blocks.len()
    }

    /// Appends a new block; labels are made unique with a numeric suffix.
    pub fn add_block(&mut self, label: &str) -> BlockId {
        let mut name = String::from(label);
        let mut n = 1;
        while self.blocks.iter().any(|b| b.label == name) {
            name = alloc::format!("{label}.{n}");
            n += 1;
        }
        self.blocks.push(BasicBlock { label: name, insts: Vec::new(), term: None });
        BlockId(self.blocks.len() as u32 - 1)
    }

    pub fn add_var(&mut self, source: &str, ty: IntType) -> VarId {
        let mut name = String::from(source);
        let mut n = 1;
        while self.vars.iter().any(|v| v.name == name) {
            name = alloc::format!("{source}.{n}");
            n += 1;
        }
        self.vars.push(IrVar { name, source: source.into(), ty });
        VarId(self.vars.len() as u32 - 1)
    }

    pub fn value_type(&self, v: ValueId) -> Option<IntType> {
        self.types.get(&v).copied()
    }

    fn fresh_value(&mut self, ty: IntType) -> ValueId {
        let v = ValueId(self.next_value);
        self.next_value += 1;
        self.types.insert(v, ty);
        v
    }

    pub fn push(&mut self, b: BlockId, inst: Inst) {
        self.block_mut(b).insts.push(inst);
    }

    pub fn def(&mut self, b: BlockId, ty: IntType, op: Op) -> ValueId {
        let result = self.fresh_value(ty);
        self.push(b, Inst::Def { result, ty, op });
        result
    }

    pub fn konst(&mut self, b: BlockId, ty: IntType, v: u64) -> ValueId {
        self.def(b, ty, Op::Const(v & ty.mask()))
    }

    /// Binary operation in the type of `a`.
    pub fn bin(&mut self, b: BlockId, op: BinOp, x: ValueId, y: ValueId) -> ValueId {
        let ty = self.value_type(x).expect("defined operand");
        self.def(b, ty, Op::Bin(op, x, y))
    }

    pub fn cmp(&mut self, b: BlockId, pred: CmpPred, x: ValueId, y: ValueId) -> ValueId {
        self.def(b, IntType::INT, Op::Cmp(pred, x, y))
    }

    pub fn select(&mut self, b: BlockId, c: ValueId, x: ValueId, y: ValueId) -> ValueId {
        let ty = self.value_type(x).expect("defined operand");
        self.def(b, ty, Op::Select(c, x, y))
    }

    /// Converts `v` to `ty`; returns `v` itself if it already has that type.
    pub fn cast(&mut self, b: BlockId, ty: IntType, v: ValueId) -> ValueId {
        if self.value_type(v) == Some(ty) {
            v
        } else {
            self.def(b, ty, Op::Cast(v))
        }
    }

    /// `ceil(n / d)` as `n udiv d + (n urem d != 0)`, which cannot overflow.
    pub fn ceil_div(&mut self, b: BlockId, n: ValueId, d: ValueId) -> ValueId {
        let ty = self.value_type(n).expect("defined operand");
        let q = self.bin(b, BinOp::UDiv, n, d);
        let r = self.bin(b, BinOp::URem, n, d);
        let zero = self.konst(b, ty, 0);
        let nz = self.cmp(b, CmpPred::Ne, r, zero);
        let carry = self.cast(b, ty, nz);
        self.bin(b, BinOp::Add, q, carry)
    }

    /// `a < b ? a : b` on unsigned values.
    pub fn umin(&mut self, b: BlockId, x: ValueId, y: ValueId) -> ValueId {
        let lt = self.cmp(b, CmpPred::Ult, x, y);
        self.select(b, lt, x, y)
    }

    pub fn store(&mut self, b: BlockId, var: VarId, value: ValueId) {
        self.push(b, Inst::Store { var, value });
    }

    pub fn load(&mut self, b: BlockId, var: VarId) -> ValueId {
        let ty = self.vars[var.0 as usize].ty;
        self.def(b, ty, Op::Load(var))
    }

    pub fn call_body(&mut self, b: BlockId, args: Vec<ValueId>, thread: Option<ValueId>) {
        self.push(b, Inst::CallBody { args, thread });
    }

    pub fn terminate(&mut self, b: BlockId, t: Terminator) {
        self.block_mut(b).term = Some(t);
    }

    pub fn jump(&mut self, from: BlockId, to: BlockId) {
        self.terminate(from, Terminator::Jump(to));
    }

    /// Block and instruction index defining `v`.
    pub fn def_site(&self, v: ValueId) -> Option<(BlockId, usize)> {
        self.blocks.iter().enumerate().find_map(|(bi, b)| {
            b.insts.iter().position(|i| i.result() == Some(v)).map(|ii| (BlockId(bi as u32), ii))
        })
    }

    pub fn def_op(&self, v: ValueId) -> Option<&Op> {
        let (b, i) = self.def_site(v)?;
        match &self.block(b).insts[i] {
            Inst::Def { op, .. } => Some(op),
            _ => None,
        }
    }

    /// Value of `v` if it is computed from constants only.
    pub fn const_value(&self, v: ValueId) -> Option<u64> {
        let ty = self.value_type(v)?;
        let r = match self.def_op(v)? {
            Op::Const(c) => *c,
            Op::Bin(op, a, b) => {
                let at = self.value_type(*a)?;
                op.apply(at, self.const_value(*a)?, self.const_value(*b)?)?
            }
            Op::Cmp(p, a, b) => p.apply(self.value_type(*a)?, self.const_value(*a)?, self.const_value(*b)?) as u64,
            Op::Select(c, a, b) => {
                if self.const_value(*c)? != 0 {
                    self.const_value(*a)?
                } else {
                    self.const_value(*b)?
                }
            }
            Op::Cast(a) => Value::new(self.value_type(*a)?, self.const_value(*a)?).convert(ty).bits(),
            Op::Phi(_) | Op::Load(_) => return None,
        };
        Some(r & ty.mask())
    }

    pub fn predecessors(&self, b: BlockId) -> Vec<BlockId> {
        (0..self.blocks.len() as u32)
            .map(BlockId)
            .filter(|p| self.block(*p).term.as_ref().is_some_and(|t| t.successors().contains(&b)))
            .collect()
    }

    /// Retargets every edge into `from` to `to`, except edges leaving blocks
    /// in `except`.
    pub fn redirect(&mut self, from: BlockId, to: BlockId, except: &BTreeSet<BlockId>) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            if except.contains(&BlockId(i as u32)) {
                continue;
            }
            if let Some(t) = &mut b.term {
                t.map_blocks(&mut |x| if x == from { to } else { x });
            }
        }
    }

    /// Replaces every use of `old` by `new`.
    pub fn replace_uses(&mut self, old: ValueId, new: ValueId) {
        self.map_values(&mut |v| if v == old { new } else { v });
    }

    pub fn map_values(&mut self, f: &mut dyn FnMut(ValueId) -> ValueId) {
        for b in &mut self.blocks {
            for i in &mut b.insts {
                i.map_operands(f);
            }
            if let Some(Terminator::Branch { cond, .. }) = &mut b.term {
                *cond = f(*cond);
            }
        }
    }

    /// Blocks reachable from `start` without entering `stop`.
    pub fn reachable(&self, start: BlockId, stop: &BTreeSet<BlockId>) -> BTreeSet<BlockId> {
        let mut seen = BTreeSet::new();
        let mut work = alloc::vec![start];
        while let Some(b) = work.pop() {
            if stop.contains(&b) || !seen.insert(b) {
                continue;
            }
            if let Some(t) = &self.block(b).term {
                work.extend(t.successors());
            }
        }
        seen
    }

    /// The blocks of a loop's body: everything reachable from the body
    /// entry before control returns to the latch.
    pub fn body_region(&self, l: &CanonicalLoopInfo) -> BTreeSet<BlockId> {
        let stop = [l.latch, l.header, l.exit].into_iter().collect();
        self.reachable(l.body_entry, &stop)
    }

    /// Empties `dead` blocks and invalidates handles that use them. Block
    /// ids stay stable until [`IrModule::compact`] removes them.
    pub fn discard_blocks(&mut self, dead: &BTreeSet<BlockId>) {
        for b in dead {
            let blk = self.block_mut(*b);
            blk.insts.clear();
            blk.term = None;
        }
        for l in &mut self.loops {
            if l.blocks().iter().any(|b| dead.contains(b)) {
                l.valid = false;
            }
        }
        self.discarded.extend(dead.iter().copied());
    }

    /// Removes discarded blocks, renumbering the rest.
    pub fn compact(&mut self) {
        let dead = core::mem::take(&mut self.discarded);
        self.remove_blocks(&dead);
    }

    pub fn is_compact(&self) -> bool {
        self.discarded.is_empty()
    }

    /// Number of value ids handed out so far.
    pub fn value_capacity(&self) -> usize {
        self.next_value as usize
    }

    /// Deletes `dead` blocks, renumbering the rest. Handles that refer to
    /// a deleted block are invalidated.
    pub fn remove_blocks(&mut self, dead: &BTreeSet<BlockId>) {
        if dead.is_empty() {
            return;
        }
        let mut remap = BTreeMap::new();
        let mut kept = Vec::new();
        for (i, b) in core::mem::take(&mut self.blocks).into_iter().enumerate() {
            let id = BlockId(i as u32);
            if !dead.contains(&id) {
                remap.insert(id, BlockId(kept.len() as u32));
                kept.push(b);
            }
        }
        self.blocks = kept;
        let gone = BlockId(u32::MAX);
        let mut f = |b: BlockId| remap.get(&b).copied().unwrap_or(gone);
        for b in &mut self.blocks {
            if let Some(t) = &mut b.term {
                t.map_blocks(&mut f);
            }
            for i in &mut b.insts {
                if let Inst::Def { op: Op::Phi(inc), .. } = i {
                    inc.retain(|(p, _)| !dead.contains(p));
                    inc.iter_mut().for_each(|(p, _)| *p = f(*p));
                }
            }
        }
        self.entry = f(self.entry);
        for l in &mut self.loops {
            if l.blocks().iter().any(|b| dead.contains(b)) {
                l.valid = false;
            }
            for b in [&mut l.preheader, &mut l.header, &mut l.cond, &mut l.body_entry, &mut l.latch, &mut l.exit, &mut l.after] {
                *b = f(*b);
            }
        }
        self.reindex_types_only();
    }

    fn reindex_types_only(&mut self) {
        let next = self.next_value;
        self.reindex();
        self.next_value = self.next_value.max(next);
    }

    pub fn register_loop(&mut self, info: CanonicalLoopInfo) -> LoopId {
        self.loops.push(info);
        LoopId(self.loops.len() as u32 - 1)
    }

    pub fn loop_info(&self, id: LoopId) -> IrResult<CanonicalLoopInfo> {
        match self.loops.get(id.0 as usize) {
            Some(l) if l.valid => Ok(*l),
            _ => Err(IrError::InvalidHandle(id)),
        }
    }

    pub fn invalidate(&mut self, id: LoopId) {
        if let Some(l) = self.loops.get_mut(id.0 as usize) {
            l.valid = false;
        }
    }

    pub fn valid_loops(&self) -> Vec<LoopId> {
        (0..self.loops.len() as u32).map(LoopId).filter(|l| self.loops[l.0 as usize].valid).collect()
    }

    /// Copies `region` with fresh blocks and values. `seed` pre-maps values
    /// defined outside the region. Returns the block map.
    pub fn clone_region(
        &mut self,
        region: &BTreeSet<BlockId>,
        suffix: &str,
        seed: &BTreeMap<ValueId, ValueId>,
    ) -> BTreeMap<BlockId, BlockId> {
        let mut bmap = BTreeMap::new();
        for b in region {
            let label = alloc::format!("{}{suffix}", self.block(*b).label);
            bmap.insert(*b, self.add_block(&label));
        }
        let mut vmap = seed.clone();
        for b in region {
            for i in &self.block(*b).insts.clone() {
                if let Inst::Def { result, ty, .. } = i {
                    let v = self.fresh_value(*ty);
                    vmap.insert(*result, v);
                }
            }
        }
        for b in region {
            let src = self.block(*b).clone();
            let mut insts = src.insts;
            for i in &mut insts {
                i.map_operands(&mut |v| vmap.get(&v).copied().unwrap_or(v));
                if let Inst::Def { result, op, .. } = i {
                    *result = vmap[result];
                    if let Op::Phi(inc) = op {
                        inc.iter_mut().for_each(|(p, _)| *p = bmap.get(p).copied().unwrap_or(*p));
                    }
                }
            }
            let term = src.term.map(|mut t| {
                t.map_blocks(&mut |x| bmap.get(&x).copied().unwrap_or(x));
                if let Terminator::Branch { cond, .. } = &mut t {
                    *cond = vmap.get(cond).copied().unwrap_or(*cond);
                }
                t
            });
            let nb = bmap[b];
            self.block_mut(nb).insts = insts;
            self.block_mut(nb).term = term;
        }
        bmap
    }

    /// Number of `call body` instructions in the module.
    pub fn count_calls(&self) -> usize {
        self.blocks.iter().flat_map(|b| &b.insts).filter(|i| matches!(i, Inst::CallBody { .. })).count()
    }
}

#[cfg(test)]
mod tests;
