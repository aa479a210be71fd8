use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use super::*;
use crate::diag::{Diagnostic, SourceLocation};

/// Emits a loop skeleton running `trip_count` iterations. `at` is the
/// unterminated block control comes from; it is terminated with a jump to
/// the preheader. `body` is called positioned at the body entry with the
/// induction variable and returns the unterminated block where the body
/// ends, which then jumps to the latch. The skeleton's `after` block is
/// left unterminated for the caller to continue from.
pub fn create_canonical_loop<F>(m: &mut IrModule, at: BlockId, trip_count: ValueId, name: &str, body: F) -> IrResult<LoopId>
where
    F: FnOnce(&mut IrModule, BlockId, ValueId) -> IrResult<BlockId>,
{
    let ty = m.value_type(trip_count).ok_or_else(|| IrError::Unsupported(format!("trip count %{} is undefined", trip_count.0)))?;
    let preheader = m.add_block(&format!("{name}.preheader"));
    let header = m.add_block(&format!("{name}.header"));
    let cond = m.add_block(&format!("{name}.cond"));
    let body_entry = m.add_block(&format!("{name}.body"));
    m.jump(at, preheader);
    let zero = m.konst(preheader, ty, 0);
    m.jump(preheader, header);
    let indvar = m.def(header, ty, Op::Phi(Vec::new()));
    m.jump(header, cond);
    let c = m.cmp(cond, CmpPred::Ult, indvar, trip_count);
    let end = body(m, body_entry, indvar)?;
    let latch = m.add_block(&format!("{name}.latch"));
    let exit = m.add_block(&format!("{name}.exit"));
    let after = m.add_block(&format!("{name}.after"));
    m.terminate(cond, Terminator::Branch { cond: c, then: body_entry, otherwise: exit });
    m.jump(end, latch);
    let one = m.konst(latch, ty, 1);
    let next = m.bin(latch, BinOp::Add, indvar, one);
    m.jump(latch, header);
    m.jump(exit, after);
    if let Some(Inst::Def { op: Op::Phi(inc), .. }) = m.block_mut(header).insts.first_mut() {
        *inc = alloc::vec![(preheader, zero), (latch, next)];
    }
    Ok(m.register_loop(CanonicalLoopInfo { preheader, header, cond, body_entry, latch, exit, after, indvar, trip_count, valid: true }))
}

fn issue(msg: &str) -> Diagnostic {
    Diagnostic::error(SourceLocation::unknown(), msg)
}

fn jumps_to(m: &IrModule, from: BlockId, to: BlockId) -> bool {
    matches!(m.block(from).term, Some(Terminator::Jump(t)) if t == to)
}

fn op_in(m: &IrModule, b: BlockId, v: ValueId) -> Option<&Op> {
    m.block(b).insts.iter().find_map(|i| match i {
        Inst::Def { result, op, .. } if *result == v => Some(op),
        _ => None,
    })
}

/// Checks the skeleton invariants of `l`; one diagnostic per violation.
pub fn verify_skeleton(m: &IrModule, l: &CanonicalLoopInfo) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !l.valid {
        out.push(issue("loop handle has been invalidated"));
        return out;
    }
    let blocks = l.blocks();
    let distinct: BTreeSet<BlockId> = blocks.iter().copied().collect();
    if distinct.len() != 7 || blocks.iter().any(|b| !m.has_block(*b)) {
        out.push(issue("skeleton blocks must be distinct and present in the module"));
        return out;
    }
    if !jumps_to(m, l.preheader, l.header) {
        out.push(issue("preheader must jump to header"));
    }
    if !jumps_to(m, l.header, l.cond) {
        out.push(issue("header must jump to cond"));
    }
    if !jumps_to(m, l.latch, l.header) {
        out.push(issue("latch must jump back to header"));
    }
    if !jumps_to(m, l.exit, l.after) {
        out.push(issue("exit must jump to after"));
    }

    // Induction variable: header phi starting at zero, incremented by one.
    let phi = match op_in(m, l.header, l.indvar) {
        Some(Op::Phi(inc)) => Some(inc.clone()),
        _ => {
            out.push(issue("induction variable must be a phi in the header"));
            None
        }
    };
    if let Some(inc) = phi {
        let from = |b: BlockId| inc.iter().find(|(p, _)| *p == b).map(|(_, v)| *v);
        let starts_at_zero = from(l.preheader).is_some_and(|z| m.const_value(z) == Some(0)) && inc.len() == 2;
        if !starts_at_zero {
            out.push(issue("induction variable must start at zero"));
        }
        match from(l.latch).map(|n| op_in(m, l.latch, n)) {
            Some(Some(Op::Bin(BinOp::Add, a, one))) if *a == l.indvar => {
                if m.const_value(*one) != Some(1) {
                    out.push(issue("latch must increment induction variable by one"));
                }
            }
            _ => out.push(issue("latch does not increment the induction variable")),
        }
    }

    // Condition: unsigned compare against the identified trip count.
    match &m.block(l.cond).term {
        Some(Terminator::Branch { cond, then, otherwise }) => {
            if *then != l.body_entry || *otherwise != l.exit {
                out.push(issue("cond must branch to the body entry or the exit"));
            }
            match op_in(m, l.cond, *cond) {
                Some(Op::Cmp(CmpPred::Ult, a, b)) if *a == l.indvar => {
                    if *b != l.trip_count {
                        out.push(issue("loop condition does not compare against the trip count"));
                    }
                }
                _ => out.push(issue("loop condition must be an unsigned compare of the induction variable")),
            }
        }
        _ => out.push(issue("cond must end in a conditional branch")),
    }

    // Trip count is available before the preheader's terminator.
    let inside: BTreeSet<BlockId> = m.body_region(l).into_iter().chain([l.header, l.cond, l.latch, l.exit, l.after]).collect();
    match m.def_site(l.trip_count) {
        Some((b, _)) if !inside.contains(&b) => {}
        _ => out.push(issue("trip count must be computed before the preheader's terminator")),
    }

    let stop = [l.header].into_iter().collect();
    if !m.reachable(l.body_entry, &stop).contains(&l.latch) {
        out.push(issue("body region must reach the latch"));
    }
    out
}
