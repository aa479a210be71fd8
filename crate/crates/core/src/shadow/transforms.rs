use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::build::Gen;
use super::{hoist, Level, UnrollStrategy};
use crate::ast::fold::substitute_stmt;
use crate::ast::*;
use crate::diag::Diagnostic;
use crate::sema::{analyze_canonical_loop, MAX_FULL_UNROLL};
use crate::types::IntType;

fn and(g: &Gen, a: Expr, b: Expr) -> Expr {
    g.bin(BinaryOp::LAnd, a, b)
}

fn lt(g: &Gen, a: Expr, b: Expr) -> Expr {
    g.bin(BinaryOp::Lt, a, b)
}

/// The user body preceded by the user variable for iteration `k`.
fn instance(g: &mut Gen, level: &Level, k: Expr) -> Stmt {
    let set = level.materialize(g, k);
    g.compound(alloc::vec![set, level.body().clone()])
}

pub(super) fn tile(g: &mut Gen, levels: &[Level], sizes: &[u64]) -> Stmt {
    let mut floors = Vec::new();
    let mut tiles = Vec::new();
    for (k, l) in levels.iter().enumerate() {
        let ty = l.logical();
        floors.push(g.var(format!("tile.f{k}.{}", l.name()), ty));
        tiles.push(g.var(format!("tile.t{k}.{}", l.name()), ty));
    }
    let mut items = Vec::new();
    for (l, t) in levels.iter().zip(&tiles) {
        let r = g.read(t);
        items.push(l.materialize(g, r));
    }
    items.push(levels.last().expect("tiled nest").body().clone());
    let mut stmt = g.compound(items);
    for k in (0..levels.len()).rev() {
        let (l, f, t) = (&levels[k], &floors[k], &tiles[k]);
        let s = g.lit(sizes[k], l.logical());
        let start = g.bin(BinaryOp::Mul, g.read(f), s.clone());
        let end = g.bin(BinaryOp::Add, start.clone(), s);
        let cond = and(g, lt(g, g.read(t), end), lt(g, g.read(t), l.tc.clone()));
        let one = g.lit(1, l.logical());
        stmt = g.for_loop(t, start, cond, one, stmt);
    }
    for k in (0..levels.len()).rev() {
        let (l, f) = (&levels[k], &floors[k]);
        let n = g.ceil_div(l.tc.clone(), g.lit(sizes[k], l.logical()));
        let zero = g.lit(0, l.logical());
        let one = g.lit(1, l.logical());
        let cond = lt(g, g.read(f), n);
        stmt = g.for_loop(f, zero, cond, one, stmt);
    }
    stmt
}

pub(super) fn unroll_partial(g: &mut Gen, level: &Level, factor: u64, strategy: UnrollStrategy) -> Stmt {
    let ty = level.logical();
    let n = level.tc.clone();
    let outer = g.var(format!("unrolled.iv.{}", level.name()), ty);
    let f = g.lit(factor, ty);
    let zero = g.lit(0, ty);
    match strategy {
        UnrollStrategy::StripMineHint => {
            let inner = g.var(format!("unroll_inner.iv.{}", level.name()), ty);
            let r = g.read(&inner);
            let body = instance(g, level, r);
            let end = g.bin(BinaryOp::Add, g.read(&outer), f.clone());
            let cond = and(g, lt(g, g.read(&inner), end), lt(g, g.read(&inner), n.clone()));
            let one = g.lit(1, ty);
            let mut inner_loop = g.for_loop(&inner, g.read(&outer), cond, one, body);
            if factor >= 2 {
                let attr = LoopHintAttr::UnrollCount(factor as u32);
                inner_loop = g.stmt(StmtKind::Attributed { attr, stmt: Box::new(inner_loop) });
            }
            let cond = lt(g, g.read(&outer), n);
            g.for_loop(&outer, zero, cond, f, inner_loop)
        }
        UnrollStrategy::GuardedClone => {
            let mut clones = Vec::new();
            for j in 0..factor {
                let k = g.bin(BinaryOp::Add, g.read(&outer), g.lit(j, ty));
                let inst = instance(g, level, k.clone());
                clones.push(if j == 0 { inst } else { g.if_then(lt(g, k, n.clone()), inst) });
            }
            let body = g.compound(clones);
            let cond = lt(g, g.read(&outer), n);
            g.for_loop(&outer, zero, cond, f, body)
        }
        UnrollStrategy::RemainderLoop => {
            let main_end = g.bin(BinaryOp::Sub, n.clone(), g.bin(BinaryOp::Rem, n.clone(), f.clone()));
            let mut clones = Vec::new();
            for j in 0..factor {
                let k = g.bin(BinaryOp::Add, g.read(&outer), g.lit(j, ty));
                clones.push(instance(g, level, k));
            }
            let body = g.compound(clones);
            let cond = lt(g, g.read(&outer), main_end.clone());
            let main = g.for_loop(&outer, zero, cond, f, body);
            let rem = g.var(format!("unroll_rem.iv.{}", level.name()), ty);
            let r = g.read(&rem);
            let body = instance(g, level, r);
            let cond = lt(g, g.read(&rem), n);
            let one = g.lit(1, ty);
            let rest = g.for_loop(&rem, main_end, cond, one, body);
            g.compound(alloc::vec![main, rest])
        }
    }
}

pub(super) fn unroll_full(g: &mut Gen, level: &Level) -> Result<Stmt, Diagnostic> {
    let n = match level.tc.as_literal() {
        Some(n) if n <= MAX_FULL_UNROLL => n,
        _ => {
            let loc = level.canon.loop_stmt.loc.clone();
            return Err(Diagnostic::error(loc, "cannot fully unroll: trip count is not a compile-time constant"));
        }
    };
    let mut items = Vec::new();
    for k in 0..n {
        let kx = g.lit(k, level.logical());
        if level.internal_var() {
            let v = level.user_value(g, kx);
            let body = substitute_stmt(level.body(), level.canon.user_var.decl, &v);
            items.push(expand_hints(g, &body));
        } else {
            items.push(instance(g, level, kx));
        }
    }
    Ok(g.compound(items))
}

/// Fully unrolls generated loops carrying an unroll-count hint once their
/// trip count has become a constant.
fn expand_hints(g: &mut Gen, s: &Stmt) -> Stmt {
    let kind = match &s.kind {
        StmtKind::Attributed { attr: LoopHintAttr::UnrollCount(_), stmt } => {
            return expand_loop(g, stmt).unwrap_or_else(|| s.clone());
        }
        StmtKind::Compound(items) => StmtKind::Compound(items.iter().map(|i| expand_hints(g, i)).collect()),
        StmtKind::If { cond, then, otherwise } => StmtKind::If {
            cond: cond.clone(),
            then: Box::new(expand_hints(g, then)),
            otherwise: otherwise.as_ref().map(|o| Box::new(expand_hints(g, o))),
        },
        StmtKind::For(f) => StmtKind::For(ForStmt { body: Box::new(expand_hints(g, &f.body)), ..f.clone() }),
        _ => return s.clone(),
    };
    Stmt { id: s.id, loc: s.loc.clone(), kind }
}

fn expand_loop(g: &mut Gen, s: &Stmt) -> Option<Stmt> {
    let f = s.as_for()?;
    let generated = matches!(f.init.as_deref().map(|i| &i.kind), Some(StmtKind::Decl(d)) if d.internal);
    if !generated {
        return None;
    }
    let canon = analyze_canonical_loop(s).ok()?;
    canon.const_trip_count().filter(|n| *n <= MAX_FULL_UNROLL)?;
    let mut pre = Vec::new();
    let level = Level::prepare(g, canon, &mut pre);
    let full = unroll_full(g, &level).ok()?;
    if pre.is_empty() {
        Some(full)
    } else {
        pre.push(full);
        Some(g.compound(pre))
    }
}

/// Thread loop running the iterations of `levels` (collapsed into one
/// logical space) with a static schedule.
pub(super) fn workshare(g: &mut Gen, pre: &mut Vec<Stmt>, levels: &[Level], chunk: Option<u64>, threads: u32) -> Stmt {
    let ty = if levels.len() == 1 {
        levels[0].logical()
    } else if levels.iter().any(|l| l.logical().bits == 64) {
        IntType::ULONG
    } else {
        IntType::UINT
    };
    let v0 = levels[0].name();
    let mut total = g.lit(1, ty);
    for l in levels {
        total = g.bin(BinaryOp::Mul, total, g.cast(ty, l.tc.clone()));
    }
    let n = hoist(g, pre, &format!("omp.n.{v0}"), total);
    let idx = g.var(format!("omp.iv.{v0}"), ty);

    // Level k advances every span_k = n_{k+1} * ... * n_last iterations.
    let mut spans = alloc::vec![g.lit(1, ty); levels.len()];
    for k in (0..levels.len() - 1).rev() {
        spans[k] = g.bin(BinaryOp::Mul, spans[k + 1].clone(), g.cast(ty, levels[k + 1].tc.clone()));
    }
    let mut items = Vec::new();
    let mut ks = Vec::new();
    for (k, l) in levels.iter().enumerate() {
        let q = g.bin(BinaryOp::Div, g.read(&idx), spans[k].clone());
        let q = if k == 0 { q } else { g.bin(BinaryOp::Rem, q, g.cast(ty, l.tc.clone())) };
        ks.push(g.cast(l.logical(), q));
    }
    for (l, k) in levels.iter().zip(ks) {
        items.push(l.materialize(g, k));
    }
    items.push(levels.last().expect("workshared nest").body().clone());
    let body = g.compound(items);

    let tid = g.var("omp.tid", IntType::UINT);
    let t = g.cast(ty, g.read(&tid));
    let one = g.lit(1, ty);
    let work = match chunk {
        None => {
            let b = g.ceil_div(n.clone(), g.lit(threads as u64, ty));
            let lb = g.bin(BinaryOp::Mul, t, b.clone());
            let end = g.bin(BinaryOp::Add, lb.clone(), b);
            let cond = and(g, lt(g, g.read(&idx), end), lt(g, g.read(&idx), n));
            g.for_loop(&idx, lb, cond, one, body)
        }
        Some(c) => {
            let c = g.lit(c, ty);
            let nchunks = g.ceil_div(n.clone(), c.clone());
            let ch = g.var(format!("omp.chunk.{v0}"), ty);
            let lb = g.bin(BinaryOp::Mul, g.read(&ch), c.clone());
            let end = g.bin(BinaryOp::Add, lb.clone(), c);
            let cond = and(g, lt(g, g.read(&idx), end), lt(g, g.read(&idx), n));
            let inner = g.for_loop(&idx, lb, cond, one, body);
            let cond = lt(g, g.read(&ch), nchunks);
            let step = g.lit(threads as u64, ty);
            g.for_loop(&ch, t, cond, step, inner)
        }
    };
    let tid_decl = VarDecl { decl: tid.decl, name: tid.name.clone(), ty: tid.ty, init: Some(g.lit(0, tid.ty)), internal: true };
    g.stmt(StmtKind::ThreadLoop(ThreadLoop { tid: tid_decl, num_threads: threads, body: Box::new(work) }))
}
