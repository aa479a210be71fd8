use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::*;
use crate::sema::MAX_FULL_UNROLL;

/// Factor used by [`UnrollMode::Heuristic`].
pub const HEURISTIC_FACTOR: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnrollMode {
    Full,
    Partial(u64),
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    StaticBlock,
    StaticChunk(u64),
}

/// A perfect nest whose skeletons are about to be replaced. The body of
/// the innermost loop stays in place; everything between the old
/// skeletons is either sunk into the new innermost body or deleted.
struct Detached {
    ids: Vec<LoopId>,
    loops: Vec<CanonicalLoopInfo>,
    /// Unterminated block that now receives control instead of the
    /// outermost preheader.
    setup: BlockId,
    inner_entry: BlockId,
    /// Unterminated block the old body now ends in.
    join: BlockId,
    region: BTreeSet<BlockId>,
    cont: BlockId,
    sunk: Vec<Inst>,
    dead: BTreeSet<BlockId>,
}

fn retarget_in(m: &mut IrModule, blocks: impl IntoIterator<Item = BlockId>, from: BlockId, to: BlockId) {
    for b in blocks {
        if let Some(t) = &mut m.block_mut(b).term {
            t.map_blocks(&mut |x| if x == from { to } else { x });
        }
    }
}

/// Instructions of a skeleton block other than the skeleton's own.
fn extra_insts(m: &IrModule, b: BlockId, skeleton: &[ValueId]) -> Vec<Inst> {
    m.block(b).insts.iter().filter(|i| i.result().is_none_or(|r| !skeleton.contains(&r))).cloned().collect()
}

fn skeleton_values(m: &IrModule, l: &CanonicalLoopInfo) -> Vec<ValueId> {
    let mut v = alloc::vec![l.indvar];
    if let Some(Op::Phi(inc)) = m.def_op(l.indvar) {
        v.extend(inc.iter().map(|(_, x)| *x));
    }
    for x in v.clone() {
        if let Some(Op::Bin(BinOp::Add, _, one)) = m.def_op(x) {
            v.push(*one);
        }
    }
    if let Some(Terminator::Branch { cond, .. }) = &m.block(l.cond).term {
        v.push(*cond);
    }
    v
}

fn detach(m: &mut IrModule, ids: &[LoopId], what: &str) -> IrResult<Detached> {
    if ids.is_empty() {
        return Err(IrError::Unsupported(format!("{what} needs at least one loop")));
    }
    let loops = ids.iter().map(|id| m.loop_info(*id)).collect::<IrResult<Vec<_>>>()?;
    if ids.iter().collect::<BTreeSet<_>>().len() != ids.len() {
        return Err(IrError::ImperfectNest("the same loop is listed twice".into()));
    }
    let d = loops.len();
    let mut sunk = Vec::new();
    for k in 0..d {
        let l = &loops[k];
        let skel = skeleton_values(m, l);
        if k > 0 {
            let pre = extra_insts(m, l.preheader, &skel);
            if pre.iter().any(|i| !i.is_pure()) {
                return Err(IrError::ImperfectNest(format!("loop {k} has code before it in its parent's body")));
            }
            sunk.extend(pre);
            if !m.block(l.after).insts.is_empty() || m.block(l.after).term != Some(Terminator::Jump(loops[k - 1].latch)) {
                return Err(IrError::ImperfectNest(format!("loop {k} is followed by code in its parent's body")));
            }
        }
        for b in [l.header, l.cond, l.latch, l.exit] {
            if !extra_insts(m, b, &skel).is_empty() {
                return Err(IrError::ImperfectNest(format!("skeleton block '{}' holds extra instructions", m.block(b).label)));
            }
        }
        if k + 1 < d {
            let entry = m.block(l.body_entry);
            if entry.term != Some(Terminator::Jump(loops[k + 1].preheader)) || entry.insts.iter().any(|i| !i.is_pure()) {
                return Err(IrError::ImperfectNest(format!("loop {} is not the only statement in the body of loop {k}", k + 1)));
            }
            sunk.extend(entry.insts.iter().cloned());
        }
    }
    let outer = loops[0];
    let inner = loops[d - 1];
    let nest_blocks: BTreeSet<BlockId> =
        m.body_region(&outer).into_iter().chain([outer.header, outer.cond, outer.latch, outer.exit]).collect();
    for (k, l) in loops.iter().enumerate().skip(1) {
        if m.def_site(l.trip_count).is_none_or(|(b, _)| nest_blocks.contains(&b)) {
            return Err(IrError::ImperfectNest(format!("trip count of loop {k} is not available before the nest")));
        }
    }

    let setup = m.add_block(&format!("{what}.setup"));
    m.redirect(outer.preheader, setup, &BTreeSet::new());
    let keep = extra_insts(m, outer.preheader, &skeleton_values(m, &outer));
    m.block_mut(setup).insts.extend(keep);

    let region = m.body_region(&inner);
    let join = m.add_block(&format!("{what}.join"));
    retarget_in(m, region.iter().copied().collect::<Vec<_>>(), inner.latch, join);

    let mut dead = BTreeSet::new();
    for (k, l) in loops.iter().enumerate() {
        dead.extend([l.preheader, l.header, l.cond, l.latch, l.exit]);
        if k + 1 < d {
            dead.insert(l.body_entry);
        }
        if k > 0 {
            dead.insert(l.after);
        }
    }
    Ok(Detached {
        ids: ids.to_vec(),
        loops,
        setup,
        inner_entry: inner.body_entry,
        join,
        region,
        cont: outer.after,
        sunk,
        dead,
    })
}

impl Detached {
    /// Continues the new innermost body at `b` into the old body.
    fn enter(&self, m: &mut IrModule, b: BlockId) -> BlockId {
        m.block_mut(b).insts.extend(self.sunk.iter().cloned());
        m.jump(b, self.inner_entry);
        self.join
    }

    fn finish(self, m: &mut IrModule, new_after: BlockId, new_ivs: &[ValueId]) {
        m.jump(new_after, self.cont);
        for (l, iv) in self.loops.iter().zip(new_ivs) {
            m.replace_uses(l.indvar, *iv);
        }
        for id in &self.ids {
            m.invalidate(*id);
        }
        m.discard_blocks(&self.dead);
    }
}

type TripCountFn<'a> = dyn FnMut(&mut IrModule, BlockId, usize, &[ValueId]) -> ValueId + 'a;
type InnerBodyFn<'a> = dyn FnMut(&mut IrModule, BlockId, &[ValueId]) -> IrResult<BlockId> + 'a;

/// Emits `names.len()` nested loops at `at`. `count` yields the trip count
/// of level `k`, emitting any code it needs in the block it is given;
/// `inner` emits the innermost body. Returns the handles, outermost first,
/// and the outermost loop's `after` block.
fn build_nest(
    m: &mut IrModule,
    at: BlockId,
    names: &[String],
    count: &mut TripCountFn<'_>,
    inner: &mut InnerBodyFn<'_>,
) -> IrResult<(Vec<LoopId>, BlockId)> {
    struct Nest<'n, 'c, 'i> {
        names: &'n [String],
        ivs: Vec<ValueId>,
        ids: Vec<LoopId>,
        count: &'n mut TripCountFn<'c>,
        inner: &'n mut InnerBodyFn<'i>,
    }

    fn rec(m: &mut IrModule, at: BlockId, k: usize, n: &mut Nest<'_, '_, '_>) -> IrResult<BlockId> {
        if k == n.names.len() {
            return (n.inner)(m, at, &n.ivs);
        }
        let tc = (n.count)(m, at, k, &n.ivs);
        let pos = n.ids.len();
        n.ids.push(LoopId(u32::MAX));
        let id = create_canonical_loop(m, at, tc, &n.names[k], |m, b, iv| {
            n.ivs.push(iv);
            let r = rec(m, b, k + 1, n);
            n.ivs.pop();
            r
        })?;
        n.ids[pos] = id;
        Ok(m.loop_info(id)?.after)
    }

    let mut nest = Nest { names, ivs: Vec::new(), ids: Vec::new(), count, inner };
    let after = rec(m, at, 0, &mut nest)?;
    Ok((nest.ids, after))
}

fn ty_of(m: &IrModule, v: ValueId) -> IntType {
    m.value_type(v).expect("defined value")
}

/// Tiles a perfect nest. Returns the floor loops followed by the tile
/// loops; the input handles are invalidated.
pub fn tile_loops(m: &mut IrModule, ids: &[LoopId], sizes: &[u64]) -> IrResult<Vec<LoopId>> {
    if sizes.len() != ids.len() || sizes.contains(&0) {
        return Err(IrError::Unsupported("tile sizes must be positive, one per loop".into()));
    }
    let det = detach(m, ids, "tile")?;
    let d = sizes.len();
    let s = det.setup;
    let tcs: Vec<ValueId> = det.loops.iter().map(|l| l.trip_count).collect();
    let mut size_vals = Vec::new();
    let mut floor_counts = Vec::new();
    for k in 0..d {
        let sv = m.konst(s, ty_of(m, tcs[k]), sizes[k]);
        size_vals.push(sv);
        floor_counts.push(m.ceil_div(s, tcs[k], sv));
    }
    let mut names: Vec<String> = (0..d).map(|k| format!("tile.floor{k}")).collect();
    names.extend((0..d).map(|k| format!("tile.tile{k}")));
    let mut count = |m: &mut IrModule, b: BlockId, k: usize, ivs: &[ValueId]| {
        if k < d {
            return floor_counts[k];
        }
        let j = k - d;
        // The tile loop runs min(s, n - f*s) times.
        let start = m.bin(b, BinOp::Mul, ivs[j], size_vals[j]);
        let left = m.bin(b, BinOp::Sub, tcs[j], start);
        m.umin(b, left, size_vals[j])
    };
    let mut new_ivs = Vec::new();
    let mut inner = |m: &mut IrModule, b: BlockId, ivs: &[ValueId]| {
        for j in 0..d {
            let start = m.bin(b, BinOp::Mul, ivs[j], size_vals[j]);
            new_ivs.push(m.bin(b, BinOp::Add, start, ivs[d + j]));
        }
        Ok(det.enter(m, b))
    };
    let (handles, after) = build_nest(m, s, &names, &mut count, &mut inner)?;
    det.finish(m, after, &new_ivs);
    Ok(handles)
}

/// Collapses a perfect nest into one loop over the product of the trip
/// counts, recovering each original index with a div/mod chain.
pub fn collapse_loops(m: &mut IrModule, ids: &[LoopId]) -> IrResult<LoopId> {
    let det = detach(m, ids, "collapse")?;
    let s = det.setup;
    let tcs: Vec<ValueId> = det.loops.iter().map(|l| l.trip_count).collect();
    let d = tcs.len();
    let ty = if d == 1 {
        ty_of(m, tcs[0])
    } else if tcs.iter().any(|t| ty_of(m, *t).bits == 64) {
        IntType::ULONG
    } else {
        IntType::UINT
    };
    let wide: Vec<ValueId> = tcs.iter().map(|t| m.cast(s, ty, *t)).collect();
    let mut spans = alloc::vec![ValueId(0); d];
    spans[d - 1] = m.konst(s, ty, 1);
    for k in (0..d - 1).rev() {
        spans[k] = m.bin(s, BinOp::Mul, spans[k + 1], wide[k + 1]);
    }
    let total = m.bin(s, BinOp::Mul, spans[0], wide[0]);
    let mut new_ivs = Vec::new();
    let mut inner = |m: &mut IrModule, b: BlockId, ivs: &[ValueId]| {
        let lin = ivs[0];
        for k in 0..d {
            let idx = if d == 1 {
                lin
            } else {
                let q = m.bin(b, BinOp::UDiv, lin, spans[k]);
                if k == 0 {
                    q
                } else {
                    m.bin(b, BinOp::URem, q, wide[k])
                }
            };
            let t = ty_of(m, tcs[k]);
            new_ivs.push(m.cast(b, t, idx));
        }
        Ok(det.enter(m, b))
    };
    let (handles, after) = build_nest(m, s, &[String::from("collapsed")], &mut |_, _, _, _| total, &mut inner)?;
    det.finish(m, after, &new_ivs);
    Ok(handles[0])
}

/// Replaces the skeleton of `l` with straight-line copies of its body,
/// one per entry of `copies`. Copy `j` sees the induction variable as the
/// constant `copies[j]` and, if `guard` is given, only runs while that
/// constant is below it.
fn replace_with_copies(m: &mut IrModule, id: LoopId, copies: u64, guard: Option<ValueId>, tag: &str) -> IrResult<()> {
    let l = m.loop_info(id)?;
    let ty = ty_of(m, l.trip_count);
    let region = m.body_region(&l);
    let start = m.add_block(&format!("{tag}.entry"));
    m.redirect(l.preheader, start, &BTreeSet::new());
    let mut cur = start;
    for j in 0..copies {
        let kj = m.konst(cur, ty, j);
        let seed: BTreeMap<ValueId, ValueId> = [(l.indvar, kj)].into_iter().collect();
        let bmap = m.clone_region(&region, &format!(".{tag}{j}"), &seed);
        let next = m.add_block(&format!("{tag}.next{j}"));
        retarget_in(m, bmap.values().copied().collect::<Vec<_>>(), l.latch, next);
        match guard {
            Some(g) if j > 0 => {
                let c = m.cmp(cur, CmpPred::Ult, kj, g);
                m.terminate(cur, Terminator::Branch { cond: c, then: bmap[&l.body_entry], otherwise: l.after });
            }
            _ => m.jump(cur, bmap[&l.body_entry]),
        }
        cur = next;
    }
    m.jump(cur, l.after);
    let mut dead: BTreeSet<BlockId> = [l.preheader, l.header, l.cond, l.latch, l.exit].into_iter().collect();
    dead.extend(region);
    m.invalidate(id);
    m.discard_blocks(&dead);
    Ok(())
}

/// Unrolls a loop. Full unrolling leaves no loop; partial unrolling tiles
/// by the factor and replaces the tile loop with guarded copies, returning
/// the floor loop.
pub fn unroll_loop(m: &mut IrModule, id: LoopId, mode: UnrollMode) -> IrResult<Option<LoopId>> {
    let l = m.loop_info(id)?;
    match mode {
        UnrollMode::Full => {
            let n = m.const_value(l.trip_count).ok_or(IrError::NonConstantTripCount)?;
            if n > MAX_FULL_UNROLL {
                return Err(IrError::TooManyIterations(n));
            }
            replace_with_copies(m, id, n, None, "full")?;
            Ok(None)
        }
        UnrollMode::Partial(f) => {
            let tiled = tile_loops(m, &[id], &[f])?;
            let tile = m.loop_info(tiled[1])?;
            replace_with_copies(m, tiled[1], f, Some(tile.trip_count), "unroll")?;
            Ok(Some(tiled[0]))
        }
        UnrollMode::Heuristic => unroll_loop(m, id, UnrollMode::Partial(HEURISTIC_FACTOR)),
    }
}

/// Distributes the iterations of a loop over `threads` simulated threads.
/// Returns the loop each thread runs its iterations in.
pub fn create_workshare_loop(m: &mut IrModule, id: LoopId, threads: u32, schedule: Schedule) -> IrResult<LoopId> {
    if threads == 0 {
        return Err(IrError::Unsupported("a worksharing loop needs at least one thread".into()));
    }
    if schedule == Schedule::StaticChunk(0) {
        return Err(IrError::Unsupported("chunk size must be positive".into()));
    }
    let det = detach(m, &[id], "ws")?;
    let s = det.setup;
    let n = det.loops[0].trip_count;
    let ty = ty_of(m, n);
    let nthreads = m.konst(s, IntType::UINT, threads as u64);
    let t_wide = m.konst(s, ty, threads as u64);
    let zero = m.konst(s, ty, 0);
    let one = m.konst(s, ty, 1);
    let (names, per): (Vec<String>, ValueId) = match schedule {
        Schedule::StaticBlock => (alloc::vec!["ws.dispatch".into(), "ws.work".into()], m.ceil_div(s, n, t_wide)),
        Schedule::StaticChunk(c) => {
            let cv = m.konst(s, ty, c);
            (alloc::vec!["ws.dispatch".into(), "ws.chunk".into(), "ws.work".into()], cv)
        }
    };
    let nchunks = match schedule {
        Schedule::StaticBlock => None,
        Schedule::StaticChunk(_) => Some(m.ceil_div(s, n, per)),
    };
    let lo = core::cell::Cell::new(ValueId(0));
    let mut count = |m: &mut IrModule, b: BlockId, k: usize, ivs: &[ValueId]| -> ValueId {
        if k == 0 {
            return nthreads;
        }
        let t = m.cast(b, ty, ivs[0]);
        match (k, nchunks) {
            // Thread t runs chunks t, t+T, ...: (nchunks - t - 1) / T + 1 of them.
            (1, Some(nc)) => {
                let has = m.cmp(b, CmpPred::Ult, t, nc);
                let left = m.bin(b, BinOp::Sub, nc, t);
                let left = m.bin(b, BinOp::Sub, left, one);
                let q = m.bin(b, BinOp::UDiv, left, t_wide);
                let q = m.bin(b, BinOp::Add, q, one);
                m.select(b, has, q, zero)
            }
            (2, Some(_)) => {
                let step = m.bin(b, BinOp::Mul, ivs[1], t_wide);
                let chunk = m.bin(b, BinOp::Add, t, step);
                lo.set(m.bin(b, BinOp::Mul, chunk, per));
                let left = m.bin(b, BinOp::Sub, n, lo.get());
                m.umin(b, left, per)
            }
            _ => {
                lo.set(m.bin(b, BinOp::Mul, t, per));
                let has = m.cmp(b, CmpPred::Ult, lo.get(), n);
                let left = m.bin(b, BinOp::Sub, n, lo.get());
                let c = m.umin(b, left, per);
                m.select(b, has, c, zero)
            }
        }
    };
    let mut new_iv = Vec::new();
    let mut tid = ValueId(0);
    let mut inner = |m: &mut IrModule, b: BlockId, ivs: &[ValueId]| {
        tid = ivs[0];
        new_iv.push(m.bin(b, BinOp::Add, lo.get(), *ivs.last().expect("work loop")));
        Ok(det.enter(m, b))
    };
    let (handles, after) = build_nest(m, s, &names, &mut count, &mut inner)?;
    for b in &det.region {
        for i in &mut m.block_mut(*b).insts {
            if let Inst::CallBody { thread, .. } = i {
                *thread = Some(tid);
            }
        }
    }
    det.finish(m, after, &new_iv);
    Ok(*handles.last().expect("work loop"))
}
