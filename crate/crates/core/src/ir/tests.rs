use super::*;
use crate::exec::{interpret_ir, Env, Trace};
use crate::frontend::parse_source;
use crate::types::IntType;

/// A nest of loops with constant trip counts whose innermost body calls
/// `body` with every induction variable.
fn nest(counts: &[u64]) -> (IrModule, Vec<LoopId>) {
    fn rec(m: &mut IrModule, tcs: &[ValueId], at: BlockId, ivs: &mut Vec<ValueId>, ids: &mut Vec<LoopId>) -> IrResult<BlockId> {
        let Some((&tc, rest)) = tcs.split_first() else {
            m.call_body(at, ivs.clone(), None);
            return Ok(at);
        };
        let pos = ids.len();
        ids.push(LoopId(0));
        let mut inner = Vec::new();
        let id = create_canonical_loop(m, at, tc, &format!("l{pos}"), |m, body, iv| {
            ivs.push(iv);
            let mut sub = Vec::new();
            let end = rec(m, rest, body, ivs, &mut sub)?;
            ivs.pop();
            inner = sub;
            Ok(end)
        })?;
        ids[pos] = id;
        ids.extend(inner);
        Ok(m.loop_info(id)?.after)
    }
    let mut m = IrModule::new();
    let mut ids = Vec::new();
    let entry = m.entry;
    let tcs: Vec<ValueId> = counts.iter().map(|n| m.konst(entry, IntType::UINT, *n)).collect();
    let end = rec(&mut m, &tcs, entry, &mut Vec::new(), &mut ids).unwrap();
    m.terminate(end, Terminator::Halt);
    (m, ids)
}

fn run(m: &IrModule) -> Trace {
    interpret_ir(m, &Env::new(), 1_000_000).unwrap()
}

fn verified(m: &IrModule, ids: &[LoopId]) {
    for id in ids {
        let info = m.loop_info(*id).unwrap();
        assert_eq!(verify_skeleton(m, &info), Vec::new(), "loop {}", id.0);
    }
}

#[test]
fn skeleton_runs_trip_count_iterations() {
    for n in [0, 1, 5] {
        let (m, ids) = nest(&[n]);
        verified(&m, &ids);
        assert_eq!(run(&m).first_args(), (0..n as i128).collect::<Vec<_>>());
    }
}

#[test]
fn skeleton_blocks_are_named_after_the_loop() {
    let (m, ids) = nest(&[3]);
    let info = m.loop_info(ids[0]).unwrap();
    let labels: Vec<&str> = info.blocks().iter().map(|b| m.block(*b).label.as_str()).collect();
    assert_eq!(labels, ["l0.preheader", "l0.header", "l0.cond", "l0.body", "l0.latch", "l0.exit", "l0.after"]);
}

#[test]
fn tiling_a_two_deep_nest_yields_four_loops() {
    let (mut m, ids) = nest(&[4, 3]);
    let new = tile_loops(&mut m, &ids, &[2, 2]).unwrap();
    assert_eq!(new.len(), 4);
    verified(&m, &new);
    for old in ids {
        assert_eq!(m.loop_info(old), Err(IrError::InvalidHandle(old)));
    }
    let t = run(&m);
    let pairs: Vec<(i128, i128)> = t.events.iter().map(|e| (e.args[0].as_i128(), e.args[1].as_i128())).collect();
    assert_eq!(&pairs[..6], [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (1, 2)]);
    assert_eq!(pairs.len(), 12);
}

#[test]
fn tile_sizes_must_match_the_handles() {
    let (mut m, ids) = nest(&[4]);
    assert!(tile_loops(&mut m, &ids, &[2, 2]).is_err());
}

#[test]
fn full_unroll_removes_the_loop() {
    let (mut m, ids) = nest(&[5]);
    assert_eq!(unroll_loop(&mut m, ids[0], UnrollMode::Full).unwrap(), None);
    m.compact();
    assert!(m.valid_loops().is_empty());
    assert_eq!(m.count_calls(), 5);
    assert_eq!(run(&m).first_args(), [0, 1, 2, 3, 4]);
}

#[test]
fn full_unroll_needs_a_constant_trip_count() {
    let p = parse_source("int n;\n#pragma omp unroll full\nfor (int i = 0; i < n; ++i) body(i);", "t.c").unwrap();
    let e = lower_program(&p, &LowerOptions::default()).unwrap_err();
    assert_eq!(e[0].message, "cannot fully unroll: trip count is not a compile-time constant");
}

#[test]
fn partial_unroll_floor_loop_trip_count() {
    for n in 0..20 {
        for f in 1..5 {
            let (mut m, ids) = nest(&[n]);
            let floor = unroll_loop(&mut m, ids[0], UnrollMode::Partial(f)).unwrap().unwrap();
            let info = m.loop_info(floor).unwrap();
            assert_eq!(m.const_value(info.trip_count), Some(n.div_ceil(f)), "n={n} f={f}");
            verified(&m, &[floor]);
            assert_eq!(run(&m).first_args(), (0..n as i128).collect::<Vec<_>>());
        }
    }
}

#[test]
fn heuristic_unroll_uses_factor_two() {
    for n in 1..=16 {
        let (mut m, ids) = nest(&[n]);
        let floor = unroll_loop(&mut m, ids[0], UnrollMode::Heuristic).unwrap().unwrap();
        let info = m.loop_info(floor).unwrap();
        assert_eq!(m.const_value(info.trip_count), Some(n.div_ceil(HEURISTIC_FACTOR)));
    }
}

#[test]
fn collapse_keeps_sequential_order() {
    let (mut m, ids) = nest(&[3, 4]);
    let before = run(&m);
    let c = collapse_loops(&mut m, &ids).unwrap();
    verified(&m, &[c]);
    assert_eq!(m.const_value(m.loop_info(c).unwrap().trip_count), Some(12));
    assert_eq!(run(&m), before);
}

#[test]
fn workshare_tags_threads() {
    for schedule in [Schedule::StaticBlock, Schedule::StaticChunk(2)] {
        let (mut m, ids) = nest(&[10]);
        let w = create_workshare_loop(&mut m, ids[0], 3, schedule).unwrap();
        verified(&m, &[w]);
        let t = run(&m);
        let mut seen: Vec<i128> = t.first_args();
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        for e in &t.events {
            let k = e.args[0].as_i128() as u64;
            let chunk = match schedule {
                Schedule::StaticChunk(c) => Some(c),
                Schedule::StaticBlock => None,
            };
            assert_eq!(e.thread, Some(crate::exec::workshare_owner(k, 10, 3, chunk)));
        }
    }
}

#[test]
fn transforms_reject_stale_handles() {
    let (mut m, ids) = nest(&[4]);
    unroll_loop(&mut m, ids[0], UnrollMode::Partial(2)).unwrap();
    assert_eq!(unroll_loop(&mut m, ids[0], UnrollMode::Full), Err(IrError::InvalidHandle(ids[0])));
    assert!(create_workshare_loop(&mut m, ids[0], 2, Schedule::StaticBlock).is_err());
}

#[test]
fn imperfect_nests_are_rejected() {
    let (mut m, ids) = nest(&[2, 2]);
    let inner = m.loop_info(ids[1]).unwrap();
    m.call_body(inner.preheader, Vec::new(), None);
    let term = m.block_mut(inner.preheader).term.take();
    let last = m.block_mut(inner.preheader).insts.pop().unwrap();
    m.block_mut(inner.preheader).insts.insert(0, last);
    m.block_mut(inner.preheader).term = term;
    assert!(matches!(tile_loops(&mut m, &ids, &[2, 2]), Err(IrError::ImperfectNest(_))));
}

fn messages(m: &IrModule, info: &CanonicalLoopInfo) -> Vec<String> {
    verify_skeleton(m, info).into_iter().map(|d| d.message).collect()
}

#[test]
fn verifier_catches_missing_increment() {
    let (mut m, ids) = nest(&[3]);
    let info = m.loop_info(ids[0]).unwrap();
    if let Some(Inst::Def { op: Op::Phi(inc), .. }) = m.block_mut(info.header).insts.first_mut() {
        inc[1].1 = info.indvar;
    }
    assert!(messages(&m, &info).contains(&"latch does not increment the induction variable".into()));
}

#[test]
fn verifier_catches_wrong_step() {
    let (mut m, ids) = nest(&[3]);
    let info = m.loop_info(ids[0]).unwrap();
    for i in &mut m.block_mut(info.latch).insts {
        if let Inst::Def { op: Op::Const(c), .. } = i {
            *c = 2;
        }
    }
    assert_eq!(messages(&m, &info), ["latch must increment induction variable by one"]);
}

#[test]
fn verifier_catches_signed_compare() {
    let (mut m, ids) = nest(&[3]);
    let info = m.loop_info(ids[0]).unwrap();
    for i in &mut m.block_mut(info.cond).insts {
        if let Inst::Def { op: Op::Cmp(p, ..), .. } = i {
            *p = CmpPred::Slt;
        }
    }
    assert_eq!(messages(&m, &info), ["loop condition must be an unsigned compare of the induction variable"]);
}

#[test]
fn verifier_catches_missing_after_edge() {
    let (mut m, ids) = nest(&[3]);
    let info = m.loop_info(ids[0]).unwrap();
    m.terminate(info.exit, Terminator::Halt);
    assert_eq!(messages(&m, &info), ["exit must jump to after"]);
}

#[test]
fn verifier_catches_stale_trip_count() {
    let (mut m, ids) = nest(&[3]);
    let mut info = m.loop_info(ids[0]).unwrap();
    let entry = m.entry;
    let term = m.block_mut(entry).term.take();
    info.trip_count = m.konst(entry, IntType::UINT, 3);
    m.block_mut(entry).term = term;
    assert_eq!(messages(&m, &info), ["loop condition does not compare against the trip count"]);
}

#[test]
fn verifier_reports_invalid_handles() {
    let (mut m, ids) = nest(&[3]);
    let mut info = m.loop_info(ids[0]).unwrap();
    m.invalidate(ids[0]);
    info.valid = false;
    assert_eq!(messages(&m, &info), ["loop handle has been invalidated"]);
}

#[test]
fn lowering_applies_directive_chains() {
    let src = "#pragma omp for\n#pragma omp tile sizes(2, 2)\nfor (int i = 0; i < 4; ++i) for (int j = 0; j < 4; ++j) body(i, j);";
    let p = parse_source(src, "t.c").unwrap();
    let l = lower_program(&p, &LowerOptions::default()).unwrap();
    assert!(l.module.is_compact());
    let handles: Vec<LoopId> = l.directive_loops.values().flatten().copied().collect();
    assert_eq!(handles.len(), 4);
    verified(&l.module, &handles);
    assert_eq!(run(&l.module).len(), 16);
}

#[test]
fn cloned_regions_get_fresh_values() {
    let (mut m, ids) = nest(&[2]);
    let before = m.value_capacity();
    unroll_loop(&mut m, ids[0], UnrollMode::Partial(3)).unwrap();
    assert!(m.value_capacity() > before);
    m.compact();
    let mut defs = std::collections::BTreeSet::new();
    for b in &m.blocks {
        for i in &b.insts {
            if let Some(r) = i.result() {
                assert!(defs.insert(r), "%{} defined twice", r.0);
            }
        }
    }
}
