//! Reference orders computed directly from the index space, without
//! going through either backend.

use alloc::vec::Vec;

use super::TraceEvent;

/// Calls `f` with every tuple in `lo[k]..hi[k]`, last index fastest.
fn for_each_tuple(lo: &[u64], hi: &[u64], f: &mut dyn FnMut(&[u64])) {
    if lo.iter().zip(hi).any(|(l, h)| l >= h) {
        return;
    }
    let mut cur = lo.to_vec();
    loop {
        f(&cur);
        let mut k = cur.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < hi[k] {
                break;
            }
            cur[k] = lo[k];
        }
    }
}

/// Reorders a row-major trace of a nest with trip counts `dims` into the
/// order a tiling with `sizes` executes it: floor tuples
/// lexicographically, then the points of each tile lexicographically.
/// Each iteration may contribute the same number of consecutive events.
pub fn tiled_order(reference: &[TraceEvent], dims: &[u64], sizes: &[u64]) -> Option<Vec<TraceEvent>> {
    if dims.len() != sizes.len() || sizes.contains(&0) {
        return None;
    }
    let total: u64 = dims.iter().product();
    if total == 0 {
        return reference.is_empty().then(Vec::new);
    }
    if !(reference.len() as u64).is_multiple_of(total) {
        return None;
    }
    let group = (reference.len() as u64 / total) as usize;
    let floors: Vec<u64> = dims.iter().zip(sizes).map(|(n, s)| n.div_ceil(*s)).collect();
    let zeros = alloc::vec![0; dims.len()];
    let mut out = Vec::with_capacity(reference.len());
    for_each_tuple(&zeros, &floors, &mut |f| {
        let lo: Vec<u64> = f.iter().zip(sizes).map(|(f, s)| f * s).collect();
        let hi: Vec<u64> = lo.iter().zip(sizes).zip(dims).map(|((l, s), n)| (l + s).min(*n)).collect();
        for_each_tuple(&lo, &hi, &mut |t| {
            let linear = t.iter().zip(dims).fold(0u64, |acc, (i, n)| acc * n + i) as usize;
            out.extend_from_slice(&reference[linear * group..(linear + 1) * group]);
        });
    });
    Some(out)
}

/// Thread that owns logical iteration `k` of `n` under a static schedule:
/// contiguous blocks of `ceil(n / threads)` without a chunk size,
/// round-robin chunks otherwise.
pub fn workshare_owner(k: u64, n: u64, threads: u32, chunk: Option<u64>) -> u32 {
    match chunk {
        None => (k / n.div_ceil(threads as u64)) as u32,
        Some(c) => ((k / c) % threads as u64) as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{IntType, Value};

    fn ev(v: i128) -> TraceEvent {
        TraceEvent { callee: "body".into(), args: alloc::vec![Value::from_i128(IntType::INT, v)], thread: None }
    }

    #[test]
    fn two_deep_tiles() {
        // 4x3 nest, 2x2 tiles; events numbered row-major.
        let r: Vec<TraceEvent> = (0..12).map(ev).collect();
        let t = tiled_order(&r, &[4, 3], &[2, 2]).unwrap();
        let got: Vec<i128> = t.iter().map(|e| e.args[0].as_i128()).collect();
        assert_eq!(got, [0, 1, 3, 4, 2, 5, 6, 7, 9, 10, 8, 11]);
    }

    #[test]
    fn unit_tiles_are_identity() {
        let r: Vec<TraceEvent> = (0..6).map(ev).collect();
        assert_eq!(tiled_order(&r, &[2, 3], &[1, 1]).unwrap(), r);
    }

    #[test]
    fn owners_follow_the_schedule() {
        let block: Vec<u32> = (0..10).map(|k| workshare_owner(k, 10, 4, None)).collect();
        assert_eq!(block, [0, 0, 0, 1, 1, 1, 2, 2, 2, 3]);
        let chunk: Vec<u32> = (0..8).map(|k| workshare_owner(k, 8, 2, Some(2))).collect();
        assert_eq!(chunk, [0, 0, 1, 1, 0, 0, 1, 1]);
    }
}
