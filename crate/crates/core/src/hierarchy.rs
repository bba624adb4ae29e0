//! The truncated multi-index space `{n : n_k ≥ 0, Σ n_k ≤ N_max}` and the
//! neighbor tables used by the hierarchy right-hand side.
//!
//! Indices are stored in graded lexicographic order (by level, then
//! lexicographically), so each level occupies a contiguous range of rows and
//! row 0 is the zero vector.

use std::ops::Range;

use crate::{HseomError, Result};

/// Refuse to enumerate spaces larger than this unless a larger limit is given.
pub const DEFAULT_MAX_AWFS: u128 = 5_000_000;

/// `n − e_mode` lives at row `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lowering {
    pub mode: u32,
    pub target: u32,
}

/// `n − e_from + e_to` lives at row `target`; only `to = from ± 1` is stored,
/// matching the tridiagonal derivative matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exchange {
    pub from: u32,
    pub to: u32,
    pub target: u32,
}

#[derive(Clone, Debug)]
pub struct HierarchySpace {
    modes: usize,
    max_level: usize,
    /// Row-major `len × modes` occupation numbers.
    indices: Vec<u8>,
    /// `level_start[L]..level_start[L + 1]` are the rows at level `L`.
    level_start: Vec<usize>,
    /// Dense `modes`-wide block for every row below the top level.
    raise: Vec<u32>,
    lower_start: Vec<u32>,
    lower: Vec<Lowering>,
    exchange_start: Vec<u32>,
    exchange: Vec<Exchange>,
}

/// `C(K + N_max, N_max)`, the number of stored wave functions.
pub fn awf_count(modes: usize, max_level: usize) -> Result<u128> {
    if modes == 0 {
        return Err(HseomError::invalid("modes", "K must be at least 1"));
    }
    // C(K+j, j) = C(K+j−1, j−1)·(K+j)/j stays integral at every step.
    let mut count: u128 = 1;
    for j in 1..=max_level as u128 {
        count = count.checked_mul(modes as u128 + j).ok_or(HseomError::Overflow("hierarchy size"))? / j;
    }
    Ok(count)
}

pub fn build_space(modes: usize, max_level: usize) -> Result<HierarchySpace> {
    build_space_with_limit(modes, max_level, DEFAULT_MAX_AWFS)
}

pub fn build_space_with_limit(modes: usize, max_level: usize, max_awfs: u128) -> Result<HierarchySpace> {
    let count = awf_count(modes, max_level)?;
    if count > max_awfs {
        return Err(HseomError::ResourceRefusal {
            what: "hierarchy wave functions",
            required: count,
            budget: max_awfs,
        });
    }
    if max_level > u8::MAX as usize {
        return Err(HseomError::invalid("max_level", "N_max above 255 is not supported"));
    }
    if count > u32::MAX as u128 || modes > u32::MAX as usize {
        return Err(HseomError::Overflow("hierarchy row index"));
    }
    let len = count as usize;

    let mut indices = Vec::with_capacity(len * modes);
    let mut level_start = Vec::with_capacity(max_level + 2);
    let mut scratch = vec![0u8; modes];
    for level in 0..=max_level {
        level_start.push(indices.len() / modes);
        compositions(level, 0, &mut scratch, &mut indices);
    }
    level_start.push(len);
    debug_assert_eq!(indices.len(), len * modes);

    let mut space = HierarchySpace {
        modes,
        max_level,
        indices,
        level_start,
        raise: Vec::new(),
        lower_start: Vec::with_capacity(len + 1),
        lower: Vec::new(),
        exchange_start: Vec::with_capacity(len + 1),
        exchange: Vec::new(),
    };

    let below_top = space.level_start[max_level];
    let mut raise = vec![u32::MAX; below_top * modes];
    let mut lower = Vec::new();
    let mut lower_start = vec![0u32];
    let mut probe = vec![0u8; modes];
    for row in 0..len {
        probe.copy_from_slice(space.index(row));
        for k in 0..modes {
            if probe[k] == 0 {
                continue;
            }
            probe[k] -= 1;
            let parent = space.position(&probe).expect("lowered index is in the space");
            probe[k] += 1;
            lower.push(Lowering { mode: k as u32, target: parent as u32 });
            raise[parent * modes + k] = row as u32;
        }
        lower_start.push(lower.len() as u32);
    }
    space.raise = raise;
    space.lower = lower;
    space.lower_start = lower_start;

    let mut exchange = Vec::new();
    let mut exchange_start = vec![0u32];
    for row in 0..len {
        for lw in space.lowers(row) {
            let from = lw.mode as usize;
            let parent = lw.target as usize;
            for to in [from.wrapping_sub(1), from + 1] {
                if to < modes {
                    let target = space.raise[parent * modes + to];
                    exchange.push(Exchange { from: from as u32, to: to as u32, target });
                }
            }
        }
        exchange_start.push(exchange.len() as u32);
    }
    space.exchange = exchange;
    space.exchange_start = exchange_start;
    Ok(space)
}

/// Append, in lexicographic order, every vector with `scratch[..pos]` fixed
/// and the remaining entries summing to `remaining`.
fn compositions(remaining: usize, pos: usize, scratch: &mut [u8], out: &mut Vec<u8>) {
    let k = scratch.len();
    if pos + 1 == k {
        scratch[pos] = remaining as u8;
        out.extend_from_slice(scratch);
        return;
    }
    for value in 0..=remaining {
        scratch[pos] = value as u8;
        compositions(remaining - value, pos + 1, scratch, out);
    }
    scratch[pos] = 0;
}

impl HierarchySpace {
    pub fn len(&self) -> usize {
        self.level_start[self.max_level + 1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn index(&self, row: usize) -> &[u8] {
        &self.indices[row * self.modes..(row + 1) * self.modes]
    }

    pub fn level(&self, row: usize) -> usize {
        self.level_start.partition_point(|&start| start <= row) - 1
    }

    pub fn level_range(&self, level: usize) -> Range<usize> {
        self.level_start[level]..self.level_start[level + 1]
    }

    pub fn position(&self, n: &[u8]) -> Option<usize> {
        if n.len() != self.modes {
            return None;
        }
        let level: usize = n.iter().map(|&v| v as usize).sum();
        if level > self.max_level {
            return None;
        }
        let range = self.level_range(level);
        let (mut lo, mut hi) = (range.start, range.end);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.index(mid).cmp(n) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Row of `n + e_k`, or `None` when that would exceed `N_max`.
    pub fn raise(&self, row: usize, k: usize) -> Option<usize> {
        self.raise_row(row).map(|r| r[k] as usize)
    }

    /// Rows of `n + e_k` for all `k`; `None` on the top level.
    pub fn raise_row(&self, row: usize) -> Option<&[u32]> {
        (row < self.level_start[self.max_level]).then(|| &self.raise[row * self.modes..(row + 1) * self.modes])
    }

    /// Row of `n − e_k`, or `None` when `n_k = 0`.
    pub fn lower(&self, row: usize, k: usize) -> Option<usize> {
        self.lowers(row).iter().find(|l| l.mode as usize == k).map(|l| l.target as usize)
    }

    /// All nonzero lowerings of `row`, by ascending mode.
    pub fn lowers(&self, row: usize) -> &[Lowering] {
        &self.lower[self.lower_start[row] as usize..self.lower_start[row + 1] as usize]
    }

    /// All moves `n − e_k + e_{k±1}` of `row`, by ascending source mode.
    pub fn exchanges(&self, row: usize) -> &[Exchange] {
        &self.exchange[self.exchange_start[row] as usize..self.exchange_start[row + 1] as usize]
    }

    /// Approximate heap footprint of the tables, in bytes.
    pub fn table_bytes(&self) -> usize {
        self.indices.len()
            + 4 * (self.raise.len() + self.lower_start.len() + self.exchange_start.len())
            + std::mem::size_of::<Lowering>() * self.lower.len()
            + std::mem::size_of::<Exchange>() * self.exchange.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_counts() {
        for &(k, n, expected) in &[(80, 3, 91881), (20, 3, 1771), (5, 3, 56), (5, 5, 252)] {
            assert_eq!(awf_count(k, n).unwrap(), expected);
            assert_eq!(build_space(k, n).unwrap().len() as u128, expected);
        }
    }

    #[test]
    fn trivial_counts() {
        assert_eq!(awf_count(1, 0).unwrap(), 1);
        for k in 1..30 {
            assert_eq!(awf_count(k, 1).unwrap(), k as u128 + 1);
        }
        assert!(awf_count(0, 3).is_err());
        assert!(matches!(awf_count(usize::MAX, 4), Err(HseomError::Overflow(_))));
    }

    #[test]
    fn refusal_carries_count() {
        let err = build_space_with_limit(80, 3, 1000).unwrap_err();
        assert!(matches!(err, HseomError::ResourceRefusal { required: 91881, budget: 1000, .. }));
    }

    #[test]
    fn exhaustive_small_cases() {
        for k in 1..=12 {
            for n in 0..=6 {
                let space = build_space(k, n).unwrap();
                assert_eq!(space.len() as u128, awf_count(k, n).unwrap(), "K={k} N={n}");
                assert!(space.index(0).iter().all(|&v| v == 0));
            }
        }
    }

    #[test]
    fn order_is_graded_lexicographic() {
        let space = build_space(3, 2).unwrap();
        let rows: Vec<Vec<u8>> = (0..space.len()).map(|i| space.index(i).to_vec()).collect();
        let expected: Vec<Vec<u8>> = vec![
            vec![0, 0, 0],
            vec![0, 0, 1],
            vec![0, 1, 0],
            vec![1, 0, 0],
            vec![0, 0, 2],
            vec![0, 1, 1],
            vec![0, 2, 0],
            vec![1, 0, 1],
            vec![1, 1, 0],
            vec![2, 0, 0],
        ];
        assert_eq!(rows, expected);
    }

    #[test]
    fn single_mode() {
        let space = build_space(1, 4).unwrap();
        assert_eq!(space.len(), 5);
        for i in 0..4 {
            assert_eq!(space.raise(i, 0), Some(i + 1));
            assert!(space.exchanges(i).is_empty());
        }
        assert_eq!(space.raise(4, 0), None);
    }

    fn check_space(space: &HierarchySpace) {
        let k = space.modes();
        let mut previous_level = 0;
        for row in 0..space.len() {
            let n = space.index(row);
            let level: usize = n.iter().map(|&v| v as usize).sum();
            assert_eq!(space.level(row), level);
            assert!(level >= previous_level);
            previous_level = level;
            assert_eq!(space.position(n), Some(row));
            for mode in 0..k {
                match space.raise(row, mode) {
                    Some(up) => {
                        assert!(level < space.max_level());
                        assert_eq!(space.lower(up, mode), Some(row));
                        let mut m = n.to_vec();
                        m[mode] += 1;
                        assert_eq!(space.index(up), &m[..]);
                    }
                    None => assert_eq!(level, space.max_level()),
                }
                assert_eq!(space.lower(row, mode).is_none(), n[mode] == 0);
            }
            for ex in space.exchanges(row) {
                let (from, to) = (ex.from as usize, ex.to as usize);
                assert!(from.abs_diff(to) == 1 && n[from] > 0);
                let mut m = n.to_vec();
                m[from] -= 1;
                m[to] += 1;
                assert_eq!(space.index(ex.target as usize), &m[..]);
            }
            let expected_exchanges: usize =
                (0..k).filter(|&f| n[f] > 0).map(|f| usize::from(f > 0) + usize::from(f + 1 < k)).sum();
            assert_eq!(space.exchanges(row).len(), expected_exchanges);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn neighbor_tables_are_consistent(k in 1usize..9, n in 0usize..5) {
            check_space(&build_space(k, n).unwrap());
        }
    }

    #[test]
    fn position_rejects_outside_points() {
        let space = build_space(4, 2).unwrap();
        assert_eq!(space.position(&[1, 1, 1, 0]), None);
        assert_eq!(space.position(&[0, 0]), None);
    }
}
