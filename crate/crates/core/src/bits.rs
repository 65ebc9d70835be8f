//! Fixed-width bit rows used for adjacency and interval domination counts.

/// Words needed for `n` bits.
#[inline]
pub fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub fn get(row: &[u64], i: usize) -> bool {
    row[i >> 6] >> (i & 63) & 1 == 1
}

#[inline]
pub fn set(row: &mut [u64], i: usize) {
    row[i >> 6] |= 1u64 << (i & 63);
}

#[inline]
pub fn clear(row: &mut [u64], i: usize) {
    row[i >> 6] &= !(1u64 << (i & 63));
}

/// Popcount of `a & b`.
#[inline]
pub fn count_and(a: &[u64], b: &[u64]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

#[inline]
pub fn count(a: &[u64]) -> usize {
    a.iter().map(|x| x.count_ones() as usize).sum()
}
