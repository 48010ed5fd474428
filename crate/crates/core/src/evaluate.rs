//! Clustering error rate: the share of row pairs on which two partitions
//! disagree about co-membership.

use alloc::collections::BTreeMap;

use crate::error::{Error, Result};

fn check<T>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::TooShort);
    }
    Ok(())
}

fn pairs(count: u64) -> u64 {
    count * count.saturating_sub(1) / 2
}

/// Contingency-table CER, `O(n log n)`.
pub fn cer<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    check(a, b)?;
    let mut ca: BTreeMap<&T, u64> = BTreeMap::new();
    let mut cb: BTreeMap<&T, u64> = BTreeMap::new();
    let mut cab: BTreeMap<(&T, &T), u64> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
        *cab.entry((x, y)).or_default() += 1;
    }
    let same_a: u64 = ca.values().map(|&c| pairs(c)).sum();
    let same_b: u64 = cb.values().map(|&c| pairs(c)).sum();
    let same_both: u64 = cab.values().map(|&c| pairs(c)).sum();
    let disagree = same_a + same_b - 2 * same_both;
    Ok(disagree as f64 / pairs(a.len() as u64) as f64)
}

/// CER by direct enumeration of all pairs, `O(n²)`.
pub fn cer_pairwise<T: Eq>(a: &[T], b: &[T]) -> Result<f64> {
    check(a, b)?;
    let n = a.len();
    let mut disagree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) != (b[i] == b[j]) {
                disagree += 1;
            }
        }
    }
    Ok(disagree as f64 / pairs(n as u64) as f64)
}
