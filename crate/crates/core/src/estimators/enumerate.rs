use crate::error::{Error, Result};
use crate::projections::SupportSet;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic stream of all `K`-subsets of `{0, …, M−1}`.
#[derive(Debug, Clone)]
pub struct SupportEnumerator {
    m: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for SupportEnumerator {
    type Item = SupportSet;

    fn next(&mut self) -> Option<SupportSet> {
        let cur = self.current.as_mut()?;
        let out = SupportSet::from_sorted_unchecked(cur.clone());
        let k = cur.len();
        // Advance: rightmost position that can still move.
        match (0..k).rev().find(|&i| cur[i] < self.m - k + i) {
            Some(i) => {
                cur[i] += 1;
                for j in (i + 1)..k {
                    cur[j] = cur[j - 1] + 1;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

pub fn enumerate_supports(m: usize, k: usize) -> Result<SupportEnumerator> {
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!("need 1 <= K <= M (K={k}, M={m})")));
    }
    Ok(SupportEnumerator { m, current: Some((0..k).collect()) })
}
