//! Lexicographic permutation indexing.
//!
//! Reports are enumerated as permutations of `0..m` in lexicographic order,
//! so "lexicographically smallest report" and "smallest index" coincide.

use crate::error::{PsError, Result};

pub fn factorial(m: usize) -> Option<u64> {
    (1..=m as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// The `index`-th permutation of `0..m` in lexicographic order.
pub fn unrank(mut index: u64, m: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(m);
    for k in (0..m).rev() {
        let f = factorial(k).expect("factorial overflow");
        let pick = (index / f) as usize;
        index %= f;
        out.push(pool.remove(pick));
    }
    out
}

/// Inverse of [`unrank`].
pub fn rank(perm: &[usize]) -> u64 {
    let m = perm.len();
    let mut r = 0u64;
    for (i, &x) in perm.iter().enumerate() {
        let smaller_after = perm[i + 1..].iter().filter(|&&y| y < x).count() as u64;
        r += smaller_after * factorial(m - 1 - i).expect("factorial overflow");
    }
    r
}

/// All permutations of `0..m`, lexicographic order.
pub fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..m).collect();
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    out
}

pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Number of reported profiles `(m!)^n`, or an error if it overflows.
pub fn profile_count(n: usize, m: usize) -> Result<u64> {
    factorial(m)
        .and_then(|f| f.checked_pow(n as u32))
        .ok_or_else(|| PsError::BoundExceeded {
            what: "profile space",
            needed: format!("({m}!)^{n}"),
            bound: u64::MAX.to_string(),
        })
}

/// Splits a profile id into per-agent report indices (agent 0 most significant).
pub fn decode_profile(mut id: u64, n: usize, reports: u64) -> Vec<u64> {
    let mut digits = vec![0; n];
    for slot in digits.iter_mut().rev() {
        *slot = id % reports;
        id /= reports;
    }
    digits
}

pub fn encode_profile(digits: &[u64], reports: u64) -> u64 {
    digits.iter().fold(0, |acc, &d| acc * reports + d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_enumeration() {
        let perms = all_permutations(3);
        assert_eq!(
            perms,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        for (i, p) in perms.iter().enumerate() {
            assert_eq!(unrank(i as u64, 3), *p);
            assert_eq!(rank(p), i as u64);
        }
        assert_eq!(all_permutations(0), vec![Vec::<usize>::new()]);
        assert_eq!(all_permutations(5).len(), 120);
    }

    #[test]
    fn profile_digits() {
        assert_eq!(decode_profile(7, 3, 2), vec![1, 1, 1]);
        assert_eq!(encode_profile(&[1, 0, 1], 2), 5);
        assert_eq!(profile_count(4, 4).unwrap(), 331_776);
        assert!(profile_count(10, 20).is_err());
    }
}
