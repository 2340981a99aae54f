//! Lehmer-code ranking of permutations of `1..=n`.

/// `n!` for the small `n` used here.
pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Rank of `perm` (a permutation of `1..=n`) in lexicographic order.
pub fn rank(perm: &[u32]) -> usize {
    let n = perm.len();
    let mut r = 0usize;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&q| q < perm[i]).count();
        r = r * (n - i) + smaller;
    }
    r
}

/// Inverse of [`rank`].
pub fn unrank(mut r: usize, n: usize) -> Vec<u32> {
    let mut digits = vec![0usize; n];
    for i in (0..n).rev() {
        let base = n - i;
        digits[i] = r % base;
        r /= base;
    }
    let mut pool: Vec<u32> = (1..=n as u32).collect();
    digits.into_iter().map(|d| pool.remove(d)).collect()
}
