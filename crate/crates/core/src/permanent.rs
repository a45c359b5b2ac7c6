//! Matrix permanents (Ryser's formula, Gray-code ordered).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Permanent of a square complex matrix. The empty matrix has permanent 1.
pub fn permanent(m: &DMatrix<C64>) -> C64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent needs a square matrix");
    match n {
        0 => return C64::new(1.0, 0.0),
        1 => return m[(0, 0)],
        2 => return m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)],
        _ => {}
    }
    assert!(n < usize::BITS as usize, "matrix too large for Ryser's formula");

    // row_sums[i] = Σ_{j ∈ S} m[i, j] for the current column subset S.
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray = 0usize;
    for step in 1..(1usize << n) {
        let bit = step.trailing_zeros() as usize;
        gray ^= 1 << bit;
        let adding = gray & (1 << bit) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += m[(i, bit)];
            } else {
                *s -= m[(i, bit)];
            }
        }
        let prod: C64 = row_sums.iter().product();
        if gray.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sum over all permutations, by Heap's algorithm.
    fn permanent_brute(m: &DMatrix<C64>) -> C64 {
        let n = m.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut c = vec![0usize; n];
        let term = |p: &[usize]| (0..n).map(|i| m[(i, p[i])]).product::<C64>();
        let mut total = term(&perm);
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                total += term(&perm);
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        total
    }

    fn pseudo_random(n: usize, seed: u64) -> DMatrix<C64> {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn all_ones() {
        // per(J_n) = n!
        for n in 1..=6 {
            let m = DMatrix::from_element(n, n, C64::new(1.0, 0.0));
            let f: f64 = (1..=n).map(|k| k as f64).product();
            assert!((permanent(&m).re - f).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_permutation_sum() {
        for n in 0..=7 {
            let m = pseudo_random(n, 17 + n as u64);
            let diff = (permanent(&m) - permanent_brute(&m)).norm();
            assert!(diff < 1e-12, "n = {n}: {diff}");
        }
    }
}
