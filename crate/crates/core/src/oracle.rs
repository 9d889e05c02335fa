//! Brute-force ground truth on the symmetric group itself.
//!
//! Nothing here goes through the triangular recursion or the spectral
//! formulas: permutations are enumerated explicitly. These routines are
//! exponential and meant for tiny `m` only.

use std::collections::HashMap;

use rug::{Integer, Rational};

use crate::error::{invalid, Result};

/// Number of pairs `i < j` with `perm[i] > perm[j]`, counted directly.
pub fn inversion_count(perm: &[usize]) -> u64 {
    let mut count = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                count += 1;
            }
        }
    }
    count
}

/// Average inversion number of `s_{i_1} ... s_{i_n}` over all `m^n`
/// generator sequences, enumerated one by one.
pub fn enumerate_expected_inversions(m: usize, n: usize) -> Result<Rational> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    let sequences = (m as f64).powi(n as i32);
    if sequences > 5e7 {
        return invalid(format!("m^n = {sequences:e} sequences is too many to enumerate"));
    }
    let mut perm: Vec<usize> = (0..=m).collect();
    let mut total = Integer::new();
    enumerate_rec(&mut perm, m, n, &mut total);
    Ok(Rational::from((total, Integer::from(Integer::u_pow_u(m as u32, n as u32)))))
}

fn enumerate_rec(perm: &mut Vec<usize>, m: usize, remaining: usize, total: &mut Integer) {
    if remaining == 0 {
        *total += inversion_count(perm);
        return;
    }
    for i in 0..m {
        perm.swap(i, i + 1);
        enumerate_rec(perm, m, remaining - 1, total);
        perm.swap(i, i + 1);
    }
}

/// All permutations of `0..len` in lexicographic order.
pub fn permutations(len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..len).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..len.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..len).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// States (permutations) and the matching dense transition matrix.
pub type TransitionMatrix = (Vec<Vec<usize>>, Vec<Vec<Rational>>);

/// Transition matrix of the walk on `S_{m+1}`: from `pi` move to `pi * s_i`
/// (swap of positions `i`, `i+1`) with probability `1/m` each.
///
/// Row `a`, column `b` holds `P(a -> b)`; states are the permutations in
/// lexicographic order, returned alongside the matrix.
pub fn transition_matrix(m: usize) -> Result<TransitionMatrix> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    if m > 5 {
        return invalid(format!("(m+1)! states for m = {m} is too large for a dense matrix"));
    }
    let states = permutations(m + 1);
    let index: HashMap<&[usize], usize> =
        states.iter().enumerate().map(|(k, p)| (p.as_slice(), k)).collect();
    let size = states.len();
    let step = Rational::from((1, m as u32));
    let mut matrix = vec![vec![Rational::new(); size]; size];
    for (a, perm) in states.iter().enumerate() {
        for i in 0..m {
            let mut next = perm.clone();
            next.swap(i, i + 1);
            let b = index[next.as_slice()];
            matrix[a][b] += &step;
        }
    }
    Ok((states, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_inversions() {
        assert_eq!(inversion_count(&[0, 1, 2, 3]), 0);
        assert_eq!(inversion_count(&[3, 2, 1, 0]), 6);
        assert_eq!(inversion_count(&[2, 1, 0, 3]), 3);
    }

    #[test]
    fn enumerates_small_cases() {
        assert_eq!(enumerate_expected_inversions(2, 0).unwrap(), 0);
        assert_eq!(enumerate_expected_inversions(2, 1).unwrap(), 1);
        assert_eq!(enumerate_expected_inversions(2, 2).unwrap(), 1);
        assert_eq!(enumerate_expected_inversions(2, 3).unwrap(), Rational::from((3, 2)));
        assert_eq!(enumerate_expected_inversions(1, 7).unwrap(), 1);
    }

    #[test]
    fn permutation_listing() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        assert_eq!(p[0], vec![0, 1, 2, 3]);
        assert_eq!(p[23], vec![3, 2, 1, 0]);
    }

    #[test]
    fn transition_rows_are_stochastic() {
        let (_, p) = transition_matrix(3).unwrap();
        for row in &p {
            let s: Rational = row.iter().sum();
            assert_eq!(s, 1);
        }
    }
}
