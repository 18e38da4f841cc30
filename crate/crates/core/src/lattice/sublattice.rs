//! Sublattices of a given index via Hermite normal forms.
//!
//! Every sublattice of index `k` in `B·Z^d` is `B·H·Z^d` for exactly one
//! upper-triangular integer `H` with positive diagonal of product `k` and
//! `0 <= H[i][j] < H[i][i]` for `j > i`.

use super::Lattice;
use crate::error::{Error, Result};
use crate::exact::rational::int;
use crate::linalg::RatMatrix;

const SUBLATTICE_LIMIT: usize = 1_000_000;

fn ordered_factorizations(k: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for a in 1..=k {
        if k % a == 0 {
            for mut rest in ordered_factorizations(k / a, parts - 1) {
                rest.insert(0, a);
                out.push(rest);
            }
        }
    }
    out
}

/// All HNF matrices of determinant `k`, sorted lexicographically by their
/// row-major entries.
pub fn hnf_matrices(d: usize, k: u64) -> Result<Vec<Vec<Vec<i64>>>> {
    if k == 0 {
        return Err(Error::InvalidInput("index must be at least 1".into()));
    }
    let mut out = Vec::new();
    for diag in ordered_factorizations(k, d) {
        let slots: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        let count: u64 = slots.iter().map(|&(i, _)| diag[i]).product();
        if out.len() as u64 + count > SUBLATTICE_LIMIT as u64 {
            return Err(Error::EnumerationOverflow { limit: SUBLATTICE_LIMIT });
        }
        let mut h = vec![vec![0i64; d]; d];
        for i in 0..d {
            h[i][i] = diag[i] as i64;
        }
        let mut idx = vec![0u64; slots.len()];
        loop {
            for (s, &(i, j)) in slots.iter().enumerate() {
                h[i][j] = idx[s] as i64;
            }
            out.push(h.clone());
            // odometer
            let mut s = slots.len();
            loop {
                if s == 0 {
                    break;
                }
                s -= 1;
                idx[s] += 1;
                if idx[s] < diag[slots[s].0] {
                    break;
                }
                idx[s] = 0;
                if s == 0 {
                    s = usize::MAX;
                    break;
                }
            }
            if s == usize::MAX || slots.is_empty() {
                break;
            }
        }
    }
    out.sort_by(|a, b| a.iter().flatten().cmp(b.iter().flatten()));
    Ok(out)
}

fn int_matrix(h: &[Vec<i64>]) -> RatMatrix {
    RatMatrix::from_rows(h.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()).expect("square")
}

/// All sublattices of index `k`, in the order of their HNF matrices.
pub fn sublattices_of_index(l: &Lattice, k: u64) -> Result<Vec<Lattice>> {
    hnf_matrices(l.dim(), k)?
        .iter()
        .map(|h| Lattice::new(l.basis().mul(&int_matrix(h))))
        .collect()
}

/// `L ⊋ Γ₁ ⊋ Γ₂ ⊋ …` with `[Γ_{j-1} : Γ_j] = degrees[j]`, taking the first
/// HNF at each step. The returned list starts with `L` itself.
pub fn nested_chain(l: &Lattice, degrees: &[u64]) -> Result<Vec<Lattice>> {
    if degrees.is_empty() {
        return Err(Error::InvalidInput("degrees must be nonempty".into()));
    }
    if let Some(&bad) = degrees.iter().find(|&&k| k < 2) {
        return Err(Error::InvalidInput(format!("chain degree {bad} must be at least 2")));
    }
    let d = l.dim();
    let mut chain = vec![l.clone()];
    for &k in degrees {
        // The lexicographically first HNF of determinant k is diag(1, ..., 1, k).
        let mut h = vec![vec![0i64; d]; d];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = 1;
        }
        h[d - 1][d - 1] = k as i64;
        let next = Lattice::new(chain.last().unwrap().basis().mul(&int_matrix(&h)))?;
        chain.push(next);
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::Rational;

    fn sigma(k: u64) -> u64 {
        (1..=k).filter(|d| k % d == 0).sum()
    }

    #[test]
    fn counts_match_divisor_sums() {
        for k in 1..=12 {
            assert_eq!(sublattices_of_index(&Lattice::integer(2), k).unwrap().len() as u64, sigma(k), "k={k}");
        }
        assert_eq!(sublattices_of_index(&Lattice::integer(2), 1).unwrap(), vec![Lattice::integer(2)]);
    }

    #[test]
    fn chain_covolumes_and_first_choice() {
        let chain = nested_chain(&Lattice::integer(2), &[2, 3, 2]).unwrap();
        let covs: Vec<Rational> = chain.iter().map(|l| l.covolume()).collect();
        assert_eq!(covs, vec![int(1), int(2), int(6), int(12)]);
        for w in chain.windows(2) {
            assert!((0..2).all(|j| w[0].contains(&w[1].basis().column(j))));
        }
        let first = &sublattices_of_index(&chain[1], 3).unwrap()[0];
        assert_eq!(first, &chain[2]);
        let c1 = nested_chain(&Lattice::integer(1), &[3]).unwrap();
        assert_eq!(c1[1], Lattice::diagonal(&[int(3)]).unwrap());
        assert!(nested_chain(&Lattice::integer(2), &[1]).is_err());
        assert!(nested_chain(&Lattice::integer(2), &[]).is_err());
    }
}
