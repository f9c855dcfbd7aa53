//! Fock basis of N bosons on L sites.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Default cap on the number of Fock states.
pub const DEFAULT_BASIS_CAP: usize = 50_000;

#[derive(Debug, Clone)]
pub struct FockBasis {
    pub n: usize,
    pub l: usize,
    /// Occupations (n_1..n_L), ascending lexicographic order.
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

pub fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n.checked_sub(k)?);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

pub fn build_fock_basis(n: usize, l: usize) -> Result<FockBasis> {
    build_fock_basis_capped(n, l, DEFAULT_BASIS_CAP)
}

pub fn build_fock_basis_capped(n: usize, l: usize, cap: usize) -> Result<FockBasis> {
    if n < 1 || l < 2 {
        return Err(Error::invalid(format!("need N >= 1 and L >= 2, got N={n}, L={l}")));
    }
    if n > u8::MAX as usize {
        return Err(Error::invalid("at most 255 particles"));
    }
    let count = binomial(n + l - 1, n).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::ResourceCap { what: "Fock dimension".into(), size: count, cap });
    }
    let mut states = Vec::with_capacity(count);
    let mut cur = vec![0u8; l];
    fill(&mut cur, 0, n, &mut states);
    debug_assert_eq!(states.len(), count);
    let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    Ok(FockBasis { n, l, states, index })
}

fn fill(cur: &mut Vec<u8>, site: usize, left: usize, out: &mut Vec<Vec<u8>>) {
    if site + 1 == cur.len() {
        cur[site] = left as u8;
        out.push(cur.clone());
        return;
    }
    for x in 0..=left {
        cur[site] = x as u8;
        fill(cur, site + 1, left - x, out);
    }
}

impl FockBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Site translation T(n_1..n_L) = (n_L, n_1, .., n_{L-1}).
    pub fn translate(occ: &[u8]) -> Vec<u8> {
        let l = occ.len();
        let mut out = Vec::with_capacity(l);
        out.push(occ[l - 1]);
        out.extend_from_slice(&occ[..l - 1]);
        out
    }

    /// (U/2) sum_l n_l (n_l - 1) without the factor U.
    pub fn pair_count(occ: &[u8]) -> f64 {
        occ.iter().map(|&x| 0.5 * x as f64 * (x as f64 - 1.0)).sum()
    }

    /// sum_l l n_l with sites numbered from 1.
    pub fn position_sum(occ: &[u8]) -> usize {
        occ.iter().enumerate().map(|(i, &x)| (i + 1) * x as usize).sum()
    }

    /// Nonzero amplitudes of a^dagger_to a_from applied to a basis state.
    pub fn hop(&self, state: usize, from: usize, to: usize) -> Option<(usize, f64)> {
        let s = &self.states[state];
        if s[from] == 0 {
            return None;
        }
        let mut t = s.clone();
        let amp = if from == to {
            s[from] as f64
        } else {
            let a = (s[from] as f64 * (s[to] as f64 + 1.0)).sqrt();
            t[from] -= 1;
            t[to] += 1;
            a
        };
        Some((self.index_of(&t).expect("hop stays in the basis"), amp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let b = build_fock_basis(1, 2).unwrap();
        assert_eq!(b.states, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(build_fock_basis(6, 6).unwrap().len(), 462);
        assert_eq!(build_fock_basis(6, 7).unwrap().len(), 924);
        assert_eq!(binomial(11, 5), Some(462));
    }

    #[test]
    fn index_is_bijection() {
        let b = build_fock_basis(4, 4).unwrap();
        for (i, s) in b.states.iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
            assert_eq!(s.iter().map(|&x| x as usize).sum::<usize>(), 4);
        }
        let mut sorted = b.states.clone();
        sorted.sort();
        assert_eq!(sorted, b.states);
    }

    #[test]
    fn cap_is_enforced() {
        let e = build_fock_basis_capped(6, 6, 100).unwrap_err();
        assert!(matches!(e, Error::ResourceCap { size: 462, .. }));
    }

    #[test]
    fn translation() {
        assert_eq!(FockBasis::translate(&[1, 2, 3]), vec![3, 1, 2]);
    }
}
