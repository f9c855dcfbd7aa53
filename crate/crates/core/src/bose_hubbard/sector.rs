//! Quasimomentum sectors of the translation-invariant ring.
//!
//! The sector state built on representative r with orbit length l is
//! |r,k> = l^{-1/2} sum_{j<l} e^{-i kappa j} T^j |r>, kappa = 2 pi k / L,
//! which satisfies T|r,k> = e^{i kappa}|r,k>.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;

use super::basis::FockBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorState {
    /// Fock index of the orbit representative (first member in basis order).
    pub rep: usize,
    /// Orbit length under T.
    pub cycle: usize,
}

#[derive(Debug, Clone)]
pub struct SymmetrySector {
    pub k: usize,
    pub l: usize,
    pub states: Vec<SectorState>,
    /// For each Fock state: (representative, j) with state = T^j rep.
    orbit: Vec<(usize, usize)>,
    /// Sector position of each representative, if it belongs to this sector.
    position: Vec<Option<usize>>,
}

pub fn build_kappa_sector(basis: &FockBasis, k: usize) -> Result<SymmetrySector> {
    let l = basis.l;
    if k >= l {
        return Err(Error::invalid(format!("sector index k={k} must be < L={l}")));
    }
    let dim = basis.len();
    let mut orbit = vec![(usize::MAX, 0usize); dim];
    let mut states = Vec::new();
    let mut position = vec![None; dim];
    for i in 0..dim {
        if orbit[i].0 != usize::MAX {
            continue;
        }
        let mut members = vec![i];
        let mut cur = FockBasis::translate(&basis.states[i]);
        loop {
            let j = basis.index_of(&cur).expect("translation stays in the basis");
            if j == i {
                break;
            }
            members.push(j);
            cur = FockBasis::translate(&cur);
        }
        for (j, &m) in members.iter().enumerate() {
            orbit[m] = (i, j);
        }
        let cycle = members.len();
        if (k * cycle) % l == 0 {
            position[i] = Some(states.len());
            states.push(SectorState { rep: i, cycle });
        }
    }
    Ok(SymmetrySector { k, l, states, orbit, position })
}

impl SymmetrySector {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn kappa(&self) -> f64 {
        2.0 * PI * self.k as f64 / self.l as f64
    }

    /// (sector index, j) with fock = T^j rep, if the orbit lies in the sector.
    pub fn locate(&self, fock: usize) -> Option<(usize, usize)> {
        let (rep, j) = self.orbit[fock];
        self.position[rep].map(|p| (p, j))
    }

    /// Columns are the sector states written in the full Fock basis.
    pub fn embedding(&self, basis: &FockBasis) -> Mat<C64> {
        let kappa = self.kappa();
        let mut m = Mat::zeros(basis.len(), self.dim());
        for (c, st) in self.states.iter().enumerate() {
            let norm = (st.cycle as f64).sqrt();
            let mut cur = basis.states[st.rep].clone();
            for j in 0..st.cycle {
                let idx = basis.index_of(&cur).expect("orbit member");
                m[(idx, c)] = C64::from_polar(1.0 / norm, -kappa * j as f64);
                cur = FockBasis::translate(&cur);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bose_hubbard::basis::build_fock_basis;

    #[test]
    fn single_particle_sectors() {
        let b = build_fock_basis(1, 2).unwrap();
        assert_eq!(build_kappa_sector(&b, 0).unwrap().dim(), 1);
        let b = build_fock_basis(1, 5).unwrap();
        for k in 0..5 {
            assert_eq!(build_kappa_sector(&b, k).unwrap().dim(), 1);
        }
    }

    #[test]
    fn sector_dims_sum_to_fock_dim() {
        for (n, l, total) in [(6, 6, 462), (5, 5, 126), (3, 3, 10), (6, 7, 924)] {
            let b = build_fock_basis(n, l).unwrap();
            let dims: Vec<usize> = (0..l).map(|k| build_kappa_sector(&b, k).unwrap().dim()).collect();
            assert_eq!(dims.iter().sum::<usize>(), total, "N={n} L={l}");
        }
        let b = build_fock_basis(5, 5).unwrap();
        assert_eq!(build_kappa_sector(&b, 0).unwrap().dim(), 26);
        let b = build_fock_basis(6, 7).unwrap();
        assert_eq!(build_kappa_sector(&b, 0).unwrap().dim(), 132);
    }

    #[test]
    fn embedded_states_are_orthonormal() {
        let b = build_fock_basis(4, 4).unwrap();
        let mut all = Vec::new();
        for k in 0..4 {
            let e = build_kappa_sector(&b, k).unwrap().embedding(&b);
            for c in 0..e.ncols() {
                all.push((0..e.nrows()).map(|i| e[(i, c)]).collect::<Vec<_>>());
            }
        }
        assert_eq!(all.len(), b.len());
        for (i, u) in all.iter().enumerate() {
            for (j, v) in all.iter().enumerate() {
                let dot: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((dot - C64::new(t, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_k() {
        let b = build_fock_basis(2, 3).unwrap();
        assert!(build_kappa_sector(&b, 3).is_err());
    }
}
