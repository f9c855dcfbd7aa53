//! Tilted Bose-Hubbard ring in the accelerated gauge and its propagators.
//!
//! H(t) = -(J/2) sum_l (e^{iFt} a+_{l+1} a_l + h.c.) + (U/2) sum_l n_l(n_l - 1)
//!
//! Written as H = U P - (J/2)(z K + conj(z) K^dagger) with z = e^{iFt},
//! P = sum n(n-1)/2 diagonal and K = sum a+_{l+1} a_l. K is normal (it is
//! diagonal in momentum space), so commutators of H at two times reduce to
//! multiples of [P, K], which is precomputed.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::basis::FockBasis;
use super::sector::SymmetrySector;
use crate::error::{Error, Result};
use crate::matrix::{HermitianMatrix, UnitaryMatrix};
use crate::spectral::{self, align_shift, wrap_phase};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BhParams {
    pub j: f64,
    pub u: f64,
    pub f: f64,
}

impl BhParams {
    pub fn new(j: f64, u: f64, f: f64) -> Result<Self> {
        if !(j.is_finite() && j >= 0.0 && u.is_finite() && u >= 0.0) {
            return Err(Error::invalid(format!("need finite J, U >= 0, got J={j}, U={u}")));
        }
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::invalid(format!("need finite F > 0, got {f}")));
        }
        Ok(BhParams { j, u, f })
    }

    /// T_B = 2 pi / F.
    pub fn bloch_period(&self) -> f64 {
        2.0 * PI / self.f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// exp(-i H(t_m + dt/2) dt) per step; second order.
    Midpoint,
    /// Two-point Gauss-Legendre Magnus expansion; fourth order.
    Magnus4,
}

/// J- and U-independent pieces of H(t) in some basis.
#[derive(Debug, Clone)]
pub struct BhOperators {
    /// sum_l n_l(n_l-1)/2 per basis state.
    pub pairs: Vec<f64>,
    /// sum_l a+_{l+1} a_l with the ring closure L -> 1.
    pub hop: Mat<C64>,
    /// [P, K] (elementwise (p_i - p_j) K_ij).
    pub comm: Mat<C64>,
    /// sum_l l n_l per basis state (orbit representative in a sector).
    pub position: Vec<usize>,
    pub sites: usize,
}

impl BhOperators {
    fn finish(pairs: Vec<f64>, hop: Mat<C64>, position: Vec<usize>, sites: usize) -> Self {
        let d = pairs.len();
        let comm = Mat::from_fn(d, d, |i, j| hop[(i, j)] * (pairs[i] - pairs[j]));
        BhOperators { pairs, hop, comm, position, sites }
    }

    /// Operators in the full Fock basis.
    pub fn full(basis: &FockBasis) -> Self {
        let d = basis.len();
        let l = basis.l;
        let mut hop = Mat::zeros(d, d);
        for s in 0..d {
            for from in 0..l {
                if let Some((t, amp)) = basis.hop(s, from, (from + 1) % l) {
                    hop[(t, s)] += C64::new(amp, 0.0);
                }
            }
        }
        let pairs = basis.states.iter().map(|s| FockBasis::pair_count(s)).collect();
        let position = basis.states.iter().map(|s| FockBasis::position_sum(s)).collect();
        Self::finish(pairs, hop, position, l)
    }

    /// Operators restricted to one quasimomentum sector.
    pub fn sector(basis: &FockBasis, sector: &SymmetrySector) -> Self {
        let d = sector.dim();
        let l = basis.l;
        let kappa = sector.kappa();
        let mut hop = Mat::zeros(d, d);
        for (c, st) in sector.states.iter().enumerate() {
            for from in 0..l {
                let Some((t, amp)) = basis.hop(st.rep, from, (from + 1) % l) else {
                    continue;
                };
                if let Some((r, shift)) = sector.locate(t) {
                    let ratio = (st.cycle as f64 / sector.states[r].cycle as f64).sqrt();
                    hop[(r, c)] += C64::from_polar(amp * ratio, kappa * shift as f64);
                }
            }
        }
        let pairs = sector
            .states
            .iter()
            .map(|st| FockBasis::pair_count(&basis.states[st.rep]))
            .collect();
        let position = sector
            .states
            .iter()
            .map(|st| FockBasis::position_sum(&basis.states[st.rep]))
            .collect();
        Self::finish(pairs, hop, position, l)
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// H(t) for the given parameters.
    pub fn hamiltonian(&self, p: &BhParams, t: f64) -> Mat<C64> {
        let z = C64::from_polar(1.0, p.f * t);
        let d = self.dim();
        let hj = -0.5 * p.j;
        Mat::from_fn(d, d, |i, j| {
            let mut v = (z * self.hop[(i, j)] + (z * self.hop[(j, i)]).conj()) * hj;
            if i == j {
                v += C64::new(p.u * self.pairs[i], 0.0);
            }
            v
        })
    }

    /// Hermitian exponent of one step: exp(-i Omega) advances t -> t + dt.
    fn step_exponent(&self, p: &BhParams, t: f64, dt: f64, integ: Integrator) -> Mat<C64> {
        match integ {
            Integrator::Midpoint => {
                let h = self.hamiltonian(p, t + 0.5 * dt);
                Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * dt)
            }
            Integrator::Magnus4 => {
                let r3 = 3f64.sqrt();
                let z1 = C64::from_polar(1.0, p.f * (t + (0.5 - r3 / 6.0) * dt));
                let z2 = C64::from_polar(1.0, p.f * (t + (0.5 + r3 / 6.0) * dt));
                let s = z1 + z2;
                let w = z1 - z2;
                let hj = -0.5 * p.j;
                // [H2, H1] = w C1 - conj(w) C1^dagger with C1 = [U P, -(J/2) K]
                let c1 = hj * p.u;
                let cm = r3 / 12.0 * dt * dt;
                let d = self.dim();
                Mat::from_fn(d, d, |i, j| {
                    let mut v = (s * self.hop[(i, j)] + (s * self.hop[(j, i)]).conj()) * (hj * 0.5 * dt);
                    if i == j {
                        v += C64::new(dt * p.u * self.pairs[i], 0.0);
                    }
                    let comm = (w * self.comm[(i, j)] - (w * self.comm[(j, i)]).conj()) * c1;
                    v - C64::new(0.0, cm) * comm
                })
            }
        }
    }

    /// Time-ordered propagator from t0 to t0 + duration in `steps` steps.
    pub fn propagate(
        &self,
        p: &BhParams,
        t0: f64,
        duration: f64,
        steps: usize,
        integ: Integrator,
    ) -> Result<UnitaryMatrix> {
        let d = self.dim();
        let dt = duration / steps as f64;
        let mut u = UnitaryMatrix::identity(d).0;
        for m in 0..steps {
            let omega = self.step_exponent(p, t0 + m as f64 * dt, dt, integ);
            let e = omega
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| Error::Convergence { dim: d, lambda: 1.0 / p.f })?;
            let v = e.U();
            let w = e.S().column_vector();
            let mut tmp = v.adjoint() * &u;
            for i in 0..d {
                let ph = C64::from_polar(1.0, -w[i].re);
                for j in 0..d {
                    tmp[(i, j)] *= ph;
                }
            }
            u = v * tmp;
        }
        Ok(UnitaryMatrix(u))
    }

    /// Diagonal boost phases e^{-i 2 pi X / L} (the adjoint boost).
    pub fn boost_adjoint(&self) -> Vec<C64> {
        let l = self.sites as f64;
        self.position
            .iter()
            .map(|&x| C64::from_polar(1.0, -2.0 * PI * x as f64 / l))
            .collect()
    }
}

/// H(t) in the given basis as a Hermitian matrix.
pub fn hamiltonian_at_time(params: &BhParams, t: f64, ops: &BhOperators) -> HermitianMatrix {
    HermitianMatrix::Complex(ops.hamiltonian(params, t))
}

/// Minimum steps per period accepted by [`floquet_operator`].
pub const MIN_STEPS: usize = 16;

/// One-period Floquet operator with a fixed number of steps, origin t = 0.
pub fn floquet_operator(
    params: &BhParams,
    ops: &BhOperators,
    steps: usize,
    integ: Integrator,
) -> Result<UnitaryMatrix> {
    if steps < MIN_STEPS {
        return Err(Error::invalid(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    ops.propagate(params, 0.0, params.bloch_period(), steps, integ)
}

/// Settings for the step-doubling convergence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub m_floor: usize,
    pub tol: f64,
    pub m_cap: usize,
    pub integrator: Integrator,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { m_floor: MIN_STEPS, tol: 1e-9, m_cap: 1 << 16, integrator: Integrator::Magnus4 }
    }
}

#[derive(Debug, Clone)]
pub struct FloquetBuild {
    pub operator: UnitaryMatrix,
    pub steps: usize,
    /// Largest eigenphase change between the last two step counts.
    pub residual: f64,
}

/// Largest wrapped difference between two sorted eigenphase lists.
pub fn phase_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    let s = align_shift(a, b);
    let d = a.len();
    (0..d)
        .map(|i| wrap_phase(b[(i + s) % d] - a[i]).abs())
        .fold(0.0, f64::max)
}

/// Doubles the step count from `m_floor` until eigenphases at M and 2M agree.
pub fn converge_steps(
    build: impl Fn(usize) -> Result<UnitaryMatrix>,
    opts: &ConvergenceOptions,
) -> Result<FloquetBuild> {
    let mut m = opts.m_floor.max(1);
    let mut prev_phases = spectral::eigenphase_values(&build(m)?, 0.0)?;
    let mut residual = f64::NAN;
    loop {
        let m2 = 2 * m;
        if m2 > opts.m_cap {
            return Err(Error::IntegrationFailure { residual, steps: m });
        }
        let next = build(m2)?;
        let phases = spectral::eigenphase_values(&next, 0.0)?;
        residual = phase_discrepancy(&prev_phases, &phases);
        if residual < opts.tol {
            return Ok(FloquetBuild { operator: next, steps: m2, residual });
        }
        m = m2;
        prev_phases = phases;
    }
}

/// Floquet operator with automatic step doubling.
pub fn floquet_operator_converged(
    params: &BhParams,
    ops: &BhOperators,
    opts: &ConvergenceOptions,
) -> Result<FloquetBuild> {
    let opts = ConvergenceOptions { m_floor: opts.m_floor.max(MIN_STEPS), ..*opts };
    converge_steps(|m| floquet_operator(params, ops, m, opts.integrator), &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bose_hubbard::basis::build_fock_basis;
    use crate::bose_hubbard::sector::build_kappa_sector;

    #[test]
    fn single_particle_dispersion() {
        let b = build_fock_basis(1, 5).unwrap();
        let p = BhParams::new(0.7, 0.0, 0.3).unwrap();
        for k in 0..5 {
            let s = build_kappa_sector(&b, k).unwrap();
            let ops = BhOperators::sector(&b, &s);
            let h = ops.hamiltonian(&p, 0.0);
            let kappa = s.kappa();
            assert!((h[(0, 0)].re + p.j * kappa.cos()).abs() < 1e-14);
            assert!(h[(0, 0)].im.abs() < 1e-14);
        }
    }

    #[test]
    fn period_and_hermiticity() {
        let b = build_fock_basis(3, 4).unwrap();
        let s = build_kappa_sector(&b, 1).unwrap();
        let ops = BhOperators::sector(&b, &s);
        let p = BhParams::new(0.4, 0.3, 0.5).unwrap();
        let t = 0.37;
        let h0 = hamiltonian_at_time(&p, t, &ops);
        let h1 = hamiltonian_at_time(&p, t + p.bloch_period(), &ops);
        assert!(h0.hermiticity_defect() < 1e-14);
        assert!(h0.max_abs_diff(&h1) < 1e-12);
    }

    #[test]
    fn zero_hopping_is_diagonal_and_static() {
        let b = build_fock_basis(3, 3).unwrap();
        let ops = BhOperators::full(&b);
        let p = BhParams::new(0.0, 0.8, 0.2).unwrap();
        let h = ops.hamiltonian(&p, 1.3);
        for i in 0..b.len() {
            for j in 0..b.len() {
                let want = if i == j { 0.8 * FockBasis::pair_count(&b.states[i]) } else { 0.0 };
                assert_eq!(h[(i, j)], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn magnus_beats_midpoint() {
        let b = build_fock_basis(3, 3).unwrap();
        let s = build_kappa_sector(&b, 0).unwrap();
        let ops = BhOperators::sector(&b, &s);
        let p = BhParams::new(0.3, 0.25, 0.4).unwrap();
        let exact = floquet_operator(&p, &ops, 4096, Integrator::Magnus4).unwrap();
        let m4 = floquet_operator(&p, &ops, 64, Integrator::Magnus4).unwrap();
        let mid = floquet_operator(&p, &ops, 64, Integrator::Midpoint).unwrap();
        let e4 = m4.max_abs_diff(&exact);
        let e2 = mid.max_abs_diff(&exact);
        assert!(e4 < e2 / 100.0, "magnus {e4:e} midpoint {e2:e}");
    }

    #[test]
    fn too_few_steps() {
        let b = build_fock_basis(2, 2).unwrap();
        let ops = BhOperators::full(&b);
        let p = BhParams::new(0.1, 0.1, 1.0).unwrap();
        assert!(floquet_operator(&p, &ops, 8, Integrator::Midpoint).is_err());
    }

    #[test]
    fn convergence_loop_reports_steps() {
        let b = build_fock_basis(2, 3).unwrap();
        let ops = BhOperators::full(&b);
        let p = BhParams::new(0.2, 0.1, 0.5).unwrap();
        let r = floquet_operator_converged(&p, &ops, &ConvergenceOptions::default()).unwrap();
        assert!(r.residual < 1e-9);
        assert!(r.steps >= 32);
        let opts = ConvergenceOptions { m_cap: 32, tol: 1e-16, ..Default::default() };
        assert!(matches!(
            floquet_operator_converged(&p, &ops, &opts),
            Err(Error::IntegrationFailure { .. })
        ));
    }

    #[test]
    fn invalid_params() {
        assert!(BhParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(BhParams::new(0.1, 0.1, 0.0).is_err());
    }
}
