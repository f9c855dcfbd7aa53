//! Parametric families over lambda = 1/F.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::basis::{build_fock_basis_capped, FockBasis, DEFAULT_BASIS_CAP};
use super::floquet::{converge_steps, BhOperators, BhParams, ConvergenceOptions, Integrator, MIN_STEPS};
use super::sector::build_kappa_sector;
use crate::error::{Error, Result};
use crate::hamiltonian::ParametricHamiltonianSpec;
use crate::matrix::{HermitianMatrix, UnitaryMatrix};

/// Which unitary the Floquet family hands to the spectral pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    /// The one-period operator U_F(T_B).
    Full,
    /// W = D^dagger U(T_B/L, 0) with the boost D = exp(i 2 pi/L sum_l l n_l).
    /// H(t + T_B/L) = D H(t) D^dagger gives U_F = W^L, so W has the same
    /// eigenvectors and a spectrum that is not folded L times onto itself.
    /// Only block diagonal in a kappa sector when N is a multiple of L.
    Reduced,
    /// Reduced when N mod L == 0, else full.
    Auto,
}

/// Construction settings of a Floquet family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetOptions {
    pub integrator: Integrator,
    pub mode: OperatorMode,
    /// Steps per evaluated operator; 0 means "calibrate before use".
    pub steps: usize,
    pub basis_cap: usize,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        FloquetOptions {
            integrator: Integrator::Magnus4,
            mode: OperatorMode::Auto,
            steps: 0,
            basis_cap: DEFAULT_BASIS_CAP,
        }
    }
}

/// Floquet operators of the tilted ring in one kappa sector, lambda = 1/F.
#[derive(Debug, Clone)]
pub struct FloquetFamily {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub j: f64,
    pub u: f64,
    pub integrator: Integrator,
    pub reduced: bool,
    pub steps: usize,
    pub basis_cap: usize,
    ops: BhOperators,
}

impl FloquetFamily {
    pub fn new(n: usize, l: usize, k: usize, j: f64, u: f64, opts: FloquetOptions) -> Result<Self> {
        BhParams::new(j, u, 1.0)?;
        let basis = build_fock_basis_capped(n, l, opts.basis_cap)?;
        let sector = build_kappa_sector(&basis, k)?;
        if sector.dim() == 0 {
            return Err(Error::invalid(format!("sector k={k} is empty for N={n}, L={l}")));
        }
        let commensurate = n % l == 0;
        let reduced = match opts.mode {
            OperatorMode::Full => false,
            OperatorMode::Reduced if !commensurate => {
                return Err(Error::invalid(format!(
                    "reduced operator needs N divisible by L (N={n}, L={l})"
                )))
            }
            OperatorMode::Reduced => true,
            OperatorMode::Auto => commensurate,
        };
        if opts.steps != 0 && opts.steps < MIN_STEPS {
            return Err(Error::invalid(format!("need at least {MIN_STEPS} steps")));
        }
        Ok(FloquetFamily {
            n,
            l,
            k,
            j,
            u,
            integrator: opts.integrator,
            reduced,
            steps: opts.steps,
            basis_cap: opts.basis_cap,
            ops: BhOperators::sector(&basis, &sector),
        })
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    pub fn operators(&self) -> &BhOperators {
        &self.ops
    }

    /// Propagation window of one evaluated operator at lambda.
    pub fn window(&self, lambda: f64) -> f64 {
        let tb = 2.0 * PI * lambda;
        if self.reduced {
            tb / self.l as f64
        } else {
            tb
        }
    }

    fn build(&self, lambda: f64, steps: usize) -> Result<UnitaryMatrix> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("lambda = 1/F must be > 0, got {lambda}")));
        }
        let p = BhParams::new(self.j, self.u, 1.0 / lambda)?;
        let mut u = self.ops.propagate(&p, 0.0, self.window(lambda), steps, self.integrator)?;
        if self.reduced {
            let ph = self.ops.boost_adjoint();
            for i in 0..u.dim() {
                for c in 0..u.dim() {
                    u.0[(i, c)] *= ph[i];
                }
            }
        }
        Ok(u)
    }

    pub fn evaluate(&self, lambda: f64) -> Result<UnitaryMatrix> {
        if self.steps == 0 {
            return Err(Error::invalid("Floquet family has no step count; calibrate it first"));
        }
        self.build(lambda, self.steps)
    }

    /// Fixes one step count for the whole lambda range by step doubling at
    /// both ends. A single count keeps the integration error smooth in
    /// lambda, which matters for overlaps between nearby parameter values.
    pub fn calibrated(&self, lambda_min: f64, lambda_max: f64, opts: &ConvergenceOptions) -> Result<Self> {
        let mut steps = opts.m_floor.max(MIN_STEPS);
        for lam in [lambda_min, lambda_max] {
            let r = converge_steps(|m| self.build(lam, m), opts)?;
            steps = steps.max(r.steps);
        }
        let mut out = self.clone();
        out.steps = steps;
        Ok(out)
    }

    pub fn to_params(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("n".into(), self.n.into());
        m.insert("l".into(), self.l.into());
        m.insert("k".into(), self.k.into());
        m.insert("j".into(), self.j.into());
        m.insert("u".into(), self.u.into());
        m.insert("integrator".into(), serde_json::to_value(self.integrator).expect("enum"));
        let mode = if self.reduced { OperatorMode::Reduced } else { OperatorMode::Full };
        m.insert("operator".into(), serde_json::to_value(mode).expect("enum"));
        m.insert("steps".into(), self.steps.into());
        m.insert("basis_cap".into(), self.basis_cap.into());
        m.insert("time_origin".into(), 0.0.into());
        m
    }

    pub fn from_params(p: &Map<String, Value>) -> Result<Self> {
        let n = get_usize(p, "n")?;
        let l = get_usize(p, "l")?;
        let k = get_usize(p, "k")?;
        let j = get_f64(p, "j")?;
        let u = get_f64(p, "u")?;
        let integrator = match p.get("integrator") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => Integrator::Magnus4,
        };
        let mode = match p.get("operator") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => OperatorMode::Auto,
        };
        let steps = p.get("steps").and_then(Value::as_u64).unwrap_or(0) as usize;
        let basis_cap = p
            .get("basis_cap")
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .unwrap_or(DEFAULT_BASIS_CAP);
        FloquetFamily::new(n, l, k, j, u, FloquetOptions { integrator, mode, steps, basis_cap })
    }
}

fn get_usize(p: &Map<String, Value>, k: &str) -> Result<usize> {
    p.get(k)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::Parse(format!("missing integer parameter '{k}'")))
}

fn get_f64(p: &Map<String, Value>, k: &str) -> Result<f64> {
    p.get(k)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse(format!("missing numeric parameter '{k}'")))
}

/// Floquet family over lambda = 1/F wrapped as a spec.
pub fn build_floquet_family(
    n: usize,
    l: usize,
    k: usize,
    j: f64,
    u: f64,
    opts: FloquetOptions,
) -> Result<ParametricHamiltonianSpec> {
    Ok(ParametricHamiltonianSpec::BoseHubbardFloquet(Arc::new(FloquetFamily::new(
        n, l, k, j, u, opts,
    )?)))
}

/// Open chain with a static tilt: H = hop + interaction + (1/lambda) sum_l l n_l.
#[derive(Debug, Clone)]
pub struct HardwallFamily {
    pub n: usize,
    pub l: usize,
    pub j: f64,
    pub u: f64,
    pub basis_cap: usize,
    /// -(J/2)(hopping + h.c.) + U P, lambda independent.
    base: Mat<f64>,
    position: Vec<f64>,
}

impl HardwallFamily {
    pub fn new(n: usize, l: usize, j: f64, u: f64, basis_cap: usize) -> Result<Self> {
        BhParams::new(j, u, 1.0)?;
        let basis = build_fock_basis_capped(n, l, basis_cap)?;
        let d = basis.len();
        let mut base = Mat::zeros(d, d);
        for s in 0..d {
            base[(s, s)] = u * FockBasis::pair_count(&basis.states[s]);
            for from in 0..l - 1 {
                if let Some((t, amp)) = basis.hop(s, from, from + 1) {
                    base[(t, s)] += -0.5 * j * amp;
                    base[(s, t)] += -0.5 * j * amp;
                }
            }
        }
        let position = basis.states.iter().map(|s| FockBasis::position_sum(s) as f64).collect();
        Ok(HardwallFamily { n, l, j, u, basis_cap, base, position })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    fn check(lambda: f64) -> Result<()> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("lambda = 1/F must be > 0, got {lambda}")))
        }
    }

    pub fn evaluate(&self, lambda: f64) -> Result<HermitianMatrix> {
        Self::check(lambda)?;
        let f = 1.0 / lambda;
        let d = self.dim();
        Ok(HermitianMatrix::real_from_fn(d, |i, c| {
            if i == c {
                self.base[(i, c)] + f * self.position[i]
            } else {
                self.base[(i, c)]
            }
        }))
    }

    pub fn derivative(&self, lambda: f64) -> Result<HermitianMatrix> {
        Self::check(lambda)?;
        let s = -1.0 / (lambda * lambda);
        let d = self.dim();
        Ok(HermitianMatrix::real_from_fn(d, |i, c| if i == c { s * self.position[i] } else { 0.0 }))
    }

    pub fn to_params(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("n".into(), self.n.into());
        m.insert("l".into(), self.l.into());
        m.insert("j".into(), self.j.into());
        m.insert("u".into(), self.u.into());
        m.insert("basis_cap".into(), self.basis_cap.into());
        m
    }

    pub fn from_params(p: &Map<String, Value>) -> Result<Self> {
        let cap = p
            .get("basis_cap")
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .unwrap_or(DEFAULT_BASIS_CAP);
        HardwallFamily::new(get_usize(p, "n")?, get_usize(p, "l")?, get_f64(p, "j")?, get_f64(p, "u")?, cap)
    }
}

pub fn build_hardwall_tilted(j: f64, u: f64, n: usize, l: usize) -> Result<ParametricHamiltonianSpec> {
    Ok(ParametricHamiltonianSpec::BoseHubbardHardwall(Arc::new(HardwallFamily::new(
        n,
        l,
        j,
        u,
        DEFAULT_BASIS_CAP,
    )?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral;

    fn opts(mode: OperatorMode, steps: usize) -> FloquetOptions {
        FloquetOptions { mode, steps, ..Default::default() }
    }

    #[test]
    fn reduced_operator_power_is_floquet_operator() {
        let full = FloquetFamily::new(3, 3, 0, 0.3, 0.2, opts(OperatorMode::Full, 768)).unwrap();
        let red = FloquetFamily::new(3, 3, 0, 0.3, 0.2, opts(OperatorMode::Reduced, 256)).unwrap();
        let lam = 2.5;
        let uf = full.evaluate(lam).unwrap();
        let w = red.evaluate(lam).unwrap();
        let w3 = &(&w.0 * &w.0) * &w.0;
        assert!(crate::matrix::max_abs_diff(&w3, &uf.0) < 1e-9);
    }

    #[test]
    fn auto_mode_follows_commensurability() {
        let a = FloquetFamily::new(4, 4, 0, 0.1, 0.1, FloquetOptions::default()).unwrap();
        assert!(a.reduced);
        let b = FloquetFamily::new(3, 4, 0, 0.1, 0.1, FloquetOptions::default()).unwrap();
        assert!(!b.reduced);
        assert!(FloquetFamily::new(3, 4, 0, 0.1, 0.1, opts(OperatorMode::Reduced, 0)).is_err());
    }

    #[test]
    fn uncalibrated_family_refuses_to_evaluate() {
        let a = FloquetFamily::new(2, 2, 0, 0.1, 0.1, FloquetOptions::default()).unwrap();
        assert!(a.evaluate(1.0).is_err());
        let c = a.calibrated(1.0, 2.0, &ConvergenceOptions::default()).unwrap();
        assert!(c.steps >= 32);
        assert!(c.evaluate(1.5).unwrap().unitarity_defect() < 1e-12);
    }

    #[test]
    fn free_system_is_identity() {
        let f = FloquetFamily::new(3, 3, 0, 0.0, 0.0, opts(OperatorMode::Full, 16)).unwrap();
        let u = f.evaluate(7.0).unwrap();
        assert!(u.max_abs_diff(&UnitaryMatrix::identity(f.dim())) < 1e-14);
    }

    #[test]
    fn params_round_trip() {
        let f = FloquetFamily::new(3, 3, 1, 0.3, 0.2, opts(OperatorMode::Full, 64)).unwrap();
        let g = FloquetFamily::from_params(&f.to_params()).unwrap();
        assert_eq!(g.to_params(), f.to_params());
        assert_eq!(g.evaluate(1.1).unwrap(), f.evaluate(1.1).unwrap());
    }

    #[test]
    fn hardwall_limits() {
        let h = HardwallFamily::new(2, 3, 0.0, 0.4, DEFAULT_BASIS_CAP).unwrap();
        let m = h.evaluate(0.5).unwrap();
        let b = crate::bose_hubbard::basis::build_fock_basis(2, 3).unwrap();
        for (i, s) in b.states.iter().enumerate() {
            let want = 0.4 * FockBasis::pair_count(s) + 2.0 * FockBasis::position_sum(s) as f64;
            assert_eq!(m.get(i, i).re, want);
        }
        // single particle, J << F: Wannier-Stark ladder F l
        let h = HardwallFamily::new(1, 4, 0.01, 0.0, DEFAULT_BASIS_CAP).unwrap();
        let v = spectral::eigenvalues_hermitian(&h.evaluate(1.0).unwrap(), 1.0).unwrap();
        for (i, e) in v.iter().enumerate() {
            assert!((e - (i + 1) as f64).abs() < 1e-4);
        }
    }
}
