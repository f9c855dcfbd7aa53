//! One-parameter Hermitian families and their analytic oracles.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bose_hubbard::{FloquetFamily, HardwallFamily};
use crate::error::{Error, Result};
use crate::matrix::{HermitianMatrix, UnitaryMatrix};
use crate::spectral::{self, SpectrumKind, SpectrumSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TwoLevel,
    Triple,
    GoeInterp,
    LinearPair,
    BoseHubbardFloquet,
    BoseHubbardHardwall,
}

/// A family H(lambda). Immutable; cheap to clone and share across threads.
#[derive(Debug, Clone)]
pub enum ParametricHamiltonianSpec {
    TwoLevel { g: f64 },
    Triple { a: f64, b: f64, c_coupling: f64 },
    /// cos(lambda) h1 + sin(lambda) h2
    GoeInterp { h1: Arc<HermitianMatrix>, h2: Arc<HermitianMatrix> },
    /// h1 + lambda h2
    LinearPair { h1: Arc<HermitianMatrix>, h2: Arc<HermitianMatrix> },
    BoseHubbardFloquet(Arc<FloquetFamily>),
    BoseHubbardHardwall(Arc<HardwallFamily>),
}

/// Result of evaluating a family: a Hamiltonian or a one-period propagator.
#[derive(Debug, Clone)]
pub enum Operator {
    Hermitian(HermitianMatrix),
    Unitary(UnitaryMatrix),
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be finite, got {x}")))
    }
}

pub fn build_two_level(g: f64) -> Result<ParametricHamiltonianSpec> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::invalid(format!("coupling g must be finite and > 0, got {g}")));
    }
    Ok(ParametricHamiltonianSpec::TwoLevel { g })
}

/// Three levels with diagonal (-lambda, 0, lambda) and couplings a (1-2),
/// b (1-3), c_coupling (2-3).
pub fn build_triple(a: f64, b: f64, c_coupling: f64) -> Result<ParametricHamiltonianSpec> {
    for (x, n) in [(a, "a"), (b, "b"), (c_coupling, "c_coupling")] {
        check_finite(x, n)?;
    }
    if a == 0.0 && b == 0.0 && c_coupling == 0.0 {
        log::warn!("triple model with all couplings zero has exact crossings at lambda = 0");
    }
    Ok(ParametricHamiltonianSpec::Triple { a, b, c_coupling })
}

fn check_pair(h1: &HermitianMatrix, h2: &HermitianMatrix) -> Result<()> {
    if h1.dim() != h2.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            h1.dim(),
            h2.dim()
        )));
    }
    for h in [h1, h2] {
        let scale = 1.0 + h.max_norm();
        if h.hermiticity_defect() > 1e-12 * scale {
            return Err(Error::invalid("matrix is not Hermitian"));
        }
    }
    Ok(())
}

pub fn build_goe_interp(h1: HermitianMatrix, h2: HermitianMatrix) -> Result<ParametricHamiltonianSpec> {
    check_pair(&h1, &h2)?;
    if !h1.is_real() || !h2.is_real() {
        return Err(Error::invalid("GOE interpolation needs real symmetric matrices"));
    }
    Ok(ParametricHamiltonianSpec::GoeInterp { h1: Arc::new(h1), h2: Arc::new(h2) })
}

pub fn build_linear_pair(h1: HermitianMatrix, h2: HermitianMatrix) -> Result<ParametricHamiltonianSpec> {
    check_pair(&h1, &h2)?;
    Ok(ParametricHamiltonianSpec::LinearPair { h1: Arc::new(h1), h2: Arc::new(h2) })
}

impl ParametricHamiltonianSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::TwoLevel { .. } => ModelKind::TwoLevel,
            Self::Triple { .. } => ModelKind::Triple,
            Self::GoeInterp { .. } => ModelKind::GoeInterp,
            Self::LinearPair { .. } => ModelKind::LinearPair,
            Self::BoseHubbardFloquet(_) => ModelKind::BoseHubbardFloquet,
            Self::BoseHubbardHardwall(_) => ModelKind::BoseHubbardHardwall,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::TwoLevel { .. } => 2,
            Self::Triple { .. } => 3,
            Self::GoeInterp { h1, .. } | Self::LinearPair { h1, .. } => h1.dim(),
            Self::BoseHubbardFloquet(f) => f.dim(),
            Self::BoseHubbardHardwall(f) => f.dim(),
        }
    }

    pub fn spectrum_kind(&self) -> SpectrumKind {
        match self {
            Self::BoseHubbardFloquet(_) => SpectrumKind::Circular,
            _ => SpectrumKind::Linear,
        }
    }

    pub fn evaluate(&self, lambda: f64) -> Result<Operator> {
        match self {
            Self::BoseHubbardFloquet(f) => {
                check_finite(lambda, "lambda")?;
                Ok(Operator::Unitary(f.evaluate(lambda)?))
            }
            _ => Ok(Operator::Hermitian(self.evaluate_hermitian(lambda)?)),
        }
    }

    /// H(lambda) for the static families.
    pub fn evaluate_hermitian(&self, lambda: f64) -> Result<HermitianMatrix> {
        check_finite(lambda, "lambda")?;
        Ok(match self {
            Self::TwoLevel { g } => {
                HermitianMatrix::from_real_rows(2, &[lambda, *g, *g, -lambda])?
            }
            Self::Triple { a, b, c_coupling } => HermitianMatrix::from_real_rows(
                3,
                &[-lambda, *a, *b, *a, 0.0, *c_coupling, *b, *c_coupling, lambda],
            )?,
            Self::GoeInterp { h1, h2 } => {
                HermitianMatrix::combine(lambda.cos(), h1, lambda.sin(), h2)
            }
            Self::LinearPair { h1, h2 } => HermitianMatrix::combine(1.0, h1, lambda, h2),
            Self::BoseHubbardHardwall(f) => f.evaluate(lambda)?,
            Self::BoseHubbardFloquet(_) => {
                return Err(Error::Unsupported(
                    "Floquet families evaluate to a unitary, not a Hamiltonian".into(),
                ))
            }
        })
    }

    /// Exact dH/dlambda.
    pub fn derivative_matrix(&self, lambda: f64) -> Result<HermitianMatrix> {
        check_finite(lambda, "lambda")?;
        Ok(match self {
            Self::TwoLevel { .. } => HermitianMatrix::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0])?,
            Self::Triple { .. } => HermitianMatrix::from_real_rows(
                3,
                &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            )?,
            Self::GoeInterp { h1, h2 } => {
                HermitianMatrix::combine(-lambda.sin(), h1, lambda.cos(), h2)
            }
            Self::LinearPair { h2, .. } => (**h2).clone(),
            Self::BoseHubbardHardwall(f) => f.derivative(lambda)?,
            Self::BoseHubbardFloquet(_) => {
                return Err(Error::Unsupported(
                    "no analytic derivative for a Floquet family".into(),
                ))
            }
        })
    }

    /// Eigendecomposition at lambda (energies or eigenphases).
    pub fn snapshot(&self, lambda: f64) -> Result<SpectrumSnapshot> {
        match self.evaluate(lambda)? {
            Operator::Hermitian(h) => spectral::eig_hermitian(&h, lambda),
            Operator::Unitary(u) => spectral::eigenphases(&u, lambda),
        }
    }

    /// Sorted eigenvalues or eigenphases only.
    pub fn values(&self, lambda: f64) -> Result<Vec<f64>> {
        match self.evaluate(lambda)? {
            Operator::Hermitian(h) => spectral::eigenvalues_hermitian(&h, lambda),
            Operator::Unitary(u) => spectral::eigenphase_values(&u, lambda),
        }
    }

    /// Stable short identifier used in sweep metadata.
    pub fn spec_id(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(&self.to_wire()).unwrap_or_default();
        let h = Sha256::digest(json.as_bytes());
        format!("{:?}-{}", self.kind(), &hex::encode(h)[..12]).to_lowercase()
    }

    pub fn to_wire(&self) -> SpecWire {
        let mut params = Map::new();
        let mut wire = SpecWire {
            kind: self.kind(),
            dim: self.dim(),
            params: Map::new(),
            h1: None,
            h1_im: None,
            h2: None,
            h2_im: None,
        };
        match self {
            Self::TwoLevel { g } => {
                params.insert("g".into(), (*g).into());
            }
            Self::Triple { a, b, c_coupling } => {
                params.insert("a".into(), (*a).into());
                params.insert("b".into(), (*b).into());
                params.insert("c_coupling".into(), (*c_coupling).into());
            }
            Self::GoeInterp { h1, h2 } | Self::LinearPair { h1, h2 } => {
                let (r1, i1) = h1.to_rows();
                let (r2, i2) = h2.to_rows();
                wire.h1 = Some(r1);
                wire.h1_im = i1;
                wire.h2 = Some(r2);
                wire.h2_im = i2;
            }
            Self::BoseHubbardFloquet(f) => params = f.to_params(),
            Self::BoseHubbardHardwall(f) => params = f.to_params(),
        }
        wire.params = params;
        wire
    }

    pub fn from_wire(w: &SpecWire) -> Result<Self> {
        let num = |k: &str| -> Result<f64> {
            w.params
                .get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("missing numeric parameter '{k}'")))
        };
        let matrix = |re: &Option<Vec<f64>>, im: &Option<Vec<f64>>, name: &str| {
            let re = re
                .as_ref()
                .ok_or_else(|| Error::Parse(format!("missing matrix payload '{name}'")))?;
            match im {
                None => HermitianMatrix::from_real_rows(w.dim, re),
                Some(im) => HermitianMatrix::from_complex_rows(w.dim, re, im),
            }
        };
        let spec = match w.kind {
            ModelKind::TwoLevel => build_two_level(num("g")?)?,
            ModelKind::Triple => build_triple(num("a")?, num("b")?, num("c_coupling")?)?,
            ModelKind::GoeInterp => build_goe_interp(
                matrix(&w.h1, &w.h1_im, "h1")?,
                matrix(&w.h2, &w.h2_im, "h2")?,
            )?,
            ModelKind::LinearPair => build_linear_pair(
                matrix(&w.h1, &w.h1_im, "h1")?,
                matrix(&w.h2, &w.h2_im, "h2")?,
            )?,
            ModelKind::BoseHubbardFloquet => Self::BoseHubbardFloquet(Arc::new(
                FloquetFamily::from_params(&w.params)?,
            )),
            ModelKind::BoseHubbardHardwall => Self::BoseHubbardHardwall(Arc::new(
                HardwallFamily::from_params(&w.params)?,
            )),
        };
        if spec.dim() != w.dim {
            return Err(Error::Parse(format!(
                "declared dim {} but the model has dim {}",
                w.dim,
                spec.dim()
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: SpecWire = serde_json::from_str(s)?;
        Self::from_wire(&w)
    }
}

/// JSON layout of a spec: kind tag, parameter map, optional row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpecWire {
    pub kind: ModelKind,
    pub dim: usize,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1_im: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2_im: Option<Vec<f64>>,
}

/// Closed-form quantities of the two-level model at lambda.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelOracle {
    pub s: f64,
    pub c: f64,
    pub fwhm: f64,
    pub energies: (f64, f64),
}

pub fn analytic_two_level(g: f64, lambda: f64) -> Result<TwoLevelOracle> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::invalid(format!("coupling g must be finite and > 0, got {g}")));
    }
    check_finite(lambda, "lambda")?;
    let r = g / (g * g + lambda * lambda);
    let s = r * r / 8.0;
    let e = (lambda * lambda + g * g).sqrt();
    Ok(TwoLevelOracle {
        s,
        c: 4.0 * s,
        fwhm: 2.0 * g * (SQRT_2 - 1.0).sqrt(),
        energies: (-e, e),
    })
}
