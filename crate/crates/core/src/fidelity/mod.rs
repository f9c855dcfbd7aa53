//! Fidelity f_n, fidelity change S_n and everything built on them.

pub mod density;
pub mod io;
pub mod peaks;
pub mod sweep;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ParametricHamiltonianSpec;
use crate::matrix::HermitianMatrix;
use crate::spectral::{align_shift, circular_midpoint, SpectrumKind, SpectrumSnapshot};

pub use density::{ac_density, uniform_edges, ACDensityHistogram};
pub use peaks::{
    detect_events, detect_peaks, detect_peaks_rule, pair_and_estimate, peak_fwhm, refine_peak, ACEvent,
    DetectConfig, Detection, RawPeak, RefineConfig, RefinedPeak, ThresholdRule,
};
pub use sweep::{default_delta, sweep, FidelitySweep, SweepConfig};

/// Below this, 1 - f is indistinguishable from rounding noise.
pub const PRECISION_FLOOR: f64 = 1e-14;

/// |<a|b>| and 1 - |<a|b>| for two (nearly) normalized vectors.
///
/// 1 - f is computed as sin^2/(1 + cos) from the component of b orthogonal
/// to a, which keeps full relative precision when the states barely move;
/// 1 - |<a|b>| would lose it to cancellation.
pub fn overlap(a: &[C64], b: &[C64]) -> (f64, f64) {
    let mut ov = C64::new(0.0, 0.0);
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        ov += x.conj() * y;
        na += x.norm_sqr();
        nb += y.norm_sqr();
    }
    let c = ov / na;
    let mut perp = 0.0;
    for (x, y) in a.iter().zip(b) {
        perp += (y - x * c).norm_sqr();
    }
    let f = (ov.norm() / (na * nb).sqrt()).min(1.0);
    let sin2 = (perp / nb).clamp(0.0, 1.0);
    (f, sin2 / (1.0 + f))
}

fn column(s: &SpectrumSnapshot, n: usize) -> Vec<C64> {
    s.vector(n)
}

/// Index in `b` of the level that is level n in `a`.
fn partner(a: &SpectrumSnapshot, b: &SpectrumSnapshot, n: usize) -> usize {
    match a.kind {
        SpectrumKind::Linear => n,
        SpectrumKind::Circular => (n + align_shift(&a.values, &b.values)) % a.dim(),
    }
}

fn check_level(spec: &ParametricHamiltonianSpec, n: usize) -> Result<()> {
    if n >= spec.dim() {
        return Err(Error::invalid(format!("level {n} out of range for dim {}", spec.dim())));
    }
    Ok(())
}

fn check_delta(dl: f64) -> Result<()> {
    if dl.is_finite() && dl >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta lambda must be finite and >= 0, got {dl}")))
    }
}

/// f_n = |<n(lambda)|n(lambda + dl)>|.
pub fn fidelity(spec: &ParametricHamiltonianSpec, lambda: f64, dl: f64, n: usize) -> Result<f64> {
    check_level(spec, n)?;
    check_delta(dl)?;
    if dl == 0.0 {
        return Ok(1.0);
    }
    let a = spec.snapshot(lambda)?;
    let b = spec.snapshot(lambda + dl)?;
    Ok(overlap(&column(&a, n), &column(&b, partner(&a, &b, n))).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityChange {
    pub s: f64,
    pub f: f64,
    pub one_minus_f: f64,
    /// 1 - f fell below [`PRECISION_FLOOR`]; `s` was set to 0.
    pub precision_loss: bool,
}

impl FidelityChange {
    fn from_overlap(f: f64, one_minus_f: f64, dl: f64) -> Self {
        if one_minus_f < PRECISION_FLOOR {
            FidelityChange { s: 0.0, f, one_minus_f, precision_loss: true }
        } else {
            FidelityChange { s: one_minus_f / (dl * dl), f, one_minus_f, precision_loss: false }
        }
    }
}

/// S_n = (1 - f_n)/dl^2 between lambda and lambda + dl.
pub fn fidelity_change(
    spec: &ParametricHamiltonianSpec,
    lambda: f64,
    dl: f64,
    n: usize,
) -> Result<FidelityChange> {
    check_level(spec, n)?;
    if !(dl.is_finite() && dl > 0.0) {
        return Err(Error::invalid(format!("delta lambda must be > 0, got {dl}")));
    }
    let a = spec.snapshot(lambda)?;
    let b = spec.snapshot(lambda + dl)?;
    let (f, omf) = overlap(&column(&a, n), &column(&b, partner(&a, &b, n)));
    Ok(FidelityChange::from_overlap(f, omf, dl))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaCheck {
    pub ok: bool,
    pub rel_change: f64,
}

/// Relative change of S_n when dl is halved; ok below 1%.
pub fn validate_delta(
    spec: &ParametricHamiltonianSpec,
    lambda: f64,
    dl: f64,
    n: usize,
) -> Result<DeltaCheck> {
    let s1 = fidelity_change(spec, lambda, dl, n)?.s;
    let s2 = fidelity_change(spec, lambda, dl / 2.0, n)?.s;
    let rel_change = (s1 - s2).abs() / s1.max(1e-300);
    Ok(DeltaCheck { ok: rel_change < 0.01, rel_change })
}

/// S_n = 1/2 sum_{m != n} |<m|dH|n>|^2 / (E_n - E_m)^2.
pub fn pt_fidelity_change(snapshot: &SpectrumSnapshot, dh: &HermitianMatrix, n: usize) -> Result<f64> {
    if snapshot.kind != SpectrumKind::Linear {
        return Err(Error::Unsupported("perturbative S needs a Hermitian spectrum".into()));
    }
    let d = snapshot.dim();
    if n >= d || dh.dim() != d {
        return Err(Error::invalid("level or dimension mismatch"));
    }
    let scale = 1.0 + snapshot.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let vn = dh.apply(&snapshot.vector(n));
    let mut sum = 0.0;
    for m in 0..d {
        if m == n {
            continue;
        }
        let gap = snapshot.values[n] - snapshot.values[m];
        if gap.abs() < crate::spectral::DEGENERACY_TOL * scale {
            return Err(Error::DegenerateGap { level: n, gap: gap.abs() });
        }
        let elem: C64 = (0..d).map(|i| snapshot.vectors[(i, m)].conj() * vn[i]).sum();
        sum += elem.norm_sqr() / (gap * gap);
    }
    Ok(0.5 * sum)
}

/// S for every level from a centered probe pair at lambda -+ dl/2.
#[derive(Debug, Clone)]
pub struct ProbeColumn {
    pub lambda: f64,
    /// Midpoint energies (circular mean for phases), sorted order of the
    /// lower probe.
    pub values: Vec<f64>,
    pub f: Vec<f64>,
    pub s: Vec<f64>,
    pub floor: Vec<bool>,
}

/// Centered probes cancel the O(dl) term that a one-sided pair leaves in
/// the peak position and shape, at the same cost of two decompositions.
pub fn probe_column(spec: &ParametricHamiltonianSpec, lambda: f64, dl: f64) -> Result<ProbeColumn> {
    let a = spec.snapshot(lambda - 0.5 * dl)?;
    let b = spec.snapshot(lambda + 0.5 * dl)?;
    let d = a.dim();
    let shift = match a.kind {
        SpectrumKind::Linear => 0,
        SpectrumKind::Circular => align_shift(&a.values, &b.values),
    };
    let mut col = ProbeColumn {
        lambda,
        values: Vec::with_capacity(d),
        f: Vec::with_capacity(d),
        s: Vec::with_capacity(d),
        floor: Vec::with_capacity(d),
    };
    for n in 0..d {
        let m = (n + shift) % d;
        let (f, omf) = overlap(&column(&a, n), &column(&b, m));
        let fc = FidelityChange::from_overlap(f, omf, dl);
        col.values.push(match a.kind {
            SpectrumKind::Linear => 0.5 * (a.values[n] + b.values[m]),
            SpectrumKind::Circular => circular_midpoint(a.values[n], b.values[m]),
        });
        col.f.push(f);
        col.s.push(fc.s);
        col.floor.push(fc.precision_loss);
    }
    Ok(col)
}
