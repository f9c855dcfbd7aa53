//! Eigendecomposition contract, eigenphases, gaps and renormalized curvature.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{HermitianMatrix, UnitaryMatrix};

/// Exact degeneracies below this are treated as errors rather than perturbed.
pub const DEGENERACY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Energies of a Hermitian matrix.
    Linear,
    /// Eigenphases of a unitary, in (-pi, pi].
    Circular,
}

/// Eigenvalues (ascending) and eigenvectors at one parameter value.
#[derive(Debug, Clone)]
pub struct SpectrumSnapshot {
    pub lambda: f64,
    pub kind: SpectrumKind,
    pub values: Vec<f64>,
    /// Column n belongs to `values[n]`.
    pub vectors: Mat<C64>,
}

impl SpectrumSnapshot {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, n: usize) -> Vec<C64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, n)]).collect()
    }

    /// ||V^dagger V - I||_max.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let d = self.dim();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let t = if i == j { 1.0 } else { 0.0 };
                m = m.max((g[(i, j)] - C64::new(t, 0.0)).norm());
            }
        }
        m
    }

    /// Debug dump: values plus row-major vectors with interleaved re/im.
    pub fn to_json(&self) -> serde_json::Value {
        let d = self.dim();
        let mut v = Vec::with_capacity(2 * d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.vectors[(i, j)];
                v.push(z.re);
                v.push(z.im);
            }
        }
        serde_json::json!({
            "lambda": self.lambda,
            "kind": self.kind,
            "dim": d,
            "values": self.values,
            "vectors": v,
        })
    }

    /// One CSV row per level: lambda,index,value.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (n, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.lambda, n, v));
        }
        out
    }
}

/// Maps an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Geodesic distance on the unit circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Largest-modulus component made real positive; lowest index wins ties.
/// Moduli within a relative 1e-12 of each other are treated as tied.
fn fix_phases(v: &mut Mat<C64>) {
    for j in 0..v.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..v.nrows() {
            let a = v[(i, j)].norm();
            if a > best_abs * (1.0 + 1e-12) {
                best_abs = a;
                best = i;
            }
        }
        if best_abs > 0.0 {
            let ph = v[(best, j)].conj() / best_abs;
            for i in 0..v.nrows() {
                v[(i, j)] *= ph;
            }
            let z = v[(best, j)];
            v[(best, j)] = C64::new(z.re, 0.0);
        }
    }
}

/// Hermitian eigendecomposition with the deterministic phase convention.
pub fn eig_hermitian(m: &HermitianMatrix, lambda: f64) -> Result<SpectrumSnapshot> {
    let d = m.dim();
    let fail = || Error::Convergence { dim: d, lambda };
    let (values, mut vectors) = match m {
        HermitianMatrix::Real(a) => {
            let e = a.self_adjoint_eigen(Side::Lower).map_err(|_| fail())?;
            let u = e.U();
            let s = e.S().column_vector();
            let vals: Vec<f64> = (0..d).map(|i| s[i]).collect();
            (vals, Mat::from_fn(d, d, |i, j| C64::new(u[(i, j)], 0.0)))
        }
        HermitianMatrix::Complex(a) => {
            let e = a.self_adjoint_eigen(Side::Lower).map_err(|_| fail())?;
            let u = e.U();
            let s = e.S().column_vector();
            let vals: Vec<f64> = (0..d).map(|i| s[i].re).collect();
            (vals, u.to_owned())
        }
    };
    if values.iter().any(|x| !x.is_finite()) {
        return Err(fail());
    }
    let (values, vectors_sorted) = sort_columns(values, &vectors);
    vectors = vectors_sorted;
    fix_phases(&mut vectors);
    Ok(SpectrumSnapshot { lambda, kind: SpectrumKind::Linear, values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues_hermitian(m: &HermitianMatrix, lambda: f64) -> Result<Vec<f64>> {
    let d = m.dim();
    let fail = || Error::Convergence { dim: d, lambda };
    let mut v = match m {
        HermitianMatrix::Real(a) => a.self_adjoint_eigenvalues(Side::Lower).map_err(|_| fail())?,
        HermitianMatrix::Complex(a) => a.self_adjoint_eigenvalues(Side::Lower).map_err(|_| fail())?,
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err(fail());
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn sort_columns(values: Vec<f64>, vectors: &Mat<C64>) -> (Vec<f64>, Mat<C64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = Mat::from_fn(vectors.nrows(), order.len(), |i, j| vectors[(i, order[j])]);
    (vals, vecs)
}

/// Unitarity defect allowed on input to [`eigenphases`].
pub const UNITARITY_INPUT_TOL: f64 = 1e-8;

/// Eigenphases in (-pi, pi], ascending, with orthonormalized eigenvectors.
pub fn eigenphases(u: &UnitaryMatrix, lambda: f64) -> Result<SpectrumSnapshot> {
    let defect = u.unitarity_defect();
    if defect.is_nan() || defect > UNITARITY_INPUT_TOL {
        return Err(Error::NonUnitary { defect, limit: UNITARITY_INPUT_TOL });
    }
    let d = u.dim();
    let e = u.as_mat().eigen().map_err(|_| Error::Convergence { dim: d, lambda })?;
    let s = e.S().column_vector();
    let phases: Vec<f64> = (0..d).map(|i| wrap_phase(s[i].arg())).collect();
    if phases.iter().any(|x| !x.is_finite()) {
        return Err(Error::Convergence { dim: d, lambda });
    }
    let (values, mut vectors) = sort_columns(phases, &e.U().to_owned());
    // The solver's vectors of a normal matrix are orthogonal only up to
    // eps/gap; Gram-Schmidt twice restores an orthonormal basis.
    for _ in 0..2 {
        gram_schmidt(&mut vectors);
    }
    fix_phases(&mut vectors);
    Ok(SpectrumSnapshot { lambda, kind: SpectrumKind::Circular, values, vectors })
}

/// Eigenphases only, ascending in (-pi, pi].
pub fn eigenphase_values(u: &UnitaryMatrix, lambda: f64) -> Result<Vec<f64>> {
    let d = u.dim();
    let ev = u
        .as_mat()
        .eigenvalues()
        .map_err(|_| Error::Convergence { dim: d, lambda })?;
    let mut p: Vec<f64> = ev.iter().map(|z| wrap_phase(z.arg())).collect();
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::Convergence { dim: d, lambda });
    }
    p.sort_by(f64::total_cmp);
    Ok(p)
}

fn gram_schmidt(v: &mut Mat<C64>) {
    let (r, c) = (v.nrows(), v.ncols());
    for j in 0..c {
        for k in 0..j {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..r {
                dot += v[(i, k)].conj() * v[(i, j)];
            }
            for i in 0..r {
                let t = v[(i, k)] * dot;
                v[(i, j)] -= t;
            }
        }
        let norm = (0..r).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..r {
                v[(i, j)] /= norm;
            }
        }
    }
}

/// Distance between two levels, geodesic for circular spectra.
pub fn level_distance(kind: SpectrumKind, a: f64, b: f64) -> f64 {
    match kind {
        SpectrumKind::Linear => (a - b).abs(),
        SpectrumKind::Circular => circular_distance(a, b),
    }
}

/// Nearest-neighbour gap of level n within a sorted value list.
pub fn gap_in(values: &[f64], kind: SpectrumKind, n: usize) -> Result<f64> {
    let d = values.len();
    if d < 2 {
        return Err(Error::NoNeighbor(n));
    }
    if n >= d {
        return Err(Error::invalid(format!("level {n} out of range for dim {d}")));
    }
    let g = match kind {
        SpectrumKind::Linear => {
            let mut g = f64::INFINITY;
            if n > 0 {
                g = g.min(values[n] - values[n - 1]);
            }
            if n + 1 < d {
                g = g.min(values[n + 1] - values[n]);
            }
            g
        }
        SpectrumKind::Circular => {
            let prev = values[(n + d - 1) % d];
            let next = values[(n + 1) % d];
            circular_distance(values[n], prev).min(circular_distance(values[n], next))
        }
    };
    Ok(g.max(0.0))
}

pub fn nearest_gap(s: &SpectrumSnapshot, n: usize) -> Result<f64> {
    gap_in(&s.values, s.kind, n)
}

/// |second central difference of E_n| / gap on a uniform grid.
pub fn renormalized_curvature(track: &[(f64, f64)], gaps: &[f64], k: usize) -> Result<f64> {
    let len = track.len();
    if len < 3 || k == 0 || k + 1 >= len {
        return Err(Error::OutOfStencil { index: k, max: len.saturating_sub(2) });
    }
    if gaps.len() != len {
        return Err(Error::invalid("gap track length differs from energy track"));
    }
    let gap = gaps[k];
    if !(gap > 0.0) {
        return Err(Error::DegenerateGap { level: k, gap });
    }
    let h = track[k].0 - track[k - 1].0;
    let h2 = track[k + 1].0 - track[k].0;
    if !(h > 0.0) || (h - h2).abs() > 1e-9 * h.abs().max(1.0) {
        return Err(Error::invalid("curvature needs a uniform ascending grid"));
    }
    let second = (track[k - 1].1 - 2.0 * track[k].1 + track[k + 1].1) / (h * h);
    Ok(second.abs() / gap)
}

/// Cyclic shift s minimising sum_i wrap(b[(i+s) mod d] - a[i])^2.
///
/// Sorted eigenphases are only defined up to a rotation of labels when a
/// level passes through the branch cut at pi; this picks the relabeling that
/// moves every level least.
pub fn align_shift(a: &[f64], b: &[f64]) -> usize {
    let d = a.len();
    assert_eq!(d, b.len());
    if d == 0 {
        return 0;
    }
    let mut best = 0usize;
    let mut best_cost = f64::INFINITY;
    let mut try_shift = |s: usize| {
        let mut c = 0.0;
        for i in 0..d {
            let x = wrap_phase(b[(i + s) % d] - a[i]);
            c += x * x;
            if c >= best_cost {
                return;
            }
        }
        if c < best_cost {
            best_cost = c;
            best = s;
        }
    };
    // Small rotations are by far the common case; try them first so the
    // early exit prunes the rest.
    try_shift(0);
    try_shift(1 % d);
    try_shift(d - 1);
    for s in 0..d {
        try_shift(s);
    }
    best
}

/// Mean of two nearby phases, wrapped.
pub fn circular_midpoint(a: f64, b: f64) -> f64 {
    wrap_phase(a + 0.5 * wrap_phase(b - a))
}
