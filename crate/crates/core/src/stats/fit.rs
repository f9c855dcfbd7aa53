//! Unit-mean normalization, KS distance and the chaotic-weight fit.

use serde::{Deserialize, Serialize};

use super::distributions::mixture_cdf_unchecked;
use crate::error::{Error, Result};

/// Divide by the sample mean; returns (normalized, mean).
pub fn normalize_unit_mean(widths: &[f64]) -> Result<(Vec<f64>, f64)> {
    if widths.is_empty() {
        return Err(Error::Statistics("empty width sample".into()));
    }
    if let Some(w) = widths.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::Statistics(format!("widths must be positive and finite, found {w}")));
    }
    let mean = widths.iter().sum::<f64>() / widths.len() as f64;
    Ok((widths.iter().map(|w| w / mean).collect(), mean))
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// sup |ECDF - cdf|, checking both sides of every jump.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Statistics("empty sample".into()));
    }
    let v = sorted(sample);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    GridScan,
    GoldenSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub gamma: f64,
    pub c_bar: f64,
    pub objective: f64,
    pub method: FitMethod,
    pub n_widths: usize,
}

/// Widths below this (unit-mean units) are unresolved: they belong to the
/// atom at zero.
pub const ATOM_RESOLUTION: f64 = 1e-4;

/// Sum of squared residuals between the ECDF (i/n at the i-th sorted point)
/// and the mixture CDF. Points inside the atom count towards the ECDF but
/// contribute no residual, since the model CDF jumps across them.
fn objective(v: &[f64], gamma: f64) -> f64 {
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .filter(|(_, &c)| c >= ATOM_RESOLUTION)
        .map(|(i, &c)| {
            let r = (i + 1) as f64 / n - mixture_cdf_unchecked(c, gamma);
            r * r
        })
        .sum()
}

fn scan(v: &[f64], lo: f64, hi: f64, step: f64, best: &mut (f64, f64)) {
    let n = ((hi - lo) / step).round() as i64;
    for i in 0..=n {
        let g = (lo + i as f64 * step).clamp(step.min(1e-4), 1.0);
        let o = objective(v, g);
        if o < best.1 {
            *best = (g, o);
        }
    }
}

/// Least-squares fit of the chaotic weight gamma to an already normalized
/// sample. The 1e-4 lattice is scanned near the minimum of a 1e-2 scan,
/// then golden-section search polishes inside one lattice cell.
pub fn fit_gamma(normalized: &[f64]) -> Result<MixtureFit> {
    if normalized.len() < 50 {
        return Err(Error::Statistics(format!("need at least 50 widths, got {}", normalized.len())));
    }
    if normalized.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::Statistics("widths must be finite and >= 0".into()));
    }
    let v = sorted(normalized);
    if v[0] == v[v.len() - 1] {
        return Err(Error::FitFailure("all widths are equal".into()));
    }
    let c_bar = v.iter().sum::<f64>() / v.len() as f64;
    let mut best = (1.0, f64::INFINITY);
    scan(&v, 0.01, 1.0, 0.01, &mut best);
    let centre = best.0;
    scan(&v, (centre - 0.02).max(1e-4), (centre + 0.02).min(1.0), 1e-4, &mut best);

    let (mut a, mut b) = ((best.0 - 1e-4).max(1e-4), (best.0 + 1e-4).min(1.0));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = objective(&v, x1);
    let mut f2 = objective(&v, x2);
    for _ in 0..40 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = objective(&v, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = objective(&v, x2);
        }
    }
    let (xg, fg) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let fit = if fg < best.1 {
        MixtureFit { gamma: xg, c_bar, objective: fg, method: FitMethod::GoldenSection, n_widths: v.len() }
    } else {
        MixtureFit { gamma: best.0, c_bar, objective: best.1, method: FitMethod::GridScan, n_widths: v.len() }
    };
    Ok(fit)
}
