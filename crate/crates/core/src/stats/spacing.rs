//! Level-spacing unfolding and the Wigner-Dyson chi-squared test.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::distributions::wigner_cdf;
use crate::error::{Error, Result};
use crate::spectral::{SpectrumKind, SpectrumSnapshot};

pub const MIN_UNFOLD_DIM: usize = 20;
const UNFOLD_WINDOW: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSample {
    pub spacings: Vec<f64>,
}

impl SpacingSample {
    pub fn len(&self) -> usize {
        self.spacings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacings.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.spacings.iter().sum::<f64>() / self.len() as f64
    }

    /// Join samples and rescale to exact unit mean.
    pub fn pooled(samples: &[SpacingSample]) -> Result<SpacingSample> {
        let all: Vec<f64> = samples.iter().flat_map(|s| s.spacings.iter().copied()).collect();
        renormalized(all)
    }
}

fn renormalized(mut v: Vec<f64>) -> Result<SpacingSample> {
    if v.is_empty() {
        return Err(Error::Statistics("no spacings".into()));
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Statistics("all spacings vanish".into()));
    }
    for x in &mut v {
        *x /= mean;
    }
    Ok(SpacingSample { spacings: v })
}

pub fn unfold_spacings(s: &SpectrumSnapshot) -> Result<SpacingSample> {
    unfold_values(&s.values, s.kind)
}

/// Eigenphases: gaps around the circle (wrap gap included) in units of
/// 2 pi/d. Energies: gaps over a moving 11-level mean spacing. Both are
/// rescaled to exact unit mean.
pub fn unfold_values(values: &[f64], kind: SpectrumKind) -> Result<SpacingSample> {
    let d = values.len();
    if d < MIN_UNFOLD_DIM {
        return Err(Error::Statistics(format!("need at least {MIN_UNFOLD_DIM} levels, got {d}")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = match kind {
        SpectrumKind::Circular => {
            let unit = 2.0 * PI / d as f64;
            (0..d)
                .map(|i| {
                    let g = if i + 1 < d { v[i + 1] - v[i] } else { v[0] + 2.0 * PI - v[d - 1] };
                    g / unit
                })
                .collect()
        }
        SpectrumKind::Linear => {
            let half = UNFOLD_WINDOW / 2;
            (0..d - 1)
                .map(|i| {
                    let lo = i.saturating_sub(half).min(d - UNFOLD_WINDOW);
                    let hi = lo + UNFOLD_WINDOW - 1;
                    let local = (v[hi] - v[lo]) / (hi - lo) as f64;
                    (v[i + 1] - v[i]) / local
                })
                .collect()
        }
    };
    renormalized(gaps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub chi2: f64,
    pub dof: usize,
    pub chi2_per_dof: f64,
    /// Bins after merging, as [lo, hi) with hi = infinity for the overflow.
    pub bins: Vec<(f64, f64)>,
    pub observed: Vec<usize>,
    pub expected: Vec<f64>,
    pub merged: bool,
}

/// B equal bins on [0, 3] plus an overflow bin against the Wigner surmise;
/// adjacent bins are merged until every expected count is at least 1.
pub fn wigner_chi2(sample: &SpacingSample, bins: usize) -> Result<Chi2Result> {
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let n = sample.len();
    if n < 10 * bins {
        return Err(Error::Statistics(format!("need at least {} spacings for {bins} bins, got {n}", 10 * bins)));
    }
    let width = 3.0 / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    edges.push(f64::INFINITY);
    let mut observed = vec![0usize; bins + 1];
    for &s in &sample.spacings {
        let i = ((s / width).floor() as usize).min(bins);
        observed[i] += 1;
    }
    let cdf = |x: f64| if x.is_infinite() { 1.0 } else { wigner_cdf(x) };
    let mut expected: Vec<f64> = edges.windows(2).map(|w| n as f64 * (cdf(w[1]) - cdf(w[0]))).collect();
    let mut bounds: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    let mut merged = false;
    while expected.len() > 1 {
        let Some(i) = expected.iter().position(|&e| e < 1.0) else { break };
        let j = if i + 1 < expected.len() { i + 1 } else { i - 1 };
        let (a, b) = (i.min(j), i.max(j));
        expected[a] += expected[b];
        observed[a] += observed[b];
        bounds[a] = (bounds[a].0, bounds[b].1);
        expected.remove(b);
        observed.remove(b);
        bounds.remove(b);
        merged = true;
    }
    let chi2: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    // one constraint: the total count
    let dof = expected.len().saturating_sub(1).max(1);
    Ok(Chi2Result { chi2, dof, chi2_per_dof: chi2 / dof as f64, bins: bounds, observed, expected, merged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::distributions::sample_wigner;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1};

    #[test]
    fn equally_spaced_phases() {
        let d = 32;
        let v: Vec<f64> = (0..d).map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / d as f64).collect();
        let s = unfold_values(&v, SpectrumKind::Circular).unwrap();
        assert_eq!(s.len(), d);
        for x in &s.spacings {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small() {
        assert!(unfold_values(&[0.0; 5], SpectrumKind::Linear).is_err());
    }

    #[test]
    fn unit_mean_after_unfolding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut acc = 0.0;
        let v: Vec<f64> = (0..300)
            .map(|_| {
                let e: f64 = Exp1.sample(&mut rng);
                acc += e;
                acc
            })
            .collect();
        let s = unfold_values(&v, SpectrumKind::Linear).unwrap();
        assert!((s.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wigner_sample_calibrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SpacingSample { spacings: (0..5000).map(|_| sample_wigner(&mut rng)).collect() };
        let r = wigner_chi2(&s, 10).unwrap();
        assert!(r.chi2_per_dof < 3.0, "{r:?}");
    }

    #[test]
    fn poisson_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = SpacingSample { spacings: (0..5000).map(|_| Exp1.sample(&mut rng)).collect() };
        let r = wigner_chi2(&s, 10).unwrap();
        assert!(r.chi2_per_dof > 50.0, "{r:?}");
    }
}
