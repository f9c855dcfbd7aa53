//! Distribution-level analysis of widths and spacings.

pub mod distributions;
pub mod fit;
pub mod spacing;

pub use distributions::{
    goe_width_cdf, mixture_cdf, mixture_pdf, sample_goe_width, sample_mixture, sample_wigner, wigner_cdf,
    wigner_pdf,
};
pub use fit::{fit_gamma, ks_distance, normalize_unit_mean, FitMethod, MixtureFit};
pub use spacing::{unfold_spacings, unfold_values, wigner_chi2, Chi2Result, SpacingSample};

use serde::{Deserialize, Serialize};

/// Histogram on [0, max) with equal bins, plus the count beyond `max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub overflow: usize,
}

impl Histogram {
    pub fn new(sample: &[f64], max: f64, bins: usize) -> Self {
        let w = max / bins as f64;
        let mut counts = vec![0; bins];
        let mut overflow = 0;
        for &x in sample {
            let i = (x / w).floor();
            if i >= 0.0 && (i as usize) < bins {
                counts[i as usize] += 1;
            } else {
                overflow += 1;
            }
        }
        Histogram { edges: (0..=bins).map(|i| i as f64 * w).collect(), counts, overflow }
    }

    /// Normalized so the histogram integrates to the in-range fraction.
    pub fn density(&self, n: usize) -> Vec<f64> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 / (n as f64 * (self.edges[i + 1] - self.edges[i])))
            .collect()
    }
}

/// Sorted sample paired with i/n.
pub fn ecdf(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
}
