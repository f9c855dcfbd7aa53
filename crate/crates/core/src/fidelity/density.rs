//! AC density: rho(lambda) d lambda = N_AC(lambda) / dim H.

use serde::{Deserialize, Serialize};

use super::peaks::ACEvent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACDensityHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub dim_hilbert: usize,
    pub density: Vec<f64>,
    /// Events outside [first edge, last edge].
    pub overflow: usize,
}

impl ACDensityHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.overflow
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lo,hi,count,density\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", self.bin_edges[i], self.bin_edges[i + 1], c, self.density[i]));
        }
        s
    }
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::invalid("need bins > 0 and lo < hi"));
    }
    Ok((0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect())
}

/// Bins are half-open [e_i, e_{i+1}) except the last, which includes its
/// upper edge.
pub fn ac_density(events: &[ACEvent], edges: &[f64], dim_hilbert: usize) -> Result<ACDensityHistogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("bin edges must be strictly increasing, at least two"));
    }
    if dim_hilbert == 0 {
        return Err(Error::invalid("dim_hilbert must be positive"));
    }
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    let mut overflow = 0;
    for e in events {
        let x = e.lambda_star;
        if !(x >= edges[0] && x <= edges[nb]) {
            overflow += 1;
            continue;
        }
        let i = edges.partition_point(|&b| b <= x).saturating_sub(1).min(nb - 1);
        counts[i] += 1;
    }
    let density = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| c as f64 / (dim_hilbert as f64 * (edges[i + 1] - edges[i])))
        .collect();
    Ok(ACDensityHistogram { bin_edges: edges.to_vec(), counts, dim_hilbert, density, overflow })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(x: f64) -> ACEvent {
        ACEvent {
            level_pair: (0, 1),
            lambda_star: x,
            s_max: 1.0,
            c_est: 0.5f64.sqrt(),
            gap: 0.7,
            grid_index: 0,
            refinement_depth: 0,
            paired: true,
        }
    }

    #[test]
    fn single_event() {
        let h = ac_density(&[ev(0.5)], &[0.0, 1.0], 2).unwrap();
        assert_eq!(h.density, vec![0.5]);
    }

    #[test]
    fn empty_and_overflow() {
        let e = uniform_edges(0.0, 4.0, 4).unwrap();
        let h = ac_density(&[], &e, 3).unwrap();
        assert!(h.density.iter().all(|&d| d == 0.0));
        let h = ac_density(&[ev(-1.0), ev(4.0), ev(3.999), ev(1.0)], &e, 3).unwrap();
        assert_eq!(h.counts, vec![0, 1, 0, 2]);
        assert_eq!(h.overflow, 1);
        for i in 0..4 {
            let back = h.density[i] * (e[i + 1] - e[i]) * 3.0;
            assert_eq!(back.round() as usize, h.counts[i]);
        }
    }
}
