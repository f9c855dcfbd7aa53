//! Grid driver: S_n, f_n and energies for every level on a uniform lambda grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{probe_column, ProbeColumn, PRECISION_FLOOR};
use crate::error::{Error, Result};
use crate::hamiltonian::ParametricHamiltonianSpec;
use crate::spectral::{align_shift, gap_in, renormalized_curvature, wrap_phase, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    /// Probe step; `None` selects [`default_delta`].
    pub delta_lambda: Option<f64>,
    /// Whether `lambda_max` itself is a grid point ([0, pi) sweeps exclude it).
    pub include_end: bool,
    pub curvature: bool,
    /// Grid points at which S is recomputed with dl/2 as a sanity check.
    pub validate_points: usize,
}

impl SweepConfig {
    pub fn new(lambda_min: f64, lambda_max: f64, points: usize) -> Self {
        SweepConfig {
            lambda_min,
            lambda_max,
            points,
            delta_lambda: None,
            include_end: true,
            curvature: false,
            validate_points: 5,
        }
    }

    pub fn step(&self) -> f64 {
        let intervals = if self.include_end { self.points - 1 } else { self.points };
        (self.lambda_max - self.lambda_min) / intervals as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let intervals = if self.include_end { self.points - 1 } else { self.points };
        let span = self.lambda_max - self.lambda_min;
        (0..self.points)
            .map(|k| self.lambda_min + span * k as f64 / intervals as f64)
            .collect()
    }
}

/// dl = h/100, clamped to at least 1e-8.
pub fn default_delta(h: f64) -> f64 {
    (h / 100.0).max(1e-8)
}

/// Level-resolved S, f and energies on a grid. Arrays are indexed
/// `[row][k]`; a row follows one level across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySweep {
    pub spec_id: String,
    pub kind: SpectrumKind,
    pub lambda_grid: Vec<f64>,
    pub delta_lambda: f64,
    pub include_end: bool,
    pub s: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub energies: Vec<Vec<f64>>,
    pub curvature: Option<Vec<Vec<f64>>>,
    /// Row r at column k is sorted level (r + row_offset[k]) mod dim. Always
    /// zero for linear spectra; for eigenphases it absorbs the relabeling
    /// when a level passes the branch cut at pi.
    pub row_offset: Vec<usize>,
    /// Number of (level, point) entries clamped by the precision floor.
    pub floored: usize,
    pub warnings: Vec<String>,
}

impl FidelitySweep {
    pub fn levels(&self) -> usize {
        self.s.len()
    }

    pub fn points(&self) -> usize {
        self.lambda_grid.len()
    }

    pub fn step(&self) -> f64 {
        if self.points() < 2 {
            return 0.0;
        }
        self.lambda_grid[1] - self.lambda_grid[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_grid[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.lambda_grid.last().expect("nonempty grid")
    }

    /// Energies of column k in sorted order.
    pub fn sorted_column(&self, k: usize) -> Vec<f64> {
        let d = self.levels();
        let off = self.row_offset[k];
        (0..d).map(|i| self.energies[(i + d - off) % d][k]).collect()
    }

    pub fn sorted_index(&self, row: usize, k: usize) -> usize {
        (row + self.row_offset[k]) % self.levels()
    }
}

pub fn sweep(spec: &ParametricHamiltonianSpec, cfg: &SweepConfig) -> Result<FidelitySweep> {
    if cfg.points < 3 {
        return Err(Error::invalid(format!("need at least 3 grid points, got {}", cfg.points)));
    }
    if !(cfg.lambda_min.is_finite() && cfg.lambda_max.is_finite() && cfg.lambda_max > cfg.lambda_min) {
        return Err(Error::invalid("need finite lambda_min < lambda_max"));
    }
    let h = cfg.step();
    let dl = cfg.delta_lambda.unwrap_or_else(|| default_delta(h));
    if !(dl > 0.0 && dl < h) {
        return Err(Error::invalid(format!("delta lambda {dl} must lie in (0, h = {h})")));
    }
    let grid = cfg.grid();
    let columns: Vec<ProbeColumn> = grid
        .par_iter()
        .map(|&x| probe_column(spec, x, dl))
        .collect::<Result<_>>()?;

    let d = spec.dim();
    let kind = spec.spectrum_kind();
    let kk = grid.len();
    let mut row_offset = vec![0usize; kk];
    if kind == SpectrumKind::Circular {
        for k in 1..kk {
            let s = align_shift(&columns[k - 1].values, &columns[k].values);
            row_offset[k] = (row_offset[k - 1] + s) % d;
        }
    }
    let mut s = vec![vec![0.0; kk]; d];
    let mut f = vec![vec![0.0; kk]; d];
    let mut energies = vec![vec![0.0; kk]; d];
    let mut floored = 0;
    for (k, col) in columns.iter().enumerate() {
        for r in 0..d {
            let i = (r + row_offset[k]) % d;
            s[r][k] = col.s[i];
            f[r][k] = col.f[i];
            energies[r][k] = col.values[i];
            floored += col.floor[i] as usize;
        }
    }

    let curvature = cfg.curvature.then(|| curvature_rows(&energies, &columns, &row_offset, &grid, kind));

    let mut warnings = Vec::new();
    let nv = cfg.validate_points.min(kk);
    for i in 0..nv {
        let k = if nv == 1 { kk / 2 } else { i * (kk - 1) / (nv - 1) };
        let half = probe_column(spec, grid[k], dl / 2.0)?;
        let shift = match kind {
            SpectrumKind::Linear => 0,
            SpectrumKind::Circular => align_shift(&columns[k].values, &half.values),
        };
        let mut worst = 0.0f64;
        for n in 0..d {
            let s1 = columns[k].s[n];
            // only levels whose 1 - f is well above rounding noise
            if s1 * dl * dl < 100.0 * PRECISION_FLOOR {
                continue;
            }
            let s2 = half.s[(n + shift) % d];
            worst = worst.max((s1 - s2).abs() / s1);
        }
        if worst >= 0.01 {
            warnings.push(format!(
                "delta lambda check failed at lambda = {}: S changes by {:.3}% when dl is halved",
                grid[k],
                100.0 * worst
            ));
        }
    }
    if floored > 0 {
        warnings.push(format!("{floored} entries below the 1-f precision floor were set to S = 0"));
    }

    Ok(FidelitySweep {
        spec_id: spec.spec_id(),
        kind,
        lambda_grid: grid,
        delta_lambda: dl,
        include_end: cfg.include_end,
        s,
        f,
        energies,
        curvature,
        row_offset,
        floored,
        warnings,
    })
}

fn curvature_rows(
    energies: &[Vec<f64>],
    columns: &[ProbeColumn],
    row_offset: &[usize],
    grid: &[f64],
    kind: SpectrumKind,
) -> Vec<Vec<f64>> {
    let d = energies.len();
    let kk = grid.len();
    let mut out = vec![vec![f64::NAN; kk]; d];
    for r in 0..d {
        // unwrap phases so the second difference sees a smooth track
        let mut track = Vec::with_capacity(kk);
        let mut acc = energies[r][0];
        track.push((grid[0], acc));
        for k in 1..kk {
            let step = match kind {
                SpectrumKind::Linear => energies[r][k] - energies[r][k - 1],
                SpectrumKind::Circular => wrap_phase(energies[r][k] - energies[r][k - 1]),
            };
            acc += step;
            track.push((grid[k], acc));
        }
        let gaps: Vec<f64> = (0..kk)
            .map(|k| {
                let i = (r + row_offset[k]) % d;
                gap_in(&columns[k].values, kind, i).unwrap_or(0.0)
            })
            .collect();
        for k in 1..kk - 1 {
            if let Ok(c) = renormalized_curvature(&track, &gaps, k) {
                out[r][k] = c;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{analytic_two_level, build_two_level};

    #[test]
    fn minimal_grid() {
        let s = build_two_level(1.0).unwrap();
        let sw = sweep(&s, &SweepConfig::new(-1.0, 1.0, 3)).unwrap();
        assert_eq!(sw.points(), 3);
        assert_eq!(sw.levels(), 2);
        assert_eq!(sw.lambda_grid, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_configs() {
        let s = build_two_level(1.0).unwrap();
        assert!(sweep(&s, &SweepConfig::new(-1.0, 1.0, 2)).is_err());
        let mut c = SweepConfig::new(-1.0, 1.0, 11);
        c.delta_lambda = Some(0.5);
        assert!(sweep(&s, &c).is_err());
    }

    #[test]
    fn open_grid_excludes_end() {
        let mut c = SweepConfig::new(0.0, 1.0, 4);
        c.include_end = false;
        assert_eq!(c.grid(), vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn two_level_sweep_matches_oracle() {
        let s = build_two_level(1.0).unwrap();
        let mut c = SweepConfig::new(-5.0, 5.0, 201);
        c.delta_lambda = Some(1e-5);
        let sw = sweep(&s, &c).unwrap();
        for (k, &x) in sw.lambda_grid.iter().enumerate() {
            let want = analytic_two_level(1.0, x).unwrap().s;
            for r in 0..2 {
                assert!((sw.s[r][k] / want - 1.0).abs() < 1e-6);
                assert!(sw.f[r][k] <= 1.0 && sw.s[r][k] >= 0.0);
            }
        }
        assert!(sw.warnings.is_empty(), "{:?}", sw.warnings);
    }
}
