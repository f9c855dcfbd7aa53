//! Peak detection in S rows, local refinement, and pairing into AC events.
//!
//! An isolated avoided crossing of half-width g gives
//! S(x) = g^2 / (8 (g^2 + x^2)^2), so S^{-1/2} is an exact parabola in x and
//! log S is one near the top. Refinement re-diagonalizes on successively
//! finer lattices `lambda_min + m h / 10^p`; fits use log S once the lattice
//! resolves the peak and S^{-1/2} before that.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::FidelitySweep;
use super::{probe_column, ProbeColumn};
use crate::error::{Error, Result};
use crate::hamiltonian::ParametricHamiltonianSpec;
use crate::spectral::{align_shift, gap_in, level_distance, wrap_phase, SpectrumKind};

/// Levels on either side used for the local mean spacing.
const SPACING_HALF_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum ThresholdRule {
    Fixed(f64),
    /// <v^2>/(8 dbar^2): only crossings with a gap below the mean spacing
    /// count (v: relative velocity of adjacent levels).
    LocalSpacing,
    /// 1/(2 w^2) with w the swept interval: every crossing narrower than the
    /// window counts. Meant for few-level models without a spacing scale.
    SweepRange,
    /// LocalSpacing when the spacing window fits in the spectrum, else
    /// SweepRange.
    Auto,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::Auto
    }
}

impl ThresholdRule {
    /// The concrete rule used for a spectrum of `dim` levels.
    pub fn resolve(self, dim: usize) -> ThresholdRule {
        match self {
            ThresholdRule::Auto if dim > 2 * SPACING_HALF_WINDOW => ThresholdRule::LocalSpacing,
            ThresholdRule::Auto => ThresholdRule::SweepRange,
            r => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPeak {
    pub row: usize,
    /// Sorted level index at column k.
    pub level: usize,
    pub k: usize,
    pub lambda: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedPeak {
    pub raw: RawPeak,
    pub lambda_star: f64,
    pub s_max: f64,
    pub depth: u32,
    /// Whether the final lattice resolved the peak (log S fit) or not
    /// (S^{-1/2} fit).
    pub resolved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub max_passes: u32,
    /// Points evaluated per pass before any extension.
    pub points: usize,
    /// Stop once the location moves by less than this fraction of the bracket.
    pub tol: f64,
    /// The lattice resolves a peak when its step is at most g_est / this.
    pub resolve_ratio: f64,
    /// Coarse peaks with g_est >= this many grid steps skip refinement.
    pub coarse_ratio: f64,
    pub refine_all: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_passes: 4,
            points: 5,
            tol: 1e-3,
            resolve_ratio: 10.0,
            coarse_ratio: 3.0,
            refine_all: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectConfig {
    pub threshold: ThresholdRule,
    pub refine: RefineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACEvent {
    pub level_pair: (usize, usize),
    pub lambda_star: f64,
    pub s_max: f64,
    pub c_est: f64,
    pub gap: f64,
    pub grid_index: usize,
    pub refinement_depth: u32,
    /// False for a peak seen in one level only.
    pub paired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub threshold: ThresholdRule,
    pub raw_peaks: usize,
    pub events: Vec<ACEvent>,
    /// Peaks dropped because refinement left their bracket.
    pub dropped: usize,
    pub warnings: Vec<String>,
}

/// Width estimate from a peak height: c = (2 S_max)^{-1/2}.
pub fn width_from_height(s_max: f64) -> f64 {
    (2.0 * s_max).sqrt().recip()
}

/// Half-width of the two-level crossing with this peak height.
fn half_width(s: f64) -> f64 {
    (8.0 * s).sqrt().recip()
}

/// Mean level spacing around sorted index `i` of one column.
fn window_spacing(values: &[f64], i: usize) -> f64 {
    let d = values.len();
    let w = (2 * SPACING_HALF_WINDOW).min(d - 1);
    let lo = i.saturating_sub(SPACING_HALF_WINDOW).min(d - 1 - w);
    (values[lo + w] - values[lo]) / w as f64
}

/// Mean (v_(i+1) - v_i)^2 along the sweep for each adjacent sorted pair
/// (i, i+1), cyclic for eigenphases. Velocities are forward differences of
/// the level tracks.
fn relative_velocity_sq(sw: &FidelitySweep) -> Vec<f64> {
    let d = sw.levels();
    let kk = sw.points();
    let pairs = match sw.kind {
        SpectrumKind::Circular => d,
        SpectrumKind::Linear => d - 1,
    };
    let step = |r: usize, k: usize| {
        let dv = sw.energies[r][k + 1] - sw.energies[r][k];
        let dv = match sw.kind {
            SpectrumKind::Circular => wrap_phase(dv),
            SpectrumKind::Linear => dv,
        };
        dv / (sw.lambda_grid[k + 1] - sw.lambda_grid[k])
    };
    let mut acc = vec![0.0; pairs];
    for k in 0..kk - 1 {
        let off = sw.row_offset[k];
        for (i, a) in acc.iter_mut().enumerate() {
            let ri = (i + d - off) % d;
            let rj = (i + 1 + d - off) % d;
            *a += (step(rj, k) - step(ri, k)).powi(2);
        }
    }
    acc.iter().map(|a| a / (kk - 1) as f64).collect()
}

/// Per-(row, k) thresholds for a rule.
///
/// LocalSpacing asks for a gap below the mean spacing dbar. A crossing of
/// gap D between levels with relative velocity v peaks at S = v^2/(8 D^2),
/// so the cut is <v^2>/(8 dbar^2); for the two-level model (v = 2) this is
/// 1/(2 dbar^2). Without the velocity the cut compares a width in lambda
/// with a spacing in energy, which fails whenever levels move slowly in
/// lambda (quasienergies against 1/F, say).
///
/// For linear spectra both scales are windowed over sorted level indices and
/// averaged along the sweep: an avoided crossing is itself a spacing
/// fluctuation, and in small models the window would otherwise be the gap
/// of the crossing being measured.
pub fn thresholds(sw: &FidelitySweep, rule: ThresholdRule) -> Vec<Vec<f64>> {
    let d = sw.levels();
    let kk = sw.points();
    let cut = |v2: f64, dbar: f64| (v2 / (8.0 * dbar * dbar)).max(f64::MIN_POSITIVE);
    match rule.resolve(d) {
        ThresholdRule::Fixed(t) => vec![vec![t; kk]; d],
        ThresholdRule::SweepRange => {
            let w = sw.lambda_max() - sw.lambda_min();
            vec![vec![0.5 / (w * w); kk]; d]
        }
        ThresholdRule::Auto => unreachable!("resolved above"),
        ThresholdRule::LocalSpacing => {
            let vsq = relative_velocity_sq(sw);
            match sw.kind {
                SpectrumKind::Circular => {
                    let dbar = 2.0 * std::f64::consts::PI / d as f64;
                    let v2 = vsq.iter().sum::<f64>() / d as f64;
                    vec![vec![cut(v2, dbar); kk]; d]
                }
                SpectrumKind::Linear => {
                    let mut mean = vec![0.0; d];
                    for k in 0..kk {
                        let col = sw.sorted_column(k);
                        for (i, m) in mean.iter_mut().enumerate() {
                            *m += window_spacing(&col, i);
                        }
                    }
                    // velocity pairs windowed like the spacings
                    let w = (2 * SPACING_HALF_WINDOW).min(d - 1);
                    (0..d)
                        .map(|i| {
                            let lo = i.saturating_sub(SPACING_HALF_WINDOW).min(d - 1 - w);
                            let v2 = vsq[lo..lo + w].iter().sum::<f64>() / w as f64;
                            // linear rows never change their sorted index
                            vec![cut(v2, mean[i] / kk as f64); kk]
                        })
                        .collect()
                }
            }
        }
    }
}

/// All (row, k) with S >= threshold, S[k] > S[k-1] and S[k] >= S[k+1].
pub fn detect_peaks(sw: &FidelitySweep, s_threshold: f64) -> Result<Vec<RawPeak>> {
    if !(s_threshold > 0.0) {
        return Err(Error::invalid(format!("threshold must be > 0, got {s_threshold}")));
    }
    detect_peaks_rule(sw, ThresholdRule::Fixed(s_threshold))
}

pub fn detect_peaks_rule(sw: &FidelitySweep, rule: ThresholdRule) -> Result<Vec<RawPeak>> {
    if let ThresholdRule::Fixed(t) = rule {
        if !(t > 0.0) {
            return Err(Error::invalid(format!("threshold must be > 0, got {t}")));
        }
    }
    let th = thresholds(sw, rule);
    let kk = sw.points();
    let mut out = Vec::new();
    for (row, s) in sw.s.iter().enumerate() {
        for k in 1..kk - 1 {
            if s[k] >= th[row][k] && s[k] > s[k - 1] && s[k] >= s[k + 1] {
                out.push(RawPeak {
                    row,
                    level: sw.sorted_index(row, k),
                    k,
                    lambda: sw.lambda_grid[k],
                    s: s[k],
                });
            }
        }
    }
    Ok(out)
}

/// Vertex of the parabola through (-1, y0), (0, y1), (1, y2): (offset, value).
fn vertex(y0: f64, y1: f64, y2: f64) -> Option<(f64, f64)> {
    let curv = y0 - 2.0 * y1 + y2;
    if !(curv.abs() > 0.0) || !curv.is_finite() {
        return None;
    }
    let t = 0.5 * (y0 - y2) / curv;
    Some((t, y1 - 0.25 * (y0 - y2) * t))
}

/// Log-S fit through three equally spaced samples centred on `x1`.
fn fit_log(x1: f64, step: f64, s: [f64; 3]) -> Option<(f64, f64)> {
    if s.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let (t, y) = vertex(s[0].ln(), s[1].ln(), s[2].ln())?;
    if !(t.abs() <= 1.0) {
        return None;
    }
    Some((x1 + t * step, y.exp()))
}

/// S^{-1/2} fit; exact for an isolated two-level crossing at any spacing.
fn fit_inv_sqrt(x1: f64, step: f64, s: [f64; 3]) -> Option<(f64, f64)> {
    if s.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let q = s.map(|v| v.sqrt().recip());
    let (t, qmin) = vertex(q[0], q[1], q[2])?;
    if !(t.abs() <= 1.0) || !(qmin > 0.0) {
        return None;
    }
    Some((x1 + t * step, 1.0 / (qmin * qmin)))
}

/// Fit of the best three points: log S when resolved, S^{-1/2} otherwise,
/// falling back to the sample itself.
fn fit_peak(x1: f64, step: f64, s: [f64; 3], resolved: bool) -> (f64, f64) {
    let first = if resolved { fit_log(x1, step, s) } else { fit_inv_sqrt(x1, step, s) };
    first
        .or_else(|| if resolved { fit_inv_sqrt(x1, step, s) } else { fit_log(x1, step, s) })
        .unwrap_or((x1, s[1]))
}

/// Probe columns on the refinement lattices of one sweep, with the level
/// labels of a reference coarse column carried along.
struct Lattice<'a> {
    spec: &'a ParametricHamiltonianSpec,
    origin: f64,
    h: f64,
    dl: f64,
    kind: SpectrumKind,
    reference: Vec<f64>,
    cache: HashMap<(u32, i64), (ProbeColumn, usize)>,
}

impl<'a> Lattice<'a> {
    fn new(spec: &'a ParametricHamiltonianSpec, origin: f64, h: f64, dl: f64, reference: Vec<f64>) -> Self {
        Lattice { spec, origin, h, dl, kind: spec.spectrum_kind(), reference, cache: HashMap::new() }
    }

    fn step(&self, pass: u32) -> f64 {
        self.h / 10f64.powi(pass as i32)
    }

    fn x(&self, pass: u32, m: i64) -> f64 {
        self.origin + m as f64 * self.step(pass)
    }

    /// S of reference level n at lattice point (pass, m). The probe step
    /// shrinks with the lattice so it stays well below the local scale.
    fn s(&mut self, pass: u32, m: i64, n: usize) -> Result<f64> {
        if !self.cache.contains_key(&(pass, m)) {
            let dl = self.dl.min(self.step(pass) / 10.0);
            let col = probe_column(self.spec, self.x(pass, m), dl)?;
            let shift = match self.kind {
                SpectrumKind::Linear => 0,
                SpectrumKind::Circular => align_shift(&self.reference, &col.values),
            };
            self.cache.insert((pass, m), (col, shift));
        }
        let (col, shift) = &self.cache[&(pass, m)];
        Ok(col.s[(n + shift) % col.s.len()])
    }

    /// Refine the peak of reference level `n` starting from `start` with
    /// height `s_start`, staying inside [lo, hi].
    fn refine(&mut self, n: usize, start: f64, s_start: f64, lo: f64, hi: f64, cfg: &RefineConfig) -> Result<(f64, f64, u32, bool)> {
        let bracket = hi - lo;
        let slack = 1e-9 * bracket;
        let diverged = || Error::RefinementDiverged { level: n, lo, hi };
        let (mut est, mut s_est) = (start, s_start);
        let mut resolved = false;
        let mut depth = 0;
        let half = (cfg.points.max(3) / 2) as i64;
        for pass in 1..=cfg.max_passes {
            let step = self.step(pass);
            let m0 = ((est - self.origin) / step).round() as i64;
            let mut lo_m = m0 - half;
            let mut hi_m = m0 + half;
            let mut vals: Vec<f64> = (lo_m..=hi_m).map(|m| self.s(pass, m, n)).collect::<Result<_>>()?;
            let mut extended = 0;
            let best = loop {
                let (ib, _) = vals
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
                if ib == 0 {
                    lo_m -= 1;
                    if self.x(pass, lo_m) < lo - slack || extended > 40 {
                        return Err(diverged());
                    }
                    vals.insert(0, self.s(pass, lo_m, n)?);
                } else if ib == vals.len() - 1 {
                    hi_m += 1;
                    if self.x(pass, hi_m) > hi + slack || extended > 40 {
                        return Err(diverged());
                    }
                    vals.push(self.s(pass, hi_m, n)?);
                } else {
                    break ib;
                }
                extended += 1;
            };
            let three = [vals[best - 1], vals[best], vals[best + 1]];
            resolved = step <= half_width(three[1]) / cfg.resolve_ratio;
            let (x, s) = fit_peak(self.x(pass, lo_m + best as i64), step, three, resolved);
            let moved = (x - est).abs();
            est = x;
            s_est = s;
            depth = pass;
            if resolved && moved < cfg.tol * bracket {
                break;
            }
        }
        if est < lo - slack || est > hi + slack {
            return Err(diverged());
        }
        Ok((est, s_est, depth, resolved))
    }
}

/// Refine one peak of sorted level `n` inside [lo, hi] from scratch.
///
/// The coarse cell is taken as the bracket itself: S is sampled at its ends
/// and midpoint to seed the finer lattices.
pub fn refine_peak(
    spec: &ParametricHamiltonianSpec,
    n: usize,
    lo: f64,
    hi: f64,
    dl: f64,
    cfg: &RefineConfig,
) -> Result<RefinedPeak> {
    if n >= spec.dim() {
        return Err(Error::invalid(format!("level {n} out of range")));
    }
    if !(hi > lo) || !(dl > 0.0) {
        return Err(Error::invalid("need lo < hi and dl > 0"));
    }
    let h = 0.5 * (hi - lo);
    let mid = lo + h;
    let centre = probe_column(spec, mid, dl)?;
    let mut lat = Lattice::new(spec, lo, h, dl, centre.values.clone());
    let coarse = [lat.s(0, 0, n)?, centre.s[n], lat.s(0, 2, n)?];
    let (start, s0) = fit_inv_sqrt(mid, h, coarse).unwrap_or((mid, coarse[1]));
    let (x, s, depth, resolved) = lat.refine(n, start.clamp(lo, hi), s0, lo, hi, cfg)?;
    Ok(RefinedPeak {
        raw: RawPeak { row: n, level: n, k: 1, lambda: mid, s: coarse[1] },
        lambda_star: x,
        s_max: s,
        depth,
        resolved,
    })
}

fn coarse_triplet(sw: &FidelitySweep, p: &RawPeak) -> [f64; 3] {
    let r = &sw.s[p.row];
    [r[p.k - 1], r[p.k], r[p.k + 1]]
}

fn rows_adjacent(a: usize, b: usize, d: usize, kind: SpectrumKind) -> bool {
    let diff = a.abs_diff(b);
    diff <= 1 || (kind == SpectrumKind::Circular && diff == d - 1)
}

/// Group peaks that are close in both row and column so they share probes.
fn clusters(peaks: &[RawPeak], d: usize, kind: SpectrumKind) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..peaks.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by_key(|&i| (peaks[i].k, peaks[i].row));
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            if peaks[j].k > peaks[i].k + 2 {
                break;
            }
            if rows_adjacent(peaks[i].row, peaks[j].row, d, kind) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = HashMap::new();
    for i in 0..peaks.len() {
        let r = find(&mut parent, i);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Coarse-level estimate from the sweep row alone.
fn coarse_estimate(sw: &FidelitySweep, p: &RawPeak, cfg: &RefineConfig) -> RefinedPeak {
    let h = sw.step();
    let three = coarse_triplet(sw, p);
    let resolved = h <= half_width(p.s) / cfg.resolve_ratio;
    let (x, s) = fit_peak(p.lambda, h, three, resolved);
    RefinedPeak { raw: *p, lambda_star: x, s_max: s, depth: 0, resolved }
}

fn needs_refinement(sw: &FidelitySweep, p: &RawPeak, cfg: &RefineConfig) -> bool {
    cfg.refine_all || half_width(p.s) < cfg.coarse_ratio * sw.step()
}

/// Refine every raw peak: well-sampled peaks from the sweep row, the rest by
/// re-diagonalization. Returns refined peaks in input order (None where the
/// refinement diverged).
pub fn refine_all(
    spec: &ParametricHamiltonianSpec,
    sw: &FidelitySweep,
    peaks: &[RawPeak],
    cfg: &RefineConfig,
) -> Result<Vec<Option<RefinedPeak>>> {
    let d = sw.levels();
    let h = sw.step();
    let mut out: Vec<Option<RefinedPeak>> = peaks.iter().map(|p| Some(coarse_estimate(sw, p, cfg))).collect();
    let todo: Vec<usize> = (0..peaks.len()).filter(|&i| needs_refinement(sw, &peaks[i], cfg)).collect();
    let subset: Vec<RawPeak> = todo.iter().map(|&i| peaks[i]).collect();
    let groups = clusters(&subset, d, sw.kind);
    let results: Vec<Vec<(usize, Result<RefinedPeak>)>> = groups
        .par_iter()
        .map(|g| {
            let k_ref = subset[g[0]].k;
            let mut lat = Lattice::new(spec, sw.lambda_min(), h, sw.delta_lambda, sw.sorted_column(k_ref));
            g.iter()
                .map(|&j| {
                    let p = subset[j];
                    let n = sw.sorted_index(p.row, k_ref);
                    let three = coarse_triplet(sw, &p);
                    let (start, s0) = fit_inv_sqrt(p.lambda, h, three).unwrap_or((p.lambda, p.s));
                    let lo = sw.lambda_grid[p.k - 1];
                    let hi = sw.lambda_grid[p.k + 1];
                    let r = lat.refine(n, start.clamp(lo, hi), s0, lo, hi, cfg).map(|(x, s, depth, resolved)| {
                        RefinedPeak { raw: p, lambda_star: x, s_max: s, depth, resolved }
                    });
                    (todo[j], r)
                })
                .collect()
        })
        .collect();
    for (i, r) in results.into_iter().flatten() {
        match r {
            Ok(p) => out[i] = Some(p),
            Err(Error::RefinementDiverged { .. }) => out[i] = None,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Merge refined peaks of adjacent rows into single events; leftovers
/// become unpaired events.
///
/// Peaks pair when they lie within one grid step, or within a quarter of
/// the narrower width estimate: when a third level takes part in a wide
/// crossing the two maxima separate by a small fraction of the width.
pub fn pair_and_estimate(
    spec: &ParametricHamiltonianSpec,
    sw: &FidelitySweep,
    peaks: &[RefinedPeak],
) -> Result<Vec<ACEvent>> {
    let d = sw.levels();
    let h = sw.step();
    let kind = sw.kind;
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in peaks.iter().enumerate() {
        for (j, b) in peaks.iter().enumerate() {
            let next = match kind {
                SpectrumKind::Linear => a.raw.row + 1,
                SpectrumKind::Circular => (a.raw.row + 1) % d,
            };
            if i == j || b.raw.row != next || (d == 2 && kind == SpectrumKind::Circular && a.raw.row == 1) {
                continue;
            }
            let dx = (a.lambda_star - b.lambda_star).abs();
            let tol = h.max(0.25 * width_from_height(a.s_max.max(b.s_max)));
            if dx < tol {
                cand.push((dx, i, j));
            }
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = vec![false; peaks.len()];
    let mut events = Vec::new();
    for (_, i, j) in cand {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        let (a, b) = (&peaks[i], &peaks[j]);
        let x = 0.5 * (a.lambda_star + b.lambda_star);
        let s = 0.5 * (a.s_max + b.s_max);
        events.push(make_event(spec, sw, a.raw.row, x, s, a.depth.max(b.depth), true)?);
    }
    for (i, p) in peaks.iter().enumerate() {
        if !used[i] {
            events.push(make_event(spec, sw, p.raw.row, p.lambda_star, p.s_max, p.depth, false)?);
        }
    }
    events.sort_by(|a, b| {
        a.lambda_star
            .total_cmp(&b.lambda_star)
            .then(a.level_pair.cmp(&b.level_pair))
    });
    Ok(events)
}

fn make_event(
    spec: &ParametricHamiltonianSpec,
    sw: &FidelitySweep,
    row: usize,
    x: f64,
    s: f64,
    depth: u32,
    paired: bool,
) -> Result<ACEvent> {
    let d = sw.levels();
    let kk = sw.points();
    let h = sw.step();
    let k = (((x - sw.lambda_min()) / h).round().max(0.0) as usize).min(kk - 1);
    let n = sw.sorted_index(row, k);
    let values = spec.values(x)?;
    // the sorted index of this level at x, relative to column k
    let at = match sw.kind {
        SpectrumKind::Linear => n,
        SpectrumKind::Circular => (n + align_shift(&sw.sorted_column(k), &values)) % d,
    };
    let (level_pair, gap) = if paired {
        let upper = match sw.kind {
            SpectrumKind::Linear => at + 1,
            SpectrumKind::Circular => (at + 1) % d,
        };
        let up = upper.min(d - 1);
        ((n, (n + 1) % d), level_distance(sw.kind, values[at], values[up]))
    } else {
        ((n, n), gap_in(&values, sw.kind, at)?)
    };
    Ok(ACEvent {
        level_pair,
        lambda_star: x,
        s_max: s,
        c_est: width_from_height(s),
        gap,
        grid_index: k,
        refinement_depth: depth,
        paired,
    })
}

/// Full pipeline on a finished sweep: detect, refine, pair.
pub fn detect_events(spec: &ParametricHamiltonianSpec, sw: &FidelitySweep, cfg: &DetectConfig) -> Result<Detection> {
    if spec.dim() != sw.levels() {
        return Err(Error::invalid("sweep and spec dimensions differ"));
    }
    let raw = detect_peaks_rule(sw, cfg.threshold)?;
    let refined = refine_all(spec, sw, &raw, &cfg.refine)?;
    let dropped = refined.iter().filter(|r| r.is_none()).count();
    let kept: Vec<RefinedPeak> = refined.into_iter().flatten().collect();
    let events = pair_and_estimate(spec, sw, &kept)?;
    let mut warnings = Vec::new();
    if dropped > 0 {
        warnings.push(format!("{dropped} peaks dropped: refinement left the bracket"));
    }
    Ok(Detection { threshold: cfg.threshold.resolve(sw.levels()), raw_peaks: raw.len(), events, dropped, warnings })
}

/// Full width at half maximum of the S row around a peak, by linear
/// interpolation of the coarse row against the given maximum.
pub fn peak_fwhm(sw: &FidelitySweep, row: usize, k: usize, s_max: f64) -> Option<f64> {
    let s = &sw.s[row];
    let x = &sw.lambda_grid;
    let half = 0.5 * s_max;
    let mut i = k;
    while i > 0 && s[i - 1] > half {
        i -= 1;
    }
    if i == 0 {
        return None;
    }
    let left = x[i - 1] + (half - s[i - 1]) / (s[i] - s[i - 1]) * (x[i] - x[i - 1]);
    let mut j = k;
    while j + 1 < s.len() && s[j + 1] > half {
        j += 1;
    }
    if j + 1 == s.len() {
        return None;
    }
    let right = x[j] + (s[j] - half) / (s[j] - s[j + 1]) * (x[j + 1] - x[j]);
    Some(right - left)
}
