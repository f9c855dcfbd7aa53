//! Subcommand bodies and the files they write.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use super::{
    AnalysisConfig, BoseHubbardConfig, Boundary, CommandConfig, Outcome, RmtConfig, RunConfig, TripleConfig,
    TwoLevelConfig, TOOL_VERSION,
};
use crate::bose_hubbard::{ConvergenceOptions, FloquetFamily, FloquetOptions, HardwallFamily};
use crate::error::{Error, Result};
use crate::fidelity::io::{sidecar, sweep_csv, RunStamp, SweepSidecar};
use crate::fidelity::{
    ac_density, detect_events, peak_fwhm, sweep, uniform_edges, DetectConfig, Detection, FidelitySweep,
    SweepConfig, ThresholdRule,
};
use crate::hamiltonian::{analytic_two_level, build_triple, build_two_level, ParametricHamiltonianSpec};
use crate::rmt::{run_ensemble, EnsembleConfig};
use crate::stats::{
    fit_gamma, goe_width_cdf, ks_distance, normalize_unit_mean, unfold_values, wigner_chi2, Histogram,
    SpacingSample,
};

/// Numeric S against the closed form: largest relative error allowed.
pub const ORACLE_TOLERANCE: f64 = 1e-5;

/// Writes stamped files into one directory.
struct Sink<'a> {
    dir: &'a Path,
    stamp: RunStamp,
}

impl<'a> Sink<'a> {
    fn new(dir: &'a Path, cfg: &RunConfig) -> Self {
        let stamp = RunStamp {
            tool_version: TOOL_VERSION.into(),
            config_hash: cfg.hash(),
            config: serde_json::to_value(cfg).expect("config serializes"),
        };
        Sink { dir, stamp }
    }

    fn write(&self, name: &str, text: &str, out: &mut Vec<PathBuf>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        out.push(path);
        Ok(())
    }

    fn csv(&self, name: &str, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
        let head = format!("# {} config {}\n", self.stamp.tool_version, self.stamp.config_hash);
        self.write(name, &(head + body), out)
    }

    fn json(&self, name: &str, body: Value, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut doc = Map::new();
        doc.insert("tool_version".into(), self.stamp.tool_version.clone().into());
        doc.insert("config_hash".into(), self.stamp.config_hash.clone().into());
        match body {
            Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json") + "\n";
        self.write(name, &text, out)
    }

    fn sweep(
        &self,
        stem: &str,
        sw: &FidelitySweep,
        spec: &ParametricHamiltonianSpec,
        out: &mut Vec<PathBuf>,
    ) -> Result<()> {
        self.csv(&format!("{stem}.csv"), &sweep_csv(sw), out)?;
        let mut meta = sidecar(sw, spec);
        meta.run = Some(self.stamp.clone());
        let text = serde_json::to_string_pretty(&meta).expect("json") + "\n";
        self.write(&format!("{stem}.json"), &text, out)
    }

    /// Events plus, over the sweep range, the AC density.
    fn detection(
        &self,
        stem: &str,
        det: &Detection,
        sw: &FidelitySweep,
        bins: usize,
        out: &mut Vec<PathBuf>,
    ) -> Result<()> {
        let body = json!({
            "threshold": det.threshold,
            "raw_peaks": det.raw_peaks,
            "dropped": det.dropped,
            "warnings": det.warnings,
            "events": det.events,
        });
        self.json(&format!("{stem}_events.json"), body, out)?;
        let edges = uniform_edges(sw.lambda_min(), sw.lambda_max(), bins)?;
        let hist = ac_density(&det.events, &edges, sw.levels())?;
        self.csv(&format!("{stem}_density.csv"), &hist.to_csv(), out)
    }

    fn manifest(&self, artifacts: &[PathBuf], out: &mut Vec<PathBuf>) -> Result<()> {
        let names: Vec<String> = artifacts
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            .collect();
        self.json("manifest.json", json!({ "config": self.stamp.config, "artifacts": names }), out)
    }
}

fn rule(a: &AnalysisConfig) -> ThresholdRule {
    a.threshold.map_or(ThresholdRule::Auto, ThresholdRule::Fixed)
}

fn detect(spec: &ParametricHamiltonianSpec, sw: &FidelitySweep, a: &AnalysisConfig) -> Result<Detection> {
    detect_events(spec, sw, &DetectConfig { threshold: rule(a), ..Default::default() })
}

pub(super) fn run(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let sink = Sink::new(dir, cfg);
    let mut files = Vec::new();
    let failed_check = match &cfg.command {
        CommandConfig::TwoLevel(c) => two_level(cfg, c, &sink, &mut files)?,
        CommandConfig::Triple(c) => triple(cfg, c, &sink, &mut files)?,
        CommandConfig::Rmt(c) => rmt(cfg, c, &sink, &mut files)?,
        CommandConfig::BoseHubbard(c) => bose_hubbard(cfg, c, &sink, &mut files)?,
        CommandConfig::Analyze(c) => analyze(cfg, &c.inputs, &sink, &mut files)?,
    };
    let listed = files.clone();
    sink.manifest(&listed, &mut files)?;
    Ok(Outcome { artifacts: files, failed_check })
}

fn sweep_config(cfg: &RunConfig, lo: f64, hi: f64, curvature: bool) -> SweepConfig {
    let mut sc = SweepConfig::new(lo, hi, cfg.grid);
    sc.delta_lambda = cfg.delta_lambda;
    sc.curvature = curvature;
    sc
}

fn two_level(cfg: &RunConfig, c: &TwoLevelConfig, sink: &Sink, files: &mut Vec<PathBuf>) -> Result<Option<String>> {
    let spec = build_two_level(c.g)?;
    let sw = sweep(&spec, &sweep_config(cfg, c.lambda_min, c.lambda_max, true))?;
    sink.sweep("two_level", &sw, &spec, files)?;
    let det = detect(&spec, &sw, &cfg.analysis)?;
    sink.detection("two_level", &det, &sw, cfg.analysis.bins, files)?;

    let mut max_rel = 0.0f64;
    for row in &sw.s {
        for (k, &s) in row.iter().enumerate() {
            let exact = analytic_two_level(c.g, sw.lambda_grid[k])?.s;
            max_rel = max_rel.max((s - exact).abs() / exact);
        }
    }
    let best = det.events.iter().max_by(|a, b| a.s_max.total_cmp(&b.s_max));
    let fwhm = best.and_then(|e| peak_fwhm(&sw, e.level_pair.0, e.grid_index, e.s_max));
    let exact = analytic_two_level(c.g, 0.0)?;
    let passed = max_rel < ORACLE_TOLERANCE;
    let report = json!({
        "g": c.g,
        "expected": { "c": 2.0 * c.g, "s_max": exact.s, "fwhm": exact.fwhm },
        "numeric": {
            "max_rel_error": max_rel,
            "events": det.events.len(),
            "c_est": best.map(|e| e.c_est),
            "s_max": best.map(|e| e.s_max),
            "lambda_star": best.map(|e| e.lambda_star),
            "fwhm": fwhm,
        },
        "tolerance": ORACLE_TOLERANCE,
        "passed": passed,
        "delta_lambda": sw.delta_lambda,
        "warnings": sw.warnings,
    });
    sink.json("two_level_report.json", report, files)?;
    Ok((!passed).then(|| format!("max relative error {max_rel:e} exceeds {ORACLE_TOLERANCE:e}")))
}

fn triple(cfg: &RunConfig, c: &TripleConfig, sink: &Sink, files: &mut Vec<PathBuf>) -> Result<Option<String>> {
    let spec = build_triple(c.a, c.b, c.c_coupling)?;
    let sw = sweep(&spec, &sweep_config(cfg, c.lambda_min, c.lambda_max, true))?;
    sink.sweep("triple", &sw, &spec, files)?;
    let det = detect(&spec, &sw, &cfg.analysis)?;
    sink.detection("triple", &det, &sw, cfg.analysis.bins, files)?;
    Ok(None)
}

/// Variance of unit-mean GOE widths, pi/2 - 1.
pub const GOE_WIDTH_VARIANCE: f64 = PI / 2.0 - 1.0;

fn rmt(cfg: &RunConfig, c: &RmtConfig, sink: &Sink, files: &mut Vec<PathBuf>) -> Result<Option<String>> {
    let ec = EnsembleConfig {
        dim: c.dim,
        n_pairs: c.pairs,
        grid: cfg.grid,
        delta_lambda: cfg.delta_lambda,
        threshold: rule(&cfg.analysis),
        base_seed: cfg.seed,
        variance_scale: 1.0,
    };
    let ens = run_ensemble(&ec)?;
    sink.json("rmt_ensemble.json", json!({ "ensemble": ens }), files)?;
    let (norm, mean) = normalize_unit_mean(&ens.widths)?;
    let var = norm.iter().map(|x| (x - 1.0) * (x - 1.0)).sum::<f64>() / norm.len() as f64;
    let ks = ks_distance(&norm, |x| goe_width_cdf(x).unwrap_or(1.0))?;

    let hist = Histogram::new(&norm, 4.0, cfg.analysis.bins);
    let dens = hist.density(norm.len());
    let mut text = String::from("lo,hi,count,density,goe_pdf\n");
    for (i, &n) in hist.counts.iter().enumerate() {
        let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
        let mid = 0.5 * (lo + hi);
        let pdf = 2.0 / PI * (-mid * mid / PI).exp();
        text.push_str(&format!("{lo},{hi},{n},{},{pdf}\n", dens[i]));
    }
    sink.csv("rmt_width_hist.csv", &text, files)?;

    let mut sorted = norm.clone();
    sorted.sort_by(f64::total_cmp);
    let mut text = String::from("c,ecdf,goe_cdf\n");
    let n = sorted.len() as f64;
    for (i, x) in sorted.iter().enumerate() {
        text.push_str(&format!("{x},{},{}\n", (i + 1) as f64 / n, goe_width_cdf(*x).unwrap_or(1.0)));
    }
    sink.csv("rmt_ecdf.csv", &text, files)?;

    let report = json!({
        "n_widths": norm.len(),
        "mean_width": mean,
        "ks_distance": ks,
        "normalized_variance": var,
        "goe_variance": GOE_WIDTH_VARIANCE,
        "pairs_ok": ens.provenance.len(),
        "pairs_failed": ens.failures.len(),
        "rng": ens.rng,
    });
    sink.json("rmt_report.json", report, files)?;
    Ok(None)
}

fn bh_spec(c: &BoseHubbardConfig) -> Result<ParametricHamiltonianSpec> {
    match c.boundary {
        Boundary::Periodic => {
            let opts = FloquetOptions { steps: c.steps, basis_cap: c.basis_cap, ..Default::default() };
            let mut fam = FloquetFamily::new(c.n, c.l, c.kappa, c.j, c.u, opts)?;
            if c.steps == 0 {
                fam = fam.calibrated(c.inv_f_min, c.inv_f_max, &ConvergenceOptions::default())?;
            }
            Ok(ParametricHamiltonianSpec::BoseHubbardFloquet(Arc::new(fam)))
        }
        Boundary::Hardwall => Ok(ParametricHamiltonianSpec::BoseHubbardHardwall(Arc::new(HardwallFamily::new(
            c.n,
            c.l,
            c.j,
            c.u,
            c.basis_cap,
        )?))),
    }
}

/// Events, AC density and pooled-spacing chi-squared inside [lo, hi).
pub fn window_summary(sw: &FidelitySweep, det: &Detection, lo: f64, hi: f64, chi2_bins: usize) -> Value {
    let d = sw.levels();
    let events = det.events.iter().filter(|e| e.lambda_star >= lo && e.lambda_star < hi).count();
    let rho = events as f64 / d as f64 / (hi - lo);
    let samples: Result<Vec<SpacingSample>> = (0..sw.points())
        .filter(|&k| sw.lambda_grid[k] >= lo && sw.lambda_grid[k] < hi)
        .map(|k| unfold_values(&sw.sorted_column(k), sw.kind))
        .collect();
    let chi2 = samples.and_then(|s| SpacingSample::pooled(&s)).and_then(|p| wigner_chi2(&p, chi2_bins));
    let (chi2, err) = match chi2 {
        Ok(r) => (serde_json::to_value(r).expect("json"), Value::Null),
        Err(e) => (Value::Null, Value::String(e.to_string())),
    };
    json!({ "lo": lo, "hi": hi, "events": events, "rho": rho, "chi2": chi2, "chi2_error": err })
}

fn bose_hubbard(
    cfg: &RunConfig,
    c: &BoseHubbardConfig,
    sink: &Sink,
    files: &mut Vec<PathBuf>,
) -> Result<Option<String>> {
    let spec = bh_spec(c)?;
    let sw = sweep(&spec, &sweep_config(cfg, c.inv_f_min, c.inv_f_max, false))?;
    sink.sweep("bose_hubbard", &sw, &spec, files)?;
    let det = detect(&spec, &sw, &cfg.analysis)?;
    sink.detection("bose_hubbard", &det, &sw, cfg.analysis.bins, files)?;
    let windows: Vec<Value> = c.windows.iter().map(|&(lo, hi)| window_summary(&sw, &det, lo, hi, c.chi2_bins)).collect();
    let gamma = if c.fit_gamma {
        let widths: Vec<f64> = det.events.iter().map(|e| e.c_est).collect();
        match normalize_unit_mean(&widths).and_then(|(n, _)| fit_gamma(&n)) {
            Ok(f) => serde_json::to_value(f).expect("json"),
            Err(e) => json!({ "error": e.to_string() }),
        }
    } else {
        Value::Null
    };
    let steps = match &spec {
        ParametricHamiltonianSpec::BoseHubbardFloquet(f) => Some(f.steps),
        _ => None,
    };
    let report = json!({
        "dim": sw.levels(),
        "steps": steps,
        "events": det.events.len(),
        "windows": windows,
        "gamma_fit": gamma,
        "warnings": sw.warnings,
    });
    sink.json("bose_hubbard_report.json", report, files)?;
    Ok(None)
}

fn analyze(cfg: &RunConfig, inputs: &[PathBuf], dir_sink: &Sink, files: &mut Vec<PathBuf>) -> Result<Option<String>> {
    for input in inputs {
        let json_path = input.with_extension("json");
        let meta_text = std::fs::read_to_string(&json_path)
            .map_err(|e| Error::Io(format!("{}: {e}", json_path.display())))?;
        let meta: SweepSidecar =
            serde_json::from_str(&meta_text).map_err(|e| Error::Parse(format!("{}: {e}", json_path.display())))?;
        let (sw, spec) = crate::fidelity::io::read_sweep(input)
            .map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", input.display())),
                e => e,
            })?;
        // Stamp as the run that made the sweep would have, with the new
        // analysis settings.
        let source = meta.run.and_then(|r| serde_json::from_value::<RunConfig>(r.config).ok());
        let derived = match source {
            Some(mut src) => {
                src.analysis = cfg.analysis.clone();
                src
            }
            None => cfg.clone(),
        };
        let sink = Sink::new(dir_sink.dir, &derived);
        let stem = input.file_stem().map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
        let det = detect(&spec, &sw, &cfg.analysis)?;
        sink.detection(&stem, &det, &sw, cfg.analysis.bins, files)?;
    }
    Ok(None)
}
