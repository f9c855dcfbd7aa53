//! Sweep persistence: a CSV table plus a JSON sidecar, and event lists.
//!
//! The CSV has one line per grid point: `lambda, E_0.., S_0.., F_0..` and,
//! when present, `C_0..`. Columns follow tracked rows, not sorted indices;
//! the sidecar's `row_offset` maps between the two. Floats are written in
//! shortest round-trip form so a reloaded sweep is bit-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::peaks::ACEvent;
use super::sweep::FidelitySweep;
use crate::error::{Error, Result};
use crate::hamiltonian::{ParametricHamiltonianSpec, SpecWire};
use crate::spectral::SpectrumKind;

pub const SIDECAR_VERSION: u32 = 1;

/// Identifies the run that produced a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStamp {
    pub tool_version: String,
    pub config_hash: String,
    /// The full run configuration, kept so a later re-analysis can stamp
    /// its outputs as the equivalent inline run would.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub format_version: u32,
    pub spec_id: String,
    pub spec: SpecWire,
    pub kind: SpectrumKind,
    pub dim: usize,
    pub points: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub include_end: bool,
    pub delta_lambda: f64,
    pub row_offset: Vec<usize>,
    pub floored: usize,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

pub fn sweep_csv(sw: &FidelitySweep) -> String {
    let d = sw.levels();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["lambda".to_string()];
    for p in ["E", "S", "F"] {
        header.extend((0..d).map(|i| format!("{p}_{i}")));
    }
    if sw.curvature.is_some() {
        header.extend((0..d).map(|i| format!("C_{i}")));
    }
    w.write_record(&header).expect("in-memory write");
    for k in 0..sw.points() {
        let mut rec = vec![sw.lambda_grid[k].to_string()];
        for table in [&sw.energies, &sw.s, &sw.f] {
            rec.extend(table.iter().map(|row| row[k].to_string()));
        }
        if let Some(c) = &sw.curvature {
            rec.extend(c.iter().map(|row| row[k].to_string()));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
}

pub fn sidecar(sw: &FidelitySweep, spec: &ParametricHamiltonianSpec) -> SweepSidecar {
    SweepSidecar {
        format_version: SIDECAR_VERSION,
        spec_id: sw.spec_id.clone(),
        spec: spec.to_wire(),
        kind: sw.kind,
        dim: sw.levels(),
        points: sw.points(),
        lambda_min: sw.lambda_min(),
        lambda_max: sw.lambda_max(),
        include_end: sw.include_end,
        delta_lambda: sw.delta_lambda,
        row_offset: sw.row_offset.clone(),
        floored: sw.floored,
        warnings: sw.warnings.clone(),
        run: None,
    }
}

/// Write `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn write_sweep(
    dir: &Path,
    stem: &str,
    sw: &FidelitySweep,
    spec: &ParametricHamiltonianSpec,
) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, sweep_csv(sw))?;
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar(sw, spec))?)?;
    Ok((csv_path, json_path))
}

fn parse_field(line: u64, field: usize, name: &str, text: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| {
        Error::Parse(format!("line {line}, field {field} ({name}): cannot parse '{text}' as a number"))
    })
}

/// Rebuild a sweep and its spec from CSV text and sidecar JSON text. Lines
/// starting with `#` are comments.
pub fn parse_sweep(csv_text: &str, sidecar_json: &str) -> Result<(FidelitySweep, ParametricHamiltonianSpec)> {
    let meta: SweepSidecar =
        serde_json::from_str(sidecar_json).map_err(|e| Error::Parse(format!("sidecar: {e}")))?;
    if meta.format_version != SIDECAR_VERSION {
        return Err(Error::Parse(format!("unsupported sidecar version {}", meta.format_version)));
    }
    let spec = ParametricHamiltonianSpec::from_wire(&meta.spec)?;
    let d = meta.dim;
    let mut rd = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).from_reader(csv_text.as_bytes());
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| Error::Parse(format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let with_c = match header.len() {
        n if n == 1 + 3 * d => false,
        n if n == 1 + 4 * d => true,
        n => {
            return Err(Error::Parse(format!(
                "header: expected {} or {} columns for dim {d}, found {n}",
                1 + 3 * d,
                1 + 4 * d
            )))
        }
    };
    if header[0] != "lambda" || header[1] != "E_0" {
        return Err(Error::Parse("header must start with lambda,E_0".into()));
    }
    let mut grid = Vec::with_capacity(meta.points);
    let mut tables = vec![vec![Vec::with_capacity(meta.points); d]; if with_c { 4 } else { 3 }];
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("{e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            )));
        }
        for (j, text) in rec.iter().enumerate() {
            let v = parse_field(line, j + 1, &header[j], text)?;
            if j == 0 {
                grid.push(v);
            } else {
                tables[(j - 1) / d][(j - 1) % d].push(v);
            }
        }
    }
    if grid.len() != meta.points || meta.row_offset.len() != meta.points {
        return Err(Error::Parse(format!(
            "sidecar declares {} points, CSV has {}",
            meta.points,
            grid.len()
        )));
    }
    let curvature = if with_c { tables.pop() } else { None };
    let f = tables.pop().expect("three tables");
    let s = tables.pop().expect("three tables");
    let energies = tables.pop().expect("three tables");
    let sw = FidelitySweep {
        spec_id: meta.spec_id,
        kind: meta.kind,
        lambda_grid: grid,
        delta_lambda: meta.delta_lambda,
        include_end: meta.include_end,
        s,
        f,
        energies,
        curvature,
        row_offset: meta.row_offset,
        floored: meta.floored,
        warnings: meta.warnings,
    };
    Ok((sw, spec))
}

/// Load from a path to either file of the pair; the other is found by
/// swapping the extension.
pub fn read_sweep(path: &Path) -> Result<(FidelitySweep, ParametricHamiltonianSpec)> {
    let csv_path = path.with_extension("csv");
    let json_path = path.with_extension("json");
    let csv_text = std::fs::read_to_string(&csv_path)
        .map_err(|e| Error::Io(format!("{}: {e}", csv_path.display())))?;
    let json_text = std::fs::read_to_string(&json_path)
        .map_err(|e| Error::Io(format!("{}: {e}", json_path.display())))?;
    parse_sweep(&csv_text, &json_text)
}

pub fn events_json(events: &[ACEvent]) -> String {
    serde_json::to_string_pretty(events).expect("events serialize")
}

pub fn parse_events(text: &str) -> Result<Vec<ACEvent>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("events: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::sweep::{sweep, SweepConfig};
    use crate::hamiltonian::build_triple;

    #[test]
    fn round_trip_is_exact() {
        let spec = build_triple(0.0, 2.0, 3.0).unwrap();
        let mut cfg = SweepConfig::new(-6.0, 6.0, 61);
        cfg.curvature = true;
        let sw = sweep(&spec, &cfg).unwrap();
        let text = sweep_csv(&sw);
        let meta = serde_json::to_string(&sidecar(&sw, &spec)).unwrap();
        let (back, spec2) = parse_sweep(&text, &meta).unwrap();
        assert_eq!(spec2.spec_id(), spec.spec_id());
        assert_eq!(back.lambda_grid, sw.lambda_grid);
        assert_eq!(back.s, sw.s);
        assert_eq!(back.energies, sw.energies);
        // NaN entries at the boundaries do not compare equal
        assert_eq!(sweep_csv(&back), text);
    }

    #[test]
    fn bad_field_is_located() {
        let spec = build_triple(0.0, 2.0, 3.0).unwrap();
        let sw = sweep(&spec, &SweepConfig::new(-6.0, 6.0, 5)).unwrap();
        let meta = serde_json::to_string(&sidecar(&sw, &spec)).unwrap();
        let mut text = sweep_csv(&sw);
        text = text.replacen("\n-3,", "\n-3x,", 1);
        let err = parse_sweep(&text, &meta).unwrap_err().to_string();
        assert!(err.contains("line 3, field 1"), "{err}");
    }
}
