//! CSV and JSON artifacts. Floats in CSV files are written with 17 significant
//! digits so that profiles read back bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::MarginReport;
use crate::dynamics::Trace;
use crate::eigen::EigenEntry;
use crate::error::{Error, Result};
use crate::grid::{Grid, Profile};
use crate::model::{ModelParams, StateVec};
use crate::spectrum::{CurvePoint, WeightPair};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Metadata stored next to a profile CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub alpha: f64,
    pub k: f64,
    pub c: f64,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
    pub sigma1: f64,
    pub sigma2: f64,
    pub boundary_left: StateVec,
    pub boundary_right: StateVec,
}

impl ProfileMeta {
    pub fn new(p: &ModelParams, prof: &Profile, w: &WeightPair) -> Self {
        Self {
            alpha: p.alpha,
            k: p.k,
            c: prof.c,
            half_length: prof.grid.half_length,
            n: prof.grid.n,
            sigma1: w.sigma1,
            sigma2: w.sigma2,
            boundary_left: prof.boundary_left,
            boundary_right: prof.boundary_right,
        }
    }
}

/// `<csv path>` with the extension replaced by `json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

fn write_rows<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definitions, so equal values give identical bytes.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Writes `xi,u,v` to `path` and the metadata to its JSON sidecar.
pub fn write_profile(path: &Path, prof: &Profile, meta: &ProfileMeta) -> Result<()> {
    write_rows(
        path,
        ["xi", "u", "v"],
        (0..prof.n()).map(|i| [num(prof.grid.nodes[i]), num(prof.u[i]), num(prof.v[i])]),
    )?;
    write_json(&sidecar_path(path), meta)
}

fn parse(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {what} value '{s}'")))
}

/// Reads a profile written by `write_profile`.
pub fn read_profile(path: &Path) -> Result<(Profile, ProfileMeta)> {
    let meta: ProfileMeta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let grid = Grid::new(meta.half_length, meta.n)?;
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["xi", "u", "v"] {
        return Err(Error::Config(format!("{}: expected header xi,u,v", path.display())));
    }
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Config(format!("{}: row {} has {} fields", path.display(), i + 1, rec.len())));
        }
        let xi = parse(&rec[0], "xi")?;
        if let Some(x) = grid.nodes.get(i) {
            if (x - xi).abs() > 1e-9 * grid.half_length {
                return Err(Error::DimensionMismatch(format!(
                    "node {i} at xi = {xi}, grid expects {x}"
                )));
            }
        }
        u.push(parse(&rec[1], "u")?);
        v.push(parse(&rec[2], "v")?);
    }
    let prof = Profile::new(grid, u, v, meta.c, meta.boundary_left, meta.boundary_right)?;
    Ok((prof, meta))
}

pub fn write_margins(path: &Path, rep: &MarginReport) -> Result<()> {
    write_rows(
        path,
        ["xi", "margin_u", "margin_v"],
        (0..rep.xi.len()).map(|i| [num(rep.xi[i]), num(rep.margin_u[i]), num(rep.margin_v[i])]),
    )
}

pub fn write_curves(path: &Path, curves: &[CurvePoint]) -> Result<()> {
    write_rows(
        path,
        ["branch", "y", "x"],
        curves.iter().map(|c| [c.branch.to_string(), num(c.y), num(c.x)]),
    )
}

pub fn write_eigenvalues(path: &Path, eigs: &[EigenEntry]) -> Result<()> {
    write_rows(
        path,
        ["re", "im", "boundary_mass_fraction"],
        eigs.iter().map(|e| [num(e.re), num(e.im), num(e.boundary_mass_fraction)]),
    )
}

pub fn write_trace(path: &Path, tr: &Trace) -> Result<()> {
    write_rows(
        path,
        ["t", "weighted_norm", "sup_norm", "front_position"],
        (0..tr.len()).map(|i| {
            [
                num(tr.times[i]),
                num(tr.weighted_norms[i]),
                num(tr.sup_norms[i]),
                num(tr.front_positions[i]),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_params;

    #[test]
    fn profile_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = derive_params(0.25, 0.5).unwrap();
        let g = Grid::new(7.0, 61).unwrap();
        let u: Vec<f64> = g.nodes.iter().map(|x| 1.2 * (0.5 + 0.5 * (x / 3.0).tanh())).collect();
        let v: Vec<f64> = g.nodes.iter().map(|x| (x / 7.0).exp() / 3.0 + 1e-300).collect();
        let prof = Profile::new(g, u, v, 1.25, StateVec::new(1e-17, 0.1), StateVec::new(1.2, 1.0)).unwrap();
        let w = WeightPair::new(0.05, 0.5).unwrap();
        let path = dir.path().join("wave/profile.csv");
        write_profile(&path, &prof, &ProfileMeta::new(&p, &prof, &w)).unwrap();
        let (back, meta) = read_profile(&path).unwrap();
        assert_eq!(back, prof);
        assert_eq!(meta.sigma2, 0.5);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("xi,u,v\n"));
        let json = fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(json.contains("\"L\": 7.0"));
    }

    #[test]
    fn rejects_mismatched_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = derive_params(0.25, 0.5).unwrap();
        let g = Grid::new(5.0, 9).unwrap();
        let prof = Profile::constant(g, StateVec::new(0.5, 0.5), 1.0);
        let w = WeightPair::new(0.0, 0.0).unwrap();
        let mut meta = ProfileMeta::new(&p, &prof, &w);
        meta.half_length = 6.0;
        let path = dir.path().join("p.csv");
        write_profile(&path, &prof, &meta).unwrap();
        assert!(matches!(read_profile(&path), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn trace_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let tr = Trace {
            times: vec![0.0, 1.0],
            weighted_norms: vec![1.0, 0.5],
            sup_norms: vec![1.0, 0.5],
            front_positions: vec![f64::NAN, 2.0],
            mass_checks: vec![0.0, 0.0],
        };
        let path = dir.path().join("trace.csv");
        write_trace(&path, &tr).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,weighted_norm,sup_norm,front_position"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,NaN"));
    }
}
