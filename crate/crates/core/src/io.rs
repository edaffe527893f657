//! CSV and JSON emission of paths, curves and tracks.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::crossings::CrossingCurve;
use crate::error::{Error, Result};
use crate::paths::{Provenance, SamplePath, TruncationCertificate};
use crate::scalespace::{ExtremumType, RhoCurve, TrackEnd, TrackSet};
use crate::spectral::{ConvergenceRow, InvertedCurve, PhaseRow, SpectralCurve};

const ORDER_NAMES: [&str; 5] = ["X", "dX", "d2X", "d3X", "d4X"];

/// Writes `t, X, dX, d2X[, d3X]` with one row per grid point.
pub fn write_path_csv<W: Write>(w: W, path: &SamplePath) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(ORDER_NAMES[..path.values.len()].iter().map(|s| s.to_string()));
    out.write_record(&header)?;
    for (i, t) in path.t.iter().enumerate() {
        let mut row = vec![fmt(*t)];
        row.extend(path.values.iter().map(|v| fmt(v[i])));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a path written by [`write_path_csv`] (grid values only).
pub fn read_path_csv<R: Read>(r: R) -> Result<SamplePath> {
    let mut rdr = csv::Reader::from_reader(r);
    let orders = rdr.headers()?.len().saturating_sub(1);
    let mut t = Vec::new();
    let mut values = vec![Vec::new(); orders];
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("{s}: {e}")));
        t.push(parse(&rec[0])?);
        for k in 0..orders {
            values[k].push(parse(&rec[k + 1])?);
        }
    }
    if t.len() < 2 {
        return Err(Error::Format("path needs at least two rows".into()));
    }
    let step = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    SamplePath::from_values(t[0], step, values)
}

fn fmt(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSidecar {
    pub a: f64,
    pub b: f64,
    pub step: f64,
    pub provenance: Provenance,
    pub certificate: TruncationCertificate,
}

impl PathSidecar {
    pub fn of(path: &SamplePath) -> Self {
        Self {
            a: path.a,
            b: path.b,
            step: path.step,
            provenance: path.provenance.clone(),
            certificate: path.certificate.clone(),
        }
    }
}

pub fn write_path_sidecar<W: Write>(w: W, path: &SamplePath) -> Result<()> {
    serde_json::to_writer_pretty(w, &PathSidecar::of(path))?;
    Ok(())
}

#[derive(Serialize)]
struct CrossingRow {
    alpha: f64,
    c_mean: f64,
    c_se: f64,
    up_mean: f64,
    down_mean: f64,
    tangency_rate: f64,
    replications: usize,
}

pub fn write_crossing_csv<W: Write>(w: W, curve: &CrossingCurve) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in &curve.points {
        out.serialize(CrossingRow {
            alpha: p.level,
            c_mean: p.mean,
            c_se: p.se,
            up_mean: p.up_mean,
            down_mean: p.down_mean,
            tangency_rate: p.tangency_rate,
            replications: curve.replications,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SpectralRow {
    u: f64,
    re: f64,
    im: f64,
    quad_err: f64,
}

/// `u, re, im, quad_err` for `Ĉ(u)`.
pub fn write_spectral_csv<W: Write>(w: W, curve: &SpectralCurve) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (u, c) in curve.u.iter().zip(&curve.values) {
        out.serialize(SpectralRow {
            u: *u,
            re: c.re,
            im: c.im,
            quad_err: c.error,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// One level of a spectral/Monte Carlo/Rice comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub alpha: f64,
    pub c_spectral: f64,
    pub spectral_err: f64,
    pub c_mc: f64,
    pub mc_se: f64,
    pub c_rice: f64,
}

impl ComparisonRow {
    /// `|C_spectral − C_mc| <= k·(SE + quadrature error)`.
    pub fn agrees(&self, k: f64) -> bool {
        (self.c_spectral - self.c_mc).abs() <= k * (self.mc_se + self.spectral_err)
    }
}

/// Joins an inverted spectral curve with a Monte Carlo curve on the same levels.
pub fn comparison_rows(inverted: &InvertedCurve, mc: &CrossingCurve, rice: &[f64]) -> Result<Vec<ComparisonRow>> {
    if inverted.alpha.len() != mc.points.len() || rice.len() != mc.points.len() {
        return Err(Error::Format("comparison curves have different level grids".into()));
    }
    inverted
        .alpha
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let p = &mc.points[i];
            if (p.level - alpha).abs() > 1e-12 * alpha.abs().max(1.0) {
                return Err(Error::Format(format!("level mismatch at {alpha}")));
            }
            Ok(ComparisonRow {
                alpha,
                c_spectral: inverted.value[i],
                spectral_err: inverted.error[i],
                c_mc: p.mean,
                mc_se: p.se,
                c_rice: rice[i],
            })
        })
        .collect()
}

pub fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_convergence_csv<W: Write>(w: W, rows: &[ConvergenceRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn write_phase_csv<W: Write>(w: W, rows: &[PhaseRow]) -> Result<()> {
    write_rows(w, rows)
}

#[derive(Serialize)]
struct TrackRow {
    track_id: usize,
    sigma: f64,
    t: f64,
    #[serde(rename = "type")]
    kind: &'static str,
    event: String,
}

/// `track_id, sigma, t, type, event`; events are `birth` on the first
/// sample of tracks started below the top width and the track end on the last.
pub fn write_tracks_csv<W: Write>(w: W, set: &TrackSet) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let top = set.levels.first().map_or(f64::INFINITY, |l| l.sigma);
    for tr in &set.tracks {
        let kind = match tr.kind {
            ExtremumType::Maximum => "max",
            ExtremumType::Minimum => "min",
        };
        let last = tr.samples.len() - 1;
        for (i, &(sigma, t)) in tr.samples.iter().enumerate() {
            let mut event = String::new();
            if i == 0 && tr.birth_sigma < top {
                event.push_str("birth");
            }
            if i == last {
                if !event.is_empty() {
                    event.push(';');
                }
                event.push_str(&match tr.end {
                    TrackEnd::ReachedMin => "end".to_string(),
                    TrackEnd::Exited { .. } => "exit".to_string(),
                    TrackEnd::Annihilated { partner, .. } => format!("annihilated:{partner}"),
                });
            }
            out.serialize(TrackRow {
                track_id: tr.id,
                sigma,
                t,
                kind,
                event,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `sigma` (or `lambda`), `rho, se, n_reps`.
pub fn write_rho_csv<W: Write>(w: W, curve: &RhoCurve) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([curve.axis_name.as_str(), "rho", "se", "n_reps"])?;
    for i in 0..curve.axis.len() {
        out.write_record([
            fmt(curve.axis[i]),
            fmt(curve.rho[i]),
            fmt(curve.se[i]),
            curve.replications.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
