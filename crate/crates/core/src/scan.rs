//! Parameter sweeps over `mu`, `b0` or the seed angle.
//!
//! Points are evaluated in chunks; each chunk runs data-parallel and its rows
//! are handed to the sink in input order before the next chunk starts, so an
//! interrupted scan leaves a valid prefix behind.

use serde::{Deserialize, Serialize};

use crate::ermakov::BreathingEnvelope;
use crate::error::{invalid, Error, Result};
use crate::flow::{integrate_with, FlowOptions, FlowParams};
use crate::par::Execution;
use crate::shell::PseudospinVector;
use crate::stability::{floquet_exponent, FloquetMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    Mu,
    B0,
    Delta,
}

impl std::str::FromStr for ScanAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(Self::Mu),
            "b0" => Ok(Self::B0),
            "delta" => Ok(Self::Delta),
            _ => invalid(format!("unknown scan axis '{s}' (mu, b0, delta)")),
        }
    }
}

/// `steps` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ScanRange {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) {
            return invalid("scan bounds must be finite");
        }
        if steps == 0 || stop < start || (steps > 1 && stop == start) {
            return invalid(format!("empty scan range {start}..{stop} with {steps} steps"));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let d = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| if k + 1 == self.steps { self.stop } else { self.start + k as f64 * d })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub axis: ScanAxis,
    pub range: ScanRange,
    /// Values of the non-scanned parameters.
    pub mu: f64,
    pub b0: f64,
    pub delta: f64,
    pub z_max: f64,
    pub tol: f64,
    pub floquet: FloquetMode,
}

impl ScanConfig {
    /// Defaults: `b0` scans use the Hill form, the others the exact tangent system.
    pub fn new(axis: ScanAxis, range: ScanRange) -> Self {
        Self {
            axis,
            range,
            mu: 1.2,
            b0: 1.0,
            delta: 0.01,
            z_max: 20.0,
            tol: 1e-10,
            floquet: match axis {
                ScanAxis::B0 => FloquetMode::LinearizedHill,
                _ => FloquetMode::ExactTangent,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub mu: f64,
    pub b0: f64,
    pub delta: f64,
    pub sigma_numeric: f64,
    pub sigma_analytic: f64,
    pub flips: bool,
    pub first_flip_z: Option<f64>,
    pub min_l3: f64,
}

pub fn scan_point(cfg: &ScanConfig, value: f64) -> Result<ScanRow> {
    let (mut mu, mut b0, mut delta) = (cfg.mu, cfg.b0, cfg.delta);
    match cfg.axis {
        ScanAxis::Mu => mu = value,
        ScanAxis::B0 => b0 = value,
        ScanAxis::Delta => delta = value,
    }
    let env = BreathingEnvelope::new(b0, 0.0)?;
    let params = if env.is_matched() {
        FlowParams::static_flow(mu)
    } else {
        FlowParams::breathing(mu, env)
    };
    let opts = FlowOptions::with_tol(cfg.tol).sample_step(None);
    let traj = integrate_with(PseudospinVector::seeded(delta), &params, cfg.z_max, &opts)?;
    let fl = floquet_exponent(mu, &env, cfg.floquet)?;
    Ok(ScanRow {
        mu,
        b0,
        delta,
        sigma_numeric: fl.sigma_numeric,
        sigma_analytic: fl.sigma_analytic,
        flips: traj.flips(),
        first_flip_z: traj.first_flip(),
        min_l3: traj.diagnostics.min_l3,
    })
}

/// Run the scan, delivering rows to `sink` in input order chunk by chunk.
pub fn run_scan_streaming<F>(cfg: &ScanConfig, exec: Execution, chunk: usize, mut sink: F) -> Result<usize>
where
    F: FnMut(&ScanRow) -> std::io::Result<()>,
{
    let points = cfg.range.points();
    let chunk = chunk.max(1);
    let mut done = 0;
    for block in points.chunks(chunk) {
        let rows = exec.map(block, |&v| scan_point(cfg, v));
        for row in rows {
            let row = row?;
            sink(&row).map_err(|e| Error::InvalidArgument(format!("writing scan output: {e}")))?;
            done += 1;
        }
    }
    Ok(done)
}

pub fn run_scan(cfg: &ScanConfig, exec: Execution) -> Result<Vec<ScanRow>> {
    let points = cfg.range.points();
    exec.map(&points, |&v| scan_point(cfg, v)).into_iter().collect()
}

/// First scanned value at which the flip indicator is set, with the grid
/// step as resolution.
pub fn flip_threshold(rows: &[ScanRow], axis: ScanAxis) -> Option<f64> {
    rows.iter().find(|r| r.flips).map(|r| match axis {
        ScanAxis::Mu => r.mu,
        ScanAxis::B0 => r.b0,
        ScanAxis::Delta => r.delta,
    })
}

/// Least-squares exponent `p` of `y = A x^p` over positive pairs.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
