//! Plain-text output: trajectory and scan CSV, intensity grid files.
//!
//! Floats use Rust's shortest round-trip formatting (plain decimals in a
//! moderate range, exponent form outside it), so identical inputs give
//! byte-identical files and values parse back exactly.

use std::io::{self, BufRead, Write};

use crate::flow::Trajectory;
use crate::quantum::QuantumTrajectory;
use crate::render::IntensityGrid;
use crate::scan::ScanRow;

/// Shortest round-trip representation of `x`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

pub const CLASSICAL_HEADER: &str = "z,l1,l2,l3,energy,b";
pub const QUANTUM_HEADER: &str = "z,l1,l2,l3,energy,b,norm,m11,m22,m33,m12,m13,m23";
pub const SCAN_HEADER: &str = "mu,b0,sigma_numeric,sigma_analytic,flips,delta,first_flip_z,min_l3";

pub fn write_classical_csv<W: Write>(mut w: W, t: &Trajectory) -> io::Result<()> {
    writeln!(w, "{CLASSICAL_HEADER}")?;
    for s in &t.samples {
        writeln!(w, "{}", row(&[s.z, s.l.l1, s.l.l2, s.l.l3, s.energy, s.b]))?;
    }
    w.flush()
}

/// Second moments are divided by `j^2`.
pub fn write_quantum_csv<W: Write>(mut w: W, t: &QuantumTrajectory) -> io::Result<()> {
    writeln!(w, "{QUANTUM_HEADER}")?;
    let j2 = t.spec.j().powi(2);
    for s in &t.samples {
        let m = &s.moments;
        writeln!(
            w,
            "{}",
            row(&[
                s.z,
                s.l.l1,
                s.l.l2,
                s.l.l3,
                s.energy,
                s.b,
                s.norm,
                m[0][0] / j2,
                m[1][1] / j2,
                m[2][2] / j2,
                m[0][1] / j2,
                m[0][2] / j2,
                m[1][2] / j2,
            ])
        )?;
    }
    w.flush()
}

pub fn write_scan_header<W: Write>(mut w: W) -> io::Result<()> {
    writeln!(w, "{SCAN_HEADER}")
}

pub fn write_scan_row<W: Write>(mut w: W, r: &ScanRow) -> io::Result<()> {
    let ff = r.first_flip_z.map_or(String::new(), fmt_f64);
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        fmt_f64(r.mu),
        fmt_f64(r.b0),
        fmt_f64(r.sigma_numeric),
        fmt_f64(r.sigma_analytic),
        u8::from(r.flips),
        fmt_f64(r.delta),
        ff,
        fmt_f64(r.min_l3)
    )
}

/// Grid format: `key value` header lines, a `data` line, then one row of
/// space-separated intensities per line (row index along `y`).
pub fn write_grid<W: Write>(mut w: W, g: &IntensityGrid) -> io::Result<()> {
    writeln!(w, "# intensity grid, coordinates in units of rho_H")?;
    writeln!(w, "extent {}", g.extent)?;
    writeln!(w, "resolution {}", g.resolution)?;
    writeln!(w, "z {}", g.z)?;
    writeln!(w, "b {}", g.b)?;
    writeln!(w, "data")?;
    for row in g.values.chunks(g.resolution) {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()
}

pub fn read_grid<R: BufRead>(r: R) -> io::Result<IntensityGrid> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut extent = None;
    let mut resolution = None;
    let mut z = None;
    let mut b = None;
    let mut values = Vec::new();
    let mut in_data = false;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if in_data {
            for t in line.split_whitespace() {
                values.push(t.parse::<f64>().map_err(|_| bad("bad grid value"))?);
            }
            continue;
        }
        if line == "data" {
            in_data = true;
            continue;
        }
        let (k, v) = line.split_once(' ').ok_or_else(|| bad("bad header line"))?;
        let num = || v.trim().parse::<f64>().map_err(|_| bad("bad header value"));
        match k {
            "extent" => extent = Some(num()?),
            "resolution" => {
                resolution = Some(v.trim().parse::<usize>().map_err(|_| bad("bad resolution"))?)
            }
            "z" => z = Some(num()?),
            "b" => b = Some(num()?),
            _ => return Err(bad("unknown header key")),
        }
    }
    let resolution = resolution.ok_or_else(|| bad("missing resolution"))?;
    if values.len() != resolution * resolution {
        return Err(bad("grid size does not match resolution"));
    }
    Ok(IntensityGrid {
        extent: extent.ok_or_else(|| bad("missing extent"))?,
        resolution,
        z: z.ok_or_else(|| bad("missing z"))?,
        b: b.ok_or_else(|| bad("missing b"))?,
        values,
    })
}
