//! Transverse intensity of shell states.
//!
//! The shell basis `|j, m>` is realized by Laguerre–Gaussian functions with
//! `l = 2m` and radial index `n_r = j - |m|`; coordinates are in units of
//! `rho_H`. The pole states are vortex rings, equatorial coherent states are
//! Hermite–Gaussian-like lobed patterns.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::par::Execution;
use crate::shell::{ln_factorial, ShellSpec, ShellState};

type C = Complex64;

/// Fraction of probability outside the grid above which a warning is raised.
pub const OUTSIDE_WARN: f64 = 0.01;

/// `L_n^alpha(x)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 + alpha - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalized shell eigenfunction with `l = two_m`, `n_r = (two_j - |two_m|)/2`,
/// at `(x, y)` in units of `rho_H`.
pub fn shell_basis_field(two_j: u32, two_m: i32, x: f64, y: f64) -> Result<C> {
    let l = two_m.unsigned_abs();
    if l > two_j || (two_j - l) % 2 != 0 {
        return invalid(format!("two_m = {two_m} is not a weight of two_j = {two_j}"));
    }
    let nr = ((two_j - l) / 2) as usize;
    Ok(lg_field(nr, l as usize, two_m.signum(), x, y))
}

fn lg_radial(nr: usize, l: usize, r2: f64) -> f64 {
    if l > 0 && r2 == 0.0 {
        return 0.0;
    }
    let ln_norm = 0.5 * (ln_factorial(nr) - ln_factorial(nr + l) - std::f64::consts::PI.ln());
    let radial_log = ln_norm + if l > 0 { 0.5 * l as f64 * r2.ln() } else { 0.0 } - 0.5 * r2;
    let parity = if nr % 2 == 0 { 1.0 } else { -1.0 };
    parity * laguerre(nr, l as f64, r2) * radial_log.exp()
}

fn lg_field(nr: usize, l: usize, sign: i32, x: f64, y: f64) -> C {
    let amp = lg_radial(nr, l, x * x + y * y);
    if amp == 0.0 {
        return C::new(0.0, 0.0);
    }
    C::from_polar(amp, sign as f64 * l as f64 * y.atan2(x))
}

/// `psi(x, y) = sum_m c_m u_{j,m}(x/b, y/b) / b`.
pub fn state_field(state: &ShellState, spec: &ShellSpec, b: f64, x: f64, y: f64) -> C {
    let two_j = spec.two_j() as i32;
    let (xs, ys) = (x / b, y / b);
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(k, c)| {
            let two_m = 2 * k as i32 - two_j;
            let l = two_m.unsigned_abs() as usize;
            let nr = (two_j as usize - l) / 2;
            c * lg_field(nr, l, two_m.signum(), xs, ys)
        })
        .sum::<C>()
        / b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half-width in units of `rho_H`.
    pub extent: f64,
    /// Pixels per side.
    pub resolution: usize,
}

impl GridSpec {
    pub fn pixel(&self) -> f64 {
        2.0 * self.extent / self.resolution as f64
    }

    /// Pixel-center coordinate of index `i`.
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.pixel()
    }

    /// Extent that holds a shell of size `two_j` dilated by `b` with margin.
    pub fn covering(two_j: u32, b: f64, resolution: usize) -> Self {
        // outermost classical radius sqrt(2 n + 2) for n = 2j quanta, plus tails
        let r = ((2 * two_j + 2) as f64).sqrt() + 4.0;
        Self {
            extent: r * b.max(1.0),
            resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityGrid {
    pub extent: f64,
    pub resolution: usize,
    pub z: f64,
    pub b: f64,
    /// Row-major, row index along `y`, column index along `x`.
    pub values: Vec<f64>,
}

impl IntensityGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.resolution + ix]
    }

    /// Riemann sum of the intensity.
    pub fn mass(&self) -> f64 {
        let d = 2.0 * self.extent / self.resolution as f64;
        self.values.iter().sum::<f64>() * d * d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rendered {
    pub grid: IntensityGrid,
    pub outside_fraction: f64,
    pub warning: Option<String>,
}

/// Evaluate `|psi|^2` on the grid; rows are computed in parallel.
pub fn render_state(
    state: &ShellState,
    spec: &ShellSpec,
    grid: &GridSpec,
    breathing_scale: f64,
    z: f64,
    exec: Execution,
) -> Result<Rendered> {
    if state.dim() != spec.dim() {
        return invalid("state does not match the shell");
    }
    if !(grid.extent > 0.0) || grid.resolution == 0 {
        return invalid("grid needs a positive extent and resolution");
    }
    if !(breathing_scale > 0.0) {
        return invalid(format!("breathing scale must be positive, got {breathing_scale}"));
    }
    let rows = exec.map_range(grid.resolution, |iy| {
        let y = grid.coord(iy);
        (0..grid.resolution)
            .map(|ix| state_field(state, spec, breathing_scale, grid.coord(ix), y).norm_sqr())
            .collect::<Vec<f64>>()
    });
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let out = IntensityGrid {
        extent: grid.extent,
        resolution: grid.resolution,
        z,
        b: breathing_scale,
        values,
    };
    let outside = (1.0 - out.mass() / state.norm().powi(2)).max(0.0);
    let warning = (outside > OUTSIDE_WARN).then(|| {
        format!(
            "{:.2}% of the probability lies outside |x|, |y| <= {}",
            100.0 * outside,
            grid.extent
        )
    });
    Ok(Rendered {
        grid: out,
        outside_fraction: outside,
        warning,
    })
}

/// Max/min intensity around the ring carrying the most probability
/// (largest `r <|psi|^2>_phi`). Equals one
/// for a single basis state and grows as the profile becomes lobed.
pub fn azimuthal_contrast(state: &ShellState, spec: &ShellSpec) -> f64 {
    const N_PHI: usize = 720;
    let r_max = ((2 * spec.two_j() + 2) as f64).sqrt() + 3.0;
    let ring = |r: f64| -> Vec<f64> {
        (0..N_PHI)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / N_PHI as f64;
                state_field(state, spec, 1.0, r * phi.cos(), r * phi.sin()).norm_sqr()
            })
            .collect()
    };
    // the azimuthal mean of |psi|^2 is sum_m |c_m|^2 R_m(r)^2 (the e^{i l phi} are orthogonal)
    let two_j = spec.two_j() as usize;
    let ring_mean = |r: f64| -> f64 {
        state
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let l = (2 * k).abs_diff(two_j);
                c.norm_sqr() * lg_radial((two_j - l) / 2, l, r * r).powi(2)
            })
            .sum()
    };
    let best = (1..=400)
        .map(|i| r_max * i as f64 / 400.0)
        .map(|r| (r, r * ring_mean(r)))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        .0;
    let v = ring(best);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Hermite function `(2^n n! sqrt(pi))^-1/2 H_n(x) exp(-x^2/2)`.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    // normalized recurrence avoids overflow of H_n
    let g = (-0.5 * x * x).exp() / std::f64::consts::PI.powf(0.25);
    if n == 0 {
        return g;
    }
    let (mut prev, mut cur) = (g, std::f64::consts::SQRT_2 * x * g);
    for k in 1..n {
        let k = k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * x * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}
