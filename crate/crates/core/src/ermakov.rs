//! Breathing envelope `b(z)` solving `b'' + b = b^-3`.
//!
//! With `E = b'^2 + b^2 + b^-2` the exact solution is
//! `b^2 = E/2 + R cos 2(z - z_p)`, `R = sqrt(E^2 - 4) / 2`, so `b^4` has only
//! the harmonics 0, 2 and 4 of the phase-shifted angle.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ode::{DenseStep, Dop853, Dop853Options, StepControl, MIN_TARGET_TOL};

/// Ermakov solution data for given entry conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreathingEnvelope {
    pub b0: f64,
    pub b0_prime: f64,
    pub e_b: f64,
    pub c0: f64,
    pub c2: f64,
    pub c4: f64,
    /// Phase `z_p` of the `b^2` maximum; zero for `b0 >= 1, b0' = 0`.
    pub phase: f64,
}

impl BreathingEnvelope {
    pub fn new(b0: f64, b0_prime: f64) -> Result<Self> {
        if !(b0.is_finite() && b0 > 0.0) {
            return invalid(format!("b0 must be finite and positive, got {b0}"));
        }
        if !b0_prime.is_finite() {
            return invalid("b0_prime must be finite");
        }
        let e_b = if b0_prime == 0.0 {
            // (b0 - 1/b0)^2 + 2, exact to rounding
            let d = b0 - b0.recip();
            d * d + 2.0
        } else {
            b0_prime * b0_prime + b0 * b0 + (b0 * b0).recip()
        };
        let (c0, c2, c4) = harmonics_of(e_b);
        let r = amplitude(e_b);
        let phase = if r == 0.0 {
            0.0
        } else {
            let cos2 = ((b0 * b0 - 0.5 * e_b) / r).clamp(-1.0, 1.0);
            let sin2 = (b0 * b0_prime / r).clamp(-1.0, 1.0);
            0.5 * sin2.atan2(cos2)
        };
        Ok(Self {
            b0,
            b0_prime,
            e_b,
            c0,
            c2,
            c4,
            phase,
        })
    }

    /// The non-breathing envelope `b = 1`.
    pub fn matched() -> Self {
        Self::new(1.0, 0.0).expect("b0 = 1 is valid")
    }

    pub fn is_matched(&self) -> bool {
        self.e_b == 2.0
    }

    /// Half peak-to-peak of `b^2`, `R = sqrt(E^2 - 4) / 2`.
    pub fn amplitude(&self) -> f64 {
        amplitude(self.e_b)
    }

    /// Closed form `b0^2 cos^2 z + b0^-2 sin^2 z` for entry slope zero.
    pub fn b_squared(&self, z: f64) -> Result<f64> {
        if self.b0_prime != 0.0 {
            return invalid("closed form requires b0_prime = 0; use the numerical solver");
        }
        let (s, c) = z.sin_cos();
        // same as b0^2 c^2 + b0^-2 s^2, written to be exact at b0 = 1
        let b2 = self.b0 * self.b0;
        Ok(1.0 + (b2 - 1.0) * c * c + (b2.recip() - 1.0) * s * s)
    }

    /// `b^2(z)` for arbitrary entry conditions via the phase-shifted form.
    pub fn b2(&self, z: f64) -> f64 {
        if self.b0_prime == 0.0 {
            return self.b_squared(z).expect("slope is zero");
        }
        0.5 * self.e_b + self.amplitude() * (2.0 * (z - self.phase)).cos()
    }

    pub fn b(&self, z: f64) -> f64 {
        self.b2(z).sqrt()
    }

    pub fn b4(&self, z: f64) -> f64 {
        let s = self.b2(z);
        s * s
    }

    /// `(b^4, d b^4/dz, d^2 b^4/dz^2)`.
    pub fn b4_derivatives(&self, z: f64) -> (f64, f64, f64) {
        let th = 2.0 * (z - self.phase);
        let (sn, cs) = th.sin_cos();
        let r = self.amplitude();
        let s = 0.5 * self.e_b + r * cs;
        let s1 = -2.0 * r * sn;
        let s2 = -4.0 * r * cs;
        (s * s, 2.0 * s * s1, 2.0 * (s1 * s1 + s * s2))
    }

    /// `b^4` rebuilt from its three harmonics.
    pub fn b4_from_harmonics(&self, z: f64) -> f64 {
        let th = 2.0 * (z - self.phase);
        self.c0 + self.c2 * th.cos() + self.c4 * (2.0 * th).cos()
    }

    /// Lower bound `b_min^2 = (E - sqrt(E^2 - 4)) / 2`.
    pub fn b_min(&self) -> f64 {
        // (E - sqrt(E^2 - 4)) / 2 = 2 / (E + sqrt(E^2 - 4)), without cancellation
        (2.0 / (self.e_b + 2.0 * self.amplitude())).sqrt()
    }

    pub fn b_max(&self) -> f64 {
        (0.5 * self.e_b + self.amplitude()).sqrt()
    }
}

fn amplitude(e_b: f64) -> f64 {
    0.5 * (e_b * e_b - 4.0).max(0.0).sqrt()
}

fn harmonics_of(e: f64) -> (f64, f64, f64) {
    let e2 = e * e;
    (
        (3.0 * e2 - 4.0) / 8.0,
        0.5 * e * (e2 - 4.0).max(0.0).sqrt(),
        (e2 - 4.0) / 8.0,
    )
}

/// Harmonics `(c0, c2, c4)` of `b^4 = c0 + c2 cos 2z + c4 cos 4z`.
pub fn b4_harmonics(env: &BreathingEnvelope) -> (f64, f64, f64) {
    (env.c0, env.c2, env.c4)
}

/// Numerical solution of the Ermakov equation with dense output.
#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    pub b0: f64,
    pub b0_prime: f64,
    pub e_b: f64,
    /// Largest `|E(z) - E(0)|` over the accepted steps.
    pub max_invariant_drift: f64,
    steps: Vec<DenseStep<2>>,
}

impl ErmakovSolution {
    pub fn z_max(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.z1())
    }

    /// `(b, b')` at `z` in `[0, z_max]`.
    pub fn eval(&self, z: f64) -> [f64; 2] {
        if self.steps.is_empty() {
            return [self.b0, self.b0_prime];
        }
        let i = self.steps.partition_point(|s| s.z1() < z);
        let step = &self.steps[i.min(self.steps.len() - 1)];
        step.eval(z)
    }

    /// `(z, b)` at the accepted step ends, starting with `z = 0`.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, self.b0)];
        out.extend(self.steps.iter().map(|s| (s.z1(), s.end()[0])));
        out
    }

    /// `(z, b)` on a uniform grid of spacing `dz` (the last point is `z_max`).
    pub fn sample_uniform(&self, dz: f64) -> Vec<(f64, f64)> {
        let zm = self.z_max();
        let n = (zm / dz).ceil() as usize;
        (0..=n)
            .map(|k| {
                let z = (k as f64 * dz).min(zm);
                (z, self.eval(z)[0])
            })
            .collect()
    }
}

/// Integrate `b'' + b = b^-3` on `[0, z_max]`.
pub fn solve_ermakov_numeric(
    b0: f64,
    b0_prime: f64,
    z_max: f64,
    tol: f64,
) -> Result<ErmakovSolution> {
    let env = BreathingEnvelope::new(b0, b0_prime)?;
    if !(z_max > 0.0 && z_max.is_finite()) {
        return invalid(format!("z_max must be positive, got {z_max}"));
    }
    if !(tol >= MIN_TARGET_TOL) {
        return invalid(format!("tol must be at least {MIN_TARGET_TOL:e}, got {tol}"));
    }
    let invariant = |y: &[f64; 2]| y[1] * y[1] + y[0] * y[0] + (y[0] * y[0]).recip();
    let e0 = invariant(&[b0, b0_prime]);
    let b_floor = env.b_min() * (1.0 - 1e-6);
    let rhs = |_z: f64, y: &[f64; 2]| [y[1], y[0].powi(-3) - y[0]];

    let mut steps = Vec::new();
    let mut drift = 0.0f64;
    let mut collapse = None;
    Dop853::new(Dop853Options::for_target(tol)).integrate(
        &rhs,
        0.0,
        [b0, b0_prime],
        z_max,
        |s: &DenseStep<2>| {
            let y = s.end();
            if y[0] < b_floor {
                collapse = Some((s.z1(), y[0]));
                return StepControl::Stop;
            }
            drift = drift.max((invariant(&y) - e0).abs());
            steps.push(s.clone());
            StepControl::Continue
        },
    )?;
    if let Some((z, b)) = collapse {
        return Err(Error::EnvelopeCollapse {
            z,
            b,
            b_min: env.b_min(),
        });
    }
    Ok(ErmakovSolution {
        b0,
        b0_prime,
        e_b: e0,
        max_invariant_drift: drift,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn matched_envelope_is_constant() {
        let env = BreathingEnvelope::matched();
        for z in [0.0, 0.3, 1.7, 10.0] {
            assert_eq!(env.b_squared(z).unwrap(), 1.0);
        }
        assert_eq!(b4_harmonics(&env), (1.0, 0.0, 0.0));
        assert!(env.is_matched());
    }

    #[test]
    fn quarter_period_and_entry_values() {
        let env = BreathingEnvelope::new(33.0, 0.0).unwrap();
        assert_eq!(env.b_squared(0.0).unwrap(), 1089.0);
        assert_abs_diff_eq!(env.b_squared(PI / 2.0).unwrap(), 1.0 / 1089.0, epsilon = 1e-15);
    }

    #[test]
    fn harmonics_at_e_two_point_five() {
        let (_, c2, c4) = harmonics_of(2.5);
        assert_eq!(c4, 0.28125);
        assert_abs_diff_eq!(c2, 1.875, epsilon = 1e-15);
    }

    #[test]
    fn nonzero_slope_rejected_by_closed_form() {
        let env = BreathingEnvelope::new(1.5, 0.7).unwrap();
        assert!(env.b_squared(0.1).is_err());
    }

    #[test]
    fn shifted_form_reproduces_entry_conditions() {
        for (b0, bp) in [(1.5, 0.7), (0.6, -0.3), (2.0, 0.0), (0.5, 0.0)] {
            let env = BreathingEnvelope::new(b0, bp).unwrap();
            assert_abs_diff_eq!(env.b2(0.0), b0 * b0, epsilon = 1e-12);
            // d(b^2)/dz = 2 b b'
            let (_, d1, _) = env.b4_derivatives(0.0);
            assert_abs_diff_eq!(d1 / (2.0 * b0 * b0), 2.0 * b0 * bp, epsilon = 1e-12);
        }
    }

    #[test]
    fn b4_derivatives_match_finite_differences() {
        let env = BreathingEnvelope::new(1.3, 0.2).unwrap();
        let h = 1e-4;
        for z in [0.1, 0.9, 2.3] {
            let (_, d1, d2) = env.b4_derivatives(z);
            let fd1 = (env.b4(z + h) - env.b4(z - h)) / (2.0 * h);
            let fd2 = (env.b4(z + h) - 2.0 * env.b4(z) + env.b4(z - h)) / (h * h);
            assert_abs_diff_eq!(d1, fd1, epsilon = 1e-7);
            assert_abs_diff_eq!(d2, fd2, epsilon = 1e-5);
        }
    }

    #[test]
    fn numeric_solution_of_equilibrium_stays_at_one() {
        let sol = solve_ermakov_numeric(1.0, 0.0, 10.0, 1e-12).unwrap();
        for (_, b) in sol.samples() {
            assert_abs_diff_eq!(b, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn numeric_solution_with_slope_conserves_invariant() {
        let sol = solve_ermakov_numeric(1.5, 0.7, 20.0 * PI, 1e-12).unwrap();
        assert!(sol.max_invariant_drift < 1e-8, "{}", sol.max_invariant_drift);
        let env = BreathingEnvelope::new(1.5, 0.7).unwrap();
        for k in 0..200 {
            let z = k as f64 * 0.3;
            assert_abs_diff_eq!(sol.eval(z)[0], env.b(z), epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_ermakov_numeric(0.0, 0.0, 1.0, 1e-8).is_err());
        assert!(solve_ermakov_numeric(1.0, 0.0, -1.0, 1e-8).is_err());
        assert!(solve_ermakov_numeric(1.0, 0.0, 1.0, 0.0).is_err());
    }
}
