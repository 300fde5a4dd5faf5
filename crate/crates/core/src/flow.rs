//! Closed quasiclassical pseudospin flow on the unit sphere.
//!
//! `l' = (-2 l2 - 4 mu b^4 l2 l3, 2 l1 - 4 mu b^4 l1 l3, 8 mu b^4 l1 l2)`,
//! with `b = 1` in the static case. The flow conserves `|l|^2` exactly; the
//! integrator does not renormalize, so the drift is a genuine diagnostic.

use serde::{Deserialize, Serialize};

use crate::ermakov::BreathingEnvelope;
use crate::error::{invalid, Result};
use crate::ode::{bisect, DenseStep, Dop853, Dop853Options, StepControl, MIN_TARGET_TOL};
use crate::shell::PseudospinVector;

/// Half-width of the band around the equator in which sign changes of `l3`
/// are not yet counted as flips.
pub const FLIP_HYSTERESIS: f64 = 1e-6;

/// Accuracy of located flip positions in `z`.
pub const FLIP_LOCATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub mu: f64,
    pub envelope: Option<BreathingEnvelope>,
}

impl FlowParams {
    pub fn static_flow(mu: f64) -> Self {
        Self { mu, envelope: None }
    }

    pub fn breathing(mu: f64, envelope: BreathingEnvelope) -> Self {
        Self {
            mu,
            envelope: Some(envelope),
        }
    }

    /// `b^4(z)`, identically one without an envelope.
    pub fn b4(&self, z: f64) -> f64 {
        self.envelope.map_or(1.0, |e| e.b4(z))
    }

    pub fn b(&self, z: f64) -> f64 {
        self.envelope.map_or(1.0, |e| e.b(z))
    }

    pub fn rhs(&self, z: f64, l: &[f64; 3]) -> [f64; 3] {
        rate(l, self.mu * self.b4(z))
    }
}

fn rate(l: &[f64; 3], q: f64) -> [f64; 3] {
    let [l1, l2, l3] = *l;
    [
        -2.0 * l2 - 4.0 * q * l2 * l3,
        2.0 * l1 - 4.0 * q * l1 * l3,
        8.0 * q * l1 * l2,
    ]
}

pub fn rhs_static(l: PseudospinVector, mu: f64) -> PseudospinVector {
    PseudospinVector::from_array(rate(&l.to_array(), mu))
}

pub fn rhs_breathing(l: PseudospinVector, mu: f64, b4: f64) -> PseudospinVector {
    PseudospinVector::from_array(rate(&l.to_array(), mu * b4))
}

/// Dimensionless classical energy `2 l3 + 2 mu (l1^2 - l2^2)`.
pub fn classical_energy(l: PseudospinVector, mu: f64) -> f64 {
    2.0 * l.l3 + 2.0 * mu * (l.l1 * l.l1 - l.l2 * l.l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    /// `l3` goes from positive to negative.
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipEvent {
    pub z: f64,
    pub direction: Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub z: f64,
    pub l: PseudospinVector,
    /// `2 l3 + 2 mu b^4 (l1^2 - l2^2)`, conserved only when static.
    pub energy: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub max_norm_drift: f64,
    pub max_energy_drift: f64,
    pub min_l3: f64,
    pub z_end: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<FlowSample>,
    pub events: Vec<FlipEvent>,
    pub diagnostics: FlowDiagnostics,
}

impl Trajectory {
    pub fn first_flip(&self) -> Option<f64> {
        self.events.first().map(|e| e.z)
    }

    pub fn flips(&self) -> bool {
        !self.events.is_empty()
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectories hold at least one sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub tol: f64,
    /// Spacing of the uniform output grid; `None` records accepted steps.
    pub sample_step: Option<f64>,
    /// Stop as soon as this many flips were found.
    pub stop_after_flips: Option<usize>,
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            sample_step: Some(0.01),
            stop_after_flips: None,
        }
    }

    pub fn sample_step(mut self, dz: Option<f64>) -> Self {
        self.sample_step = dz;
        self
    }

    pub fn stop_after_flips(mut self, n: usize) -> Self {
        self.stop_after_flips = Some(n);
        self
    }
}

/// Integrate with a uniform output grid of spacing 0.01.
pub fn integrate(
    l0: PseudospinVector,
    params: &FlowParams,
    z_max: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_with(l0, params, z_max, &FlowOptions::with_tol(tol))
}

/// Per-step bookkeeping: flip detection, extrema and output sampling.
struct Tracker<'a> {
    params: &'a FlowParams,
    opts: &'a FlowOptions,
    e0: f64,
    samples: Vec<FlowSample>,
    next_sample: usize,
    events: Vec<FlipEvent>,
    /// Sign of `l3` outside the hysteresis band, once established.
    side: f64,
    /// Most recent raw zero of `l3` since `side` was last confirmed.
    pending_root: Option<f64>,
    max_norm_drift: f64,
    max_energy_drift: f64,
    min_l3: f64,
}

impl Tracker<'_> {
    fn sample(&self, z: f64, y: [f64; 3]) -> FlowSample {
        let l = PseudospinVector::from_array(y);
        FlowSample {
            z,
            l,
            energy: classical_energy(l, self.params.mu * self.params.b4(z)),
            b: self.params.b(z),
        }
    }

    fn observe_point(&mut self, z: f64, y: [f64; 3], step: &DenseStep<3>, z_prev: f64, l3_prev: f64) {
        let l = PseudospinVector::from_array(y);
        self.max_norm_drift = self.max_norm_drift.max((l.norm_sqr() - 1.0).abs());
        if self.params.envelope.is_none() {
            let e = classical_energy(l, self.params.mu);
            self.max_energy_drift = self.max_energy_drift.max((e - self.e0).abs());
        }
        self.min_l3 = self.min_l3.min(l.l3);

        if l3_prev.signum() != l.l3.signum() && l3_prev != 0.0 {
            let root = if l.l3 == 0.0 {
                z
            } else {
                bisect(|s| step.eval(s)[2], z_prev, z, FLIP_LOCATION_TOL)
            };
            self.pending_root = Some(root);
        }
        if l.l3.abs() > FLIP_HYSTERESIS {
            let s = l.l3.signum();
            if self.side == 0.0 {
                self.side = s;
            } else if s != self.side {
                let direction = if s < 0.0 { Crossing::Down } else { Crossing::Up };
                self.events.push(FlipEvent {
                    z: self.pending_root.unwrap_or(z),
                    direction,
                });
                self.side = s;
            }
            self.pending_root = None;
        }
    }

    fn step(&mut self, step: &DenseStep<3>, last: bool) {
        // interior points catch double crossings and shallow minima
        const SUB: usize = 4;
        let mut z_prev = step.z0;
        let mut l3_prev = step.start()[2];
        for k in 1..=SUB {
            let z = step.z0 + step.h * k as f64 / SUB as f64;
            let y = if k == SUB { step.end() } else { step.eval(z) };
            self.observe_point(z, y, step, z_prev, l3_prev);
            z_prev = z;
            l3_prev = y[2];
        }
        match self.opts.sample_step {
            Some(dz) => loop {
                let z = self.next_sample as f64 * dz;
                if z > step.z1() {
                    break;
                }
                self.samples.push(self.sample(z, step.eval(z)));
                self.next_sample += 1;
            },
            None => self.samples.push(self.sample(step.z1(), step.end())),
        }
        if last {
            let z1 = step.z1();
            if self.samples.last().is_some_and(|s| s.z < z1) {
                self.samples.push(self.sample(z1, step.end()));
            }
        }
    }
}

pub fn integrate_with(
    l0: PseudospinVector,
    params: &FlowParams,
    z_max: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if ((l0.norm_sqr()).sqrt() - 1.0).abs() > 1e-10 {
        return invalid(format!("initial vector must be a unit vector, |l0| = {}", l0.norm()));
    }
    if !(z_max > 0.0 && z_max.is_finite()) {
        return invalid(format!("z_max must be positive, got {z_max}"));
    }
    if !(opts.tol >= MIN_TARGET_TOL) {
        return invalid(format!("tol must be at least {MIN_TARGET_TOL:e}, got {}", opts.tol));
    }
    if let Some(dz) = opts.sample_step {
        if !(dz > 0.0) {
            return invalid(format!("sample step must be positive, got {dz}"));
        }
    }

    let mut tr = Tracker {
        params,
        opts,
        e0: classical_energy(l0, params.mu),
        samples: Vec::new(),
        next_sample: 1,
        events: Vec::new(),
        side: 0.0,
        pending_root: None,
        max_norm_drift: 0.0,
        max_energy_drift: 0.0,
        min_l3: l0.l3,
    };
    if l0.l3.abs() > FLIP_HYSTERESIS {
        tr.side = l0.l3.signum();
    }
    tr.samples.push(tr.sample(0.0, l0.to_array()));

    let sys = |z: f64, y: &[f64; 3]| params.rhs(z, y);
    let sol = Dop853::new(Dop853Options::for_target(opts.tol)).integrate(
        &sys,
        0.0,
        l0.to_array(),
        z_max,
        |step: &DenseStep<3>| {
            let enough = |n: usize| opts.stop_after_flips.is_some_and(|k| n >= k);
            let stop = enough(tr.events.len()) || {
                tr.step(step, step.z1() >= z_max);
                enough(tr.events.len())
            };
            if stop {
                let z1 = step.z1();
                if tr.samples.last().is_some_and(|s| s.z < z1) {
                    tr.samples.push(tr.sample(z1, step.end()));
                }
                return StepControl::Stop;
            }
            StepControl::Continue
        },
    )?;

    Ok(Trajectory {
        events: tr.events,
        diagnostics: FlowDiagnostics {
            max_norm_drift: tr.max_norm_drift,
            max_energy_drift: tr.max_energy_drift,
            min_l3: tr.min_l3,
            z_end: sol.z,
            accepted_steps: sol.stats.accepted,
            rejected_steps: sol.stats.rejected,
        },
        samples: tr.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn v(a: f64, b: f64, c: f64) -> PseudospinVector {
        PseudospinVector::new(a, b, c)
    }

    #[test]
    fn poles_are_fixed_points() {
        for mu in [0.0, 0.7, 3.0] {
            assert_eq!(rhs_static(PseudospinVector::NORTH, mu), v(0.0, 0.0, 0.0));
            assert_eq!(rhs_breathing(PseudospinVector::NORTH, mu, 17.0), v(0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn substitution_values() {
        assert_eq!(rhs_static(v(1.0, 0.0, 0.0), 1.0), v(0.0, 2.0, 0.0));
        assert_eq!(rhs_static(v(0.0, 1.0, 0.0), 1.0), v(-2.0, 0.0, 0.0));
        let eps = 0.01;
        let r = rhs_static(v(eps, 0.0, (1.0 - eps * eps).sqrt()), 0.0);
        assert_eq!(r, v(0.0, 2.0 * eps, 0.0));
        let l = v(0.3, -0.4, 0.5);
        assert_eq!(rhs_breathing(l, 0.8, 1.0), rhs_static(l, 0.8));
    }

    #[test]
    fn energy_values() {
        assert_eq!(classical_energy(PseudospinVector::NORTH, 5.0), 2.0);
        assert_eq!(classical_energy(v(1.0, 0.0, 0.0), 0.5), 1.0);
        assert_eq!(classical_energy(v(0.0, 1.0, 0.0), 0.5), -1.0);
    }

    #[test]
    fn free_precession_has_period_pi() {
        let l0 = PseudospinVector::seeded(0.1);
        let t = integrate(l0, &FlowParams::static_flow(0.0), PI, 1e-12).unwrap();
        let end = t.last();
        assert_abs_diff_eq!(end.z, PI, epsilon = 1e-15);
        assert!(end.l.max_abs_diff(&l0) < 1e-10);
        assert!(!t.flips());
    }

    #[test]
    fn flip_event_located_on_equator() {
        let l0 = PseudospinVector::seeded(0.01);
        let params = FlowParams::static_flow(2.0);
        let t = integrate(l0, &params, 10.0, 1e-11).unwrap();
        let ev = t.events[0];
        assert_eq!(ev.direction, Crossing::Down);
        // re-integrate to the flip and check l3 there
        let opts = FlowOptions::with_tol(1e-12).sample_step(None);
        let t2 = integrate_with(l0, &params, ev.z, &opts).unwrap();
        assert!(t2.last().l.l3.abs() < 1e-8, "{}", t2.last().l.l3);
        assert!(t.events.windows(2).all(|w| w[0].direction != w[1].direction));
    }

    #[test]
    fn stop_after_first_flip() {
        let l0 = PseudospinVector::seeded(0.05);
        let opts = FlowOptions::with_tol(1e-10).stop_after_flips(1);
        let t = integrate_with(l0, &FlowParams::static_flow(1.5), 100.0, &opts).unwrap();
        assert_eq!(t.events.len(), 1);
        assert!(t.diagnostics.z_end < 100.0);
    }

    #[test]
    fn samples_on_uniform_grid() {
        let t = integrate(PseudospinVector::seeded(0.2), &FlowParams::static_flow(0.3), 1.0, 1e-10)
            .unwrap();
        assert_eq!(t.samples.len(), 101);
        assert!(t.samples.windows(2).all(|w| w[1].z > w[0].z));
        assert_abs_diff_eq!(t.samples[50].z, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_unit_seed() {
        let r = integrate(v(0.0, 0.0, 1.1), &FlowParams::static_flow(1.0), 1.0, 1e-8);
        assert!(r.is_err());
    }
}
