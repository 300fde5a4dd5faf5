//! Linear stability of the poles, separatrix geometry and Floquet exponents
//! of the breathing-modulated tangent dynamics.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::ermakov::BreathingEnvelope;
use crate::error::{invalid, Error, Result};
use crate::flow::FlowParams;
use crate::ode::{Dop853, Dop853Options, StepControl};
use crate::shell::PseudospinVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub mu: f64,
    /// `sqrt(16 mu^2 - 4)` above threshold, else zero.
    pub linear_rate: f64,
    /// `sqrt(4 - 16 mu^2)` below threshold, else zero.
    pub oscillation_frequency: f64,
    pub unstable: bool,
    pub flips: bool,
    /// `1/mu - 1`, defined for `mu >= 1/2`.
    pub l3_min_separatrix: Option<f64>,
}

/// Small-angle analysis around the north pole: `l'' = (16 mu^2 - 4) l`.
pub fn linearize_pole(mu: f64) -> Result<StabilityReport> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return invalid(format!("mu must be finite and non-negative, got {mu}"));
    }
    let g = 16.0 * mu * mu - 4.0;
    Ok(StabilityReport {
        mu,
        linear_rate: g.max(0.0).sqrt(),
        oscillation_frequency: (-g).max(0.0).sqrt(),
        unstable: mu > 0.5,
        flips: mu > 1.0,
        l3_min_separatrix: (mu >= 0.5).then(|| 1.0 / mu - 1.0),
    })
}

/// Lowest `l3` on the separatrix `E = 2`.
pub fn separatrix_min_l3(mu: f64) -> Result<f64> {
    if !(mu > 0.5) {
        return invalid(format!("separatrix depth is undefined for mu <= 1/2, got {mu}"));
    }
    Ok(1.0 / mu - 1.0)
}

/// Hill form `y'' + Xi(z) y = 0` of the breathing tangent dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillCoefficients {
    pub mu: f64,
    pub constant: f64,
    /// Amplitude `4 mu c2` of the `-cos 2z` modulation.
    pub a2: f64,
    /// Amplitude `16 mu c4` of the `-cos 4z` modulation.
    pub a4: f64,
    pub envelope: BreathingEnvelope,
}

impl HillCoefficients {
    /// `4 - 4 mu c2 cos 2z - 16 mu c4 cos 4z` (first order in `mu`).
    pub fn xi_linear(&self, z: f64) -> f64 {
        let th = 2.0 * (z - self.envelope.phase);
        self.constant - self.a2 * th.cos() - self.a4 * (2.0 * th).cos()
    }

    /// Exact coefficient after the Liouville transform of the tangent system,
    /// `4 (1 - 4 q^2) + q'' / (1 + 2q) - 3 q'^2 / (1 + 2q)^2`, `q = mu b^4`.
    pub fn xi_exact(&self, z: f64) -> f64 {
        let (b4, d1, d2) = self.envelope.b4_derivatives(z);
        let (q, q1, q2) = (self.mu * b4, self.mu * d1, self.mu * d2);
        let s = 1.0 + 2.0 * q;
        4.0 * (1.0 - 4.0 * q * q) + q2 / s - 3.0 * q1 * q1 / (s * s)
    }
}

pub fn hill_coefficients(mu: f64, env: &BreathingEnvelope) -> HillCoefficients {
    HillCoefficients {
        mu,
        constant: 4.0,
        a2: 4.0 * mu * env.c2,
        a4: 16.0 * mu * env.c4,
        envelope: *env,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloquetMode {
    /// Perturbative Hill equation.
    LinearizedHill,
    /// Pole linearization with the full `b^4(z)`.
    ExactTangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetResult {
    pub sigma_numeric: f64,
    pub sigma_analytic: f64,
    pub monodromy_trace: f64,
    pub monodromy_det: f64,
    pub mode: FloquetMode,
}

impl FloquetResult {
    pub fn unstable(&self) -> bool {
        self.monodromy_trace.abs() > 2.0
    }
}

/// Weak-drive prediction `mu (E_b^2 - 4) / 4`.
pub fn sigma_analytic(mu: f64, env: &BreathingEnvelope) -> f64 {
    mu * (env.e_b * env.e_b - 4.0) / 4.0
}

const MONODROMY_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-8;

/// Leading Floquet exponent from the monodromy over one period `pi`.
pub fn floquet_exponent(
    mu: f64,
    env: &BreathingEnvelope,
    mode: FloquetMode,
) -> Result<FloquetResult> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return invalid(format!("mu must be finite and non-negative, got {mu}"));
    }
    let period = std::f64::consts::PI;
    let z0 = 0.0;
    let solver = Dop853::new(Dop853Options::with_tol(MONODROMY_TOL));
    let hill = hill_coefficients(mu, env);
    let column = |y0: [f64; 2]| -> Result<[f64; 2]> {
        let sol = match mode {
            FloquetMode::LinearizedHill => {
                let f = |z: f64, y: &[f64; 2]| [y[1], -hill.xi_linear(z) * y[0]];
                solver.integrate(&f, z0, y0, z0 + period, |_| StepControl::Continue)?
            }
            FloquetMode::ExactTangent => {
                let f = |z: f64, y: &[f64; 2]| {
                    let q = mu * env.b4(z);
                    [-(2.0 + 4.0 * q) * y[1], (2.0 - 4.0 * q) * y[0]]
                };
                solver.integrate(&f, z0, y0, z0 + period, |_| StepControl::Continue)?
            }
        };
        Ok(sol.y)
    };
    let c1 = column([1.0, 0.0])?;
    let c2 = column([0.0, 1.0])?;
    let m = Matrix2::new(c1[0], c2[0], c1[1], c2[1]);
    let (tr, det) = (m.trace(), m.determinant());
    // det = ad - bc cancels at the scale of |M|^2 for strongly unstable orbits
    let scale = m.iter().fold(1.0f64, |a, x| a.max(x.abs())).powi(2);
    if !det.is_finite() || (det - 1.0).abs() > DET_TOL * scale {
        return Err(Error::Monodromy { det });
    }
    // eigenvalues of a 2x2 with det ~ 1: real pair iff |tr| > 2
    let disc = 0.25 * tr * tr - det;
    let rho = if disc > 0.0 {
        0.5 * tr.abs() + disc.sqrt()
    } else {
        det.abs().sqrt()
    };
    Ok(FloquetResult {
        sigma_numeric: (rho.ln() / period).max(0.0),
        sigma_analytic: sigma_analytic(mu, env),
        monodromy_trace: tr,
        monodromy_det: det,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    Center,
    Saddle,
    /// Zero tangent-plane determinant (threshold).
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub l: PseudospinVector,
    pub kind: FixedPointKind,
    /// Determinant of the Jacobian restricted to the tangent plane.
    pub tangent_det: f64,
}

const JACOBIAN_STEP: f64 = 1e-6;

/// Jacobian of the static flow by central differences.
pub fn numerical_jacobian(l: PseudospinVector, mu: f64) -> Matrix3<f64> {
    let params = FlowParams::static_flow(mu);
    let p = l.to_array();
    let mut j = Matrix3::zeros();
    for c in 0..3 {
        let (mut a, mut b) = (p, p);
        a[c] += JACOBIAN_STEP;
        b[c] -= JACOBIAN_STEP;
        let (fa, fb) = (params.rhs(0.0, &a), params.rhs(0.0, &b));
        for r in 0..3 {
            j[(r, c)] = (fa[r] - fb[r]) / (2.0 * JACOBIAN_STEP);
        }
    }
    j
}

fn tangent_basis(l: PseudospinVector) -> Matrix2x3<f64> {
    let n = Vector3::from(l.to_array()).normalize();
    let seed = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (seed - n * n.dot(&seed)).normalize();
    let e2 = n.cross(&e1);
    Matrix2x3::from_rows(&[e1.transpose(), e2.transpose()])
}

/// Classify an equilibrium by the Jacobian on its tangent plane.
pub fn classify(l: PseudospinVector, mu: f64) -> (FixedPointKind, f64) {
    let e = tangent_basis(l);
    let jt: Matrix2<f64> = e * numerical_jacobian(l, mu) * e.transpose();
    let det = jt.determinant();
    let scale = jt.norm().max(1.0);
    let kind = if det.abs() <= 1e-7 * scale * scale {
        FixedPointKind::Degenerate
    } else if det > 0.0 {
        FixedPointKind::Center
    } else {
        FixedPointKind::Saddle
    };
    (kind, det)
}

/// Equilibria of the static flow: the poles, plus four points at
/// `l3 = +-1/(2 mu)` once `mu > 1/2`.
pub fn fixed_points(mu: f64) -> Result<Vec<FixedPoint>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return invalid(format!("mu must be finite and non-negative, got {mu}"));
    }
    let mut pts = vec![
        PseudospinVector::new(0.0, 0.0, 1.0),
        PseudospinVector::new(0.0, 0.0, -1.0),
    ];
    if mu > 0.5 {
        let h = 0.5 / mu;
        let r = (1.0 - h * h).sqrt();
        pts.extend([
            PseudospinVector::new(r, 0.0, h),
            PseudospinVector::new(-r, 0.0, h),
            PseudospinVector::new(0.0, r, -h),
            PseudospinVector::new(0.0, -r, -h),
        ]);
    }
    Ok(pts
        .into_iter()
        .map(|l| {
            let (kind, tangent_det) = classify(l, mu);
            FixedPoint { l, kind, tangent_det }
        })
        .collect())
}

/// Least-squares slope of `ln|y|` against `z` over samples whose magnitude
/// lies in `[lo, hi]`. Returns `None` with fewer than three usable points.
pub fn fit_growth_rate(samples: &[(f64, f64)], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, y)| (lo..=hi).contains(&y.abs()))
        .map(|&(z, y)| (z, y.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (sz, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mz, my) = (sz / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mz) * (p.1 - my), a.1 + (p.0 - mz).powi(2))
    });
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pole_report_values() {
        let r = linearize_pole(0.5).unwrap();
        assert_eq!(r.linear_rate, 0.0);
        assert!(!r.unstable);
        let r = linearize_pole(1.0).unwrap();
        assert_eq!(r.l3_min_separatrix, Some(0.0));
        assert!(r.unstable && !r.flips);
        let r = linearize_pole(2.0).unwrap();
        assert_abs_diff_eq!(r.linear_rate, 60f64.sqrt(), epsilon = 1e-14);
        assert_eq!(r.l3_min_separatrix, Some(-0.5));
        assert!(r.flips);
        let r = linearize_pole(0.25).unwrap();
        assert_abs_diff_eq!(r.oscillation_frequency, 3f64.sqrt(), epsilon = 1e-14);
        assert_eq!(r.l3_min_separatrix, None);
    }

    #[test]
    fn separatrix_values_and_domain() {
        assert_eq!(separatrix_min_l3(1.0).unwrap(), 0.0);
        assert_eq!(separatrix_min_l3(2.0).unwrap(), -0.5);
        assert!(separatrix_min_l3(0.5).is_err());
    }

    #[test]
    fn hill_without_breathing_is_constant() {
        let h = hill_coefficients(0.3, &BreathingEnvelope::matched());
        assert_eq!((h.constant, h.a2, h.a4), (4.0, 0.0, 0.0));
        assert_eq!(h.xi_linear(0.77), 4.0);
    }

    #[test]
    fn hill_modulation_amplitudes() {
        // b0 = 2 gives E_b = 4.25; use the harmonic formulas at E_b = 2.5 via b0
        let b0 = ((2.5 + (2.5f64 * 2.5 - 4.0).sqrt()) / 2.0).sqrt();
        let env = BreathingEnvelope::new(b0, 0.0).unwrap();
        assert_abs_diff_eq!(env.e_b, 2.5, epsilon = 1e-14);
        let h = hill_coefficients(0.01, &env);
        assert_abs_diff_eq!(h.a2, 0.075, epsilon = 1e-14);
        assert_abs_diff_eq!(h.a4, 0.045, epsilon = 1e-14);
    }

    #[test]
    fn exact_xi_reduces_to_linear_form_at_small_mu() {
        let env = BreathingEnvelope::new(1.3, 0.0).unwrap();
        for mu in [1e-3, 1e-4] {
            let h = hill_coefficients(mu, &env);
            let bound = 50.0 * mu * mu * env.c0 * env.c0;
            for k in 0..50 {
                let z = k as f64 * 0.0628;
                assert!((h.xi_exact(z) - h.xi_linear(z)).abs() < bound);
            }
        }
    }

    #[test]
    fn floquet_is_zero_without_drive() {
        let env = BreathingEnvelope::matched();
        for mode in [FloquetMode::LinearizedHill, FloquetMode::ExactTangent] {
            let f = floquet_exponent(0.01, &env, mode).unwrap();
            assert!(f.sigma_numeric.abs() < 1e-6);
            assert!((f.monodromy_det - 1.0).abs() < 1e-8);
            assert!(!f.unstable());
        }
    }

    #[test]
    fn static_threshold_of_tangent_system() {
        let env = BreathingEnvelope::matched();
        let below = floquet_exponent(0.49, &env, FloquetMode::ExactTangent).unwrap();
        let above = floquet_exponent(0.51, &env, FloquetMode::ExactTangent).unwrap();
        assert_eq!(below.sigma_numeric, 0.0);
        assert!(above.sigma_numeric > 0.0);
        // static: sigma equals the linear rate
        let r = floquet_exponent(0.75, &env, FloquetMode::ExactTangent).unwrap();
        assert_abs_diff_eq!(r.sigma_numeric, 5f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn fixed_points_and_classes() {
        let pts = fixed_points(0.0).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p.kind == FixedPointKind::Center));

        let pts = fixed_points(1.0).unwrap();
        assert_eq!(pts[0].kind, FixedPointKind::Saddle);

        let pts = fixed_points(2.0).unwrap();
        assert_eq!(pts.len(), 6);
        for p in &pts[2..] {
            assert_abs_diff_eq!(p.l.l3.abs(), 0.25, epsilon = 1e-15);
            assert_eq!(p.kind, FixedPointKind::Center);
            let r = FlowParams::static_flow(2.0).rhs(0.0, &p.l.to_array());
            assert!(r.iter().all(|x| x.abs() < 1e-14));
        }
        assert!(pts[..2].iter().all(|p| p.kind == FixedPointKind::Saddle));
    }

    #[test]
    fn growth_fit_recovers_exponent() {
        let s: Vec<(f64, f64)> = (0..100).map(|k| (k as f64 * 0.1, 1e-3 * (1.7 * k as f64 * 0.1).exp())).collect();
        assert_abs_diff_eq!(fit_growth_rate(&s, 0.0, 1e9).unwrap(), 1.7, epsilon = 1e-10);
        assert!(fit_growth_rate(&s, 1e10, 1e11).is_none());
    }
}
