//! Fixed-shell Schrödinger propagation under
//! `H(z) = 2 L3 + mu0 b^4(z) (L1^2 - L2^2)`.
//!
//! Exponentials are taken in a Lanczos (Krylov) subspace with an a posteriori
//! error estimate; the time-dependent case uses the fourth-order
//! commutator-free Magnus scheme, which needs two exponentials per step.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ermakov::BreathingEnvelope;
use crate::error::{invalid, Error, Result};
use crate::flow::{Crossing, FlipEvent, FLIP_HYSTERESIS};
use crate::shell::{self, raw_expectations, PseudospinVector, ShellSpec, ShellState};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// `2 L3 + s A` with `A = (L+^2 + L-^2)/2` stored as its (real) second band.
#[derive(Debug, Clone)]
pub struct BandedHamiltonian {
    spec: ShellSpec,
    m: Vec<f64>,
    a: Vec<f64>,
}

impl BandedHamiltonian {
    pub fn new(spec: &ShellSpec) -> Self {
        let aniso = shell::anisotropy_operator(spec);
        let n = spec.dim();
        let a = (0..n.saturating_sub(2)).map(|k| aniso.get(k, k + 2).re).collect();
        let m = (0..n).map(|k| spec.m_of(k)).collect();
        Self { spec: *spec, m, a }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// Strength `mu0 b^4` multiplying `A` at position `z`.
    pub fn strength(&self, b4: f64) -> f64 {
        self.spec.mu0() * b4
    }

    /// `out = (2 L3 + s A) v`.
    pub fn apply(&self, s: f64, v: &[C], out: &mut [C]) {
        let n = self.dim();
        for k in 0..n {
            out[k] = v[k] * (2.0 * self.m[k]);
        }
        for (k, &a) in self.a.iter().enumerate() {
            let a = a * s;
            out[k] += v[k + 2] * a;
            out[k + 2] += v[k] * a;
        }
    }

    /// `<v|A|v>`.
    pub fn anisotropy_expectation(&self, v: &[C]) -> f64 {
        self.a
            .iter()
            .enumerate()
            .map(|(k, &a)| 2.0 * a * (v[k].conj() * v[k + 2]).re)
            .sum()
    }

    /// Upper bound on the spectral radius of `2 L3 + s A` (Gershgorin).
    pub fn norm_bound(&self, s: f64) -> f64 {
        let amax = self.a.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        2.0 * self.spec.j() + 2.0 * s.abs() * amax
    }
}

/// Statistics of the Krylov exponentials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KrylovStats {
    pub exponentials: usize,
    pub matvecs: usize,
    pub max_dimension: usize,
    pub splits: usize,
}

const KRYLOV_MAX: usize = 96;
const KRYLOV_CHECK: usize = 6;

fn dot(u: &[C], v: &[C]) -> C {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos workspace reused across steps.
struct Krylov {
    basis: Vec<Vec<C>>,
    w: Vec<C>,
}

impl Krylov {
    fn new(n: usize) -> Self {
        Self {
            basis: Vec::new(),
            w: vec![ZERO; n],
        }
    }

    /// Small-matrix exponential `exp(-i t T) e1` of the Lanczos tridiagonal.
    fn small_expm(alpha: &[f64], beta: &[f64], t: f64) -> Vec<C> {
        let m = alpha.len();
        let mut tri = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            tri[(k, k)] = alpha[k];
            if k + 1 < m {
                tri[(k, k + 1)] = beta[k];
                tri[(k + 1, k)] = beta[k];
            }
        }
        let eig = SymmetricEigen::new(tri);
        let q = &eig.eigenvectors;
        (0..m)
            .map(|r| {
                (0..m)
                    .map(|c| C::from_polar(q[(r, c)] * q[(0, c)], -t * eig.eigenvalues[c]))
                    .sum()
            })
            .collect()
    }

    /// `exp(-i t H_s) v` in place. Returns `false` when `KRYLOV_MAX` vectors
    /// do not reach `tol`; `v` is then untouched.
    fn expm(
        &mut self,
        h: &BandedHamiltonian,
        s: f64,
        t: f64,
        v: &mut [C],
        tol: f64,
        stats: &mut KrylovStats,
    ) -> bool {
        let n = v.len();
        let beta0 = norm(v);
        if beta0 == 0.0 {
            return true;
        }
        let m_cap = KRYLOV_MAX.min(n);
        if self.basis.len() < m_cap + 1 {
            self.basis.resize(m_cap + 1, vec![ZERO; n]);
        }
        for (b, x) in self.basis[0].iter_mut().zip(v.iter()) {
            *b = x / beta0;
        }
        let mut alpha = Vec::with_capacity(m_cap);
        let mut beta: Vec<f64> = Vec::with_capacity(m_cap);
        let mut coeffs = None;
        for k in 0..m_cap {
            h.apply(s, &self.basis[k], &mut self.w);
            stats.matvecs += 1;
            let a = dot(&self.basis[k], &self.w).re;
            alpha.push(a);
            for i in 0..n {
                let mut x = self.w[i] - self.basis[k][i] * a;
                if k > 0 {
                    x -= self.basis[k - 1][i] * beta[k - 1];
                }
                self.w[i] = x;
            }
            // one pass of local reorthogonalization
            for back in k.saturating_sub(1)..=k {
                let c = dot(&self.basis[back], &self.w);
                for i in 0..n {
                    let b = self.basis[back][i];
                    self.w[i] -= b * c;
                }
            }
            let b = norm(&self.w);
            let m = k + 1;
            let breakdown = b <= 1e-13 * (a.abs() + beta.last().copied().unwrap_or(0.0) + 1.0);
            if breakdown || m % KRYLOV_CHECK == 0 || m == m_cap {
                let y = Self::small_expm(&alpha, &beta, t);
                let err = if breakdown { 0.0 } else { beta0 * b * y[m - 1].norm() };
                if err <= tol {
                    coeffs = Some(y);
                    stats.max_dimension = stats.max_dimension.max(m);
                    break;
                }
            }
            if m == m_cap {
                break;
            }
            beta.push(b);
            let (head, tail) = self.basis.split_at_mut(k + 1);
            for (dst, src) in tail[0].iter_mut().zip(&self.w) {
                *dst = src / b;
            }
            let _ = head;
        }
        let Some(y) = coeffs else {
            return false;
        };
        stats.exponentials += 1;
        v.iter_mut().for_each(|x| *x = ZERO);
        for (c, q) in y.iter().zip(&self.basis) {
            let c = c * beta0;
            for (x, qi) in v.iter_mut().zip(q) {
                *x += c * qi;
            }
        }
        true
    }

    /// Exponential over `t`, splitting the interval until Lanczos converges.
    fn expm_split(
        &mut self,
        h: &BandedHamiltonian,
        s: f64,
        t: f64,
        v: &mut [C],
        tol: f64,
        stats: &mut KrylovStats,
        depth: usize,
    ) -> Result<()> {
        if self.expm(h, s, t, v, tol, stats) {
            return Ok(());
        }
        if depth > 30 {
            return Err(Error::Tolerance {
                requested: tol,
                achieved: f64::NAN,
            });
        }
        stats.splits += 1;
        self.expm_split(h, s, 0.5 * t, v, 0.5 * tol, stats, depth + 1)?;
        self.expm_split(h, s, 0.5 * t, v, 0.5 * tol, stats, depth + 1)
    }
}

// fourth-order commutator-free Magnus weights and nodes
const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const CF4_A1: f64 = 0.25 - SQRT3_6;
const CF4_A2: f64 = 0.25 + SQRT3_6;
const CF4_C1: f64 = 0.5 - SQRT3_6;
const CF4_C2: f64 = 0.5 + SQRT3_6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub spec: ShellSpec,
    pub envelope: Option<BreathingEnvelope>,
    /// Start of the run; the envelope is evaluated at absolute `z`.
    pub z0: f64,
    pub z_max: f64,
    pub sample_step: f64,
    pub tol: f64,
    /// Largest Magnus step for breathing runs.
    pub max_step: f64,
    pub stop_after_flips: Option<usize>,
}

impl PropagationConfig {
    pub fn new(spec: ShellSpec, z_max: f64, sample_step: f64, tol: f64) -> Self {
        Self {
            spec,
            envelope: None,
            z0: 0.0,
            z_max,
            sample_step,
            tol,
            max_step: 0.02,
            stop_after_flips: None,
        }
    }

    pub fn with_envelope(mut self, env: Option<BreathingEnvelope>) -> Self {
        self.envelope = env;
        self
    }

    pub fn starting_at(mut self, z0: f64) -> Self {
        self.z0 = z0;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    pub fn stop_after_flips(mut self, n: usize) -> Self {
        self.stop_after_flips = Some(n);
        self
    }

    pub fn b4(&self, z: f64) -> f64 {
        self.envelope.map_or(1.0, |e| e.b4(z))
    }

    fn validate(&self) -> Result<()> {
        if !(self.z0 >= 0.0 && self.z_max > self.z0 && self.z_max.is_finite()) {
            return invalid(format!(
                "need 0 <= z0 < z_max, got z0 = {}, z_max = {}",
                self.z0, self.z_max
            ));
        }
        if !(self.sample_step > 0.0) {
            return invalid(format!("sample_step must be positive, got {}", self.sample_step));
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.max_step > 0.0) {
            return invalid(format!("max_step must be positive, got {}", self.max_step));
        }
        if self.spec.two_j() == 0 {
            return Err(Error::DegenerateShell);
        }
        Ok(())
    }
}

/// Observables recorded at one output point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumSample {
    pub z: f64,
    pub l: PseudospinVector,
    /// Symmetrized second moments `<{L_i, L_j}>/2`, unnormalized.
    pub moments: [[f64; 3]; 3],
    pub norm: f64,
    /// `<H(z)> / j`.
    pub energy: f64,
    pub casimir: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantumDiagnostics {
    pub max_norm_drift: f64,
    /// Static runs only.
    pub max_energy_drift: f64,
    /// Relative to `j(j+1)`.
    pub max_casimir_drift: f64,
    pub steps: usize,
    pub krylov: KrylovStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumTrajectory {
    pub spec: ShellSpec,
    pub envelope: Option<BreathingEnvelope>,
    pub samples: Vec<QuantumSample>,
    pub events: Vec<FlipEvent>,
    pub diagnostics: QuantumDiagnostics,
    #[serde(skip)]
    pub final_state: Option<ShellState>,
}

impl QuantumTrajectory {
    pub fn first_flip(&self) -> Option<f64> {
        self.events.first().map(|e| e.z)
    }

    pub fn min_l3(&self) -> f64 {
        self.samples.iter().map(|s| s.l.l3).fold(f64::INFINITY, f64::min)
    }

    /// `l(z)` by linear interpolation between samples.
    pub fn interpolate(&self, z: f64) -> Option<PseudospinVector> {
        let i = self.samples.partition_point(|s| s.z < z);
        if i == 0 {
            return self.samples.first().filter(|s| s.z == z).map(|s| s.l);
        }
        let b = self.samples.get(i)?;
        let a = &self.samples[i - 1];
        let t = (z - a.z) / (b.z - a.z);
        let mix = |x: f64, y: f64| x + t * (y - x);
        Some(PseudospinVector::new(
            mix(a.l.l1, b.l.l1),
            mix(a.l.l2, b.l.l2),
            mix(a.l.l3, b.l.l3),
        ))
    }
}

fn observe(
    h: &BandedHamiltonian,
    spec: &ShellSpec,
    z: f64,
    b4: f64,
    b: f64,
    psi: &[C],
    gens: &shell::Generators,
) -> QuantumSample {
    let j = spec.j();
    let [e1, e2, e3] = raw_expectations(spec, psi);
    let w = [gens.l1.apply(psi), gens.l2.apply(psi), gens.l3.apply(psi)];
    let mut moments = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in r..3 {
            let v = dot(&w[r], &w[c]).re;
            moments[r][c] = v;
            moments[c][r] = v;
        }
    }
    let nrm = norm(psi);
    let energy = 2.0 * e3 + h.strength(b4) * h.anisotropy_expectation(psi);
    QuantumSample {
        z,
        l: PseudospinVector::new(e1 / j, e2 / j, e3 / j),
        moments,
        norm: nrm,
        energy: energy / j,
        casimir: moments[0][0] + moments[1][1] + moments[2][2],
        b,
    }
}

/// Flip bookkeeping on the sample grid (same hysteresis as the classical flow).
struct FlipTracker {
    side: f64,
    pending: Option<f64>,
    events: Vec<FlipEvent>,
}

impl FlipTracker {
    fn new(l3: f64) -> Self {
        Self {
            side: if l3.abs() > FLIP_HYSTERESIS { l3.signum() } else { 0.0 },
            pending: None,
            events: Vec::new(),
        }
    }

    fn push(&mut self, z0: f64, l30: f64, z1: f64, l31: f64) {
        if l30 != 0.0 && l30.signum() != l31.signum() {
            self.pending = Some(z0 + (z1 - z0) * l30 / (l30 - l31));
        }
        if l31.abs() > FLIP_HYSTERESIS {
            let s = l31.signum();
            if self.side == 0.0 {
                self.side = s;
            } else if s != self.side {
                self.events.push(FlipEvent {
                    z: self.pending.unwrap_or(z1),
                    direction: if s < 0.0 { Crossing::Down } else { Crossing::Up },
                });
                self.side = s;
            }
            self.pending = None;
        }
    }
}

/// Solve `i d psi/dz = H(z) psi` and sample the observables on a uniform grid.
pub fn propagate(state0: &ShellState, config: &PropagationConfig) -> Result<QuantumTrajectory> {
    config.validate()?;
    let spec = &config.spec;
    if state0.dim() != spec.dim() {
        return invalid(format!(
            "state has {} amplitudes, shell needs {}",
            state0.dim(),
            spec.dim()
        ));
    }
    if (state0.norm() - 1.0).abs() > 1e-10 {
        return invalid(format!("initial state must be normalized, |psi| = {}", state0.norm()));
    }
    let h = BandedHamiltonian::new(spec);
    let gens = shell::build_generators(spec);
    let mut psi = state0.amplitudes.clone();
    let mut krylov = Krylov::new(spec.dim());
    let mut kst = KrylovStats::default();
    let env = config.envelope;
    let bz = |z: f64| env.map_or(1.0, |e| e.b(z));

    let z0 = config.z0;
    let n_samples = ((config.z_max - z0) / config.sample_step - 1e-9).ceil().max(1.0) as usize;
    let substeps = match env {
        None => 1,
        Some(_) => (config.sample_step / config.max_step - 1e-9).ceil().max(1.0) as usize,
    };
    let total_steps = n_samples * substeps;
    let step_tol = (config.tol / total_steps as f64).max(1e-15);

    let first = observe(&h, spec, z0, config.b4(z0), bz(z0), &psi, &gens);
    let (e0, cas0) = (first.energy, first.casimir);
    let mut diag = QuantumDiagnostics::default();
    let mut flips = FlipTracker::new(first.l.l3);
    let mut samples = vec![first];

    for k in 0..n_samples {
        let za = z0 + k as f64 * config.sample_step;
        let zb = (z0 + (k + 1) as f64 * config.sample_step).min(config.z_max);
        let dz = (zb - za) / substeps as f64;
        for s in 0..substeps {
            let z = za + s as f64 * dz;
            match env {
                None => {
                    krylov.expm_split(&h, spec.mu0(), dz, &mut psi, step_tol, &mut kst, 0)?;
                }
                Some(e) => {
                    let b1 = e.b4(z + CF4_C1 * dz);
                    let b2 = e.b4(z + CF4_C2 * dz);
                    // each factor is exp(-i (dz/2) (2 L3 + mu0 beta A))
                    let beta_right = 2.0 * (CF4_A2 * b1 + CF4_A1 * b2);
                    let beta_left = 2.0 * (CF4_A1 * b1 + CF4_A2 * b2);
                    let tol = 0.5 * step_tol;
                    krylov.expm_split(&h, h.strength(beta_right), 0.5 * dz, &mut psi, tol, &mut kst, 0)?;
                    krylov.expm_split(&h, h.strength(beta_left), 0.5 * dz, &mut psi, tol, &mut kst, 0)?;
                }
            }
            diag.steps += 1;
        }
        let smp = observe(&h, spec, zb, config.b4(zb), bz(zb), &psi, &gens);
        diag.max_norm_drift = diag.max_norm_drift.max((smp.norm - 1.0).abs());
        if env.is_none() {
            diag.max_energy_drift = diag.max_energy_drift.max((smp.energy - e0).abs());
        }
        diag.max_casimir_drift = diag.max_casimir_drift.max((smp.casimir - cas0).abs() / cas0);
        let prev = samples.last().expect("non-empty");
        flips.push(prev.z, prev.l.l3, smp.z, smp.l.l3);
        samples.push(smp);
        if config.stop_after_flips.is_some_and(|n| flips.events.len() >= n) {
            break;
        }
    }
    diag.krylov = kst;
    if diag.max_norm_drift > 10.0 * config.tol {
        return Err(Error::Tolerance {
            requested: config.tol,
            achieved: diag.max_norm_drift,
        });
    }
    Ok(QuantumTrajectory {
        spec: *spec,
        envelope: env,
        samples,
        events: flips.events,
        diagnostics: diag,
        final_state: Some(ShellState::new(psi)),
    })
}

/// Largest mismatch between finite-difference `d<L_i>/dz` and the exact
/// Heisenberg right-hand sides, divided by `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergResidual {
    pub per_component: [f64; 3],
    pub max: f64,
    pub points: usize,
}

/// Heisenberg check on a uniformly sampled trajectory (five-point stencil).
pub fn heisenberg_residual(traj: &QuantumTrajectory) -> Result<HeisenbergResidual> {
    let s = &traj.samples;
    if s.len() < 5 {
        return invalid("need at least five samples for the Heisenberg check");
    }
    let dz = s[1].z - s[0].z;
    let j = traj.spec.j();
    let mu0 = traj.spec.mu0();
    let mut res = [0.0f64; 3];
    let mut points = 0;
    for k in 2..s.len() - 2 {
        if ((s[k + 2].z - s[k - 2].z) - 4.0 * dz).abs() > 1e-9 * dz.max(1.0) {
            continue;
        }
        points += 1;
        let q = mu0 * traj.envelope.map_or(1.0, |e| e.b4(s[k].z));
        let m = &s[k].moments;
        // <L_i> = j l_i; anticommutators {L_i, L_j} = 2 M_ij
        let l = s[k].l;
        let rhs = [
            j * (-2.0 * l.l2) - q * 2.0 * m[1][2],
            j * (2.0 * l.l1) - q * 2.0 * m[0][2],
            q * 2.0 * 2.0 * m[0][1],
        ];
        for (i, r) in rhs.iter().enumerate() {
            let f = |p: usize| j * s[p].l.to_array()[i];
            let d = (f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2)) / (12.0 * dz);
            res[i] = res[i].max((d - r).abs() / j);
        }
    }
    if points == 0 {
        return invalid("trajectory is not uniformly sampled");
    }
    Ok(HeisenbergResidual {
        per_component: res,
        max: res.iter().copied().fold(0.0, f64::max),
        points,
    })
}

/// Connected second cumulants `g_ij = (<{L_i,L_j}>/2 - <L_i><L_j>) / j^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureGap {
    pub z: Vec<f64>,
    pub g: Vec<[[f64; 3]; 3]>,
}

impl ClosureGap {
    /// `max |g_ij|` over samples with `z <= z_upto`.
    pub fn max_upto(&self, z_upto: f64) -> f64 {
        self.z
            .iter()
            .zip(&self.g)
            .filter(|(z, _)| **z <= z_upto)
            .flat_map(|(_, g)| g.iter().flatten())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn closure_gap(traj: &QuantumTrajectory) -> ClosureGap {
    let j = traj.spec.j();
    let j2 = j * j;
    let g = traj
        .samples
        .iter()
        .map(|s| {
            let l = s.l.to_array();
            let mut g = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    g[r][c] = s.moments[r][c] / j2 - l[r] * l[c];
                }
            }
            g
        })
        .collect();
    ClosureGap {
        z: traj.samples.iter().map(|s| s.z).collect(),
        g,
    }
}

/// Step-halving comparison of breathing runs: largest `|l_h - l_{h/2}|`
/// on the common sample grid.
pub fn step_halving_difference(
    state0: &ShellState,
    config: &PropagationConfig,
) -> Result<f64> {
    let coarse = propagate(state0, config)?;
    let fine = propagate(state0, &config.with_max_step(0.5 * config.max_step))?;
    Ok(coarse
        .samples
        .iter()
        .zip(&fine.samples)
        .map(|(a, b)| a.l.max_abs_diff(&b.l))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shell::{build_effective_hamiltonian, seeded_state};

    fn dense_evolution(spec: &ShellSpec, psi0: &[C], z: f64) -> Vec<C> {
        let hm = build_effective_hamiltonian(spec).to_dense();
        let eig = SymmetricEigen::new(hm);
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C::from_polar(1.0, -z * e)));
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        let v = nalgebra::DVector::from_column_slice(psi0);
        (u * v).iter().copied().collect()
    }

    #[test]
    fn banded_apply_matches_operator() {
        let spec = ShellSpec::new(9, 0.4).unwrap();
        let h = BandedHamiltonian::new(&spec);
        let op = build_effective_hamiltonian(&spec);
        let v: Vec<C> = (0..spec.dim()).map(|k| C::new(k as f64, 1.0 - k as f64)).collect();
        let mut out = vec![ZERO; spec.dim()];
        h.apply(spec.mu0(), &v, &mut out);
        let r = op.apply(&v);
        assert!(out.iter().zip(&r).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn matches_dense_exponential_at_small_j() {
        let spec = ShellSpec::new(4, 0.3).unwrap();
        let psi0 = seeded_state(&spec, 0.4).unwrap();
        let cfg = PropagationConfig::new(spec, 3.0, 0.05, 1e-12);
        let tr = propagate(&psi0, &cfg).unwrap();
        for s in &tr.samples {
            let exact = dense_evolution(&spec, &psi0.amplitudes, s.z);
            let l = crate::shell::expectations(&ShellState::new(exact), &spec).unwrap();
            assert!(s.l.max_abs_diff(&l) < 1e-8, "z={}", s.z);
        }
    }

    #[test]
    fn free_precession_rotates_rigidly() {
        let spec = ShellSpec::new(30, 0.0).unwrap();
        let delta = 0.3;
        let psi0 = seeded_state(&spec, delta).unwrap();
        let tr = propagate(&psi0, &PropagationConfig::new(spec, 2.0, 0.1, 1e-12)).unwrap();
        for s in &tr.samples {
            let (sn, cs) = (2.0 * s.z).sin_cos();
            let expect = PseudospinVector::new(delta.sin() * cs, delta.sin() * sn, delta.cos());
            assert!(s.l.max_abs_diff(&expect) < 1e-10);
        }
    }

    #[test]
    fn pole_state_keeps_transverse_means_zero() {
        let spec = ShellSpec::with_control(40, 1.2).unwrap();
        let tr = propagate(&ShellState::pole(&spec), &PropagationConfig::new(spec, 2.0, 0.05, 1e-10))
            .unwrap();
        for s in &tr.samples {
            assert!(s.l.l1.abs() < 1e-12 && s.l.l2.abs() < 1e-12);
        }
    }

    #[test]
    fn breathing_cf4_matches_fine_reference() {
        let spec = ShellSpec::with_control(20, 0.05).unwrap();
        let env = BreathingEnvelope::new(1.6, 0.0).unwrap();
        let psi0 = seeded_state(&spec, 0.2).unwrap();
        let cfg = PropagationConfig::new(spec, 2.0, 0.1, 1e-12).with_envelope(Some(env));
        let a = propagate(&psi0, &cfg.with_max_step(0.05)).unwrap();
        let b = propagate(&psi0, &cfg.with_max_step(0.025)).unwrap();
        let c = propagate(&psi0, &cfg.with_max_step(0.0125)).unwrap();
        let d1 = a.samples.last().unwrap().l.max_abs_diff(&c.samples.last().unwrap().l);
        let d2 = b.samples.last().unwrap().l.max_abs_diff(&c.samples.last().unwrap().l);
        // fourth order: halving the step cuts the error by ~16 (7.5 allows for the reference error)
        assert!(d1 / d2 > 7.5, "{d1} {d2}");
        assert!(a.diagnostics.max_norm_drift < 1e-10);
    }

    #[test]
    fn invariants_and_heisenberg_check() {
        let spec = ShellSpec::with_control(40, 1.2).unwrap();
        let psi0 = seeded_state(&spec, 0.3).unwrap();
        let tr = propagate(&psi0, &PropagationConfig::new(spec, 0.5, 1e-3, 1e-11)).unwrap();
        assert!(tr.diagnostics.max_norm_drift < 1e-10);
        assert!(tr.diagnostics.max_energy_drift < 1e-10);
        assert!(tr.diagnostics.max_casimir_drift < 1e-12);
        assert!(heisenberg_residual(&tr).unwrap().max < 1e-5);
    }

    #[test]
    fn linear_limit_conserves_l3() {
        let spec = ShellSpec::new(12, 0.0).unwrap();
        let psi0 = seeded_state(&spec, 0.7).unwrap();
        let tr = propagate(&psi0, &PropagationConfig::new(spec, 1.0, 1e-3, 1e-12)).unwrap();
        let r = heisenberg_residual(&tr).unwrap();
        // finite differences amplify rounding by 1/dz
        assert!(r.per_component[2] < 1e-10);
        let l30 = tr.samples[0].l.l3;
        let dev = tr.samples.iter().map(|s| (s.l.l3 - l30).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn pole_cumulants_are_one_over_two_j() {
        let spec = ShellSpec::new(100, 0.0).unwrap();
        let tr = propagate(&ShellState::pole(&spec), &PropagationConfig::new(spec, 0.1, 0.1, 1e-12))
            .unwrap();
        let g = closure_gap(&tr);
        let j = spec.j();
        assert!((g.g[0][0][0] - 0.5 / j).abs() < 1e-14);
        assert!((g.g[0][1][1] - 0.5 / j).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_config() {
        let spec = ShellSpec::new(4, 0.1).unwrap();
        let psi = ShellState::pole(&spec);
        assert!(propagate(&psi, &PropagationConfig::new(spec, -1.0, 0.1, 1e-8)).is_err());
        assert!(propagate(&psi, &PropagationConfig::new(spec, 1.0, 0.0, 1e-8)).is_err());
        let other = ShellSpec::new(6, 0.1).unwrap();
        assert!(propagate(&ShellState::pole(&other), &PropagationConfig::new(spec, 1.0, 0.1, 1e-8)).is_err());
    }

    #[test]
    fn segmented_breathing_run_matches_single_run() {
        let spec = ShellSpec::with_control(12, 0.9).unwrap();
        let env = Some(BreathingEnvelope::new(1.4, 0.0).unwrap());
        let psi = seeded_state(&spec, 0.3).unwrap();
        let whole = PropagationConfig::new(spec, 2.0, 0.5, 1e-11).with_envelope(env);
        let full = propagate(&psi, &whole).unwrap().final_state.unwrap();
        let first = PropagationConfig { z_max: 1.0, ..whole };
        let mid = propagate(&psi, &first).unwrap().final_state.unwrap();
        let second = whole.starting_at(1.0);
        let t = propagate(&mid, &second).unwrap();
        assert_eq!(t.samples[0].z, 1.0);
        let end = t.final_state.unwrap();
        let diff = full
            .amplitudes
            .iter()
            .zip(&end.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
        assert!(propagate(&psi, &whole.starting_at(2.5)).is_err());
    }
}
