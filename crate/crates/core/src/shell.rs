//! Spin-j representation of the orbital pseudospin on one Schwinger shell.
//!
//! Every operator lives in the `L3` eigenbasis `|j, m>`, `m = -j..=j`, stored
//! with index `m + j`. Operators are banded: the generators touch the first
//! off-diagonals and the effective Hamiltonian only the diagonal and the
//! second off-diagonals.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fixed-shell quantum numbers: `two_j = 2j` and the static strength `mu0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    two_j: u32,
    mu0: f64,
}

impl ShellSpec {
    pub fn new(two_j: u32, mu0: f64) -> Result<Self> {
        if !(mu0.is_finite() && mu0 >= 0.0) {
            return invalid(format!("mu0 must be finite and non-negative, got {mu0}"));
        }
        Ok(Self { two_j, mu0 })
    }

    /// Shell with the nonlinear strength chosen so that `mu = j mu0 / 2`.
    pub fn with_control(two_j: u32, mu: f64) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::DegenerateShell);
        }
        Self::new(two_j, 4.0 * mu / two_j as f64)
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    /// Control parameter `mu = j mu0 / 2 = two_j mu0 / 4`.
    pub fn mu(&self) -> f64 {
        self.two_j as f64 * self.mu0 / 4.0
    }

    /// Magnetic quantum number of basis index `k`.
    pub fn m_of(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    pub fn casimir(&self) -> f64 {
        let j = self.j();
        j * (j + 1.0)
    }
}

/// Banded complex matrix on one shell. Band `d` holds the entries
/// `(r, r + d)` for all valid rows `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellOperator {
    dim: usize,
    bands: BTreeMap<isize, Vec<Complex64>>,
}

impl ShellOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            bands: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: Vec<Complex64>) -> Self {
        let mut op = Self::zeros(diag.len());
        op.bands.insert(0, diag);
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offsets(&self) -> impl Iterator<Item = isize> + '_ {
        self.bands.keys().copied()
    }

    fn band_len(dim: usize, d: isize) -> usize {
        dim.saturating_sub(d.unsigned_abs())
    }

    fn band_mut(&mut self, d: isize) -> &mut Vec<Complex64> {
        let len = Self::band_len(self.dim, d);
        self.bands
            .entry(d)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); len])
    }

    /// Entry `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let d = c as isize - r as isize;
        match self.bands.get(&d) {
            Some(b) => b[if d >= 0 { r } else { c }],
            None => Complex64::new(0.0, 0.0),
        }
    }

    fn add_at(&mut self, r: usize, c: usize, v: Complex64) {
        let d = c as isize - r as isize;
        let idx = if d >= 0 { r } else { c };
        self.band_mut(d)[idx] += v;
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(v.len(), self.dim);
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (&d, band) in &self.bands {
            if d >= 0 {
                let d = d as usize;
                for (r, &a) in band.iter().enumerate() {
                    out[r] += a * v[r + d];
                }
            } else {
                let d = (-d) as usize;
                for (c, &a) in band.iter().enumerate() {
                    out[c + d] += a * v[c];
                }
            }
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.bands
            .values_mut()
            .for_each(|b| b.iter_mut().for_each(|x| *x *= s));
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (&d, band) in &other.bands {
            let dst = out.band_mut(d);
            for (x, y) in dst.iter_mut().zip(band) {
                *x += y;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_re(-1.0))
    }

    /// Banded product; band offsets add.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim as isize;
        let mut out = Self::zeros(self.dim);
        for (&d1, b1) in &self.bands {
            for (&d2, b2) in &other.bands {
                let d = d1 + d2;
                if d.abs() >= n {
                    continue;
                }
                // (r, r+d1) * (r+d1, r+d1+d2)
                for r in 0..n {
                    let k = r + d1;
                    let c = k + d2;
                    if k < 0 || k >= n || c < 0 || c >= n {
                        continue;
                    }
                    let a = b1[if d1 >= 0 { r } else { k } as usize];
                    let b = b2[if d2 >= 0 { k } else { c } as usize];
                    out.add_at(r as usize, c as usize, a * b);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for (&d, band) in &self.bands {
            out.bands.insert(-d, band.iter().map(|x| x.conj()).collect());
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.bands
            .values()
            .flat_map(|b| b.iter())
            .fold(0.0, |m, x| m.max(x.norm()))
    }

    /// `max |A - A^dagger|` elementwise.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (&d, band) in &self.bands {
            for (i, &v) in band.iter().enumerate() {
                let (r, c) = if d >= 0 {
                    (i, i + d as usize)
                } else {
                    (i + (-d) as usize, i)
                };
                m[(r, c)] = v;
            }
        }
        m
    }

    /// `<u|A|v>`.
    pub fn sandwich(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let av = self.apply(v);
        u.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }
}

/// The raising operator `L+`, `<m+1|L+|m> = sqrt(j(j+1) - m(m+1))`.
pub fn raising(spec: &ShellSpec) -> ShellOperator {
    let n = spec.dim();
    let mut op = ShellOperator::zeros(n);
    if n > 1 {
        let cas = spec.casimir();
        let band: Vec<Complex64> = (0..n - 1)
            .map(|k| {
                let m = spec.m_of(k);
                Complex64::new((cas - m * (m + 1.0)).max(0.0).sqrt(), 0.0)
            })
            .collect();
        // row m+1, column m
        op.bands.insert(-1, band);
    }
    op
}

/// The three pseudospin generators `(L1, L2, L3)`.
#[derive(Debug, Clone)]
pub struct Generators {
    pub l1: ShellOperator,
    pub l2: ShellOperator,
    pub l3: ShellOperator,
}

impl Generators {
    pub fn as_array(&self) -> [&ShellOperator; 3] {
        [&self.l1, &self.l2, &self.l3]
    }

    pub fn casimir_operator(&self) -> ShellOperator {
        self.l1
            .matmul(&self.l1)
            .add(&self.l2.matmul(&self.l2))
            .add(&self.l3.matmul(&self.l3))
    }
}

pub fn build_generators(spec: &ShellSpec) -> Generators {
    let lp = raising(spec);
    let lm = lp.adjoint();
    let l1 = lp.add(&lm).scale_re(0.5);
    // (L+ - L-) / 2i
    let l2 = lp.sub(&lm).scale(Complex64::new(0.0, -0.5));
    let l3 = ShellOperator::diagonal(
        (0..spec.dim())
            .map(|k| Complex64::new(spec.m_of(k), 0.0))
            .collect(),
    );
    Generators { l1, l2, l3 }
}

/// Largest commutator residual `max_ijk |[L_i, L_j] - i eps_ijk L_k|`.
pub fn commutator_residual(g: &Generators) -> f64 {
    let [l1, l2, l3] = g.as_array();
    let r12 = l1.commutator(l2).sub(&l3.scale(I)).max_abs();
    let r23 = l2.commutator(l3).sub(&l1.scale(I)).max_abs();
    let r31 = l3.commutator(l1).sub(&l2.scale(I)).max_abs();
    r12.max(r23).max(r31)
}

/// `max |L1^2 + L2^2 + L3^2 - j(j+1)|` elementwise.
pub fn casimir_residual(spec: &ShellSpec, g: &Generators) -> f64 {
    g.casimir_operator()
        .sub(&ShellOperator::identity(spec.dim()).scale_re(spec.casimir()))
        .max_abs()
}

/// The quadrupole anisotropy `L1^2 - L2^2 = (L+^2 + L-^2) / 2`, built in the
/// banded form that couples `m` to `m +- 2` only.
pub fn anisotropy_operator(spec: &ShellSpec) -> ShellOperator {
    let lp = raising(spec);
    let lp2 = lp.matmul(&lp);
    lp2.add(&lp2.adjoint()).scale_re(0.5)
}

/// Effective shell Hamiltonian `H = 2 L3 + mu0 (L1^2 - L2^2)`.
pub fn build_effective_hamiltonian(spec: &ShellSpec) -> ShellOperator {
    let g = build_generators(spec);
    g.l3
        .scale_re(2.0)
        .add(&anisotropy_operator(spec).scale_re(spec.mu0()))
}

/// Complex amplitudes over the `2j + 1` basis states of one shell.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellState {
    pub amplitudes: Vec<Complex64>,
}

impl ShellState {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// The basis state `|j, m>` with `m = index - j`.
    pub fn basis(spec: &ShellSpec, index: usize) -> Self {
        let mut a = vec![Complex64::new(0.0, 0.0); spec.dim()];
        a[index] = Complex64::new(1.0, 0.0);
        Self::new(a)
    }

    /// The highest-weight state `|j, j>`.
    pub fn pole(spec: &ShellSpec) -> Self {
        Self::basis(spec, spec.dim() - 1)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        self
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Column `m' = j` of the Wigner small-d matrix:
/// `d_{m,j}(beta) = sqrt(C(2j, j+m)) cos(beta/2)^{j+m} sin(beta/2)^{j-m}`,
/// evaluated in log space so that `j` in the thousands does not overflow.
fn wigner_d_top_column(spec: &ShellSpec, beta: f64) -> Vec<f64> {
    let n = spec.two_j as usize;
    let (s, c) = (0.5 * beta).sin_cos();
    let ln_n = ln_factorial(n);
    let mut lnf = vec![0.0; n + 1];
    for k in 1..=n {
        lnf[k] = lnf[k - 1] + (k as f64).ln();
    }
    (0..=n)
        .map(|k| {
            // k = j + m
            let up = k;
            let down = n - k;
            let mut v = 0.5 * (ln_n - lnf[up] - lnf[down]);
            let mut sign = 1.0;
            for (p, base) in [(up, c), (down, s)] {
                if p == 0 {
                    continue;
                }
                if base == 0.0 {
                    return 0.0;
                }
                if base < 0.0 && p % 2 == 1 {
                    sign = -sign;
                }
                v += p as f64 * base.abs().ln();
            }
            sign * v.exp()
        })
        .collect()
}

/// The spin-coherent state `exp(-i phi L3) exp(-i theta L2) |j, j>`, whose
/// mean pseudospin points along `(sin theta cos phi, sin theta sin phi, cos theta)`.
pub fn coherent_state(spec: &ShellSpec, theta: f64, phi: f64) -> ShellState {
    let col = wigner_d_top_column(spec, theta);
    let amps = col
        .into_iter()
        .enumerate()
        .map(|(k, d)| Complex64::from_polar(d, -phi * spec.m_of(k)))
        .collect();
    ShellState::new(amps)
}

/// Slightly rotated extremal state `exp(-i delta L2) |j, j>`.
pub fn seeded_state(spec: &ShellSpec, delta: f64) -> Result<ShellState> {
    if !(0.0..std::f64::consts::PI).contains(&delta) {
        return invalid(format!("delta must lie in [0, pi), got {delta}"));
    }
    Ok(coherent_state(spec, delta, 0.0))
}

/// Normalized mean pseudospin on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PseudospinVector {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl PseudospinVector {
    pub const fn new(l1: f64, l2: f64, l3: f64) -> Self {
        Self { l1, l2, l3 }
    }

    pub const NORTH: Self = Self::new(0.0, 0.0, 1.0);

    /// The seed direction `(sin delta, 0, cos delta)`.
    pub fn seeded(delta: f64) -> Self {
        Self::new(delta.sin(), 0.0, delta.cos())
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.l1 * self.l1 + self.l2 * self.l2 + self.l3 * self.l3
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.l1 - other.l1)
            .abs()
            .max((self.l2 - other.l2).abs())
            .max((self.l3 - other.l3).abs())
    }
}

/// Raw expectation values `<L_i>` without normalization.
pub(crate) fn raw_expectations(spec: &ShellSpec, amps: &[Complex64]) -> [f64; 3] {
    let n = spec.dim();
    let j = spec.j();
    let cas = spec.casimir();
    let mut lp = Complex64::new(0.0, 0.0);
    let mut l3 = 0.0;
    for k in 0..n {
        let m = k as f64 - j;
        l3 += m * amps[k].norm_sqr();
        if k + 1 < n {
            let a = (cas - m * (m + 1.0)).max(0.0).sqrt();
            lp += amps[k + 1].conj() * amps[k] * a;
        }
    }
    // <L+> = <L1> + i <L2>
    [lp.re, lp.im, l3]
}

/// Normalized means `l_i = <L_i> / j`.
pub fn expectations(state: &ShellState, spec: &ShellSpec) -> Result<PseudospinVector> {
    if state.dim() != spec.dim() {
        return invalid(format!(
            "state has {} amplitudes, shell needs {}",
            state.dim(),
            spec.dim()
        ));
    }
    if spec.two_j() == 0 {
        return Err(Error::DegenerateShell);
    }
    let [a, b, c] = raw_expectations(spec, &state.amplitudes);
    let j = spec.j();
    Ok(PseudospinVector::new(a / j, b / j, c / j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spin_half_generators_are_half_paulis() {
        let spec = ShellSpec::new(1, 0.0).unwrap();
        let g = build_generators(&spec);
        // basis order (m = -1/2, m = +1/2)
        let l1 = g.l1.to_dense();
        let l2 = g.l2.to_dense();
        let l3 = g.l3.to_dense();
        assert_eq!(l1[(0, 1)], c(0.5, 0.0));
        assert_eq!(l1[(1, 0)], c(0.5, 0.0));
        assert_eq!(l2[(1, 0)], c(0.0, -0.5));
        assert_eq!(l2[(0, 1)], c(0.0, 0.5));
        assert_eq!(l3[(0, 0)], c(-0.5, 0.0));
        assert_eq!(l3[(1, 1)], c(0.5, 0.0));
    }

    #[test]
    fn spin_one_l3_is_diag_minus_one_zero_one() {
        let spec = ShellSpec::new(2, 0.0).unwrap();
        let g = build_generators(&spec);
        let d: Vec<f64> = (0..3).map(|k| g.l3.get(k, k).re).collect();
        assert_eq!(d, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn commutators_and_casimir_for_both_parities() {
        for two_j in [1u32, 2, 3, 7, 10, 33, 64, 100] {
            let spec = ShellSpec::new(two_j, 0.0).unwrap();
            let g = build_generators(&spec);
            assert!(commutator_residual(&g) < 1e-12, "two_j={two_j}");
            assert!(casimir_residual(&spec, &g) < 1e-10, "two_j={two_j}");
        }
    }

    #[test]
    fn linear_limit_hamiltonian_is_two_l3() {
        let spec = ShellSpec::new(6, 0.0).unwrap();
        let h = build_effective_hamiltonian(&spec);
        let l3 = build_generators(&spec).l3.scale_re(2.0);
        assert_eq!(h.sub(&l3).max_abs(), 0.0);
    }

    #[test]
    fn banded_hamiltonian_matches_dense_construction() {
        for (two_j, mu0) in [(2u32, 1.0), (5, 0.3), (40, 0.01)] {
            let spec = ShellSpec::new(two_j, mu0).unwrap();
            let g = build_generators(&spec);
            let (l1, l2, l3) = (g.l1.to_dense(), g.l2.to_dense(), g.l3.to_dense());
            let dense = &l3 * c(2.0, 0.0) + (&l1 * &l1 - &l2 * &l2) * c(mu0, 0.0);
            let banded = build_effective_hamiltonian(&spec).to_dense();
            let diff = (dense - &banded).iter().fold(0.0f64, |m, x| m.max(x.norm()));
            assert!(diff < 1e-12, "two_j={two_j}: {diff}");
            // only m -> m, m +- 2 couplings
            let h = build_effective_hamiltonian(&spec);
            assert!(h.offsets().all(|d| d == 0 || d.abs() == 2));
            assert!(h.hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn pole_state_and_zero_delta() {
        let spec = ShellSpec::new(8, 0.0).unwrap();
        let s = seeded_state(&spec, 0.0).unwrap();
        assert_eq!(s, ShellState::pole(&spec));
        let l = expectations(&s, &spec).unwrap();
        assert_eq!(l, PseudospinVector::NORTH);
    }

    #[test]
    fn spin_half_quarter_turn_matches_two_by_two_exponential() {
        // exp(-i (pi/2) sigma_y / 2) = cos(pi/4) I - i sin(pi/4) sigma_y,
        // acting on |up> = (0, 1) in the (m=-1/2, m=+1/2) ordering.
        let spec = ShellSpec::new(1, 0.0).unwrap();
        let s = seeded_state(&spec, PI / 2.0).unwrap();
        let g = build_generators(&spec).l2.to_dense();
        // exact 2x2: exp(-i t L2) = cos(t/2) I - 2 i sin(t/2) L2
        let t = PI / 2.0;
        let u = DMatrix::<Complex64>::identity(2, 2) * c((t / 2.0).cos(), 0.0)
            - g * c(0.0, 2.0 * (t / 2.0).sin());
        let expected = u.column(1);
        for k in 0..2 {
            assert_abs_diff_eq!(s.amplitudes[k].re, expected[k].re, epsilon = 1e-15);
            assert_abs_diff_eq!(s.amplitudes[k].im, expected[k].im, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(s.amplitudes[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn seeded_state_matches_dense_exponential() {
        // independent route: diagonalize the Hermitian L2 and exponentiate
        for two_j in [3u32, 6, 11] {
            let spec = ShellSpec::new(two_j, 0.0).unwrap();
            let l2 = build_generators(&spec).l2.to_dense();
            let delta = 0.37;
            let eig = nalgebra::SymmetricEigen::new(l2);
            let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| {
                Complex64::from_polar(1.0, -delta * e)
            }));
            let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
            let exact = u.column(spec.dim() - 1);
            let s = seeded_state(&spec, delta).unwrap();
            for k in 0..spec.dim() {
                assert!((s.amplitudes[k] - exact[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn seeded_state_first_order_expansion() {
        let spec = ShellSpec::new(20, 0.0).unwrap();
        let delta = 1e-4;
        let s = seeded_state(&spec, delta).unwrap();
        let n = spec.dim();
        let j = spec.j();
        assert_abs_diff_eq!(s.amplitudes[n - 1].re, 1.0, epsilon = 1e-7);
        // |j, j-1> coefficient is (delta/2) sqrt(2j) with the standard ladder phase
        assert_abs_diff_eq!(
            s.amplitudes[n - 2].re,
            0.5 * delta * (2.0 * j).sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn seeded_means_follow_exact_rotation() {
        for (two_j, delta) in [(200u32, 0.1), (2000, 0.3), (7, 2.5), (2000, 3.0)] {
            let spec = ShellSpec::new(two_j, 0.0).unwrap();
            let s = seeded_state(&spec, delta).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-10);
            let l = expectations(&s, &spec).unwrap();
            assert!(l.max_abs_diff(&PseudospinVector::seeded(delta)) < 1e-10);
        }
    }

    #[test]
    fn seeded_state_rejects_out_of_range_delta() {
        let spec = ShellSpec::new(4, 0.0).unwrap();
        assert!(seeded_state(&spec, -0.1).is_err());
        assert!(seeded_state(&spec, PI).is_err());
    }

    #[test]
    fn pole_variances_are_half_j() {
        let spec = ShellSpec::new(50, 0.0).unwrap();
        let g = build_generators(&spec);
        let s = ShellState::pole(&spec);
        for op in [&g.l1, &g.l2] {
            let sq = op.matmul(op);
            let v = sq.sandwich(&s.amplitudes, &s.amplitudes);
            assert_abs_diff_eq!(v.re, spec.j() / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_superposition_has_zero_l3() {
        let spec = ShellSpec::new(6, 0.0).unwrap();
        let mut a = vec![Complex64::new(0.0, 0.0); spec.dim()];
        a[0] = c(FRAC_1_SQRT_2, 0.0);
        a[spec.dim() - 1] = c(FRAC_1_SQRT_2, 0.0);
        let l = expectations(&ShellState::new(a), &spec).unwrap();
        assert_abs_diff_eq!(l.l3, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_shell_is_flagged() {
        let spec = ShellSpec::new(0, 0.0).unwrap();
        let s = ShellState::pole(&spec);
        assert_eq!(expectations(&s, &spec), Err(Error::DegenerateShell));
    }

    #[test]
    fn control_parameter_relation() {
        let spec = ShellSpec::new(2000, 2.5e-3).unwrap();
        assert_eq!(spec.mu(), 2000.0 * 2.5e-3 / 4.0);
        let spec = ShellSpec::with_control(400, 1.2).unwrap();
        assert_abs_diff_eq!(spec.mu(), 1.2, epsilon = 1e-15);
    }
}
