//! Brute-force two-mode Fock space.
//!
//! Builds `a_x`, `a_y` as sparse matrices on `|n_x> (x) |n_y>`, forms the
//! octupole polynomials from `x = (a + a^dagger)/sqrt 2`, and checks the
//! shell-projected identities against the Cartesian Schwinger generators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::Execution;
use crate::shell::{self, ShellSpec};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Row-compressed complex sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, C)>>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(std::iter::repeat_n(ONE, n).collect())
    }

    pub fn from_diagonal(d: Vec<C>) -> Self {
        Self {
            n: d.len(),
            rows: d.into_iter().enumerate().map(|(i, v)| vec![(i, v)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.rows[r]
            .iter()
            .find(|(k, _)| *k == c)
            .map_or(ZERO, |&(_, v)| v)
    }

    fn push(&mut self, r: usize, c: usize, v: C) {
        self.rows[r].push((c, v));
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn scale(&self, s: C) -> Self {
        let mut out = self.clone();
        out.rows
            .iter_mut()
            .for_each(|row| row.iter_mut().for_each(|(_, v)| *v *= s));
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C::new(s, 0.0))
    }

    fn combine(&self, other: &Self, s: C) -> Self {
        assert_eq!(self.n, other.n);
        let mut acc = Accumulator::new(self.n);
        let mut out = Self::zeros(self.n);
        for r in 0..self.n {
            for &(c, v) in &self.rows[r] {
                acc.add(c, v);
            }
            for &(c, v) in &other.rows[r] {
                acc.add(c, s * v);
            }
            out.rows[r] = acc.drain();
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -ONE)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut acc = Accumulator::new(self.n);
        let mut out = Self::zeros(self.n);
        for r in 0..self.n {
            for &(k, a) in &self.rows[r] {
                for &(c, b) in &other.rows[k] {
                    acc.add(c, a * b);
                }
            }
            out.rows[r] = acc.drain();
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for (r, c, v) in self.entries() {
            out.push(c, r, v.conj());
        }
        out.rows.iter_mut().for_each(|row| row.sort_by_key(|e| e.0));
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0, |m, (_, _, v)| m.max(v.norm()))
    }

    /// Largest entry modulus with both indices satisfying `keep`.
    pub fn max_abs_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.entries()
            .filter(|&(r, c, _)| keep(r) && keep(c))
            .fold(0.0, |m, (_, _, v)| m.max(v.norm()))
    }

    /// Dense block `A[idx, idx]`.
    pub fn block(&self, idx: &[usize]) -> DMatrix<C> {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = DMatrix::zeros(idx.len(), idx.len());
        for (a, &r) in idx.iter().enumerate() {
            for &(c, v) in &self.rows[r] {
                if pos[c] != usize::MAX {
                    m[(a, pos[c])] += v;
                }
            }
        }
        m
    }
}

/// Dense scratch row with a touched-index list.
struct Accumulator {
    vals: Vec<C>,
    used: Vec<bool>,
    touched: Vec<usize>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            vals: vec![ZERO; n],
            used: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, c: usize, v: C) {
        if !self.used[c] {
            self.used[c] = true;
            self.touched.push(c);
        }
        self.vals[c] += v;
    }

    fn drain(&mut self) -> Vec<(usize, C)> {
        self.touched.sort_unstable();
        let out = self
            .touched
            .iter()
            .filter(|&&c| self.vals[c] != ZERO)
            .map(|&c| (c, self.vals[c]))
            .collect();
        for &c in &self.touched {
            self.vals[c] = ZERO;
            self.used[c] = false;
        }
        self.touched.clear();
        out
    }
}

/// Truncated two-mode Fock space with `n_x, n_y <= n_max`.
#[derive(Debug, Clone)]
pub struct FockSpace {
    n_max: usize,
    pub a_x: SparseMatrix,
    pub a_y: SparseMatrix,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return invalid("Fock truncation needs n_max >= 1");
        }
        let n = (n_max + 1) * (n_max + 1);
        let mut a_x = SparseMatrix::zeros(n);
        let mut a_y = SparseMatrix::zeros(n);
        for nx in 0..=n_max {
            for ny in 0..=n_max {
                let i = nx * (n_max + 1) + ny;
                // a|n> = sqrt(n)|n-1>, so row (n-1), column n
                if nx > 0 {
                    a_x.push(i - (n_max + 1), i, C::new((nx as f64).sqrt(), 0.0));
                }
                if ny > 0 {
                    a_y.push(i - 1, i, C::new((ny as f64).sqrt(), 0.0));
                }
            }
        }
        a_x.rows.iter_mut().for_each(|r| r.sort_by_key(|e| e.0));
        a_y.rows.iter_mut().for_each(|r| r.sort_by_key(|e| e.0));
        Ok(Self { n_max, a_x, a_y })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 1)
    }

    pub fn index(&self, nx: usize, ny: usize) -> usize {
        nx * (self.n_max + 1) + ny
    }

    pub fn occupations(&self, i: usize) -> (usize, usize) {
        (i / (self.n_max + 1), i % (self.n_max + 1))
    }

    /// Total quanta `n_x + n_y` of basis state `i`.
    pub fn total(&self, i: usize) -> usize {
        let (a, b) = self.occupations(i);
        a + b
    }

    pub fn n_x(&self) -> SparseMatrix {
        self.a_x.adjoint().matmul(&self.a_x)
    }

    pub fn n_y(&self) -> SparseMatrix {
        self.a_y.adjoint().matmul(&self.a_y)
    }

    /// `(a + a^dagger) / sqrt 2` for mode x or y.
    pub fn position(&self, a: &SparseMatrix) -> SparseMatrix {
        a.add(&a.adjoint()).scale_re(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// `i (a^dagger - a) / sqrt 2`.
    pub fn momentum(&self, a: &SparseMatrix) -> SparseMatrix {
        a.adjoint()
            .sub(a)
            .scale(I * std::f64::consts::FRAC_1_SQRT_2)
    }

    /// `H_s = n_x + n_y + 1`.
    pub fn oscillator(&self) -> SparseMatrix {
        self.n_x()
            .add(&self.n_y())
            .add(&SparseMatrix::identity(self.dim()))
    }

    pub fn shell(&self, two_j: usize) -> Result<ShellProjector> {
        ShellProjector::new(self, two_j)
    }

    fn require(&self, two_j: usize, reach: usize) -> Result<()> {
        if two_j + reach > self.n_max {
            return Err(Error::TruncationTooSmall {
                required: two_j + reach,
                n_max: self.n_max,
            });
        }
        Ok(())
    }
}

/// Selector of the basis states with `n_x + n_y = 2j`, ordered by `n_x`.
#[derive(Debug, Clone)]
pub struct ShellProjector {
    pub two_j: usize,
    pub indices: Vec<usize>,
    dim: usize,
}

impl ShellProjector {
    fn new(space: &FockSpace, two_j: usize) -> Result<Self> {
        space.require(two_j, 0)?;
        let indices = (0..=two_j).map(|nx| space.index(nx, two_j - nx)).collect();
        Ok(Self {
            two_j,
            indices,
            dim: space.dim(),
        })
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    /// `P_j` as a full-space matrix.
    pub fn matrix(&self) -> SparseMatrix {
        let mut d = vec![ZERO; self.dim];
        for &i in &self.indices {
            d[i] = ONE;
        }
        SparseMatrix::from_diagonal(d)
    }

    /// `P A P` restricted to the shell.
    pub fn project(&self, a: &SparseMatrix) -> DMatrix<C> {
        a.block(&self.indices)
    }
}

#[derive(Debug, Clone)]
pub struct CartesianGenerators {
    pub l1: SparseMatrix,
    pub l2: SparseMatrix,
    pub l3: SparseMatrix,
}

pub fn build_cartesian_generators(space: &FockSpace) -> CartesianGenerators {
    let (ax, ay) = (&space.a_x, &space.a_y);
    let (axd, ayd) = (ax.adjoint(), ay.adjoint());
    let l1 = space.n_x().sub(&space.n_y()).scale_re(0.5);
    let hop = axd.matmul(ay);
    let hop_back = ayd.matmul(ax);
    let l2 = hop.add(&hop_back).scale_re(0.5);
    // (a_x^dagger a_y - a_y^dagger a_x) / 2i
    let l3 = hop.sub(&hop_back).scale(C::new(0.0, -0.5));
    CartesianGenerators { l1, l2, l3 }
}

/// Coefficients of `x^4 + c_xy x^2 y^2 + y^4` (the octupole has `c_xy = -6`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoefficients {
    pub x4: f64,
    pub x2y2: f64,
    pub y4: f64,
}

impl Default for QuarticCoefficients {
    fn default() -> Self {
        Self {
            x4: 1.0,
            x2y2: -6.0,
            y4: 1.0,
        }
    }
}

/// `(mu0 / 6)(x^4 + c x^2 y^2 + y^4)` on the full truncated space.
pub fn quartic_operator(space: &FockSpace, mu0: f64, k: QuarticCoefficients) -> SparseMatrix {
    let x = space.position(&space.a_x);
    let y = space.position(&space.a_y);
    let x2 = x.matmul(&x);
    let y2 = y.matmul(&y);
    x2.matmul(&x2)
        .scale_re(k.x4)
        .add(&x2.matmul(&y2).scale_re(k.x2y2))
        .add(&y2.matmul(&y2).scale_re(k.y4))
        .scale_re(mu0 / 6.0)
}

/// `P_j V4 P_j` on the shell.
pub fn project_quartic(
    space: &FockSpace,
    two_j: usize,
    mu0: f64,
    k: QuarticCoefficients,
) -> Result<DMatrix<C>> {
    space.require(two_j, 4)?;
    let p = space.shell(two_j)?;
    Ok(p.project(&quartic_operator(space, mu0, k)))
}

/// `mu0 (L1^2 - L2^2)` on the shell from the Cartesian generators.
pub fn shell_anisotropy(space: &FockSpace, two_j: usize, mu0: f64) -> Result<DMatrix<C>> {
    let g = build_cartesian_generators(space);
    let p = space.shell(two_j)?;
    let a = g.l1.matmul(&g.l1).sub(&g.l2.matmul(&g.l2));
    Ok(p.project(&a).scale(mu0))
}

/// Projected cross term in the three orderings.
#[derive(Debug, Clone)]
pub struct CrossTermProjection {
    /// `P (grad Phi . p) P`
    pub grad_first: DMatrix<C>,
    /// `P (p . grad Phi) P`
    pub p_first: DMatrix<C>,
    pub symmetrized: DMatrix<C>,
}

/// The skew potential `Phi = 4 (x^3 y - x y^3)` and its gradient.
fn skew_potential(space: &FockSpace) -> (SparseMatrix, SparseMatrix, SparseMatrix) {
    let x = space.position(&space.a_x);
    let y = space.position(&space.a_y);
    let x2 = x.matmul(&x);
    let y2 = y.matmul(&y);
    let x3 = x2.matmul(&x);
    let y3 = y2.matmul(&y);
    let phi = x3.matmul(&y).sub(&x.matmul(&y3)).scale_re(4.0);
    let dphi_x = x2.matmul(&y).scale_re(3.0).sub(&y3).scale_re(4.0);
    let dphi_y = x3.sub(&x.matmul(&y2).scale_re(3.0)).scale_re(4.0);
    (phi, dphi_x, dphi_y)
}

pub fn project_cross_term(space: &FockSpace, two_j: usize) -> Result<CrossTermProjection> {
    space.require(two_j, 4)?;
    let p = space.shell(two_j)?;
    let (_, gx, gy) = skew_potential(space);
    let px = space.momentum(&space.a_x);
    let py = space.momentum(&space.a_y);
    let grad_first = gx.matmul(&px).add(&gy.matmul(&py));
    let p_first = px.matmul(&gx).add(&py.matmul(&gy));
    let sym = grad_first.add(&p_first).scale_re(0.5);
    Ok(CrossTermProjection {
        grad_first: p.project(&grad_first),
        p_first: p.project(&p_first),
        symmetrized: p.project(&sym),
    })
}

fn dmax(m: &DMatrix<C>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// One checked identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub identity: String,
    pub two_j: Option<usize>,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ResidualEntry {
    pub fn new(identity: &str, two_j: Option<usize>, residual: f64, threshold: f64) -> Self {
        Self {
            identity: identity.to_string(),
            two_j,
            residual,
            threshold,
            pass: residual.is_finite() && residual < threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<ResidualEntry>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResidualEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    /// Largest residual per identity name.
    pub fn max_residual(&self, identity: &str) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.identity == identity)
            .map(|e| e.residual)
            .reduce(f64::max)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.entries.extend(other.entries);
    }
}

/// Settings of the oracle suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub two_j_max: usize,
    /// Truncation margin above the shell, `n_max = 2j + margin`.
    pub margin: usize,
    pub mu0: f64,
    pub coefficients: QuarticCoefficients,
    pub threshold: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            two_j_max: 24,
            margin: 8,
            mu0: 1.0,
            coefficients: QuarticCoefficients::default(),
            threshold: 1e-10,
        }
    }
}

pub const ID_QUARTIC: &str = "projected quartic = mu0 (L1^2 - L2^2)";
pub const ID_CROSS_SYM: &str = "projected cross term (symmetrized) = 0";
pub const ID_CROSS_GRAD: &str = "projected cross term (grad Phi . p) = 0";
pub const ID_CROSS_P: &str = "projected cross term (p . grad Phi) = 0";
pub const ID_CROSS_COMM: &str = "i[H_s, Phi] = symmetrized cross term";
pub const ID_CASIMIR: &str = "shell Casimir = j(j+1)";
pub const ID_DIAGONAL: &str = "diagonal-part identity";
pub const ID_COMMUTATOR: &str = "[L1, L2] = i L3 (Cartesian)";
pub const ID_SPECTRUM: &str = "spectrum vs spin-j representation";
pub const ID_LZ: &str = "L_z = 2 L3 integer spectrum";
pub const ID_PROJECTOR: &str = "P^2 = P, rank 2j+1";

/// All identities for a single shell.
pub fn verify_shell(two_j: usize, cfg: &OracleConfig) -> Result<VerificationReport> {
    let space = FockSpace::new(two_j + cfg.margin)?;
    let p = space.shell(two_j)?;
    let j = two_j as f64 / 2.0;
    let t = cfg.threshold;
    let mut rep = VerificationReport::default();
    let mut push = |id: &str, r: f64| rep.entries.push(ResidualEntry::new(id, Some(two_j), r, t));

    let v4 = project_quartic(&space, two_j, cfg.mu0, cfg.coefficients)?;
    let target = shell_anisotropy(&space, two_j, cfg.mu0)?;
    push(ID_QUARTIC, dmax(&(&v4 - &target)));

    let cross = project_cross_term(&space, two_j)?;
    push(ID_CROSS_SYM, dmax(&cross.symmetrized));
    push(ID_CROSS_GRAD, dmax(&cross.grad_first));
    push(ID_CROSS_P, dmax(&cross.p_first));

    // i[H_s, Phi] against the symmetrized term, on states far from the edge
    let (phi, gx, gy) = skew_potential(&space);
    let px = space.momentum(&space.a_x);
    let py = space.momentum(&space.a_y);
    let sym = gx
        .matmul(&px)
        .add(&gy.matmul(&py))
        .add(&px.matmul(&gx))
        .add(&py.matmul(&gy))
        .scale_re(0.5);
    let comm = space.oscillator().commutator(&phi).scale(I);
    let edge = space.n_max() - 4;
    push(
        ID_CROSS_COMM,
        comm.sub(&sym).max_abs_where(|i| space.total(i) <= edge),
    );

    let g = build_cartesian_generators(&space);
    let cas = g
        .l1
        .matmul(&g.l1)
        .add(&g.l2.matmul(&g.l2))
        .add(&g.l3.matmul(&g.l3));
    let cas_block = p.project(&cas);
    let ident = DMatrix::<C>::identity(p.rank(), p.rank()).scale(j * (j + 1.0));
    push(ID_CASIMIR, dmax(&(cas_block - ident)));

    // (3/2)(nx^2 + ny^2) - 6 nx ny - (3/2)(nx + ny) = 9 L1^2 - 3 j(j+1)
    let diag = p
        .indices
        .iter()
        .map(|&i| {
            let (nx, ny) = space.occupations(i);
            let (nx, ny) = (nx as f64, ny as f64);
            let lhs = 1.5 * (nx * nx + ny * ny) - 6.0 * nx * ny - 1.5 * (nx + ny);
            let l1 = 0.5 * (nx - ny);
            (lhs - (9.0 * l1 * l1 - 3.0 * j * (j + 1.0))).abs()
        })
        .fold(0.0, f64::max);
    push(ID_DIAGONAL, diag);

    let comm = g.l1.commutator(&g.l2).sub(&g.l3.scale(I));
    push(ID_COMMUTATOR, p.project(&comm).iter().fold(0.0, |a, v| a.max(v.norm())));

    let proj = p.matrix();
    let idem = proj.matmul(&proj).sub(&proj).max_abs();
    let rank_err = (p.rank() as f64 - (two_j as f64 + 1.0)).abs();
    push(ID_PROJECTOR, idem + rank_err);

    // basis-independent comparison with the spin-j representation
    let spec = ShellSpec::new(two_j as u32, cfg.mu0)?;
    let reference = shell::anisotropy_operator(&spec).scale_re(cfg.mu0).to_dense();
    push(ID_SPECTRUM, spectrum_distance(&v4, &reference));

    let lz = p.project(&g.l3.scale_re(2.0));
    let ev = nalgebra::SymmetricEigen::new(lz).eigenvalues;
    let mut ev: Vec<f64> = ev.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let lz_err = ev
        .iter()
        .enumerate()
        .map(|(k, e)| (e - (2.0 * k as f64 - two_j as f64)).abs())
        .fold(0.0, f64::max);
    push(ID_LZ, lz_err);

    Ok(rep)
}

/// Max distance between the sorted spectra of two Hermitian matrices.
pub fn spectrum_distance(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    let sorted = |m: &DMatrix<C>| {
        let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (ea, eb) = (sorted(a), sorted(b));
    if ea.len() != eb.len() {
        return f64::INFINITY;
    }
    ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Oracle suite over `two_j = 0..=two_j_max`, ordered by `two_j`.
pub fn run_oracle_suite(cfg: &OracleConfig, exec: Execution) -> Result<VerificationReport> {
    let shells: Vec<usize> = (0..=cfg.two_j_max).collect();
    let parts = exec.map(&shells, |&tj| verify_shell(tj, cfg));
    let mut rep = VerificationReport::default();
    for part in parts {
        rep.extend(part?);
    }
    Ok(rep)
}

/// Ladder commutator `[a, a^dagger] = 1` below the truncation edge.
pub fn ladder_residual(space: &FockSpace) -> f64 {
    let n = space.n_max();
    let id = SparseMatrix::identity(space.dim());
    let rx = space.a_x.commutator(&space.a_x.adjoint()).sub(&id);
    let ry = space.a_y.commutator(&space.a_y.adjoint()).sub(&id);
    let keep = |i: usize| {
        let (a, b) = space.occupations(i);
        a < n && b < n
    };
    rx.max_abs_where(keep).max(ry.max_abs_where(keep))
}
