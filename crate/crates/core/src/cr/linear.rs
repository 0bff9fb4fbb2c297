//! Linear Cauchy-Riemann operator `d_s + J0 d_t` on truncated cylinders.
//!
//! In `t` the operator is diagonal in the real Fourier basis; in `s` each
//! mode equation `u' + M u = f` (`M^2 = lambda^2`, `lambda = 2 pi k`) is
//! discretized cell by cell with the two-point rule
//!
//! ```text
//! g(lambda h) (u1 - u0)/h + M (u0 + u1)/2
//!     = (f0 + f1)/2 + h (f0' - f1')/12 + h M (f1 - f0)/12
//! ```
//!
//! where `g(x) = (x/2) coth(x/2) = 1 + x^2/12 + O(x^4)`. Up to the fitted
//! factor this is the fourth-order Hermite rule; the factor makes the
//! homogeneous solutions `e^{-lambda s}` exact on the grid, so poorly resolved
//! modes keep their decay against the exponential weights. Equations live on
//! cells. For a Fourier pair `(A_k, B_k)` the combinations
//! `z = A + J0 B` and `y = A - J0 B` satisfy `z' + 2 pi k z = .` and
//! `y' - 2 pi k y = .`; each gets one decay condition at the end towards
//! which its homogeneous solution grows (`z = 0` left, `y = 0` right). The
//! mean mode carries the asymptotic constants.
//!
//! Norms are exponentially weighted about `s = R/2`: unknowns are scaled to
//! weighted coordinates before assembly, so condition numbers and singular
//! values refer to the weighted spaces.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::ComplexStructureField;
use crate::cylinder::{Grid, Samples};
use crate::math::{self, PI, TAU};
use crate::neck::{NeckAxis, NeckKind, NeckMap};
use crate::splice::Cutoff;
use crate::trig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// `dbar0 = d_s + J0 d_t`
    LinearDbar0,
    /// `(d_s u + J(u) d_t u) / 2`
    Nonlinear,
}

/// Behavior imposed at the two ends of the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticConstraint {
    /// Same constant at both ends.
    Matching,
    /// `+c` at `+inf`, `-c` at `-inf` (maps on `C_a`).
    Antipodal,
    /// No ansatz (kernel diagnostics on `Z_a*`).
    Free,
}

/// A discretized CR problem on a single uniform window.
#[derive(Debug, Clone)]
pub struct CrProblem {
    pub kind: OperatorKind,
    pub axis: NeckAxis,
    pub delta: f64,
    pub constraint: AsymptoticConstraint,
    pub structure: ComplexStructureField,
}

impl CrProblem {
    /// `dbar0` on the truncation `[R/2 - half_width, R/2 + half_width]` of
    /// `C_a` with antipodal constants and `+delta` weights.
    pub fn infinite_neck(
        length: f64,
        half_width: f64,
        n_s: usize,
        n_t: usize,
        delta: f64,
        structure: ComplexStructureField,
    ) -> Result<Self> {
        let grid = Grid::new(0.5 * length - half_width, 0.5 * length + half_width, n_s, n_t)?;
        Ok(Self {
            kind: OperatorKind::LinearDbar0,
            axis: NeckAxis::uniform(NeckKind::Infinite, length, 0.0, &grid),
            delta,
            constraint: AsymptoticConstraint::Antipodal,
            structure,
        })
    }

    /// `dbar0` on `[-ext, R + ext]` (a truncation of `Z_a*`) with `-delta`
    /// weights, `per_unit` nodes per unit length.
    pub fn extended_neck(
        length: f64,
        ext: f64,
        per_unit: usize,
        n_t: usize,
        delta: f64,
        structure: ComplexStructureField,
    ) -> Result<Self> {
        let cells = math::ceil((length + 2.0 * ext) * per_unit as f64 - 1e-9) as usize;
        let grid = Grid::new(-ext, cells as f64 / per_unit as f64 - ext, cells + 1, n_t)?;
        Ok(Self {
            kind: OperatorKind::LinearDbar0,
            axis: NeckAxis::uniform(NeckKind::Finite, length, 0.0, &grid),
            delta,
            constraint: AsymptoticConstraint::Free,
            structure,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.kind != OperatorKind::LinearDbar0 {
            return Err(Error::InvalidParameter("the mode solver handles dbar0 only".into()));
        }
        if !self.structure.is_constant() {
            return Err(Error::ComplexStructure("dbar0 needs a constant structure".into()));
        }
        if self.axis.is_split() || self.axis.windows.len() != 1 {
            return Err(Error::Incompatible("expected a single uniform window".into()));
        }
        if !(self.delta > 0.0 && self.delta < TAU) {
            return Err(Error::Singular(format!(
                "weight {} is outside (0, 2 pi)",
                self.delta
            )));
        }
        if self.axis.windows[0].n_s < 4 {
            return Err(Error::InvalidGrid("need at least 4 nodes in s".into()));
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.structure.dim()
    }

    fn n_s(&self) -> usize {
        self.axis.windows[0].n_s
    }

    fn h(&self) -> f64 {
        self.axis.windows[0].ds
    }

    /// `s - R/2` at node `i` and at midpoint `i + 1/2`.
    fn sigma(&self, x: f64) -> f64 {
        let w = &self.axis.windows[0];
        w.origin + x * w.ds - 0.5 * self.axis.length
    }

    /// Log of the weight on the solution side; the equation side uses the
    /// negative.
    fn kappa(&self) -> f64 {
        match self.axis.kind {
            NeckKind::Infinite => self.delta,
            NeckKind::Finite => -self.delta,
        }
    }

    fn j0(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d * d];
        self.structure.matrix_at(&vec![0.0; d], &mut m);
        m
    }
}

/// `(x/2) coth(x/2)`.
fn fitted(x: f64) -> f64 {
    let y = 0.5 * x;
    if y.abs() < 1e-4 {
        1.0 + y * y / 3.0
    } else {
        y / math::tanh(y)
    }
}

/// Nodal form of the fitted factor: the circulant matrix acting as
/// `g(2 pi k h)` on the Fourier pair `k` (and as 1 on the mean and Nyquist
/// modes, which the spectral `d_t` does not see).
fn fitted_matrix(n_t: usize, h: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n_t, n_t);
    for mode in modes(n_t) {
        let f = match mode {
            Mode::Pair(k) => fitted(TAU * k as f64 * h),
            _ => 1.0,
        };
        for j in 0..n_t {
            for l in 0..n_t {
                let (cj, sj) = basis(mode, n_t, j);
                let (cl, sl) = basis(mode, n_t, l);
                g[(j, l)] += f * (cj * cl + sj * sl);
            }
        }
    }
    g
}

/// A real Fourier mode on `n_t` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Mean,
    Pair(usize),
    Nyquist,
}

fn modes(n_t: usize) -> Vec<Mode> {
    let mut out = vec![Mode::Mean];
    for k in 1..n_t.div_ceil(2) {
        out.push(Mode::Pair(k));
    }
    if n_t.is_multiple_of(2) {
        out.push(Mode::Nyquist);
    }
    out
}

/// Orthonormal basis functions at the nodes: `(cos-like, sin-like)`.
fn basis(mode: Mode, n_t: usize, j: usize) -> (f64, f64) {
    let n = n_t as f64;
    let t = j as f64 / n;
    match mode {
        Mode::Mean => (1.0 / math::sqrt(n), 0.0),
        Mode::Nyquist => (if j.is_multiple_of(2) { 1.0 } else { -1.0 } / math::sqrt(n), 0.0),
        Mode::Pair(k) => {
            let c = math::sqrt(2.0 / n);
            let x = TAU * k as f64 * t;
            (c * math::cos(x), c * math::sin(x))
        }
    }
}

/// Coefficients `(A, B)` of a row (each of length `dim`).
fn project_row(row: &[f64], n_t: usize, dim: usize, mode: Mode) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for j in 0..n_t {
        let (pc, ps) = basis(mode, n_t, j);
        for c in 0..dim {
            a[c] += pc * row[j * dim + c];
            b[c] += ps * row[j * dim + c];
        }
    }
    (a, b)
}

fn add_mode(row: &mut [f64], n_t: usize, dim: usize, mode: Mode, a: &[f64], b: &[f64]) {
    for j in 0..n_t {
        let (pc, ps) = basis(mode, n_t, j);
        for c in 0..dim {
            row[j * dim + c] += pc * a[c] + ps * b[c];
        }
    }
}

/// Weighted block of one mode: `matrix * w = rhs`, nodal coefficients
/// `u_i = omega_i w_i`, plus the asymptotic constant for the mean mode.
struct Block {
    matrix: DMatrix<f64>,
    /// Number of unknowns per node.
    per_node: usize,
    /// Column dropped from the nodal unknowns (mean-zero restriction).
    dropped: Option<usize>,
    /// Whether a trailing constant (`c`) is part of the unknowns.
    constant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Restriction {
    None,
    MeanZero,
}

fn assemble(p: &CrProblem, mode: Mode, restriction: Restriction) -> Block {
    let d = p.dim();
    let n = p.n_s();
    let h = p.h();
    let kappa = p.kappa();
    let j0 = p.j0();
    let omega = |i: usize| math::exp(-kappa * p.sigma(i as f64).abs());
    let rho = |m: usize| math::exp(kappa * p.sigma(m as f64 + 0.5).abs());
    let antipodal = p.constraint == AsymptoticConstraint::Antipodal;
    match mode {
        Mode::Pair(k) => {
            let pk = PI * k as f64;
            let hk = fitted(2.0 * pk * h);
            let per = 2 * d;
            let mut m = DMatrix::zeros(n * per, n * per);
            let col = |i: usize, part: usize, c: usize| i * per + part * d + c;
            for cell in 0..n - 1 {
                let r = rho(cell);
                let (w0, w1) = (omega(cell), omega(cell + 1));
                for a in 0..d {
                    let rc = cell * per + a;
                    let rs = cell * per + d + a;
                    m[(rc, col(cell + 1, 0, a))] += r * hk * w1 / h;
                    m[(rc, col(cell, 0, a))] -= r * hk * w0 / h;
                    m[(rs, col(cell + 1, 1, a))] += r * hk * w1 / h;
                    m[(rs, col(cell, 1, a))] -= r * hk * w0 / h;
                    for b in 0..d {
                        let jab = j0[a * d + b];
                        if jab == 0.0 {
                            continue;
                        }
                        m[(rc, col(cell, 1, b))] += r * w0 * pk * jab;
                        m[(rc, col(cell + 1, 1, b))] += r * w1 * pk * jab;
                        m[(rs, col(cell, 0, b))] -= r * w0 * pk * jab;
                        m[(rs, col(cell + 1, 0, b))] -= r * w1 * pk * jab;
                    }
                }
            }
            // decay conditions, written directly in weighted coordinates
            let base = (n - 1) * per;
            for a in 0..d {
                m[(base + a, col(0, 0, a))] = 1.0;
                m[(base + d + a, col(n - 1, 0, a))] = 1.0;
                for b in 0..d {
                    m[(base + a, col(0, 1, b))] += j0[a * d + b];
                    m[(base + d + a, col(n - 1, 1, b))] -= j0[a * d + b];
                }
            }
            Block {
                matrix: m,
                per_node: per,
                dropped: None,
                constant: false,
            }
        }
        Mode::Nyquist | Mode::Mean => {
            let with_c = mode == Mode::Mean && antipodal;
            // the Nyquist mode is invisible to the spectral t-derivative and
            // behaves like a second mean mode: it decays at both ends on C_a
            // and is pinned at s = R/2 otherwise
            let mid = math::round(-p.sigma(0.0) / h) as usize;
            let pins: Vec<usize> = match (mode, p.constraint) {
                (_, AsymptoticConstraint::Antipodal) => vec![0, n - 1],
                (Mode::Nyquist, _) => vec![mid.min(n - 1)],
                _ => vec![],
            };
            let dropped = if mode == Mode::Mean && restriction == Restriction::MeanZero {
                // node at s = R/2
                Some(mid)
            } else {
                None
            };
            let nodal_cols = n - usize::from(dropped.is_some());
            let cols = (nodal_cols + usize::from(with_c)) * d;
            let rows = (n - 1 + pins.len()) * d;
            let mut m = DMatrix::zeros(rows, cols);
            let col = |i: usize, c: usize| -> Option<usize> {
                match dropped {
                    Some(x) if i == x => None,
                    Some(x) if i > x => Some((i - 1) * d + c),
                    _ => Some(i * d + c),
                }
            };
            let c_col = nodal_cols * d;
            let profile = |x: f64| 1.0 - 2.0 * Cutoff.beta(p.sigma(x));
            for cell in 0..n - 1 {
                let r = rho(cell);
                for a in 0..d {
                    let row = cell * d + a;
                    if let Some(ci) = col(cell + 1, a) {
                        m[(row, ci)] += r * omega(cell + 1) / h;
                    }
                    if let Some(ci) = col(cell, a) {
                        m[(row, ci)] -= r * omega(cell) / h;
                    }
                    if with_c {
                        // the constant enters through (1 - 2 beta) c; the
                        // unknown is the mean-mode coefficient sqrt(n_t) c
                        m[(row, c_col + a)] += r * (profile(cell as f64 + 1.0) - profile(cell as f64)) / h;
                    }
                }
            }
            let base = (n - 1) * d;
            for (q, &node) in pins.iter().enumerate() {
                for a in 0..d {
                    if let Some(ci) = col(node, a) {
                        m[(base + q * d + a, ci)] = 1.0;
                    }
                }
            }
            Block {
                matrix: m,
                per_node: d,
                dropped,
                constant: with_c,
            }
        }
    }
}

fn block_rhs(p: &CrProblem, mode: Mode, rhs_mid: &Samples, rows: usize) -> DVector<f64> {
    let d = p.dim();
    let n_t = rhs_mid.n_t;
    let kappa = p.kappa();
    let mut out = DVector::zeros(rows);
    for cell in 0..p.n_s() - 1 {
        let r = math::exp(kappa * p.sigma(cell as f64 + 0.5).abs());
        let (a, b) = project_row(rhs_mid.row(cell), n_t, d, mode);
        match mode {
            Mode::Pair(_) => {
                for c in 0..d {
                    out[cell * 2 * d + c] = r * a[c];
                    out[cell * 2 * d + d + c] = r * b[c];
                }
            }
            _ => {
                for c in 0..d {
                    out[cell * d + c] = r * a[c];
                }
            }
        }
    }
    out
}

fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    // pad to a square matrix so missing rows count as zero singular values
    let (r, c) = m.shape();
    let padded;
    let mat = if r < c {
        padded = m.clone().resize(c, c, 0.0);
        &padded
    } else {
        m
    };
    let svd = mat
        .clone()
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Singular("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Result of [`linear_cr_solve`].
#[derive(Debug, Clone)]
pub struct CrSolution {
    /// Nodal solution on the problem axis; its asymptote is the constant.
    pub solution: NeckMap,
    /// Largest nodal residual of the discrete equations.
    pub residual: f64,
    /// Largest weighted condition number over the Fourier blocks.
    pub condition: f64,
}

/// Solves `dbar0 u = f` on a truncated `C_a` for `u = (1 - 2 beta_a) c + r`
/// with decaying `r`. The right-hand side is given at the nodes.
pub fn linear_cr_solve(problem: &CrProblem, rhs: &NeckMap) -> Result<CrSolution> {
    problem.validate()?;
    if rhs.axis() != &problem.axis || rhs.dim() != problem.dim() {
        return Err(Error::Incompatible("right-hand side is not on the problem axis".into()));
    }
    linear_cr_solve_cells(problem, &cell_rhs(problem, &rhs.windows()[0]))
}

/// Cell right-hand sides `(f0 + f1)/2 + h (f0' - f1')/12 + h J0 (f1_t - f0_t)/12`
/// from nodal values, with fourth-order `s`-derivatives.
pub fn cell_rhs(problem: &CrProblem, f: &Samples) -> Samples {
    let d = f.dim;
    let h = f.ds;
    let j0 = problem.j0();
    let mut out = f.midpoints();
    let fs = f.d_s_stencil(1, 5);
    let ft = f.d_t();
    for cell in 0..f.n_s - 1 {
        let (s0, s1) = (fs.row(cell), fs.row(cell + 1));
        let (t0, t1) = (ft.row(cell), ft.row(cell + 1));
        let o = out.row_mut(cell);
        for p in 0..f.n_t {
            for c in 0..d {
                let k = p * d + c;
                let jt: f64 = (0..d).map(|e| j0[c * d + e] * (t1[p * d + e] - t0[p * d + e])).sum();
                o[k] += h / 12.0 * (s0[k] - s1[k] + jt);
            }
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Cell right-hand sides for a closed-form `f(s, t, out)`: five-point Gauss
/// cell averages plus `h J0 (f1_t - f0_t)/12`. Equivalent to [`cell_rhs`] to
/// fourth order, and free of quadrature error in the mean mode, which
/// matters for steep right-hand sides.
pub fn cell_rhs_from_fn(problem: &CrProblem, mut f: impl FnMut(f64, f64, &mut [f64])) -> Result<Samples> {
    problem.validate()?;
    let w = &problem.axis.windows[0];
    let (n, n_t, d, h) = (w.n_s, problem.axis.n_t, problem.dim(), w.ds);
    let mut nodal = Samples::zeros(n, n_t, d, h);
    for i in 0..n {
        let s = w.origin + i as f64 * h;
        for j in 0..n_t {
            f(s, j as f64 / n_t as f64, &mut nodal.row_mut(i)[j * d..(j + 1) * d]);
        }
    }
    let ft = nodal.d_t();
    let j0 = problem.j0();
    let mut out = Samples::zeros(n - 1, n_t, d, h);
    let mut val = vec![0.0; d];
    for cell in 0..n - 1 {
        let centre = w.origin + (cell as f64 + 0.5) * h;
        let (t0, t1) = (ft.row(cell), ft.row(cell + 1));
        let o = out.row_mut(cell);
        for j in 0..n_t {
            let t = j as f64 / n_t as f64;
            for (x, wt) in GAUSS5 {
                f(centre + 0.5 * h * x, t, &mut val);
                for c in 0..d {
                    o[j * d + c] += 0.5 * wt * val[c];
                }
            }
            for c in 0..d {
                let jt: f64 = (0..d).map(|e| j0[c * d + e] * (t1[j * d + e] - t0[j * d + e])).sum();
                o[j * d + c] += h / 12.0 * jt;
            }
        }
    }
    Ok(out)
}

/// [`linear_cr_solve`] with precomputed cell right-hand sides (see
/// [`cell_rhs`]).
pub fn linear_cr_solve_cells(problem: &CrProblem, rhs_mid: &Samples) -> Result<CrSolution> {
    problem.validate()?;
    if problem.constraint != AsymptoticConstraint::Antipodal {
        return Err(Error::InvalidParameter(
            "the linear solve is set up for antipodal constants".into(),
        ));
    }
    let d = problem.dim();
    let n = problem.n_s();
    let n_t = problem.axis.n_t;
    if rhs_mid.n_s != n - 1 || rhs_mid.n_t != n_t || rhs_mid.dim != d {
        return Err(Error::Incompatible("midpoint right-hand side has the wrong shape".into()));
    }
    let kappa = problem.kappa();
    let mut sol = Samples::zeros(n, n_t, d, problem.h());
    let mut constant = vec![0.0; d];
    let mut condition: f64 = 0.0;
    for mode in modes(n_t) {
        let block = assemble(problem, mode, Restriction::None);
        let rhs = block_rhs(problem, mode, rhs_mid, block.matrix.nrows());
        let svd = block
            .matrix
            .clone()
            .try_svd(true, true, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Singular("SVD did not converge".into()))?;
        let (lo, hi) = (svd.singular_values.min(), svd.singular_values.max());
        if !(lo > hi * 1e-14) || block.matrix.nrows() < block.matrix.ncols() {
            return Err(Error::Singular(format!("Fourier block {mode:?} is singular")));
        }
        condition = condition.max(hi / lo);
        let x = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::Singular(format!("Fourier block {mode:?}: {e}")))?;
        for i in 0..n {
            let w = math::exp(-kappa * problem.sigma(i as f64).abs());
            let base = i * block.per_node;
            let (a, b): (Vec<f64>, Vec<f64>) = match mode {
                Mode::Pair(_) => (
                    (0..d).map(|c| w * x[base + c]).collect(),
                    (0..d).map(|c| w * x[base + d + c]).collect(),
                ),
                _ => ((0..d).map(|c| w * x[base + c]).collect(), vec![0.0; d]),
            };
            add_mode(sol.row_mut(i), n_t, d, mode, &a, &b);
        }
        if block.constant {
            let off = n * d;
            let scale = math::sqrt(n_t as f64);
            for c in 0..d {
                constant[c] = x[off + c] / scale;
            }
        }
    }
    // add the antipodal profile (1 - 2 beta) c
    for i in 0..n {
        let f = 1.0 - 2.0 * Cutoff.beta(problem.sigma(i as f64));
        for (k, v) in sol.row_mut(i).iter_mut().enumerate() {
            *v += f * constant[k % d];
        }
    }
    let residual = box_residual(problem, &sol, rhs_mid);
    let solution = NeckMap::from_parts(&problem.axis, d, vec![sol], vec![], constant)?;
    Ok(CrSolution {
        solution,
        residual,
        condition,
    })
}

/// Nodal cell operator `G (u1 - u0)/h + J0 d_t (u0 + u1)/2` with `G` the
/// fitted factor applied along each `t`-circle.
pub fn cell_operator(problem: &CrProblem, u: &Samples) -> Samples {
    let d = u.dim;
    let h = u.ds;
    let g = fitted_matrix(u.n_t, h);
    let dt = u.midpoints().d_t();
    let j0 = problem.j0();
    let mut out = Samples::zeros(u.n_s - 1, u.n_t, d, h);
    for cell in 0..u.n_s - 1 {
        let (a, b) = (u.row(cell), u.row(cell + 1));
        let t = dt.row(cell);
        let o = out.row_mut(cell);
        for p in 0..u.n_t {
            for c in 0..d {
                let k = p * d + c;
                let jump: f64 = (0..u.n_t).map(|l| g[(p, l)] * (b[l * d + c] - a[l * d + c])).sum();
                let jt: f64 = (0..d).map(|e| j0[c * d + e] * t[p * d + e]).sum();
                o[k] = jump / h + jt;
            }
        }
    }
    out
}

fn box_residual(problem: &CrProblem, u: &Samples, rhs_mid: &Samples) -> f64 {
    let lhs = cell_operator(problem, u);
    math::max_abs_diff(&lhs.data, &rhs_mid.data)
}

/// Singular-value report of the weighted operator on a `Z_a*` truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    /// All singular values (ascending) on the full space; a block with
    /// fewer equations than unknowns contributes zeros.
    pub singular_values: Vec<f64>,
    /// Number of singular values below `1e-6 * max`.
    pub near_zero: usize,
    pub sigma_max: f64,
    /// Smallest singular value on the mean-zero subspace `[u]_a = 0`.
    pub restricted_min: f64,
}

/// Relative threshold for near-zero singular values.
pub const NEAR_ZERO: f64 = 1e-6;

/// Kernel diagnostic for `dbar0` with `-delta` weights on `[-ext, R + ext]`.
pub fn kernel_diagnostic(problem: &CrProblem) -> Result<KernelReport> {
    problem.validate()?;
    if problem.constraint != AsymptoticConstraint::Free {
        return Err(Error::InvalidParameter("kernel diagnostic expects a free problem".into()));
    }
    let x = -problem.sigma(0.0) / problem.h();
    if (x - math::round(x)).abs() > 1e-9 {
        return Err(Error::InvalidGrid("the grid needs a node at s = R/2".into()));
    }
    let mut all = Vec::new();
    let mut restricted_min = f64::INFINITY;
    for mode in modes(problem.axis.n_t) {
        let full = assemble(problem, mode, Restriction::None);
        let sv = singular_values(&full.matrix)?;
        if mode == Mode::Mean {
            let r = assemble(problem, mode, Restriction::MeanZero);
            debug_assert!(r.dropped.is_some());
            restricted_min = restricted_min.min(singular_values(&r.matrix)?[0]);
        } else {
            restricted_min = restricted_min.min(sv[0]);
        }
        all.extend(sv);
    }
    all.sort_by(f64::total_cmp);
    let sigma_max = all[all.len() - 1];
    let near_zero = all.iter().filter(|&&s| s < NEAR_ZERO * sigma_max).count();
    Ok(KernelReport {
        singular_values: all,
        near_zero,
        sigma_max,
        restricted_min,
    })
}

/// Reference singular values from a dense assembly over all nodal values
/// `u(s_i, t_j)`, using the spectral differentiation matrix in `t` and the
/// decay conditions written as nodal Fourier sums. Meant for small grids.
pub fn dense_singular_values(problem: &CrProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    if problem.constraint != AsymptoticConstraint::Free {
        return Err(Error::InvalidParameter("dense oracle expects a free problem".into()));
    }
    let d = problem.dim();
    let n = problem.n_s();
    let n_t = problem.axis.n_t;
    let h = problem.h();
    let kappa = problem.kappa();
    let j0 = problem.j0();
    let dm = trig::diff_matrix(n_t);
    let gm = fitted_matrix(n_t, h);
    let omega = |i: usize| math::exp(-kappa * problem.sigma(i as f64).abs());
    let col = |i: usize, j: usize, c: usize| (i * n_t + j) * d + c;
    let pairs: Vec<Mode> = modes(n_t).into_iter().filter(|m| *m != Mode::Mean).collect();
    let bc_rows: usize = pairs
        .iter()
        .map(|m| if matches!(m, Mode::Pair(_)) { 2 * d } else { d })
        .sum();
    let rows = (n - 1) * n_t * d + bc_rows;
    let cols = n * n_t * d;
    let mut m = DMatrix::zeros(rows, cols);
    for cell in 0..n - 1 {
        let r = math::exp(kappa * problem.sigma(cell as f64 + 0.5).abs());
        for j in 0..n_t {
            for a in 0..d {
                let row = (cell * n_t + j) * d + a;
                for l in 0..n_t {
                    let v = r * gm[(j, l)] / h;
                    m[(row, col(cell + 1, l, a))] += v * omega(cell + 1);
                    m[(row, col(cell, l, a))] -= v * omega(cell);
                }
                for l in 0..n_t {
                    let dj = dm[j * n_t + l];
                    if dj == 0.0 {
                        continue;
                    }
                    for b in 0..d {
                        let v = 0.5 * r * dj * j0[a * d + b];
                        if v == 0.0 {
                            continue;
                        }
                        m[(row, col(cell, l, b))] += v * omega(cell);
                        m[(row, col(cell + 1, l, b))] += v * omega(cell + 1);
                    }
                }
            }
        }
    }
    let mut row = (n - 1) * n_t * d;
    for mode in pairs {
        match mode {
            Mode::Pair(_) => {
                for (end, sign) in [(0, 1.0), (n - 1, -1.0)] {
                    for a in 0..d {
                        for j in 0..n_t {
                            let (pc, ps) = basis(mode, n_t, j);
                            m[(row, col(end, j, a))] += pc;
                            for b in 0..d {
                                m[(row, col(end, j, b))] += sign * ps * j0[a * d + b];
                            }
                        }
                        row += 1;
                    }
                }
            }
            _ => {
                let mid = math::round(-problem.sigma(0.0) / h) as usize;
                for a in 0..d {
                    for j in 0..n_t {
                        m[(row, col(mid, j, a))] += basis(mode, n_t, j).0;
                    }
                    row += 1;
                }
            }
        }
    }
    singular_values(&m)
}

/// Closed-form test solution on `C_a`:
/// `u = (1 - 2 beta(sigma)) c + e^{-sigma^2} sum_k (a_k cos 2 pi k t + b_k sin 2 pi k t)`
/// with `sigma = s - R/2` and `k <= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manufactured {
    pub constant: Vec<f64>,
    /// `[a_k, b_k]` per mode and component.
    coeffs: Vec<Vec<[f64; 2]>>,
}

impl Manufactured {
    pub fn random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let constant = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coeffs = (0..3)
            .map(|_| {
                (0..dim)
                    .map(|_| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)])
                    .collect()
            })
            .collect();
        Self { constant, coeffs }
    }

    fn parts(&self, sigma: f64, t: f64, value: &mut [f64], ds: &mut [f64], dt: &mut [f64]) {
        let p = 1.0 - 2.0 * Cutoff.beta(sigma);
        let dp = -2.0 * Cutoff.dbeta(sigma);
        let g = math::exp(-sigma * sigma);
        let dg = -2.0 * sigma * g;
        for c in 0..self.constant.len() {
            value[c] = p * self.constant[c];
            ds[c] = dp * self.constant[c];
            dt[c] = 0.0;
            for (k, modes) in self.coeffs.iter().enumerate() {
                let w = TAU * k as f64;
                let (cs, sn) = (math::cos(w * t), math::sin(w * t));
                let [a, b] = modes[c];
                let v = a * cs + b * sn;
                value[c] += g * v;
                ds[c] += dg * v;
                dt[c] += g * w * (b * cs - a * sn);
            }
        }
    }

    /// `u(s, t)` on the neck of length `length`.
    pub fn value(&self, length: f64, s: f64, t: f64, out: &mut [f64]) {
        let d = out.len();
        let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
        self.parts(s - 0.5 * length, t, out, &mut a, &mut b);
    }

    /// `d_s u + J0 d_t u` (row-major `j0`).
    pub fn dbar0(&self, j0: &[f64], length: f64, s: f64, t: f64, out: &mut [f64]) {
        let d = out.len();
        let (mut v, mut us, mut ut) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        self.parts(s - 0.5 * length, t, &mut v, &mut us, &mut ut);
        for a in 0..d {
            out[a] = us[a] + (0..d).map(|b| j0[a * d + b] * ut[b]).sum::<f64>();
        }
    }
}

/// Solves the problem with the exact `dbar0` of `case` as right-hand side
/// and returns the largest nodal error together with the solution.
pub fn manufactured_error(problem: &CrProblem, case: &Manufactured) -> Result<(f64, CrSolution)> {
    problem.validate()?;
    let j0 = problem.j0();
    let length = problem.axis.length;
    let rhs = cell_rhs_from_fn(problem, |s, t, o| case.dbar0(&j0, length, s, t, o))?;
    let sol = linear_cr_solve_cells(problem, &rhs)?;
    let exact = NeckMap::from_fn(&problem.axis, problem.dim(), case.constant.clone(), |s, t, o| {
        case.value(length, s, t, o)
    })?;
    Ok((sol.solution.max_abs_diff(&exact), sol))
}
