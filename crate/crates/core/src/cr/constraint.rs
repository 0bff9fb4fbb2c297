//! Transversal constraints: the unique point where a disk map close to an
//! embedding meets a codimension-two linear subspace.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::Rng;

use crate::math;
use crate::{Error, Result};

/// Newton iteration budget.
pub const MAX_ITERATIONS: usize = 50;

/// Target residual of the constraint equation.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// A map from the closed unit disk to `R^dim`.
pub trait DiskMap {
    fn dim(&self) -> usize;
    fn eval(&self, z: [f64; 2], out: &mut [f64]);
}

impl<F: Fn([f64; 2], &mut [f64])> DiskMap for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, z: [f64; 2], out: &mut [f64]) {
        (self.1)(z, out)
    }
}

/// `v(z) = (x, y, 0, ..., 0) + shift + sum_k q_k(z) e_k` with quadratic
/// forms `q_k(z) = a x^2 + b x y + c y^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedEmbedding {
    pub dim: usize,
    pub shift: Vec<f64>,
    pub quadratic: Vec<[f64; 3]>,
}

impl PerturbedEmbedding {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::OddDimension(dim));
        }
        Ok(Self {
            dim,
            shift: vec![0.0; dim],
            quadratic: vec![[0.0; 3]; dim],
        })
    }

    pub fn shifted(mut self, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::Incompatible("shift has the wrong length".into()));
        }
        self.shift = shift;
        Ok(self)
    }

    /// Random shift and quadratic coefficients of size at most `eps`.
    pub fn random<R: Rng + ?Sized>(dim: usize, eps: f64, rng: &mut R) -> Result<Self> {
        let mut v = Self::new(dim)?;
        for k in 0..dim {
            v.shift[k] = eps * rng.random_range(-1.0..1.0);
            for c in 0..3 {
                v.quadratic[k][c] = eps * rng.random_range(-1.0..1.0);
            }
        }
        Ok(v)
    }
}

impl DiskMap for PerturbedEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: [f64; 2], out: &mut [f64]) {
        let [x, y] = z;
        for k in 0..self.dim {
            let [a, b, c] = self.quadratic[k];
            out[k] = self.shift[k] + a * x * x + b * x * y + c * y * y;
        }
        out[0] += x;
        out[1] += y;
    }
}

/// Orthonormal basis (rows) of the orthogonal complement of `span(h)`;
/// requires codimension two.
fn complement(dim: usize, h: &[Vec<f64>]) -> Result<[Vec<f64>; 2]> {
    if h.iter().any(|v| v.len() != dim) {
        return Err(Error::Incompatible("subspace basis has the wrong length".into()));
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    let candidates = h.iter().cloned().chain((0..dim).map(|k| {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        e
    }));
    for (idx, mut v) in candidates.enumerate() {
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let norm = math::sqrt(v.iter().map(|x| x * x).sum());
        if norm > 1e-10 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            if idx >= h.len() {
                out.push(v.clone());
            }
            basis.push(v);
        } else if idx < h.len() {
            return Err(Error::Incompatible("subspace basis is linearly dependent".into()));
        }
    }
    if out.len() != 2 {
        return Err(Error::Incompatible(alloc::format!(
            "subspace has codimension {}, expected 2",
            out.len()
        )));
    }
    let second = out.pop().unwrap();
    let first = out.pop().unwrap();
    Ok([first, second])
}

/// The constraint equation `g(z) = P v(z)` with `P` the orthogonal
/// projection onto the complement of `H`, in complement coordinates.
pub struct Constraint<'a, V: DiskMap + ?Sized> {
    map: &'a V,
    normal: [Vec<f64>; 2],
}

impl<'a, V: DiskMap + ?Sized> Constraint<'a, V> {
    pub fn new(map: &'a V, h: &[Vec<f64>]) -> Result<Self> {
        Ok(Self {
            map,
            normal: complement(map.dim(), h)?,
        })
    }

    pub fn value(&self, z: [f64; 2]) -> [f64; 2] {
        let mut v = vec![0.0; self.map.dim()];
        self.map.eval(z, &mut v);
        let dot = |n: &[f64]| n.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        [dot(&self.normal[0]), dot(&self.normal[1])]
    }

    pub fn residual(&self, z: [f64; 2]) -> f64 {
        let g = self.value(z);
        math::sqrt(g[0] * g[0] + g[1] * g[1])
    }
}

/// Result of [`transversal_constraint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintPoint {
    pub z: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
}

/// Newton iteration from `z = 0` with a central-difference Jacobian for the
/// point `z_v` with `v(z_v) in H`. Fails if the iteration leaves the disk of
/// radius 1/2 or does not reach the residual tolerance.
pub fn transversal_constraint<V: DiskMap + ?Sized>(v: &V, h: &[Vec<f64>]) -> Result<ConstraintPoint> {
    let g = Constraint::new(v, h)?;
    let step = 1e-6;
    let mut z = [0.0, 0.0];
    for it in 0..=MAX_ITERATIONS {
        let gz = g.value(z);
        let residual = math::sqrt(gz[0] * gz[0] + gz[1] * gz[1]);
        if residual <= 1e-3 * RESIDUAL_TOL {
            return finish(z, residual, it);
        }
        if it == MAX_ITERATIONS {
            if residual <= RESIDUAL_TOL {
                return finish(z, residual, it);
            }
            break;
        }
        let mut jac = Matrix2::zeros();
        for c in 0..2 {
            let (mut zp, mut zm) = (z, z);
            zp[c] += step;
            zm[c] -= step;
            let (gp, gm) = (g.value(zp), g.value(zm));
            jac[(0, c)] = (gp[0] - gm[0]) / (2.0 * step);
            jac[(1, c)] = (gp[1] - gm[1]) / (2.0 * step);
        }
        let dz = jac
            .lu()
            .solve(&Vector2::new(gz[0], gz[1]))
            .ok_or(Error::TransversalityLost(it))?;
        z = [z[0] - dz[0], z[1] - dz[1]];
        if !(z[0] * z[0] + z[1] * z[1] < 0.25) {
            return Err(Error::TransversalityLost(it + 1));
        }
        if dz.norm() < 1e-15 {
            let residual = g.residual(z);
            if residual <= RESIDUAL_TOL {
                return finish(z, residual, it + 1);
            }
        }
    }
    Err(Error::TransversalityLost(MAX_ITERATIONS))
}

fn finish(z: [f64; 2], residual: f64, iterations: usize) -> Result<ConstraintPoint> {
    Ok(ConstraintPoint {
        z,
        residual,
        iterations,
    })
}

/// Minimizer of `|P v(z)|` over the disk of radius 1/2 by hierarchical grid
/// search: a `201 x 201` grid, then repeated refinement around the best node.
pub fn grid_search<V: DiskMap + ?Sized>(v: &V, h: &[Vec<f64>]) -> Result<[f64; 2]> {
    let g = Constraint::new(v, h)?;
    let n = 200;
    let mut center = [0.0, 0.0];
    let mut half = 0.5;
    while half > 1e-10 {
        let spacing = 2.0 * half / n as f64;
        let mut best = (f64::INFINITY, center);
        for i in 0..=n {
            for j in 0..=n {
                let z = [center[0] - half + i as f64 * spacing, center[1] - half + j as f64 * spacing];
                if z[0] * z[0] + z[1] * z[1] > 0.25 {
                    continue;
                }
                let r = g.residual(z);
                if r < best.0 {
                    best = (r, z);
                }
            }
        }
        center = best.1;
        half = 4.0 * spacing;
    }
    Ok(center)
}

/// The coordinate subspace `{0}^2 x R^{dim - 2}` as a basis.
pub fn coordinate_subspace(dim: usize) -> Vec<Vec<f64>> {
    (2..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            e
        })
        .collect()
}

/// Dense matrix with the basis vectors of `h` as columns.
pub fn basis_matrix(dim: usize, h: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(dim, h.len(), |r, c| h[c][r])
}
