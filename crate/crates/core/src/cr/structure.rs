use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::math;
use crate::{Error, Result};

type Evaluator = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant(Vec<f64>),
    /// `A(p) J0 A(p)^{-1}` with `A(p) = I + eps sin(freq . p) K`.
    Conjugated {
        base: Vec<f64>,
        eps: f64,
        k: Vec<f64>,
        freq: Vec<f64>,
    },
    Custom(Evaluator),
    /// `J(p + origin)`.
    Translated(Arc<ComplexStructureField>, Vec<f64>),
}

/// A field of complex structures `J(p)` on `R^{2n}` (row-major `2n x 2n`
/// matrices with `J^2 = -I`).
#[derive(Clone)]
pub struct ComplexStructureField {
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for ComplexStructureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Constant(_) => "constant",
            Kind::Conjugated { .. } => "conjugated",
            Kind::Custom(_) => "custom",
            Kind::Translated(..) => "translated",
        };
        f.debug_struct("ComplexStructureField")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .finish()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 || !dim.is_multiple_of(2) {
        return Err(Error::OddDimension(dim));
    }
    Ok(())
}

fn defect(j: &[f64], dim: usize) -> f64 {
    let m = DMatrix::from_row_slice(dim, dim, j);
    (&m * &m + DMatrix::identity(dim, dim)).amax()
}

/// `(x_1, y_1, ..., x_n, y_n) -> (-y_1, x_1, ...)`.
fn standard_matrix(dim: usize) -> Vec<f64> {
    let mut j = vec![0.0; dim * dim];
    for b in 0..dim / 2 {
        let (x, y) = (2 * b, 2 * b + 1);
        j[x * dim + y] = -1.0;
        j[y * dim + x] = 1.0;
    }
    j
}

impl ComplexStructureField {
    /// The standard structure `J0(x, y) = (-y, x)` on each complex coordinate.
    pub fn standard(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            kind: Kind::Constant(standard_matrix(dim)),
        })
    }

    /// A constant structure; rejects matrices with `|J^2 + I| > 1e-10`.
    pub fn constant(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if matrix.len() != dim * dim {
            return Err(Error::ComplexStructure(format!(
                "expected {} entries, got {}",
                dim * dim,
                matrix.len()
            )));
        }
        let d = defect(&matrix, dim);
        if !(d <= 1e-10) {
            return Err(Error::ComplexStructure(format!("|J^2 + I| = {d:e}")));
        }
        Ok(Self {
            dim,
            kind: Kind::Constant(matrix),
        })
    }

    /// `J(p) = A(p) J0 A(p)^{-1}` with `A(p) = I + eps sin(freq . p) K`; a
    /// genuinely point-dependent structure. Needs `eps |K| < 1`.
    pub fn conjugated(dim: usize, eps: f64, k: Vec<f64>, freq: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if k.len() != dim * dim || freq.len() != dim {
            return Err(Error::ComplexStructure("conjugation data has the wrong shape".into()));
        }
        let norm = DMatrix::from_row_slice(dim, dim, &k).norm();
        if !(eps.abs() * norm < 1.0) {
            return Err(Error::ComplexStructure("conjugation is not invertible".into()));
        }
        Ok(Self {
            dim,
            kind: Kind::Conjugated {
                base: standard_matrix(dim),
                eps,
                k,
                freq,
            },
        })
    }

    /// A user-supplied evaluator `f(p, out)` writing the row-major matrix.
    pub fn custom(dim: usize, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            kind: Kind::Custom(Arc::new(f)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    /// The row-major matrix `J(p)`.
    pub fn matrix_at(&self, p: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Constant(m) => out.copy_from_slice(m),
            Kind::Conjugated { base, eps, k, freq } => {
                let d = self.dim;
                let phase: f64 = p.iter().zip(freq).map(|(x, w)| x * w).sum();
                let a = DMatrix::identity(d, d) + DMatrix::from_row_slice(d, d, k) * (eps * math::sin(phase));
                let inv = a.clone().try_inverse().expect("invertible by construction");
                let j = a * DMatrix::from_row_slice(d, d, base) * inv;
                for r in 0..d {
                    for c in 0..d {
                        out[r * d + c] = j[(r, c)];
                    }
                }
            }
            Kind::Custom(f) => f(p, out),
            Kind::Translated(inner, origin) => {
                let q: Vec<f64> = p.iter().zip(origin).map(|(x, o)| x + o).collect();
                inner.matrix_at(&q, out)
            }
        }
    }

    /// `out = J(p) v`.
    pub fn apply(&self, p: &[f64], v: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let d = self.dim;
        self.matrix_at(p, scratch);
        for r in 0..d {
            out[r] = (0..d).map(|c| scratch[r * d + c] * v[c]).sum();
        }
    }

    /// The field `p -> J(p + origin)`. Evaluating a map near a constant as
    /// a small map with the translated structure avoids carrying the
    /// constant through the derivatives.
    pub fn translated(&self, origin: &[f64]) -> Self {
        if self.is_constant() {
            return self.clone();
        }
        Self {
            dim: self.dim,
            kind: Kind::Translated(Arc::new(self.clone()), origin.to_vec()),
        }
    }

    /// The constant structure `J(p)` frozen at one point.
    pub fn frozen_at(&self, p: &[f64]) -> Result<Self> {
        let mut m = vec![0.0; self.dim * self.dim];
        self.matrix_at(p, &mut m);
        Self::constant(self.dim, m)
    }

    /// Largest `|J(p)^2 + I|` over the given points.
    pub fn max_defect(&self, points: &[Vec<f64>]) -> f64 {
        let mut m = vec![0.0; self.dim * self.dim];
        points
            .iter()
            .map(|p| {
                self.matrix_at(p, &mut m);
                defect(&m, self.dim)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_squares_to_minus_one() {
        for d in [2, 4, 6] {
            let j = ComplexStructureField::standard(d).unwrap();
            assert!(j.max_defect(&[vec![0.0; d]]) == 0.0);
        }
        assert!(matches!(ComplexStructureField::standard(3), Err(Error::OddDimension(3))));
    }

    #[test]
    fn rejects_non_structures() {
        assert!(ComplexStructureField::constant(2, vec![1.0, 0.0, 0.0, 1.0]).is_err());
        // a non-standard constant structure
        let j = ComplexStructureField::constant(2, vec![1.0, -2.0, 1.0, -1.0]).unwrap();
        assert!(j.is_constant());
    }

    #[test]
    fn conjugated_field_is_a_structure_everywhere() {
        let j = ComplexStructureField::conjugated(
            4,
            0.3,
            vec![0.5, 0.2, 0.0, 0.1, -0.3, 0.4, 0.2, 0.0, 0.1, 0.0, 0.2, -0.5, 0.0, 0.3, 0.1, 0.2],
            vec![1.0, -0.5, 0.7, 2.0],
        )
        .unwrap();
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|i| (0..4).map(|c| math::sin((i * 4 + c) as f64)).collect())
            .collect();
        assert!(j.max_defect(&pts) <= 1e-10);
        let mut m1 = vec![0.0; 16];
        let mut m2 = vec![0.0; 16];
        j.matrix_at(&pts[0], &mut m1);
        j.matrix_at(&pts[1], &mut m2);
        assert!(math::max_abs_diff(&m1, &m2) > 1e-3);
    }
}
