//! Periodic (trigonometric) interpolation and spectral differentiation on the
//! unit circle `R/Z` sampled at `t_j = j / n`.
//!
//! Rows are laid out as `n` consecutive points of `dim` components each.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, PI, TAU};

/// Tolerance for treating a shift as a whole number of nodes.
pub const NODE_TOL: f64 = 1e-9;

/// Spectral differentiation matrix for `n` equispaced points on a circle of
/// circumference 1, row-major.
pub fn diff_matrix(n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    let h = PI / n as f64;
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let m = j as isize - k as isize;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let x = m as f64 * h;
            let entry = if n.is_multiple_of(2) {
                0.5 * sign / math::tan(x)
            } else {
                0.5 * sign / math::sin(x)
            };
            d[j * n + k] = TAU * entry;
        }
    }
    d
}

/// Applies a precomputed `n x n` differentiation matrix (rows summing to
/// zero) to a row of `n` points with `dim` components:
/// `out[j] = sum_k mat[j][k] (row[k] - row[j])`, which is exact on constants.
pub fn apply_matrix(mat: &[f64], row: &[f64], n: usize, dim: usize, out: &mut [f64]) {
    for j in 0..n {
        let o = &mut out[j * dim..(j + 1) * dim];
        o.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..n {
            let w = mat[j * n + k];
            if w == 0.0 {
                continue;
            }
            for c in 0..dim {
                o[c] += w * (row[k * dim + c] - row[j * dim + c]);
            }
        }
    }
}

/// Weight of node 0 in the periodic interpolant evaluated at offset `x`
/// (in units of the period) from that node.
fn kernel(n: usize, x: f64) -> f64 {
    let x = x - math::round(x);
    if x.abs() * n as f64 <= NODE_TOL {
        return 1.0;
    }
    let nf = n as f64;
    let num = math::sin(PI * nf * x);
    if n.is_multiple_of(2) {
        num / (nf * math::tan(PI * x))
    } else {
        num / (nf * math::sin(PI * x))
    }
}

/// Interpolation weights `w_k` with `u(t) = sum_k w_k u(t_k)`.
pub fn interp_weights(n: usize, t: f64) -> Vec<f64> {
    (0..n).map(|k| kernel(n, t - k as f64 / n as f64)).collect()
}

/// If `shift * n` is (numerically) an integer, that integer reduced mod `n`.
pub fn node_shift(n: usize, shift: f64) -> Option<usize> {
    let x = shift * n as f64;
    let r = math::round(x);
    if (x - r).abs() <= NODE_TOL {
        Some((r as i64).rem_euclid(n as i64) as usize)
    } else {
        None
    }
}

/// `out[j] = u(t_j + shift)` for a row sampled at `t_k`.
pub fn shift_row(row: &[f64], n: usize, dim: usize, shift: f64, out: &mut [f64]) {
    if let Some(m) = node_shift(n, shift) {
        for j in 0..n {
            let src = (j + m) % n;
            out[j * dim..(j + 1) * dim].copy_from_slice(&row[src * dim..(src + 1) * dim]);
        }
        return;
    }
    // weight of source node j + m for target node j depends only on m;
    // values are taken relative to node 0 so constant rows stay exact
    let w: Vec<f64> = (0..n)
        .map(|m| kernel(n, shift - m as f64 / n as f64))
        .collect();
    for j in 0..n {
        let o = &mut out[j * dim..(j + 1) * dim];
        o.iter_mut().for_each(|x| *x = 0.0);
        for (m, &wm) in w.iter().enumerate() {
            let src = (j + m) % n;
            for c in 0..dim {
                o[c] += wm * (row[src * dim + c] - row[c]);
            }
        }
        for c in 0..dim {
            o[c] += row[c];
        }
    }
}

/// Evaluates a row at an arbitrary `t`.
pub fn eval_row(row: &[f64], n: usize, dim: usize, t: f64, out: &mut [f64]) {
    let t = math::wrap_unit(t);
    if let Some(j) = node_shift(n, t) {
        out.copy_from_slice(&row[j * dim..(j + 1) * dim]);
        return;
    }
    let w = interp_weights(n, t);
    out.copy_from_slice(&row[..dim]);
    for (k, wk) in w.iter().enumerate().skip(1) {
        for c in 0..dim {
            out[c] += wk * (row[k * dim + c] - row[c]);
        }
    }
}

/// Mean over the circle (rectangle rule).
pub fn row_mean(row: &[f64], n: usize, dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for k in 0..n {
        for c in 0..dim {
            m[c] += row[k * dim + c];
        }
    }
    m.iter_mut().for_each(|x| *x /= n as f64);
    m
}
