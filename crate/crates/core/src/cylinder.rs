//! Grid-sampled maps on cylinder pieces `[s_min, s_max] x S^1` and their
//! weighted Sobolev norms.
//!
//! Derivatives in `s` use second-order differences (centered inside,
//! one-sided at the ends); derivatives in `t` are spectral. Integrals use the
//! trapezoid rule in `s` and the rectangle rule in `t`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::profile::ScScale;
use crate::splice::Cutoff;
use crate::trig;
use crate::{Error, Result};

/// Highest derivative order the norms accept.
pub const MAX_ORDER: usize = 6;

/// Uniform sampling of `[s_min, s_max] x R/Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub s_min: f64,
    pub s_max: f64,
    pub n_s: usize,
    pub n_t: usize,
}

impl Grid {
    pub fn new(s_min: f64, s_max: f64, n_s: usize, n_t: usize) -> Result<Self> {
        if !(s_min.is_finite() && s_max.is_finite() && s_min < s_max) {
            return Err(Error::InvalidGrid(format!("need s_min < s_max, got [{s_min}, {s_max}]")));
        }
        if n_s < 4 || n_t < 4 {
            return Err(Error::InvalidGrid(format!(
                "need n_s >= 4 and n_t >= 4, got {n_s} x {n_t}"
            )));
        }
        Ok(Self {
            s_min,
            s_max,
            n_s,
            n_t,
        })
    }

    pub fn ds(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n_s - 1) as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.n_s {
            self.s_max
        } else {
            self.s_min + i as f64 * self.ds()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.n_t as f64
    }

    /// Fractional node index of `s`.
    pub fn index_of(&self, s: f64) -> f64 {
        (s - self.s_min) / self.ds()
    }
}

/// Values on a uniform `s`-lattice times the `t`-lattice, stored row by row
/// (`s` outer, then `t`, then component).
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub n_s: usize,
    pub n_t: usize,
    pub dim: usize,
    pub ds: f64,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn zeros(n_s: usize, n_t: usize, dim: usize, ds: f64) -> Self {
        Self {
            n_s,
            n_t,
            dim,
            ds,
            data: vec![0.0; n_s * n_t * dim],
        }
    }

    pub fn row_len(&self) -> usize {
        self.n_t * self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let l = self.row_len();
        &self.data[i * l..(i + 1) * l]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let l = self.row_len();
        &mut self.data[i * l..(i + 1) * l]
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let k = (i * self.n_t + j) * self.dim;
        &self.data[k..k + self.dim]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_s == other.n_s && self.n_t == other.n_t && self.dim == other.dim
    }

    /// Second-order `s`-derivative (needs `n_s >= 3`).
    pub fn d_s(&self) -> Self {
        self.d_s_order(1)
    }

    /// `order`-th `s`-derivative from a single stencil of `order + 2`
    /// consecutive nodes (centered where possible), second-order accurate.
    /// Needs `n_s >= order + 2`.
    pub fn d_s_order(&self, order: usize) -> Self {
        self.d_s_stencil(order, order + 2)
    }

    /// `order`-th s-derivative from `width` consecutive nodes, centered
    /// where possible (accuracy `width - order`).
    pub fn d_s_stencil(&self, order: usize, width: usize) -> Self {
        if order == 0 {
            return self.clone();
        }
        let n = self.n_s;
        assert!(n >= width, "need at least {width} nodes for derivative order {order}");
        let l = self.row_len();
        let scale = math::powi(self.ds, -(order as i32));
        let nodes: Vec<f64> = (0..width).map(|k| k as f64).collect();
        let stencils: Vec<Vec<f64>> = (0..width)
            .map(|p| {
                fd_weights(p as f64, &nodes, order)
                    .into_iter()
                    .map(|w| w * scale)
                    .collect()
            })
            .collect();
        let mut out = Self::zeros(n, self.n_t, self.dim, self.ds);
        for i in 0..n {
            let first = i.saturating_sub((width - 1) / 2).min(n - width);
            let w = &stencils[i - first];
            let o = &mut out.data[i * l..(i + 1) * l];
            // differences against the first stencil row keep constants exact
            let base = &self.data[first * l..(first + 1) * l];
            for (m, &wm) in w.iter().enumerate().skip(1) {
                let src = &self.data[(first + m) * l..(first + m + 1) * l];
                o.iter_mut().zip(src).zip(base).for_each(|((x, y), b)| *x += wm * (y - b));
            }
        }
        out
    }

    /// Spectral `t`-derivative.
    pub fn d_t(&self) -> Self {
        let mat = trig::diff_matrix(self.n_t);
        self.d_t_with(&mat)
    }

    fn d_t_with(&self, mat: &[f64]) -> Self {
        let mut out = Self::zeros(self.n_s, self.n_t, self.dim, self.ds);
        for i in 0..self.n_s {
            let l = self.row_len();
            trig::apply_matrix(
                mat,
                &self.data[i * l..(i + 1) * l],
                self.n_t,
                self.dim,
                &mut out.data[i * l..(i + 1) * l],
            );
        }
        out
    }

    /// `sum_{i + j <= order} int |d_s^i d_t^j u|^2 e^{log_weight(i)}` over
    /// the sampled strip. Rows whose values vanish are skipped, so infinite
    /// weights on zero data contribute nothing.
    pub fn weighted_sq(&self, order: usize, log_weight: &dyn Fn(usize) -> f64) -> Result<f64> {
        if order > MAX_ORDER || self.n_s < order + 2 {
            return Err(Error::OrderTooLarge {
                order,
                n_s: self.n_s,
            });
        }
        let mat = trig::diff_matrix(self.n_t);
        let weights: Vec<f64> = (0..self.n_s).map(log_weight).collect();
        let mut total = 0.0;
        let mut dt = self.clone();
        for j in 0..=order {
            if j > 0 {
                dt = dt.d_t_with(&mat);
            }
            for i in 0..=(order - j) {
                total += dt.d_s_order(i).quadrature(&weights);
            }
        }
        Ok(total)
    }

    fn quadrature(&self, log_w: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n_s {
            let sq: f64 = self.row(i).iter().map(|x| x * x).sum();
            if sq == 0.0 {
                continue;
            }
            let end = i == 0 || i + 1 == self.n_s;
            let q = if end { 0.5 * self.ds } else { self.ds };
            sum += q * math::exp(log_w[i]) * sq / self.n_t as f64;
        }
        sum
    }

    /// Row at fractional index `x`: exact copy at nodes, monotone cubic
    /// (PCHIP) in between.
    pub fn row_at_index(&self, x: f64, out: &mut [f64]) -> Result<()> {
        let last = (self.n_s - 1) as f64;
        if !(x >= -trig::NODE_TOL && x <= last + trig::NODE_TOL) {
            return Err(Error::OutOfRange(x));
        }
        let r = math::round(x);
        if (x - r).abs() <= trig::NODE_TOL {
            out.copy_from_slice(self.row(r as usize));
            return Ok(());
        }
        let i = (math::floor(x) as usize).min(self.n_s - 2);
        let th = x - i as f64;
        let (h10, h01, h11) = (
            th * th * th - 2.0 * th * th + th,
            -2.0 * th * th * th + 3.0 * th * th,
            th * th * th - th * th,
        );
        let n = self.n_s;
        let l = self.row_len();
        let d = &self.data;
        for k in 0..l {
            let y = |m: usize| d[m * l + k];
            let slope = |m: usize| -> f64 {
                if m == 0 {
                    y(1) - y(0)
                } else if m == n - 1 {
                    y(n - 1) - y(n - 2)
                } else {
                    let a = y(m) - y(m - 1);
                    let b = y(m + 1) - y(m);
                    if a * b <= 0.0 {
                        0.0
                    } else {
                        2.0 * a * b / (a + b)
                    }
                }
            };
            // h00 + h01 = 1, written so constant data is reproduced exactly
            out[k] = y(i) + h01 * (y(i + 1) - y(i)) + h10 * slope(i) + h11 * slope(i + 1);
        }
        Ok(())
    }

    pub fn map_rows(&self, mut f: impl FnMut(usize, &[f64], &mut [f64])) -> Self {
        let mut out = Self::zeros(self.n_s, self.n_t, self.dim, self.ds);
        let l = self.row_len();
        for i in 0..self.n_s {
            f(i, &self.data[i * l..(i + 1) * l], &mut out.data[i * l..(i + 1) * l]);
        }
        out
    }

    /// `self + alpha * other` (same shape).
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(x, y)| *x += alpha * y);
        out
    }

    /// Values averaged onto the `n_s - 1` cell midpoints.
    pub fn midpoints(&self) -> Self {
        let mut out = Self::zeros(self.n_s - 1, self.n_t, self.dim, self.ds);
        for i in 0..self.n_s - 1 {
            let (a, b) = (self.row(i), self.row(i + 1));
            out.row_mut(i)
                .iter_mut()
                .zip(a.iter().zip(b))
                .for_each(|(o, (x, y))| *o = 0.5 * (x + y));
        }
        out
    }
}

/// Weights for the `order`-th derivative at `x0` from values at `x`
/// (Fornberg's recursion).
fn fd_weights(x0: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|r| r[order]).collect()
}

/// Asymptotic behavior attached to a sampled map.
#[derive(Debug, Clone, PartialEq)]
pub enum Asymptote {
    /// No far-field information; evaluation off the grid fails.
    None,
    /// `u -> c` at both ends; the stored values are `c + r` with `r = 0`
    /// beyond the grid.
    Constant(Vec<f64>),
    /// `u -> +c` at `+inf` and `-c` at `-inf`; the stored values are
    /// `(1 - 2 beta(s - s_mid)) c + r` with `s_mid` the grid midpoint.
    Antipodal(Vec<f64>),
}

/// A map sampled on a [`Grid`] with values in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMap {
    grid: Grid,
    asympt: Asymptote,
    samples: Samples,
}

impl CylinderMap {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>, asympt: Asymptote) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".to_string()));
        }
        if values.len() != grid.n_s * grid.n_t * dim {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.n_s * grid.n_t * dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("values must be finite".to_string()));
        }
        match &asympt {
            Asymptote::Constant(c) | Asymptote::Antipodal(c) if c.len() != dim => {
                return Err(Error::Asymptotics(format!(
                    "constant has {} components, map has {dim}",
                    c.len()
                )))
            }
            _ => {}
        }
        Ok(Self {
            samples: Samples {
                n_s: grid.n_s,
                n_t: grid.n_t,
                dim,
                ds: grid.ds(),
                data: values,
            },
            grid,
            asympt,
        })
    }

    /// Samples `f(s, t, out)` at every node.
    pub fn from_fn(
        grid: Grid,
        dim: usize,
        asympt: Asymptote,
        mut f: impl FnMut(f64, f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; grid.n_s * grid.n_t * dim];
        for i in 0..grid.n_s {
            for j in 0..grid.n_t {
                let k = (i * grid.n_t + j) * dim;
                f(grid.s(i), grid.t(j), &mut values[k..k + dim]);
            }
        }
        Self::new(grid, dim, values, asympt)
    }

    pub(crate) fn from_samples(grid: Grid, samples: Samples, asympt: Asymptote) -> Self {
        Self {
            grid,
            asympt,
            samples,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.samples.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.samples.data
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn asympt(&self) -> &Asymptote {
        &self.asympt
    }

    pub fn value(&self, i: usize, j: usize) -> &[f64] {
        self.samples.at(i, j)
    }

    /// The asymptotic constant, if any (the `+inf` value for antipodal maps).
    pub fn constant(&self) -> Option<&[f64]> {
        match &self.asympt {
            Asymptote::None => None,
            Asymptote::Constant(c) | Asymptote::Antipodal(c) => Some(c),
        }
    }

    fn c_factor(&self, s: f64) -> f64 {
        match self.asympt {
            Asymptote::Antipodal(_) => {
                let mid = 0.5 * (self.grid.s_min + self.grid.s_max);
                1.0 - 2.0 * Cutoff.beta(s - mid)
            }
            _ => 1.0,
        }
    }

    /// `u - c-part`; the full values when there is no asymptote.
    pub fn remainder(&self) -> Samples {
        let Some(c) = self.constant() else {
            return self.samples.clone();
        };
        let dim = self.dim();
        self.samples.map_rows(|i, row, out| {
            let f = self.c_factor(self.grid.s(i));
            for (k, (o, x)) in out.iter_mut().zip(row).enumerate() {
                *o = x - f * c[k % dim];
            }
        })
    }

    /// The `t`-row at `s` (interpolated in `s` off nodes, asymptotic value
    /// beyond the grid).
    pub fn row_at(&self, s: f64, out: &mut [f64]) -> Result<()> {
        let x = self.grid.index_of(s);
        let last = (self.grid.n_s - 1) as f64;
        if x < -trig::NODE_TOL || x > last + trig::NODE_TOL {
            let c = self.constant().ok_or(Error::OutOfRange(s))?;
            let sign = if x < 0.0 { -1.0 } else { 1.0 };
            let f = match self.asympt {
                Asymptote::Antipodal(_) => sign,
                _ => 1.0,
            };
            for (k, o) in out.iter_mut().enumerate() {
                *o = f * c[k % self.dim()];
            }
            return Ok(());
        }
        self.samples.row_at_index(x, out)
    }

    /// Value at `(s, t)`; `t` wraps mod 1.
    pub fn evaluate(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.samples.row_len()];
        self.row_at(s, &mut row)?;
        let mut out = vec![0.0; self.dim()];
        trig::eval_row(&row, self.grid.n_t, self.dim(), t, &mut out);
        Ok(out)
    }

    /// `int_{S^1} u(s0, t) dt`.
    pub fn circle_mean(&self, s0: f64) -> Result<Vec<f64>> {
        let x = self.grid.index_of(s0);
        let last = (self.grid.n_s - 1) as f64;
        if x < -trig::NODE_TOL || x > last + trig::NODE_TOL {
            return Err(Error::OutOfRange(s0));
        }
        let mut row = vec![0.0; self.samples.row_len()];
        self.samples.row_at_index(x, &mut row)?;
        Ok(trig::row_mean(&row, self.grid.n_t, self.dim()))
    }

    fn derivative_asympt(&self) -> Asymptote {
        match self.asympt {
            Asymptote::None => Asymptote::None,
            _ => Asymptote::Constant(vec![0.0; self.dim()]),
        }
    }

    pub fn d_s(&self) -> Self {
        Self::from_samples(self.grid, self.samples.d_s(), self.derivative_asympt())
    }

    pub fn d_t(&self) -> Self {
        Self::from_samples(self.grid, self.samples.d_t(), self.derivative_asympt())
    }

    /// Same grid and asymptote kind, values `f(s, t, u, out)`.
    pub fn map_values(&self, asympt: Asymptote, mut f: impl FnMut(f64, f64, &[f64], &mut [f64])) -> Result<Self> {
        let dim = self.dim();
        let samples = self.samples.map_rows(|i, row, out| {
            let s = self.grid.s(i);
            for j in 0..self.grid.n_t {
                f(s, self.grid.t(j), &row[j * dim..(j + 1) * dim], &mut out[j * dim..(j + 1) * dim]);
            }
        });
        Ok(Self::from_samples(self.grid, samples, asympt))
    }
}

/// `(sum_{|alpha| <= k} int |D^alpha r|^2 e^{2 delta |s|})^{1/2}` for the
/// remainder `r` of `u`.
pub fn weighted_norm(u: &CylinderMap, k: usize, delta: f64) -> Result<f64> {
    weighted_norm_centered(u, k, delta, 0.0)
}

/// Weighted norm of the remainder with weight `e^{2 delta |s - center|}`.
pub fn weighted_norm_centered(u: &CylinderMap, k: usize, delta: f64, center: f64) -> Result<f64> {
    let g = *u.grid();
    let sq = u
        .remainder()
        .weighted_sq(k, &|i| 2.0 * delta * (g.s(i) - center).abs())?;
    Ok(math::sqrt(sq))
}

/// Base (E) or fiber (F) pair space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Matching asymptotic constants.
    E,
    /// Zero asymptotic constants.
    F,
}

/// Shape shared by the two halves of a pair: `[0, s_max]` and `[-s_max, 0]`
/// with `n_s x n_t` nodes each and values in `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairLayout {
    pub s_max: f64,
    pub n_s: usize,
    pub n_t: usize,
    pub dim: usize,
}

impl PairLayout {
    pub fn new(s_max: f64, n_s: usize, n_t: usize, dim: usize) -> Result<Self> {
        Grid::new(0.0, s_max, n_s, n_t)?;
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".to_string()));
        }
        Ok(Self {
            s_max,
            n_s,
            n_t,
            dim,
        })
    }

    /// Layout with spacing `1 / per_unit` reaching at least `s_max`.
    pub fn with_density(s_max: f64, per_unit: usize, n_t: usize, dim: usize) -> Result<Self> {
        let cells = math::ceil(s_max * per_unit as f64 - 1e-9) as usize;
        Self::new(cells as f64 / per_unit as f64, cells + 1, n_t, dim)
    }

    pub fn plus_grid(&self) -> Grid {
        Grid {
            s_min: 0.0,
            s_max: self.s_max,
            n_s: self.n_s,
            n_t: self.n_t,
        }
    }

    pub fn minus_grid(&self) -> Grid {
        Grid {
            s_min: -self.s_max,
            s_max: 0.0,
            n_s: self.n_s,
            n_t: self.n_t,
        }
    }

    pub fn ds(&self) -> f64 {
        self.plus_grid().ds()
    }
}

/// A pair `(u+, u-)` on `[0, s_max] x S^1` and `[-s_max, 0] x S^1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPair {
    pub plus: CylinderMap,
    pub minus: CylinderMap,
    space: Space,
}

impl MapPair {
    pub fn new(plus: CylinderMap, minus: CylinderMap, space: Space) -> Result<Self> {
        let (gp, gm) = (plus.grid(), minus.grid());
        if gp.s_min != 0.0 || gm.s_max != 0.0 || gp.s_max != -gm.s_min {
            return Err(Error::Incompatible(
                "pair grids must be [0, S] and [-S, 0]".to_string(),
            ));
        }
        if gp.n_s != gm.n_s || gp.n_t != gm.n_t || plus.dim() != minus.dim() {
            return Err(Error::Incompatible("pair halves differ in shape".to_string()));
        }
        let (cp, cm) = match (plus.asympt(), minus.asympt()) {
            (Asymptote::Constant(a), Asymptote::Constant(b)) => (a, b),
            _ => {
                return Err(Error::Asymptotics(
                    "pair halves need constant asymptotes".to_string(),
                ))
            }
        };
        if cp != cm {
            return Err(Error::Asymptotics("pair constants differ".to_string()));
        }
        if space == Space::F && cp.iter().any(|&x| x != 0.0) {
            return Err(Error::Asymptotics("F-pairs have zero constants".to_string()));
        }
        Ok(Self { plus, minus, space })
    }

    /// Pair sampled from closed forms; `c` is the common constant (ignored
    /// and set to zero for F-pairs).
    pub fn from_fns(
        layout: &PairLayout,
        space: Space,
        c: &[f64],
        f_plus: impl FnMut(f64, f64, &mut [f64]),
        f_minus: impl FnMut(f64, f64, &mut [f64]),
    ) -> Result<Self> {
        let c = match space {
            Space::E => c.to_vec(),
            Space::F => vec![0.0; layout.dim],
        };
        let plus = CylinderMap::from_fn(layout.plus_grid(), layout.dim, Asymptote::Constant(c.clone()), f_plus)?;
        let minus = CylinderMap::from_fn(layout.minus_grid(), layout.dim, Asymptote::Constant(c), f_minus)?;
        Self::new(plus, minus, space)
    }

    pub fn zeros(layout: &PairLayout, space: Space) -> Self {
        let zero = vec![0.0; layout.dim];
        Self::constant(layout, space, &zero)
    }

    /// The constant pair `(c, c)` (F-pairs must have `c = 0`).
    pub fn constant(layout: &PairLayout, space: Space, c: &[f64]) -> Self {
        let cv = c.to_vec();
        Self::from_fns(
            layout,
            space,
            c,
            |_, _, o| o.copy_from_slice(&cv),
            |_, _, o| o.copy_from_slice(&cv),
        )
        .expect("constant pair is valid")
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn constant_value(&self) -> &[f64] {
        self.plus.constant().expect("validated")
    }

    pub fn layout(&self) -> PairLayout {
        let g = self.plus.grid();
        PairLayout {
            s_max: g.s_max,
            n_s: g.n_s,
            n_t: g.n_t,
            dim: self.plus.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.plus.dim()
    }

    pub(crate) fn from_samples(
        layout: &PairLayout,
        plus: Samples,
        minus: Samples,
        c: Vec<f64>,
        space: Space,
    ) -> Self {
        Self {
            plus: CylinderMap::from_samples(layout.plus_grid(), plus, Asymptote::Constant(c.clone())),
            minus: CylinderMap::from_samples(layout.minus_grid(), minus, Asymptote::Constant(c)),
            space,
        }
    }

    /// Largest nodal difference (values and constants).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let v = math::max_abs_diff(self.plus.values(), other.plus.values())
            .max(math::max_abs_diff(self.minus.values(), other.minus.values()));
        v.max(math::max_abs_diff(self.constant_value(), other.constant_value()))
    }

    /// Largest absolute nodal value.
    pub fn max_abs(&self) -> f64 {
        math::max_abs(self.plus.values())
            .max(math::max_abs(self.minus.values()))
            .max(math::max_abs(self.constant_value()))
    }

    /// `self + alpha * other`; the space is E unless both are F.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        let layout = self.layout();
        let c: Vec<f64> = self
            .constant_value()
            .iter()
            .zip(other.constant_value())
            .map(|(x, y)| x + alpha * y)
            .collect();
        let space = if self.space == Space::F && other.space == Space::F {
            Space::F
        } else {
            Space::E
        };
        Self::from_samples(
            &layout,
            self.plus.samples().add_scaled(alpha, other.plus.samples()),
            self.minus.samples().add_scaled(alpha, other.minus.samples()),
            c,
            space,
        )
    }

    /// `(d_s u+, d_s u-)` as an F-pair.
    pub fn d_s(&self) -> Self {
        let layout = self.layout();
        Self::from_samples(
            &layout,
            self.plus.samples().d_s(),
            self.minus.samples().d_s(),
            vec![0.0; layout.dim],
            Space::F,
        )
    }

    /// `(d_t u+, d_t u-)` as an F-pair.
    pub fn d_t(&self) -> Self {
        let layout = self.layout();
        Self::from_samples(
            &layout,
            self.plus.samples().d_t(),
            self.minus.samples().d_t(),
            vec![0.0; layout.dim],
            Space::F,
        )
    }

    /// Reinterprets a pair with zero constants as an F-pair.
    pub fn into_fiber(self) -> Result<Self> {
        let (p, m) = (self.plus, self.minus);
        Self::new(p, m, Space::F)
    }
}

/// `E_m` norm `(|c|^2 + |r+|^2 + |r-|^2)^{1/2}` with `m + 3` derivatives and
/// weight `delta_m`, or the `F_m` norm (`m + 2` derivatives, no constant) for
/// F-pairs.
pub fn pair_norm(h: &MapPair, m: usize, scale: &ScScale) -> Result<f64> {
    let delta = scale.delta(m)?;
    let (order, c2) = match h.space() {
        Space::E => (ScScale::base_order(m), h.constant_value().iter().map(|x| x * x).sum()),
        Space::F => (ScScale::fiber_order(m), 0.0),
    };
    let p = weighted_norm(&h.plus, order, delta)?;
    let q = weighted_norm(&h.minus, order, delta)?;
    Ok(math::sqrt(c2 + p * p + q * q))
}

/// `E_m` norm of a pair regardless of its tag.
pub fn pair_norm_e(h: &MapPair, m: usize, scale: &ScScale) -> Result<f64> {
    let delta = scale.delta(m)?;
    let order = ScScale::base_order(m);
    let c2: f64 = h.constant_value().iter().map(|x| x * x).sum();
    let p = weighted_norm(&h.plus, order, delta)?;
    let q = weighted_norm(&h.minus, order, delta)?;
    Ok(math::sqrt(c2 + p * p + q * q))
}
