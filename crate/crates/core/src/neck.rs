//! Maps on the finite neck `Z_a = [0, R] x S^1` and the infinite cylinder
//! `C_a = R x S^1`.
//!
//! Neck lengths produced by the exponential profile are astronomically
//! large, so a neck is sampled on one or more *windows*, each anchored at
//! `s = 0`, `s = R/2` or `s = R` and described by offsets from its anchor.
//! Between windows the map is a stored constant; beyond the outermost
//! windows of `C_a` it equals its antipodal asymptotic values `-c` (left) and
//! `+c` (right). Positions are kept symbolically as (anchor, offset), so
//! shifts by `R` are exact even when `R` is not representable.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::cylinder::{CylinderMap, Grid, PairLayout, Samples};
use crate::math;
use crate::profile::GluingParameter;
use crate::splice::Cutoff;
use crate::trig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// `s = 0`
    Start,
    /// `s = R/2`
    Middle,
    /// `s = R`
    End,
}

/// A point `s = anchor + offset` on a neck of length `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeckPos {
    pub anchor: Anchor,
    pub offset: f64,
}

impl NeckPos {
    pub fn new(anchor: Anchor, offset: f64) -> Self {
        Self { anchor, offset }
    }

    /// `s` in the `[s, t]` chart (inexact or infinite for huge `R`).
    pub fn s(&self, len: f64) -> f64 {
        match self.anchor {
            Anchor::Start => self.offset,
            Anchor::Middle => 0.5 * len + self.offset,
            Anchor::End => len + self.offset,
        }
    }

    /// `s - R/2`, the argument of the shifted cut-off.
    pub fn sigma(&self, len: f64) -> f64 {
        match self.anchor {
            Anchor::Start => self.offset - 0.5 * len,
            Anchor::Middle => self.offset,
            Anchor::End => 0.5 * len + self.offset,
        }
    }

    /// `s' = s - R` in the primed chart.
    pub fn primed(&self, len: f64) -> f64 {
        match self.anchor {
            Anchor::Start => self.offset - len,
            Anchor::Middle => self.offset - 0.5 * len,
            Anchor::End => self.offset,
        }
    }

    /// Offset of the same point relative to another anchor.
    pub fn offset_in(&self, target: Anchor, len: f64) -> f64 {
        if self.anchor == target {
            return self.offset;
        }
        let base = |a: Anchor| match a {
            Anchor::Start => 0.0,
            Anchor::Middle => 0.5,
            Anchor::End => 1.0,
        };
        self.offset + (base(self.anchor) - base(target)) * len
    }

    /// `min(s, R - s)` (distance to the nearer neck end).
    fn to_ends(&self, len: f64) -> f64 {
        match self.anchor {
            Anchor::Start => self.offset.min(len - self.offset),
            Anchor::Middle => 0.5 * len - self.offset.abs(),
            Anchor::End => (len + self.offset).min(-self.offset),
        }
    }

    /// `max(s, R - s)`.
    fn to_far_end(&self, len: f64) -> f64 {
        match self.anchor {
            Anchor::Start => self.offset.max(len - self.offset),
            Anchor::Middle => 0.5 * len + self.offset.abs(),
            Anchor::End => (len + self.offset).max(-self.offset),
        }
    }
}

/// Uniform run of nodes `anchor + origin + i ds`, `i < n_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub anchor: Anchor,
    pub origin: f64,
    pub n_s: usize,
    pub ds: f64,
}

impl Window {
    pub fn pos(&self, i: usize) -> NeckPos {
        NeckPos::new(self.anchor, self.origin + i as f64 * self.ds)
    }

    pub fn end(&self) -> f64 {
        self.origin + (self.n_s - 1) as f64 * self.ds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeckKind {
    /// `Z_a = [0, R] x S^1`.
    Finite,
    /// `C_a = R x S^1`, truncated, with antipodal constants.
    Infinite,
}

/// Sampling pattern of a neck.
#[derive(Debug, Clone, PartialEq)]
pub struct NeckAxis {
    pub kind: NeckKind,
    pub length: f64,
    pub twist: f64,
    pub n_t: usize,
    pub windows: Vec<Window>,
}

fn on_lattice(x: f64, step: f64) -> bool {
    let q = x / step;
    (q - math::round(q)).abs() <= trig::NODE_TOL
}

impl NeckAxis {
    /// A single uniform window on `[s_min, s_max]` (anchored at `s = 0`).
    pub fn uniform(kind: NeckKind, length: f64, twist: f64, grid: &Grid) -> Self {
        Self {
            kind,
            length,
            twist,
            n_t: grid.n_t,
            windows: vec![Window {
                anchor: Anchor::Start,
                origin: grid.s_min,
                n_s: grid.n_s,
                ds: grid.ds(),
            }],
        }
    }

    /// Axes for `Z_a` and `C_a` matched to a pair layout.
    ///
    /// When `R/2 + 1 <= s_max` both necks are single uniform windows: `Z_a`
    /// on `[0, R]` and `C_a` on `[R - s_max, s_max]`. When `R` is far beyond
    /// the pair grid, the necks are split into anchored windows around
    /// `0`, `R/2` and `R`.
    pub fn for_pair(length: f64, twist: f64, layout: &PairLayout) -> Result<(Self, Self)> {
        let ds = layout.ds();
        let n_t = layout.n_t;
        // lengths that reach the lattice only up to roundoff are snapped onto it
        let length = if length.is_finite() && on_lattice(0.5 * length, ds) {
            2.0 * ds * math::round(0.5 * length / ds)
        } else {
            length
        };
        let pad = math::ceil(1.0 / ds - 1e-9) as usize;
        let half_mid = math::ceil(2.0 / ds - 1e-9) as usize;
        let reach = layout.s_max + pad as f64 * ds;
        let mid = half_mid as f64 * ds;
        if 0.5 * length - mid > reach + 2.0 * ds {
            let start = Window {
                anchor: Anchor::Start,
                origin: 0.0,
                n_s: layout.n_s + pad,
                ds,
            };
            let middle = Window {
                anchor: Anchor::Middle,
                origin: -mid,
                n_s: 2 * half_mid + 1,
                ds,
            };
            let end = Window {
                anchor: Anchor::End,
                origin: -reach,
                n_s: layout.n_s + pad,
                ds,
            };
            let z = Self {
                kind: NeckKind::Finite,
                length,
                twist,
                n_t,
                windows: vec![start, middle, end],
            };
            let c = Self {
                kind: NeckKind::Infinite,
                length,
                twist,
                n_t,
                windows: vec![middle],
            };
            return Ok((z, c));
        }
        if 0.5 * length + 1.0 > layout.s_max + 1e-12 {
            return Err(Error::Incompatible(format!(
                "pair grid reaches s = {} but a neck of length {length} needs at least {} \
                 (or a neck longer than {})",
                layout.s_max,
                0.5 * length + 1.0,
                2.0 * (reach + mid + 2.0 * ds)
            )));
        }
        let exact = on_lattice(0.5 * length, ds);
        let z_cells = if exact {
            math::round(length / ds) as usize
        } else {
            2 * math::ceil(0.5 * length / ds) as usize
        };
        let c_len = 2.0 * layout.s_max - length;
        let c_cells = if exact {
            math::round(c_len / ds) as usize
        } else {
            (math::ceil(c_len / ds) as usize).max(4)
        };
        let z = Window {
            anchor: Anchor::Start,
            origin: 0.0,
            n_s: z_cells + 1,
            ds: if exact { ds } else { length / z_cells as f64 },
        };
        let c = Window {
            anchor: Anchor::Start,
            origin: length - layout.s_max,
            n_s: c_cells + 1,
            ds: if exact { ds } else { c_len / c_cells as f64 },
        };
        Ok((
            Self {
                kind: NeckKind::Finite,
                length,
                twist,
                n_t,
                windows: vec![z],
            },
            Self {
                kind: NeckKind::Infinite,
                length,
                twist,
                n_t,
                windows: vec![c],
            },
        ))
    }

    pub fn is_split(&self) -> bool {
        self.windows.iter().any(|w| w.anchor != Anchor::Start)
    }

    /// Number of constant gaps between consecutive windows.
    pub fn gap_count(&self) -> usize {
        match self.kind {
            NeckKind::Finite => self.windows.len() - 1,
            NeckKind::Infinite => 0,
        }
    }

    /// A point inside gap `g` (just before window `g + 1`).
    pub fn gap_point(&self, g: usize) -> NeckPos {
        let w = &self.windows[g + 1];
        NeckPos::new(w.anchor, w.origin - w.ds)
    }

    /// Points just outside the truncation of `C_a` (left, right).
    pub fn outer_points(&self) -> (NeckPos, NeckPos) {
        let first = &self.windows[0];
        let last = &self.windows[self.windows.len() - 1];
        (
            NeckPos::new(first.anchor, first.origin - first.ds),
            NeckPos::new(last.anchor, last.end() + last.ds),
        )
    }

    /// Same axis shifted by half a cell with one node less per window: the
    /// cell midpoints.
    pub fn staggered(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.windows {
            w.origin += 0.5 * w.ds;
            w.n_s -= 1;
        }
        out
    }

    fn locate(&self, pos: &NeckPos) -> Location {
        for (k, w) in self.windows.iter().enumerate() {
            let x = pos.offset_in(w.anchor, self.length);
            let idx = (x - w.origin) / w.ds;
            if idx >= -trig::NODE_TOL && idx <= (w.n_s - 1) as f64 + trig::NODE_TOL {
                return Location::Window(k, idx);
            }
        }
        // windows are stored in increasing s
        let before = |k: usize| {
            let w = &self.windows[k];
            pos.offset_in(w.anchor, self.length) < w.origin
        };
        let first_after = (0..self.windows.len()).find(|&k| before(k));
        match first_after {
            Some(0) => Location::Left,
            Some(k) => Location::Gap(k - 1),
            None => Location::Right,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, NeckPos)> + '_ {
        self.windows
            .iter()
            .enumerate()
            .flat_map(|(k, w)| (0..w.n_s).map(move |i| (k, i, w.pos(i))))
    }
}

enum Location {
    Window(usize, f64),
    Gap(usize),
    Left,
    Right,
}

/// A map sampled on a [`NeckAxis`].
#[derive(Debug, Clone, PartialEq)]
pub struct NeckMap {
    axis: NeckAxis,
    dim: usize,
    windows: Vec<Samples>,
    gaps: Vec<Vec<f64>>,
    /// `C_a` only: the value at `+inf` (the value at `-inf` is its negative).
    asympt: Vec<f64>,
}

impl NeckMap {
    pub fn zeros(axis: &NeckAxis, dim: usize) -> Self {
        Self {
            windows: axis
                .windows
                .iter()
                .map(|w| Samples::zeros(w.n_s, axis.n_t, dim, w.ds))
                .collect(),
            gaps: vec![vec![0.0; dim]; axis.gap_count()],
            asympt: vec![0.0; dim],
            axis: axis.clone(),
            dim,
        }
    }

    /// Builds a map from node values `f(pos, j, out)`, gap values and (for
    /// `C_a`) the asymptotic constant.
    pub fn from_parts(
        axis: &NeckAxis,
        dim: usize,
        windows: Vec<Samples>,
        gaps: Vec<Vec<f64>>,
        asympt: Vec<f64>,
    ) -> Result<Self> {
        if windows.len() != axis.windows.len()
            || windows
                .iter()
                .zip(&axis.windows)
                .any(|(s, w)| s.n_s != w.n_s || s.n_t != axis.n_t || s.dim != dim)
            || gaps.len() != axis.gap_count()
            || gaps.iter().any(|g| g.len() != dim)
            || asympt.len() != dim
        {
            return Err(Error::Incompatible("neck data does not match its axis".to_string()));
        }
        if axis.kind == NeckKind::Finite && asympt.iter().any(|&x| x != 0.0) {
            return Err(Error::Asymptotics("finite necks carry no asymptote".to_string()));
        }
        Ok(Self {
            axis: axis.clone(),
            dim,
            windows,
            gaps,
            asympt,
        })
    }

    /// Samples `f(s, t, out)` on a single-window neck (finite `R`).
    pub fn from_fn(
        axis: &NeckAxis,
        dim: usize,
        asympt: Vec<f64>,
        mut f: impl FnMut(f64, f64, &mut [f64]),
    ) -> Result<Self> {
        if axis.is_split() || !axis.length.is_finite() {
            return Err(Error::Incompatible(
                "closed-form sampling needs a uniform neck".to_string(),
            ));
        }
        let mut m = Self::zeros(axis, dim);
        for (k, i, pos) in axis.nodes() {
            let s = pos.s(axis.length);
            let row = m.windows[k].row_mut(i);
            for j in 0..axis.n_t {
                f(s, j as f64 / axis.n_t as f64, &mut row[j * dim..(j + 1) * dim]);
            }
        }
        m.asympt = asympt;
        Self::from_parts(axis, dim, m.windows, m.gaps, m.asympt)
    }

    pub fn axis(&self) -> &NeckAxis {
        &self.axis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn windows(&self) -> &[Samples] {
        &self.windows
    }

    pub fn gaps(&self) -> &[Vec<f64>] {
        &self.gaps
    }

    /// Value at `+inf` for `C_a` maps (zero for `Z_a`).
    pub fn asympt(&self) -> &[f64] {
        &self.asympt
    }

    pub fn length(&self) -> f64 {
        self.axis.length
    }

    /// The `t`-row at a neck position.
    pub fn row_at(&self, pos: &NeckPos, out: &mut [f64]) -> Result<()> {
        let fill = |out: &mut [f64], v: &[f64], f: f64| {
            for (k, o) in out.iter_mut().enumerate() {
                *o = f * v[k % self.dim];
            }
        };
        match self.axis.locate(pos) {
            Location::Window(k, idx) => self.windows[k].row_at_index(idx, out),
            Location::Gap(g) if self.axis.kind == NeckKind::Finite => {
                fill(out, &self.gaps[g], 1.0);
                Ok(())
            }
            Location::Left if self.axis.kind == NeckKind::Infinite => {
                fill(out, &self.asympt, -1.0);
                Ok(())
            }
            Location::Right if self.axis.kind == NeckKind::Infinite => {
                fill(out, &self.asympt, 1.0);
                Ok(())
            }
            _ => Err(Error::OutOfRange(pos.s(self.axis.length))),
        }
    }

    /// Value at `(pos, t)`.
    pub fn evaluate_at(&self, pos: &NeckPos, t: f64) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.axis.n_t * self.dim];
        self.row_at(pos, &mut row)?;
        let mut out = vec![0.0; self.dim];
        trig::eval_row(&row, self.axis.n_t, self.dim, t, &mut out);
        Ok(out)
    }

    /// Value at `[s, t]` (uses the `s = 0` anchor).
    pub fn evaluate(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        self.evaluate_at(&NeckPos::new(Anchor::Start, s), t)
    }

    /// `[u]` at a position: the circle mean of the row there.
    pub fn circle_mean_at(&self, pos: &NeckPos) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.axis.n_t * self.dim];
        self.row_at(pos, &mut row)?;
        Ok(trig::row_mean(&row, self.axis.n_t, self.dim))
    }

    /// The mean `[u]_a` over the middle circle `s = R/2`.
    pub fn middle_mean(&self) -> Result<Vec<f64>> {
        self.circle_mean_at(&NeckPos::new(Anchor::Middle, 0.0))
    }

    fn derived(&self, windows: Vec<Samples>) -> Self {
        Self {
            axis: self.axis.clone(),
            dim: self.dim,
            windows,
            gaps: vec![vec![0.0; self.dim]; self.gaps.len()],
            asympt: vec![0.0; self.dim],
        }
    }

    pub fn d_s(&self) -> Self {
        self.derived(self.windows.iter().map(Samples::d_s).collect())
    }

    pub fn d_t(&self) -> Self {
        self.derived(self.windows.iter().map(Samples::d_t).collect())
    }

    /// Node-wise map `f(pos, j, value, out)` keeping gaps/asymptote supplied
    /// by the caller.
    pub fn map_nodes(
        &self,
        gaps: Vec<Vec<f64>>,
        asympt: Vec<f64>,
        mut f: impl FnMut(&NeckPos, usize, &[f64], &mut [f64]),
    ) -> Self {
        let dim = self.dim;
        let windows = self
            .windows
            .iter()
            .zip(&self.axis.windows)
            .map(|(s, w)| {
                s.map_rows(|i, row, out| {
                    let pos = w.pos(i);
                    for j in 0..self.axis.n_t {
                        f(&pos, j, &row[j * dim..(j + 1) * dim], &mut out[j * dim..(j + 1) * dim]);
                    }
                })
            })
            .collect();
        Self {
            axis: self.axis.clone(),
            dim,
            windows,
            gaps,
            asympt,
        }
    }

    /// `self + alpha * other` on the same axis.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Result<Self> {
        if self.axis != other.axis || self.dim != other.dim {
            return Err(Error::Incompatible("neck maps live on different axes".to_string()));
        }
        let comb = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + alpha * y).collect() };
        Ok(Self {
            axis: self.axis.clone(),
            dim: self.dim,
            windows: self
                .windows
                .iter()
                .zip(&other.windows)
                .map(|(a, b)| a.add_scaled(alpha, b))
                .collect(),
            gaps: self.gaps.iter().zip(&other.gaps).map(|(a, b)| comb(a, b)).collect(),
            asympt: comb(&self.asympt, &other.asympt),
        })
    }

    /// Largest difference over nodes, gaps and asymptotes.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let w = self
            .windows
            .iter()
            .zip(&other.windows)
            .map(|(a, b)| math::max_abs_diff(&a.data, &b.data))
            .fold(0.0, f64::max);
        let g = self
            .gaps
            .iter()
            .zip(&other.gaps)
            .map(|(a, b)| math::max_abs_diff(a, b))
            .fold(0.0, f64::max);
        w.max(g).max(math::max_abs_diff(&self.asympt, &other.asympt))
    }

    pub fn max_abs(&self) -> f64 {
        let w = self.windows.iter().map(|s| math::max_abs(&s.data)).fold(0.0, f64::max);
        let g = self.gaps.iter().map(|v| math::max_abs(v)).fold(0.0, f64::max);
        w.max(g).max(math::max_abs(&self.asympt))
    }

    /// The same samples as a [`CylinderMap`] (single-window necks only).
    pub fn to_cylinder_map(&self) -> Result<CylinderMap> {
        if self.axis.is_split() {
            return Err(Error::Incompatible("split necks have no single grid".to_string()));
        }
        let w = &self.axis.windows[0];
        let grid = Grid::new(w.origin, w.end(), w.n_s, self.axis.n_t)?;
        let asympt = match self.axis.kind {
            NeckKind::Finite => crate::cylinder::Asymptote::None,
            NeckKind::Infinite => crate::cylinder::Asymptote::Antipodal(self.asympt.clone()),
        };
        CylinderMap::new(grid, self.dim, self.windows[0].data.clone(), asympt)
    }

    /// Weighted squared norm with `log_weight(pos)` and `order` derivatives.
    /// Gaps contribute only to the zeroth-order term; `C_a` maps are measured
    /// after subtracting `(1 - 2 beta_a) c`.
    pub fn weighted_sq(&self, order: usize, weight: NeckWeight, delta: f64) -> Result<f64> {
        let len = self.axis.length;
        let lw = |pos: &NeckPos| weight.log_weight(pos, delta, len);
        let rem = self.remainder();
        let mut total = 0.0;
        for (s, w) in rem.windows.iter().zip(&self.axis.windows) {
            total += s.weighted_sq(order, &|i| lw(&w.pos(i)))?;
        }
        for (g, f) in rem.gaps.iter().enumerate() {
            let sq: f64 = f.iter().map(|x| x * x).sum();
            if sq == 0.0 {
                continue;
            }
            let a = &self.axis.windows[g];
            let b = &self.axis.windows[g + 1];
            let p0 = NeckPos::new(a.anchor, a.end());
            let p1 = NeckPos::new(b.anchor, b.origin);
            let glen = p1.offset_in(a.anchor, len) - a.end();
            total += sq * exp_integral(lw(&p0), lw(&p1), glen);
        }
        Ok(total)
    }

    /// `u - (1 - 2 beta_a) c` for `C_a` maps; unchanged for `Z_a`.
    pub fn remainder(&self) -> Self {
        if self.axis.kind == NeckKind::Finite || self.asympt.iter().all(|&x| x == 0.0) {
            return self.clone();
        }
        let c = self.asympt.clone();
        let len = self.axis.length;
        let dim = self.dim;
        let mut out = self.map_nodes(self.gaps.clone(), vec![0.0; dim], |pos, _, v, o| {
            let f = 1.0 - 2.0 * Cutoff.beta(pos.sigma(len));
            for k in 0..dim {
                o[k] = v[k] - f * c[k];
            }
        });
        out.asympt = vec![0.0; dim];
        out
    }
}

/// `int_0^len e^{L(x)} dx` for `L` linear from `l0` to `l1`.
fn exp_integral(l0: f64, l1: f64, len: f64) -> f64 {
    if !(len.is_finite() && l0.is_finite() && l1.is_finite()) {
        return f64::INFINITY;
    }
    let (lo, hi) = if l0 < l1 { (l0, l1) } else { (l1, l0) };
    let d = hi - lo;
    if d < 1e-12 {
        return len * math::exp(hi);
    }
    math::exp(hi) * len * (-math::expm1(-d)) / d
}

/// Exponential weights used on necks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeckWeight {
    /// `e^{2 delta |s - R/2|}` (use a negative `delta` for decaying weights).
    Center,
    /// `e^{delta R} e^{-2 delta |s - R/2|} = e^{2 delta min(s, R - s)}`.
    Ends,
    /// `e^{delta R} e^{2 delta |s - R/2|} = e^{2 delta max(s, R - s)}`.
    FarEnd,
}

impl NeckWeight {
    fn log_weight(self, pos: &NeckPos, delta: f64, len: f64) -> f64 {
        let x = match self {
            NeckWeight::Center => pos.sigma(len).abs(),
            NeckWeight::Ends => pos.to_ends(len),
            NeckWeight::FarEnd => pos.to_far_end(len),
        };
        2.0 * delta * x
    }
}

/// `(delta R)`-scaled neck norm variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeckNormMode {
    /// `G^a_m`: mean value plus weighted remainders.
    G,
    /// `\hat G^a_m`: both pieces weighted, no mean term.
    Hat,
}

/// Norm of `(q, p)` with `q` on `Z_a` and `p` on `C_a`, `order` derivatives
/// and weight `delta`.
pub fn neck_norm(q: &NeckMap, p: &NeckMap, order: usize, delta: f64, mode: NeckNormMode) -> Result<f64> {
    if q.axis.kind != NeckKind::Finite || p.axis.kind != NeckKind::Infinite {
        return Err(Error::Incompatible("expected a Z_a map and a C_a map".to_string()));
    }
    if q.axis.length != p.axis.length || q.axis.twist != p.axis.twist || q.dim != p.dim {
        return Err(Error::Incompatible("maps belong to different gluing parameters".to_string()));
    }
    match mode {
        NeckNormMode::Hat => {
            let a = q.weighted_sq(order, NeckWeight::Ends, delta)?;
            let b = hat_part(p)?.weighted_sq(order, NeckWeight::FarEnd, delta)?;
            Ok(math::sqrt(a + b))
        }
        NeckNormMode::G => {
            let mean = q.middle_mean()?;
            let p_inf = p.asympt().to_vec();
            let shift: Vec<f64> = mean.iter().zip(&p_inf).map(|(m, c)| c - m).collect();
            let diff2: f64 = shift.iter().map(|x| x * x).sum();
            // q - [q] + p_inf
            let q_shifted = q.map_nodes(
                q.gaps.iter().map(|g| g.iter().zip(&shift).map(|(x, y)| x + y).collect()).collect(),
                vec![0.0; q.dim],
                |_, _, v, o| {
                    for k in 0..v.len() {
                        o[k] = v[k] + shift[k];
                    }
                },
            );
            let a = q_shifted.weighted_sq(order, NeckWeight::Ends, delta)?;
            let b = p.weighted_sq(order, NeckWeight::FarEnd, delta)?;
            Ok(math::sqrt(diff2 + a + b))
        }
    }
}

fn hat_part(p: &NeckMap) -> Result<NeckMap> {
    // the hat norm measures p itself; antipodal constants are not allowed to
    // escape to infinity under the growing weight
    if p.asympt().iter().any(|&x| x != 0.0) {
        return Err(Error::Asymptotics(
            "hat norm needs a C_a map with zero asymptotic constants".to_string(),
        ));
    }
    Ok(p.clone())
}

/// A point of `Z_a` in both charts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedPoint {
    /// `(s, t)` in the chart at `x`.
    pub near: (f64, f64),
    /// `(s', t') = (s - R, t - theta)` in the chart at `y`.
    pub far: (f64, f64),
    /// True when `h <= s <= R - h`.
    pub interior: bool,
}

/// Writes `[s, t]` in both charts.
pub fn lift_point(a: &GluingParameter, s: f64, t: f64, margin: f64) -> Result<LiftedPoint> {
    let len = a
        .length()
        .ok_or_else(|| Error::InvalidParameter("a = 0 has no neck".to_string()))?;
    if !(s >= 0.0 && s <= len) {
        return Err(Error::OutOfRange(s));
    }
    let t = math::wrap_unit(t);
    Ok(LiftedPoint {
        near: (s, t),
        far: (s - len, math::wrap_unit(t - a.twist())),
        interior: s >= margin && s <= len - margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::GluingProfile;

    fn layout() -> PairLayout {
        PairLayout::new(4.0, 33, 8, 1).unwrap()
    }

    #[test]
    fn uniform_axes_tile_the_pair_lattice() {
        let (z, c) = NeckAxis::for_pair(4.75, 0.25, &layout()).unwrap();
        assert!(!z.is_split());
        assert_eq!(z.windows[0].n_s, 39);
        assert_eq!(z.windows[0].ds, 0.125);
        assert_eq!(c.windows[0].origin, 0.75);
        assert_eq!(c.windows[0].n_s, 27);
        // node counts match the pair: 2 * 33 = 39 + 27
        assert_eq!(z.windows[0].n_s + c.windows[0].n_s, 2 * 33);
    }

    #[test]
    fn long_necks_split() {
        let (z, c) = NeckAxis::for_pair(1e30, 0.0, &layout()).unwrap();
        assert!(z.is_split());
        assert_eq!(z.windows.len(), 3);
        assert_eq!(c.windows.len(), 1);
        assert!(NeckAxis::for_pair(9.0, 0.0, &layout()).is_err());
        let (z, _) = NeckAxis::for_pair(f64::INFINITY, 0.0, &layout()).unwrap();
        let m = NeckMap::zeros(&z, 1);
        assert_eq!(m.middle_mean().unwrap(), vec![0.0]);
    }

    #[test]
    fn gap_location() {
        let (z, _) = NeckAxis::for_pair(1000.0, 0.0, &layout()).unwrap();
        let mut m = NeckMap::zeros(&z, 1);
        m.gaps[0] = vec![2.0];
        m.gaps[1] = vec![-3.0];
        assert_eq!(m.evaluate(100.0, 0.3).unwrap(), vec![2.0]);
        assert_eq!(m.evaluate(900.0, 0.3).unwrap(), vec![-3.0]);
        assert_eq!(m.evaluate(2.0, 0.0).unwrap(), vec![0.0]);
        assert!(m.evaluate(1001.0, 0.0).is_err());
        assert_eq!(m.evaluate_at(&NeckPos::new(Anchor::End, -500.0 + 0.5), 0.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn lift_examples() {
        let a = GluingParameter::from_length(GluingProfile::Exponential, 6.0, 0.25).unwrap();
        let r = a.length().unwrap();
        let p = lift_point(&a, r, 0.5, 1.0).unwrap();
        assert_eq!(p.near, (r, 0.5));
        assert_eq!(p.far, (0.0, 0.25));
        assert!(!p.interior);
        let p = lift_point(&a, 0.0, 0.1, 1.0).unwrap();
        assert_eq!(p.far.0, -r);
        let p = lift_point(&a, 0.5 * r, 0.0, 1.0).unwrap();
        assert_eq!(p.far, (-0.5 * r, 0.75));
        assert!(p.interior);
        assert!(lift_point(&a, r + 0.1, 0.0, 1.0).is_err());
        assert!(lift_point(&GluingParameter::zero(GluingProfile::Exponential), 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn constant_q_has_norm_kappa() {
        let (z, c) = NeckAxis::for_pair(4.75, 0.0, &layout()).unwrap();
        let q = NeckMap::from_fn(&z, 1, vec![0.0], |_, _, o| o[0] = 1.7).unwrap();
        let p = NeckMap::zeros(&c, 1);
        let g = neck_norm(&q, &p, 2, 3.0, NeckNormMode::G).unwrap();
        assert!((g - 1.7).abs() < 1e-14);
        let zero = neck_norm(&NeckMap::zeros(&z, 1), &p, 2, 3.0, NeckNormMode::Hat).unwrap();
        assert_eq!(zero, 0.0);
    }
}
