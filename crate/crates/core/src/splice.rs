//! Gluing and anti-gluing of map pairs across a neck, the total gluing
//! isomorphism with its explicit inverse, splicing projections and the
//! transfer operators.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::cylinder::{pair_norm_e, MapPair, PairLayout, Samples, Space};
use crate::math;
use crate::neck::{Anchor, NeckAxis, NeckKind, NeckMap, NeckPos};
use crate::profile::{GluingParameter, GluingProfile, ScScale};
use crate::trig;
use crate::{Error, Result};

/// The smooth cut-off `beta(s) = psi(1 - s) / (psi(1 - s) + psi(1 + s))`
/// with `psi(x) = e^{-1/x}` for `x > 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Cutoff;

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        math::exp(-1.0 / x)
    } else {
        0.0
    }
}

impl Cutoff {
    pub fn beta(&self, s: f64) -> f64 {
        if s <= -1.0 {
            return 1.0;
        }
        if s >= 1.0 {
            return 0.0;
        }
        let (p, q) = (psi(1.0 - s), psi(1.0 + s));
        p / (p + q)
    }

    pub fn dbeta(&self, s: f64) -> f64 {
        if s <= -1.0 || s >= 1.0 {
            return 0.0;
        }
        let (p, q) = (psi(1.0 - s), psi(1.0 + s));
        if p == 0.0 || q == 0.0 {
            return 0.0;
        }
        let sum = p + q;
        let a = 1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / ((1.0 + s) * (1.0 + s));
        -(p / sum) * (q / sum) * a
    }

    /// `beta^2 + (1 - beta)^2`.
    pub fn gamma(&self, s: f64) -> f64 {
        let b = self.beta(s);
        b * b + (1.0 - b) * (1.0 - b)
    }
}

/// Result of a plus-type gluing: the pair itself at `a = 0`, a `Z_a` map
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Glued {
    Pair(MapPair),
    Neck(NeckMap),
}

impl Glued {
    pub fn neck(&self) -> Option<&NeckMap> {
        match self {
            Glued::Neck(n) => Some(n),
            Glued::Pair(_) => None,
        }
    }
}

/// Result of a minus-type gluing: zero at `a = 0`, a `C_a` map otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum AntiGlued {
    Zero,
    Neck(NeckMap),
}

impl AntiGlued {
    pub fn neck(&self) -> Option<&NeckMap> {
        match self {
            AntiGlued::Neck(n) => Some(n),
            AntiGlued::Zero => None,
        }
    }
}

/// A gluing parameter together with the pair layout it acts on and the
/// sampling of its necks.
#[derive(Debug, Clone, PartialEq)]
pub struct SpliceContext {
    a: GluingParameter,
    layout: PairLayout,
    necks: Option<(NeckAxis, NeckAxis)>,
}

impl SpliceContext {
    /// Requires `|a| <= 1/2` and, for `a != 0`, a neck length `R >= 2` so the
    /// cut-off transition fits inside the neck.
    pub fn new(a: GluingParameter, layout: PairLayout) -> Result<Self> {
        let r = a.modulus_value();
        if r > 0.5 {
            return Err(Error::ParameterTooLarge(r));
        }
        let necks = match a.length() {
            None => None,
            Some(len) => {
                if !(len >= 2.0) {
                    return Err(Error::NeckTooShort(len));
                }
                Some(NeckAxis::for_pair(len, a.twist(), &layout)?)
            }
        };
        Ok(Self { a, layout, necks })
    }

    /// Context for the exponential-profile parameter with neck length `R`.
    pub fn with_length(length: f64, twist: f64, layout: PairLayout) -> Result<Self> {
        let a = GluingParameter::from_length(GluingProfile::Exponential, length, twist)?;
        Self::new(a, layout)
    }

    pub fn parameter(&self) -> &GluingParameter {
        &self.a
    }

    pub fn layout(&self) -> &PairLayout {
        &self.layout
    }

    pub fn is_degenerate(&self) -> bool {
        self.necks.is_none()
    }

    /// `R` (infinite when it overflows); `None` at `a = 0`.
    pub fn length(&self) -> Option<f64> {
        self.necks.as_ref().map(|(z, _)| z.length)
    }

    pub fn twist(&self) -> f64 {
        self.a.twist()
    }

    pub fn z_axis(&self) -> Option<&NeckAxis> {
        self.necks.as_ref().map(|(z, _)| z)
    }

    pub fn c_axis(&self) -> Option<&NeckAxis> {
        self.necks.as_ref().map(|(_, c)| c)
    }

    /// True when every shift between pair and neck nodes is node-to-node.
    pub fn is_exact(&self) -> bool {
        let Some((z, c)) = &self.necks else {
            return true;
        };
        if trig::node_shift(self.layout.n_t, self.a.twist()).is_none() {
            return false;
        }
        let ds = self.layout.ds();
        z.windows.iter().chain(&c.windows).all(|w| w.ds == ds)
            && (z.is_split() || {
                let q = 0.5 * z.length / ds;
                (q - math::round(q)).abs() <= trig::NODE_TOL
            })
    }

    fn necks(&self) -> Result<(&NeckAxis, &NeckAxis)> {
        self.necks
            .as_ref()
            .map(|(z, c)| (z, c))
            .ok_or_else(|| Error::InvalidParameter("operation needs a != 0".to_string()))
    }

    fn len(&self) -> f64 {
        self.length().unwrap_or(0.0)
    }

    /// `beta_a` at a neck position.
    pub fn beta_a(&self, pos: &NeckPos) -> f64 {
        Cutoff.beta(pos.sigma(self.len()))
    }

    /// `gamma_a` at a neck position.
    pub fn gamma_a(&self, pos: &NeckPos) -> f64 {
        Cutoff.gamma(pos.sigma(self.len()))
    }

    fn check_pair(&self, h: &MapPair) -> Result<()> {
        let l = h.layout();
        if l != self.layout {
            return Err(Error::Incompatible("pair layout differs from the context".to_string()));
        }
        Ok(())
    }

    fn check_neck(&self, m: &NeckMap, kind: NeckKind) -> Result<()> {
        let (z, c) = self.necks()?;
        let axis = if kind == NeckKind::Finite { z } else { c };
        if m.axis() != axis || m.dim() != self.layout.dim {
            return Err(Error::Incompatible(
                "neck map was not produced for this context".to_string(),
            ));
        }
        Ok(())
    }

    /// `av_a(h) = ([h+]_R + [h-]_R) / 2`, circle means at `s = +-R/2`.
    pub fn average(&self, h: &MapPair) -> Result<Vec<f64>> {
        let len = self.len();
        let dim = h.dim();
        let n_t = self.layout.n_t;
        let mut row = vec![0.0; n_t * dim];
        h.plus.row_at(0.5 * len, &mut row)?;
        let p = trig::row_mean(&row, n_t, dim);
        h.minus.row_at(-0.5 * len, &mut row)?;
        let m = trig::row_mean(&row, n_t, dim);
        Ok(p.iter().zip(&m).map(|(x, y)| 0.5 * (x + y)).collect())
    }

    /// Row of `A h+(s, t) + B h-(s - R, t - theta) + C k` at a neck position.
    fn combined_row(
        &self,
        pos: &NeckPos,
        h: &MapPair,
        (a, b, c): (f64, f64, f64),
        k: &[f64],
        buf: &mut [f64],
        out: &mut [f64],
    ) -> Result<()> {
        let len = self.len();
        let (n_t, dim) = (self.layout.n_t, self.layout.dim);
        // written as A (h+ - k) + B (h- - k) + (A + B + C) k so that
        // constant data combine without rounding
        let kk = |i: usize| if k.is_empty() { 0.0 } else { k[i % dim] };
        let total = a + b + c;
        for (i, o) in out.iter_mut().enumerate() {
            *o = if total == 0.0 { 0.0 } else { total * kk(i) };
        }
        if a != 0.0 {
            h.plus.row_at(pos.s(len), buf)?;
            for (i, o) in out.iter_mut().enumerate() {
                *o += a * (buf[i] - kk(i));
            }
        }
        if b != 0.0 {
            let mut raw = vec![0.0; n_t * dim];
            h.minus.row_at(pos.primed(len), &mut raw)?;
            trig::shift_row(&raw, n_t, dim, -self.twist(), buf);
            for (i, o) in out.iter_mut().enumerate() {
                *o += b * (buf[i] - kk(i));
            }
        }
        Ok(())
    }

    /// Samples `A(sigma) h+ + B(sigma) h-(shifted) + C(sigma) k` on a neck.
    fn combine(
        &self,
        axis: &NeckAxis,
        h: &MapPair,
        coef: &dyn Fn(f64) -> (f64, f64, f64),
        k: &[f64],
    ) -> Result<NeckMap> {
        self.check_pair(h)?;
        let len = self.len();
        let (n_t, dim) = (self.layout.n_t, self.layout.dim);
        let mut buf = vec![0.0; n_t * dim];
        let mut windows = Vec::with_capacity(axis.windows.len());
        for w in &axis.windows {
            let mut s = Samples::zeros(w.n_s, n_t, dim, w.ds);
            for i in 0..w.n_s {
                let pos = w.pos(i);
                self.combined_row(&pos, h, coef(pos.sigma(len)), k, &mut buf, s.row_mut(i))?;
            }
            windows.push(s);
        }
        let mut row = vec![0.0; n_t * dim];
        let mut point = |pos: NeckPos| -> Result<Vec<f64>> {
            self.combined_row(&pos, h, coef(pos.sigma(len)), k, &mut buf, &mut row)?;
            Ok(row[..dim].to_vec())
        };
        let mut gaps = Vec::new();
        for g in 0..axis.gap_count() {
            gaps.push(point(axis.gap_point(g))?);
        }
        let asympt = match axis.kind {
            NeckKind::Finite => vec![0.0; dim],
            NeckKind::Infinite => {
                let (left, right) = axis.outer_points();
                let r = point(right)?;
                let l = point(left)?;
                let scale = 1.0 + math::max_abs(&r);
                if r.iter().zip(&l).any(|(x, y)| (x + y).abs() > 1e-9 * scale) {
                    return Err(Error::Asymptotics(
                        "anti-glued map does not have antipodal constants".to_string(),
                    ));
                }
                r
            }
        };
        NeckMap::from_parts(axis, dim, windows, gaps, asympt)
    }

    /// `beta_a h+(s, t) + (1 - beta_a) h-(s - R, t - theta)` on `Z_a`.
    pub fn plus_glue(&self, h: &MapPair) -> Result<Glued> {
        let Some((z, _)) = &self.necks else {
            return Ok(Glued::Pair(h.clone()));
        };
        let c = Cutoff;
        self.combine(z, h, &|x| (c.beta(x), 1.0 - c.beta(x), 0.0), &[])
            .map(Glued::Neck)
    }

    /// Same formula as [`plus_glue`](Self::plus_glue) (for fiber pairs).
    pub fn hat_plus_glue(&self, xi: &MapPair) -> Result<Glued> {
        self.plus_glue(xi)
    }

    /// `-(1 - beta_a)(h+ - av) + beta_a (h-(s - R, t - theta) - av)` on
    /// `C_a`, with antipodal constants `+-(av - c)`.
    pub fn minus_glue(&self, h: &MapPair) -> Result<AntiGlued> {
        let Some((_, ca)) = &self.necks else {
            return Ok(AntiGlued::Zero);
        };
        let av = self.average(h)?;
        let c = Cutoff;
        self.combine(
            ca,
            h,
            &|x| {
                let b = c.beta(x);
                (-(1.0 - b), b, (1.0 - b) - b)
            },
            &av,
        )
        .map(AntiGlued::Neck)
    }

    /// `-(1 - beta_a) xi+ + beta_a xi-(s - R, t - theta)` on `C_a`.
    pub fn hat_minus_glue(&self, xi: &MapPair) -> Result<AntiGlued> {
        let Some((_, ca)) = &self.necks else {
            return Ok(AntiGlued::Zero);
        };
        let c = Cutoff;
        self.combine(
            ca,
            xi,
            &|x| {
                let b = c.beta(x);
                (-(1.0 - b), b, 0.0)
            },
            &[],
        )
        .map(AntiGlued::Neck)
    }

    /// `(plus_glue, minus_glue)`.
    pub fn total_glue(&self, h: &MapPair) -> Result<(Glued, AntiGlued)> {
        Ok((self.plus_glue(h)?, self.minus_glue(h)?))
    }

    /// `(hat_plus_glue, hat_minus_glue)`.
    pub fn hat_total_glue(&self, xi: &MapPair) -> Result<(Glued, AntiGlued)> {
        Ok((self.hat_plus_glue(xi)?, self.hat_minus_glue(xi)?))
    }

    /// Zero map on `Z_a` or `C_a`.
    pub fn zero_neck(&self, kind: NeckKind) -> Result<NeckMap> {
        let (z, c) = self.necks()?;
        let axis = if kind == NeckKind::Finite { z } else { c };
        Ok(NeckMap::zeros(axis, self.layout.dim))
    }

    /// Solves the per-node 2x2 systems
    /// `h+ = (beta v - (1 - beta) w') / gamma`,
    /// `h-(s - R, t - theta) = ((1 - beta) v + beta w') / gamma`
    /// with `w' = w + (2 beta - 1) offset`, arranged as `offset` plus terms
    /// in `v - offset` and `w`.
    fn unglue_rows(
        &self,
        v: &NeckMap,
        w: &NeckMap,
        offset: &[f64],
        constant: Vec<f64>,
        space: Space,
    ) -> Result<MapPair> {
        let layout = self.layout;
        let (n_t, dim) = (layout.n_t, layout.dim);
        let len = self.len();
        let pg = layout.plus_grid();
        let mg = layout.minus_grid();
        let mut vr = vec![0.0; n_t * dim];
        let mut wr = vec![0.0; n_t * dim];
        let mut tmp = vec![0.0; n_t * dim];
        let mut plus = Samples::zeros(layout.n_s, n_t, dim, pg.ds());
        let mut minus = Samples::zeros(layout.n_s, n_t, dim, mg.ds());
        let c = Cutoff;
        for i in 0..layout.n_s {
            let pos = NeckPos::new(Anchor::Start, pg.s(i));
            let b = c.beta(pos.sigma(len));
            let g = c.gamma(pos.sigma(len));
            let out = plus.row_mut(i);
            for (k, o) in out.iter_mut().enumerate() {
                *o = offset[k % dim];
            }
            if b != 0.0 {
                v.row_at(&pos, &mut vr)?;
                for (k, o) in out.iter_mut().enumerate() {
                    *o += b / g * (vr[k] - offset[k % dim]);
                }
            }
            if b != 1.0 {
                w.row_at(&pos, &mut wr)?;
                out.iter_mut().zip(&wr).for_each(|(o, x)| *o -= (1.0 - b) / g * x);
            }
        }
        for i in 0..layout.n_s {
            let pos = NeckPos::new(Anchor::End, mg.s(i));
            let b = c.beta(pos.sigma(len));
            let g = c.gamma(pos.sigma(len));
            let out = minus.row_mut(i);
            for (k, o) in out.iter_mut().enumerate() {
                *o = offset[k % dim];
            }
            if b != 1.0 {
                v.row_at(&pos, &mut tmp)?;
                trig::shift_row(&tmp, n_t, dim, self.twist(), &mut vr);
                for (k, o) in out.iter_mut().enumerate() {
                    *o += (1.0 - b) / g * (vr[k] - offset[k % dim]);
                }
            }
            if b != 0.0 {
                w.row_at(&pos, &mut tmp)?;
                trig::shift_row(&tmp, n_t, dim, self.twist(), &mut wr);
                out.iter_mut().zip(&wr).for_each(|(o, x)| *o += b / g * x);
            }
        }
        Ok(MapPair::from_samples(&layout, plus, minus, constant, space))
    }

    /// Inverse of [`total_glue`](Self::total_glue). The constants of the
    /// result are `-w(+inf) + [v]`.
    pub fn total_unglue(&self, v: &Glued, w: &AntiGlued) -> Result<MapPair> {
        match (v, w) {
            (Glued::Pair(p), AntiGlued::Zero) if self.is_degenerate() => Ok(p.clone()),
            (Glued::Neck(v), AntiGlued::Neck(w)) if !self.is_degenerate() => {
                self.check_neck(v, NeckKind::Finite)?;
                self.check_neck(w, NeckKind::Infinite)?;
                let mean = v.middle_mean()?;
                let constant: Vec<f64> = mean.iter().zip(w.asympt()).map(|(m, c)| m - c).collect();
                self.unglue_rows(v, w, &mean, constant, Space::E)
            }
            _ if self.is_degenerate() => Err(Error::DegenerateUnglue),
            _ => Err(Error::Incompatible("expected neck maps for a != 0".to_string())),
        }
    }

    /// Inverse of [`hat_total_glue`](Self::hat_total_glue); `w` must have
    /// zero asymptotic constants.
    pub fn hat_total_unglue(&self, v: &Glued, w: &AntiGlued) -> Result<MapPair> {
        match (v, w) {
            (Glued::Pair(p), AntiGlued::Zero) if self.is_degenerate() => {
                if p.constant_value().iter().any(|&x| x != 0.0) {
                    return Err(Error::Asymptotics("fiber pairs have zero constants".to_string()));
                }
                p.clone().into_fiber()
            }
            (Glued::Neck(v), AntiGlued::Neck(w)) if !self.is_degenerate() => {
                self.check_neck(v, NeckKind::Finite)?;
                self.check_neck(w, NeckKind::Infinite)?;
                if w.asympt().iter().any(|&x| x != 0.0) {
                    return Err(Error::Asymptotics(
                        "hat ungluing needs w with zero asymptotic constants".to_string(),
                    ));
                }
                let zero = vec![0.0; self.layout.dim];
                self.unglue_rows(v, w, &zero, zero.clone(), Space::F)
            }
            _ if self.is_degenerate() => Err(Error::DegenerateUnglue),
            _ => Err(Error::Incompatible("expected neck maps for a != 0".to_string())),
        }
    }

    /// Closed form of `pi_a = (ker minus_glue along ker plus_glue)`.
    pub fn project(&self, h: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(h.clone());
        }
        self.check_pair(h)?;
        let av = self.average(h)?;
        self.projection_rows(h, Some(&av))
    }

    /// Closed form of the hat projection (no average terms).
    pub fn hat_project(&self, xi: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(xi.clone());
        }
        self.check_pair(xi)?;
        self.projection_rows(xi, None)
    }

    fn projection_rows(&self, h: &MapPair, av: Option<&[f64]>) -> Result<MapPair> {
        let layout = self.layout;
        let (n_t, dim) = (layout.n_t, layout.dim);
        let len = self.len();
        let pg = layout.plus_grid();
        let mg = layout.minus_grid();
        let zero = vec![0.0; dim];
        let avv = av.unwrap_or(&zero);
        let mut plus = Samples::zeros(layout.n_s, n_t, dim, pg.ds());
        let mut minus = Samples::zeros(layout.n_s, n_t, dim, mg.ds());
        let mut raw = vec![0.0; n_t * dim];
        let mut shifted = vec![0.0; n_t * dim];
        let c = Cutoff;
        for i in 0..layout.n_s {
            let pos = NeckPos::new(Anchor::Start, pg.s(i));
            let b = c.beta(pos.sigma(len));
            let g = c.gamma(pos.sigma(len));
            let own = h.plus.samples().row(i).to_vec();
            let out = plus.row_mut(i);
            for (k, o) in out.iter_mut().enumerate() {
                *o = avv[k % dim] + b * b / g * (own[k] - avv[k % dim]);
            }
            let cross = b * (1.0 - b) / g;
            if cross != 0.0 {
                h.minus.row_at(pos.primed(len), &mut raw)?;
                trig::shift_row(&raw, n_t, dim, -self.twist(), &mut shifted);
                for (k, o) in out.iter_mut().enumerate() {
                    *o += cross * (shifted[k] - avv[k % dim]);
                }
            }
        }
        for i in 0..layout.n_s {
            let sp = mg.s(i);
            // beta_a(-s') and gamma_a(-s')
            let sig = -sp - 0.5 * len;
            let b = c.beta(sig);
            let g = c.gamma(sig);
            let own = h.minus.samples().row(i).to_vec();
            let out = minus.row_mut(i);
            for (k, o) in out.iter_mut().enumerate() {
                *o = avv[k % dim] + b * b / g * (own[k] - avv[k % dim]);
            }
            let cross = b * (1.0 - b) / g;
            if cross != 0.0 {
                let pos = NeckPos::new(Anchor::End, sp);
                h.plus.row_at(pos.s(len), &mut raw)?;
                trig::shift_row(&raw, n_t, dim, self.twist(), &mut shifted);
                for (k, o) in out.iter_mut().enumerate() {
                    *o += cross * (shifted[k] - avv[k % dim]);
                }
            }
        }
        let (constant, space) = match av {
            Some(a) => (a.to_vec(), Space::E),
            None => (zero, Space::F),
        };
        Ok(MapPair::from_samples(&layout, plus, minus, constant, space))
    }

    /// `pi_a h` computed as `total_unglue(plus_glue(h), 0)`.
    pub fn project_via_unglue(&self, h: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(h.clone());
        }
        let v = self.plus_glue(h)?;
        let w = AntiGlued::Neck(self.zero_neck(NeckKind::Infinite)?);
        self.total_unglue(&v, &w)
    }

    /// Hat projection computed as `hat_total_unglue(hat_plus_glue(xi), 0)`.
    pub fn hat_project_via_unglue(&self, xi: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(xi.clone());
        }
        let v = self.hat_plus_glue(xi)?;
        let w = AntiGlued::Neck(self.zero_neck(NeckKind::Infinite)?);
        self.hat_total_unglue(&v, &w)
    }

    /// Whether `|pi_a h - h|_{E_0} <= tol`.
    pub fn in_splicing_core(&self, h: &MapPair, tol: f64) -> Result<bool> {
        if self.is_degenerate() {
            return Ok(true);
        }
        let p = self.project(h)?;
        let d = p.add_scaled(-1.0, h);
        Ok(pair_norm_e(&d, 0, &ScScale::Default)? <= tol)
    }

    /// `d_s (plus_glue eta)` by the product rule.
    pub fn plus_glue_ds(&self, eta: &MapPair) -> Result<NeckMap> {
        let (z, _) = self.necks()?;
        let c = Cutoff;
        let smooth = self.combine(z, &eta.d_s(), &|x| (c.beta(x), 1.0 - c.beta(x), 0.0), &[])?;
        let db = self.combine(z, eta, &|x| (c.dbeta(x), -c.dbeta(x), 0.0), &[])?;
        smooth.add_scaled(1.0, &db)
    }

    /// `d_s (minus_glue eta)` by the product rule.
    pub fn minus_glue_ds(&self, eta: &MapPair) -> Result<NeckMap> {
        let (_, ca) = self.necks()?;
        let c = Cutoff;
        let av = self.average(eta)?;
        let smooth = self.combine(ca, &eta.d_s(), &|x| (-(1.0 - c.beta(x)), c.beta(x), 0.0), &[])?;
        let db = self.combine(
            ca,
            eta,
            &|x| {
                let d = c.dbeta(x);
                (d, d, -2.0 * d)
            },
            &av,
        )?;
        smooth.add_scaled(1.0, &db)
    }

    /// `D^a_s eta`: the fiber pair with `hat_plus_glue = d_s plus_glue eta`
    /// and `hat_minus_glue = 0`.
    pub fn transfer_ds(&self, eta: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(eta.d_s());
        }
        let v = Glued::Neck(self.plus_glue_ds(eta)?);
        let w = AntiGlued::Neck(self.zero_neck(NeckKind::Infinite)?);
        self.hat_total_unglue(&v, &w)
    }

    /// `D^a_t eta`.
    pub fn transfer_dt(&self, eta: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(eta.d_t());
        }
        let v = self.hat_plus_glue(&eta.d_t())?;
        let w = AntiGlued::Neck(self.zero_neck(NeckKind::Infinite)?);
        self.hat_total_unglue(&v, &w)
    }

    /// `C^a_s eta`: the fiber pair with `hat_plus_glue = 0` and
    /// `hat_minus_glue = d_s minus_glue eta`.
    pub fn transfer_cs(&self, eta: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(MapPair::zeros(&self.layout, Space::F));
        }
        let v = Glued::Neck(self.zero_neck(NeckKind::Finite)?);
        let w = AntiGlued::Neck(self.minus_glue_ds(eta)?);
        self.hat_total_unglue(&v, &w)
    }

    /// `C^a_t eta`.
    pub fn transfer_ct(&self, eta: &MapPair) -> Result<MapPair> {
        if self.is_degenerate() {
            return Ok(MapPair::zeros(&self.layout, Space::F));
        }
        let v = Glued::Neck(self.zero_neck(NeckKind::Finite)?);
        let w = self.hat_minus_glue(&eta.d_t())?;
        self.hat_total_unglue(&v, &w)
    }
}

/// Reference inverses that solve the 2x2 gluing system at every pair node
/// with a generic linear solver, independently of the closed-form inverse.
pub mod oracle {
    use super::*;
    use nalgebra::{Matrix2, Vector2};

    fn solve(b: f64, rhs: (f64, f64)) -> Result<(f64, f64)> {
        let m = Matrix2::new(b, 1.0 - b, -(1.0 - b), b);
        m.lu()
            .solve(&Vector2::new(rhs.0, rhs.1))
            .map(|x| (x[0], x[1]))
            .ok_or_else(|| Error::Singular("2x2 gluing system".to_string()))
    }

    /// Node-by-node solve of `plus_glue(h) = v`, `minus_glue(h) = w`
    /// (`hat = false`) or of the hat system (`hat = true`).
    pub fn unglue(ctx: &SpliceContext, v: &NeckMap, w: &NeckMap, hat: bool) -> Result<MapPair> {
        let layout = *ctx.layout();
        let (n_t, dim) = (layout.n_t, layout.dim);
        let len = ctx.len();
        let theta = ctx.twist();
        let av = if hat { vec![0.0; dim] } else { v.middle_mean()? };
        let c = Cutoff;
        let eval = |m: &NeckMap, pos: &NeckPos, t: f64| m.evaluate_at(pos, t);
        let mut plus = Samples::zeros(layout.n_s, n_t, dim, layout.ds());
        let mut minus = Samples::zeros(layout.n_s, n_t, dim, layout.ds());
        for (side, grid) in [(0, layout.plus_grid()), (1, layout.minus_grid())] {
            for i in 0..layout.n_s {
                for j in 0..n_t {
                    let t = grid.t(j);
                    // neck point and chart time
                    let (pos, tn) = if side == 0 {
                        (NeckPos::new(Anchor::Start, grid.s(i)), t)
                    } else {
                        (NeckPos::new(Anchor::End, grid.s(i)), t + theta)
                    };
                    let b = c.beta(pos.sigma(len));
                    let vv = if b == 0.0 && side == 0 || b == 1.0 && side == 1 {
                        vec![0.0; dim]
                    } else {
                        eval(v, &pos, tn)?
                    };
                    let ww = if b == 1.0 && side == 0 || b == 0.0 && side == 1 {
                        vec![0.0; dim]
                    } else {
                        eval(w, &pos, tn)?
                    };
                    for k in 0..dim {
                        let rhs2 = ww[k] - (1.0 - 2.0 * b) * av[k];
                        let (x, y) = solve(b, (vv[k], rhs2))?;
                        let val = if side == 0 { x } else { y };
                        let o = (i * n_t + j) * dim + k;
                        if side == 0 {
                            plus.data[o] = val;
                        } else {
                            minus.data[o] = val;
                        }
                    }
                }
            }
        }
        let (constant, space) = if hat {
            (vec![0.0; dim], Space::F)
        } else {
            (av.iter().zip(w.asympt()).map(|(m, c)| m - c).collect(), Space::E)
        };
        Ok(MapPair::from_samples(&layout, plus, minus, constant, space))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_pair, smooth_pair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> PairLayout {
        PairLayout::with_density(4.0, 8, 16, 2).unwrap()
    }

    fn contexts() -> Vec<SpliceContext> {
        let mut out = vec![SpliceContext::with_length(4.75, 0.25, layout()).unwrap()];
        for j in 2..=4 {
            let r = math::powi(2.0, -j);
            let a = GluingParameter::polar(GluingProfile::Exponential, r, 0.625).unwrap();
            out.push(SpliceContext::new(a, layout()).unwrap());
        }
        out
    }

    #[test]
    fn cutoff_properties() {
        let c = Cutoff;
        assert_eq!(c.beta(0.0), 0.5);
        assert_eq!(c.beta(-1.0), 1.0);
        assert_eq!(c.beta(-3.0), 1.0);
        assert_eq!(c.beta(1.0), 0.0);
        for k in -99..100 {
            let s = k as f64 / 100.0;
            assert!((c.beta(s) + c.beta(-s) - 1.0).abs() <= 2.0 * f64::EPSILON);
            assert!(c.dbeta(s) < 0.0 || s.abs() > 0.97);
            let g = c.gamma(s);
            assert!((0.5..=1.0).contains(&g));
            // derivative against a centered difference
            let h = 1e-6;
            let fd = (c.beta(s + h) - c.beta(s - h)) / (2.0 * h);
            assert!((fd - c.dbeta(s)).abs() < 1e-6);
        }
    }

    #[test]
    fn context_errors() {
        let big = GluingParameter::polar(GluingProfile::Exponential, 0.6, 0.0).unwrap();
        assert!(matches!(SpliceContext::new(big, layout()), Err(Error::ParameterTooLarge(_))));
        let short = GluingParameter::polar(GluingProfile::Logarithmic, 0.4, 0.0).unwrap();
        assert!(matches!(SpliceContext::new(short, layout()), Err(Error::NeckTooShort(_))));
    }

    #[test]
    fn glue_examples() {
        let ctx = &contexts()[0];
        let l = layout();
        let c = MapPair::constant(&l, Space::E, &[1.5, -2.0]);
        let v = ctx.plus_glue(&c).unwrap();
        let v = v.neck().unwrap();
        for s in v.windows()[0].data.chunks(2) {
            assert!((s[0] - 1.5).abs() < 1e-15 && (s[1] + 2.0).abs() < 1e-15);
        }
        let w = ctx.minus_glue(&c).unwrap();
        assert_eq!(w.neck().unwrap().max_abs(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_pair(&mut rng, &l, Space::E);
        let v = ctx.plus_glue(&h).unwrap();
        let v = v.neck().unwrap();
        let len = ctx.length().unwrap();
        // left of R/2 - 1: v = h+
        for s in [0.0, 0.5, 1.25] {
            for t in [0.0, 0.25] {
                assert_eq!(v.evaluate(s, t).unwrap(), h.plus.evaluate(s, t).unwrap());
            }
        }
        // midpoint: average of the two halves
        let mid = v.evaluate(0.5 * len, 0.125).unwrap();
        let p = h.plus.evaluate(0.5 * len, 0.125).unwrap();
        let m = h.minus.evaluate(-0.5 * len, 0.125 - 0.25).unwrap();
        for k in 0..2 {
            assert!((mid[k] - 0.5 * (p[k] + m[k])).abs() < 1e-15);
        }
        // right of R/2 + 1 on C_a: -(h+ - av)
        let w = ctx.minus_glue(&h).unwrap();
        let w = w.neck().unwrap();
        let av = ctx.average(&h).unwrap();
        let s = 3.625;
        let got = w.evaluate(s, 0.5).unwrap();
        let hp = h.plus.evaluate(s, 0.5).unwrap();
        for k in 0..2 {
            assert!((got[k] + hp[k] - av[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_parameter() {
        let ctx = SpliceContext::new(GluingParameter::zero(GluingProfile::Exponential), layout()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_pair(&mut rng, &layout(), Space::E);
        assert_eq!(ctx.plus_glue(&h).unwrap(), Glued::Pair(h.clone()));
        assert_eq!(ctx.minus_glue(&h).unwrap(), AntiGlued::Zero);
        assert_eq!(ctx.project(&h).unwrap(), h);
        assert!(ctx.in_splicing_core(&h, 0.0).unwrap());
        let back = ctx.total_unglue(&Glued::Pair(h.clone()), &AntiGlued::Zero).unwrap();
        assert_eq!(back, h);
        let zc = ctx.transfer_cs(&h).unwrap();
        assert_eq!(zc.max_abs(), 0.0);
        assert_eq!(ctx.transfer_ct(&h).unwrap().max_abs(), 0.0);
        // a = 0, eta = (s, 0): D_s = (1, 0) up to the one-sided stencil
        let l = layout();
        let eta = MapPair::from_fns(&l, Space::E, &[0.0, 0.0], |s, _, o| o[0] = s, |_, _, o| o[0] = 0.0);
        // not a valid E-pair (s does not decay) but fine for the linear use
        let eta = eta.unwrap();
        let d = ctx.transfer_ds(&eta).unwrap();
        assert!(d.plus.values().chunks(2).all(|v| (v[0] - 1.0).abs() < 1e-12 && v[1] == 0.0));
        assert!(d.minus.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trips_and_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let l = layout();
        for ctx in contexts() {
            assert!(ctx.is_exact());
            for _ in 0..5 {
                let h = random_pair(&mut rng, &l, Space::E);
                let (v, w) = ctx.total_glue(&h).unwrap();
                let back = ctx.total_unglue(&v, &w).unwrap();
                assert!(back.max_abs_diff(&h) < 1e-12);
                let o = oracle::unglue(&ctx, v.neck().unwrap(), w.neck().unwrap(), false).unwrap();
                assert!(o.max_abs_diff(&h) < 1e-12);

                let xi = random_pair(&mut rng, &l, Space::F);
                let (v, w) = ctx.hat_total_glue(&xi).unwrap();
                let back = ctx.hat_total_unglue(&v, &w).unwrap();
                assert!(back.max_abs_diff(&xi) < 1e-12);

                let p = ctx.project(&h).unwrap();
                assert!(p.max_abs_diff(&ctx.project_via_unglue(&h).unwrap()) < 1e-12);
                assert!(ctx.project(&p).unwrap().max_abs_diff(&p) < 1e-12);
                let wp = ctx.minus_glue(&p).unwrap();
                assert!(wp.neck().unwrap().max_abs() < 1e-12);
                let vp = ctx.plus_glue(&p).unwrap();
                assert!(vp.neck().unwrap().max_abs_diff(ctx.plus_glue(&h).unwrap().neck().unwrap()) < 1e-12);

                let hp = ctx.hat_project(&xi).unwrap();
                assert!(hp.max_abs_diff(&ctx.hat_project_via_unglue(&xi).unwrap()) < 1e-12);
                assert!(ctx.hat_project(&hp).unwrap().max_abs_diff(&hp) < 1e-12);
            }
        }
    }

    #[test]
    fn anti_glue_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = layout();
        for ctx in contexts() {
            let h = random_pair(&mut rng, &l, Space::E);
            let w = ctx.minus_glue(&h).unwrap();
            let w_hat = ctx.hat_minus_glue(&h).unwrap();
            let v = ctx.plus_glue(&h).unwrap();
            let mean = v.neck().unwrap().middle_mean().unwrap();
            let len = ctx.length().unwrap();
            let (w, w_hat) = (w.neck().unwrap(), w_hat.neck().unwrap());
            for (k, i, pos) in w.axis().nodes() {
                let f = 2.0 * Cutoff.beta(pos.sigma(len)) - 1.0;
                let a = w.windows()[k].row(i);
                let b = w_hat.windows()[k].row(i);
                for (idx, (x, y)) in a.iter().zip(b).enumerate() {
                    assert!((x - (y - f * mean[idx % 2])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unglue_constants_and_trivial_inputs() {
        let ctx = &contexts()[0];
        let l = layout();
        let v = Glued::Neck(NeckMap::from_fn(ctx.z_axis().unwrap(), 2, vec![0.0; 2], |_, _, o| {
            o.copy_from_slice(&[2.0, 3.0])
        }).unwrap());
        let w = AntiGlued::Neck(ctx.zero_neck(NeckKind::Infinite).unwrap());
        let h = ctx.total_unglue(&v, &w).unwrap();
        assert!(h.max_abs_diff(&MapPair::constant(&l, Space::E, &[2.0, 3.0])) < 1e-15);
        let z = Glued::Neck(ctx.zero_neck(NeckKind::Finite).unwrap());
        assert_eq!(ctx.total_unglue(&z, &w).unwrap().max_abs(), 0.0);
        assert_eq!(ctx.hat_total_unglue(&z, &w).unwrap().max_abs(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_pair(&mut rng, &l, Space::E);
        let (v, w) = ctx.total_glue(&h).unwrap();
        let back = ctx.total_unglue(&v, &w).unwrap();
        let mean = v.neck().unwrap().middle_mean().unwrap();
        let winf = w.neck().unwrap().asympt();
        for k in 0..2 {
            assert!((back.constant_value()[k] - (mean[k] - winf[k])).abs() < 1e-15);
        }
        assert!(ctx.hat_total_unglue(&v, &w).is_err() || winf.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hat_unglue_rows_for_w_zero() {
        let ctx = &contexts()[0];
        let len = ctx.length().unwrap();
        let v = NeckMap::from_fn(ctx.z_axis().unwrap(), 2, vec![0.0; 2], |s, t, o| {
            o[0] = s;
            o[1] = math::cos(math::TAU * t);
        })
        .unwrap();
        let xi = ctx
            .hat_total_unglue(&Glued::Neck(v.clone()), &AntiGlued::Neck(ctx.zero_neck(NeckKind::Infinite).unwrap()))
            .unwrap();
        let s = 2.0;
        let b = Cutoff.beta(s - 0.5 * len);
        let g = Cutoff.gamma(s - 0.5 * len);
        let got = xi.plus.evaluate(s, 0.0).unwrap();
        assert!((got[0] - b / g * s).abs() < 1e-14);
        let got = xi.minus.evaluate(s - len, 0.0 - 0.25).unwrap();
        assert!((got[0] - (1.0 - b) / g * s).abs() < 1e-14);
    }

    #[test]
    fn splicing_core_examples() {
        let ctx = &contexts()[0];
        let l = layout();
        let c = MapPair::constant(&l, Space::E, &[1.0, 1.0]);
        assert!(ctx.in_splicing_core(&c, 1e-12).unwrap());
        let len = ctx.length().unwrap();
        let bump = MapPair::from_fns(
            &l,
            Space::E,
            &[0.0, 0.0],
            |s, _, o| {
                let x = s - 0.5 * len;
                o[0] = math::exp(-4.0 * x * x);
            },
            |_, _, o| o.fill(0.0),
        )
        .unwrap();
        assert!(!ctx.in_splicing_core(&bump, 1e-6).unwrap());
        let p = ctx.project(&bump).unwrap();
        assert!(ctx.in_splicing_core(&p, 1e-9).unwrap());
    }

    #[test]
    fn exp_compatibility_is_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let l = layout();
        for ctx in contexts() {
            let u = random_pair(&mut rng, &l, Space::E);
            let eta = random_pair(&mut rng, &l, Space::E);
            let lhs = ctx.plus_glue(&u.add_scaled(1.0, &eta)).unwrap();
            let a = ctx.plus_glue(&u).unwrap();
            let b = ctx.plus_glue(&eta).unwrap();
            let rhs = a.neck().unwrap().add_scaled(1.0, b.neck().unwrap()).unwrap();
            assert!(lhs.neck().unwrap().max_abs_diff(&rhs) < 1e-14);
        }
    }

    // closed forms of the transfer operators, written out per node
    fn closed_ct(ctx: &SpliceContext, eta: &MapPair) -> MapPair {
        let l = *ctx.layout();
        let len = ctx.length().unwrap();
        let d = eta.d_t();
        let shifted = |s_minus: f64, t: f64| d.minus.evaluate(s_minus, t).unwrap();
        MapPair::from_fns(
            &l,
            Space::F,
            &[0.0, 0.0],
            |s, t, o| {
                let b = Cutoff.beta(s - 0.5 * len);
                let g = Cutoff.gamma(s - 0.5 * len);
                let p = d.plus.evaluate(s, t).unwrap();
                let m = shifted(s - len, t - ctx.twist());
                for k in 0..2 {
                    o[k] = (b - 1.0) * (b - 1.0) / g * p[k] + b * (b - 1.0) / g * m[k];
                }
            },
            |sp, tp, o| {
                let s = sp + len;
                let b = Cutoff.beta(s - 0.5 * len);
                let g = Cutoff.gamma(s - 0.5 * len);
                let p = d.plus.evaluate(s, tp + ctx.twist()).unwrap();
                let m = shifted(sp, tp);
                for k in 0..2 {
                    o[k] = b * (b - 1.0) / g * p[k] + b * b / g * m[k];
                }
            },
        )
        .unwrap()
    }

    fn closed_cs(ctx: &SpliceContext, eta: &MapPair) -> MapPair {
        let l = *ctx.layout();
        let len = ctx.length().unwrap();
        let d = eta.d_s();
        let av = ctx.average(eta).unwrap();
        let theta = ctx.twist();
        // W(s, t) = hat_minus(d_s eta) + beta'(eta+ - av) + beta'(eta-(s - R) - av)
        let big_w = |s: f64, t: f64| -> Vec<f64> {
            let b = Cutoff.beta(s - 0.5 * len);
            let db = Cutoff.dbeta(s - 0.5 * len);
            let dp = d.plus.evaluate(s, t).unwrap();
            let dm = d.minus.evaluate(s - len, t - theta).unwrap();
            let ep = eta.plus.evaluate(s, t).unwrap();
            let em = eta.minus.evaluate(s - len, t - theta).unwrap();
            (0..2)
                .map(|k| -(1.0 - b) * dp[k] + b * dm[k] + db * (ep[k] - av[k]) + db * (em[k] - av[k]))
                .collect()
        };
        MapPair::from_fns(
            &l,
            Space::F,
            &[0.0, 0.0],
            |s, t, o| {
                let b = Cutoff.beta(s - 0.5 * len);
                let g = Cutoff.gamma(s - 0.5 * len);
                if b == 1.0 {
                    o.fill(0.0);
                    return;
                }
                let wv = big_w(s, t);
                for k in 0..2 {
                    o[k] = (b - 1.0) / g * wv[k];
                }
            },
            |sp, tp, o| {
                let s = sp + len;
                let b = Cutoff.beta(s - 0.5 * len);
                let g = Cutoff.gamma(s - 0.5 * len);
                if b == 0.0 {
                    o.fill(0.0);
                    return;
                }
                let wv = big_w(s, tp + theta);
                for k in 0..2 {
                    o[k] = b / g * wv[k];
                }
            },
        )
        .unwrap()
    }

    #[test]
    fn transfers_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let l = layout();
        let ctx = &contexts()[0];
        for _ in 0..3 {
            let eta = smooth_pair(&mut rng, &l, Space::E, 3.0);
            let dt = ctx.transfer_dt(eta.as_ref().unwrap()).unwrap();
            let eta = eta.unwrap();
            let via = ctx.hat_project(&eta.d_t()).unwrap();
            assert!(dt.max_abs_diff(&via) < 1e-10);
            assert!(ctx.transfer_ct(&eta).unwrap().max_abs_diff(&closed_ct(ctx, &eta)) < 1e-10);
            assert!(ctx.transfer_cs(&eta).unwrap().max_abs_diff(&closed_cs(ctx, &eta)) < 1e-10);
            // D_s = hat_project(d_s eta) + hat_unglue(beta'(eta+ - eta-), 0)
            let ds = ctx.transfer_ds(&eta).unwrap();
            let len = ctx.length().unwrap();
            let theta = ctx.twist();
            let extra = MapPair::from_fns(
                &l,
                Space::F,
                &[0.0, 0.0],
                |s, t, o| {
                    let x = s - 0.5 * len;
                    let (b, g, db) = (Cutoff.beta(x), Cutoff.gamma(x), Cutoff.dbeta(x));
                    let p = eta.plus.evaluate(s, t).unwrap();
                    let m = eta.minus.evaluate(s - len, t - theta).unwrap();
                    for k in 0..2 {
                        o[k] = b / g * db * (p[k] - m[k]);
                    }
                },
                |sp, tp, o| {
                    let s = sp + len;
                    let x = s - 0.5 * len;
                    let (b, g, db) = (Cutoff.beta(x), Cutoff.gamma(x), Cutoff.dbeta(x));
                    let p = eta.plus.evaluate(s, tp + theta).unwrap();
                    let m = eta.minus.evaluate(sp, tp).unwrap();
                    for k in 0..2 {
                        o[k] = (1.0 - b) / g * db * (p[k] - m[k]);
                    }
                },
            )
            .unwrap();
            let expect = ctx.hat_project(&eta.d_s()).unwrap().add_scaled(1.0, &extra);
            assert!(ds.max_abs_diff(&expect) < 1e-10);
        }
        let c = MapPair::constant(&l, Space::E, &[0.3, 0.4]);
        for f in [
            SpliceContext::transfer_ds,
            SpliceContext::transfer_dt,
            SpliceContext::transfer_cs,
            SpliceContext::transfer_ct,
        ] {
            assert!(f(ctx, &c).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn non_exact_round_trip_is_close() {
        let l = PairLayout::with_density(5.0, 8, 16, 1).unwrap();
        let ctx = SpliceContext::with_length(4.6708, 0.1, l).unwrap();
        assert!(!ctx.is_exact());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = smooth_pair(&mut rng, &l, Space::E, 2.0).unwrap();
        let (v, w) = ctx.total_glue(&h).unwrap();
        let back = ctx.total_unglue(&v, &w).unwrap();
        assert!(back.max_abs_diff(&h) < 1e-3, "{}", back.max_abs_diff(&h));
    }
}
