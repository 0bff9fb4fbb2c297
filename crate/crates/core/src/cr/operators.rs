use alloc::vec;
use alloc::vec::Vec;

use super::ComplexStructureField;
use crate::cylinder::{Asymptote, CylinderMap, MapPair, Samples, Space};
use crate::math;
use crate::neck::{Anchor, NeckMap, NeckPos};
use crate::splice::{AntiGlued, Glued, SpliceContext};
use crate::{Error, Result};

/// `scale (u_s + J(p) u_t)` node by node, with `p = u` for point-dependent
/// structures.
fn combine(u: &Samples, us: &Samples, ut: &Samples, j: &ComplexStructureField, scale: f64) -> Samples {
    let d = u.dim;
    let mut out = Samples::zeros(u.n_s, u.n_t, d, u.ds);
    let mut scratch = vec![0.0; d * d];
    let mut jv = vec![0.0; d];
    let const_mat = if j.is_constant() {
        let mut m = vec![0.0; d * d];
        j.matrix_at(&vec![0.0; d], &mut m);
        Some(m)
    } else {
        None
    };
    for (n, o) in out.data.chunks_mut(d).enumerate() {
        let r = n * d..(n + 1) * d;
        let (p, s, t) = (&u.data[r.clone()], &us.data[r.clone()], &ut.data[r]);
        match &const_mat {
            Some(m) => {
                for a in 0..d {
                    jv[a] = (0..d).map(|b| m[a * d + b] * t[b]).sum();
                }
            }
            None => j.apply(p, t, &mut scratch, &mut jv),
        }
        for a in 0..d {
            o[a] = scale * (s[a] + jv[a]);
        }
    }
    out
}

fn check(dim: usize, j: &ComplexStructureField) -> Result<()> {
    if dim != j.dim() {
        return Err(Error::Incompatible(alloc::format!(
            "map has {dim} components, structure acts on {}",
            j.dim()
        )));
    }
    Ok(())
}

fn constant_only(j: &ComplexStructureField) -> Result<()> {
    if !j.is_constant() {
        return Err(Error::ComplexStructure("dbar0 needs a constant structure".into()));
    }
    Ok(())
}

/// Discretized Cauchy-Riemann operators acting on sampled maps.
pub trait CauchyRiemann: Sized {
    /// `d_s u + J0 d_t u` for a constant structure.
    fn dbar0(&self, j0: &ComplexStructureField) -> Result<Self>;

    /// `(d_s u + J(u) d_t u) / 2`.
    fn cr_apply(&self, j: &ComplexStructureField) -> Result<Self>;
}

fn samples_op(u: &Samples, j: &ComplexStructureField, scale: f64) -> Samples {
    combine(u, &u.d_s(), &u.d_t(), j, scale)
}

fn cylinder_op(u: &CylinderMap, j: &ComplexStructureField, scale: f64) -> Result<CylinderMap> {
    check(u.dim(), j)?;
    let asympt = match u.asympt() {
        Asymptote::None => Asymptote::None,
        _ => Asymptote::Constant(vec![0.0; u.dim()]),
    };
    let s = samples_op(u.samples(), j, scale);
    CylinderMap::new(*u.grid(), u.dim(), s.data, asympt)
}

impl CauchyRiemann for CylinderMap {
    fn dbar0(&self, j0: &ComplexStructureField) -> Result<Self> {
        constant_only(j0)?;
        cylinder_op(self, j0, 1.0)
    }

    fn cr_apply(&self, j: &ComplexStructureField) -> Result<Self> {
        cylinder_op(self, j, 0.5)
    }
}

fn neck_op(u: &NeckMap, j: &ComplexStructureField, scale: f64) -> Result<NeckMap> {
    check(u.dim(), j)?;
    // derivatives vanish on the constant plateaus and at infinity
    let windows = u.windows().iter().map(|w| samples_op(w, j, scale)).collect();
    NeckMap::from_parts(
        u.axis(),
        u.dim(),
        windows,
        vec![vec![0.0; u.dim()]; u.gaps().len()],
        vec![0.0; u.dim()],
    )
}

impl CauchyRiemann for NeckMap {
    fn dbar0(&self, j0: &ComplexStructureField) -> Result<Self> {
        constant_only(j0)?;
        neck_op(self, j0, 1.0)
    }

    fn cr_apply(&self, j: &ComplexStructureField) -> Result<Self> {
        neck_op(self, j, 0.5)
    }
}

fn pair_op(h: &MapPair, j: &ComplexStructureField, scale: f64) -> Result<MapPair> {
    let plus = cylinder_op(&h.plus, j, scale)?;
    let minus = cylinder_op(&h.minus, j, scale)?;
    MapPair::new(plus, minus, Space::F)
}

impl CauchyRiemann for MapPair {
    fn dbar0(&self, j0: &ComplexStructureField) -> Result<Self> {
        constant_only(j0)?;
        pair_op(self, j0, 1.0)
    }

    fn cr_apply(&self, j: &ComplexStructureField) -> Result<Self> {
        pair_op(self, j, 0.5)
    }
}

/// `(u_s + J(u) u_t) / 2` from exact values and derivatives at one point.
pub fn cr_pointwise(j: &ComplexStructureField, u: &[f64], u_s: &[f64], u_t: &[f64]) -> Vec<f64> {
    let d = j.dim();
    let mut scratch = vec![0.0; d * d];
    let mut jv = vec![0.0; d];
    j.apply(u, u_t, &mut scratch, &mut jv);
    (0..d).map(|a| 0.5 * (u_s[a] + jv[a])).collect()
}

/// Right-hand sides of the filled-section equations:
/// `cr_apply(plus_glue(u + h))` and `dbar0(minus_glue(h))` with the
/// structure frozen at the nodal point `u(inf)`.
pub fn filled_section_rhs(
    ctx: &SpliceContext,
    u: &MapPair,
    h: &MapPair,
    j: &ComplexStructureField,
) -> Result<(Glued, AntiGlued)> {
    let total = u.add_scaled(1.0, h);
    let first = match ctx.plus_glue(&total)? {
        Glued::Pair(p) => Glued::Pair(p.cr_apply(j)?),
        Glued::Neck(n) => Glued::Neck(n.cr_apply(j)?),
    };
    let j0 = j.frozen_at(u.constant_value())?;
    let second = match ctx.minus_glue(h)? {
        AntiGlued::Zero => AntiGlued::Zero,
        AntiGlued::Neck(n) => AntiGlued::Neck(n.dbar0(&j0)?),
    };
    Ok((first, second))
}

/// The filled section `xi` solving `hat_plus_glue(xi) = cr_apply(plus_glue(u + h))`
/// and `hat_minus_glue(xi) = dbar0(minus_glue(h))`.
pub fn filled_section(ctx: &SpliceContext, u: &MapPair, h: &MapPair, j: &ComplexStructureField) -> Result<MapPair> {
    let (v, w) = filled_section_rhs(ctx, u, h, j)?;
    ctx.hat_total_unglue(&v, &w)
}

/// The two pieces `xi = xi_1 + xi_2` with `hat_minus_glue(xi_1) = 0` and
/// `hat_plus_glue(xi_2) = 0`.
pub fn filled_section_parts(
    ctx: &SpliceContext,
    u: &MapPair,
    h: &MapPair,
    j: &ComplexStructureField,
) -> Result<(MapPair, MapPair)> {
    let (v, w) = filled_section_rhs(ctx, u, h, j)?;
    match (&v, &w) {
        (Glued::Pair(_), AntiGlued::Zero) => {
            let first = ctx.hat_total_unglue(&v, &w)?;
            let zero = MapPair::zeros(ctx.layout(), Space::F);
            Ok((first, zero))
        }
        (Glued::Neck(vn), AntiGlued::Neck(wn)) => {
            let zc = AntiGlued::Neck(NeckMap::zeros(wn.axis(), wn.dim()));
            let zz = Glued::Neck(NeckMap::zeros(vn.axis(), vn.dim()));
            Ok((ctx.hat_total_unglue(&v, &zc)?, ctx.hat_total_unglue(&zz, &w)?))
        }
        _ => Err(Error::Incompatible("mismatched gluing output".into())),
    }
}

/// Whether a neck node lifts into one of the pair grids `[0, S]`, `[-S, 0]`.
/// Beyond both grids the pair carries no data and glued values there are
/// truncation artifacts.
fn resolved(pos: &NeckPos, length: f64, s_max: f64) -> bool {
    let tol = 1e-9;
    let plus = pos.s(length);
    let minus = match pos.anchor {
        Anchor::End => pos.offset,
        Anchor::Middle => pos.offset - 0.5 * length,
        Anchor::Start => pos.offset - length,
    };
    plus <= s_max + tol || minus >= -s_max - tol
}

/// Largest difference of two neck maps on the axis of `a` over the nodes that
/// lift into the pair grids of `ctx` (gap constants included).
pub fn resolved_diff(ctx: &SpliceContext, a: &NeckMap, b: &NeckMap) -> Result<f64> {
    if a.axis() != b.axis() {
        return Err(Error::Incompatible("neck maps live on different axes".into()));
    }
    let axis = a.axis();
    let s_max = ctx.layout().s_max;
    let mut out: f64 = 0.0;
    for (k, i, pos) in axis.nodes() {
        if resolved(&pos, axis.length, s_max) {
            out = out.max(math::max_abs_diff(a.windows()[k].row(i), b.windows()[k].row(i)));
        }
    }
    for (x, y) in a.gaps().iter().zip(b.gaps()) {
        out = out.max(math::max_abs_diff(x, y));
    }
    Ok(out)
}

/// Largest residual of the two filled-section equations over the resolved
/// neck nodes, with the right-hand sides assembled independently of the
/// solve.
pub fn filled_section_residual(
    ctx: &SpliceContext,
    xi: &MapPair,
    u: &MapPair,
    h: &MapPair,
    j: &ComplexStructureField,
) -> Result<f64> {
    let (v, w) = filled_section_rhs(ctx, u, h, j)?;
    let (gv, gw) = ctx.hat_total_glue(xi)?;
    let first = match (&gv, &v) {
        (Glued::Pair(a), Glued::Pair(b)) => a.max_abs_diff(b),
        (Glued::Neck(a), Glued::Neck(b)) => resolved_diff(ctx, a, b)?,
        _ => return Err(Error::Incompatible("mismatched gluing output".into())),
    };
    let second = match (&gw, &w) {
        (AntiGlued::Zero, AntiGlued::Zero) => 0.0,
        (AntiGlued::Neck(a), AntiGlued::Neck(b)) => resolved_diff(ctx, a, b)?,
        _ => return Err(Error::Incompatible("mismatched gluing output".into())),
    };
    Ok(first.max(second))
}
