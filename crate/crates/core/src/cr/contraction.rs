//! Sampling estimate of the contraction modulus of the solved filled
//! section.
//!
//! With `f(a, w)` the filled section at the base `u` and `L_a` its
//! linearization at `w = 0`, split the `w`-space as `ker L_a + W` and set
//! `B(a, w) = w - L_a^+ (f(a, w) - f(a, 0))` for `w` in `W`. The modulus is
//! the largest sampled `|B(a, w) - B(a, w')|_0 / |w - w'|_0` over pairs in
//! the `E_0` ball of radius `rho`. For a constant structure `f` is affine in
//! `w` and `B` vanishes.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operators::filled_section;
use super::ComplexStructureField;
use crate::cylinder::{pair_norm_e, MapPair, PairLayout, Samples, Space};
use crate::profile::ScScale;
use crate::sample::random_pair;
use crate::splice::SpliceContext;
use crate::{Error, Result};

/// Relative singular-value cutoff separating the kernel of `L_a`.
pub const KERNEL_CUTOFF: f64 = 1e-8;

/// Central-difference step for the linearization.
pub const JACOBIAN_STEP: f64 = 1e-4;

/// `(r+, r-, c)` coordinates of an E-pair, with `r = u - c`.
fn to_vec(h: &MapPair) -> DVector<f64> {
    let c = h.constant_value();
    let d = c.len();
    let p = h.plus.values();
    let m = h.minus.values();
    let mut out = DVector::zeros(p.len() + m.len() + d);
    for (k, v) in p.iter().enumerate() {
        out[k] = v - c[k % d];
    }
    for (k, v) in m.iter().enumerate() {
        out[p.len() + k] = v - c[k % d];
    }
    for k in 0..d {
        out[p.len() + m.len() + k] = c[k];
    }
    out
}

fn from_vec(layout: &PairLayout, x: &DVector<f64>) -> Result<MapPair> {
    let d = layout.dim;
    let half = layout.n_s * layout.n_t * d;
    let c: Vec<f64> = (0..d).map(|k| x[2 * half + k]).collect();
    let mut plus = Samples::zeros(layout.n_s, layout.n_t, d, layout.ds());
    let mut minus = plus.clone();
    for k in 0..half {
        plus.data[k] = x[k] + c[k % d];
        minus.data[k] = x[half + k] + c[k % d];
    }
    Ok(MapPair::from_samples(layout, plus, minus, c, Space::E))
}

fn is_constant(h: &MapPair) -> bool {
    let c = h.constant_value();
    let d = c.len();
    h.plus.values().iter().chain(h.minus.values()).enumerate().all(|(k, v)| *v == c[k % d])
}

fn fiber_vec(xi: &MapPair) -> DVector<f64> {
    let p = xi.plus.values();
    let m = xi.minus.values();
    DVector::from_iterator(p.len() + m.len(), p.iter().chain(m).copied())
}

/// The linearization at `w = 0` and its splitting.
#[derive(Debug, Clone)]
pub struct GermSplit {
    /// Orthonormal basis of `W = ker(L_a)^perp` (columns).
    pub range_basis: DMatrix<f64>,
    /// Pseudo-inverse of `L_a` (maps into `W`).
    pub pseudo_inverse: DMatrix<f64>,
    pub kernel_dim: usize,
    f0: DVector<f64>,
}

/// The solved germ at one gluing parameter.
pub struct Germ<'a> {
    ctx: &'a SpliceContext,
    base: &'a MapPair,
    structure: &'a ComplexStructureField,
    /// For a constant base `c`: the zero base and `J(. + c)`, so that `w` is
    /// never added onto `c` and keeps full relative precision.
    centered: Option<(MapPair, ComplexStructureField)>,
    split: GermSplit,
}

impl<'a> Germ<'a> {
    /// Builds `L_a` and splits it by SVD. At a constant base the
    /// linearization is the filled section with the structure frozen at the
    /// base value, which is exactly linear; otherwise central differences.
    pub fn new(ctx: &'a SpliceContext, base: &'a MapPair, structure: &'a ComplexStructureField) -> Result<Self> {
        let layout = base.layout();
        let centered = is_constant(base).then(|| {
            (
                MapPair::zeros(&layout, Space::E),
                structure.translated(base.constant_value()),
            )
        });
        let (u, j) = match &centered {
            Some((z, jt)) => (z, jt),
            None => (base, structure),
        };
        let section = |x: &DVector<f64>, j: &ComplexStructureField| -> Result<DVector<f64>> {
            let w = from_vec(&layout, x)?;
            Ok(fiber_vec(&filled_section(ctx, u, &w, j)?))
        };
        let n = to_vec(base).len();
        let f0 = section(&DVector::zeros(n), j)?;
        let mut jac = DMatrix::zeros(f0.len(), n);
        let mut x = DVector::zeros(n);
        if centered.is_some() {
            let frozen = structure.frozen_at(base.constant_value())?;
            for k in 0..n {
                x[k] = 1.0;
                jac.set_column(k, &section(&x, &frozen)?);
                x[k] = 0.0;
            }
        } else {
            for k in 0..n {
                x[k] = JACOBIAN_STEP;
                let fp = section(&x, j)?;
                x[k] = -JACOBIAN_STEP;
                let fm = section(&x, j)?;
                x[k] = 0.0;
                jac.set_column(k, &((fp - fm) / (2.0 * JACOBIAN_STEP)));
            }
        }
        let svd = jac
            .try_svd(true, true, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Singular("linearization SVD did not converge".into()))?;
        let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > KERNEL_CUTOFF * smax)
            .collect();
        if keep.is_empty() {
            return Err(Error::Singular("linearization vanishes".into()));
        }
        let mut range_basis = DMatrix::zeros(n, keep.len());
        let mut pinv = DMatrix::zeros(n, f0.len());
        for (c, &i) in keep.iter().enumerate() {
            let v = vt.row(i).transpose();
            range_basis.set_column(c, &v);
            pinv += (&v * u.column(i).transpose()) / svd.singular_values[i];
        }
        Ok(Self {
            ctx,
            base,
            structure,
            centered,
            split: GermSplit {
                kernel_dim: n - keep.len(),
                range_basis,
                pseudo_inverse: pinv,
                f0,
            },
        })
    }

    pub fn split(&self) -> &GermSplit {
        &self.split
    }

    /// Orthogonal projection onto `W` (in nodal coordinates).
    pub fn project(&self, w: &MapPair) -> Result<MapPair> {
        let v = &self.split.range_basis;
        let x = v * (v.transpose() * to_vec(w));
        from_vec(&self.base.layout(), &x)
    }

    /// `B(a, w) = w - L_a^+ (f(a, w) - f(a, 0))`.
    pub fn remainder(&self, w: &MapPair) -> Result<MapPair> {
        let (u, j) = match &self.centered {
            Some((z, jt)) => (z, jt),
            None => (self.base, self.structure),
        };
        let fw = fiber_vec(&filled_section(self.ctx, u, w, j)?);
        let x = to_vec(w) - &self.split.pseudo_inverse * (fw - &self.split.f0);
        from_vec(&self.base.layout(), &x)
    }

    /// `|B(w) - B(w')|_0 / |w - w'|_0`; `None` when `w = w'`.
    pub fn ratio(&self, w: &MapPair, w2: &MapPair) -> Result<Option<f64>> {
        let scale = ScScale::Default;
        let dw = w.add_scaled(-1.0, w2);
        let den = pair_norm_e(&dw, 0, &scale)?;
        if !(den > 1e-14) {
            return Ok(None);
        }
        let db = self.remainder(w)?.add_scaled(-1.0, &self.remainder(w2)?);
        Ok(Some(pair_norm_e(&db, 0, &scale)? / den))
    }
}

/// One modulus estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionEstimate {
    pub radius: f64,
    pub modulus: f64,
    pub pairs: usize,
    pub skipped: usize,
}

/// Samples `count` pairs in the `E_0` ball of radius `radius` inside `W`.
/// Directions and relative radii depend on `seed` only, so estimates at
/// different radii use the same normalized samples.
pub fn contraction_modulus(germ: &Germ<'_>, radius: f64, count: usize, seed: u64) -> Result<ContractionEstimate> {
    if !(radius > 0.0) || count == 0 {
        return Err(Error::InvalidParameter("radius and sample count must be positive".into()));
    }
    let layout = germ.base.layout();
    let scale = ScScale::Default;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<MapPair> {
        let w = germ.project(&random_pair(rng, &layout, Space::E))?;
        let norm = pair_norm_e(&w, 0, &scale)?;
        let r = radius * rng.random_range(0.2..1.0);
        if norm == 0.0 {
            return Ok(w);
        }
        let zero = MapPair::zeros(&layout, Space::E);
        Ok(zero.add_scaled(r / norm, &w))
    };
    let mut modulus: f64 = 0.0;
    let (mut pairs, mut skipped) = (0, 0);
    for _ in 0..count {
        let w = draw(&mut rng)?;
        let w2 = draw(&mut rng)?;
        match germ.ratio(&w, &w2)? {
            Some(q) => {
                modulus = modulus.max(q);
                pairs += 1;
            }
            None => skipped += 1,
        }
    }
    Ok(ContractionEstimate {
        radius,
        modulus,
        pairs,
        skipped,
    })
}

/// Estimates at each radius, reusing one linearization.
pub fn contraction_sweep(germ: &Germ<'_>, radii: &[f64], count: usize, seed: u64) -> Result<Vec<ContractionEstimate>> {
    radii
        .iter()
        .map(|&r| contraction_modulus(germ, r, count, seed))
        .collect()
}

/// A small point-dependent structure used by the diagnostics: the standard
/// structure conjugated by `I + eps sin(p_0 + p_1) K`.
pub fn model_structure(dim: usize, eps: f64) -> Result<ComplexStructureField> {
    let mut k = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            k[a * dim + b] = if a == b { 0.5 } else { 0.25 / (1 + a + b) as f64 };
        }
    }
    let mut freq = vec![0.0; dim];
    freq[0] = 1.0;
    if dim > 1 {
        freq[1] = 1.0;
    }
    ComplexStructureField::conjugated(dim, eps, k, freq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{GluingParameter, GluingProfile};

    fn layout() -> PairLayout {
        PairLayout::with_density(3.5, 4, 8, 2).unwrap()
    }

    #[test]
    fn coordinates_round_trip() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_pair(&mut rng, &l, Space::E);
        let back = from_vec(&l, &to_vec(&h)).unwrap();
        assert!(back.max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn constant_structure_gives_zero_modulus() {
        let l = layout();
        let j = ComplexStructureField::standard(2).unwrap();
        let base = MapPair::constant(&l, Space::E, &[0.3, -0.2]);
        for a in [
            GluingParameter::zero(GluingProfile::Exponential),
            GluingParameter::from_length(GluingProfile::Exponential, 5.0, 0.25).unwrap(),
        ] {
            let ctx = SpliceContext::new(a, l).unwrap();
            let germ = Germ::new(&ctx, &base, &j).unwrap();
            assert!(germ.split().kernel_dim >= 2);
            let est = contraction_modulus(&germ, 0.1, 4, 7).unwrap();
            assert!(est.modulus < 1e-6, "{}", est.modulus);
        }
    }

    #[test]
    fn equal_samples_are_skipped() {
        let l = layout();
        let j = ComplexStructureField::standard(2).unwrap();
        let base = MapPair::constant(&l, Space::E, &[0.0, 0.0]);
        let ctx = SpliceContext::new(GluingParameter::zero(GluingProfile::Exponential), l).unwrap();
        let germ = Germ::new(&ctx, &base, &j).unwrap();
        let w = germ.project(&random_pair(&mut ChaCha8Rng::seed_from_u64(1), &l, Space::E)).unwrap();
        assert_eq!(germ.ratio(&w, &w).unwrap(), None);
    }
}
