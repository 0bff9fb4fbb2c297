//! Seeded random test data: smooth decaying pairs and gluing parameters on
//! the exactness tier.

use rand::Rng;

use crate::cylinder::{MapPair, PairLayout, Space};
use crate::math::{self, TAU};
use crate::profile::{gluing_length, snap_length_up, GluingParameter, GluingProfile};
use crate::Result;

/// Coefficients of `e^{-decay |s|} (1 + g s) sum_m (a_m cos 2 pi m t + b_m sin 2 pi m t)`.
struct Half {
    g: f64,
    modes: alloc::vec::Vec<(f64, f64)>,
}

impl Half {
    fn draw<R: Rng + ?Sized>(rng: &mut R, n_modes: usize) -> Self {
        Self {
            g: rng.random_range(-0.5..0.5),
            modes: (0..n_modes)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        }
    }

    fn eval(&self, s: f64, t: f64, decay: f64) -> f64 {
        let env = math::exp(-decay * s.abs()) * (1.0 + self.g * s.abs());
        let mut v = 0.0;
        for (m, (a, b)) in self.modes.iter().enumerate() {
            let x = TAU * m as f64 * t;
            v += a * math::cos(x) + b * math::sin(x);
        }
        env * v
    }
}

/// Random smooth pair whose remainders decay like `e^{-decay |s|}`; E-pairs
/// get a random common constant. Only `t`-modes resolved by the grid are used.
pub fn smooth_pair<R: Rng + ?Sized>(
    rng: &mut R,
    layout: &PairLayout,
    space: Space,
    decay: f64,
) -> Result<MapPair> {
    let n_modes = (layout.n_t / 2).clamp(1, 4);
    let c: alloc::vec::Vec<f64> = (0..layout.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let plus: alloc::vec::Vec<Half> = (0..layout.dim).map(|_| Half::draw(rng, n_modes)).collect();
    let minus: alloc::vec::Vec<Half> = (0..layout.dim).map(|_| Half::draw(rng, n_modes)).collect();
    let cf = match space {
        Space::E => c.clone(),
        Space::F => alloc::vec![0.0; layout.dim],
    };
    MapPair::from_fns(
        layout,
        space,
        &c,
        |s, t, o| {
            for k in 0..o.len() {
                o[k] = cf[k] + plus[k].eval(s, t, decay);
            }
        },
        |s, t, o| {
            for k in 0..o.len() {
                o[k] = cf[k] + minus[k].eval(s, t, decay);
            }
        },
    )
}

/// [`smooth_pair`] with a decay rate drawn from `[1, 2]`.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, layout: &PairLayout, space: Space) -> MapPair {
    let decay = rng.random_range(1.0..2.0);
    smooth_pair(rng, layout, space, decay).expect("finite samples")
}

/// Twist `k / n_t` with `k` uniform: a whole number of `t`-nodes.
pub fn node_twist<R: Rng + ?Sized>(rng: &mut R, n_t: usize) -> f64 {
    rng.random_range(0..n_t) as f64 / n_t as f64
}

/// `|a| = 2^{-j}` for the exponential profile, with the neck length snapped
/// up to a multiple of `2 ds` when the resulting neck fits on the pair grid
/// (so that `R/2` is a node). Long necks are left at the literal modulus.
pub fn exact_parameter(j: i32, twist: f64, layout: &PairLayout) -> Result<GluingParameter> {
    let r = math::powi(2.0, -j);
    let len = gluing_length(GluingProfile::Exponential, r)?;
    if len.is_finite() && 0.5 * len + 1.0 <= layout.s_max + 2.0 * layout.ds() {
        let snapped = snap_length_up(len, 2.0 * layout.ds());
        return GluingParameter::from_length(GluingProfile::Exponential, snapped, twist);
    }
    GluingParameter::polar(GluingProfile::Exponential, r, twist)
}
