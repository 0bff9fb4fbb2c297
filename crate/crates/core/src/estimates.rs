//! Empirical ratio estimates behind the uniform bounds: total (hat) gluing
//! norm equivalence and the transfer operators.

use alloc::vec::Vec;

use crate::cylinder::{pair_norm, MapPair, PairLayout, Space};
use crate::neck::{neck_norm, NeckNormMode};
use crate::profile::{GluingParameter, ScScale};
use crate::sample::smooth_pair;
use crate::splice::{AntiGlued, Glued, SpliceContext};
use crate::{Error, Result};
use alloc::string::ToString;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Quantity whose ratio to the input norm is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimate {
    /// `|hat_total_glue xi|_{hat G^a_m} / |xi|_{F_m}`
    HatGluing,
    /// `|total_glue h|_{G^a_m} / |h|_{E_m}`
    Gluing,
    /// `|D^a_s eta|_{F_m} / |eta|_{E_m}`
    TransferDs,
    TransferDt,
    TransferCs,
    TransferCt,
}

impl Estimate {
    pub const ALL: [Estimate; 6] = [
        Estimate::HatGluing,
        Estimate::Gluing,
        Estimate::TransferDs,
        Estimate::TransferDt,
        Estimate::TransferCs,
        Estimate::TransferCt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimate::HatGluing => "hat-gluing",
            Estimate::Gluing => "gluing",
            Estimate::TransferDs => "transfer-ds",
            Estimate::TransferDt => "transfer-dt",
            Estimate::TransferCs => "transfer-cs",
            Estimate::TransferCt => "transfer-ct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Space of the random inputs.
    pub fn input_space(self) -> Space {
        match self {
            Estimate::HatGluing => Space::F,
            _ => Space::E,
        }
    }
}

/// Ratio envelope at one gluing parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub modulus: f64,
    /// `R`; zero at `a = 0`, infinite when it overflows.
    pub length: f64,
    pub lower: f64,
    pub upper: f64,
}

fn glued_norm(
    ctx: &SpliceContext,
    v: &Glued,
    w: &AntiGlued,
    m: usize,
    scale: &ScScale,
    mode: NeckNormMode,
) -> Result<f64> {
    match (v, w) {
        (Glued::Pair(p), AntiGlued::Zero) => pair_norm(p, m, scale),
        (Glued::Neck(q), AntiGlued::Neck(p)) => {
            let _ = ctx;
            neck_norm(q, p, ScScale::fiber_order(m), scale.delta(m)?, mode)
        }
        _ => Err(Error::Incompatible("mismatched gluing output".to_string())),
    }
}

/// The estimated ratio for one input.
pub fn ratio(ctx: &SpliceContext, x: &MapPair, kind: Estimate, m: usize, scale: &ScScale) -> Result<f64> {
    let num = match kind {
        Estimate::HatGluing => {
            let (v, w) = ctx.hat_total_glue(x)?;
            glued_norm(ctx, &v, &w, m, scale, NeckNormMode::Hat)?
        }
        Estimate::Gluing => {
            let (v, w) = ctx.total_glue(x)?;
            glued_norm(ctx, &v, &w, m, scale, NeckNormMode::G)?
        }
        Estimate::TransferDs => pair_norm(&ctx.transfer_ds(x)?, m, scale)?,
        Estimate::TransferDt => pair_norm(&ctx.transfer_dt(x)?, m, scale)?,
        Estimate::TransferCs => pair_norm(&ctx.transfer_cs(x)?, m, scale)?,
        Estimate::TransferCt => pair_norm(&ctx.transfer_ct(x)?, m, scale)?,
    };
    let den = pair_norm(x, m, scale)?;
    if den == 0.0 {
        return Err(Error::InvalidParameter("zero input pair".to_string()));
    }
    Ok(num / den)
}

/// Seeded random inputs for an estimate. The decay rate exceeds the
/// largest weight used so the inputs lie in every level up to `max_level`.
pub fn sample_inputs(seed: u64, layout: &PairLayout, kind: Estimate, count: usize, max_level: usize) -> Result<Vec<MapPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decay = ScScale::Default.delta(max_level)? + 1.0;
    (0..count)
        .map(|_| smooth_pair(&mut rng, layout, kind.input_space(), decay))
        .collect()
}

/// Envelope of ratios over `inputs` at one parameter.
pub fn ratio_row(
    a: &GluingParameter,
    layout: &PairLayout,
    inputs: &[MapPair],
    kind: Estimate,
    m: usize,
    scale: &ScScale,
) -> Result<RatioRow> {
    let ctx = SpliceContext::new(*a, *layout)?;
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    for x in inputs {
        let r = ratio(&ctx, x, kind, m, scale)?;
        lower = lower.min(r);
        upper = upper.max(r);
    }
    Ok(RatioRow {
        modulus: a.modulus_value(),
        length: ctx.length().unwrap_or(0.0),
        lower,
        upper,
    })
}

/// Envelopes over a parameter grid, with the same inputs at every parameter.
pub fn ratio_sweep(
    params: &[GluingParameter],
    layout: &PairLayout,
    kind: Estimate,
    m: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<RatioRow>> {
    let inputs = sample_inputs(seed, layout, kind, count, m)?;
    params
        .iter()
        .map(|a| ratio_row(a, layout, &inputs, kind, m, &ScScale::Default))
        .collect()
}

/// `max upper / min lower` over the rows.
pub fn spread(rows: &[RatioRow]) -> f64 {
    let hi = rows.iter().map(|r| r.upper).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.lower).fold(f64::INFINITY, f64::min);
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::GluingProfile;

    #[test]
    fn estimate_names_round_trip() {
        for e in Estimate::ALL {
            assert_eq!(Estimate::parse(e.name()), Some(e));
        }
        assert_eq!(Estimate::parse("nope"), None);
    }

    #[test]
    fn degenerate_hat_gluing_ratio_is_one() {
        let l = PairLayout::with_density(4.0, 8, 16, 2).unwrap();
        let a = GluingParameter::zero(GluingProfile::Exponential);
        let inputs = sample_inputs(1, &l, Estimate::HatGluing, 3, 1).unwrap();
        let row = ratio_row(&a, &l, &inputs, Estimate::HatGluing, 0, &ScScale::Default).unwrap();
        assert!((row.lower - 1.0).abs() < 1e-14 && (row.upper - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hat_gluing_ratios_are_bounded_over_lengths() {
        let l = PairLayout::with_density(12.0, 8, 16, 2).unwrap();
        let params: Vec<_> = [5.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|&r| GluingParameter::from_length(GluingProfile::Exponential, r, 0.25).unwrap())
            .collect();
        for m in [0, 1] {
            let rows = ratio_sweep(&params, &l, Estimate::HatGluing, m, 6, 11).unwrap();
            assert!(spread(&rows) <= 10.0, "{rows:?}");
        }
    }
}
