//! Parameter sweeps of the uniform-bound ratio estimates.

use std::f64::consts::TAU;

use anyhow::{anyhow, bail, ensure, Context, Result};
use polyglue_core::cylinder::{MapPair, PairLayout};
use polyglue_core::estimates::{ratio_row, Estimate, RatioRow};
use polyglue_core::profile::{GluingParameter, GluingProfile, ScScale};
use polyglue_core::sample::smooth_pair;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::report::{num, Series, Table};

/// Environment variable overriding the default sampling resolution, as
/// `PER_UNITxN_T` (for example `8x16`).
pub const GRID_ENV: &str = "POLYGLUE_GRID";

/// Nodes per unit length in `s` and nodes around the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub per_unit: usize,
    pub n_t: usize,
}

impl Resolution {
    pub const DEFAULT: Self = Self { per_unit: 8, n_t: 16 };

    pub fn parse(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| anyhow!("resolution must look like 8x16, got {s:?}"))?;
        let r = Self {
            per_unit: a.trim().parse().with_context(|| format!("bad per-unit count in {s:?}"))?,
            n_t: b.trim().parse().with_context(|| format!("bad circle count in {s:?}"))?,
        };
        ensure!(r.per_unit >= 1 && r.n_t >= 4, "resolution {s:?} is too coarse");
        Ok(r)
    }

    /// The default, or the value of [`GRID_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(GRID_ENV) {
            Ok(v) if !v.trim().is_empty() => Self::parse(&v).with_context(|| format!("in {GRID_ENV}")),
            _ => Ok(Self::DEFAULT),
        }
    }

    pub fn layout(&self, s_max: f64, dim: usize) -> Result<PairLayout> {
        Ok(PairLayout::with_density(s_max, self.per_unit, self.n_t, dim)?)
    }
}

/// A gluing parameter given by its modulus or by its neck length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPoint {
    Modulus(f64),
    Length(f64),
}

impl GridPoint {
    pub fn parameter(&self, profile: GluingProfile, twist: f64) -> Result<GluingParameter> {
        Ok(match *self {
            GridPoint::Modulus(r) => GluingParameter::polar(profile, r, twist)?,
            GridPoint::Length(len) => GluingParameter::from_length(profile, len, twist)?,
        })
    }
}

fn power_of_two(s: &str) -> Result<i32> {
    let j = s
        .trim()
        .strip_prefix("2^-")
        .ok_or_else(|| anyhow!("expected 2^-j, got {s:?}"))?;
    j.parse().with_context(|| format!("bad exponent in {s:?}"))
}

/// Parses a comma-separated list of grid points. Items are a modulus
/// (`0.25`), a power `2^-3`, an inclusive range `2^-1..2^-8`, or a neck
/// length `R=20`. Moduli must lie in `(0, 1/2]`.
pub fn parse_a_grid(spec: &str) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(len) = item.strip_prefix("R=") {
            let len: f64 = len.parse().with_context(|| format!("bad length in {item:?}"))?;
            ensure!(len.is_finite() && len > 0.0, "neck length must be positive in {item:?}");
            out.push(GridPoint::Length(len));
        } else if let Some((a, b)) = item.split_once("..") {
            let (j0, j1) = (power_of_two(a)?, power_of_two(b)?);
            let step = if j1 >= j0 { 1 } else { -1 };
            let mut j = j0;
            loop {
                out.push(GridPoint::Modulus(2f64.powi(-j)));
                if j == j1 {
                    break;
                }
                j += step;
            }
        } else if item.starts_with("2^-") {
            out.push(GridPoint::Modulus(2f64.powi(-power_of_two(item)?)));
        } else {
            out.push(GridPoint::Modulus(item.parse().with_context(|| format!("bad modulus {item:?}"))?));
        }
    }
    ensure!(!out.is_empty(), "empty a-grid");
    for p in &out {
        if let GridPoint::Modulus(r) = p {
            ensure!(*r > 0.0 && *r <= 0.5, "modulus {r} outside (0, 1/2]");
        }
    }
    Ok(out)
}

/// Weight scale whose level `m` weight is `delta` (lower levels are spaced
/// evenly below it).
pub fn scale_with(delta: f64, m: usize) -> Result<ScScale> {
    ensure!(delta > 0.0 && delta < TAU, "weight {delta} outside (0, 2 pi)");
    let deltas = (0..=m).map(|k| delta * (k + 1) as f64 / (m + 1) as f64).collect();
    Ok(ScScale::explicit(deltas)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub a_grid: Vec<GridPoint>,
    pub profile: GluingProfile,
    pub twist: f64,
    /// Weights at the sampled level; `None` uses the default scale.
    pub deltas: Vec<Option<f64>>,
    pub levels: Vec<usize>,
    pub estimates: Vec<Estimate>,
    pub resolution: Resolution,
    pub s_max: f64,
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!((0.0..1.0).contains(&self.twist), "twist must lie in [0, 1)");
        ensure!(self.count > 0, "need at least one sample");
        ensure!(!self.levels.is_empty() && !self.estimates.is_empty(), "nothing to sweep");
        for d in self.deltas.iter().flatten() {
            ensure!(*d > 0.0 && *d < TAU, "weight {d} outside (0, 2 pi)");
        }
        Ok(())
    }

    fn scale(&self, delta: Option<f64>, m: usize) -> Result<ScScale> {
        match delta {
            Some(d) => scale_with(d, m),
            None => Ok(ScScale::Default),
        }
    }
}

/// One sweep cell: an estimate at one weight and level over the a-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGroup {
    pub estimate: Estimate,
    pub delta: f64,
    pub m: usize,
    pub rows: Vec<RatioRow>,
}

impl SweepGroup {
    /// `max upper / min lower`.
    pub fn spread(&self) -> f64 {
        polyglue_core::estimates::spread(&self.rows)
    }

    pub fn label(&self) -> String {
        format!("{} delta={:.6} m={}", self.estimate.name(), self.delta, self.m)
    }
}

/// Seeded inputs decaying faster than `delta`, shared by every parameter.
fn inputs(spec: &SweepSpec, layout: &PairLayout, kind: Estimate, delta: f64) -> Result<Vec<MapPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|_| Ok(smooth_pair(&mut rng, layout, kind.input_space(), delta + 1.0)?))
        .collect()
}

/// Runs every cell; cells and parameters are evaluated on `jobs` threads and
/// the output order does not depend on the thread count.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepGroup>> {
    spec.validate()?;
    let layout = spec.resolution.layout(spec.s_max, spec.dim)?;
    let params = spec
        .a_grid
        .iter()
        .map(|p| p.parameter(spec.profile, spec.twist))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for &estimate in &spec.estimates {
        for &delta in &spec.deltas {
            for &m in &spec.levels {
                let scale = spec.scale(delta, m)?;
                let d = scale.delta(m)?;
                cells.push((estimate, d, m, scale, inputs(spec, &layout, estimate, d)?));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let work: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..params.len()).map(move |a| (c, a)))
        .collect();
    let rows: Vec<RatioRow> = pool.install(|| {
        work.par_iter()
            .map(|&(c, a)| {
                let (estimate, _, m, scale, xs) = &cells[c];
                ratio_row(&params[a], &layout, xs, *estimate, *m, scale).map_err(anyhow::Error::from)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = rows.into_iter();
    Ok(cells
        .into_iter()
        .map(|(estimate, delta, m, _, _)| SweepGroup {
            estimate,
            delta,
            m,
            rows: rows.by_ref().take(params.len()).collect(),
        })
        .collect())
}

pub fn sweep_table(groups: &[SweepGroup]) -> Table {
    let mut t = Table::new(["estimate", "delta", "m", "abs_a", "R", "ratio_lower", "ratio_upper"]);
    for g in groups {
        for r in &g.rows {
            t.row([
                g.estimate.name().to_string(),
                num(g.delta),
                g.m.to_string(),
                num(r.modulus),
                num(r.length),
                num(r.lower),
                num(r.upper),
            ]);
        }
    }
    t
}

pub fn sweep_series(groups: &[SweepGroup]) -> Vec<Series> {
    groups
        .iter()
        .map(|g| Series {
            label: g.label(),
            length: g.rows.iter().map(|r| r.length).collect(),
            lower: g.rows.iter().map(|r| r.lower).collect(),
            upper: g.rows.iter().map(|r| r.upper).collect(),
        })
        .collect()
}

pub fn parse_estimate(s: &str) -> Result<Estimate> {
    Estimate::parse(s).ok_or_else(|| {
        let names: Vec<_> = Estimate::ALL.iter().map(|e| e.name()).collect();
        anyhow!("unknown estimate {s:?}; expected one of {}", names.join(", "))
    })
}

pub fn parse_profile(s: &str) -> Result<GluingProfile> {
    match s {
        "exp" | "exponential" => Ok(GluingProfile::Exponential),
        "log" | "logarithmic" => Ok(GluingProfile::Logarithmic),
        _ => bail!("unknown profile {s:?}; expected exp or log"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_grid_grammar() {
        let g = parse_a_grid("2^-1..2^-3, 0.3, R=5").unwrap();
        assert_eq!(
            g,
            vec![
                GridPoint::Modulus(0.5),
                GridPoint::Modulus(0.25),
                GridPoint::Modulus(0.125),
                GridPoint::Modulus(0.3),
                GridPoint::Length(5.0)
            ]
        );
        assert_eq!(parse_a_grid("2^-2..2^-1").unwrap().len(), 2);
        assert!(parse_a_grid("0.75").is_err());
        assert!(parse_a_grid("").is_err());
        assert!(parse_a_grid("R=-1").is_err());
    }

    #[test]
    fn resolution_parsing() {
        assert_eq!(Resolution::parse("4x32").unwrap(), Resolution { per_unit: 4, n_t: 32 });
        assert!(Resolution::parse("4").is_err());
        assert!(Resolution::parse("4x2").is_err());
    }

    #[test]
    fn explicit_scale_hits_the_weight() {
        let s = scale_with(2.0, 2).unwrap();
        assert_eq!(s.delta(2).unwrap(), 2.0);
        assert!(s.delta(0).unwrap() < s.delta(1).unwrap());
        assert!(scale_with(7.0, 0).is_err());
    }
}
