//! Gluing profiles, gluing parameters, sc-scales and bi-levels.
//!
//! Exponential-profile neck lengths grow like `e^{1/r}` and leave the f64
//! range well before `r` becomes small, and the converted logarithmic moduli
//! `e^{-2 pi R}` underflow even sooner. A [`Modulus`] therefore stores
//! `ln(-ln r / 2 pi)`, the logarithm of the logarithmic-profile length, which
//! stays representable for every modulus in `(0, 1)`.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::math::{self, E, PI, TAU};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GluingProfile {
    /// `r -> -ln(r) / 2 pi`
    Logarithmic,
    /// `r -> e^{1/r} - e`
    Exponential,
}

/// A modulus `r` in `(0, 1]`, stored in log-log form together with `r`
/// itself (zero once it underflows).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Modulus {
    /// `ln(-ln(r) / 2 pi)`; `-inf` encodes `r = 1`.
    ln_log_length: f64,
    // kept exactly when given, so 1/r does not inherit the log-log roundoff
    value: f64,
}

impl Modulus {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::ModulusOutOfRange(r));
        }
        Ok(Self {
            ln_log_length: math::ln(-math::ln(r) / TAU),
            value: r,
        })
    }

    /// The modulus whose logarithmic-profile length is `e^{ln_length}`.
    pub fn from_ln_log_length(ln_length: f64) -> Self {
        Self {
            ln_log_length: ln_length,
            value: math::exp(-TAU * math::exp(ln_length)),
        }
    }

    /// `r` itself (underflows to 0 for extremely small moduli).
    pub fn value(&self) -> f64 {
        self.value
    }

    /// `ln(-ln r / 2 pi)`.
    pub fn ln_log_length(&self) -> f64 {
        self.ln_log_length
    }

    /// `-ln r`, which stays finite when `r` underflows.
    pub fn neg_ln(&self) -> f64 {
        TAU * math::exp(self.ln_log_length)
    }
}

/// `phi(r)` for a profile. Requires `0 < r <= 1`.
pub fn gluing_length(profile: GluingProfile, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::ModulusOutOfRange(r));
    }
    Ok(match profile {
        GluingProfile::Logarithmic => -math::ln(r) / TAU,
        // e^{1/r} - e = e (e^{1/r - 1} - 1), accurate near r = 1
        GluingProfile::Exponential => E * math::expm1(1.0 / r - 1.0),
    })
}

/// `phi^{-1}(R)` for a profile. Requires `R >= 0`.
pub fn inverse_length(profile: GluingProfile, length: f64) -> Result<f64> {
    if !(length >= 0.0) {
        return Err(Error::NegativeLength(length));
    }
    Ok(match profile {
        GluingProfile::Logarithmic => math::exp(-TAU * length),
        // 1 / ln(e + R) = 1 / (1 + ln(1 + R/e))
        GluingProfile::Exponential => 1.0 / (1.0 + math::ln1p(length / E)),
    })
}

/// `ln phi(r)` computed from a stored modulus, valid where `phi(r)` itself
/// overflows. Returns `-inf` for `r = 1`.
pub fn ln_gluing_length(profile: GluingProfile, m: Modulus) -> f64 {
    match profile {
        GluingProfile::Logarithmic => m.ln_log_length,
        GluingProfile::Exponential => {
            let r = m.value();
            if r == 0.0 {
                return f64::INFINITY;
            }
            let x = 1.0 / r;
            // ln(e^x - e) = x + ln(1 - e^{1-x})
            if x == 1.0 {
                f64::NEG_INFINITY
            } else {
                x + math::ln(-math::expm1(1.0 - x))
            }
        }
    }
}

/// A gluing parameter `a = |a| e^{-2 pi i theta}` with `|a| < 1`, tagged with
/// the profile used to turn `|a|` into a neck length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GluingParameter {
    profile: GluingProfile,
    modulus: Option<Modulus>,
    twist: f64,
}

impl GluingParameter {
    pub fn zero(profile: GluingProfile) -> Self {
        Self {
            profile,
            modulus: None,
            twist: 0.0,
        }
    }

    /// From the complex number `re + i im`.
    pub fn from_complex(profile: GluingProfile, re: f64, im: f64) -> Result<Self> {
        let r = math::hypot(re, im);
        if !r.is_finite() || r >= 1.0 {
            return Err(Error::InvalidParameter("|a| must be < 1".to_string()));
        }
        if r == 0.0 {
            return Ok(Self::zero(profile));
        }
        let twist = math::wrap_unit(-math::atan2(im, re) / TAU);
        Ok(Self {
            profile,
            modulus: Some(Modulus::new(r)?),
            twist,
        })
    }

    /// From `|a|` and the twist (reduced mod 1).
    pub fn polar(profile: GluingProfile, modulus: f64, twist: f64) -> Result<Self> {
        if modulus == 0.0 {
            return Ok(Self::zero(profile));
        }
        if !(modulus > 0.0 && modulus < 1.0) || !twist.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "modulus {modulus} must lie in [0, 1), twist must be finite"
            )));
        }
        Ok(Self {
            profile,
            modulus: Some(Modulus::new(modulus)?),
            twist: math::wrap_unit(twist),
        })
    }

    /// From a stored modulus and twist.
    pub fn from_modulus(profile: GluingProfile, modulus: Modulus, twist: f64) -> Result<Self> {
        if !(modulus.ln_log_length > f64::NEG_INFINITY) || modulus.ln_log_length.is_nan() {
            return Err(Error::InvalidParameter("|a| must be < 1".to_string()));
        }
        Ok(Self {
            profile,
            modulus: Some(modulus),
            twist: math::wrap_unit(twist),
        })
    }

    /// The nonzero parameter whose neck length is `length` (must be > 0).
    pub fn from_length(profile: GluingProfile, length: f64, twist: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidParameter("neck length must be positive".to_string()));
        }
        let modulus = match profile {
            GluingProfile::Logarithmic => Modulus::from_ln_log_length(math::ln(length)),
            GluingProfile::Exponential => Modulus::new(inverse_length(profile, length)?)?,
        };
        Self::from_modulus(profile, modulus, twist)
    }

    pub fn profile(&self) -> GluingProfile {
        self.profile
    }

    pub fn is_zero(&self) -> bool {
        self.modulus.is_none()
    }

    pub fn modulus(&self) -> Option<Modulus> {
        self.modulus
    }

    /// `|a|` as a float (0 for `a = 0`).
    pub fn modulus_value(&self) -> f64 {
        self.modulus.map_or(0.0, |m| m.value())
    }

    /// Twist in `[0, 1)`.
    pub fn twist(&self) -> f64 {
        self.twist
    }

    /// `(Re a, Im a)`.
    pub fn complex(&self) -> (f64, f64) {
        let r = self.modulus_value();
        let angle = -TAU * self.twist;
        (r * math::cos(angle), r * math::sin(angle))
    }

    /// Neck length `R = phi(|a|)`; `None` for `a = 0`, possibly `+inf`.
    pub fn length(&self) -> Option<f64> {
        self.modulus.map(|m| match self.profile {
            GluingProfile::Logarithmic => math::exp(m.ln_log_length),
            GluingProfile::Exponential => {
                let r = m.value();
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    E * math::expm1(1.0 / r - 1.0)
                }
            }
        })
    }

    /// `ln R`, finite even when `R` overflows.
    pub fn ln_length(&self) -> Option<f64> {
        self.modulus.map(|m| ln_gluing_length(self.profile, m))
    }
}

/// Converts an exponential-profile parameter into the logarithmic-profile
/// parameter with the same neck length: `|a~| = e^{-2 pi (e^{1/|a|} - e)}`,
/// twist unchanged.
pub fn profile_convert(a: &GluingParameter) -> GluingParameter {
    match a.modulus {
        None => GluingParameter::zero(GluingProfile::Logarithmic),
        Some(m) => GluingParameter {
            profile: GluingProfile::Logarithmic,
            modulus: Some(Modulus::from_ln_log_length(ln_gluing_length(
                GluingProfile::Exponential,
                m,
            ))),
            twist: a.twist,
        },
    }
}

/// Rounds a length up to the next multiple of `step` (used to put `R/2` on a
/// grid lattice).
pub fn snap_length_up(length: f64, step: f64) -> f64 {
    let k = math::ceil(length / step - 1e-9);
    k * step
}

/// Number of quadrant coordinates equal to zero. The first `quadrant` entries
/// of `coords` are quadrant coordinates, the rest are free.
pub fn degeneration_index(coords: &[f64], quadrant: usize) -> Result<usize> {
    let q = &coords[..quadrant.min(coords.len())];
    if let Some(i) = q.iter().position(|&x| x < 0.0 || x.is_nan()) {
        return Err(Error::NegativeCoordinate(i));
    }
    Ok(q.iter().filter(|&&x| x == 0.0).count())
}

/// Bi-level `(m, k)` of the strong bundle filtration: `0 <= k <= m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLevel {
    pub m: usize,
    pub k: usize,
}

impl BiLevel {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        if bilevel_valid(m, k) {
            Ok(Self { m, k })
        } else {
            Err(Error::InvalidScale(alloc::format!("bi-level ({m}, {k}) has k > m + 1")))
        }
    }
}

pub fn bilevel_valid(m: usize, k: usize) -> bool {
    k <= m + 1
}

/// Weight sequence `delta_0 < delta_1 < ... < 2 pi` with derivative-order
/// offsets for base (E) and fiber (F) spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum ScScale {
    /// `delta_m = 2 pi - pi 2^{-m}`.
    Default,
    Explicit(Vec<f64>),
}

impl ScScale {
    pub fn explicit(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidScale("no weights".to_string()));
        }
        if deltas.iter().any(|&d| !(d > 0.0 && d < TAU)) {
            return Err(Error::InvalidScale("weights must lie in (0, 2 pi)".to_string()));
        }
        if deltas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidScale("weights must increase strictly".to_string()));
        }
        Ok(Self::Explicit(deltas))
    }

    pub fn delta(&self, m: usize) -> Result<f64> {
        match self {
            Self::Default => Ok(TAU - PI * math::powi(2.0, -(m as i32))),
            Self::Explicit(d) => d
                .get(m)
                .copied()
                .ok_or_else(|| Error::InvalidScale(alloc::format!("no weight for level {m}"))),
        }
    }

    /// Derivative order of level `m` in the base space (`m + 3`).
    pub fn base_order(m: usize) -> usize {
        m + 3
    }

    /// Derivative order of level `m` in the fiber space (`m + 2`).
    pub fn fiber_order(m: usize) -> usize {
        m + 2
    }
}
