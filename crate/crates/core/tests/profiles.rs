#![allow(clippy::excessive_precision)]

use polyglue_core::profile::{
    gluing_length, inverse_length, profile_convert, GluingParameter, GluingProfile, ScScale,
};
use proptest::prelude::*;

use GluingProfile::{Exponential, Logarithmic};

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

// Reference values from 25-digit arithmetic.
const LENGTHS: [(GluingProfile, f64, f64); 5] = [
    (Exponential, 0.5, 4.670774270471604991870),
    (Exponential, 0.2, 145.6948772741175581857553),
    (Exponential, 0.1, 22023.74751297825747172254),
    (Logarithmic, 0.3, 0.1916182231566839814376581),
    (Logarithmic, 0.5, 0.1103178000763258),
];

#[test]
fn lengths_match_reference_values() {
    for (p, r, want) in LENGTHS {
        assert!(rel(gluing_length(p, r).unwrap(), want) < 4e-15, "{p:?} at {r}");
    }
    let third = gluing_length(Exponential, 1.0 / 3.0).unwrap();
    assert!(rel(third, 17.36725509472862250556824) < 1e-14);
}

#[test]
fn inverses_match_reference_values() {
    assert!(rel(inverse_length(Exponential, 10.0).unwrap(), 0.3932300766934224999638253) < 4e-15);
    assert!(rel(inverse_length(Logarithmic, 2.5).unwrap(), 1.507017275390064610748e-7) < 1e-14);
    assert_eq!(inverse_length(Exponential, 0.0).unwrap(), 1.0);
    assert!(inverse_length(Logarithmic, -1.0).is_err());
}

#[test]
fn out_of_range_moduli_are_rejected() {
    for r in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(gluing_length(Exponential, r).is_err());
        assert!(gluing_length(Logarithmic, r).is_err());
    }
}

#[test]
fn converting_the_half_modulus() {
    let a = GluingParameter::polar(Exponential, 0.5, 0.3).unwrap();
    let b = profile_convert(&a);
    assert_eq!(b.profile(), Logarithmic);
    assert!(rel(b.modulus_value(), 1.797264774643907970999e-13) < 1e-13);
    assert_eq!(b.twist(), 0.3);
    assert!(rel(b.length().unwrap(), a.length().unwrap()) < 1e-14);
}

#[test]
fn converted_modulus_below_the_smallest_float_keeps_its_length() {
    let a = GluingParameter::polar(Exponential, 0.05, 0.0).unwrap();
    let b = profile_convert(&a);
    assert_eq!(b.modulus_value(), 0.0);
    // ln R with R = e^20 - e
    let want = 20.0 + (-(1.0 - 20.0f64).exp_m1()).ln();
    assert!(rel(b.ln_length().unwrap(), want) < 1e-14);
}

#[test]
fn default_scale_increases_toward_two_pi() {
    let s = ScScale::Default;
    let d: Vec<f64> = (0..12).map(|m| s.delta(m).unwrap()).collect();
    assert_eq!(d[0], std::f64::consts::PI);
    assert!(d.windows(2).all(|w| w[0] < w[1]));
    assert!(d.iter().all(|&x| x < std::f64::consts::TAU));
    assert!(ScScale::explicit(vec![1.0, 1.0]).is_err());
}

proptest! {
    #[test]
    fn inverse_undoes_length(r in 1e-3f64..1.0, log in any::<bool>()) {
        let p = if log { Logarithmic } else { Exponential };
        let len = gluing_length(p, r).unwrap();
        prop_assert!(rel(inverse_length(p, len).unwrap(), r) <= 1e-12);
    }

    #[test]
    fn length_decreases_with_modulus(r in 1e-3f64..0.99, f in 1.001f64..1.5) {
        let s = (r * f).min(1.0);
        for p in [Exponential, Logarithmic] {
            prop_assert!(gluing_length(p, s).unwrap() < gluing_length(p, r).unwrap());
        }
    }

    #[test]
    fn polar_and_complex_agree(r in 1e-6f64..0.999, twist in 0.0f64..1.0) {
        let a = GluingParameter::polar(Exponential, r, twist).unwrap();
        let (re, im) = a.complex();
        let b = GluingParameter::from_complex(Exponential, re, im).unwrap();
        prop_assert!(rel(b.modulus_value(), r) <= 1e-12);
        let dt = (b.twist() - twist).abs();
        prop_assert!(dt.min(1.0 - dt) <= 1e-9);
    }

    #[test]
    fn conversion_keeps_length(r in 0.05f64..0.999, twist in 0.0f64..1.0) {
        let a = GluingParameter::polar(Exponential, r, twist).unwrap();
        let b = profile_convert(&a);
        prop_assert_eq!(b.twist(), twist);
        let d = b.ln_length().unwrap() - a.ln_length().unwrap();
        prop_assert!(d.abs() <= 1e-12 * a.ln_length().unwrap().abs().max(1.0));
    }
}
