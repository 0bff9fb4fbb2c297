use polyglue::grid_csv::{read_grid, read_neck, read_pair, write_grid, write_neck};
use polyglue::surface_json::{emit_surface, parse_surface};
use polyglue_core::cylinder::{Asymptote, CylinderMap, Grid, PairLayout, Space};
use polyglue_core::profile::{GluingParameter, GluingProfile};
use polyglue_core::sample::random_pair;
use polyglue_core::splice::SpliceContext;
use polyglue_core::surface::random_surface;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn asymptote(kind: u8, c: Vec<f64>) -> Asymptote {
    match kind {
        0 => Asymptote::None,
        1 => Asymptote::Constant(c),
        _ => Asymptote::Antipodal(c),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn surface_json_round_trips(seed in any::<u64>(), max in 1usize..=8) {
        let s = random_surface(&mut ChaCha8Rng::seed_from_u64(seed), max);
        let back = parse_surface(&emit_surface(&s)).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.canonical_form().unwrap(), s.canonical_form().unwrap());
    }

    #[test]
    fn grid_csv_round_trips_bit_for_bit(
        n_s in 4usize..8,
        n_t in 4usize..9,
        d in 1usize..4,
        kind in 0u8..3,
        seed in any::<u64>(),
        scale in prop_oneof![Just(1e-300), Just(1e-12), Just(1.0), Just(1e200)],
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || scale * rand::Rng::random_range(&mut rng, -1.0..1.0);
        let values: Vec<f64> = (0..n_s * n_t * d).map(|_| draw()).collect();
        let c: Vec<f64> = (0..d).map(|_| draw()).collect();
        let u = CylinderMap::new(Grid::new(0.0, 1.5, n_s, n_t).unwrap(), d, values, asymptote(kind, c)).unwrap();
        let back = read_grid(&write_grid(&u)).unwrap();
        prop_assert_eq!(back.values(), u.values());
        prop_assert_eq!(back.asympt(), u.asympt());
        prop_assert_eq!(back.grid(), u.grid());
    }

    #[test]
    fn neck_csv_round_trips(seed in any::<u64>(), length in prop_oneof![4.7f64..5.2, 16.0f64..30.0], twist in 0.0f64..1.0) {
        let layout = PairLayout::with_density(4.0, 4, 8, 2).unwrap();
        let a = GluingParameter::from_length(GluingProfile::Exponential, length, twist).unwrap();
        let ctx = SpliceContext::new(a, layout).unwrap();
        let h = random_pair(&mut ChaCha8Rng::seed_from_u64(seed), &layout, Space::E);
        let (v, w) = ctx.total_glue(&h).unwrap();
        for n in [v.neck().unwrap(), w.neck().unwrap()] {
            let back = read_neck(&write_neck(n), n.axis()).unwrap();
            prop_assert_eq!(back.max_abs_diff(n), 0.0);
        }
    }
}

#[test]
fn pair_space_follows_the_constant() {
    let layout = PairLayout::with_density(2.0, 4, 8, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for space in [Space::E, Space::F] {
        let h = random_pair(&mut rng, &layout, space);
        let back = read_pair(&write_grid(&h.plus), &write_grid(&h.minus)).unwrap();
        assert_eq!(back.space(), space);
        assert_eq!(back.max_abs_diff(&h), 0.0);
    }
}

#[test]
fn neck_file_for_another_axis_is_rejected() {
    let layout = PairLayout::with_density(4.0, 4, 8, 2).unwrap();
    let h = random_pair(&mut ChaCha8Rng::seed_from_u64(2), &layout, Space::E);
    let at = |len| SpliceContext::with_length(len, 0.0, layout).unwrap();
    let (v, _) = at(16.0).total_glue(&h).unwrap();
    let text = write_neck(v.neck().unwrap());
    assert!(read_neck(&text, at(18.0).z_axis().unwrap()).is_err());
    assert!(read_neck(&text, at(16.0).c_axis().unwrap()).is_err());
}
