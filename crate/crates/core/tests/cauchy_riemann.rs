use std::f64::consts::{PI, TAU};

use polyglue_core::cr::constraint::{coordinate_subspace, grid_search};
use polyglue_core::cr::contraction::{contraction_sweep, model_structure};
use polyglue_core::cr::linear::{dense_singular_values, manufactured_error, Manufactured, NEAR_ZERO};
use polyglue_core::cr::operators::{filled_section_parts, filled_section_residual, resolved_diff};
use polyglue_core::cr::*;
use polyglue_core::cylinder::{Asymptote, CylinderMap, Grid, MapPair, PairLayout, Space};
use polyglue_core::neck::NeckMap;
use polyglue_core::profile::{GluingParameter, GluingProfile};
use polyglue_core::sample::{exact_parameter, random_pair};
use polyglue_core::splice::{oracle, AntiGlued, Glued, SpliceContext};
use polyglue_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn j0(d: usize) -> ComplexStructureField {
    ComplexStructureField::standard(d).unwrap()
}

fn cylinder(n_s: usize, n_t: usize, f: impl FnMut(f64, f64, &mut [f64])) -> CylinderMap {
    let grid = Grid::new(0.0, 2.0, n_s, n_t).unwrap();
    CylinderMap::from_fn(grid, 2, Asymptote::None, f).unwrap()
}

/// `e^{2 pi (s - 1 + i t)}` on `[0, 1] x S^1`.
fn holomorphic(n_s: usize) -> CylinderMap {
    let grid = Grid::new(0.0, 1.0, n_s, 32).unwrap();
    CylinderMap::from_fn(grid, 2, Asymptote::None, |s, t, o| {
        let r = (TAU * (s - 1.0)).exp();
        o[0] = r * (TAU * t).cos();
        o[1] = r * (TAU * t).sin();
    })
    .unwrap()
}

fn max_abs(u: &CylinderMap) -> f64 {
    u.samples().data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn dbar0_of_constant_vanishes() {
    let u = cylinder(17, 8, |_, _, o| o.copy_from_slice(&[0.4, -1.2]));
    assert_eq!(u.dbar0(&j0(2)).unwrap().samples().data.iter().fold(0.0f64, |m, x| m.max(x.abs())), 0.0);
}

#[test]
fn dbar0_annihilates_holomorphic_exponential() {
    let err = max_abs(&holomorphic(513).dbar0(&j0(2)).unwrap());
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn dbar0_of_linear_map() {
    let u = cylinder(17, 8, |s, _, o| o.copy_from_slice(&[s, 0.0]));
    for row in u.dbar0(&j0(2)).unwrap().samples().data.chunks(2) {
        assert!((row[0] - 1.0).abs() < 1e-12 && row[1].abs() < 1e-12);
    }
}

#[test]
fn cr_apply_examples() {
    // u = (s, -t): u_s = (1, 0), u_t = (0, -1)
    let p = cr_pointwise(&j0(2), &[0.3, -0.2], &[1.0, 0.0], &[0.0, -1.0]);
    assert_eq!(p, vec![1.0, 0.0]);
    let err = max_abs(&holomorphic(513).cr_apply(&j0(2)).unwrap());
    assert!(err <= 1e-3, "{err}");
}

fn symbolic_error(n_s: usize) -> f64 {
    let j = model_structure(2, 0.3).unwrap();
    let f = |s: f64, t: f64| {
        let (c, sn) = ((TAU * t).cos(), (TAU * t).sin());
        (
            [0.5 * s.sin() * c + 0.2 * s, 0.3 * (0.7 * s).cos() * sn],
            [0.5 * s.cos() * c + 0.2, -0.21 * (0.7 * s).sin() * sn],
            [-0.5 * TAU * s.sin() * sn, 0.3 * TAU * (0.7 * s).cos() * c],
        )
    };
    let u = cylinder(n_s, 16, |s, t, o| o.copy_from_slice(&f(s, t).0));
    let out = u.cr_apply(&j).unwrap();
    let g = u.grid();
    let mut err: f64 = 0.0;
    for i in 0..g.n_s {
        for k in 0..g.n_t {
            let (s, t) = (g.s(i), k as f64 / g.n_t as f64);
            let (v, vs, vt) = f(s, t);
            let exact = cr_pointwise(&j, &v, &vs, &vt);
            let row = &out.samples().row(i)[2 * k..2 * k + 2];
            err = err.max((row[0] - exact[0]).abs()).max((row[1] - exact[1]).abs());
        }
    }
    err
}

#[test]
fn cr_apply_matches_symbolic_derivatives() {
    let coarse = symbolic_error(65);
    let fine = symbolic_error(129);
    assert!(fine <= 1e-3, "{fine}");
    // second order in s, spectral in t
    let order = (coarse / fine).log2();
    assert!((1.7..2.3).contains(&order), "observed order {order}");
}

fn layout() -> PairLayout {
    PairLayout::with_density(4.0, 8, 16, 2).unwrap()
}

fn contexts() -> Vec<SpliceContext> {
    let mut out = vec![SpliceContext::new(GluingParameter::zero(GluingProfile::Exponential), layout()).unwrap()];
    for j in 1..=4 {
        out.push(SpliceContext::new(exact_parameter(j, 0.25, &layout()).unwrap(), layout()).unwrap());
    }
    out
}

#[test]
fn filled_section_matches_pointwise_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let j = model_structure(2, 0.3).unwrap();
    for ctx in contexts() {
        for _ in 0..3 {
            let u = MapPair::constant(&layout(), Space::E, &[0.2, -0.1]);
            let h = random_pair(&mut rng, &layout(), Space::E);
            let h = h.add_scaled(-1.0, &MapPair::constant(&layout(), Space::E, h.constant_value()));
            let xi = filled_section(&ctx, &u, &h, &j).unwrap();
            let total = u.add_scaled(1.0, &h);
            let direct = match (ctx.plus_glue(&total).unwrap(), ctx.minus_glue(&h).unwrap()) {
                (Glued::Pair(p), AntiGlued::Zero) => p.cr_apply(&j).unwrap(),
                (Glued::Neck(v), AntiGlued::Neck(w)) => {
                    let j_frozen = j.frozen_at(u.constant_value()).unwrap();
                    oracle::unglue(&ctx, &v.cr_apply(&j).unwrap(), &w.dbar0(&j_frozen).unwrap(), true).unwrap()
                }
                _ => unreachable!(),
            };
            assert!(xi.max_abs_diff(&direct) <= 1e-10);
            assert!(filled_section_residual(&ctx, &xi, &u, &h, &j).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn filled_section_on_the_splicing_core() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let j = model_structure(2, 0.3).unwrap();
    for ctx in contexts().into_iter().skip(1) {
        let u = MapPair::constant(&layout(), Space::E, &[0.1, 0.3]);
        let h = ctx.project(&random_pair(&mut rng, &layout(), Space::E)).unwrap();
        let xi = filled_section(&ctx, &u, &h, &j).unwrap();
        let (v, w) = ctx.hat_total_glue(&xi).unwrap();
        assert!(w.neck().unwrap().max_abs() <= 1e-12);
        let unfilled = ctx.plus_glue(&u.add_scaled(1.0, &h)).unwrap();
        let unfilled = unfilled.neck().unwrap().cr_apply(&j).unwrap();
        assert!(resolved_diff(&ctx, v.neck().unwrap(), &unfilled).unwrap() <= 1e-10);
        let (x1, x2) = filled_section_parts(&ctx, &u, &h, &j).unwrap();
        assert!(x1.add_scaled(1.0, &x2).max_abs_diff(&xi) <= 1e-12);
        assert!(x2.max_abs() <= 1e-12);
    }
}

#[test]
fn filled_section_vanishes_for_holomorphic_data_at_zero() {
    let l = PairLayout::with_density(2.0, 64, 32, 2).unwrap();
    let ctx = SpliceContext::new(GluingParameter::zero(GluingProfile::Exponential), l).unwrap();
    let c = [0.5, 0.25];
    let f = |sign: f64| {
        move |s: f64, t: f64, o: &mut [f64]| {
            let r = 0.1 * (-TAU * sign * s).exp();
            let ang = -sign * TAU * t;
            o[0] = c[0] + r * ang.cos();
            o[1] = c[1] + r * ang.sin();
        }
    };
    let total = MapPair::from_fns(&l, Space::E, &c, f(1.0), f(-1.0)).unwrap();
    let u = MapPair::constant(&l, Space::E, &c);
    let h = total.add_scaled(-1.0, &u);
    let xi = filled_section(&ctx, &u, &h, &j0(2)).unwrap();
    assert!(xi.max_abs() <= 1e-3, "{}", xi.max_abs());
}

#[test]
fn linear_solve_recovers_manufactured_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for r in [5.0, 10.0, 20.0] {
        let p = CrProblem::infinite_neck(r, 4.0, 64, 32, PI, j0(2)).unwrap();
        let case = Manufactured::random(2, &mut rng);
        let (err, sol) = manufactured_error(&p, &case).unwrap();
        assert!(err <= 1e-3, "R = {r}: {err}");
        assert!(sol.residual <= 1e-10);
    }
}

#[test]
fn linear_solve_is_injective() {
    for delta in [PI / 2.0, PI, 1.5 * PI] {
        for r in [5.0, 10.0, 20.0] {
            let p = CrProblem::infinite_neck(r, 4.0, 64, 32, delta, j0(2)).unwrap();
            let s = linear_cr_solve(&p, &NeckMap::zeros(&p.axis, 2)).unwrap();
            assert_eq!(s.solution.max_abs(), 0.0);
        }
    }
}

#[test]
fn condition_grows_as_the_weight_approaches_two_pi() {
    let conds: Vec<f64> = [1.0, 1.5, 1.9, 1.99]
        .iter()
        .map(|f| {
            let p = CrProblem::infinite_neck(10.0, 4.0, 64, 16, f * PI, j0(2)).unwrap();
            linear_cr_solve(&p, &NeckMap::zeros(&p.axis, 2)).unwrap().condition
        })
        .collect();
    assert!(conds.windows(2).all(|w| w[1] > w[0]), "{conds:?}");
}

#[test]
fn odd_dimensions_are_rejected() {
    assert!(matches!(ComplexStructureField::standard(3), Err(Error::OddDimension(3))));
}

#[test]
fn kernel_has_exactly_the_constants() {
    for d in [2, 4] {
        for delta in [PI / 2.0, PI, 1.5 * PI] {
            for r in [5.0, 10.0] {
                let p = CrProblem::extended_neck(r, 2.0, 4, 16, delta, j0(d)).unwrap();
                let rep = kernel_diagnostic(&p).unwrap();
                assert_eq!(rep.near_zero, d, "d {d} delta {delta} R {r}");
                assert!(rep.singular_values[d] >= 0.1 * NEAR_ZERO.sqrt() * rep.sigma_max);
            }
        }
    }
}

#[test]
fn restricted_kernel_floor_is_independent_of_length() {
    let mins: Vec<f64> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&r| {
            let p = CrProblem::extended_neck(r, 2.0, 4, 16, PI, j0(2)).unwrap();
            kernel_diagnostic(&p).unwrap().restricted_min
        })
        .collect();
    for m in &mins {
        assert!((m / mins[0] - 1.0).abs() <= 0.2, "{mins:?}");
    }
}

#[test]
fn dense_and_modal_spectra_agree() {
    let p = CrProblem::extended_neck(5.0, 1.0, 4, 8, PI, j0(2)).unwrap();
    let a = kernel_diagnostic(&p).unwrap().singular_values;
    let b = dense_singular_values(&p).unwrap();
    assert_eq!(a.len(), b.len());
    let scale = a[a.len() - 1];
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-9 * scale));
}

#[test]
fn index_examples() {
    assert_eq!(fredholm_index(6, 0, 3, 0).unwrap(), 6);
    assert_eq!(fredholm_index(4, 1, 1, 2).unwrap(), 6);
    assert!(fredholm_index(3, 0, 0, 0).is_err());
}

proptest! {
    #[test]
    fn index_forms_agree(n in 1i64..=10, g in 0i64..=50, k in 0i64..=50, c1 in -100i64..=100) {
        prop_assert_eq!(fredholm_index(2 * n, g, k, c1).unwrap(), fredholm_index_local(2 * n, g, k, c1).unwrap());
    }

    #[test]
    fn dbar0_is_linear(a in -2.0f64..2.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = PairLayout::with_density(2.0, 4, 8, 2).unwrap();
        let x = random_pair(&mut rng, &l, Space::F);
        let y = random_pair(&mut rng, &l, Space::F);
        let lhs = x.add_scaled(a, &y).dbar0(&j0(2)).unwrap();
        let rhs = x.dbar0(&j0(2)).unwrap().add_scaled(a, &y.dbar0(&j0(2)).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }
}

#[test]
fn contraction_modulus_shrinks_with_radius() {
    let l = PairLayout::with_density(3.5, 4, 8, 2).unwrap();
    let j = model_structure(2, 0.3).unwrap();
    let base = MapPair::constant(&l, Space::E, &[0.3, -0.2]);
    for a in [
        GluingParameter::zero(GluingProfile::Exponential),
        GluingParameter::polar(GluingProfile::Exponential, 1.0 / 16.0, 0.0).unwrap(),
    ] {
        let ctx = SpliceContext::new(a, l).unwrap();
        let germ = Germ::new(&ctx, &base, &j).unwrap();
        let est = contraction_sweep(&germ, &[0.1, 0.05, 0.025], 8, 3).unwrap();
        assert!(est.windows(2).all(|w| w[1].modulus <= w[0].modulus), "{est:?}");
    }
}

#[test]
fn constraint_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for dim in [2, 4, 6] {
        let v = PerturbedEmbedding::random(dim, 0.15, &mut rng).unwrap();
        let h = coordinate_subspace(dim);
        let p = transversal_constraint(&v, &h).unwrap();
        let q = grid_search(&v, &h).unwrap();
        assert!(p.residual <= 1e-10);
        assert!((p.z[0] - q[0]).abs().max((p.z[1] - q[1]).abs()) <= 1e-6);
    }
}
