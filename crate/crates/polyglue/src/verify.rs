//! The acceptance suite: eleven numbered criteria, each a set of checks
//! against fixed tolerances plus a runtime budget.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Result};
use polyglue_core::cr::constraint::{coordinate_subspace, grid_search};
use polyglue_core::cr::contraction::{contraction_sweep, model_structure};
use polyglue_core::cr::linear::{manufactured_error, Manufactured};
use polyglue_core::cr::operators::filled_section_residual;
use polyglue_core::cr::{
    filled_section, fredholm_index, fredholm_index_local, kernel_diagnostic, linear_cr_solve, transversal_constraint,
    CauchyRiemann, ComplexStructureField, CrProblem, Germ, PerturbedEmbedding,
};
use polyglue_core::cylinder::{MapPair, PairLayout, Space};
use polyglue_core::estimates::Estimate;
use polyglue_core::neck::NeckMap;
use polyglue_core::profile::{profile_convert, GluingParameter, GluingProfile};
use polyglue_core::sample::{exact_parameter, node_twist, random_pair};
use polyglue_core::splice::{oracle, AntiGlued, Glued, SpliceContext};
use polyglue_core::surface::random_surface;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{CheckRow, Report};
use crate::sweep::{run_sweep, sweep_series, sweep_table, GridPoint, Resolution, SweepSpec};

/// Number, title and runtime budget of each criterion.
pub const CRITERIA: [(u8, &str, u64); 11] = [
    (1, "genus and stabilization", 5),
    (2, "profile conversion", 1),
    (3, "total gluing round trips", 10),
    (4, "projection identities", 10),
    (5, "closed forms against the pointwise oracle", 10),
    (6, "norm-equivalence uniformity", 60),
    (7, "linear Cauchy-Riemann solves", 120),
    (8, "filled section", 20),
    (9, "index formula", 1),
    (10, "contraction diagnostic", 60),
    (11, "transversal constraint", 5),
];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Smaller sample counts for a fast smoke run.
    pub quick: bool,
    pub seed: u64,
    pub jobs: usize,
    /// Where criterion 6 writes its CSV and plot script.
    pub artifacts: Option<PathBuf>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            quick: false,
            seed: 20240521,
            jobs: 1,
            artifacts: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub rows: Vec<CheckRow>,
    pub error: Option<String>,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    pub fn within_budget(&self) -> bool {
        self.elapsed <= self.budget
    }

    pub fn pass(&self) -> bool {
        self.error.is_none() && self.rows.iter().all(|r| r.pass) && self.within_budget()
    }

    /// One summary line: status, number, title, worst check and timing.
    pub fn line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let detail = match &self.error {
            Some(e) => format!("error: {e}"),
            None => {
                let failed: Vec<String> = self
                    .rows
                    .iter()
                    .filter(|r| !r.pass)
                    .map(|r| format!("{} = {:e} (limit {:e})", r.name, r.value, r.threshold))
                    .collect();
                if failed.is_empty() {
                    format!("{} checks", self.rows.len())
                } else {
                    failed.join("; ")
                }
            }
        };
        let budget = if self.within_budget() { "" } else { " over budget" };
        format!(
            "[{status}] {:>2} {}: {detail} ({:.2} s of {} s{budget})",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

pub fn run(id: u8, opts: &VerifyOptions) -> Outcome {
    let (_, title, budget) = CRITERIA
        .iter()
        .copied()
        .find(|c| c.0 == id)
        .unwrap_or((id, "unknown criterion", 0));
    let start = Instant::now();
    let result = match id {
        1 => genus_and_stabilization(opts),
        2 => profile_conversion(opts),
        3 => round_trips(opts),
        4 => projection_identities(opts),
        5 => closed_forms(opts),
        6 => norm_equivalence(opts),
        7 => linear_cr(opts),
        8 => filled_sections(opts),
        9 => index_formula(opts),
        10 => contraction(opts),
        11 => constraint(opts),
        _ => Err(anyhow::anyhow!("no criterion {id}")),
    };
    let elapsed = start.elapsed();
    let (rows, error) = match result {
        Ok(rows) => (rows, None),
        Err(e) => (Vec::new(), Some(format!("{e:#}"))),
    };
    Outcome {
        id,
        title,
        rows,
        error,
        elapsed,
        budget: Duration::from_secs(budget),
    }
}

/// Runs the given criteria (all when empty) in order.
pub fn run_all(opts: &VerifyOptions, ids: &[u8]) -> Vec<Outcome> {
    let all: Vec<u8> = CRITERIA.iter().map(|c| c.0).collect();
    let ids = if ids.is_empty() { &all[..] } else { ids };
    ids.iter().map(|&id| run(id, opts)).collect()
}

/// Every check of every outcome, prefixed with the criterion number, plus
/// one runtime row per criterion.
pub fn to_report(outcomes: &[Outcome], digest: String) -> Report {
    let mut r = Report::new("verify", digest);
    for o in outcomes {
        for row in &o.rows {
            let mut row = row.clone();
            row.name = format!("{}.{}", o.id, row.name);
            r.push(row);
        }
        if let Some(e) = &o.error {
            r.push(CheckRow {
                name: format!("{}.error: {e}", o.id),
                value: f64::NAN,
                threshold: f64::NAN,
                pass: false,
            });
        }
        r.push(CheckRow::at_most(
            format!("{}.runtime_s", o.id),
            o.elapsed.as_secs_f64(),
            o.budget.as_secs_f64(),
        ));
    }
    r
}

fn count(o: &VerifyOptions, full: usize, quick: usize) -> usize {
    if o.quick {
        quick
    } else {
        full
    }
}

fn rng(o: &VerifyOptions, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(o.seed);
    r.set_stream(stream);
    r
}

fn genus_and_stabilization(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let n = count(o, 500, 100);
    let mut rng = rng(o, 1);
    let (mut genus, mut idempotent, mut unstable, mut order, mut connected) = (0, 0, 0, 0, 0);
    for _ in 0..n {
        let s = random_surface(&mut rng, 8);
        let st = s.stabilize()?;
        genus += usize::from(st.arithmetic_genus()? != s.arithmetic_genus()?);
        idempotent += usize::from(st.stabilize()? != st);
        unstable += usize::from(!st.is_stable());
        connected += usize::from(!st.is_connected());
        let reference = st.canonical_form()?;
        let mut ids: Vec<String> = s.components().iter().map(|c| c.id.clone()).collect();
        for _ in 0..5 {
            ids.shuffle(&mut rng);
            order += usize::from(s.stabilize_with_order(&ids)?.canonical_form()? != reference);
        }
    }
    Ok(vec![
        CheckRow::equal("surfaces", n as f64, n as f64),
        CheckRow::equal("genus_changed", genus as f64, 0.0),
        CheckRow::equal("not_idempotent", idempotent as f64, 0.0),
        CheckRow::equal("unstable_output", unstable as f64, 0.0),
        CheckRow::equal("disconnected_output", connected as f64, 0.0),
        CheckRow::equal("order_dependent", order as f64, 0.0),
    ])
}

/// `ln phi_log(|a~|)` straight from `|a~| = e^{-2 pi (e^{1/r} - e)}`: through
/// the float `|a~|` while it is representable, then through the exponent.
fn converted_ln_length(r: f64) -> f64 {
    let x = 1.0 / r;
    let length = x.exp() - std::f64::consts::E;
    if length.is_finite() {
        let a = (-2.0 * PI * length).exp();
        if a > 0.0 {
            return (-a.ln() / (2.0 * PI)).ln();
        }
        return length.ln();
    }
    x + (-(1.0 - x).exp()).ln_1p()
}

fn profile_conversion(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rng = rng(o, 2);
    let mut worst: f64 = 0.0;
    let mut twist_moved = 0;
    for j in 1..=20 {
        let r = 2f64.powi(-j);
        let twist = rand::Rng::random_range(&mut rng, 0.0..1.0);
        let a = GluingParameter::polar(GluingProfile::Exponential, r, twist)?;
        let converted = profile_convert(&a);
        ensure!(converted.profile() == GluingProfile::Logarithmic, "conversion keeps the profile");
        let got = converted.ln_length().expect("nonzero parameter");
        let want = converted_ln_length(r);
        worst = worst.max((got - want).exp_m1().abs());
        twist_moved += usize::from(converted.twist() != a.twist());
    }
    let zero = profile_convert(&GluingParameter::zero(GluingProfile::Exponential));
    Ok(vec![
        CheckRow::at_most("length_rel_error", worst, 1e-10),
        CheckRow::equal("twist_changed", twist_moved as f64, 0.0),
        CheckRow::equal("zero_maps_to_zero", f64::from(u8::from(zero.is_zero())), 1.0),
    ])
}

/// One splicing sample: a context on the exactness tier with an E-pair and
/// an F-pair.
struct SpliceSample {
    ctx: SpliceContext,
    h: MapPair,
    xi: MapPair,
}

fn splice_layout() -> Result<PairLayout> {
    Ok(PairLayout::with_density(4.0, 8, 16, 2)?)
}

fn splice_samples(o: &VerifyOptions) -> Result<Vec<SpliceSample>> {
    let layout = splice_layout()?;
    let per = count(o, 50, 8);
    let mut rng = rng(o, 3);
    let mut out = Vec::with_capacity(8 * per);
    for j in 1..=8 {
        for _ in 0..per {
            let a = exact_parameter(j, node_twist(&mut rng, layout.n_t), &layout)?;
            let ctx = SpliceContext::new(a, layout)?;
            ensure!(ctx.is_exact(), "|a| = 2^-{j} is off the exactness tier");
            let h = random_pair(&mut rng, &layout, Space::E);
            let xi = random_pair(&mut rng, &layout, Space::F);
            out.push(SpliceSample { ctx, h, xi });
        }
    }
    Ok(out)
}

fn glued_diff(a: &Glued, b: &Glued) -> Result<f64> {
    match (a, b) {
        (Glued::Pair(x), Glued::Pair(y)) => Ok(x.max_abs_diff(y)),
        (Glued::Neck(x), Glued::Neck(y)) => Ok(x.max_abs_diff(y)),
        _ => bail!("mismatched gluing output"),
    }
}

fn anti_glued_abs(w: &AntiGlued) -> f64 {
    match w {
        AntiGlued::Zero => 0.0,
        AntiGlued::Neck(n) => n.max_abs(),
    }
}

fn necks<'a>(v: &'a Glued, w: &'a AntiGlued) -> Result<(&'a NeckMap, &'a NeckMap)> {
    match (v.neck(), w.neck()) {
        (Some(v), Some(w)) => Ok((v, w)),
        _ => bail!("degenerate gluing parameter in a nondegenerate sample"),
    }
}

fn round_trips(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let (mut plain, mut hat): (f64, f64) = (0.0, 0.0);
    for s in splice_samples(o)? {
        let (v, w) = s.ctx.total_glue(&s.h)?;
        plain = plain.max(s.ctx.total_unglue(&v, &w)?.max_abs_diff(&s.h));
        let (v, w) = s.ctx.hat_total_glue(&s.xi)?;
        hat = hat.max(s.ctx.hat_total_unglue(&v, &w)?.max_abs_diff(&s.xi));
    }
    Ok(vec![
        CheckRow::at_most("total_gluing", plain, 1e-10),
        CheckRow::at_most("hat_total_gluing", hat, 1e-10),
    ])
}

fn projection_identities(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut worst = [0.0f64; 6];
    for s in splice_samples(o)? {
        let ctx = &s.ctx;
        let p = ctx.project(&s.h)?;
        worst[0] = worst[0].max(ctx.project(&p)?.max_abs_diff(&p));
        worst[1] = worst[1].max(glued_diff(&ctx.plus_glue(&p)?, &ctx.plus_glue(&s.h)?)?);
        worst[2] = worst[2].max(anti_glued_abs(&ctx.minus_glue(&p)?));
        let q = ctx.hat_project(&s.xi)?;
        worst[3] = worst[3].max(ctx.hat_project(&q)?.max_abs_diff(&q));
        worst[4] = worst[4].max(glued_diff(&ctx.hat_plus_glue(&q)?, &ctx.hat_plus_glue(&s.xi)?)?);
        worst[5] = worst[5].max(anti_glued_abs(&ctx.hat_minus_glue(&q)?));
    }
    let names = [
        "idempotence",
        "range_identity",
        "kernel_identity",
        "hat_idempotence",
        "hat_range_identity",
        "hat_kernel_identity",
    ];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(n, v)| CheckRow::at_most(*n, v, 1e-10))
        .collect())
}

fn closed_forms(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut worst = [0.0f64; 4];
    for s in splice_samples(o)? {
        let ctx = &s.ctx;
        worst[0] = worst[0].max(ctx.project(&s.h)?.max_abs_diff(&ctx.project_via_unglue(&s.h)?));
        worst[1] = worst[1].max(ctx.hat_project(&s.xi)?.max_abs_diff(&ctx.hat_project_via_unglue(&s.xi)?));
        let (v, w) = ctx.total_glue(&s.h)?;
        let (vn, wn) = necks(&v, &w)?;
        worst[2] = worst[2].max(ctx.total_unglue(&v, &w)?.max_abs_diff(&oracle::unglue(ctx, vn, wn, false)?));
        let (v, w) = ctx.hat_total_glue(&s.xi)?;
        let (vn, wn) = necks(&v, &w)?;
        worst[3] = worst[3].max(ctx.hat_total_unglue(&v, &w)?.max_abs_diff(&oracle::unglue(ctx, vn, wn, true)?));
    }
    let names = ["projection", "hat_projection", "unglue", "hat_unglue"];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(n, v)| CheckRow::at_most(*n, v, 1e-10))
        .collect())
}

fn norm_equivalence(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let spec = SweepSpec {
        a_grid: [5.0, 10.0, 20.0, 40.0].map(GridPoint::Length).to_vec(),
        profile: GluingProfile::Exponential,
        twist: 0.25,
        deltas: vec![None],
        levels: vec![0, 1],
        estimates: vec![Estimate::HatGluing],
        resolution: Resolution::DEFAULT,
        s_max: 12.0,
        dim: 2,
        count: count(o, 12, 4),
        seed: o.seed,
    };
    let groups = run_sweep(&spec, o.jobs)?;
    let mut rows: Vec<CheckRow> = groups
        .iter()
        .map(|g| CheckRow::at_most(format!("spread_m{}", g.m), g.spread(), 10.0))
        .collect();
    let mut table = sweep_table(&groups);
    table.comment("command: verify 6");
    table.comment(format!("seed: {}", o.seed));
    let csv = table.to_csv();
    let script = crate::report::emit_plot_script(&sweep_series(&groups), "hat gluing ratio envelope", "estimates.png")?;
    if let Some(dir) = &o.artifacts {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("estimates.csv"), &csv)?;
        std::fs::write(dir.join("estimates_plot.py"), &script)?;
    }
    rows.push(CheckRow::equal("csv_rows", table.len() as f64, 8.0));
    Ok(rows)
}

fn linear_cr(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rng = rng(o, 7);
    let j0 = |d| ComplexStructureField::standard(d);
    let (mut err, mut injective): (f64, f64) = (0.0, 0.0);
    for r in [5.0, 10.0, 20.0] {
        let p = CrProblem::infinite_neck(r, 4.0, 64, 32, PI, j0(2)?)?;
        err = err.max(manufactured_error(&p, &Manufactured::random(2, &mut rng))?.0);
        injective = injective.max(linear_cr_solve(&p, &NeckMap::zeros(&p.axis, 2))?.solution.max_abs());
    }
    let mut rows = vec![
        CheckRow::at_most("manufactured_error", err, 1e-3),
        CheckRow::at_most("zero_rhs_solution", injective, 1e-12),
    ];
    let lengths: &[f64] = if o.quick { &[5.0, 10.0] } else { &[5.0, 10.0, 20.0] };
    for d in [2, 4] {
        let mut off = 0;
        for &r in lengths {
            let p = CrProblem::extended_neck(r, 2.0, 4, 16, PI, j0(d)?)?;
            off += usize::from(kernel_diagnostic(&p)?.near_zero != d);
        }
        rows.push(CheckRow::equal(format!("kernel_count_mismatches_2n{d}"), off as f64, 0.0));
    }
    Ok(rows)
}

fn filled_sections(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let layout = splice_layout()?;
    let j = model_structure(2, 0.3)?;
    let mut rng = rng(o, 8);
    let mut contexts = vec![SpliceContext::new(GluingParameter::zero(GluingProfile::Exponential), layout)?];
    for k in 1..=4 {
        contexts.push(SpliceContext::new(exact_parameter(k, node_twist(&mut rng, layout.n_t), &layout)?, layout)?);
    }
    let per = count(o, 4, 1);
    let (mut core, mut residual, mut direct): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for ctx in &contexts {
        for _ in 0..per {
            let c = [rand::Rng::random_range(&mut rng, -0.5..0.5), rand::Rng::random_range(&mut rng, -0.5..0.5)];
            let u = MapPair::constant(&layout, Space::E, &c);
            let h = random_pair(&mut rng, &layout, Space::E);
            let h = h.add_scaled(-1.0, &MapPair::constant(&layout, Space::E, h.constant_value()));
            let xi = filled_section(ctx, &u, &h, &j)?;
            residual = residual.max(filled_section_residual(ctx, &xi, &u, &h, &j)?);
            let total = u.add_scaled(1.0, &h);
            let assembled = match (ctx.plus_glue(&total)?, ctx.minus_glue(&h)?) {
                (Glued::Pair(p), AntiGlued::Zero) => p.cr_apply(&j)?,
                (Glued::Neck(v), AntiGlued::Neck(w)) => {
                    let frozen = j.frozen_at(u.constant_value())?;
                    oracle::unglue(ctx, &v.cr_apply(&j)?, &w.dbar0(&frozen)?, true)?
                }
                _ => bail!("mismatched gluing output"),
            };
            direct = direct.max(xi.max_abs_diff(&assembled));
            if !ctx.is_degenerate() {
                let hc = ctx.project(&h)?;
                let xc = filled_section(ctx, &u, &hc, &j)?;
                core = core.max(anti_glued_abs(&ctx.hat_minus_glue(&xc)?));
            }
        }
    }
    Ok(vec![
        CheckRow::at_most("core_consistency", core, 1e-12),
        CheckRow::at_most("equation_residual", residual, 1e-10),
        CheckRow::at_most("pointwise_assembly", direct, 1e-10),
    ])
}

fn index_formula(_: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut mismatches = 0;
    let mut cases = 0;
    for two_n in (2..=20).step_by(2) {
        for g in 0..=10 {
            for k in 0..=10 {
                for c1 in -10..=10 {
                    cases += 1;
                    mismatches += usize::from(fredholm_index(two_n, g, k, c1)? != fredholm_index_local(two_n, g, k, c1)?);
                }
            }
        }
    }
    Ok(vec![
        CheckRow::equal("cases", cases as f64, 10.0 * 11.0 * 11.0 * 21.0),
        CheckRow::equal("form_mismatches", mismatches as f64, 0.0),
        CheckRow::equal("spot_6_0_3_0", fredholm_index(6, 0, 3, 0)? as f64, 6.0),
        CheckRow::equal("spot_4_1_1_2", fredholm_index(4, 1, 1, 2)? as f64, 6.0),
    ])
}

fn contraction(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let layout = PairLayout::with_density(3.5, 4, 8, 2)?;
    let j = model_structure(2, 0.3)?;
    let base = MapPair::constant(&layout, Space::E, &[0.3, -0.2]);
    let radii = [0.1, 0.05, 0.025];
    let mut rows = Vec::new();
    for (name, a) in [
        ("a0", GluingParameter::zero(GluingProfile::Exponential)),
        ("a2m4", GluingParameter::polar(GluingProfile::Exponential, 1.0 / 16.0, 0.0)?),
    ] {
        let ctx = SpliceContext::new(a, layout)?;
        let germ = Germ::new(&ctx, &base, &j)?;
        let est = contraction_sweep(&germ, &radii, count(o, 8, 4), o.seed)?;
        // largest ratio of consecutive estimates; non-increasing means <= 1
        let growth = est
            .windows(2)
            .map(|w| if w[0].modulus > 0.0 { w[1].modulus / w[0].modulus } else { f64::from(u8::from(w[1].modulus > 0.0)) })
            .fold(0.0, f64::max);
        rows.push(CheckRow::at_most(format!("{name}_growth"), growth, 1.0));
    }
    Ok(rows)
}

fn constraint(o: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rng = rng(o, 11);
    let (mut diff, mut residual): (f64, f64) = (0.0, 0.0);
    for k in 0..20 {
        let dim = [2, 4, 6][k % 3];
        let v = PerturbedEmbedding::random(dim, 0.15, &mut rng)?;
        let h = coordinate_subspace(dim);
        let p = transversal_constraint(&v, &h)?;
        let q = grid_search(&v, &h)?;
        diff = diff.max((p.z[0] - q[0]).abs().max((p.z[1] - q[1]).abs()));
        residual = residual.max(p.residual);
    }
    Ok(vec![
        CheckRow::at_most("newton_vs_grid_search", diff, 1e-6),
        CheckRow::at_most("residual", residual, 1e-10),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converted_length_formula_branches_agree() {
        // the float route and the exponent route meet where |a~| underflows
        for r in [0.5, 0.3, 0.25, 0.2] {
            let x: f64 = 1.0 / r;
            let via_exponent = x + (-(1.0 - x).exp()).ln_1p();
            assert!((converted_ln_length(r) - via_exponent).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        let o = run(42, &VerifyOptions::default());
        assert!(!o.pass() && o.error.is_some());
    }
}
