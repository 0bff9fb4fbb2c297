//! The `polyglue` command line.
//!
//! Every subcommand writes its result to standard output (or to the files it
//! is pointed at) and returns an exit code: 0 when all requested checks pass,
//! 1 when a check fails, 2 for usage and runtime errors.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polyglue_core::cr::constraint::{coordinate_subspace, grid_search};
use polyglue_core::cr::contraction::{contraction_sweep, model_structure};
use polyglue_core::cr::linear::{manufactured_error, Manufactured};
use polyglue_core::cr::operators::{filled_section_residual, resolved_diff};
use polyglue_core::cr::{
    filled_section, fredholm_index, kernel_diagnostic, linear_cr_solve, transversal_constraint, CauchyRiemann,
    ComplexStructureField, CrProblem, Germ, PerturbedEmbedding,
};
use polyglue_core::cylinder::{pair_norm, pair_norm_e, weighted_norm, weighted_norm_centered, MapPair, PairLayout, Space};
use polyglue_core::neck::{lift_point, neck_norm, NeckMap, NeckNormMode};
use polyglue_core::profile::{
    bilevel_valid, degeneration_index, gluing_length, inverse_length, profile_convert, GluingParameter, GluingProfile,
    ScScale,
};
use polyglue_core::sample::random_pair;
use polyglue_core::splice::{oracle, AntiGlued, Glued, SpliceContext};
use polyglue_core::surface::{random_surface, NodedSurface};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid_csv::{read_grid, read_neck, read_pair, write_grid, write_neck};
use crate::report::{digest, emit_plot_script, num, sig15, CheckRow, Report, Table};
use crate::surface_json::{emit_surface, parse_surface};
use crate::sweep::{
    parse_a_grid, parse_estimate, parse_profile, run_sweep, scale_with, sweep_series, sweep_table, Resolution,
    SweepSpec,
};
use crate::verify::{self, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "polyglue", version, about = "Gluing, splicing and Cauchy-Riemann diagnostics on noded surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Noded surfaces in the JSON format
    #[command(subcommand)]
    Surface(SurfaceCmd),
    /// Gluing profiles, parameters and scales
    #[command(subcommand)]
    Profile(ProfileCmd),
    /// Weighted norms and point evaluation of sampled maps
    #[command(subcommand)]
    Norm(NormCmd),
    /// Total gluing of a pair onto the two necks
    Glue(GlueArgs),
    /// Inverse of the total gluing
    Unglue(UnglueArgs),
    /// Splicing projections and transfer operators
    Project(ProjectArgs),
    /// Membership in the splicing core
    CoreTest(CoreTestArgs),
    /// Ratio sweeps of the uniform estimates
    SweepEstimates(SweepArgs),
    /// Cauchy-Riemann operators and diagnostics
    #[command(subcommand)]
    Cr(CrCmd),
    /// The acceptance suite
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum SurfaceCmd {
    /// Arithmetic genus
    Genus { file: PathBuf },
    /// Whether the node graph is connected
    Connected { file: PathBuf },
    /// Whether every component is stable (energy counts when present)
    Stable { file: PathBuf },
    /// Removes unstable components (weeding order by component id unless given)
    Stabilize {
        file: PathBuf,
        /// Comma-separated component ids in removal priority
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
    },
    /// Forgets one marked point (1-based index) and stabilizes
    Forget {
        file: PathBuf,
        #[arg(long)]
        index: usize,
    },
    /// Relabeling-invariant encoding
    Canonical { file: PathBuf },
    /// A random connected surface
    Random {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_components: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileKind {
    Exp,
    Log,
}

impl From<ProfileKind> for GluingProfile {
    fn from(k: ProfileKind) -> Self {
        match k {
            ProfileKind::Exp => GluingProfile::Exponential,
            ProfileKind::Log => GluingProfile::Logarithmic,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum ProfileCmd {
    /// Neck length R of a modulus
    Length {
        #[arg(long, value_enum)]
        kind: ProfileKind,
        #[arg(long)]
        r: f64,
    },
    /// Modulus with a given neck length
    Inverse {
        #[arg(long, value_enum)]
        kind: ProfileKind,
        #[arg(long)]
        length: f64,
    },
    /// Converts an exponential-profile parameter to the logarithmic one
    Convert {
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, allow_hyphen_values = true)]
        im: f64,
    },
    /// Number of vanishing quadrant coordinates
    Degeneration {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coords: Vec<f64>,
        #[arg(long)]
        quadrant: usize,
    },
    /// Whether (m, k) is an admissible bi-level
    Bilevel {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
    },
    /// Weight of level m on the default scale
    Scale {
        #[arg(long)]
        m: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum NormCmd {
    /// Weighted Sobolev norm of a grid file
    Weighted {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: f64,
        /// Centers the weight at this s instead of the grid start
        #[arg(long, allow_hyphen_values = true)]
        center: Option<f64>,
    },
    /// E_m or F_m norm of a pair
    Pair {
        #[command(flatten)]
        pair: PairFiles,
        #[arg(long, default_value_t = 0)]
        m: usize,
        /// Weight at level m (default scale otherwise)
        #[arg(long)]
        delta: Option<f64>,
    },
    /// G or hat-G norm of a pair of neck files
    Neck {
        #[command(flatten)]
        necks: NeckFiles,
        #[command(flatten)]
        param: ParamArgs,
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        hat: bool,
    },
    /// Circle mean at s0
    Mean {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        s0: f64,
    },
    /// Value at (s, t)
    Eval {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long)]
        t: f64,
    },
    /// A neck point in both charts
    Lift {
        #[command(flatten)]
        param: ParamArgs,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
}

/// The two halves of a pair.
#[derive(Debug, Clone, Args)]
pub struct PairFiles {
    #[arg(long)]
    pub plus: PathBuf,
    #[arg(long)]
    pub minus: PathBuf,
}

/// A pair from files, or a seeded random pair on the layout.
#[derive(Debug, Clone, Args)]
pub struct PairSource {
    #[arg(long, requires = "minus")]
    pub plus: Option<PathBuf>,
    #[arg(long, requires = "plus")]
    pub minus: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct NeckFiles {
    /// Map on the finite neck
    #[arg(long)]
    pub z: PathBuf,
    /// Map on the infinite neck
    #[arg(long)]
    pub c: PathBuf,
}

/// A gluing parameter by modulus or neck length.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// |a|; 0 is the nodal parameter
    #[arg(long, conflicts_with = "length")]
    pub modulus: Option<f64>,
    /// Neck length R
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub twist: f64,
    #[arg(long, value_enum, default_value_t = ProfileKind::Exp)]
    pub profile: ProfileKind,
}

impl ParamArgs {
    pub fn parameter(&self) -> Result<GluingParameter> {
        let p = self.profile.into();
        match (self.modulus, self.length) {
            (Some(r), None) if r == 0.0 => Ok(GluingParameter::zero(p)),
            (Some(r), None) => Ok(GluingParameter::polar(p, r, self.twist)?),
            (None, Some(len)) => Ok(GluingParameter::from_length(p, len, self.twist)?),
            _ => bail!("give --modulus or --length"),
        }
    }

    fn key(&self) -> String {
        format!("{:?} {:?} {} {:?}", self.modulus, self.length, self.twist, self.profile)
    }
}

/// Pair grids used when no pair files are given.
#[derive(Debug, Clone, Args)]
pub struct LayoutArgs {
    #[arg(long, default_value_t = 4.0)]
    pub s_max: f64,
    /// PER_UNITxN_T, for example 8x16 (default from POLYGLUE_GRID or 8x16)
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

impl LayoutArgs {
    fn resolution(&self) -> Result<Resolution> {
        match &self.grid {
            Some(g) => Resolution::parse(g),
            None => Resolution::from_env(),
        }
    }

    pub fn layout(&self) -> Result<PairLayout> {
        self.resolution()?.layout(self.s_max, self.dim)
    }

    fn key(&self) -> Result<String> {
        let r = self.resolution()?;
        Ok(format!("{} {}x{} {}", self.s_max, r.per_unit, r.n_t, self.dim))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    E,
    F,
}

#[derive(Debug, Args)]
pub struct GlueArgs {
    #[command(flatten)]
    pub source: PairSource,
    #[command(flatten)]
    pub param: ParamArgs,
    #[command(flatten)]
    pub layout: LayoutArgs,
    /// Random pairs are drawn from this space
    #[arg(long, value_enum, default_value_t = SpaceArg::E)]
    pub space: SpaceArg,
    /// Hat variants (sections)
    #[arg(long)]
    pub hat: bool,
    /// Directory for neck_z.csv and neck_c.csv (glued_plus.csv and
    /// glued_minus.csv at a = 0)
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct UnglueArgs {
    #[command(flatten)]
    pub necks: NeckFiles,
    #[command(flatten)]
    pub param: ParamArgs,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[arg(long)]
    pub hat: bool,
    /// Directory for plus.csv and minus.csv
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Operator {
    Pi,
    HatPi,
    Ds,
    Dt,
    Cs,
    Ct,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub source: PairSource,
    #[command(flatten)]
    pub param: ParamArgs,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[arg(long, value_enum, default_value_t = Operator::Pi)]
    pub operator: Operator,
    /// Directory for plus.csv and minus.csv of the result
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CoreTestArgs {
    #[command(flatten)]
    pub source: PairSource,
    #[command(flatten)]
    pub param: ParamArgs,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Tests the projection of the pair instead of the pair itself
    #[arg(long)]
    pub projected: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Levels, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub m: Vec<usize>,
    /// Moduli (0.25, 2^-3, 2^-1..2^-8) or neck lengths (R=20), comma-separated
    #[arg(long)]
    pub a_grid: String,
    #[arg(long, value_delimiter = ',', default_value = "hat-gluing")]
    pub estimate: Vec<String>,
    /// Weights at the sampled level, comma-separated (default scale otherwise)
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    #[arg(long, default_value = "exp")]
    pub profile: String,
    #[arg(long, default_value_t = 0.25)]
    pub twist: f64,
    #[arg(long, default_value_t = 12.0)]
    pub s_max: f64,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 12)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV output (standard output otherwise)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot script output; the script saves a PNG next to itself
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Fails when a group spreads more than this
    #[arg(long)]
    pub max_spread: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum CrCmd {
    /// Nonlinear operator of the model structure on a grid file
    Apply {
        file: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear operator of the standard structure on a grid file
    Dbar0 {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manufactured-solution solve on a truncated infinite neck
    Solve {
        #[arg(long, default_value_t = 10.0)]
        length: f64,
        #[arg(long, default_value_t = 4.0)]
        half_width: f64,
        #[arg(long, default_value_t = 64)]
        n_s: usize,
        #[arg(long, default_value_t = 32)]
        n_t: usize,
        #[arg(long, default_value_t = PI)]
        delta: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Singular values on an extended finite neck
    Kernel {
        #[arg(long, default_value_t = 10.0)]
        length: f64,
        #[arg(long, default_value_t = 2.0)]
        ext: f64,
        #[arg(long, default_value_t = 4)]
        per_unit: usize,
        #[arg(long, default_value_t = 16)]
        n_t: usize,
        #[arg(long, default_value_t = PI)]
        delta: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Fredholm index
    Index {
        /// Real target dimension 2n
        #[arg(long)]
        dim: i64,
        #[arg(long)]
        g: i64,
        #[arg(long)]
        k: i64,
        #[arg(long, allow_hyphen_values = true)]
        c1: i64,
    },
    /// Contraction modulus of the germ at a constant map
    Contraction {
        /// |a|; 0 is the nodal parameter
        #[arg(long, default_value_t = 0.0)]
        modulus: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
    },
    /// Transversal constraint against a grid search
    Constraint {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 0.15)]
        eps: f64,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Filled section at a constant map plus a pair
    Filled {
        #[command(flatten)]
        source: PairSource,
        #[command(flatten)]
        param: ParamArgs,
        #[command(flatten)]
        layout: LayoutArgs,
        /// The constant map, comma-separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        base: Vec<f64>,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Smaller samples
    #[arg(long)]
    pub quick: bool,
    /// Criteria to run, comma-separated (all by default)
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    pub seed: u64,
    /// Report CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for the sweep CSV and plot script
    #[arg(long)]
    pub artifacts: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// What a command printed and whether its checks passed.
struct Done {
    text: String,
    pass: bool,
}

impl Done {
    fn ok(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            pass: true,
        }
    }

    fn report(r: &Report) -> Self {
        Self {
            text: r.to_csv(),
            pass: r.pass(),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Output goes to `out`, diagnostics to standard error.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(done) => {
            if out.write_all(done.text.as_bytes()).is_err() {
                return 2;
            }
            i32::from(!done.pass)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn execute(cmd: Command) -> Result<Done> {
    match cmd {
        Command::Surface(c) => surface(c),
        Command::Profile(c) => profile(c),
        Command::Norm(c) => norm(c),
        Command::Glue(a) => glue(a),
        Command::Unglue(a) => unglue(a),
        Command::Project(a) => project(a),
        Command::CoreTest(a) => core_test(a),
        Command::SweepEstimates(a) => sweep(a),
        Command::Cr(c) => cr(c),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_surface(path: &Path) -> Result<NodedSurface> {
    parse_surface(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn line(x: impl std::fmt::Display) -> String {
    format!("{x}\n")
}

fn surface(cmd: SurfaceCmd) -> Result<Done> {
    Ok(Done::ok(match cmd {
        SurfaceCmd::Genus { file } => line(load_surface(&file)?.arithmetic_genus()?),
        SurfaceCmd::Connected { file } => line(load_surface(&file)?.is_connected()),
        SurfaceCmd::Stable { file } => line(load_surface(&file)?.is_stable()),
        SurfaceCmd::Stabilize { file, order } => {
            let s = load_surface(&file)?;
            emit_surface(&match order {
                Some(o) => s.stabilize_with_order(&o)?,
                None => s.stabilize()?,
            })
        }
        SurfaceCmd::Forget { file, index } => {
            ensure!(index >= 1, "marked points are numbered from 1");
            emit_surface(&load_surface(&file)?.forget_marked_point(index - 1)?)
        }
        SurfaceCmd::Canonical { file } => {
            let form = load_surface(&file)?.canonical_form()?;
            line(form.0.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
        }
        SurfaceCmd::Random { seed, max_components } => {
            ensure!(max_components >= 1, "need at least one component");
            emit_surface(&random_surface(&mut ChaCha8Rng::seed_from_u64(seed), max_components))
        }
    }))
}

fn profile(cmd: ProfileCmd) -> Result<Done> {
    Ok(Done::ok(match cmd {
        ProfileCmd::Length { kind, r } => line(sig15(gluing_length(kind.into(), r)?)),
        ProfileCmd::Inverse { kind, length } => line(sig15(inverse_length(kind.into(), length)?)),
        ProfileCmd::Convert { re, im } => {
            let a = GluingParameter::from_complex(GluingProfile::Exponential, re, im)?;
            let b = profile_convert(&a);
            let (x, y) = b.complex();
            let mut t = Table::new(["re", "im", "twist", "ln_length"]);
            t.row([sig15(x), sig15(y), sig15(b.twist()), b.ln_length().map_or("nan".into(), sig15)]);
            t.to_csv()
        }
        ProfileCmd::Degeneration { coords, quadrant } => line(degeneration_index(&coords, quadrant)?),
        ProfileCmd::Bilevel { m, k } => line(bilevel_valid(m, k)),
        ProfileCmd::Scale { m } => {
            let mut t = Table::new(["m", "delta", "base_order", "fiber_order"]);
            t.row([
                m.to_string(),
                sig15(ScScale::Default.delta(m)?),
                ScScale::base_order(m).to_string(),
                ScScale::fiber_order(m).to_string(),
            ]);
            t.to_csv()
        }
    }))
}

fn scale_for(delta: Option<f64>, m: usize) -> Result<ScScale> {
    match delta {
        Some(d) => scale_with(d, m),
        None => Ok(ScScale::Default),
    }
}

fn load_pair(files: &PairFiles) -> Result<MapPair> {
    read_pair(&read(&files.plus)?, &read(&files.minus)?)
}

fn norm(cmd: NormCmd) -> Result<Done> {
    Ok(Done::ok(match cmd {
        NormCmd::Weighted { file, k, delta, center } => {
            let u = read_grid(&read(&file)?)?;
            line(num(match center {
                Some(c) => weighted_norm_centered(&u, k, delta, c)?,
                None => weighted_norm(&u, k, delta)?,
            }))
        }
        NormCmd::Pair { pair, m, delta } => {
            let h = load_pair(&pair)?;
            let scale = scale_for(delta, m)?;
            line(num(match h.space() {
                Space::E => pair_norm_e(&h, m, &scale)?,
                Space::F => pair_norm(&h, m, &scale)?,
            }))
        }
        NormCmd::Neck {
            necks,
            param,
            layout,
            order,
            delta,
            hat,
        } => {
            let ctx = SpliceContext::new(param.parameter()?, layout.layout()?)?;
            let (q, p) = load_necks(&ctx, &necks)?;
            let mode = if hat { NeckNormMode::Hat } else { NeckNormMode::G };
            line(num(neck_norm(&q, &p, order, delta, mode)?))
        }
        NormCmd::Mean { file, s0 } => {
            let u = read_grid(&read(&file)?)?;
            values_line(&u.circle_mean(s0)?)
        }
        NormCmd::Eval { file, s, t } => {
            let u = read_grid(&read(&file)?)?;
            values_line(&u.evaluate(s, t)?)
        }
        NormCmd::Lift { param, s, t, margin } => {
            let p = lift_point(&param.parameter()?, s, t, margin)?;
            let mut tab = Table::new(["s", "t", "s_far", "t_far", "interior"]);
            tab.row([num(p.near.0), num(p.near.1), num(p.far.0), num(p.far.1), p.interior.to_string()]);
            tab.to_csv()
        }
    }))
}

fn values_line(v: &[f64]) -> String {
    line(v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(","))
}

fn load_necks(ctx: &SpliceContext, files: &NeckFiles) -> Result<(NeckMap, NeckMap)> {
    let (za, ca) = match (ctx.z_axis(), ctx.c_axis()) {
        (Some(z), Some(c)) => (z, c),
        _ => bail!("a = 0 has no necks"),
    };
    let q = read_neck(&read(&files.z)?, za).with_context(|| format!("in {}", files.z.display()))?;
    let p = read_neck(&read(&files.c)?, ca).with_context(|| format!("in {}", files.c.display()))?;
    Ok((q, p))
}

/// The pair named by `source`, or a seeded random pair in `space` on the
/// layout. Returns the pair and the bytes identifying it.
fn source_pair(source: &PairSource, layout: &LayoutArgs, space: Space) -> Result<(MapPair, Vec<u8>)> {
    match (&source.plus, &source.minus) {
        (Some(p), Some(m)) => {
            let (pt, mt) = (read(p)?, read(m)?);
            let h = read_pair(&pt, &mt)?;
            Ok((h, [pt.into_bytes(), mt.into_bytes()].concat()))
        }
        _ => {
            let l = layout.layout()?;
            let h = random_pair(&mut ChaCha8Rng::seed_from_u64(source.seed), &l, space);
            Ok((h, format!("random {} {} {:?}", source.seed, layout.key()?, space).into_bytes()))
        }
    }
}

fn context_for(h: &MapPair, param: &ParamArgs) -> Result<SpliceContext> {
    Ok(SpliceContext::new(param.parameter()?, h.layout())?)
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

fn write_pair(dir: &Path, h: &MapPair, plus: &str, minus: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(&dir.join(plus), &write_grid(&h.plus))?;
    write(&dir.join(minus), &write_grid(&h.minus))
}

fn glue(a: GlueArgs) -> Result<Done> {
    let space = if a.hat || a.space == SpaceArg::F { Space::F } else { Space::E };
    let (h, id) = source_pair(&a.source, &a.layout, space)?;
    let ctx = context_for(&h, &a.param)?;
    let (v, w) = if a.hat { ctx.hat_total_glue(&h)? } else { ctx.total_glue(&h)? };
    fs::create_dir_all(&a.out_dir)?;
    match (&v, &w) {
        (Glued::Pair(p), AntiGlued::Zero) => write_pair(&a.out_dir, p, "glued_plus.csv", "glued_minus.csv")?,
        (Glued::Neck(z), AntiGlued::Neck(c)) => {
            write(&a.out_dir.join("neck_z.csv"), &write_neck(z))?;
            write(&a.out_dir.join("neck_c.csv"), &write_neck(c))?;
        }
        _ => bail!("mismatched gluing output"),
    }
    let back = if a.hat { ctx.hat_total_unglue(&v, &w)? } else { ctx.total_unglue(&v, &w)? };
    let mut r = Report::new(if a.hat { "glue --hat" } else { "glue" }, digest([&id[..], a.param.key().as_bytes()]));
    r.push(CheckRow::at_most("round_trip", back.max_abs_diff(&h), a.tol));
    Ok(Done::report(&r))
}

fn unglue(a: UnglueArgs) -> Result<Done> {
    let ctx = SpliceContext::new(a.param.parameter()?, a.layout.layout()?)?;
    let (zt, ct) = (read(&a.necks.z)?, read(&a.necks.c)?);
    let (q, p) = load_necks(&ctx, &a.necks)?;
    if a.hat {
        // sections decay, so their necks carry no constants and no plateaus
        let constants = q.asympt().iter().chain(p.asympt());
        let plateaus = q.gaps().iter().chain(p.gaps()).flatten();
        ensure!(
            constants.chain(plateaus).all(|&c| c == 0.0),
            "--hat needs necks with vanishing constants and plateaus (glue them with --hat)"
        );
    }
    let (v, w) = (Glued::Neck(q), AntiGlued::Neck(p));
    let h = if a.hat { ctx.hat_total_unglue(&v, &w)? } else { ctx.total_unglue(&v, &w)? };
    write_pair(&a.out_dir, &h, "plus.csv", "minus.csv")?;
    let (v2, w2) = if a.hat { ctx.hat_total_glue(&h)? } else { ctx.total_glue(&h)? };
    let err = match (&v, &w, &v2, &w2) {
        (Glued::Neck(q), AntiGlued::Neck(p), Glued::Neck(q2), AntiGlued::Neck(p2)) => {
            resolved_diff(&ctx, q, q2)?.max(resolved_diff(&ctx, p, p2)?)
        }
        _ => bail!("mismatched gluing output"),
    };
    let mut r = Report::new(
        if a.hat { "unglue --hat" } else { "unglue" },
        digest([zt.as_bytes(), ct.as_bytes(), a.param.key().as_bytes(), a.layout.key()?.as_bytes()]),
    );
    r.push(CheckRow::at_most("reglue_on_resolved_nodes", err, a.tol));
    Ok(Done::report(&r))
}

fn project(a: ProjectArgs) -> Result<Done> {
    let space = if a.operator == Operator::HatPi { Space::F } else { Space::E };
    let (h, id) = source_pair(&a.source, &a.layout, space)?;
    let ctx = context_for(&h, &a.param)?;
    let name = format!("project --operator {:?}", a.operator).to_lowercase();
    let mut r = Report::new(name, digest([&id[..], a.param.key().as_bytes()]));
    let out = match a.operator {
        Operator::Pi => {
            let p = ctx.project(&h)?;
            r.push(CheckRow::at_most("idempotence", ctx.project(&p)?.max_abs_diff(&p), a.tol));
            r.push(CheckRow::at_most(
                "range_identity",
                glued_diff(&ctx.plus_glue(&p)?, &ctx.plus_glue(&h)?)?,
                a.tol,
            ));
            r.push(CheckRow::at_most("kernel_identity", anti_glued_abs(&ctx.minus_glue(&p)?), a.tol));
            r.push(CheckRow::at_most("closed_form_vs_unglue", p.max_abs_diff(&ctx.project_via_unglue(&h)?), a.tol));
            p
        }
        Operator::HatPi => {
            let p = ctx.hat_project(&h)?;
            r.push(CheckRow::at_most("idempotence", ctx.hat_project(&p)?.max_abs_diff(&p), a.tol));
            r.push(CheckRow::at_most(
                "range_identity",
                glued_diff(&ctx.hat_plus_glue(&p)?, &ctx.hat_plus_glue(&h)?)?,
                a.tol,
            ));
            r.push(CheckRow::at_most("kernel_identity", anti_glued_abs(&ctx.hat_minus_glue(&p)?), a.tol));
            r.push(CheckRow::at_most(
                "closed_form_vs_unglue",
                p.max_abs_diff(&ctx.hat_project_via_unglue(&h)?),
                a.tol,
            ));
            p
        }
        op => {
            let eta = ctx.project(&h)?;
            let x = match op {
                Operator::Ds => ctx.transfer_ds(&eta)?,
                Operator::Dt => ctx.transfer_dt(&eta)?,
                Operator::Cs => ctx.transfer_cs(&eta)?,
                _ => ctx.transfer_ct(&eta)?,
            };
            r.push(CheckRow::at_most("max_abs", x.max_abs(), f64::INFINITY));
            x
        }
    };
    if let Some(dir) = &a.out_dir {
        write_pair(dir, &out, "plus.csv", "minus.csv")?;
    }
    Ok(Done::report(&r))
}

fn core_test(a: CoreTestArgs) -> Result<Done> {
    let (h, _) = source_pair(&a.source, &a.layout, Space::E)?;
    let ctx = context_for(&h, &a.param)?;
    let h = if a.projected { ctx.project(&h)? } else { h };
    Ok(Done::ok(line(ctx.in_splicing_core(&h, a.tol)?)))
}

fn sweep(a: SweepArgs) -> Result<Done> {
    let resolution = match &a.grid {
        Some(g) => Resolution::parse(g)?,
        None => Resolution::from_env()?,
    };
    let spec = SweepSpec {
        a_grid: parse_a_grid(&a.a_grid)?,
        profile: parse_profile(&a.profile)?,
        twist: a.twist,
        deltas: if a.delta.is_empty() { vec![None] } else { a.delta.iter().copied().map(Some).collect() },
        levels: a.m.clone(),
        estimates: a.estimate.iter().map(|e| parse_estimate(e)).collect::<Result<_>>()?,
        resolution,
        s_max: a.s_max,
        dim: a.dim,
        count: a.count,
        seed: a.seed,
    };
    let groups = run_sweep(&spec, a.jobs)?;
    let mut table = sweep_table(&groups);
    table.comment(format!("command: sweep-estimates --a-grid {} --m {:?}", a.a_grid, a.m));
    table.comment(format!(
        "seed: {} count: {} grid: {}x{} s_max: {} profile: {} twist: {}",
        a.seed, a.count, resolution.per_unit, resolution.n_t, a.s_max, a.profile, a.twist
    ));
    let mut pass = true;
    for g in &groups {
        table.comment(format!("spread {}: {}", g.label(), num(g.spread())));
        if let Some(limit) = a.max_spread {
            pass &= g.spread() <= limit;
        }
    }
    if let Some(path) = &a.plot {
        let png = path.with_extension("png");
        let script = emit_plot_script(&sweep_series(&groups), "ratio envelope", &png.to_string_lossy())?;
        write(path, &script)?;
    }
    let csv = table.to_csv();
    let text = match &a.out {
        Some(path) => {
            write(path, &csv)?;
            String::new()
        }
        None => csv,
    };
    Ok(Done { text, pass })
}

fn emit_grid(u: &polyglue_core::cylinder::CylinderMap, out: Option<&Path>) -> Result<String> {
    let text = write_grid(u);
    match out {
        Some(p) => {
            write(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn cr(cmd: CrCmd) -> Result<Done> {
    match cmd {
        CrCmd::Apply { file, eps, out } => {
            let u = read_grid(&read(&file)?)?;
            let j = model_structure(u.dim(), eps)?;
            Ok(Done::ok(emit_grid(&u.cr_apply(&j)?, out.as_deref())?))
        }
        CrCmd::Dbar0 { file, out } => {
            let u = read_grid(&read(&file)?)?;
            let j = ComplexStructureField::standard(u.dim())?;
            Ok(Done::ok(emit_grid(&u.dbar0(&j)?, out.as_deref())?))
        }
        CrCmd::Solve {
            length,
            half_width,
            n_s,
            n_t,
            delta,
            dim,
            seed,
            tol,
        } => {
            let p = CrProblem::infinite_neck(length, half_width, n_s, n_t, delta, ComplexStructureField::standard(dim)?)?;
            let case = Manufactured::random(dim, &mut ChaCha8Rng::seed_from_u64(seed));
            let (err, sol) = manufactured_error(&p, &case)?;
            let zero = linear_cr_solve(&p, &NeckMap::zeros(&p.axis, dim))?;
            let key = format!("{length} {half_width} {n_s} {n_t} {delta} {dim} {seed}");
            let mut r = Report::new("cr solve", digest([key]));
            r.push(CheckRow::at_most("manufactured_error", err, tol));
            r.push(CheckRow::at_most("discrete_residual", sol.residual, 1e-8));
            r.push(CheckRow::at_most("zero_rhs_solution", zero.solution.max_abs(), 1e-12));
            r.push(CheckRow::at_most("condition", sol.condition, f64::INFINITY));
            Ok(Done::report(&r))
        }
        CrCmd::Kernel {
            length,
            ext,
            per_unit,
            n_t,
            delta,
            dim,
        } => {
            let p = CrProblem::extended_neck(length, ext, per_unit, n_t, delta, ComplexStructureField::standard(dim)?)?;
            let k = kernel_diagnostic(&p)?;
            let key = format!("{length} {ext} {per_unit} {n_t} {delta} {dim}");
            let mut r = Report::new("cr kernel", digest([key]));
            r.push(CheckRow::equal("near_zero", k.near_zero as f64, dim as f64));
            r.push(CheckRow::at_least("sigma_max", k.sigma_max, 0.0));
            r.push(CheckRow::at_least("restricted_min", k.restricted_min, 0.0));
            for (i, s) in k.singular_values.iter().take(2 * dim).enumerate() {
                r.push(CheckRow::at_least(format!("sigma_{i}"), *s, 0.0));
            }
            Ok(Done::report(&r))
        }
        CrCmd::Index { dim, g, k, c1 } => Ok(Done::ok(line(fredholm_index(dim, g, k, c1)?))),
        CrCmd::Contraction {
            modulus,
            radii,
            count,
            seed,
            eps,
        } => {
            ensure!(!radii.is_empty(), "need at least one radius");
            let layout = PairLayout::with_density(3.5, 4, 8, 2)?;
            let a = if modulus == 0.0 {
                GluingParameter::zero(GluingProfile::Exponential)
            } else {
                GluingParameter::polar(GluingProfile::Exponential, modulus, 0.0)?
            };
            let ctx = SpliceContext::new(a, layout)?;
            let base = MapPair::constant(&layout, Space::E, &[0.3, -0.2]);
            let j = model_structure(2, eps)?;
            let germ = Germ::new(&ctx, &base, &j)?;
            let est = contraction_sweep(&germ, &radii, count, seed)?;
            let mut t = Table::new(["radius", "modulus", "pairs", "skipped"]);
            t.comment(format!("command: cr contraction --modulus {modulus} --eps {eps}"));
            t.comment(format!("seed: {seed} count: {count}"));
            for e in &est {
                t.row([num(e.radius), num(e.modulus), e.pairs.to_string(), e.skipped.to_string()]);
            }
            let pass = est.windows(2).all(|w| w[1].modulus <= w[0].modulus);
            Ok(Done { text: t.to_csv(), pass })
        }
        CrCmd::Constraint { dim, eps, count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = coordinate_subspace(dim);
            let mut t = Table::new(["sample", "z_re", "z_im", "grid_re", "grid_im", "residual", "iterations"]);
            t.comment(format!("command: cr constraint --dim {dim} --eps {eps}"));
            t.comment(format!("seed: {seed}"));
            let mut pass = true;
            for i in 0..count {
                let v = PerturbedEmbedding::random(dim, eps, &mut rng)?;
                let p = transversal_constraint(&v, &h)?;
                let q = grid_search(&v, &h)?;
                pass &= p.residual <= 1e-10 && (p.z[0] - q[0]).abs().max((p.z[1] - q[1]).abs()) <= 1e-6;
                t.row([
                    i.to_string(),
                    num(p.z[0]),
                    num(p.z[1]),
                    num(q[0]),
                    num(q[1]),
                    num(p.residual),
                    p.iterations.to_string(),
                ]);
            }
            Ok(Done { text: t.to_csv(), pass })
        }
        CrCmd::Filled {
            source,
            param,
            layout,
            base,
            eps,
            out_dir,
            tol,
        } => {
            let (h, id) = source_pair(&source, &layout, Space::E)?;
            let l = h.layout();
            let c = if base.is_empty() { vec![0.0; l.dim] } else { base };
            ensure!(c.len() == l.dim, "--base needs {} values", l.dim);
            let u = MapPair::constant(&l, Space::E, &c);
            let h = h.add_scaled(-1.0, &MapPair::constant(&l, Space::E, h.constant_value()));
            let ctx = SpliceContext::new(param.parameter()?, l)?;
            let j = model_structure(l.dim, eps)?;
            let xi = filled_section(&ctx, &u, &h, &j)?;
            let direct = match (ctx.plus_glue(&u.add_scaled(1.0, &h))?, ctx.minus_glue(&h)?) {
                (Glued::Pair(p), AntiGlued::Zero) => p.cr_apply(&j)?,
                (Glued::Neck(v), AntiGlued::Neck(w)) => {
                    oracle::unglue(&ctx, &v.cr_apply(&j)?, &w.dbar0(&j.frozen_at(&c)?)?, true)?
                }
                _ => bail!("mismatched gluing output"),
            };
            let key = format!("{c:?} {eps}");
            let mut r = Report::new("cr filled", digest([&id[..], param.key().as_bytes(), key.as_bytes()]));
            r.push(CheckRow::at_most("equation_residual", filled_section_residual(&ctx, &xi, &u, &h, &j)?, tol));
            r.push(CheckRow::at_most("pointwise_assembly", xi.max_abs_diff(&direct), tol));
            if let Some(dir) = &out_dir {
                write_pair(dir, &xi, "plus.csv", "minus.csv")?;
            }
            Ok(Done::report(&r))
        }
    }
}

fn verify_cmd(a: VerifyArgs) -> Result<Done> {
    let known: Vec<u8> = verify::CRITERIA.iter().map(|c| c.0).collect();
    if let Some(bad) = a.only.iter().find(|i| !known.contains(i)) {
        return Err(anyhow!("no criterion {bad}; criteria are 1 to {}", known.len()));
    }
    let opts = VerifyOptions {
        quick: a.quick,
        seed: a.seed,
        jobs: a.jobs,
        artifacts: a.artifacts.clone(),
    };
    let outcomes = verify::run_all(&opts, &a.only);
    let mut text = format!("# seed: {} quick: {}\n", a.seed, a.quick);
    for o in &outcomes {
        text.push_str(&o.line());
        text.push('\n');
    }
    let pass = outcomes.iter().all(|o| o.pass());
    let passed = outcomes.iter().filter(|o| o.pass()).count();
    text.push_str(&format!("{passed}/{} criteria passed\n", outcomes.len()));
    if let Some(path) = &a.out {
        let key = format!("{} {} {:?}", a.seed, a.quick, a.only);
        write(path, &verify::to_report(&outcomes, digest([key])).to_csv())?;
    }
    Ok(Done { text, pass })
}

/// Which subcommand exercises each operation of the core library. Paths in
/// braces are placeholders for fixture files.
pub const OPERATIONS: &[(&str, &str)] = &[
    ("arithmetic_genus", "surface genus {surface}"),
    ("is_connected", "surface connected {surface}"),
    ("is_stable", "surface stable {surface}"),
    ("stabilize", "surface stabilize {surface}"),
    ("stabilize_with_order", "surface stabilize {surface} --order A,B"),
    ("forget_marked_point", "surface forget {stable} --index 2"),
    ("canonical_form", "surface canonical {surface}"),
    ("random_surface", "surface random --seed 3 --max-components 4"),
    ("gluing_length", "profile length --kind exp --r 0.25"),
    ("inverse_length", "profile inverse --kind log --length 3"),
    ("profile_convert", "profile convert --re 0.5 --im 0"),
    ("degeneration_index", "profile degeneration --coords 0,1,0 --quadrant 2"),
    ("bilevel_valid", "profile bilevel --m 1 --k 2"),
    ("sc_scale", "profile scale --m 2"),
    ("weighted_norm", "norm weighted {grid} --k 1 --delta 1"),
    ("weighted_norm_centered", "norm weighted {grid} --k 1 --delta 1 --center 0.5"),
    ("pair_norm", "norm pair --plus {plus} --minus {minus} --m 0"),
    ("neck_norm", "norm neck --z {z} --c {c} --length 16 --order 1 --delta 1"),
    ("circle_mean", "norm mean {grid} --s0 0.5"),
    ("evaluate", "norm eval {grid} --s 0.5 --t 0.25"),
    ("lift_point", "norm lift --length 16 --twist 0.25 --s 2 --t 0.5 --margin 1"),
    ("total_glue", "glue --length 16 --out-dir {dir}"),
    ("hat_total_glue", "glue --length 16 --hat --out-dir {dir}"),
    ("total_unglue", "unglue --z {z} --c {c} --length 16 --out-dir {dir}"),
    ("hat_total_unglue", "unglue --z {hz} --c {hc} --length 16 --hat --out-dir {dir}"),
    ("project", "project --modulus 0.25 --operator pi"),
    ("hat_project", "project --modulus 0.25 --operator hat-pi"),
    ("transfer_ds", "project --modulus 0.25 --operator ds"),
    ("transfer_dt", "project --modulus 0.25 --operator dt"),
    ("transfer_cs", "project --modulus 0.25 --operator cs"),
    ("transfer_ct", "project --modulus 0.25 --operator ct"),
    ("in_splicing_core", "core-test --modulus 0.25 --projected"),
    ("ratio_sweep", "sweep-estimates --a-grid R=5,R=10 --m 0 --count 2 --s-max 6"),
    ("emit_plot_script", "sweep-estimates --a-grid R=5 --count 2 --s-max 6 --plot {dir}/plot.py"),
    ("cr_apply", "cr apply {grid}"),
    ("dbar0", "cr dbar0 {grid}"),
    ("linear_cr_solve", "cr solve --length 5"),
    ("kernel_diagnostic", "cr kernel --length 5"),
    ("fredholm_index", "cr index --dim 6 --g 0 --k 3 --c1 0"),
    ("contraction_modulus", "cr contraction --count 2"),
    ("transversal_constraint", "cr constraint --dim 2 --count 1"),
    ("filled_section", "cr filled --modulus 0.25 --base 0.1,0.2"),
    ("acceptance_suite", "verify --quick --only 2,9"),
];
