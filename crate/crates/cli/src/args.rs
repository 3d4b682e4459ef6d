use crate::config::{parse_list, parse_real};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "serrin-vortex",
    version,
    about = "Power-law swirling vortex solutions: closed forms, BVP solvers, field export and verification"
)]
pub struct Cli {
    /// JSON file with default values (keys: b, c, C1, C_omega, nu, h, tol,
    /// max_iter, delta, T, nu_list, b_list, c_list). Flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a closed-form solution: the inviscid b = 1 family, or the pure
    /// rotation for other b (C1 = 0).
    Analytic(AnalyticArgs),
    /// Solve the inviscid problem for 0 < b < 1.
    SolveInviscid(InviscidArgs),
    /// Solve the viscous b = 1 problem with calibrated closure.
    SolveViscous(ViscousArgs),
    /// Inviscid solutions over a list of b or c values.
    Sweep(SweepArgs),
    /// Boundary-layer size against viscosity and the fitted log-log slope.
    LayerScaling(LayerArgs),
    /// Export fields reconstructed from a solution file.
    Fields(FieldsArgs),
    /// Check a solution file against the governing equations.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long = "C1", value_parser = parse_real, allow_hyphen_values = true)]
    pub c1: Option<f64>,
    #[arg(long = "C-omega", value_parser = parse_real, allow_hyphen_values = true)]
    pub c_omega: Option<f64>,
    /// Decay exponent; values other than 1 require C1 = 0.
    #[arg(long, value_parser = parse_real)]
    pub b: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub h: Option<f64>,
    #[arg(short, long, default_value = "solution.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InviscidArgs {
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub h: Option<f64>,
    /// Newton stopping threshold on the correction sup-norm.
    #[arg(long, value_parser = parse_real)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(short, long, default_value = "solution.json")]
    pub out: PathBuf,
    /// Also write the convergence report as JSON.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ViscousArgs {
    #[arg(long, value_parser = parse_real, conflicts_with = "k")]
    pub nu: Option<f64>,
    /// Alternative to --nu: k = 1 / (2 nu).
    #[arg(long, value_parser = parse_real)]
    pub k: Option<f64>,
    #[arg(long = "C-omega", value_parser = parse_real, allow_hyphen_values = true)]
    pub c_omega: Option<f64>,
    /// Mesh step; defaults to the coarsest step with h <= nu/4.
    #[arg(long, value_parser = parse_real)]
    pub h: Option<f64>,
    /// Relative deviation of Omega defining the layer edge.
    #[arg(long, value_parser = parse_real)]
    pub delta: Option<f64>,
    /// Use this value of F'' at the first node instead of calibrating.
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub closure: Option<f64>,
    /// Run on a mesh with h > nu/4, with a warning.
    #[arg(long)]
    pub allow_unresolved: bool,
    #[arg(short, long, default_value = "solution.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// b values (comma list or start:stop:step), at fixed --c.
    #[arg(long, value_parser = parse_list_arg, conflicts_with = "c_list")]
    pub b_list: Option<RealList>,
    /// c values, at fixed --b.
    #[arg(long, value_parser = parse_list_arg)]
    pub c_list: Option<RealList>,
    #[arg(long, value_parser = parse_real)]
    pub b: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub h: Option<f64>,
    /// Start every entry from the initial guess and run entries in parallel
    /// instead of continuing from the previous entry.
    #[arg(long)]
    pub cold: bool,
    #[arg(long, default_value = "sweep")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct LayerArgs {
    /// Viscosities; defaults to 1/100,1/200,1/500,1/1000,1/2000.
    #[arg(long, value_parser = parse_list_arg)]
    pub nu_list: Option<RealList>,
    #[arg(long = "C-omega", value_parser = parse_real, allow_hyphen_values = true)]
    pub c_omega: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub delta: Option<f64>,
    /// CSV output with columns nu,layer_x.
    #[arg(short, long, default_value = "layer.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FieldsArgs {
    /// Solution file to reconstruct the fields from.
    #[arg(long, short = 's')]
    pub solution: PathBuf,
    #[command(subcommand)]
    pub what: FieldsCommand,
}

#[derive(Debug, Args, Clone)]
pub struct GridArgs {
    /// Radial range lo:hi.
    #[arg(long, default_value = "0.01:1", value_parser = parse_range)]
    pub r: (f64, f64),
    /// Height range lo:hi.
    #[arg(long, default_value = "0.01:1", value_parser = parse_range)]
    pub z: (f64, f64),
    #[arg(long, default_value_t = 100)]
    pub n_r: usize,
    #[arg(long, default_value_t = 100)]
    pub n_z: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridKind {
    Speed,
    Pressure,
    Velocity,
}

#[derive(Debug, Subcommand)]
pub enum FieldsCommand {
    /// Speed, pressure or velocity on an (r, z) grid in the plane y = 0.
    Grid {
        #[arg(long, value_enum, default_value = "speed")]
        kind: GridKind,
        #[command(flatten)]
        grid: GridArgs,
        /// Pressure constant.
        #[arg(long = "T", value_parser = parse_real, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(short, long, default_value = "field.csv")]
        out: PathBuf,
    },
    /// Trace a streamline with fixed-step RK4 and report the drift of the
    /// stream function along it.
    Streamline {
        /// Cartesian start point x,y,z.
        #[arg(long, value_parser = parse_point)]
        start: [f64; 3],
        #[arg(long, default_value = "1e-3", value_parser = parse_real)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(short, long, default_value = "streamline.csv")]
        out: PathBuf,
    },
    /// Least-squares exponent of the speed against r at fixed height.
    Powerlaw {
        #[arg(long, default_value = "1", value_parser = parse_real)]
        z0: f64,
        /// Radii (comma list or start:stop:step); default 10 geometric
        /// points over [1e-3, 1e-2].
        #[arg(long, value_parser = parse_list_arg)]
        radii: Option<RealList>,
    },
    /// Rayleigh discriminant on a grid, with the stability class.
    Rayleigh {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(short, long, default_value = "rayleigh.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    /// Chosen from b and nu in the file.
    Auto,
    /// Reduced Euler equations (requires nu = 0).
    Inviscid,
    /// Reduced Navier-Stokes equations (requires nu > 0).
    Viscous,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub solution: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: VerifyMode,
    /// Distance from x = 0 and x = 1 excluded from the checks of
    /// inviscid and split-viscous equations.
    #[arg(long, default_value = "0.05", value_parser = parse_real)]
    pub window: f64,
    /// Take derivatives on every stride-th node for the inviscid and
    /// split-viscous checks; this removes odd-even oscillations left by
    /// centered differences in solver output.
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    /// Override every per-equation threshold.
    #[arg(long, value_parser = parse_real)]
    pub tol: Option<f64>,
    /// Also run the full-field finite-difference check on a grid.
    #[arg(long)]
    pub fullfield: bool,
    /// Spacing of the full-field check.
    #[arg(long, default_value = "1e-3", value_parser = parse_real)]
    pub spacing: f64,
    /// Write all residuals to this CSV.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    Ok((parse_real(a)?, parse_real(b)?))
}

pub fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v = s.split(',').map(parse_real).collect::<Result<Vec<_>, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| format!("expected x,y,z, got '{s}'"))
}

/// A list of reals given as one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

pub fn parse_list_arg(s: &str) -> Result<RealList, String> {
    parse_list(s).map(RealList)
}
