use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "quadric",
    version,
    about = "Quadrics of revolution through their reciprocal radial functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a quadric and write its point cloud plus a metadata record.
    Generate(GenerateArgs),
    /// Fit w = S + <x, v> to radial data and classify the quadric.
    Fit(FitArgs),
    /// Evaluate the PDE residuals of a solution, a fit, or a fixture field.
    Verify(VerifyArgs),
    /// Classify the affine field S + C<x, xi>.
    Classify(ClassifyArgs),
    /// Center, second focus and semi-axes of a central quadric.
    Elements(ElementsArgs),
    /// Convergence table of finite-difference Hessians against the analytic one.
    ResidualScan(ScanArgs),
}

/// A quadric given either by its canonical form (`--kind`, `--f`, `--eps`)
/// or by solution parameters (`--c2`, `--C`, `--branch`).
#[derive(Debug, Args)]
pub struct ShapeArgs {
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<f64>,
    #[arg(long = "C", allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Sign of S, only free when c2 < 1.
    #[arg(long, default_value = "plus")]
    pub branch: String,
    /// Comma-separated axis in R^{n+1}; defaults to the last basis vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub axis: Vec<f64>,
    /// Sphere dimension n.
    #[arg(long)]
    pub dimension: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long)]
    pub tol_c2: Option<f64>,
    #[arg(long)]
    pub tol_s: Option<f64>,
    #[arg(long)]
    pub tol_amplitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitOptionArgs {
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    /// uniform or rho2.
    #[arg(long, default_value = "uniform")]
    pub weighting: String,
    /// Classification bands are widened to this many standard errors.
    #[arg(long)]
    pub significance: Option<f64>,
    #[arg(long)]
    pub max_condition: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Columns {
    /// Surface points p0..pn.
    Ambient,
    /// Directions and radii x0..xn,rho.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative Gaussian noise applied to rho.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, value_enum, default_value_t = Columns::Ambient)]
    pub columns: Columns,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metadata path; defaults to `<out>.meta.json` when `--out` is given.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with columns x0..xn,rho or p0..pn.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub options: FitOptionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Fit this data set and verify the fit against it.
    #[arg(long, conflicts_with_all = ["field", "k", "radius"])]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Fixture field instead of a solution: axial-quadratic is 1 + <x, xi>².
    #[arg(long)]
    pub field: Option<String>,
    /// Curvature of the sphere carrying the field.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use finite differences with this step instead of analytic derivatives.
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub fd_levels: usize,
    /// Exit with code 4 when the largest residual exceeds this.
    #[arg(long, default_value_t = 1e-6)]
    pub fail_above: f64,
    #[command(flatten)]
    pub options: FitOptionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long = "S", allow_hyphen_values = true)]
    pub s: f64,
    #[arg(long = "C", allow_hyphen_values = true)]
    pub amplitude: f64,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ElementsArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Comma-separated finite-difference steps.
    #[arg(long = "h", value_delimiter = ',', num_args = 0..)]
    pub steps: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub dimension: usize,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub c2: f64,
    #[arg(long = "C", default_value_t = 1.0, allow_hyphen_values = true)]
    pub amplitude: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub axis: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
