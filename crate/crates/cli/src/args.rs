use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "aniso",
    version,
    about = "Directional analysis of spatial point patterns",
    after_help = "Exit codes: 0 success, 2 invalid input, 3 numerical failure."
)]
pub struct Cli {
    /// Worker threads; defaults to the number of logical cores. Results do
    /// not depend on this setting.
    #[arg(long, global = true, env = "ANISO_THREADS")]
    pub threads: Option<usize>,

    /// Record wall-clock time in the manifest. Reruns then differ in that
    /// one field.
    #[arg(long, global = true)]
    pub record_wall_clock: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Simulate a point process model into a pattern CSV.
    Simulate(SimulateArgs),
    /// Nearest-neighbour directional summaries.
    Nn(NnArgs),
    /// Second-order directional summaries: Fry points, K-measures,
    /// orientation densities and pair correlation functions.
    K2(K2Args),
    /// Fit ellipses to Fry-point contours and average their rotation.
    FryEllipse(FryArgs),
    /// Periodogram, smoothing and R/Θ spectra.
    Spectral(SpectralArgs),
    /// Rosenberg sector variance or continuous wavelet energy.
    Wavelet(WaveletArgs),
    /// Isotropy tests.
    Test(TestArgs),
    /// Regenerate every example summary for the regular and clustered
    /// archetype patterns.
    ReproduceFigures(FiguresArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PatternArgs {
    /// Pattern CSV with header `x,y` or `x,y,z`.
    #[arg(long)]
    pub input: PathBuf,
    /// Observation window as JSON `{"lo":[..],"hi":[..]}` or a path to such a
    /// file. Defaults to the `<input>.window.json` sidecar.
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelArg {
    Epanechnikov,
    Box,
    Gaussian,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// poisson, strauss, matern_ii, thomas, line_stripes, or one of the
    /// archetypes `regular` and `clustered` (which fix their own window).
    #[arg(long)]
    pub model: String,
    /// Model parameters as JSON, e.g. `{"lambda":200}`.
    #[arg(long, default_value = "{}")]
    pub params: String,
    /// Window JSON or path; defaults to `[-1,1]²`.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Linear transform applied after simulation: `{"angle":a,"scale":[sx,sy]}`
    /// in 2D or `{"axis":[..],"angle":a,"scale":[..]}` in 3D. The window
    /// becomes the bounding box of the transformed window.
    #[arg(long)]
    pub transform: Option<String>,
    /// Pattern CSV; metadata goes to `<out>.meta.json`.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NnStat {
    /// Orientation density of nearest-neighbour vectors on [0, 2π).
    Orientation,
    /// Directional distribution of neighbours within `r`.
    Dirdist,
    /// Global directed G-function.
    Gglobal,
    /// Local (cone-restricted) directed G-function.
    Glocal,
}

#[derive(Debug, Args, Serialize)]
pub struct NnArgs {
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, value_enum)]
    pub stat: NnStat,
    /// Cone axis angle φ in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub angle: f64,
    /// Cone axis colatitude θ in radians (3D only).
    #[arg(long)]
    pub polar: Option<f64>,
    /// Cone half-angle in radians.
    #[arg(long, default_value_t = PI / 4.0)]
    pub eps: f64,
    /// Range: one value is the radius for `dirdist` and the upper end of an
    /// evenly spaced grid for the G-functions; several values are used as
    /// the grid itself.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Grid nodes when `--r` is a single value.
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Angular bandwidth for `orientation`.
    #[arg(long, default_value_t = PI / 8.0)]
    pub bandwidth: f64,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    pub kernel: KernelArg,
    /// Angle grid size for `orientation` and `dirdist`.
    #[arg(long, default_value_t = 360)]
    pub angles: usize,
    /// Output CSV `abscissa,value,count`.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum K2Stat {
    /// Fry points (all pairwise differences).
    Fry,
    /// Conical K-measure.
    Kcone,
    /// Cylindrical K-measure.
    Kcyl,
    /// Second-order orientation density on [0, π).
    Orient2,
    /// Anisotropic pair correlation on an angle × range grid.
    Pcf,
    /// Isotropic pair correlation.
    Pcfiso,
    /// Conical pair correlation.
    Pcfcone,
    /// Cylindrical pair correlation.
    Pcfcyl,
}

#[derive(Debug, Args, Serialize)]
pub struct K2Args {
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, value_enum)]
    pub stat: K2Stat,
    /// Direction angles φ in radians; one curve per angle.
    #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
    pub angle: Vec<f64>,
    /// Colatitudes θ in radians (3D only); the first one sets the axis of
    /// the directional sets, all of them form the `pcf` polar grid.
    #[arg(long, value_delimiter = ',')]
    pub polar: Vec<f64>,
    /// Sector half-angle in radians.
    #[arg(long, default_value_t = PI / 8.0)]
    pub eps: f64,
    /// Cylinder half-width.
    #[arg(long, default_value_t = 0.03)]
    pub half_width: f64,
    /// Range grid, or its upper end when a single value is given.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Lower range for `orient2`.
    #[arg(long, default_value_t = 0.0)]
    pub r1: f64,
    /// Upper range for `orient2`.
    #[arg(long)]
    pub r2: Option<f64>,
    /// Range bandwidth for the pair correlations, or the angular bandwidth
    /// for `orient2` (default `3/sqrt(λ)`).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Angular bandwidth of the anisotropic pair correlation.
    #[arg(long, default_value_t = PI / 8.0)]
    pub angular_bandwidth: f64,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    pub kernel: KernelArg,
    /// Angle grid size for `orient2`.
    #[arg(long, default_value_t = 180)]
    pub angles: usize,
    /// Largest Fry vector length kept by `fry`.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Rose-of-directions CSV `angle,density` for `orient2`.
    #[arg(long)]
    #[serde(skip)]
    pub rose: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FryArgs {
    #[command(flatten)]
    pub pattern: PatternArgs,
    /// Contour levels (neighbour ranks), e.g. `3,4,5,6,7,8,9`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<usize>,
    /// Number of planar directions (2D); 3D uses a 162-vertex icosphere.
    #[arg(long, default_value_t = 36)]
    pub directions: usize,
    /// Sector half-angle; defaults to π/m in 2D and the equal-area cap in 3D.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Contour points CSV `level,angle,radius,x,y[,z]`.
    #[arg(long)]
    #[serde(skip)]
    pub contours: Option<PathBuf>,
    /// Fit JSON.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, default_value_t = 16)]
    pub pmax: usize,
    /// `none`, `gaussian:<sigma>` or `ma:<repeats>`.
    #[arg(long, default_value = "none")]
    pub smooth: String,
    /// Rescale coordinates so the window becomes square with side `n`.
    #[arg(long)]
    pub standardize: bool,
    /// Coverage of the χ² envelopes in the R/Θ output.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Periodogram grid `p1,p2,omega1,omega2,value` (smoothed if requested).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Unsmoothed grid, when smoothing is requested.
    #[arg(long)]
    #[serde(skip)]
    pub raw: Option<PathBuf>,
    /// R and Θ spectra `spectrum,abscissa,value,count,lower,upper`.
    #[arg(long)]
    #[serde(skip)]
    pub rtheta: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletMethod {
    Rosenberg,
    Cwt,
}

#[derive(Debug, Args, Serialize)]
pub struct CwtGridArgs {
    /// CWT scales (window units); default 16 log-spaced values over
    /// [0.02, 1] × the shorter window side.
    #[arg(long, value_delimiter = ',')]
    pub cwt_scales: Vec<f64>,
    /// Angle step in degrees over [0°, 180°).
    #[arg(long, default_value_t = 1.0)]
    pub angle_step: f64,
    /// Translations per axis.
    #[arg(long, default_value_t = 32)]
    pub translations: usize,
    /// Morlet elongation `D`.
    #[arg(long, default_value_t = 0.1)]
    pub d: f64,
    /// Morlet wave vector.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 5.5])]
    pub k0: Vec<f64>,
    /// Use the Morlet wavelet without the zero-mean correction.
    #[arg(long)]
    pub unadjusted: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct WaveletArgs {
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, value_enum)]
    pub method: WaveletMethod,
    /// Rosenberg scales in degrees (default 1..45).
    #[arg(long, value_delimiter = ',')]
    pub scales: Vec<f64>,
    /// Rosenberg border margin; focal points closer to the boundary are
    /// skipped (default 10% of the shorter side).
    #[arg(long)]
    pub margin: Option<f64>,
    #[command(flatten)]
    pub cwt: CwtGridArgs,
    /// `theta,pbar` (rosenberg) or `scale,angle,energy` (cwt).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    /// Kernel contrast test with block-subsampling covariance.
    Guan,
    /// Kolmogorov–Smirnov test on pair angles, Monte Carlo calibrated.
    Wong,
    /// Replicate-based directional contrast test.
    Replicate,
    /// Equal semi-axes test on fitted Fry-point ellipses.
    Ellipse,
    /// Per-direction wavelet energy test, Monte Carlo calibrated.
    Wavelet,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateStat {
    ConicalK,
    GLocal,
    GGlobal,
}

#[derive(Debug, Args, Serialize)]
pub struct TestArgs {
    /// Pattern CSV; repeat for the replicate test.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Window JSON or path, shared by all inputs; defaults to the sidecars.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, value_enum)]
    pub method: TestMethod,
    /// Isotropic null model JSON for Monte Carlo tests, e.g.
    /// `{"model":"poisson","lambda":100}`; defaults to Poisson at the
    /// observed intensity.
    #[arg(long)]
    pub null: Option<String>,
    /// Monte Carlo simulations.
    #[arg(long, default_value_t = 199)]
    pub sims: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Nominal test level.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,

    /// Number of evenly spaced lags (guan).
    #[arg(long, default_value_t = 4)]
    pub lags: usize,
    /// Lag length (guan).
    #[arg(long)]
    pub lag_length: Option<f64>,
    /// Explicit lags as a JSON list of vectors (guan, required in 3D).
    #[arg(long)]
    pub lag_vectors: Option<String>,
    /// Contrast matrix as a JSON list of rows (guan).
    #[arg(long)]
    pub contrast: Option<String>,
    /// Disc kernel radius (guan).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Block size factor (guan).
    #[arg(long, default_value_t = 0.8)]
    pub block_factor: f64,

    /// Pair range (wong).
    #[arg(long)]
    pub r: Option<f64>,
    /// Rotation step of the angle origin in degrees (wong).
    #[arg(long, default_value_t = 10.0)]
    pub psi_step: f64,

    /// Directional summary (replicate).
    #[arg(long, value_enum, default_value = "conical-k")]
    pub statistic: ReplicateStat,
    #[arg(long, default_value_t = 0.0)]
    pub r1: f64,
    #[arg(long)]
    pub r2: Option<f64>,
    /// Sector half-angle (replicate).
    #[arg(long, default_value_t = PI / 4.0)]
    pub eps: f64,
    /// Axis contrasted with the coordinate axes (replicate).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub test_axis: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub grid_size: usize,

    /// Contour levels (ellipse).
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8,9")]
    pub levels: Vec<usize>,
    /// Normal resampling draws (ellipse).
    #[arg(long, default_value_t = 999)]
    pub mc: usize,

    #[command(flatten)]
    pub cwt: CwtGridArgs,

    #[arg(long)]
    #[serde(skip)]
    pub report: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FiguresArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "figures")]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Flags that name outputs or tune execution; they are left out of the
/// manifest so that the same analysis always gets the same manifest.
pub const NON_CONFIG_FLAGS: [&str; 7] = ["--out", "--report", "--rose", "--contours", "--raw", "--rtheta", "--threads"];
