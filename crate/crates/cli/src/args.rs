use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "sbt",
    version,
    about = "Discretize, analyze and simulate resonant controllers"
)]
pub struct Cli {
    /// JSON file with default values; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the main result here instead of stdout.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Name {
    Analog,
    Exact,
    Pi,
    Euler,
    Tustin,
    Sota,
    Sbt,
}

impl Name {
    pub fn as_str(self) -> &'static str {
        match self {
            Name::Analog => "analog",
            Name::Exact => "exact",
            Name::Pi => "pi",
            Name::Euler => "euler",
            Name::Tustin => "tustin",
            Name::Sota => "sota",
            Name::Sbt => "sbt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoleSource {
    /// `-wc +- j wn`, the convention of the published case values.
    Natural,
    /// `-wc +- j sqrt(wn^2 - wc^2)`, the actual controller poles.
    Damped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    MagRmseDb,
    MagRmseLinear,
    PoleDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingArg {
    Lin,
    Log,
}

/// QR controller constants and sampling rate.
#[derive(Debug, Clone, Default, Args)]
pub struct ControllerArgs {
    /// Resonant gain.
    #[arg(long)]
    pub kr: Option<f64>,
    /// Cutoff bandwidth in rad/s.
    #[arg(long)]
    pub wc: Option<f64>,
    /// Resonant frequency in rad/s.
    #[arg(long)]
    pub wn: Option<f64>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
}

/// SBT parameters; missing values fall back to `(0.5, K_pw)`.
#[derive(Debug, Clone, Default, Args)]
pub struct SbtArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
}

/// Frequency grid. Precedence: file, explicit range, preset, `SBT_DEFAULT_GRID`,
/// built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// default | full-band | resonance | wideband
    #[arg(long, value_name = "PRESET")]
    pub grid: Option<String>,
    /// File with one frequency in Hz per line.
    #[arg(long, value_name = "PATH")]
    pub grid_file: Option<PathBuf>,
    #[arg(long, requires_all = ["fmax", "points"])]
    pub fmin: Option<f64>,
    #[arg(long, requires_all = ["fmin", "points"])]
    pub fmax: Option<f64>,
    #[arg(long, requires_all = ["fmin", "fmax"])]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub spacing: Option<SpacingArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Second-order section coefficients per method.
    Discretize {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        sbt: SbtArgs,
        #[arg(long = "method", alias = "methods", value_enum, value_delimiter = ',')]
        methods: Vec<Name>,
        /// Also print the difference-equation gains.
        #[arg(long)]
        diffeq: bool,
    },
    /// Magnitude and phase over a grid.
    Bode {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        sbt: SbtArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "analog")]
        method: Name,
    },
    /// Analog minus discrete magnitude in dB over a grid.
    Error {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        sbt: SbtArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        method: Name,
    },
    /// RMSE of the magnitude error per method, plus the SBT/SOTA ratio.
    Rmse {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        sbt: SbtArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "methods", alias = "method", value_enum, value_delimiter = ',')]
        methods: Vec<Name>,
        /// Errors on linear magnitude instead of dB.
        #[arg(long)]
        linear: bool,
    },
    /// Where the resonant pole lands under each method.
    PoleMap {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        sbt: SbtArgs,
        #[arg(long = "methods", alias = "method", value_enum, value_delimiter = ',')]
        methods: Vec<Name>,
        #[arg(long, value_enum, default_value = "natural")]
        pole: PoleSource,
    },
    /// Time-domain runs.
    Simulate {
        #[command(subcommand)]
        scenario: Scenario,
    },
    /// Search for the best (alpha, beta).
    Optimize {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "mag-rmse-db")]
        loss: LossArg,
        #[arg(long)]
        alpha_min: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        beta_min: Option<f64>,
        #[arg(long)]
        beta_max: Option<f64>,
        /// Coarse scan points per axis.
        #[arg(long)]
        coarse: Option<usize>,
        /// Golden-section iterations per axis and sweep.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        sweeps: Option<usize>,
        /// CSV file for every evaluated candidate.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Scenario {
    /// Sine response of the discrete QR controller.
    Board {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        sbt: SbtArgs,
        #[arg(long = "methods", alias = "method", value_enum, value_delimiter = ',')]
        methods: Vec<Name>,
        /// Test frequency in Hz.
        #[arg(long, default_value_t = 950.0)]
        f: f64,
        #[arg(long, default_value_t = 1.0)]
        amp: f64,
        #[arg(long)]
        settle: Option<usize>,
        #[arg(long)]
        measure: Option<usize>,
        /// Directory for `board.csv`.
        #[arg(long, value_name = "DIR")]
        trace_dir: Option<PathBuf>,
    },
    /// Closed-loop grid current with a harmonic in the grid voltage.
    Inverter {
        #[command(flatten)]
        ctrl: ControllerArgs,
        #[command(flatten)]
        sbt: SbtArgs,
        #[arg(long = "methods", alias = "method", value_enum, value_delimiter = ',')]
        methods: Vec<Name>,
        /// Seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Reference amplitude in A.
        #[arg(long)]
        i_ref: Option<f64>,
        #[arg(long)]
        harmonic_f: Option<f64>,
        #[arg(long)]
        harmonic_amp: Option<f64>,
        /// Controller output delay in samples.
        #[arg(long)]
        delay: Option<usize>,
        /// Measure grid current after the filter capacitor.
        #[arg(long)]
        capacitor_branch: bool,
        /// Grid periods in the THD window.
        #[arg(long, default_value_t = 10)]
        cycles: usize,
        /// Directory for `inverter_<method>.csv` traces.
        #[arg(long, value_name = "DIR")]
        trace_dir: Option<PathBuf>,
    },
}
