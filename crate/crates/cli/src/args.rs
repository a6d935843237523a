use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bcp",
    version,
    about = "Ellipticity, spectra and spectral asymptotics of boundary contact problems on metric graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every command that needs a computed spectrum.
#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Problem file, or the name of a builtin example.
    pub problem: String,
    /// Upper end of the certified eigenvalue window.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_max: Option<f64>,
    /// Number of eigenvalues (with multiplicity) the window must hold.
    #[arg(long)]
    pub max_eig: Option<usize>,
    /// Lower end of the sweep; defaults to a bound below every eigenvalue.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_lo: Option<f64>,
    /// Integrate constant-coefficient edges numerically as well.
    #[arg(long)]
    pub force_numeric: bool,
    /// Reuse and store spectra under this directory.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check parameter-ellipticity of the coupling conditions in the declared sector.
    Check {
        problem: String,
        /// Samples on the sector arc per vertex.
        #[arg(long, default_value_t = bcp_core::ellipticity::DEFAULT_ARC_SAMPLES)]
        sector_samples: usize,
        /// Smallest normalized singular value accepted as invertible.
        #[arg(long, default_value_t = bcp_core::ellipticity::DEFAULT_THRESHOLD)]
        sigma_threshold: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certified eigenvalues with multiplicities.
    Spectrum {
        #[command(flatten)]
        query: SpectrumArgs,
    },
    /// Heat trace on a grid of times.
    Heat {
        #[command(flatten)]
        query: SpectrumArgs,
        /// `lo:hi:n`, log-spaced.
        #[arg(long)]
        t_grid: Option<String>,
        /// Per-edge multiplier weights, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
    },
    /// Heat invariants fitted to the small-time heat trace.
    HeatFit {
        #[command(flatten)]
        query: SpectrumArgs,
        #[arg(long)]
        t_grid: Option<String>,
        #[arg(long, default_value_t = bcp_core::asymptotics::DEFAULT_TERMS)]
        terms: usize,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
    },
    /// Spectral zeta values, poles and residues.
    Zeta {
        #[command(flatten)]
        query: SpectrumArgs,
        /// Comma-separated arguments.
        #[arg(long, allow_hyphen_values = true, default_value = "2")]
        s: String,
        #[arg(long)]
        t_grid: Option<String>,
        #[arg(long, default_value_t = bcp_core::asymptotics::DEFAULT_TERMS)]
        terms: usize,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
    },
    /// Power-law fit of the ordered eigenvalues.
    Weyl {
        #[command(flatten)]
        query: SpectrumArgs,
    },
    /// Resolvent norm along a ray, over a range of moduli.
    ResolventScan {
        #[command(flatten)]
        query: SpectrumArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 135.0)]
        ray_deg: f64,
        /// Smallest modulus sampled.
        #[arg(long, default_value_t = 100.0)]
        start: f64,
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
        /// Samples per decade.
        #[arg(long, default_value_t = 1)]
        per_decade: usize,
    },
    /// Resolvent-trace coefficients along a ray.
    ResolventFit {
        #[command(flatten)]
        query: SpectrumArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 180.0)]
        ray_deg: f64,
        #[arg(long = "N", default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = bcp_core::asymptotics::DEFAULT_TERMS)]
        terms: usize,
        #[arg(long, default_value_t = 3.0)]
        decades: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
    },
    /// Solve `(A - lambda) u = f` with the coupling conditions.
    Solve {
        problem: String,
        /// `re` or `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        /// Per-edge constant right-hand sides, comma separated; 1 on every edge by default.
        #[arg(long, allow_hyphen_values = true)]
        rhs: Option<String>,
        /// Grid intervals per edge.
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Builtin example problems.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExamplesAction {
    List,
    /// Print a builtin problem file; with --out also write its oracle next to it.
    Emit {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
