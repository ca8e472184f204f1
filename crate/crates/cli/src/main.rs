use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use torus_restrict_cli::config::{self, Settings};
use torus_restrict_cli::{execute, Experiment, ExperimentConfig};

/// Lattice-shell, surface Fourier transform and restriction sweeps.
///
/// Every experiment writes one header row and one row per parameter value.
/// Settings can come from a config file (`--config`, one `[experiment]`
/// section of `key = value` lines using the flag names); flags override it.
#[derive(Parser)]
#[command(name = "torlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shell point counts (and the two-squares formula when d = 2).
    Shells(Flags),
    /// Largest cap count: exact arcs of length --threshold (default
    /// 2·λ^{1/3}) for d = 2, centred caps of chordal radius --threshold
    /// (default 0.5·m^{1/8}) with a coplanarity check for d = 3.
    Caps(Flags),
    /// Shortest arc through three points, its ratio to m^{1/6}, and the arc
    /// count at --threshold·λ^{1/3} (default factor 2), d = 2.
    Jarnik(Flags),
    /// Cell counts Σ N_α and Σ N_α² for cubes of side m^{1/4}.
    Meansquare(Flags),
    /// σ̂(ξ) at ξ = √m·u_m by quadrature, closed form and stationary phase.
    Sigma(Flags),
    /// Gram form against direct surface quadrature on --vectors random unit
    /// coefficient vectors, plus the extreme eigenvalues.
    Restrict(Flags),
    /// Cluster-decomposition certificate at --threshold (default 2·λ^{1/3}),
    /// d = 2.
    Certify(Flags),
    /// Bilinear sums over separated sets for each β in --beta-list.
    Bilinear(Flags),
    /// Cap-pair double sums for antipodal caps of size --cap-fraction·λ,
    /// d = 3.
    Cappair(Flags),
    /// Check a config file without running it; lists every problem.
    Validate {
        path: PathBuf,
    },
}

#[derive(Args)]
struct Flags {
    /// Config file with an [experiment] section.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ambient dimension (2..=5).
    #[arg(long)]
    d: Option<String>,
    #[arg(long = "m-min")]
    m_min: Option<String>,
    #[arg(long = "m-max")]
    m_max: Option<String>,
    /// Comma-separated m values (instead of --m-min/--m-max).
    #[arg(long = "m-list")]
    m_list: Option<String>,
    /// Comma-separated β values (bilinear).
    #[arg(long = "beta-list")]
    beta_list: Option<String>,
    /// e.g. circle:rho=0.25,cx=0.5,cy=0.5 | ellipse:a=..,b=.. |
    /// sphere:rho=.. | ellipsoid:a=..,b=..,c=..
    #[arg(long)]
    surface: Option<String>,
    /// Cap size, arc factor or cluster threshold (see the subcommand).
    #[arg(long)]
    threshold: Option<String>,
    /// Quadrature tolerance (default 1e-10).
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output file (stdout when absent); written atomically.
    #[arg(long)]
    out: Option<String>,
    /// csv (default) or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    jobs: Option<String>,
    /// Random coefficient vectors per shell (restrict, default 10).
    #[arg(long)]
    vectors: Option<String>,
    /// maximal_grid,random_greedy,perturbed_grid (bilinear).
    #[arg(long)]
    patterns: Option<String>,
    /// Randomized set pairs per pattern and β (bilinear, default 10).
    #[arg(long)]
    sets: Option<String>,
    /// full or linear phase (bilinear).
    #[arg(long)]
    phase: Option<String>,
    /// Cap size as a fraction of λ (cappair, default 0.25).
    #[arg(long = "cap-fraction")]
    cap_fraction: Option<String>,
    /// Minimum centre distance in units of the cap size (cappair, default 8).
    #[arg(long)]
    separation: Option<String>,
}

impl Flags {
    fn overrides(self) -> Settings {
        [
            ("d", self.d),
            ("m-min", self.m_min),
            ("m-max", self.m_max),
            ("m-list", self.m_list),
            ("beta-list", self.beta_list),
            ("surface", self.surface),
            ("threshold", self.threshold),
            ("tol", self.tol),
            ("seed", self.seed),
            ("out", self.out),
            ("format", self.format),
            ("jobs", self.jobs),
            ("vectors", self.vectors),
            ("patterns", self.patterns),
            ("sets", self.sets),
            ("phase", self.phase),
            ("cap-fraction", self.cap_fraction),
            ("separation", self.separation),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::Validate { path } => return validate(&path),
        Command::Shells(f) => (Experiment::Shells, f),
        Command::Caps(f) => (Experiment::Caps, f),
        Command::Jarnik(f) => (Experiment::Jarnik, f),
        Command::Meansquare(f) => (Experiment::MeanSquare, f),
        Command::Sigma(f) => (Experiment::Sigma, f),
        Command::Restrict(f) => (Experiment::Restrict, f),
        Command::Certify(f) => (Experiment::Certify, f),
        Command::Bilinear(f) => (Experiment::Bilinear, f),
        Command::Cappair(f) => (Experiment::CapPair, f),
    };
    let mut settings = match &flags.config {
        Some(path) => match config::load_section(path, experiment) {
            Ok(s) => s,
            Err(diags) => return usage_error(&diags),
        },
        None => Settings::new(),
    };
    settings.extend(flags.overrides());
    let cfg = match ExperimentConfig::from_settings(experiment, &settings) {
        Ok(c) => c,
        Err(diags) => return usage_error(&diags),
    };
    match execute(&cfg) {
        Ok(table) => {
            info!("{experiment}: {} rows", table.rows.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{experiment}: {e}");
            ExitCode::FAILURE
        }
    }
}

fn usage_error(diags: &[config::Diagnostic]) -> ExitCode {
    for d in diags {
        eprintln!("error: {d}");
    }
    ExitCode::from(2)
}

fn validate(path: &std::path::Path) -> ExitCode {
    match config::validate_file(path) {
        Ok(diags) if diags.is_empty() => {
            println!("{}: ok", path.display());
            ExitCode::SUCCESS
        }
        Ok(diags) => {
            for d in &diags {
                println!("{d}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            ExitCode::from(2)
        }
    }
}
