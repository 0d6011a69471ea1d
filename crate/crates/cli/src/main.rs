//! `sublevel` — reproducible tables for sublevel measures and Mahler measures.

mod commands;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] sublevel::Error),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 2,
            CliError::Lib(_) | CliError::Input(_) => 1,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "sublevel",
    version,
    about = "Sublevel measures of trigonometric polynomials and Mahler measure experiments"
)]
pub struct Cli {
    /// Master seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it
    #[arg(long, global = true, env = "SUBLEVEL_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct PolyArgs {
    /// Trigonometric polynomial as JSON: {"terms": [{"omega", "re", "im"}, ...]}
    #[arg(long, conflicts_with = "coeffs")]
    pub poly: Option<PathBuf>,
    /// Coefficients of frequencies 0, 1, 2, ... (e.g. "1,0,-1" or "1+2i,-i")
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Stratified samples
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Half width L of the window [-L, L]; default is one exact period, or
    /// 1000 periods of the bandwidth when there is none
    #[arg(long)]
    pub window: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Thresholds u
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Option<Vec<f64>>,
    /// Log-spaced thresholds "lo,hi,count"
    #[arg(long, conflicts_with = "u")]
    pub u_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate J_f(u), the mean measure of {|f| < u}
    Jf {
        #[command(flatten)]
        poly: PolyArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Estimate the derivative-radius event measure Ξ
    Xi {
        #[command(flatten)]
        poly: PolyArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        u: f64,
        /// One row per v
        #[arg(long, value_delimiter = ',', required = true)]
        v: Vec<f64>,
    },
    /// Grid-search upper estimate of K_f(u)
    Kf {
        #[command(flatten)]
        poly: PolyArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 4)]
        k_max: u32,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0"
        )]
        omegas: Vec<f64>,
        /// Log-spaced v grid "lo,hi,count"
        #[arg(long, default_value = "1e-3,1e3,61")]
        v_grid: String,
    },
    /// The bound C_n H^(-1/n) u^(1/n), optionally against Ĵ_f; with --p, the log-moment bound
    Bound {
        #[command(flatten)]
        poly: PolyArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Term-count parameter; defaults to (terms of f) - 1
        #[arg(long)]
        n: Option<u64>,
        /// Height; defaults to the height of f
        #[arg(long)]
        height: Option<f64>,
        /// Exponents p ≥ 1 of the mean of |log⁻|f||^p
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
    },
    /// Checkpoints of the constant sequence C_n
    Cn {
        #[arg(long, default_value_t = 1_000_000)]
        n_max: u64,
        /// Number of checkpoints; default doubles from n = 1
        #[arg(long)]
        checkpoints: Option<usize>,
    },
    /// Mahler measure triple (M, M⁺, M⁻) of a polynomial or of Φ_N
    Mahler {
        #[command(flatten)]
        poly: PolyArgs,
        /// Use the cyclotomic product Φ_N instead of a polynomial
        #[arg(long = "N")]
        big_n: Option<u64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 2_000_000)]
        max_panels: usize,
        /// Also report whether the polynomial is outer
        #[arg(long)]
        outer: bool,
    },
    /// log M⁺(Φ_N) by quadrature and by sampling, with a power-law fit
    PhinGrowth {
        #[arg(
            long = "N-list",
            value_delimiter = ',',
            default_value = "5,10,20,40,80",
            conflicts_with = "big_n"
        )]
        n_list: Vec<u64>,
        #[arg(long = "N")]
        big_n: Option<u64>,
        #[arg(long, default_value_t = 1 << 22)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 2_000_000)]
        max_panels: usize,
        #[arg(long, default_value_t = sublevel::mahler::cyclotomic::DEFAULT_N_CAP)]
        n_cap: u64,
    },
    /// Farey fractions of order N, the root angles of Φ_N
    Farey {
        #[arg(long = "N")]
        big_n: u64,
    },
    /// log M⁻ of p_n and q_n against their bounds
    Examples {
        #[arg(long, default_value_t = 2)]
        n_min: u64,
        #[arg(long, default_value_t = 12)]
        n_max: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Random probe of the chain M⁻(q_n) ≤ M⁻(R) ≤ M⁻(p_n)
    Conj3 {
        #[arg(long, default_value_t = 4)]
        n: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Exponents exactly 0..=n
        #[arg(long)]
        dense: bool,
        /// Real coefficients with random signs
        #[arg(long)]
        real: bool,
    },
    /// Empirical lower bound for the best sublevel constant
    BestConstant {
        #[arg(long, default_value_t = 2)]
        n: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value = "1e-3,1,13")]
        u_grid: String,
        #[arg(long, default_value_t = 65_536)]
        samples: usize,
    },
    /// Star discrepancy of a point set or of a family's root angles
    Discrepancy {
        /// Points in [0, 1)
        #[arg(long, value_delimiter = ',', group = "source")]
        angles: Option<Vec<f64>>,
        /// Root angles of 1 + z + ... + z^n
        #[arg(long, group = "source")]
        pn: Option<u64>,
        /// Root angles of (1 + z)^n
        #[arg(long, group = "source")]
        qn: Option<u64>,
        /// Farey fractions of order N
        #[arg(long = "farey", group = "source")]
        farey: Option<u64>,
    },
    /// Random trials of the interval bound for quadrant-valued trigonometric polynomials
    Lemma2 {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Jensen,
    Quadrature,
    Both,
}

/// A finished run: effective configuration plus data in both shapes.
pub struct Report {
    pub config: Value,
    pub header: String,
    pub rows: Vec<String>,
    /// Extra `#` lines after the CSV rows.
    pub trailer: Vec<String>,
    pub data: Value,
}

impl Report {
    fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => {
                let mut out = format!("# {}\n{}\n", self.config, self.header);
                for row in &self.rows {
                    out.push_str(row);
                    out.push('\n');
                }
                for line in &self.trailer {
                    out.push_str("# ");
                    out.push_str(line);
                    out.push('\n');
                }
                Ok(out)
            }
            Format::Json => {
                let doc = serde_json::json!({ "config": self.config, "data": self.data });
                let mut out = serde_json::to_string_pretty(&doc)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                out.push('\n');
                Ok(out)
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let mut report = commands::dispatch(&cli)?;
    if let Value::Object(map) = &mut report.config {
        map.insert("seed".into(), cli.seed.into());
        map.insert("threads".into(), rayon::current_num_threads().into());
    }
    let text = report.render(cli.format)?;
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(move || run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("sublevel: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
