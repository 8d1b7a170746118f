//! `arclab`: command-line front end for the arclab-core experiments.
//!
//! Records are written to stdout as JSON Lines (scans as CSV by default),
//! with every float rounded to 12 significant digits. Exit codes: 0 on
//! success, 1 for usage errors, 2 for violated preconditions, 3 for range or
//! resource limits.

mod commands;
mod config;
mod output;
mod sets;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use arclab_core::Error;
use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Format};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("ARCLAB_BUILD"), ")");

#[derive(Parser)]
#[command(name = "arclab", version = VERSION, about = "Exponential sums, arcs and difference-set witnesses")]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format for tables.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Directory for cached sieve files (overrides ARCLAB_SIEVE_CACHE).
    #[arg(long, global = true)]
    sieve_cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        _ => Err(format!("expected json or csv, got '{s}'")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Count primes up to a limit.
    Sieve {
        #[arg(long)]
        limit: u64,
    },
    /// Evaluate Σ_{x≤N} w(x) e(αψ(x)).
    Expsum(ExpsumArgs),
    #[command(subcommand)]
    Arcs(ArcsCommand),
    #[command(subcommand)]
    Vaughan(VaughanCommand),
    /// W-trick, large spectrum, Bohr set and smoothing on primes up to n.
    Transfer(TransferArgs),
    #[command(subcommand)]
    Witness(WitnessCommand),
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Run an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Print the normalised config instead of running it.
        #[arg(long)]
        print_config: bool,
    },
}

#[derive(Args)]
struct ExpsumArgs {
    #[arg(long)]
    psi: String,
    /// `a/q`, `a/q+θ` or a decimal.
    #[arg(long)]
    phase: String,
    #[arg(long)]
    n: u64,
    /// unit, prime, delta-prime or poly:c0,c1,…
    #[arg(long, default_value = "unit")]
    weight: String,
    #[arg(long)]
    b: Option<i64>,
    #[arg(long)]
    w: Option<u64>,
}

/// Major/minor arc dissection.
#[derive(Subcommand)]
enum ArcsCommand {
    /// Classify α against a scheme.
    Classify {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        phase: String,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// ∫|S(α)|^ρ dα by quadrature (exact cross-check for even ρ).
    Moment {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 2.0)]
        rho: f64,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value = "unit")]
        weight: String,
        #[arg(long)]
        b: Option<i64>,
        #[arg(long)]
        w: Option<u64>,
    },
}

#[derive(Args)]
struct SchemeArgs {
    /// power, log or fixed.
    #[arg(long, default_value = "log")]
    scheme: String,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long = "B")]
    big_b: Option<f64>,
    #[arg(long)]
    q_max: Option<u64>,
    #[arg(long)]
    halfwidth: Option<f64>,
}

/// Vaughan decomposition.
#[derive(Subcommand)]
enum VaughanCommand {
    /// Direct prime-weighted sum against its S1 - S2 - S3 reconstruction.
    Verify {
        #[arg(long, default_value = "x^2")]
        psi: String,
        #[arg(long, default_value = "0.6180339887498949")]
        phase: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        b: i64,
        #[arg(long, default_value_t = 1)]
        w: u64,
    },
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value = "x^2")]
    psi: String,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Use 𝒲(w) as the modulus.
    #[arg(long, conflicts_with = "modulus")]
    w: Option<u64>,
    /// Use this modulus directly.
    #[arg(long)]
    modulus: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
}

/// Triples x - y = ψ(z) with Wz + 1 prime.
#[derive(Subcommand)]
enum WitnessCommand {
    /// Count exactly by brute force and/or FFT.
    Count {
        #[command(flatten)]
        set: SetArgs,
        /// brute, fft or both.
        #[arg(long, default_value = "both")]
        method: String,
    },
    /// Density-increment search with verified triples.
    Find {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        q_max: Option<u64>,
    },
    /// Weighted count directly and through Z_N.
    Weighted {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long = "N")]
        big_n: u64,
    },
}

#[derive(Args)]
struct SetArgs {
    /// uniform:n=,delta=,seed= | range:lo..hi | multiples:d=,count= | list:…
    #[arg(long)]
    set: String,
    #[arg(long, default_value = "z^2")]
    psi: String,
    #[arg(long, default_value_t = 1)]
    w: u64,
    /// Ambient interval [1, n] (default: implied by the set).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Parameter scans written as tables.
#[derive(Subcommand)]
enum ScanCommand {
    /// |Σ λ(x) e(αψ(x))| over a grid of N.
    MinorArc {
        #[arg(long, default_value = "x^2")]
        psi: String,
        #[arg(long, default_value = "0.6180339887498949")]
        phase: String,
        /// Comma-separated N values.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 1)]
        b: i64,
        #[arg(long, default_value_t = 1)]
        w: u64,
    },
    /// |G(a, q)|/√q over primes q.
    Gauss {
        #[arg(long)]
        psi: Option<String>,
        #[arg(long, default_value_t = 2000)]
        q_max: u64,
    },
}

impl Command {
    fn into_config(self) -> Result<(ExperimentConfig, bool), Error> {
        let mut c;
        match self {
            Command::Sieve { limit } => {
                c = ExperimentConfig::new("sieve");
                c.limit = Some(limit);
            }
            Command::Expsum(a) => {
                c = ExperimentConfig::new("expsum");
                c.psi = Some(a.psi);
                c.phase = Some(a.phase);
                c.n = Some(a.n);
                c.weight = Some(a.weight);
                c.b = a.b;
                c.w = a.w;
            }
            Command::Arcs(ArcsCommand::Classify { psi, n, phase, scheme }) => {
                c = ExperimentConfig::new("arcs-classify");
                c.psi = Some(psi);
                c.n = Some(n);
                c.phase = Some(phase);
                c.scheme = Some(scheme.scheme);
                c.nu = scheme.nu;
                c.big_b = scheme.big_b;
                c.q_max = scheme.q_max;
                c.halfwidth = scheme.halfwidth;
            }
            Command::Arcs(ArcsCommand::Moment { psi, n, rho, points, weight, b, w }) => {
                c = ExperimentConfig::new("arcs-moment");
                c.psi = Some(psi);
                c.n = Some(n);
                c.rho = Some(rho);
                c.points = points;
                c.weight = Some(weight);
                c.b = b;
                c.w = w;
            }
            Command::Vaughan(VaughanCommand::Verify { psi, phase, n, b, w }) => {
                c = ExperimentConfig::new("vaughan-verify");
                c.psi = Some(psi);
                c.phase = Some(phase);
                c.n = Some(n);
                c.b = Some(b);
                c.w = Some(w);
            }
            Command::Transfer(a) => {
                c = ExperimentConfig::new("transfer");
                c.n = Some(a.n);
                c.psi = Some(a.psi);
                c.delta = Some(a.delta);
                c.w = a.w;
                c.modulus = a.modulus;
                c.eta = a.eta;
                c.eps = a.eps;
                c.rho = a.rho;
            }
            Command::Witness(w) => {
                let set = match w {
                    WitnessCommand::Count { set, method } => {
                        c = ExperimentConfig::new("witness-count");
                        c.method = Some(method);
                        set
                    }
                    WitnessCommand::Find { set, q_max } => {
                        c = ExperimentConfig::new("witness-find");
                        c.q_max = q_max;
                        set
                    }
                    WitnessCommand::Weighted { set, big_n } => {
                        c = ExperimentConfig::new("witness-weighted");
                        c.big_n = Some(big_n);
                        set
                    }
                };
                c.set = Some(set.set);
                c.psi = Some(set.psi);
                c.w = Some(set.w);
                c.n = set.n;
                c.seed = set.seed;
            }
            Command::Scan(ScanCommand::MinorArc { psi, phase, grid, b, w }) => {
                c = ExperimentConfig::new("scan-minor-arc");
                c.psi = Some(psi);
                c.phase = Some(phase);
                c.grid = grid.map(|g| parse_grid(&g)).transpose()?;
                c.b = Some(b);
                c.w = Some(w);
            }
            Command::Scan(ScanCommand::Gauss { psi, q_max }) => {
                c = ExperimentConfig::new("scan-gauss");
                c.psi = psi;
                c.q_max = Some(q_max);
            }
            Command::Run { config, print_config } => {
                return Ok((ExperimentConfig::load(&config)?, print_config));
            }
        }
        Ok((c.normalized()?, false))
    }
}

fn parse_grid(text: &str) -> Result<Vec<u64>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad grid value '{s}'"))))
        .collect()
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Degenerate(_) | Error::Parse(_) | Error::Io(_) => 2,
        Error::Range(_) | Error::Resource(_) => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (mut cfg, print_only) = cli.command.into_config()?;
    if cli.sieve_cache.is_some() {
        cfg.sieve_cache = cli.sieve_cache;
    }
    if cli.format.is_some() {
        cfg.format = cli.format;
    }
    let stdout = std::io::stdout();
    let mut sink = stdout.lock();
    if print_only {
        sink.write_all(cfg.emit().as_bytes())?;
        return Ok(());
    }
    let out = commands::execute(&cfg)?;
    let format = cfg.format.unwrap_or(match out {
        output::Output::Table { .. } => Format::Csv,
        output::Output::Records(_) => Format::Json,
    });
    output::write(&out, format, &mut sink)?;
    Ok(())
}
