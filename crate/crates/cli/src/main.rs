//! `windstat`: runs one study per subcommand and writes CSV tables plus a
//! JSON sidecar with the configuration hash and a pass/fail verdict.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
//! error, 3 numerical or I/O failure.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use windstat::correlators::Estimator;
use windstat::ensembles::SymmetryClass;

use config::{parse_estimator, parse_point_sets, Command, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Numerical(_) | Self::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "windstat", version, about = "Winding-number statistics of chiral random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Per-draw winding numbers by the contour and count routes.
    Winding {
        #[command(flatten)]
        common: Common,
        /// Also write the eigenvalues of every draw.
        #[arg(long)]
        spectra: bool,
    },
    /// Exact winding-number distribution, sampled histogram and Gaussian limit.
    Dist {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo correlators of the winding density against closed forms.
    Corr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        points: PointArgs,
    },
    /// Unfolded two-point function against its large-N limit.
    Unfold {
        #[command(flatten)]
        common: Common,
        /// Unfolding exponent.
        #[arg(long)]
        alpha: Option<f64>,
        /// Separation window as `lo,hi`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        range: Option<Vec<f64>>,
    },
    /// Generating function: Monte Carlo against the exact determinant ratio.
    Gen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        points: PointArgs,
        /// `q` sets, same syntax as `--points`.
        #[arg(long, value_parser = parse_point_sets)]
        q: Option<Vec<Vec<f64>>>,
    },
    /// Kitaev chain phases, bands and μ-scans.
    Kitaev {
        #[command(flatten)]
        common: Common,
        /// Hopping values, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// μ-scan at the last `t` as `lo,hi,steps`.
        #[arg(long, allow_hyphen_values = true)]
        scan: Option<String>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Matrix size N; a comma separated list runs each.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// AIII or CII.
    #[arg(long)]
    class: Option<SymmetryClass>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    streams: Option<u64>,
    /// Contour grid, separation samples or k-grid, depending on the command.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON file whose keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PointArgs {
    /// Point sets: `p1,p2;p1,p2;…`.
    #[arg(long, value_parser = parse_point_sets, allow_hyphen_values = true)]
    points: Option<Vec<Vec<f64>>>,
    /// `plain`, `circle` or `shift:K`.
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<Estimator>,
}

fn apply_common(cfg: &mut RunConfig, c: Common) -> Option<PathBuf> {
    if let Some(v) = c.n {
        cfg.n = v;
    }
    if let Some(v) = c.class {
        cfg.class = v;
    }
    if let Some(v) = c.trials {
        cfg.trials = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.streams {
        cfg.streams = v;
    }
    if let Some(v) = c.grid {
        cfg.grid = v;
    }
    if let Some(v) = c.out_dir {
        cfg.out_dir = v;
    }
    c.config
}

fn apply_points(cfg: &mut RunConfig, p: PointArgs) {
    if let Some(v) = p.points {
        cfg.points = v;
    }
    if let Some(v) = p.estimator {
        cfg.estimator = v;
    }
}

fn build_config(cli: Cli) -> Result<RunConfig, CliError> {
    let (mut cfg, file) = match cli.command {
        Sub::Winding { common, spectra } => {
            let mut cfg = RunConfig::defaults(Command::Winding);
            cfg.spectra |= spectra;
            let f = apply_common(&mut cfg, common);
            (cfg, f)
        }
        Sub::Dist { common } => {
            let mut cfg = RunConfig::defaults(Command::Dist);
            let f = apply_common(&mut cfg, common);
            (cfg, f)
        }
        Sub::Corr { common, points } => {
            let mut cfg = RunConfig::defaults(Command::Corr);
            apply_points(&mut cfg, points);
            let f = apply_common(&mut cfg, common);
            (cfg, f)
        }
        Sub::Unfold { common, alpha, range } => {
            let mut cfg = RunConfig::defaults(Command::Unfold);
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(r) = range {
                let [lo, hi] = r[..] else {
                    return Err(CliError::Usage(format!("--range expects lo,hi, got {} values", r.len())));
                };
                cfg.delta_range = (lo, hi);
            }
            let f = apply_common(&mut cfg, common);
            (cfg, f)
        }
        Sub::Gen { common, points, q } => {
            let mut cfg = RunConfig::defaults(Command::Gen);
            apply_points(&mut cfg, points);
            if let Some(q) = q {
                cfg.q = q;
            }
            let f = apply_common(&mut cfg, common);
            (cfg, f)
        }
        Sub::Kitaev { common, t, mu, delta, scan } => {
            let mut cfg = RunConfig::defaults(Command::Kitaev);
            if let Some(t) = t {
                cfg.kitaev.t = t;
            }
            if let Some(mu) = mu {
                cfg.kitaev.mu = mu;
            }
            if let Some(d) = delta {
                cfg.kitaev.delta = d;
            }
            if let Some(s) = scan {
                cfg.kitaev.scan = Some(parse_scan(&s)?);
            }
            let f = apply_common(&mut cfg, common);
            (cfg, f)
        }
    };
    if let Some(path) = file {
        cfg = cfg.merge_file(&path)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_scan(s: &str) -> Result<(f64, f64, usize), CliError> {
    let bad = || CliError::Usage(format!("--scan expects lo,hi,steps, got {s:?}"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, steps] = parts[..] else { return Err(bad()) };
    let (lo, hi) = (lo.parse::<f64>().map_err(|_| bad())?, hi.parse::<f64>().map_err(|_| bad())?);
    let steps = steps.parse::<usize>().map_err(|_| bad())?;
    if !(lo < hi) || steps == 0 {
        return Err(bad());
    }
    Ok((lo, hi, steps))
}

fn main() -> ExitCode {
    // Clap exits with status 2 on malformed flags.
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|cfg| {
        let mut out = commands::run(&cfg)?;
        let files = output::write_run(&cfg, &mut out)?;
        Ok((out, files))
    });
    match result {
        Ok((out, files)) => {
            // A closed pipe on stdout must not change the exit status.
            let mut stdout = std::io::stdout().lock();
            for c in &out.checks {
                let _ = writeln!(stdout, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for f in &files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            if out.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("windstat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
