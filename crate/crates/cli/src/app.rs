use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{run, CommandError};
use crate::config::{threads_from_env, Command, ConfigError, RunConfig};
use crate::report::{canonical_json_of_file, Report, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "grassmann-alpha", version, about = "Numerical checks for the alpha invariant of complex Grassmannians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Chart, Jacobian, metric and curvature identities.
    Verify,
    /// Ricci = (p+q)·metric at random points.
    Einstein,
    /// Total volume by Monte Carlo against the closed form.
    Volume,
    /// Integrals of the extremal family over a grid of alpha and n.
    AlphaScan,
    /// Truncations of the integral of |det X|^-2.
    Divergence,
    /// Embedding of a product of projective lines and its inequalities.
    Pullback,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Verify => Command::Verify,
            Sub::Einstein => Command::Einstein,
            Sub::Volume => Command::Volume,
            Sub::AlphaScan => Command::AlphaScan,
            Sub::Divergence => Command::Divergence,
            Sub::Pullback => Command::Pullback,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long = "p", global = true)]
    pub p: Option<usize>,
    #[arg(long = "q", global = true)]
    pub q: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    #[arg(long, global = true)]
    pub shards: Option<u64>,
    /// JSON report path; the CSV table goes next to it with a `.csv` extension.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random points for pointwise checks.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub ns: Option<Vec<u32>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub ts: Option<Vec<f64>>,
    #[arg(long = "n-dims", global = true, value_delimiter = ',')]
    pub n_dims: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Negate the metric in the curvature checks (negative control).
    #[arg(long = "inject-fault", global = true)]
    pub inject_fault: bool,
    /// Compare the new report with this one, ignoring timing.
    #[arg(long, global = true)]
    pub compare: Option<PathBuf>,
}

/// Defaults, then the config file, then flags.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, ConfigError> {
    let mut c = RunConfig::defaults(command);
    if let Some(path) = &flags.config {
        c.apply_file(path)?;
    }
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = flags.$f.clone() { c.$f = v; } )* };
    }
    take!(p, q, seed, samples, shards, points, alphas, ns, ts, n_dims, radius);
    if flags.out.is_some() {
        c.out = flags.out.clone();
    }
    if flags.inject_fault {
        c.inject_fault = true;
    }
    c.compare = flags.compare.clone();
    c.validate()?;
    Ok(c)
}

fn write_outputs(report: &Report, table: &Table, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, report.to_json() + "\n")?;
            let file = std::fs::File::create(path.with_extension("csv"))?;
            table.write_csv(std::io::BufWriter::new(file)).map_err(std::io::Error::other)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", report.to_json())
        }
    }
}

/// Runs the program on `args` (including the program name) and returns the exit code.
pub fn run_app<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match threads_from_env() {
        Ok(Some(n)) => {
            // a pool may already exist when called repeatedly in-process
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    }
    let config = match resolve(cli.command.into(), &cli.flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let (report, table) = match run(&config) {
        Ok(x) => x,
        Err(CommandError::Config(e)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CHECK_FAILED;
        }
    };
    for r in &report.records {
        eprintln!(
            "{} {:<40} {:>24e} (tol {:e}) [{}]",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.tolerance,
            r.tag.as_str()
        );
    }
    if let Err(e) = write_outputs(&report, &table, config.out.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return EXIT_USAGE;
    }
    if let Some(other) = &config.compare {
        match canonical_json_of_file(other) {
            Ok(text) if text == report.canonical_json() => eprintln!("comparison: identical to {}", other.display()),
            Ok(_) => {
                eprintln!("comparison: report differs from {}", other.display());
                return EXIT_CHECK_FAILED;
            }
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", other.display());
                return EXIT_USAGE;
            }
        }
    }
    if report.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
