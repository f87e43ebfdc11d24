//! The `hardedge` command line.
//!
//! Exit codes: 0 success, 1 an experiment ran but a check failed, 2 usage,
//! configuration or runtime error.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analytic::{check_delta_bounds, mp_cdf, mp_density, mp_stieltjes, mp_window_mass, SpectralPoint, Window};
use crate::config::{load_config, ExperimentConfig};
use crate::ensemble::{sample_matrix, write_dump, EnsembleSpec, EntryDistribution, EntryField};
use crate::error::{Error, Result};
use crate::experiments::{desk_config, run, ExperimentKind, TheoremReport};
use crate::report::{sha256_hex, write_report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HARDEDGE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "hardedge",
    version,
    about = "Spectral statistics of square random matrices near the hard edge"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the Marchenko-Pastur law.
    Mp(MpArgs),
    /// Draw one matrix and write it as a binary dump.
    Sample(SampleArgs),
    /// Eigenvalue counts in windows against the a priori bound.
    Apriori(RunArgs),
    /// Local law for the Stieltjes transform and the eigenvalue density.
    Locallaw(RunArgs),
    /// Sup-norm of eigenvectors.
    Deloc(RunArgs),
    /// Number of eigenvalues in [0, K/N^2].
    Wegner(RunArgs),
    /// N^2 s_1 across sizes and bulk spacing.
    Hardedge(RunArgs),
    /// Quadratic-form tail curves.
    Hw(RunArgs),
    /// Mass of a random vector on an orthonormal family.
    Projmass(RunArgs),
    /// Leave-one-out, eigenvector-identity, interlacing and counting suites.
    Identities(RunArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct MpQuery {
    /// rho(E)
    #[arg(long, value_name = "E")]
    density: Option<f64>,
    /// F(E)
    #[arg(long, value_name = "E")]
    cdf: Option<f64>,
    /// Law mass of [E, E + eta]
    #[arg(long, value_name = "E", requires = "eta")]
    window_mass: Option<f64>,
    /// Delta(E + i eta), printed as real and imaginary parts
    #[arg(long, value_name = "E", requires = "eta")]
    stieltjes: Option<f64>,
    /// Check the bounds on Delta(E + i eta)
    #[arg(long, value_name = "E", requires = "eta")]
    bounds: Option<f64>,
}

#[derive(Debug, Args)]
struct MpArgs {
    #[command(flatten)]
    query: MpQuery,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, value_parser = parse_distribution, default_value = "complex-gaussian")]
    distribution: EntryDistribution,
    #[arg(long)]
    real: bool,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON configuration; built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; results are identical for every value.
    #[arg(long)]
    threads: Option<usize>,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_parser = parse_distribution)]
    distribution: Option<EntryDistribution>,
}

fn parse_distribution(s: &str) -> std::result::Result<EntryDistribution, String> {
    EntryDistribution::ALL
        .into_iter()
        .find(|d| d.name() == s)
        .ok_or_else(|| {
            let names: Vec<_> = EntryDistribution::ALL.iter().map(|d| d.name()).collect();
            format!("expected one of {}", names.join(", "))
        })
}

/// Six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn run_mp(args: &MpArgs) -> Result<String> {
    let q = &args.query;
    let eta = || args.eta.ok_or_else(|| Error::invalid("eta", "required"));
    if let Some(e) = q.density {
        return Ok(format_sig6(mp_density(e)));
    }
    if let Some(e) = q.cdf {
        return Ok(format_sig6(mp_cdf(e)));
    }
    if let Some(e) = q.window_mass {
        return Ok(format_sig6(mp_window_mass(&Window::new(e, eta()?)?)));
    }
    if let Some(e) = q.stieltjes {
        let d = mp_stieltjes(&SpectralPoint::new(e, eta()?)?);
        return Ok(format!("{} {}", format_sig6(d.re), format_sig6(d.im)));
    }
    if let Some(e) = q.bounds {
        let b = check_delta_bounds(
            &SpectralPoint::new(e, eta()?)?,
            crate::analytic::DEFAULT_IM_BOUND_CONSTANT,
        )?;
        return Ok(serde_json::to_string_pretty(&b).expect("bounds serialize"));
    }
    unreachable!("clap requires one query")
}

fn run_sample(args: &SampleArgs) -> Result<String> {
    let field = if args.real {
        EntryField::Real
    } else {
        EntryField::Complex
    };
    let spec = EnsembleSpec::new(args.n, args.distribution, args.seed)?.with_field(field);
    let m = sample_matrix(&spec, args.trial);
    let mut bytes = Vec::new();
    write_dump(&m, &mut bytes).map_err(|e| Error::io(&args.out, e))?;
    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut w = BufWriter::new(file);
    std::io::Write::write_all(&mut w, &bytes).map_err(|e| Error::io(&args.out, e))?;
    Ok(format!("{} {}", args.out.display(), sha256_hex(&bytes)))
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => desk_config(kind, 0),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if !args.n.is_empty() {
        cfg.sizes = args.n.clone();
    }
    if let Some(d) = args.distribution {
        cfg.distribution = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &TheoremReport, outdir: &Path) {
    println!("{} ({})", report.title, report.id);
    if report.exploratory {
        println!("  exploratory: real-valued entries");
    }
    for c in &report.checks {
        println!(
            "  [{}] {}: {} (threshold {})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            format_sig6(c.value),
            format_sig6(c.threshold)
        );
    }
    println!("  written to {}", outdir.display());
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> Result<i32> {
    let cfg = build_config(kind, args)?;
    let outdir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("hardedge-out").join(kind.name()));
    let report = run(kind, &cfg)?;
    write_report(&report, &outdir)?;
    print_report(&report, &outdir);
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Configuration keys and their defaults, printed after configuration errors.
pub fn config_help() -> String {
    let example = ExperimentConfig::new(vec![128], 50, 1);
    format!(
        "configuration is a JSON object; `sizes`, `trials` and `seed` are required, \
         every other key is optional and unknown keys are rejected. Defaults:\n{}",
        example.to_json()
    )
}

/// Parses `args` (program name first) and runs the command.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Mp(a) => run_mp(a).map(|s| {
            println!("{s}");
            EXIT_OK
        }),
        Command::Sample(a) => run_sample(a).map(|s| {
            println!("{s}");
            EXIT_OK
        }),
        Command::Apriori(a) => run_experiment(ExperimentKind::Apriori, a),
        Command::Locallaw(a) => run_experiment(ExperimentKind::LocalLaw, a),
        Command::Deloc(a) => run_experiment(ExperimentKind::Deloc, a),
        Command::Wegner(a) => run_experiment(ExperimentKind::Wegner, a),
        Command::Hardedge(a) => run_experiment(ExperimentKind::HardEdge, a),
        Command::Hw(a) => run_experiment(ExperimentKind::Hw, a),
        Command::Projmass(a) => run_experiment(ExperimentKind::ProjMass, a),
        Command::Identities(a) => run_experiment(ExperimentKind::Identities, a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config { .. }) {
                eprintln!("{}", config_help());
            }
            EXIT_USAGE
        }
    }
}
