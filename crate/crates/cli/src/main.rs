use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use steklov_core::geometry::GeometrySpec;
use steklov_core::report::SuiteStatus;
use steklov_core::runner::{parse_p_list, run, ConfigFile, OutputFormat, RunConfig, TGrid, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "steklov", version, about = "Steklov eigenpairs and slice-estimate verification on model geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write one report per suite plus summary.json.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// disk, ball3, cylinder, exTorus, concave or asym-exp.
    #[arg(long)]
    preset: Option<String>,
    /// JSON run configuration; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated suites, or `all`.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, value_name = "LAMBDA_MAX")]
    lmax: Option<f64>,
    /// Depth grid `a:b:n`.
    #[arg(long, value_name = "A:B:N")]
    tgrid: Option<String>,
    /// Comma-separated Lebesgue exponents; `inf` allowed.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random mixtures per lower-bound certificate.
    #[arg(long)]
    mixtures: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn build_config(args: VerifyArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(ConfigFile::load(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(preset) = args.preset {
        cfg.geometry = GeometrySpec::Preset { preset };
    }
    if let Some(list) = args.suite {
        cfg.set_suites(&list);
    }
    if let Some(l) = args.lmax {
        cfg.lambda_max = l;
    }
    if let Some(t) = args.tgrid {
        cfg.t_grid = Some(TGrid::parse(&t)?);
    }
    if let Some(p) = args.p {
        cfg.p = parse_p_list(&p)?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.mixtures {
        cfg.mixtures = m;
    }
    if let Some(o) = args.out {
        cfg.out_dir = o;
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    Ok(cfg)
}

fn verify(args: VerifyArgs) -> anyhow::Result<i32> {
    let cfg = build_config(args)?;
    let outcome = run(&cfg).with_context(|| format!("run into {}", cfg.out_dir.display()))?;
    for s in &outcome.summary.suites {
        let status = match s.status {
            SuiteStatus::Pass => "pass",
            SuiteStatus::Fail => "FAIL",
            SuiteStatus::Error => "ERROR",
        };
        println!("{:<10} {status}", s.suite);
        for r in s.reports.iter().filter(|r| !r.pass) {
            println!("    {} C = {:.6e}, drift = {:.3e}", r.estimate_id, r.fitted_constant, r.drift);
        }
        if let Some(e) = &s.error {
            eprintln!("    {e}");
        }
    }
    println!("summary: {}", cfg.out_dir.join("summary.json").display());
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify(args) => verify(args).unwrap_or_else(|e| {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }),
    };
    ExitCode::from(code as u8)
}
