use std::path::PathBuf;
use std::process::ExitCode;

use bondvol_harness::{minimize, suites, sweep, Error, Overrides, RunConfig, SuiteReport};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bondvol", version, about = "Verification harness for bond-volume coupling energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Machine-check a consistency claim.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Energy-gap sweeps over the lattice spacing.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Minimize the selected model under a smooth external force.
    Solve(Common),
}

#[derive(Subcommand)]
enum Suite {
    /// Bond-volume lemma on random and affine fields.
    Lemma(Common),
    /// Ghost forces and the homogeneous energy at y_F.
    GhostForces(Common),
    /// Finite-difference check of the first variation.
    Gradient(Common),
    /// Covering regrouping of the coupled first variation.
    Coverings(Common),
}

#[derive(Subcommand)]
enum SweepKind {
    /// A-CB against atomistic energy as eps decreases.
    Consistency(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ordered reductions: byte-identical output across runs.
    #[arg(long)]
    deterministic: bool,
    /// Directory for the CSV reports and summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model selector, e.g. coupled, coupled-dg, coupled-ho(2), naive.
    #[arg(long)]
    model: Option<String>,
}

type Runner = fn(&RunConfig) -> bondvol_harness::Result<SuiteReport>;

fn run(common: &Common, runner: Runner) -> bondvol_harness::Result<SuiteReport> {
    let overrides = Overrides {
        seed: common.seed,
        deterministic: common.deterministic,
        out: common.out.clone(),
        model: common.model.clone(),
    };
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p, &overrides)?,
        None => RunConfig::from_json("{}", &overrides)?,
    };
    let report = runner(&cfg)?;
    if let Some(dir) = &cfg.out_dir {
        report.write(dir)?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, runner): (&Common, Runner) = match &cli.command {
        Command::Verify { suite } => match suite {
            Suite::Lemma(c) => (c, suites::lemma),
            Suite::GhostForces(c) => (c, suites::ghost_forces),
            Suite::Gradient(c) => (c, suites::gradient),
            Suite::Coverings(c) => (c, suites::coverings),
        },
        Command::Sweep { kind: SweepKind::Consistency(c) } => (c, sweep::sweep),
        Command::Solve(c) => (c, minimize::solve),
    };
    match run(common, runner) {
        Ok(report) => {
            print!("{}", report.summary());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Config(_) = e {
                eprintln!("no computation was run");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
