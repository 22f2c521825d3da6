use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conecycle::reports::{run, ExperimentConfig, Overrides, Suite};

#[derive(Parser)]
#[command(name = "conecycle", version, about = "Cocycle and product-system checks on discretized P-spaces")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Grid dimensions, equivariance of the boundary function, purity.
    ModelInfo(Common),
    /// Cocycle identity, kernel condition, fault detection, degree reduction.
    Verify(Common),
    /// Extract (λ₁, λ₂) and the ± normal form in codimension one.
    Classify(Common),
    /// Antisymmetrized obstruction and the multiplier solve.
    Admissibility(Common),
    /// Pairing law, Weyl unitarity, associativity, e-logarithm.
    ProductCheck(Common),
    /// GNS reconstruction of the shift from the product system.
    Reconstruct(Common),
    /// Projective isomorphism criteria.
    IsoCheck(Common),
    /// Runs the suite named in the config.
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` in the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
}

fn execute(suite: Option<Suite>, args: &Common) -> Result<i32, String> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| e.to_string())?;
    Overrides { suite, seed: args.seed, tol: args.tol }.apply(&mut cfg).map_err(|e| e.to_string())?;
    let report = run(&cfg).map_err(|e| e.to_string())?;
    let dir =
        args.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let (csv, txt) = report.write(&dir).map_err(|e| e.to_string())?;
    print!("{}", report.summary());
    println!("records: {}", csv.display());
    println!("summary: {}", txt.display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, args) = match &cli.verb {
        Verb::ModelInfo(a) => (Some(Suite::ModelInfo), a),
        Verb::Verify(a) => (Some(Suite::Verify), a),
        Verb::Classify(a) => (Some(Suite::Classify), a),
        Verb::Admissibility(a) => (Some(Suite::Admissibility), a),
        Verb::ProductCheck(a) => (Some(Suite::Product), a),
        Verb::Reconstruct(a) => (Some(Suite::Reconstruct), a),
        Verb::IsoCheck(a) => (Some(Suite::Iso), a),
        Verb::Run(a) => (None, a),
    };
    match execute(suite, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
