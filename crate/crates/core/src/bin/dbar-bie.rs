use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dbar_bie::harness::{parse_grid, run, Command, ExperimentConfig, TolProfile};

/// Boundary integral experiments for the dbar-Neumann problem on the unit ball.
#[derive(Parser, Debug)]
#[command(name = "dbar-bie", version)]
struct Cli {
    /// verify-identities, dump-kernels, green-check, solve, constant-velocity,
    /// rigidity, kmh-check or convergence-study
    command: String,
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grids as <n_chi>x<n_phi>, comma separated, coarse to fine.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<String>,
    #[arg(long)]
    eps_levels: Option<usize>,
    /// Catalog fields, comma separated.
    #[arg(long, value_delimiter = ',')]
    field: Vec<String>,
    /// Output directory for the report and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// strict or baseline
    #[arg(long)]
    tol_profile: Option<String>,
    /// For convergence-study: quadrature, identities, green or solve.
    #[arg(long)]
    study: Option<String>,
}

fn config(cli: &Cli) -> dbar_bie::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::default(),
    };
    if !cli.grid.is_empty() {
        cfg.grids = cli.grid.iter().map(|g| parse_grid(g)).collect::<dbar_bie::Result<_>>()?;
    }
    if let Some(n) = cli.eps_levels {
        cfg.solver.eps.levels = n;
    }
    if !cli.field.is_empty() {
        cfg.fields = cli.field.clone();
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = &cli.tol_profile {
        cfg.tol_profile = TolProfile::parse(t)?;
    }
    if let Some(s) = &cli.study {
        cfg.study = s.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Command::parse(&cli.command).and_then(|cmd| Ok((cmd, config(&cli)?)));
    let (cmd, cfg) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cmd, &cfg) {
        Ok(report) => {
            for c in &report.checks {
                let tag = c.criterion.map(|k| format!(" [{k}]")).unwrap_or_default();
                println!("{} {}{}", if c.passed { "PASS" } else { "FAIL" }, c.name, tag);
                for p in &c.parts {
                    println!("    {} {}: {:.3e} (tolerance {:.1e})", if p.passed { "ok  " } else { "FAIL" }, p.name, p.error, p.tolerance);
                }
                if let Some(o) = c.order {
                    println!("    order {o:.2}");
                }
            }
            if cfg.out.is_none() {
                match report.to_json() {
                    Ok(j) => println!("{j}"),
                    Err(e) => eprintln!("error: {e}"),
                }
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
