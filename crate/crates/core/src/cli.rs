//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 numeric or solver failure (including failed
//! verification checks), 2 usage, configuration or I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dose::{compute_dose, dvh, region_stats};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::io::config::{parse_config, RunConfig};
use crate::io::formats::{read_field, write_dose, write_field, write_field_binary, write_history, write_report};
use crate::optimize::optimize_projected_gradient;
use crate::verify::{run_verify, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "bcsd", version, about = "Deterministic continuous slowing-down transport and source optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the forward problem for the configured source and write psi, dose and report.
    Forward(CommonArgs),
    /// Run the projected-gradient optimizer and write q, psi, lambda, dose, history and report.
    Optimize(CommonArgs),
    /// Recompute dose and DVH from a saved `psi.txt`.
    Report(CommonArgs),
    /// Run the property suite and print a pass/fail table.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the direction sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parse `argv` (program name first), run the command and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (args, cmd) = match &cli.command {
        Command::Forward(a) => (a, "forward"),
        Command::Optimize(a) => (a, "optimize"),
        Command::Report(a) => (a, "report"),
        Command::Verify(a) => (a, "verify"),
    };
    let result = with_threads(args.threads, || dispatch(&cli.command, args));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bcsd {cmd}: {e}");
            if e.is_numeric() {
                1
            } else {
                2
            }
        }
    }
}

fn with_threads<F: FnOnce() -> Result<i32> + Send>(threads: Option<usize>, f: F) -> Result<i32> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
            pool.install(f)
        }
    }
}

fn dispatch(cmd: &Command, args: &CommonArgs) -> Result<i32> {
    let cfg = parse_config(&args.config)?;
    for c in &cfg.assumptions.checks {
        log::debug!("{:?} passed: {} {}", c.assumption, c.passed, c.detail);
    }
    if !cfg.assumptions.supercritical.is_empty() {
        log::warn!("supercritical materials allowed: {}", cfg.assumptions.supercritical.join(", "));
    }
    let out = cfg.output_dir(args.out.as_deref());
    match cmd {
        Command::Forward(_) => forward(&cfg, &out),
        Command::Optimize(_) => optimize(&cfg, &out),
        Command::Report(_) => report(&cfg, &out),
        Command::Verify(_) => verify(&cfg),
    }
}

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn save_field(cfg: &RunConfig, out: &Path, stem: &str, f: &Field) -> Result<()> {
    write_field(&out.join(format!("{stem}.txt")), f)?;
    if cfg.file.output.binary {
        write_field_binary(&out.join(format!("{stem}.bin")), f)?;
    }
    Ok(())
}

fn save_dose_and_report(cfg: &RunConfig, out: &Path, psi: &Field) -> Result<()> {
    let p = &cfg.problem;
    let dose = compute_dose(psi, p.quadrature(), p.energy())?;
    let r = &cfg.file.report;
    let stats = region_stats(&dose, &cfg.mask, r.d_min, r.d_max)?;
    let hist = dvh(&dose, &cfg.mask, r.dvh_bins)?;
    write_dose(&out.join("dose.txt"), p.grid(), &dose)?;
    write_report(&out.join("report.txt"), &stats, &hist)?;
    if stats.tumor_underdose > 0.0 || stats.risk_overdose > 0.0 {
        log::warn!(
            "dose bounds violated: {:.1}% of tumour below d_min, {:.1}% of risk above d_max",
            100.0 * stats.tumor_underdose,
            100.0 * stats.risk_overdose
        );
    }
    Ok(())
}

fn forward(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let q = cfg.source()?;
    let psi = cfg.problem.solve_forward(&q)?;
    prepare(out)?;
    save_field(cfg, out, "psi", &psi)?;
    save_dose_and_report(cfg, out, &psi)?;
    println!("forward: wrote {}", out.display());
    Ok(0)
}

fn optimize(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let obj = cfg.objective()?;
    let q0 = cfg.initial_control()?;
    let settings = cfg.optimizer_settings();
    let res = optimize_projected_gradient(&cfg.problem, &obj, &q0, &settings)?;
    prepare(out)?;
    let s = &res.state;
    save_field(cfg, out, "q", &s.q)?;
    save_field(cfg, out, "psi", &s.psi)?;
    save_field(cfg, out, "lambda", &s.lambda)?;
    write_history(&out.join("history.txt"), &res.history)?;
    save_dose_and_report(cfg, out, &s.psi)?;
    if !res.converged {
        log::warn!(
            "optimizer stopped at the iteration cap ({}) with kkt residual {:.3e} > {:.3e}",
            s.iteration,
            s.kkt,
            settings.tolerance
        );
    }
    println!(
        "optimize: {} iterations, J = {:.6e}, kkt = {:.3e}{}; wrote {}",
        s.iteration,
        s.objective,
        s.kkt,
        if res.converged { "" } else { " (not converged)" },
        out.display()
    );
    Ok(0)
}

fn report(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let psi = read_field(&out.join("psi.txt"))?;
    cfg.problem.check(&psi)?;
    save_dose_and_report(cfg, out, &psi)?;
    println!("report: wrote {}", out.display());
    Ok(0)
}

fn verify(cfg: &RunConfig) -> Result<i32> {
    let obj = match cfg.file.objective {
        Some(_) => Some(cfg.objective()?),
        None => None,
    };
    let rep = run_verify(&cfg.problem, obj.as_ref(), &VerifyOptions::default())?;
    print!("{}", rep.to_table());
    Ok(if rep.all_passed() { 0 } else { 1 })
}
