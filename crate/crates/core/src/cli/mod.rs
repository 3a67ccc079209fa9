//! Batch front end behind the `gpcyl` binary.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage or domain error,
//! 3 non-convergence, 4 I/O failure.

mod config;
mod verify;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use toml::Table;

use crate::error::Error;
use crate::field::snapshot;
use crate::minimizer::{init_perturbed, init_planar, minimize, MinimizeResult};
use crate::soliton1d::{self, SolitonParams};
use crate::sweep::{self, fmt_float as f, CriticalLengthResult};

pub use config::RunConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "gpcyl",
    version,
    about = "Travelling waves of the Gross-Pitaevskii equation on R x T_ell"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the one-dimensional dark soliton.
    Soliton(SolitonArgs),
    /// Minimize the energy at fixed momentum.
    Minimize(MinimizeArgs),
    /// Sample the minimal energy over a momentum grid.
    Sweep(BatchArgs),
    /// Bracket the critical cylinder length by bisection.
    CriticalLength(BatchArgs),
    /// Run the predicate battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SolitonArgs {
    #[arg(
        long,
        allow_hyphen_values = true,
        conflicts_with = "p",
        required_unless_present = "p"
    )]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    #[arg(long, default_value_t = 10.0)]
    pub half_length: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Start from a stored field instead of the configured seed.
    #[arg(long)]
    pub seed: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Adds swept-curve checks on the configured grid.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Closed-form and construction checks only.
    #[arg(long)]
    pub fast: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// Parses `args` and runs the subcommand, printing diagnostics to stderr.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Soliton(a) => cmd_soliton(&a),
        Command::Minimize(a) => cmd_minimize(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::CriticalLength(a) => cmd_critical_length(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Maps an error chain to the exit-code contract.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io(_) => EXIT_IO,
                Error::NotStraddling(_) | Error::Precondition(_) | Error::LiftBound(_) => EXIT_CHECK,
                Error::ConstraintUnreachable(_) | Error::EndpointVacuum { .. } | Error::Degenerate(_) => {
                    EXIT_NOT_CONVERGED
                }
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

fn set_jobs(jobs: usize) -> anyhow::Result<()> {
    if jobs == 0 {
        return Err(Error::Domain("--jobs must be at least 1".into()).into());
    }
    #[cfg(feature = "parallel")]
    {
        // Fails harmlessly when a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(())
}

fn prepare_out(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    status: &'a str,
    config: &'a RunConfig,
    results: Table,
}

/// Writes `manifest.toml` through a temporary file and a rename.
fn write_manifest(
    out: &Path,
    command: &'static str,
    status: &str,
    config: &RunConfig,
    results: Table,
) -> anyhow::Result<()> {
    let m = Manifest {
        tool: "gpcyl",
        version: env!("CARGO_PKG_VERSION"),
        command,
        status,
        config,
        results,
    };
    let text = toml::to_string(&m).context("serializing manifest")?;
    let tmp = out.join("manifest.toml.tmp");
    let dest = out.join("manifest.toml");
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &dest).with_context(|| format!("renaming to {}", dest.display()))?;
    Ok(())
}

fn failure_table(e: &anyhow::Error) -> Table {
    let mut t = Table::new();
    t.insert("error".into(), format!("{e:#}").into());
    t
}

/// Non-finite values are stored as strings.
fn put(t: &mut Table, key: &str, v: f64) {
    let value = if v.is_finite() {
        toml::Value::Float(v)
    } else {
        toml::Value::String(v.to_string())
    };
    t.insert(key.into(), value);
}

pub fn cmd_soliton(a: &SolitonArgs) -> anyhow::Result<u8> {
    let c = match (a.c, a.p) {
        (Some(c), None) => c,
        (None, Some(p)) => soliton1d::speed_from_momentum(p),
        _ => bail!("exactly one of --c and --p is required"),
    };
    let params = SolitonParams::new(c)?;
    if a.samples < 3 {
        return Err(Error::Domain(format!("--samples must be at least 3, got {}", a.samples)).into());
    }
    if !(a.half_length > 0.0 && a.half_length.is_finite()) {
        return Err(Error::Domain(format!("--half-length must be positive, got {}", a.half_length)).into());
    }
    let h = 2.0 * a.half_length / (a.samples - 1) as f64;
    let table: Vec<(f64, num_complex::Complex64)> = (0..a.samples)
        .map(|i| {
            let x = if 2 * i + 1 == a.samples {
                0.0
            } else {
                -a.half_length + i as f64 * h
            };
            (x, params.profile(x))
        })
        .collect();
    let values: Vec<_> = table.iter().map(|t| t.1).collect();
    let residual = soliton1d::ode_residual(c, &values, h);
    prepare_out(&a.out)?;
    write_file(&a.out.join("soliton.csv"), |w| {
        writeln!(w, "x,re,im")?;
        for (x, z) in &table {
            writeln!(w, "{},{},{}", f(*x), f(z.re), f(z.im))?;
        }
        Ok(())
    })?;
    let mut scalars = Table::new();
    put(&mut scalars, "c", c);
    put(&mut scalars, "xi", params.momentum());
    put(&mut scalars, "energy_1d", params.energy());
    put(&mut scalars, "ode_residual", residual);
    let text = toml::to_string(&scalars)?;
    fs::write(a.out.join("scalars.toml"), &text).context("writing scalars.toml")?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn result_table(r: &MinimizeResult) -> Table {
    let mut t = Table::new();
    put(&mut t, "energy", r.energy);
    put(&mut t, "multiplier", r.multiplier);
    put(&mut t, "momentum", r.momentum.representative());
    put(&mut t, "el_residual", r.el_residual);
    put(&mut t, "transverse_energy", r.transverse_energy);
    put(&mut t, "transverse_fraction", r.transverse_fraction());
    put(&mut t, "grad_norm", r.grad_norm);
    t.insert("iterations".into(), (r.iterations as i64).into());
    t.insert("converged".into(), r.converged.into());
    t.insert("subsonic".into(), r.is_subsonic().into());
    t
}

pub fn cmd_minimize(a: &MinimizeArgs) -> anyhow::Result<u8> {
    set_jobs(a.jobs)?;
    let cfg = RunConfig::load(&a.config)?;
    let grid = cfg.grid()?;
    let seed = match &a.seed {
        Some(path) => snapshot::load(path).with_context(|| format!("loading seed {}", path.display()))?,
        None if cfg.seed == "planar" => init_planar(cfg.p, &grid),
        None => init_perturbed(cfg.p, &grid, cfg.amplitude, cfg.mode)?,
    };
    prepare_out(&a.out)?;
    write_manifest(&a.out, "minimize", "running", &cfg, Table::new())?;
    let r = match minimize(cfg.p, &grid, &cfg.solver(), &seed) {
        Ok(r) => r,
        Err(e) => {
            let e = anyhow::Error::from(e);
            write_manifest(&a.out, "minimize", "failed", &cfg, failure_table(&e))?;
            return Err(e);
        }
    };
    snapshot::save(&r.field, &a.out.join("field.bin")).context("writing field.bin")?;
    write_file(&a.out.join("trace.csv"), |w| {
        writeln!(w, "iteration,energy,multiplier,grad_norm,momentum_error,step")?;
        for t in &r.trace {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                t.iteration,
                f(t.energy),
                f(t.multiplier),
                f(t.grad_norm),
                f(t.momentum_error),
                f(t.step)
            )?;
        }
        Ok(())
    })?;
    let status = if r.converged { "converged" } else { "not_converged" };
    write_manifest(&a.out, "minimize", status, &cfg, result_table(&r))?;
    println!(
        "{status}: energy={} multiplier={} transverse_fraction={:e} iterations={}",
        r.energy,
        r.multiplier,
        r.transverse_fraction(),
        r.iterations
    );
    Ok(if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_sweep(a: &BatchArgs) -> anyhow::Result<u8> {
    set_jobs(a.jobs)?;
    let cfg = RunConfig::load(&a.config)?;
    let setup = cfg.sweep_setup(a.jobs)?;
    prepare_out(&a.out)?;
    write_manifest(&a.out, "sweep", "running", &cfg, Table::new())?;
    let curve = match sweep::sweep_momentum(cfg.ell, &cfg.momenta(), &setup) {
        Ok(c) => c,
        Err(e) => {
            let e = anyhow::Error::from(e);
            write_manifest(&a.out, "sweep", "failed", &cfg, failure_table(&e))?;
            return Err(e);
        }
    };
    write_file(&a.out.join("curve.csv"), |w| sweep::write_curve(w, &curve))?;
    write_file(&a.out.join("seeds.csv"), |w| {
        writeln!(
            w,
            "p,seed,energy,multiplier,transverse_energy,el_residual,iterations,converged"
        )?;
        for s in &curve {
            for o in &s.outcomes {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    f(s.p),
                    o.seed,
                    f(o.energy),
                    f(o.multiplier),
                    f(o.transverse_energy),
                    f(o.el_residual),
                    o.iterations,
                    o.converged
                )?;
            }
        }
        Ok(())
    })?;
    let unconverged = curve.iter().filter(|s| !s.converged).count();
    let mut t = Table::new();
    t.insert("points".into(), (curve.len() as i64).into());
    t.insert("unconverged".into(), (unconverged as i64).into());
    let status = if unconverged == 0 { "converged" } else { "not_converged" };
    write_manifest(&a.out, "sweep", status, &cfg, t)?;
    println!("{status}: {} points, {unconverged} unconverged", curve.len());
    Ok(if unconverged == 0 { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn bracket_table(r: &CriticalLengthResult) -> Table {
    let mut t = Table::new();
    put(&mut t, "p", r.p);
    put(&mut t, "ell_lo", r.ell_lo);
    put(&mut t, "ell_hi", r.ell_hi);
    put(&mut t, "width", r.width);
    put(&mut t, "fraction_lo", r.lo_probe().fraction);
    put(&mut t, "fraction_hi", r.hi_probe().fraction);
    t.insert("probes".into(), (r.probes.len() as i64).into());
    t
}

pub fn cmd_critical_length(a: &BatchArgs) -> anyhow::Result<u8> {
    set_jobs(a.jobs)?;
    let cfg = RunConfig::load(&a.config)?;
    let setup = cfg.sweep_setup(a.jobs)?;
    prepare_out(&a.out)?;
    write_manifest(&a.out, "critical-length", "running", &cfg, Table::new())?;
    let r = match sweep::critical_length(cfg.p, (cfg.ell_lo, cfg.ell_hi), &setup, cfg.w_tol, cfg.resolution) {
        Ok(r) => r,
        Err(e) => {
            let e = anyhow::Error::from(e);
            write_manifest(&a.out, "critical-length", "failed", &cfg, failure_table(&e))?;
            return Err(e);
        }
    };
    write_file(&a.out.join("probes.csv"), |w| {
        writeln!(
            w,
            "ell,planar,fraction,converged,seed,energy,transverse_energy,seed_converged"
        )?;
        for q in &r.probes {
            for o in &q.outcomes {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    f(q.ell),
                    q.planar,
                    f(q.fraction),
                    q.converged,
                    o.seed,
                    f(o.energy),
                    f(o.transverse_energy),
                    o.converged
                )?;
            }
        }
        Ok(())
    })?;
    let table = bracket_table(&r);
    fs::write(a.out.join("bracket.toml"), toml::to_string(&table)?).context("writing bracket.toml")?;
    write_manifest(&a.out, "critical-length", "completed", &cfg, table)?;
    println!("ell_lo={} ell_hi={} width={}", r.ell_lo, r.ell_hi, r.width);
    Ok(EXIT_OK)
}

pub fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<u8> {
    set_jobs(a.jobs)?;
    let cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    prepare_out(&a.out)?;
    write_manifest(&a.out, "verify", "running", &cfg, Table::new())?;
    let mut lines = verify::fast_battery()?;
    if !a.fast && a.config.is_some() {
        lines.extend(verify::swept_battery(&cfg, a.jobs)?);
    }
    write_file(&a.out.join("report.txt"), |w| {
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })?;
    let failed = lines.iter().filter(|l| !l.passed).count();
    let mut t = Table::new();
    t.insert("checks".into(), (lines.len() as i64).into());
    t.insert("failed".into(), (failed as i64).into());
    let status = if failed == 0 { "passed" } else { "failed" };
    write_manifest(&a.out, "verify", status, &cfg, t)?;
    for l in &lines {
        println!("{l}");
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK })
}
