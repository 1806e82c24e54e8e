use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hydrolimit::diagnostics::{error_report, Frame};
use hydrolimit::initial::{make_initial, make_well_prepared};
use hydrolimit::nse::{run_nse, NseHooks, NseParams, NseState};
use hydrolimit::pe::{run_pe, PeHooks, PeParams, PeState};
use hydrolimit::snapshot::Snapshot;
use hydrolimit::sweep::{self, SweepConfig};
use hydrolimit::{diagnostics, validate};

#[derive(Parser)]
#[command(
    name = "hydrolimit",
    version,
    about = "Hydrostatic-limit convergence laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scaled Navier-Stokes system; writes snapshots and an energy ledger.
    RunNse {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// Integrate the primitive equations; writes snapshots, a ledger and a monitor CSV.
    RunPe {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Error report between a Navier-Stokes and a primitive-equation snapshot directory.
    Compare {
        #[arg(long)]
        nse: PathBuf,
        #[arg(long)]
        pe: PathBuf,
        /// Also compute the H1 functionals.
        #[arg(long)]
        h1: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full (alpha, eps) study from a TOML config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override `workers` from the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Log-log rate fit of a CSV with `eps` and `total` columns.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.6)]
        tolerance: f64,
    },
    /// Built-in invariant and oracle checks.
    Validate,
}

#[derive(Args)]
struct RunArgs {
    /// Sweep-style TOML config supplying grid, data, horizon and step policy.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for frames and CSVs.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::RunNse { run, eps, alpha } => run_nse_cmd(&run, eps, alpha),
        Command::RunPe { run } => run_pe_cmd(&run),
        Command::Compare { nse, pe, h1, out } => compare(&nse, &pe, h1, out.as_deref()),
        Command::Sweep {
            config,
            out,
            workers,
        } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let outcome = sweep::run_sweep(&cfg)?;
            let rendered = sweep::render(&outcome.reports(), &outcome.fits());
            match rendered {
                Ok(r) => print!("{}", r.summary),
                Err(e) => eprintln!("{e}"),
            }
            for a in &outcome.alphas {
                if let Some(err) = &a.error {
                    eprintln!("alpha = {}: {err}", a.alpha);
                }
            }
            Ok(outcome.all_pass())
        }
        Command::Fit {
            csv,
            alpha,
            tolerance,
        } => {
            let file =
                fs::File::open(&csv).with_context(|| format!("opening {}", csv.display()))?;
            let pairs = sweep::read_eps_total(file)?;
            let beta = diagnostics::beta(alpha)?;
            let fit = sweep::fit_rate(alpha, &sweep::log_points(&pairs), beta, tolerance)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(fit.pass)
        }
        Command::Validate => {
            let checks = validate::run_validation()?;
            for c in &checks {
                println!(
                    "{} {:<32} {:>12.3e} (tol {:.1e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn initial_data(cfg: &SweepConfig) -> Result<(hydrolimit::VectorField, hydrolimit::Field)> {
    let grid = cfg.grid()?;
    let v = make_initial(&cfg.data_spec()?, &grid)?;
    Ok(make_well_prepared(&v)?)
}

fn frame_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("frame_{k:05}.hylm"))
}

fn run_nse_cmd(args: &RunArgs, eps: f64, alpha: f64) -> Result<bool> {
    let cfg = SweepConfig::load(&args.config)?;
    let (v0, w0) = initial_data(&cfg)?;
    let params = NseParams::new(eps, alpha, cfg.dt_max, cfg.t_end, cfg.cfl_safety)?;
    let run = run_nse(
        &NseState::new(v0, w0, 0.0)?,
        &params,
        cfg.outputs,
        NseHooks::default(),
    )?;
    fs::create_dir_all(&args.out)?;
    for (k, f) in run.frames.iter().enumerate() {
        f.to_snapshot(&params)?.save(&frame_path(&args.out, k))?;
    }
    run.ledger.save_csv(&args.out.join("ledger.csv"))?;
    report_failure(run.failure.as_deref(), run.final_time())
}

fn run_pe_cmd(args: &RunArgs) -> Result<bool> {
    let cfg = SweepConfig::load(&args.config)?;
    let (v0, _) = initial_data(&cfg)?;
    let params = PeParams {
        dt: cfg.dt_max,
        t_end: cfg.t_end,
        cfl_safety: cfg.cfl_safety,
    };
    let run = run_pe(
        &PeState::new(v0, 0.0)?,
        &params,
        cfg.outputs,
        &cfg.lm_exponents,
        PeHooks::default(),
    )?;
    fs::create_dir_all(&args.out)?;
    for (k, f) in run.frames.iter().enumerate() {
        f.to_snapshot()?.save(&frame_path(&args.out, k))?;
    }
    run.ledger.save_csv(&args.out.join("ledger.csv"))?;
    run.monitor.save_csv(&args.out.join("monitor.csv"))?;
    report_failure(
        run.failure.as_deref(),
        run.frames.last().map_or(0.0, |f| f.t),
    )
}

fn report_failure(failure: Option<&str>, t: f64) -> Result<bool> {
    match failure {
        Some(msg) => {
            eprintln!("run stopped at t = {t}: {msg}");
            Ok(false)
        }
        None => Ok(true),
    }
}

fn load_dir(dir: &Path) -> Result<Vec<Snapshot>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "hylm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .hylm snapshots in {}", dir.display());
    }
    paths.iter().map(|p| Ok(Snapshot::load(p)?)).collect()
}

fn compare(nse_dir: &Path, pe_dir: &Path, h1: bool, out: Option<&Path>) -> Result<bool> {
    let nse = load_dir(nse_dir)?;
    let pe = load_dir(pe_dir)?;
    let head = &nse[0];
    if head.is_primitive() {
        bail!("{} holds primitive-equation snapshots", nse_dir.display());
    }
    let (eps, alpha) = (head.eps, head.alpha);
    let grid = head.grid()?;
    let nse_frames = nse
        .iter()
        .map(|s| Ok(Frame::from(&NseState::from_snapshot(s, &grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let pe_frames = pe
        .iter()
        .map(|s| Ok(Frame::from(&PeState::from_snapshot(s, &grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let n = nse_frames.len().min(pe_frames.len());
    let report = error_report(&nse_frames[..n], &pe_frames[..n], eps, alpha, h1)?;
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(p) => fs::write(p, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(true)
}
