//! Parameter sweeps over `(alpha, eps)`: one primitive-equation reference
//! run, one Navier-Stokes run per pair, error reports, rate fits and charts.

pub mod config;
pub mod fit;
pub mod render;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diagnostics::{beta, energy_inequality_residual, error_report, ErrorReport, Frame};
use crate::error::{Error, Result};
use crate::initial::{make_initial, make_well_prepared, Smoothness};
use crate::nse::{self, run_nse, NseHooks, NseParams, NseState};
use crate::pe::{self, run_pe, PeHooks, PeParams, PeRun, PeState};

pub use config::SweepConfig;
pub use fit::{fit_line, fit_rate, log_points, read_eps_total, LineFit, RateFit};
pub use render::{alpha_tag, render, Chart, Rendered};

/// One `(alpha, eps)` run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub report: ErrorReport,
    /// Signed energy-inequality residual of the Navier-Stokes run.
    pub energy_residual: f64,
    pub max_divergence: f64,
    pub max_parity_error: f64,
    pub ledger_file: String,
    pub report_file: String,
}

/// Rate fit for one `alpha`, or the reason it could not be made.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaOutcome {
    pub alpha: f64,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub dt: f64,
    pub pe_checksum: String,
    pub pe_failure: Option<String>,
    /// Worst barotropic-constraint residual over the PE output frames.
    pub pe_max_barotropic: f64,
    pub pe_max_parity_error: f64,
    pub runs: Vec<RunRecord>,
    pub alphas: Vec<AlphaOutcome>,
}

impl SweepOutcome {
    pub fn reports(&self) -> Vec<ErrorReport> {
        self.runs.iter().map(|r| r.report.clone()).collect()
    }

    pub fn fits(&self) -> Vec<RateFit> {
        self.alphas.iter().filter_map(|a| a.fit.clone()).collect()
    }

    /// True when every alpha produced a fit inside its tolerance band.
    pub fn all_pass(&self) -> bool {
        !self.alphas.is_empty()
            && self
                .alphas
                .iter()
                .all(|a| a.fit.as_ref().is_some_and(|f| f.pass))
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a SweepConfig,
    dt: f64,
    pe_checksum: &'a str,
    pe_failure: &'a Option<String>,
    runs: &'a [RunRecord],
    fits: &'a [AlphaOutcome],
    all_pass: bool,
    files: Vec<FileEntry>,
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// SHA-256 over the serialised snapshots of a primitive-equation trajectory.
pub fn trajectory_checksum(frames: &[PeState]) -> Result<String> {
    let mut h = Sha256::new();
    for f in frames {
        let mut buf = Vec::new();
        f.to_snapshot()?
            .write_to(&mut buf)
            .map_err(|e| Error::io("<memory>", e))?;
        h.update(&buf);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn eps_tag(eps: f64) -> String {
    format!("{eps}").replace('.', "p")
}

/// Runs the whole study described by `cfg`, writing every artifact under
/// `cfg.output_dir`. The manifest is written last.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let spec = cfg.data_spec()?;
    let raw = make_initial(&spec, &grid)?;
    let (v0, w0) = make_well_prepared(&raw)?;
    let nse0 = NseState::new(v0.clone(), w0, 0.0)?;
    let pe0 = PeState::new(v0, 0.0)?;
    nse0.to_snapshot(&NseParams::new(
        cfg.epsilons[0],
        cfg.alphas[0],
        cfg.dt_max,
        cfg.t_end,
        cfg.cfl_safety,
    )?)?
    .save(&out.join("initial.hylm"))?;

    // one step size for every run, so discretisation error cancels in the difference
    let bound = nse::cfl_bound(&nse0).min(pe::cfl_bound(&pe0));
    let dt = cfg.dt_max.min(0.5 * cfg.cfl_safety * bound);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let pe_params = PeParams {
        dt,
        t_end: cfg.t_end,
        cfl_safety: cfg.cfl_safety,
    };
    let pe_run: PeRun = run_pe(
        &pe0,
        &pe_params,
        cfg.outputs,
        &cfg.lm_exponents,
        PeHooks::default(),
    )?;
    let pe_checksum = trajectory_checksum(&pe_run.frames)?;
    pe_run.ledger.save_csv(&out.join("pe_ledger.csv"))?;
    pe_run.monitor.save_csv(&out.join("pe_monitor.csv"))?;
    if let Some(last) = pe_run.frames.last() {
        last.to_snapshot()?.save(&out.join("pe_final.hylm"))?;
    }
    let pe_frames: Vec<Frame> = pe_run.frames.iter().map(Frame::from).collect();
    let with_h1 = spec.smoothness == Smoothness::H2;

    let tasks: Vec<(f64, f64)> = cfg
        .alphas
        .iter()
        .flat_map(|&a| cfg.epsilons.iter().map(move |&e| (a, e)))
        .collect();
    let runs: Vec<Result<RunRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(alpha, eps)| {
                one_run(
                    &nse0,
                    &pe_frames,
                    &pe_checksum,
                    cfg,
                    dt,
                    alpha,
                    eps,
                    with_h1,
                )
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let alphas: Vec<AlphaOutcome> = cfg
        .alphas
        .iter()
        .map(|&alpha| fit_alpha(alpha, &runs, cfg.slope_tolerance))
        .collect();

    let outcome = SweepOutcome {
        dt,
        pe_checksum,
        pe_failure: pe_run.failure.clone(),
        pe_max_barotropic: pe_run
            .frames
            .iter()
            .map(PeState::barotropic_residual)
            .fold(0.0, f64::max),
        pe_max_parity_error: pe_run
            .frames
            .iter()
            .map(PeState::parity_error)
            .fold(0.0, f64::max),
        runs,
        alphas,
    };
    write_artifacts(cfg, &outcome)?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn one_run(
    nse0: &NseState,
    pe_frames: &[Frame],
    pe_checksum: &str,
    cfg: &SweepConfig,
    dt: f64,
    alpha: f64,
    eps: f64,
    with_h1: bool,
) -> Result<RunRecord> {
    let params = NseParams::new(eps, alpha, dt, cfg.t_end, cfg.cfl_safety)?;
    let run = run_nse(nse0, &params, cfg.outputs, NseHooks::default())?;
    let tag = format!("a{}_e{}", alpha_tag(alpha), eps_tag(eps));
    let ledger_file = format!("nse_ledger_{tag}.csv");
    let report_file = format!("report_{tag}.json");
    run.ledger.save_csv(&cfg.output_dir.join(&ledger_file))?;
    if let Some(last) = run.frames.last() {
        last.to_snapshot(&params)?
            .save(&cfg.output_dir.join(format!("nse_final_{tag}.hylm")))?;
    }
    let frames: Vec<Frame> = run.frames.iter().map(Frame::from).collect();
    let n = frames.len().min(pe_frames.len());
    let mut report = error_report(&frames[..n], &pe_frames[..n], eps, alpha, with_h1)?;
    report.pe_checksum = Some(pe_checksum.to_string());
    report.blowup = run.failure.clone();
    let max_divergence = run
        .frames
        .iter()
        .map(NseState::divergence_error)
        .fold(0.0, f64::max);
    let max_parity_error = run
        .frames
        .iter()
        .map(NseState::parity_error)
        .fold(0.0, f64::max);
    let json = serde_json::to_vec_pretty(&report)?;
    write(&cfg.output_dir.join(&report_file), &json)?;
    Ok(RunRecord {
        energy_residual: energy_inequality_residual(&run.ledger),
        report,
        max_divergence,
        max_parity_error,
        ledger_file,
        report_file,
    })
}

fn fit_alpha(alpha: f64, runs: &[RunRecord], tolerance: f64) -> AlphaOutcome {
    let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.report.alpha == alpha).collect();
    let (ok, bad): (Vec<&RunRecord>, Vec<&RunRecord>) = mine
        .into_iter()
        .partition(|r| r.report.blowup.is_none() && r.report.is_finite() && r.report.total > 0.0);
    let pairs: Vec<(f64, f64)> = ok.iter().map(|r| (r.report.eps, r.report.total)).collect();
    let result = beta(alpha).and_then(|b| fit_rate(alpha, &log_points(&pairs), b, tolerance));
    match result {
        Ok(mut fit) => {
            fit.excluded = bad.iter().map(|r| r.report.eps).collect();
            AlphaOutcome {
                alpha,
                fit: Some(fit),
                error: None,
            }
        }
        Err(e) => AlphaOutcome {
            alpha,
            fit: None,
            error: Some(e.to_string()),
        },
    }
}

fn write_artifacts(cfg: &SweepConfig, outcome: &SweepOutcome) -> Result<()> {
    let out = &cfg.output_dir;
    let mut files: Vec<PathBuf> = vec![
        "initial.hylm".into(),
        "pe_ledger.csv".into(),
        "pe_monitor.csv".into(),
    ];
    if out.join("pe_final.hylm").exists() {
        files.push("pe_final.hylm".into());
    }
    for r in &outcome.runs {
        files.push(r.ledger_file.clone().into());
        files.push(r.report_file.clone().into());
    }

    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(ErrorReport::CSV_HEADER)?;
    for r in &outcome.runs {
        wr.write_record(r.report.csv_record())?;
    }
    write(&out.join("reports.csv"), &into_bytes(wr)?)?;
    files.push("reports.csv".into());

    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["alpha", "beta_predicted", "slope", "residual", "pass"])?;
    for a in &outcome.alphas {
        match &a.fit {
            Some(f) => wr.write_record([
                format!("{}", f.alpha),
                format!("{}", f.beta_predicted),
                format!("{:.17e}", f.slope),
                format!("{:.17e}", f.residual),
                format!("{}", f.pass),
            ])?,
            None => wr.write_record([
                format!("{}", a.alpha),
                format!("{}", beta(a.alpha).unwrap_or(f64::NAN)),
                String::new(),
                String::new(),
                "false".to_string(),
            ])?,
        }
    }
    write(&out.join("rates.csv"), &into_bytes(wr)?)?;
    files.push("rates.csv".into());

    let reports = outcome.reports();
    let fits = outcome.fits();
    if !fits.is_empty() {
        let rendered = render(&reports, &fits)?;
        for c in &rendered.charts {
            let name = format!("rate_a{}.svg", alpha_tag(c.alpha));
            write(&out.join(&name), c.svg.as_bytes())?;
            files.push(name.into());
        }
        write(&out.join("summary.txt"), rendered.summary.as_bytes())?;
        files.push("summary.txt".into());
    }

    let mut entries = Vec::with_capacity(files.len());
    for f in &files {
        let p = out.join(f);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        entries.push(FileEntry {
            path: f.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = Manifest {
        config: cfg,
        dt: outcome.dt,
        pe_checksum: &outcome.pe_checksum,
        pe_failure: &outcome.pe_failure,
        runs: &outcome.runs,
        fits: &outcome.alphas,
        all_pass: outcome.all_pass(),
        files: entries,
    };
    write(
        &out.join("manifest.json"),
        &serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(())
}

fn into_bytes(wr: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    wr.into_inner()
        .map_err(|e| Error::io("<csv>", e.into_error()))
}
