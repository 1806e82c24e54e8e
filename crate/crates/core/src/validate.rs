//! Self-check suite: structural invariants, energy bookkeeping, the
//! trilinear-inequality sampler and the Taylor-Green decay oracle.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{energy_inequality_residual, trilinear_check};
use crate::error::Result;
use crate::field::{Parity, VectorField};
use crate::grid::{make_grid, Grid};
use crate::initial::{
    make_initial, make_well_prepared, Analytic, DataKind, DataSpec, NormTarget, Smoothness,
};
use crate::nse::{run_nse, NseHooks, NseParams, NseState};
use crate::pe::{diagnose_w, run_pe, PeHooks, PeParams, PeState};
use crate::Field;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Check {
        Check {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// Seeded H2-class data used by the structural checks.
fn random_data(grid: &Arc<Grid>) -> Result<(VectorField, Field)> {
    let spec = DataSpec {
        kind: DataKind::RandomBandLimited {
            seed: 20240917,
            max_mode: 2,
            amplitude: 1.0,
            target: Some(NormTarget::H2(5.0)),
        },
        smoothness: Smoothness::H2,
    };
    make_well_prepared(&make_initial(&spec, grid)?)
}

/// Divergence, barotropic constraint and parity drift over short NSE / PE runs.
pub fn structural_checks(n: usize) -> Result<Vec<Check>> {
    let grid = make_grid(n, n, n, 2.0 * PI, 2.0 * PI)?;
    let (v0, w0) = random_data(&grid)?;
    let params = NseParams::new(0.1, 4.0, 0.005, 0.1, 0.9)?;
    let nse = run_nse(
        &NseState::new(v0.clone(), w0, 0.0)?,
        &params,
        10,
        NseHooks::default(),
    )?;
    let pe_params = PeParams {
        dt: 0.005,
        t_end: 0.1,
        cfl_safety: 0.9,
    };
    let pe = run_pe(
        &PeState::new(v0, 0.0)?,
        &pe_params,
        10,
        &[],
        PeHooks::default(),
    )?;
    let div = nse
        .frames
        .iter()
        .map(NseState::divergence_error)
        .fold(0.0, f64::max);
    let baro = pe
        .frames
        .iter()
        .map(PeState::barotropic_residual)
        .fold(0.0, f64::max);
    let parity = nse
        .frames
        .iter()
        .map(NseState::parity_error)
        .chain(pe.frames.iter().map(PeState::parity_error))
        .fold(0.0, f64::max);
    let completed = if nse.failure.is_none() && pe.failure.is_none() {
        0.0
    } else {
        1.0
    };
    Ok(vec![
        Check::at_most("runs completed", completed, 0.0),
        Check::at_most("nse divergence", div, 1e-10),
        Check::at_most("pe barotropic constraint", baro, 1e-10),
        Check::at_most("parity drift", parity, 1e-10),
        Check::at_most(
            "nse energy inequality",
            energy_inequality_residual(&nse.ledger),
            1e-4,
        ),
    ])
}

/// Energy bookkeeping with advection switched off: the ledger must close to
/// round-off.
pub fn pure_diffusion_check(n: usize) -> Result<Check> {
    let grid = make_grid(n, n, n, 2.0 * PI, 2.0 * PI)?;
    let (v0, w0) = random_data(&grid)?;
    let params = NseParams::new(0.2, 3.0, 0.01, 0.5, 0.9)?;
    let hooks = NseHooks {
        suppress_advection: true,
        forcing: None,
    };
    let run = run_nse(&NseState::new(v0, w0, 0.0)?, &params, 10, hooks)?;
    let e0 = run.ledger.initial_energy();
    let worst = run
        .ledger
        .rows
        .iter()
        .map(|r| (r.energy + r.dissipated - e0).abs() / e0)
        .fold(0.0, f64::max);
    Ok(Check::at_most(
        "pure-diffusion energy closure",
        worst,
        1e-10,
    ))
}

/// Primitive-equation Taylor-Green decay: `||v(t)|| = e^{-2t} ||v_0||` and the
/// energy identity, over `t in [0, 1]`.
pub fn taylor_green_checks(n: usize) -> Result<Vec<Check>> {
    let grid = make_grid(n, n, n, 2.0 * PI, 2.0 * PI)?;
    let spec = DataSpec {
        kind: DataKind::Analytic {
            name: Analytic::TaylorGreen,
            amplitude: 1.0,
        },
        smoothness: Smoothness::H2,
    };
    let v0 = make_initial(&spec, &grid)?;
    let params = PeParams {
        dt: 0.01,
        t_end: 1.0,
        cfl_safety: 0.9,
    };
    let run = run_pe(
        &PeState::new(v0, 0.0)?,
        &params,
        20,
        &[],
        PeHooks::default(),
    )?;
    let n0 = run.frames[0].v.l2_norm_sq().sqrt();
    let decay = run
        .frames
        .iter()
        .map(|f| {
            let exact = (-2.0 * f.t).exp();
            (f.v.l2_norm_sq().sqrt() / n0 - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let e0 = run.ledger.initial_energy();
    let identity = run
        .ledger
        .rows
        .iter()
        .map(|r| (r.energy + r.dissipated - e0).abs() / e0)
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("taylor-green decay", decay, 1e-4),
        Check::at_most("pe energy identity", identity, 1e-4),
    ])
}

/// `diagnose_w` on `(cos x cos(pi z), 0)` against `sin x sin(pi z) / pi`.
pub fn hydrostatic_oracle(n: usize) -> Result<Check> {
    let grid = make_grid(n, n, n, 2.0 * PI, 2.0 * PI)?;
    let v = VectorField::new(
        Field::from_fn(&grid, Parity::Even, |x, _, z| x.cos() * (PI * z).cos()),
        Field::zeros(&grid, Parity::Even),
    )?;
    let w = diagnose_w(&v)?.to_physical()?;
    let mut err: f64 = 0.0;
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, _, z) = grid.point(i, j, k);
                let exact = x.sin() * (PI * z).sin() / PI;
                err = err.max((w.data()[grid.index(i, j, k)].re - exact).abs());
            }
        }
    }
    Ok(Check::at_most("hydrostatic w oracle", err, 1e-10))
}

/// Trilinear sampler over two seeds: finite ratios, max ratio reproducible to
/// 20% and at most 10x the median.
pub fn trilinear_checks(n: usize, samples: usize) -> Result<Vec<Check>> {
    let grid = make_grid(n, n, n, 2.0 * PI, 2.0 * PI)?;
    let max_mode = n / 3;
    let a = trilinear_check(&grid, samples, 1, max_mode)?;
    let b = trilinear_check(&grid, samples, 2, max_mode)?;
    let finite = a.ratios.iter().chain(&b.ratios).all(|r| r.is_finite());
    let spread = (a.max_ratio - b.max_ratio).abs() / a.max_ratio.max(b.max_ratio);
    let vs_median = (a.max_ratio / a.median_ratio).max(b.max_ratio / b.median_ratio);
    Ok(vec![
        Check::at_most(
            "trilinear ratios finite",
            if finite { 0.0 } else { 1.0 },
            0.0,
        ),
        Check::at_most("trilinear seed spread", spread, 0.2),
        Check::at_most("trilinear max / median", vs_median, 10.0),
    ])
}

/// Everything above at the default resolutions.
pub fn run_validation() -> Result<Vec<Check>> {
    let mut out = structural_checks(16)?;
    out.push(pure_diffusion_check(16)?);
    out.extend(taylor_green_checks(16)?);
    out.push(hydrostatic_oracle(32)?);
    out.extend(trilinear_checks(16, 100)?);
    Ok(out)
}
