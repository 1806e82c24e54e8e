//! Primitive equations with horizontal viscosity only:
//!
//! ```text
//! d_t v + (v.grad_H) v + w d_z v - Delta_H v + grad_H p_s = 0
//! w(z) = -int_{-1}^{z} div_H v dxi
//! ```
//!
//! The surface pressure `p_s(x, y)` is eliminated from the vertically
//! averaged momentum equation, so only the barotropic mode sees it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, Parity, Space, SurfaceField, VectorField};
use crate::grid::Grid;
use crate::integrator::{dissipation_increment, lawson_rk4, IntegratingFactor};
use crate::nse::{EnergyLedger, Schedule, STATE_TOL};
use crate::ops::{self, dealiased_physical, product_to_spectral};
use crate::snapshot::Snapshot;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Vertical velocity from incompressibility, `w = -int_{-1}^z div_H v`.
///
/// Antidifferentiation is exact per vertical mode: `w_l = -D_l / (i kz_l)`.
/// The `l = 0` part of `div_H v` (the barotropic divergence) has no periodic
/// antiderivative and is dropped; see [`barotropic_residual`].
pub fn diagnose_w(v: &VectorField) -> Result<Field> {
    v.x.require(Space::Spectral)?;
    let div = ops::div_h(&v.x, &v.y)?;
    let g = Arc::clone(v.grid());
    let w = div.map_modes(|idx, d| {
        let kz = g.kz[g.slots(idx).2];
        if kz == 0.0 {
            Complex64::default()
        } else {
            -d / (I * kz)
        }
    });
    Ok(w.with_parity(Parity::Odd))
}

/// `max |div_H int_{-1}^{1} v dz|` over horizontal modes.
pub fn barotropic_residual(v: &VectorField) -> f64 {
    let g = v.grid();
    let nxy = g.nx * g.ny;
    (0..nxy)
        .map(|q| {
            let (i, j, _) = g.slots(q);
            (I * (v.x.data()[q] * g.kx[i] + v.y.data()[q] * g.ky[j])).norm() * 2.0
        })
        .fold(0.0, f64::max)
}

/// Removes the horizontal-gradient part of the vertical mean of `(f_x, f_y)`
/// and returns the potential `phi` with `Delta_H phi = div_H mean(f)`.
pub(crate) fn remove_barotropic_gradient(fx: &mut Field, fy: &mut Field) -> Result<SurfaceField> {
    let g = Arc::clone(fx.grid());
    let nxy = g.nx * g.ny;
    let mut div = SurfaceField::zeros(&g);
    for (q, d) in div.data_mut().iter_mut().enumerate() {
        let (i, j, _) = g.slots(q);
        *d = I * (fx.data()[q] * g.kx[i] + fy.data()[q] * g.ky[j]);
    }
    let phi = ops::solve_poisson_2d(&div)?;
    for q in 0..nxy {
        let (i, j, _) = g.slots(q);
        let ph = phi.data()[q];
        fx.data_mut()[q] -= I * g.kx[i] * ph;
        fy.data_mut()[q] -= I * g.ky[j] * ph;
    }
    Ok(phi)
}

#[derive(Debug, Clone)]
pub struct PeState {
    pub v: VectorField,
    pub t: f64,
    /// Surface pressure at `t`; zero until produced by a step.
    pub p_s: SurfaceField,
}

impl PeState {
    pub fn new(v: VectorField, t: f64) -> Result<PeState> {
        v.x.require(Space::Spectral)?;
        v.y.require(Space::Spectral)?;
        let p_s = SurfaceField::zeros(v.grid());
        Ok(PeState { v, t, p_s })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.v.grid()
    }

    pub fn barotropic_residual(&self) -> f64 {
        barotropic_residual(&self.v)
    }

    pub fn parity_error(&self) -> f64 {
        self.v.parity_error()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let b = self.barotropic_residual();
        if b > STATE_TOL {
            return Err(Error::Invariant(format!("barotropic divergence {b:e}")));
        }
        let p = self.parity_error();
        if p > STATE_TOL {
            return Err(Error::Invariant(format!("parity drift {p:e}")));
        }
        Ok(())
    }

    pub fn w(&self) -> Field {
        diagnose_w(&self.v).expect("spectral state")
    }

    pub fn to_snapshot(&self) -> Result<Snapshot> {
        Snapshot::from_fields(&[&self.v.x, &self.v.y], 0.0, 0.0, self.t)
    }

    pub fn from_snapshot(snap: &Snapshot, grid: &Arc<Grid>) -> Result<PeState> {
        let parities: &[Parity] = match snap.components.len() {
            2 => &[Parity::Even, Parity::Even],
            3 => &[Parity::Even, Parity::Even, Parity::Odd],
            n => return Err(Error::Snapshot(format!("{n} components"))),
        };
        let mut fields = snap.to_fields(grid, parities)?.into_iter();
        let (x, y) = (fields.next().unwrap(), fields.next().unwrap());
        PeState::new(VectorField { x, y }, snap.t)
    }
}

pub type PeForcing = Arc<dyn Fn(f64) -> VectorField + Send + Sync>;

#[derive(Clone, Default)]
pub struct PeHooks {
    pub forcing: Option<PeForcing>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeParams {
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
}

impl PeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end = {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl_safety = {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

struct Nonlinear {
    terms: Vec<Field>,
    p_s: SurfaceField,
    umax: [f64; 3],
}

fn max_abs_re(f: &Field) -> f64 {
    f.data().iter().map(|c| c.re.abs()).fold(0.0, f64::max)
}

fn nonlinear(comps: &[Field], t: f64, hooks: &PeHooks) -> Result<Nonlinear> {
    let v = VectorField {
        x: comps[0].clone(),
        y: comps[1].clone(),
    };
    let w = diagnose_w(&v)?;
    let ux = dealiased_physical(&v.x);
    let uy = dealiased_physical(&v.y);
    let uw = dealiased_physical(&w);
    let umax = [max_abs_re(&ux), max_abs_re(&uy), max_abs_re(&uw)];
    let mut terms = Vec::with_capacity(2);
    for c in comps {
        let (dx, dy) = ops::grad_h(c)?;
        let dz = ops::d_z(c)?;
        let (dx, dy, dz) = (
            dealiased_physical(&dx),
            dealiased_physical(&dy),
            dealiased_physical(&dz),
        );
        let mut adv = product_to_spectral(&[(&ux, &dx), (&uy, &dy), (&uw, &dz)], Parity::Even);
        adv.scale(-1.0);
        terms.push(adv);
    }
    if let Some(force) = &hooks.forcing {
        let f = force(t);
        terms[0].axpy(1.0, &f.x);
        terms[1].axpy(1.0, &f.y);
    }
    let (a, b) = terms.split_at_mut(1);
    let p_s = remove_barotropic_gradient(&mut a[0], &mut b[0])?;
    Ok(Nonlinear { terms, p_s, umax })
}

fn horizontal_rate(grid: &Grid) -> Vec<f64> {
    (0..grid.len()).map(|idx| grid.kh2(idx)).collect()
}

/// `-(v.grad_H) v - w d_z v + Delta_H v - grad_H p_s`.
pub fn pe_rhs(state: &PeState) -> Result<VectorField> {
    pe_rhs_with(state, &PeHooks::default())
}

pub fn pe_rhs_with(state: &PeState, hooks: &PeHooks) -> Result<VectorField> {
    state.check_invariants()?;
    let comps = [state.v.x.clone(), state.v.y.clone()];
    let mut n = nonlinear(&comps, state.t, hooks)?;
    let rate = horizontal_rate(state.grid());
    for (term, comp) in n.terms.iter_mut().zip(&comps) {
        for ((t, c), r) in term.data_mut().iter_mut().zip(comp.data()).zip(&rate) {
            *t -= c * *r;
        }
    }
    let y = n.terms.pop().unwrap();
    let x = n.terms.pop().unwrap();
    Ok(VectorField { x, y })
}

pub struct PeSolver {
    params: PeParams,
    hooks: PeHooks,
    factor: IntegratingFactor,
    cached: Option<(f64, Nonlinear)>,
    /// `int ||grad_H v||^2 dt` over the most recent step.
    pub last_dissipation: f64,
    /// Barotropic divergence of the most recent step before re-projection.
    pub last_drift: f64,
}

impl PeSolver {
    pub fn new(grid: &Grid, params: PeParams, hooks: PeHooks) -> Result<PeSolver> {
        params.validate()?;
        Ok(PeSolver {
            params,
            hooks,
            factor: IntegratingFactor::new(horizontal_rate(grid)),
            cached: None,
            last_dissipation: 0.0,
            last_drift: 0.0,
        })
    }

    pub fn step(&mut self, state: &PeState, dt: f64) -> Result<PeState> {
        let y = vec![state.v.x.clone(), state.v.y.clone()];
        let k1 = match self.cached.take() {
            Some((tc, n)) if tc == state.t => n,
            _ => nonlinear(&y, state.t, &self.hooks)?,
        };
        let bound = self.params.cfl_safety * cfl_from_umax(state.grid(), k1.umax);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, bound });
        }
        let hooks = &self.hooks;
        let mut next = lawson_rk4(&y, state.t, dt, &mut self.factor, &k1.terms, |c, t| {
            Ok(nonlinear(c, t, hooks)?.terms)
        })?;
        let t = state.t + dt;
        if !next.iter().all(Field::is_finite) {
            return Err(Error::BlowUp {
                t,
                what: "non-finite velocity coefficients".into(),
            });
        }
        let mut vy = ops::parity_project(&next.pop().unwrap(), Parity::Even)?;
        let mut vx = ops::parity_project(&next.pop().unwrap(), Parity::Even)?;
        self.last_drift = barotropic_residual(&VectorField {
            x: vx.clone(),
            y: vy.clone(),
        });
        remove_barotropic_gradient(&mut vx, &mut vy)?;
        let next = vec![vx, vy];
        self.last_dissipation =
            dissipation_increment(&y, &next, self.factor.rate(), &[0.5, 0.5], dt);

        let n = nonlinear(&next, t, &self.hooks)?;
        let p_s = n.p_s.clone();
        self.cached = Some((t, n));
        let mut it = next.into_iter();
        let v = VectorField {
            x: it.next().unwrap(),
            y: it.next().unwrap(),
        };
        Ok(PeState { v, t, p_s })
    }
}

fn cfl_from_umax(grid: &Grid, umax: [f64; 3]) -> f64 {
    let limit = |h: f64, u: f64| if u > 0.0 { h / u } else { f64::INFINITY };
    limit(grid.dx(), umax[0])
        .min(limit(grid.dy(), umax[1]))
        .min(limit(grid.dz(), umax[2]))
}

/// Advective CFL bound including the diagnosed `w` against `dz`.
pub fn cfl_bound(state: &PeState) -> f64 {
    let w = state.w();
    let umax = [&state.v.x, &state.v.y, &w].map(|f| max_abs_re(&dealiased_physical(f)));
    cfl_from_umax(state.grid(), umax)
}

pub fn step_pe(state: &PeState, dt: f64) -> Result<PeState> {
    step_pe_with(state, dt, PeHooks::default())
}

pub fn step_pe_with(state: &PeState, dt: f64, hooks: PeHooks) -> Result<PeState> {
    let params = PeParams {
        dt,
        t_end: state.t + dt,
        cfl_safety: 1.0,
    };
    PeSolver::new(state.grid(), params, hooks)?.step(state, dt)
}

/// `||d_z v||_{L^m(Omega)}` by rectangle-rule quadrature on the grid.
pub fn lm_monitor(state: &PeState, m: f64) -> Result<f64> {
    if !(m > 2.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "exponent m = {m} must exceed 2"
        )));
    }
    let gx = ops::d_z(&state.v.x)?.to_physical()?;
    let gy = ops::d_z(&state.v.y)?.to_physical()?;
    let g = state.grid();
    let sum: f64 = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| (a.re * a.re + b.re * b.re).sqrt().powf(m))
        .sum();
    Ok((sum * g.volume() / g.len() as f64).powf(1.0 / m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    /// `||v||_{H^1}`
    pub v_h1: f64,
    /// `||grad_H v||_{H^1}`
    pub grad_h_v_h1: f64,
    /// `||d_z v||_m` for each configured exponent.
    pub dz_lm: Vec<f64>,
    /// Barotropic divergence before re-projection during the last step.
    pub drift: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeMonitor {
    pub exponents: Vec<f64>,
    pub rows: Vec<MonitorRow>,
}

impl PeMonitor {
    pub fn new(exponents: Vec<f64>) -> Result<PeMonitor> {
        for &m in &exponents {
            if !(m > 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "exponent m = {m} must exceed 2"
                )));
            }
        }
        Ok(PeMonitor {
            exponents,
            rows: Vec::new(),
        })
    }

    pub fn record(&mut self, state: &PeState, drift: f64) -> Result<()> {
        let g = Arc::clone(state.grid());
        let grad_h1 = |f: &Field| {
            f.weighted_norm_sq(|idx| {
                let kz = g.kz[g.slots(idx).2];
                g.kh2(idx) * (1.0 + g.kh2(idx) + kz * kz)
            })
        };
        let dz_lm = self
            .exponents
            .iter()
            .map(|&m| lm_monitor(state, m))
            .collect::<Result<Vec<_>>>()?;
        self.rows.push(MonitorRow {
            t: state.t,
            v_h1: state.v.h1_norm_sq().sqrt(),
            grad_h_v_h1: (grad_h1(&state.v.x) + grad_h1(&state.v.y)).sqrt(),
            dz_lm,
            drift,
        });
        Ok(())
    }

    /// `||d_z v(t)||_m / ||d_z v_0||_m` for exponent slot `i` (NaN if the initial value is 0).
    pub fn lm_ratio(&self, row: &MonitorRow, i: usize) -> f64 {
        let first = self.rows.first().map_or(0.0, |r| r.dz_lm[i]);
        if first > 0.0 {
            row.dz_lm[i] / first
        } else {
            f64::NAN
        }
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec![
            "t".to_string(),
            "v_h1".to_string(),
            "grad_h_v_h1".to_string(),
            "barotropic_drift".to_string(),
        ];
        for m in &self.exponents {
            header.push(format!("dzv_L{m}"));
            header.push(format!("dzv_L{m}_ratio"));
        }
        wr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                format!("{:.17e}", row.t),
                format!("{:.17e}", row.v_h1),
                format!("{:.17e}", row.grad_h_v_h1),
                format!("{:.17e}", row.drift),
            ];
            for i in 0..self.exponents.len() {
                rec.push(format!("{:.17e}", row.dz_lm[i]));
                rec.push(format!("{:.17e}", self.lm_ratio(row, i)));
            }
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }
}

#[derive(Debug, Clone)]
pub struct PeRun {
    pub frames: Vec<PeState>,
    /// `E = ||v||^2 / 2`, `D = int ||grad_H v||^2`.
    pub ledger: EnergyLedger,
    pub monitor: PeMonitor,
    pub schedule: Schedule,
    pub failure: Option<String>,
}

pub fn run_pe(
    initial: &PeState,
    params: &PeParams,
    outputs: usize,
    lm_exponents: &[f64],
    hooks: PeHooks,
) -> Result<PeRun> {
    initial.check_invariants()?;
    let schedule = Schedule::new(params.t_end, params.dt, outputs)?;
    let mut solver = PeSolver::new(initial.grid(), *params, hooks)?;
    let mut monitor = PeMonitor::new(lm_exponents.to_vec())?;
    let mut state = initial.clone();
    let mut ledger = EnergyLedger::default();
    let mut dissipated = 0.0;
    ledger.push(state.t, 0.5 * state.v.l2_norm_sq(), 0.0);
    monitor.record(&state, 0.0)?;
    let mut frames = vec![state.clone()];
    let mut failure = None;
    'outer: for _ in 0..schedule.outputs {
        let mut drift: f64 = 0.0;
        for _ in 0..schedule.steps_per_output {
            match solver.step(&state, schedule.dt) {
                Ok(next) => {
                    dissipated += solver.last_dissipation;
                    drift = drift.max(solver.last_drift);
                    state = next;
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break 'outer;
                }
            }
        }
        ledger.push(state.t, 0.5 * state.v.l2_norm_sq(), dissipated);
        monitor.record(&state, drift)?;
        frames.push(state.clone());
    }
    Ok(PeRun {
        frames,
        ledger,
        monitor,
        schedule,
        failure,
    })
}
