//! Scaled anisotropic Navier-Stokes equations on `Omega`:
//!
//! ```text
//! d_t v + (u.grad) v - Delta_H v - eps^(alpha-2) d_z^2 v + grad_H p = 0
//! eps^2 (d_t w + u.grad w - Delta_H w - eps^(alpha-2) d_z^2 w) + d_z p = 0
//! div_H v + d_z w = 0
//! ```
//!
//! with `v` even and `w` odd in `z`. Viscous terms are integrated exactly
//! through an integrating factor; advection and pressure are explicit in
//! every Lawson RK4 stage, with the pressure obtained from the anisotropic
//! Poisson equation `(Delta_H + eps^-2 d_z^2) p = div F`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, Parity, Space, VectorField};
use crate::grid::Grid;
use crate::integrator::{dissipation_increment, lawson_rk4, IntegratingFactor};
use crate::ops::{self, dealiased_physical, product_to_spectral};
use crate::snapshot::Snapshot;

/// Divergence and parity tolerance for admissible states.
pub const STATE_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NseParams {
    pub eps: f64,
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
}

impl NseParams {
    pub fn new(eps: f64, alpha: f64, dt: f64, t_end: f64, cfl_safety: f64) -> Result<NseParams> {
        let p = NseParams {
            eps,
            alpha,
            dt,
            t_end,
            cfl_safety,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad(format!("eps = {} must lie in (0, 1]", self.eps));
        }
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            return bad(format!("alpha = {} must exceed 2", self.alpha));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end = {} must be non-negative", self.t_end));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety = {} must lie in (0, 1]",
                self.cfl_safety
            ));
        }
        Ok(())
    }

    /// Vertical viscosity `eps^(alpha - 2)` in scaled variables.
    pub fn vertical_viscosity(&self) -> f64 {
        self.eps.powf(self.alpha - 2.0)
    }
}

/// Extra body force `(f_v, f_w)` at time `t`, used for manufactured solutions.
pub type Forcing = Arc<dyn Fn(f64) -> (VectorField, Field) + Send + Sync>;

/// Test hooks. Production runs use the default (advection on, no forcing).
#[derive(Clone, Default)]
pub struct NseHooks {
    pub suppress_advection: bool,
    pub forcing: Option<Forcing>,
}

#[derive(Debug, Clone)]
pub struct NseState {
    pub v: VectorField,
    pub w: Field,
    pub t: f64,
    /// Pressure at `t`; zero until the state has been produced by a step.
    pub p: Field,
}

impl NseState {
    pub fn new(v: VectorField, w: Field, t: f64) -> Result<NseState> {
        v.x.same_grid(&w)?;
        for f in [&v.x, &v.y, &w] {
            f.require(Space::Spectral)?;
        }
        let p = Field::zeros(w.grid(), Parity::Even);
        Ok(NseState { v, w, t, p })
    }

    pub fn zeros(grid: &Arc<Grid>) -> NseState {
        NseState {
            v: VectorField::zeros(grid),
            w: Field::zeros(grid, Parity::Odd),
            t: 0.0,
            p: Field::zeros(grid, Parity::Even),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.w.grid()
    }

    /// `div_H v + d_z w` in spectral space.
    pub fn divergence(&self) -> Field {
        let mut div = ops::div_h(&self.v.x, &self.v.y).expect("spectral state");
        div.axpy(1.0, &ops::d_z(&self.w).expect("spectral state"));
        div
    }

    pub fn divergence_error(&self) -> f64 {
        self.divergence().max_abs()
    }

    pub fn parity_error(&self) -> f64 {
        self.v.parity_error().max(self.w.parity_error(Parity::Odd))
    }

    pub fn check_invariants(&self) -> Result<()> {
        let div = self.divergence_error();
        if div > STATE_TOL {
            return Err(Error::Invariant(format!("divergence {div:e}")));
        }
        let par = self.parity_error();
        if par > STATE_TOL {
            return Err(Error::Invariant(format!("parity drift {par:e}")));
        }
        Ok(())
    }

    fn components(&self) -> Vec<Field> {
        vec![self.v.x.clone(), self.v.y.clone(), self.w.clone()]
    }

    fn from_components(mut c: Vec<Field>, t: f64, p: Field) -> NseState {
        let w = c.pop().expect("three components");
        let y = c.pop().expect("three components");
        let x = c.pop().expect("three components");
        NseState {
            v: VectorField { x, y },
            w,
            t,
            p,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.w.is_finite()
    }

    pub fn to_snapshot(&self, params: &NseParams) -> Result<Snapshot> {
        Snapshot::from_fields(
            &[&self.v.x, &self.v.y, &self.w],
            params.eps,
            params.alpha,
            self.t,
        )
    }

    pub fn from_snapshot(snap: &Snapshot, grid: &Arc<Grid>) -> Result<NseState> {
        if snap.is_primitive() {
            return Err(Error::Snapshot(
                "primitive-equation snapshot cannot seed a Navier-Stokes run".into(),
            ));
        }
        let fields = snap.to_fields(grid, &[Parity::Even, Parity::Even, Parity::Odd])?;
        let p = Field::zeros(grid, Parity::Even);
        Ok(NseState::from_components(fields, snap.t, p))
    }
}

/// Full right-hand side of the system at a state.
#[derive(Debug, Clone)]
pub struct NseTendency {
    pub v: VectorField,
    pub w: Field,
    pub p: Field,
}

/// Removes the `eps`-weighted gradient part of `(f_x, f_y, f_w)` in place and
/// returns the potential `p` with `(Delta_H + eps^-2 d_z^2) p = div f`.
pub(crate) fn project_aniso(comps: &mut [Field], eps: f64) -> Field {
    let grid = Arc::clone(comps[0].grid());
    let inv_eps2 = 1.0 / (eps * eps);
    let mut p = Field::zeros(&grid, Parity::Even);
    let (fx, rest) = comps.split_at_mut(1);
    let (fy, fw) = rest.split_at_mut(1);
    let (fx, fy, fw) = (fx[0].data_mut(), fy[0].data_mut(), fw[0].data_mut());
    for (idx, pc) in p.data_mut().iter_mut().enumerate().skip(1) {
        let (i, j, k) = grid.slots(idx);
        let (kx, ky, kz) = (grid.kx[i], grid.ky[j], grid.kz[k]);
        let denom = kx * kx + ky * ky + kz * kz * inv_eps2;
        if denom == 0.0 {
            continue;
        }
        let div = I * (fx[idx] * kx + fy[idx] * ky + fw[idx] * kz);
        let ph = -div / denom;
        fx[idx] -= I * kx * ph;
        fy[idx] -= I * ky * ph;
        fw[idx] -= I * kz * inv_eps2 * ph;
        *pc = ph;
    }
    p
}

/// Per-mode viscous decay rate `kx^2 + ky^2 + nu_z kz^2`.
pub(crate) fn viscous_rate(grid: &Grid, nu_z: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let kz = grid.kz[grid.slots(idx).2];
            grid.kh2(idx) + nu_z * kz * kz
        })
        .collect()
}

struct Nonlinear {
    terms: Vec<Field>,
    p: Field,
    /// Max |u_x|, |u_y|, |w| on the grid.
    umax: [f64; 3],
}

fn max_abs_re(f: &Field) -> f64 {
    f.data().iter().map(|c| c.re.abs()).fold(0.0, f64::max)
}

/// `-(u.grad) c` for every component `c`, plus forcing, with pressure removed.
fn nonlinear(comps: &[Field], t: f64, eps: f64, hooks: &NseHooks) -> Result<Nonlinear> {
    let grid = comps[0].grid();
    let phys: Vec<Field> = comps.iter().map(dealiased_physical).collect();
    let umax = [
        max_abs_re(&phys[0]),
        max_abs_re(&phys[1]),
        max_abs_re(&phys[2]),
    ];
    let mut terms: Vec<Field> = if hooks.suppress_advection {
        comps
            .iter()
            .map(|c| Field::zeros(grid, c.parity()))
            .collect()
    } else {
        let mut out = Vec::with_capacity(3);
        for c in comps {
            let (dx, dy) = ops::grad_h(c)?;
            let dz = ops::d_z(c)?;
            let (dx, dy, dz) = (
                dealiased_physical(&dx),
                dealiased_physical(&dy),
                dealiased_physical(&dz),
            );
            let mut adv = product_to_spectral(
                &[(&phys[0], &dx), (&phys[1], &dy), (&phys[2], &dz)],
                c.parity(),
            );
            adv.scale(-1.0);
            out.push(adv);
        }
        out
    };
    if let Some(force) = &hooks.forcing {
        let (fv, fw) = force(t);
        terms[0].axpy(1.0, &fv.x);
        terms[1].axpy(1.0, &fv.y);
        terms[2].axpy(1.0, &fw);
    }
    let p = project_aniso(&mut terms, eps);
    Ok(Nonlinear { terms, p, umax })
}

fn cfl_from_umax(grid: &Grid, umax: [f64; 3]) -> f64 {
    let limit = |h: f64, u: f64| if u > 0.0 { h / u } else { f64::INFINITY };
    limit(grid.dx(), umax[0])
        .min(limit(grid.dy(), umax[1]))
        .min(limit(grid.dz(), umax[2]))
}

/// Advective CFL time-step bound `min(dx/|u_x|, dy/|u_y|, dz/|w|)` (without safety factor).
pub fn cfl_bound(state: &NseState) -> f64 {
    let umax = [&state.v.x, &state.v.y, &state.w].map(|f| max_abs_re(&dealiased_physical(f)));
    cfl_from_umax(state.grid(), umax)
}

/// Right-hand side of the scaled system, including viscous terms.
pub fn nse_rhs(state: &NseState, params: &NseParams) -> Result<NseTendency> {
    nse_rhs_with(state, params, &NseHooks::default())
}

pub fn nse_rhs_with(state: &NseState, params: &NseParams, hooks: &NseHooks) -> Result<NseTendency> {
    params.validate()?;
    state.check_invariants()?;
    let n = nonlinear(&state.components(), state.t, params.eps, hooks)?;
    let rate = viscous_rate(state.grid(), params.vertical_viscosity());
    let mut terms = n.terms;
    for (term, comp) in terms.iter_mut().zip(state.components()) {
        for ((t, c), r) in term.data_mut().iter_mut().zip(comp.data()).zip(&rate) {
            *t -= c * *r;
        }
    }
    let mut it = terms.into_iter();
    let (x, y, w) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    Ok(NseTendency {
        v: VectorField { x, y },
        w,
        p: n.p,
    })
}

/// `(E, dE/dt dissipation rate)` with `E = ||v||^2 + eps^2 ||w||^2`.
pub fn energy_functionals(state: &NseState, params: &NseParams) -> (f64, f64) {
    let eps2 = params.eps * params.eps;
    let nu = params.vertical_viscosity();
    let energy = state.v.l2_norm_sq() + eps2 * state.w.l2_norm_sq();
    let rate = 2.0
        * (state.v.grad_h_norm_sq()
            + nu * state.v.dz_norm_sq()
            + eps2 * state.w.grad_h_norm_sq()
            + eps2 * nu * state.w.dz_norm_sq());
    (energy, rate)
}

/// Stepper holding the integrating factor and the first-stage tendency of
/// the current state between steps.
pub struct NseSolver {
    params: NseParams,
    hooks: NseHooks,
    factor: IntegratingFactor,
    cached: Option<(f64, Nonlinear)>,
    /// Energy dissipated during the most recent step.
    pub last_dissipation: f64,
}

impl NseSolver {
    pub fn new(grid: &Grid, params: NseParams, hooks: NseHooks) -> Result<NseSolver> {
        params.validate()?;
        Ok(NseSolver {
            factor: IntegratingFactor::new(viscous_rate(grid, params.vertical_viscosity())),
            params,
            hooks,
            cached: None,
            last_dissipation: 0.0,
        })
    }

    pub fn params(&self) -> &NseParams {
        &self.params
    }

    fn first_stage(&mut self, comps: &[Field], t: f64) -> Result<Nonlinear> {
        match self.cached.take() {
            Some((tc, n)) if tc == t => Ok(n),
            _ => nonlinear(comps, t, self.params.eps, &self.hooks),
        }
    }

    /// Advances `state` by `dt`.
    pub fn step(&mut self, state: &NseState, dt: f64) -> Result<NseState> {
        let eps = self.params.eps;
        let y = state.components();
        let k1 = self.first_stage(&y, state.t)?;
        let bound = self.params.cfl_safety * cfl_from_umax(state.grid(), k1.umax);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, bound });
        }
        let hooks = &self.hooks;
        let mut next = lawson_rk4(&y, state.t, dt, &mut self.factor, &k1.terms, |c, t| {
            Ok(nonlinear(c, t, eps, hooks)?.terms)
        })?;
        let t = state.t + dt;
        if !next.iter().all(Field::is_finite) {
            return Err(Error::BlowUp {
                t,
                what: "non-finite velocity coefficients".into(),
            });
        }
        next[0] = ops::parity_project(&next[0], Parity::Even)?;
        next[1] = ops::parity_project(&next[1], Parity::Even)?;
        next[2] = ops::parity_project(&next[2], Parity::Odd)?;
        project_aniso(&mut next, eps);

        let eps2 = eps * eps;
        self.last_dissipation =
            dissipation_increment(&y, &next, self.factor.rate(), &[1.0, 1.0, eps2], dt);

        let n = nonlinear(&next, t, eps, &self.hooks)?;
        let p = n.p.clone();
        self.cached = Some((t, n));
        Ok(NseState::from_components(next, t, p))
    }
}

/// Single step with default hooks.
pub fn step_nse(state: &NseState, params: &NseParams) -> Result<NseState> {
    step_nse_with(state, params, NseHooks::default())
}

pub fn step_nse_with(state: &NseState, params: &NseParams, hooks: NseHooks) -> Result<NseState> {
    NseSolver::new(state.grid(), *params, hooks)?.step(state, params.dt)
}

/// Uniform output schedule: `outputs` intervals of `steps_per_output` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub steps_per_output: usize,
    pub outputs: usize,
}

impl Schedule {
    /// Largest step not exceeding `dt_max` that lands exactly on every output time.
    pub fn new(t_end: f64, dt_max: f64, outputs: usize) -> Result<Schedule> {
        if outputs == 0 {
            return Err(Error::InvalidParameter("need at least one output".into()));
        }
        if !(dt_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt_max} must be positive"
            )));
        }
        let interval = t_end / outputs as f64;
        let steps_per_output = ((interval / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(Schedule {
            dt: interval / steps_per_output as f64,
            steps_per_output,
            outputs,
        })
    }

    pub fn output_time(&self, k: usize) -> f64 {
        (k * self.steps_per_output) as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub energy: f64,
    pub dissipated: f64,
}

/// `E(t)` and accumulated dissipation `D(t)` over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn push(&mut self, t: f64, energy: f64, dissipated: f64) {
        self.rows.push(LedgerRow {
            t,
            energy,
            dissipated,
        });
    }

    pub fn initial_energy(&self) -> f64 {
        self.rows.first().map_or(0.0, |r| r.energy)
    }

    /// CSV with columns `t,E,D,E_plus_D_minus_E0`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "E", "D", "E_plus_D_minus_E0"])?;
        let e0 = self.initial_energy();
        for r in &self.rows {
            wr.write_record(&[
                format!("{:.17e}", r.t),
                format!("{:.17e}", r.energy),
                format!("{:.17e}", r.dissipated),
                format!("{:.17e}", r.energy + r.dissipated - e0),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Output of [`run_nse`]. `failure` is set when the run stopped early; the
/// frames and ledger then cover the interval actually reached.
#[derive(Debug, Clone)]
pub struct NseRun {
    pub frames: Vec<NseState>,
    pub ledger: EnergyLedger,
    pub schedule: Schedule,
    pub failure: Option<String>,
}

impl NseRun {
    pub fn final_time(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.t)
    }
}

/// Integrates from `initial` to `params.t_end`, recording `outputs + 1`
/// frames (including `t = 0`). `params.dt` is the largest allowed step.
pub fn run_nse(
    initial: &NseState,
    params: &NseParams,
    outputs: usize,
    hooks: NseHooks,
) -> Result<NseRun> {
    initial.check_invariants()?;
    let schedule = Schedule::new(params.t_end, params.dt, outputs)?;
    let mut solver = NseSolver::new(initial.grid(), *params, hooks)?;
    let mut state = initial.clone();
    let mut ledger = EnergyLedger::default();
    let mut dissipated = 0.0;
    ledger.push(state.t, energy_functionals(&state, params).0, 0.0);
    let mut frames = vec![state.clone()];
    let mut failure = None;
    'outer: for _ in 0..schedule.outputs {
        for _ in 0..schedule.steps_per_output {
            match solver.step(&state, schedule.dt) {
                Ok(next) => {
                    dissipated += solver.last_dissipation;
                    state = next;
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break 'outer;
                }
            }
        }
        ledger.push(state.t, energy_functionals(&state, params).0, dissipated);
        frames.push(state.clone());
    }
    Ok(NseRun {
        frames,
        ledger,
        schedule,
        failure,
    })
}
