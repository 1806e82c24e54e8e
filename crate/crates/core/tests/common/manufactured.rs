//! Forced problems whose semi-discrete solution is `a(t) U` exactly, so the
//! only error left at the horizon is the time discretisation.

use std::f64::consts::PI;
use std::sync::Arc;

use hydrolimit::nse::{run_nse, Forcing, NseHooks, NseParams, NseState};
use hydrolimit::pe::{diagnose_w, run_pe, PeForcing, PeHooks, PeParams, PeState};
use hydrolimit::{make_grid, ops, Field, Parity, VectorField};

pub const STEPS: [f64; 3] = [0.2, 0.1, 0.05];
const T_END: f64 = 1.0;

fn amp(t: f64) -> f64 {
    1.0 + 0.5 * (2.0 * t).sin()
}

fn damp(t: f64) -> f64 {
    (2.0 * t).cos()
}

/// `a' U + a^2 (U.grad)U - a L U` for each component.
fn forcing_terms(comps: &[Field], adv: &[Field], lin: &[Field], t: f64) -> Vec<Field> {
    let (a, da) = (amp(t), damp(t));
    (0..comps.len())
        .map(|c| {
            let mut f = comps[c].scaled(da);
            f.axpy(a * a, &adv[c]);
            f.axpy(-a, &lin[c]);
            f
        })
        .collect()
}

fn advect(u: &[&Field; 3], c: &Field) -> Field {
    let (dx, dy) = ops::grad_h(c).unwrap();
    let dz = ops::d_z(c).unwrap();
    let mut a = ops::multiply_dealiased(u[0], &dx).unwrap();
    a.axpy(1.0, &ops::multiply_dealiased(u[1], &dy).unwrap());
    a.axpy(1.0, &ops::multiply_dealiased(u[2], &dz).unwrap());
    a
}

/// Max-norm errors of the Navier-Stokes integrator for each step in [`STEPS`].
pub fn nse_errors(eps: f64, alpha: f64) -> Vec<f64> {
    let g = make_grid(16, 16, 16, 2.0 * PI, 2.0 * PI).unwrap();
    let nu = f64::powf(eps, alpha - 2.0);
    let ux = Field::from_fn(&g, Parity::Even, |_, y, z| y.sin() * (PI * z).cos());
    let uy = Field::from_fn(&g, Parity::Even, |x, _, z| {
        x.cos() * (PI * z).cos() + 0.5 * x.sin()
    });
    let uw = Field::zeros(&g, Parity::Odd);
    let comps = vec![ux.clone(), uy.clone(), uw.clone()];
    let u = [&ux, &uy, &uw];
    let adv: Vec<Field> = comps.iter().map(|c| advect(&u, c)).collect();
    let lin: Vec<Field> = comps
        .iter()
        .map(|c| {
            let mut l = ops::laplacian_h(c).unwrap();
            l.axpy(nu, &ops::d_z(&ops::d_z(c).unwrap()).unwrap());
            l
        })
        .collect();
    let forcing: Forcing = Arc::new(move |t| {
        let f = forcing_terms(&comps, &adv, &lin, t);
        (
            VectorField::new(f[0].clone(), f[1].clone()).unwrap(),
            f[2].clone(),
        )
    });
    let s0 = NseState::new(VectorField::new(ux, uy).unwrap(), uw, 0.0).unwrap();
    STEPS
        .iter()
        .map(|&dt| {
            let p = NseParams::new(eps, alpha, dt, T_END, 1.0).unwrap();
            let hooks = NseHooks {
                suppress_advection: false,
                forcing: Some(Arc::clone(&forcing)),
            };
            let run = run_nse(&s0, &p, 1, hooks).unwrap();
            assert!(run.failure.is_none(), "{:?}", run.failure);
            let mut exact = s0.v.clone();
            exact.scale(amp(T_END));
            run.frames.last().unwrap().v.sub(&exact).max_abs()
        })
        .collect()
}

/// Constrained velocity: barotropic streamfunction part plus a baroclinic part.
pub fn pe_velocity(x: f64, y: f64, z: f64) -> [f64; 2] {
    // psi = 0.3 sin x sin 2y
    let bx = 0.6 * x.sin() * (2.0 * y).cos();
    let by = -0.3 * x.cos() * (2.0 * y).sin();
    [
        bx + 0.4 * (x + y).cos() * (PI * z).cos(),
        by + 0.3 * (2.0 * x).sin() * (2.0 * PI * z).cos(),
    ]
}

/// Max-norm errors of the primitive-equation integrator for each step in [`STEPS`].
pub fn pe_errors() -> Vec<f64> {
    let g = make_grid(16, 16, 16, 2.0 * PI, 2.0 * PI).unwrap();
    let v = VectorField::new(
        Field::from_fn(&g, Parity::Even, |x, y, z| pe_velocity(x, y, z)[0]),
        Field::from_fn(&g, Parity::Even, |x, y, z| pe_velocity(x, y, z)[1]),
    )
    .unwrap();
    let w = diagnose_w(&v).unwrap();
    let comps = vec![v.x.clone(), v.y.clone()];
    let u = [&v.x, &v.y, &w];
    let adv: Vec<Field> = comps.iter().map(|c| advect(&u, c)).collect();
    let lin: Vec<Field> = comps.iter().map(|c| ops::laplacian_h(c).unwrap()).collect();
    let forcing: PeForcing = Arc::new(move |t| {
        let f = forcing_terms(&comps, &adv, &lin, t);
        VectorField::new(f[0].clone(), f[1].clone()).unwrap()
    });
    STEPS
        .iter()
        .map(|&dt| {
            let hooks = PeHooks {
                forcing: Some(Arc::clone(&forcing)),
            };
            let params = PeParams {
                dt,
                t_end: T_END,
                cfl_safety: 1.0,
            };
            let run = run_pe(
                &PeState::new(v.clone(), 0.0).unwrap(),
                &params,
                1,
                &[],
                hooks,
            )
            .unwrap();
            assert!(run.failure.is_none(), "{:?}", run.failure);
            let mut exact = v.clone();
            exact.scale(amp(T_END));
            run.frames.last().unwrap().v.sub(&exact).max_abs()
        })
        .collect()
}

/// Observed orders between successive halvings.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|p| (p[0] / p[1]).log2()).collect()
}
