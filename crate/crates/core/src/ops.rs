//! Spectral differential operators, dealiased products, parity projection
//! and the two pressure solves.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, Parity, Space, SurfaceField};
use crate::grid::{mirror_slot, Grid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance on the mean mode accepted by the Poisson solves.
pub const GAUGE_TOL: f64 = 1e-12;

fn spectral(f: &Field) -> Result<()> {
    f.require(Space::Spectral)
}

/// `(d_x f, d_y f)`; parity is preserved.
pub fn grad_h(f: &Field) -> Result<(Field, Field)> {
    spectral(f)?;
    let g = Arc::clone(f.grid());
    let dx = f.map_modes(|idx, c| {
        let (i, _, _) = g.slots(idx);
        c * I * g.kx[i]
    });
    let dy = f.map_modes(|idx, c| {
        let (_, j, _) = g.slots(idx);
        c * I * g.ky[j]
    });
    Ok((dx, dy))
}

pub fn d_x(f: &Field) -> Result<Field> {
    spectral(f)?;
    let g = Arc::clone(f.grid());
    Ok(f.map_modes(|idx, c| c * I * g.kx[g.slots(idx).0]))
}

pub fn d_y(f: &Field) -> Result<Field> {
    spectral(f)?;
    let g = Arc::clone(f.grid());
    Ok(f.map_modes(|idx, c| c * I * g.ky[g.slots(idx).1]))
}

/// `d_z f`; flips parity.
pub fn d_z(f: &Field) -> Result<Field> {
    spectral(f)?;
    let g = Arc::clone(f.grid());
    let out = f.map_modes(|idx, c| c * I * g.kz[g.slots(idx).2]);
    Ok(out.with_parity(f.parity().flip()))
}

pub fn laplacian_h(f: &Field) -> Result<Field> {
    spectral(f)?;
    let g = Arc::clone(f.grid());
    Ok(f.map_modes(|idx, c| c * -g.kh2(idx)))
}

/// `(Delta_H + eps^-2 d_z^2) f`.
pub fn aniso_laplacian(f: &Field, eps: f64) -> Result<Field> {
    spectral(f)?;
    let g = Arc::clone(f.grid());
    let inv_eps2 = 1.0 / (eps * eps);
    Ok(f.map_modes(|idx, c| {
        let kz = g.kz[g.slots(idx).2];
        c * -(g.kh2(idx) + kz * kz * inv_eps2)
    }))
}

/// Physical values of a dealiased copy of `f`.
pub(crate) fn dealiased_physical(f: &Field) -> Field {
    let mut p = f.clone();
    p.dealias();
    p.inverse_in_place();
    p
}

/// Pointwise product of physical fields, returned as a dealiased spectral field.
pub(crate) fn product_to_spectral(terms: &[(&Field, &Field)], parity: Parity) -> Field {
    let grid = terms[0].0.grid();
    let mut data = vec![Complex64::default(); grid.len()];
    for (a, b) in terms {
        for ((out, x), y) in data.iter_mut().zip(a.data()).zip(b.data()) {
            out.re += x.re * y.re;
        }
    }
    let mut out = Field::from_raw(grid, data, parity, Space::Physical).expect("sized from grid");
    out.forward_in_place();
    out.dealias();
    out
}

/// Spectral coefficients of `f g` with the 2/3 mask applied to both inputs
/// and to the result. Parities combine as `Even.Odd = Odd`, `Odd.Odd = Even`.
pub fn multiply_dealiased(f: &Field, g: &Field) -> Result<Field> {
    spectral(f)?;
    spectral(g)?;
    f.same_grid(g)?;
    let fp = dealiased_physical(f);
    let gp = dealiased_physical(g);
    Ok(product_to_spectral(
        &[(&fp, &gp)],
        f.parity().product(g.parity()),
    ))
}

/// The part of `f` with parity `p`: `(f(z) +- f(-z)) / 2`.
pub fn parity_project(f: &Field, p: Parity) -> Result<Field> {
    spectral(f)?;
    let g = f.grid();
    let nxy = g.nx * g.ny;
    let sign = match p {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let src = f.data();
    let mut data = vec![Complex64::default(); g.len()];
    for k in 0..g.nz {
        let km = mirror_slot(k, g.nz);
        for q in 0..nxy {
            data[k * nxy + q] = (src[k * nxy + q] + src[km * nxy + q] * sign) * 0.5;
        }
    }
    Field::from_raw(g, data, p, Space::Spectral)
}

fn check_gauge(mean: Complex64, scale: f64) -> Result<()> {
    if mean.norm() > GAUGE_TOL * scale.max(1.0) {
        Err(Error::Gauge(mean.norm()))
    } else {
        Ok(())
    }
}

/// Solves `(Delta_H + eps^-2 d_z^2) p = rhs` with `mean(p) = 0`.
pub fn solve_aniso_poisson(rhs: &Field, eps: f64) -> Result<Field> {
    spectral(rhs)?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must be positive"
        )));
    }
    check_gauge(rhs.mean(), rhs.max_abs())?;
    let g = Arc::clone(rhs.grid());
    let inv_eps2 = 1.0 / (eps * eps);
    Ok(rhs.map_modes(|idx, c| {
        if idx == 0 {
            return Complex64::default();
        }
        let kz = g.kz[g.slots(idx).2];
        -c / (g.kh2(idx) + kz * kz * inv_eps2)
    }))
}

/// Solves `Delta_H p = rhs` on `M` with `mean(p) = 0`.
pub fn solve_poisson_2d(rhs: &SurfaceField) -> Result<SurfaceField> {
    rhs.require(Space::Spectral)?;
    check_gauge(rhs.data()[0], rhs.max_abs())?;
    let g = rhs.grid();
    let mut out = rhs.clone();
    for (q, c) in out.data_mut().iter_mut().enumerate() {
        *c = if q == 0 {
            Complex64::default()
        } else {
            -*c / g.kh2(q)
        };
    }
    Ok(out)
}

/// `d_x a + d_y b` evaluated spectrally.
pub fn div_h(a: &Field, b: &Field) -> Result<Field> {
    spectral(a)?;
    spectral(b)?;
    a.same_grid(b)?;
    let g: &Grid = a.grid();
    let mut out = Field::zeros(a.grid(), a.parity());
    for (idx, o) in out.data_mut().iter_mut().enumerate() {
        let (i, j, _) = g.slots(idx);
        *o = I * (a.data()[idx] * g.kx[i] + b.data()[idx] * g.ky[j]);
    }
    Ok(out)
}
