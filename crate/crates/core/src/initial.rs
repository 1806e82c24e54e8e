//! Admissible, well-prepared initial data shared by both solvers.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Parity, VectorField};
use crate::grid::{mirror_slot, mode_index, Grid};
use crate::nse::STATE_TOL;
use crate::ops;
use crate::pe::{barotropic_residual, diagnose_w, remove_barotropic_gradient};

/// Data regularity class: H1-class data gets L2-type error
/// functionals only, H2-class data also gets the H1 versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    H1,
    H2,
}

impl Smoothness {
    /// Spectral decay exponent of random data before rescaling.
    pub fn decay_exponent(self) -> f64 {
        match self {
            Smoothness::H1 => 3.0,
            Smoothness::H2 => 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", content = "value", rename_all = "lowercase")]
pub enum NormTarget {
    H1(f64),
    H2(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analytic {
    /// `(cos x sin y, -sin x cos y)`, z-independent (needs `L1 = L2 = 2 pi`
    /// for the classical decay rate; any box works as data).
    TaylorGreen,
    /// `(cos(2 pi x / L1) cos(pi z), 0)`.
    BaroclinicWave,
    /// Taylor-Green cell modulated by `cos(pi z)`: `cos(pi z) (cos x sin y, -sin x cos y)`.
    ModulatedTaylorGreen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataKind {
    Analytic {
        name: Analytic,
        amplitude: f64,
    },
    RandomBandLimited {
        seed: u64,
        max_mode: usize,
        amplitude: f64,
        target: Option<NormTarget>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub kind: DataKind,
    pub smoothness: Smoothness,
}

impl DataSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let amplitude = match &self.kind {
            DataKind::Analytic { amplitude, .. } => *amplitude,
            DataKind::RandomBandLimited {
                max_mode,
                amplitude,
                target,
                ..
            } => {
                let limit = grid.nx.min(grid.ny).min(grid.nz) / 3;
                if *max_mode > limit {
                    return Err(Error::InvalidParameter(format!(
                        "max_mode = {max_mode} exceeds the dealiased limit {limit}"
                    )));
                }
                if let Some(NormTarget::H1(x) | NormTarget::H2(x)) = target {
                    if !(*x > 0.0) {
                        return Err(Error::InvalidParameter(format!("norm target {x}")));
                    }
                }
                *amplitude
            }
        };
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "amplitude = {amplitude} must be positive"
            )));
        }
        Ok(())
    }
}

/// Projects a raw horizontal field onto admissible data: Even in `z`, with the
/// horizontal-gradient part of its vertical average removed (2D Helmholtz), so
/// that `div_H int v dz = 0`. The baroclinic part is left unchanged.
pub fn project_admissible(raw: &VectorField) -> Result<VectorField> {
    let mut x = ops::parity_project(&raw.x, Parity::Even)?;
    let mut y = ops::parity_project(&raw.y, Parity::Even)?;
    x.dealias();
    y.dealias();
    remove_barotropic_gradient(&mut x, &mut y)?;
    Ok(VectorField { x, y })
}

pub fn is_admissible(v: &VectorField) -> bool {
    barotropic_residual(v) <= STATE_TOL && v.parity_error() <= STATE_TOL
}

/// Returns `(v0, w0)` with `w0 = -int_{-1}^z div_H v0`.
pub fn make_well_prepared(v0: &VectorField) -> Result<(VectorField, Field)> {
    let b = barotropic_residual(v0);
    let p = v0.parity_error();
    if b > STATE_TOL || p > STATE_TOL {
        return Err(Error::Invariant(format!(
            "inadmissible data: barotropic divergence {b:e}, parity error {p:e}"
        )));
    }
    let w0 = diagnose_w(v0)?;
    Ok((v0.clone(), w0))
}

type Profile = Box<dyn Fn(f64, f64, f64) -> f64>;

fn analytic(grid: &Arc<Grid>, name: Analytic, amplitude: f64) -> VectorField {
    use std::f64::consts::PI;
    let (kx, ky) = (2.0 * PI / grid.l1, 2.0 * PI / grid.l2);
    let (fx, fy): (Profile, Profile) = match name {
        Analytic::TaylorGreen => (
            Box::new(move |x, y, _| (kx * x).cos() * (ky * y).sin()),
            Box::new(move |x, y, _| -(kx * x).sin() * (ky * y).cos()),
        ),
        Analytic::BaroclinicWave => (
            Box::new(move |x, _, z| (kx * x).cos() * (PI * z).cos()),
            Box::new(|_, _, _| 0.0),
        ),
        Analytic::ModulatedTaylorGreen => (
            Box::new(move |x, y, z| (PI * z).cos() * (kx * x).cos() * (ky * y).sin()),
            Box::new(move |x, y, z| -(PI * z).cos() * (kx * x).sin() * (ky * y).cos()),
        ),
    };
    VectorField {
        x: Field::from_fn(grid, Parity::Even, |x, y, z| amplitude * fx(x, y, z)),
        y: Field::from_fn(grid, Parity::Even, |x, y, z| amplitude * fy(x, y, z)),
    }
}

/// Random complex field with `|c_k| ~ (1 + |k|)^-decay`, real in physical
/// space, restricted to `|mode index| <= max_mode` in every direction.
pub(crate) fn random_scalar(
    grid: &Arc<Grid>,
    rng: &mut ChaCha8Rng,
    max_mode: usize,
    decay: f64,
    parity: Parity,
) -> Field {
    let n = grid.len();
    let mut raw = vec![Complex64::default(); n];
    for (idx, c) in raw.iter_mut().enumerate() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let (i, j, k) = grid.slots(idx);
        let inside = [(i, grid.nx), (j, grid.ny), (k, grid.nz)]
            .iter()
            .all(|&(s, len)| mode_index(s, len).unsigned_abs() as usize <= max_mode);
        if inside && !grid.is_nyquist(i, j, k) {
            let kmag = (grid.kh2(idx) + grid.kz[k] * grid.kz[k]).sqrt();
            *c = Complex64::new(re, im) * (1.0 + kmag).powf(-decay);
        }
    }
    // Hermitian symmetrisation makes the physical field real.
    let mut data = vec![Complex64::default(); n];
    for (idx, c) in data.iter_mut().enumerate() {
        let (i, j, k) = grid.slots(idx);
        let mirror = grid.index(
            mirror_slot(i, grid.nx),
            mirror_slot(j, grid.ny),
            mirror_slot(k, grid.nz),
        );
        *c = (raw[idx] + raw[mirror].conj()) * 0.5;
    }
    Field::from_raw(grid, data, parity, crate::field::Space::Spectral).expect("sized from grid")
}

/// Builds admissible horizontal initial velocity from a data spec.
pub fn make_initial(spec: &DataSpec, grid: &Arc<Grid>) -> Result<VectorField> {
    spec.validate(grid)?;
    match &spec.kind {
        DataKind::Analytic { name, amplitude } => {
            project_admissible(&analytic(grid, *name, *amplitude))
        }
        DataKind::RandomBandLimited { .. } => make_random(spec, grid),
    }
}

/// Seeded random band-limited admissible data, rescaled to the norm target.
pub fn make_random(spec: &DataSpec, grid: &Arc<Grid>) -> Result<VectorField> {
    spec.validate(grid)?;
    let DataKind::RandomBandLimited {
        seed,
        max_mode,
        amplitude,
        target,
    } = &spec.kind
    else {
        return Err(Error::InvalidParameter("not a random data spec".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
    let decay = spec.smoothness.decay_exponent();
    let raw = VectorField {
        x: random_scalar(grid, &mut rng, *max_mode, decay, Parity::Even),
        y: random_scalar(grid, &mut rng, *max_mode, decay, Parity::Even),
    };
    let mut v = project_admissible(&raw)?;
    let norm = match target {
        Some(NormTarget::H1(_)) => v.h1_norm_sq().sqrt(),
        Some(NormTarget::H2(_)) => v.h2_norm_sq().sqrt(),
        None => 1.0,
    };
    if !(norm > 0.0) || v.max_abs() == 0.0 {
        return Err(Error::InvalidParameter(
            "random data vanished after projection; norm target unreachable".into(),
        ));
    }
    let scale = match target {
        Some(NormTarget::H1(x) | NormTarget::H2(x)) => x / norm,
        None => *amplitude,
    };
    v.scale(scale);
    Ok(v)
}
