//! Scalar and vector fields on a [`Grid`].
//!
//! Spectral coefficients are normalised so that
//! `f(x) = sum_k c_k exp(i k . x)`; physical values are stored as complex
//! numbers with zero imaginary part.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{mirror_slot, Grid};

/// Symmetry class under `z -> -z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Spectral,
    Physical,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::Spectral => "spectral",
            Space::Physical => "physical",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToSpectral,
    ToPhysical,
}

#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    data: Vec<Complex64>,
    parity: Parity,
    space: Space,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>, parity: Parity) -> Field {
        Field {
            grid: Arc::clone(grid),
            data: vec![Complex64::default(); grid.len()],
            parity,
            space: Space::Spectral,
        }
    }

    /// Wraps raw storage. `data` must have one entry per grid point.
    pub fn from_raw(
        grid: &Arc<Grid>,
        data: Vec<Complex64>,
        parity: Parity,
        space: Space,
    ) -> Result<Field> {
        if data.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field storage has {} entries, grid has {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            data,
            parity,
            space,
        })
    }

    /// Physical-space field from real samples in x-fastest order.
    pub fn from_real(grid: &Arc<Grid>, values: &[f64], parity: Parity) -> Result<Field> {
        let data = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Field::from_raw(grid, data, parity, Space::Physical)
    }

    /// Samples `f(x, y, z)` on the grid and returns the spectral field.
    pub fn from_fn(grid: &Arc<Grid>, parity: Parity, f: impl Fn(f64, f64, f64) -> f64) -> Field {
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let (x, y, z) = grid.point(i, j, k);
                    data.push(Complex64::new(f(x, y, z), 0.0));
                }
            }
        }
        let mut field = Field {
            grid: Arc::clone(grid),
            data,
            parity,
            space: Space::Physical,
        };
        field.forward_in_place();
        field
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn with_parity(mut self, parity: Parity) -> Field {
        self.parity = parity;
        self
    }

    /// Real parts of the physical values. Requires physical space.
    pub fn real_values(&self) -> Result<Vec<f64>> {
        self.require(Space::Physical)?;
        Ok(self.data.iter().map(|c| c.re).collect())
    }

    pub fn require(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::SpaceMismatch {
                expected: space.name(),
                found: self.space.name(),
            });
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Moves the field to the requested space. The input must be in the other one.
    pub fn transform(&self, direction: Direction) -> Result<Field> {
        let mut out = self.clone();
        match direction {
            Direction::ToSpectral => {
                self.require(Space::Physical)?;
                out.forward_in_place();
            }
            Direction::ToPhysical => {
                self.require(Space::Spectral)?;
                out.inverse_in_place();
            }
        }
        Ok(out)
    }

    pub fn to_spectral(&self) -> Result<Field> {
        self.transform(Direction::ToSpectral)
    }

    pub fn to_physical(&self) -> Result<Field> {
        self.transform(Direction::ToPhysical)
    }

    pub(crate) fn forward_in_place(&mut self) {
        debug_assert_eq!(self.space, Space::Physical);
        self.grid.clone().fft3(&mut self.data, false);
        let norm = 1.0 / self.grid.len() as f64;
        for c in &mut self.data {
            *c *= norm;
        }
        self.zero_nyquist();
        self.space = Space::Spectral;
    }

    pub(crate) fn inverse_in_place(&mut self) {
        debug_assert_eq!(self.space, Space::Spectral);
        self.grid.clone().fft3(&mut self.data, true);
        for c in &mut self.data {
            c.im = 0.0;
        }
        self.space = Space::Physical;
    }

    fn zero_nyquist(&mut self) {
        let g = Arc::clone(&self.grid);
        for (idx, c) in self.data.iter_mut().enumerate() {
            let (i, j, k) = g.slots(idx);
            if g.is_nyquist(i, j, k) {
                *c = Complex64::default();
            }
        }
    }

    /// Zeroes every mode removed by the 2/3 rule. Spectral only.
    pub fn dealias(&mut self) {
        debug_assert_eq!(self.space, Space::Spectral);
        let g = Arc::clone(&self.grid);
        for (idx, c) in self.data.iter_mut().enumerate() {
            let (i, j, k) = g.slots(idx);
            if !g.dealias_mask(i, j, k) {
                *c = Complex64::default();
            }
        }
    }

    pub fn is_dealiased(&self) -> bool {
        self.data.iter().enumerate().all(|(idx, c)| {
            let (i, j, k) = self.grid.slots(idx);
            self.grid.dealias_mask(i, j, k) || c.norm_sqr() == 0.0
        })
    }

    /// Applies `f(idx, c)` to every coefficient.
    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Field {
        let mut out = self.clone();
        for (idx, c) in out.data.iter_mut().enumerate() {
            *c = f(idx, *c);
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.data {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Field) {
        debug_assert_eq!(self.data.len(), x.data.len());
        debug_assert_eq!(self.space, x.space);
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += v * a;
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Weighted Parseval sum `|Omega| sum_k w(k) |c_k|^2`. Spectral only.
    pub fn weighted_norm_sq(&self, weight: impl Fn(usize) -> f64) -> f64 {
        debug_assert_eq!(self.space, Space::Spectral);
        let sum: f64 = self
            .data
            .iter()
            .enumerate()
            .map(|(idx, c)| weight(idx) * c.norm_sqr())
            .sum();
        sum * self.grid.volume()
    }

    /// `||f||_2^2` over `Omega` by Parseval. Spectral only.
    pub fn l2_norm_sq(&self) -> f64 {
        self.weighted_norm_sq(|_| 1.0)
    }

    /// `||grad_H f||_2^2`.
    pub fn grad_h_norm_sq(&self) -> f64 {
        let g = Arc::clone(&self.grid);
        self.weighted_norm_sq(|idx| g.kh2(idx))
    }

    /// `||d_z f||_2^2`.
    pub fn dz_norm_sq(&self) -> f64 {
        let g = Arc::clone(&self.grid);
        self.weighted_norm_sq(|idx| {
            let kz = g.kz[g.slots(idx).2];
            kz * kz
        })
    }

    /// `||f||_{H^1}^2 = ||f||_2^2 + ||grad f||_2^2`.
    pub fn h1_norm_sq(&self) -> f64 {
        let g = Arc::clone(&self.grid);
        self.weighted_norm_sq(|idx| {
            let kz = g.kz[g.slots(idx).2];
            1.0 + g.kh2(idx) + kz * kz
        })
    }

    /// Spectral max-norm of the part of `self` with the opposite of parity `p`.
    pub fn parity_error(&self, p: Parity) -> f64 {
        debug_assert_eq!(self.space, Space::Spectral);
        let g = &self.grid;
        let nxy = g.nx * g.ny;
        let mut worst: f64 = 0.0;
        for k in 0..g.nz {
            let km = mirror_slot(k, g.nz);
            for p_idx in 0..nxy {
                let a = self.data[k * nxy + p_idx];
                let b = self.data[km * nxy + p_idx];
                // violating part: (f - s f(-z)) / 2
                worst = worst.max(((a - b * p.sign()) * 0.5).norm());
            }
        }
        worst
    }

    /// Vertical average as a surface field (the `l = 0` plane). Spectral only.
    pub fn vertical_mean(&self) -> SurfaceField {
        debug_assert_eq!(self.space, Space::Spectral);
        let nxy = self.grid.nx * self.grid.ny;
        SurfaceField {
            grid: Arc::clone(&self.grid),
            data: self.data[..nxy].to_vec(),
            space: Space::Spectral,
        }
    }

    pub fn mean(&self) -> Complex64 {
        debug_assert_eq!(self.space, Space::Spectral);
        self.data[0]
    }
}

/// Horizontal velocity `(v_x, v_y)`, both Even in `z`.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: Field,
    pub y: Field,
}

impl VectorField {
    pub fn new(x: Field, y: Field) -> Result<VectorField> {
        x.same_grid(&y)?;
        if x.space() != y.space() {
            return Err(Error::SpaceMismatch {
                expected: x.space().name(),
                found: y.space().name(),
            });
        }
        Ok(VectorField { x, y })
    }

    pub fn zeros(grid: &Arc<Grid>) -> VectorField {
        VectorField {
            x: Field::zeros(grid, Parity::Even),
            y: Field::zeros(grid, Parity::Even),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.x.grid()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.x.l2_norm_sq() + self.y.l2_norm_sq()
    }

    pub fn grad_h_norm_sq(&self) -> f64 {
        self.x.grad_h_norm_sq() + self.y.grad_h_norm_sq()
    }

    pub fn dz_norm_sq(&self) -> f64 {
        self.x.dz_norm_sq() + self.y.dz_norm_sq()
    }

    pub fn h1_norm_sq(&self) -> f64 {
        self.x.h1_norm_sq() + self.y.h1_norm_sq()
    }

    /// `sum_k (1 + |k|^2)^2 |c_k|^2`, the H^2 norm squared in Fourier form.
    pub fn h2_norm_sq(&self) -> f64 {
        let g = Arc::clone(self.grid());
        let w = |idx: usize| {
            let kz = g.kz[g.slots(idx).2];
            let s = 1.0 + g.kh2(idx) + kz * kz;
            s * s
        };
        self.x.weighted_norm_sq(w) + self.y.weighted_norm_sq(w)
    }

    pub fn parity_error(&self) -> f64 {
        self.x
            .parity_error(Parity::Even)
            .max(self.y.parity_error(Parity::Even))
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(&mut self, s: f64) {
        self.x.scale(s);
        self.y.scale(s);
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.sub(&other.x),
            y: self.y.sub(&other.y),
        }
    }

    pub fn to_physical(&self) -> Result<VectorField> {
        Ok(VectorField {
            x: self.x.to_physical()?,
            y: self.y.to_physical()?,
        })
    }

    pub fn to_spectral(&self) -> Result<VectorField> {
        Ok(VectorField {
            x: self.x.to_spectral()?,
            y: self.y.to_spectral()?,
        })
    }
}

/// A field on the horizontal domain `M` (no vertical dependence).
#[derive(Debug, Clone)]
pub struct SurfaceField {
    grid: Arc<Grid>,
    data: Vec<Complex64>,
    space: Space,
}

impl SurfaceField {
    pub fn zeros(grid: &Arc<Grid>) -> SurfaceField {
        SurfaceField {
            grid: Arc::clone(grid),
            data: vec![Complex64::default(); grid.nx * grid.ny],
            space: Space::Spectral,
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> SurfaceField {
        let mut data = Vec::with_capacity(grid.nx * grid.ny);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y, _) = grid.point(i, j, 0);
                data.push(Complex64::new(f(x, y), 0.0));
            }
        }
        grid.fft2(&mut data, false);
        let norm = 1.0 / (grid.nx * grid.ny) as f64;
        for (p, c) in data.iter_mut().enumerate() {
            let (i, j) = (p % grid.nx, p / grid.nx);
            *c = if i == grid.nx / 2 || j == grid.ny / 2 {
                Complex64::default()
            } else {
                *c * norm
            };
        }
        SurfaceField {
            grid: Arc::clone(grid),
            data,
            space: Space::Spectral,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn require(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::SpaceMismatch {
                expected: space.name(),
                found: self.space.name(),
            });
        }
        Ok(())
    }

    pub fn to_physical(&self) -> Result<SurfaceField> {
        self.require(Space::Spectral)?;
        let mut out = self.clone();
        self.grid.fft2(&mut out.data, true);
        for c in &mut out.data {
            c.im = 0.0;
        }
        out.space = Space::Physical;
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &SurfaceField) -> SurfaceField {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    /// Extends to a z-independent 3D field.
    pub fn extend(&self) -> Field {
        debug_assert_eq!(self.space, Space::Spectral);
        let mut f = Field::zeros(&self.grid, Parity::Even);
        f.data_mut()[..self.data.len()].copy_from_slice(&self.data);
        f
    }
}
