//! Periodic spectral grid on `M x (-1, 1)` with `M = (0, L1) x (0, L2)`.
//!
//! The vertical direction is treated as periodic with period 2. Mode
//! indices follow the usual FFT ordering `0, 1, .., n/2 - 1, -n/2, .., -1`,
//! so `kx[i] = 2 pi mode(i) / L1` and `kz[k] = pi mode(k)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Signed mode index for slot `i` of an `n`-point FFT.
pub fn mode_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Slot of the mode `-m` given the slot of `m`.
#[inline]
pub fn mirror_slot(i: usize, n: usize) -> usize {
    (n - i) % n
}

struct Axis {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Axis {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        Axis {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn plan(&self, inverse: bool) -> &Arc<dyn Fft<f64>> {
        if inverse {
            &self.inv
        } else {
            &self.fwd
        }
    }
}

pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub l1: f64,
    pub l2: f64,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub kz: Vec<f64>,
    keep_x: Vec<bool>,
    keep_y: Vec<bool>,
    keep_z: Vec<bool>,
    axes: [Axis; 3],
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("nz", &self.nz)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.nz == other.nz
            && self.l1 == other.l1
            && self.l2 == other.l2
    }
}

/// Builds a grid with `nx x ny x nz` modes on a box of horizontal size `l1 x l2`.
pub fn make_grid(nx: usize, ny: usize, nz: usize, l1: f64, l2: f64) -> Result<Arc<Grid>> {
    for (name, n) in [("nx", nx), ("ny", ny), ("nz", nz)] {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "{name} = {n} must be even and at least 4"
            )));
        }
    }
    for (name, l) in [("l1", l1), ("l2", l2)] {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
        }
    }
    let wavenumbers = |n: usize, scale: f64| -> Vec<f64> {
        (0..n).map(|i| scale * mode_index(i, n) as f64).collect()
    };
    // 2/3 rule: keep |mode| <= n/3, which also drops the Nyquist slot.
    let keep = |n: usize| -> Vec<bool> {
        (0..n)
            .map(|i| 3 * mode_index(i, n).unsigned_abs() as usize <= n)
            .collect()
    };
    let mut planner = FftPlanner::new();
    let axes = [
        Axis::new(&mut planner, nx),
        Axis::new(&mut planner, ny),
        Axis::new(&mut planner, nz),
    ];
    Ok(Arc::new(Grid {
        nx,
        ny,
        nz,
        l1,
        l2,
        kx: wavenumbers(nx, 2.0 * PI / l1),
        ky: wavenumbers(ny, 2.0 * PI / l2),
        kz: wavenumbers(nz, PI),
        keep_x: keep(nx),
        keep_y: keep(ny),
        keep_z: keep(nz),
        axes,
    }))
}

impl Grid {
    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    /// Inverse of [`Grid::index`].
    #[inline]
    pub fn slots(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        (i, j, idx / (self.nx * self.ny))
    }

    /// Volume of `Omega = M x (-1, 1)`.
    pub fn volume(&self) -> f64 {
        2.0 * self.l1 * self.l2
    }

    pub fn area(&self) -> f64 {
        self.l1 * self.l2
    }

    pub fn dx(&self) -> f64 {
        self.l1 / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.l2 / self.ny as f64
    }

    pub fn dz(&self) -> f64 {
        2.0 / self.nz as f64
    }

    /// Physical coordinates of grid point `(i, j, k)`.
    pub fn point(&self, i: usize, j: usize, k: usize) -> (f64, f64, f64) {
        (
            i as f64 * self.dx(),
            j as f64 * self.dy(),
            -1.0 + k as f64 * self.dz(),
        )
    }

    /// Whether mode `(i, j, k)` survives the 2/3 dealiasing rule.
    #[inline]
    pub fn dealias_mask(&self, i: usize, j: usize, k: usize) -> bool {
        self.keep_x[i] && self.keep_y[j] && self.keep_z[k]
    }

    pub fn is_nyquist(&self, i: usize, j: usize, k: usize) -> bool {
        i == self.nx / 2 || j == self.ny / 2 || k == self.nz / 2
    }

    /// Horizontal wavenumber magnitude squared for the flat index.
    #[inline]
    pub fn kh2(&self, idx: usize) -> f64 {
        let (i, j, _) = self.slots(idx);
        self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]
    }

    /// Largest absolute mode index per direction retained by dealiasing.
    pub fn max_retained_mode(&self) -> (usize, usize, usize) {
        (self.nx / 3, self.ny / 3, self.nz / 3)
    }

    /// In-place unnormalised 3D FFT over x-fastest storage.
    pub(crate) fn fft3(&self, data: &mut [Complex64], inverse: bool) {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        debug_assert_eq!(data.len(), self.len());

        let plan = self.axes[0].plan(inverse);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);

        // y: transpose each z-plane so that y-columns are contiguous
        let plan = self.axes[1].plan(inverse);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); nx * ny];
        for k in 0..nz {
            let plane = &mut data[k * nx * ny..(k + 1) * nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    buf[i * ny + j] = plane[j * nx + i];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..ny {
                for i in 0..nx {
                    plane[j * nx + i] = buf[i * ny + j];
                }
            }
        }

        let plan = self.axes[2].plan(inverse);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let nxy = nx * ny;
        let mut buf = vec![Complex64::default(); nxy * nz];
        for k in 0..nz {
            for p in 0..nxy {
                buf[p * nz + k] = data[k * nxy + p];
            }
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for k in 0..nz {
            for p in 0..nxy {
                data[k * nxy + p] = buf[p * nz + k];
            }
        }
    }

    /// In-place unnormalised 2D FFT over an `nx x ny` plane.
    pub(crate) fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(data.len(), nx * ny);
        let plan = self.axes[0].plan(inverse);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        let plan = self.axes[1].plan(inverse);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                buf[i * ny + j] = data[j * nx + i];
            }
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for j in 0..ny {
            for i in 0..nx {
                data[j * nx + i] = buf[i * ny + j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_follow_fft_ordering() {
        let g = make_grid(8, 8, 8, 2.0 * PI, 2.0 * PI).unwrap();
        let expect = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.kx.iter().zip(expect) {
            assert!((k - e).abs() < 1e-14);
        }
        for (k, e) in g.kz.iter().zip(expect) {
            assert!((k - PI * e).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_box_scales_wavenumbers() {
        let g = make_grid(8, 8, 8, 1.0, 1.0).unwrap();
        assert!((g.kx[1] - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn two_thirds_mask() {
        let g = make_grid(6, 8, 8, 2.0 * PI, 2.0 * PI).unwrap();
        // n = 3 is both the Nyquist slot and |n| > 6/3
        let kept: Vec<i64> = (0..6)
            .filter(|&i| g.dealias_mask(i, 0, 0))
            .map(|i| mode_index(i, 6))
            .collect();
        assert_eq!(kept, vec![0, 1, 2, -2, -1]);

        let g = make_grid(32, 32, 16, 2.0 * PI, 2.0 * PI).unwrap();
        assert!(g.dealias_mask(10, 0, 5));
        assert!(!g.dealias_mask(11, 0, 0));
        assert!(!g.dealias_mask(0, 0, 6));
        assert!(!g.dealias_mask(0, 16, 0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_grid(7, 8, 8, 1.0, 1.0).is_err());
        assert!(make_grid(2, 8, 8, 1.0, 1.0).is_err());
        assert!(make_grid(8, 8, 8, 0.0, 1.0).is_err());
        assert!(make_grid(8, 8, 8, 1.0, -1.0).is_err());
    }
}
