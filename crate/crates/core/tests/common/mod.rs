#![allow(dead_code)]

pub mod manufactured;

/// Max trilinear ratio for 100 samples, N = 16, seed 1, max_mode 5.
pub const TRILINEAR_BASELINE: f64 = 0.035503069009;

use std::f64::consts::PI;
use std::sync::Arc;

use hydrolimit::{Field, Grid, Parity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One real trigonometric mode `A cos(h) + B sin(h)` times `cos(pi c z)` (Even)
/// or `sin(pi c z)` (Odd), with `h = 2 pi (a x / L1 + b y / L2)`.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub ca: f64,
    pub cb: f64,
}

/// Random trigonometric polynomial with every index magnitude at most `m`,
/// evaluated directly (independent of the crate's spectral machinery).
#[derive(Debug, Clone)]
pub struct TrigPoly {
    pub modes: Vec<Mode>,
    pub parity: Parity,
    pub l1: f64,
    pub l2: f64,
}

impl TrigPoly {
    pub fn random(seed: u64, m: i64, parity: Parity, l1: f64, l2: f64) -> TrigPoly {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for a in 0..=m {
            for b in -m..=m {
                for c in 0..=m {
                    if parity == Parity::Odd && c == 0 {
                        continue;
                    }
                    if a == 0 && b < 0 {
                        continue;
                    }
                    modes.push(Mode {
                        a,
                        b,
                        c,
                        ca: rng.random_range(-1.0..1.0),
                        cb: if a == 0 && b == 0 {
                            0.0
                        } else {
                            rng.random_range(-1.0..1.0)
                        },
                    });
                }
            }
        }
        TrigPoly {
            modes,
            parity,
            l1,
            l2,
        }
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let h = 2.0 * PI * (m.a as f64 * x / self.l1 + m.b as f64 * y / self.l2);
                let v = match self.parity {
                    Parity::Even => (PI * m.c as f64 * z).cos(),
                    Parity::Odd => (PI * m.c as f64 * z).sin(),
                };
                (m.ca * h.cos() + m.cb * h.sin()) * v
            })
            .sum()
    }

    pub fn field(&self, grid: &Arc<Grid>) -> Field {
        Field::from_fn(grid, self.parity, |x, y, z| self.eval(x, y, z))
    }
}

/// Physical samples of `f(x, y, z)` on the grid, x fastest.
pub fn samples(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y, z) = grid.point(i, j, k);
                out[grid.index(i, j, k)] = f(x, y, z);
            }
        }
    }
    out
}

/// Real physical values of a spectral field.
pub fn physical(f: &Field) -> Vec<f64> {
    f.to_physical()
        .unwrap()
        .data()
        .iter()
        .map(|c| c.re)
        .collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Second-order periodic finite differences on the grid points.
pub struct Fd<'a> {
    pub g: &'a Grid,
}

impl Fd<'_> {
    pub fn at(&self, f: &[f64], i: isize, j: isize, k: isize) -> f64 {
        let w = |a: isize, n: usize| a.rem_euclid(n as isize) as usize;
        f[self
            .g
            .index(w(i, self.g.nx), w(j, self.g.ny), w(k, self.g.nz))]
    }

    pub fn map(&self, op: impl Fn(isize, isize, isize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.g.len()];
        for k in 0..self.g.nz {
            for j in 0..self.g.ny {
                for i in 0..self.g.nx {
                    out[self.g.index(i, j, k)] = op(i as isize, j as isize, k as isize);
                }
            }
        }
        out
    }

    pub fn d(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let h = [self.g.dx(), self.g.dy(), self.g.dz()][axis];
        self.map(|i, j, k| {
            let e = [
                (axis == 0) as isize,
                (axis == 1) as isize,
                (axis == 2) as isize,
            ];
            (self.at(f, i + e[0], j + e[1], k + e[2]) - self.at(f, i - e[0], j - e[1], k - e[2]))
                / (2.0 * h)
        })
    }

    pub fn d2(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let h = [self.g.dx(), self.g.dy(), self.g.dz()][axis];
        self.map(|i, j, k| {
            let e = [
                (axis == 0) as isize,
                (axis == 1) as isize,
                (axis == 2) as isize,
            ];
            (self.at(f, i + e[0], j + e[1], k + e[2]) - 2.0 * self.at(f, i, j, k)
                + self.at(f, i - e[0], j - e[1], k - e[2]))
                / (h * h)
        })
    }

    /// `-(d2x + d2y + eps^-2 d2z)`, symmetric positive semi-definite.
    pub fn neg_lap(&self, f: &[f64], eps: f64) -> Vec<f64> {
        let (a, b, c) = (self.d2(f, 0), self.d2(f, 1), self.d2(f, 2));
        (0..f.len())
            .map(|n| -(a[n] + b[n] + c[n] / (eps * eps)))
            .collect()
    }

    /// Conjugate gradients on the mean-free subspace.
    pub fn solve(&self, rhs: &[f64], eps: f64) -> Vec<f64> {
        let n = rhs.len();
        let mean = rhs.iter().sum::<f64>() / n as f64;
        let b: Vec<f64> = rhs.iter().map(|r| r - mean).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let stop = 1e-26 * dot(&b, &b);
        for _ in 0..5000 {
            if rr <= stop {
                break;
            }
            let ap = self.neg_lap(&p, eps);
            let a = rr / dot(&p, &ap);
            for m in 0..n {
                x[m] += a * p[m];
                r[m] -= a * ap[m];
            }
            let next = dot(&r, &r);
            for m in 0..n {
                p[m] = r[m] + (next / rr) * p[m];
            }
            rr = next;
        }
        x
    }
}
