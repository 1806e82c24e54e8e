//! Fourth-order integrating-factor Runge-Kutta (Lawson RK4) for systems
//! `du/dt = -rate(k) u + N(u, t)` whose linear part is diagonal in Fourier
//! space and identical for every component.

use crate::error::Result;
use crate::field::Field;

pub(crate) struct IntegratingFactor {
    rate: Vec<f64>,
    h: f64,
    half: Vec<f64>,
    full: Vec<f64>,
}

impl IntegratingFactor {
    pub fn new(rate: Vec<f64>) -> Self {
        IntegratingFactor {
            rate,
            h: f64::NAN,
            half: Vec::new(),
            full: Vec::new(),
        }
    }

    pub fn rate(&self) -> &[f64] {
        &self.rate
    }

    fn prepare(&mut self, h: f64) {
        if self.h == h {
            return;
        }
        self.half = self.rate.iter().map(|r| (-r * 0.5 * h).exp()).collect();
        self.full = self.rate.iter().map(|r| (-r * h).exp()).collect();
        self.h = h;
    }
}

fn decayed(y: &[Field], factor: &[f64]) -> Vec<Field> {
    y.iter()
        .map(|f| f.map_modes(|idx, c| c * factor[idx]))
        .collect()
}

fn axpy_all(y: &mut [Field], a: f64, x: &[Field]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.axpy(a, xi);
    }
}

/// One Lawson RK4 step from `(y, t)` with step `h`; `k1 = N(y, t)` is supplied.
pub(crate) fn lawson_rk4<N>(
    y: &[Field],
    t: f64,
    h: f64,
    factor: &mut IntegratingFactor,
    k1: &[Field],
    mut nonlinear: N,
) -> Result<Vec<Field>>
where
    N: FnMut(&[Field], f64) -> Result<Vec<Field>>,
{
    factor.prepare(h);
    let (half, full) = (&factor.half, &factor.full);

    let mut a = y.to_vec();
    axpy_all(&mut a, 0.5 * h, k1);
    let a = decayed(&a, half);
    let k2 = nonlinear(&a, t + 0.5 * h)?;

    let y_half = decayed(y, half);
    let mut b = y_half;
    axpy_all(&mut b, 0.5 * h, &k2);
    let k3 = nonlinear(&b, t + 0.5 * h)?;

    let mut c = decayed(y, full);
    axpy_all(&mut c, h, &decayed(&k3, half));
    let k4 = nonlinear(&c, t + h)?;

    let mut mid = k2;
    axpy_all(&mut mid, 1.0, &k3);
    let mut out = decayed(y, full);
    axpy_all(&mut out, h / 6.0, &decayed(k1, full));
    axpy_all(&mut out, h / 3.0, &decayed(&mid, half));
    axpy_all(&mut out, h / 6.0, &k4);
    Ok(out)
}

/// Logarithmic mean `(b - a) / ln(b / a)` of two non-negative numbers.
fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let x = b / a - 1.0;
    if x.abs() < 1e-4 {
        // series of x / ln(1 + x)
        a * (1.0 + x / 2.0 - x * x / 12.0 + x * x * x / 24.0)
    } else {
        (b - a) / (b / a).ln()
    }
}

/// Viscous dissipation `2 int rate |c|^2 dt` over one step, summed over modes.
///
/// Each modal energy is interpolated log-linearly between the step ends,
/// which reproduces pure exponential decay exactly and is second-order
/// accurate otherwise. `weights` scales each component (e.g. `eps^2` for `w`).
pub(crate) fn dissipation_increment(
    before: &[Field],
    after: &[Field],
    rate: &[f64],
    weights: &[f64],
    h: f64,
) -> f64 {
    let mut total = 0.0;
    for ((b, a), w) in before.iter().zip(after).zip(weights) {
        let sum: f64 = b
            .data()
            .iter()
            .zip(a.data())
            .zip(rate)
            .map(|((cb, ca), r)| 2.0 * r * log_mean(cb.norm_sqr(), ca.norm_sqr()))
            .sum();
        total += w * sum;
    }
    total * h * before[0].grid().volume()
}
