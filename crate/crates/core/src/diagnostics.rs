//! Error functionals between paired Navier-Stokes / primitive-equation
//! trajectories, the convergence exponent, the energy-inequality residual
//! and the anisotropic trilinear-inequality sampler.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Parity, VectorField};
use crate::grid::Grid;
use crate::initial::random_scalar;
use crate::nse::{EnergyLedger, NseState};
use crate::ops;
use crate::pe::{diagnose_w, PeState};

/// Predicted exponent of the squared error functional, `min(2, alpha - 2)`.
pub fn beta(alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha}: only alpha > 2 is supported"
        )));
    }
    Ok((alpha - 2.0).min(2.0))
}

/// One time sample of a velocity trajectory `(v, w)` in spectral space.
#[derive(Debug, Clone)]
pub struct Frame {
    pub t: f64,
    pub v: VectorField,
    pub w: Field,
}

impl From<&NseState> for Frame {
    fn from(s: &NseState) -> Frame {
        Frame {
            t: s.t,
            v: s.v.clone(),
            w: s.w.clone(),
        }
    }
}

impl From<&PeState> for Frame {
    fn from(s: &PeState) -> Frame {
        Frame {
            t: s.t,
            v: s.v.clone(),
            w: diagnose_w(&s.v).expect("spectral state"),
        }
    }
}

/// Unweighted squared norms of the difference `(V, W)` at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DifferenceNorms {
    pub v: f64,
    pub w: f64,
    pub grad_h_v: f64,
    pub grad_h_w: f64,
    pub dz_v: f64,
    pub dz_w: f64,
}

impl DifferenceNorms {
    /// `weight(idx)` multiplies every Parseval sum (1 for L2, `1 + |k|^2` for H1).
    fn measure(dv: &VectorField, dw: &Field, weight: &dyn Fn(usize) -> f64) -> Self {
        let g = Arc::clone(dw.grid());
        let kz2 = |idx: usize| {
            let kz = g.kz[g.slots(idx).2];
            kz * kz
        };
        let vec_norm =
            |w: &dyn Fn(usize) -> f64| dv.x.weighted_norm_sq(w) + dv.y.weighted_norm_sq(w);
        DifferenceNorms {
            v: vec_norm(weight),
            w: dw.weighted_norm_sq(weight),
            grad_h_v: vec_norm(&|idx| weight(idx) * g.kh2(idx)),
            grad_h_w: dw.weighted_norm_sq(|idx| weight(idx) * g.kh2(idx)),
            dz_v: vec_norm(&|idx| weight(idx) * kz2(idx)),
            dz_w: dw.weighted_norm_sq(|idx| weight(idx) * kz2(idx)),
        }
    }

    /// `||V||^2 + eps^2 ||W||^2`
    pub fn energy(&self, eps: f64) -> f64 {
        self.v + eps * eps * self.w
    }

    /// `||grad_H V||^2 + eps^2 ||grad_H W||^2 + eps^(a-2) ||d_z V||^2 + eps^a ||d_z W||^2`
    pub fn dissipation(&self, eps: f64, alpha: f64) -> f64 {
        self.grad_h_v
            + eps * eps * self.grad_h_w
            + eps.powf(alpha - 2.0) * self.dz_v
            + eps.powf(alpha) * self.dz_w
    }
}

/// Norms of the difference between two aligned trajectories at every frame.
#[derive(Debug, Clone)]
pub struct DifferenceSeries {
    pub times: Vec<f64>,
    pub l2: Vec<DifferenceNorms>,
    pub h1: Option<Vec<DifferenceNorms>>,
}

/// Relative tolerance when matching output times of two trajectories.
const TIME_TOL: f64 = 1e-9;

pub fn difference_series(nse: &[Frame], pe: &[Frame], with_h1: bool) -> Result<DifferenceSeries> {
    if nse.is_empty() || pe.len() < nse.len() {
        return Err(Error::Misaligned(format!(
            "{} Navier-Stokes frames vs {} primitive-equation frames",
            nse.len(),
            pe.len()
        )));
    }
    let mut times = Vec::with_capacity(nse.len());
    let mut l2 = Vec::with_capacity(nse.len());
    let mut h1 = with_h1.then(Vec::new);
    for (a, b) in nse.iter().zip(pe) {
        if (a.t - b.t).abs() > TIME_TOL * a.t.abs().max(1.0) {
            return Err(Error::Misaligned(format!("frame times {} vs {}", a.t, b.t)));
        }
        a.w.same_grid(&b.w)?;
        let dv = a.v.sub(&b.v);
        let dw = a.w.sub(&b.w);
        l2.push(DifferenceNorms::measure(&dv, &dw, &|_| 1.0));
        if let Some(h1) = h1.as_mut() {
            let g = Arc::clone(dw.grid());
            h1.push(DifferenceNorms::measure(&dv, &dw, &|idx| {
                let kz = g.kz[g.slots(idx).2];
                1.0 + g.kh2(idx) + kz * kz
            }));
        }
        times.push(a.t);
    }
    Ok(DifferenceSeries { times, l2, h1 })
}

fn sup_and_integral(times: &[f64], norms: &[DifferenceNorms], eps: f64, alpha: f64) -> (f64, f64) {
    let sup = norms.iter().map(|n| n.energy(eps)).fold(0.0, f64::max);
    let diss: Vec<f64> = norms.iter().map(|n| n.dissipation(eps, alpha)).collect();
    let integral = times
        .windows(2)
        .zip(diss.windows(2))
        .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1]))
        .sum();
    (sup, integral)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sup_l2_sq: f64,
    pub diss_int: f64,
    pub total: f64,
    pub sup_h1_sq: Option<f64>,
    pub diss_int_h1: Option<f64>,
    pub total_h1: Option<f64>,
    /// Last output time covered by both trajectories.
    #[serde(rename = "T")]
    pub t_reached: f64,
    /// Set when the Navier-Stokes run stopped before the requested horizon.
    #[serde(default)]
    pub blowup: Option<String>,
    /// Checksum of the primitive-equation trajectory the report was measured against.
    #[serde(default)]
    pub pe_checksum: Option<String>,
}

impl ErrorReport {
    /// Applies the `eps`/`alpha` weights to precomputed difference norms.
    pub fn from_series(series: &DifferenceSeries, eps: f64, alpha: f64) -> Result<ErrorReport> {
        let beta = beta(alpha)?;
        let (sup_l2_sq, diss_int) = sup_and_integral(&series.times, &series.l2, eps, alpha);
        let h1 = series
            .h1
            .as_ref()
            .map(|h1| sup_and_integral(&series.times, h1, eps, alpha));
        Ok(ErrorReport {
            eps,
            alpha,
            beta,
            sup_l2_sq,
            diss_int,
            total: sup_l2_sq + diss_int,
            sup_h1_sq: h1.map(|h| h.0),
            diss_int_h1: h1.map(|h| h.1),
            total_h1: h1.map(|h| h.0 + h.1),
            t_reached: series.times.last().copied().unwrap_or(0.0),
            blowup: None,
            pe_checksum: None,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.total_h1.is_none_or(f64::is_finite)
    }

    pub const CSV_HEADER: [&'static str; 13] = [
        "eps",
        "alpha",
        "beta",
        "sup_l2_sq",
        "diss_int",
        "total",
        "sup_h1_sq",
        "diss_int_h1",
        "total_h1",
        "T",
        "blowup",
        "pe_checksum",
        "sqrt_total",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.17e}"));
        vec![
            format!("{}", self.eps),
            format!("{}", self.alpha),
            format!("{}", self.beta),
            format!("{:.17e}", self.sup_l2_sq),
            format!("{:.17e}", self.diss_int),
            format!("{:.17e}", self.total),
            opt(self.sup_h1_sq),
            opt(self.diss_int_h1),
            opt(self.total_h1),
            format!("{}", self.t_reached),
            self.blowup.clone().unwrap_or_default(),
            self.pe_checksum.clone().unwrap_or_default(),
            format!("{:.17e}", self.total.sqrt()),
        ]
    }
}

/// Error functionals between aligned trajectories. H1 variants are filled in
/// only when `with_h1` is set (H2-class data).
pub fn error_report(
    nse: &[Frame],
    pe: &[Frame],
    eps: f64,
    alpha: f64,
    with_h1: bool,
) -> Result<ErrorReport> {
    let series = difference_series(nse, pe, with_h1)?;
    ErrorReport::from_series(&series, eps, alpha)
}

/// `max_{t > 0} (E(t) + D(t) - E(0)) / max(E(0), floor)`, signed; positive
/// values mean the discrete energy inequality is violated. Ledgers with no
/// row past `t = 0` give 0.
pub fn energy_inequality_residual(ledger: &EnergyLedger) -> f64 {
    if ledger.rows.len() < 2 {
        return 0.0;
    }
    let e0 = ledger.initial_energy();
    let scale = e0.max(f64::MIN_POSITIVE);
    ledger.rows[1..]
        .iter()
        .map(|r| (r.energy + r.dissipated - e0) / scale)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilinearSample {
    /// `int_M (int |phi| dz)(int |phi psi| dz) dx dy`
    pub lhs: f64,
    /// `||phi|| ||phi||^1/2 (||phi|| + ||grad_H phi||)^1/2 ||psi||^1/2 (||psi|| + ||grad_H psi||)^1/2`
    pub rhs_first: f64,
    /// `||psi|| ||phi||^1/2 (||phi|| + ||grad_H phi||)^1/2 ||phi||^1/2 (||phi|| + ||grad_H phi||)^1/2`
    pub rhs_second: f64,
}

impl TrilinearSample {
    pub fn ratio_first(&self) -> f64 {
        self.lhs / self.rhs_first
    }

    pub fn ratio_second(&self) -> f64 {
        self.lhs / self.rhs_second
    }

    /// Largest of the two ratios: a lower bound on the inequality constant.
    pub fn ratio(&self) -> f64 {
        self.ratio_first().max(self.ratio_second())
    }
}

/// Evaluates both forms of the trilinear inequality with the middle factor
/// set equal to `phi`.
pub fn trilinear_sample(phi: &Field, psi: &Field) -> Result<TrilinearSample> {
    if phi.max_abs() == 0.0 || psi.max_abs() == 0.0 {
        return Err(Error::InvalidParameter(
            "trilinear check needs nonzero fields".into(),
        ));
    }
    let lhs = trilinear_lhs(phi, psi)?;
    let n_phi = phi.l2_norm_sq().sqrt();
    let n_psi = psi.l2_norm_sq().sqrt();
    let s_phi = n_phi + phi.grad_h_norm_sq().sqrt();
    let s_psi = n_psi + psi.grad_h_norm_sq().sqrt();
    let rhs_first = n_phi * (n_phi * s_phi).sqrt() * (n_psi * s_psi).sqrt();
    let rhs_second = n_psi * (n_phi * s_phi).sqrt() * (n_phi * s_phi).sqrt();
    Ok(TrilinearSample {
        lhs,
        rhs_first,
        rhs_second,
    })
}

/// `int_M (int |phi| dz)(int |phi psi| dz) dx dy` by rectangle-rule quadrature.
pub fn trilinear_lhs(phi: &Field, psi: &Field) -> Result<f64> {
    phi.same_grid(psi)?;
    let g = phi.grid();
    let a = phi.to_physical()?.real_values()?;
    let b = psi.to_physical()?.real_values()?;
    let nxy = g.nx * g.ny;
    let dz = g.dz();
    let mut lhs = 0.0;
    for q in 0..nxy {
        let mut col_phi = 0.0;
        let mut col_prod = 0.0;
        for k in 0..g.nz {
            let idx = k * nxy + q;
            col_phi += a[idx].abs();
            col_prod += (a[idx] * b[idx]).abs();
        }
        lhs += col_phi * dz * col_prod * dz;
    }
    Ok(lhs * g.dx() * g.dy())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrilinearCheck {
    pub worst: TrilinearSample,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub median_ratio: f64,
}

/// Samples `n_samples` random band-limited pairs and reports the worst ratio.
pub fn trilinear_check(
    grid: &Arc<Grid>,
    n_samples: usize,
    seed: u64,
    max_mode: usize,
) -> Result<TrilinearCheck> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_samples);
    while samples.len() < n_samples {
        let mut phi = random_scalar(grid, &mut rng, max_mode, 1.0, Parity::Even);
        let mut psi = random_scalar(grid, &mut rng, max_mode, 1.0, Parity::Even);
        phi.dealias();
        psi.dealias();
        let phi = ops::parity_project(&phi, Parity::Even)?;
        let psi = ops::parity_project(&psi, Parity::Even)?;
        samples.push(trilinear_sample(&phi, &psi)?);
    }
    let ratios: Vec<f64> = samples.iter().map(TrilinearSample::ratio).collect();
    let (worst_idx, max_ratio) =
        ratios
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, r)| if r > acc.1 { (i, r) } else { acc },
            );
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_ratio = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    Ok(TrilinearCheck {
        worst: samples[worst_idx],
        ratios,
        max_ratio,
        median_ratio,
    })
}
