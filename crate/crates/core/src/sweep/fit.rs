//! Least-squares fit of `log total` against `log eps`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the vertical residuals.
    pub residual: f64,
}

/// Ordinary least squares on `(x, y)` pairs; needs three distinct abscissae.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit("non-finite point".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("repeated abscissa".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LineFit {
        slope,
        intercept,
        residual,
    })
}

/// Convergence fit for one `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub alpha: f64,
    /// `(log eps, log total)`, in input order.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub beta_predicted: f64,
    /// Slope of `log sqrt(total)`; always half of `slope`.
    pub sqrt_slope: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// `total` non-increasing as `eps` decreases.
    pub monotonic: bool,
    /// Epsilons dropped from the fit because the run did not reach the horizon.
    #[serde(default)]
    pub excluded: Vec<f64>,
}

/// Fits `(log eps, log total)` points. `beta_predicted` and `tolerance` set the
/// pass band `|slope - beta_predicted| <= tolerance`.
pub fn fit_rate(
    alpha: f64,
    points: &[(f64, f64)],
    beta_predicted: f64,
    tolerance: f64,
) -> Result<RateFit> {
    let line = fit_line(points)?;
    let mut by_eps = points.to_vec();
    by_eps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotonic = by_eps.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(RateFit {
        alpha,
        points: points.to_vec(),
        slope: line.slope,
        intercept: line.intercept,
        residual: line.residual,
        beta_predicted,
        sqrt_slope: 0.5 * line.slope,
        tolerance,
        pass: (line.slope - beta_predicted).abs() <= tolerance,
        monotonic,
        excluded: Vec::new(),
    })
}

/// `(eps, total)` pairs to log-log points.
pub fn log_points(pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    pairs.iter().map(|&(e, t)| (e.ln(), t.ln())).collect()
}

/// Reads a CSV with `eps` and `total` columns (other columns ignored).
pub fn read_eps_total(r: impl std::io::Read) -> Result<Vec<(f64, f64)>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Fit(format!("missing column {name:?}")))
    };
    let (ie, it) = (col("eps")?, col("total")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Fit(format!("bad number in row {:?}", rec)))
        };
        out.push((parse(ie)?, parse(it)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_lines() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let sq: Vec<_> = eps.iter().map(|&e: &f64| (e, e * e)).collect();
        let f = fit_rate(4.0, &log_points(&sq), 2.0, 0.6).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(f.pass && f.monotonic);
        assert!(f.residual < 1e-12);

        let lin: Vec<_> = eps.iter().map(|&e| (e, 7.0 * e)).collect();
        let f = fit_line(&log_points(&lin)).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        assert!(fit_line(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_line(&[(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(fit_line(&[(0.0, f64::NAN), (1.0, 2.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn csv_columns() {
        let text = "alpha,eps,total\n3,0.2,0.04\n3,0.1,0.01\n";
        let pts = read_eps_total(text.as_bytes()).unwrap();
        assert_eq!(pts, vec![(0.2, 0.04), (0.1, 0.01)]);
        assert!(read_eps_total("eps,x\n1,2\n".as_bytes()).is_err());
    }
}
