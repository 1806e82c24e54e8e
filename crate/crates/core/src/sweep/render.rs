//! Log-log SVG charts and a plain-text summary table. Output depends only on
//! the inputs, so repeated renders are byte-identical.

use std::fmt::Write as _;

use crate::diagnostics::ErrorReport;
use crate::error::{Error, Result};

use super::fit::RateFit;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;

/// One rendered chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub alpha: f64,
    pub svg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub charts: Vec<Chart>,
    pub summary: String,
}

pub fn render(reports: &[ErrorReport], fits: &[RateFit]) -> Result<Rendered> {
    if reports.is_empty() {
        return Err(Error::Render("no reports to render".into()));
    }
    if fits.is_empty() {
        return Err(Error::Render("no fits to render".into()));
    }
    let charts = fits
        .iter()
        .map(|f| Chart {
            alpha: f.alpha,
            svg: chart(f),
        })
        .collect();
    Ok(Rendered {
        charts,
        summary: summary(reports, fits),
    })
}

/// File-name friendly rendering of `alpha`.
pub fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}").replace('.', "p")
}

fn chart(fit: &RateFit) -> String {
    let pts = &fit.points;
    let anchor = pts.iter().copied().fold(
        (f64::NEG_INFINITY, 0.0),
        |a, p| if p.0 > a.0 { p } else { a },
    );
    let reference = |x: f64| anchor.1 + fit.beta_predicted * (x - anchor.0);
    let fitted = |x: f64| fit.intercept + fit.slope * x;

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
    }
    let pad = 0.05 * (x1 - x0).max(1e-3);
    let (x0, x1) = (x0 - pad, x1 + pad);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in pts
        .iter()
        .map(|p| p.1)
        .chain([fitted(x0), fitted(x1), reference(x0), reference(x1)])
    {
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = 0.05 * (y1 - y0).max(1e-3);
    let (y0, y1) = (y0 - pad, y1 + pad);

    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">alpha = {}: slope {:.4}, predicted {:.4}</text>"#,
        WIDTH / 2.0,
        fit.alpha,
        fit.slope,
        fit.beta_predicted
    );
    // axes box
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">log eps</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">log total</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (x, label) in [(x0, x0), (x1, x1)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">{:.3}</text>"#,
            sx(x),
            HEIGHT - MARGIN + 14.0,
            label
        );
    }
    for (y, label) in [(y0, y0), (y1, y1)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{:.3}</text>"#,
            MARGIN - 4.0,
            sy(y) + 3.0,
            label
        );
    }
    let line = |s: &mut String, f: &dyn Fn(f64) -> f64, color: &str, dash: &str, name: &str| {
        let _ = writeln!(
            s,
            r#"<line class="{name}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            sx(x0),
            sy(f(x0)),
            sx(x1),
            sy(f(x1))
        );
    };
    line(&mut s, &fitted, "steelblue", "", "fit");
    line(
        &mut s,
        &reference,
        "firebrick",
        r#" stroke-dasharray="6 4""#,
        "reference",
    );
    for p in pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            sx(p.0),
            sy(p.1)
        );
    }
    // legend
    let lx = MARGIN + 12.0;
    let ly = MARGIN + 16.0;
    for (i, (name, color, dash)) in [
        ("fit", "steelblue", ""),
        ("β reference", "firebrick", r#" stroke-dasharray="6 4""#),
    ]
    .iter()
    .enumerate()
    {
        let y = ly + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{name}</text>"#,
            lx + 30.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn summary(reports: &[ErrorReport], fits: &[RateFit]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8} {:>10} {:>10} {:>10} {:>10} {:>6} {:>10}",
        "alpha", "beta", "slope", "sqrt_slope", "residual", "pass", "monotonic"
    );
    for f in fits {
        let _ = writeln!(
            s,
            "{:>8} {:>10.4} {:>10.4} {:>10.4} {:>10.3e} {:>6} {:>10}",
            f.alpha, f.beta_predicted, f.slope, f.sqrt_slope, f.residual, f.pass, f.monotonic
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>8} {:>8} {:>14} {:>14} {:>14} {:>8} status",
        "alpha", "eps", "sup_l2_sq", "diss_int", "total", "T"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>14.6e} {:>14.6e} {:>14.6e} {:>8.4} {}",
            r.alpha,
            r.eps,
            r.sup_l2_sq,
            r.diss_int,
            r.total,
            r.t_reached,
            r.blowup.as_deref().unwrap_or("ok")
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::fit::{fit_rate, log_points};

    fn sample() -> (Vec<ErrorReport>, Vec<RateFit>) {
        let pairs: Vec<_> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.powf(1.8)))
            .collect();
        let reports = pairs
            .iter()
            .map(|&(eps, total)| ErrorReport {
                eps,
                alpha: 4.0,
                beta: 2.0,
                sup_l2_sq: total / 2.0,
                diss_int: total / 2.0,
                total,
                sup_h1_sq: None,
                diss_int_h1: None,
                total_h1: None,
                t_reached: 0.5,
                blowup: None,
                pe_checksum: None,
            })
            .collect();
        let fit = fit_rate(4.0, &log_points(&pairs), 2.0, 0.6).unwrap();
        (reports, vec![fit])
    }

    #[test]
    fn one_chart_two_lines() {
        let (reports, fits) = sample();
        let out = render(&reports, &fits).unwrap();
        assert_eq!(out.charts.len(), 1);
        let svg = &out.charts[0].svg;
        assert_eq!(svg.matches(r#"class="fit""#).count(), 1);
        assert_eq!(svg.matches(r#"class="reference""#).count(), 1);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains(">fit<") && svg.contains(">β reference<"));
        assert_eq!(render(&reports, &fits).unwrap(), out);
    }

    #[test]
    fn empty_inputs_fail() {
        let (reports, fits) = sample();
        assert!(render(&[], &fits).is_err());
        assert!(render(&reports, &[]).is_err());
    }
}
