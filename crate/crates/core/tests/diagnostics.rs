mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::TRILINEAR_BASELINE;
use hydrolimit::diagnostics::{
    beta, difference_series, energy_inequality_residual, error_report, trilinear_check,
    trilinear_lhs, ErrorReport, Frame,
};
use hydrolimit::nse::EnergyLedger;
use hydrolimit::{make_grid, Field, Grid, Parity, VectorField};
use proptest::prelude::*;

fn frames(times: &[f64], v: &VectorField, w: &Field) -> Vec<Frame> {
    times
        .iter()
        .map(|&t| Frame {
            t,
            v: v.clone(),
            w: w.clone(),
        })
        .collect()
}

fn perturbed(g: &Arc<Grid>, delta: f64, eta: f64) -> (VectorField, Field) {
    let v = VectorField::new(
        Field::from_fn(g, Parity::Even, |x, _, _| delta * x.cos()),
        Field::zeros(g, Parity::Even),
    )
    .unwrap();
    let w = Field::from_fn(g, Parity::Odd, |x, _, z| eta * x.sin() * (PI * z).sin());
    (v, w)
}

#[test]
fn identical_trajectories_give_zero() {
    let g = make_grid(8, 8, 8, 2.0 * PI, 2.0 * PI).unwrap();
    let (v, w) = perturbed(&g, 0.3, 0.2);
    let f = frames(&[0.0, 0.5, 1.0], &v, &w);
    let r = error_report(&f, &f, 0.1, 3.0, true).unwrap();
    assert_eq!((r.sup_l2_sq, r.diss_int, r.total), (0.0, 0.0, 0.0));
    assert_eq!(r.total_h1, Some(0.0));
}

#[test]
fn single_mode_perturbation_matches_parseval() {
    let g = make_grid(16, 16, 16, 2.0 * PI, 2.0 * PI).unwrap();
    let (delta, eta, eps, alpha, t_end) = (0.3, 0.7, 0.2, 3.5, 0.8);
    let times: Vec<f64> = (0..=8).map(|k| k as f64 * t_end / 8.0).collect();
    let zero_v = VectorField::zeros(&g);
    let zero_w = Field::zeros(&g, Parity::Odd);
    let pe = frames(&times, &zero_v, &zero_w);
    let (v, w) = perturbed(&g, delta, eta);
    let nse = frames(&times, &v, &w);
    let r = error_report(&nse, &pe, eps, alpha, true).unwrap();

    let pi2 = PI * PI;
    // ||delta cos x||^2 = 4 pi^2 delta^2; ||eta sin x sin(pi z)||^2 = 2 pi^2 eta^2
    let (nv, nw) = (4.0 * pi2 * delta * delta, 2.0 * pi2 * eta * eta);
    let sup = nv + eps * eps * nw;
    let diss = nv + eps * eps * nw + f64::powf(eps, alpha) * pi2 * nw;
    assert!((r.sup_l2_sq - sup).abs() <= 1e-12 * sup);
    assert!((r.diss_int - t_end * diss).abs() <= 1e-12 * diss);
    assert!((r.total - (sup + t_end * diss)).abs() <= 1e-12 * sup);
    assert_eq!(r.beta, 1.5);
    assert!((r.t_reached - t_end).abs() < 1e-15);

    // H1 weights 1 + |k|^2: 2 for the v mode, 2 + pi^2 for the w mode
    let (hv, hw) = (2.0 * nv, (2.0 + pi2) * nw);
    let sup_h1 = hv + eps * eps * hw;
    let diss_h1 = hv + eps * eps * hw + f64::powf(eps, alpha) * pi2 * hw;
    assert!((r.sup_h1_sq.unwrap() - sup_h1).abs() <= 1e-12 * sup_h1);
    assert!((r.diss_int_h1.unwrap() - t_end * diss_h1).abs() <= 1e-12 * diss_h1);
}

#[test]
fn misaligned_frames_are_rejected() {
    let g = make_grid(8, 8, 8, 2.0 * PI, 2.0 * PI).unwrap();
    let (v, w) = perturbed(&g, 0.1, 0.1);
    let a = frames(&[0.0, 0.5], &v, &w);
    let b = frames(&[0.0, 0.6], &v, &w);
    assert!(error_report(&a, &b, 0.1, 3.0, false).is_err());
    assert!(error_report(&a, &a[..1], 0.1, 3.0, false).is_err());
}

#[test]
fn report_serialises_with_capital_t() {
    let g = make_grid(8, 8, 8, 2.0 * PI, 2.0 * PI).unwrap();
    let (v, w) = perturbed(&g, 0.1, 0.1);
    let a = frames(&[0.0, 0.5], &v, &w);
    let b = frames(
        &[0.0, 0.5],
        &VectorField::zeros(&g),
        &Field::zeros(&g, Parity::Odd),
    );
    let r = error_report(&a, &b, 0.1, 4.0, false).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["T"], 0.5);
    assert!(json["sup_h1_sq"].is_null());
    let back: ErrorReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, r);
    assert_eq!(r.csv_record().len(), ErrorReport::CSV_HEADER.len());
}

fn random_pair(seed: u64, g: &Arc<Grid>) -> (Vec<Frame>, Vec<Frame>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut make = |n: usize| -> Vec<Frame> {
        (0..n)
            .map(|k| {
                let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let v = VectorField::new(
                    Field::from_fn(g, Parity::Even, |x, y, z| {
                        c[0] * (x + y).cos() * (PI * z).cos()
                    }),
                    Field::from_fn(g, Parity::Even, |x, _, z| {
                        c[1] * (2.0 * x).sin() + c[2] * (PI * z).cos()
                    }),
                )
                .unwrap();
                let w = Field::from_fn(g, Parity::Odd, |x, _, z| {
                    c[3] * x.cos() * (2.0 * PI * z).sin()
                });
                Frame {
                    t: 0.1 * k as f64,
                    v,
                    w,
                }
            })
            .collect()
    };
    (make(5), make(5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn swapping_trajectories_changes_nothing(seed in any::<u64>(), eps in 0.01f64..1.0, alpha in 2.1f64..8.0) {
        let g = make_grid(8, 8, 8, 2.0 * PI, 2.0 * PI).unwrap();
        let (a, b) = random_pair(seed, &g);
        let ab = error_report(&a, &b, eps, alpha, true).unwrap();
        let ba = error_report(&b, &a, eps, alpha, true).unwrap();
        prop_assert!((ab.total - ba.total).abs() <= 1e-14 * ab.total.max(1e-300));
        prop_assert!((ab.total_h1.unwrap() - ba.total_h1.unwrap()).abs() <= 1e-14 * ab.total_h1.unwrap());
    }

    #[test]
    fn eps_enters_only_through_weights(seed in any::<u64>(), eps in 0.01f64..1.0, alpha in 2.1f64..8.0) {
        let g = make_grid(8, 8, 8, 2.0 * PI, 2.0 * PI).unwrap();
        let (a, b) = random_pair(seed, &g);
        let series = difference_series(&a, &b, false).unwrap();
        for e in [eps, eps / 2.0] {
            let r = error_report(&a, &b, e, alpha, false).unwrap();
            let sup = series.l2.iter().map(|n| n.v + e * e * n.w).fold(0.0, f64::max);
            let d: Vec<f64> = series
                .l2
                .iter()
                .map(|n| n.grad_h_v + e * e * n.grad_h_w + e.powf(alpha - 2.0) * n.dz_v + e.powf(alpha) * n.dz_w)
                .collect();
            let int: f64 = (1..d.len()).map(|k| 0.5 * (series.times[k] - series.times[k - 1]) * (d[k] + d[k - 1])).sum();
            prop_assert!((r.sup_l2_sq - sup).abs() <= 1e-12 * sup.max(1e-300));
            prop_assert!((r.diss_int - int).abs() <= 1e-12 * int.max(1e-300));
        }
    }

    #[test]
    fn beta_is_lipschitz_and_saturates(a in 2.0001f64..20.0, b in 2.0001f64..20.0) {
        let (ba, bb) = (beta(a).unwrap(), beta(b).unwrap());
        prop_assert!((ba - bb).abs() <= (a - b).abs() + 1e-15);
        if a >= 4.0 {
            prop_assert_eq!(ba, 2.0);
        }
    }
}

#[test]
fn beta_values() {
    assert_eq!(beta(3.0).unwrap(), 1.0);
    assert_eq!(beta(4.0).unwrap(), 2.0);
    assert_eq!(beta(10.0).unwrap(), 2.0);
    assert!(beta(2.0).is_err());
}

#[test]
fn residual_examples() {
    assert_eq!(energy_inequality_residual(&EnergyLedger::default()), 0.0);
    let mut l = EnergyLedger::default();
    let e0 = 3.0;
    l.push(0.0, e0, 0.0);
    l.push(0.5, 2.0, 1.0);
    l.push(1.0, 1.5, 1.5 + 0.01 * e0);
    assert!((energy_inequality_residual(&l) - 0.01).abs() < 1e-14);
    let mut decaying = EnergyLedger::default();
    for k in 0..5 {
        let t = 0.1 * k as f64;
        let e = e0 * (-2.0 * t).exp();
        decaying.push(t, e, e0 - e);
    }
    assert!(energy_inequality_residual(&decaying).abs() <= 1e-10);
}

#[test]
fn trilinear_sampler_is_stable_and_pinned() {
    let g = make_grid(16, 16, 16, 2.0 * PI, 2.0 * PI).unwrap();
    let a = trilinear_check(&g, 100, 1, 5).unwrap();
    let b = trilinear_check(&g, 100, 2, 5).unwrap();
    for c in [&a, &b] {
        assert_eq!(c.ratios.len(), 100);
        assert!(c.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
        assert!(c.max_ratio <= 10.0 * c.median_ratio);
    }
    assert!((a.max_ratio - b.max_ratio).abs() <= 0.2 * a.max_ratio);
    assert!((a.max_ratio - TRILINEAR_BASELINE).abs() <= 1e-9 * TRILINEAR_BASELINE);
    let again = trilinear_check(&g, 100, 1, 5).unwrap();
    assert_eq!(again.ratios, a.ratios);

    let zero = Field::zeros(&g, Parity::Even);
    let one = Field::from_fn(&g, Parity::Even, |_, _, _| 1.0);
    assert_eq!(trilinear_lhs(&zero, &one).unwrap(), 0.0);
}
