// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::config;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

use proptest::prelude::*;
use qsdc::engine::{BlochVector, DensityMatrix, PureQubitSpec};
use qsdc::measurement::*;
use qsdc::sampling::ThetaDistribution;
use qsdc::scenario::binomial_two_sided;

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn twin_estimator_error_shrinks_as_inverse_root_shots() {
    // mixed, off-equator state: the atan2 estimator stays consistent anyway
    let b = BlochVector::from_polar(0.8, 1.1, 0.7);
    let shots = [64u64, 256, 1024, 4096, 16384];
    let trials = 400;
    let mut rmse = Vec::new();
    for &n in &shots {
        let mut sq = 0.0;
        for seed in 0..trials {
            let cx = sample_basis(&b, Basis::X, n, seed).unwrap();
            let cy = sample_basis(&b, Basis::Y, n, seed).unwrap();
            let est = estimate_phase_qsdc(&cx, &cy).unwrap();
            sq += wrap(est.phi_hat - 0.7).powi(2);
        }
        rmse.push((sq / trials as f64).sqrt());
    }
    let x: Vec<f64> = shots.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&x, &rmse);
    println!("rmse {rmse:?} slope {slope:.3}");
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn legacy_estimator_bias_law_on_a_grid() {
    // arccos reads r·sinθ·cosφ; atan2 reads φ whatever r and θ are
    for i in 0..=15 {
        let phi = 0.1 * i as f64;
        for r in [0.3, 0.6, 0.9, 1.0] {
            for theta in [0.3, 0.8, 1.3, FRAC_PI_2, 2.2, 2.9] {
                let b = BlochVector::from_polar(r, theta, phi);
                let legacy = qdc_from_expectation(b.x, 0).phi_hat;
                let law = (r * theta.sin() * phi.cos()).acos();
                assert!((legacy - law).abs() < 1e-12);
                assert!(legacy >= phi - 1e-12, "bias never pulls below φ on [0, π/2]");
                if r * theta.sin() < 0.999 {
                    assert!(legacy - phi > 1e-4, "strictly biased off the pure equator");
                }
                let twin = qsdc_from_expectations(b.x, b.y, 0).unwrap().phi_hat;
                assert!((twin - phi).abs() < 1e-12);
            }
        }
    }
    // exact only on the pure equator
    let eq = BlochVector::from_polar(1.0, FRAC_PI_2, 0.9);
    assert!((qdc_from_expectation(eq.x, 0).phi_hat - 0.9).abs() < 1e-12);
}

#[test]
fn intercepted_z_outcomes_look_like_fair_coins() {
    let stream = prepared_stream(FRAC_PI_6, &ThetaDistribution::FULL_RANGE, 10_000, 5);
    let report = eve_intercept(&stream, &[Basis::Z], 1, 10_000, 5).unwrap();
    let z = report.bases[&Basis::Z];
    let p = binomial_two_sided(z.zeros, z.shots());
    println!("Z zeros {} of {} p = {p:.3}", z.zeros, z.shots());
    assert!(p > 0.01);
    // a strongly biased stream is rejected
    let biased = prepared_stream(FRAC_PI_6, &ThetaDistribution::Uniform { lo: 0.2, hi: 1.5 }, 10_000, 5);
    let rb = eve_intercept(&biased, &[Basis::Z], 1, 10_000, 5).unwrap();
    let zb = rb.bases[&Basis::Z];
    assert!(binomial_two_sided(zb.zeros, zb.shots()) < 1e-6);
}

#[test]
fn binomial_test_matches_direct_sum() {
    // two-sided p as the mass of outcomes no more likely than the observed one
    fn direct(k: u64, n: u64) -> f64 {
        let pmf = |j: u64| -> f64 {
            let mut l = 0.0;
            for t in 0..j {
                l += ((n - t) as f64).ln() - ((t + 1) as f64).ln();
            }
            (l - n as f64 * std::f64::consts::LN_2).exp()
        };
        let pk = pmf(k);
        (0..=n).map(pmf).filter(|&p| p <= pk * (1.0 + 1e-7)).sum::<f64>().min(1.0)
    }
    for (k, n) in [(0, 10), (3, 10), (5, 10), (9, 20), (40, 100), (61, 100)] {
        let (a, b) = (binomial_two_sided(k, n), direct(k, n));
        assert!((a - b).abs() < 1e-9, "k={k} n={n}: {a} vs {b}");
    }
}

#[test]
fn equatorial_pi_over_six_histogram() {
    let b = PureQubitSpec::new(FRAC_PI_2, FRAC_PI_6).unwrap().bloch();
    let p0 = exact_p0(&b, Basis::X).unwrap();
    assert!((p0 - 0.9330).abs() < 5e-5);
    let c = sample_basis(&b, Basis::X, 2000, 1).unwrap();
    let sigma = (p0 * (1.0 - p0) / 2000.0).sqrt();
    assert!((c.p0() - p0).abs() < 3.0 * sigma);
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn basis_circuits_match_closed_form(r in 0.0f64..=1.0, theta in 0.0f64..PI, phi in -PI..PI) {
        let b = BlochVector::from_polar(r, theta, phi);
        let rho = DensityMatrix::from_bloch(b).unwrap();
        for basis in Basis::ALL {
            let gate = gate_level_p0(&rho, basis).unwrap();
            prop_assert!((gate - exact_p0(&b, basis).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(seed in any::<u64>(), shots in 1u64..5000) {
        let b = BlochVector::from_polar(0.9, 1.0, 0.4);
        let a = sample_basis(&b, Basis::Y, shots, seed).unwrap();
        prop_assert_eq!(a, sample_basis(&b, Basis::Y, shots, seed).unwrap());
        prop_assert_eq!(a.shots(), shots);
    }
}
