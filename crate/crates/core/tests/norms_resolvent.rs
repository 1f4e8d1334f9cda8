mod common;

use common::{adjoint, c, jacobi_largest_singular_value, random_matrix, random_unitary};
use ndarray::Array2;
use num_complex::Complex64;
use spectral_lab::basis::{build_hermite_basis, ModeLabel};
use spectral_lab::norms::*;
use spectral_lab::operator::Discretization;
use spectral_lab::special::hermite_functions;
use spectral_lab::{Error, Verdict};

#[test]
fn ground_state_has_unit_l2_norm() {
    let (b, g) = build_hermite_basis(1, 6, 1.0).unwrap();
    let disc = Discretization::new(b, g).unwrap();
    let mut e0 = vec![c(0.0, 0.0); 6];
    e0[0] = c(1.0, 0.0);
    let v = LpVector::from_coefficients_on(&e0, &disc).unwrap();
    assert!((lp_norm(&v, 2.0).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn coefficient_and_sampled_l2_norms_agree() {
    let (b, g) = build_hermite_basis(2, 7, 1.0).unwrap();
    let disc = Discretization::new(b, g).unwrap();
    let coeffs: Vec<Complex64> = random_matrix(7, 11).iter().copied().take(49).collect();
    let from_coeffs = lp_norm(&LpVector::Coefficients(coeffs.clone()), 2.0).unwrap();
    let sampled = lp_norm(&LpVector::from_coefficients_on(&coeffs, &disc).unwrap(), 2.0).unwrap();
    assert!((from_coeffs - sampled).abs() < 1e-9);
}

#[test]
fn homogeneity() {
    let xs: Vec<f64> = (0..200).map(|i| -5.0 + i as f64 * 0.05).collect();
    let bump = LpVector::Samples {
        values: xs.iter().map(|x| c(if x.abs() < 1.0 { 1.0 - x * x } else { 0.0 }, 0.0)).collect(),
        weights: vec![0.05; xs.len()],
    };
    for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
        let a = lp_norm(&bump, p).unwrap();
        let b = lp_norm(&bump.scaled(c(2.0, 0.0)), p).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * b, "p = {p}");
    }
}

#[test]
fn ground_state_sup_norm() {
    let h = 1e-3;
    let xs: Vec<f64> = (-8000..=8000).map(|i| i as f64 * h).collect();
    let v = LpVector::Samples { values: xs.iter().map(|x| c(hermite_functions(1, *x)[0], 0.0)).collect(), weights: vec![h; xs.len()] };
    assert!((lp_norm(&v, f64::INFINITY).unwrap() - std::f64::consts::PI.powf(-0.25)).abs() < 1e-6);
}

#[test]
fn lp_norm_errors() {
    assert!(lp_norm(&LpVector::Samples { values: vec![], weights: vec![] }, 2.0).is_err());
    assert!(lp_norm(&LpVector::Coefficients(vec![c(1.0, 0.0)]), 0.5).is_err());
}

#[test]
fn two_two_norm_matches_jacobi_svd() {
    for seed in 0..20 {
        let m = random_matrix(8, 500 + seed);
        let est = opnorm(&m, 2.0, 2.0, None, None, seed).unwrap();
        let svd = jacobi_largest_singular_value(&m);
        assert!((est.value - svd).abs() < 1e-6, "seed {seed}: {} vs {svd}", est.value);
        assert!(est.converged);
    }
}

#[test]
fn zero_padding_leaves_the_norm_unchanged() {
    for seed in 0..5 {
        let m = random_matrix(6, 700 + seed);
        let mut big = Array2::<Complex64>::zeros((10, 9));
        big.slice_mut(ndarray::s![2..8, 1..7]).assign(&m);
        let a = opnorm(&m, 2.0, 2.0, None, None, 3).unwrap().value;
        let b = opnorm(&big, 2.0, 2.0, None, None, 3).unwrap().value;
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }
}

#[test]
fn mixed_norm_of_a_diagonal_is_its_largest_entry() {
    // diagonal maps on unweighted ℓ^p with p <= q attain the norm on a unit vector
    let d = Array2::from_diag(&ndarray::arr1(&[c(0.5, 0.0), c(0.0, -2.5), c(1.0, 1.0)]));
    for (p, q) in [(1.5, 1.5), (1.5, 3.0), (2.0, 4.0), (4.0, 4.0)] {
        let e = opnorm(&d, p, q, None, None, 0).unwrap();
        assert!((e.value - 2.5).abs() < 1e-8, "({p}, {q}) {}", e.value);
    }
}

fn levels(n: usize, modes: usize) -> Vec<f64> {
    let t = OscillatorTruncation::new(n, modes).unwrap();
    t.basis
        .labels
        .iter()
        .map(|l| match l {
            ModeLabel::Hermite(a) => 2.0 * a.iter().sum::<usize>() as f64 + n as f64,
            other => panic!("{other:?}"),
        })
        .collect()
}

#[test]
fn two_two_curve_is_the_distance_to_the_spectrum() {
    let im = geometric_ladder(1.0, 32.0, 2.0);
    for re_z in [5.0, 4.0, 13.0] {
        let cfg = ScanConfig { n: 2, modes_per_axis: 8, q: 4.0, re_z, im_z: im.clone() };
        let r = resolvent_scan(&cfg, 7).unwrap();
        let curve = r.curve("2_to_2").unwrap();
        let lv = levels(2, 8);
        for (v, y) in curve.values.iter().zip(&im) {
            let z = c(re_z, *y);
            let exact = lv.iter().map(|l| 1.0 / (c(*l, 0.0) - z).norm()).fold(0.0, f64::max);
            assert!((v - exact).abs() <= 1e-12 * exact, "{v} vs {exact}");
            if re_z == 4.0 {
                assert!((v - 1.0 / y).abs() <= 1e-12 / y);
            }
        }
        assert!(!r.extension);
    }
}

#[test]
fn q_two_scan_has_resolvent_slope() {
    // at q = 2 both mixed exponents collapse to the L² value −1
    assert_eq!(predicted_exponents(2, 2.0), (-1.0, -1.0));
    let cfg = ScanConfig { n: 2, modes_per_axis: 16, q: 2.0, re_z: 16.0, im_z: geometric_ladder(1.0, 32.0, std::f64::consts::SQRT_2) };
    let r = resolvent_scan(&cfg, 1).unwrap();
    for name in ["qprime_to_2", "qprime_to_q", "2_to_2"] {
        let curve = r.curve(name).unwrap();
        assert!((curve.fit.slope + 1.0).abs() <= 0.15, "{name}: {}", curve.fit.slope);
    }
}

#[test]
fn one_dimensional_scan_is_an_extension() {
    let cfg = ScanConfig { n: 1, modes_per_axis: 64, q: 6.0, re_z: 33.0, im_z: geometric_ladder(1.0, 32.0, std::f64::consts::SQRT_2) };
    let r = resolvent_scan(&cfg, 2).unwrap();
    assert!(r.extension);
    let curve = r.curve("qprime_to_2").unwrap();
    assert!((curve.predicted + 5.0 / 6.0).abs() < 1e-12);
    assert!((curve.fit.slope + 5.0 / 6.0).abs() <= 0.15, "{}", curve.fit.slope);
}

#[test]
fn scan_preconditions() {
    let ladder = geometric_ladder(1.0, 32.0, 2.0);
    let on = ScanConfig { n: 2, modes_per_axis: 8, q: 4.0, re_z: 4.0, im_z: vec![0.1, 1.0, 2.0, 4.0, 8.0, 32.0] };
    assert!(matches!(resolvent_scan(&on, 0), Err(Error::TooCloseToSpectrum { .. })));
    let short = ScanConfig { n: 2, modes_per_axis: 8, q: 4.0, re_z: 5.0, im_z: vec![1.0, 2.0, 4.0] };
    assert!(resolvent_scan(&short, 0).is_err());
    let bad_q = ScanConfig { n: 2, modes_per_axis: 8, q: 1.5, re_z: 5.0, im_z: ladder };
    assert!(resolvent_scan(&bad_q, 0).is_err());
}

#[test]
fn projections_at_q_two_have_unit_norm() {
    let rep = projection_bound(2, 16, &[0, 1, 2, 5, 9, 14], 2.0, 0).unwrap();
    for row in &rep.rows {
        if row.empty {
            assert_eq!(row.k, 0);
            assert_eq!(row.norm_2_to_q, 0.0);
            assert_eq!(row.norm_2_to_inf, 0.0);
        } else {
            assert!((row.norm_2_to_q - 1.0).abs() < 1e-10, "k {}: {}", row.k, row.norm_2_to_q);
        }
    }
    assert!(rep.rows[0].empty);
}

#[test]
fn projection_window_must_stay_in_reliable_spectrum() {
    assert!(projection_bound(2, 8, &[12], 4.0, 0).is_err());
}

#[test]
fn projection_norm_is_invariant_under_rotation_in_the_window() {
    let t = OscillatorTruncation::new(2, 10).unwrap();
    let k = 6.0;
    let window: Vec<usize> = t.levels.iter().enumerate().filter(|(_, l)| **l >= k && **l <= k + 1.0).map(|(j, _)| j).collect();
    let m = window.len();
    let np = t.grid.len();
    let mut phi = Array2::<Complex64>::zeros((np, m));
    for (col, &j) in window.iter().enumerate() {
        let mut e = vec![c(0.0, 0.0); t.levels.len()];
        e[j] = c(1.0, 0.0);
        for (p, v) in t.transform.to_grid(&e).into_iter().enumerate() {
            phi[[p, col]] = v;
        }
    }
    let w = Array2::from_diag(&ndarray::Array1::from(t.grid.weights.iter().map(|v| c(*v, 0.0)).collect::<Vec<_>>()));
    let u = random_unitary(m, 4);
    let rotated = phi.dot(&u);
    let pi = phi.dot(&adjoint(&phi)).dot(&w);
    let pi_rot = rotated.dot(&adjoint(&rotated)).dot(&w);
    let ws = Some(t.grid.weights.as_slice());
    let a = opnorm(&pi, 2.0, 4.0, ws, ws, 0).unwrap().value;
    let b = opnorm(&pi_rot, 2.0, 4.0, ws, ws, 0).unwrap().value;
    assert!((a - b).abs() < 1e-8, "{a} {b}");
    let rep = projection_bound(2, 10, &[6], 4.0, 0).unwrap();
    assert!((rep.rows[0].norm_2_to_q - a).abs() < 1e-8 * a);
}

#[test]
fn identity_weight_reduces_smoothing_to_the_resolvent() {
    let cfg = SmoothingConfig {
        n: 2,
        modes_per_axis: 12,
        weight: SmoothingWeight::Identity,
        re_z: 12.0,
        im_z: geometric_ladder(1.0, 32.0, std::f64::consts::SQRT_2),
    };
    let r = smoothing_check(&cfg, 0).unwrap();
    for curve in &r.scan.curves {
        assert!((curve.fit.slope + 1.0).abs() <= 0.05, "{}: {}", curve.name, curve.fit.slope);
    }
    assert_eq!(r.scan.verdict, Verdict::Pass);
}

#[test]
fn smoothing_adjoint_pair_agrees() {
    let cfg = SmoothingConfig {
        n: 2,
        modes_per_axis: 12,
        weight: SmoothingWeight::Standard { mu: 0.5 },
        re_z: 12.0,
        im_z: geometric_ladder(1.0, 32.0, std::f64::consts::SQRT_2),
    };
    let r = smoothing_check(&cfg, 0).unwrap();
    assert!(r.adjoint_gap <= SMOOTHING_ADJOINT_TOL, "{}", r.adjoint_gap);
    let s2 = r.scan.curve("smoothing_2").unwrap();
    let s3 = r.scan.curve("smoothing_3").unwrap();
    for (a, b) in s2.values.iter().zip(&s3.values) {
        assert!((a - b).abs() <= 1e-8);
    }
}

#[test]
fn slope_fit_with_down_weighted_ends() {
    let xs: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    // perturbing an end point moves the fit half as much as an interior one would
    let mut ys: Vec<f64> = xs.iter().map(|x| x.powf(-0.5)).collect();
    ys[5] *= 1.1;
    let f = fit_loglog(&xs, &ys).unwrap();
    assert!(f.slope > -0.5 && f.slope < -0.45);
    assert!(fit_loglog(&[1.0], &[1.0]).is_err());
}
