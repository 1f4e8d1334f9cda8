mod common;

use common::{c, hermite_function_reference, max_abs_diff, simpson};
use ndarray::Array2;
use num_complex::Complex64;
use spectral_lab::basis::{build_hermite_basis, build_landau_basis};
use spectral_lab::eigen::{eigenvalues, hermitian_eigenvalues};
use spectral_lab::operator::*;
use spectral_lab::potential::{Family, PotentialSpec, VectorStructure};
use std::sync::Arc;

fn hermite_disc(dim: usize, modes: usize) -> Discretization {
    let (b, g) = build_hermite_basis(dim, modes, 1.0).unwrap();
    Discretization::new(b, g).unwrap()
}

fn diag_of(m: &OperatorMatrix) -> Vec<f64> {
    (0..m.dim()).map(|i| m.entries[[i, i]].re).collect()
}

fn off_diag_max(m: &Array2<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for ((i, j), v) in m.indexed_iter() {
        if i != j {
            worst = worst.max(v.norm());
        }
    }
    worst
}

#[test]
fn p0_hermite_is_odd_integers() {
    let (b, _) = build_hermite_basis(1, 4, 1.0).unwrap();
    let p0 = assemble_p0(&Arc::new(b));
    assert_eq!(diag_of(&p0), vec![1.0, 3.0, 5.0, 7.0]);
    assert_eq!(off_diag_max(&p0.entries), 0.0);
    assert_eq!(p0.hermitian, HermitianFlag::Hermitian);
}

#[test]
fn p0_landau_levels() {
    let (b, _) = build_landau_basis(1.0, 2, 2).unwrap();
    let p0 = assemble_p0(&Arc::new(b));
    assert!(diag_of(&p0).iter().all(|v| [1.0, 3.0, 5.0].contains(v)));
    let (b, _) = build_landau_basis(3.0, 0, 0).unwrap();
    let p0 = assemble_p0(&Arc::new(b));
    assert_eq!(diag_of(&p0), vec![3.0]);
}

#[test]
fn landau_kinetic_quadrature_has_exact_levels() {
    let (b, g) = build_landau_basis(1.0, 2, 2).unwrap();
    let disc = Discretization::new(b, g).unwrap();
    let k = assemble_kinetic_quadrature(&Model::Landau { b0: 1.0 }, &disc).unwrap();
    assert!(off_diag_max(&k.entries) < 1e-8);
    for v in hermitian_eigenvalues(&k.entries) {
        assert!([1.0, 3.0, 5.0].iter().any(|l| (v - l).abs() < 1e-8), "{v}");
    }
    // scaling z -> √B0 z multiplies every level by B0
    let (b, g) = build_landau_basis(2.0, 1, 1).unwrap();
    let disc = Discretization::new(b, g).unwrap();
    let k = assemble_kinetic_quadrature(&Model::Landau { b0: 2.0 }, &disc).unwrap();
    let low = hermitian_eigenvalues(&k.entries)[0];
    assert!((low - 2.0).abs() < 1e-8, "{low}");
}

#[test]
fn multiplication_examples() {
    let disc = hermite_disc(1, 2);
    let zero = assemble_multiplication(&PotentialSpec::zero(), &disc).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let x2 = assemble_multiplication(&PotentialSpec::scalar(Family::Harmonic, c(1.0, 0.0)), &disc).unwrap();
    let expected = ndarray::arr2(&[[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.5, 0.0)]]);
    assert!(max_abs_diff(&x2.entries, &expected) < 1e-12);
    let disc = hermite_disc(2, 4);
    let ci = assemble_multiplication(&PotentialSpec::scalar(Family::Constant, c(0.0, 1.0)), &disc).unwrap();
    let id = Array2::from_diag_elem(disc.size(), c(0.0, 1.0));
    assert!(max_abs_diff(&ci.entries, &id) < 1e-12);
    assert_eq!(ci.hermitian, HermitianFlag::NonHermitian);
}

#[test]
fn x_squared_matches_ladder_oracle() {
    let disc = hermite_disc(1, 12);
    let m = assemble_multiplication(&PotentialSpec::scalar(Family::Harmonic, c(1.0, 0.0)), &disc).unwrap();
    for j in 0..12 {
        for k in 0..12 {
            assert!((m.entries[[j, k]] - c(common::x_squared_element(j, k), 0.0)).norm() < 1e-11);
        }
    }
}

#[test]
fn perturbation_reduces_to_multiplication() {
    let disc = hermite_disc(2, 5);
    let model = Model::Oscillator { n: 2 };
    let zero = assemble_perturbation_l(&PotentialSpec::zero(), &PotentialSpec::zero(), &model, &disc).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let v = PotentialSpec::gaussian(c(0.3, 0.7), 1.3).with_center(vec![0.2, -0.1]);
    let l = assemble_perturbation_l(&PotentialSpec::zero(), &v, &model, &disc).unwrap();
    let m = assemble_multiplication(&v, &disc).unwrap();
    assert!(max_abs_diff(&l.entries, &m.entries) == 0.0);
}

#[test]
fn first_order_term_matches_finite_difference_projection() {
    let disc = hermite_disc(1, 8);
    let a1 = PotentialSpec::gaussian(c(0.8, 0.0), 1.5).with_center(vec![0.25]).with_vector(VectorStructure::Directed { direction: vec![1.0] });
    let terms = PerturbationTerms { include_a1_squared: false };
    let l = assemble_perturbation_l_with(&a1, &PotentialSpec::zero(), &Model::Oscillator { n: 1 }, &disc, terms).unwrap();
    // −2iA ∂φ_k − iA'φ_k by central differences, projected with Simpson's rule
    let (lo, hi, panels) = (-14.0, 14.0, 28000);
    let h = 1e-4;
    let a = |x: f64| 0.8 * (-((x - 0.25) / 1.5).powi(2)).exp();
    let i = c(0.0, 1.0);
    for j in 0..8 {
        for k in 0..8 {
            let apply = |x: f64| {
                let dphi = (hermite_function_reference(k, x + h) - hermite_function_reference(k, x - h)) / (2.0 * h);
                let da = (a(x + h) - a(x - h)) / (2.0 * h);
                -2.0 * i * a(x) * dphi - i * da * hermite_function_reference(k, x)
            };
            let re = simpson(|x| hermite_function_reference(j, x) * apply(x).re, lo, hi, panels);
            let im = simpson(|x| hermite_function_reference(j, x) * apply(x).im, lo, hi, panels);
            let got = l.entries[[j, k]];
            assert!((got - c(re, im)).norm() < 1e-5, "({j},{k}) {got} vs {re} {im}");
        }
    }
}

#[test]
fn unperturbed_full_operator_is_diagonal() {
    let disc = hermite_disc(2, 6);
    let z = PotentialSpec::zero();
    let p = assemble_full(&Model::Oscillator { n: 2 }, &z, &z, &z, &disc).unwrap();
    assert_eq!(off_diag_max(&p.entries), 0.0);
    let mut d = diag_of(&p);
    d.sort_by(f64::total_cmp);
    assert_eq!(&d[..6], &[2.0, 4.0, 4.0, 6.0, 6.0, 6.0]);
}

#[test]
fn real_bump_gives_hermitian_operator_with_real_spectrum() {
    let disc = hermite_disc(2, 6);
    let z = PotentialSpec::zero();
    let w = PotentialSpec::gaussian(c(1.7, 0.0), 0.9).with_center(vec![0.5, 0.0]);
    let p = assemble_full(&Model::Oscillator { n: 2 }, &w, &z, &z, &disc).unwrap();
    assert_eq!(p.hermitian, HermitianFlag::Hermitian);
    assert!(p.hermitian_defect() <= 1e-10);
    let s = eigenvalues(&p).unwrap();
    let scale = s.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    assert!(s.max_abs_im() <= 1e-9 * scale);
}

#[test]
fn trace_is_linear_in_the_imaginary_bump() {
    let modes = 16;
    let disc = hermite_disc(2, modes);
    let z = PotentialSpec::zero();
    let tau = 0.05;
    let v1 = PotentialSpec::gaussian(c(0.0, tau), 1.0);
    let p = assemble_full(&Model::Oscillator { n: 2 }, &z, &z, &v1, &disc).unwrap();
    let p0 = assemble_p0(&disc.basis);
    // ⟨e^{−|x|²}φ_α, φ_α⟩ factorizes over the axes
    let axis: Vec<f64> = (0..modes).map(|k| simpson(|x| (-x * x).exp() * hermite_function_reference(k, x).powi(2), -12.0, 12.0, 4000)).collect();
    let bump_sum: f64 = (0..modes).flat_map(|j| (0..modes).map(move |k| (j, k))).map(|(j, k)| axis[j] * axis[k]).sum();
    let expected = p0.trace() + c(0.0, tau * bump_sum);
    assert!((p.trace() - expected).norm() < 1e-8, "{} vs {}", p.trace(), expected);
}

#[test]
fn pauli_blocks_shift_landau_levels() {
    let (b, g) = build_landau_basis(1.0, 4, 4).unwrap();
    let disc = Discretization::new(b, g).unwrap();
    let z = PotentialSpec::zero();
    let (plus, minus) = assemble_pauli(1.0, &z, &z, &z, &disc).unwrap();
    assert_eq!(plus.hermitian, HermitianFlag::Hermitian);
    assert_eq!(minus.hermitian, HermitianFlag::Hermitian);
    let sp = hermitian_eigenvalues(&plus.entries);
    let sm = hermitian_eigenvalues(&minus.entries);
    assert!((sp[0] - 2.0).abs() < 1e-8 && (sm[0] - 0.0).abs() < 1e-8);
    assert!(sp.iter().all(|v| ((v / 2.0).round() * 2.0 - v).abs() < 1e-8 && *v >= 2.0 - 1e-8));
    assert!(sm.iter().all(|v| ((v / 2.0).round() * 2.0 - v).abs() < 1e-8 && *v >= -1e-8));
    let b = magnetic_field_matrix(1.0, &z, &disc).unwrap();
    let diff = &plus.entries - &minus.entries;
    assert!(max_abs_diff(&diff, &b.entries.mapv(|v| 2.0 * v)) < 1e-13);
}

#[test]
fn pauli_blocks_differ_by_twice_the_field_with_vector_potential() {
    let (b, g) = build_landau_basis(1.0, 3, 3).unwrap();
    let disc = Discretization::new(b, g).unwrap();
    let a1 = PotentialSpec::gaussian(c(0.2, 0.0), 1.0).with_vector(VectorStructure::Rotational);
    let v1 = PotentialSpec::gaussian(c(0.0, 0.5), 1.0);
    let z = PotentialSpec::zero();
    let (plus, minus) = assemble_pauli(1.0, &z, &a1, &v1, &disc).unwrap();
    let b = magnetic_field_matrix(1.0, &a1, &disc).unwrap();
    assert!(max_abs_diff(&(&plus.entries - &minus.entries), &b.entries.mapv(|v| 2.0 * v)) < 1e-12);
}

#[test]
fn constant_shift_moves_every_eigenvalue() {
    let disc = hermite_disc(2, 5);
    let z = PotentialSpec::zero();
    let v1 = PotentialSpec::gaussian(c(0.4, 1.2), 1.0);
    let model = Model::Oscillator { n: 2 };
    let base = eigenvalues(&assemble_full(&model, &z, &z, &v1, &disc).unwrap()).unwrap();
    let shifted =
        eigenvalues(&assemble_full(&model, &PotentialSpec::scalar(Family::Constant, c(0.75, 0.0)), &z, &v1, &disc).unwrap()).unwrap();
    let moved: Vec<Complex64> = base.eigenvalues.iter().map(|v| v + 0.75).collect();
    assert!(common::hausdorff(&moved, &shifted.eigenvalues) < 1e-9);
}

#[test]
fn lowest_eigenvalue_stabilizes_under_doubling() {
    let z = PotentialSpec::zero();
    let v1 = PotentialSpec::gaussian(c(0.0, 0.5), 1.0);
    let model = Model::Oscillator { n: 1 };
    let low = |modes: usize| {
        let disc = hermite_disc(1, modes);
        eigenvalues(&assemble_full(&model, &z, &z, &v1, &disc).unwrap()).unwrap().eigenvalues[0]
    };
    let (a, b) = (low(16), low(32));
    assert!((a - b).norm() < 1e-6, "{a} {b}");
}

#[test]
fn admissibility_window() {
    assert!(!r_admissible(1.0, 3));
    assert!(r_admissible(1.5, 3));
    assert!(!r_admissible(1.0, 2));
    assert!(r_admissible(1.0 + 1e-9, 2));
    assert!(r_admissible(f64::INFINITY, 2));
    let grid = box_grid(3, 6.0, 4).unwrap();
    let v1 = PotentialSpec::polynomial_decay(c(1.0, 0.0), 2.0);
    let rep = check_assumptions(&v1, &PotentialSpec::zero(), 1.0, 0.5, 3, &grid).unwrap();
    assert!(!rep.admissible);
    let rep = check_assumptions(&PotentialSpec::zero(), &PotentialSpec::zero(), 2.0, 0.5, 3, &grid).unwrap();
    assert!(rep.admissible);
    assert_eq!(rep.v1_norm_lr, 0.0);
}

#[test]
fn decaying_potential_norm_matches_radial_integral() {
    // ‖⟨x⟩^{-2}‖²_{L²(R³)} = 4π ∫ r²(1 + r²)^{-2} dr; r = tan t maps it to ∫ sin²t dt
    let radial = 4.0 * std::f64::consts::PI * simpson(|t: f64| t.sin().powi(2), 0.0, std::f64::consts::FRAC_PI_2, 2000);
    let grid = box_grid(3, 512.0, 6).unwrap();
    let v1 = PotentialSpec::polynomial_decay(c(1.0, 0.0), 2.0);
    let rep = check_assumptions(&v1, &PotentialSpec::zero(), 2.0, 0.5, 3, &grid).unwrap();
    assert!(rep.admissible);
    let rel = (rep.v1_norm_lr.powi(2) - radial).abs() / radial;
    assert!(rel < 0.01, "{} vs {radial}", rep.v1_norm_lr.powi(2));
}

#[test]
fn scalar_potential_cannot_be_a_vector_field() {
    let disc = hermite_disc(1, 4);
    let a1 = PotentialSpec::gaussian(c(1.0, 0.0), 1.0);
    assert!(assemble_perturbation_l(&a1, &PotentialSpec::zero(), &Model::Oscillator { n: 1 }, &disc).is_err());
    let vec_pot = a1.with_vector(VectorStructure::Directed { direction: vec![1.0] });
    assert!(assemble_multiplication(&vec_pot, &disc).is_err());
}

#[test]
fn model_must_match_basis() {
    let disc = hermite_disc(1, 4);
    let z = PotentialSpec::zero();
    assert!(assemble_full(&Model::Landau { b0: 1.0 }, &z, &z, &z, &disc).is_err());
    assert!(assemble_full(&Model::Oscillator { n: 2 }, &z, &z, &z, &disc).is_err());
}
