mod common;

use common::{c, hermite_function_reference, x_squared_element};
use num_complex::Complex64;
use spectral_lab::basis::*;
use spectral_lab::special::{gauss_hermite, hermite_functions};

fn gram_defect(basis: &BasisSpec, grid: &QuadratureGrid) -> f64 {
    let s = evaluate_basis(basis, grid).unwrap();
    let g = gram_matrix(&s, &grid.weights);
    let n = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[[i, j]] - c(target, 0.0)).norm());
        }
    }
    worst
}

#[test]
fn hermite_gram_identity_1d() {
    let (b, g) = build_hermite_basis(1, 4, 1.0).unwrap();
    assert_eq!(b.size(), 4);
    assert!(gram_defect(&b, &g) < 1e-10);
}

#[test]
fn orthonormal_at_default_padding_for_several_sizes() {
    for (dim, modes) in [(1, 1), (1, 9), (1, 40), (2, 5), (2, 12)] {
        let (b, g) = build_hermite_basis(dim, modes, 1.0).unwrap();
        assert!(gram_defect(&b, &g) < 1e-10, "dim {dim} modes {modes}");
    }
    for (b0, l, m) in [(1.0, 2, 2), (2.0, 4, 3), (0.5, 6, 6)] {
        let (b, g) = build_landau_basis(b0, l, m).unwrap();
        assert!(gram_defect(&b, &g) < 1e-10, "landau {b0} {l} {m}");
    }
}

#[test]
fn x_matrix_element_between_first_two_functions() {
    let (b, g) = build_hermite_basis(1, 2, 1.0).unwrap();
    let s = evaluate_basis(&b, &g).unwrap();
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..g.len() {
        acc += g.weights[p] * s[[p, 0]].conj() * g.nodes[[p, 0]] * s[[p, 1]];
    }
    // x h1 = (h0 + √2 h2)/√2 gives ⟨h0, x h1⟩ = 1/√2
    assert!((acc - c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
}

#[test]
fn tensor_labels_cover_all_pairs() {
    let (b, _) = build_hermite_basis(2, 3, 1.0).unwrap();
    assert_eq!(b.size(), 9);
    let mut seen: Vec<Vec<usize>> = b
        .labels
        .iter()
        .map(|l| match l {
            ModeLabel::Hermite(a) => a.clone(),
            other => panic!("{other:?}"),
        })
        .collect();
    seen.sort();
    let expected: Vec<Vec<usize>> = (0..3).flat_map(|j| (0..3).map(move |k| vec![j, k])).collect();
    assert_eq!(seen, expected);
}

#[test]
fn ground_state_value_at_origin() {
    let h = hermite_functions(1, 0.0);
    assert!((h[0] - std::f64::consts::PI.powf(-0.25)).abs() < 1e-12);
}

#[test]
fn hermite_functions_match_polynomial_recurrence() {
    for &x in &[-3.1, -0.7, 0.0, 0.4, 2.5] {
        let h = hermite_functions(12, x);
        for (k, v) in h.iter().enumerate() {
            assert!((v - hermite_function_reference(k, x)).abs() < 1e-12, "k {k} x {x}");
        }
    }
}

#[test]
fn high_degree_functions_stay_finite() {
    let h = hermite_functions(200, 15.0);
    assert!(h.iter().all(|v| v.is_finite()));
    let h = hermite_functions(200, 40.0);
    assert!(h.iter().all(|v| v.is_finite() && v.abs() < 1.0));
}

#[test]
fn empty_basis_gives_empty_samples() {
    let (_, g) = build_hermite_basis(1, 3, 1.0).unwrap();
    let empty = BasisSpec { kind: BasisKind::Hermite1d, labels: vec![], length_scale: 1.0 };
    let s = evaluate_basis(&empty, &g).unwrap();
    assert_eq!(s.ncols(), 0);
}

#[test]
fn invalid_inputs_rejected() {
    assert!(build_hermite_basis(0, 3, 1.0).is_err());
    assert!(build_hermite_basis(1, 0, 1.0).is_err());
    assert!(build_hermite_basis(1, 3, -1.0).is_err());
    assert!(build_landau_basis(0.0, 2, 2).is_err());
    assert!(build_landau_basis(-1.0, 2, 2).is_err());
}

#[test]
fn landau_single_ground_state() {
    let (b, g) = build_landau_basis(1.0, 0, 0).unwrap();
    assert_eq!(b.size(), 1);
    let s = evaluate_basis(&b, &g).unwrap();
    let norm: f64 = (0..g.len()).map(|p| g.weights[p] * s[[p, 0]].norm_sqr()).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn doubling_padding_leaves_elements_unchanged() {
    let f = |x: &[f64]| (-(x[0] - 0.3).powi(2)).exp() * (1.0 + 0.5 * x[0]);
    for modes in [16, 20, 24] {
        let (b1, g1) = build_hermite_basis_padded(1, modes, 1.0, DEFAULT_PADDING).unwrap();
        let (b2, g2) = build_hermite_basis_padded(1, modes, 1.0, 2.0 * DEFAULT_PADDING).unwrap();
        let m = |b: &BasisSpec, g: &QuadratureGrid| {
            let s = evaluate_basis(b, g).unwrap();
            let mut scaled = s.clone();
            for p in 0..g.len() {
                let w = g.weights[p] * f(&g.nodes.row(p).to_vec());
                scaled.row_mut(p).mapv_inplace(|v| v * w);
            }
            s.t().mapv(|v| v.conj()).dot(&scaled)
        };
        let (a, bm) = (m(&b1, &g1), m(&b2, &g2));
        let diff = a.iter().zip(bm.iter()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "modes {modes}: {diff}");
    }
}

#[test]
fn quadrature_reproduces_x_squared_elements() {
    let (b, g) = build_hermite_basis(1, 10, 1.0).unwrap();
    let s = evaluate_basis(&b, &g).unwrap();
    for j in 0..10 {
        for k in 0..10 {
            let v: Complex64 = (0..g.len()).map(|p| g.weights[p] * s[[p, j]].conj() * g.nodes[[p, 0]].powi(2) * s[[p, k]]).sum();
            assert!((v.re - x_squared_element(j, k)).abs() < 1e-11 && v.im.abs() < 1e-14);
        }
    }
}

#[test]
fn gauss_hermite_integrates_the_gaussian() {
    for n in [1, 5, 30, 80] {
        let r = gauss_hermite(n);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * (-t * t).exp()).sum();
        assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-12 * n as f64, "n {n}");
    }
}
