mod common;

use common::{adjoint, c, hausdorff, jacobi_largest_singular_value, random_matrix, random_unitary};
use num_complex::Complex64;
use proptest::prelude::*;
use spectral_lab::basis::{build_hermite_basis, build_landau_basis};
use spectral_lab::eigen::eigenvalues_fast;
use spectral_lab::norms::opnorm;
use spectral_lab::operator::*;
use spectral_lab::phase_space::weyl::{hermitian_defect, WeylGrid};
use spectral_lab::phase_space::*;
use spectral_lab::potential::{PotentialSpec, VectorStructure};
use std::sync::Arc;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn amp() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
}

fn wrap(m: ndarray::Array2<Complex64>) -> OperatorMatrix {
    let (b, _) = build_hermite_basis(1, m.nrows(), 1.0).unwrap();
    OperatorMatrix::new(m, Arc::new(b), HermitianFlag::Unknown).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn multiplication_is_linear(a in amp(), b in amp(), alpha in amp(), beta in amp(), s in 0.5..3.0f64) {
        let (basis, grid) = build_hermite_basis(1, 10, 1.0).unwrap();
        let disc = Discretization::new(basis, grid).unwrap();
        let f: Vec<Complex64> = disc.grid.nodes.column(0).iter().map(|x| a * (-x * x / s).exp()).collect();
        let g: Vec<Complex64> = disc.grid.nodes.column(0).iter().map(|x| b / (1.0 + x * x)).collect();
        let mix: Vec<Complex64> = f.iter().zip(&g).map(|(u, v)| alpha * u + beta * v).collect();
        let lhs = disc.multiplication_matrix(&mix);
        let rhs = disc.multiplication_matrix(&f).mapv(|v| alpha * v) + disc.multiplication_matrix(&g).mapv(|v| beta * v);
        let d = (&lhs - &rhs).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-12, "{}", d);
    }

    #[test]
    fn amplitude_scales_assembled_potentials(a in amp(), t in -3.0..3.0f64) {
        let (basis, grid) = build_hermite_basis(2, 5, 1.0).unwrap();
        let disc = Discretization::new(basis, grid).unwrap();
        let v = PotentialSpec::gaussian(a, 1.3);
        let m = assemble_multiplication(&v, &disc).unwrap().entries;
        let mt = assemble_multiplication(&v.scaled(c(t, 0.0)), &disc).unwrap().entries;
        let d = (&mt - &m.mapv(|z| z * t)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn hamiltonian_derivative_is_linear(
        ca in prop::collection::vec((-2.0..2.0f64, 0..4i32, 0..4i32), 1..4),
        cb in prop::collection::vec((-2.0..2.0f64, 0..4i32, 0..4i32), 1..4),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
        x in -3.0..3.0f64,
        xi in -3.0..3.0f64,
    ) {
        let terms = |t: &[(f64, i32, i32)], s: f64| t.iter().map(|(k, p, q)| (c(k * s, 0.0), *p, *q)).collect::<Vec<_>>();
        let a = SymbolField::polynomial_1d("a", terms(&ca, 1.0));
        let b = SymbolField::polynomial_1d("b", terms(&cb, 1.0));
        let mut joint = terms(&ca, alpha);
        joint.extend(terms(&cb, beta));
        let ab = SymbolField::polynomial_1d("ab", joint);
        let lhs = hamiltonian_derivative(&ab, &[x], &[xi]);
        let rhs = alpha * hamiltonian_derivative(&a, &[x], &[xi]) + beta * hamiltonian_derivative(&b, &[x], &[xi]);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn real_potentials_assemble_hermitian(w in -2.0..2.0f64, v in -2.0..2.0f64, e in -1.0..1.0f64, width in 0.5..2.0f64) {
        let (basis, grid) = build_hermite_basis(1, 12, 1.0).unwrap();
        let disc = Discretization::new(basis, grid).unwrap();
        let a1 = PotentialSpec::gaussian(c(e, 0.0), width).with_vector(VectorStructure::Directed { direction: vec![1.0] });
        let m = assemble_full(&Model::Oscillator { n: 1 }, &PotentialSpec::gaussian(c(w, 0.0), 2.0), &a1, &PotentialSpec::gaussian(c(v, 0.0), width), &disc).unwrap();
        prop_assert!(m.hermitian_defect() <= 1e-10 * (1.0 + m.max_abs()));
    }

    #[test]
    fn real_rotational_landau_assembly_is_hermitian(e in -1.0..1.0f64, v in -2.0..2.0f64) {
        let (basis, grid) = build_landau_basis(1.0, 3, 3).unwrap();
        let disc = Discretization::new(basis, grid).unwrap();
        let a1 = PotentialSpec::gaussian(c(e, 0.0), 1.0).with_vector(VectorStructure::Rotational);
        let m = assemble_full(&Model::Landau { b0: 1.0 }, &PotentialSpec::zero(), &a1, &PotentialSpec::gaussian(c(v, 0.0), 1.0), &disc).unwrap();
        prop_assert!(m.hermitian_defect() <= 1e-10 * (1.0 + m.max_abs()));
    }

    #[test]
    fn two_two_norm_is_the_largest_singular_value(n in 2..9usize, seed in 0..10_000u64) {
        let m = random_matrix(n, seed);
        let est = opnorm(&m, 2.0, 2.0, None, None, seed).unwrap().value;
        let svd = jacobi_largest_singular_value(&m);
        prop_assert!((est - svd).abs() <= 1e-8 * svd);
    }

    #[test]
    fn spectrum_is_similarity_invariant(n in 2..12usize, seed in 0..10_000u64) {
        let m = random_matrix(n, seed);
        let u = random_unitary(n, seed + 1);
        let a = eigenvalues_fast(&wrap(m.clone())).unwrap();
        let b = eigenvalues_fast(&wrap(adjoint(&u).dot(&m.dot(&u)))).unwrap();
        prop_assert!(hausdorff(&a.eigenvalues, &b.eigenvalues) < 1e-8);
    }

    #[test]
    fn real_symbols_quantize_to_hermitian_matrices(
        terms in prop::collection::vec((-1.0..1.0f64, 0..3i32, 0..3i32), 1..5),
    ) {
        let sym = SymbolField::polynomial_1d("p", terms.iter().map(|(k, p, q)| (c(*k, 0.0), *p, *q)).collect());
        let m = weyl_quantize_1d(&sym, &WeylGrid::new(64, 6.0).unwrap()).unwrap();
        let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(hermitian_defect(&m) <= 1e-9 * (1.0 + scale));
    }
}
