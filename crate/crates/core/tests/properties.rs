use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use photonqec::code_gates::{group_closure, three_photon_code, LogicalQubit};
use photonqec::fock::{enumerate_basis, DensityMatrix, FockBasis, Occupation, PureState};
use photonqec::heralded::{exp_i_hermitian, phase_gate_coeffs, EncodingCoefficients, PhaseGateParams};
use photonqec::linear_optics::{apply_transform, induced_matrix, matrix_element};
use photonqec::loss_channel::{apply_loss, KrausSet, LossParameters};
use photonqec::qec_core::{annihilators, corrected_fidelity, kl_check, CodeSubspace};
use photonqec::tomography::reconstruct_exact;
use photonqec::C64;

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `(modes, Haar-ish unitary)` from `exp(iH)` with entries in `[−π, π)`.
fn unitary(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec(-PI..PI, n * n).prop_map(move |x| exp_i_hermitian(&x, n))
}

fn modes_and_unitaries() -> impl Strategy<Value = (usize, DMatrix<C64>, DMatrix<C64>)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), unitary(n), unitary(n)))
}

fn state_on(basis: &std::sync::Arc<FockBasis>, amps: &[(f64, f64)]) -> PureState {
    let v = DVector::from_iterator(basis.len(), amps.iter().take(basis.len()).map(|&(a, b)| C64::new(a, b)));
    let n = v.norm();
    PureState::from_sector(basis.clone(), v / C64::new(n.max(1e-12), 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn induced_is_anti_homomorphic_and_unitary((n, a, b) in modes_and_unitaries(), k in 0usize..=4) {
        let basis = FockBasis::new(n, k).unwrap();
        let ra = induced_matrix(&a, &basis).unwrap();
        let rb = induced_matrix(&b, &basis).unwrap();
        let rab = induced_matrix(&(&a * &b), &basis).unwrap();
        prop_assert!(max_abs(&(rab - &rb * &ra)) < 1e-9);
        let id = DMatrix::<C64>::identity(basis.len(), basis.len());
        prop_assert!(max_abs(&(ra.adjoint() * &ra - id)) < 1e-9);
    }

    #[test]
    fn permanent_route_matches_expansion((n, a, _b) in modes_and_unitaries(), k in 0usize..=4) {
        let basis = FockBasis::new(n, k).unwrap();
        let r = induced_matrix(&a, &basis).unwrap();
        for (i, out) in basis.states().iter().enumerate() {
            for (j, input) in basis.states().iter().enumerate() {
                let p = matrix_element(&a, out, input).unwrap();
                prop_assert!((p - r[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn basis_is_a_bijection(n in 1usize..=6, k in 0usize..=5) {
        let basis = enumerate_basis(n, k).unwrap();
        prop_assert_eq!(basis.len(), binomial(n + k - 1, k));
        for (i, occ) in basis.states().iter().enumerate() {
            prop_assert_eq!(occ.photons(), k);
            prop_assert_eq!(basis.index_of(occ), Some(i));
        }
        prop_assert!(basis.states().windows(2).all(|w| w[0].0 > w[1].0));
    }

    #[test]
    fn tensor_is_associative(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3),
                             b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3),
                             c in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6)) {
        let x = state_on(&FockBasis::new(2, 2).unwrap(), &a);
        let y = state_on(&FockBasis::new(1, 1).unwrap(), &b);
        let z = state_on(&FockBasis::new(3, 2).unwrap(), &c);
        let left = x.tensor(&y).unwrap().tensor(&z).unwrap();
        let right = x.tensor(&y.tensor(&z).unwrap()).unwrap();
        prop_assert!((left.inner(&right) - C64::new(left.norm_sqr(), 0.0)).norm() < 1e-12);
        prop_assert!((left.norm_sqr() - right.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn kl_is_invariant_under_logical_rotation(v in unitary(2)) {
        let code = three_photon_code();
        let basis = code.basis().clone();
        let cols: Vec<DVector<C64>> = (0..2).map(|j| code.vectors() * v.column(j)).collect();
        let rotated = CodeSubspace::from_vectors(basis.clone(), &cols).unwrap();
        let errors = annihilators(&basis).unwrap();
        let (r0, r1) = (kl_check(&code, &errors).unwrap(), kl_check(&rotated, &errors).unwrap());
        prop_assert!((r0.residual - r1.residual).abs() < 1e-12);
        prop_assert!(max_abs(&(r0.g_matrix - r1.g_matrix)) < 1e-12);
    }

    #[test]
    fn g_matrix_transforms_by_conjugation(omega in unitary(3), amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 10)) {
        // one-dimensional code so that G is the normalized a_i†a_j expectation
        let basis = FockBasis::new(3, 3).unwrap();
        let psi = state_on(&basis, &amps);
        let errors = annihilators(&basis).unwrap();
        let g = kl_check(&CodeSubspace::new(std::slice::from_ref(&psi)).unwrap(), &errors).unwrap().g_matrix;
        let moved = apply_transform(&omega, &psi).unwrap();
        let g2 = kl_check(&CodeSubspace::new(&[moved]).unwrap(), &errors).unwrap().g_matrix;
        // a_i† ↦ Σ_j Ω_ij b_j†, so ⟨b_k† b_l⟩ = Σ Ω_ik* ⟨a_i†a_j⟩ Ω_jl
        prop_assert!(max_abs(&(g2 - omega.adjoint() * g * &omega)) < 1e-9);
    }

    #[test]
    fn uniform_loss_commutes_with_passive_unitaries(omega in unitary(3), gamma in 0.0..1.5f64,
                                                      amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 10)) {
        let basis = FockBasis::new(3, 3).unwrap();
        let psi = state_on(&basis, &amps);
        let loss = LossParameters::uniform(gamma, 3).unwrap();
        let a = apply_loss(&DensityMatrix::from_pure(&apply_transform(&omega, &psi).unwrap()), &loss).unwrap();
        let lost = apply_loss(&DensityMatrix::from_pure(&psi), &loss).unwrap();
        for block in lost.blocks() {
            let r = induced_matrix(&omega, &block.basis).unwrap();
            let rotated = &r * &block.matrix * r.adjoint();
            let other = a.block(block.basis.photons()).unwrap();
            prop_assert!(max_abs(&(rotated - &other.matrix)) < 1e-10);
        }
    }

    #[test]
    fn kraus_sets_are_complete(gammas in prop::collection::vec(0.0..2.0f64, 1..=3), k in 0usize..=6) {
        let basis = FockBasis::new(gammas.len(), k).unwrap();
        let set = KrausSet::for_sector(&LossParameters::per_mode(gammas).unwrap(), &basis).unwrap();
        prop_assert!(set.completeness_error() < 1e-12);
    }

    #[test]
    fn corrected_fidelity_decreases(g1 in 0.0..0.5f64, dg in 1e-4..0.5f64) {
        let code = three_photon_code();
        let (f1, f2) = (corrected_fidelity(&code, g1).unwrap(), corrected_fidelity(&code, g1 + dg).unwrap());
        prop_assert!(f2 < f1 + 1e-14);
    }

    #[test]
    fn tomography_is_equivariant(theta in 0.0..PI, phi in -PI..PI, g in 0usize..12) {
        let q = LogicalQubit::new(C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi));
        let gate = &group_closure().unwrap()[g];
        let rho = reconstruct_exact(&DensityMatrix::from_pure(&q.to_state())).unwrap();
        let moved = gate.gate.apply(&q).normalized().unwrap();
        let rho_moved = reconstruct_exact(&DensityMatrix::from_pure(&moved.to_state())).unwrap();
        let u = gate.gate.normalized();
        prop_assert!(max_abs(&(rho_moved - &u * rho * u.adjoint())) < 1e-10);
    }

    #[test]
    fn mirrored_phase_conjugates_the_gate(r1 in 0.0..=1.0f64, r2 in 0.0..=1.0f64, phi in -PI..PI) {
        let a = phase_gate_coeffs(&PhaseGateParams::new(r1, r2, phi).unwrap());
        let b = phase_gate_coeffs(&PhaseGateParams::new(r1, r2, -phi).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.conj() - y).norm() < 1e-14);
        }
    }

    #[test]
    fn box_phase_keeps_success_rate(u in unitary(4), theta in -PI..PI) {
        let p = EncodingCoefficients::of(&u).unwrap().success_rate();
        let q = EncodingCoefficients::of(&(u * C64::from_polar(1.0, theta))).unwrap().success_rate();
        prop_assert!((p - q).abs() < 1e-14);
    }
}

#[test]
fn occupation_helpers_roundtrip() {
    let o = Occupation::from([2, 0, 1]);
    assert_eq!(o.concat(&Occupation::from([1])).0, vec![2, 0, 1, 1]);
    assert_eq!(o.select(&[2, 0]).0, vec![1, 2]);
}
