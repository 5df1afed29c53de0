use super::*;
use crate::ensemble::MixtureComponent;
use crate::hilbert::{field_energy, quadratic_form};
use crate::random::{random_density, random_hermitian, random_psd, random_state};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn herm(rows: Vec<Vec<Complex64>>) -> HermitianOperator {
    HermitianOperator::new(CMatrix::from_rows(rows).unwrap()).unwrap()
}

fn sample_generator() -> HermitianOperator {
    herm(vec![vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]])
}

fn sigma_x() -> HermitianOperator {
    herm(vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
}

fn eval_of(a: &HermitianOperator) -> impl Fn(&FieldState) -> f64 + '_ {
    move |phi| quadratic_form(&QuadraticForm::new(a.clone()), phi).unwrap()
}

/// Brute force over every coefficient vector in {±1, ±i}⁴/4 applied to
/// (q(x+y), q(x-y), q(x+iy), q(x-iy)): exactly one reproduces <x|A|y> for
/// random A, and it is the one hard-coded in `reconstruct_generator`.
#[test]
fn polarization_convention_brute_force() {
    let units = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials: Vec<(CMatrix, [f64; 4])> = (0..6)
        .map(|_| {
            let a = random_hermitian(&mut rng, 2);
            let f = QuadraticForm::new(HermitianOperator::new(a.clone()).unwrap());
            let q = |v: [Complex64; 2]| quadratic_form(&f, &FieldState::new(v.to_vec()).unwrap()).unwrap();
            let vals = [
                q([c(1.0, 0.0), c(1.0, 0.0)]),
                q([c(1.0, 0.0), c(-1.0, 0.0)]),
                q([c(1.0, 0.0), c(0.0, 1.0)]),
                q([c(1.0, 0.0), c(0.0, -1.0)]),
            ];
            (a, vals)
        })
        .collect();

    let mut matches = Vec::new();
    for a0 in units {
        for a1 in units {
            for a2 in units {
                for a3 in units {
                    let coef = [a0, a1, a2, a3];
                    let ok = trials.iter().all(|(a, vals)| {
                        let est: Complex64 = coef.iter().zip(vals).map(|(k, v)| k * v).sum::<Complex64>() * 0.25;
                        (est - a[(0, 1)]).norm() < 1e-12
                    });
                    if ok {
                        matches.push(coef);
                    }
                }
            }
        }
    }
    assert_eq!(matches, vec![[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0)]]);
}

#[test]
fn density_map_examples() {
    let p = FieldEnsemble::two_point(FieldState::basis(2, 0));
    assert_eq!(ensemble_to_density(&p).unwrap().matrix(), &CMatrix::from_real_diag(&[1.0, 0.0]));

    let p = FieldEnsemble::gaussian(CMatrix::from_real_diag(&[2.0, 2.0])).unwrap();
    assert_eq!(ensemble_to_density(&p).unwrap().matrix(), &CMatrix::from_real_diag(&[0.5, 0.5]));

    let b = CMatrix::from_rows(vec![vec![c(2.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(2.0, 0.0)]]).unwrap();
    let rho = ensemble_to_density(&FieldEnsemble::gaussian(b).unwrap()).unwrap();
    let want = CMatrix::from_rows(vec![vec![c(0.5, 0.0), c(0.25, 0.0)], vec![c(0.25, 0.0), c(0.5, 0.0)]]).unwrap();
    assert_eq!(rho.matrix(), &want);
}

#[test]
fn degenerate_ensemble_rejected() {
    let zero = FieldEnsemble::gaussian(CMatrix::zeros(2)).unwrap();
    assert_eq!(ensemble_to_density(&zero).unwrap_err(), PcsftError::DegenerateEnsemble);
    let f = QuadraticForm::energy(2);
    assert_eq!(verify_scaled_average(&zero, &f).unwrap_err(), PcsftError::DegenerateEnsemble);
    assert_eq!(amplified_variable(&f, &zero).unwrap_err(), PcsftError::DegenerateEnsemble);
    let zero_psi = FieldEnsemble::two_point(FieldState::zeros(2));
    assert_eq!(ensemble_to_density(&zero_psi).unwrap_err(), PcsftError::DegenerateEnsemble);
}

#[test]
fn observable_map_examples() {
    assert_eq!(form_to_observable(&QuadraticForm::energy(3)), HermitianOperator::identity(3));
    assert_eq!(form_to_observable(&QuadraticForm::new(HermitianOperator::zeros(2))), HermitianOperator::zeros(2));
    let a = sample_generator();
    let back = reconstruct_generator(eval_of(&a), 2).unwrap();
    assert_eq!(form_to_observable(&QuadraticForm::new(a.clone())), a);
    assert!(back.matrix().sub(a.matrix()).unwrap().max_abs() < 1e-12);
}

#[test]
fn reconstruct_examples() {
    let id = HermitianOperator::identity(3);
    let back = reconstruct_generator(eval_of(&id), 3).unwrap();
    assert!(back.matrix().sub(id.matrix()).unwrap().max_abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = HermitianOperator::new(random_hermitian(&mut rng, 5)).unwrap();
    let back = reconstruct_generator(eval_of(&a), 5).unwrap();
    assert!(back.matrix().sub(a.matrix()).unwrap().max_abs() < 1e-12);
}

#[test]
fn quartic_is_not_a_quadratic_form() {
    let quartic = |phi: &FieldState| field_energy(phi).powi(2);
    for dim in [1, 2, 5] {
        assert!(matches!(
            reconstruct_generator(quartic, dim),
            Err(PcsftError::NotAQuadraticForm { .. })
        ));
    }
}

#[test]
fn phase_sensitive_eval_is_rejected() {
    // Re(φ_0 φ_1) is real-valued but not of the form <φ|A|φ>.
    let eval = |phi: &FieldState| (phi.amplitudes()[0] * phi.amplitudes()[1]).re;
    assert!(matches!(reconstruct_generator(eval, 2), Err(PcsftError::NotAQuadraticForm { .. })));
    let nan = |_: &FieldState| f64::NAN;
    assert!(reconstruct_generator(nan, 2).is_err());
}

#[test]
fn bild_average_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let psi = random_state(&mut rng, 3);
    let f = QuadraticForm::new(HermitianOperator::new(random_hermitian(&mut rng, 3)).unwrap());
    let p = FieldEnsemble::two_point(psi.clone());
    let lhs = bild_average_exact(&p, &f).unwrap();
    let rhs = quadratic_form(&f, &psi).unwrap();
    assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));

    let a = HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap();
    let p = FieldEnsemble::gaussian(CMatrix::identity(4)).unwrap();
    let tr = a.matrix().trace().re;
    assert!((bild_average_exact(&p, &QuadraticForm::new(a)).unwrap() - tr).abs() < 1e-14);

    let p = FieldEnsemble::gaussian(CMatrix::from_real_diag(&[1.0, 2.0])).unwrap();
    assert_eq!(bild_average_exact(&p, &QuadraticForm::new(sigma_x())).unwrap(), 0.0);

    let f3 = QuadraticForm::energy(3);
    assert!(matches!(bild_average_exact(&p, &f3), Err(PcsftError::Dimension { .. })));
}

#[test]
fn qm_average_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = HermitianOperator::new(random_hermitian(&mut rng, 3)).unwrap();
    let mixed = DensityOperator::maximally_mixed(3);
    let tr = a.matrix().trace().re;
    assert!((qm_average(&mixed, &a).unwrap() - tr / 3.0).abs() < 1e-14);

    let psi = random_state(&mut rng, 3);
    let pure = DensityOperator::pure(psi.amplitudes()).unwrap();
    let born = quadratic_form(&QuadraticForm::new(a.clone()), &psi).unwrap() / field_energy(&psi);
    assert!((qm_average(&pure, &a).unwrap() - born).abs() < 1e-12);

    let rho = DensityOperator::new(
        CMatrix::from_rows(vec![vec![c(0.5, 0.0), c(0.25, 0.0)], vec![c(0.25, 0.0), c(0.5, 0.0)]]).unwrap(),
    )
    .unwrap();
    assert_eq!(qm_average(&rho, &sigma_x()).unwrap(), 0.5);
}

#[test]
fn scaled_average_two_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let psi = random_state(&mut rng, 4);
    let a = HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap();
    let r = verify_scaled_average(&FieldEnsemble::two_point(psi.clone()), &QuadraticForm::new(a.clone())).unwrap();
    let born = quadratic_form(&QuadraticForm::new(a), &psi).unwrap() / field_energy(&psi);
    assert!(r.passed);
    assert!((r.lhs - born).abs() < 1e-12 && (r.rhs - born).abs() < 1e-12);
}

#[test]
fn scaled_average_sweep_dim8() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..100 {
        let p = match i % 3 {
            0 => FieldEnsemble::gaussian(random_psd(&mut rng, 8, 1 + i % 8)).unwrap(),
            1 => FieldEnsemble::two_point(random_state(&mut rng, 8)),
            _ => FieldEnsemble::finite_mixture(vec![
                MixtureComponent { weight: 0.3, state: random_state(&mut rng, 8) },
                MixtureComponent { weight: 0.7, state: random_state(&mut rng, 8) },
            ])
            .unwrap(),
        };
        let f = QuadraticForm::new(HermitianOperator::new(random_hermitian(&mut rng, 8)).unwrap());
        let r = verify_scaled_average(&p, &f).unwrap();
        assert!(r.residual < 1e-10, "{r:?}");
    }
}

#[test]
fn amplified_variable_examples() {
    let f = QuadraticForm::new(sample_generator());
    let unit = FieldEnsemble::gaussian(CMatrix::from_real_diag(&[0.5, 0.5])).unwrap();
    assert_eq!(amplified_variable(&f, &unit).unwrap(), f);

    let two = FieldEnsemble::gaussian(CMatrix::identity(2)).unwrap();
    let g = amplified_variable(&QuadraticForm::energy(2), &two).unwrap();
    assert_eq!(g.generator, HermitianOperator::from_real_diag(&[0.5, 0.5]));

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let p = FieldEnsemble::gaussian(random_psd(&mut rng, 4, 4)).unwrap();
        let f = QuadraticForm::new(HermitianOperator::new(random_hermitian(&mut rng, 4)).unwrap());
        let g = amplified_variable(&f, &p).unwrap();
        let lhs = bild_average_exact(&p, &g).unwrap();
        let rhs = qm_average(&ensemble_to_density(&p).unwrap(), &form_to_observable(&f)).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn surjective_examples() {
    let rho = DensityOperator::maximally_mixed(2);
    let p = audit_surjective(&rho, 1.0).unwrap();
    assert_eq!(exact_covariance(&p).matrix(), rho.matrix());
    assert_eq!(ensemble_to_density(&p).unwrap(), rho);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rho = random_density(&mut rng, 6);
    let p = audit_surjective(&rho, 3.7).unwrap();
    let back = ensemble_to_density(&p).unwrap();
    assert!(back.matrix().sub(rho.matrix()).unwrap().frobenius_norm() < 1e-12);

    let psi = random_state(&mut rng, 3);
    let pure = DensityOperator::pure(psi.amplitudes()).unwrap();
    let p = audit_surjective(&pure, 2.0).unwrap();
    let batch = crate::ensemble::sample(&p, 10, 1).unwrap();
    assert_eq!(batch.len(), 10);

    for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(audit_surjective(&rho, bad), Err(PcsftError::InvalidScale(_))));
    }
}

#[test]
fn many_to_one_examples() {
    let w = audit_many_to_one(&DensityOperator::maximally_mixed(2)).unwrap();
    assert_eq!(w.image_distance, 0.0);
    assert!(w.is_distinct());
    assert_eq!(w.energies, (1.0, 5.0));

    let e1 = DensityOperator::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let w = audit_many_to_one(&e1).unwrap();
    assert_eq!(w.first.kind_name(), "gaussian");
    assert_eq!(w.second.kind_name(), "two_point");
    assert!(w.image_distance < 1e-14);
    assert!(w.distance_to_rho < 1e-12);
    assert!((w.fourth_moments.0 - 2.0).abs() < 1e-12);
    assert!((w.fourth_moments.1 - 1.0).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rho = random_density(&mut rng, 5);
    let a = ensemble_to_density(&audit_surjective(&rho, 1.0).unwrap()).unwrap();
    let b = ensemble_to_density(&audit_surjective(&rho, 5.0).unwrap()).unwrap();
    assert!(a.matrix().sub(b.matrix()).unwrap().max_abs() < 1e-14);
}

#[test]
fn correspondence_pair_sides_agree() {
    let p = FieldEnsemble::gaussian(CMatrix::from_real_diag(&[1.0, 3.0])).unwrap();
    let pair = CorrespondencePair::new(p, QuadraticForm::new(sigma_x())).unwrap();
    assert_eq!(pair.energy, 4.0);
    assert_eq!(pair.observable, sigma_x());
    let claimed = DensityOperator::new(CMatrix::from_real_diag(&[0.25, 0.75])).unwrap();
    assert_eq!(pair.density_distance(&claimed).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_map_is_scale_invariant(seed in any::<u64>(), dim in 1usize..=8, s in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_psd(&mut rng, dim, dim);
        let a = ensemble_to_density(&FieldEnsemble::gaussian(b.clone()).unwrap()).unwrap();
        let scaled = ensemble_to_density(&FieldEnsemble::gaussian(b.scale(s)).unwrap()).unwrap();
        prop_assert!(a.matrix().sub(scaled.matrix()).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn observable_map_injective_via_polarization(seed in any::<u64>(), dim in 2usize..=16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = HermitianOperator::new(random_hermitian(&mut rng, dim)).unwrap();
        let back = reconstruct_generator(eval_of(&a), dim).unwrap();
        prop_assert!(back.matrix().sub(a.matrix()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn surjective_energy_consistency(seed in any::<u64>(), dim in 2usize..=16, s in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, dim);
        let p = audit_surjective(&rho, s).unwrap();
        prop_assert!((energy_average(&p) - s).abs() <= 1e-12 * s);
        let back = ensemble_to_density(&p).unwrap();
        prop_assert!(back.matrix().sub(rho.matrix()).unwrap().frobenius_norm() < 1e-12);
    }
}
