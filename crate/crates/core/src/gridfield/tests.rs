use super::*;
use crate::hilbert::inner_product;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn grid1(lo: f64, hi: f64, points: usize) -> Arc<Grid> {
    Arc::new(Grid::uniform_1d(lo, hi, points, Quadrature::Trapezoid).unwrap())
}

#[test]
fn trapezoid_weights() {
    let g = Grid::uniform_1d(0.0, 1.0, 5, Quadrature::Trapezoid).unwrap();
    assert_eq!(g.weights(), &[0.125, 0.25, 0.25, 0.25, 0.125]);
    assert_eq!(g.point(4), &[1.0]);
    let m = Grid::uniform_1d(0.0, 1.0, 4, Quadrature::Midpoint).unwrap();
    assert_eq!(m.weights(), &[0.25; 4]);
    assert_eq!(m.point(0), &[0.125]);
}

#[test]
fn grid_validation() {
    let bad = |axes: Vec<Axis>, weights: Option<Vec<f64>>| {
        Grid::new(GridSpec { axes, quadrature: Quadrature::Trapezoid, weights }).unwrap_err()
    };
    let ax = |lo, hi, points| Axis { lo, hi, points };
    assert!(matches!(bad(vec![ax(1.0, 0.0, 5)], None), PcsftError::InvalidGrid(_)));
    assert!(matches!(bad(vec![ax(0.0, 1.0, 1)], None), PcsftError::InvalidGrid(_)));
    assert!(matches!(bad(vec![ax(0.0, f64::INFINITY, 5)], None), PcsftError::InvalidGrid(_)));
    assert!(matches!(bad(vec![], None), PcsftError::InvalidGrid(_)));
    assert!(matches!(bad(vec![ax(0.0, 1.0, 2); 3], None), PcsftError::InvalidGrid(_)));
    assert!(matches!(bad(vec![ax(0.0, 1.0, 3)], Some(vec![0.75, -0.25, 0.5])), PcsftError::InvalidGrid(_)));
    assert!(matches!(bad(vec![ax(0.0, 1.0, 3)], Some(vec![0.25, 0.25, 0.25])), PcsftError::InvalidGrid(_)));
    assert!(matches!(bad(vec![ax(0.0, 1.0, 3)], Some(vec![0.5, 0.5])), PcsftError::InvalidGrid(_)));
    let ok = Grid::new(GridSpec {
        axes: vec![ax(0.0, 1.0, 3)],
        quadrature: Quadrature::Trapezoid,
        weights: Some(vec![0.2, 0.6, 0.2]),
    });
    assert!(ok.is_ok());
}

#[test]
fn weights_sum_to_volume_2d() {
    let g = Grid::new(GridSpec {
        axes: vec![Axis { lo: -1.0, hi: 2.0, points: 7 }, Axis { lo: 0.0, hi: 0.5, points: 4 }],
        quadrature: Quadrature::Trapezoid,
        weights: None,
    })
    .unwrap();
    assert_eq!(g.len(), 28);
    assert!((pairwise_sum(g.weights()) - 1.5).abs() < 1e-15);
    assert_eq!(g.point(3), &[-1.0, 0.5]);
    assert_eq!(g.point(4), &[-0.5, 0.0]);
}

#[test]
fn inner_product_examples() {
    let g = grid1(0.0, 1.0, 101);
    let one = GridField::from_fn(g.clone(), |_| c(1.0)).unwrap();
    assert!((grid_inner_product(&one, &one).unwrap() - c(1.0)).norm() < 1e-14);

    let g = grid1(0.0, 1.0, 201);
    let s1 = GridField::from_fn(g.clone(), |x| c((PI * x[0]).sin())).unwrap();
    let s2 = GridField::from_fn(g.clone(), |x| c((2.0 * PI * x[0]).sin())).unwrap();
    assert!(grid_inner_product(&s1, &s2).unwrap().norm() < 1e-4);

    let zero = GridField::zeros(g.clone());
    assert_eq!(grid_inner_product(&zero, &s1).unwrap(), c(0.0));
}

#[test]
fn grid_mismatch() {
    let a = GridField::zeros(grid1(0.0, 1.0, 11));
    let b = GridField::zeros(grid1(0.0, 2.0, 11));
    assert_eq!(grid_inner_product(&a, &b).unwrap_err(), PcsftError::GridMismatch);
    // equal-valued grids behind different Arcs are the same grid
    let c2 = GridField::zeros(grid1(0.0, 1.0, 11));
    assert!(grid_inner_product(&a, &c2).is_ok());
    let k = GridKernel::identity(grid1(0.0, 2.0, 11));
    assert_eq!(kernel_quadratic_form(&k, &a).unwrap_err(), PcsftError::GridMismatch);
}

#[test]
fn energy_examples() {
    let g = grid1(0.0, 1.0, 11);
    assert_eq!(grid_field_energy(&GridField::zeros(g.clone())), 0.0);
    let one = GridField::from_fn(g, |_| c(1.0)).unwrap();
    assert!((grid_field_energy(&one) - 1.0).abs() < 1e-15);

    let g = grid1(-8.0, 8.0, 401);
    let phi = GridField::from_fn(g, gaussian_ground_state).unwrap();
    assert!((grid_field_energy(&phi) - 1.0).abs() < 1e-6);
}

#[test]
fn ground_state_energy_2d() {
    let axis = Axis { lo: -8.0, hi: 8.0, points: 161 };
    let g = Arc::new(Grid::new(GridSpec { axes: vec![axis, axis], quadrature: Quadrature::Trapezoid, weights: None }).unwrap());
    let phi = GridField::from_fn(g, gaussian_ground_state).unwrap();
    assert!((grid_field_energy(&phi) - 1.0).abs() < 1e-6);
}

#[test]
fn kernel_form_examples() {
    let g = grid1(-8.0, 8.0, 401);
    let phi = GridField::from_fn(g.clone(), gaussian_ground_state).unwrap();

    let id = GridKernel::identity(g.clone());
    let e = kernel_quadratic_form(&id, &phi).unwrap();
    assert!((e - grid_field_energy(&phi)).abs() < 1e-14);

    // ∫ x² |φ|² dx = ½ for the normalized Gaussian
    let x2 = GridKernel::multiplication(g.clone(), |x| x[0] * x[0]);
    assert!((kernel_quadratic_form(&x2, &phi).unwrap() - 0.5).abs() < 1e-5);

    assert_eq!(kernel_quadratic_form(&x2, &GridField::zeros(g)).unwrap(), 0.0);
}

#[test]
fn dense_kernel_matches_double_quadrature() {
    let g = grid1(0.0, 1.0, 21);
    let k = GridKernel::from_fn(g.clone(), |x, y| Complex64::new((-(x[0] - y[0]).powi(2)).exp(), 0.3 * (x[0] - y[0]))).unwrap();
    let phi = GridField::from_fn(g.clone(), |x| Complex64::new(x[0], 1.0 - x[0] * x[0])).unwrap();
    let w = g.weights();
    let mut direct = Complex64::new(0.0, 0.0);
    for i in 0..g.len() {
        for j in 0..g.len() {
            direct += w[i] * w[j] * phi.values()[i].conj() * k.values()[(i, j)] * phi.values()[j];
        }
    }
    let got = kernel_quadratic_form(&k, &phi).unwrap();
    assert!((got - direct.re).abs() < 1e-13 && direct.im.abs() < 1e-13);
}

#[test]
fn non_hermitian_kernel_rejected() {
    let g = grid1(0.0, 1.0, 5);
    let err = GridKernel::from_fn(g, |x, y| c(x[0] - 2.0 * y[0])).unwrap_err();
    assert!(matches!(err, PcsftError::NonHermitian { .. }));
}

#[test]
fn refinement_order_trapezoid() {
    // |e^{x/2}|² = e^x on [0, 1]: not periodic, so the trapezoid rule is O(h²)
    let t = refinement_sweep(0.0, 1.0, &[51, 101, 201, 401, 801], Quadrature::Trapezoid, |x| c((0.5 * x).exp()), std::f64::consts::E - 1.0).unwrap();
    assert!(t.min_order() >= 1.8, "{:?}", t.orders);
    let m = refinement_sweep(0.0, 1.0, &[50, 100, 200, 400, 800], Quadrature::Midpoint, |x| c((0.5 * x).exp()), std::f64::consts::E - 1.0).unwrap();
    assert!(m.min_order() >= 1.8, "{:?}", m.orders);
}

#[test]
fn random_field_zero_covariance() {
    let g = grid1(0.0, 1.0, 9);
    let b = grid_random_field(g, &CMatrix::zeros(9), 20, 1).unwrap();
    assert!((0..b.len()).all(|n| b.field(n).values().iter().all(|z| z.norm() == 0.0)));
}

#[test]
fn random_field_rank_one_mode() {
    let g = grid1(-4.0, 4.0, 33);
    let mode: Vec<Complex64> = (0..g.len()).map(|i| gaussian_ground_state(g.point(i))).collect();
    let cov = CMatrix::outer(&mode, &mode).unwrap();
    let batch = grid_random_field(g.clone(), &cov, 200, 3).unwrap();
    let psi = GridField::new(g.clone(), mode).unwrap();
    let norm = grid_field_energy(&psi);
    for n in 0..batch.len() {
        let phi = batch.field(n);
        let coef = grid_inner_product(&psi, &phi).unwrap() / norm;
        let resid: f64 = phi
            .values()
            .iter()
            .zip(psi.values())
            .map(|(a, b)| (a - coef * b).norm())
            .fold(0.0, f64::max);
        assert!(resid < 1e-10 * (1.0 + coef.norm()), "sample {n}: {resid}");
    }
}

#[test]
fn random_field_white_noise_variances() {
    let g = grid1(0.0, 1.0, 11);
    let sigma2: Vec<f64> = (0..11).map(|i| 0.5 + g.point(i)[0]).collect();
    let batch = grid_random_field(g.clone(), &CMatrix::from_real_diag(&sigma2), 100_000, 8).unwrap();
    let n = batch.len() as f64;
    for (i, &s2) in sigma2.iter().enumerate() {
        let var = (0..batch.len()).map(|k| batch.field(k).values()[i].norm_sqr()).sum::<f64>() / n;
        // |φ_i|² is exponential with mean σ², so its standard error is σ²/√N
        let se = s2 / n.sqrt();
        assert!((var - s2).abs() < 5.0 * se, "point {i}: {var} vs {s2}");
    }
}

#[test]
fn grid_batch_binary_round_trip() {
    let g = Arc::new(
        Grid::new(GridSpec {
            axes: vec![Axis { lo: 0.0, hi: 1.0, points: 3 }],
            quadrature: Quadrature::Trapezoid,
            weights: Some(vec![0.2, 0.6, 0.2]),
        })
        .unwrap(),
    );
    let batch = grid_random_field(g, &CMatrix::identity(3), 5, 2).unwrap();
    let bytes = batch.to_bytes();
    let back = GridBatch::from_bytes(&bytes).unwrap();
    assert_eq!(back.grid().spec(), batch.grid().spec());
    for n in 0..5 {
        let (a, b) = (batch.field(n), back.field(n));
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() <= 1e-15 * x.norm().max(1.0));
        }
    }
    assert_eq!(back.to_bytes(), bytes);
    assert!(GridBatch::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[12] = 7;
    assert!(GridBatch::from_bytes(&bad).is_err());
}

#[test]
fn grid_spec_json() {
    let spec: GridSpec = serde_json::from_str(r#"{"axes":[{"lo":-8,"hi":8,"points":401}],"quadrature":"trapezoid"}"#).unwrap();
    assert!(Grid::new(spec).is_ok());
    let default_rule: GridSpec = serde_json::from_str(r#"{"axes":[{"lo":0,"hi":1,"points":3}]}"#).unwrap();
    assert_eq!(default_rule.quadrature, Quadrature::Trapezoid);
    assert!(serde_json::from_str::<GridSpec>(r#"{"axes":[],"rule":"x"}"#).is_err());
    assert!(serde_json::from_str::<GridSpec>(r#"{"axes":[{"lo":0,"hi":1,"points":3}],"quadrature":"simpson"}"#).is_err());
}

proptest! {
    #[test]
    fn embedding_is_isometric(
        points in 2usize..40,
        raw in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 40),
    ) {
        let g = grid1(-1.0, 3.0, points);
        let a = GridField::new(g.clone(), raw[..points].iter().map(|t| Complex64::new(t.0, t.1)).collect()).unwrap();
        let b = GridField::new(g.clone(), raw[..points].iter().map(|t| Complex64::new(t.2, t.3)).collect()).unwrap();
        let direct = grid_inner_product(&a, &b).unwrap();
        let embedded = inner_product(&a.embed(), &b.embed()).unwrap();
        let scale = (grid_field_energy(&a) * grid_field_energy(&b)).sqrt().max(1e-300);
        prop_assert!((direct - embedded).norm() <= 1e-14 * scale.max(1.0));
    }
}
