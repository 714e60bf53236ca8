// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use ramopt::rng::substream;
use ramopt::tomography::{
    analyzer_curve, mle_reconstruct, sam_qst, simulate_homodyne, total_fidelity, uhlmann_fidelity,
    visibility, DensityMatrix, MleConfig, PolarizationCounts, NO_CLONING_LIMIT, STATE_TOL,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn assert_physical(rho: &DensityMatrix) {
    let m = rho.entries();
    assert!((m.trace().re - 1.0).abs() < STATE_TOL);
    assert!((m - m.adjoint()).norm() < STATE_TOL);
    let eig = nalgebra::linalg::SymmetricEigen::new(hermitian_real_embedding(m));
    assert!(eig.eigenvalues.iter().all(|e| *e > -STATE_TOL));
}

/// Real 2d×2d embedding [[Re, −Im], [Im, Re]]; its spectrum doubles the
/// Hermitian spectrum.
fn hermitian_real_embedding(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let d = m.nrows();
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let v = m[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}

#[test]
fn homodyne_statistics() {
    let vac = simulate_homodyne(c(0.0, 0.0), 5000, 1.0, 3).unwrap();
    let n = vac.len() as f64;
    let mean = vac.iter().map(|s| s.x).sum::<f64>() / n;
    let var = vac.iter().map(|s| (s.x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 3.0 * 0.5f64.sqrt() / n.sqrt());
    assert!((var - 0.5).abs() < 0.025);

    let alpha = Complex64::from_polar(0.9f64.sqrt(), 0.7);
    let samples = simulate_homodyne(alpha, 5000, 1.0, 4).unwrap();
    // least-squares amplitude of x against cos(θ − arg α)
    let (sxc, scc) = samples.iter().fold((0.0, 0.0), |(a, b), s| {
        let cth = (s.theta - alpha.arg()).cos();
        (a + s.x * cth, b + cth * cth)
    });
    let amplitude = sxc / scc;
    let se = (0.5 / scc).sqrt();
    assert!(
        (amplitude - 2f64.sqrt() * alpha.norm()).abs() < 3.0 * se,
        "{amplitude}"
    );
    assert!((2f64.sqrt() * alpha.norm() - 1.342).abs() < 1e-3);
    assert_eq!(samples, simulate_homodyne(alpha, 5000, 1.0, 4).unwrap());
}

#[test]
fn vacuum_reconstruction() {
    let samples = simulate_homodyne(c(0.0, 0.0), 5000, 1.0, 8).unwrap();
    let result = mle_reconstruct(&samples, &MleConfig::default()).unwrap();
    let vacuum = DensityMatrix::coherent(c(0.0, 0.0), 10).unwrap();
    assert!(uhlmann_fidelity(&result.rho, &vacuum).unwrap() >= 0.99);
    assert!(result.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
    assert_physical(&result.rho);
    assert_eq!(result.log_likelihood.len(), 301);
}

#[test]
fn single_iteration_stays_physical() {
    let samples = simulate_homodyne(c(0.5, 0.5), 500, 1.0, 1).unwrap();
    let result = mle_reconstruct(
        &samples,
        &MleConfig {
            n_max: 6,
            iterations: 1,
        },
    )
    .unwrap();
    assert_physical(&result.rho);
    assert!(mle_reconstruct(&[], &MleConfig::default()).is_err());
}

#[test]
fn more_samples_reconstruct_better() {
    let alpha = c(0.9f64.sqrt(), 0.0);
    let truth = DensityMatrix::coherent(alpha, 10).unwrap();
    let cfg = MleConfig {
        n_max: 10,
        iterations: 100,
    };
    let median = |n: usize| {
        let mut f: Vec<f64> = (0..20)
            .map(|seed| {
                let samples = simulate_homodyne(alpha, n, 1.0, 100 + seed).unwrap();
                let rho = mle_reconstruct(&samples, &cfg).unwrap().rho;
                uhlmann_fidelity(&rho, &truth).unwrap()
            })
            .collect();
        f.sort_by(f64::total_cmp);
        0.5 * (f[9] + f[10])
    };
    let (small, large) = (median(500), median(5000));
    assert!(large > small, "median F: {small} at 500, {large} at 5000");
}

fn random_state(rng: &mut impl Rng, d: usize) -> Vec<Complex64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let v: Vec<Complex64> = (0..d)
        .map(|_| c(normal.sample(rng), normal.sample(rng)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

#[test]
fn pure_state_fidelity_is_overlap() {
    let mut rng = substream(2, "test.uhlmann");
    for _ in 0..100 {
        let psi = random_state(&mut rng, 4);
        let phi = random_state(&mut rng, 4);
        let overlap = psi
            .iter()
            .zip(&phi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm();
        let f = uhlmann_fidelity(
            &DensityMatrix::pure(&psi).unwrap(),
            &DensityMatrix::pure(&phi).unwrap(),
        )
        .unwrap();
        assert!((f - overlap).abs() < 1e-10, "{f} vs {overlap}");
    }
    let h = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let v = DensityMatrix::pure(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    assert!(uhlmann_fidelity(&h, &v).unwrap() < 1e-12);
    assert!(uhlmann_fidelity(&h, &DensityMatrix::maximally_mixed(3)).is_err());
}

#[test]
fn sam_ideal_counts() {
    let h = sam_qst(&PolarizationCounts::from_array([
        1.0, 0.0, 0.5, 0.5, 0.5, 0.5,
    ]))
    .unwrap();
    assert!((h.rho.get(0, 0) - 1.0).norm() < 1e-15 && h.rho.get(1, 1).norm() < 1e-15);
    let d = sam_qst(&PolarizationCounts::from_array([
        0.5, 0.5, 1.0, 0.0, 0.5, 0.5,
    ]))
    .unwrap();
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        assert!((d.rho.get(i, j) - 0.5).norm() < 1e-15);
    }
    assert!(sam_qst(&PolarizationCounts::from_array([
        0.0, 0.0, 0.5, 0.5, 0.5, 0.5
    ]))
    .is_err());
}

#[test]
fn sam_noisy_right_circular() {
    let s = FRAC_1_SQRT_2;
    let truth = DensityMatrix::pure(&[c(s, 0.0), c(0.0, s)]).unwrap();
    let ideal = PolarizationCounts::from_state(c(s, 0.0), c(0.0, s)).as_array();
    let mut worst = 1.0f64;
    for seed in 0..100 {
        let mut rng = substream(seed, "test.sam");
        let noise = Normal::new(1.0, 0.01).unwrap();
        let noisy = ideal.map(|v| v * noise.sample(&mut rng));
        let r = sam_qst(&PolarizationCounts::from_array(noisy)).unwrap();
        assert_physical(&r.rho);
        worst = worst.min(uhlmann_fidelity(&r.rho, &truth).unwrap());
    }
    assert!(worst >= 0.995, "worst F {worst}");
}

#[test]
fn visibility_and_products() {
    let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0)).collect();
    assert_eq!(visibility(&flat).unwrap(), 0.0);
    assert!((visibility(&analyzer_curve(0.0, 180).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    assert!((visibility(&analyzer_curve(0.035, 180).unwrap()).unwrap() - 0.93).abs() < 1e-12);
    assert!(visibility(&[(0.0, 0.0); 4]).is_err());

    assert_eq!(total_fidelity(1.0, 1.0, 1.0).unwrap(), 1.0);
    assert_eq!(total_fidelity(0.0, 0.97, 0.99).unwrap(), 0.0);
    let t = total_fidelity(0.99, 0.96, 0.974).unwrap();
    assert!((t - 0.9257).abs() < 1e-4 && t > NO_CLONING_LIMIT);
    assert!(total_fidelity(1.2, 0.9, 0.9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_symmetric_and_bounded(seed in 0u64..100_000, w in 0.0f64..1.0) {
        let mut rng = substream(seed, "test.mixed");
        let a = random_state(&mut rng, 3);
        let b = random_state(&mut rng, 3);
        let pa = DensityMatrix::pure(&a).unwrap();
        let mixed_entries = pa.entries() * c(w, 0.0) + DensityMatrix::maximally_mixed(3).entries() * c(1.0 - w, 0.0);
        let rho1 = DensityMatrix::new(mixed_entries).unwrap();
        let rho2 = DensityMatrix::pure(&b).unwrap();
        let f12 = uhlmann_fidelity(&rho1, &rho2).unwrap();
        let f21 = uhlmann_fidelity(&rho2, &rho1).unwrap();
        prop_assert!((f12 - f21).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&f12));
        prop_assert!((uhlmann_fidelity(&rho1, &rho1).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sam_exact_for_pure_states(theta in 0.0f64..std::f64::consts::PI, chi in -std::f64::consts::PI..std::f64::consts::PI) {
        let (ch, cv) = (c((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), chi));
        let truth = DensityMatrix::pure(&[ch, cv]).unwrap();
        let r = sam_qst(&PolarizationCounts::from_state(ch, cv)).unwrap();
        prop_assert!(uhlmann_fidelity(&r.rho, &truth).unwrap() >= 1.0 - 1e-12);
    }
}
