//! Cross-module checks at small sizes.

use num_complex::Complex64;
use proptest::prelude::*;
use spiked_wigner::experiments::{self, ExperimentConfig, ExperimentKind};
use spiked_wigner::freeconv::FreeConvolution;
use spiked_wigner::measures::{EntryLaw, SpectralMeasure};
use spiked_wigner::rmt::{self, DeformationSpec, OutlierOptions, Rotation};
use spiked_wigner::spike;

#[test]
fn outlier_location_tracks_prediction() {
    let nu = SpectralMeasure::uniform(-1.0, 1.0).unwrap();
    let law = EntryLaw::uniform(1.0);
    let n = 400;
    let spec = DeformationSpec::new(2.5, nu.discretize_quantiles(n - 1).unwrap(), Rotation::None).unwrap();
    let p = spike::predict(&nu, 2.5, &law).unwrap();
    let gap = 0.5 * spike::distance_to_bulk(&nu, 1.0, 2.5).unwrap();
    let mut lambdas = Vec::new();
    for seed in 0..10 {
        let s = rmt::sample_deformed(n, &spec, &law, seed).unwrap();
        let e = rmt::outlier_eigenpair(&s, p.rho, &OutlierOptions::with_gap(gap)).unwrap();
        lambdas.push(e.lambda);
    }
    let mean = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
    assert!((mean - p.rho).abs() < 0.05, "{mean} vs {}", p.rho);
}

#[test]
fn rotated_block_gives_the_same_eigenvalue_law() {
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Eigenvalue, EntryLaw::gaussian(1.0), 3);
    cfg.n = 100;
    cfg.trials = 80;
    cfg.measure = SpectralMeasure::discrete(&[(-0.5, 0.5), (0.5, 0.5)]).unwrap();
    let handle = experiments::reference_handle(&cfg).unwrap();
    let plain = experiments::run_eigenvalue_fluctuations(&cfg).unwrap();
    cfg.rotation = Rotation::Haar(4);
    let rotated = experiments::run_eigenvalue_fluctuations(&cfg).unwrap();
    for set in [&plain, &rotated] {
        // 99.9% KS critical value at n = 80 is about 0.22
        let ks = spiked_wigner::stats::ks_statistic(&set.values(), &handle).unwrap();
        assert!(ks < 0.22, "{ks}");
    }
    assert_ne!(plain.values(), rotated.values());
}

#[test]
fn resolvent_limit_matches_simulation_at_3i() {
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Resolvent, EntryLaw::laplace(1.0), 21);
    cfg.n = 300;
    cfg.trials = 400;
    cfg.z_points = vec![[0.0, 3.0], [0.0, 0.5]];
    let set = experiments::run_resolvent_clt(&cfg).unwrap();
    let abs2 = |k: usize| -> Vec<f64> { set.rows.iter().map(|r| r[2 * k].powi(2) + r[2 * k + 1].powi(2)).collect() };
    let s3 = spiked_wigner::stats::summarize(&abs2(0)).unwrap();
    let s05 = spiked_wigner::stats::summarize(&abs2(1)).unwrap();
    let (e_abs, _) = experiments::resolvent_limit_moments(&cfg.measure, &cfg.law, 2.0, Complex64::new(0.0, 3.0)).unwrap();
    assert!((s3.mean - e_abs).abs() < 3.0 * s3.stderr_mean + 0.02 * e_abs, "{} vs {e_abs}", s3.mean);
    assert!(s3.mean < s05.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_convolution_is_shift_equivariant(shift in -2.0f64..2.0, x in -3.0f64..3.0, y in 0.2f64..3.0) {
        let nu = SpectralMeasure::discrete(&[(-1.0, 0.3), (0.5, 0.7)]).unwrap();
        let a = FreeConvolution::new(nu.clone(), 0.7).unwrap();
        let b = FreeConvolution::new(nu.shifted(shift), 0.7).unwrap();
        let z = Complex64::new(x, y);
        let ga = a.subordinated_g(z, 0).unwrap();
        let gb = b.subordinated_g(z + shift, 0).unwrap();
        prop_assert!((ga - gb).norm() < 1e-9);
    }

    #[test]
    fn outlier_eigenvector_is_unit_and_overlap_bounded(seed in 0u64..1000) {
        let spec = DeformationSpec::new(3.0, vec![0.0; 59], Rotation::None).unwrap();
        let s = rmt::sample_deformed(60, &spec, &EntryLaw::laplace(1.0), seed).unwrap();
        let e = rmt::outlier_eigenpair(&s, 10.0 / 3.0, &OutlierOptions::with_gap(0.6)).unwrap();
        let ov = rmt::spike_overlap(&e.vector).unwrap();
        prop_assert!((0.0..=1.0).contains(&ov));
        prop_assert!(e.relative_residual < 1e-8);
    }
}
