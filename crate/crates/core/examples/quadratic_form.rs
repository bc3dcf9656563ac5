//! Covariances of centered quadratic forms in the resolvent of a diagonal
//! matrix, against their limits.
//!
//! cargo run --release --example quadratic_form

use spiked_wigner::experiments::{self, ExperimentConfig, ExperimentKind};
use spiked_wigner::measures::{EntryLaw, SpectralMeasure};

fn main() -> spiked_wigner::Result<()> {
    let mut cfg = ExperimentConfig::desk(ExperimentKind::QuadraticForm, EntryLaw::uniform(1.0), 5);
    cfg.n = 1000;
    cfg.trials = 1000;
    cfg.measure = SpectralMeasure::uniform(-1.0, 1.0)?;
    cfg.z_pairs = vec![[[0.0, 2.0], [0.0, 2.0]], [[1.0, 2.0], [0.0, 3.0]]];
    cfg.n_list = vec![250, 500, 1000];
    let r = experiments::run_quadratic_form_clt(&cfg)?;
    println!("E|y|^4 = {}", r.complex_fourth_moment);
    for e in &r.entries {
        println!(
            "{:?} {:?} conj={}: empirical ({:.5}, {:.5}) limit ({:.5}, {:.5}) z = {:.2}",
            e.z1, e.z2, e.conjugate, e.empirical[0], e.empirical[1], e.predicted[0], e.predicted[1], e.z_score
        );
    }
    for (n, c) in &r.bound_ratios {
        println!("N = {n}: E|Y*BY - Tr B|^2 / Tr B*B = {c:.4}");
    }
    Ok(())
}
