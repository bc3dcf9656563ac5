//! Simulates the outlier of `W/√N + diag(θ, 0, ..., 0)` and compares both
//! fluctuation statistics with their limit laws.
//!
//! cargo run --release --example outlier_fluctuations [gaussian|uniform|laplace] [N] [trials]

use spiked_wigner::experiments::{self, ExperimentConfig, ExperimentKind};
use spiked_wigner::measures::{EntryKind, EntryLaw};
use spiked_wigner::spike;
use spiked_wigner::stats;

fn main() -> spiked_wigner::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind = match args.next().as_deref() {
        Some("uniform") => EntryKind::Uniform,
        Some("laplace") => EntryKind::Laplace,
        _ => EntryKind::Gaussian,
    };
    let law = EntryLaw::new(kind, 1.0)?;
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Eigenvector, law, 1);
    cfg.n = args.next().and_then(|a| a.parse().ok()).unwrap_or(300);
    cfg.trials = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);

    let (vectors, values) = experiments::run_outlier_fluctuations(&cfg)?;
    let p = cfg.prediction()?;
    let r = spike::residue_variance(&cfg.limit_measure()?, cfg.theta, &law)?;
    let phi = stats::summarize(&vectors.values())?;
    let xi = stats::summarize(&values.values())?;
    println!("N = {}, {} accepted trials, {:.1} s", cfg.n, vectors.accepted(), vectors.wall_seconds);
    println!(
        "Phi_N: variance {:.4} ± {:.4}; closed form {:.4}; residue form {:.4}",
        phi.variance,
        phi.stderr_variance,
        p.eigenvector_limit_variance(),
        p.c_eigenvector.powi(2) * law.sigma2() + r.var_z
    );
    println!("Xi_N:  variance {:.4} ± {:.4}; limit {:.4}", xi.variance, xi.stderr_variance, p.eigenvalue_limit_variance());
    let mut ecfg = cfg.clone();
    ecfg.kind = ExperimentKind::Eigenvalue;
    let ks = stats::ks_statistic(&values.values(), &experiments::reference_handle(&ecfg)?)?;
    println!("Xi_N KS against its limit: {ks:.4}");
    Ok(())
}
