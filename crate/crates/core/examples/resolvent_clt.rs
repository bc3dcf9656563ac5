//! Fluctuations of the (1,1) resolvent entry at a few points against the
//! limiting second moments.
//!
//! cargo run --release --example resolvent_clt

use num_complex::Complex64;
use spiked_wigner::experiments::{self, ExperimentConfig, ExperimentKind};
use spiked_wigner::measures::EntryLaw;
use spiked_wigner::stats;

fn main() -> spiked_wigner::Result<()> {
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Resolvent, EntryLaw::laplace(1.0), 8);
    cfg.n = 300;
    cfg.trials = 300;
    cfg.z_points = vec![[0.0, 3.0], [0.0, 1.0], [0.0, 0.5]];
    let set = experiments::run_resolvent_clt(&cfg)?;
    for (k, p) in cfg.z_points.iter().enumerate() {
        let abs2: Vec<f64> = set.rows.iter().map(|r| r[2 * k].powi(2) + r[2 * k + 1].powi(2)).collect();
        let s = stats::summarize(&abs2)?;
        let (e_abs, e_sq) = experiments::resolvent_limit_moments(&cfg.measure, &cfg.law, cfg.theta, Complex64::new(p[0], p[1]))?;
        println!("z = {}i: E|xi|^2 {:.4} ± {:.4}, limit {e_abs:.4}; limit E xi^2 {e_sq:.4}", p[1], s.mean, s.stderr_mean);
    }
    Ok(())
}
