//! Variance of the normalized resolvent trace against the matrix size.
//!
//! cargo run --release --example concentration

use spiked_wigner::experiments::{self, ExperimentConfig, ExperimentKind};
use spiked_wigner::measures::EntryLaw;

fn main() -> spiked_wigner::Result<()> {
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Concentration, EntryLaw::uniform(1.0), 3);
    cfg.n_list = vec![50, 100, 200, 400];
    cfg.trials = 200;
    let r = experiments::run_concentration_scan(&cfg)?;
    for row in &r.rows {
        println!("N = {:>4}: Var tr G(2i) = {:.3e} ± {:.1e}", row.n, row.variance, row.stderr);
    }
    println!("log-log slope {:.3}", r.slope);
    Ok(())
}
