//! Writes a sample set, reads it back and prints the ECDF against the limit
//! CDF at a few quantiles.
//!
//! cargo run --release --example sample_io [dir]

use std::path::PathBuf;

use spiked_wigner::experiments::{self, ExperimentConfig, ExperimentKind, SampleSet};
use spiked_wigner::measures::EntryLaw;
use spiked_wigner::stats;

fn main() -> spiked_wigner::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Eigenvalue, EntryLaw::uniform(1.0), 12);
    cfg.n = 200;
    cfg.trials = 100;
    let set = experiments::run_eigenvalue_fluctuations(&cfg)?;
    let (json, csv) = set.save(&dir)?;
    println!("wrote {} and {}", json.display(), csv.display());
    let back = SampleSet::load(&json)?;
    let handle = experiments::reference_handle(&back.config)?;
    let mut x = back.values();
    x.sort_by(f64::total_cmp);
    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let v = x[((q * x.len() as f64) as usize).min(x.len() - 1)];
        println!("x = {v:+.3}: ecdf {:.3} limit {:.3}", stats::ecdf(&x, v), handle.cdf(v));
    }
    Ok(())
}
