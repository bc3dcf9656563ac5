//! Variance estimate for a non-diagonal lower block: a diagonal block and
//! its Haar conjugate should give the same answer.
//!
//! cargo run --release --example block_variance [size] [mc_trials]

use spiked_wigner::hsquad::{self, Grid};
use spiked_wigner::measures::{EntryLaw, SpectralMeasure};
use spiked_wigner::rmt::{DeformationSpec, Rotation};
use spiked_wigner::spike;

fn main() -> spiked_wigner::Result<()> {
    let mut args = std::env::args().skip(1);
    let n1: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(150);
    let mc: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(30);
    let law = EntryLaw::laplace(1.0);
    let nu = SpectralMeasure::uniform(-0.5, 0.5)?;
    let spectrum = nu.discretize_quantiles(n1)?;
    for rotation in [Rotation::None, Rotation::Haar(3)] {
        let spec = DeformationSpec::new(2.0, spectrum.clone(), rotation)?;
        let est = hsquad::block_variance_estimate(&spec.sub_block(), &law, 2.0, mc, &Grid::coarse(), 11)?;
        println!("{rotation:?}: {:.4} ± {:.4}", est.var_zn, est.stderr);
    }
    let r = spike::residue_variance(&SpectralMeasure::empirical(&spectrum)?, 2.0, &law)?;
    println!("residue form for the same spectrum: {:.4}", r.var_z);
    Ok(())
}
