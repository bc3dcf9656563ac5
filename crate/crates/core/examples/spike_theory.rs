//! Limit predictions for a spike over a few base measures.
//!
//! cargo run --example spike_theory

use spiked_wigner::measures::{EntryLaw, SpectralMeasure};
use spiked_wigner::spike;

fn main() -> spiked_wigner::Result<()> {
    let measures = [
        ("point mass at 0", SpectralMeasure::point_mass(0.0)),
        ("atoms at ±1", SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)])?),
        ("uniform on [-1, 1]", SpectralMeasure::uniform(-1.0, 1.0)?),
    ];
    for (name, nu) in &measures {
        for law in [EntryLaw::gaussian(1.0), EntryLaw::laplace(1.0)] {
            let p = spike::predict(nu, 2.0, &law)?;
            let r = spike::residue_variance(nu, 2.0, &law)?;
            println!(
                "{name:>20} {:>8?}: rho {:.4} tau {:.4} c {:.4} v2 {:.4} varZ {:.4} (residue form {:.4})",
                law.kind(),
                p.rho,
                p.tau,
                p.c_eigenvector,
                p.v2_eigenvalue,
                p.var_z,
                r.var_z
            );
        }
    }
    match spike::predict(&SpectralMeasure::point_mass(0.0), 1.0, &EntryLaw::gaussian(1.0)) {
        Err(e) => println!("theta = 1: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
