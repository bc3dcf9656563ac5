//! Planar Helffer–Sjöstrand integral against the closed-form residue, with
//! the error under grid refinement.
//!
//! cargo run --release --example hs_residue

use spiked_wigner::hsquad::{self, Grid};
use spiked_wigner::measures::SpectralMeasure;

fn main() -> spiked_wigner::Result<()> {
    let nu = SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)])?;
    let mut grid = Grid::coarse();
    for _ in 0..4 {
        let r = hsquad::residue_check(&nu, 1.0, 2.0, None, 3, &grid)?;
        println!(
            "{:>4} x {:<4} integral {:.10} -residue {:.10} |diff| {:.2e} (delta {:.4})",
            grid.nx, grid.ny, r.integral, r.minus_residue, r.abs_diff, r.delta
        );
        grid = grid.doubled();
    }
    Ok(())
}
