//! Density of the free convolution of a semicircle with a two-atom measure,
//! and the edges of its support.
//!
//! cargo run --example free_convolution [sigma2]

use spiked_wigner::freeconv::FreeConvolution;
use spiked_wigner::measures::SpectralMeasure;

fn main() -> spiked_wigner::Result<()> {
    let sigma2: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let nu = SpectralMeasure::discrete(&[(-1.0, 0.5), (1.0, 0.5)])?;
    let fc = FreeConvolution::new(nu, sigma2)?;
    println!("x,density");
    let mut mass = 0.0;
    let h = 0.02;
    for i in 0..=250 {
        let x = -2.5 + h * i as f64;
        let d = fc.density_default(x)?;
        mass += d * h;
        println!("{x:.2},{d:.6}");
    }
    eprintln!("mass on the grid ≈ {mass:.4}");
    for x in [0.0, 2.5] {
        eprintln!("x = {x}: outside support {}", fc.is_outside_support(x));
    }
    Ok(())
}
