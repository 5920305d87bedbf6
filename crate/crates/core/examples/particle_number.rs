//! Signed and physical particle numbers of a Klein–Gordon wave, from mode
//! space and from grid quadrature of j0, and their time independence.
//!
//! cargo run --release --example particle_number

use bohmfield::relkin::{self, SpatialGrid};
use bohmfield::traject::presets;

fn main() -> bohmfield::Result<()> {
    let wave = presets::fig1_wave();
    let grid = SpatialGrid::new(64);
    println!("mode-space N = {:.12}", relkin::particle_number(&wave));
    for t in [0.0, 10.0, 25.0, 49.2] {
        let n = relkin::particle_number_grid(&wave, t, &grid)?;
        let phys = relkin::physical_particle_number(&wave, t, &grid)?;
        println!("t = {t:5.1}: N = {n:.12}  N_phys = {phys:.12}");
    }
    // too few points for the beat between the two modes
    match relkin::particle_number_grid(&wave, 0.0, &SpatialGrid::new(2)) {
        Err(e) => println!("coarse grid rejected: {e}"),
        Ok(n) => println!("unexpected: {n}"),
    }
    Ok(())
}
