//! n-particle wave functions read off a field state: a one-particle plane
//! wave and its velocity, the ladder route against Gauss–Hermite
//! quadrature, and a pair with one particle moving and one at rest.
//!
//! cargo run --release --example extraction

use bohmfield::extract::{self, Extractor};
use bohmfield::qftfun::{LatticeSpec, Propagator};
use std::f64::consts::PI;

fn main() -> bohmfield::Result<()> {
    // constant, cos x and sin x modes on a ring of length 2π
    let spec = LatticeSpec::new(2.0 * PI, 3, 1.0, 0.0, 3)?;
    let prop = Propagator::new(&spec)?;
    let one = Extractor::new(&prop, extract::momentum_state(&prop, &[1])?);
    let omega = spec.omega(1);
    for x in [0.0, 1.0, 2.0] {
        let psi = one.equal_time(1, &[x], 0.0)?;
        let quad = one.quadrature(1, &[x], 0.0, spec.n_max + 2)?;
        println!(
            "x = {x}: psi_1 = {:+.6} {:+.6}i  |ladder - quadrature| = {:.1e}  v = {:.6} (k/omega = {:.6})",
            psi.re,
            psi.im,
            (psi - quad).norm(),
            one.velocity(1, 0, &[x], 0.0)?,
            1.0 / omega
        );
    }
    let two = Extractor::new(&prop, extract::momentum_state(&prop, &[1, 0])?);
    let v = two.velocities(2, &[0.4, 1.3], 0.0)?;
    println!("two particles at (0.4, 1.3): velocities {:+.6}, {:+.6}", v[0], v[1]);
    let mut x = vec![0.4, 1.3];
    for step in 0..5 {
        x = two.advance(2, &x, 0.1 * step as f64, 0.1)?;
    }
    println!("after t = 0.5: positions {:.6}, {:.6}", x[0], x[1]);
    Ok(())
}
