//! A particle-number measurement on (vacuum + two particles)/√2. The
//! effectivities start strictly between 0 and 1; once the pointer packets
//! separate, the actual configuration sits in one of them and that
//! sector's effectivity goes to 1.
//!
//! cargo run --release --example effectivity_collapse

use bohmfield::measure::{self, PointerSpec};
use bohmfield::qftfun::{FunctionalState, LatticeSpec, Propagator};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() -> bohmfield::Result<()> {
    let spec = LatticeSpec::new(2.0 * PI, 2, 1.0, 0.0, 2)?;
    let prop = Propagator::new(&spec)?;
    let h = Complex64::new(0.5f64.sqrt(), 0.0);
    let st = FunctionalState::from_occupations(&prop.basis, &[(vec![0, 0], h), (vec![1, 1], h)])?;
    let pointer = PointerSpec::new(1.0, 6.0, 1.0, 1.0);
    for start in [[0.2, -0.4, 0.1], [1.1, 0.9, -0.3]] {
        let run = measure::effectivity_collapse(&prop, &st, &pointer, &start, 4.0, 1e-9)?;
        println!(
            "start {start:?}: e before ({:.3}, {:.3}) -> after ({:.2e}, {:.2e}), pointer reads n = {:?}",
            run.before[0], run.before[2], run.after[0], run.after[2], run.channel
        );
    }
    let ens = measure::collapse_ensemble(&prop, &st, &pointer, 4.0, 400, 7, 32, 1e-9)?;
    println!("400 runs: n = 0 in {}, n = 2 in {}, z = {:+.2}", ens.counts[0], ens.counts[2], ens.z_scores[0]);
    println!("largest leftover effectivity {:.1e}", ens.max_residual_effectivity);
    Ok(())
}
