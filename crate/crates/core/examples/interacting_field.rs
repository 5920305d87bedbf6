//! Quartic self-interaction: the Fock vacuum leaks into the 2- and
//! 4-particle sectors, so the particle number is not conserved. Doubling
//! the cutoff barely moves the result.
//!
//! cargo run --release --example interacting_field

use bohmfield::qftfun::{self, FunctionalState, LatticeSpec, Propagator};

fn sector_history(n_max: usize) -> bohmfield::Result<Vec<Vec<f64>>> {
    let spec = LatticeSpec::new(1.0, 2, 1.0, 0.1, n_max)?;
    let prop = Propagator::new(&spec)?;
    let vac = FunctionalState::vacuum(&prop.basis);
    Ok((0..=20).map(|i| prop.state_at(&vac, i as f64).sector_weights(&prop.basis)).collect())
}

fn main() -> bohmfield::Result<()> {
    let coarse = sector_history(12)?;
    let fine = sector_history(24)?;
    println!("  t    w0            w2            w4");
    for (i, w) in coarse.iter().enumerate().step_by(4) {
        println!("{i:3}  {:.10}  {:.4e}  {:.4e}", w[0], w[2], w[4]);
    }
    let change = |h: &[Vec<f64>]| h.iter().map(|w| (w[0] - 1.0).abs()).fold(0.0, f64::max);
    let (a, b) = (change(&coarse), change(&fine));
    println!("max |w0 - 1|: n_max 12 -> {a:.6e}, n_max 24 -> {b:.6e}, relative shift {:.2e}", (a - b).abs() / b);

    let spec = LatticeSpec::new(1.0, 2, 1.0, 0.1, 12)?;
    let prop = Propagator::new(&spec)?;
    for p in qftfun::vacuum_phase(&prop, &[0.0, 5.0, 10.0, 20.0])? {
        println!("t = {:4}: r0 = {:.9}, phi0 = {:+.6}", p.t, p.r0, p.phi0);
    }
    Ok(())
}
