//! Momentum measurement with a Bohmian pointer: sampled initial positions,
//! guided through the coupling, land in each channel with probability
//! |c_a|², and the error shrinks like N^(-1/2).
//!
//! cargo run --release --example born_rule

use bohmfield::measure::{self, EnsembleOptions, PointerSpec, RingSystem};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() -> bohmfield::Result<()> {
    let ring = RingSystem::new(
        2.0 * PI,
        1.0,
        vec![1, 2],
        vec![Complex64::new(0.3f64.sqrt(), 0.0), Complex64::new(0.7f64.sqrt(), 0.0)],
    )?;
    let joint = measure::entangle(&ring, &PointerSpec::new(1.0, 20.0, 1.0, 1.0))?;
    println!("pointer centers {:?}, max overlap {:.1e}", joint.channels.centers, joint.channels.max_overlap);
    let opts = EnsembleOptions::default();
    let rep = measure::run_ensemble(&joint, 2000, 42, &opts)?;
    rep.check_gaps()?;
    for a in 0..rep.counts.len() {
        println!("channel {a}: p = {:.3}, f = {:.4}, z = {:+.2}", rep.probabilities[a], rep.frequencies[a], rep.z_scores[a]);
    }
    let conv = measure::born_convergence(&joint, &[10, 100, 1000], 10, 42, &opts)?;
    for (n, tv) in &conv.points {
        println!("N = {n:5}: mean TV distance {tv:.4}");
    }
    println!("slope {:.3}", conv.slope);
    Ok(())
}
