//! The scan that fixed the creation/annihilation preset: for each ratio of
//! the resting-mode coefficient to the moving one, integrate from the
//! origin and measure how far t(τ) runs backward.
//!
//! cargo run --release --example fig1_scan

use bohmfield::relkin::{FourVector, ModeSum};
use bohmfield::traject::{self, ReversalKind, TrajectoryOptions};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() -> bohmfield::Result<()> {
    println!("ratio  events  backward_excursion");
    for i in 0..=9 {
        let ratio = 1.05 + 0.05 * i as f64;
        let wave = ModeSum::from_coefficients(
            1.0,
            1,
            2.0 * PI,
            [([1.0, 0.0, 0.0], Complex64::new(1.0, 0.0)), ([0.0, 0.0, 0.0], Complex64::new(ratio, 0.0))],
        )?;
        let traj = traject::integrate(&wave, &FourVector::event(0.0, 0.0), 90.0, &TrajectoryOptions::default())?;
        let peak = traj.reversal_events.iter().find(|e| e.kind == ReversalKind::Annihilation);
        let dip = traj.reversal_events.iter().find(|e| e.kind == ReversalKind::Creation);
        let excursion = match (peak, dip) {
            (Some(a), Some(c)) => a.x.t() - c.x.t(),
            _ => 0.0,
        };
        println!("{ratio:.2}   {:>6}  {excursion:.4}", traj.reversal_events.len());
    }
    Ok(())
}
