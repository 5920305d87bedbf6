//! The particle's local momentum ∂S/∂x is not what a momentum measurement
//! returns. For a superposition the two distributions differ; for a single
//! mode they coincide.
//!
//! cargo run --release --example momentum_measurement

use bohmfield::measure;
use bohmfield::relkin::{Mode, ModeSum};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() -> bohmfield::Result<()> {
    let c = |r: f64| Complex64::new(r, 0.0);
    let cases = [
        ("single mode k = 2", vec![Mode::line(2.0, c(1.0))]),
        ("k = 1 and k = 3", vec![Mode::line(1.0, c(1.0)), Mode::line(3.0, c(0.6))]),
        ("standing wave", vec![Mode::line(1.0, c(1.0)), Mode::line(-1.0, c(1.0))]),
    ];
    for (label, modes) in cases {
        let wave = ModeSum::new(0.5, 1, 2.0 * PI, modes)?;
        let r = measure::momentum_distribution(&wave, 0.0, 256)?;
        println!("{label}: TV distance {:.4}", r.tv_distance);
        for (k, (b, s)) in r.centers.iter().zip(r.bohmian.iter().zip(&r.spectral)) {
            if *b > 0.0 || *s > 0.0 {
                println!("  k = {k:+.1}: local {b:.4}  measured {s:.4}");
            }
        }
    }
    Ok(())
}
