//! Klein–Gordon guidance against Schrödinger guidance for slow packets:
//! the relative deviation falls as ε².
//!
//! cargo run --release --example nonrel_limit

use bohmfield::relkin::ModeSum;
use bohmfield::traject;
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() -> bohmfield::Result<()> {
    let m = 1.0;
    let mut prev: Option<(f64, f64)> = None;
    for eps in [0.1, 0.05, 0.025] {
        let k = eps * m;
        let wave = ModeSum::from_coefficients(
            m,
            1,
            2.0 * PI / k,
            [([k, 0.0, 0.0], Complex64::new(1.0, 0.0)), ([-k, 0.0, 0.0], Complex64::new(0.5, 0.0))],
        )?;
        let r = traject::nonrel_compare(&wave, [0.3 / k, 0.0, 0.0], 5.0 / (eps * eps * m), 1e-12)?;
        let order = prev.map(|(e0, d0)| (d0 / r.relative_deviation).ln() / (e0 / eps).ln());
        println!(
            "eps = {eps:<6} deviation/displacement = {:.3e}  order = {}",
            r.relative_deviation,
            order.map_or("-".into(), |o| format!("{o:.3}"))
        );
        prev = Some((eps, r.relative_deviation));
    }
    Ok(())
}
