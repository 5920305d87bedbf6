//! Second-order equation of motion along a trajectory: the finite-difference
//! residual shrinks fourfold per halving of the step.
//!
//! cargo run --release --example eom_check

use bohmfield::traject::{self, presets, TrajectoryOptions};

fn main() -> bohmfield::Result<()> {
    let wave = presets::fig1_wave();
    let opts = TrajectoryOptions {
        tol: 1e-11,
        ..TrajectoryOptions::default()
    };
    let traj = traject::integrate(&wave, &presets::fig1_start(), 30.0, &opts)?;
    let mut prev: Option<f64> = None;
    for h in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        let r = traject::eom_residual(&wave, &traj, h, 40)?;
        let order = prev.map(|p| (p / r.max_residual).log2());
        println!("h = {h:.2e}  residual = {:.3e}  order = {}", r.max_residual, order.map_or("-".into(), |o| format!("{o:.3}")));
        prev = Some(r.max_residual);
    }
    Ok(())
}
