//! A single Klein–Gordon trajectory that runs backward in time between a
//! pair-creation and a pair-annihilation event, and its crossings with a
//! constant-time slice.
//!
//! cargo run --release --example fig1_trajectory

use bohmfield::traject::{self, presets, TrajectoryOptions};

fn main() -> bohmfield::Result<()> {
    let wave = presets::fig1_wave();
    let traj = traject::integrate(&wave, &presets::fig1_start(), presets::FIG1_TAU_SPAN, &TrajectoryOptions::default())?;
    let (t0, t1) = traj.t_range();
    println!("{} accepted points, t in [{t0:.3}, {t1:.3}]", traj.points.len());
    for e in &traj.reversal_events {
        println!("{:?} at tau = {:.4}, t = {:.4}, x = {:.4}, j0 = {:.2e}", e.kind, e.tau, e.x.t(), e.x.0[1], e.j0);
    }

    let rec = traject::crossings(&wave, &traj, presets::FIG1_SLICE);
    println!("slice t = {}: signs {:?}, sum {}, count {}", rec.t_star, rec.signs(), rec.sum(), rec.count());
    for c in &rec.crossings {
        println!("  x = {:.5}  j0 = {:+.4e}", c.x[0], c.j0);
    }
    // slices away from the backward segment see the particle once
    for t in [30.0, 80.0] {
        let r = traject::crossings(&wave, &traj, t);
        println!("slice t = {t}: signs {:?}", r.signs());
    }
    let d = traj.diagnostics;
    println!("on-path residuals: HJ {:.1e}, guidance {:.1e}, phase {:.1e}", d.hamilton_jacobi, d.guidance, d.phase_identity);
    Ok(())
}
