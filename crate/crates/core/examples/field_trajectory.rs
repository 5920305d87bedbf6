//! Guided field configuration q(t) for a coherent state of one mode, and
//! the second-order field equation checked along it.
//!
//! cargo run --release --example field_trajectory

use bohmfield::qftfun::{self, FieldConfig, FunctionalState, LatticeSpec, Propagator};
use num_complex::Complex64;

fn main() -> bohmfield::Result<()> {
    let spec = LatticeSpec::new(1.0, 1, 1.0, 0.0, 24)?;
    let prop = Propagator::new(&spec)?;
    let alpha: f64 = 1.0;
    let mut terms = Vec::new();
    let mut amp = 1.0;
    for n in 0..=spec.n_max {
        if n > 0 {
            amp *= alpha / (n as f64).sqrt();
        }
        terms.push((vec![n], Complex64::new(amp, 0.0)));
    }
    let st = FunctionalState::from_occupations(&prop.basis, &terms)?;
    let traj = qftfun::integrate_field(&prop, &st, &FieldConfig::new(vec![0.1]), 12.0, 1e-10)?;
    for t in [0.0, 1.5, 3.0, 4.5, 6.0, 9.0, 12.0] {
        let q = traj.at(t).map(|c| c.q[0]).unwrap_or(f64::NAN);
        let e = qftfun::effectivity(&prop, &prop.state_at(&st, t), &FieldConfig::new(vec![q]))?;
        println!("t = {t:4}: q = {q:+.6}  dominant sector {}", e.dominant());
    }
    let r = qftfun::second_order_check(&prop, &st, &traj, 1e-4, 20)?;
    println!("second-order residual {:.2e}", r.max_residual);
    Ok(())
}
