//! Free lattice field in the Fock basis: moduli of the coefficients stay
//! fixed and each phase advances with E_0 + Σ n_j ω_j.
//!
//! cargo run --release --example free_field

use bohmfield::qftfun::{FunctionalState, LatticeSpec, Propagator};
use num_complex::Complex64;

fn main() -> bohmfield::Result<()> {
    let spec = LatticeSpec::new(1.0, 2, 1.0, 0.0, 5)?;
    let prop = Propagator::new(&spec)?;
    for (j, m) in spec.modes().iter().enumerate() {
        println!("mode {j}: {:?}, k = {:.4}, omega = {:.6}", m.shape, m.k, spec.omega(j));
    }
    println!("E_0 = {:.9}", spec.vacuum_energy());
    let st = FunctionalState::from_occupations(
        &prop.basis,
        &[(vec![0, 0], Complex64::new(1.0, 0.0)), (vec![2, 1], Complex64::new(0.0, 0.7))],
    )?;
    let i = prop.basis.index(&[2, 1])?;
    let e = spec.vacuum_energy() + 2.0 * spec.omega(0) + spec.omega(1);
    for t in [0.0, 1.0, 2.5, 6.0] {
        let c = prop.state_at(&st, t).coeffs[i];
        let expected = st.coeffs[i] * Complex64::from_polar(1.0, -e * t);
        println!("t = {t}: |c| = {:.15}, |c - c0 e^(-iEt)| = {:.1e}", c.norm(), (c - expected).norm());
    }
    Ok(())
}
