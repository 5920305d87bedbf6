//! Frozen single-particle scenarios.
//!
//! The creation/annihilation scenario superposes a moving mode (k = 1) and
//! a mode at rest (k = 0) with raw plane-wave coefficients 1 and
//! [`FIG1_RATIO`], m = 1. The density j0 then depends on one phase
//! variable Δ = (√2 − 1)t − x only, is negative in a band around Δ = π,
//! and Δ grows monotonically along every trajectory. A path started at the
//! origin therefore enters and leaves the band once per period of Δ: t(τ)
//! peaks (annihilation) on entry and bottoms out (creation) on exit.
//!
//! The ratio was fixed by scanning the backward time excursion
//! t_max − t_min between the two events over ratios in [1.05, 1.5]; it
//! peaks near 1.1 and vanishes past about 1.45. 1.2 keeps a clear
//! excursion while j0 stays well away from a node.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::relkin::{FourVector, ModeSum};

/// Coefficient of the resting mode relative to the moving one.
pub const FIG1_RATIO: f64 = 1.2;

/// τ-span covering one period of Δ from the origin.
pub const FIG1_TAU_SPAN: f64 = 90.0;

/// Slice time between the creation and annihilation times of the preset
/// trajectory.
pub const FIG1_SLICE: f64 = 49.2;

pub fn fig1_wave() -> ModeSum {
    ModeSum::from_coefficients(
        1.0,
        1,
        2.0 * PI,
        [
            ([1.0, 0.0, 0.0], Complex64::new(1.0, 0.0)),
            ([0.0, 0.0, 0.0], Complex64::new(FIG1_RATIO, 0.0)),
        ],
    )
    .expect("preset is valid")
}

pub fn fig1_start() -> FourVector {
    FourVector::event(0.0, 0.0)
}
