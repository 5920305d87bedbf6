//! Local (Bohmian) momentum against the spectral momentum distribution.
//!
//! The local momentum ∂_xS weighted by the charge density j0 is not what a momentum
//! measurement returns; the measured distribution is |a_k|². The two agree
//! only for single-mode states, so the comparison quantifies how far the
//! instantaneous particle momentum is from the measured value.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::relkin::{evaluate, FourVector, ModeSum, SpatialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumComparison {
    /// Bin centers, spaced by the lattice momentum 2π/cell.
    pub centers: Vec<f64>,
    /// j0-weighted histogram of ∂_xS, normalized.
    pub bohmian: Vec<f64>,
    /// Mode weights |a_k|², normalized.
    pub spectral: Vec<f64>,
    pub tv_distance: f64,
}

/// Compare the two momentum distributions of a 1-d periodic wave at time t,
/// sampling the local momentum on `points` grid points.
pub fn momentum_distribution(wave: &ModeSum, t: f64, points: usize) -> Result<MomentumComparison> {
    if wave.dim() != 1 {
        return Err(Error::invalid("momentum comparison is implemented for d = 1"));
    }
    let cell = wave.cell().ok_or_else(|| Error::invalid("momentum comparison needs a periodic cell"))?;
    let required = SpatialGrid::required_points(wave)?;
    if points < required {
        return Err(Error::Nyquist {
            points,
            required: required - 1,
        });
    }
    let dk = 2.0 * PI / cell;
    let h = cell / points as f64;
    let mut local = Vec::with_capacity(points);
    for i in 0..points {
        let s = evaluate(wave, &FourVector::event(t, i as f64 * h));
        if s.is_node() {
            continue;
        }
        let rho = s.psi.norm_sqr();
        let j0 = (-2.0 * (s.psi.conj() * s.d1[0]).im).abs();
        // ∂_xS = Im(ψ*∂_xψ)/|ψ|²
        local.push(((s.psi.conj() * s.d1[1]).im / rho, j0));
    }
    if local.is_empty() {
        return Err(Error::invalid("wave vanishes on the whole grid"));
    }
    let index = |k: f64| (k / dk).round() as i64;
    let ks: Vec<i64> = wave.modes().iter().map(|m| index(m.k[0])).collect();
    let lo = local.iter().map(|p| index(p.0)).chain(ks.iter().copied()).min().expect("nonempty");
    let hi = local.iter().map(|p| index(p.0)).chain(ks.iter().copied()).max().expect("nonempty");
    let nb = (hi - lo + 1) as usize;
    let mut bohmian = vec![0.0; nb];
    for (k, w) in &local {
        bohmian[(index(*k) - lo) as usize] += w;
    }
    let mut spectral = vec![0.0; nb];
    for (i, k) in ks.iter().enumerate() {
        spectral[(k - lo) as usize] += wave.modes()[i].amplitude.norm_sqr();
    }
    for v in [&mut bohmian, &mut spectral] {
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
    }
    let tv_distance = 0.5 * bohmian.iter().zip(&spectral).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(MomentumComparison {
        centers: (lo..=hi).map(|n| n as f64 * dk).collect(),
        bohmian,
        spectral,
        tv_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relkin::Mode;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_mode_agrees() {
        let w = ModeSum::new(1.0, 1, 2.0 * PI, vec![Mode::line(3.0, c(1.0))]).unwrap();
        let r = momentum_distribution(&w, 0.7, 64).unwrap();
        assert!(r.tv_distance < 1e-12);
    }

    #[test]
    fn standing_wave_has_zero_local_momentum() {
        // cos x: ∂_xS = 0 while measurement gives ±1
        let w = ModeSum::new(1.0, 1, 2.0 * PI, vec![Mode::line(1.0, c(1.0)), Mode::line(-1.0, c(1.0))]).unwrap();
        let r = momentum_distribution(&w, 0.0, 64).unwrap();
        assert!((r.tv_distance - 1.0).abs() < 1e-12, "{r:?}");
        assert!(matches!(momentum_distribution(&w, 0.0, 2), Err(Error::Nyquist { .. })));
    }
}
