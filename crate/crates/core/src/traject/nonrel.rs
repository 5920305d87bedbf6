use num_complex::Complex64;

use super::coordinate_velocity;
use crate::error::{Error, Result};
use crate::ode::{self, Control, Outcome, StepOptions};
use crate::relkin::{self, evaluate, FourVector, ModeSum};

/// Largest |k|/m for which the comparison is accepted.
pub const NONREL_LIMIT: f64 = 0.1;

/// Klein–Gordon vs. free-Schrödinger guidance from a common start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonrelReport {
    /// max |x_KG(t) − x_S(t)| over the span.
    pub max_deviation: f64,
    /// Largest Schrödinger displacement |x_S(t) − x0| over the span.
    pub max_displacement: f64,
    /// `max_deviation / max_displacement`.
    pub relative_deviation: f64,
    /// Smallest j0 met along the Klein–Gordon path.
    pub min_j0: f64,
    pub epsilon: f64,
}

/// Schrödinger wave built from the same plane-wave coefficients with the
/// nonrelativistic dispersion k²/2m.
struct SchrodingerWave<'a> {
    wave: &'a ModeSum,
}

impl SchrodingerWave<'_> {
    /// Im(∇χ/χ)/m at (t, x).
    fn velocity(&self, t: f64, x: &[f64]) -> Result<[f64; 3]> {
        let m = self.wave.mass();
        let mut chi = Complex64::new(0.0, 0.0);
        let mut grad = [Complex64::new(0.0, 0.0); 3];
        for (i, mode) in self.wave.modes().iter().enumerate() {
            let k = mode.k;
            let k2: f64 = k.iter().map(|c| c * c).sum();
            let phase = -k2 / (2.0 * m) * t + k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let v = self.wave.coefficient(i) * Complex64::from_polar(1.0, phase);
            chi += v;
            for c in 0..3 {
                grad[c] += v * Complex64::new(0.0, k[c]);
            }
        }
        if chi.norm_sqr() < self.wave.node_floor() {
            return Err(Error::Node {
                at: vec![t, x[0], x[1], x[2]],
                density: chi.norm_sqr(),
                floor: self.wave.node_floor(),
            });
        }
        Ok(std::array::from_fn(|c| (grad[c] / chi).im / m))
    }
}

/// Integrate dx/dt = j/j0 and the Schrödinger guidance side by side from
/// `x0` at t = 0 over `t_span` and report how far the paths separate.
pub fn nonrel_compare(wave: &ModeSum, x0: [f64; 3], t_span: f64, tol: f64) -> Result<NonrelReport> {
    let eps = wave.max_velocity_ratio();
    if eps > NONREL_LIMIT {
        return Err(Error::NotNonrelativistic {
            ratio: eps,
            limit: NONREL_LIMIT,
        });
    }
    if !(t_span.is_finite() && t_span != 0.0) {
        return Err(Error::invalid("time span must be finite and nonzero"));
    }
    let dim = wave.dim();
    let schr = SchrodingerWave { wave };
    let mut y0 = vec![0.0; 2 * dim];
    y0[..dim].copy_from_slice(&x0[..dim]);
    y0[dim..].copy_from_slice(&x0[..dim]);
    let pad = |y: &[f64]| -> [f64; 3] { std::array::from_fn(|c| if c < dim { y[c] } else { 0.0 }) };
    let field = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (v_kg, _) = coordinate_velocity(wave, t, pad(&y[..dim]))?;
        let v_s = schr.velocity(t, &pad(&y[dim..]))?;
        dy[..dim].copy_from_slice(&v_kg[..dim]);
        dy[dim..].copy_from_slice(&v_s[..dim]);
        Ok(())
    };
    let opts = StepOptions {
        rtol: tol,
        atol: tol,
        h_max: t_span.abs() / 200.0,
        ..StepOptions::default()
    };
    let mut dev = 0.0f64;
    let mut disp = 0.0f64;
    let mut min_j0 = f64::INFINITY;
    let mut probe = |y: &[f64], t: f64| {
        let d: f64 = (0..dim).map(|c| (y[c] - y[dim + c]).powi(2)).sum::<f64>().sqrt();
        let s: f64 = (0..dim).map(|c| (y[dim + c] - x0[c]).powi(2)).sum::<f64>().sqrt();
        dev = dev.max(d);
        disp = disp.max(s);
        let p = pad(&y[..dim]);
        let j0 = relkin::current(&evaluate(wave, &FourVector::new(t, p[0], p[1], p[2]))).0[0];
        min_j0 = min_j0.min(j0);
    };
    probe(&y0, 0.0);
    let sol = ode::integrate(field, 0.0, &y0, t_span, &opts, |seg| {
        for i in 1..=4 {
            let t = seg.s0 + seg.h * i as f64 / 4.0;
            probe(&seg.eval(t), t);
        }
        Control::Continue
    })?;
    if let Outcome::FieldFailed(e) = sol.outcome {
        return Err(e);
    }
    Ok(NonrelReport {
        max_deviation: dev,
        max_displacement: disp,
        relative_deviation: if disp > 0.0 { dev / disp } else { dev },
        min_j0,
        epsilon: eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_slopes() {
        // one mode: KG slope k/k0, Schrödinger slope k/m
        let (m, k) = (1.0, 0.05);
        let w = ModeSum::from_coefficients(m, 1, 2.0 * PI / k, [([k, 0.0, 0.0], Complex64::new(1.0, 0.0))]).unwrap();
        let t = 100.0;
        let r = nonrel_compare(&w, [0.0; 3], t, 1e-11).unwrap();
        let expect = (k / m - k / (k * k + m * m).sqrt()) * t;
        assert!((r.max_deviation - expect).abs() < 1e-7, "{} vs {expect}", r.max_deviation);
        assert!(r.min_j0 > 0.0);
    }

    #[test]
    fn rejects_fast_modes() {
        let w = ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([1.0, 0.0, 0.0], Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(nonrel_compare(&w, [0.0; 3], 1.0, 1e-9), Err(Error::NotNonrelativistic { .. })));
    }
}
