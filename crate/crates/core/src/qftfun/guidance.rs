//! First-order field guidance dq_j/dt = ∂S/∂q_j and its second-order check.

use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::{sample, FieldConfig, FunctionalSample, FunctionalState, Propagator};
use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseSegment, Outcome, StepOptions};
use crate::relkin::NODE_FLOOR;

fn node_floor(prop: &Propagator) -> f64 {
    // relative to the peak vacuum density Π (ω_j/π)^{1/2}
    let peak: f64 = (0..prop.spec.mode_count()).map(|j| (prop.spec.omega(j) / PI).sqrt()).product();
    NODE_FLOOR * peak
}

fn velocity_from(s: &FunctionalSample, floor: f64, q: &[f64]) -> Result<Vec<f64>> {
    let rho = s.psi.norm_sqr();
    if rho < floor {
        return Err(Error::Node {
            at: q.to_vec(),
            density: rho,
            floor,
        });
    }
    Ok(s.grad.iter().map(|g| (g / s.psi).im).collect())
}

/// ∇_q S = Im(∇Ψ/Ψ) for the coefficient vector `coeffs`.
pub fn field_velocity(prop: &Propagator, state: &FunctionalState, cfg: &FieldConfig) -> Result<Vec<f64>> {
    let s = sample(&prop.spec, &prop.basis, &state.coeffs, cfg);
    velocity_from(&s, node_floor(prop), &cfg.q)
}

/// Q = −(1/2|Ψ|) Σ_j ∂²|Ψ|/∂q_j², from closed-form derivatives of Ψ.
pub fn quantum_potential(prop: &Propagator, coeffs: &DVector<Complex64>, cfg: &FieldConfig) -> Result<f64> {
    let s = sample(&prop.spec, &prop.basis, coeffs, cfg);
    let rho = s.psi.norm_sqr();
    let floor = node_floor(prop);
    if rho < floor {
        return Err(Error::Node {
            at: cfg.q.clone(),
            density: rho,
            floor,
        });
    }
    let r = rho.sqrt();
    let mut lap = 0.0;
    for j in 0..s.grad.len() {
        let drho = 2.0 * (s.psi.conj() * s.grad[j]).re;
        let d2rho = 2.0 * (s.psi.conj() * s.hess_diag[j]).re + 2.0 * s.grad[j].norm_sqr();
        lap += d2rho / (2.0 * r) - drho * drho / (4.0 * r * r * r);
    }
    Ok(-lap / (2.0 * r))
}

/// A guided field history q(t) with dense output.
#[derive(Debug, Clone)]
pub struct FieldTrajectory {
    pub times: Vec<f64>,
    pub configs: Vec<FieldConfig>,
    pub hit_node: bool,
    segments: Vec<DenseSegment>,
}

impl FieldTrajectory {
    pub fn at(&self, t: f64) -> Option<FieldConfig> {
        let forward = self.segments.first()?.h >= 0.0;
        let idx = self
            .segments
            .partition_point(|seg| if forward { seg.s1() < t } else { seg.s1() > t });
        self.segments
            .get(idx)
            .filter(|seg| seg.contains(t))
            .map(|seg| FieldConfig::new(seg.eval(t)))
    }

    pub fn t_range(&self) -> (f64, f64) {
        let a = *self.times.first().unwrap_or(&0.0);
        let b = *self.times.last().unwrap_or(&0.0);
        (a.min(b), a.max(b))
    }
}

/// Integrate the guidance law from `q0` at `state.t` over `t_span`, with
/// Ψ(t) evolved exactly by `prop`.
pub fn integrate_field(
    prop: &Propagator,
    state: &FunctionalState,
    q0: &FieldConfig,
    t_span: f64,
    tol: f64,
) -> Result<FieldTrajectory> {
    if q0.q.len() != prop.spec.mode_count() {
        return Err(Error::invalid("configuration needs one amplitude per mode"));
    }
    let floor = node_floor(prop);
    field_velocity(prop, state, q0)?;
    let field = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let c = prop.state_at(state, t);
        let s = sample(&prop.spec, &prop.basis, &c.coeffs, &FieldConfig::new(y.to_vec()));
        dy.copy_from_slice(&velocity_from(&s, floor, y)?);
        Ok(())
    };
    let mut times = vec![state.t];
    let mut configs = vec![q0.clone()];
    let opts = StepOptions {
        h_max: 0.1 * PI / prop.spec.omega(0).max(prop.spec.mass),
        ..StepOptions::with_tol(tol)
    };
    let sol = ode::integrate(field, state.t, &q0.q, state.t + t_span, &opts, |seg| {
        times.push(seg.s1());
        configs.push(FieldConfig::new(seg.end()));
        Control::Continue
    })?;
    let hit_node = match sol.outcome {
        Outcome::FieldFailed(Error::Node { .. }) => true,
        Outcome::FieldFailed(e) => return Err(e),
        _ => false,
    };
    Ok(FieldTrajectory {
        times,
        configs,
        hit_node,
        segments: sol.segments,
    })
}

/// Outcome of the second-order residual along a field trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderReport {
    /// max over samples of |q̈_j + ω_j²q_j − J_j + ∂Q/∂q_j| / ω_j².
    pub max_residual: f64,
    /// Same maximum per mode.
    pub per_mode: Vec<f64>,
    pub fd_step: f64,
}

/// Residual of q̈ + ω²q − J(q) + ∂Q/∂q along `traj`.
///
/// q̈ is the central difference of the velocity field along the local
/// tangent, (v(t+h, q+hv) − v(t−h, q−hv))/2h, which is the convective
/// derivative of v to second order; ∂Q/∂q uses the same step.
pub fn second_order_check(
    prop: &Propagator,
    state: &FunctionalState,
    traj: &FieldTrajectory,
    fd_step: f64,
    samples: usize,
) -> Result<SecondOrderReport> {
    if traj.times.len() < 5 || samples == 0 {
        return Err(Error::invalid("second-order check needs at least 5 trajectory points"));
    }
    if !(fd_step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let spec = &prop.spec;
    let m = spec.mode_count();
    let t_overlaps = spec.quartic_overlaps();
    let (lo, hi) = traj.t_range();
    let mut per_mode = vec![0.0f64; m];
    let velocity = |t: f64, q: &[f64]| -> Result<Vec<f64>> {
        field_velocity(prop, &prop.state_at(state, t), &FieldConfig::new(q.to_vec()))
    };
    for i in 0..samples {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
        let cfg = traj.at(t).ok_or_else(|| Error::invalid("sample outside the trajectory"))?;
        let q = &cfg.q;
        let v = velocity(t, q)?;
        let qp: Vec<f64> = q.iter().zip(&v).map(|(a, b)| a + fd_step * b).collect();
        let qm: Vec<f64> = q.iter().zip(&v).map(|(a, b)| a - fd_step * b).collect();
        let vp = velocity(t + fd_step, &qp)?;
        let vm = velocity(t - fd_step, &qm)?;
        let coeffs = prop.state_at(state, t).coeffs;
        for j in 0..m {
            let accel = (vp[j] - vm[j]) / (2.0 * fd_step);
            let mut up = q.clone();
            let mut dn = q.clone();
            up[j] += fd_step;
            dn[j] -= fd_step;
            let dq = (quantum_potential(prop, &coeffs, &FieldConfig::new(up))?
                - quantum_potential(prop, &coeffs, &FieldConfig::new(dn))?)
                / (2.0 * fd_step);
            // J_j = −λ Σ T_jbcd q_b q_c q_d
            let mut cubic = 0.0;
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        cubic += t_overlaps[((j * m + b) * m + c) * m + d] * q[b] * q[c] * q[d];
                    }
                }
            }
            let source = -spec.lambda * cubic;
            let w2 = spec.omega(j).powi(2);
            let res = (accel + w2 * q[j] - source + dq).abs() / w2;
            per_mode[j] = per_mode[j].max(res);
        }
    }
    Ok(SecondOrderReport {
        max_residual: per_mode.iter().copied().fold(0.0, f64::max),
        per_mode,
        fd_step,
    })
}
