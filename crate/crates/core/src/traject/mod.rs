//! Proper-time Bohmian trajectories for a one-particle Klein–Gordon wave.
//!
//! The guidance law dx^μ/dτ = j^μ/(2mψ*ψ) is integrated with the embedded
//! Runge–Kutta pair in [`crate::ode`]. Points where j0 changes sign are
//! time-reversal events: along the curve t(τ) has a local maximum
//! (annihilation) or minimum (creation) there.

mod crossing;
mod nonrel;
pub mod presets;

pub use crossing::{crossings, Crossing, CrossingRecord};
pub use nonrel::{nonrel_compare, NonrelReport, NONREL_LIMIT};

use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseSegment, Outcome, StepOptions};
use crate::relkin::{self, evaluate, FourVector, ModeSum, PolarForm};

/// 4-velocity u^μ = j^μ/(2mψ*ψ) (upper index).
pub fn tau_velocity(wave: &ModeSum, x: &FourVector) -> Result<FourVector> {
    let sample = evaluate(wave, x);
    if sample.is_node() {
        return Err(Error::Node {
            at: x.0.to_vec(),
            density: sample.density(),
            floor: sample.node_floor,
        });
    }
    let j_upper = relkin::current(&sample).flip_index();
    Ok(j_upper.scaled(1.0 / (2.0 * wave.mass() * sample.density())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedClass {
    Subluminal,
    Luminal,
    Superluminal,
}

/// dx/dt = j/j0 (upper-index spatial current) at `(t, x)`.
pub fn coordinate_velocity(wave: &ModeSum, t: f64, x: [f64; 3]) -> Result<([f64; 3], SpeedClass)> {
    let point = FourVector::new(t, x[0], x[1], x[2]);
    let sample = evaluate(wave, &point);
    if sample.is_node() {
        return Err(Error::Node {
            at: point.0.to_vec(),
            density: sample.density(),
            floor: sample.node_floor,
        });
    }
    let j = relkin::current(&sample).flip_index();
    let j0 = j.0[0];
    let scale = j.norm_inf();
    if j0.abs() <= 1e-14 * scale || j0 == 0.0 {
        return Err(Error::InfiniteVelocity { denominator: j0 });
    }
    let v = [j.0[1] / j0, j.0[2] / j0, j.0[3] / j0];
    let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let class = if speed < 1.0 - 1e-12 {
        SpeedClass::Subluminal
    } else if speed > 1.0 + 1e-12 {
        SpeedClass::Superluminal
    } else {
        SpeedClass::Luminal
    };
    Ok((v, class))
}

/// Box in (t, x) outside of which integration stops with `LeftDomain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub t: (f64, f64),
    pub x: (f64, f64),
}

impl Domain {
    fn contains(&self, p: &FourVector) -> bool {
        let [t, x, ..] = p.0;
        t >= self.t.0 && t <= self.t.1 && x >= self.x.0 && x <= self.x.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    /// Per-step error tolerance (absolute and relative).
    pub tol: f64,
    /// Parameter resolution for reversal events.
    pub event_tol: f64,
    /// Largest τ step; keeps narrow negative-density bands from being skipped.
    pub h_max: f64,
    /// Interior samples per step scanned for j0 sign changes.
    pub event_probes: usize,
    pub domain: Option<Domain>,
    pub max_steps: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            event_tol: 1e-10,
            h_max: 0.25,
            event_probes: 8,
            domain: None,
            max_steps: 2_000_000,
        }
    }
}

impl TrajectoryOptions {
    fn step_options(&self) -> StepOptions {
        StepOptions {
            rtol: self.tol,
            atol: self.tol,
            h_max: self.h_max,
            max_steps: self.max_steps,
            ..StepOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajPoint {
    pub tau: f64,
    pub x: FourVector,
    /// dx^μ/dτ (upper index).
    pub u: FourVector,
    pub j0: f64,
    pub j0_sign: i8,
    pub r: f64,
    /// Phase, unwrapped continuously along the path.
    pub s: f64,
    pub q: f64,
}

/// Local extremum of t(τ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReversalKind {
    /// t(τ) has a maximum: a pair annihilates here.
    Annihilation,
    /// t(τ) has a minimum: a pair is created here.
    Creation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversalEvent {
    pub tau: f64,
    pub x: FourVector,
    pub kind: ReversalKind,
    /// j0 evaluated at the located point.
    pub j0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajStatus {
    Completed,
    HitNode,
    LeftDomain,
}

/// On-path consistency checks gathered during integration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathDiagnostics {
    /// max |−(∂S)²/2m + m/2 + Q| over accepted steps.
    pub hamilton_jacobi: f64,
    /// max |u^μ + ∂^μS/m| over accepted steps.
    pub guidance: f64,
    /// max |ΔS − ∫u^μ∂_μS dτ| per step.
    pub phase_identity: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajPoint>,
    pub reversal_events: Vec<ReversalEvent>,
    pub status: TrajStatus,
    pub diagnostics: PathDiagnostics,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    /// Dense position at parameter `tau`.
    pub fn position(&self, tau: f64) -> Option<FourVector> {
        let seg = self.segment_at(tau)?;
        let v = seg.eval(tau);
        Some(FourVector([v[0], v[1], v[2], v[3]]))
    }

    fn segment_at(&self, tau: f64) -> Option<&DenseSegment> {
        let forward = self.segments.first()?.h >= 0.0;
        let idx = self.segments.partition_point(|seg| if forward { seg.s1() < tau } else { seg.s1() > tau });
        self.segments.get(idx).filter(|seg| seg.contains(tau))
    }

    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    pub fn tau_range(&self) -> (f64, f64) {
        let a = self.points.first().map_or(0.0, |p| p.tau);
        let b = self.points.last().map_or(0.0, |p| p.tau);
        (a.min(b), a.max(b))
    }

    /// Range of coordinate time visited, from the accepted points and events.
    pub fn t_range(&self) -> (f64, f64) {
        let ts = self
            .points
            .iter()
            .map(|p| p.x.t())
            .chain(self.reversal_events.iter().map(|e| e.x.t()));
        ts.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)))
    }
}

fn j0_at(wave: &ModeSum, x: &FourVector) -> f64 {
    relkin::current(&evaluate(wave, x)).0[0]
}

fn four(v: &[f64]) -> FourVector {
    FourVector([v[0], v[1], v[2], v[3]])
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

struct PointBuilder<'a> {
    wave: &'a ModeSum,
    prior: Option<PolarForm>,
}

impl PointBuilder<'_> {
    /// Point at `tau`, unwrapping S via intermediate dense samples so that
    /// no single phase step exceeds the unwrapping limit.
    fn point(&mut self, seg: Option<&DenseSegment>, tau: f64, x: FourVector) -> Result<(TrajPoint, f64)> {
        let m = self.wave.mass();
        let mut identity = 0.0;
        if let (Some(seg), Some(prior)) = (seg, self.prior) {
            // expected phase change from dS/dτ = u^μ ∂_μS = −(∂S)²/m
            let rate = |p: &PolarForm| -p.ds.minkowski(&p.ds) / m;
            let est = rate(&prior).abs() * (tau - seg.s0).abs();
            let sub = ((est / (relkin::MAX_PHASE_STEP * 0.5)).ceil() as usize).clamp(4, 10_000);
            let mut prev = prior;
            let mut integral = 0.0;
            let mut prev_tau = seg.s0;
            for i in 1..=sub {
                let s = seg.s0 + (tau - seg.s0) * i as f64 / sub as f64;
                let xs = if i == sub { x } else { four(&seg.eval(s)) };
                let sample = evaluate(self.wave, &xs);
                let cur = relkin::polar(&sample, Some(&prev))?;
                let mid = four(&seg.eval(0.5 * (prev_tau + s)));
                let mid_p = relkin::polar(&evaluate(self.wave, &mid), None)?;
                integral += (s - prev_tau) / 6.0 * (rate(&prev) + 4.0 * rate(&mid_p) + rate(&cur));
                prev = cur;
                prev_tau = s;
            }
            identity = ((prev.s - prior.s) - integral).abs();
            self.prior = Some(prev);
        } else {
            self.prior = Some(relkin::polar(&evaluate(self.wave, &x), None)?);
        }
        let polar = self.prior.expect("set above");
        let sample = evaluate(self.wave, &x);
        let j_lower = relkin::current(&sample);
        let u = j_lower.flip_index().scaled(1.0 / (2.0 * m * sample.density()));
        let q = relkin::quantum_potential_at(&sample)?;
        Ok((
            TrajPoint {
                tau,
                x,
                u,
                j0: j_lower.0[0],
                j0_sign: sign(j_lower.0[0]),
                r: polar.r,
                s: polar.s,
                q,
            },
            identity,
        ))
    }
}

/// Integrate the guidance law from `x0` over `tau_span` (either sign).
pub fn integrate(wave: &ModeSum, x0: &FourVector, tau_span: f64, opts: &TrajectoryOptions) -> Result<Trajectory> {
    if !x0.is_finite() {
        return Err(Error::invalid("initial point must be finite"));
    }
    tau_velocity(wave, x0)?;
    let m = wave.mass();
    let mut builder = PointBuilder { wave, prior: None };
    let (first, _) = builder.point(None, 0.0, *x0)?;
    let mut points = vec![first];
    let mut events: Vec<ReversalEvent> = Vec::new();
    let mut diag = PathDiagnostics::default();
    let mut status = TrajStatus::Completed;
    let mut inner_error: Option<Error> = None;
    let forward = tau_span >= 0.0;

    let mut record = |seg: &DenseSegment,
                      points: &mut Vec<TrajPoint>,
                      events: &mut Vec<ReversalEvent>,
                      diag: &mut PathDiagnostics|
     -> Result<Control> {
        // scan for j0 sign changes inside the step
        let probes = opts.event_probes.max(1);
        let mut prev_s = seg.s0;
        let mut prev_g = j0_at(wave, &four(seg.start()));
        for i in 1..=probes {
            let s = seg.s0 + seg.h * i as f64 / probes as f64;
            let g = j0_at(wave, &four(&seg.eval(s)));
            if prev_g != 0.0 && g != 0.0 && prev_g.signum() != g.signum() {
                let root = ode::bisect(|t| j0_at(wave, &four(&seg.eval(t))), prev_s, s, prev_g, g, opts.event_tol);
                let x = four(&seg.eval(root));
                // sign sequence in increasing τ decides max or min of t(τ)
                let rising = if forward { g > 0.0 } else { prev_g > 0.0 };
                events.push(ReversalEvent {
                    tau: root,
                    x,
                    kind: if rising { ReversalKind::Creation } else { ReversalKind::Annihilation },
                    j0: j0_at(wave, &x),
                });
            }
            prev_s = s;
            prev_g = g;
        }
        let end = four(&seg.end());
        let (pt, identity) = builder.point(Some(seg), seg.s1(), end)?;
        let sample = evaluate(wave, &end);
        diag.hamilton_jacobi = diag.hamilton_jacobi.max(relkin::hamilton_jacobi_residual(&sample)?.abs());
        let ds_upper = relkin::polar(&sample, None)?.ds.flip_index();
        let guidance = (0..4).map(|mu| (pt.u.0[mu] + ds_upper.0[mu] / m).abs()).fold(0.0, f64::max);
        diag.guidance = diag.guidance.max(guidance);
        diag.phase_identity = diag.phase_identity.max(identity);
        points.push(pt);
        if let Some(domain) = &opts.domain {
            if !domain.contains(&end) {
                return Ok(Control::Stop);
            }
        }
        Ok(Control::Continue)
    };

    let sol = ode::integrate(
        |_s, y, dy| {
            let u = tau_velocity(wave, &four(y))?;
            dy.copy_from_slice(&u.0);
            Ok::<(), Error>(())
        },
        0.0,
        &x0.0,
        tau_span,
        &opts.step_options(),
        |seg| match record(seg, &mut points, &mut events, &mut diag) {
            Ok(c) => c,
            Err(e) => {
                inner_error = Some(e);
                Control::Stop
            }
        },
    )?;
    if let Some(e) = inner_error {
        match e {
            Error::Node { .. } => status = TrajStatus::HitNode,
            other => return Err(other),
        }
    } else {
        match sol.outcome {
            Outcome::Completed => {}
            Outcome::Stopped => status = TrajStatus::LeftDomain,
            Outcome::FieldFailed(Error::Node { .. }) => status = TrajStatus::HitNode,
            Outcome::FieldFailed(e) => return Err(e),
        }
    }
    Ok(Trajectory {
        points,
        reversal_events: events,
        status,
        diagnostics: diag,
        segments: sol.segments,
    })
}

/// Result of comparing m d²x/dτ² with ∂^μQ along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EomReport {
    /// max over samples and components of |m a^μ − ∂^μQ| / m².
    pub max_residual: f64,
    pub fd_step: f64,
    pub samples: usize,
}

/// Equation-of-motion residual along `traj`.
///
/// Samples `samples` interior parameters of the dense path. At each, the
/// 4-acceleration is the central difference of u over short Runge–Kutta
/// steps of ±`fd_step` taken from the sampled point, and ∂^μQ is the
/// central difference of the closed-form quantum potential with the same
/// step.
pub fn eom_residual(wave: &ModeSum, traj: &Trajectory, fd_step: f64, samples: usize) -> Result<EomReport> {
    if traj.points.len() < 5 || samples == 0 {
        return Err(Error::invalid("equation-of-motion check needs at least 5 trajectory points"));
    }
    if !(fd_step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let m = wave.mass();
    let (lo, hi) = traj.tau_range();
    let margin = 0.05 * (hi - lo);
    let field = |_s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy.copy_from_slice(&tau_velocity(wave, &four(y))?.0);
        Ok(())
    };
    let step_opts = StepOptions {
        rtol: 1e-14,
        atol: 1e-14,
        h_init: Some(fd_step),
        h_min: fd_step * 1e-6,
        ..StepOptions::default()
    };
    let mut worst = 0.0f64;
    for i in 0..samples {
        let tau = lo + margin + (hi - lo - 2.0 * margin) * (i as f64 + 0.5) / samples as f64;
        let x = traj.position(tau).ok_or_else(|| Error::invalid("sample outside the trajectory"))?;
        let advance = |h: f64| -> Result<FourVector> {
            let sol = ode::integrate(field, 0.0, &x.0, h, &step_opts, |_| Control::Continue)?;
            match sol.outcome {
                Outcome::FieldFailed(e) => Err(e),
                _ => Ok(four(&sol.last_state().expect("nonzero span"))),
            }
        };
        let xp = advance(fd_step)?;
        let xm = advance(-fd_step)?;
        let up = tau_velocity(wave, &xp)?;
        let um = tau_velocity(wave, &xm)?;
        for mu in 0..4 {
            let accel = (up.0[mu] - um.0[mu]) / (2.0 * fd_step);
            let mut e = [0.0; 4];
            e[mu] = fd_step;
            let qp = relkin::quantum_potential(wave, &x.add(&FourVector(e)))?;
            let qm = relkin::quantum_potential(wave, &x.sub(&FourVector(e)))?;
            let dq_upper = relkin::METRIC[mu] * (qp - qm) / (2.0 * fd_step);
            worst = worst.max((m * accel - dq_upper).abs() / (m * m));
        }
    }
    Ok(EomReport {
        max_residual: worst,
        fd_step,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn plane(k: f64) -> ModeSum {
        ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([k, 0.0, 0.0], Complex64::new(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn plane_wave_velocity_is_k_over_m() {
        let w = plane(2.0);
        let u = tau_velocity(&w, &FourVector::event(0.3, -1.0)).unwrap();
        let k0 = w.frequency(0);
        assert!((u.0[0] - k0).abs() < 1e-12);
        assert!((u.0[1] - 2.0).abs() < 1e-12);
        let (v, class) = coordinate_velocity(&w, 0.0, [0.4, 0.0, 0.0]).unwrap();
        assert!((v[0] - 2.0 / k0).abs() < 1e-12);
        assert_eq!(class, SpeedClass::Subluminal);
    }

    #[test]
    fn plane_wave_trajectory_is_straight() {
        let w = plane(1.0);
        let x0 = FourVector::event(0.0, 0.5);
        let traj = integrate(&w, &x0, 10.0, &TrajectoryOptions::default()).unwrap();
        assert_eq!(traj.status, TrajStatus::Completed);
        assert!(traj.reversal_events.is_empty());
        let k0 = w.frequency(0);
        for p in &traj.points {
            assert!((p.x.0[0] - k0 * p.tau).abs() < 1e-9);
            assert!((p.x.0[1] - 0.5 - p.tau).abs() < 1e-9);
        }
        assert!(traj.diagnostics.hamilton_jacobi < 1e-10);
        assert!(traj.diagnostics.phase_identity < 1e-6);
    }

    #[test]
    fn node_stops_trajectory() {
        // standing wave: nodes of cos(x) at x = ±π/2 for every t, and j = 0 in space,
        // so the particle is at rest; start exactly on a node
        let w = ModeSum::from_coefficients(
            1.0,
            1,
            2.0 * PI,
            [([1.0, 0.0, 0.0], Complex64::new(1.0, 0.0)), ([-1.0, 0.0, 0.0], Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let err = integrate(&w, &FourVector::event(0.0, PI / 2.0), 1.0, &TrajectoryOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Node { .. }));
    }

    #[test]
    fn domain_exit_is_reported() {
        let w = plane(1.0);
        let opts = TrajectoryOptions {
            domain: Some(Domain { t: (-1.0, 2.0), x: (-10.0, 10.0) }),
            ..TrajectoryOptions::default()
        };
        let traj = integrate(&w, &FourVector::event(0.0, 0.0), 10.0, &opts).unwrap();
        assert_eq!(traj.status, TrajStatus::LeftDomain);
    }
}
