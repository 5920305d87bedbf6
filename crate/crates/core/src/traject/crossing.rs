use super::{j0_at, Trajectory};
use crate::ode;
use crate::relkin::ModeSum;

/// One intersection of a trajectory with the slice t = t*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub tau: f64,
    pub x: [f64; 3],
    /// Sign of j0 (equivalently of dt/dτ) at the crossing.
    pub sign: i8,
    pub j0: f64,
}

/// Intersections of one trajectory with a constant-time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRecord {
    pub t_star: f64,
    pub crossings: Vec<Crossing>,
    /// Set when t* lies outside the t-range the trajectory covers.
    pub out_of_range: bool,
}

impl CrossingRecord {
    /// Signed count: the slice's contribution to N.
    pub fn sum(&self) -> i64 {
        self.crossings.iter().map(|c| c.sign as i64).sum()
    }

    /// Unsigned count: the slice's contribution to N_phys.
    pub fn count(&self) -> usize {
        self.crossings.len()
    }

    pub fn signs(&self) -> Vec<i8> {
        self.crossings.iter().map(|c| c.sign).collect()
    }
}

/// Locate every solution of t(τ) = t* along `traj`.
///
/// t(τ) is sampled at every segment boundary, at each reversal event and
/// at `probes` interior points per segment; every change of the class
/// t ≥ t* between consecutive samples is refined by bisection on the
/// dense output. Treating the class boundary as half-open means a root
/// that falls exactly on a sample is counted once.
pub fn crossings(wave: &ModeSum, traj: &Trajectory, t_star: f64) -> CrossingRecord {
    crossings_with(wave, traj, t_star, 8, 1e-10)
}

pub(crate) fn crossings_with(wave: &ModeSum, traj: &Trajectory, t_star: f64, probes: usize, tol: f64) -> CrossingRecord {
    let (t_lo, t_hi) = traj.t_range();
    let mut record = CrossingRecord {
        t_star,
        crossings: Vec::new(),
        out_of_range: !(t_star >= t_lo && t_star <= t_hi),
    };
    if record.out_of_range {
        return record;
    }
    let segments = traj.segments();
    let mut events = traj.reversal_events.iter().map(|e| e.tau).peekable();
    let g = |seg: &ode::DenseSegment, s: f64| seg.component(s, 0) - t_star;
    for seg in segments {
        let mut params: Vec<f64> = (0..probes.max(1)).map(|i| seg.s0 + seg.h * i as f64 / probes.max(1) as f64).collect();
        while let Some(&tau) = events.peek() {
            if !seg.contains(tau) {
                break;
            }
            params.push(tau);
            events.next();
        }
        params.push(seg.s1());
        if seg.h >= 0.0 {
            params.sort_by(|a, b| a.total_cmp(b));
        } else {
            params.sort_by(|a, b| b.total_cmp(a));
        }
        params.dedup();
        for w in params.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ga, gb) = (g(seg, a), g(seg, b));
            if (ga >= 0.0) == (gb >= 0.0) {
                continue;
            }
            // shift a root sitting on `b` into this bracket only; the next
            // bracket then starts on the same side and does not count it again
            let gb_eff = if gb == 0.0 { f64::MIN_POSITIVE } else { gb };
            let ga_eff = if ga == 0.0 { f64::MIN_POSITIVE } else { ga };
            let root = ode::bisect(|s| g(seg, s), a, b, ga_eff, gb_eff, tol);
            let state = seg.eval(root);
            let x = super::four(&state);
            let j0 = j0_at(wave, &x);
            let slope = if (gb - ga) * (b - a) > 0.0 { 1 } else { -1 };
            let sign = if j0 != 0.0 { j0.signum() as i8 } else { slope };
            record.crossings.push(Crossing {
                tau: root,
                x: x.spatial(),
                sign,
                j0,
            });
        }
    }
    record
}

#[cfg(test)]
mod tests {
    use super::super::{integrate, TrajectoryOptions};
    use super::*;
    use crate::relkin::FourVector;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn plane_wave_crosses_once() {
        let w = ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([1.0, 0.0, 0.0], Complex64::new(1.0, 0.0))]).unwrap();
        let traj = integrate(&w, &FourVector::event(0.0, 0.0), 5.0, &TrajectoryOptions::default()).unwrap();
        let rec = crossings(&w, &traj, 3.0);
        assert!(!rec.out_of_range);
        assert_eq!(rec.signs(), vec![1]);
        assert!((rec.crossings[0].x[0] - 3.0 / 2f64.sqrt()).abs() < 1e-8);
        let outside = crossings(&w, &traj, 100.0);
        assert!(outside.out_of_range);
        assert_eq!(outside.count(), 0);
    }
}
