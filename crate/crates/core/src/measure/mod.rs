//! Ideal (von Neumann) measurements with a Bohmian pointer.
//!
//! The measured system is a free particle on a ring, ψ(x) = Σ c_a e^{ik_a x}/√L,
//! and the observable is its momentum. A pointer coordinate y with a
//! Gaussian packet couples through H = g p̂_x p̂_y for a time T, which
//! shifts the packet of channel a to y = gTk_a. Both coordinates are
//! then guided by the joint wave function.

mod collapse;
mod momentum;
mod sampler;

pub use collapse::{collapse_ensemble, effectivity_collapse, CollapseEnsemble, CollapseRun};
pub use momentum::{momentum_distribution, MomentumComparison};
pub use sampler::GridSampler;

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ode::{self, Outcome, StepOptions};
use crate::rng;

/// Pointer packet and coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerSpec {
    pub mass: f64,
    pub g: f64,
    pub duration: f64,
    /// Initial packet width σ_y.
    pub sigma: f64,
    /// Required channel gap in units of σ, and half-width of the channel window.
    pub window: f64,
    /// Largest tolerated overlap between channel packets.
    pub overlap_threshold: f64,
}

impl PointerSpec {
    pub fn new(mass: f64, g: f64, duration: f64, sigma: f64) -> Self {
        Self {
            mass,
            g,
            duration,
            sigma,
            window: 5.0,
            overlap_threshold: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("pointer mass", self.mass), ("coupling duration", self.duration), ("pointer width", self.sigma), ("window", self.window)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.g.is_finite() || self.g == 0.0 {
            return Err(Error::invalid("coupling strength must be finite and nonzero"));
        }
        Ok(())
    }

    /// Width of a freely spreading packet after time `t`.
    pub fn width_at(&self, t: f64) -> f64 {
        let tau = t / (self.mass * self.sigma * self.sigma);
        self.sigma * (1.0 + tau * tau).sqrt()
    }
}

/// ∫ χ(y − a) χ(y − b) dy for normalized Gaussians of width σ.
pub fn gaussian_overlap(separation: f64, sigma: f64) -> f64 {
    (-separation * separation / (4.0 * sigma * sigma)).exp()
}

/// Free Gaussian packet started at `center` with momentum `p`, evolved for
/// time `t` with mass `mass`. Returns (χ, ∂_yχ).
pub(crate) fn free_packet(y: f64, center: f64, p: f64, sigma: f64, mass: f64, t: f64) -> (Complex64, Complex64) {
    let z = Complex64::new(1.0, t / (mass * sigma * sigma));
    let u = y - center - p * t / mass;
    let norm = (PI * sigma * sigma).powf(-0.25);
    let expo = -(u * u) / (2.0 * sigma * sigma * z) + Complex64::new(0.0, p * y - p * p * t / (2.0 * mass));
    let val = norm / z.sqrt() * expo.exp();
    let d = val * (-u / (sigma * sigma * z) + Complex64::new(0.0, p));
    (val, d)
}

/// Free particle on a ring in a superposition of momentum eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSystem {
    pub length: f64,
    pub mass: f64,
    /// Lattice indices n_a with k_a = 2πn_a/L.
    pub momenta: Vec<i32>,
    /// Normalized coefficients c_a.
    pub coefficients: Vec<Complex64>,
}

impl RingSystem {
    pub fn new(length: f64, mass: f64, momenta: Vec<i32>, coefficients: Vec<Complex64>) -> Result<Self> {
        if !(length > 0.0 && length.is_finite() && mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("ring length and mass must be positive"));
        }
        if momenta.is_empty() || momenta.len() != coefficients.len() {
            return Err(Error::invalid("need one coefficient per momentum"));
        }
        let mut sorted = momenta.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != momenta.len() {
            return Err(Error::invalid("momentum spectrum must be nondegenerate"));
        }
        let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("coefficients must be finite and not all zero"));
        }
        Ok(Self {
            length,
            mass,
            momenta,
            coefficients: coefficients.iter().map(|c| c / norm).collect(),
        })
    }

    pub fn k(&self, a: usize) -> f64 {
        2.0 * PI * self.momenta[a] as f64 / self.length
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Channels produced by the coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnsemble {
    /// Eigenvalue a (momentum k_a) of each channel.
    pub labels: Vec<f64>,
    pub coefficients: Vec<Complex64>,
    /// Pointer centers gTa.
    pub centers: Vec<f64>,
    /// Largest pairwise packet overlap.
    pub max_overlap: f64,
    pub ideal: bool,
}

/// System, pointer and channel bookkeeping after entanglement.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub system: RingSystem,
    pub pointer: PointerSpec,
    pub channels: ChannelEnsemble,
}

/// Couple `system` to `pointer` through g p̂_x p̂_y for the pointer duration.
pub fn entangle(system: &RingSystem, pointer: &PointerSpec) -> Result<JointState> {
    pointer.validate()?;
    let shift = pointer.g * pointer.duration;
    let labels: Vec<f64> = (0..system.momenta.len()).map(|a| system.k(a)).collect();
    let centers: Vec<f64> = labels.iter().map(|k| shift * k).collect();
    let mut max_overlap = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let gap = (centers[i] - centers[j]).abs();
            min_gap = min_gap.min(gap);
            max_overlap = max_overlap.max(gaussian_overlap(gap, pointer.sigma));
        }
    }
    let ideal = max_overlap <= pointer.overlap_threshold && min_gap >= pointer.window * pointer.sigma;
    Ok(JointState {
        system: system.clone(),
        pointer: *pointer,
        channels: ChannelEnsemble {
            labels,
            coefficients: system.coefficients.clone(),
            centers,
            max_overlap,
            ideal,
        },
    })
}

impl JointState {
    /// Ψ, ∂_xΨ, ∂_yΨ at time t (coupling on for 0 ≤ t ≤ T, free afterwards).
    pub fn value(&self, t: f64, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
        let s = &self.system;
        let p = &self.pointer;
        let inv = 1.0 / s.length.sqrt();
        let zero = Complex64::new(0.0, 0.0);
        let (mut psi, mut dx, mut dy) = (zero, zero, zero);
        for (a, c) in s.coefficients.iter().enumerate() {
            if *c == zero {
                continue;
            }
            let k = s.k(a);
            let (center, free_t, phase) = if t <= p.duration {
                (p.g * k * t, 0.0, k * x)
            } else {
                let tf = t - p.duration;
                (p.g * k * p.duration, tf, k * x - k * k * tf / (2.0 * s.mass))
            };
            let (chi, dchi) = free_packet(y, center, 0.0, p.sigma, p.mass, free_t);
            let sys = c * Complex64::from_polar(inv, phase);
            psi += sys * chi;
            dx += sys * chi * Complex64::new(0.0, k);
            dy += sys * dchi;
        }
        (psi, dx, dy)
    }

    /// Guidance velocity (ẋ, ẏ) at time t.
    pub fn velocity(&self, t: f64, x: f64, y: f64) -> Result<[f64; 2]> {
        let (psi, dx, dy) = self.value(t, x, y);
        if psi.norm_sqr() < 1e-300 {
            return Err(Error::Node {
                at: vec![t, x, y],
                density: psi.norm_sqr(),
                floor: 1e-300,
            });
        }
        let (vx, vy) = ((dx / psi).im, (dy / psi).im);
        Ok(if t < self.pointer.duration {
            // H = g p_x p_y carries x with ∂_yS and y with ∂_xS
            [self.pointer.g * vy, self.pointer.g * vx]
        } else {
            [vx / self.system.mass, vy / self.pointer.mass]
        })
    }

    /// Same joint state with every channel but `a` removed.
    pub fn restricted(&self, a: usize) -> Self {
        let mut out = self.clone();
        for (b, c) in out.system.coefficients.iter_mut().enumerate() {
            if b != a {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out.channels.coefficients = out.system.coefficients.clone();
        out
    }

    /// Channel whose window contains y at time t, if any.
    pub fn channel_of(&self, t: f64, y: f64) -> Option<usize> {
        let p = &self.pointer;
        let width = p.width_at((t - p.duration).max(0.0));
        let scale = if t >= p.duration { 1.0 } else { t / p.duration };
        self.channels
            .centers
            .iter()
            .enumerate()
            .filter(|(_, c)| (y - *c * scale).abs() <= p.window * width)
            .min_by(|a, b| (y - a.1 * scale).abs().total_cmp(&(y - b.1 * scale).abs()))
            .map(|(i, _)| i)
    }

    /// Weight ∫∫|⟨ψ_a|Ψ(t)⟩|² dy of each channel, by grid quadrature in x
    /// and y.
    pub fn channel_weights(&self, t: f64, nx: usize, ny: usize) -> Vec<f64> {
        let s = &self.system;
        let p = &self.pointer;
        let width = p.width_at((t - p.duration).max(0.0));
        let (ylo, yhi) = self.y_range(t, width);
        let hy = (yhi - ylo) / ny as f64;
        let hx = s.length / nx as f64;
        (0..s.momenta.len())
            .map(|a| {
                let k = s.k(a);
                let mut total = 0.0;
                for iy in 0..ny {
                    let y = ylo + (iy as f64 + 0.5) * hy;
                    let mut proj = Complex64::new(0.0, 0.0);
                    for ix in 0..nx {
                        let x = ix as f64 * hx;
                        proj += Complex64::from_polar(1.0 / s.length.sqrt(), -k * x) * self.value(t, x, y).0 * hx;
                    }
                    total += proj.norm_sqr() * hy;
                }
                total
            })
            .collect()
    }

    fn y_range(&self, t: f64, width: f64) -> (f64, f64) {
        let scale = if t >= self.pointer.duration { 1.0 } else { t / self.pointer.duration };
        let lo = self.channels.centers.iter().fold(0.0f64, |m, c| m.min(c * scale));
        let hi = self.channels.centers.iter().fold(0.0f64, |m, c| m.max(c * scale));
        (lo - 10.0 * width, hi + 10.0 * width)
    }

    /// Integrate one configuration from t0 to t1.
    pub fn integrate(&self, t0: f64, start: [f64; 2], t1: f64, tol: f64) -> Result<[f64; 2]> {
        let mut y = start.to_vec();
        let mut t = t0;
        // split at the end of the coupling, where the velocity law changes
        let breaks = if t0 < self.pointer.duration && t1 > self.pointer.duration {
            vec![self.pointer.duration, t1]
        } else {
            vec![t1]
        };
        for end in breaks {
            let opts = StepOptions {
                h_max: (end - t).abs() / 20.0,
                ..StepOptions::with_tol(tol)
            };
            let sol = ode::integrate(
                |s, q, dq| {
                    // evaluate the coupling law on its own closed interval
                    let s_eff = if end <= self.pointer.duration { s.min(self.pointer.duration * (1.0 - 1e-15)) } else { s.max(self.pointer.duration) };
                    let v = self.velocity(s_eff, q[0], q[1])?;
                    dq.copy_from_slice(&v);
                    Ok::<(), Error>(())
                },
                t,
                &y,
                end,
                &opts,
                |_| ode::Control::Continue,
            )?;
            if let Outcome::FieldFailed(e) = sol.outcome {
                return Err(e);
            }
            y = sol.last_state().unwrap_or(y);
            t = end;
        }
        Ok([y[0], y[1]])
    }
}

/// Settings for [`run_ensemble`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    /// Free flight after the coupling.
    pub t_after: f64,
    pub tol: f64,
    /// Sampling grid cells (x, y).
    pub grid: (usize, usize),
    /// Worker threads; results do not depend on this.
    pub threads: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            t_after: 1.0,
            tol: 1e-9,
            grid: (256, 256),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// One ensemble member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub index: u64,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub channel: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub seed: u64,
    pub stream: String,
    pub probabilities: Vec<f64>,
    pub counts: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub gap_hits: usize,
    /// max |x_joint − x_single| over the free flight, per sample.
    pub max_x_deviation: f64,
    pub samples: Vec<SampleRecord>,
}

impl EnsembleReport {
    pub fn total(&self) -> usize {
        self.samples.len()
    }

    /// ½ Σ |f_a − p_a|.
    pub fn tv_distance(&self) -> f64 {
        0.5 * self.frequencies.iter().zip(&self.probabilities).map(|(f, p)| (f - p).abs()).sum::<f64>()
    }

    /// Fails when more than 0.1% of samples end between channels.
    pub fn check_gaps(&self) -> Result<()> {
        if self.gap_hits as f64 > 1e-3 * self.total() as f64 {
            return Err(Error::GapHits {
                hits: self.gap_hits,
                total: self.total(),
            });
        }
        Ok(())
    }
}

/// (f − p)/√(p(1−p)/N), with exact agreement at p ∈ {0, 1} scoring 0.
pub fn binomial_z(f: f64, p: f64, n: usize) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return if (f - p).abs() == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (f - p) / (p * (1.0 - p) / n as f64).sqrt()
}

/// Run `n` independent samples in parallel; sample i only sees stream i.
pub(crate) fn parallel_map<T: Send, F: Fn(u64) -> T + Sync>(n: usize, threads: usize, f: F) -> Vec<T> {
    let threads = threads.clamp(1, n.max(1));
    let chunk = n.div_ceil(threads);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                scope.spawn(move || {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(n);
                    (lo..hi).map(|i| f(i as u64)).collect::<Vec<T>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Sample initial configurations from |ψ(x)χ(y)|², guide them through the
/// coupling and a free flight, and tally the channel each ends in.
pub fn run_ensemble(joint: &JointState, n_samples: usize, seed: u64, opts: &EnsembleOptions) -> Result<EnsembleReport> {
    run_ensemble_named(joint, n_samples, seed, "ensemble", opts)
}

pub fn run_ensemble_named(
    joint: &JointState,
    n_samples: usize,
    seed: u64,
    stream: &str,
    opts: &EnsembleOptions,
) -> Result<EnsembleReport> {
    if !joint.channels.ideal {
        return Err(Error::ChannelOverlap {
            overlap: joint.channels.max_overlap,
            threshold: joint.pointer.overlap_threshold,
        });
    }
    if n_samples == 0 {
        return Err(Error::invalid("ensemble needs at least one sample"));
    }
    // packets spread during the free flight; the gap must still hold at the end
    let final_width = joint.pointer.width_at(opts.t_after.max(0.0));
    let centers = &joint.channels.centers;
    for i in 0..centers.len() {
        for k in i + 1..centers.len() {
            let overlap = gaussian_overlap(centers[i] - centers[k], final_width);
            if overlap > joint.pointer.overlap_threshold {
                return Err(Error::ChannelOverlap {
                    overlap,
                    threshold: joint.pointer.overlap_threshold,
                });
            }
        }
    }
    let s = &joint.system;
    let p = &joint.pointer;
    let sampler = GridSampler::new(
        &[(0.0, s.length), (-8.0 * p.sigma, 8.0 * p.sigma)],
        &[opts.grid.0, opts.grid.1],
        |q| joint.value(0.0, q[0], q[1]).0.norm_sqr(),
    )?;
    let t_coupled = p.duration;
    let t_end = p.duration + opts.t_after;
    let results = parallel_map(n_samples, opts.threads, |i| -> Result<(SampleRecord, f64)> {
        let mut r = rng::stream(seed, stream, i);
        let start = sampler.sample(&mut r);
        let start = [start[0], start[1]];
        let mid = joint.integrate(0.0, start, t_coupled, opts.tol)?;
        let end = if opts.t_after > 0.0 { joint.integrate(t_coupled, mid, t_end, opts.tol)? } else { mid };
        let channel = joint.channel_of(t_end, end[1]);
        let dev = match channel {
            Some(a) => (end[0] - mid[0] - s.k(a) / s.mass * opts.t_after).abs(),
            None => 0.0,
        };
        Ok((
            SampleRecord {
                index: i,
                start,
                end,
                channel,
            },
            dev,
        ))
    });
    let mut counts = vec![0usize; s.momenta.len()];
    let mut gap_hits = 0;
    let mut max_dev = 0.0f64;
    let mut samples = Vec::with_capacity(n_samples);
    for r in results {
        let (rec, dev) = r?;
        match rec.channel {
            Some(a) => counts[a] += 1,
            None => gap_hits += 1,
        }
        max_dev = max_dev.max(dev);
        samples.push(rec);
    }
    let probabilities = s.probabilities();
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
    let z_scores = frequencies.iter().zip(&probabilities).map(|(f, p)| binomial_z(*f, *p, n_samples)).collect();
    Ok(EnsembleReport {
        seed,
        stream: stream.to_string(),
        probabilities,
        counts,
        frequencies,
        z_scores,
        gap_hits,
        max_x_deviation: max_dev,
        samples,
    })
}

/// Mean total-variation distance against ensemble size.
#[derive(Debug, Clone, PartialEq)]
pub struct BornConvergence {
    /// (N, mean TV distance over repeats).
    pub points: Vec<(usize, f64)>,
    /// Least-squares slope of log TV against log N.
    pub slope: f64,
}

pub fn born_convergence(
    joint: &JointState,
    sizes: &[usize],
    repeats: usize,
    seed: u64,
    opts: &EnsembleOptions,
) -> Result<BornConvergence> {
    if sizes.len() < 2 || repeats == 0 {
        return Err(Error::invalid("convergence needs at least two sizes and one repeat"));
    }
    let mut points = Vec::new();
    for &n in sizes {
        let mut acc = 0.0;
        for r in 0..repeats {
            let rep = run_ensemble_named(joint, n, seed, &format!("born-{n}-{r}"), opts)?;
            rep.check_gaps()?;
            acc += rep.tv_distance();
        }
        points.push((n, acc / repeats as f64));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(BornConvergence { points, slope: sxy / sxx })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_channel(p0: f64) -> JointState {
        let sys = RingSystem::new(2.0 * PI, 1.0, vec![1, 2], vec![c(p0.sqrt()), c((1.0 - p0).sqrt())]).unwrap();
        entangle(&sys, &PointerSpec::new(1.0, 20.0, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn free_packet_matches_static_gaussian_at_t0() {
        let (v, d) = free_packet(0.3, 0.1, 0.0, 0.7, 2.0, 0.0);
        let expect = (PI * 0.49f64).powf(-0.25) * (-(0.2f64).powi(2) / (2.0 * 0.49)).exp();
        assert!((v.re - expect).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!((d.re + 0.2 / 0.49 * expect).abs() < 1e-14);
    }

    #[test]
    fn channel_overlap_and_centers() {
        let j = two_channel(0.3);
        assert_eq!(j.channels.centers, vec![20.0, 40.0]);
        assert!(j.channels.max_overlap < 1e-10 && j.channels.ideal);
        let near = entangle(&j.system, &PointerSpec::new(1.0, 3.0, 1.0, 1.0)).unwrap();
        assert!(!near.channels.ideal);
        assert!(matches!(run_ensemble(&near, 10, 1, &EnsembleOptions::default()), Err(Error::ChannelOverlap { .. })));
    }

    #[test]
    fn coupling_preserves_channel_weights() {
        let j = two_channel(0.3);
        let w = j.channel_weights(1.0, 16, 800);
        assert!((w[0] - 0.3).abs() < 1e-10 && (w[1] - 0.7).abs() < 1e-10, "{w:?}");
    }

    #[test]
    fn single_eigenstate_lands_in_one_channel() {
        let sys = RingSystem::new(2.0 * PI, 1.0, vec![3], vec![c(1.0)]).unwrap();
        let j = entangle(&sys, &PointerSpec::new(1.0, 10.0, 1.0, 1.0)).unwrap();
        let rep = run_ensemble(&j, 200, 7, &EnsembleOptions::default()).unwrap();
        assert_eq!(rep.frequencies, vec![1.0]);
        // the pointer shifts by gTk and then spreads by σ(t)/σ about the center
        let stretch = 2f64.sqrt();
        for s in &rep.samples {
            assert!((s.end[1] - 30.0 - stretch * s.start[1]).abs() < 1e-6, "{s:?}");
            assert!((s.end[0] - s.start[0] - 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn small_ensemble_is_consistent() {
        let j = two_channel(0.3);
        let rep = run_ensemble(&j, 400, 3, &EnsembleOptions::default()).unwrap();
        assert_eq!(rep.gap_hits, 0);
        assert!(rep.z_scores.iter().all(|z| z.abs() < 4.0), "{:?}", rep.z_scores);
        assert!(rep.max_x_deviation < 1e-6);
        // thread count does not change results
        let one = run_ensemble(&j, 50, 3, &EnsembleOptions { threads: 1, ..Default::default() }).unwrap();
        let many = run_ensemble(&j, 50, 3, &EnsembleOptions { threads: 5, ..Default::default() }).unwrap();
        assert_eq!(one.samples, many.samples);
    }
}
