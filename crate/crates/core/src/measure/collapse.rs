//! Effective collapse of a free field state under a particle-number
//! measurement.
//!
//! The pointer receives an impulse e^{igT N y}, so sector n of the field
//! becomes entangled with a pointer packet of momentum gTn. After a free
//! flight the packets separate and the guided configuration (q, y) ends up
//! in one of them; the other sectors no longer affect its motion, which is
//! read off from the effectivities of the joint terms Ψ̃_n(q)χ_n(y).

use num_complex::Complex64;

use super::{binomial_z, free_packet, gaussian_overlap, parallel_map, GridSampler, PointerSpec};
use crate::error::{Error, Result};
use crate::ode::{self, Control, Outcome, StepOptions};
use crate::qftfun::{effectivity_from_sectors, sample, FieldConfig, FunctionalState, Propagator};
use crate::rng;

/// One guided history through the measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRun {
    /// (q_1 … q_M, y) right after the impulse.
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    /// Field effectivities at the start, ignoring the pointer.
    pub before: Vec<f64>,
    /// Effectivities of the joint terms Ψ̃_n χ_n at the end.
    pub after: Vec<f64>,
    /// Particle number read off the pointer, if it sits in a window.
    pub channel: Option<usize>,
    /// Pointer packet overlap at the final time.
    pub overlap: f64,
    pub ideal: bool,
}

struct Joint<'a> {
    prop: &'a Propagator,
    state: &'a FunctionalState,
    pointer: PointerSpec,
    kick: f64,
    /// Sectors with nonzero weight; only these get pointer windows.
    populated: Vec<usize>,
}

impl Joint<'_> {
    /// Ψ, ∇_qΨ, ∂_yΨ and the per-sector joint terms.
    fn eval(&self, t: f64, z: &[f64]) -> (Complex64, Vec<Complex64>, Complex64, Vec<Complex64>) {
        let m = self.prop.spec.mode_count();
        let c = self.prop.state_at(self.state, t);
        let s = sample(&self.prop.spec, &self.prop.basis, &c.coeffs, &FieldConfig::new(z[..m].to_vec()));
        let y = z[m];
        let p = &self.pointer;
        let zero = Complex64::new(0.0, 0.0);
        let (mut psi, mut dq, mut dy) = (zero, vec![zero; m], zero);
        let mut terms = Vec::with_capacity(s.sectors.len());
        for (n, sec) in s.sectors.iter().enumerate() {
            let (chi, dchi) = free_packet(y, 0.0, self.kick * n as f64, p.sigma, p.mass, t);
            terms.push(sec * chi);
            psi += sec * chi;
            dy += sec * dchi;
            for j in 0..m {
                dq[j] += s.sector_grad[n][j] * chi;
            }
        }
        (psi, dq, dy, terms)
    }

    fn velocity(&self, t: f64, z: &[f64], out: &mut [f64]) -> Result<()> {
        let (psi, dq, dy, _) = self.eval(t, z);
        if psi.norm_sqr() < 1e-300 {
            return Err(Error::Node {
                at: z.to_vec(),
                density: psi.norm_sqr(),
                floor: 1e-300,
            });
        }
        let m = dq.len();
        for j in 0..m {
            out[j] = (dq[j] / psi).im;
        }
        out[m] = (dy / psi).im / self.pointer.mass;
        Ok(())
    }

    fn channel_of(&self, t: f64, y: f64) -> Option<usize> {
        let width = self.pointer.width_at(t);
        self.populated
            .iter()
            .map(|&n| (n, (y - self.kick * n as f64 * t / self.pointer.mass).abs()))
            .filter(|(_, d)| *d <= self.pointer.window * width)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(n, _)| n)
    }

    fn overlap(&self, t: f64) -> f64 {
        let dn = self.populated.windows(2).map(|w| w[1] - w[0]).min();
        match dn {
            Some(dn) => gaussian_overlap(self.kick * dn as f64 * t / self.pointer.mass, self.pointer.width_at(t)),
            None => 0.0,
        }
    }
}

fn joint<'a>(prop: &'a Propagator, state: &'a FunctionalState, pointer: &PointerSpec) -> Result<Joint<'a>> {
    if prop.spec.lambda != 0.0 {
        return Err(Error::invalid("the collapse model needs a free field (lambda = 0) so sectors do not mix"));
    }
    pointer.validate()?;
    let weights = state.sector_weights(&prop.basis);
    let total: f64 = weights.iter().sum();
    let populated = (0..weights.len()).filter(|&n| weights[n] > 1e-14 * total).collect();
    Ok(Joint {
        prop,
        state,
        pointer: *pointer,
        kick: pointer.g * pointer.duration,
        populated,
    })
}

/// Guide one configuration `start` = (q, y) from the impulse to `t_final`.
pub fn effectivity_collapse(
    prop: &Propagator,
    state: &FunctionalState,
    pointer: &PointerSpec,
    start: &[f64],
    t_final: f64,
    tol: f64,
) -> Result<CollapseRun> {
    let j = joint(prop, state, pointer)?;
    collapse_one(&j, start, t_final, tol)
}

fn collapse_one(j: &Joint, start: &[f64], t_final: f64, tol: f64) -> Result<CollapseRun> {
    let m = j.prop.spec.mode_count();
    if start.len() != m + 1 {
        return Err(Error::invalid("start needs one amplitude per mode plus the pointer coordinate"));
    }
    if !(t_final > 0.0) {
        return Err(Error::invalid("final time must be positive"));
    }
    let t0 = j.state.t;
    let c0 = j.prop.state_at(j.state, t0);
    let s0 = sample(&j.prop.spec, &j.prop.basis, &c0.coeffs, &FieldConfig::new(start[..m].to_vec()));
    let before = effectivity_from_sectors(&s0.sectors)?.e;
    let opts = StepOptions {
        h_max: t_final / 40.0,
        ..StepOptions::with_tol(tol)
    };
    // time is measured from the impulse
    let sol = ode::integrate(
        |t, z, dz| j.velocity(t, z, dz),
        0.0,
        start,
        t_final,
        &opts,
        |_| Control::Continue,
    )?;
    if let Outcome::FieldFailed(e) = sol.outcome {
        return Err(e);
    }
    let end = sol.last_state().unwrap_or_else(|| start.to_vec());
    let (_, _, _, terms) = j.eval(t_final, &end);
    let after = effectivity_from_sectors(&terms)?.e;
    let overlap = j.overlap(t_final);
    Ok(CollapseRun {
        start: start.to_vec(),
        channel: j.channel_of(t_final, end[m]),
        end,
        before,
        after,
        overlap,
        ideal: overlap <= j.pointer.overlap_threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseEnsemble {
    /// Born weights ‖Ψ̃_n‖² of the particle-number sectors.
    pub probabilities: Vec<f64>,
    pub counts: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub gap_hits: usize,
    /// max over runs of 1 − e_n for the sector n the pointer shows.
    pub max_residual_effectivity: f64,
    pub runs: Vec<CollapseRun>,
}

/// Sample (q, y) from the post-impulse |Ψ|², guide each to `t_final` and
/// tally the pointer readings.
#[allow(clippy::too_many_arguments)]
pub fn collapse_ensemble(
    prop: &Propagator,
    state: &FunctionalState,
    pointer: &PointerSpec,
    t_final: f64,
    n_samples: usize,
    seed: u64,
    cells: usize,
    tol: f64,
) -> Result<CollapseEnsemble> {
    let j = joint(prop, state, pointer)?;
    if n_samples == 0 || cells == 0 {
        return Err(Error::invalid("ensemble needs samples and grid cells"));
    }
    let m = prop.spec.mode_count();
    let overlap = j.overlap(t_final);
    if overlap > pointer.overlap_threshold {
        return Err(Error::ChannelOverlap {
            overlap,
            threshold: pointer.overlap_threshold,
        });
    }
    // enough room for the highest occupied oscillator level
    let reach = ((2 * prop.spec.n_max + 1) as f64).sqrt() + 4.0;
    let mut ranges: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let a = reach / prop.spec.omega(k).sqrt();
            (-a, a)
        })
        .collect();
    ranges.push((-8.0 * pointer.sigma, 8.0 * pointer.sigma));
    // the impulse imprints fringes of period 2π/(gT·Δn) in y; resolve each with 8 cells
    let spread = match (j.populated.first(), j.populated.last()) {
        (Some(a), Some(b)) => (b - a) as f64,
        _ => 0.0,
    };
    let fringes = 16.0 * pointer.sigma * j.kick.abs() * spread / (2.0 * std::f64::consts::PI);
    let y_cells = cells.max((8.0 * fringes).ceil() as usize);
    let mut grid = vec![cells; m];
    grid.push(y_cells);
    let sampler = GridSampler::new(&ranges, &grid, |z| j.eval(0.0, z).0.norm_sqr())?;
    let results = parallel_map(n_samples, std::thread::available_parallelism().map_or(1, |n| n.get()), |i| {
        let mut r = rng::stream(seed, "collapse", i);
        let start = sampler.sample(&mut r);
        collapse_one(&j, &start, t_final, tol)
    });
    let probabilities = prop.state_at(state, state.t).sector_weights(&prop.basis);
    let total: f64 = probabilities.iter().sum();
    let probabilities: Vec<f64> = probabilities.iter().map(|p| p / total).collect();
    let mut counts = vec![0usize; probabilities.len()];
    let mut gap_hits = 0;
    let mut worst = 0.0f64;
    let mut runs = Vec::with_capacity(n_samples);
    for r in results {
        let r = r?;
        match r.channel {
            Some(n) => {
                counts[n] += 1;
                worst = worst.max(1.0 - r.after[n]);
            }
            None => gap_hits += 1,
        }
        runs.push(r);
    }
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
    let z_scores = frequencies.iter().zip(&probabilities).map(|(f, p)| binomial_z(*f, *p, n_samples)).collect();
    Ok(CollapseEnsemble {
        probabilities,
        counts,
        frequencies,
        z_scores,
        gap_hits,
        max_residual_effectivity: worst,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qftfun::LatticeSpec;

    fn setup() -> (Propagator, FunctionalState) {
        let spec = LatticeSpec::new(1.0, 1, 1.0, 0.0, 2).unwrap();
        let p = Propagator::new(&spec).unwrap();
        let h = Complex64::new(0.6f64.sqrt(), 0.0);
        let st = FunctionalState::from_occupations(&p.basis, &[(vec![0], h), (vec![1], Complex64::new(0.4f64.sqrt(), 0.0))]).unwrap();
        (p, st)
    }

    #[test]
    fn sectors_decohere_after_separation() {
        let (p, st) = setup();
        let ptr = PointerSpec::new(1.0, 12.0, 1.0, 1.0);
        let run = effectivity_collapse(&p, &st, &ptr, &[0.3, 0.1], 4.0, 1e-9).unwrap();
        let n = run.channel.expect("lands in a window");
        assert!(run.ideal);
        assert!(1.0 - run.after[n] < 1e-6, "{:?}", run.after);
        assert!(run.before[0] > 0.0 && run.before[1] > 0.0);
    }

    #[test]
    fn interacting_field_is_rejected() {
        let spec = LatticeSpec::new(1.0, 1, 1.0, 0.1, 2).unwrap();
        let p = Propagator::new(&spec).unwrap();
        let st = FunctionalState::vacuum(&p.basis);
        let ptr = PointerSpec::new(1.0, 12.0, 1.0, 1.0);
        assert!(matches!(effectivity_collapse(&p, &st, &ptr, &[0.0, 0.0], 1.0, 1e-9), Err(Error::Invalid(_))));
    }

    #[test]
    fn small_ensemble_follows_sector_weights() {
        let (p, st) = setup();
        let ptr = PointerSpec::new(1.0, 12.0, 1.0, 1.0);
        let e = collapse_ensemble(&p, &st, &ptr, 4.0, 200, 5, 48, 1e-8).unwrap();
        assert_eq!(e.gap_hits, 0);
        assert!(e.z_scores.iter().all(|z| z.abs() < 4.0), "{:?} {:?}", e.frequencies, e.probabilities);
        assert!(e.max_residual_effectivity < 1e-6);
    }
}
