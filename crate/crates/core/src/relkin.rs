//! Positive-frequency Klein–Gordon waves as finite plane-wave sums.
//!
//! Units are natural (ħ = c = 1) and the metric is diag(1, −1, −1, −1).
//! Every mode is an exact solution, so evaluating a [`ModeSum`] at any
//! spacetime point is exact evolution; derivatives are closed-form sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use crate::error::{Error, Result};

/// Minkowski metric signature entries.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Relative node floor: |ψ|² below this times the mean mode intensity is a node.
pub const NODE_FLOOR: f64 = 1e-12;

/// Largest phase increment accepted between consecutive [`polar`] calls.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;

/// Four components (t, x, y, z). Unused spatial slots are zero when d = 1.
///
/// Whether the components are upper or lower index is a property of the
/// quantity; functions returning a `FourVector` say which they return.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self([t, x, y, z])
    }

    /// Point `(t, x)` in 1+1 dimensions.
    pub fn event(t: f64, x: f64) -> Self {
        Self([t, x, 0.0, 0.0])
    }

    pub fn t(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    /// Raise or lower an index (the operation is its own inverse).
    pub fn flip_index(&self) -> Self {
        let [t, x, y, z] = self.0;
        Self([t, -x, -y, -z])
    }

    /// Minkowski contraction of an upper-index vector with a lower-index one
    /// (plain component sum).
    pub fn contract(&self, other: &FourVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// η^{μν} a_μ b_ν for two vectors with the same index position.
    pub fn minkowski(&self, other: &FourVector) -> f64 {
        (0..4).map(|i| METRIC[i] * self.0[i] * other.0[i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.map(|v| v * s))
    }

    pub fn add(&self, other: &FourVector) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + other.0[i]))
    }

    pub fn sub(&self, other: &FourVector) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - other.0[i]))
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One on-shell plane wave. `k` is the spatial wave vector; the frequency
/// `k0 = +sqrt(|k|² + m²)` is implied by the owning [`ModeSum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: [f64; 3],
    pub amplitude: Complex64,
}

impl Mode {
    pub fn new(k: [f64; 3], amplitude: Complex64) -> Self {
        Self { k, amplitude }
    }

    /// 1-d mode with wave number `k`.
    pub fn line(k: f64, amplitude: Complex64) -> Self {
        Self::new([k, 0.0, 0.0], amplitude)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    /// Lower-index k_μ = (k0, −k).
    k_lower: [f64; 4],
    coeff: Complex64,
}

/// ψ = Σ a · e^{−ik·x} / sqrt((2π)^d · 2k0).
///
/// A mode sum built with [`ModeSum::new`] lives on a periodic cell of
/// side `cell`: every wave vector component must be a multiple of 2π/cell.
/// Each mode carries a k-space measure element (default (2π/cell)^d) used
/// by the mode-space particle number N = Σ |a|² / Δk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSum {
    mass: f64,
    dim: usize,
    cell: Option<f64>,
    modes: Vec<Mode>,
    measure: Vec<f64>,
    terms: Vec<Term>,
    node_floor: f64,
}

impl ModeSum {
    /// Build a mode sum on a periodic cell.
    pub fn new(mass: f64, dim: usize, cell: f64, modes: Vec<Mode>) -> Result<Self> {
        if !(cell.is_finite() && cell > 0.0) {
            return Err(Error::invalid(format!("cell length must be positive, got {cell}")));
        }
        let dk = 2.0 * PI / cell;
        for m in &modes {
            for c in &m.k {
                let n = c / dk;
                if (n - n.round()).abs() > 1e-9 * n.abs().max(1.0) {
                    return Err(Error::invalid(format!(
                        "wave vector {:?} is not on the lattice of cell {cell}",
                        m.k
                    )));
                }
            }
        }
        let measure = vec![dk.powi(dim as i32); modes.len()];
        Self::with_measure(mass, dim, Some(cell), modes, measure)
    }

    /// Build a mode sum where ψ is given by raw plane-wave coefficients:
    /// ψ = Σ c · e^{−ik·x}.
    pub fn from_coefficients(
        mass: f64,
        dim: usize,
        cell: f64,
        modes: impl IntoIterator<Item = ([f64; 3], Complex64)>,
    ) -> Result<Self> {
        let modes = modes
            .into_iter()
            .map(|(k, c)| {
                let k0 = on_shell(mass, &k);
                Mode::new(k, c * ((2.0 * PI).powi(dim as i32) * 2.0 * k0).sqrt())
            })
            .collect();
        Self::new(mass, dim, cell, modes)
    }

    fn with_measure(
        mass: f64,
        dim: usize,
        cell: Option<f64>,
        modes: Vec<Mode>,
        measure: Vec<f64>,
    ) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(format!("mass must be positive, got {mass}")));
        }
        if dim != 1 && dim != 3 {
            return Err(Error::invalid(format!("spatial dimension must be 1 or 3, got {dim}")));
        }
        if modes.is_empty() {
            return Err(Error::invalid("a mode sum needs at least one mode"));
        }
        for m in &modes {
            if m.k[dim..].iter().any(|c| *c != 0.0) {
                return Err(Error::invalid(format!(
                    "wave vector {:?} has components beyond dimension {dim}",
                    m.k
                )));
            }
            if !m.k.iter().all(|c| c.is_finite()) || !m.amplitude.is_finite() {
                return Err(Error::invalid("non-finite mode data"));
            }
        }
        for (i, a) in modes.iter().enumerate() {
            for b in &modes[i + 1..] {
                if a.k == b.k {
                    return Err(Error::invalid(format!("duplicate wave vector {:?}", a.k)));
                }
            }
        }
        let norm = (2.0 * PI).powi(dim as i32);
        let terms: Vec<Term> = modes
            .iter()
            .map(|m| {
                let k0 = on_shell(mass, &m.k);
                Term {
                    k_lower: [k0, -m.k[0], -m.k[1], -m.k[2]],
                    coeff: m.amplitude / (norm * 2.0 * k0).sqrt(),
                }
            })
            .collect();
        let mean = terms.iter().map(|t| t.coeff.norm_sqr()).sum::<f64>() / terms.len() as f64;
        Ok(Self {
            mass,
            dim,
            cell,
            modes,
            measure,
            terms,
            node_floor: NODE_FLOOR * mean,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell(&self) -> Option<f64> {
        self.cell
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn node_floor(&self) -> f64 {
        self.node_floor
    }

    /// On-shell frequency of mode `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        self.terms[i].k_lower[0]
    }

    /// Plane-wave coefficient of mode `i` (ψ = Σ c e^{−ik·x}).
    pub fn coefficient(&self, i: usize) -> Complex64 {
        self.terms[i].coeff
    }

    /// Lower-index four-momentum of mode `i`.
    pub fn k_lower(&self, i: usize) -> FourVector {
        FourVector(self.terms[i].k_lower)
    }

    /// Largest |k|/m over the modes.
    pub fn max_velocity_ratio(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.k.iter().map(|c| c * c).sum::<f64>().sqrt() / self.mass)
            .fold(0.0, f64::max)
    }

    /// Same modes with every amplitude multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| Mode::new(m.k, m.amplitude * c))
            .collect();
        Self::with_measure(self.mass, self.dim, self.cell, modes, self.measure.clone())
            .expect("scaling preserves validity")
    }

    /// Rescale so that the mode-space particle number equals one.
    pub fn normalized(&self) -> Self {
        let n = particle_number(self);
        self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0))
    }

    /// Boost along x by `rapidity` (d = 1 only).
    ///
    /// ψ is a scalar, so plane-wave coefficients are unchanged while wave
    /// vectors transform as four-vectors; amplitudes and the invariant
    /// measure element dk/k0 are rescaled accordingly. The boosted sum has
    /// no periodic cell.
    pub fn boosted(&self, rapidity: f64) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::invalid("boosts are implemented for d = 1"));
        }
        let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
        let mut modes = Vec::with_capacity(self.modes.len());
        let mut measure = Vec::with_capacity(self.modes.len());
        for (i, m) in self.modes.iter().enumerate() {
            let k0 = self.frequency(i);
            let kx = m.k[0];
            let k0b = k0 * ch - kx * sh;
            let kxb = kx * ch - k0 * sh;
            let ratio = k0b / k0;
            modes.push(Mode::new([kxb, 0.0, 0.0], m.amplitude * ratio.sqrt()));
            measure.push(self.measure[i] * ratio);
        }
        let mut boosted = Self::with_measure(self.mass, 1, None, modes, measure)?;
        // keep the original node floor: |ψ|² is frame independent
        boosted.node_floor = self.node_floor;
        Ok(boosted)
    }
}

/// Boost a 1+1 point (or upper-index vector) along x.
pub fn boost_point(x: &FourVector, rapidity: f64) -> FourVector {
    let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
    let [t, xx, y, z] = x.0;
    FourVector([t * ch - xx * sh, xx * ch - t * sh, y, z])
}

pub fn on_shell(mass: f64, k: &[f64; 3]) -> f64 {
    (k.iter().map(|c| c * c).sum::<f64>() + mass * mass).sqrt()
}

/// ψ and its closed-form first and second derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub psi: Complex64,
    /// ∂_μψ (lower index).
    pub d1: [Complex64; 4],
    /// ∂_μ∂_νψ (lower indices, symmetric).
    pub d2: [[Complex64; 4]; 4],
    /// Node floor inherited from the wave.
    pub node_floor: f64,
    pub mass: f64,
}

/// Exact evaluation of ψ, ∂ψ and ∂∂ψ at `x`.
pub fn evaluate(wave: &ModeSum, x: &FourVector) -> WaveSample {
    let zero = Complex64::new(0.0, 0.0);
    let mut psi = zero;
    let mut d1 = [zero; 4];
    let mut d2 = [[zero; 4]; 4];
    for term in &wave.terms {
        let k = &term.k_lower;
        let phase: f64 = k.iter().zip(x.0.iter()).map(|(a, b)| a * b).sum();
        let v = term.coeff * Complex64::from_polar(1.0, -phase);
        psi += v;
        let mi_v = Complex64::new(v.im, -v.re); // −i·v
        for mu in 0..4 {
            d1[mu] += mi_v * k[mu];
            for nu in mu..4 {
                d2[mu][nu] -= v * (k[mu] * k[nu]);
            }
        }
    }
    for mu in 0..4 {
        for nu in 0..mu {
            d2[mu][nu] = d2[nu][mu];
        }
    }
    WaveSample {
        psi,
        d1,
        d2,
        node_floor: wave.node_floor,
        mass: wave.mass,
    }
}

impl WaveSample {
    pub fn density(&self) -> f64 {
        self.psi.norm_sqr()
    }

    pub fn is_node(&self) -> bool {
        self.density() < self.node_floor
    }

    /// η^{μν}∂_μ∂_νψ + m²ψ.
    pub fn kg_residual(&self) -> Complex64 {
        let box_psi: Complex64 = (0..4).map(|i| self.d2[i][i] * METRIC[i]).sum();
        box_psi + self.psi * (self.mass * self.mass)
    }

    /// Scale for relative Klein–Gordon residuals: m²|ψ| plus |□ψ| by terms.
    pub fn kg_scale(&self) -> f64 {
        let parts: f64 = (0..4).map(|i| self.d2[i][i].norm()).sum();
        parts + self.mass * self.mass * self.psi.norm()
    }

    /// Continuity residual ∂^μ j_μ from closed-form derivatives.
    pub fn continuity_residual(&self) -> f64 {
        // ∂_ν j_μ = −2 Im(∂_νψ* ∂_μψ + ψ* ∂_ν∂_μψ)
        (0..4)
            .map(|mu| {
                let v = self.d1[mu].conj() * self.d1[mu] + self.psi.conj() * self.d2[mu][mu];
                -2.0 * METRIC[mu] * v.im
            })
            .sum()
    }

    fn check_node(&self, at: &FourVector) -> Result<()> {
        if self.is_node() {
            return Err(Error::Node {
                at: at.0.to_vec(),
                density: self.density(),
                floor: self.node_floor,
            });
        }
        Ok(())
    }
}

/// j_μ = i(ψ*∂_μψ − ψ∂_μψ*) = −2 Im(ψ*∂_μψ), lower index.
pub fn current(sample: &WaveSample) -> FourVector {
    FourVector(std::array::from_fn(|mu| -2.0 * (sample.psi.conj() * sample.d1[mu]).im))
}

/// ψ = R e^{iS} with S tracked along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarForm {
    pub r: f64,
    pub s: f64,
    /// ∂_μS (lower index).
    pub ds: FourVector,
}

/// Polar decomposition at a sample.
///
/// With a `prior`, S is placed on the branch nearest the prior phase; a
/// wrapped increment larger than π/2 is refused since the path was sampled
/// too coarsely to tell branches apart.
pub fn polar(sample: &WaveSample, prior: Option<&PolarForm>) -> Result<PolarForm> {
    if sample.is_node() {
        return Err(Error::Node {
            at: Vec::new(),
            density: sample.density(),
            floor: sample.node_floor,
        });
    }
    let rho = sample.density();
    let raw = sample.psi.arg();
    let s = match prior {
        None => raw,
        Some(p) => {
            let step = wrap_phase(raw - p.s);
            if step.abs() > MAX_PHASE_STEP {
                return Err(Error::PhaseJump { step });
            }
            p.s + step
        }
    };
    let ds = FourVector(std::array::from_fn(|mu| (sample.psi.conj() * sample.d1[mu]).im / rho));
    Ok(PolarForm {
        r: rho.sqrt(),
        s,
        ds,
    })
}

/// Map an angle into (−π, π].
pub fn wrap_phase(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Second derivatives of R = |ψ| (lower indices) from closed-form ψ derivatives.
fn amplitude_hessian(sample: &WaveSample) -> [[f64; 4]; 4] {
    let rho = sample.density();
    let r = rho.sqrt();
    let drho: [f64; 4] = std::array::from_fn(|mu| 2.0 * (sample.psi.conj() * sample.d1[mu]).re);
    std::array::from_fn(|mu| {
        std::array::from_fn(|nu| {
            let d2rho = 2.0 * (sample.d1[mu].conj() * sample.d1[nu] + sample.psi.conj() * sample.d2[mu][nu]).re;
            d2rho / (2.0 * r) - drho[mu] * drho[nu] / (4.0 * r * r * r)
        })
    })
}

/// Q = (1/2m) ∂^μ∂_μR / R from a sample.
pub fn quantum_potential_at(sample: &WaveSample) -> Result<f64> {
    sample.check_node(&FourVector::default())?;
    let hess = amplitude_hessian(sample);
    let box_r: f64 = (0..4).map(|i| METRIC[i] * hess[i][i]).sum();
    Ok(box_r / (2.0 * sample.mass * sample.density().sqrt()))
}

/// Quantum potential of `wave` at `x`.
pub fn quantum_potential(wave: &ModeSum, x: &FourVector) -> Result<f64> {
    let sample = evaluate(wave, x);
    sample.check_node(x)?;
    quantum_potential_at(&sample)
}

/// −(∂S)²/2m + m/2 + Q at a sample (zero for any solution).
pub fn hamilton_jacobi_residual(sample: &WaveSample) -> Result<f64> {
    let p = polar(sample, None)?;
    let q = quantum_potential_at(sample)?;
    let m = sample.mass;
    Ok(-p.ds.minkowski(&p.ds) / (2.0 * m) + m / 2.0 + q)
}

/// Uniform grid over one periodicity cell of a wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpatialGrid {
    pub points_per_dim: usize,
}

impl SpatialGrid {
    pub fn new(points_per_dim: usize) -> Self {
        Self { points_per_dim }
    }

    /// Smallest accepted point count for `wave`.
    pub fn required_points(wave: &ModeSum) -> Result<usize> {
        let cell = wave
            .cell
            .ok_or_else(|| Error::invalid("grid quadrature needs a periodic cell"))?;
        let dk = 2.0 * PI / cell;
        let mut max_beat = 0.0f64;
        for (i, a) in wave.modes.iter().enumerate() {
            for b in &wave.modes[i..] {
                for c in 0..3 {
                    max_beat = max_beat.max((a.k[c] - b.k[c]).abs());
                }
            }
        }
        let p = (max_beat / dk).round() as usize;
        Ok(2 * p + 1)
    }

    fn check(&self, wave: &ModeSum) -> Result<f64> {
        let required = Self::required_points(wave)?;
        if self.points_per_dim < required {
            return Err(Error::Nyquist {
                points: self.points_per_dim,
                required: required - 1,
            });
        }
        Ok(wave.cell.expect("checked above"))
    }

    /// Trapezoid (periodic) quadrature of `f` over the cell at time `t`.
    fn integrate<F: FnMut(&FourVector) -> f64>(&self, wave: &ModeSum, t: f64, mut f: F) -> Result<f64> {
        let cell = self.check(wave)?;
        let n = self.points_per_dim;
        let h = cell / n as f64;
        let weight = h.powi(wave.dim as i32);
        let mut sum = 0.0;
        match wave.dim {
            1 => {
                for i in 0..n {
                    sum += f(&FourVector::event(t, i as f64 * h));
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let x = FourVector::new(t, i as f64 * h, j as f64 * h, k as f64 * h);
                            sum += f(&x);
                        }
                    }
                }
            }
        }
        Ok(sum * weight)
    }
}

/// Mode-space particle number N = Σ |a|²/Δk.
pub fn particle_number(wave: &ModeSum) -> f64 {
    wave.modes
        .iter()
        .zip(&wave.measure)
        .map(|(m, dk)| m.amplitude.norm_sqr() / dk)
        .sum()
}

/// N = ∫ j0 d^dx over the cell at time `t`.
pub fn particle_number_grid(wave: &ModeSum, t: f64, grid: &SpatialGrid) -> Result<f64> {
    grid.integrate(wave, t, |x| current(&evaluate(wave, x)).0[0])
}

/// N_phys = ∫ |j0| d^dx over the cell at time `t`.
pub fn physical_particle_number(wave: &ModeSum, t: f64, grid: &SpatialGrid) -> Result<f64> {
    grid.integrate(wave, t, |x| current(&evaluate(wave, x)).0[0].abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_mode(ratio: f64) -> ModeSum {
        ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([1.0, 0.0, 0.0], c(1.0, 0.0)), ([0.0; 3], c(ratio, 0.0))])
            .unwrap()
    }

    #[test]
    fn unit_mode_at_origin_is_one() {
        let k = [1.0, 0.0, 0.0];
        let k0 = on_shell(1.0, &k);
        let a = ((2.0 * PI) * 2.0 * k0).sqrt();
        let w = ModeSum::new(1.0, 1, 2.0 * PI, vec![Mode::new(k, c(a, 0.0))]).unwrap();
        let s = evaluate(&w, &FourVector::default());
        assert!((s.psi - c(1.0, 0.0)).norm() < 1e-14);
        for x in [0.3, 1.7, -4.0] {
            let s = evaluate(&w, &FourVector::event(0.9, x));
            assert!((s.psi.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn two_mode_sum_is_linear_at_origin() {
        let w = two_mode(1.2);
        let s = evaluate(&w, &FourVector::default());
        assert!((s.psi - c(2.2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn plane_wave_current_is_twice_k() {
        let w = ModeSum::from_coefficients(2.0, 1, 2.0 * PI, [([3.0, 0.0, 0.0], c(1.0, 0.0))]).unwrap();
        let j = current(&evaluate(&w, &FourVector::event(0.4, 1.1)));
        let k = w.k_lower(0);
        for mu in 0..4 {
            assert!((j.0[mu] - 2.0 * k.0[mu]).abs() < 1e-12);
        }
    }

    #[test]
    fn standing_wave_has_no_spatial_current() {
        let w = ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([1.0, 0.0, 0.0], c(1.0, 0.0)), ([-1.0, 0.0, 0.0], c(1.0, 0.0))])
            .unwrap();
        let j = current(&evaluate(&w, &FourVector::event(0.0, 0.3)));
        // S = −k0·t for a standing wave: no spatial current, j0 = 2k0|ψ|²
        assert!(j.0[1].abs() < 1e-14);
        assert!(j.0[0] > 0.0);
    }

    #[test]
    fn negative_density_region_matches_closed_form() {
        let a: f64 = 1.2;
        let (k10, k20) = (2f64.sqrt(), 1.0);
        let w = two_mode(a);
        let closed_min = 2.0 * (a - 1.0) * (k20 * a - k10);
        assert!(closed_min < 0.0);
        // j0 at Δ = π: x = π at t = 0
        let j0 = current(&evaluate(&w, &FourVector::event(0.0, PI))).0[0];
        assert!((j0 - closed_min).abs() < 1e-12, "{j0} vs {closed_min}");
        let min_grid = (0..2000)
            .map(|i| current(&evaluate(&w, &FourVector::event(0.0, i as f64 * 2.0 * PI / 2000.0))).0[0])
            .fold(f64::INFINITY, f64::min);
        assert!((min_grid - closed_min).abs() < 1e-5);
    }

    #[test]
    fn grid_and_mode_numbers_agree() {
        let w = two_mode(1.2);
        let grid = SpatialGrid::new(16);
        let n_mode = particle_number(&w);
        let n_grid = particle_number_grid(&w, 0.3, &grid).unwrap();
        assert!((n_grid - n_mode).abs() < 1e-6 * n_mode);
        let n_phys = physical_particle_number(&w, 0.3, &SpatialGrid::new(4001)).unwrap();
        assert!(n_phys > n_grid);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let w = ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([5.0, 0.0, 0.0], c(1.0, 0.0)), ([-5.0, 0.0, 0.0], c(0.5, 0.0))])
            .unwrap();
        let err = particle_number_grid(&w, 0.0, &SpatialGrid::new(20)).unwrap_err();
        assert!(matches!(err, Error::Nyquist { .. }));
        assert!(particle_number_grid(&w, 0.0, &SpatialGrid::new(21)).is_ok());
    }

    #[test]
    fn unit_normalization() {
        let w = ModeSum::new(1.0, 1, 2.0 * PI, vec![Mode::line(2.0, c(1.0, 0.0))]).unwrap();
        // Δk = 1 for a 2π cell, so |a| = 1 is one particle
        assert!((particle_number(&w) - 1.0).abs() < 1e-15);
        let scaled = w.scaled(c(0.0, 3.0));
        assert!((particle_number(&scaled) - 9.0).abs() < 1e-12);
        assert!((particle_number(&scaled.normalized()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_of_plane_wave() {
        let w = ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([2.0, 0.0, 0.0], c(1.0, 0.0))]).unwrap();
        let k = w.k_lower(0);
        let x = FourVector::event(0.2, 0.1);
        let p = polar(&evaluate(&w, &x), None).unwrap();
        assert!((p.r - 1.0).abs() < 1e-14);
        assert!((p.s - wrap_phase(-k.contract(&x))).abs() < 1e-12);
        for mu in 0..4 {
            assert!((p.ds.0[mu] + k.0[mu]).abs() < 1e-12);
        }
        assert!(quantum_potential(&w, &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn branch_tracking_crosses_pi() {
        let w = ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([1.0, 0.0, 0.0], c(1.0, 0.0))]).unwrap();
        let mut prior: Option<PolarForm> = None;
        let mut last = 0.0;
        for i in 0..200 {
            let x = FourVector::event(0.0, 0.05 * i as f64);
            let p = polar(&evaluate(&w, &x), prior.as_ref()).unwrap();
            if i > 0 {
                assert!((p.s - last - 0.05).abs() < 1e-12, "jump at {i}");
            }
            last = p.s;
            prior = Some(p);
        }
        assert!(last > 9.0);
        let far = evaluate(&w, &FourVector::event(0.0, 2.0));
        let err = polar(&far, Some(&PolarForm { r: 1.0, s: 0.0, ds: FourVector::default() })).unwrap_err();
        assert!(matches!(err, Error::PhaseJump { .. }));
    }

    #[test]
    fn node_is_signalled() {
        let w = ModeSum::from_coefficients(1.0, 1, 2.0 * PI, [([1.0, 0.0, 0.0], c(1.0, 0.0)), ([-1.0, 0.0, 0.0], c(1.0, 0.0))])
            .unwrap();
        let x = FourVector::event(0.0, PI / 2.0);
        assert!(matches!(quantum_potential(&w, &x), Err(Error::Node { .. })));
        assert!(polar(&evaluate(&w, &x), None).is_err());
    }

    #[test]
    fn quantum_potential_matches_finite_differences() {
        let w = two_mode(1.2);
        let x = FourVector::event(0.3, 0.7);
        let q = quantum_potential(&w, &x).unwrap();
        let r = |y: &FourVector| evaluate(&w, y).psi.norm();
        let h = 1e-3;
        let r0 = r(&x);
        let mut box_r = 0.0;
        for mu in 0..2 {
            let mut e = [0.0; 4];
            e[mu] = h;
            let xp = x.add(&FourVector(e));
            let xm = x.sub(&FourVector(e));
            box_r += METRIC[mu] * (r(&xp) - 2.0 * r0 + r(&xm)) / (h * h);
        }
        let q_fd = box_r / (2.0 * r0);
        assert!((q - q_fd).abs() < 1e-5, "{q} vs {q_fd}");
    }

    #[test]
    fn wrong_lattice_rejected() {
        let err = ModeSum::new(1.0, 1, 2.0 * PI, vec![Mode::line(0.5, c(1.0, 0.0))]).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
        let dup = ModeSum::new(1.0, 1, 2.0 * PI, vec![Mode::line(1.0, c(1.0, 0.0)), Mode::line(1.0, c(2.0, 0.0))]);
        assert!(dup.is_err());
    }
}
