//! n-particle wave functions extracted from a field state, their
//! trajectories, and the effectivity-weighted mass density.
//!
//! Field operators act as ladder-operator matrices on the truncated
//! basis. The sector projection onto total number n is applied explicitly
//! before the field operators, so only Ψ̃_n feeds ψ_n; products of n field
//! operators on the vacuum would otherwise also pick up lower sectors of
//! the same parity.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermite::GaussHermite;
use crate::qftfun::{self, basis_value, FieldConfig, FunctionalState, Propagator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Apply Σ_j w_j q̂_j with q̂_j = (a_j + a_j†)/√(2ω_j), truncated at n_max.
fn apply_field(prop: &Propagator, weights: &[f64], v: &DVector<Complex64>) -> DVector<Complex64> {
    let basis = &prop.basis;
    let n_max = basis.n_max();
    let mut out = DVector::from_element(v.len(), ZERO);
    for (i, c) in v.iter().enumerate() {
        if *c == ZERO {
            continue;
        }
        let occ = basis.occupation(i);
        for (j, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let s = w / (2.0 * prop.spec.omega(j)).sqrt();
            let n = occ[j];
            if n > 0 {
                out[basis.with_mode(i, j, n - 1)] += c * (s * (n as f64).sqrt());
            }
            if n < n_max {
                out[basis.with_mode(i, j, n + 1)] += c * (s * ((n + 1) as f64).sqrt());
            }
        }
    }
    out
}

fn apply_raising(prop: &Propagator, j: usize, v: &DVector<Complex64>) -> DVector<Complex64> {
    let basis = &prop.basis;
    let mut out = DVector::from_element(v.len(), ZERO);
    for (i, c) in v.iter().enumerate() {
        let n = basis.occupation(i)[j];
        if *c != ZERO && n < basis.n_max() {
            out[basis.with_mode(i, j, n + 1)] += c * ((n + 1) as f64).sqrt();
        }
    }
    out
}

/// Normalized free-particle state Π a†_{k} |0⟩ for signed lattice momenta.
///
/// Momentum p > 0 means e^{+ikx} with k = 2πp/L and is built from the
/// cosine and sine modes as (a_c† + i a_s†)/√2; p < 0 uses the conjugate
/// combination and p = 0 the constant mode.
pub fn momentum_state(prop: &Propagator, momenta: &[i32]) -> Result<FunctionalState> {
    use qftfun::ModeShape;
    let find = |shape: ModeShape| {
        prop.spec
            .modes()
            .iter()
            .position(|m| m.shape == shape)
            .ok_or_else(|| Error::invalid(format!("lattice has no {shape:?} mode")))
    };
    let mut v = FunctionalState::vacuum(&prop.basis).coeffs;
    for &p in momenta {
        v = if p == 0 {
            apply_raising(prop, find(ModeShape::Constant)?, &v)
        } else {
            let n = p.unsigned_abs();
            let c = apply_raising(prop, find(ModeShape::Cos(n))?, &v);
            let s = apply_raising(prop, find(ModeShape::Sin(n))?, &v);
            let i = Complex64::new(0.0, p.signum() as f64);
            (c + s * i) / Complex64::new(2f64.sqrt(), 0.0)
        };
    }
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::invalid("occupation exceeds the cutoff"));
    }
    Ok(FunctionalState {
        t: 0.0,
        coeffs: v / Complex64::new(norm, 0.0),
    })
}

/// Evaluator for ψ_n built from a fixed field state.
#[derive(Debug, Clone)]
pub struct Extractor<'a> {
    prop: &'a Propagator,
    state: FunctionalState,
}

impl<'a> Extractor<'a> {
    pub fn new(prop: &'a Propagator, state: FunctionalState) -> Self {
        Self { prop, state }
    }

    pub fn propagator(&self) -> &Propagator {
        self.prop
    }

    pub fn state(&self) -> &FunctionalState {
        &self.state
    }

    fn check(&self, n: usize, positions: &[f64], times: &[f64]) -> Result<()> {
        if n > self.prop.spec.max_particles() {
            return Err(Error::invalid(format!(
                "n = {n} exceeds the truncation M·n_max = {}",
                self.prop.spec.max_particles()
            )));
        }
        if positions.len() != n || times.len() != n {
            return Err(Error::invalid("need one position and one time per particle"));
        }
        if positions.iter().chain(times).any(|v| !v.is_finite()) {
            return Err(Error::invalid("positions and times must be finite"));
        }
        Ok(())
    }

    fn vacuum_factor(&self, t: f64) -> Result<Complex64> {
        let ph = qftfun::vacuum_phase(self.prop, &[t])?;
        Ok(Complex64::from_polar(1.0, -ph[0].phi0))
    }

    fn field_weights(&self, x: f64, derivative: bool) -> Vec<f64> {
        (0..self.prop.spec.mode_count())
            .map(|j| {
                if derivative {
                    self.prop.spec.mode_derivative(j, x)
                } else {
                    self.prop.spec.mode_function(j, x)
                }
            })
            .collect()
    }

    /// e^{−iφ0(t1)}⟨0|φ(x1)U(t1−t2)φ(x2)…φ(xn)U(tn−t_ref)P_n|Ψ(t_ref)⟩ for
    /// one ordering, with `deriv` marking a field replaced by ∂_xφ.
    fn ordered(&self, n: usize, xs: &[f64], ts: &[f64], t_ref: f64, deriv: Option<usize>) -> Result<Complex64> {
        let psi_ref = self.prop.state_at(&self.state, t_ref).project_sector(&self.prop.basis, n);
        if n == 0 {
            return Ok(self.vacuum_factor(t_ref)? * psi_ref.coeffs[0]);
        }
        let mut w = self.prop.apply(ts[n - 1] - t_ref, &psi_ref.coeffs);
        for j in (0..n).rev() {
            w = apply_field(self.prop, &self.field_weights(xs[j], deriv == Some(j)), &w);
            if j > 0 {
                w = self.prop.apply(ts[j - 1] - ts[j], &w);
            }
        }
        Ok(self.vacuum_factor(ts[0])? * w[0])
    }

    fn symmetrized(&self, n: usize, xs: &[f64], ts: &[f64], t_ref: f64, deriv: Option<usize>) -> Result<Complex64> {
        let perms = permutations(n);
        let mut acc = ZERO;
        for p in &perms {
            let px: Vec<f64> = p.iter().map(|&i| xs[i]).collect();
            let pt: Vec<f64> = p.iter().map(|&i| ts[i]).collect();
            let pd = deriv.map(|d| p.iter().position(|&i| i == d).expect("permutation"));
            acc += self.ordered(n, &px, &pt, t_ref, pd)?;
        }
        Ok(acc / perms.len() as f64)
    }

    /// Equal-time ψ_n(x1…xn, t).
    pub fn equal_time(&self, n: usize, positions: &[f64], t: f64) -> Result<Complex64> {
        self.check(n, positions, &vec![t; n])?;
        self.ordered(n, positions, &vec![t; n], t, None)
    }

    /// Nonequal-time ψ_n, symmetrized over (x_j, t_j) pairs, with the sector
    /// projection taken at the mean of the times.
    pub fn wave_function(&self, n: usize, positions: &[f64], times: &[f64]) -> Result<Complex64> {
        self.check(n, positions, times)?;
        let t_ref = if n == 0 { self.state.t } else { times.iter().sum::<f64>() / n as f64 };
        self.symmetrized(n, positions, times, t_ref, None)
    }

    /// Same as [`Self::wave_function`] with an explicit projection time.
    pub fn wave_function_at(&self, n: usize, positions: &[f64], times: &[f64], t_ref: f64) -> Result<Complex64> {
        self.check(n, positions, times)?;
        self.symmetrized(n, positions, times, t_ref, None)
    }

    /// Equal-time ψ_n by tensor Gauss–Hermite quadrature over the mode
    /// amplitudes, independent of the ladder-operator route.
    pub fn quadrature(&self, n: usize, positions: &[f64], t: f64, order: usize) -> Result<Complex64> {
        self.check(n, positions, &vec![t; n])?;
        let spec = &self.prop.spec;
        let needed = spec.n_max + n + 1;
        if order < needed {
            return Err(Error::invalid(format!("quadrature order {order} below required {needed}")));
        }
        let coeffs = self.prop.state_at(&self.state, t).project_sector(&self.prop.basis, n).coeffs;
        let weights: Vec<Vec<f64>> = positions.iter().map(|&x| self.field_weights(x, false)).collect();
        let m = spec.mode_count();
        let zero_occ = vec![0; m];
        let integrand = |cfg: &FieldConfig| -> Complex64 {
            let s = qftfun::sample(spec, &self.prop.basis, &coeffs, cfg);
            let fields: f64 = weights
                .iter()
                .map(|w| w.iter().zip(&cfg.q).map(|(a, b)| a * b).sum::<f64>())
                .product();
            s.psi * (basis_value(spec, &zero_occ, cfg) * fields)
        };
        let value = tensor_quadrature(spec, order, integrand);
        Ok(self.vacuum_factor(t)? * value)
    }

    /// Velocity of particle `j` of the n-particle wave function at equal
    /// time t: dx/dt = −Im(ψ*∂_xψ)/Im(ψ*∂_tψ), with ∂_t acting on t_j only.
    pub fn velocity(&self, n: usize, j: usize, positions: &[f64], t: f64) -> Result<f64> {
        self.check(n, positions, &vec![t; n])?;
        if j >= n {
            return Err(Error::invalid("particle index out of range"));
        }
        let ts = vec![t; n];
        let psi = self.ordered(n, positions, &ts, t, None)?;
        let dx = self.ordered(n, positions, &ts, t, Some(j))?;
        let omega_max = (0..self.prop.spec.mode_count()).map(|i| self.prop.spec.omega(i)).fold(0.0, f64::max);
        let h = 1e-4 / omega_max;
        let mut tp = ts.clone();
        let mut tm = ts.clone();
        tp[j] += h;
        tm[j] -= h;
        let dt = (self.symmetrized(n, positions, &tp, t, None)? - self.symmetrized(n, positions, &tm, t, None)?)
            / (2.0 * h);
        let num = (psi.conj() * dx).im;
        let den = (psi.conj() * dt).im;
        if den.abs() <= 1e-12 * psi.norm_sqr() * omega_max || den == 0.0 {
            return Err(Error::InfiniteVelocity { denominator: den });
        }
        Ok(-num / den)
    }

    /// Velocities of all n particles at equal time t.
    pub fn velocities(&self, n: usize, positions: &[f64], t: f64) -> Result<Vec<f64>> {
        (0..n).map(|j| self.velocity(n, j, positions, t)).collect()
    }

    /// One classical RK4 step of all n particles, velocities for each stage
    /// taken from the same state.
    pub fn advance(&self, n: usize, positions: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
        let shift = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> { base.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        let k1 = self.velocities(n, positions, t)?;
        let k2 = self.velocities(n, &shift(positions, &k1, 0.5 * dt), t + 0.5 * dt)?;
        let k3 = self.velocities(n, &shift(positions, &k2, 0.5 * dt), t + 0.5 * dt)?;
        let k4 = self.velocities(n, &shift(positions, &k3, dt), t + dt)?;
        Ok((0..n)
            .map(|i| positions[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
}

/// Convenience wrapper for [`Extractor::wave_function`].
pub fn n_particle_wf(
    prop: &Propagator,
    state: &FunctionalState,
    n: usize,
    positions: &[f64],
    times: &[f64],
) -> Result<Complex64> {
    Extractor::new(prop, state.clone()).wave_function(n, positions, times)
}

/// Convenience wrapper for [`Extractor::velocity`].
pub fn particle_velocity(
    prop: &Propagator,
    state: &FunctionalState,
    n: usize,
    j: usize,
    positions: &[f64],
    t: f64,
) -> Result<f64> {
    Extractor::new(prop, state.clone()).velocity(n, j, positions, t)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn tensor_quadrature<F: Fn(&FieldConfig) -> Complex64>(spec: &qftfun::LatticeSpec, order: usize, f: F) -> Complex64 {
    let rule = GaussHermite::new(order);
    let w = rule.unweighted();
    let m = spec.mode_count();
    let scale: Vec<f64> = (0..m).map(|j| spec.omega(j).sqrt()).collect();
    let mut idx = vec![0usize; m];
    let mut acc = ZERO;
    loop {
        let cfg = FieldConfig::new((0..m).map(|j| rule.nodes[idx[j]] / scale[j]).collect());
        let weight: f64 = (0..m).map(|j| w[idx[j]] / scale[j]).product();
        acc += f(&cfg) * weight;
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }
    acc
}

/// max |∫ Ψ_0 φ(x1)…φ(x_n') Ψ_idx| over basis states idx with n(idx) = n
/// and over the supplied position tuples, by Gauss–Hermite quadrature.
pub fn orthogonality_check(
    prop: &Propagator,
    n_prime: usize,
    n: usize,
    positions: &[Vec<f64>],
    order: usize,
) -> Result<f64> {
    let spec = &prop.spec;
    let needed = spec.n_max + n_prime + 1;
    if order < needed {
        return Err(Error::invalid(format!("quadrature order {order} below required {needed}")));
    }
    if positions.iter().any(|p| p.len() != n_prime) {
        return Err(Error::invalid("each position tuple needs n' entries"));
    }
    let m = spec.mode_count();
    let zero_occ = vec![0; m];
    let mut worst = 0.0f64;
    for idx in (0..prop.basis.len()).filter(|&i| prop.basis.total(i) == n) {
        let occ = prop.basis.occupation(idx);
        for xs in positions {
            let weights: Vec<Vec<f64>> = xs.iter().map(|&x| (0..m).map(|j| spec.mode_function(j, x)).collect()).collect();
            let v = tensor_quadrature(spec, order, |cfg| {
                let fields: f64 = weights
                    .iter()
                    .map(|w| w.iter().zip(&cfg.q).map(|(a, b)| a * b).sum::<f64>())
                    .product();
                Complex64::new(basis_value(spec, &zero_occ, cfg) * fields * basis_value(spec, &occ, cfg), 0.0)
            });
            worst = worst.max(v.norm());
        }
    }
    Ok(worst)
}

/// Particle positions per sector with the sector effectivities.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub mass: f64,
    /// positions[n] holds the n positions of the n-particle sector.
    pub positions: Vec<Vec<f64>>,
    pub effectivity: Vec<f64>,
}

/// Weighted point masses (x, m·e_n).
#[derive(Debug, Clone, PartialEq)]
pub struct MassDensityField {
    pub points: Vec<(f64, f64)>,
}

impl MassDensityField {
    pub fn total_mass(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }
}

/// Each particle of sector n carries mass m·e_n; sectors with e_n = 0 add nothing.
pub fn mass_density(particles: &ParticleSet) -> MassDensityField {
    let mut points = Vec::new();
    for (n, xs) in particles.positions.iter().enumerate() {
        let e = particles.effectivity.get(n).copied().unwrap_or(0.0);
        if e == 0.0 {
            continue;
        }
        points.extend(xs.iter().map(|&x| (x, particles.mass * e)));
    }
    MassDensityField { points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qftfun::LatticeSpec;
    use std::f64::consts::PI;

    fn free(len: f64, modes: usize, n_max: usize) -> Propagator {
        Propagator::new(&LatticeSpec::new(len, modes, 1.0, 0.0, n_max).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_has_no_particles() {
        let p = free(2.0 * PI, 3, 3);
        let ex = Extractor::new(&p, FunctionalState::vacuum(&p.basis));
        for n in 1..=3 {
            let xs: Vec<f64> = (0..n).map(|i| 0.3 + i as f64).collect();
            assert!(ex.equal_time(n, &xs, 0.7).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn one_particle_plane_wave() {
        let p = free(2.0 * PI, 3, 2);
        let st = momentum_state(&p, &[1]).unwrap();
        let ex = Extractor::new(&p, st);
        let w = p.spec.omega(1);
        let norm = 1.0 / (2.0 * 2.0 * PI * w).sqrt();
        for (x, t) in [(0.0, 0.0), (1.3, 0.4), (-2.0, 3.1)] {
            let psi = ex.equal_time(1, &[x], t).unwrap();
            let expect = Complex64::from_polar(norm, x - w * t);
            assert!((psi - expect).norm() < 1e-12, "{psi} {expect}");
        }
        let v = ex.velocity(1, 0, &[0.8], 0.3).unwrap();
        assert!((v - 1.0 / w).abs() < 1e-7, "{v}");
    }

    #[test]
    fn quadrature_matches_ladder_route() {
        let p = Propagator::new(&LatticeSpec::new(3.0, 2, 1.0, 0.3, 4).unwrap()).unwrap();
        let st = FunctionalState::from_occupations(
            &p.basis,
            &[(vec![1, 0], Complex64::new(0.6, 0.1)), (vec![0, 1], Complex64::new(0.2, -0.5)), (vec![1, 1], Complex64::new(0.3, 0.0))],
        )
        .unwrap();
        let ex = Extractor::new(&p, st);
        for n in [1, 2] {
            let xs: Vec<f64> = (0..n).map(|i| 0.4 + 0.9 * i as f64).collect();
            let a = ex.equal_time(n, &xs, 0.6).unwrap();
            let b = ex.quadrature(n, &xs, 0.6, p.spec.n_max + n + 3).unwrap();
            assert!((a - b).norm() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn orthogonality() {
        let p = free(2.0, 2, 3);
        let pts = vec![vec![0.3], vec![1.1]];
        assert!(orthogonality_check(&p, 1, 2, &pts, 6).unwrap() < 1e-10);
        assert!(orthogonality_check(&p, 0, 2, &[vec![]], 6).unwrap() < 1e-10);
        assert!(orthogonality_check(&p, 1, 1, &pts, 6).unwrap() > 1e-3);
        assert!(orthogonality_check(&p, 1, 2, &pts, 4).is_err());
    }

    #[test]
    fn mass_density_cases() {
        let set = |e: Vec<f64>| ParticleSet {
            mass: 2.0,
            positions: vec![vec![], vec![0.5], vec![0.1, 0.9]],
            effectivity: e,
        };
        assert_eq!(mass_density(&set(vec![1.0, 0.0, 0.0])).total_mass(), 0.0);
        let two = mass_density(&set(vec![0.0, 0.0, 1.0]));
        assert_eq!(two.points, vec![(0.1, 2.0), (0.9, 2.0)]);
        assert!((mass_density(&set(vec![0.0, 0.5, 0.5])).total_mass() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn permutations_cover_all_orders() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }
}
