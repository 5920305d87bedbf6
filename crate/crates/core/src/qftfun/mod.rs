//! Functional Schrödinger dynamics of a real scalar field on a 1-d box.
//!
//! The field is truncated to M real mode functions u_j on [0, L) with mode
//! amplitudes q_j, so φ(x) = Σ u_j(x) q_j and every wave functional becomes
//! a function of M variables. Each mode is a harmonic oscillator of
//! frequency ω_j; the state is expanded over products of normalized
//! Hermite functions with at most `n_max` quanta per mode.

mod guidance;

pub use guidance::{
    field_velocity, integrate_field, quantum_potential, second_order_check, FieldTrajectory, SecondOrderReport,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hermite;

/// Default cap on the number of basis states.
pub const DEFAULT_BASIS_LIMIT: usize = 4096;

/// Shape of a real mode function on [0, L).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModeShape {
    /// 1/√L.
    Constant,
    /// √(2/L) cos(2πn x/L).
    Cos(u32),
    /// √(2/L) sin(2πn x/L).
    Sin(u32),
}

impl ModeShape {
    fn index(&self) -> u32 {
        match *self {
            ModeShape::Constant => 0,
            ModeShape::Cos(n) | ModeShape::Sin(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeMode {
    pub shape: ModeShape,
    /// |k| = 2πn/L.
    pub k: f64,
    pub omega: f64,
}

/// Discretized field: box, modes, mass, quartic coupling and truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub length: f64,
    pub mass: f64,
    /// Coefficient of the (λ/4)∫φ⁴ potential.
    pub lambda: f64,
    pub n_max: usize,
    pub basis_limit: usize,
    modes: Vec<LatticeMode>,
}

impl LatticeSpec {
    /// First `mode_count` real Fourier modes in the order constant, cos 1,
    /// sin 1, cos 2, …; an even count ends on the unpaired cosine.
    pub fn new(length: f64, mode_count: usize, mass: f64, lambda: f64, n_max: usize) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::invalid("at least one lattice mode is required"));
        }
        let mut shapes = vec![ModeShape::Constant];
        let mut n = 1;
        while shapes.len() < mode_count {
            shapes.push(ModeShape::Cos(n));
            if shapes.len() < mode_count {
                shapes.push(ModeShape::Sin(n));
            }
            n += 1;
        }
        Self::with_shapes(length, &shapes, mass, lambda, n_max)
    }

    pub fn with_shapes(length: f64, shapes: &[ModeShape], mass: f64, lambda: f64, n_max: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!("box length must be positive, got {length}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(format!("mass must be positive, got {mass}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!("coupling must be nonnegative, got {lambda}")));
        }
        if shapes.is_empty() {
            return Err(Error::invalid("at least one lattice mode is required"));
        }
        if n_max == 0 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        let mut seen = shapes.to_vec();
        seen.sort();
        seen.dedup();
        if seen.len() != shapes.len() {
            return Err(Error::invalid("duplicate lattice mode"));
        }
        if shapes.iter().any(|s| matches!(s, ModeShape::Cos(0) | ModeShape::Sin(0))) {
            return Err(Error::invalid("cos 0 / sin 0 are not mode functions; use Constant"));
        }
        let modes = shapes
            .iter()
            .map(|&shape| {
                let k = 2.0 * PI * shape.index() as f64 / length;
                LatticeMode {
                    shape,
                    k,
                    omega: (k * k + mass * mass).sqrt(),
                }
            })
            .collect();
        Ok(Self {
            length,
            mass,
            lambda,
            n_max,
            basis_limit: DEFAULT_BASIS_LIMIT,
            modes,
        })
    }

    pub fn with_basis_limit(mut self, limit: usize) -> Self {
        self.basis_limit = limit;
        self
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self {
            n_max,
            ..self.clone()
        }
    }

    pub fn modes(&self) -> &[LatticeMode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn omega(&self, j: usize) -> f64 {
        self.modes[j].omega
    }

    /// E_0 = Σ ω_j / 2.
    pub fn vacuum_energy(&self) -> f64 {
        self.modes.iter().map(|m| 0.5 * m.omega).sum()
    }

    /// Largest total particle number representable.
    pub fn max_particles(&self) -> usize {
        self.modes.len() * self.n_max
    }

    /// u_j(x).
    pub fn mode_function(&self, j: usize, x: f64) -> f64 {
        let l = self.length;
        let arg = self.modes[j].k * x;
        match self.modes[j].shape {
            ModeShape::Constant => 1.0 / l.sqrt(),
            ModeShape::Cos(_) => (2.0 / l).sqrt() * arg.cos(),
            ModeShape::Sin(_) => (2.0 / l).sqrt() * arg.sin(),
        }
    }

    /// du_j/dx.
    pub fn mode_derivative(&self, j: usize, x: f64) -> f64 {
        let l = self.length;
        let k = self.modes[j].k;
        match self.modes[j].shape {
            ModeShape::Constant => 0.0,
            ModeShape::Cos(_) => -(2.0 / l).sqrt() * k * (k * x).sin(),
            ModeShape::Sin(_) => (2.0 / l).sqrt() * k * (k * x).cos(),
        }
    }

    /// Dual grid x_i = iL/M.
    pub fn grid_points(&self) -> Vec<f64> {
        let m = self.modes.len();
        (0..m).map(|i| i as f64 * self.length / m as f64).collect()
    }

    fn grid_matrix(&self) -> DMatrix<f64> {
        let xs = self.grid_points();
        DMatrix::from_fn(xs.len(), xs.len(), |i, j| self.mode_function(j, xs[i]))
    }

    /// φ(x_i) on the dual grid.
    pub fn to_grid(&self, cfg: &FieldConfig) -> Vec<f64> {
        (self.grid_matrix() * DVector::from_column_slice(&cfg.q)).iter().copied().collect()
    }

    /// Mode amplitudes from grid values.
    pub fn from_grid(&self, values: &[f64]) -> Result<FieldConfig> {
        if values.len() != self.modes.len() {
            return Err(Error::invalid("grid values must have one entry per mode"));
        }
        let lu = self.grid_matrix().lu();
        let q = lu
            .solve(&DVector::from_column_slice(values))
            .ok_or_else(|| Error::invalid("mode set is not resolved by the dual grid"))?;
        Ok(FieldConfig { q: q.iter().copied().collect() })
    }

    /// T_abcd = ∫_0^L u_a u_b u_c u_d dx, exact via trapezoid quadrature
    /// on a grid finer than the highest harmonic of the product.
    pub fn quartic_overlaps(&self) -> Vec<f64> {
        let m = self.modes.len();
        let top = self.modes.iter().map(|md| md.shape.index()).max().unwrap_or(0) as usize;
        let n = 4 * top + 2;
        let h = self.length / n as f64;
        let table: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..m).map(|j| self.mode_function(j, i as f64 * h)).collect())
            .collect();
        let mut t = vec![0.0; m * m * m * m];
        for a in 0..m {
            for b in a..m {
                for c in b..m {
                    for d in c..m {
                        let v: f64 = table.iter().map(|u| u[a] * u[b] * u[c] * u[d]).sum::<f64>() * h;
                        let v = if v.abs() < 1e-14 { 0.0 } else { v };
                        for p in permutations4([a, b, c, d]) {
                            t[((p[0] * m + p[1]) * m + p[2]) * m + p[3]] = v;
                        }
                    }
                }
            }
        }
        t
    }
}

fn permutations4(v: [usize; 4]) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    if i != j && i != k && i != l && j != k && j != l && k != l {
                        out.push([v[i], v[j], v[k], v[l]]);
                    }
                }
            }
        }
    }
    out
}

/// Point of the truncated configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub q: Vec<f64>,
}

impl FieldConfig {
    pub fn new(q: Vec<f64>) -> Self {
        Self { q }
    }

    pub fn zeros(modes: usize) -> Self {
        Self { q: vec![0.0; modes] }
    }
}

/// Occupation-number basis with mixed-radix indexing (mode 0 fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    modes: usize,
    radix: usize,
    size: usize,
}

impl Basis {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let radix = spec.n_max + 1;
        let size = (0..spec.mode_count()).try_fold(1usize, |acc, _| acc.checked_mul(radix));
        match size {
            Some(size) if size <= spec.basis_limit => Ok(Self {
                modes: spec.mode_count(),
                radix,
                size,
            }),
            _ => Err(Error::BasisTooLarge {
                size: size.unwrap_or(usize::MAX),
                limit: spec.basis_limit,
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.radix - 1
    }

    pub fn index(&self, occ: &[usize]) -> Result<usize> {
        if occ.len() != self.modes {
            return Err(Error::invalid(format!("occupation needs {} entries", self.modes)));
        }
        let mut idx = 0;
        for &n in occ.iter().rev() {
            if n >= self.radix {
                return Err(Error::invalid(format!("occupation {n} beyond cutoff {}", self.radix - 1)));
            }
            idx = idx * self.radix + n;
        }
        Ok(idx)
    }

    pub fn occupation(&self, mut idx: usize) -> Vec<usize> {
        (0..self.modes)
            .map(|_| {
                let n = idx % self.radix;
                idx /= self.radix;
                n
            })
            .collect()
    }

    /// Total particle number of basis state `idx`.
    pub fn total(&self, idx: usize) -> usize {
        self.occupation(idx).iter().sum()
    }

    /// Index reached from `idx` by setting mode `j` to `n`.
    pub(crate) fn with_mode(&self, idx: usize, j: usize, n: usize) -> usize {
        let stride = self.radix.pow(j as u32);
        let cur = (idx / stride) % self.radix;
        idx - cur * stride + n * stride
    }
}

/// Π_j h_{n_j}(√ω_j q_j) ω_j^{1/4}.
pub fn basis_value(spec: &LatticeSpec, occ: &[usize], cfg: &FieldConfig) -> f64 {
    occ.iter()
        .enumerate()
        .map(|(j, &n)| {
            let w = spec.omega(j);
            hermite::functions(n, w.sqrt() * cfg.q[j])[n] * w.powf(0.25)
        })
        .product()
}

/// q^p of one oscillator (p ≤ 4) restricted to the lowest `dim` levels,
/// computed in an enlarged space so the restriction is exact.
fn position_powers(omega: f64, dim: usize) -> [DMatrix<f64>; 5] {
    let big = dim + 4;
    let mut q = DMatrix::<f64>::zeros(big, big);
    let s = 1.0 / (2.0 * omega).sqrt();
    for n in 1..big {
        let v = (n as f64).sqrt() * s;
        q[(n - 1, n)] = v;
        q[(n, n - 1)] = v;
    }
    let mut out: [DMatrix<f64>; 5] = std::array::from_fn(|_| DMatrix::identity(big, big));
    for p in 1..5 {
        out[p] = &out[p - 1] * &q;
    }
    out.map(|m| m.view((0, 0), (dim, dim)).into_owned())
}

/// H = Σ ω_j (N_j + ½) + (λ/4) Σ T_abcd q_a q_b q_c q_d in the truncated basis.
pub fn hamiltonian(spec: &LatticeSpec) -> Result<DMatrix<f64>> {
    let basis = Basis::new(spec)?;
    let m = spec.mode_count();
    let n = basis.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let occ = basis.occupation(i);
        h[(i, i)] = (0..m).map(|j| spec.omega(j) * (occ[j] as f64 + 0.5)).sum();
    }
    if spec.lambda == 0.0 {
        return Ok(h);
    }
    let t = spec.quartic_overlaps();
    // group q_a q_b q_c q_d by the power carried by each mode
    let mut terms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let v = t[((a * m + b) * m + c) * m + d];
                    if v == 0.0 {
                        continue;
                    }
                    let mut pw = vec![0usize; m];
                    for idx in [a, b, c, d] {
                        pw[idx] += 1;
                    }
                    *terms.entry(pw).or_insert(0.0) += 0.25 * spec.lambda * v;
                }
            }
        }
    }
    let powers: Vec<[DMatrix<f64>; 5]> = (0..m).map(|j| position_powers(spec.omega(j), spec.n_max + 1)).collect();
    for (pw, coef) in &terms {
        for i in 0..n {
            let occ = basis.occupation(i);
            // enumerate targets mode by mode; q^p connects n to n ± p, n ± (p − 2), …
            let mut targets: Vec<(usize, f64)> = vec![(i, *coef)];
            for j in 0..m {
                let p = pw[j];
                if p == 0 {
                    continue;
                }
                let nj = occ[j];
                let mut next = Vec::with_capacity(targets.len() * (p + 1));
                for &(idx, amp) in &targets {
                    let lo = nj.saturating_sub(p);
                    let hi = (nj + p).min(spec.n_max);
                    for nn in lo..=hi {
                        let e = powers[j][p][(nn, nj)];
                        if e != 0.0 {
                            next.push((basis.with_mode(idx, j, nn), amp * e));
                        }
                    }
                }
                targets = next;
            }
            for (k, v) in targets {
                h[(k, i)] += v;
            }
        }
    }
    Ok(h)
}

/// Coefficients over the occupation basis at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalState {
    pub t: f64,
    pub coeffs: DVector<Complex64>,
}

impl FunctionalState {
    /// Normalized superposition of basis states.
    pub fn from_occupations(basis: &Basis, terms: &[(Vec<usize>, Complex64)]) -> Result<Self> {
        let mut c = DVector::from_element(basis.len(), Complex64::new(0.0, 0.0));
        for (occ, amp) in terms {
            c[basis.index(occ)?] += amp;
        }
        let norm = c.norm();
        if norm == 0.0 {
            return Err(Error::invalid("state has zero norm"));
        }
        Ok(Self { t: 0.0, coeffs: c / Complex64::new(norm, 0.0) })
    }

    pub fn vacuum(basis: &Basis) -> Self {
        let mut c = DVector::from_element(basis.len(), Complex64::new(0.0, 0.0));
        c[0] = Complex64::new(1.0, 0.0);
        Self { t: 0.0, coeffs: c }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Σ_{n(idx)=n} |c_idx|² for n = 0 … M·n_max.
    pub fn sector_weights(&self, basis: &Basis) -> Vec<f64> {
        let mut w = vec![0.0; basis.mode_count() * basis.n_max() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            w[basis.total(i)] += c.norm_sqr();
        }
        w
    }

    /// Keep only the n-particle sector.
    pub fn project_sector(&self, basis: &Basis, n: usize) -> Self {
        let coeffs = DVector::from_fn(self.coeffs.len(), |i, _| {
            if basis.total(i) == n {
                self.coeffs[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { t: self.t, coeffs }
    }
}

/// Exact evolution in the truncated basis through the eigendecomposition of H.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub spec: LatticeSpec,
    pub basis: Basis,
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let basis = Basis::new(spec)?;
        let h = hamiltonian(spec)?;
        let (energies, vectors) = if spec.lambda == 0.0 {
            (h.diagonal(), DMatrix::identity(basis.len(), basis.len()))
        } else {
            let eig = SymmetricEigen::new(h);
            (eig.eigenvalues, eig.eigenvectors)
        };
        Ok(Self {
            spec: spec.clone(),
            basis,
            energies,
            vectors,
        })
    }

    /// Eigenvalues of the truncated Hamiltonian, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.energies.iter().copied().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    /// U(dt) v.
    pub fn apply(&self, dt: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
        let re = v.map(|c| c.re);
        let im = v.map(|c| c.im);
        let dre = self.vectors.tr_mul(&re);
        let dim = self.vectors.tr_mul(&im);
        let rotated_re = DVector::from_fn(re.len(), |k, _| {
            let ph = Complex64::from_polar(1.0, -self.energies[k] * dt);
            (ph * Complex64::new(dre[k], dim[k])).re
        });
        let rotated_im = DVector::from_fn(re.len(), |k, _| {
            let ph = Complex64::from_polar(1.0, -self.energies[k] * dt);
            (ph * Complex64::new(dre[k], dim[k])).im
        });
        let out_re = &self.vectors * rotated_re;
        let out_im = &self.vectors * rotated_im;
        DVector::from_fn(re.len(), |i, _| Complex64::new(out_re[i], out_im[i]))
    }

    pub fn evolve(&self, state: &FunctionalState, dt: f64) -> FunctionalState {
        FunctionalState {
            t: state.t + dt,
            coeffs: self.apply(dt, &state.coeffs),
        }
    }

    /// State at absolute time `t`.
    pub fn state_at(&self, state: &FunctionalState, t: f64) -> FunctionalState {
        self.evolve(state, t - state.t)
    }

    /// ⟨Ψ_0|U(t)|Ψ_0⟩ for the Fock vacuum index.
    pub fn vacuum_amplitude(&self, t: f64) -> Complex64 {
        (0..self.energies.len())
            .map(|k| Complex64::from_polar(self.vectors[(0, k)].powi(2), -self.energies[k] * t))
            .sum()
    }

    fn max_abs_energy(&self) -> f64 {
        self.energies.iter().fold(0.0f64, |a, e| a.max(e.abs()))
    }
}

/// r_0(t) e^{iφ_0(t)} = ⟨Ψ_0|U(t)|Ψ_0⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumPhase {
    pub t: f64,
    pub r0: f64,
    /// Continuous in t, with φ_0(0) = 0.
    pub phi0: f64,
}

/// Vacuum survival amplitude at each of `times`, phase tracked from t = 0.
pub fn vacuum_phase(prop: &Propagator, times: &[f64]) -> Result<Vec<VacuumPhase>> {
    let dt_max = 0.25 / prop.max_abs_energy().max(1e-12);
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    let mut phase = 0.0;
    let mut amp_prev = Complex64::new(1.0, 0.0);
    for &t in times {
        let steps = ((t - t_prev).abs() / dt_max).ceil().max(1.0) as usize;
        for s in 1..=steps {
            let ts = t_prev + (t - t_prev) * s as f64 / steps as f64;
            let amp = prop.vacuum_amplitude(ts);
            if amp.norm() < 1e-12 {
                return Err(Error::PhaseUndefined { t: ts });
            }
            phase += (amp / amp_prev).arg();
            amp_prev = amp;
        }
        out.push(VacuumPhase {
            t,
            r0: amp_prev.norm(),
            phi0: phase,
        });
        t_prev = t;
    }
    Ok(out)
}

/// Per-number normalized weights e_n = |Ψ̃_n|² / Σ|Ψ̃_n'|².
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivityVector {
    pub e: Vec<f64>,
}

impl EffectivityVector {
    /// Sector holding the largest effectivity.
    pub fn dominant(&self) -> usize {
        self.e
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }
}

/// Ψ and its sectors, gradient and diagonal Hessian at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    pub psi: Complex64,
    /// Ψ̃_n for n = 0 … M·n_max.
    pub sectors: Vec<Complex64>,
    /// ∇_q Ψ̃_n, indexed [n][j].
    pub sector_grad: Vec<Vec<Complex64>>,
    pub grad: Vec<Complex64>,
    pub hess_diag: Vec<Complex64>,
}

/// Evaluate the functional at `cfg` from the coefficient vector.
pub fn sample(spec: &LatticeSpec, basis: &Basis, coeffs: &DVector<Complex64>, cfg: &FieldConfig) -> FunctionalSample {
    let m = spec.mode_count();
    let tables: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..m)
        .map(|j| {
            let w = spec.omega(j);
            let s = w.sqrt();
            let scale = w.powf(0.25);
            let (h, d1, d2) = hermite::functions_with_derivatives(spec.n_max, s * cfg.q[j]);
            (
                h.iter().map(|v| v * scale).collect(),
                d1.iter().map(|v| v * scale * s).collect(),
                d2.iter().map(|v| v * scale * w).collect(),
            )
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = FunctionalSample {
        psi: zero,
        sectors: vec![zero; spec.max_particles() + 1],
        sector_grad: vec![vec![zero; m]; spec.max_particles() + 1],
        grad: vec![zero; m],
        hess_diag: vec![zero; m],
    };
    let mut factors = vec![0.0; m];
    for (i, c) in coeffs.iter().enumerate() {
        if *c == zero {
            continue;
        }
        let occ = basis.occupation(i);
        for j in 0..m {
            factors[j] = tables[j].0[occ[j]];
        }
        let value: f64 = factors.iter().product();
        out.psi += c * value;
        let n: usize = occ.iter().sum();
        out.sectors[n] += c * value;
        for j in 0..m {
            let others: f64 = (0..m).filter(|&l| l != j).map(|l| factors[l]).product();
            let g = c * (others * tables[j].1[occ[j]]);
            out.grad[j] += g;
            out.sector_grad[n][j] += g;
            out.hess_diag[j] += c * (others * tables[j].2[occ[j]]);
        }
    }
    out
}

/// Effectivities at `cfg` for `state`.
pub fn effectivity(prop: &Propagator, state: &FunctionalState, cfg: &FieldConfig) -> Result<EffectivityVector> {
    let s = sample(&prop.spec, &prop.basis, &state.coeffs, cfg);
    effectivity_from_sectors(&s.sectors)
}

pub(crate) fn effectivity_from_sectors(sectors: &[Complex64]) -> Result<EffectivityVector> {
    let total: f64 = sectors.iter().map(|c| c.norm_sqr()).sum();
    if !(total > 1e-300) {
        return Err(Error::UndefinedEffectivity);
    }
    Ok(EffectivityVector {
        e: sectors.iter().map(|c| c.norm_sqr() / total).collect(),
    })
}
