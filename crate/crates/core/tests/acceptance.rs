//! Acceptance suite. Runs each criterion in sequence, prints one line per
//! criterion and exits nonzero if any fails. Sequential on purpose: the
//! runtime budgets are wall-clock and would be distorted by parallel tests.

use std::f64::consts::PI;
use std::time::Instant;

use bohmfield::extract::{self, Extractor};
use bohmfield::measure::{self, EnsembleOptions, PointerSpec, RingSystem};
use bohmfield::qftfun::{FunctionalState, LatticeSpec, Propagator};
use bohmfield::relkin::{self, Mode, ModeSum, SpatialGrid};
use bohmfield::rng;
use bohmfield::traject::{self, presets, TrajectoryOptions};
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn fig1() -> bohmfield::Result<Outcome> {
    let w = presets::fig1_wave();
    let traj = traject::integrate(&w, &presets::fig1_start(), presets::FIG1_TAU_SPAN, &TrajectoryOptions::default())?;
    let rec = traject::crossings(&w, &traj, presets::FIG1_SLICE);
    let kinds: Vec<_> = traj.reversal_events.iter().map(|e| e.kind).collect();
    let pair = kinds.contains(&traject::ReversalKind::Creation) && kinds.contains(&traject::ReversalKind::Annihilation);
    let j0 = traj.reversal_events.iter().fold(0.0f64, |m, e| m.max(e.j0.abs()));
    let ok = rec.signs() == [1, -1, 1] && rec.sum() == 1 && rec.count() == 3 && pair && j0 < 1e-8;
    Ok(outcome(ok, format!("signs {:?}, sum {}, count {}, event pair {pair}, max |j0| at events {j0:.1e} (< 1e-8)", rec.signs(), rec.sum(), rec.count())))
}

/// Random mode sum on the 2π cell; d = 1 or 3.
fn random_wave(r: &mut impl Rng, dim: usize) -> ModeSum {
    loop {
        let count = r.random_range(1..=4);
        let mut modes: Vec<Mode> = Vec::new();
        while modes.len() < count {
            let mut k = [0.0; 3];
            for c in k.iter_mut().take(dim) {
                *c = r.random_range(-2..=2) as f64;
            }
            if modes.iter().any(|m| m.k == k) {
                continue;
            }
            modes.push(Mode::new(k, Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))));
        }
        if let Ok(w) = ModeSum::new(r.random_range(0.3..2.0), dim, 2.0 * PI, modes) {
            return w;
        }
    }
}

fn conservation() -> bohmfield::Result<Outcome> {
    let mut r = rng::stream(2024, "acceptance-conservation", 0);
    let mut worst = 0.0f64;
    let mut phys_ok = true;
    for i in 0..20 {
        let w = random_wave(&mut r, if i < 15 { 1 } else { 3 });
        let grid = SpatialGrid::new(SpatialGrid::required_points(&w)? + 2);
        let n0 = relkin::particle_number_grid(&w, 0.0, &grid)?;
        for s in 1..=10 {
            let t = 1.7 * s as f64;
            let n = relkin::particle_number_grid(&w, t, &grid)?;
            worst = worst.max((n - n0).abs() / n0.abs().max(1e-300));
            let phys = relkin::physical_particle_number(&w, t, &grid)?;
            phys_ok &= phys >= n.abs() * (1.0 - 1e-12);
        }
    }
    let w = presets::fig1_wave();
    let grid = SpatialGrid::new(64);
    let (n, phys) = (relkin::particle_number_grid(&w, 0.0, &grid)?, relkin::physical_particle_number(&w, 0.0, &grid)?);
    let strict = phys > n * (1.0 + 1e-9);
    Ok(outcome(
        worst < 1e-8 && phys_ok && strict,
        format!("max |N(t)-N(0)|/|N| {worst:.1e} (< 1e-8), N_phys >= |N| {phys_ok}, fig1 N_phys - N = {:.3e} (> 0)", phys - n),
    ))
}

fn hamilton_jacobi() -> bohmfield::Result<Outcome> {
    let w = presets::fig1_wave();
    let traj = traject::integrate(&w, &presets::fig1_start(), presets::FIG1_TAU_SPAN, &TrajectoryOptions::default())?;
    let hj = traj.diagnostics.hamilton_jacobi;
    let mut pts = Vec::new();
    for h in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        pts.push((h, traject::eom_residual(&w, &traj, h, 50)?.max_residual));
    }
    let order = log_slope(&pts);
    Ok(outcome(
        hj < 1e-7 && (order - 2.0).abs() <= 0.3,
        format!("HJ residual {hj:.1e} (< 1e-7), EOM order {order:.3} (2.0 +/- 0.3), residuals {:.2e}..{:.2e}", pts[0].1, pts[3].1),
    ))
}

fn nonrel() -> bohmfield::Result<Outcome> {
    let m = 1.0;
    let mut pts = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let k = eps * m;
        let w = ModeSum::from_coefficients(m, 1, 2.0 * PI / k, [([k, 0.0, 0.0], Complex64::new(1.0, 0.0)), ([-k, 0.0, 0.0], Complex64::new(0.5, 0.0))])?;
        let r = traject::nonrel_compare(&w, [0.3 / k, 0.0, 0.0], 5.0 / (eps * eps * m), 1e-12)?;
        pts.push((eps, r.relative_deviation));
    }
    let order = log_slope(&pts);
    Ok(outcome((order - 2.0).abs() <= 0.3, format!("deviation order {order:.3} (2.0 +/- 0.3), deviations {:.2e}, {:.2e}, {:.2e}", pts[0].1, pts[1].1, pts[2].1)))
}

fn free_field() -> bohmfield::Result<Outcome> {
    let spec = LatticeSpec::new(1.0, 2, 1.0, 0.0, 5)?;
    let prop = Propagator::new(&spec)?;
    let mut r = rng::stream(2024, "acceptance-free", 0);
    let terms: Vec<(Vec<usize>, Complex64)> = (0..prop.basis.len())
        .map(|i| (prop.basis.occupation(i), Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))))
        .collect();
    let st = FunctionalState::from_occupations(&prop.basis, &terms)?;
    let period = 2.0 * PI / spec.omega(0);
    let (mut dabs, mut dphase) = (0.0f64, 0.0f64);
    for s in 0..=100 {
        let t = period * s as f64 / 100.0;
        let c = prop.state_at(&st, t);
        for i in 0..prop.basis.len() {
            dabs = dabs.max((c.coeffs[i].norm() - st.coeffs[i].norm()).abs());
            let occ = prop.basis.occupation(i);
            let e = spec.vacuum_energy() + occ.iter().enumerate().map(|(j, &n)| n as f64 * spec.omega(j)).sum::<f64>();
            dphase = dphase.max(relkin::wrap_phase((c.coeffs[i] / st.coeffs[i]).arg() + e * t).abs());
        }
    }
    Ok(outcome(dabs < 1e-10 && dphase < 1e-8, format!("max d|c| {dabs:.1e} (< 1e-10), phase error {dphase:.1e} (< 1e-8) over one period")))
}

fn sector_change(n_max: usize) -> bohmfield::Result<f64> {
    let spec = LatticeSpec::new(1.0, 2, 1.0, 0.1, n_max)?;
    let prop = Propagator::new(&spec)?;
    let vac = FunctionalState::vacuum(&prop.basis);
    let w0 = vac.sector_weights(&prop.basis);
    let mut worst = 0.0f64;
    for s in 0..=400 {
        let w = prop.state_at(&vac, 20.0 * s as f64 / 400.0).sector_weights(&prop.basis);
        for (a, b) in w.iter().zip(&w0) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn interacting() -> bohmfield::Result<Outcome> {
    let (a, b) = (sector_change(12)?, sector_change(24)?);
    let shift = (a - b).abs() / b;
    Ok(outcome(a > 1e-3 && shift < 1e-4, format!("max sector change {a:.3e} (> 1e-3), n_max 12 -> 24 shift {shift:.1e} (< 1e-4)")))
}

fn extraction() -> bohmfield::Result<Outcome> {
    let mut r = rng::stream(2024, "acceptance-extraction", 0);
    // interacting state with every sector populated
    let spec = LatticeSpec::new(2.0 * PI, 3, 1.0, 0.3, 4)?;
    let prop = Propagator::new(&spec)?;
    let terms: Vec<(Vec<usize>, Complex64)> = (0..prop.basis.len())
        .map(|i| (prop.basis.occupation(i), Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))))
        .collect();
    let e = Extractor::new(&prop, FunctionalState::from_occupations(&prop.basis, &terms)?);
    let mut quad = 0.0f64;
    for _ in 0..100 {
        let x = r.random_range(0.0..2.0 * PI);
        let t = r.random_range(0.0..2.0);
        let a = e.equal_time(1, &[x], t)?;
        let b = e.quadrature(1, &[x], t, spec.n_max + 2)?;
        quad = quad.max((a - b).norm());
    }
    let positions: Vec<Vec<Vec<f64>>> = (0..=3).map(|n| (0..4).map(|_| (0..n).map(|_| r.random_range(0.0..2.0 * PI)).collect()).collect()).collect();
    let mut orth = 0.0f64;
    for (np, n) in [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 1), (3, 2), (3, 0)] {
        orth = orth.max(extract::orthogonality_check(&prop, np, n, &positions[np], spec.n_max + np + 1)?);
    }
    // free two-particle state: (□_1 + m²)ψ_2 = 0 in the first particle's variables
    let free = Propagator::new(&LatticeSpec::new(2.0 * PI, 3, 1.0, 0.0, 3)?)?;
    let two = Extractor::new(&free, extract::momentum_state(&free, &[1, 0])?);
    let m = free.spec.mass;
    let h = 1e-3;
    let mut kg = 0.0f64;
    for _ in 0..10 {
        let (x1, x2) = (r.random_range(0.0..2.0 * PI), r.random_range(0.0..2.0 * PI));
        let (t1, t2) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let psi = |x: f64, t: f64| two.wave_function_at(2, &[x, x2], &[t, t2], 0.5);
        let c = psi(x1, t1)?;
        let dtt = (psi(x1, t1 + h)? - c * 2.0 + psi(x1, t1 - h)?) / (h * h);
        let dxx = (psi(x1 + h, t1)? - c * 2.0 + psi(x1 - h, t1)?) / (h * h);
        let scale = dtt.norm() + dxx.norm() + m * m * c.norm();
        kg = kg.max((dtt - dxx + c * (m * m)).norm() / scale);
    }
    Ok(outcome(
        quad < 1e-8 && orth < 1e-10 && kg < 1e-5,
        format!("ladder vs quadrature {quad:.1e} (< 1e-8), orthogonality {orth:.1e} (< 1e-10), free psi_2 KG residual {kg:.1e} (< 1e-5)"),
    ))
}

fn norm_independence() -> bohmfield::Result<Outcome> {
    let prop = Propagator::new(&LatticeSpec::new(2.0 * PI, 3, 1.0, 0.0, 3)?)?;
    let one = extract::momentum_state(&prop, &[1])?;
    let two = extract::momentum_state(&prop, &[1, 0])?;
    let vac = FunctionalState::vacuum(&prop.basis);
    let mix = |a: f64, b: f64| FunctionalState {
        t: 0.0,
        coeffs: &vac.coeffs + &one.coeffs * Complex64::new(a, 0.0) + &two.coeffs * Complex64::new(b, 0.0),
    };
    let mut r = rng::stream(2024, "acceptance-norms", 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = [r.random_range(0.0..2.0 * PI), r.random_range(0.0..2.0 * PI)];
        let t = r.random_range(0.0..1.0);
        let base1 = Extractor::new(&prop, mix(0.8, 0.6)).velocity(1, 0, &x[..1], t)?;
        let base2 = Extractor::new(&prop, mix(0.8, 0.6)).velocities(2, &x, t)?;
        for (a, b) in [(0.8e-6, 0.6), (0.8, 0.6e-6)] {
            let v1 = Extractor::new(&prop, mix(a, b)).velocity(1, 0, &x[..1], t)?;
            let v2 = Extractor::new(&prop, mix(a, b)).velocities(2, &x, t)?;
            worst = worst.max((v1 - base1).abs() / base1.abs());
            for j in 0..2 {
                worst = worst.max((v2[j] - base2[j]).abs() / base2[j].abs().max(1e-12));
            }
        }
    }
    Ok(outcome(worst < 1e-10, format!("max relative velocity change under 1e-6 sector rescaling {worst:.1e} (< 1e-10)")))
}

fn born() -> bohmfield::Result<Outcome> {
    let ring = RingSystem::new(2.0 * PI, 1.0, vec![1, 2], vec![Complex64::new(0.3f64.sqrt(), 0.0), Complex64::new(0.7f64.sqrt(), 0.0)])?;
    let joint = measure::entangle(&ring, &PointerSpec::new(1.0, 20.0, 1.0, 1.0))?;
    let opts = EnsembleOptions::default();
    let rep = measure::run_ensemble(&joint, 10_000, 42, &opts)?;
    rep.check_gaps()?;
    let z = rep.z_scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let conv = measure::born_convergence(&joint, &[10, 100, 1000, 10_000], 20, 42, &opts)?;
    Ok(outcome(
        z < 4.0 && (conv.slope + 0.5).abs() <= 0.15,
        format!("N = 1e4 frequencies {:?}, max |z| {z:.2} (< 4), TV slope over N = 1e1..1e4 {:.3} (-0.5 +/- 0.15)", rep.frequencies, conv.slope),
    ))
}

fn collapse() -> bohmfield::Result<Outcome> {
    let prop = Propagator::new(&LatticeSpec::new(2.0 * PI, 2, 1.0, 0.0, 2)?)?;
    let h = Complex64::new(0.5f64.sqrt(), 0.0);
    let st = FunctionalState::from_occupations(&prop.basis, &[(vec![0, 0], h), (vec![1, 1], h)])?;
    let pointer = PointerSpec::new(1.0, 6.0, 1.0, 1.0);
    let ens = measure::collapse_ensemble(&prop, &st, &pointer, 4.0, 1000, 7, 32, 1e-9)?;
    let all = ens.runs.iter().all(|r| {
        r.after.iter().filter(|&&e| e > 1.0 - 1e-6).count() == 1 && r.after.iter().filter(|&&e| e < 1e-6).count() == r.after.len() - 1
    });
    let z = ens.z_scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    Ok(outcome(
        all && z < 4.0 && ens.gap_hits == 0,
        format!("all 1000 runs collapsed {all}, split {}/{} (max |z| {z:.2} < 4), gap hits {}", ens.counts[0], ens.counts[2], ens.gap_hits),
    ))
}

fn main() {
    type Criterion = (u32, &'static str, f64, fn() -> bohmfield::Result<Outcome>);
    let criteria: [Criterion; 10] = [
        (1, "fig1 crossing record", 10.0, fig1),
        (2, "particle-number conservation", 30.0, conservation),
        (3, "Hamilton-Jacobi and EOM order", 60.0, hamilton_jacobi),
        (4, "nonrelativistic limit", 60.0, nonrel),
        (5, "free-field QFT", 10.0, free_field),
        (6, "interacting QFT", 120.0, interacting),
        (7, "extraction oracles", 60.0, extraction),
        (8, "velocity norm independence", 10.0, norm_independence),
        (9, "Born rule", 120.0, born),
        (10, "effectivity collapse", 300.0, collapse),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match res {
            Ok(o) => (o.passed && secs < budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("criterion {id:2} {}: {name}: {detail}; {secs:.1}s (< {budget}s)", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
