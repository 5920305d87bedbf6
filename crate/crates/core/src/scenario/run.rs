//! Scenario execution: engine calls, tables and acceptance checks.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::config::{BornScenario, CollapseScenario, Config, NonrelScenario, QftScenario, Scenario, TrajectoryScenario};
use crate::error::{Error, Result};
use crate::measure::{self, EnsembleOptions};
use crate::qftfun::{Propagator, VacuumPhase};
use crate::relkin::{self, FourVector, SpatialGrid};
use crate::traject::{self, ReversalKind, TrajectoryOptions};

/// One acceptance check evaluated for a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    /// Human-readable pass condition.
    pub condition: String,
    pub passed: bool,
}

impl CheckResult {
    fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("< {limit:e}"),
            passed: value < limit,
        }
    }

    fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("{target} +/- {tol}"),
            passed: (value - target).abs() <= tol,
        }
    }

    fn equals(name: &str, value: f64, target: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("== {target}"),
            passed: value == target,
        }
    }

    fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("> {limit:e}"),
            passed: value > limit,
        }
    }
}

/// Data files (name, contents) and checks produced by one run.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub checks: Vec<CheckResult>,
}

/// Tab-separated table with a header line.
pub(crate) struct Table {
    text: String,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            text: columns.join("\t") + "\n",
        }
    }

    fn row<D: std::fmt::Display>(&mut self, values: &[D]) {
        let mut first = true;
        for v in values {
            if !first {
                self.text.push('\t');
            }
            first = false;
            let _ = write!(self.text, "{v}");
        }
        self.text.push('\n');
    }

    fn finish(self) -> String {
        self.text
    }
}

/// Run `config` with `seed` and collect outputs and checks.
pub fn execute(config: &Config, seed: u64) -> Result<RunOutput> {
    match &config.scenario {
        Scenario::Trajectory(s) => trajectory(s),
        Scenario::Nonrel(s) => nonrel(s),
        Scenario::Qft(s) => qft(s),
        Scenario::Born(s) => born(s, seed),
        Scenario::Collapse(s) => collapse(s, seed),
    }
}

fn trajectory(s: &TrajectoryScenario) -> Result<RunOutput> {
    let wave = s.wave.build()?;
    let dim = wave.dim();
    if s.start.len() != dim + 1 {
        return Err(Error::invalid(format!("start needs {} entries (t and {dim} coordinates)", dim + 1)));
    }
    let mut x = [0.0; 4];
    x[..s.start.len()].copy_from_slice(&s.start);
    let x0 = FourVector(x);
    let mut out = RunOutput::default();
    let mut summary = Table::new(&["quantity", "value"]);
    if let Some(points) = s.grid_points {
        let grid = SpatialGrid::new(points);
        let n = relkin::particle_number_grid(&wave, x0.t(), &grid)?;
        let n_phys = relkin::physical_particle_number(&wave, x0.t(), &grid)?;
        summary.row(&["particle_number".to_string(), n.to_string()]);
        summary.row(&["physical_particle_number".to_string(), n_phys.to_string()]);
        out.checks.push(CheckResult::above("n_phys_minus_abs_n", n_phys - n.abs(), -1e-12));
    }
    let opts = TrajectoryOptions {
        tol: s.tol,
        ..TrajectoryOptions::default()
    };
    let traj = traject::integrate(&wave, &x0, s.tau_span, &opts)?;
    if traj.status == traject::TrajStatus::HitNode {
        let at = traj.points.last().map(|p| p.x.0.to_vec()).unwrap_or_default();
        return Err(Error::Node {
            at,
            density: 0.0,
            floor: wave.node_floor(),
        });
    }
    let mut t = Table::new(&["tau", "t", "x", "y", "z", "j0", "R", "S", "Q"]);
    for p in &traj.points {
        t.row(&[p.tau, p.x.0[0], p.x.0[1], p.x.0[2], p.x.0[3], p.j0, p.r, p.s, p.q]);
    }
    out.files.push(("trajectory.tsv".into(), t.finish()));
    let mut ev = Table::new(&["kind", "tau", "t", "x", "j0"]);
    for e in &traj.reversal_events {
        let kind = match e.kind {
            ReversalKind::Annihilation => "annihilation",
            ReversalKind::Creation => "creation",
        };
        ev.row(&[kind.to_string(), e.tau.to_string(), e.x.t().to_string(), e.x.0[1].to_string(), e.j0.to_string()]);
    }
    out.files.push(("events.tsv".into(), ev.finish()));
    let d = traj.diagnostics;
    summary.row(&["hamilton_jacobi".to_string(), d.hamilton_jacobi.to_string()]);
    summary.row(&["guidance".to_string(), d.guidance.to_string()]);
    summary.row(&["phase_identity".to_string(), d.phase_identity.to_string()]);
    out.checks.push(CheckResult::below("hamilton_jacobi", d.hamilton_jacobi, 1e-7));
    if let Some(slice) = s.slice {
        let rec = traject::crossings(&wave, &traj, slice);
        let mut c = Table::new(&["tau", "x", "sign", "j0"]);
        for cr in &rec.crossings {
            c.row(&[cr.tau, cr.x[0], cr.sign as f64, cr.j0]);
        }
        out.files.push(("crossings.tsv".into(), c.finish()));
        summary.row(&["crossing_sum".to_string(), rec.sum().to_string()]);
        summary.row(&["crossing_count".to_string(), rec.count().to_string()]);
        if let Some(signs) = &s.expect_signs {
            let matches = rec.signs() == *signs;
            out.checks.push(CheckResult {
                name: "crossing_signs".into(),
                value: if matches { 1.0 } else { 0.0 },
                condition: format!("signs == {signs:?} (got {:?})", rec.signs()),
                passed: matches,
            });
            let expected_sum: i64 = signs.iter().map(|&v| v as i64).sum();
            out.checks.push(CheckResult::equals("crossing_sum", rec.sum() as f64, expected_sum as f64));
            out.checks.push(CheckResult::equals("crossing_count", rec.count() as f64, signs.len() as f64));
        }
    }
    if let Some(n) = s.expect_events {
        out.checks.push(CheckResult::equals("reversal_events", traj.reversal_events.len() as f64, n as f64));
        let worst = traj.reversal_events.iter().fold(0.0f64, |m, e| m.max(e.j0.abs()));
        out.checks.push(CheckResult::below("event_j0", worst, 1e-8));
    }
    out.files.push(("summary.tsv".into(), summary.finish()));
    Ok(out)
}

/// Least-squares slope of log y against log x.
pub(crate) fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn nonrel(s: &NonrelScenario) -> Result<RunOutput> {
    if s.epsilons.len() < 2 {
        return Err(Error::invalid("nonrel scenario needs at least two epsilons"));
    }
    let mut t = Table::new(&["epsilon", "max_deviation", "max_displacement", "relative_deviation", "min_j0"]);
    let mut pts = Vec::new();
    for &eps in &s.epsilons {
        let (wave, x0, span) = s.member(eps)?;
        let r = traject::nonrel_compare(&wave, x0, span, s.tol)?;
        t.row(&[eps, r.max_deviation, r.max_displacement, r.relative_deviation, r.min_j0]);
        pts.push((eps, r.relative_deviation));
    }
    let order = log_slope(&pts);
    let mut out = RunOutput::default();
    out.files.push(("nonrel.tsv".into(), t.finish()));
    if let Some(target) = s.expect_order {
        out.checks.push(CheckResult::within("deviation_order", order, target, 0.3));
    }
    let mut summary = Table::new(&["quantity", "value"]);
    summary.row(&["deviation_order".to_string(), order.to_string()]);
    out.files.push(("summary.tsv".into(), summary.finish()));
    Ok(out)
}

/// Largest change of any sector weight from t = 0, over `times`.
fn max_sector_change(prop: &Propagator, st: &crate::qftfun::FunctionalState, times: &[f64]) -> f64 {
    let w0 = st.sector_weights(&prop.basis);
    times
        .iter()
        .map(|&t| {
            let w = prop.state_at(st, t).sector_weights(&prop.basis);
            w.iter().zip(&w0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .fold(0.0, f64::max)
}

fn qft(s: &QftScenario) -> Result<RunOutput> {
    if s.steps == 0 {
        return Err(Error::invalid("qft scenario needs at least one step"));
    }
    let spec = s.spec()?;
    let prop = Propagator::new(&spec)?;
    let st = s.state(&prop.basis)?;
    let omega_min = (0..spec.mode_count()).map(|j| spec.omega(j)).fold(f64::INFINITY, f64::min);
    let t_end = s.t_end.unwrap_or(2.0 * PI / omega_min);
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end must be positive"));
    }
    let times: Vec<f64> = (0..=s.steps).map(|i| t_end * i as f64 / s.steps as f64).collect();
    let mut out = RunOutput::default();

    let mut eig = Table::new(&["index", "energy"]);
    for (i, e) in prop.energies().iter().enumerate() {
        eig.row(&[i as f64, *e]);
    }
    out.files.push(("eigenvalues.tsv".into(), eig.finish()));

    let nonzero: Vec<usize> = (0..prop.basis.len()).filter(|&i| st.coeffs[i].norm() > 0.0).collect();
    let mut coeffs = Table::new(&["t", "index", "occupation", "re", "im", "abs"]);
    let mut sectors = Table::new(&["t", "sector_weights"]);
    let mut max_abs_change = 0.0f64;
    let mut max_phase_error = 0.0f64;
    let mut states = Vec::with_capacity(times.len());
    for &t in &times {
        let c = prop.state_at(&st, t);
        for i in 0..prop.basis.len() {
            let v = c.coeffs[i];
            if v.norm() < 1e-14 && st.coeffs[i].norm() == 0.0 {
                continue;
            }
            let occ: Vec<String> = prop.basis.occupation(i).iter().map(|n| n.to_string()).collect();
            coeffs.row(&[t.to_string(), i.to_string(), occ.join(","), v.re.to_string(), v.im.to_string(), v.norm().to_string()]);
        }
        let w: Vec<String> = c.sector_weights(&prop.basis).iter().map(|x| x.to_string()).collect();
        sectors.row(&[t.to_string(), w.join(",")]);
        if spec.lambda == 0.0 {
            for &i in &nonzero {
                max_abs_change = max_abs_change.max((c.coeffs[i].norm() - st.coeffs[i].norm()).abs());
                let occ = prop.basis.occupation(i);
                let e = spec.vacuum_energy() + occ.iter().enumerate().map(|(j, &n)| n as f64 * spec.omega(j)).sum::<f64>();
                let ratio = c.coeffs[i] / st.coeffs[i];
                let err = relkin::wrap_phase(ratio.arg() + e * t).abs();
                max_phase_error = max_phase_error.max(err);
            }
        }
        states.push(c);
    }
    out.files.push(("coefficients.tsv".into(), coeffs.finish()));
    out.files.push(("sectors.tsv".into(), sectors.finish()));

    let mut summary = Table::new(&["quantity", "value"]);
    if spec.lambda == 0.0 {
        summary.row(&["max_abs_change".to_string(), max_abs_change.to_string()]);
        summary.row(&["max_phase_error".to_string(), max_phase_error.to_string()]);
        out.checks.push(CheckResult::below("coefficient_moduli", max_abs_change, 1e-10));
        out.checks.push(CheckResult::below("phase_advance", max_phase_error, 1e-8));
    } else {
        let change = max_sector_change(&prop, &st, &times);
        summary.row(&["max_sector_change".to_string(), change.to_string()]);
        out.checks.push(CheckResult::above("sector_change", change, 1e-3));
        if let Ok(phases) = crate::qftfun::vacuum_phase(&prop, &times) {
            let mut vp = Table::new(&["t", "r0", "phi0"]);
            for VacuumPhase { t, r0, phi0 } in phases {
                vp.row(&[t, r0, phi0]);
            }
            out.files.push(("vacuum_phase.tsv".into(), vp.finish()));
        }
        if s.truncation_check {
            let big_spec = spec.with_n_max(2 * spec.n_max);
            let big = Propagator::new(&big_spec)?;
            let big_st = s.state(&big.basis)?;
            let big_change = max_sector_change(&big, &big_st, &times);
            let weight_shift = (change - big_change).abs() / big_change.abs().max(1e-300);
            let (e1, e2) = (prop.energies(), big.energies());
            let eig_shift = e1.iter().zip(&e2).take(5).fold(0.0f64, |m, (a, b)| m.max(((a - b) / b).abs()));
            summary.row(&["truncation_shift".to_string(), weight_shift.to_string()]);
            summary.row(&["eigenvalue_shift".to_string(), eig_shift.to_string()]);
            let shift = weight_shift.max(eig_shift);
            out.files.push(("summary.tsv".into(), summary.finish()));
            if shift >= 1e-4 {
                return Err(Error::UnderResolved { shift, limit: 1e-4 });
            }
            out.checks.push(CheckResult::below("truncation_shift", shift, 1e-4));
            return Ok(out);
        }
    }
    out.files.push(("summary.tsv".into(), summary.finish()));
    Ok(out)
}

fn born(s: &BornScenario, seed: u64) -> Result<RunOutput> {
    let system = s.ring.build()?;
    let joint = measure::entangle(&system, &s.pointer.build())?;
    let opts = EnsembleOptions {
        t_after: s.t_after,
        grid: (s.grid[0], s.grid[1]),
        ..EnsembleOptions::default()
    };
    let rep = measure::run_ensemble(&joint, s.samples, seed, &opts)?;
    let mut out = RunOutput::default();
    let mut samples = Table::new(&["index", "x0", "y0", "x1", "y1", "channel"]);
    for r in &rep.samples {
        let ch = r.channel.map_or("-".to_string(), |c| c.to_string());
        samples.row(&[r.index.to_string(), r.start[0].to_string(), r.start[1].to_string(), r.end[0].to_string(), r.end[1].to_string(), ch]);
    }
    out.files.push(("samples.tsv".into(), samples.finish()));
    let mut summary = Table::new(&["channel", "k", "probability", "count", "frequency", "z"]);
    for a in 0..rep.counts.len() {
        summary.row(&[a as f64, joint.channels.labels[a], rep.probabilities[a], rep.counts[a] as f64, rep.frequencies[a], rep.z_scores[a]]);
    }
    out.files.push(("summary.tsv".into(), summary.finish()));
    let zmax = rep.z_scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    out.checks.push(CheckResult::below("max_abs_z", zmax, 4.0));
    out.checks.push(CheckResult::below("gap_fraction", rep.gap_hits as f64 / rep.total() as f64, 1e-3));
    out.checks.push(CheckResult::below("single_channel_x", rep.max_x_deviation, 1e-6));
    if let Some(c) = &s.convergence {
        let conv = measure::born_convergence(&joint, &c.sizes, c.repeats, seed, &opts)?;
        let mut t = Table::new(&["n", "mean_tv"]);
        for (n, tv) in &conv.points {
            t.row(&[*n as f64, *tv]);
        }
        out.files.push(("convergence.tsv".into(), t.finish()));
        out.checks.push(CheckResult::within("convergence_slope", conv.slope, -0.5, 0.15));
    }
    Ok(out)
}

fn collapse(s: &CollapseScenario, seed: u64) -> Result<RunOutput> {
    let spec = s.spec()?;
    let prop = Propagator::new(&spec)?;
    let st = s.state(&prop.basis)?;
    let pointer = s.pointer.build();
    let ens = measure::collapse_ensemble(&prop, &st, &pointer, s.t_final, s.samples, seed, s.cells, 1e-9)?;
    let mut out = RunOutput::default();
    let mut runs = Table::new(&["run", "channel", "y0", "y1", "e_before", "e_after"]);
    let mut all_collapsed = true;
    for (i, r) in ens.runs.iter().enumerate() {
        let big = r.after.iter().filter(|&&e| e > 1.0 - 1e-6).count();
        let small = r.after.iter().filter(|&&e| e < 1e-6).count();
        all_collapsed &= big == 1 && small == r.after.len() - 1;
        let fmt = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let m = r.start.len() - 1;
        runs.row(&[
            i.to_string(),
            r.channel.map_or("-".to_string(), |c| c.to_string()),
            r.start[m].to_string(),
            r.end[m].to_string(),
            fmt(&r.before),
            fmt(&r.after),
        ]);
    }
    out.files.push(("runs.tsv".into(), runs.finish()));
    let mut summary = Table::new(&["sector", "probability", "count", "frequency", "z"]);
    for n in 0..ens.counts.len() {
        summary.row(&[n as f64, ens.probabilities[n], ens.counts[n] as f64, ens.frequencies[n], ens.z_scores[n]]);
    }
    out.files.push(("summary.tsv".into(), summary.finish()));
    out.checks.push(CheckResult::equals("all_runs_collapsed", if all_collapsed { 1.0 } else { 0.0 }, 1.0));
    let zmax = ens.z_scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    out.checks.push(CheckResult::below("max_abs_z", zmax, 4.0));
    out.checks.push(CheckResult::equals("gap_hits", ens.gap_hits as f64, 0.0));
    Ok(out)
}
