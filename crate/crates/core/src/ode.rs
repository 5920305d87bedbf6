//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The guidance laws in this crate are all first-order systems `dy/ds = f(s, y)`
//! whose right-hand side can fail (a node of the wave function, a vanishing
//! denominator). The integrator therefore takes a fallible vector field and
//! reports the failure together with the last accepted state.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and step bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks one from the local derivative scale.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-9,
            h_init: None,
            h_max: f64::INFINITY,
            h_min: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl StepOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

/// Quartic Hermite-type interpolant over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment {
    pub s0: f64,
    pub h: f64,
    coeffs: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn start(&self) -> &[f64] {
        &self.coeffs[0]
    }

    pub fn end(&self) -> Vec<f64> {
        self.coeffs[0]
            .iter()
            .zip(&self.coeffs[1])
            .map(|(a, b)| a + b)
            .collect()
    }

    /// True when `s` lies in the closed parameter interval of the step.
    pub fn contains(&self, s: f64) -> bool {
        let (lo, hi) = if self.h >= 0.0 {
            (self.s0, self.s1())
        } else {
            (self.s1(), self.s0)
        };
        s >= lo && s <= hi
    }

    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        let theta = (s - self.s0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(s, &mut out);
        out
    }

    /// One component only.
    pub fn component(&self, s: f64, i: usize) -> f64 {
        let theta = (s - self.s0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
    }
}

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// How an integration run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<E> {
    Completed,
    /// The observer asked to stop.
    Stopped,
    /// The vector field failed and step reduction could not get past it.
    FieldFailed(E),
}

/// Result of [`integrate`]: the dense segments plus how the run ended.
#[derive(Debug, Clone)]
pub struct Solution<E> {
    pub segments: Vec<DenseSegment>,
    pub outcome: Outcome<E>,
    pub rejected: usize,
    pub evaluations: usize,
}

impl<E> Solution<E> {
    pub fn last_state(&self) -> Option<Vec<f64>> {
        self.segments.last().map(DenseSegment::end)
    }

    pub fn last_param(&self) -> Option<f64> {
        self.segments.last().map(DenseSegment::s1)
    }

    /// Dense evaluation anywhere inside the integrated span.
    pub fn eval(&self, s: f64) -> Option<Vec<f64>> {
        self.find(s).map(|seg| seg.eval(s))
    }

    pub fn find(&self, s: f64) -> Option<&DenseSegment> {
        if self.segments.is_empty() {
            return None;
        }
        let forward = self.segments[0].h >= 0.0;
        let idx = self.segments.partition_point(|seg| {
            if forward {
                seg.s1() < s
            } else {
                seg.s1() > s
            }
        });
        self.segments.get(idx).filter(|seg| seg.contains(s))
    }
}

fn rms_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &StepOptions) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }
}

fn combine(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Attempt one step from `(s, y)` with `k[0] = f(s, y)` already filled.
/// Returns the fifth-order state, its error norm and the filled stages.
fn try_step<F, E>(
    f: &mut F,
    s: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    opts: &StepOptions,
) -> std::result::Result<(Vec<f64>, f64), E>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> std::result::Result<(), E>,
{
    let n = y.len();
    let mut y_new = vec![0.0; n];
    {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut st.k;
        let tmp = &mut st.tmp;
        combine(tmp, y, h, &[(A21, k1)]);
        f(s + C2 * h, tmp, k2)?;
        combine(tmp, y, h, &[(A31, k1), (A32, k2)]);
        f(s + C3 * h, tmp, k3)?;
        combine(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        f(s + C4 * h, tmp, k4)?;
        combine(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        f(s + C5 * h, tmp, k5)?;
        combine(tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        f(s + h, tmp, k6)?;
        combine(&mut y_new, y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        f(s + h, &y_new, k7)?;
    }
    let k = &st.k;
    let err: Vec<f64> = (0..n)
        .map(|i| h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]))
        .collect();
    let norm = rms_norm(&err, y, &y_new, opts);
    Ok((y_new, norm))
}

fn dense_segment(s: f64, h: f64, y0: &[f64], y1: &[f64], k: &[Vec<f64>; 7]) -> DenseSegment {
    let n = y0.len();
    let mut r2 = vec![0.0; n];
    let mut r3 = vec![0.0; n];
    let mut r4 = vec![0.0; n];
    let mut r5 = vec![0.0; n];
    for i in 0..n {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        r2[i] = ydiff;
        r3[i] = bspl;
        r4[i] = ydiff - h * k[6][i] - bspl;
        r5[i] = h
            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
    }
    DenseSegment {
        s0: s,
        h,
        coeffs: [y0.to_vec(), r2, r3, r4, r5],
    }
}

fn initial_step(f0: &[f64], y0: &[f64], span: f64, opts: &StepOptions) -> f64 {
    let d0 = rms_norm(y0, &vec![0.0; y0.len()], y0, opts).max(1e-5);
    let d1 = rms_norm(f0, &vec![0.0; y0.len()], y0, opts).max(1e-5);
    let h = 0.01 * d0 / d1;
    h.min(span.abs()).min(opts.h_max)
}

/// Integrate `dy/ds = f(s, y)` from `s0` to `s_end`.
///
/// The observer sees every accepted segment and may stop the run early.
/// A field failure inside a trial step halves the step; once the step
/// would drop below `h_min` the failure is returned as the outcome with
/// all segments accepted so far.
pub fn integrate<F, E, O>(
    mut f: F,
    s0: f64,
    y0: &[f64],
    s_end: f64,
    opts: &StepOptions,
    mut observer: O,
) -> Result<Solution<E>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> std::result::Result<(), E>,
    O: FnMut(&DenseSegment) -> Control,
{
    let n = y0.len();
    let span = s_end - s0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let mut sol = Solution {
        segments: Vec::new(),
        outcome: Outcome::Completed,
        rejected: 0,
        evaluations: 0,
    };
    if span == 0.0 {
        return Ok(sol);
    }
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let mut s = s0;
    if let Err(e) = f(s, &y, &mut st.k[0]) {
        sol.outcome = Outcome::FieldFailed(e);
        return Ok(sol);
    }
    sol.evaluations += 1;
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&st.k[0], &y, span, opts))
        .abs()
        .max(opts.h_min)
        * dir;
    let mut last_failure: Option<E> = None;
    let mut steps = 0usize;

    while (s_end - s) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::TooManySteps { steps });
        }
        if (s + h - s_end) * dir > 0.0 {
            h = s_end - s;
        }
        let k1 = st.k[0].clone();
        match try_step(&mut f, s, &y, h, &mut st, opts) {
            Err(e) => {
                sol.evaluations += 6;
                st.k[0] = k1;
                h *= 0.5;
                if h.abs() < opts.h_min {
                    sol.outcome = Outcome::FieldFailed(e);
                    return Ok(sol);
                }
                last_failure = Some(e);
                continue;
            }
            Ok((y_new, err)) => {
                sol.evaluations += 6;
                if err <= 1.0 {
                    let seg = dense_segment(s, h, &y, &y_new, &st.k);
                    s = if (s + h - s_end) * dir >= 0.0 { s_end } else { s + h };
                    y = y_new;
                    let k7 = std::mem::take(&mut st.k[6]);
                    st.k[0] = k7;
                    st.k[6] = vec![0.0; n];
                    let control = observer(&seg);
                    sol.segments.push(seg);
                    last_failure = None;
                    if control == Control::Stop {
                        sol.outcome = Outcome::Stopped;
                        return Ok(sol);
                    }
                    let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
                    h = (h * fac).abs().min(opts.h_max).max(opts.h_min) * dir;
                } else {
                    sol.rejected += 1;
                    st.k[0] = k1;
                    let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                    h *= fac;
                    if h.abs() < opts.h_min {
                        if let Some(e) = last_failure.take() {
                            sol.outcome = Outcome::FieldFailed(e);
                            return Ok(sol);
                        }
                        return Err(Error::StepUnderflow { at: s });
                    }
                }
            }
        }
    }
    Ok(sol)
}

/// Locate a sign change of `g` inside `[a, b]` by bisection.
///
/// `ga` and `gb` are the values at the bracket ends and must differ in
/// sign (zero counts as a root at that end). Returns the parameter once
/// the bracket is narrower than `tol`.
pub fn bisect<G>(mut g: G, mut a: f64, mut b: f64, mut ga: f64, gb: f64, tol: f64) -> f64
where
    G: FnMut(f64) -> f64,
{
    if ga == 0.0 {
        return a;
    }
    if gb == 0.0 {
        return b;
    }
    debug_assert!(ga.signum() != gb.signum());
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_fail(f: impl Fn(f64, &[f64], &mut [f64])) -> impl FnMut(f64, &[f64], &mut [f64]) -> std::result::Result<(), ()> {
        move |s, y, dy| {
            f(s, y, dy);
            Ok(())
        }
    }

    #[test]
    fn harmonic_oscillator_period() {
        let opts = StepOptions::with_tol(1e-11);
        let sol = integrate(
            no_fail(|_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            }),
            0.0,
            &[1.0, 0.0],
            2.0 * std::f64::consts::PI,
            &opts,
            |_| Control::Continue,
        )
        .unwrap();
        let y = sol.last_state().unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9, "{y:?}");
        assert!(y[1].abs() < 1e-9);
        // dense output in the middle of the run
        let mid = sol.eval(1.0).unwrap();
        assert!((mid[0] - 1.0f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn backward_integration_retraces() {
        let opts = StepOptions::with_tol(1e-11);
        let f = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0] * y[0];
        let fwd = integrate(no_fail(f), 0.0, &[1.0], 3.0, &opts, |_| Control::Continue).unwrap();
        let y1 = fwd.last_state().unwrap();
        assert!((y1[0] - 0.25).abs() < 1e-9);
        let back = integrate(no_fail(f), 3.0, &y1, 0.0, &opts, |_| Control::Continue).unwrap();
        assert!((back.last_state().unwrap()[0] - 1.0).abs() < 1e-9);
        assert!(back.eval(1.0).is_some());
    }

    #[test]
    fn field_failure_is_reported() {
        let opts = StepOptions::with_tol(1e-8);
        let sol = integrate(
            |_s: f64, y: &[f64], dy: &mut [f64]| {
                if y[0] > 2.0 {
                    return Err("wall");
                }
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            10.0,
            &opts,
            |_| Control::Continue,
        )
        .unwrap();
        assert_eq!(sol.outcome, Outcome::FieldFailed("wall"));
        let last = sol.last_state().unwrap()[0];
        assert!(last <= 2.0 && last > 1.99, "{last}");
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, -2.0, 2.0, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }
}
