//! Adaptive Dormand–Prince 5(4) integrator with a domain-aware right-hand
//! side and an optional terminal event.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub h_max: Option<f64>,
    /// Error control driving the step below this is an underflow.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: None,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OdeStatus {
    /// Reached the requested final time.
    Finished,
    /// The event function crossed zero; the last sample sits on the crossing.
    Event,
    /// The right-hand side became undefined ahead of the last sample.
    DomainExit,
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub status: OdeStatus,
}

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

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += h * c * v;
        }
    }
    out
}

struct Step {
    y: Vec<f64>,
    k7: Vec<f64>,
    err: Vec<f64>,
}

/// One Dormand–Prince step. `None` when any stage leaves the domain.
fn step<F>(f: &mut F, t: f64, y: &[f64], k1: &[f64], h: f64) -> Option<Step>
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new)?;
    let err = (0..y.len())
        .map(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]))
        .collect();
    Some(Step { y: y_new, k7, err })
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step(y: &[f64], k1: &[f64], opts: &OdeOptions, span: f64) -> f64 {
    let sc = |v: f64| opts.atol + opts.rtol * v.abs();
    let d0 = (y.iter().map(|v| (v / sc(*v)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (y
        .iter()
        .zip(k1)
        .map(|(v, k)| (k / sc(*v)).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut h = h0.min(span);
    if let Some(m) = opts.h_max {
        h = h.min(m);
    }
    h
}

/// Scalar event function `(t, y) ↦ value` watched for a sign change.
pub type EventFn<'a> = dyn FnMut(f64, &[f64]) -> f64 + 'a;

/// Integrate `y' = f(t, y)` from `t0` to `t_end`.
///
/// `f` returns `None` where the system is undefined. A step whose stages
/// leave the domain is retried at a quarter of its size; once the step
/// becomes negligible the solution ends with [`OdeStatus::DomainExit`].
///
/// When `event` is given, integration stops where `event(t, y)` first
/// changes sign from negative to non-negative, located by secant iteration
/// on the final step size.
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut event: Option<&mut EventFn<'_>>,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
{
    if !(t_end > t0) {
        return Err(Error::InvalidArgument("t_end must exceed t0".into()));
    }
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0.to_vec()],
        status: OdeStatus::Finished,
    };
    let Some(mut k1) = f(t0, y0) else {
        sol.status = OdeStatus::DomainExit;
        return Ok(sol);
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut ev = event.as_mut().map(|e| e(t, &y));
    let mut h = initial_step(&y, &k1, opts, t_end - t0);
    let mut rejected = false;
    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::InvalidArgument(format!(
                "integrator exceeded {} steps",
                opts.max_steps
            )));
        }
        if let Some(m) = opts.h_max {
            h = h.min(m);
        }
        let last = t + h >= t_end;
        let h_try = if last { t_end - t } else { h };
        let Some(s) = step(&mut f, t, &y, &k1, h_try) else {
            h = 0.25 * h_try;
            if h <= 1e-12 * (1.0 + t.abs()) {
                sol.status = OdeStatus::DomainExit;
                return Ok(sol);
            }
            rejected = true;
            continue;
        };
        let err = error_norm(&s.err, &y, &s.y, opts);
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            h = h_try * fac;
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow { t });
            }
            rejected = true;
            continue;
        }

        if let (Some(e), Some(prev)) = (event.as_mut(), ev) {
            let now = e(t + h_try, &s.y);
            if prev < 0.0 && now >= 0.0 {
                let (th, yh) = locate_event(&mut f, &mut **e, t, &y, &k1, h_try, prev, now, s.y);
                sol.t.push(th);
                sol.y.push(yh);
                sol.status = OdeStatus::Event;
                return Ok(sol);
            }
            ev = Some(now);
        }

        t = if last { t_end } else { t + h_try };
        y = s.y;
        k1 = s.k7;
        sol.t.push(t);
        sol.y.push(y.clone());

        let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
        fac = fac.clamp(0.2, 10.0);
        if rejected {
            fac = fac.min(1.0);
        }
        rejected = false;
        h = h_try * fac;
    }
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn locate_event<F>(
    f: &mut F,
    e: &mut dyn FnMut(f64, &[f64]) -> f64,
    t: f64,
    y: &[f64],
    k1: &[f64],
    h: f64,
    e0: f64,
    e1: f64,
    y1: Vec<f64>,
) -> (f64, Vec<f64>)
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
{
    // Regula falsi (Illinois) on the step size; every trial is a fresh
    // single step from the accepted state, shorter than an accepted step.
    let (mut a, mut fa) = (0.0, e0);
    let (mut b, mut fb) = (h, e1);
    let mut best = (t + h, y1);
    let mut side = 0;
    for _ in 0..60 {
        let c = b - fb * (b - a) / (fb - fa);
        if !(c > a && c < b) {
            break;
        }
        let Some(s) = step(f, t, y, k1, c) else { break };
        let fc = e(t + c, &s.y);
        best = (t + c, s.y);
        if fc.abs() <= 1e-14 * (1.0 + e0.abs()) {
            break;
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if (b - a) <= 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    best
}
