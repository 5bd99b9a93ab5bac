//! Adaptive Dormand-Prince 5(4) integrator for complex state vectors.
//!
//! Steps are clipped so that every requested sample time is hit exactly; the
//! step size proposed by the controller survives the clipping.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            h_max: None,
            max_steps: 20_000_000,
        }
    }
}

impl Tolerances {
    /// Default for state vectors. Two orders tighter than the density default so
    /// the norm drift from the method's damping stays below `1e-8` over long runs.
    pub fn pure_default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        if let Some(h) = self.h_max {
            if !(h > 0.0) {
                return Err(Error::invalid("h_max must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat for the embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut s = C64::new(0.0, 0.0);
        for (c, k) in terms {
            s += k[i] * *c;
        }
        out[i] = y[i] + s * h;
    }
}

/// Max norm rather than RMS: most entries of a Fock x Dicke state are zero and
/// would otherwise dilute the error of the populated ones.
fn error_norm(y: &[C64], y_new: &[C64], err: &[C64], tol: &Tolerances) -> f64 {
    y.iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| e.norm() / (tol.atol + tol.rtol * a.norm().max(b.norm())))
        .fold(0.0, f64::max)
}

/// Integrates `dy/dt = f(t, y)` from `t0` and calls `observe(i, t_i, y)` at every
/// `sample_times[i]` (which must be non-decreasing and `>= t0`).
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    mut y: Vec<C64>,
    sample_times: &[f64],
    tol: &Tolerances,
    mut observe: O,
) -> Result<(Vec<C64>, IntegrationStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    tol.validate()?;
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.first().is_some_and(|&s| s < t0) {
        return Err(Error::invalid("sample times must be non-decreasing and not before the start time"));
    }
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut k: Vec<Vec<C64>> = vec![vec![zero; n]; 7];
    let mut stage = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut err = vec![zero; n];
    let mut stats = IntegrationStats::default();

    let mut t = t0;
    f(t, &y, &mut k[0]);
    stats.rhs_evaluations += 1;
    let span = sample_times.last().map_or(0.0, |&s| s - t0);
    let mut h = match tol.h_init {
        Some(h) => h,
        None => initial_step(&mut f, t, &y, &k[0], tol, &mut stats),
    };
    if let Some(hm) = tol.h_max {
        h = h.min(hm);
    }
    if span > 0.0 {
        h = h.min(span);
    }

    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] <= t {
        observe(next_sample, t, &y)?;
        next_sample += 1;
    }
    while next_sample < sample_times.len() {
        let target = sample_times[next_sample];
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::TooManySteps {
                time: t,
                max_steps: tol.max_steps,
            });
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepSizeUnderflow { time: t, step: h });
        }
        let remaining = target - t;
        let clipped = h >= remaining;
        let h_step = if clipped { remaining } else { h };

        {
            let (k0, rest) = k.split_at_mut(1);
            let k0 = &k0[0];
            combine(&mut stage, &y, h_step, &[(A21, k0)]);
            f(t + C2 * h_step, &stage, &mut rest[0]);
            combine(&mut stage, &y, h_step, &[(A31, k0), (A32, &rest[0])]);
            f(t + C3 * h_step, &stage, &mut rest[1]);
            combine(&mut stage, &y, h_step, &[(A41, k0), (A42, &rest[0]), (A43, &rest[1])]);
            f(t + C4 * h_step, &stage, &mut rest[2]);
            combine(
                &mut stage,
                &y,
                h_step,
                &[(A51, k0), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
            );
            f(t + C5 * h_step, &stage, &mut rest[3]);
            combine(
                &mut stage,
                &y,
                h_step,
                &[(A61, k0), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])],
            );
            f(t + h_step, &stage, &mut rest[4]);
            combine(
                &mut y_new,
                &y,
                h_step,
                &[(B1, k0), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])],
            );
            f(t + h_step, &y_new, &mut rest[5]);
        }
        stats.rhs_evaluations += 6;
        for i in 0..n {
            err[i] = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7)
                * h_step;
        }
        let e = error_norm(&y, &y_new, &err, tol);
        if !e.is_finite() {
            if y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) && h_step <= h_min * 10.0 {
                return Err(Error::NonFinite { time: t });
            }
            h = h_step * 0.1;
            stats.rejected += 1;
            continue;
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        if e <= 1.0 {
            stats.accepted += 1;
            t = if clipped { target } else { t + h_step };
            std::mem::swap(&mut y, &mut y_new);
            // first-same-as-last
            k.swap(0, 6);
            let proposal = h_step * factor;
            h = if clipped && proposal >= h_step { h.max(proposal) } else { proposal };
            if let Some(hm) = tol.h_max {
                h = h.min(hm);
            }
            while next_sample < sample_times.len() && sample_times[next_sample] <= t {
                observe(next_sample, t, &y)?;
                next_sample += 1;
            }
        } else {
            stats.rejected += 1;
            h = h_step * factor.min(1.0);
        }
    }
    Ok((y, stats))
}

fn initial_step<F>(f: &mut F, t: f64, y: &[C64], f0: &[C64], tol: &Tolerances, stats: &mut IntegrationStats) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len().max(1) as f64;
    let scale = |v: &C64| tol.atol + tol.rtol * v.norm();
    let d0 = (y.iter().map(|v| (v.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(y).map(|(d, v)| (d.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<C64> = y.iter().zip(f0).map(|(v, d)| v + d * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
    f(t + h0, &y1, &mut f1);
    stats.rhs_evaluations += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), v)| ((a - b).norm() / scale(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
