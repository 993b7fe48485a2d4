use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Excitation levels of a regressor record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeReport {
    /// Smallest eigenvalue of the windowed Gram matrix over all scanned
    /// window starts, clamped at zero.
    pub alpha: f64,
    /// Window length (time units, or samples for discrete records).
    pub window: f64,
    /// Directional level, when requested.
    pub epsilon0: Option<f64>,
}

fn check_samples(samples: &[DVector<f64>]) -> Result<usize> {
    let dim = samples
        .first()
        .map(|s| s.len())
        .ok_or_else(|| Error::InvalidParameter("empty regressor record".into()))?;
    if dim == 0 || samples.iter().any(|s| s.len() != dim) {
        return Err(Error::Dimension("regressor samples must share a nonzero dimension".into()));
    }
    if samples.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("regressor record".into()));
    }
    Ok(dim)
}

fn outer(v: &DVector<f64>) -> DMatrix<f64> {
    v * v.transpose()
}

/// Running trapezoid integral of `φφᵀ` on a uniform grid.
struct GramIntegral<'a> {
    samples: &'a [DVector<f64>],
    h: f64,
    cumulative: Vec<DMatrix<f64>>,
}

impl<'a> GramIntegral<'a> {
    fn new(samples: &'a [DVector<f64>], h: f64) -> Self {
        let dim = samples[0].len();
        let mut cumulative = Vec::with_capacity(samples.len());
        let mut acc = DMatrix::zeros(dim, dim);
        cumulative.push(acc.clone());
        for k in 1..samples.len() {
            acc += (outer(&samples[k - 1]) + outer(&samples[k])) * (0.5 * h);
            cumulative.push(acc.clone());
        }
        GramIntegral {
            samples,
            h,
            cumulative,
        }
    }

    /// `∫_0^t φφᵀ`, interpolating `φ` linearly inside the last cell and
    /// applying the trapezoid rule to the partial cell.
    fn at(&self, t: f64) -> DMatrix<f64> {
        let last = self.samples.len() - 1;
        let pos = (t / self.h).max(0.0);
        let k = (pos.floor() as usize).min(last);
        let frac = pos - k as f64;
        if k == last || frac < 1e-12 {
            return self.cumulative[k].clone();
        }
        let delta = frac * self.h;
        let phi_t = &self.samples[k] + (&self.samples[k + 1] - &self.samples[k]) * frac;
        &self.cumulative[k] + (outer(&self.samples[k]) + outer(&phi_t)) * (0.5 * delta)
    }
}

/// Window starts `0, T/10, 2T/10, ...` with `start + T ≤ duration`.
fn window_starts(duration: f64, window: f64) -> Vec<f64> {
    let stride = window / 10.0;
    let slack = 1e-9 * window.max(1.0);
    let mut v = Vec::new();
    let mut j = 0usize;
    loop {
        let t = j as f64 * stride;
        if t + window > duration + slack {
            break;
        }
        v.push(t);
        j += 1;
    }
    v
}

/// Continuous-time excitation level of uniformly sampled `φ(t_0 + k h)`:
/// the minimum over window starts (stride `T/10`) of
/// `λmin(∫_t^{t+T} φφᵀ dτ)`, integrated with the trapezoid rule.
pub fn pe_level(samples: &[DVector<f64>], h: f64, window: f64) -> Result<PeReport> {
    check_samples(samples)?;
    if !(h > 0.0) || !(window > 0.0) {
        return Err(Error::InvalidParameter("step and window must be positive".into()));
    }
    let duration = h * (samples.len() - 1) as f64;
    if window > duration * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "window {window} exceeds record length {duration}"
        )));
    }
    let gi = GramIntegral::new(samples, h);
    let alpha = window_starts(duration, window)
        .into_iter()
        .map(|t| {
            let end = (t + window).min(duration);
            linalg::min_eigenvalue(&linalg::symmetrize(&(gi.at(end) - gi.at(t))))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(PeReport {
        alpha: alpha.max(0.0),
        window,
        epsilon0: None,
    })
}

/// Discrete-time excitation level: minimum over window starts (stride
/// `max(1, T/10)`) of `λmin(Σ_{k=t}^{t+T-1} φ_k φ_kᵀ)`.
pub fn pe_level_discrete(samples: &[DVector<f64>], window: usize) -> Result<PeReport> {
    let dim = check_samples(samples)?;
    if window == 0 {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    if window > samples.len() {
        return Err(Error::InvalidParameter(format!(
            "window {window} exceeds record length {}",
            samples.len()
        )));
    }
    let mut cumulative = Vec::with_capacity(samples.len() + 1);
    let mut acc = DMatrix::zeros(dim, dim);
    cumulative.push(acc.clone());
    for s in samples {
        acc += outer(s);
        cumulative.push(acc.clone());
    }
    let stride = (window / 10).max(1);
    let alpha = (0..=samples.len() - window)
        .step_by(stride)
        .map(|t| linalg::min_eigenvalue(&linalg::symmetrize(&(&cumulative[t + window] - &cumulative[t]))))
        .fold(f64::INFINITY, f64::min);
    Ok(PeReport {
        alpha: alpha.max(0.0),
        window: window as f64,
        epsilon0: None,
    })
}

/// Unit directions used to approximate the minimum over the sphere.
fn directions(n: usize) -> Vec<DVector<f64>> {
    match n {
        1 => vec![DVector::from_element(1, 1.0)],
        2 => (0..720)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 720.0;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            // Halton points in the cube, projected radially onto the sphere.
            const PRIMES: [u32; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];
            (1..=4000)
                .filter_map(|i| {
                    let v = DVector::from_fn(n, |j, _| 2.0 * halton(i, PRIMES[j % PRIMES.len()]) - 1.0);
                    let nv = v.norm();
                    (nv > 1e-9).then(|| v / nv)
                })
                .collect()
        }
    }
}

fn halton(mut i: usize, base: u32) -> f64 {
    let b = base as usize;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Directional excitation level
/// `min_{t, ‖w‖=1} max_{t2} |1/T0 ∫_{t2}^{t2+δ0} xᵀw dτ|` with
/// `[t2, t2+δ0] ⊂ [t, t+T0]`, window starts at stride `T0/10`.
///
/// Times are rounded to the sampling grid. With `δ0 = T0` only one inner
/// interval exists and the level vanishes for `n ≥ 2`.
pub fn pe_epsilon0(samples: &[DVector<f64>], h: f64, t0: f64, delta0: f64) -> Result<f64> {
    let dim = check_samples(samples)?;
    if !(h > 0.0) || !(t0 > 0.0) || !(delta0 > 0.0) || delta0 > t0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter("need h > 0 and 0 < δ0 ≤ T0".into()));
    }
    let w_steps = (t0 / h).round() as usize;
    let d_steps = ((delta0 / h).round() as usize).clamp(1, w_steps.max(1));
    if w_steps == 0 || w_steps >= samples.len() {
        return Err(Error::InvalidParameter(format!(
            "window {t0} does not fit in the record of length {}",
            h * (samples.len() - 1) as f64
        )));
    }
    let mut cum = Vec::with_capacity(samples.len());
    let mut acc = DVector::zeros(dim);
    cum.push(acc.clone());
    for k in 1..samples.len() {
        acc += (&samples[k - 1] + &samples[k]) * (0.5 * h);
        cum.push(acc.clone());
    }
    let dirs = directions(dim);
    let stride = (w_steps / 10).max(1);
    let inner_positions = w_steps - d_steps + 1;
    let inner_stride = (inner_positions / 400).max(1);
    let mut level = f64::INFINITY;
    let mut t = 0;
    while t + w_steps < samples.len() {
        let ints: Vec<DVector<f64>> = (t..=t + w_steps - d_steps)
            .step_by(inner_stride)
            .map(|t2| (&cum[t2 + d_steps] - &cum[t2]) / t0)
            .collect();
        for w in &dirs {
            let best = ints.iter().map(|v| v.dot(w).abs()).fold(0.0, f64::max);
            level = level.min(best);
        }
        t += stride;
    }
    Ok(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn record(h: f64, t_end: f64, f: impl Fn(f64) -> Vec<f64>) -> Vec<DVector<f64>> {
        let n = (t_end / h).round() as usize;
        (0..=n).map(|k| DVector::from_vec(f(k as f64 * h))).collect()
    }

    #[test]
    fn sine_cosine_gram() {
        let s = record(1e-3, 4.0 * PI + 0.5, |t| vec![t.sin(), t.cos()]);
        let r = pe_level(&s, 1e-3, 2.0 * PI).unwrap();
        assert!((r.alpha - PI).abs() < 1e-6, "alpha = {}", r.alpha);
    }

    #[test]
    fn rank_one_regressor() {
        let s = record(1e-2, 10.0, |_| vec![1.0, 1.0]);
        assert!(pe_level(&s, 1e-2, 2.0).unwrap().alpha < 1e-12);
    }

    #[test]
    fn constant_scalar() {
        let s = record(1e-2, 10.0, |_| vec![1.0]);
        assert!((pe_level(&s, 1e-2, 2.5).unwrap().alpha - 2.5).abs() < 1e-12);
    }

    #[test]
    fn window_longer_than_record() {
        let s = record(1e-2, 1.0, |_| vec![1.0]);
        assert!(pe_level(&s, 1e-2, 2.0).is_err());
    }

    #[test]
    fn discrete_level() {
        let s: Vec<DVector<f64>> = (0..100)
            .map(|k| DVector::from_vec(vec![if k % 2 == 0 { 1.0 } else { 0.0 }, if k % 2 == 1 { 1.0 } else { 0.0 }]))
            .collect();
        assert_eq!(pe_level_discrete(&s, 10).unwrap().alpha, 5.0);
    }

    #[test]
    fn epsilon0_vanishes_for_full_inner_window() {
        let s = record(1e-2, 20.0, |t| vec![t.sin(), t.cos()]);
        assert!(pe_epsilon0(&s, 1e-2, 2.0 * PI, 2.0 * PI).unwrap() < 1e-3);
        assert!(pe_epsilon0(&s, 1e-2, 2.0 * PI, PI / 2.0).unwrap() > 0.05);
    }
}
