use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::pe_level;
use crate::error::{Error, Result};
use crate::sim::Trajectory;

/// Samples compared by [`MetricSpec::BurstRatio`] on each side of the pulse.
pub const BURST_WINDOW: usize = 500;
/// Allowed per-step increase of a Lyapunov channel, relative to its initial value.
pub const LYAPUNOV_REL_TOL: f64 = 1e-6;

fn zero() -> f64 {
    0.0
}
fn burst_window() -> usize {
    BURST_WINDOW
}
fn lyap_tol() -> f64 {
    LYAPUNOV_REL_TOL
}

/// Declarative trajectory metric. Vector-valued quantities are assembled from
/// the listed channels in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricSpec {
    /// `max ‖e(t)‖` over `t ≥ from`.
    TrackingTail {
        name: String,
        channels: Vec<String>,
        #[serde(default = "zero")]
        from: f64,
    },
    /// `‖θ(t) − θ*‖` at time `at`, or at the last sample.
    ParameterError {
        name: String,
        channels: Vec<String>,
        truth: Vec<f64>,
        #[serde(default)]
        at: Option<f64>,
    },
    /// PE level `α` of the regressor over windows of length `window`.
    PeLevel {
        name: String,
        channels: Vec<String>,
        window: f64,
        #[serde(default = "zero")]
        from: f64,
    },
    /// `max ‖k(t)‖ / ‖k*‖`.
    DriftIndicator {
        name: String,
        channels: Vec<String>,
        reference: Vec<f64>,
    },
    /// Max `|e|` over the window after the pulse divided by the median `|e|`
    /// over the window before it.
    BurstRatio {
        name: String,
        channel: String,
        pulse_time: f64,
        #[serde(default = "burst_window")]
        window: usize,
    },
    /// Steps where the channel grows by more than `rel_tol · V(0)`.
    LyapunovViolations {
        name: String,
        channel: String,
        #[serde(default = "lyap_tol")]
        rel_tol: f64,
    },
    /// `Σ e²` over samples with `t ≥ from`.
    SquareSumTail { name: String, channel: String, from: f64 },
    /// `max |v|` over all samples of all listed channels.
    MaxAbs { name: String, channels: Vec<String> },
}

impl MetricSpec {
    pub fn name(&self) -> &str {
        match self {
            MetricSpec::TrackingTail { name, .. }
            | MetricSpec::ParameterError { name, .. }
            | MetricSpec::PeLevel { name, .. }
            | MetricSpec::DriftIndicator { name, .. }
            | MetricSpec::BurstRatio { name, .. }
            | MetricSpec::LyapunovViolations { name, .. }
            | MetricSpec::SquareSumTail { name, .. }
            | MetricSpec::MaxAbs { name, .. } => name,
        }
    }

    /// Channels the metric reads.
    pub fn channels(&self) -> Vec<&str> {
        match self {
            MetricSpec::TrackingTail { channels, .. }
            | MetricSpec::ParameterError { channels, .. }
            | MetricSpec::PeLevel { channels, .. }
            | MetricSpec::DriftIndicator { channels, .. }
            | MetricSpec::MaxAbs { channels, .. } => channels.iter().map(String::as_str).collect(),
            MetricSpec::BurstRatio { channel, .. }
            | MetricSpec::LyapunovViolations { channel, .. }
            | MetricSpec::SquareSumTail { channel, .. } => vec![channel.as_str()],
        }
    }

    pub fn evaluate(&self, traj: &Trajectory) -> Result<f64> {
        match self {
            MetricSpec::TrackingTail { channels, from, .. } => {
                let rows = rows(traj, channels)?;
                let k0 = tail_start(traj, *from, rows.len())?;
                Ok(rows[k0..].iter().map(|r| r.norm()).fold(0.0, f64::max))
            }
            MetricSpec::ParameterError { channels, truth, at, .. } => {
                if truth.len() != channels.len() {
                    return Err(Error::Dimension(format!(
                        "{} truth values for {} channels",
                        truth.len(),
                        channels.len()
                    )));
                }
                let rows = rows(traj, channels)?;
                let k = match at {
                    Some(t) => tail_start(traj, *t, rows.len())?,
                    None => rows.len().saturating_sub(1),
                };
                let row = rows.get(k).ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
                Ok((row - DVector::from_column_slice(truth)).norm())
            }
            MetricSpec::PeLevel {
                channels, window, from, ..
            } => {
                let rows = rows(traj, channels)?;
                let k0 = tail_start(traj, *from, rows.len())?;
                Ok(pe_level(&rows[k0..], traj.step, *window)?.alpha)
            }
            MetricSpec::DriftIndicator { channels, reference, .. } => {
                let denom = DVector::from_column_slice(reference).norm();
                if reference.len() != channels.len() || denom == 0.0 {
                    return Err(Error::InvalidParameter(
                        "drift reference must match the channels and be nonzero".into(),
                    ));
                }
                let rows = rows(traj, channels)?;
                Ok(rows.iter().map(|r| r.norm()).fold(0.0, f64::max) / denom)
            }
            MetricSpec::BurstRatio {
                channel,
                pulse_time,
                window,
                ..
            } => {
                let e = traj.channel(channel)?;
                burst_ratio(e, traj.index_at(*pulse_time), *window)
            }
            MetricSpec::LyapunovViolations { channel, rel_tol, .. } => {
                Ok(lyapunov_violations(traj.channel(channel)?, *rel_tol) as f64)
            }
            MetricSpec::SquareSumTail { channel, from, .. } => {
                let e = traj.channel(channel)?;
                let k0 = tail_start(traj, *from, e.len())?;
                Ok(e[k0..].iter().map(|v| v * v).sum())
            }
            MetricSpec::MaxAbs { channels, .. } => {
                let mut m = 0.0f64;
                for c in channels {
                    m = traj.channel(c)?.iter().fold(m, |a, v| a.max(v.abs()));
                }
                Ok(m)
            }
        }
    }
}

/// First index at or after `t`; a tail with no samples is an error, not 0,
/// so a run that stopped early cannot pass a tail criterion.
fn tail_start(traj: &Trajectory, t: f64, len: usize) -> Result<usize> {
    let k = traj.index_at(t);
    if k >= len {
        return Err(Error::Precondition(format!("no samples at or after t = {t}")));
    }
    Ok(k)
}

fn rows(traj: &Trajectory, channels: &[String]) -> Result<Vec<DVector<f64>>> {
    let names: Vec<&str> = channels.iter().map(String::as_str).collect();
    traj.rows(&names)
}

/// Max of `|e|` over `[pulse, pulse + window)` over the median of `|e|` over
/// `[pulse − window, pulse)`.
pub fn burst_ratio(e: &[f64], pulse: usize, window: usize) -> Result<f64> {
    if window == 0 || pulse < window || pulse + window > e.len() {
        return Err(Error::Precondition(format!(
            "burst windows of {window} samples around index {pulse} exceed the record of {}",
            e.len()
        )));
    }
    let mut pre: Vec<f64> = e[pulse - window..pulse].iter().map(|v| v.abs()).collect();
    pre.sort_by(f64::total_cmp);
    let median = if window % 2 == 1 {
        pre[window / 2]
    } else {
        0.5 * (pre[window / 2 - 1] + pre[window / 2])
    };
    let peak = e[pulse..pulse + window].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(peak / median)
}

/// Number of steps with `V[k+1] − V[k] > rel_tol · V[0]`.
pub fn lyapunov_violations(v: &[f64], rel_tol: f64) -> usize {
    let Some(&v0) = v.first() else { return 0 };
    let tol = rel_tol * v0.abs();
    v.windows(2).filter(|w| w[1] - w[0] > tol).count()
}

/// Evaluates every spec; names are taken from the specs.
pub fn metrics(traj: &Trajectory, specs: &[MetricSpec]) -> Result<Vec<(String, f64)>> {
    specs
        .iter()
        .map(|s| Ok((s.name().to_string(), s.evaluate(traj)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(names: &[&str], h: f64, n: usize, f: impl Fn(f64) -> Vec<f64>) -> Trajectory {
        let mut t = Trajectory::new(names.iter().map(|s| s.to_string()).collect(), h).unwrap();
        for k in 0..n {
            let time = k as f64 * h;
            t.push(time, &f(time)).unwrap();
        }
        t
    }

    #[test]
    fn zero_error_metrics_vanish() {
        let t = traj(&["e", "th"], 0.1, 100, |_| vec![0.0, 1.0]);
        let specs = vec![
            MetricSpec::TrackingTail {
                name: "tail".into(),
                channels: vec!["e".into()],
                from: 0.0,
            },
            MetricSpec::ParameterError {
                name: "perr".into(),
                channels: vec!["th".into()],
                truth: vec![1.0],
                at: None,
            },
            MetricSpec::SquareSumTail {
                name: "ss".into(),
                channel: "e".into(),
                from: 0.0,
            },
        ];
        for (_, v) in metrics(&t, &specs).unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn pe_metric_is_pe_level() {
        let h = 1e-2;
        let t = traj(&["s", "c"], h, 2000, |t| vec![t.sin(), t.cos()]);
        let spec = MetricSpec::PeLevel {
            name: "pe".into(),
            channels: vec!["s".into(), "c".into()],
            window: 6.0,
            from: 0.0,
        };
        let direct = pe_level(&t.rows(&["s", "c"]).unwrap(), h, 6.0).unwrap().alpha;
        assert_eq!(spec.evaluate(&t).unwrap(), direct);
    }

    #[test]
    fn burst_ratio_spike() {
        let mut e = vec![0.01; 2000];
        e[1200] = 0.1;
        assert!((burst_ratio(&e, 1000, 500).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn missing_channel() {
        let t = traj(&["e"], 1.0, 3, |_| vec![0.0]);
        let spec = MetricSpec::MaxAbs {
            name: "m".into(),
            channels: vec!["nope".into()],
        };
        assert!(matches!(spec.evaluate(&t), Err(Error::MissingChannel(_))));
    }

    #[test]
    fn violations_counted() {
        assert_eq!(lyapunov_violations(&[1.0, 0.9, 0.95, 0.94, 0.9400001], 1e-6), 1);
    }
}
