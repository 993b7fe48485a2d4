use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sim::rk4::rk4_step;
use crate::sim::Trajectory;

/// Magnitude at which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Closed loop integrated by [`simulate_ct`]. The state vector stacks plant,
/// filters, reference model and adjustable parameters.
pub trait ContinuousSystem {
    fn channel_names(&self) -> Vec<String>;

    /// Called once before each step; noise is sampled and held here.
    fn begin_step(&mut self, _t: f64, _x: &DVector<f64>) -> Result<()> {
        Ok(())
    }

    fn rhs(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Hook after each step, e.g. to clamp against round-off.
    fn post_step(&self, _x: &mut DVector<f64>) {}

    /// Logged row for the current state; must match `channel_names`.
    fn log(&self, t: f64, x: &DVector<f64>) -> Result<Vec<f64>>;

    fn state_label(&self, i: usize) -> String {
        format!("state[{i}]")
    }
}

/// Sampled loop advanced by [`simulate_dt`].
pub trait DiscreteSystem {
    fn channel_names(&self) -> Vec<String>;

    /// Produces the logged row for sample `k` and advances to `k + 1`.
    fn step(&mut self, k: usize) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub horizon: f64,
    pub step: f64,
    pub divergence_limit: f64,
    /// Log every `decimate`-th step.
    pub decimate: usize,
}

impl SimOptions {
    pub fn new(horizon: f64, step: f64) -> Self {
        SimOptions {
            horizon,
            step,
            divergence_limit: DIVERGENCE_LIMIT,
            decimate: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be finite and >= 0, got {}",
                self.horizon
            )));
        }
        if self.decimate == 0 {
            return Err(Error::InvalidParameter("decimate must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

/// Logged run. `abort` carries the reason when the loop stopped early; the
/// trajectory then holds every sample up to that point.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub trajectory: Trajectory,
    pub abort: Option<Error>,
}

fn guard(x: &DVector<f64>, limit: f64, t: f64, label: impl Fn(usize) -> String) -> Result<()> {
    for (i, v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{} at t = {t}", label(i))));
        }
        if v.abs() > limit {
            return Err(Error::Diverged {
                time: t,
                channel: label(i),
                magnitude: v.abs(),
            });
        }
    }
    Ok(())
}

/// Fixed-step RK4 integration of a closed loop from `x0`.
pub fn simulate_ct<S: ContinuousSystem + ?Sized>(sys: &mut S, x0: DVector<f64>, opts: &SimOptions) -> Result<SimRun> {
    opts.validate()?;
    let mut traj = Trajectory::new(sys.channel_names(), opts.step * opts.decimate as f64)?;
    let mut x = x0;
    traj.push(0.0, &sys.log(0.0, &x)?)?;
    let h = opts.step;
    for k in 0..opts.steps() {
        let t = k as f64 * h;
        let advanced = sys
            .begin_step(t, &x)
            .and_then(|_| rk4_step(|s, z| sys.rhs(s, z), &x, t, h))
            .and_then(|mut next| {
                sys.post_step(&mut next);
                guard(&next, opts.divergence_limit, t + h, |i| sys.state_label(i))?;
                Ok(next)
            });
        match advanced {
            Ok(next) => x = next,
            Err(e) => {
                return Ok(SimRun {
                    trajectory: traj,
                    abort: Some(e),
                })
            }
        }
        if (k + 1) % opts.decimate == 0 {
            let t1 = (k + 1) as f64 * h;
            traj.push(t1, &sys.log(t1, &x)?)?;
        }
    }
    Ok(SimRun { trajectory: traj, abort: None })
}

/// Runs `steps` samples of a discrete loop; time is the sample index.
pub fn simulate_dt<S: DiscreteSystem + ?Sized>(sys: &mut S, steps: usize, divergence_limit: f64) -> Result<SimRun> {
    let names = sys.channel_names();
    let mut traj = Trajectory::new(names.clone(), 1.0)?;
    for k in 0..steps {
        let row = match sys.step(k) {
            Ok(r) => r,
            Err(e) => {
                return Ok(SimRun {
                    trajectory: traj,
                    abort: Some(e),
                })
            }
        };
        let checked = guard(&DVector::from_column_slice(&row), divergence_limit, k as f64, |i| {
            names.get(i).cloned().unwrap_or_default()
        });
        traj.push(k as f64, &row)?;
        if let Err(e) = checked {
            return Ok(SimRun {
                trajectory: traj,
                abort: Some(e),
            });
        }
    }
    Ok(SimRun { trajectory: traj, abort: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Growth(f64);

    impl ContinuousSystem for Growth {
        fn channel_names(&self) -> Vec<String> {
            vec!["x".into()]
        }
        fn rhs(&self, _t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(x * self.0)
        }
        fn log(&self, _t: f64, x: &DVector<f64>) -> Result<Vec<f64>> {
            Ok(vec![x[0]])
        }
    }

    #[test]
    fn logs_every_step() {
        let run = simulate_ct(&mut Growth(-1.0), DVector::from_element(1, 1.0), &SimOptions::new(1.0, 0.01)).unwrap();
        assert!(run.abort.is_none());
        assert_eq!(run.trajectory.len(), 101);
        let last = *run.trajectory.channel("x").unwrap().last().unwrap();
        assert!((last - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn divergence_guard_trips() {
        let run = simulate_ct(&mut Growth(5.0), DVector::from_element(1, 1.0), &SimOptions::new(10.0, 0.01)).unwrap();
        match run.abort {
            Some(Error::Diverged { time, magnitude, .. }) => {
                assert!(magnitude > DIVERGENCE_LIMIT);
                assert!(time < 10.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    struct Counter(f64);

    impl DiscreteSystem for Counter {
        fn channel_names(&self) -> Vec<String> {
            vec!["y".into()]
        }
        fn step(&mut self, _k: usize) -> Result<Vec<f64>> {
            let y = self.0;
            self.0 *= 10.0;
            Ok(vec![y])
        }
    }

    #[test]
    fn discrete_guard_keeps_offending_row() {
        let run = simulate_dt(&mut Counter(1.0), 100, 1e9).unwrap();
        assert!(matches!(run.abort, Some(Error::Diverged { .. })));
        assert_eq!(run.trajectory.len(), 11);
    }
}
