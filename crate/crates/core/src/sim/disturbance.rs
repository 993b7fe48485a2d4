use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar disturbance profile. Scenarios multiply it by a fixed direction
/// when the disturbance enters a vector channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceSpec {
    #[default]
    None,
    /// `amplitude` on `[t0, t0 + width)`, zero elsewhere.
    Pulse { t0: f64, width: f64, amplitude: f64 },
    /// `amplitude · sin(freq · t)`, `freq` in rad per time unit.
    Sinusoid { freq: f64, amplitude: f64 },
    /// Uniform draws on `[-vmax, vmax]`. With `hold > 0` a draw is held
    /// for `hold` time units, otherwise every call draws.
    BoundedNoise {
        vmax: f64,
        seed: u64,
        #[serde(default)]
        hold: f64,
    },
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Pulse { t0, width, amplitude } => {
                if !(t0.is_finite() && amplitude.is_finite()) || !(width > 0.0 && width.is_finite()) {
                    return bad(format!("pulse needs finite t0/amplitude and width > 0, got width {width}"));
                }
                Ok(())
            }
            DisturbanceSpec::Sinusoid { freq, amplitude } => {
                if !(freq.is_finite() && amplitude.is_finite()) {
                    return bad("sinusoid parameters must be finite".into());
                }
                Ok(())
            }
            DisturbanceSpec::BoundedNoise { vmax, hold, .. } => {
                if !(vmax >= 0.0 && vmax.is_finite()) {
                    return bad(format!("noise bound must be finite and >= 0, got {vmax}"));
                }
                if !(hold >= 0.0 && hold.is_finite()) {
                    return bad(format!("noise hold must be finite and >= 0, got {hold}"));
                }
                Ok(())
            }
        }
    }

    /// Upper bound on `|v(t)|`.
    pub fn bound(&self) -> f64 {
        match *self {
            DisturbanceSpec::None => 0.0,
            DisturbanceSpec::Pulse { amplitude, .. } | DisturbanceSpec::Sinusoid { amplitude, .. } => amplitude.abs(),
            DisturbanceSpec::BoundedNoise { vmax, .. } => vmax,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, DisturbanceSpec::BoundedNoise { .. })
    }

    /// Same profile with the noise seed replaced; deterministic kinds are unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        match *self {
            DisturbanceSpec::BoundedNoise { vmax, hold, .. } => DisturbanceSpec::BoundedNoise { vmax, seed, hold },
            ref other => other.clone(),
        }
    }
}

/// Runtime generator; owns its random stream, never shared between runs.
#[derive(Debug, Clone)]
pub struct Disturbance {
    spec: DisturbanceSpec,
    rng: Option<ChaCha8Rng>,
    slot: Option<i64>,
    held: f64,
}

impl Disturbance {
    pub fn new(spec: &DisturbanceSpec) -> Result<Self> {
        spec.validate()?;
        let rng = match *spec {
            DisturbanceSpec::BoundedNoise { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Ok(Disturbance {
            spec: spec.clone(),
            rng,
            slot: None,
            held: 0.0,
        })
    }

    pub fn spec(&self) -> &DisturbanceSpec {
        &self.spec
    }

    /// Value at time `t`. Without a hold interval noise advances the stream on
    /// every call, so callers sample once per step and keep the value.
    pub fn sample(&mut self, t: f64) -> f64 {
        match self.spec {
            DisturbanceSpec::None => 0.0,
            DisturbanceSpec::Pulse { t0, width, amplitude } => {
                if t >= t0 && t < t0 + width {
                    amplitude
                } else {
                    0.0
                }
            }
            DisturbanceSpec::Sinusoid { freq, amplitude } => amplitude * (freq * t).sin(),
            DisturbanceSpec::BoundedNoise { vmax, hold, .. } => {
                if vmax == 0.0 {
                    return 0.0;
                }
                if hold > 0.0 {
                    let slot = (t / hold).floor() as i64;
                    if self.slot == Some(slot) {
                        return self.held;
                    }
                    self.slot = Some(slot);
                }
                let rng = self.rng.as_mut().expect("noise generator seeded at construction");
                self.held = rng.random_range(-vmax..=vmax);
                self.held
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_bounded_and_reproducible() {
        let spec = DisturbanceSpec::BoundedNoise {
            vmax: 0.1,
            seed: 7,
            hold: 0.0,
        };
        let mut a = Disturbance::new(&spec).unwrap();
        let mut b = Disturbance::new(&spec).unwrap();
        for k in 0..10_000 {
            let v = a.sample(k as f64);
            assert!(v.abs() <= 0.1);
            assert_eq!(v.to_bits(), b.sample(k as f64).to_bits());
        }
        let mut c = Disturbance::new(&spec.with_seed(8)).unwrap();
        let mut a = Disturbance::new(&spec).unwrap();
        assert_ne!(a.sample(0.0), c.sample(0.0));
    }

    #[test]
    fn pulse_window() {
        let mut d = Disturbance::new(&DisturbanceSpec::Pulse {
            t0: 1.0,
            width: 0.5,
            amplitude: 2.0,
        })
        .unwrap();
        assert_eq!(d.sample(0.99), 0.0);
        assert_eq!(d.sample(1.0), 2.0);
        assert_eq!(d.sample(1.49), 2.0);
        assert_eq!(d.sample(1.5), 0.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(DisturbanceSpec::BoundedNoise {
            vmax: -1.0,
            seed: 0,
            hold: 0.0
        }.validate().is_err());
        assert!(DisturbanceSpec::Pulse {
            t0: 0.0,
            width: 0.0,
            amplitude: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn json_shape() {
        let s: DisturbanceSpec = serde_json::from_str(r#"{"kind":"bounded_noise","vmax":0.1,"seed":3}"#).unwrap();
        assert_eq!(
            s,
            DisturbanceSpec::BoundedNoise {
                vmax: 0.1,
                seed: 3,
                hold: 0.0
            }
        );
    }

    #[test]
    fn held_noise_is_piecewise_constant() {
        let spec = DisturbanceSpec::BoundedNoise {
            vmax: 1.0,
            seed: 1,
            hold: 0.5,
        };
        let mut d = Disturbance::new(&spec).unwrap();
        let a = d.sample(0.0);
        assert_eq!(a, d.sample(0.49));
        assert_ne!(a, d.sample(0.5));
    }
}
