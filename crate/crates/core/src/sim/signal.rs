use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sine {
    pub amplitude: f64,
    /// Angular frequency in rad per time unit.
    pub freq: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Exogenous reference or setpoint profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    Constant { value: f64 },
    /// `offset + Σ a_i sin(ω_i t + φ_i)`.
    Sines {
        terms: Vec<Sine>,
        #[serde(default)]
        offset: f64,
    },
    /// `offset ± amplitude`, positive on the first half of each period.
    Square {
        amplitude: f64,
        period: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl Default for Signal {
    fn default() -> Self {
        Signal::Constant { value: 0.0 }
    }
}

impl Signal {
    pub fn constant(value: f64) -> Self {
        Signal::Constant { value }
    }

    pub fn sines(pairs: &[(f64, f64)]) -> Self {
        Signal::Sines {
            terms: pairs
                .iter()
                .map(|&(amplitude, freq)| Sine {
                    amplitude,
                    freq,
                    phase: 0.0,
                })
                .collect(),
            offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Signal::Constant { value } => value.is_finite(),
            Signal::Sines { terms, offset } => {
                offset.is_finite()
                    && terms
                        .iter()
                        .all(|s| s.amplitude.is_finite() && s.freq.is_finite() && s.phase.is_finite())
            }
            Signal::Square {
                amplitude,
                period,
                offset,
            } => amplitude.is_finite() && offset.is_finite() && *period > 0.0 && period.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid signal {self:?}")))
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Constant { value } => *value,
            Signal::Sines { terms, offset } => {
                offset
                    + terms
                        .iter()
                        .map(|s| s.amplitude * (s.freq * t + s.phase).sin())
                        .sum::<f64>()
            }
            Signal::Square {
                amplitude,
                period,
                offset,
            } => {
                let phase = (t / period).rem_euclid(1.0);
                if phase < 0.5 {
                    offset + amplitude
                } else {
                    offset - amplitude
                }
            }
        }
    }

    /// Upper bound on `|r(t)|`.
    pub fn bound(&self) -> f64 {
        match self {
            Signal::Constant { value } => value.abs(),
            Signal::Sines { terms, offset } => offset.abs() + terms.iter().map(|s| s.amplitude.abs()).sum::<f64>(),
            Signal::Square { amplitude, offset, .. } => offset.abs() + amplitude.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_wave_halves() {
        let s = Signal::Square {
            amplitude: 1.0,
            period: 10.0,
            offset: 0.5,
        };
        assert_eq!(s.eval(0.0), 1.5);
        assert_eq!(s.eval(4.9), 1.5);
        assert_eq!(s.eval(5.0), -0.5);
        assert_eq!(s.eval(10.0), 1.5);
    }

    #[test]
    fn sines_sum() {
        let s = Signal::sines(&[(1.0, 1.0), (1.0, 2.7)]);
        let t = 0.3f64;
        assert!((s.eval(t) - (t.sin() + (2.7 * t).sin())).abs() < 1e-15);
        assert_eq!(s.bound(), 2.0);
    }
}
