//! Parametric component lifetimes.
//!
//! Both families share the parameterisation `F(t) = 1 - exp(-(λt)^α)`, the
//! exponential being the `α = 1` member. Survival is always evaluated as
//! `exp(-(λt)^α)` rather than `1 - F(t)` so the upper tail keeps full
//! relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifetimeFamily {
    Exponential,
    Weibull,
}

/// Component lifetime with rate `λ` (1/time) and shape `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeModel {
    family: LifetimeFamily,
    rate: f64,
    shape: f64,
}

impl LifetimeModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_positive("rate (lambda)", rate)?;
        Ok(Self {
            family: LifetimeFamily::Exponential,
            rate,
            shape: 1.0,
        })
    }

    pub fn weibull(rate: f64, shape: f64) -> Result<Self> {
        check_positive("rate (lambda)", rate)?;
        check_positive("shape (alpha)", shape)?;
        Ok(Self {
            family: LifetimeFamily::Weibull,
            rate,
            shape,
        })
    }

    pub fn family(&self) -> LifetimeFamily {
        self.family
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// True when the hazard is constant (exponential, or Weibull with `α = 1`).
    pub fn has_constant_hazard(&self) -> bool {
        self.shape == 1.0
    }

    /// Cumulative hazard `(λt)^α`, i.e. `-ln F̄(t)`.
    pub fn cumulative_hazard(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.cumulative_hazard_unchecked(t))
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(-(-self.cumulative_hazard_unchecked(t)).exp_m1())
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok((-self.cumulative_hazard_unchecked(t)).exp())
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return match self.shape {
                s if s < 1.0 => Ok(f64::INFINITY),
                1.0 => Ok(self.rate),
                _ => Ok(0.0),
            };
        }
        Ok(self.hazard_unchecked(t) * (-self.cumulative_hazard_unchecked(t)).exp())
    }

    /// Hazard rate `αλ(λt)^(α-1)`.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 && self.shape < 1.0 {
            return Err(Error::Singularity(format!(
                "Weibull hazard with shape {} is unbounded at t = 0",
                self.shape
            )));
        }
        Ok(self.hazard_unchecked(t))
    }

    /// Increasing failure rate: nondecreasing hazard. Constant hazard counts.
    pub fn is_ifr(&self) -> bool {
        self.shape >= 1.0
    }

    /// Time at which the cumulative hazard equals `h`, i.e. the inverse of
    /// `t -> (λt)^α`. Used by samplers working in `-ln U` coordinates.
    pub fn time_at_cumulative_hazard(&self, h: f64) -> f64 {
        if self.shape == 1.0 {
            h / self.rate
        } else {
            h.powf(1.0 / self.shape) / self.rate
        }
    }

    /// Mean lifetime `Γ(1 + 1/α)/λ`.
    pub fn mean(&self) -> f64 {
        gamma_fn(1.0 + 1.0 / self.shape) / self.rate
    }

    pub(crate) fn cumulative_hazard_unchecked(&self, t: f64) -> f64 {
        let x = self.rate * t;
        if self.shape == 1.0 {
            x
        } else {
            x.powf(self.shape)
        }
    }

    pub(crate) fn hazard_unchecked(&self, t: f64) -> f64 {
        if self.shape == 1.0 {
            self.rate
        } else {
            self.shape * self.rate * (self.rate * t).powf(self.shape - 1.0)
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be >= 0, got {t}")))
    }
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-15 for x > 0.5.
fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = COEF[0];
        for (i, c) in COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}
