//! Series and parallel systems of dependent components.
//!
//! A series system fails with its first component and has survival
//! `Ĉ(F̄_1(t), ..., F̄_n(t))`; a parallel system fails with its last component
//! and has survival `1 - C(F_1(t), ..., F_n(t))`. Hazards are assembled from
//! the copula elasticities:
//!
//! * series: `h(t) = Σ α_i(F̄(t)) h_i(t)`, `α_i = ū_i ∂_iĈ / Ĉ`
//! * parallel: `h(t) = Σ η_i(F(t)) h_i(t)`, `η_i = (1 - u_i) ∂_iC / (1 - C)`
//!
//! Both forms are evaluated from component cumulative hazards so that
//! neither survival nor failure probability has to be formed by subtraction.

use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaFamily, CopulaModel, Margin, MarginKind};
use crate::error::{Error, Result};
use crate::lifetimes::LifetimeModel;
use crate::numerics::quadrature::{self, DEFAULT_ABS_TOL, DEFAULT_MAX_DEPTH};
use crate::numerics::roots::brent;

/// Truncation point search stops once system survival falls below this.
pub const TAIL_SURVIVAL: f64 = 1e-12;
const MAX_DOUBLINGS: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Series,
    Parallel,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Topology::Series => "series",
            Topology::Parallel => "parallel",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    topology: Topology,
    components: Vec<LifetimeModel>,
    copula: CopulaModel,
}

impl SystemSpec {
    pub fn new(topology: Topology, components: Vec<LifetimeModel>, copula: CopulaModel) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Parameter("a system needs at least one component".into()));
        }
        if copula.dim() != components.len() {
            return Err(Error::Parameter(format!(
                "copula dimension {} does not match {} components",
                copula.dim(),
                components.len()
            )));
        }
        Ok(Self {
            topology,
            components,
            copula,
        })
    }

    /// `n` copies of one component law; the copula is resized to `n`.
    pub fn homogeneous(topology: Topology, component: LifetimeModel, n: usize, copula: CopulaModel) -> Result<Self> {
        Self::new(topology, vec![component; n], copula.with_dim(n)?)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn components(&self) -> &[LifetimeModel] {
        &self.components
    }

    pub fn copula(&self) -> &CopulaModel {
        &self.copula
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn margin_kind(&self) -> MarginKind {
        let first = self.components[0];
        if self.components.iter().all(|c| *c == first) {
            MarginKind::Homogeneous
        } else {
            MarginKind::Heterogeneous
        }
    }

    fn margins(&self, t: f64) -> Vec<Margin> {
        self.components
            .iter()
            .map(|c| {
                let h = c.cumulative_hazard_unchecked(t);
                match self.topology {
                    Topology::Series => Margin::from_neg_ln(h),
                    Topology::Parallel => Margin::from_neg_ln_complement(h),
                }
            })
            .collect()
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 && !t.is_nan() {
            Ok(())
        } else {
            Err(Error::Domain(format!("time must be >= 0, got {t}")))
        }
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.survival_unchecked(t))
    }

    /// `1 - survival(t)` without cancellation near `t = 0`.
    pub fn failure_probability(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let m = self.margins(t);
        Ok(match self.topology {
            Topology::Series => self.copula.one_minus_cdf_m(&m),
            Topology::Parallel => self.copula.ln_cdf_m(&m).exp(),
        })
    }

    pub(crate) fn survival_unchecked(&self, t: f64) -> f64 {
        let m = self.margins(t);
        match self.topology {
            Topology::Series => self.copula.ln_cdf_m(&m).exp(),
            Topology::Parallel => self.copula.one_minus_cdf_m(&m),
        }
    }

    /// `-d/dt ln S(t)` for `t > 0`.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 0.0 || !t.is_finite() {
            return Err(Error::Domain(format!("hazard requires finite t > 0, got {t}")));
        }
        let m = self.margins(t);
        let degenerate = match self.topology {
            Topology::Series => self.copula.ln_cdf_m(&m) == f64::NEG_INFINITY,
            Topology::Parallel => self.copula.one_minus_cdf_m(&m) <= 0.0,
        };
        if degenerate {
            return Err(Error::Division(format!("system survival is 0 at t = {t}")));
        }
        let mut h = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            let w = match self.topology {
                Topology::Series => self.copula.alpha_m_unchecked(&m, i),
                Topology::Parallel => self.copula.eta_m_unchecked(&m, i),
            };
            if w != 0.0 {
                h += w * c.hazard_unchecked(t);
            }
        }
        if !h.is_finite() {
            return Err(Error::Numeric {
                message: format!("system hazard is not finite at t = {t}"),
                estimate: h,
                error_estimate: f64::NAN,
            });
        }
        Ok(h)
    }

    /// Smallest power-of-two multiple of the longest component mean at which
    /// system survival drops below [`TAIL_SURVIVAL`].
    pub fn truncation_time(&self) -> Result<f64> {
        let mut t = self
            .components
            .iter()
            .map(|c| c.mean())
            .fold(0.0, f64::max);
        for _ in 0..MAX_DOUBLINGS {
            if self.survival_unchecked(t) < TAIL_SURVIVAL {
                return Ok(t);
            }
            t *= 2.0;
        }
        Err(Error::Numeric {
            message: "system survival does not decay; cannot truncate the lifetime integral".into(),
            estimate: t,
            error_estimate: self.survival_unchecked(t),
        })
    }

    /// Times at which survival is not smooth.
    ///
    /// Negative-θ Clayton is `max(Σ u_i^{-θ} - n + 1, 0)^{-1/θ}`; the argument
    /// crosses zero once, at the time where the series system exhausts its
    /// support or the parallel system first has positive failure
    /// probability. Quadrature must split there.
    pub fn kink_times(&self) -> Vec<f64> {
        let c = &self.copula;
        if c.family() != CopulaFamily::Clayton || c.theta() >= 0.0 || self.n() < 2 {
            return Vec::new();
        }
        let th = c.theta();
        let offset = self.n() as f64 - 1.0;
        // Σ u_i^{-θ} - (n - 1), with u_i = S_i (series) or F_i (parallel)
        let g = |t: f64| -> Result<f64> {
            let sum: f64 = self
                .components
                .iter()
                .map(|m| {
                    let h = m.cumulative_hazard_unchecked(t);
                    match self.topology {
                        Topology::Series => (th * h).exp(),
                        Topology::Parallel => (-(-h).exp_m1()).powf(-th),
                    }
                })
                .sum();
            Ok(sum - offset)
        };
        let mut hi = self.components.iter().map(|m| m.mean()).fold(0.0, f64::max);
        let sign0 = g(0.0).map(|v| v > 0.0).unwrap_or(false);
        for _ in 0..MAX_DOUBLINGS {
            match g(hi) {
                Ok(v) if (v > 0.0) != sign0 => {
                    return brent(g, 0.0, hi, 1e-15 * hi, 200).map(|r| vec![r.x]).unwrap_or_default();
                }
                _ => hi *= 2.0,
            }
        }
        Vec::new()
    }

    pub fn mttf(&self) -> Result<f64> {
        Ok(self.mttf_estimate()?.value)
    }

    /// Mean time to failure with its quadrature and truncation error.
    pub fn mttf_estimate(&self) -> Result<MttfEstimate> {
        let cache = SurvivalIntegral::new(self, DEFAULT_ABS_TOL)?;
        Ok(cache.mttf())
    }

    /// `lim_{t→∞} h(t)`.
    pub fn hazard_limit(&self) -> HazardLimit {
        use crate::copulas::CopulaFamily;
        let all_constant = self.components.iter().all(|c| c.has_constant_hazard());
        if all_constant && self.topology == Topology::Series {
            let th = self.copula.theta();
            match self.copula.family() {
                CopulaFamily::GumbelHougaard => {
                    let v = self.components.iter().map(|c| c.rate().powf(th)).sum::<f64>().powf(1.0 / th);
                    return HazardLimit::Finite { value: v, analytic: true };
                }
                CopulaFamily::Independence => {
                    let v = self.components.iter().map(|c| c.rate()).sum();
                    return HazardLimit::Finite { value: v, analytic: true };
                }
                _ => {}
            }
        }
        if self.components.iter().all(|c| c.shape() > 1.0) {
            return HazardLimit::Infinite { analytic: true };
        }
        self.hazard_limit_numeric()
    }

    /// Extrapolation on `t = μ 2^k`, ignoring the analytic cases.
    pub fn hazard_limit_numeric(&self) -> HazardLimit {
        let base = match self.mttf() {
            Ok(m) => m,
            Err(_) => return HazardLimit::Unknown { last_estimate: f64::NAN },
        };
        let mut hs: Vec<f64> = Vec::new();
        for k in 0..60 {
            match self.hazard(base * 2f64.powi(k)) {
                Ok(h) => hs.push(h),
                Err(_) => break,
            }
        }
        let last = hs.last().copied().unwrap_or(f64::NAN);
        if hs.len() < 6 {
            return HazardLimit::Unknown { last_estimate: last };
        }
        let tail = &hs[hs.len() - 4..];
        let converged = tail
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() <= 1e-9 * w[1].abs().max(1e-300));
        if converged {
            return HazardLimit::Finite { value: last, analytic: false };
        }
        // steady geometric growth: every ratio above 1 + 1e-3 and ratios settling
        let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
        let growing = ratios.iter().all(|&r| r > 1.001);
        let settled = ratios.windows(2).all(|w| (w[1] - w[0]).abs() <= 1e-3 * w[0]);
        if growing && settled {
            return HazardLimit::Infinite { analytic: false };
        }
        HazardLimit::Unknown { last_estimate: last }
    }
}

pub fn system_survival(s: &SystemSpec, t: f64) -> Result<f64> {
    s.survival(t)
}

pub fn system_hazard(s: &SystemSpec, t: f64) -> Result<f64> {
    s.hazard(t)
}

pub fn mttf(s: &SystemSpec) -> Result<f64> {
    s.mttf()
}

pub fn hazard_limit(s: &SystemSpec) -> HazardLimit {
    s.hazard_limit()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MttfEstimate {
    pub value: f64,
    /// Quadrature error plus the `S(T_max) T_max` tail allowance.
    pub error_estimate: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HazardLimit {
    Finite { value: f64, analytic: bool },
    Infinite { analytic: bool },
    Unknown { last_estimate: f64 },
}

impl HazardLimit {
    /// `+inf` for an infinite limit, NaN when unknown.
    pub fn value(&self) -> f64 {
        match self {
            HazardLimit::Finite { value, .. } => *value,
            HazardLimit::Infinite { .. } => f64::INFINITY,
            HazardLimit::Unknown { .. } => f64::NAN,
        }
    }
}

/// `D(T) = ∫_0^T S(t) dt` with the partition of `[0, T_max]` kept so that
/// repeated evaluations only integrate from the nearest knot.
#[derive(Debug, Clone)]
pub struct SurvivalIntegral {
    system: SystemSpec,
    breaks: Vec<f64>,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
    abs_error: f64,
    t_max: f64,
    tol: f64,
}

impl SurvivalIntegral {
    pub fn new(system: &SystemSpec, abs_tol: f64) -> Result<Self> {
        let t_max = system.truncation_time()?;
        let f = |t: f64| system.survival_unchecked(t);
        let breaks = system.kink_times();
        let q = quadrature::integrate_with_breaks(&f, 0.0, t_max, &breaks, abs_tol, DEFAULT_MAX_DEPTH, 16)?;
        let mut knots = Vec::with_capacity(q.segments.len() + 1);
        let mut cumulative = Vec::with_capacity(q.segments.len() + 1);
        knots.push(0.0);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for s in &q.segments {
            acc += s.value;
            knots.push(s.b);
            cumulative.push(acc);
        }
        Ok(Self {
            system: system.clone(),
            breaks,
            knots,
            cumulative,
            abs_error: q.abs_error,
            t_max,
            tol: abs_tol,
        })
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn mttf(&self) -> MttfEstimate {
        let s_max = self.system.survival_unchecked(self.t_max);
        MttfEstimate {
            value: *self.cumulative.last().expect("non-empty"),
            error_estimate: self.abs_error + s_max * self.t_max,
            t_max: self.t_max,
        }
    }

    /// `∫_a^b S(t) dt` directly, without the cache.
    pub fn integrate_between(&self, a: f64, b: f64) -> Result<f64> {
        let f = |t: f64| self.system.survival_unchecked(t);
        Ok(quadrature::integrate_with_breaks(&f, a, b, &self.breaks, self.tol * 1e-2, DEFAULT_MAX_DEPTH, 1)?.value)
    }

    pub fn integral_to(&self, t: f64) -> Result<f64> {
        SystemSpec::check_time(t)?;
        if t >= self.t_max {
            let rest = self.integrate_between(self.t_max, t)?;
            return Ok(self.cumulative.last().expect("non-empty") + rest);
        }
        // last knot <= t
        let k = self.knots.partition_point(|&x| x <= t) - 1;
        let base = self.cumulative[k];
        let a = self.knots[k];
        if a == t {
            return Ok(base);
        }
        Ok(base + self.integrate_between(a, t)?)
    }
}
