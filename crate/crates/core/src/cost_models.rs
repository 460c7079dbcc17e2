//! Long-run expected cost rates of age and periodic replacement.
//!
//! With system survival `S`, `D(T) = ∫_0^T S`, mean lifetime `μ` and
//! `Δ = c_f - Σc_p`, the renewal-reward cost rate of replacing at age `T` is
//!
//! ```text
//! plain:      C(T) = [c_f - Δ S(T)] / D(T)
//! deviation:  C(T) = [c_f - Δ S(T) + c_d1 (T - D(T)) + c_d2 μ] / D(T) - c_d2
//! ```
//!
//! The deviation form charges `c_d1` per unit of time the system sits failed
//! before `T` and `c_d2` per unit of useful life discarded after `T`. The
//! parallel-system numerator `Σc_p + Δ F_sys(T)` is the same quantity written
//! with the failure probability, so one expression serves both topologies.
//! Periodic replacement at `Kτ` is the age rate on the lattice `{Kτ}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DEFAULT_ABS_TOL;
use crate::systems::{MttfEstimate, SurvivalIntegral, SystemSpec, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    c_f: f64,
    c_p: Vec<f64>,
    c_d1: f64,
    c_d2: f64,
}

impl CostParams {
    pub fn new(c_f: f64, c_p: Vec<f64>, c_d1: f64, c_d2: f64) -> Result<Self> {
        if !(c_f.is_finite() && c_f > 0.0) {
            return Err(Error::Parameter(format!("c_f must be finite and > 0, got {c_f}")));
        }
        if c_p.is_empty() {
            return Err(Error::Parameter("c_p needs one entry per component".into()));
        }
        if let Some(bad) = c_p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Parameter(format!("each c_p must be finite and >= 0, got {bad}")));
        }
        let total: f64 = c_p.iter().sum();
        if total >= c_f {
            return Err(Error::Parameter(format!(
                "sum of c_p ({total}) must be smaller than c_f ({c_f})"
            )));
        }
        for (name, v) in [("c_d1", c_d1), ("c_d2", c_d2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { c_f, c_p, c_d1, c_d2 })
    }

    /// Equal preventive cost for each of `n` components.
    pub fn uniform(c_f: f64, c_p_each: f64, n: usize, c_d1: f64, c_d2: f64) -> Result<Self> {
        Self::new(c_f, vec![c_p_each; n], c_d1, c_d2)
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn c_p(&self) -> &[f64] {
        &self.c_p
    }

    pub fn c_d1(&self) -> f64 {
        self.c_d1
    }

    pub fn c_d2(&self) -> f64 {
        self.c_d2
    }

    pub fn preventive_total(&self) -> f64 {
        self.c_p.iter().sum()
    }

    /// `c_f - Σc_p`, positive by construction.
    pub fn failure_premium(&self) -> f64 {
        self.c_f - self.preventive_total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Replace at age `t` or at failure.
    AgeContinuous { t: f64 },
    /// Replace at the `k`-th multiple of `tau` or at failure.
    PeriodicDiscrete { k: u64, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyQuery {
    pub kind: PolicyKind,
    pub deviation: bool,
}

impl PolicyQuery {
    pub fn age(t: f64, deviation: bool) -> Result<Self> {
        let q = Self {
            kind: PolicyKind::AgeContinuous { t },
            deviation,
        };
        q.horizon()?;
        Ok(q)
    }

    pub fn periodic(k: u64, tau: f64, deviation: bool) -> Result<Self> {
        let q = Self {
            kind: PolicyKind::PeriodicDiscrete { k, tau },
            deviation,
        };
        q.horizon()?;
        Ok(q)
    }

    /// Planned replacement age.
    pub fn horizon(&self) -> Result<f64> {
        match self.kind {
            PolicyKind::AgeContinuous { t } if t > 0.0 && t.is_finite() => Ok(t),
            PolicyKind::AgeContinuous { t } => Err(Error::Parameter(format!("T must be finite and > 0, got {t}"))),
            PolicyKind::PeriodicDiscrete { k: 0, .. } => Err(Error::Parameter("K must be >= 1".into())),
            PolicyKind::PeriodicDiscrete { tau, .. } if !(tau > 0.0 && tau.is_finite()) => {
                Err(Error::Parameter(format!("tau must be finite and > 0, got {tau}")))
            }
            PolicyKind::PeriodicDiscrete { k, tau } => Ok(k as f64 * tau),
        }
    }
}

/// Left and right sides of a monotone optimality predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub lhs: f64,
    pub rhs: f64,
}

impl Predicate {
    pub fn satisfied(&self) -> bool {
        self.lhs >= self.rhs
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// A system and its costs, with `∫_0^T S` and the MTTF precomputed.
#[derive(Debug, Clone)]
pub struct CostModel {
    costs: CostParams,
    integral: SurvivalIntegral,
    mttf: MttfEstimate,
}

impl CostModel {
    pub fn new(system: &SystemSpec, costs: &CostParams) -> Result<Self> {
        Self::with_tolerance(system, costs, DEFAULT_ABS_TOL)
    }

    pub fn with_tolerance(system: &SystemSpec, costs: &CostParams, abs_tol: f64) -> Result<Self> {
        if costs.c_p.len() != system.n() {
            return Err(Error::Parameter(format!(
                "c_p has {} entries for {} components",
                costs.c_p.len(),
                system.n()
            )));
        }
        let integral = SurvivalIntegral::new(system, abs_tol)?;
        let mttf = integral.mttf();
        Ok(Self {
            costs: costs.clone(),
            integral,
            mttf,
        })
    }

    pub fn system(&self) -> &SystemSpec {
        self.integral.system()
    }

    pub fn costs(&self) -> &CostParams {
        &self.costs
    }

    pub fn mttf(&self) -> f64 {
        self.mttf.value
    }

    pub fn mttf_estimate(&self) -> MttfEstimate {
        self.mttf
    }

    /// `D(T) = ∫_0^T S(t) dt`.
    pub fn expected_cycle_length(&self, t: f64) -> Result<f64> {
        self.integral.integral_to(t)
    }

    fn check_horizon(t: f64) -> Result<()> {
        if t == 0.0 {
            return Err(Error::Division("cost rate at T = 0 has a zero denominator".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("T must be finite and > 0, got {t}")));
        }
        Ok(())
    }

    pub fn age_cost_rate(&self, t: f64, deviation: bool) -> Result<f64> {
        Self::check_horizon(t)?;
        let d = self.integral.integral_to(t)?;
        let s = self.system().survival(t)?;
        let c = &self.costs;
        let mut num = c.c_f - c.failure_premium() * s;
        if deviation {
            num += c.c_d1 * (t - d) + c.c_d2 * self.mttf.value;
        }
        let rate = num / d;
        Ok(if deviation { rate - c.c_d2 } else { rate })
    }

    /// Age rate on the lattice: exactly `age_cost_rate(k τ)`.
    pub fn periodic_cost_rate(&self, k: u64, tau: f64, deviation: bool) -> Result<f64> {
        let t = PolicyQuery::periodic(k, tau, deviation)?.horizon()?;
        self.age_cost_rate(t, deviation)
    }

    pub fn evaluate(&self, q: &PolicyQuery) -> Result<f64> {
        self.age_cost_rate(q.horizon()?, q.deviation)
    }

    /// `E|T - X| = ∫_0^T (1 - S) + ∫_T^∞ S`.
    pub fn deviation_expected_time(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("T must be finite and >= 0, got {t}")));
        }
        let d = self.integral.integral_to(t)?;
        Ok((t - d) + (self.mttf.value - d).max(0.0))
    }

    /// Sign of `dC/dT`; zero exactly at the optimum. Uses the route natural
    /// to the topology: survival terms for series, failure-probability terms
    /// for parallel.
    pub fn first_order_residual(&self, t: f64, deviation: bool) -> Result<f64> {
        match self.system().topology() {
            Topology::Series => self.residual_survival_route(t, deviation),
            Topology::Parallel => self.residual_failure_route(t, deviation),
        }
    }

    /// `Δ (h D + S) + c_d1 φ - c_f - c_d2 μ` with `φ = (F/S) D - (T - D)`;
    /// divided by `Δ` in the plain case.
    pub fn residual_survival_route(&self, t: f64, deviation: bool) -> Result<f64> {
        Self::check_horizon(t)?;
        let sys = self.system();
        let h = sys.hazard(t)?;
        let d = self.integral.integral_to(t)?;
        let s = sys.survival(t)?;
        let c = &self.costs;
        let delta = c.failure_premium();
        let q = h * d + s;
        if !deviation {
            return Ok(q - c.c_f / delta);
        }
        let mut r = delta * q - c.c_f - c.c_d2 * self.mttf.value;
        if c.c_d1 > 0.0 {
            let f = sys.failure_probability(t)?;
            r += c.c_d1 * (f / s * d - (t - d));
        }
        Ok(r)
    }

    /// `Δ (h D - F) + c_d1 φ - Σc_p - c_d2 μ` with `φ = (F/(1 - F)) D - (T - D)`;
    /// divided by `Δ` in the plain case.
    pub fn residual_failure_route(&self, t: f64, deviation: bool) -> Result<f64> {
        Self::check_horizon(t)?;
        let sys = self.system();
        let h = sys.hazard(t)?;
        let d = self.integral.integral_to(t)?;
        let f = sys.failure_probability(t)?;
        let c = &self.costs;
        let delta = c.failure_premium();
        let q = h * d - f;
        if !deviation {
            return Ok(q - c.preventive_total() / delta);
        }
        let mut r = delta * q - c.preventive_total() - c.c_d2 * self.mttf.value;
        if c.c_d1 > 0.0 {
            let s = sys.survival(t)?;
            r += c.c_d1 * (f / s * d - (t - d));
        }
        Ok(r)
    }

    /// Cost rate implied by the first-order condition at a stationary `T`:
    /// `Δ h(T)` plus `c_d1 F(T)/S(T) - c_d2` with deviation costs.
    pub fn optimum_identity(&self, t: f64, deviation: bool) -> Result<f64> {
        Self::check_horizon(t)?;
        let sys = self.system();
        let c = &self.costs;
        let mut v = c.failure_premium() * sys.hazard(t)?;
        if deviation {
            v += c.c_d1 * sys.failure_probability(t)? / sys.survival(t)? - c.c_d2;
        }
        Ok(v)
    }

    /// `C((k+1)τ) >= C(kτ)` rewritten as a predicate in `S`, `D` and the
    /// period integral `I = ∫_{kτ}^{(k+1)τ} S`, survival route:
    /// `Δ H + c_d1 J >= c_f + c_d2 μ` with `H = N D + S`, `N = (S_k - S_{k+1})/I`
    /// and `J = ((τ - I)/I) D - (kτ - D)`; plain form divided by `Δ`.
    pub fn periodic_predicate_survival_route(&self, k: u64, tau: f64, deviation: bool) -> Result<Predicate> {
        let p = self.period_terms(k, tau)?;
        let c = &self.costs;
        let delta = c.failure_premium();
        let h = p.slope * p.d + p.s_k;
        if !deviation {
            return Ok(Predicate { lhs: h, rhs: c.c_f / delta });
        }
        Ok(Predicate {
            lhs: delta * h + c.c_d1 * p.j,
            rhs: c.c_f + c.c_d2 * self.mttf.value,
        })
    }

    /// Same predicate in failure-probability form: `H = N D - F_k` against
    /// `Σc_p` in place of `c_f`.
    pub fn periodic_predicate_failure_route(&self, k: u64, tau: f64, deviation: bool) -> Result<Predicate> {
        let p = self.period_terms(k, tau)?;
        let c = &self.costs;
        let delta = c.failure_premium();
        let h = p.slope * p.d - p.f_k;
        if !deviation {
            return Ok(Predicate {
                lhs: h,
                rhs: c.preventive_total() / delta,
            });
        }
        Ok(Predicate {
            lhs: delta * h + c.c_d1 * p.j,
            rhs: c.preventive_total() + c.c_d2 * self.mttf.value,
        })
    }

    pub fn periodic_predicate(&self, k: u64, tau: f64, deviation: bool) -> Result<Predicate> {
        match self.system().topology() {
            Topology::Series => self.periodic_predicate_survival_route(k, tau, deviation),
            Topology::Parallel => self.periodic_predicate_failure_route(k, tau, deviation),
        }
    }

    fn period_terms(&self, k: u64, tau: f64) -> Result<PeriodTerms> {
        let t = PolicyQuery::periodic(k, tau, false)?.horizon()?;
        let t_next = (k + 1) as f64 * tau;
        let sys = self.system();
        let d = self.integral.integral_to(t)?;
        let i = self.integral.integrate_between(t, t_next)?;
        if i <= 0.0 {
            return Err(Error::Division(format!("survival integral over [{t}, {t_next}] vanished")));
        }
        let s_k = sys.survival(t)?;
        let s_next = sys.survival(t_next)?;
        // S_k - S_{k+1} = F_{k+1} - F_k, taken from whichever side is smaller
        let drop = if s_k < 0.5 {
            s_k - s_next
        } else {
            sys.failure_probability(t_next)? - sys.failure_probability(t)?
        };
        Ok(PeriodTerms {
            d,
            s_k,
            f_k: sys.failure_probability(t)?,
            slope: drop / i,
            j: (tau - i) / i * d - (t - d),
        })
    }
}

struct PeriodTerms {
    d: f64,
    s_k: f64,
    f_k: f64,
    slope: f64,
    j: f64,
}

pub fn age_cost_rate(s: &SystemSpec, c: &CostParams, t: f64, deviation: bool) -> Result<f64> {
    CostModel::new(s, c)?.age_cost_rate(t, deviation)
}

pub fn periodic_cost_rate(s: &SystemSpec, c: &CostParams, k: u64, tau: f64, deviation: bool) -> Result<f64> {
    CostModel::new(s, c)?.periodic_cost_rate(k, tau, deviation)
}

pub fn deviation_expected_time(s: &SystemSpec, t: f64) -> Result<f64> {
    let zero = CostParams::new(1.0, vec![0.0; s.n()], 0.0, 0.0)?;
    CostModel::new(s, &zero)?.deviation_expected_time(t)
}
