//! Optimal age `T*` and optimal period count `K*`.
//!
//! The continuous optimum is the root of the first-order residual, which is
//! strictly increasing whenever every component is IFR and the copula
//! elasticity condition holds. The residual is scanned on a geometric grid
//! anchored at the MTTF, the first negative-to-positive sign change is
//! refined with Brent's method, and the result is confirmed by direct cost
//! evaluation on both sides. The discrete optimum is the first `K` at which
//! the lattice cost stops decreasing.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::copulas::MonotonicityReport;
use crate::cost_models::{CostModel, CostParams};
use crate::error::{BoundaryBehavior, Error, Result};
use crate::numerics::{brent, golden_section};
use crate::systems::{HazardLimit, SystemSpec, Topology};

/// First grid point is `MTTF / GRID_START_DIVISOR`.
const GRID_START_DIVISOR: f64 = 1024.0;
/// Search stops at `GRID_END_FACTOR * MTTF`.
pub const GRID_END_FACTOR: f64 = 1e3;
/// Root tolerance relative to the MTTF.
pub const ROOT_XTOL: f64 = 1e-8;
/// Relative step of the two-sided confirmation.
const CONFIRM_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdVerdict {
    /// `h(∞) μ` exceeds `c_f / (c_f - Σc_p)`.
    Yes,
    No,
    /// The limiting hazard is infinite, so the threshold holds for any costs.
    TriviallyInfiniteHazard,
    /// Deviation models need no threshold.
    NotRequired,
    /// The limiting hazard could not be resolved numerically.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub components_ifr: Vec<bool>,
    pub monotonicity: MonotonicityReport,
    pub threshold_satisfied: ThresholdVerdict,
    /// `h(∞) μ`; absent for deviation models.
    pub threshold_lhs: Option<f64>,
    /// `c_f / (c_f - Σc_p)`; absent for deviation models.
    pub threshold_rhs: Option<f64>,
}

impl ConditionReport {
    pub fn all_ifr(&self) -> bool {
        self.components_ifr.iter().all(|&b| b)
    }

    /// All sufficient conditions for a finite, unique optimum hold.
    pub fn passed(&self) -> bool {
        self.all_ifr()
            && self.monotonicity.passed()
            && matches!(
                self.threshold_satisfied,
                ThresholdVerdict::Yes | ThresholdVerdict::TriviallyInfiniteHazard | ThresholdVerdict::NotRequired
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimum {
    Age { t: f64 },
    Periodic { k: u64, tau: f64 },
}

impl Optimum {
    /// Replacement age implied by the optimum.
    pub fn horizon(&self) -> f64 {
        match *self {
            Optimum::Age { t } => t,
            Optimum::Periodic { k, tau } => k as f64 * tau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    ResidualBracket,
    GoldenSectionFallback,
    LatticeScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTrace {
    pub method: SearchMethod,
    /// Final bracket of the optimum (times).
    pub bracket: (f64, f64),
    pub iterations: u32,
    /// First-order residual (continuous) or predicate margin (discrete) at the optimum.
    pub residual: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub optimum: Optimum,
    pub cost_rate: f64,
    pub deviation: bool,
    pub condition_report: ConditionReport,
    /// False when the sufficient conditions fail; the optimum is then only
    /// known to be a local one.
    pub uniqueness_guaranteed: bool,
    pub method_trace: MethodTrace,
}

pub fn check_conditions(s: &SystemSpec, c: &CostParams, deviation: bool) -> Result<ConditionReport> {
    Ok(check_conditions_for(&CostModel::new(s, c)?, deviation))
}

pub fn check_conditions_for(model: &CostModel, deviation: bool) -> ConditionReport {
    let sys = model.system();
    let components_ifr: Vec<bool> = sys.components().iter().map(|c| c.is_ifr()).collect();
    let monotonicity = match sys.topology() {
        Topology::Series => sys.copula().check_alpha_decreasing(sys.margin_kind()),
        Topology::Parallel => sys.copula().check_eta_increasing(sys.margin_kind()),
    };
    if deviation {
        return ConditionReport {
            components_ifr,
            monotonicity,
            threshold_satisfied: ThresholdVerdict::NotRequired,
            threshold_lhs: None,
            threshold_rhs: None,
        };
    }
    let costs = model.costs();
    let rhs = costs.c_f() / costs.failure_premium();
    let (verdict, lhs) = match sys.hazard_limit() {
        HazardLimit::Infinite { .. } => (ThresholdVerdict::TriviallyInfiniteHazard, f64::INFINITY),
        HazardLimit::Finite { value, .. } => {
            let lhs = value * model.mttf();
            let v = if lhs > rhs { ThresholdVerdict::Yes } else { ThresholdVerdict::No };
            (v, lhs)
        }
        HazardLimit::Unknown { .. } => (ThresholdVerdict::Undetermined, f64::NAN),
    };
    ConditionReport {
        components_ifr,
        monotonicity,
        threshold_satisfied: verdict,
        threshold_lhs: Some(lhs),
        threshold_rhs: Some(rhs),
    }
}

pub fn optimize_age(s: &SystemSpec, c: &CostParams, deviation: bool) -> Result<PolicyResult> {
    optimize_age_for(&CostModel::new(s, c)?, deviation)
}

pub fn optimize_periodic(s: &SystemSpec, c: &CostParams, tau: f64, deviation: bool) -> Result<PolicyResult> {
    optimize_periodic_for(&CostModel::new(s, c)?, tau, deviation)
}

pub fn optimize_age_for(model: &CostModel, deviation: bool) -> Result<PolicyResult> {
    let report = check_conditions_for(model, deviation);
    let scale = model.mttf();
    let t_hi = GRID_END_FACTOR * scale;
    let residual = |t: f64| model.first_order_residual(t, deviation);
    let mut notes = Vec::new();

    let mut grid: Vec<(f64, f64)> = Vec::new();
    let mut t = scale / GRID_START_DIVISOR;
    while t <= t_hi * (1.0 + 1e-12) {
        match residual(t) {
            Ok(r) if !r.is_nan() => grid.push((t, r)),
            _ => {
                notes.push(format!("residual not evaluable from t = {t:.6e}; scan truncated"));
                break;
            }
        }
        t *= 2.0;
    }
    if grid.is_empty() {
        return Err(Error::NoInteriorOptimum {
            t_hi,
            boundary: BoundaryBehavior::Unresolved,
        });
    }

    // residual already non-negative at the first point: look below it
    if grid[0].1 >= 0.0 {
        let mut hi = grid[0];
        let mut found = None;
        let mut t = hi.0;
        for _ in 0..60 {
            t *= 0.5;
            match residual(t) {
                Ok(r) if r < 0.0 => {
                    found = Some(((t, r), hi));
                    break;
                }
                Ok(r) if !r.is_nan() => hi = (t, r),
                _ => break,
            }
        }
        match found {
            Some((lo, hi)) => {
                notes.push("residual non-negative at the first grid point; bracket found below it".into());
                grid.insert(0, hi);
                grid.insert(0, lo);
            }
            None => {
                return Err(Error::NoInteriorOptimum {
                    t_hi,
                    boundary: BoundaryBehavior::IncreasingFromZero,
                })
            }
        }
    }

    let non_monotone = grid.windows(2).any(|w| w[1].1 < w[0].1);
    if non_monotone {
        notes.push("residual is not monotone on the scan grid".into());
    }
    let bracket = grid.windows(2).find(|w| w[0].1 < 0.0 && w[1].1 >= 0.0).map(|w| (w[0].0, w[1].0));

    let (mut t_star, mut method, mut bounds, mut iterations) = match bracket {
        Some((a, b)) => {
            let root = brent(residual, a, b, ROOT_XTOL * scale, 200)?;
            (root.x, SearchMethod::ResidualBracket, (root.lo, root.hi), root.iterations)
        }
        None => {
            let truncated = grid.last().map(|g| g.0 * 2.0 <= t_hi).unwrap_or(true);
            if !truncated {
                return Err(Error::NoInteriorOptimum {
                    t_hi,
                    boundary: BoundaryBehavior::DecreasingToInfinity,
                });
            }
            let (tf, it, b) = golden_fallback(model, deviation, &grid)?;
            notes.push("no residual sign change on the evaluable range; minimised the cost rate directly".into());
            warn!("residual bracket failed; golden-section fallback used");
            (tf, SearchMethod::GoldenSectionFallback, b, it)
        }
    };

    // a non-monotone residual can bracket a local optimum only
    if non_monotone && method == SearchMethod::ResidualBracket {
        let best_grid = grid
            .iter()
            .filter_map(|&(t, _)| model.age_cost_rate(t, deviation).ok().map(|c| (t, c)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let at_root = model.age_cost_rate(t_star, deviation)?;
        if let Some((_, c)) = best_grid {
            if c < at_root * (1.0 - 1e-9) {
                let (tf, it, b) = golden_fallback(model, deviation, &grid)?;
                if model.age_cost_rate(tf, deviation)? < at_root {
                    warn!("residual root at {t_star} is not the global minimum on the grid; using golden-section result {tf}");
                    notes.push(format!("residual root {t_star:.6} was a local optimum; replaced by direct minimisation"));
                    t_star = tf;
                    method = SearchMethod::GoldenSectionFallback;
                    bounds = b;
                    iterations = it;
                }
            }
        }
    }

    let cost_rate = model.age_cost_rate(t_star, deviation)?;
    let delta = CONFIRM_STEP * t_star;
    for side in [t_star - delta, t_star + delta] {
        let c = model.age_cost_rate(side, deviation)?;
        if c < cost_rate * (1.0 - 1e-12) {
            warn!("cost at {side} is below the cost at the reported optimum {t_star}");
            notes.push(format!("two-sided confirmation failed at t = {side:.6}"));
        }
    }
    let residual_at = model.first_order_residual(t_star, deviation).unwrap_or(f64::NAN);
    Ok(PolicyResult {
        optimum: Optimum::Age { t: t_star },
        cost_rate,
        deviation,
        uniqueness_guaranteed: report.passed(),
        condition_report: report,
        method_trace: MethodTrace {
            method,
            bracket: bounds,
            iterations,
            residual: residual_at,
            notes,
        },
    })
}

/// Golden-section search on the cost rate around the best grid point.
fn golden_fallback(model: &CostModel, deviation: bool, grid: &[(f64, f64)]) -> Result<(f64, u32, (f64, f64))> {
    let costs: Vec<(f64, f64)> = grid
        .iter()
        .filter_map(|&(t, _)| model.age_cost_rate(t, deviation).ok().map(|c| (t, c)))
        .collect();
    let (idx, _) = costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or(Error::NoInteriorOptimum {
            t_hi: GRID_END_FACTOR * model.mttf(),
            boundary: BoundaryBehavior::Unresolved,
        })?;
    if idx == 0 || idx + 1 == costs.len() {
        return Err(Error::NoInteriorOptimum {
            t_hi: costs.last().map(|c| c.0).unwrap_or(0.0),
            boundary: if idx == 0 {
                BoundaryBehavior::IncreasingFromZero
            } else {
                BoundaryBehavior::Unresolved
            },
        });
    }
    let (a, b) = (costs[idx - 1].0, costs[idx + 1].0);
    let m = golden_section(
        |t| model.age_cost_rate(t, deviation),
        a,
        b,
        ROOT_XTOL * model.mttf(),
        500,
    )?;
    Ok((m.x, m.iterations, (a, b)))
}

pub fn optimize_periodic_for(model: &CostModel, tau: f64, deviation: bool) -> Result<PolicyResult> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!("tau must be finite and > 0, got {tau}")));
    }
    let report = check_conditions_for(model, deviation);
    let k_cap = ((GRID_END_FACTOR * model.mttf() / tau).ceil() as u64).max(1);
    let mut notes = Vec::new();
    let mut current = model.periodic_cost_rate(1, tau, deviation)?;
    for k in 1..=k_cap {
        let next = model.periodic_cost_rate(k + 1, tau, deviation)?;
        let direct = next >= current;
        let pred = model.periodic_predicate(k, tau, deviation)?;
        if direct != pred.satisfied() {
            let cost_gap = (next - current).abs() / current.abs();
            let pred_gap = pred.margin().abs() / pred.rhs.abs().max(1.0);
            if cost_gap > 1e-9 && pred_gap > 1e-9 {
                return Err(Error::Numeric {
                    message: format!("direct comparison and predicate disagree at K = {k}"),
                    estimate: pred.margin(),
                    error_estimate: next - current,
                });
            }
            notes.push(format!("near-tie at K = {k}: direct comparison used"));
        }
        if direct {
            return Ok(PolicyResult {
                optimum: Optimum::Periodic { k, tau },
                cost_rate: current,
                deviation,
                uniqueness_guaranteed: report.passed(),
                condition_report: report,
                method_trace: MethodTrace {
                    method: SearchMethod::LatticeScan,
                    bracket: ((k - 1) as f64 * tau, (k + 1) as f64 * tau),
                    iterations: k.min(u32::MAX as u64) as u32,
                    residual: pred.margin(),
                    notes,
                },
            });
        }
        current = next;
    }
    Err(Error::NoFiniteOptimum { k_cap })
}
