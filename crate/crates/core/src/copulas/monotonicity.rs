//! Monotonicity diagnostics for the α_i / η_i elasticities.
//!
//! A decreasing α_i (series) or increasing η_i (parallel), together with IFR
//! components, makes the system IFR and the first-order residual of the
//! cost rate strictly increasing. Known analytic results are reported
//! directly; everything else falls back to a finite-difference grid scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CopulaFamily, CopulaModel, Margin};

pub const DEFAULT_GRID_RESOLUTION: usize = 25;

/// A forward difference in the wrong direction larger than this is a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

/// Whether the components fed to the copula share one lifetime law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginKind {
    Homogeneous,
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityVerdict {
    AnalyticPass,
    AnalyticFail,
    NumericPass,
    NumericFail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub verdict: MonotonicityVerdict,
    /// Points per axis of the scan; 0 for analytic verdicts.
    pub grid_resolution: usize,
    /// Largest difference observed in the wrong direction (0 when none).
    pub worst_violation: f64,
    pub note: String,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        matches!(
            self.verdict,
            MonotonicityVerdict::AnalyticPass | MonotonicityVerdict::NumericPass
        )
    }

    fn analytic(pass: bool, note: impl Into<String>) -> Self {
        Self {
            verdict: if pass {
                MonotonicityVerdict::AnalyticPass
            } else {
                MonotonicityVerdict::AnalyticFail
            },
            grid_resolution: 0,
            worst_violation: 0.0,
            note: note.into(),
        }
    }
}

#[derive(Clone, Copy)]
enum Target {
    AlphaDecreasing,
    EtaIncreasing,
}

impl CopulaModel {
    /// Is every α_i decreasing on `(0,1)^n`?
    pub fn check_alpha_decreasing(&self, margins: MarginKind) -> MonotonicityReport {
        let th = self.theta;
        match self.family {
            _ if self.is_product() => MonotonicityReport::analytic(true, "alpha_i = 1 (independence)"),
            CopulaFamily::GumbelBarnett => {
                MonotonicityReport::analytic(true, "Gumbel-Barnett, theta in [0, 1]")
            }
            CopulaFamily::Clayton if th < 0.0 => {
                MonotonicityReport::analytic(true, "Clayton, theta in [-1, 0)")
            }
            CopulaFamily::Fgm => MonotonicityReport::analytic(
                false,
                "FGM: alpha_i is monotone in the required direction only at theta = 0",
            ),
            CopulaFamily::GumbelHougaard if margins == MarginKind::Homogeneous => {
                MonotonicityReport::analytic(true, "Gumbel-Hougaard, homogeneous: alpha = n^(1/theta) constant")
            }
            _ => self.grid_check_alpha_decreasing(margins, DEFAULT_GRID_RESOLUTION),
        }
    }

    /// Is every η_i increasing on `(0,1)^n`?
    ///
    /// The known analytic results hold along the diagonal, i.e. for
    /// homogeneous components. Off the diagonal η_i is not monotone even under
    /// independence, so heterogeneous margins always go to the grid scan.
    pub fn check_eta_increasing(&self, margins: MarginKind) -> MonotonicityReport {
        let th = self.theta;
        if margins == MarginKind::Heterogeneous {
            return self.grid_check_eta_increasing(margins, DEFAULT_GRID_RESOLUTION);
        }
        match self.family {
            _ if self.is_product() => MonotonicityReport::analytic(true, "independence, homogeneous components"),
            CopulaFamily::GumbelHougaard => {
                MonotonicityReport::analytic(true, "Gumbel-Hougaard, theta >= 1, homogeneous components")
            }
            CopulaFamily::Clayton if th > 0.0 && th <= 1.0 => {
                MonotonicityReport::analytic(true, "Clayton, theta in (0, 1], homogeneous components")
            }
            CopulaFamily::Clayton if th < 0.0 => {
                MonotonicityReport::analytic(true, "Clayton, theta in [-1, 0), homogeneous components")
            }
            _ => self.grid_check_eta_increasing(margins, DEFAULT_GRID_RESOLUTION),
        }
    }

    /// Finite-difference scan of α_i, ignoring any analytic result.
    pub fn grid_check_alpha_decreasing(&self, margins: MarginKind, resolution: usize) -> MonotonicityReport {
        self.grid_check(Target::AlphaDecreasing, margins, resolution)
    }

    /// Finite-difference scan of η_i, ignoring any analytic result.
    pub fn grid_check_eta_increasing(&self, margins: MarginKind, resolution: usize) -> MonotonicityReport {
        self.grid_check(Target::EtaIncreasing, margins, resolution)
    }

    fn elasticities(&self, target: Target, p: &[f64]) -> Vec<f64> {
        let m: Vec<Margin> = p.iter().map(|&u| Margin::from_u(u)).collect();
        (0..self.dim)
            .map(|i| match target {
                Target::AlphaDecreasing => self.alpha_m_unchecked(&m, i),
                Target::EtaIncreasing => self.eta_m_unchecked(&m, i),
            })
            .collect()
    }

    fn grid_check(&self, target: Target, margins: MarginKind, resolution: usize) -> MonotonicityReport {
        let r = resolution.max(2);
        let step = 1.0 / r as f64;
        let axis: Vec<f64> = (0..r).map(|k| (k as f64 + 0.5) * step).collect();
        let n = self.dim;
        // sign > 0: a positive forward difference is a violation
        let sign = match target {
            Target::AlphaDecreasing => 1.0,
            Target::EtaIncreasing => -1.0,
        };

        let worst = match margins {
            MarginKind::Homogeneous => axis
                .windows(2)
                .map(|w| {
                    let a: f64 = self.elasticities(target, &vec![w[0]; n]).iter().sum();
                    let b: f64 = self.elasticities(target, &vec![w[1]; n]).iter().sum();
                    if a.is_finite() && b.is_finite() {
                        (sign * (b - a)).max(0.0)
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max),
            MarginKind::Heterogeneous => {
                let free = n.min(3);
                let total = r.pow(free as u32);
                (0..total)
                    .into_par_iter()
                    .map(|idx| {
                        let mut coords = Vec::with_capacity(free);
                        let mut rem = idx;
                        for _ in 0..free {
                            coords.push(axis[rem % r]);
                            rem /= r;
                        }
                        // remaining coordinates follow the last free one
                        let p: Vec<f64> = (0..n).map(|k| coords[k.min(free - 1)]).collect();
                        let base = self.elasticities(target, &p);
                        let mut worst: f64 = 0.0;
                        for l in 0..n {
                            if p[l] + step >= 1.0 {
                                continue;
                            }
                            let mut q = p.clone();
                            q[l] += step;
                            let moved = self.elasticities(target, &q);
                            for (a, b) in base.iter().zip(&moved) {
                                if a.is_finite() && b.is_finite() {
                                    worst = worst.max(sign * (b - a));
                                }
                            }
                        }
                        worst
                    })
                    .reduce(|| 0.0, f64::max)
            }
        };

        let pass = worst <= VIOLATION_TOLERANCE;
        MonotonicityReport {
            verdict: if pass {
                MonotonicityVerdict::NumericPass
            } else {
                MonotonicityVerdict::NumericFail
            },
            grid_resolution: r,
            worst_violation: worst,
            note: format!("grid scan, step 1/{r}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_alpha_verdicts() {
        let fgm = CopulaModel::fgm(0.5, 3).unwrap();
        assert_eq!(fgm.check_alpha_decreasing(MarginKind::Heterogeneous).verdict, MonotonicityVerdict::AnalyticFail);
        let cl = CopulaModel::clayton(-0.5, 3).unwrap();
        assert_eq!(cl.check_alpha_decreasing(MarginKind::Heterogeneous).verdict, MonotonicityVerdict::AnalyticPass);
        let gh = CopulaModel::gumbel_hougaard(2.0, 4).unwrap();
        assert!(gh.check_alpha_decreasing(MarginKind::Homogeneous).passed());
    }

    #[test]
    fn analytic_eta_verdicts() {
        let gh = CopulaModel::gumbel_hougaard(2.0, 4).unwrap();
        assert_eq!(gh.check_eta_increasing(MarginKind::Homogeneous).verdict, MonotonicityVerdict::AnalyticPass);
        let cl = CopulaModel::clayton(-0.5, 3).unwrap();
        assert_eq!(cl.check_eta_increasing(MarginKind::Homogeneous).verdict, MonotonicityVerdict::AnalyticPass);
        let cl5 = CopulaModel::clayton(5.0, 2).unwrap();
        let r = cl5.check_eta_increasing(MarginKind::Heterogeneous);
        assert!(matches!(r.verdict, MonotonicityVerdict::NumericPass | MonotonicityVerdict::NumericFail));
        assert_eq!(r.grid_resolution, DEFAULT_GRID_RESOLUTION);
    }

    #[test]
    fn grid_confirms_analytic_claims() {
        // the scan is independent of the analytic table and must agree with it
        let cases = [
            (CopulaModel::clayton(-0.5, 2).unwrap(), true),
            (CopulaModel::clayton(-0.5, 3).unwrap(), true),
            (CopulaModel::gumbel_barnett(0.5, 2).unwrap(), true),
            (CopulaModel::independence(3).unwrap(), true),
            (CopulaModel::fgm(0.5, 2).unwrap(), false),
            (CopulaModel::fgm(-0.5, 2).unwrap(), false),
        ];
        for (c, expect) in cases {
            let r = c.grid_check_alpha_decreasing(MarginKind::Heterogeneous, 25);
            assert_eq!(r.passed(), expect, "{c:?}: {r:?}");
        }
        let gh = CopulaModel::gumbel_hougaard(2.0, 4).unwrap();
        assert!(gh.grid_check_alpha_decreasing(MarginKind::Homogeneous, 25).passed());
        for th in [1.0, 2.0, 5.0] {
            let gh = CopulaModel::gumbel_hougaard(th, 2).unwrap();
            assert!(gh.grid_check_eta_increasing(MarginKind::Homogeneous, 25).passed(), "GH {th}");
        }
        let cl = CopulaModel::clayton(-0.5, 3).unwrap();
        assert!(cl.grid_check_eta_increasing(MarginKind::Homogeneous, 25).passed());
        let cl = CopulaModel::clayton(0.5, 2).unwrap();
        assert!(cl.grid_check_eta_increasing(MarginKind::Homogeneous, 25).passed());
    }

    #[test]
    fn eta_not_monotone_off_diagonal() {
        // (1-u1)u2/(1-u1 u2) decreases in u1: parallel systems of unequal
        // IFR components need not be IFR
        let ind = CopulaModel::independence(2).unwrap();
        let r = ind.check_eta_increasing(MarginKind::Heterogeneous);
        assert_eq!(r.verdict, MonotonicityVerdict::NumericFail);
        assert!(r.worst_violation > 0.01);
    }

    #[test]
    fn report_invariants() {
        let r = CopulaModel::clayton(3.0, 2)
            .unwrap()
            .grid_check_alpha_decreasing(MarginKind::Heterogeneous, 10);
        assert!(r.worst_violation >= 0.0);
        if r.verdict == MonotonicityVerdict::NumericPass {
            assert!(r.worst_violation <= VIOLATION_TOLERANCE);
        }
    }
}
