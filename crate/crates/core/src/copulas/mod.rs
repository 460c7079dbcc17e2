//! Copula families used to couple component lifetimes.
//!
//! Every family is evaluated from [`Margin`] triples `(u, 1 - u, -ln u)`
//! rather than from `u` alone. Series systems feed survival probabilities
//! `F̄_i(t) = exp(-(λt)^α)` whose `-ln u` is known exactly, parallel systems
//! feed `F_i(t)` whose complement is known exactly. Keeping all three
//! coordinates lets each family pick the representation that does not cancel
//! in the tails, so system hazards stay accurate long after `u` has rounded
//! to 0 or 1.
//!
//! Archimedean families: Gumbel–Hougaard (`φ(t) = (-ln t)^θ`), Clayton
//! (`φ(t) = (t^-θ - 1)/θ`) and Gumbel–Barnett (`φ(t) = ln(1 - θ ln t)`).
//! The n-dimensional Gumbel–Barnett form is built from its generator as
//! `ψ(Σφ(u_i))`. The survival copula of each family is taken to have the same
//! parametric form as the distributional copula.

mod monotonicity;

pub use monotonicity::{MarginKind, MonotonicityReport, MonotonicityVerdict, DEFAULT_GRID_RESOLUTION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Independence,
    GumbelHougaard,
    Clayton,
    Fgm,
    GumbelBarnett,
}

impl std::fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::GumbelHougaard => "gumbel_hougaard",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Fgm => "fgm",
            CopulaFamily::GumbelBarnett => "gumbel_barnett",
        };
        f.write_str(s)
    }
}

/// One coordinate of a copula argument, carried in three redundant forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub u: f64,
    pub one_minus_u: f64,
    pub neg_ln_u: f64,
}

impl Margin {
    pub fn from_u(u: f64) -> Self {
        Self {
            u,
            one_minus_u: 1.0 - u,
            neg_ln_u: -u.ln(),
        }
    }

    /// `u = exp(-x)`; the natural form for survival probabilities.
    pub fn from_neg_ln(x: f64) -> Self {
        Self {
            u: (-x).exp(),
            one_minus_u: -(-x).exp_m1(),
            neg_ln_u: x,
        }
    }

    /// `u = 1 - exp(-x)`; the natural form for distribution functions.
    pub fn from_neg_ln_complement(x: f64) -> Self {
        let v = (-x).exp();
        let u = -(-x).exp_m1();
        let neg_ln_u = if v < 0.5 { -(-v).ln_1p() } else { -u.ln() };
        Self {
            u,
            one_minus_u: v,
            neg_ln_u,
        }
    }
}

/// A copula family with its dependence parameter and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    family: CopulaFamily,
    theta: f64,
    dim: usize,
}

impl CopulaModel {
    pub fn new(family: CopulaFamily, theta: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("copula dimension must be >= 1".into()));
        }
        let theta = match family {
            CopulaFamily::Independence => 0.0,
            _ if !theta.is_finite() => {
                return Err(Error::Parameter(format!("theta must be finite, got {theta}")))
            }
            CopulaFamily::GumbelHougaard if theta < 1.0 => {
                return Err(Error::Parameter(format!(
                    "Gumbel-Hougaard theta must be >= 1, got {theta}"
                )))
            }
            CopulaFamily::Clayton if theta < -1.0 || theta == 0.0 => {
                return Err(Error::Parameter(format!(
                    "Clayton theta must lie in [-1, 0) or (0, inf), got {theta}"
                )))
            }
            CopulaFamily::Fgm if !(-1.0..=1.0).contains(&theta) => {
                return Err(Error::Parameter(format!("FGM theta must lie in [-1, 1], got {theta}")))
            }
            CopulaFamily::GumbelBarnett if !(0.0..=1.0).contains(&theta) => {
                return Err(Error::Parameter(format!(
                    "Gumbel-Barnett theta must lie in [0, 1], got {theta}"
                )))
            }
            _ => theta,
        };
        Ok(Self { family, theta, dim })
    }

    pub fn independence(dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::Independence, 0.0, dim)
    }

    pub fn gumbel_hougaard(theta: f64, dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::GumbelHougaard, theta, dim)
    }

    pub fn clayton(theta: f64, dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::Clayton, theta, dim)
    }

    pub fn fgm(theta: f64, dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::Fgm, theta, dim)
    }

    pub fn gumbel_barnett(theta: f64, dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::GumbelBarnett, theta, dim)
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same family and parameter in a different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.family, self.theta, dim)
    }

    /// Families whose evaluation reduces to the product copula.
    fn is_product(&self) -> bool {
        match self.family {
            CopulaFamily::Independence => true,
            CopulaFamily::GumbelHougaard => self.theta == 1.0,
            CopulaFamily::Fgm | CopulaFamily::GumbelBarnett => self.theta == 0.0,
            CopulaFamily::Clayton => false,
        }
    }

    // ---- u-space API --------------------------------------------------------

    /// `C(u_1, ..., u_n)`.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        let m = self.margins_closed(u)?;
        Ok(self.ln_cdf_m(&m).exp())
    }

    /// `Ĉ(ū_1, ..., ū_n)`: the survival copula, same parametric form as
    /// [`CopulaModel::cdf`].
    pub fn survival_copula_value(&self, ubar: &[f64]) -> Result<f64> {
        self.cdf(ubar)
    }

    /// `∂C/∂u_i` at an interior point. `i` is zero-based.
    pub fn partial_derivative(&self, u: &[f64], i: usize) -> Result<f64> {
        let m = self.margins_interior(u, i)?;
        self.partial_m(&m, i)
    }

    /// `u_i ∂C/∂u_i / C`: the series-system domination elasticity.
    pub fn alpha_i(&self, u: &[f64], i: usize) -> Result<f64> {
        let m = self.margins_interior(u, i)?;
        if self.ln_cdf_m(&m) == f64::NEG_INFINITY {
            return Err(Error::Division(format!("C(u) = 0 at {u:?}")));
        }
        self.alpha_m(&m, i)
    }

    /// `(1 - u_i) ∂C/∂u_i / (1 - C)`: the parallel-system elasticity.
    pub fn eta_i(&self, u: &[f64], i: usize) -> Result<f64> {
        let m = self.margins_interior(u, i)?;
        self.eta_m(&m, i)
    }

    /// `Σ_i α_i(u, ..., u)` along the diagonal. For Gumbel–Hougaard this is
    /// the constant `n^(1/θ)`.
    pub fn alpha_diagonal(&self, u: f64) -> Result<f64> {
        let p = vec![u; self.dim];
        (0..self.dim).map(|i| self.alpha_i(&p, i)).sum()
    }

    /// `Σ_i η_i(u, ..., u)` along the diagonal.
    pub fn eta_diagonal(&self, u: f64) -> Result<f64> {
        let p = vec![u; self.dim];
        (0..self.dim).map(|i| self.eta_i(&p, i)).sum()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::Domain(format!(
                "argument has {len} coordinates, copula dimension is {}",
                self.dim
            )));
        }
        Ok(())
    }

    fn margins_closed(&self, u: &[f64]) -> Result<Vec<Margin>> {
        self.check_dim(u.len())?;
        u.iter()
            .map(|&x| {
                if (0.0..=1.0).contains(&x) {
                    Ok(Margin::from_u(x))
                } else {
                    Err(Error::Domain(format!("coordinate {x} outside [0, 1]")))
                }
            })
            .collect()
    }

    fn margins_interior(&self, u: &[f64], i: usize) -> Result<Vec<Margin>> {
        let m = self.margins_closed(u)?;
        if i >= self.dim {
            return Err(Error::Domain(format!("index {i} out of range for dimension {}", self.dim)));
        }
        if u.iter().any(|&x| x <= 0.0 || x >= 1.0) {
            return Err(Error::Boundary(format!("{u:?} is not interior to (0, 1)^n")));
        }
        Ok(m)
    }

    // ---- margin-space kernels -----------------------------------------------

    /// `ln C` from margins; `-inf` where the copula vanishes.
    pub fn ln_cdf_m(&self, m: &[Margin]) -> f64 {
        let sum_x = || m.iter().map(|c| c.neg_ln_u).sum::<f64>();
        if self.is_product() {
            return -sum_x();
        }
        let th = self.theta;
        match self.family {
            CopulaFamily::GumbelHougaard => {
                let l = gh_log_a(m, th);
                -(l / th).exp()
            }
            CopulaFamily::Clayton => match clayton_ln_s(m, th) {
                Some(ln_s) => -ln_s / th,
                None => f64::NEG_INFINITY,
            },
            CopulaFamily::Fgm => {
                let q: f64 = m.iter().map(|c| c.one_minus_u).product();
                -sum_x() + (th * q).ln_1p()
            }
            CopulaFamily::GumbelBarnett => {
                let g: f64 = m.iter().map(|c| (th * c.neg_ln_u).ln_1p()).sum();
                -g.exp_m1() / th
            }
            CopulaFamily::Independence => unreachable!(),
        }
    }

    /// `1 - C` from margins, without cancellation when `C` is close to 1.
    pub fn one_minus_cdf_m(&self, m: &[Margin]) -> f64 {
        match self.family {
            CopulaFamily::Fgm if !self.is_product() => {
                let p_sum: f64 = m.iter().map(|c| c.neg_ln_u).sum();
                let p = (-p_sum).exp();
                let q: f64 = m.iter().map(|c| c.one_minus_u).product();
                -(-p_sum).exp_m1() - self.theta * p * q
            }
            _ => {
                let ln_c = self.ln_cdf_m(m);
                if ln_c == f64::NEG_INFINITY {
                    1.0
                } else {
                    -ln_c.exp_m1()
                }
            }
        }
    }

    /// Elasticity `u_i ∂C/∂u_i / C`. NaN inside the Clayton zero region.
    pub fn alpha_m_unchecked(&self, m: &[Margin], i: usize) -> f64 {
        if self.is_product() {
            return 1.0;
        }
        let th = self.theta;
        match self.family {
            CopulaFamily::GumbelHougaard => {
                let l = gh_log_a(m, th);
                if l == f64::NEG_INFINITY {
                    // every coordinate at 1: diagonal limit
                    return (self.dim as f64).powf(1.0 / th - 1.0);
                }
                let li = m[i].neg_ln_u.ln();
                ((1.0 - 1.0 / th) * (th * li - l)).exp()
            }
            CopulaFamily::Clayton => match clayton_ln_s(m, th) {
                Some(ln_s) => (th * m[i].neg_ln_u - ln_s).exp(),
                None => f64::NAN,
            },
            CopulaFamily::Fgm => {
                let q: f64 = m.iter().map(|c| c.one_minus_u).product();
                let q_i: f64 = m
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, c)| c.one_minus_u)
                    .product();
                1.0 - th * m[i].u * q_i / (1.0 + th * q)
            }
            CopulaFamily::GumbelBarnett => m
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, c)| 1.0 + th * c.neg_ln_u)
                .product(),
            CopulaFamily::Independence => unreachable!(),
        }
    }

    fn alpha_m(&self, m: &[Margin], i: usize) -> Result<f64> {
        let a = self.alpha_m_unchecked(m, i);
        if a.is_nan() {
            return Err(Error::Region(
                "Clayton copula vanishes here; elasticities are undefined".into(),
            ));
        }
        Ok(a)
    }

    /// `∂C/∂u_i = C α_i / u_i`, assembled in log space.
    fn partial_m(&self, m: &[Margin], i: usize) -> Result<f64> {
        let a = self.alpha_m(m, i)?;
        Ok(partial_from_alpha(self.ln_cdf_m(m), a, m[i].neg_ln_u))
    }

    /// Parallel elasticity `(1 - u_i) ∂C/∂u_i / (1 - C)`. NaN where undefined.
    pub fn eta_m_unchecked(&self, m: &[Margin], i: usize) -> f64 {
        let a = self.alpha_m_unchecked(m, i);
        let d = partial_from_alpha(self.ln_cdf_m(m), a, m[i].neg_ln_u);
        m[i].one_minus_u * d / self.one_minus_cdf_m(m)
    }

    fn eta_m(&self, m: &[Margin], i: usize) -> Result<f64> {
        let a = self.alpha_m(m, i)?;
        let d = partial_from_alpha(self.ln_cdf_m(m), a, m[i].neg_ln_u);
        let denom = self.one_minus_cdf_m(m);
        if denom <= 0.0 {
            return Err(Error::Division("1 - C(u) = 0".into()));
        }
        Ok(m[i].one_minus_u * d / denom)
    }
}

fn partial_from_alpha(ln_c: f64, alpha: f64, neg_ln_ui: f64) -> f64 {
    if alpha == 0.0 || ln_c == f64::NEG_INFINITY {
        return 0.0;
    }
    (ln_c + alpha.ln() + neg_ln_ui).exp()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln Σ_k (-ln u_k)^θ` for Gumbel–Hougaard.
fn gh_log_a(m: &[Margin], th: f64) -> f64 {
    log_sum_exp(m.iter().map(move |c| th * c.neg_ln_u.ln()))
}

/// `ln(Σ u_k^-θ - n + 1)` for Clayton, `None` inside the zero region.
fn clayton_ln_s(m: &[Margin], th: f64) -> Option<f64> {
    let n = m.len() as f64;
    let max_arg = m.iter().map(|c| th * c.neg_ln_u).fold(f64::NEG_INFINITY, f64::max);
    if th > 0.0 && max_arg > 500.0 {
        let l = log_sum_exp(m.iter().map(move |c| th * c.neg_ln_u));
        return Some(l + (-(n - 1.0) * (-l).exp()).ln_1p());
    }
    let s: f64 = m.iter().map(|c| (th * c.neg_ln_u).exp_m1()).sum();
    if s <= -1.0 {
        None
    } else {
        Some(s.ln_1p())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn gh_theta_one_is_independence() {
        let c = CopulaModel::gumbel_hougaard(1.0, 2).unwrap();
        assert!(close(c.cdf(&[0.3, 0.5]).unwrap(), 0.15, 1e-15));
    }

    #[test]
    fn clayton_lower_frechet_bound() {
        let c = CopulaModel::clayton(-1.0, 2).unwrap();
        assert_eq!(c.cdf(&[0.3, 0.5]).unwrap(), 0.0);
        assert!(close(c.cdf(&[0.7, 0.6]).unwrap(), 0.3, 1e-14));
    }

    #[test]
    fn gh_homogeneous_reduction() {
        let c = CopulaModel::gumbel_hougaard(2.0, 4).unwrap();
        assert!(close(c.cdf(&[0.7; 4]).unwrap(), 0.49, 1e-14));
        let s: f64 = 0.83;
        let expect = s.powf(4f64.powf(0.5));
        assert!(close(c.survival_copula_value(&[s; 4]).unwrap(), expect, 1e-14));
    }

    #[test]
    fn survival_copula_independence() {
        let c = CopulaModel::independence(2).unwrap();
        let v = c.survival_copula_value(&[(-1f64).exp(), (-2f64).exp()]).unwrap();
        assert!(close(v, (-3f64).exp(), 1e-15));
    }

    #[test]
    fn high_precision_values() {
        // 200-bit evaluations of the closed forms
        let cl = CopulaModel::clayton(0.5, 3).unwrap();
        assert!(close(cl.survival_copula_value(&[0.9, 0.8, 0.7]).unwrap(), 0.534_856_573_401_448_950_91, 1e-14));
        let gb = CopulaModel::gumbel_barnett(0.5, 2).unwrap();
        assert!(close(gb.cdf(&[0.3, 0.6]).unwrap(), 0.132_349_582_149_680_940_52, 1e-14));
        let gh = CopulaModel::gumbel_hougaard(3.0, 3).unwrap();
        assert!(close(gh.cdf(&[0.2, 0.5, 0.9]).unwrap(), 0.191_792_090_176_168_787_64, 1e-14));
        let f = CopulaModel::fgm(0.5, 2).unwrap();
        assert!(close(f.cdf(&[0.4, 0.6]).unwrap(), 0.2688, 1e-15));
    }

    #[test]
    fn boundary_values() {
        for c in [
            CopulaModel::gumbel_hougaard(2.5, 3).unwrap(),
            CopulaModel::clayton(2.0, 3).unwrap(),
            CopulaModel::clayton(-0.3, 3).unwrap(),
            CopulaModel::fgm(-0.7, 3).unwrap(),
            CopulaModel::gumbel_barnett(0.6, 3).unwrap(),
        ] {
            assert!(close(c.cdf(&[1.0, 1.0, 1.0]).unwrap(), 1.0, 1e-15), "{c:?}");
            assert_eq!(c.cdf(&[0.4, 0.0, 0.9]).unwrap(), 0.0, "{c:?}");
            assert!(close(c.cdf(&[1.0, 0.37, 1.0]).unwrap(), 0.37, 1e-14), "{c:?}");
        }
    }

    #[test]
    fn argument_errors() {
        let c = CopulaModel::clayton(0.5, 2).unwrap();
        assert!(matches!(c.cdf(&[0.5, 1.2]), Err(Error::Domain(_))));
        assert!(matches!(c.cdf(&[0.5]), Err(Error::Domain(_))));
        assert!(matches!(c.partial_derivative(&[0.5, 1.0], 0), Err(Error::Boundary(_))));
        assert!(matches!(c.partial_derivative(&[0.5, 0.5], 2), Err(Error::Domain(_))));
        let neg = CopulaModel::clayton(-1.0, 2).unwrap();
        assert!(matches!(neg.partial_derivative(&[0.3, 0.5], 0), Err(Error::Region(_))));
        assert!(matches!(neg.alpha_i(&[0.3, 0.5], 0), Err(Error::Division(_))));
    }

    #[test]
    fn parameter_ranges() {
        assert!(CopulaModel::gumbel_hougaard(0.5, 2).is_err());
        assert!(CopulaModel::clayton(0.0, 2).is_err());
        assert!(CopulaModel::clayton(-1.5, 2).is_err());
        assert!(CopulaModel::fgm(1.1, 2).is_err());
        assert!(CopulaModel::gumbel_barnett(-0.1, 2).is_err());
        assert!(CopulaModel::gumbel_barnett(0.5, 0).is_err());
        assert!(CopulaModel::independence(3).is_ok());
    }

    #[test]
    fn partial_independence() {
        let c = CopulaModel::independence(2).unwrap();
        assert!(close(c.partial_derivative(&[0.3, 0.5], 0).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn partial_fgm_central_difference() {
        let c = CopulaModel::fgm(0.5, 2).unwrap();
        let u = [0.4, 0.6];
        let h = 1e-6;
        for i in 0..2 {
            let mut up = u;
            let mut dn = u;
            up[i] += h;
            dn[i] -= h;
            let fd = (c.cdf(&up).unwrap() - c.cdf(&dn).unwrap()) / (2.0 * h);
            let an = c.partial_derivative(&u, i).unwrap();
            assert!(((fd - an) / an).abs() < 1e-6);
        }
    }

    #[test]
    fn gh_homogeneous_elasticities_sum_to_n_pow() {
        let c = CopulaModel::gumbel_hougaard(2.0, 4).unwrap();
        for u in [0.1, 0.5, 0.93] {
            let p = [u; 4];
            let cv = c.cdf(&p).unwrap();
            let mut total = 0.0;
            for i in 0..4 {
                let e = u * c.partial_derivative(&p, i).unwrap() / cv;
                assert!(close(e, 0.5, 1e-12));
                total += e;
            }
            assert!(close(total, 2.0, 1e-12));
            assert!(close(c.alpha_diagonal(u).unwrap(), 2.0, 1e-12));
        }
    }

    #[test]
    fn alpha_values() {
        let ind = CopulaModel::independence(3).unwrap();
        assert_eq!(ind.alpha_i(&[0.2, 0.4, 0.9], 1).unwrap(), 1.0);
        let cl = CopulaModel::clayton(-0.5, 2).unwrap();
        // (u1^-θ + u2^-θ - 1)^-1 u1^-θ at 200 bits
        assert!(close(cl.alpha_i(&[0.6, 0.7], 0).unwrap(), 1.267_219_933_286_259_789_5, 1e-13));
    }

    #[test]
    fn eta_values() {
        let ind = CopulaModel::independence(2).unwrap();
        assert!(close(ind.eta_i(&[0.5, 0.5], 0).unwrap(), 1.0 / 3.0, 1e-14));
        for v in [0.1, 0.7] {
            assert!(close(ind.eta_i(&[v, v], 1).unwrap(), v / (1.0 + v), 1e-14));
        }
        assert!(ind.eta_i(&[1e-12, 1e-12], 0).unwrap() < 1e-11);
        let cl = CopulaModel::clayton(-0.5, 3).unwrap();
        // homogeneous closed form n(1-u)u^(-θ-1)S^(-1/θ-1)/(1-S^(-1/θ)) at 200 bits
        assert!(close(cl.eta_diagonal(0.5).unwrap(), 0.261_203_874_963_741_442_51, 1e-13));
        assert!(close(cl.eta_i(&[0.5; 3], 2).unwrap(), 0.087_067_958_321_247_147_505, 1e-13));
    }

    #[test]
    fn margin_forms_agree() {
        for x in [1e-9, 0.3, 2.0, 40.0] {
            let a = Margin::from_neg_ln(x);
            assert!(close(a.u, (-x).exp(), 1e-15));
            let b = Margin::from_neg_ln_complement(x);
            assert!(close(b.u + b.one_minus_u, 1.0, 1e-15));
            assert!(close((-b.neg_ln_u).exp(), b.u, 1e-14));
        }
    }

    #[test]
    fn tail_evaluation_without_underflow() {
        // survival margins deep in the tail: C itself underflows but the
        // elasticities remain finite
        let c = CopulaModel::gumbel_hougaard(2.0, 3).unwrap();
        let m: Vec<Margin> = [900.0, 1000.0, 1100.0].iter().map(|&x| Margin::from_neg_ln(x)).collect();
        assert!(c.ln_cdf_m(&m).is_finite());
        let s: f64 = (0..3).map(|i| c.alpha_m_unchecked(&m, i)).sum();
        assert!(s.is_finite() && s > 1.0);
        // distribution margins close to 1: 1 - C computed without cancellation
        let ind = CopulaModel::independence(2).unwrap();
        let m: Vec<Margin> = [50.0, 60.0].iter().map(|&x| Margin::from_neg_ln_complement(x)).collect();
        let expect = (-50f64).exp() + (-60f64).exp();
        assert!(close(ind.one_minus_cdf_m(&m), expect, 1e-12));
    }
}
