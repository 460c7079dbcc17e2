//! Monte Carlo renewal-reward estimator of replacement cost rates.
//!
//! Each cycle draws a system lifetime `X`, runs until `min(X, T)` and pays
//! `Σc_p` (planned) or `c_f` (failure), plus `c_d1 (T - X)` when failure
//! comes early and `c_d2 (X - T)` when a working system is replaced. The
//! long-run cost rate is estimated by the ratio of mean cycle cost to mean
//! cycle length with a delta-method standard error.
//!
//! Copula draws are produced as `-ln U_i` so that both tails survive the
//! transform to component lifetimes:
//!
//! * Gumbel–Hougaard: Marshall–Olkin with a positive-stable frailty (Kanter)
//! * Clayton `θ > 0`: Marshall–Olkin with a gamma frailty
//! * FGM, Clayton `θ < 0`, Gumbel–Barnett: conditional inversion, `n = 2` only
//!
//! Streams are split by fixed-size chunk so the estimate does not depend on
//! the number of worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaFamily, CopulaModel};
use crate::cost_models::{CostParams, PolicyQuery};
use crate::error::{Error, Result};
use crate::systems::{SystemSpec, Topology};

/// Cycles per independent random stream.
pub const CHUNK_CYCLES: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_cycles: u64,
    pub seed: u64,
    pub policy: PolicyQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub cost_rate_mean: f64,
    pub std_error: f64,
    pub cycles_run: u64,
    pub mean_cycle_cost: f64,
    pub mean_cycle_length: f64,
}

/// Fails with a capability error when the copula cannot be sampled exactly.
pub fn check_sampling_supported(c: &CopulaModel) -> Result<()> {
    let n = c.dim();
    let th = c.theta();
    let unsupported = |what: &str| {
        Err(Error::Capability(format!(
            "sampling {what} is not implemented (dimension {n}, theta {th})"
        )))
    };
    match c.family() {
        CopulaFamily::Independence | CopulaFamily::GumbelHougaard => Ok(()),
        CopulaFamily::Clayton if th > 0.0 || n <= 2 => Ok(()),
        CopulaFamily::Clayton => unsupported("Clayton with negative theta beyond two components"),
        CopulaFamily::Fgm if th == 0.0 || n <= 2 => Ok(()),
        CopulaFamily::Fgm => unsupported("FGM beyond two components"),
        CopulaFamily::GumbelBarnett if th == 0.0 || n <= 2 => Ok(()),
        CopulaFamily::GumbelBarnett => unsupported("Gumbel-Barnett beyond two components"),
    }
}

/// Positive-stable variable with Laplace transform `exp(-s^a)`, `0 < a <= 1`.
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    let u = loop {
        let u: f64 = rng.random::<f64>() * PI;
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let left = (a * u).sin() / u.sin().powf(1.0 / a);
    let right = (((1.0 - a) * u).sin() / e).powf((1.0 - a) / a);
    left * right
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Open-interval uniform.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One draw from the copula as `-ln U_i`.
pub fn sample_neg_log<R: Rng + ?Sized>(c: &CopulaModel, rng: &mut R) -> Result<Vec<f64>> {
    check_sampling_supported(c)?;
    let n = c.dim();
    let th = c.theta();
    let independent = match c.family() {
        CopulaFamily::Independence => true,
        CopulaFamily::GumbelHougaard => th == 1.0,
        CopulaFamily::Fgm | CopulaFamily::GumbelBarnett => th == 0.0,
        CopulaFamily::Clayton => false,
    };
    if independent {
        return Ok((0..n).map(|_| exp1(rng)).collect());
    }
    match c.family() {
        CopulaFamily::GumbelHougaard => {
            let a = 1.0 / th;
            let v = positive_stable(a, rng);
            Ok((0..n).map(|_| (exp1(rng) / v).powf(a)).collect())
        }
        CopulaFamily::Clayton if th > 0.0 => {
            let gamma = Gamma::new(1.0 / th, 1.0).map_err(|e| Error::Parameter(e.to_string()))?;
            let v: f64 = gamma.sample(rng);
            Ok((0..n).map(|_| (exp1(rng) / v).ln_1p() / th).collect())
        }
        _ => {
            let u1 = open_uniform(rng);
            let w = open_uniform(rng);
            let u2 = conditional_second(c, u1, w);
            Ok(vec![-u1.ln(), -u2.ln()])
        }
    }
}

/// Solve `∂C/∂u_1 (u1, u2) = w` for `u2`.
fn conditional_second(c: &CopulaModel, u1: f64, w: f64) -> f64 {
    let th = c.theta();
    match c.family() {
        CopulaFamily::Fgm => {
            // u2 (1 + a (1 - u2)) = w with a = θ (1 - 2 u1)
            let a = th * (1.0 - 2.0 * u1);
            if a.abs() < 1e-12 {
                return w;
            }
            let b = 1.0 + a;
            let disc = (b * b - 4.0 * a * w).max(0.0);
            // numerically stable root of a u² - b u + w = 0 inside [0, 1]
            2.0 * w / (b + disc.sqrt())
        }
        CopulaFamily::Clayton => {
            if th == -1.0 {
                return 1.0 - u1;
            }
            let base = ((w.powf(-th / (1.0 + th)) - 1.0) * u1.powf(-th) + 1.0).max(0.0);
            base.powf(-1.0 / th).clamp(0.0, 1.0)
        }
        CopulaFamily::GumbelBarnett => {
            // u2 exp(-θ x1 x2)(1 + θ x2) is a cdf in u2
            let x1 = -u1.ln();
            let cond = |u2: f64| {
                let x2 = -u2.ln();
                u2 * (-th * x1 * x2).exp() * (1.0 + th * x2)
            };
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if cond(mid) < w {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
        _ => unreachable!("conditional sampling only for two-dimensional families"),
    }
}

/// One draw `(U_1, ..., U_n)` from the copula.
pub fn sample_copula<R: Rng + ?Sized>(c: &CopulaModel, rng: &mut R) -> Result<Vec<f64>> {
    Ok(sample_neg_log(c, rng)?.into_iter().map(|y| (-y).exp()).collect())
}

/// Lifetime of the system: first component failure (series) or last (parallel).
pub fn sample_system_lifetime<R: Rng + ?Sized>(s: &SystemSpec, rng: &mut R) -> Result<f64> {
    let y = sample_neg_log(s.copula(), rng)?;
    Ok(lifetime_from_neg_log(s, &y))
}

fn lifetime_from_neg_log(s: &SystemSpec, y: &[f64]) -> f64 {
    let times = s.components().iter().zip(y).map(|(c, &yi)| {
        let h = match s.topology() {
            // Ĉ couples survival probabilities: F̄_i(X_i) = U_i
            Topology::Series => yi,
            // C couples distribution functions: F_i(X_i) = U_i
            Topology::Parallel => -(-(-yi).exp_m1()).ln(),
        };
        c.time_at_cumulative_hazard(h)
    });
    match s.topology() {
        Topology::Series => times.fold(f64::INFINITY, f64::min),
        Topology::Parallel => times.fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: u64,
    cost: f64,
    len: f64,
    cost2: f64,
    len2: f64,
    cross: f64,
}

impl Sums {
    fn add(&mut self, c: f64, l: f64) {
        self.n += 1;
        self.cost += c;
        self.len += l;
        self.cost2 += c * c;
        self.len2 += l * l;
        self.cross += c * l;
    }

    fn merge(mut self, o: &Sums) -> Sums {
        self.n += o.n;
        self.cost += o.cost;
        self.len += o.len;
        self.cost2 += o.cost2;
        self.len2 += o.len2;
        self.cross += o.cross;
        self
    }

    fn estimate(&self) -> SimEstimate {
        let n = self.n as f64;
        let mc = self.cost / n;
        let ml = self.len / n;
        let r = mc / ml;
        // sample (co)variances with n - 1 denominators
        let dof = (n - 1.0).max(1.0);
        let vc = (self.cost2 - n * mc * mc) / dof;
        let vl = (self.len2 - n * ml * ml) / dof;
        let cv = (self.cross - n * mc * ml) / dof;
        let var = ((vc - 2.0 * r * cv + r * r * vl) / (n * ml * ml)).max(0.0);
        SimEstimate {
            cost_rate_mean: r,
            std_error: var.sqrt(),
            cycles_run: self.n,
            mean_cycle_cost: mc,
            mean_cycle_length: ml,
        }
    }
}

/// Run `n_cycles` renewal cycles with planned replacement at `horizon`,
/// charging `cycle_cost(x)` for a cycle whose system lifetime is `x`.
pub fn simulate_cycles<F>(s: &SystemSpec, horizon: f64, n_cycles: u64, seed: u64, cycle_cost: F) -> Result<SimEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_sampling_supported(s.copula())?;
    if n_cycles == 0 {
        return Err(Error::Parameter("n_cycles must be >= 1".into()));
    }
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::Parameter(format!("horizon must be > 0, got {horizon}")));
    }
    let chunks = n_cycles.div_ceil(CHUNK_CYCLES);
    let partial: Vec<Result<Sums>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = CHUNK_CYCLES.min(n_cycles - chunk * CHUNK_CYCLES);
            let mut sums = Sums::default();
            for _ in 0..count {
                let x = sample_system_lifetime(s, &mut rng)?;
                sums.add(cycle_cost(x), x.min(horizon));
            }
            Ok(sums)
        })
        .collect();
    let mut total = Sums::default();
    for p in partial {
        total = total.merge(&p?);
    }
    Ok(total.estimate())
}

pub fn estimate_cost_rate(s: &SystemSpec, c: &CostParams, cfg: &SimConfig) -> Result<SimEstimate> {
    if c.c_p().len() != s.n() {
        return Err(Error::Parameter(format!(
            "c_p has {} entries for {} components",
            c.c_p().len(),
            s.n()
        )));
    }
    let t = cfg.policy.horizon()?;
    let (c_f, c_pm, c_d1, c_d2) = (c.c_f(), c.preventive_total(), c.c_d1(), c.c_d2());
    let deviation = cfg.policy.deviation;
    simulate_cycles(s, t, cfg.n_cycles, cfg.seed, |x| {
        let mut cost = if x > t { c_pm } else { c_f };
        if deviation {
            cost += c_d1 * (t - x).max(0.0) + c_d2 * (x - t).max(0.0);
        }
        cost
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_models::CostModel;
    use crate::lifetimes::LifetimeModel;

    const SEED: u64 = 20_240_917;

    fn rng(stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(SEED);
        r.set_stream(stream);
        r
    }

    #[test]
    fn kanter_laplace_transform() {
        // E[exp(-V)] = exp(-1) for every index a
        let mut r = rng(1);
        for a in [0.5, 0.2] {
            let n = 100_000;
            let vals: Vec<f64> = (0..n).map(|_| (-positive_stable(a, &mut r)).exp()).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - (-1f64).exp()).abs() < 4.0 * se, "a={a}: {mean}");
        }
    }

    fn ks_uniform(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
            .fold(0.0, f64::max)
    }

    fn supported_copulas() -> Vec<CopulaModel> {
        vec![
            CopulaModel::gumbel_hougaard(2.0, 3).unwrap(),
            CopulaModel::gumbel_hougaard(6.5, 2).unwrap(),
            CopulaModel::clayton(0.5, 2).unwrap(),
            CopulaModel::clayton(4.0, 3).unwrap(),
            CopulaModel::clayton(-0.5, 2).unwrap(),
            CopulaModel::clayton(-1.0, 2).unwrap(),
            CopulaModel::fgm(0.8, 2).unwrap(),
            CopulaModel::fgm(-0.6, 2).unwrap(),
            CopulaModel::gumbel_barnett(0.5, 2).unwrap(),
            CopulaModel::independence(2).unwrap(),
        ]
    }

    #[test]
    fn marginals_are_uniform() {
        let n = 100_000;
        let critical = 1.628 / (n as f64).sqrt();
        for (k, c) in supported_copulas().into_iter().enumerate() {
            let mut r = rng(100 + k as u64);
            let draws: Vec<Vec<f64>> = (0..n).map(|_| sample_copula(&c, &mut r).unwrap()).collect();
            for i in 0..c.dim() {
                let d = ks_uniform(draws.iter().map(|u| u[i]).collect());
                assert!(d < critical, "{c:?} margin {i}: D = {d}");
            }
        }
    }

    #[test]
    fn empirical_copula_matches_cdf() {
        let n = 100_000;
        for (k, c) in supported_copulas().into_iter().enumerate() {
            let mut r = rng(200 + k as u64);
            let points: [&[f64]; 2] = [&[0.5, 0.5, 0.5], &[0.3, 0.8, 0.6]];
            let draws: Vec<Vec<f64>> = (0..n).map(|_| sample_copula(&c, &mut r).unwrap()).collect();
            for p in points {
                let p = &p[..c.dim()];
                let hits = draws.iter().filter(|u| u.iter().zip(p).all(|(a, b)| a <= b)).count();
                let emp = hits as f64 / n as f64;
                let exact = c.cdf(p).unwrap();
                let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-4);
                assert!((emp - exact).abs() < 3.5 * se, "{c:?} at {p:?}: {emp} vs {exact}");
            }
        }
    }

    #[test]
    fn capability_errors() {
        for c in [
            CopulaModel::gumbel_barnett(0.5, 3).unwrap(),
            CopulaModel::clayton(-0.5, 3).unwrap(),
            CopulaModel::fgm(0.5, 4).unwrap(),
        ] {
            assert!(matches!(sample_copula(&c, &mut rng(0)), Err(Error::Capability(_))));
        }
        assert!(check_sampling_supported(&CopulaModel::fgm(0.0, 5).unwrap()).is_ok());
    }

    #[test]
    fn gh_exponential_minimum_is_exponential() {
        let s = SystemSpec::homogeneous(
            Topology::Series,
            LifetimeModel::exponential(1.0).unwrap(),
            4,
            CopulaModel::gumbel_hougaard(2.0, 4).unwrap(),
        )
        .unwrap();
        let mut r = rng(3);
        let n = 100_000;
        // survival of the minimum is exp(-2t): transformed draws are uniform
        let u: Vec<f64> = (0..n).map(|_| (-2.0 * sample_system_lifetime(&s, &mut r).unwrap()).exp()).collect();
        assert!(ks_uniform(u) < 1.628 / (n as f64).sqrt());
    }

    #[test]
    fn independence_survival_of_minimum() {
        let w = LifetimeModel::weibull(0.4, 2.5).unwrap();
        let s = SystemSpec::homogeneous(Topology::Series, w, 3, CopulaModel::independence(3).unwrap()).unwrap();
        let t = s.mttf().unwrap();
        let exact = w.survival(t).unwrap().powi(3);
        let mut r = rng(4);
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_system_lifetime(&s, &mut r).unwrap() > t).count();
        let emp = hits as f64 / n as f64;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((emp - exact).abs() < 3.0 * se);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = SystemSpec::homogeneous(
            Topology::Parallel,
            LifetimeModel::weibull(0.4, 2.5).unwrap(),
            3,
            CopulaModel::gumbel_hougaard(2.0, 3).unwrap(),
        )
        .unwrap();
        let c = CostParams::uniform(100.0, 5.0, 3, 2.0, 1.0).unwrap();
        let cfg = SimConfig {
            n_cycles: 150_000,
            seed: SEED,
            policy: PolicyQuery::age(1.4, true).unwrap(),
        };
        let a = estimate_cost_rate(&s, &c, &cfg).unwrap();
        let b = estimate_cost_rate(&s, &c, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cycles_run, 150_000);
        let other = estimate_cost_rate(&s, &c, &SimConfig { seed: SEED + 1, ..cfg }).unwrap();
        assert_ne!(a.cost_rate_mean, other.cost_rate_mean);
    }

    #[test]
    fn constant_cycle_cost() {
        // equal cost for planned and failure replacement: rate = c / E[min(X, T)]
        let s = SystemSpec::homogeneous(
            Topology::Series,
            LifetimeModel::weibull(0.4, 2.5).unwrap(),
            2,
            CopulaModel::clayton(2.0, 2).unwrap(),
        )
        .unwrap();
        let t = 1.1;
        let est = simulate_cycles(&s, t, 400_000, SEED, |_| 7.0).unwrap();
        let d = CostModel::new(&s, &CostParams::uniform(10.0, 1.0, 2, 0.0, 0.0).unwrap())
            .unwrap()
            .expected_cycle_length(t)
            .unwrap();
        assert!((est.mean_cycle_cost - 7.0).abs() < 1e-12);
        assert!((est.cost_rate_mean - 7.0 / d).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn deviation_single_exponential() {
        let s = SystemSpec::homogeneous(
            Topology::Series,
            LifetimeModel::exponential(1.0).unwrap(),
            1,
            CopulaModel::independence(1).unwrap(),
        )
        .unwrap();
        let c = CostParams::new(10.0, vec![1.0], 2.0, 1.0).unwrap();
        let cfg = SimConfig {
            n_cycles: 1_000_000,
            seed: SEED,
            policy: PolicyQuery::age(1.0, true).unwrap(),
        };
        let est = estimate_cost_rate(&s, &c, &cfg).unwrap();
        let exact = CostModel::new(&s, &c).unwrap().age_cost_rate(1.0, true).unwrap();
        assert!((est.cost_rate_mean - exact).abs() < 3.0 * est.std_error, "{est:?} vs {exact}");
    }
}
