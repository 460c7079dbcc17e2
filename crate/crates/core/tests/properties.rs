//! Randomized invariants across the model stack.

use depmaint::copulas::{CopulaFamily, CopulaModel, MarginKind};
use depmaint::cost_models::{CostModel, CostParams};
use depmaint::lifetimes::LifetimeModel;
use depmaint::numerics::integrate_with_breaks;
use depmaint::optimizers::{check_conditions_for, optimize_age_for, Optimum};
use depmaint::scenario::{PolicySettings, Scenario};
use depmaint::systems::{SystemSpec, Topology};
use proptest::prelude::*;

fn weibull() -> impl Strategy<Value = LifetimeModel> {
    (0.1f64..3.0, 0.5f64..4.0).prop_map(|(l, a)| LifetimeModel::weibull(l, a).unwrap())
}

fn ifr_weibull() -> impl Strategy<Value = LifetimeModel> {
    (0.2f64..2.0, 1.2f64..3.5).prop_map(|(l, a)| LifetimeModel::weibull(l, a).unwrap())
}

/// Parameters inside each family's admissible range. Negative Clayton is
/// kept above `-1/(n-1)`, where the n-dimensional form is a proper copula.
fn copula(dim: usize) -> impl Strategy<Value = CopulaModel> {
    let clayton_lo = if dim <= 2 { -0.95 } else { -0.95 / (dim as f64 - 1.0) };
    prop_oneof![
        Just(CopulaModel::independence(dim).unwrap()),
        (1.0f64..10.0).prop_map(move |t| CopulaModel::gumbel_hougaard(t, dim).unwrap()),
        (0.05f64..8.0).prop_map(move |t| CopulaModel::clayton(t, dim).unwrap()),
        (clayton_lo..-0.05).prop_map(move |t| CopulaModel::clayton(t, dim).unwrap()),
        (-1.0f64..1.0).prop_map(move |t| CopulaModel::fgm(t, dim).unwrap()),
        (0.0f64..1.0).prop_map(move |t| CopulaModel::gumbel_barnett(t, dim).unwrap()),
    ]
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..0.99, dim)
}

fn system(topology: Topology) -> impl Strategy<Value = SystemSpec> {
    (2usize..=4)
        .prop_flat_map(move |n| (proptest::collection::vec(weibull(), n), copula(n)))
        .prop_map(move |(comps, c)| SystemSpec::new(topology, comps, c).unwrap())
}

fn any_system() -> impl Strategy<Value = SystemSpec> {
    prop_oneof![system(Topology::Series), system(Topology::Parallel)]
}

/// Homogeneous IFR systems whose elasticity monotonicity holds analytically.
fn well_posed_system() -> impl Strategy<Value = SystemSpec> {
    (2usize..=4, ifr_weibull(), 1.0f64..6.0, any::<bool>()).prop_map(|(n, comp, theta, series)| {
        let top = if series { Topology::Series } else { Topology::Parallel };
        SystemSpec::homogeneous(top, comp, n, CopulaModel::gumbel_hougaard(theta, n).unwrap()).unwrap()
    })
}

fn costs(n: usize) -> impl Strategy<Value = CostParams> {
    (20.0f64..200.0, 0.01f64..0.5, 0.0f64..10.0, 0.0f64..5.0).prop_map(move |(cf, frac, d1, d2)| {
        CostParams::uniform(cf, cf * frac / n as f64, n, d1, d2).unwrap()
    })
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifetime_survival_nonincreasing(m in weibull(), t1 in 0.0f64..5.0, dt in 0.0f64..5.0) {
        prop_assert!(m.survival(t1).unwrap() >= m.survival(t1 + dt).unwrap());
    }

    #[test]
    fn lifetime_hazard_times_survival_is_density(m in weibull()) {
        for t in log_grid(1e-3 / m.rate(), 3.0 / m.rate(), 30) {
            let lhs = m.hazard(t).unwrap() * m.survival(t).unwrap();
            prop_assert!(rel(lhs, m.pdf(t).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn lifetime_hazard_is_log_survival_slope(m in weibull()) {
        for t in log_grid(1e-2 / m.rate(), 2.0 / m.rate(), 20) {
            let h = 1e-5 * t;
            let fd = (m.cumulative_hazard(t + h).unwrap() - m.cumulative_hazard(t - h).unwrap()) / (2.0 * h);
            prop_assert!(rel(fd, m.hazard(t).unwrap()) < 1e-6);
        }
    }

    #[test]
    fn copula_within_frechet_bounds(
        (c, u) in (2usize..=4).prop_flat_map(|n| (copula(n), point(n)))
    ) {
        let n = u.len() as f64;
        let lower = (u.iter().sum::<f64>() - n + 1.0).max(0.0);
        let upper = u.iter().cloned().fold(1.0, f64::min);
        let v = c.cdf(&u).unwrap();
        prop_assert!(v >= lower - 1e-12, "{c:?} {u:?}: {v} < {lower}");
        prop_assert!(v <= upper + 1e-12, "{c:?} {u:?}: {v} > {upper}");
    }

    #[test]
    fn copula_partials_match_central_differences(
        (c, u) in (2usize..=4).prop_flat_map(|n| (copula(n), proptest::collection::vec(0.05f64..0.95, n)))
    ) {
        // Partials are a region error where negative Clayton vanishes.
        prop_assume!(c.cdf(&u.iter().map(|x| x - 1e-3).collect::<Vec<_>>()).unwrap() > 0.0);
        for i in 0..u.len() {
            let h = 1e-6;
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (c.cdf(&up).unwrap() - c.cdf(&dn).unwrap()) / (2.0 * h);
            let an = c.partial_derivative(&u, i).unwrap();
            prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-2), "{c:?} {u:?} i={i}: {fd} vs {an}");
        }
    }

    #[test]
    fn gumbel_hougaard_positively_ordered(t1 in 1.0f64..8.0, dt in 0.0f64..8.0, u in point(3)) {
        let lo = CopulaModel::gumbel_hougaard(t1, 3).unwrap().cdf(&u).unwrap();
        let hi = CopulaModel::gumbel_hougaard(t1 + dt, 3).unwrap().cdf(&u).unwrap();
        prop_assert!(lo <= hi + 1e-14);
    }

    #[test]
    fn independence_alpha_is_one(u in point(3)) {
        let c = CopulaModel::independence(3).unwrap();
        for i in 0..3 {
            prop_assert!((c.alpha_i(&u, i).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn system_survival_bounded_by_components(s in any_system(), t in 0.01f64..5.0) {
        let sv = s.survival(t).unwrap();
        let comp: Vec<f64> = s.components().iter().map(|c| c.survival(t).unwrap()).collect();
        match s.topology() {
            Topology::Series => prop_assert!(sv <= comp.iter().cloned().fold(1.0, f64::min) + 1e-12),
            Topology::Parallel => prop_assert!(sv >= comp.iter().cloned().fold(0.0, f64::max) - 1e-12),
        }
    }

    #[test]
    fn system_hazard_integrates_to_survival(s in any_system()) {
        // Start away from 0, where the hazard of a DFR component is singular.
        let mu = s.mttf().unwrap();
        let t0 = 0.05 * mu;
        let s0 = s.survival(t0).unwrap();
        for t in [0.25 * mu, mu, 2.0 * mu] {
            let sv = s.survival(t).unwrap();
            if sv > 1e-8 {
                let q = integrate_with_breaks(&|x: f64| s.hazard(x).unwrap(), t0, t, &s.kink_times(), 1e-10, 60, 8).unwrap();
                let back = s0 * (-q.value).exp();
                prop_assert!(rel(back, sv) < 1e-6, "{s:?} t={t}: {back} vs {sv}");
            }
        }
    }

    #[test]
    fn ifr_preserved_when_conditions_hold(s in well_posed_system()) {
        let c = CostParams::uniform(100.0, 5.0, s.n(), 0.0, 0.0).unwrap();
        let model = CostModel::new(&s, &c).unwrap();
        let report = check_conditions_for(&model, false);
        prop_assume!(report.all_ifr() && report.monotonicity.passed());
        let mu = s.mttf().unwrap();
        let grid = log_grid(mu / 50.0, 3.0 * mu, 60);
        let hz: Vec<f64> = grid.iter().map(|&t| s.hazard(t).unwrap()).collect();
        for w in hz.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-9));
        }
    }

    #[test]
    fn deviation_model_degenerates_without_deviation_costs(s in any_system(), t in 0.05f64..3.0) {
        let c = CostParams::uniform(100.0, 5.0, s.n(), 0.0, 0.0).unwrap();
        let model = CostModel::new(&s, &c).unwrap();
        let plain = model.age_cost_rate(t, false).unwrap();
        let dev = model.age_cost_rate(t, true).unwrap();
        prop_assert!(rel(dev, plain) < 1e-12);
    }

    #[test]
    fn periodic_cost_equals_age_cost_on_lattice(s in any_system(), k in 1u64..40, tau in 0.01f64..0.3) {
        let c = CostParams::uniform(100.0, 5.0, s.n(), 2.0, 1.0).unwrap();
        let model = CostModel::new(&s, &c).unwrap();
        for dev in [false, true] {
            let p = model.periodic_cost_rate(k, tau, dev).unwrap();
            let a = model.age_cost_rate(k as f64 * tau, dev).unwrap();
            prop_assert_eq!(p.to_bits(), a.to_bits());
        }
    }

    #[test]
    fn cost_rate_positive(
        (s, c) in any_system().prop_flat_map(|s| { let n = s.n(); (Just(s), costs(n)) }),
        t in 0.01f64..10.0,
        dev in any::<bool>(),
    ) {
        let model = CostModel::new(&s, &c).unwrap();
        prop_assert!(model.age_cost_rate(t, dev).unwrap() > 0.0);
    }

    #[test]
    fn residual_routes_agree(
        (s, c) in any_system().prop_flat_map(|s| { let n = s.n(); (Just(s), costs(n)) }),
        frac in 0.05f64..3.0,
        dev in any::<bool>(),
    ) {
        let model = CostModel::new(&s, &c).unwrap();
        let t = frac * model.mttf();
        // Negative Clayton can exhaust survival in finite time.
        prop_assume!(s.survival(t).unwrap() > 1e-12);
        let a = model.residual_survival_route(t, dev).unwrap();
        let b = model.residual_failure_route(t, dev).unwrap();
        let scale = c.c_f() * (1.0 + t * model.system().hazard(t).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
    }

    #[test]
    fn residual_strictly_increasing_when_conditions_hold(
        (s, c) in well_posed_system().prop_flat_map(|s| { let n = s.n(); (Just(s), costs(n)) }),
        dev in any::<bool>(),
    ) {
        let model = CostModel::new(&s, &c).unwrap();
        prop_assume!(check_conditions_for(&model, dev).passed());
        let t_star = match optimize_age_for(&model, dev) {
            Ok(r) => match r.optimum { Optimum::Age { t } => t, _ => unreachable!() },
            Err(_) => return Ok(()),
        };
        // Beyond the survival floor the hazard, and hence the residual, is undefined.
        let grid: Vec<f64> = log_grid(t_star / 10.0, 10.0 * t_star, 200)
            .into_iter()
            .filter(|&t| s.survival(t).unwrap() > 1e-12)
            .collect();
        let r: Vec<f64> = grid.iter().map(|&t| model.first_order_residual(t, dev).unwrap()).collect();
        for w in r.windows(2) {
            prop_assert!(w[1] > w[0], "{w:?}");
        }
    }

    #[test]
    fn scenario_round_trip(
        (s, c) in any_system().prop_flat_map(|s| { let n = s.n(); (Just(s), costs(n)) }),
        dev in any::<bool>(),
        tau in proptest::option::of(0.01f64..1.0),
    ) {
        let sc = Scenario {
            system: s,
            costs: c,
            policy: match tau { Some(tau) => PolicySettings::Periodic { tau }, None => PolicySettings::Age { t: None } },
            deviation: dev,
            mc: None,
        };
        let back = Scenario::from_toml(&sc.to_toml()).unwrap();
        prop_assert_eq!(back, sc);
    }
}

#[test]
fn elasticity_verdicts_by_family() {
    let h = MarginKind::Homogeneous;
    assert!(!CopulaModel::fgm(0.5, 2).unwrap().check_alpha_decreasing(h).passed());
    assert!(CopulaModel::clayton(-0.5, 2).unwrap().check_alpha_decreasing(h).passed());
    assert!(CopulaModel::new(CopulaFamily::GumbelBarnett, 0.5, 2)
        .unwrap()
        .check_alpha_decreasing(h)
        .passed());
    assert!(CopulaModel::gumbel_hougaard(2.0, 3).unwrap().check_eta_increasing(h).passed());
}
