use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use depmaint::copulas::CopulaModel;
use depmaint::cost_models::{CostModel, PolicyQuery};
use depmaint::error::Error;
use depmaint::mc_oracle::{estimate_cost_rate, SimConfig, SimEstimate};
use depmaint::optimizers::{
    check_conditions_for, optimize_age_for, optimize_periodic_for, ConditionReport, Optimum, PolicyResult,
    ThresholdVerdict,
};
use depmaint::scenario::{McSettings, PolicySettings, Scenario, ScenarioError};
use depmaint::systems::{SystemSpec, Topology};
use depmaint::tables::{compute_table, published_rows, write_csv, TableSpec};

const EXIT_ERROR: u8 = 1;
const EXIT_STRICT: u8 = 2;
const EXIT_CAPABILITY: u8 = 3;

#[derive(Parser)]
#[command(name = "depmaint", version, about = "Preventive replacement of systems with dependent components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the policy given in the scenario file.
    Optimize(OptimizeArgs),
    /// Optimize the periodic (inspection lattice) policy.
    Periodic {
        #[command(flatten)]
        args: OptimizeArgs,
        /// Inspection period; overrides the scenario value.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Recompute one of the reference tables as CSV.
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=10))]
        id: u8,
        /// Output file (stdout when absent).
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Add published values and absolute differences.
        #[arg(long)]
        compare: bool,
    },
    /// Emit cost-rate curve data as CSV.
    Curve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "T")]
        var: CurveVar,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Dependence parameters to overlay, e.g. `1,2,5`; defaults to the scenario value.
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<f64>,
        /// Inspection period for `--var K`; defaults to the scenario value.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Report the sufficient conditions for a unique optimum.
    Check {
        scenario: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compare the analytic cost rate with a renewal-reward simulation.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        cycles: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct OptimizeArgs {
    scenario: PathBuf,
    /// Print a JSON record instead of text.
    #[arg(long)]
    json: bool,
    /// Exit with status 2 when the sufficient conditions fail.
    #[arg(long)]
    strict: bool,
    /// Print the normalized scenario and exit.
    #[arg(long)]
    dump_config: bool,
    /// Dependence parameter; overrides the scenario value.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveVar {
    #[value(name = "T")]
    T,
    #[value(name = "K")]
    K,
}

#[derive(Debug)]
enum CliError {
    Scenario(ScenarioError),
    Model(Error),
    Io(io::Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Scenario(e) => write!(f, "{e}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let capability = matches!(
            self,
            CliError::Model(Error::Capability(_))
                | CliError::Scenario(ScenarioError::Field {
                    source: Error::Capability(_),
                    ..
                })
        );
        if capability {
            EXIT_CAPABILITY
        } else {
            EXIT_ERROR
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Scenario(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T = u8> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Optimize(args) => cmd_optimize(&args, None),
        Command::Periodic { args, tau } => cmd_periodic(&args, tau),
        Command::Table { id, output, compare } => cmd_table(id, output.as_deref(), compare),
        Command::Curve {
            scenario,
            var,
            from,
            to,
            steps,
            thetas,
            tau,
            output,
        } => cmd_curve(&scenario, var, from, to, steps, &thetas, tau, output.as_deref()),
        Command::Check { scenario, json } => cmd_check(&scenario, json),
        Command::Simulate {
            scenario,
            cycles,
            seed,
            json,
        } => cmd_simulate(&scenario, cycles, seed, json),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn with_theta(system: &SystemSpec, theta: f64) -> CliResult<SystemSpec> {
    let c = system.copula();
    let copula = CopulaModel::new(c.family(), theta, c.dim()).map_err(|source| ScenarioError::Field {
        field: "system.copula.theta".into(),
        source,
    })?;
    Ok(SystemSpec::new(system.topology(), system.components().to_vec(), copula)?)
}

fn load(path: &Path, theta: Option<f64>) -> CliResult<Scenario> {
    let mut sc = Scenario::from_path(path)?;
    if let Some(th) = theta {
        sc.system = with_theta(&sc.system, th)?;
    }
    Ok(sc)
}

fn describe_system(s: &SystemSpec) -> String {
    let mut parts: Vec<String> = Vec::new();
    let comps = s.components();
    let mut i = 0;
    while i < comps.len() {
        let mut j = i + 1;
        while j < comps.len() && comps[j] == comps[i] {
            j += 1;
        }
        let c = comps[i];
        let base = if c.has_constant_hazard() {
            format!("exponential(λ={})", c.rate())
        } else {
            format!("weibull(λ={}, α={})", c.rate(), c.shape())
        };
        parts.push(if j - i > 1 { format!("{} x{}", base, j - i) } else { base });
        i = j;
    }
    let c = s.copula();
    format!(
        "{} system, n={}, components: {}, copula: {}(θ={})",
        s.topology(),
        s.n(),
        parts.join(", "),
        c.family(),
        c.theta()
    )
}

fn pass_fail(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn condition_lines(topology: Topology, r: &ConditionReport) -> Vec<String> {
    let mut lines = Vec::new();
    let ifr: Vec<String> = r
        .components_ifr
        .iter()
        .enumerate()
        .filter(|(_, &b)| !b)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    lines.push(if ifr.is_empty() {
        "IFR components: PASS".to_string()
    } else {
        format!("IFR components: FAIL (not IFR: {})", ifr.join(", "))
    });
    let symbol = match topology {
        Topology::Series => "α-monotonicity",
        Topology::Parallel => "η-monotonicity",
    };
    let m = &r.monotonicity;
    let mut detail = m.note.clone();
    if m.grid_resolution > 0 {
        detail.push_str(&format!(", worst violation {:.3e}", m.worst_violation));
    }
    lines.push(format!("{symbol}: {} ({detail})", pass_fail(m.passed())));
    let threshold = match r.threshold_satisfied {
        ThresholdVerdict::Yes => "Yes",
        ThresholdVerdict::No => "No",
        ThresholdVerdict::TriviallyInfiniteHazard => "Yes (limiting hazard is infinite)",
        ThresholdVerdict::NotRequired => "not required (deviation costs)",
        ThresholdVerdict::Undetermined => "undetermined (limiting hazard unresolved)",
    };
    let mut t = format!("threshold h(∞)·MTTF ≥ c_f/(c_f−Σc_p): {threshold}");
    if let (Some(lhs), Some(rhs)) = (r.threshold_lhs, r.threshold_rhs) {
        t.push_str(&format!(" [lhs={}, rhs={}]", fmt_num(lhs), fmt_num(rhs)));
    }
    lines.push(t);
    lines.push(format!("overall: {}", pass_fail(r.passed())));
    lines
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

#[derive(Serialize)]
struct OptimizeRecord<'a> {
    system: &'a SystemSpec,
    result: &'a PolicyResult,
}

fn run_optimization(sc: &Scenario, tau_override: Option<f64>) -> CliResult<PolicyResult> {
    let model = CostModel::new(&sc.system, &sc.costs)?;
    let result = match (tau_override, sc.policy) {
        (Some(tau), _) | (None, PolicySettings::Periodic { tau }) => optimize_periodic_for(&model, tau, sc.deviation)?,
        (None, PolicySettings::Age { .. }) => optimize_age_for(&model, sc.deviation)?,
    };
    Ok(result)
}

fn cmd_optimize(args: &OptimizeArgs, tau_override: Option<f64>) -> CliResult {
    let mut sc = load(&args.scenario, args.theta)?;
    if let Some(tau) = tau_override {
        sc.policy = PolicySettings::Periodic { tau };
    }
    if args.dump_config {
        print!("{}", sc.to_toml());
        return Ok(0);
    }
    let result = run_optimization(&sc, None)?;
    let out = io::stdout();
    let mut out = out.lock();
    if args.json {
        let rec = OptimizeRecord {
            system: &sc.system,
            result: &result,
        };
        serde_json::to_writer_pretty(&mut out, &rec).map_err(io::Error::other)?;
        writeln!(out)?;
    } else {
        writeln!(out, "{}", describe_system(&sc.system))?;
        let mode = if result.deviation { "with deviation costs" } else { "plain" };
        match result.optimum {
            Optimum::Age { t } => {
                writeln!(out, "policy: age replacement, {mode}")?;
                writeln!(out, "T* = {t:.6}")?;
            }
            Optimum::Periodic { k, tau } => {
                writeln!(out, "policy: periodic replacement, τ={tau}, {mode}")?;
                writeln!(out, "K* = {k}")?;
                writeln!(out, "K*·τ = {:.6}", k as f64 * tau)?;
            }
        }
        writeln!(out, "cost rate = {:.6}", result.cost_rate)?;
        writeln!(
            out,
            "uniqueness guaranteed: {}",
            if result.uniqueness_guaranteed { "yes" } else { "no" }
        )?;
        for line in condition_lines(sc.system.topology(), &result.condition_report) {
            writeln!(out, "  {line}")?;
        }
        let tr = &result.method_trace;
        writeln!(
            out,
            "method: {:?}, {} iterations, residual {:.3e}",
            tr.method, tr.iterations, tr.residual
        )?;
        for note in &tr.notes {
            writeln!(out, "note: {note}")?;
        }
    }
    if args.strict && !result.condition_report.passed() {
        return Ok(EXIT_STRICT);
    }
    Ok(0)
}

fn cmd_periodic(args: &OptimizeArgs, tau: Option<f64>) -> CliResult {
    if tau.is_none() {
        let sc = Scenario::from_path(&args.scenario)?;
        if !matches!(sc.policy, PolicySettings::Periodic { .. }) {
            return Err(CliError::Usage(
                "periodic needs --tau or a scenario with policy.kind = \"periodic\"".into(),
            ));
        }
    }
    cmd_optimize(args, tau)
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_table(id: u8, output: Option<&Path>, compare: bool) -> CliResult {
    let spec = TableSpec::get(id)?;
    let rows = compute_table(&spec)?;
    let published = if compare { Some(published_rows(id)?) } else { None };
    let mut out = open_output(output)?;
    write_csv(&spec, &rows, published.as_deref(), &mut out)?;
    out.flush()?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_curve(
    path: &Path,
    var: CurveVar,
    from: f64,
    to: f64,
    steps: usize,
    thetas: &[f64],
    tau: Option<f64>,
    output: Option<&Path>,
) -> CliResult {
    let sc = load(path, None)?;
    if steps == 0 || !from.is_finite() || !to.is_finite() || to < from || from <= 0.0 {
        return Err(CliError::Usage(format!(
            "degenerate sweep: need 0 < from <= to and steps >= 1 (from={from}, to={to}, steps={steps})"
        )));
    }
    if steps > 1 && to == from {
        return Err(CliError::Usage("degenerate sweep: from == to with more than one step".into()));
    }
    let tau = match (var, tau, sc.policy) {
        (CurveVar::T, _, _) => None,
        (CurveVar::K, Some(t), _) | (CurveVar::K, None, PolicySettings::Periodic { tau: t }) => Some(t),
        (CurveVar::K, None, _) => {
            return Err(CliError::Usage("K sweep needs --tau or a periodic scenario".into()));
        }
    };
    let points: Vec<f64> = match var {
        CurveVar::T if steps == 1 => vec![from],
        CurveVar::T => (0..steps)
            .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
            .collect(),
        CurveVar::K => {
            if from.fract() != 0.0 || to.fract() != 0.0 {
                return Err(CliError::Usage("K sweep bounds must be integers".into()));
            }
            let (lo, hi) = (from as u64, to as u64);
            let stride = if steps <= 1 { hi - lo + 1 } else { ((hi - lo) / (steps as u64 - 1)).max(1) };
            (lo..=hi).step_by(stride as usize).map(|k| k as f64).collect()
        }
    };
    let theta_list: Vec<f64> = if thetas.is_empty() {
        vec![sc.system.copula().theta()]
    } else {
        thetas.to_vec()
    };
    let mut models = Vec::with_capacity(theta_list.len());
    for &th in &theta_list {
        models.push(CostModel::new(&with_theta(&sc.system, th)?, &sc.costs)?);
    }
    let jobs: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|m| points.iter().map(move |&p| (m, p)))
        .collect();
    let values: Vec<Result<f64, Error>> = jobs
        .par_iter()
        .map(|&(m, p)| match tau {
            None => models[m].age_cost_rate(p, sc.deviation),
            Some(tau) => models[m].periodic_cost_rate(p as u64, tau, sc.deviation),
        })
        .collect();
    let mut out = open_output(output)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(&mut out);
    match var {
        CurveVar::T => w.write_record(["theta", "T", "cost_rate"]).map_err(io::Error::other)?,
        CurveVar::K => w.write_record(["theta", "K", "T", "cost_rate"]).map_err(io::Error::other)?,
    }
    for ((m, p), v) in jobs.iter().zip(values) {
        let v = v?;
        let th = format!("{}", theta_list[*m]);
        let rec: Vec<String> = match tau {
            None => vec![th, format!("{p}"), format!("{v:.10}")],
            Some(tau) => vec![th, format!("{p}"), format!("{:.10}", p * tau), format!("{v:.10}")],
        };
        w.write_record(&rec).map_err(io::Error::other)?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(0)
}

fn cmd_check(path: &Path, json: bool) -> CliResult {
    let sc = load(path, None)?;
    let model = CostModel::new(&sc.system, &sc.costs)?;
    let report = check_conditions_for(&model, sc.deviation);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(io::Error::other)?);
    } else {
        println!("{}", describe_system(&sc.system));
        for line in condition_lines(sc.system.topology(), &report) {
            println!("{line}");
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct SimulateRecord {
    policy: PolicyQuery,
    analytic: f64,
    estimate: SimEstimate,
    z_score: f64,
}

fn cmd_simulate(path: &Path, cycles: Option<u64>, seed: Option<u64>, json: bool) -> CliResult {
    let sc = load(path, None)?;
    let mc = match (sc.mc, cycles) {
        (Some(mc), _) => mc,
        (None, Some(_)) => McSettings::default(),
        (None, None) => {
            return Err(CliError::Usage(
                "scenario has no [mc] section; add one or pass --cycles".into(),
            ));
        }
    };
    let mc = McSettings {
        cycles: cycles.unwrap_or(mc.cycles),
        seed: seed.unwrap_or(mc.seed),
    };
    depmaint::mc_oracle::check_sampling_supported(sc.system.copula())?;
    let model = CostModel::new(&sc.system, &sc.costs)?;
    let policy = match sc.policy {
        PolicySettings::Age { t: Some(t) } => PolicyQuery::age(t, sc.deviation)?,
        PolicySettings::Age { t: None } => match optimize_age_for(&model, sc.deviation)?.optimum {
            Optimum::Age { t } => PolicyQuery::age(t, sc.deviation)?,
            Optimum::Periodic { .. } => unreachable!("age optimizer returns an age optimum"),
        },
        PolicySettings::Periodic { tau } => match optimize_periodic_for(&model, tau, sc.deviation)?.optimum {
            Optimum::Periodic { k, tau } => PolicyQuery::periodic(k, tau, sc.deviation)?,
            Optimum::Age { .. } => unreachable!("periodic optimizer returns a periodic optimum"),
        },
    };
    let analytic = model.evaluate(&policy)?;
    let estimate = estimate_cost_rate(
        &sc.system,
        &sc.costs,
        &SimConfig {
            n_cycles: mc.cycles,
            seed: mc.seed,
            policy,
        },
    )?;
    let z_score = (estimate.cost_rate_mean - analytic) / estimate.std_error;
    if json {
        let rec = SimulateRecord {
            policy,
            analytic,
            estimate,
            z_score,
        };
        println!("{}", serde_json::to_string_pretty(&rec).map_err(io::Error::other)?);
    } else {
        println!("{}", describe_system(&sc.system));
        println!("replacement age = {:.6}", policy.horizon()?);
        println!("cycles = {}", estimate.cycles_run);
        println!("seed = {}", mc.seed);
        println!("analytic cost rate = {analytic:.6}");
        println!(
            "simulated cost rate = {:.6} ± {:.6} (1 s.e.)",
            estimate.cost_rate_mean, estimate.std_error
        );
        println!("z = {z_score:.3}");
    }
    Ok(0)
}
