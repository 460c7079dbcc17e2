//! Reference tables: optimal replacement ages and period counts over
//! component-count and dependence-parameter sweeps.
//!
//! Every table uses Weibull components, `c_f = 100`, `c_p = 5` per component
//! and the deviation-cost scenarios `(0, 0)`, `(2, 1)`, `(10, 5)`.
//!
//! | id | topology | sweep | λ, α     | policy       |
//! |----|----------|-------|----------|--------------|
//! | 1  | series   | n     | 0.4, 2.5 | age          |
//! | 2  | parallel | n     | 0.4, 2.5 | age          |
//! | 3  | series   | θ     | 0.4, 2.5 | age          |
//! | 4  | series   | θ     | 0.6, 1.5 | age          |
//! | 5  | parallel | θ     | 0.4, 2.5 | age          |
//! | 6  | parallel | θ     | 0.6, 1.5 | age          |
//! | 7  | series   | n     | 0.4, 2.5 | periodic 0.1 |
//! | 8  | parallel | n     | 0.4, 2.5 | periodic 0.1 |
//! | 9  | series   | θ     | 0.4, 2.5 | periodic 0.1 |
//! | 10 | parallel | θ     | 0.4, 2.5 | periodic 0.1 |
//!
//! n-sweeps fix θ = 2; θ-sweeps fix n = 4. The published values are kept in
//! `data/published_tables.csv`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::CopulaModel;
use crate::cost_models::{CostModel, CostParams};
use crate::error::{Error, Result};
use crate::lifetimes::LifetimeModel;
use crate::optimizers::{optimize_age_for, optimize_periodic_for, PolicyResult};
use crate::systems::{SystemSpec, Topology};

pub const COST_SCENARIOS: [(f64, f64); 3] = [(0.0, 0.0), (2.0, 1.0), (10.0, 5.0)];
pub const C_F: f64 = 100.0;
pub const C_P: f64 = 5.0;
pub const PERIOD: f64 = 0.1;
pub const N_SWEEP: [usize; 7] = [2, 3, 4, 5, 6, 7, 8];
pub const THETA_SWEEP: [f64; 7] = [1.0, 2.0, 4.0, 5.0, 6.5, 8.5, 15.0];

const PUBLISHED_CSV: &str = include_str!("../data/published_tables.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    N,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TablePolicy {
    Age,
    Periodic { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub id: u8,
    pub topology: Topology,
    pub sweep: SweepVariable,
    pub lambda: f64,
    pub alpha: f64,
    pub policy: TablePolicy,
}

impl TableSpec {
    pub fn get(id: u8) -> Result<Self> {
        use SweepVariable::{Theta, N};
        use Topology::{Parallel, Series};
        let periodic = TablePolicy::Periodic { tau: PERIOD };
        let (topology, sweep, lambda, alpha, policy) = match id {
            1 => (Series, N, 0.4, 2.5, TablePolicy::Age),
            2 => (Parallel, N, 0.4, 2.5, TablePolicy::Age),
            3 => (Series, Theta, 0.4, 2.5, TablePolicy::Age),
            4 => (Series, Theta, 0.6, 1.5, TablePolicy::Age),
            5 => (Parallel, Theta, 0.4, 2.5, TablePolicy::Age),
            6 => (Parallel, Theta, 0.6, 1.5, TablePolicy::Age),
            7 => (Series, N, 0.4, 2.5, periodic),
            8 => (Parallel, N, 0.4, 2.5, periodic),
            9 => (Series, Theta, 0.4, 2.5, periodic),
            10 => (Parallel, Theta, 0.4, 2.5, periodic),
            _ => return Err(Error::Parameter(format!("table id must be 1..=10, got {id}"))),
        };
        Ok(Self {
            id,
            topology,
            sweep,
            lambda,
            alpha,
            policy,
        })
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        match self.sweep {
            SweepVariable::N => N_SWEEP.iter().map(|&n| n as f64).collect(),
            SweepVariable::Theta => THETA_SWEEP.to_vec(),
        }
    }

    /// `(n, θ)` for one sweep value.
    pub fn size_and_theta(&self, value: f64) -> (usize, f64) {
        match self.sweep {
            SweepVariable::N => (value as usize, 2.0),
            SweepVariable::Theta => (4, value),
        }
    }

    pub fn system(&self, value: f64) -> Result<SystemSpec> {
        let (n, theta) = self.size_and_theta(value);
        SystemSpec::homogeneous(
            self.topology,
            LifetimeModel::weibull(self.lambda, self.alpha)?,
            n,
            CopulaModel::gumbel_hougaard(theta, n)?,
        )
    }

    pub fn costs(&self, value: f64, scenario: usize) -> Result<CostParams> {
        let (n, _) = self.size_and_theta(value);
        let (d1, d2) = COST_SCENARIOS[scenario];
        CostParams::uniform(C_F, C_P, n, d1, d2)
    }

    /// Scenario 0 is the plain model, the others carry deviation costs.
    pub fn deviation(scenario: usize) -> bool {
        scenario > 0
    }

    pub fn optimize(&self, value: f64, scenario: usize) -> Result<PolicyResult> {
        let model = CostModel::new(&self.system(value)?, &self.costs(value, scenario)?)?;
        let dev = Self::deviation(scenario);
        match self.policy {
            TablePolicy::Age => optimize_age_for(&model, dev),
            TablePolicy::Periodic { tau } => optimize_periodic_for(&model, tau, dev),
        }
    }

    fn value_prefix(&self) -> &'static str {
        match self.policy {
            TablePolicy::Age => "T_star",
            TablePolicy::Periodic { .. } => "K_star",
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols = vec![match self.sweep {
            SweepVariable::N => "n".to_string(),
            SweepVariable::Theta => "theta".to_string(),
        }];
        for tag in scenario_tags() {
            cols.push(format!("{}_{tag}", self.value_prefix()));
            cols.push(format!("cost_{tag}"));
        }
        cols
    }
}

fn scenario_tags() -> [&'static str; 3] {
    ["plain", "dev_2_1", "dev_10_5"]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    /// `T*`, or `K*` as a float for periodic tables.
    pub optimum: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub sweep: f64,
    pub cells: [TableCell; 3],
}

/// Recompute every cell, in parallel, in table order.
pub fn compute_table(spec: &TableSpec) -> Result<Vec<TableRow>> {
    let values = spec.sweep_values();
    let jobs: Vec<(usize, usize)> = (0..values.len()).flat_map(|r| (0..3).map(move |s| (r, s))).collect();
    let results: Vec<Result<TableCell>> = jobs
        .par_iter()
        .map(|&(r, s)| {
            let res = spec.optimize(values[r], s)?;
            let optimum = match res.optimum {
                crate::optimizers::Optimum::Age { t } => t,
                crate::optimizers::Optimum::Periodic { k, .. } => k as f64,
            };
            Ok(TableCell {
                optimum,
                cost: res.cost_rate,
            })
        })
        .collect();
    let mut cells = results.into_iter();
    values
        .iter()
        .map(|&v| {
            let mut row = [TableCell { optimum: 0.0, cost: 0.0 }; 3];
            for slot in row.iter_mut() {
                *slot = cells.next().expect("one result per job")?;
            }
            Ok(TableRow { sweep: v, cells: row })
        })
        .collect()
}

/// Published cell; `None` where the printed value is unreadable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedCell {
    pub optimum: Option<f64>,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub sweep: f64,
    pub cells: [PublishedCell; 3],
}

#[derive(Debug, Deserialize)]
struct PublishedRecord {
    table: u8,
    sweep: f64,
    opt_plain: Option<f64>,
    cost_plain: Option<f64>,
    opt_dev_2_1: Option<f64>,
    cost_dev_2_1: Option<f64>,
    opt_dev_10_5: Option<f64>,
    cost_dev_10_5: Option<f64>,
}

pub fn published_rows(id: u8) -> Result<Vec<PublishedRow>> {
    TableSpec::get(id)?;
    let mut reader = csv::Reader::from_reader(PUBLISHED_CSV.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.deserialize::<PublishedRecord>() {
        let r = rec.map_err(|e| Error::Parameter(format!("published table data: {e}")))?;
        if r.table != id {
            continue;
        }
        let cell = |optimum, cost| PublishedCell { optimum, cost };
        rows.push(PublishedRow {
            sweep: r.sweep,
            cells: [
                cell(r.opt_plain, r.cost_plain),
                cell(r.opt_dev_2_1, r.cost_dev_2_1),
                cell(r.opt_dev_10_5, r.cost_dev_10_5),
            ],
        });
    }
    Ok(rows)
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_sweep(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

/// CSV with the sweep variable then `(optimum, cost)` per scenario. With
/// `published`, each value column is followed by `_published` and `_absdiff`.
pub fn write_csv<W: Write>(
    spec: &TableSpec,
    rows: &[TableRow],
    published: Option<&[PublishedRow]>,
    out: W,
) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let base = spec.column_names();
    let mut header = vec![base[0].clone()];
    for name in &base[1..] {
        header.push(name.clone());
        if published.is_some() {
            header.push(format!("{name}_published"));
            header.push(format!("{name}_absdiff"));
        }
    }
    w.write_record(&header)?;
    let periodic = matches!(spec.policy, TablePolicy::Periodic { .. });
    for row in rows {
        let pub_row = published.and_then(|p| p.iter().find(|r| r.sweep == row.sweep));
        let mut rec = vec![fmt_sweep(row.sweep)];
        for (i, cell) in row.cells.iter().enumerate() {
            let pc = pub_row.map(|r| r.cells[i]);
            let pairs = [
                (cell.optimum, pc.and_then(|c| c.optimum)),
                (cell.cost, pc.and_then(|c| c.cost)),
            ];
            for (j, (value, reference)) in pairs.into_iter().enumerate() {
                rec.push(if periodic && j == 0 {
                    format!("{value:.0}")
                } else {
                    fmt(value)
                });
                if published.is_some() {
                    match reference {
                        Some(r) => {
                            rec.push(format!("{r}"));
                            rec.push(fmt((value - r).abs()));
                        }
                        None => {
                            rec.push(String::new());
                            rec.push(String::new());
                        }
                    }
                }
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
