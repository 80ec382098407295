//! Before/after metrics for a power vector, and the energy estimate.
//!
//! "Before" is the scenario at full power. Served populations come from
//! [`coverage_report`] in both server modes and are split by the
//! administration of the receiving point: domestic (an administration owning
//! optimizable transmitters) or foreign.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::coverage::{coverage_report, service_pairs, CoverageMode, CoverageReport, PowerFactors};
use crate::propagation::received_useful_power;
use crate::scenario::Scenario;
use crate::{NetId, TxId};

pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Error, PartialEq)]
pub enum EvaluateError {
    #[error("power factor given for unknown transmitter {0}")]
    UnknownTransmitter(TxId),
    #[error("transmitter {0} is not optimizable but has power factor {1}")]
    FixedTransmitterChanged(TxId, f64),
    #[error("power factor {1} of transmitter {0} is outside [0,1]")]
    OutOfRange(TxId, f64),
    #[error("efficiency {0} is outside (0,1]")]
    Efficiency(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PopulationSplit {
    pub domestic: u64,
    pub foreign: u64,
}

impl PopulationSplit {
    fn of(report: &CoverageReport, s: &Scenario) -> Self {
        Self {
            domestic: report.served_where(|a| s.is_domestic(a)),
            foreign: report.served_where(|a| !s.is_domestic(a)),
        }
    }

    pub fn total(&self) -> u64 {
        self.domestic + self.foreign
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServedPopulation {
    pub before: PopulationSplit,
    pub after: PopulationSplit,
}

impl ServedPopulation {
    pub fn delta_domestic(&self) -> i64 {
        self.after.domestic as i64 - self.before.domestic as i64
    }

    pub fn delta_foreign(&self) -> i64 {
        self.after.foreign as i64 - self.before.foreign as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkRow {
    pub network: NetId,
    pub name: String,
    pub admin: String,
    /// Served population at full power (fixed server).
    pub population_now: u64,
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Over optimizable transmitters, watts.
    pub power_before_w: f64,
    pub power_after_w: f64,
    pub delta_power_percent: f64,
    pub shutdown_count: usize,
    pub optimizable_count: usize,
    pub fixed_server: ServedPopulation,
    pub free_server: ServedPopulation,
    /// Fixed-server rows, by current population descending then id.
    pub networks: Vec<NetworkRow>,
}

fn check_factors(s: &Scenario, y: &PowerFactors) -> Result<(), EvaluateError> {
    for (t, v) in y.iter() {
        let tx = s.transmitter(t).ok_or(EvaluateError::UnknownTransmitter(t))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(EvaluateError::OutOfRange(t, v));
        }
        if !tx.optimizable && v != 1.0 {
            return Err(EvaluateError::FixedTransmitterChanged(t, v));
        }
    }
    Ok(())
}

/// Optimizable transmitters with no receiving point at or above `p_min` under `y`.
pub fn shut_down_transmitters(s: &Scenario, y: &PowerFactors) -> Vec<TxId> {
    let p_min = s.radio().p_min;
    let mut reaching: BTreeSet<TxId> = BTreeSet::new();
    for l in s.links() {
        let Some(t) = s.transmitter(l.transmitter_id) else { continue };
        if t.optimizable && received_useful_power(l, t.power_w, y.get(t.id)) >= p_min {
            reaching.insert(t.id);
        }
    }
    s.transmitters()
        .iter()
        .filter(|t| t.optimizable && !reaching.contains(&t.id))
        .map(|t| t.id)
        .collect()
}

fn optimizable_power(s: &Scenario, y: &PowerFactors) -> f64 {
    s.transmitters()
        .iter()
        .filter(|t| t.optimizable)
        .map(|t| t.power_w * y.get(t.id))
        .sum()
}

pub fn evaluate_solution(s: &Scenario, y: &PowerFactors) -> Result<Evaluation, EvaluateError> {
    check_factors(s, y)?;
    let full = PowerFactors::full();
    let power_before_w = optimizable_power(s, &full);
    let power_after_w = optimizable_power(s, y);
    let delta_power_percent = if power_before_w > 0.0 {
        100.0 * (power_after_w - power_before_w) / power_before_w
    } else {
        0.0
    };

    let fixed_before = coverage_report(s, &full, CoverageMode::FixedServer);
    let fixed_after = coverage_report(s, y, CoverageMode::FixedServer);
    let free_before = coverage_report(s, &full, CoverageMode::FreeServer);
    let free_after = coverage_report(s, y, CoverageMode::FreeServer);

    let mut networks: Vec<NetworkRow> = s
        .networks()
        .iter()
        .map(|n| {
            let now = fixed_before.served_by_network.get(&n.id).copied().unwrap_or(0);
            let after = fixed_after.served_by_network.get(&n.id).copied().unwrap_or(0);
            NetworkRow {
                network: n.id,
                name: n.name.clone(),
                admin: n.admin.clone(),
                population_now: now,
                delta: after as i64 - now as i64,
            }
        })
        .collect();
    networks.sort_by(|a, b| b.population_now.cmp(&a.population_now).then(a.network.cmp(&b.network)));

    Ok(Evaluation {
        power_before_w,
        power_after_w,
        delta_power_percent,
        shutdown_count: shut_down_transmitters(s, y).len(),
        optimizable_count: s.transmitters().iter().filter(|t| t.optimizable).count(),
        fixed_server: ServedPopulation {
            before: PopulationSplit::of(&fixed_before, s),
            after: PopulationSplit::of(&fixed_after, s),
        },
        free_server: ServedPopulation {
            before: PopulationSplit::of(&free_before, s),
            after: PopulationSplit::of(&free_after, s),
        },
        networks,
    })
}

/// The `top_n` networks with the largest population gain, ties by id.
pub fn network_table(e: &Evaluation, top_n: usize) -> Vec<NetworkRow> {
    network_table_where(e, top_n, |_| true)
}

/// As [`network_table`], restricted to networks whose row satisfies `keep`.
pub fn network_table_where(e: &Evaluation, top_n: usize, keep: impl Fn(&NetworkRow) -> bool) -> Vec<NetworkRow> {
    let mut rows: Vec<NetworkRow> = e.networks.iter().filter(|r| keep(r)).cloned().collect();
    rows.sort_by(|a, b| b.delta.cmp(&a.delta).then(a.network.cmp(&b.network)));
    rows.truncate(top_n);
    rows
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub radiated_w: f64,
    pub efficiency: f64,
    pub consumed_w: f64,
    pub annual_wh: f64,
}

impl EnergyReport {
    pub fn annual_gwh(&self) -> f64 {
        self.annual_wh / 1e9
    }
}

/// `consumed = radiated / efficiency`, `annual = consumed · 8760 h`.
pub fn energy_estimate(total_radiated_w: f64, efficiency: f64) -> Result<EnergyReport, EvaluateError> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(EvaluateError::Efficiency(efficiency));
    }
    let consumed_w = total_radiated_w / efficiency;
    Ok(EnergyReport {
        radiated_w: total_radiated_w,
        efficiency,
        consumed_w,
        annual_wh: consumed_w * HOURS_PER_YEAR,
    })
}

/// Counts describing the scenario at full power.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSummary {
    pub transmitters: usize,
    pub servers: usize,
    pub domestic_servers: usize,
    pub foreign_servers: usize,
    /// Potential population summed over service pairs.
    pub population: PopulationSplit,
    pub currently_served: PopulationSplit,
}

pub fn scenario_summary(s: &Scenario) -> ScenarioSummary {
    let servers: BTreeSet<TxId> = service_pairs(s).iter().map(|a| a.server).collect();
    let domestic_servers = servers
        .iter()
        .filter(|t| s.transmitter(**t).is_some_and(|tx| s.is_domestic(&tx.admin)))
        .count();
    let report = coverage_report(s, &PowerFactors::full(), CoverageMode::FixedServer);
    let potential = |domestic: bool| -> u64 {
        report
            .potential_by_admin
            .iter()
            .filter(|(a, _)| s.is_domestic(a) == domestic)
            .map(|(_, v)| v)
            .sum()
    };
    ScenarioSummary {
        transmitters: s.transmitters().len(),
        servers: servers.len(),
        domestic_servers,
        foreign_servers: servers.len() - domestic_servers,
        population: PopulationSplit {
            domestic: potential(true),
            foreign: potential(false),
        },
        currently_served: PopulationSplit::of(&report, s),
    }
}

pub const SCENARIO_CSV_HEADER: &str = "quantity,value";
pub const SUMMARY_CSV_HEADER: &str = "metric,value";
pub const NETWORKS_CSV_HEADER: &str = "network_id,network_name,admin,population_now,delta_population";
pub const ENERGY_CSV_HEADER: &str = "quantity,before,after";

pub fn scenario_summary_csv(summary: &ScenarioSummary) -> String {
    let rows: [(&str, u64); 8] = [
        ("transmitters", summary.transmitters as u64),
        ("servers", summary.servers as u64),
        ("domestic_servers", summary.domestic_servers as u64),
        ("foreign_servers", summary.foreign_servers as u64),
        ("population_domestic", summary.population.domestic),
        ("population_foreign", summary.population.foreign),
        ("currently_served_domestic", summary.currently_served.domestic),
        ("currently_served_foreign", summary.currently_served.foreign),
    ];
    let mut out = format!("{SCENARIO_CSV_HEADER}\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

pub fn summary_csv(e: &Evaluation) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    let _ = writeln!(out, "shutdown_count,{}", e.shutdown_count);
    let _ = writeln!(out, "delta_power_percent,{:.4}", e.delta_power_percent);
    let _ = writeln!(out, "delta_served_domestic,{:+}", e.fixed_server.delta_domestic());
    let _ = writeln!(out, "delta_served_foreign,{:+}", e.fixed_server.delta_foreign());
    let _ = writeln!(out, "delta_served_domestic_free_server,{:+}", e.free_server.delta_domestic());
    let _ = writeln!(out, "delta_served_foreign_free_server,{:+}", e.free_server.delta_foreign());
    let _ = writeln!(out, "power_before_w,{:.6}", e.power_before_w);
    let _ = writeln!(out, "power_after_w,{:.6}", e.power_after_w);
    let _ = writeln!(out, "optimizable_transmitters,{}", e.optimizable_count);
    for (label, served) in [("", &e.fixed_server), ("_free_server", &e.free_server)] {
        let _ = writeln!(out, "served_before_domestic{label},{}", served.before.domestic);
        let _ = writeln!(out, "served_after_domestic{label},{}", served.after.domestic);
        let _ = writeln!(out, "served_before_foreign{label},{}", served.before.foreign);
        let _ = writeln!(out, "served_after_foreign{label},{}", served.after.foreign);
    }
    out
}

pub fn networks_csv(rows: &[NetworkRow]) -> String {
    let mut out = format!("{NETWORKS_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:+}",
            r.network, r.name, r.admin, r.population_now, r.delta
        );
    }
    out
}

pub fn energy_csv(before: &EnergyReport, after: &EnergyReport) -> String {
    let mut out = format!("{ENERGY_CSV_HEADER}\n");
    let _ = writeln!(out, "radiated_kw,{:.6},{:.6}", before.radiated_w / 1e3, after.radiated_w / 1e3);
    let _ = writeln!(out, "efficiency,{},{}", before.efficiency, after.efficiency);
    let _ = writeln!(out, "consumed_kw,{:.6},{:.6}", before.consumed_w / 1e3, after.consumed_w / 1e3);
    let _ = writeln!(out, "annual_gwh,{:.6},{:.6}", before.annual_gwh(), after.annual_gwh());
    out
}

/// Writes `summary.csv`, `networks.csv` (every network, by current population),
/// `networks_domestic_top.csv`, `networks_foreign_top.csv` and `energy.csv` into `dir`.
pub fn write_evaluation(
    s: &Scenario,
    e: &Evaluation,
    efficiency: f64,
    top_n: usize,
    dir: impl AsRef<Path>,
) -> io::Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.csv"), summary_csv(e))?;
    fs::write(dir.join("networks.csv"), networks_csv(&e.networks))?;
    let domestic = network_table_where(e, top_n, |r| s.is_domestic(&r.admin));
    let foreign = network_table_where(e, top_n, |r| !s.is_domestic(&r.admin));
    fs::write(dir.join("networks_domestic_top.csv"), networks_csv(&domestic))?;
    fs::write(dir.join("networks_foreign_top.csv"), networks_csv(&foreign))?;
    let before = energy_estimate(e.power_before_w, efficiency).map_err(io::Error::other)?;
    let after = energy_estimate(e.power_after_w, efficiency).map_err(io::Error::other)?;
    fs::write(dir.join("energy.csv"), energy_csv(&before, &after))?;
    Ok(())
}
