//! Solving model instances.
//!
//! - [`solve_lp`]: the LP variant (or any model without binaries).
//! - [`solve_milp`]: best-first branch-and-bound on the `s` variables. Rows
//!   linked to an `s` are enforced when `s = 0` and relaxed away when
//!   `s = 1`; the relaxation uses the per-row constant `M_ra`, which is
//!   exact on binaries for either Big-M policy, so `1e40` never enters the
//!   arithmetic.
//! - [`brute_force`]: enumeration of every `s` assignment, an oracle for tiny models.
//! - [`power_minimization_stage`]: with coverage fixed, minimize radiated power.
//! - [`solve_model`]: the above per frequency block, blocks in parallel.

mod bnb;
mod simplex;
mod solution_file;

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::coverage::PowerFactors;
use crate::milp::{split_blocks, ModelInstance, ModelVariant, Row, VarKind, VarRole};
use crate::scenario::Scenario;
use simplex::{solve_bounded, LpProblem, LpStatus};

pub use bnb::BoundSample;
pub use solution_file::{import_external_solution, parse_solution, write_solution, SolutionFileError};

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("model has {0} binary variables; use the MILP solver")]
    NotLinear(usize),
    #[error("{found} binary variables exceed the enumeration limit of {max}")]
    TooManyBinaries { found: usize, max: usize },
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("power minimization failed: {0}")]
    PowerStage(String),
    #[error("failed to build a thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SolveStatus {
    Optimal,
    GapReached,
    IterationLimit,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapReached => "gap_reached",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(SolveStatus::Optimal),
            "gap_reached" => Ok(SolveStatus::GapReached),
            "iteration_limit" => Ok(SolveStatus::IterationLimit),
            "infeasible" => Ok(SolveStatus::Infeasible),
            _ => Err(format!("unknown status '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// On scaled rows.
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// Stop when `100·(UB−LB)/LB` is at most this.
    pub gap_percent: f64,
    /// Per block.
    pub node_limit: Option<u64>,
    /// Per block.
    pub time_limit: Option<Duration>,
    /// Simplex iterations per LP; `None` picks a size-based limit.
    pub iteration_limit: Option<u64>,
    /// Worker threads for block solving.
    pub jobs: usize,
    /// Record `(node, LB, UB)` samples during branch-and-bound.
    pub trace: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            gap_percent: 1.0,
            node_limit: Some(200_000),
            time_limit: None,
            iteration_limit: None,
            jobs: 1,
            trace: false,
        }
    }
}

impl SolverParams {
    pub fn exact() -> Self {
        Self {
            gap_percent: 0.0,
            node_limit: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.feasibility_tol > 0.0 && self.integrality_tol > 0.0 && self.integrality_tol < 0.5) {
            return Err(SolveError::InvalidParams("tolerances must be positive (integrality below 0.5)".into()));
        }
        if !(self.gap_percent >= 0.0) {
            return Err(SolveError::InvalidParams("target gap must be non-negative".into()));
        }
        if self.jobs == 0 {
            return Err(SolveError::InvalidParams("at least one job is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// One value per model variable, in model order.
    pub values: Vec<f64>,
    /// Uncovered population `Σ P_r s_ra`.
    pub objective: f64,
    pub lower_bound: f64,
    pub nodes: u64,
    pub iterations: u64,
    pub wall_time: Duration,
    /// Power factor of optimizable transmitters that have no `y` variable.
    pub unconstrained_level: f64,
    pub trace: Vec<BoundSample>,
}

/// `100·(UB−LB)/LB`; zero when both are zero, infinite when only LB is.
pub fn gap_percent(upper: f64, lower: f64) -> f64 {
    if upper.is_nan() || lower.is_nan() {
        return f64::NAN;
    }
    let diff = (upper - lower).max(0.0);
    if diff == 0.0 {
        0.0
    } else if lower <= 0.0 {
        f64::INFINITY
    } else {
        100.0 * diff / lower
    }
}

impl Solution {
    pub fn gap(&self) -> f64 {
        gap_percent(self.objective, self.lower_bound)
    }

    pub fn is_feasible(&self) -> bool {
        self.status != SolveStatus::Infeasible
    }

    /// Power factors of every optimizable transmitter of `s`.
    pub fn power_factors(&self, m: &ModelInstance, s: &Scenario) -> PowerFactors {
        let mut y: PowerFactors = s
            .transmitters()
            .iter()
            .filter(|t| t.optimizable)
            .map(|t| (t.id, self.unconstrained_level))
            .collect();
        for (t, j) in m.power_vars() {
            y.set(t, self.values[j]);
        }
        y
    }

    /// `Σ p_t·y_t` over optimizable transmitters.
    pub fn radiated_power(&self, m: &ModelInstance, s: &Scenario) -> f64 {
        let y = self.power_factors(m, s);
        s.transmitters()
            .iter()
            .filter(|t| t.optimizable)
            .map(|t| t.power_w * y.get(t.id))
            .sum()
    }
}

/// How `s` columns enter an LP built from a model.
#[derive(Clone, Copy, PartialEq)]
enum ShortfallColumns {
    /// As in the model (LP variant).
    Model,
    /// Coefficient `M_ra` with bounds `[0,1]`: the relaxation of the indicator rows.
    Indicator,
}

/// The LP of `m` with scaled rows. Constant rows are checked here and left out.
/// Returns `None` when a constant row is violated.
fn lp_problem(m: &ModelInstance, columns: ShortfallColumns, cost: Vec<f64>, feas_tol: f64) -> Option<LpProblem> {
    let n = m.variables.len();
    let mut cols = vec![Vec::new(); n];
    let mut rhs = Vec::with_capacity(m.rows.len());
    for row in &m.rows {
        if row.terms.is_empty() && row.shortfall.is_none() {
            if row.rhs * row.scale > feas_tol {
                return None;
            }
            continue;
        }
        let i = rhs.len();
        rhs.push(row.rhs * row.scale);
        for &(j, c) in &row.terms {
            cols[j].push((i, c * row.scale));
        }
        if let Some(j) = row.shortfall {
            let c = match columns {
                ShortfallColumns::Model => row.shortfall_coef,
                ShortfallColumns::Indicator => row.m_ra,
            };
            cols[j].push((i, c * row.scale));
        }
    }
    let mut lower: Vec<f64> = m.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = m.variables.iter().map(|v| v.upper).collect();
    if columns == ShortfallColumns::Indicator {
        for (_, j) in m.shortfall_vars() {
            lower[j] = lower[j].max(0.0);
            upper[j] = upper[j].min(1.0);
        }
    }
    let start = m
        .variables
        .iter()
        .zip(lower.iter().zip(&upper))
        .map(|(v, (&l, &u))| match v.role {
            VarRole::Power(_) if u.is_finite() => u,
            _ => l,
        })
        .collect();
    Some(LpProblem {
        rows: rhs.len(),
        cols,
        lower,
        upper,
        cost,
        rhs,
        start,
    })
}

fn objective_costs(m: &ModelInstance) -> Vec<f64> {
    let mut c = vec![0.0; m.variables.len()];
    for &(j, v) in &m.objective {
        c[j] += v;
    }
    c
}

fn infeasible(m: &ModelInstance, iterations: u64, started: Instant) -> Solution {
    Solution {
        status: SolveStatus::Infeasible,
        values: m.variables.iter().map(|v| v.lower).collect(),
        objective: f64::INFINITY,
        lower_bound: f64::INFINITY,
        nodes: 0,
        iterations,
        wall_time: started.elapsed(),
        unconstrained_level: 1.0,
        trace: Vec::new(),
    }
}

/// Whether the coverage condition of `row` holds at `x` up to a relative `rtol`.
pub(crate) fn row_satisfied(row: &Row, x: &[f64], rtol: f64) -> bool {
    let magnitude: f64 = row.terms.iter().map(|&(j, c)| (c * x[j]).abs()).sum::<f64>() + row.rhs.abs();
    let y: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum();
    y - row.rhs >= -rtol * magnitude
}

pub fn solve_lp(m: &ModelInstance, p: &SolverParams) -> Result<Solution, SolveError> {
    p.validate()?;
    let binaries = m.binaries();
    if binaries > 0 {
        return Err(SolveError::NotLinear(binaries));
    }
    let started = Instant::now();
    let Some(problem) = lp_problem(m, ShortfallColumns::Model, objective_costs(m), p.feasibility_tol) else {
        return Ok(infeasible(m, 0, started));
    };
    let out = solve_bounded(&problem, p.iteration_limit, p.feasibility_tol);
    let status = match out.status {
        LpStatus::Optimal => SolveStatus::Optimal,
        LpStatus::Infeasible => return Ok(infeasible(m, out.iterations, started)),
        LpStatus::IterationLimit | LpStatus::Singular | LpStatus::Unbounded => SolveStatus::IterationLimit,
    };
    let objective = m.objective_value(&out.x);
    let lower_bound = if status == SolveStatus::Optimal { objective } else { 0.0 };
    Ok(Solution {
        status,
        values: out.x,
        objective,
        lower_bound,
        nodes: 0,
        iterations: out.iterations,
        wall_time: started.elapsed(),
        unconstrained_level: 1.0,
        trace: Vec::new(),
    })
}

pub fn solve_milp(m: &ModelInstance, p: &SolverParams) -> Result<Solution, SolveError> {
    p.validate()?;
    if m.binaries() == 0 && !m.variant.is_milp() {
        return solve_lp(m, p);
    }
    Ok(bnb::branch_and_bound(m, p))
}

pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 20;

/// Exhaustive search over the binary variables, each assignment checked with
/// an LP in the remaining variables. Exact; exponential in the binaries.
pub fn brute_force(m: &ModelInstance, max_binaries: usize) -> Result<Solution, SolveError> {
    let started = Instant::now();
    let binaries: Vec<usize> = (0..m.variables.len())
        .filter(|&j| m.variables[j].kind == VarKind::Binary)
        .collect();
    if binaries.len() > max_binaries {
        return Err(SolveError::TooManyBinaries {
            found: binaries.len(),
            max: max_binaries,
        });
    }
    let params = SolverParams::default();
    if binaries.is_empty() {
        return solve_lp(m, &params);
    }
    let weights: Vec<f64> = binaries.iter().map(|&j| m.objective_coef(j)).collect();
    let base = lp_problem(m, ShortfallColumns::Indicator, vec![0.0; m.variables.len()], params.feasibility_tol);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    if let Some(base) = base {
        for mask in 0u64..(1u64 << binaries.len()) {
            let objective: f64 = (0..binaries.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| weights[k])
                .sum();
            if best.as_ref().is_some_and(|(b, _)| objective >= *b) {
                continue;
            }
            let mut problem = base.clone();
            for (k, &j) in binaries.iter().enumerate() {
                let v = (mask >> k & 1) as f64;
                problem.lower[j] = v;
                problem.upper[j] = v;
                problem.start[j] = v;
            }
            let out = solve_bounded(&problem, None, params.feasibility_tol);
            iterations += out.iterations;
            if out.status == LpStatus::Optimal {
                best = Some((objective, out.x));
            }
        }
    }
    Ok(match best {
        Some((objective, values)) => Solution {
            status: SolveStatus::Optimal,
            values,
            objective,
            lower_bound: objective,
            nodes: 1 << binaries.len(),
            iterations,
            wall_time: started.elapsed(),
            unconstrained_level: 1.0,
            trace: Vec::new(),
        },
        None => infeasible(m, iterations, started),
    })
}

/// Keeps stage-1 coverage and minimizes `Σ p_t·y_t`.
///
/// MILP models keep their `s` values: rows with `s = 0` stay enforced and rows
/// with `s = 1` are dropped. LP models keep each row with `s` fixed at its
/// stage-1 value. Optimizable transmitters without a `y` variable constrain
/// nothing and are switched off.
pub fn power_minimization_stage(
    s: &Scenario,
    m: &ModelInstance,
    sol: &Solution,
    p: &SolverParams,
) -> Result<Solution, SolveError> {
    p.validate()?;
    if !sol.is_feasible() {
        return Err(SolveError::PowerStage("stage-1 solution is infeasible".into()));
    }
    let started = Instant::now();
    let mut cost = vec![0.0; m.variables.len()];
    for (t, j) in m.power_vars() {
        cost[j] = s.transmitter(t).map_or(0.0, |tx| tx.power_w);
    }
    let columns = if m.variant.is_milp() { ShortfallColumns::Indicator } else { ShortfallColumns::Model };
    let mut problem = lp_problem(m, columns, cost.clone(), p.feasibility_tol)
        .ok_or_else(|| SolveError::PowerStage("constant row violated".into()))?;
    for (_, j) in m.shortfall_vars() {
        let v = if m.variant.is_milp() {
            sol.values[j].round()
        } else {
            sol.values[j]
        };
        problem.lower[j] = v;
        problem.upper[j] = v;
        problem.start[j] = v;
    }
    let out = solve_bounded(&problem, p.iteration_limit, p.feasibility_tol);
    match out.status {
        LpStatus::Optimal => {}
        other => return Err(SolveError::PowerStage(format!("power LP ended with {other:?}"))),
    }
    let mut values = out.x;
    // the stage-1 point is feasible for this LP, so its power is an upper bound
    let stage1_power: f64 = m.power_vars().map(|(_, j)| cost[j] * sol.values[j]).sum();
    let stage2_power: f64 = m.power_vars().map(|(_, j)| cost[j] * values[j]).sum();
    if stage2_power > stage1_power {
        for (_, j) in m.power_vars() {
            values[j] = sol.values[j];
        }
    }
    Ok(Solution {
        status: SolveStatus::Optimal,
        objective: m.objective_value(&values),
        lower_bound: sol.lower_bound,
        values,
        nodes: 0,
        iterations: out.iterations,
        wall_time: started.elapsed(),
        unconstrained_level: 0.0,
        trace: Vec::new(),
    })
}

/// Indices into `m.variables` of each block returned by [`split_blocks`].
fn block_variable_indices(m: &ModelInstance) -> Vec<Vec<usize>> {
    m.blocks()
        .into_iter()
        .map(|b| (0..m.variables.len()).filter(|&j| m.variables[j].block == b).collect())
        .collect()
}

/// Runs `f` on every block of `m` using `jobs` threads and merges the results
/// in block order. Objectives and lower bounds add up; the status is the worst one.
fn solve_blockwise<F>(m: &ModelInstance, jobs: usize, f: F) -> Result<Solution, SolveError>
where
    F: Fn(usize, &ModelInstance) -> Result<Solution, SolveError> + Sync,
{
    let started = Instant::now();
    let blocks = split_blocks(m);
    let indices = block_variable_indices(m);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SolveError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<Solution, SolveError>> =
        pool.install(|| blocks.par_iter().enumerate().map(|(k, b)| f(k, b)).collect());
    let mut merged = Solution {
        status: SolveStatus::Optimal,
        values: m.variables.iter().map(|v| v.lower).collect(),
        objective: 0.0,
        lower_bound: 0.0,
        nodes: 0,
        iterations: 0,
        wall_time: Duration::ZERO,
        unconstrained_level: 1.0,
        trace: Vec::new(),
    };
    let channels = m.blocks();
    for (k, result) in results.into_iter().enumerate() {
        let sol = result?;
        log::debug!(
            "block {} kHz: {} vars, status {}, objective {}, {} nodes, {} iterations",
            channels[k],
            indices[k].len(),
            sol.status,
            sol.objective,
            sol.nodes,
            sol.iterations
        );
        for (local, &global) in indices[k].iter().enumerate() {
            merged.values[global] = sol.values[local];
        }
        merged.status = merged.status.max(sol.status);
        merged.objective += sol.objective;
        merged.lower_bound += sol.lower_bound;
        merged.nodes += sol.nodes;
        merged.iterations += sol.iterations;
        merged.unconstrained_level = sol.unconstrained_level;
        merged.trace.extend(sol.trace);
    }
    if merged.status == SolveStatus::GapReached && merged.objective == merged.lower_bound {
        merged.status = SolveStatus::Optimal;
    }
    merged.wall_time = started.elapsed();
    Ok(merged)
}

/// Solves `m` block by block with the solver matching its variant.
pub fn solve_model(m: &ModelInstance, p: &SolverParams) -> Result<Solution, SolveError> {
    p.validate()?;
    solve_blockwise(m, p.jobs, |_, b| match b.variant {
        ModelVariant::Milp(_) => solve_milp(b, p),
        ModelVariant::Lp => solve_lp(b, p),
    })
}

/// [`power_minimization_stage`] block by block.
pub fn power_minimization_by_blocks(
    s: &Scenario,
    m: &ModelInstance,
    sol: &Solution,
    p: &SolverParams,
) -> Result<Solution, SolveError> {
    p.validate()?;
    let indices = block_variable_indices(m);
    let mut merged = solve_blockwise(m, p.jobs, |k, b| {
        let local = Solution {
            values: indices[k].iter().map(|&j| sol.values[j]).collect(),
            ..sol.clone()
        };
        let mut out = power_minimization_stage(s, b, &local, p)?;
        // per-block bounds are not tracked; the global one is restored below
        out.lower_bound = 0.0;
        Ok(out)
    })?;
    merged.lower_bound = sol.lower_bound;
    merged.unconstrained_level = 0.0;
    Ok(merged)
}
