//! Best-first branch-and-bound over the binary `s` variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{solve_bounded, LpProblem, LpStatus};
use super::{gap_percent, infeasible, lp_problem, objective_costs, row_satisfied, ShortfallColumns};
use super::{Solution, SolveStatus, SolverParams};
use crate::milp::{ModelInstance, VarKind};

/// Relative slack when deciding whether a row holds without its `s`.
const ROUNDING_RTOL: f64 = 1e-9;

/// Bounds after a processed node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSample {
    pub node: u64,
    pub lower: f64,
    pub upper: f64,
}

struct Node {
    bound: f64,
    id: u64,
    fixed: Vec<(usize, f64)>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed: the heap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    m: &'a ModelInstance,
    base: LpProblem,
    binaries: Vec<usize>,
    weights: Vec<f64>,
    /// Row linked to each binary, if any.
    linked_row: Vec<Option<usize>>,
    integral_objective: bool,
    params: &'a SolverParams,
    iterations: u64,
    incumbent: Option<(f64, Vec<f64>)>,
}

impl Search<'_> {
    /// Tightens an LP bound when every objective coefficient is an integer.
    fn effective(&self, bound: f64) -> f64 {
        if self.integral_objective {
            (bound - 1e-6).ceil().max(0.0)
        } else {
            bound
        }
    }

    fn upper(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v)
    }

    fn solve_node(&mut self, fixed: &[(usize, f64)]) -> Option<(f64, Vec<f64>)> {
        let mut p = self.base.clone();
        for &(j, v) in fixed {
            p.lower[j] = v;
            p.upper[j] = v;
            p.start[j] = v;
        }
        let out = solve_bounded(&p, self.params.iteration_limit, self.params.feasibility_tol);
        self.iterations += out.iterations;
        (out.status == LpStatus::Optimal).then_some((out.objective, out.x))
    }

    /// Completes the `y` part of `x` into an integer point: `s = 0` exactly for
    /// rows that hold. Rejects points violating a protected row.
    fn try_incumbent(&mut self, x: &[f64]) {
        let mut point = x.to_vec();
        for row in &self.m.rows {
            let ok = row_satisfied(row, &point, ROUNDING_RTOL);
            match row.shortfall {
                Some(j) => point[j] = if ok { 0.0 } else { 1.0 },
                None if !ok => return,
                None => {}
            }
        }
        let value = self.m.objective_value(&point);
        if value < self.upper() {
            self.incumbent = Some((value, point));
        }
    }

    /// Most fractional binary; ties go to the larger weight, then the lower index.
    ///
    /// A binary close to 0 whose row only holds thanks to that small value
    /// (tiny right-hand sides make this possible) also counts as fractional.
    fn branching_variable(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &j) in self.binaries.iter().enumerate() {
            let frac = x[j] - x[j].floor();
            let dist = frac.min(1.0 - frac);
            let leaning_on_zero = x[j] < 0.5
                && x[j] > 0.0
                && self.linked_row[k].is_some_and(|i| !row_satisfied(&self.m.rows[i], x, ROUNDING_RTOL));
            if dist <= self.params.integrality_tol && !leaning_on_zero {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, bd)) => {
                    dist > bd + 1e-12 || ((dist - bd).abs() <= 1e-12 && self.weights[k] > self.weights[b])
                }
            };
            if better {
                best = Some((k, dist));
            }
        }
        best.map(|(k, _)| self.binaries[k])
    }
}

pub(crate) fn branch_and_bound(m: &ModelInstance, p: &SolverParams) -> Solution {
    let started = Instant::now();
    let Some(base) = lp_problem(m, ShortfallColumns::Indicator, objective_costs(m), p.feasibility_tol) else {
        return infeasible(m, 0, started);
    };
    let binaries: Vec<usize> = (0..m.variables.len())
        .filter(|&j| m.variables[j].kind == VarKind::Binary)
        .collect();
    let weights = binaries.iter().map(|&j| m.objective_coef(j)).collect();
    let linked_row = binaries
        .iter()
        .map(|&j| m.rows.iter().position(|r| r.shortfall == Some(j)))
        .collect();
    let mut search = Search {
        m,
        base,
        binaries,
        weights,
        linked_row,
        integral_objective: m.objective.iter().all(|&(_, c)| c.fract() == 0.0),
        params: p,
        iterations: 0,
        incumbent: None,
    };

    let full_power: Vec<f64> = m
        .variables
        .iter()
        .map(|v| if v.upper.is_finite() && v.kind == VarKind::Continuous { v.upper } else { v.lower })
        .collect();
    search.try_incumbent(&full_power);

    let mut trace = Vec::new();
    let mut nodes = 0u64;
    let mut next_id = 0u64;
    let mut heap = BinaryHeap::new();
    match search.solve_node(&[]) {
        None => {
            let mut sol = infeasible(m, search.iterations, started);
            if let Some((value, values)) = search.incumbent {
                // an LP failure at the root leaves only the heuristic point
                sol = Solution {
                    status: SolveStatus::IterationLimit,
                    values,
                    objective: value,
                    lower_bound: 0.0,
                    ..sol
                };
            }
            return sol;
        }
        Some((obj, x)) => {
            search.try_incumbent(&x);
            heap.push(Node {
                bound: search.effective(obj),
                id: next_id,
                fixed: Vec::new(),
                x,
            });
            next_id += 1;
        }
    }

    let mut status = SolveStatus::Optimal;
    let mut lower;
    loop {
        let Some(top) = heap.peek() else {
            lower = search.upper();
            break;
        };
        lower = top.bound.min(search.upper());
        let upper = search.upper();
        if top.bound >= upper {
            lower = upper;
            break;
        }
        if gap_percent(upper, lower) <= p.gap_percent {
            status = SolveStatus::GapReached;
            break;
        }
        if p.node_limit.is_some_and(|l| nodes >= l) || p.time_limit.is_some_and(|l| started.elapsed() >= l) {
            status = SolveStatus::IterationLimit;
            break;
        }
        let node = heap.pop().expect("peeked");
        let Some(j) = search.branching_variable(&node.x) else {
            search.try_incumbent(&node.x);
            continue;
        };
        for v in [0.0, 1.0] {
            let mut fixed = node.fixed.clone();
            fixed.push((j, v));
            nodes += 1;
            if let Some((obj, x)) = search.solve_node(&fixed) {
                search.try_incumbent(&x);
                let bound = search.effective(obj);
                if bound < search.upper() {
                    heap.push(Node {
                        bound,
                        id: next_id,
                        fixed,
                        x,
                    });
                    next_id += 1;
                }
            }
        }
        if p.trace {
            let lb = heap.peek().map_or(search.upper(), |n| n.bound.min(search.upper()));
            trace.push(BoundSample {
                node: nodes,
                lower: lb,
                upper: search.upper(),
            });
        }
    }

    match search.incumbent {
        None => infeasible(m, search.iterations, started),
        Some((objective, values)) => {
            if status == SolveStatus::GapReached && objective <= lower {
                status = SolveStatus::Optimal;
            }
            Solution {
                status,
                values,
                objective,
                lower_bound: lower,
                nodes,
                iterations: search.iterations,
                wall_time: started.elapsed(),
                unconstrained_level: 1.0,
                trace,
            }
        }
    }
}
