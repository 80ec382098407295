//! Plain-text solutions: `<variable_name> <value>` per line, `#` comments.
//!
//! Missing variables default to 1 for `y` and 0 for `s`. Comment lines
//! `# status <s>` and `# lower_bound <v>` are read back when present; the
//! objective is always recomputed.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use super::{Solution, SolveStatus, SolverParams};
use crate::milp::{format_number, ModelInstance, VarKind, VarRole};

#[derive(Debug, Error)]
pub enum SolutionFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown variable '{name}'")]
    UnknownVariable { line: usize, name: String },
    #[error("variable {name} = {value} is outside its bounds")]
    OutOfBounds { name: String, value: f64 },
    #[error("infeasible point: row {row} violated by {violation:e} (scaled)")]
    Infeasible { row: String, violation: f64 },
}

pub fn write_solution(m: &ModelInstance, sol: &Solution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# status {}", sol.status);
    let _ = writeln!(out, "# objective {}", format_number(sol.objective));
    let _ = writeln!(out, "# lower_bound {}", format_number(sol.lower_bound));
    for (v, x) in m.variables.iter().zip(&sol.values) {
        let _ = writeln!(out, "{} {}", v.name, format_number(*x));
    }
    out
}

fn malformed(line: usize, message: impl Into<String>) -> SolutionFileError {
    SolutionFileError::Malformed {
        line,
        message: message.into(),
    }
}

/// Parses and validates a solution against `m`.
pub fn parse_solution(text: &str, m: &ModelInstance, p: &SolverParams) -> Result<Solution, SolutionFileError> {
    let index: HashMap<&str, usize> = m.variables.iter().enumerate().map(|(j, v)| (v.name.as_str(), j)).collect();
    let mut values: Vec<f64> = m
        .variables
        .iter()
        .map(|v| match v.role {
            VarRole::Power(_) => 1.0,
            VarRole::Shortfall(_) => 0.0,
        })
        .collect();
    let mut status = SolveStatus::Optimal;
    let mut lower_bound = None;
    for (n, line) in text.lines().enumerate() {
        let n = n + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("status"), Some(s)) => status = s.parse().map_err(|e: String| malformed(n, e))?,
                (Some("lower_bound"), Some(v)) => {
                    lower_bound = Some(v.parse::<f64>().map_err(|_| malformed(n, format!("invalid number '{v}'")))?)
                }
                _ => {}
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed(n, "expected '<variable> <value>'"));
        };
        let j = *index.get(name).ok_or_else(|| SolutionFileError::UnknownVariable {
            line: n,
            name: name.to_string(),
        })?;
        values[j] = value
            .parse()
            .map_err(|_| malformed(n, format!("invalid number '{value}'")))?;
    }
    for (v, &x) in m.variables.iter().zip(&values) {
        let tol = p.feasibility_tol;
        let in_bounds = x.is_finite() && x >= v.lower - tol && x <= v.upper + tol;
        let integral = v.kind != VarKind::Binary || (x - x.round()).abs() <= p.integrality_tol;
        if !(in_bounds && integral) {
            return Err(SolutionFileError::OutOfBounds {
                name: v.name.clone(),
                value: x,
            });
        }
    }
    let worst = m
        .rows
        .iter()
        .map(|r| (r, r.scaled_surplus(&values)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((row, surplus)) = worst {
        if surplus < -p.feasibility_tol {
            return Err(SolutionFileError::Infeasible {
                row: row.name.clone(),
                violation: -surplus,
            });
        }
    }
    let objective = m.objective_value(&values);
    Ok(Solution {
        status,
        values,
        objective,
        lower_bound: lower_bound.unwrap_or(objective),
        nodes: 0,
        iterations: 0,
        wall_time: Duration::ZERO,
        unconstrained_level: 1.0,
        trace: Vec::new(),
    })
}

pub fn import_external_solution(
    path: impl AsRef<Path>,
    m: &ModelInstance,
    p: &SolverParams,
) -> Result<Solution, SolutionFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SolutionFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_solution(&text, m, p)
}
