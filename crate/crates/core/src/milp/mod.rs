//! Model construction: the Big-M MILP, its LP variant, block splitting and
//! LP-format interchange.
//!
//! For a service pair `(r,a)` with server `t = t_ra` and interferers `I_ra`
//! the row is
//!
//! ```text
//! y_t − θ·Σ_{j∈I_ra} (p̄_rj / p_rt)·y_j + M·s_ra ≥ θ·p_min / p_rt
//! ```
//!
//! which, for `s_ra = 0`, is the SINR constraint multiplied through by its
//! positive denominator. Transmitters that may not be optimized keep `y = 1`,
//! so their terms are folded into the right-hand side. Protected pairs carry
//! no `s` column at all.
//!
//! Rows keep their unscaled coefficients (the exported model is exactly the
//! algebraic one); [`Row::scale`] records the normalization the solver applies.

mod lpfile;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::coverage::{service_pairs, ProtectedPair};
use crate::scenario::Scenario;
use crate::{Channel, PairKey, TxId};

pub use lpfile::{export_model, format_number, read_lp, write_lp, LpFile, LpFormatError, LpRow};

/// Big-M used by the fixed policy unless overridden.
pub const DEFAULT_FIXED_BIGM: f64 = 1e40;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("protected pair {0} has no best server")]
    UnservedProtectedPair(PairKey),
    #[error("model has no rows")]
    EmptyModel,
    #[error("invalid Big-M value {0}")]
    InvalidBigM(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BigMPolicy {
    /// One constant for every row.
    Fixed(f64),
    /// The smallest valid constant for each row, [`compute_bigm`].
    PerRow,
}

impl Default for BigMPolicy {
    fn default() -> Self {
        BigMPolicy::Fixed(DEFAULT_FIXED_BIGM)
    }
}

impl fmt::Display for BigMPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BigMPolicy::Fixed(m) => write!(f, "fixed:{}", format_number(*m)),
            BigMPolicy::PerRow => f.write_str("per-row"),
        }
    }
}

impl std::str::FromStr for BigMPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-row" | "per_row" => Ok(BigMPolicy::PerRow),
            "fixed" => Ok(BigMPolicy::default()),
            _ => {
                let v = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| format!("unknown Big-M policy '{s}' (expected fixed[:M] or per-row)"))?;
                let m: f64 = v.parse().map_err(|_| format!("invalid Big-M value '{v}'"))?;
                if m > 0.0 && m.is_finite() {
                    Ok(BigMPolicy::Fixed(m))
                } else {
                    Err(format!("Big-M must be positive and finite, got {v}"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelVariant {
    /// Binary `s`, coefficient chosen by the policy.
    Milp(BigMPolicy),
    /// Continuous `s ≥ 0` with coefficient 1.
    Lp,
}

impl ModelVariant {
    pub fn is_milp(&self) -> bool {
        matches!(self, ModelVariant::Milp(_))
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelVariant::Milp(p) => write!(f, "milp ({p})"),
            ModelVariant::Lp => f.write_str("lp"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarRole {
    /// Power factor `y_t`.
    Power(TxId),
    /// Coverage shortfall `s_ra`.
    Shortfall(PairKey),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub role: VarRole,
    pub block: Channel,
}

pub fn power_var_name(t: TxId) -> String {
    format!("y_t{t}")
}

pub fn shortfall_var_name(p: PairKey) -> String {
    format!("s_r{}_a{}", p.receiver, p.network)
}

pub fn row_name(p: PairKey) -> String {
    format!("c_r{}_a{}", p.receiver, p.network)
}

/// One `≥` row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub pair: PairKey,
    pub block: Channel,
    /// `(variable index, coefficient)` over `y` variables, ascending index.
    pub terms: Vec<(usize, f64)>,
    /// Index of `s_ra`, absent for protected pairs.
    pub shortfall: Option<usize>,
    /// Coefficient of `s_ra` in this model (M, `M_ra` or 1); zero without `s`.
    pub shortfall_coef: f64,
    pub rhs: f64,
    /// [`compute_bigm`] for this row, whatever the policy.
    pub m_ra: f64,
    /// Multiplier bringing the largest `|y|` coefficient to 1.
    pub scale: f64,
}

impl Row {
    /// Left-hand side at `x`, unscaled, including the `s` term.
    pub fn activity(&self, x: &[f64]) -> f64 {
        let y: f64 = self.terms.iter().map(|&(j, c)| c * x[j]).sum();
        y + self.shortfall.map_or(0.0, |j| self.shortfall_coef * x[j])
    }

    /// Scaled surplus `scale·(activity − rhs)`; negative means violated.
    pub fn scaled_surplus(&self, x: &[f64]) -> f64 {
        self.scale * (self.activity(x) - self.rhs)
    }

    /// Surplus of the row with `s_ra = 0`, i.e. of the coverage condition itself.
    pub fn coverage_surplus(&self, x: &[f64]) -> f64 {
        let y: f64 = self.terms.iter().map(|&(j, c)| c * x[j]).sum();
        self.scale * (y - self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelInstance {
    pub variant: ModelVariant,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    /// Minimized; `(variable index, coefficient)`.
    pub objective: Vec<(usize, f64)>,
}

impl ModelInstance {
    pub fn binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Transmitters with a `y` variable, paired with its index.
    pub fn power_vars(&self) -> impl Iterator<Item = (TxId, usize)> + '_ {
        self.variables.iter().enumerate().filter_map(|(j, v)| match v.role {
            VarRole::Power(t) => Some((t, j)),
            VarRole::Shortfall(_) => None,
        })
    }

    pub fn shortfall_vars(&self) -> impl Iterator<Item = (PairKey, usize)> + '_ {
        self.variables.iter().enumerate().filter_map(|(j, v)| match v.role {
            VarRole::Shortfall(p) => Some((p, j)),
            VarRole::Power(_) => None,
        })
    }

    /// Weight of `s_ra` in the objective (the receiving point's population).
    pub fn objective_coef(&self, j: usize) -> f64 {
        self.objective
            .iter()
            .find(|&&(k, _)| k == j)
            .map_or(0.0, |&(_, c)| c)
    }

    pub fn blocks(&self) -> Vec<Channel> {
        let set: BTreeSet<Channel> = self
            .rows
            .iter()
            .map(|r| r.block)
            .chain(self.variables.iter().map(|v| v.block))
            .collect();
        set.into_iter().collect()
    }
}

/// `M_ra = θ·p_min/p_rt + θ·Σ_j p̄_rj/p_rt`: with `s_ra = 1` the row holds for every `y ∈ [0,1]^n`.
pub fn compute_bigm(theta: f64, noise_ratio: f64, interference_ratios: &[f64]) -> f64 {
    theta * (noise_ratio + interference_ratios.iter().sum::<f64>())
}

pub fn build_milp(
    s: &Scenario,
    protected: &BTreeSet<ProtectedPair>,
    policy: BigMPolicy,
) -> Result<ModelInstance, MilpError> {
    if let BigMPolicy::Fixed(m) = policy {
        if !(m > 0.0 && m.is_finite()) {
            return Err(MilpError::InvalidBigM(m));
        }
    }
    assemble_model(s, protected, ModelVariant::Milp(policy))
}

pub fn build_lp(s: &Scenario, protected: &BTreeSet<ProtectedPair>) -> Result<ModelInstance, MilpError> {
    assemble_model(s, protected, ModelVariant::Lp)
}

pub fn build_model(
    s: &Scenario,
    protected: &BTreeSet<ProtectedPair>,
    variant: ModelVariant,
) -> Result<ModelInstance, MilpError> {
    match variant {
        ModelVariant::Milp(p) => build_milp(s, protected, p),
        ModelVariant::Lp => build_lp(s, protected),
    }
}

struct RawRow {
    pair: PairKey,
    block: Channel,
    y_terms: Vec<(TxId, f64)>,
    rhs: f64,
    m_ra: f64,
}

fn assemble_model(
    s: &Scenario,
    protected: &BTreeSet<ProtectedPair>,
    variant: ModelVariant,
) -> Result<ModelInstance, MilpError> {
    let radio = s.radio();
    let theta = radio.theta;
    let assignments = service_pairs(s);
    let known: BTreeSet<PairKey> = assignments.iter().map(|a| a.pair()).collect();
    if let Some(p) = protected.iter().find(|p| !known.contains(p)) {
        return Err(MilpError::UnservedProtectedPair(*p));
    }
    if assignments.is_empty() {
        return Err(MilpError::EmptyModel);
    }

    let mut raw = Vec::with_capacity(assignments.len());
    for a in &assignments {
        let server = s.transmitter(a.server).expect("server exists");
        let p = a.useful_power_w;
        let noise_ratio = radio.p_min / p;
        let ratios: Vec<f64> = a.interferers.iter().map(|i| i.power_w / p).collect();
        let mut rhs = theta * noise_ratio;
        let mut y_terms = Vec::with_capacity(ratios.len() + 1);
        if server.optimizable {
            y_terms.push((server.id, 1.0));
        } else {
            rhs -= 1.0;
        }
        for (i, &ratio) in a.interferers.iter().zip(&ratios) {
            let t = s.transmitter(i.transmitter).expect("interferer exists");
            if t.optimizable {
                y_terms.push((t.id, -theta * ratio));
            } else {
                rhs += theta * ratio;
            }
        }
        y_terms.sort_by_key(|&(t, _)| t);
        raw.push(RawRow {
            pair: a.pair(),
            block: server.channel(),
            y_terms,
            rhs,
            m_ra: compute_bigm(theta, noise_ratio, &ratios),
        });
    }

    let power_ids: BTreeSet<TxId> = raw.iter().flat_map(|r| r.y_terms.iter().map(|&(t, _)| t)).collect();
    let mut variables: Vec<Variable> = power_ids
        .iter()
        .map(|&t| Variable {
            name: power_var_name(t),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: 1.0,
            role: VarRole::Power(t),
            block: s.transmitter(t).expect("transmitter exists").channel(),
        })
        .collect();
    let y_index: BTreeMap<TxId, usize> = power_ids.iter().enumerate().map(|(j, &t)| (t, j)).collect();

    let (kind, upper) = match variant {
        ModelVariant::Milp(_) => (VarKind::Binary, 1.0),
        ModelVariant::Lp => (VarKind::Continuous, f64::INFINITY),
    };
    let mut rows = Vec::with_capacity(raw.len());
    let mut objective = Vec::new();
    for r in raw {
        let terms: Vec<(usize, f64)> = r.y_terms.iter().map(|&(t, c)| (y_index[&t], c)).collect();
        let max_coef = terms.iter().map(|&(_, c)| c.abs()).fold(0.0, f64::max);
        let scale = if max_coef > 0.0 { 1.0 / max_coef } else { 1.0 };
        let (shortfall, shortfall_coef) = if protected.contains(&r.pair) {
            (None, 0.0)
        } else {
            let j = variables.len();
            variables.push(Variable {
                name: shortfall_var_name(r.pair),
                kind,
                lower: 0.0,
                upper,
                role: VarRole::Shortfall(r.pair),
                block: r.block,
            });
            let population = s.receiver(r.pair.receiver).expect("receiver exists").population;
            objective.push((j, population as f64));
            let coef = match variant {
                ModelVariant::Milp(BigMPolicy::Fixed(m)) => m,
                ModelVariant::Milp(BigMPolicy::PerRow) => r.m_ra,
                ModelVariant::Lp => 1.0,
            };
            (Some(j), coef)
        };
        rows.push(Row {
            name: row_name(r.pair),
            pair: r.pair,
            block: r.block,
            terms,
            shortfall,
            shortfall_coef,
            rhs: r.rhs,
            m_ra: r.m_ra,
            scale,
        });
    }
    Ok(ModelInstance {
        variant,
        variables,
        rows,
        objective,
    })
}

/// One sub-model per channel. Variable and row order is preserved inside each block.
pub fn split_blocks(m: &ModelInstance) -> Vec<ModelInstance> {
    m.blocks()
        .into_iter()
        .map(|b| {
            let mut remap = vec![usize::MAX; m.variables.len()];
            let mut variables = Vec::new();
            for (j, v) in m.variables.iter().enumerate() {
                if v.block == b {
                    remap[j] = variables.len();
                    variables.push(v.clone());
                }
            }
            let rows = m
                .rows
                .iter()
                .filter(|r| r.block == b)
                .map(|r| Row {
                    terms: r.terms.iter().map(|&(j, c)| (remap[j], c)).collect(),
                    shortfall: r.shortfall.map(|j| remap[j]),
                    ..r.clone()
                })
                .collect();
            let objective = m
                .objective
                .iter()
                .filter(|&&(j, _)| remap[j] != usize::MAX)
                .map(|&(j, c)| (remap[j], c))
                .collect();
            ModelInstance {
                variant: m.variant,
                variables,
                rows,
                objective,
            }
        })
        .collect()
}
