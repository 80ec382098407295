//! Run settings shared by every subcommand, and their manifest form.
//!
//! The manifest is `key = value` per line, keys being the long flag names.
//! Replaying a manifest turns each line back into `--key value`, so the
//! manifest and the command line cannot drift apart.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{ArgAction, Args, ValueEnum};
use fmpower::milp::{BigMPolicy, ModelVariant};
use fmpower::scenario::SyntheticParams;
use fmpower::solve::SolverParams;

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// An optional flag value written as `none` when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Opt<T>(pub Option<T>);

impl<T: FromStr> FromStr for Opt<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            Ok(Opt(None))
        } else {
            s.parse().map(|v| Opt(Some(v))).map_err(|e| format!("{e}"))
        }
    }
}

impl<T: fmt::Display> fmt::Display for Opt<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(v) => v.fmt(f),
            None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Tiny,
    Small,
    Benchmark,
}

impl Preset {
    pub fn params(self) -> SyntheticParams {
        match self {
            Preset::Tiny => SyntheticParams::tiny(),
            Preset::Small => SyntheticParams::small(),
            Preset::Benchmark => SyntheticParams::benchmark(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Milp,
    Lp,
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct Settings {
    /// Scenario directory; without it a synthetic scenario is generated from --preset and --seed.
    #[arg(long, default_value = "none")]
    pub scenario: Opt<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Small)]
    pub preset: Preset,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write links.csv with a generated scenario.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub links: bool,
    #[arg(long, value_enum, default_value_t = ModelKind::Milp)]
    pub model: ModelKind,
    /// fixed[:M] or per-row.
    #[arg(long, default_value = "fixed:1e40")]
    pub bigm: BigMPolicy,
    /// Relative optimality gap, percent.
    #[arg(long, default_value_t = 1.0)]
    pub gap: f64,
    /// Branch-and-bound nodes per block, or none.
    #[arg(long, default_value = "200000")]
    pub node_limit: Opt<u64>,
    /// Seconds per block, or none.
    #[arg(long, default_value = "none")]
    pub time_limit: Opt<f64>,
    /// Simplex iterations per LP, or none for a size-based limit.
    #[arg(long, default_value = "none")]
    pub iteration_limit: Opt<u64>,
    #[arg(long, default_value_t = 1e-7)]
    pub feasibility_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub integrality_tol: f64,
    /// Concurrent block solves.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Stage-1 solution to import instead of solving (name value per line).
    #[arg(long, default_value = "none")]
    pub solution: Opt<PathBuf>,
    /// Power factors (transmitter_id,y) to evaluate or map instead of solving.
    #[arg(long, default_value = "none")]
    pub factors: Opt<PathBuf>,
    /// Radiated over consumed power, in (0,1].
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    /// Rows of the per-network gain tables.
    #[arg(long, default_value_t = 20)]
    pub top_n: usize,
    /// Map pixel side, degrees.
    #[arg(long, default_value_t = 0.05)]
    pub pixel_deg: f64,
    #[arg(long, default_value = "fmpower-out")]
    pub out: PathBuf,
}

impl Settings {
    pub fn variant(&self) -> ModelVariant {
        match self.model {
            ModelKind::Milp => ModelVariant::Milp(self.bigm),
            ModelKind::Lp => ModelVariant::Lp,
        }
    }

    pub fn solver_params(&self) -> Result<SolverParams, CliError> {
        let time_limit = match self.time_limit.0 {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(CliError::Usage(format!("--time-limit must be positive, got {t}")));
            }
            t => t.map(Duration::from_secs_f64),
        };
        let p = SolverParams {
            feasibility_tol: self.feasibility_tol,
            integrality_tol: self.integrality_tol,
            gap_percent: self.gap,
            node_limit: self.node_limit.0,
            time_limit,
            iteration_limit: self.iteration_limit.0,
            jobs: self.jobs,
            trace: false,
        };
        p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(p)
    }

    /// `(flag, value)` for every setting, in declaration order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("scenario", self.scenario.0.as_ref().map_or("none".into(), |p| p.display().to_string())),
            ("preset", value_name(&self.preset)),
            ("seed", self.seed.to_string()),
            ("links", self.links.to_string()),
            ("model", value_name(&self.model)),
            ("bigm", self.bigm.to_string()),
            ("gap", self.gap.to_string()),
            ("node-limit", self.node_limit.to_string()),
            ("time-limit", self.time_limit.to_string()),
            ("iteration-limit", self.iteration_limit.to_string()),
            ("feasibility-tol", self.feasibility_tol.to_string()),
            ("integrality-tol", self.integrality_tol.to_string()),
            ("jobs", self.jobs.to_string()),
            ("solution", self.solution.0.as_ref().map_or("none".into(), |p| p.display().to_string())),
            ("factors", self.factors.0.as_ref().map_or("none".into(), |p| p.display().to_string())),
            ("efficiency", self.efficiency.to_string()),
            ("top-n", self.top_n.to_string()),
            ("pixel-deg", self.pixel_deg.to_string()),
            ("out", self.out.display().to_string()),
        ]
    }
}

/// The recorded form of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub settings: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, settings: &Settings) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            settings: settings.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# fmpower run manifest\n");
        out.push_str(&format!("command = {}\nversion = {}\n", self.command, self.version));
        for (k, v) in &self.settings {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut command = None;
        let mut version = None;
        let mut settings = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Data(format!("manifest line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "command" => command = Some(v.to_string()),
                "version" => version = Some(v.to_string()),
                _ => settings.push((k.to_string(), v.to_string())),
            }
        }
        Ok(Self {
            command: command.ok_or_else(|| CliError::Data("manifest has no command".into()))?,
            version: version.unwrap_or_default(),
            settings,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read manifest {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Arguments reproducing the run, optionally redirected to another output directory.
    pub fn to_argv(&self, out: Option<&Path>) -> Vec<String> {
        let mut argv = vec!["fmpower".to_string(), self.command.clone()];
        for (k, v) in &self.settings {
            let v = match (k.as_str(), out) {
                ("out", Some(dir)) => dir.display().to_string(),
                _ => v.clone(),
            };
            argv.push(format!("--{k}"));
            argv.push(v);
        }
        argv
    }
}
