//! `fmpower` command-line driver.
//!
//! Every subcommand computes what it needs from the scenario in memory and
//! writes only its own part of the output tree:
//!
//! ```text
//! <out>/manifest.txt
//! <out>/scenario/   gen, pipeline
//! <out>/models/     build
//! <out>/solutions/  solve, stage2
//! <out>/eval/       coverage, eval
//! <out>/maps/       map
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 solver limit.

pub mod settings;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use fmpower::coverage::{coverage_report, current_service_set, CoverageMode, PowerFactors, ProtectedPair};
use fmpower::evaluate::{evaluate_solution, scenario_summary, scenario_summary_csv, write_evaluation};
use fmpower::maprender::{render_interference_map, render_service_map, ColorTable, GridSpec, MapFilter, Raster};
use fmpower::milp::{build_model, write_lp, ModelInstance};
use fmpower::scenario::{generate_synthetic, load_scenario, write_scenario, Scenario, WriteOptions};
use fmpower::solve::{
    import_external_solution, power_minimization_by_blocks, solve_model, write_solution, Solution, SolveStatus,
    SolverParams,
};
use fmpower::TxId;

pub use settings::{ModelKind, Opt, Preset, RunManifest, Settings, MANIFEST_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

pub const FACTORS_CSV_HEADER: &str = "transmitter_id,y";
pub const PROTECTED_CSV_HEADER: &str = "receiver_id,network_id";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    SolverLimit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::SolverLimit(_) => EXIT_LIMIT,
        }
    }
}

fn data<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "fmpower", version, about = "Power-reduction planning for FM broadcast networks")]
struct Cli {
    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scenario.
    Gen(Settings),
    /// Current-service report and the protected set.
    Coverage(Settings),
    /// Export the model as an LP file.
    Build(Settings),
    /// Solve the coverage model (stage 1).
    Solve(Settings),
    /// Minimize radiated power with the coverage fixed (stage 2).
    Stage2(Settings),
    /// Before/after tables and the energy estimate.
    Eval(Settings),
    /// Service and interference maps.
    Map(Settings),
    /// Every step above.
    Pipeline(Settings),
    /// Replay a recorded manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Step {
    Gen,
    Coverage,
    Build,
    Solve,
    Stage2,
    Eval,
    Map,
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log_level))
        .format_timestamp(None)
        .try_init();
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let (name, settings, steps): (&str, Settings, &[Step]) = match command {
        Command::Gen(s) => ("gen", s, &[Step::Gen]),
        Command::Coverage(s) => ("coverage", s, &[Step::Coverage]),
        Command::Build(s) => ("build", s, &[Step::Build]),
        Command::Solve(s) => ("solve", s, &[Step::Solve]),
        Command::Stage2(s) => ("stage2", s, &[Step::Stage2]),
        Command::Eval(s) => ("eval", s, &[Step::Eval]),
        Command::Map(s) => ("map", s, &[Step::Map]),
        Command::Pipeline(s) => (
            "pipeline",
            s,
            &[Step::Gen, Step::Coverage, Step::Build, Step::Solve, Step::Stage2, Step::Eval, Step::Map],
        ),
        Command::Rerun(r) => return rerun(&r),
    };
    let manifest = RunManifest::new(name, &settings);
    let mut run = Run::new(settings)?;
    fs::create_dir_all(&run.settings.out).map_err(data("cannot create output directory"))?;
    write(&run.settings.out.join(MANIFEST_FILE), manifest.render().as_bytes())?;
    for step in steps {
        run.step(*step)?;
    }
    match run.limit.take() {
        Some(msg) => Err(CliError::SolverLimit(msg)),
        None => Ok(()),
    }
}

fn rerun(r: &RerunArgs) -> Result<(), CliError> {
    let manifest = RunManifest::load(&r.manifest)?;
    if manifest.command == "rerun" {
        return Err(CliError::Data("a manifest cannot record a rerun".into()));
    }
    if manifest.version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest was written by version {}, running {}", manifest.version, env!("CARGO_PKG_VERSION"));
    }
    let cli = Cli::try_parse_from(manifest.to_argv(r.out.as_deref()))
        .map_err(|e| CliError::Data(format!("manifest {}: {e}", r.manifest.display())))?;
    execute(cli.command)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(data(&dir.display().to_string()))?;
    }
    fs::write(path, bytes).map_err(data(&path.display().to_string()))
}

fn subdir(out: &Path, name: &str) -> Result<PathBuf, CliError> {
    let dir = out.join(name);
    fs::create_dir_all(&dir).map_err(data(&dir.display().to_string()))?;
    Ok(dir)
}

/// Lazily computed intermediate results of one invocation.
struct Run {
    settings: Settings,
    params: SolverParams,
    scenario: Scenario,
    protected: Option<BTreeSet<ProtectedPair>>,
    model: Option<ModelInstance>,
    stage1: Option<Solution>,
    stage2: Option<Solution>,
    factors: Option<PowerFactors>,
    /// First solver limit hit; reported after all outputs are written.
    limit: Option<String>,
}

impl Run {
    fn new(settings: Settings) -> Result<Self, CliError> {
        let params = settings.solver_params()?;
        if !(settings.pixel_deg > 0.0 && settings.pixel_deg.is_finite()) {
            return Err(CliError::Usage(format!("--pixel-deg must be positive, got {}", settings.pixel_deg)));
        }
        if !(settings.efficiency > 0.0 && settings.efficiency <= 1.0) {
            return Err(CliError::Usage(format!("--efficiency must lie in (0,1], got {}", settings.efficiency)));
        }
        let scenario = match &settings.scenario.0 {
            Some(dir) => load_scenario(dir).map_err(data(&format!("scenario {}", dir.display())))?,
            None => generate_synthetic(settings.seed, &settings.preset.params()).map_err(data("generator"))?,
        };
        log::info!(
            "scenario: {} networks, {} transmitters, {} receiving points, {} links",
            scenario.networks().len(),
            scenario.transmitters().len(),
            scenario.receivers().len(),
            scenario.links().len()
        );
        Ok(Self {
            settings,
            params,
            scenario,
            protected: None,
            model: None,
            stage1: None,
            stage2: None,
            factors: None,
            limit: None,
        })
    }

    fn out(&self) -> &Path {
        &self.settings.out
    }

    fn step(&mut self, step: Step) -> Result<(), CliError> {
        match step {
            Step::Gen => self.write_scenario(),
            Step::Coverage => self.write_coverage(),
            Step::Build => self.write_model(),
            Step::Solve => self.write_stage1(),
            Step::Stage2 => self.write_stage2(),
            Step::Eval => self.write_eval(),
            Step::Map => self.write_maps(),
        }
    }

    fn note_limit(&mut self, stage: &str, sol: &Solution) {
        if matches!(sol.status, SolveStatus::IterationLimit | SolveStatus::Infeasible) && self.limit.is_none() {
            self.limit = Some(format!("{stage} stopped with status {}", sol.status));
        }
    }

    fn protected(&mut self) -> &BTreeSet<ProtectedPair> {
        self.protected.get_or_insert_with(|| current_service_set(&self.scenario))
    }

    fn model(&mut self) -> Result<&ModelInstance, CliError> {
        if self.model.is_none() {
            let variant = self.settings.variant();
            let z = self.protected().clone();
            let m = build_model(&self.scenario, &z, variant).map_err(data("model"))?;
            log::info!(
                "model {}: {} variables ({} binary), {} rows, {} blocks",
                variant,
                m.variables.len(),
                m.binaries(),
                m.rows.len(),
                m.blocks().len()
            );
            self.model = Some(m);
        }
        Ok(self.model.as_ref().expect("model set above"))
    }

    fn stage1(&mut self) -> Result<&Solution, CliError> {
        if self.stage1.is_none() {
            let params = self.params.clone();
            let import = self.settings.solution.0.clone();
            let m = self.model()?;
            let started = Instant::now();
            let sol = match import {
                Some(path) => import_external_solution(&path, m, &params)
                    .map_err(data(&format!("solution {}", path.display())))?,
                None => solve_model(m, &params).map_err(|e| CliError::SolverLimit(format!("stage 1: {e}")))?,
            };
            log::info!(
                "stage 1: {} objective {} bound {} ({} nodes) in {:.3} s",
                sol.status,
                sol.objective,
                sol.lower_bound,
                sol.nodes,
                started.elapsed().as_secs_f64()
            );
            self.note_limit("stage 1", &sol);
            self.stage1 = Some(sol);
        }
        Ok(self.stage1.as_ref().expect("stage 1 set above"))
    }

    fn stage2(&mut self) -> Result<&Solution, CliError> {
        if self.stage2.is_none() {
            let first = self.stage1()?.clone();
            let m = self.model.as_ref().expect("stage 1 builds the model");
            let started = Instant::now();
            let sol = power_minimization_by_blocks(&self.scenario, m, &first, &self.params)
                .map_err(|e| CliError::SolverLimit(format!("stage 2: {e}")))?;
            log::info!(
                "stage 2: radiated power {:.3} W in {:.3} s",
                sol.radiated_power(m, &self.scenario),
                started.elapsed().as_secs_f64()
            );
            self.note_limit("stage 2", &sol);
            self.stage2 = Some(sol);
        }
        Ok(self.stage2.as_ref().expect("stage 2 set above"))
    }

    fn factors(&mut self) -> Result<PowerFactors, CliError> {
        if self.factors.is_none() {
            let y = match self.settings.factors.0.clone() {
                Some(path) => read_factors(&path)?,
                None => {
                    let sol = self.stage2()?.clone();
                    sol.power_factors(self.model.as_ref().expect("model built"), &self.scenario)
                }
            };
            self.factors = Some(y);
        }
        Ok(self.factors.clone().expect("factors set above"))
    }

    fn write_scenario(&mut self) -> Result<(), CliError> {
        let dir = self.out().join("scenario");
        write_scenario(&self.scenario, &dir, WriteOptions { links: self.settings.links })
            .map_err(data("writing scenario"))
    }

    fn write_coverage(&mut self) -> Result<(), CliError> {
        let dir = subdir(self.out(), "eval")?;
        let s = &self.scenario;
        let full = PowerFactors::full();
        write(&dir.join("coverage_current.csv"), coverage_report(s, &full, CoverageMode::FixedServer).to_csv().as_bytes())?;
        write(&dir.join("coverage_current_free.csv"), coverage_report(s, &full, CoverageMode::FreeServer).to_csv().as_bytes())?;
        write(&dir.join("scenario_summary.csv"), scenario_summary_csv(&scenario_summary(s)).as_bytes())?;
        let mut z = format!("{PROTECTED_CSV_HEADER}\n");
        for p in self.protected() {
            z.push_str(&format!("{},{}\n", p.receiver, p.network));
        }
        log::info!("protected pairs: {}", self.protected().len());
        write(&dir.join("protected_pairs.csv"), z.as_bytes())
    }

    fn write_model(&mut self) -> Result<(), CliError> {
        let dir = subdir(self.out(), "models")?;
        let text = write_lp(self.model()?);
        write(&dir.join("model.lp"), text.as_bytes())
    }

    fn write_stage1(&mut self) -> Result<(), CliError> {
        let dir = subdir(self.out(), "solutions")?;
        let sol = self.stage1()?.clone();
        let m = self.model.as_ref().expect("model built");
        write(&dir.join("stage1.sol"), write_solution(m, &sol).as_bytes())?;
        let z = self.protected.as_ref().map_or(0, |z| z.len());
        write(&dir.join("stage1_summary.txt"), stage1_summary(m, &sol, z).as_bytes())
    }

    fn write_stage2(&mut self) -> Result<(), CliError> {
        let dir = subdir(self.out(), "solutions")?;
        let second = self.stage2()?.clone();
        let first = self.stage1.as_ref().expect("stage 2 needs stage 1");
        let m = self.model.as_ref().expect("model built");
        let s = &self.scenario;
        write(&dir.join("stage2.sol"), write_solution(m, &second).as_bytes())?;
        let before: f64 = s.transmitters().iter().filter(|t| t.optimizable).map(|t| t.power_w).sum();
        let summary = format!(
            "status = {}\nuncovered_population = {}\nradiated_power_before_w = {}\nradiated_power_after_w = {}\niterations = {}\n",
            second.status,
            first.objective,
            before,
            second.radiated_power(m, s),
            second.iterations
        );
        write(&dir.join("stage2_summary.txt"), summary.as_bytes())?;
        let y = second.power_factors(m, s);
        write(&dir.join("power_factors.csv"), factors_csv(&y).as_bytes())
    }

    fn write_eval(&mut self) -> Result<(), CliError> {
        let y = self.factors()?;
        let dir = subdir(self.out(), "eval")?;
        let s = &self.scenario;
        let e = evaluate_solution(s, &y).map_err(data("power factors"))?;
        log::info!(
            "power {:+.2}%, served domestic {:+}, foreign {:+}, {} shut down",
            e.delta_power_percent,
            e.fixed_server.delta_domestic(),
            e.fixed_server.delta_foreign(),
            e.shutdown_count
        );
        write_evaluation(s, &e, self.settings.efficiency, self.settings.top_n, &dir).map_err(data("writing evaluation"))?;
        write(&dir.join("coverage_after.csv"), coverage_report(s, &y, CoverageMode::FixedServer).to_csv().as_bytes())?;
        write(&dir.join("coverage_after_free.csv"), coverage_report(s, &y, CoverageMode::FreeServer).to_csv().as_bytes())
    }

    fn write_maps(&mut self) -> Result<(), CliError> {
        let y = self.factors()?;
        let dir = subdir(self.out(), "maps")?;
        let s = &self.scenario;
        let grid = GridSpec::covering(s, self.settings.pixel_deg).map_err(data("map grid"))?;
        let colors = ColorTable::default();
        let full = PowerFactors::full();
        let admins: BTreeSet<&str> = s.networks().iter().map(|n| n.admin.as_str()).collect();
        for admin in &admins {
            for (label, factors) in [("before", &full), ("after", &y)] {
                let filter = MapFilter::Admin(admin.to_string());
                match render_service_map(s, factors, &filter, &grid, &colors) {
                    Ok(r) => save_map(&dir, &format!("service_{admin}_{label}"), &r)?,
                    Err(e) => log::warn!("service map for {admin} skipped: {e}"),
                }
            }
        }
        for admin in s.domestic_admins() {
            for (label, factors) in [("before", &full), ("after", &y)] {
                match render_interference_map(s, factors, admin, &grid, &colors) {
                    Ok(r) => save_map(&dir, &format!("interference_{admin}_{label}"), &r)?,
                    Err(e) => log::warn!("interference map for {admin} skipped: {e}"),
                }
            }
        }
        Ok(())
    }
}

fn save_map(dir: &Path, stem: &str, r: &Raster) -> Result<(), CliError> {
    write(&dir.join(format!("{stem}.ppm")), &r.to_ppm())?;
    write(&dir.join(format!("{stem}.csv")), r.to_csv().as_bytes())
}

fn stage1_summary(m: &ModelInstance, sol: &Solution, protected: usize) -> String {
    let gap = sol.gap();
    let gap = if gap.is_finite() { format!("{gap:.6}") } else { "inf".to_string() };
    format!(
        "model = {}\nstatus = {}\nobjective = {}\nlower_bound = {}\ngap_percent = {}\nnodes = {}\niterations = {}\n\
         variables = {}\nbinaries = {}\nrows = {}\nblocks = {}\nprotected_pairs = {}\n",
        m.variant,
        sol.status,
        sol.objective,
        sol.lower_bound,
        gap,
        sol.nodes,
        sol.iterations,
        m.variables.len(),
        m.binaries(),
        m.rows.len(),
        m.blocks().len(),
        protected
    )
}

pub fn factors_csv(y: &PowerFactors) -> String {
    let mut out = format!("{FACTORS_CSV_HEADER}\n");
    for (t, v) in y.iter() {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

pub fn read_factors(path: &Path) -> Result<PowerFactors, CliError> {
    let context = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(data(&context))?;
    let headers = reader.headers().map_err(data(&context))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != FACTORS_CSV_HEADER {
        return Err(CliError::Data(format!("{context}: expected header {FACTORS_CSV_HEADER}")));
    }
    let mut y = PowerFactors::full();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(data(&context))?;
        let line = i + 2;
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let t: u32 = field(0)
            .parse()
            .map_err(|_| CliError::Data(format!("{context}:{line}: bad transmitter id '{}'", field(0))))?;
        let v: f64 = field(1)
            .parse()
            .map_err(|_| CliError::Data(format!("{context}:{line}: bad power factor '{}'", field(1))))?;
        y.set(TxId(t), v);
    }
    Ok(y)
}
