//! Command-line front end: figure presets, config-driven runs, parameter
//! sweeps and dark-state verification.
//!
//! Exit codes: 0 success, 2 usage or validation, 3 numeric or integration
//! failure, 4 I/O.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::darkstates::{dark_state_weak, verify_dark};
use crate::entanglement::{
    dark_state_entropy_formula, logarithmic_negativity, partial_trace_with_layout, von_neumann_entropy, witness,
    BipartiteSplit,
};
use crate::lindblad::lindblad_rhs;
use crate::models::{build_weak_tunneling, cavity_decay, ModelParams, LEFT_WELL, RIGHT_WELL};

use config::{Config, IntegratorConfig};
use run::{run_experiment, summarize, ResultTable, Stat};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Stationarity threshold used by `dark-verify`.
pub const DARK_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Numeric,
    Io,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Numeric,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Numeric => EXIT_NUMERIC,
            ErrorKind::Io => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        use crate::Error::*;
        let kind = match e {
            Domain(_) | Resource(_) => ErrorKind::Usage,
            Integration { .. } | NonConvergence { .. } | Numeric(_) | Truncation { .. } => ErrorKind::Numeric,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dwbec", version, about = "Dark-state dynamics of a cavity-coupled double-well condensate")]
pub struct Cli {
    /// Directory receiving CSV files and manifests.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Integrator relative tolerance; the absolute tolerance is set 100x smaller.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a figure preset: fig2, fig3, fig4, fig5 or figA.
    Simulate { preset: String },
    /// Run every experiment of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Vary one parameter of an experiment and tabulate summary statistics.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `param=v1,v2,...`; param is one of n_atoms, kappa, detuning, chi, g,
        /// n (initial excitation in the first atomic mode), j_g, ugg_n,
        /// t_final, n_samples.
        #[arg(long)]
        axis: String,
        /// Experiment to sweep when the config holds several.
        #[arg(long)]
        experiment: Option<String>,
        /// Comma-separated statistics: final, max, min, t_sat, steady.
        #[arg(long, default_value = "final,t_sat")]
        stats: String,
        /// Override the number of output samples of every sweep point.
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Check stationarity and entanglement of the dark family n = 0..n_max.
    DarkVerify {
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 5_000)]
        n_atoms: u64,
        #[arg(long, default_value_t = 100.0)]
        kappa: f64,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn integrator_override(cli: &Cli, base: IntegratorConfig) -> Result<IntegratorConfig, CliError> {
    match cli.tol {
        None => Ok(base),
        Some(t) if t.is_finite() && t > 0.0 => Ok(IntegratorConfig::with_rel_tol(t)),
        Some(t) => Err(CliError::usage(format!("--tol must be positive, got {t}"))),
    }
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { preset } => {
            let config = presets::preset(preset).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown preset '{preset}' (available: {})",
                    presets::PRESET_NAMES.join(", ")
                ))
            })?;
            run_and_write(cli, config, preset)
        }
        Command::Run { config } => {
            let parsed = load_config(config)?;
            let stem = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into());
            run_and_write(cli, parsed, &stem)
        }
        Command::Sweep {
            config,
            axis,
            experiment,
            stats,
            n_samples,
        } => {
            let parsed = load_config(config)?;
            let request = SweepRequest {
                axis: Axis::parse(axis)?,
                experiment: experiment.clone(),
                stats: parse_stats(stats)?,
                n_samples: *n_samples,
            };
            let integrator = integrator_override(cli, parsed.integrator)?;
            let pool = thread_pool(cli.workers)?;
            let table = pool.install(|| sweep(&parsed, &integrator, &request))?;
            let path = cli.out_dir.join(format!("{}_sweep_{}.csv", table.base_name, table.param));
            output::write_atomic(&path, &table.render())?;
            println!("{}", path.display());
            Ok(())
        }
        Command::DarkVerify { n_max, n_atoms, kappa } => dark_verify(cli, *n_max, *n_atoms, *kappa),
    }
}

pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Config::parse(&text).map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message)))
}

/// Resolves a config and runs its experiments in parallel. Results keep the
/// config order.
pub fn run_config(config: &Config) -> Result<(Config, Vec<ResultTable>), CliError> {
    let resolved = config.resolve()?;
    let tables = resolved
        .experiments
        .par_iter()
        .map(|e| run_experiment(e, &resolved.integrator).map_err(|err| {
            let mut c = CliError::from(err);
            c.message = format!("experiment '{}': {}", e.name, c.message);
            c
        }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((resolved, tables))
}

fn run_and_write(cli: &Cli, mut config: Config, manifest_stem: &str) -> Result<(), CliError> {
    config.integrator = integrator_override(cli, config.integrator)?;
    let pool = thread_pool(cli.workers)?;
    let (resolved, tables) = pool.install(|| run_config(&config))?;
    let mut written = Vec::new();
    for t in &tables {
        let path = cli.out_dir.join(t.experiment.output_file());
        output::write_atomic(&path, &output::render_csv(t))?;
        if let run::Health::Open(d) = &t.health {
            for w in &d.warnings {
                eprintln!("warning: {}: {w}", t.experiment.name);
            }
        }
        println!("{}", path.display());
        written.push(path);
    }
    let manifest = cli.out_dir.join(format!("{manifest_stem}.manifest.toml"));
    output::write_atomic(&manifest, &output::render_manifest(&resolved, &written))?;
    println!("{}", manifest.display());
    Ok(())
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: String,
    pub values: Vec<String>,
}

pub const SWEEP_PARAMS: [&str; 10] = [
    "n_atoms", "kappa", "detuning", "chi", "g", "n", "j_g", "ugg_n", "t_final", "n_samples",
];

impl Axis {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let (param, values) = spec
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--axis expects param=v1,v2,..., got '{spec}'")))?;
        let param = param.trim().to_string();
        if !SWEEP_PARAMS.contains(&param.as_str()) {
            return Err(CliError::usage(format!(
                "unknown sweep parameter '{param}' (available: {})",
                SWEEP_PARAMS.join(", ")
            )));
        }
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(CliError::usage("--axis lists no values"));
        }
        Ok(Self { param, values })
    }
}

pub fn parse_stats(spec: &str) -> Result<Vec<Stat>, CliError> {
    let stats = spec
        .split(',')
        .map(|s| {
            Stat::parse(s.trim()).ok_or_else(|| {
                CliError::usage(format!("unknown statistic '{s}' (available: final, max, min, t_sat, steady)"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if stats.is_empty() {
        return Err(CliError::usage("--stats lists no statistics"));
    }
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct SweepRequest {
    pub axis: Axis,
    pub experiment: Option<String>,
    pub stats: Vec<Stat>,
    pub n_samples: Option<usize>,
}

/// One row per axis value.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub base_name: String,
    pub param: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub points: Vec<Config>,
}

impl SweepTable {
    pub fn render(&self) -> String {
        let mut out = format!("# dwbec {}\n# sweep of '{}' over {}\n", output::VERSION, self.base_name, self.param);
        for (k, p) in self.points.iter().enumerate() {
            out.push_str(&format!("# point {k}:\n"));
            for line in p.to_toml().lines().filter(|l| !l.is_empty()) {
                out.push_str(&format!("#   {line}\n"));
            }
        }
        out.push_str(&output::render_data(&self.columns, &self.rows));
        out
    }
}

fn parse_number<T: std::str::FromStr>(param: &str, v: &str) -> Result<T, CliError> {
    v.parse::<T>()
        .map_err(|_| CliError::usage(format!("sweep value '{v}' is not valid for '{param}'")))
}

/// Applies one axis value to an unresolved experiment.
fn apply_axis(exp: &mut config::ExperimentConfig, param: &str, value: &str) -> Result<f64, CliError> {
    let missing = |section: &str| CliError::usage(format!("sweep parameter '{param}' needs a [{section}] table"));
    let x: f64 = match param {
        "n_atoms" => {
            let n: u64 = parse_number(param, value)?;
            exp.model.as_mut().ok_or_else(|| missing("model"))?.n_atoms = n;
            n as f64
        }
        "n" => {
            let n: usize = parse_number(param, value)?;
            let modes = match exp.regime {
                config::Regime::Strong => 2,
                config::Regime::Weak => 3,
                config::Regime::Squeezing => {
                    return Err(CliError::usage("sweep parameter 'n' needs an open-system regime"))
                }
            };
            let mut occ = vec![0; modes];
            occ[1] = n;
            exp.initial = Some(config::InitialSpec {
                occupations: Some(occ),
                dark: None,
            });
            n as f64
        }
        "n_samples" => {
            let n: usize = parse_number(param, value)?;
            exp.n_samples = n;
            n as f64
        }
        _ => {
            let v: f64 = parse_number(param, value)?;
            match param {
                "kappa" => exp.model.as_mut().ok_or_else(|| missing("model"))?.kappa = v,
                "detuning" => exp.model.as_mut().ok_or_else(|| missing("model"))?.detuning = v,
                "chi" => exp.model.as_mut().ok_or_else(|| missing("model"))?.chi = v,
                "g" => exp.model.as_mut().ok_or_else(|| missing("model"))?.g = v,
                "j_g" => exp.squeezing.as_mut().ok_or_else(|| missing("squeezing"))?.j_g = v,
                "ugg_n" => exp.squeezing.as_mut().ok_or_else(|| missing("squeezing"))?.ugg_n = v,
                "t_final" => exp.t_final = v,
                _ => unreachable!("parameter list checked in Axis::parse"),
            }
            v
        }
    };
    Ok(x)
}

/// Runs every axis point of one experiment concurrently.
pub fn sweep(config: &Config, integrator: &IntegratorConfig, request: &SweepRequest) -> Result<SweepTable, CliError> {
    let base = match &request.experiment {
        Some(name) => config
            .experiments
            .iter()
            .find(|e| &e.name == name)
            .ok_or_else(|| CliError::usage(format!("config has no experiment named '{name}'")))?,
        None => match config.experiments.as_slice() {
            [only] => only,
            [] => return Err(CliError::usage("config defines no [[experiment]]")),
            _ => return Err(CliError::usage("config holds several experiments; choose one with --experiment")),
        },
    };
    if request.stats.contains(&Stat::Steady) && base.steady_state.is_none() {
        return Err(CliError::usage(format!(
            "statistic 'steady' needs a steady_state table in experiment '{}'",
            base.name
        )));
    }
    let mut points = Vec::with_capacity(request.axis.values.len());
    let mut axis_values = Vec::with_capacity(request.axis.values.len());
    for (k, v) in request.axis.values.iter().enumerate() {
        let mut exp = base.clone();
        // dimensions and output name are re-derived for every point
        if let Some(m) = exp.model.as_mut() {
            m.photon_dim = base.model.as_ref().and_then(|b| b.photon_dim);
            m.atomic_dim = base.model.as_ref().and_then(|b| b.atomic_dim);
        }
        let x = apply_axis(&mut exp, &request.axis.param, v)?;
        if let Some(n) = request.n_samples {
            exp.n_samples = n;
        }
        exp.name = format!("{}_{}{}", base.name, request.axis.param, k);
        exp.output = None;
        let point = Config {
            integrator: *integrator,
            experiments: vec![exp],
        }
        .resolve()?;
        points.push(point);
        axis_values.push(x);
    }
    let tables = points
        .par_iter()
        .map(|p| run_experiment(&p.experiments[0], &p.integrator).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;

    let mut columns = vec![request.axis.param.clone()];
    for obs in &base.observables {
        for s in &request.stats {
            columns.push(format!("{obs}_{}", s.name()));
        }
    }
    let rows = tables
        .iter()
        .zip(&axis_values)
        .map(|(t, &x)| {
            let mut row = vec![x];
            for obs in &base.observables {
                for &s in &request.stats {
                    row.push(summarize(t, obs, s));
                }
            }
            row
        })
        .collect();
    Ok(SweepTable {
        base_name: base.name.clone(),
        param: request.axis.param.clone(),
        columns,
        rows,
        points,
    })
}

/// Per-member results of `dark-verify`.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkCheck {
    pub n: usize,
    pub hamiltonian_residual: f64,
    pub lindblad_residual: f64,
    pub witness: f64,
    pub log_negativity: f64,
    pub entropy: f64,
    pub entropy_formula: f64,
}

/// Stationarity and entanglement of `|D_n⟩` for `n = 0..=n_max` under the
/// resonant weak-tunneling model.
pub fn dark_family_checks(n_max: usize, n_atoms: u64, kappa: f64) -> crate::Result<Vec<DarkCheck>> {
    let params = ModelParams::new(n_atoms, 0.0, kappa, n_max);
    let layout = params.weak_layout()?;
    let h = build_weak_tunneling(&params, &layout)?;
    let jump = cavity_decay(&params, &layout)?;
    (0..=n_max)
        .map(|n| {
            let d = dark_state_weak(n, &layout)?.state;
            let rho = d.to_density();
            let lindblad_residual = lindblad_rhs(&h, std::slice::from_ref(&jump), &rho)?.norm();
            let (rho_cd, cd) = partial_trace_with_layout(&rho, &layout, &[LEFT_WELL, RIGHT_WELL])?;
            let rho_c = crate::entanglement::partial_trace(&rho_cd, &cd, &[LEFT_WELL])?;
            Ok(DarkCheck {
                n,
                hamiltonian_residual: verify_dark(&h, &d)?,
                lindblad_residual,
                witness: witness(&rho_cd, &cd)?,
                log_negativity: logarithmic_negativity(&rho_cd, &BipartiteSplit::wells(cd.clone())?)?,
                entropy: von_neumann_entropy(&rho_c)?,
                entropy_formula: dark_state_entropy_formula(n as u32),
            })
        })
        .collect()
}

fn dark_verify(cli: &Cli, n_max: usize, n_atoms: u64, kappa: f64) -> Result<(), CliError> {
    let checks = dark_family_checks(n_max, n_atoms, kappa)?;
    let columns: Vec<String> = [
        "n",
        "hamiltonian_residual",
        "lindblad_residual",
        "witness",
        "log_negativity",
        "entropy",
        "entropy_formula",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<f64>> = checks
        .iter()
        .map(|c| {
            vec![
                c.n as f64,
                c.hamiltonian_residual,
                c.lindblad_residual,
                c.witness,
                c.log_negativity,
                c.entropy,
                c.entropy_formula,
            ]
        })
        .collect();
    let mut text = format!(
        "# dwbec {}\n# dark-verify n_max = {n_max}, N = {n_atoms}, kappa = {kappa}, detuning = 0, chi = 0\n",
        output::VERSION
    );
    text.push_str(&output::render_data(&columns, &rows));
    let path = cli.out_dir.join("dark_verify.csv");
    output::write_atomic(&path, &text)?;

    println!("{:>3}  {:>12}  {:>12}  {:>10}  {:>10}  {:>10}", "n", "|H D|", "|L rho|_F", "W", "E_N", "S_c");
    for c in &checks {
        println!(
            "{:>3}  {:>12.3e}  {:>12.3e}  {:>10.6}  {:>10.6}  {:>10.6}",
            c.n, c.hamiltonian_residual, c.lindblad_residual, c.witness, c.log_negativity, c.entropy
        );
    }
    println!("{}", path.display());
    let worst = checks.iter().map(|c| c.lindblad_residual).fold(0.0, f64::max);
    if worst >= DARK_RESIDUAL_TOL {
        return Err(CliError::numeric(format!(
            "dark family not stationary: max Lindblad residual {worst:.3e} >= {DARK_RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(())
}
