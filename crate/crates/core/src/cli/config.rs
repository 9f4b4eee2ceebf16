//! Experiment configuration files.
//!
//! A config is TOML with an optional `[integrator]` table and one or more
//! `[[experiment]]` tables. Unknown keys are rejected. [`Config::resolve`]
//! fills every default so the serialized result reruns identically.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::lindblad::Tolerances;
use crate::models::{default_truncation, ModelParams};
use crate::squeezing::{squeezed_vacuum_state, SqueezingParams, TAIL_THRESHOLD};

pub const DEFAULT_SAMPLES: usize = 400;

/// Extra levels added on top of the analytic tail estimate for the numerically
/// evolved squeezing run.
const SQUEEZING_DIM_MARGIN: usize = 20;
const SQUEEZING_DIM_LIMIT: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(rename = "experiment", default)]
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
}

fn default_rel_tol() -> f64 {
    Tolerances::default().rel_tol
}

fn default_abs_tol() -> f64 {
    Tolerances::default().abs_tol
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
        }
    }
}

impl IntegratorConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
        }
    }

    /// `--tol` override: relative tolerance, absolute two decades below.
    pub fn with_rel_tol(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Strong,
    Weak,
    Squeezing,
}

impl Regime {
    pub fn time_column(self) -> &'static str {
        match self {
            Regime::Squeezing => "Jg_t",
            _ => "gt",
        }
    }

    pub fn allowed_observables(self) -> &'static [&'static str] {
        match self {
            Regime::Strong => &["n_a", "n_b"],
            Regime::Weak => &["n_a", "n_c", "n_d", "W", "E_N"],
            Regime::Squeezing => &["n_f", "n_f_numeric"],
        }
    }

    fn atomic_modes(self) -> usize {
        match self {
            Regime::Strong => 1,
            Regime::Weak => 2,
            Regime::Squeezing => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub regime: Regime,
    /// End of the time column (`g t` or `J_g t`).
    pub t_final: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    pub observables: Vec<String>,
    /// CSV file name relative to the output directory; defaults to `<name>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<SqueezingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<SteadyStateRequest>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// Initial state: explicit occupations in layout order, or a dark-family member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupations: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_atoms: u64,
    pub kappa: f64,
    #[serde(default)]
    pub detuning: f64,
    #[serde(default)]
    pub chi: f64,
    #[serde(default = "unit")]
    pub g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atomic_dim: Option<usize>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezingSection {
    #[serde(default = "unit")]
    pub j_g: f64,
    pub ugg_n: f64,
    /// Fock levels for `n_f_numeric`; chosen from the analytic tail when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyStateRequest {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_tol_ss")]
    pub tol: f64,
}

fn default_t_max() -> f64 {
    crate::lindblad::DEFAULT_T_MAX
}

fn default_tol_ss() -> f64 {
    crate::lindblad::DEFAULT_TOL_SS
}

impl Default for SteadyStateRequest {
    fn default() -> Self {
        Self {
            t_max: default_t_max(),
            tol: default_tol_ss(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types always serialize")
    }

    /// Validates every experiment and fills all defaults.
    pub fn resolve(&self) -> Result<Config, CliError> {
        if self.experiments.is_empty() {
            return Err(CliError::usage("config defines no [[experiment]]"));
        }
        let tol = self.integrator;
        if !(tol.rel_tol > 0.0 && tol.abs_tol > 0.0 && tol.rel_tol.is_finite() && tol.abs_tol.is_finite()) {
            return Err(CliError::usage("integrator: rel_tol and abs_tol must be positive"));
        }
        let mut names = std::collections::BTreeSet::new();
        let mut outputs = std::collections::BTreeSet::new();
        let mut experiments = Vec::with_capacity(self.experiments.len());
        for e in &self.experiments {
            let r = e.resolve()?;
            if !names.insert(r.name.clone()) {
                return Err(CliError::usage(format!("experiment name '{}' used twice", r.name)));
            }
            if !outputs.insert(r.output.clone()) {
                return Err(CliError::usage(format!(
                    "experiment '{}': output {:?} already used by another experiment",
                    r.name, r.output
                )));
            }
            experiments.push(r);
        }
        Ok(Config {
            integrator: self.integrator,
            experiments,
        })
    }
}

impl ExperimentConfig {
    fn field_error(&self, field: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::usage(format!("experiment '{}': {field}: {msg}", self.name))
    }

    pub fn output_file(&self) -> String {
        self.output.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }

    /// Total excitation carried by the initial state.
    pub fn initial_excitation(&self) -> usize {
        match &self.initial {
            Some(InitialSpec {
                occupations: Some(o), ..
            }) => o.iter().sum(),
            Some(InitialSpec { dark: Some(n), .. }) => *n,
            _ => 0,
        }
    }

    pub fn model_params(&self) -> Option<ModelParams> {
        let m = self.model.as_ref()?;
        Some(ModelParams {
            g: m.g,
            n_atoms: m.n_atoms,
            detuning: m.detuning,
            chi: m.chi,
            kappa: m.kappa,
            photon_dim: m.photon_dim?,
            atomic_dim: m.atomic_dim?,
        })
    }

    pub fn squeezing_params(&self) -> Option<SqueezingParams> {
        self.squeezing.as_ref().map(|s| SqueezingParams {
            j_g: s.j_g,
            ugg_n: s.ugg_n,
        })
    }

    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::usage(format!(
                "experiment name {:?} must be nonempty and contain no path separators",
                self.name
            )));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(self.field_error("t_final", format!("must be positive, got {}", self.t_final)));
        }
        if self.n_samples < 2 {
            return Err(self.field_error("n_samples", "must be at least 2"));
        }
        if self.observables.is_empty() {
            return Err(self.field_error("observables", "list is empty"));
        }
        let allowed = self.regime.allowed_observables();
        for (i, o) in self.observables.iter().enumerate() {
            if !allowed.contains(&o.as_str()) {
                return Err(self.field_error(
                    "observables",
                    format!("'{o}' is not available in this regime (allowed: {allowed:?})"),
                ));
            }
            if self.observables[..i].contains(o) {
                return Err(self.field_error("observables", format!("'{o}' listed twice")));
            }
        }
        let output = self.output_file();
        if output.is_empty() || output.contains(['/', '\\']) || output.starts_with('.') {
            return Err(self.field_error("output", "must be a plain file name"));
        }
        let mut out = self.clone();
        out.output = Some(output);
        match self.regime {
            Regime::Strong | Regime::Weak => {
                if self.squeezing.is_some() {
                    return Err(self.field_error("squeezing", "only valid in the squeezing regime"));
                }
                out.model = Some(self.resolve_model()?);
                out.initial = Some(self.resolve_initial()?);
                if let Some(ss) = &self.steady_state {
                    if !(ss.t_max > 0.0 && ss.tol > 0.0) {
                        return Err(self.field_error("steady_state", "t_max and tol must be positive"));
                    }
                }
            }
            Regime::Squeezing => {
                if self.model.is_some() {
                    return Err(self.field_error("model", "not valid in the squeezing regime"));
                }
                if self.initial.is_some() {
                    return Err(self.field_error("initial", "the squeezing regime always starts from vacuum"));
                }
                if self.steady_state.is_some() {
                    return Err(self.field_error("steady_state", "unitary squeezing dynamics has no steady state"));
                }
                out.squeezing = Some(self.resolve_squeezing()?);
            }
        }
        Ok(out)
    }

    fn resolve_initial(&self) -> Result<InitialSpec, CliError> {
        let modes = self.regime.atomic_modes() + 1;
        let init = self
            .initial
            .clone()
            .ok_or_else(|| self.field_error("initial", "missing (give occupations or dark)"))?;
        match (&init.occupations, init.dark) {
            (Some(o), None) => {
                if o.len() != modes {
                    return Err(self.field_error(
                        "initial.occupations",
                        format!("expected {modes} entries (photon first), got {}", o.len()),
                    ));
                }
            }
            (None, Some(n)) => {
                if self.regime == Regime::Strong && n != 0 {
                    return Err(self.field_error(
                        "initial.dark",
                        "the strong-tunneling dark state is the vacuum; only dark = 0 is defined",
                    ));
                }
            }
            _ => {
                return Err(self.field_error("initial", "give exactly one of occupations or dark"));
            }
        }
        Ok(init)
    }

    fn resolve_model(&self) -> Result<ModelSection, CliError> {
        let m = self
            .model
            .clone()
            .ok_or_else(|| self.field_error("model", "missing [experiment.model] table"))?;
        let exc = self.initial_excitation();
        let default_dim = default_truncation(exc, m.chi);
        let resolved = ModelSection {
            photon_dim: Some(m.photon_dim.unwrap_or(default_dim)),
            atomic_dim: Some(m.atomic_dim.unwrap_or(default_dim)),
            ..m
        };
        let params = ModelParams {
            g: resolved.g,
            n_atoms: resolved.n_atoms,
            detuning: resolved.detuning,
            chi: resolved.chi,
            kappa: resolved.kappa,
            photon_dim: resolved.photon_dim.unwrap_or(default_dim),
            atomic_dim: resolved.atomic_dim.unwrap_or(default_dim),
        };
        let check = match self.regime {
            Regime::Strong => params.validate_strong(),
            _ => params.validate_weak(),
        };
        check.map_err(|e| self.field_error("model", e))?;
        if let Some(o) = self.initial.as_ref().and_then(|i| i.occupations.as_ref()) {
            let dims = [params.photon_dim, params.atomic_dim, params.atomic_dim];
            for (k, (&occ, &dim)) in o.iter().zip(dims.iter()).enumerate() {
                if occ >= dim {
                    return Err(self.field_error(
                        "initial.occupations",
                        format!("entry {k} = {occ} does not fit truncation dimension {dim}"),
                    ));
                }
            }
        }
        if let Some(n) = self.initial.as_ref().and_then(|i| i.dark) {
            if n >= params.atomic_dim {
                return Err(self.field_error(
                    "initial.dark",
                    format!("n = {n} does not fit atomic_dim {}", params.atomic_dim),
                ));
            }
        }
        Ok(resolved)
    }

    fn resolve_squeezing(&self) -> Result<SqueezingSection, CliError> {
        let s = self
            .squeezing
            .clone()
            .ok_or_else(|| self.field_error("squeezing", "missing [experiment.squeezing] table"))?;
        let params = SqueezingParams::new(s.j_g, s.ugg_n).map_err(|e| self.field_error("squeezing", e))?;
        let dim = match s.dim {
            Some(d) if d < 4 => return Err(self.field_error("squeezing.dim", "must be at least 4")),
            Some(d) => d,
            None => auto_squeezing_dim(&params).map_err(|e| self.field_error("squeezing.dim", e))?,
        };
        Ok(SqueezingSection { dim: Some(dim), ..s })
    }
}

/// Smallest dimension (in steps of 10) whose dropped tail stays below the
/// guard at the squeezing maximum, plus a safety margin.
fn auto_squeezing_dim(params: &SqueezingParams) -> Result<usize, String> {
    let w = params.bogoliubov_frequency();
    let t_peak = std::f64::consts::FRAC_PI_2 / w;
    let mut dim = 10;
    while dim <= SQUEEZING_DIM_LIMIT {
        match squeezed_vacuum_state(params, t_peak, dim) {
            Ok(_) => return Ok(dim + SQUEEZING_DIM_MARGIN),
            Err(crate::Error::Truncation { .. }) => dim += 10,
            Err(e) => return Err(e.to_string()),
        }
    }
    Err(format!(
        "no dimension up to {SQUEEZING_DIM_LIMIT} keeps the tail below {TAIL_THRESHOLD:.0e}"
    ))
}
