//! Execution of resolved experiments.

use std::sync::Arc;

use crate::darkstates::dark_state_weak;
use crate::entanglement::{logarithmic_negativity, partial_trace_with_layout, witness, BipartiteSplit};
use crate::fock::{restrict_to_excitation_sector, DensityMatrix, ModeLayout, SectorMap, StateVector};
use crate::lindblad::{
    evolve, evolve_pure, evolve_to_convergence, sample_grid, ConvergenceOptions, Diagnostics, EvolutionSpec,
    LeakageProbe, Observable, StepStats, Tolerances,
};
use crate::models::{
    build_strong_tunneling, build_weak_tunneling, cavity_decay, LEFT_WELL, RIGHT_WELL,
};
use crate::squeezing::{build_squeezing_hamiltonian, mean_asymmetric_excitation};
use crate::Result;

use super::config::{ExperimentConfig, IntegratorConfig, Regime};

/// Output of one experiment.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub experiment: ExperimentConfig,
    pub integrator: IntegratorConfig,
    /// Time column first.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub health: Health,
    pub steady: Option<SteadyResult>,
}

impl ResultTable {
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == label)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }
}

/// Numerical health of a run.
#[derive(Debug, Clone)]
pub enum Health {
    Open(Diagnostics),
    Unitary {
        max_norm_drift: f64,
        steps: Option<StepStats>,
        dim: usize,
    },
}

/// Steady state reached by evolve-to-convergence, on the full layout.
#[derive(Debug, Clone)]
pub struct SteadyResult {
    pub time: f64,
    pub residual: f64,
    pub values: Vec<(String, f64)>,
    pub state: DensityMatrix,
    pub layout: ModeLayout,
}

/// Runs one resolved experiment.
pub fn run_experiment(exp: &ExperimentConfig, integrator: &IntegratorConfig) -> Result<ResultTable> {
    match exp.regime {
        Regime::Strong | Regime::Weak => run_open(exp, integrator),
        Regime::Squeezing => run_squeezing(exp, integrator),
    }
}

fn initial_state(exp: &ExperimentConfig, layout: &ModeLayout) -> Result<StateVector> {
    let init = exp.initial.as_ref().expect("resolved experiment has an initial state");
    match (&init.occupations, init.dark) {
        (Some(occ), _) => layout.basis_state(occ),
        (None, Some(n)) if exp.regime == Regime::Weak => Ok(dark_state_weak(n, layout)?.state),
        _ => layout.basis_state(&vec![0; layout.num_modes()]),
    }
}

/// Sector-restricted observables for the open-system regimes.
fn open_observables(
    exp: &ExperimentConfig,
    layout: &ModeLayout,
    sector: &SectorMap,
) -> Result<Vec<(String, Observable)>> {
    let mut out = Vec::with_capacity(exp.observables.len());
    for name in &exp.observables {
        let obs = match name.as_str() {
            "W" => {
                let (layout, sector) = (layout.clone(), sector.clone());
                Observable::Functional(Arc::new(move |rho: &DensityMatrix| {
                    let full = sector.embed_density(rho)?;
                    let (rho_cd, cd) = partial_trace_with_layout(&full, &layout, &[LEFT_WELL, RIGHT_WELL])?;
                    witness(&rho_cd, &cd)
                }))
            }
            "E_N" => {
                let (layout, sector) = (layout.clone(), sector.clone());
                Observable::Functional(Arc::new(move |rho: &DensityMatrix| {
                    let full = sector.embed_density(rho)?;
                    let (rho_cd, cd) = partial_trace_with_layout(&full, &layout, &[LEFT_WELL, RIGHT_WELL])?;
                    logarithmic_negativity(&rho_cd, &BipartiteSplit::wells(cd)?)
                }))
            }
            other => {
                let label = other.strip_prefix("n_").expect("validated observable name");
                Observable::Expectation(sector.project(&layout.number(label)?)?)
            }
        };
        out.push((name.clone(), obs));
    }
    Ok(out)
}

fn run_open(exp: &ExperimentConfig, integrator: &IntegratorConfig) -> Result<ResultTable> {
    let params = exp.model_params().expect("resolved experiment has model dimensions");
    let layout = match exp.regime {
        Regime::Strong => params.strong_layout()?,
        _ => params.weak_layout()?,
    };
    let h_full = match exp.regime {
        Regime::Strong => build_strong_tunneling(&params, &layout)?,
        _ => build_weak_tunneling(&params, &layout)?,
    };
    let exc = exp.initial_excitation();
    let (h, sector) = restrict_to_excitation_sector(&layout, &h_full, exc as i64)?;
    let (jump, kappa) = cavity_decay(&params, &layout)?;
    let collapse = vec![(sector.project(&jump)?, kappa)];
    let psi = sector.project_state(&initial_state(exp, &layout)?)?;
    let rho0 = psi.to_density();

    // Probes are only meaningful where a truncation cuts into the sector.
    let mut probes = Vec::new();
    for m in layout.modes() {
        if m.dim - 1 < exc {
            probes.push(LeakageProbe::top_level(&sector, &m.label)?);
        }
    }
    let tolerances = integrator.tolerances();
    let spec = EvolutionSpec::new(h.clone(), collapse.clone(), exp.t_final, exp.n_samples)
        .with_tolerances(tolerances)
        .with_excitation(sector.project(&layout.total_number())?)
        .with_leakage_probes(probes);
    let observables = open_observables(exp, &layout, &sector)?;
    let traj = evolve(&rho0, &spec, &observables)?;

    let steady = match &exp.steady_state {
        None => None,
        Some(req) => {
            let options = ConvergenceOptions {
                tol_ss: req.tol,
                t_max: req.t_max,
                tolerances: steady_tolerances(tolerances, req.tol),
            };
            let (state, time, residual) = evolve_to_convergence(&h, &collapse, &rho0, &options)?;
            let values = observables
                .iter()
                .map(|(name, obs)| Ok((name.clone(), obs.evaluate(&state)?)))
                .collect::<Result<Vec<_>>>()?;
            Some(SteadyResult {
                time,
                residual,
                values,
                state: sector.embed_density(&state)?,
                layout: layout.clone(),
            })
        }
    };

    let columns = std::iter::once(exp.regime.time_column().to_string())
        .chain(traj.series.iter().map(|(l, _)| l.clone()))
        .collect();
    let rows = assemble_rows(&traj.times, &traj.series);
    Ok(ResultTable {
        experiment: exp.clone(),
        integrator: *integrator,
        columns,
        rows,
        health: Health::Open(traj.diagnostics),
        steady,
    })
}

/// Integrator tolerances for evolve-to-convergence. Once the state has
/// settled, the residual `‖Lρ‖` sits near `‖L‖` times the error the
/// integrator keeps injecting, and `‖L‖` reaches a few hundred for the
/// preset couplings. The tolerances are therefore set four orders below the
/// convergence threshold, but never below what double precision supports.
pub fn steady_tolerances(base: Tolerances, tol_ss: f64) -> Tolerances {
    Tolerances {
        rel_tol: base.rel_tol.min(tol_ss * 1e-4).max(1e-13),
        abs_tol: base.abs_tol.min(tol_ss * 1e-6).max(1e-16),
    }
}

fn assemble_rows(times: &[f64], series: &[(String, Vec<f64>)]) -> Vec<Vec<f64>> {
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| std::iter::once(t).chain(series.iter().map(|(_, v)| v[k])).collect())
        .collect()
}

fn run_squeezing(exp: &ExperimentConfig, integrator: &IntegratorConfig) -> Result<ResultTable> {
    let params = exp.squeezing_params().expect("resolved experiment has squeezing parameters");
    let dim = exp
        .squeezing
        .as_ref()
        .and_then(|s| s.dim)
        .expect("resolved squeezing dimension");
    // The time column is J_g t; the Hamiltonian runs in physical time.
    let scaled = sample_grid(exp.t_final, exp.n_samples);
    let physical_final = exp.t_final / params.j_g;

    let numeric = if exp.observables.iter().any(|o| o == "n_f_numeric") {
        let h = build_squeezing_hamiltonian(&params, dim)?;
        let n_op = crate::fock::SparseOperator::diagonal(&(0..dim).map(|n| n as f64).collect::<Vec<_>>());
        let vac = StateVector::basis(dim, 0)?;
        Some(evolve_pure(
            &vac,
            &h,
            physical_final,
            exp.n_samples,
            integrator.tolerances(),
            &[("n_f_numeric".to_string(), n_op)],
        )?)
    } else {
        None
    };

    let mut series = Vec::with_capacity(exp.observables.len());
    for name in &exp.observables {
        let values = match name.as_str() {
            "n_f" => scaled
                .iter()
                .map(|&tau| mean_asymmetric_excitation(&params, tau / params.j_g))
                .collect::<Result<Vec<_>>>()?,
            _ => numeric
                .as_ref()
                .and_then(|p| p.series("n_f_numeric"))
                .expect("numeric run requested")
                .to_vec(),
        };
        series.push((name.clone(), values));
    }
    let columns = std::iter::once(exp.regime.time_column().to_string())
        .chain(series.iter().map(|(l, _)| l.clone()))
        .collect();
    Ok(ResultTable {
        experiment: exp.clone(),
        integrator: *integrator,
        columns,
        rows: assemble_rows(&scaled, &series),
        health: Health::Unitary {
            max_norm_drift: numeric.as_ref().map_or(0.0, |p| p.max_norm_drift),
            steps: numeric.as_ref().map(|p| p.steps.clone()),
            dim,
        },
        steady: None,
    })
}

/// Summary statistic of one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Final,
    Max,
    Min,
    /// First sample time with `|x(t) − x_final| < 1% |x_final|`.
    TimeToSaturation,
    Steady,
}

impl Stat {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "final" => Stat::Final,
            "max" => Stat::Max,
            "min" => Stat::Min,
            "t_sat" => Stat::TimeToSaturation,
            "steady" => Stat::Steady,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Stat::Final => "final",
            Stat::Max => "max",
            Stat::Min => "min",
            Stat::TimeToSaturation => "t_sat",
            Stat::Steady => "steady",
        }
    }
}

/// First time at which `values` come within `rel` of their last value.
/// Returns `None` when that last value is zero.
pub fn time_to_saturation(times: &[f64], values: &[f64], rel: f64) -> Option<f64> {
    let last = *values.last()?;
    if last == 0.0 {
        return None;
    }
    times
        .iter()
        .zip(values)
        .find(|(_, &v)| (v - last).abs() < rel * last.abs())
        .map(|(&t, _)| t)
}

/// Evaluates `stat` for the named column; NaN when undefined.
pub fn summarize(table: &ResultTable, column: &str, stat: Stat) -> f64 {
    let Some(values) = table.column(column) else {
        return f64::NAN;
    };
    match stat {
        Stat::Final => values.last().copied().unwrap_or(f64::NAN),
        Stat::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Stat::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        Stat::TimeToSaturation => time_to_saturation(&table.times(), &values, 0.01).unwrap_or(f64::NAN),
        Stat::Steady => table
            .steady
            .as_ref()
            .and_then(|s| s.values.iter().find(|(l, _)| l == column).map(|(_, v)| *v))
            .unwrap_or(f64::NAN),
    }
}
