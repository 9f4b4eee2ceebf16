//! Zero-temperature master equation with Lindblad damping channels.
//!
//! `dρ/dt = −i[H, ρ] + Σ_k (γ_k/2)(2 L_k ρ L_k† − L_k†L_k ρ − ρ L_k†L_k)`
//!
//! The density matrix is stored densely; operators stay sparse. The
//! Hamiltonian part and the anticommutator are folded into one effective
//! non-Hermitian generator `H_eff = H − (i/2) Σ γ_k L_k†L_k`, so that
//! `dρ/dt = −i H_eff ρ + i ρ H_eff† + Σ γ_k L_k ρ L_k†`.

mod dopri;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

pub use dopri::{OdeState, StepStats, Stepper, Tolerances};

use crate::error::{domain, Error, Result};
use crate::fock::{hermitian_eigenvalues, DensityMatrix, SectorMap, SparseOperator, StateVector};

/// Steady-state tolerance on `‖dρ/dt‖_F`.
pub const DEFAULT_TOL_SS: f64 = 1e-9;
/// Default time budget for evolve-to-convergence, in `1/g`.
pub const DEFAULT_T_MAX: f64 = 50.0;
/// Top-level population above which a truncation warning is raised.
pub const LEAKAGE_WARN: f64 = 1e-6;
/// Largest Hilbert dimension accepted by the dense null-space solver.
pub const DEFAULT_KERNEL_MAX_DIM: usize = 32;

/// A damping channel `(L, γ)`.
pub type Collapse = (SparseOperator, f64);

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Precomputed generator of the master equation.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    h_eff: SparseOperator,
    h_eff_adj: SparseOperator,
    jumps: Vec<(SparseOperator, SparseOperator, f64)>,
}

/// Work buffers for [`Liouvillian::apply_into`].
#[derive(Debug, Clone)]
pub struct Workspace {
    a: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(dim, dim),
            b: DMatrix::zeros(dim, dim),
        }
    }
}

impl Liouvillian {
    pub fn new(hamiltonian: &SparseOperator, collapse: &[Collapse]) -> Result<Self> {
        let dim = hamiltonian.dim();
        let mut h_eff = hamiltonian.clone();
        let mut jumps = Vec::with_capacity(collapse.len());
        for (op, rate) in collapse {
            if op.dim() != dim {
                return domain(format!(
                    "collapse operator dimension {} does not match Hamiltonian dimension {dim}",
                    op.dim()
                ));
            }
            if !(rate.is_finite() && *rate >= 0.0) {
                return domain(format!("collapse rate must be non-negative, got {rate}"));
            }
            if *rate == 0.0 {
                continue;
            }
            let adj = op.adjoint();
            let ldl = &adj * op;
            h_eff = &h_eff + &ldl.scale(Complex64::new(0.0, -0.5 * rate));
            jumps.push((op.clone(), adj, *rate));
        }
        let h_eff_adj = h_eff.adjoint();
        Ok(Self {
            dim,
            h_eff,
            h_eff_adj,
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when at least one channel has a positive rate.
    pub fn is_dissipative(&self) -> bool {
        !self.jumps.is_empty()
    }

    /// `out = L(ρ)` for an arbitrary (not necessarily Hermitian) `ρ`.
    pub fn apply_into(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>, work: &mut Workspace) {
        self.h_eff.mul_dense_into(rho, &mut work.a);
        self.h_eff_adj.dense_mul_into(rho, &mut work.b);
        for ((o, a), b) in out.iter_mut().zip(work.a.iter()).zip(work.b.iter()) {
            *o = -I * a + I * b;
        }
        for (op, adj, rate) in &self.jumps {
            op.mul_dense_into(rho, &mut work.a);
            adj.dense_mul_into(&work.a, &mut work.b);
            for (o, b) in out.iter_mut().zip(work.b.iter()) {
                *o += b * *rate;
            }
        }
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return domain(format!(
                "density matrix shape {}x{} does not match generator dimension {}",
                rho.nrows(),
                rho.ncols(),
                self.dim
            ));
        }
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.apply_into(rho, &mut out, &mut Workspace::new(self.dim));
        Ok(out)
    }

    /// Dense superoperator acting on column-major `vec(ρ)`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim;
        let n = d * d;
        let mut sup = DMatrix::zeros(n, n);
        let mut basis = DMatrix::zeros(d, d);
        let mut out = DMatrix::zeros(d, d);
        let mut work = Workspace::new(d);
        for col in 0..n {
            basis.as_mut_slice()[col] = Complex64::new(1.0, 0.0);
            self.apply_into(&basis, &mut out, &mut work);
            sup.column_mut(col).copy_from_slice(out.as_slice());
            basis.as_mut_slice()[col] = Complex64::new(0.0, 0.0);
        }
        sup
    }
}

/// Right-hand side of the master equation, `dρ/dt`.
pub fn lindblad_rhs(
    hamiltonian: &SparseOperator,
    collapse: &[Collapse],
    rho: &DensityMatrix,
) -> Result<DMatrix<Complex64>> {
    Liouvillian::new(hamiltonian, collapse)?.apply(rho.matrix())
}

/// Basis indices whose population signals truncation leakage for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageProbe {
    pub label: String,
    pub indices: Vec<usize>,
}

impl LeakageProbe {
    /// Top level of `label` in the sector basis.
    pub fn top_level(sector: &SectorMap, label: &str) -> Result<Self> {
        Ok(Self {
            label: label.to_string(),
            indices: sector.top_level_indices(label)?,
        })
    }
}

/// Everything `evolve` needs besides the initial state.
#[derive(Debug, Clone)]
pub struct EvolutionSpec {
    pub hamiltonian: SparseOperator,
    pub collapse: Vec<Collapse>,
    /// Final time in `1/g`.
    pub t_final: f64,
    /// Number of uniform output samples including `t = 0` and `t_final`.
    pub n_samples: usize,
    pub tolerances: Tolerances,
    pub leakage_probes: Vec<LeakageProbe>,
    /// Conserved-or-decaying excitation operator whose monotonicity is tracked.
    pub excitation: Option<SparseOperator>,
}

impl EvolutionSpec {
    pub fn new(hamiltonian: SparseOperator, collapse: Vec<Collapse>, t_final: f64, n_samples: usize) -> Self {
        Self {
            hamiltonian,
            collapse,
            t_final,
            n_samples,
            tolerances: Tolerances::default(),
            leakage_probes: Vec::new(),
            excitation: None,
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_excitation(mut self, op: SparseOperator) -> Self {
        self.excitation = Some(op);
        self
    }

    pub fn with_leakage_probes(mut self, probes: Vec<LeakageProbe>) -> Self {
        self.leakage_probes = probes;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return domain(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.n_samples < 2 {
            return domain(format!("n_samples must be at least 2, got {}", self.n_samples));
        }
        let tol = self.tolerances;
        if !(tol.rel_tol > 0.0 && tol.abs_tol > 0.0) {
            return domain("integrator tolerances must be positive");
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        sample_grid(self.t_final, self.n_samples)
    }
}

/// Uniform grid of `n` points on `[0, t_final]`.
pub fn sample_grid(t_final: f64, n: usize) -> Vec<f64> {
    let last = (n.max(2) - 1) as f64;
    (0..n).map(|k| t_final * k as f64 / last).collect()
}

/// Scalar functional of the state sampled along a trajectory.
pub type StateFunctional = Arc<dyn Fn(&DensityMatrix) -> Result<f64> + Send + Sync>;

/// Quantity recorded at every output sample.
#[derive(Clone)]
pub enum Observable {
    /// Real part of `tr(ρ A)`.
    Expectation(SparseOperator),
    /// Arbitrary functional (entanglement measures, witnesses).
    Functional(StateFunctional),
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Expectation(op) => f.debug_tuple("Expectation").field(op).finish(),
            Self::Functional(_) => f.write_str("Functional(..)"),
        }
    }
}

impl Observable {
    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<f64> {
        match self {
            Self::Expectation(op) => Ok(rho.expectation(op)?.re),
            Self::Functional(f) => f(rho),
        }
    }
}

/// Numerical health of a trajectory, accumulated over output samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_hermitian_deviation: f64,
    pub min_eigenvalue: f64,
    /// Largest top-level population per probed mode.
    pub leakage: Vec<(String, f64)>,
    /// Largest increase of the tracked excitation between consecutive samples.
    pub max_excitation_increase: Option<f64>,
    pub warnings: Vec<String>,
    pub steps: StepStats,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
    pub final_state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| v.as_slice())
    }
}

struct DiagnosticsAccumulator {
    diag: Diagnostics,
    last_excitation: Option<f64>,
}

impl DiagnosticsAccumulator {
    fn new(spec: &EvolutionSpec) -> Self {
        Self {
            diag: Diagnostics {
                max_trace_drift: 0.0,
                max_hermitian_deviation: 0.0,
                min_eigenvalue: f64::INFINITY,
                leakage: spec.leakage_probes.iter().map(|p| (p.label.clone(), 0.0)).collect(),
                max_excitation_increase: spec.excitation.as_ref().map(|_| 0.0),
                warnings: Vec::new(),
                steps: StepStats::default(),
            },
            last_excitation: None,
        }
    }

    fn record(&mut self, spec: &EvolutionSpec, rho: &DensityMatrix) -> Result<()> {
        let d = &mut self.diag;
        let tr = rho.trace();
        d.max_trace_drift = d.max_trace_drift.max((tr - Complex64::new(1.0, 0.0)).norm());
        d.max_hermitian_deviation = d.max_hermitian_deviation.max(rho.hermitian_deviation());
        let min = hermitian_eigenvalues(rho.matrix()).first().copied().unwrap_or(0.0);
        d.min_eigenvalue = d.min_eigenvalue.min(min);
        let m = rho.matrix();
        for (probe, slot) in spec.leakage_probes.iter().zip(d.leakage.iter_mut()) {
            let pop: f64 = probe.indices.iter().map(|&i| m[(i, i)].re).sum();
            slot.1 = slot.1.max(pop);
        }
        if let Some(op) = &spec.excitation {
            let now = rho.expectation(op)?.re;
            if let (Some(prev), Some(worst)) = (self.last_excitation, d.max_excitation_increase.as_mut()) {
                *worst = worst.max(now - prev);
            }
            self.last_excitation = Some(now);
        }
        Ok(())
    }

    fn finish(mut self, steps: StepStats) -> Diagnostics {
        let d = &mut self.diag;
        d.steps = steps;
        if d.min_eigenvalue < -crate::fock::POSITIVITY_TOL {
            d.warnings.push(format!(
                "positivity violated: min eigenvalue {:.3e}",
                d.min_eigenvalue
            ));
        }
        for (label, pop) in &d.leakage {
            if *pop > LEAKAGE_WARN {
                d.warnings.push(format!(
                    "mode '{label}' top-level population reached {pop:.3e}; increase its truncation"
                ));
            }
        }
        self.diag
    }
}

/// Integrates the master equation from `rho0`, sampling observables on the
/// uniform output grid of `spec`.
///
/// The integrator lands exactly on each sample time, so results are
/// bit-identical for identical inputs.
pub fn evolve(
    rho0: &DensityMatrix,
    spec: &EvolutionSpec,
    observables: &[(String, Observable)],
) -> Result<Trajectory> {
    spec.validate()?;
    let liouv = Liouvillian::new(&spec.hamiltonian, &spec.collapse)?;
    if rho0.dim() != liouv.dim() {
        return domain(format!(
            "initial state dimension {} does not match Hamiltonian dimension {}",
            rho0.dim(),
            liouv.dim()
        ));
    }
    let times = spec.sample_times();
    let mut series: Vec<(String, Vec<f64>)> = observables
        .iter()
        .map(|(l, _)| (l.clone(), Vec::with_capacity(times.len())))
        .collect();
    let mut acc = DiagnosticsAccumulator::new(spec);

    let mut sample = |rho: &DensityMatrix, series: &mut Vec<(String, Vec<f64>)>| -> Result<()> {
        for ((_, obs), (_, out)) in observables.iter().zip(series.iter_mut()) {
            out.push(obs.evaluate(rho)?);
        }
        acc.record(spec, rho)
    };
    sample(rho0, &mut series)?;

    let mut work = Workspace::new(liouv.dim());
    let rhs = |_t: f64, y: &DMatrix<Complex64>, dy: &mut DMatrix<Complex64>| {
        liouv.apply_into(y, dy, &mut work);
    };
    let mut stepper = Stepper::new(rhs, spec.tolerances, 0.0, rho0.matrix().clone());
    for &t in &times[1..] {
        stepper.advance_to(t, |_, _, _| false)?;
        let rho = DensityMatrix::from_matrix_unchecked(stepper.state().clone())?;
        sample(&rho, &mut series)?;
    }
    let steps = stepper.stats().clone();
    let final_state = DensityMatrix::from_matrix_unchecked(stepper.into_state())?;
    Ok(Trajectory {
        times,
        series,
        final_state,
        diagnostics: acc.finish(steps),
    })
}

/// Pure-state trajectory under `dψ/dt = −iHψ`.
#[derive(Debug, Clone)]
pub struct PureTrajectory {
    pub times: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
    pub final_state: StateVector,
    pub max_norm_drift: f64,
    pub steps: StepStats,
}

impl PureTrajectory {
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| v.as_slice())
    }
}

/// Unitary evolution of a pure state with the same integrator; the path
/// used when there is no damping and the Hilbert space is too large for a
/// dense density matrix.
pub fn evolve_pure(
    psi0: &StateVector,
    hamiltonian: &SparseOperator,
    t_final: f64,
    n_samples: usize,
    tolerances: Tolerances,
    observables: &[(String, SparseOperator)],
) -> Result<PureTrajectory> {
    let spec = EvolutionSpec::new(hamiltonian.clone(), Vec::new(), t_final, n_samples)
        .with_tolerances(tolerances);
    spec.validate()?;
    if psi0.dim() != hamiltonian.dim() {
        return domain("initial state dimension does not match Hamiltonian dimension");
    }
    for (label, op) in observables {
        if op.dim() != hamiltonian.dim() {
            return domain(format!("observable '{label}' has the wrong dimension"));
        }
    }
    let times = spec.sample_times();
    let mut series: Vec<(String, Vec<f64>)> = observables
        .iter()
        .map(|(l, _)| (l.clone(), Vec::with_capacity(times.len())))
        .collect();
    let mut max_norm_drift: f64 = 0.0;
    let mut sample = |psi: &DVector<Complex64>, series: &mut Vec<(String, Vec<f64>)>| -> Result<()> {
        for ((_, op), (_, out)) in observables.iter().zip(series.iter_mut()) {
            let v = op.apply(psi)?;
            out.push(psi.dotc(&v).re);
        }
        max_norm_drift = max_norm_drift.max((psi.norm() - 1.0).abs());
        Ok(())
    };
    sample(psi0.amplitudes(), &mut series)?;
    let rhs = |_t: f64, y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
        hamiltonian.apply_into(y.as_slice(), dy.as_mut_slice());
        for v in dy.iter_mut() {
            *v *= -I;
        }
    };
    let mut stepper = Stepper::new(rhs, tolerances, 0.0, psi0.amplitudes().clone());
    for &t in &times[1..] {
        stepper.advance_to(t, |_, _, _| false)?;
        sample(stepper.state(), &mut series)?;
    }
    let steps = stepper.stats().clone();
    Ok(PureTrajectory {
        times,
        series,
        final_state: StateVector::unnormalized(stepper.into_state()),
        max_norm_drift,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub tol_ss: f64,
    pub t_max: f64,
    pub tolerances: Tolerances,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            tol_ss: DEFAULT_TOL_SS,
            t_max: DEFAULT_T_MAX,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SteadyStateMethod {
    /// Integrate from `initial` until `‖dρ/dt‖_F < tol_ss`.
    EvolveToConvergence {
        initial: DensityMatrix,
        options: ConvergenceOptions,
    },
    /// Dense kernel of the Liouvillian.
    NullSpace { max_dim: usize },
}

#[derive(Debug, Clone)]
pub enum SteadyState {
    Converged {
        state: DensityMatrix,
        time: f64,
        residual: f64,
    },
    /// Basis of the Liouvillian kernel. Elements with nonzero trace are
    /// normalized to unit trace; traceless ones to unit Frobenius norm.
    Kernel(Vec<DMatrix<Complex64>>),
}

impl SteadyState {
    /// The steady state when it is unique (converged, or a one-dimensional
    /// kernel).
    pub fn unique(&self) -> Result<DensityMatrix> {
        match self {
            Self::Converged { state, .. } => Ok(state.clone()),
            Self::Kernel(basis) if basis.len() == 1 => DensityMatrix::new(basis[0].clone()),
            Self::Kernel(basis) => domain(format!(
                "steady-state manifold is {}-dimensional; the steady state depends on the initial condition",
                basis.len()
            )),
        }
    }
}

pub fn steady_state(
    hamiltonian: &SparseOperator,
    collapse: &[Collapse],
    method: &SteadyStateMethod,
) -> Result<SteadyState> {
    match method {
        SteadyStateMethod::EvolveToConvergence { initial, options } => {
            let (state, time, residual) = evolve_to_convergence(hamiltonian, collapse, initial, options)?;
            Ok(SteadyState::Converged {
                state,
                time,
                residual,
            })
        }
        SteadyStateMethod::NullSpace { max_dim } => {
            Ok(SteadyState::Kernel(liouvillian_kernel(hamiltonian, collapse, *max_dim)?))
        }
    }
}

/// Returns `(state, time reached, residual)`.
pub fn evolve_to_convergence(
    hamiltonian: &SparseOperator,
    collapse: &[Collapse],
    initial: &DensityMatrix,
    options: &ConvergenceOptions,
) -> Result<(DensityMatrix, f64, f64)> {
    let liouv = Liouvillian::new(hamiltonian, collapse)?;
    if initial.dim() != liouv.dim() {
        return domain("initial state dimension does not match Hamiltonian dimension");
    }
    if !(options.t_max > 0.0 && options.tol_ss > 0.0) {
        return domain("t_max and tol_ss must be positive");
    }
    let first = liouv.apply(initial.matrix())?.norm();
    if first < options.tol_ss {
        return Ok((initial.clone(), 0.0, first));
    }
    let mut work = Workspace::new(liouv.dim());
    let rhs = |_t: f64, y: &DMatrix<Complex64>, dy: &mut DMatrix<Complex64>| {
        liouv.apply_into(y, dy, &mut work);
    };
    let mut stepper = Stepper::new(rhs, options.tolerances, 0.0, initial.matrix().clone());
    let tol = options.tol_ss;
    let mut residual = first;
    let converged = stepper.advance_to(options.t_max, |_, _, dy| {
        residual = dy.norm();
        residual < tol
    })?;
    if !converged {
        return Err(Error::NonConvergence {
            t_max: options.t_max,
            residual,
            tolerance: tol,
        });
    }
    let time = stepper.time();
    let state = DensityMatrix::from_matrix_unchecked(stepper.into_state())?;
    Ok((state, time, residual))
}

/// Basis of `ker L` via a dense SVD; limited to `dim ≤ max_dim`.
pub fn liouvillian_kernel(
    hamiltonian: &SparseOperator,
    collapse: &[Collapse],
    max_dim: usize,
) -> Result<Vec<DMatrix<Complex64>>> {
    let d = hamiltonian.dim();
    if d > max_dim {
        return Err(Error::Resource(format!(
            "dense Liouvillian kernel requested for dimension {d} (cap {max_dim})"
        )));
    }
    let sup = Liouvillian::new(hamiltonian, collapse)?.to_dense();
    let svd = SVD::new(sup, false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numeric("SVD did not produce right singular vectors".into()))?;
    let sigma = &svd.singular_values;
    let scale = sigma.iter().copied().fold(1.0, f64::max);
    let mut basis = Vec::new();
    for (k, s) in sigma.iter().enumerate() {
        if *s > 1e-10 * scale {
            continue;
        }
        let v: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();
        let mut m = DMatrix::from_column_slice(d, d, &v);
        let tr = m.trace();
        if tr.norm() > 1e-10 {
            m /= tr;
        } else {
            let n = m.norm();
            m /= Complex64::new(n, 0.0);
        }
        basis.push(m);
    }
    if basis.is_empty() {
        return Err(Error::Numeric("Liouvillian has no numerical kernel".into()));
    }
    Ok(basis)
}
