mod common;

use dwbec::cli::config::{ExperimentConfig, IntegratorConfig};
use dwbec::cli::presets::preset;
use dwbec::cli::run::{run_experiment, steady_tolerances};
use dwbec::darkstates::{dark_mixture, predict_steady_mixture, predict_steady_state};
use dwbec::entanglement::{logarithmic_negativity, partial_trace_with_layout, witness, BipartiteSplit};
use dwbec::fock::{DensityMatrix, StateVector};
use dwbec::lindblad::{evolve_to_convergence, ConvergenceOptions};
use dwbec::models::{build_weak_tunneling, cavity_decay, ModelParams, LEFT_WELL, RIGHT_WELL};

use common::{hpt_deviation, single_excitation_by_exponential, single_excitation_populations};

fn first_experiment(name: &str) -> ExperimentConfig {
    preset(name).unwrap().resolve().unwrap().experiments[0].clone()
}

#[test]
fn closed_form_matches_matrix_exponential() {
    for &(n, kappa) in &[(5_000.0, 100.0), (20_000.0, 100.0), (300.0, 10.0)] {
        for k in 0..50 {
            let t = 0.02 * k as f64;
            let (a1, b1) = single_excitation_populations(n, kappa, t);
            let (a2, b2) = single_excitation_by_exponential(n, kappa, t);
            assert!((a1 - a2).abs() < 1e-12 && (b1 - b2).abs() < 1e-12, "N={n} t={t}");
        }
    }
}

#[test]
fn strong_run_tracks_oracle_with_changed_parameters() {
    let mut exp = first_experiment("fig2");
    let model = exp.model.as_mut().unwrap();
    model.n_atoms = 800;
    model.kappa = 30.0;
    exp.t_final = 0.5;
    exp.n_samples = 101;
    let table = run_experiment(&exp, &Default::default()).unwrap();
    let (na, nb) = (table.column("n_a").unwrap(), table.column("n_b").unwrap());
    for (k, t) in table.times().into_iter().enumerate() {
        let (ea, eb) = single_excitation_populations(800.0, 30.0, t);
        assert!((na[k] - ea).abs() < 1e-6 && (nb[k] - eb).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn weak_photon_population_is_half_the_strong_one() {
    // For one excitation the weak model's bright mode couples with g√(N/2)·√2.
    let strong = run_experiment(&first_experiment("fig2"), &Default::default()).unwrap();
    let weak = run_experiment(&first_experiment("fig3"), &Default::default()).unwrap();
    let (s, w) = (strong.column("n_a").unwrap(), weak.column("n_a").unwrap());
    for (x, y) in s.iter().zip(&w) {
        assert!((0.5 * x - y).abs() < 1e-6);
    }
}

fn steady_options() -> ConvergenceOptions {
    let tol_ss = 1e-9;
    ConvergenceOptions {
        tol_ss,
        t_max: 50.0,
        tolerances: steady_tolerances(IntegratorConfig::default().tolerances(), tol_ss),
    }
}

fn relax(n_atoms: u64, kappa: f64, initial: &[usize]) -> (DensityMatrix, DensityMatrix, dwbec::fock::ModeLayout) {
    let exc: usize = initial.iter().sum();
    let params = ModelParams::new(n_atoms, 0.0, kappa, exc);
    let layout = params.weak_layout().unwrap();
    let h = build_weak_tunneling(&params, &layout).unwrap();
    let jump = cavity_decay(&params, &layout).unwrap();
    let psi = layout.basis_state(initial).unwrap();
    let (rho, _, _) = evolve_to_convergence(&h, &[jump], &psi.to_density(), &steady_options()).unwrap();
    let predicted = predict_steady_state(&psi, &layout).unwrap();
    (rho, predicted, layout)
}

#[test]
fn steady_state_predictor_matches_relaxation() {
    for &(n_atoms, kappa) in &[(5_000, 100.0), (400, 10.0), (60, 3.0)] {
        for n in 1..=3 {
            let (rho, predicted, _) = relax(n_atoms, kappa, &[0, n, 0]);
            let d = rho.trace_distance(&predicted).unwrap();
            assert!(d < 1e-5, "N={n_atoms} kappa={kappa} n={n}: {d:e}");
        }
    }
}

#[test]
fn predictor_keeps_dark_mode_coherences() {
    // A superposition across excitation sectors keeps its dark-mode coherence.
    let params = ModelParams::new(200, 0.0, 8.0, 1);
    let layout = params.weak_layout().unwrap();
    let h = build_weak_tunneling(&params, &layout).unwrap();
    let jump = cavity_decay(&params, &layout).unwrap();
    let v0 = layout.basis_state(&[0, 0, 0]).unwrap();
    let v1 = layout.basis_state(&[0, 1, 0]).unwrap();
    let psi = StateVector::new(
        (v0.amplitudes() + v1.amplitudes()) * num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    )
    .unwrap();
    let (rho, _, _) = evolve_to_convergence(&h, &[jump], &psi.to_density(), &steady_options()).unwrap();
    let predicted = predict_steady_state(&psi, &layout).unwrap();
    assert!(rho.trace_distance(&predicted).unwrap() < 1e-5);
    let diagonal = dark_mixture(&predict_steady_mixture(&v1, &layout).unwrap(), &layout).unwrap();
    assert!(predicted.trace_distance(&diagonal).unwrap() > 0.1);
}

#[test]
fn witness_and_negativity_agree_on_entangled_steady_states() {
    for n in 1..=3 {
        let (rho, _, layout) = relax(5_000, 100.0, &[0, n, 0]);
        let (rho_cd, cd) = partial_trace_with_layout(&rho, &layout, &[LEFT_WELL, RIGHT_WELL]).unwrap();
        let w = witness(&rho_cd, &cd).unwrap();
        let e = logarithmic_negativity(&rho_cd, &BipartiteSplit::wells(cd.clone()).unwrap()).unwrap();
        assert!(w < 0.0 && e > 0.0, "n={n}: W={w} E_N={e}");
        assert!((w + n as f64 / 16.0).abs() < 1e-4, "n={n}: W={w}");
    }
}

#[test]
fn witness_and_negativity_vanish_on_product_states() {
    let params = ModelParams::new(100, 0.0, 1.0, 2);
    let layout = params.weak_layout().unwrap();
    for occ in [[0, 0, 0], [0, 1, 0], [0, 1, 1], [0, 2, 0]] {
        let rho = layout.basis_state(&occ).unwrap().to_density();
        let (rho_cd, cd) = partial_trace_with_layout(&rho, &layout, &[LEFT_WELL, RIGHT_WELL]).unwrap();
        let w = witness(&rho_cd, &cd).unwrap();
        let e = logarithmic_negativity(&rho_cd, &BipartiteSplit::wells(cd.clone()).unwrap()).unwrap();
        assert!(w >= -1e-14 && e.abs() < 1e-12, "{occ:?}: W={w} E_N={e}");
    }
}

#[test]
fn bosonization_single_excitation_is_exact() {
    for n in [4, 10, 50] {
        assert!(hpt_deviation(n, 1, 15.0) < 1e-8);
    }
}

#[test]
fn bosonization_two_excitation_deviation_shrinks() {
    let d: Vec<f64> = [10u64, 40, 160].iter().map(|&n| hpt_deviation(n, 2, 10.0)).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    // Deviation scales as 1/N once N leaves the few-atom regime.
    assert!(d[2] < 0.02, "{d:?}");
}
