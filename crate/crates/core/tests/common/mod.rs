//! Oracles shared by the integration and acceptance tests. Everything here
//! is derived independently of the library code paths it is compared with.

#![allow(dead_code)]

use dwbec::fock::{restrict_to_excitation_sector, ModeLayout, StateVector};
use dwbec::lindblad::{evolve_pure, Tolerances};
use dwbec::models::{build_exact_spin_strong, build_strong_tunneling, ModelParams, SpinModelParams, COLLECTIVE, SPIN};
use nalgebra::Matrix2;
use num_complex::Complex64;

/// Populations `(⟨a†a⟩, ⟨b†b⟩)` for one excitation starting in `b`, from the
/// non-Hermitian 2×2 amplitude equations (the jump only feeds `|0,0⟩`):
///
/// ```text
/// dα/dt = −(κ/2) α − i G β,   dβ/dt = −i G α,   G = g√N
/// ```
///
/// Closed form with `Ω = √(G² − κ²/16)`.
pub fn single_excitation_populations(n_atoms: f64, kappa: f64, t: f64) -> (f64, f64) {
    let g = n_atoms.sqrt();
    let omega = (g * g - kappa * kappa / 16.0).sqrt();
    let env = (-kappa * t / 4.0).exp();
    let beta = env * ((omega * t).cos() + kappa / (4.0 * omega) * (omega * t).sin());
    let alpha = env * g / omega * (omega * t).sin();
    (alpha * alpha, beta * beta)
}

/// The same amplitudes from the matrix exponential of the 2×2 generator,
/// used to cross-check the closed form.
pub fn single_excitation_by_exponential(n_atoms: f64, kappa: f64, t: f64) -> (f64, f64) {
    let i = Complex64::new(0.0, 1.0);
    let g = Complex64::new(n_atoms.sqrt(), 0.0);
    let m = Matrix2::new(Complex64::new(-kappa / 2.0, 0.0), -i * g, -i * g, Complex64::new(0.0, 0.0));
    let u = (m * Complex64::new(t, 0.0)).exp();
    let alpha = u[(0, 1)];
    let beta = u[(1, 1)];
    (alpha.norm_sqr(), beta.norm_sqr())
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Local maxima of a sampled series, refined by golden section on the given
/// continuous function.
pub fn refined_maxima(times: &[f64], values: &[f64], f: impl Fn(f64) -> f64 + Copy) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..values.len() - 1 {
        if values[k] > values[k - 1] && values[k] >= values[k + 1] {
            out.push(golden_max(f, times[k - 1], times[k + 1], 1e-12));
        }
    }
    out
}

/// Max over the window of `|⟨a†a⟩_exact − ⟨a†a⟩_boson|` relative to the
/// bosonized peak, for `k` initial atomic excitations, unitary dynamics and
/// scaled time `g√N t ∈ [0, tau]`.
pub fn hpt_deviation(n_atoms: u64, k: usize, tau: f64) -> f64 {
    let t_final = tau / (n_atoms as f64).sqrt();
    let samples = 401;
    let tol = Tolerances {
        rel_tol: 1e-11,
        abs_tol: 1e-13,
    };

    let spin = SpinModelParams::resonant(n_atoms, k + 1);
    let h_spin = build_exact_spin_strong(&spin).unwrap();
    let spin_layout = spin.strong_layout().unwrap();
    let spin_traj = sector_run(&spin_layout, &h_spin, SPIN, k, t_final, samples, tol);

    let mut boson = ModelParams::new(n_atoms, 0.0, 0.0, k);
    boson.photon_dim = k + 1;
    boson.atomic_dim = k + 1;
    let boson_layout = boson.strong_layout().unwrap();
    let h_boson = build_strong_tunneling(&boson, &boson_layout).unwrap();
    let boson_traj = sector_run(&boson_layout, &h_boson, COLLECTIVE, k, t_final, samples, tol);

    let peak = boson_traj.iter().copied().fold(0.0, f64::max);
    spin_traj
        .iter()
        .zip(&boson_traj)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / peak
}

fn sector_run(
    layout: &ModeLayout,
    h: &dwbec::fock::SparseOperator,
    atomic: &str,
    k: usize,
    t_final: f64,
    samples: usize,
    tol: Tolerances,
) -> Vec<f64> {
    let (h_s, sector) = restrict_to_excitation_sector(layout, h, k as i64).unwrap();
    let mut occ = vec![0; layout.num_modes()];
    occ[layout.mode_index(atomic).unwrap()] = k;
    let psi: StateVector = sector.project_state(&layout.basis_state(&occ).unwrap()).unwrap();
    let n_a = sector.project(&layout.number("a").unwrap()).unwrap();
    let traj = evolve_pure(&psi, &h_s, t_final, samples, tol, &[("n_a".into(), n_a)]).unwrap();
    traj.series("n_a").unwrap().to_vec()
}
