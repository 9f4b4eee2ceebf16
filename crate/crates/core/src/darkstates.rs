//! Dark states of the cavity-coupled double well and the analytic
//! prediction of the dissipative steady state.
//!
//! The photon couples only to the bright combination `s = (c + d)/√2`.
//! The dark combination `r = (c − d)/√2` is decoupled from both the coherent
//! exchange and the cavity loss, so its reduced state survives while the
//! photon and bright mode relax to vacuum. The `n`-quantum dark state is
//! `|0⟩_a ⊗ (r†)ⁿ/√n! |0⟩`, which expands to
//! `2^{−n/2} Σ_j (−1)^j √C(n,j) |n−j, j⟩` in the well basis.
//!
//! Everything here assumes `Δ_w = 0` and `χ = 0`. With other parameters
//! [`verify_dark`] reports the honest residual.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::fock::{DensityMatrix, ModeLayout, SparseOperator, StateVector};
use crate::models::{COLLECTIVE, LEFT_WELL, PHOTON, RIGHT_WELL};

/// Photon population above this makes an initial state non-atomic.
const PHOTON_VACUUM_TOL: f64 = 1e-12;

/// One member `|D_n⟩` of the weak-tunneling dark family.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkFamilyElement {
    pub n: usize,
    pub state: StateVector,
}

fn require_weak_layout(layout: &ModeLayout) -> Result<()> {
    if !layout.has_exactly(&[PHOTON, LEFT_WELL, RIGHT_WELL]) {
        return domain("dark-state construction needs layout {a, c, d}");
    }
    Ok(())
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp().round()
}

/// The joint vacuum of `{a, b}`: the only dark state of the strong-tunneling model.
pub fn dark_state_strong(layout: &ModeLayout) -> Result<StateVector> {
    if !layout.has_exactly(&[PHOTON, COLLECTIVE]) {
        return domain("strong-tunneling dark state needs layout {a, b}");
    }
    layout.basis_state(&vec![0; layout.num_modes()])
}

/// Amplitudes of `((c† − d†)/√2)ⁿ/√n! |0⟩` on the `{a, c, d}` layout.
fn dark_amplitudes(n: usize, layout: &ModeLayout) -> Result<DVector<Complex64>> {
    let dc = layout.mode_dim(LEFT_WELL)?;
    let dd = layout.mode_dim(RIGHT_WELL)?;
    if n >= dc.min(dd) {
        return domain(format!(
            "dark state with n = {n} needs well truncation above {n}, layout has c: {dc}, d: {dd}"
        ));
    }
    let order: Vec<usize> = layout
        .labels()
        .map(|l| match l {
            PHOTON => 0,
            LEFT_WELL => 1,
            _ => 2,
        })
        .collect();
    let mut v = DVector::zeros(layout.dim());
    let norm = 0.5f64.powf(n as f64 / 2.0);
    for j in 0..=n {
        let by_role = [0, n - j, j];
        let occ: Vec<usize> = order.iter().map(|&r| by_role[r]).collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        v[layout.basis_index(&occ)?] = Complex64::new(sign * norm * binomial(n, j).sqrt(), 0.0);
    }
    Ok(v)
}

/// `|D_n⟩` with the `(−1)^j` sign on the `d` occupation.
pub fn dark_state_weak(n: usize, layout: &ModeLayout) -> Result<DarkFamilyElement> {
    require_weak_layout(layout)?;
    let v = dark_amplitudes(n, layout)?;
    Ok(DarkFamilyElement {
        n,
        state: StateVector::normalize(v)?,
    })
}

/// `‖H ψ‖ / ‖ψ‖`.
pub fn verify_dark(h: &SparseOperator, state: &StateVector) -> Result<f64> {
    let applied = h.apply(state.amplitudes())?;
    Ok(applied.norm() / state.norm())
}

/// Dense transformation from the well basis `|m, k⟩_{cd}` to the collective
/// basis `|p, q⟩_{sr}`, restricted to total quanta below `cap`.
///
/// Row index `p * cap + q`, column index `m * cap + k`.
fn collective_transform(cap: usize) -> DMatrix<f64> {
    let dim = cap * cap;
    let mut t = DMatrix::zeros(dim, dim);
    for m in 0..cap {
        for k in 0..cap {
            let total = m + k;
            if total >= cap {
                continue;
            }
            // (s + r)^m (s − r)^k / 2^{total/2}; collect s^p r^q.
            let pref = (-0.5 * (total as f64 * 2f64.ln() + ln_factorial(m) + ln_factorial(k))).exp();
            for p in 0..=total {
                let q = total - p;
                let mut coeff = 0.0;
                for i in 0..=m.min(p) {
                    let l = p - i;
                    if l > k {
                        continue;
                    }
                    let sign = if (k - l) % 2 == 0 { 1.0 } else { -1.0 };
                    coeff += sign * binomial(m, i) * binomial(k, l);
                }
                let fock = (0.5 * (ln_factorial(p) + ln_factorial(q))).exp();
                t[(p * cap + q, m * cap + k)] = pref * coeff * fock;
            }
        }
    }
    t
}

/// Reduced state of the dark mode `r` for an atomic initial state, indexed
/// by `r` occupation.
fn dark_mode_state(initial: &StateVector, layout: &ModeLayout) -> Result<DMatrix<Complex64>> {
    require_weak_layout(layout)?;
    if initial.dim() != layout.dim() {
        return domain("initial state dimension does not match the layout");
    }
    let pa = layout.mode_index(PHOTON)?;
    let pc = layout.mode_index(LEFT_WELL)?;
    let pd = layout.mode_index(RIGHT_WELL)?;
    let dc = layout.mode_dim(LEFT_WELL)?;
    let dd = layout.mode_dim(RIGHT_WELL)?;
    let cap = dc + dd - 1;

    let mut photon_weight = 0.0;
    let mut wells = DVector::<Complex64>::zeros(cap * cap);
    for (i, amp) in initial.amplitudes().iter().enumerate() {
        let occ = layout.occupations_of(i)?;
        if occ[pa] != 0 {
            photon_weight += amp.norm_sqr();
            continue;
        }
        wells[occ[pc] * cap + occ[pd]] = *amp;
    }
    if photon_weight > PHOTON_VACUUM_TOL {
        return domain(format!(
            "steady-state prediction needs the photon in vacuum (photon weight {photon_weight:.3e})"
        ));
    }
    let t = collective_transform(cap).map(|x| Complex64::new(x, 0.0));
    let sr = t * wells;
    let mut rho_r = DMatrix::<Complex64>::zeros(cap, cap);
    for p in 0..cap {
        for q in 0..cap {
            for q2 in 0..cap {
                rho_r[(q, q2)] += sr[p * cap + q] * sr[p * cap + q2].conj();
            }
        }
    }
    Ok(rho_r)
}

/// Steady-state weights `(n, w_n)` of the dark family for an atomic initial
/// state; entries with negligible weight are omitted.
pub fn predict_steady_mixture(initial: &StateVector, layout: &ModeLayout) -> Result<Vec<(usize, f64)>> {
    let rho_r = dark_mode_state(initial, layout)?;
    Ok((0..rho_r.nrows())
        .map(|n| (n, rho_r[(n, n)].re))
        .filter(|&(_, w)| w > 1e-15)
        .collect())
}

/// Full predicted steady state `|0⟩⟨0|_{a,s} ⊗ Tr_{a,s} ρ₀` on the layout.
///
/// Coherences in the dark mode are kept; they vanish whenever the initial
/// state has a definite total excitation.
pub fn predict_steady_state(initial: &StateVector, layout: &ModeLayout) -> Result<DensityMatrix> {
    let rho_r = dark_mode_state(initial, layout)?;
    let max_n = layout.mode_dim(LEFT_WELL)?.min(layout.mode_dim(RIGHT_WELL)?);
    let mut family = Vec::new();
    for n in 0..rho_r.nrows() {
        let weight = rho_r[(n, n)].re;
        if n >= max_n {
            if weight > 1e-12 {
                return domain(format!(
                    "predicted steady state needs dark level {n}, which exceeds the well truncation"
                ));
            }
            continue;
        }
        family.push((n, dark_amplitudes(n, layout)?));
    }
    let mut m = DMatrix::<Complex64>::zeros(layout.dim(), layout.dim());
    for (n, dn) in &family {
        for (k, dk) in &family {
            let w = rho_r[(*n, *k)];
            if w.norm() > 0.0 {
                m += dn * dk.adjoint() * w;
            }
        }
    }
    DensityMatrix::new(m)
}

/// `Σ w_n |D_n⟩⟨D_n|` for explicit weights.
pub fn dark_mixture(weights: &[(usize, f64)], layout: &ModeLayout) -> Result<DensityMatrix> {
    require_weak_layout(layout)?;
    let states = weights
        .iter()
        .map(|&(n, w)| Ok((w, dark_state_weak(n, layout)?.state)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(f64, &StateVector)> = states.iter().map(|(w, s)| (*w, s)).collect();
    DensityMatrix::mixture(&refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::lindblad_rhs;
    use crate::models::{build_strong_tunneling, build_weak_tunneling, cavity_decay, ModelParams};

    fn weak(n_atoms: u64, excitations: usize) -> (ModelParams, ModeLayout) {
        let p = ModelParams::new(n_atoms, 0.0, 100.0, excitations);
        let l = p.weak_layout().unwrap();
        (p, l)
    }

    fn amp(s: &StateVector, l: &ModeLayout, occ: [usize; 3]) -> f64 {
        let z = s.amplitudes()[l.basis_index(&occ).unwrap()];
        assert!(z.im.abs() < 1e-15);
        z.re
    }

    #[test]
    fn explicit_low_members() {
        let (_, l) = weak(10, 3);
        let d0 = dark_state_weak(0, &l).unwrap().state;
        assert_eq!(amp(&d0, &l, [0, 0, 0]), 1.0);
        let d1 = dark_state_weak(1, &l).unwrap().state;
        let h = 0.5f64.sqrt();
        assert!((amp(&d1, &l, [0, 1, 0]) - h).abs() < 1e-15);
        assert!((amp(&d1, &l, [0, 0, 1]) + h).abs() < 1e-15);
        let d2 = dark_state_weak(2, &l).unwrap().state;
        assert!((amp(&d2, &l, [0, 2, 0]) - 0.5).abs() < 1e-15);
        assert!((amp(&d2, &l, [0, 1, 1]) + h).abs() < 1e-15);
        assert!((amp(&d2, &l, [0, 0, 2]) - 0.5).abs() < 1e-15);
        assert!(dark_state_weak(4, &l).is_err());
    }

    #[test]
    fn family_is_orthonormal() {
        let (_, l) = weak(10, 5);
        let fam: Vec<_> = (0..=5).map(|n| dark_state_weak(n, &l).unwrap().state).collect();
        for (m, a) in fam.iter().enumerate() {
            for (n, b) in fam.iter().enumerate() {
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((a.inner(b).unwrap() - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn strong_vacuum_is_dark() {
        let p = ModelParams::new(5000, 0.0, 100.0, 2);
        let l = p.strong_layout().unwrap();
        let v = dark_state_strong(&l).unwrap();
        assert_eq!(v.amplitudes()[0], Complex64::new(1.0, 0.0));
        let h = build_strong_tunneling(&p, &l).unwrap();
        assert_eq!(verify_dark(&h, &v).unwrap(), 0.0);
        assert!(dark_state_strong(&weak(10, 1).1).is_err());
    }

    #[test]
    fn residuals() {
        let (p, l) = weak(5000, 5);
        let h = build_weak_tunneling(&p, &l).unwrap();
        for n in 0..=5 {
            let d = dark_state_weak(n, &l).unwrap().state;
            assert!(verify_dark(&h, &d).unwrap() < 1e-12, "n = {n}");
        }
        let bright = l.basis_state(&[0, 1, 0]).unwrap();
        assert!((verify_dark(&h, &bright).unwrap() - 2500f64.sqrt()).abs() < 1e-10);

        let mut detuned = p.clone();
        detuned.detuning = 0.3;
        let h = build_weak_tunneling(&detuned, &l).unwrap();
        for n in 1..=5 {
            let d = dark_state_weak(n, &l).unwrap().state;
            assert!((verify_dark(&h, &d).unwrap() - 0.3 * n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn lindblad_stationarity() {
        let (p, l) = weak(5000, 5);
        let h = build_weak_tunneling(&p, &l).unwrap();
        let jump = cavity_decay(&p, &l).unwrap();
        for n in 0..=5 {
            let rho = dark_state_weak(n, &l).unwrap().state.to_density();
            let drho = lindblad_rhs(&h, std::slice::from_ref(&jump), &rho).unwrap();
            assert!(drho.norm() < 1e-12, "n = {n}: {}", drho.norm());
        }
    }

    #[test]
    fn binomial_mixture_prediction() {
        let (_, l) = weak(10, 3);
        let w = predict_steady_mixture(&l.basis_state(&[0, 1, 0]).unwrap(), &l).unwrap();
        assert_eq!(w.len(), 2);
        assert!((w[0].1 - 0.5).abs() < 1e-14 && (w[1].1 - 0.5).abs() < 1e-14);

        let w = predict_steady_mixture(&l.basis_state(&[0, 3, 0]).unwrap(), &l).unwrap();
        let expected = [0.125, 0.375, 0.375, 0.125];
        for (n, wn) in w {
            assert!((wn - expected[n]).abs() < 1e-14);
        }

        let d2 = dark_state_weak(2, &l).unwrap().state;
        let w = predict_steady_mixture(&d2, &l).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].0, 2);
        assert!((w[0].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn prediction_rejects_photons() {
        let (_, l) = weak(10, 2);
        let s = l.basis_state(&[1, 0, 0]).unwrap();
        assert!(predict_steady_mixture(&s, &l).is_err());
    }

    #[test]
    fn predicted_state_is_the_weighted_mixture() {
        let (_, l) = weak(10, 2);
        let init = l.basis_state(&[0, 2, 0]).unwrap();
        let full = predict_steady_state(&init, &l).unwrap();
        let weights = predict_steady_mixture(&init, &l).unwrap();
        let mix = dark_mixture(&weights, &l).unwrap();
        assert!(full.trace_distance(&mix).unwrap() < 1e-14);
    }

    #[test]
    fn dark_coherence_survives_in_prediction() {
        let (_, l) = weak(10, 1);
        let d0 = dark_state_weak(0, &l).unwrap().state;
        let d1 = dark_state_weak(1, &l).unwrap().state;
        let sup = StateVector::normalize(d0.amplitudes() + d1.amplitudes()).unwrap();
        let pred = predict_steady_state(&sup, &l).unwrap();
        assert!((pred.fidelity_with_pure(&sup).unwrap() - 1.0).abs() < 1e-14);
    }
}
