//! Entanglement metrics for reduced atomic states.
//!
//! Units differ per metric: [`von_neumann_entropy`] returns nats and
//! [`logarithmic_negativity`] returns bits.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::fock::{hermitian_eigenvalues, DensityMatrix, ModeLayout, HERMITIAN_TOL, POSITIVITY_TOL};

/// Eigenvalues at or below this are dropped from the entropy sum.
pub const EIG_FLOOR: f64 = 1e-12;

/// Sub-layout holding the requested modes in their original order.
pub fn sub_layout(layout: &ModeLayout, keep: &[&str]) -> Result<ModeLayout> {
    let wanted = label_set(layout, keep)?;
    ModeLayout::new(
        layout
            .modes()
            .iter()
            .filter(|m| wanted.contains(m.label.as_str()))
            .map(|m| (m.label.clone(), m.dim)),
    )
}

fn label_set<'a>(layout: &ModeLayout, labels: &[&'a str]) -> Result<BTreeSet<&'a str>> {
    if labels.is_empty() {
        return domain("label set must be nonempty");
    }
    let mut set = BTreeSet::new();
    for &l in labels {
        layout.mode_index(l)?;
        if !set.insert(l) {
            return domain(format!("label '{l}' listed twice"));
        }
    }
    Ok(set)
}

/// For every basis index, the index into the layout restricted to `modes`.
fn restricted_indices(layout: &ModeLayout, modes: &[usize]) -> Vec<usize> {
    let dims: Vec<usize> = modes.iter().map(|&m| layout.modes()[m].dim).collect();
    (0..layout.dim())
        .map(|i| {
            let occ = layout.occupations_of(i).expect("index in range");
            modes
                .iter()
                .zip(&dims)
                .fold(0, |acc, (&m, &d)| acc * d + occ[m])
        })
        .collect()
}

/// Reduced state on the modes in `keep`, returned together with its layout.
pub fn partial_trace_with_layout(
    rho: &DensityMatrix,
    layout: &ModeLayout,
    keep: &[&str],
) -> Result<(DensityMatrix, ModeLayout)> {
    if rho.dim() != layout.dim() {
        return domain(format!(
            "state dimension {} does not match layout dimension {}",
            rho.dim(),
            layout.dim()
        ));
    }
    let reduced_layout = sub_layout(layout, keep)?;
    let kept: Vec<usize> = reduced_layout
        .labels()
        .map(|l| layout.mode_index(l).expect("label from parent layout"))
        .collect();
    let traced: Vec<usize> = (0..layout.num_modes()).filter(|m| !kept.contains(m)).collect();

    let keep_idx = restricted_indices(layout, &kept);
    let env_idx = restricted_indices(layout, &traced);
    let env_dim: usize = traced.iter().map(|&m| layout.modes()[m].dim).product();

    // Group full indices by environment configuration; only pairs sharing
    // the environment contribute.
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); env_dim];
    for i in 0..layout.dim() {
        groups[env_idx[i]].push(i);
    }

    let rd = reduced_layout.dim();
    let m = rho.matrix();
    let mut out = DMatrix::<Complex64>::zeros(rd, rd);
    for group in &groups {
        for &j in group {
            for &i in group {
                out[(keep_idx[i], keep_idx[j])] += m[(i, j)];
            }
        }
    }
    Ok((DensityMatrix::from_matrix_unchecked(out)?, reduced_layout))
}

/// Reduced density matrix on the modes in `keep`.
pub fn partial_trace(rho: &DensityMatrix, layout: &ModeLayout, keep: &[&str]) -> Result<DensityMatrix> {
    partial_trace_with_layout(rho, layout, keep).map(|(r, _)| r)
}

/// `−Tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let dev = rho.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return domain(format!("entropy of a non-Hermitian matrix (deviation {dev:.3e})"));
    }
    let ev = rho.eigenvalues();
    if let Some(&min) = ev.first() {
        if min < -POSITIVITY_TOL {
            return domain(format!("entropy of a matrix with negative eigenvalue {min:.3e}"));
        }
    }
    Ok(ev
        .iter()
        .filter(|&&l| l > EIG_FLOOR)
        .map(|&l| -l * l.ln())
        .sum())
}

fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closed-form marginal entropy of the two-well dark state with `n` quanta.
///
/// The marginal is diagonal with binomial weights `2^{-n} C(n, j)`.
pub fn dark_state_entropy_formula(n: u32) -> f64 {
    let n = u64::from(n);
    let scale = 0.5f64.powi(n as i32);
    (0..=n)
        .map(|j| {
            let p = scale * binomial(n, j);
            -p * p.ln()
        })
        .sum()
}

/// Bipartition of a (reduced) layout into two disjoint, covering mode sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteSplit {
    layout: ModeLayout,
    a: Vec<usize>,
    b: Vec<usize>,
}

impl BipartiteSplit {
    pub fn new(layout: ModeLayout, subsystem_a: &[&str], subsystem_b: &[&str]) -> Result<Self> {
        let sa = label_set(&layout, subsystem_a)?;
        let sb = label_set(&layout, subsystem_b)?;
        if let Some(shared) = sa.intersection(&sb).next() {
            return domain(format!("mode '{shared}' appears on both sides of the split"));
        }
        if sa.len() + sb.len() != layout.num_modes() {
            return domain("split does not cover every mode of the layout");
        }
        let idx = |s: &BTreeSet<&str>| -> Vec<usize> {
            let mut v: Vec<usize> = s.iter().map(|l| layout.mode_index(l).expect("validated")).collect();
            v.sort_unstable();
            v
        };
        let a = idx(&sa);
        let b = idx(&sb);
        Ok(Self { layout, a, b })
    }

    /// The `(c | d)` split of a two-well reduced state.
    pub fn wells(layout: ModeLayout) -> Result<Self> {
        Self::new(layout, &[crate::models::LEFT_WELL], &[crate::models::RIGHT_WELL])
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    /// `ρ^{T_A}`: transpose on the indices of subsystem A.
    pub fn partial_transpose(&self, rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
        let layout = &self.layout;
        if rho.dim() != layout.dim() {
            return domain("state dimension does not match the split layout");
        }
        let a_idx = restricted_indices(layout, &self.a);
        let b_idx = restricted_indices(layout, &self.b);
        let b_dim: usize = self.b.iter().map(|&m| layout.modes()[m].dim).product();
        let a_dim = layout.dim() / b_dim;
        let mut combine = vec![0usize; layout.dim()];
        for i in 0..layout.dim() {
            combine[a_idx[i] * b_dim + b_idx[i]] = i;
        }
        debug_assert_eq!(a_dim * b_dim, layout.dim());
        let m = rho.matrix();
        Ok(DMatrix::from_fn(layout.dim(), layout.dim(), |i, j| {
            let src_row = combine[a_idx[j] * b_dim + b_idx[i]];
            let src_col = combine[a_idx[i] * b_dim + b_idx[j]];
            m[(src_row, src_col)]
        }))
    }
}

/// `log₂ ‖ρ^{T_A}‖₁` in bits, clamped at zero.
pub fn logarithmic_negativity(rho: &DensityMatrix, split: &BipartiteSplit) -> Result<f64> {
    let dev = rho.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return domain(format!("negativity of a non-Hermitian matrix (deviation {dev:.3e})"));
    }
    let pt = split.partial_transpose(rho)?;
    let trace_norm: f64 = hermitian_eigenvalues(&pt).iter().map(|l| l.abs()).sum();
    Ok(trace_norm.log2().max(0.0))
}

/// `⟨n_c n_d⟩ − |⟨c d†⟩|²` on a two-mode layout.
///
/// Labels `c`/`d` are used when present; otherwise the first mode plays `c`.
pub fn witness(rho_cd: &DensityMatrix, layout: &ModeLayout) -> Result<f64> {
    if layout.num_modes() != 2 {
        return domain(format!("witness needs a two-mode layout, got {} modes", layout.num_modes()));
    }
    let labels: Vec<&str> = layout.labels().collect();
    let (lc, ld) = if layout.has_exactly(&[crate::models::LEFT_WELL, crate::models::RIGHT_WELL]) {
        (crate::models::LEFT_WELL, crate::models::RIGHT_WELL)
    } else {
        (labels[0], labels[1])
    };
    let nn = layout.number(lc)?.try_mul(&layout.number(ld)?)?;
    let cd_dag = layout.annihilation(lc)?.try_mul(&layout.creation(ld)?)?;
    let nn = rho_cd.expectation(&nn)?.re;
    let coh = rho_cd.expectation(&cd_dag)?;
    Ok(nn - coh.norm_sqr())
}
