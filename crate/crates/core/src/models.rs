//! Hamiltonians of the double-well condensate coupled to a resonator mode.
//!
//! Units: ħ = 1 and rates are expressed in units of the single-atom
//! coupling `g` (which builders still take explicitly, defaulting to 1).
//! Time is therefore measured in `1/g`.
//!
//! Two families are provided:
//!
//! * bosonized effective models, valid at low atomic excitation:
//!   strong tunneling on modes `{a, b}` and weak tunneling on `{a, c, d}`;
//! * exact collective-spin models on (photon) ⊗ (Dicke ladder), used to
//!   check the bosonization at small atom number.
//!
//! Spin ladders are stored as layout modes whose "occupation" is `m + j`,
//! so the bosonic and spin models share the same excitation bookkeeping.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::fock::{ModeLayout, SparseOperator};

pub const PHOTON: &str = "a";
pub const COLLECTIVE: &str = "b";
pub const LEFT_WELL: &str = "c";
pub const RIGHT_WELL: &str = "d";
pub const SPIN: &str = "S";
pub const SPIN_LEFT: &str = "SL";
pub const SPIN_RIGHT: &str = "SR";

/// Default cap on the Hilbert dimension of exact spin models.
pub const DEFAULT_SPIN_CAP: usize = 50_000;

/// Parameters of the bosonized effective models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Single-atom coupling; the unit of frequency.
    pub g: f64,
    /// Total atom number `N`.
    pub n_atoms: u64,
    /// `Δ` for the strong-tunneling model, `Δ_w` for the weak-tunneling one.
    pub detuning: f64,
    /// Self-interaction `χ` of the well modes (weak tunneling only).
    pub chi: f64,
    /// Photon damping rate `κ`.
    pub kappa: f64,
    pub photon_dim: usize,
    pub atomic_dim: usize,
}

impl ModelParams {
    /// Parameters with `g = 1`, `χ = 0` and truncations sized for an initial
    /// state carrying `excitations` quanta.
    pub fn new(n_atoms: u64, detuning: f64, kappa: f64, excitations: usize) -> Self {
        let dim = default_truncation(excitations, 0.0);
        Self {
            g: 1.0,
            n_atoms,
            detuning,
            chi: 0.0,
            kappa,
            photon_dim: dim,
            atomic_dim: dim,
        }
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.g.is_finite() && self.detuning.is_finite() && self.chi.is_finite()) {
            return domain("model parameters must be finite");
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return domain(format!("kappa must be non-negative, got {}", self.kappa));
        }
        if self.photon_dim < 2 || self.atomic_dim < 2 {
            return domain("truncation dimensions must be at least 2");
        }
        if self.n_atoms == 0 {
            return domain("N must be positive");
        }
        Ok(())
    }

    pub fn validate_strong(&self) -> Result<()> {
        self.validate_common()
    }

    pub fn validate_weak(&self) -> Result<()> {
        self.validate_common()?;
        if self.n_atoms < 2 || !self.n_atoms.is_multiple_of(2) {
            return domain(format!(
                "N must be even (N/2 atoms per well), got N = {}",
                self.n_atoms
            ));
        }
        Ok(())
    }

    /// Layout `{a, b}`.
    pub fn strong_layout(&self) -> Result<ModeLayout> {
        ModeLayout::new([(PHOTON, self.photon_dim), (COLLECTIVE, self.atomic_dim)])
    }

    /// Layout `{a, c, d}`.
    pub fn weak_layout(&self) -> Result<ModeLayout> {
        ModeLayout::new([
            (PHOTON, self.photon_dim),
            (LEFT_WELL, self.atomic_dim),
            (RIGHT_WELL, self.atomic_dim),
        ])
    }
}

/// Truncation dimension for a given initial excitation: exact when `χ = 0`
/// (excitation never grows), with two guard levels otherwise.
pub fn default_truncation(excitations: usize, chi: f64) -> usize {
    let base = excitations + 1;
    let dim = if chi == 0.0 { base } else { base + 2 };
    dim.max(2)
}

fn check_layout(layout: &ModeLayout, labels: &[&str], model: &str) -> Result<()> {
    if !layout.has_exactly(labels) {
        let got: Vec<&str> = layout.labels().collect();
        return domain(format!(
            "{model} model needs modes {labels:?}, layout has {got:?}"
        ));
    }
    Ok(())
}

/// `H = Δ b†b + g√N (a b† + a† b)`.
pub fn build_strong_tunneling(params: &ModelParams, layout: &ModeLayout) -> Result<SparseOperator> {
    params.validate_strong()?;
    check_layout(layout, &[PHOTON, COLLECTIVE], "strong-tunneling")?;
    let a = layout.annihilation(PHOTON)?;
    let b = layout.annihilation(COLLECTIVE)?;
    let coupling = params.g * (params.n_atoms as f64).sqrt();
    let exchange = &(&a * &b.adjoint()) + &(&a.adjoint() * &b);
    let h = &(&layout.number(COLLECTIVE)? * params.detuning) + &(&exchange * coupling);
    Ok(h)
}

/// `H = Δ_w (c†c + d†d) + g√(N/2) [a (c† + d†) + h.c.] + χ [(c†c)² + (d†d)²]`.
pub fn build_weak_tunneling(params: &ModelParams, layout: &ModeLayout) -> Result<SparseOperator> {
    params.validate_weak()?;
    check_layout(layout, &[PHOTON, LEFT_WELL, RIGHT_WELL], "weak-tunneling")?;
    let a = layout.annihilation(PHOTON)?;
    let c = layout.annihilation(LEFT_WELL)?;
    let d = layout.annihilation(RIGHT_WELL)?;
    let coupling = params.g * (params.n_atoms as f64 / 2.0).sqrt();
    let wells = &c + &d;
    let exchange = &(&a * &wells.adjoint()) + &(&a.adjoint() * &wells);
    let occupation = &layout.number(LEFT_WELL)? + &layout.number(RIGHT_WELL)?;
    let mut h = &(&occupation * params.detuning) + &(&exchange * coupling);
    if params.chi != 0.0 {
        let sq = |n: usize| (n * n) as f64;
        let kerr = &layout.mode_function(LEFT_WELL, sq)? + &layout.mode_function(RIGHT_WELL, sq)?;
        h = &h + &(&kerr * params.chi);
    }
    Ok(h)
}

/// Cavity damping channel `(a, κ)` on a layout containing the photon mode.
pub fn cavity_decay(params: &ModelParams, layout: &ModeLayout) -> Result<(SparseOperator, f64)> {
    Ok((layout.annihilation(PHOTON)?, params.kappa))
}

/// Parameters of the exact collective-spin models.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinModelParams {
    pub g: f64,
    pub n_atoms: u64,
    /// Atom-photon detuning `Δ`.
    pub detuning: f64,
    pub j_e: f64,
    pub j_g: f64,
    pub u_ee: f64,
    pub u_gg: f64,
    pub u_eg: f64,
    pub photon_dim: usize,
    /// Cap on the total Hilbert dimension.
    pub cap: usize,
}

impl SpinModelParams {
    /// Resonant, interaction-free parameters with `g = 1`.
    pub fn resonant(n_atoms: u64, photon_dim: usize) -> Self {
        Self {
            g: 1.0,
            n_atoms,
            detuning: 0.0,
            j_e: 0.0,
            j_g: 0.0,
            u_ee: 0.0,
            u_gg: 0.0,
            u_eg: 0.0,
            photon_dim,
            cap: DEFAULT_SPIN_CAP,
        }
    }

    /// `δ = (U_ee − U_gg) N / 2`.
    pub fn delta(&self) -> f64 {
        (self.u_ee - self.u_gg) * self.n_atoms as f64 / 2.0
    }

    /// `χ = U_ee + U_gg − 2 U_eg`.
    pub fn chi(&self) -> f64 {
        self.u_ee + self.u_gg - 2.0 * self.u_eg
    }

    fn check_cap(&self, dim: usize) -> Result<()> {
        if dim > self.cap {
            return Err(Error::Resource(format!(
                "exact spin model dimension {dim} exceeds cap {}",
                self.cap
            )));
        }
        Ok(())
    }

    /// Layout `{a, S}` with `S` the spin-N/2 ladder (`N + 1` levels).
    pub fn strong_layout(&self) -> Result<ModeLayout> {
        if self.n_atoms == 0 || self.photon_dim < 2 {
            return domain("spin model needs N ≥ 1 and photon_dim ≥ 2");
        }
        let spin_dim = self.n_atoms as usize + 1;
        self.check_cap(self.photon_dim.saturating_mul(spin_dim))?;
        ModeLayout::new([(PHOTON, self.photon_dim), (SPIN, spin_dim)])
    }

    /// Layout `{a, SL, SR}` with spin-N/4 ladders (`N/2 + 1` levels each).
    pub fn weak_layout(&self) -> Result<ModeLayout> {
        if self.n_atoms < 2 || !self.n_atoms.is_multiple_of(2) {
            return domain(format!("N must be even, got N = {}", self.n_atoms));
        }
        if self.photon_dim < 2 {
            return domain("photon_dim must be at least 2");
        }
        let well_dim = self.n_atoms as usize / 2 + 1;
        self.check_cap(
            self.photon_dim
                .saturating_mul(well_dim)
                .saturating_mul(well_dim),
        )?;
        ModeLayout::new([
            (PHOTON, self.photon_dim),
            (SPIN_LEFT, well_dim),
            (SPIN_RIGHT, well_dim),
        ])
    }
}

/// Matrices of a single spin in the Dicke basis `|j, m⟩`, with level index
/// `k = m + j` running over `0..=2j`.
#[derive(Debug, Clone)]
pub struct SpinMatrices {
    /// Twice the spin quantum number.
    pub two_j: usize,
    pub raising: SparseOperator,
    pub lowering: SparseOperator,
    /// Diagonal `m` values.
    pub sz: SparseOperator,
}

impl SpinMatrices {
    pub fn new(two_j: usize) -> Result<Self> {
        let dim = two_j + 1;
        let j = two_j as f64 / 2.0;
        let m_of = |k: usize| k as f64 - j;
        let raising = SparseOperator::from_triplets(
            dim,
            (0..two_j).map(|k| {
                let m = m_of(k);
                (k + 1, k, Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0))
            }),
        )?;
        let lowering = raising.adjoint();
        let sz = SparseOperator::diagonal(&(0..dim).map(m_of).collect::<Vec<_>>());
        Ok(Self {
            two_j,
            raising,
            lowering,
            sz,
        })
    }
}

/// `H = Δ S_z + g (a S₊ + a† S₋)` on (photon) ⊗ (spin N/2).
pub fn build_exact_spin_strong(params: &SpinModelParams) -> Result<SparseOperator> {
    let layout = params.strong_layout()?;
    let spin = SpinMatrices::new(params.n_atoms as usize)?;
    let a = layout.annihilation(PHOTON)?;
    let sp = layout.embed_single_mode(SPIN, &spin.raising)?;
    let sm = layout.embed_single_mode(SPIN, &spin.lowering)?;
    let sz = layout.embed_single_mode(SPIN, &spin.sz)?;
    let exchange = &(&a * &sp) + &(&a.adjoint() * &sm);
    Ok(&(&sz * params.detuning) + &(&exchange * params.g))
}

/// `H = Σ_{j=L,R} (Δ + δ) S_jz + g (a S_j₊ + h.c.) + χ S_jz²`, each well
/// carrying spin `N/4`.
pub fn build_exact_spin_weak(params: &SpinModelParams) -> Result<SparseOperator> {
    let layout = params.weak_layout()?;
    let spin = SpinMatrices::new(params.n_atoms as usize / 2)?;
    let sz2 = &spin.sz * &spin.sz;
    let a = layout.annihilation(PHOTON)?;
    let shift = params.detuning + params.delta();
    let chi = params.chi();
    let mut h = SparseOperator::zero(layout.dim());
    for well in [SPIN_LEFT, SPIN_RIGHT] {
        let sp = layout.embed_single_mode(well, &spin.raising)?;
        let sm = layout.embed_single_mode(well, &spin.lowering)?;
        let sz = layout.embed_single_mode(well, &spin.sz)?;
        let kerr = layout.embed_single_mode(well, &sz2)?;
        let exchange = &(&a * &sp) + &(&a.adjoint() * &sm);
        h = &h + &(&sz * shift);
        h = &h + &(&exchange * params.g);
        if chi != 0.0 {
            h = &h + &(&kerr * chi);
        }
    }
    Ok(h)
}
