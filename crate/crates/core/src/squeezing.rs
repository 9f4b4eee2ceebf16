//! Pair creation in the asymmetric mode `f` under
//! `H = λ₁ f†f + λ₂ (f†² + f²)`, solved through the factorized evolution
//! operator `exp(−iHt)|0⟩ = Λ₁^{1/4} Σ_n √((2n)!)/n! (Λ₂/2)ⁿ |2n⟩`.
//!
//! With `λ₁′ = −2iλ₁t`, `λ₂′ = −2iλ₂t` and `β² = λ₁′²/4 − λ₂′²`:
//!
//! ```text
//! Λ₁ = (cosh β − (λ₁′/2β) sinh β)^{−2}
//! Λ₂ = 2λ₂′ sinh β / (2β cosh β − λ₁′ sinh β)
//! ```
//!
//! Both depend on β only through `cosh β` and `sinh β / β`, which are even
//! in β, so they are evaluated from β² and are insensitive to the square-root
//! branch. The series state differs from `exp(−iHt)|0⟩` by a global phase:
//! `exp(−iHt)|0⟩ = exp(iλ₁t/2) |Ψ_s(t)⟩` with `Λ₁^{1/4}` on its principal
//! branch.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::fock::{SparseOperator, StateVector};

/// Relative size at which the excitation series is cut.
pub const SERIES_REL_TOL: f64 = 1e-12;
/// Hard cap on the number of series terms.
pub const SERIES_MAX_TERMS: usize = 500;
/// Largest dropped-tail weight accepted by [`squeezed_vacuum_state`].
pub const TAIL_THRESHOLD: f64 = 1e-10;

/// Below this `|β²|` the hyperbolic functions are taken from their series.
const SMALL_BETA_SQ: f64 = 1e-4;

/// Interaction parameters in units of the tunneling rate `J_g`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SqueezingParams {
    pub j_g: f64,
    pub ugg_n: f64,
}

impl SqueezingParams {
    pub fn new(j_g: f64, ugg_n: f64) -> Result<Self> {
        let p = Self { j_g, ugg_n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_g.is_finite() && self.j_g > 0.0) {
            return domain(format!("J_g must be positive, got {}", self.j_g));
        }
        if !(self.ugg_n.is_finite() && self.ugg_n >= 0.0) {
            return domain(format!("UggN must be non-negative, got {}", self.ugg_n));
        }
        Ok(())
    }

    pub fn lambda1(&self) -> f64 {
        self.j_g + self.ugg_n
    }

    pub fn lambda2(&self) -> f64 {
        self.ugg_n / 2.0
    }

    /// Bogoliubov frequency `√(λ₁² − 4λ₂²)`.
    pub fn bogoliubov_frequency(&self) -> f64 {
        let (l1, l2) = (self.lambda1(), self.lambda2());
        (l1 * l1 - 4.0 * l2 * l2).sqrt()
    }
}

/// `λ₁ f†f + λ₂ (f†² + f²)` on `dim` Fock levels.
pub fn build_squeezing_hamiltonian(params: &SqueezingParams, dim: usize) -> Result<SparseOperator> {
    params.validate()?;
    if dim < 4 {
        return domain(format!("squeezing Hamiltonian needs at least 4 levels, got {dim}"));
    }
    let (l1, l2) = (params.lambda1(), params.lambda2());
    let mut triplets = Vec::with_capacity(3 * dim);
    for n in 0..dim {
        triplets.push((n, n, Complex64::new(l1 * n as f64, 0.0)));
        if n + 2 < dim {
            let el = Complex64::new(l2 * (((n + 1) * (n + 2)) as f64).sqrt(), 0.0);
            triplets.push((n + 2, n, el));
            triplets.push((n, n + 2, el));
        }
    }
    SparseOperator::from_triplets(dim, triplets)
}

/// Factorization coefficients at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorization {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub beta: Complex64,
}

/// `(cosh β, sinh β / β)` from `β²`.
fn even_hyperbolics(beta_sq: Complex64, beta: Complex64) -> (Complex64, Complex64) {
    if beta_sq.norm() < SMALL_BETA_SQ {
        let mut cosh = Complex64::new(0.0, 0.0);
        let mut sinhc = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..12u32 {
            cosh += term;
            sinhc += term / f64::from(2 * k + 1);
            term *= beta_sq / f64::from((2 * k + 1) * (2 * k + 2));
        }
        (cosh, sinhc)
    } else {
        (beta.cosh(), beta.sinh() / beta)
    }
}

fn factorization_with_beta(params: &SqueezingParams, t: f64, beta: Complex64) -> Result<Factorization> {
    let minus_2i = Complex64::new(0.0, -2.0);
    let l1p = minus_2i * params.lambda1() * t;
    let l2p = minus_2i * params.lambda2() * t;
    let beta_sq = l1p * l1p / 4.0 - l2p * l2p;
    let (cosh, sinhc) = even_hyperbolics(beta_sq, beta);
    let base = cosh - l1p / 2.0 * sinhc;
    let denom = 2.0 * cosh - l1p * sinhc;
    if base.norm() < 1e-300 || denom.norm() < 1e-300 {
        return Err(Error::Numeric(format!(
            "factorization denominator vanishes at t = {t} (β² = {beta_sq}, |base| = {:.3e}, |denominator| = {:.3e})",
            base.norm(),
            denom.norm()
        )));
    }
    let lambda1 = base.powi(-2);
    let lambda2 = 2.0 * l2p * sinhc / denom;
    if !(lambda1.is_finite() && lambda2.is_finite()) {
        return Err(Error::Numeric(format!("non-finite factorization coefficients at t = {t}")));
    }
    Ok(Factorization { lambda1, lambda2, beta })
}

fn beta_squared(params: &SqueezingParams, t: f64) -> Complex64 {
    let minus_2i = Complex64::new(0.0, -2.0);
    let l1p = minus_2i * params.lambda1() * t;
    let l2p = minus_2i * params.lambda2() * t;
    l1p * l1p / 4.0 - l2p * l2p
}

/// `(Λ₁, Λ₂, β)` at time `t` with β on the principal branch.
pub fn factorization_coefficients(params: &SqueezingParams, t: f64) -> Result<Factorization> {
    params.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    factorization_with_beta(params, t, beta_squared(params, t).sqrt())
}

/// Time sweep that keeps β on a continuous branch: each new root is the one
/// of `±√β²` nearest the previous value.
#[derive(Debug, Clone)]
pub struct FactorizationSweep {
    params: SqueezingParams,
    last: Option<(f64, Complex64)>,
}

impl FactorizationSweep {
    pub fn new(params: SqueezingParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, last: None })
    }

    /// Coefficients at `t`; times must be non-decreasing.
    pub fn at(&mut self, t: f64) -> Result<Factorization> {
        if !(t.is_finite() && t >= 0.0) {
            return domain(format!("time must be non-negative, got {t}"));
        }
        if let Some((t_prev, _)) = self.last {
            if t < t_prev {
                return domain(format!("sweep times must be non-decreasing ({t} after {t_prev})"));
            }
        }
        let root = beta_squared(&self.params, t).sqrt();
        let beta = match self.last {
            Some((_, prev)) if (-root - prev).norm() < (root - prev).norm() => -root,
            _ => root,
        };
        self.last = Some((t, beta));
        factorization_with_beta(&self.params, t, beta)
    }
}

/// Evolved vacuum on `dim` Fock levels.
///
/// Fails with [`Error::Truncation`] when the weight beyond level `dim − 1`
/// exceeds [`TAIL_THRESHOLD`].
pub fn squeezed_vacuum_state(params: &SqueezingParams, t: f64, dim: usize) -> Result<StateVector> {
    if dim == 0 {
        return domain("dimension must be positive");
    }
    let f = factorization_coefficients(params, t)?;
    let half = f.lambda2 / 2.0;
    let x = half.norm_sqr() * 4.0;
    if x >= 1.0 {
        return Err(Error::Numeric(format!("|Λ₂| = {} is not below 1", x.sqrt())));
    }
    let mut amps = DVector::<Complex64>::zeros(dim);
    let mut c = f.lambda1.powf(0.25);
    let mut tail = 0.0;
    // |c_n|² decreases monotonically, so the tail sum stops once a term is
    // negligible against what has been accumulated beyond the cut.
    for n in 0.. {
        let w = c.norm_sqr();
        if 2 * n < dim {
            amps[2 * n] = c;
        } else {
            tail += w;
            if w <= SERIES_REL_TOL * tail {
                break;
            }
        }
        if w == 0.0 {
            break;
        }
        let ratio = (((2 * n + 2) * (2 * n + 1)) as f64).sqrt() / (n + 1) as f64;
        c *= half * ratio;
    }
    if tail > TAIL_THRESHOLD {
        return Err(Error::Truncation {
            tail_weight: tail,
            threshold: TAIL_THRESHOLD,
            dim,
        });
    }
    StateVector::new(amps)
}

/// `⟨f†f⟩(t) = |Λ₁|^{1/2} Σ_n n (2n)! |Λ₂|^{2n} / (2^{2n−1} (n!)²)`.
pub fn mean_asymmetric_excitation(params: &SqueezingParams, t: f64) -> Result<f64> {
    let f = factorization_coefficients(params, t)?;
    let x = f.lambda2.norm_sqr();
    if x >= 1.0 {
        return Err(Error::Numeric(format!(
            "excitation series diverges: |Λ₂| = {} at t = {t}",
            x.sqrt()
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // Term n: 2n C(2n, n) (x/4)^n; consecutive ratio (2n+1)/(2n) · x.
    let mut term = 2.0 * 2.0 * x / 4.0;
    let mut sum = 0.0;
    for n in 1..=SERIES_MAX_TERMS {
        sum += term;
        let ratio = (2 * n + 1) as f64 / (2 * n) as f64 * x;
        if ratio < 1.0 && term < SERIES_REL_TOL * sum {
            return Ok(f.lambda1.norm().sqrt() * sum);
        }
        term *= ratio;
    }
    Err(Error::Numeric(format!(
        "excitation series did not reach relative tolerance {SERIES_REL_TOL} in {SERIES_MAX_TERMS} terms (|Λ₂| = {})",
        x.sqrt()
    )))
}
