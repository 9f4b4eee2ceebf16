//! Fock-space bookkeeping: mode layouts, ladder operators and excitation
//! sectors.
//!
//! Basis states are ordered row-major in the layout's mode order: the last
//! mode varies fastest. For the layout `{a:3, c:2, d:2}` the occupation
//! tuple `(na, nc, nd)` sits at index `na·4 + nc·2 + nd`. This ordering is
//! part of the output contract (golden files depend on it).
//!
//! Ladder operators use hard truncation: the creation operator maps the top
//! level of a mode to zero.

mod sparse;
mod state;

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use sparse::{SparseOperator, DROP_TOLERANCE};
pub use state::{DensityMatrix, StateVector, HERMITIAN_TOL, NORM_TOL, POSITIVITY_TOL, TRACE_TOL};
pub(crate) use state::hermitian_eigenvalues;

use crate::error::{domain, Result};

/// One truncated bosonic mode with `dim = n_max + 1` levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mode {
    pub label: String,
    pub dim: usize,
}

/// Ordered set of truncated modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeLayout {
    modes: Vec<Mode>,
    strides: Vec<usize>,
    dim: usize,
}

impl ModeLayout {
    pub fn new<I, S>(modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let modes: Vec<Mode> = modes
            .into_iter()
            .map(|(label, dim)| Mode {
                label: label.into(),
                dim,
            })
            .collect();
        if modes.is_empty() {
            return domain("layout needs at least one mode");
        }
        let mut seen = HashSet::new();
        for m in &modes {
            if m.dim == 0 {
                return domain(format!("mode '{}' has zero dimension", m.label));
            }
            if !seen.insert(m.label.as_str()) {
                return domain(format!("duplicate mode label '{}'", m.label));
            }
        }
        let mut strides = vec![1usize; modes.len()];
        let mut dim: usize = 1;
        for (i, m) in modes.iter().enumerate().rev() {
            strides[i] = dim;
            dim = dim
                .checked_mul(m.dim)
                .ok_or_else(|| crate::Error::Resource("layout dimension overflows".into()))?;
        }
        Ok(Self {
            modes,
            strides,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.modes.iter().map(|m| m.label.as_str())
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| crate::Error::Domain(format!("unknown mode label '{label}'")))
    }

    pub fn mode_dim(&self, label: &str) -> Result<usize> {
        Ok(self.modes[self.mode_index(label)?].dim)
    }

    /// True when the layout consists of exactly these labels, in any order.
    pub fn has_exactly(&self, labels: &[&str]) -> bool {
        self.modes.len() == labels.len() && labels.iter().all(|l| self.mode_index(l).is_ok())
    }

    /// Linear index of an occupation tuple.
    pub fn basis_index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes.len() {
            return domain(format!(
                "expected {} occupations, got {}",
                self.modes.len(),
                occupations.len()
            ));
        }
        let mut idx = 0;
        for ((m, &n), &stride) in self.modes.iter().zip(occupations).zip(&self.strides) {
            if n >= m.dim {
                return domain(format!(
                    "occupation {n} out of range for mode '{}' (dim {})",
                    m.label, m.dim
                ));
            }
            idx += n * stride;
        }
        Ok(idx)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn occupations_of(&self, index: usize) -> Result<Vec<usize>> {
        if index >= self.dim {
            return domain(format!("basis index {index} out of range for dimension {}", self.dim));
        }
        Ok(self.occupations_unchecked(index))
    }

    fn occupations_unchecked(&self, index: usize) -> Vec<usize> {
        self.modes
            .iter()
            .zip(&self.strides)
            .map(|(m, &s)| (index / s) % m.dim)
            .collect()
    }

    fn occupation_of_mode(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.modes[mode].dim
    }

    /// Total occupation of a basis index.
    pub fn total_occupation(&self, index: usize) -> usize {
        (0..self.modes.len()).map(|m| self.occupation_of_mode(index, m)).sum()
    }

    /// Product basis state `|n₁, n₂, …⟩`.
    pub fn basis_state(&self, occupations: &[usize]) -> Result<StateVector> {
        StateVector::basis(self.dim, self.basis_index(occupations)?)
    }

    pub fn identity(&self) -> SparseOperator {
        SparseOperator::identity(self.dim)
    }

    /// Annihilation operator of one mode, identity on the others.
    pub fn annihilation(&self, label: &str) -> Result<SparseOperator> {
        let m = self.mode_index(label)?;
        let stride = self.strides[m];
        SparseOperator::from_triplets(
            self.dim,
            (0..self.dim).filter_map(|i| {
                let n = self.occupation_of_mode(i, m);
                (n > 0).then(|| (i - stride, i, Complex64::new((n as f64).sqrt(), 0.0)))
            }),
        )
    }

    pub fn creation(&self, label: &str) -> Result<SparseOperator> {
        Ok(self.annihilation(label)?.adjoint())
    }

    /// Number operator `a†a` (diagonal).
    pub fn number(&self, label: &str) -> Result<SparseOperator> {
        let m = self.mode_index(label)?;
        let diag: Vec<f64> = (0..self.dim).map(|i| self.occupation_of_mode(i, m) as f64).collect();
        Ok(SparseOperator::diagonal(&diag))
    }

    /// Total excitation `Σ_m n̂_m`.
    pub fn total_number(&self) -> SparseOperator {
        let diag: Vec<f64> = (0..self.dim).map(|i| self.total_occupation(i) as f64).collect();
        SparseOperator::diagonal(&diag)
    }

    /// Diagonal operator `f(n)` acting on one mode.
    pub fn mode_function(&self, label: &str, f: impl Fn(usize) -> f64) -> Result<SparseOperator> {
        let m = self.mode_index(label)?;
        let diag: Vec<f64> = (0..self.dim).map(|i| f(self.occupation_of_mode(i, m))).collect();
        Ok(SparseOperator::diagonal(&diag))
    }

    /// Embeds a single-mode operator (dimension = that mode's dim) into the
    /// full space.
    pub fn embed_single_mode(&self, label: &str, op: &SparseOperator) -> Result<SparseOperator> {
        let m = self.mode_index(label)?;
        if op.dim() != self.modes[m].dim {
            return domain(format!(
                "single-mode operator dim {} does not match mode '{}' dim {}",
                op.dim(),
                label,
                self.modes[m].dim
            ));
        }
        let left: usize = self.modes[..m].iter().map(|x| x.dim).product();
        let right: usize = self.modes[m + 1..].iter().map(|x| x.dim).product();
        Ok(SparseOperator::identity(left)
            .kron(op)
            .kron(&SparseOperator::identity(right)))
    }

    /// Basis indices where the named mode sits at its top level.
    pub fn top_level_indices(&self, label: &str) -> Result<Vec<usize>> {
        let m = self.mode_index(label)?;
        let top = self.modes[m].dim - 1;
        Ok((0..self.dim).filter(|&i| self.occupation_of_mode(i, m) == top).collect())
    }
}

/// Retained subspace of a layout: sector index → full-space index.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMap {
    layout: ModeLayout,
    indices: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl SectorMap {
    /// Subspace of basis states with total occupation ≤ `n_total_max`.
    pub fn excitation_sector(layout: &ModeLayout, n_total_max: i64) -> Result<Self> {
        if n_total_max < 0 {
            return domain(format!("n_total_max must be non-negative, got {n_total_max}"));
        }
        let cap = n_total_max as usize;
        let indices: Vec<usize> = (0..layout.dim())
            .filter(|&i| layout.total_occupation(i) <= cap)
            .collect();
        Ok(Self::from_indices(layout, indices))
    }

    fn from_indices(layout: &ModeLayout, indices: Vec<usize>) -> Self {
        let mut position = vec![None; layout.dim()];
        for (k, &i) in indices.iter().enumerate() {
            position[i] = Some(k);
        }
        Self {
            layout: layout.clone(),
            indices,
            position,
        }
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Full-space index of each sector index.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn sector_index(&self, full_index: usize) -> Option<usize> {
        self.position.get(full_index).copied().flatten()
    }

    /// `P A P` expressed in the sector basis.
    pub fn project(&self, op: &SparseOperator) -> Result<SparseOperator> {
        if op.dim() != self.layout.dim() {
            return domain(format!(
                "operator dimension {} does not match layout dimension {}",
                op.dim(),
                self.layout.dim()
            ));
        }
        SparseOperator::from_triplets(
            self.dim(),
            op.iter().filter_map(|(r, c, v)| {
                Some((self.sector_index(r)?, self.sector_index(c)?, v))
            }),
        )
    }

    /// Sector operator lifted back to the full space (zero outside).
    pub fn embed(&self, op: &SparseOperator) -> Result<SparseOperator> {
        if op.dim() != self.dim() {
            return domain("operator dimension does not match sector dimension");
        }
        SparseOperator::from_triplets(
            self.layout.dim(),
            op.iter().map(|(r, c, v)| (self.indices[r], self.indices[c], v)),
        )
    }

    /// Restricts a full-space state; fails if it has weight outside the sector.
    pub fn project_state(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.layout.dim() {
            return domain("state dimension does not match layout dimension");
        }
        let amps = psi.amplitudes();
        let outside: f64 = (0..amps.len())
            .filter(|&i| self.sector_index(i).is_none())
            .map(|i| amps[i].norm_sqr())
            .sum();
        if outside > 1e-24 {
            return domain(format!("state has weight {outside:.3e} outside the sector"));
        }
        StateVector::new(DVector::from_iterator(
            self.dim(),
            self.indices.iter().map(|&i| amps[i]),
        ))
    }

    pub fn embed_state(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return domain("state dimension does not match sector dimension");
        }
        let mut v = DVector::zeros(self.layout.dim());
        for (k, &i) in self.indices.iter().enumerate() {
            v[i] = psi.amplitudes()[k];
        }
        Ok(if psi.is_normalized() {
            StateVector::new(v)?
        } else {
            StateVector::unnormalized(v)
        })
    }

    pub fn project_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.layout.dim() {
            return domain("density matrix dimension does not match layout dimension");
        }
        let m = rho.matrix();
        DensityMatrix::from_matrix_unchecked(DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            m[(self.indices[r], self.indices[c])]
        }))
    }

    pub fn embed_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return domain("density matrix dimension does not match sector dimension");
        }
        let n = self.layout.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, &i) in self.indices.iter().enumerate() {
            for (c, &j) in self.indices.iter().enumerate() {
                m[(i, j)] = rho.matrix()[(r, c)];
            }
        }
        DensityMatrix::from_matrix_unchecked(m)
    }

    /// Sector indices where the named mode sits at its top level.
    pub fn top_level_indices(&self, label: &str) -> Result<Vec<usize>> {
        Ok(self
            .layout
            .top_level_indices(label)?
            .into_iter()
            .filter_map(|i| self.sector_index(i))
            .collect())
    }
}

/// Projects `op` onto the states with total occupation ≤ `n_total_max`.
///
/// Returns the projected operator together with the sector map whose
/// `indices()` give the full-space index of each sector basis state.
pub fn restrict_to_excitation_sector(
    layout: &ModeLayout,
    op: &SparseOperator,
    n_total_max: i64,
) -> Result<(SparseOperator, SectorMap)> {
    let map = SectorMap::excitation_sector(layout, n_total_max)?;
    let projected = map.project(op)?;
    Ok((projected, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout(dims: &[(&str, usize)]) -> ModeLayout {
        ModeLayout::new(dims.iter().map(|&(l, d)| (l, d))).unwrap()
    }

    #[test]
    fn basis_index_examples() {
        let ab = layout(&[("a", 2), ("b", 2)]);
        assert_eq!(ab.basis_index(&[0, 0]).unwrap(), 0);
        assert_eq!(ab.basis_index(&[1, 1]).unwrap(), 3);

        let acd = layout(&[("a", 3), ("c", 2), ("d", 2)]);
        // enumerate the 12 tuples in row-major order and locate (1,0,1)
        let mut tuples = Vec::new();
        for na in 0..3 {
            for nc in 0..2 {
                for nd in 0..2 {
                    tuples.push(vec![na, nc, nd]);
                }
            }
        }
        let expected = tuples.iter().position(|t| t == &vec![1, 0, 1]).unwrap();
        assert_eq!(expected, 5);
        assert_eq!(acd.basis_index(&[1, 0, 1]).unwrap(), 5);
    }

    #[test]
    fn out_of_range_occupation_names_mode() {
        let acd = layout(&[("a", 3), ("c", 2), ("d", 2)]);
        let err = acd.basis_index(&[0, 2, 0]).unwrap_err().to_string();
        assert!(err.contains("'c'"), "{err}");
        assert!(acd.basis_index(&[0, 0]).is_err());
    }

    #[test]
    fn layout_rejects_duplicates_and_zero_dims() {
        assert!(ModeLayout::new([("a", 2), ("a", 3)]).is_err());
        assert!(ModeLayout::new([("a", 0)]).is_err());
        assert!(ModeLayout::new(Vec::<(&str, usize)>::new()).is_err());
    }

    #[test]
    fn ladder_action() {
        let one = layout(&[("a", 2)]);
        let a = one.annihilation("a").unwrap();
        let out = a.apply(one.basis_state(&[1]).unwrap().amplitudes()).unwrap();
        assert!((out[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(out[1].norm() < 1e-15);

        let three = layout(&[("a", 3)]);
        let a = three.annihilation("a").unwrap();
        let out = a.apply(three.basis_state(&[2]).unwrap().amplitudes()).unwrap();
        assert!((out[1].re - 2f64.sqrt()).abs() < 1e-15);

        let n = &a.adjoint() * &a;
        for k in 0..3 {
            let v = three.basis_state(&[k]).unwrap();
            let nv = n.apply(v.amplitudes()).unwrap();
            assert!((nv - v.amplitudes().scale(k as f64)).norm() < 1e-14);
        }
        assert!(three.annihilation("z").is_err());
    }

    #[test]
    fn canonical_commutator_below_truncation_edge() {
        let l = layout(&[("a", 4), ("c", 3), ("d", 5)]);
        for label in ["a", "c", "d"] {
            let a = l.annihilation(label).unwrap();
            let comm = &(&a * &a.adjoint()) - &(&a.adjoint() * &a);
            let top = l.mode_dim(label).unwrap() - 1;
            let m = l.mode_index(label).unwrap();
            for i in 0..l.dim() {
                let occ = l.occupations_of(i).unwrap();
                if occ[m] == top {
                    continue;
                }
                for j in 0..l.dim() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((comm.get(i, j) - Complex64::new(expect, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn sector_dimensions() {
        let l = layout(&[("a", 4), ("c", 4), ("d", 4)]);
        let id = l.identity();
        let (p1, m1) = restrict_to_excitation_sector(&l, &id, 1).unwrap();
        assert_eq!(m1.dim(), 4);
        let occs: Vec<Vec<usize>> = m1.indices().iter().map(|&i| l.occupations_of(i).unwrap()).collect();
        assert_eq!(occs, vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
        assert_eq!(p1, SparseOperator::identity(4));

        // brute force count of tuples with sum <= 3
        let mut count = 0;
        for a in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if a + c + d <= 3 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 20);
        let (p3, m3) = restrict_to_excitation_sector(&l, &id, 3).unwrap();
        assert_eq!(m3.dim(), 20);
        assert_eq!(p3, SparseOperator::identity(20));
        assert!(restrict_to_excitation_sector(&l, &id, -1).is_err());
    }

    #[test]
    fn sector_roundtrip_preserves_retained_block() {
        let l = layout(&[("a", 3), ("c", 3), ("d", 3)]);
        let a = l.annihilation("a").unwrap();
        let c = l.annihilation("c").unwrap();
        let hop = &(&a * &c.adjoint()) + &(&c * &a.adjoint());
        let (p, map) = restrict_to_excitation_sector(&l, &hop, 2).unwrap();
        let back = map.embed(&p).unwrap();
        for (r, col, v) in hop.iter() {
            if map.sector_index(r).is_some() && map.sector_index(col).is_some() {
                assert_eq!(back.get(r, col), v);
            }
        }
        for (r, col, v) in back.iter() {
            assert_eq!(hop.get(r, col), v);
        }
    }

    proptest! {
        #[test]
        fn occupation_roundtrip(dims in prop::collection::vec(1usize..6, 1..4), seed in 0usize..10_000) {
            let l = ModeLayout::new(dims.iter().enumerate().map(|(i, &d)| (format!("m{i}"), d))).unwrap();
            prop_assume!(l.dim() <= 200);
            let idx = seed % l.dim();
            let occ = l.occupations_of(idx).unwrap();
            prop_assert_eq!(l.basis_index(&occ).unwrap(), idx);
        }

        #[test]
        fn adjoint_is_involution(entries in prop::collection::vec((0usize..6, 0usize..6, -2.0f64..2.0, -2.0f64..2.0), 0..20)) {
            let op = SparseOperator::from_triplets(6, entries.into_iter().map(|(r, c, re, im)| (r, c, Complex64::new(re, im)))).unwrap();
            prop_assert_eq!(op.adjoint().adjoint(), op);
        }
    }
}
