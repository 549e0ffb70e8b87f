//! Hamiltonians on a constrained basis (ℏ = 1, frequencies in rad/μs):
//!
//! `H = Σ_i (Ω/2)(e^{iφ}|g_i⟩⟨r_i| + e^{−iφ}|r_i⟩⟨g_i|) − Δ Σ_i n_i + Σ_{i<j} V_ij n_i n_j`
//!
//! The blockade projector is implicit in the basis. `V_ij` is present only
//! for the van-der-Waals model.

mod schedule;
mod sparse;

use serde::{Deserialize, Serialize};

pub use schedule::{cubic, SweepSchedule};
pub use sparse::{SparseOperator, C64};

use crate::error::{Error, Result};
use crate::hilbert::{enumerate_basis_with_cap, ConstrainedBasis};
use crate::lattice::{BlockadeGraph, RubyLattice};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Pxp,
    Vdw { r_trunc_over_a: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub model: Model,
    pub rb_over_a: f64,
    pub omega: f64,
    pub delta: f64,
    #[serde(default)]
    pub phase: f64,
}

impl HamiltonianSpec {
    pub fn pxp(rb_over_a: f64, omega: f64, delta: f64) -> Self {
        Self {
            model: Model::Pxp,
            rb_over_a,
            omega,
            delta,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0) || !self.delta.is_finite() || !self.phase.is_finite() {
            return Err(Error::InvalidArgument("need omega >= 0 and finite delta, phase".into()));
        }
        if !(self.rb_over_a > 0.0) {
            return Err(Error::InvalidArgument("rb_over_a must be positive".into()));
        }
        if let Model::Vdw { r_trunc_over_a } = self.model {
            if !(r_trunc_over_a >= 0.0) {
                return Err(Error::InvalidArgument("r_trunc_over_a must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Constraint graph for this model: the full blockade graph for PXP,
    /// intra-triangle pairs only for van der Waals.
    pub fn constraint_graph(&self, lat: &RubyLattice) -> Result<BlockadeGraph> {
        match self.model {
            Model::Pxp => lat.blockade_graph(self.rb_over_a),
            Model::Vdw { .. } => intra_triangle_graph(lat),
        }
    }

    pub fn basis(&self, lat: &RubyLattice, cap: usize) -> Result<ConstrainedBasis> {
        enumerate_basis_with_cap(&self.constraint_graph(lat)?, cap)
    }

    /// Parts that do not depend on Ω, Δ and φ. For van der Waals the
    /// interaction scale is `self.omega`.
    pub fn parts(&self, b: &ConstrainedBasis, lat: &RubyLattice) -> Result<HamiltonianParts> {
        self.validate()?;
        match self.model {
            Model::Pxp => Ok(HamiltonianParts::new(b, None)),
            Model::Vdw { r_trunc_over_a } => {
                if lat.n_sites() != b.n_sites() {
                    return Err(Error::DimensionMismatch {
                        expected: lat.n_sites(),
                        got: b.n_sites(),
                    });
                }
                let pairs: Vec<(usize, usize, f64)> = lat
                    .interaction_list(self.rb_over_a, r_trunc_over_a)?
                    .into_iter()
                    .filter(|p| !p.hard)
                    .map(|p| (p.i, p.j, p.strength))
                    .collect();
                Ok(HamiltonianParts::new(b, Some(&pairs)))
            }
        }
    }

    pub fn build(&self, b: &ConstrainedBasis, lat: &RubyLattice) -> Result<SparseOperator> {
        Ok(self.parts(b, lat)?.assemble(self.omega, self.delta, self.phase, self.omega))
    }
}

/// Blockade graph joining only the three atoms of each triangle.
pub fn intra_triangle_graph(lat: &RubyLattice) -> Result<BlockadeGraph> {
    let edges = lat.triangles().iter().flat_map(|t| {
        let [a, b, c] = t.sites;
        [(a, b), (b, c), (a, c)]
    });
    BlockadeGraph::from_edges(lat.n_sites(), edges)
}

/// Sparsity pattern and coefficient tables of a Hamiltonian. Every row
/// stores its diagonal entry, so [`HamiltonianParts::assemble`] only
/// rewrites values.
#[derive(Clone, Debug)]
pub struct HamiltonianParts {
    pattern: SparseOperator,
    /// Per stored entry: 0 diagonal, 1 row state has the flipped site empty,
    /// 2 row state has it occupied.
    kind: Vec<u8>,
    number: Vec<f64>,
    interaction: Option<Vec<f64>>,
}

impl HamiltonianParts {
    pub fn new(b: &ConstrainedBasis, pairs: Option<&[(usize, usize, f64)]>) -> Self {
        let dim = b.dim();
        let n = b.n_sites();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut kind = Vec::new();
        let mut scratch: Vec<u64> = vec![0; b.words(0).len()];
        let mut row: Vec<(u32, u8)> = Vec::new();
        for k in 0..dim {
            row.clear();
            row.push((k as u32, 0));
            scratch.copy_from_slice(b.words(k));
            for i in 0..n {
                let occ = scratch[i / 64] >> (i % 64) & 1 == 1;
                scratch[i / 64] ^= 1 << (i % 64);
                if let Some(t) = b.find_words(&scratch) {
                    row.push((t as u32, if occ { 2 } else { 1 }));
                }
                scratch[i / 64] ^= 1 << (i % 64);
            }
            row.sort_unstable_by_key(|e| e.0);
            for &(c, kd) in &row {
                col_idx.push(c);
                kind.push(kd);
            }
            row_ptr.push(col_idx.len());
        }
        let values = vec![C64::new(0.0, 0.0); col_idx.len()];
        let number = (0..dim).map(|k| b.count_ones(k) as f64).collect();
        let interaction = pairs.map(|pairs| {
            (0..dim)
                .map(|k| {
                    pairs
                        .iter()
                        .filter(|&&(i, j, _)| b.is_occupied(k, i) && b.is_occupied(k, j))
                        .map(|p| p.2)
                        .sum()
                })
                .collect()
        });
        Self {
            pattern: SparseOperator::from_raw(dim, row_ptr, col_idx, values),
            kind,
            number,
            interaction,
        }
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    /// Excitation number of each basis state.
    pub fn number(&self) -> &[f64] {
        &self.number
    }

    /// `Σ V_ij n_i n_j / Ω_scale` per basis state, if any.
    pub fn interaction(&self) -> Option<&[f64]> {
        self.interaction.as_deref()
    }

    /// Fills in numeric values; `v_scale` multiplies the interaction table.
    pub fn assemble(&self, omega: f64, delta: f64, phase: f64, v_scale: f64) -> SparseOperator {
        let up = C64::from_polar(omega / 2.0, phase);
        let down = up.conj();
        let mut h = self.pattern.clone();
        let dim = h.dim();
        let diag: Vec<f64> = (0..dim)
            .map(|k| {
                -delta * self.number[k] + self.interaction.as_ref().map_or(0.0, |v| v_scale * v[k])
            })
            .collect();
        let ranges: Vec<std::ops::Range<usize>> = (0..dim).map(|i| h.row_range(i)).collect();
        let values = h.values_mut();
        for (row, r) in ranges.into_iter().enumerate() {
            for e in r {
                values[e] = match self.kind[e] {
                    0 => C64::new(diag[row], 0.0),
                    1 => up,
                    _ => down,
                };
            }
        }
    h
    }
}

pub fn build_pxp(b: &ConstrainedBasis, omega: f64, delta: f64, phase: f64) -> Result<SparseOperator> {
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be nonnegative, got {omega}")));
    }
    Ok(HamiltonianParts::new(b, None).assemble(omega, delta, phase, 0.0))
}

pub fn build_vdw(b: &ConstrainedBasis, lat: &RubyLattice, spec: &HamiltonianSpec) -> Result<SparseOperator> {
    if !matches!(spec.model, Model::Vdw { .. }) {
        return Err(Error::InvalidArgument("build_vdw needs a van-der-Waals model spec".into()));
    }
    spec.build(b, lat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::enumerate_basis;
    use crate::lattice::Boundary;

    fn triangle() -> ConstrainedBasis {
        enumerate_basis(&BlockadeGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()).unwrap()
    }

    #[test]
    fn single_triangle_matrix() {
        let b = triangle();
        let omega = 1.7;
        let i = C64::new(0.0, 1.0);
        for (phase, sign) in [(-std::f64::consts::FRAC_PI_2, -1.0), (std::f64::consts::FRAC_PI_2, 1.0)] {
            let h = build_pxp(&b, omega, 0.0, phase).unwrap().to_dense();
            for k in 1..4 {
                assert!((h[(0, k)] - sign * i * omega / 2.0).norm() < 1e-15);
                assert!((h[(k, 0)] + sign * i * omega / 2.0).norm() < 1e-15);
            }
            for r in 1..4 {
                for c in 1..4 {
                    assert_eq!(h[(r, c)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_omega_is_diagonal() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        let b = enumerate_basis(&lat.blockade_graph(1.5).unwrap()).unwrap();
        let h = build_pxp(&b, 0.0, 0.7, 0.3).unwrap();
        for (i, j, v) in h.entries() {
            if i == j {
                assert!((v.re + 0.7 * b.count_ones(i) as f64).abs() < 1e-15);
            } else {
                assert_eq!(v.norm(), 0.0);
            }
        }
    }

    #[test]
    fn vdw_requires_vdw_spec() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        let b = enumerate_basis(&intra_triangle_graph(&lat).unwrap()).unwrap();
        assert!(build_vdw(&b, &lat, &HamiltonianSpec::pxp(2.4, 1.0, 0.0)).is_err());
    }
}
