//! Projective snapshots and string observables: exact expectations on
//! wavefunctions, loop-averaged estimates on snapshots, and derived
//! quantities (BFFM ratios, vertex statistics, connected correlators,
//! scaling roots, logical operators).

mod analysis;
mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use analysis::{
    bffm, bffm_report, check_hole_to_boundary, winds_hole, connected_correlator_exact, connected_correlator_snap, logical_ops, logical_ops_snap, mean_density_exact,
    mean_density_snap, scaling_report, site_densities_exact, site_densities_snap, vertex_stats, vertex_stats_exact, LogicalReport,
    Region, ScalingRoots, VertexStats, BFFM_EPSILON,
};
pub use io::{read_snapshots, reports_to_csv, reports_to_json, write_snapshots, REPORT_CSV_HEADER, SNAPSHOT_FORMAT_VERSION};

use crate::dynamics::{Quench, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{SparseOperator, C64};
use crate::hilbert::{words_for, BasisState, ConstrainedBasis};
use crate::lattice::{dual_string, RubyLattice, StringKind, StringSpec};

/// One projective readout.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub bits: BasisState,
    /// Sweep endpoint Δ/Ω the state was prepared at (NaN when not applicable).
    pub endpoint: f64,
    pub seed: u64,
    /// Acquisition time as free text, when known. Sampling leaves it empty so
    /// that datasets are reproducible bit for bit.
    pub timestamp: Option<String>,
}

/// Estimate of one observable, averaged over loop instances and repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableReport {
    pub observable: String,
    pub label: String,
    pub endpoint: f64,
    pub estimate: f64,
    /// `σ(P)/√R` over per-repetition loop averages; zero for exact values.
    pub stderr: f64,
    /// Repetitions; zero for exact values.
    pub n_samples: usize,
    pub n_loop_instances: usize,
    /// False when the estimate is undefined (for instance a BFFM ratio with a
    /// vanishing denominator); `estimate` is then NaN.
    #[serde(default = "yes")]
    pub defined: bool,
}

fn yes() -> bool {
    true
}

/// I.i.d. draws from `|ψ_k|²`, reproducible for a given seed.
pub fn sample_snapshots(psi: &StateVector, n: usize, seed: u64, endpoint: f64) -> Vec<Snapshot> {
    let mut cdf = Vec::with_capacity(psi.dim());
    let mut acc = 0.0;
    for z in psi.amplitudes() {
        acc += z.norm_sqr();
        cdf.push(acc);
    }
    let basis = psi.basis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= u).min(psi.dim() - 1);
            Snapshot {
                bits: basis.state_of(k).expect("index in range"),
                endpoint,
                seed,
                timestamp: None,
            }
        })
        .collect()
}

/// Bit mask of a site set, in basis-word layout.
pub(crate) fn site_mask(n_sites: usize, sites: &[usize]) -> Result<Vec<u64>> {
    let mut m = vec![0u64; words_for(n_sites)];
    for &s in sites {
        if s >= n_sites {
            return Err(Error::OutOfRange { index: s, dim: n_sites });
        }
        m[s / 64] ^= 1 << (s % 64);
    }
    Ok(m)
}

pub(crate) fn parity_of(words: &[u64], mask: &[u64]) -> f64 {
    let ones: u32 = words.iter().zip(mask).map(|(w, m)| (w & m).count_ones()).sum();
    if ones % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn z_sites(s: &StringSpec) -> Result<&[usize]> {
    s.z_sites()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a Z string", s.label)))
}

fn x_steps(s: &StringSpec) -> Result<&[crate::lattice::XStep]> {
    s.x_steps()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not an X string", s.label)))
}

/// `⟨Π_{i∈S}(1 − 2n_i)⟩` on a site set.
pub fn sites_parity_exact(psi: &StateVector, sites: &[usize]) -> Result<f64> {
    let basis = psi.basis();
    let mask = site_mask(basis.n_sites(), sites)?;
    Ok(psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, z)| z.norm_sqr() * parity_of(basis.words(k), &mask))
        .sum())
}

pub fn z_parity_exact(psi: &StateVector, s: &StringSpec) -> Result<f64> {
    sites_parity_exact(psi, z_sites(s)?)
}

pub fn z_parity_snap(snap: &Snapshot, s: &StringSpec) -> Result<i8> {
    let mask = site_mask(snap.bits.n_sites(), z_sites(s)?)?;
    Ok(parity_of(snap.bits.words(), &mask) as i8)
}

/// Product of per-triangle X operators along the string, compressed to the
/// basis (configurations outside the basis are dropped, which leaves every
/// expectation value in the basis unchanged).
pub fn x_operator(lat: &RubyLattice, basis: &ConstrainedBasis, s: &StringSpec) -> Result<SparseOperator> {
    let steps = x_steps(s)?;
    s.validate(lat)?;
    if basis.n_sites() != lat.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: lat.n_sites(),
            got: basis.n_sites(),
        });
    }
    let local: Vec<(usize, usize, usize)> = steps
        .iter()
        .map(|st| {
            let t = &lat.triangles()[st.triangle];
            let e = st.edge as usize;
            (t.sites[e], t.sites[(e + 1) % 3], t.sites[(e + 2) % 3])
        })
        .collect();
    let mut triplets = Vec::new();
    let mut w: Vec<u64> = vec![0; words_for(basis.n_sites())];
    let bit = |w: &[u64], i: usize| w[i / 64] >> (i % 64) & 1 == 1;
    let toggle = |w: &mut [u64], i: usize| w[i / 64] ^= 1 << (i % 64);
    'states: for k in 0..basis.dim() {
        w.copy_from_slice(basis.words(k));
        let mut coeff = 1.0;
        for &(e, f, g) in &local {
            match (bit(&w, e), bit(&w, f), bit(&w, g)) {
                (false, false, false) | (true, false, false) => {
                    toggle(&mut w, e);
                    coeff = -coeff;
                }
                (false, true, false) | (false, false, true) => {
                    toggle(&mut w, f);
                    toggle(&mut w, g);
                }
                _ => continue 'states,
            }
        }
        if let Some(t) = basis.find_words(&w) {
            triplets.push((t, k, C64::new(coeff, 0.0)));
        }
    }
    SparseOperator::from_triplets(basis.dim(), triplets)
}

pub fn x_parity_exact(psi: &StateVector, lat: &RubyLattice, s: &StringSpec) -> Result<f64> {
    Ok(psi.expectation(&x_operator(lat, psi.basis(), s)?)?.re)
}

/// How quench-path X estimates are evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Estimator {
    Exact,
    Snapshots { n: usize, seed: u64 },
}

/// Measures X strings the way the experiment does: rotate with the quench,
/// then read the dual Z strings. Several symmetry-equivalent loops are
/// averaged per repetition.
pub fn x_parity_via_quench(
    psi: &StateVector,
    lat: &RubyLattice,
    quench: &Quench,
    loops: &[StringSpec],
    estimator: Estimator,
    label: &str,
    endpoint: f64,
) -> Result<ObservableReport> {
    let duals: Vec<StringSpec> = loops
        .iter()
        .map(|l| match l.kind() {
            StringKind::X => dual_string(lat, l),
            StringKind::Z => Err(Error::InvalidArgument(format!("`{}` is not an X string", l.label))),
        })
        .collect::<Result<_>>()?;
    let rotated = quench.apply(psi)?;
    match estimator {
        Estimator::Exact => loop_average_exact(&rotated, &duals, "x_parity", label, endpoint),
        Estimator::Snapshots { n, seed } => {
            let snaps = sample_snapshots(&rotated, n, seed, endpoint);
            loop_average_snap(&snaps, &duals, "x_parity", label)
        }
    }
}

/// Exact loop average of Z strings.
pub fn loop_average_exact(
    psi: &StateVector,
    loops: &[StringSpec],
    observable: &str,
    label: &str,
    endpoint: f64,
) -> Result<ObservableReport> {
    if loops.is_empty() {
        return Err(Error::InvalidArgument(format!("no loop instances for `{label}`")));
    }
    let mut sum = 0.0;
    for l in loops {
        sum += z_parity_exact(psi, l)?;
    }
    Ok(ObservableReport {
        observable: observable.into(),
        label: label.into(),
        endpoint,
        estimate: sum / loops.len() as f64,
        stderr: 0.0,
        n_samples: 0,
        n_loop_instances: loops.len(),
        defined: true,
    })
}

/// Snapshot loop average of Z strings with the standard error of the mean
/// over repetitions.
pub fn loop_average_snap(snaps: &[Snapshot], loops: &[StringSpec], observable: &str, label: &str) -> Result<ObservableReport> {
    if snaps.is_empty() {
        return Err(Error::InvalidArgument("no snapshots".into()));
    }
    if loops.is_empty() {
        return Err(Error::InvalidArgument(format!("no loop instances for `{label}`")));
    }
    let n_sites = snaps[0].bits.n_sites();
    let masks: Vec<Vec<u64>> = loops
        .iter()
        .map(|l| site_mask(n_sites, z_sites(l)?))
        .collect::<Result<_>>()?;
    let per_rep: Vec<f64> = snaps
        .iter()
        .map(|s| {
            if s.bits.n_sites() != n_sites {
                return Err(Error::DimensionMismatch {
                    expected: n_sites,
                    got: s.bits.n_sites(),
                });
            }
            Ok(masks.iter().map(|m| parity_of(s.bits.words(), m)).sum::<f64>() / masks.len() as f64)
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&per_rep);
    Ok(ObservableReport {
        observable: observable.into(),
        label: label.into(),
        endpoint: snaps[0].endpoint,
        estimate: mean,
        stderr,
        n_samples: snaps.len(),
        n_loop_instances: loops.len(),
        defined: true,
    })
}

/// Mean and `σ/√R` with the sample standard deviation.
pub fn mean_and_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hilbert::enumerate_basis;
    use crate::lattice::{BlockadeGraph, Boundary, XStep};

    #[test]
    fn vacuum_snapshots_are_empty() {
        let b = Arc::new(enumerate_basis(&BlockadeGraph::from_edges(4, [(0, 1)]).unwrap()).unwrap());
        let snaps = sample_snapshots(&StateVector::vacuum(b), 50, 1, 0.0);
        assert!(snaps.iter().all(|s| s.bits.count_ones() == 0));
    }

    #[test]
    fn sampling_is_deterministic_and_balanced() {
        let b = Arc::new(enumerate_basis(&BlockadeGraph::from_edges(2, []).unwrap()).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, h)];
        let psi = StateVector::new(b, amps).unwrap();
        let a = sample_snapshots(&psi, 10_000, 42, 0.0);
        assert_eq!(a, sample_snapshots(&psi, 10_000, 42, 0.0));
        let ones = a.iter().filter(|s| s.bits.count_ones() == 2).count() as f64;
        // binomial, 4σ = 200
        assert!((ones - 5000.0).abs() < 200.0);
        assert!(a.iter().all(|s| s.bits.count_ones() != 1));
    }

    #[test]
    fn single_triangle_lower_edge_x_on_vacuum() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        let b = Arc::new(enumerate_basis(&lat.blockade_graph(1.53).unwrap()).unwrap());
        let s = StringSpec::x(vec![XStep { triangle: 0, edge: 2 }], false, "lower");
        let x = x_operator(&lat, &b, &s).unwrap();
        let psi = StateVector::vacuum(Arc::clone(&b));
        assert_eq!(x_parity_exact(&psi, &lat, &s).unwrap(), 0.0);
        let out = x.apply(psi.amplitudes()).unwrap();
        let lower = lat.triangles()[0].sites[2];
        let k = b.index_of(&BasisState::from_sites(6, &[lower]).unwrap()).unwrap();
        assert_eq!(out[k], C64::new(-1.0, 0.0));
    }

    #[test]
    fn stderr_uses_sample_deviation() {
        let (m, e) = mean_and_stderr(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(m, 0.0);
        assert!((e - (4.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
