//! Time evolution, quasi-adiabatic sweeps, the X→Z quench and ground states.

mod eigen;
mod krylov;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use eigen::{lowest_eigenpairs, residual, LanczosOptions, DENSE_THRESHOLD, EIGEN_RESIDUAL};
pub use krylov::{expv, DEFAULT_KRYLOV_DIM, DEFAULT_LOCAL_TOLERANCE};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_pxp, HamiltonianSpec, SparseOperator, SweepSchedule, C64};
use crate::hilbert::{enumerate_basis_with_cap, ConstrainedBasis, DEFAULT_DIMENSION_CAP};
use crate::lattice::RubyLattice;

pub const NORM_TOLERANCE: f64 = 1e-9;

/// Amplitudes over a shared basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<ConstrainedBasis>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<ConstrainedBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        Ok(Self { basis, amps })
    }

    /// All atoms in the ground state.
    pub fn vacuum(basis: Arc<ConstrainedBasis>) -> Self {
        Self::basis_state(basis, 0)
    }

    pub fn basis_state(basis: Arc<ConstrainedBasis>, k: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[k] = C64::new(1.0, 0.0);
        Self { basis, amps }
    }

    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        krylov::norm(&self.amps)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amps.iter_mut().for_each(|z| *z /= n);
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(krylov::dot(&self.amps, &other.amps))
    }

    pub fn expectation(&self, op: &SparseOperator) -> Result<C64> {
        op.expectation(&self.amps)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Total probability on the given basis indices.
    pub fn weight_on(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&k| self.amps[k].norm_sqr()).sum()
    }

    /// Re-expresses the state in a basis with a weaker constraint; every
    /// occupied configuration must exist there.
    pub fn embed(&self, target: Arc<ConstrainedBasis>) -> Result<StateVector> {
        if target.n_sites() != self.basis.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: target.n_sites(),
                got: self.basis.n_sites(),
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); target.dim()];
        for (k, &a) in self.amps.iter().enumerate() {
            let t = target.find_words(self.basis.words(k)).ok_or(Error::NotInBasis)?;
            amps[t] = a;
        }
        Ok(StateVector { basis: target, amps })
    }

    fn with_amps(&self, amps: Vec<C64>) -> StateVector {
        StateVector {
            basis: Arc::clone(&self.basis),
            amps,
        }
    }
}

fn check_norm(psi: &StateVector, before: f64) -> Result<()> {
    let after = psi.norm();
    if (after - before).abs() > NORM_TOLERANCE * before.max(1.0) {
        return Err(Error::NonConvergence {
            what: "norm-preserving evolution",
            residual: (after - before).abs(),
        });
    }
    Ok(())
}

/// `exp(−iHt)` for a fixed Hermitian `H`: a cached eigendecomposition below
/// [`DENSE_THRESHOLD`], Krylov steps above.
#[derive(Clone, Debug)]
pub enum Propagator {
    Dense { values: Vec<f64>, vectors: DMatrix<C64> },
    Krylov { h: SparseOperator, dim: usize, tol: f64 },
}

impl Propagator {
    pub fn new(h: &SparseOperator) -> Result<Self> {
        h.ensure_hermitian(1e-12 * (1.0 + h.norm_inf()))?;
        Ok(Self::new_unchecked(h))
    }

    fn new_unchecked(h: &SparseOperator) -> Self {
        if h.dim() <= DENSE_THRESHOLD {
            let (values, vectors) = eigen::dense_eigh(h);
            Propagator::Dense { values, vectors }
        } else {
            Propagator::Krylov {
                h: h.clone(),
                dim: DEFAULT_KRYLOV_DIM,
                tol: DEFAULT_LOCAL_TOLERANCE,
            }
        }
    }

    fn apply_raw(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        match self {
            Propagator::Dense { values, vectors } => {
                if v.len() != values.len() {
                    return Err(Error::DimensionMismatch {
                        expected: values.len(),
                        got: v.len(),
                    });
                }
                let x = nalgebra::DVector::from_column_slice(v);
                let mut c = vectors.ad_mul(&x);
                for (ck, &e) in c.iter_mut().zip(values) {
                    *ck *= C64::from_polar(1.0, -e * t);
                }
                Ok((vectors * c).iter().copied().collect())
            }
            Propagator::Krylov { h, dim, tol } => expv(h, v, t, *dim, *tol),
        }
    }

    pub fn apply(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        let out = psi.with_amps(self.apply_raw(&psi.amps, t)?);
        check_norm(&out, psi.norm())?;
        Ok(out)
    }
}

/// `ψ(t) = exp(−iHt) ψ`.
pub fn evolve(psi: &StateVector, h: &SparseOperator, t: f64) -> Result<StateVector> {
    Propagator::new(h)?.apply(psi, t)
}

/// Largest dimension at which a time-dependent step diagonalises densely;
/// the decomposition is rebuilt every step, so Krylov wins much earlier.
const TIMEDEP_DENSE_THRESHOLD: usize = 128;

/// Piecewise-constant midpoint propagation from `t0` to `t1`: the interval is
/// split into `ceil((t1 − t0)/dt)` equal steps and each uses `H` at its
/// midpoint, which is second-order accurate in the step.
pub fn evolve_timedep<F>(psi: &StateVector, builder: F, t0: f64, t1: f64, dt: f64) -> Result<StateVector>
where
    F: Fn(f64) -> Result<SparseOperator>,
{
    if !(dt > 0.0) || !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t1 >= t0 (dt = {dt}, [{t0}, {t1}])")));
    }
    if t1 == t0 {
        return Ok(psi.clone());
    }
    let steps = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let h_step = (t1 - t0) / steps as f64;
    let mut cur = psi.clone();
    let n0 = psi.norm();
    for k in 0..steps {
        let mid = t0 + (k as f64 + 0.5) * h_step;
        let h = builder(mid)?;
        if h.dim() != cur.dim() {
            return Err(Error::DimensionMismatch {
                expected: cur.dim(),
                got: h.dim(),
            });
        }
        if k == 0 {
            h.ensure_hermitian(1e-12 * (1.0 + h.norm_inf()))?;
        }
        let amps = match h.dim() <= TIMEDEP_DENSE_THRESHOLD {
            true => Propagator::new_unchecked(&h).apply_raw(&cur.amps, h_step)?,
            false => expv(&h, &cur.amps, h_step, DEFAULT_KRYLOV_DIM, DEFAULT_LOCAL_TOLERANCE)?,
        };
        cur = cur.with_amps(amps);
    }
    check_norm(&cur, n0)?;
    Ok(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Step of the piecewise-constant propagation, in the schedule's time unit.
    pub dt: f64,
    pub dimension_cap: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            dt: 0.02,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

/// Result of a sweep: one final state per requested endpoint, in request order.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub basis: Arc<ConstrainedBasis>,
    pub states: Vec<(f64, StateVector)>,
}

/// Runs the quasi-adiabatic preparation from the vacuum and stops the cubic
/// at each endpoint (given as Δ/Ω in units of the schedule's `omega_max`),
/// applying the ramp-down afterwards. Endpoints share the common part of the
/// trajectory.
pub fn run_sweep(
    lat: &RubyLattice,
    spec: &HamiltonianSpec,
    sched: &SweepSchedule,
    endpoints: &[f64],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    sched.validate()?;
    spec.validate()?;
    let basis = Arc::new(enumerate_basis_with_cap(&spec.constraint_graph(lat)?, opts.dimension_cap)?);
    let parts = spec.parts(&basis, lat)?;
    let v_scale = sched.omega_max;
    let cuts: Vec<SweepSchedule> = endpoints
        .iter()
        .map(|&r| sched.truncated_at_ratio(r))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..cuts.len()).collect();
    order.sort_by(|&a, &b| cuts[a].sweep_fraction.total_cmp(&cuts[b].sweep_fraction));

    let build = |t: f64| -> Result<SparseOperator> {
        let (omega, delta) = sched.eval(t)?;
        Ok(parts.assemble(omega, delta, spec.phase, v_scale))
    };
    let mut psi = StateVector::vacuum(Arc::clone(&basis));
    psi = evolve_timedep(&psi, build, 0.0, sched.t_ramp_on, opts.dt)?;
    let mut t_now = sched.t_ramp_on;
    let mut finals: Vec<Option<StateVector>> = vec![None; cuts.len()];
    for &k in &order {
        let cut = &cuts[k];
        let t_cut = cut.t_ramp_on + cut.t_sweep * cut.sweep_fraction;
        psi = evolve_timedep(&psi, build, t_now, t_cut, opts.dt)?;
        t_now = t_cut;
        let down = |t: f64| -> Result<SparseOperator> {
            let (omega, delta) = cut.eval(t)?;
            Ok(parts.assemble(omega, delta, spec.phase, v_scale))
        };
        finals[k] = Some(evolve_timedep(&psi, down, t_cut, cut.t_total(), opts.dt)?);
    }
    Ok(SweepResult {
        basis,
        states: endpoints
            .iter()
            .copied()
            .zip(finals.into_iter().map(|s| s.expect("every endpoint evolved")))
            .collect(),
    })
}

/// Basis rotation applied before measuring X strings: resonant drive at
/// reduced blockade radius for a time `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchSpec {
    pub omega_q: f64,
    #[serde(default)]
    pub delta_q: f64,
    #[serde(default = "default_phase")]
    pub phase: f64,
    /// Defaults to the single-cycle time `4π / (3√3 Ω_q)`.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub rise_time: Option<f64>,
    #[serde(default = "default_quench_rb")]
    pub rb_over_a: f64,
}

fn default_phase() -> f64 {
    PI / 2.0
}

fn default_quench_rb() -> f64 {
    1.53
}

/// `4π / (3√3 Ω)`.
pub fn ideal_quench_time(omega_q: f64) -> f64 {
    4.0 * PI / (3.0 * 3f64.sqrt() * omega_q)
}

impl QuenchSpec {
    pub fn ideal(omega_q: f64) -> Self {
        Self {
            omega_q,
            delta_q: 0.0,
            phase: default_phase(),
            tau: None,
            rise_time: None,
            rb_over_a: default_quench_rb(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or_else(|| ideal_quench_time(self.omega_q))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_q > 0.0) || !(self.tau() >= 0.0) || !(self.rb_over_a > 0.0) {
            return Err(Error::InvalidArgument("quench needs omega_q > 0, tau >= 0, rb_over_a > 0".into()));
        }
        if let Some(r) = self.rise_time {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument("rise_time must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A quench prepared for repeated use on states of one preparation basis.
#[derive(Clone, Debug)]
pub struct Quench {
    spec: QuenchSpec,
    reduced: Arc<ConstrainedBasis>,
    h: SparseOperator,
    propagator: Option<Propagator>,
}

impl Quench {
    pub fn new(lat: &RubyLattice, prep: &ConstrainedBasis, spec: QuenchSpec) -> Result<Self> {
        spec.validate()?;
        let g = lat.blockade_graph(spec.rb_over_a)?;
        if !g.is_subgraph_of(prep.graph()) {
            return Err(Error::InvalidArgument(
                "quench blockade graph must be contained in the preparation graph".into(),
            ));
        }
        let reduced = Arc::new(enumerate_basis_with_cap(&g, DEFAULT_DIMENSION_CAP)?);
        let h = build_pxp(&reduced, spec.omega_q, spec.delta_q, spec.phase)?;
        let propagator = match spec.rise_time {
            None => Some(Propagator::new(&h)?),
            Some(_) => None,
        };
        Ok(Self {
            spec,
            reduced,
            h,
            propagator,
        })
    }

    pub fn reduced_basis(&self) -> &Arc<ConstrainedBasis> {
        &self.reduced
    }

    pub fn spec(&self) -> &QuenchSpec {
        &self.spec
    }

    /// Quench for the configured `tau`.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.apply_for(psi, self.spec.tau())
    }

    /// Quench for an explicit duration, as used for calibration scans.
    pub fn apply_for(&self, psi: &StateVector, tau: f64) -> Result<StateVector> {
        let start = if Arc::ptr_eq(psi.basis(), &self.reduced) {
            psi.clone()
        } else {
            psi.embed(Arc::clone(&self.reduced))?
        };
        if tau == 0.0 {
            return Ok(start);
        }
        match (&self.propagator, self.spec.rise_time) {
            (Some(p), _) => p.apply(&start, tau),
            (None, Some(rise)) => {
                let ramp_end = rise.min(tau);
                let omega_q = self.spec.omega_q;
                let (d, ph) = (self.spec.delta_q, self.spec.phase);
                let reduced = &self.reduced;
                let ramp = |t: f64| build_pxp(reduced, omega_q * t / rise, d, ph);
                let mid = evolve_timedep(&start, ramp, 0.0, ramp_end, rise / 200.0)?;
                if tau > rise {
                    evolve(&mid, &self.h, tau - rise)
                } else {
                    Ok(mid)
                }
            }
            (None, None) => unreachable!("propagator exists without rise time"),
        }
    }
}

/// One-shot quench; see [`Quench`] to reuse the reduced basis.
pub fn apply_quench(psi: &StateVector, lat: &RubyLattice, q: &QuenchSpec) -> Result<StateVector> {
    Quench::new(lat, psi.basis(), *q)?.apply(psi)
}

/// Lowest eigenpair.
pub fn ground_state(h: &SparseOperator, basis: Arc<ConstrainedBasis>) -> Result<(f64, StateVector)> {
    let mut pairs = spectrum_slice(h, basis, 1)?;
    Ok(pairs.remove(0))
}

/// `k` lowest eigenpairs in nondecreasing order.
pub fn spectrum_slice(h: &SparseOperator, basis: Arc<ConstrainedBasis>, k: usize) -> Result<Vec<(f64, StateVector)>> {
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: h.dim(),
        });
    }
    Ok(lowest_eigenpairs(h, k, &LanczosOptions::default())?
        .into_iter()
        .map(|(e, v)| {
            (
                e,
                StateVector {
                    basis: Arc::clone(&basis),
                    amps: v,
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::enumerate_basis;
    use crate::lattice::BlockadeGraph;

    fn triangle() -> Arc<ConstrainedBasis> {
        Arc::new(enumerate_basis(&BlockadeGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()).unwrap())
    }

    #[test]
    fn quench_time_at_20_mhz() {
        let tau = ideal_quench_time(2.0 * PI * 20.0);
        assert!((tau * 1e3 - 19.245).abs() < 0.01);
        assert!((QuenchSpec::ideal(1.0).tau() - ideal_quench_time(1.0)).abs() < 1e-15);
    }

    #[test]
    fn diagonal_h_only_adds_phase() {
        let b = triangle();
        let h = build_pxp(&b, 0.0, 1.3, 0.0).unwrap();
        let psi = StateVector::basis_state(Arc::clone(&b), 2);
        let out = evolve(&psi, &h, 0.4).unwrap();
        assert!((out.amplitudes()[2] - C64::from_polar(1.0, 1.3 * 0.4)).norm() < 1e-14);
    }

    #[test]
    fn zero_time_quench_is_identity() {
        let lat = RubyLattice::build(1, 1, crate::lattice::Boundary::Torus, None).unwrap();
        let b = Arc::new(enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap());
        let q = Quench::new(&lat, &b, QuenchSpec::ideal(1.0)).unwrap();
        let psi = StateVector::basis_state(Arc::clone(&b), 1);
        let out = q.apply_for(&psi, 0.0).unwrap();
        let back = psi.embed(Arc::clone(q.reduced_basis())).unwrap();
        assert_eq!(out.amplitudes(), back.amplitudes());
    }

    #[test]
    fn bad_arguments() {
        let b = triangle();
        let h = build_pxp(&b, 1.0, 0.0, 0.0).unwrap();
        let psi = StateVector::vacuum(Arc::clone(&b));
        assert!(evolve_timedep(&psi, |_| Ok(h.clone()), 0.0, 1.0, 0.0).is_err());
        let bad = SparseOperator::from_triplets(4, vec![(0, 1, C64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(evolve(&psi, &bad, 1.0), Err(Error::NotHermitian(_))));
    }
}
