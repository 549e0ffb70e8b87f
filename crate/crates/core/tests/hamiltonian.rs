use proptest::prelude::*;

use ruby_qsl::hamiltonian::{build_pxp, build_vdw, intra_triangle_graph, HamiltonianSpec, Model, SweepSchedule, C64};
use ruby_qsl::hilbert::{enumerate_basis, BasisState, ConstrainedBasis};
use ruby_qsl::lattice::{BlockadeGraph, Boundary, RubyLattice};

fn graph_strategy(max_sites: usize) -> impl Strategy<Value = BlockadeGraph> {
    (1..=max_sites).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        proptest::sample::subsequence(pairs.clone(), 0..=pairs.len())
            .prop_map(move |edges| BlockadeGraph::from_edges(n, edges).unwrap())
    })
}

fn differing_bits(b: &ConstrainedBasis, i: usize, j: usize) -> u32 {
    b.words(i).iter().zip(b.words(j)).map(|(x, y)| (x ^ y).count_ones()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pxp_is_hermitian_with_single_flip_off_diagonals(
        g in graph_strategy(10),
        omega in 0.0f64..5.0,
        delta in -5.0f64..5.0,
        phase in -4.0f64..4.0,
    ) {
        let b = enumerate_basis(&g).unwrap();
        let h = build_pxp(&b, omega, delta, phase).unwrap();
        prop_assert_eq!(h.dim(), b.dim());
        prop_assert!(h.hermiticity_error() < 1e-12);
        for (i, j, v) in h.entries() {
            if i == j {
                prop_assert!((v.re + delta * b.count_ones(i) as f64).abs() < 1e-12);
                prop_assert!(v.im.abs() < 1e-15);
            } else if v.norm() > 0.0 {
                prop_assert_eq!(differing_bits(&b, i, j), 1);
                prop_assert!((v.norm() - omega / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn drive_phase_is_a_diagonal_gauge(g in graph_strategy(12), phi in -4.0f64..4.0, phi2 in -4.0f64..4.0) {
        let b = enumerate_basis(&g).unwrap();
        let h1 = build_pxp(&b, 1.3, 0.4, phi).unwrap().to_dense();
        let h2 = build_pxp(&b, 1.3, 0.4, phi2).unwrap().to_dense();
        // U = exp(i (phi - phi2) N) maps H(phi) to H(phi2)
        let u: Vec<C64> = (0..b.dim())
            .map(|k| C64::from_polar(1.0, (phi - phi2) * b.count_ones(k) as f64))
            .collect();
        let mut worst: f64 = 0.0;
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                worst = worst.max((u[r] * h1[(r, c)] * u[c].conj() - h2[(r, c)]).norm());
            }
        }
        prop_assert!(worst < 1e-12);
    }

    #[test]
    fn schedules_are_valid_everywhere(
        omega_max in 0.1f64..10.0,
        t_ramp_on in 0.0f64..2.0,
        t_sweep in 0.1f64..5.0,
        delta_min in -10.0f64..0.0,
        span in 0.0f64..20.0,
        t_ramp_down in 0.0f64..1.0,
    ) {
        let s = SweepSchedule {
            omega_max,
            t_ramp_on,
            t_sweep,
            delta_min,
            delta_max: delta_min + span,
            t_ramp_down,
            sweep_fraction: 1.0,
        };
        s.validate().unwrap();
        let n = 2000;
        let h = s.t_total() / n as f64;
        let mut prev = s.eval(0.0).unwrap();
        prop_assert!(prev.0.abs() < 1e-12 || t_ramp_on == 0.0);
        prop_assert!((prev.1 - delta_min).abs() < 1e-12);
        for k in 1..=n {
            let t = k as f64 * h;
            let cur = s.eval(t).unwrap();
            prop_assert!(cur.0 >= 0.0);
            // Δ never decreases and has no jumps
            prop_assert!(cur.1 >= prev.1 - 1e-12);
            prop_assert!(cur.1 - prev.1 <= 1.5 * span * h / t_sweep + 1e-9);
            prev = cur;
        }
        prop_assert!((prev.1 - (delta_min + span)).abs() < 1e-9);
    }
}

#[test]
fn off_diagonal_count_is_the_number_of_flippable_sites() {
    let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
    let b = enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap();
    let h = build_pxp(&b, 1.0, 0.0, 0.0).unwrap();
    let off = h.entries().filter(|&(i, j, v)| i != j && v.norm() > 0.0).count();
    let mut flippable = 0;
    for s in b.states() {
        for i in 0..b.n_sites() {
            let mut t = s.clone();
            t.flip(i);
            if t.is_independent(b.graph()) {
                flippable += 1;
            }
        }
    }
    assert_eq!(off, flippable);
    assert!(h.hermiticity_error() < 1e-12);
}

fn vdw_spec(rb: f64, r_trunc: f64, omega: f64, delta: f64) -> HamiltonianSpec {
    HamiltonianSpec {
        model: Model::Vdw { r_trunc_over_a: r_trunc },
        rb_over_a: rb,
        omega,
        delta,
        phase: 0.0,
    }
}

#[test]
fn vdw_diagonal_is_nonnegative_and_vanishes_on_vacuum() {
    let lat = RubyLattice::build(2, 2, Boundary::Torus, None).unwrap();
    let b = enumerate_basis(&intra_triangle_graph(&lat).unwrap()).unwrap();
    let h = build_vdw(&b, &lat, &vdw_spec(2.4, 7f64.sqrt(), 1.0, 0.0)).unwrap();
    assert!(h.hermiticity_error() < 1e-12);
    assert_eq!(h.get(0, 0).norm(), 0.0);
    for k in 0..b.dim() {
        assert!(h.get(k, k).re >= 0.0);
    }
}

#[test]
fn pair_at_the_blockade_radius_costs_omega() {
    let lat = RubyLattice::build(2, 2, Boundary::Open, None).unwrap();
    let b = enumerate_basis(&intra_triangle_graph(&lat).unwrap()).unwrap();
    let (i, j) = (0..lat.n_sites())
        .flat_map(|i| (i + 1..lat.n_sites()).map(move |j| (i, j)))
        .find(|&(i, j)| (lat.distance(i, j) - 2.0).abs() < 1e-9)
        .unwrap();
    let omega = 1.7;
    let h = build_vdw(&b, &lat, &vdw_spec(2.0, 2.5, omega, 0.0)).unwrap();
    let k = b.index_of(&BasisState::from_sites(lat.n_sites(), &[i, j]).unwrap()).unwrap();
    assert!((h.get(k, k).re - omega).abs() < 1e-12);
}

#[test]
fn short_truncation_reduces_vdw_to_pxp() {
    let lat = RubyLattice::build(2, 2, Boundary::Torus, None).unwrap();
    let b = enumerate_basis(&intra_triangle_graph(&lat).unwrap()).unwrap();
    for (omega, delta, phase) in [(1.0, 0.0, 0.0), (0.7, 1.9, 0.4)] {
        let mut spec = vdw_spec(2.4, 1.5, omega, delta);
        spec.phase = phase;
        let vdw = build_vdw(&b, &lat, &spec).unwrap();
        let pxp = build_pxp(&b, omega, delta, phase).unwrap();
        assert!(vdw.max_abs_diff(&pxp).unwrap() < 1e-14);
    }
}

#[test]
fn zero_drive_is_diagonal_detuning() {
    let lat = RubyLattice::build(1, 2, Boundary::Torus, None).unwrap();
    let b = enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap();
    let h = build_pxp(&b, 0.0, 2.5, 1.0).unwrap();
    for (i, j, v) in h.entries() {
        if i == j {
            assert!((v.re + 2.5 * b.count_ones(i) as f64).abs() < 1e-14);
        } else {
            assert_eq!(v.norm(), 0.0);
        }
    }
}
