use std::io::BufReader;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ruby_qsl::dimer::{classify_sectors, enumerate_perfect_coverings, DEFAULT_COVERING_CAP};
use ruby_qsl::dynamics::{Quench, QuenchSpec, StateVector};
use ruby_qsl::hamiltonian::C64;
use ruby_qsl::hilbert::{enumerate_basis, BasisState, ConstrainedBasis, CoverageRule};
use ruby_qsl::lattice::{dual_string, enumerate_loops_by_name, Boundary, RubyLattice, StringSpec};
use ruby_qsl::measure::{
    bffm, bffm_report, connected_correlator_exact, connected_correlator_snap, logical_ops, logical_ops_snap,
    loop_average_snap, mean_density_exact, mean_density_snap, read_snapshots, reports_to_csv, reports_to_json,
    sample_snapshots, scaling_report, vertex_stats, vertex_stats_exact, write_snapshots, x_operator,
    x_parity_exact, x_parity_via_quench, z_parity_exact, z_parity_snap, Estimator, ObservableReport, Region,
    REPORT_CSV_HEADER,
};

fn torus() -> (RubyLattice, Arc<ConstrainedBasis>) {
    let lat = RubyLattice::build(2, 2, Boundary::Torus, None).unwrap();
    let b = Arc::new(enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap());
    (lat, b)
}

fn covering_index(lat: &RubyLattice, b: &ConstrainedBasis) -> usize {
    let d = enumerate_perfect_coverings(lat, CoverageRule::Strict, DEFAULT_COVERING_CAP).unwrap();
    b.index_of(d[0].bits()).unwrap()
}

fn random_state(b: &Arc<ConstrainedBasis>, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..b.dim())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    StateVector::new(Arc::clone(b), amps).unwrap().normalized()
}

fn report(estimate: f64, stderr: f64) -> ObservableReport {
    ObservableReport {
        observable: "z_parity".into(),
        label: "t".into(),
        endpoint: 0.0,
        estimate,
        stderr,
        n_samples: 100,
        n_loop_instances: 1,
        defined: true,
    }
}

#[test]
fn vertex_parity_is_plus_one_on_vacuum_and_minus_one_on_coverings() {
    let (lat, b) = torus();
    let vertices = enumerate_loops_by_name(&lat, "z_vertex").unwrap();
    assert_eq!(vertices.len(), lat.vertices().len());
    let vac = StateVector::vacuum(Arc::clone(&b));
    let cov = StateVector::basis_state(Arc::clone(&b), covering_index(&lat, &b));
    let snaps = sample_snapshots(&cov, 20, 3, 0.0);
    for v in &vertices {
        assert_eq!(z_parity_exact(&vac, v).unwrap(), 1.0);
        assert_eq!(z_parity_exact(&cov, v).unwrap(), -1.0);
        assert!(snaps.iter().all(|s| z_parity_snap(s, v).unwrap() == -1));
    }
    let r = loop_average_snap(&snaps, &vertices, "z_parity", "z_vertex").unwrap();
    assert_eq!(r.estimate, -1.0);
    assert_eq!(r.stderr, 0.0);
    assert_eq!(r.n_loop_instances, vertices.len());
}

#[test]
fn z_parity_of_a_random_state_matches_the_born_sum() {
    let (lat, b) = torus();
    let psi = random_state(&b, 5);
    for l in enumerate_loops_by_name(&lat, "z_hexagon").unwrap() {
        let sites = l.z_sites().unwrap();
        let oracle: f64 = (0..b.dim())
            .map(|k| {
                let s = b.state_of(k).unwrap();
                let ones = sites.iter().filter(|&&i| s.get(i)).count();
                psi.amplitudes()[k].norm_sqr() * if ones % 2 == 0 { 1.0 } else { -1.0 }
            })
            .sum();
        assert!((z_parity_exact(&psi, &l).unwrap() - oracle).abs() < 1e-12);
    }
}

#[test]
fn x_loops_are_hermitian_involutions_on_the_reduced_basis() {
    let lat = RubyLattice::build(2, 2, Boundary::Torus, None).unwrap();
    let reduced = Arc::new(enumerate_basis(&lat.blockade_graph(1.53).unwrap()).unwrap());
    assert_eq!(reduced.dim(), 4usize.pow(8));
    let psi = random_state(&reduced, 9);
    for name in ["x_hexagon", "x_double_hexagon"] {
        for l in enumerate_loops_by_name(&lat, name).unwrap() {
            let x = x_operator(&lat, &reduced, &l).unwrap();
            assert!(x.hermiticity_error() < 1e-15);
            let xx = x.apply(&x.apply(psi.amplitudes()).unwrap()).unwrap();
            let err = xx.iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-14, "{}: X^2 differs from 1 by {err}", l.label);
        }
    }
}

#[test]
fn zero_time_quench_reads_the_dual_string_of_the_input() {
    let (lat, b) = torus();
    let psi = random_state(&b, 11);
    let loops = enumerate_loops_by_name(&lat, "x_hexagon").unwrap();
    let mut spec = QuenchSpec::ideal(1.0);
    spec.tau = Some(0.0);
    let q = Quench::new(&lat, &b, spec).unwrap();
    let r = x_parity_via_quench(&psi, &lat, &q, &loops, Estimator::Exact, "x_hexagon", 0.0).unwrap();
    let direct: f64 = loops.iter().map(|l| z_parity_exact(&psi, &dual_string(&lat, l).unwrap()).unwrap()).sum::<f64>()
        / loops.len() as f64;
    assert!((r.estimate - direct).abs() < 1e-12);
}

#[test]
fn ideal_quench_matches_the_exact_x_expectation() {
    let (lat, b) = torus();
    let psi = random_state(&b, 13);
    let q = Quench::new(&lat, &b, QuenchSpec::ideal(1.0)).unwrap();
    for l in enumerate_loops_by_name(&lat, "x_hexagon").unwrap() {
        let exact = x_parity_exact(&psi.embed(Arc::clone(q.reduced_basis())).unwrap(), &lat, &l).unwrap();
        let via = x_parity_via_quench(&psi, &lat, &q, std::slice::from_ref(&l), Estimator::Exact, "x", 0.0).unwrap();
        assert!((exact - via.estimate).abs() < 1e-10, "{}: {exact} vs {}", l.label, via.estimate);
    }
}

#[test]
fn snapshot_estimates_converge_to_exact_values() {
    let (lat, b) = torus();
    let psi = random_state(&b, 17);
    let snaps = sample_snapshots(&psi, 40_000, 1, 0.0);
    let loops = enumerate_loops_by_name(&lat, "z_hexagon").unwrap();
    let exact: f64 = loops.iter().map(|l| z_parity_exact(&psi, l).unwrap()).sum::<f64>() / loops.len() as f64;
    let r = loop_average_snap(&snaps, &loops, "z_parity", "z_hexagon").unwrap();
    assert!((r.estimate - exact).abs() < 5.0 * r.stderr, "{} vs {exact} ± {}", r.estimate, r.stderr);

    let stats = vertex_stats(&snaps, &lat).unwrap();
    let oracle = vertex_stats_exact(&psi, &lat).unwrap();
    for (a, e) in [
        (stats.monomer, oracle.monomer),
        (stats.single_dimer, oracle.single_dimer),
        (stats.double_dimer, oracle.double_dimer),
    ] {
        assert!((a - e).abs() < 0.01, "{a} vs {e}");
    }
    let (n, se) = mean_density_snap(&snaps, &lat, Region::All).unwrap();
    let n_exact = mean_density_exact(&psi, &lat, Region::All).unwrap();
    assert!((n - n_exact).abs() < 5.0 * se);
}

#[test]
fn vertex_statistics_and_density_of_simple_states() {
    let (lat, b) = torus();
    let vac = StateVector::vacuum(Arc::clone(&b));
    let s = vertex_stats_exact(&vac, &lat).unwrap();
    assert_eq!((s.monomer, s.single_dimer, s.double_dimer), (1.0, 0.0, 0.0));
    assert_eq!(s.n_vertices, lat.vertices().len());
    assert_eq!(mean_density_exact(&vac, &lat, Region::All).unwrap(), 0.0);

    let cov = StateVector::basis_state(Arc::clone(&b), covering_index(&lat, &b));
    let s = vertex_stats_exact(&cov, &lat).unwrap();
    assert_eq!((s.monomer, s.single_dimer, s.double_dimer), (0.0, 1.0, 0.0));
    // a quarter of the links carry a dimer
    assert!((mean_density_exact(&cov, &lat, Region::All).unwrap() - 0.25).abs() < 1e-15);
    let snaps = sample_snapshots(&cov, 10, 0, 0.0);
    assert_eq!(vertex_stats(&snaps, &lat).unwrap(), s);
    let (n, se) = mean_density_snap(&snaps, &lat, Region::All).unwrap();
    assert_eq!((n, se), (0.25, 0.0));
}

#[test]
fn connected_correlators_of_product_and_cat_states() {
    let (lat, b) = torus();
    let loops = enumerate_loops_by_name(&lat, "z_vertex").unwrap();
    let k = covering_index(&lat, &b);
    let pair = vec![loops[0].clone(), loops[1].clone()];
    let triple = vec![loops[0].clone(), loops[1].clone(), loops[2].clone()];

    let cov = StateVector::basis_state(Arc::clone(&b), k);
    assert!(connected_correlator_exact(&cov, &pair).unwrap().abs() < 1e-15);
    assert!(connected_correlator_exact(&cov, &triple).unwrap().abs() < 1e-15);

    // (|vacuum> + |covering>)/√2: each parity averages to zero, pairs are perfectly correlated
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); b.dim()];
    amps[0] = C64::new(h, 0.0);
    amps[k] = C64::new(h, 0.0);
    let cat = StateVector::new(Arc::clone(&b), amps).unwrap();
    assert!((connected_correlator_exact(&cat, &pair).unwrap() - 1.0).abs() < 1e-12);
    // ⟨P1P2P3⟩ = 0 and every lower moment is zero
    assert!(connected_correlator_exact(&cat, &triple).unwrap().abs() < 1e-12);

    let snaps = sample_snapshots(&cat, 4000, 2, 0.0);
    let r = connected_correlator_snap(&snaps, &[pair.clone()], "g2").unwrap();
    assert!((r.estimate - 1.0).abs() < 5.0 * r.stderr.max(1e-3), "{} ± {}", r.estimate, r.stderr);
    assert_eq!(r.observable, "g2");
}

#[test]
fn g2_snapshot_estimate_matches_exact_on_a_random_state() {
    let (lat, b) = torus();
    let psi = random_state(&b, 23);
    let loops = enumerate_loops_by_name(&lat, "z_hexagon").unwrap();
    let group = vec![loops[0].clone(), loops[1].clone()];
    let exact = connected_correlator_exact(&psi, &group).unwrap();
    let r = connected_correlator_snap(&sample_snapshots(&psi, 20_000, 4, 0.0), &[group], "g2").unwrap();
    assert!((r.estimate - exact).abs() < 5.0 * r.stderr, "{} vs {exact} ± {}", r.estimate, r.stderr);
}

#[test]
fn bffm_error_propagation_matches_finite_differences() {
    let (o, c, so, sc) = (0.31, 0.47, 0.01, 0.02);
    let r = bffm_report(&report(o, so), &report(c, sc), "b");
    assert!((r.estimate - o / c.sqrt()).abs() < 1e-15);
    let h = 1e-6;
    let d_open = (bffm(o + h, c).unwrap() - bffm(o - h, c).unwrap()) / (2.0 * h);
    let d_closed = (bffm(o, c + h).unwrap() - bffm(o, c - h).unwrap()) / (2.0 * h);
    let expected = ((d_open * so).powi(2) + (d_closed * sc).powi(2)).sqrt();
    assert!((r.stderr - expected).abs() < 1e-8, "{} vs {expected}", r.stderr);
    assert!(r.defined);

    let undefined = bffm_report(&report(o, so), &report(1e-4, sc), "b");
    assert!(!undefined.defined && undefined.estimate.is_nan());
}

#[test]
fn scaling_roots_invert_area_and_perimeter_laws() {
    let lat = RubyLattice::build(3, 3, Boundary::Torus, None).unwrap();
    for name in ["z_vertex", "z_hexagon", "z_double_hexagon"] {
        let l: StringSpec = enumerate_loops_by_name(&lat, name).unwrap().remove(0);
        let (area, perimeter) = (l.area.unwrap(), l.perimeter());
        let q: f64 = 0.83;
        let r = &scaling_report(&[(q.powi(area as i32), &l), (1.0, &l), (0.0, &l)]).unwrap();
        assert!((r[0].area_root - q).abs() < 1e-12);
        assert!((r[1].area_root - 1.0).abs() < 1e-15 && (r[1].perimeter_root - 1.0).abs() < 1e-15);
        assert!(r[2].zero && r[2].area_root == 0.0);
        let r = scaling_report(&[(-q.powi(perimeter as i32), &l)]).unwrap();
        assert!((r[0].perimeter_root - q).abs() < 1e-12);
    }
}

#[test]
fn logical_operators_on_a_holed_disc() {
    let lat = RubyLattice::holed_disc(2.5).unwrap();
    let coverings = enumerate_perfect_coverings(&lat, CoverageRule::Strict, DEFAULT_COVERING_CAP).unwrap();
    let z = enumerate_loops_by_name(&lat, "z_hole_to_boundary").unwrap();
    let labels = classify_sectors(&lat, &coverings, 0, &z).unwrap();
    let a = &coverings[0];
    let c = &coverings[labels.iter().position(|l| l.value() == 1).unwrap()];
    let parity = |d: &BasisState, s: &StringSpec| {
        if s.z_sites().unwrap().iter().filter(|&&i| d.get(i)).count() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };

    let snaps = sample_snapshots(
        &StateVector::basis_state(
            Arc::new(enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap()),
            0,
        ),
        3,
        0,
        0.0,
    );
    let vac = logical_ops_snap(&snaps, &lat).unwrap();
    assert!(vac.z_l.iter().all(|(_, v)| *v == 1.0));
    assert!(vac.x_l.is_empty());
    assert_eq!(vac.z1z2.len(), z.len() * (z.len() - 1) / 2);

    let b = Arc::new(enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap());
    let (ka, kc) = (b.index_of(a.bits()).unwrap(), b.index_of(c.bits()).unwrap());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); b.dim()];
    amps[ka] = C64::new(h, 0.0);
    amps[kc] = C64::new(0.0, h);
    let psi = StateVector::new(Arc::clone(&b), amps).unwrap();
    let r = logical_ops(&psi, &lat).unwrap();
    assert_eq!(r.z_l.len(), z.len());
    // opposite sectors in equal weight
    for (label, v) in &r.z_l {
        assert!(v.abs() < 1e-12, "{label}: {v}");
    }
    // Z1Z2 does not depend on the sector
    for (i, j, v) in &r.z1z2 {
        let (si, sj) = (
            z.iter().find(|s| &s.label == i).unwrap(),
            z.iter().find(|s| &s.label == j).unwrap(),
        );
        let expected = parity(a.bits(), si) * parity(a.bits(), sj);
        assert_eq!(expected, parity(c.bits(), si) * parity(c.bits(), sj));
        assert!((v - expected).abs() < 1e-12);
    }

    let snaps = sample_snapshots(&psi, 200, 6, 0.0);
    let r = logical_ops_snap(&snaps, &lat).unwrap();
    for (i, j, v) in &r.z1z2 {
        let (si, sj) = (
            z.iter().find(|s| &s.label == i).unwrap(),
            z.iter().find(|s| &s.label == j).unwrap(),
        );
        assert_eq!(*v, parity(a.bits(), si) * parity(a.bits(), sj));
    }
}

#[test]
fn logical_ops_need_a_hole() {
    let (lat, b) = torus();
    assert!(logical_ops(&StateVector::vacuum(b), &lat).is_err());
}

#[test]
fn sampling_is_deterministic_and_follows_born_weights() {
    let (_, b) = torus();
    let psi = random_state(&b, 29);
    let a = sample_snapshots(&psi, 5000, 8, 1.5);
    assert_eq!(a, sample_snapshots(&psi, 5000, 8, 1.5));
    assert_ne!(a, sample_snapshots(&psi, 5000, 9, 1.5));
    assert!(a.iter().all(|s| s.endpoint == 1.5 && s.seed == 8 && s.timestamp.is_none()));
    // weight of the vacuum, binomial 5σ
    let p0 = psi.amplitudes()[0].norm_sqr();
    let n0 = a.iter().filter(|s| s.bits.count_ones() == 0).count() as f64;
    assert!((n0 - 5000.0 * p0).abs() < 5.0 * (5000.0 * p0 * (1.0 - p0)).sqrt() + 1.0);
}

#[test]
fn empty_snapshot_sets_are_rejected() {
    let (lat, _) = torus();
    let loops = enumerate_loops_by_name(&lat, "z_vertex").unwrap();
    assert!(loop_average_snap(&[], &loops, "z_parity", "z_vertex").is_err());
    assert!(connected_correlator_snap(&[], &[loops[..2].to_vec()], "g2").is_err());
}

#[test]
fn report_serialisations_list_every_report() {
    let reports = vec![report(0.5, 0.01), report(-0.25, 0.0)];
    let csv = reports_to_csv(&reports);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), REPORT_CSV_HEADER);
    assert_eq!(lines.count(), 2);
    let back: Vec<ObservableReport> = serde_json::from_str(&reports_to_json(&reports)).unwrap();
    assert_eq!(back, reports);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snapshot_files_roundtrip(seed in any::<u64>(), n in 1usize..40, endpoint in -5.0f64..5.0) {
        let (_, b) = torus();
        let snaps = sample_snapshots(&random_state(&b, seed), n, seed, endpoint);
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &snaps, &[("source", "test".into())]).unwrap();
        let back = read_snapshots(BufReader::new(&buf[..]), b.n_sites()).unwrap();
        prop_assert_eq!(back.len(), snaps.len());
        for (x, y) in back.iter().zip(&snaps) {
            prop_assert_eq!(&x.bits, &y.bits);
            prop_assert_eq!(x.seed, y.seed);
            prop_assert!((x.endpoint - y.endpoint).abs() <= 1e-12 * endpoint.abs().max(1.0));
        }
    }

    #[test]
    fn z_parities_are_bounded_and_multiplicative_on_basis_states(seed in any::<u64>()) {
        let (lat, b) = torus();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(0..b.dim());
        let psi = StateVector::basis_state(Arc::clone(&b), k);
        let loops = enumerate_loops_by_name(&lat, "z_hexagon").unwrap();
        let (p, q) = (&loops[0], &loops[1]);
        let mut both: Vec<usize> = p.z_sites().unwrap().to_vec();
        for &s in q.z_sites().unwrap() {
            if let Some(i) = both.iter().position(|&x| x == s) {
                both.swap_remove(i);
            } else {
                both.push(s);
            }
        }
        let pq = StringSpec::z(both, true, "product");
        let (zp, zq) = (z_parity_exact(&psi, p).unwrap(), z_parity_exact(&psi, q).unwrap());
        prop_assert!(zp.abs() == 1.0 && zq.abs() == 1.0);
        prop_assert_eq!(z_parity_exact(&psi, &pq).unwrap(), zp * zq);
    }
}
