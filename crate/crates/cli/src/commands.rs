use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use ruby_qsl::dimer::{classify_sectors, enumerate_perfect_coverings, export_coverings, DEFAULT_COVERING_CAP};
use ruby_qsl::dynamics::{ideal_quench_time, run_sweep, Quench, QuenchSpec, StateVector};
use ruby_qsl::hilbert::{enumerate_basis_with_cap, CoverageRule, ConstrainedBasis, DEFAULT_DIMENSION_CAP};
use ruby_qsl::lattice::{
    bffm_pairs, dual_string, enumerate_loops_by_name, hexagon_groups, template_catalogue, RubyLattice, StringKind,
    StringSpec, TemplateShape,
};
use ruby_qsl::measure::{
    bffm_report, connected_correlator_exact, connected_correlator_snap, logical_ops, logical_ops_snap,
    loop_average_exact, loop_average_snap, mean_and_stderr, mean_density_exact, mean_density_snap, read_snapshots,
    reports_to_csv, sample_snapshots, scaling_report, vertex_stats_exact, write_snapshots, x_parity_via_quench,
    z_parity_exact, Estimator, LogicalReport, ObservableReport, Region, Snapshot,
};

use crate::config::{EstimatorKind, ObservableConfig, ObservableKind, RunConfig};
use crate::output::{endpoint_tag, ensure_dir, read_state, write_csv, write_json, write_state, Provenance};
use crate::CliError;

/// Default quench when a run measures X strings without a `[quench]` table.
const DEFAULT_OMEGA_Q: f64 = 10.0;

const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Serialize)]
struct LatticeSummary<'a> {
    n_sites: usize,
    n_triangles: usize,
    n_vertices: usize,
    n_hexagons: usize,
    inner_boundary_sites: Option<&'a [usize]>,
    lattice: ruby_qsl::lattice::LatticeDocument,
}

pub fn lattice(cfg: &RunConfig) -> Result<(), CliError> {
    let lat = cfg.build_lattice()?;
    let prov = Provenance::new(cfg.hash());
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let inner = lat.hole().map(|h| h.inner_boundary_sites.as_slice());
    println!(
        "{} sites, {} triangles, {} vertices, {} hexagons",
        lat.n_sites(),
        lat.triangles().len(),
        lat.vertices().len(),
        lat.hexagons().len()
    );
    if let Some(sites) = inner {
        println!("inner boundary sites: {sites:?}");
    }
    write_json(
        &dir.join("lattice.json"),
        &prov,
        LatticeSummary {
            n_sites: lat.n_sites(),
            n_triangles: lat.triangles().len(),
            n_vertices: lat.vertices().len(),
            n_hexagons: lat.hexagons().len(),
            inner_boundary_sites: inner,
            lattice: lat.to_document(),
        },
    )
}

#[derive(Clone, Debug, Serialize)]
struct EndpointSummary {
    endpoint: f64,
    dimer_weight: f64,
    density_bulk: f64,
    density_all: f64,
    dim: usize,
    state_file: String,
    snapshot_file: Option<String>,
    n_snapshots: usize,
    seed: Option<u64>,
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let lat = cfg.build_lattice()?;
    let sched = cfg.schedule.schedule()?;
    let seed = if cfg.schedule.snapshots > 0 { Some(cfg.require_seed()?) } else { None };
    let prov = Provenance::new(cfg.hash());
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let res = run_sweep(&lat, &cfg.hamiltonian(), &sched, &cfg.schedule.endpoints, &cfg.sweep_options())?;
    let sector = res.basis.dimer_sector(&lat, CoverageRule::default())?;
    let mut rows = Vec::new();
    for (k, (endpoint, psi)) in res.states.iter().enumerate() {
        let state_file = format!("state_{}.json", endpoint_tag(k));
        write_state(&dir.join(&state_file), &prov, *endpoint, psi)?;
        let mut snapshot_file = None;
        let snap_seed = seed.map(|s| s.wrapping_add(k as u64));
        if let Some(s) = snap_seed {
            let name = format!("snapshots_{}.txt", endpoint_tag(k));
            let snaps = sample_snapshots(psi, cfg.schedule.snapshots, s, *endpoint);
            let path = dir.join(&name);
            let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_snapshots(BufWriter::new(f), &snaps, &prov.header())?;
            snapshot_file = Some(name);
        }
        let row = EndpointSummary {
            endpoint: *endpoint,
            dimer_weight: psi.weight_on(&sector),
            density_bulk: mean_density_exact(psi, &lat, Region::Bulk)?,
            density_all: mean_density_exact(psi, &lat, Region::All)?,
            dim: psi.dim(),
            state_file,
            snapshot_file,
            n_snapshots: if snap_seed.is_some() { cfg.schedule.snapshots } else { 0 },
            seed: snap_seed,
        };
        println!(
            "endpoint {:>6.3}: dimer weight {:.6}, bulk density {:.6}",
            row.endpoint, row.dimer_weight, row.density_bulk
        );
        rows.push(row);
    }
    let mut csv = String::from("endpoint,dimer_weight,density_bulk,density_all,dim\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.endpoint, r.dimer_weight, r.density_bulk, r.density_all, r.dim
        ));
    }
    write_csv(&dir.join("sweep_summary.csv"), &prov, &csv)?;
    write_json(&dir.join("sweep_summary.json"), &prov, SweepSummary { endpoints: rows })
}

#[derive(Serialize)]
struct SweepSummary {
    endpoints: Vec<EndpointSummary>,
}

fn basis_for(cfg: &RunConfig, lat: &RubyLattice) -> Result<Arc<ConstrainedBasis>, CliError> {
    let spec = cfg.hamiltonian();
    let cap = cfg.model.dimension_cap.unwrap_or(DEFAULT_DIMENSION_CAP);
    Ok(Arc::new(enumerate_basis_with_cap(&spec.constraint_graph(lat)?, cap)?))
}

fn quench_spec(cfg: &RunConfig) -> QuenchSpec {
    cfg.quench.unwrap_or_else(|| QuenchSpec::ideal(DEFAULT_OMEGA_Q))
}

enum Input {
    State { endpoint: f64, psi: StateVector },
    Snaps(Vec<Snapshot>),
}

impl Input {
    fn endpoint(&self) -> f64 {
        match self {
            Input::State { endpoint, .. } => *endpoint,
            Input::Snaps(s) => s[0].endpoint,
        }
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    lat: &'a RubyLattice,
    quench: Option<Quench>,
}

impl Ctx<'_> {
    fn quench(&self) -> Result<&Quench, CliError> {
        self.quench
            .as_ref()
            .ok_or_else(|| CliError::Input("X observables need a state input".into()))
    }
}

pub fn measure(cfg: &RunConfig, states: &[PathBuf], snapshot_files: &[PathBuf]) -> Result<(), CliError> {
    if states.is_empty() && snapshot_files.is_empty() {
        return Err(CliError::Input("measure needs at least one --state or --snapshots input".into()));
    }
    if cfg.observables.is_empty() {
        return Err(CliError::Config("no [[observables]] configured".into()));
    }
    let lat = cfg.build_lattice()?;
    let mut inputs = Vec::new();
    let mut quench = None;
    if !states.is_empty() {
        let basis = basis_for(cfg, &lat)?;
        for p in states {
            let (endpoint, psi) = read_state(p, &basis)?;
            inputs.push(Input::State { endpoint, psi });
        }
        let needs_x = cfg.observables.iter().any(|o| kind_of(o) == Some(StringKind::X) || o.kind == ObservableKind::Logical);
        if needs_x {
            quench = Some(Quench::new(&lat, &basis, quench_spec(cfg))?);
        }
    }
    for p in snapshot_files {
        let f = File::open(p).map_err(|e| CliError::io(p, e))?;
        let snaps = read_snapshots(BufReader::new(f), lat.n_sites())
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        if snaps.is_empty() {
            return Err(CliError::Input(format!("{}: no snapshots", p.display())));
        }
        inputs.push(Input::Snaps(snaps));
    }
    let ctx = Ctx { cfg, lat: &lat, quench };
    let mut reports = Vec::new();
    for input in &inputs {
        for o in &cfg.observables {
            reports.extend(observe(&ctx, input, o)?);
        }
    }
    let prov = Provenance::new(cfg.hash());
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    write_csv(&dir.join("reports.csv"), &prov, &reports_to_csv(&reports))?;
    write_json(&dir.join("reports.json"), &prov, ReportsBody { reports: &reports })?;
    for r in &reports {
        println!(
            "{:<16} {:<36} {:>7.3} {:>+.6} ± {:.6}",
            r.observable, r.label, r.endpoint, r.estimate, r.stderr
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportsBody<'a> {
    reports: &'a [ObservableReport],
}

fn kind_of(o: &ObservableConfig) -> Option<StringKind> {
    let t = o.template.as_deref()?;
    if o.kind == ObservableKind::Bffm {
        return Some(if t.starts_with("x_") { StringKind::X } else { StringKind::Z });
    }
    template_catalogue().iter().find(|x| x.name == t).map(|x| x.kind)
}

fn estimator(ctx: &Ctx, o: &ObservableConfig) -> Result<Estimator, CliError> {
    match o.estimator.unwrap_or(EstimatorKind::Exact) {
        EstimatorKind::Exact => Ok(Estimator::Exact),
        EstimatorKind::Snapshots => Ok(Estimator::Snapshots {
            n: o.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: ctx.cfg.require_seed()?,
        }),
    }
}

fn exact_row(observable: &str, label: &str, endpoint: f64, estimate: f64, n_loops: usize) -> ObservableReport {
    ObservableReport {
        observable: observable.into(),
        label: label.into(),
        endpoint,
        estimate,
        stderr: 0.0,
        n_samples: 0,
        n_loop_instances: n_loops,
        defined: true,
    }
}

/// Loop average of one string family, Z directly and X through the quench.
fn string_average(ctx: &Ctx, input: &Input, loops: &[StringSpec], est: Estimator, label: &str) -> Result<ObservableReport, CliError> {
    let kind = loops
        .first()
        .map(StringSpec::kind)
        .ok_or_else(|| CliError::Input(format!("`{label}` has no placements on this lattice")))?;
    let endpoint = input.endpoint();
    Ok(match (input, kind) {
        (Input::State { psi, .. }, StringKind::Z) => match est {
            Estimator::Exact => loop_average_exact(psi, loops, "z_parity", label, endpoint)?,
            Estimator::Snapshots { n, seed } => loop_average_snap(&sample_snapshots(psi, n, seed, endpoint), loops, "z_parity", label)?,
        },
        (Input::State { psi, .. }, StringKind::X) => x_parity_via_quench(psi, ctx.lat, ctx.quench()?, loops, est, label, endpoint)?,
        (Input::Snaps(s), StringKind::Z) => loop_average_snap(s, loops, "z_parity", label)?,
        (Input::Snaps(_), StringKind::X) => return Err(CliError::Input(format!("`{label}`: X strings need a state input"))),
    })
}

fn observe(ctx: &Ctx, input: &Input, o: &ObservableConfig) -> Result<Vec<ObservableReport>, CliError> {
    let lat = ctx.lat;
    let endpoint = input.endpoint();
    let est = match input {
        Input::State { .. } => estimator(ctx, o)?,
        Input::Snaps(s) => Estimator::Snapshots { n: s.len(), seed: s[0].seed },
    };
    let template = o.template.clone().unwrap_or_default();
    match o.kind {
        ObservableKind::ZLoop | ObservableKind::XLoop => {
            let loops = enumerate_loops_by_name(lat, &template)?;
            let expected = if o.kind == ObservableKind::ZLoop { StringKind::Z } else { StringKind::X };
            if loops.first().is_some_and(|l| l.kind() != expected) {
                return Err(CliError::Config(format!("template `{template}` does not match {:?}", o.kind)));
            }
            Ok(vec![string_average(ctx, input, &loops, est, &template)?])
        }
        ObservableKind::Bffm => {
            let pairs = bffm_pairs(lat, &template)?;
            let open: Vec<StringSpec> = pairs.iter().map(|p| p.open.clone()).collect();
            let closed: Vec<StringSpec> = pairs.iter().map(|p| p.closed.clone()).collect();
            let mut a = string_average(ctx, input, &open, est, &format!("{template}:open"))?;
            let mut b = string_average(ctx, input, &closed, est, &format!("{template}:closed"))?;
            a.observable = "open_parity".into();
            b.observable = "closed_parity".into();
            let r = bffm_report(&a, &b, &template);
            Ok(vec![a, b, r])
        }
        ObservableKind::Scaling => {
            let loops = enumerate_loops_by_name(lat, &template)?;
            let mut avg = string_average(ctx, input, &loops, est, &template)?;
            avg.observable = "scaling_parity".into();
            let roots = scaling_report(&[(avg.estimate, &loops[0])])?;
            let r = &roots[0];
            let mut area = avg.clone();
            area.observable = "area_root".into();
            area.estimate = r.area_root;
            area.stderr = root_error(avg.estimate, avg.stderr, r.area);
            let mut perim = avg.clone();
            perim.observable = "perimeter_root".into();
            perim.estimate = r.perimeter_root;
            perim.stderr = root_error(avg.estimate, avg.stderr, r.perimeter);
            Ok(vec![avg, area, perim])
        }
        ObservableKind::G2 | ObservableKind::G3 => correlator(ctx, input, o, est, &template),
        ObservableKind::VertexStats => {
            let (vals, errs, n) = match (input, est) {
                (Input::State { psi, .. }, Estimator::Exact) => {
                    let v = vertex_stats_exact(psi, lat)?;
                    ([v.monomer, v.single_dimer, v.double_dimer], [0.0; 3], 0)
                }
                (Input::State { psi, .. }, Estimator::Snapshots { n, seed }) => vertex_fractions(lat, &sample_snapshots(psi, n, seed, endpoint))?,
                (Input::Snaps(s), _) => vertex_fractions(lat, s)?,
            };
            Ok(["vertex_monomer", "vertex_single", "vertex_double"]
                .iter()
                .enumerate()
                .map(|(i, name)| ObservableReport {
                    stderr: errs[i],
                    n_samples: n,
                    ..exact_row(name, "bulk", endpoint, vals[i], 0)
                })
                .collect())
        }
        ObservableKind::Density => {
            let mut out = Vec::new();
            for (region, label) in [(Region::Bulk, "bulk"), (Region::All, "all")] {
                let (v, e, n) = match (input, est) {
                    (Input::State { psi, .. }, Estimator::Exact) => (mean_density_exact(psi, lat, region)?, 0.0, 0),
                    (Input::State { psi, .. }, Estimator::Snapshots { n, seed }) => {
                        let (v, e) = mean_density_snap(&sample_snapshots(psi, n, seed, endpoint), lat, region)?;
                        (v, e, n)
                    }
                    (Input::Snaps(s), _) => {
                        let (v, e) = mean_density_snap(s, lat, region)?;
                        (v, e, s.len())
                    }
                };
                out.push(ObservableReport {
                    n_samples: n,
                    stderr: e,
                    ..exact_row("density", label, endpoint, v, 0)
                });
            }
            Ok(out)
        }
        ObservableKind::Logical => {
            let (rep, n): (LogicalReport, usize) = match (input, est) {
                (Input::State { psi, .. }, Estimator::Exact) => (logical_ops(psi, lat)?, 0),
                (Input::State { psi, .. }, Estimator::Snapshots { n, seed }) => {
                    (logical_ops_snap(&sample_snapshots(psi, n, seed, endpoint), lat)?, n)
                }
                (Input::Snaps(s), _) => (logical_ops_snap(s, lat)?, s.len()),
            };
            let mut out = Vec::new();
            for (l, v) in &rep.z_l {
                out.push(ObservableReport { n_samples: n, ..exact_row("z_l", l, endpoint, *v, 1) });
            }
            for (l, v) in &rep.x_l {
                out.push(exact_row("x_l", l, endpoint, *v, 1));
            }
            for (a, b, v) in &rep.z1z2 {
                out.push(ObservableReport { n_samples: n, ..exact_row("z1z2", &format!("{a}|{b}"), endpoint, *v, 1) });
            }
            Ok(out)
        }
    }
}

/// First-order error of `|x|^{1/k}`.
fn root_error(x: f64, dx: f64, k: usize) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        return f64::NAN;
    }
    a.powf(1.0 / k as f64) * dx / (k as f64 * a)
}

fn vertex_fractions(lat: &RubyLattice, snaps: &[Snapshot]) -> Result<([f64; 3], [f64; 3], usize), CliError> {
    let verts: Vec<usize> = (0..lat.vertices().len()).filter(|&v| lat.is_bulk_vertex(v)).collect();
    if verts.is_empty() {
        return Err(CliError::Input("lattice has no bulk vertices".into()));
    }
    let mut per: [Vec<f64>; 3] = Default::default();
    for s in snaps {
        if s.bits.n_sites() != lat.n_sites() {
            return Err(CliError::Input("snapshot width does not match the lattice".into()));
        }
        let mut c = [0.0; 3];
        for &v in &verts {
            let k = lat.vertices()[v].sites.iter().filter(|&&i| s.bits.get(i)).count();
            c[k.min(2)] += 1.0;
        }
        for i in 0..3 {
            per[i].push(c[i] / verts.len() as f64);
        }
    }
    let mut vals = [0.0; 3];
    let mut errs = [0.0; 3];
    for i in 0..3 {
        (vals[i], errs[i]) = mean_and_stderr(&per[i]);
    }
    Ok((vals, errs, snaps.len()))
}

fn correlator(ctx: &Ctx, input: &Input, o: &ObservableConfig, est: Estimator, template: &str) -> Result<Vec<ObservableReport>, CliError> {
    let t = template_catalogue()
        .iter()
        .find(|t| t.name == template)
        .ok_or_else(|| CliError::Config(format!("unknown template `{template}`")))?;
    let TemplateShape::Hexagons { cells } = &t.shape else {
        return Err(CliError::Config(format!("`{template}` is not a hexagon cluster")));
    };
    let order = if o.kind == ObservableKind::G2 { 2 } else { 3 };
    if cells.len() != order {
        return Err(CliError::Config(format!("`{template}` has {} hexagons, G{order} needs {order}", cells.len())));
    }
    let mut groups = hexagon_groups(ctx.lat, t.kind, cells, template)?;
    if groups.is_empty() {
        return Err(CliError::Input(format!("`{template}` has no placements on this lattice")));
    }
    let endpoint = input.endpoint();
    // X correlators: rotate the state, then read the dual Z loops
    let rotated;
    let psi = match (input, t.kind) {
        (Input::State { psi, .. }, StringKind::Z) => Some(psi),
        (Input::State { psi, .. }, StringKind::X) => {
            rotated = ctx.quench()?.apply(psi)?;
            groups = groups
                .iter()
                .map(|g| g.iter().map(|l| dual_string(ctx.lat, l)).collect::<ruby_qsl::Result<Vec<_>>>())
                .collect::<ruby_qsl::Result<_>>()?;
            Some(&rotated)
        }
        (Input::Snaps(_), StringKind::X) => return Err(CliError::Input(format!("`{template}`: X correlators need a state input"))),
        (Input::Snaps(_), StringKind::Z) => None,
    };
    let label = format!("g{order}:{template}");
    let report = match (psi, input, est) {
        (Some(psi), _, Estimator::Exact) => {
            let mut sum = 0.0;
            for g in &groups {
                sum += connected_correlator_exact(psi, g)?;
            }
            exact_row(&format!("g{order}"), &label, endpoint, sum / groups.len() as f64, groups.len())
        }
        (Some(psi), _, Estimator::Snapshots { n, seed }) => {
            connected_correlator_snap(&sample_snapshots(psi, n, seed, endpoint), &groups, &label)?
        }
        (None, Input::Snaps(s), _) => connected_correlator_snap(s, &groups, &label)?,
        (None, Input::State { .. }, _) => unreachable!("state inputs always carry a state"),
    };
    Ok(vec![report])
}

pub fn quench_calibrate(cfg: &RunConfig, state: Option<&Path>) -> Result<(), CliError> {
    let lat = cfg.build_lattice()?;
    let prov = Provenance::new(cfg.hash());
    let (endpoint, psi) = match state {
        Some(p) => read_state(p, &basis_for(cfg, &lat)?)?,
        None => {
            let sched = cfg.schedule.schedule()?;
            let first = cfg.schedule.endpoints[0];
            let res = run_sweep(&lat, &cfg.hamiltonian(), &sched, &[first], &cfg.sweep_options())?;
            res.states.into_iter().next().expect("one endpoint")
        }
    };
    let spec = quench_spec(cfg);
    let quench = Quench::new(&lat, psi.basis(), spec)?;
    let loops = enumerate_loops_by_name(&lat, &cfg.calibrate.template)?;
    if loops.is_empty() || loops[0].kind() != StringKind::X {
        return Err(CliError::Config(format!(
            "calibration template `{}` must be an X loop with placements on this lattice",
            cfg.calibrate.template
        )));
    }
    let duals: Vec<StringSpec> = loops.iter().map(|l| dual_string(&lat, l)).collect::<ruby_qsl::Result<_>>()?;
    let tau_ideal = ideal_quench_time(spec.omega_q);
    let steps = cfg.calibrate.steps.max(1);
    let tau_max = cfg.calibrate.tau_max_factor * tau_ideal;
    let mut csv = String::from("tau,parity\n");
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..=steps {
        let tau = tau_max * i as f64 / steps as f64;
        let rotated = quench.apply_for(&psi, tau)?;
        let mut sum = 0.0;
        for d in &duals {
            sum += z_parity_exact(&rotated, d)?;
        }
        let p = sum / duals.len() as f64;
        csv.push_str(&format!("{tau},{p}\n"));
        if p > best.1 {
            best = (tau, p);
        }
    }
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    write_csv(&dir.join("quench_calibration.csv"), &prov, &csv)?;
    println!(
        "endpoint {endpoint}: argmax tau = {} (parity {:.6}); ideal single-cycle time {tau_ideal}",
        best.0, best.1
    );
    write_json(
        &dir.join("quench_calibration.json"),
        &prov,
        Calibration {
            endpoint,
            argmax_tau: best.0,
            max_parity: best.1,
            ideal_tau: tau_ideal,
        },
    )
}

#[derive(Serialize)]
struct Calibration {
    endpoint: f64,
    argmax_tau: f64,
    max_parity: f64,
    ideal_tau: f64,
}

#[derive(Serialize)]
struct DimerSummary {
    n_sites: usize,
    rule: crate::config::RuleConfig,
    n_coverings: usize,
    sector_counts: Option<[usize; 2]>,
}

pub fn dimer_enum(cfg: &RunConfig) -> Result<(), CliError> {
    let lat = cfg.build_lattice()?;
    let prov = Provenance::new(cfg.hash());
    let rule = cfg.dimer.rule();
    let coverings = enumerate_perfect_coverings(&lat, rule, cfg.dimer.cap.unwrap_or(DEFAULT_COVERING_CAP))?;
    let sector_counts = if lat.hole().is_some() && rule == CoverageRule::Strict && !coverings.is_empty() {
        let z = enumerate_loops_by_name(&lat, "z_hole_to_boundary")?;
        let labels = classify_sectors(&lat, &coverings, 0, &z)?;
        let ones = labels.iter().filter(|l| l.value() == 1).count();
        Some([labels.len() - ones, ones])
    } else {
        None
    };
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let path = dir.join("coverings.txt");
    let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    export_coverings(BufWriter::new(f), &coverings, &prov.header())?;
    println!("{} coverings", coverings.len());
    if let Some([a, b]) = sector_counts {
        println!("sector 0: {a}, sector 1: {b}");
    }
    write_json(
        &dir.join("dimer_summary.json"),
        &prov,
        DimerSummary {
            n_sites: lat.n_sites(),
            rule: cfg.dimer.rule,
            n_coverings: coverings.len(),
            sector_counts,
        },
    )?;
    Ok(())
}
