use serde::{Deserialize, Serialize};

use super::{mean_and_stderr, parity_of, site_mask, sites_parity_exact, x_parity_exact, ObservableReport, Snapshot};
use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::lattice::{
    enumerate_loops_by_name, segments_cross, x_endpoints, RubyLattice, SitePos, StringKind, StringSpec,
};

/// Closed-loop estimates smaller than this make the BFFM ratio undefined.
pub const BFFM_EPSILON: f64 = 1e-3;

/// `open / sqrt(|closed|)`, or `None` when `|closed| < BFFM_EPSILON`.
pub fn bffm(open: f64, closed: f64) -> Option<f64> {
    (closed.abs() >= BFFM_EPSILON).then(|| open / closed.abs().sqrt())
}

/// BFFM ratio of two reports with first-order error propagation.
pub fn bffm_report(open: &ObservableReport, closed: &ObservableReport, label: &str) -> ObservableReport {
    let value = bffm(open.estimate, closed.estimate);
    let c = closed.estimate.abs();
    let stderr = match value {
        Some(_) => ((open.stderr / c.sqrt()).powi(2) + (open.estimate * closed.stderr / (2.0 * c.powf(1.5))).powi(2)).sqrt(),
        None => f64::NAN,
    };
    ObservableReport {
        observable: "bffm".into(),
        label: label.into(),
        endpoint: open.endpoint,
        estimate: value.unwrap_or(f64::NAN),
        stderr,
        n_samples: open.n_samples.min(closed.n_samples),
        n_loop_instances: open.n_loop_instances,
        defined: value.is_some(),
    }
}

/// Fractions of bulk vertices touched by 0, 1 and at least 2 occupied links.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexStats {
    pub monomer: f64,
    pub single_dimer: f64,
    pub double_dimer: f64,
    pub n_vertices: usize,
}

fn bulk_vertices(lat: &RubyLattice) -> Vec<usize> {
    (0..lat.vertices().len()).filter(|&v| lat.is_bulk_vertex(v)).collect()
}

fn check_width(snaps: &[Snapshot], lat: &RubyLattice) -> Result<()> {
    match snaps.iter().find(|s| s.bits.n_sites() != lat.n_sites()) {
        Some(s) => Err(Error::DimensionMismatch {
            expected: lat.n_sites(),
            got: s.bits.n_sites(),
        }),
        None => Ok(()),
    }
}

pub fn vertex_stats(snaps: &[Snapshot], lat: &RubyLattice) -> Result<VertexStats> {
    check_width(snaps, lat)?;
    let verts = bulk_vertices(lat);
    let mut counts = [0usize; 3];
    for s in snaps {
        for &v in &verts {
            let k = lat.vertices()[v].sites.iter().filter(|&&i| s.bits.get(i)).count();
            counts[k.min(2)] += 1;
        }
    }
    let total = (snaps.len() * verts.len()).max(1) as f64;
    Ok(VertexStats {
        monomer: counts[0] as f64 / total,
        single_dimer: counts[1] as f64 / total,
        double_dimer: counts[2] as f64 / total,
        n_vertices: verts.len(),
    })
}

/// Exact vertex statistics from the Born probabilities of a state.
pub fn vertex_stats_exact(psi: &StateVector, lat: &RubyLattice) -> Result<VertexStats> {
    let b = psi.basis();
    if b.n_sites() != lat.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: lat.n_sites(),
            got: b.n_sites(),
        });
    }
    let verts = bulk_vertices(lat);
    let mut acc = [0.0f64; 3];
    for (k, z) in psi.amplitudes().iter().enumerate() {
        let p = z.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for &v in &verts {
            let n = lat.vertices()[v].sites.iter().filter(|&&i| b.is_occupied(k, i)).count();
            acc[n.min(2)] += p;
        }
    }
    let total = verts.len().max(1) as f64;
    Ok(VertexStats {
        monomer: acc[0] / total,
        single_dimer: acc[1] / total,
        double_dimer: acc[2] / total,
        n_vertices: verts.len(),
    })
}

/// Site selection for densities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Bulk,
    All,
}

fn region_sites(lat: &RubyLattice, region: Region) -> Vec<usize> {
    (0..lat.n_sites())
        .filter(|&s| region == Region::All || lat.is_bulk_site(s))
        .collect()
}

pub fn site_densities_exact(psi: &StateVector) -> Vec<f64> {
    let b = psi.basis();
    let mut n = vec![0.0; b.n_sites()];
    for (k, z) in psi.amplitudes().iter().enumerate() {
        let p = z.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (w, &word) in b.words(k).iter().enumerate() {
            let mut x = word;
            while x != 0 {
                n[w * 64 + x.trailing_zeros() as usize] += p;
                x &= x - 1;
            }
        }
    }
    n
}

pub fn site_densities_snap(snaps: &[Snapshot], lat: &RubyLattice) -> Result<Vec<f64>> {
    check_width(snaps, lat)?;
    let mut n = vec![0.0; lat.n_sites()];
    for s in snaps {
        for i in s.bits.occupied() {
            n[i] += 1.0;
        }
    }
    let r = snaps.len().max(1) as f64;
    Ok(n.into_iter().map(|x| x / r).collect())
}

fn region_mean(n: &[f64], sites: &[usize]) -> f64 {
    if sites.is_empty() {
        return f64::NAN;
    }
    sites.iter().map(|&s| n[s]).sum::<f64>() / sites.len() as f64
}

pub fn mean_density_exact(psi: &StateVector, lat: &RubyLattice, region: Region) -> Result<f64> {
    if psi.basis().n_sites() != lat.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: lat.n_sites(),
            got: psi.basis().n_sites(),
        });
    }
    Ok(region_mean(&site_densities_exact(psi), &region_sites(lat, region)))
}

/// Region density averaged over snapshots, with the standard error of the
/// per-snapshot region means.
pub fn mean_density_snap(snaps: &[Snapshot], lat: &RubyLattice, region: Region) -> Result<(f64, f64)> {
    check_width(snaps, lat)?;
    let sites = region_sites(lat, region);
    if sites.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let per: Vec<f64> = snaps
        .iter()
        .map(|s| sites.iter().filter(|&&i| s.bits.get(i)).count() as f64 / sites.len() as f64)
        .collect();
    Ok(super::mean_and_stderr(&per))
}

fn z_list<'a>(strings: &'a [StringSpec]) -> Result<Vec<&'a [usize]>> {
    if !(2..=3).contains(&strings.len()) {
        return Err(Error::InvalidArgument(format!(
            "connected correlators take 2 or 3 strings, got {}",
            strings.len()
        )));
    }
    strings
        .iter()
        .map(|s| {
            s.z_sites()
                .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a Z string", s.label)))
        })
        .collect()
}

/// Connected correlator of two or three parities from their moments.
/// `m` holds `⟨1⟩, ⟨2⟩, ⟨3⟩, ⟨12⟩, ⟨23⟩, ⟨31⟩, ⟨123⟩` (entries past the
/// order are ignored).
fn cumulant(order: usize, m: &[f64; 7]) -> f64 {
    let g12 = m[3] - m[0] * m[1];
    if order == 2 {
        return g12;
    }
    let g23 = m[4] - m[1] * m[2];
    let g31 = m[5] - m[2] * m[0];
    m[6] - g12 * m[2] - g23 * m[0] - g31 * m[1] - m[0] * m[1] * m[2]
}

fn moments_of(p: [f64; 3]) -> [f64; 7] {
    [p[0], p[1], p[2], p[0] * p[1], p[1] * p[2], p[2] * p[0], p[0] * p[1] * p[2]]
}

/// G² = ⟨P₁P₂⟩ − ⟨P₁⟩⟨P₂⟩, or G³ with the three pairwise G² terms and the
/// product term subtracted, for Z strings.
pub fn connected_correlator_exact(psi: &StateVector, strings: &[StringSpec]) -> Result<f64> {
    let zs = z_list(strings)?;
    let b = psi.basis();
    let masks: Vec<Vec<u64>> = zs.iter().map(|s| site_mask(b.n_sites(), s)).collect::<Result<_>>()?;
    let mut m = [0.0; 7];
    for (k, z) in psi.amplitudes().iter().enumerate() {
        let w = z.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let mut p = [1.0; 3];
        for (i, mask) in masks.iter().enumerate() {
            p[i] = parity_of(b.words(k), mask);
        }
        for (acc, v) in m.iter_mut().zip(moments_of(p)) {
            *acc += w * v;
        }
    }
    Ok(cumulant(zs.len(), &m))
}

/// Snapshot estimate of a connected correlator, averaged over placements
/// (each a group of 2 or 3 Z strings), with a jackknife error over
/// repetitions.
pub fn connected_correlator_snap(snaps: &[Snapshot], groups: &[Vec<StringSpec>], label: &str) -> Result<ObservableReport> {
    if snaps.len() < 2 {
        return Err(Error::InvalidArgument("need at least two snapshots".into()));
    }
    if groups.is_empty() {
        return Err(Error::InvalidArgument(format!("no placements for `{label}`")));
    }
    let n_sites = snaps[0].bits.n_sites();
    let order = groups[0].len();
    let mut per_group: Vec<(Vec<[f64; 7]>, [f64; 7])> = Vec::with_capacity(groups.len());
    for g in groups {
        let zs = z_list(g)?;
        if zs.len() != order {
            return Err(Error::InvalidArgument("placements differ in order".into()));
        }
        let masks: Vec<Vec<u64>> = zs.iter().map(|s| site_mask(n_sites, s)).collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(snaps.len());
        let mut sum = [0.0; 7];
        for s in snaps {
            if s.bits.n_sites() != n_sites {
                return Err(Error::DimensionMismatch {
                    expected: n_sites,
                    got: s.bits.n_sites(),
                });
            }
            let mut p = [1.0; 3];
            for (i, mask) in masks.iter().enumerate() {
                p[i] = parity_of(s.bits.words(), mask);
            }
            let row = moments_of(p);
            for (a, v) in sum.iter_mut().zip(row) {
                *a += v;
            }
            rows.push(row);
        }
        per_group.push((rows, sum));
    }
    let r = snaps.len() as f64;
    let avg = |f: &dyn Fn(&(Vec<[f64; 7]>, [f64; 7])) -> f64| per_group.iter().map(f).sum::<f64>() / per_group.len() as f64;
    let full = avg(&|(_, sum)| cumulant(order, &sum.map(|x| x / r)));
    let loo: Vec<f64> = (0..snaps.len())
        .map(|i| {
            avg(&|(rows, sum)| {
                let mut m = [0.0; 7];
                for j in 0..7 {
                    m[j] = (sum[j] - rows[i][j]) / (r - 1.0);
                }
                cumulant(order, &m)
            })
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / r;
    let var = (r - 1.0) / r * loo.iter().map(|x| (x - loo_mean).powi(2)).sum::<f64>();
    Ok(ObservableReport {
        observable: format!("g{order}"),
        label: label.into(),
        endpoint: snaps[0].endpoint,
        estimate: full,
        stderr: var.sqrt(),
        n_samples: snaps.len(),
        n_loop_instances: groups.len(),
        defined: true,
    })
}

/// Area- and perimeter-rescaled parities of one loop family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRoots {
    pub label: String,
    pub estimate: f64,
    pub area: usize,
    pub perimeter: usize,
    pub area_root: f64,
    pub perimeter_root: f64,
    /// The estimate is zero, so both roots are zero and carry no scaling
    /// information.
    pub zero: bool,
}

/// `|estimate|^{1/area}` and `|estimate|^{1/perimeter}` for each
/// `(estimate, loop geometry)` entry.
pub fn scaling_report(entries: &[(f64, &StringSpec)]) -> Result<Vec<ScalingRoots>> {
    entries
        .iter()
        .map(|&(estimate, s)| {
            let area = s.area.unwrap_or(0);
            let perimeter = s.perimeter();
            if area == 0 || perimeter == 0 {
                return Err(Error::InvalidArgument(format!(
                    "`{}` needs a positive area and perimeter (got {area}, {perimeter})",
                    s.label
                )));
            }
            let a = estimate.abs();
            Ok(ScalingRoots {
                label: s.label.clone(),
                estimate,
                area,
                perimeter,
                area_root: a.powf(1.0 / area as f64),
                perimeter_root: a.powf(1.0 / perimeter as f64),
                zero: a == 0.0,
            })
        })
        .collect()
}

/// Logical-operator expectations on a holed lattice.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogicalReport {
    /// ⟨Z_L⟩ per hole-to-boundary string.
    pub z_l: Vec<(String, f64)>,
    /// ⟨X_L⟩ per loop around the hole (wavefunction input only).
    pub x_l: Vec<(String, f64)>,
    /// ⟨Z₁Z₂⟩ for every pair of hole-to-boundary strings.
    pub z1z2: Vec<(String, String, f64)>,
}

/// The string crosses an odd number of links of exactly one face, and that
/// face is a hexagon bordering the hole: it starts at the hole and leaves
/// through the outer boundary.
pub fn check_hole_to_boundary(lat: &RubyLattice, s: &StringSpec) -> Result<()> {
    let sites = s
        .z_sites()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a Z string", s.label)))?;
    if lat.hole().is_none() {
        return Err(Error::Lattice("lattice has no hole".into()));
    }
    let mut tri = vec![0u8; lat.triangles().len()];
    let mut hex = vec![0u8; lat.hexagons().len()];
    for &i in sites {
        if i >= lat.n_sites() {
            return Err(Error::OutOfRange { index: i, dim: lat.n_sites() });
        }
        tri[lat.site_triangle(i).0] ^= 1;
        if let Some(h) = lat.site_hexagon(i) {
            hex[h] ^= 1;
        }
    }
    let odd_tri = tri.iter().filter(|&&p| p == 1).count();
    let odd_hex: Vec<usize> = (0..hex.len()).filter(|&h| hex[h] == 1).collect();
    let ok = odd_tri == 0 && odd_hex.len() == 1 && lat.hexagons()[odd_hex[0]].sites.iter().any(|x| x.is_none());
    if ok {
        Ok(())
    } else {
        Err(Error::String(format!(
            "`{}` does not run from the hole to the outer boundary",
            s.label
        )))
    }
}

/// Number of times a closed X loop winds the hole, modulo 2.
pub fn winds_hole(lat: &RubyLattice, s: &StringSpec) -> Result<bool> {
    let steps = s
        .x_steps()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not an X string", s.label)))?;
    let hole = lat.hole().ok_or_else(|| Error::Lattice("lattice has no hole".into()))?;
    if !x_endpoints(lat, steps).is_empty() {
        return Err(Error::String(format!("`{}` is not closed", s.label)));
    }
    let extent = lat.sites().iter().map(|p| p.dist(&hole.center)).fold(0.0, f64::max) + 4.0;
    let links: Vec<(SitePos, SitePos)> = steps
        .iter()
        .map(|st| {
            let site = lat.triangles()[st.triangle].sites[st.edge as usize];
            let [a, b] = lat.site_vertices(site);
            (lat.vertices()[a].pos, lat.vertices()[b].pos)
        })
        .collect();
    // a ray direction that misses every vertex
    for k in 0..16 {
        let th = 0.1234 + 0.37 * k as f64;
        let far = SitePos {
            x: hole.center.x + extent * th.cos(),
            y: hole.center.y + extent * th.sin(),
        };
        if lat.vertices().iter().any(|v| point_line_distance(v.pos, hole.center, far) < 1e-6) {
            continue;
        }
        let crossings = links
            .iter()
            .filter(|(a, b)| segments_cross(hole.center, far, *a, *b))
            .count();
        return Ok(crossings % 2 == 1);
    }
    Err(Error::String("no clean ray from the hole centre".into()))
}

fn point_line_distance(p: SitePos, a: SitePos, b: SitePos) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    SitePos {
        x: a.x + t * dx,
        y: a.y + t * dy,
    }
    .dist(&p)
}

fn logical_strings(lat: &RubyLattice) -> Result<(Vec<StringSpec>, Vec<StringSpec>)> {
    let z = enumerate_loops_by_name(lat, "z_hole_to_boundary")?;
    let x = enumerate_loops_by_name(lat, "x_hole_encircling")?;
    for s in &z {
        check_hole_to_boundary(lat, s)?;
    }
    for s in &x {
        if !winds_hole(lat, s)? {
            return Err(Error::String(format!("`{}` does not wind the hole", s.label)));
        }
    }
    debug_assert!(x.iter().all(|s| s.kind() == StringKind::X));
    Ok((z, x))
}

fn pairs(z: &[StringSpec], mut f: impl FnMut(&[usize]) -> Result<f64>) -> Result<Vec<(String, String, f64)>> {
    let mut out = Vec::new();
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let mut sites: Vec<usize> = z[i].z_sites().unwrap_or(&[]).to_vec();
            sites.extend_from_slice(z[j].z_sites().unwrap_or(&[]));
            // shared sites cancel in the product
            sites.sort_unstable();
            let mut prod = Vec::with_capacity(sites.len());
            let mut k = 0;
            while k < sites.len() {
                if k + 1 < sites.len() && sites[k] == sites[k + 1] {
                    k += 2;
                } else {
                    prod.push(sites[k]);
                    k += 1;
                }
            }
            out.push((z[i].label.clone(), z[j].label.clone(), f(&prod)?));
        }
    }
    Ok(out)
}

/// ⟨Z_L⟩, ⟨X_L⟩ and ⟨Z₁Z₂⟩ from the catalogued hole strings.
pub fn logical_ops(psi: &StateVector, lat: &RubyLattice) -> Result<LogicalReport> {
    let (z, x) = logical_strings(lat)?;
    Ok(LogicalReport {
        z_l: z
            .iter()
            .map(|s| Ok((s.label.clone(), sites_parity_exact(psi, s.z_sites().unwrap_or(&[]))?)))
            .collect::<Result<_>>()?,
        x_l: x
            .iter()
            .map(|s| Ok((s.label.clone(), x_parity_exact(psi, lat, s)?)))
            .collect::<Result<_>>()?,
        z1z2: pairs(&z, |sites| sites_parity_exact(psi, sites))?,
    })
}

/// Snapshot version of [`logical_ops`]; X loops need the quench path and are
/// left empty.
pub fn logical_ops_snap(snaps: &[Snapshot], lat: &RubyLattice) -> Result<LogicalReport> {
    check_width(snaps, lat)?;
    let (z, _) = logical_strings(lat)?;
    let mean = |sites: &[usize]| -> Result<f64> {
        let mask = site_mask(lat.n_sites(), sites)?;
        let v: Vec<f64> = snaps.iter().map(|s| parity_of(s.bits.words(), &mask)).collect();
        Ok(mean_and_stderr(&v).0)
    };
    Ok(LogicalReport {
        z_l: z
            .iter()
            .map(|s| Ok((s.label.clone(), mean(s.z_sites().unwrap_or(&[]))?)))
            .collect::<Result<_>>()?,
        x_l: Vec::new(),
        z1z2: pairs(&z, mean)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bffm_edge_cases() {
        assert_eq!(bffm(0.0, 0.5), Some(0.0));
        assert_eq!(bffm(0.3, 0.0005), None);
        assert!((bffm(0.25, -0.25).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g3_vanishes_for_independent_moments() {
        let p = [0.3, -0.2, 0.7];
        let m = [p[0], p[1], p[2], p[0] * p[1], p[1] * p[2], p[2] * p[0], p[0] * p[1] * p[2]];
        assert!(cumulant(3, &m).abs() < 1e-15);
        assert!(cumulant(2, &m).abs() < 1e-15);
    }

    #[test]
    fn scaling_rejects_missing_area() {
        let s = StringSpec::z(vec![0, 1], true, "no-area");
        assert!(scaling_report(&[(0.5, &s)]).is_err());
        let s = s.with_area(2);
        let r = scaling_report(&[(0.25, &s)]).unwrap();
        assert!((r[0].area_root - 0.5).abs() < 1e-15);
        assert!((r[0].perimeter_root - 0.5).abs() < 1e-15);
    }
}
