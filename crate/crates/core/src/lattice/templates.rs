//! Loop templates are curated data files (see `fixtures/loops/`). Each file
//! names a shape; [`enumerate_loops`] places every symmetry image of that
//! shape wherever it fits inside the lattice.
//!
//! Fixture format (TOML):
//!
//! ```toml
//! name = "x_double_hexagon"
//! kind = "x"                      # "z" or "x"
//! description = "..."
//! [shape]
//! type = "hexagons"               # vertex | hexagons | hole_encircling | hole_to_boundary
//! cells = [[0, 0], [1, 0]]        # hexagon offsets in (A1, A2) units
//! ```
//!
//! `hole_encircling` takes `shells = [1, 2]` (number of hexagon distance
//! shells around the hole), `hole_to_boundary` takes `angles_deg = [...]`.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::strings::{dual_string, z_cut, z_region_sites};
use super::{Boundary, RubyLattice, SitePos, StringBody, StringKind, StringSpec, XStep};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopTemplate {
    pub name: String,
    pub kind: StringKind,
    #[serde(default)]
    pub description: String,
    pub shape: TemplateShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TemplateShape {
    Vertex,
    Hexagons { cells: Vec<[i64; 2]> },
    HoleEncircling { shells: Vec<usize> },
    HoleToBoundary { angles_deg: Vec<f64> },
}

const FIXTURES: &[&str] = &[
    include_str!("../../fixtures/loops/z_vertex.toml"),
    include_str!("../../fixtures/loops/z_hexagon.toml"),
    include_str!("../../fixtures/loops/x_hexagon.toml"),
    include_str!("../../fixtures/loops/z_double_hexagon.toml"),
    include_str!("../../fixtures/loops/x_double_hexagon.toml"),
    include_str!("../../fixtures/loops/z_triple_hexagon.toml"),
    include_str!("../../fixtures/loops/x_triple_hexagon.toml"),
    include_str!("../../fixtures/loops/z_hex_row3.toml"),
    include_str!("../../fixtures/loops/x_hex_row3.toml"),
    include_str!("../../fixtures/loops/z_rhombus_2x2.toml"),
    include_str!("../../fixtures/loops/x_rhombus_2x2.toml"),
    include_str!("../../fixtures/loops/z_hex_triangle6.toml"),
    include_str!("../../fixtures/loops/x_hex_triangle6.toml"),
    include_str!("../../fixtures/loops/x_hole_encircling.toml"),
    include_str!("../../fixtures/loops/z_hole_to_boundary.toml"),
];

/// All built-in templates, in fixture order.
pub fn template_catalogue() -> &'static [LoopTemplate] {
    static CATALOGUE: OnceLock<Vec<LoopTemplate>> = OnceLock::new();
    CATALOGUE.get_or_init(|| {
        FIXTURES
            .iter()
            .map(|src| toml::from_str(src).expect("built-in loop fixture must parse"))
            .collect()
    })
}

pub fn enumerate_loops_by_name(lat: &RubyLattice, name: &str) -> Result<Vec<StringSpec>> {
    let t = template_catalogue()
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::UnknownTemplate(name.to_string()))?;
    enumerate_loops(lat, t)
}

/// Every placement of a template that fits the lattice without touching an
/// edge (any under-coordinated vertex, including the rim of a hole).
pub fn enumerate_loops(lat: &RubyLattice, t: &LoopTemplate) -> Result<Vec<StringSpec>> {
    match &t.shape {
        TemplateShape::Vertex => {
            if t.kind != StringKind::Z {
                return Err(Error::String(format!(
                    "`{}`: vertex loops are Z only",
                    t.name
                )));
            }
            let mut out = Vec::new();
            for v in 0..lat.vertices.len() {
                if !lat.vertices[v].is_full() {
                    continue;
                }
                let region: HashSet<usize> = [v].into_iter().collect();
                let sites = z_region_sites(lat, &region);
                if touches_edge(lat, &sites) {
                    continue;
                }
                out.push(StringSpec::z(sites, true, format!("{}@v{}", t.name, v)).with_area(1));
            }
            Ok(out)
        }
        TemplateShape::Hexagons { cells } => hexagon_loops(lat, t, cells),
        TemplateShape::HoleEncircling { shells } => {
            if t.kind != StringKind::X {
                return Err(Error::String(format!(
                    "`{}`: hole-encircling loops are X only",
                    t.name
                )));
            }
            hole_encircling_loops(lat, shells, &t.name)
        }
        TemplateShape::HoleToBoundary { angles_deg } => {
            if t.kind != StringKind::Z {
                return Err(Error::String(format!(
                    "`{}`: hole-to-boundary strings are Z only",
                    t.name
                )));
            }
            let mut out = Vec::new();
            for &a in angles_deg {
                match hole_to_boundary_string(lat, a, &format!("{}@{}deg", t.name, a)) {
                    Ok(s) => out.push(s),
                    Err(Error::String(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        }
    }
}

fn symmetry_images(cells: &[[i64; 2]]) -> Vec<Vec<[i64; 2]>> {
    let rot = |[m, n]: [i64; 2]| [-n, m + n];
    let refl = |[m, n]: [i64; 2]| [m + n, -n];
    let mut images: Vec<Vec<[i64; 2]>> = Vec::new();
    for mirror in [false, true] {
        let mut cur: Vec<[i64; 2]> = if mirror {
            cells.iter().map(|&c| refl(c)).collect()
        } else {
            cells.to_vec()
        };
        for _ in 0..6 {
            let mut norm = cur.clone();
            norm.sort();
            let base = norm[0];
            let mut norm: Vec<[i64; 2]> = norm
                .iter()
                .map(|c| [c[0] - base[0], c[1] - base[1]])
                .collect();
            norm.sort();
            if !images.contains(&norm) {
                images.push(norm);
            }
            cur = cur.iter().map(|&c| rot(c)).collect();
        }
    }
    images
}

fn hexagon_loops(
    lat: &RubyLattice,
    t: &LoopTemplate,
    cells: &[[i64; 2]],
) -> Result<Vec<StringSpec>> {
    if cells.is_empty() {
        return Err(Error::String(format!("`{}` has no cells", t.name)));
    }
    let images = symmetry_images(cells);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    for anchor in 0..lat.hexagons.len() {
        let (p, q) = lat.hexagons[anchor].cell;
        for (k, image) in images.iter().enumerate() {
            let mut hexes = Vec::with_capacity(image.len());
            for c in image {
                match lat.hexagon_at((p + c[0], q + c[1])) {
                    Some(h) => hexes.push(h),
                    None => break,
                }
            }
            if hexes.len() != image.len() {
                continue;
            }
            let distinct: HashSet<usize> = hexes.iter().copied().collect();
            if distinct.len() != hexes.len()
                || hexes.iter().any(|&h| {
                    let hx = &lat.hexagons[h];
                    !hx.is_complete() || hx.vertices.iter().any(|&v| !lat.vertices[v].is_full())
                })
            {
                continue;
            }
            let label = format!("{}@{},{}#{}", t.name, p, q, k);
            let spec = match t.kind {
                StringKind::Z => {
                    let region: HashSet<usize> = hexes
                        .iter()
                        .flat_map(|&h| lat.hexagons[h].vertices)
                        .collect();
                    let sites = z_region_sites(lat, &region);
                    if touches_edge(lat, &sites) {
                        continue;
                    }
                    StringSpec::z(sites, true, label).with_area(region.len())
                }
                StringKind::X => {
                    let Ok(steps) = x_loop_from_hexagons(lat, &hexes) else {
                        continue;
                    };
                    let spec = StringSpec::x(steps, true, label).with_area(hexes.len());
                    let mut support = spec.support(lat);
                    support.extend(
                        dual_string(lat, &spec)?
                            .z_sites()
                            .unwrap_or(&[])
                            .iter()
                            .copied(),
                    );
                    if touches_edge(lat, &support) {
                        continue;
                    }
                    spec
                }
            };
            let mut key = spec.support(lat);
            key.push(usize::MAX - (t.kind == StringKind::X) as usize);
            if seen.insert(key) {
                out.push(spec);
            }
        }
    }
    Ok(out)
}

/// Placements of a hexagon cluster, returned as the single-hexagon loops of
/// each member (for connected correlators). Placements where any member loop
/// touches an edge are dropped.
pub fn hexagon_groups(lat: &RubyLattice, kind: StringKind, cells: &[[i64; 2]], name: &str) -> Result<Vec<Vec<StringSpec>>> {
    if cells.is_empty() {
        return Err(Error::String(format!("`{name}` has no cells")));
    }
    let images = symmetry_images(cells);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    for anchor in 0..lat.hexagons.len() {
        let (p, q) = lat.hexagons[anchor].cell;
        'image: for image in &images {
            let mut hexes = Vec::with_capacity(image.len());
            for c in image {
                match lat.hexagon_at((p + c[0], q + c[1])) {
                    Some(h) => hexes.push(h),
                    None => continue 'image,
                }
            }
            let mut key = hexes.clone();
            key.sort_unstable();
            key.dedup();
            if key.len() != hexes.len() || seen.contains(&key) {
                continue;
            }
            let mut group = Vec::with_capacity(hexes.len());
            for &h in &hexes {
                let (hp, hq) = lat.hexagons[h].cell;
                match single_hexagon_loop(lat, kind, h, &format!("{name}@{p},{q}/{hp},{hq}"))? {
                    Some(l) => group.push(l),
                    None => continue 'image,
                }
            }
            seen.insert(key);
            out.push(group);
        }
    }
    Ok(out)
}

fn single_hexagon_loop(lat: &RubyLattice, kind: StringKind, h: usize, label: &str) -> Result<Option<StringSpec>> {
    let hx = &lat.hexagons[h];
    if !hx.is_complete() || hx.vertices.iter().any(|&v| !lat.vertices[v].is_full()) {
        return Ok(None);
    }
    match kind {
        StringKind::Z => {
            let region: HashSet<usize> = hx.vertices.iter().copied().collect();
            let sites = z_region_sites(lat, &region);
            if touches_edge(lat, &sites) {
                return Ok(None);
            }
            Ok(Some(StringSpec::z(sites, true, label).with_area(6)))
        }
        StringKind::X => {
            let Ok(steps) = x_loop_from_hexagons(lat, &[h]) else {
                return Ok(None);
            };
            let spec = StringSpec::x(steps, true, label).with_area(1);
            let mut support = spec.support(lat);
            support.extend(dual_string(lat, &spec)?.z_sites().unwrap_or(&[]).iter().copied());
            if touches_edge(lat, &support) {
                return Ok(None);
            }
            Ok(Some(spec))
        }
    }
}

/// Boundary of the face region made of `hexes` plus every triangle with at
/// least two edges on those hexagons. The hole triangle counts as a face; a
/// loop whose boundary would run along a removed link is rejected.
pub(crate) fn x_loop_from_hexagons(lat: &RubyLattice, hexes: &[usize]) -> Result<Vec<XStep>> {
    const HOLE: usize = usize::MAX;
    let in_set: HashSet<usize> = hexes.iter().copied().collect();
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for &h in hexes {
        for s in lat.hexagons[h].sites {
            let t = s.map_or(HOLE, |s| lat.site_triangle[s].0);
            *count.entry(t).or_default() += 1;
        }
    }
    let mut sites = Vec::new();
    for (&t, &c) in &count {
        if t == HOLE {
            if c != 3 {
                return Err(Error::String(
                    "loop runs along the removed hole links".into(),
                ));
            }
            continue;
        }
        match c {
            1 => {
                let s = lat.triangles[t]
                    .sites
                    .iter()
                    .copied()
                    .find(|&s| lat.site_hexagon[s].is_some_and(|h| in_set.contains(&h)))
                    .expect("counted edge exists");
                sites.push(s);
            }
            2 => {
                let s = lat.triangles[t]
                    .sites
                    .iter()
                    .copied()
                    .find(|&s| !lat.site_hexagon[s].is_some_and(|h| in_set.contains(&h)))
                    .expect("third edge exists");
                sites.push(s);
            }
            _ => {}
        }
    }
    Ok(order_links(lat, &sites)
        .into_iter()
        .map(|s| {
            let (triangle, edge) = lat.site_triangle[s];
            XStep { triangle, edge }
        })
        .collect())
}

/// Orders links by walking the cycles they form.
fn order_links(lat: &RubyLattice, links: &[usize]) -> Vec<usize> {
    let mut remaining: Vec<usize> = links.to_vec();
    remaining.sort_unstable();
    let mut used = vec![false; remaining.len()];
    let mut out = Vec::with_capacity(remaining.len());
    while let Some(start) = used.iter().position(|u| !u) {
        used[start] = true;
        let mut cur = remaining[start];
        out.push(cur);
        let mut from = lat.site_vertices[cur][0];
        loop {
            let [a, b] = lat.site_vertices[cur];
            let at = if a == from { b } else { a };
            let next = (0..remaining.len())
                .find(|&k| !used[k] && lat.site_vertices[remaining[k]].contains(&at));
            match next {
                Some(k) => {
                    used[k] = true;
                    cur = remaining[k];
                    out.push(cur);
                    from = at;
                }
                None => break,
            }
        }
    }
    out
}

fn touches_edge(lat: &RubyLattice, sites: &[usize]) -> bool {
    sites
        .iter()
        .flat_map(|&s| lat.site_vertices[s])
        .any(|v| !lat.vertices[v].is_full())
}

/// X loops around the hole built from the first `shells` distance shells of
/// hexagons surrounding it.
pub fn hole_encircling_loops(
    lat: &RubyLattice,
    shells: &[usize],
    name: &str,
) -> Result<Vec<StringSpec>> {
    let hole = lat
        .hole
        .as_ref()
        .ok_or_else(|| Error::Lattice("lattice has no hole".into()))?;
    let mut dists: Vec<(i64, usize)> = lat
        .hexagons
        .iter()
        .enumerate()
        .map(|(h, hx)| ((hx.center.dist(&hole.center) * 1e6).round() as i64, h))
        .collect();
    dists.sort();
    let mut shell_radii: Vec<i64> = dists.iter().map(|d| d.0).collect();
    shell_radii.dedup();
    let mut out = Vec::new();
    for &k in shells {
        if k == 0 || k > shell_radii.len() {
            continue;
        }
        let r = shell_radii[k - 1];
        let hexes: Vec<usize> = dists.iter().filter(|d| d.0 <= r).map(|d| d.1).collect();
        let Ok(steps) = x_loop_from_hexagons(lat, &hexes) else {
            continue;
        };
        let spec = StringSpec::x(steps, true, format!("{name}@shell{k}")).with_area(hexes.len());
        let mut support = spec.support(lat);
        support.extend(
            dual_string(lat, &spec)?
                .z_sites()
                .unwrap_or(&[])
                .iter()
                .copied(),
        );
        // the dual string may touch the hole rim but not the outer edge
        if support
            .iter()
            .flat_map(|&s| lat.site_vertices[s])
            .any(|v| !lat.vertices[v].is_full() && !hole.vertices.contains(&v))
        {
            continue;
        }
        out.push(spec);
    }
    Ok(out)
}

/// Open Z string along a ray from the hole centre at `angle_deg` to beyond
/// the outer boundary.
pub fn hole_to_boundary_string(
    lat: &RubyLattice,
    angle_deg: f64,
    label: &str,
) -> Result<StringSpec> {
    if lat.boundary != Boundary::Open {
        return Err(Error::Lattice(
            "hole-to-boundary strings need an open lattice".into(),
        ));
    }
    let hole = lat
        .hole
        .as_ref()
        .ok_or_else(|| Error::Lattice("lattice has no hole".into()))?;
    let extent = lat
        .vertices
        .iter()
        .map(|v| v.pos.dist(&hole.center))
        .fold(0.0, f64::max)
        + 4.0;
    let th = angle_deg.to_radians();
    let far = SitePos {
        x: hole.center.x + extent * th.cos(),
        y: hole.center.y + extent * th.sin(),
    };
    z_cut(lat, hole.center, far, label)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BffmPairing {
    pub name: String,
    pub closed: String,
}

#[derive(Deserialize)]
struct BffmFixture {
    pair: Vec<BffmPairing>,
}

pub fn bffm_catalogue() -> &'static [BffmPairing] {
    static CATALOGUE: OnceLock<Vec<BffmPairing>> = OnceLock::new();
    CATALOGUE.get_or_init(|| {
        let f: BffmFixture = toml::from_str(include_str!("../../fixtures/bffm_pairs.toml"))
            .expect("built-in BFFM fixture must parse");
        f.pair
    })
}

/// Open string and its closure, for every placement of the closed template.
#[derive(Clone, Debug, PartialEq)]
pub struct BffmPair {
    pub open: StringSpec,
    pub closed: StringSpec,
}

pub fn bffm_pairs(lat: &RubyLattice, name: &str) -> Result<Vec<BffmPair>> {
    let p = bffm_catalogue()
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownTemplate(name.to_string()))?;
    enumerate_loops_by_name(lat, &p.closed)?
        .into_iter()
        .map(|closed| {
            let open = open_half(lat, &closed)?;
            Ok(BffmPair { open, closed })
        })
        .collect()
}

/// Half of a closed loop cut by its longest mirror axis.
pub fn open_half(lat: &RubyLattice, closed: &StringSpec) -> Result<StringSpec> {
    if lat.boundary != Boundary::Open {
        return Err(Error::Lattice("mirror halves need an open lattice".into()));
    }
    if !closed.closed {
        return Err(Error::String(format!("`{}` is not closed", closed.label)));
    }
    let pos: Vec<SitePos> = match &closed.body {
        StringBody::Z { sites } => sites.iter().map(|&s| lat.sites[s]).collect(),
        StringBody::X { steps } => steps
            .iter()
            .map(|st| lat.sites[lat.triangles[st.triangle].sites[st.edge as usize]])
            .collect(),
    };
    let n = pos.len() as f64;
    let c = pos.iter().fold(SitePos { x: 0.0, y: 0.0 }, |a, p| SitePos {
        x: a.x + p.x / n,
        y: a.y + p.y / n,
    });
    let mut best: Option<(f64, Vec<usize>)> = None;
    for k in 0..6 {
        let th = (k as f64 * 30.0).to_radians();
        let (ux, uy) = (th.cos(), th.sin());
        let side: Vec<f64> = pos.iter().map(|p| ux * (p.y - c.y) - uy * (p.x - c.x)).collect();
        if side.iter().any(|d| d.abs() < 1e-6) {
            continue;
        }
        let symmetric = pos.iter().zip(&side).all(|(p, &d)| {
            let m = SitePos {
                x: p.x + 2.0 * d * uy,
                y: p.y - 2.0 * d * ux,
            };
            pos.iter().any(|q| q.dist(&m) < 1e-6)
        });
        if !symmetric {
            continue;
        }
        let half: Vec<usize> = (0..pos.len()).filter(|&i| side[i] > 0.0).collect();
        let proj: Vec<f64> = half.iter().map(|&i| ux * pos[i].x + uy * pos[i].y).collect();
        let extent = proj.iter().cloned().fold(f64::MIN, f64::max) - proj.iter().cloned().fold(f64::MAX, f64::min);
        if best.as_ref().is_none_or(|b| extent > b.0 + 1e-9) {
            best = Some((extent, half));
        }
    }
    let (_, half) = best.ok_or_else(|| Error::String(format!("`{}` has no usable mirror axis", closed.label)))?;
    let label = format!("half({})", closed.label);
    Ok(match &closed.body {
        StringBody::Z { sites } => StringSpec::z(half.iter().map(|&i| sites[i]).collect(), false, label),
        StringBody::X { steps } => StringSpec::x(half.iter().map(|&i| steps[i]).collect(), false, label),
    })
}
