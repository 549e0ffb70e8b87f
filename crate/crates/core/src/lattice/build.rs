use std::collections::{HashMap, HashSet, VecDeque};

use super::{
    Boundary, GridPos, Hexagon, Hole, HoleSpec, Orientation, RubyLattice, SitePos, Triangle,
    TriangleKey, Vertex, FULL_COORDINATION, GRID_A1, GRID_A2,
};
use crate::error::{Error, Result};

/// Wraps grid positions into the fundamental cell of a torus.
#[derive(Clone, Copy)]
pub(crate) struct Wrap {
    torus: Option<(i64, i64)>,
}

impl Wrap {
    pub(crate) fn new(boundary: Boundary, rows: usize, cols: usize) -> Self {
        Self {
            torus: (boundary == Boundary::Torus).then_some((rows as i64, cols as i64)),
        }
    }

    pub(crate) fn canon(&self, g: GridPos) -> GridPos {
        let Some((rows, cols)) = self.torus else {
            return g;
        };
        let period_w = GRID_A2.w * rows;
        let k = g.w.div_euclid(period_w);
        let u = g.u - k * GRID_A2.u * rows;
        let w = g.w - k * period_w;
        GridPos::new(u.rem_euclid(GRID_A1.u * cols), w)
    }
}

pub(super) fn assemble(
    keys: Vec<TriangleKey>,
    boundary: Boundary,
    rows: usize,
    cols: usize,
    hole_spec: Option<HoleSpec>,
    bulk_depth: usize,
) -> Result<RubyLattice> {
    let wrap = Wrap::new(boundary, rows, cols);

    let hole_key = match hole_spec {
        None => None,
        Some(spec) => {
            if boundary == Boundary::Torus && (rows < 2 || cols < 2) {
                return Err(Error::Lattice(
                    "a hole on a torus smaller than 2x2 cells has ambiguous winding".into(),
                ));
            }
            Some(resolve_hole(&keys, spec)?)
        }
    };

    // Sites, in triangle order, skipping the hole.
    let mut site_index: HashMap<GridPos, usize> = HashMap::new();
    let mut vertex_index: HashMap<GridPos, usize> = HashMap::new();
    let mut vertex_grid = Vec::new();
    let mut site_grid = Vec::new();
    let mut site_triangle = Vec::new();
    let mut site_vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut hole_links = HashSet::new();

    for key in &keys {
        let corners = key.corners();
        let mids = key.link_midpoints();
        if Some(*key) == hole_key {
            for m in mids {
                hole_links.insert(wrap.canon(m));
            }
            continue;
        }
        let mut tv = [0usize; 3];
        for (k, c) in corners.iter().enumerate() {
            let c = wrap.canon(*c);
            let next = vertex_grid.len();
            tv[k] = *vertex_index.entry(c).or_insert_with(|| {
                vertex_grid.push(c);
                next
            });
        }
        let tri_idx = triangles.len();
        let mut ts = [0usize; 3];
        for (k, m) in mids.iter().enumerate() {
            let m = wrap.canon(*m);
            if site_index.contains_key(&m) {
                return Err(Error::Lattice(format!(
                    "duplicate link at {m:?}; torus too small or repeated triangle"
                )));
            }
            let s = site_grid.len();
            site_index.insert(m, s);
            site_grid.push(m);
            site_triangle.push((tri_idx, k as u8));
            site_vertices.push([tv[(k + 1) % 3], tv[(k + 2) % 3]]);
            ts[k] = s;
        }
        triangles.push(Triangle {
            key: *key,
            sites: ts,
            vertices: tv,
        });
    }

    // Hole corners may only exist through neighbouring triangles.
    let hole = match hole_key {
        None => None,
        Some(key) => {
            let mut hv = [0usize; 3];
            for (k, c) in key.corners().iter().enumerate() {
                hv[k] = *vertex_index.get(&wrap.canon(*c)).ok_or_else(|| {
                    Error::Lattice("hole triangle must be surrounded by other triangles".into())
                })?;
            }
            Some((key, hv))
        }
    };

    let mut vertices: Vec<Vertex> = vertex_grid
        .iter()
        .map(|g| Vertex {
            pos: g.to_pos(),
            sites: Vec::new(),
            layer: None,
        })
        .collect();
    for (s, [a, b]) in site_vertices.iter().enumerate() {
        vertices[*a].sites.push(s);
        vertices[*b].sites.push(s);
    }

    let hexagons = build_hexagons(
        &keys,
        boundary,
        rows,
        cols,
        &wrap,
        &site_index,
        &hole_links,
        &vertex_index,
    );
    let mut site_hexagon = vec![None; site_grid.len()];
    for (h, hex) in hexagons.iter().enumerate() {
        for s in hex.sites.iter().flatten() {
            site_hexagon[*s] = Some(h);
        }
    }

    assign_layers(&mut vertices, &site_vertices);

    let hole = hole.map(|(key, hv)| {
        let mut inner: Vec<usize> = hv.iter().flat_map(|&v| vertices[v].sites.clone()).collect();
        inner.sort_unstable();
        inner.dedup();
        Hole {
            key,
            center: key.centroid(),
            vertices: hv,
            removed_positions: key
                .link_midpoints()
                .iter()
                .map(|m| wrap.canon(*m).to_pos())
                .collect(),
            inner_boundary_sites: inner,
        }
    });

    let mut lat = RubyLattice {
        boundary,
        rows,
        cols,
        bulk_depth,
        triangle_keys: keys,
        hole_spec,
        sites: site_grid.iter().map(|g| g.to_pos()).collect(),
        site_grid,
        site_triangle,
        site_vertices,
        site_hexagon,
        triangles,
        vertices,
        vertex_grid,
        hexagons,
        hole,
        hex_lookup: HashMap::new(),
    };
    lat.rebuild_lookups();
    Ok(lat)
}

fn resolve_hole(keys: &[TriangleKey], spec: HoleSpec) -> Result<TriangleKey> {
    match spec {
        HoleSpec::Triangle {
            col,
            row,
            orientation,
        } => {
            let key = TriangleKey::new(col, row, orientation);
            if keys.contains(&key) {
                Ok(key)
            } else {
                Err(Error::Lattice(format!(
                    "hole triangle {key:?} is not in the lattice"
                )))
            }
        }
        HoleSpec::Central => {
            let n = keys.len() as f64;
            let (cx, cy) = keys.iter().fold((0.0, 0.0), |(x, y), k| {
                let c = k.centroid();
                (x + c.x / n, y + c.y / n)
            });
            let center = SitePos { x: cx, y: cy };
            // ties: up triangles first, then key order
            keys.iter()
                .copied()
                .min_by_key(|k| {
                    let d = (k.centroid().dist(&center) * 1e6).round() as i64;
                    (d, k.orientation != Orientation::Up, *k)
                })
                .ok_or_else(|| Error::Lattice("empty lattice".into()))
        }
    }
}

/// Hexagon centre of cell `(p, q)` sits at `(6, 6)` on the grid relative to
/// the cell origin; corners are listed counter-clockwise from angle 0.
const HEX_CORNERS: [GridPos; 6] = [
    GridPos::new(10, 6),
    GridPos::new(8, 12),
    GridPos::new(4, 12),
    GridPos::new(2, 6),
    GridPos::new(4, 0),
    GridPos::new(8, 0),
];

#[allow(clippy::too_many_arguments)]
fn build_hexagons(
    keys: &[TriangleKey],
    boundary: Boundary,
    rows: usize,
    cols: usize,
    wrap: &Wrap,
    site_index: &HashMap<GridPos, usize>,
    hole_links: &HashSet<GridPos>,
    vertex_index: &HashMap<GridPos, usize>,
) -> Vec<Hexagon> {
    let cells: Vec<(i64, i64)> = match boundary {
        Boundary::Torus => (0..rows as i64)
            .flat_map(|q| (0..cols as i64).map(move |p| (p, q)))
            .collect(),
        Boundary::Open => {
            let (pmin, pmax) = keys.iter().fold((i64::MAX, i64::MIN), |(a, b), k| {
                (a.min(k.col), b.max(k.col))
            });
            let (qmin, qmax) = keys.iter().fold((i64::MAX, i64::MIN), |(a, b), k| {
                (a.min(k.row), b.max(k.row))
            });
            (qmin - 1..=qmax + 1)
                .flat_map(|q| (pmin - 1..=pmax + 1).map(move |p| (p, q)))
                .collect()
        }
    };
    let mut out = Vec::new();
    for (p, q) in cells {
        let origin = GridPos::new(p * GRID_A1.u + q * GRID_A2.u, p * GRID_A1.w + q * GRID_A2.w);
        let corners = HEX_CORNERS.map(|c| origin.add(c));
        let mut verts = [0usize; 6];
        let mut sites = [None; 6];
        let mut ok = true;
        for k in 0..6 {
            let mid = wrap.canon(corners[k].midpoint(corners[(k + 1) % 6]));
            match site_index.get(&mid) {
                Some(&s) => sites[k] = Some(s),
                None if hole_links.contains(&mid) => {}
                None => {
                    ok = false;
                    break;
                }
            }
            match vertex_index.get(&wrap.canon(corners[k])) {
                Some(&v) => verts[k] = v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            out.push(Hexagon {
                cell: (p, q),
                center: origin.add(GridPos::new(6, 6)).to_pos(),
                vertices: verts,
                sites,
            });
        }
    }
    out
}

fn assign_layers(vertices: &mut [Vertex], site_vertices: &[[usize; 2]]) {
    let n = vertices.len();
    let mut adj = vec![Vec::new(); n];
    for &[a, b] in site_vertices {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (v, vert) in vertices.iter().enumerate() {
        if vert.sites.len() < FULL_COORDINATION {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    if queue.is_empty() {
        return;
    }
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    for (v, d) in dist.into_iter().enumerate() {
        vertices[v].layer = (d != usize::MAX).then_some(d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_idempotent_and_periodic() {
        let w = Wrap::new(Boundary::Torus, 3, 2);
        for u in -40..40 {
            for ww in -60..60 {
                let g = GridPos::new(u, ww);
                let c = w.canon(g);
                assert_eq!(w.canon(c), c);
                let shifted = GridPos::new(u + 2 * GRID_A1.u + 3 * GRID_A2.u, ww + 3 * GRID_A2.w);
                assert_eq!(w.canon(shifted), c);
            }
        }
    }
}
