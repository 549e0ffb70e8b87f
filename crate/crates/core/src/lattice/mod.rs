//! Ruby-lattice geometry: atoms sit on the links (bond midpoints) of a kagome
//! lattice.
//!
//! Lengths are measured in units of the intra-triangle atom spacing `a`. The
//! kagome vertex spacing is therefore `2a`, the Bravais vectors are
//! `A1 = (4, 0)` and `A2 = (2, 2√3)`, and a unit cell holds three kagome
//! vertices, two triangles (up and down) and six atoms. The first three atom
//! distances are `a`, `√3 a` and `2a` (the links sharing a kagome vertex), the
//! fourth is `√7 a`.
//!
//! Internally every position is an exact integer [`GridPos`] with
//! `x = u / 2` and `y = w·√3 / 6`, so torus wrapping and position lookups
//! never depend on floating-point rounding.

mod build;
mod io;
mod strings;
mod templates;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use io::{LatticeDocument, LATTICE_SCHEMA_VERSION};
pub(crate) use strings::segments_cross;
pub use strings::{
    dual_string, x_endpoints, x_path, z_cut, z_is_closed, z_region_sites, StringBody, StringKind,
    StringSpec, XStep,
};
pub use templates::{
    bffm_catalogue, bffm_pairs, enumerate_loops, enumerate_loops_by_name, hexagon_groups,
    hole_encircling_loops, hole_to_boundary_string, open_half, template_catalogue, BffmPair,
    BffmPairing, LoopTemplate, TemplateShape,
};

use crate::error::{Error, Result};

pub(crate) const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Relative slack applied to every distance cutoff so that neighbours sitting
/// exactly at the cutoff are included.
pub const DISTANCE_TOLERANCE: f64 = 1e-9;

/// Number of links meeting at a kagome vertex away from any boundary.
pub const FULL_COORDINATION: usize = 4;

/// Default number of boundary layers excluded from bulk statistics.
pub const DEFAULT_BULK_DEPTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SitePos {
    pub x: f64,
    pub y: f64,
}

impl SitePos {
    pub fn dist(&self, other: &SitePos) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Exact position on the half-spacing grid: `x = u/2`, `y = w·√3/6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub u: i64,
    pub w: i64,
}

impl GridPos {
    pub const fn new(u: i64, w: i64) -> Self {
        Self { u, w }
    }

    pub fn to_pos(self) -> SitePos {
        SitePos {
            x: self.u as f64 / 2.0,
            y: self.w as f64 * SQRT3 / 6.0,
        }
    }

    pub(crate) fn add(self, o: GridPos) -> GridPos {
        GridPos::new(self.u + o.u, self.w + o.w)
    }

    pub(crate) fn midpoint(self, o: GridPos) -> GridPos {
        debug_assert!((self.u + o.u) % 2 == 0 && (self.w + o.w) % 2 == 0);
        GridPos::new((self.u + o.u) / 2, (self.w + o.w) / 2)
    }
}

/// Bravais vectors on the grid.
pub(crate) const GRID_A1: GridPos = GridPos::new(8, 0);
pub(crate) const GRID_A2: GridPos = GridPos::new(4, 12);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Up,
    Down,
}

/// Identifies a triangle by the unit cell `(col, row)` it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriangleKey {
    pub col: i64,
    pub row: i64,
    pub orientation: Orientation,
}

impl TriangleKey {
    pub fn new(col: i64, row: i64, orientation: Orientation) -> Self {
        Self {
            col,
            row,
            orientation,
        }
    }

    /// Corner positions. Link `k` of the triangle is the one opposite corner `k`.
    pub(crate) fn corners(&self) -> [GridPos; 3] {
        let origin = GridPos::new(
            self.col * GRID_A1.u + self.row * GRID_A2.u,
            self.col * GRID_A1.w + self.row * GRID_A2.w,
        );
        let rel = match self.orientation {
            Orientation::Up => [GridPos::new(0, 0), GridPos::new(4, 0), GridPos::new(2, 6)],
            Orientation::Down => [GridPos::new(2, 6), GridPos::new(4, 12), GridPos::new(0, 12)],
        };
        rel.map(|r| origin.add(r))
    }

    pub(crate) fn link_midpoints(&self) -> [GridPos; 3] {
        let c = self.corners();
        [0, 1, 2].map(|k| c[(k + 1) % 3].midpoint(c[(k + 2) % 3]))
    }

    pub(crate) fn centroid(&self) -> SitePos {
        let c = self.corners().map(|g| g.to_pos());
        SitePos {
            x: (c[0].x + c[1].x + c[2].x) / 3.0,
            y: (c[0].y + c[1].y + c[2].y) / 3.0,
        }
    }
}

/// Three atoms forming one kagome triangle. `sites[k]` is the link opposite
/// `vertices[k]`; for an up triangle, edge 2 is the lower (horizontal) edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub key: TriangleKey,
    pub sites: [usize; 3],
    pub vertices: [usize; 3],
}

impl Triangle {
    pub fn edge_of(&self, site: usize) -> Option<u8> {
        self.sites.iter().position(|&s| s == site).map(|e| e as u8)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub pos: SitePos,
    /// Adjacent link-sites (atoms) that are present in the lattice.
    pub sites: Vec<usize>,
    /// Graph distance to the nearest under-coordinated vertex; `None` when the
    /// lattice has no boundary at all.
    pub layer: Option<usize>,
}

impl Vertex {
    pub fn is_full(&self) -> bool {
        self.sites.len() == FULL_COORDINATION
    }
}

/// Hexagonal plaquette. `sites[k]` joins `vertices[k]` and `vertices[k+1]`;
/// it is `None` when that link was removed by a hole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hexagon {
    pub cell: (i64, i64),
    pub center: SitePos,
    pub vertices: [usize; 6],
    pub sites: [Option<usize>; 6],
}

impl Hexagon {
    pub fn is_complete(&self) -> bool {
        self.sites.iter().all(Option::is_some)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoleSpec {
    /// The triangle whose centroid is closest to the centre of the array.
    Central,
    Triangle {
        col: i64,
        row: i64,
        orientation: Orientation,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub key: TriangleKey,
    pub center: SitePos,
    /// Corners of the removed triangle (still present as vertices).
    pub vertices: [usize; 3],
    pub removed_positions: Vec<SitePos>,
    /// Sites touching a corner of the removed triangle.
    pub inner_boundary_sites: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockadeGraph {
    n_sites: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl BlockadeGraph {
    /// Builds a graph from an arbitrary edge list. Duplicates and ordering are
    /// normalised; self-edges are rejected.
    pub fn from_edges(
        n_sites: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut norm = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidArgument(format!("self-edge on site {i}")));
            }
            if i >= n_sites || j >= n_sites {
                return Err(Error::OutOfRange {
                    index: i.max(j),
                    dim: n_sites,
                });
            }
            norm.push((i.min(j), i.max(j)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut adjacency = vec![Vec::new(); n_sites];
        for &(i, j) in &norm {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        Ok(Self {
            n_sites,
            edges: norm,
            adjacency,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// True when every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &BlockadeGraph) -> bool {
        self.n_sites == other.n_sites && self.edges.iter().all(|&(i, j)| other.has_edge(i, j))
    }
}

/// One van-der-Waals pair inside the truncation radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    /// `(R_b / d)^6`, i.e. the interaction in units of the Rabi frequency.
    pub strength: f64,
    /// Both atoms sit in the same triangle; treated as a hard constraint.
    pub hard: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RubyLattice {
    pub(crate) boundary: Boundary,
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) bulk_depth: usize,
    /// Triangle keys the lattice was built from, hole included.
    pub(crate) triangle_keys: Vec<TriangleKey>,
    pub(crate) hole_spec: Option<HoleSpec>,
    pub(crate) sites: Vec<SitePos>,
    pub(crate) site_grid: Vec<GridPos>,
    pub(crate) site_triangle: Vec<(usize, u8)>,
    pub(crate) site_vertices: Vec<[usize; 2]>,
    pub(crate) site_hexagon: Vec<Option<usize>>,
    pub(crate) triangles: Vec<Triangle>,
    pub(crate) vertices: Vec<Vertex>,
    pub(crate) vertex_grid: Vec<GridPos>,
    pub(crate) hexagons: Vec<Hexagon>,
    pub(crate) hole: Option<Hole>,
    #[serde(skip)]
    pub(crate) hex_lookup: HashMap<(i64, i64), usize>,
}

impl RubyLattice {
    /// Builds a `rows × cols` lattice of unit cells (six atoms each). Open
    /// lattices are parallelogram patches; torus lattices wrap both Bravais
    /// directions.
    pub fn build(
        rows: usize,
        cols: usize,
        boundary: Boundary,
        hole: Option<HoleSpec>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Lattice("rows and cols must be at least 1".into()));
        }
        let mut keys = Vec::with_capacity(2 * rows * cols);
        for row in 0..rows as i64 {
            for col in 0..cols as i64 {
                keys.push(TriangleKey::new(col, row, Orientation::Up));
                keys.push(TriangleKey::new(col, row, Orientation::Down));
            }
        }
        build::assemble(keys, boundary, rows, cols, hole, DEFAULT_BULK_DEPTH)
    }

    /// Open lattice from an explicit set of triangles, used for array outlines
    /// that are not parallelograms.
    pub fn open_from_triangles(keys: &[TriangleKey], hole: Option<HoleSpec>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::Lattice("empty triangle set".into()));
        }
        let mut keys = keys.to_vec();
        keys.sort();
        keys.dedup();
        build::assemble(keys, Boundary::Open, 0, 0, hole, DEFAULT_BULK_DEPTH)
    }

    /// Open patch made of the triangles of every hexagon whose centre lies
    /// within `radius` of a removed central triangle. Used for topological
    /// sectors, since these patches admit coverings with every vertex, rim
    /// included, touching exactly one dimer.
    pub fn holed_disc(radius: f64) -> Result<Self> {
        let n = (radius / 2.0).ceil() as usize + 3;
        let host = Self::build(2 * n, 2 * n, Boundary::Open, Some(HoleSpec::Central))?;
        let hole = host.hole.as_ref().expect("host has a hole");
        let mut keys = vec![hole.key];
        for hx in &host.hexagons {
            if hx.center.dist(&hole.center) <= radius {
                keys.extend(hx.sites.iter().flatten().map(|&s| host.triangles[host.site_triangle[s].0].key));
            }
        }
        let spec = HoleSpec::Triangle {
            col: hole.key.col,
            row: hole.key.row,
            orientation: hole.key.orientation,
        };
        Self::open_from_triangles(&keys, Some(spec))
    }

    pub fn with_bulk_depth(mut self, depth: usize) -> Self {
        self.bulk_depth = depth;
        self
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bulk_depth(&self) -> usize {
        self.bulk_depth
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SitePos] {
        &self.sites
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn hexagons(&self) -> &[Hexagon] {
        &self.hexagons
    }

    pub fn hole(&self) -> Option<&Hole> {
        self.hole.as_ref()
    }

    pub fn triangle_keys(&self) -> &[TriangleKey] {
        &self.triangle_keys
    }

    /// `(triangle index, edge index)` of a site.
    pub fn site_triangle(&self, site: usize) -> (usize, u8) {
        self.site_triangle[site]
    }

    /// The two kagome vertices joined by the link a site sits on.
    pub fn site_vertices(&self, site: usize) -> [usize; 2] {
        self.site_vertices[site]
    }

    pub fn site_hexagon(&self, site: usize) -> Option<usize> {
        self.site_hexagon[site]
    }

    pub fn hexagon_at(&self, cell: (i64, i64)) -> Option<usize> {
        self.hex_lookup.get(&self.canonical_cell(cell)).copied()
    }

    pub(crate) fn canonical_cell(&self, (p, q): (i64, i64)) -> (i64, i64) {
        match self.boundary {
            Boundary::Open => (p, q),
            Boundary::Torus => (
                p.rem_euclid(self.cols as i64),
                q.rem_euclid(self.rows as i64),
            ),
        }
    }

    /// Site layer: the smaller layer of its two endpoints.
    pub fn site_layer(&self, site: usize) -> Option<usize> {
        let [a, b] = self.site_vertices[site];
        match (self.vertices[a].layer, self.vertices[b].layer) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }

    pub fn is_bulk_site(&self, site: usize) -> bool {
        self.site_layer(site).is_none_or(|l| l >= self.bulk_depth)
    }

    pub fn is_bulk_vertex(&self, vertex: usize) -> bool {
        self.vertices[vertex]
            .layer
            .is_none_or(|l| l >= self.bulk_depth)
    }

    /// Distance between two sites, using the minimum image on a torus.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (gi, gj) = (self.site_grid[i], self.site_grid[j]);
        let dx = (gi.u - gj.u) as f64 / 2.0;
        let dy = (gi.w - gj.w) as f64 * SQRT3 / 6.0;
        match self.boundary {
            Boundary::Open => (dx * dx + dy * dy).sqrt(),
            Boundary::Torus => {
                let l1 = (4.0 * self.cols as f64, 0.0);
                let l2 = (2.0 * self.rows as f64, 2.0 * SQRT3 * self.rows as f64);
                let mut best = f64::INFINITY;
                for a in -2..=2 {
                    for b in -2..=2 {
                        let x = dx + a as f64 * l1.0 + b as f64 * l2.0;
                        let y = dy + a as f64 * l1.1 + b as f64 * l2.1;
                        best = best.min(x * x + y * y);
                    }
                }
                best.sqrt()
            }
        }
    }

    pub fn same_triangle(&self, i: usize, j: usize) -> bool {
        self.site_triangle[i].0 == self.site_triangle[j].0
    }

    /// Blockade graph: an edge joins every pair closer than `rb_over_a`.
    pub fn blockade_graph(&self, rb_over_a: f64) -> Result<BlockadeGraph> {
        if !(rb_over_a > 0.0 && rb_over_a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "blockade radius must be positive, got {rb_over_a}"
            )));
        }
        let cutoff = rb_over_a * (1.0 + DISTANCE_TOLERANCE);
        let n = self.n_sites();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.distance(i, j) <= cutoff {
                    edges.push((i, j));
                }
            }
        }
        BlockadeGraph::from_edges(n, edges)
    }

    /// Pairs within `r_trunc_over_a`, with strengths `(R_b/d)^6` in units of Ω.
    pub fn interaction_list(
        &self,
        rb_over_a: f64,
        r_trunc_over_a: f64,
    ) -> Result<Vec<Interaction>> {
        if !(r_trunc_over_a >= 0.0) || !(rb_over_a > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need rb > 0 and r_trunc >= 0, got rb = {rb_over_a}, r_trunc = {r_trunc_over_a}"
            )));
        }
        let cutoff = r_trunc_over_a * (1.0 + DISTANCE_TOLERANCE);
        let n = self.n_sites();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(i, j);
                if d <= cutoff {
                    out.push(Interaction {
                        i,
                        j,
                        distance: d,
                        strength: (rb_over_a / d).powi(6),
                        hard: self.same_triangle(i, j),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Removes the optional-field lookups after deserialisation.
    pub(crate) fn rebuild_lookups(&mut self) {
        self.hex_lookup = self
            .hexagons
            .iter()
            .enumerate()
            .map(|(k, h)| (h.cell, k))
            .collect();
    }

    pub(crate) fn vertex_pos(&self, v: usize) -> SitePos {
        self.vertices[v].pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_3x2_has_36_sites() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        assert_eq!(lat.n_sites(), 36);
        assert_eq!(lat.triangles().len(), 12);
        assert_eq!(lat.vertices().len(), 18);
        assert_eq!(lat.hexagons().len(), 6);
    }

    #[test]
    fn torus_1x1_has_6_sites_and_2_triangles() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        assert_eq!(lat.n_sites(), 6);
        assert_eq!(lat.triangles().len(), 2);
    }

    #[test]
    fn open_4x4_with_central_hole() {
        let lat = RubyLattice::build(4, 4, Boundary::Open, Some(HoleSpec::Central)).unwrap();
        assert_eq!(lat.n_sites(), 6 * 16 - 3);
        let hole = lat.hole().unwrap();
        assert_eq!(hole.removed_positions.len(), 3);
        for &v in &hole.vertices {
            assert_eq!(lat.vertices()[v].sites.len(), 2);
        }
        assert!(!hole.inner_boundary_sites.is_empty());
    }

    #[test]
    fn rejects_bad_holes() {
        let missing = HoleSpec::Triangle {
            col: 10,
            row: 10,
            orientation: Orientation::Up,
        };
        assert!(RubyLattice::build(2, 2, Boundary::Open, Some(missing)).is_err());
        assert!(RubyLattice::build(1, 3, Boundary::Torus, Some(HoleSpec::Central)).is_err());
        assert!(RubyLattice::build(2, 2, Boundary::Torus, Some(HoleSpec::Central)).is_ok());
        assert!(RubyLattice::build(0, 2, Boundary::Open, None).is_err());
    }

    #[test]
    fn every_site_in_one_triangle_and_two_vertex_lists() {
        for lat in [
            RubyLattice::build(3, 2, Boundary::Torus, None).unwrap(),
            RubyLattice::build(3, 3, Boundary::Open, Some(HoleSpec::Central)).unwrap(),
        ] {
            let mut tri_count = vec![0; lat.n_sites()];
            for t in lat.triangles() {
                for &s in &t.sites {
                    tri_count[s] += 1;
                }
            }
            assert!(tri_count.iter().all(|&c| c == 1));
            let mut vcount = vec![0; lat.n_sites()];
            for v in lat.vertices() {
                for &s in &v.sites {
                    vcount[s] += 1;
                }
            }
            assert!(vcount.iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn torus_vertices_are_fully_coordinated() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        assert!(lat
            .vertices()
            .iter()
            .all(|v| v.is_full() && v.layer.is_none()));
    }

    #[test]
    fn neighbour_shells_match_ruby_geometry() {
        let lat = RubyLattice::build(6, 6, Boundary::Open, None).unwrap();
        let bulk = (0..lat.n_sites())
            .find(|&s| lat.site_layer(s).is_some_and(|l| l >= 3))
            .unwrap();
        let mut d: Vec<f64> = (0..lat.n_sites())
            .filter(|&j| j != bulk)
            .map(|j| lat.distance(bulk, j))
            .collect();
        d.sort_by(f64::total_cmp);
        let close = |x: f64, y: f64| (x - y).abs() < 1e-9;
        assert!(close(d[0], 1.0) && close(d[1], 1.0));
        assert!(close(d[2], SQRT3) && close(d[3], SQRT3));
        assert!(close(d[4], 2.0) && close(d[5], 2.0));
        assert!(close(d[6], 7f64.sqrt()));
    }

    #[test]
    fn blockade_degree_six_in_bulk() {
        let lat = RubyLattice::build(6, 6, Boundary::Open, None).unwrap();
        let g = lat.blockade_graph(2.4).unwrap();
        for s in 0..lat.n_sites() {
            if lat.site_layer(s).is_some_and(|l| l >= 2) {
                assert_eq!(g.degree(s), 6);
            }
        }
    }

    #[test]
    fn tiny_radius_gives_no_edges() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        assert!(lat.blockade_graph(0.1).unwrap().edges().is_empty());
        assert!(lat.blockade_graph(0.0).is_err());
    }

    #[test]
    fn quench_radius_only_blockades_within_triangles() {
        for lat in [
            RubyLattice::build(3, 2, Boundary::Torus, None).unwrap(),
            RubyLattice::build(2, 2, Boundary::Torus, None).unwrap(),
            RubyLattice::build(4, 4, Boundary::Open, Some(HoleSpec::Central)).unwrap(),
        ] {
            let g = lat.blockade_graph(1.53).unwrap();
            // exhaustive scan of all pairs
            for i in 0..lat.n_sites() {
                for j in i + 1..lat.n_sites() {
                    assert_eq!(g.has_edge(i, j), lat.same_triangle(i, j));
                }
            }
        }
    }

    #[test]
    fn nearest_neighbour_vdw_is_191() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        let list = lat.interaction_list(2.4, 7f64.sqrt()).unwrap();
        let nn = list
            .iter()
            .find(|p| (p.distance - 1.0).abs() < 1e-12)
            .unwrap();
        assert!((nn.strength - 2.4f64.powi(6)).abs() < 1e-9);
        assert!((nn.strength - 191.0).abs() < 0.2);
        assert!(nn.hard);
        let mut partners = vec![0; lat.n_sites()];
        for p in &list {
            partners[p.i] += 1;
            partners[p.j] += 1;
            assert!(p.distance <= 7f64.sqrt() + 1e-9);
        }
        assert!(partners.iter().all(|&c| c == 10));
    }

    #[test]
    fn truncation_drops_far_pairs() {
        let lat = RubyLattice::build(2, 2, Boundary::Open, None).unwrap();
        let list = lat.interaction_list(2.4, 1.5).unwrap();
        assert!(list.iter().all(|p| p.distance <= 1.5 && p.hard));
    }
}
