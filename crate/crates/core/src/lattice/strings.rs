//! String operators as data: a Z string is a set of sites whose occupation
//! parity is measured, an X string is a sequence of per-triangle steps along
//! kagome bonds.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Boundary, RubyLattice, SitePos};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StringKind {
    Z,
    X,
}

/// X acting on edge `edge` of triangle `triangle`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct XStep {
    pub triangle: usize,
    pub edge: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StringBody {
    Z { sites: Vec<usize> },
    X { steps: Vec<XStep> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringSpec {
    pub body: StringBody,
    pub closed: bool,
    pub label: String,
    /// Enclosed vertices (Z loops) or enclosed hexagons (X loops), when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<usize>,
}

impl StringSpec {
    pub fn z(sites: Vec<usize>, closed: bool, label: impl Into<String>) -> Self {
        Self {
            body: StringBody::Z { sites },
            closed,
            label: label.into(),
            area: None,
        }
    }

    pub fn x(steps: Vec<XStep>, closed: bool, label: impl Into<String>) -> Self {
        Self {
            body: StringBody::X { steps },
            closed,
            label: label.into(),
            area: None,
        }
    }

    pub fn with_area(mut self, area: usize) -> Self {
        self.area = Some(area);
        self
    }

    pub fn kind(&self) -> StringKind {
        match self.body {
            StringBody::Z { .. } => StringKind::Z,
            StringBody::X { .. } => StringKind::X,
        }
    }

    pub fn z_sites(&self) -> Option<&[usize]> {
        match &self.body {
            StringBody::Z { sites } => Some(sites),
            StringBody::X { .. } => None,
        }
    }

    pub fn x_steps(&self) -> Option<&[XStep]> {
        match &self.body {
            StringBody::X { steps } => Some(steps),
            StringBody::Z { .. } => None,
        }
    }

    /// Number of atoms on a Z string or steps of an X string.
    pub fn perimeter(&self) -> usize {
        match &self.body {
            StringBody::Z { sites } => sites.len(),
            StringBody::X { steps } => steps.len(),
        }
    }

    /// Sites the operator acts on directly.
    pub fn support(&self, lat: &RubyLattice) -> Vec<usize> {
        let mut s: Vec<usize> = match &self.body {
            StringBody::Z { sites } => sites.clone(),
            StringBody::X { steps } => steps
                .iter()
                .map(|st| lat.triangles[st.triangle].sites[st.edge as usize])
                .collect(),
        };
        s.sort_unstable();
        s
    }

    /// Checks indices, distinctness, and that the `closed` flag matches the
    /// geometry.
    pub fn validate(&self, lat: &RubyLattice) -> Result<()> {
        match &self.body {
            StringBody::Z { sites } => {
                let mut seen = HashSet::new();
                for &s in sites {
                    if s >= lat.n_sites() {
                        return Err(Error::OutOfRange {
                            index: s,
                            dim: lat.n_sites(),
                        });
                    }
                    if !seen.insert(s) {
                        return Err(Error::String(format!(
                            "site {s} repeated in `{}`",
                            self.label
                        )));
                    }
                }
                if z_is_closed(lat, sites) != self.closed {
                    return Err(Error::String(format!(
                        "`{}` flagged closed={} but geometry says otherwise",
                        self.label, self.closed
                    )));
                }
            }
            StringBody::X { steps } => {
                let mut seen = HashSet::new();
                for st in steps {
                    if st.triangle >= lat.triangles.len() || st.edge > 2 {
                        return Err(Error::String(format!(
                            "bad step {st:?} in `{}`",
                            self.label
                        )));
                    }
                    if !seen.insert(st.triangle) {
                        return Err(Error::String(format!(
                            "triangle {} visited twice in `{}`",
                            st.triangle, self.label
                        )));
                    }
                }
                if x_endpoints(lat, steps).is_empty() != self.closed {
                    return Err(Error::String(format!(
                        "`{}` flagged closed={} but geometry says otherwise",
                        self.label, self.closed
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Z string obtained from an X string by taking, in every visited triangle,
/// the two edges not acted on.
pub fn dual_string(lat: &RubyLattice, s: &StringSpec) -> Result<StringSpec> {
    let StringBody::X { steps } = &s.body else {
        return Err(Error::String(format!(
            "`{}` is already a Z string",
            s.label
        )));
    };
    let mut sites = Vec::with_capacity(2 * steps.len());
    for st in steps {
        let tri = lat
            .triangles
            .get(st.triangle)
            .ok_or_else(|| Error::String(format!("bad step {st:?}")))?;
        for e in 0..3u8 {
            if e != st.edge {
                sites.push(tri.sites[e as usize]);
            }
        }
    }
    Ok(StringSpec::z(sites, s.closed, format!("dual({})", s.label)))
}

/// Vertices touched an odd number of times by the links of an X string.
pub fn x_endpoints(lat: &RubyLattice, steps: &[super::XStep]) -> Vec<usize> {
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for st in steps {
        let site = lat.triangles[st.triangle].sites[st.edge as usize];
        for v in lat.site_vertices[site] {
            *degree.entry(v).or_default() += 1;
        }
    }
    degree
        .into_iter()
        .filter(|&(_, d)| d % 2 == 1)
        .map(|(v, _)| v)
        .collect()
}

/// A Z string is closed when it crosses every triangle and every hexagon an
/// even number of times.
pub fn z_is_closed(lat: &RubyLattice, sites: &[usize]) -> bool {
    let mut tri = vec![0u8; lat.triangles.len()];
    let mut hex = vec![0u8; lat.hexagons.len()];
    for &s in sites {
        tri[lat.site_triangle[s].0] ^= 1;
        if let Some(h) = lat.site_hexagon[s] {
            hex[h] ^= 1;
        }
    }
    tri.iter().chain(hex.iter()).all(|&p| p == 0)
}

/// Z region loop: sites with exactly one endpoint in `region` (a vertex set).
pub fn z_region_sites(lat: &RubyLattice, region: &HashSet<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = (0..lat.n_sites())
        .filter(|&s| {
            let [a, b] = lat.site_vertices[s];
            region.contains(&a) != region.contains(&b)
        })
        .collect();
    out.sort_unstable();
    out
}

/// X string along a path of kagome vertices.
pub fn x_path(lat: &RubyLattice, path: &[usize], label: impl Into<String>) -> Result<StringSpec> {
    let label = label.into();
    if path.len() < 2 {
        return Ok(StringSpec::x(Vec::new(), true, label));
    }
    let mut steps = Vec::new();
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let site = lat.vertices[a]
            .sites
            .iter()
            .copied()
            .find(|&s| lat.site_vertices[s].contains(&b))
            .ok_or_else(|| Error::String(format!("vertices {a} and {b} are not linked")))?;
        let (triangle, edge) = lat.site_triangle[site];
        steps.push(super::XStep { triangle, edge });
    }
    let closed = x_endpoints(lat, &steps).is_empty();
    let spec = StringSpec::x(steps, closed, label);
    spec.validate(lat)?;
    Ok(spec)
}

/// Z string made of every site whose link is crossed by the straight segment
/// `from → to`. Only meaningful on open lattices, where positions do not wrap.
pub fn z_cut(
    lat: &RubyLattice,
    from: SitePos,
    to: SitePos,
    label: impl Into<String>,
) -> Result<StringSpec> {
    if lat.boundary == Boundary::Torus {
        return Err(Error::String(
            "straight cuts are only defined on open lattices".into(),
        ));
    }
    let label = label.into();
    for v in &lat.vertices {
        if point_segment_distance(v.pos, from, to) < 1e-6 {
            return Err(Error::String(format!(
                "cut `{label}` passes through a kagome vertex at ({:.3}, {:.3})",
                v.pos.x, v.pos.y
            )));
        }
    }
    let sites: Vec<usize> = (0..lat.n_sites())
        .filter(|&s| {
            let [a, b] = lat.site_vertices[s];
            segments_cross(from, to, lat.vertex_pos(a), lat.vertex_pos(b))
        })
        .collect();
    let closed = z_is_closed(lat, &sites);
    Ok(StringSpec::z(sites, closed, label))
}

fn cross(o: SitePos, a: SitePos, b: SitePos) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Proper crossing of segments `p0p1` and `q0q1` (no collinear cases).
pub(crate) fn segments_cross(p0: SitePos, p1: SitePos, q0: SitePos, q1: SitePos) -> bool {
    let d1 = cross(p0, p1, q0);
    let d2 = cross(p0, p1, q1);
    let d3 = cross(q0, q1, p0);
    let d4 = cross(q0, q1, p1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn point_segment_distance(p: SitePos, a: SitePos, b: SitePos) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, Orientation, RubyLattice, XStep};

    #[test]
    fn lower_edge_dual_is_upper_edges() {
        let lat = RubyLattice::build(2, 2, Boundary::Open, None).unwrap();
        let (t, tri) = lat
            .triangles()
            .iter()
            .enumerate()
            .find(|(_, t)| t.key.orientation == Orientation::Up)
            .unwrap();
        let x = StringSpec::x(
            vec![XStep {
                triangle: t,
                edge: 2,
            }],
            false,
            "lower",
        );
        let z = dual_string(&lat, &x).unwrap();
        let mut sites = z.z_sites().unwrap().to_vec();
        sites.sort();
        let mut upper = vec![tri.sites[0], tri.sites[1]];
        upper.sort();
        assert_eq!(sites, upper);
        // both upper links sit higher than the lower one
        let low = lat.sites()[tri.sites[2]].y;
        assert!(upper.iter().all(|&s| lat.sites()[s].y > low));
    }

    #[test]
    fn dual_of_empty_and_of_z() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        let e = StringSpec::x(vec![], true, "e");
        assert!(dual_string(&lat, &e).unwrap().z_sites().unwrap().is_empty());
        assert!(dual_string(&lat, &StringSpec::z(vec![0], false, "z")).is_err());
    }

    #[test]
    fn validate_rejects_repeats() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        assert!(StringSpec::z(vec![1, 1], false, "r")
            .validate(&lat)
            .is_err());
        assert!(StringSpec::z(vec![99], false, "r").validate(&lat).is_err());
        let steps = vec![
            XStep {
                triangle: 0,
                edge: 0,
            },
            XStep {
                triangle: 0,
                edge: 1,
            },
        ];
        assert!(StringSpec::x(steps, false, "r").validate(&lat).is_err());
    }

    #[test]
    fn vertex_region_is_closed() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        let region: HashSet<usize> = [0].into_iter().collect();
        let sites = z_region_sites(&lat, &region);
        assert_eq!(sites.len(), 4);
        assert!(z_is_closed(&lat, &sites));
    }
}
