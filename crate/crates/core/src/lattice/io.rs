use serde::{Deserialize, Serialize};

use super::{
    build, Boundary, Hexagon, Hole, HoleSpec, RubyLattice, SitePos, Triangle, TriangleKey, Vertex,
};
use crate::error::{Error, Result};

pub const LATTICE_SCHEMA_VERSION: u32 = 1;

/// Serialised lattice. The geometry tables are informational: on import the
/// lattice is rebuilt from `triangle_keys`, `boundary` and `hole` and the
/// tables are checked against the rebuilt ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDocument {
    pub schema_version: u32,
    pub boundary: Boundary,
    pub rows: usize,
    pub cols: usize,
    pub bulk_depth: usize,
    pub hole_spec: Option<HoleSpec>,
    pub triangle_keys: Vec<TriangleKey>,
    pub sites: Vec<SitePos>,
    pub triangles: Vec<Triangle>,
    pub vertices: Vec<Vertex>,
    pub hexagons: Vec<Hexagon>,
    pub hole: Option<Hole>,
}

impl RubyLattice {
    pub fn to_document(&self) -> LatticeDocument {
        LatticeDocument {
            schema_version: LATTICE_SCHEMA_VERSION,
            boundary: self.boundary,
            rows: self.rows,
            cols: self.cols,
            bulk_depth: self.bulk_depth,
            hole_spec: self.hole_spec,
            triangle_keys: self.triangle_keys.clone(),
            sites: self.sites.clone(),
            triangles: self.triangles.clone(),
            vertices: self.vertices.clone(),
            hexagons: self.hexagons.clone(),
            hole: self.hole.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("lattice serialises")
    }

    pub fn from_document(doc: &LatticeDocument) -> Result<Self> {
        if doc.schema_version != LATTICE_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported lattice schema version {} (expected {LATTICE_SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        let lat = build::assemble(
            doc.triangle_keys.clone(),
            doc.boundary,
            doc.rows,
            doc.cols,
            doc.hole_spec,
            doc.bulk_depth,
        )?;
        if lat.sites.len() != doc.sites.len() {
            return Err(Error::Parse(format!(
                "document lists {} sites, geometry has {}",
                doc.sites.len(),
                lat.sites.len()
            )));
        }
        if let Some(k) = (0..lat.sites.len()).find(|&k| lat.sites[k].dist(&doc.sites[k]) > 1e-6) {
            return Err(Error::Parse(format!(
                "site {k} position does not match its triangle"
            )));
        }
        if lat.triangles != doc.triangles || lat.hexagons.len() != doc.hexagons.len() {
            return Err(Error::Parse(
                "triangle or hexagon tables do not match the geometry".into(),
            ));
        }
        Ok(lat)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LatticeDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_document(&doc)
    }
}
