//! Classical dimer coverings of the kagome lattice: enumeration, X-loop
//! moves, transition graphs and topological sectors around a hole.

use std::collections::HashMap;
use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisState, CoverageRule};
use crate::lattice::{segments_cross, RubyLattice, SitePos, StringSpec};
use crate::measure::{write_snapshots, Snapshot};

/// Default bound on the number of enumerated coverings.
pub const DEFAULT_COVERING_CAP: usize = 5_000_000;

/// An occupation pattern with at most one dimer per vertex and exactly one
/// on every vertex the coverage rule requires.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DimerCovering(BasisState);

impl DimerCovering {
    pub fn new(lat: &RubyLattice, bits: BasisState, rule: CoverageRule) -> Result<Self> {
        if bits.n_sites() != lat.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: lat.n_sites(),
                got: bits.n_sites(),
            });
        }
        if !rule.accepts(lat, |s| bits.get(s)) {
            return Err(Error::InvalidArgument(format!(
                "{} is not a dimer covering",
                bits.to_bitstring()
            )));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &BasisState {
        &self.0
    }

    pub fn into_bits(self) -> BasisState {
        self.0
    }
}

/// All coverings under `rule`, sorted, by vertex-by-vertex backtracking:
/// the uncovered required vertex with the fewest free links is branched on
/// first; once every required vertex is covered, optional dimers between
/// exempt vertices are added in every admissible combination.
pub fn enumerate_perfect_coverings(lat: &RubyLattice, rule: CoverageRule, cap: usize) -> Result<Vec<DimerCovering>> {
    let mut out = Vec::new();
    let mut overflow = false;
    visit_perfect_coverings(lat, rule, |bits| {
        if out.len() >= cap {
            overflow = true;
            return ControlFlow::Break(());
        }
        out.push(DimerCovering(bits.clone()));
        ControlFlow::Continue(())
    });
    if overflow {
        return Err(Error::Capacity {
            cap,
            estimate: cap as f64 + 1.0,
        });
    }
    out.sort();
    Ok(out)
}

/// Streams every covering under `rule` to `f` in search order without
/// storing them. Returns the number visited; stops early on `Break`.
pub fn visit_perfect_coverings<F>(lat: &RubyLattice, rule: CoverageRule, f: F) -> u64
where
    F: FnMut(&BasisState) -> ControlFlow<()>,
{
    let nv = lat.vertices().len();
    let required: Vec<bool> = lat
        .vertices()
        .iter()
        .map(|v| rule == CoverageRule::Strict || v.is_full())
        .collect();
    let optional_links: Vec<usize> = (0..lat.n_sites())
        .filter(|&s| lat.site_vertices(s).iter().all(|&v| !required[v]))
        .collect();
    let mut st = Search {
        lat,
        required,
        optional_links,
        covered: vec![false; nv],
        bits: BasisState::zeros(lat.n_sites()),
        visit: f,
        count: 0,
    };
    let _ = st.required_phase();
    st.count
}

struct Search<'a, F> {
    lat: &'a RubyLattice,
    required: Vec<bool>,
    optional_links: Vec<usize>,
    covered: Vec<bool>,
    bits: BasisState,
    visit: F,
    count: u64,
}

impl<F: FnMut(&BasisState) -> ControlFlow<()>> Search<'_, F> {
    fn free_links(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.lat.vertices()[v].sites.iter().copied().filter(move |&s| {
            let [a, b] = self.lat.site_vertices(s);
            !self.covered[a] && !self.covered[b]
        })
    }

    fn place(&mut self, s: usize, on: bool) {
        let [a, b] = self.lat.site_vertices(s);
        self.covered[a] = on;
        self.covered[b] = on;
        self.bits.set(s, on);
    }

    fn required_phase(&mut self) -> ControlFlow<()> {
        let mut best: Option<(usize, usize)> = None;
        for v in 0..self.covered.len() {
            if self.required[v] && !self.covered[v] {
                let k = self.free_links(v).count();
                if k == 0 {
                    return ControlFlow::Continue(());
                }
                if best.is_none_or(|b| k < b.1) {
                    best = Some((v, k));
                }
            }
        }
        let Some((v, _)) = best else {
            return self.optional_phase(0);
        };
        let links: Vec<usize> = self.free_links(v).collect();
        for s in links {
            self.place(s, true);
            let flow = self.required_phase();
            self.place(s, false);
            flow?;
        }
        ControlFlow::Continue(())
    }

    fn optional_phase(&mut self, from: usize) -> ControlFlow<()> {
        if from == self.optional_links.len() {
            self.count += 1;
            return (self.visit)(&self.bits);
        }
        self.optional_phase(from + 1)?;
        let s = self.optional_links[from];
        let [a, b] = self.lat.site_vertices(s);
        if !self.covered[a] && !self.covered[b] {
            self.place(s, true);
            let flow = self.optional_phase(from + 1);
            self.place(s, false);
            flow?;
        }
        ControlFlow::Continue(())
    }
}

/// Result of acting with an X loop on a covering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoopMove {
    /// The loop maps the covering to `covering` with coefficient `sign`.
    Mapped { covering: DimerCovering, sign: i8 },
    /// Some visited triangle is not in a state the loop can flip.
    NotApplicable,
}

/// Acts with a closed X loop on a covering: in every visited triangle the
/// acted-on edge toggles between empty and occupied (coefficient −1), or an
/// excitation hops between the other two edges (coefficient +1).
pub fn apply_x_loop(lat: &RubyLattice, d: &DimerCovering, s: &StringSpec, rule: CoverageRule) -> Result<LoopMove> {
    let steps = s
        .x_steps()
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not an X string", s.label)))?;
    if !s.closed {
        return Err(Error::InvalidArgument(format!("`{}` is not a closed loop", s.label)));
    }
    s.validate(lat)?;
    let mut bits = d.0.clone();
    let mut sign = 1i8;
    for st in steps {
        let t = &lat.triangles()[st.triangle];
        let e = st.edge as usize;
        let (a, f, g) = (t.sites[e], t.sites[(e + 1) % 3], t.sites[(e + 2) % 3]);
        match (bits.get(a), bits.get(f), bits.get(g)) {
            (_, false, false) => {
                bits.flip(a);
                sign = -sign;
            }
            (false, true, false) | (false, false, true) => {
                bits.flip(f);
                bits.flip(g);
            }
            _ => return Ok(LoopMove::NotApplicable),
        }
    }
    if !rule.accepts(lat, |i| bits.get(i)) {
        return Ok(LoopMove::NotApplicable);
    }
    Ok(LoopMove::Mapped {
        covering: DimerCovering(bits),
        sign,
    })
}

/// Symmetric difference of two coverings, split into alternating cycles
/// (and, where boundary vertices are exempt, open paths).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionGraph {
    /// Each cycle lists its sites in walking order, starting on a dimer of
    /// the first covering.
    pub cycles: Vec<Vec<usize>>,
    /// Open alternating paths ending on exempt boundary vertices.
    pub paths: Vec<Vec<usize>>,
}

impl TransitionGraph {
    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty() && self.paths.is_empty()
    }
}

pub fn transition_graph(lat: &RubyLattice, d1: &DimerCovering, d2: &DimerCovering) -> Result<TransitionGraph> {
    for d in [d1, d2] {
        if d.0.n_sites() != lat.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: lat.n_sites(),
                got: d.0.n_sites(),
            });
        }
    }
    let diff: Vec<usize> = (0..lat.n_sites()).filter(|&s| d1.0.get(s) != d2.0.get(s)).collect();
    let mut at: HashMap<usize, Vec<usize>> = HashMap::new();
    for &s in &diff {
        for v in lat.site_vertices(s) {
            at.entry(v).or_default().push(s);
        }
    }
    if let Some((v, _)) = at.iter().find(|(_, l)| l.len() > 2) {
        return Err(Error::InvalidArgument(format!(
            "vertex {v} carries more than one dimer of a covering"
        )));
    }
    let mut used: HashMap<usize, bool> = diff.iter().map(|&s| (s, false)).collect();
    let walk = |start: usize, from: usize, used: &mut HashMap<usize, bool>| -> (Vec<usize>, bool) {
        let mut seq = vec![start];
        used.insert(start, true);
        let (mut cur, mut from) = (start, from);
        loop {
            let [a, b] = lat.site_vertices(cur);
            let v = if a == from { b } else { a };
            match at[&v].iter().copied().find(|&s| s != cur) {
                Some(next) if next == start => return (seq, true),
                Some(next) if !used[&next] => {
                    used.insert(next, true);
                    seq.push(next);
                    cur = next;
                    from = v;
                }
                _ => return (seq, false),
            }
        }
    };
    let mut g = TransitionGraph::default();
    // paths first, started from their degree-one ends
    let mut ends: Vec<(usize, usize)> = at
        .iter()
        .filter(|(_, l)| l.len() == 1)
        .map(|(&v, l)| (l[0], v))
        .collect();
    ends.sort_unstable();
    for (s, v) in ends {
        if !used[&s] {
            g.paths.push(walk(s, v, &mut used).0);
        }
    }
    for &s in &diff {
        if !used[&s] {
            let start = if d1.0.get(s) {
                s
            } else {
                // begin on the first covering's dimer
                let v = lat.site_vertices(s)[0];
                at[&v].iter().copied().find(|&x| x != s).unwrap_or(s)
            };
            let from = lat.site_vertices(start)[0];
            let (cycle, closed) = walk(start, from, &mut used);
            debug_assert!(closed);
            g.cycles.push(cycle);
        }
    }
    Ok(g)
}

/// Reference cut for winding numbers: a ray from the hole centre that misses
/// every vertex.
fn reference_cut(lat: &RubyLattice) -> Result<(SitePos, SitePos)> {
    let hole = lat.hole().ok_or_else(|| Error::Lattice("lattice has no hole".into()))?;
    let extent = lat.sites().iter().map(|p| p.dist(&hole.center)).fold(0.0, f64::max) + 4.0;
    for k in 0..16 {
        let th = 0.4321 + 0.29 * k as f64;
        let far = SitePos {
            x: hole.center.x + extent * th.cos(),
            y: hole.center.y + extent * th.sin(),
        };
        let (dx, dy) = (far.x - hole.center.x, far.y - hole.center.y);
        let clear = lat.vertices().iter().all(|v| {
            let (px, py) = (v.pos.x - hole.center.x, v.pos.y - hole.center.y);
            let t = (px * dx + py * dy) / (dx * dx + dy * dy);
            t < 0.0 || (px - t * dx).hypot(py - t * dy) > 1e-6
        });
        if clear {
            return Ok((hole.center, far));
        }
    }
    Err(Error::Lattice("no clean reference cut from the hole".into()))
}

/// Signed number of times a cycle winds the hole.
pub fn winding_number(lat: &RubyLattice, cycle: &[usize]) -> Result<i64> {
    let (c0, c1) = reference_cut(lat)?;
    let (dx, dy) = (c1.x - c0.x, c1.y - c0.y);
    let mut w = 0i64;
    for k in 0..cycle.len() {
        let s = cycle[k];
        let next = cycle[(k + 1) % cycle.len()];
        let [a, b] = lat.site_vertices(s);
        // orient the link towards the vertex shared with the next link
        let (from, to) = if lat.site_vertices(next).contains(&b) { (a, b) } else { (b, a) };
        let (p, q) = (lat.vertices()[from].pos, lat.vertices()[to].pos);
        if segments_cross(c0, c1, p, q) {
            let cross = dx * (q.y - p.y) - dy * (q.x - p.x);
            w += if cross > 0.0 { 1 } else { -1 };
        }
    }
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorRelation {
    Same,
    Opposite,
}

impl SectorRelation {
    pub fn compose(self, other: SectorRelation) -> SectorRelation {
        if self == other {
            SectorRelation::Same
        } else {
            SectorRelation::Opposite
        }
    }
}

/// Opposite iff the transition cycles wind the hole an odd number of times
/// in total. Open paths leave the sector undefined and are an error.
pub fn sector_relation(lat: &RubyLattice, d1: &DimerCovering, d2: &DimerCovering) -> Result<SectorRelation> {
    lat.hole().ok_or_else(|| Error::Lattice("lattice has no hole".into()))?;
    let g = transition_graph(lat, d1, d2)?;
    if !g.paths.is_empty() {
        return Err(Error::InvalidArgument(
            "transition graph has open paths; use the strict coverage rule for sectors".into(),
        ));
    }
    let mut total = 0i64;
    for c in &g.cycles {
        total += winding_number(lat, c)?;
    }
    Ok(if total.rem_euclid(2) == 0 {
        SectorRelation::Same
    } else {
        SectorRelation::Opposite
    })
}

/// Topological sector relative to a reference covering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel(u8);

impl SectorLabel {
    pub fn value(self) -> u8 {
        self.0
    }
}

/// Labels every covering relative to `coverings[reference]`, then checks
/// the labelling against every hole-to-boundary Z string: each must have a
/// constant parity within a sector and opposite parities across sectors.
pub fn classify_sectors(
    lat: &RubyLattice,
    coverings: &[DimerCovering],
    reference: usize,
    z_strings: &[StringSpec],
) -> Result<Vec<SectorLabel>> {
    let r = coverings.get(reference).ok_or(Error::OutOfRange {
        index: reference,
        dim: coverings.len(),
    })?;
    let labels: Vec<SectorLabel> = coverings
        .iter()
        .map(|d| {
            Ok(match sector_relation(lat, r, d)? {
                SectorRelation::Same => SectorLabel(0),
                SectorRelation::Opposite => SectorLabel(1),
            })
        })
        .collect::<Result<_>>()?;
    for s in z_strings {
        let sites = s
            .z_sites()
            .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a Z string", s.label)))?;
        let parity = |d: &DimerCovering| sites.iter().filter(|&&i| d.0.get(i)).count() % 2;
        let p0 = parity(r);
        for (d, l) in coverings.iter().zip(&labels) {
            if (parity(d) ^ p0) as u8 != l.0 {
                return Err(Error::String(format!(
                    "sector labelling disagrees with `{}` on {}: winding computation is inconsistent",
                    s.label,
                    d.0.to_bitstring()
                )));
            }
        }
    }
    Ok(labels)
}

/// Writes coverings in the snapshot file format.
pub fn export_coverings<W: Write>(w: W, coverings: &[DimerCovering], header: &[(&str, String)]) -> Result<()> {
    let snaps: Vec<Snapshot> = coverings
        .iter()
        .map(|d| Snapshot {
            bits: d.0.clone(),
            endpoint: f64::NAN,
            seed: 0,
            timestamp: None,
        })
        .collect();
    write_snapshots(w, &snaps, header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn one_cell_torus_matches_exhaustive_filter() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        let n = lat.n_sites();
        let brute = (0u64..1 << n)
            .filter(|m| CoverageRule::Strict.accepts(&lat, |s| m >> s & 1 == 1))
            .count();
        let got = enumerate_perfect_coverings(&lat, CoverageRule::Strict, 1000).unwrap();
        assert_eq!(got.len(), brute);

        let lat = RubyLattice::build(1, 2, Boundary::Torus, None).unwrap();
        let n = lat.n_sites();
        let brute: Vec<u64> = (0u64..1 << n)
            .filter(|m| CoverageRule::Strict.accepts(&lat, |s| m >> s & 1 == 1))
            .collect();
        let got = enumerate_perfect_coverings(&lat, CoverageRule::Strict, 1000).unwrap();
        assert!(!brute.is_empty());
        assert_eq!(got.len(), brute.len());
        for d in &got {
            let m = d.bits().occupied().fold(0u64, |m, s| m | 1 << s);
            assert!(brute.contains(&m));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        assert!(matches!(
            enumerate_perfect_coverings(&lat, CoverageRule::Strict, 10),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn identical_coverings_have_empty_transition_graph() {
        let lat = RubyLattice::build(3, 2, Boundary::Torus, None).unwrap();
        let c = enumerate_perfect_coverings(&lat, CoverageRule::Strict, 1000).unwrap();
        assert!(transition_graph(&lat, &c[0], &c[0]).unwrap().is_empty());
        for d in &c[1..] {
            let g = transition_graph(&lat, &c[0], d).unwrap();
            assert!(g.paths.is_empty());
            assert!(g.cycles.iter().all(|cy| cy.len() % 2 == 0), "{:?}", g.cycles);
        }
    }
}
