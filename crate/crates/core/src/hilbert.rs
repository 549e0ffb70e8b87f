//! Blockade-constrained Hilbert spaces: the independent sets of a
//! [`BlockadeGraph`], stored in canonical order.
//!
//! Canonical order is numeric order of the occupation bitstring read with
//! site 0 as the least significant bit. The all-empty state is always
//! index 0.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::lattice::{BlockadeGraph, RubyLattice};

pub const DEFAULT_DIMENSION_CAP: usize = 50_000_000;

/// Occupation bitstring of arbitrary width.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BasisState {
    n_sites: usize,
    words: SmallVec<[u64; 4]>,
}

pub(crate) fn words_for(n_sites: usize) -> usize {
    n_sites.div_ceil(64).max(1)
}

impl BasisState {
    pub fn zeros(n_sites: usize) -> Self {
        Self {
            n_sites,
            words: SmallVec::from_elem(0, words_for(n_sites)),
        }
    }

    pub fn from_sites(n_sites: usize, occupied: &[usize]) -> Result<Self> {
        let mut s = Self::zeros(n_sites);
        for &i in occupied {
            if i >= n_sites {
                return Err(Error::OutOfRange {
                    index: i,
                    dim: n_sites,
                });
            }
            s.set(i, true);
        }
        Ok(s)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    pub(crate) fn from_words(n_sites: usize, words: &[u64]) -> Self {
        Self {
            n_sites,
            words: SmallVec::from_slice(words),
        }
    }

    /// Parses a `0`/`1` string, site 0 first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len());
        for (k, c) in text.chars().enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => {
                    return Err(Error::Parse(format!(
                        "invalid character {c:?} at position {k}"
                    )))
                }
            }
        }
        Ok(Self::from_bools(&bits))
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n_sites);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.n_sites);
        let m = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_sites).filter(|&i| self.get(i))
    }

    pub fn is_independent(&self, g: &BlockadeGraph) -> bool {
        g.edges()
            .iter()
            .all(|&(i, j)| !(self.get(i) && self.get(j)))
    }

    /// `0`/`1` string, site 0 first.
    pub fn to_bitstring(&self) -> String {
        (0..self.n_sites)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

pub(crate) fn cmp_words(a: &[u64], b: &[u64]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

impl Ord for BasisState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_sites
            .cmp(&other.n_sites)
            .then_with(|| cmp_words(&self.words, &other.words))
    }
}

impl PartialOrd for BasisState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasisState({})", self.to_bitstring())
    }
}

/// Independent sets of a blockade graph in canonical order, stored as a flat
/// word array (`stride` words per state).
#[derive(Clone, Debug)]
pub struct ConstrainedBasis {
    graph: BlockadeGraph,
    stride: usize,
    data: Vec<u64>,
}

/// Which vertices must touch exactly one dimer for a state to count as a
/// perfect covering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoverageRule {
    /// Under-coordinated (boundary) vertices may be empty.
    #[default]
    ExemptBoundary,
    /// Every vertex, boundary and hole rim included.
    Strict,
}

impl CoverageRule {
    pub fn accepts(self, lat: &RubyLattice, occupied: impl Fn(usize) -> bool) -> bool {
        lat.vertices().iter().all(|v| {
            let k = v.sites.iter().filter(|&&s| occupied(s)).count();
            match self {
                CoverageRule::Strict => k == 1,
                CoverageRule::ExemptBoundary if v.is_full() => k == 1,
                CoverageRule::ExemptBoundary => k <= 1,
            }
        })
    }
}

pub fn enumerate_basis(g: &BlockadeGraph) -> Result<ConstrainedBasis> {
    enumerate_basis_with_cap(g, DEFAULT_DIMENSION_CAP)
}

/// Depth-first enumeration from the highest site down, empty branch first,
/// which yields canonical order directly.
pub fn enumerate_basis_with_cap(g: &BlockadeGraph, cap: usize) -> Result<ConstrainedBasis> {
    let n = g.n_sites();
    let stride = words_for(n);
    let higher: Vec<Vec<usize>> = (0..n)
        .map(|i| g.neighbors(i).iter().copied().filter(|&j| j > i).collect())
        .collect();

    let mut data = Vec::new();
    let mut cur = vec![0u64; stride];
    let mut count = 0usize;
    let ok = dfs(n, &higher, &mut cur, &mut data, &mut count, cap);
    if !ok {
        return Err(Error::Capacity {
            cap,
            estimate: estimate_dimension(&higher, 4000, 0x5eed),
        });
    }
    Ok(ConstrainedBasis {
        graph: g.clone(),
        stride,
        data,
    })
}

fn bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

/// Returns false when the cap is hit. `remaining` sites `0..remaining` are
/// still undecided.
fn dfs(
    remaining: usize,
    higher: &[Vec<usize>],
    cur: &mut [u64],
    out: &mut Vec<u64>,
    count: &mut usize,
    cap: usize,
) -> bool {
    if remaining == 0 {
        if *count >= cap {
            return false;
        }
        *count += 1;
        out.extend_from_slice(cur);
        return true;
    }
    let i = remaining - 1;
    if !dfs(i, higher, cur, out, count, cap) {
        return false;
    }
    if higher[i].iter().all(|&j| !bit(cur, j)) {
        cur[i / 64] |= 1 << (i % 64);
        let ok = dfs(i, higher, cur, out, count, cap);
        cur[i / 64] &= !(1 << (i % 64));
        return ok;
    }
    true
}

/// Knuth's random-probe estimate of the number of leaves of the search tree.
fn estimate_dimension(higher: &[Vec<usize>], probes: usize, seed: u64) -> f64 {
    let n = higher.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut cur = vec![false; n];
    for _ in 0..probes {
        cur.iter_mut().for_each(|b| *b = false);
        let mut weight = 1.0;
        for i in (0..n).rev() {
            if higher[i].iter().all(|&j| !cur[j]) {
                weight *= 2.0;
                cur[i] = rng.random_bool(0.5);
            }
        }
        total += weight;
    }
    total / probes as f64
}

impl ConstrainedBasis {
    pub fn dim(&self) -> usize {
        self.data.len() / self.stride
    }

    pub fn n_sites(&self) -> usize {
        self.graph.n_sites()
    }

    pub fn graph(&self) -> &BlockadeGraph {
        &self.graph
    }

    /// Raw words of state `k`.
    pub fn words(&self, k: usize) -> &[u64] {
        &self.data[k * self.stride..(k + 1) * self.stride]
    }

    pub fn is_occupied(&self, k: usize, site: usize) -> bool {
        bit(self.words(k), site)
    }

    pub fn count_ones(&self, k: usize) -> usize {
        self.words(k).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn state_of(&self, k: usize) -> Result<BasisState> {
        if k >= self.dim() {
            return Err(Error::OutOfRange {
                index: k,
                dim: self.dim(),
            });
        }
        Ok(BasisState::from_words(self.n_sites(), self.words(k)))
    }

    pub fn index_of(&self, s: &BasisState) -> Result<usize> {
        if s.n_sites() != self.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites(),
                got: s.n_sites(),
            });
        }
        self.find_words(s.words()).ok_or(Error::NotInBasis)
    }

    /// Binary search for a raw word slice.
    pub fn find_words(&self, w: &[u64]) -> Option<usize> {
        let (mut lo, mut hi) = (0usize, self.dim());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match cmp_words(self.words(mid), w) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(|k| BasisState::from_words(self.n_sites(), self.words(k)))
    }

    /// Indices of perfect dimer coverings.
    pub fn dimer_sector(&self, lat: &RubyLattice, rule: CoverageRule) -> Result<Vec<usize>> {
        if lat.n_sites() != self.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: lat.n_sites(),
                got: self.n_sites(),
            });
        }
        Ok((0..self.dim())
            .filter(|&k| rule.accepts(lat, |s| self.is_occupied(k, s)))
            .collect())
    }
}

/// Indices of perfect dimer coverings under the default boundary rule.
pub fn dimer_sector(b: &ConstrainedBasis, lat: &RubyLattice) -> Result<Vec<usize>> {
    b.dimer_sector(lat, CoverageRule::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn graph(n: usize, e: &[(usize, usize)]) -> BlockadeGraph {
        BlockadeGraph::from_edges(n, e.iter().copied()).unwrap()
    }

    #[test]
    fn small_graphs() {
        assert_eq!(
            enumerate_basis(&graph(3, &[(0, 1), (1, 2), (0, 2)]))
                .unwrap()
                .dim(),
            4
        );
        assert_eq!(enumerate_basis(&graph(2, &[])).unwrap().dim(), 4);
        assert_eq!(
            enumerate_basis(&graph(3, &[(0, 1), (1, 2)])).unwrap().dim(),
            5
        );
        assert_eq!(enumerate_basis(&graph(0, &[])).unwrap().dim(), 1);
    }

    #[test]
    fn vacuum_is_index_zero_and_order_is_canonical() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        let b = enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap();
        assert_eq!(b.state_of(0).unwrap().count_ones(), 0);
        let states: Vec<BasisState> = b.states().collect();
        assert!(states.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn index_errors() {
        let b = enumerate_basis(&graph(3, &[(0, 1)])).unwrap();
        assert!(matches!(b.state_of(99), Err(Error::OutOfRange { .. })));
        let bad = BasisState::from_sites(3, &[0, 1]).unwrap();
        assert!(matches!(b.index_of(&bad), Err(Error::NotInBasis)));
        assert!(b.index_of(&BasisState::zeros(4)).is_err());
    }

    #[test]
    fn capacity_error_reports_estimate() {
        let g = graph(30, &[]);
        match enumerate_basis_with_cap(&g, 1000) {
            Err(Error::Capacity { cap, estimate }) => {
                assert_eq!(cap, 1000);
                assert!((estimate - 2f64.powi(30)).abs() < 1.0);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn wide_states() {
        let mut s = BasisState::zeros(200);
        s.set(150, true);
        s.set(3, true);
        assert_eq!(s.count_ones(), 2);
        assert_eq!(s.occupied().collect::<Vec<_>>(), vec![3, 150]);
        let t = BasisState::parse(&s.to_bitstring()).unwrap();
        assert_eq!(s, t);
        assert!(BasisState::zeros(200) < s);
        assert!(BasisState::parse("01x").is_err());
    }

    #[test]
    fn dimer_sector_excludes_vacuum() {
        let lat = RubyLattice::build(1, 1, Boundary::Torus, None).unwrap();
        let b = enumerate_basis(&lat.blockade_graph(2.4).unwrap()).unwrap();
        let sector = dimer_sector(&b, &lat).unwrap();
        assert!(!sector.contains(&0));
        for k in sector {
            assert!(b.count_ones(k) * 2 == lat.vertices().len());
        }
    }
}
