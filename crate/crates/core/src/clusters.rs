//! Multiset clusters over Hamiltonian terms and exhaustive enumeration of the
//! connected clusters of a given weight whose support contains given qubits.
//!
//! A cluster assigns a multiplicity to each term; its weight is the total
//! multiplicity and its support is the union of term supports. Connectivity
//! is judged on the term-overlap graph and ignores multiplicities.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::model::{HamiltonianSpec, OverlapGraph};

/// A multiset of term indices in canonical form (ascending indices,
/// multiplicities ≥ 1) with cached weight and support.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cluster {
    entries: Vec<(usize, u32)>,
    weight: u32,
    support: Vec<u32>,
}

impl Cluster {
    /// Build from (term index, multiplicity) pairs; zero multiplicities are
    /// dropped, repeated indices merged, entries sorted.
    pub fn new(entries: impl IntoIterator<Item = (usize, u32)>, spec: &HamiltonianSpec) -> Cluster {
        let mut map: Vec<(usize, u32)> = Vec::new();
        for (term, mult) in entries {
            if mult == 0 {
                continue;
            }
            match map.binary_search_by_key(&term, |&(t, _)| t) {
                Ok(i) => map[i].1 += mult,
                Err(i) => map.insert(i, (term, mult)),
            }
        }
        Self::from_sorted(map, spec)
    }

    fn from_sorted(entries: Vec<(usize, u32)>, spec: &HamiltonianSpec) -> Cluster {
        let weight = entries.iter().map(|&(_, m)| m).sum();
        let mut support: Vec<u32> = entries
            .iter()
            .flat_map(|&(t, _)| spec.term(t).pauli.support())
            .collect();
        support.sort_unstable();
        support.dedup();
        Cluster {
            entries,
            weight,
            support,
        }
    }

    /// The canonical (term index, multiplicity) pairs, ascending.
    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn multiplicity(&self, term: usize) -> u32 {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn distinct_terms(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(t, _)| t)
    }

    pub fn num_distinct(&self) -> usize {
        self.entries.len()
    }

    /// Total weight `Σ multiplicities`.
    pub fn weight(&self) -> usize {
        self.weight as usize
    }

    /// `Π multiplicity!` (distinct from `weight!`).
    pub fn factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, m)| (1..=m as u64).map(|x| x as f64).product::<f64>())
            .product()
    }

    /// Union of term supports, sorted.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn contains_qubit(&self, qubit: u32) -> bool {
        self.support.binary_search(&qubit).is_ok()
    }

    /// Multiset union: multiplicities add.
    pub fn union(&self, other: &Cluster, spec: &HamiltonianSpec) -> Cluster {
        Cluster::new(
            self.entries.iter().chain(other.entries.iter()).copied(),
            spec,
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("pair enumeration requires two distinct qubits, got i = j = {0}")]
    SamePair(u32),
    #[error("cluster weight must be at least 1")]
    ZeroWeight,
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: u32, num_qubits: u32 },
}

/// True iff the distinct terms of `w` induce a connected subgraph of the
/// term-overlap graph. Single-term clusters are connected; multiplicity is
/// irrelevant.
pub fn is_connected(w: &Cluster, graph: &OverlapGraph) -> bool {
    let terms: Vec<usize> = w.distinct_terms().collect();
    if terms.len() <= 1 {
        return true;
    }
    let in_set: HashSet<usize> = terms.iter().copied().collect();
    let mut seen = HashSet::with_capacity(terms.len());
    let mut queue = VecDeque::from([terms[0]]);
    seen.insert(terms[0]);
    while let Some(t) = queue.pop_front() {
        for &nb in graph.neighbors(t) {
            if in_set.contains(&nb) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    seen.len() == terms.len()
}

/// All connected clusters of weight `m` whose support contains `j`, each
/// exactly once, in canonical order.
///
/// Strategy: enumerate connected term *sets* by growing from each term that
/// covers `j` (attaching overlap-graph neighbors, deduplicating sets by
/// canonical form), then distribute the remaining weight over the chosen
/// terms as extra multiplicities.
pub fn enumerate_connected(
    j: u32,
    m: usize,
    spec: &HamiltonianSpec,
    graph: &OverlapGraph,
) -> Result<Vec<Cluster>, ClusterError> {
    if j >= spec.num_qubits() {
        return Err(ClusterError::QubitOutOfRange {
            qubit: j,
            num_qubits: spec.num_qubits(),
        });
    }
    if m == 0 {
        return Err(ClusterError::ZeroWeight);
    }
    let roots: Vec<usize> = (0..spec.num_terms())
        .filter(|&t| spec.term(t).pauli.letter_at(j).is_some())
        .collect();
    let sets = connected_sets(&roots, m, graph);
    Ok(expand_multiplicities(sets, m, spec))
}

/// Connected clusters of weight `m` whose support contains both `i` and `j`.
///
/// Empty whenever no `m` terms can span the two qubits (in particular when
/// `m·(k−1)` is smaller than their graph distance).
pub fn enumerate_connected_pair(
    i: u32,
    j: u32,
    m: usize,
    spec: &HamiltonianSpec,
    graph: &OverlapGraph,
) -> Result<Vec<Cluster>, ClusterError> {
    if i == j {
        return Err(ClusterError::SamePair(i));
    }
    for q in [i, j] {
        if q >= spec.num_qubits() {
            return Err(ClusterError::QubitOutOfRange {
                qubit: q,
                num_qubits: spec.num_qubits(),
            });
        }
    }
    if m == 0 {
        return Err(ClusterError::ZeroWeight);
    }
    let roots: Vec<usize> = (0..spec.num_terms())
        .filter(|&t| spec.term(t).pauli.letter_at(i).is_some())
        .collect();
    let sets: Vec<Vec<usize>> = connected_sets(&roots, m, graph)
        .into_iter()
        .filter(|set| {
            set.iter()
                .any(|&t| spec.term(t).pauli.letter_at(j).is_some())
        })
        .collect();
    Ok(expand_multiplicities(sets, m, spec))
}

/// All connected term sets of size ≤ `max_size` containing at least one root.
fn connected_sets(roots: &[usize], max_size: usize, graph: &OverlapGraph) -> Vec<Vec<usize>> {
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut queue: VecDeque<Vec<usize>> = VecDeque::new();
    for &r in roots {
        let set = vec![r];
        if seen.insert(set.clone()) {
            queue.push_back(set);
        }
    }
    while let Some(set) = queue.pop_front() {
        if set.len() == max_size {
            continue;
        }
        for &t in &set {
            for &nb in graph.neighbors(t) {
                if set.binary_search(&nb).is_err() {
                    let mut next = set.clone();
                    let pos = next.binary_search(&nb).unwrap_err();
                    next.insert(pos, nb);
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    let mut sets: Vec<Vec<usize>> = seen.into_iter().collect();
    sets.sort();
    sets
}

/// Distribute weight `m` over each term set (every term keeps multiplicity
/// ≥ 1), producing canonical clusters in deterministic order.
fn expand_multiplicities(
    sets: Vec<Vec<usize>>,
    m: usize,
    spec: &HamiltonianSpec,
) -> Vec<Cluster> {
    let mut out = Vec::new();
    for set in sets {
        let s = set.len();
        if s > m {
            continue;
        }
        let extra = (m - s) as u32;
        let mut mults = vec![1u32; s];
        distribute(&mut out, &set, &mut mults, 0, extra, spec);
    }
    out.sort_by(|a, b| a.entries.cmp(&b.entries));
    out
}

fn distribute(
    out: &mut Vec<Cluster>,
    set: &[usize],
    mults: &mut [u32],
    pos: usize,
    remaining: u32,
    spec: &HamiltonianSpec,
) {
    if pos + 1 == set.len() {
        mults[pos] += remaining;
        let entries: Vec<(usize, u32)> = set.iter().copied().zip(mults.iter().copied()).collect();
        out.push(Cluster::from_sorted(entries, spec));
        mults[pos] -= remaining;
        return;
    }
    for take in 0..=remaining {
        mults[pos] += take;
        distribute(out, set, mults, pos + 1, remaining - take, spec);
        mults[pos] -= take;
    }
}

/// Memoizing wrapper around the enumerations, keyed by `(qubit, m)` and
/// `(i, j, m)`. Reads are concurrent; inserts are serialized by the lock.
#[derive(Debug, Default)]
pub struct ClusterCache {
    single: RwLock<HashMap<(u32, usize), Arc<Vec<Cluster>>>>,
    pair: RwLock<HashMap<(u32, u32, usize), Arc<Vec<Cluster>>>>,
}

impl ClusterCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn connected(
        &self,
        j: u32,
        m: usize,
        spec: &HamiltonianSpec,
        graph: &OverlapGraph,
    ) -> Result<Arc<Vec<Cluster>>, ClusterError> {
        if let Some(hit) = self.single.read().unwrap().get(&(j, m)) {
            return Ok(Arc::clone(hit));
        }
        let computed = Arc::new(enumerate_connected(j, m, spec, graph)?);
        let mut map = self.single.write().unwrap();
        Ok(Arc::clone(
            map.entry((j, m)).or_insert(computed),
        ))
    }

    pub fn connected_pair(
        &self,
        i: u32,
        j: u32,
        m: usize,
        spec: &HamiltonianSpec,
        graph: &OverlapGraph,
    ) -> Result<Arc<Vec<Cluster>>, ClusterError> {
        if let Some(hit) = self.pair.read().unwrap().get(&(i, j, m)) {
            return Ok(Arc::clone(hit));
        }
        let computed = Arc::new(enumerate_connected_pair(i, j, m, spec, graph)?);
        let mut map = self.pair.write().unwrap();
        Ok(Arc::clone(map.entry((i, j, m)).or_insert(computed)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::term_overlap_graph;
    use crate::pauli::parse_pauli;
    use crate::verify::brute_force_connected;

    fn spec_from(n: u32, paulis: &[&str]) -> HamiltonianSpec {
        HamiltonianSpec::from_terms(
            n,
            paulis.iter().map(|p| (0.5, parse_pauli(p).unwrap())),
            None,
            true,
        )
        .unwrap()
        .spec
    }

    #[test]
    fn connectivity_basics() {
        let spec = spec_from(7, &["Z0 Z1", "Z5 Z6"]);
        let graph = term_overlap_graph(&spec);
        let single = Cluster::new([(0, 1)], &spec);
        assert!(is_connected(&single, &graph));
        let doubled = Cluster::new([(0, 2)], &spec);
        assert!(is_connected(&doubled, &graph));
        let split = Cluster::new([(0, 1), (1, 1)], &spec);
        assert!(!is_connected(&split, &graph));
    }

    #[test]
    fn union_weight_and_factorial() {
        // union of two connected clusters on well-separated patches:
        // disconnected, weight 10, factorial 2!*2!*1!*3!*1!*1! = 24
        let spec = spec_from(
            12,
            &[
                "Z0 Z1", "Z1 Z2", "X1", // lower-left patch
                "Z8 Z9", "Z9 Z10", "X9", // upper-right patch
            ],
        );
        let graph = term_overlap_graph(&spec);
        let v1 = Cluster::new([(0, 2), (1, 2), (2, 1)], &spec);
        let v2 = Cluster::new([(3, 3), (4, 1), (5, 1)], &spec);
        assert!(is_connected(&v1, &graph));
        assert!(is_connected(&v2, &graph));
        let w = v1.union(&v2, &spec);
        assert_eq!(w.weight(), 10);
        assert_eq!(w.factorial(), 24.0);
        assert!(!is_connected(&w, &graph));
    }

    #[test]
    fn enumerate_single_term_examples() {
        // m = 1: one cluster per term acting on j
        let spec = spec_from(4, &["Z0 Z1", "Z1 Z2", "Z2 Z3", "X1"]);
        let graph = term_overlap_graph(&spec);
        let got = enumerate_connected(1, 1, &spec, &graph).unwrap();
        let acting: Vec<Vec<(usize, u32)>> = got.iter().map(|c| c.entries().to_vec()).collect();
        assert_eq!(acting, vec![vec![(0, 1)], vec![(1, 1)], vec![(3, 1)]]);

        // single-term model: only {a,a,a} at weight 3
        let one = spec_from(2, &["Z0 Z1"]);
        let g1 = term_overlap_graph(&one);
        let got = enumerate_connected(0, 3, &one, &g1).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].entries(), &[(0, 3)]);
    }

    #[test]
    fn enumerate_matches_brute_force() {
        let spec = spec_from(4, &["Z0 Z1", "Z1 Z2", "Z2 Z3", "Z0", "Z1", "Z2", "Z3"]);
        let graph = term_overlap_graph(&spec);
        for j in 0..4u32 {
            for m in 1..=4usize {
                let fast = enumerate_connected(j, m, &spec, &graph).unwrap();
                let brute = brute_force_connected(j, None, m, &spec);
                let fast_set: Vec<Vec<(usize, u32)>> =
                    fast.iter().map(|c| c.entries().to_vec()).collect();
                assert_eq!(fast_set, brute, "mismatch at j={j} m={m}");
            }
        }
    }

    #[test]
    fn enumeration_is_duplicate_free() {
        let spec = spec_from(5, &["Z0 Z1", "Z1 Z2", "Z2 Z3", "Z3 Z4", "X2", "X3"]);
        let graph = term_overlap_graph(&spec);
        for m in 1..=5 {
            let got = enumerate_connected(2, m, &spec, &graph).unwrap();
            let set: HashSet<&Cluster> = got.iter().collect();
            assert_eq!(set.len(), got.len());
            for c in &got {
                assert_eq!(c.weight(), m);
                assert!(c.contains_qubit(2));
                assert!(is_connected(c, &graph));
            }
        }
    }

    #[test]
    fn pair_enumeration() {
        // 3-qubit chain, i=0, j=2, m=2 -> exactly {Z0Z1, Z1Z2}
        let spec = spec_from(3, &["Z0 Z1", "Z1 Z2"]);
        let graph = term_overlap_graph(&spec);
        let got = enumerate_connected_pair(0, 2, 2, &spec, &graph).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].entries(), &[(0, 1), (1, 1)]);

        // distance 4 with k = 2 cannot be spanned by weight 3
        let chain = spec_from(6, &["Z0 Z1", "Z1 Z2", "Z2 Z3", "Z3 Z4", "Z4 Z5"]);
        let g = term_overlap_graph(&chain);
        let empty = enumerate_connected_pair(0, 4, 3, &chain, &g).unwrap();
        assert!(empty.is_empty());

        assert_eq!(
            enumerate_connected_pair(1, 1, 2, &chain, &g),
            Err(ClusterError::SamePair(1))
        );
    }

    #[test]
    fn pair_matches_brute_force() {
        let spec = spec_from(4, &["Z0 Z1", "Z1 Z2", "Z2 Z3", "X1", "X2"]);
        let graph = term_overlap_graph(&spec);
        for m in 1..=4usize {
            let fast = enumerate_connected_pair(0, 2, m, &spec, &graph).unwrap();
            let brute = brute_force_connected(0, Some(2), m, &spec);
            let fast_set: Vec<Vec<(usize, u32)>> =
                fast.iter().map(|c| c.entries().to_vec()).collect();
            assert_eq!(fast_set, brute, "mismatch at m={m}");
        }
    }

    #[test]
    fn cache_returns_same_results() {
        let spec = spec_from(4, &["Z0 Z1", "Z1 Z2", "Z2 Z3"]);
        let graph = term_overlap_graph(&spec);
        let cache = ClusterCache::new();
        let a = cache.connected(1, 3, &spec, &graph).unwrap();
        let b = cache.connected(1, 3, &spec, &graph).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(*a, enumerate_connected(1, 3, &spec, &graph).unwrap());
    }
}
