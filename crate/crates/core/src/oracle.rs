//! Exact copy counting by backtracking.
//!
//! A copy is a subgraph of the data graph isomorphic to the pattern: the image
//! of the pattern's edge set under an injective vertex map whose edges are all
//! present. Copies are not induced, so extra data edges among the copy's
//! vertices are allowed, and one vertex set may host several copies (K4 holds
//! three 4-cycles). Copies are injective homomorphisms divided by the number
//! of pattern automorphisms.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hypergraph::{DataEdge, DataGraph, PatternGraph, VertexId};
use crate::pattern::{automorphism_count, PatternError};

/// Default bound on visited search nodes.
pub const DEFAULT_SEARCH_CAP: u64 = 5_000_000_000;

const FLUSH_EVERY: u64 = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("pattern has no edges")]
    EmptyPattern,
    #[error("pattern is disconnected")]
    Disconnected,
    #[error("search exceeded {cap} nodes")]
    SearchCapExceeded { cap: u64 },
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("vertex {0} has no label")]
    MissingLabel(VertexId),
    #[error("vertex {vertex} has label {label}, but the pattern has {k} vertices")]
    LabelOutOfRange { vertex: VertexId, label: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CopyCount {
    pub copies: u64,
    pub injective_homs: u64,
}

/// Dense view of a data graph for the search.
struct Index<'a> {
    graph: &'a DataGraph,
    ids: Vec<VertexId>,
    degree: Vec<usize>,
    /// For each dense vertex and arity, dense neighbors through an edge of that arity.
    neighbors: Vec<HashMap<usize, Vec<usize>>>,
}

impl<'a> Index<'a> {
    fn new(graph: &'a DataGraph) -> Self {
        let mut ids: Vec<VertexId> = graph.vertices().collect();
        ids.sort_unstable();
        let dense: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut neighbors: Vec<HashMap<usize, Vec<usize>>> = vec![HashMap::new(); ids.len()];
        for e in graph.edges() {
            let vs: Vec<usize> = e.endpoints().iter().map(|v| dense[v]).collect();
            for &a in &vs {
                let list = neighbors[a].entry(vs.len()).or_default();
                list.extend(vs.iter().copied().filter(|&b| b != a));
            }
        }
        for per_arity in &mut neighbors {
            for list in per_arity.values_mut() {
                list.sort_unstable();
                list.dedup();
            }
        }
        let degree = ids.iter().map(|&v| graph.degree(v)).collect();
        Self {
            graph,
            ids,
            degree,
            neighbors,
        }
    }
}

/// Per-position search plan over pattern vertices in a connected order.
struct Plan {
    order: Vec<usize>,
    /// For position i > 0: (earlier position, arity) of an edge joining them.
    anchor: Vec<Option<(usize, usize)>>,
    /// Pattern edges, as lists of positions, completed at position i.
    closing: Vec<Vec<Vec<usize>>>,
    pattern_degree: Vec<usize>,
}

impl Plan {
    fn new(h: &PatternGraph) -> Self {
        let k = h.k();
        let degrees = h.degrees();
        let mut order = Vec::with_capacity(k);
        let mut placed = vec![false; k];
        let start = (0..k).max_by_key(|&v| (degrees[v], std::cmp::Reverse(v))).unwrap_or(0);
        order.push(start);
        placed[start] = true;
        while order.len() < k {
            // Most edges into the placed prefix first; ties by degree then index.
            let next = (0..k)
                .filter(|&v| !placed[v])
                .max_by_key(|&v| {
                    let links = h
                        .edges()
                        .iter()
                        .filter(|e| e.contains(&v) && e.iter().any(|&u| placed[u]))
                        .count();
                    (links, degrees[v], std::cmp::Reverse(v))
                })
                .expect("unplaced vertex remains");
            placed[next] = true;
            order.push(next);
        }
        let mut position = vec![0; k];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        let mut anchor = vec![None; k];
        let mut closing = vec![Vec::new(); k];
        for e in h.edges() {
            let pos: Vec<usize> = e.iter().map(|&v| position[v]).collect();
            let last = *pos.iter().max().expect("nonempty edge");
            closing[last].push(pos);
        }
        for (i, &v) in order.iter().enumerate().skip(1) {
            anchor[i] = h
                .edges()
                .iter()
                .filter(|e| e.contains(&v))
                .filter_map(|e| {
                    let earlier = e.iter().map(|&u| position[u]).filter(|&p| p < i).min()?;
                    Some((earlier, e.len()))
                })
                .min();
        }
        let pattern_degree = order.iter().map(|&v| degrees[v]).collect();
        Self {
            order,
            anchor,
            closing,
            pattern_degree,
        }
    }
}

struct Search<'a> {
    index: &'a Index<'a>,
    plan: &'a Plan,
    /// Required pattern vertex for each dense data vertex, in the labeled variant.
    labels: Option<&'a [usize]>,
    image: Vec<usize>,
    used: HashSet<usize>,
    nodes: u64,
    shared: &'a AtomicU64,
    cap: u64,
}

impl Search<'_> {
    fn admissible(&self, i: usize, x: usize) -> bool {
        !self.used.contains(&x)
            && self.index.degree[x] >= self.plan.pattern_degree[i]
            && self.labels.is_none_or(|l| l[x] == self.plan.order[i])
    }

    fn closes(&self, i: usize) -> bool {
        self.plan.closing[i].iter().all(|positions| {
            let vs: Vec<VertexId> = positions.iter().map(|&p| self.index.ids[self.image[p]]).collect();
            DataEdge::new(vs).is_ok_and(|e| self.index.graph.contains(&e))
        })
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes >= FLUSH_EVERY.min(self.cap + 1) {
            let total = self.shared.fetch_add(self.nodes, Ordering::Relaxed) + self.nodes;
            self.nodes = 0;
            if total > self.cap {
                return Err(OracleError::SearchCapExceeded { cap: self.cap });
            }
        }
        Ok(())
    }

    fn extend(&mut self, i: usize) -> Result<u64, OracleError> {
        if i == self.plan.order.len() {
            return Ok(1);
        }
        let (earlier, arity) = self.plan.anchor[i].expect("connected order");
        let anchor_image = self.image[earlier];
        let Some(candidates) = self.index.neighbors[anchor_image].get(&arity) else {
            return Ok(0);
        };
        let mut total = 0;
        for &x in candidates {
            self.tick()?;
            if !self.admissible(i, x) {
                continue;
            }
            self.image[i] = x;
            if !self.closes(i) {
                continue;
            }
            self.used.insert(x);
            total += self.extend(i + 1)?;
            self.used.remove(&x);
        }
        Ok(total)
    }
}

fn check_pattern(h: &PatternGraph) -> Result<(), OracleError> {
    if h.edge_count() == 0 {
        return Err(OracleError::EmptyPattern);
    }
    if !h.is_connected() {
        return Err(OracleError::Disconnected);
    }
    Ok(())
}

fn count_maps(h: &PatternGraph, labels: Option<&[usize]>, index: &Index, cap: u64) -> Result<u64, OracleError> {
    let plan = Plan::new(h);
    let shared = AtomicU64::new(0);
    (0..index.ids.len())
        .into_par_iter()
        .map(|x| {
            let mut search = Search {
                index,
                plan: &plan,
                labels,
                image: vec![0; h.k()],
                used: HashSet::new(),
                nodes: 0,
                shared: &shared,
                cap,
            };
            search.tick()?;
            if !search.admissible(0, x) {
                return Ok(0);
            }
            search.image[0] = x;
            if !search.closes(0) {
                return Ok(0);
            }
            search.used.insert(x);
            search.extend(1)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Injective homomorphisms of `h` into `g` and the resulting copy count.
pub fn exact_count(g: &DataGraph, h: &PatternGraph) -> Result<CopyCount, OracleError> {
    exact_count_with_cap(g, h, DEFAULT_SEARCH_CAP)
}

pub fn exact_count_with_cap(g: &DataGraph, h: &PatternGraph, cap: u64) -> Result<CopyCount, OracleError> {
    check_pattern(h)?;
    let automorphisms = automorphism_count(h)?;
    let index = Index::new(g);
    let injective_homs = count_maps(h, None, &index, cap)?;
    debug_assert_eq!(injective_homs % automorphisms, 0);
    Ok(CopyCount {
        copies: injective_homs / automorphisms,
        injective_homs,
    })
}

/// Number of vertex sets whose label-respecting bijection onto the pattern
/// sends every pattern edge to a present edge. `labeling` must cover every
/// vertex of `g` that has a present edge.
pub fn exact_count_labeled(
    g: &DataGraph,
    h: &PatternGraph,
    labeling: &HashMap<VertexId, usize>,
) -> Result<u64, OracleError> {
    check_pattern(h)?;
    let index = Index::new(g);
    let labels = index
        .ids
        .iter()
        .map(|&v| {
            let label = *labeling.get(&v).ok_or(OracleError::MissingLabel(v))?;
            if label >= h.k() {
                return Err(OracleError::LabelOutOfRange { vertex: v, label, k: h.k() });
            }
            Ok(label)
        })
        .collect::<Result<Vec<_>, _>>()?;
    count_maps(h, Some(&labels), &index, DEFAULT_SEARCH_CAP)
}

/// Reference count by enumerating every k-subset of vertices and every
/// bijection onto the pattern, counting distinct images of the pattern's edge
/// set. Exponential; only for tiny graphs.
pub fn subset_enumeration_count(g: &DataGraph, h: &PatternGraph) -> u64 {
    let mut vertices: Vec<VertexId> = g.vertices().collect();
    vertices.sort_unstable();
    let k = h.k();
    if k > vertices.len() {
        return 0;
    }
    let perms = permutations(k);
    let mut count = 0;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let chosen: Vec<VertexId> = subset.iter().map(|&i| vertices[i]).collect();
        let images: HashSet<Vec<DataEdge>> = perms
            .iter()
            .filter_map(|perm| {
                let mut image = h
                    .edges()
                    .iter()
                    .map(|e| DataEdge::new(e.iter().map(|&a| chosen[perm[a]]).collect()).ok().filter(|d| g.contains(d)))
                    .collect::<Option<Vec<_>>>()?;
                image.sort_unstable();
                Some(image)
            })
            .collect();
        count += images.len() as u64;
        // Next k-subset in lexicographic order.
        let n = vertices.len();
        let Some(i) = (0..k).rev().find(|&i| subset[i] < n - k + i) else {
            return count;
        };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    fn heap(n: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..n - 1 {
            heap(n - 1, a, out);
            if n % 2 == 0 {
                a.swap(i, n - 1);
            } else {
                a.swap(0, n - 1);
            }
        }
        heap(n - 1, a, out);
    }
    heap(k, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::parse_pattern;

    fn pat(s: &str) -> PatternGraph {
        parse_pattern(s).unwrap()
    }

    fn graph(edges: &[(u64, u64)]) -> DataGraph {
        DataGraph::from_edges(edges.iter().map(|&(a, b)| DataEdge::pair(a, b)))
    }

    fn complete(n: u64) -> DataGraph {
        graph(&(0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect::<Vec<_>>())
    }

    #[test]
    fn small_spot_values() {
        let tri = pat("k=3; e 0 1; e 1 2; e 0 2");
        let c4 = pat("k=4; e 0 1; e 1 2; e 2 3; e 0 3");
        assert_eq!(
            exact_count(&graph(&[(1, 2), (2, 3), (1, 3)]), &tri).unwrap(),
            CopyCount {
                copies: 1,
                injective_homs: 6
            }
        );
        assert_eq!(exact_count(&complete(4), &tri).unwrap().copies, 4);
        assert_eq!(exact_count(&complete(4), &c4).unwrap().copies, 3);
        assert_eq!(exact_count(&complete(5), &tri).unwrap().copies, 10);
        assert_eq!(exact_count(&DataGraph::new(), &tri).unwrap().copies, 0);
    }

    #[test]
    fn hyperedge_patterns() {
        let h = pat("k=3; e 0 1 2");
        let g = DataGraph::from_edges([
            DataEdge::new(vec![1, 2, 3]).unwrap(),
            DataEdge::new(vec![2, 3, 4]).unwrap(),
            DataEdge::pair(1, 2),
        ]);
        assert_eq!(exact_count(&g, &h).unwrap().copies, 2);
        // Loose path of two 3-edges sharing one vertex.
        let path = pat("k=5; e 0 1 2; e 2 3 4");
        assert_eq!(exact_count(&g, &path).unwrap().copies, subset_enumeration_count(&g, &path));
    }

    #[test]
    fn rejects_bad_patterns() {
        let g = complete(4);
        assert_eq!(exact_count(&g, &pat("k=4; e 0 1; e 2 3")), Err(OracleError::Disconnected));
        assert_eq!(exact_count(&g, &pat("k=1")), Err(OracleError::EmptyPattern));
        assert_eq!(
            exact_count_with_cap(&complete(12), &pat("k=4; e 0 1; e 1 2; e 2 3"), 10),
            Err(OracleError::SearchCapExceeded { cap: 10 })
        );
    }

    #[test]
    fn labeled_counts() {
        let tri = pat("k=3; e 0 1; e 1 2; e 0 2");
        let g = graph(&[(1, 2), (2, 3), (1, 3)]);
        let labels: HashMap<u64, usize> = [(1, 0), (2, 1), (3, 2)].into();
        assert_eq!(exact_count_labeled(&g, &tri, &labels).unwrap(), 1);
        let clash: HashMap<u64, usize> = [(1, 0), (2, 0), (3, 2)].into();
        assert_eq!(exact_count_labeled(&g, &tri, &clash).unwrap(), 0);
        let partial: HashMap<u64, usize> = [(1, 0), (2, 1)].into();
        assert_eq!(exact_count_labeled(&g, &tri, &partial), Err(OracleError::MissingLabel(3)));
        let wide: HashMap<u64, usize> = [(1, 0), (2, 1), (3, 7)].into();
        assert!(matches!(exact_count_labeled(&g, &tri, &wide), Err(OracleError::LabelOutOfRange { .. })));
    }

    /// Labeled count by trying the single label-forced bijection on every subset.
    fn labeled_by_subsets(g: &DataGraph, h: &PatternGraph, labels: &HashMap<u64, usize>) -> u64 {
        let vertices: Vec<u64> = {
            let mut v: Vec<u64> = g.vertices().collect();
            v.sort_unstable();
            v
        };
        let k = h.k();
        let mut count = 0;
        for mask in 0u32..(1 << vertices.len()) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let chosen: Vec<u64> = (0..vertices.len()).filter(|i| mask & (1 << i) != 0).map(|i| vertices[i]).collect();
            let mut by_label = vec![None; k];
            for &v in &chosen {
                by_label[labels[&v]] = Some(v);
            }
            if by_label.iter().any(Option::is_none) {
                continue;
            }
            let ok = h.edges().iter().all(|e| {
                let image = e.iter().map(|&a| by_label[a].unwrap()).collect();
                g.contains(&DataEdge::new(image).unwrap())
            });
            count += ok as u64;
        }
        count
    }

    #[test]
    fn bipartite_labeled_path_matches_subset_enumeration() {
        // K_{3,3} with sides labeled alternately for the path a-b-c.
        let path = pat("k=3; e 0 1; e 1 2");
        let g = graph(&[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]);
        let labels: HashMap<u64, usize> = [(0, 0), (1, 2), (2, 0), (3, 1), (4, 1), (5, 2)].into();
        let expected = labeled_by_subsets(&g, &path, &labels);
        assert!(expected > 0);
        assert_eq!(exact_count_labeled(&g, &path, &labels).unwrap(), expected);
    }

    #[test]
    fn label_sum_identity_exhaustive() {
        // Σ over all 3^n labelings = injective_homs · 3^(n−3).
        let tri = pat("k=3; e 0 1; e 1 2; e 0 2");
        let g = graph(&[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4), (4, 5), (1, 3)]);
        let n = 6u32;
        let homs = exact_count(&g, &tri).unwrap().injective_homs;
        let mut total = 0;
        for code in 0..3u64.pow(n) {
            let mut c = code;
            let labels: HashMap<u64, usize> = (0..n as u64)
                .map(|v| {
                    let l = (c % 3) as usize;
                    c /= 3;
                    (v, l)
                })
                .collect();
            total += exact_count_labeled(&g, &tri, &labels).unwrap();
        }
        assert_eq!(total, homs * 3u64.pow(n - 3));
    }

    #[test]
    fn permutations_are_complete() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        assert_eq!(p.iter().collect::<HashSet<_>>().len(), 24);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = DataGraph> {
            proptest::collection::btree_set((0u64..7, 0u64..7), 0..18).prop_map(|pairs| {
                DataGraph::from_edges(pairs.into_iter().filter(|(a, b)| a != b).map(|(a, b)| DataEdge::pair(a, b)))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn agrees_with_subset_enumeration(g in arb_graph()) {
                for text in ["k=3; e 0 1; e 1 2; e 0 2", "k=4; e 0 1; e 1 2; e 2 3", "k=4; e 0 1; e 1 2; e 2 3; e 0 3"] {
                    let h = pat(text);
                    let c = exact_count(&g, &h).unwrap();
                    prop_assert_eq!(c.copies, subset_enumeration_count(&g, &h));
                    prop_assert_eq!(c.injective_homs, c.copies * automorphism_count(&h).unwrap());
                }
            }

            #[test]
            fn deleting_an_edge_never_adds_copies(g in arb_graph(), pick in any::<prop::sample::Index>()) {
                let edges: Vec<DataEdge> = g.edges().cloned().collect();
                prop_assume!(!edges.is_empty());
                let victim = edges[pick.index(edges.len())].clone();
                let smaller = DataGraph::from_edges(edges.into_iter().filter(|e| *e != victim));
                let h = pat("k=3; e 0 1; e 1 2");
                prop_assert!(exact_count(&smaller, &h).unwrap().copies <= exact_count(&g, &h).unwrap().copies);
            }
        }
    }
}
