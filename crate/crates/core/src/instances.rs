//! Stream generators: planted copies, the lower-bound reduction, and random
//! bounded-degree graphs. Every generator is a pure function of its seed.

use std::collections::{HashMap, HashSet};

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hypergraph::{DataEdge, DataGraph, EdgeStreamUpdate, PatternGraph, VertexId};
use crate::oracle::{exact_count, CopyCount, OracleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("planting needs a connected pattern with at least two edges")]
    SingleEdgePattern,
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),
    #[error("cannot place {m} edges of arity {arity} on {n} vertices with degree at most {d}")]
    Infeasible { n: u64, m: u64, d: u64, arity: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlantedOptions {
    /// Chain consecutive copies through a shared vertex. The true count then
    /// comes from the oracle instead of the construction.
    pub overlap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub stream: Vec<EdgeStreamUpdate>,
    pub true_count: u64,
    pub n: u64,
    pub m: u64,
    pub max_degree: usize,
}

impl PlantedInstance {
    pub fn graph(&self) -> DataGraph {
        DataGraph::from_stream(&self.stream).expect("generated streams are insert-only")
    }

    /// Whether the oracle agrees with `true_count`.
    pub fn verify(&self, h: &PatternGraph) -> Result<bool, OracleError> {
        Ok(exact_count(&self.graph(), h)?.copies == self.true_count)
    }
}

fn check_plantable(h: &PatternGraph) -> Result<(), InstanceError> {
    if h.edge_count() < 2 || !h.is_connected() {
        return Err(InstanceError::SingleEdgePattern);
    }
    Ok(())
}

pub fn gen_planted(h: &PatternGraph, copies: u64, pad_edges: u64, seed: u64) -> Result<PlantedInstance, InstanceError> {
    gen_planted_with(h, copies, pad_edges, seed, PlantedOptions::default())
}

/// `copies` vertex-disjoint copies of `h` plus `pad_edges` pairwise-disjoint
/// edges (arity of the pattern's first edge), in shuffled order.
pub fn gen_planted_with(
    h: &PatternGraph,
    copies: u64,
    pad_edges: u64,
    seed: u64,
    options: PlantedOptions,
) -> Result<PlantedInstance, InstanceError> {
    check_plantable(h)?;
    let k = h.k() as u64;
    // With overlap, copy c reuses the last vertex of copy c-1 as its vertex 0.
    let stride = if options.overlap { k - 1 } else { k };
    let mut edges = Vec::with_capacity((copies as usize) * h.edge_count() + pad_edges as usize);
    for c in 0..copies {
        let base = c * stride;
        for e in h.edges() {
            let vs = e.iter().map(|&a| base + a as u64).collect();
            edges.push(DataEdge::new(vs).expect("pattern edges have distinct vertices"));
        }
    }
    let mut next = if copies == 0 { 0 } else { (copies - 1) * stride + k };
    let pad_arity = h.edges()[0].len() as u64;
    for _ in 0..pad_edges {
        edges.push(DataEdge::new((next..next + pad_arity).collect()).expect("fresh vertices"));
        next += pad_arity;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    let stream: Vec<EdgeStreamUpdate> = edges.into_iter().map(EdgeStreamUpdate::insert).collect();
    let graph = DataGraph::from_stream(&stream).expect("insert-only");
    let true_count = if options.overlap { exact_count(&graph, h)?.copies } else { copies };
    Ok(PlantedInstance {
        true_count,
        n: graph.n() as u64,
        m: graph.m() as u64,
        max_degree: graph.max_degree(),
        stream,
    })
}

/// Independent planted instances, one per seed, generated in parallel.
pub fn gen_planted_batch(
    h: &PatternGraph,
    copies: u64,
    pad_edges: u64,
    seeds: &[u64],
) -> Result<Vec<PlantedInstance>, InstanceError> {
    seeds.par_iter().map(|&s| gen_planted(h, copies, pad_edges, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Promise {
    /// Window bits XOR to zero on every index.
    Yes,
    /// Window bits XOR to one on every index.
    No,
}

/// Sum of independent binomials `Bi(trials, prob)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialSum {
    pub components: Vec<(u64, f64)>,
}

impl BinomialSum {
    pub fn mean(&self) -> f64 {
        self.components.iter().map(|&(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        self.components.iter().map(|&(n, p)| n as f64 * p * (1.0 - p)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionInstance {
    pub stream: Vec<EdgeStreamUpdate>,
    /// One bit string of length `n` per pattern edge; `true` is a one bit.
    pub strings: Vec<Vec<bool>>,
    pub promise: Promise,
    pub epsilon: Rational64,
    pub t_prime: u64,
    /// Number of indices `N`; vertices are `[N] × V(H)`.
    pub blocks: u64,
    /// Length of the promise window `εT′`.
    pub window: u64,
    pub expected: BinomialSum,
}

impl ReductionInstance {
    /// Indices `i < T′` where every string has a zero bit.
    pub fn zero_index_count(&self) -> u64 {
        (0..self.t_prime as usize)
            .filter(|&i| self.strings.iter().all(|x| !x[i]))
            .count() as u64
    }
}

/// Data vertex id of `(index, pattern_vertex)`.
pub fn reduction_vertex_id(index: u64, pattern_vertex: usize, k: usize) -> VertexId {
    index * k as u64 + pattern_vertex as u64
}

struct ReductionShape {
    t_prime: u64,
    window: u64,
    blocks: u64,
}

fn reduction_shape(h: &PatternGraph, n: u64, t: u64, epsilon: Rational64) -> Result<ReductionShape, InstanceError> {
    let domain = |msg: String| Err(InstanceError::ParameterDomain(msg));
    if h.edge_count() < 2 || !h.is_connected() {
        return domain("pattern must be connected with more than one edge".into());
    }
    if epsilon <= Rational64::zero() || epsilon > Rational64::one() {
        return domain(format!("epsilon {epsilon} must lie in (0, 1]"));
    }
    if t == 0 || t.saturating_mul(10) > n {
        return domain(format!("need 1 <= T <= n/10, got T={t}, n={n}"));
    }
    let scaled = epsilon * Rational64::from_integer(t as i64);
    if !scaled.is_integer() {
        return domain(format!("epsilon*T = {scaled} must be an integer"));
    }
    let edges = h.edge_count() as u32;
    let t_prime = 1u64
        .checked_shl(edges)
        .and_then(|f| f.checked_mul(t))
        .filter(|&tp| tp <= n)
        .ok_or_else(|| InstanceError::ParameterDomain(format!("T' = 2^{edges}*{t} exceeds n = {n}")))?;
    let window = (scaled.to_integer() as u64) << edges;
    let blocks = t_prime + (n - t_prime) * edges as u64;
    Ok(ReductionShape { t_prime, window, blocks })
}

/// The YES and NO reduction instances built from one seed. They share every
/// random choice; only the last edge's bits inside the promise window differ.
pub fn gen_reduction_pair(
    h: &PatternGraph,
    n: u64,
    t: u64,
    epsilon: Rational64,
    seed: u64,
) -> Result<(ReductionInstance, ReductionInstance), InstanceError> {
    let shape = reduction_shape(h, n, t, epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edge_count = h.edge_count();
    let nu = n as usize;
    let mut strings: Vec<Vec<bool>> = (0..edge_count).map(|_| (0..nu).map(|_| rng.gen()).collect()).collect();
    let mut perm_e: Vec<Vec<u64>> = Vec::with_capacity(edge_count);
    let private = n - shape.t_prime;
    for idx in 0..edge_count as u64 {
        let mut l: Vec<u64> = (0..shape.t_prime)
            .chain((0..private).map(|r| shape.t_prime + idx * private + r))
            .collect();
        l.shuffle(&mut rng);
        perm_e.push(l);
    }
    let perm_v: Vec<Vec<u64>> = (0..h.k())
        .map(|_| {
            let mut p: Vec<u64> = (0..shape.blocks).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();

    let build = |strings: Vec<Vec<bool>>, promise: Promise| {
        let mut stream = Vec::new();
        for (idx, e) in h.edges().iter().enumerate() {
            // Walk L_e in the order given by the edge's permutation.
            for &j in &perm_e[idx] {
                let source = if j < shape.t_prime {
                    j
                } else {
                    shape.t_prime + (j - shape.t_prime - idx as u64 * private)
                };
                if strings[idx][source as usize] {
                    continue;
                }
                let vs = e
                    .iter()
                    .map(|&v| reduction_vertex_id(perm_v[v][j as usize], v, h.k()))
                    .collect();
                stream.push(EdgeStreamUpdate::insert(DataEdge::new(vs).expect("distinct pattern vertices")));
            }
        }
        let e = edge_count as i32;
        let base = ((shape.t_prime - shape.window), 0.5f64.powi(e));
        let components = match promise {
            Promise::No => vec![base],
            Promise::Yes => vec![base, (shape.window, 0.5f64.powi(e - 1))],
        };
        ReductionInstance {
            stream,
            strings,
            promise,
            epsilon,
            t_prime: shape.t_prime,
            blocks: shape.blocks,
            window: shape.window,
            expected: BinomialSum { components },
        }
    };

    let last = edge_count - 1;
    let force = |strings: &mut Vec<Vec<bool>>, target: bool| {
        for i in 0..shape.window as usize {
            let others = strings[..last].iter().fold(false, |acc, x| acc ^ x[i]);
            strings[last][i] = others ^ target;
        }
    };
    let mut no_strings = strings.clone();
    force(&mut strings, false);
    force(&mut no_strings, true);
    Ok((build(strings, Promise::Yes), build(no_strings, Promise::No)))
}

pub fn gen_reduction(
    h: &PatternGraph,
    n: u64,
    t: u64,
    epsilon: Rational64,
    promise: Promise,
    seed: u64,
) -> Result<ReductionInstance, InstanceError> {
    let (yes, no) = gen_reduction_pair(h, n, t, epsilon, seed)?;
    Ok(match promise {
        Promise::Yes => yes,
        Promise::No => no,
    })
}

/// `m` distinct random edges of the given arity on vertices `0..n`, each
/// vertex in at most `d` edges.
pub fn gen_random_bounded(n: u64, m: u64, d: u64, arity: usize, seed: u64) -> Result<Vec<EdgeStreamUpdate>, InstanceError> {
    let infeasible = || InstanceError::Infeasible { n, m, d, arity };
    if arity == 0 || (arity as u64) > n || (m as u128) * (arity as u128) > (n as u128) * (d as u128) {
        return Err(infeasible());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Vertices with spare degree, kept as a swap-remove pool.
    let mut pool: Vec<u64> = if d == 0 { Vec::new() } else { (0..n).collect() };
    let mut degree: HashMap<u64, u64> = HashMap::new();
    let mut seen: HashSet<DataEdge> = HashSet::new();
    let mut stream = Vec::with_capacity(m as usize);
    let stall_limit = 1000 + 20 * m;
    let mut failures = 0;
    while (stream.len() as u64) < m {
        if pool.len() < arity || failures > stall_limit {
            return Err(infeasible());
        }
        let picks: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), arity).into_vec();
        let edge = DataEdge::new(picks.iter().map(|&i| pool[i]).collect()).expect("distinct pool entries");
        if !seen.insert(edge.clone()) {
            failures += 1;
            continue;
        }
        failures = 0;
        let mut saturated: Vec<usize> = Vec::new();
        for &i in &picks {
            let deg = degree.entry(pool[i]).or_insert(0);
            *deg += 1;
            if *deg == d {
                saturated.push(i);
            }
        }
        saturated.sort_unstable_by(|a, b| b.cmp(a));
        for i in saturated {
            pool.swap_remove(i);
        }
        stream.push(EdgeStreamUpdate::insert(edge));
    }
    Ok(stream)
}

/// Oracle count of a reduction instance, for cross-checking the index identity.
pub fn reduction_copy_count(instance: &ReductionInstance, h: &PatternGraph) -> Result<CopyCount, OracleError> {
    exact_count(&DataGraph::from_stream(&instance.stream).expect("insert-only"), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::parse_pattern;

    fn triangle() -> PatternGraph {
        parse_pattern("k=3; e 0 1; e 1 2; e 0 2").unwrap()
    }

    fn path4() -> PatternGraph {
        parse_pattern("k=4; e 0 1; e 1 2; e 2 3").unwrap()
    }

    #[test]
    fn planted_examples() {
        let a = gen_planted(&triangle(), 5, 20, 1).unwrap();
        assert_eq!(a.stream.len(), 35);
        assert_eq!((a.true_count, a.m, a.n, a.max_degree), (5, 35, 55, 2));
        assert!(a.verify(&triangle()).unwrap());
        let b = gen_planted(&triangle(), 0, 10, 2).unwrap();
        assert_eq!(exact_count(&b.graph(), &triangle()).unwrap().copies, 0);
        let c = gen_planted(&path4(), 3, 0, 3).unwrap();
        assert_eq!(c.stream.len(), 9);
        assert_eq!(exact_count(&c.graph(), &path4()).unwrap().copies, 3);
    }

    #[test]
    fn planted_rejects_single_edge() {
        let edge = parse_pattern("k=2; e 0 1").unwrap();
        assert_eq!(gen_planted(&edge, 1, 1, 0).unwrap_err(), InstanceError::SingleEdgePattern);
    }

    #[test]
    fn planted_is_deterministic_and_shuffled() {
        let a = gen_planted(&triangle(), 50, 50, 9).unwrap();
        assert_eq!(a, gen_planted(&triangle(), 50, 50, 9).unwrap());
        assert_ne!(a.stream, gen_planted(&triangle(), 50, 50, 10).unwrap().stream);
        let batch = gen_planted_batch(&triangle(), 50, 50, &[9, 10]).unwrap();
        assert_eq!(batch[0], a);
    }

    #[test]
    fn planted_hypergraph_pattern() {
        let h = parse_pattern("k=5; e 0 1 2; e 2 3 4").unwrap();
        let inst = gen_planted(&h, 7, 11, 4).unwrap();
        assert!(inst.verify(&h).unwrap());
        assert_eq!(inst.max_degree, 2);
    }

    #[test]
    fn overlapping_copies_use_oracle_truth() {
        // Chained triangles sharing a vertex: no extra triangles appear.
        let inst = gen_planted_with(&triangle(), 10, 5, 1, PlantedOptions { overlap: true }).unwrap();
        assert_eq!(inst.true_count, 10);
        assert_eq!(inst.max_degree, 4);
        // Chained paths create extra paths through the shared vertices.
        let p = gen_planted_with(&path4(), 4, 0, 1, PlantedOptions { overlap: true }).unwrap();
        assert!(p.true_count > 4);
        assert!(p.verify(&path4()).unwrap());
    }

    #[test]
    fn reduction_domain_checks() {
        let tri = triangle();
        let half = Rational64::new(1, 2);
        assert!(gen_reduction(&tri, 200, 20, half, Promise::Yes, 0).is_ok());
        for (n, t, eps) in [
            (200, 21, half),
            (200, 20, Rational64::new(1, 3)),
            (200, 20, Rational64::zero()),
            (200, 20, Rational64::new(3, 2)),
        ] {
            assert!(
                matches!(gen_reduction(&tri, n, t, eps, Promise::No, 0), Err(InstanceError::ParameterDomain(_))),
                "n={n} t={t} eps={eps}"
            );
        }
        let edge = parse_pattern("k=2; e 0 1").unwrap();
        assert!(gen_reduction(&edge, 200, 20, half, Promise::No, 0).is_err());
        // T' = 16 * 10 exceeds n.
        let c4 = parse_pattern("k=4; e 0 1; e 1 2; e 2 3; e 0 3").unwrap();
        assert!(matches!(
            gen_reduction(&c4, 100, 10, half, Promise::No, 0),
            Err(InstanceError::ParameterDomain(_))
        ));
    }

    #[test]
    fn reduction_identity_and_degrees() {
        let tri = triangle();
        for seed in 0..5 {
            let (yes, no) = gen_reduction_pair(&tri, 200, 20, Rational64::new(1, 2), seed).unwrap();
            assert_eq!((yes.t_prime, yes.window, yes.blocks), (160, 80, 280));
            for inst in [&yes, &no] {
                let g = DataGraph::from_stream(&inst.stream).unwrap();
                assert!(g.max_degree() <= tri.edge_count());
                assert_eq!(reduction_copy_count(inst, &tri).unwrap().copies, inst.zero_index_count());
                for i in 0..inst.window as usize {
                    let parity = inst.strings.iter().fold(false, |acc, x| acc ^ x[i]);
                    assert_eq!(parity, inst.promise == Promise::No);
                }
            }
            // Only the last string's window differs between the variants.
            assert_eq!(yes.strings[..2], no.strings[..2]);
            assert_eq!(yes.strings[2][80..], no.strings[2][80..]);
        }
    }

    #[test]
    fn reduction_no_at_full_epsilon_has_no_copies() {
        let tri = triangle();
        let no = gen_reduction(&tri, 200, 20, Rational64::one(), Promise::No, 3).unwrap();
        assert_eq!(no.window, no.t_prime);
        assert_eq!(no.zero_index_count(), 0);
        assert_eq!(reduction_copy_count(&no, &tri).unwrap().copies, 0);
        assert_eq!(no.expected.mean(), 0.0);
    }

    #[test]
    fn reduction_hyperedge_pattern() {
        let h = parse_pattern("k=4; e 0 1 2; e 1 2 3").unwrap();
        let inst = gen_reduction(&h, 100, 10, Rational64::new(1, 2), Promise::Yes, 1).unwrap();
        assert_eq!(inst.t_prime, 40);
        assert_eq!(reduction_copy_count(&inst, &h).unwrap().copies, inst.zero_index_count());
    }

    #[test]
    fn random_bounded_examples() {
        let s = gen_random_bounded(100, 50, 1, 2, 1).unwrap();
        let g = DataGraph::from_stream(&s).unwrap();
        assert_eq!((g.m(), g.n(), g.max_degree()), (50, 100, 1));
        assert_eq!(exact_count(&g, &triangle()).unwrap().copies, 0);
        let big = gen_random_bounded(1000, 1000, 3, 2, 2).unwrap();
        let g = DataGraph::from_stream(&big).unwrap();
        assert_eq!(g.m(), 1000);
        assert!(g.max_degree() <= 3);
        assert_eq!(big, gen_random_bounded(1000, 1000, 3, 2, 2).unwrap());
        let hyper = gen_random_bounded(60, 30, 2, 3, 5).unwrap();
        assert!(hyper.iter().all(|u| u.edge.arity() == 3));
        assert_eq!(
            gen_random_bounded(10, 11, 2, 2, 0).unwrap_err(),
            InstanceError::Infeasible { n: 10, m: 11, d: 2, arity: 2 }
        );
        assert!(gen_random_bounded(3, 1, 1, 4, 0).is_err());
    }
}
