//! Structural analysis of the pattern: automorphism count and connectivity.

use std::collections::HashSet;

use thiserror::Error;

use crate::hypergraph::PatternGraph;

/// Largest pattern handled by the permutation search.
pub const MAX_AUTOMORPHISM_K: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern has {k} vertices; automorphism search supports at most {MAX_AUTOMORPHISM_K}")]
    TooLarge { k: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternAnalysis {
    pub automorphisms: u64,
    pub connected: bool,
    /// Edge sizes, one entry per edge, sorted.
    pub arities: Vec<usize>,
    pub k: usize,
}

impl PatternAnalysis {
    /// True when `h` has the same vertex count and arity multiset.
    pub fn matches(&self, h: &PatternGraph) -> bool {
        self.k == h.k() && self.arities == arity_multiset(h)
    }
}

fn arity_multiset(h: &PatternGraph) -> Vec<usize> {
    let mut a: Vec<usize> = h.edges().iter().map(Vec::len).collect();
    a.sort_unstable();
    a
}

/// Number of vertex permutations mapping the edge set of `h` onto itself.
pub fn automorphism_count(h: &PatternGraph) -> Result<u64, PatternError> {
    let k = h.k();
    if k > MAX_AUTOMORPHISM_K {
        return Err(PatternError::TooLarge { k });
    }
    let masks: Vec<u32> = h
        .edges()
        .iter()
        .map(|e| e.iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    let edge_set: HashSet<u32> = masks.iter().copied().collect();
    // Edges become checkable once their highest vertex is assigned.
    let mut closing: Vec<Vec<u32>> = vec![Vec::new(); k];
    for &m in &masks {
        closing[31 - m.leading_zeros() as usize].push(m);
    }
    // Vertex signature: degree and sorted incident arities.
    let signature: Vec<Vec<usize>> = (0..k)
        .map(|v| {
            let mut s: Vec<usize> = h.edges().iter().filter(|e| e.contains(&v)).map(Vec::len).collect();
            s.sort_unstable();
            s
        })
        .collect();

    struct Search<'a> {
        k: usize,
        closing: &'a [Vec<u32>],
        edge_set: &'a HashSet<u32>,
        signature: &'a [Vec<usize>],
        image: Vec<usize>,
        used: u32,
    }

    impl Search<'_> {
        fn image_of(&self, mask: u32) -> u32 {
            let mut out = 0;
            let mut m = mask;
            while m != 0 {
                let v = m.trailing_zeros() as usize;
                out |= 1 << self.image[v];
                m &= m - 1;
            }
            out
        }

        fn run(&mut self, v: usize) -> u64 {
            if v == self.k {
                return 1;
            }
            let mut total = 0;
            for target in 0..self.k {
                if self.used & (1 << target) != 0 || self.signature[target] != self.signature[v] {
                    continue;
                }
                self.image[v] = target;
                let ok = self.closing[v].iter().all(|&m| self.edge_set.contains(&self.image_of(m)));
                if ok {
                    self.used |= 1 << target;
                    total += self.run(v + 1);
                    self.used &= !(1 << target);
                }
            }
            total
        }
    }

    let mut search = Search {
        k,
        closing: &closing,
        edge_set: &edge_set,
        signature: &signature,
        image: vec![0; k],
        used: 0,
    };
    // A permutation maps E into E injectively, hence onto E.
    Ok(search.run(0))
}

pub fn analyze(h: &PatternGraph) -> Result<PatternAnalysis, PatternError> {
    Ok(PatternAnalysis {
        automorphisms: automorphism_count(h)?,
        connected: h.is_connected(),
        arities: arity_multiset(h),
        k: h.k(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::parse_pattern;

    fn pat(s: &str) -> PatternGraph {
        parse_pattern(s).unwrap()
    }

    /// Plain enumeration of all k! permutations without pruning.
    fn brute_force(h: &PatternGraph) -> u64 {
        fn perms(k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(k - 1) {
                for pos in 0..k {
                    let mut q = p.clone();
                    q.insert(pos, k - 1);
                    out.push(q);
                }
            }
            out
        }
        let edges: HashSet<Vec<usize>> = h.edges().iter().cloned().collect();
        perms(h.k())
            .into_iter()
            .filter(|p| {
                h.edges().iter().all(|e| {
                    let mut img: Vec<usize> = e.iter().map(|&v| p[v]).collect();
                    img.sort_unstable();
                    edges.contains(&img)
                })
            })
            .count() as u64
    }

    #[test]
    fn small_pattern_counts() {
        assert_eq!(automorphism_count(&pat("k=3; e 0 1; e 1 2; e 0 2")).unwrap(), 6);
        assert_eq!(automorphism_count(&pat("k=4; e 0 1; e 1 2; e 2 3")).unwrap(), 2);
        let c4 = pat("k=4; e 0 1; e 1 2; e 2 3; e 0 3");
        assert_eq!(brute_force(&c4), 8);
        assert_eq!(automorphism_count(&c4).unwrap(), 8);
    }

    #[test]
    fn analyze_examples() {
        let tri = analyze(&pat("k=3; e 0 1; e 1 2; e 0 2")).unwrap();
        assert_eq!(
            tri,
            PatternAnalysis {
                automorphisms: 6,
                connected: true,
                arities: vec![2, 2, 2],
                k: 3
            }
        );
        let two = pat("k=4; e 0 1; e 2 3");
        assert_eq!(brute_force(&two), 8);
        let a = analyze(&two).unwrap();
        assert_eq!((a.automorphisms, a.connected), (8, false));
        let hyper = analyze(&pat("k=3; e 0 1 2")).unwrap();
        assert_eq!((hyper.automorphisms, hyper.connected, hyper.arities.clone()), (6, true, vec![3]));
        assert!(hyper.matches(&pat("k=3; e 2 1 0")));
        assert!(!hyper.matches(&pat("k=3; e 0 1; e 1 2")));
    }

    #[test]
    fn complete_graphs_have_factorial_automorphisms() {
        let mut fact = 1;
        for k in 1..=5usize {
            fact *= k as u64;
            let edges = (0..k).flat_map(|a| (a + 1..k).map(move |b| vec![a, b])).collect::<Vec<_>>();
            let h = PatternGraph::new(k, edges).unwrap();
            assert_eq!(automorphism_count(&h).unwrap(), fact, "K_{k}");
        }
    }

    #[test]
    fn too_large_is_rejected() {
        let h = PatternGraph::new(13, vec![vec![0, 1]]).unwrap();
        assert_eq!(automorphism_count(&h), Err(PatternError::TooLarge { k: 13 }));
        assert!(analyze(&h).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(96))]

            #[test]
            fn relabeling_invariant_and_matches_brute_force(
                (k, edges, perm) in (1usize..7).prop_flat_map(|k| (
                    Just(k),
                    proptest::collection::btree_set(proptest::collection::btree_set(0..k, 1..=k.min(3)), 0..9),
                    Just((0..k).collect::<Vec<usize>>()).prop_shuffle(),
                ))
            ) {
                let edges: Vec<Vec<usize>> = edges.into_iter().map(|e| e.into_iter().collect()).collect();
                let h = PatternGraph::new(k, edges.clone()).unwrap();
                let relabeled = PatternGraph::new(
                    k,
                    edges.iter().map(|e| e.iter().map(|&v| perm[v]).collect()).collect(),
                ).unwrap();
                let a = automorphism_count(&h).unwrap();
                prop_assert_eq!(a, automorphism_count(&relabeled).unwrap());
                prop_assert_eq!(a, brute_force(&h));
                let fact: u64 = (1..=k as u64).product();
                prop_assert_eq!(fact % a, 0);
            }
        }
    }
}
