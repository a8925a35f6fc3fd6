//! Pattern hypergraphs, data hyperedges and strict-turnstile edge streams.
//!
//! A [`PatternGraph`] is the small fixed hypergraph being counted. Its vertices
//! are the indices `0..k`. The data side is described by [`DataEdge`] values over
//! opaque `u64` vertex ids, arriving as signed [`EdgeStreamUpdate`]s and
//! optionally materialized into a [`DataGraph`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed};
use thiserror::Error;

/// Opaque data-graph vertex identifier.
pub type VertexId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate hyperedge {0:?}")]
    DuplicateEdge(Vec<usize>),
    #[error("vertex index {index} out of range for k={k}")]
    VertexOutOfRange { index: usize, k: usize },
    #[error("hyperedge must be nonempty")]
    EmptyEdge,
    #[error("hyperedge repeats vertex {0}")]
    RepeatedVertex(u64),
    #[error("pattern must have at least one vertex")]
    NoVertices,
    #[error("negative weight {0} on hyperedge")]
    NegativeWeight(Rational64),
    #[error("weight count {weights} does not match edge count {edges}")]
    WeightCount { weights: usize, edges: usize },
    #[error("deleting {0} would drive its count below zero")]
    NegativeCount(DataEdge),
}

/// The fixed pattern `H` on vertex set `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    k: usize,
    edges: Vec<Vec<usize>>,
    labels: Option<Vec<Option<String>>>,
    connected: bool,
}

impl PatternGraph {
    /// Builds a validated pattern. Each edge is sorted; edges keep their input
    /// order, which defines edge indices everywhere else in the crate.
    pub fn new(k: usize, edges: Vec<Vec<usize>>) -> Result<Self, HypergraphError> {
        if k == 0 {
            return Err(HypergraphError::NoVertices);
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut canonical = Vec::with_capacity(edges.len());
        for mut edge in edges {
            if edge.is_empty() {
                return Err(HypergraphError::EmptyEdge);
            }
            edge.sort_unstable();
            for pair in edge.windows(2) {
                if pair[0] == pair[1] {
                    return Err(HypergraphError::RepeatedVertex(pair[0] as u64));
                }
            }
            if let Some(&index) = edge.iter().find(|&&v| v >= k) {
                return Err(HypergraphError::VertexOutOfRange { index, k });
            }
            if !seen.insert(edge.clone()) {
                return Err(HypergraphError::DuplicateEdge(edge));
            }
            canonical.push(edge);
        }
        let connected = hyperedges_connected(k, &canonical);
        Ok(Self {
            k,
            edges: canonical,
            labels: None,
            connected,
        })
    }

    /// Attaches a name tag to vertex `index`.
    pub fn set_label(&mut self, index: usize, name: impl Into<String>) -> Result<(), HypergraphError> {
        if index >= self.k {
            return Err(HypergraphError::VertexOutOfRange { index, k: self.k });
        }
        let labels = self.labels.get_or_insert_with(|| vec![None; self.k]);
        labels[index] = Some(name.into());
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> Option<&[Option<String>]> {
        self.labels.as_deref()
    }

    /// Pattern vertex carrying the label `name`, if any.
    pub fn vertex_with_label(&self, name: &str) -> Option<usize> {
        self.labels
            .as_ref()?
            .iter()
            .position(|l| l.as_deref() == Some(name))
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// True when every hyperedge has exactly two vertices.
    pub fn is_graph(&self) -> bool {
        self.edges.iter().all(|e| e.len() == 2)
    }

    /// Index of the edge equal to the sorted vertex set `edge`.
    pub fn edge_index(&self, edge: &[usize]) -> Option<usize> {
        self.edges.iter().position(|e| e.as_slice() == edge)
    }

    /// Number of pattern edges containing each vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.k];
        for e in &self.edges {
            for &v in e {
                deg[v] += 1;
            }
        }
        deg
    }

    /// Sorted list of distinct edge arities.
    pub fn arities(&self) -> Vec<usize> {
        let mut a: Vec<usize> = self.edges.iter().map(Vec::len).collect();
        a.sort_unstable();
        a.dedup();
        a
    }

    /// Renders the pattern in the text format accepted by [`parse_pattern`].
    pub fn to_text(&self) -> String {
        let mut out = format!("k={}\n", self.k);
        for e in &self.edges {
            out.push('e');
            for v in e {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        if let Some(labels) = &self.labels {
            for (i, l) in labels.iter().enumerate() {
                if let Some(name) = l {
                    out.push_str(&format!("label {i} {name}\n"));
                }
            }
        }
        out
    }
}

impl FromStr for PatternGraph {
    type Err = HypergraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_pattern(s)
    }
}

fn hyperedges_connected(k: usize, edges: &[Vec<usize>]) -> bool {
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges {
        let root = find(&mut parent, e[0]);
        for &v in &e[1..] {
            let r = find(&mut parent, v);
            parent[r] = root;
        }
    }
    let root = find(&mut parent, 0);
    (1..k).all(|v| find(&mut parent, v) == root)
}

/// Parses the pattern text format.
///
/// ```text
/// # triangle
/// k=3
/// e 0 1
/// e 1 2
/// e 0 2
/// label 0 customer
/// ```
///
/// Lines may also be separated by `;`, so `"k=3; e 0 1; e 1 2; e 0 2"` is valid.
pub fn parse_pattern(text: &str) -> Result<PatternGraph, HypergraphError> {
    let mut k = None;
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for (line_no, raw) in logical_lines(text) {
        let malformed = |message: String| HypergraphError::Malformed { line: line_no, message };
        let Some(k_value) = k else {
            let value = raw
                .strip_prefix("k=")
                .or_else(|| raw.strip_prefix("k ="))
                .ok_or_else(|| malformed(format!("expected `k=<int>`, found `{raw}`")))?;
            k = Some(
                value
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| malformed(format!("bad vertex count: {e}")))?,
            );
            continue;
        };
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("e") => {
                let edge = tokens
                    .map(|t| t.parse::<usize>().map_err(|e| malformed(format!("bad vertex `{t}`: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if edge.is_empty() {
                    return Err(malformed("edge line lists no vertices".into()));
                }
                edges.push(edge);
            }
            Some("label") => {
                let index = tokens
                    .next()
                    .ok_or_else(|| malformed("label line needs a vertex index".into()))?
                    .parse::<usize>()
                    .map_err(|e| malformed(format!("bad label index: {e}")))?;
                let name = tokens
                    .next()
                    .ok_or_else(|| malformed("label line needs a name".into()))?;
                if tokens.next().is_some() {
                    return Err(malformed("label names may not contain whitespace".into()));
                }
                if index >= k_value {
                    return Err(HypergraphError::VertexOutOfRange { index, k: k_value });
                }
                labels.push((index, name.to_string()));
            }
            Some(other) => return Err(malformed(format!("unknown directive `{other}`"))),
            None => unreachable!("logical_lines skips blank lines"),
        }
    }
    let k = k.ok_or(HypergraphError::Malformed {
        line: 0,
        message: "missing `k=<int>` header".into(),
    })?;
    let mut pattern = PatternGraph::new(k, edges)?;
    for (index, name) in labels {
        pattern.set_label(index, name)?;
    }
    Ok(pattern)
}

/// Yields `(1-based line number, trimmed content)` with comments and blanks removed.
fn logical_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().flat_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("");
        line.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(move |s| (i + 1, s))
    })
}

/// A pattern with rational edge weights where empty and repeated edges are
/// allowed. This is the input to the modified cover number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedPattern {
    k: usize,
    edges: Vec<Vec<usize>>,
    weights: Vec<Rational64>,
}

impl WeightedPattern {
    pub fn new(k: usize, edges: Vec<Vec<usize>>, weights: Vec<Rational64>) -> Result<Self, HypergraphError> {
        if weights.len() != edges.len() {
            return Err(HypergraphError::WeightCount {
                weights: weights.len(),
                edges: edges.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(HypergraphError::NegativeWeight(*w));
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for mut e in edges {
            e.sort_unstable();
            e.dedup();
            if let Some(&index) = e.iter().find(|&&v| v >= k) {
                return Err(HypergraphError::VertexOutOfRange { index, k });
            }
            canonical.push(e);
        }
        Ok(Self {
            k,
            edges: canonical,
            weights,
        })
    }

    /// Unit weights on every edge of `pattern`.
    pub fn unit(pattern: &PatternGraph) -> Self {
        Self {
            k: pattern.k(),
            edges: pattern.edges().to_vec(),
            weights: vec![Rational64::one(); pattern.edge_count()],
        }
    }

    /// Drops edge `index`, keeping every vertex.
    pub fn without_edge(&self, index: usize) -> Self {
        let mut out = self.clone();
        out.edges.remove(index);
        out.weights.remove(index);
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn weights(&self) -> &[Rational64] {
        &self.weights
    }

    pub fn has_empty_edge(&self) -> bool {
        self.edges.iter().any(Vec::is_empty)
    }
}

/// A data hyperedge in canonical (sorted, duplicate-free) form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataEdge(Vec<VertexId>);

impl DataEdge {
    pub fn new(mut endpoints: Vec<VertexId>) -> Result<Self, HypergraphError> {
        if endpoints.is_empty() {
            return Err(HypergraphError::EmptyEdge);
        }
        endpoints.sort_unstable();
        for pair in endpoints.windows(2) {
            if pair[0] == pair[1] {
                return Err(HypergraphError::RepeatedVertex(pair[0]));
            }
        }
        Ok(Self(endpoints))
    }

    /// Two-vertex edge; panics on a self-loop.
    pub fn pair(u: VertexId, v: VertexId) -> Self {
        Self::new(vec![u, v]).expect("self-loops are not edges")
    }

    pub fn endpoints(&self) -> &[VertexId] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for DataEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Insert,
    Delete,
}

impl Sign {
    pub fn delta(self) -> i64 {
        match self {
            Sign::Insert => 1,
            Sign::Delete => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Insert => '+',
            Sign::Delete => '-',
        }
    }
}

/// One signed stream update.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeStreamUpdate {
    pub sign: Sign,
    pub edge: DataEdge,
}

impl EdgeStreamUpdate {
    pub fn insert(edge: DataEdge) -> Self {
        Self { sign: Sign::Insert, edge }
    }

    pub fn delete(edge: DataEdge) -> Self {
        Self { sign: Sign::Delete, edge }
    }
}

impl fmt::Display for EdgeStreamUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign.symbol())?;
        for v in self.edge.endpoints() {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

/// Parses a stream file: one `+ v1 v2 ...` or `- v1 v2 ...` per line.
pub fn parse_stream(text: &str) -> Result<Vec<EdgeStreamUpdate>, HypergraphError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |message: String| HypergraphError::Malformed { line: i + 1, message };
        let mut tokens = line.split_whitespace();
        let sign = match tokens.next() {
            Some("+") => Sign::Insert,
            Some("-") => Sign::Delete,
            Some(other) => return Err(malformed(format!("expected `+` or `-`, found `{other}`"))),
            None => continue,
        };
        let vertices = tokens
            .map(|t| t.parse::<u64>().map_err(|e| malformed(format!("bad vertex id `{t}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let edge = DataEdge::new(vertices).map_err(|e| malformed(e.to_string()))?;
        out.push(EdgeStreamUpdate { sign, edge });
    }
    Ok(out)
}

/// Renders updates in the stream file format.
pub fn write_stream(updates: &[EdgeStreamUpdate]) -> String {
    let mut out = String::with_capacity(updates.len() * 12);
    for u in updates {
        out.push_str(&u.to_string());
        out.push('\n');
    }
    out
}

/// Materialized data graph with per-edge multiplicities.
///
/// Presence is multiplicity at least one; multiplicity exists only so that
/// deletions can be validated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataGraph {
    edge_counts: HashMap<DataEdge, u64>,
    degrees: HashMap<VertexId, usize>,
}

impl DataGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from a stream, failing on the first strict-turnstile violation.
    pub fn from_stream<'a>(updates: impl IntoIterator<Item = &'a EdgeStreamUpdate>) -> Result<Self, HypergraphError> {
        let mut g = Self::new();
        for u in updates {
            g.apply_update(u)?;
        }
        Ok(g)
    }

    /// Graph with each edge present once.
    pub fn from_edges(edges: impl IntoIterator<Item = DataEdge>) -> Self {
        let mut g = Self::new();
        for e in edges {
            g.apply_update(&EdgeStreamUpdate::insert(e))
                .expect("insertions never violate the turnstile contract");
        }
        g
    }

    /// Applies one update. On error the graph is unchanged.
    pub fn apply_update(&mut self, u: &EdgeStreamUpdate) -> Result<(), HypergraphError> {
        match u.sign {
            Sign::Insert => {
                let count = self.edge_counts.entry(u.edge.clone()).or_insert(0);
                *count += 1;
                if *count == 1 {
                    for &v in u.edge.endpoints() {
                        *self.degrees.entry(v).or_insert(0) += 1;
                    }
                }
            }
            Sign::Delete => {
                let Some(count) = self.edge_counts.get_mut(&u.edge) else {
                    return Err(HypergraphError::NegativeCount(u.edge.clone()));
                };
                *count -= 1;
                if *count == 0 {
                    self.edge_counts.remove(&u.edge);
                    for &v in u.edge.endpoints() {
                        let d = self.degrees.get_mut(&v).expect("degree tracked for present edge");
                        *d -= 1;
                        if *d == 0 {
                            self.degrees.remove(&v);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn count(&self, edge: &DataEdge) -> u64 {
        self.edge_counts.get(edge).copied().unwrap_or(0)
    }

    pub fn contains(&self, edge: &DataEdge) -> bool {
        self.edge_counts.contains_key(edge)
    }

    /// Number of distinct present edges.
    pub fn m(&self) -> usize {
        self.edge_counts.len()
    }

    /// Number of vertices incident to at least one present edge.
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.values().copied().max().unwrap_or(0)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.degrees.get(&v).copied().unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = &DataEdge> {
        self.edge_counts.keys()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.degrees.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_semicolon_separated_triangle() {
        let h = parse_pattern("k=3; e 0 1; e 1 2; e 0 2").unwrap();
        assert_eq!(h.k(), 3);
        assert_eq!(h.edges(), &[vec![0, 1], vec![1, 2], vec![0, 2]]);
        assert!(h.is_connected());
        assert!(h.is_graph());
    }

    #[test]
    fn parses_path_with_comments_and_labels() {
        let text = "# P4\nk=4\ne 0 1 # first\ne 2 1\n\ne 2 3\nlabel 0 users\nlabel 3 items\n";
        let h = parse_pattern(text).unwrap();
        assert_eq!(h.edges()[1], vec![1, 2]);
        assert!(h.is_connected());
        assert_eq!(h.vertex_with_label("items"), Some(3));
        assert_eq!(parse_pattern(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn rejects_duplicates_and_bad_indices() {
        assert_eq!(
            parse_pattern("k=2; e 0 1; e 0 1"),
            Err(HypergraphError::DuplicateEdge(vec![0, 1]))
        );
        assert_eq!(
            parse_pattern("k=2; e 1 0; e 0 1"),
            Err(HypergraphError::DuplicateEdge(vec![0, 1]))
        );
        assert_eq!(
            parse_pattern("k=2; e 0 2"),
            Err(HypergraphError::VertexOutOfRange { index: 2, k: 2 })
        );
        assert!(matches!(parse_pattern("e 0 1"), Err(HypergraphError::Malformed { .. })));
        assert!(matches!(parse_pattern("k=3; f 0 1"), Err(HypergraphError::Malformed { .. })));
        assert!(matches!(parse_pattern("k=3; e 0 x"), Err(HypergraphError::Malformed { .. })));
        assert!(matches!(parse_pattern("k=3; e 1 1"), Err(HypergraphError::RepeatedVertex(1))));
        assert!(matches!(parse_pattern(""), Err(HypergraphError::Malformed { line: 0, .. })));
    }

    #[test]
    fn disconnected_pattern_is_flagged() {
        let h = parse_pattern("k=4; e 0 1; e 2 3").unwrap();
        assert!(!h.is_connected());
        let isolated = parse_pattern("k=3; e 0 1").unwrap();
        assert!(!isolated.is_connected());
        let hyper = parse_pattern("k=3; e 0 1 2").unwrap();
        assert!(hyper.is_connected());
        assert!(!hyper.is_graph());
    }

    #[test]
    fn data_edge_canonical_form() {
        assert_eq!(DataEdge::new(vec![5, 1, 3]).unwrap(), DataEdge::new(vec![3, 5, 1]).unwrap());
        assert_eq!(DataEdge::new(vec![2, 2]), Err(HypergraphError::RepeatedVertex(2)));
        assert_eq!(DataEdge::new(vec![]), Err(HypergraphError::EmptyEdge));
    }

    #[test]
    fn insert_then_delete_cancels() {
        let mut g = DataGraph::new();
        g.apply_update(&EdgeStreamUpdate::insert(DataEdge::pair(1, 2))).unwrap();
        g.apply_update(&EdgeStreamUpdate::delete(DataEdge::pair(2, 1))).unwrap();
        assert_eq!(g.m(), 0);
        assert_eq!(g.n(), 0);
        assert_eq!(g, DataGraph::new());
    }

    #[test]
    fn parallel_inserts_count_once_for_presence() {
        let mut g = DataGraph::new();
        let e = DataEdge::pair(1, 2);
        g.apply_update(&EdgeStreamUpdate::insert(e.clone())).unwrap();
        g.apply_update(&EdgeStreamUpdate::insert(e.clone())).unwrap();
        assert_eq!(g.count(&e), 2);
        assert_eq!(g.m(), 1);
        assert_eq!(g.max_degree(), 1);
        g.apply_update(&EdgeStreamUpdate::delete(e.clone())).unwrap();
        assert!(g.contains(&e));
    }

    #[test]
    fn delete_on_empty_graph_is_negative_count() {
        let mut g = DataGraph::new();
        let e = DataEdge::pair(3, 4);
        assert_eq!(
            g.apply_update(&EdgeStreamUpdate::delete(e.clone())),
            Err(HypergraphError::NegativeCount(e))
        );
        assert_eq!(g.m(), 0);
    }

    #[test]
    fn max_degree_examples() {
        assert_eq!(DataGraph::new().max_degree(), 0);
        let triangle = DataGraph::from_edges([DataEdge::pair(1, 2), DataEdge::pair(2, 3), DataEdge::pair(1, 3)]);
        assert_eq!(triangle.max_degree(), 2);
        let star = DataGraph::from_edges((1..=5).map(|leaf| DataEdge::pair(0, leaf)));
        assert_eq!(star.max_degree(), 5);
        assert_eq!(star.n(), 6);
    }

    #[test]
    fn stream_text_round_trip() {
        let text = "+ 1 2\n- 2 1\n# comment\n\n+ 7 3 9\n";
        let updates = parse_stream(text).unwrap();
        assert_eq!(updates.len(), 3);
        assert_eq!(updates[1].sign, Sign::Delete);
        assert_eq!(updates[2].edge.endpoints(), &[3, 7, 9]);
        assert_eq!(parse_stream(&write_stream(&updates)).unwrap(), updates);
        assert!(matches!(parse_stream("* 1 2"), Err(HypergraphError::Malformed { line: 1, .. })));
        assert!(matches!(parse_stream("+ 1 1"), Err(HypergraphError::Malformed { .. })));
    }

    #[test]
    fn weighted_pattern_validation() {
        let w = WeightedPattern::new(2, vec![vec![], vec![1, 0]], vec![Rational64::new(1, 2), Rational64::one()]).unwrap();
        assert!(w.has_empty_edge());
        assert_eq!(w.edges()[1], vec![0, 1]);
        assert!(matches!(
            WeightedPattern::new(2, vec![vec![0]], vec![Rational64::new(-1, 2)]),
            Err(HypergraphError::NegativeWeight(_))
        ));
        assert!(matches!(
            WeightedPattern::new(2, vec![vec![0]], vec![]),
            Err(HypergraphError::WeightCount { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_pattern() -> impl Strategy<Value = PatternGraph> {
            (1usize..7).prop_flat_map(|k| {
                proptest::collection::btree_set(proptest::collection::btree_set(0..k, 1..=k.min(3)), 0..8)
                    .prop_map(move |set| {
                        let edges = set.into_iter().map(|e| e.into_iter().collect()).collect();
                        PatternGraph::new(k, edges).unwrap()
                    })
            })
        }

        proptest! {
            #[test]
            fn pattern_text_round_trips(h in arb_pattern()) {
                prop_assert_eq!(parse_pattern(&h.to_text()).unwrap(), h);
            }

            #[test]
            fn data_edge_order_invariant(mut vs in proptest::collection::btree_set(any::<u64>(), 1..6)
                .prop_map(|s| s.into_iter().collect::<Vec<_>>()), seed in any::<u64>()) {
                let a = DataEdge::new(vs.clone()).unwrap();
                let n = vs.len();
                vs.rotate_left((seed as usize) % n);
                vs.reverse();
                prop_assert_eq!(a, DataEdge::new(vs).unwrap());
            }

            #[test]
            fn final_graph_independent_of_valid_order(
                edges in proptest::collection::vec((0u64..6, 0u64..6), 1..20),
                keys in proptest::collection::vec(any::<u32>(), 40),
            ) {
                // Each inserted edge may later be deleted; any ordering that keeps
                // every delete after its matching insert is strict-turnstile valid.
                let edges: Vec<DataEdge> = edges.into_iter().filter(|(a, b)| a != b)
                    .map(|(a, b)| DataEdge::pair(a, b)).collect();
                let mut ops: Vec<(u32, EdgeStreamUpdate)> = Vec::new();
                for (i, e) in edges.iter().enumerate() {
                    let t = keys[i % keys.len()];
                    ops.push((t / 2, EdgeStreamUpdate::insert(e.clone())));
                    if i % 3 == 0 {
                        ops.push((t / 2 + keys[(i + 7) % keys.len()] / 2 + 1, EdgeStreamUpdate::delete(e.clone())));
                    }
                }
                let forward: Vec<_> = {
                    let mut o = ops.clone();
                    o.sort_by_key(|(t, _)| *t);
                    o.into_iter().map(|(_, u)| u).collect()
                };
                let inserts_first: Vec<_> = ops.iter().filter(|(_, u)| u.sign == Sign::Insert)
                    .chain(ops.iter().filter(|(_, u)| u.sign == Sign::Delete))
                    .map(|(_, u)| u.clone()).collect();
                let a = DataGraph::from_stream(&forward).unwrap();
                let b = DataGraph::from_stream(&inserts_first).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
