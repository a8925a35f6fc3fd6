//! Linear vertex-sampling sketch.
//!
//! Every data vertex `v` receives a color `χ(v) ∈ [k]` and a keep bit `X_v`
//! with `P[X_v = 1] = q_{χ(v)} = p^{x*_{χ(v)}}`, where `x*` is a fractional
//! vertex cover of the pattern. Both come from independent seeded hash streams
//! over `(seed, v)`, so the retention decision for an edge depends only on the
//! edge and the configuration. An edge is retained when its endpoints carry
//! pairwise distinct colors, their color set is an edge of the pattern, and
//! every endpoint is kept. Retained edges carry signed counters, which makes
//! the state a linear function of the stream and lets shards be merged exactly.

use std::collections::{HashMap, HashSet};

use num_rational::Rational64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::cover::FractionalCover;
use crate::hypergraph::{DataEdge, EdgeStreamUpdate, PatternGraph, Sign, VertexId};

/// Patterns are indexed by 64-bit color masks.
pub const MAX_SKETCH_K: usize = 64;

const MAGIC: &[u8; 4] = b"HCSK";
const FORMAT_VERSION: u16 = 1;

const COLOR_STREAM: u64 = 0x636f_6c6f_7273_0001;
const KEEP_STREAM: u64 = 0x6b65_6570_6269_7402;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("sampling parameter p={0} must lie in (0, 1]")]
    InvalidP(f64),
    #[error("pattern must be connected with at least one edge")]
    UnsupportedPattern,
    #[error("pattern has {0} vertices; the sketch supports at most {MAX_SKETCH_K}")]
    PatternTooLarge(usize),
    #[error("cover has {got} weights for a pattern on {expected} vertices")]
    CoverSize { expected: usize, got: usize },
    #[error("cover is not feasible for the pattern")]
    CoverInfeasible,
    #[error("sketch configurations differ; only identically configured sketches merge")]
    ConfigMismatch,
    #[error("strict-turnstile violation: {0} drove a retained counter negative")]
    StrictViolation(EdgeStreamUpdate),
    #[error("corrupt sketch encoding: {0}")]
    Decode(String),
}

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn stream_key(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed ^ stream).wrapping_add(0x9e37_79b9_7f4a_7c15))
}

#[inline]
fn vertex_hash(key: u64, v: VertexId) -> u64 {
    mix64(mix64(v.wrapping_add(key)) ^ key.rotate_left(29))
}

/// Derives an independent 64-bit seed from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// `p^x` for an exact exponent. Half-integral exponents use only correctly
/// rounded IEEE operations, so the result is identical on every platform.
pub fn retention_probability(p: f64, x: Rational64) -> f64 {
    if x.is_zero() {
        1.0
    } else if x.is_one() {
        p
    } else if x == Rational64::new(1, 2) {
        p.sqrt()
    } else if x.is_integer() {
        (0..*x.numer()).fold(1.0, |acc, _| acc * p)
    } else if *x.denom() == 2 {
        (0..*x.numer()).fold(1.0, |acc, _| acc * p.sqrt())
    } else {
        p.powf(*x.numer() as f64 / *x.denom() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct SketchConfig {
    pattern: PatternGraph,
    cover: FractionalCover,
    p: f64,
    seed: u64,
    retention_probs: Vec<f64>,
    color_key: u64,
    keep_key: u64,
    edge_masks: HashSet<u64>,
}

impl PartialEq for SketchConfig {
    fn eq(&self, other: &Self) -> bool {
        self.p.to_bits() == other.p.to_bits()
            && self.seed == other.seed
            && self.pattern == other.pattern
            && self.cover == other.cover
    }
}

impl SketchConfig {
    pub fn new(pattern: PatternGraph, cover: &FractionalCover, p: f64, seed: u64) -> Result<Self, SketchError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(SketchError::InvalidP(p));
        }
        if pattern.edge_count() == 0 || !pattern.is_connected() {
            return Err(SketchError::UnsupportedPattern);
        }
        if pattern.k() > MAX_SKETCH_K {
            return Err(SketchError::PatternTooLarge(pattern.k()));
        }
        if cover.vertex_weights.len() != pattern.k() {
            return Err(SketchError::CoverSize {
                expected: pattern.k(),
                got: cover.vertex_weights.len(),
            });
        }
        let feasible = cover.vertex_weights.iter().all(|w| *w >= Rational64::zero())
            && pattern
                .edges()
                .iter()
                .all(|e| e.iter().map(|&v| cover.vertex_weights[v]).sum::<Rational64>() >= Rational64::one());
        if !feasible {
            return Err(SketchError::CoverInfeasible);
        }
        let cover = FractionalCover::from_vertex_weights(cover.vertex_weights.clone(), pattern.edge_count());
        let retention_probs = cover.vertex_weights.iter().map(|&x| retention_probability(p, x)).collect();
        let edge_masks = pattern
            .edges()
            .iter()
            .map(|e| e.iter().fold(0u64, |m, &c| m | (1 << c)))
            .collect();
        Ok(Self {
            pattern,
            cover,
            p,
            seed,
            retention_probs,
            color_key: stream_key(seed, COLOR_STREAM),
            keep_key: stream_key(seed, KEEP_STREAM),
            edge_masks,
        })
    }

    pub fn pattern(&self) -> &PatternGraph {
        &self.pattern
    }

    pub fn cover(&self) -> &FractionalCover {
        &self.cover
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `q_a` for each color `a`.
    pub fn retention_probs(&self) -> &[f64] {
        &self.retention_probs
    }

    /// Same pattern and cover at a different rate or seed.
    pub fn with_rate(&self, p: f64, seed: u64) -> Result<Self, SketchError> {
        Self::new(self.pattern.clone(), &self.cover, p, seed)
    }

    /// Color `χ(v)`.
    #[inline]
    pub fn chi(&self, v: VertexId) -> usize {
        let h = vertex_hash(self.color_key, v);
        ((h as u128 * self.pattern.k() as u128) >> 64) as usize
    }

    /// Keep bit `X_v`: a uniform draw from the keep stream compared to `q_{χ(v)}`.
    #[inline]
    pub fn keep_vertex(&self, v: VertexId) -> bool {
        let q = self.retention_probs[self.chi(v)];
        if q >= 1.0 {
            return true;
        }
        let u = (vertex_hash(self.keep_key, v) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        u < q
    }

    /// Whether `edge` would be retained. Depends only on `(self, edge)`.
    pub fn is_retainable(&self, edge: &DataEdge) -> bool {
        if edge.arity() > self.pattern.k() {
            return false;
        }
        let mut mask = 0u64;
        for &v in edge.endpoints() {
            let bit = 1u64 << self.chi(v);
            if mask & bit != 0 {
                return false;
            }
            mask |= bit;
        }
        self.edge_masks.contains(&mask) && edge.endpoints().iter().all(|&v| self.keep_vertex(v))
    }
}

/// Sketch contents for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchState {
    config: SketchConfig,
    retained: HashMap<DataEdge, i64>,
    updates_seen: u64,
    strict_violation: Option<EdgeStreamUpdate>,
}

impl SketchState {
    pub fn new(config: SketchConfig) -> Self {
        Self {
            config,
            retained: HashMap::new(),
            updates_seen: 0,
            strict_violation: None,
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn updates_seen(&self) -> u64 {
        self.updates_seen
    }

    /// First update that drove a retained counter negative, if any.
    pub fn strict_violation(&self) -> Option<&EdgeStreamUpdate> {
        self.strict_violation.as_ref()
    }

    /// Counter of a retained edge (0 when absent).
    pub fn counter(&self, edge: &DataEdge) -> i64 {
        self.retained.get(edge).copied().unwrap_or(0)
    }

    /// Retained `(edge, counter)` pairs in canonical order.
    pub fn sorted_records(&self) -> Vec<(&DataEdge, i64)> {
        let mut records: Vec<_> = self.retained.iter().map(|(e, &c)| (e, c)).collect();
        records.sort_unstable_by(|a, b| a.0.cmp(b.0));
        records
    }

    pub fn update(&mut self, u: &EdgeStreamUpdate) {
        self.updates_seen += 1;
        if !self.config.is_retainable(&u.edge) {
            return;
        }
        let counter = self.retained.entry(u.edge.clone()).or_insert(0);
        *counter += u.sign.delta();
        let value = *counter;
        if value == 0 {
            self.retained.remove(&u.edge);
        } else if value < 0 && self.strict_violation.is_none() {
            self.strict_violation = Some(u.clone());
        }
    }

    pub fn extend<'a>(&mut self, updates: impl IntoIterator<Item = &'a EdgeStreamUpdate>) {
        for u in updates {
            self.update(u);
        }
    }

    /// Adds `other`'s counters into `self`.
    ///
    /// Shard states may hold transiently negative counters; after merging, a
    /// violation is reported only if some net counter is still negative.
    pub fn merge_from(&mut self, other: &SketchState) -> Result<(), SketchError> {
        if self.config != other.config {
            return Err(SketchError::ConfigMismatch);
        }
        for (edge, &c) in &other.retained {
            let counter = self.retained.entry(edge.clone()).or_insert(0);
            *counter += c;
            if *counter == 0 {
                self.retained.remove(edge);
            }
        }
        self.updates_seen += other.updates_seen;
        let negative = self.sorted_records().into_iter().find(|(_, c)| *c < 0).map(|(e, _)| e.clone());
        self.strict_violation = negative.map(|edge| {
            self.strict_violation
                .clone()
                .or_else(|| other.strict_violation.clone())
                .unwrap_or(EdgeStreamUpdate {
                    sign: Sign::Delete,
                    edge,
                })
        });
        Ok(())
    }

    /// Number of retained edges with a positive counter.
    pub fn retained_count(&self) -> usize {
        self.retained.values().filter(|&&c| c >= 1).count()
    }

    fn check_valid(&self) -> Result<(), SketchError> {
        match &self.strict_violation {
            Some(u) => Err(SketchError::StrictViolation(u.clone())),
            None => Ok(()),
        }
    }

    /// Colorful copies among the retained edges under the sketch's coloring.
    pub fn colorful_copies(&self) -> Result<u64, SketchError> {
        self.check_valid()?;
        let present = self.retained.iter().filter(|(_, &c)| c >= 1).map(|(e, _)| e);
        Ok(count_colorful(&self.config.pattern, present, |v| self.config.chi(v)))
    }

    /// Versioned little-endian encoding; identical states encode identically.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let cfg = &self.config;
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(cfg.pattern.k() as u32).to_le_bytes());
        out.extend_from_slice(&(cfg.pattern.edge_count() as u32).to_le_bytes());
        for e in cfg.pattern.edges() {
            out.extend_from_slice(&(e.len() as u32).to_le_bytes());
            for &v in e {
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
        out.extend_from_slice(&cfg.p.to_bits().to_le_bytes());
        out.extend_from_slice(&cfg.seed.to_le_bytes());
        for w in &cfg.cover.vertex_weights {
            out.extend_from_slice(&w.numer().to_le_bytes());
            out.extend_from_slice(&w.denom().to_le_bytes());
        }
        out.extend_from_slice(&self.updates_seen.to_le_bytes());
        match &self.strict_violation {
            None => out.push(0),
            Some(u) => {
                out.push(1);
                out.push(match u.sign {
                    Sign::Insert => 0,
                    Sign::Delete => 1,
                });
                write_edge(&mut out, &u.edge);
            }
        }
        let records = self.sorted_records();
        out.extend_from_slice(&(records.len() as u64).to_le_bytes());
        for (edge, counter) in records {
            write_edge(&mut out, edge);
            out.extend_from_slice(&counter.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SketchError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(SketchError::Decode("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != FORMAT_VERSION {
            return Err(SketchError::Decode(format!("unsupported version {version}")));
        }
        let k = r.u32()? as usize;
        let edge_count = r.u32()? as usize;
        let mut edges = Vec::with_capacity(edge_count.min(1 << 12));
        for _ in 0..edge_count {
            let arity = r.u32()? as usize;
            let e = (0..arity).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
            edges.push(e);
        }
        let pattern = PatternGraph::new(k, edges).map_err(|e| SketchError::Decode(e.to_string()))?;
        let p = f64::from_bits(r.u64()?);
        let seed = r.u64()?;
        let mut weights = Vec::with_capacity(k);
        for _ in 0..k {
            let n = r.u64()? as i64;
            let d = r.u64()? as i64;
            if d <= 0 {
                return Err(SketchError::Decode("nonpositive denominator".into()));
            }
            weights.push(Rational64::new(n, d));
        }
        let cover = FractionalCover::from_vertex_weights(weights, pattern.edge_count());
        let config = SketchConfig::new(pattern, &cover, p, seed)?;
        let updates_seen = r.u64()?;
        let strict_violation = match r.u8()? {
            0 => None,
            1 => {
                let sign = match r.u8()? {
                    0 => Sign::Insert,
                    1 => Sign::Delete,
                    s => return Err(SketchError::Decode(format!("bad sign byte {s}"))),
                };
                Some(EdgeStreamUpdate { sign, edge: r.edge()? })
            }
            f => return Err(SketchError::Decode(format!("bad violation flag {f}"))),
        };
        let n = r.u64()?;
        let mut retained = HashMap::new();
        let mut prev: Option<DataEdge> = None;
        for _ in 0..n {
            let edge = r.edge()?;
            let counter = r.u64()? as i64;
            if counter == 0 || prev.as_ref().is_some_and(|p| *p >= edge) {
                return Err(SketchError::Decode("records must be sorted, unique and nonzero".into()));
            }
            prev = Some(edge.clone());
            retained.insert(edge, counter);
        }
        if r.pos != bytes.len() {
            return Err(SketchError::Decode("trailing bytes".into()));
        }
        Ok(Self {
            config,
            retained,
            updates_seen,
            strict_violation,
        })
    }
}

/// Number of copies among `edges` that `chi` colors bijectively onto the
/// pattern's vertices: vertex sets `S` with `chi|_S` a bijection onto `[k]`
/// whose inverse sends every pattern edge to an edge in `edges`.
///
/// Works for any coloring, not only the hashed one, which makes exhaustive
/// averaging over colorings possible.
pub fn colorful_copies_under<'a>(
    pattern: &PatternGraph,
    edges: impl IntoIterator<Item = &'a DataEdge>,
    chi: impl Fn(VertexId) -> usize,
) -> Result<u64, SketchError> {
    if pattern.edge_count() == 0 || !pattern.is_connected() {
        return Err(SketchError::UnsupportedPattern);
    }
    if pattern.k() > MAX_SKETCH_K {
        return Err(SketchError::PatternTooLarge(pattern.k()));
    }
    Ok(count_colorful(pattern, edges, chi))
}

fn count_colorful<'a>(
    pattern: &PatternGraph,
    edges_in: impl IntoIterator<Item = &'a DataEdge>,
    chi: impl Fn(VertexId) -> usize,
) -> u64 {
    let k = pattern.k();
    let edges = pattern.edges();
    // Per pattern edge: retained edges with vertices listed in the edge's color order.
    let mut by_edge: Vec<Vec<Vec<VertexId>>> = vec![Vec::new(); edges.len()];
    for edge in edges_in {
        let mut colored: Vec<(usize, VertexId)> = edge.endpoints().iter().map(|&v| (chi(v), v)).collect();
        colored.sort_unstable();
        let colors: Vec<usize> = colored.iter().map(|&(c, _)| c).collect();
        if let Some(idx) = pattern.edge_index(&colors) {
            by_edge[idx].push(colored.into_iter().map(|(_, v)| v).collect());
        }
    }

    // Pattern edges in an order where each shares a vertex with an earlier one.
    let mut order = vec![0usize];
    let mut placed = vec![false; edges.len()];
    placed[0] = true;
    let mut covered: u64 = edges[0].iter().fold(0, |m, &c| m | (1 << c));
    while order.len() < edges.len() {
        let next = (0..edges.len())
            .find(|&i| !placed[i] && edges[i].iter().any(|&c| covered & (1 << c) != 0))
            .expect("connected pattern");
        placed[next] = true;
        covered |= edges[next].iter().fold(0, |m, &c| m | (1 << c));
        order.push(next);
    }

    // For each step: an anchor position in the edge whose color is already
    // assigned (None for the first edge), and an index anchor-vertex → candidates.
    type Step = (usize, Option<usize>, HashMap<VertexId, Vec<usize>>);
    let mut seen_colors: u64 = 0;
    let mut steps: Vec<Step> = Vec::with_capacity(order.len());
    for &ei in &order {
        let anchor = edges[ei].iter().position(|&c| seen_colors & (1 << c) != 0);
        let index: HashMap<VertexId, Vec<usize>> = match anchor {
            Some(pos) => {
                let mut idx: HashMap<VertexId, Vec<usize>> = HashMap::new();
                for (j, verts) in by_edge[ei].iter().enumerate() {
                    idx.entry(verts[pos]).or_default().push(j);
                }
                idx
            }
            None => HashMap::new(),
        };
        seen_colors |= edges[ei].iter().fold(0, |m, &c| m | (1 << c));
        steps.push((ei, anchor, index));
    }

    struct Walk<'a> {
        edges: &'a [Vec<usize>],
        by_edge: &'a [Vec<Vec<VertexId>>],
        steps: &'a [Step],
        assign: Vec<Option<VertexId>>,
    }

    impl Walk<'_> {
        fn run(&mut self, step: usize) -> u64 {
            if step == self.steps.len() {
                return 1;
            }
            let (ei, anchor, index) = &self.steps[step];
            let colors = &self.edges[*ei];
            let candidates: &[usize] = match anchor {
                None => return (0..self.by_edge[*ei].len()).map(|j| self.try_candidate(step, *ei, j)).sum(),
                Some(pos) => {
                    let v = self.assign[colors[*pos]].expect("anchor assigned");
                    match index.get(&v) {
                        Some(c) => c,
                        None => return 0,
                    }
                }
            };
            candidates.iter().map(|&j| self.try_candidate(step, *ei, j)).sum()
        }

        fn try_candidate(&mut self, step: usize, ei: usize, j: usize) -> u64 {
            let colors = &self.edges[ei];
            let verts = &self.by_edge[ei][j];
            let mut newly = Vec::with_capacity(colors.len());
            for (&c, &v) in colors.iter().zip(verts) {
                match self.assign[c] {
                    Some(w) if w != v => {
                        for &n in &newly {
                            self.assign[n] = None;
                        }
                        return 0;
                    }
                    Some(_) => {}
                    None => {
                        self.assign[c] = Some(v);
                        newly.push(c);
                    }
                }
            }
            let total = self.run(step + 1);
            for &n in &newly {
                self.assign[n] = None;
            }
            total
        }
    }

    let mut walk = Walk {
        edges,
        by_edge: &by_edge,
        steps: &steps,
        assign: vec![None; k],
    };
    walk.run(0)
}

fn write_edge(out: &mut Vec<u8>, edge: &DataEdge) {
    out.extend_from_slice(&(edge.arity() as u32).to_le_bytes());
    for &v in edge.endpoints() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], SketchError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| SketchError::Decode("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], SketchError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, SketchError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SketchError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, SketchError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn edge(&mut self) -> Result<DataEdge, SketchError> {
        let arity = self.u32()? as usize;
        if arity > MAX_SKETCH_K {
            return Err(SketchError::Decode(format!("edge arity {arity} too large")));
        }
        let vs = (0..arity).map(|_| self.u64()).collect::<Result<Vec<_>, _>>()?;
        let edge = DataEdge::new(vs).map_err(|e| SketchError::Decode(e.to_string()))?;
        Ok(edge)
    }
}

/// Sketch of a whole stream.
pub fn sketch_stream<'a>(config: SketchConfig, updates: impl IntoIterator<Item = &'a EdgeStreamUpdate>) -> SketchState {
    let mut s = SketchState::new(config);
    s.extend(updates);
    s
}

/// `a + b` as sketches of the concatenated streams.
pub fn merge(a: &SketchState, b: &SketchState) -> Result<SketchState, SketchError> {
    let mut out = a.clone();
    out.merge_from(b)?;
    Ok(out)
}
