//! Fractional vertex covers of the pattern, computed exactly.
//!
//! Everything here is an exact rational LP: the plain fractional vertex cover
//! `τ(H)`, the λ-modified cover number where weight may be bought directly on
//! edges at price λ, the dual fractional matching, and the two lower-bound
//! exponents `μ₁ = max_e MVC₁(H∖e)` and `μ₂ = MVC_{1/2}(H)`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::hypergraph::{PatternGraph, WeightedPattern};
use crate::lp::{LinearProgram, LpError, Relation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    #[error("pattern has no edges")]
    EmptyPattern,
    #[error("pattern is not a graph (every edge must have two vertices)")]
    NotAGraph,
    #[error("pattern is disconnected")]
    Disconnected,
    #[error("pattern needs more than one edge")]
    TooFewEdges,
    #[error("lambda must be positive")]
    NonPositiveLambda,
    #[error("rational {0} does not fit in 64-bit numerator/denominator")]
    Overflow(String),
    #[error("cover identity failed: max(mu1={mu1}, mu2={mu2}) != tau={tau}")]
    IdentityViolated {
        tau: Rational64,
        mu1: Rational64,
        mu2: Rational64,
    },
}

/// An optimal solution of a cover LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalCover {
    /// Weight per pattern vertex.
    pub vertex_weights: Vec<Rational64>,
    /// Weight bought directly on each edge; all zero for plain covers.
    pub edge_weights: Vec<Rational64>,
    /// Objective value; `τ` for the plain cover.
    pub value: Rational64,
}

impl FractionalCover {
    pub fn min_vertex_weight(&self) -> Rational64 {
        self.vertex_weights.iter().copied().min().unwrap_or_else(Rational64::zero)
    }

    pub fn has_full_support(&self) -> bool {
        self.vertex_weights.iter().all(|w| *w > Rational64::zero())
    }

    pub fn is_half_integral(&self) -> bool {
        self.vertex_weights.iter().all(|w| (*w * 2).is_integer())
    }

    /// Checks `Σ_{v∈e} x_v + f(e) ≥ w(e)` for every edge of `pattern`.
    pub fn is_feasible_for(&self, pattern: &WeightedPattern) -> bool {
        pattern.edges().iter().enumerate().all(|(i, e)| {
            let on_vertices: Rational64 = e.iter().map(|&v| self.vertex_weights[v]).sum();
            let on_edge = self.edge_weights.get(i).copied().unwrap_or_else(Rational64::zero);
            on_vertices + on_edge >= pattern.weights()[i]
        })
    }

    /// Plain cover from explicit vertex weights; value is their sum.
    pub fn from_vertex_weights(vertex_weights: Vec<Rational64>, edge_count: usize) -> Self {
        let value = vertex_weights.iter().copied().sum();
        Self {
            vertex_weights,
            edge_weights: vec![Rational64::zero(); edge_count],
            value,
        }
    }
}

fn to_r64(x: &BigRational) -> Result<Rational64, CoverError> {
    match (x.numer().to_i64(), x.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Rational64::new(n, d)),
        _ => Err(CoverError::Overflow(x.to_string())),
    }
}

fn to_big(x: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

fn lp_ok(result: Result<crate::lp::LpSolution, LpError>) -> crate::lp::LpSolution {
    // Cover programs are always feasible (weights large enough) and bounded below by 0.
    result.expect("cover LPs are feasible and bounded")
}

fn require_edges(h: &PatternGraph) -> Result<(), CoverError> {
    if h.edge_count() == 0 {
        Err(CoverError::EmptyPattern)
    } else {
        Ok(())
    }
}

/// Plain cover LP: `min Σ x_v` s.t. `Σ_{v∈e} x_v ≥ 1`.
fn cover_program(h: &PatternGraph) -> LinearProgram {
    let k = h.k();
    let mut lp = LinearProgram::new(k);
    lp.objective = vec![BigRational::one(); k];
    for e in h.edges() {
        let mut row = vec![BigRational::zero(); k];
        for &v in e {
            row[v] = BigRational::one();
        }
        lp.add(row, Relation::Ge, BigRational::one());
    }
    lp
}

/// Optimal fractional vertex cover of `h`.
///
/// The simplex returns an extreme point of the cover polyhedron, so for graphs
/// every weight lies in `{0, 1/2, 1}`.
pub fn solve_cover(h: &PatternGraph) -> Result<FractionalCover, CoverError> {
    require_edges(h)?;
    let sol = lp_ok(cover_program(h).minimize());
    let weights = sol.x.iter().map(to_r64).collect::<Result<Vec<_>, _>>()?;
    Ok(FractionalCover {
        vertex_weights: weights,
        edge_weights: vec![Rational64::zero(); h.edge_count()],
        value: to_r64(&sol.value)?,
    })
}

/// Among optimal covers, one maximizing the minimum vertex weight.
///
/// Use [`FractionalCover::has_full_support`] on the result to learn whether a
/// cover with every weight positive exists.
pub fn solve_cover_full_support(h: &PatternGraph) -> Result<FractionalCover, CoverError> {
    require_edges(h)?;
    let tau = lp_ok(cover_program(h).minimize()).value;
    let k = h.k();
    // Variables x_0..x_{k-1}, t. Maximize t.
    let mut lp = LinearProgram::new(k + 1);
    lp.objective[k] = -BigRational::one();
    for e in h.edges() {
        let mut row = vec![BigRational::zero(); k + 1];
        for &v in e {
            row[v] = BigRational::one();
        }
        lp.add(row, Relation::Ge, BigRational::one());
    }
    let mut total = vec![BigRational::one(); k + 1];
    total[k] = BigRational::zero();
    lp.add(total, Relation::Eq, tau.clone());
    for v in 0..k {
        let mut row = vec![BigRational::zero(); k + 1];
        row[v] = BigRational::one();
        row[k] = -BigRational::one();
        lp.add(row, Relation::Ge, BigRational::zero());
    }
    let sol = lp_ok(lp.minimize());
    let weights = sol.x[..k].iter().map(to_r64).collect::<Result<Vec<_>, _>>()?;
    Ok(FractionalCover {
        vertex_weights: weights,
        edge_weights: vec![Rational64::zero(); h.edge_count()],
        value: to_r64(&tau)?,
    })
}

/// Optimal solution of the λ-modified cover LP
/// `min Σ f(v) + λ Σ f(e)` s.t. `Σ_{v∈e} f(v) + f(e) ≥ w(e)`.
pub fn mvc_solution(hw: &WeightedPattern, lambda: Rational64) -> Result<FractionalCover, CoverError> {
    if lambda <= Rational64::zero() {
        return Err(CoverError::NonPositiveLambda);
    }
    let k = hw.k();
    let m = hw.edges().len();
    let mut lp = LinearProgram::new(k + m);
    for v in 0..k {
        lp.objective[v] = BigRational::one();
    }
    let lambda_big = to_big(lambda);
    for j in 0..m {
        lp.objective[k + j] = lambda_big.clone();
    }
    for (j, (e, w)) in hw.edges().iter().zip(hw.weights()).enumerate() {
        let mut row = vec![BigRational::zero(); k + m];
        for &v in e {
            row[v] = BigRational::one();
        }
        row[k + j] = BigRational::one();
        lp.add(row, Relation::Ge, to_big(*w));
    }
    let sol = lp_ok(lp.minimize());
    let all = sol.x.iter().map(to_r64).collect::<Result<Vec<_>, _>>()?;
    Ok(FractionalCover {
        vertex_weights: all[..k].to_vec(),
        edge_weights: all[k..].to_vec(),
        value: to_r64(&sol.value)?,
    })
}

/// λ-modified fractional vertex cover number `MVC_λ(H, w)`.
pub fn mvc(hw: &WeightedPattern, lambda: Rational64) -> Result<Rational64, CoverError> {
    mvc_solution(hw, lambda).map(|c| c.value)
}

/// Optimum of the fractional matching LP, the dual of the cover LP.
pub fn fractional_matching(h: &PatternGraph) -> Result<Rational64, CoverError> {
    if !h.is_graph() {
        return Err(CoverError::NotAGraph);
    }
    let m = h.edge_count();
    let mut lp = LinearProgram::new(m);
    lp.objective = vec![-BigRational::one(); m];
    for v in 0..h.k() {
        let row: Vec<BigRational> = h
            .edges()
            .iter()
            .map(|e| if e.contains(&v) { BigRational::one() } else { BigRational::zero() })
            .collect();
        if row.iter().any(|c| !c.is_zero()) {
            lp.add(row, Relation::Le, BigRational::one());
        }
    }
    let sol = lp_ok(lp.minimize());
    to_r64(&-sol.value)
}

/// Upper- and lower-bound exponents of a pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentReport {
    pub tau: Rational64,
    /// `max_e MVC₁(H∖e)`, paired with `ε²T` scaling in the lower bound.
    pub mu1: Rational64,
    /// `MVC_{1/2}(H)`, paired with `εT` scaling in the lower bound.
    pub mu2: Rational64,
}

impl ExponentReport {
    /// `1/τ`: space `m / T^{1/τ}` suffices.
    pub fn upper_exponent(&self) -> Rational64 {
        self.tau.recip()
    }

    /// `(1/μ₂, 1/μ₁)`: space `m/(εT)^{1/μ₂}` and `m/(ε²T)^{1/μ₁}` are necessary.
    pub fn lower_exponents(&self) -> (Rational64, Rational64) {
        (self.mu2.recip(), self.mu1.recip())
    }

    pub fn is_tight(&self) -> bool {
        self.mu1.max(self.mu2) == self.tau
    }

    /// Upper bound `m / T^{1/τ}`.
    pub fn upper_bound(&self, m: f64, t: f64) -> f64 {
        m / t.powf(ratio_f64(self.upper_exponent()))
    }

    /// Lower bounds `(m/(εT)^{1/μ₂}, m/(ε²T)^{1/μ₁})`.
    pub fn lower_bounds(&self, m: f64, t: f64, epsilon: f64) -> (f64, f64) {
        let (e2, e1) = self.lower_exponents();
        (
            m / (epsilon * t).powf(ratio_f64(e2)),
            m / (epsilon * epsilon * t).powf(ratio_f64(e1)),
        )
    }
}

impl fmt::Display for ExponentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tau={} mu1={} mu2={}", self.tau, self.mu1, self.mu2)
    }
}

pub(crate) fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Computes `τ`, `μ₁` and `μ₂` for a connected pattern with more than one edge.
/// For graphs the identity `max(μ₁, μ₂) = τ` is checked.
pub fn exponents(h: &PatternGraph) -> Result<ExponentReport, CoverError> {
    require_edges(h)?;
    if !h.is_connected() {
        return Err(CoverError::Disconnected);
    }
    if h.edge_count() < 2 {
        return Err(CoverError::TooFewEdges);
    }
    let tau = solve_cover(h)?.value;
    let unit = WeightedPattern::unit(h);
    let mu2 = mvc(&unit, Rational64::new(1, 2))?;
    let mut mu1 = Rational64::zero();
    for i in 0..h.edge_count() {
        mu1 = mu1.max(mvc(&unit.without_edge(i), Rational64::one())?);
    }
    let report = ExponentReport { tau, mu1, mu2 };
    if h.is_graph() && !report.is_tight() {
        return Err(CoverError::IdentityViolated { tau, mu1, mu2 });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::parse_pattern;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn pat(s: &str) -> PatternGraph {
        parse_pattern(s).unwrap()
    }

    /// Exhaustive search over `{0, 1/2, 1}^k`, independent of the simplex.
    fn half_integral_brute_force(h: &PatternGraph) -> Rational64 {
        let k = h.k();
        let mut best = Rational64::from_integer(k as i64);
        for code in 0..3usize.pow(k as u32) {
            let mut c = code;
            let w: Vec<Rational64> = (0..k)
                .map(|_| {
                    let d = c % 3;
                    c /= 3;
                    r(d as i64, 2)
                })
                .collect();
            if h.edges().iter().all(|e| e.iter().map(|&v| w[v]).sum::<Rational64>() >= Rational64::one()) {
                best = best.min(w.iter().copied().sum());
            }
        }
        best
    }

    #[test]
    fn triangle_cover() {
        let c = solve_cover(&pat("k=3; e 0 1; e 1 2; e 0 2")).unwrap();
        assert_eq!(c.value, r(3, 2));
        assert_eq!(c.vertex_weights, vec![r(1, 2); 3]);
    }

    #[test]
    fn single_edge_and_path_covers() {
        assert_eq!(solve_cover(&pat("k=2; e 0 1")).unwrap().value, r(1, 1));
        let p4 = pat("k=4; e 0 1; e 1 2; e 2 3");
        assert_eq!(half_integral_brute_force(&p4), r(2, 1));
        let c = solve_cover(&p4).unwrap();
        assert_eq!(c.value, r(2, 1));
        assert!(c.is_half_integral());
        assert!(c.is_feasible_for(&WeightedPattern::unit(&p4)));
    }

    #[test]
    fn empty_pattern_errors() {
        let h = PatternGraph::new(2, vec![]).unwrap();
        assert_eq!(solve_cover(&h), Err(CoverError::EmptyPattern));
        assert_eq!(solve_cover_full_support(&h), Err(CoverError::EmptyPattern));
    }

    #[test]
    fn full_support_examples() {
        let c5 = solve_cover_full_support(&pat("k=5; e 0 1; e 1 2; e 2 3; e 3 4; e 0 4")).unwrap();
        assert_eq!(c5.vertex_weights, vec![r(1, 2); 5]);
        assert!(c5.has_full_support());

        let star = pat("k=4; e 0 1; e 0 2; e 0 3");
        assert_eq!(half_integral_brute_force(&star), r(1, 1));
        let s = solve_cover_full_support(&star).unwrap();
        assert_eq!(s.value, r(1, 1));
        assert_eq!(s.vertex_weights, vec![r(1, 1), r(0, 1), r(0, 1), r(0, 1)]);
        assert!(!s.has_full_support());

        let edge = solve_cover_full_support(&pat("k=2; e 0 1")).unwrap();
        assert_eq!(edge.vertex_weights, vec![r(1, 2), r(1, 2)]);
        assert!(edge.has_full_support());

        let p4 = solve_cover_full_support(&pat("k=4; e 0 1; e 1 2; e 2 3")).unwrap();
        assert_eq!(p4.value, r(2, 1));
        assert_eq!(p4.min_vertex_weight(), r(1, 2));
    }

    #[test]
    fn mvc_examples() {
        let tri = pat("k=3; e 0 1; e 1 2; e 0 2");
        assert_eq!(mvc(&WeightedPattern::unit(&tri), r(1, 2)).unwrap(), r(3, 2));
        // One edge, two vertices: buying the edge at 1/2 beats any vertex weight.
        let edge = WeightedPattern::new(2, vec![vec![0, 1]], vec![r(1, 1)]).unwrap();
        assert_eq!(mvc(&edge, r(1, 2)).unwrap(), r(1, 2));
        let sol = mvc_solution(&edge, r(1, 2)).unwrap();
        assert_eq!(sol.edge_weights, vec![r(1, 1)]);
        assert!(sol.is_feasible_for(&edge));
        assert_eq!(mvc(&WeightedPattern::unit(&tri), r(1, 1)).unwrap(), solve_cover(&tri).unwrap().value);
        assert_eq!(mvc(&edge, r(0, 1)), Err(CoverError::NonPositiveLambda));
    }

    #[test]
    fn mvc_with_empty_edges() {
        // An empty edge can only be covered by buying it.
        let hw = WeightedPattern::new(2, vec![vec![], vec![0, 1]], vec![r(2, 1), r(1, 1)]).unwrap();
        assert_eq!(mvc(&hw, r(3, 1)).unwrap(), r(7, 1));
        assert_eq!(mvc(&hw, r(1, 2)).unwrap(), r(3, 2));
    }

    #[test]
    fn matching_examples() {
        assert_eq!(fractional_matching(&pat("k=3; e 0 1; e 1 2; e 0 2")).unwrap(), r(3, 2));
        assert_eq!(fractional_matching(&pat("k=4; e 0 1; e 1 2; e 2 3")).unwrap(), r(2, 1));
        assert_eq!(fractional_matching(&pat("k=2; e 0 1")).unwrap(), r(1, 1));
        assert_eq!(fractional_matching(&pat("k=3; e 0 1 2")), Err(CoverError::NotAGraph));
    }

    #[test]
    fn exponent_examples() {
        let tri = exponents(&pat("k=3; e 0 1; e 1 2; e 0 2")).unwrap();
        assert_eq!((tri.tau, tri.mu2, tri.mu1), (r(3, 2), r(3, 2), r(1, 1)));
        assert_eq!(tri.upper_exponent(), r(2, 3));
        assert_eq!(tri.lower_exponents(), (r(2, 3), r(1, 1)));

        let p4 = exponents(&pat("k=4; e 0 1; e 1 2; e 2 3")).unwrap();
        assert_eq!((p4.tau, p4.mu1), (r(2, 1), r(2, 1)));
        assert!(p4.mu2 < p4.tau);

        let c5 = exponents(&pat("k=5; e 0 1; e 1 2; e 2 3; e 3 4; e 0 4")).unwrap();
        assert_eq!((c5.tau, c5.mu2), (r(5, 2), r(5, 2)));
        assert_eq!(c5.upper_exponent(), r(2, 5));

        assert_eq!(exponents(&pat("k=4; e 0 1; e 2 3")), Err(CoverError::Disconnected));
        assert_eq!(exponents(&pat("k=2; e 0 1")), Err(CoverError::TooFewEdges));
    }

    #[test]
    fn hypergraph_exponents_need_not_be_tight() {
        // Two triples sharing one vertex: τ = 1 via the shared vertex.
        let h = pat("k=5; e 0 1 2; e 2 3 4");
        let rep = exponents(&h).unwrap();
        assert_eq!(rep.tau, r(1, 1));
        assert!(rep.mu1 <= rep.tau && rep.mu2 <= rep.tau);
    }

    #[test]
    fn bound_formatting_values() {
        let tri = exponents(&pat("k=3; e 0 1; e 1 2; e 0 2")).unwrap();
        let ub = tri.upper_bound(1e6, 1e3);
        assert!((ub - 1e6 / 100.0).abs() < 1e-6);
        let (l2, l1) = tri.lower_bounds(1e6, 1e3, 1.0);
        assert!((l2 - 1e4).abs() < 1e-6);
        assert!((l1 - 1e3).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = PatternGraph> {
            (2usize..6).prop_flat_map(|k| {
                proptest::collection::btree_set((0..k, 0..k), 1..10).prop_filter_map("need an edge", move |pairs| {
                    let mut edges: Vec<Vec<usize>> = pairs
                        .into_iter()
                        .filter(|(a, b)| a != b)
                        .map(|(a, b)| vec![a.min(b), a.max(b)])
                        .collect();
                    edges.sort();
                    edges.dedup();
                    (!edges.is_empty()).then(|| PatternGraph::new(k, edges).unwrap())
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn mvc_monotone_in_lambda_and_weights(
                h in arb_graph(),
                l1 in 1i64..8, l2 in 1i64..8,
                bump in 0usize..10, extra in 1i64..4,
            ) {
                let unit = WeightedPattern::unit(&h);
                let (lo, hi) = (r(l1.min(l2), 4), r(l1.max(l2), 4));
                prop_assert!(mvc(&unit, lo).unwrap() <= mvc(&unit, hi).unwrap());
                let mut w = unit.weights().to_vec();
                let i = bump % w.len();
                w[i] += r(extra, 2);
                let heavier = WeightedPattern::new(h.k(), h.edges().to_vec(), w).unwrap();
                prop_assert!(mvc(&unit, lo).unwrap() <= mvc(&heavier, lo).unwrap());
            }

            #[test]
            fn mvc_coincides_with_plain_cover_for_large_lambda(h in arb_graph(), l in 4i64..12) {
                let tau = solve_cover(&h).unwrap().value;
                prop_assert_eq!(mvc(&WeightedPattern::unit(&h), r(l, 4)).unwrap(), tau);
                prop_assert_eq!(tau, half_integral_brute_force(&h));
            }

            #[test]
            fn mu_bounded_by_tau(h in arb_graph()) {
                prop_assume!(h.is_connected() && h.edge_count() > 1);
                let rep = exponents(&h).unwrap();
                prop_assert!(rep.mu1 <= rep.tau && rep.mu2 <= rep.tau);
            }
        }
    }
}
