//! Count estimates from sketch contents.
//!
//! A single sketch at rate `p` yields `k^k · copies_found / (A(H) · Π_a q_a)`,
//! an unbiased estimate of the copy count. When the count is unknown, the
//! driver runs a geometric ladder of rates over the same stream and reports
//! the sparsest level that still sees enough colorful copies; if none does, it
//! falls back to storing the whole stream and counting exactly.

use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cover::{ratio_f64, FractionalCover};
use crate::hypergraph::{DataGraph, EdgeStreamUpdate, HypergraphError, PatternGraph};
use crate::oracle::{exact_count, OracleError};
use crate::pattern::{analyze, PatternAnalysis, PatternError};
use crate::sketch::{derive_seed, SketchConfig, SketchError, SketchState};

/// Default oversample constant `C`.
pub const DEFAULT_OVERSAMPLE: f64 = 100.0;
/// Constant of the bounded-degree regime check.
pub const DEGREE_REGIME_CONSTANT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("pattern analysis does not match the sketch's pattern")]
    PatternMismatch,
    #[error("no estimates to combine")]
    EmptyInput,
    #[error("median needs an odd number of estimates, got {0}")]
    EvenCount(usize),
    #[error("invalid rate plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Stream(#[from] HypergraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub copies_found: u64,
    pub p_used: f64,
    pub level: u32,
    pub retained: u64,
    /// Produced by storing the whole stream and counting exactly.
    pub exact: bool,
}

/// `k^k / (A(H) · Π_a q_a)`: the estimate contributed by each colorful copy.
pub fn scale_factor(config: &SketchConfig, automorphisms: u64) -> f64 {
    let k = config.pattern().k();
    let kk = (k as f64).powi(k as i32);
    let q: f64 = config.retention_probs().iter().product();
    kk / (automorphisms as f64 * q)
}

pub fn estimate_from(state: &SketchState, analysis: &PatternAnalysis) -> Result<Estimate, EstimateError> {
    let config = state.config();
    if !analysis.matches(config.pattern()) {
        return Err(EstimateError::PatternMismatch);
    }
    let copies_found = state.colorful_copies()?;
    let value = if copies_found == 0 {
        0.0
    } else {
        copies_found as f64 * scale_factor(config, analysis.automorphisms)
    };
    Ok(Estimate {
        value,
        copies_found,
        p_used: config.p(),
        level: level_of(config.p()),
        retained: state.retained_count() as u64,
        exact: false,
    })
}

/// Ladder index `i` when `p = 2^{-i}`, else 0.
fn level_of(p: f64) -> u32 {
    let i = -p.log2();
    if i >= 0.0 && i.fract() == 0.0 && i < 64.0 {
        i as u32
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateChoice {
    pub p: f64,
    /// `p · m`, the expected number of sampled edges.
    pub expected_space: f64,
    /// `p = 1`: keep the whole stream.
    pub store_all: bool,
}

/// `p = min(1, (C / (ε² T))^{1/τ})`.
pub fn choose_p(m: u64, t_guess: f64, epsilon: f64, tau: Rational64, oversample: f64) -> RateChoice {
    let base = oversample / (epsilon * epsilon * t_guess.max(1.0));
    let p = base.powf(1.0 / ratio_f64(tau)).min(1.0);
    RateChoice {
        p,
        expected_space: p * m as f64,
        store_all: p >= 1.0,
    }
}

/// `C′ · ε^{1/τ} · T^{1/(2τ)}`, the largest degree covered by the variance guarantee.
pub fn degree_regime_bound(epsilon: f64, tau: Rational64, t: f64) -> f64 {
    let inv = 1.0 / ratio_f64(tau);
    DEGREE_REGIME_CONSTANT * epsilon.powf(inv) * t.max(0.0).powf(inv / 2.0)
}

/// Logs a warning when `max_degree` exceeds the regime bound. Returns whether it did.
pub fn check_degree_regime(max_degree: usize, epsilon: f64, tau: Rational64, t: f64) -> bool {
    let bound = degree_regime_bound(epsilon, tau, t);
    let outside = max_degree as f64 > bound;
    if outside {
        log::warn!(
            "max degree {max_degree} exceeds {bound:.3}; the estimate stays unbiased but its variance bound does not apply"
        );
    }
    outside
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePlan {
    pub epsilon: f64,
    pub oversample: f64,
    /// Sampling rates, strictly decreasing, first at most 1.
    pub levels: Vec<f64>,
    /// Odd number of independent repetitions for the median.
    pub repetitions: u32,
}

impl RatePlan {
    /// Rates `2^{-i}` for `i = 0..=⌈log₂ m⌉`, or for `i < levels` when given.
    pub fn geometric(m: u64, epsilon: f64, levels: Option<u32>, repetitions: u32) -> Result<Self, EstimateError> {
        let count = levels.unwrap_or_else(|| (m.max(1) as f64).log2().ceil() as u32 + 1);
        let plan = Self {
            epsilon,
            oversample: DEFAULT_OVERSAMPLE,
            levels: (0..count.min(63)).map(|i| 0.5f64.powi(i as i32)).collect(),
            repetitions,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |msg: &str| Err(EstimateError::InvalidPlan(msg.into()));
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad("epsilon must lie in (0, 1]");
        }
        if !(self.oversample > 0.0 && self.oversample.is_finite()) {
            return bad("oversample constant must be positive");
        }
        if self.levels.is_empty() {
            return bad("at least one level is required");
        }
        if !(self.levels[0] <= 1.0) || self.levels.iter().any(|&p| !(p > 0.0)) {
            return bad("levels must lie in (0, 1]");
        }
        if self.levels.windows(2).any(|w| w[1] >= w[0]) {
            return bad("levels must be strictly decreasing");
        }
        if self.repetitions % 2 == 0 {
            return bad("repetitions must be odd");
        }
        Ok(())
    }

    /// Qualification threshold `θ = max(100, 4/ε²)`.
    pub fn threshold(&self) -> f64 {
        (4.0 / (self.epsilon * self.epsilon)).max(100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRun {
    /// One estimate per plan level, in plan order.
    pub levels: Vec<Estimate>,
    pub selected: Estimate,
}

fn exact_estimate(stream: &[EdgeStreamUpdate], h: &PatternGraph) -> Result<Estimate, EstimateError> {
    let graph = DataGraph::from_stream(stream)?;
    let copies = exact_count(&graph, h)?.copies;
    Ok(Estimate {
        value: copies as f64,
        copies_found: copies,
        p_used: 1.0,
        level: 0,
        retained: graph.m() as u64,
        exact: true,
    })
}

/// Every level's estimate plus the selected one.
pub fn run_levels_detailed(
    stream: &[EdgeStreamUpdate],
    h: &PatternGraph,
    cover: &FractionalCover,
    plan: &RatePlan,
    seed: u64,
) -> Result<LevelRun, EstimateError> {
    plan.validate()?;
    let analysis = analyze(h)?;
    // Levels share the seed, so their retained sets are nested.
    let levels = plan
        .levels
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let config = SketchConfig::new(h.clone(), cover, p, seed)?;
            let mut state = SketchState::new(config);
            state.extend(stream);
            let mut est = estimate_from(&state, &analysis)?;
            est.level = i as u32;
            Ok(est)
        })
        .collect::<Result<Vec<_>, EstimateError>>()?;
    let theta = plan.threshold();
    let selected = match levels.iter().rev().find(|e| e.copies_found as f64 >= theta) {
        Some(e) => *e,
        None => exact_estimate(stream, h)?,
    };
    Ok(LevelRun { levels, selected })
}

pub fn run_levels(
    stream: &[EdgeStreamUpdate],
    h: &PatternGraph,
    cover: &FractionalCover,
    plan: &RatePlan,
    seed: u64,
) -> Result<Estimate, EstimateError> {
    Ok(run_levels_detailed(stream, h, cover, plan, seed)?.selected)
}

/// Single sketch at a fixed rate, or an exact count when `p = 1` is requested
/// with `store_all`.
pub fn run_fixed(
    stream: &[EdgeStreamUpdate],
    h: &PatternGraph,
    cover: &FractionalCover,
    rate: RateChoice,
    seed: u64,
) -> Result<Estimate, EstimateError> {
    if rate.store_all {
        return exact_estimate(stream, h);
    }
    let analysis = analyze(h)?;
    let mut state = SketchState::new(SketchConfig::new(h.clone(), cover, rate.p, seed)?);
    state.extend(stream);
    estimate_from(&state, &analysis)
}

/// Median over `plan.repetitions` independent runs of the level driver.
pub fn run_plan(
    stream: &[EdgeStreamUpdate],
    h: &PatternGraph,
    cover: &FractionalCover,
    plan: &RatePlan,
    seed: u64,
) -> Result<Estimate, EstimateError> {
    plan.validate()?;
    if plan.repetitions == 1 {
        return run_levels(stream, h, cover, plan, seed);
    }
    let runs = (0..plan.repetitions as u64)
        .into_par_iter()
        .map(|r| run_levels(stream, h, cover, plan, derive_seed(seed, r)))
        .collect::<Result<Vec<_>, _>>()?;
    median_estimate(&runs)
}

/// The estimate with the median value.
pub fn median_estimate(values: &[Estimate]) -> Result<Estimate, EstimateError> {
    if values.is_empty() {
        return Err(EstimateError::EmptyInput);
    }
    if values.len() % 2 == 0 {
        return Err(EstimateError::EvenCount(values.len()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(sorted[values.len() / 2])
}
