//! Truncated dual sets for the Lagrangian algorithm.
//!
//! Each agent bounds `f^i(x) - q^i(mu~)` from above and the constraint
//! margin `min_l -g_l(x)` from below over its strictly feasible points, the
//! network agrees on the worst case with max/min consensus, and every agent
//! then projects its multipliers onto `{mu >= 0 : ||mu|| <= N b*/c* + theta^i}`.
//!
//! Estimation errors are always pushed in the direction that enlarges the
//! dual set: over-estimating `b` or under-estimating `c` only loosens it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::consensus::{run_max_min_consensus, MaxMinEstimates};
use crate::convex::{LagrangianPieces, ProjectableSet};
use crate::error::{check_dim, check_nonneg, Error, Result};
use crate::linalg::{axpy, norm};
use crate::network::GraphSequence;
use crate::problems::ProblemSpec;

/// `delta > 0` defining the closed strictly-feasible set
/// `J^i_delta = { x in X^i : g(x) <= -delta }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaterMargin(f64);

impl SlaterMargin {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta.is_finite() {
            Ok(SlaterMargin(delta))
        } else {
            Err(Error::InvalidArgument(format!(
                "Slater margin must be positive, got {delta}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// How many points to evaluate when estimating local bounds, and how much
/// slack to add on top of the sampled extremes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBudget {
    pub samples: usize,
    pub seed: u64,
    /// Fraction of the observed value range added as slack.
    pub safety_fraction: f64,
}

impl Default for SamplingBudget {
    fn default() -> Self {
        SamplingBudget {
            samples: 20_000,
            seed: 0,
            safety_fraction: 0.1,
        }
    }
}

/// Grid (endpoints included) plus uniform random points in a box.
pub(crate) fn sample_box(lo: &[f64], hi: &[f64], budget: &SamplingBudget) -> Vec<Vec<f64>> {
    let n = lo.len();
    let per_dim = (budget.samples as f64).powf(1.0 / n as f64).floor() as usize;
    let mut points = Vec::with_capacity(budget.samples);
    if per_dim >= 2 {
        let total = per_dim.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let p: Vec<f64> = (0..n)
                .map(|d| {
                    let t = (rem % per_dim) as f64 / (per_dim - 1) as f64;
                    rem /= per_dim;
                    lo[d] + t * (hi[d] - lo[d])
                })
                .collect();
            points.push(p);
        }
    } else {
        // too few samples for a grid: keep the two extreme corners
        points.push(lo.to_vec());
        points.push(hi.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    while points.len() < budget.samples {
        points.push((0..n).map(|d| rng.random_range(lo[d]..=hi[d])).collect());
    }
    points
}

fn box_bounds(set: &ProjectableSet) -> Result<(&[f64], &[f64])> {
    match set {
        ProjectableSet::Box { lo, hi } => Ok((lo, hi)),
        other => Err(Error::InvalidArgument(format!(
            "bound sampling needs a box local set, got {other:?}; supply b0/c0 explicitly"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualValueEstimate {
    /// Smallest sampled (and locally refined) value of `L^i(., mu~)`.
    pub sampled_min: f64,
    /// `sampled_min` minus the safety slack; a lower bound on `q^i(mu~)`.
    pub bound: f64,
}

/// Lower estimate of `q^i(mu~) = inf_{x in X^i} L^i(x, mu~)`.
pub fn estimate_local_dual_value(
    pieces: &LagrangianPieces<'_>,
    set: &ProjectableSet,
    mu_tilde: &[f64],
    budget: &SamplingBudget,
) -> Result<DualValueEstimate> {
    if budget.samples == 0 {
        return Err(Error::InvalidArgument("empty sampling budget".into()));
    }
    check_nonneg("reference multiplier", mu_tilde)?;
    let (lo, hi) = box_bounds(set)?;
    let mut best = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    let mut argmin = lo.to_vec();
    for x in sample_box(lo, hi, budget) {
        let v = pieces.value(&x, mu_tilde)?;
        worst = worst.max(v);
        if v < best {
            best = v;
            argmin = x;
        }
    }

    // Polish the best sample with normalized projected subgradient steps.
    let diameter = lo.iter().zip(hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt();
    let mut x = argmin;
    for k in 0..500 {
        let d = pieces.primal_subgradient(&x, mu_tilde)?;
        let dn = norm(&d);
        if dn == 0.0 {
            break;
        }
        let step = diameter / (4.0 * (k as f64 + 1.0) * dn);
        x = set.project(&axpy(&x, -step, &d))?;
        best = best.min(pieces.value(&x, mu_tilde)?);
    }

    let slack = budget.safety_fraction * (worst - best).max(0.0);
    Ok(DualValueEstimate {
        sampled_min: best,
        bound: best - slack,
    })
}

/// Added to every `b^i(0)` so it stays strictly positive even when
/// `f^i - q^i` vanishes on the sampled points.
const MIN_UPPER_BOUND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalBounds {
    pub b0: f64,
    pub c0: f64,
    /// Sampled point of `J^i_delta` with the largest constraint margin.
    pub slater_point: Vec<f64>,
    pub dual_value: DualValueEstimate,
}

/// The sampled point of `J^i_delta` with the largest `min_l -g_l(x)`.
pub fn slater_point(
    pieces: &LagrangianPieces<'_>,
    set: &ProjectableSet,
    margin: SlaterMargin,
    budget: &SamplingBudget,
) -> Result<Vec<f64>> {
    let (lo, hi) = box_bounds(set)?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x in sample_box(lo, hi, budget) {
        let slack = constraint_margin(pieces, &x)?;
        if slack >= margin.get() && best.as_ref().is_none_or(|(s, _)| slack > *s) {
            best = Some((slack, x));
        }
    }
    best.map(|(_, x)| x).ok_or(Error::EmptySlaterSet {
        agent: pieces.agent,
        margin: margin.get(),
    })
}

fn constraint_margin(pieces: &LagrangianPieces<'_>, x: &[f64]) -> Result<f64> {
    Ok(pieces
        .constraint_values(x)?
        .iter()
        .map(|g| -g)
        .fold(f64::INFINITY, f64::min))
}

/// `b^i(0) >= sup_{J^i_delta} (f^i - q^i(mu~))` and `c^i(0) = delta`.
pub fn local_bound_init(
    pieces: &LagrangianPieces<'_>,
    set: &ProjectableSet,
    mu_tilde: &[f64],
    margin: SlaterMargin,
    budget: &SamplingBudget,
) -> Result<LocalBounds> {
    let dual_value = estimate_local_dual_value(pieces, set, mu_tilde, budget)?;
    let (lo, hi) = box_bounds(set)?;
    let mut f_max = f64::NEG_INFINITY;
    let mut f_min = f64::INFINITY;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x in sample_box(lo, hi, budget) {
        let slack = constraint_margin(pieces, &x)?;
        if slack < margin.get() {
            continue;
        }
        let f = pieces.objective.value(&x)?;
        f_max = f_max.max(f);
        f_min = f_min.min(f);
        if best.as_ref().is_none_or(|(s, _)| slack > *s) {
            best = Some((slack, x));
        }
    }
    let Some((_, slater_point)) = best else {
        return Err(Error::EmptySlaterSet {
            agent: pieces.agent,
            margin: margin.get(),
        });
    };
    let raw = f_max - dual_value.bound;
    let b0 = raw.max(0.0) + budget.safety_fraction * (raw.abs() + (f_max - f_min)) + MIN_UPPER_BOUND;
    Ok(LocalBounds {
        b0,
        c0: margin.get(),
        slater_point,
        dual_value,
    })
}

/// Per-agent dual sets `M^i = NonnegBall(N b*/c* + theta^i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBoxes {
    pub radii: Vec<f64>,
    pub b_star: f64,
    pub c_star: f64,
    /// Graph rounds consumed by the max/min consensus phase, `(N - 1) B`.
    pub consensus_rounds: usize,
}

impl DualBoxes {
    pub fn set(&self, agent: usize, m: usize) -> Result<ProjectableSet> {
        ProjectableSet::nonneg_ball(m, self.radii[agent])
    }

    pub fn min_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Runs max-consensus on `b` and min-consensus on `c` for exactly
/// `(N - 1) B` rounds of `g` (starting at round 0) and forms the radii.
pub fn build_dual_boxes(b0: &[f64], c0: &[f64], g: &GraphSequence, theta: &[f64]) -> Result<DualBoxes> {
    let n = g.agents();
    check_dim("b(0) per agent", n, b0.len())?;
    check_dim("c(0) per agent", n, c0.len())?;
    check_dim("theta per agent", n, theta.len())?;
    if b0.iter().chain(c0).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(
            "b(0) and c(0) must be positive and finite".into(),
        ));
    }
    if theta.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("theta must be finite and nonnegative".into()));
    }
    let rounds = (n - 1) * g.period();
    let start = MaxMinEstimates::new(b0.to_vec(), c0.to_vec())?;
    let end = run_max_min_consensus(&start, g, 0, rounds)?;
    if !end.agreed() {
        return Err(Error::ConsensusNotReached { rounds });
    }
    let b_star = end.b[0];
    let c_star = end.c[0];
    Ok(DualBoxes {
        radii: theta.iter().map(|t| n as f64 * b_star / c_star + t).collect(),
        b_star,
        c_star,
        consensus_rounds: rounds,
    })
}

/// Inputs of the bounds phase. `theta`, `b0` and `c0` hold either one value
/// shared by every agent or one value per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBoundConfig {
    /// Reference multiplier; zero when `None`.
    pub mu_tilde: Option<Vec<f64>>,
    pub margin: f64,
    pub theta: Vec<f64>,
    pub budget: SamplingBudget,
    pub b0: Option<Vec<f64>>,
    pub c0: Option<Vec<f64>>,
}

impl Default for DualBoundConfig {
    fn default() -> Self {
        DualBoundConfig {
            mu_tilde: None,
            margin: 0.5,
            theta: vec![1.0],
            budget: SamplingBudget::default(),
            b0: None,
            c0: None,
        }
    }
}

pub(crate) fn per_agent(name: &str, values: &[f64], agents: usize) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; agents]),
        n if n == agents => Ok(values.to_vec()),
        n => Err(Error::InvalidArgument(format!(
            "{name} needs 1 or {agents} values, got {n}"
        ))),
    }
}

/// Result of the bounds phase: the dual sets and, when sampling was used,
/// each agent's local bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSetup {
    pub boxes: DualBoxes,
    pub local: Vec<Option<LocalBounds>>,
}

/// Local bound initialization for every agent (skipped where `b0`/`c0`
/// overrides are given) followed by [`build_dual_boxes`].
pub fn prepare_dual_boxes(problem: &ProblemSpec, g: &GraphSequence, cfg: &DualBoundConfig) -> Result<DualSetup> {
    let n = problem.agents();
    check_dim("graph agents", n, g.agents())?;
    let mu_tilde = cfg.mu_tilde.clone().unwrap_or_else(|| vec![0.0; problem.m()]);
    check_dim("reference multiplier", problem.m(), mu_tilde.len())?;
    let theta = per_agent("theta", &cfg.theta, n)?;
    let b_over = cfg.b0.as_deref().map(|b| per_agent("b0", b, n)).transpose()?;
    let c_over = cfg.c0.as_deref().map(|c| per_agent("c0", c, n)).transpose()?;
    let margin = SlaterMargin::new(cfg.margin)?;

    let mut b0 = Vec::with_capacity(n);
    let mut c0 = Vec::with_capacity(n);
    let mut local = Vec::with_capacity(n);
    for i in 0..n {
        let sampled = if b_over.is_none() || c_over.is_none() {
            Some(local_bound_init(
                &problem.lagrangian(i),
                problem.local_set(i),
                &mu_tilde,
                margin,
                &cfg.budget,
            )?)
        } else {
            None
        };
        b0.push(match (&b_over, &sampled) {
            (Some(b), _) => b[i],
            (None, Some(s)) => s.b0,
            (None, None) => unreachable!(),
        });
        c0.push(match (&c_over, &sampled) {
            (Some(c), _) => c[i],
            (None, Some(s)) => s.c0,
            (None, None) => unreachable!(),
        });
        local.push(sampled);
    }
    let boxes = build_dual_boxes(&b0, &c0, g, &theta)?;
    Ok(DualSetup { boxes, local })
}
