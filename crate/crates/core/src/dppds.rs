//! The distributed penalty primal-dual subgradient algorithm for problems
//! with equality constraints and a single local set `X` shared by all agents.
//!
//! Agents descend on `H^i(x, mu, lambda) = f^i(x) + mu . [g(x)]^+ +
//! lambda . |h(x)|` in `x` and ascend in the multipliers. The multipliers
//! are never projected; they only grow.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dist_sq, norm, norm_sq, sub, sum, sup_dist};
use crate::network::GraphSequence;
use crate::network::WeightMatrix;
use crate::probes::{self, Probes, RELATION_TOLERANCE};
use crate::problems::ProblemSpec;
use crate::schedule::{validate_assumption6, StepSizeSchedule};
use crate::trace::{AgentSnapshot, Algorithm, RoundMetrics, RoundRecord, RunTrace};

pub use crate::schedule::Assumption6Report;

#[derive(Debug, Clone, PartialEq)]
pub struct DppdsAgentState {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub y: f64,
    /// `f^i(x^i(k - 1))`; `None` at round 0.
    pub prev_f: Option<f64>,
}

impl DppdsAgentState {
    pub fn new(x: Vec<f64>, m: usize, nu: usize) -> Self {
        DppdsAgentState {
            x,
            mu: vec![0.0; m],
            lambda: vec![0.0; nu],
            y: 0.0,
            prev_f: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMixed {
    pub v_x: Vec<f64>,
    pub v_mu: Vec<f64>,
    pub v_lambda: Vec<f64>,
    pub v_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DppdsRound {
    pub next: Vec<DppdsAgentState>,
    pub mixed: Vec<PenaltyMixed>,
    /// `S_x^i`, the penalty subgradient at `(v_x, v_mu, v_lambda)`.
    pub s_x: Vec<Vec<f64>>,
    /// `[g(v_x^i)]^+`
    pub u_mu: Vec<Vec<f64>>,
    /// `|h(v_x^i)|`
    pub u_lambda: Vec<Vec<f64>>,
    pub f_now: Vec<f64>,
}

pub fn mix_penalty(states: &[DppdsAgentState], w: &WeightMatrix) -> Result<Vec<PenaltyMixed>> {
    check_dim("agents in weight matrix", w.size(), states.len())?;
    let pick =
        |f: fn(&DppdsAgentState) -> &Vec<f64>| -> Vec<Vec<f64>> { states.iter().map(|s| f(s).clone()).collect() };
    let v_x = w.mix_vectors(&pick(|s| &s.x))?;
    let v_mu = w.mix_vectors(&pick(|s| &s.mu))?;
    let v_lambda = w.mix_vectors(&pick(|s| &s.lambda))?;
    let v_y = w.mix_scalars(&states.iter().map(|s| s.y).collect::<Vec<_>>())?;
    Ok(v_x
        .into_iter()
        .zip(v_mu)
        .zip(v_lambda)
        .zip(v_y)
        .map(|(((v_x, v_mu), v_lambda), v_y)| PenaltyMixed {
            v_x,
            v_mu,
            v_lambda,
            v_y,
        })
        .collect())
}

/// One synchronous round with common step `alpha = alpha(k)`.
pub fn dppds_round(
    problem: &ProblemSpec,
    states: &[DppdsAgentState],
    w: &WeightMatrix,
    k: usize,
    alpha: f64,
) -> Result<DppdsRound> {
    let n = problem.agents();
    check_dim("agent states", n, states.len())?;
    let mixed = mix_penalty(states, w)?;
    let set = problem.local_set(0);
    let scale = n as f64;
    let mut out = DppdsRound {
        next: Vec::with_capacity(n),
        mixed: Vec::new(),
        s_x: Vec::with_capacity(n),
        u_mu: Vec::with_capacity(n),
        u_lambda: Vec::with_capacity(n),
        f_now: Vec::with_capacity(n),
    };
    for (i, (s, v)) in states.iter().zip(&mixed).enumerate() {
        let ctx = |op| move |e: Error| e.in_round(k, i, op);
        let pieces = problem.penalty(i);
        let s_x = pieces
            .primal_subgradient(&v.v_x, &v.v_mu, &v.v_lambda)
            .map_err(ctx("penalty subgradient"))?;
        let (u_mu, u_lambda) = pieces.supgradient(&v.v_x).map_err(ctx("penalty supgradient"))?;
        let x = set
            .project(&axpy(&v.v_x, -alpha, &s_x))
            .map_err(ctx("primal projection"))?;
        let f_now = problem.objective(i).value(&s.x).map_err(ctx("objective"))?;
        let y = match s.prev_f {
            None => scale * f_now,
            Some(prev) => v.v_y + scale * (f_now - prev),
        };
        out.next.push(DppdsAgentState {
            x,
            mu: axpy(&v.v_mu, alpha, &u_mu),
            lambda: axpy(&v.v_lambda, alpha, &u_lambda),
            y,
            prev_f: Some(f_now),
        });
        out.s_x.push(s_x);
        out.u_mu.push(u_mu);
        out.u_lambda.push(u_lambda);
        out.f_now.push(f_now);
    }
    out.mixed = mixed;
    Ok(out)
}

/// `max` over coordinates of `|sum_i mu^i(k+1) - sum_i mu^i(k) - alpha sum_i u_mu^i|`
/// and the `lambda` analogue.
pub fn dual_sum_residual(prev: &[DppdsAgentState], round: &DppdsRound, alpha: f64) -> f64 {
    let channel = |get: fn(&DppdsAgentState) -> &Vec<f64>, inputs: &[Vec<f64>]| -> f64 {
        let Some(first) = prev.first() else { return 0.0 };
        let width = get(first).len();
        let before = sum(&prev.iter().map(|s| get(s).clone()).collect::<Vec<_>>(), width);
        let after = sum(&round.next.iter().map(|s| get(s).clone()).collect::<Vec<_>>(), width);
        let added = sum(inputs, width);
        (0..width)
            .map(|l| (after[l] - before[l] - alpha * added[l]).abs())
            .fold(0.0, f64::max)
    };
    channel(|s| &s.mu, &round.u_mu).max(channel(|s| &s.lambda, &round.u_lambda))
}

/// Worst `lhs - rhs` of the two penalty iteration relations at the probe
/// `(x, mu, lambda)` with `x in X` and nonnegative multipliers.
pub fn penalty_relation_excess(
    problem: &ProblemSpec,
    prev: &[DppdsAgentState],
    round: &DppdsRound,
    alpha: f64,
    x: &[f64],
    mu: &[f64],
    lambda: &[f64],
) -> Result<(f64, f64)> {
    let mut lhs_x = 0.0;
    let mut rhs_x = 0.0;
    let mut rhs_dual = 0.0;
    for i in 0..problem.agents() {
        let pieces = problem.penalty(i);
        let v = &round.mixed[i];
        let next = &round.next[i];
        let h_v = pieces.value(&v.v_x, &v.v_mu, &v.v_lambda)?;

        lhs_x += norm_sq(&sub(&next.x, &axpy(&v.v_x, -alpha, &round.s_x[i])));
        rhs_x += alpha * alpha * norm_sq(&round.s_x[i]) + dist_sq(&prev[i].x, x)
            - dist_sq(&next.x, x)
            - 2.0 * alpha * (h_v - pieces.value(x, &v.v_mu, &v.v_lambda)?);

        rhs_dual += dist_sq(&prev[i].mu, mu) - dist_sq(&next.mu, mu) + dist_sq(&prev[i].lambda, lambda)
            - dist_sq(&next.lambda, lambda)
            + 2.0 * alpha * (h_v - pieces.value(&v.v_x, mu, lambda)?)
            + alpha * alpha * (norm_sq(&round.u_mu[i]) + norm_sq(&round.u_lambda[i]));
    }
    Ok((lhs_x - rhs_x, -rhs_dual))
}

pub const DEFAULT_DUAL_CAP: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct DppdsConfig {
    pub rounds: usize,
    pub schedule: StepSizeSchedule,
    /// Initial primal points; the centre of `X` when `None`.
    pub init: Option<Vec<Vec<f64>>>,
    pub debug_asserts: bool,
    pub probe_seed: u64,
    /// Abort when any multiplier norm exceeds this.
    pub dual_cap: f64,
    pub early_stop: Option<f64>,
}

impl Default for DppdsConfig {
    fn default() -> Self {
        DppdsConfig {
            rounds: 50_000,
            schedule: StepSizeSchedule::harmonic(),
            init: None,
            debug_asserts: false,
            probe_seed: 0,
            dual_cap: DEFAULT_DUAL_CAP,
            early_stop: None,
        }
    }
}

const MEMBERSHIP_TOLERANCE: f64 = 1e-9;
const PROBE_DUAL_SCALE: f64 = 10.0;

pub fn run_dppds(problem: &ProblemSpec, g: &GraphSequence, config: &DppdsConfig) -> Result<RunTrace> {
    let n = problem.agents();
    let (m, nu) = (problem.m(), problem.nu());
    if config.rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be positive".into()));
    }
    if !problem.has_identical_sets() {
        return Err(Error::Precondition(
            "the penalty algorithm requires every agent to hold the same local set".into(),
        ));
    }
    let report = validate_assumption6(&config.schedule, config.rounds.max(10))?;
    if !report.passes() {
        return Err(Error::Schedule(report.to_string()));
    }
    crate::dlpds::validate_graph(problem, g, config.rounds)?;

    let set = problem.local_set(0);
    let mut states: Vec<DppdsAgentState> = match &config.init {
        Some(points) => {
            check_dim("initial points", n, points.len())?;
            points
                .iter()
                .map(|p| Ok(DppdsAgentState::new(set.project(p)?, m, nu)))
                .collect::<Result<_>>()?
        }
        None => vec![DppdsAgentState::new(set.center()?, m, nu); n],
    };

    let probes = if config.debug_asserts {
        Some(probes::draw(config.probe_seed, set, m + nu, PROBE_DUAL_SCALE, None)?)
    } else {
        None
    };

    let mut trace = RunTrace::new(Algorithm::Dppds, problem);
    let scale = n as f64;
    for k in 0..config.rounds {
        let alpha = config.schedule.alpha(k);
        let w = g.weights_at(k);
        let round = dppds_round(problem, &states, &w, k, alpha)?;

        for (i, s) in round.next.iter().enumerate() {
            if !set.contains(&s.x, MEMBERSHIP_TOLERANCE) {
                return Err(Error::InvariantViolated(format!(
                    "round {k}, agent {i}: primal estimate left the local set"
                )));
            }
            let size = norm(&s.mu).max(norm(&s.lambda));
            if !(size <= config.dual_cap) {
                return Err(Error::DualBlowUp {
                    round: k,
                    norm: size,
                    cap: config.dual_cap,
                });
            }
        }
        let diag = &mut trace.diagnostics;
        let y_sum: f64 = round.next.iter().map(|s| s.y).sum();
        let f_sum: f64 = round.f_now.iter().sum();
        diag.max_conservation_residual = diag.max_conservation_residual.max((y_sum - scale * f_sum).abs());
        diag.max_dual_sum_residual = diag
            .max_dual_sum_residual
            .max(dual_sum_residual(&states, &round, alpha));

        if let Some(Probes { x, duals }) = &probes {
            for (p, (px, pd)) in x.iter().zip(duals).enumerate() {
                let (pmu, plambda) = pd.split_at(m);
                let (ex, ed) = penalty_relation_excess(problem, &states, &round, alpha, px, pmu, plambda)?;
                diag.relation_checks += 2;
                for (relation, excess) in [("primal", ex), ("dual", ed)] {
                    if excess > RELATION_TOLERANCE {
                        return Err(Error::InvariantViolated(format!(
                            "round {k}, probe {p}: {relation} penalty iteration relation exceeded by {excess:e}"
                        )));
                    }
                }
            }
        }

        let moved = states
            .iter()
            .zip(&round.next)
            .map(|(a, b)| sup_dist(&a.x, &b.x))
            .fold(0.0, f64::max);
        states = round.next;
        let agents: Vec<AgentSnapshot> = states
            .iter()
            .map(|s| AgentSnapshot {
                x: s.x.clone(),
                mu: s.mu.clone(),
                lambda: s.lambda.clone(),
                y: s.y,
            })
            .collect();
        let metrics = RoundMetrics::compute(&agents, problem)?;
        let stop = config
            .early_stop
            .is_some_and(|tol| metrics.delta_x <= tol && moved <= tol);
        trace.records.push(RoundRecord {
            k: k + 1,
            agents,
            metrics,
        });
        if stop {
            trace.diagnostics.stopped_early_at = Some(k + 1);
            break;
        }
    }
    Ok(trace)
}
