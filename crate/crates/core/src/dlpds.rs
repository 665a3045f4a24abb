//! The distributed Lagrangian primal-dual subgradient algorithm and its
//! primal-only special case.
//!
//! Every round each agent mixes its neighbours' primal, dual and
//! value estimates with the weights `A(k)`, takes a projected subgradient
//! step on its own Lagrangian `L^i(x, mu) = f^i(x) + mu . g(x)` in `x`, a
//! projected supgradient step in `mu`, and updates a dynamic average
//! tracker `y^i` of the optimal value.

use crate::bounds::{prepare_dual_boxes, slater_point, DualBoundConfig, SlaterMargin};
use crate::convex::ProjectableSet;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dist_sq, norm_sq, sub, sup_dist};
use crate::network::{validate_all, GraphSequence, WeightMatrix};
use crate::probes::{self, Probes, RELATION_TOLERANCE};
use crate::problems::ProblemSpec;
use crate::schedule::StepSizeSchedule;
use crate::trace::{AgentSnapshot, Algorithm, RoundMetrics, RoundRecord, RunTrace};

/// Agent `i` at round `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DlpdsAgentState {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    /// Estimate of the optimal value; meaningful from round 1 on.
    pub y: f64,
    /// `f^i(x^i(k - 1))`, the tracker's previous input; `None` at round 0.
    pub prev_f: Option<f64>,
}

impl DlpdsAgentState {
    pub fn new(x: Vec<f64>, m: usize) -> Self {
        DlpdsAgentState {
            x,
            mu: vec![0.0; m],
            y: 0.0,
            prev_f: None,
        }
    }
}

/// Convex combinations `v_x^i`, `v_mu^i`, `v_y^i` of round `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedIntermediates {
    pub v_x: Vec<f64>,
    pub v_mu: Vec<f64>,
    pub v_y: f64,
}

pub fn mix(states: &[DlpdsAgentState], w: &WeightMatrix) -> Result<Vec<MixedIntermediates>> {
    check_dim("agents in weight matrix", w.size(), states.len())?;
    let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
    let mus: Vec<Vec<f64>> = states.iter().map(|s| s.mu.clone()).collect();
    let ys: Vec<f64> = states.iter().map(|s| s.y).collect();
    let v_x = w.mix_vectors(&xs)?;
    let v_mu = w.mix_vectors(&mus)?;
    let v_y = w.mix_scalars(&ys)?;
    Ok(v_x
        .into_iter()
        .zip(v_mu)
        .zip(v_y)
        .map(|((v_x, v_mu), v_y)| MixedIntermediates { v_x, v_mu, v_y })
        .collect())
}

/// Everything a round produced, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DlpdsRound {
    pub next: Vec<DlpdsAgentState>,
    pub mixed: Vec<MixedIntermediates>,
    /// `D_x^i = Df^i(v_x) + sum_l v_mu_l Dg_l(v_x)`
    pub d_x: Vec<Vec<f64>>,
    /// `D_mu^i = g(v_x)`
    pub d_mu: Vec<Vec<f64>>,
    /// `f^i(x^i(k))`
    pub f_now: Vec<f64>,
}

/// One synchronous round from `x(k), mu(k), y(k)` to round `k + 1`.
/// `alphas[i]` is agent `i`'s step `alpha^i(k)`; `dual_sets[i]` is `M^i`.
pub fn dlpds_round(
    problem: &ProblemSpec,
    states: &[DlpdsAgentState],
    w: &WeightMatrix,
    k: usize,
    alphas: &[f64],
    dual_sets: &[ProjectableSet],
) -> Result<DlpdsRound> {
    let n = problem.agents();
    check_dim("agent states", n, states.len())?;
    check_dim("per-agent step sizes", n, alphas.len())?;
    check_dim("dual sets", n, dual_sets.len())?;
    let mixed = mix(states, w)?;
    let scale = n as f64;
    let mut out = DlpdsRound {
        next: Vec::with_capacity(n),
        mixed: Vec::new(),
        d_x: Vec::with_capacity(n),
        d_mu: Vec::with_capacity(n),
        f_now: Vec::with_capacity(n),
    };
    for (i, (s, v)) in states.iter().zip(&mixed).enumerate() {
        let ctx = |op| move |e: Error| e.in_round(k, i, op);
        let pieces = problem.lagrangian(i);
        let a = alphas[i];
        let d_x = pieces
            .primal_subgradient(&v.v_x, &v.v_mu)
            .map_err(ctx("primal subgradient"))?;
        let d_mu = pieces.dual_supgradient(&v.v_x).map_err(ctx("dual supgradient"))?;
        let x = problem
            .local_set(i)
            .project(&axpy(&v.v_x, -a, &d_x))
            .map_err(ctx("primal projection"))?;
        let mu = if d_mu.is_empty() {
            Vec::new()
        } else {
            dual_sets[i]
                .project(&axpy(&v.v_mu, a, &d_mu))
                .map_err(ctx("dual projection"))?
        };
        let f_now = problem.objective(i).value(&s.x).map_err(ctx("objective"))?;
        let y = match s.prev_f {
            None => scale * f_now,
            Some(prev) => v.v_y + scale * (f_now - prev),
        };
        out.next.push(DlpdsAgentState {
            x,
            mu,
            y,
            prev_f: Some(f_now),
        });
        out.d_x.push(d_x);
        out.d_mu.push(d_mu);
        out.f_now.push(f_now);
    }
    out.mixed = mixed;
    Ok(out)
}

/// Worst `lhs - rhs` of the two basic iteration relations of a round at
/// the probe `(x, mu)`, `x` in every `X^i`, `mu` in every `M^i`.
pub fn lagrangian_relation_excess(
    problem: &ProblemSpec,
    prev: &[DlpdsAgentState],
    round: &DlpdsRound,
    alphas: &[f64],
    x: &[f64],
    mu: &[f64],
) -> Result<(f64, f64)> {
    let mut lhs_x = 0.0;
    let mut rhs_x = 0.0;
    let mut lhs_mu = 0.0;
    let mut rhs_mu = 0.0;
    for i in 0..problem.agents() {
        let pieces = problem.lagrangian(i);
        let a = alphas[i];
        let v = &round.mixed[i];
        let next = &round.next[i];
        let l_v = pieces.value(&v.v_x, &v.v_mu)?;

        lhs_x += norm_sq(&sub(&next.x, &axpy(&v.v_x, -a, &round.d_x[i])));
        rhs_x += a * a * norm_sq(&round.d_x[i]) + dist_sq(&prev[i].x, x)
            - dist_sq(&next.x, x)
            - 2.0 * a * (l_v - pieces.value(x, &v.v_mu)?);

        lhs_mu += norm_sq(&sub(&next.mu, &axpy(&v.v_mu, a, &round.d_mu[i])));
        rhs_mu += a * a * norm_sq(&round.d_mu[i]) + dist_sq(&prev[i].mu, mu) - dist_sq(&next.mu, mu)
            + 2.0 * a * (l_v - pieces.value(&v.v_x, mu)?);
    }
    Ok((lhs_x - rhs_x, lhs_mu - rhs_mu))
}

/// Where the primal estimates start.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Initialization {
    /// Centre of each agent's local set.
    Center,
    /// The sampled point of each agent's local set with the largest
    /// constraint margin (the centre when there are no constraints).
    #[default]
    SlaterPoint,
    /// One point per agent, projected onto its local set.
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlpdsConfig {
    pub rounds: usize,
    /// One shared schedule or one per agent.
    pub schedules: Vec<StepSizeSchedule>,
    pub init: Initialization,
    pub bounds: DualBoundConfig,
    /// Evaluate the basic iteration relations every round and abort on a
    /// violation.
    pub debug_asserts: bool,
    pub probe_seed: u64,
    /// Stop once the primal disagreement and the largest primal move of a
    /// round both fall below this value.
    pub early_stop: Option<f64>,
}

impl Default for DlpdsConfig {
    fn default() -> Self {
        DlpdsConfig {
            rounds: 20_000,
            schedules: vec![StepSizeSchedule::harmonic()],
            init: Initialization::default(),
            bounds: DualBoundConfig::default(),
            debug_asserts: false,
            probe_seed: 0,
            early_stop: None,
        }
    }
}

/// Checks the graph over every round the run touches.
pub(crate) fn validate_graph(problem: &ProblemSpec, g: &GraphSequence, rounds: usize) -> Result<()> {
    check_dim("graph agents", problem.agents(), g.agents())?;
    let consensus = (g.agents() - 1) * g.period();
    let horizon = rounds.max(consensus) + g.period();
    let report = validate_all(g, horizon);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Error::Validation(report))
    }
}

const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// Bounds phase followed by `config.rounds` rounds of the algorithm. The
/// trace holds the states after each round, `k = 1..=rounds`.
pub fn run_dlpds(problem: &ProblemSpec, g: &GraphSequence, config: &DlpdsConfig) -> Result<RunTrace> {
    run(problem, g, config, Algorithm::Dlpds)
}

/// The unconstrained-coupling special case: the same iteration without a
/// dual channel. Requires `m = 0`.
pub fn run_primal_only(problem: &ProblemSpec, g: &GraphSequence, config: &DlpdsConfig) -> Result<RunTrace> {
    if problem.m() != 0 {
        return Err(Error::Precondition(format!(
            "the primal-only algorithm needs a problem without inequality constraints, got m = {}",
            problem.m()
        )));
    }
    run(problem, g, config, Algorithm::PrimalOnly)
}

fn run(problem: &ProblemSpec, g: &GraphSequence, config: &DlpdsConfig, algorithm: Algorithm) -> Result<RunTrace> {
    let n = problem.agents();
    let m = problem.m();
    if config.rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be positive".into()));
    }
    let schedules = match config.schedules.len() {
        1 => vec![config.schedules[0]; n],
        l if l == n => config.schedules.clone(),
        l => {
            return Err(Error::Precondition(format!(
                "need 1 or {n} step-size schedules, got {l}"
            )))
        }
    };
    for s in &schedules {
        s.require_standard_conditions()?;
    }
    validate_graph(problem, g, config.rounds)?;

    let mut trace = RunTrace::new(algorithm, problem);
    let dual_sets: Vec<ProjectableSet> = if m > 0 {
        let setup = prepare_dual_boxes(problem, g, &config.bounds)?;
        trace.diagnostics.consensus_rounds = setup.boxes.consensus_rounds;
        trace.diagnostics.dual_radii = setup.boxes.radii.clone();
        (0..n).map(|i| setup.boxes.set(i, m)).collect::<Result<_>>()?
    } else {
        vec![ProjectableSet::NonnegOrthant { dim: 0 }; n]
    };

    let starts = initial_points(problem, config)?;
    let mut states: Vec<DlpdsAgentState> = starts.into_iter().map(|x| DlpdsAgentState::new(x, m)).collect();

    let probes = if config.debug_asserts {
        let min_radius = trace
            .diagnostics
            .dual_radii
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let dual_set = if m > 0 {
            Some(ProjectableSet::nonneg_ball(m, min_radius)?)
        } else {
            None
        };
        Some(probes::draw(
            config.probe_seed,
            &problem.common_set()?,
            m,
            min_radius.min(10.0),
            dual_set.as_ref(),
        )?)
    } else {
        None
    };

    let scale = n as f64;
    for k in 0..config.rounds {
        let w = g.weights_at(k);
        let alphas: Vec<f64> = schedules.iter().map(|s| s.alpha(k)).collect();
        let round = dlpds_round(problem, &states, &w, k, &alphas, &dual_sets)?;

        for (i, s) in round.next.iter().enumerate() {
            if !problem.local_set(i).contains(&s.x, MEMBERSHIP_TOLERANCE) {
                return Err(Error::InvariantViolated(format!(
                    "round {k}, agent {i}: primal estimate left its local set"
                )));
            }
            if m > 0 && !dual_sets[i].contains(&s.mu, MEMBERSHIP_TOLERANCE) {
                return Err(Error::InvariantViolated(format!(
                    "round {k}, agent {i}: multiplier left its dual set"
                )));
            }
        }
        let y_sum: f64 = round.next.iter().map(|s| s.y).sum();
        let f_sum: f64 = round.f_now.iter().sum();
        let residual = (y_sum - scale * f_sum).abs();
        let diag = &mut trace.diagnostics;
        diag.max_conservation_residual = diag.max_conservation_residual.max(residual);

        if let Some(Probes { x, duals }) = &probes {
            for (p, (px, pmu)) in x.iter().zip(duals).enumerate() {
                let (ex, emu) = lagrangian_relation_excess(problem, &states, &round, &alphas, px, pmu)?;
                diag.relation_checks += 2;
                for (relation, excess) in [("primal", ex), ("dual", emu)] {
                    if excess > RELATION_TOLERANCE {
                        return Err(Error::InvariantViolated(format!(
                            "round {k}, probe {p}: {relation} iteration relation exceeded by {excess:e}"
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
        let record = snapshot(problem, k + 1, &states)?;
        let stop = config
            .early_stop
            .is_some_and(|tol| record.metrics.delta_x <= tol && moved <= tol);
        trace.records.push(record);
        if stop {
            trace.diagnostics.stopped_early_at = Some(k + 1);
            break;
        }
    }
    Ok(trace)
}

fn snapshot(problem: &ProblemSpec, k: usize, states: &[DlpdsAgentState]) -> Result<RoundRecord> {
    let agents: Vec<AgentSnapshot> = states
        .iter()
        .map(|s| AgentSnapshot {
            x: s.x.clone(),
            mu: s.mu.clone(),
            lambda: Vec::new(),
            y: s.y,
        })
        .collect();
    let metrics = RoundMetrics::compute(&agents, problem)?;
    Ok(RoundRecord { k, agents, metrics })
}

fn initial_points(problem: &ProblemSpec, config: &DlpdsConfig) -> Result<Vec<Vec<f64>>> {
    let n = problem.agents();
    match &config.init {
        Initialization::Points(points) => {
            check_dim("initial points", n, points.len())?;
            (0..n).map(|i| problem.local_set(i).project(&points[i])).collect()
        }
        Initialization::SlaterPoint if problem.m() > 0 => {
            let margin = SlaterMargin::new(config.bounds.margin)?;
            (0..n)
                .map(|i| {
                    slater_point(
                        &problem.lagrangian(i),
                        problem.local_set(i),
                        margin,
                        &config.bounds.budget,
                    )
                })
                .collect()
        }
        _ => (0..n).map(|i| problem.local_set(i).center()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexFn;
    use crate::problems::{build_custom, ProblemDescription};

    fn state(x: f64) -> DlpdsAgentState {
        DlpdsAgentState::new(vec![x], 0)
    }

    #[test]
    fn mixing_examples() {
        let s = vec![state(0.0), state(2.0)];
        let v = mix(&s, &WeightMatrix::uniform(2)).unwrap();
        assert_eq!(v[0].v_x, vec![1.0]);
        assert_eq!(v[1].v_x, vec![1.0]);

        let s3 = vec![state(4.0), state(0.0), state(8.0)];
        let w = WeightMatrix::new(vec![
            vec![0.5, 0.25, 0.25],
            vec![0.25, 0.5, 0.25],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        assert_eq!(mix(&s3, &w).unwrap()[0].v_x, vec![4.0]);
        assert_eq!(mix(&s3, &WeightMatrix::identity(3)).unwrap()[2].v_x, vec![8.0]);
    }

    #[test]
    fn single_agent_round_by_hand() {
        let problem = build_custom(ProblemDescription {
            name: "scalar".into(),
            objectives: vec![ConvexFn::linear(vec![1.0], 0.0)],
            inequality: vec![ConvexFn::linear(vec![1.0], -1.0)],
            local_sets: vec![ProjectableSet::cube(1, 0.0, 2.0).unwrap()],
            ..Default::default()
        })
        .unwrap();
        let states = vec![DlpdsAgentState::new(vec![2.0], 1)];
        let dual = vec![ProjectableSet::nonneg_ball(1, 1.0).unwrap()];
        let r = dlpds_round(&problem, &states, &WeightMatrix::identity(1), 0, &[0.5], &dual).unwrap();
        assert_eq!(r.next[0].x, vec![1.5]);
        assert_eq!(r.next[0].mu, vec![0.5]);
        assert_eq!(r.next[0].y, 2.0);
    }
}
