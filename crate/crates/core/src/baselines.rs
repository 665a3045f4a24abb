//! Single-agent baselines with full knowledge of `f = sum_i f^i`, and
//! brute-force reference solutions for small instances.

use nalgebra::{DMatrix, DVector};

use crate::convex::{abs_map, plus_projection, ConvexFn, ProjectableSet};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{add_scaled_in_place, axpy, norm};
use crate::problems::ProblemSpec;
use crate::schedule::StepSizeSchedule;
use crate::trace::{AgentSnapshot, Algorithm, RoundMetrics, RoundRecord, RunTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedConfig {
    pub rounds: usize,
    pub schedule: StepSizeSchedule,
    /// Starting point, projected onto `X`; the centre of `X` when `None`.
    pub init: Option<Vec<f64>>,
    /// Radius of the multiplier ball in the Lagrangian form; the whole
    /// orthant when `None`.
    pub dual_radius: Option<f64>,
    /// Use the penalty form even without equality constraints.
    pub penalty: bool,
}

impl Default for CentralizedConfig {
    fn default() -> Self {
        CentralizedConfig {
            rounds: 1_000,
            schedule: StepSizeSchedule::harmonic(),
            init: None,
            dual_radius: None,
            penalty: false,
        }
    }
}

/// Projected primal-dual subgradient iteration on the aggregate function
/// over `X = ∩ X^i`: on `L(x, mu) = f(x) + N mu . g(x)`, with `mu` projected
/// onto the ball of radius `dual_radius`, when the problem has no equality
/// constraints; otherwise on the penalty function
/// `H(x, mu, lambda) = f(x) + mu . [g(x)]^+ + lambda . |h(x)|` of the
/// aggregate problem, with unprojected multipliers. The trace has a single
/// agent whose `y` is `f(x(k))`.
pub fn centralized_subgradient(problem: &ProblemSpec, config: &CentralizedConfig) -> Result<RunTrace> {
    if config.rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be positive".into()));
    }
    let penalty = config.penalty || problem.nu() > 0;
    let scale = if penalty { 1.0 } else { problem.agents() as f64 };
    let set = problem.common_set()?;
    let dual_set = match config.dual_radius {
        Some(r) => ProjectableSet::nonneg_ball(problem.m(), r)?,
        None => ProjectableSet::NonnegOrthant { dim: problem.m() },
    };
    let mut x = match &config.init {
        Some(p) => set.project(p)?,
        None => set.center()?,
    };
    let mut mu = vec![0.0; problem.m()];
    let mut lambda = vec![0.0; problem.nu()];

    let mut trace = RunTrace::new(Algorithm::Centralized, problem);
    if !penalty {
        trace.nu = None;
    }
    for k in 0..config.rounds {
        let a = config.schedule.alpha(k);
        let ctx = |op| move |e: Error| e.in_round(k, 0, op);
        let mut d = vec![0.0; problem.dim()];
        for f in problem.objectives() {
            add_scaled_in_place(&mut d, 1.0, &f.subgradient(&x).map_err(ctx("objective subgradient"))?);
        }
        let g = problem.g(&x).map_err(ctx("inequality constraints"))?;
        for ((gl, &ml), &v) in problem.inequality().iter().zip(&mu).zip(&g) {
            if ml != 0.0 && (!penalty || v > 0.0) {
                add_scaled_in_place(
                    &mut d,
                    scale * ml,
                    &gl.subgradient(&x).map_err(ctx("constraint subgradient"))?,
                );
            }
        }
        let h = problem.h(&x).map_err(ctx("equality constraints"))?;
        if let Some(map) = problem.equality() {
            for ((row, &l), &r) in map.matrix().iter().zip(&lambda).zip(&h) {
                if l != 0.0 && r != 0.0 {
                    add_scaled_in_place(&mut d, scale * l * r.signum(), row);
                }
            }
        }
        let next_x = set.project(&axpy(&x, -a, &d)).map_err(ctx("primal projection"))?;
        if penalty {
            mu = axpy(&mu, a * scale, &plus_projection(&g));
            lambda = axpy(&lambda, a * scale, &abs_map(&h));
        } else {
            mu = dual_set
                .project(&axpy(&mu, a * scale, &g))
                .map_err(ctx("dual projection"))?;
        }
        x = next_x;

        let agents = vec![AgentSnapshot {
            x: x.clone(),
            mu: mu.clone(),
            lambda: if penalty { lambda.clone() } else { Vec::new() },
            y: problem.total_objective(&x).map_err(ctx("objective"))?,
        }];
        let metrics = RoundMetrics::compute(&agents, problem)?;
        trace.records.push(RoundRecord {
            k: k + 1,
            agents,
            metrics,
        });
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Final grid spacing.
    pub resolution: f64,
    /// Number of halvings of the spacing; the coarse grid uses
    /// `resolution * 2^refinements`.
    pub refinements: usize,
    /// Largest coarse grid the oracle agrees to enumerate.
    pub max_points: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            resolution: 0.05,
            refinements: 2,
            max_points: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMethod {
    ClosedForm,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Maximizer of the Lagrangian dual `inf_x f(x) + N mu g(x)`, for a
    /// single inequality constraint.
    pub mu: Option<Vec<f64>>,
    pub method: ReferenceMethod,
}

const GRID_FEASIBILITY_TOL: f64 = 1e-9;

/// Reference optimum by closed form when every objective is a quadratic
/// and there are no inequality constraints, otherwise by a refined grid
/// search (dimension at most 6).
pub fn reference_solve(problem: &ProblemSpec, options: &ReferenceOptions) -> Result<ReferenceSolution> {
    let set = problem.common_set()?;
    if problem.m() == 0 {
        if let Some(x) = closed_form(problem)? {
            if set.contains(&x, GRID_FEASIBILITY_TOL) {
                return Ok(ReferenceSolution {
                    value: problem.total_objective(&x)?,
                    x,
                    mu: None,
                    method: ReferenceMethod::ClosedForm,
                });
            }
        }
    }
    let (x, value) = grid_search(problem, &set, options)?;
    let mu = if problem.m() == 1 && problem.nu() == 0 {
        Some(vec![dual_multiplier(problem, &set)?])
    } else {
        None
    };
    Ok(ReferenceSolution {
        x,
        value,
        mu,
        method: ReferenceMethod::Grid,
    })
}

/// Minimizer of `sum_i s_i ||x - c_i||^2` subject to `A x = b` from the
/// KKT system `[2S I, A^T; A, 0] [x; nu] = [2 sum s_i c_i; b]`.
fn closed_form(problem: &ProblemSpec) -> Result<Option<Vec<f64>>> {
    let n = problem.dim();
    let mut s_total = 0.0;
    let mut weighted = vec![0.0; n];
    for f in problem.objectives() {
        match f {
            ConvexFn::Quadratic { scale, center } => {
                s_total += scale;
                add_scaled_in_place(&mut weighted, *scale, center);
            }
            _ => return Ok(None),
        }
    }
    if s_total <= 0.0 {
        return Ok(None);
    }
    let rows = problem.nu();
    let size = n + rows;
    let mut kkt = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for j in 0..n {
        kkt[(j, j)] = 2.0 * s_total;
        rhs[j] = 2.0 * weighted[j];
    }
    if let Some(h) = problem.equality() {
        for (r, row) in h.matrix().iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                kkt[(n + r, j)] = a;
                kkt[(j, n + r)] = a;
            }
            rhs[n + r] = h.offset()[r];
        }
    }
    Ok(kkt.lu().solve(&rhs).map(|sol| sol.iter().take(n).copied().collect()))
}

fn grid_feasible(problem: &ProblemSpec, set: &ProjectableSet, x: &[f64], h_tol: f64) -> Result<bool> {
    Ok(set.contains(x, GRID_FEASIBILITY_TOL)
        && problem.g(x)?.iter().all(|&v| v <= GRID_FEASIBILITY_TOL)
        && problem.h(x)?.iter().all(|v| v.abs() <= h_tol))
}

fn grid_search(problem: &ProblemSpec, set: &ProjectableSet, options: &ReferenceOptions) -> Result<(Vec<f64>, f64)> {
    let n = problem.dim();
    if n > 6 {
        return Err(Error::InvalidArgument(format!(
            "grid reference needs dimension at most 6, got {n}"
        )));
    }
    if !(options.resolution > 0.0) {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let (lo, hi) = set
        .bounding_box()
        .ok_or_else(|| Error::InvalidArgument("grid reference needs a bounded set".into()))?;
    // equality residual allowed on a grid: half a cell along each row
    let row_scale = problem.equality().map_or(0.0, |h| {
        h.matrix()
            .iter()
            .map(|r| r.iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    });

    let mut step = options.resolution * 2f64.powi(options.refinements as i32);
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|d| {
            let count = ((hi[d] - lo[d]) / step).floor() as usize + 1;
            (0..count).map(|j| lo[d] + j as f64 * step).collect()
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    if total > options.max_points {
        return Err(Error::InvalidArgument(format!(
            "coarse grid has {total} points, more than the limit {}",
            options.max_points
        )));
    }
    let mut best = best_on_grid(problem, set, &axes, 0.5 * step * row_scale)?;

    for _ in 0..options.refinements {
        let center = best
            .as_ref()
            .map(|(x, _)| x.clone())
            .unwrap_or_else(|| lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect());
        step *= 0.5;
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|d| {
                (-4..=4)
                    .map(|j| center[d] + j as f64 * step)
                    .filter(|v| *v >= lo[d] - GRID_FEASIBILITY_TOL && *v <= hi[d] + GRID_FEASIBILITY_TOL)
                    .collect()
            })
            .collect();
        if let Some(candidate) = best_on_grid(problem, set, &axes, 0.5 * step * row_scale)? {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no feasible grid point found".into()))
}

fn best_on_grid(
    problem: &ProblemSpec,
    set: &ProjectableSet,
    axes: &[Vec<f64>],
    h_tol: f64,
) -> Result<Option<(Vec<f64>, f64)>> {
    if axes.iter().any(Vec::is_empty) {
        return Ok(None);
    }
    let n = axes.len();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    loop {
        if grid_feasible(problem, set, &x, h_tol)? {
            let v = problem.total_objective(&x)?;
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((x.clone(), v));
            }
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == n {
                return Ok(best);
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                x[d] = axes[d][idx[d]];
                break;
            }
            idx[d] = 0;
            x[d] = axes[d][0];
            d += 1;
        }
    }
}

/// Minimizer of `f(x) + N mu g(x)` over `set` by normalized projected
/// subgradient steps.
fn inner_minimizer(problem: &ProblemSpec, set: &ProjectableSet, mu: f64) -> Result<Vec<f64>> {
    let scale = problem.agents() as f64;
    let (lo, hi) = set
        .bounding_box()
        .ok_or_else(|| Error::InvalidArgument("dual reference needs a bounded set".into()))?;
    let diameter = lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt();
    let value = |x: &[f64]| -> Result<f64> { Ok(problem.total_objective(x)? + scale * mu * problem.g(x)?[0]) };
    let mut x = set.center()?;
    let mut best = (value(&x)?, x.clone());
    for k in 0..20_000 {
        let mut d = vec![0.0; problem.dim()];
        for f in problem.objectives() {
            add_scaled_in_place(&mut d, 1.0, &f.subgradient(&x)?);
        }
        add_scaled_in_place(&mut d, scale * mu, &problem.inequality()[0].subgradient(&x)?);
        let dn = norm(&d);
        if dn == 0.0 {
            return Ok(x);
        }
        x = set.project(&axpy(&x, -diameter / (2.0 * (k as f64 + 1.0) * dn), &d))?;
        let v = value(&x)?;
        if v < best.0 {
            best = (v, x.clone());
        }
    }
    Ok(best.1)
}

/// Dual optimum for a single constraint: the `mu >= 0` at which the inner
/// minimizer is exactly feasible, found by bisection.
fn dual_multiplier(problem: &ProblemSpec, set: &ProjectableSet) -> Result<f64> {
    check_dim("inequality constraints", 1, problem.m())?;
    let g_at = |mu: f64| -> Result<f64> { Ok(problem.g(&inner_minimizer(problem, set, mu)?)?[0]) };
    if g_at(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while g_at(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidArgument(
                "no multiplier makes the inner minimizer feasible".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if g_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
