//! Function and set oracles: evaluation, subgradients, projections, and the
//! per-agent Lagrangian and penalty functions both algorithms step on.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, check_finite, check_nonneg, Error, Result};
use crate::linalg::{add_scaled_in_place, dist_sq, dot, norm};

type ValueFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type SubgradientFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

/// `[v]^+`, the projection onto the nonnegative orthant.
pub fn plus_projection(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// Componentwise absolute value `|v|`.
pub fn abs_map(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

/// A convex function `R^n -> R` together with a subgradient selection.
///
/// The closed-form variants cover the built-in problems and the custom
/// problem file format; `Custom` wraps arbitrary user closures.
#[derive(Clone)]
pub enum ConvexFn {
    /// `coeffs . x + offset`
    Linear { coeffs: Vec<f64>, offset: f64 },
    /// `scale * ||x - center||^2`, `scale >= 0`
    Quadratic { scale: f64, center: Vec<f64> },
    /// `-sqrt(x[coord])`, defined for `x[coord] > 0`
    NegSqrt { dim: usize, coord: usize },
    Custom {
        dim: usize,
        value: Arc<ValueFn>,
        subgradient: Arc<SubgradientFn>,
    },
}

impl ConvexFn {
    pub fn zero(dim: usize) -> Self {
        ConvexFn::Linear {
            coeffs: vec![0.0; dim],
            offset: 0.0,
        }
    }

    pub fn linear(coeffs: Vec<f64>, offset: f64) -> Self {
        ConvexFn::Linear { coeffs, offset }
    }

    pub fn quadratic(scale: f64, center: Vec<f64>) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "quadratic scale must be finite and nonnegative, got {scale}"
            )));
        }
        Ok(ConvexFn::Quadratic { scale, center })
    }

    pub fn neg_sqrt(dim: usize, coord: usize) -> Result<Self> {
        if coord >= dim {
            return Err(Error::InvalidArgument(format!(
                "coordinate {coord} out of range for dimension {dim}"
            )));
        }
        Ok(ConvexFn::NegSqrt { dim, coord })
    }

    /// Wraps user closures. The closures must return a value and a valid
    /// subgradient of a convex function; nothing here can check that.
    pub fn custom<V, S>(dim: usize, value: V, subgradient: S) -> Self
    where
        V: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
        S: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        ConvexFn::Custom {
            dim,
            value: Arc::new(value),
            subgradient: Arc::new(subgradient),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFn::Linear { coeffs, .. } => coeffs.len(),
            ConvexFn::Quadratic { center, .. } => center.len(),
            ConvexFn::NegSqrt { dim, .. } | ConvexFn::Custom { dim, .. } => *dim,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim("function argument", self.dim(), x.len())?;
        match self {
            ConvexFn::Linear { coeffs, offset } => Ok(dot(coeffs, x) + offset),
            ConvexFn::Quadratic { scale, center } => Ok(scale * dist_sq(x, center)),
            ConvexFn::NegSqrt { coord, .. } => {
                let z = x[*coord];
                if z > 0.0 {
                    Ok(-z.sqrt())
                } else {
                    Err(Error::Domain(format!("-sqrt(z) evaluated at z = {z}")))
                }
            }
            ConvexFn::Custom { value, .. } => value(x),
        }
    }

    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("function argument", self.dim(), x.len())?;
        let d = match self {
            ConvexFn::Linear { coeffs, .. } => coeffs.clone(),
            ConvexFn::Quadratic { scale, center } => {
                x.iter().zip(center).map(|(xi, ci)| 2.0 * scale * (xi - ci)).collect()
            }
            ConvexFn::NegSqrt { dim, coord } => {
                let z = x[*coord];
                if !(z > 0.0) {
                    return Err(Error::Domain(format!("subgradient of -sqrt(z) requested at z = {z}")));
                }
                let mut d = vec![0.0; *dim];
                d[*coord] = -0.5 / z.sqrt();
                d
            }
            ConvexFn::Custom { subgradient, .. } => subgradient(x)?,
        };
        check_dim("subgradient", self.dim(), d.len())?;
        Ok(d)
    }
}

impl fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexFn::Linear { coeffs, offset } => f
                .debug_struct("Linear")
                .field("coeffs", coeffs)
                .field("offset", offset)
                .finish(),
            ConvexFn::Quadratic { scale, center } => f
                .debug_struct("Quadratic")
                .field("scale", scale)
                .field("center", center)
                .finish(),
            ConvexFn::NegSqrt { dim, coord } => f
                .debug_struct("NegSqrt")
                .field("dim", dim)
                .field("coord", coord)
                .finish(),
            ConvexFn::Custom { dim, .. } => f.debug_struct("Custom").field("dim", dim).finish(),
        }
    }
}

/// `h(x) = A x - b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    rows: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(rows: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        check_dim("affine map offset", rows.len(), offset.len())?;
        if let Some(first) = rows.first() {
            for r in &rows {
                check_dim("affine map row", first.len(), r.len())?;
            }
        }
        check_finite("affine map offset", &offset)?;
        Ok(AffineMap { rows, offset })
    }

    /// Number of equality constraints (nu).
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("affine map argument", self.cols(), x.len())?;
        Ok(self.rows.iter().zip(&self.offset).map(|(a, b)| dot(a, x) - b).collect())
    }
}

pub const DYKSTRA_MAX_ITERATIONS: usize = 20_000;
pub const DYKSTRA_TOLERANCE: f64 = 1e-10;

/// Closed convex sets with a Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectableSet {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    NonnegOrthant {
        dim: usize,
    },
    /// `{ v >= 0 : ||v|| <= radius }`
    NonnegBall {
        dim: usize,
        radius: f64,
    },
    /// Intersection, projected onto with Dykstra's alternating projections.
    Composite {
        sets: Vec<ProjectableSet>,
        max_iterations: usize,
        tolerance: f64,
    },
}

impl ProjectableSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lo.len(), hi.len())?;
        check_finite("box bounds", &lo)?;
        check_finite("box bounds", &hi)?;
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
            return Err(Error::InvalidArgument(format!(
                "box coordinate {i} has lo {} > hi {}",
                lo[i], hi[i]
            )));
        }
        Ok(ProjectableSet::Box { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_finite("ball center", &center)?;
        check_radius(radius)?;
        Ok(ProjectableSet::Ball { center, radius })
    }

    pub fn nonneg_ball(dim: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(ProjectableSet::NonnegBall { dim, radius })
    }

    pub fn intersection(sets: Vec<ProjectableSet>) -> Result<Self> {
        let Some(first) = sets.first() else {
            return Err(Error::InvalidArgument("empty intersection list".into()));
        };
        let dim = first.dim();
        for s in &sets {
            check_dim("intersection member", dim, s.dim())?;
        }
        Ok(ProjectableSet::Composite {
            sets,
            max_iterations: DYKSTRA_MAX_ITERATIONS,
            tolerance: DYKSTRA_TOLERANCE,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ProjectableSet::Box { lo, .. } => lo.len(),
            ProjectableSet::Ball { center, .. } => center.len(),
            ProjectableSet::NonnegOrthant { dim } | ProjectableSet::NonnegBall { dim, .. } => *dim,
            ProjectableSet::Composite { sets, .. } => sets.first().map_or(0, ProjectableSet::dim),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            ProjectableSet::Box { lo, hi } => (0..x.len()).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
            ProjectableSet::Ball { center, radius } => dist_sq(x, center).sqrt() <= radius + tol,
            ProjectableSet::NonnegOrthant { .. } => x.iter().all(|&v| v >= -tol),
            ProjectableSet::NonnegBall { radius, .. } => x.iter().all(|&v| v >= -tol) && norm(x) <= radius + tol,
            ProjectableSet::Composite { sets, .. } => sets.iter().all(|s| s.contains(x, tol)),
        }
    }

    /// Euclidean projection `P_S[z]`.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("projection argument", self.dim(), z.len())?;
        check_finite("projection argument", z)?;
        Ok(match self {
            ProjectableSet::Box { lo, hi } => (0..z.len()).map(|i| z[i].clamp(lo[i], hi[i])).collect(),
            ProjectableSet::Ball { center, radius } => {
                let d = dist_sq(z, center).sqrt();
                if d <= *radius {
                    z.to_vec()
                } else {
                    let s = radius / d;
                    z.iter().zip(center).map(|(zi, ci)| ci + s * (zi - ci)).collect()
                }
            }
            ProjectableSet::NonnegOrthant { .. } => plus_projection(z),
            ProjectableSet::NonnegBall { radius, .. } => {
                // The ball is centred at the apex of the cone, so clamping
                // then scaling radially is the exact projection.
                let mut v = plus_projection(z);
                let r = norm(&v);
                if r > *radius {
                    let s = radius / r;
                    v.iter_mut().for_each(|c| *c *= s);
                }
                v
            }
            ProjectableSet::Composite {
                sets,
                max_iterations,
                tolerance,
            } => dykstra(sets, z, *max_iterations, *tolerance)?,
        })
    }

    /// A point of the set, used for initial states.
    pub fn center(&self) -> Result<Vec<f64>> {
        match self {
            ProjectableSet::Box { lo, hi } => Ok(lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect()),
            ProjectableSet::Ball { center, .. } => Ok(center.clone()),
            ProjectableSet::NonnegOrthant { dim } | ProjectableSet::NonnegBall { dim, .. } => Ok(vec![0.0; *dim]),
            ProjectableSet::Composite { sets, .. } => {
                let start = sets[0].center()?;
                self.project(&start)
            }
        }
    }

    /// Axis-aligned bounds of the set when it is bounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ProjectableSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ProjectableSet::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            ProjectableSet::NonnegOrthant { .. } => None,
            ProjectableSet::NonnegBall { dim, radius } => Some((vec![0.0; *dim], vec![*radius; *dim])),
            ProjectableSet::Composite { sets, .. } => {
                let mut out: Option<(Vec<f64>, Vec<f64>)> = None;
                for (lo, hi) in sets.iter().filter_map(ProjectableSet::bounding_box) {
                    out = Some(match out {
                        None => (lo, hi),
                        Some((l, h)) => (
                            l.iter().zip(&lo).map(|(a, b)| a.max(*b)).collect(),
                            h.iter().zip(&hi).map(|(a, b)| a.min(*b)).collect(),
                        ),
                    });
                }
                out
            }
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "radius must be positive and finite, got {radius}"
        )))
    }
}

fn dykstra(sets: &[ProjectableSet], z: &[f64], max_iterations: usize, tolerance: f64) -> Result<Vec<f64>> {
    let mut x = z.to_vec();
    let mut increments = vec![vec![0.0; z.len()]; sets.len()];
    let mut change = f64::INFINITY;
    for _ in 0..max_iterations {
        let sweep_start = x.clone();
        let mut increment_change = 0.0_f64;
        for (set, p) in sets.iter().zip(increments.iter_mut()) {
            let shifted: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let y = set.project(&shifted)?;
            for i in 0..x.len() {
                let new_p = shifted[i] - y[i];
                increment_change = increment_change.max((new_p - p[i]).abs());
                p[i] = new_p;
            }
            x = y;
        }
        change = dist_sq(&x, &sweep_start).sqrt().max(increment_change);
        if change <= tolerance {
            return Ok(x);
        }
    }
    Err(Error::ProjectionNotConverged {
        iterations: max_iterations,
        change,
    })
}

/// Agent `i`'s Lagrangian `L^i(x, mu) = f^i(x) + mu . g(x)`.
#[derive(Debug, Clone, Copy)]
pub struct LagrangianPieces<'a> {
    pub agent: usize,
    pub objective: &'a ConvexFn,
    pub inequality: &'a [ConvexFn],
}

impl LagrangianPieces<'_> {
    pub fn m(&self) -> usize {
        self.inequality.len()
    }

    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inequality.iter().map(|g| g.value(x)).collect()
    }

    pub fn value(&self, x: &[f64], mu: &[f64]) -> Result<f64> {
        self.check_mu(mu)?;
        let g = self.constraint_values(x)?;
        Ok(self.objective.value(x)? + dot(mu, &g))
    }

    /// `Df^i(x) + sum_l mu_l Dg_l(x)`, a subgradient of `L^i(., mu)`.
    pub fn primal_subgradient(&self, x: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
        self.check_mu(mu)?;
        let mut d = self.objective.subgradient(x)?;
        for (g, &m) in self.inequality.iter().zip(mu) {
            if m != 0.0 {
                add_scaled_in_place(&mut d, m, &g.subgradient(x)?);
            }
        }
        Ok(d)
    }

    /// `g(x)`; the Lagrangian is affine in `mu`, so this is its gradient.
    pub fn dual_supgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.constraint_values(x)
    }

    fn check_mu(&self, mu: &[f64]) -> Result<()> {
        check_dim("Lagrange multiplier", self.m(), mu.len())?;
        check_nonneg("Lagrange multiplier", mu)
    }
}

/// Agent `i`'s penalty function
/// `H^i(x, mu, lambda) = f^i(x) + mu . [g(x)]^+ + lambda . |h(x)|`.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyPieces<'a> {
    pub agent: usize,
    pub objective: &'a ConvexFn,
    pub inequality: &'a [ConvexFn],
    pub equality: Option<&'a AffineMap>,
}

impl PenaltyPieces<'_> {
    pub fn m(&self) -> usize {
        self.inequality.len()
    }

    pub fn nu(&self) -> usize {
        self.equality.map_or(0, AffineMap::rows)
    }

    fn residuals(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.inequality.iter().map(|g| g.value(x)).collect::<Result<Vec<_>>>()?;
        let h = match self.equality {
            Some(h) => h.eval(x)?,
            None => Vec::new(),
        };
        Ok((g, h))
    }

    pub fn value(&self, x: &[f64], mu: &[f64], lambda: &[f64]) -> Result<f64> {
        self.check_duals(mu, lambda)?;
        let (g, h) = self.residuals(x)?;
        Ok(self.objective.value(x)? + dot(mu, &plus_projection(&g)) + dot(lambda, &abs_map(&h)))
    }

    /// Subgradient of `H^i(., mu, lambda)`. At kinks (`g_l = 0`, `h_l = 0`)
    /// the zero element of the subdifferential is selected.
    pub fn primal_subgradient(&self, x: &[f64], mu: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_duals(mu, lambda)?;
        let mut d = self.objective.subgradient(x)?;
        for (g, &m) in self.inequality.iter().zip(mu) {
            if m != 0.0 && g.value(x)? > 0.0 {
                add_scaled_in_place(&mut d, m, &g.subgradient(x)?);
            }
        }
        if let Some(h) = self.equality {
            let hx = h.eval(x)?;
            for ((row, &l), &r) in h.matrix().iter().zip(lambda).zip(&hx) {
                let sign = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                if l != 0.0 && sign != 0.0 {
                    add_scaled_in_place(&mut d, l * sign, row);
                }
            }
        }
        Ok(d)
    }

    /// `([g(x)]^+, |h(x)|)`, the gradient of the affine map
    /// `(mu, lambda) -> H^i(x, mu, lambda)`.
    pub fn supgradient(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (g, h) = self.residuals(x)?;
        Ok((plus_projection(&g), abs_map(&h)))
    }

    fn check_duals(&self, mu: &[f64], lambda: &[f64]) -> Result<()> {
        check_dim("penalty multiplier mu", self.m(), mu.len())?;
        check_dim("penalty multiplier lambda", self.nu(), lambda.len())?;
        check_nonneg("penalty multiplier mu", mu)?;
        check_nonneg("penalty multiplier lambda", lambda)
    }
}
