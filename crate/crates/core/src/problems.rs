//! Problem instances: the network utility maximization example, the
//! equality-constrained quadratic example, and a generic builder.

use crate::convex::{AffineMap, ConvexFn, LagrangianPieces, PenaltyPieces, ProjectableSet};
use crate::error::{check_dim, Error, Result};

/// Known optimum used for trace metrics and acceptance checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Vec<f64>,
    pub value: f64,
}

/// `min sum_i f^i(x)  s.t.  g(x) <= 0, h(x) = 0, x in ∩ X^i`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    name: String,
    dim: usize,
    objectives: Vec<ConvexFn>,
    inequality: Vec<ConvexFn>,
    equality: Option<AffineMap>,
    local_sets: Vec<ProjectableSet>,
    reference: Option<Reference>,
}

/// Unvalidated parts of a problem; [`build_custom`] checks and assembles them.
#[derive(Debug, Clone, Default)]
pub struct ProblemDescription {
    pub name: String,
    pub objectives: Vec<ConvexFn>,
    pub inequality: Vec<ConvexFn>,
    pub equality: Option<AffineMap>,
    pub local_sets: Vec<ProjectableSet>,
    pub reference: Option<Reference>,
    /// Set when the problem is meant for the penalty algorithm, which
    /// requires every agent to hold the same local set.
    pub require_identical_sets: bool,
}

const FEASIBILITY_TOL: f64 = 1e-12;

pub fn build_custom(desc: ProblemDescription) -> Result<ProblemSpec> {
    let ProblemDescription {
        name,
        objectives,
        inequality,
        equality,
        local_sets,
        reference,
        require_identical_sets,
    } = desc;
    if objectives.is_empty() {
        return Err(Error::InvalidArgument("problem needs at least one agent".into()));
    }
    check_dim("local sets per agent", objectives.len(), local_sets.len())?;
    let dim = objectives[0].dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("decision dimension must be positive".into()));
    }
    for f in &objectives {
        check_dim("objective dimension", dim, f.dim())?;
    }
    for g in &inequality {
        check_dim("inequality constraint dimension", dim, g.dim())?;
    }
    if let Some(h) = &equality {
        check_dim("equality constraint columns", dim, h.cols())?;
    }
    for s in &local_sets {
        check_dim("local set dimension", dim, s.dim())?;
    }
    let spec = ProblemSpec {
        name,
        dim,
        objectives,
        inequality,
        equality,
        local_sets,
        reference: None,
    };
    if require_identical_sets && !spec.has_identical_sets() {
        return Err(Error::InvalidArgument(
            "the penalty algorithm requires identical local sets".into(),
        ));
    }

    // Nonempty intersection: project a point of the first set onto the
    // intersection and confirm membership.
    let x = spec.intersection_point()?;
    if !spec.local_sets.iter().all(|s| s.contains(&x, 1e-8)) {
        return Err(Error::InvalidArgument(
            "local constraint sets appear to have empty intersection".into(),
        ));
    }

    let mut spec = spec;
    if let Some(r) = reference {
        check_dim("reference optimum", dim, r.x.len())?;
        if !spec.is_feasible(&r.x, FEASIBILITY_TOL)? {
            return Err(Error::InvalidArgument(
                "reference optimum violates the constraints".into(),
            ));
        }
        spec.reference = Some(r);
    }
    Ok(spec)
}

/// Five agents sharing one link of capacity 5: `f^i(x) = -sqrt(z_i)`,
/// `g(x) = sum z - 5`, per-agent boxes.
pub fn build_num_problem() -> ProblemSpec {
    const N: usize = 5;
    let bounds = [(0.5, 5.5), (0.55, 5.25), (0.5, 6.0), (0.5, 5.0), (0.525, 5.75)];
    let desc = ProblemDescription {
        name: "num".into(),
        objectives: (0..N)
            .map(|i| ConvexFn::neg_sqrt(N, i).expect("coordinate in range"))
            .collect(),
        inequality: vec![ConvexFn::linear(vec![1.0; N], -5.0)],
        equality: None,
        local_sets: bounds
            .iter()
            .map(|&(lo, hi)| ProjectableSet::cube(N, lo, hi).expect("valid box"))
            .collect(),
        reference: Some(Reference {
            x: vec![1.0; N],
            value: -5.0,
        }),
        require_identical_sets: false,
    };
    build_custom(desc).expect("built-in NUM problem is well formed")
}

/// Centres of the five quadratics, one row per agent.
pub const QUADRATIC_CENTERS: [[f64; 5]; 5] = [
    [5.0, 2.5, 5.0, -2.5, -5.0],
    [2.5, 5.0, -2.5, -5.0, 5.0],
    [5.0, -2.5, -5.0, 5.0, 2.5],
    [-2.5, -5.0, 5.0, 2.5, 5.0],
    [-5.0, 5.0, 2.5, 5.0, -2.5],
];

/// Five quadratics `f^i(x) = ||x - c_i||^2 / 5` with `h(x) = sum x - 5` on
/// the common box `[-5, 5]^5`.
pub fn build_quadratic_problem() -> ProblemSpec {
    const N: usize = 5;
    let desc = ProblemDescription {
        name: "quadratic".into(),
        objectives: QUADRATIC_CENTERS
            .iter()
            .map(|c| ConvexFn::quadratic(0.2, c.to_vec()).expect("valid quadratic"))
            .collect(),
        inequality: Vec::new(),
        equality: Some(AffineMap::new(vec![vec![1.0; N]], vec![5.0]).expect("valid affine map")),
        local_sets: vec![ProjectableSet::cube(N, -5.0, 5.0).expect("valid box"); N],
        reference: Some(Reference {
            x: vec![1.0; N],
            value: 82.5,
        }),
        require_identical_sets: true,
    };
    build_custom(desc).expect("built-in quadratic problem is well formed")
}

impl ProblemSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn agents(&self) -> usize {
        self.objectives.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of inequality constraints.
    pub fn m(&self) -> usize {
        self.inequality.len()
    }

    /// Number of equality constraints.
    pub fn nu(&self) -> usize {
        self.equality.as_ref().map_or(0, AffineMap::rows)
    }

    pub fn objective(&self, i: usize) -> &ConvexFn {
        &self.objectives[i]
    }

    pub fn objectives(&self) -> &[ConvexFn] {
        &self.objectives
    }

    pub fn inequality(&self) -> &[ConvexFn] {
        &self.inequality
    }

    pub fn equality(&self) -> Option<&AffineMap> {
        self.equality.as_ref()
    }

    pub fn local_set(&self, i: usize) -> &ProjectableSet {
        &self.local_sets[i]
    }

    pub fn local_sets(&self) -> &[ProjectableSet] {
        &self.local_sets
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    pub fn with_reference(mut self, reference: Option<Reference>) -> Self {
        self.reference = reference;
        self
    }

    pub fn lagrangian(&self, i: usize) -> LagrangianPieces<'_> {
        LagrangianPieces {
            agent: i,
            objective: &self.objectives[i],
            inequality: &self.inequality,
        }
    }

    pub fn penalty(&self, i: usize) -> PenaltyPieces<'_> {
        PenaltyPieces {
            agent: i,
            objective: &self.objectives[i],
            inequality: &self.inequality,
            equality: self.equality.as_ref(),
        }
    }

    pub fn g(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inequality.iter().map(|g| g.value(x)).collect()
    }

    pub fn h(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.equality {
            Some(h) => h.eval(x),
            None => Ok(Vec::new()),
        }
    }

    /// `f(x) = sum_i f^i(x)`.
    pub fn total_objective(&self, x: &[f64]) -> Result<f64> {
        self.objectives.iter().map(|f| f.value(x)).sum()
    }

    pub fn has_identical_sets(&self) -> bool {
        self.local_sets.windows(2).all(|w| w[0] == w[1])
    }

    /// `X = ∩ X^i`: the shared set itself when all agents agree, the exact
    /// box when every local set is a box, otherwise a Dykstra composite.
    pub fn common_set(&self) -> Result<ProjectableSet> {
        if self.has_identical_sets() {
            return Ok(self.local_sets[0].clone());
        }
        let boxes: Option<Vec<(&Vec<f64>, &Vec<f64>)>> = self
            .local_sets
            .iter()
            .map(|s| match s {
                ProjectableSet::Box { lo, hi } => Some((lo, hi)),
                _ => None,
            })
            .collect();
        if let Some(boxes) = boxes {
            let mut lo = boxes[0].0.clone();
            let mut hi = boxes[0].1.clone();
            for (l, h) in &boxes[1..] {
                for i in 0..self.dim {
                    lo[i] = lo[i].max(l[i]);
                    hi[i] = hi[i].min(h[i]);
                }
            }
            return ProjectableSet::new_box(lo, hi);
        }
        ProjectableSet::intersection(self.local_sets.clone())
    }

    /// The same problem with every local set replaced by `X = ∩ X^i`.
    pub fn with_common_set(&self) -> Result<ProblemSpec> {
        let common = self.common_set()?;
        let mut out = self.clone();
        out.local_sets = vec![common; self.agents()];
        Ok(out)
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> Result<bool> {
        if !self.local_sets.iter().all(|s| s.contains(x, tol)) {
            return Ok(false);
        }
        if self.g(x)?.iter().any(|&v| v > tol) {
            return Ok(false);
        }
        Ok(self.h(x)?.iter().all(|v| v.abs() <= tol))
    }

    fn intersection_point(&self) -> Result<Vec<f64>> {
        let set = self.common_set()?;
        let start = self.local_sets[0].center()?;
        set.project(&start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_reference_is_feasible() {
        let p = build_num_problem();
        let x = &p.reference().unwrap().x;
        assert_eq!(p.g(x).unwrap(), vec![0.0]);
        assert!(p.local_sets().iter().all(|s| s.contains(x, 0.0)));
        assert_eq!(p.total_objective(x).unwrap(), -5.0);
        let slater = vec![0.55; 5];
        assert!((p.g(&slater).unwrap()[0] + 2.25).abs() < 1e-12);
        assert!(p.local_sets().iter().all(|s| s.contains(&slater, 0.0)));
    }

    #[test]
    fn quadratic_reference() {
        let p = build_quadratic_problem();
        let x = &p.reference().unwrap().x;
        assert_eq!(p.h(x).unwrap(), vec![0.0]);
        assert!((p.total_objective(x).unwrap() - 82.5).abs() < 1e-12);
        assert!(p.has_identical_sets());
    }

    #[test]
    fn num_common_set_is_exact_box() {
        let p = build_num_problem();
        match p.common_set().unwrap() {
            ProjectableSet::Box { lo, hi } => {
                assert_eq!(lo, vec![0.55; 5]);
                assert_eq!(hi, vec![5.0; 5]);
            }
            other => panic!("expected a box, got {other:?}"),
        }
        assert!(p.with_common_set().unwrap().has_identical_sets());
    }

    #[test]
    fn custom_builder_checks() {
        let one = ProblemDescription {
            name: "one".into(),
            objectives: vec![ConvexFn::quadratic(1.0, vec![0.0]).unwrap()],
            local_sets: vec![ProjectableSet::cube(1, -1.0, 1.0).unwrap()],
            ..Default::default()
        };
        assert!(build_custom(one.clone()).is_ok());

        let mut bad_g = one.clone();
        bad_g.inequality = vec![ConvexFn::linear(vec![1.0, 1.0], 0.0)];
        assert!(matches!(build_custom(bad_g), Err(Error::DimensionMismatch { .. })));

        let two = ProblemDescription {
            name: "two".into(),
            objectives: vec![ConvexFn::zero(1), ConvexFn::zero(1)],
            local_sets: vec![
                ProjectableSet::cube(1, -1.0, 1.0).unwrap(),
                ProjectableSet::cube(1, 0.0, 2.0).unwrap(),
            ],
            require_identical_sets: true,
            ..Default::default()
        };
        assert!(build_custom(two.clone()).is_err());
        assert!(build_custom(ProblemDescription {
            require_identical_sets: false,
            ..two
        })
        .is_ok());

        let disjoint = ProblemDescription {
            name: "disjoint".into(),
            objectives: vec![ConvexFn::zero(1), ConvexFn::zero(1)],
            local_sets: vec![
                ProjectableSet::cube(1, -1.0, 0.0).unwrap(),
                ProjectableSet::cube(1, 1.0, 2.0).unwrap(),
            ],
            ..Default::default()
        };
        assert!(build_custom(disjoint).is_err());
    }
}
