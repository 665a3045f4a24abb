//! Time-varying weighted digraphs `A(k)`, generators that satisfy the
//! non-degeneracy, balance and periodic-connectivity assumptions, and
//! finite-horizon validators for those assumptions.

use std::fmt;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};

/// Tolerance used by [`validate_balanced`].
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// Row-major `N x N` weights; entry `(i, j)` is `a^i_j(k)`, the weight agent
/// `i` puts on the value received from agent `j` (edge `(j, i)`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    a: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            check_dim("weight matrix row", n, r.len())?;
            if r.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
            }
            a.extend(r);
        }
        Ok(WeightMatrix { n, a })
    }

    pub fn identity(n: usize) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        WeightMatrix { n, a }
    }

    /// Every entry `1/N`.
    pub fn uniform(n: usize) -> Self {
        WeightMatrix {
            n,
            a: vec![1.0 / n as f64; n * n],
        }
    }

    /// Metropolis weights `1 / (1 + max(d_i, d_j))` on an undirected edge
    /// list, with the remaining mass on the diagonal. Symmetric, hence
    /// doubly stochastic.
    pub fn metropolis(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for {n} agents"
                )));
            }
            if i != j {
                adjacency[i * n + j] = true;
                adjacency[j * n + i] = true;
            }
        }
        let degree: Vec<usize> = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[i * n + j]).count())
            .collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if adjacency[i * n + j] {
                    let w = 1.0 / (1.0 + degree[i].max(degree[j]) as f64);
                    a[i * n + j] = w;
                    off += w;
                }
            }
            a[i * n + i] = 1.0 - off;
        }
        Ok(WeightMatrix { n, a })
    }

    /// `(1 - beta) W + beta I` with the smallest `beta` that lifts every
    /// diagonal entry to at least `floor`.
    pub fn lazy(mut self, floor: f64) -> Self {
        let dmin = (0..self.n).map(|i| self.get(i, i)).fold(f64::INFINITY, f64::min);
        if dmin < floor && dmin < 1.0 {
            let beta = (floor - dmin) / (1.0 - dmin);
            for i in 0..self.n {
                for j in 0..self.n {
                    let idx = i * self.n + j;
                    self.a[idx] *= 1.0 - beta;
                    if i == j {
                        self.a[idx] += beta;
                    }
                }
            }
        }
        self
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }

    /// In-neighbours of `i`: agents `j != i` with `a^i_j > 0`.
    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| j != i && self.get(i, j) > 0.0)
    }

    /// Edge set `E(k)` as `(from, to)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in self.in_neighbors(i) {
                out.push((j, i));
            }
        }
        out
    }

    /// `v^i = sum_j a^i_j x^j` for scalar channels.
    pub fn mix_scalars(&self, values: &[f64]) -> Result<Vec<f64>> {
        check_dim("mixed scalars", self.n, values.len())?;
        Ok((0..self.n)
            .map(|i| self.row(i).iter().zip(values).map(|(w, v)| w * v).sum())
            .collect())
    }

    /// `v^i = sum_j a^i_j x^j` for vector channels.
    pub fn mix_vectors(&self, vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_dim("mixed vectors", self.n, vectors.len())?;
        let dim = vectors.first().map_or(0, Vec::len);
        for v in vectors {
            check_dim("mixed vector length", dim, v.len())?;
        }
        Ok((0..self.n)
            .map(|i| {
                let mut acc = vec![0.0; dim];
                for (w, v) in self.row(i).iter().zip(vectors) {
                    if *w != 0.0 {
                        for (a, x) in acc.iter_mut().zip(v) {
                            *a += w * x;
                        }
                    }
                }
                acc
            })
            .collect())
    }
}

/// A cyclic list of undirected edge sets, one per round.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySchedule {
    pub rounds: Vec<Vec<(usize, usize)>>,
}

/// How the per-round weights are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// `1/N` everywhere, every round.
    Complete,
    /// No communication.
    Identity,
    /// Round `k` activates the single undirected ring edge
    /// `{k + s, k + s + 1} mod N` (offset `s` from the seed), Metropolis weights.
    RotatingRing,
    /// Static directed ring `i-1 -> i`, `a^i_i = 1 - w`, `a^i_{i-1} = w`.
    DirectedRing { weight: f64 },
    /// Static undirected path `0 - 1 - ... - N-1`, Metropolis weights.
    Path,
    /// Rotating ring edge plus independent random undirected edges with the
    /// given probability, redrawn each round from `(seed, k)`.
    RandomMetropolis { edge_probability: f64 },
    /// Caller-supplied cyclic topology schedule with Metropolis weights.
    Scheduled(TopologySchedule),
    /// Caller-supplied cyclic matrices, emitted as given.
    Explicit(Vec<WeightMatrix>),
}

/// Deterministic generator of `A(k)` together with its declared
/// non-degeneracy floor `alpha` and connectivity period `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSequence {
    n: usize,
    alpha: f64,
    period: usize,
    seed: u64,
    topology: Topology,
}

impl GraphSequence {
    pub fn new(n: usize, topology: Topology, alpha: f64, period: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one agent".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "non-degeneracy floor must lie in (0, 1], got {alpha}"
            )));
        }
        if period == 0 {
            return Err(Error::InvalidArgument("connectivity period must be positive".into()));
        }
        match &topology {
            Topology::DirectedRing { weight } if !(*weight > 0.0 && *weight < 1.0) => {
                return Err(Error::InvalidArgument(format!(
                    "directed ring weight must lie in (0, 1), got {weight}"
                )));
            }
            Topology::RandomMetropolis { edge_probability } if !(0.0..=1.0).contains(edge_probability) => {
                return Err(Error::InvalidArgument(format!(
                    "edge probability must lie in [0, 1], got {edge_probability}"
                )));
            }
            Topology::Scheduled(s) if s.rounds.is_empty() => {
                return Err(Error::InvalidArgument("empty topology schedule".into()));
            }
            Topology::Explicit(ms) => {
                if ms.is_empty() {
                    return Err(Error::InvalidArgument("empty matrix list".into()));
                }
                for m in ms {
                    check_dim("explicit weight matrix", n, m.size())?;
                }
            }
            _ => {}
        }
        Ok(GraphSequence {
            n,
            alpha,
            period,
            seed,
            topology,
        })
    }

    pub fn static_complete(n: usize) -> Self {
        Self::new(n, Topology::Complete, 1.0 / n as f64, 1, 0).expect("valid complete graph")
    }

    pub fn static_identity(n: usize) -> Self {
        Self::new(n, Topology::Identity, 1.0, 1, 0).expect("valid identity graph")
    }

    /// Rotating ring with the connectivity period it actually has.
    pub fn rotating_ring(n: usize, alpha: f64, seed: u64) -> Result<Self> {
        let period = if n <= 2 { 1 } else { n };
        Self::new(n, Topology::RotatingRing, alpha, period, seed)
    }

    pub fn explicit(matrices: Vec<WeightMatrix>, alpha: f64, period: usize) -> Result<Self> {
        let n = matrices.first().map_or(0, WeightMatrix::size);
        Self::new(n, Topology::Explicit(matrices), alpha, period, 0)
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// `A(k)`; a pure function of the generator parameters and `k`.
    pub fn weights_at(&self, k: usize) -> WeightMatrix {
        let n = self.n;
        match &self.topology {
            Topology::Complete => WeightMatrix::uniform(n),
            Topology::Identity => WeightMatrix::identity(n),
            Topology::RotatingRing => {
                let edges = self.ring_edge(k).into_iter().collect::<Vec<_>>();
                self.metropolis(&edges)
            }
            Topology::DirectedRing { weight } => {
                if n == 1 {
                    return WeightMatrix::identity(1);
                }
                let mut a = vec![0.0; n * n];
                for i in 0..n {
                    a[i * n + i] = 1.0 - weight;
                    a[i * n + (i + n - 1) % n] += weight;
                }
                WeightMatrix { n, a }
            }
            Topology::Path => {
                let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
                self.metropolis(&edges)
            }
            Topology::RandomMetropolis { edge_probability } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(k as u64);
                let mut edges: Vec<_> = self.ring_edge(k).into_iter().collect();
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.random::<f64>() < *edge_probability {
                            edges.push((i, j));
                        }
                    }
                }
                self.metropolis(&edges)
            }
            Topology::Scheduled(s) => {
                let edges = &s.rounds[k % s.rounds.len()];
                self.metropolis(edges)
            }
            Topology::Explicit(ms) => ms[k % ms.len()].clone(),
        }
    }

    fn ring_edge(&self, k: usize) -> Option<(usize, usize)> {
        let n = self.n;
        if n < 2 {
            return None;
        }
        let i = ((k as u64 + self.seed) % n as u64) as usize;
        Some((i, (i + 1) % n))
    }

    fn metropolis(&self, edges: &[(usize, usize)]) -> WeightMatrix {
        // edges are generated in range, so this cannot fail
        WeightMatrix::metropolis(self.n, edges)
            .expect("generated edges are in range")
            .lazy(self.alpha)
    }
}

/// Builds a Metropolis-weighted sequence from an undirected topology
/// schedule and checks every length-`period` window of one full cycle.
pub fn metropolis_sequence(
    n: usize,
    schedule: TopologySchedule,
    alpha: f64,
    period: usize,
    seed: u64,
) -> Result<GraphSequence> {
    let cycle = schedule.rounds.len();
    let g = GraphSequence::new(n, Topology::Scheduled(schedule), alpha, period, seed)?;
    let report = validate_all(&g, cycle + period);
    if report.is_ok() {
        Ok(g)
    } else {
        Err(Error::Validation(report))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    NonDegeneracy,
    Balanced,
    PeriodicConnectivity,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::NonDegeneracy => "non-degeneracy",
            Rule::Balanced => "balanced",
            Rule::PeriodicConnectivity => "periodic-connectivity",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub round: usize,
    pub rule: Rule,
    pub detail: String,
}

/// Result of checking assumptions over rounds `[0, horizon)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub horizon: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.horizon = self.horizon.max(other.horizon);
        self.violations.extend(other.violations);
        self.violations.sort_by_key(|v| v.round);
        self
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.violations.iter().filter(|v| v.rule == rule).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "all assumptions hold on rounds [0, {})", self.horizon);
        }
        writeln!(
            f,
            "{} violation(s) on rounds [0, {}):",
            self.violations.len(),
            self.horizon
        )?;
        const SHOWN: usize = 10;
        for v in self.violations.iter().take(SHOWN) {
            writeln!(f, "  round {}: {}: {}", v.round, v.rule, v.detail)?;
        }
        if self.violations.len() > SHOWN {
            writeln!(f, "  ... and {} more", self.violations.len() - SHOWN)?;
        }
        Ok(())
    }
}

/// Flags rounds where a diagonal entry is below `alpha` or a nonzero
/// off-diagonal entry lies outside `[alpha, 1]`.
pub fn validate_nondegeneracy(g: &GraphSequence, horizon: usize, alpha: f64) -> ValidationReport {
    let mut violations = Vec::new();
    for k in 0..horizon {
        let w = g.weights_at(k);
        for i in 0..w.size() {
            for j in 0..w.size() {
                let a = w.get(i, j);
                let bad = if i == j {
                    a < alpha
                } else {
                    a != 0.0 && !(alpha..=1.0).contains(&a)
                };
                if bad {
                    violations.push(Violation {
                        round: k,
                        rule: Rule::NonDegeneracy,
                        detail: format!("a^{i}_{j} = {a} (floor {alpha})"),
                    });
                }
            }
        }
    }
    ValidationReport { horizon, violations }
}

/// Flags rounds whose row or column sums deviate from one.
pub fn validate_balanced(g: &GraphSequence, horizon: usize) -> ValidationReport {
    let mut violations = Vec::new();
    for k in 0..horizon {
        let w = g.weights_at(k);
        for (label, sums) in [("row", w.row_sums()), ("column", w.col_sums())] {
            for (i, s) in sums.iter().enumerate() {
                if (s - 1.0).abs() > BALANCE_TOLERANCE {
                    violations.push(Violation {
                        round: k,
                        rule: Rule::Balanced,
                        detail: format!("{label} {i} sums to {s}"),
                    });
                }
            }
        }
    }
    ValidationReport { horizon, violations }
}

/// For every window start `k0` in `[0, horizon - period]`, checks that the
/// union of edge sets over `period` consecutive rounds is strongly connected.
pub fn validate_periodic_connectivity(g: &GraphSequence, horizon: usize, period: usize) -> ValidationReport {
    let mut violations = Vec::new();
    let n = g.agents();
    if period == 0 || horizon < period {
        violations.push(Violation {
            round: 0,
            rule: Rule::PeriodicConnectivity,
            detail: format!("horizon {horizon} shorter than period {period}"),
        });
        return ValidationReport { horizon, violations };
    }
    let edges: Vec<Vec<(usize, usize)>> = (0..horizon).map(|k| g.weights_at(k).edges()).collect();
    for k0 in 0..=horizon - period {
        let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for round in &edges[k0..k0 + period] {
            for &(from, to) in round {
                graph.update_edge(nodes[from], nodes[to], ());
            }
        }
        let components = kosaraju_scc(&graph).len();
        if components != 1 {
            violations.push(Violation {
                round: k0,
                rule: Rule::PeriodicConnectivity,
                detail: format!(
                    "union over rounds [{k0}, {}) has {components} strongly connected components",
                    k0 + period
                ),
            });
        }
    }
    ValidationReport { horizon, violations }
}

/// All three checks with the sequence's declared `alpha` and `B`.
pub fn validate_all(g: &GraphSequence, horizon: usize) -> ValidationReport {
    validate_nondegeneracy(g, horizon, g.alpha())
        .merge(validate_balanced(g, horizon))
        .merge(validate_periodic_connectivity(g, horizon, g.period()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_generators() {
        let c = GraphSequence::static_complete(2);
        assert_eq!(
            c.weights_at(7),
            WeightMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
        );
        assert_eq!(
            GraphSequence::static_identity(3).weights_at(0),
            WeightMatrix::identity(3)
        );
    }

    #[test]
    fn rotating_ring_is_deterministic() {
        let g = GraphSequence::rotating_ring(3, 0.1, 42).unwrap();
        assert_eq!(g.weights_at(0), g.weights_at(0));
        let h = GraphSequence::rotating_ring(3, 0.1, 42).unwrap();
        for k in 0..20 {
            assert_eq!(g.weights_at(k), h.weights_at(k));
        }
    }

    #[test]
    fn metropolis_path_weights() {
        // path 0 - 1 - 2: degrees (1, 2, 1); every edge weight 1/3
        let w = WeightMatrix::metropolis(3, &[(0, 1), (1, 2)]).unwrap();
        let third = 1.0 / 3.0;
        let expected = [
            [2.0 * third, third, 0.0],
            [third, third, third],
            [0.0, third, 2.0 * third],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.get(i, j) - expected[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(
            WeightMatrix::metropolis(2, &[(0, 1)]).unwrap(),
            WeightMatrix::uniform(2)
        );
        assert_eq!(WeightMatrix::metropolis(4, &[]).unwrap(), WeightMatrix::identity(4));
    }

    #[test]
    fn lazy_lifts_diagonal() {
        // star centre has self-weight 1 - 3/4 = 1/4
        let w = WeightMatrix::metropolis(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!((w.get(0, 0) - 0.25).abs() < 1e-15);
        let l = w.lazy(0.4);
        assert!((l.get(0, 0) - 0.4).abs() < 1e-12);
        for s in l.row_sums().iter().chain(l.col_sums().iter()) {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nondegeneracy_checks() {
        let id = GraphSequence::static_identity(3);
        assert!(validate_nondegeneracy(&id, 10, 0.5).is_ok());
        let bad = WeightMatrix::new(vec![vec![0.99, 0.01], vec![0.01, 0.99]]).unwrap();
        let g = GraphSequence::explicit(vec![WeightMatrix::identity(2), bad], 0.1, 1).unwrap();
        let r = validate_nondegeneracy(&g, 2, 0.1);
        assert_eq!(r.violations.len(), 2);
        assert!(r.violations.iter().all(|v| v.round == 1));
        assert!(validate_nondegeneracy(&GraphSequence::static_complete(5), 3, 0.2).is_ok());
    }

    #[test]
    fn balance_checks() {
        let row_only = WeightMatrix::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let g = GraphSequence::explicit(vec![row_only], 0.1, 1).unwrap();
        let r = validate_balanced(&g, 1);
        assert_eq!(r.count(Rule::Balanced), 2);
        assert!(r.violations.iter().all(|v| v.detail.starts_with("column")));
        assert!(validate_balanced(&GraphSequence::static_identity(4), 5).is_ok());
        assert!(validate_balanced(&GraphSequence::rotating_ring(5, 0.1, 0).unwrap(), 20).is_ok());
    }

    #[test]
    fn connectivity_checks() {
        let ring = GraphSequence::new(4, Topology::DirectedRing { weight: 0.5 }, 0.5, 1, 0).unwrap();
        assert!(validate_periodic_connectivity(&ring, 10, 1).is_ok());
        let id = GraphSequence::static_identity(3);
        assert_eq!(validate_periodic_connectivity(&id, 10, 2).violations.len(), 9);
        let rot = GraphSequence::rotating_ring(5, 0.1, 3).unwrap();
        assert!(validate_periodic_connectivity(&rot, 40, 5).is_ok());
        assert!(validate_periodic_connectivity(&rot, 40, 4).is_ok());
        assert!(!validate_periodic_connectivity(&rot, 40, 3).is_ok());
        for b in 1..4 {
            assert!(validate_periodic_connectivity(&GraphSequence::static_complete(4), 10, b).is_ok());
        }
    }

    #[test]
    fn metropolis_sequence_rejects_disconnected_schedule() {
        let ok = TopologySchedule {
            rounds: vec![vec![(0, 1)], vec![(1, 2)]],
        };
        assert!(metropolis_sequence(3, ok.clone(), 0.1, 2, 0).is_ok());
        assert!(matches!(
            metropolis_sequence(3, ok, 0.1, 1, 0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn mixing() {
        let w = WeightMatrix::new(vec![
            vec![0.5, 0.25, 0.25],
            vec![0.25, 0.5, 0.25],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        assert_eq!(w.mix_scalars(&[4.0, 0.0, 8.0]).unwrap()[0], 4.0);
        let v = WeightMatrix::uniform(2).mix_vectors(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(v, vec![vec![1.0], vec![1.0]]);
        assert!(w.mix_scalars(&[1.0]).is_err());
    }
}
