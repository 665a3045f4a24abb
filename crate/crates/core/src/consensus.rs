//! Max/min consensus and first-order dynamic average consensus.

use crate::error::{check_dim, Result};
use crate::linalg::add_scaled_in_place;
use crate::network::{GraphSequence, WeightMatrix};

/// Per-agent estimates `b^i(k)` (max channel) and `c^i(k)` (min channel).
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinEstimates {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl MaxMinEstimates {
    pub fn new(b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        check_dim("min-consensus values", b.len(), c.len())?;
        Ok(MaxMinEstimates { b, c })
    }

    /// Consensus on both channels holds, compared exactly: values are
    /// copied between agents, never averaged.
    #[allow(clippy::float_cmp)]
    pub fn agreed(&self) -> bool {
        self.b.windows(2).all(|w| w[0] == w[1]) && self.c.windows(2).all(|w| w[0] == w[1])
    }
}

/// One round: `b^i <- max` and `c^i <- min` over `N^i(k) ∪ {i}`, with
/// in-neighbours read off the nonzero pattern of `W`.
pub fn max_min_consensus_step(est: &MaxMinEstimates, w: &WeightMatrix) -> Result<MaxMinEstimates> {
    check_dim("max-consensus values", w.size(), est.b.len())?;
    check_dim("min-consensus values", w.size(), est.c.len())?;
    let n = w.size();
    let mut b = est.b.clone();
    let mut c = est.c.clone();
    for i in 0..n {
        for j in w.in_neighbors(i) {
            b[i] = b[i].max(est.b[j]);
            c[i] = c[i].min(est.c[j]);
        }
    }
    Ok(MaxMinEstimates { b, c })
}

/// Runs `rounds` max/min steps on `A(start), ..., A(start + rounds - 1)`.
pub fn run_max_min_consensus(
    est: &MaxMinEstimates,
    g: &GraphSequence,
    start: usize,
    rounds: usize,
) -> Result<MaxMinEstimates> {
    let mut cur = est.clone();
    for k in start..start + rounds {
        cur = max_min_consensus_step(&cur, &g.weights_at(k))?;
    }
    Ok(cur)
}

/// `x^i(k+1) = sum_j a^i_j(k) x^j(k) + xi^i(k)`.
pub fn dynamic_average_step(states: &[Vec<f64>], w: &WeightMatrix, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_dim("tracker inputs", states.len(), inputs.len())?;
    let mut next = w.mix_vectors(states)?;
    for (x, xi) in next.iter_mut().zip(inputs) {
        check_dim("tracker input length", x.len(), xi.len())?;
        add_scaled_in_place(x, 1.0, xi);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed_cycle_max_two_steps() {
        // 1 -> 2 -> 3 -> 1 as the weight pattern a^i_{i-1} > 0
        let w = WeightMatrix::new(vec![vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5]]).unwrap();
        let mut est = MaxMinEstimates::new(vec![1.0, 2.0, 3.0], vec![4.0, 1.0, 7.0]).unwrap();
        est = max_min_consensus_step(&est, &w).unwrap();
        assert_eq!(est.b, vec![3.0, 2.0, 3.0]);
        est = max_min_consensus_step(&est, &w).unwrap();
        assert_eq!(est.b, vec![3.0, 3.0, 3.0]);
        assert_eq!(est.c, vec![1.0, 1.0, 1.0]);
        assert!(est.agreed());
    }

    #[test]
    fn complete_graph_min_in_one_step() {
        let est = MaxMinEstimates::new(vec![0.0; 3], vec![4.0, 1.0, 7.0]).unwrap();
        let out = max_min_consensus_step(&est, &WeightMatrix::uniform(3)).unwrap();
        assert_eq!(out.c, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn equal_values_are_fixed() {
        let est = MaxMinEstimates::new(vec![2.5; 4], vec![0.5; 4]).unwrap();
        let g = GraphSequence::rotating_ring(4, 0.1, 1).unwrap();
        assert_eq!(run_max_min_consensus(&est, &g, 0, 50).unwrap(), est);
    }

    #[test]
    fn tracker_examples() {
        let w = WeightMatrix::uniform(2);
        let next = dynamic_average_step(&[vec![0.0], vec![2.0]], &w, &[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(next, vec![vec![2.0], vec![0.0]]);
        let same = vec![vec![3.0, 1.0]; 3];
        let zero = vec![vec![0.0, 0.0]; 3];
        assert_eq!(
            dynamic_average_step(&same, &WeightMatrix::uniform(3), &zero).unwrap(),
            same
        );
        let x = vec![vec![1.0], vec![5.0]];
        let xi = vec![vec![0.5], vec![-2.0]];
        assert_eq!(
            dynamic_average_step(&x, &WeightMatrix::identity(2), &xi).unwrap(),
            vec![vec![1.5], vec![3.0]]
        );
        assert!(dynamic_average_step(&x, &w, &xi[..1]).is_err());
    }
}
