//! Fixed random probe points for the per-round iteration-relation checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convex::ProjectableSet;
use crate::error::{Error, Result};

pub(crate) const PROBE_COUNT: usize = 8;
pub(crate) const RELATION_TOLERANCE: f64 = 1e-8;

pub(crate) struct Probes {
    pub x: Vec<Vec<f64>>,
    pub duals: Vec<Vec<f64>>,
}

/// Primal probes in `common`, dual probes drawn from `[0, dual_scale]^width`
/// and projected onto `dual_set` when one is given.
pub(crate) fn draw(
    seed: u64,
    common: &ProjectableSet,
    width: usize,
    dual_scale: f64,
    dual_set: Option<&ProjectableSet>,
) -> Result<Probes> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = common
        .bounding_box()
        .ok_or_else(|| Error::InvalidArgument("probe points need a bounded primal set".into()))?;
    let mut x = Vec::with_capacity(PROBE_COUNT);
    let mut duals = Vec::with_capacity(PROBE_COUNT);
    for _ in 0..PROBE_COUNT {
        let z: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..=*h)).collect();
        x.push(common.project(&z)?);
        let d: Vec<f64> = (0..width).map(|_| rng.random_range(0.0..=dual_scale)).collect();
        duals.push(match dual_set {
            Some(s) => s.project(&d)?,
            None => d,
        });
    }
    Ok(Probes { x, duals })
}
