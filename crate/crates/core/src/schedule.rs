//! Step-size schedules `alpha(k)`, their partial sums
//! `s(k) = sum_{l <= k} alpha(l)`, and finite-horizon checks of the
//! conditions the two algorithms need.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `scale / (k + 1)`
    Harmonic { scale: f64 },
    /// `scale / (k + 1)^exponent`
    Power { scale: f64, exponent: f64 },
    /// `value` every round
    Constant { value: f64 },
}

/// Conditions a schedule is known to satisfy from its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleClaims {
    /// `alpha(k) -> 0`
    pub diminishing: bool,
    /// `sum alpha = +inf`
    pub divergent_sum: bool,
    /// `sum alpha^2 < +inf`
    pub square_summable: bool,
    /// The stronger step-size conditions required by the penalty method.
    pub penalty_conditions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeSchedule {
    rule: StepRule,
}

impl StepSizeSchedule {
    pub fn new(rule: StepRule) -> Result<Self> {
        let (scale, ok) = match rule {
            StepRule::Harmonic { scale } => (scale, true),
            StepRule::Power { scale, exponent } => (scale, exponent.is_finite() && exponent >= 0.0),
            StepRule::Constant { value } => (value, true),
        };
        if !(scale > 0.0 && scale.is_finite()) || !ok {
            return Err(Error::Schedule(format!("step sizes must be positive: {rule:?}")));
        }
        Ok(StepSizeSchedule { rule })
    }

    /// `alpha(k) = 1 / (k + 1)`.
    pub fn harmonic() -> Self {
        StepSizeSchedule {
            rule: StepRule::Harmonic { scale: 1.0 },
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(StepRule::Constant { value })
    }

    pub fn inverse_sqrt() -> Self {
        StepSizeSchedule {
            rule: StepRule::Power {
                scale: 1.0,
                exponent: 0.5,
            },
        }
    }

    pub fn rule(&self) -> StepRule {
        self.rule
    }

    /// The same rule with every step multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(match self.rule {
            StepRule::Harmonic { scale } => StepRule::Harmonic { scale: scale * factor },
            StepRule::Power { scale, exponent } => StepRule::Power {
                scale: scale * factor,
                exponent,
            },
            StepRule::Constant { value } => StepRule::Constant { value: value * factor },
        })
    }

    pub fn alpha(&self, k: usize) -> f64 {
        let t = k as f64 + 1.0;
        match self.rule {
            StepRule::Harmonic { scale } => scale / t,
            StepRule::Power { scale, exponent } => scale / t.powf(exponent),
            StepRule::Constant { value } => value,
        }
    }

    /// `[s(0), ..., s(horizon - 1)]`.
    pub fn partial_sums(&self, horizon: usize) -> Vec<f64> {
        let mut acc = 0.0;
        (0..horizon)
            .map(|k| {
                acc += self.alpha(k);
                acc
            })
            .collect()
    }

    pub fn claims(&self) -> ScheduleClaims {
        match self.rule {
            StepRule::Harmonic { .. } => ScheduleClaims {
                diminishing: true,
                divergent_sum: true,
                square_summable: true,
                penalty_conditions: true,
            },
            // alpha ~ k^-p: s(k) ~ k^(1-p), alpha(k+1) s(k) ~ k^(1-2p),
            // alpha^2 s ~ k^(1-3p), alpha^2 s^2 ~ k^(2-4p).
            StepRule::Power { exponent: p, .. } => ScheduleClaims {
                diminishing: p > 0.0,
                divergent_sum: p <= 1.0,
                square_summable: p > 0.5,
                penalty_conditions: p > 0.75 && p <= 1.0,
            },
            StepRule::Constant { .. } => ScheduleClaims {
                diminishing: false,
                divergent_sum: true,
                square_summable: false,
                penalty_conditions: false,
            },
        }
    }

    /// Rejects schedules that do not claim the diminishing, non-summable,
    /// square-summable conditions of the Lagrangian method.
    pub fn require_standard_conditions(&self) -> Result<()> {
        let c = self.claims();
        if c.diminishing && c.divergent_sum && c.square_summable {
            Ok(())
        } else {
            Err(Error::Schedule(format!(
                "{:?} does not satisfy alpha -> 0, sum alpha = inf, sum alpha^2 < inf",
                self.rule
            )))
        }
    }
}

/// Per-agent schedules `alpha^i(k) = c_i alpha(k)` with factors spread
/// evenly over `[c_alpha, 1]`, so `min_i alpha^i(k) >= c_alpha max_i alpha^i(k)`.
pub fn per_agent_schedule(base: &StepSizeSchedule, agents: usize, c_alpha: f64) -> Result<Vec<StepSizeSchedule>> {
    if !(c_alpha > 0.0 && c_alpha <= 1.0) {
        return Err(Error::Schedule(format!(
            "step deviation factor must lie in (0, 1], got {c_alpha}"
        )));
    }
    (0..agents)
        .map(|i| {
            let t = if agents > 1 {
                i as f64 / (agents - 1) as f64
            } else {
                0.0
            };
            base.scaled(1.0 - (1.0 - c_alpha) * t)
        })
        .collect()
}

/// `s(k) <= log2(k) + 1`, the analytic growth bound for the harmonic
/// partial sums. Only meaningful for `k >= 2`; at `k = 1`, `s(1) = 1.5`.
pub fn harmonic_partial_sum_bound(k: usize) -> f64 {
    (k as f64).log2() + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Established from the closed form of the schedule.
    Certified,
    /// No violation visible on the finite horizon; evidence, not proof.
    Plausible,
    /// A violation (divergence, non-decay) was detected.
    Fail,
}

impl Verdict {
    pub fn passes(self) -> bool {
        !matches!(self, Verdict::Fail)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "PASS (analytic)",
            Verdict::Plausible => "PASS (finite-horizon evidence)",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    /// Partial sum (or tail supremum) at the horizon.
    pub value: f64,
    /// Growth of the partial sum over the second half of the horizon divided
    /// by its growth over the preceding quarter. Ratios near or above one
    /// mean the series is not settling.
    pub growth_ratio: f64,
    pub verdict: Verdict,
}

/// Finite-horizon diagnostics for the penalty method's step-size
/// conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption6Report {
    pub horizon: usize,
    pub checks: Vec<ConditionCheck>,
    /// Largest `k` in `[2, horizon)` violating `s(k) <= log2 k + 1`, if any
    /// (harmonic schedules only).
    pub log_bound_violation: Option<usize>,
}

impl Assumption6Report {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.passes())
    }

    pub fn is_certified(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Certified)
    }
}

impl fmt::Display for Assumption6Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "step-size conditions over horizon {}:", self.horizon)?;
        for c in &self.checks {
            writeln!(
                f,
                "  {:<28} value {:>14.6e}  growth ratio {:>8.4}  {}",
                c.name, c.value, c.growth_ratio, c.verdict
            )?;
        }
        let overall = if self.is_certified() {
            "PASS (analytic)"
        } else if self.passes() {
            "PASS (finite-horizon evidence, not proof)"
        } else {
            "FAIL"
        };
        write!(f, "  overall: {overall}")
    }
}

/// Threshold on the growth ratio above which a partial-sum sequence is
/// declared divergent. For a tail `k^-q` the ratio is `2^(1-q)`, so
/// convergent power tails (`q > 1`) stay below one and `q <= 1` reaches it.
const DIVERGENCE_RATIO: f64 = 0.95;

/// Checks `alpha -> 0`, `sum alpha = inf`, `sum alpha^2 < inf`,
/// `alpha(k+1) s(k) -> 0`, `sum alpha(k+1)^2 s(k) < inf` and
/// `sum alpha(k+1)^2 s(k)^2 < inf` on `[0, horizon)`.
pub fn validate_assumption6(schedule: &StepSizeSchedule, horizon: usize) -> Result<Assumption6Report> {
    if horizon < 10 {
        return Err(Error::Schedule(format!("horizon must be at least 10, got {horizon}")));
    }
    let alphas: Vec<f64> = (0..=horizon).map(|k| schedule.alpha(k)).collect();
    if let Some(k) = alphas.iter().position(|&a| !(a > 0.0)) {
        return Err(Error::Schedule(format!("alpha({k}) = {} is not positive", alphas[k])));
    }
    let s = schedule.partial_sums(horizon);

    let quarter = horizon / 4;
    let half = horizon / 2;
    // Growth of a partial-sum sequence over [half, horizon) relative to [quarter, half).
    let growth = |terms: &dyn Fn(usize) -> f64| -> (f64, f64) {
        let mut total = 0.0;
        let mut early = 0.0;
        let mut late = 0.0;
        for k in 0..horizon {
            let t = terms(k);
            total += t;
            if k >= half {
                late += t;
            } else if k >= quarter {
                early += t;
            }
        }
        let ratio = if early > 0.0 { late / early } else { 0.0 };
        (total, ratio)
    };

    let analytic = schedule.claims().penalty_conditions;
    let summable = |name, (value, ratio): (f64, f64)| ConditionCheck {
        name,
        value,
        growth_ratio: ratio,
        verdict: if analytic {
            Verdict::Certified
        } else if ratio >= DIVERGENCE_RATIO {
            Verdict::Fail
        } else {
            Verdict::Plausible
        },
    };

    let mut checks = Vec::new();

    let a_early = alphas[quarter];
    let a_late = alphas[horizon - 1];
    checks.push(ConditionCheck {
        name: "alpha(k) -> 0",
        value: a_late,
        growth_ratio: a_late / a_early,
        verdict: if analytic {
            Verdict::Certified
        } else if a_late >= 0.99 * a_early {
            Verdict::Fail
        } else {
            Verdict::Plausible
        },
    });

    let (value, ratio) = growth(&|k| alphas[k]);
    checks.push(ConditionCheck {
        name: "sum alpha = inf",
        value,
        growth_ratio: ratio,
        verdict: if analytic {
            Verdict::Certified
        } else if ratio < DIVERGENCE_RATIO {
            Verdict::Fail
        } else {
            Verdict::Plausible
        },
    });

    checks.push(summable("sum alpha^2 < inf", growth(&|k| alphas[k] * alphas[k])));

    let tail_sup = |lo: usize, hi: usize| (lo..hi).map(|k| alphas[k + 1] * s[k]).fold(0.0, f64::max);
    let early_sup = tail_sup(quarter, half);
    let late_sup = tail_sup(half, horizon);
    checks.push(ConditionCheck {
        name: "alpha(k+1) s(k) -> 0",
        value: late_sup,
        growth_ratio: if early_sup > 0.0 { late_sup / early_sup } else { 0.0 },
        verdict: if analytic {
            Verdict::Certified
        } else if late_sup >= 0.99 * early_sup {
            Verdict::Fail
        } else {
            Verdict::Plausible
        },
    });

    checks.push(summable(
        "sum alpha(k+1)^2 s(k) < inf",
        growth(&|k| alphas[k + 1] * alphas[k + 1] * s[k]),
    ));
    checks.push(summable(
        "sum alpha(k+1)^2 s(k)^2 < inf",
        growth(&|k| alphas[k + 1] * alphas[k + 1] * s[k] * s[k]),
    ));

    let log_bound_violation = match schedule.rule() {
        StepRule::Harmonic { scale: 1.0 } => (2..horizon).rev().find(|&k| s[k] > harmonic_partial_sum_bound(k)),
        _ => None,
    };
    if log_bound_violation.is_some() {
        for c in &mut checks {
            c.verdict = Verdict::Fail;
        }
    }

    Ok(Assumption6Report {
        horizon,
        checks,
        log_bound_violation,
    })
}
