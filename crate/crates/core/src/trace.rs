//! Run traces: per-round agent states, the derived metrics, and CSV output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::linalg::{max_pairwise_dist, mean, norm, sup_dist};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dlpds,
    Dppds,
    PrimalOnly,
    Centralized,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dlpds => "dlpds",
            Algorithm::Dppds => "dppds",
            Algorithm::PrimalOnly => "primal_only",
            Algorithm::Centralized => "centralized",
        }
    }
}

/// One agent's estimates after a round. `lambda` is empty for algorithms
/// without an equality channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSnapshot {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    /// Largest pairwise distance between primal estimates.
    pub delta_x: f64,
    pub delta_mu: f64,
    pub delta_lambda: f64,
    pub x_hat: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    /// `max_l [g_l(x_hat)]^+`
    pub feas_g: f64,
    /// `||h(x_hat)||`
    pub feas_h: f64,
    /// `||x_hat - x_ref||_inf`
    pub dist_opt: Option<f64>,
    /// `max_i ||x^i - x_ref||_inf`
    pub worst_agent_dist: Option<f64>,
    /// `max_i |y^i - p_ref|`
    pub y_err: Option<f64>,
    pub max_mu_norm: f64,
    pub max_lambda_norm: f64,
}

impl RoundMetrics {
    pub fn compute(agents: &[AgentSnapshot], problem: &ProblemSpec) -> Result<Self> {
        let xs: Vec<Vec<f64>> = agents.iter().map(|a| a.x.clone()).collect();
        let mus: Vec<Vec<f64>> = agents.iter().map(|a| a.mu.clone()).collect();
        let lambdas: Vec<Vec<f64>> = agents.iter().map(|a| a.lambda.clone()).collect();
        let x_hat = mean(&xs);
        let feas_g = problem.g(&x_hat)?.into_iter().fold(0.0, f64::max);
        let feas_h = norm(&problem.h(&x_hat)?);
        let reference = problem.reference();
        Ok(RoundMetrics {
            delta_x: max_pairwise_dist(&xs),
            delta_mu: max_pairwise_dist(&mus),
            delta_lambda: max_pairwise_dist(&lambdas),
            mu_hat: mean(&mus),
            lambda_hat: mean(&lambdas),
            feas_g,
            feas_h,
            dist_opt: reference.map(|r| sup_dist(&x_hat, &r.x)),
            worst_agent_dist: reference.map(|r| xs.iter().map(|x| sup_dist(x, &r.x)).fold(0.0, f64::max)),
            y_err: reference.map(|r| agents.iter().map(|a| (a.y - r.value).abs()).fold(0.0, f64::max)),
            max_mu_norm: mus.iter().map(|m| norm(m)).fold(0.0, f64::max),
            max_lambda_norm: lambdas.iter().map(|l| norm(l)).fold(0.0, f64::max),
            x_hat,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// The states are `x^i(k)`, i.e. after `k` updates.
    pub k: usize,
    pub agents: Vec<AgentSnapshot>,
    pub metrics: RoundMetrics,
}

/// A relation that failed at a probe point by more than the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationViolation {
    pub round: usize,
    pub relation: &'static str,
    pub probe: usize,
    /// `lhs - rhs`, positive when violated.
    pub excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    /// Number of (round, probe, relation) triples evaluated.
    pub relation_checks: usize,
    pub relation_violations: Vec<RelationViolation>,
    /// `max_k |sum_i y^i(k+1) - N sum_i f^i(x^i(k))|`
    pub max_conservation_residual: f64,
    /// Largest deviation from the exact dual-sum recursion (penalty method).
    pub max_dual_sum_residual: f64,
    /// Graph rounds spent on the max/min consensus phase.
    pub consensus_rounds: usize,
    pub dual_radii: Vec<f64>,
    /// Round at which the early-stop threshold was met.
    pub stopped_early_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub dim: usize,
    /// Width of the `mu` columns.
    pub m: usize,
    /// Width of the `lambda` columns; `None` drops them from the schema.
    pub nu: Option<usize>,
    pub records: Vec<RoundRecord>,
    pub diagnostics: RunDiagnostics,
}

impl RunTrace {
    pub fn new(algorithm: Algorithm, problem: &ProblemSpec) -> Self {
        let (m, nu) = match algorithm {
            Algorithm::Dlpds => (problem.m(), None),
            Algorithm::PrimalOnly => (0, None),
            Algorithm::Dppds => (problem.m(), Some(problem.nu())),
            Algorithm::Centralized => (problem.m(), (problem.nu() > 0).then_some(problem.nu())),
        };
        RunTrace {
            algorithm,
            dim: problem.dim(),
            m,
            nu,
            records: Vec::new(),
            diagnostics: RunDiagnostics::default(),
        }
    }

    pub fn last(&self) -> Option<&RoundRecord> {
        self.records.last()
    }

    /// First recorded round after which `metric` stays at or below `tol`
    /// through the end of the trace.
    pub fn settling_round(&self, tol: f64, metric: impl Fn(&RoundMetrics) -> Option<f64>) -> Option<usize> {
        let mut settled = None;
        for r in &self.records {
            match metric(&r.metrics) {
                Some(v) if v <= tol => {
                    settled.get_or_insert(r.k);
                }
                _ => settled = None,
            }
        }
        settled
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["k".to_string(), "agent".to_string()];
        cols.extend((0..self.dim).map(|j| format!("x{j}")));
        cols.extend((0..self.m).map(|j| format!("mu{j}")));
        cols.extend((0..self.nu.unwrap_or(0)).map(|j| format!("lambda{j}")));
        for c in [
            "y",
            "delta_x",
            "delta_mu",
            "delta_lambda",
            "feas_g",
            "feas_h",
            "dist_opt",
            "y_err",
        ] {
            cols.push(c.to_string());
        }
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header())?;
        let mut line = String::new();
        for r in &self.records {
            for (i, a) in r.agents.iter().enumerate() {
                line.clear();
                let _ = write!(line, "{},{}", r.k, i);
                let lambda: &[f64] = if self.nu.is_some() { &a.lambda } else { &[] };
                for v in a.x.iter().chain(&a.mu).chain(lambda) {
                    line.push(',');
                    line.push_str(&format_sig(*v));
                }
                let m = &r.metrics;
                for v in [
                    Some(a.y),
                    Some(m.delta_x),
                    Some(m.delta_mu),
                    Some(m.delta_lambda),
                    Some(m.feas_g),
                    Some(m.feas_h),
                    m.dist_opt,
                    m.y_err,
                ] {
                    line.push(',');
                    if let Some(v) = v {
                        line.push_str(&format_sig(v));
                    }
                }
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    }
}

/// Writes `trace` to `path` (see [`RunTrace::write_csv`]).
pub fn emit_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Shortest decimal form of `v` rounded to 12 significant digits, in the
/// style of C's `%.12g`.
pub fn format_sig(v: f64) -> String {
    const DIGITS: usize = 12;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
