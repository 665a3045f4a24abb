//! Experiment configuration, orchestration and summaries.
//!
//! Configs are plain `key = value` lines with `#` comments:
//!
//! ```text
//! problem = num          # num | quadratic | custom:<file>
//! algorithm = dlpds      # dlpds | dppds | primal_only | centralized
//! graph = rotating_ring  # rotating_ring | directed_ring | complete | identity | path | random
//! N = 5
//! alpha = 0.1
//! seed = 7
//! schedule = harmonic    # harmonic | inverse_sqrt | constant <a> | power <p>
//! rounds = 20000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::baselines::{centralized_subgradient, reference_solve, CentralizedConfig, ReferenceOptions};
use crate::bounds::{prepare_dual_boxes, DualBoundConfig, SamplingBudget};
use crate::convex::{AffineMap, ConvexFn, ProjectableSet};
use crate::dlpds::{run_dlpds, run_primal_only, DlpdsConfig, Initialization};
use crate::dppds::{run_dppds, DppdsConfig, DEFAULT_DUAL_CAP};
use crate::error::{Error, Result};
use crate::network::{validate_all, GraphSequence, Topology, ValidationReport};
use crate::problems::{
    build_custom, build_num_problem, build_quadratic_problem, ProblemDescription, ProblemSpec, Reference,
};
use crate::schedule::{per_agent_schedule, validate_assumption6, Assumption6Report, StepRule, StepSizeSchedule};
use crate::trace::{emit_csv, Algorithm, RunTrace};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemChoice {
    Num,
    Quadratic,
    Custom(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    RotatingRing,
    DirectedRing { weight: f64 },
    Complete,
    Identity,
    Path,
    Random { edge_probability: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemChoice,
    pub algorithm: Algorithm,
    pub graph: GraphKind,
    /// Must match the problem's agent count when given.
    pub agents: Option<usize>,
    /// Declared connectivity period; the generator's own when `None`.
    pub period: Option<usize>,
    /// Non-degeneracy floor of the weights.
    pub alpha: f64,
    pub seed: u64,
    pub schedule: StepSizeSchedule,
    /// Per-agent step deviation factor in `(0, 1]` (Lagrangian algorithm).
    pub c_alpha: f64,
    pub rounds: usize,
    pub slater_margin: f64,
    pub theta: Vec<f64>,
    pub bound_sampling_budget: usize,
    pub b0: Option<Vec<f64>>,
    pub c0: Option<Vec<f64>>,
    /// `None` picks the algorithm's default start.
    pub init: Option<InitChoice>,
    pub out: Option<PathBuf>,
    pub debug_asserts: bool,
    pub early_stop: Option<f64>,
    pub dual_cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitChoice {
    Center,
    Slater,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemChoice::Num,
            algorithm: Algorithm::Dlpds,
            graph: GraphKind::RotatingRing,
            agents: None,
            period: None,
            alpha: 0.1,
            seed: 0,
            schedule: StepSizeSchedule::harmonic(),
            c_alpha: 1.0,
            rounds: 20_000,
            slater_margin: 0.5,
            theta: vec![1.0],
            bound_sampling_budget: 20_000,
            b0: None,
            c0: None,
            init: None,
            out: None,
            debug_asserts: false,
            early_stop: None,
            dual_cap: DEFAULT_DUAL_CAP,
        }
    }
}

fn set<T>(slot: &mut T, value: T) -> std::result::Result<(), String> {
    *slot = value;
    Ok(())
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", s.trim())))
        .collect()
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected a boolean, got '{other}'")),
    }
}

fn parse_schedule(v: &str) -> std::result::Result<StepSizeSchedule, String> {
    let mut words = v.split_whitespace();
    let kind = words.next().unwrap_or("");
    let arg = words
        .next()
        .map(str::parse::<f64>)
        .transpose()
        .map_err(|e| e.to_string())?;
    let rule = match (kind, arg) {
        ("harmonic", None) => StepRule::Harmonic { scale: 1.0 },
        ("harmonic", Some(scale)) => StepRule::Harmonic { scale },
        ("inverse_sqrt", None) => StepRule::Power {
            scale: 1.0,
            exponent: 0.5,
        },
        ("constant", Some(value)) => StepRule::Constant { value },
        ("power", Some(exponent)) => StepRule::Power { scale: 1.0, exponent },
        _ => return Err(format!("unknown schedule '{v}'")),
    };
    StepSizeSchedule::new(rule).map_err(|e| e.to_string())
}

/// Splits `text` into `(line number, key, value)` triples, dropping
/// comments and blank lines.
fn key_values(text: &str) -> Vec<std::result::Result<(usize, String, String), String>> {
    text.lines()
        .enumerate()
        .filter_map(|(n, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                return None;
            }
            Some(match line.split_once('=') {
                Some((k, v)) => Ok((n + 1, k.trim().to_string(), v.trim().to_string())),
                None => Err(format!("line {}: expected 'key = value', got '{line}'", n + 1)),
            })
        })
        .collect()
}

/// Parses a config, reporting every bad line at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut errors = Vec::new();
    let mut seen = BTreeMap::new();
    let mut ring_weight = 0.5;
    let mut edge_probability = 0.3;
    let mut graph_name = String::from("rotating_ring");
    let mut have_problem = false;

    for entry in key_values(text) {
        let (line, key, value) = match entry {
            Ok(t) => t,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        if seen.insert(key.clone(), line).is_some() {
            errors.push(format!("line {line}: duplicate key '{key}'"));
            continue;
        }
        let v = value.as_str();
        let int = |s: &str| s.parse::<usize>().map_err(|e| e.to_string());
        let real = |s: &str| s.parse::<f64>().map_err(|e| e.to_string());
        let result: std::result::Result<(), String> = match key.as_str() {
            "problem" => {
                have_problem = true;
                match v {
                    "num" => set(&mut cfg.problem, ProblemChoice::Num),
                    "quadratic" => set(&mut cfg.problem, ProblemChoice::Quadratic),
                    _ => match v.strip_prefix("custom:") {
                        Some(p) if !p.trim().is_empty() => {
                            set(&mut cfg.problem, ProblemChoice::Custom(PathBuf::from(p.trim())))
                        }
                        _ => Err(format!("unknown problem '{v}'")),
                    },
                }
            }
            "algorithm" => match v {
                "dlpds" => set(&mut cfg.algorithm, Algorithm::Dlpds),
                "dppds" => set(&mut cfg.algorithm, Algorithm::Dppds),
                "primal_only" => set(&mut cfg.algorithm, Algorithm::PrimalOnly),
                "centralized" => set(&mut cfg.algorithm, Algorithm::Centralized),
                _ => Err(format!("unknown algorithm '{v}'")),
            },
            "graph" => match v {
                "rotating_ring" | "directed_ring" | "complete" | "identity" | "path" | "random" => {
                    graph_name = v.to_string();
                    Ok(())
                }
                _ => Err(format!("unknown graph '{v}'")),
            },
            "ring_weight" => real(v).map(|w| ring_weight = w),
            "edge_probability" => real(v).map(|p| edge_probability = p),
            "N" => int(v).map(|n| cfg.agents = Some(n)),
            "B" => int(v).and_then(|b| {
                if b == 0 {
                    Err("must be positive".into())
                } else {
                    set(&mut cfg.period, Some(b))
                }
            }),
            "alpha" => real(v).and_then(|a| {
                if a > 0.0 && a <= 1.0 {
                    set(&mut cfg.alpha, a)
                } else {
                    Err("must lie in (0, 1]".into())
                }
            }),
            "seed" => v.parse::<u64>().map(|s| cfg.seed = s).map_err(|e| e.to_string()),
            "schedule" => parse_schedule(v).map(|s| cfg.schedule = s),
            "c_alpha" => real(v).and_then(|c| {
                if c > 0.0 && c <= 1.0 {
                    set(&mut cfg.c_alpha, c)
                } else {
                    Err("must lie in (0, 1]".into())
                }
            }),
            "rounds" => int(v).and_then(|r| {
                if r == 0 {
                    Err("must be at least 1".into())
                } else {
                    set(&mut cfg.rounds, r)
                }
            }),
            "slater_margin" => real(v).and_then(|d| {
                if d > 0.0 {
                    set(&mut cfg.slater_margin, d)
                } else {
                    Err("must be positive".into())
                }
            }),
            "theta" => parse_list(v).and_then(|t| {
                if t.iter().all(|x| *x >= 0.0) {
                    set(&mut cfg.theta, t)
                } else {
                    Err("must be nonnegative".into())
                }
            }),
            "bound_sampling_budget" => int(v).and_then(|b| {
                if b == 0 {
                    Err("must be positive".into())
                } else {
                    set(&mut cfg.bound_sampling_budget, b)
                }
            }),
            "b0" => parse_list(v).map(|b| cfg.b0 = Some(b)),
            "c0" => parse_list(v).map(|c| cfg.c0 = Some(c)),
            "init" => match v {
                "center" => set(&mut cfg.init, Some(InitChoice::Center)),
                "slater" => set(&mut cfg.init, Some(InitChoice::Slater)),
                _ => Err(format!("unknown init '{v}'")),
            },
            "out" => set(&mut cfg.out, Some(PathBuf::from(v))),
            "debug_asserts" => parse_bool(v).map(|b| cfg.debug_asserts = b),
            "early_stop" => real(v).and_then(|t| {
                if t > 0.0 {
                    set(&mut cfg.early_stop, Some(t))
                } else {
                    Err("must be positive".into())
                }
            }),
            "dual_cap" => real(v).and_then(|c| {
                if c > 0.0 {
                    set(&mut cfg.dual_cap, c)
                } else {
                    Err("must be positive".into())
                }
            }),
            _ => Err("unknown key".into()),
        };
        if let Err(e) = result {
            errors.push(format!("line {line}: {key}: {e}"));
        }
    }
    if !have_problem {
        errors.push("missing required key 'problem'".into());
    }
    cfg.graph = match graph_name.as_str() {
        "directed_ring" => GraphKind::DirectedRing { weight: ring_weight },
        "complete" => GraphKind::Complete,
        "identity" => GraphKind::Identity,
        "path" => GraphKind::Path,
        "random" => GraphKind::Random { edge_probability },
        _ => GraphKind::RotatingRing,
    };
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    // custom problem paths are relative to the config file
    if let ProblemChoice::Custom(p) = &cfg.problem {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.problem = ProblemChoice::Custom(dir.join(p));
            }
        }
    }
    Ok(cfg)
}

fn parse_objective(v: &str, dim: usize) -> std::result::Result<ConvexFn, String> {
    let (kind, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
    let parts: Vec<&str> = rest.split(';').map(str::trim).collect();
    let f = match kind {
        "quadratic" if parts.len() == 2 => {
            let scale = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
            ConvexFn::quadratic(scale, parse_list(parts[1])?).map_err(|e| e.to_string())?
        }
        "linear" if parts.len() == 2 => ConvexFn::linear(
            parse_list(parts[0])?,
            parts[1].parse::<f64>().map_err(|e| e.to_string())?,
        ),
        "neg_sqrt" if parts.len() == 1 => {
            let coord = parts[0].parse::<usize>().map_err(|e| e.to_string())?;
            ConvexFn::neg_sqrt(dim, coord).map_err(|e| e.to_string())?
        }
        _ => return Err(format!("cannot parse function '{v}'")),
    };
    if f.dim() != dim {
        return Err(format!("function has dimension {}, problem has {dim}", f.dim()));
    }
    Ok(f)
}

fn parse_set(v: &str) -> std::result::Result<ProjectableSet, String> {
    let (kind, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
    let parts: Vec<&str> = rest.split(';').map(str::trim).collect();
    let set = match kind {
        "box" if parts.len() == 2 => ProjectableSet::new_box(parse_list(parts[0])?, parse_list(parts[1])?),
        "ball" if parts.len() == 2 => ProjectableSet::new_ball(
            parse_list(parts[0])?,
            parts[1].parse::<f64>().map_err(|e| e.to_string())?,
        ),
        _ => return Err(format!("cannot parse set '{v}'")),
    };
    set.map_err(|e| e.to_string())
}

/// Reads a sectioned custom problem:
///
/// ```text
/// [problem]
/// name = toy
/// dim = 2
/// [agent]
/// objective = quadratic 1; 0, 0     # scale; centre
/// set = box -1, -1; 1, 1            # lo; hi   (or: ball centre; radius)
/// [inequality]
/// linear = 1, 1; -1                 # g(x) = c . x + offset
/// [equality]
/// row = 1, -1; 0                    # a . x = b
/// [reference]
/// x = 0, 0
/// value = 0
/// ```
///
/// Each `[agent]` section adds one agent; `objective` may also be
/// `linear c; offset` or `neg_sqrt <coord>`.
pub fn parse_problem_file(text: &str) -> Result<ProblemSpec> {
    let mut errors = Vec::new();
    let mut name = String::from("custom");
    let mut dim: Option<usize> = None;
    let mut section = String::new();
    let mut objectives = Vec::new();
    let mut sets = Vec::new();
    let mut pending: Vec<(Option<String>, Option<String>)> = Vec::new();
    let mut inequality_lines = Vec::new();
    let mut rows = Vec::new();
    let mut offsets = Vec::new();
    let mut ref_x: Option<Vec<f64>> = None;
    let mut ref_value: Option<f64> = None;

    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(s) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = s.trim().to_string();
            if section == "agent" {
                pending.push((None, None));
            } else if !["problem", "inequality", "equality", "reference"].contains(&section.as_str()) {
                errors.push(format!("line {}: unknown section [{section}]", n + 1));
            }
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("line {}: expected 'key = value'", n + 1));
            continue;
        };
        let (k, v) = (k.trim(), v.trim().to_string());
        let bad = |msg: String| format!("line {}: {msg}", n + 1);
        match (section.as_str(), k) {
            ("problem", "name") => name = v,
            ("problem", "dim") => match v.parse() {
                Ok(d) => dim = Some(d),
                Err(e) => errors.push(bad(format!("dim: {e}"))),
            },
            ("agent", "objective") => pending.last_mut().expect("inside agent section").0 = Some(v),
            ("agent", "set") => pending.last_mut().expect("inside agent section").1 = Some(v),
            ("inequality", "linear") => inequality_lines.push((n + 1, v)),
            ("equality", "row") => match v.split_once(';') {
                Some((a, b)) => match (parse_list(a), b.trim().parse::<f64>()) {
                    (Ok(a), Ok(b)) => {
                        rows.push(a);
                        offsets.push(b);
                    }
                    _ => errors.push(bad(format!("cannot parse equality row '{v}'"))),
                },
                None => errors.push(bad(format!("cannot parse equality row '{v}'"))),
            },
            ("reference", "x") => match parse_list(&v) {
                Ok(x) => ref_x = Some(x),
                Err(e) => errors.push(bad(e)),
            },
            ("reference", "value") => match v.parse() {
                Ok(x) => ref_value = Some(x),
                Err(e) => errors.push(bad(format!("{e}"))),
            },
            _ => errors.push(bad(format!("unexpected key '{k}' in section [{section}]"))),
        }
    }
    let Some(dim) = dim else {
        errors.push("missing 'dim' in [problem]".into());
        return Err(Error::Config(errors));
    };
    for (i, (obj, set)) in pending.into_iter().enumerate() {
        match obj.map(|o| parse_objective(&o, dim)) {
            Some(Ok(f)) => objectives.push(f),
            Some(Err(e)) => errors.push(format!("agent {i}: {e}")),
            None => errors.push(format!("agent {i}: missing objective")),
        }
        match set.map(|s| parse_set(&s)) {
            Some(Ok(s)) => sets.push(s),
            Some(Err(e)) => errors.push(format!("agent {i}: {e}")),
            None => errors.push(format!("agent {i}: missing set")),
        }
    }
    let inequality: Vec<ConvexFn> = inequality_lines
        .into_iter()
        .filter_map(|(line, v)| match parse_objective(&format!("linear {v}"), dim) {
            Ok(f) => Some(f),
            Err(e) => {
                errors.push(format!("line {line}: {e}"));
                None
            }
        })
        .collect();
    let equality = if rows.is_empty() {
        None
    } else {
        match AffineMap::new(rows, offsets) {
            Ok(h) => Some(h),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        }
    };
    let reference = match (ref_x, ref_value) {
        (Some(x), Some(value)) => Some(Reference { x, value }),
        (None, None) => None,
        _ => {
            errors.push("[reference] needs both x and value".into());
            None
        }
    };
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    build_custom(ProblemDescription {
        name,
        objectives,
        inequality,
        equality,
        local_sets: sets,
        reference,
        require_identical_sets: false,
    })
}

pub fn load_problem(choice: &ProblemChoice) -> Result<ProblemSpec> {
    match choice {
        ProblemChoice::Num => Ok(build_num_problem()),
        ProblemChoice::Quadratic => Ok(build_quadratic_problem()),
        ProblemChoice::Custom(path) => parse_problem_file(&std::fs::read_to_string(path)?),
    }
}

/// The graph sequence a config describes, for `agents` agents.
pub fn build_graph(cfg: &ExperimentConfig, agents: usize) -> Result<GraphSequence> {
    let (topology, natural) = match &cfg.graph {
        GraphKind::RotatingRing => (Topology::RotatingRing, if agents <= 2 { 1 } else { agents }),
        GraphKind::DirectedRing { weight } => (Topology::DirectedRing { weight: *weight }, 1),
        GraphKind::Complete => (Topology::Complete, 1),
        GraphKind::Identity => (Topology::Identity, 1),
        GraphKind::Path => (Topology::Path, 1),
        GraphKind::Random { edge_probability } => (
            Topology::RandomMetropolis {
                edge_probability: *edge_probability,
            },
            if agents <= 2 { 1 } else { agents },
        ),
    };
    GraphSequence::new(agents, topology, cfg.alpha, cfg.period.unwrap_or(natural), cfg.seed)
}

/// The problem as the selected algorithm will see it. The penalty
/// algorithm needs one shared local set, so differing sets are replaced by
/// their intersection.
fn prepare_problem(cfg: &ExperimentConfig, notes: &mut Vec<String>) -> Result<ProblemSpec> {
    let problem = load_problem(&cfg.problem)?;
    if let Some(n) = cfg.agents {
        if n != problem.agents() {
            return Err(Error::Config(vec![format!(
                "N = {n} but problem '{}' has {} agents",
                problem.name(),
                problem.agents()
            )]));
        }
    }
    if cfg.algorithm == Algorithm::Dppds && !problem.has_identical_sets() {
        notes.push("local sets differ; every agent uses their intersection".into());
        return problem.with_common_set();
    }
    Ok(problem)
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub problem: String,
    pub algorithm: Algorithm,
    pub rounds: usize,
    pub delta_x: f64,
    pub delta_mu: f64,
    pub delta_lambda: f64,
    pub feas_g: f64,
    pub feas_h: f64,
    pub dist_opt: Option<f64>,
    pub worst_agent_dist: Option<f64>,
    pub y_err: Option<f64>,
    pub conservation_residual: f64,
    pub dual_sum_residual: f64,
    pub relation_checks: usize,
    pub dual_radii: Vec<f64>,
    pub wall_time: Duration,
    pub notes: Vec<String>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        writeln!(f, "problem            {}", self.problem)?;
        writeln!(f, "algorithm          {}", self.algorithm.name())?;
        writeln!(f, "rounds             {}", self.rounds)?;
        writeln!(f, "delta_x            {:.6e}", self.delta_x)?;
        writeln!(f, "delta_mu           {:.6e}", self.delta_mu)?;
        writeln!(f, "delta_lambda       {:.6e}", self.delta_lambda)?;
        writeln!(f, "feas_g             {:.6e}", self.feas_g)?;
        writeln!(f, "feas_h             {:.6e}", self.feas_h)?;
        writeln!(f, "dist_opt           {}", opt(self.dist_opt))?;
        writeln!(f, "worst agent dist   {}", opt(self.worst_agent_dist))?;
        writeln!(f, "y_err              {}", opt(self.y_err))?;
        writeln!(f, "y conservation     {:.3e}", self.conservation_residual)?;
        if self.algorithm == Algorithm::Dppds {
            writeln!(f, "dual-sum residual  {:.3e}", self.dual_sum_residual)?;
        }
        if self.relation_checks > 0 {
            writeln!(f, "relation checks    {} (no violations)", self.relation_checks)?;
        }
        if !self.dual_radii.is_empty() {
            writeln!(f, "dual radii         {:?}", self.dual_radii)?;
        }
        for n in &self.notes {
            writeln!(f, "note               {n}")?;
        }
        write!(f, "wall time          {:.3} s", self.wall_time.as_secs_f64())
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub trace: RunTrace,
    pub summary: Summary,
}

fn bound_config(cfg: &ExperimentConfig) -> DualBoundConfig {
    DualBoundConfig {
        mu_tilde: None,
        margin: cfg.slater_margin,
        theta: cfg.theta.clone(),
        budget: SamplingBudget {
            samples: cfg.bound_sampling_budget,
            seed: cfg.seed,
            ..Default::default()
        },
        b0: cfg.b0.clone(),
        c0: cfg.c0.clone(),
    }
}

/// Validates, runs the selected pipeline, and writes the CSV when
/// `cfg.out` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let problem = prepare_problem(cfg, &mut notes)?;
    let g = build_graph(cfg, problem.agents())?;
    let trace = match cfg.algorithm {
        Algorithm::Dlpds | Algorithm::PrimalOnly => {
            let config = DlpdsConfig {
                rounds: cfg.rounds,
                schedules: if cfg.c_alpha < 1.0 {
                    per_agent_schedule(&cfg.schedule, problem.agents(), cfg.c_alpha)?
                } else {
                    vec![cfg.schedule]
                },
                init: match cfg.init {
                    Some(InitChoice::Center) => Initialization::Center,
                    _ => Initialization::SlaterPoint,
                },
                bounds: bound_config(cfg),
                debug_asserts: cfg.debug_asserts,
                probe_seed: cfg.seed,
                early_stop: cfg.early_stop,
            };
            if cfg.algorithm == Algorithm::Dlpds {
                run_dlpds(&problem, &g, &config)?
            } else {
                run_primal_only(&problem, &g, &config)?
            }
        }
        Algorithm::Dppds => {
            let init = match cfg.init {
                Some(InitChoice::Slater) => {
                    return Err(Error::Config(vec![
                        "init = slater applies to the Lagrangian algorithm only".into(),
                    ]))
                }
                _ => None,
            };
            run_dppds(
                &problem,
                &g,
                &DppdsConfig {
                    rounds: cfg.rounds,
                    schedule: cfg.schedule,
                    init,
                    debug_asserts: cfg.debug_asserts,
                    probe_seed: cfg.seed,
                    dual_cap: cfg.dual_cap,
                    early_stop: cfg.early_stop,
                },
            )?
        }
        Algorithm::Centralized => {
            let dual_radius = if problem.m() > 0 && problem.nu() == 0 {
                Some(prepare_dual_boxes(&problem, &g, &bound_config(cfg))?.boxes.min_radius())
            } else {
                None
            };
            centralized_subgradient(
                &problem,
                &CentralizedConfig {
                    rounds: cfg.rounds,
                    schedule: cfg.schedule,
                    dual_radius,
                    ..Default::default()
                },
            )?
        }
    };
    if let Some(path) = &cfg.out {
        emit_csv(&trace, path)?;
    }
    let last = trace.last().expect("at least one round").metrics.clone();
    let d = &trace.diagnostics;
    let summary = Summary {
        problem: problem.name().to_string(),
        algorithm: cfg.algorithm,
        rounds: trace.records.len(),
        delta_x: last.delta_x,
        delta_mu: last.delta_mu,
        delta_lambda: last.delta_lambda,
        feas_g: last.feas_g,
        feas_h: last.feas_h,
        dist_opt: last.dist_opt,
        worst_agent_dist: last.worst_agent_dist,
        y_err: last.y_err,
        conservation_residual: d.max_conservation_residual,
        dual_sum_residual: d.max_dual_sum_residual,
        relation_checks: d.relation_checks,
        dual_radii: d.dual_radii.clone(),
        wall_time: start.elapsed(),
        notes,
    };
    Ok(Experiment { trace, summary })
}

#[derive(Debug, Clone)]
pub struct ValidationOutcome {
    pub graph: ValidationReport,
    /// Penalty algorithm only.
    pub assumption6: Option<Assumption6Report>,
    /// Problems with the step-size schedule for the Lagrangian algorithm.
    pub schedule_error: Option<String>,
}

impl ValidationOutcome {
    pub fn is_ok(&self) -> bool {
        self.graph.is_ok()
            && self.schedule_error.is_none()
            && self.assumption6.as_ref().is_none_or(Assumption6Report::passes)
    }
}

impl fmt::Display for ValidationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.graph)?;
        if let Some(r) = &self.assumption6 {
            writeln!(f, "{r}")?;
        }
        if let Some(e) = &self.schedule_error {
            writeln!(f, "step sizes: {e}")?;
        }
        write!(f, "{}", if self.is_ok() { "valid" } else { "INVALID" })
    }
}

/// Graph assumptions and step-size conditions only; nothing is run.
pub fn validate(cfg: &ExperimentConfig) -> Result<ValidationOutcome> {
    let mut notes = Vec::new();
    let problem = prepare_problem(cfg, &mut notes)?;
    let g = build_graph(cfg, problem.agents())?;
    let horizon = cfg.rounds.max((g.agents() - 1) * g.period()) + g.period();
    let graph = validate_all(&g, horizon);
    let (assumption6, schedule_error) = match cfg.algorithm {
        Algorithm::Dppds => (Some(validate_assumption6(&cfg.schedule, cfg.rounds.max(10))?), None),
        _ => (
            None,
            cfg.schedule.require_standard_conditions().err().map(|e| e.to_string()),
        ),
    };
    Ok(ValidationOutcome {
        graph,
        assumption6,
        schedule_error,
    })
}

/// Reference solution of a named problem, formatted for the terminal.
pub fn oracle_report(choice: &ProblemChoice) -> Result<String> {
    let problem = load_problem(choice)?;
    let r = reference_solve(&problem, &ReferenceOptions::default())?;
    let mut out = format!(
        "problem  {}\nmethod   {:?}\nx_ref    {:?}\np_ref    {}\n",
        problem.name(),
        r.method,
        r.x,
        r.value
    );
    if let Some(mu) = &r.mu {
        out.push_str(&format!("mu_ref   {mu:?}\n"));
    }
    Ok(out)
}

pub fn parse_problem_choice(name: &str) -> Result<ProblemChoice> {
    match name {
        "num" => Ok(ProblemChoice::Num),
        "quadratic" => Ok(ProblemChoice::Quadratic),
        other => match other.strip_prefix("custom:") {
            Some(p) => Ok(ProblemChoice::Custom(PathBuf::from(p))),
            None => Err(Error::Config(vec![format!("unknown problem '{other}'")])),
        },
    }
}
