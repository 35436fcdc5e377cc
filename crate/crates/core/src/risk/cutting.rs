//! The cutting-plane loop: solve the MILP without the variance row, check
//! the variance of the incumbent, add a cut, repeat.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{perspective_cut, perspective_cuts_per_week, plain_cut, variance_value, Cut, CutStyle, LossPoint};
use crate::error::{Error, Result};
use crate::formulation::{build_model, BuildOptions, ModelIR, ModelStats};
use crate::instance::Instance;
use crate::solver::{Solution, SolveStatus, SolverBackend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuttingOptions {
    pub max_iters: usize,
    /// Total wall-clock budget in seconds, shared by all solves.
    pub time_budget: f64,
    /// Absolute tolerance on `Var − cap`.
    pub tol: f64,
    pub style: CutStyle,
    /// Emit one row per week instead of one aggregated row.
    pub per_week: bool,
    pub build: BuildOptions,
}

impl Default for CuttingOptions {
    fn default() -> Self {
        CuttingOptions {
            max_iters: 50,
            time_budget: crate::solver::DEFAULT_TIME_LIMIT,
            tol: 1e-6,
            style: CutStyle::Perspective,
            per_week: false,
            build: BuildOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopStatus {
    /// The last incumbent satisfies the variance cap.
    VarianceFeasible,
    IterationLimit,
    TimeLimit,
    /// A MILP in the sequence has no feasible point.
    Infeasible,
}

impl LoopStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopStatus::VarianceFeasible => "variance-feasible",
            LoopStatus::IterationLimit => "iteration-limit",
            LoopStatus::TimeLimit => "time-limit",
            LoopStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub status: SolveStatus,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub variance: f64,
    /// Rows of cuts in the model when this iterate was solved.
    pub cut_rows: usize,
    pub wall_time: f64,
    pub point_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub status: LoopStatus,
    pub iterations: Vec<IterationRecord>,
    /// Every generated cut, the seed cut first.
    pub cuts: Vec<Cut>,
    /// Last MILP incumbent, feasible for the cap only when `status` says so.
    pub solution: Option<Solution>,
    pub variance: Option<f64>,
    pub wall_time: f64,
    pub stats: ModelStats,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.status == LoopStatus::VarianceFeasible
    }

    pub fn cut_rows(&self) -> usize {
        self.iterations.last().map_or(0, |r| r.cut_rows)
    }
}

/// One JSON record per line for each generated cut.
#[derive(Debug, Clone, Default)]
pub struct CutLog {
    text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub iteration: usize,
    pub style: CutStyle,
    pub point: String,
    pub loss_coefs: Vec<f64>,
    pub delta_coefs: Vec<f64>,
    pub constant: f64,
    pub violation: f64,
}

impl CutLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, cut: &Cut) {
        let rec = CutRecord {
            iteration: cut.iteration,
            style: cut.style,
            point: cut.point.digest(),
            loss_coefs: cut.loss_coefs.clone(),
            delta_coefs: cut.delta_coefs.clone(),
            constant: cut.constant,
            violation: cut.violation_at_generation(),
        };
        let line = serde_json::to_string(&rec).expect("cut record serializes");
        let _ = writeln!(self.text, "{line}");
    }

    pub fn from_cuts<'a>(cuts: impl IntoIterator<Item = &'a Cut>) -> Self {
        let mut log = Self::new();
        for c in cuts {
            log.push(c);
        }
        log
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn parse(text: &str) -> Result<Vec<CutRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(format!("cut log: {e}"))))
            .collect()
    }
}

/// The deterministic first point: every loss at its upper bound, δ = 1.
pub fn seed_point(inst: &Instance) -> LossPoint {
    let weeks = inst.num_weeks();
    let scenarios = inst.num_scenarios();
    let mut loss = Vec::with_capacity(weeks * scenarios);
    for w in 0..weeks {
        loss.extend(std::iter::repeat_n(inst.loss_bound(w), scenarios));
    }
    LossPoint {
        weeks,
        scenarios,
        loss,
        delta: vec![1.0; weeks],
        iteration: 0,
    }
}

fn cuts_at(point: &LossPoint, rho: &[f64], weeks: usize, cap: f64, opts: &CuttingOptions) -> Result<Vec<Cut>> {
    match opts.style {
        CutStyle::Plain => Ok(vec![plain_cut(point, rho, weeks, cap)?]),
        CutStyle::Perspective if opts.per_week => perspective_cuts_per_week(point, rho, weeks, cap),
        CutStyle::Perspective => Ok(vec![perspective_cut(point, rho, weeks, cap)?]),
    }
}

const COEF_EPS: f64 = 1e-12;

fn add_cuts(ir: &mut ModelIR, cuts: &[Cut]) -> usize {
    let mut added = 0;
    for cut in cuts {
        let mut row = cut.to_row(ir);
        // rounding leaves ~1e-16 coefficients where the gradient is zero
        row.terms.retain(|(_, c)| c.abs() > COEF_EPS);
        // an empty row is the constant check `0 ≤ −constant`
        if row.terms.is_empty() && row.rhs >= 0.0 {
            continue;
        }
        ir.rows.push(row);
        added += 1;
    }
    added
}

/// Solves the instance by iterated MILPs with variance cuts.
pub fn cutting_plane_solve(
    inst: &Instance,
    backend: &mut dyn SolverBackend,
    opts: &CuttingOptions,
) -> Result<RunReport> {
    let started = Instant::now();
    let weeks = inst.num_weeks();
    let scenarios = inst.num_scenarios();
    let rho = inst.probabilities();
    let cap = inst.risk.variance_cap;

    let build = BuildOptions {
        include_variance: false,
        ..opts.build
    };
    let mut ir = build_model(inst, build);
    let stats = ir.stats();

    let seed_cuts = cuts_at(&seed_point(inst), &rho, weeks, cap, opts)?;
    let mut cut_rows = add_cuts(&mut ir, &seed_cuts);
    let mut cuts = seed_cuts;

    let original_limit = backend.config().time_limit;
    let mut iterations = Vec::new();
    let mut solution = None;
    let mut variance = None;
    let mut status = LoopStatus::IterationLimit;

    for k in 1..=opts.max_iters.max(1) {
        // keep a margin for model assembly and solver overshoot
        let reserve = (0.02 * opts.time_budget).min(2.0);
        let remaining = opts.time_budget - reserve - started.elapsed().as_secs_f64();
        if remaining <= 0.0 {
            status = LoopStatus::TimeLimit;
            break;
        }
        backend.config_mut().time_limit = remaining.min(original_limit);
        let solved = backend.solve(&ir);
        backend.config_mut().time_limit = original_limit;
        let sol = solved.map_err(|e| Error::Iteration {
            iteration: k,
            source: Box::new(e),
        })?;

        if !sol.status.has_solution() {
            iterations.push(IterationRecord {
                iteration: k,
                status: sol.status,
                objective: f64::NAN,
                bound: f64::NAN,
                gap: f64::NAN,
                variance: f64::NAN,
                cut_rows,
                wall_time: sol.wall_time,
                point_digest: String::new(),
            });
            status = match sol.status {
                SolveStatus::Infeasible => LoopStatus::Infeasible,
                SolveStatus::TimeLimit => LoopStatus::TimeLimit,
                other => {
                    return Err(Error::Iteration {
                        iteration: k,
                        source: Box::new(Error::UnexpectedStatus(other)),
                    })
                }
            };
            solution = None;
            variance = None;
            break;
        }

        let point = LossPoint::from_solution(&sol, weeks, scenarios)
            .map_err(|e| Error::Iteration {
                iteration: k,
                source: Box::new(e),
            })?
            .with_iteration(k);
        let var = variance_value(&point, &rho, weeks)?;
        iterations.push(IterationRecord {
            iteration: k,
            status: sol.status,
            objective: sol.objective,
            bound: sol.best_bound,
            gap: sol.gap,
            variance: var,
            cut_rows,
            wall_time: sol.wall_time,
            point_digest: point.digest(),
        });
        solution = Some(sol);
        variance = Some(var);

        if var <= cap + opts.tol {
            status = LoopStatus::VarianceFeasible;
            break;
        }
        if k == opts.max_iters.max(1) {
            status = LoopStatus::IterationLimit;
            break;
        }
        let new_cuts = cuts_at(&point, &rho, weeks, cap, opts)?;
        cut_rows += add_cuts(&mut ir, &new_cuts);
        cuts.extend(new_cuts);
    }

    Ok(RunReport {
        status,
        iterations,
        cuts,
        solution,
        variance,
        wall_time: started.elapsed().as_secs_f64(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_point_sits_at_the_loss_bound() {
        let inst = Instance::case_study();
        let p = seed_point(&inst);
        assert_eq!(p.loss.len(), 6);
        assert!((p.at(0, 2) - 17.5).abs() < 1e-12);
        assert_eq!(p.delta, vec![1.0, 1.0]);
    }

    #[test]
    fn seed_cut_is_the_constant_cap() {
        let inst = Instance::case_study();
        let rho = inst.probabilities();
        let cut = perspective_cut(&seed_point(&inst), &rho, 2, 25.0).unwrap();
        assert!(cut.loss_coefs.iter().all(|c| c.abs() < 1e-12));
        assert!((cut.constant + 25.0).abs() < 1e-12);
    }

    #[test]
    fn cut_log_round_trips() {
        let inst = Instance::case_study();
        let rho = inst.probabilities();
        let p = LossPoint::new(2, 3, vec![5.0, 0.0, 5.0, 0.0, 0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let cut = perspective_cut(&p.with_iteration(3), &rho, 2, 1.0).unwrap();
        let log = CutLog::from_cuts([&cut]);
        let recs = CutLog::parse(log.as_str()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].iteration, 3);
        assert_eq!(recs[0].loss_coefs, cut.loss_coefs);
        assert_eq!(recs[0].constant, cut.constant);
    }
}
