//! End-to-end runs: build, solve in one of the three modes, verify.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{build_model, BuildOptions, Family};
use crate::instance::Instance;
use crate::oracle::{check_solution_with, VerificationReport, DEFAULT_CHECK_TOL};
use crate::risk::{cutting_plane_solve, CutLog, CutStyle, CuttingOptions, LoopStatus, RunReport};
use crate::solver::{Solution, SolveStatus, SolverBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// The quadratic model handed to a quadratic-capable backend.
    Miqcp,
    Perspective,
    PlainCut,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Miqcp => "miqcp",
            Mode::Perspective => "perspective",
            Mode::PlainCut => "plain-cut",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "miqcp" => Ok(Mode::Miqcp),
            "perspective" => Ok(Mode::Perspective),
            "plain-cut" => Ok(Mode::PlainCut),
            other => Err(format!("unknown mode `{other}` (expected miqcp, perspective or plain-cut)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Wall-clock budget for the whole mode, in seconds.
    pub time_limit: f64,
    pub max_cuts: usize,
    pub cut_tol: f64,
    pub check_tol: f64,
    pub per_week_cuts: bool,
    pub nonanticipative: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            time_limit: crate::solver::DEFAULT_TIME_LIMIT,
            max_cuts: 50,
            cut_tol: 1e-6,
            check_tol: DEFAULT_CHECK_TOL,
            per_week_cuts: false,
            nonanticipative: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Variance-feasible incumbent that passed verification.
    Verified,
    /// The incumbent failed the independent check.
    VerificationFailed,
    /// Budget ran out before a variance-feasible incumbent was found.
    BudgetExhausted,
    Infeasible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeRun {
    pub mode: Mode,
    pub backend: String,
    pub backend_version: String,
    pub solve_status: String,
    pub outcome: Outcome,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub variance: Option<f64>,
    /// Week-major `Loss` values of the incumbent.
    pub loss: Vec<f64>,
    pub cut_rows: usize,
    pub iterations: usize,
    pub wall_time: f64,
    pub verification: Option<VerificationReport>,
    pub cutting: Option<RunReport>,
    #[serde(skip)]
    pub solution: Option<Solution>,
}

impl ModeRun {
    pub fn total_loss(&self) -> f64 {
        self.loss.iter().sum()
    }

    pub fn cut_log(&self) -> CutLog {
        self.cutting.as_ref().map_or_else(CutLog::new, |r| CutLog::from_cuts(&r.cuts))
    }
}

fn loss_values(sol: &Solution, inst: &Instance) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for w in 0..inst.num_weeks() {
        for s in 0..inst.num_scenarios() {
            out.push(sol.value_of(Family::Loss, &[w, s])?);
        }
    }
    Ok(out)
}

/// Runs one mode end to end and verifies the incumbent.
pub fn run_mode(
    inst: &Instance,
    mode: Mode,
    backend: &mut dyn SolverBackend,
    opts: &RunOptions,
) -> Result<ModeRun> {
    let build = BuildOptions {
        include_variance: true,
        nonanticipative_week1: opts.nonanticipative,
    };
    let saved_limit = backend.config().time_limit;
    let mut run = ModeRun {
        mode,
        backend: backend.name().to_string(),
        backend_version: backend.version(),
        solve_status: String::new(),
        outcome: Outcome::BudgetExhausted,
        objective: None,
        bound: None,
        gap: None,
        variance: None,
        loss: Vec::new(),
        cut_rows: 0,
        iterations: 0,
        wall_time: 0.0,
        verification: None,
        cutting: None,
        solution: None,
    };

    let (solution, feasible_for_cap) = match mode {
        Mode::Miqcp => {
            let ir = build_model(inst, build);
            backend.config_mut().time_limit = opts.time_limit;
            let sol = backend.solve(&ir);
            backend.config_mut().time_limit = saved_limit;
            let sol = sol?;
            run.solve_status = sol.status.as_str().to_string();
            run.iterations = 1;
            run.wall_time = sol.wall_time;
            if sol.status == SolveStatus::Infeasible {
                run.outcome = Outcome::Infeasible;
            }
            (sol.status.has_solution().then_some(sol), true)
        }
        Mode::Perspective | Mode::PlainCut => {
            let copts = CuttingOptions {
                max_iters: opts.max_cuts,
                time_budget: opts.time_limit,
                tol: opts.cut_tol,
                style: if mode == Mode::Perspective { CutStyle::Perspective } else { CutStyle::Plain },
                per_week: opts.per_week_cuts,
                build,
            };
            let report = cutting_plane_solve(inst, backend, &copts)?;
            run.solve_status = report.status.as_str().to_string();
            run.iterations = report.iterations.len();
            run.cut_rows = report.cut_rows();
            run.wall_time = report.wall_time;
            if report.status == LoopStatus::Infeasible {
                run.outcome = Outcome::Infeasible;
            }
            let ok = report.converged();
            let sol = report.solution.clone();
            run.cutting = Some(report);
            (sol, ok)
        }
    };

    if let Some(sol) = &solution {
        run.objective = Some(sol.objective);
        run.bound = Some(sol.best_bound);
        run.gap = Some(sol.gap);
        run.loss = loss_values(sol, inst)?;
        let check = check_solution_with(inst, sol, opts.check_tol, opts.nonanticipative)?;
        run.variance = Some(check.variance);
        if feasible_for_cap {
            run.outcome = if check.pass { Outcome::Verified } else { Outcome::VerificationFailed };
        }
        run.verification = Some(check);
    }
    run.solution = solution;
    Ok(run)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| format!("{v}"))
}

/// Flat table, one line per run, with per-week/scenario losses.
pub fn results_csv(runs: &[ModeRun], inst: &Instance) -> String {
    let mut out = String::from("mode,backend,status,outcome,objective,bound,gap,variance,total_loss,cut_rows,iterations,wall_time");
    for w in 0..inst.num_weeks() {
        for s in 0..inst.num_scenarios() {
            let _ = write!(out, ",loss_w{}_s{}", w + 1, s + 1);
        }
    }
    out.push('\n');
    for r in runs {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            r.mode.as_str(),
            r.backend,
            r.solve_status,
            outcome_str(r.outcome),
            opt(r.objective),
            opt(r.bound),
            opt(r.gap),
            opt(r.variance),
            r.total_loss(),
            r.cut_rows,
            r.iterations,
            r.wall_time
        );
        let cells = inst.num_weeks() * inst.num_scenarios();
        for n in 0..cells {
            let _ = write!(out, ",{}", r.loss.get(n).map_or("NA".into(), |v| v.to_string()));
        }
        out.push('\n');
    }
    out
}

pub fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Verified => "verified",
        Outcome::VerificationFailed => "verification-failed",
        Outcome::BudgetExhausted => "budget-exhausted",
        Outcome::Infeasible => "infeasible",
    }
}

/// Structured text report of one or more runs. Wall times are the only
/// solver-nondeterministic fields and are marked as such.
pub fn report_text(runs: &[ModeRun]) -> String {
    let mut out = String::new();
    for r in runs {
        let _ = writeln!(out, "[run {}]", r.mode.as_str());
        let _ = writeln!(out, "backend: {} {}", r.backend, r.backend_version);
        let _ = writeln!(out, "status: {}", r.solve_status);
        let _ = writeln!(out, "outcome: {}", outcome_str(r.outcome));
        let _ = writeln!(out, "objective: {}", opt(r.objective));
        let _ = writeln!(out, "bound: {}", opt(r.bound));
        let _ = writeln!(out, "gap: {}", opt(r.gap));
        let _ = writeln!(out, "variance: {}", opt(r.variance));
        let _ = writeln!(out, "total loss: {}", r.total_loss());
        let _ = writeln!(out, "iterations: {}", r.iterations);
        let _ = writeln!(out, "cut rows: {}", r.cut_rows);
        let _ = writeln!(out, "wall time [nondeterministic]: {:.3} s", r.wall_time);
        if let Some(rep) = &r.cutting {
            out.push_str("iterations:\n");
            for it in &rep.iterations {
                let _ = writeln!(
                    out,
                    "  k={} status={} objective={} bound={} variance={} cut_rows={} point={}",
                    it.iteration,
                    it.status.as_str(),
                    it.objective,
                    it.bound,
                    it.variance,
                    it.cut_rows,
                    it.point_digest
                );
            }
        }
        match &r.verification {
            Some(v) => {
                out.push_str("verification:\n");
                for line in v.to_text().lines() {
                    let _ = writeln!(out, "  {line}");
                }
            }
            None => out.push_str("verification: no incumbent\n"),
        }
        out.push('\n');
    }
    out
}

/// Comparison of two runs at equal budget: `first` should not be worse.
pub fn compare(first: &ModeRun, second: &ModeRun) -> Result<String> {
    let (Some(a), Some(b)) = (first.objective, second.objective) else {
        return Err(Error::MissingValue("objective of a compared run".into()));
    };
    let diff = (b - a) / b.abs().max(1e-10);
    Ok(format!(
        "{} objective {a} vs {} objective {b}: {:.2}% {}\n",
        first.mode.as_str(),
        second.mode.as_str(),
        diff.abs() * 100.0,
        if a <= b + 1e-6 { "lower or equal" } else { "higher" }
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_parse() {
        assert_eq!("plain-cut".parse::<Mode>(), Ok(Mode::PlainCut));
        assert!("direct".parse::<Mode>().is_err());
        for m in [Mode::Miqcp, Mode::Perspective, Mode::PlainCut] {
            assert_eq!(m.as_str().parse::<Mode>(), Ok(m));
        }
    }
}
