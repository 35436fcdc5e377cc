//! HiGHS backend over the C API.

use std::ffi::{c_void, CStr, CString};
use std::time::Instant;

use highs_sys::*;

use super::{finish_solution, Solution, SolveStatus, SolverBackend, SolverConfig};
use crate::error::{Error, Result};
use crate::formulation::{ModelIR, Sense, VarKind};

const NAME: &str = "highs";

/// Linear-only MILP backend.
#[derive(Debug, Clone)]
pub struct HighsBackend {
    config: SolverConfig,
}

impl HighsBackend {
    pub fn new(config: SolverConfig) -> Self {
        HighsBackend { config }
    }
}

impl Default for HighsBackend {
    fn default() -> Self {
        Self::new(SolverConfig::default())
    }
}

/// Owned `Highs` handle.
struct Handle(*mut c_void);

impl Handle {
    fn new() -> Self {
        // SAFETY: Highs_create has no preconditions and returns an owned handle.
        Handle(unsafe { Highs_create() })
    }

    fn check(&self, status: HighsInt, what: &str) -> Result<()> {
        if status == STATUS_ERROR {
            Err(Error::Backend {
                backend: NAME.into(),
                message: format!("{what} failed"),
            })
        } else {
            Ok(())
        }
    }

    fn set_bool(&self, option: &str, value: bool) -> Result<()> {
        let name = CString::new(option).expect("option name");
        // SAFETY: valid handle and NUL-terminated option name.
        let st = unsafe { Highs_setBoolOptionValue(self.0, name.as_ptr(), HighsInt::from(value)) };
        self.check(st, option)
    }

    fn set_int(&self, option: &str, value: HighsInt) -> Result<()> {
        let name = CString::new(option).expect("option name");
        // SAFETY: as above.
        let st = unsafe { Highs_setIntOptionValue(self.0, name.as_ptr(), value) };
        self.check(st, option)
    }

    fn set_double(&self, option: &str, value: f64) -> Result<()> {
        let name = CString::new(option).expect("option name");
        // SAFETY: as above.
        let st = unsafe { Highs_setDoubleOptionValue(self.0, name.as_ptr(), value) };
        self.check(st, option)
    }

    fn double_info(&self, info: &str) -> Option<f64> {
        let name = CString::new(info).expect("info name");
        let mut value = 0.0;
        // SAFETY: valid handle, NUL-terminated name, valid out pointer.
        let st = unsafe { Highs_getDoubleInfoValue(self.0, name.as_ptr(), &mut value) };
        (st == STATUS_OK).then_some(value)
    }

    fn int_info(&self, info: &str) -> Option<HighsInt> {
        let name = CString::new(info).expect("info name");
        let mut value: HighsInt = 0;
        // SAFETY: as above.
        let st = unsafe { Highs_getIntInfoValue(self.0, name.as_ptr(), &mut value) };
        (st == STATUS_OK).then_some(value)
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        // SAFETY: the handle came from Highs_create and is dropped once.
        unsafe { Highs_destroy(self.0) }
    }
}

/// Column-wise sparse matrix plus row bounds.
struct Csc {
    start: Vec<HighsInt>,
    index: Vec<HighsInt>,
    value: Vec<f64>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
}

fn to_csc(ir: &ModelIR) -> Csc {
    let n = ir.num_vars();
    let mut cols: Vec<Vec<(HighsInt, f64)>> = vec![Vec::new(); n];
    let mut row_lower = Vec::with_capacity(ir.rows.len());
    let mut row_upper = Vec::with_capacity(ir.rows.len());
    for (r, row) in ir.rows.iter().enumerate() {
        for &(v, c) in &row.terms {
            if c != 0.0 {
                cols[v].push((r as HighsInt, c));
            }
        }
        let (lo, hi) = match row.sense {
            Sense::Le => (f64::NEG_INFINITY, row.rhs),
            Sense::Ge => (row.rhs, f64::INFINITY),
            Sense::Eq => (row.rhs, row.rhs),
        };
        row_lower.push(lo);
        row_upper.push(hi);
    }
    let mut start = Vec::with_capacity(n + 1);
    let mut index = Vec::new();
    let mut value = Vec::new();
    for col in &mut cols {
        start.push(index.len() as HighsInt);
        // duplicate entries of one variable in a row are summed
        col.sort_by_key(|&(r, _)| r);
        let mut last: Option<HighsInt> = None;
        for &(r, c) in col.iter() {
            if last == Some(r) {
                *value.last_mut().expect("entry") += c;
            } else {
                index.push(r);
                value.push(c);
                last = Some(r);
            }
        }
    }
    start.push(index.len() as HighsInt);
    Csc {
        start,
        index,
        value,
        row_lower,
        row_upper,
    }
}

impl SolverBackend for HighsBackend {
    fn name(&self) -> &str {
        NAME
    }

    fn version(&self) -> String {
        // SAFETY: Highs_version returns a static NUL-terminated string.
        unsafe { CStr::from_ptr(Highs_version()) }
            .to_string_lossy()
            .into_owned()
    }

    fn supports_quadratic(&self) -> bool {
        false
    }

    fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn config_mut(&mut self) -> &mut SolverConfig {
        &mut self.config
    }

    fn solve(&mut self, ir: &ModelIR) -> Result<Solution> {
        self.check_capabilities(ir)?;
        let started = Instant::now();
        let h = Handle::new();
        h.set_bool("output_flag", false)?;
        h.set_double("time_limit", self.config.time_limit.max(0.0))?;
        h.set_double("mip_rel_gap", self.config.rel_gap)?;
        h.set_double("mip_feasibility_tolerance", 1e-7)?;
        h.set_double("primal_feasibility_tolerance", 1e-8)?;
        if let Some(seed) = self.config.seed {
            h.set_int("random_seed", (seed % i32::MAX as u64) as HighsInt)?;
        }
        if let Some(threads) = self.config.threads {
            h.set_int("threads", threads as HighsInt)?;
        }

        let n = ir.num_vars();
        let m = ir.rows.len();
        let mut cost = vec![0.0; n];
        for &(v, c) in &ir.objective {
            cost[v] += c;
        }
        let lower: Vec<f64> = ir.vars().iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = ir.vars().iter().map(|v| v.upper).collect();
        let csc = to_csc(ir);
        let integrality: Vec<HighsInt> = ir
            .vars()
            .iter()
            .map(|v| match v.kind {
                VarKind::Continuous => 0,
                _ => 1,
            })
            .collect();
        let is_mip = ir.has_integers();

        // SAFETY: every array has the length the C API expects for
        // `n` columns, `m` rows and `csc.index.len()` nonzeros.
        let st = unsafe {
            if is_mip {
                Highs_passMip(
                    h.0,
                    n as HighsInt,
                    m as HighsInt,
                    csc.index.len() as HighsInt,
                    MATRIX_FORMAT_COLUMN_WISE,
                    OBJECTIVE_SENSE_MINIMIZE,
                    ir.objective_constant,
                    cost.as_ptr(),
                    lower.as_ptr(),
                    upper.as_ptr(),
                    csc.row_lower.as_ptr(),
                    csc.row_upper.as_ptr(),
                    csc.start.as_ptr(),
                    csc.index.as_ptr(),
                    csc.value.as_ptr(),
                    integrality.as_ptr(),
                )
            } else {
                Highs_passLp(
                    h.0,
                    n as HighsInt,
                    m as HighsInt,
                    csc.index.len() as HighsInt,
                    MATRIX_FORMAT_COLUMN_WISE,
                    OBJECTIVE_SENSE_MINIMIZE,
                    ir.objective_constant,
                    cost.as_ptr(),
                    lower.as_ptr(),
                    upper.as_ptr(),
                    csc.row_lower.as_ptr(),
                    csc.row_upper.as_ptr(),
                    csc.start.as_ptr(),
                    csc.index.as_ptr(),
                    csc.value.as_ptr(),
                )
            }
        };
        h.check(st, "passing the model")?;

        // SAFETY: model loaded into a valid handle.
        let run = unsafe { Highs_run(h.0) };
        h.check(run, "Highs_run")?;
        // SAFETY: valid handle.
        let model_status = unsafe { Highs_getModelStatus(h.0) };
        let has_primal = h.int_info("primal_solution_status") == Some(SOLUTION_STATUS_FEASIBLE);

        let status = match model_status {
            MODEL_STATUS_OPTIMAL | MODEL_STATUS_MODEL_EMPTY => SolveStatus::Optimal,
            MODEL_STATUS_INFEASIBLE => SolveStatus::Infeasible,
            MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE if !has_primal => SolveStatus::Infeasible,
            MODEL_STATUS_REACHED_TIME_LIMIT
            | MODEL_STATUS_REACHED_ITERATION_LIMIT
            | MODEL_STATUS_REACHED_INTERRUPT
            | MODEL_STATUS_REACHED_SOLUTION_LIMIT
            | MODEL_STATUS_UNKNOWN => {
                if has_primal {
                    SolveStatus::FeasibleWithGap
                } else {
                    SolveStatus::TimeLimit
                }
            }
            other => {
                return Err(Error::Backend {
                    backend: NAME.into(),
                    message: format!("model status {other}"),
                })
            }
        };
        if !status.has_solution() {
            return Ok(Solution::without_values(status, NAME, started.elapsed()));
        }

        let mut col_value = vec![0.0; n];
        let mut col_dual = vec![0.0; n];
        let mut row_value = vec![0.0; m];
        let mut row_dual = vec![0.0; m];
        // SAFETY: buffers sized to the loaded model.
        let st = unsafe {
            Highs_getSolution(
                h.0,
                col_value.as_mut_ptr(),
                col_dual.as_mut_ptr(),
                row_value.as_mut_ptr(),
                row_dual.as_mut_ptr(),
            )
        };
        h.check(st, "Highs_getSolution")?;
        let bound = if is_mip {
            h.double_info("mip_dual_bound").unwrap_or(f64::NEG_INFINITY)
        } else {
            f64::INFINITY
        };
        Ok(finish_solution(ir, &col_value, status, bound, NAME, started.elapsed()))
    }
}

/// Reads an LP or MPS file with HiGHS' own parser and returns
/// `(columns, rows)`; used to confirm exported files load elsewhere.
pub fn highs_read_dimensions(path: &std::path::Path) -> Result<(usize, usize)> {
    let h = Handle::new();
    h.set_bool("output_flag", false)?;
    let cpath = CString::new(path.to_string_lossy().as_bytes()).map_err(|e| Error::Backend {
        backend: NAME.into(),
        message: e.to_string(),
    })?;
    // SAFETY: valid handle and NUL-terminated path.
    let st = unsafe { Highs_readModel(h.0, cpath.as_ptr()) };
    h.check(st, "Highs_readModel")?;
    // SAFETY: valid handle.
    let dims = unsafe { (Highs_getNumCol(h.0), Highs_getNumRow(h.0)) };
    Ok((dims.0 as usize, dims.1 as usize))
}
