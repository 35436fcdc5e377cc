//! SCIP backend, driven through `pyscipopt` in a Python subprocess.
//!
//! The model is handed over as an LP file; SCIP solves the quadratic
//! variance row directly, so this is the backend for the MIQCP mode.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use serde::Deserialize;

use super::{finish_solution, write_lp, Solution, SolveStatus, SolverBackend, SolverConfig};
use crate::error::{Error, Result};
use crate::formulation::{ModelIR, VarKey};

const NAME: &str = "scip";
/// Overrides the Python interpreter used to run SCIP.
pub const PYTHON_ENV: &str = "AGRISC_PYTHON";

const DRIVER: &str = r#"
import json, sys
from pyscipopt import Model
path, out, limit, gap, seed, threads = sys.argv[1:7]
m = Model()
m.hideOutput()
m.readProblem(path)
m.setParam("limits/time", float(limit))
m.setParam("limits/gap", float(gap))
m.setParam("numerics/feastol", 1e-9)
if seed != "none":
    m.setParam("randomization/randomseedshift", int(seed) % 2147483647)
m.optimize()
status = m.getStatus()
res = {"status": status, "version": str(m.version()), "values": {}, "bound": None}
if m.getNSols() > 0:
    sol = m.getBestSol()
    res["values"] = {v.name: sol[v] for v in m.getVars()}
    res["bound"] = m.getDualbound()
with open(out, "w") as f:
    json.dump(res, f)
"#;

#[derive(Debug, Clone)]
pub struct ScipBackend {
    config: SolverConfig,
    python: String,
}

#[derive(Deserialize)]
struct DriverOutput {
    status: String,
    values: BTreeMap<String, f64>,
    bound: Option<f64>,
}

impl ScipBackend {
    pub fn new(config: SolverConfig) -> Self {
        let python = std::env::var(PYTHON_ENV).unwrap_or_else(|_| "python3".into());
        ScipBackend { config, python }
    }

    /// Whether the interpreter can import `pyscipopt`.
    pub fn is_available(&self) -> bool {
        self.probe().is_ok()
    }

    fn probe(&self) -> Result<String> {
        let out = Command::new(&self.python)
            .args([
                "-c",
                "import pyscipopt; print(pyscipopt.__version__, '(SCIP', str(pyscipopt.Model().version()) + ')')",
            ])
            .output()
            .map_err(|e| self.unavailable(e.to_string()))?;
        if !out.status.success() {
            return Err(self.unavailable(String::from_utf8_lossy(&out.stderr).trim().to_string()));
        }
        Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
    }

    fn unavailable(&self, why: String) -> Error {
        Error::Capability {
            backend: NAME.into(),
            reason: format!("pyscipopt is not importable by `{}`: {why}", self.python),
        }
    }
}

impl Default for ScipBackend {
    fn default() -> Self {
        Self::new(SolverConfig::default())
    }
}

fn scratch_dir() -> PathBuf {
    static COUNTER: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);
    let n = COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    std::env::temp_dir().join(format!("agrisc-scip-{}-{n}", std::process::id()))
}

impl SolverBackend for ScipBackend {
    fn name(&self) -> &str {
        NAME
    }

    fn version(&self) -> String {
        self.probe().unwrap_or_else(|_| "unavailable".into())
    }

    fn supports_quadratic(&self) -> bool {
        true
    }

    fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn config_mut(&mut self) -> &mut SolverConfig {
        &mut self.config
    }

    fn solve(&mut self, ir: &ModelIR) -> Result<Solution> {
        self.probe()?;
        let started = Instant::now();
        let dir = scratch_dir();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let model = dir.join("model.lp");
        let result = dir.join("result.json");
        std::fs::write(&model, write_lp(ir)).map_err(|e| Error::io(&model, e))?;

        let seed = self.config.seed.map_or("none".to_string(), |s| s.to_string());
        let threads = self.config.threads.unwrap_or(1).to_string();
        let out = Command::new(&self.python)
            .arg("-c")
            .arg(DRIVER)
            .arg(&model)
            .arg(&result)
            .arg(self.config.time_limit.max(0.0).to_string())
            .arg(self.config.rel_gap.to_string())
            .arg(seed)
            .arg(threads)
            .output()
            .map_err(|e| Error::io(&model, e))?;
        if !out.status.success() {
            let _ = std::fs::remove_dir_all(&dir);
            return Err(Error::Backend {
                backend: NAME.into(),
                message: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        let text = std::fs::read_to_string(&result).map_err(|e| Error::io(&result, e))?;
        let _ = std::fs::remove_dir_all(&dir);
        let parsed: DriverOutput = serde_json::from_str(&text).map_err(|e| Error::Backend {
            backend: NAME.into(),
            message: format!("bad driver output: {e}"),
        })?;

        let has_sol = !parsed.values.is_empty();
        let status = match parsed.status.as_str() {
            "optimal" | "gaplimit" => SolveStatus::Optimal,
            "infeasible" => SolveStatus::Infeasible,
            "timelimit" | "nodelimit" | "userinterrupt" | "sollimit" | "stallnodelimit"
            | "memlimit" | "unknown" => {
                if has_sol {
                    SolveStatus::FeasibleWithGap
                } else {
                    SolveStatus::TimeLimit
                }
            }
            other => {
                return Err(Error::Backend {
                    backend: NAME.into(),
                    message: format!("status {other}"),
                })
            }
        };
        if !has_sol {
            return Ok(Solution::without_values(status, NAME, started.elapsed()));
        }
        let mut raw = vec![0.0; ir.num_vars()];
        for (name, value) in &parsed.values {
            let key = VarKey::parse(name).ok_or_else(|| Error::Backend {
                backend: NAME.into(),
                message: format!("unknown variable `{name}` in solution"),
            })?;
            if let Some(id) = ir.var(&key) {
                raw[id] = *value;
            }
        }
        let bound = parsed.bound.unwrap_or(f64::NEG_INFINITY);
        Ok(finish_solution(ir, &raw, status, bound, NAME, started.elapsed()))
    }
}
