//! Backend abstraction, solutions, and model-file export.

mod file;
mod highs;
mod scip;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use file::{read_lp, read_mps, write_lp, write_mps, FileFormat, ModelFile};
pub use highs::{highs_read_dimensions, HighsBackend};
pub use scip::ScipBackend;

use crate::error::{Error, Result};
use crate::formulation::{Family, ModelIR, VarKey, VarKind};

/// Integrality tolerance applied when cleaning solver output.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Scaled feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-6;
pub const DEFAULT_REL_GAP: f64 = 1e-4;
pub const DEFAULT_TIME_LIMIT: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    /// Relative MIP gap at which the backend may stop.
    pub rel_gap: f64,
    pub seed: Option<u64>,
    /// Thread cap where the backend honours one.
    pub threads: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: DEFAULT_TIME_LIMIT,
            rel_gap: DEFAULT_REL_GAP,
            seed: Some(0),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped (time limit) with an incumbent whose gap is above target.
    FeasibleWithGap,
    Infeasible,
    /// Stopped on the time limit without any incumbent.
    TimeLimit,
    Error,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleWithGap)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleWithGap => "feasible-with-gap",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time-limit",
            SolveStatus::Error => "error",
        }
    }
}

/// Relative gap `(objective − bound) / max(|objective|, ε)`.
pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    if !objective.is_finite() || !bound.is_finite() {
        return f64::INFINITY;
    }
    ((objective - bound) / objective.abs().max(1e-10)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    #[serde(with = "keyed_values")]
    pub values: BTreeMap<VarKey, f64>,
    pub wall_time: f64,
    pub backend: String,
}

impl Solution {
    pub fn without_values(status: SolveStatus, backend: &str, wall_time: Duration) -> Self {
        Solution {
            status,
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::NAN,
            values: BTreeMap::new(),
            wall_time: wall_time.as_secs_f64(),
            backend: backend.to_string(),
        }
    }

    pub fn value(&self, key: &VarKey) -> Result<f64> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| Error::MissingValue(key.to_string()))
    }

    pub fn value_of(&self, family: Family, indices: &[usize]) -> Result<f64> {
        self.value(&VarKey::new(family, indices))
    }

    /// Values in the variable order of `ir`.
    pub fn dense(&self, ir: &ModelIR) -> Result<Vec<f64>> {
        ir.vars().iter().map(|v| self.value(&v.key)).collect()
    }
}

/// Rounds integral variables, clamps to declared bounds and keys the values.
/// The objective is recomputed from the cleaned values.
pub(crate) fn finish_solution(
    ir: &ModelIR,
    raw: &[f64],
    status: SolveStatus,
    bound: f64,
    backend: &str,
    wall_time: Duration,
) -> Solution {
    let mut values = BTreeMap::new();
    let mut dense = Vec::with_capacity(raw.len());
    for (var, &x) in ir.vars().iter().zip(raw) {
        let mut x = x.clamp(var.lower, var.upper);
        if var.kind != VarKind::Continuous {
            let r = x.round();
            if (x - r).abs() <= INTEGRALITY_TOL {
                x = r;
            }
        } else if x.abs() < 1e-12 {
            x = 0.0;
        }
        dense.push(x);
        values.insert(var.key, x);
    }
    let objective = ir.objective_value(&dense);
    let best_bound = if status == SolveStatus::Optimal && !bound.is_finite() {
        objective
    } else {
        bound.min(objective)
    };
    Solution {
        status,
        objective,
        best_bound,
        gap: relative_gap(objective, best_bound),
        values,
        wall_time: wall_time.as_secs_f64(),
        backend: backend.to_string(),
    }
}

/// A MILP/MIQCP solver. One solve runs at a time per backend value.
pub trait SolverBackend: Send {
    fn name(&self) -> &str;
    fn version(&self) -> String;
    fn supports_quadratic(&self) -> bool;
    fn config(&self) -> &SolverConfig;
    fn config_mut(&mut self) -> &mut SolverConfig;

    /// Solves `ir`. Infeasibility is reported through the status.
    fn solve(&mut self, ir: &ModelIR) -> Result<Solution>;

    /// Rejects models outside the backend's capabilities.
    fn check_capabilities(&self, ir: &ModelIR) -> Result<()> {
        if ir.quadratic.is_some() && !self.supports_quadratic() {
            return Err(Error::Capability {
                backend: self.name().to_string(),
                reason: "model has a quadratic constraint but the backend is linear-only".into(),
            });
        }
        Ok(())
    }
}

pub const BACKEND_NAMES: [&str; 2] = ["highs", "scip"];

/// Instantiates a backend by its CLI name.
pub fn backend_by_name(name: &str, config: SolverConfig) -> Result<Box<dyn SolverBackend>> {
    match name {
        "highs" => Ok(Box::new(HighsBackend::new(config))),
        "scip" => Ok(Box::new(ScipBackend::new(config))),
        other => Err(Error::Backend {
            backend: other.to_string(),
            message: format!("unknown backend; available: {}", BACKEND_NAMES.join(", ")),
        }),
    }
}

/// Writes `ir` to `destination` in the requested format.
pub fn export(ir: &ModelIR, format: FileFormat, destination: impl AsRef<Path>) -> Result<()> {
    let path = destination.as_ref();
    let text = match format {
        FileFormat::Lp => write_lp(ir),
        FileFormat::Mps => write_mps(ir),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Serializes the value map with `family(i,...)` string keys.
mod keyed_values {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::formulation::VarKey;

    pub fn serialize<S: Serializer>(map: &BTreeMap<VarKey, f64>, s: S) -> Result<S::Ok, S::Error> {
        let named: BTreeMap<String, f64> = map.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        named.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<VarKey, f64>, D::Error> {
        let named = BTreeMap::<String, f64>::deserialize(d)?;
        named
            .into_iter()
            .map(|(k, v)| {
                VarKey::parse(&k)
                    .map(|key| (key, v))
                    .ok_or_else(|| D::Error::custom(format!("bad variable name `{k}`")))
            })
            .collect()
    }
}
