//! Static problem data: network sets, cost and capacity parameters, risk
//! settings and the demand scenarios.
//!
//! Instances are read from a TOML document with the top-level sections
//! `sets`, `plants`, `warehouses`, `markets`, `modes`, `risk` and
//! `scenarios`. Every constructor path runs [`Instance::validate`], so an
//! `Instance` obtained through this module always satisfies its invariants.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CASE_STUDY_DOC: &str = include_str!("../data/case_study.toml");

/// Days per planning week.
pub const DAYS_PER_WEEK: usize = 7;

/// Tolerance on the scenario probability sum.
const PROBABILITY_SUM_TOL: f64 = 1e-9;

/// Horizon and batch timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sets {
    /// Number of days |T|.
    pub days: usize,
    /// Number of weeks |T'|.
    pub weeks: usize,
    /// Days a batch occupies the plant (L).
    pub batch_duration: usize,
    /// Days a cleaning occupies the plant (C).
    pub cleaning_duration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plant {
    pub name: String,
    /// Charged for every day the plant is active.
    pub fixed_cost: f64,
    pub variable_cost: f64,
    pub holding_cost: f64,
    pub normal_capacity: f64,
    pub max_capacity: f64,
    pub initial_inventory: f64,
    /// Batches produced before a cleaning is required (B).
    pub batches_before_cleaning: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Warehouse {
    pub name: String,
    pub fixed_cost: f64,
    pub holding_cost: f64,
    pub max_capacity: f64,
    pub initial_storage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Market {
    pub name: String,
}

/// A transportation mode. Shipping cost is per vehicle, not per mass unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub name: String,
    pub shipping_cost: f64,
    pub min_capacity: f64,
    pub max_capacity: f64,
    /// Vehicles available per link and day (U_max).
    pub max_vehicles: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskParams {
    /// Penalty per unit of unmet demand, one entry per week.
    pub loss_cost: Vec<f64>,
    /// Fraction of expected weekly demand that may go unmet (e^max).
    pub max_loss_fraction: f64,
    /// Number of weeks allowed to carry loss (n).
    pub max_loss_weeks: usize,
    /// Cap on the week-averaged loss variance (l). May be `inf`.
    pub variance_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandScenario {
    pub probability: f64,
    /// `demand[market][week]` in mass units.
    pub demand: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub sets: Sets,
    pub plants: Vec<Plant>,
    pub warehouses: Vec<Warehouse>,
    pub markets: Vec<Market>,
    pub modes: Vec<Mode>,
    pub risk: RiskParams,
    pub scenarios: Vec<DemandScenario>,
}

impl Instance {
    /// Parses and validates an instance document.
    pub fn from_toml_str(doc: &str) -> Result<Self> {
        let inst: Instance = toml::from_str(doc).map_err(|e| Error::Parse(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&doc)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("instance serializes to TOML")
    }

    /// The two-plant case study with its default risk settings.
    pub fn case_study() -> Self {
        Self::from_toml_str(CASE_STUDY_DOC).expect("bundled case study is valid")
    }

    /// The raw text of the bundled case-study document.
    pub fn case_study_document() -> &'static str {
        CASE_STUDY_DOC
    }

    pub fn num_days(&self) -> usize {
        self.sets.days
    }

    pub fn num_weeks(&self) -> usize {
        self.sets.weeks
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.probability).collect()
    }

    pub fn demand(&self, market: usize, week: usize, scenario: usize) -> f64 {
        self.scenarios[scenario].demand[market][week]
    }

    /// Probability-weighted total demand of `week`, summed over markets.
    pub fn expected_weekly_demand(&self, week: usize) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.probability * s.demand.iter().map(|row| row[week]).sum::<f64>())
            .sum()
    }

    /// Upper bound on weekly loss when the week's loss indicator is on.
    pub fn loss_bound(&self, week: usize) -> f64 {
        self.risk.max_loss_fraction * self.expected_weekly_demand(week)
    }

    /// Checks every structural and numeric invariant, reporting the first
    /// violation with the offending entity.
    pub fn validate(&self) -> Result<()> {
        let sets = &self.sets;
        if sets.weeks == 0 {
            return Err(Error::invalid("sets", "at least one week is required"));
        }
        if sets.days != DAYS_PER_WEEK * sets.weeks {
            return Err(Error::invalid(
                "sets",
                format!(
                    "|T| must equal 7·|T'| (got {} days for {} weeks)",
                    sets.days, sets.weeks
                ),
            ));
        }
        if sets.batch_duration < 1 {
            return Err(Error::invalid("sets", "batch duration L must be ≥ 1"));
        }
        if sets.cleaning_duration < 1 {
            return Err(Error::invalid("sets", "cleaning duration C must be ≥ 1"));
        }
        for (label, empty) in [
            ("plants", self.plants.is_empty()),
            ("warehouses", self.warehouses.is_empty()),
            ("markets", self.markets.is_empty()),
            ("modes", self.modes.is_empty()),
            ("scenarios", self.scenarios.is_empty()),
        ] {
            if empty {
                return Err(Error::invalid(label, "set must not be empty"));
            }
        }

        for p in &self.plants {
            let entity = format!("plant `{}`", p.name);
            nonneg(&entity, "fixed_cost", p.fixed_cost)?;
            nonneg(&entity, "variable_cost", p.variable_cost)?;
            nonneg(&entity, "holding_cost", p.holding_cost)?;
            nonneg(&entity, "normal_capacity", p.normal_capacity)?;
            nonneg(&entity, "max_capacity", p.max_capacity)?;
            nonneg(&entity, "initial_inventory", p.initial_inventory)?;
            if p.normal_capacity > p.max_capacity {
                return Err(Error::invalid(
                    entity,
                    "normal batch capacity exceeds maximum batch capacity",
                ));
            }
            if p.batches_before_cleaning < 1 {
                return Err(Error::invalid(entity, "batches before cleaning B must be ≥ 1"));
            }
        }
        for w in &self.warehouses {
            let entity = format!("warehouse `{}`", w.name);
            nonneg(&entity, "fixed_cost", w.fixed_cost)?;
            nonneg(&entity, "holding_cost", w.holding_cost)?;
            nonneg(&entity, "max_capacity", w.max_capacity)?;
            nonneg(&entity, "initial_storage", w.initial_storage)?;
            if w.initial_storage > w.max_capacity {
                return Err(Error::invalid(entity, "initial storage exceeds capacity"));
            }
        }
        for m in &self.modes {
            let entity = format!("mode `{}`", m.name);
            nonneg(&entity, "shipping_cost", m.shipping_cost)?;
            nonneg(&entity, "min_capacity", m.min_capacity)?;
            nonneg(&entity, "max_capacity", m.max_capacity)?;
            if m.min_capacity > m.max_capacity {
                return Err(Error::invalid(
                    entity,
                    "minimum vehicle capacity exceeds maximum vehicle capacity",
                ));
            }
        }

        let risk = &self.risk;
        if risk.loss_cost.len() != sets.weeks {
            return Err(Error::invalid(
                "risk",
                format!(
                    "loss_cost has {} entries, expected one per week ({})",
                    risk.loss_cost.len(),
                    sets.weeks
                ),
            ));
        }
        for &c in &risk.loss_cost {
            nonneg("risk", "loss_cost", c)?;
        }
        nonneg("risk", "max_loss_fraction", risk.max_loss_fraction)?;
        if risk.max_loss_weeks > sets.weeks {
            return Err(Error::invalid("risk", "max_loss_weeks n must not exceed |T'|"));
        }
        if risk.variance_cap.is_nan() || risk.variance_cap < 0.0 {
            return Err(Error::invalid("risk", "variance cap l must be ≥ 0"));
        }

        let mut total = 0.0;
        for (s, sc) in self.scenarios.iter().enumerate() {
            let entity = format!("scenario {}", s + 1);
            if !(sc.probability.is_finite() && sc.probability > 0.0) {
                return Err(Error::invalid(entity, "probability must be > 0"));
            }
            total += sc.probability;
            if sc.demand.len() != self.markets.len() {
                return Err(Error::invalid(
                    entity,
                    format!(
                        "demand table has {} market rows, expected {}",
                        sc.demand.len(),
                        self.markets.len()
                    ),
                ));
            }
            for (k, row) in sc.demand.iter().enumerate() {
                if row.len() != sets.weeks {
                    return Err(Error::invalid(
                        entity,
                        format!(
                            "demand row for market {} has {} weeks, expected {}",
                            k + 1,
                            row.len(),
                            sets.weeks
                        ),
                    ));
                }
                for &d in row {
                    nonneg(&entity, "demand", d)?;
                }
            }
        }
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::invalid(
                "scenarios",
                format!("probabilities do not sum to 1 (sum = {total})"),
            ));
        }
        Ok(())
    }
}

fn nonneg(entity: &str, field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            entity,
            format!("{field} must be finite and ≥ 0 (got {value})"),
        ))
    }
}

/// Reads and validates an instance document from a byte stream.
pub fn load_instance<R: Read>(mut source: R) -> Result<Instance> {
    let mut doc = String::new();
    source
        .read_to_string(&mut doc)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Instance::from_toml_str(&doc)
}

/// Built-in case-study instance.
pub fn case_study_instance() -> Instance {
    Instance::case_study()
}
