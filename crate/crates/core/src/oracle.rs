//! Independent checks of solver output.
//!
//! [`check_solution`] re-derives every constraint group and the objective
//! from the raw instance data and the keyed solution values; it never looks
//! at a `ModelIR`. [`brute_force_micro`] certifies optima of tiny instances
//! by enumerating the discrete variables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{build_model, BuildOptions, Family, ModelIR, VarKey, VarKind};
use crate::instance::{Instance, DAYS_PER_WEEK};
use crate::solver::{Solution, SolveStatus, SolverBackend};

pub const DEFAULT_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCheck {
    pub group: String,
    pub rows: usize,
    pub worst: f64,
    /// Where the worst residual occurred.
    pub worst_at: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tol: f64,
    pub groups: Vec<GroupCheck>,
    pub variance: f64,
    pub variance_cap: f64,
    pub objective: f64,
    pub reported_objective: f64,
    pub total_loss: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn group(&self, name: &str) -> Option<&GroupCheck> {
        self.groups.iter().find(|g| g.group == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GroupCheck> {
        self.groups.iter().filter(|g| !g.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verdict: {}", if self.pass { "pass" } else { "fail" });
        let _ = writeln!(out, "tolerance: {:e}", self.tol);
        let _ = writeln!(out, "objective (recomputed): {:.6}", self.objective);
        let _ = writeln!(out, "objective (reported): {:.6}", self.reported_objective);
        let _ = writeln!(out, "variance: {:.9} (cap {})", self.variance, self.variance_cap);
        let _ = writeln!(out, "total loss: {:.6}", self.total_loss);
        for g in &self.groups {
            let _ = writeln!(
                out,
                "  {:<18} {:>6} rows  worst {:.3e}{}  {}",
                g.group,
                g.rows,
                g.worst,
                if g.worst_at.is_empty() { String::new() } else { format!(" at {}", g.worst_at) },
                if g.pass { "ok" } else { "FAIL" }
            );
        }
        out
    }
}

struct Checker<'a> {
    sol: &'a Solution,
    tol: f64,
    groups: BTreeMap<&'static str, GroupCheck>,
    order: Vec<&'static str>,
}

impl<'a> Checker<'a> {
    fn get(&self, family: Family, idx: &[usize]) -> Result<f64> {
        self.sol.value(&VarKey::new(family, idx))
    }

    fn record(&mut self, group: &'static str, residual: f64, at: impl FnOnce() -> String) {
        if !self.groups.contains_key(group) {
            self.order.push(group);
        }
        let tol = self.tol;
        let g = self.groups.entry(group).or_insert_with(|| GroupCheck {
            group: group.to_string(),
            rows: 0,
            worst: 0.0,
            worst_at: String::new(),
            pass: true,
        });
        g.rows += 1;
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        if residual > g.worst {
            g.worst = residual;
            g.worst_at = at();
        }
        g.pass = g.worst <= tol;
    }

    fn le(&mut self, group: &'static str, lhs: f64, rhs: f64, at: impl FnOnce() -> String) {
        self.record(group, (lhs - rhs).max(0.0), at);
    }

    fn eq(&mut self, group: &'static str, lhs: f64, rhs: f64, at: impl FnOnce() -> String) {
        self.record(group, (lhs - rhs).abs(), at);
    }

    fn into_groups(mut self) -> Vec<GroupCheck> {
        self.order.iter().map(|g| self.groups.remove(g).expect("recorded")).collect()
    }
}

/// Re-verifies `sol` against every model equation with absolute tolerance `tol`.
pub fn check_solution(inst: &Instance, sol: &Solution, tol: f64) -> Result<VerificationReport> {
    check_solution_with(inst, sol, tol, false)
}

/// As [`check_solution`], optionally also checking first-week agreement
/// across scenarios.
pub fn check_solution_with(
    inst: &Instance,
    sol: &Solution,
    tol: f64,
    nonanticipative: bool,
) -> Result<VerificationReport> {
    let mut c = Checker {
        sol,
        tol,
        groups: BTreeMap::new(),
        order: Vec::new(),
    };
    let n_t = inst.sets.days;
    let n_w = inst.sets.weeks;
    let n_s = inst.num_scenarios();
    let len = inst.sets.batch_duration;
    let n_p = inst.plants.len();
    let n_h = inst.warehouses.len();
    let n_k = inst.markets.len();

    check_domains(&mut c, inst)?;

    for s in 0..n_s {
        for (i, plant) in inst.plants.iter().enumerate() {
            // batches: size, occupation, no overlap
            for t in 0..n_t {
                let start = c.get(Family::AlphaStart, &[i, t, s])?;
                if t + len > n_t {
                    c.eq("bounds", start, 0.0, || format!("alpha_start({},{},{})", i + 1, t + 1, s + 1));
                    continue;
                }
                let out = c.get(Family::X, &[i, t + len - 1, s])?;
                c.le("eq3", plant.normal_capacity * start, out, || format!("plant {} start day {} s{}", i + 1, t + 1, s + 1));
                c.le("eq3", out, plant.max_capacity * start, || format!("plant {} start day {} s{}", i + 1, t + 1, s + 1));
                for tau in t..t + len {
                    let on = c.get(Family::Alpha, &[i, tau, s])?;
                    c.le("eq4", start, on, || format!("plant {} day {} s{}", i + 1, tau + 1, s + 1));
                }
                for tau in t + 1..(t + len).min(n_t) {
                    let other = c.get(Family::AlphaStart, &[i, tau, s])?;
                    c.le("eq5", start + other, 1.0, || format!("plant {} days {}/{} s{}", i + 1, t + 1, tau + 1, s + 1));
                }
            }
            for t in 0..len.saturating_sub(1).min(n_t) {
                let out = c.get(Family::X, &[i, t, s])?;
                c.eq("bounds", out, 0.0, || format!("x({},{},{})", i + 1, t + 1, s + 1));
            }

            // cleaning
            let b = f64::from(plant.batches_before_cleaning);
            let mut starts = 0.0;
            let mut cleans = 0.0;
            let mut clean_prefix = Vec::with_capacity(n_t);
            for t in 0..n_t {
                cleans += c.get(Family::AlphaClean, &[i, t, s])?;
                clean_prefix.push(cleans);
            }
            for t in 0..n_t {
                starts += c.get(Family::AlphaStart, &[i, t, s])?;
                if t + 1 + len > n_t {
                    continue;
                }
                let done = clean_prefix[t + len];
                c.le("eq6", starts / b - 1.0 + 1.0 / b, done, || format!("plant {} day {} s{}", i + 1, t + 1, s + 1));
                c.le("eq6", done, starts / b, || format!("plant {} day {} s{}", i + 1, t + 1, s + 1));
            }
            for t in 0..n_t {
                let clean = c.get(Family::AlphaClean, &[i, t, s])?;
                let start = c.get(Family::AlphaStart, &[i, t, s])?;
                c.le("eq7", clean + start, 1.0, || format!("plant {} day {} s{}", i + 1, t + 1, s + 1));
                for tau in t..(t + inst.sets.cleaning_duration).min(n_t) {
                    let on = c.get(Family::Alpha, &[i, tau, s])?;
                    c.le("eq8", on + clean, 1.0, || format!("plant {} day {} s{}", i + 1, tau + 1, s + 1));
                }
            }

            // inventory
            let mut prev = plant.initial_inventory;
            for t in 0..n_t {
                let inv = c.get(Family::Inv, &[i, t, s])?;
                let made = c.get(Family::X, &[i, t, s])?;
                let mut shipped = 0.0;
                for j in 0..n_h {
                    shipped += c.get(Family::Y, &[i, j, t, s])?;
                }
                c.eq("eq9", inv, prev + made - shipped, || format!("plant {} day {} s{}", i + 1, t + 1, s + 1));
                prev = inv;
            }
        }

        check_leg(&mut c, inst, s, Leg::Outbound)?;
        check_leg(&mut c, inst, s, Leg::Delivery)?;

        for (j, wh) in inst.warehouses.iter().enumerate() {
            let mut prev = wh.initial_storage;
            for t in 0..n_t {
                let stock = c.get(Family::W, &[j, t, s])?;
                let open = c.get(Family::Beta, &[j, t, s])?;
                c.le("eq13", stock, wh.max_capacity * open, || format!("warehouse {} day {} s{}", j + 1, t + 1, s + 1));
                let mut inflow = 0.0;
                for i in 0..n_p {
                    inflow += c.get(Family::Y, &[i, j, t, s])?;
                }
                let mut outflow = 0.0;
                for k in 0..n_k {
                    outflow += c.get(Family::P, &[j, k, t, s])?;
                }
                c.eq("eq14", stock, prev + inflow - outflow, || format!("warehouse {} day {} s{}", j + 1, t + 1, s + 1));
                prev = stock;
            }
        }

        for w in 0..n_w {
            let days = w * DAYS_PER_WEEK..(w + 1) * DAYS_PER_WEEK;
            let mut unmet_total = 0.0;
            for k in 0..n_k {
                let mut delivered = 0.0;
                for j in 0..n_h {
                    let weekly = c.get(Family::BigP, &[j, k, w, s])?;
                    let mut daily = 0.0;
                    for t in days.clone() {
                        daily += c.get(Family::P, &[j, k, t, s])?;
                    }
                    c.eq("eq18", weekly, daily, || format!("warehouse {} market {} week {} s{}", j + 1, k + 1, w + 1, s + 1));
                    delivered += weekly;
                }
                let unmet = c.get(Family::Slack, &[k, w, s])?;
                c.eq("eq19", delivered + unmet, inst.demand(k, w, s), || format!("market {} week {} s{}", k + 1, w + 1, s + 1));
                unmet_total += unmet;
            }
            let loss = c.get(Family::Loss, &[w, s])?;
            c.eq("eq20", loss, unmet_total, || format!("week {} s{}", w + 1, s + 1));
            let delta = c.get(Family::Delta, &[w])?;
            c.le("eq21", loss, inst.loss_bound(w) * delta, || format!("week {} s{}", w + 1, s + 1));
        }
    }

    let mut flagged = 0.0;
    for w in 0..n_w {
        flagged += c.get(Family::Delta, &[w])?;
    }
    c.le("eq22", flagged, inst.risk.max_loss_weeks as f64, String::new);

    if nonanticipative {
        check_nonanticipativity(&mut c, inst)?;
    }

    let variance = evaluate_variance_direct(sol, inst)?;
    let cap = inst.risk.variance_cap;
    c.le("eq23", variance, cap, String::new);

    let objective = recompute_objective(&c, inst)?;
    let reported = sol.objective;
    c.record("objective", (objective - reported).abs(), || format!("reported {reported}"));

    let mut total_loss = 0.0;
    for w in 0..n_w {
        for s in 0..n_s {
            total_loss += c.get(Family::Loss, &[w, s])?;
        }
    }

    let groups = c.into_groups();
    let pass = groups.iter().all(|g| g.pass);
    Ok(VerificationReport {
        tol,
        groups,
        variance,
        variance_cap: cap,
        objective,
        reported_objective: reported,
        total_loss,
        pass,
    })
}

#[derive(Clone, Copy)]
enum Leg {
    Outbound,
    Delivery,
}

fn check_leg(c: &mut Checker<'_>, inst: &Instance, s: usize, leg: Leg) -> Result<()> {
    let (lambda, count, product, amount, flow, n_a, n_b, tags) = match leg {
        Leg::Outbound => (
            Family::LambdaPw,
            Family::UPw,
            Family::VPw,
            Family::OPw,
            Family::Y,
            inst.plants.len(),
            inst.warehouses.len(),
            ["eq10", "eq11", "eq12"],
        ),
        Leg::Delivery => (
            Family::LambdaWk,
            Family::UWk,
            Family::VWk,
            Family::OWk,
            Family::P,
            inst.warehouses.len(),
            inst.markets.len(),
            ["eq15", "eq16", "eq17"],
        ),
    };
    for a in 0..n_a {
        for b in 0..n_b {
            for t in 0..inst.sets.days {
                let mut moved = 0.0;
                let mut chosen = 0.0;
                let at = || format!("link {}-{} day {} s{}", a + 1, b + 1, t + 1, s + 1);
                for (m, mode) in inst.modes.iter().enumerate() {
                    let idx = [a, b, m, t, s];
                    let l = c.get(lambda, &idx)?;
                    let u = c.get(count, &idx)?;
                    let v = c.get(product, &idx)?;
                    let o = c.get(amount, &idx)?;
                    // the product variable must equal λ·u exactly at integral points
                    c.eq("mccormick", v, l * u, at);
                    c.le(tags[0], mode.min_capacity * l * u, o, at);
                    c.le(tags[0], o, mode.max_capacity * l * u, at);
                    moved += o;
                    chosen += l;
                }
                let f = c.get(flow, &[a, b, t, s])?;
                c.eq(tags[1], moved, f, at);
                c.eq(tags[2], chosen, 1.0, at);
            }
        }
    }
    Ok(())
}

fn check_domains(c: &mut Checker<'_>, inst: &Instance) -> Result<()> {
    let keys: Vec<(VarKey, f64)> = c.sol.values.iter().map(|(k, v)| (*k, *v)).collect();
    let u_max = |m: usize| f64::from(inst.modes[m].max_vehicles);
    for (key, x) in keys {
        let at = || key.to_string();
        c.record("bounds", (-x).max(0.0), at);
        match key.family {
            Family::Alpha
            | Family::AlphaStart
            | Family::AlphaClean
            | Family::Beta
            | Family::Delta
            | Family::LambdaPw
            | Family::LambdaWk => {
                c.record("integrality", (x - x.round()).abs(), at);
                c.le("bounds", x, 1.0, at);
            }
            Family::UPw | Family::UWk | Family::VPw | Family::VWk => {
                c.record("integrality", (x - x.round()).abs(), at);
                c.le("bounds", x, u_max(key.index(2)), at);
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_nonanticipativity(c: &mut Checker<'_>, inst: &Instance) -> Result<()> {
    let first_week = DAYS_PER_WEEK.min(inst.sets.days);
    let keys: Vec<(VarKey, f64)> = c
        .sol
        .values
        .iter()
        .filter(|(k, _)| !matches!(k.family, Family::Inv | Family::W | Family::BigP | Family::Slack | Family::Loss | Family::Delta))
        .map(|(k, v)| (*k, *v))
        .collect();
    for (key, x) in keys {
        let arity = key.family.arity();
        let day = key.index(arity - 2);
        let scenario = key.index(arity - 1);
        if day >= first_week || scenario == 0 {
            continue;
        }
        let mut anchor: Vec<usize> = key.indices().collect();
        anchor[arity - 1] = 0;
        let y = c.get(key.family, &anchor)?;
        c.eq("nonanticipativity", x, y, || key.to_string());
    }
    Ok(())
}

fn recompute_objective(c: &Checker<'_>, inst: &Instance) -> Result<f64> {
    let mut total = 0.0;
    for (s, sc) in inst.scenarios.iter().enumerate() {
        let mut cost = 0.0;
        for t in 0..inst.sets.days {
            for (i, plant) in inst.plants.iter().enumerate() {
                cost += plant.fixed_cost * c.get(Family::Alpha, &[i, t, s])?;
                cost += plant.variable_cost * c.get(Family::X, &[i, t, s])?;
                cost += plant.holding_cost * c.get(Family::Inv, &[i, t, s])?;
            }
            for (j, wh) in inst.warehouses.iter().enumerate() {
                cost += wh.fixed_cost * c.get(Family::Beta, &[j, t, s])?;
                cost += wh.holding_cost * c.get(Family::W, &[j, t, s])?;
            }
            for (m, mode) in inst.modes.iter().enumerate() {
                for i in 0..inst.plants.len() {
                    for j in 0..inst.warehouses.len() {
                        cost += mode.shipping_cost * c.get(Family::UPw, &[i, j, m, t, s])?;
                    }
                }
                for j in 0..inst.warehouses.len() {
                    for k in 0..inst.markets.len() {
                        cost += mode.shipping_cost * c.get(Family::UWk, &[j, k, m, t, s])?;
                    }
                }
            }
        }
        for (w, r) in inst.risk.loss_cost.iter().enumerate() {
            cost += r * c.get(Family::Loss, &[w, s])?;
        }
        total += sc.probability * cost;
    }
    Ok(total)
}

/// Week-averaged loss variance in the raw `E[L²] − E[L]²` form.
pub fn variance_raw(losses: &[Vec<f64>], probabilities: &[f64]) -> f64 {
    let weeks = losses.len();
    let mut acc = 0.0;
    for row in losses {
        let mut second = 0.0;
        let mut first = 0.0;
        for (l, p) in row.iter().zip(probabilities) {
            second += p * l * l;
            first += p * l;
        }
        acc += second - first * first;
    }
    acc / weeks as f64
}

/// Variance of the solution's losses, computed without the `risk` module.
pub fn evaluate_variance_direct(sol: &Solution, inst: &Instance) -> Result<f64> {
    let mut losses = Vec::with_capacity(inst.sets.weeks);
    for w in 0..inst.sets.weeks {
        let row = (0..inst.num_scenarios())
            .map(|s| sol.value_of(Family::Loss, &[w, s]))
            .collect::<Result<Vec<_>>>()?;
        losses.push(row);
    }
    Ok(variance_raw(&losses, &inst.probabilities()))
}

const MICRO_ZERO_DEMAND: &str = include_str!("../data/micro_zero_demand.toml");
const MICRO_SINGLE_BATCH: &str = include_str!("../data/micro_single_batch.toml");
const MICRO_FORCED_LOSS: &str = include_str!("../data/micro_forced_loss.toml");
const MICRO_VARIANCE_BOUND: &str = include_str!("../data/micro_variance_bound.toml");

/// The bundled micro instances used to certify the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicroInstance {
    ZeroDemand,
    SingleBatch,
    /// No loss weeks allowed and demand beyond what the network can supply.
    ForcedLoss,
    /// Uneven scenario demand whose cheapest plan breaks a tight variance cap.
    VarianceBound,
}

impl MicroInstance {
    pub const SUITE: [MicroInstance; 3] =
        [MicroInstance::ZeroDemand, MicroInstance::SingleBatch, MicroInstance::ForcedLoss];

    pub fn name(self) -> &'static str {
        match self {
            MicroInstance::ZeroDemand => "zero-demand",
            MicroInstance::SingleBatch => "single-batch",
            MicroInstance::ForcedLoss => "forced-loss",
            MicroInstance::VarianceBound => "variance-bound",
        }
    }

    pub fn document(self) -> &'static str {
        match self {
            MicroInstance::ZeroDemand => MICRO_ZERO_DEMAND,
            MicroInstance::SingleBatch => MICRO_SINGLE_BATCH,
            MicroInstance::ForcedLoss => MICRO_FORCED_LOSS,
            MicroInstance::VarianceBound => MICRO_VARIANCE_BOUND,
        }
    }

    pub fn instance(self) -> Instance {
        Instance::from_toml_str(self.document()).expect("bundled micro instance is valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// `None` when no assignment is feasible.
    pub objective: Option<f64>,
    /// LP subproblems solved.
    pub nodes: usize,
    pub assignment: Option<BTreeMap<VarKey, f64>>,
}

pub const DEFAULT_ENUMERATION_BUDGET: usize = 200_000;

/// Minimum objective over all integral assignments of the discrete
/// variables, by depth-first enumeration with LP subproblems.
///
/// A subtree is skipped only when its LP is infeasible or its LP value
/// already reaches the incumbent, so no better assignment is ever missed.
/// A node whose LP optimum is already integral is a complete assignment.
pub fn brute_force_micro(
    inst: &Instance,
    backend: &mut dyn SolverBackend,
    budget: usize,
) -> Result<BruteForceResult> {
    let full = build_model(
        inst,
        BuildOptions {
            include_variance: inst.risk.variance_cap.is_finite(),
            ..Default::default()
        },
    );
    backend.check_capabilities(&full)?;
    let discrete: Vec<usize> = full
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind != VarKind::Continuous)
        .map(|(i, _)| i)
        .collect();
    let mut lp = full.relaxed();
    let mut search = Search {
        backend,
        discrete,
        budget,
        nodes: 0,
        best: None,
    };
    search.explore(&mut lp)?;
    let (objective, assignment) = match search.best {
        Some((obj, values)) => (Some(obj), Some(values)),
        None => (None, None),
    };
    Ok(BruteForceResult {
        objective,
        nodes: search.nodes,
        assignment,
    })
}

struct Search<'b> {
    backend: &'b mut dyn SolverBackend,
    discrete: Vec<usize>,
    budget: usize,
    nodes: usize,
    best: Option<(f64, BTreeMap<VarKey, f64>)>,
}

const PRUNE_EPS: f64 = 1e-9;

impl Search<'_> {
    fn explore(&mut self, lp: &mut ModelIR) -> Result<()> {
        if self.nodes >= self.budget {
            return Err(Error::EnumerationBudget {
                visited: self.nodes as u64,
                budget: self.budget as u64,
            });
        }
        self.nodes += 1;
        let sol = self.backend.solve(lp)?;
        match sol.status {
            SolveStatus::Infeasible => return Ok(()),
            SolveStatus::Optimal => {}
            other => return Err(Error::UnexpectedStatus(other)),
        }
        if let Some((inc, _)) = &self.best {
            if sol.objective >= inc - PRUNE_EPS {
                return Ok(());
            }
        }
        let values = sol.dense(lp)?;
        let branch = self
            .discrete
            .iter()
            .copied()
            .find(|&v| (values[v] - values[v].round()).abs() > crate::solver::INTEGRALITY_TOL);
        let Some(var) = branch else {
            self.best = Some((sol.objective, sol.values));
            return Ok(());
        };
        let (lo, hi) = {
            let v = &lp.vars()[var];
            (v.lower, v.upper)
        };
        let mut value = lo.ceil();
        while value <= hi.floor() {
            lp.set_bounds(var, value, value);
            let res = self.explore(lp);
            lp.set_bounds(var, lo, hi);
            res?;
            value += 1.0;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_variance_of_the_worked_example() {
        let v = variance_raw(&[vec![5.0, 0.0, 5.0], vec![0.0; 3]], &[0.35, 0.15, 0.5]);
        assert_eq!(v, 1.59375);
    }

    #[test]
    fn micro_instances_load() {
        for m in MicroInstance::SUITE {
            let inst = m.instance();
            assert_eq!(inst.sets.days, 7, "{}", m.name());
            assert_eq!(inst.num_scenarios(), 2);
        }
        let _ = MicroInstance::VarianceBound.instance();
    }
}
