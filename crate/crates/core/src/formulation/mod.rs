//! Deterministic-equivalent model of the scenario-based supply chain.
//!
//! Every variable is replicated per scenario except the weekly loss
//! indicators `delta`, which are shared. Bilinear vehicle-count terms
//! `λ·u` are replaced by product variables `v` with an exact McCormick
//! system (λ binary, u bounded integer).

mod ir;

pub use ir::{
    EqTag, Family, LinearRow, ModelIR, ModelStats, QuadraticRow, Sense, VarId, VarKey, VarKind,
    Variable,
};

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, DAYS_PER_WEEK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Install the variance row as the model's quadratic constraint.
    pub include_variance: bool,
    /// Force week-1 decisions to agree across scenarios.
    pub nonanticipative_week1: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            include_variance: true,
            nonanticipative_week1: false,
        }
    }
}

/// One of the two transport legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Echelon {
    PlantToWarehouse,
    WarehouseToMarket,
}

impl Echelon {
    fn families(self) -> EchelonFamilies {
        match self {
            Echelon::PlantToWarehouse => EchelonFamilies {
                lambda: Family::LambdaPw,
                u: Family::UPw,
                v: Family::VPw,
                o: Family::OPw,
                flow: Family::Y,
                bound_tag: 10,
                sum_tag: 11,
                choice_tag: 12,
            },
            Echelon::WarehouseToMarket => EchelonFamilies {
                lambda: Family::LambdaWk,
                u: Family::UWk,
                v: Family::VWk,
                o: Family::OWk,
                flow: Family::P,
                bound_tag: 15,
                sum_tag: 16,
                choice_tag: 17,
            },
        }
    }

    fn link_dims(self, inst: &Instance) -> (usize, usize) {
        match self {
            Echelon::PlantToWarehouse => (inst.plants.len(), inst.warehouses.len()),
            Echelon::WarehouseToMarket => (inst.warehouses.len(), inst.markets.len()),
        }
    }
}

struct EchelonFamilies {
    lambda: Family,
    u: Family,
    v: Family,
    o: Family,
    flow: Family,
    bound_tag: u8,
    sum_tag: u8,
    choice_tag: u8,
}

/// Builds the full model: variables, objective and every constraint group.
pub fn build_model(inst: &Instance, opts: BuildOptions) -> ModelIR {
    let mut ir = ModelIR::new();
    declare_variables(&mut ir, inst);
    set_objective(&mut ir, inst);
    add_production_constraints(&mut ir, inst);
    add_cleaning_constraints(&mut ir, inst);
    add_plant_inventory(&mut ir, inst);
    add_transport_echelon(&mut ir, inst, Echelon::PlantToWarehouse);
    add_warehouse_constraints(&mut ir, inst);
    add_transport_echelon(&mut ir, inst, Echelon::WarehouseToMarket);
    add_demand_and_loss(&mut ir, inst);
    if opts.include_variance {
        add_variance_constraint(&mut ir, inst);
    }
    if opts.nonanticipative_week1 {
        add_nonanticipativity(&mut ir, inst);
    }
    ir
}

/// Day on which a batch started on `start` completes, if it fits the horizon.
fn completion_day(inst: &Instance, start: usize) -> Option<usize> {
    let done = start + inst.sets.batch_duration - 1;
    (done < inst.sets.days).then_some(done)
}

/// Declares all variables, ordered by family and then lexicographically by
/// index, so ids are deterministic for a given instance.
pub fn declare_variables(ir: &mut ModelIR, inst: &Instance) {
    let n_i = inst.plants.len();
    let n_j = inst.warehouses.len();
    let n_k = inst.markets.len();
    let n_t = inst.sets.days;
    let n_w = inst.sets.weeks;
    let n_s = inst.num_scenarios();
    let inf = f64::INFINITY;

    for family in Family::ALL {
        match family {
            Family::Alpha | Family::AlphaClean => {
                for i in 0..n_i {
                    for t in 0..n_t {
                        for s in 0..n_s {
                            ir.add_var(VarKey::new(family, &[i, t, s]), VarKind::Binary, 0.0, 1.0);
                        }
                    }
                }
            }
            Family::AlphaStart => {
                for i in 0..n_i {
                    for t in 0..n_t {
                        // a start that cannot complete inside the horizon is fixed off
                        let ub = if completion_day(inst, t).is_some() { 1.0 } else { 0.0 };
                        for s in 0..n_s {
                            ir.add_var(VarKey::new(family, &[i, t, s]), VarKind::Binary, 0.0, ub);
                        }
                    }
                }
            }
            Family::Beta => {
                for j in 0..n_j {
                    for t in 0..n_t {
                        for s in 0..n_s {
                            ir.add_var(VarKey::new(family, &[j, t, s]), VarKind::Binary, 0.0, 1.0);
                        }
                    }
                }
            }
            Family::Delta => {
                for w in 0..n_w {
                    ir.add_var(VarKey::new(family, &[w]), VarKind::Binary, 0.0, 1.0);
                }
            }
            Family::LambdaPw | Family::UPw | Family::VPw | Family::OPw => {
                declare_link_family(ir, family, n_i, n_j, inst);
            }
            Family::LambdaWk | Family::UWk | Family::VWk | Family::OWk => {
                declare_link_family(ir, family, n_j, n_k, inst);
            }
            Family::X => {
                for i in 0..n_i {
                    for t in 0..n_t {
                        // output only lands on days reachable as a batch completion
                        let ub = if t + 1 >= inst.sets.batch_duration { inf } else { 0.0 };
                        for s in 0..n_s {
                            ir.add_var(VarKey::new(family, &[i, t, s]), VarKind::Continuous, 0.0, ub);
                        }
                    }
                }
            }
            Family::Inv => continuous_block(ir, family, &[n_i, n_t, n_s]),
            Family::W => continuous_block(ir, family, &[n_j, n_t, n_s]),
            Family::Y => continuous_block(ir, family, &[n_i, n_j, n_t, n_s]),
            Family::P => continuous_block(ir, family, &[n_j, n_k, n_t, n_s]),
            Family::BigP => continuous_block(ir, family, &[n_j, n_k, n_w, n_s]),
            Family::Slack => continuous_block(ir, family, &[n_k, n_w, n_s]),
            Family::Loss => continuous_block(ir, family, &[n_w, n_s]),
        }
    }
}

fn declare_link_family(ir: &mut ModelIR, family: Family, n_a: usize, n_b: usize, inst: &Instance) {
    for a in 0..n_a {
        for b in 0..n_b {
            for (m, mode) in inst.modes.iter().enumerate() {
                let cap = f64::from(mode.max_vehicles);
                for t in 0..inst.sets.days {
                    for s in 0..inst.num_scenarios() {
                        let key = VarKey::new(family, &[a, b, m, t, s]);
                        match family {
                            Family::LambdaPw | Family::LambdaWk => {
                                ir.add_var(key, VarKind::Binary, 0.0, 1.0)
                            }
                            // v = λ·u is integral whenever λ and u are
                            Family::UPw | Family::UWk | Family::VPw | Family::VWk => {
                                ir.add_var(key, VarKind::Integer, 0.0, cap)
                            }
                            _ => ir.add_var(key, VarKind::Continuous, 0.0, f64::INFINITY),
                        };
                    }
                }
            }
        }
    }
}

fn continuous_block(ir: &mut ModelIR, family: Family, dims: &[usize]) {
    let mut idx = vec![0usize; dims.len()];
    if dims.contains(&0) {
        return;
    }
    loop {
        ir.add_var(VarKey::new(family, &idx), VarKind::Continuous, 0.0, f64::INFINITY);
        let mut pos = dims.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < dims[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Expected total cost over scenarios.
pub fn set_objective(ir: &mut ModelIR, inst: &Instance) {
    let mut obj = Vec::new();
    for (s, sc) in inst.scenarios.iter().enumerate() {
        let rho = sc.probability;
        for t in 0..inst.sets.days {
            for (i, plant) in inst.plants.iter().enumerate() {
                obj.push((ir.id(Family::Alpha, &[i, t, s]), rho * plant.fixed_cost));
                obj.push((ir.id(Family::X, &[i, t, s]), rho * plant.variable_cost));
                obj.push((ir.id(Family::Inv, &[i, t, s]), rho * plant.holding_cost));
                for j in 0..inst.warehouses.len() {
                    for (m, mode) in inst.modes.iter().enumerate() {
                        obj.push((ir.id(Family::UPw, &[i, j, m, t, s]), rho * mode.shipping_cost));
                    }
                }
            }
            for (j, wh) in inst.warehouses.iter().enumerate() {
                obj.push((ir.id(Family::Beta, &[j, t, s]), rho * wh.fixed_cost));
                obj.push((ir.id(Family::W, &[j, t, s]), rho * wh.holding_cost));
                for k in 0..inst.markets.len() {
                    for (m, mode) in inst.modes.iter().enumerate() {
                        obj.push((ir.id(Family::UWk, &[j, k, m, t, s]), rho * mode.shipping_cost));
                    }
                }
            }
        }
        for (w, &r) in inst.risk.loss_cost.iter().enumerate() {
            obj.push((ir.id(Family::Loss, &[w, s]), rho * r));
        }
    }
    obj.retain(|&(_, c)| c != 0.0);
    ir.objective = obj;
}

/// Batch sizing, activity and non-overlap rows.
pub fn add_production_constraints(ir: &mut ModelIR, inst: &Instance) {
    let len = inst.sets.batch_duration;
    let n_t = inst.sets.days;
    for (i, plant) in inst.plants.iter().enumerate() {
        for s in 0..inst.num_scenarios() {
            for t in 0..n_t {
                let Some(done) = completion_day(inst, t) else { continue };
                let start = ir.id(Family::AlphaStart, &[i, t, s]);
                let x = ir.id(Family::X, &[i, done, s]);
                ir.add_row(
                    EqTag::Eq(3),
                    vec![(x, 1.0), (start, -plant.normal_capacity)],
                    Sense::Ge,
                    0.0,
                );
                ir.add_row(
                    EqTag::Eq(3),
                    vec![(x, 1.0), (start, -plant.max_capacity)],
                    Sense::Le,
                    0.0,
                );
                for tau in t..t + len {
                    let active = ir.id(Family::Alpha, &[i, tau, s]);
                    ir.add_row(EqTag::Eq(4), vec![(start, 1.0), (active, -1.0)], Sense::Le, 0.0);
                }
                for tau in t + 1..(t + len).min(n_t) {
                    let other = ir.id(Family::AlphaStart, &[i, tau, s]);
                    ir.add_row(EqTag::Eq(5), vec![(other, 1.0), (start, 1.0)], Sense::Le, 1.0);
                }
            }
        }
    }
}

/// Cleaning after every `B_i` batches and its exclusion of production.
pub fn add_cleaning_constraints(ir: &mut ModelIR, inst: &Instance) {
    let len = inst.sets.batch_duration;
    let n_t = inst.sets.days;
    let clean_len = inst.sets.cleaning_duration;
    for (i, plant) in inst.plants.iter().enumerate() {
        let b = f64::from(plant.batches_before_cleaning);
        for s in 0..inst.num_scenarios() {
            // 0-based day t covers 1-based day t + 1; window needs (t + 1) + L ≤ |T|
            for t in 0..n_t {
                if t + 1 + len > n_t {
                    break;
                }
                let mut terms: Vec<(VarId, f64)> = (0..=t + len)
                    .map(|tau| (ir.id(Family::AlphaClean, &[i, tau, s]), 1.0))
                    .collect();
                terms.extend((0..=t).map(|tau| (ir.id(Family::AlphaStart, &[i, tau, s]), -1.0 / b)));
                ir.add_row(EqTag::Eq(6), terms.clone(), Sense::Ge, -1.0 + 1.0 / b);
                ir.add_row(EqTag::Eq(6), terms, Sense::Le, 0.0);
            }
            for t in 0..n_t {
                let clean = ir.id(Family::AlphaClean, &[i, t, s]);
                let start = ir.id(Family::AlphaStart, &[i, t, s]);
                ir.add_row(EqTag::Eq(7), vec![(clean, 1.0), (start, 1.0)], Sense::Le, 1.0);
            }
            for t in 0..n_t {
                let clean = ir.id(Family::AlphaClean, &[i, t, s]);
                for tau in t..(t + clean_len).min(n_t) {
                    let active = ir.id(Family::Alpha, &[i, tau, s]);
                    ir.add_row(EqTag::Eq(8), vec![(active, 1.0), (clean, 1.0)], Sense::Le, 1.0);
                }
            }
        }
    }
}

/// Plant mass balance.
pub fn add_plant_inventory(ir: &mut ModelIR, inst: &Instance) {
    for (i, plant) in inst.plants.iter().enumerate() {
        for s in 0..inst.num_scenarios() {
            for t in 0..inst.sets.days {
                let mut terms = vec![
                    (ir.id(Family::Inv, &[i, t, s]), 1.0),
                    (ir.id(Family::X, &[i, t, s]), -1.0),
                ];
                terms.extend(
                    (0..inst.warehouses.len()).map(|j| (ir.id(Family::Y, &[i, j, t, s]), 1.0)),
                );
                let rhs = if t == 0 {
                    plant.initial_inventory
                } else {
                    terms.push((ir.id(Family::Inv, &[i, t - 1, s]), -1.0));
                    0.0
                };
                ir.add_row(EqTag::Eq(9), terms, Sense::Eq, rhs);
            }
        }
    }
}

/// Vehicle counts, mode choice and McCormick rows for one transport leg.
pub fn add_transport_echelon(ir: &mut ModelIR, inst: &Instance, echelon: Echelon) {
    let f = echelon.families();
    let (n_a, n_b) = echelon.link_dims(inst);
    for a in 0..n_a {
        for b in 0..n_b {
            for t in 0..inst.sets.days {
                for s in 0..inst.num_scenarios() {
                    let mut flow_terms = Vec::with_capacity(inst.modes.len() + 1);
                    let mut choice_terms = Vec::with_capacity(inst.modes.len());
                    for (m, mode) in inst.modes.iter().enumerate() {
                        let idx = [a, b, m, t, s];
                        let lambda = ir.id(f.lambda, &idx);
                        let u = ir.id(f.u, &idx);
                        let v = ir.id(f.v, &idx);
                        let o = ir.id(f.o, &idx);
                        let cap = f64::from(mode.max_vehicles);
                        ir.add_row(EqTag::McCormick, vec![(v, 1.0), (lambda, -cap)], Sense::Le, 0.0);
                        ir.add_row(EqTag::McCormick, vec![(v, 1.0), (u, -1.0)], Sense::Le, 0.0);
                        ir.add_row(
                            EqTag::McCormick,
                            vec![(v, 1.0), (u, -1.0), (lambda, -cap)],
                            Sense::Ge,
                            -cap,
                        );
                        ir.add_row(
                            EqTag::Eq(f.bound_tag),
                            vec![(o, 1.0), (v, -mode.min_capacity)],
                            Sense::Ge,
                            0.0,
                        );
                        ir.add_row(
                            EqTag::Eq(f.bound_tag),
                            vec![(o, 1.0), (v, -mode.max_capacity)],
                            Sense::Le,
                            0.0,
                        );
                        flow_terms.push((o, 1.0));
                        choice_terms.push((lambda, 1.0));
                    }
                    flow_terms.push((ir.id(f.flow, &[a, b, t, s]), -1.0));
                    ir.add_row(EqTag::Eq(f.sum_tag), flow_terms, Sense::Eq, 0.0);
                    ir.add_row(EqTag::Eq(f.choice_tag), choice_terms, Sense::Eq, 1.0);
                }
            }
        }
    }
}

/// Warehouse activation and mass balance.
pub fn add_warehouse_constraints(ir: &mut ModelIR, inst: &Instance) {
    for (j, wh) in inst.warehouses.iter().enumerate() {
        for s in 0..inst.num_scenarios() {
            for t in 0..inst.sets.days {
                let w = ir.id(Family::W, &[j, t, s]);
                let beta = ir.id(Family::Beta, &[j, t, s]);
                ir.add_row(EqTag::Eq(13), vec![(w, 1.0), (beta, -wh.max_capacity)], Sense::Le, 0.0);

                let mut terms = vec![(w, 1.0)];
                terms.extend(
                    (0..inst.markets.len()).map(|k| (ir.id(Family::P, &[j, k, t, s]), 1.0)),
                );
                terms.extend(
                    (0..inst.plants.len()).map(|i| (ir.id(Family::Y, &[i, j, t, s]), -1.0)),
                );
                let rhs = if t == 0 {
                    wh.initial_storage
                } else {
                    terms.push((ir.id(Family::W, &[j, t - 1, s]), -1.0));
                    0.0
                };
                ir.add_row(EqTag::Eq(14), terms, Sense::Eq, rhs);
            }
        }
    }
}

/// Zero-based day index of day `tau` (1..=7) in 1-based week `week`.
///
/// The published index `(7 − τ)(t' − 1) + τ·t'` expands to `7(t' − 1) + τ`;
/// this returns that value minus one.
pub fn day_of_week(week: usize, tau: usize) -> usize {
    debug_assert!(week >= 1 && (1..=DAYS_PER_WEEK).contains(&tau));
    DAYS_PER_WEEK * (week - 1) + tau - 1
}

/// Weekly aggregation, unmet demand, loss bound and loss-week budget.
pub fn add_demand_and_loss(ir: &mut ModelIR, inst: &Instance) {
    let n_s = inst.num_scenarios();
    for s in 0..n_s {
        for w in 0..inst.sets.weeks {
            for j in 0..inst.warehouses.len() {
                for k in 0..inst.markets.len() {
                    let mut terms = vec![(ir.id(Family::BigP, &[j, k, w, s]), 1.0)];
                    terms.extend((1..=DAYS_PER_WEEK).map(|tau| {
                        (ir.id(Family::P, &[j, k, day_of_week(w + 1, tau), s]), -1.0)
                    }));
                    ir.add_row(EqTag::Eq(18), terms, Sense::Eq, 0.0);
                }
            }
        }
    }
    for s in 0..n_s {
        for w in 0..inst.sets.weeks {
            for k in 0..inst.markets.len() {
                let mut terms: Vec<_> = (0..inst.warehouses.len())
                    .map(|j| (ir.id(Family::BigP, &[j, k, w, s]), 1.0))
                    .collect();
                terms.push((ir.id(Family::Slack, &[k, w, s]), 1.0));
                ir.add_row(EqTag::Eq(19), terms, Sense::Eq, inst.demand(k, w, s));
            }
        }
    }
    for s in 0..n_s {
        for w in 0..inst.sets.weeks {
            let mut terms = vec![(ir.id(Family::Loss, &[w, s]), 1.0)];
            terms.extend(
                (0..inst.markets.len()).map(|k| (ir.id(Family::Slack, &[k, w, s]), -1.0)),
            );
            ir.add_row(EqTag::Eq(20), terms, Sense::Eq, 0.0);
        }
    }
    for s in 0..n_s {
        for w in 0..inst.sets.weeks {
            let loss = ir.id(Family::Loss, &[w, s]);
            let delta = ir.id(Family::Delta, &[w]);
            ir.add_row(
                EqTag::Eq(21),
                vec![(loss, 1.0), (delta, -inst.loss_bound(w))],
                Sense::Le,
                0.0,
            );
        }
    }
    let budget: Vec<_> = (0..inst.sets.weeks).map(|w| (ir.id(Family::Delta, &[w]), 1.0)).collect();
    ir.add_row(EqTag::Eq(22), budget, Sense::Le, inst.risk.max_loss_weeks as f64);
}

/// Installs the week-averaged loss variance cap as the quadratic row.
pub fn add_variance_constraint(ir: &mut ModelIR, inst: &Instance) {
    let rho = inst.probabilities();
    let scale = 1.0 / inst.sets.weeks as f64;
    let mut quad = Vec::new();
    for w in 0..inst.sets.weeks {
        for (s, &ps) in rho.iter().enumerate() {
            let ls = ir.id(Family::Loss, &[w, s]);
            quad.push((ls, ls, scale * ps * (1.0 - ps)));
            for (s2, &ps2) in rho.iter().enumerate().skip(s + 1) {
                let ls2 = ir.id(Family::Loss, &[w, s2]);
                quad.push((ls, ls2, -2.0 * scale * ps * ps2));
            }
        }
    }
    ir.quadratic = Some(QuadraticRow {
        tag: EqTag::Eq(23),
        quad,
        linear: Vec::new(),
        rhs: inst.risk.variance_cap,
    });
}

const FIRST_STAGE: [Family; 15] = [
    Family::Alpha,
    Family::AlphaStart,
    Family::AlphaClean,
    Family::Beta,
    Family::LambdaPw,
    Family::LambdaWk,
    Family::UPw,
    Family::UWk,
    Family::X,
    Family::Y,
    Family::P,
    Family::OPw,
    Family::OWk,
    Family::VPw,
    Family::VWk,
];

/// Equates first-week decisions of every scenario with scenario 1.
pub fn add_nonanticipativity(ir: &mut ModelIR, inst: &Instance) {
    let first_week = DAYS_PER_WEEK.min(inst.sets.days);
    let mut links = Vec::new();
    for var in ir.vars() {
        if !FIRST_STAGE.contains(&var.key.family) {
            continue;
        }
        let arity = var.key.family.arity();
        let day = var.key.index(arity - 2);
        let scenario = var.key.index(arity - 1);
        if day >= first_week || scenario == 0 {
            continue;
        }
        let mut anchor: Vec<usize> = var.key.indices().collect();
        anchor[arity - 1] = 0;
        links.push((var.key, VarKey::new(var.key.family, &anchor)));
    }
    for (key, anchor) in links {
        let a = ir.var(&key).expect("declared");
        let b = ir.var(&anchor).expect("declared");
        ir.add_row(EqTag::Nonanticipativity, vec![(a, 1.0), (b, -1.0)], Sense::Eq, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn week_day_index_identity() {
        for week in 1..=10 {
            for tau in 1..=7 {
                let published = (7 - tau) * (week - 1) + tau * week;
                assert_eq!(published, 7 * (week - 1) + tau);
                assert_eq!(day_of_week(week, tau) + 1, published);
            }
        }
    }

    #[test]
    fn case_study_census() {
        let inst = Instance::case_study();
        let ir = build_model(&inst, BuildOptions::default());
        let st = ir.stats();
        assert_eq!(st.binary, 1010);
        assert_eq!(st.integer, 1344);
        assert_eq!(st.continuous, 1302);
        assert_eq!(st.quadratic_rows, 1);
        assert_eq!(st.rows_by_tag[&EqTag::Eq(3)], 144);
        assert_eq!(st.rows_by_tag[&EqTag::Eq(6)], 132);
        assert_eq!(st.rows_by_tag[&EqTag::McCormick], 3 * 672);
        assert_eq!(st.rows_by_tag[&EqTag::Eq(22)], 1);
        let tagged_linear: usize = st
            .rows_by_tag
            .iter()
            .filter(|(t, _)| **t != EqTag::Eq(23))
            .map(|(_, n)| n)
            .sum();
        assert_eq!(tagged_linear, st.linear_rows);
    }

    #[test]
    fn variance_flag_only_drops_quadratic_row() {
        let inst = Instance::case_study();
        let with = build_model(&inst, BuildOptions::default());
        let without = build_model(
            &inst,
            BuildOptions {
                include_variance: false,
                ..Default::default()
            },
        );
        assert!(without.quadratic.is_none());
        assert_eq!(without.stats().quadratic_rows, 0);
        assert_eq!(with.rows, without.rows);
        assert_eq!(with.objective, without.objective);
        assert_eq!(with.num_vars(), without.num_vars());
    }

    #[test]
    fn nonanticipativity_rows_only_when_requested() {
        let inst = Instance::case_study();
        let off = build_model(&inst, BuildOptions::default());
        assert!(!off.rows.iter().any(|r| r.tag == EqTag::Nonanticipativity));
        let on = build_model(
            &inst,
            BuildOptions {
                include_variance: false,
                nonanticipative_week1: true,
            },
        );
        let na: Vec<_> = on.rows.iter().filter(|r| r.tag == EqTag::Nonanticipativity).collect();
        // x(1,3,s) linked for s = 2, 3; nothing on day 8
        let x13 = |s| on.id(Family::X, &[0, 2, s]);
        let x18 = |s| on.id(Family::X, &[0, 7, s]);
        assert!(na.iter().any(|r| r.terms == vec![(x13(1), 1.0), (x13(0), -1.0)]));
        assert!(na.iter().any(|r| r.terms == vec![(x13(2), 1.0), (x13(0), -1.0)]));
        assert!(!na.iter().any(|r| r.terms.iter().any(|&(v, _)| v == x18(1) || v == x18(0))));
    }

    #[test]
    fn loss_bound_row_week_one() {
        let inst = Instance::case_study();
        let ir = build_model(&inst, BuildOptions::default());
        let delta = ir.id(Family::Delta, &[0]);
        let row = ir
            .rows
            .iter()
            .find(|r| r.tag == EqTag::Eq(21) && r.terms.iter().any(|&(v, _)| v == delta))
            .unwrap();
        let coef = row.terms.iter().find(|&&(v, _)| v == delta).unwrap().1;
        assert!((coef + 17.5).abs() < 1e-12);
    }
}
