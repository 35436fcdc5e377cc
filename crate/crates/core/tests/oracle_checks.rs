use agrisc::formulation::{Family, ModelIR, VarKey, VarKind};
use agrisc::oracle::{check_solution, evaluate_variance_direct, MicroInstance};
use agrisc::risk::{variance_value, LossPoint};
use agrisc::solver::{HighsBackend, Solution};
use agrisc::{build_model, BuildOptions, Instance, Mode, RunOptions};

const TOL: f64 = 1e-6;

fn solved(micro: MicroInstance) -> (Instance, Solution) {
    let inst = micro.instance();
    let mut be = HighsBackend::default();
    let opts = RunOptions {
        time_limit: 120.0,
        ..RunOptions::default()
    };
    let run = agrisc::run_mode(&inst, Mode::Perspective, &mut be, &opts).unwrap();
    assert_eq!(run.outcome, agrisc::pipeline::Outcome::Verified);
    (inst, run.solution.unwrap())
}

/// Feasibility of `values` judged through the model rows, not the oracle.
fn ir_feasible(ir: &ModelIR, values: &[f64]) -> bool {
    let bounds = ir.vars().iter().zip(values).all(|(v, x)| {
        *x >= v.lower - TOL
            && *x <= v.upper + TOL
            && (v.kind == VarKind::Continuous || (x - x.round()).abs() <= TOL)
    });
    let rows = ir.rows.iter().all(|r| r.violation(values) <= TOL);
    let quad = ir.quadratic.as_ref().is_none_or(|q| q.activity(values) <= q.rhs + TOL);
    bounds && rows && quad
}

#[test]
fn perturbed_loss_breaks_the_loss_balance() {
    let (inst, mut sol) = solved(MicroInstance::SingleBatch);
    let report = check_solution(&inst, &sol, TOL).unwrap();
    assert!(report.pass, "{}", report.to_text());
    *sol.values.get_mut(&VarKey::new(Family::Loss, &[0, 0])).unwrap() += 1.0;
    let report = check_solution(&inst, &sol, TOL).unwrap();
    assert!(!report.pass);
    let g = report.group("eq20").unwrap();
    assert!(!g.pass);
    assert!((g.worst - 1.0).abs() < 1e-9, "{}", g.worst);
}

#[test]
fn missing_value_is_an_error() {
    let (inst, mut sol) = solved(MicroInstance::ZeroDemand);
    sol.values.remove(&VarKey::new(Family::Delta, &[0]));
    assert!(check_solution(&inst, &sol, TOL).is_err());
}

fn mutations_agree_with_model(micro: MicroInstance) {
    let (inst, base) = solved(micro);
    let ir = build_model(&inst, BuildOptions::default());
    let keys: Vec<VarKey> = ir.vars().iter().map(|v| v.key).collect();
    let mut caught = 0;
    for key in &keys {
        for step in [-1.0, -0.25, 0.25, 1.0] {
            let mut sol = base.clone();
            *sol.values.get_mut(key).unwrap() += step;
            let dense = sol.dense(&ir).unwrap();
            sol.objective = ir.objective_value(&dense);
            let feasible = ir_feasible(&ir, &dense);
            let report = check_solution(&inst, &sol, TOL).unwrap();
            assert_eq!(report.pass, feasible, "{key} {step:+}: oracle {} model {feasible}\n{}", report.pass, report.to_text());
            if !feasible {
                caught += 1;
            }
        }
    }
    assert!(caught > 0);
}

#[test]
fn oracle_matches_model_rows_under_single_variable_mutations() {
    mutations_agree_with_model(MicroInstance::SingleBatch);
}

#[test]
fn oracle_matches_model_rows_with_a_finite_cap() {
    mutations_agree_with_model(MicroInstance::VarianceBound);
}

#[test]
fn direct_variance_agrees_with_risk_module() {
    let (inst, sol) = solved(MicroInstance::VarianceBound);
    let point = LossPoint::from_solution(&sol, inst.num_weeks(), inst.num_scenarios()).unwrap();
    let a = variance_value(&point, &inst.probabilities(), inst.num_weeks()).unwrap();
    let b = evaluate_variance_direct(&sol, &inst).unwrap();
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
}
