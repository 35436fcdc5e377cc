use agrisc::oracle::{brute_force_micro, MicroInstance, DEFAULT_ENUMERATION_BUDGET};
use agrisc::pipeline::Outcome;
use agrisc::risk::{cutting_plane_solve, CutStyle, CuttingOptions, LoopStatus};
use agrisc::solver::{HighsBackend, ScipBackend};
use agrisc::{Error, Mode, RunOptions};

/// Optima certified by enumeration on first run, frozen here.
fn reference(micro: MicroInstance) -> Option<f64> {
    match micro {
        MicroInstance::ZeroDemand => Some(0.0),
        MicroInstance::SingleBatch => Some(885.0),
        MicroInstance::ForcedLoss => None,
        // no enumeration certificate (quadratic row); SCIP on the direct
        // model and both cut loops agree on it
        MicroInstance::VarianceBound => Some(555.0),
    }
}

fn full_model(micro: MicroInstance) -> Option<f64> {
    let mut be = HighsBackend::default();
    let opts = RunOptions {
        time_limit: 120.0,
        ..RunOptions::default()
    };
    let run = agrisc::run_mode(&micro.instance(), Mode::Perspective, &mut be, &opts).unwrap();
    match run.outcome {
        Outcome::Infeasible => None,
        Outcome::Verified => run.objective,
        other => panic!("{}: {other:?}", micro.name()),
    }
}

#[test]
fn brute_force_matches_frozen_references_and_full_model() {
    for micro in MicroInstance::SUITE {
        let mut be = HighsBackend::default();
        let bf = brute_force_micro(&micro.instance(), &mut be, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let full = full_model(micro);
        match (reference(micro), bf.objective, full) {
            (Some(r), Some(b), Some(f)) => {
                assert!((b - r).abs() <= 1e-6, "{}: brute force {b}, reference {r}", micro.name());
                assert!((f - b).abs() <= 1e-6, "{}: full {f}, brute force {b}", micro.name());
            }
            (None, None, None) => {}
            other => panic!("{}: disagreement {other:?}", micro.name()),
        }
    }
}

#[test]
fn tiny_budget_is_reported() {
    let mut be = HighsBackend::default();
    let err = brute_force_micro(&MicroInstance::SingleBatch.instance(), &mut be, 3).unwrap_err();
    assert!(matches!(err, Error::EnumerationBudget { budget: 3, .. }), "{err}");
}

#[test]
fn linear_backend_refuses_finite_cap_enumeration() {
    let mut be = HighsBackend::default();
    let err = brute_force_micro(&MicroInstance::VarianceBound.instance(), &mut be, 10).unwrap_err();
    assert!(matches!(err, Error::Capability { .. }), "{err}");
}

#[test]
fn tight_cap_needs_a_cut() {
    let inst = MicroInstance::VarianceBound.instance();
    for style in [CutStyle::Perspective, CutStyle::Plain] {
        let mut be = HighsBackend::default();
        let opts = CuttingOptions {
            time_budget: 120.0,
            style,
            ..CuttingOptions::default()
        };
        let report = cutting_plane_solve(&inst, &mut be, &opts).unwrap();
        assert_eq!(report.status, LoopStatus::VarianceFeasible);
        assert!(report.iterations.len() >= 2);
        assert!(report.cut_rows() >= 1);
        assert!(report.iterations[0].variance > inst.risk.variance_cap);
        let obj = report.solution.unwrap().objective;
        assert!((obj - reference(MicroInstance::VarianceBound).unwrap()).abs() <= 1e-6, "{obj}");
    }
}

#[test]
fn scip_solves_the_quadratic_micro_model_directly() {
    let mut be = ScipBackend::default();
    if !be.is_available() {
        eprintln!("pyscipopt not importable; SCIP backend not exercised");
        return;
    }
    let micro = MicroInstance::VarianceBound;
    let inst = micro.instance();
    let opts = RunOptions {
        time_limit: 120.0,
        ..RunOptions::default()
    };
    let run = agrisc::run_mode(&inst, Mode::Miqcp, &mut be, &opts).unwrap();
    assert_eq!(run.outcome, Outcome::Verified, "{:?}", run.verification);
    let obj = run.objective.unwrap();
    // SCIP stops at its default relative gap
    assert!((obj - 555.0).abs() <= 1e-4 * 555.0, "{obj}");
}
