//! Acceptance criteria 1–9. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use agrisc::audit::census_audit;
use agrisc::oracle::{brute_force_micro, evaluate_variance_direct, variance_raw, MicroInstance, DEFAULT_ENUMERATION_BUDGET};
use agrisc::pipeline::Outcome;
use agrisc::risk::{perspective_cut, plain_cut, variance_gradient, variance_value, LossPoint};
use agrisc::solver::{HighsBackend, ScipBackend, DEFAULT_TIME_LIMIT};
use agrisc::{Instance, Mode, ModeRun, RunOptions, SolverBackend, SolverConfig};

type Verdict = (bool, String);

fn random_point(rng: &mut StdRng, max_loss: f64) -> (LossPoint, Vec<f64>) {
    let weeks = rng.random_range(1..=4);
    let scenarios = rng.random_range(2..=5);
    let loss = (0..weeks * scenarios).map(|_| rng.random_range(0.0..max_loss)).collect();
    let raw: Vec<f64> = (0..scenarios).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let rho = raw.iter().map(|r| r / total).collect();
    (LossPoint::new(weeks, scenarios, loss, vec![1.0; weeks]).unwrap(), rho)
}

fn describe(run: &ModeRun) -> String {
    let failed: Vec<String> = run
        .verification
        .iter()
        .flat_map(|v| v.failures())
        .map(|g| format!(" {}:{:.3e}@{}", g.group, g.worst, g.worst_at))
        .collect();
    format!(
        "{} [{}]: {}{} objective={} gap={} variance={} loss={} iterations={} time={:.1}s",
        run.mode.as_str(),
        run.backend,
        agrisc::pipeline::outcome_str(run.outcome),
        failed.concat(),
        run.objective.map_or("NA".into(), |v| format!("{v:.4}")),
        run.gap.map_or("NA".into(), |v| format!("{:.2}%", 100.0 * v)),
        run.variance.map_or("NA".into(), |v| format!("{v:.3e}")),
        run.total_loss(),
        run.iterations,
        run.wall_time
    )
}

fn case_study_perspective() -> Verdict {
    let inst = Instance::case_study();
    let mut be = HighsBackend::default();
    let started = Instant::now();
    let run = agrisc::run_mode(&inst, Mode::Perspective, &mut be, &RunOptions::default()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let v = run.verification.as_ref();
    let ok = run.outcome == Outcome::Verified
        && v.is_some_and(|v| v.pass && v.total_loss.abs() <= 1e-6 && v.variance <= inst.risk.variance_cap + 1e-6)
        && elapsed <= DEFAULT_TIME_LIMIT;
    (ok, format!("{}; elapsed {elapsed:.1}s", describe(&run)))
}

const VARIANTS: usize = 20;
const VARIANT_SEED: u64 = 20240917;
const VARIANT_TIME_LIMIT: f64 = DEFAULT_TIME_LIMIT;

fn perturbed(base: &Instance, rng: &mut StdRng) -> Instance {
    let mut inst = base.clone();
    for sc in &mut inst.scenarios {
        for row in &mut sc.demand {
            for d in row.iter_mut() {
                *d *= rng.random_range(0.8..=1.2);
            }
        }
    }
    inst.validate().unwrap();
    inst
}

fn randomized_variants() -> Verdict {
    let base = Instance::case_study();
    let mut rng = StdRng::seed_from_u64(VARIANT_SEED);
    let mut failures = Vec::new();
    let mut worst_excess = f64::NEG_INFINITY;
    for k in 0..VARIANTS {
        let inst = perturbed(&base, &mut rng);
        let mut be = HighsBackend::default();
        let opts = RunOptions {
            time_limit: VARIANT_TIME_LIMIT,
            ..RunOptions::default()
        };
        let run = agrisc::run_mode(&inst, Mode::Perspective, &mut be, &opts).unwrap();
        println!("  variant {k:>2}: {}", describe(&run));
        let Some(sol) = &run.solution else {
            failures.push(format!("variant {k}: no incumbent"));
            continue;
        };
        let var = evaluate_variance_direct(sol, &inst).unwrap();
        worst_excess = worst_excess.max(var - inst.risk.variance_cap);
        if var > inst.risk.variance_cap + 1e-6 || run.outcome != Outcome::Verified {
            failures.push(format!("variant {k}: {} variance {var}", agrisc::pipeline::outcome_str(run.outcome)));
        }
    }
    let msg = format!(
        "{VARIANTS} variants, {VARIANT_TIME_LIMIT}s each; max Var − l = {worst_excess:.3e}; failures: {}",
        if failures.is_empty() { "none".to_string() } else { failures.join(", ") }
    );
    (failures.is_empty(), msg)
}

fn equal_budget_comparison() -> Verdict {
    let inst = Instance::case_study();
    let config = SolverConfig::default();
    let probe = ScipBackend::new(config.clone());
    if !probe.is_available() {
        return (false, "SCIP backend unavailable (pyscipopt not importable); the direct MIQCP cannot be solved".into());
    }
    let opts = RunOptions::default();
    let mut runs = Vec::new();
    for mode in [Mode::Perspective, Mode::Miqcp] {
        let mut be: Box<dyn SolverBackend> = Box::new(ScipBackend::new(config.clone()));
        let run = agrisc::run_mode(&inst, mode, be.as_mut(), &opts).unwrap();
        println!("  {}", describe(&run));
        runs.push(run);
    }
    let (persp, direct) = (&runs[0], &runs[1]);
    if persp.outcome != Outcome::Verified {
        return (false, format!("perspective run not verified: {}", describe(persp)));
    }
    let p = persp.objective.unwrap();
    let d = match (direct.outcome, direct.objective) {
        (Outcome::Verified, Some(d)) => d,
        (Outcome::VerificationFailed, _) => return (false, format!("direct incumbent failed verification: {}", describe(direct))),
        _ => f64::INFINITY,
    };
    let msg = format!(
        "budget {}s per mode, scip; perspective {p:.4}, direct {d:.4}, difference {:.2}%",
        opts.time_limit,
        100.0 * (d - p) / d.abs().max(1.0)
    );
    (p <= d + 1e-6, msg)
}

fn gradient_check() -> Verdict {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (p, rho) = random_point(&mut rng, 100.0);
        let g = variance_gradient(&p, &rho, p.weeks).unwrap();
        for i in 0..p.loss.len() {
            let h = 1e-3 * p.loss[i].abs().max(1.0);
            let mut up = p.clone();
            let mut down = p.clone();
            up.loss[i] += h;
            down.loss[i] -= h;
            let fd = (variance_value(&up, &rho, p.weeks).unwrap() - variance_value(&down, &rho, p.weeks).unwrap()) / (2.0 * h);
            worst = worst.max((g[i] - fd).abs() / g[i].abs().max(1.0));
        }
    }
    (worst <= 1e-6, format!("100 points, worst relative error {worst:.3e}"))
}

fn separation_identity() -> Verdict {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut all_violated = true;
    let mut n = 0;
    while n < 100 {
        let (p, rho) = random_point(&mut rng, 20.0);
        let var = variance_value(&p, &rho, p.weeks).unwrap();
        if var <= 1e-6 {
            continue;
        }
        let cap = rng.random_range(0.0..var);
        for cut in [perspective_cut(&p, &rho, p.weeks, cap).unwrap(), plain_cut(&p, &rho, p.weeks, cap).unwrap()] {
            let lhs = cut.lhs_at(&p);
            worst = worst.max((lhs - (var - cap)).abs());
            all_violated &= lhs > 0.0;
        }
        n += 1;
    }
    (
        worst <= 1e-9 && all_violated,
        format!("100 points, worst |cut − (Var − l)| = {worst:.3e}, all violated: {all_violated}"),
    )
}

fn variance_pattern() -> Verdict {
    let rho = [0.35, 0.15, 0.5];
    let p = LossPoint::new(2, 3, vec![5.0, 0.0, 5.0, 0.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let a = variance_value(&p, &rho, 2).unwrap();
    let b = variance_raw(&[vec![5.0, 0.0, 5.0], vec![0.0, 0.0, 0.0]], &rho);
    (a == 1.59375 && b == 1.59375 && (a - b).abs() <= 1e-12, format!("risk {a:?}, oracle {b:?}"))
}

fn mccormick() -> Verdict {
    let n = common::mccormick_intervals_are_points(&Instance::case_study());
    (n > 0, format!("{n} integral (λ, u) points over every case-study link, v = λ·u at each"))
}

fn micro_equivalence() -> Verdict {
    let started = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for micro in MicroInstance::SUITE {
        let inst = micro.instance();
        let mut be = HighsBackend::default();
        let bf = brute_force_micro(&inst, &mut be, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let opts = RunOptions {
            time_limit: 120.0,
            ..RunOptions::default()
        };
        let run = agrisc::run_mode(&inst, Mode::Perspective, &mut be, &opts).unwrap();
        let full = match run.outcome {
            Outcome::Verified => run.objective,
            Outcome::Infeasible => None,
            _ => {
                ok = false;
                None
            }
        };
        let agree = match (bf.objective, full) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-6,
            (None, None) => true,
            _ => false,
        };
        ok &= agree;
        let show = |x: Option<f64>| x.map_or("infeasible".to_string(), |v| format!("{v}"));
        parts.push(format!("{} {} vs {} ({} nodes)", micro.name(), show(bf.objective), show(full), bf.nodes));
    }
    let elapsed = started.elapsed().as_secs_f64();
    (ok && elapsed <= 300.0, format!("{}; {elapsed:.1}s", parts.join("; ")))
}

fn model_audit() -> Verdict {
    let audit = census_audit(&Instance::case_study());
    for line in audit.to_text().lines() {
        println!("  {line}");
    }
    let diverging: Vec<_> = audit.comparisons.iter().filter(|c| c.reason.is_some()).map(|c| c.quantity).collect();
    (audit.pass(), format!("divergences itemized: {}", diverging.join(", ")))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Verdict); 9] = [
        (4, "gradient correctness", gradient_check),
        (5, "cut separation identity", separation_identity),
        (6, "variance oracle", variance_pattern),
        (7, "McCormick exactness", mccormick),
        (9, "model audit", model_audit),
        (8, "micro-instance oracle equivalence", micro_equivalence),
        (1, "case-study reproduction", case_study_perspective),
        (2, "reformulation feasibility", randomized_variants),
        (3, "reformulation quality", equal_budget_comparison),
    ];
    let mut results = Vec::new();
    for (n, name, f) in criteria {
        println!("criterion {n} ({name}) running");
        let (pass, msg) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(v) => v,
            Err(e) => {
                let why = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {why}"))
            }
        };
        println!("criterion {n} ({name}): {} {msg}", if pass { "PASS" } else { "FAIL" });
        results.push((n, name, pass, msg));
    }
    results.sort_by_key(|r| r.0);
    println!("\nacceptance summary");
    for (n, name, pass, msg) in &results {
        println!("{} criterion {n} ({name}): {msg}", if *pass { "PASS" } else { "FAIL" });
    }
    if results.iter().any(|r| !r.2) {
        std::process::exit(1);
    }
}
