mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use belief_clt::belief::{catalog, IntervalEvent};
use belief_clt::gauss::{bvn_cdf, std_normal_cdf, two_sided_limit, BvnParams};
use belief_clt::harness::{
    evaluate_one_sided, evaluate_two_sided, fit_rate_points, special_case_models, FitStatus,
    RatePoint, VerificationReport,
};
use belief_clt::io::{write_csv, write_plan, SimRow};
use belief_clt::moments::{
    moments_by_enumeration, moments_by_integration, rho_m_invariance, ChoquetMoments,
    MomentsError, DEFAULT_QUAD_TOL,
};
use belief_clt::montecarlo::{
    estimate_events_with_workers, grid_pairs, workers_from_env, AlphaSet, EventKind, SimPlan,
    SimResult, DEFAULT_ALPHA_GRID, DEFAULT_N_VALUES, WORKERS_ENV,
};
use belief_clt::BeliefModel;
use common::{exact_moments, random_additive_model, random_model, ratio, to_f64};
use num::BigRational;
use rand::rngs::StdRng;
use rand::SeedableRng;

const ROUTE_TOL: f64 = 1e-10;
const ROUTE_MODELS: usize = 200;
const ROUTE_MAX_FOCAL: usize = 50;
const ROUTE_BUDGET: Duration = Duration::from_secs(10);
const BERNOULLI_TOL: f64 = 1e-12;
const M_INVARIANCE_TOL: f64 = 1e-10;
const ADDITIVE_MOMENT_TOL: f64 = 1e-12;
const ADDITIVE_TARGET_TOL: f64 = 1e-7;
const BVN_TOL: f64 = 1e-7;
const SIM_REPS: u64 = 1_000_000;
const SIM_SLACK: f64 = 1.0;
const SIM_BUDGET: Duration = Duration::from_secs(600);
const SLOPE_BAND: (f64, f64) = (-0.75, -0.25);
const NOISE_FLOOR_SE: f64 = 5.0;
const MIN_FIT_POINTS: usize = 3;
const SYNTHETIC_SLOPE_TOL: f64 = 1e-12;
const N_ONE_REPS: u64 = 1_000_000;
const N_ONE_SE: f64 = 4.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn route_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let start = Instant::now();
    let (mut compared, mut degenerate, mut worst) = (0, 0, 0.0f64);
    let mut bad = None;
    for _ in 0..ROUTE_MODELS {
        let model = random_model(&mut rng, ROUTE_MAX_FOCAL);
        let e = match moments_by_enumeration(&model) {
            Ok(e) => e,
            Err(MomentsError::DegenerateVariance { .. }) => {
                degenerate += 1;
                continue;
            }
            Err(err) => return outcome(false, format!("enumeration failed: {err}")),
        };
        let i = match moments_by_integration(&model, DEFAULT_QUAD_TOL) {
            Ok(i) => i,
            Err(err) => return outcome(false, format!("integration failed: {err}")),
        };
        compared += 1;
        for (name, d) in ChoquetMoments::FIELD_NAMES.iter().zip(e.deltas(&i)) {
            if d > worst {
                worst = d;
            }
            if !(d <= ROUTE_TOL) && bad.is_none() {
                bad = Some(format!("{name} differs by {d:e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{compared} models compared ({degenerate} degenerate), worst field delta {worst:.2e} (tol {ROUTE_TOL:e}), {:.2}s (budget {}s)",
        elapsed.as_secs_f64(),
        ROUTE_BUDGET.as_secs()
    );
    match bad {
        Some(b) => outcome(false, format!("{b}; {detail}")),
        None => outcome(elapsed < ROUTE_BUDGET && compared > 0, detail),
    }
}

fn bernoulli_case() -> Outcome {
    let exact = exact_moments(&[
        (ratio(1, 1), ratio(1, 1), ratio(3, 10)),
        (ratio(0, 1), ratio(0, 1), ratio(3, 10)),
        (ratio(0, 1), ratio(1, 1), ratio(4, 10)),
    ]);
    let rational_ok = exact.lower_mean == ratio(3, 10)
        && exact.upper_mean == ratio(7, 10)
        && exact.lower_var == ratio(21, 100)
        && exact.upper_var == ratio(21, 100)
        && exact.rho_squared() == ratio(9, 49)
        && !exact.covariance_is_negative();
    let m = match moments_by_enumeration(&catalog::bernoulli(0.3, 0.7).unwrap()) {
        Ok(m) => m,
        Err(err) => return outcome(false, err.to_string()),
    };
    let want: [(&str, f64, &BigRational); 4] = [
        ("lower_mean", m.lower_mean, &exact.lower_mean),
        ("upper_mean", m.upper_mean, &exact.upper_mean),
        ("lower_var", m.lower_sd * m.lower_sd, &exact.lower_var),
        ("upper_var", m.upper_sd * m.upper_sd, &exact.upper_var),
    ];
    let mut worst = want
        .iter()
        .map(|(_, got, w)| (got - to_f64(w)).abs())
        .fold(0.0, f64::max);
    worst = worst.max((m.rho - 3.0 / 7.0).abs());
    outcome(
        rational_ok && worst <= BERNOULLI_TOL,
        format!("rational values exact: {rational_ok}, worst float delta {worst:.2e} (tol {BERNOULLI_TOL:e})"),
    )
}

fn m_invariance() -> Outcome {
    let mut models: Vec<(String, BeliefModel)> = special_case_models()
        .into_iter()
        .map(|(name, m)| (name.to_string(), m))
        .collect();
    let mut rng = StdRng::seed_from_u64(3);
    for i in 0..50 {
        models.push((format!("random_{i}"), random_model(&mut rng, 20)));
    }
    let (mut checked, mut worst) = (0, 0.0f64);
    for (name, model) in &models {
        match rho_m_invariance(model, model.bound() + 1.0) {
            Ok((a, b)) => {
                checked += 1;
                worst = worst.max((a - b).abs());
                if !((a - b).abs() <= M_INVARIANCE_TOL) {
                    return outcome(false, format!("{name}: rho {a} at M, {b} at M+1"));
                }
            }
            Err(MomentsError::DegenerateVariance { .. }) => {}
            Err(err) => return outcome(false, format!("{name}: {err}")),
        }
    }
    outcome(
        checked > 0,
        format!("{checked} models, worst |rho(M) - rho(M+1)| {worst:.2e} (tol {M_INVARIANCE_TOL:e})"),
    )
}

fn additive_degeneration() -> Outcome {
    let mut models: Vec<BeliefModel> = special_case_models()
        .into_iter()
        .map(|(_, m)| m)
        .filter(BeliefModel::is_additive)
        .collect();
    models.push(catalog::bernoulli(0.4, 0.4).unwrap());
    let mut rng = StdRng::seed_from_u64(4);
    models.extend((0..30).map(|_| random_additive_model(&mut rng, 12)));
    let pairs = grid_pairs(&DEFAULT_ALPHA_GRID);
    let (mut moment_worst, mut target_worst) = (0.0f64, 0.0f64);
    for model in &models {
        let m = match moments_by_enumeration(model) {
            Ok(m) => m,
            Err(err) => return outcome(false, err.to_string()),
        };
        moment_worst = moment_worst
            .max((m.lower_mean - m.upper_mean).abs())
            .max((m.lower_sd - m.upper_sd).abs())
            .max((m.rho - 1.0).abs());
        for &(a1, a2) in &pairs {
            let got = two_sided_limit(a1, a2, m.rho).unwrap();
            let want = std_normal_cdf(a2) - std_normal_cdf(a1);
            target_worst = target_worst.max((got - want).abs());
        }
    }
    outcome(
        moment_worst <= ADDITIVE_MOMENT_TOL && target_worst <= ADDITIVE_TARGET_TOL,
        format!(
            "{} models, worst moment delta {moment_worst:.2e} (tol {ADDITIVE_MOMENT_TOL:e}), worst target delta {target_worst:.2e} (tol {ADDITIVE_TARGET_TOL:e})",
            models.len()
        ),
    )
}

fn bvn_accuracy() -> Outcome {
    let bvn = |a: f64, b: f64, rho: f64| bvn_cdf(&BvnParams::new(a, b, rho).unwrap());
    let axis = [-2.0, -0.7, 0.0, 0.9, 2.5];
    let rhos = [-0.95, -0.5, 0.0, 0.5, 0.95];
    let mut grid_worst = 0.0f64;
    for &a in &axis {
        for &b in &axis {
            for &rho in &rhos {
                grid_worst = grid_worst.max((bvn(a, b, rho) - common::bvn_by_density(a, b, rho)).abs());
            }
        }
    }
    let mut closed_worst = 0.0f64;
    for i in -20..=20 {
        let rho = i as f64 / 20.0;
        let want = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        closed_worst = closed_worst.max((bvn(0.0, 0.0, rho) - want).abs());
    }
    outcome(
        grid_worst <= BVN_TOL && closed_worst <= BVN_TOL,
        format!("grid worst {grid_worst:.2e}, quadrant worst {closed_worst:.2e} (tol {BVN_TOL:e})"),
    )
}

struct CltRun {
    name: &'static str,
    one_sided: VerificationReport,
    two_sided: VerificationReport,
}

fn clt_runs() -> Result<(Vec<CltRun>, Duration), String> {
    let start = Instant::now();
    let workers = workers_from_env();
    let mut runs = Vec::new();
    for (name, model) in [
        ("bernoulli", catalog::bernoulli(0.3, 0.7).unwrap()),
        ("two_interval", catalog::two_interval()),
    ] {
        let moments = moments_by_enumeration(&model).map_err(|e| e.to_string())?;
        let plan = SimPlan {
            run_id: name.into(),
            reps: SIM_REPS,
            n_values: DEFAULT_N_VALUES.to_vec(),
            slack: SIM_SLACK,
            ..SimPlan::new(model)
        };
        let result = estimate_events_with_workers(&plan, &moments, workers).map_err(|e| e.to_string())?;
        let two_sided = evaluate_two_sided(&result, moments.rho, SIM_SLACK).map_err(|e| e.to_string())?;
        runs.push(CltRun {
            name,
            one_sided: evaluate_one_sided(&result, SIM_SLACK),
            two_sided,
        });
    }
    Ok((runs, start.elapsed()))
}

fn report_outcome(runs: &[CltRun], elapsed: Duration, pick: fn(&CltRun) -> &VerificationReport) -> Outcome {
    let mut pass = elapsed <= SIM_BUDGET;
    let mut parts = Vec::new();
    for run in runs {
        let report = pick(run);
        let worst = report
            .rows
            .iter()
            .map(|r| r.deviation / r.tolerance)
            .fold(0.0, f64::max);
        let failed = report.failures().count();
        pass &= failed == 0 && !report.rows.is_empty();
        parts.push(format!(
            "{}: {}/{} within tolerance, worst deviation/tolerance {worst:.3}",
            run.name,
            report.rows.len() - failed,
            report.rows.len()
        ));
    }
    parts.push(format!("{:.1}s (budget {}s)", elapsed.as_secs_f64(), SIM_BUDGET.as_secs()));
    outcome(pass, parts.join("; "))
}

fn rate_outcome(runs: &[CltRun]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        for (kind, report) in [("one-sided", &run.one_sided), ("two-sided", &run.two_sided)] {
            let fit = report.rate_fit.as_ref().expect("evaluated reports carry a fit");
            match fit.status {
                FitStatus::Fitted { slope, points, .. } => {
                    let ok = (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&slope) && points >= MIN_FIT_POINTS;
                    pass &= ok;
                    parts.push(format!("{} {kind}: slope {slope:.3} from {points} points", run.name));
                }
                FitStatus::InsufficientSignal { points } => {
                    parts.push(format!("{} {kind}: insufficient signal ({points} points)", run.name));
                }
            }
        }
    }
    let synthetic: Vec<RatePoint> = DEFAULT_N_VALUES
        .iter()
        .map(|&n| RatePoint {
            n,
            max_deviation: 0.37 / (n as f64).sqrt(),
            noise_floor: NOISE_FLOOR_SE * 1e-9,
        })
        .collect();
    let fit = fit_rate_points(synthetic);
    let synthetic_err = match fit.status {
        FitStatus::Fitted { slope, .. } => (slope + 0.5).abs(),
        FitStatus::InsufficientSignal { .. } => f64::INFINITY,
    };
    pass &= synthetic_err <= SYNTHETIC_SLOPE_TOL;
    parts.push(format!(
        "synthetic slope error {synthetic_err:.2e} (tol {SYNTHETIC_SLOPE_TOL:e}); band [{}, {}]",
        SLOPE_BAND.0, SLOPE_BAND.1
    ));
    outcome(pass, parts.join("; "))
}

fn csv_bytes(result: &SimResult) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(&SimRow::from_result(result), &mut out).unwrap();
    out
}

fn reproducibility() -> Outcome {
    let mut plans = Vec::new();
    for (model, seed) in [
        (catalog::two_interval(), 5u64),
        (special_case_models().pop().unwrap().1, 6),
    ] {
        plans.push(SimPlan {
            run_id: "repro".into(),
            n_values: vec![1, 3, 64, 500],
            reps: 30_001,
            seed,
            ..SimPlan::new(model)
        });
    }
    let mut compared = 0;
    for plan in &plans {
        let moments = moments_by_enumeration(&plan.model).unwrap();
        let base = csv_bytes(&estimate_events_with_workers(plan, &moments, 1).unwrap());
        for workers in [1, 2, 4, 7] {
            let again = csv_bytes(&estimate_events_with_workers(plan, &moments, workers).unwrap());
            compared += 1;
            if again != base {
                return outcome(false, format!("seed {}: CSV differs at {workers} workers", plan.seed));
            }
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("repro.plan");
    write_plan(&plans[0], &path).unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_belief-clt"))
            .arg("simulate")
            .arg(&path)
            .env(WORKERS_ENV, workers)
            .output()
            .unwrap();
        if !out.status.success() {
            return outcome(false, format!("CLI exited with {}", out.status));
        }
        outputs.push(out.stdout);
    }
    let cli_same = outputs[0] == outputs[1];
    outcome(
        cli_same,
        format!("{compared} library runs at 1/2/4/7 workers identical, CLI runs at 1/3 workers identical: {cli_same}"),
    )
}

fn n_one_consistency() -> Outcome {
    let models = [
        ("bernoulli", catalog::bernoulli(0.3, 0.7).unwrap()),
        ("two_interval", catalog::two_interval()),
        ("interval_unions", special_case_models().pop().unwrap().1),
    ];
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (name, model) in models {
        let moments = moments_by_enumeration(&model).unwrap();
        let plan = SimPlan {
            n_values: vec![1],
            reps: N_ONE_REPS,
            seed: 10,
            alphas: AlphaSet::with_grid_pairs(vec![-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]),
            ..SimPlan::new(model.clone())
        };
        let result = estimate_events_with_workers(&plan, &moments, workers_from_env()).unwrap();
        for e in &result.estimates {
            let lo = moments.lower_mean + e.event.alpha1 * moments.lower_sd;
            let hi = moments.upper_mean + e.event.alpha2 * moments.upper_sd;
            // belief of the event, and one minus the plausibility of its complement
            let (event, complement) = match e.event.kind {
                EventKind::OneSidedLower => (IntervalEvent::at_least(lo), IntervalEvent::less_than(lo)),
                EventKind::OneSidedUpper => (IntervalEvent::less_than(hi), IntervalEvent::at_least(hi)),
                EventKind::TwoSided => {
                    let event = IntervalEvent::closed(lo, hi);
                    let complement = event.complement();
                    (event, complement)
                }
            };
            let exact = model.belief(&event);
            let via_plausibility = 1.0 - model.plausibility(&complement);
            let se = (exact * (1.0 - exact) / e.reps as f64).sqrt();
            let dev = (e.frequency() - exact).abs();
            checked += 1;
            if se > 0.0 {
                worst = worst.max(dev / se);
            }
            if !(dev <= N_ONE_SE * se) || (exact - via_plausibility).abs() > 1e-12 {
                return outcome(
                    false,
                    format!("{name} {:?}: frequency {} vs belief {exact}", e.event, e.frequency()),
                );
            }
        }
    }
    outcome(
        true,
        format!("{checked} events, worst deviation {worst:.2} SE (tol {N_ONE_SE} SE)"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("moment routes agree on random models", route_equivalence()),
        ("bernoulli moments are exact", bernoulli_case()),
        ("correlation does not depend on the bound", m_invariance()),
        ("additive models give the classical limit", additive_degeneration()),
        ("bivariate normal accuracy", bvn_accuracy()),
    ];
    match clt_runs() {
        Ok((runs, elapsed)) => {
            results.push(("one-sided limits", report_outcome(&runs, elapsed, |r| &r.one_sided)));
            results.push(("two-sided limits", report_outcome(&runs, elapsed, |r| &r.two_sided)));
            results.push(("convergence rate", rate_outcome(&runs)));
        }
        Err(err) => {
            for name in ["one-sided limits", "two-sided limits", "convergence rate"] {
                results.push((name, outcome(false, err.clone())));
            }
        }
    }
    results.push(("reproducible across worker counts", reproducibility()));
    results.push(("single draw matches exact belief", n_one_consistency()));

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} {:>2} {name}: {}", i + 1, o.detail);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
