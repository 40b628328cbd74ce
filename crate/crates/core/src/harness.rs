//! Verification experiments: empirical frequencies against Gaussian limits,
//! the `K/√n` rate fit, and the closed-form special cases.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::belief::{catalog, BeliefModel, FocalElement};
use crate::gauss::{std_normal_cdf, two_sided_limit, GaussError};
use crate::moments::{moments_by_enumeration, rho_m_invariance, ChoquetMoments, MomentsError};
use crate::montecarlo::{
    estimate_events, grid_pairs, AlphaSet, EventKind, SimError, SimPlan, SimResult,
    DEFAULT_ALPHA_GRID,
};

/// Multiple of the standard error allowed for Monte Carlo noise.
pub const SE_MULTIPLIER: f64 = 3.0;
/// A deviation enters the rate fit only above this many standard errors.
pub const NOISE_FLOOR_SE: f64 = 5.0;
pub const MIN_FIT_POINTS: usize = 3;
/// Accepted range for a fitted log-log slope.
pub const RATE_SLOPE_BAND: (f64, f64) = (-0.75, -0.25);

pub const MOMENT_TOLERANCE: f64 = 1e-12;
pub const DEGENERATION_TARGET_TOLERANCE: f64 = 1e-7;
pub const M_INVARIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("degenerate variance (lower sd = {lower_sd:e}, upper sd = {upper_sd:e}); the normalized sums are undefined")]
    DegenerateVariance { lower_sd: f64, upper_sd: f64 },
    #[error("need 0 <= p_low <= p_high <= 1, got p_low = {p_low}, p_high = {p_high}")]
    InvalidProbabilities { p_low: f64, p_high: f64 },
    #[error(transparent)]
    Moments(MomentsError),
    #[error(transparent)]
    Simulation(SimError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

impl From<MomentsError> for HarnessError {
    fn from(e: MomentsError) -> Self {
        match e {
            MomentsError::DegenerateVariance { lower_sd, upper_sd } => {
                HarnessError::DegenerateVariance { lower_sd, upper_sd }
            }
            other => HarnessError::Moments(other),
        }
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::DegenerateVariance { lower_sd, upper_sd } => {
                HarnessError::DegenerateVariance { lower_sd, upper_sd }
            }
            other => HarnessError::Simulation(other),
        }
    }
}

/// One compared quantity. Special-case rows have no `n`, alphas or SE.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub n: Option<u64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub theory: f64,
    pub empirical: f64,
    pub deviation: f64,
    pub se: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl ReportRow {
    fn new(
        experiment: impl Into<String>,
        theory: f64,
        empirical: f64,
        tolerance: f64,
    ) -> Self {
        let deviation = (empirical - theory).abs();
        Self {
            experiment: experiment.into(),
            n: None,
            alpha1: None,
            alpha2: None,
            theory,
            empirical,
            deviation,
            se: None,
            tolerance,
            pass: deviation <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub run_id: String,
    pub rows: Vec<ReportRow>,
    pub rate_fit: Option<RateFit>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// A few lines for humans.
    pub fn summary(&self) -> String {
        let failed = self.failures().count();
        let mut s = format!(
            "{}: {} checks, {} passed, {} failed",
            self.run_id,
            self.rows.len(),
            self.rows.len() - failed,
            failed
        );
        if let Some(worst) = self
            .rows
            .iter()
            .filter(|r| r.tolerance > 0.0)
            .max_by(|a, b| (a.deviation / a.tolerance).total_cmp(&(b.deviation / b.tolerance)))
        {
            s.push_str(&format!(
                "\n  worst: {} n={} alpha=({}, {}) deviation {:.3e} vs tolerance {:.3e}",
                worst.experiment,
                worst.n.map_or("-".into(), |n| n.to_string()),
                worst.alpha1.map_or("-".into(), |a| a.to_string()),
                worst.alpha2.map_or("-".into(), |a| a.to_string()),
                worst.deviation,
                worst.tolerance
            ));
        }
        if let Some(fit) = &self.rate_fit {
            s.push_str(&format!("\n  rate fit: {}", fit.status));
        }
        s
    }
}

/// `3·SE + slack/√n`.
pub fn tolerance(se: f64, n: u64, slack: f64) -> f64 {
    SE_MULTIPLIER * se + slack / (n as f64).sqrt()
}

/// Compares one-sided frequencies in `result` with `1 − Φ(α)` (lower
/// events) and `Φ(α)` (upper events). Two-sided estimates are ignored.
pub fn evaluate_one_sided(result: &SimResult, slack: f64) -> VerificationReport {
    let rows = result
        .estimates
        .iter()
        .filter_map(|e| {
            let theory = match e.event.kind {
                EventKind::OneSidedLower => std_normal_cdf(-e.event.alpha1),
                EventKind::OneSidedUpper => std_normal_cdf(e.event.alpha2),
                EventKind::TwoSided => return None,
            };
            let se = e.se();
            let mut row = ReportRow::new(
                e.event.kind.as_str(),
                theory,
                e.frequency(),
                tolerance(se, e.n, slack),
            );
            row.n = Some(e.n);
            row.alpha1 = Some(e.event.alpha1);
            row.alpha2 = Some(e.event.alpha2);
            row.se = Some(se);
            Some(row)
        })
        .collect();
    let mut report = VerificationReport {
        run_id: result.run_id.clone(),
        rows,
        rate_fit: None,
    };
    report.rate_fit = Some(fit_rate(&report));
    report
}

/// Compares two-sided frequencies in `result` with
/// [`two_sided_limit`]`(α₁, α₂, rho)`. One-sided estimates are ignored.
pub fn evaluate_two_sided(
    result: &SimResult,
    rho: f64,
    slack: f64,
) -> Result<VerificationReport, HarnessError> {
    let mut targets: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let mut rows = Vec::new();
    for e in result.estimates.iter().filter(|e| e.event.kind == EventKind::TwoSided) {
        let (a1, a2) = (e.event.alpha1, e.event.alpha2);
        let key = (a1.to_bits(), a2.to_bits());
        let theory = match targets.get(&key) {
            Some(&t) => t,
            None => {
                let t = two_sided_limit(a1, a2, rho)?;
                targets.insert(key, t);
                t
            }
        };
        let se = e.se();
        let mut row = ReportRow::new(
            EventKind::TwoSided.as_str(),
            theory,
            e.frequency(),
            tolerance(se, e.n, slack),
        );
        row.n = Some(e.n);
        row.alpha1 = Some(a1);
        row.alpha2 = Some(a2);
        row.se = Some(se);
        rows.push(row);
    }
    let mut report = VerificationReport {
        run_id: result.run_id.clone(),
        rows,
        rate_fit: None,
    };
    report.rate_fit = Some(fit_rate(&report));
    Ok(report)
}

fn without_pairs(plan: &SimPlan) -> SimPlan {
    let strip = |a: &AlphaSet| AlphaSet {
        one_sided: a.one_sided.clone(),
        pairs: Vec::new(),
    };
    SimPlan {
        alphas: strip(&plan.alphas),
        alpha_overrides: plan.alpha_overrides.iter().map(|(n, a)| (*n, strip(a))).collect(),
        ..plan.clone()
    }
}

fn without_one_sided(plan: &SimPlan) -> SimPlan {
    let strip = |a: &AlphaSet| AlphaSet {
        one_sided: Vec::new(),
        pairs: a.pairs.clone(),
    };
    SimPlan {
        alphas: strip(&plan.alphas),
        alpha_overrides: plan.alpha_overrides.iter().map(|(n, a)| (*n, strip(a))).collect(),
        ..plan.clone()
    }
}

/// Simulates the plan's one-sided events and evaluates them.
pub fn verify_one_sided(plan: &SimPlan) -> Result<VerificationReport, HarnessError> {
    let moments = moments_by_enumeration(&plan.model)?;
    let result = estimate_events(&without_pairs(plan), &moments)?;
    Ok(evaluate_one_sided(&result, plan.slack))
}

/// Simulates the plan's two-sided events and evaluates them with the
/// correlation from `moments`.
pub fn verify_two_sided(
    plan: &SimPlan,
    moments: &ChoquetMoments,
) -> Result<VerificationReport, HarnessError> {
    let result = estimate_events(&without_one_sided(plan), moments)?;
    evaluate_two_sided(&result, moments.rho, plan.slack)
}

/// Largest deviation at one `n` and the floor it must clear to be fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub n: u64,
    pub max_deviation: f64,
    /// `5 ×` the largest standard error among the rows at this `n`.
    pub noise_floor: f64,
}

impl RatePoint {
    pub fn above_floor(&self) -> bool {
        self.max_deviation > self.noise_floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitStatus {
    /// `log(deviation) ≈ intercept + slope·log(n)`
    Fitted { slope: f64, intercept: f64, k_hat: f64, points: usize },
    InsufficientSignal { points: usize },
}

impl std::fmt::Display for FitStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitStatus::Fitted { slope, k_hat, points, .. } => {
                write!(f, "slope {slope:.4} from {points} points, K = {k_hat:.4}")
            }
            FitStatus::InsufficientSignal { points } => write!(
                f,
                "insufficient signal ({points} of the required {MIN_FIT_POINTS} points above the noise floor)"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub points: Vec<RatePoint>,
    pub status: FitStatus,
}

impl RateFit {
    pub fn slope(&self) -> Option<f64> {
        match self.status {
            FitStatus::Fitted { slope, .. } => Some(slope),
            FitStatus::InsufficientSignal { .. } => None,
        }
    }
}

/// Rate points from every report row that carries an `n`.
pub fn rate_points(report: &VerificationReport) -> Vec<RatePoint> {
    let mut by_n: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for row in &report.rows {
        if let Some(n) = row.n {
            let slot = by_n.entry(n).or_insert((0.0, 0.0));
            slot.0 = slot.0.max(row.deviation);
            slot.1 = slot.1.max(row.se.unwrap_or(0.0));
        }
    }
    by_n.into_iter()
        .map(|(n, (dev, se))| RatePoint {
            n,
            max_deviation: dev,
            noise_floor: NOISE_FLOOR_SE * se,
        })
        .collect()
}

pub fn fit_rate(report: &VerificationReport) -> RateFit {
    fit_rate_points(rate_points(report))
}

/// Least squares of `log(max deviation)` on `log n` over the points above
/// their noise floor.
pub fn fit_rate_points(points: Vec<RatePoint>) -> RateFit {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.above_floor())
        .map(|p| (p.n as f64, p.max_deviation))
        .collect();
    let status = if used.len() < MIN_FIT_POINTS {
        FitStatus::InsufficientSignal { points: used.len() }
    } else {
        let (slope, intercept) = fit_log_log(&used);
        FitStatus::Fitted {
            slope,
            intercept,
            k_hat: intercept.exp(),
            points: used.len(),
        }
    };
    RateFit { points, status }
}

/// `(slope, intercept)` of the least-squares line through `(ln x, ln y)`.
pub fn fit_log_log(points: &[(f64, f64)]) -> (f64, f64) {
    let k = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Moments of the model `m({1}) = p_low`, `m({0}) = 1 − p_high`,
/// `m({0,1}) = p_high − p_low`.
pub fn bernoulli_special_case(p_low: f64, p_high: f64) -> Result<ChoquetMoments, HarnessError> {
    if !(0.0 <= p_low && p_low <= p_high && p_high <= 1.0) {
        return Err(HarnessError::InvalidProbabilities { p_low, p_high });
    }
    let model = catalog::bernoulli(p_low, p_high)
        .map_err(|e| HarnessError::Moments(MomentsError::InvalidModel(e)))?;
    Ok(moments_by_enumeration(&model)?)
}

/// Named models exercised by the special-case suite.
pub fn special_case_models() -> Vec<(&'static str, BeliefModel)> {
    let additive_three = BeliefModel::new(
        2.0,
        vec![
            (FocalElement::point(-1.0).unwrap(), 0.2),
            (FocalElement::point(0.0).unwrap(), 0.5),
            (FocalElement::point(2.0).unwrap(), 0.3),
        ],
    )
    .unwrap();
    let unions = BeliefModel::new(
        2.0,
        vec![
            (FocalElement::new([(-1.0, 0.0), (1.0, 2.0)]).unwrap(), 0.4),
            (FocalElement::interval(0.5, 1.5).unwrap(), 0.35),
            (FocalElement::point(2.0).unwrap(), 0.25),
        ],
    )
    .unwrap();
    vec![
        ("bernoulli", catalog::bernoulli(0.3, 0.7).unwrap()),
        ("two_interval", catalog::two_interval()),
        ("symmetric_coin", catalog::symmetric_coin()),
        ("additive_three_point", additive_three),
        ("interval_unions", unions),
    ]
}

/// Bernoulli moments, additive degeneration and `M`-invariance.
pub fn special_cases() -> Result<VerificationReport, HarnessError> {
    let mut rows = Vec::new();

    let m = bernoulli_special_case(0.3, 0.7)?;
    for (name, got, want) in [
        ("lower_mean", m.lower_mean, 0.3),
        ("upper_mean", m.upper_mean, 0.7),
        ("lower_var", m.lower_sd * m.lower_sd, 0.21),
        ("upper_var", m.upper_sd * m.upper_sd, 0.21),
        ("rho", m.rho, 3.0 / 7.0),
    ] {
        rows.push(ReportRow::new(format!("bernoulli:{name}"), want, got, MOMENT_TOLERANCE));
    }
    let coin = bernoulli_special_case(0.5, 0.5)?;
    rows.push(ReportRow::new("bernoulli_additive:rho", 1.0, coin.rho, MOMENT_TOLERANCE));

    let pairs = grid_pairs(&DEFAULT_ALPHA_GRID);
    for (name, model) in special_case_models() {
        if model.is_additive() {
            let mo = moments_by_enumeration(&model)?;
            let tag = |what: &str| format!("additive_degeneration:{name}:{what}");
            rows.push(ReportRow::new(tag("mean"), mo.lower_mean, mo.upper_mean, MOMENT_TOLERANCE));
            rows.push(ReportRow::new(tag("sd"), mo.lower_sd, mo.upper_sd, MOMENT_TOLERANCE));
            rows.push(ReportRow::new(tag("rho"), 1.0, mo.rho, MOMENT_TOLERANCE));
            for &(a1, a2) in &pairs {
                let classical = std_normal_cdf(a2) - std_normal_cdf(a1);
                let mut row = ReportRow::new(
                    tag("two_sided_target"),
                    classical,
                    two_sided_limit(a1, a2, mo.rho)?,
                    DEGENERATION_TARGET_TOLERANCE,
                );
                row.alpha1 = Some(a1);
                row.alpha2 = Some(a2);
                rows.push(row);
            }
        }
        let (at_m, at_m1) = rho_m_invariance(&model, model.bound() + 1.0)?;
        rows.push(ReportRow::new(
            format!("m_invariance:{name}:rho"),
            at_m,
            at_m1,
            M_INVARIANCE_TOLERANCE,
        ));
    }

    Ok(VerificationReport {
        run_id: "special_cases".into(),
        rows,
        rate_fit: None,
    })
}
