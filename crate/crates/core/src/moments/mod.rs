//! Limit parameters of the belief-measure CLT.
//!
//! For a random focal set `K` with law given by the masses, write
//! `Z = min K` and `Z̄ = max K`. The limits of the one- and two-sided
//! normalized sums are governed by
//!
//! ```text
//! μ̲ = E[Z]          σ̲² = Var Z
//! μ̄ = E[Z̄]          σ̄² = Var Z̄
//! E[ZZ̄]
//! ρ′ = ∫_{−M}^{M} ∫_{−M}^{t₂} ν([t₁, t₂]) dt₁ dt₂ = M² − Mμ̄ + Mμ̲ − E[ZZ̄]
//! ρ  = (E[ZZ̄] − μ̲μ̄) / (σ̲σ̄)
//! ```
//!
//! Two routes compute the same numbers. [`moments_by_enumeration`] walks the
//! focal elements directly. [`moments_by_integration`] only queries the
//! capacity: means and variances come from the survival functions
//! `t ↦ ν([t, ∞))` and `t ↦ V([t, ∞))`, and `E[ZZ̄]` from the double
//! integral `ρ′`. All integrands are step functions with jumps at focal
//! endpoints, so that route sums exactly over breakpoint cells.
//! [`moments_by_adaptive_quadrature`] evaluates the same integrals with a
//! generic adaptive rule and serves as a check on the breakpoint logic.

mod quadrature;

use thiserror::Error;

use crate::belief::{BeliefModel, IntervalEvent, InvalidModel};

pub use quadrature::integrate_monotone;

/// Standard deviations below this are treated as zero.
pub const DEGENERATE_SD: f64 = 1e-12;

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentsError {
    #[error("degenerate variance (lower sd = {lower_sd:e}, upper sd = {upper_sd:e}); the normalized sums are undefined")]
    DegenerateVariance { lower_sd: f64, upper_sd: f64 },
    #[error("model has no focal elements")]
    EmptyModel,
    #[error("quadrature tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("new bound {new} must exceed the current bound {current}")]
    BoundNotLarger { current: f64, new: f64 },
    #[error(transparent)]
    InvalidModel(#[from] InvalidModel),
}

/// The CLT limit parameters of one marginal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoquetMoments {
    /// Bound `M` the value of `ρ′` refers to.
    pub bound: f64,
    pub lower_mean: f64,
    pub upper_mean: f64,
    pub lower_sd: f64,
    pub upper_sd: f64,
    /// `E[ZZ̄]`
    pub cross_moment: f64,
    pub rho_prime: f64,
    pub rho: f64,
}

impl ChoquetMoments {
    pub fn covariance(&self) -> f64 {
        self.cross_moment - self.lower_mean * self.upper_mean
    }

    /// Field-by-field absolute differences, in declaration order
    /// (μ̲, μ̄, σ̲, σ̄, E[ZZ̄], ρ′, ρ).
    pub fn deltas(&self, other: &ChoquetMoments) -> [f64; 7] {
        let a = self.fields();
        let b = other.fields();
        std::array::from_fn(|i| (a[i] - b[i]).abs())
    }

    pub fn fields(&self) -> [f64; 7] {
        [
            self.lower_mean,
            self.upper_mean,
            self.lower_sd,
            self.upper_sd,
            self.cross_moment,
            self.rho_prime,
            self.rho,
        ]
    }

    pub const FIELD_NAMES: [&'static str; 7] = [
        "lower_mean",
        "upper_mean",
        "lower_sd",
        "upper_sd",
        "cross_moment",
        "rho_prime",
        "rho",
    ];
}

struct RawMoments {
    bound: f64,
    lower_mean: f64,
    upper_mean: f64,
    lower_var: f64,
    upper_var: f64,
    cross_moment: f64,
    covariance: f64,
    rho_prime: f64,
}

fn finish(raw: RawMoments) -> Result<ChoquetMoments, MomentsError> {
    let lower_sd = raw.lower_var.max(0.0).sqrt();
    let upper_sd = raw.upper_var.max(0.0).sqrt();
    if lower_sd < DEGENERATE_SD || upper_sd < DEGENERATE_SD {
        return Err(MomentsError::DegenerateVariance { lower_sd, upper_sd });
    }
    let rho = (raw.covariance / (lower_sd * upper_sd)).clamp(-1.0, 1.0);
    Ok(ChoquetMoments {
        bound: raw.bound,
        lower_mean: raw.lower_mean,
        upper_mean: raw.upper_mean,
        lower_sd,
        upper_sd,
        cross_moment: raw.cross_moment,
        rho_prime: raw.rho_prime,
        rho,
    })
}

/// Direct sums over focal elements.
pub fn moments_by_enumeration(model: &BeliefModel) -> Result<ChoquetMoments, MomentsError> {
    if model.is_empty() {
        return Err(MomentsError::EmptyModel);
    }
    let focal = model.focal();
    let m = model.bound();
    let lower_mean: f64 = focal.iter().map(|(k, w)| w * k.min()).sum();
    let upper_mean: f64 = focal.iter().map(|(k, w)| w * k.max()).sum();
    let mut lower_var = 0.0;
    let mut upper_var = 0.0;
    let mut covariance = 0.0;
    let mut cross_moment = 0.0;
    for (k, w) in focal {
        let dl = k.min() - lower_mean;
        let du = k.max() - upper_mean;
        lower_var += w * dl * dl;
        upper_var += w * du * du;
        covariance += w * dl * du;
        cross_moment += w * k.min() * k.max();
    }
    let rho_prime = m * m - m * upper_mean + m * lower_mean - cross_moment;
    finish(RawMoments {
        bound: m,
        lower_mean,
        upper_mean,
        lower_var,
        upper_var,
        cross_moment,
        covariance,
        rho_prime,
    })
}

fn sorted_breakpoints(bound: f64, extra: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = [-bound, 0.0, bound]
        .into_iter()
        .chain(extra.map(|x| x.clamp(-bound, bound)))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `(E[W], E[W²])` of a variable on `[−M, M]` from its survival function
/// `t ↦ P(W ≥ t)`, which must be constant between consecutive `breaks`.
fn survival_moments(breaks: &[f64], survival: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let s = survival(0.5 * (a + b));
        // ∫ s over t ≥ 0, ∫ (s − 1) over t < 0
        let height = if b <= 0.0 { s - 1.0 } else { s };
        mean += height * (b - a);
        second += height * (b * b - a * a);
    }
    (mean, second)
}

/// Survival-function and double-integral route, summed exactly over the
/// cells between focal endpoints. `quad_tol` is validated but unused here;
/// see [`moments_by_adaptive_quadrature`] for the tolerance-driven variant.
pub fn moments_by_integration(
    model: &BeliefModel,
    quad_tol: f64,
) -> Result<ChoquetMoments, MomentsError> {
    if !(quad_tol > 0.0 && quad_tol.is_finite()) {
        return Err(MomentsError::BadTolerance(quad_tol));
    }
    if model.is_empty() {
        return Err(MomentsError::EmptyModel);
    }
    let m = model.bound();
    let focal = model.focal();

    let lower_breaks = sorted_breakpoints(m, focal.iter().map(|(k, _)| k.min()));
    let upper_breaks = sorted_breakpoints(m, focal.iter().map(|(k, _)| k.max()));
    let (lower_mean, lower_second) =
        survival_moments(&lower_breaks, |t| model.belief(&IntervalEvent::at_least(t)));
    let (upper_mean, upper_second) =
        survival_moments(&upper_breaks, |t| model.plausibility(&IntervalEvent::at_least(t)));

    let cells = sorted_breakpoints(
        m,
        focal.iter().flat_map(|(k, _)| [k.min(), k.max()]),
    );
    let rho_prime = rho_prime_by_cells(model, &cells);

    let cross_moment = m * m - m * upper_mean + m * lower_mean - rho_prime;
    finish(RawMoments {
        bound: m,
        lower_mean,
        upper_mean,
        lower_var: lower_second - lower_mean * lower_mean,
        upper_var: upper_second - upper_mean * upper_mean,
        cross_moment,
        covariance: cross_moment - lower_mean * upper_mean,
        rho_prime,
    })
}

/// `∫∫_{t₁ ≤ t₂} ν([t₁, t₂])` over `[−M, M]²`, one term per grid cell.
fn rho_prime_by_cells(model: &BeliefModel, breaks: &[f64]) -> f64 {
    let segs: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
    let mut total = 0.0;
    for (i, &(a1, b1)) in segs.iter().enumerate() {
        let len1 = b1 - a1;
        // Triangle on the diagonal cell.
        let diag = model.belief(&IntervalEvent::closed(a1 + len1 / 3.0, a1 + 2.0 * len1 / 3.0));
        total += diag * 0.5 * len1 * len1;
        let t1 = 0.5 * (a1 + b1);
        for &(a2, b2) in &segs[i + 1..] {
            let v = model.belief(&IntervalEvent::closed(t1, 0.5 * (a2 + b2)));
            total += v * len1 * (b2 - a2);
        }
    }
    total
}

/// The integration route evaluated by adaptive bisection of the belief
/// integrands, without using the focal endpoints. `quad_tol` bounds the
/// error contributed by each jump of an integrand. Cost grows quickly with
/// the number of focal elements; intended for small models.
pub fn moments_by_adaptive_quadrature(
    model: &BeliefModel,
    quad_tol: f64,
) -> Result<ChoquetMoments, MomentsError> {
    if !(quad_tol > 0.0 && quad_tol.is_finite()) {
        return Err(MomentsError::BadTolerance(quad_tol));
    }
    if model.is_empty() {
        return Err(MomentsError::EmptyModel);
    }
    let m = model.bound();
    let lower = |t: f64| model.belief(&IntervalEvent::at_least(t));
    let upper = |t: f64| model.plausibility(&IntervalEvent::at_least(t));
    let unit = |_: f64| 1.0;
    let linear = |t: f64| 2.0 * t;
    let moments = |s: &dyn Fn(f64) -> f64| -> (f64, f64) {
        let below = |t: f64| s(t) - 1.0;
        let mean = integrate_monotone(&unit, s, 0.0, m, quad_tol)
            + integrate_monotone(&unit, &below, -m, 0.0, quad_tol);
        let second = integrate_monotone(&linear, s, 0.0, m, quad_tol)
            + integrate_monotone(&linear, &below, -m, 0.0, quad_tol);
        (mean, second)
    };
    let (lower_mean, lower_second) = moments(&lower);
    let (upper_mean, upper_second) = moments(&upper);

    let inner_tol = quad_tol / (4.0 * m);
    let inner = |t2: f64| {
        integrate_monotone(
            &unit,
            &|t1| model.belief(&IntervalEvent::closed(t1, t2)),
            -m,
            t2,
            inner_tol,
        )
    };
    let rho_prime = integrate_monotone(&unit, &inner, -m, m, 0.5 * quad_tol);

    let cross_moment = m * m - m * upper_mean + m * lower_mean - rho_prime;
    finish(RawMoments {
        bound: m,
        lower_mean,
        upper_mean,
        lower_var: lower_second - lower_mean * lower_mean,
        upper_var: upper_second - upper_mean * upper_mean,
        cross_moment,
        covariance: cross_moment - lower_mean * upper_mean,
        rho_prime,
    })
}

/// `ρ` by the integration route under the declared bound and under an
/// enlarged bound `new_bound`. `ρ′` and the bound enter `E[ZZ̄]` together;
/// `ρ` itself must not move.
pub fn rho_m_invariance(
    model: &BeliefModel,
    new_bound: f64,
) -> Result<(f64, f64), MomentsError> {
    if !(new_bound > model.bound()) {
        return Err(MomentsError::BoundNotLarger {
            current: model.bound(),
            new: new_bound,
        });
    }
    let at_m = moments_by_integration(model, DEFAULT_QUAD_TOL)?;
    let wider = model.with_bound(new_bound)?;
    let at_m2 = moments_by_integration(&wider, DEFAULT_QUAD_TOL)?;
    Ok((at_m.rho, at_m2.rho))
}
