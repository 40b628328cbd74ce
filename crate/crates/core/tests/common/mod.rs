#![allow(dead_code)]

//! Independent oracles shared by the integration tests.

use belief_clt::belief::{BeliefModel, FocalElement};
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::Rng;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre nodes on `[lo, hi]` with panels no wider than `h`.
pub fn composite_nodes(lo: f64, hi: f64, h: f64, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if hi <= lo {
        return Vec::new();
    }
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for &(x, w) in rule {
            nodes.push((mid + 0.5 * width * x, 0.5 * width * w));
        }
    }
    nodes
}

const TAIL: f64 = 10.0;

/// `Φ(x)` by quadrature of the density from `−10`.
pub fn normal_cdf_by_density(x: f64) -> f64 {
    let rule = gauss_legendre(16);
    let inv_root = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    composite_nodes(-TAIL, x.min(TAIL), 0.25, &rule)
        .iter()
        .map(|&(u, w)| w * inv_root * (-0.5 * u * u).exp())
        .sum()
}

/// `P(U ≤ a, V ≤ b)` by 2-D quadrature of the bivariate normal density
/// over `[−10, a] × [−10, b]`. Requires `|rho| < 1`.
pub fn bvn_by_density(a: f64, b: f64, rho: f64) -> f64 {
    let rule = gauss_legendre(16);
    let us = composite_nodes(-TAIL, a.min(TAIL), 0.2, &rule);
    let vs = composite_nodes(-TAIL, b.min(TAIL), 0.2, &rule);
    let det = 1.0 - rho * rho;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let k = -0.5 / det;
    let mut total = 0.0;
    for &(u, wu) in &us {
        let mut inner = 0.0;
        for &(v, wv) in &vs {
            inner += wv * (k * (u * u - 2.0 * rho * u * v + v * v)).exp();
        }
        total += wu * inner;
    }
    total * norm
}

/// Exact limit parameters over the rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    pub lower_mean: BigRational,
    pub upper_mean: BigRational,
    pub lower_var: BigRational,
    pub upper_var: BigRational,
    pub covariance: BigRational,
}

impl ExactMoments {
    /// `ρ² = cov² / (σ̲² σ̄²)`, exact.
    pub fn rho_squared(&self) -> BigRational {
        &self.covariance * &self.covariance / (&self.lower_var * &self.upper_var)
    }

    pub fn covariance_is_negative(&self) -> bool {
        self.covariance.is_negative()
    }
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Moments of `Z = min K`, `Z̄ = max K` from `(min, max, mass)` triples.
pub fn exact_moments(focal: &[(BigRational, BigRational, BigRational)]) -> ExactMoments {
    let zero = BigRational::zero();
    let total: BigRational = focal.iter().fold(zero.clone(), |s, f| s + &f.2);
    let mean = |g: &dyn Fn(&(BigRational, BigRational, BigRational)) -> BigRational| {
        focal.iter().fold(zero.clone(), |s, f| s + g(f) * &f.2) / &total
    };
    let lower_mean = mean(&|f| f.0.clone());
    let upper_mean = mean(&|f| f.1.clone());
    let lower_var = mean(&|f| (&f.0 - &lower_mean) * (&f.0 - &lower_mean));
    let upper_var = mean(&|f| (&f.1 - &upper_mean) * (&f.1 - &upper_mean));
    let covariance = mean(&|f| (&f.0 - &lower_mean) * (&f.1 - &upper_mean));
    ExactMoments {
        lower_mean,
        upper_mean,
        lower_var,
        upper_var,
        covariance,
    }
}

/// The model's own masses and endpoints, read exactly.
pub fn exact_moments_of(model: &BeliefModel) -> ExactMoments {
    let triples: Vec<_> = model
        .focal()
        .iter()
        .map(|(k, m)| (rational(k.min()), rational(k.max()), rational(*m)))
        .collect();
    exact_moments(&triples)
}

fn random_focal<R: Rng>(rng: &mut R, bound: f64, lattice: bool) -> FocalElement {
    let draw = |rng: &mut R| {
        if lattice {
            bound * rng.random_range(-8i32..=8) as f64 / 8.0
        } else {
            rng.random_range(-bound..=bound)
        }
    };
    if rng.random_bool(0.2) {
        return FocalElement::point(draw(rng)).unwrap();
    }
    let parts = rng.random_range(1..=3);
    let mut ends: Vec<f64> = (0..2 * parts).map(|_| draw(rng)).collect();
    ends.sort_by(f64::total_cmp);
    FocalElement::new(ends.chunks(2).map(|c| (c[0], c[1]))).unwrap()
}

/// A model with `1..=max_focal` focal elements inside a random bound.
/// Some models put endpoints on a coarse lattice so that endpoints of
/// different focal elements coincide.
pub fn random_model<R: Rng>(rng: &mut R, max_focal: usize) -> BeliefModel {
    let bound = rng.random_range(0.5..10.0);
    let lattice = rng.random_bool(0.3);
    let k = rng.random_range(1..=max_focal);
    let focal: Vec<FocalElement> = (0..k).map(|_| random_focal(rng, bound, lattice)).collect();
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    BeliefModel::new(bound, focal.into_iter().zip(weights.iter().map(|w| w / sum)).collect())
        .unwrap()
}

/// Like [`random_model`] but only with singleton focal elements.
pub fn random_additive_model<R: Rng>(rng: &mut R, max_focal: usize) -> BeliefModel {
    let bound = rng.random_range(0.5..10.0);
    let k = rng.random_range(2..=max_focal.max(2));
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    let focal = weights
        .iter()
        .map(|w| (FocalElement::point(rng.random_range(-bound..=bound)).unwrap(), w / sum))
        .collect();
    BeliefModel::new(bound, focal).unwrap()
}

/// Proptest strategy for models with up to `max_focal` focal elements.
pub fn arb_model(max_focal: usize) -> impl Strategy<Value = BeliefModel> {
    let part = (-1.0f64..=1.0, -1.0f64..=1.0);
    let focal = (prop::collection::vec(part, 1..=3), 0.02f64..1.0);
    (0.5f64..8.0, prop::collection::vec(focal, 1..=max_focal), any::<bool>()).prop_map(
        |(bound, spec, lattice)| {
            let snap = |x: f64| if lattice { (x * 4.0).round() / 4.0 } else { x };
            let total: f64 = spec.iter().map(|s| s.1).sum();
            let focal = spec
                .into_iter()
                .map(|(parts, w)| {
                    let parts = parts.into_iter().map(|(a, b)| {
                        let (a, b) = (snap(a.min(b)) * bound, snap(a.max(b)) * bound);
                        (a, b)
                    });
                    (FocalElement::new(parts).unwrap(), w / total)
                })
                .collect();
            BeliefModel::new(bound, focal).unwrap()
        },
    )
}

/// Strategy for singleton-only models.
pub fn arb_additive_model(max_focal: usize) -> impl Strategy<Value = BeliefModel> {
    (
        0.5f64..8.0,
        prop::collection::vec((-1.0f64..=1.0, 0.02f64..1.0), 2..=max_focal),
    )
        .prop_map(|(bound, spec)| {
            let total: f64 = spec.iter().map(|s| s.1).sum();
            let focal = spec
                .into_iter()
                .map(|(x, w)| (FocalElement::point(x * bound).unwrap(), w / total))
                .collect();
            BeliefModel::new(bound, focal).unwrap()
        })
}
