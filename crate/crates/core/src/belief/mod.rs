//! Finitely supported belief measures on `[−M, M]`.
//!
//! A [`BeliefModel`] is a mass function over finitely many focal elements,
//! each a finite union of closed intervals. The induced belief of an event
//! `A` is the total mass of focal elements contained in `A`, and the
//! plausibility is the total mass of focal elements meeting `A`. Any
//! nonnegative mass function yields a totally monotone capacity, so a model
//! that passes [`BeliefModel::validate`] defines a belief measure; the
//! enumeration check in [`monotone`] exists for tests and for capacities
//! supplied from outside.

mod event;
pub mod monotone;

use std::fmt;

use thiserror::Error;

pub use event::{Endpoint, EventInterval, IntervalEvent};
pub use monotone::{
    total_monotonicity_check, total_monotonicity_check_with, CellGrid, CellSet, MonotonicityError,
    MonotonicityOutcome, MonotonicityWitness, DEFAULT_FAMILY_BUDGET,
};

/// Tolerance on `Σ mass = 1` accepted at load time.
pub const MASS_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedInterval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FocalError {
    #[error("focal element has no parts")]
    Empty,
    #[error("interval [{0}, {1}] has lower end above upper end")]
    Inverted(f64, f64),
    #[error("interval [{0}, {1}] has a non-finite end")]
    NonFinite(f64, f64),
}

/// A nonempty finite union of closed intervals, stored sorted with
/// overlapping or touching parts merged.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalElement {
    parts: Vec<ClosedInterval>,
}

impl FocalElement {
    pub fn new(parts: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, FocalError> {
        let mut raw = Vec::new();
        for (lo, hi) in parts {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(FocalError::NonFinite(lo, hi));
            }
            if lo > hi {
                return Err(FocalError::Inverted(lo, hi));
            }
            raw.push(ClosedInterval { lo, hi });
        }
        if raw.is_empty() {
            return Err(FocalError::Empty);
        }
        raw.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut parts: Vec<ClosedInterval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match parts.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => parts.push(iv),
            }
        }
        Ok(Self { parts })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, FocalError> {
        Self::new([(lo, hi)])
    }

    pub fn point(x: f64) -> Result<Self, FocalError> {
        Self::new([(x, x)])
    }

    /// Builds from parts without sorting or merging. Only meant for
    /// exercising the validator.
    pub fn from_raw_parts(parts: Vec<ClosedInterval>) -> Self {
        Self { parts }
    }

    pub fn parts(&self) -> &[ClosedInterval] {
        &self.parts
    }

    pub fn min(&self) -> f64 {
        self.parts[0].lo
    }

    pub fn max(&self) -> f64 {
        self.parts[self.parts.len() - 1].hi
    }

    pub fn is_singleton(&self) -> bool {
        self.parts.len() == 1 && self.parts[0].lo == self.parts[0].hi
    }

    pub fn map_affine(&self, scale: f64, shift: f64) -> Result<Self, FocalError> {
        assert!(scale > 0.0, "affine maps must preserve order");
        Self::new(self.parts.iter().map(|p| (scale * p.lo + shift, scale * p.hi + shift)))
    }
}

impl fmt::Display for FocalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " U ")?;
            }
            write!(f, "[{}, {}]", p.lo, p.hi)?;
        }
        write!(f, "}}")
    }
}

/// A structural problem found by [`BeliefModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyModel,
    BadBound { bound: f64 },
    MassSumViolation { sum: f64 },
    NonPositiveMass { index: usize, mass: f64 },
    BoundViolation { index: usize, min: f64, max: f64, bound: f64 },
    PartsNotDisjoint { index: usize },
}

impl Violation {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::EmptyModel => "empty_model",
            Violation::BadBound { .. } => "bad_bound",
            Violation::MassSumViolation { .. } => "mass_sum",
            Violation::NonPositiveMass { .. } => "non_positive_mass",
            Violation::BoundViolation { .. } => "bound",
            Violation::PartsNotDisjoint { .. } => "parts_not_disjoint",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyModel => write!(f, "model has no focal elements"),
            Violation::BadBound { bound } => write!(f, "bound M = {bound} is not a positive finite number"),
            Violation::MassSumViolation { sum } => {
                write!(f, "masses sum to {sum}, expected 1 within {MASS_SUM_TOLERANCE:e}")
            }
            Violation::NonPositiveMass { index, mass } => {
                write!(f, "focal element {index} has non-positive mass {mass}")
            }
            Violation::BoundViolation { index, min, max, bound } => write!(
                f,
                "focal element {index} spans [{min}, {max}], outside [-{bound}, {bound}]"
            ),
            Violation::PartsNotDisjoint { index } => {
                write!(f, "focal element {index} has unsorted or overlapping parts")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid belief model: {}", format_violations(.0))]
pub struct InvalidModel(pub Vec<Violation>);

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// The marginal law shared by every coordinate: focal elements with their
/// masses, together with the declared bound `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefModel {
    bound: f64,
    focal: Vec<(FocalElement, f64)>,
}

impl BeliefModel {
    /// Validates and renormalizes the masses once.
    ///
    /// Masses already summing to one within a few ulps are left untouched,
    /// which makes loading a previously written model bit-exact.
    pub fn new(bound: f64, focal: Vec<(FocalElement, f64)>) -> Result<Self, InvalidModel> {
        let model = Self { bound, focal };
        let violations = model.validate();
        if !violations.is_empty() {
            return Err(InvalidModel(violations));
        }
        Ok(model.renormalized())
    }

    /// No checks at all; pair with [`BeliefModel::validate`].
    pub fn new_unchecked(bound: f64, focal: Vec<(FocalElement, f64)>) -> Self {
        Self { bound, focal }
    }

    fn renormalized(mut self) -> Self {
        let sum = self.mass_sum();
        let slack = 4.0 * self.focal.len() as f64 * f64::EPSILON;
        if (sum - 1.0).abs() > slack {
            for (_, m) in &mut self.focal {
                *m /= sum;
            }
        }
        self
    }

    fn mass_sum(&self) -> f64 {
        self.focal.iter().map(|(_, m)| m).sum()
    }

    /// Every violated structural invariant; empty iff the model induces a
    /// belief measure on `[−M, M]`.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.bound.is_finite() && self.bound > 0.0) {
            out.push(Violation::BadBound { bound: self.bound });
        }
        if self.focal.is_empty() {
            out.push(Violation::EmptyModel);
            return out;
        }
        let sum = self.mass_sum();
        if !((sum - 1.0).abs() <= MASS_SUM_TOLERANCE) {
            out.push(Violation::MassSumViolation { sum });
        }
        for (index, (k, m)) in self.focal.iter().enumerate() {
            if !(*m > 0.0) || !m.is_finite() {
                out.push(Violation::NonPositiveMass { index, mass: *m });
            }
            let parts = k.parts();
            let well_formed = !parts.is_empty()
                && parts.iter().all(|p| p.lo <= p.hi)
                && parts.windows(2).all(|w| w[0].hi < w[1].lo);
            if !well_formed {
                out.push(Violation::PartsNotDisjoint { index });
                continue;
            }
            if k.min() < -self.bound || k.max() > self.bound {
                out.push(Violation::BoundViolation {
                    index,
                    min: k.min(),
                    max: k.max(),
                    bound: self.bound,
                });
            }
        }
        out
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn focal(&self) -> &[(FocalElement, f64)] {
        &self.focal
    }

    pub fn len(&self) -> usize {
        self.focal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.focal.is_empty()
    }

    /// All focal elements are single points, i.e. the model is an ordinary
    /// discrete probability law.
    pub fn is_additive(&self) -> bool {
        self.focal.iter().all(|(k, _)| k.is_singleton())
    }

    /// Same focal elements under a different declared bound.
    pub fn with_bound(&self, bound: f64) -> Result<Self, InvalidModel> {
        let model = Self {
            bound,
            focal: self.focal.clone(),
        };
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(InvalidModel(violations))
        }
    }

    /// Applies `x ↦ scale·x + shift` to every focal element and the bound
    /// `M ↦ scale·M + |shift|`.
    pub fn map_affine(&self, scale: f64, shift: f64) -> Result<Self, InvalidModel> {
        let focal = self
            .focal
            .iter()
            .map(|(k, m)| {
                k.map_affine(scale, shift)
                    .map(|k| (k, *m))
                    .map_err(|_| InvalidModel(vec![Violation::BadBound { bound: self.bound }]))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(scale * self.bound + shift.abs(), focal)
    }

    /// `ν(A)`: mass of focal elements contained in `event`.
    pub fn belief(&self, event: &IntervalEvent) -> f64 {
        self.focal
            .iter()
            .filter(|(k, _)| event.contains_focal(k))
            .map(|(_, m)| m)
            .sum::<f64>()
            .min(1.0)
    }

    /// `V(A) = 1 − ν(Aᶜ)`: mass of focal elements meeting `event`.
    pub fn plausibility(&self, event: &IntervalEvent) -> f64 {
        self.focal
            .iter()
            .filter(|(k, _)| event.meets_focal(k))
            .map(|(_, m)| m)
            .sum::<f64>()
            .min(1.0)
    }
}

/// Free-function form of [`BeliefModel::validate`].
pub fn validate_model(model: &BeliefModel) -> Vec<Violation> {
    model.validate()
}

pub fn belief(model: &BeliefModel, event: &IntervalEvent) -> f64 {
    model.belief(event)
}

pub fn plausibility(model: &BeliefModel, event: &IntervalEvent) -> f64 {
    model.plausibility(event)
}

/// Shorthand models used across tests, docs and the CLI.
pub mod catalog {
    use super::*;

    /// `m({1}) = p_low`, `m({0}) = 1 − p_high`, `m({0,1}) = p_high − p_low`,
    /// dropping zero masses. `M = 1`.
    pub fn bernoulli(p_low: f64, p_high: f64) -> Result<BeliefModel, InvalidModel> {
        let entries = [
            (FocalElement::point(1.0), p_low),
            (FocalElement::point(0.0), 1.0 - p_high),
            (FocalElement::new([(0.0, 0.0), (1.0, 1.0)]), p_high - p_low),
        ];
        let focal = entries
            .into_iter()
            .filter(|(_, m)| *m != 0.0)
            .map(|(k, m)| (k.expect("constant focal elements are valid"), m))
            .collect();
        BeliefModel::new(1.0, focal)
    }

    /// `m([0,1]) = m([1,3]) = 1/2`, `M = 3`.
    pub fn two_interval() -> BeliefModel {
        BeliefModel::new(
            3.0,
            vec![
                (FocalElement::interval(0.0, 1.0).unwrap(), 0.5),
                (FocalElement::interval(1.0, 3.0).unwrap(), 0.5),
            ],
        )
        .unwrap()
    }

    /// `m({−1}) = m({1}) = 1/2`, `M = 1`.
    pub fn symmetric_coin() -> BeliefModel {
        BeliefModel::new(
            1.0,
            vec![
                (FocalElement::point(-1.0).unwrap(), 0.5),
                (FocalElement::point(1.0).unwrap(), 0.5),
            ],
        )
        .unwrap()
    }

    /// Single focal element `[−M, M]`.
    pub fn vacuous(bound: f64) -> BeliefModel {
        BeliefModel::new(bound, vec![(FocalElement::interval(-bound, bound).unwrap(), 1.0)]).unwrap()
    }
}
