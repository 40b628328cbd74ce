//! Interval events: finite unions of real intervals with closed, open or
//! infinite endpoints, kept in a canonical sorted and disjoint form.

use std::cmp::Ordering;
use std::fmt;

use super::FocalElement;

/// One end of an interval.
///
/// Infinite ends are explicit variants; `Closed(f64::INFINITY)` and friends
/// are folded into `Unbounded` on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Unbounded,
    Closed(f64),
    Open(f64),
}

impl Endpoint {
    fn normalized(self) -> Self {
        match self {
            Endpoint::Closed(x) | Endpoint::Open(x) if x.is_infinite() => Endpoint::Unbounded,
            e => e,
        }
    }

    fn flipped(self) -> Self {
        match self {
            Endpoint::Unbounded => Endpoint::Unbounded,
            Endpoint::Closed(x) => Endpoint::Open(x),
            Endpoint::Open(x) => Endpoint::Closed(x),
        }
    }

    fn value(self) -> Option<f64> {
        match self {
            Endpoint::Unbounded => None,
            Endpoint::Closed(x) | Endpoint::Open(x) => Some(x),
        }
    }

    fn is_closed(self) -> bool {
        matches!(self, Endpoint::Closed(_))
    }
}

/// Orders lower endpoints by the set of points they admit: a smaller key
/// admits more points. At equal values a closed end admits more than an
/// open one.
fn cmp_lower(a: Endpoint, b: Endpoint) -> Ordering {
    match (a.value(), b.value()) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x
            .partial_cmp(&y)
            .unwrap_or(Ordering::Equal)
            .then_with(|| match (a.is_closed(), b.is_closed()) {
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                _ => Ordering::Equal,
            }),
    }
}

/// Orders upper endpoints; a larger key admits more points.
fn cmp_upper(a: Endpoint, b: Endpoint) -> Ordering {
    match (a.value(), b.value()) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x
            .partial_cmp(&y)
            .unwrap_or(Ordering::Equal)
            .then_with(|| match (a.is_closed(), b.is_closed()) {
                (true, false) => Ordering::Greater,
                (false, true) => Ordering::Less,
                _ => Ordering::Equal,
            }),
    }
}

fn lower_admits(lo: Endpoint, x: f64) -> bool {
    match lo {
        Endpoint::Unbounded => true,
        Endpoint::Closed(a) => x >= a,
        Endpoint::Open(a) => x > a,
    }
}

fn upper_admits(hi: Endpoint, x: f64) -> bool {
    match hi {
        Endpoint::Unbounded => true,
        Endpoint::Closed(b) => x <= b,
        Endpoint::Open(b) => x < b,
    }
}

/// A single interval with explicit endpoint kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventInterval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl EventInterval {
    pub fn new(lo: Endpoint, hi: Endpoint) -> Self {
        Self {
            lo: lo.normalized(),
            hi: hi.normalized(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match (self.lo.value(), self.hi.value()) {
            (Some(a), Some(b)) => {
                a.is_nan()
                    || b.is_nan()
                    || a > b
                    || (a == b && !(self.lo.is_closed() && self.hi.is_closed()))
            }
            _ => false,
        }
    }

    pub fn contains_point(&self, x: f64) -> bool {
        lower_admits(self.lo, x) && upper_admits(self.hi, x)
    }

    /// `[a, b] ⊆ self`, using exact endpoint comparison.
    pub fn contains_closed(&self, a: f64, b: f64) -> bool {
        lower_admits(self.lo, a) && upper_admits(self.hi, b)
    }

    /// `[a, b] ∩ self ≠ ∅`.
    pub fn meets_closed(&self, a: f64, b: f64) -> bool {
        let lo = if cmp_lower(Endpoint::Closed(a), self.lo) == Ordering::Less {
            self.lo
        } else {
            Endpoint::Closed(a)
        };
        let hi = if cmp_upper(Endpoint::Closed(b), self.hi) == Ordering::Greater {
            self.hi
        } else {
            Endpoint::Closed(b)
        };
        !EventInterval { lo, hi }.is_empty()
    }

    /// True when `self ∪ next` is a single interval; `self` must not start
    /// after `next`.
    fn joins(&self, next: &EventInterval) -> bool {
        match (self.hi.value(), next.lo.value()) {
            (None, _) | (_, None) => true,
            (Some(b), Some(a)) => b > a || (b == a && (self.hi.is_closed() || next.lo.is_closed())),
        }
    }
}

impl fmt::Display for EventInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            Endpoint::Unbounded => write!(f, "(-inf")?,
            Endpoint::Closed(a) => write!(f, "[{a}")?,
            Endpoint::Open(a) => write!(f, "({a}")?,
        }
        match self.hi {
            Endpoint::Unbounded => write!(f, ", inf)"),
            Endpoint::Closed(b) => write!(f, ", {b}]"),
            Endpoint::Open(b) => write!(f, ", {b})"),
        }
    }
}

/// A finite union of intervals in canonical form: sorted, pairwise
/// disjoint, maximal (touching parts are merged) and without empty parts.
///
/// Because the parts are the connected components of the union, a closed
/// interval lies in the event iff it lies in one part.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalEvent {
    parts: Vec<EventInterval>,
}

impl IntervalEvent {
    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn whole_line() -> Self {
        Self::from_interval(EventInterval::new(Endpoint::Unbounded, Endpoint::Unbounded))
    }

    pub fn from_interval(interval: EventInterval) -> Self {
        Self::union_of([interval])
    }

    /// Canonicalizes an arbitrary collection of intervals.
    pub fn union_of(intervals: impl IntoIterator<Item = EventInterval>) -> Self {
        let mut parts: Vec<EventInterval> = intervals
            .into_iter()
            .map(|i| EventInterval::new(i.lo, i.hi))
            .filter(|i| !i.is_empty())
            .collect();
        parts.sort_by(|x, y| cmp_lower(x.lo, y.lo));
        let mut merged: Vec<EventInterval> = Vec::with_capacity(parts.len());
        for part in parts {
            match merged.last_mut() {
                Some(last) if last.joins(&part) => {
                    if cmp_upper(part.hi, last.hi) == Ordering::Greater {
                        last.hi = part.hi;
                    }
                }
                _ => merged.push(part),
            }
        }
        Self { parts: merged }
    }

    /// `[a, b]`
    pub fn closed(a: f64, b: f64) -> Self {
        Self::from_interval(EventInterval::new(Endpoint::Closed(a), Endpoint::Closed(b)))
    }

    /// `[t, ∞)`
    pub fn at_least(t: f64) -> Self {
        Self::from_interval(EventInterval::new(Endpoint::Closed(t), Endpoint::Unbounded))
    }

    /// `(t, ∞)`
    pub fn greater_than(t: f64) -> Self {
        Self::from_interval(EventInterval::new(Endpoint::Open(t), Endpoint::Unbounded))
    }

    /// `(−∞, t]`
    pub fn at_most(t: f64) -> Self {
        Self::from_interval(EventInterval::new(Endpoint::Unbounded, Endpoint::Closed(t)))
    }

    /// `(−∞, t)`
    pub fn less_than(t: f64) -> Self {
        Self::from_interval(EventInterval::new(Endpoint::Unbounded, Endpoint::Open(t)))
    }

    pub fn point(x: f64) -> Self {
        Self::closed(x, x)
    }

    pub fn parts(&self) -> &[EventInterval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn union(&self, other: &IntervalEvent) -> Self {
        Self::union_of(self.parts.iter().chain(other.parts.iter()).copied())
    }

    pub fn complement(&self) -> Self {
        let mut gaps = Vec::with_capacity(self.parts.len() + 1);
        // None once a part reaches +∞
        let mut lower = Some(Endpoint::Unbounded);
        for part in &self.parts {
            if let Some(lo) = lower {
                if part.lo != Endpoint::Unbounded {
                    gaps.push(EventInterval::new(lo, part.lo.flipped()));
                }
            }
            lower = match part.hi {
                Endpoint::Unbounded => None,
                hi => Some(hi.flipped()),
            };
        }
        if let Some(lo) = lower {
            gaps.push(EventInterval::new(lo, Endpoint::Unbounded));
        }
        Self::union_of(gaps)
    }

    pub fn intersection(&self, other: &IntervalEvent) -> Self {
        self.complement().union(&other.complement()).complement()
    }

    pub fn contains_point(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains_point(x))
    }

    /// Every part of `focal` lies inside the event.
    pub fn contains_focal(&self, focal: &FocalElement) -> bool {
        focal
            .parts()
            .iter()
            .all(|iv| self.parts.iter().any(|p| p.contains_closed(iv.lo, iv.hi)))
    }

    /// Some point of `focal` lies inside the event.
    pub fn meets_focal(&self, focal: &FocalElement) -> bool {
        focal
            .parts()
            .iter()
            .any(|iv| self.parts.iter().any(|p| p.meets_closed(iv.lo, iv.hi)))
    }

    /// `self ⊆ other`
    pub fn is_subset_of(&self, other: &IntervalEvent) -> bool {
        self.intersection(&other.complement()).is_empty()
    }
}

impl fmt::Display for IntervalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " U ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}
