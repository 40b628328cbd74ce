//! Exhaustive check of the inclusion–exclusion inequality
//!
//! ```text
//! ν(B₁ ∪ … ∪ Bₖ) ≥ Σ_{∅≠J⊆{1..k}} (−1)^{|J|+1} ν(∩_{j∈J} Bⱼ)
//! ```
//!
//! over the finite event algebra generated by a grid of points. A grid
//! `p₁ < … < pₖ` splits the line into the `2k + 1` cells
//! `(−∞,p₁), {p₁}, (p₁,p₂), …, {pₖ}, (pₖ,∞)`; events are unions of cells.

use thiserror::Error;

use super::{BeliefModel, EventInterval, Endpoint, IntervalEvent};

/// Default cap on the number of event families enumerated.
pub const DEFAULT_FAMILY_BUDGET: u128 = 20_000_000;

const ROUNDING_SLACK: f64 = 1e-12;

/// Set of cells, one bit per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellSet(pub u64);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonotonicityError {
    #[error("cell algebra too large: {families} families exceed the budget of {budget}")]
    GridTooLarge { families: u128, budget: u128 },
    #[error("order must be 2 or 3, got {0}")]
    InvalidOrder(usize),
    #[error("grid point {0} is not finite")]
    InvalidGrid(f64),
}

/// Partition of the real line induced by a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    points: Vec<f64>,
}

impl CellGrid {
    pub fn new(points: &[f64]) -> Result<Self, MonotonicityError> {
        if let Some(&bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(MonotonicityError::InvalidGrid(bad));
        }
        let mut points = points.to_vec();
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self { points })
    }

    pub fn cell_count(&self) -> usize {
        2 * self.points.len() + 1
    }

    fn cell(&self, index: usize) -> EventInterval {
        let k = self.points.len();
        if k == 0 {
            return EventInterval::new(Endpoint::Unbounded, Endpoint::Unbounded);
        }
        if index % 2 == 1 {
            let p = self.points[index / 2];
            return EventInterval::new(Endpoint::Closed(p), Endpoint::Closed(p));
        }
        let lo = if index == 0 {
            Endpoint::Unbounded
        } else {
            Endpoint::Open(self.points[index / 2 - 1])
        };
        let hi = if index / 2 == k {
            Endpoint::Unbounded
        } else {
            Endpoint::Open(self.points[index / 2])
        };
        EventInterval::new(lo, hi)
    }

    /// The interval event made of the cells in `set`.
    pub fn event(&self, set: CellSet) -> IntervalEvent {
        IntervalEvent::union_of(
            (0..self.cell_count())
                .filter(|i| set.0 >> i & 1 == 1)
                .map(|i| self.cell(i)),
        )
    }
}

/// A family of events violating the inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityWitness {
    pub family: Vec<CellSet>,
    /// `ν` of the union.
    pub union_value: f64,
    /// Inclusion–exclusion sum of the intersections.
    pub alternating_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MonotonicityOutcome {
    Pass { families_checked: u128 },
    Fail(MonotonicityWitness),
}

impl MonotonicityOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, MonotonicityOutcome::Pass { .. })
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Checks the belief measure induced by `model` on the cell algebra of
/// `grid` for every family of at most `order` events.
pub fn total_monotonicity_check(
    model: &BeliefModel,
    grid: &[f64],
    order: usize,
) -> Result<MonotonicityOutcome, MonotonicityError> {
    let cells = CellGrid::new(grid)?;
    total_monotonicity_check_with(&cells, order, DEFAULT_FAMILY_BUDGET, |s| {
        model.belief(&cells.event(s))
    })
}

/// Same check for an arbitrary set function on cell sets.
pub fn total_monotonicity_check_with<F>(
    grid: &CellGrid,
    order: usize,
    budget: u128,
    capacity: F,
) -> Result<MonotonicityOutcome, MonotonicityError>
where
    F: Fn(CellSet) -> f64,
{
    if !(2..=3).contains(&order) {
        return Err(MonotonicityError::InvalidOrder(order));
    }
    let cells = grid.cell_count();
    if cells > 20 {
        return Err(MonotonicityError::GridTooLarge {
            families: u128::MAX,
            budget,
        });
    }
    let events = 1u128 << cells;
    let families: u128 = (2..=order as u128).map(|j| binomial(events, j)).sum();
    if families > budget {
        return Err(MonotonicityError::GridTooLarge { families, budget });
    }

    // Tabulate ν on every cell set once.
    let table: Vec<f64> = (0..events as u64).map(|s| capacity(CellSet(s))).collect();
    let nu = |s: u64| table[s as usize];
    let n = events as u64;

    let check = |family: &[u64]| -> Option<MonotonicityWitness> {
        let union = family.iter().fold(0, |acc, s| acc | s);
        let mut alternating = 0.0;
        for subset in 1u32..(1 << family.len()) {
            let inter = family
                .iter()
                .enumerate()
                .filter(|(i, _)| subset >> i & 1 == 1)
                .fold(u64::MAX, |acc, (_, s)| acc & s);
            let sign = if subset.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            alternating += sign * nu(inter);
        }
        (nu(union) + ROUNDING_SLACK < alternating).then(|| MonotonicityWitness {
            family: family.iter().map(|&s| CellSet(s)).collect(),
            union_value: nu(union),
            alternating_sum: alternating,
        })
    };

    let mut checked = 0u128;
    for a in 0..n {
        for b in a + 1..n {
            checked += 1;
            if let Some(w) = check(&[a, b]) {
                return Ok(MonotonicityOutcome::Fail(w));
            }
            if order == 3 {
                for c in b + 1..n {
                    checked += 1;
                    if let Some(w) = check(&[a, b, c]) {
                        return Ok(MonotonicityOutcome::Fail(w));
                    }
                }
            }
        }
    }
    Ok(MonotonicityOutcome::Pass {
        families_checked: checked,
    })
}
