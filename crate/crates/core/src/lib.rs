//! Central limit theorems for i.i.d. belief measures on the real line.
//!
//! A belief model is a finite mass assignment on compact focal sets. This
//! crate computes its limit parameters, evaluates the Gaussian limits of
//! one- and two-sided events about the normalized sum, and checks those
//! limits against seeded simulation.

pub mod belief;
pub mod gauss;
pub mod moments;
pub mod harness;
pub mod io;
pub mod montecarlo;

pub use belief::{BeliefModel, FocalElement, IntervalEvent};
pub use moments::ChoquetMoments;
