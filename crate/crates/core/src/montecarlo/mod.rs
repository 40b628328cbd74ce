//! Seeded simulation of the i.i.d. product belief measure.
//!
//! The belief of an event about `ΣXᵢ` equals the probability, under i.i.d.
//! focal-set sampling, that every point of `K₁ × … × Kₙ` lies in the event.
//! For the one- and two-sided events used here that reduces to conditions
//! on `S_min = Σ min Kᵢ` and `S_max = Σ max Kᵢ`, so a trial draws `n` focal
//! indices and accumulates the two sums.
//!
//! Replications share coordinates across the `n` schedule: the trial of
//! length `n` in replication `r` is the length-`n` prefix of the longest
//! trial. Each `(n, event)` frequency is still an average over `reps`
//! independent trials.

mod stream;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::belief::BeliefModel;
use crate::moments::{ChoquetMoments, DEGENERATE_SD};

pub use stream::{derive_stream, StreamFactory, TrialStream};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "BELIEF_CLT_WORKERS";

pub const DEFAULT_REPS: u64 = 1_000_000;
pub const DEFAULT_N_VALUES: [u64; 6] = [16, 64, 256, 1024, 4096, 16384];
pub const DEFAULT_ALPHA_GRID: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
pub const DEFAULT_SEED: u64 = 0x5EED_0000_C17B_E11F;
pub const DEFAULT_SLACK: f64 = 1.0;

const CHUNK_REPS: u64 = 2048;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("degenerate variance (lower sd = {lower_sd:e}, upper sd = {upper_sd:e}); the normalized sums are undefined")]
    DegenerateVariance { lower_sd: f64, upper_sd: f64 },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("could not build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Worker count from [`WORKERS_ENV`], defaulting to the number of logical
/// cores.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Draws focal indices from the mass law using one 32-bit word per draw.
/// Masses are quantized to multiples of 2⁻³².
#[derive(Debug, Clone)]
pub struct FocalSampler {
    thresholds: Vec<u64>,
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl FocalSampler {
    pub fn new(model: &BeliefModel) -> Self {
        let focal = model.focal();
        let scale = 4_294_967_296.0_f64;
        let mut cum = 0.0;
        let thresholds = focal[..focal.len().saturating_sub(1)]
            .iter()
            .map(|(_, m)| {
                cum += m;
                (cum * scale).round().min(scale) as u64
            })
            .collect();
        Self {
            thresholds,
            mins: focal.iter().map(|(k, _)| k.min()).collect(),
            maxs: focal.iter().map(|(k, _)| k.max()).collect(),
        }
    }

    pub fn categories(&self) -> usize {
        self.mins.len()
    }

    #[inline]
    pub fn index(&self, word: u32) -> usize {
        let x = u64::from(word);
        if self.thresholds.len() <= 16 {
            self.thresholds.iter().map(|&t| usize::from(x >= t)).sum()
        } else {
            self.thresholds.partition_point(|&t| t <= x)
        }
    }

    /// `(Σ count·min, Σ count·max)` in focal order.
    pub fn sums(&self, counts: &[u32]) -> (f64, f64) {
        let mut s_min = 0.0;
        let mut s_max = 0.0;
        for ((&c, &lo), &hi) in counts.iter().zip(&self.mins).zip(&self.maxs) {
            s_min += f64::from(c) * lo;
            s_max += f64::from(c) * hi;
        }
        (s_min, s_max)
    }
}

/// Draws `n` focal elements from `stream` and returns `(S_min, S_max)`.
pub fn sample_trial(model: &BeliefModel, n: u64, stream: &mut TrialStream) -> (f64, f64) {
    let sampler = FocalSampler::new(model);
    let mut counts = vec![0u32; sampler.categories()];
    for _ in 0..n {
        counts[sampler.index(stream.next_word())] += 1;
    }
    sampler.sums(&counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    /// `(S_min − nμ̲)/(√n σ̲) ≥ α₁`
    OneSidedLower,
    /// `(S_max − nμ̄)/(√n σ̄) < α₂`
    OneSidedUpper,
    /// `α₁ ≤ (S_min − nμ̲)/(√n σ̲)` and `(S_max − nμ̄)/(√n σ̄) ≤ α₂`
    TwoSided,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::OneSidedLower => "one_sided_lower",
            EventKind::OneSidedUpper => "one_sided_upper",
            EventKind::TwoSided => "two_sided",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one_sided_lower" => Some(EventKind::OneSidedLower),
            "one_sided_upper" => Some(EventKind::OneSidedUpper),
            "two_sided" => Some(EventKind::TwoSided),
            _ => None,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An event on the normalized sums. One-sided events carry the unused
/// limit as an infinity: lower events have `alpha2 = +∞`, upper events
/// `alpha1 = −∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub kind: EventKind,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl EventSpec {
    pub fn lower(alpha: f64) -> Self {
        Self {
            kind: EventKind::OneSidedLower,
            alpha1: alpha,
            alpha2: f64::INFINITY,
        }
    }

    pub fn upper(alpha: f64) -> Self {
        Self {
            kind: EventKind::OneSidedUpper,
            alpha1: f64::NEG_INFINITY,
            alpha2: alpha,
        }
    }

    pub fn two_sided(alpha1: f64, alpha2: f64) -> Self {
        Self {
            kind: EventKind::TwoSided,
            alpha1,
            alpha2,
        }
    }

    /// Whether normalized sums `(z_lower, z_upper)` fall in the event.
    #[inline]
    pub fn contains(&self, z_lower: f64, z_upper: f64) -> bool {
        match self.kind {
            EventKind::OneSidedLower => z_lower >= self.alpha1,
            EventKind::OneSidedUpper => z_upper < self.alpha2,
            EventKind::TwoSided => self.alpha1 <= z_lower && z_upper <= self.alpha2,
        }
    }
}

/// Thresholds used at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSet {
    pub one_sided: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
}

impl AlphaSet {
    /// The grid `{−2, −1, −½, 0, ½, 1, 2}` and all its pairs with `α₁ ≤ α₂`.
    pub fn default_grid() -> Self {
        Self::with_grid_pairs(DEFAULT_ALPHA_GRID.to_vec())
    }

    pub fn with_grid_pairs(one_sided: Vec<f64>) -> Self {
        let pairs = grid_pairs(&one_sided);
        Self { one_sided, pairs }
    }

    /// Events in a fixed order: lower, upper, then two-sided.
    pub fn events(&self) -> Vec<EventSpec> {
        let mut out = Vec::with_capacity(2 * self.one_sided.len() + self.pairs.len());
        out.extend(self.one_sided.iter().map(|&a| EventSpec::lower(a)));
        out.extend(self.one_sided.iter().map(|&a| EventSpec::upper(a)));
        out.extend(self.pairs.iter().map(|&(a, b)| EventSpec::two_sided(a, b)));
        out
    }
}

/// Cartesian pairs of `grid` with `α₁ ≤ α₂`.
pub fn grid_pairs(grid: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs = Vec::new();
    for &a in grid {
        for &b in grid {
            if a <= b {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Experiment grid for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPlan {
    pub run_id: String,
    pub model: BeliefModel,
    /// Strictly increasing trial lengths.
    pub n_values: Vec<u64>,
    pub reps: u64,
    pub seed: u64,
    pub alphas: AlphaSet,
    /// Replaces `alphas` at particular `n`.
    pub alpha_overrides: BTreeMap<u64, AlphaSet>,
    /// Berry–Esseen allowance in the tolerance `3·SE + slack/√n`.
    pub slack: f64,
}

impl SimPlan {
    pub fn new(model: BeliefModel) -> Self {
        Self {
            run_id: "run".to_string(),
            model,
            n_values: DEFAULT_N_VALUES.to_vec(),
            reps: DEFAULT_REPS,
            seed: DEFAULT_SEED,
            alphas: AlphaSet::default_grid(),
            alpha_overrides: BTreeMap::new(),
            slack: DEFAULT_SLACK,
        }
    }

    pub fn alphas_at(&self, n: u64) -> &AlphaSet {
        self.alpha_overrides.get(&n).unwrap_or(&self.alphas)
    }

    /// Checks the hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>, SimError> {
        let bad = |msg: String| Err(SimError::InvalidPlan(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.n_values.is_empty() {
            return bad("n_values is empty".into());
        }
        if self.n_values[0] == 0 {
            return bad("n_values must be positive".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_values must be strictly increasing".into());
        }
        if *self.n_values.last().unwrap() > u64::from(u32::MAX) {
            return bad("n_values must not exceed 2^32 - 1".into());
        }
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return bad(format!("slack must be nonnegative and finite, got {}", self.slack));
        }
        if let Some(n) = self.alpha_overrides.keys().find(|n| !self.n_values.contains(n)) {
            return bad(format!("alpha override for n = {n}, which is not in n_values"));
        }
        let mut warnings = Vec::new();
        for (label, set) in std::iter::once((None, &self.alphas))
            .chain(self.alpha_overrides.iter().map(|(n, s)| (Some(*n), s)))
        {
            let all = set
                .one_sided
                .iter()
                .chain(set.pairs.iter().flat_map(|(a, b)| [a, b]));
            if all.clone().any(|a| a.is_nan()) {
                return bad("alpha values must not be NaN".into());
            }
            for &(a, b) in &set.pairs {
                if a > b {
                    let at = label.map_or(String::new(), |n| format!(" at n = {n}"));
                    warnings.push(format!("two-sided pair ({a}, {b}){at} has alpha1 > alpha2"));
                }
            }
        }
        Ok(warnings)
    }
}

/// Empirical frequency of one event at one `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventEstimate {
    pub n: u64,
    pub event: EventSpec,
    pub count: u64,
    pub reps: u64,
}

impl EventEstimate {
    pub fn frequency(&self) -> f64 {
        self.count as f64 / self.reps as f64
    }

    /// Binomial standard error `√(f(1−f)/reps)`.
    pub fn se(&self) -> f64 {
        let f = self.frequency();
        (f * (1.0 - f) / self.reps as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub run_id: String,
    pub seed: u64,
    pub reps: u64,
    /// Ordered by `n`, then by the event order of [`AlphaSet::events`].
    pub estimates: Vec<EventEstimate>,
}

impl SimResult {
    pub fn at(&self, n: u64, event: &EventSpec) -> Option<&EventEstimate> {
        self.estimates.iter().find(|e| e.n == n && e.event == *event)
    }
}

struct Checkpoint {
    n: u64,
    center_lower: f64,
    scale_lower: f64,
    center_upper: f64,
    scale_upper: f64,
    events: Vec<EventSpec>,
    offset: usize,
}

fn checkpoints(plan: &SimPlan, moments: &ChoquetMoments) -> (Vec<Checkpoint>, usize) {
    let mut offset = 0;
    let cps = plan
        .n_values
        .iter()
        .map(|&n| {
            let events = plan.alphas_at(n).events();
            let root = (n as f64).sqrt();
            let cp = Checkpoint {
                n,
                center_lower: n as f64 * moments.lower_mean,
                scale_lower: root * moments.lower_sd,
                center_upper: n as f64 * moments.upper_mean,
                scale_upper: root * moments.upper_sd,
                offset,
                events,
            };
            offset += cp.events.len();
            cp
        })
        .collect();
    (cps, offset)
}

fn run_chunk(
    factory: &StreamFactory,
    sampler: &FocalSampler,
    checkpoints: &[Checkpoint],
    total_events: usize,
    reps: std::ops::Range<u64>,
) -> Vec<u64> {
    let mut tally = vec![0u64; total_events];
    let mut counts = vec![0u32; sampler.categories()];
    for rep in reps {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut stream = factory.stream(rep, 0);
        let mut drawn = 0u64;
        for cp in checkpoints {
            while drawn < cp.n {
                counts[sampler.index(stream.next_word())] += 1;
                drawn += 1;
            }
            let (s_min, s_max) = sampler.sums(&counts);
            let z_lower = (s_min - cp.center_lower) / cp.scale_lower;
            let z_upper = (s_max - cp.center_upper) / cp.scale_upper;
            for (slot, ev) in tally[cp.offset..].iter_mut().zip(&cp.events) {
                *slot += u64::from(ev.contains(z_lower, z_upper));
            }
        }
    }
    tally
}

/// Estimates every event of the plan using the worker count from
/// [`workers_from_env`].
pub fn estimate_events(plan: &SimPlan, moments: &ChoquetMoments) -> Result<SimResult, SimError> {
    estimate_events_with_workers(plan, moments, workers_from_env())
}

/// Estimates every event of the plan on `workers` threads. The result does
/// not depend on `workers`.
pub fn estimate_events_with_workers(
    plan: &SimPlan,
    moments: &ChoquetMoments,
    workers: usize,
) -> Result<SimResult, SimError> {
    plan.validate()?;
    if moments.lower_sd < DEGENERATE_SD || moments.upper_sd < DEGENERATE_SD {
        return Err(SimError::DegenerateVariance {
            lower_sd: moments.lower_sd,
            upper_sd: moments.upper_sd,
        });
    }
    let (cps, total_events) = checkpoints(plan, moments);
    let sampler = FocalSampler::new(&plan.model);
    let factory = StreamFactory::new(plan.seed);
    let chunks = plan.reps.div_ceil(CHUNK_REPS);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let tally = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK_REPS;
                let end = (start + CHUNK_REPS).min(plan.reps);
                run_chunk(&factory, &sampler, &cps, total_events, start..end)
            })
            .reduce(
                || vec![0u64; total_events],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    });

    let estimates = cps
        .iter()
        .flat_map(|cp| {
            cp.events.iter().enumerate().map(|(i, ev)| EventEstimate {
                n: cp.n,
                event: *ev,
                count: tally[cp.offset + i],
                reps: plan.reps,
            })
        })
        .collect();
    Ok(SimResult {
        run_id: plan.run_id.clone(),
        seed: plan.seed,
        reps: plan.reps,
        estimates,
    })
}
