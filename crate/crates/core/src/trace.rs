//! Per-step provenance and whole-chain summaries.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::point::Point;
use crate::target::{eval, LogTarget};

/// Current chain position together with its cached log-density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub point: Point,
    pub log_target: f64,
}

impl ChainState {
    pub fn new<T: LogTarget + ?Sized>(t: &T, point: Point) -> Result<Self> {
        let log_target = eval(t, point.coords())?;
        Ok(ChainState { point, log_target })
    }
}

/// One transition. `state` is the position the step started from.
///
/// For monotonic-skipping steps `log_target_at_state` holds `-f(state)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub state: Point,
    pub proposal: Point,
    /// Skipping-chain steps taken, `T_A ∧ K`; always 1 for random walk steps.
    pub skip_count: u64,
    pub accepted: bool,
    pub log_target_at_state: f64,
    /// Log-density at the proposal.
    pub log_target_at_proposal: f64,
}

impl StepRecord {
    /// The state after this step.
    pub fn next_state(&self) -> ChainState {
        if self.accepted {
            ChainState {
                point: self.proposal.clone(),
                log_target: self.log_target_at_proposal,
            }
        } else {
            ChainState {
                point: self.state.clone(),
                log_target: self.log_target_at_state,
            }
        }
    }

    /// Accepted move that crossed the complement of the support.
    pub fn is_skip(&self) -> bool {
        self.accepted && self.skip_count >= 2
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainResult {
    pub trace: Vec<StepRecord>,
    pub final_state: ChainState,
    /// accepted steps / steps
    pub acceptance_rate: f64,
    /// accepted steps with `skip_count >= 2` / steps
    pub skip_fraction: f64,
    /// Target evaluations made by the steps (the initial evaluation excluded).
    pub evals: u64,
}

impl ChainResult {
    pub fn from_trace(trace: Vec<StepRecord>, final_state: ChainState, evals: u64) -> Self {
        let n = trace.len().max(1) as f64;
        let accepted = trace.iter().filter(|r| r.accepted).count() as f64;
        let skips = trace.iter().filter(|r| r.is_skip()).count() as f64;
        ChainResult {
            trace,
            final_state,
            acceptance_rate: accepted / n,
            skip_fraction: skips / n,
            evals,
        }
    }

    /// States visited, `X_0 .. X_{n-1}`, followed by the final state.
    pub fn states(&self) -> impl Iterator<Item = &Point> {
        self.trace
            .iter()
            .map(|r| &r.state)
            .chain(std::iter::once(&self.final_state.point))
    }
}
