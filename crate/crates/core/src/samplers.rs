//! Skipping sampler, random walk Metropolis, the monotonic skipping sampler
//! and chain runners.
//!
//! A skipping step draws an initial offset `Y - X` from the underlying
//! proposal, fixes the direction `Φ`, and while the current point lies outside
//! the support keeps adding independent radial increments along `Φ` until the
//! support is entered or the halting index is reached. The endpoint is
//! accepted with the usual Metropolis ratio because the resulting proposal is
//! symmetric on the support.

use std::sync::Arc;

use crate::doubling::{traverse, ConvexObstacle, ExponentialIncrements, DEFAULT_EXPONENT_CAP};
use crate::error::{Error, Result};
use crate::optimize::Objective;
use crate::point::{check_dim, check_unit, Point};
use crate::proposals::{
    DirectionalDensity, HaltDraw, HaltingIndex, ProposalKind, RadiusLaw, UnderlyingProposal,
};
use crate::rng::RngStream;
use crate::target::{eval, log_acceptance_from, Counted, LogTarget};
use crate::trace::{ChainResult, ChainState, StepRecord};

#[derive(Clone)]
pub struct SkippingConfig {
    pub proposal: UnderlyingProposal,
    pub halting: HaltingIndex,
    /// Traverse `obstacles` with the doubling search. Only used when the
    /// proposal is radially symmetric with exponential radius.
    pub use_doubling: bool,
    pub obstacles: Vec<ConvexObstacle>,
    /// Draw the direction from this density and correct the acceptance ratio.
    pub angular: Option<Arc<dyn DirectionalDensity>>,
}

impl std::fmt::Debug for SkippingConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SkippingConfig")
            .field("proposal", &self.proposal)
            .field("halting", &self.halting)
            .field("use_doubling", &self.use_doubling)
            .field("obstacles", &self.obstacles)
            .field("angular", &self.angular.is_some())
            .finish()
    }
}

impl SkippingConfig {
    pub fn new(proposal: UnderlyingProposal, halting: HaltingIndex) -> Self {
        SkippingConfig {
            proposal,
            halting,
            use_doubling: false,
            obstacles: Vec::new(),
            angular: None,
        }
    }

    pub fn with_doubling(mut self, obstacles: Vec<ConvexObstacle>) -> Self {
        self.use_doubling = true;
        self.obstacles = obstacles;
        self
    }

    pub fn with_angular(mut self, angular: Arc<dyn DirectionalDensity>) -> Self {
        self.angular = Some(angular);
        self
    }

    fn doubling_increments(&self) -> Option<ExponentialIncrements> {
        if !self.use_doubling || self.obstacles.is_empty() || self.proposal.equal_increments() {
            return None;
        }
        match self.proposal.kind() {
            ProposalKind::RadiallySymmetric(RadiusLaw::Exponential { rate }) => {
                ExponentialIncrements::new(*rate).ok()
            }
            _ => None,
        }
    }
}

/// Output of the skipping chain for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipProposal {
    pub z: Point,
    pub log_target: f64,
    /// `T_A ∧ K`
    pub skip_count: u64,
    pub direction: Vec<f64>,
}

/// Runs the skipping chain from `x` along `phi`, starting at `z1 = x + offset`.
///
/// `first_increment` is `|z1 - x|`; later increments come from the proposal's
/// radial law given `phi` (or repeat `first_increment` under equal increments).
#[allow(clippy::too_many_arguments)]
pub fn skip_along_ray<T: LogTarget + ?Sized>(
    t: &T,
    z1: Point,
    phi: &[f64],
    first_increment: f64,
    halt: HaltDraw,
    cfg: &SkippingConfig,
    rng: &mut RngStream,
) -> Result<SkipProposal> {
    let limit = halt.limit();
    let doubling = cfg.doubling_increments();
    let mut z = z1;
    let mut lz = eval(t, z.coords())?;
    let mut k = 1u64;
    while lz == f64::NEG_INFINITY && k < limit {
        if let Some(inc) = doubling.as_ref() {
            if let Some(obstacle) = cfg.obstacles.iter().find(|b| b.contains(z.coords())) {
                let from = z.clone();
                let tr = traverse(
                    |s| Ok(obstacle.contains(from.offset(phi, s)?.coords())),
                    inc,
                    limit - k,
                    DEFAULT_EXPONENT_CAP,
                    rng,
                )?;
                k += tr.steps;
                z = from
                    .offset(phi, tr.distance)
                    .map_err(|_| Error::NonFiniteProposal { steps: k })?;
                lz = eval(t, z.coords())?;
                continue;
            }
        }
        let r = if cfg.proposal.equal_increments() {
            first_increment
        } else {
            cfg.proposal.radial_increment_unchecked(phi, rng)
        };
        k += 1;
        z = z
            .offset(phi, r)
            .map_err(|_| Error::NonFiniteProposal { steps: k })?;
        lz = eval(t, z.coords())?;
    }
    if lz == f64::NEG_INFINITY {
        if let HaltDraw::Unbounded { safety_cap } = halt {
            return Err(Error::SafetyCapExceeded { cap: safety_cap });
        }
    }
    Ok(SkipProposal {
        z,
        log_target: lz,
        skip_count: k,
        direction: phi.to_vec(),
    })
}

/// Draws the skipping proposal `Z_{T_A ∧ K}` from `x`.
pub fn skipping_proposal<T: LogTarget + ?Sized>(
    x: &Point,
    t: &T,
    cfg: &SkippingConfig,
    rng: &mut RngStream,
) -> Result<SkipProposal> {
    check_dim(t.dim(), x.dim())?;
    check_dim(cfg.proposal.dim(), x.dim())?;
    let (z1, phi, r1) = match &cfg.angular {
        None => {
            let offset = cfg.proposal.sample_offset(rng);
            let r1 = crate::point::norm(&offset);
            let phi: Vec<f64> = offset.iter().map(|c| c / r1).collect();
            let z1 = x
                .offset(&offset, 1.0)
                .map_err(|_| Error::NonFiniteProposal { steps: 1 })?;
            (z1, phi, r1)
        }
        Some(angular) => {
            let phi = angular.sample(x.coords(), rng);
            let r1 = cfg.proposal.radial_increment_unchecked(&phi, rng);
            let z1 = x
                .offset(&phi, r1)
                .map_err(|_| Error::NonFiniteProposal { steps: 1 })?;
            (z1, phi, r1)
        }
    };
    let halt = cfg.halting.sample_halting(Some(&phi), rng)?;
    skip_along_ray(t, z1, &phi, r1, halt, cfg, rng)
}

fn accept(log_alpha: f64, rng: &mut RngStream) -> bool {
    rng.open01().ln() <= log_alpha
}

/// `log α` with the angular-density correction,
/// `min(0, [log π(z) + log q_φ(z, -φ)] - [log π(x) + log q_φ(x, φ)])`,
/// and `0` when `π(x) = 0`.
pub fn angular_log_acceptance<T: LogTarget + ?Sized>(
    t: &T,
    x: &Point,
    z: &Point,
    phi: &[f64],
    qphi: &dyn DirectionalDensity,
) -> Result<f64> {
    check_unit(phi)?;
    let lx = eval(t, x.coords())?;
    let lz = eval(t, z.coords())?;
    angular_log_acceptance_from(lx, lz, x, z, phi, qphi)
}

fn angular_log_acceptance_from(
    lx: f64,
    lz: f64,
    x: &Point,
    z: &Point,
    phi: &[f64],
    qphi: &dyn DirectionalDensity,
) -> Result<f64> {
    if lx == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let neg: Vec<f64> = phi.iter().map(|c| -c).collect();
    let forward = qphi.log_density(x.coords(), phi);
    let backward = qphi.log_density(z.coords(), &neg);
    if forward == f64::NEG_INFINITY || backward == f64::NEG_INFINITY {
        return Err(Error::ZeroDirectionalDensity);
    }
    Ok(((lz + backward) - (lx + forward)).min(0.0))
}

/// One skipping-sampler transition from `state`.
pub fn skip_step<T: LogTarget + ?Sized>(
    state: &ChainState,
    t: &T,
    cfg: &SkippingConfig,
    rng: &mut RngStream,
) -> Result<StepRecord> {
    let prop = skipping_proposal(&state.point, t, cfg, rng)?;
    let log_alpha = match &cfg.angular {
        None => log_acceptance_from(state.log_target, prop.log_target),
        Some(angular) => angular_log_acceptance_from(
            state.log_target,
            prop.log_target,
            &state.point,
            &prop.z,
            &prop.direction,
            angular.as_ref(),
        )?,
    };
    let accepted = accept(log_alpha, rng);
    Ok(StepRecord {
        state: state.point.clone(),
        proposal: prop.z,
        skip_count: prop.skip_count,
        accepted,
        log_target_at_state: state.log_target,
        log_target_at_proposal: prop.log_target,
    })
}

/// One random walk Metropolis transition from `state`.
pub fn rwm_step<T: LogTarget + ?Sized>(
    state: &ChainState,
    t: &T,
    proposal: &UnderlyingProposal,
    rng: &mut RngStream,
) -> Result<StepRecord> {
    check_dim(t.dim(), state.point.dim())?;
    check_dim(proposal.dim(), state.point.dim())?;
    let offset = proposal.sample_offset(rng);
    let y = state
        .point
        .offset(&offset, 1.0)
        .map_err(|_| Error::NonFiniteProposal { steps: 1 })?;
    let ly = eval(t, y.coords())?;
    let accepted = accept(log_acceptance_from(state.log_target, ly), rng);
    Ok(StepRecord {
        state: state.point.clone(),
        proposal: y,
        skip_count: 1,
        accepted,
        log_target_at_state: state.log_target,
        log_target_at_proposal: ly,
    })
}

/// Support of one monotonic-skipping step: `{z in D : f(z) < threshold}`.
///
/// The log-density reported inside the support is `-f(z)`; only finiteness
/// matters to the skipping chain, and it saves re-evaluating `f` at the
/// accepted point.
struct Sublevel<'a, O: ?Sized> {
    objective: &'a O,
    threshold: f64,
}

impl<O: Objective + ?Sized> LogTarget for Sublevel<'_, O> {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if !self.objective.contains(x) {
            return f64::NEG_INFINITY;
        }
        let v = self.objective.value(x);
        if v.is_nan() {
            return f64::NAN;
        }
        if v < self.threshold {
            -v
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Chain state for the monotonic skipping sampler; `log_target = -f(point)`,
/// `-inf` when the point is outside the box or infeasible.
pub fn mss_state<O: Objective + ?Sized>(objective: &O, point: Point) -> Result<ChainState> {
    check_dim(objective.dim(), point.dim())?;
    let log_target = if objective.contains(point.coords()) {
        let v = objective.value(point.coords());
        if v.is_nan() {
            return Err(Error::NanObjective(point.into_vec()));
        }
        -v
    } else {
        f64::NEG_INFINITY
    };
    Ok(ChainState { point, log_target })
}

/// One monotonic-skipping step: a skipping proposal against the uniform
/// target on `S(x) ∩ D = {z in D : f(z) < f(x)}`, accepted iff it lands there.
/// From an infeasible state (outside `D` or `f = +inf`) the support is the
/// feasible part of `D` and every halted proposal is accepted.
pub fn mss_step<O: Objective + ?Sized>(
    state: &ChainState,
    objective: &O,
    cfg: &SkippingConfig,
    rng: &mut RngStream,
) -> Result<StepRecord> {
    let feasible = state.log_target > f64::NEG_INFINITY;
    let threshold = if feasible {
        -state.log_target
    } else {
        f64::INFINITY
    };
    let support = Sublevel {
        objective,
        threshold,
    };
    let prop = skipping_proposal(&state.point, &support, cfg, rng)?;
    let accepted = !feasible || prop.log_target > f64::NEG_INFINITY;
    debug_assert!(!accepted || !feasible || prop.log_target > state.log_target);
    Ok(StepRecord {
        state: state.point.clone(),
        proposal: prop.z,
        skip_count: prop.skip_count,
        accepted,
        log_target_at_state: state.log_target,
        log_target_at_proposal: prop.log_target,
    })
}

/// Iterates `step` for `n_steps` transitions from `x0`.
pub fn run_chain<F>(x0: ChainState, n_steps: usize, rng: &mut RngStream, mut step: F) -> Result<ChainResult>
where
    F: FnMut(&ChainState, &mut RngStream) -> Result<StepRecord>,
{
    if n_steps == 0 {
        return Err(Error::param("n_steps", "must be >= 1"));
    }
    let mut trace = Vec::with_capacity(n_steps);
    let mut state = x0;
    for _ in 0..n_steps {
        let rec = step(&state, rng)?;
        state = rec.next_state();
        trace.push(rec);
    }
    Ok(ChainResult::from_trace(trace, state, 0))
}

pub fn run_skipping<T: LogTarget + ?Sized>(
    t: &T,
    x0: Point,
    cfg: &SkippingConfig,
    n_steps: usize,
    rng: &mut RngStream,
) -> Result<ChainResult> {
    let counted = Counted::new(t);
    let start = ChainState::new(&counted, x0)?;
    let before = counted.evals();
    let mut res = run_chain(start, n_steps, rng, |s, r| skip_step(s, &counted, cfg, r))?;
    res.evals = counted.evals() - before;
    Ok(res)
}

pub fn run_rwm<T: LogTarget + ?Sized>(
    t: &T,
    x0: Point,
    proposal: &UnderlyingProposal,
    n_steps: usize,
    rng: &mut RngStream,
) -> Result<ChainResult> {
    let counted = Counted::new(t);
    let start = ChainState::new(&counted, x0)?;
    let before = counted.evals();
    let mut res = run_chain(start, n_steps, rng, |s, r| rwm_step(s, &counted, proposal, r))?;
    res.evals = counted.evals() - before;
    Ok(res)
}

pub fn run_mss<O: Objective + ?Sized>(
    objective: &O,
    x0: Point,
    cfg: &SkippingConfig,
    n_steps: usize,
    rng: &mut RngStream,
) -> Result<ChainResult> {
    let counted = crate::optimize::CountedObjective::new(objective);
    let start = mss_state(&counted, x0)?;
    let before = counted.evals();
    let mut res = run_chain(start, n_steps, rng, |s, r| mss_step(s, &counted, cfg, r))?;
    res.evals = counted.evals() - before;
    Ok(res)
}
