//! Reproducible experiment protocols: proposal-scale tuning, the mixture-tail
//! comparison and the two eggholder restart tables.

use std::cell::Cell;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{
    basin_hopping_runs, multistart, BasinHoppingMode, MultistartMode, OptRunReport,
    UNIT_SD_HALF_WIDTH,
};
use crate::point::Point;
use crate::proposals::{uniform_direction, HaltingIndex, UnderlyingProposal};
use crate::rng::RngStream;
use crate::samplers::{run_rwm, run_skipping, SkippingConfig};
use crate::target::LogTarget;
use crate::targets::{eggholder_problem, make_random_mixture, LevelConditionedTarget};
use crate::trace::ChainResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub scale: f64,
    pub acceptance: f64,
    pub pilots: usize,
}

/// Bisection on `log(scale)` for an isotropic Gaussian RWM proposal whose
/// pilot acceptance rate is `target_acceptance`.
///
/// Every pilot reuses the same random stream, which makes the acceptance rate
/// a much smoother function of the scale. Stops within 0.01 of the target or
/// after 40 pilots.
pub fn tune_rwm_scale<T: LogTarget + ?Sized>(
    t: &T,
    x0: &Point,
    target_acceptance: f64,
    pilot_steps: usize,
    seed: u64,
) -> Result<TuneResult> {
    if !(target_acceptance > 0.0 && target_acceptance < 1.0) {
        return Err(Error::param("target_acceptance", "must lie in (0, 1)"));
    }
    let dim = x0.dim();
    let pilots = Cell::new(0usize);
    let pilot = |scale: f64| -> Result<f64> {
        pilots.set(pilots.get() + 1);
        let q = UnderlyingProposal::isotropic_gaussian(dim, scale)?;
        Ok(run_rwm(t, x0.clone(), &q, pilot_steps, &mut RngStream::new(seed))?.acceptance_rate)
    };
    let mut best = (1.0, pilot(1.0)?);
    let (mut lo, mut hi);
    let mut s = 1.0f64;
    // acceptance decreases with the scale: bracket first
    if best.1 > target_acceptance {
        loop {
            s *= 2.0;
            let a = pilot(s)?;
            if (a - target_acceptance).abs() < (best.1 - target_acceptance).abs() {
                best = (s, a);
            }
            if a <= target_acceptance || s > 1e12 {
                break;
            }
        }
        (lo, hi) = ((s / 2.0).ln(), s.ln());
    } else {
        loop {
            s /= 2.0;
            let a = pilot(s)?;
            if (a - target_acceptance).abs() < (best.1 - target_acceptance).abs() {
                best = (s, a);
            }
            if a >= target_acceptance || s < 1e-12 {
                break;
            }
        }
        (lo, hi) = (s.ln(), (s * 2.0).ln());
    }
    while (best.1 - target_acceptance).abs() >= 0.01 && pilots.get() < 40 {
        let mid = 0.5 * (lo + hi);
        let a = pilot(mid.exp())?;
        if (a - target_acceptance).abs() < (best.1 - target_acceptance).abs() {
            best = (mid.exp(), a);
        }
        if a > target_acceptance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(TuneResult {
        scale: best.0,
        acceptance: best.1,
        pilots: pilots.get(),
    })
}

/// Mixture-tail experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSetup {
    pub dim: usize,
    pub seed: u64,
    pub components: usize,
    pub spread: f64,
    pub level_log: f64,
    pub safety_cap: u64,
}

impl TailSetup {
    /// Defaults for `d = 2` (level `-30`) and `d = 50` (level `-350`).
    pub fn standard(dim: usize, seed: u64) -> Result<Self> {
        let (spread, level_log) = match dim {
            2 => (10.0, -30.0),
            50 => (3.0, -350.0),
            _ => return Err(Error::param("dim", "standard setups exist for 2 and 50")),
        };
        Ok(TailSetup {
            dim,
            seed,
            components: 20,
            spread,
            level_log,
            safety_cap: 1_000_000,
        })
    }

    pub fn build(&self) -> Result<LevelConditionedTarget> {
        let base = make_random_mixture(self.seed, self.components, self.dim, self.spread)?;
        LevelConditionedTarget::new(base, self.level_log)
    }
}

/// Boundary point of `{log ρ <= level}` on a ray from a random component mean.
pub fn tail_start(t: &LevelConditionedTarget, rng: &mut RngStream) -> Result<Point> {
    let means = t.base.means();
    let k = rng.random_range(0..means.len());
    let center = means[k].to_vec();
    let u = uniform_direction(t.base.dim(), rng);
    let at = |s: f64| -> Vec<f64> { center.iter().zip(&u).map(|(c, v)| c + s * v).collect() };
    let inside = |s: f64| t.base.logpdf(&at(s)) <= t.level_log;
    let (mut lo, mut hi) = (0.0, 1.0);
    while !inside(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::param("level_log", "no tail point found along the ray"));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Point::new(at(hi))
}

#[derive(Debug, Clone)]
pub struct TailOutcome {
    pub target: LevelConditionedTarget,
    pub start: Point,
    pub tune: TuneResult,
    pub rwm: ChainResult,
    pub skipping: ChainResult,
}

/// Runs RWM and the skipping sampler (`K = ∞`) with the same tuned proposal
/// from the same boundary start.
pub fn run_tail_experiment(setup: &TailSetup, steps: usize, pilot_steps: usize) -> Result<TailOutcome> {
    let target = setup.build()?;
    let root = RngStream::new(setup.seed);
    let start = tail_start(&target, &mut root.child(0))?;
    // pilots share the RWM chain's stream, so the tuned pilot is its opening segment
    let tune = tune_rwm_scale(&target, &start, 0.25, pilot_steps, root.child(2).seed())?;
    let q = UnderlyingProposal::isotropic_gaussian(setup.dim, tune.scale)?;
    let rwm = run_rwm(&target, start.clone(), &q, steps, &mut root.child(2))?;
    let cfg = SkippingConfig::new(q, HaltingIndex::infinite(setup.safety_cap)?);
    let skipping = run_skipping(&target, start.clone(), &cfg, steps, &mut root.child(3))?;
    Ok(TailOutcome {
        target,
        start,
        tune,
        rwm,
        skipping,
    })
}

/// Averages of a batch of restart reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub avg_distance: f64,
    pub basin_fraction: f64,
    pub avg_gap: f64,
    pub avg_evals: f64,
    pub avg_time_s: f64,
}

impl MethodSummary {
    pub fn from_reports(method: &str, reports: &[OptRunReport], optimum_value: f64) -> Self {
        let n = reports.len().max(1) as f64;
        let avg = |f: &dyn Fn(&OptRunReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        MethodSummary {
            method: method.to_string(),
            runs: reports.len(),
            avg_distance: avg(&|r| r.distance_to_optimum),
            basin_fraction: avg(&|r| f64::from(u8::from(r.in_basin))),
            avg_gap: avg(&|r| r.final_value - optimum_value),
            avg_evals: avg(&|r| r.function_evals as f64),
            avg_time_s: avg(&|r| r.wall_time_s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableOutcome {
    pub summaries: Vec<MethodSummary>,
    pub reports: Vec<Vec<OptRunReport>>,
}

/// Three multistart variants on eggholder: uniform starts, starts improved by
/// `m` RWM steps on the Boltzmann density (`T = 1`), and by `m` monotonic
/// skipping steps (`K = 200`); both chains use `N(0, 2I)`.
pub fn table1(n_runs: usize, m: usize, seed: u64) -> Result<TableOutcome> {
    let prob = eggholder_problem();
    let q = UnderlyingProposal::isotropic_gaussian(2, 2f64.sqrt())?;
    let modes = [
        ("vanilla", MultistartMode::Vanilla),
        (
            "rwm_augmented",
            MultistartMode::RwmAugmented {
                m,
                proposal: q.clone(),
                temperature: 1.0,
            },
        ),
        (
            "mss_augmented",
            MultistartMode::MssAugmented {
                m,
                cfg: SkippingConfig::new(q, HaltingIndex::deterministic(200)?),
            },
        ),
    ];
    // the same starting points for every method
    let rng = RngStream::new(seed);
    let mut summaries = Vec::new();
    let mut reports = Vec::new();
    let f_star = prob.known_optimum().map(|(_, v)| v).ok_or(Error::MissingOptimum)?;
    for (name, mode) in &modes {
        let r = multistart(&prob, n_runs, mode, &rng)?;
        summaries.push(MethodSummary::from_reports(name, &r, f_star));
        reports.push(r);
    }
    Ok(TableOutcome { summaries, reports })
}

/// Three basin-hopping variants on eggholder for `m` iterations from uniform
/// starts: classic (`T = 1`) and monotonic with unit-variance uniform
/// displacements, and the skipping variant with `N(0, I)` and `K = 200`.
pub fn table2(n_runs: usize, m: usize, seed: u64) -> Result<TableOutcome> {
    let prob = eggholder_problem();
    let modes = [
        (
            "classic_bh",
            BasinHoppingMode::Classic {
                step_scale: UNIT_SD_HALF_WIDTH,
                temperature: 1.0,
            },
        ),
        (
            "monotonic_bh",
            BasinHoppingMode::Monotonic {
                step_scale: UNIT_SD_HALF_WIDTH,
            },
        ),
        (
            "mss_bh",
            BasinHoppingMode::Mss {
                cfg: SkippingConfig::new(
                    UnderlyingProposal::isotropic_gaussian(2, 1.0)?,
                    HaltingIndex::deterministic(200)?,
                ),
            },
        ),
    ];
    let rng = RngStream::new(seed);
    let f_star = prob.known_optimum().map(|(_, v)| v).ok_or(Error::MissingOptimum)?;
    let mut summaries = Vec::new();
    let mut reports = Vec::new();
    for (name, mode) in &modes {
        let r = basin_hopping_runs(&prob, n_runs, mode, m, &rng)?;
        summaries.push(MethodSummary::from_reports(name, &r, f_star));
        reports.push(r);
    }
    Ok(TableOutcome { summaries, reports })
}
