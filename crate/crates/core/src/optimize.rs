//! Box-constrained global optimization: Nelder–Mead local search,
//! multistart with optional Markov-chain improvement of the starting points,
//! and basin-hopping variants.

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{check_dim, Point};
use crate::proposals::UnderlyingProposal;
use crate::rng::RngStream;
use crate::samplers::{mss_state, mss_step, run_mss, run_rwm, SkippingConfig};
use crate::targets::BoltzmannTarget;

/// An objective on a box `D`. `value` may return `+inf` to mark infeasible
/// points; it is only called on points of `D`.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn contains(&self, x: &[f64]) -> bool;
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
}

impl<O: Objective + ?Sized> Objective for Arc<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
}

pub type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `min f(x)` over `D = Π [l_i, u_i]`.
#[derive(Clone)]
pub struct BoxProblem {
    f: ObjectiveFn,
    bounds: Vec<(f64, f64)>,
    optimum: Option<(Point, f64)>,
}

impl fmt::Debug for BoxProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoxProblem")
            .field("bounds", &self.bounds)
            .field("optimum", &self.optimum)
            .finish_non_exhaustive()
    }
}

impl BoxProblem {
    pub fn new(f: ObjectiveFn, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::EmptyPoint);
        }
        for &(l, u) in &bounds {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::param("bounds", format!("[{l}, {u}] is not a proper interval")));
            }
        }
        Ok(BoxProblem {
            f,
            bounds,
            optimum: None,
        })
    }

    pub fn with_optimum(mut self, point: Point, value: f64) -> Self {
        self.optimum = Some((point, value));
        self
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn known_optimum(&self) -> Option<(&Point, f64)> {
        self.optimum.as_ref().map(|(p, v)| (p, *v))
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(&v, &(l, u))| v.clamp(l, u))
            .collect()
    }

    pub fn sample_uniform(&self, rng: &mut RngStream) -> Point {
        Point::from_vec_unchecked(self.bounds.iter().map(|&(l, u)| rng.random_range(l..=u)).collect())
    }

    /// Euclidean distance to the known optimum.
    pub fn distance_to_optimum(&self, x: &[f64]) -> Result<f64> {
        let (opt, _) = self.known_optimum().ok_or(Error::MissingOptimum)?;
        Ok(x.iter()
            .zip(opt.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

impl Objective for BoxProblem {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(&v, &(l, u))| l <= v && v <= u)
    }
}

/// Counts calls to `value`.
pub struct CountedObjective<O> {
    inner: O,
    evals: Cell<u64>,
}

impl<O: Objective> CountedObjective<O> {
    pub fn new(inner: O) -> Self {
        CountedObjective {
            inner,
            evals: Cell::new(0),
        }
    }

    pub fn evals(&self) -> u64 {
        self.evals.get()
    }
}

impl<O: Objective> Objective for CountedObjective<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        self.inner.value(x)
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.inner.contains(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub point: Point,
    pub value: f64,
    pub evals: u64,
    /// `false` when no feasible point was found; `point` is then the start.
    pub feasible: bool,
}

const NM_SPREAD_TOL: f64 = 1e-8;
const NM_MAX_ITERS: usize = 500;

fn checked(prob: &BoxProblem, x: &[f64], evals: &mut u64) -> Result<f64> {
    *evals += 1;
    let v = prob.value(x);
    if v.is_nan() {
        return Err(Error::NanObjective(x.to_vec()));
    }
    Ok(v)
}

/// Nelder–Mead from `x0` (clamped into the box), with an axis-aligned initial
/// simplex of edge 1% of each box width and every trial point clamped.
///
/// Stops when the spread of simplex values drops below `1e-8` or after 500
/// iterations. Deterministic.
pub fn local_search(x0: &Point, prob: &BoxProblem) -> Result<LocalResult> {
    let d = prob.dim();
    check_dim(d, x0.dim())?;
    let mut evals = 0u64;
    let start = prob.clamp(x0.coords());
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let f0 = checked(prob, &start, &mut evals)?;
    simplex.push((start.clone(), f0));
    for i in 0..d {
        let (l, u) = prob.bounds[i];
        let edge = 0.01 * (u - l);
        let mut v = start.clone();
        v[i] = if v[i] + edge <= u { v[i] + edge } else { v[i] - edge };
        let fv = checked(prob, &v, &mut evals)?;
        simplex.push((v, fv));
    }

    for _ in 0..NM_MAX_ITERS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        let spread = if best == worst { 0.0 } else { worst - best };
        if spread < NM_SPREAD_TOL {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(v, _)| v[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let p: Vec<f64> = (0..d)
                .map(|j| centroid[j] + t * (simplex[d].0[j] - centroid[j]))
                .collect();
            prob.clamp(&p)
        };
        let xr = along(-1.0);
        let fr = checked(prob, &xr, &mut evals)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = checked(prob, &xe, &mut evals)?;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(-0.5);
            let fc = checked(prob, &xc, &mut evals)?;
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = checked(prob, &xc, &mut evals)?;
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[d] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let p: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + 0.5 * (v - a))
                .collect();
            let fp = checked(prob, &p, &mut evals)?;
            *vertex = (p, fp);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    if value == f64::INFINITY {
        return Ok(LocalResult {
            point: x0.clone(),
            value,
            evals,
            feasible: false,
        });
    }
    Ok(LocalResult {
        point: Point::from_vec_unchecked(point),
        value,
        evals,
        feasible: true,
    })
}

/// Whether local search from `x` ends within `tol` of the known optimum in
/// every coordinate.
pub fn in_basin_of(x: &Point, prob: &BoxProblem, tol: f64) -> Result<bool> {
    let (opt, _) = prob.known_optimum().ok_or(Error::MissingOptimum)?;
    let res = local_search(x, prob)?;
    Ok(res
        .point
        .coords()
        .iter()
        .zip(opt.coords())
        .all(|(a, b)| (a - b).abs() <= tol))
}

pub const DEFAULT_BASIN_TOL: f64 = 1.0;

/// Scored outcome of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRunReport {
    pub start_value: f64,
    pub final_point: Point,
    pub final_value: f64,
    pub distance_to_optimum: f64,
    pub in_basin: bool,
    /// `f` calls made by the procedure itself; scoring is not counted.
    pub function_evals: u64,
    pub accepted_moves: u64,
    pub wall_time_s: f64,
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }

    fn seconds(&self) -> f64 {
        0.0
    }
}

fn score(
    prob: &BoxProblem,
    start_value: f64,
    final_point: Point,
    final_value: f64,
    function_evals: u64,
    accepted_moves: u64,
    wall_time_s: f64,
) -> Result<OptRunReport> {
    let distance_to_optimum = prob.distance_to_optimum(final_point.coords())?;
    let in_basin = in_basin_of(&final_point, prob, DEFAULT_BASIN_TOL)?;
    Ok(OptRunReport {
        start_value,
        final_point,
        final_value,
        distance_to_optimum,
        in_basin,
        function_evals,
        accepted_moves,
        wall_time_s,
    })
}

#[derive(Debug, Clone)]
pub enum MultistartMode {
    Vanilla,
    /// `m` random walk Metropolis steps on `exp(-f/T)` restricted to the box.
    RwmAugmented {
        m: usize,
        proposal: UnderlyingProposal,
        temperature: f64,
    },
    /// `m` monotonic skipping steps.
    MssAugmented { m: usize, cfg: SkippingConfig },
}

fn map_runs<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

fn multistart_run(prob: &BoxProblem, mode: &MultistartMode, rng: &mut RngStream) -> Result<OptRunReport> {
    let clock = Stopwatch::start();
    let x0 = prob.sample_uniform(rng);
    let f0 = prob.value(x0.coords());
    if f0.is_nan() {
        return Err(Error::NanObjective(x0.into_vec()));
    }
    // chains evaluate their start once more
    let (end, evals, accepted) = match mode {
        MultistartMode::Vanilla => (x0, 1, 0),
        MultistartMode::RwmAugmented {
            m,
            proposal,
            temperature,
        } => {
            let target = BoltzmannTarget::new(prob, *temperature)?;
            let res = run_rwm(&target, x0, proposal, *m, rng)?;
            let acc = res.trace.iter().filter(|r| r.accepted).count() as u64;
            (res.final_state.point, res.evals + 2, acc)
        }
        MultistartMode::MssAugmented { m, cfg } => {
            let res = run_mss(prob, x0, cfg, *m, rng)?;
            let acc = res.trace.iter().filter(|r| r.accepted).count() as u64;
            (res.final_state.point, res.evals + 2, acc)
        }
    };
    let fe = prob.value(end.coords());
    score(prob, f0, end, fe, evals, accepted, clock.seconds())
}

/// `n` restarts from uniform points of the box, each improved according to
/// `mode`. Run `i` uses `rng.child(i)`, so the reports do not depend on how
/// the runs are scheduled.
pub fn multistart(prob: &BoxProblem, n: usize, mode: &MultistartMode, rng: &RngStream) -> Result<Vec<OptRunReport>> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    prob.known_optimum().ok_or(Error::MissingOptimum)?;
    map_runs(n, |i| multistart_run(prob, mode, &mut rng.child(i as u64)))
}

#[derive(Debug, Clone)]
pub enum BasinHoppingMode {
    /// Uniform displacement of half-width `step_scale` per coordinate and a
    /// Metropolis test at `temperature`.
    Classic { step_scale: f64, temperature: f64 },
    /// Uniform displacement; only strict improvements are accepted.
    Monotonic { step_scale: f64 },
    /// One monotonic skipping step from the current local minimum.
    Mss { cfg: SkippingConfig },
}

/// Half-width of a uniform displacement with unit standard deviation.
pub const UNIT_SD_HALF_WIDTH: f64 = 1.732_050_807_568_877_2;

fn perturb(prob: &BoxProblem, y: &Point, w: f64, rng: &mut RngStream) -> Vec<f64> {
    let p: Vec<f64> = y.coords().iter().map(|&c| c + rng.random_range(-w..=w)).collect();
    prob.clamp(&p)
}

/// Basin-hopping for `n_iters` iterations from `x0`.
///
/// `Classic` and `Monotonic` return the current accepted local minimum; `Mss`
/// alternates local search and one monotonic skipping step and returns the
/// last point of the skipping step.
pub fn basin_hopping(
    prob: &BoxProblem,
    x0: &Point,
    mode: &BasinHoppingMode,
    n_iters: usize,
    rng: &mut RngStream,
) -> Result<OptRunReport> {
    if n_iters == 0 {
        return Err(Error::param("n_iters", "must be >= 1"));
    }
    check_dim(prob.dim(), x0.dim())?;
    let clock = Stopwatch::start();
    let start_value = if prob.contains(x0.coords()) {
        prob.value(x0.coords())
    } else {
        f64::INFINITY
    };
    match mode {
        BasinHoppingMode::Classic { step_scale, .. } | BasinHoppingMode::Monotonic { step_scale }
            if step_scale.partial_cmp(&0.0) != Some(Ordering::Greater) =>
        {
            return Err(Error::param("step_scale", "must be positive"));
        }
        BasinHoppingMode::Classic { temperature, .. } if temperature.partial_cmp(&0.0) != Some(Ordering::Greater) => {
            return Err(Error::param("temperature", "must be positive"));
        }
        _ => {}
    }
    let mut evals = 1u64;
    let mut accepted = 0u64;
    let first = local_search(x0, prob)?;
    evals += first.evals;
    let (mut y, mut fy) = (first.point, first.value);
    match mode {
        BasinHoppingMode::Classic { step_scale, temperature } => {
            for _ in 0..n_iters {
                let x = Point::from_vec_unchecked(perturb(prob, &y, *step_scale, rng));
                let cand = local_search(&x, prob)?;
                evals += cand.evals;
                let log_alpha = if fy == f64::INFINITY {
                    0.0
                } else {
                    (-(cand.value - fy) / temperature).min(0.0)
                };
                if rng.open01().ln() <= log_alpha {
                    y = cand.point;
                    fy = cand.value;
                    accepted += 1;
                }
            }
        }
        BasinHoppingMode::Monotonic { step_scale } => {
            for _ in 0..n_iters {
                let x = Point::from_vec_unchecked(perturb(prob, &y, *step_scale, rng));
                let cand = local_search(&x, prob)?;
                evals += cand.evals;
                if cand.value < fy {
                    y = cand.point;
                    fy = cand.value;
                    accepted += 1;
                }
            }
        }
        BasinHoppingMode::Mss { cfg } => {
            let counted = CountedObjective::new(prob);
            let mut x = y.clone();
            for n in 0..n_iters {
                if n > 0 {
                    let local = local_search(&x, prob)?;
                    evals += local.evals;
                    y = local.point;
                }
                let state = mss_state(&counted, y.clone())?;
                let rec = mss_step(&state, &counted, cfg, rng)?;
                if rec.accepted {
                    accepted += 1;
                }
                x = rec.next_state().point;
            }
            evals += counted.evals();
            let fx = prob.value(x.coords());
            return score(prob, start_value, x, fx, evals, accepted, clock.seconds());
        }
    }
    score(prob, start_value, y, fy, evals, accepted, clock.seconds())
}

/// `n` basin-hopping runs from uniform starts; run `i` uses `rng.child(i)`.
pub fn basin_hopping_runs(
    prob: &BoxProblem,
    n: usize,
    mode: &BasinHoppingMode,
    n_iters: usize,
    rng: &RngStream,
) -> Result<Vec<OptRunReport>> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    prob.known_optimum().ok_or(Error::MissingOptimum)?;
    map_runs(n, |i| {
        let mut r = rng.child(i as u64);
        let x0 = prob.sample_uniform(&mut r);
        basin_hopping(prob, &x0, mode, n_iters, &mut r)
    })
}
