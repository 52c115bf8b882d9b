//! Doubling search for the skipping chain's exit from a convex region when
//! the radial increments are exponential.
//!
//! Partial sums `S_k = R_1 + ... + R_k` of i.i.d. `Exp(λ)` increments are
//! `Gamma(k, λ)`, and `S_m` given `S_lo`, `S_hi` (`lo < m < hi`) is
//! `S_lo + (S_hi - S_lo) * Beta(m - lo, hi - m)`. A forward search over the
//! indices `1, 3, 7, ..., 2^k - 1` brackets the first exit, and a bisection
//! with bridge draws pins it down, so locating an exit at index `T` costs
//! `O(log T)` draws instead of `T`.

use std::fmt;
use std::sync::Arc;

use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{Error, Result};
use crate::point::{check_unit, Point};
use crate::rng::RngStream;
use crate::target::{eval, LogTarget};

pub const DEFAULT_EXPONENT_CAP: u32 = 60;

/// I.i.d. exponential radial increments with rate `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialIncrements {
    rate: f64,
}

impl ExponentialIncrements {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", "must be positive and finite"));
        }
        Ok(ExponentialIncrements { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Draw of `S_k ~ Gamma(k, λ)`.
pub fn gamma_partial_sum(k: u64, inc: &ExponentialIncrements, rng: &mut RngStream) -> f64 {
    assert!(k >= 1, "partial sum needs at least one increment");
    Gamma::new(k as f64, 1.0 / inc.rate).unwrap().sample(rng)
}

/// Draw of `S_k` given `S_{2k} = total`.
pub fn bridge_partial_sum(k: u64, total: f64, rng: &mut RngStream) -> f64 {
    bridge_between(k, 2 * k, total, rng)
}

/// Draw of `S_m` given `S_n = total`, `0 < m < n`: `total * Beta(m, n - m)`.
pub fn bridge_between(m: u64, n: u64, total: f64, rng: &mut RngStream) -> f64 {
    assert!(0 < m && m < n, "bridge index must lie strictly inside (0, n)");
    let b: f64 = Beta::new(m as f64, (n - m) as f64).unwrap().sample(rng);
    total * b
}

/// Result of a doubling traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traversal {
    /// First index whose partial sum is outside the region, or the step budget.
    pub steps: u64,
    /// Partial sum at `steps`.
    pub distance: f64,
    /// The budget was reached while still inside the region.
    pub hit_limit: bool,
    /// Number of Gamma and Beta draws used.
    pub draws: u32,
}

/// Finds the first `j >= 1` with `!inside(S_j)`, or stops at `max_steps`.
///
/// `inside` must be monotone along the ray: once false it stays false. This
/// holds when it tests membership of a convex set that contains the origin of
/// the ray or that the ray has already entered.
pub fn traverse<F>(
    mut inside: F,
    inc: &ExponentialIncrements,
    max_steps: u64,
    exponent_cap: u32,
    rng: &mut RngStream,
) -> Result<Traversal>
where
    F: FnMut(f64) -> Result<bool>,
{
    assert!(max_steps >= 1);
    let mut draws = 0u32;
    let (mut lo_idx, mut lo_sum) = (0u64, 0.0f64);
    let mut k = 1u32;
    let (mut hi_idx, mut hi_sum) = loop {
        if k > exponent_cap {
            return Err(Error::ExponentCapExceeded { cap: exponent_cap });
        }
        let idx = ((1u64 << k) - 1).min(max_steps);
        let sum = lo_sum + gamma_partial_sum(idx - lo_idx, inc, rng);
        draws += 1;
        if !inside(sum)? {
            break (idx, sum);
        }
        if idx == max_steps {
            return Ok(Traversal {
                steps: idx,
                distance: sum,
                hit_limit: true,
                draws,
            });
        }
        lo_idx = idx;
        lo_sum = sum;
        k += 1;
    };
    while hi_idx - lo_idx > 1 {
        let mid = lo_idx + (hi_idx - lo_idx) / 2;
        let sum = lo_sum + bridge_between(mid - lo_idx, hi_idx - lo_idx, hi_sum - lo_sum, rng);
        draws += 1;
        debug_assert!(lo_sum <= sum && sum <= hi_sum);
        if inside(sum)? {
            lo_idx = mid;
            lo_sum = sum;
        } else {
            hi_idx = mid;
            hi_sum = sum;
        }
    }
    Ok(Traversal {
        steps: hi_idx,
        distance: hi_sum,
        hit_limit: false,
        draws,
    })
}

/// Entry point `Z_{T_A}` of the skipping chain from `x` along `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingEntry {
    pub z: Point,
    pub log_target: f64,
    pub t_a: u64,
    pub draws: u32,
}

/// Locates the skipping chain's first entry into the support of `t`, when
/// the complement of the support is convex along the ray.
pub fn doubling_find_entry<T: LogTarget + ?Sized>(
    x: &Point,
    phi: &[f64],
    inc: &ExponentialIncrements,
    t: &T,
    exponent_cap: u32,
    rng: &mut RngStream,
) -> Result<DoublingEntry> {
    check_unit(phi)?;
    let max_steps = if exponent_cap >= 63 {
        u64::MAX
    } else {
        (1u64 << exponent_cap) - 1
    };
    let at = |s: f64| -> Result<f64> {
        let z = x.offset(phi, s)?;
        eval(t, z.coords())
    };
    let tr = traverse(
        |s| Ok(at(s)? == f64::NEG_INFINITY),
        inc,
        max_steps,
        exponent_cap,
        rng,
    )?;
    if tr.hit_limit {
        return Err(Error::ExponentCapExceeded { cap: exponent_cap });
    }
    let z = x.offset(phi, tr.distance)?;
    let log_target = eval(t, z.coords())?;
    Ok(DoublingEntry {
        z,
        log_target,
        t_a: tr.steps,
        draws: tr.draws,
    })
}

/// A convex subset of the complement of the support, supplied by the caller.
/// Membership test of a custom obstacle.
pub type Indicator = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum ConvexObstacle {
    Ball { center: Vec<f64>, radius: f64 },
    /// Open box `∏ (lower_i, upper_i)`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Custom(Indicator),
}

impl fmt::Debug for ConvexObstacle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexObstacle::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            ConvexObstacle::Box { lower, upper } => f
                .debug_struct("Box")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            ConvexObstacle::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ConvexObstacle {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ConvexObstacle::Ball { center, radius } => {
                let d2: f64 = center.iter().zip(x).map(|(c, v)| (c - v) * (c - v)).sum();
                d2 < radius * radius
            }
            ConvexObstacle::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| l < v && v < u),
            ConvexObstacle::Custom(f) => f(x),
        }
    }
}
