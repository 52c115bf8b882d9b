//! The target contract: a pointwise-evaluable unnormalized log-density whose
//! support is the set where it is finite.

use std::cell::Cell;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::{check_dim, Point};

/// Unnormalized log-density on `R^d`.
///
/// `log_density` returns `-inf` outside the support and never NaN or `+inf`.
pub trait LogTarget {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;
}

impl<T: LogTarget + ?Sized> LogTarget for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

impl<T: LogTarget + ?Sized> LogTarget for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

impl<T: LogTarget + ?Sized> LogTarget for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

/// A target backed by a closure.
pub struct FnTarget<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnTarget<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnTarget { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> LogTarget for FnTarget<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Wraps a target and counts every evaluation.
pub struct Counted<T> {
    inner: T,
    evals: Cell<u64>,
}

impl<T: LogTarget> Counted<T> {
    pub fn new(inner: T) -> Self {
        Counted {
            inner,
            evals: Cell::new(0),
        }
    }

    pub fn evals(&self) -> u64 {
        self.evals.get()
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: LogTarget> LogTarget for Counted<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        self.inner.log_density(x)
    }
}

/// Evaluates `t` at `x`, enforcing the dimension and value contracts.
pub fn eval<T: LogTarget + ?Sized>(t: &T, x: &[f64]) -> Result<f64> {
    check_dim(t.dim(), x.len())?;
    let v = t.log_density(x);
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::InvalidLogDensity(v));
    }
    Ok(v)
}

pub fn in_support<T: LogTarget + ?Sized>(t: &T, x: &Point) -> Result<bool> {
    Ok(eval(t, x.coords())? > f64::NEG_INFINITY)
}

/// `log alpha` from the two log-densities: `min(0, lz - lx)` when the current
/// state is in the support, `0` otherwise (including when both are `-inf`).
pub fn log_acceptance_from(log_x: f64, log_z: f64) -> f64 {
    if log_x == f64::NEG_INFINITY {
        0.0
    } else {
        (log_z - log_x).min(0.0)
    }
}

pub fn log_acceptance<T: LogTarget + ?Sized>(t: &T, x: &Point, z: &Point) -> Result<f64> {
    let lx = eval(t, x.coords())?;
    let lz = eval(t, z.coords())?;
    Ok(log_acceptance_from(lx, lz))
}
