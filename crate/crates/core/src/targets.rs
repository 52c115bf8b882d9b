//! Benchmark targets: interval unions, the eggholder function, random
//! Gaussian mixtures with sublevel conditioning and Boltzmann densities.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{BoxProblem, Objective};
use crate::point::{check_dim, Point};
use crate::proposals::GaussianCov;
use crate::rng::RngStream;
use crate::target::LogTarget;

/// Uniform density on a finite union of closed intervals of the real line.
///
/// Endpoints may be infinite, in which case the density is improper.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::param("intervals", "must not be empty"));
        }
        for &(a, b) in &intervals {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::param("intervals", format!("[{a}, {b}] is not an interval")));
            }
        }
        Ok(IntervalUnion { intervals })
    }

    /// `R \ (a, b)`.
    pub fn complement_of(a: f64, b: f64) -> Self {
        IntervalUnion {
            intervals: vec![(f64::NEG_INFINITY, a), (b, f64::INFINITY)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }
}

impl LogTarget for IntervalUnion {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if self.contains(x[0]) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

pub const EGGHOLDER_ARGMIN: [f64; 2] = [512.0, 404.2319];
pub const EGGHOLDER_MIN: f64 = -959.6407;

pub fn eggholder(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    -x1 * (x1 - x2 - 47.0).abs().sqrt().sin()
        - (x2 + 47.0) * (x1 / 2.0 + x2 + 47.0).abs().sqrt().sin()
}

/// Eggholder on `[-512, 512]²` with its known global minimum.
pub fn eggholder_problem() -> BoxProblem {
    BoxProblem::new(Arc::new(eggholder), vec![(-512.0, 512.0); 2])
        .expect("valid box")
        .with_optimum(Point::new(EGGHOLDER_ARGMIN.to_vec()).unwrap(), EGGHOLDER_MIN)
}

#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    log_weight: f64,
    mean: Vec<f64>,
    cov: GaussianCov,
    /// `-(d/2) log 2π - (1/2) log det Σ`
    log_norm: f64,
}

impl Component {
    fn log_pdf(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        // forward substitution L y = x - μ
        let l = self.cov.chol_lower();
        let d = x.len();
        let mut quad = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= l[(i, j)] * buf[j];
            }
            let y = s / l[(i, i)];
            buf[i] = y;
            quad += y * y;
        }
        self.log_norm - 0.5 * quad
    }
}

/// Finite mixture of multivariate normals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct GaussianMixture {
    dim: usize,
    components: Vec<Component>,
}

/// Serialized form of a [`GaussianMixture`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Row-major `d x d` matrices.
    pub covariances: Vec<Vec<Vec<f64>>>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = weights.len();
        if m == 0 || means.len() != m || covariances.len() != m {
            return Err(Error::param(
                "mixture",
                "weights, means and covariances must have the same non-zero length",
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", "must be non-negative and sum to 1"));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::EmptyPoint);
        }
        let mut components = Vec::with_capacity(m);
        for ((w, mean), cov) in weights.into_iter().zip(means).zip(covariances) {
            check_dim(dim, mean.len())?;
            check_dim(dim, cov.nrows())?;
            if let Some((index, &value)) = mean.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFiniteCoordinate { index, value });
            }
            let cov = GaussianCov::new(cov)?;
            let log_det: f64 = 2.0 * cov.chol_lower().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            components.push(Component {
                weight: w,
                log_weight: w.ln(),
                mean,
                log_norm: -0.5 * dim as f64 * (2.0 * PI).ln() - 0.5 * log_det,
                cov,
            });
        }
        Ok(GaussianMixture { dim, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn means(&self) -> Vec<&[f64]> {
        self.components.iter().map(|c| c.mean.as_slice()).collect()
    }

    pub fn covariances(&self) -> Vec<&DMatrix<f64>> {
        self.components.iter().map(|c| c.cov.covariance()).collect()
    }

    /// `log Σ w_i N(x; μ_i, Σ_i)`, evaluated with log-sum-exp.
    pub fn logpdf(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.dim];
        let mut terms = Vec::with_capacity(self.components.len());
        for c in &self.components {
            terms.push(c.log_weight + c.log_pdf(x, &mut buf));
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }
}

pub fn mixture_logpdf(g: &GaussianMixture, x: &Point) -> Result<f64> {
    check_dim(g.dim(), x.dim())?;
    Ok(g.logpdf(x.coords()))
}

impl TryFrom<MixtureSpec> for GaussianMixture {
    type Error = Error;

    fn try_from(s: MixtureSpec) -> Result<Self> {
        let covs = s
            .covariances
            .into_iter()
            .map(|rows| {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::param("covariances", "matrices must be square"));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(s.weights, s.means, covs)
    }
}

impl From<GaussianMixture> for MixtureSpec {
    fn from(g: GaussianMixture) -> Self {
        MixtureSpec {
            weights: g.weights(),
            means: g.components.iter().map(|c| c.mean.clone()).collect(),
            covariances: g
                .components
                .iter()
                .map(|c| {
                    let m = c.cov.covariance();
                    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
                })
                .collect(),
        }
    }
}

impl LogTarget for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.logpdf(x)
    }
}

/// Random mixture: means uniform on `[-spread, spread]^d`, covariances
/// `G Gᵀ + 0.1 I` with `G_ij ~ N(0, 1/d)`, weights from a flat Dirichlet.
pub fn make_random_mixture(seed: u64, m: usize, d: usize, spread: f64) -> Result<GaussianMixture> {
    if m == 0 || d == 0 {
        return Err(Error::param("mixture", "m and d must be at least 1"));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::param("spread", "must be non-negative and finite"));
    }
    let mut rng = RngStream::new(seed);
    let scale = 1.0 / (d as f64).sqrt();
    let mut means = Vec::with_capacity(m);
    let mut covs = Vec::with_capacity(m);
    for _ in 0..m {
        means.push((0..d).map(|_| rng.random_range(-spread..=spread)).collect());
        let g = DMatrix::from_fn(d, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let mut c = &g * g.transpose();
        for i in 0..d {
            c[(i, i)] += 0.1;
        }
        // exact symmetry for the factorization check
        c = (&c + c.transpose()) * 0.5;
        covs.push(c);
    }
    let raw: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let drift: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;
    GaussianMixture::new(weights, means, covs)
}

/// Base density restricted to the sublevel set `{x : log ρ(x) <= level_log}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelConditionedTarget {
    pub base: GaussianMixture,
    pub level_log: f64,
}

impl LevelConditionedTarget {
    pub fn new(base: GaussianMixture, level_log: f64) -> Result<Self> {
        if level_log.is_nan() {
            return Err(Error::param("level_log", "must not be NaN"));
        }
        Ok(LevelConditionedTarget { base, level_log })
    }
}

impl LogTarget for LevelConditionedTarget {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let lp = self.base.logpdf(x);
        if lp <= self.level_log {
            lp
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `exp(-f(x) / T)` on the box of `objective`, zero outside.
#[derive(Debug, Clone)]
pub struct BoltzmannTarget<O> {
    pub objective: O,
    pub temperature: f64,
}

impl<O: Objective> BoltzmannTarget<O> {
    pub fn new(objective: O, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::param("temperature", "must be positive and finite"));
        }
        Ok(BoltzmannTarget {
            objective,
            temperature,
        })
    }
}

impl<O: Objective> LogTarget for BoltzmannTarget<O> {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if !self.objective.contains(x) {
            return f64::NEG_INFINITY;
        }
        let v = self.objective.value(x);
        if v == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            -v / self.temperature
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::log_acceptance;

    #[test]
    fn interval_union_membership() {
        let t = IntervalUnion::new(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!(t.log_density(&[0.5]), 0.0);
        assert_eq!(t.log_density(&[1.5]), f64::NEG_INFINITY);
        assert_eq!(t.log_density(&[2.0]), 0.0);
        assert!(IntervalUnion::new(vec![(1.0, 0.0)]).is_err());
        let c = IntervalUnion::complement_of(0.0, 10.0);
        assert!(c.contains(-1e300) && c.contains(0.0) && c.contains(10.0));
        assert!(!c.contains(5.0));
    }

    #[test]
    fn eggholder_values() {
        assert!((eggholder(&EGGHOLDER_ARGMIN) - EGGHOLDER_MIN).abs() < 1e-3);
        assert!((eggholder(&[0.0, 0.0]) + 47.0 * 47f64.sqrt().sin()).abs() < 1e-12);
        assert!((eggholder(&[0.0, 0.0]) + 25.46).abs() < 0.01);
        assert_eq!(eggholder(&[0.0, -47.0]), 0.0);
    }

    fn single(dim: usize) -> GaussianMixture {
        GaussianMixture::new(vec![1.0], vec![vec![0.0; dim]], vec![DMatrix::identity(dim, dim)]).unwrap()
    }

    #[test]
    fn mixture_logpdf_examples() {
        let g = single(2);
        assert!((g.logpdf(&[0.0, 0.0]) + (2.0 * PI).ln()).abs() < 1e-12);
        let twin = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![vec![0.0; 2], vec![0.0; 2]],
            vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2)],
        )
        .unwrap();
        for x in [[0.0, 0.0], [1.0, -2.0], [30.0, 4.0]] {
            assert!((twin.logpdf(&x) - g.logpdf(&x)).abs() < 1e-12);
        }
        let far = g.logpdf(&[1e4, -1e4]);
        assert!(far.is_finite() && far < -1e7);
    }

    #[test]
    fn mixture_rejects_bad_input() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            GaussianMixture::new(vec![1.0], vec![vec![0.0; 2]], vec![bad]).unwrap_err(),
            Error::NotPositiveDefinite
        );
        assert!(GaussianMixture::new(vec![0.7], vec![vec![0.0; 2]], vec![DMatrix::identity(2, 2)]).is_err());
        assert!(GaussianMixture::new(vec![1.0], vec![vec![0.0; 3]], vec![DMatrix::identity(2, 2)]).is_err());
    }

    #[test]
    fn random_mixture_is_seeded() {
        let a = make_random_mixture(7, 20, 2, 10.0).unwrap();
        let b = make_random_mixture(7, 20, 2, 10.0).unwrap();
        let c = make_random_mixture(8, 20, 2, 10.0).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        assert_eq!(ja, serde_json::to_string(&b).unwrap());
        assert_ne!(ja, serde_json::to_string(&c).unwrap());
        assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for m in a.means() {
            assert!(m.iter().all(|v| v.abs() <= 10.0));
        }
    }

    #[test]
    fn mixture_json_round_trip_is_exact() {
        let a = make_random_mixture(3, 5, 4, 2.0).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let b: GaussianMixture = serde_json::from_str(&json).unwrap();
        assert_eq!(json, serde_json::to_string(&b).unwrap());
        let x = [0.3, -1.0, 2.0, 0.0];
        assert_eq!(a.logpdf(&x), b.logpdf(&x));
    }

    #[test]
    fn level_conditioning() {
        let t = LevelConditionedTarget::new(single(2), -30.0).unwrap();
        assert_eq!(t.log_density(&[0.0, 0.0]), f64::NEG_INFINITY);
        let x = [8.0, 0.0];
        assert_eq!(t.log_density(&x), t.base.logpdf(&x));
    }

    #[test]
    fn boltzmann_ratio_identity() {
        let t = BoltzmannTarget::new(eggholder_problem(), 2.0).unwrap();
        let x = Point::new(vec![10.0, 20.0]).unwrap();
        let z = Point::new(vec![-100.0, 300.0]).unwrap();
        let (fx, fz) = (eggholder(x.coords()), eggholder(z.coords()));
        assert_eq!(log_acceptance(&t, &x, &z).unwrap(), (-(fz - fx) / 2.0).min(0.0));
        assert_eq!(t.log_density(&[600.0, 0.0]), f64::NEG_INFINITY);
        assert!(BoltzmannTarget::new(eggholder_problem(), 0.0).is_err());
    }
}
