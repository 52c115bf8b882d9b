//! Underlying proposal densities, radial increments conditional on a
//! direction, halting-index laws and directional densities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp, Gamma, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::point::{canonical_axis, check_unit, norm};
use crate::rng::RngStream;

/// Law of `|Y - X|` for a radially symmetric proposal.
///
/// `Constant` is degenerate (no density); it exists for hand-checkable tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Constant { radius: f64 },
}

impl RadiusLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadiusLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            RadiusLaw::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
            RadiusLaw::Constant { radius } => radius > 0.0 && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("radius", format!("{self:?} has non-positive parameters")))
        }
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        loop {
            let r = match *self {
                RadiusLaw::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
                RadiusLaw::Gamma { shape, rate } => {
                    Gamma::new(shape, 1.0 / rate).unwrap().sample(rng)
                }
                RadiusLaw::Constant { radius } => radius,
            };
            if r > 0.0 {
                return r;
            }
        }
    }
}

/// `N(0, Σ)` with its Cholesky factor and precision matrix cached.
#[derive(Debug, Clone)]
pub struct GaussianCov {
    cov: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl GaussianCov {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || cov.nrows() == 0 {
            return Err(Error::param("covariance", "must be a non-empty square matrix"));
        }
        let asym = (&cov - cov.transpose()).abs().max();
        if asym > 1e-12 * cov.abs().max().max(1.0) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = cov.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let precision = chol.inverse();
        Ok(GaussianCov {
            chol_lower: chol.l(),
            precision,
            cov,
        })
    }

    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::param("variance", "must be positive and finite"));
        }
        Self::new(DMatrix::from_diagonal_element(dim, dim, variance))
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower Cholesky factor `L`, `Σ = L Lᵀ`.
    pub fn chol_lower(&self) -> &DMatrix<f64> {
        &self.chol_lower
    }

    /// `φᵀ Σ⁻¹ φ`
    pub fn precision_quad(&self, phi: &[f64]) -> f64 {
        let v = DVector::from_column_slice(phi);
        (v.transpose() * &self.precision * &v)[(0, 0)]
    }
}

#[derive(Debug, Clone)]
pub enum ProposalKind {
    RadiallySymmetric(RadiusLaw),
    Gaussian(GaussianCov),
}

/// Symmetric underlying proposal `q` with `q(0) > 0`.
#[derive(Debug, Clone)]
pub struct UnderlyingProposal {
    kind: ProposalKind,
    dim: usize,
    equal_increments: bool,
}

impl UnderlyingProposal {
    pub fn gaussian(cov: GaussianCov) -> Self {
        UnderlyingProposal {
            dim: cov.dim(),
            kind: ProposalKind::Gaussian(cov),
            equal_increments: false,
        }
    }

    /// `N(0, scale² I)`.
    pub fn isotropic_gaussian(dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("scale", "must be positive and finite"));
        }
        Ok(Self::gaussian(GaussianCov::isotropic(dim, scale * scale)?))
    }

    pub fn radial(dim: usize, radius: RadiusLaw) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        radius.validate()?;
        Ok(UnderlyingProposal {
            kind: ProposalKind::RadiallySymmetric(radius),
            dim,
            equal_increments: false,
        })
    }

    /// Reuse the first radial increment for every skip.
    pub fn with_equal_increments(mut self, on: bool) -> Self {
        self.equal_increments = on;
        self
    }

    pub fn equal_increments(&self) -> bool {
        self.equal_increments
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ProposalKind {
        &self.kind
    }

    /// Draws an offset `Y - X` from `q`. Never returns the zero vector.
    pub fn sample_offset(&self, rng: &mut RngStream) -> Vec<f64> {
        loop {
            let v = match &self.kind {
                ProposalKind::Gaussian(g) => {
                    let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                    let l = &g.chol_lower;
                    (0..self.dim)
                        .map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum())
                        .collect::<Vec<f64>>()
                }
                ProposalKind::RadiallySymmetric(law) => {
                    let phi = uniform_direction(self.dim, rng);
                    let r = law.sample(rng);
                    phi.into_iter().map(|c| c * r).collect()
                }
            };
            if norm(&v) > 0.0 {
                return v;
            }
        }
    }

    /// Draws `|Y - X|` conditional on the direction `phi`.
    ///
    /// For `N(0, Σ)` this is `sqrt(W / φᵀΣ⁻¹φ)` with `W ~ χ²_d`, which has the
    /// generalized gamma density
    /// `c^{d/2} / (2^{d/2-1} Γ(d/2)) r^{d-1} exp(-c r²/2)`, `c = φᵀΣ⁻¹φ`.
    /// Radially symmetric proposals ignore the direction.
    pub fn sample_radial_increment(&self, phi: &[f64], rng: &mut RngStream) -> Result<f64> {
        check_unit(phi)?;
        Ok(self.radial_increment_unchecked(phi, rng))
    }

    pub(crate) fn radial_increment_unchecked(&self, phi: &[f64], rng: &mut RngStream) -> f64 {
        match &self.kind {
            ProposalKind::Gaussian(g) => {
                let c = g.precision_quad(phi);
                let chi = ChiSquared::new(self.dim as f64).unwrap();
                loop {
                    let w: f64 = chi.sample(rng);
                    if w > 0.0 {
                        return (w / c).sqrt();
                    }
                }
            }
            ProposalKind::RadiallySymmetric(law) => law.sample(rng),
        }
    }
}

/// Uniform direction on the unit sphere `S^{d-1}` (`±1` when `d = 1`).
pub fn uniform_direction(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Log of the surface measure of `S^{d-1}` (counting measure for `d = 1`).
pub fn log_sphere_area(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    (2.0f64).ln() + h * PI.ln() - ln_gamma(h)
}

/// One distribution on the halting index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HaltingLaw {
    Deterministic { k: u64 },
    /// `min(G, cap)` with `G` geometric on `{1, 2, ...}` with success probability `p`.
    Geometric {
        p: f64,
        #[serde(default = "default_geometric_cap")]
        cap: u64,
    },
    /// No truncation; reaching `safety_cap` skips is reported as an error.
    Infinite { safety_cap: u64 },
}

fn default_geometric_cap() -> u64 {
    10_000
}

impl HaltingLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            HaltingLaw::Deterministic { k: 0 } => Err(Error::param("k", "must be >= 1")),
            HaltingLaw::Geometric { p, .. } if !(p > 0.0 && p <= 1.0) => {
                Err(Error::param("p", "must lie in (0, 1]"))
            }
            HaltingLaw::Geometric { cap: 0, .. } => Err(Error::param("cap", "must be >= 1")),
            HaltingLaw::Infinite { safety_cap: 0 } => {
                Err(Error::param("safety_cap", "must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut RngStream) -> HaltDraw {
        match *self {
            HaltingLaw::Deterministic { k } => HaltDraw::Finite(k),
            HaltingLaw::Geometric { p, cap } => {
                let failures = Geometric::new(p).unwrap().sample(rng);
                HaltDraw::Finite(failures.saturating_add(1).min(cap))
            }
            HaltingLaw::Infinite { safety_cap } => HaltDraw::Unbounded { safety_cap },
        }
    }
}

/// A sampled halting index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltDraw {
    Finite(u64),
    Unbounded { safety_cap: u64 },
}

impl HaltDraw {
    /// Largest number of skipping-chain states allowed.
    pub fn limit(&self) -> u64 {
        match *self {
            HaltDraw::Finite(k) => k,
            HaltDraw::Unbounded { safety_cap } => safety_cap,
        }
    }
}

type DirectionalLaw = Arc<dyn Fn(&[f64]) -> HaltingLaw + Send + Sync>;

/// Halting-index distribution, optionally depending on the skip direction.
#[derive(Clone)]
pub struct HaltingIndex {
    source: HaltingSource,
}

#[derive(Clone)]
enum HaltingSource {
    Fixed(HaltingLaw),
    ByDirection(DirectionalLaw),
}

impl fmt::Debug for HaltingIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            HaltingSource::Fixed(law) => f.debug_tuple("HaltingIndex").field(law).finish(),
            HaltingSource::ByDirection(_) => f.write_str("HaltingIndex(<direction-dependent>)"),
        }
    }
}

impl HaltingIndex {
    pub fn new(law: HaltingLaw) -> Result<Self> {
        law.validate()?;
        Ok(HaltingIndex {
            source: HaltingSource::Fixed(law),
        })
    }

    pub fn deterministic(k: u64) -> Result<Self> {
        Self::new(HaltingLaw::Deterministic { k })
    }

    pub fn geometric(p: f64, cap: u64) -> Result<Self> {
        Self::new(HaltingLaw::Geometric { p, cap })
    }

    pub fn infinite(safety_cap: u64) -> Result<Self> {
        Self::new(HaltingLaw::Infinite { safety_cap })
    }

    /// Direction-dependent law. `law` only ever sees the canonical member of
    /// each antipodal pair, so the laws for `φ` and `-φ` coincide.
    pub fn by_direction<F>(law: F) -> Self
    where
        F: Fn(&[f64]) -> HaltingLaw + Send + Sync + 'static,
    {
        HaltingIndex {
            source: HaltingSource::ByDirection(Arc::new(law)),
        }
    }

    pub fn is_direction_dependent(&self) -> bool {
        matches!(self.source, HaltingSource::ByDirection(_))
    }

    /// The law in force for direction `phi`.
    pub fn law_for(&self, phi: Option<&[f64]>) -> Result<HaltingLaw> {
        match &self.source {
            HaltingSource::Fixed(law) => Ok(*law),
            HaltingSource::ByDirection(f) => {
                let phi = phi.ok_or_else(|| {
                    Error::param("phi", "required for a direction-dependent halting index")
                })?;
                let law = f(&canonical_axis(phi));
                law.validate()?;
                Ok(law)
            }
        }
    }

    pub fn sample_halting(&self, phi: Option<&[f64]>, rng: &mut RngStream) -> Result<HaltDraw> {
        Ok(self.law_for(phi)?.sample(rng))
    }
}

/// Location-dependent density of the skip direction on the unit sphere,
/// with respect to surface measure (counting measure when `d = 1`).
pub trait DirectionalDensity: Send + Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64], phi: &[f64]) -> f64;

    fn sample(&self, x: &[f64], rng: &mut RngStream) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct UniformDirections {
    dim: usize,
}

impl UniformDirections {
    pub fn new(dim: usize) -> Self {
        UniformDirections { dim }
    }
}

impl DirectionalDensity for UniformDirections {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, _x: &[f64], _phi: &[f64]) -> f64 {
        -log_sphere_area(self.dim)
    }

    fn sample(&self, _x: &[f64], rng: &mut RngStream) -> Vec<f64> {
        uniform_direction(self.dim, rng)
    }
}

/// Uniform on each hemisphere of `axis`, with mass `p(x)` on the positive one,
/// `p(x) = 1 / (1 + exp(slope * (axisᵀx - center)))`.
#[derive(Debug, Clone)]
pub struct HemisphereTilt {
    axis: Vec<f64>,
    center: f64,
    slope: f64,
}

impl HemisphereTilt {
    pub fn new(axis: Vec<f64>, center: f64, slope: f64) -> Result<Self> {
        check_unit(&axis)?;
        Ok(HemisphereTilt {
            axis,
            center,
            slope,
        })
    }

    fn positive_mass(&self, x: &[f64]) -> f64 {
        let s: f64 = self.axis.iter().zip(x).map(|(a, b)| a * b).sum();
        1.0 / (1.0 + (self.slope * (s - self.center)).exp())
    }
}

impl DirectionalDensity for HemisphereTilt {
    fn dim(&self) -> usize {
        self.axis.len()
    }

    fn log_density(&self, x: &[f64], phi: &[f64]) -> f64 {
        let side: f64 = self.axis.iter().zip(phi).map(|(a, b)| a * b).sum();
        let p = self.positive_mass(x);
        let mass = if side > 0.0 { p } else { 1.0 - p };
        // each hemisphere carries half the surface
        mass.ln() + 2f64.ln() - log_sphere_area(self.dim())
    }

    fn sample(&self, x: &[f64], rng: &mut RngStream) -> Vec<f64> {
        let mut u = uniform_direction(self.dim(), rng);
        let side: f64 = self.axis.iter().zip(&u).map(|(a, b)| a * b).sum();
        if side < 0.0 {
            u.iter_mut().for_each(|c| *c = -*c);
        }
        if rng.random::<f64>() >= self.positive_mass(x) {
            u.iter_mut().for_each(|c| *c = -*c);
        }
        u
    }
}
