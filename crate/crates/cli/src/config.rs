//! Experiment configuration read from TOML.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use skipping_core::proposals::{GaussianCov, HaltingIndex, HaltingLaw, RadiusLaw, UnderlyingProposal};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Uniform on a union of closed intervals.
    Intervals { intervals: Vec<[f64; 2]> },
    /// Random Gaussian mixture restricted to `{log ρ <= level_log}`.
    MixtureTail {
        dim: usize,
        mixture_seed: u64,
        #[serde(default = "default_components")]
        components: usize,
        spread: f64,
        level_log: f64,
    },
    /// `exp(-f / T)` for eggholder on its box.
    EggholderBoltzmann { temperature: f64 },
    /// Eggholder as an objective for the monotonic skipping sampler.
    Eggholder,
}

fn default_components() -> usize {
    20
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::Intervals { .. } => 1,
            TargetSpec::MixtureTail { dim, .. } => *dim,
            TargetSpec::EggholderBoltzmann { .. } | TargetSpec::Eggholder => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Rwm,
    Skipping,
    Mss,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub proposal: ProposalSpec,
    #[serde(default = "default_halting")]
    pub halting: HaltingLaw,
    #[serde(default)]
    pub equal_increments: bool,
    /// Replace the proposal scale by one tuned for this RWM acceptance rate.
    #[serde(default)]
    pub tune: bool,
    #[serde(default = "default_target_acceptance")]
    pub target_acceptance: f64,
    #[serde(default = "default_pilot_steps")]
    pub pilot_steps: usize,
}

fn default_halting() -> HaltingLaw {
    HaltingLaw::Deterministic { k: 1 }
}

fn default_target_acceptance() -> f64 {
    0.25
}

fn default_pilot_steps() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProposalSpec {
    /// `N(0, scale² I)`.
    IsotropicGaussian { scale: f64 },
    /// Rows of the covariance matrix.
    Gaussian { covariance: Vec<Vec<f64>> },
    Radial { radius: RadiusLaw },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Starting point; a target-specific default when absent.
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    /// Functionals to average: `x<i>`, `x<i>^2` or `norm`.
    #[serde(default = "default_averages")]
    pub averages: Vec<String>,
}

fn default_steps() -> usize {
    10_000
}

fn default_burn_in() -> f64 {
    0.1
}

fn default_chains() -> usize {
    1
}

fn default_averages() -> Vec<String> {
    vec!["x1".to_string()]
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            steps: default_steps(),
            seed: 0,
            burn_in: default_burn_in(),
            chains: default_chains(),
            start: None,
            averages: default_averages(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_out() }
    }
}

/// A functional of the chain state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Coord(usize),
    CoordSquared(usize),
    Norm,
}

impl Functional {
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        if s == "norm" {
            return Ok(Functional::Norm);
        }
        let (body, squared) = match s.strip_suffix("^2") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let i: usize = body
            .strip_prefix('x')
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| anyhow!("expected `x<i>`, `x<i>^2` or `norm`, got `{s}`"))?;
        if i == 0 || i > dim {
            bail!("`{s}` refers to coordinate {i} but the target has dimension {dim}");
        }
        Ok(if squared {
            Functional::CoordSquared(i - 1)
        } else {
            Functional::Coord(i - 1)
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Functional::Coord(i) => x[i],
            Functional::CoordSquared(i) => x[i] * x[i],
            Functional::Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks everything that deserialization cannot, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let dim = self.target.dim();
        match &self.target {
            TargetSpec::Intervals { intervals } => {
                if intervals.is_empty() {
                    bail!("target.intervals: must not be empty");
                }
                if intervals.iter().any(|[a, b]| a.is_nan() || b.is_nan() || a > b) {
                    bail!("target.intervals: every entry must be [lower, upper] with lower <= upper");
                }
            }
            TargetSpec::MixtureTail {
                dim,
                components,
                spread,
                level_log,
                ..
            } => {
                if *dim == 0 {
                    bail!("target.dim: must be at least 1");
                }
                if *components == 0 {
                    bail!("target.components: must be at least 1");
                }
                if !(spread.is_finite() && *spread >= 0.0) {
                    bail!("target.spread: must be non-negative and finite");
                }
                if level_log.is_nan() {
                    bail!("target.level_log: must be a number");
                }
            }
            TargetSpec::EggholderBoltzmann { temperature } => {
                if !(temperature.is_finite() && *temperature > 0.0) {
                    bail!("target.temperature: must be positive and finite");
                }
            }
            TargetSpec::Eggholder => {}
        }
        let s = &self.sampler;
        match (s.kind, &self.target) {
            (SamplerKind::Mss, TargetSpec::Eggholder) => {}
            (SamplerKind::Mss, _) => bail!("sampler.kind: `mss` needs target.kind = \"eggholder\""),
            (_, TargetSpec::Eggholder) => {
                bail!("target.kind: `eggholder` is an objective; use sampler.kind = \"mss\"")
            }
            _ => {}
        }
        self.proposal().context("sampler.proposal")?;
        self.halting().context("sampler.halting")?;
        if s.tune {
            if s.kind == SamplerKind::Mss {
                bail!("sampler.tune: tuning applies to rwm and skipping samplers");
            }
            if !matches!(s.proposal, ProposalSpec::IsotropicGaussian { .. }) {
                bail!("sampler.tune: needs sampler.proposal.kind = \"isotropic_gaussian\"");
            }
        }
        if !(s.target_acceptance > 0.0 && s.target_acceptance < 1.0) {
            bail!("sampler.target_acceptance: must lie in (0, 1)");
        }
        if s.pilot_steps == 0 {
            bail!("sampler.pilot_steps: must be at least 1");
        }
        let r = &self.run;
        if r.steps == 0 {
            bail!("run.steps: must be at least 1");
        }
        if r.chains == 0 {
            bail!("run.chains: must be at least 1");
        }
        if !(0.0..1.0).contains(&r.burn_in) {
            bail!("run.burn_in: must lie in [0, 1)");
        }
        if let Some(start) = &r.start {
            if start.len() != dim {
                bail!("run.start: has {} coordinates but the target has dimension {dim}", start.len());
            }
            if start.iter().any(|v| !v.is_finite()) {
                bail!("run.start: coordinates must be finite");
            }
        }
        for a in &r.averages {
            Functional::parse(a, dim).context("run.averages")?;
        }
        Ok(())
    }

    pub fn functionals(&self) -> Vec<(String, Functional)> {
        let dim = self.target.dim();
        self.run
            .averages
            .iter()
            .map(|a| (a.clone(), Functional::parse(a, dim).expect("validated")))
            .collect()
    }

    pub fn proposal(&self) -> Result<UnderlyingProposal> {
        let dim = self.target.dim();
        let q = match &self.sampler.proposal {
            ProposalSpec::IsotropicGaussian { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    bail!("scale: must be positive and finite");
                }
                UnderlyingProposal::isotropic_gaussian(dim, *scale)?
            }
            ProposalSpec::Gaussian { covariance } => {
                if covariance.len() != dim || covariance.iter().any(|row| row.len() != dim) {
                    bail!("covariance: must be a {dim} x {dim} matrix");
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| covariance[i][j]);
                UnderlyingProposal::gaussian(GaussianCov::new(m).context("covariance")?)
            }
            ProposalSpec::Radial { radius } => UnderlyingProposal::radial(dim, *radius).context("radius")?,
        };
        Ok(q.with_equal_increments(self.sampler.equal_increments))
    }

    pub fn halting(&self) -> Result<HaltingIndex> {
        Ok(HaltingIndex::new(self.sampler.halting)?)
    }
}
