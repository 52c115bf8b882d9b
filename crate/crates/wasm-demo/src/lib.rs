//! wasm-bindgen exports behind the browser demo page in `www/`.

use skipping_core::diagnostics::series;
use skipping_core::experiments::{tail_start, tune_rwm_scale, TailSetup};
use skipping_core::proposals::{HaltingIndex, UnderlyingProposal};
use skipping_core::samplers::{run_mss, run_rwm, run_skipping, SkippingConfig};
use skipping_core::targets::{eggholder, eggholder_problem, IntervalUnion};
use skipping_core::trace::ChainResult;
use skipping_core::{Point, RngStream};
use wasm_bindgen::prelude::*;

fn js(e: skipping_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn flat_states(res: &ChainResult) -> Vec<f64> {
    res.states().flat_map(|p| p.coords().iter().copied()).collect()
}

/// Two chains on the same target, with states flattened row by row.
#[wasm_bindgen]
pub struct ChainPair {
    rwm: Vec<f64>,
    skipping: Vec<f64>,
    rwm_acceptance: f64,
    skipping_acceptance: f64,
    skip_fraction: f64,
    scale: f64,
}

#[wasm_bindgen]
impl ChainPair {
    #[wasm_bindgen(getter)]
    pub fn rwm(&self) -> Vec<f64> {
        self.rwm.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn skipping(&self) -> Vec<f64> {
        self.skipping.clone()
    }

    #[wasm_bindgen(getter, js_name = rwmAcceptance)]
    pub fn rwm_acceptance(&self) -> f64 {
        self.rwm_acceptance
    }

    #[wasm_bindgen(getter, js_name = skippingAcceptance)]
    pub fn skipping_acceptance(&self) -> f64 {
        self.skipping_acceptance
    }

    #[wasm_bindgen(getter, js_name = skipFraction)]
    pub fn skip_fraction(&self) -> f64 {
        self.skip_fraction
    }

    /// Proposal standard deviation used by both chains.
    #[wasm_bindgen(getter)]
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// RWM and the skipping sampler on the uniform law on `[0,1] ∪ [gap_end, gap_end+1]`.
#[wasm_bindgen(js_name = twoIntervals)]
pub fn two_intervals(seed: u64, steps: usize, scale: f64, gap_end: f64, max_skips: u32) -> Result<ChainPair, JsError> {
    let t = IntervalUnion::new(vec![(0.0, 1.0), (gap_end, gap_end + 1.0)]).map_err(js)?;
    let q = UnderlyingProposal::isotropic_gaussian(1, scale).map_err(js)?;
    let cfg = SkippingConfig::new(q.clone(), HaltingIndex::deterministic(u64::from(max_skips)).map_err(js)?);
    let x0 = Point::new(vec![0.5]).map_err(js)?;
    let root = RngStream::new(seed);
    let rwm = run_rwm(&t, x0.clone(), &q, steps, &mut root.child(0)).map_err(js)?;
    let skip = run_skipping(&t, x0, &cfg, steps, &mut root.child(1)).map_err(js)?;
    Ok(ChainPair {
        rwm: series(&rwm, |x| x[0]),
        skipping: series(&skip, |x| x[0]),
        rwm_acceptance: rwm.acceptance_rate,
        skipping_acceptance: skip.acceptance_rate,
        skip_fraction: skip.skip_fraction,
        scale,
    })
}

/// Eggholder on an `n x n` grid over its box, row-major from `(-512, -512)`.
#[wasm_bindgen(js_name = eggholderGrid)]
pub fn eggholder_grid(n: usize) -> Vec<f64> {
    let step = if n > 1 { 1024.0 / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(eggholder(&[-512.0 + j as f64 * step, -512.0 + i as f64 * step]));
        }
    }
    out
}

/// Monotonic skipping run on eggholder from `(x, y)`; returns the visited
/// points as `x, y, f` triples, one per accepted move plus the start.
#[wasm_bindgen(js_name = mssTrajectory)]
pub fn mss_trajectory(seed: u64, x: f64, y: f64, steps: usize, scale: f64, max_skips: u32) -> Result<Vec<f64>, JsError> {
    let prob = eggholder_problem();
    let q = UnderlyingProposal::isotropic_gaussian(2, scale).map_err(js)?;
    let cfg = SkippingConfig::new(q, HaltingIndex::deterministic(u64::from(max_skips)).map_err(js)?);
    let res = run_mss(&prob, Point::new(vec![x, y]).map_err(js)?, &cfg, steps, &mut RngStream::new(seed)).map_err(js)?;
    let mut out = vec![x, y, eggholder(&[x, y])];
    for r in res.trace.iter().filter(|r| r.accepted) {
        let p = r.proposal.coords();
        out.extend([p[0], p[1], eggholder(p)]);
    }
    Ok(out)
}

/// RWM and skipping samples from the tail `{log ρ <= level}` of a random
/// mixture in the plane, both with a proposal tuned for 25% RWM acceptance.
#[wasm_bindgen(js_name = mixtureTail)]
pub fn mixture_tail(seed: u64, steps: usize, level_log: f64) -> Result<ChainPair, JsError> {
    let mut setup = TailSetup::standard(2, seed).map_err(js)?;
    setup.level_log = level_log;
    let t = setup.build().map_err(js)?;
    let root = RngStream::new(seed);
    let start = tail_start(&t, &mut root.child(0)).map_err(js)?;
    let tune = tune_rwm_scale(&t, &start, 0.25, steps.min(5000), root.child(2).seed()).map_err(js)?;
    let q = UnderlyingProposal::isotropic_gaussian(2, tune.scale).map_err(js)?;
    let rwm = run_rwm(&t, start.clone(), &q, steps, &mut root.child(2)).map_err(js)?;
    let cfg = SkippingConfig::new(q, HaltingIndex::infinite(setup.safety_cap).map_err(js)?);
    let skip = run_skipping(&t, start, &cfg, steps, &mut root.child(3)).map_err(js)?;
    Ok(ChainPair {
        rwm: flat_states(&rwm),
        skipping: flat_states(&skip),
        rwm_acceptance: rwm.acceptance_rate,
        skipping_acceptance: skip.acceptance_rate,
        skip_fraction: skip.skip_fraction,
        scale: tune.scale,
    })
}
