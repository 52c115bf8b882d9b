//! Ergodic averages with batch-means errors, lag-1 autocovariance, the
//! two-sample Kolmogorov–Smirnov test and a flow-symmetry test on binned
//! transitions.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::trace::ChainResult;

/// Fraction of a trace discarded before stationary diagnostics.
pub const DEFAULT_BURN_IN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchMeansEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_batches: usize,
}

/// `f` applied to every visited state of a chain.
pub fn series<F: Fn(&[f64]) -> f64>(res: &ChainResult, f: F) -> Vec<f64> {
    res.states().map(|p| f(p.coords())).collect()
}

/// Drops the leading `fraction` of `values`.
pub fn burn_in(values: &[f64], fraction: f64) -> &[f64] {
    let skip = ((values.len() as f64) * fraction.clamp(0.0, 1.0)).floor() as usize;
    &values[skip..]
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample mean with a batch-means standard error from `floor(sqrt(n))`
/// batches of equal length (a trailing remainder only enters the mean).
pub fn batch_means(values: &[f64]) -> Result<BatchMeansEstimate> {
    let n = values.len();
    if n < 100 {
        return Err(Error::param("values", "need at least 100 values"));
    }
    let n_batches = (n as f64).sqrt().floor() as usize;
    let size = n / n_batches;
    let means: Vec<f64> = values.chunks_exact(size).take(n_batches).map(mean).collect();
    let grand = mean(&means);
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    Ok(BatchMeansEstimate {
        mean: mean(values),
        std_error: (var / n_batches as f64).sqrt(),
        n_batches,
    })
}

/// Ergodic average of `f` over the visited states of `res`.
pub fn ergodic_average<F: Fn(&[f64]) -> f64>(res: &ChainResult, f: F) -> Result<BatchMeansEstimate> {
    batch_means(&series(res, f))
}

/// `(1/(n-1)) Σ (f_i - f̄)(f_{i+1} - f̄)` and the batch-means standard error
/// of the lagged products.
pub fn lag1_autocovariance(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 1000 {
        return Err(Error::param("values", "need at least 1000 values"));
    }
    let m = mean(values);
    let products: Vec<f64> = values.windows(2).map(|w| (w[0] - m) * (w[1] - m)).collect();
    let est = batch_means(&products)?;
    Ok((est.mean, est.std_error))
}

/// Asymptotic two-sample Kolmogorov–Smirnov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("sample", "both samples must be non-empty"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::param("sample", "NaN in sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] == v {
            i += 1;
        }
        while j < m && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    if d == 0.0 {
        return Ok(1.0);
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    Ok(kolmogorov_q((en + 0.12 + 0.11 / en) * d))
}

/// `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} exp(-2 j² λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Index of the bin `[edges[i], edges[i+1])` containing `x` (the last bin is
/// closed); `None` outside `[edges[0], edges[last]]`.
fn bin_of(x: f64, edges: &[f64]) -> Option<usize> {
    let last = *edges.last()?;
    if x < edges[0] || x > last || x.is_nan() {
        return None;
    }
    if x == last {
        return Some(edges.len() - 2);
    }
    Some(edges.partition_point(|&e| e <= x) - 1)
}

/// p-value for symmetry of the binned transition counts,
/// `N(i→j) = N(j→i)`, of a one-dimensional stationary trace.
///
/// Pairs with `N(i→j) + N(j→i) >= 10` enter the statistic
/// `Σ (N_ij - N_ji)² / (N_ij + N_ji)`. Conservation of visits pins the net
/// flow across every cut of the bin graph, so the statistic is referred to a
/// chi-square law whose degrees of freedom are the cycle rank of the graph of
/// included pairs; an acyclic graph yields `p = 1`.
pub fn transition_balance_test(states: &[f64], bin_edges: &[f64]) -> Result<f64> {
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) {
        return Err(Error::param("bin_edges", "need at least two strictly increasing edges"));
    }
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let bins: Vec<Option<usize>> = states.iter().map(|&x| bin_of(x, bin_edges)).collect();
    for w in bins.windows(2) {
        if let (Some(i), Some(j)) = (w[0], w[1]) {
            if i != j {
                *counts.entry((i, j)).or_default() += 1;
            }
        }
    }
    let n_bins = bin_edges.len() - 1;
    let mut parent: Vec<usize> = (0..n_bins).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut stat = 0.0;
    let mut edges = 0usize;
    let mut nodes = vec![false; n_bins];
    for i in 0..n_bins {
        for j in (i + 1)..n_bins {
            let nij = counts.get(&(i, j)).copied().unwrap_or(0) as f64;
            let nji = counts.get(&(j, i)).copied().unwrap_or(0) as f64;
            if nij + nji < 10.0 {
                continue;
            }
            stat += (nij - nji).powi(2) / (nij + nji);
            edges += 1;
            nodes[i] = true;
            nodes[j] = true;
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            parent[ri] = rj;
        }
    }
    if edges == 0 {
        return Err(Error::SparseBins);
    }
    let vertices = nodes.iter().filter(|&&b| b).count();
    let components = (0..n_bins)
        .filter(|&v| nodes[v] && find(&mut parent, v) == v)
        .count();
    let df = edges + components - vertices;
    if df == 0 {
        return Ok(1.0);
    }
    let chi = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    Ok(chi.sf(stat))
}

/// Survival function of the chi-square law with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: f64) -> Result<f64> {
    let chi = ChiSquared::new(df).map_err(|e| Error::param("df", e.to_string()))?;
    Ok(chi.sf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = RngStream::new(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn batch_means_examples() {
        let c = vec![2.5; 400];
        let e = batch_means(&c).unwrap();
        assert_eq!((e.mean, e.std_error, e.n_batches), (2.5, 0.0, 20));
        let e = batch_means(&normals(1, 10_000)).unwrap();
        assert!(e.mean.abs() < 0.04);
        assert!(batch_means(&[1.0; 99]).is_err());
    }

    #[test]
    fn batch_means_error_scales_like_inverse_root_n() {
        let small = batch_means(&normals(2, 10_000)).unwrap().std_error;
        let large = batch_means(&normals(3, 40_000)).unwrap().std_error;
        let ratio = small / large;
        assert!((1.5..=2.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn lag1_examples() {
        let (est, se) = lag1_autocovariance(&normals(4, 20_000)).unwrap();
        assert!(est.abs() <= 3.0 * se, "{est} {se}");

        // long flat runs: lag-1 autocovariance ≈ variance
        let sticky: Vec<f64> = (0..10_000).map(|i| if i < 5_000 { 0.0 } else { 1.0 }).collect();
        let (est, _) = lag1_autocovariance(&sticky).unwrap();
        let m = mean(&sticky);
        let var = sticky.iter().map(|v| (v - m).powi(2)).sum::<f64>() / sticky.len() as f64;
        assert!((est - var).abs() < 1e-3, "{est} {var}");

        let (est, se) = lag1_autocovariance(&[1.0; 2000]).unwrap();
        assert_eq!((est, se), (0.0, 0.0));
    }

    #[test]
    fn ks_examples() {
        let a = normals(5, 1000);
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 1.0);
        let shifted: Vec<f64> = (0..1000).map(|i| 100.0 + i as f64).collect();
        let low: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
        assert!(ks_two_sample(&low, &shifted).unwrap() < 1e-6);
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn kolmogorov_q_reference_values() {
        // 1 - K(λ) at the usual critical points
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 2e-4);
    }

    #[test]
    fn binning() {
        let edges = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(bin_of(0.0, &edges), Some(0));
        assert_eq!(bin_of(1.0, &edges), Some(1));
        assert_eq!(bin_of(3.0, &edges), Some(2));
        assert_eq!(bin_of(3.1, &edges), None);
        assert_eq!(bin_of(-0.1, &edges), None);
    }

    #[test]
    fn cyclic_trace_is_rejected() {
        let trace: Vec<f64> = (0..3000).map(|i| (i % 3) as f64 + 0.5).collect();
        let p = transition_balance_test(&trace, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(p < 1e-6, "{p}");
    }

    #[test]
    fn sparse_bins_are_an_error() {
        let trace = [0.5, 1.5, 0.5];
        assert_eq!(
            transition_balance_test(&trace, &[0.0, 1.0, 2.0]),
            Err(Error::SparseBins)
        );
    }

    #[test]
    fn path_graph_has_no_cycles() {
        // a birth-death walk can only produce a tree of included pairs
        let mut rng = RngStream::new(0);
        let mut x = 2usize;
        let trace: Vec<f64> = (0..5000)
            .map(|_| {
                let up: bool = rng.random();
                x = if up { (x + 1).min(4) } else { x.saturating_sub(1) };
                x as f64 + 0.5
            })
            .collect();
        assert_eq!(transition_balance_test(&trace, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 1.0);
    }
}
