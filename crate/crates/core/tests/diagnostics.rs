use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use skipping_core::diagnostics::{
    batch_means, chi_square_sf, ks_two_sample, lag1_autocovariance, transition_balance_test,
};
use skipping_core::{Error, RngStream};

fn metropolis_on_five_states(seed: u64, n: usize) -> Vec<f64> {
    let w = [1.0, 2.0, 3.0, 2.0, 1.0];
    let mut rng = RngStream::new(seed);
    let mut s = 2usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut j = rng.random_range(0..4);
        if j >= s {
            j += 1;
        }
        if rng.random::<f64>() < w[j] / w[s] {
            s = j;
        }
        out.push(s as f64 + 0.5);
    }
    out
}

#[test]
fn ks_is_calibrated_on_gamma_samples() {
    let g = Gamma::new(5.0, 1.0).unwrap();
    let mut passed = 0;
    for rep in 0..100u64 {
        let mut a_rng = RngStream::new(2 * rep);
        let mut b_rng = RngStream::new(2 * rep + 1);
        let a: Vec<f64> = (0..10_000).map(|_| g.sample(&mut a_rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| g.sample(&mut b_rng)).collect();
        if ks_two_sample(&a, &b).unwrap() > 0.01 {
            passed += 1;
        }
    }
    assert!(passed >= 95, "{passed}");
}

#[test]
fn ks_detects_a_shift() {
    let mut rng = RngStream::new(9);
    let a: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let b: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.3).collect();
    assert!(ks_two_sample(&a, &b).unwrap() < 1e-6);
}

#[test]
fn balance_test_is_calibrated_on_a_reversible_chain() {
    let edges = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    let passed = (0..100u64)
        .filter(|&seed| transition_balance_test(&metropolis_on_five_states(seed, 10_000), &edges).unwrap() > 0.01)
        .count();
    assert!(passed >= 95, "{passed}");
}

#[test]
fn balance_test_rejects_a_biased_cycle() {
    // mostly 0 -> 1 -> 2 -> 0, occasionally backwards
    let mut rng = RngStream::new(3);
    let mut s = 0usize;
    let states: Vec<f64> = (0..10_000)
        .map(|_| {
            s = if rng.random::<f64>() < 0.7 { (s + 1) % 3 } else { (s + 2) % 3 };
            s as f64 + 0.5
        })
        .collect();
    assert!(transition_balance_test(&states, &[0.0, 1.0, 2.0, 3.0]).unwrap() < 1e-6);
}

#[test]
fn balance_test_reports_sparse_bins() {
    let states = [0.5, 1.5, 0.5, 1.5];
    assert!(matches!(
        transition_balance_test(&states, &[0.0, 1.0, 2.0]),
        Err(Error::SparseBins)
    ));
}

#[test]
fn batch_means_error_shrinks_like_root_n() {
    let mut rng = RngStream::new(4);
    let big: Vec<f64> = (0..160_000).map(|_| rng.sample(StandardNormal)).collect();
    let small = batch_means(&big[..40_000]).unwrap();
    let large = batch_means(&big).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio - 2.0).abs() < 0.5, "{ratio}");
}

#[test]
fn iid_lag1_is_near_zero() {
    let mut rng = RngStream::new(5);
    let v: Vec<f64> = (0..20_000).map(|_| rng.sample(StandardNormal)).collect();
    let (a, se) = lag1_autocovariance(&v).unwrap();
    assert!(a.abs() < 3.0 * se, "{a} ± {se}");
}

#[test]
fn chi_square_tail_values() {
    // P(χ²_1 > 3.841459) = 0.05, P(χ²_4 > 13.2767) = 0.01
    assert!((chi_square_sf(3.841_459, 1.0).unwrap() - 0.05).abs() < 1e-6);
    assert!((chi_square_sf(13.276_704, 4.0).unwrap() - 0.01).abs() < 1e-6);
}

proptest! {
    #[test]
    fn estimators_are_pure(seed in any::<u64>()) {
        let v = metropolis_on_five_states(seed, 2000);
        prop_assert_eq!(batch_means(&v).unwrap(), batch_means(&v).unwrap());
        prop_assert_eq!(lag1_autocovariance(&v).unwrap(), lag1_autocovariance(&v).unwrap());
    }

    #[test]
    fn ks_p_value_is_a_probability(a in prop::collection::vec(-1e3f64..1e3, 1..200), b in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let p = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn batch_means_of_a_constant(c in -1e6f64..1e6, n in 100usize..5000) {
        let est = batch_means(&vec![c; n]).unwrap();
        prop_assert!((est.mean - c).abs() <= 1e-9 * c.abs().max(1.0));
        prop_assert!(est.std_error <= 1e-9 * c.abs().max(1.0));
        prop_assert!(est.n_batches >= 10);
    }
}
