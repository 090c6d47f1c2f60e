//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use passthru_core::RegressionSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random unbalanced panel: `(y, bin, product, retailer)` rows with at most
/// the given sizes and at least one reference-bin row.
pub fn random_records(
    seed: u64,
    max_products: usize,
    max_retailers: usize,
    max_rows: usize,
) -> Vec<(f64, i32, String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = rng.random_range(2..=max_products);
    let nr = rng.random_range(2..=max_retailers);
    let n = rng.random_range(np.max(nr) + 5..=max_rows);
    let bins = [-9, -6, -3, 0, 3, 6, 9];
    let mut rows: Vec<(f64, i32, String, String)> = (0..n)
        .map(|i| {
            // Cover every product and retailer at least once.
            let p = if i < np { i } else { rng.random_range(0..np) };
            let r = if i < nr { i } else { rng.random_range(0..nr) };
            let b = bins[rng.random_range(0..bins.len())];
            let y = 100.0 + 3.0 * p as f64 - 2.0 * r as f64
                + 0.5 * b as f64
                + rng.random_range(-5.0..5.0);
            (y, b, format!("p{p}"), format!("r{r}"))
        })
        .collect();
    rows[0].1 = 0;
    rows
}

pub fn sample_of(records: &[(f64, i32, String, String)]) -> RegressionSample {
    RegressionSample::from_records(
        records
            .iter()
            .map(|(y, b, p, r)| (Some(*y), *b, p.as_str(), r.as_str())),
    )
    .unwrap()
}

/// Full dummy-variable regression: bin dummies (non-reference bins present
/// in the data), one dummy per product and one per retailer. Solved by a
/// pseudo-inverse, so the redundant fixed-effect levels do not matter.
pub struct DummyOls {
    pub bins: Vec<i32>,
    pub coef: DVector<f64>,
    pub residuals: Vec<f64>,
    pub rank: usize,
}

pub fn dummy_ols(records: &[(f64, i32, String, String)], ref_bin: i32) -> DummyOls {
    let mut bins: Vec<i32> = records
        .iter()
        .map(|r| r.1)
        .filter(|&b| b != ref_bin)
        .collect();
    bins.sort_unstable();
    bins.dedup();
    let products: BTreeMap<&str, usize> = records
        .iter()
        .map(|r| r.2.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .zip(0..)
        .collect();
    let retailers: BTreeMap<&str, usize> = records
        .iter()
        .map(|r| r.3.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .zip(0..)
        .collect();
    let n = records.len();
    let k = bins.len() + products.len() + retailers.len();
    let mut x = DMatrix::<f64>::zeros(n, k);
    for (i, (_, b, p, r)) in records.iter().enumerate() {
        if let Some(c) = bins.iter().position(|x| x == b) {
            x[(i, c)] = 1.0;
        }
        x[(i, bins.len() + products[p.as_str()])] = 1.0;
        x[(i, bins.len() + products.len() + retailers[r.as_str()])] = 1.0;
    }
    let y = DVector::from_iterator(n, records.iter().map(|r| r.0));
    let svd = x.clone().svd(true, true);
    let rank = svd.rank(1e-9 * svd.singular_values.max());
    let coef = svd.solve(&y, 1e-9 * svd.singular_values.max()).unwrap();
    let residuals = (&y - &x * &coef).iter().copied().collect();
    DummyOls {
        bins,
        coef,
        residuals,
        rank,
    }
}

/// Two-way clustered covariance assembled from explicit per-cluster score
/// sums keyed by the raw string labels.
pub fn brute_force_cgm(
    records: &[(f64, i32, String, String)],
    design: &DMatrix<f64>,
    residuals: &[f64],
    standard_ssc: bool,
) -> DMatrix<f64> {
    let (n, k) = design.shape();
    let xtx = design.transpose() * design;
    let bread = xtx.try_inverse().expect("invertible");
    let term = |key: &dyn Fn(usize) -> String| {
        let mut sums: BTreeMap<String, DVector<f64>> = BTreeMap::new();
        for i in 0..n {
            let s = sums.entry(key(i)).or_insert_with(|| DVector::zeros(k));
            for c in 0..k {
                s[c] += design[(i, c)] * residuals[i];
            }
        }
        let mut meat = DMatrix::<f64>::zeros(k, k);
        for s in sums.values() {
            meat += s * s.transpose();
        }
        let g = sums.len() as f64;
        let factor = if standard_ssc {
            g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64)
        } else {
            1.0
        };
        &bread * meat * &bread * factor
    };
    term(&|i| records[i].2.clone()) + term(&|i| records[i].3.clone())
        - term(&|i| format!("{}\u{1}{}", records[i].2, records[i].3))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A fit with hand-set coefficients and covariance.
pub fn hand_fit(
    bins: &[i32],
    beta: &[f64],
    vcov: Option<Vec<f64>>,
) -> passthru_core::estimator::EventStudyFit {
    use passthru_core::estimator::{
        Convergence, EventStudyFit, RmseDenominator, SmallSampleCorrection,
    };
    EventStudyFit {
        ref_bin: 0,
        bins: bins.to_vec(),
        beta: beta.to_vec(),
        vcov,
        vcov_note: None,
        n_obs: 1443,
        n_products: 40,
        n_retailers: 12,
        n_pairs: 300,
        dropped_bins: vec![],
        rmse: 12.5,
        adj_r2: Some(0.61),
        within_r2: Some(0.08),
        rss: 1.0,
        k_total: 60,
        dof_inference: 11,
        ssc: SmallSampleCorrection::Standard,
        rmse_denominator: RmseDenominator::N,
        psd_repaired: false,
        singleton_products: 0,
        singleton_retailers: 0,
        convergence: Convergence {
            iterations: 3,
            final_change: 0.0,
            tol: 1e-8,
            max_iter: 10_000,
        },
    }
}

/// Naive recursive `ILIKE`: `None` when the pattern ends in a lone escape.
pub fn ilike_oracle(pattern: &str, text: &str) -> Option<bool> {
    fn same(a: char, b: char) -> bool {
        a == b || a.to_lowercase().eq(b.to_lowercase()) || a.to_uppercase().eq(b.to_uppercase())
    }
    fn go(p: &[char], s: &[char]) -> bool {
        match p.first() {
            None => s.is_empty(),
            Some('%') => (0..=s.len()).any(|k| go(&p[1..], &s[k..])),
            Some('_') => !s.is_empty() && go(&p[1..], &s[1..]),
            Some('\\') => !s.is_empty() && same(p[1], s[0]) && go(&p[2..], &s[1..]),
            Some(&c) => !s.is_empty() && same(c, s[0]) && go(&p[1..], &s[1..]),
        }
    }
    let p: Vec<char> = pattern.chars().collect();
    let mut i = 0;
    while i < p.len() {
        if p[i] == '\\' {
            if i + 1 == p.len() {
                return None;
            }
            i += 1;
        }
        i += 1;
    }
    let s: Vec<char> = text.chars().collect();
    Some(go(&p, &s))
}
