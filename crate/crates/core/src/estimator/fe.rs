use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sample::RegressionSample;
use super::{EstimatorError, EventStudyFit};

/// Recovered product and retailer intercepts.
///
/// Retailer effects average to zero within every connected component of the
/// product–retailer graph; product effects absorb the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEffectsSolution {
    pub product_effects: BTreeMap<String, f64>,
    pub retailer_effects: BTreeMap<String, f64>,
    pub iterations: usize,
    /// Largest coefficient update in the final sweep.
    pub final_change: f64,
}

/// Solve `y − Xβ = α_i + δ_j + e` for the effects by Gauss–Seidel sweeps.
pub fn recover_fixed_effects(
    sample: &RegressionSample,
    fit: &EventStudyFit,
    tol: f64,
    max_iter: usize,
) -> Result<FixedEffectsSolution, EstimatorError> {
    let beta: BTreeMap<i32, f64> = fit
        .bins
        .iter()
        .copied()
        .zip(fit.beta.iter().copied())
        .collect();
    let rows = sample.rows();
    let r: Vec<f64> = rows
        .iter()
        .map(|row| row.y - beta.get(&row.bin).copied().unwrap_or(0.0))
        .collect();

    let (np, nr) = (sample.n_products(), sample.n_retailers());
    let mut pc = vec![0.0; np];
    let mut rc = vec![0.0; nr];
    for row in rows {
        pc[row.product] += 1.0;
        rc[row.retailer] += 1.0;
    }
    let mut alpha = vec![0.0; np];
    let mut delta = vec![0.0; nr];
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while change >= tol {
        if iterations == max_iter {
            return Err(EstimatorError::NotConverged {
                max_iter,
                residual: change,
            });
        }
        iterations += 1;
        let mut next_alpha = vec![0.0; np];
        for (row, v) in rows.iter().zip(&r) {
            next_alpha[row.product] += v - delta[row.retailer];
        }
        next_alpha.iter_mut().zip(&pc).for_each(|(a, c)| *a /= c);
        let mut next_delta = vec![0.0; nr];
        for (row, v) in rows.iter().zip(&r) {
            next_delta[row.retailer] += v - next_alpha[row.product];
        }
        next_delta.iter_mut().zip(&rc).for_each(|(d, c)| *d /= c);
        change = alpha
            .iter()
            .zip(&next_alpha)
            .chain(delta.iter().zip(&next_delta))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        alpha = next_alpha;
        delta = next_delta;
    }

    // Normalize per connected component.
    let component = components(sample);
    let mut sums: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for (j, d) in delta.iter().enumerate() {
        let e = sums.entry(component[np + j]).or_default();
        e.0 += d;
        e.1 += 1.0;
    }
    for (j, d) in delta.iter_mut().enumerate() {
        let (s, c) = sums[&component[np + j]];
        *d -= s / c;
    }
    for (i, a) in alpha.iter_mut().enumerate() {
        if let Some((s, c)) = sums.get(&component[i]) {
            *a += s / c;
        }
    }

    Ok(FixedEffectsSolution {
        product_effects: sample.product_keys().iter().cloned().zip(alpha).collect(),
        retailer_effects: sample.retailer_keys().iter().cloned().zip(delta).collect(),
        iterations,
        final_change: change,
    })
}

/// Component label of each node (products first, then retailers).
fn components(sample: &RegressionSample) -> Vec<usize> {
    let np = sample.n_products();
    let n = np + sample.n_retailers();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for row in sample.rows() {
        let a = find(&mut parent, row.product);
        let b = find(&mut parent, np + row.retailer);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}
