//! Two-way within transformation by alternating projections.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::RegressionSample;
use super::EstimatorError;

/// Outcome and bin-dummy columns with product and retailer means removed.
#[derive(Debug, Clone, PartialEq)]
pub struct WithinTransformed {
    /// Non-reference bins, ascending; one design column each.
    pub bins: Vec<i32>,
    pub y: Vec<f64>,
    /// Column-major design: `x[c][row]`.
    pub x: Vec<Vec<f64>>,
    pub convergence: Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    /// Largest number of sweeps any column needed.
    pub iterations: usize,
    /// Largest group mean left in any column at exit.
    pub final_change: f64,
    pub tol: f64,
    pub max_iter: usize,
}

/// Group structure shared by every column.
pub(crate) struct Groups {
    products: Vec<usize>,
    retailers: Vec<usize>,
    product_counts: Vec<f64>,
    retailer_counts: Vec<f64>,
}

impl Groups {
    pub(crate) fn new(sample: &RegressionSample) -> Self {
        let products: Vec<usize> = sample.rows().iter().map(|r| r.product).collect();
        let retailers: Vec<usize> = sample.rows().iter().map(|r| r.retailer).collect();
        let mut product_counts = vec![0.0; sample.n_products()];
        let mut retailer_counts = vec![0.0; sample.n_retailers()];
        for (&p, &r) in products.iter().zip(&retailers) {
            product_counts[p] += 1.0;
            retailer_counts[r] += 1.0;
        }
        Groups {
            products,
            retailers,
            product_counts,
            retailer_counts,
        }
    }

    fn means(ids: &[usize], counts: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|m| *m = 0.0);
        for (&g, &x) in ids.iter().zip(v) {
            out[g] += x;
        }
        for (m, &c) in out.iter_mut().zip(counts) {
            if c > 0.0 {
                *m /= c;
            }
        }
    }

    /// Demean one column in place. Returns (sweeps, largest remaining mean).
    ///
    /// A sweep removes product means, then retailer means. After the
    /// retailer step all retailer means are zero, so the largest product
    /// mean is the largest change the next sweep would make; iteration
    /// stops once it is below `tol`.
    pub(crate) fn demean(
        &self,
        v: &mut [f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<(usize, f64), f64> {
        let mut pm = vec![0.0; self.product_counts.len()];
        let mut rm = vec![0.0; self.retailer_counts.len()];
        let max_abs = |m: &[f64]| m.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));

        Self::means(&self.products, &self.product_counts, v, &mut pm);
        let mut residual = max_abs(&pm);
        if residual < tol {
            Self::means(&self.retailers, &self.retailer_counts, v, &mut rm);
            if max_abs(&rm) < tol {
                return Ok((0, residual.max(max_abs(&rm))));
            }
        }
        for sweep in 1..=max_iter {
            for (x, &g) in v.iter_mut().zip(&self.products) {
                *x -= pm[g];
            }
            Self::means(&self.retailers, &self.retailer_counts, v, &mut rm);
            for (x, &g) in v.iter_mut().zip(&self.retailers) {
                *x -= rm[g];
            }
            Self::means(&self.products, &self.product_counts, v, &mut pm);
            residual = max_abs(&pm);
            if residual < tol {
                return Ok((sweep, residual));
            }
        }
        Err(residual)
    }
}

/// Remove product and retailer fixed effects from the outcome and from one
/// dummy column per non-reference bin.
pub fn within_transform(
    sample: &RegressionSample,
    ref_bin: i32,
    tol: f64,
    max_iter: usize,
) -> Result<WithinTransformed, EstimatorError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(EstimatorError::InvalidOption(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let bins: Vec<i32> = sample
        .bins()
        .into_iter()
        .filter(|&b| b != ref_bin)
        .collect();
    let groups = Groups::new(sample);

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(bins.len() + 1);
    columns.push(sample.rows().iter().map(|r| r.y).collect());
    for &b in &bins {
        columns.push(
            sample
                .rows()
                .iter()
                .map(|r| if r.bin == b { 1.0 } else { 0.0 })
                .collect(),
        );
    }

    let results: Vec<Result<(usize, f64), f64>> = columns
        .par_iter_mut()
        .map(|col| groups.demean(col, tol, max_iter))
        .collect();

    let mut iterations = 0;
    let mut final_change = 0.0_f64;
    for r in results {
        match r {
            Ok((it, change)) => {
                iterations = iterations.max(it);
                final_change = final_change.max(change);
            }
            Err(residual) => return Err(EstimatorError::NotConverged { max_iter, residual }),
        }
    }
    let mut columns = columns.into_iter();
    let y = columns.next().unwrap_or_default();
    Ok(WithinTransformed {
        bins,
        y,
        x: columns.collect(),
        convergence: Convergence {
            iterations,
            final_change,
            tol,
            max_iter,
        },
    })
}
