//! Binned event-study regression with product and retailer fixed effects.
//!
//! `Y = Σ_{b≠ref} β_b·1{bin = b} + α_product + δ_retailer + ε`, fitted on
//! the within-transformed data with two-way (product, retailer) clustered
//! covariance. Treated and control samples are fitted separately.

mod demean;
mod fe;
mod sample;
mod stats;
mod tdist;
mod vcov;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use demean::{within_transform, Convergence, WithinTransformed};
pub use fe::{recover_fixed_effects, FixedEffectsSolution};
pub use sample::{Outcome, RegressionSample, SampleRow};
pub use stats::{fit_statistics, FitStatistics, RmseDenominator};
pub use tdist::{t_pvalue, t_quantile, two_sided_p, TTest};
pub use vcov::{
    bread, cgm_vcov, one_way_cluster_vcov, psd_repair, ClusterCounts, ClusterCovariance,
    SmallSampleCorrection,
};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("empty regression sample")]
    EmptySample,
    #[error("reference bin {0} has no observations")]
    NoReferenceObservations(i32),
    #[error("bin {0} is not a multiple of 3")]
    InvalidBin(i32),
    #[error(
        "within transformation did not converge after {max_iter} sweeps (residual {residual:.3e})"
    )]
    NotConverged { max_iter: usize, residual: f64 },
    #[error("design is rank deficient after dropping collinear bins")]
    RankDeficient,
    #[error("singular bread matrix")]
    SingularBread,
    #[error("two-way clustering needs at least 2 clusters per dimension (products {products}, retailers {retailers})")]
    TooFewClusters { products: usize, retailers: usize },
    #[error("{0}")]
    InvalidOption(String),
}

/// Event bins from −24 to 36 in steps of 3.
pub fn default_bin_universe() -> Vec<i32> {
    (-8..=12).map(|k| 3 * k).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub ref_bin: i32,
    pub tol: f64,
    pub max_iter: usize,
    pub ssc: SmallSampleCorrection,
    pub rmse_denominator: RmseDenominator,
    /// Bins the design could contain; those without observations are
    /// reported as dropped.
    pub bin_universe: Vec<i32>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ref_bin: 0,
            tol: 1e-8,
            max_iter: 10_000,
            ssc: SmallSampleCorrection::Standard,
            rmse_denominator: RmseDenominator::N,
            bin_universe: default_bin_universe(),
        }
    }
}

/// A fitted event study, as written to `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStudyFit {
    pub ref_bin: i32,
    /// Estimated bins, ascending.
    pub bins: Vec<i32>,
    pub beta: Vec<f64>,
    /// Row-major `bins × bins` covariance; absent when clustering is
    /// impossible (fewer than two clusters in a dimension).
    pub vcov: Option<Vec<f64>>,
    pub vcov_note: Option<String>,
    pub n_obs: usize,
    pub n_products: usize,
    pub n_retailers: usize,
    pub n_pairs: usize,
    pub dropped_bins: Vec<i32>,
    pub rmse: f64,
    pub adj_r2: Option<f64>,
    pub within_r2: Option<f64>,
    pub rss: f64,
    pub k_total: usize,
    pub dof_inference: u64,
    pub ssc: SmallSampleCorrection,
    pub rmse_denominator: RmseDenominator,
    pub psd_repaired: bool,
    pub singleton_products: usize,
    pub singleton_retailers: usize,
    pub convergence: Convergence,
}

impl EventStudyFit {
    pub fn k(&self) -> usize {
        self.bins.len()
    }

    pub fn position(&self, bin: i32) -> Option<usize> {
        self.bins.iter().position(|&b| b == bin)
    }

    pub fn coefficient(&self, bin: i32) -> Option<f64> {
        self.position(bin).map(|i| self.beta[i])
    }

    pub fn vcov_matrix(&self) -> Option<DMatrix<f64>> {
        self.vcov
            .as_ref()
            .map(|v| DMatrix::from_row_slice(self.k(), self.k(), v))
    }

    /// Clustered standard error of bin `bin`.
    pub fn se(&self, bin: i32) -> Option<f64> {
        let i = self.position(bin)?;
        self.vcov
            .as_ref()
            .map(|v| v[i * self.k() + i].max(0.0).sqrt())
    }

    pub fn t_test(&self, bin: i32) -> Option<TTest> {
        let se = self.se(bin)?;
        Some(t_pvalue(
            self.coefficient(bin)?,
            se,
            self.dof_inference.max(1),
        ))
    }
}

/// Everything produced while fitting, beyond the serializable summary.
#[derive(Debug, Clone)]
pub struct FitDetails {
    pub fit: EventStudyFit,
    pub residuals: Vec<f64>,
    pub design: DMatrix<f64>,
    pub y_within: Vec<f64>,
    pub covariance: Option<ClusterCovariance>,
    pub statistics: FitStatistics,
}

/// Fit the event study; see [`fit_event_study_detailed`] for intermediates.
pub fn fit_event_study(
    sample: &RegressionSample,
    options: &FitOptions,
) -> Result<EventStudyFit, EstimatorError> {
    fit_event_study_detailed(sample, options).map(|d| d.fit)
}

pub fn fit_event_study_detailed(
    sample: &RegressionSample,
    options: &FitOptions,
) -> Result<FitDetails, EstimatorError> {
    if sample.is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    if !sample.rows().iter().any(|r| r.bin == options.ref_bin) {
        return Err(EstimatorError::NoReferenceObservations(options.ref_bin));
    }
    let within = within_transform(sample, options.ref_bin, options.tol, options.max_iter)?;
    let n = sample.len();

    // Greedy rank selection from the most positive bin down, so that within
    // any collinear set the most negative bins are the ones dropped.
    let counts: Vec<f64> = within
        .bins
        .iter()
        .map(|&b| sample.rows().iter().filter(|r| r.bin == b).count() as f64)
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = vec![false; within.bins.len()];
    for c in (0..within.bins.len()).rev() {
        let mut v = within.x[c].clone();
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm2: f64 = v.iter().map(|a| a * a).sum();
        if norm2 > 1e-9 * counts[c] {
            let norm = norm2.sqrt();
            basis.push(v.into_iter().map(|a| a / norm).collect());
            keep[c] = true;
        }
    }
    let kept: Vec<usize> = (0..within.bins.len()).filter(|&c| keep[c]).collect();
    let bins: Vec<i32> = kept.iter().map(|&c| within.bins[c]).collect();
    let mut dropped_bins: Vec<i32> = options
        .bin_universe
        .iter()
        .copied()
        .filter(|b| *b != options.ref_bin && !within.bins.contains(b))
        .chain(
            within
                .bins
                .iter()
                .zip(&keep)
                .filter(|(_, k)| !**k)
                .map(|(b, _)| *b),
        )
        .collect();
    dropped_bins.sort_unstable();
    dropped_bins.dedup();
    for b in &dropped_bins {
        if within.bins.contains(b) {
            log::warn!("bin {b} is collinear with the fixed effects and was dropped");
        }
    }

    let k = bins.len();
    let design = DMatrix::from_fn(n, k, |i, c| within.x[kept[c]][i]);
    let y = DVector::from_column_slice(&within.y);
    let beta = if k == 0 {
        DVector::zeros(0)
    } else {
        let xtx = design.tr_mul(&design);
        let chol = xtx.cholesky().ok_or(EstimatorError::RankDeficient)?;
        chol.solve(&design.tr_mul(&y))
    };
    let fitted = &design * &beta;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();

    let statistics = fit_statistics(sample, &residuals, &within.y, k, options.rmse_denominator);
    let (_, n_pairs) = sample.pair_ids();
    let (covariance, vcov_note) = if k == 0 {
        (None, Some("no estimated bins".to_string()))
    } else {
        match cgm_vcov(sample, &residuals, &design, options.ssc) {
            Ok(c) => (Some(c), None),
            Err(e @ EstimatorError::TooFewClusters { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        }
    };

    let mut product_counts = vec![0usize; sample.n_products()];
    let mut retailer_counts = vec![0usize; sample.n_retailers()];
    for r in sample.rows() {
        product_counts[r.product] += 1;
        retailer_counts[r.retailer] += 1;
    }
    let fit = EventStudyFit {
        ref_bin: options.ref_bin,
        bins,
        beta: beta.iter().copied().collect(),
        vcov: covariance.as_ref().map(|c| {
            let v = &c.vcov;
            (0..k)
                .flat_map(|i| (0..k).map(move |j| v[(i, j)]))
                .collect()
        }),
        vcov_note,
        n_obs: n,
        n_products: sample.n_products(),
        n_retailers: sample.n_retailers(),
        n_pairs,
        dropped_bins,
        rmse: statistics.rmse,
        adj_r2: statistics.adj_r2,
        within_r2: statistics.within_r2,
        rss: statistics.rss,
        k_total: statistics.k_total,
        dof_inference: (sample.n_products().min(sample.n_retailers()) as u64)
            .saturating_sub(1)
            .max(1),
        ssc: options.ssc,
        rmse_denominator: options.rmse_denominator,
        psd_repaired: covariance.as_ref().is_some_and(|c| c.psd_repaired),
        singleton_products: product_counts.iter().filter(|&&c| c == 1).count(),
        singleton_retailers: retailer_counts.iter().filter(|&&c| c == 1).count(),
        convergence: within.convergence,
    };
    Ok(FitDetails {
        fit,
        residuals,
        design,
        y_within: within.y,
        covariance,
        statistics,
    })
}
