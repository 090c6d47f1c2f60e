use serde::{Deserialize, Serialize};

use super::sample::RegressionSample;
use super::EstimatorError;

/// Denominator of the reported RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RmseDenominator {
    /// `sqrt(RSS / n)`
    #[default]
    #[serde(rename = "n")]
    N,
    /// `sqrt(RSS / (n − k_total))`
    #[serde(rename = "n-k")]
    NMinusK,
}

impl std::str::FromStr for RmseDenominator {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n" => Ok(RmseDenominator::N),
            "n-k" => Ok(RmseDenominator::NMinusK),
            other => Err(EstimatorError::InvalidOption(format!(
                "unknown RMSE denominator {other:?} (expected n or n-k)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub rmse: f64,
    pub adj_r2: Option<f64>,
    pub within_r2: Option<f64>,
    pub rss: f64,
    pub tss: f64,
    pub tss_within: f64,
    /// Bin coefficients plus identified fixed-effect levels.
    pub k_total: usize,
}

/// RMSE, adjusted R² and within R² of a fitted event study.
///
/// `residuals` are the full-model residuals and `y_within` the
/// within-transformed outcome; `k_bins` counts estimated bin coefficients.
/// Absorbed effects contribute `products + retailers − components` levels.
pub fn fit_statistics(
    sample: &RegressionSample,
    residuals: &[f64],
    y_within: &[f64],
    k_bins: usize,
    rmse_denominator: RmseDenominator,
) -> FitStatistics {
    let n = sample.len();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = sample.rows().iter().map(|r| r.y).sum::<f64>() / n as f64;
    let tss: f64 = sample.rows().iter().map(|r| (r.y - mean_y).powi(2)).sum();
    let tss_within: f64 = y_within.iter().map(|v| v * v).sum();
    let k_total = k_bins + sample.n_products() + sample.n_retailers() - sample.fe_components();

    let rmse = match rmse_denominator {
        RmseDenominator::N => (rss / n as f64).sqrt(),
        RmseDenominator::NMinusK if n > k_total => (rss / (n - k_total) as f64).sqrt(),
        RmseDenominator::NMinusK => f64::NAN,
    };
    let adj_r2 = (n > k_total && n > 1 && tss > 0.0)
        .then(|| 1.0 - (rss / (n - k_total) as f64) / (tss / (n - 1) as f64));
    let within_r2 = (tss_within > 0.0).then(|| 1.0 - rss / tss_within);
    FitStatistics {
        rmse,
        adj_r2,
        within_r2,
        rss,
        tss,
        tss_within,
        k_total,
    }
}
