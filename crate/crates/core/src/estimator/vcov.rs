//! Two-way cluster-robust covariance by inclusion–exclusion:
//! `V = V_product + V_retailer − V_product×retailer`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::sample::RegressionSample;
use super::EstimatorError;

/// Finite-sample factor applied to each one-way term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallSampleCorrection {
    /// No adjustment.
    None,
    /// `G/(G−1) · (n−1)/(n−k)`, with `k` the number of bin coefficients.
    #[default]
    Standard,
}

impl SmallSampleCorrection {
    pub fn factor(self, clusters: usize, n: usize, k: usize) -> f64 {
        match self {
            SmallSampleCorrection::None => 1.0,
            SmallSampleCorrection::Standard => {
                let g = clusters as f64;
                (g / (g - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64))
            }
        }
    }
}

impl std::str::FromStr for SmallSampleCorrection {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SmallSampleCorrection::None),
            "standard" => Ok(SmallSampleCorrection::Standard),
            other => Err(EstimatorError::InvalidOption(format!(
                "unknown ssc {other:?} (expected none or standard)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCounts {
    pub products: usize,
    pub retailers: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCovariance {
    /// Final covariance, PSD-repaired when needed.
    pub vcov: DMatrix<f64>,
    /// `by_product + by_retailer − by_pair` before repair.
    pub raw: DMatrix<f64>,
    pub by_product: DMatrix<f64>,
    pub by_retailer: DMatrix<f64>,
    pub by_pair: DMatrix<f64>,
    pub psd_repaired: bool,
    pub min_eigenvalue: f64,
    pub clusters: ClusterCounts,
}

/// `(X'X)⁻¹` of the demeaned design.
pub fn bread(design: &DMatrix<f64>) -> Result<DMatrix<f64>, EstimatorError> {
    let xtx = design.tr_mul(design);
    let chol = xtx.cholesky().ok_or(EstimatorError::SingularBread)?;
    Ok(chol.inverse())
}

/// One-way cluster-robust sandwich `c · B (Σ_g s_g s_gᵀ) B` with
/// `s_g = Σ_{i∈g} x_i e_i`.
pub fn one_way_cluster_vcov(
    design: &DMatrix<f64>,
    residuals: &[f64],
    bread: &DMatrix<f64>,
    cluster_ids: &[usize],
    n_clusters: usize,
    ssc: SmallSampleCorrection,
) -> DMatrix<f64> {
    let (n, k) = design.shape();
    let mut scores = DMatrix::<f64>::zeros(n_clusters, k);
    for c in 0..k {
        let col = design.column(c);
        for i in 0..n {
            scores[(cluster_ids[i], c)] += col[i] * residuals[i];
        }
    }
    let meat = scores.tr_mul(&scores);
    let mut v = bread * meat * bread * ssc.factor(n_clusters, n, k);
    symmetrize(&mut v);
    v
}

/// Two-way (product, retailer) clustered covariance of the bin coefficients.
pub fn cgm_vcov(
    sample: &RegressionSample,
    residuals: &[f64],
    design: &DMatrix<f64>,
    ssc: SmallSampleCorrection,
) -> Result<ClusterCovariance, EstimatorError> {
    let (n_products, n_retailers) = (sample.n_products(), sample.n_retailers());
    if n_products < 2 || n_retailers < 2 {
        return Err(EstimatorError::TooFewClusters {
            products: n_products,
            retailers: n_retailers,
        });
    }
    let b = bread(design)?;
    let products: Vec<usize> = sample.rows().iter().map(|r| r.product).collect();
    let retailers: Vec<usize> = sample.rows().iter().map(|r| r.retailer).collect();
    let (pairs, n_pairs) = sample.pair_ids();

    let by_product = one_way_cluster_vcov(design, residuals, &b, &products, n_products, ssc);
    let by_retailer = one_way_cluster_vcov(design, residuals, &b, &retailers, n_retailers, ssc);
    // Pairs refine both partitions, so equal counts mean equal partitions
    // and the intersection term cancels one of the one-way terms exactly.
    let (by_pair, mut raw) = if n_pairs == n_retailers {
        (by_retailer.clone(), by_product.clone())
    } else if n_pairs == n_products {
        (by_product.clone(), by_retailer.clone())
    } else {
        let by_pair = one_way_cluster_vcov(design, residuals, &b, &pairs, n_pairs, ssc);
        let raw = &by_product + &by_retailer - &by_pair;
        (by_pair, raw)
    };
    symmetrize(&mut raw);
    let (vcov, psd_repaired, min_eigenvalue) = psd_repair(&raw);
    Ok(ClusterCovariance {
        vcov,
        raw,
        by_product,
        by_retailer,
        by_pair,
        psd_repaired,
        min_eigenvalue,
        clusters: ClusterCounts {
            products: n_products,
            retailers: n_retailers,
            pairs: n_pairs,
        },
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Clip negative eigenvalues to zero. Returns the repaired matrix, whether
/// anything was clipped and the smallest eigenvalue before repair.
pub fn psd_repair(m: &DMatrix<f64>) -> (DMatrix<f64>, bool, f64) {
    if m.nrows() == 0 {
        return (m.clone(), false, 0.0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return (m.clone(), false, min);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let q = &eig.eigenvectors;
    let mut repaired = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    symmetrize(&mut repaired);
    log::warn!("two-way covariance not positive semi-definite (min eigenvalue {min:.3e}); clipped");
    (repaired, true, min)
}
