use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::pipeline::ObsRow;

/// Which index column is the regression outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Outcome {
    /// Level index `P` (percent of the base month).
    #[default]
    #[serde(rename = "P")]
    Level,
    /// `log P`.
    #[serde(rename = "logP")]
    Log,
}

impl std::str::FromStr for Outcome {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" => Ok(Outcome::Level),
            "logP" => Ok(Outcome::Log),
            other => Err(EstimatorError::InvalidOption(format!(
                "unknown outcome {other:?} (expected P or logP)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub y: f64,
    pub bin: i32,
    /// Dense product index into [`RegressionSample::product_keys`].
    pub product: usize,
    /// Dense retailer index into [`RegressionSample::retailer_keys`].
    pub retailer: usize,
}

/// Rows of (outcome, bin, product, retailer) ready for fitting.
///
/// Product and retailer keys are mapped to dense indices in sorted key
/// order, so two samples with the same rows always index identically.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    rows: Vec<SampleRow>,
    product_keys: Vec<String>,
    retailer_keys: Vec<String>,
}

impl RegressionSample {
    /// Build from `(y, bin, product_key, retailer_key)` tuples. Rows whose
    /// outcome is absent or non-finite are skipped.
    pub fn from_records<'a, I>(records: I) -> Result<Self, EstimatorError>
    where
        I: IntoIterator<Item = (Option<f64>, i32, &'a str, &'a str)>,
    {
        let kept: Vec<(f64, i32, &str, &str)> = records
            .into_iter()
            .filter_map(|(y, b, p, r)| y.filter(|v| v.is_finite()).map(|v| (v, b, p, r)))
            .collect();
        let mut products: BTreeMap<&str, usize> = BTreeMap::new();
        let mut retailers: BTreeMap<&str, usize> = BTreeMap::new();
        for &(_, bin, p, r) in &kept {
            if bin.rem_euclid(3) != 0 {
                return Err(EstimatorError::InvalidBin(bin));
            }
            products.insert(p, 0);
            retailers.insert(r, 0);
        }
        for (i, v) in products.values_mut().enumerate() {
            *v = i;
        }
        for (i, v) in retailers.values_mut().enumerate() {
            *v = i;
        }
        let rows = kept
            .iter()
            .map(|&(y, bin, p, r)| SampleRow {
                y,
                bin,
                product: products[p],
                retailer: retailers[r],
            })
            .collect();
        Ok(RegressionSample {
            rows,
            product_keys: products.keys().map(|k| k.to_string()).collect(),
            retailer_keys: retailers.keys().map(|k| k.to_string()).collect(),
        })
    }

    /// Regression sample from analysis-table rows, clustering and absorbing
    /// on `prod_id` and `ret_id`.
    pub fn from_obs(rows: &[ObsRow], outcome: Outcome) -> Result<Self, EstimatorError> {
        Self::from_records(rows.iter().map(|r| {
            let y = match outcome {
                Outcome::Level => r.p,
                Outcome::Log => r.log_p,
            };
            (y, r.b, r.prod_id.as_str(), r.ret_id.as_str())
        }))
    }

    pub fn rows(&self) -> &[SampleRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn product_keys(&self) -> &[String] {
        &self.product_keys
    }

    pub fn retailer_keys(&self) -> &[String] {
        &self.retailer_keys
    }

    pub fn n_products(&self) -> usize {
        self.product_keys.len()
    }

    pub fn n_retailers(&self) -> usize {
        self.retailer_keys.len()
    }

    /// Distinct bins present, ascending.
    pub fn bins(&self) -> Vec<i32> {
        let mut bins: Vec<i32> = self.rows.iter().map(|r| r.bin).collect();
        bins.sort_unstable();
        bins.dedup();
        bins
    }

    /// Dense ids of the (product, retailer) intersection clusters, plus
    /// their count.
    pub fn pair_ids(&self) -> (Vec<usize>, usize) {
        let mut map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for r in &self.rows {
            map.insert((r.product, r.retailer), 0);
        }
        for (i, v) in map.values_mut().enumerate() {
            *v = i;
        }
        let ids = self
            .rows
            .iter()
            .map(|r| map[&(r.product, r.retailer)])
            .collect();
        (ids, map.len())
    }

    /// Number of connected components of the bipartite product–retailer
    /// graph; each one costs a normalization of the two-way effects.
    pub fn fe_components(&self) -> usize {
        let n = self.n_products() + self.n_retailers();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for r in &self.rows {
            let a = find(&mut parent, r.product);
            let b = find(&mut parent, self.n_products() + r.retailer);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..n).filter(|&x| find(&mut parent, x) == x).count()
    }

    /// Copy of the sample with `shift(product_key)` added to each outcome.
    pub fn map_outcomes(&self, mut f: impl FnMut(&SampleRow) -> f64) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.y = f(r);
        }
        out
    }
}
