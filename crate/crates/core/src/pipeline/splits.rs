use std::collections::{BTreeMap, BTreeSet};

use super::ilike::LikePattern;
use super::panel::ObsRow;
use super::patterns::SupPatternSet;
use crate::ingest::ProductRecord;

/// Name pattern selecting the strict control group.
pub const STRICT_CONTROL_PATTERN: &str = "%graphics card%";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSplits {
    pub treated: Vec<ObsRow>,
    pub control: Vec<ObsRow>,
    pub strict: Vec<ObsRow>,
    /// SUP products in the cohort with the category that matched.
    pub sup_products: BTreeMap<String, String>,
    pub non_sup_products: BTreeSet<String>,
    pub strict_products: BTreeSet<String>,
}

/// Split the analysis table into SUP-treated, non-SUP control and the
/// graphics-card strict control. `cohort` must already be cohort-filtered;
/// rows of products outside it land in no split.
pub fn split_samples(
    obs: &[ObsRow],
    cohort: &[ProductRecord],
    patterns: &SupPatternSet,
) -> SampleSplits {
    let strict_pattern =
        LikePattern::compile(STRICT_CONTROL_PATTERN).expect("valid constant pattern");
    let mut splits = SampleSplits::default();
    for p in cohort {
        match patterns.classify(&p.name) {
            Some(category) => {
                splits
                    .sup_products
                    .insert(p.prod_id.clone(), category.to_string());
            }
            None => {
                splits.non_sup_products.insert(p.prod_id.clone());
                if strict_pattern.matches(&p.name) {
                    splits.strict_products.insert(p.prod_id.clone());
                }
            }
        }
    }
    for row in obs {
        if splits.sup_products.contains_key(&row.prod_id) {
            splits.treated.push(row.clone());
        } else if splits.non_sup_products.contains(&row.prod_id) {
            if splits.strict_products.contains(&row.prod_id) {
                splits.strict.push(row.clone());
            }
            splits.control.push(row.clone());
        }
    }
    splits
}
