//! From raw relations to the monthly product-retailer index panel.
//!
//! The stages follow the relational program used to build the analysis
//! table: cohort filter, time attachment, event window, monthly
//! aggregation, base-month index, click/retailer joins and the
//! treated/control/strict splits. Every intermediate is keyed and sorted by
//! `(prod_id, ret_id, month)`, so identical inputs give identical outputs.

pub mod calendar;
pub mod ilike;
pub mod panel;
pub mod patterns;
pub mod splits;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

pub use calendar::{
    assign_bin, months_between, unix_to_month, unix_to_week, EventWindow, IsoWeek, YearMonth,
};
pub use ilike::{LikePattern, PatternError};
pub use panel::{
    aggregate_monthly, apply_event_window, assemble_obs, attach_time, build_index, filter_cohort,
    IndexStats, IndexedObservation, MonthlyAggregates, ObsRow, PanelCell, Timed, COHORT_CUTOFF_TS,
    OBS_COLUMNS,
};
pub use patterns::{classify_sup, PatternSetError, SupPatternSet};
pub use splits::{split_samples, SampleSplits, STRICT_CONTROL_PATTERN};

use crate::ingest::{retailer_snapshot, ClickRecord, OfferRecord, ProductRecord, RetailerRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid month {0:?} (expected YYYY-MM)")]
    InvalidMonth(String),
    #[error("invalid event window {0:?} (expected LO:HI)")]
    InvalidWindow(String),
    #[error("event month {e} outside window [{lo}, {hi}]")]
    OutOfWindow { e: i32, lo: i32, hi: i32 },
    #[error(transparent)]
    Patterns(#[from] PatternSetError),
    #[error("analysis table: {0}")]
    Csv(#[from] csv::Error),
    #[error("analysis table: expected columns `{expected}`, found `{found}`")]
    ObsHeader { expected: String, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub base_month: YearMonth,
    pub window: EventWindow,
    pub cohort_cutoff_ts: i64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            base_month: YearMonth::new(2022, 2).expect("valid month"),
            window: EventWindow::default(),
            cohort_cutoff_ts: COHORT_CUTOFF_TS,
        }
    }
}

/// Counts reported alongside the panel.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub products: usize,
    pub cohort_size: usize,
    pub sup_products: usize,
    pub sup_products_by_category: BTreeMap<String, usize>,
    pub non_sup_products: usize,
    pub strict_products: usize,
    pub offers: usize,
    pub offers_in_window: usize,
    pub clicks: usize,
    pub clicks_in_window: usize,
    pub cells: usize,
    pub pairs: usize,
    pub pairs_without_base: usize,
    pub pairs_zero_base: usize,
    pub obs_rows: usize,
    pub obs_rows_with_index: usize,
    pub obs_rows_without_retailer: usize,
    pub treated_rows: usize,
    pub control_rows: usize,
    pub strict_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelOutput {
    pub obs: Vec<ObsRow>,
    pub splits: SampleSplits,
    pub diagnostics: Diagnostics,
}

/// Run the full relational pipeline.
pub fn build_panel(
    products: &[ProductRecord],
    offers: &[OfferRecord],
    clicks: &[ClickRecord],
    retailers: &[RetailerRecord],
    patterns: &SupPatternSet,
    config: &PipelineConfig,
) -> Result<PanelOutput, PipelineError> {
    let cohort = filter_cohort(products, config.cohort_cutoff_ts);
    let cohort_ids: BTreeSet<String> = cohort.iter().map(|p| p.prod_id.clone()).collect();

    let offers_win = apply_event_window(
        attach_time(offers, config.base_month),
        &config.window,
        &cohort_ids,
    );
    let clicks_win = apply_event_window(
        attach_time(clicks, config.base_month),
        &config.window,
        &cohort_ids,
    );

    let monthly = aggregate_monthly(&offers_win, &clicks_win, &config.window)?;
    let n_cells = monthly.cells.len();
    let (indexed, index_stats) = build_index(monthly.cells, config.base_month);
    let snapshot = retailer_snapshot(retailers);
    let obs = assemble_obs(indexed, &monthly.clicks, &snapshot);
    let splits = split_samples(&obs, &cohort, patterns);

    let mut by_category = BTreeMap::new();
    for category in splits.sup_products.values() {
        *by_category.entry(category.clone()).or_insert(0) += 1;
    }
    let diagnostics = Diagnostics {
        products: products.len(),
        cohort_size: cohort.len(),
        sup_products: splits.sup_products.len(),
        sup_products_by_category: by_category,
        non_sup_products: splits.non_sup_products.len(),
        strict_products: splits.strict_products.len(),
        offers: offers.len(),
        offers_in_window: offers_win.len(),
        clicks: clicks.len(),
        clicks_in_window: clicks_win.len(),
        cells: n_cells,
        pairs: index_stats.pairs,
        pairs_without_base: index_stats.pairs_without_base,
        pairs_zero_base: index_stats.pairs_zero_base,
        obs_rows: obs.len(),
        obs_rows_with_index: obs.iter().filter(|o| o.p.is_some()).count(),
        obs_rows_without_retailer: obs.iter().filter(|o| o.ret_name.is_none()).count(),
        treated_rows: splits.treated.len(),
        control_rows: splits.control.len(),
        strict_rows: splits.strict.len(),
    };
    Ok(PanelOutput {
        obs,
        splits,
        diagnostics,
    })
}

/// Write analysis-table rows as CSV with the canonical column order.
pub fn write_obs<W: Write>(writer: W, rows: &[ObsRow]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(OBS_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read an analysis table written by [`write_obs`].
pub fn read_obs<R: Read>(reader: R) -> Result<Vec<ObsRow>, PipelineError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(OBS_COLUMNS.iter().copied()) {
        return Err(PipelineError::ObsHeader {
            expected: OBS_COLUMNS.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(PipelineError::from))
        .collect()
}
