//! The relational steps from raw rows to the analysis table.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calendar::{
    months_between, unix_to_month, unix_to_week, EventWindow, IsoWeek, YearMonth,
};
use super::PipelineError;
use crate::decimal::MeanPrice;
use crate::ingest::{ClickRecord, OfferRecord, ProductRecord, RetailerSnapshot};

/// Products born strictly after this Unix second form the cohort (2020-01-01 UTC).
pub const COHORT_CUTOFF_TS: i64 = 1_577_836_800;

/// Rows that carry a product, a retailer and a timestamp.
pub trait Observed {
    fn prod_id(&self) -> &str;
    fn ret_id(&self) -> &str;
    fn ts(&self) -> i64;
}

impl Observed for OfferRecord {
    fn prod_id(&self) -> &str {
        &self.prod_id
    }
    fn ret_id(&self) -> &str {
        &self.ret_id
    }
    fn ts(&self) -> i64 {
        self.ts
    }
}

impl Observed for ClickRecord {
    fn prod_id(&self) -> &str {
        &self.prod_id
    }
    fn ret_id(&self) -> &str {
        &self.ret_id
    }
    fn ts(&self) -> i64 {
        self.ts
    }
}

/// A raw row with its week, month and event month attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timed<R> {
    pub record: R,
    pub week: IsoWeek,
    pub month: YearMonth,
    pub e: i32,
}

/// (prod_id, ret_id, month)
pub type CellKey = (String, String, YearMonth);

/// One product-retailer-month cell of the price panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelCell {
    pub prod_id: String,
    pub ret_id: String,
    pub month: YearMonth,
    pub mean_price: MeanPrice,
    pub clk: Option<u64>,
    pub e: i32,
    pub bin: i32,
}

/// A panel cell with its base-month price and level index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedObservation {
    pub cell: PanelCell,
    pub base_price: Option<MeanPrice>,
    /// `100 · p̄ / p̄₀`; absent when the pair has no (or a zero) base price.
    pub index: Option<f64>,
    pub log_index: Option<f64>,
    pub ret_name: Option<String>,
}

/// One row of the exported analysis table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsRow {
    pub prod_id: String,
    pub ret_id: String,
    pub ret_name: Option<String>,
    pub month: YearMonth,
    pub e: i32,
    pub b: i32,
    #[serde(rename = "P")]
    pub p: Option<f64>,
    #[serde(rename = "logP")]
    pub log_p: Option<f64>,
    pub clk: Option<u64>,
}

/// Column names of the analysis table, in export order.
pub const OBS_COLUMNS: [&str; 9] = [
    "prod_id", "ret_id", "ret_name", "month", "e", "b", "P", "logP", "clk",
];

pub fn filter_cohort(products: &[ProductRecord], cutoff_ts: i64) -> Vec<ProductRecord> {
    products
        .iter()
        .filter(|p| p.born_ts > cutoff_ts)
        .cloned()
        .collect()
}

pub fn attach_time<R: Observed + Clone + Send + Sync>(
    rows: &[R],
    base_month: YearMonth,
) -> Vec<Timed<R>> {
    rows.par_iter()
        .map(|r| {
            let month = unix_to_month(r.ts());
            Timed {
                record: r.clone(),
                week: unix_to_week(r.ts()),
                month,
                e: months_between(month, base_month),
            }
        })
        .collect()
}

/// Keep rows inside the event window whose product is in the cohort.
pub fn apply_event_window<R: Observed>(
    rows: Vec<Timed<R>>,
    window: &EventWindow,
    cohort_ids: &BTreeSet<String>,
) -> Vec<Timed<R>> {
    rows.into_iter()
        .filter(|r| window.contains(r.e) && cohort_ids.contains(r.record.prod_id()))
        .collect()
}

/// Monthly price cells and click sums.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyAggregates {
    /// Price cells, sorted by key, with `clk` left-outer-joined from `clicks`.
    pub cells: Vec<PanelCell>,
    pub clicks: BTreeMap<CellKey, u64>,
}

pub fn aggregate_clicks(clicks: &[Timed<ClickRecord>]) -> BTreeMap<CellKey, u64> {
    let mut sums: BTreeMap<CellKey, u64> = BTreeMap::new();
    for c in clicks {
        let key = (c.record.prod_id.clone(), c.record.ret_id.clone(), c.month);
        *sums.entry(key).or_default() += c.record.clicks;
    }
    sums
}

/// Average offer prices per (product, retailer, month) and sum clicks.
pub fn aggregate_monthly(
    offers: &[Timed<OfferRecord>],
    clicks: &[Timed<ClickRecord>],
    window: &EventWindow,
) -> Result<MonthlyAggregates, PipelineError> {
    let mut means: BTreeMap<CellKey, (MeanPrice, i32)> = BTreeMap::new();
    for o in offers {
        let key = (o.record.prod_id.clone(), o.record.ret_id.clone(), o.month);
        means
            .entry(key)
            .or_insert((MeanPrice::default(), o.e))
            .0
            .push(o.record.price);
    }
    let clicks = aggregate_clicks(clicks);
    let cells = means
        .into_iter()
        .map(|(key, (mean_price, e))| {
            let clk = clicks.get(&key).copied();
            let (prod_id, ret_id, month) = key;
            Ok(PanelCell {
                prod_id,
                ret_id,
                month,
                mean_price,
                clk,
                e,
                bin: window.assign_bin(e)?,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(MonthlyAggregates { cells, clicks })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub pairs: usize,
    pub pairs_without_base: usize,
    pub pairs_zero_base: usize,
}

/// Attach each pair's base-month price and the level index.
pub fn build_index(
    cells: Vec<PanelCell>,
    base_month: YearMonth,
) -> (Vec<IndexedObservation>, IndexStats) {
    let mut base: BTreeMap<(&str, &str), Option<MeanPrice>> = BTreeMap::new();
    for c in &cells {
        let entry = base
            .entry((c.prod_id.as_str(), c.ret_id.as_str()))
            .or_insert(None);
        if c.month == base_month {
            *entry = Some(c.mean_price);
        }
    }
    let stats = IndexStats {
        pairs: base.len(),
        pairs_without_base: base.values().filter(|b| b.is_none()).count(),
        pairs_zero_base: base
            .values()
            .filter(|b| b.is_some_and(|m| m.is_zero()))
            .count(),
    };
    let base: BTreeMap<(String, String), Option<MeanPrice>> = base
        .into_iter()
        .map(|((p, r), b)| ((p.to_string(), r.to_string()), b))
        .collect();

    let indexed = cells
        .into_iter()
        .map(|cell| {
            let base_price = base
                .get(&(cell.prod_id.clone(), cell.ret_id.clone()))
                .copied()
                .flatten();
            let index = base_price.and_then(|b| cell.mean_price.index_against(&b));
            IndexedObservation {
                log_index: index.map(f64::ln),
                index,
                base_price,
                cell,
                ret_name: None,
            }
        })
        .collect();
    (indexed, stats)
}

/// Join click sums and retailer names onto the index and project the
/// exported columns.
pub fn assemble_obs(
    indexed: Vec<IndexedObservation>,
    clicks_monthly: &BTreeMap<CellKey, u64>,
    snapshot: &RetailerSnapshot,
) -> Vec<ObsRow> {
    indexed
        .into_iter()
        .map(|obs| {
            let c = obs.cell;
            let clk = clicks_monthly
                .get(&(c.prod_id.clone(), c.ret_id.clone(), c.month))
                .copied();
            let ret_name = snapshot.get(&c.ret_id).map(|r| r.ret_name.clone());
            ObsRow {
                prod_id: c.prod_id,
                ret_id: c.ret_id,
                ret_name,
                month: c.month,
                e: c.e,
                b: c.bin,
                p: obs.index,
                log_p: obs.log_index,
                clk,
            }
        })
        .collect()
}
