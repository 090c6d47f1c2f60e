use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{IngestError, TableKind, TableRecord};
use crate::decimal::Price;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub prod_id: String,
    pub name: String,
    pub born_ts: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfferRecord {
    pub offer_id: String,
    pub prod_id: String,
    pub ret_id: String,
    pub ts: i64,
    pub price: Price,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub prod_id: String,
    pub ret_id: String,
    pub ts: i64,
    pub clicks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetailerRecord {
    pub ret_id: String,
    pub ret_name: String,
    pub ts: i64,
}

fn id(field: &str, value: &str) -> Result<String, String> {
    let v = value.trim();
    if v.is_empty() {
        Err(format!("empty {field}"))
    } else {
        Ok(v.to_string())
    }
}

fn timestamp(field: &str, value: &str) -> Result<i64, String> {
    let ts: i64 = value
        .trim()
        .parse()
        .map_err(|_| format!("invalid {field} {value:?}"))?;
    if ts < 0 {
        return Err(format!("negative {field}"));
    }
    Ok(ts)
}

impl TableRecord for ProductRecord {
    const KIND: TableKind = TableKind::Products;

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        Ok(ProductRecord {
            prod_id: id("prod_id", f[0])?,
            name: f[1].to_string(),
            born_ts: timestamp("born_ts", f[2])?,
        })
    }

    fn check_table(rows: &[Self]) -> Result<(), IngestError> {
        let mut seen = BTreeSet::new();
        for row in rows {
            if !seen.insert(row.prod_id.as_str()) {
                return Err(IngestError::DuplicateProduct(row.prod_id.clone()));
            }
        }
        Ok(())
    }
}

impl TableRecord for OfferRecord {
    const KIND: TableKind = TableKind::Offers;

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        let price: Price = f[4].parse().map_err(|e| format!("invalid price: {e}"))?;
        if price.is_negative() {
            return Err("negative price".to_string());
        }
        Ok(OfferRecord {
            offer_id: id("offer_id", f[0])?,
            prod_id: id("prod_id", f[1])?,
            ret_id: id("ret_id", f[2])?,
            ts: timestamp("ts", f[3])?,
            price,
        })
    }
}

impl TableRecord for ClickRecord {
    const KIND: TableKind = TableKind::Clicks;

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        let raw = f[3].trim();
        let clicks = match raw.parse::<u64>() {
            Ok(c) => c,
            Err(_) if raw.parse::<i64>().is_ok() => return Err("negative clicks".to_string()),
            Err(_) => return Err(format!("invalid clicks {raw:?}")),
        };
        Ok(ClickRecord {
            prod_id: id("prod_id", f[0])?,
            ret_id: id("ret_id", f[1])?,
            ts: timestamp("ts", f[2])?,
            clicks,
        })
    }
}

impl TableRecord for RetailerRecord {
    const KIND: TableKind = TableKind::Retailers;

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        Ok(RetailerRecord {
            ret_id: id("ret_id", f[0])?,
            ret_name: f[1].to_string(),
            ts: timestamp("ts", f[2])?,
        })
    }
}
