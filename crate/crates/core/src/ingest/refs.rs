use std::collections::BTreeSet;

use serde::Serialize;

use super::{ClickRecord, OfferRecord, ProductRecord, Reject, RetailerRecord, Table, TableKind};

/// Outcome of the optional referential-integrity pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RefCheck {
    pub offers_unknown_product: usize,
    pub offers_unknown_retailer: usize,
    pub clicks_unknown_product: usize,
    pub clicks_unknown_retailer: usize,
}

impl RefCheck {
    pub fn total(&self) -> usize {
        self.offers_unknown_product
            + self.offers_unknown_retailer
            + self.clicks_unknown_product
            + self.clicks_unknown_retailer
    }
}

/// Count offers and clicks whose `prod_id`/`ret_id` are not present in the
/// product and retailer tables. With `strict`, offending rows are moved into
/// the rejects of their table; otherwise they are kept.
///
/// Rows carry no line number once parsed, so strict-mode rejects report
/// line 0.
pub fn check_references(
    products: &[ProductRecord],
    retailers: &[RetailerRecord],
    offers: &mut Table<OfferRecord>,
    clicks: &mut Table<ClickRecord>,
    strict: bool,
) -> RefCheck {
    let prods: BTreeSet<&str> = products.iter().map(|p| p.prod_id.as_str()).collect();
    let rets: BTreeSet<&str> = retailers.iter().map(|r| r.ret_id.as_str()).collect();
    let mut report = RefCheck::default();

    let reason = |prod_ok: bool, ret_ok: bool| match (prod_ok, ret_ok) {
        (false, _) => Some("unknown prod_id"),
        (true, false) => Some("unknown ret_id"),
        _ => None,
    };

    let mut kept = Vec::with_capacity(offers.rows.len());
    for row in offers.rows.drain(..) {
        let (p, r) = (
            prods.contains(row.prod_id.as_str()),
            rets.contains(row.ret_id.as_str()),
        );
        report.offers_unknown_product += usize::from(!p);
        report.offers_unknown_retailer += usize::from(!r);
        match reason(p, r) {
            Some(why) if strict => offers.rejects.push(Reject {
                table: TableKind::Offers,
                line: 0,
                reason: why.to_string(),
            }),
            _ => kept.push(row),
        }
    }
    offers.rows = kept;

    let mut kept = Vec::with_capacity(clicks.rows.len());
    for row in clicks.rows.drain(..) {
        let (p, r) = (
            prods.contains(row.prod_id.as_str()),
            rets.contains(row.ret_id.as_str()),
        );
        report.clicks_unknown_product += usize::from(!p);
        report.clicks_unknown_retailer += usize::from(!r);
        match reason(p, r) {
            Some(why) if strict => clicks.rejects.push(Reject {
                table: TableKind::Clicks,
                line: 0,
                reason: why.to_string(),
            }),
            _ => kept.push(row),
        }
    }
    clicks.rows = kept;

    report
}
