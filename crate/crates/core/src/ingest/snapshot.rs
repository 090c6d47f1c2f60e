use std::collections::BTreeMap;

use super::RetailerRecord;

/// Latest attribute row per retailer, keyed by `ret_id`.
pub type RetailerSnapshot = BTreeMap<String, RetailerRecord>;

/// Keep, for each retailer, the row observed at its maximal timestamp.
///
/// Ties at the maximal timestamp go to the lexicographically smallest
/// `ret_name`, so the result does not depend on input order.
pub fn retailer_snapshot(rows: &[RetailerRecord]) -> RetailerSnapshot {
    let mut snap: RetailerSnapshot = BTreeMap::new();
    for row in rows {
        match snap.get(&row.ret_id) {
            Some(current) if !supersedes(row, current) => {}
            _ => {
                snap.insert(row.ret_id.clone(), row.clone());
            }
        }
    }
    snap
}

fn supersedes(candidate: &RetailerRecord, current: &RetailerRecord) -> bool {
    candidate.ts > current.ts
        || (candidate.ts == current.ts && candidate.ret_name < current.ret_name)
}
