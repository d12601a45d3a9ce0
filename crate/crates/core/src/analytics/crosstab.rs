use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::CollaborationNetwork;
use crate::identity::{AffiliationMap, UserCategory};

/// Symmetric category-by-category count of issue-level collaboration pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCrosstab {
    cells: BTreeMap<(UserCategory, UserCategory), u64>,
    /// Pairs where at least one side has no category label.
    pub unlabeled_pairs: u64,
}

fn ordered(a: UserCategory, b: UserCategory) -> (UserCategory, UserCategory) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl CategoryCrosstab {
    pub fn get(&self, a: UserCategory, b: UserCategory) -> u64 {
        self.cells.get(&ordered(a, b)).copied().unwrap_or(0)
    }

    pub fn labeled_total(&self) -> u64 {
        self.cells.values().sum()
    }

    /// Upper triangle over the labeled categories, zeros included.
    pub fn rows(&self) -> Vec<(UserCategory, UserCategory, u64)> {
        let cats = UserCategory::LABELED;
        let mut rows = Vec::new();
        for (i, &a) in cats.iter().enumerate() {
            for &b in &cats[i..] {
                rows.push((a, b, self.get(a, b)));
            }
        }
        rows
    }
}

/// Counts, for every issue and every unordered pair of its co-contributing
/// stakeholders, one collaboration between their categories. Accumulates
/// over all networks.
pub fn category_crosstab(
    networks: &[CollaborationNetwork],
    map: &AffiliationMap,
) -> CategoryCrosstab {
    let mut table = CategoryCrosstab::default();
    for net in networks {
        for collab in net.collaborations() {
            let members: Vec<_> = collab.stakeholders.iter().collect();
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    let (ca, cb) = (map.category(a), map.category(b));
                    if ca == UserCategory::Unknown || cb == UserCategory::Unknown {
                        table.unlabeled_pairs += 1;
                    } else {
                        *table.cells.entry(ordered(ca, cb)).or_default() += 1;
                    }
                }
            }
        }
    }
    table
}
