use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::state::BinId;
use crate::instance::ItemId;

/// Why a policy moved an item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationRule {
    /// A Good bin dropped below the migration threshold and was drained.
    GoodDrain,
    /// First move of a delay-model item, out of the small pool.
    DelayFirst,
    /// Periodic move inside the big pool.
    DelayRepeat,
    /// Anything a custom policy does.
    Other,
}

/// Class and rule recorded alongside a migration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MigrationTag {
    pub class: Option<u32>,
    pub rule: MigrationRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationEntry {
    pub time: f64,
    pub item: ItemId,
    pub size_num: u64,
    pub from: BinId,
    pub to: BinId,
    pub class: Option<u32>,
    pub rule: MigrationRule,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MigrationLedger {
    pub entries: Vec<MigrationEntry>,
    pub unit: u64,
    /// Migrated size as a numerator over the instance scale.
    pub size_num: u64,
    pub per_class: BTreeMap<u32, u64>,
}

impl MigrationLedger {
    pub(crate) fn record(&mut self, entry: MigrationEntry) {
        self.unit += 1;
        self.size_num += entry.size_num;
        if let Some(c) = entry.class {
            *self.per_class.entry(c).or_insert(0) += 1;
        }
        self.entries.push(entry);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of recorded moves of `item`.
    pub fn count_for(&self, item: ItemId) -> usize {
        self.entries.iter().filter(|e| e.item == item).count()
    }
}

/// Migration totals in both cost models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationCounts {
    pub unit: u64,
    pub size_sum: f64,
    pub per_class: BTreeMap<u32, u64>,
}

impl MigrationCounts {
    /// Totals recomputed from the individual entries.
    pub fn from_ledger(ledger: &MigrationLedger, scale: u64) -> Self {
        let mut per_class = BTreeMap::new();
        let mut size_num = 0u64;
        for e in &ledger.entries {
            size_num += e.size_num;
            if let Some(c) = e.class {
                *per_class.entry(c).or_insert(0) += 1;
            }
        }
        MigrationCounts {
            unit: ledger.entries.len() as u64,
            size_sum: if scale == 0 { 0.0 } else { size_num as f64 / scale as f64 },
            per_class,
        }
    }
}
