use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::{ItemId, ScaledSize};

pub type BinId = u64;

/// Role of a bin inside the policy that owns it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "snake_case")]
pub enum Label {
    /// FirstFit bins carry no label.
    Plain,
    Bad,
    Good,
    Junk { phase: u32 },
    Dedicated,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Plain => f.write_str("plain"),
            Label::Bad => f.write_str("bad"),
            Label::Good => f.write_str("good"),
            Label::Junk { phase } => write!(f, "junk({})", phase),
            Label::Dedicated => f.write_str("dedicated"),
        }
    }
}

/// Disjoint bin namespaces of the delay-cost policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Small,
    Big,
}

/// What a policy asks for when it opens a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinSpec {
    pub label: Label,
    pub class: Option<u32>,
    pub pool: Option<Pool>,
    /// Keeps the bin addressable while it is empty (junk bins).
    pub persistent: bool,
}

impl BinSpec {
    pub fn plain() -> Self {
        BinSpec {
            label: Label::Plain,
            class: None,
            pool: None,
            persistent: false,
        }
    }

    pub fn labeled(label: Label, class: Option<u32>) -> Self {
        BinSpec {
            label,
            class,
            pool: None,
            persistent: false,
        }
    }

    pub fn in_pool(pool: Pool) -> Self {
        BinSpec {
            label: Label::Plain,
            class: None,
            pool: Some(pool),
            persistent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub id: BinId,
    pub label: Label,
    pub class: Option<u32>,
    pub pool: Option<Pool>,
    /// Sum of contained size numerators; never exceeds the scale.
    pub load: u64,
    /// Contents in insertion order.
    pub items: Vec<ItemId>,
    pub persistent: bool,
}

impl Bin {
    pub fn is_open(&self) -> bool {
        !self.items.is_empty()
    }

    pub fn fits(&self, size: ScaledSize) -> bool {
        self.load + size.num <= size.scale
    }
}

/// Live view of the packing during a simulation.
///
/// Policies read it through [`super::Ctx::state`]; every mutation goes
/// through the context so that the engine can check capacity and log the
/// change.
#[derive(Debug, Clone)]
pub struct PackingState {
    pub(crate) scale: u64,
    pub(crate) bins: BTreeMap<BinId, Bin>,
    pub(crate) next_bin: BinId,
    pub(crate) placement: BTreeMap<ItemId, BinId>,
    pub(crate) sizes: BTreeMap<ItemId, ScaledSize>,
    pub(crate) migrations: BTreeMap<ItemId, u32>,
    pub(crate) phases: u32,
    pub(crate) rho_guess: u64,
}

impl PackingState {
    pub(crate) fn new(scale: u64) -> Self {
        PackingState {
            scale,
            bins: BTreeMap::new(),
            next_bin: 0,
            placement: BTreeMap::new(),
            sizes: BTreeMap::new(),
            migrations: BTreeMap::new(),
            phases: 0,
            rho_guess: 0,
        }
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// All known bins in opening order, including empty persistent ones.
    pub fn bins(&self) -> impl Iterator<Item = &Bin> + '_ {
        self.bins.values()
    }

    pub fn bin(&self, id: BinId) -> Option<&Bin> {
        self.bins.get(&id)
    }

    pub fn open_bins(&self) -> usize {
        self.bins.values().filter(|b| b.is_open()).count()
    }

    pub fn bin_of(&self, item: ItemId) -> Option<BinId> {
        self.placement.get(&item).copied()
    }

    pub fn size_of(&self, item: ItemId) -> Option<ScaledSize> {
        self.sizes.get(&item).copied()
    }

    /// Items currently in the system, in transit ones included.
    pub fn live_items(&self) -> usize {
        self.sizes.len()
    }

    pub fn live_sizes(&self) -> impl Iterator<Item = ScaledSize> + '_ {
        self.sizes.values().copied()
    }

    pub fn migrations_of(&self, item: ItemId) -> u32 {
        self.migrations.get(&item).copied().unwrap_or(0)
    }

    pub fn phases(&self) -> u32 {
        self.phases
    }

    pub fn rho_guess(&self) -> u64 {
        self.rho_guess
    }
}
