//! Event log of a simulation and an independent replay checker.

use alloc::collections::BTreeMap;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::state::{BinId, Label, Pool};
use crate::instance::ItemId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceRecord {
    Arrive {
        time: f64,
        item: ItemId,
        size_num: u64,
    },
    OpenBin {
        time: f64,
        bin: BinId,
        #[serde(flatten)]
        label: Label,
        class: Option<u32>,
        pool: Option<Pool>,
    },
    Place {
        time: f64,
        item: ItemId,
        bin: BinId,
        migrated: bool,
    },
    Detach {
        time: f64,
        item: ItemId,
        bin: BinId,
    },
    Depart {
        time: f64,
        item: ItemId,
        bin: BinId,
    },
    Relabel {
        time: f64,
        bin: BinId,
        from: Label,
        to: Label,
    },
    Phase {
        time: f64,
        phase: u32,
        rho_guess: u64,
    },
    Resolve {
        time: f64,
        item: ItemId,
        duration: f64,
    },
}

/// First inconsistency found while replaying a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceViolation {
    CapacityOverflow { time: f64, bin: BinId, item: ItemId, load: u64 },
    DoublePlacement { time: f64, item: ItemId },
    LabelRegression { time: f64, bin: BinId, from: Label, to: Label },
    StaleJunkBin { time: f64, bin: BinId, phase: u32, current: u32 },
    UnknownItem { time: f64, item: ItemId },
    UnknownBin { time: f64, bin: BinId },
    NotInBin { time: f64, item: ItemId, bin: BinId },
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceViolation::CapacityOverflow { time, bin, item, load } => write!(
                f,
                "capacity overflow at t={}: bin {} reaches load {} after item {}",
                time, bin, load, item
            ),
            TraceViolation::DoublePlacement { time, item } => {
                write!(f, "double placement at t={}: item {} is already in a bin", time, item)
            }
            TraceViolation::LabelRegression { time, bin, from, to } => {
                write!(f, "label regression at t={}: bin {} went {} -> {}", time, bin, from, to)
            }
            TraceViolation::StaleJunkBin { time, bin, phase, current } => write!(
                f,
                "stale junk bin at t={}: bin {} of phase {} used in phase {}",
                time, bin, phase, current
            ),
            TraceViolation::UnknownItem { time, item } => {
                write!(f, "unknown item at t={}: {}", time, item)
            }
            TraceViolation::UnknownBin { time, bin } => write!(f, "unknown bin at t={}: {}", time, bin),
            TraceViolation::NotInBin { time, item, bin } => {
                write!(f, "item {} is not in bin {} at t={}", item, bin, time)
            }
        }
    }
}

struct ReplayBin {
    load: u64,
    label: Label,
}

/// Replays `trace` from scratch and checks exact capacity, single
/// placement, Bad→Good-only label changes and that arriving items only
/// enter the junk bin of the current phase.
pub fn verify_trace(scale: u64, trace: &[TraceRecord]) -> Result<(), TraceViolation> {
    let mut sizes: BTreeMap<ItemId, u64> = BTreeMap::new();
    let mut location: BTreeMap<ItemId, BinId> = BTreeMap::new();
    let mut bins: BTreeMap<BinId, ReplayBin> = BTreeMap::new();
    let mut phase = 0u32;

    let remove = |bins: &mut BTreeMap<BinId, ReplayBin>,
                      location: &mut BTreeMap<ItemId, BinId>,
                      sizes: &BTreeMap<ItemId, u64>,
                      time: f64,
                      item: ItemId,
                      bin: BinId|
     -> Result<(), TraceViolation> {
        match location.get(&item) {
            Some(b) if *b == bin => {}
            _ => return Err(TraceViolation::NotInBin { time, item, bin }),
        }
        location.remove(&item);
        let size = *sizes.get(&item).ok_or(TraceViolation::UnknownItem { time, item })?;
        let b = bins.get_mut(&bin).ok_or(TraceViolation::UnknownBin { time, bin })?;
        b.load -= size;
        Ok(())
    };

    for rec in trace {
        match *rec {
            TraceRecord::Arrive { item, size_num, .. } => {
                sizes.insert(item, size_num);
            }
            TraceRecord::OpenBin { bin, label, .. } => {
                bins.insert(bin, ReplayBin { load: 0, label });
            }
            TraceRecord::Place {
                time,
                item,
                bin,
                migrated,
            } => {
                if location.contains_key(&item) {
                    return Err(TraceViolation::DoublePlacement { time, item });
                }
                let size = *sizes.get(&item).ok_or(TraceViolation::UnknownItem { time, item })?;
                let b = bins.get_mut(&bin).ok_or(TraceViolation::UnknownBin { time, bin })?;
                b.load += size;
                if b.load > scale {
                    return Err(TraceViolation::CapacityOverflow {
                        time,
                        bin,
                        item,
                        load: b.load,
                    });
                }
                if let Label::Junk { phase: p } = b.label {
                    if !migrated && p != phase {
                        return Err(TraceViolation::StaleJunkBin {
                            time,
                            bin,
                            phase: p,
                            current: phase,
                        });
                    }
                }
                location.insert(item, bin);
            }
            TraceRecord::Detach { time, item, bin } | TraceRecord::Depart { time, item, bin } => {
                remove(&mut bins, &mut location, &sizes, time, item, bin)?;
            }
            TraceRecord::Relabel { time, bin, from, to } => {
                let b = bins.get_mut(&bin).ok_or(TraceViolation::UnknownBin { time, bin })?;
                let allowed = from == to || (from == Label::Bad && to == Label::Good);
                if !allowed || b.label != from {
                    return Err(TraceViolation::LabelRegression { time, bin, from: b.label, to });
                }
                b.label = to;
            }
            TraceRecord::Phase { phase: p, .. } => phase = p,
            TraceRecord::Resolve { .. } => {}
        }
    }
    Ok(())
}
