//! Deterministic event-driven simulator.
//!
//! The engine owns the authoritative [`PackingState`]. Policies see item
//! sizes and the current packing, never durations; they act through a
//! [`Ctx`] that enforces exact capacity, logs every change to the trace and
//! charges the migration delay.
//!
//! Events at equal times are processed departures first, then migration
//! checkpoints, then arrivals, then adversary resolution; ties inside a kind
//! go by item id. Lifetimes are half-open, so an item leaving at `t` and one
//! arriving at `t` never coexist.

mod ledger;
mod sim;
mod state;
mod trace;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use ledger::{MigrationCounts, MigrationEntry, MigrationLedger, MigrationRule, MigrationTag};
pub use sim::{simulate, simulate_with, Ctx, SimOptions};
pub use state::{Bin, BinId, BinSpec, Label, PackingState, Pool};
pub use trace::{verify_trace, TraceRecord, TraceViolation};

use serde::{Deserialize, Serialize};

use crate::instance::{ItemId, ScaledSize, Violation};

/// Online packing policy.
///
/// Callbacks must leave every item they touch in a bin: an arrival has to be
/// placed, and every item detached for migration has to be attached again
/// before the callback returns.
pub trait Policy {
    fn name(&self) -> &str;

    fn on_arrival(&mut self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError>;

    /// Called after `item` has left bin `from`.
    fn on_departure(
        &mut self,
        _ctx: &mut Ctx<'_>,
        _item: ItemId,
        _size: ScaledSize,
        _from: BinId,
    ) -> Result<(), SimError> {
        Ok(())
    }

    /// Called once per timestamp with every live item whose registered
    /// checkpoint fires now, in ascending id order.
    fn on_checkpoint(&mut self, _ctx: &mut Ctx<'_>, _items: &[ItemId]) -> Result<(), SimError> {
        Ok(())
    }
}

/// Snapshot handed to an adversary: bins in opening order with the deferred
/// items each one holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolveSnapshot {
    pub time: f64,
    pub bins: Vec<(BinId, Vec<ItemId>)>,
}

/// Assigns durations to deferred items after seeing where they were placed.
pub trait DurationResolver {
    fn resolve(&mut self, snapshot: &ResolveSnapshot) -> Vec<(ItemId, f64)>;
}

/// Hook run after all events of a timestamp have been processed.
pub trait Inspector {
    fn inspect(&mut self, time: f64, state: &PackingState) -> Result<(), String>;
}

impl<F> Inspector for F
where
    F: FnMut(f64, &PackingState) -> Result<(), String>,
{
    fn inspect(&mut self, time: f64, state: &PackingState) -> Result<(), String> {
        self(time, state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidInstance(Vec<Violation>),
    NegativeDelayCost,
    CapacityViolation { bin: BinId, item: ItemId, load: u64, size: u64 },
    MigratedDeparted { item: ItemId },
    UnknownItem { item: ItemId },
    UnknownBin { bin: BinId },
    AlreadyPlaced { item: ItemId },
    NotPlaced { item: ItemId },
    LeftInTransit { item: ItemId },
    CheckpointInPast { item: ItemId, time: f64 },
    MissingResolver,
    Unresolved { item: ItemId },
    BadResolution { item: ItemId, duration: f64 },
    Policy(String),
    Invariant { time: f64, detail: String },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidInstance(v) => {
                write!(f, "invalid instance:")?;
                for x in v {
                    write!(f, " {};", x)?;
                }
                Ok(())
            }
            SimError::NegativeDelayCost => f.write_str("delay cost must be nonnegative"),
            SimError::CapacityViolation { bin, item, load, size } => write!(
                f,
                "capacity violation: item {} (size {}) does not fit bin {} (load {})",
                item, size, bin, load
            ),
            SimError::MigratedDeparted { item } => write!(f, "item {} migrated after departing", item),
            SimError::UnknownItem { item } => write!(f, "unknown item {}", item),
            SimError::UnknownBin { bin } => write!(f, "unknown bin {}", bin),
            SimError::AlreadyPlaced { item } => write!(f, "item {} is already placed", item),
            SimError::NotPlaced { item } => write!(f, "policy left arriving item {} unplaced", item),
            SimError::LeftInTransit { item } => {
                write!(f, "policy left migrating item {} outside every bin", item)
            }
            SimError::CheckpointInPast { item, time } => {
                write!(f, "checkpoint for item {} scheduled in the past ({})", item, time)
            }
            SimError::MissingResolver => f.write_str("deferred durations but no adversary"),
            SimError::Unresolved { item } => write!(f, "adversary left item {} unresolved", item),
            SimError::BadResolution { item, duration } => {
                write!(f, "adversary gave item {} an invalid duration {}", item, duration)
            }
            SimError::Policy(msg) => write!(f, "policy error: {}", msg),
            SimError::Invariant { time, detail } => write!(f, "invariant violated at t={}: {}", time, detail),
        }
    }
}

impl core::error::Error for SimError {}

/// One piece of the open-bin step function, `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub start: f64,
    pub end: f64,
    pub open: u64,
    /// Phases started so far (doubling policies only).
    pub phases: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub id: ItemId,
    pub arrival: f64,
    pub size: ScaledSize,
    /// Original duration (as resolved, for deferred items).
    pub duration: f64,
    /// Actual departure, delays included.
    pub departure: f64,
    pub migration_times: Vec<f64>,
}

impl ItemOutcome {
    pub fn migrations(&self) -> usize {
        self.migration_times.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub policy: String,
    pub scale: u64,
    pub delay_cost: f64,
    pub total_active_time: f64,
    pub steps: Vec<Step>,
    pub ledger: MigrationLedger,
    pub items: Vec<ItemOutcome>,
    pub phases: u32,
    pub trace: Vec<TraceRecord>,
}

impl SimulationResult {
    pub fn migration_counts(&self) -> MigrationCounts {
        MigrationCounts::from_ledger(&self.ledger, self.scale)
    }

    pub fn per_time_open_bins(&self) -> &[Step] {
        &self.steps
    }

    pub fn total_active_time(&self) -> f64 {
        self.total_active_time
    }

    /// `∫ open(t) dt` recomputed from the step function.
    pub fn integrate_steps(&self) -> f64 {
        self.steps.iter().map(|s| s.open as f64 * (s.end - s.start)).sum()
    }

    /// Open bins during the step containing `t` (0 outside the horizon).
    pub fn open_at(&self, t: f64) -> u64 {
        match self.steps.binary_search_by(|s| {
            if s.end <= t {
                core::cmp::Ordering::Less
            } else if s.start > t {
                core::cmp::Ordering::Greater
            } else {
                core::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => self.steps[i].open,
            Err(_) => 0,
        }
    }

    /// Original durations as `(id, duration)`, resolved ones included.
    pub fn resolved_durations(&self) -> Vec<(ItemId, f64)> {
        self.items.iter().map(|o| (o.id, o.duration)).collect()
    }

    pub fn verify_packing(&self) -> Result<(), TraceViolation> {
        verify_trace(self.scale, &self.trace)
    }
}
