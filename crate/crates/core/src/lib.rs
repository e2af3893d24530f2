//! Fully dynamic bin packing with migrations.
//!
//! Items arrive online with a size in `(0, 1]` and a duration the packing
//! policy never sees until the item leaves. The objective is the total active
//! time of the bins: the integral over time of the number of nonempty bins.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised as:
//!
//! * [`instance`]: exact item/instance model, volume, span, duration ratio,
//!   concatenation and validation.
//! * [`engine`]: the deterministic event-driven simulator that drives a
//!   [`engine::Policy`] and accounts active time, migrations and delays.
//! * [`algorithms`]: FirstFit, the single-class bounded-migration policy, the
//!   size-class policy with a doubling guess, the size-cost policy and the
//!   delay-cost policy, plus the sub-instance decomposition of delay runs.
//! * [`oracles`]: exact static bin packing, the repacking optimum
//!   `OPT = ∫ OPT_t dt` and its bounds.
//! * [`generators`]: seeded constructions of the lower-bound families and
//!   generic random workloads.
//! * [`audit`]: per-event and per-run guarantee checks.
#![no_std]

extern crate alloc;

pub mod algorithms;
pub mod audit;
pub mod engine;
pub mod generators;
pub mod instance;
pub mod oracles;
pub mod ratio;

pub use instance::{Instance, InstanceError, Item, ItemId, ScaledSize, Violation};
pub use ratio::Ratio;
