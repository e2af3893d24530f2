//! Offline optimum. A repacking optimum may rearrange everything at every
//! instant, so `OPT = ∫ OPT_t dt` with `OPT_t` the static optimum of the items
//! live at `t`, and the integrand only changes at event times.

mod snapshot;
mod total;

pub use snapshot::{
    ffd_snapshot, l1_bound, l2_bound, lower_bound, opt_snapshot, OracleError, SnapshotOracle, NODE_BUDGET, N_MAX,
};
pub use total::{
    grouped_witness_cost, opt_expected_ub_tradeoff, opt_total, opt_total_with, IntervalOpt, OptReport, WitnessError,
};
