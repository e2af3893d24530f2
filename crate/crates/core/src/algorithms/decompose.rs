use alloc::vec::Vec;

use crate::engine::SimulationResult;
use crate::instance::{Instance, Item, ItemId};

/// Splits a delay-policy run into its small-part and big-part instances.
///
/// Each item becomes one small part `[a, t1)` (or `[a, departure)` if it never
/// moved) and one big part per migration, `[t_j, t_{j+1})`, the last one
/// ending at the delayed departure. Parts are numbered by `(arrival, original
/// id)`, so FirstFit on each part instance sees arrivals in the same order as
/// the pools did in the original run.
pub fn decompose_delay_run(result: &SimulationResult) -> (Instance, Instance) {
    let mut small: Vec<(f64, ItemId, f64, crate::instance::ScaledSize)> = Vec::new();
    let mut big = Vec::new();
    for o in &result.items {
        let first_end = o.migration_times.first().copied().unwrap_or(o.departure);
        small.push((o.arrival, o.id, first_end - o.arrival, o.size));
        for (j, &t) in o.migration_times.iter().enumerate() {
            let end = o.migration_times.get(j + 1).copied().unwrap_or(o.departure);
            big.push((t, o.id, end - t, o.size));
        }
    }
    (assemble(small, result.scale), assemble(big, result.scale))
}

fn assemble(mut parts: Vec<(f64, ItemId, f64, crate::instance::ScaledSize)>, scale: u64) -> Instance {
    parts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let items = parts
        .into_iter()
        .enumerate()
        .map(|(i, (a, _, d, s))| Item::new(i as ItemId, a, s, d))
        .collect();
    Instance::new(items, scale)
}
