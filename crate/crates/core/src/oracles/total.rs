use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::snapshot::{ffd_snapshot, lower_bound, SnapshotOracle};
use crate::instance::{Instance, InstanceError};

/// Optimum on one interval `[start, end)` between consecutive event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalOpt {
    pub start: f64,
    pub end: f64,
    pub items: usize,
    /// Exact `OPT_t`, when the solver could certify it.
    pub opt: Option<u64>,
    pub lower: u64,
    pub ffd: u64,
}

impl IntervalOpt {
    pub fn is_exact(&self) -> bool {
        self.opt.is_some()
    }
}

/// The repacking optimum `∫ OPT_t dt` with its bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptReport {
    /// `Some` iff every interval was solved exactly.
    pub opt_total: Option<f64>,
    /// Nonempty intervals in time order.
    pub intervals: Vec<IntervalOpt>,
    pub vol: f64,
    pub span: f64,
    /// `max(vol, span)`.
    pub lower_bound: f64,
    /// `∫` of the per-interval lower bounds.
    pub lower_integral: f64,
    /// `∫ FFD_t dt`.
    pub upper_bound: f64,
}

impl OptReport {
    pub fn exact(&self) -> bool {
        self.opt_total.is_some()
    }

    /// Interval containing `t`, if any item is live then.
    pub fn at(&self, t: f64) -> Option<&IntervalOpt> {
        let i = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals.get(i).filter(|iv| iv.start <= t)
    }

    /// Best value known for `OPT_t`: `(lower, exact)`, zero when nothing is live.
    pub fn value_at(&self, t: f64) -> (u64, Option<u64>) {
        match self.at(t) {
            Some(iv) => (iv.opt.unwrap_or(iv.lower), iv.opt),
            None => (0, Some(0)),
        }
    }

    pub fn inexact_intervals(&self) -> usize {
        self.intervals.iter().filter(|iv| iv.opt.is_none()).count()
    }
}

impl fmt::Display for OptReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.opt_total {
            Some(v) => write!(f, "OPT = {}", v)?,
            None => write!(f, "OPT in [{}, {}]", self.lower_integral, self.upper_bound)?,
        }
        write!(f, " (vol {}, span {})", self.vol, self.span)
    }
}

/// [`opt_total_with`] using the default snapshot limits.
pub fn opt_total(instance: &Instance) -> Result<OptReport, InstanceError> {
    opt_total_with(instance, &SnapshotOracle::default())
}

/// Sweeps the event times of `instance` and solves every distinct live
/// multiset once. Snapshots above the solver's size limit still count as
/// exact when their lower bound meets FFD.
pub fn opt_total_with(instance: &Instance, oracle: &SnapshotOracle) -> Result<OptReport, InstanceError> {
    let vol = instance.vol()?;
    let span = instance.span()?;
    let scale = instance.scale;

    // (time, is_arrival, size): departures sort before arrivals at equal times
    let mut events: Vec<(f64, bool, u64)> = Vec::with_capacity(2 * instance.items.len());
    for it in &instance.items {
        let d = it.duration.ok_or(InstanceError::UnresolvedDurations)?;
        events.push((it.arrival, true, it.size.num));
        events.push((it.arrival + d, false, it.size.num));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut live: BTreeMap<u64, usize> = BTreeMap::new();
    let mut live_count = 0usize;
    let mut memo: BTreeMap<Vec<u64>, (Option<u64>, u64, u64)> = BTreeMap::new();
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            let (_, arrive, s) = events[i];
            if arrive {
                *live.entry(s).or_insert(0) += 1;
                live_count += 1;
            } else if let Some(c) = live.get_mut(&s) {
                *c -= 1;
                live_count -= 1;
                if *c == 0 {
                    live.remove(&s);
                }
            }
            i += 1;
        }
        if live_count == 0 || i == events.len() {
            continue;
        }
        let end = events[i].0;
        let sizes: Vec<u64> = live
            .iter()
            .rev()
            .flat_map(|(&s, &c)| core::iter::repeat_n(s, c))
            .collect();
        let (opt, lower, ffd) = *memo.entry(sizes).or_insert_with_key(|sizes| {
            let lower = lower_bound(sizes, scale) as u64;
            let ffd = ffd_snapshot(sizes, scale) as u64;
            let opt = oracle.solve(sizes, scale).ok().map(|v| v as u64);
            (opt, opt.unwrap_or(lower), ffd)
        });
        intervals.push(IntervalOpt {
            start: t,
            end,
            items: live_count,
            opt,
            lower,
            ffd,
        });
    }

    let integral = |v: &dyn Fn(&IntervalOpt) -> u64| -> f64 {
        intervals.iter().map(|iv| v(iv) as f64 * (iv.end - iv.start)).sum()
    };
    let opt_total = if intervals.iter().all(|iv| iv.opt.is_some()) {
        Some(integral(&|iv| iv.opt.unwrap_or(0)))
    } else {
        None
    };
    let lower_integral = integral(&|iv| iv.lower);
    let upper_bound = integral(&|iv| iv.ffd);
    Ok(OptReport {
        opt_total,
        intervals,
        vol,
        span,
        lower_bound: if vol > span { vol } else { span },
        lower_integral,
        upper_bound,
    })
}

/// Closed-form upper bound `μ(sk + 1) + k + 1` on the expected optimum of
/// the randomized lower-bound family with `k/s` items of size `s`.
pub fn opt_expected_ub_tradeoff(k: f64, s: f64, mu: f64) -> f64 {
    mu * (s * k + 1.0) + k + 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum WitnessError {
    Empty,
    MixedSizes,
    MixedArrivals,
    Unresolved,
}

impl fmt::Display for WitnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessError::Empty => f.write_str("witness needs at least one item"),
            WitnessError::MixedSizes => f.write_str("witness needs all items to share one size"),
            WitnessError::MixedArrivals => f.write_str("witness needs all items to arrive together"),
            WitnessError::Unresolved => f.write_str("unresolved durations"),
        }
    }
}

impl core::error::Error for WitnessError {}

/// Cost of the offline packing that sorts items by duration, longest first,
/// and fills bins in that order. Each bin stays open for its longest item.
///
/// Only defined for instances whose items share one size and one arrival
/// time; there it is an upper bound on the optimum without any repacking.
pub fn grouped_witness_cost(instance: &Instance) -> Result<f64, WitnessError> {
    let first = instance.items.first().ok_or(WitnessError::Empty)?;
    let mut durations = Vec::with_capacity(instance.items.len());
    for it in &instance.items {
        if it.size != first.size {
            return Err(WitnessError::MixedSizes);
        }
        if it.arrival != first.arrival {
            return Err(WitnessError::MixedArrivals);
        }
        durations.push(it.duration.ok_or(WitnessError::Unresolved)?);
    }
    durations.sort_by(|a, b| b.total_cmp(a));
    let per_bin = (instance.scale / first.size.num).max(1) as usize;
    Ok(durations.chunks(per_bin).map(|c| c[0]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Item, ScaledSize};
    use alloc::vec;

    #[test]
    fn single_item() {
        let inst = Instance::new(vec![Item::new(0, 1.0, ScaledSize::new(1, 4), 3.0)], 4);
        let r = opt_total(&inst).unwrap();
        assert_eq!(r.opt_total, Some(3.0));
        assert_eq!(r.intervals.len(), 1);
        assert_eq!(r.value_at(2.0), (1, Some(1)));
        assert_eq!(r.value_at(4.0), (0, Some(0)));
        assert_eq!(r.value_at(0.5), (0, Some(0)));
    }

    #[test]
    fn fig2_style_packing() {
        // k=4, μ=10: 16 items of 1/4, four of them long
        let mut items = Vec::new();
        for i in 0..16u64 {
            let d = if i % 4 == 0 { 10.0 } else { 1.0 };
            items.push(Item::new(i, 0.0, ScaledSize::new(1, 4), d));
        }
        let inst = Instance::new(items, 4);
        let r = opt_total(&inst).unwrap();
        assert_eq!(r.opt_total, Some(13.0));
        assert_eq!(grouped_witness_cost(&inst), Ok(13.0));
    }

    #[test]
    fn tradeoff_bound_formula() {
        assert_eq!(opt_expected_ub_tradeoff(4.0, 0.25, 4.0), 13.0);
        assert_eq!(opt_expected_ub_tradeoff(8.0, 0.25, 16.0), 57.0);
        // delay family at C = 100: μ = 10, k = 20, s = 1/20
        assert!(opt_expected_ub_tradeoff(20.0, 0.05, 10.0) <= 50.0);
        assert_eq!(opt_expected_ub_tradeoff(5.0, 0.0, 3.0), 9.0);
    }

    #[test]
    fn unresolved_is_an_error() {
        let inst = Instance::new(vec![Item::deferred(0, 0.0, ScaledSize::new(1, 2))], 2);
        assert_eq!(opt_total(&inst), Err(InstanceError::UnresolvedDurations));
        assert_eq!(grouped_witness_cost(&inst), Err(WitnessError::Unresolved));
    }

    #[test]
    fn large_snapshot_certified_by_bounds() {
        // 100 items of 1/10 live together: LB = FFD = 10 despite N_MAX
        let items = (0..100).map(|i| Item::new(i, 0.0, ScaledSize::new(1, 10), 1.0)).collect();
        let r = opt_total(&Instance::new(items, 10)).unwrap();
        assert_eq!(r.opt_total, Some(10.0));
    }
}
