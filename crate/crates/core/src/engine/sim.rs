use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use super::ledger::{MigrationEntry, MigrationLedger, MigrationTag};
use super::state::{Bin, BinId, BinSpec, Label, PackingState};
use super::trace::TraceRecord;
use super::{
    DurationResolver, Inspector, ItemOutcome, Policy, ResolveSnapshot, SimError, SimulationResult, Step,
};
use crate::instance::{Instance, ItemId, ScaledSize, Violation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Added to an item's remaining lifetime on every migration.
    pub delay_cost: f64,
    pub record_trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            delay_cost: 0.0,
            record_trace: true,
        }
    }
}

impl SimOptions {
    pub fn with_delay(delay_cost: f64) -> Self {
        SimOptions {
            delay_cost,
            ..SimOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Departure,
    Checkpoint,
    Arrival,
    Resolve,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    item: ItemId,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.item.cmp(&other.item))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    Live,
    Gone,
}

#[derive(Debug, Clone)]
struct ItemRec {
    id: ItemId,
    arrival: f64,
    size: ScaledSize,
    duration: Option<f64>,
    status: Status,
    departure: Option<f64>,
    checkpoint: Option<f64>,
    migration_times: Vec<f64>,
}

struct Core {
    now: f64,
    delay_cost: f64,
    state: PackingState,
    items: Vec<ItemRec>,
    index: BTreeMap<ItemId, usize>,
    queue: BinaryHeap<Reverse<Event>>,
    ledger: MigrationLedger,
    trace: Vec<TraceRecord>,
    record_trace: bool,
    in_transit: BTreeMap<ItemId, BinId>,
}

impl Core {
    fn log(&mut self, rec: TraceRecord) {
        if self.record_trace {
            self.trace.push(rec);
        }
    }

    fn rec(&self, item: ItemId) -> Result<&ItemRec, SimError> {
        self.index
            .get(&item)
            .map(|&i| &self.items[i])
            .ok_or(SimError::UnknownItem { item })
    }

    fn rec_mut(&mut self, item: ItemId) -> Result<&mut ItemRec, SimError> {
        match self.index.get(&item) {
            Some(&i) => Ok(&mut self.items[i]),
            None => Err(SimError::UnknownItem { item }),
        }
    }

    fn insert(&mut self, item: ItemId, bin: BinId, migrated: bool) -> Result<(), SimError> {
        let size = self.rec(item)?.size;
        let b = self.state.bins.get_mut(&bin).ok_or(SimError::UnknownBin { bin })?;
        if b.load + size.num > self.state.scale {
            return Err(SimError::CapacityViolation {
                bin,
                item,
                load: b.load,
                size: size.num,
            });
        }
        b.load += size.num;
        b.items.push(item);
        self.state.placement.insert(item, bin);
        let now = self.now;
        self.log(TraceRecord::Place {
            time: now,
            item,
            bin,
            migrated,
        });
        Ok(())
    }

    /// Takes `item` out of its bin; closes the bin if it empties.
    fn remove(&mut self, item: ItemId) -> Result<(BinId, ScaledSize), SimError> {
        let size = self.rec(item)?.size;
        let bin = self.state.placement.remove(&item).ok_or(SimError::UnknownItem { item })?;
        let b = self.state.bins.get_mut(&bin).ok_or(SimError::UnknownBin { bin })?;
        b.load -= size.num;
        b.items.retain(|&x| x != item);
        if b.items.is_empty() && !b.persistent {
            self.state.bins.remove(&bin);
        }
        Ok((bin, size))
    }

    fn schedule_departure(&mut self, item: ItemId) -> Result<(), SimError> {
        let delay = self.delay_cost;
        let rec = self.rec_mut(item)?;
        if let Some(d) = rec.duration {
            let dep = rec.arrival + d + rec.migration_times.len() as f64 * delay;
            if rec.departure != Some(dep) {
                rec.departure = Some(dep);
                self.queue.push(Reverse(Event {
                    time: dep,
                    kind: Kind::Departure,
                    item,
                }));
            }
        }
        Ok(())
    }

    fn prune_empty(&mut self) {
        self.state.bins.retain(|_, b| b.persistent || !b.items.is_empty());
    }

    fn check_settled(&mut self) -> Result<(), SimError> {
        if let Some((&item, _)) = self.in_transit.iter().next() {
            return Err(SimError::LeftInTransit { item });
        }
        self.prune_empty();
        Ok(())
    }
}

/// Handle through which a policy observes and changes the packing.
pub struct Ctx<'a> {
    core: &'a mut Core,
}

impl<'a> Ctx<'a> {
    pub fn now(&self) -> f64 {
        self.core.now
    }

    pub fn scale(&self) -> u64 {
        self.core.state.scale
    }

    pub fn delay_cost(&self) -> f64 {
        self.core.delay_cost
    }

    pub fn state(&self) -> &PackingState {
        &self.core.state
    }

    /// Creates an empty bin. A non-persistent bin that is still empty when
    /// the callback returns is discarded.
    pub fn open_bin(&mut self, spec: BinSpec) -> BinId {
        let id = self.core.state.next_bin;
        self.core.state.next_bin += 1;
        self.core.state.bins.insert(
            id,
            Bin {
                id,
                label: spec.label,
                class: spec.class,
                pool: spec.pool,
                load: 0,
                items: Vec::new(),
                persistent: spec.persistent,
            },
        );
        let now = self.core.now;
        self.core.log(TraceRecord::OpenBin {
            time: now,
            bin: id,
            label: spec.label,
            class: spec.class,
            pool: spec.pool,
        });
        id
    }

    /// Places a freshly arrived item.
    pub fn place(&mut self, item: ItemId, bin: BinId) -> Result<(), SimError> {
        let rec = self.core.rec(item)?;
        if rec.status != Status::Live {
            return Err(SimError::UnknownItem { item });
        }
        if self.core.state.placement.contains_key(&item) || self.core.in_transit.contains_key(&item) {
            return Err(SimError::AlreadyPlaced { item });
        }
        self.core.insert(item, bin, false)
    }

    /// Starts a migration: the item leaves its bin and must be attached
    /// somewhere before the callback returns.
    pub fn detach(&mut self, item: ItemId) -> Result<BinId, SimError> {
        if self.core.rec(item)?.status != Status::Live {
            return Err(SimError::MigratedDeparted { item });
        }
        if self.core.in_transit.contains_key(&item) {
            return Err(SimError::AlreadyPlaced { item });
        }
        let (bin, _) = self.core.remove(item)?;
        self.core.in_transit.insert(item, bin);
        let now = self.core.now;
        self.core.log(TraceRecord::Detach { time: now, item, bin });
        Ok(bin)
    }

    /// Finishes a migration started with [`Ctx::detach`].
    pub fn attach(&mut self, item: ItemId, bin: BinId, tag: MigrationTag) -> Result<(), SimError> {
        let from = *self.core.in_transit.get(&item).ok_or(SimError::NotPlaced { item })?;
        self.core.insert(item, bin, true)?;
        self.core.in_transit.remove(&item);
        let now = self.core.now;
        let size = self.core.rec(item)?.size;
        self.core.ledger.record(MigrationEntry {
            time: now,
            item,
            size_num: size.num,
            from,
            to: bin,
            class: tag.class,
            rule: tag.rule,
        });
        *self.core.state.migrations.entry(item).or_insert(0) += 1;
        self.core.rec_mut(item)?.migration_times.push(now);
        self.core.schedule_departure(item)
    }

    pub fn set_label(&mut self, bin: BinId, label: Label) -> Result<(), SimError> {
        let b = self.core.state.bins.get_mut(&bin).ok_or(SimError::UnknownBin { bin })?;
        let from = b.label;
        if from != label {
            b.label = label;
            let now = self.core.now;
            self.core.log(TraceRecord::Relabel {
                time: now,
                bin,
                from,
                to: label,
            });
        }
        Ok(())
    }

    /// Drops the persistence of a bin; it closes for good once empty.
    pub fn release_bin(&mut self, bin: BinId) {
        if let Some(b) = self.core.state.bins.get_mut(&bin) {
            b.persistent = false;
            if b.items.is_empty() {
                self.core.state.bins.remove(&bin);
            }
        }
    }

    /// Asks for an [`Policy::on_checkpoint`] call for `item` at `time`.
    /// Replaces any earlier checkpoint of the item.
    pub fn schedule_checkpoint(&mut self, item: ItemId, time: f64) -> Result<(), SimError> {
        if time.is_nan() || time < self.core.now {
            return Err(SimError::CheckpointInPast { item, time });
        }
        let rec = self.core.rec_mut(item)?;
        if rec.status != Status::Live {
            return Err(SimError::MigratedDeparted { item });
        }
        rec.checkpoint = Some(time);
        self.core.queue.push(Reverse(Event {
            time,
            kind: Kind::Checkpoint,
            item,
        }));
        Ok(())
    }

    pub fn set_phase(&mut self, phase: u32, rho_guess: u64) {
        self.core.state.phases = phase;
        self.core.state.rho_guess = rho_guess;
        let now = self.core.now;
        self.core.log(TraceRecord::Phase {
            time: now,
            phase,
            rho_guess,
        });
    }
}

struct NoInspection;

impl Inspector for NoInspection {
    fn inspect(&mut self, _time: f64, _state: &PackingState) -> Result<(), alloc::string::String> {
        Ok(())
    }
}

/// Runs `policy` over `instance`.
///
/// Deferred durations are settled by `resolver`, or by the instance's own
/// adversary description when `resolver` is `None`.
pub fn simulate(
    instance: &Instance,
    policy: &mut dyn Policy,
    opts: &SimOptions,
    resolver: Option<&mut dyn DurationResolver>,
) -> Result<SimulationResult, SimError> {
    simulate_with(instance, policy, opts, resolver, &mut NoInspection)
}

/// [`simulate`] with an inspector run after every timestamp.
pub fn simulate_with(
    instance: &Instance,
    policy: &mut dyn Policy,
    opts: &SimOptions,
    resolver: Option<&mut dyn DurationResolver>,
    inspector: &mut dyn Inspector,
) -> Result<SimulationResult, SimError> {
    let has_resolver = resolver.is_some();
    let violations: Vec<Violation> = instance
        .validate()
        .into_iter()
        .filter(|v| !(has_resolver && matches!(v, Violation::DeferredWithoutAdversary { .. })))
        .collect();
    if !violations.is_empty() {
        return Err(SimError::InvalidInstance(violations));
    }
    if !opts.delay_cost.is_finite() || opts.delay_cost < 0.0 {
        return Err(SimError::NegativeDelayCost);
    }

    let mut builtin;
    let resolver: Option<&mut dyn DurationResolver> = match resolver {
        Some(r) => Some(r),
        None => match &instance.adversary {
            Some(spec) => {
                builtin = crate::generators::resolver_for(spec);
                Some(&mut builtin)
            }
            None => None,
        },
    };
    let mut resolver = resolver;

    let mut core = Core {
        now: 0.0,
        delay_cost: opts.delay_cost,
        state: PackingState::new(instance.scale),
        items: Vec::with_capacity(instance.items.len()),
        index: BTreeMap::new(),
        queue: BinaryHeap::new(),
        ledger: MigrationLedger::default(),
        trace: Vec::new(),
        record_trace: opts.record_trace,
        in_transit: BTreeMap::new(),
    };

    let mut resolve_at: Option<f64> = None;
    for it in &instance.items {
        core.index.insert(it.id, core.items.len());
        core.items.push(ItemRec {
            id: it.id,
            arrival: it.arrival,
            size: it.size,
            duration: it.duration,
            status: Status::Pending,
            departure: None,
            checkpoint: None,
            migration_times: Vec::new(),
        });
        core.queue.push(Reverse(Event {
            time: it.arrival,
            kind: Kind::Arrival,
            item: it.id,
        }));
        if it.duration.is_none() {
            resolve_at = Some(resolve_at.map_or(it.arrival, |t: f64| t.max(it.arrival)));
        }
    }
    if let Some(t) = resolve_at {
        if resolver.is_none() {
            return Err(SimError::MissingResolver);
        }
        core.queue.push(Reverse(Event {
            time: t,
            kind: Kind::Resolve,
            item: 0,
        }));
    }

    let mut steps: Vec<Step> = Vec::new();
    let mut total = 0.0;

    while let Some(&Reverse(first)) = core.queue.peek() {
        let t = first.time;
        core.now = t;
        while let Some(&Reverse(ev)) = core.queue.peek() {
            if ev.time != t {
                break;
            }
            core.queue.pop();
            match ev.kind {
                Kind::Departure => {
                    let rec = core.rec(ev.item)?;
                    if rec.status != Status::Live || rec.departure != Some(t) {
                        continue;
                    }
                    let (bin, size) = core.remove(ev.item)?;
                    core.state.sizes.remove(&ev.item);
                    core.rec_mut(ev.item)?.status = Status::Gone;
                    core.log(TraceRecord::Depart {
                        time: t,
                        item: ev.item,
                        bin,
                    });
                    policy.on_departure(&mut Ctx { core: &mut core }, ev.item, size, bin)?;
                    core.check_settled()?;
                }
                Kind::Checkpoint => {
                    let mut batch = Vec::new();
                    let mut push_if_due = |core: &mut Core, item: ItemId| -> Result<(), SimError> {
                        let rec = core.rec_mut(item)?;
                        if rec.status == Status::Live && rec.checkpoint == Some(t) {
                            rec.checkpoint = None;
                            batch.push(item);
                        }
                        Ok(())
                    };
                    push_if_due(&mut core, ev.item)?;
                    while let Some(&Reverse(next)) = core.queue.peek() {
                        if next.time != t || next.kind != Kind::Checkpoint {
                            break;
                        }
                        core.queue.pop();
                        push_if_due(&mut core, next.item)?;
                    }
                    if !batch.is_empty() {
                        batch.sort_unstable();
                        batch.dedup();
                        policy.on_checkpoint(&mut Ctx { core: &mut core }, &batch)?;
                        core.check_settled()?;
                    }
                }
                Kind::Arrival => {
                    let rec = core.rec_mut(ev.item)?;
                    rec.status = Status::Live;
                    let size = rec.size;
                    core.state.sizes.insert(ev.item, size);
                    core.log(TraceRecord::Arrive {
                        time: t,
                        item: ev.item,
                        size_num: size.num,
                    });
                    policy.on_arrival(&mut Ctx { core: &mut core }, ev.item, size)?;
                    if !core.state.placement.contains_key(&ev.item) {
                        return Err(SimError::NotPlaced { item: ev.item });
                    }
                    core.check_settled()?;
                    core.schedule_departure(ev.item)?;
                }
                Kind::Resolve => {
                    let resolver = resolver.as_deref_mut().ok_or(SimError::MissingResolver)?;
                    resolve(&mut core, resolver)?;
                }
            }
        }
        inspector
            .inspect(t, &core.state)
            .map_err(|detail| SimError::Invariant { time: t, detail })?;
        let open = core.state.open_bins() as u64;
        if let Some(&Reverse(next)) = core.queue.peek() {
            steps.push(Step {
                start: t,
                end: next.time,
                open,
                phases: core.state.phases,
            });
            total += open as f64 * (next.time - t);
        }
    }

    let mut items: Vec<ItemOutcome> = Vec::with_capacity(core.items.len());
    for rec in &core.items {
        if rec.status != Status::Gone {
            return Err(SimError::Unresolved { item: rec.id });
        }
        items.push(ItemOutcome {
            id: rec.id,
            arrival: rec.arrival,
            size: rec.size,
            duration: rec.duration.unwrap_or(0.0),
            departure: rec.departure.unwrap_or(rec.arrival),
            migration_times: rec.migration_times.clone(),
        });
    }
    items.sort_by_key(|o| o.id);

    Ok(SimulationResult {
        policy: policy.name().to_string(),
        scale: instance.scale,
        delay_cost: opts.delay_cost,
        total_active_time: total,
        steps,
        ledger: core.ledger,
        items,
        phases: core.state.phases,
        trace: core.trace,
    })
}

fn resolve(core: &mut Core, resolver: &mut dyn DurationResolver) -> Result<(), SimError> {
    let now = core.now;
    let mut bins = Vec::new();
    for b in core.state.bins.values() {
        let mut deferred: Vec<ItemId> = b
            .items
            .iter()
            .copied()
            .filter(|id| {
                core.index
                    .get(id)
                    .map(|&i| core.items[i].duration.is_none())
                    .unwrap_or(false)
            })
            .collect();
        deferred.sort_unstable();
        bins.push((b.id, deferred));
    }
    let snapshot = ResolveSnapshot { time: now, bins };
    for (item, duration) in resolver.resolve(&snapshot) {
        let rec = core.rec_mut(item)?;
        if rec.duration.is_some() || rec.status != Status::Live {
            continue;
        }
        if !duration.is_finite() || duration <= 0.0 || rec.arrival + duration <= now {
            return Err(SimError::BadResolution { item, duration });
        }
        rec.duration = Some(duration);
        core.log(TraceRecord::Resolve {
            time: now,
            item,
            duration,
        });
        core.schedule_departure(item)?;
    }
    if let Some(rec) = core.items.iter().find(|r| r.duration.is_none()) {
        return Err(SimError::Unresolved { item: rec.id });
    }
    Ok(())
}
