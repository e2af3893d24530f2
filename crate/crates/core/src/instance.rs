//! Items, instances and the instance-level quantities used to bound the
//! optimum.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub type ItemId = u64;

/// Exact item size `num / scale`. Bin capacity is exactly `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScaledSize {
    pub num: u64,
    pub scale: u64,
}

impl ScaledSize {
    pub fn new(num: u64, scale: u64) -> Self {
        ScaledSize { num, scale }
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.scale as f64
    }

    pub fn is_valid(&self) -> bool {
        self.scale > 0 && self.num >= 1 && self.num <= self.scale
    }

    /// Same size over a larger scale. `scale` must be a multiple of the current one.
    pub fn rescaled(&self, scale: u64) -> ScaledSize {
        debug_assert!(scale.is_multiple_of(self.scale));
        ScaledSize {
            num: self.num * (scale / self.scale),
            scale,
        }
    }
}

/// How an adversary resolves deferred durations after observing the packing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    /// One long item per nonempty bin, in bin order, until `max_long` long
    /// items have been handed out; everything else is short.
    Fig2 {
        long: f64,
        short: f64,
        max_long: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub arrival: f64,
    pub size: ScaledSize,
    /// `None` means the duration is deferred to an adversary.
    pub duration: Option<f64>,
}

impl Item {
    pub fn new(id: ItemId, arrival: f64, size: ScaledSize, duration: f64) -> Self {
        Item {
            id,
            arrival,
            size,
            duration: Some(duration),
        }
    }

    pub fn deferred(id: ItemId, arrival: f64, size: ScaledSize) -> Self {
        Item {
            id,
            arrival,
            size,
            duration: None,
        }
    }

    /// End of the half-open lifetime `[arrival, arrival + duration)`.
    pub fn departure(&self) -> Option<f64> {
        self.duration.map(|d| self.arrival + d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub items: Vec<Item>,
    pub scale: u64,
    pub seed: Option<u64>,
    /// PRNG algorithm identifier when the instance was generated from `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversarySpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceError {
    UnresolvedDurations,
    Empty,
    NonPositiveGap,
    EmptyPart(usize),
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::UnresolvedDurations => f.write_str("unresolved durations"),
            InstanceError::Empty => f.write_str("instance has no items"),
            InstanceError::NonPositiveGap => f.write_str("concatenation gap must be positive"),
            InstanceError::EmptyPart(i) => write!(f, "concatenation part {} is empty", i),
        }
    }
}

impl core::error::Error for InstanceError {}

/// One problem found by [`Instance::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositiveScale,
    SizeNotPositive { item: ItemId },
    SizeExceedsCapacity { item: ItemId },
    ScaleMismatch { item: ItemId, scale: u64 },
    DuplicateId { item: ItemId },
    NegativeArrival { item: ItemId },
    NonPositiveDuration { item: ItemId },
    NonFiniteTime { item: ItemId },
    DeferredWithoutAdversary { item: ItemId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveScale => f.write_str("scale must be positive"),
            Violation::SizeNotPositive { item } => write!(f, "item {}: size must be positive", item),
            Violation::SizeExceedsCapacity { item } => {
                write!(f, "item {}: size exceeds bin capacity", item)
            }
            Violation::ScaleMismatch { item, scale } => {
                write!(f, "item {}: size scale {} differs from instance scale", item, scale)
            }
            Violation::DuplicateId { item } => write!(f, "item {}: duplicate id", item),
            Violation::NegativeArrival { item } => write!(f, "item {}: negative arrival", item),
            Violation::NonPositiveDuration { item } => {
                write!(f, "item {}: duration must be positive", item)
            }
            Violation::NonFiniteTime { item } => write!(f, "item {}: non-finite time", item),
            Violation::DeferredWithoutAdversary { item } => {
                write!(f, "item {}: deferred duration but no adversary", item)
            }
        }
    }
}

impl Instance {
    pub fn new(items: Vec<Item>, scale: u64) -> Self {
        Instance {
            items,
            scale,
            seed: None,
            rng: None,
            adversary: None,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn has_deferred(&self) -> bool {
        self.items.iter().any(|it| it.duration.is_none())
    }

    fn durations(&self) -> Result<impl Iterator<Item = (&Item, f64)> + '_, InstanceError> {
        if self.has_deferred() {
            return Err(InstanceError::UnresolvedDurations);
        }
        Ok(self.items.iter().map(|it| (it, it.duration.unwrap_or(0.0))))
    }

    /// `Σ s_i · d_i`
    pub fn vol(&self) -> Result<f64, InstanceError> {
        Ok(self.durations()?.map(|(it, d)| it.size.to_f64() * d).sum())
    }

    /// Measure of the union of the item lifetimes.
    pub fn span(&self) -> Result<f64, InstanceError> {
        let mut intervals: Vec<(f64, f64)> = self
            .durations()?
            .map(|(it, d)| (it.arrival, it.arrival + d))
            .collect();
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut total = 0.0;
        let mut current: Option<(f64, f64)> = None;
        for (start, end) in intervals {
            match current {
                Some((s, e)) if start <= e => current = Some((s, if end > e { end } else { e })),
                Some((s, e)) => {
                    total += e - s;
                    current = Some((start, end));
                }
                None => current = Some((start, end)),
            }
        }
        if let Some((s, e)) = current {
            total += e - s;
        }
        Ok(total)
    }

    /// Ratio of the longest to the shortest duration.
    pub fn mu(&self) -> Result<f64, InstanceError> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (_, d) in self.durations()? {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if self.items.is_empty() {
            return Err(InstanceError::Empty);
        }
        Ok(hi / lo)
    }

    /// Earliest arrival and latest departure.
    pub fn horizon(&self) -> Result<Option<(f64, f64)>, InstanceError> {
        let mut out: Option<(f64, f64)> = None;
        for (it, d) in self.durations()? {
            let end = it.arrival + d;
            out = Some(match out {
                None => (it.arrival, end),
                Some((s, e)) => (s.min(it.arrival), e.max(end)),
            });
        }
        Ok(out)
    }

    /// Largest number of simultaneously live items.
    pub fn max_concurrency(&self) -> Result<usize, InstanceError> {
        // departures sort before arrivals at equal times (half-open lifetimes)
        let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * self.items.len());
        for (it, d) in self.durations()? {
            events.push((it.arrival, 1));
            events.push((it.arrival + d, -1));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut live = 0i64;
        let mut best = 0i64;
        for (_, delta) in events {
            live += delta as i64;
            best = best.max(live);
        }
        Ok(best as usize)
    }

    /// All problems with the instance; an empty list means it is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.scale == 0 {
            out.push(Violation::NonPositiveScale);
        }
        let mut seen = BTreeSet::new();
        for it in &self.items {
            if it.size.scale != self.scale {
                out.push(Violation::ScaleMismatch {
                    item: it.id,
                    scale: it.size.scale,
                });
            }
            if it.size.num == 0 {
                out.push(Violation::SizeNotPositive { item: it.id });
            } else if it.size.num > it.size.scale {
                out.push(Violation::SizeExceedsCapacity { item: it.id });
            }
            if !seen.insert(it.id) {
                out.push(Violation::DuplicateId { item: it.id });
            }
            if !it.arrival.is_finite() {
                out.push(Violation::NonFiniteTime { item: it.id });
            } else if it.arrival < 0.0 {
                out.push(Violation::NegativeArrival { item: it.id });
            }
            match it.duration {
                Some(d) if !d.is_finite() => out.push(Violation::NonFiniteTime { item: it.id }),
                Some(d) if d <= 0.0 => out.push(Violation::NonPositiveDuration { item: it.id }),
                Some(_) => {}
                None if self.adversary.is_none() => {
                    out.push(Violation::DeferredWithoutAdversary { item: it.id })
                }
                None => {}
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Same instance with every deferred duration filled from `durations`
    /// (`(id, duration)` pairs). Items without an entry stay deferred.
    pub fn with_durations(&self, durations: &[(ItemId, f64)]) -> Instance {
        let mut out = self.clone();
        for it in out.items.iter_mut() {
            if it.duration.is_none() {
                if let Some(&(_, d)) = durations.iter().find(|(id, _)| *id == it.id) {
                    it.duration = Some(d);
                }
            }
        }
        if !out.has_deferred() {
            out.adversary = None;
        }
        out
    }

    /// Lays the parts out one after another on the time axis.
    ///
    /// Part `j` is shifted so that its first arrival sits `gap` after the last
    /// departure of part `j - 1`; lifetimes of different parts never overlap.
    /// Ids are renumbered `0..n` in part order and sizes are rescaled to the
    /// lcm of the part scales.
    pub fn concat(parts: &[Instance], gap: f64) -> Result<Instance, InstanceError> {
        if gap.is_nan() || gap <= 0.0 {
            return Err(InstanceError::NonPositiveGap);
        }
        let mut scale = 1u64;
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(InstanceError::EmptyPart(i));
            }
            if part.has_deferred() {
                return Err(InstanceError::UnresolvedDurations);
            }
            scale = lcm(scale, part.scale);
        }
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        let mut items = Vec::new();
        let mut prev_end: Option<f64> = None;
        let mut next_id = 0;
        for part in parts {
            let (start, end) = part.horizon()?.ok_or(InstanceError::Empty)?;
            let shift = match prev_end {
                None => 0.0,
                Some(e) => e + gap - start,
            };
            for it in &part.items {
                items.push(Item {
                    id: next_id,
                    arrival: it.arrival + shift,
                    size: it.size.rescaled(scale),
                    duration: it.duration,
                });
                next_id += 1;
            }
            prev_end = Some(end + shift);
        }
        Ok(Instance::new(items, scale))
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        let t = x % y;
        x = y;
        y = t;
    }
    a / x * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn item(id: ItemId, a: f64, num: u64, scale: u64, d: f64) -> Item {
        Item::new(id, a, ScaledSize::new(num, scale), d)
    }

    #[test]
    fn vol_examples() {
        let inst = Instance::new(vec![item(0, 0.0, 2, 4, 4.0), item(1, 0.0, 1, 4, 2.0)], 4);
        assert_eq!(inst.vol().unwrap(), 2.5);
        assert_eq!(Instance::new(vec![], 4).vol().unwrap(), 0.0);
        // 16 items of size 1/4 and duration 1
        let sixteen = Instance::new((0..16).map(|i| item(i, 0.0, 1, 4, 1.0)).collect(), 4);
        assert_eq!(sixteen.vol().unwrap(), 4.0);
    }

    #[test]
    fn span_examples() {
        let inst = Instance::new(
            vec![item(0, 0.0, 1, 2, 2.0), item(1, 1.0, 1, 2, 2.0), item(2, 5.0, 1, 2, 1.0)],
            2,
        );
        assert_eq!(inst.span().unwrap(), 4.0);
        let single = Instance::new(vec![item(0, 0.0, 1, 2, 10.0)], 2);
        assert_eq!(single.span().unwrap(), 10.0);
        let abut = Instance::new(vec![item(0, 0.0, 1, 2, 1.0), item(1, 1.0, 1, 2, 1.0)], 2);
        assert_eq!(abut.span().unwrap(), 2.0);
    }

    #[test]
    fn mu_examples() {
        let inst = Instance::new(
            vec![item(0, 0.0, 1, 2, 1.0), item(1, 0.0, 1, 2, 1.0), item(2, 0.0, 1, 2, 10.0)],
            2,
        );
        assert_eq!(inst.mu().unwrap(), 10.0);
        let flat = Instance::new(vec![item(0, 0.0, 1, 2, 3.0), item(1, 2.0, 1, 2, 3.0)], 2);
        assert_eq!(flat.mu().unwrap(), 1.0);
        assert_eq!(Instance::new(vec![], 2).mu(), Err(InstanceError::Empty));
    }

    #[test]
    fn unresolved_durations_are_rejected() {
        let mut inst = Instance::new(vec![Item::deferred(0, 0.0, ScaledSize::new(1, 2))], 2);
        inst.adversary = Some(AdversarySpec::Fig2 {
            long: 2.0,
            short: 1.0,
            max_long: 1,
        });
        assert_eq!(inst.vol(), Err(InstanceError::UnresolvedDurations));
        assert_eq!(inst.span(), Err(InstanceError::UnresolvedDurations));
        assert_eq!(inst.mu(), Err(InstanceError::UnresolvedDurations));
        assert!(inst.is_valid());
        let resolved = inst.with_durations(&[(0, 2.0)]);
        assert_eq!(resolved.vol().unwrap(), 1.0);
        assert!(resolved.adversary.is_none());
    }

    #[test]
    fn concat_shifts_parts() {
        let a = Instance::new(vec![item(0, 0.0, 1, 2, 3.0)], 2);
        let b = Instance::new(vec![item(0, 0.0, 1, 2, 2.0)], 2);
        let joined = Instance::concat(&[a.clone(), b], 1.0).unwrap();
        assert_eq!(joined.items[1].arrival, 4.0);
        assert_eq!(joined.items[1].id, 1);
        assert_eq!(Instance::concat(core::slice::from_ref(&a), 1.0).unwrap(), a);
        assert_eq!(Instance::concat(core::slice::from_ref(&a), 0.0), Err(InstanceError::NonPositiveGap));
        assert_eq!(
            Instance::concat(&[a, Instance::new(vec![], 2)], 1.0),
            Err(InstanceError::EmptyPart(1))
        );
    }

    #[test]
    fn concat_rescales_to_lcm() {
        let a = Instance::new(vec![item(0, 0.0, 1, 2, 1.0)], 2);
        let b = Instance::new(vec![item(0, 0.0, 1, 3, 1.0)], 3);
        let joined = Instance::concat(&[a, b], 0.5).unwrap();
        assert_eq!(joined.scale, 6);
        assert_eq!(joined.items[0].size, ScaledSize::new(3, 6));
        assert_eq!(joined.items[1].size, ScaledSize::new(2, 6));
        assert!(joined.is_valid());
    }

    #[test]
    fn validate_reports_every_violation() {
        let inst = Instance::new(
            vec![
                item(7, 0.0, 0, 4, 1.0),
                item(7, -1.0, 5, 4, 0.0),
                item(8, 0.0, 1, 8, 1.0),
            ],
            4,
        );
        let v = inst.validate();
        assert!(v.contains(&Violation::SizeNotPositive { item: 7 }));
        assert!(v.contains(&Violation::DuplicateId { item: 7 }));
        assert!(v.contains(&Violation::SizeExceedsCapacity { item: 7 }));
        assert!(v.contains(&Violation::NegativeArrival { item: 7 }));
        assert!(v.contains(&Violation::NonPositiveDuration { item: 7 }));
        assert!(v.contains(&Violation::ScaleMismatch { item: 8, scale: 8 }));
        assert_eq!(
            alloc::format!("{}", Violation::SizeNotPositive { item: 7 }),
            "item 7: size must be positive"
        );
    }

    #[test]
    fn max_concurrency_respects_half_open_lifetimes() {
        let abut = Instance::new(vec![item(0, 0.0, 1, 2, 1.0), item(1, 1.0, 1, 2, 1.0)], 2);
        assert_eq!(abut.max_concurrency().unwrap(), 1);
        let overlap = Instance::new(vec![item(0, 0.0, 1, 2, 1.5), item(1, 1.0, 1, 2, 1.0)], 2);
        assert_eq!(overlap.max_concurrency().unwrap(), 2);
    }
}
