//! Single-class policy with bounded migration: bins start Bad, become Good
//! once their load reaches `f`, and a Good bin whose load falls below `α`
//! after a departure is drained with FirstFit and closed.

use alloc::format;
use alloc::vec::Vec;

use super::{size_class, MigOrder, ParamError};
use crate::engine::{Bin, BinId, BinSpec, Ctx, Label, MigrationRule, MigrationTag, Policy, SimError};
use crate::instance::{ItemId, ScaledSize};
use crate::ratio::Ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alg1Params {
    pub alpha: Ratio,
    pub f: Ratio,
}

impl Alg1Params {
    pub fn new(alpha: Ratio, f: Ratio) -> Result<Self, ParamError> {
        if alpha == Ratio::ZERO || alpha >= Ratio::new(1, 2) {
            return Err(ParamError::AlphaOutOfRange);
        }
        if f <= alpha {
            return Err(ParamError::FNotAboveAlpha);
        }
        if f > Ratio::ONE {
            return Err(ParamError::FAboveOne);
        }
        Ok(Alg1Params { alpha, f })
    }
}

/// Bad/Good bookkeeping for one group of bins (one size class, or the whole
/// non-dedicated part of the size-cost policy).
#[derive(Debug, Clone)]
pub(crate) struct ClassPacker {
    pub(crate) params: Alg1Params,
    pub(crate) class: Option<u32>,
    pub(crate) order: MigOrder,
}

impl ClassPacker {
    pub(crate) fn new(params: Alg1Params, class: Option<u32>, order: MigOrder) -> Self {
        ClassPacker { params, class, order }
    }

    fn owns(&self, b: &Bin) -> bool {
        b.class == self.class && b.pool.is_none() && matches!(b.label, Label::Bad | Label::Good)
    }

    fn label_for(&self, load: u64, scale: u64) -> Label {
        if self.params.f.reached_by(load, scale) {
            Label::Good
        } else {
            Label::Bad
        }
    }

    fn first_with_label(&self, ctx: &Ctx<'_>, label: Label, size: ScaledSize) -> Option<BinId> {
        ctx.state()
            .bins()
            .find(|b| self.owns(b) && b.label == label && b.fits(size))
            .map(|b| b.id)
    }

    fn open_for(&self, ctx: &mut Ctx<'_>, size: ScaledSize) -> BinId {
        let label = self.label_for(size.num, ctx.scale());
        ctx.open_bin(BinSpec::labeled(label, self.class))
    }

    fn promote(&self, ctx: &mut Ctx<'_>, bin: BinId) -> Result<(), SimError> {
        let scale = ctx.scale();
        let b = ctx.state().bin(bin).ok_or(SimError::UnknownBin { bin })?;
        if b.label == Label::Bad && self.params.f.reached_by(b.load, scale) {
            ctx.set_label(bin, Label::Good)?;
        }
        Ok(())
    }

    pub(crate) fn arrive(&self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError> {
        if let Some(bin) = self.first_with_label(ctx, Label::Bad, size) {
            ctx.place(item, bin)?;
            return self.promote(ctx, bin);
        }
        if let Some(bin) = self.first_with_label(ctx, Label::Good, size) {
            return ctx.place(item, bin);
        }
        let bin = self.open_for(ctx, size);
        ctx.place(item, bin)
    }

    /// FirstFit over Bad bins, then Good bins, then a new bin.
    fn reinsert(&self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError> {
        let tag = MigrationTag {
            class: self.class,
            rule: MigrationRule::GoodDrain,
        };
        let target = self
            .first_with_label(ctx, Label::Bad, size)
            .or_else(|| self.first_with_label(ctx, Label::Good, size));
        let bin = match target {
            Some(b) => b,
            None => self.open_for(ctx, size),
        };
        ctx.attach(item, bin, tag)?;
        self.promote(ctx, bin)
    }

    /// Drains `from` if it is a Good bin of this group left below `α`.
    pub(crate) fn after_departure(&self, ctx: &mut Ctx<'_>, from: BinId) -> Result<(), SimError> {
        let scale = ctx.scale();
        let residents: Vec<(ItemId, ScaledSize)> = match ctx.state().bin(from) {
            Some(b) if self.owns(b) && b.label == Label::Good && self.params.alpha.exceeds(b.load, scale) => {
                let state = ctx.state();
                b.items
                    .iter()
                    .map(|&id| (id, state.size_of(id).unwrap_or(ScaledSize::new(0, scale))))
                    .collect()
            }
            _ => return Ok(()),
        };
        let mut residents = residents;
        match self.order {
            MigOrder::Id => residents.sort_by_key(|&(id, _)| id),
            MigOrder::SizeDesc => residents.sort_by(|a, b| b.1.num.cmp(&a.1.num).then(a.0.cmp(&b.0))),
        }
        for &(id, _) in &residents {
            ctx.detach(id)?;
        }
        for &(id, size) in &residents {
            self.reinsert(ctx, id, size)?;
        }
        Ok(())
    }
}

/// The single-class policy on its own. With a declared class every arriving
/// item must belong to it.
#[derive(Debug, Clone)]
pub struct Alg1Policy {
    packer: ClassPacker,
}

impl Alg1Policy {
    pub fn new(params: Alg1Params, class: Option<u32>) -> Self {
        Alg1Policy {
            packer: ClassPacker::new(params, class, MigOrder::Id),
        }
    }

    pub fn with_order(mut self, order: MigOrder) -> Self {
        self.packer.order = order;
        self
    }
}

impl Policy for Alg1Policy {
    fn name(&self) -> &str {
        "alg1"
    }

    fn on_arrival(&mut self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError> {
        if let Some(c) = self.packer.class {
            let got = size_class(size);
            if got != c {
                return Err(SimError::Policy(format!(
                    "item {} has size class {} but the policy serves class {}",
                    item, got, c
                )));
            }
        }
        self.packer.arrive(ctx, item, size)
    }

    fn on_departure(
        &mut self,
        ctx: &mut Ctx<'_>,
        _item: ItemId,
        _size: ScaledSize,
        from: BinId,
    ) -> Result<(), SimError> {
        self.packer.after_departure(ctx, from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, SimOptions, TraceRecord};
    use crate::instance::{Instance, Item};
    use alloc::vec;

    fn params(alpha: (u64, u64), f: (u64, u64)) -> Alg1Params {
        Alg1Params::new(Ratio::new(alpha.0, alpha.1), Ratio::new(f.0, f.1)).unwrap()
    }

    fn relabels(trace: &[TraceRecord]) -> Vec<(BinId, Label, Label)> {
        trace
            .iter()
            .filter_map(|r| match r {
                TraceRecord::Relabel { bin, from, to, .. } => Some((*bin, *from, *to)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn params_are_checked() {
        assert_eq!(
            Alg1Params::new(Ratio::new(1, 2), Ratio::ONE),
            Err(ParamError::AlphaOutOfRange)
        );
        assert_eq!(
            Alg1Params::new(Ratio::new(1, 4), Ratio::new(1, 4)),
            Err(ParamError::FNotAboveAlpha)
        );
        assert_eq!(
            Alg1Params::new(Ratio::new(1, 4), Ratio::new(5, 4)),
            Err(ParamError::FAboveOne)
        );
    }

    #[test]
    fn second_item_promotes_bad_bin() {
        // sizes 0.3 and 0.3 of class 1, f = 1/2
        let inst = Instance::new(
            vec![
                Item::new(0, 0.0, ScaledSize::new(3, 10), 5.0),
                Item::new(1, 1.0, ScaledSize::new(3, 10), 5.0),
            ],
            10,
        );
        let mut p = Alg1Policy::new(params((1, 4), (1, 2)), Some(1));
        let r = simulate(&inst, &mut p, &SimOptions::default(), None).unwrap();
        assert!(r.trace.iter().any(|t| matches!(
            t,
            TraceRecord::OpenBin {
                bin: 0,
                label: Label::Bad,
                ..
            }
        )));
        assert_eq!(relabels(&r.trace), vec![(0, Label::Bad, Label::Good)]);
        assert_eq!(r.total_active_time, 6.0);
    }

    #[test]
    fn drained_good_bin_migrates_everything() {
        // Good bin at load 0.9 (three items of 0.3 in bin 0) plus a Bad bin
        // with 0.2; departures drop bin 0 to 0.2 < 0.25.
        let scale = 20;
        let inst = Instance::new(
            vec![
                Item::new(0, 0.0, ScaledSize::new(6, scale), 2.0),
                Item::new(1, 0.0, ScaledSize::new(6, scale), 2.0),
                Item::new(2, 0.0, ScaledSize::new(4, scale), 10.0),
                Item::new(3, 0.0, ScaledSize::new(6, scale), 10.0),
                Item::new(4, 0.0, ScaledSize::new(4, scale), 10.0),
            ],
            scale,
        );
        // f = 0.8: bin0 = 6+6+4 = 16/20 -> Good; item3 needs room: 16+6>20 -> new Bad bin1;
        // item4: Bad bin1 has room -> 10/20 stays Bad.
        let mut p = Alg1Policy::new(params((1, 4), (4, 5)), None);
        let r = simulate(&inst, &mut p, &SimOptions::default(), None).unwrap();
        // at t=2 bin0 drops to 4/20 = 0.2 < 0.25: item 2 migrates into the Bad bin
        assert_eq!(r.ledger.unit, 1);
        let e = &r.ledger.entries[0];
        assert_eq!((e.item, e.from, e.to, e.time), (2, 0, 1, 2.0));
        // bin1 reaches 14/20 < 0.8 and stays Bad
        assert!(relabels(&r.trace).iter().all(|&(b, _, _)| b == 0));
        assert_eq!(r.total_active_time, 2.0 * 2.0 + 8.0);
        r.verify_packing().unwrap();
    }

    #[test]
    fn exactly_alpha_is_not_below_alpha() {
        // bin at 0.75 Good, departure drops it to exactly 0.25 = alpha
        let scale = 4;
        let inst = Instance::new(
            vec![
                Item::new(0, 0.0, ScaledSize::new(1, scale), 10.0),
                Item::new(1, 0.0, ScaledSize::new(2, scale), 1.0),
            ],
            scale,
        );
        let mut p = Alg1Policy::new(params((1, 4), (3, 4)), None);
        let r = simulate(&inst, &mut p, &SimOptions::default(), None).unwrap();
        assert_eq!(relabels(&r.trace), vec![(0, Label::Bad, Label::Good)]);
        assert!(r.ledger.is_empty());
    }

    #[test]
    fn declared_class_is_enforced() {
        let inst = Instance::new(vec![Item::new(0, 0.0, ScaledSize::new(6, 10), 1.0)], 10);
        let mut p = Alg1Policy::new(params((1, 4), (1, 2)), Some(1));
        assert!(matches!(
            simulate(&inst, &mut p, &SimOptions::default(), None),
            Err(SimError::Policy(_))
        ));
    }

    #[test]
    fn size_desc_order_reinserts_large_first() {
        let scale = 20;
        // bin0: items 0 (4) and 1 (1) and 2 (13) -> 18/20 Good at f=0.8.
        // item 2 leaves at t=1 -> load 5/20 < 0.3 -> drain {0, 1}.
        let inst = Instance::new(
            vec![
                Item::new(0, 0.0, ScaledSize::new(1, scale), 5.0),
                Item::new(1, 0.0, ScaledSize::new(4, scale), 5.0),
                Item::new(2, 0.0, ScaledSize::new(13, scale), 1.0),
            ],
            scale,
        );
        let mut p = Alg1Policy::new(params((3, 10), (4, 5)), None).with_order(MigOrder::SizeDesc);
        let r = simulate(&inst, &mut p, &SimOptions::default(), None).unwrap();
        let moved: Vec<ItemId> = r.ledger.entries.iter().map(|e| e.item).collect();
        assert_eq!(moved, vec![1, 0]);
        // source bin closed, both land in one fresh bin
        assert_eq!(r.ledger.entries[0].to, r.ledger.entries[1].to);
        assert_ne!(r.ledger.entries[0].to, 0);
    }
}
