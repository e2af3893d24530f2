//! Size-cost variant: large items get a bin to themselves, everything else is
//! handled by the Bad/Good scheme with promotion at `1 - α`.

use super::bounded::{Alg1Params, ClassPacker};
use super::{MigOrder, ParamError};
use crate::engine::{BinId, BinSpec, Ctx, Label, Policy, SimError};
use crate::instance::{ItemId, ScaledSize};
use crate::ratio::Ratio;

#[derive(Debug, Clone)]
pub struct SizeCostPolicy {
    alpha: Ratio,
    packer: ClassPacker,
}

impl SizeCostPolicy {
    pub fn new(alpha: Ratio) -> Result<Self, ParamError> {
        let params = Alg1Params::new(alpha, alpha.complement())?;
        Ok(SizeCostPolicy {
            alpha,
            packer: ClassPacker::new(params, None, MigOrder::Id),
        })
    }

    pub fn with_order(mut self, order: MigOrder) -> Self {
        self.packer.order = order;
        self
    }
}

impl Policy for SizeCostPolicy {
    fn name(&self) -> &str {
        "sizecost"
    }

    fn on_arrival(&mut self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError> {
        if self.alpha.reached_by(size.num, size.scale) {
            let bin = ctx.open_bin(BinSpec::labeled(Label::Dedicated, None));
            return ctx.place(item, bin);
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

    #[test]
    fn large_items_are_dedicated() {
        let inst = Instance::new(
            vec![
                Item::new(0, 0.0, ScaledSize::new(35, 100), 2.0),
                Item::new(1, 0.0, ScaledSize::new(10, 100), 2.0),
            ],
            100,
        );
        let mut p = SizeCostPolicy::new(Ratio::new(3, 10)).unwrap();
        let r = simulate(&inst, &mut p, &SimOptions::default(), None).unwrap();
        assert!(r.trace.iter().any(|t| matches!(
            t,
            TraceRecord::OpenBin {
                bin: 0,
                label: Label::Dedicated,
                ..
            }
        )));
        // the small item does not share the dedicated bin
        assert_eq!(r.total_active_time, 4.0);
    }

    #[test]
    fn good_bin_below_alpha_is_drained() {
        // 0.25 + 0.25 + 0.25 = 0.75 >= 0.7 -> Good; two leave -> 0.25 < 0.3
        let scale = 100;
        let items = vec![
            Item::new(0, 0.0, ScaledSize::new(25, scale), 1.0),
            Item::new(1, 0.0, ScaledSize::new(25, scale), 1.0),
            Item::new(2, 0.0, ScaledSize::new(25, scale), 4.0),
            // fills a second Bad bin that receives the migrant
            Item::new(3, 0.0, ScaledSize::new(29, scale), 4.0),
        ];
        let mut p = SizeCostPolicy::new(Ratio::new(3, 10)).unwrap();
        let r = simulate(&Instance::new(items, scale), &mut p, &SimOptions::default(), None).unwrap();
        // 75 + 29 > 100, so item 3 opened Bad bin 1 and receives the migrant
        assert_eq!(r.ledger.unit, 1);
        assert_eq!((r.ledger.entries[0].item, r.ledger.entries[0].to), (2, 1));
        assert_eq!(r.ledger.size_num, 25);
        assert_eq!(r.total_active_time, 1.0 * 2.0 + 3.0);
    }
}
