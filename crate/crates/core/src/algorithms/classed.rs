//! Complete bounded-migration policy: one Bad/Good packer per size class,
//! a doubling guess of the peak number of live items, and one junk bin per
//! guess for the items that are small relative to that guess.

use alloc::format;
use alloc::vec::Vec;

use super::bounded::{Alg1Params, ClassPacker};
use super::{size_class, MigOrder, ParamError};
use crate::engine::{BinId, BinSpec, Ctx, Label, Policy, SimError};
use crate::instance::{ItemId, ScaledSize};
use crate::ratio::Ratio;

#[derive(Debug, Clone)]
pub struct Alg2Policy {
    alpha: Ratio,
    order: MigOrder,
    rho_guess: u64,
    log_rho: u32,
    phase: u32,
    packers: Vec<ClassPacker>,
    junk: Option<BinId>,
}

/// Promotion threshold of class `c`: `1/2` for class 0, else `1 - 2^-c`.
pub(crate) fn class_threshold(c: u32) -> Ratio {
    if c == 0 {
        Ratio::new(1, 2)
    } else {
        let den = 1u64 << c.min(62);
        Ratio::new(den - 1, den)
    }
}

impl Alg2Policy {
    pub fn new(alpha: Ratio) -> Result<Self, ParamError> {
        // validates alpha against the loosest class threshold
        Alg1Params::new(alpha, Ratio::new(1, 2))?;
        Ok(Alg2Policy {
            alpha,
            order: MigOrder::Id,
            rho_guess: 0,
            log_rho: 0,
            phase: 0,
            packers: Vec::new(),
            junk: None,
        })
    }

    pub fn with_order(mut self, order: MigOrder) -> Self {
        self.order = order;
        self
    }

    pub fn phases(&self) -> u32 {
        self.phase
    }

    fn start_class(&mut self, c: u32) {
        let params = Alg1Params {
            alpha: self.alpha,
            f: class_threshold(c),
        };
        self.packers.push(ClassPacker::new(params, Some(c), self.order));
    }

    fn start_phase(&mut self, ctx: &mut Ctx<'_>) {
        if let Some(old) = self.junk.take() {
            ctx.release_bin(old);
        }
        self.phase += 1;
        let junk = ctx.open_bin(BinSpec {
            label: Label::Junk { phase: self.phase },
            class: None,
            pool: None,
            persistent: true,
        });
        self.junk = Some(junk);
        ctx.set_phase(self.phase, self.rho_guess);
    }
}

impl Policy for Alg2Policy {
    fn name(&self) -> &str {
        "alg2"
    }

    fn on_arrival(&mut self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError> {
        if self.phase == 0 {
            self.rho_guess = 1;
            self.log_rho = 0;
            self.start_class(0);
            self.start_phase(ctx);
        }
        // the engine already counts the arriving item as live
        let in_system = ctx.state().live_items() as u64 - 1;
        while in_system >= self.rho_guess {
            self.rho_guess *= 2;
            self.log_rho += 1;
            self.start_class(self.log_rho);
            self.start_phase(ctx);
        }

        let c = size_class(size);
        if c < self.log_rho {
            return self.packers[c as usize].arrive(ctx, item, size);
        }
        let junk = self.junk.ok_or_else(|| SimError::Policy(format!("no junk bin for item {}", item)))?;
        let bin = ctx.state().bin(junk).ok_or(SimError::UnknownBin { bin: junk })?;
        if !bin.fits(size) {
            return Err(SimError::Policy(format!(
                "junk bin {} of phase {} overflows with item {} (load {}, size {})",
                junk, self.phase, item, bin.load, size.num
            )));
        }
        ctx.place(item, junk)
    }

    fn on_departure(
        &mut self,
        ctx: &mut Ctx<'_>,
        _item: ItemId,
        _size: ScaledSize,
        from: BinId,
    ) -> Result<(), SimError> {
        let class = match ctx.state().bin(from) {
            Some(b) => b.class,
            None => return Ok(()),
        };
        match class.and_then(|c| self.packers.get(c as usize)) {
            Some(packer) => packer.clone().after_departure(ctx, from),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, SimOptions, TraceRecord};
    use crate::instance::{Instance, Item};
    use alloc::vec;

    #[test]
    fn thresholds() {
        assert_eq!(class_threshold(0), Ratio::new(1, 2));
        assert_eq!(class_threshold(1), Ratio::new(1, 2));
        assert_eq!(class_threshold(3), Ratio::new(7, 8));
    }

    #[test]
    fn guess_doubles_and_small_items_go_to_junk() {
        // eight concurrent items of size 1/16 (class 4)
        let scale = 16;
        let items = (0..8).map(|i| Item::new(i, 0.0, ScaledSize::new(1, scale), 1.0)).collect();
        let mut p = Alg2Policy::new(Ratio::new(1, 4)).unwrap();
        let r = simulate(&Instance::new(items, scale), &mut p, &SimOptions::default(), None).unwrap();
        // guesses 1, 2, 4, 8
        assert_eq!(r.phases, 4);
        let phases: Vec<(u32, u64)> = r
            .trace
            .iter()
            .filter_map(|t| match t {
                TraceRecord::Phase { phase, rho_guess, .. } => Some((*phase, *rho_guess)),
                _ => None,
            })
            .collect();
        assert_eq!(phases, vec![(1, 1), (2, 2), (3, 4), (4, 8)]);
        // every item went to a junk bin; one junk bin per phase holds items
        assert!(r.ledger.is_empty());
        assert_eq!(r.total_active_time, 4.0);
        r.verify_packing().unwrap();
    }

    #[test]
    fn burst_crosses_several_powers_at_once() {
        // 5 items live when the 6th arrives: guess goes 1 -> 2 -> 4 -> 8 before placing it
        let scale = 64;
        let mut items: Vec<Item> = (0..5).map(|i| Item::new(i, 0.0, ScaledSize::new(1, scale), 10.0)).collect();
        items.push(Item::new(5, 1.0, ScaledSize::new(1, scale), 10.0));
        let mut p = Alg2Policy::new(Ratio::new(1, 4)).unwrap();
        let r = simulate(&Instance::new(items, scale), &mut p, &SimOptions::default(), None).unwrap();
        assert_eq!(r.phases, 4);
    }

    #[test]
    fn class_zero_items_are_good_immediately() {
        let scale = 8;
        let items = vec![
            Item::new(0, 0.0, ScaledSize::new(5, scale), 3.0),
            Item::new(1, 0.0, ScaledSize::new(5, scale), 3.0),
        ];
        let mut p = Alg2Policy::new(Ratio::new(1, 4)).unwrap();
        let r = simulate(&Instance::new(items, scale), &mut p, &SimOptions::default(), None).unwrap();
        // first item lands in the junk bin of guess 1, second in class 0 (Good)
        assert!(r.trace.iter().any(|t| matches!(
            t,
            TraceRecord::OpenBin {
                label: Label::Good,
                class: Some(0),
                ..
            }
        )));
        assert_eq!(r.total_active_time, 6.0);
    }
}
