//! Delay-cost policy: every item starts in the small pool, moves to the big
//! pool once it has been around for `√C`, and then keeps moving inside the big
//! pool every `C + √C` time units.

use alloc::format;
use alloc::vec::Vec;

use super::first_fit::first_fit_bin;
use super::ParamError;
use crate::engine::{BinSpec, Ctx, MigrationRule, MigrationTag, Policy, Pool, SimError};
use crate::instance::{ItemId, ScaledSize};

#[derive(Debug, Clone)]
pub struct DelayPolicy {
    c: f64,
    sqrt_c: f64,
}

impl DelayPolicy {
    pub fn new(c: f64) -> Result<Self, ParamError> {
        if c.is_nan() || c < 1.0 || c.is_infinite() {
            return Err(ParamError::DelayBelowOne);
        }
        Ok(DelayPolicy {
            c,
            sqrt_c: libm::sqrt(c),
        })
    }

    pub fn delay_cost(&self) -> f64 {
        self.c
    }

    pub fn sqrt_c(&self) -> f64 {
        self.sqrt_c
    }

    fn insert(ctx: &mut Ctx<'_>, pool: Pool, size: ScaledSize) -> crate::engine::BinId {
        match first_fit_bin(ctx.state(), size, |b| b.pool == Some(pool)) {
            Some(b) => b,
            None => ctx.open_bin(BinSpec::in_pool(pool)),
        }
    }
}

impl Policy for DelayPolicy {
    fn name(&self) -> &str {
        "delay"
    }

    fn on_arrival(&mut self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError> {
        if ctx.delay_cost() != self.c {
            return Err(SimError::Policy(format!(
                "policy built for C={} but the engine charges C={}",
                self.c,
                ctx.delay_cost()
            )));
        }
        let bin = Self::insert(ctx, Pool::Small, size);
        ctx.place(item, bin)?;
        let at = ctx.now() + self.sqrt_c;
        ctx.schedule_checkpoint(item, at)
    }

    fn on_checkpoint(&mut self, ctx: &mut Ctx<'_>, items: &[ItemId]) -> Result<(), SimError> {
        let mut moving: Vec<(ItemId, ScaledSize, MigrationRule)> = Vec::with_capacity(items.len());
        for &item in items {
            let from = ctx.state().bin_of(item).ok_or(SimError::NotPlaced { item })?;
            let pool = ctx.state().bin(from).and_then(|b| b.pool);
            let rule = if pool == Some(Pool::Small) {
                MigrationRule::DelayFirst
            } else {
                MigrationRule::DelayRepeat
            };
            let size = ctx.state().size_of(item).ok_or(SimError::UnknownItem { item })?;
            moving.push((item, size, rule));
        }
        for &(item, _, _) in &moving {
            ctx.detach(item)?;
        }
        let next = ctx.now() + self.c + self.sqrt_c;
        for &(item, size, rule) in &moving {
            let bin = Self::insert(ctx, Pool::Big, size);
            ctx.attach(item, bin, MigrationTag { class: None, rule })?;
            ctx.schedule_checkpoint(item, next)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, SimOptions};
    use crate::instance::{Instance, Item};
    use alloc::vec;

    fn run(d: f64) -> crate::engine::SimulationResult {
        let inst = Instance::new(vec![Item::new(0, 0.0, ScaledSize::new(1, 2), d)], 2);
        let mut p = DelayPolicy::new(100.0).unwrap();
        simulate(&inst, &mut p, &SimOptions::with_delay(100.0), None).unwrap()
    }

    #[test]
    fn short_item_never_moves() {
        let r = run(5.0);
        assert!(r.ledger.is_empty());
        assert_eq!(r.items[0].departure, 5.0);
    }

    #[test]
    fn departure_at_checkpoint_wins() {
        let r = run(10.0);
        assert!(r.ledger.is_empty());
        assert_eq!(r.items[0].departure, 10.0);
    }

    #[test]
    fn long_item_moves_on_schedule() {
        let r = run(25.0);
        assert_eq!(r.items[0].migration_times, vec![10.0, 120.0]);
        assert_eq!(r.items[0].departure, 225.0);
        let rules: Vec<MigrationRule> = r.ledger.entries.iter().map(|e| e.rule).collect();
        assert_eq!(rules, vec![MigrationRule::DelayFirst, MigrationRule::DelayRepeat]);
        assert_eq!(r.total_active_time, 225.0);
        r.verify_packing().unwrap();
    }

    #[test]
    fn rejects_small_or_mismatched_c() {
        assert_eq!(DelayPolicy::new(0.5).unwrap_err(), ParamError::DelayBelowOne);
        let inst = Instance::new(vec![Item::new(0, 0.0, ScaledSize::new(1, 2), 1.0)], 2);
        let mut p = DelayPolicy::new(4.0).unwrap();
        assert!(matches!(
            simulate(&inst, &mut p, &SimOptions::with_delay(9.0), None),
            Err(SimError::Policy(_))
        ));
    }
}
