use crate::engine::{Bin, BinId, BinSpec, Ctx, Label, PackingState, Policy, SimError};
use crate::instance::{ItemId, ScaledSize};

/// Earliest-opened eligible bin with room for `size`.
pub fn first_fit_bin(
    state: &PackingState,
    size: ScaledSize,
    mut eligible: impl FnMut(&Bin) -> bool,
) -> Option<BinId> {
    state
        .bins()
        .find(|b| eligible(b) && b.fits(size))
        .map(|b| b.id)
}

/// Plain FirstFit, no migrations.
#[derive(Debug, Clone, Default)]
pub struct FirstFit;

impl Policy for FirstFit {
    fn name(&self) -> &str {
        "firstfit"
    }

    fn on_arrival(&mut self, ctx: &mut Ctx<'_>, item: ItemId, size: ScaledSize) -> Result<(), SimError> {
        let bin = match first_fit_bin(ctx.state(), size, |b| b.label == Label::Plain && b.pool.is_none()) {
            Some(b) => b,
            None => ctx.open_bin(BinSpec::plain()),
        };
        ctx.place(item, bin)
    }
}
