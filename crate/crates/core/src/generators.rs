//! Seeded instance families. Every generator is a pure function of its
//! parameters; random ones draw from ChaCha8 seeded with `seed_from_u64`.

use alloc::collections::BinaryHeap;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{DurationResolver, ResolveSnapshot};
use crate::instance::{AdversarySpec, Instance, Item, ItemId, ScaledSize};

/// Identifier written to instance headers for reproducibility.
pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, PartialEq)]
pub enum GenError {
    KTooSmall,
    MuTooSmall,
    InvSTooSmall,
    KNotMultiple { k: u64, inv_s: u64 },
    NotPerfectSquare(u64),
    CTooSmall(u64),
    ScaleNotPowerOfTwo(u64),
    BadSizeRange,
    BadDurationRange,
    BadWindow,
    BadQuantum,
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::KTooSmall => f.write_str("k must be at least 2"),
            GenError::MuTooSmall => f.write_str("mu must be larger than 1"),
            GenError::InvSTooSmall => f.write_str("1/s must be at least 2"),
            GenError::KNotMultiple { k, inv_s } => {
                write!(f, "k = {} must be a positive multiple of 1/s = {}", k, inv_s)
            }
            GenError::NotPerfectSquare(c) => write!(f, "C = {} is not a perfect square", c),
            GenError::CTooSmall(c) => write!(f, "C = {} is below 4", c),
            GenError::ScaleNotPowerOfTwo(s) => write!(f, "scale {} is not a power of two", s),
            GenError::BadSizeRange => f.write_str("size range must satisfy 1 <= min <= max <= scale"),
            GenError::BadDurationRange => f.write_str("duration range must satisfy 0 < min <= max"),
            GenError::BadWindow => f.write_str("arrival window must be nonnegative"),
            GenError::BadQuantum => f.write_str("time quantum must be positive"),
        }
    }
}

impl core::error::Error for GenError {}

/// Hands out long durations one per bin, in bin order, to the lowest-id
/// deferred item of each bin until `max_long` are used; all other deferred
/// items get the short duration. Bins holding no deferred item get nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Resolver {
    pub long: f64,
    pub short: f64,
    pub max_long: u64,
}

impl DurationResolver for Fig2Resolver {
    fn resolve(&mut self, snapshot: &ResolveSnapshot) -> Vec<(ItemId, f64)> {
        let mut out = Vec::new();
        let mut handed = 0u64;
        for (_, items) in &snapshot.bins {
            for (j, &id) in items.iter().enumerate() {
                if j == 0 && handed < self.max_long {
                    handed += 1;
                    out.push((id, self.long));
                } else {
                    out.push((id, self.short));
                }
            }
        }
        out
    }
}

/// Resolver described by an instance header.
pub fn resolver_for(spec: &AdversarySpec) -> Fig2Resolver {
    match *spec {
        AdversarySpec::Fig2 { long, short, max_long } => Fig2Resolver { long, short, max_long },
    }
}

/// `k²` items of size `1/k` at time 0 whose durations an adaptive adversary
/// fixes after seeing the packing: one long item (`μ`) per bin.
pub fn gen_fig2(k: u64, mu: f64) -> Result<(Instance, Fig2Resolver), GenError> {
    if k < 2 {
        return Err(GenError::KTooSmall);
    }
    if !mu.is_finite() || mu <= 1.0 {
        return Err(GenError::MuTooSmall);
    }
    let items = (0..k * k).map(|i| Item::deferred(i, 0.0, ScaledSize::new(1, k))).collect();
    let spec = AdversarySpec::Fig2 {
        long: mu,
        short: 1.0,
        max_long: k,
    };
    let resolver = resolver_for(&spec);
    let mut inst = Instance::new(items, k);
    inst.adversary = Some(spec);
    Ok((inst, resolver))
}

fn seeded(items: Vec<Item>, scale: u64, seed: u64) -> Instance {
    let mut inst = Instance::new(items, scale);
    inst.seed = Some(seed);
    inst.rng = Some(RNG_NAME.to_string());
    inst
}

/// `k · inv_s` items of size `1/inv_s` at time 0; each is long (`μ`) with
/// probability `1/inv_s` and short (1) otherwise. `k` must be a multiple of
/// `inv_s`.
pub fn gen_tradeoff_lb(inv_s: u64, k: u64, mu: f64, seed: u64) -> Result<Instance, GenError> {
    if inv_s < 2 {
        return Err(GenError::InvSTooSmall);
    }
    if k == 0 || !k.is_multiple_of(inv_s) {
        return Err(GenError::KNotMultiple { k, inv_s });
    }
    if !mu.is_finite() || mu <= 1.0 {
        return Err(GenError::MuTooSmall);
    }
    let s = 1.0 / inv_s as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..k * inv_s)
        .map(|i| {
            let d = if rng.gen::<f64>() < s { mu } else { 1.0 };
            Item::new(i, 0.0, ScaledSize::new(1, inv_s), d)
        })
        .collect();
    Ok(seeded(items, inv_s, seed))
}

/// The zero-migration family: [`gen_tradeoff_lb`] with `1/s = k`.
pub fn gen_basic_lb(k: u64, mu: f64, seed: u64) -> Result<Instance, GenError> {
    if k < 2 {
        return Err(GenError::KTooSmall);
    }
    gen_tradeoff_lb(k, k, mu, seed)
}

/// Integer square root of a perfect square.
pub fn exact_sqrt(c: u64) -> Option<u64> {
    let r = libm::sqrt(c as f64) as u64;
    (r.saturating_sub(1)..=r + 1).find(|&x| x.checked_mul(x) == Some(c))
}

/// `4C` items of size `1/(2√C)` at time 0, long (`√C`) with probability
/// `1/(2√C)`.
pub fn gen_delay_lb(c: u64, seed: u64) -> Result<Instance, GenError> {
    if c < 4 {
        return Err(GenError::CTooSmall(c));
    }
    let r = exact_sqrt(c).ok_or(GenError::NotPerfectSquare(c))?;
    gen_tradeoff_lb(2 * r, 2 * r, r as f64, seed)
}

/// Parameters of [`gen_uniform`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSpec {
    pub n: usize,
    /// Power of two.
    pub scale: u64,
    /// Inclusive range of size numerators.
    pub size_num: (u64, u64),
    /// Inclusive range of durations before quantisation.
    pub duration: (f64, f64),
    /// Arrivals are drawn from `[0, window]`.
    pub window: f64,
    /// Times are rounded to multiples of this; a power of two keeps every
    /// sum of times exact.
    pub quantum: f64,
    /// Arrivals are pushed back until fewer than this many items are live.
    pub max_live: Option<usize>,
}

impl Default for UniformSpec {
    fn default() -> Self {
        UniformSpec {
            n: 50,
            scale: 64,
            size_num: (1, 64),
            duration: (1.0, 10.0),
            window: 50.0,
            quantum: 1.0 / 1024.0,
            max_live: None,
        }
    }
}

fn quantize(x: f64, q: f64) -> f64 {
    libm::round(x / q) * q
}

/// `n` items with independent uniform sizes, durations and arrivals.
pub fn gen_uniform(spec: &UniformSpec, seed: u64) -> Result<Instance, GenError> {
    if !spec.scale.is_power_of_two() {
        return Err(GenError::ScaleNotPowerOfTwo(spec.scale));
    }
    let (lo, hi) = spec.size_num;
    if lo < 1 || lo > hi || hi > spec.scale {
        return Err(GenError::BadSizeRange);
    }
    let (dlo, dhi) = spec.duration;
    if dlo.is_nan() || dlo <= 0.0 || !dhi.is_finite() || dlo > dhi {
        return Err(GenError::BadDurationRange);
    }
    if !spec.window.is_finite() || spec.window < 0.0 {
        return Err(GenError::BadWindow);
    }
    if !spec.quantum.is_finite() || spec.quantum <= 0.0 {
        return Err(GenError::BadQuantum);
    }
    let q = spec.quantum;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: Vec<(f64, u64, f64)> = (0..spec.n)
        .map(|_| {
            let a = quantize(rng.gen_range(0.0..=spec.window), q);
            let s = rng.gen_range(lo..=hi);
            let d = quantize(rng.gen_range(dlo..=dhi), q).max(q);
            (a, s, d)
        })
        .collect();
    draws.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut items = Vec::with_capacity(spec.n);
    // departures of the items placed so far, as ordered bit patterns
    let mut live: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
    let mut last = 0.0f64;
    for (i, (mut a, s, d)) in draws.into_iter().enumerate() {
        if let Some(cap) = spec.max_live {
            // keep arrivals sorted so the heap is exactly the live set
            a = a.max(last);
            while let Some(&Reverse(t)) = live.peek() {
                if f64::from_bits(t) <= a {
                    live.pop();
                } else {
                    break;
                }
            }
            if live.len() >= cap.max(1) {
                if let Some(Reverse(t)) = live.pop() {
                    a = f64::from_bits(t);
                }
            }
            live.push(Reverse((a + d).to_bits()));
            last = a;
        }
        items.push(Item::new(i as ItemId, a, ScaledSize::new(s, spec.scale), d));
    }
    Ok(seeded(items, spec.scale, seed))
}
