//! Packing policies. All thresholds are exact rationals compared against
//! integer loads.

mod bounded;
mod classed;
mod decompose;
mod delay;
mod first_fit;
mod size_cost;

use core::fmt;

pub use bounded::{Alg1Params, Alg1Policy};
pub use classed::Alg2Policy;
pub use decompose::decompose_delay_run;
pub use delay::DelayPolicy;
pub use first_fit::{first_fit_bin, FirstFit};
pub use size_cost::SizeCostPolicy;

use alloc::boxed::Box;

use serde::{Deserialize, Serialize};

use crate::engine::{Policy, SimOptions};
use crate::instance::ScaledSize;
use crate::ratio::Ratio;

/// Order in which the residents of a drained bin are re-inserted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MigOrder {
    #[default]
    Id,
    SizeDesc,
}

/// A policy together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "alg", rename_all = "snake_case")]
pub enum AlgorithmSpec {
    #[serde(rename = "firstfit")]
    FirstFit,
    Alg1 {
        alpha: Ratio,
        f: Ratio,
        #[serde(default)]
        order: MigOrder,
    },
    Alg2 {
        alpha: Ratio,
        #[serde(default)]
        order: MigOrder,
    },
    #[serde(rename = "sizecost")]
    SizeCost {
        alpha: Ratio,
        #[serde(default)]
        order: MigOrder,
    },
    Delay {
        c: f64,
    },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::FirstFit => "firstfit",
            AlgorithmSpec::Alg1 { .. } => "alg1",
            AlgorithmSpec::Alg2 { .. } => "alg2",
            AlgorithmSpec::SizeCost { .. } => "sizecost",
            AlgorithmSpec::Delay { .. } => "delay",
        }
    }

    pub fn alpha(&self) -> Option<Ratio> {
        match *self {
            AlgorithmSpec::Alg1 { alpha, .. }
            | AlgorithmSpec::Alg2 { alpha, .. }
            | AlgorithmSpec::SizeCost { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Promotion threshold, where a single one applies.
    pub fn f(&self) -> Option<Ratio> {
        match *self {
            AlgorithmSpec::Alg1 { f, .. } => Some(f),
            AlgorithmSpec::SizeCost { alpha, .. } => Some(alpha.complement()),
            _ => None,
        }
    }

    pub fn delay_cost(&self) -> f64 {
        match *self {
            AlgorithmSpec::Delay { c } => c,
            _ => 0.0,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Policy>, ParamError> {
        Ok(match *self {
            AlgorithmSpec::FirstFit => Box::new(FirstFit),
            AlgorithmSpec::Alg1 { alpha, f, order } => {
                Box::new(Alg1Policy::new(Alg1Params::new(alpha, f)?, None).with_order(order))
            }
            AlgorithmSpec::Alg2 { alpha, order } => Box::new(Alg2Policy::new(alpha)?.with_order(order)),
            AlgorithmSpec::SizeCost { alpha, order } => Box::new(SizeCostPolicy::new(alpha)?.with_order(order)),
            AlgorithmSpec::Delay { c } => Box::new(DelayPolicy::new(c)?),
        })
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions::with_delay(self.delay_cost())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamError {
    AlphaOutOfRange,
    FNotAboveAlpha,
    FAboveOne,
    DelayBelowOne,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::AlphaOutOfRange => f.write_str("alpha must lie in (0, 1/2)"),
            ParamError::FNotAboveAlpha => f.write_str("f must be larger than alpha"),
            ParamError::FAboveOne => f.write_str("f must be at most 1"),
            ParamError::DelayBelowOne => f.write_str("delay cost C must be at least 1"),
        }
    }
}

impl core::error::Error for ParamError {}

/// Size class `c`: the unique `c ≥ 0` with `1/2^(c+1) < size ≤ 1/2^c`.
///
/// Computed on the integer numerator: `num · 2^c ≤ scale < num · 2^(c+1)`.
pub fn size_class(size: ScaledSize) -> u32 {
    debug_assert!(size.num > 0);
    let num = size.num as u128;
    let scale = size.scale as u128;
    let mut c = 0u32;
    while num << (c + 1) <= scale {
        c += 1;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(num: u64, scale: u64) -> u32 {
        size_class(ScaledSize::new(num, scale))
    }

    #[test]
    fn class_boundaries() {
        assert_eq!(s(1, 1), 0);
        assert_eq!(s(8, 16), 1);
        assert_eq!(s(9, 16), 0);
        assert_eq!(s(6, 10), 0);
        assert_eq!(s(5, 10), 1);
        assert_eq!(s(3, 10), 1);
        assert_eq!(s(1, 4), 2);
        assert_eq!(s(1, 16), 4);
        assert_eq!(s(1, 1 << 40), 40);
    }
}
