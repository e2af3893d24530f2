use core::fmt;

use serde::{Deserialize, Serialize};

/// A nonnegative rational threshold such as `α` or `f`.
///
/// Thresholds are compared against integer bin loads expressed over an
/// instance scale, so `load / scale < num / den` is decided by cross
/// multiplication in `u128` with no rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    /// Panics if `den == 0`.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "ratio with zero denominator");
        let g = gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    /// Nearest decimal with at most nine fractional digits.
    ///
    /// `0.1`, `0.25` and `0.4` come back as `1/10`, `1/4` and `2/5`.
    /// Returns `None` for negative, non-finite or absurdly large input.
    pub fn from_decimal(x: f64) -> Option<Self> {
        if !x.is_finite() || !(0.0..=1.0e9).contains(&x) {
            return None;
        }
        const DEN: u64 = 1_000_000_000;
        let num = libm::round(x * DEN as f64) as u64;
        Some(Ratio::new(num, DEN))
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `1 - self`, saturating at zero.
    pub fn complement(&self) -> Ratio {
        if self.num >= self.den {
            Ratio::ZERO
        } else {
            Ratio::new(self.den - self.num, self.den)
        }
    }

    /// `load / scale < self`
    pub fn exceeds(&self, load: u64, scale: u64) -> bool {
        (load as u128) * (self.den as u128) < (self.num as u128) * (scale as u128)
    }

    /// `load / scale >= self`
    pub fn reached_by(&self, load: u64, scale: u64) -> bool {
        !self.exceeds(load, scale)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        ((self.num as u128) * (other.den as u128)).cmp(&((other.num as u128) * (self.den as u128)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_reduce() {
        assert_eq!(Ratio::from_decimal(0.1), Some(Ratio::new(1, 10)));
        assert_eq!(Ratio::from_decimal(0.25), Some(Ratio::new(1, 4)));
        assert_eq!(Ratio::from_decimal(0.4), Some(Ratio::new(2, 5)));
        assert_eq!(Ratio::from_decimal(-0.1), None);
        assert_eq!(Ratio::from_decimal(f64::NAN), None);
    }

    #[test]
    fn threshold_comparisons_are_exact() {
        let alpha = Ratio::new(1, 4);
        // 2/8 is exactly 1/4: not below it
        assert!(!alpha.exceeds(2, 8));
        assert!(alpha.reached_by(2, 8));
        assert!(alpha.exceeds(1, 8));
        assert_eq!(Ratio::new(1, 4).complement(), Ratio::new(3, 4));
        assert!(Ratio::new(1, 3) < Ratio::new(1, 2));
    }
}
