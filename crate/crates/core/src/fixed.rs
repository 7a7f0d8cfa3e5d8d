//! Saturating fixed-point scalars: Q16.16 in a 32-bit word and Q8.8 in a
//! 16-bit word.
//!
//! Quantization rounds to nearest-even and saturates instead of wrapping;
//! every arithmetic op does the same. Saturation events are counted in a
//! global stats register rather than reported as errors, mirroring how an
//! accelerator datapath would flag them.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::{Bounded, One, Zero};

static SATURATIONS: AtomicU64 = AtomicU64::new(0);

/// Number of saturation events since the last reset (process-wide).
pub fn saturation_count() -> u64 {
    SATURATIONS.load(Ordering::Relaxed)
}

pub fn reset_saturation_count() {
    SATURATIONS.store(0, Ordering::Relaxed);
}

#[inline]
fn note_saturation() {
    SATURATIONS.fetch_add(1, Ordering::Relaxed);
}

/// Arithmetic right shift with round-to-nearest-even.
#[inline]
pub(crate) fn rne_shr_i128(v: i128, bits: u32) -> i128 {
    let floor = v >> bits;
    let rem = v - (floor << bits);
    let half = 1i128 << (bits - 1);
    if rem > half || (rem == half && (floor & 1) == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Signed division with round-to-nearest-even.
#[inline]
pub(crate) fn rne_div_i128(num: i128, den: i128) -> i128 {
    debug_assert!(den != 0);
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let floor = num.div_euclid(den);
    let rem = num - floor * den;
    let twice = 2 * rem;
    if twice > den || (twice == den && (floor & 1) == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Fixed-point scalar used by the engine. The two implementations share
/// the same rounding and saturation rules and differ only in word width
/// and the binary point.
pub trait Fixed:
    Copy
    + Clone
    + PartialEq
    + Eq
    + PartialOrd
    + Ord
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Bounded
{
    const FRAC_BITS: u32;
    const WORD_BITS: u32;
    const RAW_MIN: i64;
    const RAW_MAX: i64;

    fn from_raw(raw: i64) -> Self;
    fn raw(self) -> i64;

    /// Saturating construction from an extended-precision raw value.
    #[inline]
    fn from_raw_saturating(raw: i128) -> Self {
        if raw > Self::RAW_MAX as i128 {
            note_saturation();
            Self::from_raw(Self::RAW_MAX)
        } else if raw < Self::RAW_MIN as i128 {
            note_saturation();
            Self::from_raw(Self::RAW_MIN)
        } else {
            Self::from_raw(raw as i64)
        }
    }

    /// Quantize a real value: scale, round to nearest-even, saturate.
    #[inline]
    fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            return Self::zero();
        }
        let scaled = x * (1u64 << Self::FRAC_BITS) as f64;
        if scaled >= Self::RAW_MAX as f64 {
            note_saturation();
            return Self::from_raw(Self::RAW_MAX);
        }
        if scaled <= Self::RAW_MIN as f64 {
            note_saturation();
            return Self::from_raw(Self::RAW_MIN);
        }
        Self::from_raw(round_ties_even(scaled) as i64)
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.raw() as f64 / (1u64 << Self::FRAC_BITS) as f64
    }

    /// Finish a wide multiply-accumulate: the accumulator holds a sum of
    /// raw products at scale 2^(2*FRAC_BITS); one rounding at writeback.
    #[inline]
    fn from_wide_acc(acc: i128) -> Self {
        Self::from_raw_saturating(rne_shr_i128(acc, Self::FRAC_BITS))
    }

    #[inline]
    fn abs(self) -> Self {
        if self.raw() < 0 {
            -self
        } else {
            self
        }
    }

    /// Divide by an integer count (exact rational, round-to-nearest-even).
    #[inline]
    fn div_int(self, n: u32) -> Self {
        debug_assert!(n > 0);
        Self::from_raw_saturating(rne_div_i128(self.raw() as i128, n as i128))
    }

    #[inline]
    fn relu(self) -> Self {
        if self.raw() < 0 {
            Self::zero()
        } else {
            self
        }
    }

    // Scalar math unit: transcendental ops evaluate in f64 and requantize.
    #[inline]
    fn exp_q(self) -> Self {
        Self::from_f64(self.to_f64().exp())
    }

    /// Square root, clamped at zero for negative inputs.
    #[inline]
    fn sqrt_q(self) -> Self {
        if self.raw() <= 0 {
            Self::zero()
        } else {
            Self::from_f64(self.to_f64().sqrt())
        }
    }
}

#[inline]
fn round_ties_even(x: f64) -> f64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 {
        // halfway case: pick the even neighbor
        let f = x.floor();
        if (f as i64) % 2 == 0 {
            f
        } else {
            f + 1.0
        }
    } else {
        r
    }
}

macro_rules! impl_fixed {
    ($name:ident, $raw:ty, $word:expr, $frac:expr, $doc:expr) => {
        #[doc = $doc]
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
        pub struct $name(pub $raw);

        impl $name {
            pub const ZERO: Self = Self(0);
        }

        impl Fixed for $name {
            const FRAC_BITS: u32 = $frac;
            const WORD_BITS: u32 = $word;
            const RAW_MIN: i64 = <$raw>::MIN as i64;
            const RAW_MAX: i64 = <$raw>::MAX as i64;

            #[inline]
            fn from_raw(raw: i64) -> Self {
                Self(raw as $raw)
            }

            #[inline]
            fn raw(self) -> i64 {
                self.0 as i64
            }
        }

        impl Add for $name {
            type Output = Self;
            #[inline]
            fn add(self, rhs: Self) -> Self {
                Self::from_raw_saturating(self.0 as i128 + rhs.0 as i128)
            }
        }

        impl Sub for $name {
            type Output = Self;
            #[inline]
            fn sub(self, rhs: Self) -> Self {
                Self::from_raw_saturating(self.0 as i128 - rhs.0 as i128)
            }
        }

        impl Mul for $name {
            type Output = Self;
            #[inline]
            fn mul(self, rhs: Self) -> Self {
                let prod = self.0 as i128 * rhs.0 as i128;
                Self::from_raw_saturating(rne_shr_i128(prod, Self::FRAC_BITS))
            }
        }

        impl Div for $name {
            type Output = Self;
            #[inline]
            fn div(self, rhs: Self) -> Self {
                if rhs.0 == 0 {
                    note_saturation();
                    return if self.0 >= 0 {
                        Self::from_raw(Self::RAW_MAX)
                    } else {
                        Self::from_raw(Self::RAW_MIN)
                    };
                }
                let num = (self.0 as i128) << Self::FRAC_BITS;
                Self::from_raw_saturating(rne_div_i128(num, rhs.0 as i128))
            }
        }

        impl Neg for $name {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self {
                Self::from_raw_saturating(-(self.0 as i128))
            }
        }

        impl Zero for $name {
            #[inline]
            fn zero() -> Self {
                Self(0)
            }
            #[inline]
            fn is_zero(&self) -> bool {
                self.0 == 0
            }
        }

        impl One for $name {
            #[inline]
            fn one() -> Self {
                Self(1 << Self::FRAC_BITS)
            }
        }

        impl Bounded for $name {
            #[inline]
            fn min_value() -> Self {
                Self(<$raw>::MIN)
            }
            #[inline]
            fn max_value() -> Self {
                Self(<$raw>::MAX)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({})"), self.to_f64())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.to_f64())
            }
        }
    };
}

impl_fixed!(Fixed32, i32, 32, 16, "Q16.16 fixed point in a 32-bit word.");
impl_fixed!(Fixed16, i16, 16, 8, "Q8.8 fixed point in a 16-bit word.");

/// Quantize a real value into the given fixed-point format.
#[inline]
pub fn quantize<F: Fixed>(x: f64) -> F {
    F::from_f64(x)
}

/// Recover the real value of a fixed-point scalar (exact).
#[inline]
pub fn dequantize<F: Fixed>(x: F) -> f64 {
    x.to_f64()
}

/// Dot product with a wide accumulator and a single rounding at writeback,
/// the way a DSP MAC chain behaves.
#[inline]
pub fn fixed_dot<F: Fixed>(w: &[F], x: &[F]) -> F {
    debug_assert_eq!(w.len(), x.len());
    let mut acc: i128 = 0;
    for (a, b) in w.iter().zip(x.iter()) {
        acc += a.raw() as i128 * b.raw() as i128;
    }
    F::from_wide_acc(acc)
}
