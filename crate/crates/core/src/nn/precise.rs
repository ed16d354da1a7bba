//! Scalar abstraction used by the gradient oracle.
//!
//! [`Real`] is implemented for `f64` and for [`DoubleDouble`], an unevaluated
//! sum `hi + lo` carrying roughly 106 bits of mantissa. Central differences
//! evaluated in double-double arithmetic are free of the `ulp(L)/ε` round-off
//! floor that plain `f64` differences hit on small gradients.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn tanh(self) -> Self {
        // tanh(x) = sign(x)·(1 - e^{-2|x|}) / (1 + e^{-2|x|})
        let e = (Self::from_f64(-2.0) * self.abs()).exp();
        let t = (Self::one() - e) / (Self::one() + e);
        if self < Self::zero() {
            -t
        } else {
            t
        }
    }

    /// `ln(1 + eˣ)` without overflow.
    fn softplus(self) -> Self {
        let e = (-self.abs()).exp();
        self.max(Self::zero()) + (Self::one() + e).ln()
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn softplus(self) -> Self {
        self.max(0.0) + (-self.abs()).exp().ln_1p()
    }
}

/// Double-double number `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: DoubleDouble = DoubleDouble { hi: 6.931_471_805_599_453e-1, lo: 2.319_046_813_846_299_6e-17 };

impl DoubleDouble {
    pub const fn new(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DoubleDouble { hi, lo }
    }

    fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        DoubleDouble { hi: self.hi * s, lo: self.lo * s }
    }
}

impl PartialEq for DoubleDouble {
    fn eq(&self, o: &Self) -> bool {
        self.hi == o.hi && self.lo == o.lo
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            c => c,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::new(q3)
    }
}

impl Real for DoubleDouble {
    fn from_f64(v: f64) -> Self {
        DoubleDouble::new(v)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::new(0.0);
        }
        let x = self.hi.sqrt();
        let xx = DoubleDouble::new(x) * DoubleDouble::new(x);
        let corr = (self - xx).hi / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, corr);
        DoubleDouble { hi, lo }
    }

    fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DoubleDouble::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::new(0.0);
        }
        // x = k·ln2 + r, then e^r = (e^{r/1024})^1024 with a Taylor series
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-10);
        let mut term = DoubleDouble::new(1.0);
        let mut sum = DoubleDouble::new(1.0);
        for n in 1..=18 {
            term = term * r / DoubleDouble::new(n as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::new(f64::NAN);
        }
        // Newton on e^y = x: y ← y + x·e^{-y} - 1
        let mut y = DoubleDouble::new(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - DoubleDouble::new(1.0);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(v: f64) -> DoubleDouble {
        DoubleDouble::new(v)
    }

    #[test]
    fn captures_bits_below_f64() {
        let one = dd(1.0);
        let tiny = dd(1e-20);
        let s = one + tiny - one;
        assert!((s.to_f64() - 1e-20).abs() < 1e-35);
    }

    #[test]
    fn division_and_sqrt_round_trip() {
        let x = dd(2.0);
        let r = x.sqrt();
        let back = r * r - x;
        assert!(back.to_f64().abs() < 1e-30);
        let q = dd(1.0) / dd(3.0);
        assert!((q * dd(3.0) - dd(1.0)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_and_ln_are_inverse_to_double_double_precision() {
        for v in [-30.0, -2.5, -1e-3, 0.0, 0.3, 1.0, 7.7, 50.0] {
            let x = dd(v);
            let y = x.exp().ln();
            assert!((y - x).to_f64().abs() < 1e-28 * (1.0 + v.abs()), "{v}: {:?}", y - x);
            assert!((x.exp().to_f64() - v.exp()).abs() <= 2.0 * f64::EPSILON * v.exp());
        }
        // e^1 to 32 digits: 2.7182818284590452353602874713527
        let e = dd(1.0).exp();
        let err = e - DoubleDouble { hi: 2.718_281_828_459_045, lo: 1.445_646_891_729_250_2e-16 };
        assert!(err.to_f64().abs() < 1e-28, "{err:?}");
    }

    #[test]
    fn tanh_and_softplus_match_f64() {
        for v in [-20.0, -3.0, -0.4, 0.0, 1e-4, 0.9, 6.0, 40.0] {
            assert!((Real::tanh(dd(v)).to_f64() - v.tanh()).abs() < 1e-15);
            assert!((dd(v).softplus().to_f64() - Real::softplus(v)).abs() < 1e-14 * (1.0 + v.abs()));
        }
    }
}
