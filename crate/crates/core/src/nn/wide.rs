//! Double-double scalar for the finite-difference oracle. About 32
//! significant digits, so loss differences at small steps are not swamped by
//! rounding. Arithmetic uses the usual error-free transforms with a fused
//! multiply-add for exact products.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::tensor::Scalar;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Wide {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Wide {
    let s = a + b;
    let bb = s - a;
    Wide {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

fn quick_two_sum(a: f64, b: f64) -> Wide {
    let s = a + b;
    Wide { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Wide {
    let p = a * b;
    Wide {
        hi: p,
        lo: a.mul_add(b, -p),
    }
}

impl Wide {
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn mul_f64(self, b: f64) -> Self {
        let p = two_prod(self.hi, b);
        quick_two_sum(p.hi, p.lo + self.lo * b)
    }

    fn scale_pow2(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }
}

impl Add for Wide {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        if !self.hi.is_finite() || !b.hi.is_finite() {
            return Self::from_f64(self.hi + b.hi);
        }
        let s = two_sum(self.hi, b.hi);
        let t = two_sum(self.lo, b.lo);
        let u = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(u.hi, u.lo + t.lo)
    }
}

impl Neg for Wide {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Wide {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for Wide {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let p = two_prod(self.hi, b.hi);
        if !p.hi.is_finite() {
            return Self::from_f64(p.hi);
        }
        quick_two_sum(p.hi, p.lo + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Wide {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Self::from_f64(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        quick_two_sum(q1, q2) + Self::from_f64(q3)
    }
}

impl AddAssign for Wide {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for Wide {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl MulAssign for Wide {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, b: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&b.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&b.lo),
            o => Some(o),
        }
    }
}

const LN2: Wide = Wide::from_parts(std::f64::consts::LN_2, 2.319_046_813_846_299_6e-17);
const SQUARINGS: i32 = 6;
const TAYLOR_TERMS: usize = 14;

fn exp(x: Wide) -> Wide {
    if x.hi.is_nan() {
        return x;
    }
    if x.hi < -745.0 {
        return Wide::default();
    }
    if x.hi > 709.0 {
        return Wide::from_f64(f64::INFINITY);
    }
    let k = (x.hi / std::f64::consts::LN_2).round();
    let r = (x - LN2.mul_f64(k)).scale_pow2(-SQUARINGS);
    let mut sum = Wide::from_f64(1.0);
    let mut term = Wide::from_f64(1.0);
    for i in 1..=TAYLOR_TERMS {
        term = term * r / Wide::from_f64(i as f64);
        sum += term;
    }
    for _ in 0..SQUARINGS {
        sum = sum * sum;
    }
    let k = k as i32;
    // Two factors so that neither power of two overflows.
    sum.scale_pow2(k / 2).scale_pow2(k - k / 2)
}

fn ln(x: Wide) -> Wide {
    if !(x.hi > 0.0) || !x.hi.is_finite() {
        return Wide::from_f64(x.hi.ln());
    }
    let mut y = Wide::from_f64(x.hi.ln());
    for _ in 0..2 {
        y += x * exp(-y) - Wide::from_f64(1.0);
    }
    y
}

fn tanh(x: Wide) -> Wide {
    let a = if x.hi < 0.0 { -x } else { x };
    if a.hi < 1e-3 {
        // Odd series; avoids cancellation in 1 - exp(-2a).
        let a2 = a * a;
        let mut term = a;
        let mut sum = a;
        let coeffs = [
            -1.0 / 3.0,
            2.0 / 15.0,
            -17.0 / 315.0,
            62.0 / 2835.0,
            -1382.0 / 155925.0,
            21844.0 / 6081075.0,
        ];
        for c in coeffs {
            term = term * a2;
            sum += term.mul_f64(c);
        }
        return if x.hi < 0.0 { -sum } else { sum };
    }
    let t = exp(a.scale_pow2(1).neg());
    let one = Wide::from_f64(1.0);
    let y = (one - t) / (one + t);
    if x.hi < 0.0 {
        -y
    } else {
        y
    }
}

fn sqrt(x: Wide) -> Wide {
    if !(x.hi > 0.0) {
        return Wide::from_f64(x.hi.sqrt());
    }
    let y = Wide::from_f64(x.hi.sqrt());
    y + (x - y * y) / y.scale_pow2(1)
}

impl Scalar for Wide {
    fn of(x: f64) -> Self {
        Self::from_f64(x)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn exp(self) -> Self {
        exp(self)
    }

    fn ln(self) -> Self {
        ln(self)
    }

    fn tanh(self) -> Self {
        tanh(self)
    }

    fn sqrt(self) -> Self {
        sqrt(self)
    }
}
