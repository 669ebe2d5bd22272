// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Double-double arithmetic (about 32 significant digits), enough for the
//! quadrature oracle to resolve integrals that cancel by many orders of
//! magnitude.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
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

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn new(hi: f64) -> Dd {
        Dd { hi, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }


    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self - Dd::new(b).mul_f64(q1);
        let q2 = r.hi / b;
        let r = r - Dd::new(b).mul_f64(q2);
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }

    pub fn powi(self, k: u32) -> Dd {
        (0..k).fold(Dd::ONE, |acc, _| acc * self)
    }

    /// `(sin x, cos x)`.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let k = (self.hi / PIO2[0]).round();
        let r = self - Dd::new(PIO2[0]).mul_f64(k) - Dd::new(PIO2[1]).mul_f64(k) - Dd::new(PIO2[2]).mul_f64(k);
        let (s, c) = taylor_sin_cos(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

// π/2 split into three doubles.
const PIO2: [f64; 3] = [std::f64::consts::FRAC_PI_2, 6.123_233_995_736_766e-17, -1.497_384_904_859_169_8e-33];

/// `2π` to double-double precision.
pub const TWO_PI: Dd = Dd {
    hi: std::f64::consts::TAU,
    lo: 2.449_293_598_294_706_4e-16,
};

const TAYLOR_TERMS: usize = 30;

fn inverse_factorials() -> &'static [Dd; TAYLOR_TERMS] {
    static TABLE: OnceLock<[Dd; TAYLOR_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [Dd::ONE; TAYLOR_TERMS];
        for n in 1..TAYLOR_TERMS {
            t[n] = t[n - 1].div_f64(n as f64);
        }
        t
    })
}

fn taylor_sin_cos(r: Dd) -> (Dd, Dd) {
    let f = inverse_factorials();
    let r2 = r * r;
    // Odd and even Horner chains up to order 29 / 28; |r| ≤ π/4 + ε.
    let mut s = f[29];
    let mut c = f[28];
    for n in (1..=27).rev().step_by(2) {
        s = f[n] - r2 * s;
        c = f[n - 1] - r2 * c;
    }
    (s * r, c)
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, non-negative nodes only
/// (the rule is symmetric).
pub fn gauss_legendre(order: usize) -> Vec<(Dd, Dd)> {
    let n = order as f64;
    let mut out = Vec::with_capacity(order.div_ceil(2));
    for i in 1..=order.div_ceil(2) {
        let mut x = Dd::new((PI * (i as f64 - 0.25) / (n + 0.5)).cos());
        let mut deriv = Dd::ONE;
        for _ in 0..8 {
            let (p, dp) = legendre(order, x);
            deriv = dp;
            x = x - p / dp;
        }
        let (_, dp) = legendre(order, x);
        if dp.hi != 0.0 {
            deriv = dp;
        }
        let w = Dd::new(2.0) / ((Dd::ONE - x * x) * deriv * deriv);
        out.push((x, w));
    }
    out
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: Dd) -> (Dd, Dd) {
    let mut p0 = Dd::ONE;
    let mut p1 = x;
    for j in 1..n {
        let jf = j as f64;
        let p2 = (x * p1).mul_f64(2.0 * jf + 1.0) - p0.mul_f64(jf);
        p0 = p1;
        p1 = p2.div_f64(jf + 1.0);
    }
    let dp = (x * p1 - p0).mul_f64(n as f64) / (x * x - Dd::ONE);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_beyond_double() {
        let third = Dd::ONE.div_f64(3.0);
        let back = third.mul_f64(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sin_cos_pythagoras_and_reference() {
        for x in [0.5, 3.0, 100.0, 2226.1234, -77.7] {
            let (s, c) = Dd::new(x).sin_cos();
            let one = s * s + c * c - Dd::ONE;
            assert!(one.to_f64().abs() < 1e-30, "{x}");
            assert!((s.hi - x.sin()).abs() < 1e-15);
        }
        // sin(0.5) to 32 digits.
        let (s, _) = Dd::new(0.5).sin_cos();
        let err = s - Dd { hi: 0.479_425_538_604_203, lo: -5.103_969_860_556_013e-18 };
        assert!(err.to_f64().abs() < 1e-31);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(20);
        for deg in [0u32, 10, 38] {
            let mut acc = Dd::ZERO;
            for &(x, w) in &rule {
                let v = x.powi(deg);
                acc = acc + w * if x.hi == 0.0 { v } else { v + v };
            }
            let exact = Dd::new(2.0).div_f64(f64::from(deg + 1));
            assert!((acc - exact).to_f64().abs() < 1e-30, "{deg}");
        }
    }
}
