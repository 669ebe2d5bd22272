// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed forms for the time integrals of the sine basis.
//!
//! Everything here works on the unit interval `s = t/τ ∈ [0, 1]` with the
//! dimensionless mode phase `θ = ωτ`; callers restore units.
//!
//! The building block is the exponential moment
//! `I_k(x) = ∫₀¹ s^k e^{ixs} ds`. For `|x| ≥ max(k, 2)` the upward
//! recurrence `I_k = (e^{ix} − k I_{k−1})/(ix)` is stable; below that the
//! entire power series `Σ_m (ix)^m / (m! (k+m+1))` converges quickly and
//! has no cancellation. The series branch also covers every near-resonant
//! argument, so no separate resonance threshold is needed.

use std::f64::consts::PI;

use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Series terms are dropped once they fall below this fraction of the sum.
const SERIES_EPS: f64 = 1e-18;

fn use_series(order: u32, x: f64) -> bool {
    x.abs() < f64::from(order).max(2.0)
}

fn exp_moment_series(order: u32, x: f64) -> Complex64 {
    let ix = Complex64::new(0.0, x);
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 0..500u32 {
        let term = power / f64::from(order + m + 1);
        sum += term;
        if f64::from(m) > x.abs() && term.norm() <= SERIES_EPS * sum.norm() {
            break;
        }
        power *= ix / f64::from(m + 1);
    }
    sum
}

/// `I_k(x) = ∫₀¹ s^k e^{ixs} ds` for `k = 0..=max_order`, given `e^{ix}`.
///
/// Passing the phase separately lets callers supply `e^{iθ}` for every
/// `x = θ ± 2πn` instead of re-evaluating the exponential of a large,
/// slightly rounded argument.
pub fn exp_moments(max_order: u32, x: f64, e_ix: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(max_order as usize + 1);
    let ix = Complex64::new(0.0, x);
    let mut prev = Complex64::new(0.0, 0.0);
    for k in 0..=max_order {
        let value = if use_series(k, x) {
            exp_moment_series(k, x)
        } else if k == 0 {
            (e_ix - 1.0) / ix
        } else {
            (e_ix - f64::from(k) * prev) / ix
        };
        out.push(value);
        prev = value;
    }
    out
}

/// Single exponential moment `I_k(x)`.
pub fn exp_moment(order: u32, x: f64, e_ix: Complex64) -> Complex64 {
    if use_series(order, x) {
        exp_moment_series(order, x)
    } else {
        exp_moments(order, x, e_ix)[order as usize]
    }
}

/// `∫₀¹ s^k sin(2πns) e^{iθs} ds` for `k = 0..=max_order`.
pub fn sine_moments(n: u32, theta: f64, max_order: u32) -> Vec<Complex64> {
    let a = 2.0 * PI * f64::from(n);
    let phase = Complex64::from_polar(1.0, theta);
    let up = exp_moments(max_order, theta + a, phase);
    let down = exp_moments(max_order, theta - a, phase);
    up.iter()
        .zip(&down)
        .map(|(u, d)| (u - d) / (2.0 * I))
        .collect()
}

/// `∫₀^τ (it)^k sin(2πnt/τ) e^{iωt} dt`, the `k`-th ω-derivative of the
/// spectral coefficient `C_n(ω)`. Units s^{k+1}.
pub fn c_integral(n: u32, omega: f64, tau: f64, k: u32) -> Complex64 {
    let unit = sine_moments(n, omega * tau, k)[k as usize];
    I.powu(k) * unit * tau.powi(k as i32 + 1)
}

/// `C_n(ω)` and its first `max_order` ω-derivatives, each divided by
/// `τ^{k+1}` (dimensionless).
pub fn c_derivatives_scaled(n: u32, omega: f64, tau: f64, max_order: u32) -> Vec<Complex64> {
    sine_moments(n, omega * tau, max_order)
        .into_iter()
        .enumerate()
        .map(|(k, v)| I.powu(k as u32) * v)
        .collect()
}

/// `∫₀^σ sin(2πns) e^{iθs} ds` for any `σ ≥ 0` (the basis function is
/// τ-periodic, so `σ > 1` covers repeated pulses).
pub fn partial_sine_integral(n: u32, theta: f64, sigma: f64) -> Complex64 {
    if sigma == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = 2.0 * PI * f64::from(n);
    // e^{i2πnσ} from the fractional part of nσ keeps the phase accurate.
    let turns = (f64::from(n) * sigma).fract();
    let base = Complex64::from_polar(1.0, theta * sigma);
    let rot = Complex64::from_polar(1.0, 2.0 * PI * turns);
    let up = exp_moment(0, (theta + a) * sigma, base * rot);
    let down = exp_moment(0, (theta - a) * sigma, base * rot.conj());
    sigma * (up - down) / (2.0 * I)
}

/// `G(y, x) = ∫₀¹ ds e^{iys} ∫₀^s du e^{ixu}` where `y + x = 2πj` for an
/// integer `j` (so `e^{i(y+x)} = 1`). `y_moments` must hold `I_k(y)` for
/// as many orders as the small-`x` series needs.
fn nested_exp(x: f64, j: i64, y_moments: &[Complex64]) -> Complex64 {
    if x.abs() >= 0.5 {
        let total = if j == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        (total - y_moments[0]) / Complex64::new(0.0, x)
    } else {
        // e^{ixu} expanded: G = Σ_j (ix)^j/(j+1)! I_{j+1}(y)
        let ix = Complex64::new(0.0, x);
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for order in 0..y_moments.len() - 1 {
            coeff /= (order + 1) as f64;
            let term = coeff * y_moments[order + 1];
            sum += term;
            if term.norm() <= SERIES_EPS * sum.norm() {
                break;
            }
            coeff *= ix;
        }
        sum
    }
}

/// Moments needed by [`nested_exp`]'s series branch (`|x| < 0.5`).
const NESTED_ORDERS: u32 = 24;

/// Dimensionless kernel entry
/// `∫₀¹ ds ∫₀^s du sin(2πns) sin(2πmu) sin(θ(s − u))`.
///
/// Writing both sines and `sin θ(s−u)` as exponentials reduces it to four
/// nested exponential integrals `G(y, x)` with `y ∈ {θ ± 2πn}` and
/// `x ∈ {2πm − θ, −2πm − θ}`.
pub fn kernel_entry_unit(n: u32, m: u32, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let a = 2.0 * PI * f64::from(n);
    let b = 2.0 * PI * f64::from(m);
    let phase = Complex64::from_polar(1.0, theta);
    let (ni, mi) = (i64::from(n), i64::from(m));

    let y_up = theta + a;
    let y_down = theta - a;
    let x_res = b - theta;
    let x_off = -b - theta;
    let needs_series = x_res.abs() < 0.5 || x_off.abs() < 0.5;
    let orders = if needs_series { NESTED_ORDERS } else { 0 };
    let up = exp_moments(orders, y_up, phase);
    let down = exp_moments(orders, y_down, phase);

    let g1 = nested_exp(x_res, ni + mi, &up);
    let g2 = nested_exp(x_off, ni - mi, &up);
    let g3 = nested_exp(x_res, mi - ni, &down);
    let g4 = nested_exp(x_off, -ni - mi, &down);
    (-0.25 * (g1 - g2 - g3 + g4)).im
}

/// `Σ_nm A_n A_m k(n, m, θ)` for amplitudes indexed from `n = 1`, in
/// `O(N_A)` operations.
///
/// Away from resonance each `G(y, x)` equals `(δ_{y+x,0} − I₀(y))/(ix)`,
/// which splits the double sum into products of single sums plus a
/// diagonal term. Columns with `|x| < 0.5` are summed exactly instead.
pub fn kernel_quadratic_form_unit(amplitudes: &[f64], theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let phase = Complex64::from_polar(1.0, theta);
    let zero = Complex64::new(0.0, 0.0);
    let (mut u_up, mut u_down) = (zero, zero);
    let (mut r_res, mut r_off, mut diag) = (zero, zero, zero);
    let mut special = Vec::new();
    for (idx, &amp) in amplitudes.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let b = 2.0 * PI * (idx + 1) as f64;
        u_up += amp * exp_moment(0, theta + b, phase);
        u_down += amp * exp_moment(0, theta - b, phase);
        let x_res = b - theta;
        let x_off = -b - theta;
        if x_res.abs() < 0.5 || x_off.abs() < 0.5 {
            special.push(idx);
            continue;
        }
        let inv = Complex64::new(0.0, -1.0 / x_res) + Complex64::new(0.0, -1.0 / x_off);
        r_res += amp * Complex64::new(0.0, -1.0 / x_res);
        r_off += amp * Complex64::new(0.0, -1.0 / x_off);
        diag += amp * amp * inv;
    }
    let bracket = -(u_up - u_down) * (r_res - r_off) - diag;
    let mut total = (-0.25 * bracket).im;
    for m in special {
        let col: f64 = amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(n, a)| a * kernel_entry_unit(n as u32 + 1, m as u32 + 1, theta))
            .sum();
        total += amplitudes[m] * col;
    }
    total
}
