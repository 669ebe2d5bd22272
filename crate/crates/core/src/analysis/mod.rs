// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Evaluation of synthesized pulses: phase-space displacement, residual
//! infidelity under uniform mode drift, gate angle, power, demodulation,
//! sweeps and synthetic sideband spectroscopy.

mod spectroscopy;
mod sweeps;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain_model::ModeData;
use crate::spectral_kernels::{c_integral, kernel_matrix, kernel_quadratic_form_unit, partial_sine_integral};
use crate::synthesis::PulseSolution;
use crate::{Error, Result};

pub use spectroscopy::{
    bsb_population, fit_sideband, simulate_scan, NoiseModel, SidebandFit, SpectroscopyScan, FIT_MAX_ITERATIONS,
};
pub use sweeps::{
    robust_width, stationarity_exponents, sweep_drift, sweep_power_vs_tau, DriftCurve, DEFAULT_DRIFT_POINTS,
    DEFAULT_DRIFT_RANGE, DEFAULT_DRIFT_THRESHOLD,
};

fn check_ion(modes: &ModeData, ion: usize) -> Result<()> {
    if ion < modes.ion_count() {
        Ok(())
    } else {
        Err(Error::InvalidRequest(format!(
            "ion {} outside a {}-ion chain",
            ion + 1,
            modes.ion_count()
        )))
    }
}

fn check_solution(sol: &PulseSolution, modes: &ModeData) -> Result<()> {
    let fp = modes.fingerprint();
    if sol.chain_fingerprint != fp {
        return Err(Error::InvalidModes(format!(
            "solution was built for chain {} but modes have fingerprint {fp}",
            sol.chain_fingerprint
        )));
    }
    Ok(())
}

/// `Σ_{k<R} e^{iθk}` for the phase advance `θ = ωτ` of one repeat.
fn repeat_sum(theta: f64, repeats: u32) -> Complex64 {
    (0..repeats).map(|k| Complex64::from_polar(1.0, theta * f64::from(k))).sum()
}

/// `∫₀^{Rτ} g(t) e^{iωt} dt` over the full repeated pulse.
fn full_integral(sol: &PulseSolution, omega: f64) -> Complex64 {
    let single: Complex64 = sol
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(idx, &a)| a * c_integral(idx as u32 + 1, omega, sol.tau_s, 0))
        .sum();
    single * repeat_sum(omega * sol.tau_s, sol.repeats)
}

/// Phase-space displacement `α_p^i(t) = −η_p^i ∫₀^t g(t') e^{i(ω_p+Δω)t'} dt'`.
pub fn displacement(
    sol: &PulseSolution,
    modes: &ModeData,
    ion: usize,
    mode: usize,
    t: f64,
    drift: f64,
) -> Result<Complex64> {
    check_ion(modes, ion)?;
    if mode >= modes.mode_count() {
        return Err(Error::InvalidRequest(format!("mode {} does not exist", mode + 1)));
    }
    if !(t >= 0.0 && t <= sol.duration() * (1.0 + 1e-12)) {
        return Err(Error::InvalidRequest(format!(
            "time {t} outside [0, {}]",
            sol.duration()
        )));
    }
    let eta = modes.eta[(mode, ion)];
    if eta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let omega = modes.frequencies[mode] + drift;
    let theta = omega * sol.tau_s;
    let sigma = t / sol.tau_s;
    let whole = (sigma.floor() as u32).min(sol.repeats);
    let rest = sigma - f64::from(whole);
    let mut integral = Complex64::new(0.0, 0.0);
    if whole > 0 {
        let one: Complex64 = sol
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(idx, &a)| a * c_integral(idx as u32 + 1, omega, sol.tau_s, 0))
            .sum();
        integral += one * repeat_sum(theta, whole);
    }
    if rest > 0.0 {
        let part: Complex64 = sol
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(idx, &a)| a * partial_sine_integral(idx as u32 + 1, theta, rest))
            .sum();
        integral += part * sol.tau_s * Complex64::from_polar(1.0, theta * f64::from(whole));
    }
    Ok(-eta * integral)
}

/// `f = (4/5) Σ_p (|α_p^i|² + |α_p^j|²)` at the end of the pulse, with
/// every mode shifted by `drift`.
pub fn residual_infidelity(sol: &PulseSolution, modes: &ModeData, i: usize, j: usize, drift: f64) -> Result<f64> {
    check_ion(modes, i)?;
    check_ion(modes, j)?;
    let mut f = 0.0;
    for p in 0..modes.mode_count() {
        let weight = modes.eta[(p, i)].powi(2) + modes.eta[(p, j)].powi(2);
        if weight == 0.0 {
            continue;
        }
        f += weight * full_integral(sol, modes.frequencies[p] + drift).norm_sqr();
    }
    Ok(0.8 * f)
}

/// Size of the infidelity that double-precision roundoff alone produces,
/// `(4/5) Σ_p (η_p^i² + η_p^j²) (ε ‖Â‖₁ Rτ)²`. Infidelities below a small
/// multiple of this cannot be told apart.
pub fn infidelity_roundoff_floor(sol: &PulseSolution, modes: &ModeData, i: usize, j: usize) -> f64 {
    let l1: f64 = sol.amplitudes.iter().map(|a| a.abs()).sum();
    let alpha = f64::EPSILON * l1 * sol.duration();
    let weight: f64 = (0..modes.mode_count())
        .map(|p| modes.eta[(p, i)].powi(2) + modes.eta[(p, j)].powi(2))
        .sum();
    0.8 * weight * alpha * alpha
}

/// Accumulated gate angle recomputed from a freshly built kernel matrix.
///
/// For `R` repeats, `χ = Rχ₁ + Σ_p η_p^iη_p^j |X_p|² Σ_{d=1}^{R−1} (R−d) sin(ω_p dτ)`
/// where `X_p = ∫₀^τ g e^{iω_p t} dt`; the cross terms vanish for a closed pulse.
pub fn gate_angle(sol: &PulseSolution, modes: &ModeData, i: usize, j: usize) -> Result<f64> {
    let k = kernel_matrix(modes, i, j, sol.tau_s, sol.amplitudes.len())?;
    let single = k.gate_angle(&sol.amplitude_vector());
    Ok(single * f64::from(sol.repeats) + repeat_cross_terms(sol, modes, i, j, 0.0))
}

fn repeat_cross_terms(sol: &PulseSolution, modes: &ModeData, i: usize, j: usize, drift: f64) -> f64 {
    if sol.repeats <= 1 {
        return 0.0;
    }
    let r = sol.repeats;
    let mut total = 0.0;
    for p in 0..modes.mode_count() {
        let weight = modes.eta[(p, i)] * modes.eta[(p, j)];
        if weight == 0.0 {
            continue;
        }
        let omega = modes.frequencies[p] + drift;
        let one: Complex64 = sol
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(idx, &a)| a * c_integral(idx as u32 + 1, omega, sol.tau_s, 0))
            .sum();
        let lag: f64 = (1..r)
            .map(|d| f64::from(r - d) * (omega * sol.tau_s * f64::from(d)).sin())
            .sum();
        total += weight * one.norm_sqr() * lag;
    }
    total
}

/// Gate angle with every mode shifted by `drift`, via the separable
/// quadratic form (no `N_A × N_A` matrix).
pub fn gate_angle_drifted(sol: &PulseSolution, modes: &ModeData, i: usize, j: usize, drift: f64) -> Result<f64> {
    check_ion(modes, i)?;
    check_ion(modes, j)?;
    let tau = sol.tau_s;
    let mut single = 0.0;
    for p in 0..modes.mode_count() {
        let weight = modes.eta[(p, i)] * modes.eta[(p, j)];
        if weight == 0.0 {
            continue;
        }
        single += weight * kernel_quadratic_form_unit(&sol.amplitudes, (modes.frequencies[p] + drift) * tau);
    }
    Ok(single * tau * tau * f64::from(sol.repeats) + repeat_cross_terms(sol, modes, i, j, drift))
}

/// Power figures of one repeat (all repeats are identical).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMetrics {
    /// `(1/τ)∫g² = ½ΣÂ²`, rad²/s².
    pub mean_square: f64,
    /// Square root of `mean_square`, rad/s.
    pub rms: f64,
    /// `max_t |g(t)|`, rad/s.
    pub peak: f64,
    /// Time of the peak within one repeat, s.
    pub peak_time: f64,
}

/// `g(t)` for `t` in units of `τ`.
fn pulse_value(amplitudes: &[f64], sigma: f64) -> f64 {
    let step = Complex64::from_polar(1.0, 2.0 * PI * sigma);
    let mut rot = step;
    let mut g = 0.0;
    for &a in amplitudes {
        g += a * rot.im;
        rot *= step;
    }
    g
}

pub fn power_metrics(sol: &PulseSolution) -> PowerMetrics {
    let amps = &sol.amplitudes;
    let mean_square = 0.5 * amps.iter().map(|a| a * a).sum::<f64>();
    let samples = 64 * amps.len().max(1);
    let h = 1.0 / samples as f64;
    let (mut best_s, mut best) = (0.0, 0.0f64);
    for k in 0..samples {
        let s = k as f64 * h;
        let v = pulse_value(amps, s).abs();
        if v > best {
            best = v;
            best_s = s;
        }
    }
    // Golden-section refinement on |g| within one grid step.
    let (mut lo, mut hi) = (best_s - h, best_s + h);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - ratio * (hi - lo);
        let x2 = lo + ratio * (hi - lo);
        if pulse_value(amps, x1).abs() >= pulse_value(amps, x2).abs() {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let s = 0.5 * (lo + hi);
    let v = pulse_value(amps, s).abs();
    if v > best {
        best = v;
        best_s = s;
    }
    PowerMetrics {
        mean_square,
        rms: mean_square.sqrt(),
        peak: best,
        peak_time: best_s.rem_euclid(1.0) * sol.tau_s,
    }
}

/// Time-domain samples of a pulse with its AM/FM decomposition
/// `g(t) = Ω(t) sin ψ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demodulation {
    pub times: Vec<f64>,
    pub pulse: Vec<f64>,
    /// `Ω(t)`, rad/s.
    pub envelope: Vec<f64>,
    /// Unwrapped `ψ(t)`, rad.
    pub phase: Vec<f64>,
    /// `μ(t) = dψ/dt`, rad/s.
    pub detuning: Vec<f64>,
}

/// Minimum number of samples per period of the highest basis tone.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 8.0;

/// Samples `g` on `grid` (ascending, within `[0, τ]`) and demodulates it
/// through the analytic signal `z(t) = Σ Â_n e^{i2πnt/τ}`, for which
/// `g = Im z`, `Ω = |z|` and `ψ = arg z`.
pub fn sample_and_demodulate(sol: &PulseSolution, grid: &[f64]) -> Result<Demodulation> {
    let tau = sol.tau_s;
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("need at least two samples".into()));
    }
    if grid.iter().any(|&t| !(t >= 0.0 && t <= tau * (1.0 + 1e-12))) {
        return Err(Error::InvalidGrid(format!("samples must lie in [0, {tau}]")));
    }
    let max_gap = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("samples must be strictly ascending".into()));
    }
    let period = tau / sol.amplitudes.len() as f64;
    if max_gap > period / MIN_SAMPLES_PER_PERIOD {
        return Err(Error::InvalidGrid(format!(
            "largest gap {max_gap:e} s exceeds 1/{MIN_SAMPLES_PER_PERIOD} of the shortest basis period {period:e} s"
        )));
    }
    let mut pulse = Vec::with_capacity(grid.len());
    let mut envelope = Vec::with_capacity(grid.len());
    let mut phase: Vec<f64> = Vec::with_capacity(grid.len());
    for &t in grid {
        let step = Complex64::from_polar(1.0, 2.0 * PI * t / tau);
        let mut rot = step;
        let mut z = Complex64::new(0.0, 0.0);
        for &a in &sol.amplitudes {
            z += a * rot;
            rot *= step;
        }
        pulse.push(z.im);
        envelope.push(z.norm());
        let raw = z.arg();
        let unwrapped = match phase.last() {
            None => raw,
            Some(&prev) => {
                let mut d = raw - prev.rem_euclid(2.0 * PI);
                while d > PI {
                    d -= 2.0 * PI;
                }
                while d < -PI {
                    d += 2.0 * PI;
                }
                prev + d
            }
        };
        phase.push(unwrapped);
    }
    let n = grid.len();
    let detuning = (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (phase[b] - phase[a]) / (grid[b] - grid[a])
        })
        .collect();
    Ok(Demodulation {
        times: grid.to_vec(),
        pulse,
        envelope,
        phase,
        detuning,
    })
}

/// Uniform grid of `samples_per_period` points per shortest basis period.
pub fn default_grid(sol: &PulseSolution, samples_per_period: usize) -> Vec<f64> {
    let count = sol.amplitudes.len() * samples_per_period.max(1);
    (0..=count).map(|k| sol.tau_s * k as f64 / count as f64).collect()
}
