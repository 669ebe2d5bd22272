// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Blue-sideband spectroscopy: the two-level response, synthetic scans and
//! recovery of mode frequency and sideband Rabi rate.

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FIT_MAX_ITERATIONS: usize = 200;

/// Excited-state population after a square sideband pulse of length `t`
/// with Rabi rate `rabi` and detuning `detuning` from the sideband.
pub fn bsb_population(rabi: f64, detuning: f64, t: f64) -> f64 {
    let gen = rabi * rabi + 0.25 * detuning * detuning;
    if gen == 0.0 {
        return 0.0;
    }
    let s = (t * gen.sqrt()).sin();
    (rabi * rabi / gen * s * s).clamp(0.0, 1.0)
}

/// A sideband scan. Drive frequencies and the recovered mode frequency
/// share the same reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyScan {
    /// Drive frequencies, rad/s.
    pub detunings: Vec<f64>,
    pub populations: Vec<f64>,
    /// Sideband pulse length, s.
    pub pulse_duration: f64,
    /// `(ω_p, |Ω|)` used to generate a synthetic scan, rad/s.
    pub truth: Option<(f64, f64)>,
}

/// Measurement noise for synthetic scans. Gaussian noise of standard
/// deviation `gaussian_sigma` is added to the population first; with
/// `shots` set, the result is then sampled as a binomial shot count.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gaussian_sigma: f64,
    pub shots: Option<u64>,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        gaussian_sigma: 0.0,
        shots: None,
    };
}

/// Synthetic scan for mode frequency `mode_frequency` and Rabi rate `rabi`.
pub fn simulate_scan(
    mode_frequency: f64,
    rabi: f64,
    pulse_duration: f64,
    detunings: &[f64],
    noise: NoiseModel,
    seed: u64,
) -> Result<SpectroscopyScan> {
    if !(noise.gaussian_sigma >= 0.0) {
        return Err(Error::InvalidRequest("noise sigma must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, noise.gaussian_sigma).map_err(|e| Error::InvalidRequest(e.to_string()))?;
    let mut populations = Vec::with_capacity(detunings.len());
    for &d in detunings {
        let mut p = bsb_population(rabi, d - mode_frequency, pulse_duration);
        if noise.gaussian_sigma > 0.0 {
            p = (p + gauss.sample(&mut rng)).clamp(0.0, 1.0);
        }
        if let Some(shots) = noise.shots {
            let counts = Binomial::new(shots, p)
                .map_err(|e| Error::InvalidRequest(e.to_string()))?
                .sample(&mut rng);
            p = counts as f64 / shots as f64;
        }
        populations.push(p);
    }
    Ok(SpectroscopyScan {
        detunings: detunings.to_vec(),
        populations,
        pulse_duration,
        truth: Some((mode_frequency, rabi.abs())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandFit {
    /// rad/s.
    pub mode_frequency: f64,
    /// `|Ω|`, rad/s.
    pub rabi: f64,
    /// Root-mean-square population residual.
    pub residual: f64,
    /// Standard errors of `(mode_frequency, rabi)` from `s²(JᵀJ)⁻¹`.
    pub std_errors: [f64; 2],
    pub iterations: usize,
}

/// Levenberg–Marquardt fit of [`bsb_population`] to a scan.
///
/// The initial mode frequency is the drive frequency of the largest
/// population `P_max`; the initial Rabi rate is `asin(√P_max)/t`, the rate
/// that reaches `P_max` on resonance within the first half flop.
pub fn fit_sideband(scan: &SpectroscopyScan) -> Result<SidebandFit> {
    let n = scan.detunings.len();
    if n < 5 || scan.populations.len() != n {
        return Err(Error::InvalidRequest(format!(
            "need at least 5 scan points with matching populations, got {n}"
        )));
    }
    let t = scan.pulse_duration;
    if !(t > 0.0) {
        return Err(Error::InvalidRequest("pulse duration must be positive".into()));
    }
    let (peak_idx, p_max) = scan
        .populations
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, p)| if p > acc.1 { (k, p) } else { acc });
    let center = scan.detunings[peak_idx];
    // Dimensionless parameters x = ((ω_p − center)·t, Ω·t).
    let xs: Vec<f64> = scan.detunings.iter().map(|d| (d - center) * t).collect();
    let model = |p: &Vector2<f64>, x: f64| bsb_population(p[1], x - p[0], 1.0);
    let residuals = |p: &Vector2<f64>| -> Vec<f64> {
        xs.iter().zip(&scan.populations).map(|(&x, &y)| model(p, x) - y).collect()
    };
    let ssr = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let jacobian = |p: &Vector2<f64>| -> Vec<[f64; 2]> {
        xs.iter()
            .map(|&x| {
                let mut row = [0.0; 2];
                for (c, entry) in row.iter_mut().enumerate() {
                    let h = 1e-7 * p[c].abs().max(1.0);
                    let mut up = *p;
                    let mut down = *p;
                    up[c] += h;
                    down[c] -= h;
                    *entry = (model(&up, x) - model(&down, x)) / (2.0 * h);
                }
                row
            })
            .collect()
    };

    let mut p = Vector2::new(0.0, p_max.clamp(0.0, 1.0).sqrt().asin());
    let mut r = residuals(&p);
    let mut cost = ssr(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let best_error = |p: &Vector2<f64>, cost: f64, iterations| Error::FitNonConvergence {
        iterations,
        best_mode_frequency: center + p[0] / t,
        best_rabi: p[1].abs() / t,
        best_residual: (cost / n as f64).sqrt(),
    };
    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let jac = jacobian(&p);
        let mut jtj = Matrix2::<f64>::zeros();
        let mut jtr = Vector2::zeros();
        for (row, res) in jac.iter().zip(&r) {
            for a in 0..2 {
                jtr[a] += row[a] * res;
                for b in 0..2 {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        if jtj[(0, 0)] <= 1e-300 || jtj[(1, 1)] <= 1e-300 {
            return Err(best_error(&p, cost, iterations));
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            damped[(0, 0)] *= 1.0 + lambda;
            damped[(1, 1)] *= 1.0 + lambda;
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let r_trial = residuals(&trial);
            let c_trial = ssr(&r_trial);
            if c_trial <= cost {
                let small = step.norm() <= 1e-12 * (p.norm() + 1e-12) || cost - c_trial <= 1e-15 * cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(best_error(&p, cost, iterations));
    }
    let jac = jacobian(&p);
    let mut jtj = Matrix2::<f64>::zeros();
    for row in &jac {
        for a in 0..2 {
            for b in 0..2 {
                jtj[(a, b)] += row[a] * row[b];
            }
        }
    }
    let Some(cov) = jtj.try_inverse() else {
        return Err(best_error(&p, cost, iterations));
    };
    if p[1].abs() <= 1e-12 {
        return Err(best_error(&p, cost, iterations));
    }
    let s2 = cost / (n as f64 - 2.0);
    Ok(SidebandFit {
        mode_frequency: center + p[0] / t,
        rabi: p[1].abs() / t,
        residual: (cost / n as f64).sqrt(),
        std_errors: [(s2 * cov[(0, 0)]).sqrt() / t, (s2 * cov[(1, 1)]).sqrt() / t],
        iterations,
    })
}
