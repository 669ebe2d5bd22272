// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Quadrature oracle for the closed forms. Nothing in the synthesis path
//! calls into this module.
//!
//! Integrals are taken in the dimensionless time `s = t/τ` with composite
//! 20-point Gauss–Legendre panels in double-double arithmetic. The panel
//! count is doubled until two successive estimates agree to tolerance.
//! Kernel entries are iterated over the triangle `0 ≤ u ≤ s ≤ 1`, with
//! the inner integral accumulated panel by panel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dd::{gauss_legendre, Dd, TWO_PI};
use crate::{Error, Result};

const GL_ORDER: usize = 20;

/// Tolerances apply to the dimensionless integral; convergence needs
/// `|I_2P − I_P| ≤ max(abs_tol, rel_tol·|I_2P|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-24,
            rel_tol: 1e-13,
            max_panels: 1 << 16,
        }
    }
}

/// What to evaluate with the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleQuery {
    /// `∫₀^τ (it)^k sin(2πnt/τ) e^{iωt} dt`.
    CIntegral { n: u32, omega: f64, tau: f64, k: u32 },
    /// Single-mode kernel entry without Lamb-Dicke weights:
    /// `∫₀^τ dt₂ ∫₀^{t₂} dt₁ sin(2πnt₂/τ) sin(2πmt₁/τ) sin(ω(t₂ − t₁))`.
    KernelEntry { n: u32, m: u32, omega: f64, tau: f64 },
}

/// Evaluates `query` by quadrature. Kernel entries come back with zero
/// imaginary part.
pub fn quadrature_oracle(query: OracleQuery, cfg: &QuadConfig) -> Result<Complex64> {
    match query {
        OracleQuery::CIntegral { n, omega, tau, k } => c_integral_quadrature(n, omega, tau, k, cfg),
        OracleQuery::KernelEntry { n, m, omega, tau } => {
            kernel_entry_quadrature(n, m, omega, tau, cfg).map(|v| Complex64::new(v, 0.0))
        }
    }
}

/// Node `(x, w)` pairs of the full rule on `[-1, 1]`.
fn full_rule() -> Vec<(Dd, Dd)> {
    let half = gauss_legendre(GL_ORDER);
    let mut rule = Vec::with_capacity(GL_ORDER);
    for &(x, w) in &half {
        rule.push((x, w));
        if x.hi != 0.0 {
            rule.push((-x, w));
        }
    }
    rule
}

/// Maps the rule onto `[lo, hi]`.
fn mapped(rule: &[(Dd, Dd)], lo: Dd, hi: Dd) -> impl Iterator<Item = (Dd, Dd)> + '_ {
    let half = (hi - lo).mul_f64(0.5);
    let mid = (hi + lo).mul_f64(0.5);
    rule.iter().map(move |&(x, w)| (mid + half * x, half * w))
}

fn panel_edge(j: usize, panels: usize) -> Dd {
    Dd::new(j as f64).div_f64(panels as f64)
}

/// Doubles the panel count until successive estimates agree.
fn refine<F>(mut eval: F, phase_span: f64, cfg: &QuadConfig) -> Result<[f64; 2]>
where
    F: FnMut(usize) -> [Dd; 2],
{
    let mut panels = ((phase_span / 3.0).ceil() as usize).max(2);
    let mut prev = eval(panels);
    loop {
        let next_panels = 2 * panels;
        if next_panels > cfg.max_panels {
            let est = [prev[0].to_f64(), prev[1].to_f64()];
            return Err(Error::QuadratureNonConvergence {
                estimate: est[0].hypot(est[1]),
                error: f64::NAN,
                subdivisions: panels,
            });
        }
        let next = eval(next_panels);
        let diff = (next[0] - prev[0]).to_f64().hypot((next[1] - prev[1]).to_f64());
        let size = next[0].to_f64().hypot(next[1].to_f64());
        if diff <= cfg.abs_tol.max(cfg.rel_tol * size) {
            return Ok([next[0].to_f64(), next[1].to_f64()]);
        }
        prev = next;
        panels = next_panels;
    }
}

pub fn c_integral_quadrature(n: u32, omega: f64, tau: f64, k: u32, cfg: &QuadConfig) -> Result<Complex64> {
    let theta = Dd::new(omega) * Dd::new(tau);
    let a = TWO_PI.mul_f64(f64::from(n));
    let rule = full_rule();
    let unit = refine(
        |panels| {
            let (mut re, mut im) = (Dd::ZERO, Dd::ZERO);
            for j in 0..panels {
                for (s, w) in mapped(&rule, panel_edge(j, panels), panel_edge(j + 1, panels)) {
                    let (sa, _) = (a * s).sin_cos();
                    let (st, ct) = (theta * s).sin_cos();
                    let amp = w * s.powi(k) * sa;
                    re = re + amp * ct;
                    im = im + amp * st;
                }
            }
            [re, im]
        },
        theta.hi.abs() + a.hi,
        cfg,
    )?;
    let unit = Complex64::new(unit[0], unit[1]);
    Ok(Complex64::new(0.0, 1.0).powu(k) * unit * tau.powi(k as i32 + 1))
}

/// Kernel entry for a single mode with unit Lamb-Dicke weights, in s².
///
/// Uses `sin θ(s−u) = sin θs cos θu − cos θs sin θu`, so the inner
/// integrals `P(s) = ∫₀^s sin(bu) cos(θu) du` and `Q(s) = ∫₀^s sin(bu) sin(θu) du`
/// accumulate across panels.
pub fn kernel_entry_quadrature(n: u32, m: u32, omega: f64, tau: f64, cfg: &QuadConfig) -> Result<f64> {
    let theta = Dd::new(omega) * Dd::new(tau);
    let a = TWO_PI.mul_f64(f64::from(n));
    let b = TWO_PI.mul_f64(f64::from(m));
    let rule = full_rule();
    let inner = |lo: Dd, hi: Dd| -> (Dd, Dd) {
        let (mut p, mut q) = (Dd::ZERO, Dd::ZERO);
        for (u, w) in mapped(&rule, lo, hi) {
            let (sb, _) = (b * u).sin_cos();
            let (st, ct) = (theta * u).sin_cos();
            let wb = w * sb;
            p = p + wb * ct;
            q = q + wb * st;
        }
        (p, q)
    };
    let unit = refine(
        |panels| {
            let mut total = Dd::ZERO;
            let (mut p_edge, mut q_edge) = (Dd::ZERO, Dd::ZERO);
            for j in 0..panels {
                let lo = panel_edge(j, panels);
                let hi = panel_edge(j + 1, panels);
                for (s, w) in mapped(&rule, lo, hi) {
                    let (dp, dq) = inner(lo, s);
                    let (p, q) = (p_edge + dp, q_edge + dq);
                    let (sa, _) = (a * s).sin_cos();
                    let (st, ct) = (theta * s).sin_cos();
                    total = total + w * sa * (st * p - ct * q);
                }
                let (dp, dq) = inner(lo, hi);
                p_edge = p_edge + dp;
                q_edge = q_edge + dq;
            }
            [total, Dd::ZERO]
        },
        theta.hi.abs() + a.hi + b.hi,
        cfg,
    )?;
    Ok(unit[0] * tau * tau)
}

/// Sampling plan for [`verify_closed_forms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyPlan {
    pub seed: u64,
    /// Random `(n, ω, τ, k)` tuples.
    pub random: usize,
    /// Tuples with `ωτ/2π` within `1e-4` of the basis index `n`.
    pub near_resonant: usize,
    /// Single-mode kernel entries.
    pub kernel: usize,
    pub max_order: u32,
    pub c_tolerance: f64,
    pub kernel_tolerance: f64,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        VerifyPlan {
            seed: 0,
            random: 200,
            near_resonant: 20,
            kernel: 6,
            max_order: 6,
            c_tolerance: 1e-10,
            kernel_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub n: u32,
    pub m: Option<u32>,
    pub k: Option<u32>,
    /// rad/s.
    pub omega: f64,
    /// s.
    pub tau: f64,
    pub closed_form: [f64; 2],
    pub quadrature: [f64; 2],
    pub relative_error: f64,
    pub tolerance: f64,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.relative_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub plan: VerifyPlan,
    pub comparisons: Vec<Comparison>,
    pub max_c_error: f64,
    pub max_kernel_error: f64,
    pub passed: bool,
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    let scale = b.norm();
    if scale == 0.0 {
        a.norm()
    } else {
        (a - b).norm() / scale
    }
}

/// Compares the closed forms with this module's quadrature on seeded
/// random tuples. Gate times lie in 10–300 µs and frequencies in
/// 2π·(2.9–3.1) MHz.
pub fn verify_closed_forms(plan: &VerifyPlan) -> Result<VerifyReport> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;

    use super::closed_form::{c_integral, kernel_entry_unit};

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(plan.seed);
    let mut c_tuples = Vec::new();
    for _ in 0..plan.random {
        let tau: f64 = rng.random_range(10e-6..300e-6);
        let omega = two_pi * rng.random_range(2.9e6..3.1e6);
        let n = rng.random_range(1..=400u32);
        let k = rng.random_range(0..=plan.max_order);
        c_tuples.push((n, omega, tau, k));
    }
    for _ in 0..plan.near_resonant {
        let tau: f64 = rng.random_range(10e-6..300e-6);
        let n = (3.0e6 * tau).round().max(1.0) as u32;
        let offset = match rng.random_range(0..4) {
            0 => 0.0,
            e => rng.random_range(-1.0..1.0) * 10f64.powi(-4 * e),
        };
        let omega = two_pi * (f64::from(n) + offset) / tau;
        let k = rng.random_range(0..=plan.max_order);
        c_tuples.push((n, omega, tau, k));
    }
    let mut k_tuples = Vec::new();
    for idx in 0..plan.kernel {
        let tau = rng.random_range(10e-6..150e-6);
        let n = rng.random_range(1..=200u32);
        let m = if idx % 2 == 0 { n } else { rng.random_range(1..=200u32) };
        let omega = if idx % 3 == 0 {
            two_pi * (f64::from(m) + rng.random_range(-1e-3..1e-3)) / tau
        } else {
            two_pi * rng.random_range(0.2e6..3.1e6)
        };
        k_tuples.push((n, m, omega, tau));
    }
    let cfg = QuadConfig::default();
    let mut comparisons: Vec<Comparison> = c_tuples
        .par_iter()
        .map(|&(n, omega, tau, k)| -> Result<Comparison> {
            let closed = c_integral(n, omega, tau, k);
            let quad = c_integral_quadrature(n, omega, tau, k, &cfg)?;
            Ok(Comparison {
                quantity: "c_integral".into(),
                n,
                m: None,
                k: Some(k),
                omega,
                tau,
                closed_form: [closed.re, closed.im],
                quadrature: [quad.re, quad.im],
                relative_error: relative(closed, quad),
                tolerance: plan.c_tolerance,
            })
        })
        .collect::<Result<_>>()?;
    let kernels: Vec<Comparison> = k_tuples
        .par_iter()
        .map(|&(n, m, omega, tau)| -> Result<Comparison> {
            let closed = kernel_entry_unit(n, m, omega * tau) * tau * tau;
            let quad = kernel_entry_quadrature(n, m, omega, tau, &cfg)?;
            Ok(Comparison {
                quantity: "kernel_entry".into(),
                n,
                m: Some(m),
                k: None,
                omega,
                tau,
                closed_form: [closed, 0.0],
                quadrature: [quad, 0.0],
                relative_error: relative(closed.into(), quad.into()),
                tolerance: plan.kernel_tolerance,
            })
        })
        .collect::<Result<_>>()?;
    comparisons.extend(kernels);
    let max_of = |q: &str| {
        comparisons
            .iter()
            .filter(|c| c.quantity == q)
            .fold(0.0f64, |m, c| m.max(c.relative_error))
    };
    Ok(VerifyReport {
        plan: *plan,
        max_c_error: max_of("c_integral"),
        max_kernel_error: max_of("kernel_entry"),
        passed: comparisons.iter().all(Comparison::passed),
        comparisons,
    })
}
