// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Sweep drivers: power against gate time and infidelity against drift.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_solution, gate_angle_drifted, power_metrics, residual_infidelity};
use crate::chain_model::ModeData;
use crate::report::{Column, Row, SweepReport};
use crate::synthesis::{synthesize, PulseSolution, SynthesisRequest};
use crate::{Error, Result};

pub const DEFAULT_DRIFT_POINTS: usize = 81;
/// Half-width of the default drift grid, rad/s.
pub const DEFAULT_DRIFT_RANGE: f64 = 2.0 * PI * 10e3;
pub const DEFAULT_DRIFT_THRESHOLD: f64 = 1e-3;

/// Runs `op` on a pool of `jobs` threads, or on the global pool.
fn in_pool<T: Send>(jobs: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(op()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidRequest(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(op))
        }
    }
}

/// Synthesizes `template` at every gate time in `taus` and tabulates the
/// power. Rows keep the order of `taus`; a failed synthesis leaves an
/// error row and the sweep continues.
pub fn sweep_power_vs_tau(
    modes: &ModeData,
    template: &SynthesisRequest,
    taus: &[f64],
    jobs: Option<usize>,
) -> Result<SweepReport> {
    let columns = vec![
        Column::new("tau", "s"),
        Column::new("mean_square_power", "rad^2/s^2"),
        Column::new("rms_power", "rad/s"),
        Column::new("peak", "rad/s"),
        Column::new("omega0", "rad/s"),
        Column::new("predicted_f", ""),
        Column::new("subspace_dim", ""),
        Column::new("basis_size", ""),
    ];
    let rows: Vec<Row> = in_pool(jobs, || {
        taus.par_iter()
            .map(|&tau| {
                let mut req = template.clone();
                req.tau = tau;
                match synthesize(modes, &req) {
                    Ok(sol) => {
                        let m = power_metrics(&sol);
                        Row {
                            values: vec![
                                Some(tau),
                                Some(m.mean_square),
                                Some(m.rms),
                                Some(m.peak),
                                Some(sol.omega0),
                                Some(sol.predicted_f),
                                Some(sol.subspace_dim as f64),
                                Some(sol.basis_size as f64),
                            ],
                            error: None,
                        }
                    }
                    Err(e) => {
                        let mut values = vec![None; 8];
                        values[0] = Some(tau);
                        Row {
                            values,
                            error: Some(format!("{}: {e}", e.kind())),
                        }
                    }
                }
            })
            .collect()
    })?;
    let mut report = SweepReport::new("power_vs_tau", columns, modes.fingerprint())
        .with_request("protocol", template.protocol)?
        .with_request("K", template.order)?
        .with_request("ions", [template.ions.0 + 1, template.ions.1 + 1])?
        .with_request("basis_size", template.basis_size)?
        .with_request("null_tol", template.null_tol)?;
    report.rows = rows;
    Ok(report)
}

/// Residual infidelity against a uniform drift of all mode frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCurve {
    /// Δω, rad/s.
    pub offsets: Vec<f64>,
    pub infidelity: Vec<f64>,
    /// `|χ(Δω) − χ(0)|`, rad. Diagnostic only; not part of `infidelity`.
    pub gate_angle_shift: Vec<f64>,
    pub chain_fingerprint: String,
    pub threshold: f64,
    /// rad/s.
    pub robust_width: f64,
}

impl DriftCurve {
    pub fn to_report(&self, sol: &PulseSolution) -> Result<SweepReport> {
        let mut report = SweepReport::new(
            "drift",
            vec![
                Column::new("drift", "rad/s"),
                Column::new("infidelity", ""),
                Column::new("gate_angle_shift", "rad"),
            ],
            self.chain_fingerprint.clone(),
        )
        .with_request("protocol", sol.protocol)?
        .with_request("knobs", sol.knobs)?
        .with_request("K", sol.order)?
        .with_request("tau_s", sol.tau_s)?
        .with_request("ions", [sol.ions[0] + 1, sol.ions[1] + 1])?
        .with_request("threshold", self.threshold)?
        .with_request("robust_width_rad_s", self.robust_width)?;
        report.rows = (0..self.offsets.len())
            .map(|k| Row {
                values: vec![
                    Some(self.offsets[k]),
                    Some(self.infidelity[k]),
                    Some(self.gate_angle_shift[k]),
                ],
                error: None,
            })
            .collect();
        Ok(report)
    }
}

/// Evaluates the drift curve on `points` equally spaced offsets over
/// `[−range, range]`.
pub fn sweep_drift(
    sol: &PulseSolution,
    modes: &ModeData,
    range: f64,
    points: usize,
    threshold: f64,
) -> Result<DriftCurve> {
    check_solution(sol, modes)?;
    if points == 0 || !(range >= 0.0) || (points == 1 && range != 0.0) {
        return Err(Error::InvalidRequest(format!(
            "drift grid needs points ≥ 1 and range ≥ 0 (a single point needs range 0), got {points} over ±{range}"
        )));
    }
    let offsets: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points)
            .map(|k| range * (2.0 * k as f64 - (points - 1) as f64) / (points - 1) as f64)
            .collect()
    };
    let (i, j) = sol.ion_pair();
    let chi0 = gate_angle_drifted(sol, modes, i, j, 0.0)?;
    let values: Vec<(f64, f64)> = offsets
        .par_iter()
        .map(|&d| -> Result<(f64, f64)> {
            let f = residual_infidelity(sol, modes, i, j, d)?;
            let chi = gate_angle_drifted(sol, modes, i, j, d)?;
            Ok((f, (chi - chi0).abs()))
        })
        .collect::<Result<_>>()?;
    let infidelity: Vec<f64> = values.iter().map(|v| v.0).collect();
    let robust_width = robust_width(&offsets, &infidelity, threshold);
    Ok(DriftCurve {
        offsets,
        gate_angle_shift: values.iter().map(|v| v.1).collect(),
        infidelity,
        chain_fingerprint: sol.chain_fingerprint.clone(),
        threshold,
        robust_width,
    })
}

/// Width of the contiguous region around the offset nearest zero where
/// `f ≤ threshold`. Crossings are interpolated linearly in `log f`; a
/// region reaching the grid edge ends there.
pub fn robust_width(offsets: &[f64], infidelity: &[f64], threshold: f64) -> f64 {
    if offsets.is_empty() {
        return 0.0;
    }
    let center = (0..offsets.len())
        .min_by(|&a, &b| offsets[a].abs().total_cmp(&offsets[b].abs()))
        .unwrap_or(0);
    if infidelity[center] > threshold {
        return 0.0;
    }
    let crossing = |inside: usize, outside: usize| -> f64 {
        let (fi, fo) = (infidelity[inside].max(1e-300), infidelity[outside]);
        let s = ((threshold.ln() - fi.ln()) / (fo.ln() - fi.ln())).clamp(0.0, 1.0);
        offsets[inside] + s * (offsets[outside] - offsets[inside])
    };
    let mut right = center;
    while right + 1 < offsets.len() && infidelity[right + 1] <= threshold {
        right += 1;
    }
    let hi = if right + 1 < offsets.len() { crossing(right, right + 1) } else { offsets[right] };
    let mut left = center;
    while left > 0 && infidelity[left - 1] <= threshold {
        left -= 1;
    }
    let lo = if left > 0 { crossing(left, left - 1) } else { offsets[left] };
    hi - lo
}

/// Local scaling exponents `log₂(f̄(2h)/f̄(h))` of the drift response,
/// where `f̄(h) = f(h) + f(−h) − 2f(0)`, for each step in `steps`.
///
/// When the first `2K+1` derivatives of `f` vanish at zero drift, the
/// exponent tends to `2K+2` as `h → 0`.
pub fn stationarity_exponents(sol: &PulseSolution, modes: &ModeData, steps: &[f64]) -> Result<Vec<f64>> {
    check_solution(sol, modes)?;
    let (i, j) = sol.ion_pair();
    let f0 = residual_infidelity(sol, modes, i, j, 0.0)?;
    let fbar = |h: f64| -> Result<f64> {
        Ok(residual_infidelity(sol, modes, i, j, h)? + residual_infidelity(sol, modes, i, j, -h)? - 2.0 * f0)
    };
    steps
        .iter()
        .map(|&h| Ok((fbar(2.0 * h)? / fbar(h)?).log2()))
        .collect()
}
