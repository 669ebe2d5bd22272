// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Pulse-design protocols. All three end in the same step: restrict the
//! symmetrized kernel to a subspace and take its eigenvector of largest
//! eigenvalue magnitude.
//!
//! * exact: the numerical null space of the stabilized constraints `M`;
//! * F-matrix: the `L_cut` lowest eigenvectors of the infidelity matrix;
//! * ENS: eigenvectors of `Γ = MᵀM` below a relative threshold `Z`, or
//!   the `Z` found by bisection for a target infidelity.

mod subspace;

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::chain_model::{covering_basis_size, ModeData};
use crate::spectral_kernels::{
    c_derivatives_scaled, constraint_matrix, infidelity_matrix, kernel_matrix, InfidelityMatrix, InfidelitySpectrum,
};
use crate::{Error, Result};

pub use subspace::{
    gamma_eigenspace, power_optimize, GammaSpectrum, GammaSubspace, PowerOptimum, DEFAULT_NULL_TOL,
};

/// Smallest basis used when the size is chosen automatically.
pub const DEFAULT_BASIS_SIZE: usize = 300;
/// Tones added above the highest mode when the size is chosen automatically.
pub const COVERING_MARGIN: usize = 100;
/// Largest basis accepted; dense `N_A × N_A` work beyond this needs
/// several gigabytes.
pub const MAX_BASIS_SIZE: usize = 4096;
/// Basis growth factor used by the convergence check.
pub const CONVERGENCE_GROWTH: f64 = 1.5;
/// Relative shift in `Ω₀` above which the convergence check warns.
pub const CONVERGENCE_WARN: f64 = 5e-3;
/// Iteration cap for the target-infidelity bisection.
pub const ENS_BISECTION_STEPS: usize = 40;

/// Knob for the extended-null-space protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsKnob {
    /// Relative threshold `Z` on normalized `Γ` eigenvalues.
    Threshold(f64),
    /// Target infidelity; `Z` is found by bisection.
    TargetInfidelity(f64),
}

/// How many infidelity-matrix eigenvectors the F-matrix protocol keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FmatrixCut {
    /// Keep the `L_cut` lowest eigenvectors.
    Keep(usize),
    /// Discard the `L̄_cut` highest eigenvectors.
    Discard(usize),
}

impl FmatrixCut {
    /// `L_cut` for a basis of `basis_size` tones, if in range.
    pub fn kept(self, basis_size: usize) -> Option<usize> {
        let kept = match self {
            FmatrixCut::Keep(l) => l,
            FmatrixCut::Discard(l_bar) => basis_size.checked_sub(l_bar)?,
        };
        (1..=basis_size).contains(&kept).then_some(kept)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    Exact,
    Fmatrix { cut: FmatrixCut },
    Ens { knob: EnsKnob },
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Exact => "exact",
            Protocol::Fmatrix { .. } => "fmatrix",
            Protocol::Ens { .. } => "ens",
        }
    }
}

/// Everything needed to synthesize one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRequest {
    /// 0-based ion indices.
    pub ions: (usize, usize),
    /// Gate time, s.
    pub tau: f64,
    /// `N_A`; `None` picks [`SynthesisRequest::resolved_basis_size`].
    pub basis_size: Option<usize>,
    /// Stabilization order `K`.
    pub order: u32,
    pub protocol: Protocol,
    pub convergence_check: bool,
    /// Relative amplitude below which components are zeroed on export.
    pub amplitude_floor: Option<f64>,
    pub null_tol: f64,
}

impl SynthesisRequest {
    pub fn new(ions: (usize, usize), tau: f64, order: u32, protocol: Protocol) -> SynthesisRequest {
        SynthesisRequest {
            ions,
            tau,
            basis_size: None,
            order,
            protocol,
            convergence_check: false,
            amplitude_floor: None,
            null_tol: DEFAULT_NULL_TOL,
        }
    }

    pub fn with_basis_size(mut self, basis_size: usize) -> SynthesisRequest {
        self.basis_size = Some(basis_size);
        self
    }

    /// The requested basis size, or `max(300, N_cover + 100)` where
    /// `N_cover` is the smallest size whose top tone reaches the highest
    /// mode frequency.
    pub fn resolved_basis_size(&self, modes: &ModeData) -> usize {
        self.basis_size.unwrap_or_else(|| {
            let cover = if self.tau.is_finite() && self.tau > 0.0 {
                covering_basis_size(modes, self.tau, 0.0)
            } else {
                0
            };
            DEFAULT_BASIS_SIZE.max(cover + COVERING_MARGIN)
        })
    }

    pub fn validate(&self, modes: &ModeData) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidRequest(format!("gate time must be positive, got {}", self.tau)));
        }
        let basis_size = self.resolved_basis_size(modes);
        if basis_size == 0 {
            return Err(Error::InvalidRequest("basis size must be positive".into()));
        }
        if basis_size > MAX_BASIS_SIZE {
            return Err(Error::InvalidRequest(format!(
                "basis size {basis_size} exceeds the limit of {MAX_BASIS_SIZE}; shorten the gate or set a smaller basis"
            )));
        }
        let (i, j) = self.ions;
        if i == j {
            return Err(Error::InvalidPair(i + 1, j + 1, "ions must differ".into()));
        }
        for ion in [i, j] {
            if ion >= modes.ion_count() || !modes.qubit_window.contains_ion(ion) {
                return Err(Error::InvalidPair(i + 1, j + 1, format!("ion {} is not a qubit", ion + 1)));
            }
        }
        match self.protocol {
            Protocol::Exact => {}
            Protocol::Fmatrix { cut } => {
                if cut.kept(basis_size).is_none() {
                    return Err(Error::InvalidRequest(format!(
                        "{cut:?} leaves no admissible L_cut in [1, {basis_size}]"
                    )));
                }
            }
            Protocol::Ens { knob } => match knob {
                EnsKnob::Threshold(z) if !(z >= 0.0) => {
                    return Err(Error::InvalidRequest(format!("Z must be non-negative, got {z}")));
                }
                EnsKnob::TargetInfidelity(f) if !(f > 0.0 && f < 1.0) => {
                    return Err(Error::InvalidRequest(format!("target infidelity must lie in (0, 1), got {f}")));
                }
                _ => {}
            },
        }
        if let Some(floor) = self.amplitude_floor {
            if !(0.0..1.0).contains(&floor) {
                return Err(Error::InvalidRequest(format!("amplitude floor must lie in [0, 1), got {floor}")));
            }
        }
        if !(self.null_tol > 0.0 && self.null_tol < 1.0) {
            return Err(Error::InvalidRequest(format!("null tolerance must lie in (0, 1), got {}", self.null_tol)));
        }
        Ok(())
    }
}

/// Knob values actually used, echoed into the solution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Knobs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_cut: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_bar_cut: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_f: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub basis_size: usize,
    pub omega0: f64,
    pub relative_shift: f64,
}

/// A synthesized pulse `g(t) = Σ Â_n sin(2πnt/τ)`, repeated `repeats` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSolution {
    /// `Â_n`, rad/s.
    pub amplitudes: Vec<f64>,
    pub tau_s: f64,
    pub protocol: Protocol,
    #[serde(rename = "K")]
    pub order: u32,
    pub knobs: Knobs,
    /// Ω₀, rad/s.
    pub omega0: f64,
    pub lambda_max: f64,
    /// Accumulated gate angle χ over all repeats, rad.
    pub gate_angle: f64,
    /// `max_p |∂^k α_p/∂ω^k| / (η Ω₀ τ^{k+1})` for `k = 0..=K`.
    pub closure_residuals: Vec<f64>,
    /// `(4/5)ÂᵀFÂ` over the full repeated pulse.
    pub predicted_f: f64,
    /// F-matrix bound `(4/5)Ω₀²φ_{L_cut}`.
    pub f_max: Option<f64>,
    /// `½ΣÂ²`, rad²/s².
    pub mean_square_power: f64,
    pub subspace_dim: usize,
    pub chain_fingerprint: String,
    /// 0-based ion indices.
    pub ions: [usize; 2],
    pub basis_size: usize,
    pub repeats: u32,
    /// Set when a target infidelity could not be met and the exact
    /// solution was returned instead.
    pub fallback: bool,
    pub amplitude_floor: Option<f64>,
    pub convergence: Option<ConvergenceReport>,
    pub warnings: Vec<String>,
}

impl PulseSolution {
    pub fn amplitude_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.amplitudes)
    }

    pub fn duration(&self) -> f64 {
        self.tau_s * f64::from(self.repeats)
    }

    pub fn ion_pair(&self) -> (usize, usize) {
        (self.ions[0], self.ions[1])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PulseSolution> {
        let sol: PulseSolution = serde_json::from_str(text)?;
        if sol.amplitudes.is_empty() || !(sol.tau_s > 0.0) || sol.repeats == 0 {
            return Err(Error::InvalidRequest("malformed pulse solution".into()));
        }
        Ok(sol)
    }

    pub fn load(path: &Path) -> Result<PulseSolution> {
        PulseSolution::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Per-order closure residuals `max_p |Σ_n Â_n ∂^k C_np/∂ω^k| / (Ω₀τ^{k+1})`.
pub fn closure_residuals(modes: &ModeData, tau: f64, amplitudes: &[f64], order: u32, omega0: f64) -> Vec<f64> {
    let mut worst = vec![0.0f64; order as usize + 1];
    for &w in &modes.frequencies {
        let mut acc = vec![num_complex::Complex64::new(0.0, 0.0); order as usize + 1];
        for (idx, &a) in amplitudes.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let c = c_derivatives_scaled(idx as u32 + 1, w, tau, order);
            for (k, ck) in c.iter().enumerate() {
                acc[k] += ck * a;
            }
        }
        for k in 0..=order as usize {
            worst[k] = worst[k].max(acc[k].norm() / omega0);
        }
    }
    worst
}

/// Matrices shared by every protocol for one (modes, ions, τ, N_A).
struct Problem<'a> {
    modes: &'a ModeData,
    req: &'a SynthesisRequest,
    basis_size: usize,
    kernel: nalgebra::DMatrix<f64>,
    infidelity: InfidelityMatrix,
}

impl<'a> Problem<'a> {
    fn build(modes: &'a ModeData, req: &'a SynthesisRequest) -> Result<Problem<'a>> {
        let (i, j) = req.ions;
        let basis_size = req.resolved_basis_size(modes);
        let kernel = kernel_matrix(modes, i, j, req.tau, basis_size)?.symmetric();
        let infidelity = infidelity_matrix(modes, i, j, req.tau, basis_size)?;
        Ok(Problem {
            modes,
            req,
            basis_size,
            kernel,
            infidelity,
        })
    }

    fn predicted_f(&self, amplitudes: &[f64]) -> f64 {
        self.infidelity.infidelity(&DVector::from_column_slice(amplitudes))
    }

    fn finish(&self, opt: PowerOptimum, subspace_dim: usize, knobs: Knobs) -> PulseSolution {
        let a = DVector::from_column_slice(&opt.amplitudes);
        let gate_angle = a.dot(&(&self.kernel * &a));
        PulseSolution {
            closure_residuals: closure_residuals(self.modes, self.req.tau, &opt.amplitudes, self.req.order, opt.omega0),
            predicted_f: self.predicted_f(&opt.amplitudes),
            mean_square_power: 0.5 * a.norm_squared(),
            amplitudes: opt.amplitudes,
            tau_s: self.req.tau,
            protocol: self.req.protocol,
            order: self.req.order,
            knobs,
            omega0: opt.omega0,
            lambda_max: opt.lambda_max,
            gate_angle,
            f_max: None,
            subspace_dim,
            chain_fingerprint: self.modes.fingerprint(),
            ions: [self.req.ions.0, self.req.ions.1],
            basis_size: self.basis_size,
            repeats: 1,
            fallback: false,
            amplitude_floor: None,
            convergence: None,
            warnings: Vec::new(),
        }
    }
}

/// Runs the requested protocol.
pub fn synthesize(modes: &ModeData, req: &SynthesisRequest) -> Result<PulseSolution> {
    req.validate(modes)?;
    let problem = Problem::build(modes, req)?;
    let mut sol = match req.protocol {
        Protocol::Exact => exact(&problem)?,
        Protocol::Fmatrix { cut } => fmatrix(&problem, cut.kept(problem.basis_size).expect("validated cut"))?,
        Protocol::Ens { knob: EnsKnob::Threshold(z) } => ens_threshold(&problem, z)?,
        Protocol::Ens {
            knob: EnsKnob::TargetInfidelity(target),
        } => ens_target(&problem, target)?,
    };
    if let Some(floor) = req.amplitude_floor {
        apply_amplitude_floor(&problem, &mut sol, floor);
    }
    if req.convergence_check {
        let mut bigger = req.clone();
        let bigger_size = (problem.basis_size as f64 * CONVERGENCE_GROWTH).ceil() as usize;
        bigger.basis_size = Some(bigger_size);
        bigger.convergence_check = false;
        bigger.amplitude_floor = None;
        if let Protocol::Fmatrix { cut } = req.protocol {
            // Keep the number of discarded directions fixed.
            let kept = cut.kept(problem.basis_size).expect("validated cut");
            bigger.protocol = Protocol::Fmatrix {
                cut: FmatrixCut::Discard(problem.basis_size - kept),
            };
        }
        let other = synthesize(modes, &bigger)?;
        let shift = (other.omega0 / sol.omega0 - 1.0).abs();
        if shift > CONVERGENCE_WARN {
            sol.warnings.push(format!(
                "omega0 shifts by {:.3}% when the basis grows to {}; increase the basis size",
                shift * 100.0,
                bigger_size
            ));
        }
        sol.convergence = Some(ConvergenceReport {
            basis_size: bigger_size,
            omega0: other.omega0,
            relative_shift: shift,
        });
    }
    Ok(sol)
}

pub fn exact_amfm(modes: &ModeData, req: &SynthesisRequest) -> Result<PulseSolution> {
    check_protocol(req, "exact")?;
    synthesize(modes, req)
}

pub fn fmatrix_amfm(modes: &ModeData, req: &SynthesisRequest) -> Result<PulseSolution> {
    check_protocol(req, "fmatrix")?;
    synthesize(modes, req)
}

pub fn ens_amfm(modes: &ModeData, req: &SynthesisRequest) -> Result<PulseSolution> {
    check_protocol(req, "ens")?;
    synthesize(modes, req)
}

fn check_protocol(req: &SynthesisRequest, expected: &str) -> Result<()> {
    if req.protocol.name() == expected {
        Ok(())
    } else {
        Err(Error::InvalidRequest(format!(
            "expected a {expected} request, got {}",
            req.protocol.name()
        )))
    }
}

fn exact(problem: &Problem) -> Result<PulseSolution> {
    let m = constraint_matrix(problem.modes, problem.req.tau, problem.req.order, problem.basis_size)?;
    let sub = GammaSpectrum::new(&m).subspace(0.0, problem.req.null_tol)?;
    let opt = power_optimize(&sub.basis, &problem.kernel)?;
    Ok(problem.finish(opt, sub.dim(), Knobs::default()))
}

/// Infidelity eigenvectors and the kernel expressed in them.
struct FmatrixBasis {
    spectrum: InfidelitySpectrum,
    rotated_kernel: nalgebra::DMatrix<f64>,
}

impl FmatrixBasis {
    fn new(problem: &Problem) -> FmatrixBasis {
        let spectrum = problem.infidelity.spectrum();
        let v = &spectrum.vectors;
        let rotated_kernel = crate::linalg::symmetrize(&v.tr_mul(&(&problem.kernel * v)));
        FmatrixBasis {
            spectrum,
            rotated_kernel,
        }
    }
}

fn fmatrix(problem: &Problem, l_cut: usize) -> Result<PulseSolution> {
    fmatrix_in(problem, &FmatrixBasis::new(problem), l_cut)
}

fn fmatrix_in(problem: &Problem, fb: &FmatrixBasis, l_cut: usize) -> Result<PulseSolution> {
    let block = fb.rotated_kernel.view((0, 0), (l_cut, l_cut)).into_owned();
    let mut opt = power_optimize(&nalgebra::DMatrix::identity(l_cut, l_cut), &block)?;
    let coefficients = DVector::from_column_slice(&opt.coefficients);
    let amplitudes = fb.spectrum.vectors.columns(0, l_cut) * coefficients * opt.omega0;
    opt.amplitudes = amplitudes.iter().copied().collect();
    let f_max = 0.8 * opt.omega0 * opt.omega0 * fb.spectrum.values[l_cut - 1];
    let n = problem.basis_size;
    let mut sol = problem.finish(
        opt,
        l_cut,
        Knobs {
            l_cut: Some(l_cut),
            l_bar_cut: Some(n - l_cut),
            ..Knobs::default()
        },
    );
    sol.f_max = Some(f_max);
    Ok(sol)
}

/// F-matrix solutions for each of `cuts`, sharing one decomposition of the
/// infidelity matrix. `template` supplies everything but the cut; the
/// convergence check is not available here.
pub fn fmatrix_sweep(modes: &ModeData, template: &SynthesisRequest, cuts: &[FmatrixCut]) -> Result<Vec<PulseSolution>> {
    if template.convergence_check {
        return Err(Error::InvalidRequest("the convergence check is not available in an F-matrix sweep".into()));
    }
    let mut req = template.clone();
    let basis_size = req.resolved_basis_size(modes);
    for &cut in cuts {
        req.protocol = Protocol::Fmatrix { cut };
        req.validate(modes)?;
    }
    req.protocol = Protocol::Fmatrix {
        cut: FmatrixCut::Keep(basis_size),
    };
    req.validate(modes)?;
    let problem = Problem::build(modes, &req)?;
    let fb = FmatrixBasis::new(&problem);
    cuts.iter()
        .map(|cut| {
            let mut sol = fmatrix_in(&problem, &fb, cut.kept(basis_size).expect("validated cut"))?;
            sol.protocol = Protocol::Fmatrix { cut: *cut };
            if let Some(floor) = req.amplitude_floor {
                apply_amplitude_floor(&problem, &mut sol, floor);
            }
            Ok(sol)
        })
        .collect()
}

fn ens_threshold(problem: &Problem, z: f64) -> Result<PulseSolution> {
    let m = constraint_matrix(problem.modes, problem.req.tau, problem.req.order, problem.basis_size)?;
    let sub = GammaSpectrum::new(&m).subspace(z, problem.req.null_tol)?;
    let opt = power_optimize(&sub.basis, &problem.kernel)?;
    Ok(problem.finish(
        opt,
        sub.dim(),
        Knobs {
            z: Some(z),
            ..Knobs::default()
        },
    ))
}

/// Bisection on `log₁₀ Z` between the null tolerance and 1, keeping the
/// largest `Z` whose solution meets the target. Stops early once the
/// infidelity falls in `[target/10, target]`.
fn ens_target(problem: &Problem, target: f64) -> Result<PulseSolution> {
    let req = problem.req;
    let m = constraint_matrix(problem.modes, req.tau, req.order, problem.basis_size)?;
    let spectrum = GammaSpectrum::new(&m);
    let mut memo: std::collections::BTreeMap<usize, (PowerOptimum, f64)> = Default::default();
    let mut eval = |log_z: f64| -> Result<(usize, PowerOptimum, f64)> {
        let z = 10f64.powf(log_z);
        let dim = spectrum.dim_at(z, req.null_tol);
        if let Some((opt, f)) = memo.get(&dim) {
            return Ok((dim, opt.clone(), *f));
        }
        let sub = spectrum.subspace(z, req.null_tol)?;
        let opt = power_optimize(&sub.basis, &problem.kernel)?;
        let f = problem.predicted_f(&opt.amplitudes);
        memo.insert(dim, (opt.clone(), f));
        Ok((dim, opt, f))
    };
    let knobs = |log_z: f64| Knobs {
        z: Some(10f64.powf(log_z)),
        target_f: Some(target),
        ..Knobs::default()
    };

    let mut lo = req.null_tol.log10();
    let mut hi = 0.0;
    let (dim_lo, opt_lo, f_lo) = eval(lo)?;
    if f_lo > target {
        let mut sol = problem.finish(opt_lo, dim_lo, knobs(lo));
        sol.fallback = true;
        sol.warnings.push(format!(
            "target infidelity {target:e} unreachable; returning the exact solution (f = {f_lo:e})"
        ));
        return Ok(sol);
    }
    let (dim_hi, opt_hi, f_hi) = eval(hi)?;
    if f_hi <= target {
        return Ok(problem.finish(opt_hi, dim_hi, knobs(hi)));
    }
    let mut best = (lo, dim_lo, opt_lo, f_lo);
    if f_lo < target / 10.0 {
        for _ in 0..ENS_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let (dim, opt, f) = eval(mid)?;
            if f <= target {
                lo = mid;
                best = (mid, dim, opt, f);
                if f >= target / 10.0 {
                    break;
                }
            } else {
                hi = mid;
            }
        }
    }
    let (log_z, dim, opt, f) = best;
    let mut sol = problem.finish(opt, dim, knobs(log_z));
    if f < target / 10.0 {
        sol.warnings.push(format!(
            "no threshold gives an infidelity within [{:e}, {target:e}]; best admissible f = {f:e}",
            target / 10.0
        ));
    }
    Ok(sol)
}

fn apply_amplitude_floor(problem: &Problem, sol: &mut PulseSolution, floor: f64) {
    let max = sol.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let cut = floor * max;
    let mut zeroed = 0;
    for a in &mut sol.amplitudes {
        if a.abs() < cut {
            *a = 0.0;
            zeroed += 1;
        }
    }
    let a = sol.amplitude_vector();
    sol.gate_angle = a.dot(&(&problem.kernel * &a));
    sol.predicted_f = problem.predicted_f(&sol.amplitudes);
    sol.mean_square_power = 0.5 * a.norm_squared();
    sol.closure_residuals = closure_residuals(problem.modes, sol.tau_s, &sol.amplitudes, sol.order, sol.omega0);
    sol.amplitude_floor = Some(floor);
    sol.warnings.push(format!(
        "{zeroed} amplitudes below {floor:e} of the maximum were zeroed; gate angle now {:.12}",
        sol.gate_angle
    ));
}

/// Splits the pulse into `repeats` back-to-back copies at `1/√R` amplitude,
/// re-evaluating the accumulated gate angle and infidelity.
pub fn repeat_pulse(sol: &PulseSolution, modes: &ModeData, repeats: u32) -> Result<PulseSolution> {
    if repeats == 0 {
        return Err(Error::InvalidRequest("repeat count must be at least 1".into()));
    }
    if repeats == 1 {
        return Ok(sol.clone());
    }
    let total = sol.repeats.checked_mul(repeats).ok_or_else(|| Error::InvalidRequest("repeat count overflows".into()))?;
    let scale = (f64::from(sol.repeats) / f64::from(total)).sqrt();
    let mut out = sol.clone();
    for a in &mut out.amplitudes {
        *a *= scale;
    }
    out.omega0 *= scale;
    out.repeats = total;
    out.mean_square_power = 0.5 * out.amplitudes.iter().map(|a| a * a).sum::<f64>();
    let (i, j) = out.ion_pair();
    out.gate_angle = analysis::gate_angle(&out, modes, i, j)?;
    out.predicted_f = analysis::residual_infidelity(&out, modes, i, j, 0.0)?;
    Ok(out)
}
