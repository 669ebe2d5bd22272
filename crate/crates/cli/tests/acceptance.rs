// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks. Prints one PASS/FAIL line per criterion and fails
//! when any criterion outside `KNOWN_RED` fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use amfm_core::analysis::{
    fit_sideband, gate_angle, infidelity_roundoff_floor, residual_infidelity, simulate_scan, stationarity_exponents,
    sweep_drift, NoiseModel, DEFAULT_DRIFT_POINTS, DEFAULT_DRIFT_RANGE,
};
use amfm_core::chain_model::{preset, ModeData};
use amfm_core::spectral_kernels::quadrature::{verify_closed_forms, VerifyPlan};
use amfm_core::spectral_kernels::{constraint_matrix, kernel_matrix};
use amfm_core::synthesis::{
    fmatrix_sweep, gamma_eigenspace, power_optimize, synthesize, EnsKnob, FmatrixCut, Protocol, PulseSolution,
    SynthesisRequest, DEFAULT_NULL_TOL,
};
use nalgebra::{DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const CHI: f64 = PI / 8.0;
const KNOWN_RED: &[u32] = &[4];
/// chain15 qubits 1 and 11.
const FAR_PAIR: (usize, usize) = (2, 12);
/// umd7 qubits 4 and 5.
const UMD_PAIR: (usize, usize) = (4, 5);

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn umd7() -> ModeData {
    preset("umd7").unwrap().modes
}

fn chain15() -> ModeData {
    preset("chain15").unwrap().modes
}

fn power_of(modes: &ModeData, req: SynthesisRequest) -> PulseSolution {
    synthesize(modes, &req).unwrap()
}

fn ens_target(ions: (usize, usize), tau: f64, order: u32, f: f64) -> SynthesisRequest {
    SynthesisRequest::new(ions, tau, order, Protocol::Ens { knob: EnsKnob::TargetInfidelity(f) })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = verify_closed_forms(&VerifyPlan::default()).unwrap();
    let elapsed = start.elapsed();
    let c_count = report.comparisons.iter().filter(|c| c.quantity == "c_integral").count();
    let k_count = report.comparisons.len() - c_count;
    let pass = report.passed
        && report.max_c_error <= 1e-10
        && report.max_kernel_error <= 1e-8
        && c_count >= 220
        && elapsed < Duration::from_secs(60);
    Outcome {
        id: 1,
        pass,
        detail: format!(
            "{c_count} c_integral tuples, max rel err {:.1e} (tol 1e-10); {k_count} kernel entries, max rel err {:.1e} (tol 1e-8); {:.1} s (limit 60 s)",
            report.max_c_error,
            report.max_kernel_error,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_2() -> Outcome {
    let modes = umd7();
    let mut pass = true;
    let mut parts = Vec::new();
    for order in [0, 2, 4] {
        let start = Instant::now();
        let sol = power_of(&modes, SynthesisRequest::new(UMD_PAIR, 120e-6, order, Protocol::Exact));
        let elapsed = start.elapsed();
        let worst = sol.closure_residuals.iter().fold(0.0f64, |a, &b| a.max(b));
        let chi = gate_angle(&sol, &modes, UMD_PAIR.0, UMD_PAIR.1).unwrap();
        let chi_err = (chi.abs() - CHI).abs().max((sol.gate_angle.abs() - CHI).abs());
        pass &= worst <= 1e-9 && chi_err <= 1e-10 && elapsed < Duration::from_secs(10);
        parts.push(format!(
            "K={order}: max residual/(Ω₀τ^(k+1)) {worst:.1e}, |χ|-π/8 {chi_err:.1e}, {:.2} s",
            elapsed.as_secs_f64()
        ));
    }
    Outcome {
        id: 2,
        pass,
        detail: parts.join("; ") + " (tol 1e-9, 1e-10)",
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let modes = umd7();
    let (tau, na) = (120e-6, 40);
    let m = constraint_matrix(&modes, tau, 0, na).unwrap();
    let null = gamma_eigenspace(&m, 0.0, DEFAULT_NULL_TOL).unwrap();
    let basis = null.basis.columns(0, 5).into_owned();
    let kernel = kernel_matrix(&modes, UMD_PAIR.0, UMD_PAIR.1, tau, na).unwrap().symmetric();
    let opt = power_optimize(&basis, &kernel).unwrap();
    let s = basis.transpose() * &kernel * &basis;
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s.clone());
    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut best = 0.0f64;
    for _ in 0..100_000 {
        let mut u = DVector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
        u /= u.norm();
        best = best.max(u.dot(&(&s * &u)).abs());
    }
    let bound = opt.lambda_max.abs();
    let pass = best <= bound * (1.0 + 1e-9)
        && (largest / bound - 1.0).abs() <= 1e-12
        && start.elapsed() < Duration::from_secs(60);
    Outcome {
        id: 3,
        pass,
        detail: format!(
            "N_A=40, 5-D subspace, 1e5 directions: max |uᵀ𝒦u|/|λ_max| = {:.12} (limit 1 + 1e-9); |λ_max| matches dense eigensolver to {:.1e}; {:.1} s",
            best / bound,
            (largest / bound - 1.0).abs(),
            start.elapsed().as_secs_f64()
        ),
    }
}

fn criterion_4() -> Outcome {
    let modes = chain15();
    let template = SynthesisRequest::new(FAR_PAIR, 150e-6, 0, Protocol::Exact);
    let na = template.resolved_basis_size(&modes);
    let cuts: Vec<FmatrixCut> = (1..=na).map(FmatrixCut::Keep).collect();
    let sols = fmatrix_sweep(&modes, &template, &cuts).unwrap();
    let mut bound_violations = 0;
    // Indexed by L̄_cut = N_A − L_cut.
    let mut curve = vec![(0.0, 0.0); na];
    for sol in &sols {
        let f = residual_infidelity(sol, &modes, FAR_PAIR.0, FAR_PAIR.1, 0.0).unwrap();
        let floor = 100.0 * infidelity_roundoff_floor(sol, &modes, FAR_PAIR.0, FAR_PAIR.1);
        if f > sol.f_max.unwrap() + floor {
            bound_violations += 1;
        }
        curve[sol.knobs.l_bar_cut.unwrap()] = (f, floor);
    }
    let rises: Vec<usize> = (1..na).filter(|&l| curve[l].0 > curve[l - 1].0 + curve[l].1.max(curve[l - 1].1)).collect();
    let reached = (0..na).find(|&l| curve[l].0 <= 1e-4);
    let reached_ok = (6..=15).any(|l| curve[l].0 <= 1e-4);
    let pass = bound_violations == 0 && rises.is_empty() && reached_ok;
    Outcome {
        id: 4,
        pass,
        detail: format!(
            "N_A={na}, all {na} L_cut: bound f ≤ (4/5)Ω₀²φ violated {bound_violations} times; f non-increasing in L̄_cut: {} (rises at L̄_cut {:?}); f ≤ 1e-4 first at L̄_cut {:?} (need one in [6,15]: {})",
            if rises.is_empty() { "yes" } else { "NO" },
            rises,
            reached,
            if reached_ok { "yes" } else { "NO" }
        ),
    }
}

fn criterion_5() -> Outcome {
    let modes = chain15();
    let start = Instant::now();
    let exact = power_of(&modes, SynthesisRequest::new(FAR_PAIR, 250e-6, 6, Protocol::Exact));
    let ens = power_of(&modes, ens_target(FAR_PAIR, 250e-6, 6, 1e-4));
    let elapsed = start.elapsed();
    let ratio = exact.mean_square_power / ens.mean_square_power;
    let pass = ratio >= 5.0 && ens.predicted_f <= 1e-4 && elapsed < Duration::from_secs(600);
    Outcome {
        id: 5,
        pass,
        detail: format!(
            "N_A={}: exact {:.3e} vs ENS {:.3e} rad²/s² (f={:.1e}), ratio {ratio:.2} (need ≥ 5); {:.1} s (limit 600 s)",
            exact.basis_size,
            exact.mean_square_power,
            ens.mean_square_power,
            ens.predicted_f,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_6() -> Outcome {
    let modes = chain15();
    let template = SynthesisRequest::new(FAR_PAIR, 40e-6, 0, Protocol::Exact);
    let na = template.resolved_basis_size(&modes);
    let cuts: Vec<FmatrixCut> = (0..na).map(FmatrixCut::Discard).collect();
    let sols = fmatrix_sweep(&modes, &template, &cuts).unwrap();
    let fm = sols.iter().find(|s| s.predicted_f <= 1e-4).unwrap();
    let ens = power_of(&modes, ens_target(FAR_PAIR, 40e-6, 0, 1e-4));
    let (a, b) = (fm.mean_square_power, ens.mean_square_power);
    let ratio = a.max(b) / a.min(b);
    Outcome {
        id: 6,
        pass: ratio <= 2.0 && ens.predicted_f <= 1e-4,
        detail: format!(
            "F-matrix L̄_cut={} f={:.1e} power {a:.3e}; ENS f={:.1e} power {b:.3e}; ratio {ratio:.3} (need ≤ 2)",
            fm.knobs.l_bar_cut.unwrap(),
            fm.predicted_f,
            ens.predicted_f
        ),
    }
}

fn criterion_7() -> Outcome {
    let modes = chain15();
    let taus = [30.0, 60.0, 100.0, 150.0, 200.0];
    let powers: Vec<f64> = taus
        .iter()
        .map(|t| power_of(&modes, SynthesisRequest::new(FAR_PAIR, t * 1e-6, 0, Protocol::Exact)).mean_square_power)
        .collect();
    let decreasing = powers.windows(2).all(|w| w[1] < w[0]);
    let ratio = powers[0] / powers[4];
    Outcome {
        id: 7,
        pass: decreasing && ratio > 10.0,
        detail: format!(
            "powers at τ = {taus:?} μs: {}; strictly decreasing: {decreasing}; P(30)/P(200) = {ratio:.2e} (need > 10)",
            powers.iter().map(|p| format!("{p:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// Exponent at the smallest probe step whose `f̄` clears 1e4× the roundoff floor.
fn probe_exponent(modes: &ModeData, sol: &PulseSolution) -> Option<(f64, f64)> {
    let (i, j) = sol.ion_pair();
    let floor = infidelity_roundoff_floor(sol, modes, i, j);
    let f0 = residual_infidelity(sol, modes, i, j, 0.0).unwrap();
    for hz in [30.0, 100.0, 300.0, 1e3, 2e3, 3e3, 5e3, 1e4] {
        let h = 2.0 * PI * hz;
        let fbar = residual_infidelity(sol, modes, i, j, h).unwrap() + residual_infidelity(sol, modes, i, j, -h).unwrap()
            - 2.0 * f0;
        if fbar > 1e4 * floor {
            return Some((hz, stationarity_exponents(sol, modes, &[h]).unwrap()[0]));
        }
    }
    None
}

fn criterion_8() -> Outcome {
    let modes = umd7();
    let mut widths = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for order in [1, 5] {
        let ens = power_of(&modes, ens_target(UMD_PAIR, 120e-6, order, 1e-4));
        let curve = sweep_drift(&ens, &modes, DEFAULT_DRIFT_RANGE, DEFAULT_DRIFT_POINTS, 1e-3).unwrap();
        widths.push(curve.robust_width);
        let exact = power_of(&modes, SynthesisRequest::new(UMD_PAIR, 120e-6, order, Protocol::Exact));
        let need = 2.0 * f64::from(order) + 1.5;
        match probe_exponent(&modes, &exact) {
            Some((hz, e)) => {
                pass &= e >= need;
                parts.push(format!("K={order}: exponent {e:.2} at {hz} Hz (need ≥ {need})"));
            }
            None => {
                pass = false;
                parts.push(format!("K={order}: no probe step above the roundoff floor"));
            }
        }
    }
    pass &= widths[1] > widths[0];
    Outcome {
        id: 8,
        pass,
        detail: format!(
            "robust width (f ≤ 1e-3) K=1 {:.0} Hz, K=5 {:.0} Hz; stationarity {}",
            widths[0] / (2.0 * PI),
            widths[1] / (2.0 * PI),
            parts.join(", ")
        ),
    }
}

fn criterion_9() -> Outcome {
    let modes = chain15();
    let taus = [10.0, 20.0, 30.0, 40.0];
    let f: Vec<f64> = taus
        .iter()
        .map(|t| {
            let req = SynthesisRequest::new(FAR_PAIR, t * 1e-6, 0, Protocol::Fmatrix { cut: FmatrixCut::Discard(12) });
            let sol = power_of(&modes, req);
            residual_infidelity(&sol, &modes, FAR_PAIR.0, FAR_PAIR.1, 2.0 * PI * 5e3).unwrap()
        })
        .collect();
    let ordered = f.windows(2).all(|w| w[0] < w[1]);
    let ratio = f[3] / f[0];
    Outcome {
        id: 9,
        pass: ordered && ratio >= 1e3,
        detail: format!(
            "f(Δω=2π·5 kHz) at τ = {taus:?} μs: {}; shorter gates more robust: {ordered}; f(40)/f(10) = {ratio:.1e} (need ≥ 1e3)",
            f.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn criterion_10() -> Outcome {
    let modes = chain15();
    let mut ratios = Vec::new();
    for d in 1..=10usize {
        let i = 7 - d / 2;
        let ions = (i, i + d);
        let exact = power_of(&modes, SynthesisRequest::new(ions, 50e-6, 0, Protocol::Exact));
        let fm = power_of(
            &modes,
            SynthesisRequest::new(ions, 50e-6, 0, Protocol::Fmatrix { cut: FmatrixCut::Discard(12) }),
        );
        ratios.push(exact.mean_square_power / fm.mean_square_power);
    }
    let pass = ratios.iter().all(|r| (1.5..=6.0).contains(r));
    Outcome {
        id: 10,
        pass,
        detail: format!(
            "exact/F-matrix power for distances 1..10: {} (need all in [1.5, 6])",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn scan_grid(centre: f64) -> Vec<f64> {
    (0..81).map(|k| centre + 2.0 * PI * 30e3 * (k as f64 / 40.0 - 1.0)).collect()
}

fn criterion_11() -> Outcome {
    let modes = umd7();
    let rabi = 2.0 * PI * 10e3;
    let t = PI / (2.0 * rabi);
    let mut worst = 0.0f64;
    for &w in &modes.frequencies {
        let truth = w + 2.0 * PI * 2e3;
        let scan = simulate_scan(truth, rabi, t, &scan_grid(w), NoiseModel::NONE, 0).unwrap();
        let fit = fit_sideband(&scan).unwrap();
        worst = worst.max((fit.mode_frequency / truth - 1.0).abs()).max((fit.rabi / rabi - 1.0).abs());
    }
    let noise = NoiseModel {
        gaussian_sigma: 0.01,
        shots: Some(4000),
    };
    let w = modes.frequencies[0];
    let truth = w + 2.0 * PI * 2e3;
    let mut fits = Vec::new();
    let mut failures = 0;
    for seed in 0..100 {
        let scan = simulate_scan(truth, rabi, t, &scan_grid(w), noise, seed).unwrap();
        match fit_sideband(&scan) {
            Ok(fit) => fits.push(fit),
            Err(_) => failures += 1,
        }
    }
    let stats = |vals: Vec<f64>, truth: f64| {
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        ((mean - truth) / (sd / n.sqrt()), sd)
    };
    let (z_w, sd_w) = stats(fits.iter().map(|f| f.mode_frequency).collect(), truth);
    let (z_r, sd_r) = stats(fits.iter().map(|f| f.rabi).collect(), rabi);
    let inside = fits
        .iter()
        .filter(|f| (f.mode_frequency - truth).abs() <= 3.0 * f.std_errors[0] && (f.rabi - rabi).abs() <= 3.0 * f.std_errors[1])
        .count();
    let pass = worst <= 1e-6 && failures == 0 && z_w.abs() <= 3.0 && z_r.abs() <= 3.0;
    Outcome {
        id: 11,
        pass,
        detail: format!(
            "noiseless max rel err {worst:.1e} over 7 modes (tol 1e-6); 100 noisy trials: {failures} fit failures, mean offsets {z_w:.2} and {z_r:.2} standard errors (limit 3; spread {:.1} Hz, {:.1} Hz); {inside}/100 trials inside their own 3σ",
            sd_w / (2.0 * PI),
            sd_r / (2.0 * PI)
        ),
    }
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_amfm"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn criterion_12() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let seed_solution = root.join("input.json");
    let made = run_cli(&[
        "synth", "--preset", "umd7", "--pair", "4,5", "--tau-us", "120", "--K", "1", "--protocol", "ens",
        "--target-f", "1e-4", "-o", seed_solution.to_str().unwrap(),
    ]);
    let sol = seed_solution.to_str().unwrap().to_string();
    let verbs: Vec<(&str, Vec<&str>, &str)> = vec![
        ("modes", vec!["modes", "--preset", "chain15"], "modes.json"),
        (
            "synth",
            vec!["synth", "--preset", "umd7", "--pair", "4,5", "--tau-us", "120", "--K", "1", "--protocol", "ens", "--target-f", "1e-4", "--repeat", "2"],
            "sol.json",
        ),
        (
            "sweep-tau",
            vec!["sweep-tau", "--preset", "umd7", "--pair", "4,5", "--taus-us", "60,90,120", "--jobs", "2"],
            "tau.csv",
        ),
        (
            "sweep-drift",
            vec!["sweep-drift", "--preset", "umd7", "--solution", &sol, "--points", "41", "--jobs", "2"],
            "drift.csv",
        ),
        ("demod", vec!["demod", "--solution", &sol], "demod.csv"),
        (
            "spectro-sim",
            vec!["spectro-sim", "--mode-mhz", "2.951", "--rabi-khz", "10", "--sigma", "0.01", "--shots", "1000", "--seed", "3"],
            "spectro.csv",
        ),
        (
            "verify",
            vec!["verify", "--samples", "10", "--near-resonant", "4", "--kernel-samples", "1"],
            "verify.json",
        ),
    ];
    let mut pass = made;
    let mut mismatched = Vec::new();
    for (name, args, file) in &verbs {
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let dir = root.join(run);
            std::fs::create_dir_all(&dir).unwrap();
            let out = dir.join(file);
            let mut full = args.clone();
            let out_str = out.to_str().unwrap().to_string();
            full.push("-o");
            full.push(&out_str);
            let ok = run_cli(&full);
            pass &= ok;
            outputs.push(read_outputs(&out));
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            pass = false;
            mismatched.push(*name);
        }
    }
    Outcome {
        id: 12,
        pass,
        detail: format!(
            "{} verbs run twice (outputs and sidecars compared byte for byte); mismatches: {:?}",
            verbs.len(),
            mismatched
        ),
    }
}

/// The output file and its sidecar, if any.
fn read_outputs(path: &Path) -> Vec<Vec<u8>> {
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    [path.to_path_buf(), side.into()]
        .iter()
        .filter_map(|p| std::fs::read(p).ok())
        .collect()
}

fn main() {
    let criteria: [fn() -> Outcome; 12] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
    ];
    let mut unexpected = Vec::new();
    for criterion in criteria {
        let o = criterion();
        println!("criterion {:>2}: {} | {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass && !KNOWN_RED.contains(&o.id) {
            unexpected.push(o.id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria outside {KNOWN_RED:?} pass");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
