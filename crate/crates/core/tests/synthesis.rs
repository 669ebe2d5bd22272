// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::sync::OnceLock;

use amfm_core::analysis::{displacement, gate_angle, infidelity_roundoff_floor, residual_infidelity};
use amfm_core::chain_model::{preset, ModeData};
use amfm_core::linalg::orthonormality_defect;
use amfm_core::spectral_kernels::{constraint_matrix, infidelity_matrix, kernel_matrix};
use amfm_core::synthesis::*;
use amfm_core::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const CHI: f64 = PI / 8.0;

fn umd7() -> &'static ModeData {
    static M: OnceLock<ModeData> = OnceLock::new();
    M.get_or_init(|| preset("umd7").unwrap().modes)
}

fn chain15() -> &'static ModeData {
    static M: OnceLock<ModeData> = OnceLock::new();
    M.get_or_init(|| preset("chain15").unwrap().modes)
}

/// `(4/5)ÂᵀFÂ` from a freshly built infidelity matrix, as a sum of squares.
fn recomputed_f(modes: &ModeData, sol: &PulseSolution) -> f64 {
    let (i, j) = sol.ion_pair();
    let f = infidelity_matrix(modes, i, j, sol.tau_s, sol.basis_size).unwrap();
    f.infidelity(&sol.amplitude_vector())
}

fn check_common(modes: &ModeData, sol: &PulseSolution) -> Result<(), TestCaseError> {
    prop_assert!((sol.gate_angle.abs() - CHI).abs() <= 1e-10, "χ = {}", sol.gate_angle);
    let (i, j) = sol.ion_pair();
    let fresh = gate_angle(sol, modes, i, j).unwrap();
    prop_assert!((fresh.abs() - CHI).abs() <= 1e-10);
    let omega_sq = PI / (8.0 * sol.lambda_max.abs());
    prop_assert!((sol.omega0 * sol.omega0 / omega_sq - 1.0).abs() <= 1e-12);
    let f = recomputed_f(modes, sol);
    let floor = infidelity_roundoff_floor(sol, modes, i, j);
    prop_assert!((f - sol.predicted_f).abs() <= 1e-12 * f.abs() + 100.0 * floor, "{} vs {}", f, sol.predicted_f);
    Ok(())
}

fn protocol_strategy() -> impl Strategy<Value = Protocol> {
    prop_oneof![
        Just(Protocol::Exact),
        (1usize..20).prop_map(|l| Protocol::Fmatrix { cut: FmatrixCut::Discard(l) }),
        (-12i32..-1).prop_map(|e| Protocol::Ens { knob: EnsKnob::Threshold(10f64.powi(e)) }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solutions_hit_the_gate_angle(
        protocol in protocol_strategy(),
        order in 0u32..=3,
        tau_us in 30.0f64..130.0,
        pair in prop_oneof![Just((1usize, 2usize)), Just((2, 4)), Just((4, 5)), Just((1, 5))],
    ) {
        let modes = umd7();
        let req = SynthesisRequest::new(pair, tau_us * 1e-6, order, protocol);
        let sol = synthesize(modes, &req).unwrap();
        check_common(modes, &sol)?;
        prop_assert!((sol.mean_square_power - 0.5 * sol.omega0 * sol.omega0).abs() <= 1e-12 * sol.mean_square_power);
        if protocol == Protocol::Exact {
            prop_assert!(sol.predicted_f <= 1e-16 * (sol.omega0 * sol.tau_s).powi(2));
            for (k, r) in sol.closure_residuals.iter().enumerate() {
                prop_assert!(*r <= 1e-9, "order {} residual {}", k, r);
            }
        }
        if let Some(f_max) = sol.f_max {
            prop_assert!(sol.predicted_f <= f_max * (1.0 + 1e-12) + 1e-26);
        }
    }

    #[test]
    fn omega0_non_increasing_in_l_cut(tau_us in 30.0f64..100.0, pair in prop_oneof![Just((1usize, 2usize)), Just((2, 5))]) {
        let modes = umd7();
        let mut last = 0.0;
        for l_bar in 0..12usize {
            let req = SynthesisRequest::new(pair, tau_us * 1e-6, 0, Protocol::Fmatrix { cut: FmatrixCut::Discard(l_bar) });
            let sol = synthesize(modes, &req).unwrap();
            // Fewer kept eigenvectors can only raise Ω₀.
            prop_assert!(sol.omega0 >= last * (1.0 - 1e-10), "L̄={} Ω₀={} after {}", l_bar, sol.omega0, last);
            last = sol.omega0;
        }
    }

    #[test]
    fn omega0_non_increasing_in_z(tau_us in 30.0f64..100.0, order in 0u32..=2) {
        let modes = umd7();
        let mut last = f64::INFINITY;
        for e in [-24, -16, -12, -9, -6, -4, -2, 0] {
            let req = SynthesisRequest::new((1, 3), tau_us * 1e-6, order, Protocol::Ens { knob: EnsKnob::Threshold(10f64.powi(e)) });
            let sol = synthesize(modes, &req).unwrap();
            prop_assert!(sol.omega0 <= last * (1.0 + 1e-10), "Z=1e{} Ω₀={} after {}", e, sol.omega0, last);
            last = sol.omega0;
        }
    }

    #[test]
    fn power_non_decreasing_in_order(tau_us in 40.0f64..130.0) {
        let modes = umd7();
        let mut last = 0.0;
        for order in 0..=4u32 {
            let sol = synthesize(modes, &SynthesisRequest::new((4, 5), tau_us * 1e-6, order, Protocol::Exact)).unwrap();
            prop_assert!(sol.mean_square_power >= last * (1.0 - 1e-10));
            last = sol.mean_square_power;
        }
    }

    #[test]
    fn gamma_basis_meets_threshold(e in -14i32..0, order in 0u32..=3) {
        let modes = umd7();
        let m = constraint_matrix(modes, 80e-6, order, 300).unwrap();
        let z = 10f64.powi(e);
        let sub = gamma_eigenspace(&m, z, DEFAULT_NULL_TOL).unwrap();
        prop_assert!(orthonormality_defect(&sub.basis) <= 1e-10);
        let mb = &m.rows * &sub.basis;
        for c in 0..sub.dim() {
            let r2 = mb.column(c).norm_squared();
            prop_assert!(r2 <= z * sub.scale * (1.0 + 1e-9) + 1e-28 * sub.scale);
        }
        prop_assert!(sub.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn tiny_singular_directions_stay_closed() {
    let modes = umd7();
    let sol = synthesize(modes, &SynthesisRequest::new((1, 2), 110.60336245027418e-6, 1, Protocol::Exact)).unwrap();
    for r in &sol.closure_residuals {
        assert!(*r <= 1e-12, "{:?}", sol.closure_residuals);
    }
}

#[test]
fn ens_with_zero_threshold_is_exact() {
    let modes = umd7();
    let exact = synthesize(modes, &SynthesisRequest::new((4, 5), 120e-6, 2, Protocol::Exact)).unwrap();
    let ens = synthesize(
        modes,
        &SynthesisRequest::new((4, 5), 120e-6, 2, Protocol::Ens { knob: EnsKnob::Threshold(0.0) }),
    )
    .unwrap();
    assert_eq!(exact.subspace_dim, ens.subspace_dim);
    assert!((exact.omega0 / ens.omega0 - 1.0).abs() < 1e-12);
}

#[test]
fn infinite_threshold_admits_everything() {
    let modes = umd7();
    let m = constraint_matrix(modes, 80e-6, 1, 300).unwrap();
    assert_eq!(gamma_eigenspace(&m, f64::INFINITY, DEFAULT_NULL_TOL).unwrap().dim(), 300);
}

#[test]
fn full_fmatrix_is_unconstrained_optimum() {
    let modes = umd7();
    let na = 300;
    let sol = synthesize(
        modes,
        &SynthesisRequest::new((2, 3), 60e-6, 0, Protocol::Fmatrix { cut: FmatrixCut::Keep(na) }).with_basis_size(na),
    )
    .unwrap();
    let k = kernel_matrix(modes, 2, 3, 60e-6, na).unwrap().symmetric();
    let free = power_optimize(&DMatrix::identity(na, na), &k).unwrap();
    assert!((sol.omega0 / free.omega0 - 1.0).abs() < 1e-10);
    assert_eq!(sol.knobs.l_bar_cut, Some(0));
}

#[test]
fn one_dimensional_power_rule() {
    let modes = umd7();
    let k = kernel_matrix(modes, 4, 5, 120e-6, 40).unwrap().symmetric();
    let mut v = DVector::zeros(40);
    v[36] = 0.6;
    v[37] = 0.8;
    let s = v.dot(&(&k * &v));
    let opt = power_optimize(&DMatrix::from_column_slice(40, 1, v.as_slice()), &k).unwrap();
    assert!((opt.omega0 - (PI / (8.0 * s.abs())).sqrt()).abs() <= 1e-12 * opt.omega0);
    let a = DVector::from_vec(opt.amplitudes.clone());
    assert!((a.dot(&(&k * &a)).abs() - CHI).abs() < 1e-12);
}

#[test]
fn distant_pairs_need_more_power() {
    let modes = chain15();
    let near = synthesize(modes, &SynthesisRequest::new((2, 3), 150e-6, 0, Protocol::Exact)).unwrap();
    let far = synthesize(modes, &SynthesisRequest::new((2, 12), 150e-6, 0, Protocol::Exact)).unwrap();
    assert!(far.mean_square_power > near.mean_square_power);
}

#[test]
fn repeats_keep_the_accumulated_angle() {
    let modes = umd7();
    let sol = synthesize(modes, &SynthesisRequest::new((4, 5), 120e-6, 0, Protocol::Exact)).unwrap();
    assert_eq!(repeat_pulse(&sol, modes, 1).unwrap(), sol);
    let four = repeat_pulse(&sol, modes, 4).unwrap();
    for (a, b) in four.amplitudes.iter().zip(&sol.amplitudes) {
        assert!((a - 0.5 * b).abs() <= 1e-15 * b.abs());
    }
    assert!((four.duration() - 4.0 * sol.duration()).abs() < 1e-18);
    assert!((four.gate_angle.abs() - CHI).abs() < 1e-10);
    assert!(matches!(repeat_pulse(&sol, modes, 0), Err(Error::InvalidRequest(_))));

    let two = repeat_pulse(&sol, modes, 2).unwrap();
    let t = two.duration();
    for p in 0..modes.mode_count() {
        for ion in [4, 5] {
            let alpha = displacement(&two, modes, ion, p, t, 0.0).unwrap();
            let bound = 1e-9 * two.omega0 * two.tau_s * modes.eta[(p, ion)].abs();
            assert!(alpha.norm() <= bound, "mode {p} ion {ion}: {}", alpha.norm());
        }
    }
    assert!(residual_infidelity(&two, modes, 4, 5, 0.0).unwrap() < 1e-20);
}

#[test]
fn amplitude_floor_barely_moves_the_angle() {
    let modes = umd7();
    let mut req = SynthesisRequest::new((4, 5), 120e-6, 1, Protocol::Exact);
    req.amplitude_floor = Some(1e-4);
    let sol = synthesize(modes, &req).unwrap();
    let (i, j) = sol.ion_pair();
    let chi = gate_angle(&sol, modes, i, j).unwrap();
    assert!((chi.abs() - CHI).abs() < 1e-6 * CHI);
    assert!((chi - sol.gate_angle).abs() < 1e-12);
    assert!(sol.amplitudes.contains(&0.0));
}

#[test]
fn target_infidelity_is_met() {
    let modes = umd7();
    let req = SynthesisRequest::new((4, 5), 120e-6, 1, Protocol::Ens { knob: EnsKnob::TargetInfidelity(1e-4) });
    let sol = synthesize(modes, &req).unwrap();
    assert!(sol.predicted_f <= 1e-4);
    assert!(!sol.fallback);
    assert!(sol.knobs.z.is_some());
    let exact = synthesize(modes, &SynthesisRequest::new((4, 5), 120e-6, 1, Protocol::Exact)).unwrap();
    assert!(sol.mean_square_power <= exact.mean_square_power);
}

#[test]
fn convergence_check_reports() {
    let modes = umd7();
    let mut req = SynthesisRequest::new((4, 5), 60e-6, 0, Protocol::Exact);
    req.convergence_check = true;
    let sol = synthesize(modes, &req).unwrap();
    let rep = sol.convergence.unwrap();
    assert_eq!(rep.basis_size, 450);
    assert!(rep.relative_shift < CONVERGENCE_WARN);
}

#[test]
fn request_validation() {
    let modes = umd7();
    let bad = |req: SynthesisRequest| synthesize(modes, &req).unwrap_err();
    assert!(matches!(bad(SynthesisRequest::new((4, 4), 1e-4, 0, Protocol::Exact)), Error::InvalidPair(..)));
    assert!(matches!(bad(SynthesisRequest::new((0, 4), 1e-4, 0, Protocol::Exact)), Error::InvalidPair(..)));
    assert!(matches!(bad(SynthesisRequest::new((3, 4), -1.0, 0, Protocol::Exact)), Error::InvalidRequest(_)));
    assert!(matches!(
        bad(SynthesisRequest::new((3, 4), 1e-4, 0, Protocol::Fmatrix { cut: FmatrixCut::Keep(0) })),
        Error::InvalidRequest(_)
    ));
    assert!(matches!(
        bad(SynthesisRequest::new((3, 4), 1e-4, 0, Protocol::Ens { knob: EnsKnob::TargetInfidelity(2.0) })),
        Error::InvalidRequest(_)
    ));
    assert!(matches!(
        bad(SynthesisRequest::new((3, 4), 1e-4, 3, Protocol::Exact).with_basis_size(40)),
        Error::BasisTooSmall { minimum: 57, .. }
    ));
    assert!(matches!(bad(SynthesisRequest::new((3, 4), 5e-3, 0, Protocol::Exact)), Error::InvalidRequest(_)));
    let req = SynthesisRequest::new((3, 4), 1e-4, 0, Protocol::Exact);
    assert!(exact_amfm(modes, &req).is_ok());
    assert!(matches!(ens_amfm(modes, &req), Err(Error::InvalidRequest(_))));
}

#[test]
fn solution_json_round_trip() {
    let modes = umd7();
    let sol = synthesize(modes, &SynthesisRequest::new((4, 5), 60e-6, 0, Protocol::Exact)).unwrap();
    let back = PulseSolution::from_json(&sol.to_json().unwrap()).unwrap();
    assert_eq!(back, sol);
    assert_eq!(sol.chain_fingerprint, modes.fingerprint());
}

#[test]
fn fmatrix_sweep_matches_single_cuts() {
    let modes = umd7();
    let template = SynthesisRequest::new((2, 4), 60e-6, 0, Protocol::Exact);
    let cuts = [FmatrixCut::Discard(3), FmatrixCut::Keep(200), FmatrixCut::Discard(10)];
    let swept = fmatrix_sweep(modes, &template, &cuts).unwrap();
    for (cut, sol) in cuts.iter().zip(&swept) {
        let single = synthesize(modes, &SynthesisRequest::new((2, 4), 60e-6, 0, Protocol::Fmatrix { cut: *cut })).unwrap();
        assert_eq!(sol.protocol, single.protocol);
        assert_eq!(sol.knobs, single.knobs);
        assert!((sol.omega0 / single.omega0 - 1.0).abs() < 1e-12);
        assert!(sol.predicted_f <= sol.f_max.unwrap() * (1.0 + 1e-12) + 1e-26);
    }
    assert!(fmatrix_sweep(modes, &template, &[FmatrixCut::Keep(0)]).is_err());
    let mut checked = template.clone();
    checked.convergence_check = true;
    assert!(fmatrix_sweep(modes, &checked, &cuts).is_err());
}
