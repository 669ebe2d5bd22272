// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Transverse normal modes of a linear ion chain.
//!
//! Each ion sits at a fixed axial position in its own transverse harmonic
//! well and interacts with the others through the Coulomb force. Linearizing
//! about the axial line gives the mass-weighted coupling table
//!
//! ```text
//! K_ii = ω_{x,i}² − Σ_{k≠i} c/|x_i − x_k|³
//! K_ij = c/|x_i − x_j|³            (i ≠ j)
//! ```
//!
//! with `c = e²/(4πε₀m)`. Its eigenvalues are the squared mode frequencies
//! and its eigenvectors the participation vectors `b_p^i`, from which the
//! Lamb-Dicke parameters follow as `η_p^i = b_p^i Δk √(ħ/(2mω_p))`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::{self, coulomb_strength, hz_to_rad, HBAR};
use crate::linalg::{canonical_sign, symmetric_eigen_ascending};
use crate::{Error, Result};

/// Ions addressed as qubits: `count` consecutive ions starting at the
/// 1-based ion index `first_ion`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitWindow {
    pub first_ion: usize,
    pub count: usize,
}

impl QubitWindow {
    pub fn full(ion_count: usize) -> Self {
        QubitWindow {
            first_ion: 1,
            count: ion_count,
        }
    }

    /// 0-based ion index of the 1-based qubit number `q`.
    pub fn ion_of_qubit(&self, q: usize) -> Option<usize> {
        (1..=self.count)
            .contains(&q)
            .then(|| self.first_ion - 1 + q - 1)
    }

    /// Whether the 0-based ion index is addressed.
    pub fn contains_ion(&self, ion: usize) -> bool {
        ion + 1 >= self.first_ion && ion + 1 < self.first_ion + self.count
    }

    fn validate(&self, ion_count: usize) -> std::result::Result<(), String> {
        if self.first_ion == 0 || self.count == 0 || self.first_ion - 1 + self.count > ion_count {
            return Err(format!(
                "qubit window (first_ion {}, count {}) outside [1, {}]",
                self.first_ion, self.count, ion_count
            ));
        }
        Ok(())
    }
}

/// Physical description of an ion chain, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub ion_count: usize,
    /// Axial coordinates, m, strictly increasing.
    pub positions: Vec<f64>,
    /// Per-ion transverse confinement, rad/s.
    pub transverse_confinement: Vec<f64>,
    /// Ion mass, kg.
    pub ion_mass: f64,
    /// Effective Raman wavevector difference, 1/m.
    pub raman_delta_k: f64,
    pub qubit_window: QubitWindow,
}

impl ChainConfig {
    /// Equally spaced chain centred on the origin with uniform confinement.
    pub fn uniform(
        ion_count: usize,
        spacing: f64,
        confinement: f64,
        ion_mass: f64,
        raman_delta_k: f64,
        qubit_window: QubitWindow,
    ) -> Self {
        let centre = (ion_count as f64 - 1.0) / 2.0;
        ChainConfig {
            ion_count,
            positions: (0..ion_count)
                .map(|i| (i as f64 - centre) * spacing)
                .collect(),
            transverse_confinement: vec![confinement; ion_count],
            ion_mass,
            raman_delta_k,
            qubit_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ion_count;
        let bad = |msg: String| Err(Error::InvalidChain(msg));
        if n == 0 {
            return bad("ion_count must be at least 1".into());
        }
        if self.positions.len() != n || self.transverse_confinement.len() != n {
            return bad(format!(
                "expected {n} positions and confinements, got {} and {}",
                self.positions.len(),
                self.transverse_confinement.len()
            ));
        }
        if self.positions.iter().any(|x| !x.is_finite()) {
            return bad("positions must be finite".into());
        }
        if let Some(k) = self.positions.windows(2).position(|w| w[1] <= w[0]) {
            return bad(format!("positions not strictly increasing at ion {}", k + 2));
        }
        if let Some(k) = self
            .transverse_confinement
            .iter()
            .position(|w| !(w.is_finite() && *w > 0.0))
        {
            return bad(format!("confinement of ion {} must be positive", k + 1));
        }
        if !(self.ion_mass.is_finite() && self.ion_mass > 0.0) {
            return bad("ion_mass must be positive".into());
        }
        if !(self.raman_delta_k.is_finite() && self.raman_delta_k > 0.0) {
            return bad("raman_delta_k must be positive".into());
        }
        self.qubit_window.validate(n).map_err(Error::InvalidChain)
    }

    /// Coulomb part of the coupling table (everything except `ω_{x,i}²`).
    fn coulomb_table(&self) -> DMatrix<f64> {
        let n = self.ion_count;
        let c = coulomb_strength(self.ion_mass);
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = (self.positions[i] - self.positions[j]).abs();
                    let coupling = c / (d * d * d);
                    k[(i, j)] = coupling;
                    k[(i, i)] -= coupling;
                }
            }
        }
        k
    }

    /// Full transverse coupling table `K_ij`, rad²/s².
    pub fn coupling_table(&self) -> DMatrix<f64> {
        let mut k = self.coulomb_table();
        for (i, w) in self.transverse_confinement.iter().enumerate() {
            k[(i, i)] += w * w;
        }
        k
    }
}

/// Motional-mode frequencies and Lamb-Dicke couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeData {
    /// Mode frequencies ω_p, rad/s, ascending.
    pub frequencies: Vec<f64>,
    /// `eta[(p, i)]`: mode `p`, ion `i`.
    pub eta: DMatrix<f64>,
    /// `mode_vectors[(p, i)] = b_p^i`, orthonormal rows.
    pub mode_vectors: DMatrix<f64>,
    pub qubit_window: QubitWindow,
}

/// Tolerance on `B·Bᵀ = 1` for mode vectors.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

impl ModeData {
    pub fn mode_count(&self) -> usize {
        self.frequencies.len()
    }

    pub fn ion_count(&self) -> usize {
        self.eta.ncols()
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.iter().copied().fold(0.0, f64::max)
    }

    /// Checks shapes, ordering and orthonormality.
    pub fn validate(&self) -> Result<()> {
        let n = self.frequencies.len();
        let bad = |msg: String| Err(Error::InvalidModes(msg));
        if n == 0 {
            return bad("no modes".into());
        }
        if self.eta.nrows() != n || self.mode_vectors.nrows() != n {
            return bad(format!("expected {n} rows in eta and mode_vectors"));
        }
        if self.eta.ncols() != self.mode_vectors.ncols() {
            return bad("eta and mode_vectors disagree on ion count".into());
        }
        if self.frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("frequencies must be positive and finite".into());
        }
        if self.frequencies.windows(2).any(|w| w[1] < w[0]) {
            return bad("frequencies must be ascending".into());
        }
        if self.eta.iter().any(|x| !x.is_finite()) {
            return bad("eta must be finite".into());
        }
        if self.mode_vectors.ncols() == n {
            let gram = &self.mode_vectors * self.mode_vectors.transpose();
            let defect = (gram - DMatrix::<f64>::identity(n, n)).amax();
            if defect > ORTHONORMAL_TOL {
                return bad(format!("mode vectors not orthonormal (defect {defect:e})"));
            }
        }
        self.qubit_window
            .validate(self.ion_count())
            .map_err(Error::InvalidModes)
    }

    /// Content hash of frequencies and couplings, 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.frequencies.len() as u64).to_le_bytes());
        for w in &self.frequencies {
            h.update(w.to_le_bytes());
        }
        for p in 0..self.eta.nrows() {
            for i in 0..self.eta.ncols() {
                h.update(self.eta[(p, i)].to_le_bytes());
            }
        }
        let digest = h.finalize();
        hex::encode(&digest[..8])
    }

    /// Copy with every mode frequency shifted by `delta` rad/s.
    pub fn shifted(&self, delta: f64) -> ModeData {
        let mut out = self.clone();
        for w in &mut out.frequencies {
            *w += delta;
        }
        out
    }

    pub fn to_file(&self) -> ModeFile {
        let rows = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|p| m.row(p).iter().copied().collect())
                .collect()
        };
        ModeFile {
            frequencies_hz: self.frequencies.iter().map(|&w| constants::rad_to_hz(w)).collect(),
            eta: rows(&self.eta),
            mode_vectors: rows(&self.mode_vectors),
            qubit_window: Some(self.qubit_window),
        }
    }

    pub fn from_file(file: ModeFile) -> Result<ModeData> {
        let n = file.frequencies_hz.len();
        let table = |rows: &[Vec<f64>], what: &str| -> Result<DMatrix<f64>> {
            if rows.len() != n {
                return Err(Error::InvalidModes(format!(
                    "{what} has {} rows, expected {n}",
                    rows.len()
                )));
            }
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::InvalidModes(format!("{what} rows have unequal length")));
            }
            Ok(DMatrix::from_fn(n, ncols, |p, i| rows[p][i]))
        };
        let eta = table(&file.eta, "eta")?;
        let mode_vectors = table(&file.mode_vectors, "mode_vectors")?;
        let qubit_window = file
            .qubit_window
            .unwrap_or_else(|| QubitWindow::full(eta.ncols()));
        let modes = ModeData {
            frequencies: file.frequencies_hz.iter().map(|&f| hz_to_rad(f)).collect(),
            eta,
            mode_vectors,
            qubit_window,
        };
        modes.validate()?;
        Ok(modes)
    }

    pub fn load(path: &Path) -> Result<ModeData> {
        let text = std::fs::read_to_string(path)?;
        ModeData::from_file(serde_json::from_str(&text)?)
    }
}

/// On-disk form of [`ModeData`]. Frequencies are in Hz; `eta` and
/// `mode_vectors` are mode-major (`eta[p][i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFile {
    pub frequencies_hz: Vec<f64>,
    pub eta: Vec<Vec<f64>>,
    pub mode_vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_window: Option<QubitWindow>,
}

/// Diagonalizes the transverse coupling table of `config`.
pub fn solve_transverse_modes(config: &ChainConfig) -> Result<ModeData> {
    config.validate()?;
    let n = config.ion_count;
    let (values, vectors) = symmetric_eigen_ascending(&config.coupling_table());
    if let Some(p) = values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::UnstableChain {
            mode: p + 1,
            eigenvalue: values[p],
        });
    }
    let frequencies: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    let mut mode_vectors = DMatrix::zeros(n, n);
    for p in 0..n {
        let mut b = vectors.column(p).into_owned();
        canonical_sign(&mut b);
        mode_vectors.set_row(p, &b.transpose());
    }
    let eta = DMatrix::from_fn(n, n, |p, i| {
        mode_vectors[(p, i)] * lamb_dicke_scale(config.ion_mass, config.raman_delta_k, frequencies[p])
    });
    Ok(ModeData {
        frequencies,
        eta,
        mode_vectors,
        qubit_window: config.qubit_window,
    })
}

/// `Δk √(ħ/(2mω))`, the Lamb-Dicke parameter of a single ion with unit
/// participation.
pub fn lamb_dicke_scale(mass: f64, delta_k: f64, omega: f64) -> f64 {
    delta_k * (HBAR / (2.0 * mass * omega)).sqrt()
}

/// Mode frequencies of the seven-ion chain, Hz, ascending.
pub const UMD7_FREQUENCIES_HZ: [f64; 7] = [
    2.951e6, 2.973e6, 2.993e6, 3.010e6, 3.025e6, 3.038e6, 3.054e6,
];

/// Top (centre-of-mass) mode anchor, Hz.
pub const TOP_MODE_HZ: f64 = 3.054e6;

/// Named chain presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Umd7,
    Chain15,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umd7" => Ok(Preset::Umd7),
            "chain15" => Ok(Preset::Chain15),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Umd7 => "umd7",
            Preset::Chain15 => "chain15",
        }
    }
}

/// Provenance of a preset's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetMetadata {
    pub name: String,
    /// Uniform inter-ion spacing, m.
    pub spacing: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PresetChain {
    pub config: ChainConfig,
    pub modes: ModeData,
    pub metadata: PresetMetadata,
}

/// Builds a named preset and solves its modes.
pub fn preset(name: &str) -> Result<PresetChain> {
    build_preset(name.parse()?)
}

pub fn build_preset(which: Preset) -> Result<PresetChain> {
    match which {
        Preset::Umd7 => umd7(),
        Preset::Chain15 => chain15(),
    }
}

fn chain15() -> Result<PresetChain> {
    let spacing = 5e-6;
    let config = ChainConfig::uniform(
        15,
        spacing,
        hz_to_rad(TOP_MODE_HZ),
        constants::YB171_MASS,
        constants::DEFAULT_DELTA_K,
        QubitWindow {
            first_ion: 3,
            count: 11,
        },
    );
    let modes = solve_transverse_modes(&config)?;
    Ok(PresetChain {
        config,
        modes,
        metadata: PresetMetadata {
            name: "chain15".into(),
            spacing,
            notes: vec![
                "15 ¹⁷¹Yb⁺ ions, uniform 5 µm spacing, middle 11 ions are qubits".into(),
                "ASSUMPTION: uniform confinement placing the centre-of-mass mode at 2π·3.054 MHz, \
                 borrowed from the seven-ion chain"
                    .into(),
            ],
        },
    })
}

fn umd7() -> Result<PresetChain> {
    let targets: Vec<f64> = UMD7_FREQUENCIES_HZ.iter().map(|&f| hz_to_rad(f)).collect();
    let top = targets[6];
    let bottom = targets[0];
    let window = QubitWindow {
        first_ion: 2,
        count: 5,
    };
    let chain_at = |spacing: f64| {
        ChainConfig::uniform(
            7,
            spacing,
            top,
            constants::YB171_MASS,
            constants::DEFAULT_DELTA_K,
            window,
        )
    };

    // The lowest mode rises towards the uniform confinement as the spacing
    // grows, so bisect the spacing on the lowest-mode frequency.
    let lowest = |spacing: f64| -> f64 {
        let k = chain_at(spacing).coupling_table();
        let (vals, _) = symmetric_eigen_ascending(&k);
        vals[0].max(0.0).sqrt()
    };
    let (mut lo, mut hi) = (1e-6, 50e-6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lowest(mid) < bottom {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-18 {
            break;
        }
    }
    let spacing = 0.5 * (lo + hi);
    let config = chain_at(spacing);
    let model = solve_transverse_modes(&config)?;
    let worst_hz = model
        .frequencies
        .iter()
        .zip(&targets)
        .map(|(a, b)| (a - b).abs() / (2.0 * PI))
        .fold(0.0, f64::max);
    let modes = impose_frequencies(&model, &targets, config.ion_mass, config.raman_delta_k)?;
    Ok(PresetChain {
        config,
        modes,
        metadata: PresetMetadata {
            name: "umd7".into(),
            spacing,
            notes: vec![
                "7 ¹⁷¹Yb⁺ ions, middle five are qubits".into(),
                format!(
                    "uniform spacing {:.6} µm fitted by bisection so the lowest mode is 2π·2.951 MHz",
                    spacing * 1e6
                ),
                format!(
                    "mode vectors from the fitted chain; frequencies replaced by the measured table \
                     (largest model offset {:.1} kHz)",
                    worst_hz / 1e3
                ),
            ],
        },
    })
}

/// Replaces the frequencies of `modes` by `targets` (rad/s, ascending),
/// keeping the mode vectors and rescaling the Lamb-Dicke parameters.
/// Equivalent to the coupling table `Bᵀ diag(ω²) B`.
pub fn impose_frequencies(modes: &ModeData, targets: &[f64], mass: f64, delta_k: f64) -> Result<ModeData> {
    if targets.len() != modes.mode_count() {
        return Err(Error::InvalidModes(format!(
            "expected {} frequencies, got {}",
            modes.mode_count(),
            targets.len()
        )));
    }
    let eta = DMatrix::from_fn(modes.mode_count(), modes.ion_count(), |p, i| {
        modes.mode_vectors[(p, i)] * lamb_dicke_scale(mass, delta_k, targets[p])
    });
    let out = ModeData {
        frequencies: targets.to_vec(),
        eta,
        mode_vectors: modes.mode_vectors.clone(),
        qubit_window: modes.qubit_window,
    };
    out.validate()?;
    Ok(out)
}

/// Smallest basis size whose highest tone `2πN_A/τ` lies a fraction
/// `margin` above the top mode frequency.
pub fn covering_basis_size(modes: &ModeData, tau: f64, margin: f64) -> usize {
    (modes.max_frequency() * (1.0 + margin) * tau / (2.0 * PI)).ceil() as usize
}
