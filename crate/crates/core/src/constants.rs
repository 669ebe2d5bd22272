// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants (CODATA 2018, SI units).

use std::f64::consts::PI;

/// Reduced Planck constant ħ, J·s (exact in the 2019 SI).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Elementary charge e, C (exact in the 2019 SI).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum permittivity ε₀, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Atomic mass of ¹⁷¹Yb in atomic mass units (AME 2016).
pub const YB171_MASS_U: f64 = 170.936_331_5;

/// Mass of a ¹⁷¹Yb ion, kg (neutral atomic mass; the missing electron is
/// below the precision that matters here).
pub const YB171_MASS: f64 = YB171_MASS_U * ATOMIC_MASS_UNIT;

/// Raman wavelength of the counter-propagating beam pair, m.
pub const RAMAN_WAVELENGTH: f64 = 355e-9;

/// Effective wavevector difference of a counter-propagating pair at
/// [`RAMAN_WAVELENGTH`]: `Δk = 4π/λ`, 1/m.
pub const DEFAULT_DELTA_K: f64 = 4.0 * PI / RAMAN_WAVELENGTH;

/// Coulomb coupling per unit mass, `e²/(4πε₀ m)`, m³/s².
pub fn coulomb_strength(mass: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * PI * VACUUM_PERMITTIVITY * mass)
}

/// Converts a frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}
