//! Elementary inequalities used by the lifting and gluing constructions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::field::LoopTrace;

/// Distance between two angles on `R / 2 pi Z`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// Both sides of `dist(arg z1, arg z2) <= (2/pi) |z1 - z2|` for unimodular
/// `z1, z2` with `|z1 - z2| <= 1`.
///
/// Note the angle always dominates the chord, so this form only holds when
/// `z1 = z2`; the valid constant is `pi/2` (see [`chord_angle`]).
pub fn arg_inequality(z1: Complex64, z2: Complex64) -> (f64, f64) {
    (circle_distance(z1.arg(), z2.arg()), 2.0 / PI * (z1 - z2).norm())
}

/// The angle subtended by a chord of the unit circle, `2 asin(|z1 - z2| / 2)`.
/// On chords up to length 1 it lies between the chord and `pi/3` times it.
pub fn chord_angle(z1: Complex64, z2: Complex64) -> f64 {
    2.0 * (0.5 * (z1 - z2).norm()).min(1.0).asin()
}

/// Continuum Poincaré-Wirtinger constant `ell^2 / (4 pi^2)` on `T_ell`.
pub fn poincare_constant(ell: f64) -> f64 {
    ell * ell / (4.0 * PI * PI)
}

/// Sharp constant for `n` samples with forward differences: the inverse of
/// the first nonzero eigenvalue `(2 sin(pi/n) / hy)^2` of the periodic
/// difference Laplacian. It exceeds the continuum constant by `O(hy^2)`.
pub fn discrete_poincare_constant(ell: f64, n: usize) -> f64 {
    let hy = ell / n as f64;
    let s = 2.0 * (PI / n as f64).sin() / hy;
    1.0 / (s * s)
}

/// `(∫ |psi - mean|^2, ∫ |d_y psi|^2)`, both with the `1/ell` normalization.
pub fn poincare_sides(lp: &LoopTrace) -> (f64, f64) {
    let m = lp.mean();
    let n = lp.len() as f64;
    let spread = lp.values().iter().map(|z| (z - m).norm_sqr()).sum::<f64>() / n;
    (spread, lp.dirichlet())
}
