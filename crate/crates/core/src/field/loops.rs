//! Boundary loops `y -> psi(x, y)` on `T_ell`: the transverse energy `kappa`
//! and the phase lifting of low-energy loops.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::inequalities::circle_distance;

/// Below this distance from the origin a sampled loop counts as vanishing.
const VANISH_TOL: f64 = 1e-10;
/// Allowance for rounding in the mean bounds.
const ROUNDOFF: f64 = 1e-12;

/// A function on `T_ell` sampled at `y_j = j ell / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopTrace {
    values: Vec<Complex64>,
    ell: f64,
}

impl LoopTrace {
    pub fn new(values: Vec<Complex64>, ell: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Domain(format!(
                "a loop needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::Domain(format!("transverse period must be positive, got {ell}")));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("loop has non-finite samples".into()));
        }
        Ok(Self { values, ell })
    }

    pub fn from_fn(n: usize, ell: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let h = ell / n as f64;
        Self::new((0..n).map(|j| f(j as f64 * h)).collect(), ell)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hy(&self) -> f64 {
        self.ell / self.values.len() as f64
    }

    /// `(1/ell) ∫ psi`.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// `(1/ell) ∫ |d_y psi|^2` with forward differences.
    pub fn dirichlet(&self) -> f64 {
        let n = self.values.len();
        let hy = self.hy();
        (0..n)
            .map(|j| (self.values[(j + 1) % n] - self.values[j]).norm_sqr())
            .sum::<f64>()
            / (hy * hy * n as f64)
    }
}

/// `kappa(psi) = (1/2 ell) ∫ |d_y psi|^2 + (1/4 ell) ∫ (1 - |psi|^2)^2`.
pub fn kappa(lp: &LoopTrace) -> f64 {
    let n = lp.values.len() as f64;
    let potential: f64 = lp.values.iter().map(|z| (1.0 - z.norm_sqr()).powi(2)).sum::<f64>() / n;
    0.5 * lp.dirichlet() + 0.25 * potential
}

/// `C_ell = max{2 + ell / (sqrt(2) pi), 2 sqrt(2) ell / pi}`.
pub fn lift_constant(ell: f64) -> f64 {
    (2.0 + ell / (SQRT_2 * PI)).max(2.0 * SQRT_2 * ell / PI)
}

/// `kappa_ell = min{1 / (4 ell^2), 1/16, 1 / (4 C_ell)^2}`.
pub fn kappa_threshold(ell: f64) -> f64 {
    let c = lift_constant(ell);
    (1.0 / (4.0 * ell * ell)).min(1.0 / 16.0).min(1.0 / (16.0 * c * c))
}

/// `psi = modulus * exp(i phase)` with a continuous periodic phase.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopLift {
    pub modulus: Vec<f64>,
    pub phase: Vec<f64>,
    pub mean: Complex64,
    pub kappa: f64,
    /// `kappa_ell` for the loop's period.
    pub kappa_bound: f64,
    pub c_ell: f64,
    /// Whether `kappa <= kappa_ell`, in which case the mean bounds were
    /// checked.
    pub certified: bool,
}

impl LoopLift {
    pub fn mean_phase(&self) -> f64 {
        self.phase.iter().sum::<f64>() / self.phase.len() as f64
    }
}

fn segment_distance_to_origin(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.conj() * d).re / len2).clamp(0.0, 1.0);
    (a + d * t).norm()
}

/// Lifts a nonvanishing loop with zero winding.
///
/// When `kappa <= kappa_ell` the loop is additionally required to satisfy
/// `|mean| >= 1 - C_ell kappa^{1/2}` and
/// `dist(arg mean, mean phase) <= C_ell kappa^{1/2}`; a violation is an error
/// since both bounds hold for every loop in that regime.
pub fn lift_loop(lp: &LoopTrace) -> Result<LoopLift> {
    let v = &lp.values;
    let n = v.len();
    for j in 0..n {
        if segment_distance_to_origin(v[j], v[(j + 1) % n]) <= VANISH_TOL {
            return Err(Error::LoopVanishes { index: j });
        }
    }
    let mut phase = Vec::with_capacity(n);
    let mut acc = v[0].arg();
    phase.push(acc);
    for j in 1..n {
        acc += (v[j] / v[j - 1]).arg();
        phase.push(acc);
    }
    let total = acc - phase[0] + (v[0] / v[n - 1]).arg();
    let winding = (total / (2.0 * PI)).round() as i64;
    if winding != 0 {
        return Err(Error::LoopWinds { winding });
    }
    let mean = lp.mean();
    let mut mean_phase = phase.iter().sum::<f64>() / n as f64;
    if mean.norm() > 0.0 {
        let shift = 2.0 * PI * ((mean.arg() - mean_phase) / (2.0 * PI)).round();
        phase.iter_mut().for_each(|p| *p += shift);
        mean_phase += shift;
    }
    let modulus = v.iter().map(|z| z.norm()).collect();
    let k = kappa(lp);
    let c_ell = lift_constant(lp.ell);
    let kappa_bound = kappa_threshold(lp.ell);
    let certified = k <= kappa_bound;
    if certified {
        let slack = c_ell * k.sqrt();
        if mean.norm() < 1.0 - slack - ROUNDOFF {
            return Err(Error::LiftBound(format!(
                "|mean| = {} below 1 - C_ell kappa^(1/2) = {}",
                mean.norm(),
                1.0 - slack
            )));
        }
        let gap = circle_distance(mean.arg(), mean_phase);
        if gap > slack + ROUNDOFF {
            return Err(Error::LiftBound(format!(
                "phase gap {gap} exceeds C_ell kappa^(1/2) = {slack}"
            )));
        }
    }
    Ok(LoopLift {
        modulus,
        phase,
        mean,
        kappa: k,
        kappa_bound,
        c_ell,
        certified,
    })
}
