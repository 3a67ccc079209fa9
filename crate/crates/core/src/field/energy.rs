//! Ginzburg-Landau energy `E = (1/ell) ∬ (|∇psi|^2 / 2 + (1 - |psi|^2)^2 / 4)`
//! and its exact discrete gradient.

use num_complex::Complex64;

use super::{decompose, Field2D};
use crate::error::{Error, Result};
use crate::par;

/// The three pieces of the discrete energy over a column window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub kinetic_x: f64,
    pub kinetic_y: f64,
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic_x + self.kinetic_y + self.potential
    }
}

/// Trapezoid weight of column `i` inside the window `[lo, hi]`.
pub(crate) fn window_weight(i: usize, lo: usize, hi: usize, hx: f64) -> f64 {
    if i == lo || i == hi {
        0.5 * hx
    } else {
        hx
    }
}

/// Energy pieces restricted to columns `lo..=hi`, normalized by `1/ell`.
pub fn energy_parts(f: &Field2D, lo: usize, hi: usize) -> EnergyParts {
    let g = f.grid();
    let (ny, hx, hy) = (g.ny(), g.hx(), g.hy());
    let inv_hy2 = 1.0 / (hy * hy);
    let rows = par::map_range(hi - lo + 1, |k| {
        let i = lo + k;
        let w = window_weight(i, lo, hi, hx);
        let col = f.column(i);
        let (mut pot, mut ky) = (0.0, 0.0);
        for j in 0..ny {
            let z = col[j];
            let d = 1.0 - z.norm_sqr();
            pot += 0.25 * d * d;
            ky += 0.5 * (col[(j + 1) % ny] - z).norm_sqr() * inv_hy2;
        }
        let mut kx = 0.0;
        if i < hi {
            let next = f.column(i + 1);
            kx = col.iter().zip(next).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>() * 0.5 / hx;
        }
        (w * pot, w * ky, kx)
    });
    let mut parts = EnergyParts::default();
    for (p, ky, kx) in rows {
        parts.potential += p;
        parts.kinetic_y += ky;
        parts.kinetic_x += kx;
    }
    let norm = 1.0 / ny as f64;
    parts.potential *= norm;
    parts.kinetic_y *= norm;
    parts.kinetic_x *= norm;
    parts
}

pub fn energy(f: &Field2D) -> f64 {
    energy_parts(f, 0, f.grid().nx() - 1).total()
}

/// `E_R`: the energy of the window `|x| <= r`.
pub fn windowed_energy(f: &Field2D, r: f64) -> Result<f64> {
    let (lo, hi) = f.grid().window(r)?;
    Ok(energy_parts(f, lo, hi).total())
}

/// `(1/2 ell) ∬ |d_y psi|^2`; vanishes exactly when the field is y-independent.
pub fn transverse_energy(f: &Field2D) -> f64 {
    energy_parts(f, 0, f.grid().nx() - 1).kinetic_y
}

/// `E_lambda(psi) = (1/2)∬(|d_x psi|^2 + lambda^2 |d_y psi|^2) + (1/4)∬(1 - |psi|^2)^2`
/// on a grid of unit transverse period.
pub fn anisotropic_energy(f: &Field2D, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if f.grid().ell() != 1.0 {
        return Err(Error::Domain(format!(
            "anisotropic energy lives on T_1, grid has ell = {}",
            f.grid().ell()
        )));
    }
    let p = energy_parts(f, 0, f.grid().nx() - 1);
    Ok(p.kinetic_x + lambda * lambda * p.kinetic_y + p.potential)
}

/// Exact gradient of [`energy`]: `dE = Re sum conj(grad) dpsi`.
pub fn energy_gradient(f: &Field2D) -> Field2D {
    energy_and_gradient(f).1
}

pub(crate) fn energy_and_gradient(f: &Field2D) -> (f64, Field2D) {
    let g = *f.grid();
    let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
    let norm = 1.0 / ny as f64;
    let inv_hy2 = 1.0 / (hy * hy);
    let cols = par::map_range(nx, |i| {
        let w = window_weight(i, 0, nx - 1, hx);
        let col = f.column(i);
        let mut grad = vec![Complex64::new(0.0, 0.0); ny];
        let mut e = 0.0;
        for j in 0..ny {
            let z = col[j];
            let up = col[(j + 1) % ny];
            let down = col[(j + ny - 1) % ny];
            let d = 1.0 - z.norm_sqr();
            e += w * (0.25 * d * d + 0.5 * (up - z).norm_sqr() * inv_hy2);
            let mut gz = w * (-z * d + (z * 2.0 - up - down) * inv_hy2);
            if i + 1 < nx {
                let r = f.column(i + 1)[j];
                e += 0.5 * (r - z).norm_sqr() / hx;
                gz += (z - r) / hx;
            }
            if i > 0 {
                gz += (z - f.column(i - 1)[j]) / hx;
            }
            grad[j] = gz * norm;
        }
        (e, grad)
    });
    let mut total = 0.0;
    let mut values = Vec::with_capacity(g.len());
    for (e, grad) in cols {
        total += e;
        values.extend(grad);
    }
    (total * norm, Field2D::new(g, values).expect("finite gradient"))
}

/// The splitting `E(psi) = E(mean) + w-terms` of `psi = mean + w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySplitting {
    pub mean_part: f64,
    pub remainder_part: f64,
}

pub fn energy_splitting(f: &Field2D) -> EnergySplitting {
    let g = *f.grid();
    let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
    let d = decompose(f);
    let mean = &d.mean_profile;
    let w = &d.remainder;
    let inv_hy2 = 1.0 / (hy * hy);
    let dot = |a: Complex64, b: Complex64| a.re * b.re + a.im * b.im;
    let cols = par::map_range(nx, |i| {
        let wt = window_weight(i, 0, nx - 1, hx);
        let m = mean[i];
        let gap = 1.0 - m.norm_sqr();
        let mut mean_part = wt * 0.25 * gap * gap;
        let mut rem = 0.0;
        let col = w.column(i);
        for j in 0..ny {
            let z = col[j];
            let zz = z.norm_sqr();
            let proj = dot(z, m);
            rem += wt
                * (0.5 * (col[(j + 1) % ny] - z).norm_sqr() * inv_hy2 + proj * proj - 0.5 * zz * gap
                    + proj * zz
                    + 0.25 * zz * zz)
                / ny as f64;
        }
        if i + 1 < nx {
            mean_part += 0.5 * (mean[i + 1] - m).norm_sqr() / hx;
            let next = w.column(i + 1);
            rem += col.iter().zip(next).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>() * 0.5 / hx / ny as f64;
        }
        (mean_part, rem)
    });
    let (mut mean_part, mut remainder_part) = (0.0, 0.0);
    for (a, b) in cols {
        mean_part += a;
        remainder_part += b;
    }
    EnergySplitting {
        mean_part,
        remainder_part,
    }
}
