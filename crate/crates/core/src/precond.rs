//! Sobolev preconditioner for the discrete energy.
//!
//! `M = (1/ny) [(alpha + lambda_m) diag(w) + T / hx]` acts on each
//! y-Fourier mode `m` separately, where `w` are the trapezoid weights in
//! `x`, `T` is the path-graph Laplacian along `x` and
//! `lambda_m = (2 - 2 cos(2 pi m / ny)) / hy^2` is the symbol of the
//! periodic second difference. It is the Hessian of the energy at a
//! unimodular constant, shifted by `alpha` so it is positive definite.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::{Field2D, Grid};
use crate::par;

pub struct Preconditioner {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Thomas factors per mode, mode-major: `upper[m * nx + i]` and
    /// `pivot[m * nx + i]`.
    upper: Vec<f64>,
    pivot: Vec<f64>,
}

impl Preconditioner {
    pub fn new(grid: Grid, alpha: f64) -> Self {
        let (nx, ny, hx, hy) = (grid.nx(), grid.ny(), grid.hx(), grid.hy());
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(ny);
        let inverse = planner.plan_fft_inverse(ny);
        let mut upper = vec![0.0; nx * ny];
        let mut pivot = vec![0.0; nx * ny];
        let off = -1.0 / hx;
        for m in 0..ny {
            let lambda = (2.0 - 2.0 * (2.0 * PI * m as f64 / ny as f64).cos()) / (hy * hy);
            let shift = alpha + lambda;
            let mut prev_upper = 0.0;
            for i in 0..nx {
                let w = if i == 0 || i == nx - 1 { 0.5 * hx } else { hx };
                let degree = if i == 0 || i == nx - 1 { 1.0 } else { 2.0 };
                let diag = shift * w + degree / hx;
                let lower = if i > 0 { off } else { 0.0 };
                let p = diag - lower * prev_upper;
                pivot[m * nx + i] = p;
                prev_upper = if i + 1 < nx { off / p } else { 0.0 };
                upper[m * nx + i] = prev_upper;
            }
        }
        Self {
            grid,
            forward,
            inverse,
            upper,
            pivot,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `M^{-1} r`. A y-independent input gives an exactly y-independent
    /// output.
    pub fn apply_inverse(&self, r: &Field2D) -> Field2D {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        if r.y_variation() == 0.0 {
            let mut b: Vec<Complex64> = (0..nx).map(|i| r.at(i, 0) * ny as f64).collect();
            self.solve_mode(0, &mut b);
            return Field2D::from_profile(self.grid, &b).expect("finite preconditioned field");
        }
        let mut data = r.values().to_vec();
        par::for_each_chunk_mut(&mut data, ny, |_, col| self.forward.process(col));
        let mut modes = vec![Complex64::new(0.0, 0.0); nx * ny];
        for i in 0..nx {
            for m in 0..ny {
                modes[m * nx + i] = data[i * ny + m];
            }
        }
        // The 1/ny of M and the 1/ny of the inverse transform cancel.
        par::for_each_chunk_mut(&mut modes, nx, |m, b| self.solve_mode(m, b));
        for i in 0..nx {
            for m in 0..ny {
                data[i * ny + m] = modes[m * nx + i];
            }
        }
        par::for_each_chunk_mut(&mut data, ny, |_, col| self.inverse.process(col));
        Field2D::new(self.grid, data).expect("finite preconditioned field")
    }

    fn solve_mode(&self, m: usize, b: &mut [Complex64]) {
        let nx = self.grid.nx();
        let off = -1.0 / self.grid.hx();
        let up = &self.upper[m * nx..(m + 1) * nx];
        let piv = &self.pivot[m * nx..(m + 1) * nx];
        b[0] /= piv[0];
        for i in 1..nx {
            b[i] = (b[i] - b[i - 1] * off) / piv[i];
        }
        for i in (0..nx - 1).rev() {
            b[i] -= b[i + 1] * up[i];
        }
    }
}

/// Applies `M` directly in physical space; used to check the inverse.
#[cfg(test)]
fn apply_forward(grid: &Grid, alpha: f64, u: &Field2D) -> Field2D {
    let (nx, ny, hx, hy) = (grid.nx(), grid.ny(), grid.hx(), grid.hy());
    let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
    for i in 0..nx {
        let w = if i == 0 || i == nx - 1 { 0.5 * hx } else { hx };
        for j in 0..ny {
            let z = u.at(i, j);
            let lap_y = z * 2.0 - u.at(i, (j + 1) % ny) - u.at(i, (j + ny - 1) % ny);
            let mut acc = w * (z * alpha + lap_y / (hy * hy));
            if i > 0 {
                acc += (z - u.at(i - 1, j)) / hx;
            }
            if i + 1 < nx {
                acc += (z - u.at(i + 1, j)) / hx;
            }
            out[i * ny + j] = acc / ny as f64;
        }
    }
    Field2D::new(*grid, out).unwrap()
}
