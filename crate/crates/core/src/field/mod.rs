//! Complex fields on the truncated cylinder `[-L, L] x T_ell`.
//!
//! Samples sit at `x_i = -L + i hx` (`i < nx`, both ends included) and
//! `y_j = j hy` (`j < ny`, periodic, no duplicated row). Storage is row-major
//! in `x` then `y`: sample `(i, j)` lives at `i * ny + j`, so each x-column
//! of the cylinder (a loop in `y`) is a contiguous slice.
//!
//! The discrete energy uses edge differences for both gradient components,
//! trapezoid weights in `x` and the periodic rectangle rule in `y`; the
//! momentum uses the matching edge form of `<i d_x psi, psi>`. Both are
//! exactly differentiable, and their gradients are the discrete adjoints
//! computed in [`energy`] and [`momentum`].

use num_complex::Complex64;

use crate::error::{Error, Result};

pub mod energy;
pub mod loops;
pub mod momentum;
pub mod snapshot;

pub use energy::{
    anisotropic_energy, energy, energy_gradient, energy_parts, energy_splitting, transverse_energy, windowed_energy,
    EnergyParts, EnergySplitting,
};
pub use loops::{kappa, kappa_threshold, lift_constant, lift_loop, LoopLift, LoopTrace};
pub use momentum::{momentum, momentum_gradient, momentum_parts, windowed_momentum, MomentumClass, MomentumParts};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    nx: usize,
    ell: f64,
    ny: usize,
}

impl Grid {
    pub fn new(half_length: f64, nx: usize, ell: f64, ny: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::Domain(format!(
                "half-length must be positive, got {half_length}"
            )));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::Domain(format!("transverse period must be positive, got {ell}")));
        }
        if nx < 16 {
            return Err(Error::Domain(format!("nx must be at least 16, got {nx}")));
        }
        if ny < 4 || !ny.is_power_of_two() {
            return Err(Error::Domain(format!("ny must be a power of two >= 4, got {ny}")));
        }
        Ok(Self {
            half_length,
            nx,
            ell,
            ny,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.half_length / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.ell / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    /// Same sampling with a different transverse period.
    pub fn with_ell(&self, ell: f64) -> Result<Self> {
        Self::new(self.half_length, self.nx, ell, self.ny)
    }

    /// Nearest grid column to `x`.
    pub fn column_near(&self, x: f64) -> usize {
        let k = ((x + self.half_length) / self.hx()).round();
        k.clamp(0.0, (self.nx - 1) as f64) as usize
    }

    /// Column range `[lo, hi]` of the window `|x| <= r`.
    pub fn window(&self, r: f64) -> Result<(usize, usize)> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("window radius must be positive, got {r}")));
        }
        if r > self.half_length * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "window radius {r} exceeds half-length {}",
                self.half_length
            )));
        }
        let lo = self.column_near(-r);
        let hi = self.column_near(r);
        if hi <= lo {
            return Err(Error::Domain(format!("window radius {r} is below the grid spacing")));
        }
        Ok((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field2D {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("field has non-finite samples".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.ny() {
                values.push(f(x, grid.y(j)));
            }
        }
        Self { grid, values }
    }

    /// Extends a profile sampled at the grid columns independently of `y`.
    pub fn from_profile(grid: Grid, profile: &[Complex64]) -> Result<Self> {
        if profile.len() != grid.nx() {
            return Err(Error::Domain(format!(
                "profile has {} samples, grid has {} columns",
                profile.len(),
                grid.nx()
            )));
        }
        let values = profile
            .iter()
            .flat_map(|&z| std::iter::repeat_n(z, grid.ny()))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.ny + j]
    }

    /// The loop `y -> psi(x_i, y)`.
    pub fn column(&self, i: usize) -> &[Complex64] {
        let ny = self.grid.ny;
        &self.values[i * ny..(i + 1) * ny]
    }

    pub fn column_trace(&self, i: usize) -> LoopTrace {
        LoopTrace::new(self.column(i).to_vec(), self.grid.ell).expect("field samples are finite")
    }

    /// Same samples on a grid with another transverse period.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        Self::new(grid, self.values.clone())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn rotate_phase(&self, alpha: f64) -> Self {
        let r = Complex64::from_polar(1.0, alpha);
        self.map(|z| z * r)
    }

    /// `self + t * dir`.
    pub fn axpy(&self, t: f64, dir: &[Complex64]) -> Self {
        let values = self.values.iter().zip(dir).map(|(&a, &d)| a + d * t).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Circular shift by `k` rows in `y`.
    pub fn shift_y(&self, k: usize) -> Self {
        let ny = self.grid.ny;
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for i in 0..self.grid.nx {
            for j in 0..ny {
                values[i * ny + (j + k) % ny] = self.values[i * ny + j];
            }
        }
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Shift by `k` columns towards `+x` (`k > 0`) or `-x`, padding with the
    /// vacated end column.
    pub fn shift_x(&self, k: isize) -> Self {
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny);
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..nx {
            let src = (i - k).clamp(0, nx - 1) as usize;
            values.extend_from_slice(&self.values[src * ny..(src + 1) * ny]);
        }
        Self {
            grid: self.grid,
            values,
        }
    }

    /// `max |psi(x_i, .) - psi(x_i, 0)|`, zero iff the field is y-independent.
    pub fn y_variation(&self) -> f64 {
        (0..self.grid.nx)
            .flat_map(|i| {
                let col = self.column(i);
                col.iter().map(move |z| (z - col[0]).norm())
            })
            .fold(0.0, f64::max)
    }
}

/// `psi = mean_profile + remainder`, with the remainder of zero y-average.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub mean_profile: Vec<Complex64>,
    pub remainder: Field2D,
}

pub fn mean_profile(f: &Field2D) -> Vec<Complex64> {
    let ny = f.grid.ny;
    (0..f.grid.nx).map(|i| column_mean(f.column(i), ny)).collect()
}

fn column_mean(col: &[Complex64], ny: usize) -> Complex64 {
    col.iter().sum::<Complex64>() / ny as f64
}

pub fn decompose(f: &Field2D) -> Decomposition {
    let mean = mean_profile(f);
    let ny = f.grid.ny;
    let values = f.values.iter().enumerate().map(|(k, &z)| z - mean[k / ny]).collect();
    Decomposition {
        mean_profile: mean,
        remainder: Field2D { grid: f.grid, values },
    }
}

/// Euclidean pairing `Re sum conj(a) b` of two sample arrays.
pub fn pairing(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}
