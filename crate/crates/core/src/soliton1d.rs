//! The one-dimensional dark-soliton family and the closed-form minimal
//! energy curve `I_1d(q) = (2 - c_q^2)^{3/2} / 3`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of sound; dark solitons exist for `|c| <= SQRT_2`.
pub const SOUND_SPEED: f64 = SQRT_2;

fn check_speed(c: f64) -> Result<()> {
    if !c.is_finite() || c.abs() > SOUND_SPEED * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::Domain(format!("speed |c| = {} exceeds sqrt(2)", c.abs())));
    }
    Ok(())
}

fn sonic_gap(c: f64) -> f64 {
    (2.0 - c * c).max(0.0)
}

/// A validated soliton speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    c: f64,
}

impl SolitonParams {
    pub fn new(c: f64) -> Result<Self> {
        check_speed(c)?;
        Ok(Self {
            c: c.clamp(-SOUND_SPEED, SOUND_SPEED),
        })
    }

    /// The speed of the soliton whose momentum class is `[q]`.
    pub fn from_momentum(q: f64) -> Self {
        Self {
            c: speed_from_momentum(q),
        }
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn profile(&self, x: f64) -> Complex64 {
        profile_unchecked(self.c, x)
    }

    /// Momentum representative in `[0, pi]`.
    pub fn momentum(&self) -> f64 {
        xi_unchecked(self.c)
    }

    pub fn energy(&self) -> f64 {
        sonic_gap(self.c).powf(1.5) / 3.0
    }

    /// Depth of the modulus dip, `1 - min |u_c| = 1 - |c|/sqrt(2)`.
    pub fn depth(&self) -> f64 {
        1.0 - self.c.abs() / SQRT_2
    }

    /// Inverse core width `sqrt(2 - c^2) / 2`.
    pub fn core_rate(&self) -> f64 {
        sonic_gap(self.c).sqrt() / 2.0
    }
}

fn profile_unchecked(c: f64, x: f64) -> Complex64 {
    let gap = sonic_gap(c);
    let re = (gap / 2.0).sqrt() * (gap.sqrt() * x / 2.0).tanh();
    Complex64::new(re, c / SQRT_2)
}

fn xi_unchecked(c: f64) -> f64 {
    let root = sonic_gap(c).sqrt();
    FRAC_PI_2 - c.atan2(root) - 0.5 * c * root
}

/// The dark soliton `u_c(x)`.
pub fn dark_soliton(c: f64, x: f64) -> Result<Complex64> {
    check_speed(c)?;
    Ok(profile_unchecked(c, x))
}

/// `Xi(c)`, the momentum of the soliton of speed `c`, valued in `[0, pi]`.
pub fn xi(c: f64) -> Result<f64> {
    check_speed(c)?;
    Ok(xi_unchecked(c))
}

/// `Xi'(c) = -sqrt(2 - c^2)`.
pub fn xi_prime(c: f64) -> Result<f64> {
    check_speed(c)?;
    Ok(-sonic_gap(c).sqrt())
}

/// Reduces `q` modulo pi into `[0, pi)`.
pub fn reduce_momentum(q: f64) -> f64 {
    let r = q.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// The unique speed `c_q` in `(-sqrt 2, sqrt 2]` with `Xi(c_q) = q mod pi`.
///
/// Safeguarded Newton on the strictly decreasing map `Xi`, started from
/// `sqrt(2) cos q` and falling back to bisection whenever a step leaves the
/// current bracket.
pub fn speed_from_momentum(q: f64) -> f64 {
    let q = reduce_momentum(q);
    if q == 0.0 {
        return SOUND_SPEED;
    }
    // Xi(lo) >= q >= Xi(hi)
    let (mut lo, mut hi) = (-SOUND_SPEED, SOUND_SPEED);
    let mut c = SOUND_SPEED * q.cos();
    for _ in 0..200 {
        let f = xi_unchecked(c) - q;
        if f == 0.0 {
            return c;
        }
        if f > 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let slope = -sonic_gap(c).sqrt();
        let newton = if slope != 0.0 { c - f / slope } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - c).abs() <= 1e-16 * (1.0 + c.abs()) || hi - lo <= 4.0 * f64::EPSILON {
            return next;
        }
        c = next;
    }
    c
}

/// `I_1d(q)`, even and pi-periodic.
pub fn energy_1d(q: f64) -> f64 {
    let c = speed_from_momentum(q);
    sonic_gap(c).powf(1.5) / 3.0
}

/// `I_1d'(q) = c_q` on the open interval `(0, pi)`.
pub fn energy_1d_slope(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < PI) {
        return Err(Error::Domain(format!("slope requires 0 < q < pi, got {q}")));
    }
    Ok(speed_from_momentum(q))
}

/// A point on the closed-form curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curve1D {
    pub q: f64,
    pub value: f64,
    pub speed: f64,
}

impl Curve1D {
    pub fn at(q: f64) -> Self {
        let speed = speed_from_momentum(q);
        Self {
            q,
            value: sonic_gap(speed).powf(1.5) / 3.0,
            speed,
        }
    }
}

/// One-dimensional Ginzburg-Landau energy density of `u_c` integrated over
/// `[-half_length, half_length]` with composite Simpson quadrature.
pub fn sampled_energy(c: f64, half_length: f64, intervals: usize) -> Result<f64> {
    check_speed(c)?;
    let n = intervals + intervals % 2;
    let h = 2.0 * half_length / n as f64;
    let gap = sonic_gap(c);
    let a = (gap / 2.0).sqrt();
    let b = gap.sqrt() / 2.0;
    let density = |x: f64| {
        let t = (b * x).tanh();
        let s = 1.0 - t * t;
        let du = a * b * s;
        let modsq = a * a * t * t + c * c / 2.0;
        0.5 * du * du + 0.25 * (1.0 - modsq).powi(2)
    };
    let mut acc = density(-half_length) + density(half_length);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(-half_length + k as f64 * h);
    }
    Ok(acc * h / 3.0)
}

/// Discrete residual of the travelling-wave ODE
/// `-i c u' + u'' + u (1 - |u|^2) = 0` for a sampled profile, using centred
/// second-order differences; returns the max modulus over interior samples.
pub fn ode_residual(c: f64, samples: &[Complex64], h: f64) -> f64 {
    let i = Complex64::i();
    samples
        .windows(3)
        .map(|w| {
            let d1 = (w[2] - w[0]) / (2.0 * h);
            let d2 = (w[2] - 2.0 * w[1] + w[0]) / (h * h);
            let u = w[1];
            (-i * c * d1 + d2 + u * (1.0 - u.norm_sqr())).norm()
        })
        .fold(0.0, f64::max)
}
