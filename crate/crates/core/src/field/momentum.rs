//! Untwisted momentum `[P]`, valued in `R / pi Z`.
//!
//! The representative is
//! `Q(psi) - (arg mean(R) - arg mean(-R)) / 2` with the edge form
//! `Q(psi) = (1/2 ny) sum_j sum_i Im(conj(psi_ij) psi_(i+1)j)` of
//! `(1/2 ell) ∬ Im(conj(psi) d_x psi)`. Because the remainder has zero
//! y-average, `Q` splits exactly into a mean-profile part and a remainder
//! part. With this orientation the soliton `u_c` has momentum `Xi(c)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::Field2D;
use crate::error::{Error, Result};
use crate::par;

/// Below this modulus the mean profile is treated as vanishing.
pub const VACUUM_MODULUS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumClass {
    representative: f64,
}

impl MomentumClass {
    pub fn new(representative: f64) -> Self {
        Self { representative }
    }

    pub fn representative(&self) -> f64 {
        self.representative
    }

    /// Canonical representative in `[0, pi)`.
    pub fn reduced(&self) -> f64 {
        crate::soliton1d::reduce_momentum(self.representative)
    }

    /// `min_k |a - b - k pi|`.
    pub fn distance(&self, other: &MomentumClass) -> f64 {
        class_distance(self.representative, other.representative)
    }

    /// Distance to the class `[0]`.
    pub fn norm(&self) -> f64 {
        class_distance(self.representative, 0.0)
    }
}

pub fn class_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(PI);
    r.min(PI - r)
}

/// The pieces of the momentum over a column window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumParts {
    /// `Q(mean profile)`.
    pub mean_part: f64,
    /// `Q(psi) - Q(mean profile)`, the remainder term.
    pub remainder_part: f64,
    pub arg_lo: f64,
    pub arg_hi: f64,
}

impl MomentumParts {
    pub fn representative(&self) -> f64 {
        self.mean_part + self.remainder_part - 0.5 * (self.arg_hi - self.arg_lo)
    }

    /// Shifts the boundary arguments by multiples of `2 pi` to the values
    /// nearest those of `reference`, so that a representative can be
    /// followed continuously along a path of fields.
    pub fn unwrapped_to(&self, reference: &MomentumParts) -> MomentumParts {
        let near = |a: f64, r: f64| a + 2.0 * PI * ((r - a) / (2.0 * PI)).round();
        MomentumParts {
            arg_lo: near(self.arg_lo, reference.arg_lo),
            arg_hi: near(self.arg_hi, reference.arg_hi),
            ..*self
        }
    }
}

pub(crate) fn column_mean(f: &Field2D, i: usize) -> Complex64 {
    f.column(i).iter().sum::<Complex64>() / f.grid().ny() as f64
}

fn checked_mean(f: &Field2D, i: usize) -> Result<Complex64> {
    let m = column_mean(f, i);
    if m.norm() <= VACUUM_MODULUS {
        return Err(Error::EndpointVacuum {
            x: f.grid().x(i),
            modulus: m.norm(),
        });
    }
    Ok(m)
}

/// Momentum pieces on the columns `lo..=hi`.
pub fn momentum_parts(f: &Field2D, lo: usize, hi: usize) -> Result<MomentumParts> {
    let m_lo = checked_mean(f, lo)?;
    let m_hi = checked_mean(f, hi)?;
    let ny = f.grid().ny() as f64;
    let edges = par::map_range(hi - lo, |k| {
        let i = lo + k;
        let (a, b) = (f.column(i), f.column(i + 1));
        let full: f64 = a.iter().zip(b).map(|(x, y)| (x.conj() * y).im).sum::<f64>() / ny;
        let ma: Complex64 = a.iter().sum::<Complex64>() / ny;
        let mb: Complex64 = b.iter().sum::<Complex64>() / ny;
        let mean = (ma.conj() * mb).im;
        (0.5 * mean, 0.5 * (full - mean))
    });
    let (mut mean_part, mut remainder_part) = (0.0, 0.0);
    for (m, r) in edges {
        mean_part += m;
        remainder_part += r;
    }
    Ok(MomentumParts {
        mean_part,
        remainder_part,
        arg_lo: m_lo.arg(),
        arg_hi: m_hi.arg(),
    })
}

pub fn momentum(f: &Field2D) -> Result<MomentumClass> {
    let parts = momentum_parts(f, 0, f.grid().nx() - 1)?;
    Ok(MomentumClass::new(parts.representative()))
}

/// `[P_R]`: the momentum of the window `|x| <= r`, with boundary arguments
/// taken at the window edges.
pub fn windowed_momentum(f: &Field2D, r: f64) -> Result<MomentumClass> {
    let (lo, hi) = f.grid().window(r)?;
    Ok(MomentumClass::new(momentum_parts(f, lo, hi)?.representative()))
}

/// Exact gradient of the representative, including the boundary-argument
/// terms: `dP = Re sum conj(grad) dpsi`.
pub fn momentum_gradient(f: &Field2D) -> Result<Field2D> {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let m_lo = checked_mean(f, 0)?;
    let m_hi = checked_mean(f, nx - 1)?;
    let i = Complex64::i();
    let scale = 0.5 / ny as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    par::for_each_chunk_mut(&mut values, ny, |c, out| {
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            if c + 1 < nx {
                acc -= i * f.column(c + 1)[j];
            }
            if c > 0 {
                acc += i * f.column(c - 1)[j];
            }
            *o = acc * scale;
        }
        if c == 0 {
            let t = i * m_lo / m_lo.norm_sqr() * scale;
            out.iter_mut().for_each(|o| *o += t);
        }
        if c == nx - 1 {
            let t = i * m_hi / m_hi.norm_sqr() * scale;
            out.iter_mut().for_each(|o| *o -= t);
        }
    });
    Field2D::new(g, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{pairing, Grid};
    use crate::soliton1d::{dark_soliton, xi};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn soliton_field(c: f64, g: Grid) -> Field2D {
        let profile: Vec<_> = (0..g.nx()).map(|i| dark_soliton(c, g.x(i)).unwrap()).collect();
        Field2D::from_profile(g, &profile).unwrap()
    }

    fn random_field(g: Grid, seed: u64) -> Field2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field2D::from_fn(g, |_, _| {
            Complex64::new(1.0 + 0.4 * rng.gen_range(-1.0..1.0), 0.4 * rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn class_metric() {
        let a = MomentumClass::new(0.1);
        let b = MomentumClass::new(PI - 0.1);
        assert!((a.distance(&b) - 0.2).abs() < 1e-15);
        assert!((MomentumClass::new(3.0 * PI + 0.5).reduced() - 0.5).abs() < 1e-12);
        assert!((MomentumClass::new(-0.3).norm() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn soliton_momentum_is_xi() {
        let g = Grid::new(30.0, 4096, 1.0, 4).unwrap();
        for &c in &[0.0, 0.5, 1.0, 1.3, -0.7] {
            let p = momentum(&soliton_field(c, g)).unwrap();
            assert!(p.distance(&MomentumClass::new(xi(c).unwrap())) < 1e-4, "c = {c}");
        }
    }

    #[test]
    fn unit_constant_has_zero_momentum() {
        let g = Grid::new(5.0, 32, 1.0, 8).unwrap();
        let f = Field2D::constant(g, Complex64::from_polar(1.0, 2.0));
        assert!(momentum(&f).unwrap().norm() < 1e-15);
        let zero = Field2D::constant(g, Complex64::new(0.0, 0.0));
        assert!(matches!(momentum(&zero), Err(Error::EndpointVacuum { .. })));
    }

    #[test]
    fn phase_and_conjugation() {
        let g = Grid::new(4.0, 40, 1.0, 8).unwrap();
        let f = random_field(g, 5);
        let p = momentum(&f).unwrap();
        assert!(p.distance(&momentum(&f.rotate_phase(1.1)).unwrap()) < 1e-13);
        let q = momentum(&f.conj()).unwrap();
        assert!(q.distance(&MomentumClass::new(-p.representative())) < 1e-13);
    }

    #[test]
    fn windowed_momentum_approaches_xi() {
        let g = Grid::new(30.0, 4096, 1.0, 4).unwrap();
        let f = soliton_field(0.5, g);
        let full = momentum(&f).unwrap();
        assert_eq!(windowed_momentum(&f, 30.0).unwrap(), full);
        let w = windowed_momentum(&f, 10.0).unwrap();
        assert!(w.distance(&MomentumClass::new(xi(0.5).unwrap())) < 1e-3);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Grid::new(3.0, 20, 0.8, 8).unwrap();
        let f = random_field(g, 21);
        let dir = random_field(g, 22);
        let grad = momentum_gradient(&f).unwrap();
        let exact = pairing(grad.values(), dir.values());
        let t = 1e-5;
        let plus = momentum_parts(&f.axpy(t, dir.values()), 0, g.nx() - 1).unwrap();
        let minus = momentum_parts(&f.axpy(-t, dir.values()), 0, g.nx() - 1).unwrap();
        let fd = (plus.representative() - minus.representative()) / (2.0 * t);
        assert!(((fd - exact) / exact).abs() < 1e-6, "{fd} vs {exact}");
    }

    #[test]
    fn gradient_symmetries() {
        let g = Grid::new(5.0, 32, 1.0, 8).unwrap();
        let unit = Field2D::constant(g, Complex64::from_polar(1.0, 0.3));
        let grad = momentum_gradient(&unit).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); g.len()];
        let is = vec![Complex64::new(0.0, 1.0); g.len()];
        assert!(pairing(grad.values(), &ones).abs() < 1e-14);
        assert!(pairing(grad.values(), &is).abs() < 1e-14);
        let f = soliton_field(0.4, g);
        assert_eq!(momentum_gradient(&f).unwrap().y_variation(), 0.0);
    }

    #[test]
    fn remainder_part_vanishes_for_planar_fields() {
        let g = Grid::new(10.0, 200, 1.0, 8).unwrap();
        let parts = momentum_parts(&soliton_field(0.2, g), 0, g.nx() - 1).unwrap();
        assert!(parts.remainder_part.abs() < 1e-15);
    }

    #[test]
    fn unwrapping_follows_reference() {
        let a = MomentumParts {
            mean_part: 0.0,
            remainder_part: 0.0,
            arg_lo: 3.1,
            arg_hi: 0.0,
        };
        let b = MomentumParts { arg_lo: -3.1, ..a };
        let u = b.unwrapped_to(&a);
        assert!((u.arg_lo - (2.0 * PI - 3.1)).abs() < 1e-15);
        assert!((u.representative() - a.representative()).abs() < 0.1);
    }
}
