//! Slice-and-mirror symmetrization over dyadic strips, the oscillation
//! interval search, affine gluing of boundary loops and energy-slice
//! selection.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::energy::window_weight;
use crate::field::{
    energy_parts, kappa, lift_loop, mean_profile, momentum_parts, windowed_momentum, Field2D, Grid, LoopTrace,
    MomentumClass,
};
use crate::par;

/// The strip `J_k = [k h, (k + 1) h]` with `h = ell / 2^level`.
///
/// On the grid, a strip spans rows `k m ..= (k + 1) m` with `m = ny / 2^level`
/// (both boundary rows included). Mirroring about the upper boundary row
/// gives a field of period `2 m` rows, so `level >= 1` and `m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StripIndex {
    pub level: u32,
    pub index: usize,
}

impl StripIndex {
    pub fn new(level: u32, index: usize) -> Result<Self> {
        if level == 0 || level >= usize::BITS {
            return Err(Error::IncompatibleStrip(format!(
                "level {level}: the mirror period 2h must divide ell, so level >= 1"
            )));
        }
        if index >= 1usize << level {
            return Err(Error::IncompatibleStrip(format!(
                "index {index} out of range for level {level}"
            )));
        }
        Ok(Self { level, index })
    }

    /// Rows per strip on `grid`.
    pub fn rows(&self, grid: &Grid) -> Result<usize> {
        let parts = 1usize << self.level;
        if parts > grid.ny() {
            return Err(Error::IncompatibleStrip(format!(
                "2^{} strips do not fit {} rows",
                self.level,
                grid.ny()
            )));
        }
        Ok(grid.ny() / parts)
    }

    /// `[a, b]` in `y`.
    pub fn interval(&self, ell: f64) -> (f64, f64) {
        let h = ell / (1usize << self.level) as f64;
        (self.index as f64 * h, (self.index + 1) as f64 * h)
    }

    /// All strips of a dyadic level.
    pub fn partition(level: u32) -> Result<Vec<StripIndex>> {
        StripIndex::new(level, 0)?;
        Ok((0..1usize << level).map(|index| StripIndex { level, index }).collect())
    }
}

/// Restricts `f` to the strip, mirrors it onto the next strip and extends
/// the result periodically in `y`.
pub fn symmetrize(f: &Field2D, strip: StripIndex) -> Result<Field2D> {
    let g = *f.grid();
    let m = strip.rows(&g)?;
    let ny = g.ny();
    let base = strip.index * m;
    let source: Vec<usize> = (0..ny)
        .map(|r| {
            let t = (r + 2 * ny - base) % (2 * m);
            let s = if t <= m { t } else { 2 * m - t };
            (base + s) % ny
        })
        .collect();
    let mut values = Vec::with_capacity(g.len());
    for i in 0..g.nx() {
        let col = f.column(i);
        values.extend(source.iter().map(|&s| col[s]));
    }
    Field2D::new(g, values)
}

/// Row-wise momentum density `Q(row) = (1/2) sum_i Im(conj(psi_i) psi_(i+1))`.
fn row_momenta(f: &Field2D) -> Vec<f64> {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut q = vec![0.0; ny];
    for i in 0..nx - 1 {
        let (a, b) = (f.column(i), f.column(i + 1));
        for j in 0..ny {
            q[j] += 0.5 * (a[j].conj() * b[j]).im;
        }
    }
    q
}

fn profile_momentum(profile: &[Complex64]) -> f64 {
    profile.windows(2).map(|w| 0.5 * (w[0].conj() * w[1]).im).sum()
}

fn snap_rows(grid: &Grid, a: f64, b: f64) -> Result<(usize, usize)> {
    if !(b > a) {
        return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
    }
    let hy = grid.hy();
    let ra = (a / hy).round();
    let rb = (b / hy).round();
    if !(rb > ra) || rb - ra > grid.ny() as f64 {
        return Err(Error::Domain(format!(
            "interval [{a}, {b}] snaps to rows [{ra}, {rb}], which is empty or longer than the period"
        )));
    }
    let start = ra.rem_euclid(grid.ny() as f64) as usize;
    Ok((start, start + (rb - ra) as usize))
}

/// Momentum of the slice family `{psi(., y) : y in [a, b]}`: the momentum
/// of the mean profile plus the trapezoid mean over rows of the slice
/// excess `Q(row) - Q(mean profile)`. Endpoints snap to grid rows.
///
/// With `[a, b] = T_ell` this is the momentum of `f`, and the strip
/// version is the momentum of [`symmetrize`] whenever the end columns of
/// `f` do not depend on `y`.
pub fn slice_momentum(f: &Field2D, a: f64, b: f64) -> Result<MomentumClass> {
    let g = *f.grid();
    let (lo, hi) = snap_rows(&g, a, b)?;
    let parts = momentum_parts(f, 0, g.nx() - 1)?;
    let q = row_momenta(f);
    let q_mean = profile_momentum(&mean_profile(f));
    let ny = g.ny();
    let mut acc = 0.0;
    for r in lo..=hi {
        let w = if r == lo || r == hi { 0.5 } else { 1.0 };
        acc += w * (q[r % ny] - q_mean);
    }
    let excess = acc / (hi - lo) as f64;
    Ok(MomentumClass::new(
        parts.mean_part - 0.5 * (parts.arg_hi - parts.arg_lo) + excess,
    ))
}

/// Per-row slice excess `Q(row) - Q(mean profile)` with its mean removed,
/// a zero-mean function on the `y` grid.
pub fn slice_momentum_profile(f: &Field2D) -> Vec<f64> {
    let q_mean = profile_momentum(&mean_profile(f));
    let mut q: Vec<f64> = row_momenta(f).into_iter().map(|v| v - q_mean).collect();
    let avg = q.iter().sum::<f64>() / q.len() as f64;
    q.iter_mut().for_each(|v| *v -= avg);
    q
}

/// Trapezoid mean of the energy density over the rows of the strip,
/// `(1/h) ∫_{J_k} ∫ e(f) dx dy`.
pub fn strip_energy(f: &Field2D, strip: StripIndex) -> Result<f64> {
    let g = *f.grid();
    let m = strip.rows(&g)?;
    let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
    let base = strip.index * m;
    let total = par::sum_range(nx, |i| {
        let w = window_weight(i, 0, nx - 1, hx);
        let col = f.column(i);
        let mut acc = 0.0;
        for s in 0..=m {
            let r = (base + s) % ny;
            let rw = if s == 0 || s == m { 0.5 } else { 1.0 };
            let mut node = w * 0.25 * (1.0 - col[r].norm_sqr()).powi(2);
            if i + 1 < nx {
                node += 0.5 * (f.column(i + 1)[r] - col[r]).norm_sqr() / hx;
            }
            acc += rw * node;
            if s < m {
                acc += w * 0.5 * (col[(r + 1) % ny] - col[r]).norm_sqr() / (hy * hy);
            }
        }
        acc
    });
    Ok(total / m as f64)
}

/// Finds a window `[s, s + ell/n]` on which the mean of `q` equals `delta`.
///
/// `q` is piecewise constant on the cells `[j hy, (j+1) hy)` and must have
/// zero mean. Window starts are scanned on the grid and a sign change of
/// `mean - delta` between consecutive starts is refined by bisection on the
/// exact piecewise-linear cumulative integral. Returns `None` when the
/// windowed mean never reaches `delta`.
pub fn find_oscillation_interval(q: &[f64], ell: f64, n: usize, delta: f64) -> Result<Option<(f64, f64)>> {
    if n == 0 {
        return Err(Error::Domain("number of windows must be at least 1".into()));
    }
    if q.is_empty() || !(ell > 0.0) {
        return Err(Error::Domain("empty profile or nonpositive period".into()));
    }
    let len = q.len();
    let sup = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = q.iter().sum::<f64>() / len as f64;
    if mean.abs() > 1e-10 * sup.max(1.0) {
        return Err(Error::Precondition(format!("profile mean {mean:e} is not zero")));
    }
    let hy = ell / len as f64;
    let width = ell / n as f64;
    let mut cumulative = Vec::with_capacity(len + 1);
    cumulative.push(0.0);
    for v in q {
        cumulative.push(cumulative.last().unwrap() + v * hy);
    }
    let total = cumulative[len];
    // integral of q over [0, t] for any real t, periodic extension
    let integral = |t: f64| {
        let periods = (t / ell).floor();
        let r = t - periods * ell;
        let cell = ((r / hy).floor() as usize).min(len - 1);
        periods * total + cumulative[cell] + q[cell] * (r - cell as f64 * hy)
    };
    let excess = |s: f64| (integral(s + width) - integral(s)) / width - delta;
    let tol = 1e-12 * sup.max(delta.abs()).max(1e-300);
    let mut prev = excess(0.0);
    if prev.abs() <= tol {
        return Ok(Some((0.0, width)));
    }
    for j in 1..=len {
        let s = j as f64 * hy;
        let cur = excess(s);
        if cur.abs() <= tol {
            let s = if j == len { 0.0 } else { s };
            return Ok(Some((s, s + width)));
        }
        if (prev < 0.0) != (cur < 0.0) {
            let (mut a, mut b, mut fa) = ((j - 1) as f64 * hy, s, prev);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = excess(mid);
                if fm.abs() <= tol || b - a <= 4.0 * f64::EPSILON * ell {
                    a = mid;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            return Ok(Some((a, a + width)));
        }
        prev = cur;
    }
    Ok(None)
}

/// Two boundary loops to be connected across `[-R, R] x T_ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlueSpec {
    pub loop_minus: LoopTrace,
    pub loop_plus: LoopTrace,
    pub half_width: f64,
    /// Number of x samples on `[-R, R]`.
    pub nx: usize,
}

impl GlueSpec {
    fn grid(&self) -> Result<Grid> {
        if !(self.half_width >= 2.0) {
            return Err(Error::Domain(format!(
                "glue half-width must be >= 2, got {}",
                self.half_width
            )));
        }
        let (a, b) = (&self.loop_minus, &self.loop_plus);
        if a.len() != b.len() || a.ell() != b.ell() {
            return Err(Error::Domain("boundary loops must share their sampling".into()));
        }
        Grid::new(self.half_width, self.nx, a.ell(), a.len())
    }
}

/// Modulus ramps to the loop moduli on the unit collars and a linear phase
/// across the bulk joining the mean phases, whose jump is reduced into
/// `[0, 2 pi)`. The end columns equal the input loops exactly.
pub fn glue(spec: &GlueSpec) -> Result<Field2D> {
    let g = spec.grid()?;
    let minus = lift_loop(&spec.loop_minus)?;
    let plus = lift_loop(&spec.loop_plus)?;
    let r = spec.half_width;
    let (hat_minus, hat_plus) = (minus.mean_phase(), plus.mean_phase());
    let jump = hat_plus - hat_minus;
    let k = (jump / (2.0 * PI)).floor();
    let reduced = jump - 2.0 * k * PI;
    let slope = reduced / (2.0 * (r - 1.0));
    let offset = 0.5 * (hat_plus + hat_minus + 2.0 * k * PI);
    let (nx, ny) = (g.nx(), g.ny());
    let mut values = Vec::with_capacity(g.len());
    for i in 0..nx {
        let x = g.x(i);
        for j in 0..ny {
            let z = if i == 0 {
                spec.loop_minus.values()[j]
            } else if i == nx - 1 {
                spec.loop_plus.values()[j]
            } else if x.abs() <= r - 1.0 {
                Complex64::from_polar(1.0, slope * x + offset)
            } else {
                let (lift, hat) = if x > 0.0 {
                    (&plus, hat_plus)
                } else {
                    (&minus, hat_minus)
                };
                let rho = 1.0 + (r - 1.0 - x.abs()) * (1.0 - lift.modulus[j]);
                let phi = lift.phase[j] + (r - x.abs()) * (hat - lift.phase[j]);
                Complex64::from_polar(rho, phi)
            };
            values.push(z);
        }
    }
    Field2D::new(g, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueMomentumReport {
    pub momentum: MomentumClass,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    /// `|[P_R]| / (kappa_minus + kappa_plus)^{1/2}`; zero when both vanish.
    pub ratio: f64,
}

pub fn glue_momentum_bound_check(spec: &GlueSpec) -> Result<GlueMomentumReport> {
    let f = glue(spec)?;
    let momentum = windowed_momentum(&f, spec.half_width)?;
    let kappa_minus = kappa(&spec.loop_minus);
    let kappa_plus = kappa(&spec.loop_plus);
    let size = momentum.norm();
    let denom = (kappa_minus + kappa_plus).sqrt();
    let ratio = if size <= 1e-13 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        size / denom
    };
    Ok(GlueMomentumReport {
        momentum,
        kappa_minus,
        kappa_plus,
        ratio,
    })
}

/// A radius with small transverse energy on the slices `x = +-R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSelection {
    pub radius: f64,
    /// `(1/ell) ∫ (e(f)(R, y) + e(f)(-R, y)) dy` at the chosen radius.
    pub slice_energy: f64,
    /// Trapezoid integral of the slice energy over the snapped bracket.
    pub shell_energy: f64,
    /// Length of the snapped bracket.
    pub shell_width: f64,
}

impl SliceSelection {
    pub fn shell_average(&self) -> f64 {
        self.shell_energy / self.shell_width
    }
}

/// y-averaged nodal energy density; each edge term is split evenly between
/// its two nodes.
fn column_density(f: &Field2D, i: usize) -> f64 {
    let g = f.grid();
    let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
    let col = f.column(i);
    let mut acc = 0.0;
    for j in 0..ny {
        let z = col[j];
        acc += 0.25 * (1.0 - z.norm_sqr()).powi(2);
        acc += 0.25 * (col[(j + 1) % ny] - z).norm_sqr() / (hy * hy);
        acc += 0.25 * (col[(j + ny - 1) % ny] - z).norm_sqr() / (hy * hy);
        let mut dx = 0.0;
        let mut count = 0.0;
        if i + 1 < nx {
            dx += (f.column(i + 1)[j] - z).norm_sqr();
            count += 1.0;
        }
        if i > 0 {
            dx += (f.column(i - 1)[j] - z).norm_sqr();
            count += 1.0;
        }
        acc += 0.5 * dx / count / (hx * hx);
    }
    acc / ny as f64
}

/// Scans the grid radii in `[r_lo, r_hi]` for the smallest slice energy,
/// which never exceeds the shell average.
pub fn energy_slice_select(f: &Field2D, r_lo: f64, r_hi: f64) -> Result<SliceSelection> {
    let g = *f.grid();
    if !(r_lo > 0.0 && r_lo < r_hi && r_hi <= g.half_length() * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "need 0 < r_lo < r_hi <= L, got [{r_lo}, {r_hi}] with L = {}",
            g.half_length()
        )));
    }
    let nx = g.nx();
    let hx = g.hx();
    let first = ((r_lo + g.half_length()) / hx - 1e-9).ceil() as usize;
    let last = (((r_hi + g.half_length()) / hx + 1e-9).floor() as usize).min(nx - 1);
    if last <= first || g.x(first) <= 0.0 {
        return Err(Error::Domain(format!(
            "bracket [{r_lo}, {r_hi}] holds fewer than two grid radii"
        )));
    }
    let slices: Vec<(f64, f64)> = (first..=last)
        .map(|i| (g.x(i), column_density(f, i) + column_density(f, nx - 1 - i)))
        .collect();
    let mut shell = 0.0;
    for w in slices.windows(2) {
        shell += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    let (radius, slice_energy) =
        slices
            .iter()
            .copied()
            .fold((f64::NAN, f64::INFINITY), |best, s| if s.1 < best.1 { s } else { best });
    Ok(SliceSelection {
        radius,
        slice_energy,
        shell_energy: shell,
        shell_width: slices[slices.len() - 1].0 - slices[0].0,
    })
}

/// Energy of the window `|x| <= R`, re-exported for gluing diagnostics.
pub fn glue_energy(f: &Field2D) -> f64 {
    energy_parts(f, 0, f.grid().nx() - 1).total()
}
