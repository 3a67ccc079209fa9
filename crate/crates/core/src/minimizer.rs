//! Energy minimization on the momentum level set `P(psi) = p`.
//!
//! The iteration is a preconditioned limited-memory quasi-Newton method on
//! the constraint manifold: search directions are projected onto the
//! tangent space `<grad P, d> = 0` (in the preconditioner's metric), every
//! trial point is pulled back onto the level set by [`project_momentum`],
//! and a backtracking Armijo search on the energy makes the accepted
//! energies non-increasing.

use std::collections::VecDeque;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::energy::energy_and_gradient;
use crate::field::momentum::column_mean;
use crate::field::{
    momentum_gradient, momentum_parts, pairing, transverse_energy, Field2D, Grid, MomentumClass, MomentumParts,
};
use crate::precond::Preconditioner;
use crate::soliton1d::{dark_soliton, reduce_momentum, speed_from_momentum, SolitonParams};

/// The mean profile must keep at least this modulus at both ends.
pub const ENDPOINT_MODULUS: f64 = 0.5;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    pub residual_tol: f64,
    pub backtrack_factor: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iters: 4000,
            grad_tol: 1e-8,
            constraint_tol: 1e-10,
            residual_tol: 1e-6,
            backtrack_factor: 0.5,
            memory: 8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step", self.step),
            ("grad_tol", self.grad_tol),
            ("constraint_tol", self.constraint_tol),
            ("residual_tol", self.residual_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Domain(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub multiplier: f64,
    pub grad_norm: f64,
    pub momentum_error: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub field: Field2D,
    pub multiplier: f64,
    pub energy: f64,
    pub momentum: MomentumClass,
    pub el_residual: f64,
    pub transverse_energy: f64,
    /// `|grad E - c grad P|` at the returned field.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

impl MinimizeResult {
    /// `transverse_energy / energy`, zero for the trivial branch.
    pub fn transverse_fraction(&self) -> f64 {
        if self.energy > 0.0 {
            self.transverse_energy / self.energy
        } else {
            0.0
        }
    }

    /// Whether the multiplier is subsonic; supersonic values are anomalous
    /// but not treated as failures.
    pub fn is_subsonic(&self) -> bool {
        self.multiplier.is_nan() || self.multiplier.abs() < SQRT_2
    }
}

/// The planar soliton of momentum `[p]`, extended independently of `y`.
pub fn init_planar(p: f64, grid: &Grid) -> Field2D {
    let q = reduce_momentum(p);
    if q == 0.0 {
        return Field2D::constant(*grid, Complex64::new(1.0, 0.0));
    }
    let c = speed_from_momentum(q);
    let profile: Vec<_> = (0..grid.nx())
        .map(|i| dark_soliton(c, grid.x(i)).expect("speed lies in the soliton range"))
        .collect();
    Field2D::from_profile(*grid, &profile).expect("finite soliton samples")
}

/// [`init_planar`] plus `amplitude (1 + i)/sqrt(2) sech(b x) cos(2 pi mode y / ell)`
/// with `b` the inverse core width of the soliton.
pub fn init_perturbed(p: f64, grid: &Grid, amplitude: f64, mode: usize) -> Result<Field2D> {
    if mode == 0 {
        return Err(Error::Domain("perturbation mode must be at least 1".into()));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::Domain(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    let base = init_planar(p, grid);
    if amplitude == 0.0 {
        return Ok(base);
    }
    let rate = SolitonParams::from_momentum(p).core_rate();
    let k = 2.0 * PI * mode as f64 / grid.ell();
    let dir = Complex64::new(1.0, 1.0) / SQRT_2;
    let bump = Field2D::from_fn(*grid, |x, y| dir * (amplitude * (k * y).cos() / (rate * x).cosh()));
    Ok(base.axpy(1.0, bump.values()))
}

/// Moves `f` onto the level set whose representative is the one congruent
/// to `p` mod pi nearest the current momentum of `f`, by Newton steps along
/// the preconditioned momentum gradient.
pub fn project_momentum(f: &Field2D, p: f64, tol: f64) -> Result<Field2D> {
    let parts = momentum_parts(f, 0, f.grid().nx() - 1)?;
    let target = nearest_representative(p, parts.representative());
    let pre = Preconditioner::new(*f.grid(), 1.0);
    Ok(project(f, target, &parts, &pre, tol)?.0)
}

fn nearest_representative(p: f64, near: f64) -> f64 {
    p + PI * ((near - p) / PI).round()
}

fn full_parts(f: &Field2D, reference: &MomentumParts) -> Result<MomentumParts> {
    Ok(momentum_parts(f, 0, f.grid().nx() - 1)?.unwrapped_to(reference))
}

fn project(
    f: &Field2D,
    target: f64,
    reference: &MomentumParts,
    pre: &Preconditioner,
    tol: f64,
) -> Result<(Field2D, MomentumParts)> {
    let inner = (1e-2 * tol).max(1e-14);
    let mut cur = f.clone();
    let mut parts = full_parts(&cur, reference)?;
    for _ in 0..60 {
        let err = parts.representative() - target;
        if err.abs() <= inner {
            return Ok((cur, parts));
        }
        let gp = momentum_gradient(&cur)?;
        let z = pre.apply_inverse(&gp);
        let slope = pairing(gp.values(), z.values());
        if !(slope > 1e-300) || !slope.is_finite() {
            return Err(Error::ConstraintUnreachable(
                "momentum gradient vanishes; no direction changes the momentum".into(),
            ));
        }
        cur = cur.axpy(-err / slope, z.values());
        parts = full_parts(&cur, &parts)?;
    }
    let err = parts.representative() - target;
    if err.abs() <= tol {
        Ok((cur, parts))
    } else {
        Err(Error::ConstraintUnreachable(format!(
            "Newton projection stalled at momentum error {err:e}"
        )))
    }
}

/// `sqrt((1/ny) sum_interior hx |Lap f + f (1 - |f|^2) - i c D_x f|^2)`.
pub fn el_residual(f: &Field2D, c: f64) -> f64 {
    let g = f.grid();
    let (nx, ny, hx) = (g.nx(), g.ny(), g.hx());
    let total = crate::par::sum_range(nx - 2, |k| {
        let i = k + 1;
        let mut acc = 0.0;
        for j in 0..ny {
            acc += residual_at(f, c, i, j).norm_sqr();
        }
        acc
    });
    (total * hx / ny as f64).sqrt()
}

fn residual_at(f: &Field2D, c: f64, i: usize, j: usize) -> Complex64 {
    let g = f.grid();
    let (ny, hx, hy) = (g.ny(), g.hx(), g.hy());
    let z = f.at(i, j);
    let (l, r) = (f.at(i - 1, j), f.at(i + 1, j));
    let (d, u) = (f.at(i, (j + ny - 1) % ny), f.at(i, (j + 1) % ny));
    let lap = (l - z * 2.0 + r) / (hx * hx) + (d - z * 2.0 + u) / (hy * hy);
    let dx = (r - l) / (2.0 * hx);
    lap + z * (1.0 - z.norm_sqr()) - Complex64::i() * dx * c
}

/// Least-squares speed `c` minimizing the residual norm of [`el_residual`].
pub fn multiplier_estimate(f: &Field2D) -> Result<f64> {
    let g = f.grid();
    let (nx, ny, hx) = (g.nx(), g.ny(), g.hx());
    let sums = crate::par::map_range(nx - 2, |k| {
        let i = k + 1;
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..ny {
            let r = residual_at(f, 0.0, i, j);
            let idx = Complex64::i() * (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * hx);
            num += r.re * idx.re + r.im * idx.im;
            den += idx.norm_sqr();
        }
        (num, den)
    });
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in sums {
        num += a;
        den += b;
    }
    if !(den > 1e-24 * (nx * ny) as f64) {
        return Err(Error::Degenerate("d_x f vanishes; multiplier undefined".into()));
    }
    Ok(num / den)
}

struct State {
    field: Field2D,
    parts: MomentumParts,
    energy: f64,
    grad_e: Field2D,
    grad_p: Field2D,
    /// `M^{-1} grad P`
    pre_p: Field2D,
    /// `<grad P, M^{-1} grad P>`
    p_norm: f64,
    multiplier: f64,
    /// `grad E - c grad P`
    reduced: Vec<Complex64>,
}

impl State {
    fn new(field: Field2D, parts: MomentumParts, pre: &Preconditioner) -> Result<Self> {
        check_endpoints(&field)?;
        let (energy, grad_e) = energy_and_gradient(&field);
        let grad_p = momentum_gradient(&field)?;
        let pre_p = pre.apply_inverse(&grad_p);
        let p_norm = pairing(grad_p.values(), pre_p.values());
        if !(p_norm > 0.0) {
            return Err(Error::ConstraintUnreachable("momentum gradient vanishes".into()));
        }
        let multiplier = pairing(grad_e.values(), pre_p.values()) / p_norm;
        let reduced = grad_e
            .values()
            .iter()
            .zip(grad_p.values())
            .map(|(a, b)| a - b * multiplier)
            .collect();
        Ok(Self {
            field,
            parts,
            energy,
            grad_e,
            grad_p,
            pre_p,
            p_norm,
            multiplier,
            reduced,
        })
    }

    fn grad_norm(&self) -> f64 {
        pairing(&self.reduced, &self.reduced).sqrt()
    }

    /// Removes the component of `d` that changes the momentum to first order.
    fn to_tangent(&self, d: &mut [Complex64]) {
        let t = pairing(self.grad_p.values(), d) / self.p_norm;
        for (x, z) in d.iter_mut().zip(self.pre_p.values()) {
            *x -= z * t;
        }
    }
}

fn check_endpoints(f: &Field2D) -> Result<()> {
    let g = f.grid();
    for i in [0, g.nx() - 1] {
        let m = column_mean(f, i).norm();
        if m < ENDPOINT_MODULUS {
            return Err(Error::EndpointVacuum { x: g.x(i), modulus: m });
        }
    }
    Ok(())
}

struct CurvaturePair {
    s: Vec<Complex64>,
    y: Vec<Complex64>,
    rho: f64,
}

fn lbfgs_direction(
    state: &State,
    memory: &VecDeque<CurvaturePair>,
    gamma: f64,
    pre: &Preconditioner,
) -> Vec<Complex64> {
    let mut q = state.reduced.clone();
    let mut alphas = Vec::with_capacity(memory.len());
    for pair in memory.iter().rev() {
        let a = pair.rho * pairing(&pair.s, &q);
        for (x, y) in q.iter_mut().zip(&pair.y) {
            *x -= y * a;
        }
        alphas.push(a);
    }
    let qf = Field2D::new(*state.field.grid(), q).expect("finite direction");
    let mut z: Vec<Complex64> = pre.apply_inverse(&qf).into_values();
    z.iter_mut().for_each(|x| *x *= gamma);
    for (pair, a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * pairing(&pair.y, &z);
        for (x, s) in z.iter_mut().zip(&pair.s) {
            *x += s * (a - b);
        }
    }
    z.iter_mut().for_each(|x| *x = -*x);
    z
}

fn trivial_result(grid: &Grid) -> MinimizeResult {
    let field = Field2D::constant(*grid, Complex64::new(1.0, 0.0));
    MinimizeResult {
        field,
        multiplier: f64::NAN,
        energy: 0.0,
        momentum: MomentumClass::new(0.0),
        el_residual: 0.0,
        transverse_energy: 0.0,
        grad_norm: 0.0,
        iterations: 0,
        converged: true,
        trace: Vec::new(),
    }
}

/// Minimizes the energy over fields of momentum class `[p]` starting from
/// `seed`. The class `[0]` short-circuits to the unimodular constant.
pub fn minimize(p: f64, grid: &Grid, cfg: &SolverConfig, seed: &Field2D) -> Result<MinimizeResult> {
    cfg.validate()?;
    if seed.grid() != grid {
        return Err(Error::Domain("seed lives on a different grid".into()));
    }
    if reduce_momentum(p) == 0.0 {
        return Ok(trivial_result(grid));
    }
    let pre = Preconditioner::new(*grid, 1.0);
    check_endpoints(seed)?;
    let seed_parts = momentum_parts(seed, 0, grid.nx() - 1)?;
    let target = nearest_representative(p, seed_parts.representative());
    let (field, parts) = project(seed, target, &seed_parts, &pre, cfg.constraint_tol)?;
    let mut state = State::new(field, parts, &pre)?;

    let mut memory: VecDeque<CurvaturePair> = VecDeque::new();
    let mut gamma = 1.0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut residual;
    let mut iterations = 0;
    loop {
        residual = el_residual(&state.field, state.multiplier);
        let grad_norm = state.grad_norm();
        let grad_ok = grad_norm <= cfg.grad_tol * (1.0 + pairing(state.grad_e.values(), state.grad_e.values()).sqrt());
        let constraint_ok = (state.parts.representative() - target).abs() <= cfg.constraint_tol;
        if grad_ok && residual <= cfg.residual_tol && constraint_ok {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        iterations += 1;

        let mut step_taken = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if memory.is_empty() {
                    break;
                }
                memory.clear();
                gamma = 1.0;
            }
            let mut d = if memory.is_empty() {
                let rf = Field2D::new(*grid, state.reduced.clone()).expect("finite gradient");
                pre.apply_inverse(&rf).into_values().into_iter().map(|z| -z).collect()
            } else {
                lbfgs_direction(&state, &memory, gamma, &pre)
            };
            state.to_tangent(&mut d);
            let mut slope = pairing(state.grad_e.values(), &d);
            if !(slope < 0.0) {
                memory.clear();
                gamma = 1.0;
                let rf = Field2D::new(*grid, state.reduced.clone()).expect("finite gradient");
                d = pre.apply_inverse(&rf).into_values().into_iter().map(|z| -z).collect();
                state.to_tangent(&mut d);
                slope = pairing(state.grad_e.values(), &d);
                if !(slope < 0.0) {
                    break;
                }
            }
            let mut t = cfg.step;
            for _ in 0..MAX_BACKTRACKS {
                let trial = state.field.axpy(t, &d);
                if let Ok((f, parts)) = project(&trial, target, &state.parts, &pre, cfg.constraint_tol) {
                    if let Ok(next) = State::new(f, parts, &pre) {
                        if next.energy <= state.energy + ARMIJO * t * slope && next.energy <= state.energy {
                            step_taken = Some((t, next));
                            break;
                        }
                    }
                }
                t *= cfg.backtrack_factor;
            }
            if step_taken.is_some() {
                break;
            }
        }
        let Some((t, next)) = step_taken else {
            break;
        };

        let s: Vec<Complex64> = next
            .field
            .values()
            .iter()
            .zip(state.field.values())
            .map(|(a, b)| a - b)
            .collect();
        let y: Vec<Complex64> = next.reduced.iter().zip(&state.reduced).map(|(a, b)| a - b).collect();
        let sy = pairing(&s, &y);
        if sy > 1e-14 * pairing(&s, &s).sqrt() * pairing(&y, &y).sqrt() && sy > 0.0 {
            let yf = Field2D::new(*grid, y.clone()).expect("finite difference");
            let my = pre.apply_inverse(&yf);
            gamma = sy / pairing(&y, my.values());
            memory.push_back(CurvaturePair { s, y, rho: 1.0 / sy });
            if memory.len() > cfg.memory {
                memory.pop_front();
            }
        }
        state = next;
        trace.push(IterationRecord {
            iteration: iterations,
            energy: state.energy,
            multiplier: state.multiplier,
            grad_norm: state.grad_norm(),
            momentum_error: state.parts.representative() - target,
            step: t,
        });
    }
    let grad_norm = state.grad_norm();
    Ok(MinimizeResult {
        transverse_energy: transverse_energy(&state.field),
        multiplier: state.multiplier,
        energy: state.energy,
        momentum: MomentumClass::new(state.parts.representative()),
        el_residual: residual,
        grad_norm,
        iterations,
        converged,
        trace,
        field: state.field,
    })
}
