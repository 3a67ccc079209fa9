//! The predicate battery run by `gpcyl verify`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RunConfig;
use crate::constructions::{
    find_oscillation_interval, glue, slice_momentum, strip_energy, symmetrize, GlueSpec, StripIndex,
};
use crate::field::{anisotropic_energy, energy, momentum, Field2D, Grid, LoopTrace};
use crate::soliton1d::energy_1d;
use crate::sweep::{self, CurveSample, PredicateReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl From<PredicateReport> for Check {
    fn from(r: PredicateReport) -> Self {
        let detail = format!(
            "worst_margin={:.6e} at={} tolerance={:.3e} checked={} skipped={}",
            r.worst_margin,
            if r.worst_at.is_empty() { "-" } else { &r.worst_at },
            r.tolerance,
            r.checked,
            r.skipped
        );
        Check::new(r.name, r.passed, detail)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng) -> Field2D {
    Field2D::from_fn(g, |_, _| {
        Complex64::new(1.0 + 0.3 * rng.gen_range(-1.0..1.0), 0.3 * rng.gen_range(-1.0..1.0))
    })
}

/// Closed-form curve predicates, the scaling identity and the
/// construction identities; runs in well under a second.
pub fn fast_battery() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let n = 16;
    let curve: Vec<CurveSample> = (1..n)
        .map(|k| CurveSample::from_planar_curve(k as f64 * PI / n as f64, 1.0))
        .collect();
    for mut c in [
        Check::from(sweep::check_concavity(&curve, 1e-10)?),
        Check::from(sweep::check_subadditivity(&curve, 0.0)?),
        Check::from(sweep::lipschitz_check(&curve, 1e-10)?),
    ] {
        c.name = format!("closed_form_{}", c.name);
        out.push(c);
    }

    let ratios: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&p| energy_1d(p) / (SQRT_2 * p)).collect();
    let ok = ratios.windows(2).all(|w| w[1] > w[0]) && ratios.iter().all(|&r| r < 1.0);
    out.push(Check::new("closed_form_small_p", ok, format!("ratios={ratios:?}")));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for ell in [0.5, 1.0, 2.0] {
        for _ in 0..10 {
            let f = random_field(Grid::new(3.0, 24, ell, 8)?, &mut rng);
            let unit = f.with_grid(f.grid().with_ell(1.0)?)?;
            worst = worst.max((anisotropic_energy(&unit, 1.0 / ell)? - energy(&f)).abs());
        }
    }
    out.push(Check::new(
        "scaling_identity",
        worst < 1e-10,
        format!("max_error={worst:.3e}"),
    ));

    let mut worst_e = 0.0f64;
    let mut worst_p = 0.0f64;
    let g = Grid::new(3.0, 24, 1.3, 16)?;
    for _ in 0..5 {
        let mut f = random_field(g, &mut rng);
        let (ny, last) = (g.ny(), g.nx() - 1);
        let v = f.values_mut();
        for j in 1..ny {
            v[j] = v[0];
            v[last * ny + j] = v[last * ny];
        }
        for strip in StripIndex::partition(2)? {
            let s = symmetrize(&f, strip)?;
            worst_e = worst_e.max((energy(&s) - strip_energy(&f, strip)?).abs());
            let (a, b) = strip.interval(g.ell());
            worst_p = worst_p.max(momentum(&s)?.distance(&slice_momentum(&f, a, b)?));
        }
    }
    out.push(Check::new(
        "symmetrize_identities",
        worst_e < 1e-12 && worst_p < 1e-12,
        format!("energy_error={worst_e:.3e} momentum_error={worst_p:.3e}"),
    ));

    let ell = 2.0;
    let cells = 64;
    let h = ell / cells as f64;
    let k = 2.0 * PI / ell;
    let q: Vec<f64> = (0..cells)
        .map(|j| ((k * j as f64 * h).cos() - (k * (j + 1) as f64 * h).cos()) / (k * h))
        .collect();
    let max_mean = 4.0 / PI * (PI / 4.0).sin();
    let hit = find_oscillation_interval(&q, ell, 4, 0.5 * max_mean)?.is_some();
    let miss = find_oscillation_interval(&q, ell, 4, 1.01 * max_mean)?.is_none();
    out.push(Check::new(
        "oscillation_interval",
        hit && miss,
        format!("hit={hit} none_beyond_max={miss}"),
    ));

    let lm = LoopTrace::from_fn(16, 1.0, |y| {
        Complex64::from_polar(1.0 - 0.01 * (2.0 * PI * y).cos(), 0.3)
    })?;
    let lp = LoopTrace::from_fn(16, 1.0, |y| {
        Complex64::from_polar(1.0, 2.0 + 0.02 * (2.0 * PI * y).sin())
    })?;
    let f = glue(&GlueSpec {
        loop_minus: lm.clone(),
        loop_plus: lp.clone(),
        half_width: 4.0,
        nx: 129,
    })?;
    let exact = f.column(0) == lm.values() && f.column(128) == lp.values();
    out.push(Check::new("glue_traces", exact, format!("exact={exact}")));
    Ok(out)
}

/// Swept-curve checks on the configured grid at `cfg.ell`.
pub fn swept_battery(cfg: &RunConfig, jobs: usize) -> anyhow::Result<Vec<Check>> {
    let setup = cfg.sweep_setup(jobs)?;
    let curve = sweep::sweep_momentum(cfg.ell, &cfg.momenta(), &setup)?;
    let tol = curve
        .iter()
        .filter(|s| s.converged)
        .map(|s| s.tolerance)
        .fold(0.0, f64::max);
    let unconverged = curve.iter().filter(|s| !s.converged).count();
    let mut out = vec![Check::new(
        "sweep_converged",
        unconverged == 0,
        format!("points={} unconverged={unconverged}", curve.len()),
    )];
    let (planar, sonic) = sweep::check_upper_bounds(&curve, cfg.tol_1d);
    out.push(planar.into());
    out.push(sonic.into());
    out.push(sweep::check_concavity(&curve, 2.0 * tol)?.into());
    out.push(sweep::lipschitz_check(&curve, tol)?.into());
    if cfg.p_values.is_empty() {
        out.push(sweep::check_subadditivity(&curve, 0.0)?.into());
    }
    if !cfg.p_small.is_empty() {
        let r = sweep::check_small_p(cfg.ell, &cfg.p_small, &setup)?;
        let mut detail = format!(
            "ratios={:?} below_one={} increasing={}",
            r.ratios, r.below_one, r.increasing
        );
        for w in &r.warnings {
            detail.push_str(&format!(" warning=\"{w}\""));
        }
        out.push(Check::new("small_p", r.passed(), detail));
    }
    Ok(out)
}
