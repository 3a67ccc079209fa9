//! Sampling of `I_2d(p)` and the curve predicates: concavity,
//! sub-additivity, Lipschitz bound, small-momentum asymptotics and the
//! critical-length bisection.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::minimizer::{init_perturbed, init_planar, minimize, MinimizeResult, SolverConfig};
use crate::par;
use crate::soliton1d::{energy_1d, reduce_momentum, SolitonParams};

pub const CURVE_HEADER: &str = "p,ell,energy2d,multiplier,transverse_energy,converged,tolerance";

/// Which initial state a descent started from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedKind {
    Planar,
    /// Planar soliton plus a transverse bump in the given y-mode.
    Perturbed {
        mode: usize,
    },
}

impl fmt::Display for SeedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedKind::Planar => write!(f, "planar"),
            SeedKind::Perturbed { mode } => write!(f, "perturbed-m{mode}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedOutcome {
    pub seed: SeedKind,
    pub energy: f64,
    pub multiplier: f64,
    pub transverse_energy: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|c| constraint_tol + el_residual`, a first-order bound on the
    /// energy error of the point.
    pub tolerance: f64,
}

impl SeedOutcome {
    fn from_result(seed: SeedKind, r: &MinimizeResult, cfg: &SolverConfig) -> Self {
        let c = if r.multiplier.is_nan() { 0.0 } else { r.multiplier };
        Self {
            seed,
            energy: r.energy,
            multiplier: r.multiplier,
            transverse_energy: r.transverse_energy,
            el_residual: r.el_residual,
            iterations: r.iterations,
            converged: r.converged,
            tolerance: c.abs() * cfg.constraint_tol + r.el_residual,
        }
    }

    pub fn transverse_fraction(&self) -> f64 {
        if self.energy > 0.0 {
            self.transverse_energy / self.energy
        } else {
            0.0
        }
    }
}

/// Grid, solver settings and seed set shared by every point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    /// Template grid; its `ell` is replaced per run where relevant.
    pub grid: Grid,
    pub solver: SolverConfig,
    /// Perturbation amplitude relative to the soliton depth.
    pub amplitude: f64,
    /// Total seeds per point: one planar and `seeds - 1` perturbed ones in
    /// modes `1, 2, ...`.
    pub seeds: usize,
    pub jobs: usize,
}

impl SweepSetup {
    pub fn new(grid: Grid, solver: SolverConfig) -> Self {
        Self {
            grid,
            solver,
            amplitude: 0.05,
            seeds: 2,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.seeds < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 seeds per point, got {}",
                self.seeds
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Domain(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if self.jobs == 0 {
            return Err(Error::Domain("jobs must be at least 1".into()));
        }
        Ok(())
    }

    fn seed_kinds(&self) -> Vec<SeedKind> {
        std::iter::once(SeedKind::Planar)
            .chain((1..self.seeds).map(|mode| SeedKind::Perturbed { mode }))
            .collect()
    }
}

/// Runs every seed at `(p, ell)` and returns the outcomes together with
/// the field of the lowest converged energy, if any.
pub fn run_point(p: f64, ell: f64, setup: &SweepSetup) -> Result<(Vec<SeedOutcome>, Option<MinimizeResult>)> {
    let grid = setup.grid.with_ell(ell)?;
    let depth = SolitonParams::from_momentum(p).depth();
    let mut outcomes = Vec::new();
    let mut best: Option<MinimizeResult> = None;
    for kind in setup.seed_kinds() {
        let seed = match kind {
            SeedKind::Planar => init_planar(p, &grid),
            SeedKind::Perturbed { mode } => init_perturbed(p, &grid, setup.amplitude * depth, mode)?,
        };
        let r = minimize(p, &grid, &setup.solver, &seed)?;
        outcomes.push(SeedOutcome::from_result(kind, &r, &setup.solver));
        if r.converged && best.as_ref().is_none_or(|b| r.energy < b.energy) {
            best = Some(r);
        }
    }
    Ok((outcomes, best))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub p: f64,
    pub ell: f64,
    /// Least converged energy over the seed set, or the least energy
    /// overall when nothing converged.
    pub energy2d: f64,
    pub multiplier: f64,
    pub transverse_energy: f64,
    pub converged: bool,
    pub tolerance: f64,
    pub outcomes: Vec<SeedOutcome>,
}

impl CurveSample {
    fn from_outcomes(p: f64, ell: f64, outcomes: Vec<SeedOutcome>) -> Self {
        let pick = |only_converged: bool| {
            outcomes
                .iter()
                .filter(|o| o.converged || !only_converged)
                .min_by(|a, b| a.energy.total_cmp(&b.energy))
                .copied()
        };
        let best = pick(true).or_else(|| pick(false)).expect("at least one seed");
        Self {
            p,
            ell,
            energy2d: best.energy,
            multiplier: best.multiplier,
            transverse_energy: best.transverse_energy,
            converged: best.converged,
            tolerance: best.tolerance,
            outcomes,
        }
    }

    /// A sample taken straight from the closed-form planar curve.
    pub fn from_planar_curve(p: f64, ell: f64) -> Self {
        let params = SolitonParams::from_momentum(p);
        Self {
            p,
            ell,
            energy2d: energy_1d(p),
            multiplier: params.speed(),
            transverse_energy: 0.0,
            converged: true,
            tolerance: 0.0,
            outcomes: Vec::new(),
        }
    }

    pub fn transverse_fraction(&self) -> f64 {
        if self.energy2d > 0.0 {
            self.transverse_energy / self.energy2d
        } else {
            0.0
        }
    }
}

/// Samples `I_2d` at each `p` on the cylinder of length `ell`. Points run
/// as independent jobs; the curve comes back sorted by `p`. Points where no
/// seed converged are kept and flagged.
pub fn sweep_momentum(ell: f64, p_values: &[f64], setup: &SweepSetup) -> Result<Vec<CurveSample>> {
    setup.validate()?;
    for &p in p_values {
        if !(p > 0.0 && p < PI) {
            return Err(Error::Domain(format!("momentum {p} is outside (0, pi)")));
        }
    }
    let results = par::run_jobs(p_values.to_vec(), setup.jobs, |p| {
        run_point(p, ell, setup).map(|(outcomes, _)| CurveSample::from_outcomes(p, ell, outcomes))
    });
    let mut curve = results.into_iter().collect::<Result<Vec<_>>>()?;
    curve.sort_by(|a, b| a.p.total_cmp(&b.p));
    Ok(curve)
}

/// Outcome of one curve predicate. Margins are slacks: positive means the
/// inequality holds with room to spare.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateReport {
    pub name: &'static str,
    pub passed: bool,
    pub worst_margin: f64,
    /// Where the worst margin occurred.
    pub worst_at: String,
    pub tolerance: f64,
    pub checked: usize,
    pub skipped: usize,
}

impl PredicateReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            passed: true,
            worst_margin: f64::INFINITY,
            worst_at: String::new(),
            tolerance,
            checked: 0,
            skipped: 0,
        }
    }

    fn record(&mut self, margin: f64, ok: bool, at: impl FnOnce() -> String) {
        self.checked += 1;
        self.passed &= ok;
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.worst_at = at();
        }
    }
}

impl fmt::Display for PredicateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} worst_margin={:.6e} at={} tolerance={:.3e} checked={} skipped={}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.worst_margin,
            if self.worst_at.is_empty() { "-" } else { &self.worst_at },
            self.tolerance,
            self.checked,
            self.skipped
        )
    }
}

fn uniform_step(curve: &[CurveSample]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let step = curve[1].p - curve[0].p;
    for w in curve.windows(2) {
        let d = w[1].p - w[0].p;
        if !(d > 0.0) || (d - step).abs() > 1e-9 * step {
            return Err(Error::Precondition(
                "samples must be uniformly spaced in increasing p".into(),
            ));
        }
    }
    Ok(step)
}

/// Midpoint concavity `(v[i-1] + v[i+1]) / 2 <= v[i] + delta_tol`.
pub fn check_concavity(curve: &[CurveSample], delta_tol: f64) -> Result<PredicateReport> {
    uniform_step(curve)?;
    let mut report = PredicateReport::new("concavity", delta_tol);
    for (i, w) in curve.windows(3).enumerate() {
        if !(w[0].converged && w[1].converged && w[2].converged) {
            report.skipped += 1;
            continue;
        }
        let margin = w[1].energy2d - 0.5 * (w[0].energy2d + w[2].energy2d);
        report.record(margin, margin >= -delta_tol, || format!("p={}", curve[i + 1].p));
    }
    Ok(report)
}

/// `I(p1 + p2) < I(p1) + I(p2)` with margin above `tol` for every pair on
/// the grid `p = k pi / n`; sums beyond `pi` reduce mod `pi` and land on
/// the grid or on the trivial class `I = 0`.
pub fn check_subadditivity(curve: &[CurveSample], tol: f64) -> Result<PredicateReport> {
    let step = uniform_step(curve)?;
    let n = (PI / step).round();
    if (n * step - PI).abs() > 1e-9 || n < 2.0 {
        return Err(Error::Precondition(format!("spacing {step} is not pi / n")));
    }
    let n = n as usize;
    let mut table: Vec<Option<&CurveSample>> = vec![None; n];
    for s in curve {
        let k = (s.p / step).round();
        if (k * step - s.p).abs() > 1e-9 || k < 1.0 || k >= n as f64 {
            return Err(Error::Precondition(format!(
                "sample p={} is off the grid pi k / {n}",
                s.p
            )));
        }
        table[k as usize] = Some(s);
    }
    let value = |k: usize| -> Option<f64> {
        if k.is_multiple_of(n) {
            Some(0.0)
        } else {
            table[k % n].filter(|s| s.converged).map(|s| s.energy2d)
        }
    };
    let mut report = PredicateReport::new("subadditivity", tol);
    for k1 in 1..n {
        for k2 in k1..n {
            match (value(k1), value(k2), value(k1 + k2)) {
                (Some(a), Some(b), Some(s)) => {
                    let margin = a + b - s;
                    report.record(margin, margin > tol, || format!("k1={k1},k2={k2},n={n}"));
                }
                _ => report.skipped += 1,
            }
        }
    }
    Ok(report)
}

/// `|v_i - v_j| <= sqrt(2) |p_i - p_j| + tol` for all pairs.
pub fn lipschitz_check(curve: &[CurveSample], tol: f64) -> Result<PredicateReport> {
    let ok: Vec<&CurveSample> = curve.iter().filter(|s| s.converged).collect();
    if ok.len() < 2 {
        return Err(Error::Precondition("need at least two converged samples".into()));
    }
    let mut report = PredicateReport::new("lipschitz", tol);
    report.skipped = curve.len() - ok.len();
    for i in 0..ok.len() {
        for j in i + 1..ok.len() {
            let (a, b) = (ok[i], ok[j]);
            let margin = SQRT_2 * (a.p - b.p).abs() - (a.energy2d - b.energy2d).abs();
            report.record(margin, margin >= -tol, || format!("p={},p={}", a.p, b.p));
        }
    }
    Ok(report)
}

/// Pointwise upper bounds `I_2d <= I_1d + tol_1d` and `I_2d < sqrt(2) |p|`,
/// with `|p|` the distance from `p` to `pi Z`.
pub fn check_upper_bounds(curve: &[CurveSample], tol_1d: f64) -> (PredicateReport, PredicateReport) {
    let mut planar = PredicateReport::new("planar_bound", tol_1d);
    let mut sonic = PredicateReport::new("sonic_bound", 0.0);
    for s in curve {
        if !s.converged {
            planar.skipped += 1;
            sonic.skipped += 1;
            continue;
        }
        let m1 = energy_1d(s.p) - s.energy2d;
        planar.record(m1, m1 >= -tol_1d, || format!("p={}", s.p));
        let q = reduce_momentum(s.p);
        let m2 = SQRT_2 * q.min(PI - q) - s.energy2d;
        sonic.record(m2, m2 > 0.0, || format!("p={}", s.p));
    }
    (planar, sonic)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallPReport {
    /// `(p, I_2d(p) / (sqrt(2) p))`, in the order the momenta were given.
    pub ratios: Vec<(f64, f64)>,
    pub below_one: bool,
    pub increasing: bool,
    pub all_converged: bool,
    pub warnings: Vec<String>,
    pub samples: Vec<CurveSample>,
}

impl SmallPReport {
    pub fn passed(&self) -> bool {
        self.below_one && self.increasing && self.all_converged
    }
}

/// Soliton cores wider than this fraction of the half-length trigger a
/// truncation warning.
const CORE_FRACTION: f64 = 0.125;

/// Ratios `I_2d(p) / (sqrt(2) p)` for momenta decreasing toward zero; they
/// must stay below one and increase along the list.
pub fn check_small_p(ell: f64, p_values: &[f64], setup: &SweepSetup) -> Result<SmallPReport> {
    if p_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("momenta must be strictly decreasing".into()));
    }
    let curve = sweep_momentum(ell, p_values, setup)?;
    let mut warnings = Vec::new();
    let mut ratios = Vec::new();
    for &p in p_values {
        let s = curve.iter().find(|s| s.p == p).expect("swept every momentum");
        ratios.push((p, s.energy2d / (SQRT_2 * p)));
        let width = 1.0 / SolitonParams::from_momentum(p).core_rate();
        if width > CORE_FRACTION * setup.grid.half_length() {
            warnings.push(format!(
                "p={p}: core width {width:.3} is large against the half-length {}",
                setup.grid.half_length()
            ));
        }
    }
    let below_one = ratios.iter().all(|&(_, r)| r < 1.0);
    let increasing = ratios.windows(2).all(|w| w[1].1 > w[0].1);
    let all_converged = curve.iter().all(|s| s.converged);
    let mut samples = Vec::new();
    for &p in p_values {
        samples.push(curve.iter().find(|s| s.p == p).cloned().expect("swept every momentum"));
    }
    Ok(SmallPReport {
        ratios,
        below_one,
        increasing,
        all_converged,
        warnings,
        samples,
    })
}

/// Classification of one cylinder length.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub ell: f64,
    /// True when the lowest-energy converged outcome has transverse
    /// fraction at most `w_tol`.
    pub planar: bool,
    /// Transverse fraction of the deciding outcome.
    pub fraction: f64,
    /// False when no seed converged; the deciding outcome is then simply
    /// the lowest energy.
    pub converged: bool,
    pub outcomes: Vec<SeedOutcome>,
}

pub fn probe(p: f64, ell: f64, setup: &SweepSetup, w_tol: f64) -> Result<Probe> {
    let (outcomes, _) = run_point(p, ell, setup)?;
    let sample = CurveSample::from_outcomes(p, ell, outcomes);
    let fraction = sample.transverse_fraction();
    Ok(Probe {
        ell,
        planar: fraction <= w_tol,
        fraction,
        converged: sample.converged,
        outcomes: sample.outcomes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalLengthResult {
    pub p: f64,
    pub ell_lo: f64,
    pub ell_hi: f64,
    pub width: f64,
    /// Every probe in evaluation order.
    pub probes: Vec<Probe>,
}

impl CriticalLengthResult {
    pub fn lo_probe(&self) -> &Probe {
        self.probes
            .iter()
            .rev()
            .find(|q| q.ell == self.ell_lo)
            .expect("probed lower end")
    }

    pub fn hi_probe(&self) -> &Probe {
        self.probes
            .iter()
            .rev()
            .find(|q| q.ell == self.ell_hi)
            .expect("probed upper end")
    }
}

/// Bisects `[lo, hi]` on the planar/two-dimensional indicator until the
/// bracket is at most `resolution` wide.
pub fn critical_length(
    p: f64,
    bracket: (f64, f64),
    setup: &SweepSetup,
    w_tol: f64,
    resolution: f64,
) -> Result<CriticalLengthResult> {
    setup.validate()?;
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Domain(format!(
            "bracket [{lo}, {hi}] is not an interval in (0, inf)"
        )));
    }
    if !(resolution > 0.0) || !(w_tol >= 0.0) {
        return Err(Error::Domain(
            "resolution must be positive and w_tol nonnegative".into(),
        ));
    }
    let mut probes = vec![probe(p, lo, setup, w_tol)?, probe(p, hi, setup, w_tol)?];
    if !probes[0].planar || probes[1].planar {
        return Err(Error::NotStraddling(format!(
            "ell={lo} is {}, ell={hi} is {}",
            if probes[0].planar { "planar" } else { "two-dimensional" },
            if probes[1].planar { "planar" } else { "two-dimensional" }
        )));
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        let q = probe(p, mid, setup, w_tol)?;
        if q.planar {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(q);
    }
    Ok(CriticalLengthResult {
        p,
        ell_lo: lo,
        ell_hi: hi,
        width: hi - lo,
        probes,
    })
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_curve<W: Write>(mut w: W, curve: &[CurveSample]) -> std::io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for s in curve {
        let f = fmt_float;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            f(s.p),
            f(s.ell),
            f(s.energy2d),
            f(s.multiplier),
            f(s.transverse_energy),
            s.converged,
            f(s.tolerance)
        )?;
    }
    Ok(())
}

/// Parses the output of [`write_curve`]; seed outcomes are not stored.
pub fn read_curve(text: &str) -> Result<Vec<CurveSample>> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(Error::Format("missing curve header".into()));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Format(format!("curve row {}: cannot parse {line:?}", n + 1));
        if cols.len() != 7 {
            return Err(bad());
        }
        let num = |i: usize| cols[i].parse::<f64>().map_err(|_| bad());
        out.push(CurveSample {
            p: num(0)?,
            ell: num(1)?,
            energy2d: num(2)?,
            multiplier: num(3)?,
            transverse_energy: num(4)?,
            converged: cols[5].parse().map_err(|_| bad())?,
            tolerance: num(6)?,
            outcomes: Vec::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar_curve(n: usize) -> Vec<CurveSample> {
        (1..n)
            .map(|k| CurveSample::from_planar_curve(k as f64 * PI / n as f64, 1.0))
            .collect()
    }

    fn fake(values: &[(f64, f64)]) -> Vec<CurveSample> {
        values
            .iter()
            .map(|&(p, v)| CurveSample {
                energy2d: v,
                ..CurveSample::from_planar_curve(p, 1.0)
            })
            .collect()
    }

    #[test]
    fn closed_form_curve_passes() {
        let curve = planar_curve(16);
        assert!(check_concavity(&curve, 1e-10).unwrap().passed);
        let sub = check_subadditivity(&curve, 0.0).unwrap();
        assert!(sub.passed && sub.worst_margin > 0.0);
        assert_eq!(sub.checked, 15 * 16 / 2);
        assert!(lipschitz_check(&curve, 1e-10).unwrap().passed);
        let (planar, sonic) = check_upper_bounds(&curve, 1e-12);
        assert!(planar.passed && sonic.passed);
    }

    #[test]
    fn convex_triple_fails() {
        let curve = fake(&[(0.1, 0.0), (0.2, 0.0), (0.3, 1.0)]);
        let r = check_concavity(&curve, 1e-10).unwrap();
        assert!(!r.passed);
        assert!((r.worst_margin + 0.5).abs() < 1e-15);
    }

    #[test]
    fn steep_curve_fails_lipschitz() {
        let curve = fake(&[(0.1, 0.2), (0.2, 0.4)]);
        assert!(!lipschitz_check(&curve, 1e-10).unwrap().passed);
    }

    #[test]
    fn unconverged_samples_are_skipped() {
        let mut curve = planar_curve(8);
        curve[3].converged = false;
        curve[3].energy2d = 100.0;
        let r = check_concavity(&curve, 1e-10).unwrap();
        assert!(r.passed);
        assert_eq!(r.skipped, 3);
        assert!(lipschitz_check(&curve, 1e-10).unwrap().passed);
    }

    #[test]
    fn predicate_preconditions() {
        let curve = fake(&[(0.1, 0.1), (0.2, 0.2), (0.4, 0.3)]);
        assert!(check_concavity(&curve, 0.0).is_err());
        let off = fake(&[(0.1, 0.1), (0.2, 0.2)]);
        assert!(check_subadditivity(&off, 0.0).is_err());
    }

    #[test]
    fn curve_roundtrip() {
        let curve = planar_curve(5);
        let mut buf = Vec::new();
        write_curve(&mut buf, &curve).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        let back = read_curve(&text).unwrap();
        for (a, b) in back.iter().zip(&curve) {
            assert_eq!((a.p, a.energy2d, a.converged), (b.p, b.energy2d, b.converged));
        }
        assert!(read_curve("p,q\n").is_err());
    }

    #[test]
    fn setup_validation() {
        let g = Grid::new(10.0, 64, 1.0, 4).unwrap();
        let mut s = SweepSetup::new(g, SolverConfig::default());
        assert!(s.validate().is_ok());
        s.seeds = 1;
        assert!(s.validate().is_err());
        assert!(sweep_momentum(1.0, &[PI], &SweepSetup::new(g, SolverConfig::default())).is_err());
    }

    #[test]
    fn tiny_sweep() {
        let g = Grid::new(12.0, 128, 0.5, 4).unwrap();
        let setup = SweepSetup::new(g, SolverConfig::default());
        let curve = sweep_momentum(0.5, &[2.0, 1.0], &setup).unwrap();
        assert_eq!(curve.len(), 2);
        assert!(curve[0].p < curve[1].p);
        for s in &curve {
            assert!(s.converged);
            assert_eq!(s.outcomes.len(), 2);
            assert!((s.energy2d - energy_1d(s.p)).abs() < 0.01 * energy_1d(s.p));
        }
    }
}
