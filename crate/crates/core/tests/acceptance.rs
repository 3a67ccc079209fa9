//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process fails if any criterion fails, except those listed in
//! `EXPECTED_FAILURES`, which must fail (a surprise pass is also an error).

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use gp_cylinder::constructions::{
    find_oscillation_interval, glue, glue_energy, glue_momentum_bound_check, slice_momentum, strip_energy, symmetrize,
    GlueSpec, StripIndex,
};
use gp_cylinder::field::{
    anisotropic_energy, energy, energy_gradient, kappa, kappa_threshold, lift_constant, lift_loop, momentum,
    momentum_gradient, pairing,
};
use gp_cylinder::inequalities::{arg_inequality, chord_angle, poincare_constant, poincare_sides};
use gp_cylinder::minimizer::{init_perturbed, minimize, SolverConfig};
use gp_cylinder::soliton1d::{dark_soliton, energy_1d, speed_from_momentum, xi};
use gp_cylinder::sweep::{
    check_concavity, check_small_p, check_subadditivity, check_upper_bounds, critical_length, lipschitz_check, probe,
    sweep_momentum, SweepSetup,
};
use gp_cylinder::{Field2D, Grid, LoopTrace};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The arg inequality as stated, `dist(arg z1, arg z2) <= (2/pi)|z1 - z2|`,
/// is false for every pair of distinct unimodular numbers.
const EXPECTED_FAILURES: &[usize] = &[10];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

// Independent closed forms.
fn oracle_energy(c: f64) -> f64 {
    (2.0 - c * c).powf(1.5) / 3.0
}

fn oracle_xi(c: f64) -> f64 {
    let r = (2.0 - c * c).sqrt();
    FRAC_PI_2 - (c / r).atan() - 0.5 * c * r
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng, spread: f64) -> Field2D {
    Field2D::from_fn(g, |_, _| {
        Complex64::new(
            1.0 + spread * rng.gen_range(-1.0..1.0),
            spread * rng.gen_range(-1.0..1.0),
        )
    })
}

fn flatten_ends(f: &mut Field2D) {
    let g = *f.grid();
    let (ny, last) = (g.ny(), g.nx() - 1);
    let v = f.values_mut();
    for j in 1..ny {
        v[j] = v[0];
        v[last * ny + j] = v[last * ny];
    }
}

fn criterion_1() -> Outcome {
    let e = (energy_1d(FRAC_PI_2) - 2.0 * SQRT_2 / 3.0).abs();
    let x = (xi(0.0).unwrap() - FRAC_PI_2).abs();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let c = -1.41 + 2.82 * (k as f64 + 0.5) / 100.0;
        worst = worst.max((speed_from_momentum(xi(c).unwrap()) - c).abs());
    }
    outcome(
        e < 1e-12 && x < 1e-12 && worst < 1e-10,
        format!("energy_err={e:.2e} xi_err={x:.2e} roundtrip_max={worst:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let g = Grid::new(30.0, 4096, 1.0, 16).unwrap();
    let mut worst_e = 0.0f64;
    let mut worst_p = 0.0f64;
    for c in [0.0, 0.5, 1.0, 1.3] {
        let profile: Vec<_> = (0..g.nx()).map(|i| dark_soliton(c, g.x(i)).unwrap()).collect();
        let f = Field2D::from_profile(g, &profile).unwrap();
        worst_e = worst_e.max((energy(&f) - oracle_energy(c)).abs());
        let p = momentum(&f).unwrap();
        let target = oracle_xi(c);
        let d = (p.representative() - target).rem_euclid(PI);
        worst_p = worst_p.max(d.min(PI - d));
    }
    outcome(
        worst_e < 1e-4 && worst_p < 1e-4,
        format!("max_energy_err={worst_e:.2e} max_momentum_err={worst_p:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Grid::new(4.0, 40, 1.3, 8).unwrap();
    let t = 1e-5;
    let (mut worst_e, mut worst_p) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let f = random_field(g, &mut rng, 0.3);
        let ge = energy_gradient(&f);
        let gp = momentum_gradient(&f).unwrap();
        let p0 = momentum(&f).unwrap().representative();
        for _ in 0..10 {
            let d: Vec<Complex64> = (0..g.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let (fp, fm) = (f.axpy(t, &d), f.axpy(-t, &d));
            let fd_e = (energy(&fp) - energy(&fm)) / (2.0 * t);
            let an_e = pairing(ge.values(), &d);
            worst_e = worst_e.max((fd_e - an_e).abs() / an_e.abs());
            // stay on the branch of f
            let near = |q: f64| q - PI * ((q - p0) / PI).round();
            let fd_p = (near(momentum(&fp).unwrap().representative()) - near(momentum(&fm).unwrap().representative()))
                / (2.0 * t);
            let an_p = pairing(gp.values(), &d);
            worst_p = worst_p.max((fd_p - an_p).abs() / an_p.abs());
        }
    }
    outcome(
        worst_e < 1e-6 && worst_p < 1e-6,
        format!("max_rel_err energy={worst_e:.2e} momentum={worst_p:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let g = Grid::new(20.0, 1024, 0.5, 16).unwrap();
    let p = FRAC_PI_2;
    let seed = init_perturbed(p, &g, 0.05, 1).unwrap();
    let r = minimize(p, &g, &SolverConfig::default(), &seed).unwrap();
    let target = 2.0 * SQRT_2 / 3.0;
    let rel = (r.energy - target).abs() / target;
    let frac = r.transverse_fraction();
    outcome(
        r.converged && frac < 1e-6 && rel < 0.01 && r.el_residual < 1e-5 && r.multiplier.abs() < 0.05,
        format!(
            "converged={} transverse_fraction={frac:.2e} energy_rel_err={rel:.2e} residual={:.2e} multiplier={:.2e} iterations={}",
            r.converged, r.el_residual, r.multiplier, r.iterations
        ),
    )
}

fn criterion_5() -> Outcome {
    let g = Grid::new(20.0, 1024, 1.0, 8).unwrap();
    let setup = SweepSetup::new(g, SolverConfig::default());
    let ps: Vec<f64> = (1..14).map(|k| k as f64 * PI / 14.0).collect();
    let curve = sweep_momentum(1.0, &ps, &setup).unwrap();
    let all_converged = curve.iter().all(|s| s.converged);
    let tol = curve.iter().map(|s| s.tolerance).fold(0.0, f64::max);
    let (planar, sonic) = check_upper_bounds(&curve, 1e-3);
    let concave = check_concavity(&curve, 2.0 * tol).unwrap();
    let lip = lipschitz_check(&curve, tol).unwrap();
    let sub = check_subadditivity(&curve, 0.0).unwrap();
    let passed = all_converged
        && planar.passed
        && sonic.passed
        && concave.passed
        && lip.passed
        && sub.passed
        && planar.checked == 13
        && sub.skipped == 0;
    outcome(
        passed,
        format!(
            "converged={all_converged} point_tol={tol:.2e} I2d<=I1d+1e-3 margin={:.2e} I2d<sqrt2|p| margin={:.3e} concavity margin={:.3e} lipschitz margin={:.3e} subadditivity min_margin={:.3e} over {} pairs",
            planar.worst_margin, sonic.worst_margin, concave.worst_margin, lip.worst_margin, sub.worst_margin, sub.checked
        ),
    )
}

fn criterion_6() -> Outcome {
    let g = Grid::new(20.0, 512, 6.0, 32).unwrap();
    let setup = SweepSetup::new(g, SolverConfig::default());
    let r = match critical_length(FRAC_PI_2, (6.0, 12.0), &setup, 1e-6, 0.25) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let lo = r.lo_probe();
    let hi = r.hi_probe();
    let half = probe(FRAC_PI_2, r.ell_lo / 2.0, &setup, 1e-6).unwrap();
    outcome(
        lo.planar
            && lo.converged
            && hi.converged
            && hi.fraction > 1e-3
            && r.width <= 0.25
            && r.ell_lo < r.ell_hi
            && half.planar,
        format!(
            "bracket=[{}, {}] width={} fraction_lo={:.2e} fraction_hi={:.3e} planar_at_half_ell_lo={} probes={}",
            r.ell_lo,
            r.ell_hi,
            r.width,
            lo.fraction,
            hi.fraction,
            half.planar,
            r.probes.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let g = Grid::new(60.0, 2048, 1.0, 8).unwrap();
    let setup = SweepSetup::new(g, SolverConfig::default());
    let r = check_small_p(1.0, &[0.2, 0.1, 0.05], &setup).unwrap();
    let ratios: Vec<String> = r.ratios.iter().map(|(p, q)| format!("{p}:{q:.6}")).collect();
    outcome(
        r.passed(),
        format!(
            "ratios=[{}] below_one={} increasing={} converged={} warnings={}",
            ratios.join(" "),
            r.below_one,
            r.increasing,
            r.all_converged,
            r.warnings.len()
        ),
    )
}

/// Window mean of a piecewise-constant periodic profile, by direct overlap
/// summation.
fn window_mean(q: &[f64], ell: f64, a: f64, b: f64) -> f64 {
    let n = q.len();
    let h = ell / n as f64;
    let mut acc = 0.0;
    let first = (a / h).floor() as i64;
    let last = (b / h).ceil() as i64;
    for c in first..last {
        let lo = (c as f64 * h).max(a);
        let hi = ((c + 1) as f64 * h).min(b);
        if hi > lo {
            acc += q[c.rem_euclid(n as i64) as usize] * (hi - lo);
        }
    }
    acc / (b - a)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut notes = Vec::new();

    // (a)
    let (mut we, mut wp) = (0.0f64, 0.0f64);
    for case in 0..20 {
        let ell = rng.gen_range(0.5..3.0);
        let g = Grid::new(3.0, 24, ell, 16).unwrap();
        let mut f = random_field(g, &mut rng, 0.3);
        flatten_ends(&mut f);
        let level = 1 + case % 4;
        let strip = StripIndex::new(level as u32, rng.gen_range(0..1usize << level)).unwrap();
        let s = symmetrize(&f, strip).unwrap();
        we = we.max((energy(&s) - strip_energy(&f, strip).unwrap()).abs());
        let (a, b) = strip.interval(ell);
        wp = wp.max(momentum(&s).unwrap().distance(&slice_momentum(&f, a, b).unwrap()));
    }
    let a_ok = we < 1e-12 && wp < 1e-12;
    notes.push(format!("(a) energy_err={we:.1e} momentum_err={wp:.1e}"));

    // (b)
    let mut b_ok = true;
    let mut worst = 0.0f64;
    for (ell, cells, windows, amp) in [
        (1.0, 64, 2, 1.0),
        (2.0, 128, 4, 0.3),
        (0.7, 96, 3, 2.0),
        (3.0, 256, 8, 1.0),
    ] {
        let h = ell / cells as f64;
        let k = 2.0 * PI / ell;
        let q: Vec<f64> = (0..cells)
            .map(|j| amp * ((k * j as f64 * h).cos() - (k * (j + 1) as f64 * h).cos()) / (k * h))
            .collect();
        let sup = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_mean = amp * windows as f64 / PI * (PI / windows as f64).sin();
        for frac in [-0.9, -0.3, 0.0, 0.5, 0.99] {
            let delta = frac * max_mean;
            match find_oscillation_interval(&q, ell, windows, delta).unwrap() {
                Some((a, b)) => {
                    let err = (window_mean(&q, ell, a, b) - delta).abs() / sup;
                    worst = worst.max(err);
                    b_ok &= err <= 1e-8;
                }
                None => b_ok = false,
            }
        }
        b_ok &= find_oscillation_interval(&q, ell, windows, 1.001 * max_mean)
            .unwrap()
            .is_none();
    }
    notes.push(format!("(b) max_window_err={worst:.1e}"));

    // (c)
    let lm = LoopTrace::from_fn(32, 1.0, |y| {
        Complex64::from_polar(1.0 + 0.02 * (2.0 * PI * y).sin(), -0.4 + 0.03 * (4.0 * PI * y).cos())
    })
    .unwrap();
    let lp = LoopTrace::from_fn(32, 1.0, |y| {
        Complex64::from_polar(0.98 + 0.01 * (2.0 * PI * y).cos(), 2.5 + 0.02 * (2.0 * PI * y).sin())
    })
    .unwrap();
    let glued = glue(&GlueSpec {
        loop_minus: lm.clone(),
        loop_plus: lp.clone(),
        half_width: 6.0,
        nx: 193,
    })
    .unwrap();
    let traces = glued.column(0) == lm.values() && glued.column(192) == lp.values();
    let scaled: Vec<f64> = [4.0, 8.0, 16.0]
        .iter()
        .map(|&r| {
            let c = |ph: f64| LoopTrace::new(vec![Complex64::from_polar(1.0, ph); 8], 1.0).unwrap();
            let spec = GlueSpec {
                loop_minus: c(0.2),
                loop_plus: c(1.7),
                half_width: r,
                nx: (32.0 * r) as usize + 1,
            };
            glue_energy(&glue(&spec).unwrap()) * (r - 1.0)
        })
        .collect();
    let smax = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let smin = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let constant = (smax - smin) / smin < 0.02;
    let mut ratios = Vec::new();
    for case in 0..10 {
        let eps = 10f64.powf(-1.0 - 0.2 * case as f64);
        let (p0, p1) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
        let (m0, m1) = (rng.gen_range(1..4) as f64, rng.gen_range(1..4) as f64);
        let loop_at = |phase: f64, m: f64, s: f64| {
            LoopTrace::from_fn(32, 1.0, move |y| {
                let w = 2.0 * PI * m * y;
                Complex64::from_polar(1.0 + s * eps * w.cos(), phase + eps * (w + s).sin())
            })
            .unwrap()
        };
        let spec = GlueSpec {
            loop_minus: loop_at(p0, m0, 1.0),
            loop_plus: loop_at(p1, m1, -0.5),
            half_width: 5.0,
            nx: 321,
        };
        ratios.push(glue_momentum_bound_check(&spec).unwrap().ratio);
    }
    let rmax = ratios.iter().cloned().fold(0.0, f64::max);
    let c_ok = traces && constant && rmax.is_finite() && rmax < 10.0;
    notes.push(format!(
        "(c) traces_exact={traces} energy*(R-1)={scaled:.5?} momentum_ratio_max={rmax:.3e}"
    ));

    // (d)
    let mut d_ok = true;
    let mut accepted = 0;
    let mut min_slack = f64::INFINITY;
    while accepted < 20 {
        let ell = rng.gen_range(0.5..3.0);
        let (a, b, m) = (
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(1..3) as f64,
        );
        let phase = rng.gen_range(-PI..PI);
        let lp = LoopTrace::from_fn(64, ell, |y| {
            let w = 2.0 * PI * m * y / ell;
            Complex64::from_polar(1.0 + a * w.cos(), phase + b * w.sin())
        })
        .unwrap();
        let kap = kappa(&lp);
        if kap > kappa_threshold(ell) {
            continue;
        }
        accepted += 1;
        let c = lift_constant(ell);
        match lift_loop(&lp) {
            Ok(lift) => {
                let slack = lift.mean.norm() - (1.0 - c * kap.sqrt());
                min_slack = min_slack.min(slack);
                d_ok &= lift.certified && slack >= 0.0;
            }
            Err(_) => d_ok = false,
        }
    }
    notes.push(format!("(d) min_mean_slack={min_slack:.3e}"));
    outcome(a_ok && b_ok && c_ok && d_ok, notes.join(" "))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for ell in [0.5, 1.0, 2.0] {
        for _ in 0..10 {
            let g = Grid::new(5.0, 48, ell, 16).unwrap();
            let f = random_field(g, &mut rng, 0.4);
            // psi_ell(x, y) = psi(x, ell y) on the unit cylinder: same samples
            let unit = Field2D::new(g.with_ell(1.0).unwrap(), f.values().to_vec()).unwrap();
            let lhs = anisotropic_energy(&unit, 1.0 / ell).unwrap();
            worst = worst.max((lhs - energy(&f)).abs());
        }
    }
    outcome(worst < 1e-10, format!("max_abs_err={worst:.2e}"))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut stated, mut corrected, mut total) = (0, 0, 0);
    while total < 1000 {
        let z1 = Complex64::from_polar(1.0, rng.gen_range(-PI..PI));
        let z2 = Complex64::from_polar(1.0, rng.gen_range(-PI..PI));
        if (z1 - z2).norm() > 1.0 {
            continue;
        }
        total += 1;
        let (angle, bound) = arg_inequality(z1, z2);
        if angle <= bound {
            stated += 1;
        }
        if chord_angle(z1, z2) <= PI / 2.0 * (z1 - z2).norm() + 1e-15 && (angle - chord_angle(z1, z2)).abs() < 1e-12 {
            corrected += 1;
        }
    }
    let mut pw = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..1000 {
        let ell = rng.gen_range(0.3..5.0);
        let modes: Vec<(f64, Complex64)> = (1..=6)
            .map(|m| {
                (
                    m as f64,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (m * m) as f64,
                )
            })
            .collect();
        let offset = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let lp = LoopTrace::from_fn(128, ell, |y| {
            offset
                + modes
                    .iter()
                    .map(|(m, c)| {
                        c * Complex64::from_polar(1.0, 2.0 * PI * m * y / ell)
                            + c.conj() * 0.3 * Complex64::from_polar(1.0, -2.0 * PI * m * y / ell)
                    })
                    .sum::<Complex64>()
        })
        .unwrap();
        let (spread, dirichlet) = poincare_sides(&lp);
        let rhs = poincare_constant(ell) * dirichlet;
        worst_ratio = worst_ratio.max(spread / rhs);
        if spread <= rhs {
            pw += 1;
        }
    }
    outcome(
        stated == total && pw == 1000,
        format!(
            "arg_inequality_as_stated={stated}/{total} corrected_pi_over_2_bound={corrected}/{total} poincare_wirtinger={pw}/1000 max_ratio={worst_ratio:.6}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form oracle match", criterion_1),
        ("sampled-soliton consistency", criterion_2),
        ("gradient certification", criterion_3),
        ("planar regime reproduction", criterion_4),
        ("curve-law battery at ell=1", criterion_5),
        ("critical-length dichotomy", criterion_6),
        ("small-p asymptotics", criterion_7),
        ("construction suite", criterion_8),
        ("scaling identity", criterion_9),
        ("inequality micro-suite", criterion_10),
    ];
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let o = run();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let note = match (o.passed, expected_fail) {
            (false, true) => " (expected failure, see decisions ledger)",
            (true, true) => " (expected to fail but passed)",
            _ => "",
        };
        if o.passed == expected_fail {
            unexpected += 1;
        }
        println!(
            "acceptance {id:>2} {}{note} | {name} | {} | {:.1?}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {unexpected} unexpected outcome(s)");
        ExitCode::FAILURE
    }
}
