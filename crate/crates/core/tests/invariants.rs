use std::f64::consts::PI;

use gp_cylinder::constructions::{symmetrize, StripIndex};
use gp_cylinder::field::snapshot;
use gp_cylinder::field::{energy, energy_gradient, momentum, momentum_gradient, pairing, transverse_energy};
use gp_cylinder::{Field2D, Grid};
use num_complex::Complex64;
use proptest::prelude::*;

const NX: usize = 20;
const NY: usize = 8;

fn field_strategy() -> impl Strategy<Value = Field2D> {
    (
        0.4f64..3.0,
        prop::collection::vec((-0.35f64..0.35, -0.35f64..0.35), NX * NY),
    )
        .prop_map(|(ell, noise)| {
            let g = Grid::new(3.0, NX, ell, NY).unwrap();
            let values = noise.into_iter().map(|(a, b)| Complex64::new(1.0 + a, b)).collect();
            Field2D::new(g, values).unwrap()
        })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn y_translation_invariance(f in field_strategy(), k in 0usize..NY) {
        let g = f.shift_y(k);
        prop_assert!(close(energy(&f), energy(&g), 1e-12));
        prop_assert!(momentum(&f).unwrap().distance(&momentum(&g).unwrap()) < 1e-12);
    }

    #[test]
    fn phase_invariance(f in field_strategy(), alpha in -PI..PI) {
        let g = f.rotate_phase(alpha);
        prop_assert!(close(energy(&f), energy(&g), 1e-12));
        prop_assert!(momentum(&f).unwrap().distance(&momentum(&g).unwrap()) < 1e-12);
    }

    #[test]
    fn conjugation_flips_momentum(f in field_strategy()) {
        let g = f.conj();
        prop_assert!(close(energy(&f), energy(&g), 1e-12));
        let p = momentum(&f).unwrap().representative();
        let q = momentum(&g).unwrap().representative();
        let d = (p + q).rem_euclid(PI);
        prop_assert!(d.min(PI - d) < 1e-12);
    }

    #[test]
    fn gradients_match_directional_derivatives(f in field_strategy(), seed in 0u64..1000) {
        let n = f.values().len();
        let dir: Vec<Complex64> = (0..n)
            .map(|i| {
                let s = ((i as u64 + 1) * (seed + 7)) as f64;
                Complex64::new((s * 0.37).sin(), (s * 0.61).cos())
            })
            .collect();
        let t = 1e-5;
        let (fp, fm) = (f.axpy(t, &dir), f.axpy(-t, &dir));
        let fd = (energy(&fp) - energy(&fm)) / (2.0 * t);
        let an = pairing(energy_gradient(&f).values(), &dir);
        prop_assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()));
        let p0 = momentum(&f).unwrap().representative();
        let near = |q: f64| q - PI * ((q - p0) / PI).round();
        let fd = (near(momentum(&fp).unwrap().representative()) - near(momentum(&fm).unwrap().representative())) / (2.0 * t);
        let an = pairing(momentum_gradient(&f).unwrap().values(), &dir);
        prop_assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()));
    }

    #[test]
    fn planar_fields_have_no_transverse_energy(profile in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), NX)) {
        let g = Grid::new(3.0, NX, 1.0, NY).unwrap();
        let p: Vec<_> = profile.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        let f = Field2D::from_profile(g, &p).unwrap();
        prop_assert_eq!(transverse_energy(&f), 0.0);
    }

    #[test]
    fn symmetrize_is_idempotent(f in field_strategy(), level in 1u32..4, pick in 0usize..8) {
        let strip = StripIndex::new(level, pick % (1 << level)).unwrap();
        let s = symmetrize(&f, strip).unwrap();
        prop_assert_eq!(symmetrize(&s, strip).unwrap(), s);
    }

    #[test]
    fn snapshot_roundtrip(f in field_strategy()) {
        let bytes = snapshot::encode(&f);
        prop_assert_eq!(snapshot::decode(&bytes).unwrap(), f);
    }
}
