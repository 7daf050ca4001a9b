use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::sync::Arc;

use proptest::prelude::*;
use rtmix_core::fields::{read_snapshot, write_snapshot, Grid, ScalarField};
use rtmix_core::interp::{monotonize, rearrange, Flux, Interpolation, Profile, QuadraticEntropy, RATIO_TOLERANCE};
use rtmix_core::riemann::{round2, FluidParams, ImmiscibleFlux};
use rtmix_core::solver::{Orientation, RunConfig};

fn cells() -> impl Strategy<Value = Profile> {
    (1usize..24, 1usize..24)
        .prop_flat_map(|(n_neg, n_pos)| {
            (
                prop::collection::vec(0.05f64..2.0, n_neg),
                prop::collection::vec(0.05f64..2.0, n_pos),
                prop::collection::vec(0.0f64..=1.0, n_neg + n_pos),
            )
        })
        .prop_map(|(wn, wp, values)| {
            let mut edges = vec![0.0];
            for w in &wn {
                edges.push(edges.last().unwrap() - w);
            }
            edges.reverse();
            for w in &wp {
                let last = *edges.last().unwrap();
                edges.push(last + w);
            }
            Profile::from_cells(edges, values).unwrap()
        })
}

fn immiscible() -> impl Strategy<Value = ImmiscibleFlux> {
    (0.1f64..2.0, 1.05f64..10.0).prop_map(|(rm, k)| ImmiscibleFlux { params: FluidParams::new(rm * k, rm, 1.0).unwrap() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rearrangement_keeps_flux_and_lowers_potential(p in cells()) {
        let r = rearrange(&p);
        let f = QuadraticEntropy;
        prop_assert!(r.is_monotone_by_halves());
        let (a, b) = (p.flux_integral(&f), r.flux_integral(&f));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-12), "{a} vs {b}");
        prop_assert!(r.potential() <= p.potential() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn monotonising_never_lowers_the_ratio(p in cells(), flux in immiscible()) {
        let flux: Arc<dyn Flux> = Arc::new(flux);
        let interp = Interpolation::new(flux.clone()).unwrap();
        let r = rearrange(&p);
        let m = monotonize(&r, flux.as_ref());
        prop_assert!(m.is_monotone());
        let (r0, r1, r2) = (interp.measure(&p).ratio, interp.measure(&r).ratio, interp.measure(&m).ratio);
        prop_assert!(r0 <= r1 * (1.0 + 1e-12) + 1e-15);
        prop_assert!(r1 <= r2 * (1.0 + 1e-12) + 1e-15);
        prop_assert!(r2 <= 1.0 + RATIO_TOLERANCE, "ratio {r2}");
    }

    #[test]
    fn derivative_inverse_inverts(flux in immiscible(), s in 0.001f64..0.999) {
        let xi = flux.derivative(s);
        prop_assert!((flux.derivative_inverse(xi) - s).abs() < 1e-9);
    }

    #[test]
    fn round2_lands_on_the_grid(x in -50.0f64..50.0) {
        let r = round2(x);
        prop_assert!((r - x).abs() <= 0.005 + 1e-12);
        prop_assert_eq!(round2(r), r);
    }

    #[test]
    fn config_echo_round_trips(
        a in 0.01f64..0.9,
        g in 0.1f64..100.0,
        t_end in 0.0f64..50.0,
        amplitude in 0.0f64..0.5,
        seed in any::<u64>(),
        stable in any::<bool>(),
    ) {
        let text = format!(
            "rho_plus = {}\nrho_minus = {}\ng = {g}\nt_end = {t_end}\nperturbation.kind = random_seeded\n\
             perturbation.seed = {seed}\nperturbation.amplitude = {amplitude}\norientation = {}\n",
            1.0 + a,
            1.0 - a,
            if stable { "stable" } else { "unstable" }
        );
        let c = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(c.orientation, if stable { Orientation::Stable } else { Orientation::Unstable });
        prop_assert_eq!(RunConfig::parse(&c.echo()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn snapshot_file_round_trips(half_ny in 2usize..8, half_nz in 4usize..12, t in 0.0f64..100.0, seed in 0.0f64..1.0) {
        let grid = Grid::new(2.0, 3.0, 2 * half_ny, 2 * half_nz).unwrap();
        let a = ScalarField::from_fn(grid, |y, z| seed + y * z);
        let b = ScalarField::from_fn(grid, |y, z| (y - z).sin());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        write_snapshot(BufWriter::new(File::create(&path).unwrap()), t, &[&a, &b]).unwrap();
        let back = read_snapshot(BufReader::new(File::open(&path).unwrap())).unwrap();
        prop_assert_eq!(back.t, t);
        prop_assert_eq!(back.grid, grid);
        prop_assert_eq!(back.fields, vec![a, b]);
    }
}
