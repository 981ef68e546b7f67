mod common;

use kspec_core::grid::{default_z_grid, linspace};
use kspec_core::lsd_solver::fixed_point_map;
use kspec_core::{
    density_from_stieltjes, mp_cdf, mp_density, mp_stieltjes, mp_support, solve_stieltjes, Complex64, MpParams,
    SolverConfig, SpectralMeasure,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn support_matches_discriminant_roots() {
    let (a, b) = mp_support(MpParams::new(0.5, 0.5).unwrap());
    let (oa, ob) = common::mp_endpoints_by_discriminant(0.5, 0.5);
    assert!((a - oa).abs() < 1e-12 && (b - ob).abs() < 1e-12);
    assert!((a - 0.042_893_218_813_452_46).abs() < 1e-15);
    assert!((b - 1.457_106_781_186_547_5).abs() < 1e-15);
}

#[test]
fn density_matches_independent_formula() {
    let mut rng = common::rng(1);
    for _ in 0..200 {
        let y = rng.random_range(0.05..0.95);
        let s2 = rng.random_range(0.1..3.0);
        let x = rng.random_range(-0.5..s2 * 4.0);
        let p = MpParams::new(y, s2).unwrap();
        assert!((mp_density(p, x) - common::mp_pdf(y, s2, x)).abs() < 1e-12);
    }
}

#[test]
fn density_normalized() {
    let mut rng = common::rng(2);
    for _ in 0..10 {
        let y = rng.random_range(0.05..0.95);
        let s2 = rng.random_range(0.1..3.0);
        assert!((common::mp_mass(y, s2) - 1.0).abs() < 1e-8, "y={y} s2={s2}");
        let (_, b) = mp_support(MpParams::new(y, s2).unwrap());
        assert!((mp_cdf(MpParams::new(y, s2).unwrap(), b) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn cdf_matches_angle_quadrature() {
    let p = MpParams::new(0.3, 1.2).unwrap();
    let (a, b) = mp_support(p);
    for x in linspace(a, b, 9) {
        let oracle: f64 = common::mp_integral(0.3, 1.2, 20_000, |t| if t <= x { 1.0 } else { 0.0 });
        // The indicator makes the oracle first-order; 20k panels keep it
        // within about 1e-4.
        assert!((mp_cdf(p, x) - oracle).abs() < 2e-4, "x={x}");
    }
}

#[test]
fn closed_form_stieltjes_matches_quadrature() {
    let p = MpParams::new(0.5, 0.5).unwrap();
    for z in default_z_grid() {
        let closed = mp_stieltjes(p, z).unwrap();
        let quad = common::mp_stieltjes_by_quadrature(0.5, 0.5, z, 20_000);
        assert!((closed - quad).norm() <= 1e-8, "z={z}: {closed} vs {quad}");
    }
}

#[test]
fn mp_branch_is_herglotz() {
    let p = MpParams::new(0.4, 0.7).unwrap();
    for re in linspace(-2.0, 3.0, 51) {
        for im in [1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let m = mp_stieltjes(p, Complex64::new(re, im)).unwrap();
            assert!(m.im > 0.0, "z = {re}+{im}i");
        }
    }
}

#[test]
fn mp_stieltjes_asymptotics() {
    let p = MpParams::new(0.5, 0.5).unwrap();
    let (_, b) = mp_support(p);
    for t in [1e3, 1e4] {
        let z = Complex64::new(0.0, t);
        assert!((z * mp_stieltjes(p, z).unwrap() + 1.0).norm() <= b / t);
    }
}

#[test]
fn stieltjes_inversion_recovers_density() {
    let p = MpParams::new(0.5, 0.5).unwrap();
    let (a, b) = mp_support(p);
    let w = b - a;
    for x in linspace(a + 0.1 * w, b - 0.1 * w, 200) {
        let inv = mp_stieltjes(p, Complex64::new(x, 1e-6)).unwrap().im / std::f64::consts::PI;
        assert!((inv - mp_density(p, x)).abs() <= 1e-3);
    }
}

#[test]
fn solver_reduces_to_mp_for_point_masses() {
    let cfg = SolverConfig::default();
    let re = linspace(-0.5, 3.0, 10);
    let im = [0.01, 0.1, 0.5, 1.0, 10.0];
    for tau in [0.25, 0.5, 1.0, 2.0] {
        let h = SpectralMeasure::point_mass(tau).unwrap();
        for y in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let params = MpParams::new(y, tau).unwrap();
            for &r in &re {
                for &i in &im {
                    let z = Complex64::new(r, i);
                    let res = solve_stieltjes(&h, y, z, &cfg).unwrap();
                    let closed = mp_stieltjes(params, z).unwrap();
                    assert!((res.m - closed).norm() <= 1e-8, "tau={tau} y={y} z={z}");
                    assert!(res.residual <= 10.0 * cfg.tol);
                    assert!(res.companion(y, z).im > 0.0);
                    assert!(res.m.im > 0.0);
                }
            }
        }
    }
}

#[test]
fn two_atom_fixed_point_by_direct_evaluation() {
    let h = SpectralMeasure::new(vec![(0.5, 0.5), (1.5, 0.5)]).unwrap();
    let (y, z) = (0.5, Complex64::i());
    let res = solve_stieltjes(&h, y, z, &SolverConfig::default()).unwrap();
    let m = res.m;
    let factor = 1.0 - y - y * z * m;
    let direct = 0.5 / (0.5 * factor - z) + 0.5 / (1.5 * factor - z);
    assert!((m - direct).norm() <= 1e-10);
    assert!((-(1.0 - y) / z + y * m).im > 0.0);
}

#[test]
fn inversion_matches_mp_density_on_interior() {
    let h = SpectralMeasure::point_mass(0.5).unwrap();
    let p = MpParams::kendall(0.5).unwrap();
    let (a, b) = mp_support(p);
    let w = b - a;
    let grid = linspace(a + 0.1 * w, b - 0.1 * w, 400);
    let d = density_from_stieltjes(&h, 0.5, &grid, 1e-5, &SolverConfig::default(), false).unwrap();
    let err = grid
        .iter()
        .zip(&d.values)
        .map(|(&x, &v)| (v - common::mp_pdf(0.5, 0.5, x)).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-3, "sup error {err}");
}

#[test]
fn inversion_has_no_mass_outside_support() {
    let h = SpectralMeasure::point_mass(0.5).unwrap();
    let (a, b) = mp_support(MpParams::kendall(0.5).unwrap());
    let mut outside: Vec<f64> = linspace(a - 0.5, a - 0.1, 20);
    outside.extend(linspace(b + 0.1, b + 1.0, 20));
    for x in outside {
        let d = density_from_stieltjes(&h, 0.5, &[x, x + 1e-3], 1e-5, &SolverConfig::default(), false).unwrap();
        assert!(d.values[0] <= 1e-2, "x={x}: {}", d.values[0]);
    }
}

#[test]
fn inversion_richardson_is_at_least_as_accurate() {
    let h = SpectralMeasure::point_mass(0.5).unwrap();
    let grid = linspace(0.3, 1.2, 50);
    let cfg = SolverConfig::default();
    let err = |rich: bool| {
        let d = density_from_stieltjes(&h, 0.5, &grid, 1e-3, &cfg, rich).unwrap();
        grid.iter()
            .zip(&d.values)
            .map(|(&x, &v)| (v - common::mp_pdf(0.5, 0.5, x)).abs())
            .fold(0.0, f64::max)
    };
    assert!(err(true) < err(false));
}

fn three_atom_measure() -> impl Strategy<Value = (SpectralMeasure, f64)> {
    (
        prop::collection::vec(0.2..3.0f64, 3),
        prop::collection::vec(0.1..1.0f64, 3),
        0.1..0.8f64,
    )
        .prop_map(|(taus, ws, y)| {
            let total: f64 = ws.iter().sum();
            let atoms = taus.into_iter().zip(ws.into_iter().map(|w| w / total)).collect();
            (SpectralMeasure::new(atoms).unwrap(), y)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inverted_density_has_unit_mass((h, y) in three_atom_measure()) {
        let (a, b) = h.support_bounds(y);
        let grid = linspace(a - 0.2, b + 0.2, 3000);
        let d = density_from_stieltjes(&h, y, &grid, 1e-5, &SolverConfig::default(), false).unwrap();
        let mass = d.integral();
        prop_assert!((mass - 1.0).abs() <= 0.02, "mass {mass}");
    }

    #[test]
    fn solver_postconditions((h, y) in three_atom_measure(), re in -1.0..4.0f64, im in 0.01..5.0f64) {
        let z = Complex64::new(re, im);
        let cfg = SolverConfig::default();
        let res = solve_stieltjes(&h, y, z, &cfg).unwrap();
        prop_assert!((res.m - fixed_point_map(&h, y, z, res.m)).norm() <= 10.0 * cfg.tol);
        prop_assert!(res.companion(y, z).im > 0.0);
        prop_assert!(res.m.im > 0.0);
    }
}
