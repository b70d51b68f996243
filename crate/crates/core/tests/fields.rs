use std::f64::consts::PI;
use std::sync::Arc;

use nlsk::fields::{compute_moments, exterior_mass, gaussian_profile, offcenter_v_moment, PotentialSpec, RadialGrid};
use nlsk::{Field, Grid, Potential};

fn unit_gaussian(r_max: f64, n: usize) -> Field {
    gaussian_profile(Arc::new(Grid::new(r_max, n).unwrap()), 1.0, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn gaussian_moments_match_closed_forms() {
    let sqrt_pi3 = PI.powf(1.5);
    let expected = [sqrt_pi3, 1.5 * sqrt_pi3, (PI / 2.0).powf(1.5)];
    for n in [1023, 2047] {
        let u = unit_gaussian(20.0, n);
        for (alpha, v_exact) in [(1.0, 2.0 * PI), (1.5, 2.0 * PI * libm::tgamma(0.75)), (2.0, 2.0 * sqrt_pi3)] {
            let pot = Potential::new_unchecked(1.0, alpha);
            let m = compute_moments(&u, &pot).unwrap();
            for (got, want) in [m.mass, m.kinetic, m.quartic].into_iter().zip(expected) {
                assert!(rel(got, want) < 1e-8, "n={n}: {got} vs {want}");
            }
            assert!(rel(m.v_moment, v_exact) < 1e-8, "n={n} alpha={alpha}: {} vs {v_exact}", m.v_moment);
            assert_eq!(m.xgradv_moment + alpha * m.v_moment, 0.0);
        }
    }
}

#[test]
fn nan_field_is_a_data_error() {
    let grid = Arc::new(Grid::new(10.0, 63).unwrap());
    let mut values = vec![num_complex::Complex::new(0.0, 0.0); 63];
    values[5].re = f64::NAN;
    assert!(nlsk::Field::new(grid, values, "bad").is_err());
}

#[test]
fn exterior_mass_of_the_unit_gaussian() {
    let u = unit_gaussian(20.0, 2047);
    let mass = compute_moments(&u, &Potential::free()).unwrap().mass;
    assert!(rel(exterior_mass(&u, 0.0).unwrap(), mass) < 1e-12);
    let want = 4.0 * PI * (2.0 * (-4.0f64).exp() / 2.0 + PI.sqrt() / 4.0 * libm::erfc(2.0));
    assert!((want - 0.2562).abs() < 1e-4);
    let got = exterior_mass(&u, 2.0).unwrap();
    assert!(rel(got, want) < 1e-8, "{got} vs {want}");
    // Off-node radius.
    let r: f64 = 1.2345;
    let want = 4.0 * PI * (r * (-r * r).exp() / 2.0 + PI.sqrt() / 4.0 * libm::erfc(r));
    assert!(rel(exterior_mass(&u, r).unwrap(), want) < 1e-8);
    assert!(exterior_mass(&u, 20.0).unwrap().abs() < 1e-12);
    assert!(exterior_mass(&u, 20.5).is_err());
}

#[test]
fn offcenter_coulomb_moment_obeys_the_shell_theorem() {
    // For alpha = 1 a spherical shell of radius s seen from distance d acts
    // like 1 / max(s, d), so the oracle is a one-dimensional integral.
    let u = unit_gaussian(20.0, 2047);
    let pot = Potential::new_unchecked(1.0, 1.0);
    for d in [0.0, 0.5, 1.0, 3.0, 10.0] {
        let oracle = 4.0 * PI * simpson(|s| s * s * (-s * s).exp() / s.max(d).max(1e-300), 0.0, 20.0, 200_000);
        let oracle = if d == 0.0 { 2.0 * PI } else { oracle };
        let got = offcenter_v_moment(&u, &pot, d).unwrap();
        assert!(rel(got, oracle) < 1e-7, "d={d}: {got} vs {oracle}");
    }
}

#[test]
fn offcenter_moment_limits() {
    let u = unit_gaussian(20.0, 2047);
    let pot = Potential::new(1.0, 1.5).unwrap();
    let centered = compute_moments(&u, &pot).unwrap().v_moment;
    assert!(rel(offcenter_v_moment(&u, &pot, 0.0).unwrap(), centered) < 1e-10);
    assert_eq!(offcenter_v_moment(&u, &PotentialSpec::new(0.0, 1.5).unwrap(), 7.0).unwrap(), 0.0);
    let mass = compute_moments(&u, &Potential::free()).unwrap().mass;
    let mut last = f64::INFINITY;
    for d in [5.0, 10.0, 20.0, 40.0, 80.0] {
        let v = offcenter_v_moment(&u, &pot, d).unwrap();
        assert!(v < last);
        // Far away the shell sees the point mass.
        if d >= 20.0 {
            assert!(rel(v, mass * d.powf(-1.5)) < 1e-2, "d={d}");
        }
        last = v;
    }
    assert!(offcenter_v_moment(&u, &pot, -1.0).is_err());
}

#[test]
fn single_precision_moments() {
    let grid = Arc::new(RadialGrid::<f32>::new(20.0, 1023).unwrap());
    let u = gaussian_profile(grid, 1.0f32, 1.0).unwrap();
    let m = compute_moments(&u, &PotentialSpec::new(1.0f32, 2.0).unwrap()).unwrap();
    let sqrt_pi3 = std::f32::consts::PI.powf(1.5);
    assert!((m.mass / sqrt_pi3 - 1.0).abs() < 1e-5);
    assert!((m.v_moment / (2.0 * sqrt_pi3) - 1.0).abs() < 1e-4);
}
