//! Eigenvalues frozen from an independent DOP853 two-point DtN computation, plus an in-test
//! finite-difference DtN oracle.

use steklov_core::geometry::{preset, CrossFrequency, Geometry, WarpedProductGeometry};
use steklov_core::mixtures::Rng64;
use steklov_core::spectrum::{modes_for_frequency, quadratic_dtn_roots, spectrum_table};

fn warped(name: &str) -> WarpedProductGeometry {
    match preset(name).unwrap() {
        Geometry::Warped(w) => w,
        _ => unreachable!(),
    }
}

fn freq(name: &str, mu: f64) -> CrossFrequency {
    let g = preset(name).unwrap();
    g.cross_section().frequencies(mu + 1.0).into_iter().find(|f| (f.mu - mu).abs() < 1e-12).unwrap()
}

fn lowest_two(name: &str, mu: f64) -> [f64; 2] {
    let g = preset(name).unwrap();
    let modes = modes_for_frequency(&g, &freq(name, mu), 40.0).unwrap();
    [modes[0].lambda, modes[1].lambda]
}

// (preset, mu, two lowest eigenvalues) to 8 digits
const FROZEN: [(&str, f64, [f64; 2]); 9] = [
    ("cylinder", 3.0, [2.98516426, 3.01490947]),
    ("exTorus", 1.0, [0.3278971, 0.76243431]),
    ("exTorus", 2.0, [0.91715234, 1.09033141]),
    ("asym-exp", 1.0, [0.69245453, 1.44413815]),
    ("asym-exp", 0.0, [0.0, 1.02074704]),
    ("asym-exp", 3.0, [2.33629895, 3.85224673]),
    ("concave", 0.0, [0.0, 2.30940108]),
    ("concave", std::f64::consts::SQRT_2, [3.46410162, 3.80189147]),
    ("concave", 2.449489742783178, [5.73826144, 5.77350269]),
];

#[test]
fn frozen_low_eigenvalues() {
    for (name, mu, want) in FROZEN {
        let got = lowest_two(name, mu);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-7, "{name} mu={mu}: {g} vs {w}");
        }
    }
}

/// Two-point DtN matrix from central differences on `m` intervals; eigenvalues of the 2×2.
fn fd_dtn(geom: &WarpedProductGeometry, mu: f64, m: usize) -> [f64; 2] {
    let r = geom.half_length;
    let h = 2.0 * r / m as f64;
    let s: Vec<f64> = (0..=m).map(|i| -r + i as f64 * h).collect();
    let n = geom.n() as f64;
    let solve = |left: f64, right: f64| -> Vec<f64> {
        // b'' + a b' - q b = 0, Thomas algorithm on interior nodes
        let k = m - 1;
        let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for i in 0..k {
            let x = s[i + 1];
            let a = n * geom.rho_prime(x) / geom.rho(x);
            let q = mu * mu / geom.rho(x).powi(2);
            lo[i] = 1.0 / (h * h) - a / (2.0 * h);
            di[i] = -2.0 / (h * h) - q;
            up[i] = 1.0 / (h * h) + a / (2.0 * h);
        }
        rhs[0] -= lo[0] * left;
        rhs[k - 1] -= up[k - 1] * right;
        for i in 1..k {
            let w = lo[i] / di[i - 1];
            di[i] -= w * up[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut b = vec![0.0; m + 1];
        b[0] = left;
        b[m] = right;
        b[k] = rhs[k - 1] / di[k - 1];
        for i in (0..k - 1).rev() {
            b[i + 1] = (rhs[i] - up[i] * b[i + 2]) / di[i];
        }
        b
    };
    let flux = |b: &[f64]| {
        let left = -(-3.0 * b[0] + 4.0 * b[1] - b[2]) / (2.0 * h);
        let right = (3.0 * b[m] - 4.0 * b[m - 1] + b[m - 2]) / (2.0 * h);
        (left, right)
    };
    let (a00, a10) = flux(&solve(1.0, 0.0));
    let (a01, a11) = flux(&solve(0.0, 1.0));
    let tr = a00 + a11;
    let det = a00 * a11 - a01 * a10;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    [tr / 2.0 - disc, tr / 2.0 + disc]
}

#[test]
fn finite_difference_dtn_oracle() {
    for (name, mus) in [("exTorus", vec![1.0, 2.0, 4.0]), ("asym-exp", vec![0.0, 1.0, 3.0, 5.0]), ("cylinder", vec![1.0, 6.0])] {
        let w = warped(name);
        for mu in mus {
            let fd = fd_dtn(&w, mu, 10_000);
            let got = lowest_two(name, mu);
            for (g, f) in got.iter().zip(fd) {
                assert!((g - f).abs() < 1e-5 * (1.0 + f.abs()), "{name} mu={mu}: {g} vs fd {f}");
            }
        }
    }
}

#[test]
fn quadratic_route_matches_table_on_asymmetric_preset() {
    let w = warped("asym-exp");
    let g = preset("asym-exp").unwrap();
    for mu in [0.0, 2.0, 7.0] {
        let roots = quadratic_dtn_roots(&w, mu).unwrap();
        let modes = modes_for_frequency(&g, &freq("asym-exp", mu), 60.0).unwrap();
        assert_eq!(roots.len(), 2);
        for (r, m) in roots.iter().zip(&modes) {
            assert!((r - m.lambda).abs() < 1e-8, "mu={mu}: {r} vs {}", m.lambda);
        }
    }
}

#[test]
fn cylinder_closed_form() {
    let g = preset("cylinder").unwrap();
    for k in 1..=10 {
        let mu = k as f64;
        let got = lowest_two("cylinder", mu);
        assert!((got[0] - mu * mu.tanh()).abs() < 1e-8);
        assert!((got[1] - mu / mu.tanh()).abs() < 1e-8);
    }
    assert!(spectrum_table(&g, 10.0).unwrap().iter().all(|m| m.boundary_residual() < 1e-8 * m.profile_scale().max(1.0)));
}

#[test]
fn splitmix_reference_stream() {
    let mut rng = Rng64::new(1234567);
    assert_eq!([rng.next_u64(), rng.next_u64(), rng.next_u64()], [6457827717110365317, 3203168211198807973, 9817491932198370423]);
}
