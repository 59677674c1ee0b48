use std::sync::Arc;

use proptest::prelude::*;
use steklov_core::field_eval::{boundary_lp_norm, slice_lp_norm, slice_pairings, HarmonicField};
use steklov_core::geometry::{preset, Geometry, PRESETS};
use steklov_core::mixtures::{basis_functions, random_mixture};
use steklov_core::report::format_float;
use steklov_core::spectrum::{spectrum_table, ModeShape};

fn geometry(i: usize) -> Arc<Geometry> {
    Arc::new(preset(PRESETS[i % PRESETS.len()]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn k_is_increasing_from_zero(i in 0usize..6, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let g = geometry(i);
        let d = g.collar_depth();
        let (lo, hi) = if a < b { (a * d, b * d) } else { (b * d, a * d) };
        prop_assert_eq!(g.k(0.0), 0.0);
        prop_assert!(g.k(lo) <= g.k(hi) + 1e-15);
        let h = 1e-5;
        prop_assert!((g.k(h) / h - 1.0).abs() < 1e-3);
    }

    #[test]
    fn k_equals_g_on_symmetric_geometries(i in 0usize..6, a in 0.0f64..1.0) {
        let g = geometry(i);
        prop_assume!(g.is_symmetric());
        let t = a * g.collar_depth();
        prop_assert!((g.k(t) - g.g(t)).abs() < 1e-9);
    }

    #[test]
    fn k_closed_form_matches_quadrature(i in 0usize..6, a in 0.0f64..1.0) {
        let g = geometry(i);
        let t = a * g.collar_depth();
        if let Some(k) = g.k_closed_form(t) {
            prop_assert!((k - g.k_quadrature(t)).abs() < 1e-10 * (1.0 + k));
        }
        prop_assert!((g.k_from_theta(t) - g.k_quadrature(t)).abs() < 1e-9);
    }

    #[test]
    fn interpolated_profile_derivative_consistent(i in 0usize..6, pick in 0usize..1000, a in 0.05f64..0.95) {
        let g = geometry(i);
        let table = spectrum_table(&g, 15.0).unwrap();
        let m = &table[pick % table.len()];
        let (lo, hi) = g.coordinate_range();
        let s = lo + a * (hi - lo);
        let h = 1e-5 * (hi - lo);
        let fd = (m.radial(s + h).0 - m.radial(s - h).0) / (2.0 * h);
        let scale = m.profile_scale() * (1.0 + m.lambda);
        prop_assert!((fd - m.radial(s).1).abs() < 1e-6 * scale, "{} vs {}", fd, m.radial(s).1);
        if let ModeShape::Warped { .. } = m.shape {
            prop_assert!(m.boundary_residual() < 1e-7 * scale);
        }
    }

    #[test]
    fn single_mode_frequency_at_boundary_is_lambda(i in 0usize..6, pick in 0usize..1000) {
        let g = geometry(i);
        let table = spectrum_table(&g, 20.0).unwrap();
        let basis = basis_functions(&g, &table);
        let (m, ang) = basis[pick % basis.len()].clone();
        let field = HarmonicField::single(g, m.clone(), ang);
        let (h, d) = slice_pairings(&field, 0.0).unwrap();
        prop_assert!((d / h - m.lambda).abs() < 1e-8 * (1.0 + m.lambda));
    }

    #[test]
    fn mixtures_reproducible_and_slice_zero_is_boundary(i in 0usize..6, seed in any::<u64>()) {
        let g = geometry(i);
        let pool = basis_functions(&g, &spectrum_table(&g, 12.0).unwrap());
        let a = random_mixture(g.clone(), &pool, 6, seed).unwrap();
        let b = random_mixture(g.clone(), &pool, 6, seed).unwrap();
        prop_assert_eq!(&a.terms, &b.terms);
        let s0 = slice_lp_norm(&a, 0.0, 2.0).unwrap();
        let bd = boundary_lp_norm(&a, 2.0).unwrap();
        prop_assert!((s0 - bd).abs() < 1e-10 * bd);
    }

    #[test]
    fn float_format_round_trips(v in any::<f64>()) {
        prop_assume!(v.is_finite());
        prop_assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
    }
}
