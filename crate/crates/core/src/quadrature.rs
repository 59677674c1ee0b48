//! Quadrature rules and summation helpers shared by the norm and Gram computations.
//!
//! Gauss–Legendre nodes come from `gauss-quad`; everything here works in plain `f64`
//! and sums with pairwise summation so results do not depend on evaluation order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre order used on each panel of a composite rule.
pub const PANEL_ORDER: usize = 20;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`, cached per order.
pub fn gauss_legendre(n: usize) -> Arc<[(f64, f64)]> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[(f64, f64)]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(n.max(1).try_into().expect("nonzero order"));
            let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs.into()
        })
        .clone()
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `∫_a^b f` with one Gauss–Legendre rule of order `n`.
pub fn gauss_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let terms: Vec<f64> = rule.iter().map(|&(x, w)| w * f(mid + half * x)).collect();
    half * pairwise_sum(&terms)
}

/// Composite Gauss–Legendre over `panels` equal panels of order [`PANEL_ORDER`].
pub fn composite_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let parts: Vec<f64> = (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            gauss_integrate(f, lo, hi, PANEL_ORDER)
        })
        .collect();
    pairwise_sum(&parts)
}

/// Adaptive Simpson quadrature to relative tolerance `rel_tol` with recursion depth cap.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // absolute target from a coarse magnitude estimate
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, rel_tol * scale, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection on a sign-changing bracket; returns the midpoint once the bracket is below `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Integral of `weight · |f|^p` over `[a, b]` (or `sup |f|` when `p` is infinite).
///
/// The interval is cut into `cells` equal cells; cells where `f` changes sign are split at
/// the root so that each piece integrates a smooth integrand with Gauss–Legendre.
pub fn lp_power_1d<F, W>(f: &F, weight: &W, a: f64, b: f64, cells: usize, p: f64) -> f64
where
    F: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let cells = cells.max(1);
    let h = (b - a) / cells as f64;
    let nodes: Vec<f64> = (0..=cells)
        .map(|i| if i == cells { b } else { a + h * i as f64 })
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
    if p.is_infinite() {
        return sup_1d(f, &nodes, &values);
    }
    let piece = |lo: f64, hi: f64| {
        let g = |x: f64| weight(x) * f(x).abs().powf(p);
        gauss_integrate(&g, lo, hi, PANEL_ORDER)
    };
    let parts: Vec<f64> = (0..cells)
        .map(|i| {
            let (lo, hi) = (nodes[i], nodes[i + 1]);
            let (flo, fhi) = (values[i], values[i + 1]);
            if flo != 0.0 && fhi != 0.0 && (flo > 0.0) != (fhi > 0.0) {
                let root = bisect(f, lo, hi, 1e-15 * (1.0 + hi.abs()));
                piece(lo, root) + piece(root, hi)
            } else {
                piece(lo, hi)
            }
        })
        .collect();
    pairwise_sum(&parts)
}

fn sup_1d<F: Fn(f64) -> f64>(f: &F, nodes: &[f64], values: &[f64]) -> f64 {
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut best = abs.iter().cloned().fold(0.0, f64::max);
    // polish every local maximum that comes within 10% of the node maximum
    let g = |x: f64| f(x).abs();
    for i in 0..abs.len() {
        let left = if i == 0 { 0.0 } else { abs[i - 1] };
        let right = if i + 1 == abs.len() { 0.0 } else { abs[i + 1] };
        if abs[i] >= left && abs[i] >= right && abs[i] >= 0.9 * best {
            let lo = nodes[i.saturating_sub(1)];
            let hi = nodes[(i + 1).min(nodes.len() - 1)];
            if hi > lo {
                let (_, v) = golden_section_max(&g, lo, hi, 1e-12 * (1.0 + hi.abs()));
                best = best.max(v);
            }
        }
    }
    best
}

/// Repeats `compute(cells)` with doubled cell counts until two successive values agree to
/// `rel_tol`; returns the finer value.
pub fn refine_until_stable<C>(compute: C, base_cells: usize, rel_tol: f64, what: &str) -> Result<f64>
where
    C: Fn(usize) -> f64,
{
    let mut cells = base_cells.max(1);
    let mut previous = compute(cells);
    let mut last_change = f64::INFINITY;
    for _ in 0..5 {
        cells *= 2;
        let next = compute(cells);
        let scale = next.abs().max(previous.abs());
        let change = if scale == 0.0 { 0.0 } else { (next - previous).abs() / scale };
        if change <= rel_tol {
            return Ok(next);
        }
        last_change = change;
        previous = next;
    }
    Err(Error::QuadratureUnderresolved { what: what.to_string(), change: last_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let f = |x: f64| 7.0 * x.powi(9) - 3.0 * x.powi(4) + 1.0;
        // exact: 0 - 6/5 + 2
        assert!((gauss_integrate(&f, -1.0, 1.0, 5) - 0.8).abs() < 1e-14);
    }

    #[test]
    fn simpson_matches_arctan() {
        let f = |s: f64| 2.0 / (1.0 + (1.0 - s) * (1.0 - s));
        let v = adaptive_simpson(&f, 0.0, 0.5, 1e-10, 40);
        let exact = 2.0 * (1f64.atan() - 0.5f64.atan());
        assert!(((v - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn l1_norm_of_cosine_uses_root_splitting() {
        let f = |x: f64| (5.0 * x).cos();
        let w = |_: f64| 1.0;
        let v = lp_power_1d(&f, &w, 0.0, 2.0 * PI, 36, 1.0);
        assert!((v - 4.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn sup_is_polished_between_nodes() {
        let f = |x: f64| (3.0 * x + 0.123).sin();
        let w = |_: f64| 1.0;
        let v = lp_power_1d(&f, &w, 0.0, 2.0 * PI, 7, f64::INFINITY);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_agrees_with_naive_on_small_input() {
        let xs: Vec<f64> = (1..=1000).map(|k| 1.0 / k as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn refinement_reports_unresolved() {
        // an oscillating value that never settles
        let r = refine_until_stable(|n| (n as f64).sin(), 3, 1e-9, "test");
        assert!(matches!(r, Err(Error::QuadratureUnderresolved { .. })));
    }
}
