//! Slice mass `H`, Dirichlet pairing `D`, frequency `N = D/H`, their differential identities,
//! and the exponential lower-bound certificate.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field_eval::{boundary_lp_norm, slice_lp_norm_with, slice_pairings, weingarten_mass, HarmonicField, QuadratureSpec};
use crate::verifier::{BoundKind, Sample, VerdictReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTrace {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    pub n: Vec<f64>,
    /// `N(0)`, the frequency of the boundary data.
    pub lambda: f64,
    pub r_h: Vec<f64>,
    pub r_n: Vec<f64>,
}

/// Residuals of `H' = -2D - ∫ Tr𝒲 u²` and `N' = Θ N + O(1)` at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub t: f64,
    pub r_h: f64,
    pub r_n: f64,
}

/// Uniform grid of `count` points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count).map(|i| if i + 1 == count { b } else { a + (b - a) * i as f64 / (count - 1) as f64 }).collect(),
    }
}

fn pairings(field: &HarmonicField, t_grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut h = Vec::with_capacity(t_grid.len());
    let mut d = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (ht, dt) = slice_pairings(field, t)?;
        h.push(ht);
        d.push(dt);
    }
    Ok((h, d))
}

/// Second-order finite differences on a uniform grid (one-sided three-point at the ends).
fn derivative(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    if n < 3 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step)
            } else if i + 1 == n {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * step)
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * step)
            }
        })
        .collect()
}

/// Fourth-order differences (five-point stencils, one-sided near the ends).
fn derivative4(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    if n < 5 {
        return derivative(values, step);
    }
    let v = values;
    (0..n)
        .map(|i| {
            let d = if i >= 2 && i + 2 < n {
                v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]
            } else if i < 2 {
                let w = &v[0..5];
                match i {
                    0 => -25.0 * w[0] + 48.0 * w[1] - 36.0 * w[2] + 16.0 * w[3] - 3.0 * w[4],
                    _ => -3.0 * w[0] - 10.0 * w[1] + 18.0 * w[2] - 6.0 * w[3] + w[4],
                }
            } else {
                let w = &v[n - 5..n];
                match n - 1 - i {
                    0 => 25.0 * w[4] - 48.0 * w[3] + 36.0 * w[2] - 16.0 * w[1] + 3.0 * w[0],
                    _ => 3.0 * w[4] + 10.0 * w[3] - 18.0 * w[2] + 6.0 * w[1] - w[0],
                }
            };
            d / (12.0 * step)
        })
        .collect()
}

fn grid_step(t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() < 3 {
        return Err(Error::InvalidArgument("finite differences need at least 3 grid points".into()));
    }
    let step = (t_grid[t_grid.len() - 1] - t_grid[0]) / (t_grid.len() - 1) as f64;
    let uniform = t_grid.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs());
    if !(step > 0.0) || !uniform {
        return Err(Error::InvalidArgument("t grid must be uniform and increasing".into()));
    }
    Ok(step)
}

/// `H, D, N` on `t_grid` with the identity residuals filled in when the grid is uniform.
pub fn frequency_trace(field: &HarmonicField, t_grid: &[f64]) -> Result<FrequencyTrace> {
    let (h0, d0) = slice_pairings(field, 0.0)?;
    if !(h0 > 0.0) {
        return Err(Error::ZeroField);
    }
    let (h, d) = pairings(field, t_grid)?;
    let n: Vec<f64> = h.iter().zip(&d).map(|(h, d)| d / h).collect();
    let (r_h, r_n) = if grid_step(t_grid).is_ok() {
        let res = identity_residuals(field, t_grid)?;
        (res.iter().map(|r| r.r_h).collect(), res.iter().map(|r| r.r_n).collect())
    } else {
        (vec![f64::NAN; t_grid.len()], vec![f64::NAN; t_grid.len()])
    };
    Ok(FrequencyTrace { t: t_grid.to_vec(), h, d, n, lambda: d0 / h0, r_h, r_n })
}

/// `r_H = |H'_fd + 2D + ∫ Tr𝒲 u²|` and `r_N = N'_fd - Θ N` on a uniform grid. `H'` uses
/// second-order differences; `N'` uses fourth-order ones so that `r_N` is not swamped by the
/// `h² N‴` truncation error at high frequency.
pub fn identity_residuals(field: &HarmonicField, t_grid: &[f64]) -> Result<Vec<IdentityResidual>> {
    let step = grid_step(t_grid)?;
    let (h, d) = pairings(field, t_grid)?;
    if h.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::ZeroField);
    }
    let n: Vec<f64> = h.iter().zip(&d).map(|(h, d)| d / h).collect();
    let dh = derivative(&h, step);
    let dn = derivative4(&n, step);
    let geom = &field.geometry;
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let w = weingarten_mass(field, t)?;
            Ok(IdentityResidual { t, r_h: (dh[i] + 2.0 * d[i] + w).abs(), r_n: dn[i] - geom.theta(t) * n[i] })
        })
        .collect()
}

/// Ratio `max r_H(h) / max r_H(h/2)` on `[a, b]`; fails with [`Error::GridTooCoarse`] if the
/// residual does not decrease. `None` when the coarse residual is already at rounding level
/// (e.g. `H` quadratic in `t`, where second-order differences are exact).
pub fn residual_halving_ratio(field: &HarmonicField, a: f64, b: f64, count: usize) -> Result<Option<f64>> {
    let grid = uniform_grid(a, b, count);
    let coarse = identity_residuals(field, &grid)?;
    let fine = identity_residuals(field, &uniform_grid(a, b, 2 * count - 1))?;
    let max = |r: &[IdentityResidual]| r.iter().map(|x| x.r_h).fold(0.0, f64::max);
    let (c, f) = (max(&coarse), max(&fine));
    let (h, d) = pairings(field, &grid)?;
    let scale = h.iter().zip(&d).map(|(h, d)| h + 2.0 * d.abs()).fold(0.0, f64::max);
    if c <= ROUNDING_LEVEL * scale {
        return Ok(None);
    }
    if !(f < c) {
        return Err(Error::GridTooCoarse { coarse: c, fine: f });
    }
    Ok(Some(c / f))
}

const ROUNDING_LEVEL: f64 = 1e-11;

/// Largest `C` with `‖u‖_{L²(Σ_t)} ≥ C e^{-Λ K(t)} ‖f‖_{L²(M)}` on the grid, with the samples.
pub fn fitted_lower_constant(field: &HarmonicField, t_grid: &[f64], quad: &QuadratureSpec) -> Result<(f64, Vec<Sample>)> {
    let (h0, d0) = slice_pairings(field, 0.0)?;
    if !(h0 > 0.0) {
        return Err(Error::ZeroField);
    }
    let lambda = d0 / h0;
    let boundary = boundary_lp_norm(field, 2.0)?;
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let slice = slice_lp_norm_with(field, t, 2.0, quad)?;
        let k = field.geometry.k(t);
        let measured = (slice / boundary).ln();
        let bound = -lambda * k;
        samples.push(Sample::new(&[("t", t), ("Lambda", lambda)], measured.exp(), bound.exp()));
    }
    let c = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    Ok((c, samples))
}

/// Lower-bound certificate for one field: fitted `C` at the given resolution and with both the
/// t-grid and quadrature doubled.
pub fn lower_bound_certificate(field: &HarmonicField, t_grid: &[f64]) -> Result<VerdictReport> {
    lower_bound_family(std::slice::from_ref(field), t_grid, 0.0)
}

/// Certificate over a family of fields on one geometry: `C` is the minimum over the family.
/// Passes iff `C > floor` and `C` drifts by less than 10% under doubling.
pub fn lower_bound_family(fields: &[HarmonicField], t_grid: &[f64], floor: f64) -> Result<VerdictReport> {
    let start = Instant::now();
    let doubled_grid = match (t_grid.first(), t_grid.last()) {
        (Some(&a), Some(&b)) if t_grid.len() > 1 => uniform_grid(a, b, 2 * t_grid.len() - 1),
        _ => t_grid.to_vec(),
    };
    let mut c = f64::INFINITY;
    let mut c_refined = f64::INFINITY;
    let mut samples = Vec::new();
    for (i, field) in fields.iter().enumerate() {
        let quad = QuadratureSpec::for_field(field);
        let (ci, si) = fitted_lower_constant(field, t_grid, &quad)?;
        let (cr, _) = fitted_lower_constant(field, &doubled_grid, &quad.doubled())?;
        c = c.min(ci);
        c_refined = c_refined.min(cr);
        samples.extend(si.into_iter().map(|mut s| {
            s.params.insert("field".into(), i as f64);
            s
        }));
    }
    let name = fields.first().map(|f| f.geometry.name()).unwrap_or_default();
    Ok(VerdictReport::build(
        "lower_bound_exp_K",
        format!("{} fields on {name}, {} t-points on [{}, {}]", fields.len(), t_grid.len(), t_grid.first().copied().unwrap_or(0.0), t_grid.last().copied().unwrap_or(0.0)),
        BoundKind::Lower,
        samples,
        c,
        c_refined,
        c > floor,
        vec![format!("C = min_t ||u||_{{L2(Sigma_t)}} e^{{Lambda K(t)}} / ||f||_{{L2(M)}}; floor {floor}")],
        start,
    ))
}
