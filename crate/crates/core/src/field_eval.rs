//! Harmonic fields as finite mode superpositions, and their `L^p` norms on slices `Σ_t`,
//! on `Ω`, and along transversal segments.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AngularMode, CrossSection, Geometry, Side};
use crate::quadrature::{composite_gauss, lp_power_1d, pairwise_sum, refine_until_stable};
use crate::spectrum::SteklovMode;

const REFINE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldTerm {
    pub coef: f64,
    pub mode: Arc<SteklovMode>,
    pub angular: AngularMode,
}

/// `u = Σ c_j b_j ⊗ e_j` on one geometry.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicField {
    #[serde(skip)]
    pub geometry: Arc<Geometry>,
    pub terms: Vec<FieldTerm>,
    pub description: String,
    #[serde(skip)]
    groups: Vec<Vec<usize>>,
}

impl HarmonicField {
    pub fn new(geometry: Arc<Geometry>, terms: Vec<FieldTerm>, description: impl Into<String>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| !t.coef.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coefficient {}", t.coef)));
        }
        let mut by_mode: BTreeMap<&AngularMode, Vec<usize>> = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            by_mode.entry(&t.angular).or_default().push(i);
        }
        let groups = by_mode.into_values().collect();
        Ok(Self { geometry, terms, description: description.into(), groups })
    }

    pub fn single(geometry: Arc<Geometry>, mode: Arc<SteklovMode>, angular: AngularMode) -> Self {
        let description = format!("mode lambda={} mu={}", mode.lambda, mode.mu);
        Self::new(geometry, vec![FieldTerm { coef: 1.0, mode, angular }], description).expect("unit coefficient is finite")
    }

    /// Largest cross-sectional frequency and zonal degree among the terms.
    fn angular_extent(&self) -> (f64, usize) {
        let cross = self.geometry.cross_section();
        let mut mu: f64 = 0.0;
        let mut degree = 0;
        for t in &self.terms {
            mu = mu.max(t.angular.frequency_squared(&cross).sqrt());
            if let AngularMode::Zonal { degree: l } = t.angular {
                degree = degree.max(l);
            }
            if let AngularMode::Fourier { wave, .. } = &t.angular {
                degree = degree.max(wave.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0));
            }
        }
        (mu, degree)
    }

    /// `Σ_{j in group} c_j b_j(coord)` and the same with `∂b_j`, one entry per angular mode.
    pub fn grouped_radial(&self, coord: f64) -> Vec<(f64, f64)> {
        self.groups
            .iter()
            .map(|g| {
                let vals: Vec<(f64, f64)> = g
                    .iter()
                    .map(|&i| {
                        let (b, db) = self.terms[i].mode.radial(coord);
                        (self.terms[i].coef * b, self.terms[i].coef * db)
                    })
                    .collect();
                let v: Vec<f64> = vals.iter().map(|x| x.0).collect();
                let d: Vec<f64> = vals.iter().map(|x| x.1).collect();
                (pairwise_sum(&v), pairwise_sum(&d))
            })
            .collect()
    }

    fn group_modes(&self) -> Vec<&AngularMode> {
        self.groups.iter().map(|g| &self.terms[g[0]].angular).collect()
    }

    /// Angular function `x ↦ u(coord, x)` as (mode, coefficient) pairs.
    fn slice_function(&self, coord: f64) -> Vec<(AngularMode, f64)> {
        self.group_modes()
            .into_iter()
            .cloned()
            .zip(self.grouped_radial(coord).into_iter().map(|(v, _)| v))
            .collect()
    }

    /// Value at profile coordinate `coord` and cross-section point `point`.
    pub fn eval_at(&self, coord: f64, point: &[f64]) -> f64 {
        let parts: Vec<f64> = self.slice_function(coord).iter().map(|(m, c)| c * m.eval(point)).collect();
        pairwise_sum(&parts)
    }
}

/// Quadrature counts for slice and volume norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Trapezoid points per circle/torus direction (also the number of root-splitting cells).
    pub n_theta: usize,
    /// Cells in `cos φ` on the sphere.
    pub n_phi: usize,
    /// Gauss–Legendre nodes in the radial/axial direction.
    pub n_s: usize,
}

impl QuadratureSpec {
    pub fn for_field(field: &HarmonicField) -> Self {
        let (mu, degree) = field.angular_extent();
        Self { n_theta: (4.0 * mu).ceil() as usize + 16, n_phi: 2 * degree + 16, n_s: 64 }
    }

    pub fn doubled(&self) -> Self {
        Self { n_theta: 2 * self.n_theta, n_phi: 2 * self.n_phi, n_s: 2 * self.n_s }
    }
}

/// A point of `Σ_t`: boundary side and cross-section coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePoint {
    pub side: Side,
    pub angles: Vec<f64>,
}

fn check_depth(geom: &Geometry, t: f64) -> Result<()> {
    let max = geom.collar_depth();
    if !(t >= 0.0) || t > max * (1.0 + 1e-12) {
        return Err(Error::DepthOutOfRange { t, max });
    }
    Ok(())
}

/// `u` at depth `t` over a boundary point.
pub fn eval_field(field: &HarmonicField, t: f64, x: &SlicePoint) -> Result<f64> {
    check_depth(&field.geometry, t)?;
    let coord = field.geometry.slice_coordinate(x.side, t);
    Ok(field.eval_at(coord, &x.angles))
}

/// `∫_{M₀} |f|^p` (or `sup |f|` for infinite `p`) for a finite angular sum.
fn cross_lp_power(cross: &CrossSection, f: &[(AngularMode, f64)], p: f64, quad: &QuadratureSpec) -> Result<f64> {
    if p == 2.0 {
        return Ok(pairwise_sum(&f.iter().map(|(_, c)| c * c).collect::<Vec<_>>()));
    }
    let eval = |point: &[f64]| pairwise_sum(&f.iter().map(|(m, c)| c * m.eval(point)).collect::<Vec<_>>());
    match *cross {
        CrossSection::Circle | CrossSection::Torus { dim: 1 } => {
            let g = |x: f64| eval(&[x]);
            Ok(lp_power_1d(&g, &|_| 1.0, 0.0, 2.0 * PI, quad.n_theta, p))
        }
        CrossSection::Torus { dim } => {
            let n = quad.n_theta;
            let h = 2.0 * PI / n as f64;
            let mut idx = vec![0usize; dim];
            let mut vals = Vec::with_capacity(n.pow(dim as u32));
            loop {
                let point: Vec<f64> = idx.iter().map(|&i| h * i as f64).collect();
                vals.push(eval(&point));
                let mut k = 0;
                while k < dim {
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == dim {
                    break;
                }
            }
            if p.is_infinite() {
                return Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())));
            }
            let cell = h.powi(dim as i32);
            Ok(cell * pairwise_sum(&vals.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>()))
        }
        CrossSection::Sphere { dim: 2 } => {
            if f.iter().any(|(m, _)| !matches!(m, AngularMode::Zonal { .. })) {
                return Err(Error::Unsupported("only zonal modes on the sphere".into()));
            }
            let g = |x: f64| pairwise_sum(&f.iter().map(|(m, c)| c * m.eval_zonal_cos(x)).collect::<Vec<_>>());
            Ok(lp_power_1d(&g, &|_| 2.0 * PI, -1.0, 1.0, quad.n_phi, p))
        }
        CrossSection::Sphere { dim } => {
            Err(Error::Unsupported(format!("L^p norms with p != 2 on S^{dim}")))
        }
    }
}

fn slice_power(field: &HarmonicField, t: f64, p: f64, quad: &QuadratureSpec) -> Result<f64> {
    let geom = &field.geometry;
    let cross = geom.cross_section();
    let mut parts = Vec::new();
    for &side in geom.sides() {
        let coord = geom.slice_coordinate(side, t);
        let f = field.slice_function(coord);
        let inner = cross_lp_power(&cross, &f, p, quad)?;
        parts.push(if p.is_infinite() { inner } else { geom.slice_density(coord) * inner });
    }
    Ok(if p.is_infinite() { parts.iter().cloned().fold(0.0, f64::max) } else { pairwise_sum(&parts) })
}

fn power_to_norm(power: f64, p: f64) -> f64 {
    if p.is_infinite() {
        power
    } else {
        power.max(0.0).powf(1.0 / p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must lie in [1, inf], got {p}")));
    }
    Ok(())
}

/// `‖u‖_{L^p(Σ_t)}` with the default quadrature for the field.
pub fn slice_lp_norm(field: &HarmonicField, t: f64, p: f64) -> Result<f64> {
    slice_lp_norm_with(field, t, p, &QuadratureSpec::for_field(field))
}

pub fn slice_lp_norm_with(field: &HarmonicField, t: f64, p: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_p(p)?;
    check_depth(&field.geometry, t)?;
    if p == 2.0 {
        return Ok(power_to_norm(slice_power(field, t, p, quad)?, p));
    }
    let cross = field.geometry.cross_section();
    let base = match cross {
        CrossSection::Sphere { .. } => quad.n_phi,
        _ => quad.n_theta,
    };
    let compute = |cells: usize| {
        let q = QuadratureSpec { n_theta: quad.n_theta * cells / base, n_phi: quad.n_phi * cells / base, ..*quad };
        slice_power(field, t, p, &q).unwrap_or(f64::NAN)
    };
    // surface Unsupported before refinement
    slice_power(field, t, p, quad)?;
    let power = refine_until_stable(compute, base, REFINE_TOL, "slice norm")?;
    Ok(power_to_norm(power, p))
}

/// `‖f‖_{L^p(M)}` of the boundary trace.
pub fn boundary_lp_norm(field: &HarmonicField, p: f64) -> Result<f64> {
    slice_lp_norm(field, 0.0, p)
}

/// `(H(t), D(t))` = `(∫_{Σ_t} u², -∫_{Σ_t} u ∂_t u)`.
pub fn slice_pairings(field: &HarmonicField, t: f64) -> Result<(f64, f64)> {
    check_depth(&field.geometry, t)?;
    let geom = &field.geometry;
    let mut h = Vec::new();
    let mut d = Vec::new();
    for &side in geom.sides() {
        let coord = geom.slice_coordinate(side, t);
        let sigma = geom.normal_sign(side);
        let density = geom.slice_density(coord);
        for (v, dv) in field.grouped_radial(coord) {
            h.push(density * v * v);
            d.push(-density * sigma * v * dv);
        }
    }
    Ok((pairwise_sum(&h), pairwise_sum(&d)))
}

/// `∫_{Σ_t} (Tr 𝒲) u²`.
pub fn weingarten_mass(field: &HarmonicField, t: f64) -> Result<f64> {
    check_depth(&field.geometry, t)?;
    let geom = &field.geometry;
    let mut parts = Vec::new();
    for &side in geom.sides() {
        let coord = geom.slice_coordinate(side, t);
        let w = geom.trace_weingarten(side, t) * geom.slice_density(coord);
        for (v, _) in field.grouped_radial(coord) {
            parts.push(w * v * v);
        }
    }
    Ok(pairwise_sum(&parts))
}

/// `‖u‖_{L^p(Ω)}`, stacking slice integrals in the profile coordinate.
pub fn volume_lp_norm(field: &HarmonicField, p: f64) -> Result<f64> {
    volume_lp_norm_with(field, p, &QuadratureSpec::for_field(field))
}

pub fn volume_lp_norm_with(field: &HarmonicField, p: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_p(p)?;
    let geom = &field.geometry;
    let cross = geom.cross_section();
    let (lo, hi) = geom.coordinate_range();
    let slice_at = |coord: f64, q: &QuadratureSpec| -> Result<f64> {
        let f = field.slice_function(coord);
        cross_lp_power(&cross, &f, p, q)
    };
    // unsupported combinations fail here rather than inside the refinement loop
    slice_at(hi, quad)?;
    let base_panels = quad.n_s.div_ceil(crate::quadrature::PANEL_ORDER).max(1);
    if p.is_infinite() {
        let compute = |panels: usize| {
            let q = QuadratureSpec { n_theta: quad.n_theta * panels / base_panels, n_phi: quad.n_phi * panels / base_panels, ..*quad };
            let n = panels * crate::quadrature::PANEL_ORDER;
            (0..=n)
                .map(|i| lo + (hi - lo) * i as f64 / n as f64)
                .map(|c| slice_at(c, &q).unwrap_or(f64::NAN))
                .fold(0.0, f64::max)
        };
        return refine_until_stable(compute, base_panels, REFINE_TOL, "volume sup");
    }
    let compute = |panels: usize| {
        let q = QuadratureSpec { n_theta: quad.n_theta * panels / base_panels, n_phi: quad.n_phi * panels / base_panels, ..*quad };
        let g = |c: f64| geom.slice_density(c) * slice_at(c, &q).unwrap_or(f64::NAN);
        composite_gauss(&g, lo, hi, panels)
    };
    let power = refine_until_stable(compute, base_panels, REFINE_TOL, "volume norm")?;
    Ok(power_to_norm(power, p))
}

/// Transversal segment used in restriction estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Ball radius from the boundary point `angles` inward to depth `length` (≤ R).
    Radial { angles: Vec<f64>, length: f64 },
    /// Warped-product fiber `[-R, R] × {x}`.
    Axial { angles: Vec<f64> },
}

/// `‖u‖_{L^p(segment)}` with arc-length measure.
pub fn segment_lp_norm(field: &HarmonicField, segment: &Segment, p: f64) -> Result<f64> {
    check_p(p)?;
    let geom = &field.geometry;
    let (lo, hi, angles) = match (segment, geom.as_ref()) {
        (Segment::Radial { angles, length }, Geometry::Ball(b)) => {
            if !(*length > 0.0) || *length > b.radius * (1.0 + 1e-12) {
                return Err(Error::DepthOutOfRange { t: *length, max: b.radius });
            }
            (b.radius - length.min(b.radius), b.radius, angles)
        }
        (Segment::Axial { angles }, Geometry::Warped(w)) => (-w.half_length, w.half_length, angles),
        _ => return Err(Error::InvalidArgument("segment kind does not match the geometry".into())),
    };
    let f = |c: f64| field.eval_at(c, angles);
    let (mu, degree) = field.angular_extent();
    let base = 16 + degree.max(mu as usize);
    let compute = |cells: usize| lp_power_1d(&f, &|_| 1.0, lo, hi, cells, p);
    let power = refine_until_stable(compute, base, REFINE_TOL, "segment norm")?;
    Ok(power_to_norm(power, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::preset;
    use crate::spectrum::modes_for_frequency;

    fn disk_mode(k: usize) -> (Arc<Geometry>, HarmonicField) {
        let geom = Arc::new(preset("disk").unwrap());
        let freq = geom.cross_section().frequencies(k as f64)[k];
        let mode = Arc::new(modes_for_frequency(&geom, &freq, 1e9).unwrap().remove(0));
        let field = HarmonicField::single(geom.clone(), mode, AngularMode::Fourier { wave: vec![k as i64], sine: false });
        (geom, field)
    }

    fn crest() -> SlicePoint {
        SlicePoint { side: Side::Ball, angles: vec![0.0] }
    }

    #[test]
    fn disk_mode_value_scales_by_r_power() {
        let (_, field) = disk_mode(3);
        let top = eval_field(&field, 0.0, &crest()).unwrap();
        assert!((top - 1.0 / PI.sqrt()).abs() < 1e-15);
        let mid = eval_field(&field, 0.5, &crest()).unwrap();
        assert!((mid / top - 0.125).abs() < 1e-15);
    }

    #[test]
    fn disk_slice_ratio_closed_form() {
        let (_, field) = disk_mode(3);
        let ratio = slice_lp_norm(&field, 0.5, 2.0).unwrap() / boundary_lp_norm(&field, 2.0).unwrap();
        assert!((ratio - 0.5f64.powf(3.5)).abs() < 1e-14, "{ratio}");
        for p in [1.0, 4.0, f64::INFINITY] {
            let r = slice_lp_norm(&field, 0.5, p).unwrap() / boundary_lp_norm(&field, p).unwrap();
            let expect = 0.5f64.powf(3.0 + if p.is_infinite() { 0.0 } else { 1.0 / p });
            assert!((r - expect).abs() < 1e-9, "p={p}: {r} vs {expect}");
        }
    }

    #[test]
    fn disk_boundary_norms() {
        let (_, field) = disk_mode(5);
        assert!((boundary_lp_norm(&field, 2.0).unwrap() - 1.0).abs() < 1e-14);
        // ∫|cos 5θ|/√π = 4/√π
        assert!((boundary_lp_norm(&field, 1.0).unwrap() - 4.0 / PI.sqrt()).abs() < 1e-10);
        assert!((boundary_lp_norm(&field, f64::INFINITY).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn disk_volume_norms() {
        let (_, field) = disk_mode(4);
        // normalized mode is r^k cos kθ / √π: ‖·‖² = π/(2k+2) / π
        let v = volume_lp_norm(&field, 2.0).unwrap();
        assert!((v * v - 1.0 / 10.0).abs() < 1e-12, "{v}");
        let (_, constant) = disk_mode(0);
        // constant 1/√(2π) on the unit disk: ‖·‖² = π/(2π)
        let c = volume_lp_norm(&constant, 2.0).unwrap();
        assert!((c * c - 0.5).abs() < 1e-12);
        let sup = volume_lp_norm(&field, f64::INFINITY).unwrap();
        assert!((sup - boundary_lp_norm(&field, f64::INFINITY).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn disk_radius_segment() {
        let (_, field) = disk_mode(3);
        let seg = Segment::Radial { angles: vec![0.0], length: 1.0 };
        let v = segment_lp_norm(&field, &seg, 2.0).unwrap();
        assert!((v - (1.0 / 7f64).sqrt() / PI.sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn cylinder_slice_ratio_is_cosh() {
        let geom = Arc::new(preset("cylinder").unwrap());
        let freq = geom.cross_section().frequencies(2.0)[2];
        let mode = Arc::new(modes_for_frequency(&geom, &freq, 10.0).unwrap().remove(0));
        let field = HarmonicField::single(geom, mode, AngularMode::Fourier { wave: vec![2], sine: true });
        let h0 = slice_lp_norm(&field, 0.0, 2.0).unwrap();
        for t in [0.1, 0.25, 0.5] {
            let r = slice_lp_norm(&field, t, 2.0).unwrap() / h0;
            assert!((r - (2.0 * (1.0 - t)).cosh() / 2f64.cosh()).abs() < 1e-9);
        }
    }

    /// Direct RK4 from the center to `s` with `steps` steps, for the re-shoot oracle.
    fn reshoot(w: &crate::geometry::WarpedProductGeometry, mu: f64, even: bool, s: f64, steps: usize) -> f64 {
        let n = w.n() as f64;
        let rhs = |x: f64, b: f64, d: f64| (d, -n * w.rho_prime(x) / w.rho(x) * d + mu * mu / w.rho(x).powi(2) * b);
        let (mut b, mut d) = if even { (1.0, 0.0) } else { (0.0, 1.0) };
        let h = s / steps as f64;
        for i in 0..steps {
            let x = h * i as f64;
            let k1 = rhs(x, b, d);
            let k2 = rhs(x + 0.5 * h, b + 0.5 * h * k1.0, d + 0.5 * h * k1.1);
            let k3 = rhs(x + 0.5 * h, b + 0.5 * h * k2.0, d + 0.5 * h * k2.1);
            let k4 = rhs(x + h, b + h * k3.0, d + h * k3.1);
            b += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            d += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        b
    }

    #[test]
    fn hermite_interpolation_matches_reshooting() {
        let geom = Arc::new(preset("exTorus").unwrap());
        let freq = geom.cross_section().frequencies(3.0)[3];
        let modes = modes_for_frequency(&geom, &freq, 20.0).unwrap();
        let Geometry::Warped(w) = geom.as_ref() else { unreachable!() };
        for m in &modes {
            let even = m.parity == crate::spectrum::Parity::Symmetric;
            let scale = m.radial(1.0).0 / reshoot(w, m.mu, even, 1.0, 20_000);
            for t in [0.0123, 0.2, 0.3777] {
                let s = 1.0 - t;
                let direct = scale * reshoot(w, m.mu, even, s, 20_000);
                assert!((m.radial(s).0 - direct).abs() < 1e-8, "t={t}");
            }
        }
    }

    #[test]
    fn maximum_principle_on_mixture() {
        let (geom, f3) = disk_mode(3);
        let (_, f1) = disk_mode(1);
        let mut terms = f3.terms.clone();
        terms.extend(f1.terms.iter().cloned().map(|mut t| {
            t.coef = -0.7;
            t
        }));
        let field = HarmonicField::new(geom, terms, "mix").unwrap();
        let top = boundary_lp_norm(&field, f64::INFINITY).unwrap();
        for t in [0.1, 0.3, 0.5] {
            assert!(slice_lp_norm(&field, t, f64::INFINITY).unwrap() <= top);
        }
    }

    #[test]
    fn depth_checked() {
        let (_, field) = disk_mode(2);
        assert!(matches!(slice_lp_norm(&field, 0.7, 2.0), Err(Error::DepthOutOfRange { .. })));
    }
}
