//! Model geometries: Euclidean balls and warped products `[-R, R] × M₀` with metric
//! `ds² + ρ(s)² g`, together with the collar quantities Θ, K, G and the Weingarten traces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

const SIMPSON_TOL: f64 = 1e-10;
const SIMPSON_DEPTH: u32 = 40;
const WARP_SAMPLES: usize = 2001;
const SYMMETRY_TOL: f64 = 1e-12;

/// Closed cross-section `(M₀, g)` of a warped product, or the boundary sphere of a ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CrossSection {
    /// Unit circle, length 2π.
    Circle,
    /// Flat torus `R^d / 2πZ^d`.
    Torus { dim: usize },
    /// Unit round sphere `S^d`.
    Sphere { dim: usize },
}

/// One eigenvalue of `√(-Δ_g)` on the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossFrequency {
    /// Position in the nondecreasing enumeration.
    pub index: usize,
    pub mu: f64,
    pub multiplicity: usize,
    /// Fourier: `|ξ|²`; sphere: degree `l`.
    pub label: usize,
}

impl CrossSection {
    pub fn dim(&self) -> usize {
        match *self {
            CrossSection::Circle => 1,
            CrossSection::Torus { dim } | CrossSection::Sphere { dim } => dim,
        }
    }

    /// Riemannian volume of `(M₀, g)`.
    pub fn volume(&self) -> f64 {
        match *self {
            CrossSection::Circle => 2.0 * PI,
            CrossSection::Torus { dim } => (2.0 * PI).powi(dim as i32),
            CrossSection::Sphere { dim } => sphere_volume(dim),
        }
    }

    /// Frequencies `μ ≤ mu_max`, sorted nondecreasing.
    pub fn frequencies(&self, mu_max: f64) -> Vec<CrossFrequency> {
        match *self {
            CrossSection::Circle => (0..=mu_max.max(0.0).floor() as usize)
                .map(|k| CrossFrequency {
                    index: k,
                    mu: k as f64,
                    multiplicity: if k == 0 { 1 } else { 2 },
                    label: k * k,
                })
                .collect(),
            CrossSection::Torus { dim } => {
                let max_sq = (mu_max.max(0.0) * mu_max.max(0.0)).floor() as usize;
                let mut counts = vec![0usize; max_sq + 1];
                for_each_lattice_point(dim, mu_max.max(0.0).floor() as i64, &mut |xi| {
                    let sq: i64 = xi.iter().map(|v| v * v).sum();
                    if (sq as usize) <= max_sq {
                        counts[sq as usize] += 1;
                    }
                });
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .enumerate()
                    .map(|(index, (sq, &c))| CrossFrequency {
                        index,
                        mu: (sq as f64).sqrt(),
                        multiplicity: c,
                        label: sq,
                    })
                    .collect()
            }
            CrossSection::Sphere { dim } => {
                let mut out = Vec::new();
                let mut l = 0usize;
                loop {
                    let mu = ((l * (l + dim - 1)) as f64).sqrt();
                    if mu > mu_max {
                        break;
                    }
                    out.push(CrossFrequency { index: l, mu, multiplicity: sphere_multiplicity(dim, l), label: l });
                    l += 1;
                }
                out
            }
        }
    }

    /// Concrete orthonormal eigenfunctions at one frequency. Spheres contribute only their
    /// zonal representative; the full multiplicity is carried by [`CrossFrequency`].
    pub fn basis(&self, freq: &CrossFrequency) -> Vec<AngularMode> {
        self.basis_for_label(freq.label)
    }

    pub fn basis_for_label(&self, label: usize) -> Vec<AngularMode> {
        match *self {
            CrossSection::Circle | CrossSection::Torus { .. } => {
                let dim = self.dim();
                let radius = (label as f64).sqrt().ceil() as i64;
                let mut waves = Vec::new();
                for_each_lattice_point(dim, radius, &mut |xi| {
                    let sq: i64 = xi.iter().map(|v| v * v).sum();
                    let leading_positive = xi.iter().find(|&&v| v != 0).map_or(true, |&v| v > 0);
                    if sq as usize == label && leading_positive {
                        waves.push(xi.to_vec());
                    }
                });
                waves.sort();
                let mut out = Vec::new();
                for wave in waves {
                    let constant = wave.iter().all(|&v| v == 0);
                    out.push(AngularMode::Fourier { wave: wave.clone(), sine: false });
                    if !constant {
                        out.push(AngularMode::Fourier { wave, sine: true });
                    }
                }
                out
            }
            CrossSection::Sphere { .. } => vec![AngularMode::Zonal { degree: label }],
        }
    }
}

fn for_each_lattice_point(dim: usize, radius: i64, visit: &mut dyn FnMut(&[i64])) {
    fn rec(dim: usize, radius: i64, buf: &mut Vec<i64>, visit: &mut dyn FnMut(&[i64])) {
        if buf.len() == dim {
            visit(buf);
            return;
        }
        for v in -radius..=radius {
            buf.push(v);
            rec(dim, radius, buf, visit);
            buf.pop();
        }
    }
    rec(dim, radius, &mut Vec::with_capacity(dim), visit);
}

fn sphere_volume(dim: usize) -> f64 {
    // vol(S^d) = 2π/(d-1) vol(S^{d-2})
    match dim {
        0 => 2.0,
        1 => 2.0 * PI,
        d => 2.0 * PI / (d as f64 - 1.0) * sphere_volume(d - 2),
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of degree-`l` spherical harmonics on `S^d`.
pub fn sphere_multiplicity(dim: usize, l: usize) -> usize {
    if l < 2 {
        return binomial(l + dim, dim);
    }
    binomial(l + dim, dim) - binomial(l + dim - 2, dim)
}

/// An `L²(M₀, g)`-normalized eigenfunction of the cross-section.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AngularMode {
    /// `cos(ξ·x)` or `sin(ξ·x)` on the torus (the circle is the case `d = 1`).
    Fourier { wave: Vec<i64>, sine: bool },
    /// Zonal harmonic `√((2l+1)/4π) P_l(cos φ)` on `S²`.
    Zonal { degree: usize },
}

impl AngularMode {
    pub fn frequency_squared(&self, cross: &CrossSection) -> f64 {
        match self {
            AngularMode::Fourier { wave, .. } => wave.iter().map(|v| (v * v) as f64).sum(),
            AngularMode::Zonal { degree } => {
                let d = cross.dim();
                (degree * (degree + d - 1)) as f64
            }
        }
    }

    /// Value at a point. Torus points are angle vectors; sphere points are `[φ]` or `[φ, θ]`
    /// with `φ` the polar angle.
    pub fn eval(&self, point: &[f64]) -> f64 {
        match self {
            AngularMode::Fourier { wave, sine } => {
                let dim = wave.len();
                let phase: f64 = wave.iter().zip(point).map(|(&k, &x)| k as f64 * x).sum();
                let base = (2.0 * PI).powf(-(dim as f64) / 2.0);
                if wave.iter().all(|&v| v == 0) {
                    base
                } else if *sine {
                    std::f64::consts::SQRT_2 * base * phase.sin()
                } else {
                    std::f64::consts::SQRT_2 * base * phase.cos()
                }
            }
            AngularMode::Zonal { degree } => zonal(*degree, point[0].cos()),
        }
    }

    /// Zonal harmonics as a function of `x = cos φ`.
    pub fn eval_zonal_cos(&self, x: f64) -> f64 {
        match self {
            AngularMode::Zonal { degree } => zonal(*degree, x),
            AngularMode::Fourier { .. } => f64::NAN,
        }
    }
}

/// Legendre polynomial by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let (mut prev, mut curr) = (1.0, x);
    for k in 1..l {
        let next = ((2 * k + 1) as f64 * x * curr - k as f64 * prev) / (k + 1) as f64;
        prev = curr;
        curr = next;
    }
    curr
}

/// Normalized zonal harmonic of degree `l` on `S²` at `cos φ = x`.
pub fn zonal(l: usize, x: f64) -> f64 {
    ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * legendre(l, x)
}

/// Warp coefficient ρ with its analytic derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Warp {
    /// `Σ c_k s^k`.
    Polynomial(Vec<f64>),
    /// `amplitude · exp(rate · s)`.
    Exponential { amplitude: f64, rate: f64 },
    /// `amplitude · cos(frequency · s)`.
    Cosine { amplitude: f64, frequency: f64 },
}

impl Warp {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Warp::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck),
            Warp::Exponential { amplitude, rate } => amplitude * (rate * s).exp(),
            Warp::Cosine { amplitude, frequency } => amplitude * (frequency * s).cos(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Warp::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * s + k as f64 * ck),
            Warp::Exponential { amplitude, rate } => amplitude * rate * (rate * s).exp(),
            Warp::Cosine { amplitude, frequency } => -amplitude * frequency * (frequency * s).sin(),
        }
    }
}

/// `[-R, R] × M₀` with metric `ds² + ρ(s)² g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpedProductGeometry {
    pub half_length: f64,
    pub cross_section: CrossSection,
    pub warp: Warp,
    pub symmetric: bool,
    pub preset_id: Option<String>,
    pub collar_depth: f64,
}

impl WarpedProductGeometry {
    pub fn new(half_length: f64, cross_section: CrossSection, warp: Warp, preset_id: Option<String>) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::BadDimension(format!("half-length must be positive, got {half_length}")));
        }
        if cross_section.dim() < 1 {
            return Err(Error::BadDimension("cross-section dimension must be at least 1".into()));
        }
        let mut asym: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for i in 0..WARP_SAMPLES {
            let s = -half_length + 2.0 * half_length * i as f64 / (WARP_SAMPLES - 1) as f64;
            let v = warp.value(s);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveWarp { s, value: v });
            }
            asym = asym.max((v - warp.value(-s)).abs());
            peak = peak.max(v);
        }
        Ok(Self {
            half_length,
            cross_section,
            warp,
            symmetric: asym <= SYMMETRY_TOL * peak,
            preset_id,
            collar_depth: 0.5 * half_length,
        })
    }

    pub fn n(&self) -> usize {
        self.cross_section.dim()
    }

    pub fn rho(&self, s: f64) -> f64 {
        self.warp.value(s)
    }

    pub fn rho_prime(&self, s: f64) -> f64 {
        self.warp.derivative(s)
    }

    pub fn min_rho(&self) -> f64 {
        (0..WARP_SAMPLES)
            .map(|i| self.rho(-self.half_length + 2.0 * self.half_length * i as f64 / (WARP_SAMPLES - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_log_derivative(&self) -> f64 {
        (0..WARP_SAMPLES)
            .map(|i| {
                let s = -self.half_length + 2.0 * self.half_length * i as f64 / (WARP_SAMPLES - 1) as f64;
                (self.rho_prime(s) / self.rho(s)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Euclidean ball of radius `R` in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallGeometry {
    pub n: usize,
    pub radius: f64,
    pub collar_depth: f64,
}

impl BallGeometry {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::BadDimension(format!("ball boundary dimension must be >= 1, got {n}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::BadDimension(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { n, radius, collar_depth: 0.5 * radius })
    }
}

/// Boundary component of the collar. Balls have one (`Ball`); warped products two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    /// `{R - t} × M₀`.
    Plus,
    /// `{-R + t} × M₀`.
    Minus,
    /// The sphere of radius `R - t`.
    Ball,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Geometry {
    Ball(BallGeometry),
    Warped(WarpedProductGeometry),
}

impl Geometry {
    pub fn n(&self) -> usize {
        match self {
            Geometry::Ball(b) => b.n,
            Geometry::Warped(w) => w.n(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Geometry::Ball(b) => match (b.n, b.radius) {
                (1, r) if r == 1.0 => "disk".into(),
                (2, r) if r == 1.0 => "ball3".into(),
                (n, r) => format!("ball(n={n},R={r})"),
            },
            Geometry::Warped(w) => w.preset_id.clone().unwrap_or_else(|| "custom".into()),
        }
    }

    /// `R`: ball radius or warped half-length.
    pub fn scale(&self) -> f64 {
        match self {
            Geometry::Ball(b) => b.radius,
            Geometry::Warped(w) => w.half_length,
        }
    }

    /// δ₀, the largest depth at which slice quantities are evaluated.
    pub fn collar_depth(&self) -> f64 {
        match self {
            Geometry::Ball(b) => b.collar_depth,
            Geometry::Warped(w) => w.collar_depth,
        }
    }

    pub fn with_collar_depth(mut self, depth: f64) -> Result<Self> {
        if !(depth > 0.0) || depth >= self.scale() {
            return Err(Error::InvalidArgument(format!("collar depth must lie in (0, {}), got {depth}", self.scale())));
        }
        match &mut self {
            Geometry::Ball(b) => b.collar_depth = depth,
            Geometry::Warped(w) => w.collar_depth = depth,
        }
        Ok(self)
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Geometry::Ball(_) => true,
            Geometry::Warped(w) => w.symmetric,
        }
    }

    /// Cross-section whose eigenfunctions label the modes (the unit sphere for balls).
    pub fn cross_section(&self) -> CrossSection {
        match self {
            Geometry::Ball(b) if b.n == 1 => CrossSection::Circle,
            Geometry::Ball(b) => CrossSection::Sphere { dim: b.n },
            Geometry::Warped(w) => w.cross_section,
        }
    }

    pub fn sides(&self) -> &'static [Side] {
        match self {
            Geometry::Ball(_) => &[Side::Ball],
            Geometry::Warped(_) => &[Side::Minus, Side::Plus],
        }
    }

    /// Profile coordinate of `Σ_t` on one side: `s` for warped products, `r` for balls.
    pub fn slice_coordinate(&self, side: Side, t: f64) -> f64 {
        match side {
            Side::Plus | Side::Ball => self.scale() - t,
            Side::Minus => -self.scale() + t,
        }
    }

    /// Sign σ with `∂_t = σ ∂_s` (t the inward distance to the boundary).
    pub fn normal_sign(&self, side: Side) -> f64 {
        match side {
            Side::Plus | Side::Ball => -1.0,
            Side::Minus => 1.0,
        }
    }

    /// Range of the profile coordinate.
    pub fn coordinate_range(&self) -> (f64, f64) {
        match self {
            Geometry::Ball(b) => (0.0, b.radius),
            Geometry::Warped(w) => (-w.half_length, w.half_length),
        }
    }

    /// Warp value at a profile coordinate (`r` for balls, so `g_r = r² g_{S^n}`).
    pub fn warp_at(&self, s: f64) -> f64 {
        match self {
            Geometry::Ball(_) => s,
            Geometry::Warped(w) => w.rho(s),
        }
    }

    pub fn warp_prime_at(&self, s: f64) -> f64 {
        match self {
            Geometry::Ball(_) => 1.0,
            Geometry::Warped(w) => w.rho_prime(s),
        }
    }

    /// Density of the slice measure relative to the cross-section measure: `ρ(s)^n`.
    pub fn slice_density(&self, s: f64) -> f64 {
        self.warp_at(s).powi(self.n() as i32)
    }

    /// Common principal curvature of `Σ_t` on one side, with respect to the inward normal.
    pub fn principal_curvature(&self, side: Side, t: f64) -> f64 {
        let s = self.slice_coordinate(side, t);
        -self.normal_sign(side) * self.warp_prime_at(s) / self.warp_at(s)
    }

    /// `Tr 𝒲` on one side of `Σ_t`.
    pub fn trace_weingarten(&self, side: Side, t: f64) -> f64 {
        self.n() as f64 * self.principal_curvature(side, t)
    }

    /// `Θ(t) = sup k̃_t + sup Tr 𝒲`, where on each side `k̃ = -(n-1)k` and `Tr 𝒲 = nk`.
    pub fn theta(&self, t: f64) -> f64 {
        let n = self.n() as f64;
        let ks: Vec<f64> = self.sides().iter().map(|&side| self.principal_curvature(side, t)).collect();
        let sup_ktilde = ks.iter().map(|k| -(n - 1.0) * k).fold(f64::NEG_INFINITY, f64::max);
        let sup_trace = ks.iter().map(|k| n * k).fold(f64::NEG_INFINITY, f64::max);
        sup_ktilde + sup_trace
    }

    /// Cotangent metric ratio `r(t) = inf |ξ|_{g_t} / |ξ|_g`, minimized over the sides.
    pub fn cotangent_ratio(&self, t: f64) -> f64 {
        self.sides()
            .iter()
            .map(|&side| {
                let boundary = self.slice_coordinate(side, 0.0);
                self.warp_at(boundary) / self.warp_at(self.slice_coordinate(side, t))
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn check_depth(&self, t: f64) -> Result<()> {
        let max = self.collar_depth();
        if !(t >= 0.0) || t > max * (1.0 + 1e-12) {
            return Err(Error::DepthOutOfRange { t, max });
        }
        Ok(())
    }

    /// `K(t)` in closed form, when the geometry is a ball or a preset with a known antiderivative.
    pub fn k_closed_form(&self, t: f64) -> Option<f64> {
        match self {
            Geometry::Ball(b) => Some(b.radius * (b.radius / (b.radius - t)).ln()),
            Geometry::Warped(w) => match w.preset_id.as_deref()? {
                "cylinder" => Some(t),
                "exTorus" => Some(2.0 * (1f64.atan() - (1.0 - t).atan())),
                "concave" => {
                    let r = w.half_length;
                    let antiderivative = |u: f64| (1.0 / u.cos() + u.tan()).ln();
                    Some(0.5 * (antiderivative(r) - antiderivative(r - t)))
                }
                "asym-exp" => Some(4.0 * ((t / 4.0).exp() - 1.0)),
                _ => None,
            },
        }
    }

    /// `K(t) = ∫₀ᵗ exp(∫₀ˢ Θ) ds` by nested adaptive Simpson on Θ.
    pub fn k_from_theta(&self, t: f64) -> f64 {
        let inner = |s: f64| adaptive_simpson(&|tau| self.theta(tau), 0.0, s, SIMPSON_TOL, SIMPSON_DEPTH);
        adaptive_simpson(&|s| inner(s).exp(), 0.0, t, SIMPSON_TOL, SIMPSON_DEPTH)
    }

    /// `K(t)` by quadrature; symmetric geometries integrate `ρ(R)/ρ(R-s)` directly.
    pub fn k_quadrature(&self, t: f64) -> f64 {
        if self.is_symmetric() {
            let edge = self.slice_coordinate(self.sides()[self.sides().len() - 1], 0.0);
            let f = |s: f64| self.warp_at(edge) / self.warp_at(edge - s);
            adaptive_simpson(&f, 0.0, t, SIMPSON_TOL, SIMPSON_DEPTH)
        } else {
            self.k_from_theta(t)
        }
    }

    pub fn k(&self, t: f64) -> f64 {
        self.k_closed_form(t).unwrap_or_else(|| self.k_quadrature(t))
    }

    /// `G(t) = ∫₀ᵗ r(s) ds` by adaptive Simpson.
    pub fn g_quadrature(&self, t: f64) -> f64 {
        adaptive_simpson(&|s| self.cotangent_ratio(s), 0.0, t, SIMPSON_TOL, SIMPSON_DEPTH)
    }

    pub fn g(&self, t: f64) -> f64 {
        match self {
            Geometry::Ball(_) => self.k_closed_form(t).expect("ball has closed form"),
            Geometry::Warped(w) if w.symmetric => self.k(t),
            Geometry::Warped(_) => self.g_quadrature(t),
        }
    }
}

/// Collar quantities at one depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricProfile {
    pub t: f64,
    pub theta: f64,
    pub k: f64,
    pub g: f64,
    /// `Tr 𝒲` on each side, in [`Geometry::sides`] order.
    pub trace_w: Vec<f64>,
    /// `ρ(R - t)` for warped products, `(R - t)/R` for balls.
    pub rho_slice: f64,
}

pub fn geometric_profile(geom: &Geometry, t: f64) -> Result<GeometricProfile> {
    geom.check_depth(t)?;
    let rho_slice = match geom {
        Geometry::Ball(b) => (b.radius - t) / b.radius,
        Geometry::Warped(w) => w.rho(w.half_length - t),
    };
    Ok(GeometricProfile {
        t,
        theta: geom.theta(t),
        k: geom.k(t),
        g: geom.g(t),
        trace_w: geom.sides().iter().map(|&side| geom.trace_weingarten(side, t)).collect(),
        rho_slice,
    })
}

/// Drift `a = n ρ'(s)/ρ(s)` of the Laplacian in the profile coordinate.
pub fn drift_coefficient(geom: &Geometry, s: f64) -> Result<f64> {
    let (lo, hi) = geom.coordinate_range();
    let inside = match geom {
        Geometry::Ball(_) => s > lo && s <= hi,
        Geometry::Warped(_) => s >= lo && s <= hi,
    };
    if !inside {
        return Err(Error::OutOfDomain { s, lo, hi });
    }
    Ok(geom.n() as f64 * geom.warp_prime_at(s) / geom.warp_at(s))
}

/// Input accepted by [`make_geometry`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySpec {
    Preset { preset: String },
    Ball { ball: BallSpec },
    Custom { custom: CustomWarpSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub n: usize,
    pub radius: f64,
    #[serde(default)]
    pub collar_depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomWarpSpec {
    pub half_length: f64,
    pub cross_section: CrossSection,
    pub warp: Warp,
    #[serde(default)]
    pub collar_depth: Option<f64>,
}

pub const PRESETS: [&str; 6] = ["disk", "ball3", "cylinder", "exTorus", "concave", "asym-exp"];

pub fn preset(name: &str) -> Result<Geometry> {
    let warped = |r: f64, cross: CrossSection, warp: Warp| {
        WarpedProductGeometry::new(r, cross, warp, Some(name.to_string())).map(Geometry::Warped)
    };
    match name {
        "disk" => Ok(Geometry::Ball(BallGeometry::new(1, 1.0)?)),
        "ball3" => Ok(Geometry::Ball(BallGeometry::new(2, 1.0)?)),
        "cylinder" => warped(1.0, CrossSection::Circle, Warp::Polynomial(vec![1.0])),
        "exTorus" => warped(1.0, CrossSection::Torus { dim: 1 }, Warp::Polynomial(vec![1.0, 0.0, 1.0])),
        "concave" => warped(PI / 3.0, CrossSection::Sphere { dim: 2 }, Warp::Cosine { amplitude: 1.0, frequency: 1.0 }),
        "asym-exp" => warped(1.0, CrossSection::Circle, Warp::Exponential { amplitude: 1.0, rate: 0.25 }),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

pub fn make_geometry(spec: &GeometrySpec) -> Result<Geometry> {
    match spec {
        GeometrySpec::Preset { preset: name } => preset(name),
        GeometrySpec::Ball { ball } => {
            let g = Geometry::Ball(BallGeometry::new(ball.n, ball.radius)?);
            match ball.collar_depth {
                Some(d) => g.with_collar_depth(d),
                None => Ok(g),
            }
        }
        GeometrySpec::Custom { custom } => {
            let g = Geometry::Warped(WarpedProductGeometry::new(
                custom.half_length,
                custom.cross_section,
                custom.warp.clone(),
                None,
            )?);
            match custom.collar_depth {
                Some(d) => g.with_collar_depth(d),
                None => Ok(g),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_preset_is_unit_ball() {
        let g = preset("disk").unwrap();
        assert_eq!(g, Geometry::Ball(BallGeometry { n: 1, radius: 1.0, collar_depth: 0.5 }));
    }

    #[test]
    fn cylinder_is_symmetric_and_asym_exp_is_not() {
        assert!(preset("cylinder").unwrap().is_symmetric());
        assert!(preset("exTorus").unwrap().is_symmetric());
        assert!(preset("concave").unwrap().is_symmetric());
        assert!(!preset("asym-exp").unwrap().is_symmetric());
    }

    #[test]
    fn negative_warp_rejected() {
        let r = WarpedProductGeometry::new(1.0, CrossSection::Circle, Warp::Polynomial(vec![0.0, -1.0]), None);
        assert!(matches!(r, Err(Error::NonPositiveWarp { .. })));
    }

    #[test]
    fn unknown_preset_and_bad_dimension() {
        assert!(matches!(preset("torus"), Err(Error::UnknownPreset(_))));
        assert!(matches!(BallGeometry::new(0, 1.0), Err(Error::BadDimension(_))));
        assert!(matches!(
            WarpedProductGeometry::new(1.0, CrossSection::Torus { dim: 0 }, Warp::Polynomial(vec![1.0]), None),
            Err(Error::BadDimension(_))
        ));
    }

    #[test]
    fn ball_profile_half_depth() {
        let g = preset("disk").unwrap();
        let p = geometric_profile(&g, 0.5).unwrap();
        assert!((p.k - 2f64.ln()).abs() < 1e-15);
        assert!((p.theta - 2.0).abs() < 1e-15);
        assert!((p.g - p.k).abs() < 1e-15);
        assert!((p.rho_slice - 0.5).abs() < 1e-15);
    }

    #[test]
    fn extorus_theta_and_k() {
        let g = preset("exTorus").unwrap();
        assert!((geometric_profile(&g, 0.0).unwrap().theta - 1.0).abs() < 1e-15);
        let k = geometric_profile(&g, 0.5).unwrap().k;
        assert!((k - 0.643_501_108_793_284_4).abs() < 1e-12, "{k}");
        let quad = g.k_quadrature(0.5);
        assert!(((quad - k) / k).abs() < 1e-10);
    }

    #[test]
    fn depth_out_of_range() {
        let g = preset("cylinder").unwrap();
        assert!(matches!(geometric_profile(&g, 0.6), Err(Error::DepthOutOfRange { .. })));
        assert!(matches!(geometric_profile(&g, -0.1), Err(Error::DepthOutOfRange { .. })));
    }

    #[test]
    fn drift_examples() {
        let cyl = preset("cylinder").unwrap();
        assert_eq!(drift_coefficient(&cyl, 0.3).unwrap(), 0.0);
        let tor = preset("exTorus").unwrap();
        assert!((drift_coefficient(&tor, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(drift_coefficient(&tor, 0.0).unwrap(), 0.0);
        assert!(matches!(drift_coefficient(&tor, 1.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn weingarten_trace_on_concave_sphere_section() {
        // n = 2, ρ = cos s: Tr𝒲 = 2ρ'/ρ at s = R - t, Θ = ρ'/ρ
        let g = preset("concave").unwrap();
        let t = 0.2;
        let s = PI / 3.0 - t;
        let p = geometric_profile(&g, t).unwrap();
        assert!((p.trace_w[1] + 2.0 * s.tan()).abs() < 1e-14);
        assert!((p.theta + s.tan()).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_theta_takes_the_larger_side() {
        let g = preset("asym-exp").unwrap();
        assert!((g.theta(0.3) - 0.25).abs() < 1e-15);
        // G uses the smaller cotangent ratio e^{-t/4}
        let gq = g.g(0.3);
        assert!((gq - 4.0 * (1.0 - (-0.3f64 / 4.0).exp())).abs() < 1e-11);
    }

    #[test]
    fn circle_and_sphere_enumerations() {
        let c = CrossSection::Circle.frequencies(3.0);
        assert_eq!(c.iter().map(|f| f.multiplicity).collect::<Vec<_>>(), vec![1, 2, 2, 2]);
        let s = CrossSection::Sphere { dim: 2 }.frequencies(10.0);
        for f in &s {
            assert_eq!(f.multiplicity, 2 * f.label + 1);
            assert!((f.mu - ((f.label * (f.label + 1)) as f64).sqrt()).abs() < 1e-15);
        }
        let t2 = CrossSection::Torus { dim: 2 }.frequencies(2.0);
        // |ξ|² = 0,1,2,4 with counts 1,4,4,4
        assert_eq!(t2.iter().map(|f| (f.label, f.multiplicity)).collect::<Vec<_>>(), vec![(0, 1), (1, 4), (2, 4), (4, 4)]);
        for f in &t2 {
            assert_eq!(CrossSection::Torus { dim: 2 }.basis(f).len(), f.multiplicity);
        }
    }
}
