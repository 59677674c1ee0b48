//! Steklov eigenpairs: closed forms on balls, radial shooting on warped products.
//!
//! On a warped product the mode `b(s) e_μ(x)` is harmonic iff
//! `b'' + a(s) b' - μ²/ρ(s)² b = 0` with `a = nρ'/ρ`, and Steklov iff
//! `b'(R) = λ b(R)` and `-b'(-R) = λ b(-R)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CrossFrequency, Geometry, WarpedProductGeometry};
use crate::quadrature::{bisect, golden_section_max};

const RICHARDSON_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-8;
const RESCALE_AT: f64 = 1e150;
const MAX_STEPS: usize = 1 << 22;
const ROOT_TOL: f64 = 1e-12;
const SCAN_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Symmetric,
    Antisymmetric,
    None,
}

impl Parity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parity::Symmetric => "symmetric",
            Parity::Antisymmetric => "antisymmetric",
            Parity::None => "none",
        }
    }
}

/// Initial data for [`shoot_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShootStart {
    /// `b(-R) = 1`, `b'(-R) = -λ`.
    Left,
    /// `b(R) = 1`, `b'(R) = λ`, integrated leftward.
    Right,
    /// `b(0) = 1`, `b'(0) = 0`.
    CenterSymmetric,
    /// `b(0) = 0`, `b'(0) = 1`.
    CenterAntisymmetric,
}

/// Radial factor sampled on a uniform grid over `[-R, R]`, with first and second derivatives
/// for quintic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub s0: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    #[serde(skip)]
    pub second: Vec<f64>,
    /// `ln` of the factor divided out during integration and normalization.
    pub log_scale: f64,
    /// Fine RK4 step count that passed the Richardson check.
    pub rk4_steps: usize,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.s0 + self.step * (self.values.len() - 1) as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(b(s), b'(s))` by quintic Hermite interpolation.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let last = self.values.len() - 1;
        let x = ((s - self.s0) / self.step).clamp(0.0, last as f64);
        let i = (x.floor() as usize).min(last - 1);
        let t = x - i as f64;
        if t == 0.0 {
            return (self.values[i], self.derivs[i]);
        }
        if t == 1.0 {
            return (self.values[i + 1], self.derivs[i + 1]);
        }
        let h = self.step;
        let (f0, d0, s0) = (self.values[i], self.derivs[i], self.second[i]);
        let (f1, d1, s1) = (self.values[i + 1], self.derivs[i + 1], self.second[i + 1]);
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let value = h0 * f0 + h * h1 * d0 + h * h * h2 * s0 + h * h * h3 * s1 + h * h4 * d1 + h5 * f1;
        let g0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let g1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let g2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let g3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let g4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let g5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let deriv = (g0 * f0 + g5 * f1) / h + g1 * d0 + g4 * d1 + h * (g2 * s0 + g3 * s1);
        (value, deriv)
    }

    fn scale(&mut self, factor: f64) {
        for v in self.values.iter_mut().chain(self.derivs.iter_mut()).chain(self.second.iter_mut()) {
            *v *= factor;
        }
        self.log_scale -= factor.abs().ln();
    }
}

/// Radial factor of a mode: closed form on balls, sampled on warped products.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModeShape {
    /// `b(r) = (r/R)^{exponent} R^{-n/2}`.
    Ball { n: usize, radius: f64, exponent: f64 },
    Warped { profile: RadialProfile },
}

/// One Steklov eigenpair `u = b ⊗ e_μ` with `‖u|_M‖_{L²} = 1` for an `L²(M₀)`-normalized `e_μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteklovMode {
    pub lambda: f64,
    pub mu: f64,
    pub mode_index: usize,
    /// Cross-section label (`|ξ|²` or sphere degree), see [`CrossFrequency::label`].
    pub label: usize,
    pub multiplicity: usize,
    pub parity: Parity,
    pub shape: ModeShape,
}

impl SteklovMode {
    /// `(b, ∂b)` at a profile coordinate (`s` for warped products, `r` for balls).
    pub fn radial(&self, coord: f64) -> (f64, f64) {
        match &self.shape {
            ModeShape::Ball { n, radius, exponent } => {
                let norm = radius.powf(-(*n as f64) / 2.0);
                let x = coord / radius;
                if *exponent == 0.0 {
                    return (norm, 0.0);
                }
                let value = norm * x.powf(*exponent);
                let deriv = norm * exponent / radius * x.powf(exponent - 1.0);
                (value, deriv)
            }
            ModeShape::Warped { profile } => profile.eval(coord),
        }
    }

    /// Largest `|b|` over the profile, a scale for residual tolerances.
    pub fn profile_scale(&self) -> f64 {
        match &self.shape {
            ModeShape::Ball { n, radius, .. } => radius.powf(-(*n as f64) / 2.0),
            ModeShape::Warped { profile } => profile.max_abs(),
        }
    }

    /// DtN residual `|b'(R) - λ b(R)| + |b'(-R) + λ b(-R)|` (ball: the single sphere).
    pub fn boundary_residual(&self) -> f64 {
        match &self.shape {
            ModeShape::Ball { radius, .. } => {
                let (b, db) = self.radial(*radius);
                (db - self.lambda * b).abs()
            }
            ModeShape::Warped { profile } => {
                let (bl, dl) = (profile.values[0], profile.derivs[0]);
                let last = profile.len() - 1;
                let (br, dr) = (profile.values[last], profile.derivs[last]);
                (dr - self.lambda * br).abs() + (dl + self.lambda * bl).abs()
            }
        }
    }
}

/// ODE coefficients tabulated at half steps of a uniform RK4 grid.
struct Coefficients {
    h: f64,
    steps: usize,
    drift: Vec<f64>,
    potential: Vec<f64>,
}

impl Coefficients {
    fn new(geom: &WarpedProductGeometry, mu: f64, s0: f64, s1: f64, steps: usize) -> Self {
        let h = (s1 - s0) / steps as f64;
        let n = geom.n() as f64;
        let mut drift = Vec::with_capacity(2 * steps + 1);
        let mut potential = Vec::with_capacity(2 * steps + 1);
        for j in 0..=2 * steps {
            let s = if j == 2 * steps { s1 } else { s0 + 0.5 * h * j as f64 };
            let rho = geom.rho(s);
            drift.push(n * geom.rho_prime(s) / rho);
            potential.push(mu * mu / (rho * rho));
        }
        Self { h, steps, drift, potential }
    }

    fn rhs(&self, j: usize, b: f64, d: f64) -> (f64, f64) {
        (d, -self.drift[j] * d + self.potential[j] * b)
    }
}

struct Trajectory {
    values: Vec<f64>,
    derivs: Vec<f64>,
    log_scale: f64,
}

/// Classical RK4; rescales when the solution exceeds [`RESCALE_AT`]. Stores every
/// `stride`-th node when `store` is set, otherwise only the endpoint.
fn integrate(c: &Coefficients, b0: f64, d0: f64, stride: usize, store: bool, mu: f64) -> Result<Trajectory> {
    let (mut b, mut d) = (b0, d0);
    let mut values = Vec::new();
    let mut derivs = Vec::new();
    let mut log_scale = 0.0;
    if store {
        values.reserve(c.steps / stride + 1);
        derivs.reserve(c.steps / stride + 1);
        values.push(b);
        derivs.push(d);
    }
    let h = c.h;
    for i in 0..c.steps {
        let j = 2 * i;
        let (k1b, k1d) = c.rhs(j, b, d);
        let (k2b, k2d) = c.rhs(j + 1, b + 0.5 * h * k1b, d + 0.5 * h * k1d);
        let (k3b, k3d) = c.rhs(j + 1, b + 0.5 * h * k2b, d + 0.5 * h * k2d);
        let (k4b, k4d) = c.rhs(j + 2, b + h * k3b, d + h * k3d);
        b += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        d += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if !b.is_finite() || !d.is_finite() {
            return Err(Error::Overflow { mu });
        }
        if b.abs() > RESCALE_AT || d.abs() > RESCALE_AT {
            let factor = 1.0 / RESCALE_AT;
            b *= factor;
            d *= factor;
            values.iter_mut().chain(derivs.iter_mut()).for_each(|v| *v *= factor);
            log_scale += RESCALE_AT.ln();
        }
        if store && (i + 1) % stride == 0 {
            values.push(b);
            derivs.push(d);
        }
    }
    if !store {
        values.push(b);
        derivs.push(d);
    }
    Ok(Trajectory { values, derivs, log_scale })
}

fn lipschitz_scale(geom: &WarpedProductGeometry, mu: f64) -> f64 {
    mu / geom.min_rho() + geom.max_log_derivative() * geom.n() as f64 + 1.0
}

/// Storage resolution on `[-R, R]`: at least 800 cells and `h κ ≤ 0.05`.
fn base_steps(geom: &WarpedProductGeometry, mu: f64) -> usize {
    let kappa = lipschitz_scale(geom, mu);
    let n = ((2.0 * geom.half_length * kappa / 0.05).ceil() as usize).max(800);
    n + n % 2
}

fn normalized_difference(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let diff = |a: &[f64], b: &[f64]| {
        let sa = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sb = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sa == 0.0 && sb == 0.0 {
            return 0.0;
        }
        if sa == 0.0 || sb == 0.0 {
            return f64::INFINITY;
        }
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x / sa - y / sb).abs()))
    };
    diff(&coarse.values, &fine.values).max(diff(&coarse.derivs, &fine.derivs))
}

/// Integrates over `[s0, s1]` with step counts `base·2^k`, stopping when the stored samples of
/// two successive resolutions agree to [`RICHARDSON_TOL`]. Returns the finer trajectory.
fn verified_trajectory(
    geom: &WarpedProductGeometry,
    mu: f64,
    s0: f64,
    s1: f64,
    base: usize,
    b0: f64,
    d0: f64,
) -> Result<(Trajectory, usize)> {
    let mut steps = base;
    let mut coarse = integrate(&Coefficients::new(geom, mu, s0, s1, steps), b0, d0, 1, true, mu)?;
    let mut last_change = f64::INFINITY;
    loop {
        let fine_steps = 2 * steps;
        if fine_steps > MAX_STEPS {
            return Err(Error::QuadratureUnderresolved { what: format!("radial profile at mu = {mu}"), change: last_change });
        }
        let fine = integrate(&Coefficients::new(geom, mu, s0, s1, fine_steps), b0, d0, fine_steps / base, true, mu)?;
        let change = normalized_difference(&coarse, &fine);
        if change < RICHARDSON_TOL {
            return Ok((fine, fine_steps));
        }
        // RK4 should cut the change by ~16 per doubling; stagnation means round-off dominates
        if change > 0.5 * last_change {
            return Err(Error::QuadratureUnderresolved { what: format!("radial profile at mu = {mu} (stagnated)"), change });
        }
        last_change = change;
        coarse = fine;
        steps = fine_steps;
    }
}

fn second_derivatives(geom: &WarpedProductGeometry, mu: f64, s0: f64, step: f64, values: &[f64], derivs: &[f64]) -> Vec<f64> {
    let n = geom.n() as f64;
    values
        .iter()
        .zip(derivs)
        .enumerate()
        .map(|(i, (&b, &d))| {
            let s = s0 + step * i as f64;
            let rho = geom.rho(s);
            -n * geom.rho_prime(s) / rho * d + mu * mu / (rho * rho) * b
        })
        .collect()
}

/// Shoots the radial ODE and returns the Richardson-verified profile on `[-R, R]`.
pub fn shoot_profile(geom: &WarpedProductGeometry, mu: f64, lambda_trial: f64, start: ShootStart) -> Result<RadialProfile> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be nonnegative, got {mu}")));
    }
    let r = geom.half_length;
    let base = base_steps(geom, mu);
    let (values, derivs, log_scale, steps) = match start {
        ShootStart::Left => {
            let (t, steps) = verified_trajectory(geom, mu, -r, r, base, 1.0, -lambda_trial)?;
            (t.values, t.derivs, t.log_scale, steps)
        }
        ShootStart::Right => {
            let (t, steps) = verified_trajectory(geom, mu, r, -r, base, 1.0, lambda_trial)?;
            let mut values = t.values;
            let mut derivs = t.derivs;
            values.reverse();
            derivs.reverse();
            (values, derivs, t.log_scale, steps)
        }
        ShootStart::CenterSymmetric | ShootStart::CenterAntisymmetric => {
            if !geom.symmetric {
                return Err(Error::BadStart("center starts require a symmetric warp".into()));
            }
            let even = start == ShootStart::CenterSymmetric;
            let (b0, d0) = if even { (1.0, 0.0) } else { (0.0, 1.0) };
            let (t, steps) = verified_trajectory(geom, mu, 0.0, r, base / 2, b0, d0)?;
            let sign = if even { 1.0 } else { -1.0 };
            let half = t.values.len() - 1;
            let mut values = Vec::with_capacity(2 * half + 1);
            let mut derivs = Vec::with_capacity(2 * half + 1);
            for i in (1..=half).rev() {
                values.push(sign * t.values[i]);
                derivs.push(-sign * t.derivs[i]);
            }
            values.extend_from_slice(&t.values);
            derivs.extend_from_slice(&t.derivs);
            (values, derivs, t.log_scale, 2 * steps)
        }
    };
    let step = 2.0 * r / (values.len() - 1) as f64;
    let second = second_derivatives(geom, mu, -r, step, &values, &derivs);
    Ok(RadialProfile { s0: -r, step, values, derivs, second, log_scale, rk4_steps: steps })
}

/// How [`steklov_modes_with`] locates eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootMethod {
    /// Parity shooting from the center when the warp is symmetric, scan otherwise.
    Auto,
    /// Left shooting with sign-change scan and bisection, regardless of symmetry.
    Scan,
}

/// Steklov eigenpairs with cross-sectional frequency `freq` and `λ ≤ lambda_max`.
pub fn steklov_modes(geom: &WarpedProductGeometry, freq: &CrossFrequency, lambda_max: f64) -> Result<Vec<SteklovMode>> {
    steklov_modes_with(geom, freq, lambda_max, RootMethod::Auto, 1.0)
}

/// As [`steklov_modes`]; `scan_factor` scales the root-scan step `0.05(1+μ)/R`.
pub fn steklov_modes_with(
    geom: &WarpedProductGeometry,
    freq: &CrossFrequency,
    lambda_max: f64,
    method: RootMethod,
    scan_factor: f64,
) -> Result<Vec<SteklovMode>> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let mu = freq.mu;
    let mut modes = Vec::new();
    if geom.symmetric && method == RootMethod::Auto {
        for (start, parity) in [
            (ShootStart::CenterSymmetric, Parity::Symmetric),
            (ShootStart::CenterAntisymmetric, Parity::Antisymmetric),
        ] {
            let profile = shoot_profile(geom, mu, 0.0, start)?;
            let last = profile.len() - 1;
            let lambda = profile.derivs[last] / profile.values[last];
            if lambda <= lambda_max {
                modes.push(finish_mode(geom, freq, lambda, parity, profile)?);
            }
        }
    } else {
        for lambda in scan_roots(geom, mu, lambda_max, scan_factor)? {
            let profile = stable_profile(geom, mu, lambda)?;
            modes.push(finish_mode(geom, freq, lambda, Parity::None, profile)?);
        }
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(modes)
}

/// Eigenprofile shot from whichever end it grows away from. A mode concentrated near `-R`
/// decays to the right, so shooting it from the left loses it to the growing solution.
fn stable_profile(geom: &WarpedProductGeometry, mu: f64, lambda: f64) -> Result<RadialProfile> {
    let left = shoot_profile(geom, mu, lambda, ShootStart::Left);
    let right = shoot_profile(geom, mu, lambda, ShootStart::Right);
    let start_ratio = |p: &RadialProfile, at_left: bool| {
        let v = if at_left { p.values[0] } else { p.values[p.len() - 1] };
        v.abs() / p.max_abs()
    };
    match (left, right) {
        (Ok(l), Ok(r)) => Ok(if start_ratio(&l, true) <= start_ratio(&r, false) { l } else { r }),
        (Ok(l), Err(_)) => Ok(l),
        (Err(_), Ok(r)) => Ok(r),
        (Err(e), Err(_)) => Err(e),
    }
}

fn finish_mode(
    geom: &WarpedProductGeometry,
    freq: &CrossFrequency,
    lambda: f64,
    parity: Parity,
    mut profile: RadialProfile,
) -> Result<SteklovMode> {
    let n = geom.n() as i32;
    let last = profile.len() - 1;
    let r = geom.half_length;
    let mass = geom.rho(-r).powi(n) * profile.values[0].powi(2) + geom.rho(r).powi(n) * profile.values[last].powi(2);
    let mut factor = 1.0 / mass.sqrt();
    let sign_ref = if profile.values[last] != 0.0 { profile.values[last] } else { profile.derivs[last] };
    if sign_ref < 0.0 {
        factor = -factor;
    }
    profile.scale(factor);
    let mode = SteklovMode {
        lambda: lambda.max(0.0),
        mu: freq.mu,
        mode_index: freq.index,
        label: freq.label,
        multiplicity: freq.multiplicity,
        parity,
        shape: ModeShape::Warped { profile },
    };
    let residual = mode.boundary_residual();
    if residual >= RESIDUAL_TOL * mode.profile_scale() {
        return Err(Error::BracketFailure {
            mu: freq.mu,
            reason: format!("boundary residual {residual:e} at lambda = {lambda}"),
        });
    }
    Ok(mode)
}

/// `F(λ) = b'(R; λ) - λ b(R; λ)` for the left-started solution, scaled to unit initial data
/// magnitude so signs survive rescaling.
fn dtn_mismatch(c: &Coefficients, lambda: f64, mu: f64) -> Result<f64> {
    let t = integrate(c, 1.0, -lambda, 1, false, mu)?;
    Ok(t.derivs[0] - lambda * t.values[0])
}

fn scan_roots(geom: &WarpedProductGeometry, mu: f64, lambda_max: f64, scan_factor: f64) -> Result<Vec<f64>> {
    let r = geom.half_length;
    // step count fixed by a verified shot at a representative trial value
    let probe = shoot_profile(geom, mu, 0.0, ShootStart::Left)?;
    let coeff = Coefficients::new(geom, mu, -r, r, probe.rk4_steps);
    let f = |lambda: f64| dtn_mismatch(&coeff, lambda, mu);
    let step = SCAN_STEP * scan_factor * (1.0 + mu) / r;
    let cells = (lambda_max / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=cells).map(|i| (i as f64 * step).min(lambda_max)).collect();
    let values: Vec<f64> = grid.iter().map(|&l| f(l)).collect::<Result<_>>()?;
    let g = |l: f64| f(l).unwrap_or(f64::NAN);
    let mut roots = Vec::new();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
        }
        if i + 1 == grid.len() {
            break;
        }
        let (lo, hi) = (grid[i], grid[i + 1]);
        let (flo, fhi) = (values[i], values[i + 1]);
        if flo != 0.0 && fhi != 0.0 && (flo > 0.0) != (fhi > 0.0) {
            roots.push(checked_bisect(&g, lo, hi, mu)?);
        }
    }
    // a root pair inside one scan cell shows up as a discrete extremum of F moving toward zero
    for i in 1..grid.len().saturating_sub(1) {
        let (a, v, b) = (values[i - 1], values[i], values[i + 1]);
        let sign = v.signum();
        if v == 0.0 || a.signum() != sign || b.signum() != sign || !(sign * v <= sign * a && sign * v <= sign * b) {
            continue;
        }
        let (lo, hi) = (grid[i - 1], grid[i + 1]);
        let (x, neg_min) = golden_section_max(&|l| -sign * g(l), lo, hi, 1e-13 * (1.0 + hi));
        if -neg_min < 0.0 && neg_min.abs() > 1e-14 * scale {
            roots.push(checked_bisect(&g, lo, x, mu)?);
            roots.push(checked_bisect(&g, x, hi, mu)?);
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));
    Ok(roots.into_iter().filter(|&l| l <= lambda_max).collect())
}

/// Eigenvalues at frequency `mu` from the exact quadratic `F(λ) = b'(R) - λ b(R)` of the
/// left-started solution, fitted through three trial values. Independent of the root scan.
pub fn quadratic_dtn_roots(geom: &WarpedProductGeometry, mu: f64) -> Result<Vec<f64>> {
    let r = geom.half_length;
    let probe = shoot_profile(geom, mu, 0.0, ShootStart::Left)?;
    let coeff = Coefficients::new(geom, mu, -r, r, probe.rk4_steps);
    let h = (1.0 + mu) / r;
    let f0 = dtn_mismatch(&coeff, 0.0, mu)?;
    let f1 = dtn_mismatch(&coeff, h, mu)?;
    let f2 = dtn_mismatch(&coeff, 2.0 * h, mu)?;
    // F(λ) = a λ² + b λ + c
    let a = (f2 - 2.0 * f1 + f0) / (2.0 * h * h);
    let b = (f1 - f0) / h - a * h;
    let c = f0;
    let disc = b * b - 4.0 * a * c;
    if a == 0.0 || disc < 0.0 {
        return Ok(Vec::new());
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a, if q != 0.0 { c / q } else { 0.0 }];
    roots.sort_by(|x, y| x.total_cmp(y));
    Ok(roots.into_iter().filter(|&l| l >= -1e-12).map(|l| l.max(0.0)).collect())
}

fn checked_bisect<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, mu: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !flo.is_finite() || !fhi.is_finite() || (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::BracketFailure { mu, reason: format!("no sign change on [{lo}, {hi}]") });
    }
    let root = bisect(f, lo, hi, ROOT_TOL * (1.0 + hi));
    let froot = f(root);
    if !(froot.abs() <= flo.abs().max(fhi.abs())) {
        return Err(Error::BracketFailure { mu, reason: format!("bisection diverged near {root}") });
    }
    Ok(root)
}

/// Closed-form ball mode at a boundary-sphere frequency.
pub fn ball_mode(n: usize, radius: f64, freq: &CrossFrequency) -> SteklovMode {
    // freq.mu is the unit-sphere frequency; the boundary sphere of radius R scales it by 1/R
    let mu = freq.mu / radius;
    let shift = (n as f64 - 1.0) / (2.0 * radius);
    let lambda = (mu * mu + shift * shift).sqrt() - shift;
    let exponent = if freq.label == 0 { 0.0 } else { radius * lambda };
    SteklovMode {
        lambda,
        mu,
        mode_index: freq.index,
        label: freq.label,
        multiplicity: freq.multiplicity,
        parity: Parity::None,
        shape: ModeShape::Ball { n, radius, exponent },
    }
}

/// Modes at one cross-sectional frequency on any geometry.
pub fn modes_for_frequency(geom: &Geometry, freq: &CrossFrequency, lambda_max: f64) -> Result<Vec<SteklovMode>> {
    match geom {
        Geometry::Ball(b) => {
            let m = ball_mode(b.n, b.radius, freq);
            Ok(if m.lambda <= lambda_max { vec![m] } else { Vec::new() })
        }
        Geometry::Warped(w) => steklov_modes(w, freq, lambda_max),
    }
}

/// All product modes with `λ ≤ lambda_max`, sorted by `(λ, μ, parity)`. Each entry carries the
/// cross-sectional multiplicity.
pub fn spectrum_table(geom: &Geometry, lambda_max: f64) -> Result<Vec<Arc<SteklovMode>>> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let cross = geom.cross_section();
    let mut modes: Vec<SteklovMode> = Vec::new();
    match geom {
        Geometry::Ball(b) => {
            // λ ≥ μ - (n-1)/2R... so μ ≤ λ_max + (n-1)/R suffices
            let mu_cap = b.radius * (lambda_max + b.n as f64 / b.radius) + 1.0;
            for freq in cross.frequencies(mu_cap) {
                let m = ball_mode(b.n, b.radius, &freq);
                if m.lambda <= lambda_max * (1.0 + 1e-14) {
                    modes.push(m);
                }
            }
        }
        Geometry::Warped(w) => {
            let batch = rayon::current_num_threads().max(4);
            let mut cap = lambda_max.max(1.0) * 2.0 + 4.0;
            let mut next = 0usize;
            'outer: loop {
                let freqs = cross.frequencies(cap);
                while next < freqs.len() {
                    let chunk: Vec<CrossFrequency> = freqs[next..(next + batch).min(freqs.len())].to_vec();
                    next += chunk.len();
                    let found: Vec<Vec<SteklovMode>> =
                        chunk.par_iter().map(|f| steklov_modes(w, f, lambda_max)).collect::<Result<_>>()?;
                    let exhausted = found.iter().any(|v| v.is_empty());
                    modes.extend(found.into_iter().flatten());
                    if exhausted {
                        break 'outer;
                    }
                }
                cap *= 2.0;
            }
        }
    }
    modes.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.mu.total_cmp(&b.mu))
            .then(a.parity.cmp(&b.parity))
    });
    Ok(modes.into_iter().map(Arc::new).collect())
}

/// Eigenvalues repeated by multiplicity.
pub fn expanded_eigenvalues(table: &[Arc<SteklovMode>]) -> Vec<f64> {
    table.iter().flat_map(|m| std::iter::repeat(m.lambda).take(m.multiplicity)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{preset, CrossSection, Warp};

    fn warped(name: &str) -> WarpedProductGeometry {
        match preset(name).unwrap() {
            Geometry::Warped(w) => w,
            _ => unreachable!(),
        }
    }

    fn freq(mu: f64) -> CrossFrequency {
        CrossFrequency { index: mu as usize, mu, multiplicity: if mu == 0.0 { 1 } else { 2 }, label: (mu * mu) as usize }
    }

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.3 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x - 1.5 * x.powi(4);
        let ddp = |x: f64| 3.0 * x - 6.0 * x.powi(3);
        let grid: Vec<f64> = (0..=4).map(|i| -1.0 + 0.5 * i as f64).collect();
        let prof = RadialProfile {
            s0: -1.0,
            step: 0.5,
            values: grid.iter().map(|&x| p(x)).collect(),
            derivs: grid.iter().map(|&x| dp(x)).collect(),
            second: grid.iter().map(|&x| ddp(x)).collect(),
            log_scale: 0.0,
            rk4_steps: 4,
        };
        for x in [-0.93, -0.2, 0.11, 0.77] {
            let (v, d) = prof.eval(x);
            assert!((v - p(x)).abs() < 1e-13);
            assert!((d - dp(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_center_shoot_matches_tanh() {
        let g = warped("cylinder");
        let prof = shoot_profile(&g, 2.0, 0.0, ShootStart::CenterSymmetric).unwrap();
        let last = prof.len() - 1;
        let ratio = prof.derivs[last] / prof.values[last];
        assert!((ratio - 2.0 * 2f64.tanh()).abs() < 1e-10, "{ratio}");
        let (b, _) = prof.eval(0.37);
        assert!((b - (2.0 * 0.37f64).cosh()).abs() < 1e-9);
    }

    #[test]
    fn zero_frequency_symmetric_start_is_constant() {
        let g = warped("exTorus");
        let prof = shoot_profile(&g, 0.0, 0.0, ShootStart::CenterSymmetric).unwrap();
        assert!(prof.values.iter().all(|&v| v == 1.0));
        assert!(prof.derivs.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn center_start_rejected_on_asymmetric_warp() {
        let g = warped("asym-exp");
        assert!(matches!(shoot_profile(&g, 1.0, 0.0, ShootStart::CenterSymmetric), Err(Error::BadStart(_))));
    }

    #[test]
    fn cylinder_modes_closed_form() {
        let g = warped("cylinder");
        for mu in 1..=10 {
            let mu = mu as f64;
            let modes = steklov_modes(&g, &freq(mu), 100.0).unwrap();
            assert_eq!(modes.len(), 2);
            assert!((modes[0].lambda - mu * mu.tanh()).abs() < 1e-8);
            assert!((modes[1].lambda - mu / mu.tanh()).abs() < 1e-8);
        }
    }

    #[test]
    fn scan_path_agrees_with_parity_path() {
        for name in ["cylinder", "exTorus"] {
            let g = warped(name);
            for mu in 0..=4 {
                let f = freq(mu as f64);
                let a = steklov_modes_with(&g, &f, 20.0, RootMethod::Auto, 1.0).unwrap();
                let b = steklov_modes_with(&g, &f, 20.0, RootMethod::Scan, 1.0).unwrap();
                assert_eq!(a.len(), b.len(), "{name} mu={mu}");
                for (x, y) in a.iter().zip(&b) {
                    assert!((x.lambda - y.lambda).abs() < 1e-8, "{name} mu={mu}: {} vs {}", x.lambda, y.lambda);
                }
            }
        }
    }

    #[test]
    fn asymmetric_modes_are_not_parity_related() {
        let g = warped("asym-exp");
        let modes = steklov_modes(&g, &freq(1.0), 10.0).unwrap();
        assert_eq!(modes.len(), 2);
        for m in &modes {
            if let ModeShape::Warped { profile } = &m.shape {
                let last = profile.len() - 1;
                let (l, r) = (profile.values[0], profile.values[last]);
                assert!((l.abs() - r.abs()).abs() > 1e-3, "{l} {r}");
            }
            assert_eq!(m.parity, Parity::None);
        }
    }

    #[test]
    fn zero_frequency_contains_constant_mode() {
        for name in ["cylinder", "exTorus", "concave", "asym-exp"] {
            let g = preset(name).unwrap();
            let cross = g.cross_section();
            let f0 = cross.frequencies(0.0)[0];
            let modes = modes_for_frequency(&g, &f0, 5.0).unwrap();
            assert!(modes[0].lambda.abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn disk_and_ball3_tables() {
        let disk = spectrum_table(&preset("disk").unwrap(), 4.0).unwrap();
        assert_eq!(expanded_eigenvalues(&disk), vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
        let ball = spectrum_table(&preset("ball3").unwrap(), 6.0).unwrap();
        for (l, m) in ball.iter().enumerate() {
            assert!((m.lambda - l as f64).abs() < 1e-12);
            assert_eq!(m.multiplicity, 2 * l + 1);
        }
    }

    #[test]
    fn cylinder_table_below_one() {
        let t = spectrum_table(&preset("cylinder").unwrap(), 0.99).unwrap();
        let ev = expanded_eigenvalues(&t);
        assert_eq!(ev.len(), 3);
        assert_eq!(ev[0], 0.0);
        assert!((ev[1] - 1f64.tanh()).abs() < 1e-9 && (ev[2] - 1f64.tanh()).abs() < 1e-9);
        let t1 = spectrum_table(&preset("cylinder").unwrap(), 1.0 + 1e-9).unwrap();
        assert!(t1.iter().any(|m| m.mu == 0.0 && (m.lambda - 1.0).abs() < 1e-9));
    }

    #[test]
    fn custom_warp_rejects_negative_mu() {
        let g = WarpedProductGeometry::new(1.0, CrossSection::Circle, Warp::Polynomial(vec![1.0]), None).unwrap();
        assert!(shoot_profile(&g, -1.0, 0.0, ShootStart::Left).is_err());
    }

    #[test]
    fn quadratic_route_matches_scan_on_asym() {
        let g = warped("asym-exp");
        for mu in [0.0, 1.0, 3.0, 6.0] {
            let scan: Vec<f64> = steklov_modes(&g, &freq(mu), 50.0).unwrap().iter().map(|m| m.lambda).collect();
            let quad = quadratic_dtn_roots(&g, mu).unwrap();
            assert_eq!(scan.len(), quad.len(), "mu {mu}");
            for (a, b) in scan.iter().zip(&quad) {
                assert!((a - b).abs() < 1e-8 * (1.0 + a), "mu {mu}: {a} vs {b}");
            }
        }
    }
}
