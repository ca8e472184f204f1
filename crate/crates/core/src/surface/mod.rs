//! Curved model hypersurfaces in the unit torus and the Fourier transform of
//! their normalized surface measure,
//!
//! ```text
//! σ̂(ξ) = ∫_Σ e(−ξ·x) dσ(x),   e(t) = exp(2πi t),   σ(Σ) = 1.
//! ```
//!
//! All supported kinds are quadrics `x = x₀ + A·u` with `u` on the unit
//! sphere and `A = diag(semi-axes)`. Their outward normal at `x₀ + A²ν/|Aν|`
//! is `ν`, and the curvature there is `|Aν|^{d+1} / det(A)²`.

pub mod bessel;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{dot, e, norm, ComplexKahanSum, GaussLegendre, KahanSum};

/// Largest trapezoid node count tried for curves.
const MAX_CURVE_NODES: usize = 1 << 22;
/// Largest Gauss–Legendre order tried for surfaces.
const MAX_POLAR_NODES: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Circle,
    Ellipse,
    Sphere,
    Ellipsoid,
}

impl SurfaceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceKind::Circle => "circle",
            SurfaceKind::Ellipse => "ellipse",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Ellipsoid => "ellipsoid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierMethod {
    Quadrature,
    ClosedForm,
    Asymptotic,
}

/// One evaluation of `σ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSample {
    pub xi: Vec<f64>,
    pub value: Complex64,
    pub method: FourierMethod,
    pub err_estimate: f64,
}

/// Nodes and normalized weights of a quadrature rule on the surface.
#[derive(Debug, Clone)]
pub struct SurfaceRule {
    /// Node coordinates, `dim` values per node.
    pub points: Vec<f64>,
    /// Weights summing to one.
    pub weights: Vec<f64>,
    pub dim: usize,
}

impl SurfaceRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }
}

/// A positively curved quadric strictly inside the fundamental domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypersurface {
    kind: SurfaceKind,
    semi_axes: Vec<f64>,
    center: Vec<f64>,
    total_measure: f64,
}

impl Hypersurface {
    pub fn circle(radius: f64, center: [f64; 2]) -> Result<Self> {
        Self::build(SurfaceKind::Circle, vec![radius; 2], center.to_vec())
    }

    pub fn ellipse(a: f64, b: f64, center: [f64; 2]) -> Result<Self> {
        Self::build(SurfaceKind::Ellipse, vec![a, b], center.to_vec())
    }

    pub fn sphere(radius: f64, center: [f64; 3]) -> Result<Self> {
        Self::build(SurfaceKind::Sphere, vec![radius; 3], center.to_vec())
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64, center: [f64; 3]) -> Result<Self> {
        Self::build(SurfaceKind::Ellipsoid, vec![a, b, c], center.to_vec())
    }

    fn build(kind: SurfaceKind, semi_axes: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if let Some(s) = semi_axes.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidSurface(format!(
                "{}: semi-axes must be positive, got {s}",
                kind.name()
            )));
        }
        let reach = semi_axes.iter().copied().fold(0.0, f64::max);
        for (i, &c) in center.iter().enumerate() {
            if !(c - reach > 0.0 && c + reach < 1.0) {
                return Err(Error::InvalidSurface(format!(
                    "{}: center[{i}] = {c} with extent {reach} leaves the fundamental domain",
                    kind.name()
                )));
            }
        }
        let mut s = Self {
            kind,
            semi_axes,
            center,
            total_measure: 0.0,
        };
        s.total_measure = s.measure();
        Ok(s)
    }

    fn measure(&self) -> f64 {
        let ax = &self.semi_axes;
        match self.kind {
            SurfaceKind::Circle => TAU * ax[0],
            SurfaceKind::Sphere => 2.0 * TAU * ax[0] * ax[0],
            SurfaceKind::Ellipse => {
                let n = 4096;
                let h = TAU / n as f64;
                let mut s = KahanSum::default();
                for k in 0..n {
                    let (sn, cs) = (k as f64 * h).sin_cos();
                    s.add((ax[0] * ax[0] * sn * sn + ax[1] * ax[1] * cs * cs).sqrt());
                }
                s.value() * h
            }
            SurfaceKind::Ellipsoid => {
                // dA = det(A)·|A⁻¹u| dS(u) on the unit sphere
                let rule = GaussLegendre::cached(128);
                let nphi = 256;
                let det: f64 = ax.iter().product();
                let mut s = KahanSum::default();
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let st = (1.0 - t * t).sqrt();
                    for j in 0..nphi {
                        let (sp, cp) = (TAU * j as f64 / nphi as f64).sin_cos();
                        let u = [st * cp, st * sp, t];
                        s.add(w * self.inverse_stretch_norm(&u));
                    }
                }
                det * s.value() * TAU / nphi as f64
            }
        }
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn min_semi_axis(&self) -> f64 {
        self.semi_axes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_semi_axis(&self) -> f64 {
        self.semi_axes.iter().copied().fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.max_semi_axis()
    }

    /// Arc length (d = 2) or area (d = 3) of the surface.
    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    fn is_round(&self) -> bool {
        matches!(self.kind, SurfaceKind::Circle | SurfaceKind::Sphere)
    }

    // |A⁻¹u|
    fn inverse_stretch_norm(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.semi_axes)
            .map(|(x, a)| (x / a) * (x / a))
            .sum::<f64>()
            .sqrt()
    }

    fn stretch(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter().zip(&self.semi_axes).map(|(x, a)| x * a).collect()
    }

    fn check_dim(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// Extremes of the curvature (d = 2) or Gauss curvature (d = 3).
    pub fn curvature_range(&self) -> Result<(f64, f64)> {
        let lo = self.min_semi_axis();
        let hi = self.max_semi_axis();
        let det: f64 = self.semi_axes.iter().product();
        let p = (self.dim() + 1) as i32;
        let (kmin, kmax) = (lo.powi(p) / (det * det), hi.powi(p) / (det * det));
        if !(kmin > 0.0) {
            return Err(Error::InvalidSurface(format!(
                "curvature must be positive, minimum is {kmin}"
            )));
        }
        Ok((kmin, kmax))
    }

    /// Curvature at the point whose outward normal is the unit vector `nu`.
    pub fn curvature_at_normal(&self, nu: &[f64]) -> f64 {
        let det: f64 = self.semi_axes.iter().product();
        norm(&self.stretch(nu)).powi(self.dim() as i32 + 1) / (det * det)
    }

    /// `h(ξ) = max_{x∈Σ} ξ·x = ξ·x₀ + |Aξ|`.
    pub fn support_function(&self, xi: &[f64]) -> Result<f64> {
        self.check_dim(xi)?;
        if xi.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroFrequency);
        }
        Ok(dot(xi, &self.center) + norm(&self.stretch(xi)))
    }

    /// Quadrature rule over the surface: `n` trapezoid nodes on a curve, or
    /// an `n`-point Gauss–Legendre rule in `cos θ` times `2n` trapezoid nodes
    /// in `φ` on a surface. Weights carry the arc-length / area element.
    pub fn surface_rule(&self, n: usize) -> SurfaceRule {
        let ax = &self.semi_axes;
        let x0 = &self.center;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if self.dim() == 2 {
            points.reserve(2 * n);
            weights.reserve(n);
            for k in 0..n {
                let (sn, cs) = (TAU * k as f64 / n as f64).sin_cos();
                points.push(x0[0] + ax[0] * cs);
                points.push(x0[1] + ax[1] * sn);
                weights.push((ax[0] * ax[0] * sn * sn + ax[1] * ax[1] * cs * cs).sqrt());
            }
        } else {
            let rule = GaussLegendre::cached(n);
            let nphi = 2 * n;
            points.reserve(3 * n * nphi);
            weights.reserve(n * nphi);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let st = (1.0 - t * t).sqrt();
                for j in 0..nphi {
                    let (sp, cp) = (TAU * j as f64 / nphi as f64).sin_cos();
                    let u = [st * cp, st * sp, t];
                    for k in 0..3 {
                        points.push(x0[k] + ax[k] * u[k]);
                    }
                    weights.push(w * self.inverse_stretch_norm(&u));
                }
            }
        }
        let mut total = KahanSum::default();
        weights.iter().for_each(|&w| total.add(w));
        let total = total.value();
        weights.iter_mut().for_each(|w| *w /= total);
        SurfaceRule {
            points,
            weights,
            dim: self.dim(),
        }
    }

    /// Starting node count for integrands of bandwidth `freq` (|ξ| or the
    /// largest frequency present).
    pub(crate) fn base_nodes(&self, freq: f64) -> usize {
        if self.dim() == 2 {
            (16.0 * (1.0 + freq * self.diameter())).ceil() as usize
        } else {
            // Gauss–Legendre resolves e(k·t) on [-1,1] once n exceeds ~πk.
            (2.0 * PI * freq * self.max_semi_axis() + 16.0)
                .ceil()
                .max(16.0) as usize
        }
        .next_power_of_two()
    }

    /// `σ̂(ξ)` by oscillation-resolving quadrature, refined by node doubling
    /// until two successive levels agree within `tol`.
    pub fn sigma_hat(&self, xi: &[f64], tol: f64) -> Result<FourierSample> {
        self.check_dim(xi)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        if xi.iter().all(|&x| x == 0.0) {
            return Ok(FourierSample {
                xi: xi.to_vec(),
                value: Complex64::new(1.0, 0.0),
                method: FourierMethod::Quadrature,
                err_estimate: 0.0,
            });
        }
        let mut n = self.base_nodes(norm(xi));
        let max = if self.dim() == 2 {
            MAX_CURVE_NODES
        } else {
            MAX_POLAR_NODES
        };
        let mut coarse = self.sigma_at_level(xi, n);
        loop {
            let fine = self.sigma_at_level(xi, 2 * n);
            let diff = (fine - coarse).norm();
            if diff <= tol {
                return Ok(FourierSample {
                    xi: xi.to_vec(),
                    value: fine,
                    method: FourierMethod::Quadrature,
                    err_estimate: diff,
                });
            }
            n *= 2;
            if 2 * n > max {
                return Err(Error::NonConvergence {
                    tol,
                    achieved: diff,
                    nodes: n,
                });
            }
            coarse = fine;
        }
    }

    fn sigma_at_level(&self, xi: &[f64], n: usize) -> Complex64 {
        if self.dim() == 2 {
            self.curve_sigma(xi, n)
        } else {
            let nphi = if self.is_round() { 1 } else { (n / 8).clamp(32, 512) };
            self.zonal_sigma(xi, n, nphi)
        }
    }

    // Periodic trapezoid rule in the angle parameter.
    fn curve_sigma(&self, xi: &[f64], n: usize) -> Complex64 {
        let (a, b) = (self.semi_axes[0], self.semi_axes[1]);
        let (pa, pb) = (xi[0] * a, xi[1] * b);
        let mut num = ComplexKahanSum::default();
        let mut den = KahanSum::default();
        for k in 0..n {
            let (sn, cs) = (TAU * k as f64 / n as f64).sin_cos();
            let w = if self.is_round() {
                1.0
            } else {
                (a * a * sn * sn + b * b * cs * cs).sqrt()
            };
            num.add(e(-(pa * cs + pb * sn)) * w);
            den.add(w);
        }
        e(-dot(xi, &self.center)) * (num.value() / den.value())
    }

    // Product rule on the unit sphere in a frame whose polar axis is Aξ, so
    // the phase depends on the polar coordinate only: Gauss–Legendre in
    // t = cos θ, trapezoid in φ for the (smooth) area-element weight.
    fn zonal_sigma(&self, xi: &[f64], n: usize, nphi: usize) -> Complex64 {
        let eta = self.stretch(xi);
        let k = norm(&eta);
        let axis: Vec<f64> = eta.iter().map(|v| v / k).collect();
        let (e1, e2) = orthonormal_complement(&axis);
        let rule = GaussLegendre::cached(n);
        let mut num = ComplexKahanSum::default();
        let mut den = KahanSum::default();
        for (&t, &gw) in rule.nodes.iter().zip(&rule.weights) {
            let weight = if self.is_round() {
                1.0
            } else {
                let st = (1.0 - t * t).sqrt();
                let mut ring = KahanSum::default();
                for j in 0..nphi {
                    let (sp, cp) = (TAU * j as f64 / nphi as f64).sin_cos();
                    let u = [
                        t * axis[0] + st * (cp * e1[0] + sp * e2[0]),
                        t * axis[1] + st * (cp * e1[1] + sp * e2[1]),
                        t * axis[2] + st * (cp * e1[2] + sp * e2[2]),
                    ];
                    ring.add(self.inverse_stretch_norm(&u));
                }
                ring.value()
            };
            num.add(e(-k * t) * (gw * weight));
            den.add(gw * weight);
        }
        e(-dot(xi, &self.center)) * (num.value() / den.value())
    }

    /// Closed forms: `e(−ξ·x₀)·J₀(2πρ|ξ|)` for a circle and
    /// `e(−ξ·x₀)·sin(2πρ|ξ|)/(2πρ|ξ|)` for a sphere.
    pub fn sigma_hat_closed_form(&self, xi: &[f64]) -> Result<FourierSample> {
        self.check_dim(xi)?;
        let rho = self.semi_axes[0];
        let z = TAU * rho * norm(xi);
        let phase = e(-dot(xi, &self.center));
        let (radial, err) = match self.kind {
            SurfaceKind::Circle => (bessel::j0(z), 1e-10),
            SurfaceKind::Sphere => (if z == 0.0 { 1.0 } else { z.sin() / z }, 1e-15),
            _ => return Err(Error::UnsupportedKind("closed-form sigma_hat")),
        };
        Ok(FourierSample {
            xi: xi.to_vec(),
            value: phase * radial,
            method: FourierMethod::ClosedForm,
            err_estimate: err,
        })
    }

    /// Closed form when the kind has one, quadrature otherwise.
    pub fn sigma_hat_preferred(&self, xi: &[f64], tol: f64) -> Result<FourierSample> {
        if self.is_round() {
            self.sigma_hat_closed_form(xi)
        } else {
            self.sigma_hat(xi, tol)
        }
    }

    /// Default lower limit on `|ξ|` for the asymptotic form.
    pub fn asymptotic_threshold(&self) -> f64 {
        10.0 / self.min_semi_axis()
    }

    /// Leading stationary-phase term, with the default threshold.
    pub fn sigma_hat_asymptotic(&self, xi: &[f64]) -> Result<FourierSample> {
        self.sigma_hat_asymptotic_with_threshold(xi, self.asymptotic_threshold())
    }

    /// Leading stationary-phase term from the two points `x±` whose outward
    /// normal is `±ξ/|ξ|`:
    ///
    /// ```text
    /// σ̂(ξ) ≈ |Σ|⁻¹ K^{-1/2} |ξ|^{-(d-1)/2} · [e(−ξ·x₊ + (d−1)/8) + e(−ξ·x₋ − (d−1)/8)]
    /// ```
    ///
    /// `x₊` is where `ξ·x` is maximal (the phase `−ξ·x` has a minimum along
    /// the surface), which is what puts `+(d−1)/8` on that point. The sign
    /// convention is checked against the J₀ and sinc closed forms in tests.
    ///
    /// `err_estimate` is `3·max(|(d−2)²−1|, 1)/(8z)` times the amplitude,
    /// `z = 2π·min(semi-axis)·|ξ|`: the first omitted Hankel term of the
    /// round surface of the smallest semi-axis, with a safety factor of 3.
    pub fn sigma_hat_asymptotic_with_threshold(
        &self,
        xi: &[f64],
        threshold: f64,
    ) -> Result<FourierSample> {
        self.check_dim(xi)?;
        let r = norm(xi);
        if r < threshold {
            return Err(Error::BelowThreshold {
                norm: r,
                threshold,
            });
        }
        let d = self.dim() as f64;
        let nu: Vec<f64> = xi.iter().map(|x| x / r).collect();
        let curvature = self.curvature_at_normal(&nu);
        let amp = curvature.powf(-0.5) * r.powf(-(d - 1.0) / 2.0) / self.total_measure;
        let mid = dot(xi, &self.center);
        let reach = norm(&self.stretch(xi));
        let shift = (d - 1.0) / 8.0;
        let value = amp * (e(-(mid + reach) + shift) + e(-(mid - reach) - shift));
        let z = TAU * self.min_semi_axis() * r;
        let order = ((d - 2.0).powi(2) - 1.0).abs().max(1.0);
        Ok(FourierSample {
            xi: xi.to_vec(),
            value,
            method: FourierMethod::Asymptotic,
            err_estimate: 2.0 * amp * 3.0 * order / (8.0 * z),
        })
    }

    /// Maximum of `|σ̂(ξ)|·|ξ|^{(d−1)/2}` over each dyadic block `[R, 2R)`,
    /// `R = r_min·2^k < r_max`, sampling `samples_per_block` frequencies per
    /// block (geometric radii, quasi-uniform directions).
    pub fn decay_profile(
        &self,
        r_min: f64,
        r_max: f64,
        samples_per_block: usize,
        tol: f64,
    ) -> Result<Vec<DecayBlock>> {
        if !(r_min >= 1.0 && r_min < r_max) {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if samples_per_block == 0 {
            return Err(Error::InvalidArgument("samples_per_block must be > 0".into()));
        }
        let d = self.dim();
        let power = (d as f64 - 1.0) / 2.0;
        let mut blocks = Vec::new();
        let mut lo = r_min;
        let mut counter = 0usize;
        while lo < r_max {
            let hi = 2.0 * lo;
            let mut best = 0.0f64;
            for j in 0..samples_per_block {
                let radius = lo * 2f64.powf((j as f64 + 0.5) / samples_per_block as f64);
                let dir = quasi_uniform_direction(d, counter);
                counter += 1;
                let xi: Vec<f64> = dir.iter().map(|c| c * radius).collect();
                let s = self.sigma_hat(&xi, tol)?;
                best = best.max(s.value.norm() * radius.powf(power));
            }
            blocks.push(DecayBlock {
                r_lo: lo,
                r_hi: hi,
                max_scaled: best,
            });
            lo = hi;
        }
        Ok(blocks)
    }
}

/// One dyadic block of a decay profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBlock {
    pub r_lo: f64,
    pub r_hi: f64,
    pub max_scaled: f64,
}

/// Unit vector number `k` of a low-discrepancy sequence on `S^{d−1}`
/// (golden-angle circle for d = 2, Fibonacci sphere for d = 3).
pub fn quasi_uniform_direction(dim: usize, k: usize) -> Vec<f64> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let frac = (k as f64 * golden).fract();
    if dim == 2 {
        let (s, c) = (TAU * frac).sin_cos();
        vec![c, s]
    } else {
        // z uniform in (-1, 1) by a van der Corput-like stride
        let z = 1.0 - 2.0 * (((k as f64 + 0.5) * 0.754_877_666_246_692_7).fract());
        let r = (1.0 - z * z).sqrt();
        let (s, c) = (TAU * frac).sin_cos();
        vec![r * c, r * s, z]
    }
}

fn orthonormal_complement(axis: &[f64]) -> ([f64; 3], [f64; 3]) {
    // start from the coordinate direction least aligned with the axis
    let k = (0..3)
        .min_by(|&i, &j| axis[i].abs().total_cmp(&axis[j].abs()))
        .unwrap();
    let mut v = [0.0; 3];
    v[k] = 1.0;
    let p = dot(&v, axis);
    let mut e1 = [v[0] - p * axis[0], v[1] - p * axis[1], v[2] - p * axis[2]];
    let n1 = norm(&e1);
    e1.iter_mut().for_each(|c| *c /= n1);
    let e2 = [
        axis[1] * e1[2] - axis[2] * e1[1],
        axis[2] * e1[0] - axis[0] * e1[2],
        axis[0] * e1[1] - axis[1] * e1[0],
    ];
    (e1, e2)
}
