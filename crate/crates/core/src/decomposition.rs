//! Mollification decompositions `φ = φ₁ + φ₂` on the unit sphere and on the
//! half-space model `ℍᵐ`, with the extensions of `φ₂` to the ambient space and
//! sup-norm certificates measured by dense probing.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fields::ScalarField;
use crate::fields::VectorField;
use crate::functionals::{scalar_gradient_lp_norm, Geometry};
use crate::geometry::{sphere_area, SupportBox};
use crate::linalg::{Matrix, Vector};
use crate::quadrature::{composite, sphere_rule, trapezoid_periodic, volume_rule, Accuracy, VolumeDomain};

/// The sphere mollifier equals 1 on `|u| ≤ PLATEAU`.
pub const PLATEAU: f64 = 0.5;
/// Exponent `k` of the hyperbolic mollifier `(1 - |v|²)^k`.
pub const HYPERBOLIC_MOLLIFIER_POWER: i32 = 4;
/// Probe points per mollification length, per dimension.
pub const PROBES_PER_LAMBDA: f64 = 64.0;

/// Smooth step from 0 (at `t ≤ 0`) to 1 (at `t ≥ 1`) and its derivative.
pub(crate) fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let u = 1.0 / t - 1.0 / (1.0 - t);
    let s = 1.0 / (1.0 + u.exp());
    let ds = s * (1.0 - s) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)));
    (s, if ds.is_finite() { ds } else { 0.0 })
}

/// Radial profile `η(s)` of the sphere mollifier: 1 on `[0, 1/2]`, 0 on
/// `[1, ∞)`, smooth in between.
pub fn sphere_mollifier(s: f64) -> f64 {
    1.0 - smooth_step((s - PLATEAU) / (1.0 - PLATEAU)).0
}

/// `η'(s)`.
pub fn sphere_mollifier_derivative(s: f64) -> f64 {
    -smooth_step((s - PLATEAU) / (1.0 - PLATEAU)).1 / (1.0 - PLATEAU)
}

/// `Γ(j / 2)` for positive integers `j`.
fn gamma_half(j: usize) -> f64 {
    match j {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (j as f64 / 2.0 - 1.0) * gamma_half(j - 2),
    }
}

/// `∫_{|u|<1} (1 - |u|²)^k du` in `ℝᵐ`.
pub fn ball_moment(m: usize, k: i32) -> f64 {
    let k = k as usize;
    PI.powf(m as f64 / 2.0) * gamma_half(2 * k + 2) / gamma_half(2 * k + 2 + m)
}

/// The hyperbolic mollifier `η(v) = (1 - |v|²)^k / Z` with `∫ η = 1`.
pub fn hyperbolic_mollifier(v: &Vector) -> f64 {
    let s = 1.0 - v.norm_squared();
    if s <= 0.0 {
        return 0.0;
    }
    s.powi(HYPERBOLIC_MOLLIFIER_POWER) / ball_moment(v.dim(), HYPERBOLIC_MOLLIFIER_POWER)
}

fn check_sphere_lambda(lambda: f64, n: usize) -> Result<()> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda must be positive"));
    }
    Ok(())
}

/// One node of a geodesic cap around a pole `x`:
/// `y = cos θ x + sin θ (cos α u + sin α w)`.
#[derive(Clone, Copy, Debug)]
struct CapNode {
    cos_t: f64,
    sin_t: f64,
    cos_a: f64,
    sin_a: f64,
    /// `η(|x - y| / λ) · weight`.
    kernel: f64,
    /// `η'(|x - y| / λ) · weight / (λ |x - y|)`, the factor of `x - y` in the
    /// differentiated kernel.
    dkernel: f64,
}

/// Quadrature over the cap `|x - y| < λ` of the unit sphere, in geodesic
/// polar coordinates about an arbitrary pole.
#[derive(Clone, Debug)]
struct CapRule {
    n: usize,
    nodes: Vec<CapNode>,
    c_lambda: f64,
}

const CAP_PLATEAU_PANELS: usize = 2;
const CAP_TRANSITION_PANELS: usize = 6;
const CAP_ORDER: usize = 8;
const CAP_AZIMUTH: usize = 24;

impl CapRule {
    fn new(n: usize, lambda: f64) -> Result<Self> {
        check_sphere_lambda(lambda, n)?;
        if lambda >= 1.0 {
            return Err(invalid("the cap rule needs 0 < lambda < 1"));
        }
        let theta_p = 2.0 * (PLATEAU * lambda / 2.0).asin();
        let theta_max = 2.0 * (lambda / 2.0).asin();
        let mut thetas = composite(0.0, theta_p, CAP_PLATEAU_PANELS, CAP_ORDER);
        thetas.extend(composite(theta_p, theta_max, CAP_TRANSITION_PANELS, CAP_ORDER));
        let azimuth: Vec<(f64, f64)> = match n {
            2 => vec![(0.0, 1.0), (PI, 1.0)],
            _ => trapezoid_periodic(CAP_AZIMUTH),
        };
        let mut nodes = Vec::with_capacity(thetas.len() * azimuth.len());
        for &(t, wt) in &thetas {
            let (sin_t, cos_t) = t.sin_cos();
            let chord = 2.0 * (t / 2.0).sin();
            let s = chord / lambda;
            let jac = if n == 3 { sin_t } else { 1.0 };
            for &(a, wa) in &azimuth {
                let (sin_a, cos_a) = a.sin_cos();
                let w = wt * wa * jac;
                nodes.push(CapNode {
                    cos_t,
                    sin_t,
                    cos_a,
                    sin_a,
                    kernel: sphere_mollifier(s) * w,
                    dkernel: if chord > 0.0 {
                        sphere_mollifier_derivative(s) * w / (lambda * chord)
                    } else {
                        0.0
                    },
                });
            }
        }
        let c_lambda = nodes.iter().map(|c| c.kernel).sum();
        Ok(Self { n, nodes, c_lambda })
    }

    #[inline]
    fn point(&self, node: &CapNode, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        let mut dir = u.scale(node.cos_a);
        if self.n == 3 {
            dir += w.scale(node.sin_a);
        }
        x.scale(node.cos_t) + dir.scale(node.sin_t)
    }

    /// `c_λ⁻¹ ∫ η_λ(x - y) φ(y) dσ(y)` and its tangential gradient at `x` on
    /// the sphere.
    fn mollify(&self, phi: &ScalarField, x: &Vector, with_gradient: bool) -> (f64, Vector) {
        let (u, w) = tangent_frame(x);
        let phi_x = phi.value(x);
        let mut value = 0.0;
        let mut grad = Vector::zeros(self.n);
        for node in &self.nodes {
            let y = self.point(node, x, &u, &w);
            let py = phi.value(&y);
            value += node.kernel * py;
            if with_gradient {
                grad += (*x - y).scale(node.dkernel * (py - phi_x));
            }
        }
        let grad = project_tangent(x, &grad).scale(1.0 / self.c_lambda);
        (value / self.c_lambda, grad)
    }
}

/// Orthonormal tangent vectors at a point of the unit sphere (`w` unused for
/// `n = 2`).
fn tangent_frame(x: &Vector) -> (Vector, Vector) {
    match x.dim() {
        2 => (Vector::from([-x[1], x[0]]), Vector::zeros(2)),
        _ => {
            let k = (0..3).min_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap();
            let a = Vector::unit(3, k);
            let u = a - x.scale(a.dot(x));
            let u = u.scale(1.0 / u.norm());
            let w = Vector::from([
                x[1] * u[2] - x[2] * u[1],
                x[2] * u[0] - x[0] * u[2],
                x[0] * u[1] - x[1] * u[0],
            ]);
            (u, w)
        }
    }
}

#[inline]
fn project_tangent(x: &Vector, v: &Vector) -> Vector {
    *v - x.scale(v.dot(x) / x.norm_squared())
}

/// `c_λ = ∫_{𝕊ⁿ⁻¹} η_λ(x - y) dσ(y)` for `|x| = 1` and `0 < λ < 1`.
pub fn c_lambda(lambda: f64, n: usize) -> Result<f64> {
    check_sphere_lambda(lambda, n)?;
    if lambda >= 1.0 {
        return Err(invalid("c_lambda is defined for 0 < lambda < 1"));
    }
    Ok(CapRule::new(n, lambda)?.c_lambda)
}

/// `x ↦ ∫_{𝕊ⁿ⁻¹} η_λ(x - y) dσ(y)` for arbitrary `x ∈ ℝⁿ`, with a global
/// sphere rule (no use of the cap structure).
pub fn mollified_mass(lambda: f64, x: &Vector, accuracy: &Accuracy) -> Result<f64> {
    check_sphere_lambda(lambda, x.dim())?;
    let rule = sphere_rule(x.dim(), accuracy)?;
    Ok(rule.integrate(|y| sphere_mollifier((*x - *y).norm() / lambda)))
}

/// Where a decomposition lives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecompositionDomain {
    /// The unit sphere `𝕊ⁿ⁻¹ ⊂ ℝⁿ`; the extension lives on `|x| ≥ 1`.
    Sphere { n: usize },
    /// `ℍᵐ` with Morrey exponent `p > m`; the extension lives on `ℍ^{m+1}`
    /// (with `ℍᵐ` identified with the plane `{x₁ = 0}`).
    HalfSpace { m: usize, p: f64 },
}

/// Sup-norm certificates measured on probe grids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificates {
    /// `‖φ₁‖_∞`.
    pub phi1_sup: f64,
    /// `‖∇φ₂‖_∞` on the surface (`∇_𝕊`, or `|∇_g|` on `ℍᵐ`).
    pub phi2_gradient_sup: f64,
    /// `‖∇φ̃₂‖_∞` of the extension on the ambient probes.
    pub extension_gradient_sup: f64,
    /// `max |φ - φ₁ - φ₂|` over the probes.
    pub additivity_error: f64,
    /// Largest `|φ̃₂ - φ₂|` on the surface itself.
    pub restriction_error: f64,
    pub probes: usize,
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub lambda: f64,
    pub domain: DecompositionDomain,
    pub phi: ScalarField,
    pub phi1: ScalarField,
    pub phi2: ScalarField,
    pub extension: ScalarField,
    pub certificates: Certificates,
}

fn probe_count(length: f64, lambda: f64, min: usize, cap: usize) -> usize {
    ((PROBES_PER_LAMBDA * length / lambda).ceil() as usize).clamp(min, cap)
}

/// Probe points on the unit sphere resolving the scale `λ`, subject to a cap.
pub fn sphere_probes(n: usize, lambda: f64) -> Vec<Vector> {
    match n {
        2 => {
            let k = probe_count(2.0 * PI, lambda, 256, 4096);
            (0..k)
                .map(|i| {
                    let t = 2.0 * PI * (i as f64 + 0.5) / k as f64;
                    Vector::from([t.cos(), t.sin()])
                })
                .collect()
        }
        _ => {
            let k = probe_count(PI, lambda, 24, 48);
            let mut out = Vec::with_capacity(2 * k * k);
            for i in 0..k {
                let t = PI * (i as f64 + 0.5) / k as f64;
                for j in 0..2 * k {
                    let a = PI * j as f64 / k as f64;
                    out.push(Vector::from([t.sin() * a.cos(), t.sin() * a.sin(), t.cos()]));
                }
            }
            out
        }
    }
}

/// Tangential gradient of an ambient function on the sphere.
#[inline]
fn sphere_gradient(phi: &ScalarField, x: &Vector) -> Vector {
    project_tangent(x, &phi.gradient(x))
}

/// `‖∇_𝕊 φ‖_{L^p(𝕊ⁿ⁻¹)}` for an ambient function restricted to the sphere.
pub fn sphere_gradient_norm(phi: &ScalarField, p: f64, accuracy: &Accuracy) -> Result<f64> {
    let rule = sphere_rule(phi.dim(), accuracy)?;
    Ok(rule.integrate(|x| sphere_gradient(phi, x).norm().powf(p)).powf(1.0 / p))
}

fn max_reduce(values: impl ParallelIterator<Item = [f64; 4]>) -> [f64; 4] {
    values.reduce(
        || [0.0; 4],
        |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2]), a[3].max(b[3])],
    )
}

/// Decomposition of a function on `𝕊ⁿ⁻¹` (given as an ambient function).
///
/// For `λ ≥ 1`, `φ₂` is the spherical mean. For `0 < λ < 1`, `φ₂` is the
/// normalized mollification `c_λ⁻¹ ∫ η_λ(x - y) φ(y) dσ(y)`, with gradient
/// from the differentiated kernel. The extension is `φ₂(x / |x|)`.
pub fn sphere_decompose(phi: &ScalarField, lambda: f64) -> Result<DecompositionResult> {
    let n = phi.dim();
    check_sphere_lambda(lambda, n)?;
    let (phi2, extension) = if lambda >= 1.0 {
        let rule = sphere_rule(n, &Accuracy::new(16, 8))?;
        let mean = rule.integrate(|x| phi.value(x)) / sphere_area(n);
        let phi2 = ScalarField::new(n, move |_| mean, move |_| Vector::zeros(n))
            .with_hessian(move |_| Matrix::zeros(n))
            .with_label("mean");
        (phi2.clone(), phi2.with_label("mean extension"))
    } else {
        let cap = Arc::new(CapRule::new(n, lambda)?);
        let (c1, c2, c3, c4) = (cap.clone(), cap.clone(), cap.clone(), cap);
        let (p1, p2, p3, p4) = (phi.clone(), phi.clone(), phi.clone(), phi.clone());
        let phi2 = ScalarField::new(
            n,
            move |x| c1.mollify(&p1, &x.scale(1.0 / x.norm()), false).0,
            move |x| c2.mollify(&p2, &x.scale(1.0 / x.norm()), true).1,
        )
        .with_label(format!("mollified(λ={lambda})"));
        let extension = ScalarField::new(
            n,
            move |x| c3.mollify(&p3, &x.scale(1.0 / x.norm()), false).0,
            move |x| {
                let r = x.norm();
                c4.mollify(&p4, &x.scale(1.0 / r), true).1.scale(1.0 / r)
            },
        )
        .with_label(format!("radial extension(λ={lambda})"));
        (phi2, extension)
    };
    let (a, b, c, d) = (phi.clone(), phi2.clone(), phi.clone(), phi2.clone());
    let phi1 = ScalarField::new(
        n,
        move |x| a.value(x) - b.value(x),
        move |x| sphere_gradient(&c, x) - d.gradient(x),
    )
    .with_label("remainder");

    let probes = sphere_probes(n, lambda);
    // each probe also carries one exterior point, mostly on the sphere itself
    let radii = [1.0, 1.0, 1.5, 3.0];
    let sups = max_reduce(probes.par_iter().enumerate().map(|(i, x)| {
        let v = phi.value(x);
        let v2 = phi2.value(x);
        let g2 = phi2.gradient(x).norm();
        let ext = extension.gradient(&x.scale(radii[i % radii.len()])).norm();
        [(v - v2).abs(), g2, ext, 0.0]
    }));
    let stride = (probes.len() / 256).max(1);
    let (additivity, restriction) = probes
        .par_iter()
        .step_by(stride)
        .map(|x| {
            let (v, v1, v2) = (phi.value(x), phi1.value(x), phi2.value(x));
            ((v - v1 - v2).abs(), (extension.value(x) - v2).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(DecompositionResult {
        lambda,
        domain: DecompositionDomain::Sphere { n },
        phi: phi.clone(),
        phi1,
        phi2,
        extension,
        certificates: Certificates {
            phi1_sup: sups[0],
            phi2_gradient_sup: sups[1],
            extension_gradient_sup: sups[2],
            additivity_error: additivity,
            restriction_error: restriction,
            probes: probes.len(),
        },
    })
}

/// `|∇φ̃₂(x)|` for the radial extension of a sphere decomposition, `|x| ≥ 1`.
pub fn radial_extension_gradient(result: &DecompositionResult, x: &Vector) -> Result<f64> {
    let DecompositionDomain::Sphere { n } = result.domain else {
        return Err(invalid("radial extension exists only for sphere decompositions"));
    };
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.dim(),
        });
    }
    if x.norm() < 1.0 - 1e-12 {
        return Err(invalid("the radial extension is defined on |x| >= 1"));
    }
    Ok(result.extension.gradient(x).norm())
}

/// Ball rule for `∫ F(v) λ^{-m} η(v/λ) dv`: nodes `v = λu` with weights
/// `η(u) du`.
fn mollifier_ball_rule(m: usize, lambda: f64) -> Result<Vec<(Vector, f64)>> {
    let unit: Vec<(Vector, f64)> = match m {
        1 => composite(-1.0, 1.0, 4, 8)
            .into_iter()
            .map(|(u, w)| (Vector::from([u]), w))
            .collect(),
        2 => {
            let mut out = Vec::new();
            for (r, wr) in composite(0.0, 1.0, 2, 8) {
                for (a, wa) in trapezoid_periodic(24) {
                    out.push((Vector::from([r * a.cos(), r * a.sin()]), wr * wa * r));
                }
            }
            out
        }
        3 => {
            let rule = volume_rule(VolumeDomain::Ball { radius: 1.0 }, None, 3, &Accuracy::new(2, 8))?;
            rule.nodes()
                .iter()
                .copied()
                .zip(rule.weights().iter().copied())
                .collect()
        }
        _ => return Err(Error::UnsupportedDimension(m)),
    };
    Ok(unit
        .into_iter()
        .map(|(u, w)| (u.scale(lambda), hyperbolic_mollifier(&u) * w))
        .collect())
}

/// `Ψ_x(v) = (x' + x_m e^{v_m} v', x_m e^{v_m})`.
#[inline]
fn psi_map(x: &Vector, v: &Vector) -> Vector {
    let m = x.dim();
    let h = x[m - 1] * v[m - 1].exp();
    let mut y = *x;
    for i in 0..m - 1 {
        y[i] += h * v[i];
    }
    y[m - 1] = h;
    y
}

/// `φ₂(x) = ∫ φ(Ψ_x(v)) λ^{-m} η(v/λ) dv` and its coordinate gradient.
fn hyperbolic_mollify(phi: &ScalarField, rule: &[(Vector, f64)], x: &Vector, with_gradient: bool) -> (f64, Vector) {
    let m = x.dim();
    let mut value = 0.0;
    let mut frame = Vector::zeros(m);
    for (v, w) in rule {
        let y = psi_map(x, v);
        value += w * phi.value(&y);
        if with_gradient {
            // frame derivatives (e_i φ)(y) = y_m ∂_i φ(y)
            let e = phi.gradient(&y).scale(y[m - 1]);
            let decay = (-v[m - 1]).exp();
            let mut vertical = e[m - 1];
            for i in 0..m - 1 {
                frame[i] += w * decay * e[i];
                vertical += v[i] * e[i];
            }
            frame[m - 1] += w * vertical;
        }
    }
    (value, frame.scale(1.0 / x[m - 1]))
}

/// Support of `φ₂` given the support of `φ`.
fn mollified_support(b: &SupportBox, lambda: f64) -> SupportBox {
    let m = b.dim();
    let top = b.hi()[m - 1];
    let mut lo = *b.lo();
    let mut hi = *b.hi();
    for i in 0..m - 1 {
        lo[i] -= top * lambda;
        hi[i] += top * lambda;
    }
    lo[m - 1] *= (-lambda).exp();
    hi[m - 1] *= lambda.exp();
    SupportBox::new(lo, hi).expect("finite box")
}

/// Probe grid over a hyperbolic box: horizontal axes uniform, the vertical
/// axis uniform in `ln x_m`, resolving `λ` in hyperbolic length up to a cap.
pub fn half_space_probes(b: &SupportBox, lambda: f64) -> Vec<Vector> {
    let m = b.dim();
    let (bottom, top) = (b.lo()[m - 1], b.hi()[m - 1]);
    let cap = match m {
        1 => 4096,
        2 => 128,
        _ => 32,
    };
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            if i + 1 == m {
                let (a, z) = (bottom.ln(), top.ln());
                let k = probe_count(z - a, lambda, 16, cap);
                (0..k)
                    .map(|j| (a + (z - a) * (j as f64 + 0.5) / k as f64).exp())
                    .collect()
            } else {
                let (a, z) = (b.lo()[i], b.hi()[i]);
                let k = probe_count((z - a) / bottom, lambda, 16, cap);
                (0..k).map(|j| a + (z - a) * (j as f64 + 0.5) / k as f64).collect()
            }
        })
        .collect();
    let mut out = vec![Vector::zeros(0)];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| axis.iter().map(move |&c| p.push(c)))
            .collect();
    }
    out
}

/// Decomposition on `ℍᵐ` (`m ≤ 3`) for a compactly supported `φ` and a
/// Morrey exponent `p > m`. For `λ ≥ 1`, `φ₁ = φ` and `φ₂ = 0`.
pub fn hyperbolic_decompose(phi: &ScalarField, lambda: f64, p: f64) -> Result<DecompositionResult> {
    let m = phi.dim();
    if !(1..=3).contains(&m) {
        return Err(Error::UnsupportedDimension(m));
    }
    if !(p > m as f64) {
        return Err(invalid(format!("Morrey exponent p = {p} must exceed m = {m}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda must be positive"));
    }
    let support = phi.support().ok_or(Error::UnboundedSupport)?;
    if !(support.lo()[m - 1] > 0.0) {
        return Err(Error::SupportExceedsTruncation(
            "support must stay inside the half-space chart".into(),
        ));
    }
    let (phi2, box2) = if lambda >= 1.0 {
        let zero = ScalarField::new(m, |_| 0.0, move |_| Vector::zeros(m))
            .with_hessian(move |_| Matrix::zeros(m))
            .with_support(support)
            .with_label("0");
        (zero, support)
    } else {
        let rule = Arc::new(mollifier_ball_rule(m, lambda)?);
        let (r1, r2) = (rule.clone(), rule);
        let (p1, p2) = (phi.clone(), phi.clone());
        let box2 = mollified_support(&support, lambda);
        let f = ScalarField::new(
            m,
            move |x| hyperbolic_mollify(&p1, &r1, x, false).0,
            move |x| hyperbolic_mollify(&p2, &r2, x, true).1,
        )
        .with_support(box2)
        .with_label(format!("hyperbolic mollified(λ={lambda})"));
        (f, box2)
    };
    let (a, b, c, d) = (phi.clone(), phi2.clone(), phi.clone(), phi2.clone());
    let phi1 = ScalarField::new(
        m,
        move |x| a.value(x) - b.value(x),
        move |x| c.gradient(x) - d.gradient(x),
    )
    .with_support(box2)
    .with_label("remainder");
    let extension = extend_to_ambient(&phi2);

    let probes = half_space_probes(&box2, lambda);
    let sups = max_reduce(probes.par_iter().map(|x| {
        let v = phi.value(x);
        let (v1, v2) = (phi1.value(x), phi2.value(x));
        let g2 = phi2.gradient(x).norm() * x[m - 1];
        [v1.abs(), g2, 0.0, (v - v1 - v2).abs()]
    }));
    // ambient probes: rotate each surface probe around the x₁-axis circle of
    // radius x_m; a subsample suffices since the extension is explicit
    let stride = (probes.len() / 2048).max(1);
    let angles = [-1.2, -0.6, 0.0, 0.6, 1.2];
    let (ext_sup, restriction) = probes
        .par_iter()
        .step_by(stride)
        .map(|y| {
            let rho = y[m - 1];
            let mut sup: f64 = 0.0;
            for beta in angles {
                let x = y.insert(0, rho * f64::sin(beta));
                let mut x = x;
                x[m] = rho * f64::cos(beta);
                sup = sup.max(extension.gradient(&x).norm() * x[m]);
            }
            let on_s = extension.value(&y.insert(0, 0.0));
            (sup, (on_s - phi2.value(y)).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(DecompositionResult {
        lambda,
        domain: DecompositionDomain::HalfSpace { m, p },
        phi: phi.clone(),
        phi1,
        phi2,
        extension,
        certificates: Certificates {
            phi1_sup: sups[0],
            phi2_gradient_sup: sups[1],
            extension_gradient_sup: ext_sup,
            additivity_error: sups[3],
            restriction_error: restriction,
            probes: probes.len(),
        },
    })
}

/// Extension of a function on `S = {x₁ = 0} ≅ ℍ^{n-1}` to `ℍⁿ`:
/// `φ̃₂(x₁, x'', x_n) = φ₂(x'', √(x₁² + x_n²))`.
///
/// The declared support reaches down to `x_n = 0`: the extension is constant
/// along half-circles centred on the ideal boundary, so its support is not
/// compact in the chart.
pub fn extend_to_ambient(phi2: &ScalarField) -> ScalarField {
    let m = phi2.dim();
    let n = m + 1;
    let restrict = move |x: &Vector| {
        let rho = (x[0] * x[0] + x[n - 1] * x[n - 1]).sqrt();
        let mut y = x.remove(0);
        y[m - 1] = rho;
        (y, rho)
    };
    let (a, b) = (phi2.clone(), phi2.clone());
    let mut out = ScalarField::new(
        n,
        move |x| a.value(&restrict(x).0),
        move |x| {
            let (y, rho) = restrict(x);
            let g = b.gradient(&y);
            let d_rho = g[m - 1];
            let mut out = Vector::zeros(n);
            out[0] = d_rho * x[0] / rho;
            for i in 1..n - 1 {
                out[i] = g[i - 1];
            }
            out[n - 1] = d_rho * x[n - 1] / rho;
            out
        },
    )
    .with_label(format!("circular extension({})", phi2.label()));
    if let Some(bx) = phi2.support() {
        let top = bx.hi()[m - 1];
        let mut lo = bx.lo().insert(0, -top);
        let mut hi = bx.hi().insert(0, top);
        lo[n - 1] = 0.0;
        hi[n - 1] = top;
        out = out.with_support(SupportBox::new(lo, hi).expect("finite box"));
    }
    out
}

/// `⟨φ, e₁⟩_g` restricted to `S = {x₁ = 0}`, as a function on `ℍ^{n-1}`.
pub fn normal_component_on_plane(phi: &VectorField) -> ScalarField {
    let n = phi.dim();
    let (a, b) = (phi.clone(), phi.clone());
    let out = ScalarField::new(
        n - 1,
        move |y| a.value(&y.insert(0, 0.0))[0],
        move |y| {
            let j = b.jacobian(&y.insert(0, 0.0));
            let mut g = Vector::zeros(n - 1);
            for i in 1..n {
                g[i - 1] = j[(0, i)];
            }
            g
        },
    )
    .with_label(format!("normal component of {}", phi.label()));
    match phi.support() {
        Some(bx) => out.with_support(bx.remove(0)),
        None => out,
    }
}

/// `⟨φ(x), x/|x|⟩` as an ambient scalar; on the unit sphere it is `⟨φ, ν⟩`.
pub fn radial_component(phi: &VectorField) -> ScalarField {
    let n = phi.dim();
    let (a, b) = (phi.clone(), phi.clone());
    ScalarField::new(
        n,
        move |x| a.value(x).dot(&x.scale(1.0 / x.norm())),
        move |x| {
            let r = x.norm();
            let nu = x.scale(1.0 / r);
            let v = b.value(x);
            // ∇⟨φ, ν⟩ = Jᵀν + (I - ννᵀ)φ / r
            b.jacobian(x).transpose().mul_vec(&nu) + project_tangent(&nu, &v).scale(1.0 / r)
        },
    )
    .with_label(format!("radial component of {}", phi.label()))
}

/// Exponents `(a, b)` with `‖φ₁‖_∞ ≲ λ^a G` and `‖∇φ̃₂‖_∞ ≲ λ^b G`.
pub fn decomposition_exponents(domain: DecompositionDomain) -> (f64, f64) {
    match domain {
        DecompositionDomain::Sphere { n } => (1.0 / n as f64, 1.0 / n as f64 - 1.0),
        DecompositionDomain::HalfSpace { m, p } => (1.0 - m as f64 / p, -(m as f64) / p),
    }
}

/// The gradient norm `G` that the decomposition bounds are measured against:
/// `‖∇_𝕊φ‖_{Lⁿ(𝕊ⁿ⁻¹)}` or `‖∇_gφ‖_{L^p(ℍᵐ)}`.
pub fn reference_gradient_norm(phi: &ScalarField, domain: DecompositionDomain, accuracy: &Accuracy) -> Result<f64> {
    match domain {
        DecompositionDomain::Sphere { n } => sphere_gradient_norm(phi, n as f64, accuracy),
        DecompositionDomain::HalfSpace { p, .. } => {
            Ok(scalar_gradient_lp_norm(phi, Geometry::Hyperbolic, p, accuracy)?.value)
        }
    }
}

/// Normalized certificates of one decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSample {
    pub label: String,
    pub lambda: f64,
    /// `‖φ₁‖_∞ / (λ^a G)`.
    pub phi1_ratio: f64,
    /// Extension gradient sup over `λ^b G` (sphere) or `‖∇_gφ₂‖_∞ / (λ^b G)`
    /// (half-space).
    pub gradient_ratio: f64,
}

impl RatioSample {
    pub fn from_result(label: impl Into<String>, result: &DecompositionResult, gradient_norm: f64) -> Self {
        let (a, b) = decomposition_exponents(result.domain);
        let lam = result.lambda;
        let c = &result.certificates;
        let grad_sup = match result.domain {
            DecompositionDomain::Sphere { .. } => c.extension_gradient_sup,
            DecompositionDomain::HalfSpace { .. } => c.phi2_gradient_sup,
        };
        Self {
            label: label.into(),
            lambda: lam,
            phi1_ratio: c.phi1_sup / (lam.powf(a) * gradient_norm),
            gradient_ratio: grad_sup / (lam.powf(b) * gradient_norm),
        }
    }
}

/// Outcome of a bounded-ratio suite.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedRatioSuite {
    pub samples: Vec<RatioSample>,
    /// Largest ratio over the samples with `λ ≥ split`.
    pub constant: f64,
    /// Largest ratio over all samples.
    pub max_ratio: f64,
    pub pass: bool,
}

/// Fits one constant on the samples with `λ ≥ split` and checks that it also
/// bounds every sample with `λ < split`, i.e. that the ratios do not grow as
/// `λ → 0`.
pub fn bounded_ratio_suite(samples: Vec<RatioSample>, split: f64) -> BoundedRatioSuite {
    let ratio = |s: &RatioSample| s.phi1_ratio.max(s.gradient_ratio);
    let constant = samples
        .iter()
        .filter(|s| s.lambda >= split)
        .map(ratio)
        .fold(0.0, f64::max);
    let max_ratio = samples.iter().map(ratio).fold(0.0, f64::max);
    let finite = samples
        .iter()
        .all(|s| s.phi1_ratio.is_finite() && s.gradient_ratio.is_finite());
    BoundedRatioSuite {
        pass: finite && constant > 0.0 && max_ratio <= constant * (1.0 + 1e-9),
        samples,
        constant,
        max_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog::*;
    use crate::quadrature::adaptive_integrate;

    #[test]
    fn mollifier_shape() {
        assert_eq!(sphere_mollifier(0.0), 1.0);
        assert_eq!(sphere_mollifier(0.5), 1.0);
        assert_eq!(sphere_mollifier(1.0), 0.0);
        assert!((sphere_mollifier(0.75) - 0.5).abs() < 1e-15);
        for s in [0.55, 0.7, 0.9, 0.98] {
            let h = 1e-6;
            let fd = (sphere_mollifier(s + h) - sphere_mollifier(s - h)) / (2.0 * h);
            assert!((fd - sphere_mollifier_derivative(s)).abs() < 1e-6);
        }
    }

    #[test]
    fn hyperbolic_mollifier_has_unit_mass() {
        let one = adaptive_integrate(|v| hyperbolic_mollifier(&Vector::from([v])), -1.0, 1.0, 1e-14);
        assert!((one - 1.0).abs() < 1e-12);
        for m in 1..=3 {
            let total: f64 = mollifier_ball_rule(m, 0.3).unwrap().iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12, "{m}: {total}");
        }
    }

    #[test]
    fn c_lambda_matches_arc_oracle() {
        let lambda = 0.01;
        let t_max = 2.0 * (lambda / 2.0f64).asin();
        let oracle =
            2.0 * adaptive_integrate(
                |t: f64| sphere_mollifier(2.0 * (t / 2.0).sin() / lambda),
                0.0,
                t_max,
                1e-16,
            ) + 2.0
                * adaptive_integrate(
                    |t: f64| sphere_mollifier(2.0 * (t / 2.0).sin() / lambda),
                    t_max,
                    PI,
                    1e-16,
                );
        let c = c_lambda(lambda, 2).unwrap();
        assert!((c - oracle).abs() < 1e-8 * oracle, "{c} {oracle}");
        assert!(c_lambda(1.0, 2).is_err());
    }

    #[test]
    fn constant_function_reproduced() {
        for n in [2, 3] {
            let phi = constant_scalar(n, 2.5);
            for lambda in [0.3, 2.0] {
                let r = sphere_decompose(&phi, lambda).unwrap();
                assert!(r.certificates.phi1_sup < 1e-12, "{n} {lambda}");
                assert!((r.extension.value(&Vector::filled(n, 3.0)) - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_branch_of_first_harmonic() {
        let phi = linear_scalar(&Vector::from([1.0, 0.0]));
        let r = sphere_decompose(&phi, 1.5).unwrap();
        assert!(r.phi2.value(&Vector::from([1.0, 0.0])).abs() < 1e-14);
        assert_eq!(r.certificates.phi2_gradient_sup, 0.0);
        assert!((r.certificates.phi1_sup - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sphere_gradient_matches_finite_differences() {
        let phi = gaussian(&Vector::from([0.6, 0.5, 0.4]), 0.7, 1.0);
        let r = sphere_decompose(&phi, 0.2).unwrap();
        let x = Vector::from([0.48, 0.6, 0.64]);
        let (u, w) = tangent_frame(&x);
        let g = r.phi2.gradient(&x);
        let h = 1e-5;
        for t in [u, w] {
            let xp = (x + t.scale(h)).scale(1.0 / (x + t.scale(h)).norm());
            let xm = (x - t.scale(h)).scale(1.0 / (x - t.scale(h)).norm());
            let fd = (r.phi2.value(&xp) - r.phi2.value(&xm)) / (2.0 * h);
            assert!((fd - g.dot(&t)).abs() < 1e-6, "{fd} {}", g.dot(&t));
        }
        assert!(g.dot(&x).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_gradient_matches_finite_differences() {
        let phi = poly_bump(&Vector::from([0.2, 1.1]), 0.5, 5);
        let r = hyperbolic_decompose(&phi, 0.25, 3.0).unwrap();
        let x = Vector::from([0.3, 1.0]);
        let g = r.phi2.gradient(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (r.phi2.value(&xp) - r.phi2.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "{i}: {fd} {}", g[i]);
        }
    }

    #[test]
    fn hyperbolic_rejects_bad_exponent() {
        let phi = poly_bump(&Vector::from([0.0, 1.0]), 0.5, 4);
        assert!(hyperbolic_decompose(&phi, 0.5, 2.0).is_err());
        let r = hyperbolic_decompose(&phi, 1.0, 3.0).unwrap();
        assert_eq!(r.phi2.value(&Vector::from([0.0, 1.0])), 0.0);
        assert_eq!(r.phi1.value(&Vector::from([0.0, 1.0])), 1.0);
    }

    #[test]
    fn extension_is_circular() {
        let phi2 = poly_bump(&Vector::from([1.0]), 0.5, 4);
        let ext = extend_to_ambient(&phi2);
        let rho: f64 = 1.2;
        for beta in [-1.0f64, 0.0, 0.4] {
            let x = Vector::from([rho * beta.sin(), rho * beta.cos()]);
            assert!((ext.value(&x) - phi2.value(&Vector::from([rho]))).abs() < 1e-14);
        }
    }
}
