//! Pairings, norms, boundary fluxes and the integration-by-parts identities.
//!
//! Cartesian fields are integrated over `ℝⁿ` against `dx`; frame fields over
//! `ℍⁿ` against `dV_g = x_n^{-n} dx`, where pointwise inner products of frame
//! components are Euclidean because the frame is orthonormal. Every integral
//! runs over the declared support, so at least one factor must declare one.

use crate::error::{Error, Result};
use crate::fields::{covariant_from_parts, frame_divergence, Basis, ScalarField, VectorField};
use crate::geometry::{intersect_supports, Hypersurface, SupportBox};
use crate::linalg::{Matrix, Vector};
use crate::quadrature::{
    sphere_rule_at, surface_rule, volume_rule, Accuracy, QuadratureRule, SurfaceTruncation, VolumeDomain,
};

/// Value of a norm together with a quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    pub value: f64,
    /// `|value - value at half the panels|`; an upper estimate of the error.
    pub error_estimate: f64,
    pub nodes: usize,
    pub accuracy: Accuracy,
}

impl NormReport {
    fn zero(accuracy: Accuracy) -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            nodes: 0,
            accuracy,
        }
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.error_estimate <= tolerance * self.value.max(f64::MIN_POSITIVE)
    }
}

/// Which space an integral lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
}

impl From<Basis> for Geometry {
    fn from(b: Basis) -> Self {
        match b {
            Basis::Cartesian => Geometry::Euclidean,
            Basis::HyperbolicFrame => Geometry::Hyperbolic,
        }
    }
}

/// A surface carrying a flux integral or a surface Sobolev norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Surface {
    /// Euclidean sphere of the given centre and radius, measure `dσ`.
    Sphere { center: Vector, radius: f64 },
    /// Hyperbolic hypersurface, measure `dV'_g`.
    Hyperbolic(Hypersurface),
}

impl Surface {
    pub fn unit_sphere(n: usize) -> Self {
        Surface::Sphere {
            center: Vector::zeros(n),
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Surface::Sphere { center, .. } => center.dim(),
            Surface::Hyperbolic(s) => s.dim(),
        }
    }

    fn geometry(&self) -> Geometry {
        match self {
            Surface::Sphere { .. } => Geometry::Euclidean,
            Surface::Hyperbolic(_) => Geometry::Hyperbolic,
        }
    }

    /// Unit normal (Euclidean or frame components) at a point of the surface.
    fn normal(&self, x: &Vector) -> Vector {
        match self {
            Surface::Sphere { center, radius } => (*x - *center).scale(1.0 / radius),
            Surface::Hyperbolic(s) => s.normal_components(x),
        }
    }

    /// Derivative of the natural extension of the normal, `∂_j ν^i`, at a
    /// point of the surface.
    fn normal_derivative(&self, x: &Vector) -> Matrix {
        let n = x.dim();
        match self {
            Surface::Sphere { radius, .. } => {
                let nu = self.normal(x);
                Matrix::identity(n)
                    .add(&Matrix::outer(&nu, &nu).scale(-1.0))
                    .scale(1.0 / radius)
            }
            Surface::Hyperbolic(Hypersurface::Hemisphere { radius, .. }) => Matrix::identity(n).scale(1.0 / radius),
            Surface::Hyperbolic(Hypersurface::VerticalPlane { .. }) => Matrix::zeros(n),
        }
    }

    fn rule(&self, support: Option<SupportBox>, accuracy: &Accuracy) -> Result<QuadratureRule> {
        match self {
            Surface::Sphere { center, radius } => sphere_rule_at(center, *radius, accuracy),
            Surface::Hyperbolic(s) => {
                let b = support.ok_or(Error::UnboundedSupport)?;
                check_hyperbolic_box(&b)?;
                surface_rule(s, &SurfaceTruncation::from_support(b), accuracy)
            }
        }
    }
}

fn check_hyperbolic_box(b: &SupportBox) -> Result<()> {
    let bottom = b.lo().last();
    if !(bottom > 0.0) {
        return Err(Error::SupportExceedsTruncation(format!(
            "support reaches the ideal boundary (x_n >= {bottom})"
        )));
    }
    Ok(())
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Joint support of several factors: `Ok(None)` when the supports are
/// disjoint (the integral vanishes), an error when nothing is declared.
pub fn joint_support(boxes: &[Option<SupportBox>]) -> Result<Option<SupportBox>> {
    intersect_supports(boxes).ok_or(Error::UnboundedSupport)
}

/// Volume rule over a support box for the given geometry.
pub fn box_rule(geometry: Geometry, support: &SupportBox, accuracy: &Accuracy) -> Result<QuadratureRule> {
    let domain = match geometry {
        Geometry::Euclidean => VolumeDomain::Euclidean,
        Geometry::Hyperbolic => VolumeDomain::FullHalfSpaceChart,
    };
    volume_rule(domain, Some(support), support.dim(), accuracy)
}

/// Integrates over the box at `accuracy` and at half the panels; `post` maps
/// the raw integral to the reported quantity (e.g. a `p`-th root).
fn volume_report(
    geometry: Geometry,
    support: Option<SupportBox>,
    accuracy: &Accuracy,
    integrand: impl Fn(&Vector) -> f64 + Sync,
    post: impl Fn(f64) -> f64,
) -> Result<NormReport> {
    let Some(b) = support else {
        return Ok(NormReport::zero(*accuracy));
    };
    let fine = box_rule(geometry, &b, accuracy)?;
    let coarse = box_rule(geometry, &b, &accuracy.coarsened())?;
    let v = post(fine.integrate(&integrand));
    let c = post(coarse.integrate(&integrand));
    Ok(NormReport {
        value: v,
        error_estimate: (v - c).abs(),
        nodes: fine.len(),
        accuracy: *accuracy,
    })
}

fn lp_post(p: f64) -> impl Fn(f64) -> f64 {
    move |s: f64| s.max(0.0).powf(1.0 / p)
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(crate::error::invalid("exponent p must satisfy 1 <= p < inf"));
    }
    Ok(())
}

/// `∫ ⟨f, φ⟩` over `ℝⁿ` (`dx`) or `ℍⁿ` (`dV_g`).
pub fn pairing(f: &VectorField, phi: &VectorField, accuracy: &Accuracy) -> Result<f64> {
    Ok(pairing_report(f, phi, accuracy)?.value)
}

/// [`pairing`] with an error estimate.
pub fn pairing_report(f: &VectorField, phi: &VectorField, accuracy: &Accuracy) -> Result<NormReport> {
    check_dims(f.dim(), phi.dim())?;
    if f.basis() != phi.basis() {
        return Err(Error::WrongBasis {
            expected: match f.basis() {
                Basis::Cartesian => "Cartesian",
                Basis::HyperbolicFrame => "hyperbolic frame",
            },
        });
    }
    let support = joint_support(&[f.support(), phi.support()])?;
    volume_report(
        f.basis().into(),
        support,
        accuracy,
        |x| f.value(x).dot(&phi.value(x)),
        |s| s,
    )
}

/// `‖f‖_{L^p}` with `|f|_g` the frame (or Euclidean) norm.
pub fn lp_norm(f: &VectorField, p: f64, accuracy: &Accuracy) -> Result<NormReport> {
    check_p(p)?;
    let support = joint_support(&[f.support()])?;
    volume_report(
        f.basis().into(),
        support,
        accuracy,
        |x| f.value(x).norm().powf(p),
        lp_post(p),
    )
}

pub fn l1_norm(f: &VectorField, accuracy: &Accuracy) -> Result<NormReport> {
    lp_norm(f, 1.0, accuracy)
}

/// `‖ψ‖_{L^p}` on the given geometry.
pub fn scalar_lp_norm(psi: &ScalarField, geometry: Geometry, p: f64, accuracy: &Accuracy) -> Result<NormReport> {
    check_p(p)?;
    let support = joint_support(&[psi.support()])?;
    volume_report(geometry, support, accuracy, |x| psi.value(x).abs().powf(p), lp_post(p))
}

/// `‖∇ψ‖_{L^p}`; on `ℍⁿ` the gradient is `|∇_g ψ|_g = x_n |∇ψ|`.
pub fn scalar_gradient_lp_norm(
    psi: &ScalarField,
    geometry: Geometry,
    p: f64,
    accuracy: &Accuracy,
) -> Result<NormReport> {
    check_p(p)?;
    let support = joint_support(&[psi.support()])?;
    volume_report(
        geometry,
        support,
        accuracy,
        |x| {
            let g = psi.gradient(x).norm();
            let g = match geometry {
                Geometry::Euclidean => g,
                Geometry::Hyperbolic => g * x.last(),
            };
            g.powf(p)
        },
        lp_post(p),
    )
}

/// Pointwise norm of the derivative: Frobenius norm of the Jacobian for
/// Cartesian fields, of the covariant derivative for frame fields.
#[inline]
pub fn gradient_norm_at(phi: &VectorField, x: &Vector) -> f64 {
    match phi.basis() {
        Basis::Cartesian => phi.jacobian(x).frobenius(),
        Basis::HyperbolicFrame => covariant_from_parts(&phi.value(x), &phi.jacobian(x), x.last()).frobenius(),
    }
}

/// `‖∇φ‖_{L^p}` (`‖∇_g φ‖_{L^p}` for frame fields).
pub fn gradient_lp_norm(phi: &VectorField, p: f64, accuracy: &Accuracy) -> Result<NormReport> {
    check_p(p)?;
    let support = joint_support(&[phi.support()])?;
    volume_report(
        phi.basis().into(),
        support,
        accuracy,
        |x| gradient_norm_at(phi, x).powf(p),
        lp_post(p),
    )
}

/// `‖∇φ‖_{L^n}` in dimension `n`.
pub fn ln_gradient_norm(phi: &VectorField, accuracy: &Accuracy) -> Result<NormReport> {
    gradient_lp_norm(phi, phi.dim() as f64, accuracy)
}

/// Pointwise divergence for either basis.
#[inline]
pub fn divergence_at(f: &VectorField, x: &Vector) -> f64 {
    match f.basis() {
        Basis::Cartesian => f.jacobian(x).trace(),
        Basis::HyperbolicFrame => frame_divergence(f, x),
    }
}

/// `‖div f‖_{L¹}`.
pub fn divergence_l1_norm(f: &VectorField, accuracy: &Accuracy) -> Result<NormReport> {
    let support = joint_support(&[f.support()])?;
    volume_report(
        f.basis().into(),
        support,
        accuracy,
        |x| divergence_at(f, x).abs(),
        |s| s,
    )
}

fn check_surface_field(phi: &VectorField, surface: &Surface) -> Result<()> {
    check_dims(surface.dim(), phi.dim())?;
    let expected = match surface.geometry() {
        Geometry::Euclidean => Basis::Cartesian,
        Geometry::Hyperbolic => Basis::HyperbolicFrame,
    };
    if phi.basis() != expected {
        return Err(Error::WrongBasis {
            expected: match expected {
                Basis::Cartesian => "Cartesian",
                Basis::HyperbolicFrame => "hyperbolic frame",
            },
        });
    }
    Ok(())
}

/// Tangential projector `I - ν νᵀ`.
fn tangential_projector(nu: &Vector) -> Matrix {
    Matrix::identity(nu.dim()).add(&Matrix::outer(nu, nu).scale(-1.0))
}

fn surface_report(
    surface: &Surface,
    support: Option<SupportBox>,
    accuracy: &Accuracy,
    integrand: impl Fn(&Vector, &Vector) -> f64 + Sync,
    post: impl Fn(f64) -> f64,
) -> Result<NormReport> {
    let fine = surface.rule(support, accuracy)?;
    let coarse = surface.rule(support, &accuracy.coarsened())?;
    let v = post(fine.integrate_with_normal(&integrand));
    let c = post(coarse.integrate_with_normal(&integrand));
    Ok(NormReport {
        value: v,
        error_estimate: (v - c).abs(),
        nodes: fine.len(),
        accuracy: *accuracy,
    })
}

/// `‖φ‖_{L^n(Σ)} + ‖∇_Σ φ‖_{L^n(Σ)}` for a vector field restricted to a
/// surface, with `n` the ambient dimension. The surface gradient is the
/// ambient derivative taken in tangential directions only.
pub fn w1n_surface_norm(phi: &VectorField, surface: &Surface, accuracy: &Accuracy) -> Result<NormReport> {
    check_surface_field(phi, surface)?;
    let n = phi.dim() as f64;
    let value = surface_report(
        surface,
        phi.support(),
        accuracy,
        |x, _| phi.value(x).norm().powf(n),
        lp_post(n),
    )?;
    let grad = surface_report(
        surface,
        phi.support(),
        accuracy,
        |x, nu| {
            let p = tangential_projector(nu);
            let m = match phi.basis() {
                // rows = components, columns = derivative direction
                Basis::Cartesian => phi.jacobian(x).mul_mat(&p),
                // rows = derivative direction
                Basis::HyperbolicFrame => p.mul_mat(&covariant_from_parts(&phi.value(x), &phi.jacobian(x), x.last())),
            };
            m.frobenius().powf(n)
        },
        lp_post(n),
    )?;
    Ok(NormReport {
        value: value.value + grad.value,
        error_estimate: value.error_estimate + grad.error_estimate,
        nodes: value.nodes,
        accuracy: *accuracy,
    })
}

/// Tangential gradient of `x ↦ ⟨φ(x), ν(x)⟩` at a surface point, in
/// Euclidean components (sphere) or frame components (hyperbolic surface).
pub fn normal_component_gradient(phi: &VectorField, surface: &Surface, x: &Vector) -> Vector {
    let nu = surface.normal(x);
    let v = phi.value(x);
    let jac = phi.jacobian(x);
    let dnu = surface.normal_derivative(x);
    // ∇⟨φ, ν⟩ = Jᵀν + Dνᵀφ in coordinates
    let mut g = jac.transpose().mul_vec(&nu) + dnu.transpose().mul_vec(&v);
    if surface.geometry() == Geometry::Hyperbolic {
        g = g.scale(x.last());
    }
    tangential_projector(&nu).mul_vec(&g)
}

/// `W^{1,n}(Σ)` norm of the scalar `⟨φ, ν⟩` on the surface.
pub fn w1n_normal_component_norm(phi: &VectorField, surface: &Surface, accuracy: &Accuracy) -> Result<NormReport> {
    check_surface_field(phi, surface)?;
    let n = phi.dim() as f64;
    let value = surface_report(
        surface,
        phi.support(),
        accuracy,
        |x, nu| phi.value(x).dot(nu).abs().powf(n),
        lp_post(n),
    )?;
    let grad = surface_report(
        surface,
        phi.support(),
        accuracy,
        |x, _| normal_component_gradient(phi, surface, x).norm().powf(n),
        lp_post(n),
    )?;
    Ok(NormReport {
        value: value.value + grad.value,
        error_estimate: value.error_estimate + grad.error_estimate,
        nodes: value.nodes,
        accuracy: *accuracy,
    })
}

/// `‖f‖_{L¹(Σ)}` on a surface.
pub fn surface_l1_norm(f: &VectorField, surface: &Surface, accuracy: &Accuracy) -> Result<NormReport> {
    check_surface_field(f, surface)?;
    surface_report(surface, f.support(), accuracy, |x, _| f.value(x).norm(), |s| s)
}

/// `∫_Σ ⟨f, ν⟩⟨φ, ν⟩` with `dσ` on spheres and `dV'_g` on hyperbolic
/// surfaces.
pub fn boundary_flux(f: &VectorField, phi: &VectorField, surface: &Surface, accuracy: &Accuracy) -> Result<f64> {
    check_surface_field(f, surface)?;
    check_surface_field(phi, surface)?;
    let support = match surface {
        Surface::Sphere { .. } => None,
        Surface::Hyperbolic(_) => match joint_support(&[f.support(), phi.support()])? {
            Some(b) => Some(b),
            None => return Ok(0.0),
        },
    };
    let rule = surface.rule(support, accuracy)?;
    Ok(rule.integrate_with_normal(|x, nu| f.value(x).dot(nu) * phi.value(x).dot(nu)))
}

/// Both sides of an integration-by-parts identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartsCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / (|lhs| + |rhs| + 1)`.
    pub residual: f64,
}

impl PartsCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1.0),
        }
    }
}

/// `∫_{𝕊ⁿ⁻¹} ⟨f, ν⟩ ψ dσ` against `-∫_{ℝⁿ∖𝔹ⁿ} ⟨f, ∇ψ⟩ dx`.
pub fn verify_parts_euclidean(f: &VectorField, psi: &ScalarField, accuracy: &Accuracy) -> Result<PartsCheck> {
    if f.basis() != Basis::Cartesian {
        return Err(Error::WrongBasis { expected: "Cartesian" });
    }
    check_dims(f.dim(), psi.dim())?;
    let n = f.dim();
    let sphere = sphere_rule_at(&Vector::zeros(n), 1.0, accuracy)?;
    let lhs = sphere.integrate_with_normal(|x, nu| f.value(x).dot(nu) * psi.value(x));
    let rhs = match joint_support(&[f.support(), psi.support()])? {
        None => 0.0,
        Some(b) => {
            let r_max = b.farthest_distance(&Vector::zeros(n));
            let rule = volume_rule(VolumeDomain::ExteriorOfBall { r_max }, Some(&b), n, accuracy)?;
            -rule.integrate(|x| f.value(x).dot(&psi.gradient(x)))
        }
    };
    Ok(PartsCheck::new(lhs, rhs))
}

/// `∫_S ⟨f, ν⟩_g ψ dV'_g` against `-∫_X ⟨f, ∇_g ψ⟩_g dV_g` for
/// `S = {x₁ = 0}`, `ν = e₁`, `X = {x₁ > 0}`.
pub fn verify_parts_hyperbolic(f: &VectorField, psi: &ScalarField, accuracy: &Accuracy) -> Result<PartsCheck> {
    if f.basis() != Basis::HyperbolicFrame {
        return Err(Error::WrongBasis {
            expected: "hyperbolic frame",
        });
    }
    check_dims(f.dim(), psi.dim())?;
    let n = f.dim();
    let Some(b) = joint_support(&[f.support(), psi.support()])? else {
        return Ok(PartsCheck::new(0.0, 0.0));
    };
    check_hyperbolic_box(&b)?;
    let plane = Hypersurface::vertical_plane(n, 0, 0.0)?;
    let surface = surface_rule(&plane, &SurfaceTruncation::from_support(b), accuracy)?;
    let lhs = surface.integrate_with_normal(|x, nu| f.value(x).dot(nu) * psi.value(x));
    let rhs = if b.hi()[0] <= 0.0 {
        0.0
    } else {
        let rule = volume_rule(VolumeDomain::HalfSpaceX1Positive, Some(&b), n, accuracy)?;
        -rule.integrate(|x| f.value(x).dot(&psi.gradient(x)) * x.last())
    };
    Ok(PartsCheck::new(lhs, rhs))
}
