//! Geometric identities behind the averaging arguments: spherical-average
//! reconstruction of a pairing, the map `Φ_x(z) = (x - (z,0)) / |x - (z,0)|`
//! with its Jacobian, and the coarea identity over the hemisphere family.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fields::{Basis, ScalarField, VectorField};
use crate::functionals::{box_rule, joint_support, Geometry};
use crate::geometry::{sphere_area, Hypersurface, Point, SupportBox};
use crate::linalg::{determinant, Vector};
use crate::quadrature::{
    adaptive_integrate, composite, sphere_rule, surface_rule, trapezoid_periodic, Accuracy, SurfaceTruncation,
};

/// The constant `c` with `⟨a, b⟩ = c ∫_{𝕊ⁿ⁻¹} ⟨a, ω⟩⟨b, ω⟩ dσ(ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragingConstant {
    pub n: usize,
    pub c: f64,
}

/// `c = 1 / ∫ ω₁² dσ = n / |𝕊ⁿ⁻¹|`.
pub fn averaging_constant(n: usize) -> Result<AveragingConstant> {
    if n < 2 {
        return Err(invalid("averaging needs n >= 2"));
    }
    Ok(AveragingConstant {
        n,
        c: n as f64 / sphere_area(n),
    })
}

fn check_phi_args(x: &Point, z: &Vector) -> Result<()> {
    if !x.space().is_hyperbolic() {
        return Err(Error::MixedSpaces);
    }
    if z.dim() + 1 != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim() - 1,
            actual: z.dim(),
        });
    }
    Ok(())
}

fn phi_raw(x: &Vector, z: &Vector) -> Vector {
    let d = *x - z.push(0.0);
    d.scale(1.0 / d.norm())
}

/// `Φ_x(z) = (x - (z,0)) / |x - (z,0)|`, a point of the open upper unit
/// hemisphere.
pub fn phi_map(x: &Point, z: &Vector) -> Result<Vector> {
    check_phi_args(x, z)?;
    Ok(phi_raw(x.coords(), z))
}

/// `Jac Φ_x(z) = x_n / |x - (z,0)|ⁿ`.
pub fn phi_jacobian(x: &Point, z: &Vector) -> Result<f64> {
    check_phi_args(x, z)?;
    let d = *x.coords() - z.push(0.0);
    Ok(x.height() / d.norm().powi(x.dim() as i32))
}

/// `√det[(DΦ)ᵀ DΦ]` with `DΦ` from central differences of step `h`.
pub fn gram_jacobian_fd(x: &Point, z: &Vector, h: f64) -> Result<f64> {
    check_phi_args(x, z)?;
    let m = z.dim();
    let cols: Vec<Vector> = (0..m)
        .map(|j| {
            let e = Vector::unit(m, j).scale(h);
            (phi_raw(x.coords(), &(*z + e)) - phi_raw(x.coords(), &(*z - e))).scale(0.5 / h)
        })
        .collect();
    let mut gram: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| cols[i].dot(&cols[j])).collect())
        .collect();
    Ok(determinant(&mut gram).max(0.0).sqrt())
}

/// The hemisphere `S(x, ω)` through `x` whose upward unit normal at `x` is
/// `x_n ω`: centre `z = x' - x_n ω' / ω_n`, radius `|x - (z,0)|`.
pub fn hemisphere_from(x: &Point, omega: &Vector) -> Result<Hypersurface> {
    if !x.space().is_hyperbolic() {
        return Err(Error::MixedSpaces);
    }
    let n = x.dim();
    if omega.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: omega.dim(),
        });
    }
    if !(omega.last() > 0.0) {
        return Err(invalid("omega must lie in the open upper hemisphere"));
    }
    let t = x.height() / omega.last();
    let z = (*x.coords() - omega.scale(t)).head(n - 1);
    let r = (*x.coords() - z.push(0.0)).norm();
    Hypersurface::hemisphere(z, r)
}

/// `∫_{ℝⁿ⁻¹} x_n / |x - (z,0)|ⁿ dz`, integrated numerically in coordinates
/// `z_i = tan u_i` that do not depend on `x`.
pub fn coarea_weight(x: &Point) -> Result<f64> {
    if !x.space().is_hyperbolic() {
        return Err(Error::MixedSpaces);
    }
    let n = x.dim();
    let xc = *x.coords();
    fn nest(xc: &Vector, n: usize, z: Vector, tol: f64) -> f64 {
        let half = PI / 2.0;
        if z.dim() + 1 == n {
            let d = *xc - z.push(0.0);
            return xc.last() / d.norm().powi(n as i32);
        }
        adaptive_integrate(
            |u: f64| {
                let c = u.cos();
                nest(xc, n, z.push(u.tan()), tol) / (c * c)
            },
            -half,
            half,
            tol,
        )
    }
    Ok(nest(&xc, n, Vector::zeros(0), 1e-13))
}

/// Nodes `(z, weight)` covering `ℝⁿ⁻¹` through `z = c + L tan u` (radially
/// for `n = 3`).
fn family_centres(center: &Vector, scale: f64, accuracy: &Accuracy) -> Vec<(Vector, f64)> {
    let (p, o) = (accuracy.panels, accuracy.order);
    match center.dim() {
        1 => composite(-PI / 2.0, PI / 2.0, p, o)
            .into_iter()
            .map(|(u, w)| {
                let c = u.cos();
                (*center + Vector::from([scale * u.tan()]), w * scale / (c * c))
            })
            .collect(),
        _ => {
            let radial = composite(0.0, PI / 2.0, p, o);
            let azimuth = trapezoid_periodic(accuracy.points());
            let mut out = Vec::with_capacity(radial.len() * azimuth.len());
            for &(u, wu) in &radial {
                let c = u.cos();
                let rho = scale * u.tan();
                let jac = wu * scale / (c * c) * rho;
                for &(a, wa) in &azimuth {
                    out.push((*center + Vector::from([rho * a.cos(), rho * a.sin()]), jac * wa));
                }
            }
            out
        }
    }
}

/// `∫_{ℝⁿ⁻¹} ∫₀^∞ ∫_{S(z,r)} G(x, ν) dV'_g dr / rⁿ dz` for an integrand
/// supported in `support` (`n ∈ {2, 3}`); `ν` is passed as frame
/// components of the upward unit normal.
///
/// The `r`-integral runs over `ln r` between the nearest and farthest
/// distance from `(z,0)` to the support.
pub fn hemisphere_family_integral(
    support: &SupportBox,
    accuracy: &Accuracy,
    integrand: impl Fn(&Vector, &Vector) -> f64 + Sync,
) -> Result<f64> {
    accuracy.validate()?;
    let n = support.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(support.lo().last() > 0.0) {
        return Err(Error::SupportExceedsTruncation(
            "support must stay inside the half-space chart".into(),
        ));
    }
    let center = support.center().head(n - 1);
    let mut scale = support.hi().last();
    for i in 0..n - 1 {
        scale = scale.max(0.5 * (support.hi()[i] - support.lo()[i]));
    }
    let truncation = SurfaceTruncation::from_support(*support);
    let centres = family_centres(&center, scale, accuracy);
    let per_centre: Vec<Result<f64>> = centres
        .par_iter()
        .map(|(z, wz)| {
            let base = z.push(0.0);
            let r0 = support.nearest_distance(&base);
            let r1 = support.farthest_distance(&base);
            let mut total = 0.0;
            for (t, wt) in composite(r0.ln(), r1.ln(), accuracy.panels, accuracy.order) {
                let r = t.exp();
                let s = Hypersurface::hemisphere(*z, r)?;
                let rule = surface_rule(&s, &truncation, accuracy)?;
                if rule.is_empty() {
                    continue;
                }
                total += wt * r.powi(1 - n as i32) * rule.integrate_with_normal(&integrand);
            }
            Ok(wz * total)
        })
        .collect();
    let mut sum = 0.0;
    for v in per_centre {
        sum += v?;
    }
    Ok(sum)
}

/// Both sides of the coarea identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoareaCheck {
    /// Triple integral over the hemisphere family.
    pub lhs: f64,
    /// `coarea_weight · ∫ F dV_g`.
    pub rhs: f64,
    /// `|lhs - rhs| / |rhs|` (absolute when `rhs = 0`).
    pub residual: f64,
}

/// Checks `∫_z ∫_r ∫_{S(z,r)} F dV'_g dr / rⁿ dz = C ∫_{ℍⁿ} F dV_g` for a
/// compactly supported density `F`.
pub fn verify_coarea(density: &ScalarField, accuracy: &Accuracy) -> Result<CoareaCheck> {
    let support = density.support().ok_or(Error::UnboundedSupport)?;
    let lhs = hemisphere_family_integral(&support, accuracy, |x, _| density.value(x))?;
    let anchor = Point::hyperbolic(support.center())?;
    let volume = box_rule(Geometry::Hyperbolic, &support, accuracy)?.integrate(|x| density.value(x));
    let rhs = coarea_weight(&anchor)? * volume;
    let diff = (lhs - rhs).abs();
    Ok(CoareaCheck {
        lhs,
        rhs,
        residual: if rhs != 0.0 { diff / rhs.abs() } else { diff },
    })
}

fn check_pair(f: &VectorField, phi: &VectorField, basis: Basis) -> Result<()> {
    if f.basis() != basis || phi.basis() != basis {
        return Err(Error::WrongBasis { expected: basis.name() });
    }
    if f.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            actual: phi.dim(),
        });
    }
    Ok(())
}

/// Orthonormal basis `(ω, ...)` of `ℝⁿ` completing a unit vector.
fn completed_basis(omega: &Vector) -> Vec<Vector> {
    let n = omega.dim();
    let mut basis = vec![*omega];
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = Vector::unit(n, k);
        for b in &basis {
            v = v - b.scale(v.dot(b));
        }
        if v.norm() > 1e-6 {
            basis.push(v.scale(1.0 / v.norm()));
        }
    }
    basis
}

/// `c ∫_{𝕊ⁿ⁻¹} ∫_ℝ ∫_{ω⊥ + tω} ⟨f, ω⟩⟨φ, ω⟩ dσ dt dσ(ω)` for Euclidean
/// fields: every direction `ω` gets its own grid aligned with the slices
/// `x · ω = t`.
pub fn spherical_average_pairing(f: &VectorField, phi: &VectorField, accuracy: &Accuracy) -> Result<f64> {
    check_pair(f, phi, Basis::Cartesian)?;
    accuracy.validate()?;
    let n = f.dim();
    let c = averaging_constant(n)?.c;
    let Some(support) = joint_support(&[f.support(), phi.support()])? else {
        return Ok(0.0);
    };
    let center = support.center();
    let radius = support.farthest_distance(&center);
    let axis = composite(-radius, radius, accuracy.panels, accuracy.order);
    // the integrand is quadratic in ω, so a small exact rule suffices
    let directions = sphere_rule(n, &Accuracy::new(1, 3))?;
    let mut total = 0.0;
    for (omega, w_omega) in directions.normals().unwrap().iter().zip(directions.weights()) {
        let frame = completed_basis(omega);
        let slices: Vec<f64> = axis
            .par_iter()
            .map(|&(t, wt)| {
                let base = center + omega.scale(t);
                let mut s = 0.0;
                let mut idx = vec![0usize; n - 1];
                loop {
                    let mut x = base;
                    let mut w = wt;
                    for (k, &i) in idx.iter().enumerate() {
                        let (q, wq) = axis[i];
                        x += frame[k + 1].scale(q);
                        w *= wq;
                    }
                    s += w * f.value(&x).dot(omega) * phi.value(&x).dot(omega);
                    let mut k = 0;
                    loop {
                        if k == idx.len() {
                            return s;
                        }
                        idx[k] += 1;
                        if idx[k] < axis.len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                }
            })
            .collect();
        total += w_omega * slices.iter().sum::<f64>();
    }
    Ok(c * total)
}

/// `2c ∫_z ∫_r ∫_{S(z,r)} ⟨f, ν⟩_g ⟨φ, ν⟩_g dV'_g dr / rⁿ dz` for fields on
/// `ℍⁿ` in the orthonormal frame; equals `∫ ⟨f, φ⟩_g dV_g`.
pub fn hemisphere_average_pairing(f: &VectorField, phi: &VectorField, accuracy: &Accuracy) -> Result<f64> {
    check_pair(f, phi, Basis::HyperbolicFrame)?;
    let n = f.dim();
    let c = averaging_constant(n)?.c;
    let Some(support) = joint_support(&[f.support(), phi.support()])? else {
        return Ok(0.0);
    };
    let triple = hemisphere_family_integral(&support, accuracy, |x, nu| f.value(x).dot(nu) * phi.value(x).dot(nu))?;
    Ok(2.0 * c * triple)
}
