use rayon::prelude::*;

use crate::decomposition::{
    half_space_probes, hyperbolic_decompose, normal_component_on_plane, radial_component, smooth_step, sphere_decompose,
};
use crate::error::{invalid, Error, Result};
use crate::fields::{random_probes, Basis, ScalarField, VectorField};
use crate::functionals::{
    boundary_flux, box_rule, gradient_lp_norm, lp_norm, pairing, scalar_gradient_lp_norm, scalar_lp_norm,
    surface_l1_norm, w1n_surface_norm, Geometry, Surface,
};
use crate::geometry::{hyperbolic_distance_coords, hyperbolic_distance_gradient, Hypersurface, SupportBox};
use crate::linalg::Vector;
use crate::quadrature::{composite, for_each_tensor, volume_rule, Accuracy, VolumeDomain};

/// A measured ratio and the bound it is checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub bound: f64,
}

impl BoundCheck {
    fn new(numerator: f64, denominator: f64, bound: f64) -> Result<Self> {
        if !(denominator > 0.0) || !denominator.is_finite() {
            return Err(Error::Degenerate(format!("denominator {denominator}")));
        }
        Ok(Self {
            numerator,
            denominator,
            ratio: numerator / denominator,
            bound,
        })
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.ratio <= self.bound + slack
    }
}

fn hyperbolic_support(support: Option<SupportBox>) -> Result<SupportBox> {
    let b = support.ok_or(Error::UnboundedSupport)?;
    if !(b.lo().last() > 0.0) {
        return Err(Error::SupportExceedsTruncation(
            "support must stay inside the half-space chart".into(),
        ));
    }
    Ok(b)
}

/// `‖Φ‖_{L^p(ℍⁿ)} / ‖e_n Φ‖_{L^p(ℍⁿ)}` against the Hardy constant
/// `p / (n - 1)`.
pub fn hardy_check(phi: &ScalarField, p: f64, accuracy: &Accuracy) -> Result<BoundCheck> {
    let n = phi.dim();
    if n < 2 {
        return Err(invalid("the Hardy constant p/(n-1) needs n >= 2"));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("exponent p must satisfy 1 <= p < inf"));
    }
    let support = hyperbolic_support(phi.support())?;
    let [a, b] = graded_integrate(&support, accuracy, |x| {
        let en = x.last() * phi.gradient(x)[n - 1];
        [phi.value(x).abs().powf(p), en.abs().powf(p)]
    });
    BoundCheck::new(a.powf(1.0 / p), b.powf(1.0 / p), p / (n as f64 - 1.0))
}

/// `∫ F dV_g` over a box with `max(accuracy.panels, 16)` panels per unit of
/// `ln x_n`, so that tall supports keep their resolution.
fn graded_integrate<const K: usize>(
    support: &SupportBox,
    accuracy: &Accuracy,
    f: impl Fn(&Vector) -> [f64; K] + Sync,
) -> [f64; K] {
    let n = support.dim();
    let (lo, hi) = (support.lo().last().ln(), support.hi().last().ln());
    let per_unit = accuracy.panels.max(16) as f64;
    let vertical_panels = ((hi - lo) * per_unit).ceil().max(1.0) as usize;
    let vertical = composite(lo, hi, vertical_panels, accuracy.order);
    let axes: Vec<Vec<(f64, f64)>> = (0..n - 1)
        .map(|i| composite(support.lo()[i], support.hi()[i], accuracy.panels, accuracy.order))
        .collect();
    let mut horizontal = Vec::new();
    for_each_tensor(&axes, |vals, w| horizontal.push((vals.to_vec(), w)));
    vertical
        .par_iter()
        .map(|&(s, ws)| {
            let h = s.exp();
            let scale = ws * h.powi(1 - n as i32);
            let mut acc = [0.0; K];
            let mut x = Vector::zeros(n);
            x[n - 1] = h;
            for (xs, w) in &horizontal {
                for (i, v) in xs.iter().enumerate() {
                    x[i] = *v;
                }
                let v = f(&x);
                for k in 0..K {
                    acc[k] += w * scale * v[k];
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold([0.0; K], |mut t, v| {
            for k in 0..K {
                t[k] += v[k];
            }
            t
        })
}

/// Member of the Hardy sharpness family on `ℍⁿ`:
/// `Φ(x) = b(x') · x_n^α · χ(ln x_n)` with a smooth `χ` equal to 1 on
/// `[-depth + 1, 0]` and vanishing outside `[-depth, 1]`, and a horizontal
/// bump `b(x') = ∏ (1 - x_i²)⁴` on `[-1, 1]ⁿ⁻¹`. The ratio of [`hardy_check`] depends only
/// on the `x_n` profile and tends to `p/(n-1)` as `α → (n-1)/p` and
/// `depth → ∞`.
pub fn hardy_sharpness_member(n: usize, alpha: f64, depth: f64) -> Result<ScalarField> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(depth > 2.0) {
        return Err(invalid("depth must exceed 2"));
    }
    let profile = move |h: f64| -> (f64, f64) {
        let t = h.ln();
        let (up, dup) = smooth_step(t + depth);
        let (down, ddown) = smooth_step(t);
        let chi = up * (1.0 - down);
        let dchi = dup * (1.0 - down) - up * ddown;
        let p = h.powf(alpha);
        // d/dh [h^α χ(ln h)] = h^{α-1} (α χ + χ')
        (p * chi, p / h * (alpha * chi + dchi))
    };
    let horizontal = move |x: &Vector| -> (f64, Vector) {
        let mut g = Vector::zeros(n);
        if (0..n - 1).any(|i| x[i].abs() >= 1.0) {
            return (0.0, g);
        }
        let factors: Vec<f64> = (0..n - 1).map(|i| (1.0 - x[i] * x[i]).powi(4)).collect();
        let b: f64 = factors.iter().product();
        for i in 0..n - 1 {
            let others: f64 = (0..n - 1).filter(|&j| j != i).map(|j| factors[j]).product();
            g[i] = -8.0 * x[i] * (1.0 - x[i] * x[i]).powi(3) * others;
        }
        (b, g)
    };
    let mut lo = Vector::filled(n, -1.0);
    let mut hi = Vector::filled(n, 1.0);
    lo[n - 1] = (-depth).exp();
    hi[n - 1] = std::f64::consts::E;
    Ok(ScalarField::new(
        n,
        move |x| horizontal(x).0 * profile(x.last()).0,
        move |x| {
            let (b, gb) = horizontal(x);
            let (v, dv) = profile(x.last());
            let mut g = gb.scale(v);
            g[n - 1] = b * dv;
            g
        },
    )
    .with_support(SupportBox::new(lo, hi)?)
    .with_label(format!("hardy(α={alpha}, depth={depth})")))
}

/// Sharpness probe: four members with `α` decreasing towards `(n-1)/p`
/// and growing depth.
pub fn hardy_sharpness_family(n: usize, p: f64) -> Result<Vec<ScalarField>> {
    let beta = (n as f64 - 1.0) / p;
    [(1.0, 6.0), (0.3, 12.0), (0.1, 24.0), (0.03, 60.0)]
        .iter()
        .map(|&(gap, depth)| hardy_sharpness_member(n, beta * (1.0 + gap), depth))
        .collect()
}

/// `‖φ‖_{L^p(ℍⁿ)} / ‖∇_g φ‖_{L^p(ℍⁿ)}` for a frame field, against the bound
/// `p / (n - 1)` obtained from Hardy's inequality applied to `|φ|_g`.
pub fn sobolev_vector_check(phi: &VectorField, p: f64, accuracy: &Accuracy) -> Result<BoundCheck> {
    let n = phi.dim();
    if phi.basis() != Basis::HyperbolicFrame {
        return Err(Error::WrongBasis {
            expected: Basis::HyperbolicFrame.name(),
        });
    }
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    hyperbolic_support(phi.support())?;
    let num = lp_norm(phi, p, accuracy)?.value;
    let den = gradient_lp_norm(phi, p, accuracy)?.value;
    BoundCheck::new(num, den, p / (n as f64 - 1.0))
}

/// `‖φ‖_∞ / ‖∇_g φ‖_{L^p(ℍᵐ)}` with the sup taken over a probe grid.
/// The returned bound is `∞`; callers compare ratios across inputs.
pub fn morrey_check(phi: &ScalarField, p: f64, accuracy: &Accuracy) -> Result<BoundCheck> {
    let m = phi.dim();
    if !(p > m as f64) {
        return Err(invalid(format!("Morrey exponent p = {p} must exceed m = {m}")));
    }
    let support = hyperbolic_support(phi.support())?;
    let probes = half_space_probes(&support, 0.02);
    let sup = probes.par_iter().map(|x| phi.value(x).abs()).reduce(|| 0.0, f64::max);
    let den = scalar_gradient_lp_norm(phi, Geometry::Hyperbolic, p, accuracy)?.value;
    BoundCheck::new(sup, den, f64::INFINITY)
}

/// Radial profile `ζ` of a localizing function `ζ(d(x, α))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `exp(1 - 1 / (1 - (s/R)²))` on `[0, R)`, zero beyond.
    Bump { radius: f64 },
    /// `exp(-s²/w²)`; not compactly supported.
    Gaussian { width: f64 },
}

impl Profile {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Profile::Bump { radius } => Some(radius),
            Profile::Gaussian { .. } => None,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Profile::Bump { radius } => {
                let u = s / radius;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
            Profile::Gaussian { width } => (-(s / width).powi(2)).exp(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Profile::Bump { radius } => {
                let u = s / radius;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - u * u;
                    self.value(s) * (-2.0 * u / (radius * q * q))
                }
            }
            Profile::Gaussian { width } => -2.0 * s / (width * width) * self.value(s),
        }
    }
}

/// Box containing the hyperbolic ball `B(x, R)`: the Euclidean ball of
/// centre `(x', x_n cosh R)` and radius `x_n sinh R`.
pub fn hyperbolic_ball_box(x: &Vector, radius: f64) -> SupportBox {
    let n = x.dim();
    let h = x.last();
    let r = h * radius.sinh();
    let mut lo = *x;
    let mut hi = *x;
    for i in 0..n - 1 {
        lo[i] -= r;
        hi[i] += r;
    }
    lo[n - 1] = h * (-radius).exp();
    hi[n - 1] = h * radius.exp();
    SupportBox::new(lo, hi).expect("finite box")
}

/// `∫_{ℍⁿ} ζ(d(x, α))² dV_g(α)`.
pub fn localizer_mass(profile: &Profile, x: &Vector, accuracy: &Accuracy) -> Result<f64> {
    let r = profile.radius().ok_or(Error::UnboundedSupport)?;
    let rule = box_rule(Geometry::Hyperbolic, &hyperbolic_ball_box(x, r), accuracy)?;
    Ok(rule.integrate(|a| profile.value(hyperbolic_distance_coords(x, a)).powi(2)))
}

/// `x ↦ κ ζ(d(x, α))` as a scalar field.
pub fn localizer(profile: &Profile, alpha: &Vector, kappa: f64) -> Result<ScalarField> {
    let r = profile.radius().ok_or(Error::UnboundedSupport)?;
    let (p, a) = (*profile, *alpha);
    Ok(ScalarField::new(
        alpha.dim(),
        move |x| kappa * p.value(hyperbolic_distance_coords(x, &a)),
        move |x| {
            let d = hyperbolic_distance_coords(x, &a);
            hyperbolic_distance_gradient(x, &a).scale(kappa * p.derivative(d))
        },
    )
    .with_support(hyperbolic_ball_box(alpha, r))
    .with_label("localizer"))
}

/// Localized estimate around `α = (0, …, 0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizedReport {
    /// `∫ ζ(d(x, α))² dV_g(α)` at `x = α₀` before rescaling.
    pub raw_mass: f64,
    /// Relative difference of the masses at two different points.
    pub mass_spread: f64,
    /// Mass at the second point after rescaling (should be 1).
    pub rescaled_mass: f64,
    /// Observed range of `x_n` on `supp ζ_α`.
    pub height_range: (f64, f64),
    /// `[e^{-R}, e^{R}]`.
    pub height_bound: (f64, f64),
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// Normalizes `ζ` so that `∫ ζ_α² dV_g(α) = 1`, then evaluates
/// `|∫⟨ζ_α f, ζ_α φ⟩_g| / ((‖ζ_α f‖₁ + ‖⟨∇_g ζ_α, f⟩_g‖₁)(‖∇_g φ‖ₙ + ‖φ‖ₙ))`
/// at `α = (0, …, 0, 1)`.
pub fn appendix_localized_estimate(
    f: &VectorField,
    phi: &VectorField,
    profile: &Profile,
    accuracy: &Accuracy,
) -> Result<LocalizedReport> {
    let radius = profile.radius().ok_or(Error::UnboundedSupport)?;
    for v in [f, phi] {
        if v.basis() != Basis::HyperbolicFrame {
            return Err(Error::WrongBasis {
                expected: Basis::HyperbolicFrame.name(),
            });
        }
    }
    let n = f.dim();
    let alpha = Vector::unit(n, n - 1);
    let raw_mass = localizer_mass(profile, &alpha, accuracy)?;
    let mut other = Vector::filled(n, 0.7);
    other[n - 1] = 2.5;
    let other_mass = localizer_mass(profile, &other, accuracy)?;
    let kappa = raw_mass.powf(-0.5);

    let zeta = localizer(profile, &alpha, kappa)?;
    let support = zeta.support().unwrap();
    let (lo_h, hi_h) = random_probes(&support, 4096, 17)
        .iter()
        .filter(|x| hyperbolic_distance_coords(x, &alpha) < radius)
        .fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x.last()), b.max(x.last())));

    let zf = f.mul_scalar(&zeta)?;
    let zphi = phi.mul_scalar(&zeta)?;
    let numerator = pairing(&zf, &zphi, accuracy)?.abs();
    let zf_l1 = crate::functionals::l1_norm(&zf, accuracy)?.value;
    let rule = box_rule(Geometry::Hyperbolic, &support, accuracy)?;
    let flux_l1 = rule.integrate(|x| (zeta.gradient(x).scale(x.last()).dot(&f.value(x))).abs());
    let nn = n as f64;
    let phi_norm = gradient_lp_norm(phi, nn, accuracy)?.value + lp_norm(phi, nn, accuracy)?.value;
    let denominator = (zf_l1 + flux_l1) * phi_norm;
    if !(denominator > 0.0) {
        return Err(Error::Degenerate(format!("localized denominator {denominator}")));
    }
    Ok(LocalizedReport {
        raw_mass,
        mass_spread: (raw_mass - other_mass).abs() / raw_mass,
        rescaled_mass: other_mass * kappa * kappa,
        height_range: (lo_h, hi_h),
        height_bound: ((-radius).exp(), radius.exp()),
        numerator,
        denominator,
        ratio: numerator / denominator,
    })
}

/// Flux bound on a sphere or a vertical hyperplane, with the decomposition
/// terms of its proof.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxReport {
    /// `∫_Σ ⟨f, ν⟩⟨φ, ν⟩`.
    pub flux: f64,
    /// `‖f‖_{L¹}` of the exterior region (`ℝⁿ∖𝔹ⁿ` or `{x₁ > 0}`).
    pub f_l1_exterior: f64,
    /// `‖f‖_{L¹(Σ)}`.
    pub f_l1_surface: f64,
    /// `‖φ‖_{W^{1,n}(Σ)}`.
    pub phi_w1n: f64,
    pub denominator: f64,
    pub ratio: f64,
    /// `λ = ‖f‖_{L¹(exterior)} / ‖f‖_{L¹(Σ)}`.
    pub lambda: f64,
    /// `‖f‖_{L¹(Σ)} ‖ψ₁‖_∞`.
    pub i_bound: f64,
    /// `‖f‖_{L¹(exterior)} ‖∇ψ̃₂‖_∞`.
    pub ii_bound: f64,
}

impl FluxReport {
    /// `|flux| ≤ I + II`.
    pub fn dominated(&self) -> bool {
        self.flux.abs() <= self.i_bound + self.ii_bound
    }
}

/// Flux of `⟨f, ν⟩⟨φ, ν⟩` through the unit sphere (Euclidean fields) or
/// through `{x₁ = 0}` with `ν = e₁` (frame fields), against
/// `‖f‖_{L¹(ext)}^{1/n} ‖f‖_{L¹(Σ)}^{1-1/n} ‖φ‖_{W^{1,n}(Σ)}`.
///
/// The decomposition of `ψ = ⟨φ, ν⟩` at `λ = ‖f‖_{L¹(ext)} / ‖f‖_{L¹(Σ)}`
/// gives the bound `I + II`, which must dominate the flux.
pub fn proposition_flux_bound(
    f: &VectorField,
    phi: &VectorField,
    surface: &Surface,
    accuracy: &Accuracy,
) -> Result<FluxReport> {
    let n = f.dim();
    if !f.is_divergence_free() {
        return Err(Error::NotDivergenceFree);
    }
    let support = f.support().ok_or(Error::UnboundedSupport)?;
    let (psi, exterior_rule) = match surface {
        Surface::Sphere { center, radius } => {
            if center.max_abs() != 0.0 || *radius != 1.0 {
                return Err(invalid("flux bound is stated on the unit sphere"));
            }
            let r_max = support.farthest_distance(&Vector::zeros(n)).max(1.0);
            (
                radial_component(phi),
                volume_rule(VolumeDomain::ExteriorOfBall { r_max }, Some(&support), n, accuracy)?,
            )
        }
        Surface::Hyperbolic(Hypersurface::VerticalPlane { axis: 0, offset, .. }) if *offset == 0.0 => {
            hyperbolic_support(Some(support))?;
            (
                normal_component_on_plane(phi),
                volume_rule(VolumeDomain::HalfSpaceX1Positive, Some(&support), n, accuracy)?,
            )
        }
        Surface::Hyperbolic(_) => return Err(invalid("flux bound is stated on the plane x1 = 0")),
    };
    let flux = boundary_flux(f, phi, surface, accuracy)?;
    let f_l1_exterior = match surface {
        Surface::Hyperbolic(_) if support.hi()[0] <= 0.0 => 0.0,
        _ => exterior_rule.integrate(|x| f.value(x).norm()),
    };
    let f_l1_surface = surface_l1_norm(f, surface, accuracy)?.value;
    let phi_w1n = w1n_surface_norm(phi, surface, accuracy)?.value;
    let nn = n as f64;
    let denominator = f_l1_exterior.powf(1.0 / nn) * f_l1_surface.powf(1.0 - 1.0 / nn) * phi_w1n;
    if !(denominator > 0.0) || !denominator.is_finite() {
        return Err(Error::Degenerate(format!(
            "flux denominator {denominator}: ‖f‖_L1(exterior) = {f_l1_exterior}, \
             ‖f‖_L1(surface) = {f_l1_surface}, ‖φ‖_W1n = {phi_w1n}"
        )));
    }
    let lambda = f_l1_exterior / f_l1_surface;
    let decomposition = match surface {
        Surface::Sphere { .. } => sphere_decompose(&psi, lambda)?,
        Surface::Hyperbolic(_) => hyperbolic_decompose(&psi, lambda, nn)?,
    };
    let c = decomposition.certificates;
    Ok(FluxReport {
        flux,
        f_l1_exterior,
        f_l1_surface,
        phi_w1n,
        denominator,
        ratio: flux.abs() / denominator,
        lambda,
        i_bound: f_l1_surface * c.phi1_sup,
        ii_bound: f_l1_exterior * c.extension_gradient_sup,
    })
}

/// `‖ψ‖_{L^p}` of a scalar on `ℍᵐ`, re-exported for reports.
pub fn hyperbolic_scalar_norm(psi: &ScalarField, p: f64, accuracy: &Accuracy) -> Result<f64> {
    Ok(scalar_lp_norm(psi, Geometry::Hyperbolic, p, accuracy)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog::*;

    #[test]
    fn profile_derivative() {
        let p = Profile::Bump { radius: 1.5 };
        for s in [0.1, 0.7, 1.3] {
            let h = 1e-6;
            let fd = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
            assert!((fd - p.derivative(s)).abs() < 1e-7);
        }
        assert_eq!(p.value(1.5), 0.0);
    }

    #[test]
    fn hardy_rejects_bad_input() {
        let phi = poly_bump(&Vector::from([1.0]), 0.5, 4);
        assert!(hardy_check(&phi, 2.0, &Accuracy::new(8, 8)).is_err());
        let zero = zero_scalar(2).with_support(SupportBox::around(&Vector::from([0.0, 1.0]), 0.5));
        assert!(hardy_check(&zero, 2.0, &Accuracy::new(8, 8)).is_err());
    }

    #[test]
    fn ball_box_heights() {
        let b = hyperbolic_ball_box(&Vector::from([0.0, 1.0]), 1.0);
        assert!((b.lo()[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((b.hi()[1] - 1.0f64.exp()).abs() < 1e-15);
    }
}
