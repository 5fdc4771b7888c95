//! Built-in test functions and fields.
//!
//! Gaussians declare the box `center ± 6·width` as their support; outside it
//! the profile is below `e^{-36}` and is treated as zero by every integrator.

use crate::error::{Error, Result};
use crate::fields::{make_divfree_euclidean, Basis, Potential, ScalarField, VectorField};
use crate::geometry::SupportBox;
use crate::linalg::{Matrix, Vector};

/// Half-width of a Gaussian's declared support, in units of its width.
pub const GAUSSIAN_CUTOFF: f64 = 6.0;

pub fn zero_scalar(dim: usize) -> ScalarField {
    ScalarField::new(dim, |_| 0.0, move |_| Vector::zeros(dim))
        .with_hessian(move |_| Matrix::zeros(dim))
        .with_label("0")
}

pub fn constant_scalar(dim: usize, c: f64) -> ScalarField {
    ScalarField::new(dim, move |_| c, move |_| Vector::zeros(dim))
        .with_hessian(move |_| Matrix::zeros(dim))
        .with_label(format!("{c}"))
}

/// `x ↦ ⟨a, x⟩`.
pub fn linear_scalar(a: &Vector) -> ScalarField {
    let (a, n) = (*a, a.dim());
    ScalarField::new(n, move |x| a.dot(x), move |_| a)
        .with_hessian(move |_| Matrix::zeros(n))
        .with_label("linear")
}

/// `amplitude · exp(-|x - c|² / width²)`.
pub fn gaussian(center: &Vector, width: f64, amplitude: f64) -> ScalarField {
    anisotropic_gaussian(center, &Vector::filled(center.dim(), width), amplitude)
}

/// `amplitude · exp(-Σ ((x_i - c_i) / w_i)²)`.
pub fn anisotropic_gaussian(center: &Vector, widths: &Vector, amplitude: f64) -> ScalarField {
    let (c, w, n) = (*center, *widths, center.dim());
    let q = move |x: &Vector| {
        let mut q = Vector::zeros(n);
        for i in 0..n {
            q[i] = (x[i] - c[i]) / w[i];
        }
        q
    };
    let value = move |x: &Vector| amplitude * (-q(x).norm_squared()).exp();
    ScalarField::new(n, value, move |x| {
        let qx = q(x);
        let v = amplitude * (-qx.norm_squared()).exp();
        let mut g = Vector::zeros(n);
        for i in 0..n {
            g[i] = -2.0 * qx[i] / w[i] * v;
        }
        g
    })
    .with_hessian(move |x| {
        let qx = q(x);
        let v = amplitude * (-qx.norm_squared()).exp();
        Matrix::from_fn(n, |i, j| {
            let mut h = 4.0 * qx[i] * qx[j] / (w[i] * w[j]);
            if i == j {
                h -= 2.0 / (w[i] * w[i]);
            }
            h * v
        })
    })
    .with_support(SupportBox::around_axes(&c, &w.scale(GAUSSIAN_CUTOFF)))
    .with_label(format!("gauss(c={:?},w={:?})", c.as_slice(), w.as_slice()))
}

/// `(1 - |x - c|² / R²)^k` inside the ball, zero outside; `C^{k-1}`.
pub fn poly_bump(center: &Vector, radius: f64, power: i32) -> ScalarField {
    let (c, n) = (*center, center.dim());
    let r2 = radius * radius;
    let k = power as f64;
    ScalarField::new(
        n,
        move |x| {
            let s = 1.0 - (*x - c).norm_squared() / r2;
            if s > 0.0 {
                s.powi(power)
            } else {
                0.0
            }
        },
        move |x| {
            let d = *x - c;
            let s = 1.0 - d.norm_squared() / r2;
            if s > 0.0 {
                d.scale(-2.0 * k * s.powi(power - 1) / r2)
            } else {
                Vector::zeros(n)
            }
        },
    )
    .with_hessian(move |x| {
        let d = *x - c;
        let s = 1.0 - d.norm_squared() / r2;
        if s <= 0.0 {
            return Matrix::zeros(n);
        }
        let a = 4.0 * k * (k - 1.0) * s.powi(power - 2) / (r2 * r2);
        let b = -2.0 * k * s.powi(power - 1) / r2;
        Matrix::outer(&d, &d).scale(a).add(&Matrix::identity(n).scale(b))
    })
    .with_support(SupportBox::around(&c, radius))
    .with_label(format!("bump(c={:?},r={radius},k={power})", c.as_slice()))
}

/// `(-x₂, x₁)` on `ℝ²`, divergence-free, unbounded support.
pub fn rotation() -> VectorField {
    VectorField::new(
        2,
        Basis::Cartesian,
        |x| Vector::from([-x[1], x[0]]),
        |_| {
            Matrix::from_fn(2, |i, j| match (i, j) {
                (0, 1) => -1.0,
                (1, 0) => 1.0,
                _ => 0.0,
            })
        },
    )
    .certified()
    .with_label("rotation")
}

/// `x ↦ x`.
pub fn identity_field(dim: usize) -> VectorField {
    VectorField::new(dim, Basis::Cartesian, |x| *x, move |_| Matrix::identity(dim)).with_label("identity")
}

/// Constant Cartesian field; divergence-free.
pub fn constant_field(v: &Vector) -> VectorField {
    let (v, n) = (*v, v.dim());
    VectorField::new(n, Basis::Cartesian, move |_| v, move |_| Matrix::zeros(n))
        .certified()
        .with_label("constant")
}

/// `∇ψ`, with the Hessian as Jacobian.
pub fn gradient_field(psi: &ScalarField) -> VectorField {
    let (a, b) = (psi.clone(), psi.clone());
    let out = VectorField::new(
        psi.dim(),
        Basis::Cartesian,
        move |x| a.gradient(x),
        move |x| b.hessian(x),
    )
    .with_label(format!("grad({})", psi.label()));
    match psi.support() {
        Some(s) => out.with_support(s),
        None => out,
    }
}

/// Rotating Gaussian vortex on `ℝ²`: the stream field of a Gaussian.
pub fn swirl(center: &Vector, width: f64, amplitude: f64) -> VectorField {
    make_divfree_euclidean(Potential::Stream(gaussian(center, width, amplitude))).expect("planar stream function")
}

/// Stream field of an anisotropic Gaussian: a jet along the long axis.
pub fn tube(center: &Vector, widths: &Vector, amplitude: f64) -> VectorField {
    make_divfree_euclidean(Potential::Stream(anisotropic_gaussian(center, widths, amplitude)))
        .expect("planar stream function")
}

/// Compactly supported divergence-free field: the stream field (`n = 2`) or
/// the curl of `(0, 0, bump)` (`n = 3`) of a polynomial bump.
pub fn bump_curl(center: &Vector, radius: f64, power: i32) -> Result<VectorField> {
    let psi = poly_bump(center, radius, power);
    match center.dim() {
        2 => make_divfree_euclidean(Potential::Stream(psi)),
        3 => {
            let z = zero_scalar(3);
            make_divfree_euclidean(Potential::Vector([z.clone(), z, psi]))
                .map(|f| f.with_support(SupportBox::around(center, radius)))
        }
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// Curl of three Gaussians with staggered centres; genuinely 3-D.
pub fn curl3(center: &Vector, width: f64, amplitude: f64) -> Result<VectorField> {
    if center.dim() != 3 {
        return Err(Error::UnsupportedDimension(center.dim()));
    }
    let offset = 0.3 * width;
    let comps = [
        gaussian(&(*center + Vector::from([0.0, offset, 0.0])), width, amplitude),
        gaussian(&(*center + Vector::from([0.0, 0.0, offset])), width, -0.7 * amplitude),
        gaussian(&(*center + Vector::from([offset, 0.0, 0.0])), width, 0.5 * amplitude),
    ];
    make_divfree_euclidean(Potential::Vector(comps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_probes;

    fn fd_gradient(f: &ScalarField, x: &Vector) -> Vector {
        let h = 1e-6;
        let mut g = Vector::zeros(x.dim());
        for i in 0..x.dim() {
            let mut p = *x;
            let mut m = *x;
            p[i] += h;
            m[i] -= h;
            g[i] = (f.value(&p) - f.value(&m)) / (2.0 * h);
        }
        g
    }

    fn fd_jacobian(f: &VectorField, x: &Vector) -> Matrix {
        let h = 1e-6;
        let n = x.dim();
        let mut m = Matrix::zeros(n);
        for j in 0..n {
            let mut p = *x;
            let mut q = *x;
            p[j] += h;
            q[j] -= h;
            let d = (f.value(&p) - f.value(&q)).scale(0.5 / h);
            for i in 0..n {
                m[(i, j)] = d[i];
            }
        }
        m
    }

    #[test]
    fn scalar_gradients_match_finite_differences() {
        let scalars = [
            gaussian(&Vector::from([0.1, 0.2]), 0.8, 1.3),
            anisotropic_gaussian(&Vector::from([0.0, 1.0, 2.0]), &Vector::from([0.5, 1.0, 2.0]), -0.4),
            poly_bump(&Vector::from([0.0, 0.0]), 1.5, 4),
            linear_scalar(&Vector::from([1.0, -2.0, 0.5])),
        ];
        for (k, s) in scalars.iter().enumerate() {
            let b = SupportBox::around(&Vector::zeros(s.dim()), 1.2);
            for x in random_probes(&b, 50, k as u64) {
                let err = (s.gradient(&x) - fd_gradient(s, &x)).max_abs();
                assert!(err < 1e-6, "{}: {err}", s.label());
                let h = s.hessian(&x);
                let gf = gradient_field(s);
                let fd = fd_jacobian(&gf, &x);
                for i in 0..s.dim() {
                    for j in 0..s.dim() {
                        assert!((h[(i, j)] - fd[(i, j)]).abs() < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn catalog_fields_are_divergence_free() {
        let fields = [
            swirl(&Vector::from([0.2, -0.1]), 0.6, 2.0),
            tube(&Vector::zeros(2), &Vector::from([2.0, 0.3]), 1.0),
            bump_curl(&Vector::zeros(2), 1.0, 5).unwrap(),
            bump_curl(&Vector::zeros(3), 1.0, 5).unwrap(),
            curl3(&Vector::from([0.0, 0.0, 1.0]), 0.7, 1.0).unwrap(),
        ];
        for (k, f) in fields.iter().enumerate() {
            assert!(f.is_divergence_free());
            let b = f
                .support()
                .unwrap()
                .intersect(&SupportBox::around(&Vector::zeros(f.dim()), 3.0))
                .unwrap();
            for x in random_probes(&b, 1000, 7 + k as u64) {
                assert!(f.jacobian(&x).trace().abs() < 1e-8, "{}", f.label());
            }
            for x in random_probes(&b, 30, 99) {
                let err = (f.jacobian(&x).add(&fd_jacobian(f, &x).scale(-1.0))).max_abs();
                assert!(err < 1e-6 * (1.0 + f.jacobian(&x).max_abs()), "{}: {err}", f.label());
            }
        }
    }
}
