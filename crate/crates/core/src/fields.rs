//! Scalar functions and vector fields with analytic first derivatives.
//!
//! Fields are cheap to clone (closures behind `Arc`) and immutable. Vector
//! fields carry a basis tag: Cartesian components in `ℝⁿ`, or components in
//! the frame `e_i = x_n ∂_i` on `ℍⁿ`. Conversions between the two are always
//! explicit.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{connection_coefficient, Point, SupportBox};
use crate::linalg::{Matrix, Vector};

pub mod catalog;

type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Step used for the finite-difference Hessian fallback.
const HESSIAN_STEP: f64 = 1e-5;

/// A smooth scalar function with analytic gradient and optional Hessian.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: ScalarFn,
    gradient: VectorFn,
    hessian: Option<MatrixFn>,
    support: Option<SupportBox>,
    label: String,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("support", &self.support)
            .finish()
    }
}

impl ScalarField {
    pub fn new(
        dim: usize,
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: None,
            support: None,
            label: String::from("scalar"),
        }
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_support(mut self, support: SupportBox) -> Self {
        self.support = Some(support);
        self
    }

    pub fn without_support(mut self) -> Self {
        self.support = None;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Option<SupportBox> {
        self.support
    }

    #[inline]
    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    /// Analytic Hessian when available, otherwise a symmetrised central
    /// difference of the analytic gradient.
    pub fn hessian(&self, x: &Vector) -> Matrix {
        if let Some(h) = &self.hessian {
            return h(x);
        }
        let n = self.dim;
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            let step = HESSIAN_STEP * x[i].abs().max(1.0);
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += step;
            xm[i] -= step;
            let d = (self.gradient(&xp) - self.gradient(&xm)).scale(0.5 / step);
            for j in 0..n {
                m[(i, j)] = d[j];
            }
        }
        m.add(&m.transpose()).scale(0.5)
    }

    /// `c · ψ`.
    pub fn scale(&self, c: f64) -> ScalarField {
        let (a, b) = (self.clone(), self.clone());
        let mut out = ScalarField::new(self.dim, move |x| c * a.value(x), move |x| b.gradient(x).scale(c));
        if self.hessian.is_some() {
            let h = self.clone();
            out = out.with_hessian(move |x| h.hessian(x).scale(c));
        }
        out.support = self.support;
        out.with_label(format!("{c}*{}", self.label))
    }

    /// `ψ + χ`; the support is the union of both supports.
    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        check_same_dim(self.dim, other.dim)?;
        let (a, b, c, d) = (self.clone(), other.clone(), self.clone(), other.clone());
        let mut out = ScalarField::new(
            self.dim,
            move |x| a.value(x) + b.value(x),
            move |x| c.gradient(x) + d.gradient(x),
        );
        if self.hessian.is_some() && other.hessian.is_some() {
            let (e, f) = (self.clone(), other.clone());
            out = out.with_hessian(move |x| e.hessian(x).add(&f.hessian(x)));
        }
        out.support = match (self.support, other.support) {
            (Some(p), Some(q)) => Some(p.union(&q)),
            _ => None,
        };
        Ok(out.with_label(format!("{}+{}", self.label, other.label)))
    }

    /// `ψ · χ`; the support is the intersection of the supports.
    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        check_same_dim(self.dim, other.dim)?;
        let (a, b, c, d) = (self.clone(), other.clone(), self.clone(), other.clone());
        let mut out = ScalarField::new(
            self.dim,
            move |x| a.value(x) * b.value(x),
            move |x| d.gradient(x).scale(c.value(x)) + c.gradient(x).scale(d.value(x)),
        );
        if self.hessian.is_some() && other.hessian.is_some() {
            let (e, f) = (self.clone(), other.clone());
            out = out.with_hessian(move |x| {
                let (ge, gf) = (e.gradient(x), f.gradient(x));
                e.hessian(x)
                    .scale(f.value(x))
                    .add(&f.hessian(x).scale(e.value(x)))
                    .add(&Matrix::outer(&ge, &gf))
                    .add(&Matrix::outer(&gf, &ge))
            });
        }
        out.support = match (self.support, other.support) {
            (Some(p), Some(q)) => Some(p.intersect(&q).unwrap_or_else(|| degenerate_box(&p))),
            (Some(p), None) | (None, Some(p)) => Some(p),
            (None, None) => None,
        };
        Ok(out.with_label(format!("{}*{}", self.label, other.label)))
    }

    /// `x ↦ ψ(s·x + a)`.
    pub fn pullback_affine(&self, s: f64, shift: &Vector) -> Result<ScalarField> {
        check_same_dim(self.dim, shift.dim())?;
        if !(s > 0.0) {
            return Err(invalid("affine scale must be positive"));
        }
        let a = *shift;
        let (f, g) = (self.clone(), self.clone());
        let mut out = ScalarField::new(
            self.dim,
            move |x| f.value(&(x.scale(s) + a)),
            move |x| g.gradient(&(x.scale(s) + a)).scale(s),
        );
        if self.hessian.is_some() {
            let h = self.clone();
            out = out.with_hessian(move |x| h.hessian(&(x.scale(s) + a)).scale(s * s));
        }
        out.support = self.support.map(|b| b.affine(1.0 / s, &(-a).scale(1.0 / s)));
        Ok(out.with_label(format!("{}∘affine", self.label)))
    }
}

/// A zero-width box at the corner of `b`; support of a product of fields with
/// disjoint supports.
fn degenerate_box(b: &SupportBox) -> SupportBox {
    SupportBox::new(*b.lo(), *b.lo()).expect("corner box")
}

fn check_same_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Cartesian,
    HyperbolicFrame,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Cartesian => "Cartesian",
            Basis::HyperbolicFrame => "hyperbolic frame",
        }
    }
}

/// A vector field with analytic Jacobian.
///
/// `jacobian(x)[(i, j)] = ∂_j Fⁱ(x)`: rows are components, columns are
/// coordinate derivatives. For frame fields the components are frame
/// components but the derivatives are still coordinate derivatives.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    basis: Basis,
    value: VectorFn,
    jacobian: MatrixFn,
    divergence_free: bool,
    support: Option<SupportBox>,
    label: String,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("basis", &self.basis)
            .field("divergence_free", &self.divergence_free)
            .field("support", &self.support)
            .finish()
    }
}

impl VectorField {
    /// A field that is not certified divergence-free.
    pub fn new(
        dim: usize,
        basis: Basis,
        value: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        jacobian: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            basis,
            value: Arc::new(value),
            jacobian: Arc::new(jacobian),
            divergence_free: false,
            support: None,
            label: String::from("field"),
        }
    }

    /// Field with the given scalar components; the Jacobian rows are the
    /// component gradients.
    pub fn from_components(components: Vec<ScalarField>, basis: Basis) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        for c in &components {
            check_same_dim(dim, c.dim())?;
        }
        let support = components
            .iter()
            .map(|c| c.support())
            .collect::<Option<Vec<_>>>()
            .map(|boxes| boxes[1..].iter().fold(boxes[0], |acc, b| acc.union(b)));
        let label = components
            .iter()
            .map(|c| c.label().to_string())
            .collect::<Vec<_>>()
            .join(",");
        let comps = Arc::new(components);
        let c2 = comps.clone();
        let mut out = VectorField::new(
            dim,
            basis,
            move |x| {
                let mut v = Vector::zeros(dim);
                for (i, c) in comps.iter().enumerate() {
                    v[i] = c.value(x);
                }
                v
            },
            move |x| {
                let mut m = Matrix::zeros(dim);
                for (i, c) in c2.iter().enumerate() {
                    let g = c.gradient(x);
                    for j in 0..dim {
                        m[(i, j)] = g[j];
                    }
                }
                m
            },
        );
        out.support = support;
        Ok(out.with_label(format!("({label})")))
    }

    pub fn with_support(mut self, support: SupportBox) -> Self {
        self.support = Some(support);
        self
    }

    pub fn without_support(mut self) -> Self {
        self.support = None;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Marks the field divergence-free by construction. Only generators
    /// whose divergence vanishes identically may call this.
    pub(crate) fn certified(mut self) -> Self {
        self.divergence_free = true;
        self
    }

    /// Certifies the field as divergence-free after checking the divergence
    /// at `probes` random points of its support against `tolerance`.
    pub fn certify_by_probing(self, probes: usize, tolerance: f64, seed: u64) -> Result<Self> {
        let support = self.support.ok_or(Error::UnboundedSupport)?;
        for x in random_probes(&support, probes, seed) {
            let d = match self.basis {
                Basis::Cartesian => self.jacobian(&x).trace(),
                Basis::HyperbolicFrame => {
                    if x.last() <= 0.0 {
                        continue;
                    }
                    frame_divergence(&self, &x)
                }
            };
            if !(d.abs() <= tolerance) {
                return Err(Error::NotDivergenceFree);
            }
        }
        Ok(self.certified())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn support(&self) -> Option<SupportBox> {
        self.support
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, x: &Vector) -> Vector {
        (self.value)(x)
    }

    #[inline]
    pub fn jacobian(&self, x: &Vector) -> Matrix {
        (self.jacobian)(x)
    }

    /// `c · F`; keeps the divergence-free certificate.
    pub fn scale(&self, c: f64) -> VectorField {
        let (a, b) = (self.clone(), self.clone());
        let mut out = VectorField::new(
            self.dim,
            self.basis,
            move |x| a.value(x).scale(c),
            move |x| b.jacobian(x).scale(c),
        );
        out.divergence_free = self.divergence_free;
        out.support = self.support;
        out.with_label(format!("{c}*{}", self.label))
    }

    /// `F + G`; divergence-free when both are.
    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        check_same_dim(self.dim, other.dim)?;
        if self.basis != other.basis {
            return Err(Error::WrongBasis {
                expected: self.basis.name(),
            });
        }
        let (a, b, c, d) = (self.clone(), other.clone(), self.clone(), other.clone());
        let mut out = VectorField::new(
            self.dim,
            self.basis,
            move |x| a.value(x) + b.value(x),
            move |x| c.jacobian(x).add(&d.jacobian(x)),
        );
        out.divergence_free = self.divergence_free && other.divergence_free;
        out.support = match (self.support, other.support) {
            (Some(p), Some(q)) => Some(p.union(&q)),
            _ => None,
        };
        Ok(out.with_label(format!("{}+{}", self.label, other.label)))
    }

    /// `ψ F`; never certified divergence-free.
    pub fn mul_scalar(&self, psi: &ScalarField) -> Result<VectorField> {
        check_same_dim(self.dim, psi.dim())?;
        let (a, b, c, d) = (self.clone(), psi.clone(), self.clone(), psi.clone());
        let mut out = VectorField::new(
            self.dim,
            self.basis,
            move |x| a.value(x).scale(b.value(x)),
            move |x| {
                let v = c.value(x);
                c.jacobian(x).scale(d.value(x)).add(&Matrix::outer(&v, &d.gradient(x)))
            },
        );
        out.support = match (self.support, psi.support()) {
            (Some(p), Some(q)) => Some(p.intersect(&q).unwrap_or_else(|| degenerate_box(&p))),
            (Some(p), None) | (None, Some(p)) => Some(p),
            (None, None) => None,
        };
        Ok(out.with_label(format!("{}*{}", psi.label(), self.label)))
    }

    /// `x ↦ amplitude · F(s·x + a)`.
    ///
    /// Cartesian fields stay divergence-free. Frame fields stay
    /// divergence-free when the map is a hyperbolic isometry (no vertical
    /// shift): horizontal translations and dilations preserve the frame.
    pub fn pullback_affine(&self, s: f64, shift: &Vector, amplitude: f64) -> Result<VectorField> {
        check_same_dim(self.dim, shift.dim())?;
        if !(s > 0.0) {
            return Err(invalid("affine scale must be positive"));
        }
        let a = *shift;
        let (f, g) = (self.clone(), self.clone());
        let mut out = VectorField::new(
            self.dim,
            self.basis,
            move |x| f.value(&(x.scale(s) + a)).scale(amplitude),
            move |x| g.jacobian(&(x.scale(s) + a)).scale(amplitude * s),
        );
        out.divergence_free = self.divergence_free && (self.basis == Basis::Cartesian || a.last() == 0.0);
        out.support = self.support.map(|b| b.affine(1.0 / s, &(-a).scale(1.0 / s)));
        Ok(out.with_label(format!("{}∘affine", self.label)))
    }

    /// `f_ε(x) = ε^{-n} f(x/ε)`: the dilation that preserves the `L¹` norm.
    pub fn l1_dilate(&self, eps: f64) -> Result<VectorField> {
        let n = self.dim as i32;
        self.pullback_affine(1.0 / eps, &Vector::zeros(self.dim), eps.powi(-n))
    }

    /// `φ_ε(x) = φ(x/ε)`.
    pub fn dilate(&self, eps: f64) -> Result<VectorField> {
        self.pullback_affine(1.0 / eps, &Vector::zeros(self.dim), 1.0)
    }

    fn require(&self, basis: Basis) -> Result<()> {
        if self.basis != basis {
            return Err(Error::WrongBasis { expected: basis.name() });
        }
        Ok(())
    }
}

/// Uniform random points in a box, reproducible from `seed`.
pub fn random_probes(b: &SupportBox, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x = *b.lo();
            for i in 0..b.dim() {
                let (lo, hi) = (b.lo()[i], b.hi()[i]);
                if hi > lo {
                    x[i] = rng.gen_range(lo..hi);
                }
            }
            x
        })
        .collect()
}

fn check_point(x: &Point, dim: usize, hyperbolic: bool) -> Result<()> {
    check_same_dim(dim, x.dim())?;
    if hyperbolic != x.space().is_hyperbolic() {
        return Err(Error::MixedSpaces);
    }
    Ok(())
}

/// `Σ ∂_i Fⁱ` for a Cartesian field.
pub fn divergence_euclidean(f: &VectorField, x: &Point) -> Result<f64> {
    f.require(Basis::Cartesian)?;
    check_point(x, f.dim(), false)?;
    Ok(f.jacobian(x.coords()).trace())
}

/// `x_n Σ ∂_i fⁱ + (1 - n) fⁿ` at chart coordinates (no checks).
#[inline]
pub(crate) fn frame_divergence(f: &VectorField, x: &Vector) -> f64 {
    let n = f.dim();
    x.last() * f.jacobian(x).trace() + (1.0 - n as f64) * f.value(x).last()
}

/// `div_g f = x_nⁿ Σ ∂_i(x_n^{1-n} fⁱ)` for a field in frame components.
pub fn divergence_hyperbolic(f: &VectorField, x: &Point) -> Result<f64> {
    f.require(Basis::HyperbolicFrame)?;
    check_point(x, f.dim(), true)?;
    Ok(frame_divergence(f, x.coords()))
}

/// Frame components of `∇_g ψ`, i.e. `x_n ∇ψ`.
pub fn hyperbolic_gradient(psi: &ScalarField, x: &Vector) -> Vector {
    psi.gradient(x).scale(x.last())
}

/// Potential for [`make_divfree_euclidean`].
#[derive(Clone, Debug)]
pub enum Potential {
    /// Stream function `ψ` on `ℝ²`; the field is `(∂₂ψ, -∂₁ψ)`.
    Stream(ScalarField),
    /// Vector potential `A` on `ℝ³`; the field is `curl A`.
    Vector([ScalarField; 3]),
}

/// Divergence-free Cartesian field generated by a potential.
pub fn make_divfree_euclidean(potential: Potential) -> Result<VectorField> {
    match potential {
        Potential::Stream(psi) => {
            if psi.dim() != 2 {
                return Err(Error::UnsupportedDimension(psi.dim()));
            }
            let support = psi.support();
            let label = format!("stream({})", psi.label());
            let p = psi.clone();
            let field = VectorField::new(
                2,
                Basis::Cartesian,
                move |x| {
                    let g = psi.gradient(x);
                    Vector::from([g[1], -g[0]])
                },
                move |x| {
                    let h = p.hessian(x);
                    Matrix::from_fn(2, |i, j| if i == 0 { h[(1, j)] } else { -h[(0, j)] })
                },
            )
            .certified()
            .with_label(label);
            Ok(match support {
                Some(b) => field.with_support(b),
                None => field,
            })
        }
        Potential::Vector(a) => {
            if a.iter().any(|c| c.dim() != 3) {
                return Err(Error::UnsupportedDimension(
                    a.iter().map(|c| c.dim()).find(|&d| d != 3).unwrap(),
                ));
            }
            // zero components may be given without support; the union only
            // needs the boxes that are declared
            let boxes: Vec<SupportBox> = a.iter().filter_map(|c| c.support()).collect();
            let all_declared = boxes.len() == 3;
            let label = format!("curl({},{},{})", a[0].label(), a[1].label(), a[2].label());
            let a = Arc::new(a);
            let b = a.clone();
            let field = VectorField::new(
                3,
                Basis::Cartesian,
                move |x| {
                    let g: Vec<Vector> = a.iter().map(|c| c.gradient(x)).collect();
                    Vector::from([g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]])
                },
                move |x| {
                    let h: Vec<Matrix> = b.iter().map(|c| c.hessian(x)).collect();
                    Matrix::from_fn(3, |i, j| match i {
                        0 => h[2][(1, j)] - h[1][(2, j)],
                        1 => h[0][(2, j)] - h[2][(0, j)],
                        _ => h[1][(0, j)] - h[0][(1, j)],
                    })
                },
            )
            .certified()
            .with_label(label);
            Ok(if all_declared {
                let u = boxes[1..].iter().fold(boxes[0], |acc, q| acc.union(q));
                field.with_support(u)
            } else {
                field
            })
        }
    }
}

/// Lift of a divergence-free Cartesian field to a divergence-free frame
/// field on `ℍⁿ`: `fⁱ = x_n^{n-1} Fⁱ`.
pub fn make_divfree_hyperbolic(f: &VectorField) -> Result<VectorField> {
    f.require(Basis::Cartesian)?;
    if !f.is_divergence_free() {
        return Err(Error::NotDivergenceFree);
    }
    let lifted = hyperbolic_lift(f)?;
    Ok(lifted.certified())
}

/// The map `Fⁱ ↦ x_n^{n-1} Fⁱ` from Cartesian to frame components, without
/// any divergence requirement.
pub fn hyperbolic_lift(f: &VectorField) -> Result<VectorField> {
    f.require(Basis::Cartesian)?;
    let n = f.dim();
    let k = n as i32 - 1;
    let (a, b) = (f.clone(), f.clone());
    let mut out = VectorField::new(
        n,
        Basis::HyperbolicFrame,
        move |x| a.value(x).scale(x.last().powi(k)),
        move |x| {
            let h = x.last();
            let v = b.value(x);
            let mut m = b.jacobian(x).scale(h.powi(k));
            for i in 0..n {
                m[(i, n - 1)] += k as f64 * h.powi(k - 1) * v[i];
            }
            m
        },
    );
    out.support = f.support();
    Ok(out.with_label(format!("lift({})", f.label())))
}

/// Frame field `x ↦ c` with constant frame coefficients.
pub fn constant_frame_field(c: &Vector) -> VectorField {
    let (c, n) = (*c, c.dim());
    VectorField::new(n, Basis::HyperbolicFrame, move |_| c, move |_| Matrix::zeros(n))
        .with_label(format!("frame{:?}", c.as_slice()))
}

/// Frame components of `∇_g φ`: entry `(i, j) = ⟨∇_{e_i} φ, e_j⟩_g`.
pub fn covariant_derivative(phi: &VectorField, x: &Point) -> Result<Matrix> {
    phi.require(Basis::HyperbolicFrame)?;
    check_point(x, phi.dim(), true)?;
    Ok(covariant_matrix(phi, x.coords()))
}

/// [`covariant_derivative`] at chart coordinates (no checks).
#[inline]
pub(crate) fn covariant_matrix(phi: &VectorField, x: &Vector) -> Matrix {
    covariant_from_parts(&phi.value(x), &phi.jacobian(x), x.last())
}

/// Covariant derivative from the frame components `v`, their coordinate
/// Jacobian `jac` and the height `h`.
#[inline]
pub(crate) fn covariant_from_parts(v: &Vector, jac: &Matrix, h: f64) -> Matrix {
    let n = v.dim();
    Matrix::from_fn(n, |i, j| {
        let mut s = h * jac[(j, i)];
        for k in 0..n {
            s += v[k] * connection_coefficient(n, i, k, j);
        }
        s
    })
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    fn ep(c: &[f64]) -> Point {
        Point::euclidean(Vector::from_slice(c)).unwrap()
    }

    fn hp(c: &[f64]) -> Point {
        Point::hyperbolic(Vector::from_slice(c)).unwrap()
    }

    #[test]
    fn euclidean_divergence_examples() {
        assert_eq!(divergence_euclidean(&rotation(), &ep(&[0.3, 0.7])).unwrap(), 0.0);
        let id = identity_field(3);
        assert_eq!(divergence_euclidean(&id, &ep(&[0.3, 0.7, 2.0])).unwrap(), 3.0);
        let g = gradient_field(&gaussian(&Vector::zeros(2), 1.0, 1.5));
        let v = divergence_euclidean(&g, &ep(&[0.0, 0.0])).unwrap();
        assert!((v + 2.0 * 2.0 * 1.5).abs() < 1e-12);
        let frame = constant_frame_field(&Vector::from([0.0, 1.0]));
        assert!(matches!(
            divergence_euclidean(&frame, &ep(&[0.0, 1.0])),
            Err(Error::WrongBasis { .. })
        ));
    }

    #[test]
    fn vertical_frame_field_divergence() {
        for n in 2..=3 {
            let f = constant_frame_field(&Vector::unit(n, n - 1));
            let mut c = vec![0.1; n];
            c[n - 1] = 2.5;
            let d = divergence_hyperbolic(&f, &hp(&c)).unwrap();
            assert_eq!(d, 1.0 - n as f64);
        }
    }

    #[test]
    fn stream_examples() {
        let psi = ScalarField::new(2, |x| x[0] * x[1], |x| Vector::from([x[1], x[0]]));
        let f = make_divfree_euclidean(Potential::Stream(psi)).unwrap();
        let x = Vector::from([0.4, -1.2]);
        assert_eq!(f.value(&x), Vector::from([0.4, 1.2]));
        assert!(f.is_divergence_free());
        assert!(f.jacobian(&x).trace().abs() < 1e-9);
    }

    #[test]
    fn curl_of_vertical_potential() {
        let psi = gaussian(&Vector::from([0.1, 0.2, 0.3]), 0.7, 1.0);
        let zero = zero_scalar(3);
        let f = make_divfree_euclidean(Potential::Vector([zero.clone(), zero, psi.clone()])).unwrap();
        let x = Vector::from([0.5, -0.3, 0.9]);
        let g = psi.gradient(&x);
        let v = f.value(&x);
        assert!((v - Vector::from([g[1], -g[0], 0.0])).max_abs() < 1e-15);
    }

    #[test]
    fn lift_of_rotation() {
        let f = make_divfree_hyperbolic(&rotation()).unwrap();
        let x = Vector::from([0.3, 1.7]);
        let v = f.value(&x);
        assert!((v - Vector::from([-1.7 * 1.7, 1.7 * 0.3])).max_abs() < 1e-15);
        assert!(divergence_hyperbolic(&f, &hp(&[0.3, 1.7])).unwrap().abs() < 1e-12);
        let not_free = identity_field(2);
        assert_eq!(
            make_divfree_hyperbolic(&not_free).unwrap_err(),
            Error::NotDivergenceFree
        );
    }

    #[test]
    fn covariant_derivative_of_vertical_field() {
        let n = 3;
        let f = constant_frame_field(&Vector::unit(n, n - 1));
        let m = covariant_derivative(&f, &hp(&[0.2, 0.4, 0.8])).unwrap();
        let mut expected = Matrix::zeros(n);
        for i in 0..n - 1 {
            expected[(i, i)] = -1.0;
        }
        assert_eq!(m, expected);
    }

    #[test]
    fn probing_certifies_and_rejects() {
        let swirl = swirl(&Vector::zeros(2), 0.5, 1.0).without_support();
        let b = SupportBox::around(&Vector::zeros(2), 1.0);
        let uncertified = VectorField::new(
            2,
            Basis::Cartesian,
            {
                let s = swirl.clone();
                move |x| s.value(x)
            },
            {
                let s = swirl.clone();
                move |x| s.jacobian(x)
            },
        )
        .with_support(b);
        assert!(uncertified
            .certify_by_probing(100, 1e-10, 1)
            .unwrap()
            .is_divergence_free());
        let bad = identity_field(2).with_support(b);
        assert_eq!(
            bad.certify_by_probing(10, 1e-8, 1).unwrap_err(),
            Error::NotDivergenceFree
        );
    }
}
