//! Euclidean space and the upper half-space model of hyperbolic space.
//!
//! Hyperbolic points are stored in chart coordinates `x = (x', x_n)` with
//! `x_n > 0` and metric `|dx|² / x_n²`. Tangent vectors are expressed either
//! in coordinates or in the orthonormal frame `e_i = x_n ∂_i`; frame indices
//! are zero-based, so the vertical direction is index `n - 1`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{Vector, MAX_DIM};

/// Relative tolerance for deciding that a point lies on a hypersurface.
pub const SURFACE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Euclidean(usize),
    Hyperbolic(usize),
}

impl Space {
    pub fn dim(self) -> usize {
        match self {
            Space::Euclidean(n) | Space::Hyperbolic(n) => n,
        }
    }

    pub fn is_hyperbolic(self) -> bool {
        matches!(self, Space::Hyperbolic(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: Vector,
    space: Space,
}

impl Point {
    pub fn euclidean(coords: impl Into<Vector>) -> Result<Self> {
        let coords = coords.into();
        check_dim(coords.dim())?;
        if !coords.is_finite() {
            return Err(invalid("non-finite coordinates"));
        }
        Ok(Self {
            space: Space::Euclidean(coords.dim()),
            coords,
        })
    }

    pub fn hyperbolic(coords: impl Into<Vector>) -> Result<Self> {
        let coords = coords.into();
        check_dim(coords.dim())?;
        check_chart(&coords)?;
        Ok(Self {
            space: Space::Hyperbolic(coords.dim()),
            coords,
        })
    }

    pub fn new(space: Space, coords: impl Into<Vector>) -> Result<Self> {
        let coords = coords.into();
        if coords.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: coords.dim(),
            });
        }
        match space {
            Space::Euclidean(_) => Self::euclidean(coords),
            Space::Hyperbolic(_) => Self::hyperbolic(coords),
        }
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }

    /// The last coordinate `x_n`.
    pub fn height(&self) -> f64 {
        self.coords.last()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

pub(crate) fn check_chart(x: &Vector) -> Result<()> {
    let h = x.last();
    if !(h > 0.0) || !x.is_finite() {
        return Err(Error::OutsideChart(h));
    }
    Ok(())
}

/// A tangent vector at a hyperbolic point, in the frame `e_i = x_n ∂_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameVector {
    pub components: Vector,
    pub basepoint: Point,
}

impl FrameVector {
    /// Coordinate components `x_n · components`.
    pub fn to_coordinates(&self) -> Vector {
        self.components.scale(self.basepoint.height())
    }

    pub fn g_norm(&self) -> f64 {
        self.components.norm()
    }
}

/// Riemannian inner product of two coordinate vectors at `x`.
pub fn metric_inner(x: &Point, u: &Vector, v: &Vector) -> Result<f64> {
    if u.dim() != x.dim() || v.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: u.dim().max(v.dim()),
        });
    }
    Ok(match x.space() {
        Space::Euclidean(_) => u.dot(v),
        Space::Hyperbolic(_) => {
            let h = x.height();
            u.dot(v) / (h * h)
        }
    })
}

/// Coefficient of `e_j` in `∇_{e_i} e_k` for the hyperbolic frame of `ℍⁿ`.
///
/// The only nonzero coefficients are `∇_{e_i} e_i = e_n` and
/// `∇_{e_i} e_n = -e_i` for horizontal `i`.
#[inline]
pub fn connection_coefficient(n: usize, i: usize, k: usize, j: usize) -> f64 {
    let v = n - 1;
    if i == v {
        return 0.0;
    }
    if k == v {
        if j == i {
            -1.0
        } else {
            0.0
        }
    } else if k == i && j == v {
        1.0
    } else {
        0.0
    }
}

/// `∇_{e_i} e_j` expressed in the frame. Indices are zero-based.
pub fn frame_connection(n: usize, i: usize, j: usize) -> Result<Vector> {
    check_dim(n)?;
    for index in [i, j] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, dim: n });
        }
    }
    let mut out = Vector::zeros(n);
    for k in 0..n {
        out[k] = connection_coefficient(n, i, j, k);
    }
    Ok(out)
}

/// Hyperbolic distance between chart coordinates, `2 asinh(|x - y| / (2 √(x_n y_n)))`.
///
/// Algebraically equal to `arccosh(1 + |x - y|² / (2 x_n y_n))` but accurate for
/// nearby points.
#[inline]
pub fn hyperbolic_distance_coords(x: &Vector, y: &Vector) -> f64 {
    let s = (*x - *y).norm() / (2.0 * (x.last() * y.last()).sqrt());
    2.0 * s.asinh()
}

/// Coordinate gradient of `x ↦ d(x, anchor)`; zero at the anchor itself.
pub fn hyperbolic_distance_gradient(x: &Vector, anchor: &Vector) -> Vector {
    let n = x.dim();
    let diff = *x - *anchor;
    let r2 = diff.norm_squared();
    let (xn, an) = (x.last(), anchor.last());
    let s2 = r2 / (4.0 * xn * an);
    if s2 == 0.0 {
        return Vector::zeros(n);
    }
    let s = s2.sqrt();
    let mut grad_s2 = diff.scale(1.0 / (2.0 * xn * an));
    grad_s2[n - 1] -= r2 / (4.0 * xn * xn * an);
    grad_s2.scale(1.0 / (s * (1.0 + s2).sqrt()))
}

pub fn distance(x: &Point, y: &Point) -> Result<f64> {
    if x.space() != y.space() {
        return Err(Error::MixedSpaces);
    }
    Ok(match x.space() {
        Space::Euclidean(_) => (*x.coords() - *y.coords()).norm(),
        Space::Hyperbolic(_) => hyperbolic_distance_coords(x.coords(), y.coords()),
    })
}

/// Area `|𝕊ⁿ⁻¹|` of the unit sphere in `ℝⁿ` (`n ≥ 1`).
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

/// Density of the Riemannian volume against Lebesgue measure.
pub fn volume_weight(x: &Point) -> f64 {
    match x.space() {
        Space::Euclidean(_) => 1.0,
        Space::Hyperbolic(n) => x.height().powi(-(n as i32)),
    }
}

/// Axis-aligned box in chart coordinates; declared support of a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportBox {
    lo: Vector,
    hi: Vector,
}

impl SupportBox {
    pub fn new(lo: impl Into<Vector>, hi: impl Into<Vector>) -> Result<Self> {
        let (lo, hi) = (lo.into(), hi.into());
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                actual: hi.dim(),
            });
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("support box must be finite"));
        }
        if (0..lo.dim()).any(|i| lo[i] > hi[i]) {
            return Err(invalid("support box has lo > hi"));
        }
        Ok(Self { lo, hi })
    }

    /// Cube `center ± half_width` in every coordinate.
    pub fn around(center: &Vector, half_width: f64) -> Self {
        Self::around_axes(center, &Vector::filled(center.dim(), half_width))
    }

    pub fn around_axes(center: &Vector, half_widths: &Vector) -> Self {
        Self {
            lo: *center - *half_widths,
            hi: *center + *half_widths,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &Vector {
        &self.lo
    }

    pub fn hi(&self) -> &Vector {
        &self.hi
    }

    pub fn center(&self) -> Vector {
        (self.lo + self.hi).scale(0.5)
    }

    pub fn contains(&self, x: &Vector) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn intersect(&self, other: &SupportBox) -> Option<SupportBox> {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for i in 0..self.dim() {
            lo[i] = lo[i].max(other.lo[i]);
            hi[i] = hi[i].min(other.hi[i]);
            if lo[i] > hi[i] {
                return None;
            }
        }
        Some(SupportBox { lo, hi })
    }

    pub fn union(&self, other: &SupportBox) -> SupportBox {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for i in 0..self.dim() {
            lo[i] = lo[i].min(other.lo[i]);
            hi[i] = hi[i].max(other.hi[i]);
        }
        SupportBox { lo, hi }
    }

    pub fn enlarge(&self, margin: f64) -> SupportBox {
        let m = Vector::filled(self.dim(), margin);
        SupportBox {
            lo: self.lo - m,
            hi: self.hi + m,
        }
    }

    pub fn corners(&self) -> Vec<Vector> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                let mut c = self.lo;
                for i in 0..n {
                    if mask & (1 << i) != 0 {
                        c[i] = self.hi[i];
                    }
                }
                c
            })
            .collect()
    }

    /// Euclidean distance from `p` to the nearest point of the box.
    pub fn nearest_distance(&self, p: &Vector) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let d = (self.lo[i] - p[i]).max(0.0).max(p[i] - self.hi[i]);
            s += d * d;
        }
        s.sqrt()
    }

    /// Euclidean distance from `p` to the farthest point of the box.
    pub fn farthest_distance(&self, p: &Vector) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let d = (p[i] - self.lo[i]).abs().max((self.hi[i] - p[i]).abs());
            s += d * d;
        }
        s.sqrt()
    }

    /// Image of the box under `x ↦ scale · x + shift` (scale > 0).
    pub fn affine(&self, scale: f64, shift: &Vector) -> SupportBox {
        SupportBox {
            lo: self.lo.scale(scale) + *shift,
            hi: self.hi.scale(scale) + *shift,
        }
    }

    /// Drops coordinate `i`.
    pub fn remove(&self, i: usize) -> SupportBox {
        SupportBox {
            lo: self.lo.remove(i),
            hi: self.hi.remove(i),
        }
    }

    pub fn insert(&self, i: usize, lo: f64, hi: f64) -> SupportBox {
        SupportBox {
            lo: self.lo.insert(i, lo),
            hi: self.hi.insert(i, hi),
        }
    }

    pub fn set_axis(&self, i: usize, lo: f64, hi: f64) -> SupportBox {
        let mut out = *self;
        out.lo[i] = lo;
        out.hi[i] = hi;
        out
    }
}

/// Intersection of optional supports; `None` stands for "unbounded".
pub fn intersect_supports(boxes: &[Option<SupportBox>]) -> Option<Option<SupportBox>> {
    let mut acc: Option<SupportBox> = None;
    for b in boxes.iter().flatten() {
        acc = match acc {
            None => Some(*b),
            Some(a) => match a.intersect(b) {
                Some(c) => Some(c),
                // Disjoint supports: the integrand vanishes identically.
                None => return Some(None),
            },
        };
    }
    acc.map(Some)
}

/// A totally geodesic hypersurface of `ℍⁿ`: a vertical hyperplane or a
/// Euclidean northern hemisphere centred on `{x_n = 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Hypersurface {
    VerticalPlane { dim: usize, axis: usize, offset: f64 },
    Hemisphere { center: Vector, radius: f64 },
}

impl Hypersurface {
    /// `{x_axis = offset}` in `ℍ^dim`; `axis` must be horizontal.
    pub fn vertical_plane(dim: usize, axis: usize, offset: f64) -> Result<Self> {
        check_dim(dim)?;
        if dim < 2 || axis >= dim - 1 {
            return Err(Error::IndexOutOfRange { index: axis, dim });
        }
        if !offset.is_finite() {
            return Err(invalid("vertical plane offset must be finite"));
        }
        Ok(Self::VerticalPlane { dim, axis, offset })
    }

    /// `S(z, r)`: the hemisphere of radius `r` centred at `(z, 0)`.
    pub fn hemisphere(center: impl Into<Vector>, radius: f64) -> Result<Self> {
        let center = center.into();
        check_dim(center.dim() + 1)?;
        if center.dim() == 0 {
            return Err(Error::UnsupportedDimension(1));
        }
        if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
            return Err(invalid("hemisphere needs a finite centre and radius > 0"));
        }
        Ok(Self::Hemisphere { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::VerticalPlane { dim, .. } => *dim,
            Self::Hemisphere { center, .. } => center.dim() + 1,
        }
    }

    /// Relative residual of the defining equation at `x`.
    pub fn residual(&self, x: &Vector) -> f64 {
        match self {
            Self::VerticalPlane { axis, offset, .. } => (x[*axis] - offset).abs() / offset.abs().max(1.0),
            Self::Hemisphere { center, radius } => {
                let d2 = (*x - center.push(0.0)).norm_squared();
                (d2 - radius * radius).abs() / (radius * radius)
            }
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim() && x.space().is_hyperbolic() && self.residual(x.coords()) <= SURFACE_TOLERANCE
    }

    fn check_on(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        if !x.space().is_hyperbolic() {
            return Err(Error::MixedSpaces);
        }
        let res = self.residual(x.coords());
        if res > SURFACE_TOLERANCE {
            return Err(Error::OffSurface(res));
        }
        Ok(())
    }

    /// Frame components of the unit normal at a point known to lie on the
    /// surface: `e_axis` for a vertical plane, the upward `(x - (z,0)) / r`
    /// for a hemisphere.
    #[inline]
    pub fn normal_components(&self, x: &Vector) -> Vector {
        match self {
            Self::VerticalPlane { dim, axis, .. } => Vector::unit(*dim, *axis),
            Self::Hemisphere { center, radius } => (*x - center.push(0.0)).scale(1.0 / radius),
        }
    }

    /// Density of the induced hyperbolic measure `dV'_g` against Euclidean
    /// surface measure at a point of the surface.
    #[inline]
    pub fn measure_density(&self, x: &Vector) -> f64 {
        let n = self.dim();
        let h = x.last().powi(n as i32 - 1);
        // same on both families; dilations map hemispheres onto each other
        1.0 / h
    }

    /// Point of a hemisphere at polar angle `theta` from the apex and, for
    /// `n = 3`, azimuth `phi`. For `n = 2`, `theta ∈ (-π/2, π/2)` with
    /// positive angles towards `+x_1`.
    pub fn hemisphere_point(&self, theta: f64, phi: f64) -> Option<Vector> {
        let Self::Hemisphere { center, radius } = self else {
            return None;
        };
        let n = self.dim();
        let (st, ct) = theta.sin_cos();
        let mut x = center.push(radius * ct);
        match n {
            2 => x[0] += radius * st,
            3 => {
                let (sp, cp) = phi.sin_cos();
                x[0] += radius * st * cp;
                x[1] += radius * st * sp;
            }
            _ => return None,
        }
        Some(x)
    }

    pub fn transform(&self, iso: &Isometry) -> Hypersurface {
        match (*self, iso) {
            (Self::VerticalPlane { dim, axis, offset }, Isometry::Translation(a)) => Self::VerticalPlane {
                dim,
                axis,
                offset: offset + a[axis],
            },
            (Self::VerticalPlane { dim, axis, offset }, Isometry::Dilation(s)) => Self::VerticalPlane {
                dim,
                axis,
                offset: offset * s,
            },
            (Self::Hemisphere { center, radius }, Isometry::Translation(a)) => Self::Hemisphere {
                center: center + *a,
                radius,
            },
            (Self::Hemisphere { center, radius }, Isometry::Dilation(s)) => Self::Hemisphere {
                center: center.scale(*s),
                radius: radius * s,
            },
        }
    }
}

/// Surface-measure conversion `dV'_g = w · dσ` at a point of `s`.
pub fn surface_measure_weight(x: &Point, s: &Hypersurface) -> Result<f64> {
    s.check_on(x)?;
    Ok(s.measure_density(x.coords()))
}

/// Unit normal of `s` at `x` (upward for hemispheres, `+e_axis` for planes).
pub fn unit_normal(x: &Point, s: &Hypersurface) -> Result<FrameVector> {
    s.check_on(x)?;
    Ok(FrameVector {
        components: s.normal_components(x.coords()),
        basepoint: *x,
    })
}

/// Isometries of the half-space that preserve the frame: horizontal
/// translations `x' ↦ x' + a` and dilations `x ↦ s x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Isometry {
    Translation(Vector),
    Dilation(f64),
}

impl Isometry {
    pub fn apply_coords(&self, x: &Vector) -> Vector {
        match self {
            Isometry::Translation(a) => *x + a.push(0.0),
            Isometry::Dilation(s) => x.scale(*s),
        }
    }

    pub fn apply(&self, x: &Point) -> Point {
        let coords = self.apply_coords(x.coords());
        Point {
            coords,
            space: x.space(),
        }
    }

    pub fn inverse(&self) -> Isometry {
        match self {
            Isometry::Translation(a) => Isometry::Translation(-*a),
            Isometry::Dilation(s) => Isometry::Dilation(1.0 / s),
        }
    }

    /// Derivative factor of the coordinate map.
    pub fn scale(&self) -> f64 {
        match self {
            Isometry::Translation(_) => 1.0,
            Isometry::Dilation(s) => *s,
        }
    }

    pub fn apply_box(&self, b: &SupportBox) -> SupportBox {
        match self {
            Isometry::Translation(a) => b.affine(1.0, &a.push(0.0)),
            Isometry::Dilation(s) => b.affine(*s, &Vector::zeros(b.dim())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hp(c: &[f64]) -> Point {
        Point::hyperbolic(Vector::from_slice(c)).unwrap()
    }

    #[test]
    fn metric_examples() {
        let u = Vector::from([0.0, 1.0]);
        assert_eq!(metric_inner(&hp(&[0.0, 1.0]), &u, &u).unwrap(), 1.0);
        assert_eq!(metric_inner(&hp(&[0.0, 2.0]), &u, &u).unwrap(), 0.25);
        let e = Point::euclidean([3.0, 4.0]).unwrap();
        assert_eq!(metric_inner(&e, &u, &u).unwrap(), 1.0);
    }

    #[test]
    fn chart_rejects_nonpositive_height() {
        assert_eq!(Point::hyperbolic([0.0, 0.0]), Err(Error::OutsideChart(0.0)));
        assert!(Point::hyperbolic([1.0, -2.0]).is_err());
    }

    #[test]
    fn frame_is_orthonormal() {
        let x = hp(&[0.3, -1.0, 0.7]);
        for i in 0..3 {
            for j in 0..3 {
                let ei = Vector::unit(3, i).scale(x.height());
                let ej = Vector::unit(3, j).scale(x.height());
                let g = metric_inner(&x, &ei, &ej).unwrap();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn connection_examples() {
        let n = 3;
        for j in 0..n {
            assert_eq!(frame_connection(n, n - 1, j).unwrap(), Vector::zeros(n));
        }
        assert_eq!(frame_connection(n, 0, 0).unwrap(), Vector::unit(n, 2));
        assert_eq!(frame_connection(n, 0, 1).unwrap(), Vector::zeros(n));
        assert_eq!(frame_connection(n, 1, 2).unwrap(), -Vector::unit(n, 1));
        assert!(matches!(frame_connection(n, 3, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn volume_weight_examples() {
        assert_eq!(volume_weight(&hp(&[0.0, 1.0])), 1.0);
        assert_eq!(volume_weight(&hp(&[3.0, 2.0])), 0.25);
        assert_eq!(volume_weight(&hp(&[1.0, 1.0, 0.5])), 8.0);
        assert_eq!(volume_weight(&Point::euclidean([1.0, 7.0]).unwrap()), 1.0);
    }

    #[test]
    fn distance_examples() {
        let x = hp(&[0.2, 1.3]);
        assert_eq!(distance(&x, &x).unwrap(), 0.0);
        let d = distance(&hp(&[0.0, 1.0]), &hp(&[0.0, std::f64::consts::E])).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-14);
        let e = Point::euclidean([0.0, 1.0]).unwrap();
        assert_eq!(distance(&x, &e), Err(Error::MixedSpaces));
    }

    #[test]
    fn distance_gradient_matches_finite_differences() {
        let x = Vector::from([0.4, -0.2, 0.8]);
        let a = Vector::from([0.0, 0.1, 1.3]);
        let g = hyperbolic_distance_gradient(&x, &a);
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (hyperbolic_distance_coords(&xp, &a) - hyperbolic_distance_coords(&xm, &a)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn surface_weights() {
        let plane = Hypersurface::vertical_plane(3, 0, 0.0).unwrap();
        assert_eq!(surface_measure_weight(&hp(&[0.0, 5.0, 1.0]), &plane).unwrap(), 1.0);
        let hemi = Hypersurface::hemisphere([0.0], 2.0).unwrap();
        assert_eq!(surface_measure_weight(&hp(&[0.0, 2.0]), &hemi).unwrap(), 0.5);
        assert!(matches!(
            surface_measure_weight(&hp(&[0.0, 1.5]), &hemi),
            Err(Error::OffSurface(_))
        ));
    }

    #[test]
    fn normals() {
        let plane = Hypersurface::vertical_plane(3, 0, 0.0).unwrap();
        let nu = unit_normal(&hp(&[0.0, 0.3, 2.0]), &plane).unwrap();
        assert_eq!(nu.components, Vector::unit(3, 0));
        let x = nu.basepoint;
        let c = nu.to_coordinates();
        assert_relative_eq!(metric_inner(&x, &c, &c).unwrap(), 1.0, epsilon = 1e-14);

        let hemi = Hypersurface::hemisphere([0.0], 1.0).unwrap();
        let apex = unit_normal(&hp(&[0.0, 1.0]), &hemi).unwrap();
        assert_eq!(apex.components, Vector::from([0.0, 1.0]));
    }

    #[test]
    fn hemisphere_normal_is_orthogonal_to_tangents() {
        let s = Hypersurface::hemisphere([0.3, -0.4], 1.7).unwrap();
        for &(t, p) in &[(0.2, 0.1), (1.1, 2.5), (0.7, -1.3)] {
            let x = s.hemisphere_point(t, p).unwrap();
            let pt = Point::hyperbolic(x).unwrap();
            let nu = unit_normal(&pt, &s).unwrap().to_coordinates();
            let h = 1e-6;
            let dt = (s.hemisphere_point(t + h, p).unwrap() - s.hemisphere_point(t - h, p).unwrap()).scale(0.5 / h);
            let dp = (s.hemisphere_point(t, p + h).unwrap() - s.hemisphere_point(t, p - h).unwrap()).scale(0.5 / h);
            for tangent in [dt, dp] {
                let ip = metric_inner(&pt, &nu, &tangent).unwrap();
                assert!(ip.abs() < 1e-10, "{ip}");
            }
        }
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert_eq!(sphere_area(2), 2.0 * PI);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
    }

    #[test]
    fn support_box_geometry() {
        let b = SupportBox::new([1.0, 1.0], [2.0, 3.0]).unwrap();
        let o = Vector::zeros(2);
        assert_relative_eq!(b.nearest_distance(&o), 2f64.sqrt());
        assert_relative_eq!(b.farthest_distance(&o), 13f64.sqrt());
        assert_eq!(b.corners().len(), 4);
        assert!(SupportBox::new([1.0], [0.0]).is_err());
        let c = SupportBox::new([5.0, 5.0], [6.0, 6.0]).unwrap();
        assert_eq!(intersect_supports(&[Some(b), Some(c)]), Some(None));
        assert_eq!(intersect_supports(&[None, None]), None);
    }
}
