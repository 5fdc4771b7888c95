//! Quadrature rules for spheres, hyperbolic hypersurfaces and truncated volumes.
//!
//! All rules are tensor products of composite Gauss–Legendre panels (or the
//! periodic trapezoid rule on full circles). Hyperbolic rules use `ln x_n` as
//! the vertical variable, which keeps integrands that live across several
//! scales of `x_n` well resolved. An adaptive Gauss–Kronrod integrator is
//! provided separately and serves as the reference integrator in tests.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Hypersurface, SupportBox};
use crate::linalg::Vector;

const MAX_TABLE_ORDER: usize = 128;
const PARALLEL_CHUNK: usize = 8192;

/// Resolution of a rule: `panels` composite panels of `order`-point
/// Gauss–Legendre per axis, and the relative error the caller expects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accuracy {
    pub panels: usize,
    pub order: usize,
    pub tolerance: f64,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self {
            panels: 8,
            order: 8,
            tolerance: 1e-8,
        }
    }
}

impl Accuracy {
    pub fn new(panels: usize, order: usize) -> Self {
        Self {
            panels: panels.max(1),
            order: order.clamp(1, MAX_TABLE_ORDER),
            ..Self::default()
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.panels * self.order
    }

    /// Twice the panels per axis.
    pub fn refined(&self) -> Self {
        Self {
            panels: self.panels * 2,
            ..*self
        }
    }

    /// Half the panels per axis (at least one).
    pub fn coarsened(&self) -> Self {
        Self {
            panels: (self.panels / 2).max(1),
            ..*self
        }
    }

    /// Same resolution with panels scaled by `factor` (at least one panel).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            panels: ((self.panels as f64 * factor).round() as usize).max(1),
            ..*self
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.panels == 0 || self.order == 0 || self.order > MAX_TABLE_ORDER {
            return Err(invalid("accuracy needs panels >= 1 and 1 <= order <= 128"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("accuracy tolerance must be positive"));
        }
        Ok(())
    }
}

fn compute_gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            // derivative from the last two polynomials
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            if n == 1 {
                dp = 1.0;
            }
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    assert!((1..=MAX_TABLE_ORDER).contains(&order));
    let table = TABLE.get_or_init(|| {
        (0..=MAX_TABLE_ORDER)
            .map(|n| {
                if n == 0 {
                    (vec![], vec![])
                } else {
                    compute_gauss_legendre(n)
                }
            })
            .collect()
    });
    &table[order]
}

/// Composite Gauss–Legendre nodes and weights on `[a, b]`.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels * order);
    if !(b > a) {
        return out;
    }
    let (xs, ws) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in xs.iter().zip(ws) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Composite rule with panels split exactly at the given (sorted) breakpoints;
/// `panels` panels are distributed over the segments proportionally to length.
pub fn composite_with_breaks(breaks: &[f64], panels: usize, order: usize) -> Vec<(f64, f64)> {
    let total = breaks.last().unwrap() - breaks[0];
    let mut out = Vec::new();
    if !(total > 0.0) {
        return out;
    }
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let p = ((panels as f64 * len / total).ceil() as usize).max(1);
        out.extend(composite(w[0], w[1], p, order));
    }
    out
}

/// Equispaced periodic trapezoid nodes on `[0, 2π)` with equal weights.
pub fn trapezoid_periodic(count: usize) -> Vec<(f64, f64)> {
    let h = 2.0 * PI / count as f64;
    (0..count).map(|k| (h * k as f64, h)).collect()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WEIGHTS_K[7] * fc;
    let mut g = GK_WEIGHTS_G[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WEIGHTS_K[i] * s;
        if i % 2 == 1 {
            g += GK_WEIGHTS_G[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, err: f64, tol: f64, depth: usize) -> f64 {
    if err <= tol || depth == 0 || (b - a).abs() < 1e-15 * (a.abs() + b.abs()).max(1e-300) {
        return whole;
    }
    let m = 0.5 * (a + b);
    let (l, el) = gauss_kronrod(f, a, m);
    let (r, er) = gauss_kronrod(f, m, b);
    adaptive_step(f, a, m, l, el, 0.5 * tol, depth - 1) + adaptive_step(f, m, b, r, er, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod (7/15) integration with recursive bisection until
/// the local error estimate falls below the (absolute) tolerance.
pub fn adaptive_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let f: &dyn Fn(f64) -> f64 = &f;
    // Start from a few panels so narrow features are not missed.
    let panels = 8;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + h * p as f64;
            let hi = if p + 1 == panels { b } else { lo + h };
            let (v, e) = gauss_kronrod(f, lo, hi);
            adaptive_step(f, lo, hi, v, e, tol / panels as f64, 40)
        })
        .sum()
}

/// What a rule integrates over.
#[derive(Clone, Debug, PartialEq)]
pub enum RuleDomain {
    /// Euclidean sphere of the given centre and radius.
    Sphere { center: Vector, radius: f64 },
    /// A hyperbolic hypersurface, weights in `dV'_g`.
    Surface(Hypersurface),
    /// A volume region, weights in `dx` (Euclidean) or `dV_g` (hyperbolic).
    Volume(VolumeDomain),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VolumeDomain {
    Ball {
        radius: f64,
    },
    /// `1 ≤ |x| ≤ r_max`; the support must lie inside `|x| ≤ r_max`.
    ExteriorOfBall {
        r_max: f64,
    },
    /// All of `ℝⁿ`, truncated to the declared support.
    Euclidean,
    /// `{x ∈ ℍⁿ : x_1 > 0}` with hyperbolic volume.
    HalfSpaceX1Positive,
    /// All of `ℍⁿ` with hyperbolic volume.
    FullHalfSpaceChart,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<Vector>,
    weights: Vec<f64>,
    normals: Option<Vec<Vector>>,
    domain: RuleDomain,
    accuracy: Accuracy,
    exact_degree: Option<usize>,
}

impl QuadratureRule {
    fn new(domain: RuleDomain, accuracy: Accuracy) -> Self {
        Self {
            nodes: Vec::new(),
            weights: Vec::new(),
            normals: None,
            domain,
            accuracy,
            exact_degree: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vector] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit normals at the nodes: Euclidean outward normals on spheres,
    /// frame components on hyperbolic hypersurfaces.
    pub fn normals(&self) -> Option<&[Vector]> {
        self.normals.as_deref()
    }

    pub fn domain(&self) -> &RuleDomain {
        &self.domain
    }

    pub fn accuracy(&self) -> Accuracy {
        self.accuracy
    }

    /// Polynomial degree integrated exactly, where meaningful (spheres).
    pub fn exact_degree(&self) -> Option<usize> {
        self.exact_degree
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ wᵢ F(xᵢ)`. Large rules are split in fixed chunks evaluated in
    /// parallel; partial sums are combined in order, so results do not depend
    /// on scheduling.
    pub fn integrate(&self, f: impl Fn(&Vector) -> f64 + Sync) -> f64 {
        self.integrate_indexed(|_, x| f(x))
    }

    /// Like [`integrate`](Self::integrate) with the node normal supplied.
    pub fn integrate_with_normal(&self, f: impl Fn(&Vector, &Vector) -> f64 + Sync) -> f64 {
        let normals = self.normals.as_ref().expect("rule was built without normals");
        self.integrate_indexed(|i, x| f(x, &normals[i]))
    }

    fn integrate_indexed(&self, f: impl Fn(usize, &Vector) -> f64 + Sync) -> f64 {
        let chunk_sum = |start: usize| {
            let end = (start + PARALLEL_CHUNK).min(self.nodes.len());
            let mut s = 0.0;
            for i in start..end {
                let w = self.weights[i];
                s += w * f(i, &self.nodes[i]);
            }
            s
        };
        if self.nodes.len() <= PARALLEL_CHUNK {
            return chunk_sum(0);
        }
        let starts: Vec<usize> = (0..self.nodes.len()).step_by(PARALLEL_CHUNK).collect();
        let partials: Vec<f64> = starts.par_iter().map(|&s| chunk_sum(s)).collect();
        partials.iter().sum()
    }

    /// Integrates several functionals at once.
    pub fn integrate_many<const K: usize>(&self, f: impl Fn(&Vector, Option<&Vector>) -> [f64; K] + Sync) -> [f64; K] {
        let normals = self.normals.as_deref();
        let chunk_sum = |start: usize| {
            let end = (start + PARALLEL_CHUNK).min(self.nodes.len());
            let mut s = [0.0; K];
            for i in start..end {
                let v = f(&self.nodes[i], normals.map(|n| &n[i]));
                for k in 0..K {
                    s[k] += self.weights[i] * v[k];
                }
            }
            s
        };
        if self.nodes.len() <= PARALLEL_CHUNK {
            return chunk_sum(0);
        }
        let starts: Vec<usize> = (0..self.nodes.len()).step_by(PARALLEL_CHUNK).collect();
        let partials: Vec<[f64; K]> = starts.par_iter().map(|&s| chunk_sum(s)).collect();
        let mut out = [0.0; K];
        for p in partials {
            for k in 0..K {
                out[k] += p[k];
            }
        }
        out
    }
}

/// Rule for the unit sphere `𝕊ⁿ⁻¹` (`n ∈ {2, 3}`).
///
/// `n = 2`: periodic trapezoid rule with `accuracy.points()` nodes.
/// `n = 3`: composite Gauss–Legendre in `cos θ` times the trapezoid rule in
/// azimuth with `accuracy.points()` azimuthal nodes.
pub fn sphere_rule(n: usize, accuracy: &Accuracy) -> Result<QuadratureRule> {
    sphere_rule_at(&Vector::zeros(n), 1.0, accuracy)
}

/// Sphere rule for the sphere of the given centre and radius.
pub fn sphere_rule_at(center: &Vector, radius: f64, accuracy: &Accuracy) -> Result<QuadratureRule> {
    accuracy.validate()?;
    let n = center.dim();
    if !(radius > 0.0) {
        return Err(invalid("sphere radius must be positive"));
    }
    let mut rule = QuadratureRule::new(
        RuleDomain::Sphere {
            center: *center,
            radius,
        },
        *accuracy,
    );
    let mut normals = Vec::new();
    let m = accuracy.points();
    match n {
        2 => {
            for (t, w) in trapezoid_periodic(m) {
                let omega = Vector::from([t.cos(), t.sin()]);
                rule.nodes.push(*center + omega.scale(radius));
                rule.weights.push(w * radius);
                normals.push(omega);
            }
            rule.exact_degree = Some(m - 1);
        }
        3 => {
            let polar = composite(-1.0, 1.0, accuracy.panels, accuracy.order);
            let azimuth = trapezoid_periodic(m);
            for &(u, wu) in &polar {
                let s = (1.0 - u * u).max(0.0).sqrt();
                for &(p, wp) in &azimuth {
                    let omega = Vector::from([s * p.cos(), s * p.sin(), u]);
                    rule.nodes.push(*center + omega.scale(radius));
                    rule.weights.push(wu * wp * radius * radius);
                    normals.push(omega);
                }
            }
            rule.exact_degree = Some((2 * accuracy.order - 1).min(m - 1));
        }
        _ => return Err(Error::UnsupportedDimension(n)),
    }
    rule.normals = Some(normals);
    Ok(rule)
}

/// Truncation of an improper hyperbolic surface integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceTruncation {
    /// Lower bound `ε` on the height `x_n`.
    pub min_height: f64,
    /// Declared support of the integrand; required for vertical planes.
    pub support: Option<SupportBox>,
}

impl SurfaceTruncation {
    pub fn band(min_height: f64) -> Self {
        Self {
            min_height,
            support: None,
        }
    }

    /// Truncation implied by a compact support (`ε` = bottom of the box).
    pub fn from_support(support: SupportBox) -> Self {
        Self {
            min_height: support.lo().last(),
            support: Some(support),
        }
    }
}

fn intersect_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Azimuth interval `[φ0, φ1]` (with `φ1 - φ0 < 2π`) containing every
/// horizontal box point as seen from `origin`, or `None` when the box
/// surrounds the origin.
fn azimuth_window(lo: &Vector, hi: &Vector, origin: &Vector) -> Option<(f64, f64)> {
    let (x0, x1, y0, y1) = (
        lo[0] - origin[0],
        hi[0] - origin[0],
        lo[1] - origin[1],
        hi[1] - origin[1],
    );
    if x0 <= 0.0 && x1 >= 0.0 && y0 <= 0.0 && y1 >= 0.0 {
        return None;
    }
    let mid = (0.5 * (y0 + y1)).atan2(0.5 * (x0 + x1));
    let mut min: f64 = 0.0;
    let mut max: f64 = 0.0;
    for (x, y) in [(x0, y0), (x0, y1), (x1, y0), (x1, y1)] {
        let mut d = y.atan2(x) - mid;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        min = min.min(d);
        max = max.max(d);
    }
    Some((mid + min, mid + max))
}

/// Rule on a hyperbolic hypersurface with weights in `dV'_g`, restricted to
/// `x_n ≥ ε` and to the declared support box when present.
pub fn surface_rule(s: &Hypersurface, truncation: &SurfaceTruncation, accuracy: &Accuracy) -> Result<QuadratureRule> {
    accuracy.validate()?;
    let eps = truncation.min_height;
    if !(eps > 0.0) {
        return Err(invalid("surface truncation needs x_n >= eps with eps > 0"));
    }
    let n = s.dim();
    if let Some(b) = &truncation.support {
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.dim(),
            });
        }
    }
    let mut rule = QuadratureRule::new(RuleDomain::Surface(*s), *accuracy);
    let mut normals = Vec::new();
    let (panels, order) = (accuracy.panels, accuracy.order);
    match *s {
        Hypersurface::VerticalPlane { axis, offset, .. } => {
            let support = truncation.support.ok_or(Error::UnboundedSupport)?;
            if offset < support.lo()[axis] || offset > support.hi()[axis] {
                rule.normals = Some(normals);
                return Ok(rule);
            }
            let top = support.hi().last();
            let bottom = support.lo().last().max(eps);
            if !(top > bottom) {
                rule.normals = Some(normals);
                return Ok(rule);
            }
            // free coordinates: all horizontal except `axis`, then ln x_n
            let free: Vec<usize> = (0..n - 1).filter(|&i| i != axis).collect();
            let mut axes: Vec<Vec<(f64, f64)>> = free
                .iter()
                .map(|&i| composite(support.lo()[i], support.hi()[i], panels, order))
                .collect();
            axes.push(composite(bottom.ln(), top.ln(), panels, order));
            let normal = Vector::unit(n, axis);
            for_each_tensor(&axes, |vals, w| {
                let mut x = Vector::zeros(n);
                x[axis] = offset;
                for (k, &i) in free.iter().enumerate() {
                    x[i] = vals[k];
                }
                let h = vals[vals.len() - 1].exp();
                x[n - 1] = h;
                rule.nodes.push(x);
                rule.weights.push(w * h * s.measure_density(&x));
                normals.push(normal);
            });
        }
        Hypersurface::Hemisphere { center, radius } => {
            let mut floor = eps;
            let mut ceiling = radius;
            if let Some(b) = &truncation.support {
                floor = floor.max(b.lo().last());
                ceiling = ceiling.min(b.hi().last());
            }
            if floor >= radius || ceiling <= floor {
                rule.normals = Some(normals);
                return Ok(rule);
            }
            // polar angle from the apex: |θ| ∈ [θ_in, θ_out]
            let theta_out = (floor / radius).clamp(-1.0, 1.0).acos();
            let theta_in = (ceiling / radius).clamp(-1.0, 1.0).acos();
            match n {
                2 => {
                    let mut intervals = vec![(-theta_out, -theta_in), (theta_in, theta_out)];
                    if theta_in == 0.0 {
                        intervals = vec![(-theta_out, theta_out)];
                    }
                    if let Some(b) = &truncation.support {
                        let a0 = ((b.lo()[0] - center[0]) / radius).clamp(-1.0, 1.0).asin();
                        let a1 = ((b.hi()[0] - center[0]) / radius).clamp(-1.0, 1.0).asin();
                        intervals = intersect_intervals(&intervals, &[(a0, a1)]);
                    }
                    let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
                    for (a, b) in intervals {
                        let p = ((panels as f64 * (b - a) / total).ceil() as usize).max(1);
                        for (t, w) in composite(a, b, p, order) {
                            let x = s.hemisphere_point(t, 0.0).unwrap();
                            rule.nodes.push(x);
                            rule.weights.push(w * radius * s.measure_density(&x));
                            normals.push(s.normal_components(&x));
                        }
                    }
                }
                3 => {
                    let polar = composite(theta_in, theta_out, panels, order);
                    let window = truncation
                        .support
                        .as_ref()
                        .and_then(|b| azimuth_window(b.lo(), b.hi(), &center));
                    let azimuth = match window {
                        Some((a, b)) => composite(a, b, panels, order),
                        None => trapezoid_periodic(panels * order),
                    };
                    for &(t, wt) in &polar {
                        let st = t.sin();
                        for &(p, wp) in &azimuth {
                            let x = s.hemisphere_point(t, p).unwrap();
                            rule.nodes.push(x);
                            rule.weights
                                .push(wt * wp * radius * radius * st * s.measure_density(&x));
                            normals.push(s.normal_components(&x));
                        }
                    }
                }
                _ => return Err(Error::UnsupportedDimension(n)),
            }
        }
    }
    rule.normals = Some(normals);
    Ok(rule)
}

pub(crate) fn for_each_tensor(axes: &[Vec<(f64, f64)>], mut f: impl FnMut(&[f64], f64)) {
    let d = axes.len();
    if axes.iter().any(|a| a.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; d];
    let mut vals = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (x, wk) = axes[k][idx[k]];
            vals[k] = x;
            w *= wk;
        }
        f(&vals, w);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Volume rule for the given domain, truncated to the declared support.
/// Hyperbolic domains carry the weight `x_n^{-n}` of `dV_g`.
pub fn volume_rule(
    domain: VolumeDomain,
    support: Option<&SupportBox>,
    dim: usize,
    accuracy: &Accuracy,
) -> Result<QuadratureRule> {
    accuracy.validate()?;
    if let Some(b) = support {
        if b.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: b.dim(),
            });
        }
    }
    let mut rule = QuadratureRule::new(RuleDomain::Volume(domain), *accuracy);
    let (panels, order) = (accuracy.panels, accuracy.order);
    match domain {
        VolumeDomain::Ball { radius } => {
            if !(radius > 0.0) {
                return Err(invalid("ball radius must be positive"));
            }
            let sphere = sphere_rule(dim, accuracy)?;
            let radial = composite(0.0, radius, panels, order);
            push_polar(&mut rule, &radial, &sphere, dim);
        }
        VolumeDomain::ExteriorOfBall { r_max } => {
            let b = support.ok_or(Error::UnboundedSupport)?;
            let origin = Vector::zeros(dim);
            let far = b.farthest_distance(&origin);
            if far > r_max {
                return Err(Error::SupportExceedsTruncation(format!(
                    "support reaches |x| = {far}, beyond r_max = {r_max}"
                )));
            }
            let r_lo = b.nearest_distance(&origin).max(1.0);
            if far <= r_lo {
                return Ok(rule);
            }
            let radial = composite(r_lo, far, panels, order);
            match dim {
                2 => {
                    let angular = match azimuth_window(b.lo(), b.hi(), &origin) {
                        Some((a0, a1)) => composite(a0, a1, panels, order),
                        None => trapezoid_periodic(panels * order),
                    };
                    for &(r, wr) in &radial {
                        for &(t, wt) in &angular {
                            rule.nodes.push(Vector::from([r * t.cos(), r * t.sin()]));
                            rule.weights.push(wr * wt * r);
                        }
                    }
                }
                3 => {
                    let sphere = sphere_rule(3, accuracy)?;
                    push_polar(&mut rule, &radial, &sphere, 3);
                }
                _ => return Err(Error::UnsupportedDimension(dim)),
            }
        }
        VolumeDomain::Euclidean => {
            let b = support.ok_or(Error::UnboundedSupport)?;
            let axes: Vec<Vec<(f64, f64)>> = (0..dim)
                .map(|i| composite(b.lo()[i], b.hi()[i], panels, order))
                .collect();
            for_each_tensor(&axes, |vals, w| {
                rule.nodes.push(Vector::from_slice(vals));
                rule.weights.push(w);
            });
        }
        VolumeDomain::HalfSpaceX1Positive | VolumeDomain::FullHalfSpaceChart => {
            let b = support.ok_or(Error::UnboundedSupport)?;
            if dim < 1 {
                return Err(Error::UnsupportedDimension(dim));
            }
            let bottom = b.lo().last();
            if !(bottom > 0.0) {
                return Err(Error::SupportExceedsTruncation(format!(
                    "support reaches the ideal boundary (x_n >= {bottom})"
                )));
            }
            let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(dim);
            for i in 0..dim - 1 {
                let mut lo = b.lo()[i];
                let hi = b.hi()[i];
                if i == 0 && domain == VolumeDomain::HalfSpaceX1Positive {
                    lo = lo.max(0.0);
                }
                axes.push(composite(lo, hi, panels, order));
            }
            axes.push(composite(bottom.ln(), b.hi().last().ln(), panels, order));
            let n = dim as i32;
            for_each_tensor(&axes, |vals, w| {
                let mut x = Vector::from_slice(vals);
                let h = vals[dim - 1].exp();
                x[dim - 1] = h;
                rule.nodes.push(x);
                rule.weights.push(w * h.powi(1 - n));
            });
        }
    }
    Ok(rule)
}

fn push_polar(rule: &mut QuadratureRule, radial: &[(f64, f64)], sphere: &QuadratureRule, dim: usize) {
    for &(r, wr) in radial {
        let jac = r.powi(dim as i32 - 1);
        for (omega, ws) in sphere.nodes().iter().zip(sphere.weights()) {
            rule.nodes.push(omega.scale(r));
            rule.weights.push(wr * ws * jac);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_moments() {
        for order in [1, 2, 5, 8, 17, 64] {
            let (x, w) = gauss_legendre(order);
            for deg in 0..2 * order {
                let q: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "order {order} deg {deg}: {q}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = adaptive_integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert_relative_eq!(v, exact, max_relative = 1e-10);
    }

    #[test]
    fn sphere_masses() {
        let acc = Accuracy::default();
        assert_relative_eq!(sphere_rule(2, &acc).unwrap().total_weight(), 2.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(sphere_rule(3, &acc).unwrap().total_weight(), 4.0 * PI, epsilon = 1e-12);
        let r = sphere_rule(2, &acc).unwrap();
        assert_relative_eq!(r.integrate(|x| x[0] * x[0]), PI, epsilon = 1e-12);
        assert_eq!(sphere_rule(4, &acc).unwrap_err(), Error::UnsupportedDimension(4));
    }

    #[test]
    fn sphere_moment_battery() {
        // ∫ x^a y^b z^c dσ over 𝕊² for even exponents: 2 Γ(α)Γ(β)Γ(γ)/Γ(α+β+γ), α = (a+1)/2
        fn gamma_half(k: usize) -> f64 {
            // Γ(k/2)
            if k == 2 {
                1.0
            } else if k == 1 {
                PI.sqrt()
            } else {
                (k as f64 / 2.0 - 1.0) * gamma_half(k - 2)
            }
        }
        let acc = Accuracy::default();
        let rule = sphere_rule(3, &acc).unwrap();
        let deg = rule.exact_degree().unwrap();
        for a in (0..=6i32).step_by(2) {
            for b in (0..=6i32).step_by(2) {
                for c in (0..=6i32).step_by(2) {
                    if (a + b + c) as usize > deg {
                        continue;
                    }
                    let q = rule.integrate(|x| x[0].powi(a) * x[1].powi(b) * x[2].powi(c));
                    let exact =
                        2.0 * gamma_half(a as usize + 1) * gamma_half(b as usize + 1) * gamma_half(c as usize + 1)
                            / gamma_half((a + b + c) as usize + 3);
                    assert!((q - exact).abs() < 1e-12, "{a} {b} {c}: {q} vs {exact}");
                }
            }
        }
        let odd = rule.integrate(|x| x[0] * x[1].powi(2) * x[2]);
        assert!(odd.abs() < 1e-12);
    }

    #[test]
    fn gaussian_over_plane() {
        let b = SupportBox::around(&Vector::zeros(2), 9.0);
        let rule = volume_rule(VolumeDomain::Euclidean, Some(&b), 2, &Accuracy::new(12, 8)).unwrap();
        assert_relative_eq!(rule.integrate(|x| (-x.norm_squared()).exp()), PI, epsilon = 1e-10);
    }

    #[test]
    fn exterior_rule_refuses_truncated_support() {
        let b = SupportBox::around(&Vector::zeros(2), 3.0);
        let err = volume_rule(
            VolumeDomain::ExteriorOfBall { r_max: 2.0 },
            Some(&b),
            2,
            &Accuracy::default(),
        );
        assert!(matches!(err, Err(Error::SupportExceedsTruncation(_))));
        let inside = SupportBox::around(&Vector::zeros(2), 0.5);
        let rule = volume_rule(
            VolumeDomain::ExteriorOfBall { r_max: 2.0 },
            Some(&inside),
            2,
            &Accuracy::default(),
        )
        .unwrap();
        assert_eq!(rule.integrate(|_| 1.0), 0.0);
    }

    #[test]
    fn exterior_annulus_area() {
        let b = SupportBox::around(&Vector::zeros(2), 2.0);
        let rule = volume_rule(
            VolumeDomain::ExteriorOfBall { r_max: 3.0 },
            Some(&b),
            2,
            &Accuracy::default(),
        )
        .unwrap();
        // radial window reaches the corner √8, full circle
        let exact = PI * (8.0 - 1.0);
        assert_relative_eq!(rule.total_weight(), exact, max_relative = 1e-12);
    }

    #[test]
    fn ball_volume() {
        let rule = volume_rule(VolumeDomain::Ball { radius: 2.0 }, None, 3, &Accuracy::default()).unwrap();
        assert_relative_eq!(rule.total_weight(), 4.0 / 3.0 * PI * 8.0, max_relative = 1e-12);
    }

    #[test]
    fn hyperbolic_weights_cancel() {
        // ∫ x_n² bump dV_g over ℍ² equals ∫ bump dx
        let b = SupportBox::new([-1.0, 0.5], [1.0, 2.5]).unwrap();
        let bump = |x: &Vector| (-(x[0] * x[0]) * 4.0 - (x[1] - 1.5).powi(2) * 4.0).exp();
        let acc = Accuracy::new(8, 10);
        let hyp = volume_rule(VolumeDomain::FullHalfSpaceChart, Some(&b), 2, &acc).unwrap();
        let euc = volume_rule(VolumeDomain::Euclidean, Some(&b), 2, &acc).unwrap();
        let lhs = hyp.integrate(|x| x[1] * x[1] * bump(x));
        let rhs = euc.integrate(bump);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        let bad = SupportBox::new([-1.0, 0.0], [1.0, 1.0]).unwrap();
        assert!(volume_rule(VolumeDomain::FullHalfSpaceChart, Some(&bad), 2, &acc).is_err());
        assert_eq!(
            volume_rule(VolumeDomain::FullHalfSpaceChart, None, 2, &acc).unwrap_err(),
            Error::UnboundedSupport
        );
    }

    #[test]
    fn surface_rule_needs_positive_truncation() {
        let s = Hypersurface::hemisphere([0.0], 1.0).unwrap();
        let err = surface_rule(&s, &SurfaceTruncation::band(0.0), &Accuracy::default());
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hemisphere_band_matches_arc_length_oracle() {
        // ∫ dV'_g over S(0,1) ∩ {x_2 ≥ ε} in ℍ²  =  ∫ ds / x_2 along the arc
        let s = Hypersurface::hemisphere([0.0], 1.0).unwrap();
        let eps = 0.05;
        let rule = surface_rule(&s, &SurfaceTruncation::band(eps), &Accuracy::new(16, 10)).unwrap();
        let t_max = eps.acos();
        let oracle = adaptive_integrate(|t: f64| 1.0 / t.cos(), -t_max, t_max, 1e-13);
        assert_relative_eq!(rule.total_weight(), oracle, max_relative = 1e-6);
    }

    #[test]
    fn hemisphere_measure_is_dilation_invariant() {
        let acc = Accuracy::new(16, 10);
        let small = Hypersurface::hemisphere([0.0], 1.0).unwrap();
        let big = Hypersurface::hemisphere([0.0], 2.0).unwrap();
        let a = surface_rule(&small, &SurfaceTruncation::band(0.05), &acc).unwrap();
        let b = surface_rule(&big, &SurfaceTruncation::band(0.1), &acc).unwrap();
        assert_relative_eq!(a.total_weight(), b.total_weight(), max_relative = 1e-10);
    }

    #[test]
    fn hemisphere_rule_killing_singularity() {
        // ∫_{S(0,1)} x_2² dV'_g = ∫ cos θ dθ over (-π/2, π/2) = 2
        let s = Hypersurface::hemisphere([0.0], 1.0).unwrap();
        let rule = surface_rule(&s, &SurfaceTruncation::band(1e-12), &Accuracy::new(16, 10)).unwrap();
        let v = rule.integrate(|x| x[1] * x[1]);
        let oracle = adaptive_integrate(|t: f64| t.cos(), -PI / 2.0, PI / 2.0, 1e-14);
        assert_relative_eq!(v, oracle, max_relative = 1e-8);
    }

    #[test]
    fn compact_integrand_independent_of_band() {
        let s = Hypersurface::hemisphere([0.2, 0.0], 1.5).unwrap();
        let f = |x: &Vector| {
            let r2 = (x[0] - 0.5).powi(2) + x[1].powi(2) + (x[2] - 1.0).powi(2);
            if r2 < 0.25 {
                (1.0 - 4.0 * r2).powi(6)
            } else {
                0.0
            }
        };
        let acc = Accuracy::new(24, 8);
        let a = surface_rule(&s, &SurfaceTruncation::band(0.1), &acc)
            .unwrap()
            .integrate(f);
        let b = surface_rule(&s, &SurfaceTruncation::band(0.3), &acc)
            .unwrap()
            .integrate(f);
        assert!(a > 0.0);
        assert!((a - b).abs() < 1e-8 * a.abs(), "{a} {b}");
    }

    #[test]
    fn vertical_plane_tensor_oracle() {
        // Plane {x_1 = 0} in ℍ³; integrand Gaussian in (x_2, ln x_3):
        // ∫∫ g(x_2) h(ln x_3) x_3^{-2} dx_2 dx_3 = (∫ g) (∫ h(t) e^{-t} dt)
        let s = Hypersurface::vertical_plane(3, 0, 0.0).unwrap();
        let support = SupportBox::new([-1.0, -6.0, (-6.0f64).exp()], [1.0, 6.0, 6.0f64.exp()]).unwrap();
        let rule = surface_rule(&s, &SurfaceTruncation::from_support(support), &Accuracy::new(12, 10)).unwrap();
        let v = rule.integrate(|x| (-x[1] * x[1] - 2.0 * x[2].ln().powi(2)).exp());
        let g = adaptive_integrate(|y: f64| (-y * y).exp(), -6.0, 6.0, 1e-14);
        let h = adaptive_integrate(|t: f64| (-2.0 * t * t - t).exp(), -6.0, 6.0, 1e-14);
        assert_relative_eq!(v, g * h, max_relative = 1e-8);
        let missing = surface_rule(&s, &SurfaceTruncation::band(0.1), &Accuracy::default());
        assert_eq!(missing.unwrap_err(), Error::UnboundedSupport);
    }

    #[test]
    fn refinement_converges() {
        let b = SupportBox::around(&Vector::from([0.3, -0.2]), 4.0);
        let f = |x: &Vector| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() * (1.0 + x[0]).cos();
        let acc = Accuracy::new(6, 8);
        let coarse = volume_rule(VolumeDomain::Euclidean, Some(&b), 2, &acc)
            .unwrap()
            .integrate(f);
        let fine = volume_rule(VolumeDomain::Euclidean, Some(&b), 2, &acc.refined())
            .unwrap()
            .integrate(f);
        assert!((coarse - fine).abs() < acc.tolerance);
    }

    #[test]
    fn weights_are_positive() {
        let acc = Accuracy::default();
        let b = SupportBox::new([-1.0, 0.2, 0.3], [1.0, 1.0, 2.0]).unwrap();
        let rules = [
            sphere_rule(3, &acc).unwrap(),
            volume_rule(VolumeDomain::HalfSpaceX1Positive, Some(&b), 3, &acc).unwrap(),
            surface_rule(
                &Hypersurface::hemisphere([0.0, 0.0], 1.0).unwrap(),
                &SurfaceTruncation::band(0.01),
                &acc,
            )
            .unwrap(),
        ];
        for r in &rules {
            assert!(r.weights().iter().all(|&w| w > 0.0));
            assert_eq!(r.nodes().len(), r.weights().len());
        }
    }
}
