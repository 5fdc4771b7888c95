use std::fmt;
use std::sync::Arc;

use super::{ratio, RatioRecord, Setting};
use crate::error::{invalid, Error, Result};
use crate::fields::catalog::{curl3, gaussian, gradient_field, swirl, tube};
use crate::fields::{hyperbolic_lift, make_divfree_hyperbolic, VectorField};
use crate::linalg::Vector;
use crate::quadrature::Accuracy;

/// Most parameters a family may have.
pub const MAX_FAMILY_PARAMS: usize = 8;

pub type FamilyBuilder = Arc<dyn Fn(&[f64]) -> Result<(VectorField, VectorField)> + Send + Sync>;

/// A named parametric family of pairs `(f, φ)` over a parameter box.
#[derive(Clone)]
pub struct FamilySpec {
    pub id: String,
    pub setting: Setting,
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    build: FamilyBuilder,
}

impl fmt::Debug for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilySpec")
            .field("id", &self.id)
            .field("setting", &self.setting)
            .field("dim", &self.dim)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish()
    }
}

impl FamilySpec {
    pub fn new(
        id: impl Into<String>,
        setting: Setting,
        dim: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        build: impl Fn(&[f64]) -> Result<(VectorField, VectorField)> + Send + Sync + 'static,
    ) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_FAMILY_PARAMS {
            return Err(invalid(format!(
                "parameter box must have 1..={MAX_FAMILY_PARAMS} matching bounds"
            )));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
        {
            return Err(invalid("parameter box needs finite lo <= hi"));
        }
        Ok(Self {
            id: id.into(),
            setting,
            dim,
            lo,
            hi,
            build: Arc::new(build),
        })
    }

    pub fn params(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Parameters from unit-cube coordinates (clamped into the cube).
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(t, (a, b))| a + t.clamp(0.0, 1.0) * (b - a))
            .collect()
    }

    pub fn fields(&self, params: &[f64]) -> Result<(VectorField, VectorField)> {
        if params.len() != self.params() {
            return Err(Error::DimensionMismatch {
                expected: self.params(),
                actual: params.len(),
            });
        }
        (self.build)(params)
    }

    pub fn evaluate(&self, params: &[f64], accuracy: &Accuracy) -> Result<RatioRecord> {
        let (f, phi) = self.fields(params)?;
        let mut r = ratio(&f, &phi, self.setting, accuracy)?;
        r.family = self.id.clone();
        r.params = params.to_vec();
        Ok(r)
    }
}

/// Quadrature accuracy used for family evaluations in dimension `n`.
pub fn default_family_accuracy(n: usize) -> Accuracy {
    match n {
        2 => Accuracy::new(16, 8),
        _ => Accuracy::new(6, 8),
    }
}

fn v2(a: f64, b: f64) -> Vector {
    Vector::from([a, b])
}

fn v3(a: f64, b: f64, c: f64) -> Vector {
    Vector::from([a, b, c])
}

/// The built-in families for a setting and dimension (`n ∈ {2, 3}`).
///
/// Gaussian-based fields count as compactly supported on their `±6w` boxes.
/// Hyperbolic families sit around height 1 with widths small enough for the
/// boxes to stay inside the chart.
pub fn family_catalog(setting: Setting, dim: usize) -> Result<Vec<FamilySpec>> {
    let fams = match (setting, dim) {
        (Setting::EuclideanMain, 2) => vec![
            FamilySpec::new(
                "swirl-pair",
                setting,
                2,
                vec![-1.5, -1.5, 0.2],
                vec![1.5, 1.5, 2.0],
                |p| Ok((swirl(&v2(0.0, 0.0), 0.5, 1.0), swirl(&v2(p[0], p[1]), p[2], 1.0))),
            )?,
            FamilySpec::new("jet-pair", setting, 2, vec![0.1, 0.1, 0.2], vec![1.0, 1.0, 2.0], |p| {
                Ok((
                    tube(&v2(0.0, 0.0), &v2(0.5, 0.5 * p[0]), 1.0),
                    tube(&v2(0.0, 0.0), &v2(p[2], p[2] * p[1]), 1.0),
                ))
            })?,
            FamilySpec::new(
                "double-swirl",
                setting,
                2,
                vec![0.0, -1.0, 0.2],
                vec![2.0, 1.0, 2.0],
                |p| {
                    let f = swirl(&v2(-0.5 * p[0], 0.0), 0.4, 1.0).add(&swirl(&v2(0.5 * p[0], 0.0), 0.4, p[1]))?;
                    Ok((f, swirl(&v2(0.0, 0.0), p[2], 1.0)))
                },
            )?,
        ],
        (Setting::EuclideanMain, 3) => vec![
            FamilySpec::new("curl-pair", setting, 3, vec![-1.0, 0.2], vec![1.0, 1.5], |p| {
                Ok((
                    curl3(&v3(0.0, 0.0, 0.0), 0.5, 1.0)?,
                    curl3(&v3(p[0], 0.0, 0.0), p[1], 1.0)?,
                ))
            })?,
            FamilySpec::new("curl-offset", setting, 3, vec![-1.0, 0.2], vec![1.0, 1.5], |p| {
                Ok((
                    curl3(&v3(0.0, 0.0, 0.0), 0.5, 1.0)?,
                    curl3(&v3(0.0, 0.0, p[0]), p[1], -1.0)?,
                ))
            })?,
        ],
        (Setting::HyperbolicMain, 2) => vec![
            FamilySpec::new(
                "lifted-swirl",
                setting,
                2,
                vec![-0.5, 0.04, 0.04],
                vec![0.5, 0.15, 0.15],
                |p| {
                    Ok((
                        make_divfree_hyperbolic(&swirl(&v2(0.0, 1.0), p[1], 1.0))?,
                        hyperbolic_lift(&swirl(&v2(p[0], 1.0), p[2], 1.0))?,
                    ))
                },
            )?,
            FamilySpec::new("lifted-jet", setting, 2, vec![0.1, 0.1], vec![1.0, 1.0], |p| {
                Ok((
                    make_divfree_hyperbolic(&tube(&v2(0.0, 1.0), &v2(0.14, 0.14 * p[0]), 1.0))?,
                    hyperbolic_lift(&tube(&v2(0.0, 1.0), &v2(0.14, 0.14 * p[1]), 1.0))?,
                ))
            })?,
        ],
        (Setting::HyperbolicMain, 3) => vec![FamilySpec::new(
            "lifted-curl",
            setting,
            3,
            vec![-0.3, 0.05],
            vec![0.3, 0.15],
            |p| {
                Ok((
                    make_divfree_hyperbolic(&curl3(&v3(0.0, 0.0, 1.0), 0.12, 1.0)?)?,
                    hyperbolic_lift(&curl3(&v3(p[0], 0.0, 1.0), p[1], 1.0)?)?,
                ))
            },
        )?],
        (Setting::EuclideanLowOrder, 2) => vec![FamilySpec::new(
            "source-swirl",
            setting,
            2,
            vec![0.0, -1.0, 0.2],
            vec![2.0, 1.0, 2.0],
            |p| {
                let f = swirl(&v2(0.0, 0.0), 0.5, 1.0).add(&gradient_field(&gaussian(&v2(0.0, 0.0), 0.5, p[0])))?;
                let c = v2(p[1], 0.0);
                let phi = swirl(&c, p[2], 1.0).add(&gradient_field(&gaussian(&c, p[2], 1.0)))?;
                Ok((f, phi))
            },
        )?],
        (Setting::EuclideanLowOrder, 3) => vec![FamilySpec::new(
            "source-curl",
            setting,
            3,
            vec![0.0, 0.2],
            vec![2.0, 1.5],
            |p| {
                let o = v3(0.0, 0.0, 0.0);
                let f = curl3(&o, 0.5, 1.0)?.add(&gradient_field(&gaussian(&o, 0.5, p[0])))?;
                let phi = curl3(&o, p[1], 1.0)?.add(&gradient_field(&gaussian(&o, p[1], 1.0)))?;
                Ok((f, phi))
            },
        )?],
        (_, n) => return Err(Error::UnsupportedDimension(n)),
    };
    Ok(fams)
}

/// Looks a family up by id across all settings and dimensions.
pub fn find_family(id: &str) -> Option<FamilySpec> {
    Setting::ALL
        .iter()
        .flat_map(|&s| [2, 3].into_iter().map(move |n| (s, n)))
        .filter_map(|(s, n)| family_catalog(s, n).ok())
        .flatten()
        .find(|f| f.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_evaluates_at_its_centre() {
        for s in Setting::ALL {
            for fam in family_catalog(s, 2).unwrap() {
                let r = fam.evaluate(&fam.center(), &Accuracy::new(8, 8)).unwrap();
                assert!(r.ratio.is_finite() && r.ratio > 0.0, "{}: {}", fam.id, r.ratio);
            }
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(find_family("curl-pair").unwrap().dim, 3);
        assert!(find_family("nope").is_none());
        let fam = find_family("swirl-pair").unwrap();
        assert!(fam.fields(&[0.0]).is_err());
        assert_eq!(fam.from_unit(&[0.0, 1.0, 2.0]), vec![-1.5, 1.5, 2.0]);
    }
}
