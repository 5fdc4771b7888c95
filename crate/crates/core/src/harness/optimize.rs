use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FamilySpec, RatioRecord};
use crate::error::{invalid, Result};
use crate::quadrature::Accuracy;

/// Search budget for [`estimate_constant`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    /// Total ratio evaluations, split evenly over the restarts.
    pub evaluations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop a restart once the simplex diameter (in unit-cube coordinates)
    /// drops below this.
    pub tolerance: f64,
}

impl Budget {
    pub fn new(evaluations: usize, seed: u64) -> Self {
        Self {
            evaluations,
            restarts: 5,
            seed,
            tolerance: 1e-3,
        }
    }
}

/// One evaluation in a search.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub index: usize,
    pub restart: usize,
    pub params: Vec<f64>,
    pub ratio: f64,
    pub best_so_far: f64,
}

/// Best ratio found (a lower bound on the optimal constant) and the search
/// trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub best: RatioRecord,
    pub trace: Vec<TraceRow>,
}

/// Derivative-free maximization of the family's ratio over its parameter
/// box: Nelder–Mead in unit-cube coordinates (points clamped into the cube),
/// restarted from the box centre and from seeded random points.
///
/// Restarts run in parallel; the trace lists them in restart order, so the
/// result depends only on the seed.
pub fn estimate_constant(family: &FamilySpec, budget: &Budget, accuracy: &Accuracy) -> Result<Estimate> {
    if budget.evaluations == 0 || budget.restarts == 0 {
        return Err(invalid("search budget must be positive"));
    }
    if !(budget.tolerance > 0.0) {
        return Err(invalid("search tolerance must be positive"));
    }
    let d = family.params();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let starts: Vec<Vec<f64>> = (0..budget.restarts)
        .map(|k| {
            if k == 0 {
                vec![0.5; d]
            } else {
                (0..d).map(|_| rng.gen::<f64>()).collect()
            }
        })
        .collect();
    let per_restart = (budget.evaluations / budget.restarts).max(d + 2);
    let runs: Vec<Result<Vec<RatioRecord>>> = starts
        .par_iter()
        .map(|u0| nelder_mead(family, u0, per_restart, budget.tolerance, accuracy))
        .collect();

    let mut trace = Vec::new();
    let mut best: Option<RatioRecord> = None;
    for (restart, run) in runs.into_iter().enumerate() {
        for rec in run? {
            if best.as_ref().is_none_or(|b| rec.ratio > b.ratio) {
                best = Some(rec.clone());
            }
            trace.push(TraceRow {
                index: trace.len(),
                restart,
                params: rec.params,
                ratio: rec.ratio,
                best_so_far: best.as_ref().unwrap().ratio,
            });
        }
    }
    Ok(Estimate {
        best: best.expect("at least one evaluation"),
        trace,
    })
}

fn nelder_mead(
    family: &FamilySpec,
    u0: &[f64],
    max_evals: usize,
    tolerance: f64,
    accuracy: &Accuracy,
) -> Result<Vec<RatioRecord>> {
    let d = u0.len();
    let mut log = Vec::new();
    let clamp = |u: Vec<f64>| -> Vec<f64> { u.into_iter().map(|t| t.clamp(0.0, 1.0)).collect() };
    let eval = |u: &[f64], log: &mut Vec<RatioRecord>| -> Result<f64> {
        let rec = family.evaluate(&family.from_unit(u), accuracy)?;
        let r = rec.ratio;
        log.push(rec);
        Ok(r)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = clamp(u0.to_vec());
    let f0 = eval(&v0, &mut log)?;
    simplex.push((v0.clone(), f0));
    for i in 0..d {
        let mut v = v0.clone();
        v[i] += if v[i] + 0.25 <= 1.0 { 0.25 } else { -0.25 };
        let f = eval(&v, &mut log)?;
        simplex.push((v, f));
    }

    while log.len() < max_evals {
        // maximize: best first
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < tolerance {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|i| simplex[..d].iter().map(|(v, _)| v[i]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let along =
            |t: f64| -> Vec<f64> { clamp(centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()) };
        let xr = along(1.0);
        let fr = eval(&xr, &mut log)?;
        if fr > simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut log)?;
            simplex[d] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr > worst.1 {
                let x = along(0.5);
                let f = eval(&x, &mut log)?;
                (x, f)
            } else {
                let x = along(-0.5);
                let f = eval(&x, &mut log)?;
                (x, f)
            };
            if fc > worst.1.max(fr) {
                simplex[d] = (xc, fc);
            } else {
                // shrink towards the best vertex
                let best = simplex[0].0.clone();
                for k in 1..=d {
                    let v: Vec<f64> = simplex[k].0.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let f = eval(&v, &mut log)?;
                    simplex[k] = (v, f);
                    if log.len() >= max_evals {
                        break;
                    }
                }
            }
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog::{gaussian, gradient_field};
    use crate::fields::{make_divfree_euclidean, Potential};
    use crate::harness::Setting;
    use crate::linalg::Vector;

    #[test]
    fn zero_budget_rejected() {
        let fam = crate::harness::find_family("swirl-pair").unwrap();
        assert!(estimate_constant(&fam, &Budget::new(0, 1), &Accuracy::new(4, 4)).is_err());
    }

    #[test]
    fn degenerate_family_gives_zero() {
        let fam = FamilySpec::new("perp", Setting::EuclideanMain, 2, vec![0.3], vec![1.0], |p| {
            let psi = gaussian(&Vector::from([0.0, 0.0]), p[0], 1.0);
            Ok((
                make_divfree_euclidean(Potential::Stream(psi.clone()))?,
                gradient_field(&psi),
            ))
        })
        .unwrap();
        let est = estimate_constant(&fam, &Budget::new(20, 3), &Accuracy::new(8, 8)).unwrap();
        assert!(est.best.ratio < 1e-12);
        assert!(est.trace.windows(2).all(|w| w[1].best_so_far >= w[0].best_so_far));
    }
}
