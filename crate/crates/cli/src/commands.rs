use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use borderline_core::decomposition::{
    bounded_ratio_suite, c_lambda, hyperbolic_decompose, reference_gradient_norm, sphere_decompose,
    DecompositionDomain, RatioSample,
};
use borderline_core::fields::catalog::{curl3, gaussian, linear_scalar, poly_bump, swirl, tube};
use borderline_core::fields::{hyperbolic_lift, make_divfree_hyperbolic, ScalarField, VectorField};
use borderline_core::functionals::{pairing, verify_parts_euclidean, verify_parts_hyperbolic};
use borderline_core::geometry::{sphere_area, Point};
use borderline_core::harness::{
    default_family_accuracy, estimate_constant, family_catalog, find_family, hardy_check, hardy_sharpness_family,
    Budget, FamilySpec, Setting,
};
use borderline_core::identities::{
    coarea_weight, gram_jacobian_fd, hemisphere_average_pairing, phi_jacobian, spherical_average_pairing, verify_coarea,
};
use borderline_core::linalg::Vector;
use borderline_core::quadrature::Accuracy;

use crate::config::{Plan, SpaceArg};
use crate::report::{Report, ReportRow};
use crate::CliError;

const JACOBIAN_POINTS: usize = 100;
const AVERAGING_PAIRS: usize = 5;

fn accuracy_or(plan: &Plan, default: Accuracy) -> Accuracy {
    plan.accuracy.map_or(default, |a| Accuracy::new(a.panels, a.order))
}

fn point(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> Vector {
    Vector::from_slice(
        &(0..n)
            .map(|_| rng.gen_range(-half_width..half_width))
            .collect::<Vec<_>>(),
    )
}

fn at_height(rng: &mut ChaCha8Rng, n: usize, spread: f64, lo: f64, hi: f64) -> Vector {
    let mut x = point(rng, n, spread);
    x[n - 1] = rng.gen_range(lo..hi);
    x
}

/// A compactly supported divergence-free Cartesian field.
fn euclidean_divfree(rng: &mut ChaCha8Rng, n: usize) -> Result<VectorField, CliError> {
    let c = point(rng, n, 0.5);
    let w = rng.gen_range(0.3..0.6);
    let a = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    Ok(match n {
        2 if rng.gen_bool(0.3) => tube(&c, &Vector::from([w, w * rng.gen_range(0.3..1.0)]), a),
        2 => swirl(&c, w, a),
        _ => curl3(&c, w, a)?,
    })
}

fn hyperbolic_swirl(c: &Vector, w: f64, a: f64) -> Result<VectorField, CliError> {
    Ok(match c.dim() {
        2 => swirl(c, w, a),
        _ => curl3(c, w, a)?,
    })
}

// ---------------------------------------------------------------- identities

pub fn verify_identities(plan: &Plan) -> Result<Report, CliError> {
    let mut report = Report::new("verify-identities");
    let n = plan.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    for space in &plan.spaces {
        match space {
            SpaceArg::Euclidean => euclidean_identities(plan, n, &mut rng, &mut report)?,
            SpaceArg::Hyperbolic => hyperbolic_identities(plan, n, &mut rng, &mut report)?,
        }
    }
    Ok(report)
}

fn euclidean_identities(plan: &Plan, n: usize, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let tol = plan.tolerances;
    let direct_acc = accuracy_or(plan, Accuracy::new(16, 8));
    let avg_acc = accuracy_or(plan, Accuracy::new(12, 8));
    for k in 0..AVERAGING_PAIRS {
        let f = euclidean_divfree(rng, n)?;
        let phi = euclidean_divfree(rng, n)?;
        let direct = pairing(&f, &phi, &direct_acc)?;
        let averaged = spherical_average_pairing(&f, &phi, &avg_acc)?;
        let rel = (direct - averaged).abs() / direct.abs().max(f64::MIN_POSITIVE);
        report.push(ReportRow::equality(
            format!("sphere-averaging/n{n}/pair{k}"),
            "sphere-averaging",
            rel,
            0.0,
            tol.averaging,
        ));
    }
    for k in 0..plan.instances {
        let f = euclidean_divfree(rng, n)?;
        let c = point(rng, n, 1.0);
        let psi = gaussian(&c, rng.gen_range(0.3..0.7), 1.0);
        let check = verify_parts_euclidean(&f, &psi, &direct_acc)?;
        report.push(ReportRow::equality(
            format!("parts-sphere/n{n}/instance{k}"),
            "parts-sphere",
            check.residual,
            0.0,
            tol.parts,
        ));
    }
    Ok(())
}

fn hyperbolic_identities(plan: &Plan, n: usize, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), CliError> {
    let tol = plan.tolerances;
    let acc = accuracy_or(plan, Accuracy::new(16, 8));

    let mut worst = 0.0f64;
    for _ in 0..JACOBIAN_POINTS {
        let x = Point::hyperbolic(at_height(rng, n, 2.0, 0.2, 3.0))?;
        let z = point(rng, n - 1, 3.0);
        let exact = phi_jacobian(&x, &z)?;
        let fd = gram_jacobian_fd(&x, &z, 1e-6)?;
        worst = worst.max((exact - fd).abs() / exact.abs());
    }
    report.push(ReportRow::equality(
        format!("hemisphere-jacobian/n{n}/max-of-{JACOBIAN_POINTS}"),
        "hemisphere-jacobian",
        worst,
        0.0,
        tol.jacobian,
    ));

    let expected = sphere_area(n) / 2.0;
    for k in 0..3 {
        let x = Point::hyperbolic(at_height(rng, n, 3.0, 0.05, 5.0))?;
        report.push(ReportRow::equality(
            format!("coarea-weight/n{n}/point{k}"),
            "coarea-weight",
            coarea_weight(&x)?,
            expected,
            tol.coarea_weight,
        ));
    }

    if n == 2 {
        let density = gaussian(&Vector::from([0.2, 1.0]), 0.12, 1.0);
        let check = verify_coarea(&density, &accuracy_or(plan, Accuracy::new(8, 8)))?;
        report.push(ReportRow::equality(
            "coarea-identity/n2/reference-bump",
            "coarea-identity",
            check.residual,
            0.0,
            tol.coarea,
        ));
        for k in 0..AVERAGING_PAIRS {
            let c = at_height(rng, 2, 0.1, 0.9, 1.1);
            let f = make_divfree_hyperbolic(&swirl(&c, rng.gen_range(0.1..0.14), 1.0))?;
            let d = at_height(rng, 2, 0.1, 0.9, 1.1);
            let phi = hyperbolic_lift(&swirl(&d, rng.gen_range(0.1..0.14), 1.0))?;
            let direct = pairing(&f, &phi, &acc)?;
            let averaged = hemisphere_average_pairing(&f, &phi, &acc)?;
            report.push(ReportRow::equality(
                format!("hemisphere-averaging/n2/pair{k}"),
                "hemisphere-averaging",
                (direct - averaged).abs() / direct.abs().max(f64::MIN_POSITIVE),
                0.0,
                tol.averaging,
            ));
        }
    }

    for k in 0..plan.instances {
        let c = at_height(rng, n, 0.3, 1.0, 1.6);
        let f = make_divfree_hyperbolic(&hyperbolic_swirl(&c, rng.gen_range(0.08..0.14), 1.0)?)?;
        let d = at_height(rng, n, 0.3, 1.0, 1.6);
        let psi = gaussian(&d, rng.gen_range(0.1..0.14), 1.0);
        let check = verify_parts_hyperbolic(&f, &psi, &acc)?;
        report.push(ReportRow::equality(
            format!("parts-vertical-plane/n{n}/instance{k}"),
            "parts-vertical-plane",
            check.residual,
            0.0,
            tol.parts,
        ));
    }

    hardy_rows(plan, n, report)
}

fn hardy_rows(plan: &Plan, n: usize, report: &mut Report) -> Result<(), CliError> {
    let slack = plan.tolerances.hardy;
    let exponents: &[f64] = if n == 2 { &[2.0, 3.0] } else { &[3.0] };
    let acc = accuracy_or(
        plan,
        if n == 2 {
            Accuracy::new(12, 8)
        } else {
            Accuracy::new(6, 8)
        },
    );
    let mut centre = Vector::zeros(n);
    centre[n - 1] = 1.0;
    let mut low = Vector::filled(n, 0.3);
    low[n - 1] = 0.4;
    let inputs = [
        poly_bump(&centre, 0.5, 4),
        gaussian(&centre, 0.1, 1.0),
        poly_bump(&low, 0.3, 3),
    ];
    for &p in exponents {
        for (k, phi) in inputs.iter().enumerate() {
            let h = hardy_check(phi, p, &acc)?;
            report.push(ReportRow::inequality(
                format!("hardy-inequality/n{n}/p{p}/catalog{k}"),
                "hardy-inequality",
                h.ratio,
                h.bound,
                slack,
            ));
        }
        let mut ratios = Vec::new();
        for (k, m) in hardy_sharpness_family(n, p)?.iter().enumerate() {
            let h = hardy_check(m, p, &acc)?;
            report.push(ReportRow::inequality(
                format!("hardy-inequality/n{n}/p{p}/sharpness{k}"),
                "hardy-inequality",
                h.ratio,
                h.bound,
                slack,
            ));
            ratios.push(h.ratio);
        }
        // largest backwards step; nonpositive when the family climbs
        let step = ratios.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        report.push(ReportRow::inequality(
            format!("hardy-sharpness/n{n}/p{p}/monotone"),
            "hardy-sharpness",
            step,
            0.0,
            0.0,
        ));
    }
    Ok(())
}

// ------------------------------------------------------------- decomposition

/// One row of the per-λ sweep file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub domain: String,
    pub input: String,
    pub lambda: f64,
    pub phi1_sup: f64,
    pub gradient_sup: f64,
    pub phi1_ratio: f64,
    pub gradient_ratio: f64,
    pub additivity_error: f64,
}

fn sphere_inputs(n: usize) -> Vec<(String, ScalarField)> {
    let mut off = Vector::zeros(n);
    off[0] = 0.8;
    off[1] = 0.6;
    let mut tilt = Vector::filled(n, 0.5);
    tilt[0] = 1.0;
    vec![
        ("gaussian".into(), gaussian(&off, 0.4, 1.0)),
        ("bump".into(), poly_bump(&off, 0.7, 4)),
        ("linear".into(), linear_scalar(&tilt)),
    ]
}

fn half_space_inputs(m: usize) -> Vec<(String, ScalarField)> {
    let mut c = Vector::zeros(m);
    c[m - 1] = 1.0;
    let mut d = Vector::filled(m, 0.2);
    d[m - 1] = 1.3;
    vec![
        ("bump".into(), poly_bump(&c, 0.4, 4)),
        ("gaussian".into(), gaussian(&d, 0.08, 1.0)),
    ]
}

pub fn decompose(plan: &Plan) -> Result<(Report, Vec<SweepRow>), CliError> {
    let mut report = Report::new("decompose");
    let mut sweep = Vec::new();
    let n = plan.dimension;
    let tol = plan.tolerances;
    for space in &plan.spaces {
        let (domain, inputs, anchor) = match space {
            SpaceArg::Euclidean => (
                DecompositionDomain::Sphere { n },
                sphere_inputs(n),
                "sphere-decomposition",
            ),
            // the hyperplane {x₁ = 0} of ℍⁿ, a copy of ℍⁿ⁻¹
            SpaceArg::Hyperbolic if n == 2 => {
                let p = plan.morrey_exponent.unwrap_or(2.0);
                (
                    DecompositionDomain::HalfSpace { m: 1, p },
                    half_space_inputs(1),
                    "half-space-decomposition",
                )
            }
            SpaceArg::Hyperbolic => {
                let p = plan.morrey_exponent.unwrap_or(n as f64);
                (
                    DecompositionDomain::HalfSpace { m: n - 1, p },
                    half_space_inputs(n - 1),
                    "half-space-decomposition",
                )
            }
        };
        let grad_acc = accuracy_or(plan, Accuracy::new(16, 8));
        let mut samples = Vec::new();
        for (name, phi) in &inputs {
            let g = reference_gradient_norm(phi, domain, &grad_acc)?;
            for &lambda in &plan.lambdas {
                let r = match domain {
                    DecompositionDomain::Sphere { .. } => sphere_decompose(phi, lambda)?,
                    DecompositionDomain::HalfSpace { p, .. } => hyperbolic_decompose(phi, lambda, p)?,
                };
                let c = r.certificates;
                let sample = RatioSample::from_result(name.clone(), &r, g);
                report.push(ReportRow::equality(
                    format!("{anchor}/n{n}/{name}/lambda{lambda:e}/additivity"),
                    anchor,
                    c.additivity_error,
                    0.0,
                    tol.additivity,
                ));
                sweep.push(SweepRow {
                    domain: anchor.into(),
                    input: name.clone(),
                    lambda,
                    phi1_sup: c.phi1_sup,
                    gradient_sup: match domain {
                        DecompositionDomain::Sphere { .. } => c.extension_gradient_sup,
                        DecompositionDomain::HalfSpace { .. } => c.phi2_gradient_sup,
                    },
                    phi1_ratio: sample.phi1_ratio,
                    gradient_ratio: sample.gradient_ratio,
                    additivity_error: c.additivity_error,
                });
                samples.push(sample);
            }
        }
        let suite = bounded_ratio_suite(samples, plan.split);
        report.push(ReportRow::inequality(
            format!("{anchor}/n{n}/bounded-ratio"),
            anchor,
            suite.max_ratio,
            suite.constant,
            suite.constant * 1e-9,
        ));
        if *space == SpaceArg::Euclidean {
            report.push(cap_mass_slope(n, tol.slope)?);
        }
    }
    Ok((report, sweep))
}

/// Least-squares slope of `ln c_λ` against `ln λ` on `λ = 2⁻³ … 2⁻¹⁰`.
pub fn cap_mass_slope(n: usize, tolerance: f64) -> Result<ReportRow, CliError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 3..=10 {
        let l = 2f64.powi(-k);
        xs.push(l.ln());
        ys.push(c_lambda(l, n)?.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ReportRow::equality(
        format!("cap-mass-scaling/n{n}/slope"),
        "cap-mass-scaling",
        sxy / sxx,
        n as f64 - 1.0,
        tolerance,
    ))
}

// ------------------------------------------------------------------ estimate

/// One row of the search trace file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub family: String,
    pub restart: usize,
    pub index: usize,
    pub params: String,
    pub ratio: f64,
    pub best_so_far: f64,
}

fn selected_families(plan: &Plan) -> Result<Vec<FamilySpec>, CliError> {
    let n = plan.dimension;
    let settings: Vec<Setting> = plan
        .spaces
        .iter()
        .flat_map(|s| match s {
            SpaceArg::Euclidean => vec![Setting::EuclideanMain, Setting::EuclideanLowOrder],
            SpaceArg::Hyperbolic => vec![Setting::HyperbolicMain],
        })
        .collect();
    if plan.families.is_empty() {
        let mut out = Vec::new();
        for s in settings {
            out.extend(family_catalog(s, n)?);
        }
        return Ok(out);
    }
    plan.families
        .iter()
        .map(|id| {
            let fam = find_family(id).ok_or_else(|| CliError::Config(format!("unknown family `{id}`")))?;
            if fam.dim != n || !settings.contains(&fam.setting) {
                return Err(CliError::Config(format!(
                    "family `{id}` is a {}-dimensional {} family",
                    fam.dim,
                    fam.setting.name()
                )));
            }
            Ok(fam)
        })
        .collect()
}

pub fn estimate(plan: &Plan) -> Result<(Report, Vec<TraceRecord>), CliError> {
    let mut report = Report::new("estimate");
    let mut trace = Vec::new();
    let acc = accuracy_or(plan, default_family_accuracy(plan.dimension));
    for (k, fam) in selected_families(plan)?.iter().enumerate() {
        let budget = Budget {
            restarts: plan.restarts,
            ..Budget::new(plan.budget, plan.seed.wrapping_add(k as u64))
        };
        let est = estimate_constant(fam, &budget, &acc)?;
        let anchor = fam.setting.name();
        let best = est.best.ratio;
        report.push(ReportRow::lower_bound(
            format!("{anchor}/{}/best", fam.id),
            anchor,
            best,
        ));
        // the best parameters re-evaluated with doubled panels
        let refined = fam.evaluate(&est.best.params, &acc.refined())?.ratio;
        report.push(ReportRow::equality(
            format!("{anchor}/{}/resolution-change", fam.id),
            anchor,
            (refined - best).abs() / best.abs().max(f64::MIN_POSITIVE),
            0.0,
            plan.tolerances.stability,
        ));
        for row in est.trace {
            trace.push(TraceRecord {
                family: fam.id.clone(),
                restart: row.restart,
                index: row.index,
                params: row.params.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(";"),
                ratio: row.ratio,
                best_so_far: row.best_so_far,
            });
        }
    }
    Ok((report, trace))
}
