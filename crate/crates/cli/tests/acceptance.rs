//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use borderline_cli::commands::cap_mass_slope;
use borderline_cli::{run, Command, ExperimentConfig, Overrides, Plan, Report, ReportRow, SpaceArg};
use borderline_core::harness::{family_catalog, ratio, Setting};
use borderline_core::quadrature::Accuracy;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn plan(command: Command, dimension: usize, space: Option<SpaceArg>) -> Plan {
    ExperimentConfig::default()
        .resolve(
            command.name(),
            &Overrides {
                dimension: Some(dimension),
                space,
                ..Default::default()
            },
        )
        .expect("default plan")
}

fn timed(command: Command, plan: &Plan, out: &Path) -> (Report, Duration) {
    let t = Instant::now();
    let r = run(command, plan, out).expect("run");
    (r, t.elapsed())
}

fn rows<'a>(reports: &[&'a Report], anchor: &str) -> Vec<&'a ReportRow> {
    reports
        .iter()
        .flat_map(|r| &r.rows)
        .filter(|r| r.anchor == anchor)
        .collect()
}

fn all_pass(rows: &[&ReportRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

fn worst(rows: &[&ReportRow]) -> f64 {
    rows.iter().map(|r| (r.measured - r.expected).abs()).fold(0.0, f64::max)
}

fn same_files(a: &Path, b: &Path, files: &[&str]) -> bool {
    files
        .iter()
        .all(|f| fs::read(a.join(f)).ok() == fs::read(b.join(f)).ok())
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    // identity runs shared by criteria 1-4 and 7
    let (e2, te2) = timed(
        Command::VerifyIdentities,
        &plan(Command::VerifyIdentities, 2, Some(SpaceArg::Euclidean)),
        &dir("e2"),
    );
    let (e3, te3) = timed(
        Command::VerifyIdentities,
        &plan(Command::VerifyIdentities, 3, Some(SpaceArg::Euclidean)),
        &dir("e3"),
    );
    let (h2, th2) = timed(
        Command::VerifyIdentities,
        &plan(Command::VerifyIdentities, 2, Some(SpaceArg::Hyperbolic)),
        &dir("h2"),
    );
    let (h3, _) = timed(
        Command::VerifyIdentities,
        &plan(Command::VerifyIdentities, 3, Some(SpaceArg::Hyperbolic)),
        &dir("h3"),
    );

    {
        let r2 = rows(&[&e2], "sphere-averaging");
        let r3 = rows(&[&e3], "sphere-averaging");
        let ok = r2.len() >= 5 && r3.len() >= 5 && all_pass(&r2) && all_pass(&r3);
        let ok = ok && r2.iter().chain(&r3).all(|r| r.tolerance <= 1e-6);
        let elapsed = te2 + te3;
        results.push((
            "euclidean averaging reconstruction",
            outcome(
                ok && elapsed < Duration::from_secs(60),
                format!(
                    "{}+{} pairs, max rel error {:.2e}, {:.1}s",
                    r2.len(),
                    r3.len(),
                    worst(&r2).max(worst(&r3)),
                    elapsed.as_secs_f64()
                ),
            ),
        ));
    }

    {
        let all = [&e2, &e3, &h2, &h3];
        let sphere = rows(&all, "parts-sphere");
        let plane = rows(&all, "parts-vertical-plane");
        let per_run =
            |rs: &[&ReportRow], n: usize| rs.iter().filter(|r| r.check_id.contains(&format!("/n{n}/"))).count();
        let ok = [2, 3]
            .iter()
            .all(|&n| per_run(&sphere, n) >= 10 && per_run(&plane, n) >= 10)
            && all_pass(&sphere)
            && all_pass(&plane)
            && sphere.iter().chain(&plane).all(|r| r.tolerance <= 1e-6);
        results.push((
            "integration by parts residuals",
            outcome(
                ok,
                format!(
                    "{} sphere and {} plane instances, max residual {:.2e}",
                    sphere.len(),
                    plane.len(),
                    worst(&sphere).max(worst(&plane))
                ),
            ),
        ));
    }

    {
        let jac = rows(&[&h2, &h3], "hemisphere-jacobian");
        let weights2 = rows(&[&h2], "coarea-weight");
        let spread = weights2.iter().map(|r| r.measured).fold(f64::NEG_INFINITY, f64::max)
            - weights2.iter().map(|r| r.measured).fold(f64::INFINITY, f64::min);
        let ok = jac.len() == 2
            && all_pass(&jac)
            && jac
                .iter()
                .all(|r| r.tolerance <= 1e-6 && r.check_id.ends_with("max-of-100"))
            && weights2.len() >= 2
            && all_pass(&rows(&[&h2, &h3], "coarea-weight"))
            && weights2.iter().all(|r| r.expected == PI && r.tolerance <= 1e-8)
            && spread <= 1e-8;
        results.push((
            "hemisphere jacobian and coarea weight",
            outcome(
                ok,
                format!(
                    "jacobian max rel {:.2e}, weight spread {spread:.2e}, |w - pi| {:.2e}",
                    worst(&jac),
                    worst(&weights2)
                ),
            ),
        ));
    }

    {
        let r = rows(&[&h2], "coarea-identity");
        let ok = r.len() == 1 && all_pass(&r) && r[0].tolerance <= 1e-4 && th2 < Duration::from_secs(300);
        results.push((
            "coarea identity on reference bump",
            outcome(
                ok,
                format!("rel error {:.2e}, hyperbolic run {:.1}s", worst(&r), th2.as_secs_f64()),
            ),
        ));
    }

    {
        let slopes: Vec<ReportRow> = [2, 3].iter().map(|&n| cap_mass_slope(n, 0.05).unwrap()).collect();
        let ok = slopes.iter().all(|r| r.pass);
        let detail = slopes
            .iter()
            .map(|r| format!("{:.4}", r.measured))
            .collect::<Vec<_>>()
            .join(", ");
        results.push((
            "cap mass scaling slope",
            outcome(ok, format!("slopes {detail} (targets 1, 2)")),
        ));
    }

    {
        let (d2, _) = timed(Command::Decompose, &plan(Command::Decompose, 2, None), &dir("d2"));
        let (d3, _) = timed(Command::Decompose, &plan(Command::Decompose, 3, None), &dir("d3"));
        let ds = [&d2, &d3];
        let suites: Vec<&ReportRow> = ds
            .iter()
            .flat_map(|r| &r.rows)
            .filter(|r| r.check_id.ends_with("/bounded-ratio"))
            .collect();
        let additivity: Vec<&ReportRow> = ds
            .iter()
            .flat_map(|r| &r.rows)
            .filter(|r| r.check_id.ends_with("/additivity"))
            .collect();
        let ok = suites.len() == 4
            && all_pass(&suites)
            && !additivity.is_empty()
            && all_pass(&additivity)
            && additivity.iter().all(|r| r.tolerance <= 1e-10);
        results.push((
            "decomposition certificates",
            outcome(
                ok,
                format!(
                    "{} suites, {} additivity rows, max additivity {:.2e}",
                    suites.len(),
                    additivity.len(),
                    worst(&additivity)
                ),
            ),
        ));
    }

    {
        let hardy = rows(&[&h2, &h3], "hardy-inequality");
        let sharp = rows(&[&h2, &h3], "hardy-sharpness");
        let covered = ["/n2/p2/", "/n2/p3/", "/n3/p3/"]
            .iter()
            .all(|k| hardy.iter().any(|r| r.check_id.contains(k)) && sharp.iter().any(|r| r.check_id.contains(k)));
        let ok = covered && all_pass(&hardy) && all_pass(&sharp) && hardy.iter().all(|r| r.tolerance <= 1e-6);
        let closest = hardy.iter().map(|r| r.measured / r.expected).fold(0.0, f64::max);
        results.push((
            "hardy inequality and sharpness",
            outcome(ok, format!("{} ratios, largest ratio/bound {closest:.4}", hardy.len())),
        ));
    }

    {
        let acc = Accuracy::new(16, 8);
        let mut dev: f64 = 0.0;
        let mut count = 0;
        for n in [2, 3] {
            for fam in family_catalog(Setting::EuclideanMain, n).unwrap() {
                let (f, phi) = fam.fields(&fam.center()).unwrap();
                let base = ratio(&f, &phi, Setting::EuclideanMain, &acc).unwrap().ratio;
                for eps in [0.5, 2.0] {
                    let r = ratio(
                        &f.l1_dilate(eps).unwrap(),
                        &phi.dilate(eps).unwrap(),
                        Setting::EuclideanMain,
                        &acc,
                    )
                    .unwrap()
                    .ratio;
                    dev = dev.max((r - base).abs() / base);
                    count += 1;
                }
            }
        }
        results.push((
            "dilation invariance",
            outcome(dev < 1e-6, format!("{count} dilations, max rel change {dev:.2e}")),
        ));
    }

    {
        let t = Instant::now();
        let s2 = run(Command::Estimate, &plan(Command::Estimate, 2, None), &dir("s2")).unwrap();
        let s3 = run(Command::Estimate, &plan(Command::Estimate, 3, None), &dir("s3")).unwrap();
        let elapsed = t.elapsed();
        let again = run(Command::Estimate, &plan(Command::Estimate, 2, None), &dir("s2b")).unwrap();
        let deterministic = again
            .rows
            .iter()
            .zip(&s2.rows)
            .all(|(a, b)| a.check_id == b.check_id && a.measured.to_bits() == b.measured.to_bits())
            && again.rows.len() == s2.rows.len()
            && same_files(&dir("s2"), &dir("s2b"), &["trace.csv"]);
        let mut detail = Vec::new();
        let mut ok = deterministic && elapsed < Duration::from_secs(1800);
        for anchor in ["euclidean-main", "hyperbolic-main", "euclidean-low-order"] {
            let rs = rows(&[&s2, &s3], anchor);
            let best: Vec<&&ReportRow> = rs.iter().filter(|r| r.check_id.ends_with("/best")).collect();
            let change: Vec<&ReportRow> = rs
                .iter()
                .copied()
                .filter(|r| r.check_id.ends_with("/resolution-change"))
                .collect();
            ok &= !best.is_empty() && best.iter().all(|r| r.pass) && all_pass(&change);
            ok &= change.iter().all(|r| r.tolerance <= 0.01);
            let top = best.iter().map(|r| r.measured).fold(0.0, f64::max);
            detail.push(format!("{anchor} {top:.4} (max change {:.1e})", worst(&change)));
        }
        results.push((
            "constant estimation",
            outcome(
                ok,
                format!(
                    "{}, {:.0}s, deterministic {deterministic}",
                    detail.join(", "),
                    elapsed.as_secs_f64()
                ),
            ),
        ));
    }

    {
        let bin = env!("CARGO_BIN_EXE_bblab");
        let cli = |args: &[&str], out: &Path| {
            Process::new(bin)
                .args(args)
                .args(["--seed", "11", "--out", out.to_str().unwrap()])
                .output()
                .map(|o| o.status.success())
                .unwrap_or(false)
        };
        let mut ok = true;
        for (name, args, files) in [
            (
                "identities",
                vec!["verify-identities", "--dimension", "2"],
                vec!["report.csv", "summary.json"],
            ),
            (
                "decompose",
                vec!["decompose", "--dimension", "2"],
                vec!["report.csv", "summary.json", "lambda_sweep.csv"],
            ),
            (
                "estimate",
                vec!["estimate", "--dimension", "2"],
                vec!["report.csv", "summary.json", "trace.csv"],
            ),
        ] {
            let a = dir(&format!("cli-{name}-a"));
            let b = dir(&format!("cli-{name}-b"));
            ok &= cli(&args, &a) && cli(&args, &b) && same_files(&a, &b, &files);
        }
        results.push((
            "byte-identical cli reruns",
            outcome(ok, "identities, decompose and estimate"),
        ));
    }

    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "{} criterion {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
