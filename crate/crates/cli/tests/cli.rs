use std::fs;
use std::path::Path;
use std::process::Command;

use borderline_cli::{Report, Summary, EXIT_CONFIG, EXIT_FAILURE, EXIT_PASS, SCHEMA};

fn bblab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bblab")).args(args).output().unwrap()
}

fn small_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn seeded_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), r#"{"instances": 2, "space": "euclidean"}"#);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = bblab(&[
            "verify-identities",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(EXIT_PASS),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    for f in ["report.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let s = summary(&a);
    assert_eq!(s.schema, SCHEMA);
    assert!(s.pass && s.checks > 0);
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let zero = small_config(tmp.path(), r#"{"tolerances": {"parts": 0}}"#);
    assert_eq!(
        bblab(&["verify-identities", "--config", &zero, "--out", out])
            .status
            .code(),
        Some(EXIT_CONFIG)
    );
    let unknown = small_config(tmp.path(), r#"{"colour": "blue"}"#);
    assert_eq!(
        bblab(&["decompose", "--config", &unknown, "--out", out]).status.code(),
        Some(EXIT_CONFIG)
    );
    assert_eq!(
        bblab(&["estimate", "--tolerance-scale", "0", "--out", out])
            .status
            .code(),
        Some(EXIT_CONFIG)
    );
    assert_eq!(
        bblab(&["estimate", "--dimension", "4"]).status.code(),
        Some(EXIT_CONFIG)
    );
    assert_eq!(
        bblab(&["verify-identities", "--config", "/nonexistent.json", "--out", out])
            .status
            .code(),
        Some(EXIT_CONFIG)
    );
    assert!(!Path::new(out).join("report.csv").exists());
}

#[test]
fn failing_checks_exit_with_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    // a tolerance no quadrature meets
    let cfg = small_config(
        tmp.path(),
        r#"{"instances": 1, "space": "euclidean", "tolerances": {"averaging": 1e-300}}"#,
    );
    let out = tmp.path().join("out");
    let o = bblab(&["verify-identities", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_FAILURE));
    assert!(!summary(&out).pass);
}

#[test]
fn estimate_writes_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        r#"{"command": "estimate", "families": ["swirl-pair"], "budget": 15, "space": "euclidean"}"#,
    );
    let out = tmp.path().join("out");
    let o = bblab(&["estimate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(EXIT_PASS),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("family,restart,index,params,ratio,best_so_far"));
    assert!(trace.lines().count() > 15);
    let s = summary(&out);
    let a = s.anchors.iter().find(|a| a.anchor == "euclidean-main").unwrap();
    assert!(a.best_constant.unwrap() > 0.0);
    let wrong = small_config(tmp.path(), r#"{"families": ["curl-pair"]}"#);
    assert_eq!(
        bblab(&["estimate", "--config", &wrong, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(EXIT_CONFIG)
    );
}

#[test]
fn decompose_writes_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), r#"{"lambdas": [0.25, 0.125, 0.0625], "split": 0.125}"#);
    let out = tmp.path().join("out");
    let o = bblab(&["decompose", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(EXIT_PASS),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let sweep = fs::read_to_string(out.join("lambda_sweep.csv")).unwrap();
    assert!(sweep.contains("sphere-decomposition") && sweep.contains("half-space-decomposition"));
}

#[test]
fn report_merge_is_order_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let shard = |name: &str, body: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    };
    let header = "check_id,anchor,kind,measured,expected,tolerance,pass\n";
    let a = shard(
        "a.csv",
        &format!("{header}x/1,coarea-identity,equality,1e-9,0.0,0.0001,true\n"),
    );
    let b = shard(
        "b.csv",
        &format!("{header}y/1,euclidean-main,lower-bound,0.2,0.0,0.0,true\ny/0,euclidean-main,lower-bound,0.3,0.0,0.0,true\n"),
    );
    let ab = tmp.path().join("ab");
    let ba = tmp.path().join("ba");
    assert_eq!(
        bblab(&["report", &a, &b, "--out", ab.to_str().unwrap()]).status.code(),
        Some(EXIT_PASS)
    );
    assert_eq!(
        bblab(&["report", &b, &a, "--out", ba.to_str().unwrap()]).status.code(),
        Some(EXIT_PASS)
    );
    for f in ["report.csv", "summary.json"] {
        assert_eq!(fs::read(ab.join(f)).unwrap(), fs::read(ba.join(f)).unwrap());
    }
    let s = summary(&ab);
    assert_eq!(s.checks, 3);
    assert_eq!(s.anchors[1].best_constant, Some(0.3));

    let empty = tmp.path().join("empty");
    assert_eq!(
        bblab(&["report", "--out", empty.to_str().unwrap()]).status.code(),
        Some(EXIT_PASS)
    );
    let s = summary(&empty);
    assert_eq!((s.checks, s.anchors.len()), (0, 0));

    let bad = shard("bad.csv", "check,anchor\n1,2\n");
    assert_eq!(
        bblab(&["report", &bad, "--out", empty.to_str().unwrap()]).status.code(),
        Some(EXIT_CONFIG)
    );
    let garbled = shard("garbled.csv", &format!("{header}x,y,sideways,1,2,3,true\n"));
    assert!(Report::merge(&[garbled]).is_err());
}
