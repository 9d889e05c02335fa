use std::process::{Command, Output};

fn invwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invwalk")).args(args).env_remove("INVWALK_BUDGET").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn exact_json() {
    let o = invwalk(&["exact", "--m", "2", "--n", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), r#"{"method":"dp","m":2,"n":3,"value":"3/2"}"#);
}

#[test]
fn gf_text() {
    let o = invwalk(&["gf", "--m", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "t / (1 - t^2)");
}

#[test]
fn quick_verify_passes() {
    let o = invwalk(&["verify", "--level", "quick"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn exit_codes() {
    let bad = invwalk(&["exact", "--m", "x", "--n", "3"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).starts_with("error kind=invalid-argument message=\""));

    let domain = invwalk(&["bounds", "--m", "2", "--n", "3"]);
    assert_eq!(domain.status.code(), Some(2));
    assert!(stderr(&domain).starts_with("error kind=domain"));

    let o = Command::new(env!("CARGO_BIN_EXE_invwalk"))
        .args(["exact", "--m", "40", "--n", "1000"])
        .env("INVWALK_BUDGET", "1000")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error kind=budget-exceeded"));
    assert!(o.stdout.is_empty());
}

#[test]
fn errors_are_single_lines() {
    for args in [&["frob"][..], &["simulate", "--m", "3"], &["sweep", "--m", "3", "--n", "m^"]] {
        let o = invwalk(args);
        assert_eq!(o.status.code(), Some(2));
        assert_eq!(stderr(&o).lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn csv_header_is_fixed() {
    let runs: [&[&str]; 6] = [
        &["exact", "--m", "3", "--n", "4", "--format", "csv"],
        &["closed", "--m", "3", "--n", "4", "--format", "csv"],
        &["eriksen", "--m", "3", "--n", "4", "--format", "csv"],
        &["bounds", "--m", "3", "--n", "4", "--format", "csv"],
        &["lazy", "--m", "3", "--n", "4", "--format", "csv"],
        &["sweep", "--m", "3:5", "--n", "m,m^2", "--methods", "dp,closed"],
    ];
    for args in runs {
        let o = invwalk(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        assert_eq!(stdout(&o).lines().next(), Some("m,n,method,value,precision_bits,flags"), "{args:?}");
    }
}

#[test]
fn exact_values_are_fractions() {
    let o = invwalk(&["sweep", "--m", "3", "--n", "m", "--methods", "dp,eriksen", "--format", "json", "--no-meta"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row["value"], "47/27");
        assert!(row["precision_bits"].is_null());
    }
    let o = invwalk(&["closed", "--m", "3", "--n", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["precision_bits"], 53);
}

#[test]
fn identical_requests_identical_output() {
    let runs: [&[&str]; 3] = [
        &["simulate", "--m", "6", "--n", "20", "--trials", "500", "--seed", "5", "--workers", "3", "--no-meta"],
        &["sweep", "--m", "4,8", "--n", "m,m^3", "--methods", "closed,predict,simulate", "--trials", "50", "--no-meta"],
        &["asym", "--m", "50", "--n", "50", "--no-meta"],
    ];
    for args in runs {
        let a = invwalk(args);
        let b = invwalk(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(!stdout(&a).contains("\"meta\""), "{args:?}");
    }
    let with_meta = invwalk(&["simulate", "--m", "6", "--n", "20", "--trials", "500", "--seed", "5"]);
    assert!(stdout(&with_meta).contains("\"meta\""));
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("invwalk-out-{}.txt", std::process::id()));
    let o = invwalk(&["gf", "--m", "2", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(written.starts_with("(2*t + t^2) / "), "{written}");
}
