use std::fs;
use std::path::Path;
use std::process::Command;

fn shimura(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_shimura"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn space_dimensions_and_usage_errors() {
    let (code, out, _) = shimura(&["space", "--k", "6"]);
    assert_eq!(code, 0);
    assert!(out.contains("dimension 1"));
    assert!(out.contains("basis[0] 0 1 0 0 -56 120"));
    let (code, out, _) = shimura(&["space", "--k", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("dimension 0"));
    assert_eq!(shimura(&["space", "--k", "1"]).0, 2);
    assert_eq!(shimura(&["space"]).0, 2);
    assert_eq!(shimura(&["space", "--k", "6", "--bogus"]).0, 2);
}

#[test]
fn verify_passes_and_names_faults() {
    let (code, out, _) = shimura(&["verify", "--k", "6"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("result: PASS"));
    assert!(!out.contains("FAIL"));

    let (code, out, _) = shimura(&["verify", "--k", "6", "--inject-fault", "45"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("FAIL T_{3^2} f = lambda f: first offending index 5"), "{out}");
}

#[test]
fn verify_reports_precision_exhaustion() {
    let (code, out, _) = shimura(&["verify", "--k", "6", "--precision", "400", "--no-expansion"]);
    assert_eq!(code, 3, "{out}");
    assert!(out.contains("PRECISION prime relation"), "{out}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn stats_files_are_deterministic_across_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(a.path(), "1"), (b.path(), "4")] {
        let d = dir.to_str().unwrap();
        for kind in ["prop1", "thm4", "disagree", "joint"] {
            let (code, _, err) = shimura(&["stats", kind, "--x", "3000", "--output", d, "--workers", workers]);
            assert_eq!(code, 0, "{kind}: {err}");
        }
        let (code, _, _) = shimura(&[
            "stats", "thm5", "--x", "3000", "--i1", "-1,0", "--i2", "0,1", "--format", "json", "--output", d,
        ]);
        assert_eq!(code, 0);
    }
    let fa = files(a.path());
    assert_eq!(fa, files(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"thm4_k6_k8_neg.csv"));
    assert!(names.contains(&"joint_k6_k8.dat"));
    assert!(names.contains(&"thm5_k6_k8.json"));
    let csv = String::from_utf8(fa.iter().find(|(n, _)| n == "prop1_k6_disagree.csv").unwrap().1.clone()).unwrap();
    assert!(csv.starts_with("# shimura-report v1"));
    assert_eq!(csv.lines().nth(1), Some("x,count,pi,ratio,reference"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_shimura"))
        .args(["simulate", "--n", "1000", "--seed", "5"])
        .env("SHIMURA_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("simulate_per-prime_seed5.csv").exists());
}

#[test]
fn simulate_reproducible_and_validated() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, w) in [(a.path(), "1"), (b.path(), "3")] {
        let d = d.to_str().unwrap();
        let (code, out, _) = shimura(&["simulate", "--n", "200000", "--seed", "42", "--output", d, "--workers", w]);
        assert_eq!(code, 0);
        assert!(out.contains("rng ChaCha8Rng"));
    }
    assert_eq!(files(a.path()), files(b.path()));
    assert_eq!(shimura(&["simulate", "--n", "0"]).0, 2);
    assert_eq!(shimura(&["simulate", "--shift-mode", "sideways"]).0, 2);
}

#[test]
fn stats_rejects_bad_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(shimura(&["stats", "thm5", "--x", "100", "--i1", "1,0", "--output", d]).0, 2);
    assert_eq!(shimura(&["stats", "thm5", "--x", "100", "--i1", "zero", "--output", d]).0, 2);
    assert_eq!(shimura(&["stats", "prop1", "--k1", "1", "--output", d]).0, 2);
}
