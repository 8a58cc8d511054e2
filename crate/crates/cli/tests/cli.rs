//! Command-level tests: exit codes, schema gating, CSV shape, output
//! determinism and document round-tripping.

use std::path::PathBuf;
use std::process::{Command, Output};

use irnn_cli::document::ModelDocument;

fn irnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("irnn-test-{}-{}", std::process::id(), name));
    p
}

#[test]
fn check_example1_passes_with_constants() {
    let out = irnn(&["check", "example1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("k1 = 0.50015"));
    assert!(text.contains("lambda = 9.6420613523337"));
    assert!(text.contains("alpha1 = 0.176642688779700"));
    // H3 ≈ 0.9032, H4 ≈ 0.8963, H5 ≈ 0.4308
    assert!(text.contains("0.9031545"));
    assert!(text.contains("0.8962877"));
    assert!(text.contains("0.4308039"));
    assert!(text.contains("existence-unique  (H1-H3): true"));
}

#[test]
fn check_example1_all_bundle_passes() {
    let out = irnn(&["check", "example1", "--require", "all"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn check_example2_fails_h3_with_exit_2() {
    let out = irnn(&["check", "example2"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("H3"));
    assert!(text.contains("FAIL"));
}

#[test]
fn missing_field_is_schema_error() {
    let doc = tmp_path("missing-a.json");
    // example1 without network.a
    let mut v: serde_json::Value =
        serde_json::from_str(irnn_cli::bundled_document("example1").unwrap()).unwrap();
    v["network"].as_object_mut().unwrap().remove("a");
    std::fs::write(&doc, serde_json::to_string(&v).unwrap()).unwrap();
    let out = irnn(&["check", doc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_file(&doc).ok();
}

#[test]
fn unknown_key_is_schema_error() {
    let doc = tmp_path("unknown-key.json");
    let mut v: serde_json::Value =
        serde_json::from_str(irnn_cli::bundled_document("example1").unwrap()).unwrap();
    v["network"]["extra_knob"] = serde_json::json!(1.0);
    std::fs::write(&doc, serde_json::to_string(&v).unwrap()).unwrap();
    let out = irnn(&["check", doc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("schema violation"), "stderr: {err}");
    std::fs::remove_file(&doc).ok();
}

#[test]
fn unreadable_document_is_input_error() {
    let out = irnn(&["check", "/nonexistent/nowhere.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn equilibrium_example3_prints_solution() {
    let out = irnn(&["equilibrium", "example3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("2.04119088537"), "stdout: {text}");
    assert!(text.contains("condition-A: true"));
}

#[test]
fn simulate_example1_csv_shape() {
    let csv_path = tmp_path("traj.csv");
    let out = irnn(&[
        "simulate",
        "example1",
        "--t-end",
        "5",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x1,x2,tag");
    for t in ["0.5", "1.5", "2.5", "3.5"] {
        let dual: Vec<&&str> = lines
            .iter()
            .filter(|l| l.starts_with(&format!("{t},")))
            .collect();
        assert_eq!(dual.len(), 2, "dual rows at {t}");
        assert!(dual[0].ends_with("impulse-left"));
        assert!(dual[1].ends_with("impulse-right"));
    }
    for t in ["1,", "2,", "3,"] {
        assert!(
            lines.iter().any(|l| l.starts_with(t) && l.ends_with("switch")),
            "switch tag at {t}"
        );
    }
    std::fs::remove_file(&csv_path).ok();
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let p1 = tmp_path("det1.csv");
    let p2 = tmp_path("det2.csv");
    for p in [&p1, &p2] {
        let out = irnn(&[
            "simulate",
            "example2",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&p1).unwrap();
    let b = std::fs::read(&p2).unwrap();
    assert_eq!(a, b);
    std::fs::remove_file(&p1).ok();
    std::fs::remove_file(&p2).ok();
}

#[test]
fn periodic_without_omega_is_input_error() {
    let doc = tmp_path("no-omega.json");
    let mut v: serde_json::Value =
        serde_json::from_str(irnn_cli::bundled_document("example1").unwrap()).unwrap();
    v["time"].as_object_mut().unwrap().remove("omega");
    // prefix must stand on its own without the periodic extension
    v["time"]["theta"] = serde_json::json!([0.0, 1.0, 2.0]);
    v["time"]["tau"] = serde_json::json!([0.5, 1.5]);
    std::fs::write(&doc, serde_json::to_string(&v).unwrap()).unwrap();
    let out = irnn(&["periodic", doc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("omega-required"), "stderr: {err}");
    std::fs::remove_file(&doc).ok();
}

#[test]
fn periodic_csv_uses_trajectory_schema() {
    let p = tmp_path("phi.csv");
    let out = irnn(&["periodic", "example1", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&p).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x1,x2,tag");
    let dual: Vec<&&str> = lines.iter().filter(|l| l.starts_with("0.5,")).collect();
    assert_eq!(dual.len(), 2);
    assert!(dual[0].ends_with("impulse-left") && dual[1].ends_with("impulse-right"));
    assert!(lines.last().unwrap().starts_with("1,"));
    std::fs::remove_file(&p).ok();
}

#[test]
fn stability_example3_summary() {
    let report = tmp_path("stab.json");
    let out = irnn(&[
        "stability",
        "example3",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("decay bound: 0 violations"));
    assert!(text.contains("lambda inequality: 0 violations"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["lambda_checked"], serde_json::json!(true));
    std::fs::remove_file(&report).ok();
}

#[test]
fn document_round_trip_is_identity() {
    for name in ["example1", "example2", "example3"] {
        let text = irnn_cli::bundled_document(name).unwrap();
        let doc = ModelDocument::parse(text).unwrap();
        let canon = doc.to_canonical_json();
        let doc2 = ModelDocument::parse(&canon).unwrap();
        // canonical form is a fixed point of parse ∘ serialize
        assert_eq!(canon, doc2.to_canonical_json());
        // and the parsed models agree bitwise on every derived constant
        let m1 = doc.build().unwrap();
        let m2 = doc2.build().unwrap();
        let c1 = irnn_core::hypotheses::derive_constants(&m1.spec, &m1.ts, &m1.imp);
        let c2 = irnn_core::hypotheses::derive_constants(&m2.spec, &m2.ts, &m2.imp);
        assert_eq!(c1.k1.to_bits(), c2.k1.to_bits());
        assert_eq!(c1.h3_quantity.to_bits(), c2.h3_quantity.to_bits());
        assert_eq!(c1.h4_quantity.to_bits(), c2.h4_quantity.to_bits());
    }
}

#[test]
fn bundled_documents_match_library_reference_systems() {
    use irnn_core::examples;
    let built = ModelDocument::parse(irnn_cli::bundled_document("example1").unwrap())
        .unwrap()
        .build()
        .unwrap();
    let (spec, ts, imp) = examples::periodic_example();
    let a = irnn_core::hypotheses::derive_constants(&built.spec, &built.ts, &built.imp);
    let b = irnn_core::hypotheses::derive_constants(&spec, &ts, &imp);
    assert_eq!(a.k1.to_bits(), b.k1.to_bits());
    assert_eq!(a.k2.to_bits(), b.k2.to_bits());
    assert_eq!(a.h4_quantity.to_bits(), b.h4_quantity.to_bits());
    assert_eq!(a.ell.to_bits(), b.ell.to_bits());

    let built = ModelDocument::parse(irnn_cli::bundled_document("example3").unwrap())
        .unwrap()
        .build()
        .unwrap();
    let (spec3, ts3, imp3) = examples::equilibrium_example();
    let a = irnn_core::hypotheses::derive_constants(&built.spec, &built.ts, &built.imp);
    let b = irnn_core::hypotheses::derive_constants(&spec3, &ts3, &imp3);
    assert_eq!(a.h3_quantity.to_bits(), b.h3_quantity.to_bits());
    assert_eq!(a.k3.to_bits(), b.k3.to_bits());
}
