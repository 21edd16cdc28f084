use std::path::{Path, PathBuf};

use treehom_cli::commands::{self, Input};
use treehom_cli::{CliError, EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, EXIT_REJECTED};
use treehom_core::DecideOptions;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn eval_prints_exact_values() {
    let out = commands::eval(Some(&fixture("final_example.wtah")), None, "f(g(a),g(a))").unwrap();
    assert_eq!(out.stdout, "3\n");
    let out = commands::eval(None, Some(&fixture("hom_image.wta")), "psi(gamma(alpha),alpha)").unwrap();
    assert_eq!(out.stdout, "2\n");
    let err = commands::eval(Some(&fixture("first_ex.wtah")), None, "f(a)").unwrap_err();
    assert!(matches!(err, CliError::BadTree { .. }));
    assert_eq!(err.exit_code(), EXIT_ERROR);
}

#[test]
fn wrong_file_kinds_and_mismatches() {
    let err = commands::decide(&fixture("first_ex.wtah"), &fixture("hom_image.hom"), None, &DecideOptions::default())
        .unwrap_err();
    assert!(matches!(err, CliError::WrongKind { expected: "wtg", found: "wtah", .. }));
    let err =
        commands::decide(&fixture("fin.wta"), &fixture("tetris.hom"), None, &DecideOptions::default()).unwrap_err();
    assert!(matches!(err, CliError::AlphabetMismatch(_)), "{err}");
    let err = commands::eval(Some(Path::new("/nonexistent/x.wtah")), None, "a").unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
}

#[test]
fn parse_errors_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.wta", "wtg A over Q { states q; rule a -> ; }");
    let err = commands::eval(None, Some(&bad), "a").unwrap_err();
    assert!(err.to_string().starts_with(bad.to_str().unwrap()), "{err}");
    assert_eq!(err.exit_code(), EXIT_ERROR);
}

#[test]
fn erasing_homomorphisms_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "e.hom", "hom e : S -> D { alpha -> a; gamma -> x1; psi -> f(x1,x2); }");
    let out = commands::decide(&fixture("hom_image.wta"), &h, None, &DecideOptions::default()).unwrap();
    assert_eq!(out.code, EXIT_REJECTED);
    assert!(out.stdout.starts_with("RESULT: REJECTED\n"));
}

#[test]
fn linearizing_a_nonregular_image_reports_the_witness() {
    let out = commands::linearize(Input::Automaton(&fixture("first_ex.wtah")), 1000).unwrap();
    assert_eq!(out.code, EXIT_NEGATIVE);
    assert!(out.stdout.contains("witness: f(a,g(a,g(a,a)),g(a,g(a,a)))"));
    let out = commands::linearize(Input::Image { wta: &fixture("hom_image.wta"), hom: &fixture("relabel.hom") }, 1000)
        .unwrap();
    assert_eq!(out.code, EXIT_OK);
}

#[test]
fn non_tetris_free_image_fails_hat_preconditions() {
    let err = commands::ldp(Input::Automaton(&fixture("final_example.wtah"))).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_REJECTED);
}

#[test]
fn decide_writes_report_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let result =
        commands::decide(&fixture("fin.wta"), &fixture("fin.hom"), Some(&out), &DecideOptions::default()).unwrap();
    assert_eq!(result.code, EXIT_OK);
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report, result.stdout);
    assert!(report.contains("\n[summary]\n") && report.contains("linearize.rules=2\n"));
    let cert = treehom_core::parse_wtg(&std::fs::read_to_string(out.join("certificate.wtg")).unwrap()).unwrap();
    assert_eq!(cert.rules().len(), 2);
}
