use std::path::PathBuf;
use std::process::{Command, Output};

const EXE: &str = env!("CARGO_BIN_EXE_qmibf");

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qmibf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn qmibf(args: &[&str]) -> Output {
    Command::new(EXE).args(args).output().expect("binary runs")
}

fn field(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().find(|l| l.starts_with(&format!("{key} = "))).expect("field present");
    line.split(" = ").nth(1).unwrap().parse().unwrap()
}

#[test]
fn scalar_fixture_achieves_two() {
    let out = qmibf(&[
        "solve",
        "--r-hat",
        &fixture("scalar_r_hat.txt"),
        "--rs-hat",
        &fixture("scalar_rs_hat.txt"),
        "--gamma",
        "0.5",
        "--eps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((field(&out, "achieved_value") - 2.0).abs() < 1e-6);
    assert!((field(&out, "relaxation_value") - 2.0).abs() < 1e-6);
}

#[test]
fn tiny_eps_matches_pencil_eigenvalue() {
    use qmi_beamforming::beamformer::optimal_sinr;
    use qmi_beamforming::HermitianMatrix;
    let r_hat: HermitianMatrix = std::fs::read_to_string(fixture("small_r_hat.txt")).unwrap().parse().unwrap();
    let rs: HermitianMatrix = std::fs::read_to_string(fixture("small_rs_hat.txt")).unwrap().parse().unwrap();
    let (best, _) = optimal_sinr(&rs, &r_hat.add_identity(0.25)).unwrap();
    let out = qmibf(&[
        "solve",
        "--r-hat",
        &fixture("small_r_hat.txt"),
        "--rs-hat",
        &fixture("small_rs_hat.txt"),
        "--gamma",
        "0.25",
        "--eps",
        "1e-8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!((field(&out, "achieved_value") - best).abs() <= 1e-6 * best);
}

#[test]
fn malformed_matrix_is_a_parse_error() {
    let out = qmibf(&[
        "solve",
        "--r-hat",
        &fixture("malformed.txt"),
        "--rs-hat",
        &fixture("scalar_rs_hat.txt"),
        "--gamma",
        "0.5",
        "--eps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn dimension_mismatch_is_an_input_error() {
    let out = qmibf(&[
        "solve",
        "--r-hat",
        &fixture("small_r_hat.txt"),
        "--rs-hat",
        &fixture("scalar_rs_hat.txt"),
        "--gamma",
        "0.5",
        "--eps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_then_certify() {
    let sol = scratch("solve.sol");
    let out = qmibf(&[
        "solve",
        "--r-hat",
        &fixture("small_r_hat.txt"),
        "--rs-hat",
        &fixture("small_rs_hat.txt"),
        "--gamma",
        "0.4",
        "--eps",
        "0.5",
        "--out",
        sol.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let cert = qmibf(&["certify", "--solution", sol.to_str().unwrap()]);
    assert_eq!(cert.status.code(), Some(0), "{}", String::from_utf8_lossy(&cert.stdout));
    assert!(field(&cert, "kkt.gap") <= 1e-6);

    // Scaling the stored W breaks feasibility and complementarity.
    let mut stored = qmi_beamforming::bench::SolutionFile::parse(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    stored.sol.w = stored.sol.w.scale(1.5);
    let broken = scratch("broken.sol");
    std::fs::write(&broken, stored.to_text()).unwrap();
    let bad = qmibf(&["certify", "--solution", broken.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn experiment_rejects_unknown_key_with_line() {
    let cfg = scratch("bad.conf");
    std::fs::write(&cfg, "trials = 2\n# comment\nwobble = 3\n").unwrap();
    let out = qmibf(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn experiment_csv_header_and_rows() {
    let cfg = scratch("tiny.conf");
    std::fs::write(&cfg, "snr_grid = 0\ntrials = 2\nsensors = 4\nmethods = plugin, optimal\n").unwrap();
    let out = qmibf(&["experiment", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), qmi_beamforming::bench::CSV_HEADER);
    assert_eq!(lines.count(), 4);
}
